//! File formats: ASCII PLY point clouds, 16-bit PGM depth, 8-bit PGM
//! masks, raw float depth ("DPTH"), and PPM color.

pub mod dpth;
pub mod pgm;
pub mod ply;
pub mod ppm;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed {format}: {detail}")]
    Malformed {
        format: &'static str,
        detail: String,
    },
    #[error("{0}")]
    Unrepresentable(String),
}

impl FormatError {
    fn malformed(format: &'static str, detail: impl Into<String>) -> Self {
        FormatError::Malformed {
            format,
            detail: detail.into(),
        }
    }
}

/// Reads whitespace-separated header tokens from Netpbm-style formats,
/// skipping `#` comments.
fn read_pnm_token(r: &mut impl std::io::Read, format: &'static str) -> Result<String, FormatError> {
    let mut token = String::new();
    let mut in_comment = false;
    loop {
        let mut byte = [0u8; 1];
        let n = r.read(&mut byte)?;
        if n == 0 {
            if token.is_empty() {
                return Err(FormatError::malformed(format, "unexpected end of header"));
            }
            return Ok(token);
        }
        let c = byte[0] as char;
        if in_comment {
            if c == '\n' {
                in_comment = false;
            }
            continue;
        }
        if c == '#' {
            in_comment = true;
            continue;
        }
        if c.is_ascii_whitespace() {
            if token.is_empty() {
                continue;
            }
            return Ok(token);
        }
        token.push(c);
    }
}
