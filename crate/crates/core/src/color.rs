use serde::{Deserialize, Serialize};

/// RGB (0..=255 per channel) to HSV with hue in degrees [0, 360), and
/// saturation/value in [0, 1].
pub fn rgb_to_hsv(rgb: [u8; 3]) -> (f64, f64, f64) {
    let r = rgb[0] as f64 / 255.0;
    let g = rgb[1] as f64 / 255.0;
    let b = rgb[2] as f64 / 255.0;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;

    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * (((g - b) / delta).rem_euclid(6.0))
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    let s = if max == 0.0 { 0.0 } else { delta / max };
    (h.rem_euclid(360.0), s, max)
}

/// Inclusive HSV box. A hue interval with `hue_min > hue_max` wraps
/// through 0°, e.g. [300°, 60°] covers magenta through yellow.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct HsvRange {
    pub hue_min_deg: f64,
    pub hue_max_deg: f64,
    pub sat_min: f64,
    pub sat_max: f64,
    pub val_min: f64,
    pub val_max: f64,
}

impl HsvRange {
    /// Band around a single hue, accepting any saturation/value.
    pub fn hue_band(center_deg: f64, half_width_deg: f64) -> Self {
        Self {
            hue_min_deg: (center_deg - half_width_deg).rem_euclid(360.0),
            hue_max_deg: (center_deg + half_width_deg).rem_euclid(360.0),
            sat_min: 0.0,
            sat_max: 1.0,
            val_min: 0.0,
            val_max: 1.0,
        }
    }

    pub fn contains(&self, rgb: [u8; 3]) -> bool {
        let (h, s, v) = rgb_to_hsv(rgb);
        let hue_ok = if self.hue_min_deg <= self.hue_max_deg {
            h >= self.hue_min_deg && h <= self.hue_max_deg
        } else {
            h >= self.hue_min_deg || h <= self.hue_max_deg
        };
        hue_ok
            && s >= self.sat_min
            && s <= self.sat_max
            && v >= self.val_min
            && v <= self.val_max
    }
}

/// Pure-hue RGB at full saturation and value; inverse of the hue channel
/// of [`rgb_to_hsv`] up to 8-bit rounding.
pub fn hsv_to_rgb(h_deg: f64, s: f64, v: f64) -> [u8; 3] {
    let h = h_deg.rem_euclid(360.0);
    let c = v * s;
    let x = c * (1.0 - ((h / 60.0).rem_euclid(2.0) - 1.0).abs());
    let m = v - c;
    let (r, g, b) = match h as u32 / 60 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    [
        ((r + m) * 255.0).round() as u8,
        ((g + m) * 255.0).round() as u8,
        ((b + m) * 255.0).round() as u8,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn primary_hues() {
        assert_relative_eq!(rgb_to_hsv([255, 0, 0]).0, 0.0);
        assert_relative_eq!(rgb_to_hsv([0, 255, 0]).0, 120.0);
        assert_relative_eq!(rgb_to_hsv([0, 0, 255]).0, 240.0);
        assert_relative_eq!(rgb_to_hsv([128, 0, 255]).0, 270.0, epsilon = 1.0);
        assert_relative_eq!(rgb_to_hsv([255, 128, 0]).0, 30.0, epsilon = 1.0);
    }

    #[test]
    fn grays_have_zero_saturation() {
        for g in [0u8, 77, 255] {
            let (_, s, v) = rgb_to_hsv([g, g, g]);
            assert_eq!(s, 0.0);
            assert_relative_eq!(v, g as f64 / 255.0);
        }
    }

    #[test]
    fn hsv_round_trip() {
        for h in (0..360).step_by(17) {
            let rgb = hsv_to_rgb(h as f64, 1.0, 1.0);
            let (h2, s2, v2) = rgb_to_hsv(rgb);
            assert_relative_eq!(h2, h as f64, epsilon = 1.0);
            assert!(s2 > 0.99 && v2 > 0.99);
        }
    }

    #[test]
    fn wrapping_range() {
        let band = HsvRange::hue_band(0.0, 30.0); // [330, 30]
        assert!(band.contains([255, 0, 0])); // hue 0
        assert!(band.contains(hsv_to_rgb(340.0, 1.0, 1.0)));
        assert!(band.contains(hsv_to_rgb(20.0, 1.0, 1.0)));
        assert!(!band.contains([0, 255, 0])); // hue 120
    }

    #[test]
    fn plain_range() {
        let band = HsvRange {
            hue_min_deg: 100.0,
            hue_max_deg: 140.0,
            sat_min: 0.5,
            sat_max: 1.0,
            val_min: 0.2,
            val_max: 1.0,
        };
        assert!(band.contains([0, 255, 0]));
        assert!(!band.contains([255, 0, 0]));
        assert!(!band.contains([230, 255, 230])); // washed out: low saturation
    }
}
