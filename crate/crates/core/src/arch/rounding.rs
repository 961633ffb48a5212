//! Integerization rules for widths, depths and input geometry.

/// Relative slack absorbed before rounding so that products such as
/// `5 * 2.2` (which is `11.000000000000002` in binary floating point) land
/// on the intended integer.
const SNAP: f64 = 1e-9;

fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= SNAP * x.abs().max(1.0) {
        r
    } else {
        x
    }
}

/// Channel count for `base_width` scaled by `multiplier`, rounded to the
/// nearest multiple of `divisor` (never below `divisor`) and bumped by one
/// `divisor` when rounding lost more than 10% of the requested width.
pub fn round_width(base_width: usize, multiplier: f64, divisor: usize) -> usize {
    debug_assert!(base_width >= 1 && multiplier > 0.0 && divisor >= 1);
    let target = snap(base_width as f64 * multiplier);
    let d = divisor as f64;
    let mut width = (((target + d / 2.0) / d).floor() * d).max(d);
    if width < 0.9 * target {
        width += d;
    }
    width as usize
}

/// Block count for a stage: `ceil(base_repeats * gamma_d)`.
pub fn round_depth(base_repeats: usize, gamma_d: f64) -> usize {
    debug_assert!(base_repeats >= 1 && gamma_d > 0.0);
    let blocks = snap(base_repeats as f64 * gamma_d).ceil() as usize;
    blocks.max(1)
}

/// Round half away from zero.
pub fn nearest_int(x: f64) -> i64 {
    snap(x).round() as i64
}

/// Nearest multiple of `multiple` (half away from zero).
pub fn nearest_multiple(x: f64, multiple: usize) -> usize {
    let m = multiple as f64;
    let q = snap(x / m).round().max(0.0);
    (q * m) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn width_goldens() {
        assert_eq!(round_width(12, 2.0, 8), 24);
        assert_eq!(round_width(12, 2.9, 8), 32);
        assert_eq!(round_width(24, 2.9, 8), 72);
        assert_eq!(round_width(48, 2.9, 8), 136);
        assert_eq!(round_width(96, 2.9, 8), 280);
        assert_eq!(round_width(24, 1.0, 8), 24);
    }

    #[test]
    fn width_never_below_divisor() {
        assert_eq!(round_width(1, 0.01, 8), 8);
        assert_eq!(round_width(12, 0.25, 8), 8);
    }

    #[test]
    fn depth_goldens() {
        assert_eq!(round_depth(5, 2.2), 11);
        assert_eq!(round_depth(3, 2.2), 7);
        assert_eq!(round_depth(1, 2.2), 3);
        assert_eq!(round_depth(2, 2.2), 5);
        assert_eq!(round_depth(1, 5.0), 5);
        assert_eq!(round_depth(2, 1.0), 2);
    }

    #[test]
    fn resolution_rounding() {
        assert_eq!(nearest_multiple(112.0 * 2f64.sqrt(), 8), 160);
        assert_eq!(nearest_multiple(224.0, 8), 224);
        // 112 * 2 * sqrt(2) rounds to 320, not the published 312
        assert_eq!(nearest_multiple(112.0 * 2.0 * 2f64.sqrt(), 8), 320);
        assert_eq!(nearest_multiple(128.0 * 2.0, 8), 256);
        assert_eq!(nearest_multiple(128.0 * 2.0 * 2f64.sqrt(), 8), 360);
    }

    #[test]
    fn nearest_int_rounds_half_up() {
        assert_eq!(nearest_int(0.5), 1);
        assert_eq!(nearest_int(2.5), 3);
        assert_eq!(nearest_int(0.49), 0);
    }

    proptest::proptest! {
        #[test]
        fn width_identity_on_multiples(k in 1usize..64) {
            proptest::prop_assert_eq!(round_width(8 * k, 1.0, 8), 8 * k);
        }

        #[test]
        fn depth_monotone(base in 1usize..8, a in 0.1f64..10.0, b in 0.1f64..10.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            proptest::prop_assert!(round_depth(base, lo) <= round_depth(base, hi));
        }

        #[test]
        fn width_monotone(base in 1usize..200, a in 0.1f64..6.0, b in 0.1f64..6.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            proptest::prop_assert!(round_width(base, lo, 8) <= round_width(base, hi, 8));
        }
    }
}
