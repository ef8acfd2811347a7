//! Float helpers that `core` does not provide without `std`.

use core::f64::consts::PI;

#[inline]
pub fn sqrt(v: f64) -> f64 {
    libm::sqrt(v)
}

#[inline]
pub fn sin(v: f64) -> f64 {
    libm::sin(v)
}

#[inline]
pub fn cos(v: f64) -> f64 {
    libm::cos(v)
}

#[inline]
pub fn asin(v: f64) -> f64 {
    libm::asin(v)
}

#[inline]
pub fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

#[inline]
pub fn round(v: f64) -> f64 {
    libm::round(v)
}

#[inline]
pub fn floor(v: f64) -> f64 {
    libm::floor(v)
}

#[inline]
pub fn ceil(v: f64) -> f64 {
    libm::ceil(v)
}

/// Wraps an angle into `(-π, π]`.
pub fn normalize_angle(theta: f64) -> f64 {
    if theta > -PI && theta <= PI {
        return theta;
    }
    let two_pi = 2.0 * PI;
    let mut t = theta - two_pi * floor((theta + PI) / two_pi);
    // floor puts t in [-π, π); map the lower end onto π
    if t <= -PI {
        t += two_pi;
    }
    if t > PI {
        t -= two_pi;
    }
    t
}

/// Signed shortest angular difference `to - from`, in `(-π, π]`.
pub fn angle_delta(from: f64, to: f64) -> f64 {
    normalize_angle(to - from)
}

/// SplitMix64 step, used to fan one seed out into independent sub-seeds.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_keeps_pi_and_maps_minus_pi() {
        assert_eq!(normalize_angle(PI), PI);
        assert!((normalize_angle(-PI) - PI).abs() < 1e-12);
        assert!((normalize_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((normalize_angle(2.5 * PI) - 0.5 * PI).abs() < 1e-12);
        assert!((normalize_angle(-2.5 * PI) + 0.5 * PI).abs() < 1e-12);
        assert_eq!(normalize_angle(0.3), 0.3);
    }

    #[test]
    fn angle_delta_takes_short_way() {
        assert!((angle_delta(3.0, -3.0) - (2.0 * PI - 6.0)).abs() < 1e-12);
    }
}
