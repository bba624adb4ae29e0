//! Globally adaptive Gauss–Kronrod (7/15) quadrature for complex-valued
//! integrands on a finite interval.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::{HseomError, Result, C64};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Tolerances and subdivision limit for [`integrate`].
#[derive(Clone, Copy, Debug)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { abs_tol: 1e-14, rel_tol: 1e-12, max_subdivisions: 4000 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadratureResult {
    pub value: C64,
    pub error_estimate: f64,
    pub subdivisions: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: C64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: FnMut(f64) -> C64>(f: &mut F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += pair * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).norm();
    Segment { a, b, value, error }
}

/// Integrate `f` over `[a, b]`, bisecting the segment with the largest error
/// estimate until the summed estimate meets `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, config: &QuadratureConfig) -> Result<QuadratureResult>
where
    F: FnMut(f64) -> C64,
{
    if a == b {
        return Ok(QuadratureResult { value: C64::new(0.0, 0.0), error_estimate: 0.0, subdivisions: 0 });
    }
    let mut heap = BinaryHeap::new();
    let first = kronrod(&mut f, a, b);
    let mut total = first.value;
    let mut error = first.error;
    heap.push(first);
    let mut subdivisions = 0;
    loop {
        let target = config.abs_tol.max(config.rel_tol * total.norm());
        if error <= target {
            break;
        }
        if subdivisions >= config.max_subdivisions {
            return Err(HseomError::Quadrature { subdivisions, error_estimate: error });
        }
        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Segment cannot be split further in floating point.
            return Err(HseomError::Quadrature { subdivisions, error_estimate: error });
        }
        let left = kronrod(&mut f, worst.a, mid);
        let right = kronrod(&mut f, mid, worst.b);
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        subdivisions += 1;
        // Re-sum periodically so cancellation in the running totals cannot drift.
        if subdivisions % 64 == 0 {
            total = heap.iter().map(|s| s.value).sum();
            error = heap.iter().map(|s| s.error).sum();
        }
    }
    let value = heap.iter().map(|s| s.value).sum();
    let error_estimate = heap.iter().map(|s| s.error).sum();
    Ok(QuadratureResult { value, error_estimate, subdivisions })
}

/// Real-valued convenience wrapper around [`integrate`].
pub fn integrate_real<F>(mut f: F, a: f64, b: f64, config: &QuadratureConfig) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    integrate(|x| C64::new(f(x), 0.0), a, b, config).map(|r| r.value.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| C64::new(x.powi(5) - 3.0 * x * x, x), 0.0, 2.0, &QuadratureConfig::default()).unwrap();
        assert!((r.value.re - (64.0 / 6.0 - 8.0)).abs() < 1e-13);
        assert!((r.value.im - 2.0).abs() < 1e-13);
        assert_eq!(r.subdivisions, 0);
    }

    #[test]
    fn endpoint_square_root() {
        // ∫_0^1 sqrt(1 - x^2) dx = π/4
        let v = integrate_real(|x| (1.0 - x * x).sqrt(), 0.0, 1.0, &QuadratureConfig::default()).unwrap();
        assert!((v - std::f64::consts::FRAC_PI_4).abs() < 1e-11);
    }

    #[test]
    fn oscillatory() {
        let v = integrate(|x| C64::from_polar(1.0, -40.0 * x), 0.0, 1.0, &QuadratureConfig::default()).unwrap();
        let exact = (C64::new(1.0, 0.0) - C64::from_polar(1.0, -40.0)) / C64::new(0.0, 40.0);
        assert!((v.value - exact).norm() < 1e-12);
    }

    #[test]
    fn subdivision_limit_reports_residual() {
        let config = QuadratureConfig { abs_tol: 0.0, rel_tol: 1e-15, max_subdivisions: 3 };
        let err = integrate(|x| C64::new(x.abs().sqrt(), 0.0), -1.0, 1.0, &config).unwrap_err();
        assert!(matches!(err, HseomError::Quadrature { subdivisions: 3, .. }));
    }
}
