//! Globally adaptive Gauss-Kronrod (7/15) integration over a list of panels.
//!
//! The interval with the largest error estimate is bisected until the summed
//! error meets `max(abs, rel * |integral|)`. Error estimates use the QUADPACK
//! scaling of `|K15 - G7|`.

#![allow(clippy::excessive_precision)] // tables at their published precision

use crate::error::{Error, Result};

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

// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
pub(crate) struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 1e-12,
            rel: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);
    let mut kronrod = f_center * WGK[7];
    let mut gauss = f_center * WG[3];
    let mut abs_sum = kronrod.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (f_center - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = kronrod * half;
    let abs_value = abs_sum * half.abs();
    let asc = asc * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if asc != 0.0 && error != 0.0 {
        error = asc * (200.0 * error / asc).powf(1.5).min(1.0);
    }
    let round_off = 50.0 * f64::EPSILON * abs_value;
    if abs_value > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(round_off);
    }
    Segment { a, b, value, error }
}

/// Integrates `f` over `[breakpoints[0], breakpoints[last]]`, seeding one
/// panel per consecutive pair of breakpoints.
pub(crate) fn integrate<F: Fn(f64) -> f64>(
    f: F,
    breakpoints: &[f64],
    tol: Tolerance,
    max_segments: usize,
) -> Result<f64> {
    debug_assert!(breakpoints.windows(2).all(|w| w[0] < w[1]));
    let mut segments: Vec<Segment> = breakpoints
        .windows(2)
        .map(|w| gk15(&f, w[0], w[1]))
        .collect();
    loop {
        let total: f64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        if !total.is_finite() || !error.is_finite() {
            return Err(Error::NumericalFailure(format!(
                "non-finite quadrature sum ({total}, error {error})"
            )));
        }
        if error <= tol.abs.max(tol.rel * total.abs()) {
            return Ok(total);
        }
        if segments.len() >= max_segments {
            return Err(Error::NumericalFailure(format!(
                "quadrature did not converge in {max_segments} segments: value {total}, error {error}"
            )));
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("at least one segment");
        let seg = segments[worst];
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // Interval cannot be split further in floating point.
            segments[worst].error = 0.0;
            continue;
        }
        segments[worst] = gk15(&f, seg.a, mid);
        segments.push(gk15(&f, mid, seg.b));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| x * x * x - x, &[0.0, 2.0], Tolerance::default(), 10).unwrap();
        assert!((v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn exponential_tail_over_panels() {
        let bps: Vec<f64> = (0..=40).map(|i| i as f64).collect();
        let v = integrate(|x| (-x).exp(), &bps, Tolerance::default(), 500).unwrap();
        assert!((v - (1.0 - (-40.0f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn sharp_peak_is_refined() {
        let v = integrate(
            |x| 1.0 / (1e-6 + (x - 0.3).powi(2)),
            &[0.0, 0.3, 1.0],
            Tolerance { abs: 1e-12, rel: 1e-10 },
            2000,
        )
        .unwrap();
        let exact = 1e3 * ((0.7f64 / 1e-3).atan() + (0.3f64 / 1e-3).atan());
        assert!(((v - exact) / exact).abs() < 1e-9, "{v} vs {exact}");
    }

    #[test]
    fn segment_budget_exhaustion_is_reported() {
        let err = integrate(|x| (1.0 / x).sin(), &[1e-9, 1.0], Tolerance::default(), 4);
        assert!(matches!(err, Err(Error::NumericalFailure(_))));
    }
}
