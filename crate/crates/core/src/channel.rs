//! Fading-gain distributions and the expectation kernel behind every
//! log-moment generating function.
//!
//! A block carries `TB · log2(1 + snr · z)` bits, where `z` is the power gain
//! of the block and `TB` the number of symbols per block. All expectations
//! over `z` go through [`log_exp_moment`], which works in the log domain so
//! that exponents of several thousand nats do not overflow.

use std::f64::consts::LN_2;

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature::{self, Tolerance};

/// Distribution of the channel power gain `z` of one block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum FadingModel {
    /// Exponentially distributed power gain (Rayleigh amplitude).
    #[serde(rename = "rayleigh")]
    Rayleigh { mean_power: f64 },
    /// Deterministic gain.
    #[serde(rename = "point")]
    PointMass { gain: f64 },
    /// Finite-support gain distribution.
    #[serde(rename = "discrete")]
    EmpiricalDiscrete { gains: Vec<f64>, probs: Vec<f64> },
}

/// An essential supremum, which may be unbounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    Finite(f64),
    Infinite,
}

impl Bound {
    pub fn finite(self) -> Option<f64> {
        match self {
            Bound::Finite(v) => Some(v),
            Bound::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Bound::Infinite)
    }

    /// `self > other`, treating `Infinite` as larger than every float.
    pub fn exceeds(self, other: f64) -> bool {
        match self {
            Bound::Finite(v) => v > other,
            Bound::Infinite => true,
        }
    }

    fn map(self, f: impl FnOnce(f64) -> f64) -> Bound {
        match self {
            Bound::Finite(v) => Bound::Finite(f(v)),
            Bound::Infinite => Bound::Infinite,
        }
    }
}

impl FadingModel {
    pub fn rayleigh(mean_power: f64) -> Result<Self> {
        let m = FadingModel::Rayleigh { mean_power };
        m.validate()?;
        Ok(m)
    }

    pub fn point_mass(gain: f64) -> Result<Self> {
        let m = FadingModel::PointMass { gain };
        m.validate()?;
        Ok(m)
    }

    pub fn discrete(gains: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        let m = FadingModel::EmpiricalDiscrete { gains, probs };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FadingModel::Rayleigh { mean_power } => {
                if !(mean_power.is_finite() && *mean_power > 0.0) {
                    return Err(invalid(format!(
                        "rayleigh mean_power must be finite and > 0, got {mean_power}"
                    )));
                }
            }
            FadingModel::PointMass { gain } => {
                if !(gain.is_finite() && *gain >= 0.0) {
                    return Err(invalid(format!(
                        "point gain must be finite and >= 0, got {gain}"
                    )));
                }
            }
            FadingModel::EmpiricalDiscrete { gains, probs } => {
                if gains.is_empty() || gains.len() != probs.len() {
                    return Err(invalid(format!(
                        "discrete model needs matching non-empty gains/probs, got {} and {}",
                        gains.len(),
                        probs.len()
                    )));
                }
                if let Some(g) = gains.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
                    return Err(invalid(format!("discrete gain must be finite and >= 0, got {g}")));
                }
                if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
                    return Err(invalid(format!("discrete probability must be >= 0, got {p}")));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(invalid(format!(
                        "discrete probabilities must sum to 1, got {total}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match self {
            FadingModel::Rayleigh { mean_power } => *mean_power,
            FadingModel::PointMass { gain } => *gain,
            FadingModel::EmpiricalDiscrete { gains, probs } => {
                gains.iter().zip(probs).map(|(g, p)| g * p).sum()
            }
        }
    }

    /// Essential infimum of the gain.
    pub fn ess_inf(&self) -> f64 {
        match self {
            FadingModel::Rayleigh { .. } => 0.0,
            FadingModel::PointMass { gain } => *gain,
            FadingModel::EmpiricalDiscrete { gains, probs } => gains
                .iter()
                .zip(probs)
                .filter(|(_, p)| **p > 0.0)
                .map(|(g, _)| *g)
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Essential supremum of the gain.
    pub fn ess_sup(&self) -> Bound {
        match self {
            FadingModel::Rayleigh { .. } => Bound::Infinite,
            FadingModel::PointMass { gain } => Bound::Finite(*gain),
            FadingModel::EmpiricalDiscrete { gains, probs } => Bound::Finite(
                gains
                    .iter()
                    .zip(probs)
                    .filter(|(_, p)| **p > 0.0)
                    .map(|(g, _)| *g)
                    .fold(f64::NEG_INFINITY, f64::max),
            ),
        }
    }
}

/// Prebuilt sampler for repeated draws from one [`FadingModel`].
#[derive(Debug, Clone)]
pub enum GainSampler {
    Exponential(Exp<f64>),
    Constant(f64),
    Discrete {
        gains: Vec<f64>,
        index: WeightedIndex<f64>,
    },
}

impl GainSampler {
    pub fn new(model: &FadingModel) -> Result<Self> {
        model.validate()?;
        Ok(match model {
            FadingModel::Rayleigh { mean_power } => GainSampler::Exponential(
                Exp::new(1.0 / mean_power).map_err(|e| invalid(e.to_string()))?,
            ),
            FadingModel::PointMass { gain } => GainSampler::Constant(*gain),
            FadingModel::EmpiricalDiscrete { gains, probs } => GainSampler::Discrete {
                gains: gains.clone(),
                index: WeightedIndex::new(probs).map_err(|e| invalid(e.to_string()))?,
            },
        })
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            GainSampler::Exponential(exp) => exp.sample(rng),
            GainSampler::Constant(g) => *g,
            GainSampler::Discrete { gains, index } => gains[index.sample(rng)],
        }
    }
}

/// One draw from `model`. Build a [`GainSampler`] for repeated draws.
pub fn sample_gain<R: Rng + ?Sized>(model: &FadingModel, rng: &mut R) -> Result<f64> {
    Ok(GainSampler::new(model)?.sample(rng))
}

/// A single hop: fading distribution and average SNR (linear).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkConfig {
    pub fading: FadingModel,
    pub snr: f64,
}

impl LinkConfig {
    pub fn new(fading: FadingModel, snr: f64) -> Result<Self> {
        let link = LinkConfig { fading, snr };
        link.validate()?;
        Ok(link)
    }

    pub fn validate(&self) -> Result<()> {
        self.fading.validate()?;
        if !(self.snr.is_finite() && self.snr > 0.0) {
            return Err(invalid(format!("snr must be finite and > 0, got {}", self.snr)));
        }
        Ok(())
    }
}

/// Block duration and bandwidth; their product is the number of symbols per block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockConfig {
    pub t_seconds: f64,
    pub b_hz: f64,
}

impl Default for BlockConfig {
    fn default() -> Self {
        BlockConfig {
            t_seconds: 2e-3,
            b_hz: 1e5,
        }
    }
}

impl BlockConfig {
    pub fn new(t_seconds: f64, b_hz: f64) -> Result<Self> {
        let block = BlockConfig { t_seconds, b_hz };
        block.validate()?;
        Ok(block)
    }

    /// Block with the given `TB` product (one-second blocks of `tb` Hz).
    pub fn with_tb(tb: f64) -> Result<Self> {
        BlockConfig::new(1.0, tb)
    }

    pub fn validate(&self) -> Result<()> {
        let tb = self.tb();
        if !(self.t_seconds > 0.0 && self.b_hz > 0.0 && tb.is_finite() && tb > 0.0) {
            return Err(invalid(format!(
                "block needs t_seconds > 0 and b_hz > 0 with finite product, got {} s x {} Hz",
                self.t_seconds, self.b_hz
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn tb(&self) -> f64 {
        self.t_seconds * self.b_hz
    }
}

#[inline]
fn capacity_of(snr: f64, tb: f64, gain: f64) -> f64 {
    tb * (snr * gain).ln_1p() / LN_2
}

/// Bits carried by one block at power gain `gain`.
pub fn per_block_capacity(link: &LinkConfig, block: &BlockConfig, gain: f64) -> f64 {
    capacity_of(link.snr, block.tb(), gain)
}

/// Service rates at the essential infimum and supremum of the gain.
pub fn capacity_support(link: &LinkConfig, block: &BlockConfig) -> (f64, Bound) {
    let tb = block.tb();
    (
        capacity_of(link.snr, tb, link.fading.ess_inf()),
        link.fading.ess_sup().map(|z| capacity_of(link.snr, tb, z)),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Weight {
    One,
    Capacity,
}

impl Weight {
    #[inline]
    fn at(self, capacity: f64) -> f64 {
        match self {
            Weight::One => 1.0,
            Weight::Capacity => capacity,
        }
    }
}

// Log-scaled integrand drops below e^-75 of its peak before the grid stops.
const LOG_CUTOFF: f64 = 75.0;
const MAX_SEGMENTS: usize = 4000;

/// `ln E{ w(c) e^{s c} }` with `c` the per-block capacity.
fn log_weighted_moment(link: &LinkConfig, block: &BlockConfig, s: f64, weight: Weight) -> Result<f64> {
    let tb = block.tb();
    let snr = link.snr;
    let value = match &link.fading {
        FadingModel::PointMass { gain } => {
            let c = capacity_of(snr, tb, *gain);
            weight.at(c).ln() + s * c
        }
        FadingModel::EmpiricalDiscrete { gains, probs } => {
            let terms: Vec<f64> = gains
                .iter()
                .zip(probs)
                .filter(|(_, p)| **p > 0.0)
                .map(|(g, p)| {
                    let c = capacity_of(snr, tb, *g);
                    p.ln() + weight.at(c).ln() + s * c
                })
                .collect();
            log_sum_exp(&terms)
        }
        FadingModel::Rayleigh { mean_power } => {
            log_rayleigh_moment(*mean_power, snr, tb, s, weight)?
        }
    };
    if value.is_nan() || value == f64::INFINITY {
        return Err(Error::DivergentMoment { s });
    }
    Ok(value)
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

fn log_rayleigh_moment(mean: f64, snr: f64, tb: f64, s: f64, weight: Weight) -> Result<f64> {
    // Integrand is w(c(z)) (1 + snr z)^k e^{-z/mean} / mean.
    let k = s * tb / LN_2;
    let phi = |z: f64| k * (snr * z).ln_1p() - z / mean;
    let (mode, width) = if k > 0.0 {
        let mode = (k * mean - 1.0 / snr).max(0.0);
        (mode, k.sqrt() * mean)
    } else {
        (0.0, 0.0)
    };
    let shift = phi(mode);
    if !shift.is_finite() {
        return Err(Error::DivergentMoment { s });
    }

    let mut scale = mean.min(1.0 / snr);
    if k < 0.0 {
        scale = scale.min(1.0 / (snr * -k));
    }
    let mut bps = vec![0.0];
    let mut z = scale * 1e-3;
    let mut steps = 0;
    loop {
        bps.push(z);
        if z > mode && z > mean && phi(z) - shift < -LOG_CUTOFF {
            break;
        }
        z *= 2.0;
        steps += 1;
        if steps > 2000 || !z.is_finite() {
            return Err(Error::NumericalFailure(format!(
                "could not bound rayleigh integrand at s = {s}"
            )));
        }
    }
    let upper = z;
    if mode > 0.0 {
        bps.push(mode);
        for j in 0..6 {
            let off = width * f64::from(1u32 << j);
            for p in [mode - off, mode + off] {
                if p > 0.0 && p < upper {
                    bps.push(p);
                }
            }
        }
    }
    bps.sort_by(f64::total_cmp);
    bps.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1e-300));

    let integral = quadrature::integrate(
        |z| {
            let c = capacity_of(snr, tb, z);
            weight.at(c) * (phi(z) - shift).exp() / mean
        },
        &bps,
        Tolerance::default(),
        MAX_SEGMENTS,
    )?;
    Ok(shift + integral.ln())
}

/// `ln E_z{ e^{s · TB · log2(1 + snr z)} }`, the single-block log-moment.
pub fn log_exp_moment(link: &LinkConfig, block: &BlockConfig, s: f64) -> Result<f64> {
    if s == 0.0 {
        return Ok(0.0);
    }
    log_weighted_moment(link, block, s, Weight::One)
}

/// `E_z{ e^{s · TB · log2(1 + snr z)} }`.
pub fn exp_moment(link: &LinkConfig, block: &BlockConfig, s: f64) -> Result<f64> {
    let v = log_exp_moment(link, block, s)?.exp();
    if !v.is_finite() {
        return Err(Error::DivergentMoment { s });
    }
    Ok(v)
}

/// Mean capacity under the exponentially tilted law `e^{s c} / E{e^{s c}}`.
pub fn tilted_mean(link: &LinkConfig, block: &BlockConfig, s: f64) -> Result<f64> {
    let log_num = log_weighted_moment(link, block, s, Weight::Capacity)?;
    if log_num == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    Ok((log_num - log_exp_moment(link, block, s)?).exp())
}

/// Mean per-block capacity `TB · E{log2(1 + snr z)}`.
pub fn ergodic_rate(link: &LinkConfig, block: &BlockConfig) -> Result<f64> {
    let log_mean = log_weighted_moment(link, block, 0.0, Weight::Capacity)?;
    Ok(log_mean.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tb200() -> BlockConfig {
        BlockConfig::with_tb(200.0).unwrap()
    }

    fn point(g: f64, snr: f64) -> LinkConfig {
        LinkConfig::new(FadingModel::point_mass(g).unwrap(), snr).unwrap()
    }

    fn rayleigh(mean: f64, snr: f64) -> LinkConfig {
        LinkConfig::new(FadingModel::rayleigh(mean).unwrap(), snr).unwrap()
    }

    #[test]
    fn per_block_capacity_examples() {
        let b = tb200();
        assert_eq!(per_block_capacity(&point(1.0, 1.0), &b, 1.0), 200.0);
        assert_eq!(per_block_capacity(&point(1.0, 7.0), &b, 0.0), 0.0);
        assert!((per_block_capacity(&point(1.0, 1.0), &b, 3.0) - 400.0).abs() < 1e-12);
    }

    #[test]
    fn point_mass_moment_is_one_exponential() {
        let v = exp_moment(&point(1.0, 1.0), &tb200(), -0.01).unwrap();
        assert!((v - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn zero_exponent_gives_unity() {
        for link in [point(2.0, 1.0), rayleigh(3.0, 2.0)] {
            assert_eq!(exp_moment(&link, &tb200(), 0.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn ergodic_rates() {
        let b = tb200();
        assert!((ergodic_rate(&point(1.0, 1.0), &b).unwrap() - 200.0).abs() < 1e-12);
        let d = LinkConfig::new(
            FadingModel::discrete(vec![1.0, 3.0], vec![0.5, 0.5]).unwrap(),
            1.0,
        )
        .unwrap();
        assert!((ergodic_rate(&d, &b).unwrap() - 300.0).abs() < 1e-12);
    }

    #[test]
    fn support_bounds() {
        let b = tb200();
        assert_eq!(capacity_support(&rayleigh(1.0, 4.0), &b), (0.0, Bound::Infinite));
        let (lo, hi) = capacity_support(&point(1.0, 1.0), &b);
        assert_eq!((lo, hi), (200.0, Bound::Finite(200.0)));
        let d = LinkConfig::new(
            FadingModel::discrete(vec![1.0, 3.0], vec![0.3, 0.7]).unwrap(),
            1.0,
        )
        .unwrap();
        let (lo, hi) = capacity_support(&d, &b);
        assert!((lo - 200.0).abs() < 1e-12);
        assert!((hi.finite().unwrap() - 400.0).abs() < 1e-12);
    }

    #[test]
    fn zero_probability_atoms_do_not_widen_support() {
        let m = FadingModel::discrete(vec![0.0, 2.0, 9.0], vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(m.ess_inf(), 2.0);
        assert_eq!(m.ess_sup(), Bound::Finite(2.0));
    }

    #[test]
    fn invalid_models_are_rejected() {
        assert!(FadingModel::rayleigh(0.0).is_err());
        assert!(FadingModel::rayleigh(f64::NAN).is_err());
        assert!(FadingModel::point_mass(-1.0).is_err());
        assert!(FadingModel::discrete(vec![1.0], vec![0.9]).is_err());
        assert!(FadingModel::discrete(vec![1.0, 2.0], vec![1.0]).is_err());
        assert!(FadingModel::discrete(vec![-1.0, 2.0], vec![0.5, 0.5]).is_err());
        assert!(LinkConfig::new(FadingModel::PointMass { gain: 1.0 }, 0.0).is_err());
        assert!(BlockConfig::new(0.0, 1.0).is_err());
    }

    #[test]
    fn large_exponents_stay_finite_in_log_domain() {
        let link = rayleigh(625.0, 1.0);
        let b = tb200();
        for s in [-50.0, -1.0, 1.0, 50.0] {
            let v = log_exp_moment(&link, &b, s).unwrap();
            assert!(v.is_finite(), "s = {s}: {v}");
        }
        assert!(matches!(
            exp_moment(&link, &b, 50.0),
            Err(Error::DivergentMoment { .. })
        ));
    }

    #[test]
    fn sampler_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert_eq!(sample_gain(&FadingModel::PointMass { gain: 2.0 }, &mut rng).unwrap(), 2.0);

        let n = 1_000_000;
        let mu = 2.5;
        let s = GainSampler::new(&FadingModel::rayleigh(mu).unwrap()).unwrap();
        let mean = (0..n).map(|_| s.sample(&mut rng)).sum::<f64>() / n as f64;
        // Exponential standard deviation equals its mean.
        assert!((mean - mu).abs() < 3.0 * mu / (n as f64).sqrt());

        let s = GainSampler::new(&FadingModel::discrete(vec![1.0, 3.0], vec![0.25, 0.75]).unwrap())
            .unwrap();
        let freq = (0..n).filter(|_| s.sample(&mut rng) == 3.0).count() as f64 / n as f64;
        let se = (0.75f64 * 0.25 / n as f64).sqrt();
        assert!((freq - 0.75).abs() < 3.0 * se);
    }

    #[test]
    fn fading_serde_tags() {
        let m: FadingModel = toml::from_str("kind = \"rayleigh\"\nmean_power = 16.0").unwrap();
        assert_eq!(m, FadingModel::Rayleigh { mean_power: 16.0 });
        let m: FadingModel = toml::from_str("kind = \"point\"\ngain = 1.0").unwrap();
        assert_eq!(m, FadingModel::PointMass { gain: 1.0 });
        let m: FadingModel =
            toml::from_str("kind = \"discrete\"\ngains = [1.0, 3.0]\nprobs = [0.5, 0.5]").unwrap();
        assert!(matches!(m, FadingModel::EmpiricalDiscrete { .. }));
    }
}
