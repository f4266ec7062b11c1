//! Effective capacity of the two-hop link: stability gate, the
//! min-of-hops upper bound, and the full-/half-duplex case analysis.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::channel::{BlockConfig, FadingModel, LinkConfig};
use crate::error::{invalid, Error, Result};
use crate::lmgf::{DuplexMode, Rates, SystemConfig, TimeShare};
use crate::solver::{self, DISPATCH_BAND};

/// Which branch of the case analysis produced a rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseTag {
    /// Source at least as constrained as the relay; the upper bound is attained.
    FdI,
    /// Relay exponent below the free threshold; S-R hop is the bottleneck.
    FdII,
    /// Source and relay queues balance at an exponent in `[theta1, theta2]`.
    FdIIIa,
    /// Source exponent pushed above `theta2` to meet the R-D capacity.
    FdIIIb,
    /// R-D hop is the bottleneck below the minimum S-R rate.
    FdIIIc,
    /// Relay never buffers; S-R effective capacity.
    FdSupportDegenerate,
    HdI,
    HdII,
}

impl CaseTag {
    pub fn as_str(self) -> &'static str {
        match self {
            CaseTag::FdI => "FD-I",
            CaseTag::FdII => "FD-II",
            CaseTag::FdIIIa => "FD-IIIa",
            CaseTag::FdIIIb => "FD-IIIb",
            CaseTag::FdIIIc => "FD-IIIc",
            CaseTag::FdSupportDegenerate => "FD-SupportDegenerate",
            CaseTag::HdI => "HD-I",
            CaseTag::HdII => "HD-II",
        }
    }
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Effective capacity with the internal solutions that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityResult {
    /// Bits per block.
    pub rate: f64,
    pub case: CaseTag,
    pub theta_bar: Option<f64>,
    /// Source-queue decay exponent at `rate`.
    pub theta_tilde: Option<f64>,
    /// Relay-queue decay exponent at `rate`.
    pub theta_hat: Option<f64>,
    pub tau: Option<f64>,
    pub tau0: Option<f64>,
    pub upper_bound: f64,
    /// The defining equation held for every exponent (flat source rate).
    pub degenerate: bool,
    /// `rate` is a supremum approached as the time share tends to `tau0`.
    pub supremum: bool,
    /// Sign changes found while locating the smallest balancing exponent.
    pub crossings: usize,
}

impl CapacityResult {
    fn new(rate: f64, case: CaseTag, upper_bound: f64) -> Self {
        CapacityResult {
            rate,
            case,
            theta_bar: None,
            theta_tilde: None,
            theta_hat: None,
            tau: None,
            tau0: None,
            upper_bound,
            degenerate: false,
            supremum: false,
            crossings: 0,
        }
    }
}

/// Source, relay and destination on a unit line with the relay at `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelayGeometry {
    pub d: f64,
    #[serde(default = "default_alpha")]
    pub path_loss_alpha: f64,
    pub snr1: f64,
    pub snr2: f64,
}

fn default_alpha() -> f64 {
    4.0
}

impl RelayGeometry {
    pub fn new(d: f64, path_loss_alpha: f64, snr1: f64, snr2: f64) -> Result<Self> {
        let g = RelayGeometry {
            d,
            path_loss_alpha,
            snr1,
            snr2,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d > 0.0 && self.d < 1.0) {
            return Err(invalid(format!("relay position d must lie in (0, 1), got {}", self.d)));
        }
        if !(self.path_loss_alpha.is_finite() && self.path_loss_alpha > 0.0) {
            return Err(invalid(format!(
                "path loss exponent must be > 0, got {}",
                self.path_loss_alpha
            )));
        }
        Ok(())
    }

    /// Mean power gains `(1/d^alpha, 1/(1-d)^alpha)`.
    pub fn mean_powers(&self) -> (f64, f64) {
        let a = self.path_loss_alpha;
        (self.d.powf(-a), (1.0 - self.d).powf(-a))
    }

    pub fn with_d(&self, d: f64) -> Self {
        RelayGeometry { d, ..*self }
    }
}

/// Rayleigh links with path-loss means for the given relay placement.
pub fn geometry_to_config(
    geom: &RelayGeometry,
    block: BlockConfig,
    theta1: f64,
    theta2: f64,
    mode: DuplexMode,
) -> Result<SystemConfig> {
    geom.validate()?;
    let (m1, m2) = geom.mean_powers();
    SystemConfig::new(
        LinkConfig::new(FadingModel::rayleigh(m1)?, geom.snr1)?,
        LinkConfig::new(FadingModel::rayleigh(m2)?, geom.snr2)?,
        block,
        theta1,
        theta2,
        mode,
    )
}

/// Relay position at which both hops have equal mean rates; positions above it
/// are stable. Errors when no such position exists in `(0, 1)`.
pub fn min_stable_d(geom: &RelayGeometry, block: BlockConfig) -> Result<f64> {
    let gap = |d: f64| -> Result<f64> {
        let cfg = geometry_to_config(&geom.with_d(d), block, 1.0, 1.0, DuplexMode::FullDuplex)?;
        let r = Rates::full_duplex(&cfg);
        Ok(r.mean_rd()? - r.mean_sr()?)
    };
    solver::RootSpec::new(1e-6, 1.0 - 1e-6)
        .tol_x(1e-13)
        .tol_f(1e-12)
        .solve(gap)
        .map(|r| r.x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Boundary,
    Violation,
}

/// Compares mean S-R and R-D service (airtime-scaled in half duplex).
pub fn stability_check(cfg: &SystemConfig, tau: Option<TimeShare>) -> Result<Stability> {
    let (m1, m2) = scaled_means(cfg, tau)?;
    Ok(classify(m1, m2))
}

fn scaled_means(cfg: &SystemConfig, tau: Option<TimeShare>) -> Result<(f64, f64)> {
    let r = Rates::new(cfg, tau)?;
    Ok((r.mean_sr()?, r.mean_rd()?))
}

fn classify(m1: f64, m2: f64) -> Stability {
    if (m1 - m2).abs() <= DISPATCH_BAND * m1.abs().max(m2.abs()) {
        Stability::Boundary
    } else if m1 < m2 {
        Stability::Stable
    } else {
        Stability::Violation
    }
}

fn require_stable(m1: f64, m2: f64) -> Result<()> {
    match classify(m1, m2) {
        Stability::Stable => Ok(()),
        Stability::Boundary => Err(Error::StabilityBoundary {
            source_rate: m1,
            relay_rate: m2,
        }),
        Stability::Violation => Err(Error::StabilityViolation {
            source_rate: m1,
            relay_rate: m2,
        }),
    }
}

/// Upper bound on supportable arrival rates: the smaller single-hop effective
/// capacity, maximised over the stable time shares in half duplex.
pub fn upper_bound(cfg: &SystemConfig) -> Result<f64> {
    match cfg.mode {
        DuplexMode::FullDuplex => {
            let r = Rates::full_duplex(cfg);
            Ok(r.ec_sr(cfg.theta1)?.min(r.ec_rd(cfg.theta2)?))
        }
        DuplexMode::HalfDuplex => {
            let tau = solver::solve_tau0(cfg)?.min(solver::solve_tau_star(cfg)?);
            Rates::with_share(cfg, tau).ec_sr(cfg.theta1)
        }
    }
}

pub fn effective_capacity(cfg: &SystemConfig) -> Result<CapacityResult> {
    match cfg.mode {
        DuplexMode::FullDuplex => effective_capacity_full_duplex(cfg),
        DuplexMode::HalfDuplex => effective_capacity_half_duplex(cfg),
    }
}

pub fn effective_capacity_full_duplex(cfg: &SystemConfig) -> Result<CapacityResult> {
    cfg.validate()?;
    let rates = Rates::full_duplex(cfg);
    let (t1, t2) = (cfg.theta1, cfg.theta2);
    require_stable(rates.mean_sr()?, rates.mean_rd()?)?;

    let ec1 = rates.ec_sr(t1)?;
    let ec2 = rates.ec_rd(t2)?;
    let bound = ec1.min(ec2);

    if t1 >= t2 * (1.0 - DISPATCH_BAND) {
        let mut out = CapacityResult::new(bound, CaseTag::FdI, bound);
        out.theta_hat = Some(t2);
        // The threshold does not depend on theta2; report it when it exists.
        if !solver::support_degenerate(&rates) {
            out.theta_bar = solver::theta_bar_for(&rates).ok();
        }
        out.theta_tilde = if ec1 <= ec2 {
            Some(t1)
        } else {
            match solver::invert_g(&rates, ec2, t1) {
                Ok((t, degenerate)) => {
                    out.degenerate = degenerate;
                    Some(t)
                }
                // R-D capacity below the minimum S-R rate: the source never queues.
                Err(Error::NoRootInBracket { .. }) => None,
                Err(e) => return Err(e),
            }
        };
        return Ok(out);
    }

    if solver::support_degenerate(&rates) {
        let mut out = CapacityResult::new(ec1, CaseTag::FdSupportDegenerate, bound);
        out.theta_tilde = Some(t1);
        return Ok(out);
    }

    let theta_bar = solver::theta_bar_for(&rates)?;
    if t2 <= theta_bar * (1.0 + DISPATCH_BAND) {
        let mut out = CapacityResult::new(ec1, CaseTag::FdII, bound);
        out.theta_bar = Some(theta_bar);
        out.theta_tilde = Some(t1);
        out.theta_hat = Some(theta_bar);
        return Ok(out);
    }

    let g2 = rates.g(t2)?;
    let mut out = if g2 <= ec2 + DISPATCH_BAND * ec2.abs().max(1.0) {
        let (theta_star, crossings) = match solver::theta_tilde_star_a_for(&rates) {
            Ok(root) => (root.x, root.sign_changes),
            // g(theta2) exceeds h(theta2, theta2) only inside the dispatch band.
            Err(Error::NoRootInBracket { .. }) => (t2, 0),
            Err(e) => return Err(e),
        };
        let mut out = CapacityResult::new(rates.g(theta_star)?, CaseTag::FdIIIa, bound);
        out.theta_tilde = Some(theta_star);
        out.crossings = crossings;
        out
    } else {
        let (min_sr, _) = rates.support_sr();
        if ec2 >= min_sr * (1.0 - DISPATCH_BAND) {
            let (theta_star, degenerate) = solver::invert_g(&rates, ec2, t2)?;
            let mut out = CapacityResult::new(rates.g(theta_star)?, CaseTag::FdIIIb, bound);
            out.theta_tilde = Some(theta_star);
            out.degenerate = degenerate;
            out
        } else {
            CapacityResult::new(ec2, CaseTag::FdIIIc, bound)
        }
    };
    out.theta_bar = Some(theta_bar);
    out.theta_hat = Some(t2);
    // Guard against round-off pushing the rate above the bound.
    out.rate = out.rate.min(bound);
    Ok(out)
}

pub fn effective_capacity_half_duplex(cfg: &SystemConfig) -> Result<CapacityResult> {
    cfg.validate()?;
    let (t1, t2) = (cfg.theta1, cfg.theta2);
    let tau0 = solver::solve_tau0(cfg)?;
    let (case, balance) = if t1 >= t2 {
        (CaseTag::HdI, solver::solve_tau_star(cfg)?)
    } else {
        (CaseTag::HdII, solver::solve_tau_prime(cfg)?)
    };
    let supremum = tau0 <= balance;
    let tau = tau0.min(balance);
    let rate = Rates::with_share(cfg, tau).ec_sr(t1)?;
    let bound = upper_bound(cfg)?;
    let mut out = CapacityResult::new(rate.min(bound), case, bound);
    out.tau = Some(tau);
    out.tau0 = Some(tau0);
    out.supremum = supremum;
    out.theta_tilde = Some(t1);
    out.theta_hat = Some(t2);
    Ok(out)
}
