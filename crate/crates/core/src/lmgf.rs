//! Log-moment generating functions of the two service processes and the rate
//! equations built from them.
//!
//! Units: exponents (`theta`) are per bit, rates are bits per block, and
//! log-moments are dimensionless. In half-duplex mode the S-R hop is active for
//! a fraction `tau` of each block and the R-D hop for `1 - tau`; every function
//! here takes that fraction explicitly.
//!
//! Naming follows the roles of the exponents:
//! - `theta_tilde`: decay exponent of the source queue,
//! - `theta_hat`: decay exponent of the relay queue.

use serde::{Deserialize, Serialize};

use crate::channel::{self, BlockConfig, Bound, LinkConfig};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DuplexMode {
    FullDuplex,
    HalfDuplex,
}

/// A complete two-hop problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Source to relay.
    pub link1: LinkConfig,
    /// Relay to destination.
    pub link2: LinkConfig,
    pub block: BlockConfig,
    /// Source QoS exponent, per bit.
    pub theta1: f64,
    /// Relay QoS exponent, per bit.
    pub theta2: f64,
    pub mode: DuplexMode,
}

impl SystemConfig {
    pub fn new(
        link1: LinkConfig,
        link2: LinkConfig,
        block: BlockConfig,
        theta1: f64,
        theta2: f64,
        mode: DuplexMode,
    ) -> Result<Self> {
        let cfg = SystemConfig {
            link1,
            link2,
            block,
            theta1,
            theta2,
            mode,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.link1.validate()?;
        self.link2.validate()?;
        self.block.validate()?;
        for (name, v) in [("theta1", self.theta1), ("theta2", self.theta2)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn with_thetas(&self, theta1: f64, theta2: f64) -> Self {
        SystemConfig {
            theta1,
            theta2,
            ..self.clone()
        }
    }

    pub fn with_mode(&self, mode: DuplexMode) -> Self {
        SystemConfig {
            mode,
            ..self.clone()
        }
    }
}

/// Half-duplex time-sharing fraction for the S-R hop.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct TimeShare(f64);

impl TimeShare {
    pub fn new(tau: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(invalid(format!("time share must lie in [0, 1], got {tau}")));
        }
        Ok(TimeShare(tau))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// The rate functions of one configuration at a fixed airtime split.
///
/// `share1`/`share2` scale the per-block service of the S-R/R-D hops
/// (`1, 1` in full duplex, `tau, 1 - tau` in half duplex).
#[derive(Debug, Clone, Copy)]
pub struct Rates<'a> {
    pub cfg: &'a SystemConfig,
    pub share1: f64,
    pub share2: f64,
}

impl<'a> Rates<'a> {
    pub fn new(cfg: &'a SystemConfig, tau: Option<TimeShare>) -> Result<Self> {
        match (cfg.mode, tau) {
            (DuplexMode::FullDuplex, _) => Ok(Rates::full_duplex(cfg)),
            (DuplexMode::HalfDuplex, Some(t)) => Ok(Rates::with_share(cfg, t.value())),
            (DuplexMode::HalfDuplex, None) => {
                Err(invalid("half-duplex rate functions need a time share"))
            }
        }
    }

    pub fn full_duplex(cfg: &'a SystemConfig) -> Self {
        Rates {
            cfg,
            share1: 1.0,
            share2: 1.0,
        }
    }

    pub fn with_share(cfg: &'a SystemConfig, tau: f64) -> Self {
        Rates {
            cfg,
            share1: tau,
            share2: 1.0 - tau,
        }
    }

    fn theta1(&self) -> f64 {
        self.cfg.theta1
    }

    /// Log-moment of the S-R service: `ln E{e^{theta c1}}`.
    pub fn lambda_sr(&self, theta: f64) -> Result<f64> {
        channel::log_exp_moment(&self.cfg.link1, &self.cfg.block, theta * self.share1)
    }

    /// Log-moment of the R-D service: `ln E{e^{theta c2}}`.
    pub fn lambda_rd(&self, theta: f64) -> Result<f64> {
        channel::log_exp_moment(&self.cfg.link2, &self.cfg.block, theta * self.share2)
    }

    /// Log-moment of the source departure (relay arrival) process for a source
    /// fed at constant rate `rate` whose queue decays with `theta_tilde`.
    pub fn lambda_relay_arrival(&self, theta: f64, rate: f64, theta_tilde: f64) -> Result<f64> {
        if theta <= theta_tilde {
            Ok(rate * theta)
        } else {
            Ok(rate * theta_tilde + self.lambda_sr(theta - theta_tilde)?)
        }
    }

    /// Effective capacity of the S-R hop alone at exponent `theta`.
    pub fn ec_sr(&self, theta: f64) -> Result<f64> {
        Ok(-self.lambda_sr(-theta)? / theta)
    }

    /// Effective capacity of the R-D hop alone at exponent `theta`.
    pub fn ec_rd(&self, theta: f64) -> Result<f64> {
        Ok(-self.lambda_rd(-theta)? / theta)
    }

    /// Arrival rate whose source-queue exponent is `theta_tilde`.
    pub fn g(&self, theta_tilde: f64) -> Result<f64> {
        self.ec_sr(theta_tilde)
    }

    /// Arrival rate for which the relay queue decays with `theta_hat` when the
    /// source queue decays with `theta_tilde`.
    pub fn h(&self, theta_tilde: f64, theta_hat: f64) -> Result<f64> {
        if theta_hat <= theta_tilde {
            self.ec_rd(theta_hat)
        } else {
            Ok(self.h_upper_branch(theta_tilde, theta_hat)?)
        }
    }

    /// The `theta_hat >= theta_tilde` branch of [`Rates::h`].
    fn h_upper_branch(&self, theta_tilde: f64, theta_hat: f64) -> Result<f64> {
        Ok(-(self.lambda_rd(-theta_hat)? + self.lambda_sr(theta_hat - theta_tilde)?) / theta_tilde)
    }

    /// The relay balance function at `theta_tilde = theta1`.
    pub fn f(&self, theta: f64) -> Result<f64> {
        let t1 = self.theta1();
        Ok(-(self.lambda_rd(-theta)? + self.lambda_sr(theta - t1)?) / t1)
    }

    /// Virtual effective capacity of the R-D hop.
    pub fn virtual_ec(&self, theta: f64) -> Result<f64> {
        self.ec_rd(theta)
    }

    /// Virtual effective bandwidth of the S-R hop offset by `theta1`, i.e.
    /// `(1 - theta1/theta) ln E{e^{(theta - theta1) c1}} / (theta - theta1)`.
    /// Zero at `theta = theta1`; `-inf` at `theta = 0`.
    pub fn virtual_eb(&self, theta: f64) -> Result<f64> {
        let t1 = self.theta1();
        if theta == t1 {
            return Ok(0.0);
        }
        if theta == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(self.lambda_sr(theta - t1)? / theta)
    }

    /// Mean service of the S-R hop, bits/block.
    pub fn mean_sr(&self) -> Result<f64> {
        Ok(self.share1 * channel::ergodic_rate(&self.cfg.link1, &self.cfg.block)?)
    }

    /// Mean service of the R-D hop, bits/block.
    pub fn mean_rd(&self) -> Result<f64> {
        Ok(self.share2 * channel::ergodic_rate(&self.cfg.link2, &self.cfg.block)?)
    }

    /// Service range of the S-R hop.
    pub fn support_sr(&self) -> (f64, Bound) {
        let (lo, hi) = channel::capacity_support(&self.cfg.link1, &self.cfg.block);
        let s = self.share1;
        (s * lo, scale_bound(hi, s))
    }

    /// Service range of the R-D hop.
    pub fn support_rd(&self) -> (f64, Bound) {
        let (lo, hi) = channel::capacity_support(&self.cfg.link2, &self.cfg.block);
        let s = self.share2;
        (s * lo, scale_bound(hi, s))
    }

    /// S-R mean service under the tilt `e^{s c1}`, bits/block.
    pub fn tilted_mean_sr(&self, s: f64) -> Result<f64> {
        Ok(self.share1
            * channel::tilted_mean(&self.cfg.link1, &self.cfg.block, s * self.share1)?)
    }

    /// Derivative-sign diagnostic of the relay balance function at the origin:
    /// mean R-D rate minus the tilted S-R mean at exponent `-theta`, per symbol.
    /// Nondecreasing in `theta`.
    pub fn alpha(&self, theta: f64) -> Result<f64> {
        let tb = self.cfg.block.tb();
        Ok((self.mean_rd()? - self.tilted_mean_sr(-theta)?) / tb)
    }

    /// Slope diagnostic of `theta_tilde -> h(theta_tilde, theta2)` below
    /// `theta2`: `dh/d theta_tilde = beta / theta_tilde^2`. Nonincreasing.
    pub fn beta(&self, theta_tilde: f64) -> Result<f64> {
        let t2 = self.cfg.theta2;
        let s = t2 - theta_tilde;
        Ok(theta_tilde * self.tilted_mean_sr(s)? + self.lambda_sr(s)? + self.lambda_rd(-t2)?)
    }

    /// Both branches of `h` at `theta_hat == theta_tilde`; they coincide
    /// analytically.
    #[cfg(debug_assertions)]
    pub(crate) fn h_branch_gap(&self, theta: f64) -> Result<f64> {
        Ok(self.ec_rd(theta)? - self.h_upper_branch(theta, theta)?)
    }
}

fn scale_bound(b: Bound, s: f64) -> Bound {
    match b {
        Bound::Finite(v) => Bound::Finite(s * v),
        // A zero airtime share has zero peak rate even on unbounded support.
        Bound::Infinite if s == 0.0 => Bound::Finite(0.0),
        Bound::Infinite => Bound::Infinite,
    }
}

pub fn lambda_sr(cfg: &SystemConfig, theta: f64, tau: Option<TimeShare>) -> Result<f64> {
    Rates::new(cfg, tau)?.lambda_sr(theta)
}

pub fn lambda_rd(cfg: &SystemConfig, theta: f64, tau: Option<TimeShare>) -> Result<f64> {
    Rates::new(cfg, tau)?.lambda_rd(theta)
}

pub fn lambda_relay_arrival(
    cfg: &SystemConfig,
    theta: f64,
    rate: f64,
    theta_tilde: f64,
    tau: Option<TimeShare>,
) -> Result<f64> {
    if !(rate >= 0.0 && theta >= 0.0 && theta_tilde > 0.0) {
        return Err(invalid(format!(
            "relay arrival log-moment needs rate >= 0, theta >= 0, theta_tilde > 0; got {rate}, {theta}, {theta_tilde}"
        )));
    }
    Rates::new(cfg, tau)?.lambda_relay_arrival(theta, rate, theta_tilde)
}

pub fn g_rate(cfg: &SystemConfig, theta_tilde: f64, tau: Option<TimeShare>) -> Result<f64> {
    positive("theta_tilde", theta_tilde)?;
    Rates::new(cfg, tau)?.g(theta_tilde)
}

pub fn h_rate(
    cfg: &SystemConfig,
    theta_tilde: f64,
    theta_hat: f64,
    tau: Option<TimeShare>,
) -> Result<f64> {
    positive("theta_tilde", theta_tilde)?;
    positive("theta_hat", theta_hat)?;
    let rates = Rates::new(cfg, tau)?;
    #[cfg(debug_assertions)]
    if theta_hat == theta_tilde {
        let gap = rates.h_branch_gap(theta_hat)?;
        let scale = rates.ec_rd(theta_hat)?.abs().max(1.0);
        debug_assert!(gap.abs() <= 1e-10 * scale, "h branches disagree by {gap}");
    }
    rates.h(theta_tilde, theta_hat)
}

pub fn f_func(cfg: &SystemConfig, theta: f64) -> Result<f64> {
    if !(theta >= 0.0) {
        return Err(invalid(format!("f needs theta >= 0, got {theta}")));
    }
    Rates::full_duplex(cfg).f(theta)
}

pub fn virtual_ec(cfg: &SystemConfig, theta: f64) -> Result<f64> {
    positive("theta", theta)?;
    Rates::full_duplex(cfg).virtual_ec(theta)
}

pub fn virtual_eb(cfg: &SystemConfig, theta: f64) -> Result<f64> {
    if !(theta >= 0.0) {
        return Err(invalid(format!("virtual bandwidth needs theta >= 0, got {theta}")));
    }
    Rates::full_duplex(cfg).virtual_eb(theta)
}

pub fn lemma_alpha(cfg: &SystemConfig, theta: f64) -> Result<f64> {
    if !(theta >= 0.0) {
        return Err(invalid(format!("alpha needs theta >= 0, got {theta}")));
    }
    Rates::full_duplex(cfg).alpha(theta)
}

pub fn lemma_beta(cfg: &SystemConfig, theta_tilde: f64) -> Result<f64> {
    if !(theta_tilde > 0.0 && theta_tilde <= cfg.theta2) {
        return Err(invalid(format!(
            "beta needs theta_tilde in (0, theta2], got {theta_tilde}"
        )));
    }
    Rates::full_duplex(cfg).beta(theta_tilde)
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(invalid(format!("{name} must be finite and > 0, got {v}")));
    }
    Ok(())
}
