//! Bracketed scalar root finding and the threshold/time-share searches used by
//! the capacity cases.

use crate::channel::Bound;
use crate::error::{Error, Result};
use crate::lmgf::{Rates, SystemConfig};

/// Absolute tolerance on exponents, per bit.
pub const EXPONENT_TOL: f64 = 1e-10;
/// Absolute tolerance on time-share fractions.
pub const FRACTION_TOL: f64 = 1e-15;
/// Absolute tolerance on rate residuals, bits/block.
pub const RATE_TOL: f64 = 1e-9;
/// Relative band for case-dispatch comparisons.
pub const DISPATCH_BAND: f64 = 1e-9;

const SCAN_POINTS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootWant {
    /// Endpoints must differ in sign.
    AnyRoot,
    /// Leftmost sign change of a uniform scan, then refined.
    SmallestRoot,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootSpec {
    pub lo: f64,
    pub hi: f64,
    pub tol_x: f64,
    pub tol_f: f64,
    pub want: RootWant,
    pub scan_points: usize,
}

/// A root together with scan diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub fx: f64,
    /// Sign changes seen by the scan (1 for `AnyRoot`).
    pub sign_changes: usize,
}

impl RootSpec {
    pub fn new(lo: f64, hi: f64) -> Self {
        RootSpec {
            lo,
            hi,
            tol_x: EXPONENT_TOL,
            tol_f: RATE_TOL,
            want: RootWant::AnyRoot,
            scan_points: SCAN_POINTS,
        }
    }

    pub fn tol_x(mut self, tol: f64) -> Self {
        self.tol_x = tol;
        self
    }

    pub fn tol_f(mut self, tol: f64) -> Self {
        self.tol_f = tol;
        self
    }

    pub fn smallest(mut self) -> Self {
        self.want = RootWant::SmallestRoot;
        self
    }

    pub fn scan_points(mut self, n: usize) -> Self {
        self.scan_points = n;
        self
    }

    pub fn solve<F>(&self, mut f: F) -> Result<Root>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        if !(self.lo < self.hi) || !(self.tol_x > 0.0) || !(self.tol_f > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "root spec needs lo < hi and positive tolerances, got [{}, {}], {}, {}",
                self.lo, self.hi, self.tol_x, self.tol_f
            )));
        }
        match self.want {
            RootWant::AnyRoot => {
                let f_lo = finite(self.lo, f(self.lo)?)?;
                let f_hi = finite(self.hi, f(self.hi)?)?;
                let x = self.refine(&mut f, self.lo, f_lo, self.hi, f_hi)?;
                Ok(Root {
                    x: x.0,
                    fx: x.1,
                    sign_changes: 1,
                })
            }
            RootWant::SmallestRoot => self.scan(&mut f),
        }
    }

    fn scan<F>(&self, f: &mut F) -> Result<Root>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let n = self.scan_points.max(2);
        let step = (self.hi - self.lo) / (n - 1) as f64;
        let at = |i: usize| {
            if i == n - 1 {
                self.hi
            } else {
                self.lo + step * i as f64
            }
        };
        let mut values = Vec::with_capacity(n);
        for i in 0..n {
            values.push(finite(at(i), f(at(i))?)?);
        }
        let mut first = None;
        let mut changes = 0;
        for i in 1..n {
            let (a, b) = (values[i - 1], values[i]);
            let crossed = (a != 0.0 && a.signum() != b.signum()) || b == 0.0;
            if crossed {
                changes += 1;
                first.get_or_insert(i);
            }
        }
        if values[0] == 0.0 {
            return Ok(Root {
                x: self.lo,
                fx: 0.0,
                sign_changes: changes.max(1),
            });
        }
        let Some(i) = first else {
            return Err(Error::NoRootInBracket {
                lo: self.lo,
                hi: self.hi,
                f_lo: values[0],
                f_hi: values[n - 1],
            });
        };
        let (x, fx) = self.refine(f, at(i - 1), values[i - 1], at(i), values[i])?;
        Ok(Root {
            x,
            fx,
            sign_changes: changes,
        })
    }

    /// Bisection with secant steps kept inside the live bracket.
    fn refine<F>(&self, f: &mut F, mut a: f64, mut fa: f64, mut b: f64, mut fb: f64) -> Result<(f64, f64)>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        if fa == 0.0 {
            return Ok((a, fa));
        }
        if fb == 0.0 {
            return Ok((b, fb));
        }
        if fa.signum() == fb.signum() {
            return Err(Error::NoRootInBracket {
                lo: a,
                hi: b,
                f_lo: fa,
                f_hi: fb,
            });
        }
        let mut use_secant = true;
        for _ in 0..400 {
            let width = b - a;
            if width <= self.tol_x {
                break;
            }
            let mut x = 0.5 * (a + b);
            if use_secant {
                let s = b - fb * (b - a) / (fb - fa);
                if s.is_finite() && s > a + 0.1 * width && s < b - 0.1 * width {
                    x = s;
                }
            }
            let fx = finite(x, f(x)?)?;
            if fx.abs() <= self.tol_f {
                return Ok((x, fx));
            }
            if fx.signum() == fa.signum() {
                a = x;
                fa = fx;
            } else {
                b = x;
                fb = fx;
            }
            // Fall back to a plain halving whenever a secant step shrank the
            // bracket by less than half.
            use_secant = (b - a) <= 0.5 * width;
        }
        Ok(if fa.abs() <= fb.abs() { (a, fa) } else { (b, fb) })
    }
}

fn finite(x: f64, fx: f64) -> Result<f64> {
    if fx.is_nan() {
        return Err(Error::NumericalFailure(format!("function is NaN at {x}")));
    }
    Ok(fx)
}

/// Finds the root of a residual known to be continuous on `[lo, hi]`.
pub fn bracketed_root<F>(spec: &RootSpec, f: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    Ok(spec.solve(f)?.x)
}

/// Mean per-block S-R and R-D rates at full airtime.
fn mean_rates(cfg: &SystemConfig) -> Result<(f64, f64)> {
    let r = Rates::full_duplex(cfg);
    Ok((r.mean_sr()?, r.mean_rd()?))
}

/// The positive relay-exponent threshold: the unique `theta > 0` at which the
/// relay balance function `f` returns to its value at zero. Relay exponents up
/// to this threshold cost nothing when the source runs at `theta1`.
pub fn solve_theta_bar(cfg: &SystemConfig) -> Result<f64> {
    let rates = Rates::full_duplex(cfg);
    let (m1, m2) = (rates.mean_sr()?, rates.mean_rd()?);
    if !(m1 < m2) {
        return Err(Error::StabilityViolation {
            source_rate: m1,
            relay_rate: m2,
        });
    }
    let (_, peak1) = rates.support_sr();
    let (floor2, _) = rates.support_rd();
    if !peak1.exceeds(floor2) {
        return Err(Error::SupportDegenerate);
    }
    theta_bar_for(&rates)
}

pub(crate) fn theta_bar_for(rates: &Rates<'_>) -> Result<f64> {
    let t1 = rates.cfg.theta1;
    let f0 = rates.f(0.0)?;
    let scale = f0.abs().max(1.0);
    let residual = |t: f64| -> Result<f64> { Ok(rates.f(t)? - f0) };

    // f is concave with positive slope at 0, so f - f(0) is positive on
    // (0, theta_bar) and negative beyond.
    let (lo, hi) = if residual(t1)? > 0.0 {
        let mut hi = t1.max(1.0);
        let mut tries = 0;
        while residual(hi)? >= 0.0 {
            hi *= 2.0;
            tries += 1;
            if tries > 40 {
                return Err(Error::NumericalFailure(format!(
                    "relay threshold exponent exceeds {hi}"
                )));
            }
        }
        (t1, hi)
    } else {
        let mut lo = t1 * 0.5;
        while residual(lo)? <= 0.0 {
            lo *= 0.5;
            if lo < t1 * 1e-12 {
                return Err(Error::NumericalFailure(
                    "relay balance function never rises above its origin value".into(),
                ));
            }
        }
        (lo, t1)
    };
    let root = RootSpec::new(lo, hi)
        .tol_x(EXPONENT_TOL)
        .tol_f(RATE_TOL * scale)
        .solve(residual)?;
    Ok(root.x)
}

/// Smallest source exponent in `[theta1, theta2]` equating the source rate
/// `g` with the relay rate `h(., theta2)`.
pub fn solve_theta_tilde_star_a(cfg: &SystemConfig) -> Result<Root> {
    theta_tilde_star_a_for(&Rates::full_duplex(cfg))
}

pub(crate) fn theta_tilde_star_a_for(rates: &Rates<'_>) -> Result<Root> {
    let (t1, t2) = (rates.cfg.theta1, rates.cfg.theta2);
    let scale = rates.g(t1)?.abs().max(1.0);
    let residual = |t: f64| -> Result<f64> { Ok(rates.g(t)? - rates.h(t, t2)?) };
    if t2 <= t1 {
        return Err(Error::InvalidParameter(format!(
            "crossing search needs theta1 < theta2, got {t1} and {t2}"
        )));
    }
    RootSpec::new(t1, t2)
        .smallest()
        .tol_x(EXPONENT_TOL)
        .tol_f(RATE_TOL * scale)
        .solve(residual)
}

/// Source exponent `>= theta2` at which the source rate `g` falls to the R-D
/// effective capacity at `theta2`. Returns `(exponent, degenerate)`; the flag
/// is set when `g` is flat and every exponent solves the equation.
pub fn solve_theta_tilde_star_b(cfg: &SystemConfig) -> Result<(f64, bool)> {
    let rates = Rates::full_duplex(cfg);
    let target = rates.ec_rd(cfg.theta2)?;
    invert_g(&rates, target, cfg.theta2)
}

/// Smallest exponent `>= from` with `g(exponent) = target`, using that `g` is
/// nonincreasing.
pub(crate) fn invert_g(rates: &Rates<'_>, target: f64, from: f64) -> Result<(f64, bool)> {
    let scale = target.abs().max(1.0);
    let tol_f = RATE_TOL * scale;
    let g_from = rates.g(from)?;
    if (g_from - target).abs() <= tol_f {
        return Ok((from, flat_g(rates, from, tol_f)?));
    }
    if g_from < target {
        return Err(Error::NoRootInBracket {
            lo: from,
            hi: from,
            f_lo: g_from - target,
            f_hi: g_from - target,
        });
    }
    let mut hi = from * 2.0;
    let mut tries = 0;
    loop {
        let v = rates.g(hi)? - target;
        if v <= 0.0 {
            break;
        }
        hi *= 2.0;
        tries += 1;
        if tries > 60 {
            return Err(Error::NoRootInBracket {
                lo: from,
                hi,
                f_lo: g_from - target,
                f_hi: v,
            });
        }
    }
    let root = RootSpec::new(from, hi)
        .tol_x(EXPONENT_TOL * from.max(1.0))
        .tol_f(tol_f)
        .solve(|t| Ok(rates.g(t)? - target))?;
    Ok((root.x, false))
}

fn flat_g(rates: &Rates<'_>, at: f64, tol_f: f64) -> Result<bool> {
    Ok((rates.g(at * 4.0)? - rates.g(at)?).abs() <= tol_f)
}

/// Largest stable half-duplex time share: mean R-D rate over the sum of both
/// mean rates.
pub fn solve_tau0(cfg: &SystemConfig) -> Result<f64> {
    let (m1, m2) = mean_rates(cfg)?;
    if !(m1 > 0.0 && m2 > 0.0 && m1.is_finite() && m2.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "time-share bound needs positive finite mean rates, got {m1} and {m2}"
        )));
    }
    Ok(m2 / (m1 + m2))
}

/// Time share equating the S-R effective capacity at `theta1` with the R-D
/// effective capacity at `theta2`.
pub fn solve_tau_star(cfg: &SystemConfig) -> Result<f64> {
    let residual = |tau: f64| -> Result<f64> {
        let r = Rates::with_share(cfg, tau);
        Ok(r.ec_sr(cfg.theta1)? - r.ec_rd(cfg.theta2)?)
    };
    solve_time_share(residual, "source/relay effective capacity balance")
}

/// Time share at which the source rate at `theta1` meets the relay rate at
/// `(theta1, theta2)` for a relay more constrained than the source.
pub fn solve_tau_prime(cfg: &SystemConfig) -> Result<f64> {
    let residual = |tau: f64| -> Result<f64> {
        let r = Rates::with_share(cfg, tau);
        let (t1, t2) = (cfg.theta1, cfg.theta2);
        let relay = -(r.lambda_rd(-t2)? + r.lambda_sr(t2 - t1)?) / t1;
        Ok(r.g(t1)? - relay)
    };
    solve_time_share(residual, "source/relay rate balance")
}

fn solve_time_share<F>(mut residual: F, what: &str) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    const GRID: usize = 64;
    let values = (0..GRID)
        .map(|i| residual(i as f64 / (GRID - 1) as f64))
        .collect::<Result<Vec<_>>>()?;
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if let Some(w) = values.windows(2).find(|w| w[1] < w[0] - 1e-9 * scale) {
        return Err(Error::NumericalFailure(format!(
            "{what} residual is not increasing in the time share ({} then {})",
            w[0], w[1]
        )));
    }
    let root = RootSpec::new(0.0, 1.0)
        .tol_x(FRACTION_TOL)
        .tol_f(4.0 * f64::EPSILON * scale)
        .solve(residual)?;
    Ok(root.x)
}

/// Whether the relay can always absorb the source's peak rate without
/// buffering (peak S-R rate at or below the minimum R-D rate).
pub(crate) fn support_degenerate(rates: &Rates<'_>) -> bool {
    let (_, peak1) = rates.support_sr();
    let (floor2, _) = rates.support_rd();
    match peak1 {
        Bound::Infinite => false,
        Bound::Finite(p) => p <= floor2,
    }
}
