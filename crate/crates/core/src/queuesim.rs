//! Discrete-time fluid simulation of the source and relay buffers, tail
//! exponent fitting, and rate validation against target QoS exponents.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::capacity::CapacityResult;
use crate::channel::GainSampler;
use crate::error::{invalid, Error, Result};
use crate::lmgf::{DuplexMode, SystemConfig};
use crate::par::{self, Execution};

pub const MIN_BLOCKS: u64 = 10_000;
/// Relative slack on simulated exponents.
pub const DEFAULT_EPS: f64 = 0.15;
/// Fraction of seeds that must agree for a verdict.
pub const VERDICT_FRACTION: f64 = 0.8;
/// Half-duplex share used when the analytic share is only a supremum.
pub const TAU_BACKOFF: f64 = 1e-6;

const FIT_P_MIN: f64 = 1e-4;
const FIT_P_MAX: f64 = 1e-1;
const MIN_FIT_POINTS: usize = 3;
const MIN_R_SQUARED: f64 = 0.98;
/// Below this occupancy probability a queue counts as empty.
const EMPTY_QUEUE_P: f64 = 1e-4;
const GRID_POINTS: usize = 8;
const GRID_HI_QUANTILE: f64 = 0.9999;

const STREAM_LINK1: u64 = 1;
const STREAM_LINK2: u64 = 2;
const STREAM_PILOT1: u64 = 3;
const STREAM_PILOT2: u64 = 4;

/// Overflow thresholds in bits, one grid per queue.
#[derive(Debug, Clone, PartialEq)]
pub struct QmaxGrids {
    pub source: Vec<f64>,
    pub relay: Vec<f64>,
}

impl QmaxGrids {
    pub fn shared(grid: Vec<f64>) -> Self {
        QmaxGrids {
            source: grid.clone(),
            relay: grid,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, g) in [("source", &self.source), ("relay", &self.relay)] {
            if g.is_empty() {
                return Err(invalid(format!("{name} qmax grid is empty")));
            }
            if !(g[0] > 0.0 && g.windows(2).all(|w| w[0] < w[1]) && g.iter().all(|q| q.is_finite())) {
                return Err(invalid(format!(
                    "{name} qmax grid must be positive and strictly increasing"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub system: SystemConfig,
    /// Source airtime share; required in half duplex, ignored otherwise.
    pub tau: Option<f64>,
    /// Constant arrivals, bits per block.
    pub arrival_rate: f64,
    pub num_blocks: u64,
    pub seed: u64,
    pub qmax_grid: QmaxGrids,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        if self.num_blocks < MIN_BLOCKS {
            return Err(invalid(format!(
                "num_blocks must be at least {MIN_BLOCKS}, got {}",
                self.num_blocks
            )));
        }
        if !(self.arrival_rate.is_finite() && self.arrival_rate >= 0.0) {
            return Err(invalid(format!(
                "arrival rate must be finite and >= 0, got {}",
                self.arrival_rate
            )));
        }
        shares(&self.system, self.tau)?;
        self.qmax_grid.validate()
    }
}

fn shares(cfg: &SystemConfig, tau: Option<f64>) -> Result<(f64, f64)> {
    match cfg.mode {
        DuplexMode::FullDuplex => Ok((1.0, 1.0)),
        DuplexMode::HalfDuplex => match tau {
            Some(t) if (0.0..=1.0).contains(&t) => Ok((t, 1.0 - t)),
            Some(t) => Err(invalid(format!("time share must lie in [0, 1], got {t}"))),
            None => Err(invalid("half-duplex simulation needs a time share")),
        },
    }
}

/// Per-block service capacities of both hops.
struct ServiceDraws {
    s1: GainSampler,
    s2: GainSampler,
    rng1: ChaCha8Rng,
    rng2: ChaCha8Rng,
    k1: f64,
    k2: f64,
    snr1: f64,
    snr2: f64,
}

impl ServiceDraws {
    fn new(cfg: &SystemConfig, tau: Option<f64>, seed: u64, streams: (u64, u64)) -> Result<Self> {
        let (share1, share2) = shares(cfg, tau)?;
        let tb = cfg.block.tb();
        let mut rng1 = ChaCha8Rng::seed_from_u64(seed);
        rng1.set_stream(streams.0);
        let mut rng2 = ChaCha8Rng::seed_from_u64(seed);
        rng2.set_stream(streams.1);
        Ok(ServiceDraws {
            s1: GainSampler::new(&cfg.link1.fading)?,
            s2: GainSampler::new(&cfg.link2.fading)?,
            rng1,
            rng2,
            k1: share1 * tb / std::f64::consts::LN_2,
            k2: share2 * tb / std::f64::consts::LN_2,
            snr1: cfg.link1.snr,
            snr2: cfg.link2.snr,
        })
    }

    #[inline]
    fn next(&mut self) -> (f64, f64) {
        let z1 = self.s1.sample(&mut self.rng1);
        let z2 = self.s2.sample(&mut self.rng2);
        (
            self.k1 * (self.snr1 * z1).ln_1p(),
            self.k2 * (self.snr2 * z2).ln_1p(),
        )
    }
}

/// Source and relay buffers with same-block forwarding.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TandemQueue {
    pub source: f64,
    pub relay: f64,
}

impl TandemQueue {
    /// Advances one block; returns bits served by each hop.
    #[inline]
    pub fn step(&mut self, arrival: f64, c1: f64, c2: f64) -> (f64, f64) {
        let backlog = self.source + arrival;
        let served1 = backlog.min(c1);
        self.source = backlog - served1;
        let relayed = self.relay + served1;
        let served2 = relayed.min(c2);
        self.relay = relayed - served2;
        (served1, served2)
    }
}

/// Counts for one queue over the measured blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueStats {
    /// Blocks with occupancy strictly above each threshold.
    pub exceed_counts: Vec<u64>,
    pub nonempty_blocks: u64,
    pub mean_len: f64,
    pub final_len: f64,
    /// Mean bits offered to the queue per block.
    pub mean_arrival: f64,
    /// Mean service capacity per block.
    pub mean_capacity: f64,
}

impl QueueStats {
    pub fn nonempty_fraction(&self, blocks: u64) -> f64 {
        self.nonempty_blocks as f64 / blocks as f64
    }

    /// Offered load meets or exceeds service capacity.
    pub fn unstable(&self) -> bool {
        self.mean_arrival >= self.mean_capacity
    }
}

/// Totals over the whole run, warm-up included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowTotals {
    pub arrived: f64,
    pub served1: f64,
    pub served2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    pub source: QueueStats,
    pub relay: QueueStats,
    /// Blocks counted after warm-up.
    pub effective_blocks: u64,
    pub warmup_blocks: u64,
    pub totals: FlowTotals,
    pub final_state: TandemQueue,
}

pub fn warmup_blocks(num_blocks: u64) -> u64 {
    (num_blocks / 20).max(1_000).min(num_blocks / 2)
}

struct Tally {
    hist: Vec<u64>,
    nonempty: u64,
    len_sum: f64,
    arrival_sum: f64,
    capacity_sum: f64,
}

impl Tally {
    fn new(grid: &[f64]) -> Self {
        Tally {
            hist: vec![0; grid.len() + 1],
            nonempty: 0,
            len_sum: 0.0,
            arrival_sum: 0.0,
            capacity_sum: 0.0,
        }
    }

    #[inline]
    fn record(&mut self, grid: &[f64], q: f64, arrival: f64, capacity: f64) {
        // Number of thresholds strictly below q.
        self.hist[grid.partition_point(|&t| t < q)] += 1;
        self.nonempty += u64::from(q > 0.0);
        self.len_sum += q;
        self.arrival_sum += arrival;
        self.capacity_sum += capacity;
    }

    fn finish(self, n: u64, final_len: f64) -> QueueStats {
        let k = self.hist.len() - 1;
        let mut exceed_counts = vec![0; k];
        let mut acc = 0;
        for i in (0..k).rev() {
            acc += self.hist[i + 1];
            exceed_counts[i] = acc;
        }
        let n = n as f64;
        QueueStats {
            exceed_counts,
            nonempty_blocks: self.nonempty,
            mean_len: self.len_sum / n,
            final_len,
            mean_arrival: self.arrival_sum / n,
            mean_capacity: self.capacity_sum / n,
        }
    }
}

/// Runs the tandem queue for `num_blocks` blocks. Deterministic in `seed`.
pub fn simulate_tandem(sim: &SimConfig) -> Result<SimOutcome> {
    sim.validate()?;
    let mut draws = ServiceDraws::new(&sim.system, sim.tau, sim.seed, (STREAM_LINK1, STREAM_LINK2))?;
    let warmup = warmup_blocks(sim.num_blocks);
    let (gs, gr) = (&sim.qmax_grid.source[..], &sim.qmax_grid.relay[..]);
    let mut src = Tally::new(gs);
    let mut rel = Tally::new(gr);
    let mut q = TandemQueue::default();
    let mut totals = FlowTotals {
        arrived: 0.0,
        served1: 0.0,
        served2: 0.0,
    };
    let r = sim.arrival_rate;
    for i in 0..sim.num_blocks {
        let (c1, c2) = draws.next();
        let (s1, s2) = q.step(r, c1, c2);
        totals.arrived += r;
        totals.served1 += s1;
        totals.served2 += s2;
        if i >= warmup {
            src.record(gs, q.source, r, c1);
            rel.record(gr, q.relay, s1, c2);
        }
    }
    let n = sim.num_blocks - warmup;
    Ok(SimOutcome {
        source: src.finish(n, q.source),
        relay: rel.finish(n, q.relay),
        effective_blocks: n,
        warmup_blocks: warmup,
        totals,
        final_state: q,
    })
}

/// Occupancy samples (source, relay) after warm-up, from pilot streams
/// independent of the main run.
pub fn pilot_samples(
    system: &SystemConfig,
    tau: Option<f64>,
    arrival_rate: f64,
    num_blocks: u64,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut draws = ServiceDraws::new(system, tau, seed, (STREAM_PILOT1, STREAM_PILOT2))?;
    let warmup = warmup_blocks(num_blocks);
    let n = (num_blocks - warmup) as usize;
    let (mut qs, mut qr) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let mut q = TandemQueue::default();
    for i in 0..num_blocks {
        let (c1, c2) = draws.next();
        q.step(arrival_rate, c1, c2);
        if i >= warmup {
            qs.push(q.source);
            qr.push(q.relay);
        }
    }
    Ok((qs, qr))
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let idx = ((sorted.len() - 1) as f64 * p).round() as usize;
    sorted[idx.min(sorted.len() - 1)]
}

/// Log-spaced thresholds from the 90th to the 99.99th percentile. A queue
/// that is empty in more than 90% of blocks starts instead at the 90th
/// percentile of its occupied samples, keeping the grid out of the
/// busy-period bulk.
pub fn auto_grid(mut samples: Vec<f64>) -> Vec<f64> {
    let fallback = || logspace(1.0, 1e3, GRID_POINTS);
    if samples.is_empty() {
        return fallback();
    }
    samples.sort_by(f64::total_cmp);
    let first_busy = samples.partition_point(|&q| q <= 0.0);
    if first_busy == samples.len() {
        return fallback();
    }
    let mut lo = quantile(&samples, 0.9);
    if lo <= 0.0 {
        lo = quantile(&samples[first_busy..], 0.9);
    }
    let mut hi = quantile(&samples, GRID_HI_QUANTILE);
    if hi <= lo {
        hi = samples[samples.len() - 1];
    }
    if hi <= lo {
        hi = 2.0 * lo;
    }
    logspace(lo, hi, GRID_POINTS)
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Pilot-based grids for both queues; the pilot is a tenth of the run,
/// between 10^5 and 10^6 blocks.
pub fn auto_grids(
    system: &SystemConfig,
    tau: Option<f64>,
    arrival_rate: f64,
    num_blocks: u64,
    seed: u64,
) -> Result<QmaxGrids> {
    let pilot = (num_blocks / 10).clamp(num_blocks.min(100_000), 1_000_000);
    let (qs, qr) = pilot_samples(system, tau, arrival_rate, pilot, seed)?;
    Ok(QmaxGrids {
        source: auto_grid(qs),
        relay: auto_grid(qr),
    })
}

/// Least-squares fit of `ln P(Q > q)` against `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct TailEstimate {
    /// Per bit; minus the decay exponent.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub exceed_counts: Vec<u64>,
    /// Thresholds whose exceedance probability fell in the fit window.
    pub points_used: usize,
    pub usable: bool,
}

impl TailEstimate {
    pub fn exponent(&self) -> f64 {
        -self.slope
    }
}

/// Fits thresholds whose exceedance probability lies in `[1e-4, 1e-1]`.
pub fn estimate_tail_exponent(
    counts: &[u64],
    qmax_grid: &[f64],
    num_effective_blocks: u64,
) -> Result<TailEstimate> {
    if counts.len() != qmax_grid.len() {
        return Err(invalid("counts and qmax grid differ in length"));
    }
    let n = num_effective_blocks as f64;
    let pts: Vec<(f64, f64)> = counts
        .iter()
        .zip(qmax_grid)
        .filter_map(|(&c, &q)| {
            let p = c as f64 / n;
            (c > 0 && (FIT_P_MIN..=FIT_P_MAX).contains(&p)).then(|| (q, p.ln()))
        })
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientTail { usable: pts.len() });
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::InsufficientTail { usable: 1 });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    Ok(TailEstimate {
        slope,
        intercept,
        r_squared,
        exceed_counts: counts.to_vec(),
        points_used: pts.len(),
        usable: r_squared >= MIN_R_SQUARED,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum QueueFinding {
    /// Occupied in fewer than 1e-4 of blocks.
    Empty,
    Unstable,
    Fitted(TailEstimate),
    InsufficientTail { usable: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueueCheck {
    pub target: f64,
    pub finding: QueueFinding,
    /// Conclusively decays at least as fast as `target * (1 - eps)`.
    pub meets: bool,
    /// Conclusively decays slower, or is unstable.
    pub misses: bool,
}

impl QueueCheck {
    fn assess(stats: &QueueStats, grid: &[f64], blocks: u64, target: f64, eps: f64) -> Self {
        let floor = target * (1.0 - eps);
        let (finding, meets, misses) = if stats.unstable() {
            (QueueFinding::Unstable, false, true)
        } else if stats.nonempty_fraction(blocks) < EMPTY_QUEUE_P {
            (QueueFinding::Empty, true, false)
        } else {
            match estimate_tail_exponent(&stats.exceed_counts, grid, blocks) {
                Ok(t) => {
                    let (ok, bad) = (t.usable && t.exponent() >= floor, t.usable && t.exponent() < floor);
                    (QueueFinding::Fitted(t), ok, bad)
                }
                Err(Error::InsufficientTail { usable }) => {
                    (QueueFinding::InsufficientTail { usable }, false, false)
                }
                Err(_) => (QueueFinding::InsufficientTail { usable: 0 }, false, false),
            }
        };
        QueueCheck {
            target,
            finding,
            meets,
            misses,
        }
    }

    pub fn exponent(&self) -> Option<f64> {
        match &self.finding {
            QueueFinding::Fitted(t) => Some(t.exponent()),
            _ => None,
        }
    }
}

/// One seed at one arrival rate.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRun {
    pub seed: u64,
    pub rate: f64,
    pub source: QueueCheck,
    pub relay: QueueCheck,
    pub grids: QmaxGrids,
}

impl RateRun {
    pub fn both_meet(&self) -> bool {
        self.source.meets && self.relay.meets
    }

    pub fn any_misses(&self) -> bool {
        self.source.misses || self.relay.misses
    }
}

#[derive(Debug, Clone)]
pub struct ValidationBudget {
    pub num_blocks: u64,
    pub seeds: Vec<u64>,
    pub eps: f64,
    pub execution: Execution,
}

impl ValidationBudget {
    pub fn new(num_blocks: u64, seeds: Vec<u64>) -> Self {
        ValidationBudget {
            num_blocks,
            seeds,
            eps: DEFAULT_EPS,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub capacity: f64,
    pub margin: f64,
    pub eps: f64,
    pub tau: Option<f64>,
    pub lower_rate: f64,
    pub upper_rate: f64,
    pub lower: Vec<RateRun>,
    pub upper: Vec<RateRun>,
    pub lower_passes: usize,
    pub upper_passes: usize,
    pub pass: bool,
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn required_seeds(&self) -> usize {
        required(self.lower.len())
    }

    /// Failure attributable to tails too thin to fit at the lower rate.
    pub fn insufficient_tail(&self) -> bool {
        !self.pass
            && self.lower.iter().any(|r| {
                [&r.source, &r.relay]
                    .iter()
                    .any(|c| matches!(c.finding, QueueFinding::InsufficientTail { .. }))
            })
    }
}

fn required(seeds: usize) -> usize {
    (VERDICT_FRACTION * seeds as f64).ceil() as usize
}

/// Simulates at `(1 - margin)` and `(1 + margin)` times the capacity. Passes
/// when enough seeds meet both targets below and miss at least one above.
pub fn validate_rate(
    cfg: &SystemConfig,
    capacity: &CapacityResult,
    margin: f64,
    budget: &ValidationBudget,
) -> Result<ValidationReport> {
    if !(margin > 0.0 && margin < 1.0) {
        return Err(invalid(format!("margin must lie in (0, 1), got {margin}")));
    }
    if budget.seeds.is_empty() {
        return Err(invalid("at least one seed is required"));
    }
    if !(0.0..1.0).contains(&budget.eps) {
        return Err(invalid(format!("eps must lie in [0, 1), got {}", budget.eps)));
    }
    let mut notes = Vec::new();
    let tau = match cfg.mode {
        DuplexMode::FullDuplex => None,
        DuplexMode::HalfDuplex => {
            let t = capacity
                .tau
                .ok_or_else(|| invalid("half-duplex capacity carries no time share"))?;
            if capacity.supremum {
                notes.push(format!("time share backed off from {t} to {}", t - TAU_BACKOFF));
                Some(t - TAU_BACKOFF)
            } else {
                Some(t)
            }
        }
    };
    let lower_rate = (1.0 - margin) * capacity.rate;
    let upper_rate = (1.0 + margin) * capacity.rate;
    let jobs: Vec<(f64, u64)> = [lower_rate, upper_rate]
        .iter()
        .flat_map(|&r| budget.seeds.iter().map(move |&s| (r, s)))
        .collect();
    let runs = par::map_with(budget.execution, &jobs, |&(rate, seed)| {
        run_one(cfg, tau, rate, seed, budget.num_blocks, budget.eps)
    });
    let mut runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let upper = runs.split_off(budget.seeds.len());
    let lower = runs;

    let lower_passes = lower.iter().filter(|r| r.both_meet()).count();
    let upper_passes = upper.iter().filter(|r| r.any_misses()).count();
    let need = required(budget.seeds.len());
    if lower.iter().any(|r| matches!(r.source.finding, QueueFinding::Empty) && matches!(r.relay.finding, QueueFinding::Empty)) {
        notes.push("both queues empty at the lower rate".to_string());
    }
    Ok(ValidationReport {
        capacity: capacity.rate,
        margin,
        eps: budget.eps,
        tau,
        lower_rate,
        upper_rate,
        lower,
        upper,
        lower_passes,
        upper_passes,
        pass: lower_passes >= need && upper_passes >= need,
        notes,
    })
}

fn run_one(
    cfg: &SystemConfig,
    tau: Option<f64>,
    rate: f64,
    seed: u64,
    num_blocks: u64,
    eps: f64,
) -> Result<RateRun> {
    let grids = auto_grids(cfg, tau, rate, num_blocks, seed)?;
    let sim = SimConfig {
        system: cfg.clone(),
        tau,
        arrival_rate: rate,
        num_blocks,
        seed,
        qmax_grid: grids.clone(),
    };
    let out = simulate_tandem(&sim)?;
    let n = out.effective_blocks;
    Ok(RateRun {
        seed,
        rate,
        source: QueueCheck::assess(&out.source, &grids.source, n, cfg.theta1, eps),
        relay: QueueCheck::assess(&out.relay, &grids.relay, n, cfg.theta2, eps),
        grids,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{BlockConfig, FadingModel, LinkConfig};

    fn point_cfg(g1: f64, g2: f64) -> SystemConfig {
        // TB chosen so that a unit gain at SNR 1 carries 200 bits.
        let link = |g| LinkConfig::new(FadingModel::point_mass(g).unwrap(), 1.0).unwrap();
        SystemConfig::new(
            link(g1),
            link(g2),
            BlockConfig::with_tb(200.0).unwrap(),
            0.01,
            0.01,
            DuplexMode::FullDuplex,
        )
        .unwrap()
    }

    #[test]
    fn step_forwards_within_block() {
        let mut q = TandemQueue::default();
        assert_eq!(q.step(150.0, 100.0, 200.0), (100.0, 100.0));
        assert_eq!(q, TandemQueue { source: 50.0, relay: 0.0 });
        assert_eq!(q.step(0.0, 100.0, 20.0), (50.0, 20.0));
        assert_eq!(q, TandemQueue { source: 0.0, relay: 30.0 });
    }

    #[test]
    fn constant_service_keeps_queues_empty() {
        let sim = SimConfig {
            system: point_cfg(1.0, 1.0),
            tau: None,
            arrival_rate: 150.0,
            num_blocks: 20_000,
            seed: 7,
            qmax_grid: QmaxGrids::shared(vec![1.0, 10.0, 100.0]),
        };
        let out = simulate_tandem(&sim).unwrap();
        assert_eq!(out.source.exceed_counts, vec![0, 0, 0]);
        assert_eq!(out.relay.exceed_counts, vec![0, 0, 0]);
        assert_eq!(out.final_state, TandemQueue::default());
    }

    #[test]
    fn exceedance_counts_are_cumulative() {
        let grid = [1.0, 2.0, 3.0];
        let mut t = Tally::new(&grid);
        for q in [0.0, 1.5, 2.0, 2.5, 9.0] {
            t.record(&grid, q, 0.0, 0.0);
        }
        let s = t.finish(5, 0.0);
        assert_eq!(s.exceed_counts, vec![4, 2, 1]);
        assert_eq!(s.nonempty_blocks, 4);
    }

    #[test]
    fn exact_exponential_fit() {
        let grid: Vec<f64> = (1..=8).map(|i| 25.0 * i as f64).collect();
        let n = 1_000_000_000u64;
        let counts: Vec<u64> = grid
            .iter()
            .map(|q| ((-0.02 * q).exp() * n as f64).round() as u64)
            .collect();
        let t = estimate_tail_exponent(&counts, &grid, n).unwrap();
        assert!((t.slope + 0.02).abs() < 1e-8, "{}", t.slope);
        assert!((t.r_squared - 1.0).abs() < 1e-12);
        assert!(t.usable);
    }

    #[test]
    fn zero_counts_are_insufficient() {
        let grid = [1.0, 2.0, 3.0, 4.0];
        assert!(matches!(
            estimate_tail_exponent(&[0, 0, 0, 0], &grid, 100_000),
            Err(Error::InsufficientTail { usable: 0 })
        ));
    }

    #[test]
    fn rejects_short_runs_and_bad_grids() {
        let mut sim = SimConfig {
            system: point_cfg(1.0, 1.0),
            tau: None,
            arrival_rate: 1.0,
            num_blocks: 1_000,
            seed: 0,
            qmax_grid: QmaxGrids::shared(vec![1.0]),
        };
        assert!(simulate_tandem(&sim).is_err());
        sim.num_blocks = MIN_BLOCKS;
        sim.qmax_grid = QmaxGrids::shared(vec![2.0, 1.0]);
        assert!(simulate_tandem(&sim).is_err());
    }

    #[test]
    fn auto_grid_spans_tail() {
        let samples: Vec<f64> = (0..100_000).map(|i| i as f64).collect();
        let g = auto_grid(samples);
        assert_eq!(g.len(), GRID_POINTS);
        assert!((g[0] - 90_000.0).abs() < 2.0);
        assert!((g[7] - 99_990.0).abs() < 2.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn sparse_queue_grid_starts_in_occupied_tail() {
        let samples: Vec<f64> = (0..100_000).map(|i| if i % 50 == 0 { (i % 977) as f64 + 1.0 } else { 0.0 }).collect();
        let g = auto_grid(samples);
        assert!(g[0] > 0.0);
    }
}
