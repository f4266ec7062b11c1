//! Channel moments checked against oracles that share no code with the
//! library quadrature: exponential-integral closed forms, a geometric-panel
//! Simpson rule, exact finite sums, and Monte Carlo.

use effcap::channel::{
    ergodic_rate, exp_moment, log_exp_moment, tilted_mean, BlockConfig, FadingModel, GainSampler,
    LinkConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Exponential integral E1 via its series (x < 1) or Lentz continued fraction.
fn e1(x: f64) -> f64 {
    if x < 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            term *= -x / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.abs() < 1e-18 {
                break;
            }
        }
        -EULER_GAMMA - x.ln() - sum
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let a = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

fn rayleigh(mean: f64, snr: f64) -> LinkConfig {
    LinkConfig::new(FadingModel::rayleigh(mean).unwrap(), snr).unwrap()
}

/// ln E[(1 + a z)^k], z ~ Exp(mean mu), by Simpson's rule on geometric panels.
fn simpson_log_moment(a: f64, mu: f64, k: f64) -> f64 {
    let log_f = |t: f64| k * (a * mu * t).ln_1p() - t;
    // Panels [0, w], [w, 2w], [2w, 4w], ... up to far past the peak.
    let peak = (k - 1.0 / (a * mu)).max(0.0);
    let end = peak + 80.0 + 20.0 * k.abs().sqrt();
    let mut edges = vec![0.0];
    let mut w = 1e-6 / (1.0 + a * mu * k.abs());
    while *edges.last().unwrap() < end {
        let last = *edges.last().unwrap();
        edges.push((last + w).min(end));
        w *= 1.5;
    }
    let shift = edges.iter().map(|&t| log_f(t)).fold(f64::NEG_INFINITY, f64::max).max(log_f(peak));
    let mut total = 0.0;
    for e in edges.windows(2) {
        let n = 400;
        let h = (e[1] - e[0]) / n as f64;
        let mut s = 0.0;
        for i in 0..=n {
            let wt = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            s += wt * (log_f(e[0] + h * i as f64) - shift).exp();
        }
        total += s * h / 3.0;
    }
    total.ln() + shift
}

#[test]
fn ergodic_rate_matches_exponential_integral() {
    let block = BlockConfig::default();
    for (mu, snr) in [(1.0f64, 1.0f64), (16.0, 1.0), (16.0, 10.0), (0.5, 100.0), (625.0, 1.0)] {
        let b: f64 = 1.0 / (snr * mu);
        let exact = block.tb() * b.exp() * e1(b) / std::f64::consts::LN_2;
        let got = ergodic_rate(&rayleigh(mu, snr), &block).unwrap();
        assert!(((got - exact) / exact).abs() < 1e-9, "mu {mu} snr {snr}: {got} vs {exact}");
    }
}

#[test]
fn frozen_reference_moment() {
    // Unit-mean Rayleigh, SNR 1, TB = 200: E[exp(-0.01 c)].
    let m = exp_moment(&rayleigh(1.0, 1.0), &BlockConfig::with_tb(200.0).unwrap(), -0.01).unwrap();
    assert!((m - 0.307_635_527_097_933).abs() < 1e-12, "{m}");
}

#[test]
fn log_moment_matches_simpson_oracle() {
    let block = BlockConfig::default();
    let tb = block.tb();
    for (mu, snr) in [(1.0, 1.0), (16.0, 10.0), (1.0, 100.0)] {
        for s in [-0.5, -0.05, -0.01, -0.001, 0.001, 0.003] {
            let k = s * tb / std::f64::consts::LN_2;
            let oracle = simpson_log_moment(snr, mu, k);
            let got = log_exp_moment(&rayleigh(mu, snr), &block, s).unwrap();
            let tol = 1e-8 * oracle.abs().max(1.0);
            assert!((got - oracle).abs() < tol, "mu {mu} snr {snr} s {s}: {got} vs {oracle}");
        }
    }
}

#[test]
fn discrete_moments_are_exact_sums() {
    let gains = vec![0.2, 1.0, 3.5];
    let probs = vec![0.3, 0.5, 0.2];
    let link = LinkConfig::new(FadingModel::discrete(gains.clone(), probs.clone()).unwrap(), 2.0).unwrap();
    let block = BlockConfig::with_tb(50.0).unwrap();
    let c: Vec<f64> = gains.iter().map(|g| 50.0 * (1.0 + 2.0 * g).log2()).collect();
    for s in [-1.0, -0.1, 0.0, 0.02, 0.2] {
        let m: f64 = c.iter().zip(&probs).map(|(c, p)| p * (s * c).exp()).sum();
        let got = log_exp_moment(&link, &block, s).unwrap();
        assert!((got - m.ln()).abs() < 1e-12, "s {s}: {got} vs {}", m.ln());
        let tilted: f64 = c.iter().zip(&probs).map(|(c, p)| p * c * (s * c).exp()).sum::<f64>() / m;
        let got = tilted_mean(&link, &block, s).unwrap();
        assert!((got - tilted).abs() < 1e-10 * tilted, "s {s}: {got} vs {tilted}");
    }
}

#[test]
fn tilted_mean_is_log_moment_derivative() {
    let link = rayleigh(16.0, 10.0);
    let block = BlockConfig::default();
    for s in [-0.02, -0.005, 0.0, 0.002] {
        let h = 1e-7;
        let fd = (log_exp_moment(&link, &block, s + h).unwrap() - log_exp_moment(&link, &block, s - h).unwrap())
            / (2.0 * h);
        let got = tilted_mean(&link, &block, s).unwrap();
        assert!(((got - fd) / got).abs() < 1e-5, "s {s}: {got} vs {fd}");
    }
}

#[test]
fn monte_carlo_agrees_at_moderate_exponents() {
    // 2e6 samples; the acceptance suite repeats this at 1e7.
    let link = rayleigh(1.0, 1.0);
    let block = BlockConfig::default();
    let sampler = GainSampler::new(&link.fading).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 2_000_000;
    let caps: Vec<f64> = (0..n)
        .map(|_| 200.0 * (1.0 + sampler.sample(&mut rng)).log2())
        .collect();
    let mean = caps.iter().sum::<f64>() / n as f64;
    for scaled in [-0.1, 0.05] {
        let s = scaled / mean;
        let mc = caps.iter().map(|c| (s * c).exp()).sum::<f64>() / n as f64;
        let q = exp_moment(&link, &block, s).unwrap();
        assert!(((q - mc) / q).abs() < 1e-3, "s {s}: {q} vs {mc}");
    }
}
