//! Threshold, balance-exponent and time-share solutions against brute-force
//! scans, plus the case structure of the capacity results.

use effcap::capacity::{
    effective_capacity, geometry_to_config, stability_check, upper_bound, RelayGeometry, Stability,
};
use effcap::channel::{BlockConfig, FadingModel, LinkConfig};
use effcap::lmgf::{DuplexMode, Rates, SystemConfig};
use effcap::solver::{
    solve_tau0, solve_tau_prime, solve_tau_star, solve_theta_bar, solve_theta_tilde_star_a,
    solve_theta_tilde_star_b,
};
use effcap::{CaseTag, Error};

fn db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

fn geometry(d: f64, snr2_db: f64, theta1: f64, theta2: f64, mode: DuplexMode) -> SystemConfig {
    let g = RelayGeometry::new(d, 4.0, 1.0, db(snr2_db)).unwrap();
    geometry_to_config(&g, BlockConfig::default(), theta1, theta2, mode).unwrap()
}

/// Independent bisection on a sign change of `f` over `[a, b]`.
fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    assert!(fa.signum() != f(b).signum(), "no sign change on [{a}, {b}]");
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn discrete_fixture(l1: FadingModel, theta2: f64) -> SystemConfig {
    // With TB = 100 and SNR 1, a gain of 2^k - 1 carries 100 k bits.
    let l2 = FadingModel::discrete(vec![2f64.sqrt() - 1.0, 1023.0], vec![0.4, 0.6]).unwrap();
    SystemConfig::new(
        LinkConfig::new(l1, 1.0).unwrap(),
        LinkConfig::new(l2, 1.0).unwrap(),
        BlockConfig::with_tb(100.0).unwrap(),
        0.001,
        theta2,
        DuplexMode::FullDuplex,
    )
    .unwrap()
}

#[test]
fn theta_bar_matches_dense_scan() {
    for (d, snr2) in [(0.5, 3.0), (0.5, 10.0), (0.5, 20.0), (0.6, 10.0), (0.45, 20.0)] {
        let cfg = geometry(d, snr2, 0.01, 0.02, DuplexMode::FullDuplex);
        let r = Rates::full_duplex(&cfg);
        let f0 = r.f(0.0).unwrap();
        let gap = |t: f64| r.f(t).unwrap() - f0;
        // Walk a fine geometric grid past the peak to the first downward crossing.
        let mut t = 1e-5;
        let mut prev = t;
        while gap(t) > 0.0 || t < 1e-4 {
            prev = t;
            t *= 1.001;
            assert!(t < 10.0, "no crossing found");
        }
        let oracle = bisect(gap, prev, t);
        let got = solve_theta_bar(&cfg).unwrap();
        assert!(((got - oracle) / oracle).abs() < 1e-8, "d {d} snr2 {snr2}: {got} vs {oracle}");
    }
}

#[test]
fn theta_bar_increases_with_relay_snr() {
    let bars: Vec<f64> = [3.0, 10.0, 20.0]
        .iter()
        .map(|&s| solve_theta_bar(&geometry(0.5, s, 0.01, 0.02, DuplexMode::FullDuplex)).unwrap())
        .collect();
    assert!(bars[0] < bars[1] && bars[1] < bars[2], "{bars:?}");
}

#[test]
fn balance_exponent_matches_fine_scan() {
    for theta2 in [0.016, 0.03, 0.1, 0.5] {
        let cfg = geometry(0.5, 10.0, 0.01, theta2, DuplexMode::FullDuplex);
        let r = Rates::full_duplex(&cfg);
        let resid = |t: f64| r.g(t).unwrap() - r.h(t, theta2).unwrap();
        let n = 10_000;
        let x = |i: usize| 0.01 + (theta2 - 0.01) * i as f64 / n as f64;
        let i = (1..=n).find(|&i| resid(x(i)).signum() != resid(x(i - 1)).signum()).unwrap();
        let oracle = bisect(resid, x(i - 1), x(i));
        let got = solve_theta_tilde_star_a(&cfg).unwrap();
        assert!((got.x - oracle).abs() < 1e-9, "theta2 {theta2}: {} vs {oracle}", got.x);
        assert_eq!(got.sign_changes, 1);
        let res = effective_capacity(&cfg).unwrap();
        assert_eq!(res.case, CaseTag::FdIIIa);
        assert!((res.rate - r.g(oracle).unwrap()).abs() < 1e-6);
    }
}

#[test]
fn case_iii_b_inverts_source_rate() {
    let l1 = FadingModel::discrete(vec![1.0, 7.0], vec![0.5, 0.5]).unwrap();
    let cfg = discrete_fixture(l1, 0.01);
    let res = effective_capacity(&cfg).unwrap();
    assert_eq!(res.case, CaseTag::FdIIIb);
    let r = Rates::full_duplex(&cfg);
    let ec2 = r.ec_rd(0.01).unwrap();
    let oracle = bisect(|t| r.g(t).unwrap() - ec2, 0.01, 10.0);
    let (got, degenerate) = solve_theta_tilde_star_b(&cfg).unwrap();
    assert!(!degenerate);
    assert!((got - oracle).abs() < 1e-9 * oracle.max(1.0), "{got} vs {oracle}");
    assert!((res.rate - ec2).abs() < 1e-6, "{} vs {ec2}", res.rate);
    assert!(res.theta_tilde.unwrap() > 0.01);
}

#[test]
fn case_iii_c_is_relay_limited() {
    let cfg = discrete_fixture(FadingModel::point_mass(3.0).unwrap(), 0.05);
    let res = effective_capacity(&cfg).unwrap();
    assert_eq!(res.case, CaseTag::FdIIIc);
    let ec2 = Rates::full_duplex(&cfg).ec_rd(0.05).unwrap();
    assert_eq!(res.rate, ec2);
    assert_eq!(res.rate, res.upper_bound);
}

#[test]
fn time_shares_match_bisection() {
    for (snr2, theta2) in [(3.0, 0.001), (10.0, 0.005), (20.0, 0.0001)] {
        let cfg = geometry(0.5, snr2, 0.01, theta2, DuplexMode::HalfDuplex);
        let star = solve_tau_star(&cfg).unwrap();
        let oracle = bisect(
            |t| {
                let r = Rates::with_share(&cfg, t);
                r.ec_sr(0.01).unwrap() - r.ec_rd(theta2).unwrap()
            },
            0.0,
            1.0,
        );
        assert!((star - oracle).abs() < 1e-12, "{star} vs {oracle}");
    }
    for (snr2, theta2) in [(3.0, 0.02), (10.0, 0.05), (20.0, 0.5)] {
        let cfg = geometry(0.5, snr2, 0.01, theta2, DuplexMode::HalfDuplex);
        let prime = solve_tau_prime(&cfg).unwrap();
        let oracle = bisect(
            |t| {
                let r = Rates::with_share(&cfg, t);
                let relay = -(r.lambda_rd(-theta2).unwrap() + r.lambda_sr(theta2 - 0.01).unwrap()) / 0.01;
                r.g(0.01).unwrap() - relay
            },
            0.0,
            1.0,
        );
        assert!((prime - oracle).abs() < 1e-12, "{prime} vs {oracle}");
        // The relay-constrained share never exceeds the capacity-balance share.
        assert!(prime <= solve_tau_star(&cfg).unwrap() + 1e-12);
    }
}

#[test]
fn default_config_attains_the_bound() {
    let cfg = geometry(0.5, 10.0, 0.01, 0.001, DuplexMode::FullDuplex);
    let res = effective_capacity(&cfg).unwrap();
    // theta1 >= theta2 puts the default configuration in the first case.
    assert_eq!(res.case, CaseTag::FdI);
    assert_eq!(res.rate, res.upper_bound);
    let ec1 = Rates::full_duplex(&cfg).ec_sr(0.01).unwrap();
    assert_eq!(res.rate, ec1);
    // The free-exponent threshold lies above theta2, so the second case would agree.
    assert!(res.theta_bar.unwrap() > 0.001);
    assert!((res.rate - 346.654_262_141_825).abs() < 1e-6);
}

#[test]
fn free_region_is_exactly_flat() {
    let base = geometry(0.5, 10.0, 0.01, 0.02, DuplexMode::FullDuplex);
    let bar = solve_theta_bar(&base).unwrap();
    let ec1 = Rates::full_duplex(&base).ec_sr(0.01).unwrap();
    for frac in [0.0, 0.3, 0.9, 0.999] {
        let theta2 = 0.01 + (bar - 0.01) * frac + 1e-9;
        let res = effective_capacity(&base.with_thetas(0.01, theta2)).unwrap();
        assert_eq!(res.case, CaseTag::FdII);
        assert_eq!(res.rate, ec1);
    }
}

#[test]
fn equal_exponents_attain_bound() {
    for snr2 in [3.0, 20.0] {
        let cfg = geometry(0.6, snr2, 0.03, 0.03, DuplexMode::FullDuplex);
        let res = effective_capacity(&cfg).unwrap();
        assert_eq!(res.case, CaseTag::FdI);
        assert_eq!(res.rate, upper_bound(&cfg).unwrap());
    }
}

#[test]
fn same_fading_with_weaker_source_link() {
    let fading = FadingModel::rayleigh(2.0).unwrap();
    for (snr1, snr2, t1, t2) in [(1.0, 2.0, 0.01, 0.001), (3.0, 3.5, 0.05, 0.05), (0.5, 10.0, 0.2, 0.01)] {
        let cfg = SystemConfig::new(
            LinkConfig::new(fading.clone(), snr1).unwrap(),
            LinkConfig::new(fading.clone(), snr2).unwrap(),
            BlockConfig::default(),
            t1,
            t2,
            DuplexMode::FullDuplex,
        )
        .unwrap();
        let res = effective_capacity(&cfg).unwrap();
        assert_eq!(res.rate, Rates::full_duplex(&cfg).ec_sr(t1).unwrap());
    }
}

#[test]
fn identical_point_links_sit_on_the_stability_boundary() {
    let link = LinkConfig::new(FadingModel::point_mass(1.0).unwrap(), 1.0).unwrap();
    let cfg = SystemConfig::new(link.clone(), link, BlockConfig::with_tb(200.0).unwrap(), 0.01, 0.02, DuplexMode::FullDuplex)
        .unwrap();
    assert_eq!(stability_check(&cfg, None).unwrap(), Stability::Boundary);
    assert!(matches!(effective_capacity(&cfg), Err(Error::StabilityBoundary { .. })));
}

#[test]
fn symmetric_half_duplex_splits_evenly() {
    let link = LinkConfig::new(FadingModel::rayleigh(4.0).unwrap(), 2.0).unwrap();
    let cfg = SystemConfig::new(link.clone(), link, BlockConfig::default(), 0.02, 0.02, DuplexMode::HalfDuplex).unwrap();
    assert!((solve_tau_star(&cfg).unwrap() - 0.5).abs() < 1e-12);
    assert!((solve_tau0(&cfg).unwrap() - 0.5).abs() < 1e-15);
    let res = effective_capacity(&cfg).unwrap();
    assert_eq!(res.case, CaseTag::HdI);
    let at_half = Rates::with_share(&cfg, 0.5).ec_sr(0.02).unwrap();
    assert!((res.rate - at_half).abs() < 1e-9);
}

#[test]
fn half_duplex_below_full_duplex_when_relay_is_free() {
    // Holds whenever the full-duplex result is EC1(theta1) or the min-of-hops bound.
    for (d, snr2, t1, t2) in [
        (0.5, 3.0, 0.01, 0.001),
        (0.5, 10.0, 0.01, 0.012),
        (0.7, 20.0, 0.02, 0.02),
        (0.4, 20.0, 0.1, 0.01),
        (0.9, 0.0, 0.05, 0.0001),
    ] {
        let fd = effective_capacity(&geometry(d, snr2, t1, t2, DuplexMode::FullDuplex)).unwrap();
        assert!(matches!(fd.case, CaseTag::FdI | CaseTag::FdII), "{:?}", fd.case);
        let hd = effective_capacity(&geometry(d, snr2, t1, t2, DuplexMode::HalfDuplex)).unwrap();
        assert!(hd.rate <= fd.rate, "d {d}: {} > {}", hd.rate, fd.rate);
    }
}

#[test]
fn half_duplex_can_exceed_full_duplex_for_a_strict_relay() {
    // With theta2 far above theta1 the full-duplex source must run at a much
    // higher exponent to smooth its departures, while the half-duplex share
    // throttles the S-R hop instead. The analytic half-duplex rate is larger.
    let fd = effective_capacity(&geometry(0.7, 20.0, 0.002, 0.3, DuplexMode::FullDuplex)).unwrap();
    let hd = effective_capacity(&geometry(0.7, 20.0, 0.002, 0.3, DuplexMode::HalfDuplex)).unwrap();
    assert_eq!(fd.case, CaseTag::FdIIIa);
    assert!(fd.theta_tilde.unwrap() > 0.28);
    assert_eq!(hd.case, CaseTag::HdII);
    assert!(hd.rate > fd.rate * 1.2, "{} vs {}", hd.rate, fd.rate);
}

#[test]
fn half_duplex_case_ii_uses_relay_share() {
    let cfg = geometry(0.5, 10.0, 0.01, 0.05, DuplexMode::HalfDuplex);
    let res = effective_capacity(&cfg).unwrap();
    assert_eq!(res.case, CaseTag::HdII);
    let prime = solve_tau_prime(&cfg).unwrap();
    assert!(!res.supremum);
    assert!((res.tau.unwrap() - prime).abs() < 1e-15);
    assert!(res.rate < res.upper_bound);
}
