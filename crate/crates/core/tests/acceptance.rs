//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits with status 1 when any criterion fails.

mod common;

use std::time::{Duration, Instant};

use cvqkd_core::composable::{
    asymptotic_reference, optimize_coherent, optimize_collective, ComposableParams, EpsilonBudget,
    HolevoReference, DEFAULT_BITS, DEFAULT_P, DEFAULT_XI, TARGET_EPS,
};
use cvqkd_core::estimation::{
    estimator_variances_mdi, estimator_variances_oneway, keyrate_finite_mdi, keyrate_finite_oneway,
    optimize_finite, zscore, EstimationSetup, FiniteBounds,
};
use cvqkd_core::fading::{keyrate_fast_oneway, keyrate_slow_oneway, FadingNodes, UniformFade};
use cvqkd_core::fock::{
    constellation_entropy, displaced_thermal_fock_density, photons_from_excess_noise,
    pureloss_rates, thermal_rates, threshold_discrete, BGrid, Constellation, EveEnsemble,
    FockConfig, FockDensity, C64,
};
use cvqkd_core::gaussian::{
    condition_heterodyne, condition_homodyne, symplectic_eigenvalues, two_mode_spectrum, Quadrature,
};
use cvqkd_core::mdi::{
    cm_ab_given_gamma, cm_ab_given_gamma_circuit, cm_b_given_gamma_alpha,
    cm_b_given_gamma_alpha_circuit, eve_side_entropies, holevo_mdi, keyrate_mdi_optimized,
    MdiAttack,
};
use cvqkd_core::montecarlo::{study_mdi, study_oneway};
use cvqkd_core::oneway::{
    keyrate_infinite_modulation, keyrate_oneway, Detection, Direction, LossyChannel, OneWaySpec,
    Variant,
};
use cvqkd_core::optimize::bisect;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use common::{log_uniform, random_attack, random_cm};

const SEED: u64 = 0x5eed_0001;

fn db_to_tau(db: f64) -> f64 {
    10f64.powf(-db / 10.0)
}

fn tau_to_db(tau: f64) -> f64 {
    -10.0 * tau.log10()
}

/// Collected sub-checks of one criterion.
struct Report {
    checks: Vec<(String, bool)>,
}

impl Report {
    fn new() -> Self {
        Self { checks: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        self.checks.push((what.into(), ok));
    }

    fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.1)
    }
}

fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}

// 1. Infinite-modulation crossings.
fn criterion_1(r: &mut Report) {
    const DB_TOL: f64 = 0.01;
    for v in [Variant::DR_HOM, Variant::DR_HET] {
        let f = |t: f64| keyrate_infinite_modulation(v, t, 1.0).unwrap();
        let root = bisect(f, 0.05, 0.95, 1e-13, 0.0).unwrap();
        let db = tau_to_db(root.x);
        r.check(
            (db - 3.0103).abs() <= DB_TOL,
            format!(
                "{} zero crossing at {db:.4} dB (target 3.0103 ± {DB_TOL})",
                v.name()
            ),
        );
    }
    for v in [Variant::RR_HOM, Variant::RR_HET] {
        let mut min = f64::INFINITY;
        for i in 0..=980 {
            let t = 0.01 + 0.001 * i as f64;
            let t = t.clamp(0.010_000_1, 0.989_999_9);
            min = min.min(keyrate_infinite_modulation(v, t, 1.0).unwrap());
        }
        r.check(
            min > 0.0,
            format!("{} positive on (0.01, 0.99), min {min:.3e}", v.name()),
        );
    }
}

// 2. Closed forms against the generic routes.
fn criterion_2(r: &mut Report) {
    const SPEC_TOL: f64 = 1e-10;
    const CM_TOL: f64 = 1e-9;
    let mut rng = ChaCha20Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    // Distinct thermal variances: at an exactly degenerate spectrum the
    // discriminant of the closed form cancels and only √ε accuracy remains.
    for _ in 0..10_000 {
        let v = random_cm(&mut rng, 2, 0.0);
        let a = two_mode_spectrum(&v).unwrap();
        let b = symplectic_eigenvalues(&v).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            worst = worst.max((x - y).abs() / x.max(1.0));
        }
    }
    r.check(
        worst <= SPEC_TOL,
        format!(
            "two-mode spectra: worst relative gap {worst:.2e} over 10^4 draws (tol {SPEC_TOL:.0e})"
        ),
    );
    let mut worst = 0.0f64;
    for _ in 0..1_000 {
        let at = random_attack(&mut rng);
        let mu = log_uniform(&mut rng, 1.01, 1e3);
        let pairs = [
            (
                cm_ab_given_gamma(mu, &at).unwrap(),
                cm_ab_given_gamma_circuit(mu, &at).unwrap(),
            ),
            (
                cm_b_given_gamma_alpha(mu, &at).unwrap(),
                cm_b_given_gamma_alpha_circuit(mu, &at).unwrap(),
            ),
        ];
        for (x, y) in pairs {
            let scale = x.matrix().amax().max(1.0);
            worst = worst.max(max_abs_diff(x.matrix(), y.matrix()) / scale);
        }
    }
    r.check(
        worst <= CM_TOL,
        format!("MDI CMs vs circuit: worst entrywise gap {worst:.2e} (relative to max entry) over 10^3 draws (tol {CM_TOL:.0e})"),
    );
}

// 3. Party-side and Eve-side Holevo bounds.
fn criterion_3(r: &mut Report) {
    const TOL: f64 = 1e-8;
    let mut rng = ChaCha20Rng::seed_from_u64(SEED + 3);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let at = random_attack(&mut rng);
        let mu = log_uniform(&mut rng, 1.01, 1e3);
        let party = holevo_mdi(mu, &at).unwrap();
        let (sg, sa) = eve_side_entropies(mu, &at).unwrap();
        worst = worst.max((party - (sg - sa)).abs());
    }
    r.check(
        worst <= TOL,
        format!("worst gap {worst:.2e} over 10^2 draws (tol {TOL:.0e})"),
    );
}

// 4. Monte Carlo variances of the estimators.
fn criterion_4(r: &mut Report) {
    const REL: f64 = 0.05;
    const M: usize = 100_000;
    const TRIALS: usize = 1_000;
    let rel = |emp: f64, th: f64| (emp - th).abs() / th;
    let ch = LossyChannel::from_excess_noise(0.5, 0.05).unwrap();
    for (name, v_th) in [
        ("one-way", 0.0),
        ("thermal V_th=1", 1.0),
        ("thermal V_th=10", 10.0),
    ] {
        let v_m = 10.0;
        let s = study_oneway(&ch, v_m, v_th, M, TRIALS, SEED + 4).unwrap();
        let th = estimator_variances_oneway(ch.tau, v_m, v_th, ch.omega, M as f64);
        let (a, b) = (rel(s.tau.var, th.tau), rel(s.v_eps.var, th.v_eps));
        r.check(a <= REL, format!("{name}: Var(τ) off by {:.2}%", 100.0 * a));
        r.check(
            b <= REL,
            format!("{name}: Var(V_ε) off by {:.2}%", 100.0 * b),
        );
    }
    let at = MdiAttack::optimal_from_excess(0.8, 0.6, 0.02, 0.02).unwrap();
    let v_m = 20.0;
    let s = study_mdi(&at, v_m, M, TRIALS, SEED + 5).unwrap();
    let th = estimator_variances_mdi(&at, v_m, M as f64);
    for (name, emp, t) in [
        ("MDI Var(τ_A)", s.tau_a.var, th.tau_a),
        ("MDI Var(τ_B)", s.tau_b.var, th.tau_b),
        ("MDI Var(V_Qε)", s.v_q_eps.var, th.v_q_eps),
        ("MDI Var(V_Pε)", s.v_p_eps.var, th.v_p_eps),
    ] {
        let e = rel(emp, t);
        r.check(e <= REL, format!("{name} off by {:.2}%", 100.0 * e));
    }
}

const BLOCKS: [f64; 5] = [1e6, 1e7, 1e8, 1e9, 1e10];

// 5. Thermal finite-size convergence.
fn criterion_5(r: &mut Report) {
    const CLOSE: f64 = 0.05;
    let ch = LossyChannel::new(db_to_tau(1.0), 1.0).unwrap();
    let mut ratios = Vec::new();
    for v_th in [0.0, 10.0, 100.0] {
        let spec =
            OneWaySpec::new(Detection::Homodyne, Direction::Direct, 1.0, v_th, 0.98).unwrap();
        let asym = cvqkd_core::optimize::grid_golden_max(
            |lv| {
                keyrate_oneway(&spec.with_v_m(lv.exp()), &ch)
                    .map(|b| b.rate)
                    .unwrap_or(f64::NEG_INFINITY)
            },
            0.01f64.ln(),
            1e6f64.ln(),
            41,
            1e-6,
        )
        .value;
        let ks: Vec<f64> = BLOCKS
            .iter()
            .map(|&nb| {
                optimize_finite(
                    |v_m, rr| {
                        let setup = EstimationSetup::thermal(nb, rr).unwrap();
                        keyrate_finite_oneway(&spec.with_v_m(v_m), &ch, &setup)
                            .map(|(f, _)| f.rate)
                            .unwrap_or(0.0)
                    },
                    FiniteBounds::default(),
                )
                .rate
            })
            .collect();
        let mono = ks.windows(2).all(|w| w[1] >= w[0] - 1e-12);
        r.check(mono, format!("V_th={v_th}: K nondecreasing {:?}", fmt(&ks)));
        let last = ks[ks.len() - 1] / asym;
        r.check(
            last >= 1.0 - CLOSE,
            format!("V_th={v_th}: K(10^10)/R∞ = {last:.4} (R∞ = {asym:.4})"),
        );
        ratios.push(ks.iter().map(|k| k / asym).collect::<Vec<_>>());
    }
    let ordered = (0..BLOCKS.len())
        .all(|i| ratios[0][i] >= ratios[1][i] - 1e-12 && ratios[1][i] >= ratios[2][i] - 1e-12);
    r.check(ordered, "K/R∞ ordered V_th = 0 ≥ 10 ≥ 100 at every N̄");
}

fn fmt(v: &[f64]) -> Vec<String> {
    v.iter().map(|x| format!("{x:.4e}")).collect()
}

// 6. MDI finite-size, asymmetric links.
fn criterion_6(r: &mut Report) {
    const CLOSE: f64 = 0.15;
    let bounds = FiniteBounds {
        v_m: (0.5, 1e5),
        r: (1e-4, 0.99),
    };
    for db in [1.0, 2.0, 3.0, 4.0, 5.0] {
        let at = MdiAttack::optimal_from_excess(0.98, db_to_tau(db), 0.01, 0.01).unwrap();
        let asym = keyrate_mdi_optimized(0.98, &at).unwrap().1.rate;
        let fin = |nb: f64| {
            optimize_finite(
                |v_m, rr| {
                    let setup = EstimationSetup::coherent(nb, rr).unwrap();
                    keyrate_finite_mdi(0.98, v_m + 1.0, &at, &setup)
                        .map(|(f, _)| f.rate)
                        .unwrap_or(0.0)
                },
                bounds,
            )
            .rate
        };
        let (k6, k9) = (fin(1e6), fin(1e9));
        r.check(
            k6 < k9 && k9 < asym,
            format!("{db} dB: K(10^6) = {k6:.4e} < K(10^9) = {k9:.4e} < R∞ = {asym:.4e}"),
        );
        if db == 5.0 {
            let ratio = k9 / asym;
            r.check(
                ratio >= 1.0 - CLOSE,
                format!("5 dB: K(10^9)/R∞ = {ratio:.4}"),
            );
        }
    }
}

// 7. Composable ordering and budget.
fn criterion_7(r: &mut Report) {
    let omega = |t: f64, x: f64| 1.0 + t * x / (1.0 - t);
    let mut cases = Vec::new();
    for db in [1.0, 2.0, 4.0] {
        let tb = db_to_tau(db);
        cases.push((
            format!("τ_A=0.99, Bob {db} dB"),
            MdiAttack::independent(0.99, tb, 1.0, omega(tb, 0.01)).unwrap(),
        ));
    }
    for db in [0.1, 0.3, 0.5, 0.55] {
        let t = db_to_tau(db);
        cases.push((
            format!("symmetric {db} dB"),
            MdiAttack::independent(t, t, omega(t, 0.01), omega(t, 0.01)).unwrap(),
        ));
    }
    for (name, attack) in cases {
        let base = ComposableParams {
            attack,
            v_m: 10.0,
            xi: DEFAULT_XI,
            reference: HolevoReference::Alice,
        };
        let (_, asym) = asymptotic_reference(&base);
        let mut col = Vec::new();
        let mut coh = Vec::new();
        let mut budget_ok = true;
        for &n in &BLOCKS {
            let b = EpsilonBudget::for_coherent_target(n, DEFAULT_P, DEFAULT_BITS).unwrap();
            budget_ok &= b.coherent_total(n) < TARGET_EPS;
            col.push(optimize_collective(n, &b, &base).rate.max(0.0));
            coh.push(optimize_coherent(n, n, &b, &base).rate.max(0.0));
        }
        let order = (0..BLOCKS.len()).all(|i| coh[i] <= col[i] && col[i] <= asym.max(0.0));
        let mono = |v: &[f64]| v.windows(2).all(|w| w[1] >= w[0]);
        r.check(
            order,
            format!(
                "{name}: coherent ≤ collective ≤ {asym:.4} (col {:?})",
                fmt(&col)
            ),
        );
        r.check(
            mono(&col) && mono(&coh),
            format!("{name}: rates nondecreasing (coh {:?})", fmt(&coh)),
        );
        r.check(budget_ok, format!("{name}: ε″ < 1e-20 at every n"));
    }
}

// 8. Fading.
fn criterion_8(r: &mut Report) {
    const LIMIT_TOL: f64 = 1e-5;
    let nodes = FadingNodes::default();
    let spec = OneWaySpec::new(Detection::Homodyne, Direction::Reverse, 1e6, 0.0, 1.0).unwrap();
    let mut worst = f64::NEG_INFINITY;
    let mut db = 0.5;
    while db <= 20.0 {
        let t = db_to_tau(db);
        if t + 0.1 <= 1.0 {
            let f = UniformFade::new(t, 0.1).unwrap();
            let fast = keyrate_fast_oneway(&f, &spec, 1.0, &nodes).unwrap().rate;
            let slow = keyrate_slow_oneway(&f, &spec, 1.0, &nodes).unwrap().rate;
            worst = worst.max(fast - slow);
        }
        db += 0.5;
    }
    r.check(
        worst <= 0.0,
        format!("Δτ=0.1 grid: max(R_fast − R_slow) = {worst:.3e}"),
    );
    let mut gap = 0.0f64;
    for t in [0.1, 0.3, 0.5, 0.8, 0.95] {
        let f = UniformFade::new(t, 1e-6).unwrap();
        let fixed = keyrate_oneway(&spec, &LossyChannel::new(t, 1.0).unwrap())
            .unwrap()
            .rate;
        for v in [
            keyrate_fast_oneway(&f, &spec, 1.0, &nodes).unwrap().rate,
            keyrate_slow_oneway(&f, &spec, 1.0, &nodes).unwrap().rate,
        ] {
            gap = gap.max((v - fixed).abs());
        }
    }
    r.check(
        gap <= LIMIT_TOL,
        format!("Δτ=1e-6 vs fixed τ: {gap:.2e} bits"),
    );
    let mut last_positive = None;
    let mut db: f64 = tau_to_db(0.5);
    while db <= 10.0 {
        let f = UniformFade::new(db_to_tau(db), 0.5).unwrap();
        if keyrate_fast_oneway(&f, &spec, 1.0, &nodes).unwrap().rate > 0.0 {
            last_positive = Some(db);
        } else {
            break;
        }
        db += 0.1;
    }
    let reach = last_positive.unwrap_or(0.0);
    r.check(
        reach >= 6.0,
        format!("Δη=0.5 fast fading positive up to {reach:.1} dB"),
    );
}

// 9. Discrete modulation.
fn criterion_9(r: &mut Report) {
    let grid = BGrid::default();
    let cfg = FockConfig::with_cutoff(12);

    let mut spread = 0.0f64;
    for (n, z, tau, nbar) in [(4, 0.5, 0.6, 0.3), (7, 1.0, 0.8, 0.1), (10, 1.5, 0.9, 0.05)] {
        let c = Constellation::new(n, z).unwrap();
        let e = EveEnsemble::thermal(&c, tau, nbar, &cfg).unwrap();
        let s = e.conditional_entropies();
        let lo = s.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        spread = spread.max(hi - lo);
    }
    r.check(
        spread <= 1e-9,
        format!("(a) k-spread of S(ρ_Eve|k) = {spread:.2e}"),
    );

    let s = constellation_entropy(&Constellation::new(4, 5.0).unwrap(), 1.0).unwrap();
    r.check(
        (s - 2.0).abs() <= 0.01,
        format!("(b) N=4, z=5 entropy {s:.6}"),
    );

    // Starts at n_max = 12; a trace deficit of 1e-6 still moves entropies by
    // ~1e-5 bits at z = 1.5, so this comparison escalates down to 1e-10.
    let tight = FockConfig {
        trace_tol: 1e-10,
        ..cfg
    };
    let mut gap = 0.0f64;
    for (n, z, tau) in [(4, 0.5, 0.5), (7, 1.0, 0.8), (4, 1.5, 0.3)] {
        let c = Constellation::new(n, z).unwrap();
        let p = pureloss_rates(&c, tau, &grid).unwrap();
        let t = thermal_rates(&c, tau, 0.0, &tight, &grid).unwrap();
        gap = gap
            .max((p.direct - t.direct).abs())
            .max((p.reverse - t.reverse).abs());
    }
    r.check(
        gap <= 1e-6,
        format!("(c) n̄=0 thermal vs pure loss: {gap:.2e} bits"),
    );

    let c = Constellation::new(4, 0.1).unwrap();
    let gspec = OneWaySpec::new(Detection::Heterodyne, Direction::Reverse, 0.02, 0.0, 1.0).unwrap();
    let mut worst = 0.0f64;
    let mut at20 = 0.0;
    for db in [0.5, 2.5, 5.0, 7.5, 10.0, 12.5, 15.0, 17.5, 20.0] {
        let tau = db_to_tau(db);
        let nbar = photons_from_excess_noise(tau, 0.001).unwrap();
        let d = thermal_rates(&c, tau, nbar, &cfg, &grid).unwrap().reverse;
        let g = keyrate_oneway(
            &gspec,
            &LossyChannel::from_excess_noise(tau, 0.001).unwrap(),
        )
        .unwrap()
        .rate;
        worst = worst.max((d - g).abs() / g.abs());
        if db == 20.0 {
            at20 = d;
        }
    }
    r.check(
        worst <= 0.10,
        format!(
            "(d) RR vs Gaussian V_M=0.02 over 0.5–20 dB: worst {:.3}%",
            100.0 * worst
        ),
    );
    r.check(
        (at20 - 6e-4).abs() <= 0.5 * 6e-4,
        format!("(d) RR at 20 dB = {at20:.3e} (target 6e-4 ± 50%)"),
    );

    let mut worst = 0.0f64;
    for tau in [0.8, 0.85, 0.9] {
        let a = threshold_discrete(&Constellation::new(7, 1.5).unwrap(), tau, 0.5, &cfg, &grid)
            .unwrap();
        let b = threshold_discrete(&Constellation::new(10, 1.5).unwrap(), tau, 0.5, &cfg, &grid)
            .unwrap();
        worst = worst.max((a.eps - b.eps).abs() / a.eps.max(b.eps));
    }
    r.check(
        worst < 0.05,
        format!(
            "(e) N=7 vs N=10 DR thresholds differ by ≤ {:.3}%",
            100.0 * worst
        ),
    );
}

// 10. Property floor.
fn criterion_10(r: &mut Report) {
    let mut rng = ChaCha20Rng::seed_from_u64(SEED + 10);
    let mut bad = 0;
    for i in 0..10_000 {
        let modes = 1 + i % 3;
        let v = random_cm(&mut rng, modes, 0.25);
        let mut ok = v.validate().is_ok();
        if modes > 1 {
            for c in [
                condition_homodyne(&v, 0, Quadrature::Q),
                condition_homodyne(&v, modes - 1, Quadrature::P),
                condition_heterodyne(&v, 0),
            ] {
                ok &= c.map(|c| c.validate().is_ok()).unwrap_or(false);
            }
        }
        bad += usize::from(!ok);
    }
    r.check(
        bad == 0,
        format!("{bad} of 10^4 random CMs failed validity or conditioning"),
    );

    let mut fails = Vec::new();
    let cfg = FockConfig::with_cutoff(12);
    for (n, z, tau, nbar) in [(4, 0.3, 0.5, 0.2), (7, 1.2, 0.8, 0.05), (3, 1.0, 0.3, 1.0)] {
        let c = Constellation::new(n, z).unwrap();
        let e = EveEnsemble::thermal(&c, tau, nbar, &cfg).unwrap();
        let mut ds: Vec<FockDensity> = (0..n).map(|k| e.conditional_density(k).unwrap()).collect();
        ds.push(e.average_density().unwrap());
        for d in ds {
            if let Err(err) = d.check() {
                fails.push(format!("N={n} z={z} τ={tau} n̄={nbar}: {err}"));
            }
        }
    }
    let p =
        displaced_thermal_fock_density(C64::new(0.4, -0.2), C64::new(0.3, 0.1), 0.2, 20).unwrap();
    r.check(
        fails.is_empty() && p > 0.0,
        format!("Fock density checks: {} failures {fails:?}", fails.len()),
    );

    let z = zscore(1e-10).unwrap();
    r.check((6.4..=6.55).contains(&z), format!("zscore(1e-10) = {z:.4}"));
}

fn main() {
    let criteria: [(&str, fn(&mut Report), Duration); 10] = [
        ("3 dB law", criterion_1, Duration::from_secs(1)),
        (
            "closed form vs generic",
            criterion_2,
            Duration::from_secs(10),
        ),
        (
            "purification identity",
            criterion_3,
            Duration::from_secs(10),
        ),
        (
            "estimator statistics",
            criterion_4,
            Duration::from_secs(120),
        ),
        (
            "finite-size convergence",
            criterion_5,
            Duration::from_secs(120),
        ),
        ("MDI finite-size", criterion_6, Duration::from_secs(300)),
        ("composable ordering", criterion_7, Duration::from_secs(120)),
        ("fading", criterion_8, Duration::from_secs(180)),
        (
            "discrete modulation",
            criterion_9,
            Duration::from_secs(1200),
        ),
        ("property floor", criterion_10, Duration::from_secs(30)),
    ];
    let filter: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let t0 = Instant::now();
        let mut r = Report::new();
        run(&mut r);
        let elapsed = t0.elapsed();
        r.check(
            elapsed <= *limit,
            format!("runtime {elapsed:.2?} (limit {limit:?})"),
        );
        let pass = r.passed();
        failed += usize::from(!pass);
        println!(
            "criterion {id:>2} {}: {name}",
            if pass { "PASS" } else { "FAIL" }
        );
        for (what, ok) in &r.checks {
            println!("    [{}] {what}", if *ok { "ok" } else { "FAIL" });
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
