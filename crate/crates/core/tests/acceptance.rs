//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Pass criterion numbers as arguments to run a subset.

use std::time::Instant;

use rayon::prelude::*;

use randcomplex::boundary::{boundary_matrix, ridge_boundary_matrix};
use randcomplex::collapse::{
    c_shadow_with, collapse_to_core, simplex_boundaries, RootedCollapse, ShadowMode,
};
use randcomplex::combinatorics::{binomial, FaceId};
use randcomplex::complex::Complex;
use randcomplex::homology::{betti_d, betti_via_core, r_shadow, rank_of_complex, FieldChoice};
use randcomplex::rng::substream;
use randcomplex::sampling::{sample, SampleConfig};
use randcomplex::stats::{poisson_goodness_of_fit, MeanAccumulator};
use randcomplex::sweep::{run_sweep, trial_seed, trial_values, Statistic, SweepConfig, SweepRow};
use randcomplex::thresholds::{
    c_d, gamma_d, log10_gap, regime_densities, xt_bound_at, DEFAULT_TOL,
};
use randcomplex::tree::{delta_k_samples, population_dynamics_x};

use rand::Rng;

const SEED: u64 = 20240611;

struct Report {
    failures: Vec<usize>,
}

impl Report {
    fn record(&mut self, id: usize, ok: bool, detail: String) {
        println!(
            "{} criterion {id}: {detail}",
            if ok { "PASS" } else { "FAIL" }
        );
        if !ok {
            self.failures.push(id);
        }
    }
}

/// Smallest root of `t = exp(-c (1-t)^d)` by plain iteration from 0; the
/// iterates increase to it monotonically.
fn t_by_iteration(c: f64, d: i32) -> f64 {
    let mut t = 0.0f64;
    for _ in 0..200_000 {
        let next = (-c * (1.0 - t).powi(d)).exp();
        if next == t {
            break;
        }
        t = next;
    }
    t
}

/// `P(Poi(lambda) >= 2)`.
fn poisson_at_least_two(lambda: f64) -> f64 {
    1.0 - (-lambda).exp() * (1.0 + lambda)
}

fn sweep_point(
    n: u32,
    c: f64,
    trials: usize,
    stats: &[Statistic],
    field: FieldChoice,
) -> Vec<SweepRow> {
    let cfg = SweepConfig {
        d: 2,
        ns: vec![n],
        c_min: c,
        c_max: c,
        trials,
        seed: SEED,
        stats: stats.to_vec(),
        field,
        force: true,
        ..SweepConfig::default()
    };
    run_sweep(&cfg).expect("sweep runs")
}

fn row(rows: &[SweepRow], stat: Statistic) -> &SweepRow {
    rows.iter()
        .find(|r| r.stat == stat)
        .expect("statistic present")
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol
}

fn complex_for(n: u32, c: f64, trial: usize) -> Complex {
    let seed = trial_seed(SEED, 2, n, c, trial);
    sample(&SampleConfig::binomial_c(n, 2, c, seed), None).expect("valid sample")
}

fn thresholds_table(r: &mut Report) {
    let start = Instant::now();
    let gammas = [
        (2, 2.455),
        (3, 3.089),
        (4, 3.509),
        (5, 3.822),
        (10, 4.749),
        (100, 7.555),
        (1000, 10.175),
    ];
    let cds = [(2, 2.754), (3, 3.907), (4, 4.962), (5, 5.984)];
    let gaps = [(10, -3.73), (100, -41.8), (1000, -431.7)];
    let mut ok = true;
    let mut misses = Vec::new();
    for (d, want) in gammas {
        let got = gamma_d(d, DEFAULT_TOL);
        if !within(got, want, 2e-3) {
            ok = false;
            misses.push(format!("gamma_{d} = {got:.5} vs {want}"));
        }
    }
    for (d, want) in cds {
        let got = c_d(d, DEFAULT_TOL).unwrap();
        if !within(got, want, 2e-3) {
            ok = false;
            misses.push(format!("c_{d} = {got:.5} vs {want}"));
        }
    }
    for (d, want) in gaps {
        let got = log10_gap(d, DEFAULT_TOL).unwrap();
        if !within(got, want, 0.05) {
            ok = false;
            misses.push(format!("log10(d+1-c_d) at d = {d} is {got:.4} vs {want}"));
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    ok &= elapsed < 1.0;
    let detail = if misses.is_empty() {
        "all 14 constants within tolerance".to_string()
    } else {
        misses.join("; ")
    };
    r.record(1, ok, format!("threshold table: {detail} ({elapsed:.3}s)"));
}

fn core_density(r: &mut Report) {
    let (n, c) = (1000, 3.0);
    let rows = sweep_point(
        n,
        c,
        20,
        &[Statistic::CoreF1, Statistic::CoreF2],
        FieldChoice::default(),
    );
    let t = t_by_iteration(c, 2);
    let lambda = c * (1.0 - t).powi(2);
    let f1_theory = poisson_at_least_two(lambda);
    let f2_theory = c * (1.0 - t).powi(3) / 3.0;
    let f1 = row(&rows, Statistic::CoreF1);
    let f2 = row(&rows, Statistic::CoreF2);
    r.record(
        2,
        within(f1.mean, f1_theory, 0.015) && within(f2.mean, f2_theory, 0.015),
        format!(
            "core ridges {:.4} vs {f1_theory:.4}, core faces {:.4} vs {f2_theory:.4} (both per C(n,2))",
            f1.mean, f2.mean
        ),
    );
}

fn betti_density(r: &mut Report) {
    let (n, c) = (400, 3.0);
    let rows = sweep_point(n, c, 20, &[Statistic::Betti], FieldChoice::default());
    let t = t_by_iteration(c, 2);
    let s = 1.0 - t;
    let theory = c / 3.0 * s.powi(3) - s + c * t * s.powi(2);
    let prime = row(&rows, Statistic::Betti);

    let cfg = SweepConfig {
        d: 2,
        ns: vec![n],
        c_min: c,
        c_max: c,
        seed: SEED,
        stats: vec![Statistic::Betti],
        ..SweepConfig::default()
    };
    let rational_cfg = SweepConfig {
        field: FieldChoice::Rational,
        ..cfg.clone()
    };
    let agree = (0..3).all(|trial| {
        trial_values(&cfg, n, c, trial).unwrap()
            == trial_values(&rational_cfg, n, c, trial).unwrap()
    });
    r.record(
        3,
        within(prime.mean, theory, 0.01) && agree,
        format!(
            "betti density {:.4} +- {:.4} vs {theory:.4}; rational agrees on 3 trials: {agree}",
            prime.mean, prime.stderr
        ),
    );
}

fn collapsible_regime(r: &mut Report) {
    let (n, c, trials) = (500, 2.0, 50);
    let gravel = (0..trials)
        .into_par_iter()
        .filter(|&trial| collapse_to_core(&complex_for(n, c, trial)).is_gravel)
        .count();
    let fraction = gravel as f64 / trials as f64;
    r.record(
        4,
        fraction >= 0.9,
        format!("core is gravel or empty in {gravel}/{trials} trials"),
    );
}

fn intermediate_regime(r: &mut Report) {
    let (n, c, trials) = (500, 2.6, 50);
    let outcomes: Vec<(bool, bool, f64)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let core = collapse_to_core(&complex_for(n, c, trial));
            let betti = betti_d(&core.core, FieldChoice::default()).unwrap();
            let ridges = binomial(n as u64, 2).unwrap() as f64;
            (
                !core.is_collapsible,
                betti == simplex_boundaries(&core.core).len(),
                core.core_dminus1_count as f64 / ridges,
            )
        })
        .collect();
    let non_collapsible = outcomes.iter().filter(|o| o.0).count();
    let acyclic = outcomes.iter().filter(|o| o.1).count();
    let f1: MeanAccumulator = outcomes.iter().map(|o| o.2).collect();
    let t = t_by_iteration(c, 2);
    let theory = poisson_at_least_two(c * (1.0 - t).powi(2));
    let ok = non_collapsible * 10 >= trials * 9
        && acyclic * 10 >= trials * 9
        && within(f1.mean(), theory, 0.03);
    r.record(
        5,
        ok,
        format!(
            "non-collapsible {non_collapsible}/{trials}, betti = #simplex boundaries in {acyclic}/{trials}, core ridges {:.4} vs {theory:.4}",
            f1.mean()
        ),
    );
}

fn shadows(r: &mut Report) {
    let n = 200;
    let stats = [Statistic::CShadow, Statistic::RShadow];
    let high = sweep_point(n, 3.0, 10, &stats, FieldChoice::default());
    let low = sweep_point(n, 2.6, 10, &stats, FieldChoice::default());
    let target_high = (1.0 - t_by_iteration(3.0, 2)).powi(3);
    let target_low = (1.0 - t_by_iteration(2.6, 2)).powi(3);
    let (ch, rh) = (
        row(&high, Statistic::CShadow).mean,
        row(&high, Statistic::RShadow).mean,
    );
    let (cl, rl) = (
        row(&low, Statistic::CShadow).mean,
        row(&low, Statistic::RShadow).mean,
    );
    let ok = within(ch, target_high, 0.03)
        && within(rh, target_high, 0.03)
        && rl <= 0.02
        && within(cl, target_low, 0.03);
    r.record(
        6,
        ok,
        format!(
            "c = 3: C {ch:.4}, R {rh:.4} vs {target_high:.4}; c = 2.6: R {rl:.4} (<= 0.02), C {cl:.4} vs {target_low:.4}"
        ),
    );
}

fn histogram(values: impl IntoIterator<Item = u32>) -> Vec<u64> {
    let mut h = Vec::new();
    for v in values {
        let v = v as usize;
        if h.len() <= v {
            h.resize(v + 1, 0);
        }
        h[v] += 1;
    }
    h
}

fn local_limit(r: &mut Report) {
    let (n, c, k) = (2000u32, 3.0, 6);
    let mut t = 0.0;
    for _ in 0..k {
        t = (-c * (1.0f64 - t).powi(2)).exp();
    }
    // t now holds t_{k-1}
    let lambda = c * (1.0 - t).powi(2);

    let y = sample(&SampleConfig::binomial_c(n, 2, c, SEED), None).unwrap();
    let rooted = RootedCollapse::new(&y);
    let ridges = binomial(n as u64, 2).unwrap();
    let mut rng = substream(SEED, &[70]);
    let roots: Vec<FaceId> = (0..2000)
        .map(|_| FaceId(rng.random_range(0..ridges)))
        .collect();
    let complex_test = poisson_goodness_of_fit(
        &histogram(roots.iter().map(|&f| rooted.degree(f, k))),
        lambda,
    )
    .unwrap();
    let tree_test =
        poisson_goodness_of_fit(&histogram(delta_k_samples(c, 2, k, 100_000, SEED)), lambda)
            .unwrap();
    r.record(
        7,
        !complex_test.rejects_at(0.01) && !tree_test.rejects_at(0.01),
        format!(
            "rate {lambda:.4}; complex p = {:.3}, tree p = {:.3}",
            complex_test.p_value, tree_test.p_value
        ),
    );
}

fn spectral_atom(r: &mut Report) {
    let below = population_dynamics_x(2.0, 2, 10_000, 200, SEED).unwrap();
    let above = population_dynamics_x(3.0, 2, 10_000, 200, SEED + 1).unwrap();
    let target_below = 1.0 - 2.0 / 3.0;
    let target_above = xt_bound_at(3.0, 2, t_by_iteration(3.0, 2));
    r.record(
        8,
        within(below.mean_x, target_below, 0.01) && within(above.mean_x, target_above, 0.01),
        format!(
            "c = 2: {:.4} vs {target_below:.4}; c = 3: {:.4} vs {target_above:.4}",
            below.mean_x, above.mean_x
        ),
    );
}

fn complex_from_mask(n: u32, mask: u64) -> Complex {
    let total = binomial(n as u64, 3).unwrap();
    Complex::new(
        n,
        2,
        (0..total)
            .filter(|r| mask >> r & 1 == 1)
            .map(FaceId)
            .collect(),
    )
    .unwrap()
}

fn property_suites(r: &mut Report) {
    let mut notes = Vec::new();

    let boundary_ok = (4..=7u32).all(|n| {
        [2usize, 3].iter().all(|&d| {
            let outer = ridge_boundary_matrix(n, d).unwrap().to_dense();
            let inner = boundary_matrix(&Complex::full(n, d).unwrap()).to_dense();
            outer.iter().all(|row| {
                (0..inner[0].len())
                    .all(|j| (0..inner.len()).map(|k| row[k] * inner[k][j]).sum::<i64>() == 0)
            })
        })
    });
    notes.push(format!("boundary squared zero: {boundary_ok}"));

    let samples: Vec<Complex> = (0..60)
        .map(|i| complex_for(40, 1.0 + 0.05 * i as f64, i))
        .collect();
    let nullity_ok = samples.par_iter().all(|y| {
        [
            FieldChoice::Rational,
            FieldChoice::default(),
            FieldChoice::Prime(2),
        ]
        .iter()
        .all(|&f| {
            let res = rank_of_complex(y, f).unwrap();
            res.rank + res.kernel_dim == y.f_d()
                && res.rank + res.cokernel_dim == y.f_dminus1() as usize
        })
    });
    notes.push(format!("rank-nullity: {nullity_ok}"));

    let core_ok = samples.par_iter().all(|y| {
        betti_d(y, FieldChoice::Rational).unwrap()
            == betti_via_core(y, FieldChoice::Rational).unwrap()
    });
    notes.push(format!("betti of core: {core_ok}"));

    let order_ok = (0..100).into_par_iter().all(|trial| {
        let y = complex_for(80, 3.0, trial);
        let core = collapse_to_core(&y).core;
        randcomplex::collapse::collapse_to_core_with(
            &y,
            randcomplex::incidence::TieBreak::LargestFirst,
        )
        .core
            == core
    });
    notes.push(format!("order independence: {order_ok}"));

    let mut shadow_ok = true;
    let mut contain_ok = true;
    for n in 3..=6u32 {
        let masks = 0..1u64 << binomial(n as u64, 3).unwrap();
        let (fast, contain) = masks
            .into_par_iter()
            .map(|mask| {
                let y = complex_from_mask(n, mask);
                let collapse = c_shadow_with(&y, ShadowMode::Fast);
                let fast = collapse == c_shadow_with(&y, ShadowMode::Oracle);
                let real = r_shadow(&y, FieldChoice::Rational).unwrap();
                (fast, real.iter().all(|f| collapse.binary_search(f).is_ok()))
            })
            .reduce(|| (true, true), |a, b| (a.0 && b.0, a.1 && b.1));
        shadow_ok &= fast;
        contain_ok &= contain;
    }
    notes.push(format!("fast C-shadow = oracle for n <= 6: {shadow_ok}"));
    notes.push(format!("R-shadow inside C-shadow for n <= 6: {contain_ok}"));

    let ok = boundary_ok && nullity_ok && core_ok && order_ok && shadow_ok && contain_ok;
    r.record(9, ok, notes.join(", "));
}

fn main() {
    let selected: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let criteria: [(usize, fn(&mut Report)); 9] = [
        (1, thresholds_table),
        (2, core_density),
        (3, betti_density),
        (4, collapsible_regime),
        (5, intermediate_regime),
        (6, shadows),
        (7, local_limit),
        (8, spectral_atom),
        (9, property_suites),
    ];
    let mut report = Report {
        failures: Vec::new(),
    };
    let gamma = gamma_d(2, DEFAULT_TOL);
    let densities = regime_densities(3.0, 2);
    println!(
        "reference: gamma_2 = {gamma:.6}, t(3,2) = {:.6}",
        densities.t
    );
    for (id, run) in criteria {
        if selected.is_empty() || selected.contains(&id) {
            let start = Instant::now();
            run(&mut report);
            println!(
                "    criterion {id} took {:.1}s",
                start.elapsed().as_secs_f64()
            );
        }
    }
    if !report.failures.is_empty() {
        println!("failed criteria: {:?}", report.failures);
        std::process::exit(1);
    }
}
