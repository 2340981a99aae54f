//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fail.

mod common;

use std::f64::consts::{PI, SQRT_2};
use std::time::Instant;

use common::DenseOracle;
use rudvalis_core::bounds::{theorem_constants, BoundReport};
use rudvalis_core::exact::{
    evolve_full, psi_moment_series, single_card_mixing_time, tv_to_uniform, LiftedChain,
};
use rudvalis_core::montecarlo::{
    coupling_parity, sample_psi, separation_test, shift_count_equivalence,
};
use rudvalis_core::numeric::loglog_slope;
use rudvalis_core::spectral::{
    build_twisted_matrix, psi_eval, solve, verify_eigensystem, AuxParams, SolverOptions,
};
use rudvalis_core::{Deck, Error, LiftedState, ShuffleKind, ShuffleSpec};

const RUDVALIS: ShuffleKind = ShuffleKind::Rudvalis { p: 0.5 };
const KINDS: [ShuffleKind; 3] = [RUDVALIS, ShuffleKind::ShiftOrSwap, ShuffleKind::Symmetrized];

/// Symmetrized decks must be odd; other shuffles take `n` as given.
fn spec_near(kind: ShuffleKind, n: usize) -> ShuffleSpec {
    let n = if kind == ShuffleKind::Symmetrized && n % 2 == 0 {
        n + 1
    } else {
        n
    };
    ShuffleSpec::new(kind, n).unwrap()
}

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_1() -> Outcome {
    const RESIDUAL_TOL: f64 = 1e-10;
    const DENSE_TOL: f64 = 1e-9;
    let mut worst_res: f64 = 0.0;
    for kind in KINDS {
        for n in [5, 7, 9, 15, 25] {
            let es = solve(&ShuffleSpec::new(kind, n).unwrap()).map_err(|e| e.to_string())?;
            worst_res = worst_res.max(verify_eigensystem(&es));
        }
    }
    let mut worst_dense: f64 = 0.0;
    for kind in KINDS {
        for n in 5..=12 {
            if kind == ShuffleKind::Symmetrized && n % 2 == 0 {
                continue;
            }
            let spec = ShuffleSpec::new(kind, n).unwrap();
            let es = solve(&spec).map_err(|e| e.to_string())?;
            let ev = build_twisted_matrix(&spec)
                .eigenvalues()
                .ok_or("dense eigen-decomposition failed")?;
            let top = ev
                .iter()
                .copied()
                .max_by(|a, b| {
                    a.re.total_cmp(&b.re)
                        .then(b.im.abs().total_cmp(&a.im.abs()))
                })
                .unwrap();
            let nearest = ev
                .iter()
                .map(|z| (z - es.lambda).norm())
                .fold(f64::INFINITY, f64::min);
            worst_dense = worst_dense.max(nearest).max((top.re - es.lambda.re).abs());
        }
    }
    check(
        worst_res < RESIDUAL_TOL && worst_dense < DENSE_TOL,
        format!("max residual {worst_res:.2e} (< {RESIDUAL_TOL:.0e}); max dense gap {worst_dense:.2e} (< {DENSE_TOL:.0e})"),
    )
}

fn criterion_2() -> Outcome {
    const REL_TOL: f64 = 0.10;
    let target = |kind: ShuffleKind| match kind {
        ShuffleKind::Rudvalis { p } => 4.0 * PI * PI * p / (1.0 - p),
        ShuffleKind::ShiftOrSwap => PI * PI,
        ShuffleKind::Symmetrized => PI * PI / 2.0,
    };
    let deviation = |spec: &ShuffleSpec| -> Result<f64, String> {
        let es = solve(spec).map_err(|e| e.to_string())?;
        let n = spec.n as f64;
        Ok((es.gamma * n.powi(3) / target(spec.kind) - 1.0).abs())
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for kind in [
        RUDVALIS,
        ShuffleKind::Rudvalis { p: 1.0 / 3.0 },
        ShuffleKind::ShiftOrSwap,
        ShuffleKind::Symmetrized,
    ] {
        let small = deviation(&spec_near(kind, 75))?;
        let large = deviation(&spec_near(kind, 300))?;
        ok &= large < REL_TOL && large < small;
        parts.push(format!("{}: {small:.4}->{large:.4}", kind.name()));
    }
    let es = solve(&ShuffleSpec::symmetrized(301).unwrap()).map_err(|e| e.to_string())?;
    let AuxParams::ThetaDelta { theta, delta } = es.aux else {
        return Err("symmetrized solver returned no theta".into());
    };
    let n = 301.0f64;
    let theta_ratio = theta * n.powf(1.5) / (SQRT_2 * PI);
    let delta_ratio = delta * (2.0 * n).sqrt();
    ok &= (theta_ratio - 1.0).abs() < REL_TOL && (delta_ratio - 1.0).abs() < REL_TOL;
    parts.push(format!(
        "theta ratio {theta_ratio:.4}, delta ratio {delta_ratio:.4}"
    ));
    check(
        ok,
        format!("relative deviation n=75->300: {}", parts.join("; ")),
    )
}

fn criterion_3() -> Outcome {
    const MEAN_TOL: f64 = 1e-9;
    let mut worst_mean: f64 = 0.0;
    let mut worst_var_ratio: f64 = 0.0;
    for kind in KINDS {
        let spec = ShuffleSpec::new(kind, 5).unwrap();
        let es = solve(&spec).map_err(|e| e.to_string())?;
        let chain = LiftedChain::new(&spec).map_err(|e| e.to_string())?;
        let series = psi_moment_series(&chain, &es, &LiftedState::start(5), 200);
        let psi0 = series[0].mean;
        let ceiling = es.r_bound / (2.0 * es.gamma);
        for m in &series {
            let err = (m.mean - psi0 * es.lambda.powu(m.t as u32)).norm() / psi0.norm();
            worst_mean = worst_mean.max(err);
            worst_var_ratio = worst_var_ratio.max(m.variance / ceiling);
        }
    }
    check(
        worst_mean < MEAN_TOL && worst_var_ratio <= 1.0,
        format!("max mean error {worst_mean:.2e} (< {MEAN_TOL:.0e}); max Var/(R/2gamma) {worst_var_ratio:.4} (<= 1)"),
    )
}

fn criterion_4() -> Outcome {
    const DIST_TOL: f64 = 1e-12;
    const PSI_TOL: f64 = 1e-9;
    let mut worst_dist: f64 = 0.0;
    for kind in KINDS {
        let spec = spec_near(kind, 4);
        let chain = LiftedChain::new(&spec).map_err(|e| e.to_string())?;
        let dense = DenseOracle::new(&spec).distribution(&chain, 50);
        let sparse = evolve_full(&spec, 50).map_err(|e| e.to_string())?;
        let err = sparse
            .probs
            .iter()
            .zip(&dense)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst_dist = worst_dist.max(err);
    }
    let mut worst_psi: f64 = 0.0;
    let mut min_margin = f64::INFINITY;
    for kind in KINDS {
        let spec = ShuffleSpec::new(kind, 5).unwrap();
        let es = solve(&spec).map_err(|e| e.to_string())?;
        let chain = LiftedChain::new(&spec).map_err(|e| e.to_string())?;
        let x0 = Deck::identity(5).positions();
        let mut brute: f64 = 0.0;
        let mut moment: f64 = 0.0;
        for idx in 0..chain.num_states() {
            let s = chain.state(idx);
            let here = psi_eval(&s.deck, s.y, &x0, &es);
            brute = brute.max(here.norm());
            let m: f64 = spec
                .moves()
                .iter()
                .map(|(mv, q)| {
                    let mut next = s.clone();
                    next.apply(mv);
                    q * (psi_eval(&next.deck, next.y, &x0, &es) - here).norm_sqr()
                })
                .sum();
            moment = moment.max(m);
        }
        worst_psi = worst_psi.max((brute - es.psi_max).abs());
        min_margin = min_margin.min(es.r_bound / moment);
    }
    check(
        worst_dist < DIST_TOL && worst_psi < PSI_TOL && min_margin >= 1.0,
        format!(
            "dense vs sparse {worst_dist:.2e} (< {DIST_TOL:.0e}); psi_max vs exhaustive {worst_psi:.2e} (< {PSI_TOL:.0e}); min r_bound/exhaustive {min_margin:.3} (>= 1)"
        ),
    )
}

fn criterion_5() -> Outcome {
    const TOL_1E3: f64 = 0.50;
    const TOL_1E4: f64 = 0.40;
    let mut ok = true;
    let mut parts = Vec::new();
    for kind in KINDS {
        let grid: Vec<usize> = [1000, 3000, 10000]
            .iter()
            .map(|&n| spec_near(kind, n).n)
            .collect();
        let reports: Vec<BoundReport> =
            theorem_constants(kind, 0.25, &grid, &SolverOptions::default())
                .map_err(|e| e.to_string())?;
        let devs: Vec<f64> = reports.iter().map(|r| r.deviation).collect();
        ok &= devs[0] <= TOL_1E3 && devs[2] <= TOL_1E4 && devs.windows(2).all(|w| w[1] < w[0]);
        parts.push(format!(
            "{}: ratio {:.3}/{:.3}/{:.3}",
            kind.name(),
            reports[0].theorem_constant / reports[0].reference_constant,
            reports[1].theorem_constant / reports[1].reference_constant,
            reports[2].theorem_constant / reports[2].reference_constant,
        ));
    }
    check(
        ok,
        format!(
            "t_lower/(n^3 ln n)/reference at n=1e3/3e3/1e4 (need within {TOL_1E3} then {TOL_1E4}, decreasing deviation): {}",
            parts.join("; ")
        ),
    )
}

fn criterion_6() -> Outcome {
    let bands = [
        (RUDVALIS, 2.7, 3.3),
        (ShuffleKind::ShiftOrSwap, 1.7, 2.3),
        (ShuffleKind::Symmetrized, 1.7, 2.3),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (kind, lo, hi) in bands {
        let mut points = Vec::new();
        for n in [32, 48, 64, 96, 128] {
            let spec = spec_near(kind, n);
            let max_t = 50 * (spec.n as u64).pow(3);
            let t = single_card_mixing_time(&spec, 0.25, max_t)
                .map_err(|e| e.to_string())?
                .ok_or_else(|| format!("{} n={} did not mix", kind.name(), spec.n))?;
            points.push((spec.n as f64, t as f64));
        }
        let slope = loglog_slope(&points);
        ok &= (lo..=hi).contains(&slope);
        parts.push(format!("{} slope {slope:.3} in [{lo}, {hi}]", kind.name()));
    }
    check(ok, parts.join("; "))
}

fn criterion_7() -> Outcome {
    const EPS: f64 = 0.25;
    const EARLY_MIN: f64 = 0.7;
    const LATE_MAX: f64 = 0.05;
    const EARLY_TRIALS: usize = 10_000;
    const LATE_TRIALS: usize = 1_000;
    const STATIONARY: usize = 10_000;
    let mut ok = true;
    let mut parts = Vec::new();
    for kind in KINDS {
        let spec = spec_near(kind, 40);
        let es = solve(&spec).map_err(|e| e.to_string())?;
        let t_lower = BoundReport::new(spec, EPS, es.psi_max, es.gamma, es.r_bound)
            .map_err(|e| e.to_string())?
            .t_lower;
        let early = separation_test(&sample_psi(&es, t_lower, EARLY_TRIALS, 1), STATIONARY, EPS)
            .map_err(|e| e.to_string())?;
        let n = spec.n as f64;
        let t_late = (20.0 * n.powi(3) * n.ln()).ceil() as u64;
        let late = separation_test(&sample_psi(&es, t_late, LATE_TRIALS, 2), STATIONARY, EPS)
            .map_err(|e| e.to_string())?;
        ok &= early.empirical_bound >= EARLY_MIN && late.empirical_bound <= LATE_MAX;
        parts.push(format!(
            "{} n={}: t_lower={t_lower} bound {:.4}, t={t_late} bound {:.4}",
            kind.name(),
            spec.n,
            early.empirical_bound,
            late.empirical_bound
        ));
    }
    check(
        ok,
        format!(
            "need >= {EARLY_MIN} then <= {LATE_MAX}: {}",
            parts.join("; ")
        ),
    )
}

fn criterion_8() -> Outcome {
    let parity = coupling_parity(10, 100_000, 8).map_err(|e| e.to_string())?;
    let parity_ok = (parity.fraction_odd - 1.0 / 3.0).abs() < 0.01;
    let mut all_matched = true;
    for seed in 0..10 {
        all_matched &= shift_count_equivalence(6, 10_000, seed)
            .map_err(|e| e.to_string())?
            .matched();
    }
    let rep = shift_count_equivalence(6, 100_000, 77).map_err(|e| e.to_string())?;
    let freq = rep.shift_epochs as f64 / rep.steps as f64;
    let freq_ok = (freq - 0.5).abs() < 0.02;
    check(
        parity_ok && all_matched && freq_ok && rep.matched(),
        format!(
            "fraction odd {:.4} (1/3 +- 0.01); n=6 t=1e4 10 seeds matched: {all_matched}; shift-epoch frequency {freq:.4} (1/2 +- 0.02)",
            parity.fraction_odd
        ),
    )
}

fn criterion_9() -> Outcome {
    let rejected = matches!(ShuffleSpec::symmetrized(8), Err(Error::InvalidSpec(_)));
    let spec = ShuffleSpec::shift_or_swap(4).unwrap();
    let chain = LiftedChain::new(&spec).map_err(|e| e.to_string())?;
    let mut d = chain.point_mass(&LiftedState::start(4));
    let mut floor = f64::INFINITY;
    for _ in 0..=1000 {
        floor = floor.min(tv_to_uniform(&d));
        d = chain.step(&d);
    }
    let es = solve(&ShuffleSpec::symmetrized(11).unwrap()).map_err(|e| e.to_string())?;
    let bytes = |seed| {
        let batch = sample_psi(&es, 5000, 200, seed);
        batch
            .samples
            .iter()
            .flat_map(|z| z.re.to_le_bytes().into_iter().chain(z.im.to_le_bytes()))
            .collect::<Vec<u8>>()
    };
    let reproducible = bytes(31) == bytes(31) && bytes(31) != bytes(32);
    check(
        rejected && floor >= 0.5 - 1e-12 && reproducible,
        format!("even symmetrized rejected: {rejected}; n=4 shift-or-swap TV floor {floor:.6} (>= 1/2); byte-exact reruns: {reproducible}"),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 eigen-residual suite", criterion_1),
        ("2 asymptotic eigenvalue constants", criterion_2),
        ("3 exact moment identities", criterion_3),
        ("4 oracle equivalence", criterion_4),
        ("5 bound constant diagnostics", criterion_5),
        ("6 single-card mixing exponents", criterion_6),
        ("7 distinguishing experiment", criterion_7),
        ("8 coupling diagnostics", criterion_8),
        ("9 degenerate and validation cases", criterion_9),
    ];
    let mut failures = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {name} [{secs:.1}s]: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL criterion {name} [{secs:.1}s]: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", 9 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
