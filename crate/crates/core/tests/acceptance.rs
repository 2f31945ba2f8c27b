//! Exit criteria. Each test prints one `PASS`/`FAIL` line to stderr
//! (bypassing output capture) and then asserts the verdict.

use std::io::Write;
use std::sync::Mutex;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bscsim::channel::{dbm_to_watt, draw_realization, make_pilots, make_preamble, SimConfig};
use bscsim::estimation::{
    build_ytilde, estimate_from_observation, estimate_uar, run_ce, sign_aligned_error,
    simulate_ce_phase, stationarity_residual, suppress_uar, UarHandling,
};
use bscsim::harness::{
    linspace, run_point, run_sweep, run_trial, trial_rng, validate_ce_sweep, CePowers, Design,
    SweepParam, SweepSpec, TrialOverrides,
};
use bscsim::numerics::{sample_cgauss, vecops, CMatrix, Complex64};
use bscsim::optimize::{asymptotic_weights, joint_design, sdr_solve, AsymptoticChoice};
use bscsim::trx::{detector_mmse, precoder_pertag, sinr};

/// Criteria run one at a time so wall-clock limits are not inflated by
/// neighbouring tests.
static SERIAL: Mutex<()> = Mutex::new(());

fn verdict(name: &str, pass: bool, details: &str) {
    let line = format!("{} {name}: {details}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(pass, "{name}: {details}");
}

fn lock() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn random_unit(rng: &mut impl Rng, n: usize) -> Vec<Complex64> {
    vecops::normalized(&sample_cgauss(rng, n, 1.0).unwrap()).unwrap()
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[test]
fn noiseless_ce_oracle() {
    let _g = lock();
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for n in [2, 4, 8, 16] {
        for m in [1, 2, 4, 8] {
            let cfg = SimConfig {
                n_antennas: n,
                n_tags: m,
                a0: 0.0,
                sigma2_w0: Some(0.0),
                sigma2_w1: Some(0.0),
                ..SimConfig::default()
            };
            for seed in 0..50 {
                let mut rng = ChaCha8Rng::seed_from_u64(1000 * (n * 100 + m) as u64 + seed);
                let real = draw_realization(&cfg, &mut rng).unwrap();
                let ce = run_ce(&cfg, &real, &mut rng).unwrap();
                for (hh, h) in ce.h_hat.iter().zip(&real.h) {
                    worst = worst.max(sign_aligned_error(hh, h));
                }
                cases += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        "noiseless CE oracle",
        worst <= 1e-6 && secs < 60.0,
        &format!("{cases} instances, worst relative error {worst:.2e} (limit 1e-6), {secs:.1}s (limit 60s)"),
    );
}

#[test]
fn ls_stationarity() {
    let _g = lock();
    let cfg = SimConfig::default();
    let (pilots, preamble) = (make_pilots(&cfg), make_preamble(&cfg));
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let real = draw_realization(&cfg, &mut rng).unwrap();
        let obs = simulate_ce_phase(&cfg, &real, &pilots, &preamble, &mut rng).unwrap();
        let y = suppress_uar(&obs.y1, &estimate_uar(&obs.y0, &pilots).unwrap(), &pilots).unwrap();
        let ce =
            estimate_from_observation(&obs, &pilots, &preamble, UarHandling::Suppress).unwrap();
        for (k, hh) in ce.h_hat.iter().enumerate() {
            let yt = build_ytilde(&y, &pilots, &preamble, k).unwrap();
            let scale = yt.frobenius() * vecops::norm(hh);
            if scale > 0.0 {
                worst = worst.max(stationarity_residual(&yt, hh) / scale);
                checked += 1;
            }
        }
    }
    verdict(
        "LS stationarity",
        worst <= 1e-6,
        &format!("{checked} tag estimates over 100 instances, worst relative residual {worst:.2e} (limit 1e-6)"),
    );
}

#[test]
fn mmse_detector_optimality() {
    let _g = lock();
    let cfg = SimConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = f64::INFINITY;
    for _ in 0..50 {
        let real = draw_realization(&cfg, &mut rng).unwrap();
        let f = vecops::scale(&random_unit(&mut rng, cfg.n_antennas), cfg.p_t.sqrt());
        let g = detector_mmse(&f, &real.h, &cfg).unwrap();
        for k in 0..cfg.n_tags {
            let best = sinr(k, &f, &g, &real.h, &cfg).unwrap();
            for _ in 0..1000 {
                let mut gr = g.clone();
                gr.set_column(k, &random_unit(&mut rng, cfg.n_antennas));
                let other = sinr(k, &f, &gr, &real.h, &cfg).unwrap();
                worst = worst.min((best - other) / best);
            }
        }
    }
    verdict(
        "MMSE detector optimality",
        worst >= -1e-9,
        &format!("50 instances x 1000 random unit detectors per tag, worst relative margin {worst:.3e} (limit -1e-9)"),
    );
}

#[test]
fn per_tag_precoder_optimality() {
    let _g = lock();
    let cfg = SimConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = cfg.n_antennas;
    let mut worst = f64::INFINITY;
    for _ in 0..50 {
        let real = draw_realization(&cfg, &mut rng).unwrap();
        let cols: Vec<Vec<Complex64>> = (0..cfg.n_tags).map(|_| random_unit(&mut rng, n)).collect();
        let g = CMatrix::from_columns(&cols);
        for k in 0..cfg.n_tags {
            let fk = precoder_pertag(k, &g, &real.h, &cfg).unwrap();
            assert!(vecops::norm_sqr(&fk) <= cfg.p_t + 1e-9);
            let best = sinr(k, &fk, &g, &real.h, &cfg).unwrap();
            for _ in 0..1000 {
                let power = cfg.p_t * rng.gen_range(0.0..=1.0f64);
                let fr = vecops::scale(&random_unit(&mut rng, n), power.sqrt());
                let other = sinr(k, &fr, &g, &real.h, &cfg).unwrap();
                worst = worst.min((best - other) / best);
            }
        }
    }
    verdict(
        "per-tag precoder optimality",
        worst >= -1e-9,
        &format!("50 instances x 1000 random feasible precoders per tag, worst relative margin {worst:.3e}"),
    );
}

fn sdr_constraint(h: &[Complex64], f: &CMatrix) -> f64 {
    let a = vecops::conj(h);
    vecops::dot_h(&a, &f.matvec(&a)).re
}

/// Best objective over `F = p_t [[t, z], [z*, 1 − t]]` on a 100³ grid in
/// `(t, |z|, arg z)`.
fn sdr_grid_oracle(h: &[Vec<Complex64>], w: &[f64], p_t: f64) -> f64 {
    let steps = 100;
    let mut best: f64 = 0.0;
    for i in 0..steps {
        let t = (i as f64 + 0.5) / steps as f64;
        let rmax = (t * (1.0 - t)).sqrt();
        for j in 0..steps {
            let r = rmax * j as f64 / (steps - 1) as f64;
            for p in 0..steps {
                let z = Complex64::from_polar(r, std::f64::consts::TAU * p as f64 / steps as f64);
                let f = CMatrix::from_vec(
                    2,
                    2,
                    vec![
                        Complex64::new(t, 0.0),
                        z,
                        z.conj(),
                        Complex64::new(1.0 - t, 0.0),
                    ],
                )
                .unwrap()
                .scale(p_t);
                let v = h
                    .iter()
                    .zip(w)
                    .map(|(hk, wk)| wk / w[0] * sdr_constraint(hk, &f))
                    .fold(f64::INFINITY, f64::min);
                best = best.max(v);
            }
        }
    }
    best
}

#[test]
fn sdr_correctness() {
    let _g = lock();
    let mut rng = ChaCha8Rng::seed_from_u64(9);

    let mut single_err: f64 = 0.0;
    for n in [2, 4, 8, 16] {
        for _ in 0..10 {
            let h = vec![sample_cgauss(&mut rng, n, 1.0).unwrap()];
            let p_t = rng.gen_range(0.5..2.0);
            let s = sdr_solve(&h, &[rng.gen_range(0.1..10.0)], p_t).unwrap();
            let a = vecops::conj(&h[0]);
            let want = CMatrix::outer(&a, &a).scale(p_t / vecops::norm_sqr(&a));
            let p_want = p_t * vecops::norm_sqr(&a);
            single_err = single_err
                .max(s.f.sub(&want).max_abs() / want.max_abs())
                .max((s.p - p_want).abs() / p_want);
        }
    }

    let mut grid_err: f64 = 0.0;
    for _ in 0..3 {
        let h: Vec<Vec<Complex64>> = (0..2)
            .map(|_| sample_cgauss(&mut rng, 2, 1.0).unwrap())
            .collect();
        let w = [1.0, rng.gen_range(0.3..3.0)];
        let s = sdr_solve(&h, &w, 1.0).unwrap();
        let oracle = sdr_grid_oracle(&h, &w, 1.0);
        grid_err = grid_err.max((s.p - oracle).abs() / oracle);
    }

    let cfg = SimConfig::default();
    let mut worst_gap: f64 = 0.0;
    let mut failures = 0;
    let mut solved = 0;
    for t in 0..100 {
        let mut trng = trial_rng(cfg.seed, 0, t);
        let real = draw_realization(&cfg, &mut trng).unwrap();
        let ce = run_ce(&cfg, &real, &mut trng).unwrap();
        for choice in [AsymptoticChoice::Low, AsymptoticChoice::High] {
            let w = asymptotic_weights(choice, &ce.h_hat, &cfg).unwrap();
            match sdr_solve(&ce.h_hat, &w, cfg.p_t) {
                Ok(s) => worst_gap = worst_gap.max(s.gap),
                Err(_) => failures += 1,
            }
            solved += 1;
        }
    }

    verdict(
        "SDR correctness",
        single_err <= 1e-6 && grid_err <= 0.01 && worst_gap <= 1e-4 && failures == 0,
        &format!(
            "single-tag error {single_err:.1e} (limit 1e-6), 2x2 grid deviation {:.3}% (limit 1%), \
             worst gap {worst_gap:.1e} over {solved} default-size solves (limit 1e-4), {failures} non-converged",
            100.0 * grid_err
        ),
    );
}

#[test]
fn joint_design_convergence() {
    let _g = lock();
    let cfg = SimConfig::default();
    let start = Instant::now();
    let trials = 200;
    let (mut iters, mut converged, mut equalized) = (0usize, 0usize, 0usize);
    for t in 0..trials {
        let mut rng = trial_rng(cfg.seed, 0, t);
        let real = draw_realization(&cfg, &mut rng).unwrap();
        let ce = run_ce(&cfg, &real, &mut rng).unwrap();
        let j = joint_design(&ce.h_hat, &cfg, &mut rng).unwrap();
        iters += j.iterations;
        converged += j.converged as usize;
        equalized += (j.design_sigma_r < cfg.epsilon) as usize;
    }
    let secs = start.elapsed().as_secs_f64();
    let mean_it = iters as f64 / trials as f64;
    let frac = converged as f64 / trials as f64;
    verdict(
        "joint design convergence",
        mean_it <= 12.0 && frac >= 0.85 && secs < 600.0,
        &format!(
            "mean iterations {mean_it:.2} (limit 12), terminated with sigma_R < 1e-3 in {:.1}% (limit 85%), \
             returned design itself below 1e-3 in {:.1}%, {secs:.1}s (limit 600s)",
            100.0 * frac,
            100.0 * equalized as f64 / trials as f64
        ),
    );
}

#[test]
fn benchmark_dominance() {
    let _g = lock();
    let cfg = SimConfig::default();
    let trials = 200;
    let results = run_point(
        &cfg,
        TrialOverrides::default(),
        &[Design::Joint, Design::Benchmark],
        trials,
        cfg.seed,
        0,
    );
    let (mut sj, mut sb, mut wins, mut valid) = (0.0, 0.0, 0usize, 0usize);
    for r in results.iter().flatten() {
        let (Some(Ok(j)), Some(Ok(b))) = (r.outcome(Design::Joint), r.outcome(Design::Benchmark))
        else {
            continue;
        };
        sj += j.min_rate;
        sb += b.min_rate;
        wins += (j.min_rate >= b.min_rate) as usize;
        valid += 1;
    }
    let ratio = sj / sb;
    let win_frac = wins as f64 / trials as f64;
    verdict(
        "benchmark dominance",
        valid == trials && ratio >= 2.0 && win_frac >= 0.9,
        &format!(
            "{valid}/{trials} valid trials, mean min-rate joint {:.4} vs benchmark {:.4} (ratio {ratio:.3}, limit 2), \
             joint >= benchmark in {:.1}% (limit 90%)",
            sj / valid as f64,
            sb / valid as f64,
            100.0 * win_frac
        ),
    );
}

fn joint_curve(cfg: &SimConfig, param: SweepParam, values: &[f64]) -> Vec<f64> {
    let spec = SweepSpec {
        param,
        values: values.to_vec(),
        trials: 200,
        designs: vec![Design::Joint],
        seed: cfg.seed,
    };
    run_sweep(&spec, cfg)
        .unwrap()
        .iter()
        .map(|r| r.get(Design::Joint).unwrap().mean_min_rate)
        .collect()
}

#[test]
fn trend_reproduction() {
    let _g = lock();
    let cfg = SimConfig::default();
    let n = joint_curve(&cfg, SweepParam::Antennas, &[4.0, 8.0, 12.0, 16.0, 20.0]);
    let m = joint_curve(&cfg, SweepParam::Tags, &[1.0, 2.0, 4.0, 8.0, 12.0]);
    let l = joint_curve(&cfg, SweepParam::FieldSide, &[20.0, 50.0, 100.0, 200.0]);
    let inc = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
    let dec = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    let gain = db(n[4] / n[0]);
    let fmt = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:.4}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    verdict(
        "trend reproduction",
        inc(&n) && dec(&m) && dec(&l) && (gain - 6.4).abs() <= 3.0,
        &format!(
            "N: [{}] increasing={}; M: [{}] decreasing={}; L: [{}] decreasing={}; N 4->20 gain {gain:.2} dB (target 6.4 +/- 3)",
            fmt(&n),
            inc(&n),
            fmt(&m),
            dec(&m),
            fmt(&l),
            dec(&l)
        ),
    );
}

type Field = fn(&CePowers) -> f64;

#[test]
fn ce_validation() {
    let _g = lock();
    let cfg = SimConfig::default();
    let snr = linspace(0.0, 40.0, 20);
    let points = validate_ce_sweep(&cfg, &snr, 500, cfg.seed).unwrap();

    // paired differences may sit up to two standard errors below zero
    let mut violations = Vec::new();
    for p in &points {
        let pairs: [(&str, Field, Field); 3] = [
            ("perfect>=nouar", |s| s.perfect, |s| s.lse_nouar),
            ("nouar>=uar", |s| s.lse_nouar, |s| s.lse_uar),
            ("uar>=isotropic", |s| s.lse_uar, |s| s.isotropic),
        ];
        for (name, a, b) in pairs {
            let (mean, se) = p.paired_diff(a, b);
            if mean + 2.0 * se < 0.0 {
                violations.push(format!("{name}@{:.1}dB", p.snr_db));
            }
        }
    }
    let high: Vec<_> = points.iter().filter(|p| p.snr_db > 20.0).collect();
    let nouar_gap = high
        .iter()
        .map(|p| {
            let m = p.mean();
            db(m.perfect / m.lse_nouar)
        })
        .fold(0.0, f64::max);
    let top = points.last().unwrap().mean();
    let uar_gap = db(top.perfect / top.lse_uar);
    let failed: usize = points.iter().map(|p| p.failed).sum();
    verdict(
        "CE validation",
        violations.is_empty() && nouar_gap <= 0.05 && (uar_gap - 0.15).abs() <= 0.1 && failed == 0,
        &format!(
            "ordering violations {:?}; worst no-UAR gap above 20 dB {nouar_gap:.4} dB (limit 0.05); \
             UAR gap at 40 dB {uar_gap:.4} dB (target 0.15 +/- 0.1); {failed} failed trials",
            violations
        ),
    );
}

#[test]
fn feasibility_suite() {
    let _g = lock();
    let strategy = (
        1usize..=8,
        1usize..=6,
        20.0f64..200.0,
        prop_oneof![Just(None), (0.0f64..40.0).prop_map(Some)],
        -170.0f64..-90.0,
        1e-4f64..0.5,
        any::<u64>(),
    );
    let mut runner = TestRunner::new_with_rng(
        PropConfig {
            cases: 48,
            failure_persistence: None,
            ..PropConfig::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    );
    let mut checked = 0usize;
    let outcome = runner.run(&strategy, |(n, m, l, snr, hu_dbm, tau_frac, seed)| {
        let base = SimConfig {
            n_antennas: n,
            n_tags: m,
            field_side: l,
            sigma2_hu: dbm_to_watt(hu_dbm),
            ..SimConfig::default()
        };
        let (cfg, _) = SweepParam::TauCFraction.apply(&base, tau_frac).unwrap();
        let ov = TrialOverrides { snr_db: snr };
        let r = run_trial(&cfg, &Design::ALL, ov, &mut trial_rng(seed, 0, 0)).unwrap();
        for (d, o) in &r.outcomes {
            if let Ok(o) = o {
                prop_assert!(
                    o.design.is_feasible(cfg.p_t, 1e-9),
                    "{d} infeasible, power {}",
                    o.design.power()
                );
            }
        }
        Ok(())
    });
    // the designs returned by the other sweeps
    let cfg = SimConfig::default();
    for r in run_point(
        &cfg,
        TrialOverrides::default(),
        &Design::ALL,
        20,
        cfg.seed,
        0,
    )
    .iter()
    .flatten()
    {
        for (_, o) in &r.outcomes {
            let o = o.as_ref().unwrap();
            assert!(o.design.is_feasible(cfg.p_t, 1e-9));
            checked += 1;
        }
    }
    verdict(
        "feasibility suite",
        outcome.is_ok(),
        &format!(
            "48 random configurations x 5 designs and {checked} default-config designs; {:?}",
            outcome.err()
        ),
    );
}
