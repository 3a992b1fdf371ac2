//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so every line is printed even
//! when earlier criteria fail; the process exits non-zero if any fails.

use std::path::PathBuf;
use std::time::Instant;

use pattern_locate::bounds::{distance_bias, fim, fim_inverse, BiasModel, CrlbReport};
use pattern_locate::channel::{model_rssi_dbm, sample_measurements};
use pattern_locate::config::Config;
use pattern_locate::estimators::{
    estimate, estimate_mle, locate_unknown_receiver, profile_distance, EstimatorConfig, Knowns, MleSearch,
    SimilarityMode,
};
use pattern_locate::montecarlo::{mean_se, run_sweep, run_sweep_with_jobs, SweepResult, TrialError};
use pattern_locate::solver::GridSpec;
use pattern_locate::{AngleDeg, Method, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn preset(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../presets").join(name)
}

fn run_preset(name: &str) -> SweepResult {
    let config = Config::load(preset(name), &[]).expect("preset parses");
    run_sweep(&config.sweep().expect("preset sweep config")).expect("preset sweep runs")
}

/// Mean and standard error of `b - a` over trials where both succeeded.
fn paired_gap(a: &[TrialError], b: &[TrialError], theta: bool) -> (f64, f64) {
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .filter_map(|(x, y)| match (x, y) {
            (Some(x), Some(y)) => Some(if theta { y.theta - x.theta } else { y.d - x.d }),
            _ => None,
        })
        .collect();
    mean_se(&diffs)
}

/// `next` is no worse than `prev` beyond two combined standard errors.
fn decreasing_within_2se(prev: (f64, f64), next: (f64, f64)) -> bool {
    next.0 - prev.0 < 2.0 * (prev.1 * prev.1 + next.1 * next.1).sqrt()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let cfg = EstimatorConfig::default();
    let mut worst: (f64, f64, String) = (0.0, 0.0, String::new());
    for _ in 0..50 {
        let d0 = rng.random_range(0.5..5.0);
        let t0 = rng.random_range(-70.0..70.0);
        let s = Scenario::reference().with_sigma(0.0).with_position(d0, AngleDeg::new(t0));
        let m = sample_measurements(&s, 0).unwrap();
        let k = Knowns::from_scenario(&s).unwrap();
        for method in [Method::EqSolve, Method::Cid, Method::Mle] {
            match estimate(method, &m, &k, Some(0.0), &cfg) {
                Ok(e) => {
                    let (ed, et) = ((e.d_hat - d0).abs(), (e.theta_hat - t0).abs());
                    if ed / 1e-3 > worst.0 / 1e-3 || et / 1e-2 > worst.1 / 1e-2 {
                        worst = (worst.0.max(ed), worst.1.max(et), format!("{method} at ({d0:.3}, {t0:.2}°)"));
                    }
                }
                Err(e) => return outcome(false, format!("{method} failed at ({d0:.3}, {t0:.2}°): {e}")),
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst.0 < 1e-3 && worst.1 < 1e-2 && secs < 30.0,
        format!(
            "max |Δd| = {:.2e} m, max |Δθ| = {:.2e}° (worst: {}), {secs:.1} s",
            worst.0, worst.1, worst.2
        ),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let s = Scenario::reference().with_sigma(2.0).with_position(2.0, AngleDeg::new(10.0));
    let k = Knowns::from_scenario(&s).unwrap();
    let trials = 100_000u64;
    let mut sum = 0.0;
    for seed in 0..trials {
        let m = sample_measurements(&s, seed).unwrap();
        sum += profile_distance(&m, &k, 10.0).unwrap();
    }
    let ratio = sum / trials as f64 / 2.0;
    let factor = distance_bias(&s);
    let rel = (ratio - factor).abs() / factor;
    let secs = start.elapsed().as_secs_f64();
    outcome(
        rel < 1e-3 && secs < 60.0,
        format!("E[d̂]/d₀ = {ratio:.6}, closed form {factor:.6}, rel. gap {rel:.2e}, {secs:.1} s"),
    )
}

fn criterion_3() -> Outcome {
    // closed-form inverse against explicit inversion on a 5×4×5 lattice
    let mut worst_inv: f64 = 0.0;
    for sigma in [0.5, 1.0, 2.0, 3.0, 4.0] {
        for d in [0.5, 1.0, 2.5, 5.0] {
            for theta in [-60.0, -30.0, 0.0, 25.0, 55.0] {
                let s = Scenario::reference().with_sigma(sigma);
                let t = AngleDeg::new(theta);
                let closed = fim_inverse(&s, d, t).unwrap();
                let explicit = fim(&s, d, t).unwrap().inverse().unwrap();
                for r in 0..2 {
                    for c in 0..2 {
                        let (a, b) = (closed.get(r, c), explicit.get(r, c));
                        worst_inv = worst_inv.max((a - b).abs() / a.abs().max(b.abs()));
                    }
                }
            }
        }
    }

    // FIM against the Monte-Carlo mean of the negative Hessian
    let (d, theta, sigma) = (2.0, 20.0, 2.0);
    let s = Scenario::reference().with_sigma(sigma).with_position(d, AngleDeg::new(theta));
    let k = Knowns::from_scenario(&s).unwrap();
    let j = fim(&s, d, AngleDeg::new(theta)).unwrap();
    let ll = |m: &pattern_locate::MeasurementSet, dd: f64, tr: f64| -> f64 {
        m.samples
            .iter()
            .map(|x| {
                let g = k.tx_pattern.gain(AngleDeg::from_radians(tr + x.delta_phi.radians())).unwrap();
                let r = x.rssi_dbm - model_rssi_dbm(k.a_squared, g, k.rx_gain, k.path_loss_n, dd);
                -r * r / (2.0 * sigma * sigma)
            })
            .sum()
    };
    let (hd, ht) = (1e-4 * d, 1e-4);
    let t0 = theta.to_radians();
    let trials = 100_000u64;
    let mut acc = [[0.0; 2]; 2];
    for seed in 0..trials {
        let m = sample_measurements(&s, seed).unwrap();
        let f = |a: f64, b: f64| ll(&m, d + a, t0 + b);
        let f00 = f(0.0, 0.0);
        let h11 = (f(hd, 0.0) - 2.0 * f00 + f(-hd, 0.0)) / (hd * hd);
        let h22 = (f(0.0, ht) - 2.0 * f00 + f(0.0, -ht)) / (ht * ht);
        let h12 = (f(hd, ht) - f(hd, -ht) - f(-hd, ht) + f(-hd, -ht)) / (4.0 * hd * ht);
        acc[0][0] -= h11;
        acc[1][1] -= h22;
        acc[0][1] -= h12;
    }
    let n = trials as f64;
    let mc = [acc[0][0] / n, acc[0][1] / n, acc[1][1] / n];
    let an = [j.get(0, 0), j.get(0, 1), j.get(1, 1)];
    let worst_fim = mc
        .iter()
        .zip(an)
        .map(|(m, a)| (m - a).abs() / a.abs())
        .fold(0.0, f64::max);
    outcome(
        worst_inv < 1e-10 && worst_fim < 0.02,
        format!(
            "closed-form vs explicit inverse: max rel {worst_inv:.1e} over 100 points; \
             FIM vs MC Hessian: J11 {:.4}/{:.4}, J12 {:.4}/{:.4}, J22 {:.4}/{:.4}, max rel {worst_fim:.2e}",
            an[0], mc[0], an[1], mc[1], an[2], mc[2]
        ),
    )
}

fn criterion_4(r: &SweepResult) -> Outcome {
    let mut failures = Vec::new();
    for (ai, info) in r.axis_info.iter().enumerate() {
        let snr = info.axis_value;
        let errs = |m| r.trial_errors(ai, m);
        for (better, worse) in [(Method::Mle, Method::Cid), (Method::Cid, Method::EqSolve)] {
            for (theta, name) in [(false, "d"), (true, "θ")] {
                let (gap, se) = paired_gap(&errs(better), &errs(worse), theta);
                if !(gap > 2.0 * se) {
                    failures.push(format!("{better}<{worse} {name} @{snr}dB (gap {gap:.3e} ± {se:.1e})"));
                }
            }
        }
    }
    for m in [Method::EqSolve, Method::Cid, Method::Mle] {
        let s = r.series(m);
        for w in s.windows(2) {
            if !(w[1].mse_d < w[0].mse_d && w[1].mse_theta < w[0].mse_theta) {
                failures.push(format!("{m} not decreasing {}→{} dB", w[0].axis_value, w[1].axis_value));
            }
        }
    }
    let at10 = |m| r.row(10.0, m).map(|x| (x.mse_d, x.mse_theta)).unwrap_or_default();
    let summary = format!(
        "@10 dB MSE d/θ: mle {:.4}/{:.2}, cid {:.4}/{:.2}, eqsolve {:.4}/{:.2}",
        at10(Method::Mle).0,
        at10(Method::Mle).1,
        at10(Method::Cid).0,
        at10(Method::Cid).1,
        at10(Method::EqSolve).0,
        at10(Method::EqSolve).1
    );
    if failures.is_empty() {
        outcome(true, summary)
    } else {
        outcome(false, format!("{summary}; violations: {}", failures.join("; ")))
    }
}

fn criterion_5(r: &SweepResult) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for row in r.series(Method::Mle).into_iter().filter(|x| x.axis_value >= 10.0) {
        let ratio = row.mse_theta / row.crlb_theta_deg2;
        let within = (0.5..=2.0).contains(&ratio);
        let valid = row.mse_theta >= row.crlb_theta_deg2 - 3.0 * row.se_mse_theta;
        ok &= within && valid;
        parts.push(format!(
            "{} dB: {:.3}/{:.3} deg² (ratio {ratio:.3})",
            row.axis_value, row.mse_theta, row.crlb_theta_deg2
        ));
    }
    outcome(ok, format!("MLE θ MSE / biased CRLB: {}", parts.join(", ")))
}

/// Methods whose MSE fails to fall along `order`. With `within_2se` a rise
/// smaller than two combined standard errors is tolerated; otherwise every
/// step must be a strict decrease.
fn trend_failures(r: &SweepResult, order: &[usize], within_2se: bool) -> Vec<String> {
    let falls = |a: (f64, f64), b: (f64, f64)| {
        if within_2se {
            decreasing_within_2se(a, b)
        } else {
            b.0 < a.0
        }
    };
    let mut failures = Vec::new();
    for m in [Method::EqSolve, Method::Cid, Method::Mle] {
        let s = r.series(m);
        for w in order.windows(2) {
            let (a, b) = (s[w[0]], s[w[1]]);
            if !falls((a.mse_d, a.se_mse_d), (b.mse_d, b.se_mse_d)) {
                failures.push(format!("{m} d {}→{}", a.axis_value, b.axis_value));
            }
            if !falls((a.mse_theta, a.se_mse_theta), (b.mse_theta, b.se_mse_theta)) {
                failures.push(format!("{m} θ {}→{}", a.axis_value, b.axis_value));
            }
        }
    }
    failures
}

fn criterion_6() -> Outcome {
    let r = run_preset("fig3.toml");
    let order: Vec<usize> = (0..r.axis_info.len()).collect();
    let mut failures = trend_failures(&r, &order, true);
    let s = r.series(Method::Mle);
    for w in s.windows(2) {
        if !(w[1].crlb_d < w[0].crlb_d && w[1].crlb_theta_deg2 < w[0].crlb_theta_deg2) {
            failures.push(format!("CRLB not decreasing {}→{}", w[0].axis_value, w[1].axis_value));
        }
    }
    let first = s[0];
    let last = s[s.len() - 1];
    let summary = format!(
        "MLE θ MSE {:.2}→{:.2} deg², CRLB θ {:.2}→{:.2} deg² over N = {}…{}",
        first.mse_theta, last.mse_theta, first.crlb_theta_deg2, last.crlb_theta_deg2, first.axis_value, last.axis_value
    );
    if failures.is_empty() {
        outcome(true, summary)
    } else {
        outcome(false, format!("{summary}; violations: {}", failures.join(", ")))
    }
}

fn criterion_7() -> Outcome {
    let r = run_preset("fig4.toml");
    let mut order: Vec<usize> = (0..r.axis_info.len()).collect();
    order.sort_by(|&a, &b| r.axis_info[a].median_g_variance.total_cmp(&r.axis_info[b].median_g_variance));
    let failures = trend_failures(&r, &order, false);
    let g: Vec<String> = order
        .iter()
        .map(|&i| format!("{:.3}", r.axis_info[i].median_g_variance))
        .collect();
    let summary = format!("g_variance order [{}] rad⁻²", g.join(", "));
    if failures.is_empty() {
        outcome(true, summary)
    } else {
        outcome(false, format!("{summary}; violations: {}", failures.join(", ")))
    }
}

fn criterion_8() -> Outcome {
    let grid = GridSpec::default();
    let mut max_dev: f64 = 0.0;
    let mut reference: Option<(Vec<f64>, f64)> = None;
    let mut crlb_dev: f64 = 0.0;
    for d0 in [1.0, 2.0, 4.0] {
        let s = Scenario::reference().with_sigma(2.0).with_position(d0, AngleDeg::new(15.0));
        let k = Knowns::from_scenario(&s).unwrap();
        let thetas: Vec<f64> = (0..200u64)
            .map(|seed| {
                let m = sample_measurements(&s, seed).unwrap();
                estimate_mle(&m, &k, 2.0, &grid, MleSearch::Profile).unwrap().theta_hat
            })
            .collect();
        let crlb = CrlbReport::compute(&s, d0, s.true_theta, &BiasModel::Analytic)
            .unwrap()
            .crlb_theta_rad2();
        match &reference {
            None => reference = Some((thetas, crlb)),
            Some((t0, c0)) => {
                for (a, b) in t0.iter().zip(&thetas) {
                    max_dev = max_dev.max((a - b).abs());
                }
                crlb_dev = crlb_dev.max((crlb - c0).abs() / c0);
            }
        }
    }
    outcome(
        max_dev < 1e-6 && crlb_dev < 1e-12,
        format!("max θ̂ deviation {max_dev:.1e}° over 200 seeds × d₀ ∈ {{1,2,4}}; crlb_theta rel. deviation {crlb_dev:.1e}"),
    )
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let line = GridSpec::default().theta_line();
    let baseline = 0.5;
    let mut worst: (f64, f64) = (0.0, 0.0);
    let mut invariance: f64 = 0.0;
    let mut done = 0;
    while done < 20 {
        let d0 = rng.random_range(0.5..5.0);
        let t0 = rng.random_range(-70.0..70.0);
        let first = Scenario::reference().with_sigma(0.0).with_position(d0, AngleDeg::new(t0));
        let second = first.translated(baseline);
        let t1 = second.true_theta.degrees();
        // keep geometries whose second bearing stays in the search range and
        // is not nearly collinear with the baseline
        if !(-70.0..=70.0).contains(&t1) || (t1 - t0).abs() < 2.0 {
            continue;
        }
        done += 1;
        let solve = |a: &Scenario, b: &Scenario| {
            locate_unknown_receiver(
                &sample_measurements(a, 1).unwrap(),
                &sample_measurements(b, 2).unwrap(),
                &a.tx_pattern,
                &line,
                SimilarityMode::LeastSquares,
                baseline,
            )
        };
        let fix = match solve(&first, &second) {
            Ok(f) => f,
            Err(e) => return outcome(false, format!("failed at ({d0:.3}, {t0:.2}°): {e}")),
        };
        worst.0 = worst.0.max((fix.d0 - d0).abs());
        worst.1 = worst.1.max((fix.theta0.theta - t0).abs());
        let mut loud_a = first.clone();
        loud_a.rx_pattern = first.rx_pattern.scaled(1e3).unwrap();
        let mut loud_b = second.clone();
        loud_b.rx_pattern = second.rx_pattern.scaled(1e3).unwrap();
        let loud = solve(&loud_a, &loud_b).unwrap();
        invariance = invariance
            .max((loud.d0 - fix.d0).abs())
            .max((loud.theta0.theta - fix.theta0.theta).abs());
    }
    outcome(
        worst.0 < 1e-3 && worst.1 < 1e-2 && invariance == 0.0,
        format!(
            "20 geometries, baseline 0.5 m: max |Δd| {:.1e} m, max |Δθ| {:.1e}°, G_R×10³ change {invariance:.1e}",
            worst.0, worst.1
        ),
    )
}

fn criterion_10() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for name in ["fig2.toml", "fig3.toml", "fig4.toml"] {
        let config = Config::load(preset(name), &["trials=100".into()]).unwrap().sweep().unwrap();
        let a = run_sweep_with_jobs(&config, 1).unwrap();
        let b = run_sweep_with_jobs(&config, 3).unwrap();
        let same = a.to_csv() == b.to_csv() && a.axis_csv() == b.axis_csv();
        ok &= same;
        parts.push(format!("{name} {}", if same { "identical" } else { "DIFFERENT" }));
    }
    // simulate path: the same seed gives the same measurement CSV
    let s = Scenario::reference();
    let same = sample_measurements(&s, 77).unwrap().to_csv_string() == sample_measurements(&s, 77).unwrap().to_csv_string();
    ok &= same;
    parts.push(format!("measurements {}", if same { "identical" } else { "DIFFERENT" }));
    outcome(ok, format!("reruns with 1 vs 3 workers: {}", parts.join(", ")))
}

fn main() {
    // optional positional arguments select criteria by number, e.g. `-- 8 9`
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let selected = |n: u32| only.is_empty() || only.contains(&n);

    let mut any_failed = false;
    let mut report = |label: &str, o: Outcome| {
        any_failed |= !o.pass;
        println!("[{}] {label}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    };
    let simple: [(u32, &str, fn() -> Outcome); 3] = [
        (1, "1 noiseless exactness", criterion_1),
        (2, "2 distance-bias closed form", criterion_2),
        (3, "3 CRLB closed form vs numeric FIM", criterion_3),
    ];
    for (n, label, f) in simple {
        if selected(n) {
            report(label, f());
        }
    }
    // the N = 8 / 4° sweep is shared by the ordering and CRLB criteria
    if selected(4) || selected(5) {
        let r = run_preset("fig2.toml");
        if selected(4) {
            report("4 estimator ordering vs SNR", criterion_4(&r));
        }
        if selected(5) {
            report("5 MLE near biased CRLB", criterion_5(&r));
        }
    }
    let rest: [(u32, &str, fn() -> Outcome); 5] = [
        (6, "6 rotation-count monotonicity", criterion_6),
        (7, "7 g-variance trend", criterion_7),
        (8, "8 bearing estimate independent of distance", criterion_8),
        (9, "9 unknown-receiver pipeline", criterion_9),
        (10, "10 determinism", criterion_10),
    ];
    for (n, label, f) in rest {
        if selected(n) {
            report(label, f());
        }
    }

    if any_failed {
        std::process::exit(1);
    }
}
