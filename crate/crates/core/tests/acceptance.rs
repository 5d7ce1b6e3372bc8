//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line per
//! criterion and exits non-zero if any fails.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use cfps::cfps::{cfps_from_ranking, exchange_count, CombineMode};
use cfps::curvature::{self, CurvatureField};
use cfps::fps::{fps_full_ranking, fps_select};
use cfps::index::NeighborIndex;
use cfps::metrics::{chamfer_distance, curvature_retention, f1_score};
use cfps::policy::train::log_prob_gradient;
use cfps::policy::{
    beta_log_prob, beta_mean, beta_variance, policy_step, reinforce_update, sample_beta,
    BetaPolicy, CurvatureSummary, PeakReward, TrainState,
};
use cfps::synth::{gen_cylinder, gen_plane, gen_sphere, gen_torus};
use cfps::PointCloud;
use common::*;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within_budget(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn fps_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = rng(1);
    let mut mismatches = 0;
    for _ in 0..200 {
        let n = rng.random_range(1..=64);
        let cloud = random_cloud(&mut rng, n);
        let seed = rng.random_range(0..n);
        let ranking = fps_full_ranking(&cloud, seed).unwrap();
        if ranking.order != brute_fps(&cloud, seed) {
            mismatches += 1;
        }
    }
    let t = start.elapsed();
    outcome(
        mismatches == 0 && within_budget(t, 10.0),
        format!(
            "{mismatches} mismatches over 200 clouds in {:.2} s",
            t.as_secs_f64()
        ),
    )
}

fn curvature_suite() -> Outcome {
    let start = Instant::now();
    let estimate =
        |cloud: &PointCloud| curvature::estimate(cloud, &NeighborIndex::build(cloud), 16).unwrap();

    let sphere = gen_sphere(1.0, 2048, 11);
    let h = estimate(&sphere.cloud).h_raw;
    let sphere_err = median(&h.iter().map(|x| (x - 1.0).abs()).collect::<Vec<_>>());

    let cyl = gen_cylinder(1.0, 2.0, 2048, 12);
    let h = estimate(&cyl.cloud).h_raw;
    let interior: Vec<f64> = cyl
        .cloud
        .positions()
        .iter()
        .zip(&h)
        .filter(|(p, _)| p.z.abs() < 0.8)
        .map(|(_, x)| (x - 0.5).abs() / 0.5)
        .collect();
    let cyl_err = median(&interior);

    let plane = gen_plane(2.0, 2048, 13, 0.0);
    let h = estimate(&plane.cloud).h_raw;
    let plane_max = plane
        .cloud
        .positions()
        .iter()
        .zip(&h)
        .filter(|(p, _)| p.x.abs() < 0.8 && p.y.abs() < 0.8)
        .map(|(_, x)| *x)
        .fold(0.0, f64::max);

    let torus = gen_torus(2.0, 0.5, 2048, 14);
    let rho = spearman(&estimate(&torus.cloud).h_raw, &torus.h_true);

    let t = start.elapsed();
    let pass = sphere_err < 0.05
        && cyl_err < 0.10
        && plane_max < 1e-6
        && rho > 0.9
        && within_budget(t, 30.0);
    outcome(
        pass,
        format!(
            "sphere median rel err {sphere_err:.4}, cylinder {cyl_err:.4}, plane max {plane_max:.1e}, \
             torus Spearman {rho:.4}, {:.2} s",
            t.as_secs_f64()
        ),
    )
}

/// Joint rank computed directly from the definition.
fn reference_j(h_norm: &[f64], rank_of: &[usize], mode: CombineMode) -> Vec<f64> {
    let n = rank_of.len();
    let s = |i: usize| {
        if n > 1 {
            rank_of[i] as f64 / (n - 1) as f64
        } else {
            0.0
        }
    };
    (0..n)
        .map(|i| match mode {
            CombineMode::Additive => h_norm[i] + s(i),
            CombineMode::Multiplicative => h_norm[i] * s(i),
        })
        .collect()
}

fn random_field(rng: &mut rand_chacha::ChaCha8Rng, n: usize) -> CurvatureField {
    let coarse = rng.random_bool(0.3);
    let h: Vec<f64> = (0..n)
        .map(|_| {
            let x = rng.random::<f64>() * 3.0;
            if coarse {
                x.round()
            } else {
                x
            }
        })
        .collect();
    CurvatureField::from_raw(h, 0).unwrap()
}

fn cfps_invariants() -> Outcome {
    let start = Instant::now();
    let mut rng = rng(3);
    let mut degenerate_failures = 0;
    for _ in 0..100 {
        let n = rng.random_range(1..=256);
        let cloud = random_cloud(&mut rng, n);
        let curv = random_field(&mut rng, n);
        let k = rng.random_range(1..=n);
        let ranking = fps_full_ranking(&cloud, 0).unwrap();
        let mode = if rng.random_bool(0.5) {
            CombineMode::Additive
        } else {
            CombineMode::Multiplicative
        };
        let got = cfps_from_ranking(&ranking, &curv, k, 0.0, mode).unwrap();
        let want = fps_select(&ranking, k).unwrap();
        if got.selection.sorted_indices() != want.sorted_indices() {
            degenerate_failures += 1;
        }
    }

    let mut fuzz_failures = 0;
    for _ in 0..500 {
        let n = rng.random_range(1..=512);
        let cloud = random_cloud(&mut rng, n);
        let curv = random_field(&mut rng, n);
        let k = rng.random_range(1..=n);
        let g = if rng.random_bool(0.1) {
            1.0
        } else {
            rng.random::<f64>()
        };
        let mode = if rng.random_bool(0.5) {
            CombineMode::Additive
        } else {
            CombineMode::Multiplicative
        };
        let seed = rng.random_range(0..n);
        let ranking = fps_full_ranking(&cloud, seed).unwrap();
        let r = cfps_from_ranking(&ranking, &curv, k, g, mode).unwrap();

        let j = reference_j(&curv.h_norm, &ranking.rank_of, mode);
        let ne = ((g * n as f64).floor() as usize).min(k).min(n - k);
        let mut core: Vec<usize> = ranking.order[..k].to_vec();
        let mut rest: Vec<usize> = ranking.order[k..].to_vec();
        core.sort_by(|&a, &b| j[a].total_cmp(&j[b]).then(a.cmp(&b)));
        rest.sort_by(|&a, &b| j[b].total_cmp(&j[a]).then(a.cmp(&b)));
        let out = &core[..ne];
        let inn = &rest[..ne];
        let mut expected: Vec<usize> = ranking.order[..k]
            .iter()
            .copied()
            .filter(|i| !out.contains(i))
            .collect();
        expected.extend_from_slice(inn);

        let mut sorted_out = r.swapped_out.clone();
        sorted_out.sort_unstable();
        let mut want_out = out.to_vec();
        want_out.sort_unstable();
        let mut sorted_in = r.swapped_in.clone();
        sorted_in.sort_unstable();
        let mut want_in = inn.to_vec();
        want_in.sort_unstable();

        let ok = r.selection.len() == k
            && r.n_exchange == ne
            && exchange_count(g, n, k).unwrap() == ne
            && sorted_out == want_out
            && sorted_in == want_in
            && r.selection.indices() == expected.as_slice();
        if !ok {
            fuzz_failures += 1;
        }
    }
    let t = start.elapsed();
    outcome(
        degenerate_failures == 0 && fuzz_failures == 0 && within_budget(t, 30.0),
        format!(
            "g=0 mismatches {degenerate_failures}/100, invariant failures {fuzz_failures}/500, {:.2} s",
            t.as_secs_f64()
        ),
    )
}

fn torus_uptake() -> Outcome {
    let mut retention_wins = 0;
    let mut mean_wins = 0;
    for seed in 0..20 {
        let torus = gen_torus(2.0, 0.5, 2048, 100 + seed);
        let cloud = &torus.cloud;
        let curv = curvature::estimate(cloud, &NeighborIndex::build(cloud), 16).unwrap();
        let ranking = fps_full_ranking(cloud, 0).unwrap();
        let fps = fps_select(&ranking, 256).unwrap();
        let cfps = cfps_from_ranking(&ranking, &curv, 256, 0.25, CombineMode::Additive)
            .unwrap()
            .selection;
        let mean_h = |idx: &[usize]| mean(&idx.iter().map(|&i| curv.h_raw[i]).collect::<Vec<_>>());
        if curvature_retention(&curv, &cfps).unwrap() >= curvature_retention(&curv, &fps).unwrap() {
            retention_wins += 1;
        }
        if mean_h(cfps.indices()) > mean_h(fps.indices()) {
            mean_wins += 1;
        }
    }
    outcome(
        retention_wins >= 16 && mean_wins >= 14,
        format!(
            "retention CFPS >= FPS in {retention_wins}/20, mean curvature higher in {mean_wins}/20"
        ),
    )
}

/// Components smaller than this are compared in absolute terms: central
/// differences at `h = 1e-5` carry roughly 1e-10 of rounding noise, which
/// would dominate a purely relative comparison of near-zero derivatives.
const GRADIENT_FLOOR: f64 = 1e-5;

fn gradient_check() -> Outcome {
    let start = Instant::now();
    let mut rng = rng(5);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut worst_vector: f64 = 0.0;
    for _ in 0..100 {
        let policy = BetaPolicy::init(&mut rng);
        let len = rng.random_range(2..200);
        let power = rng.random_range(0.3..3.0);
        let values: Vec<f64> = (0..len).map(|_| rng.random::<f64>().powf(power)).collect();
        let s = CurvatureSummary::from_normalized(&values);
        let g = rng.random_range(0.02..0.98);
        let analytic = log_prob_gradient(&policy, &s, g).unwrap().3;

        let logp = |p: &BetaPolicy| {
            let (a, b) = p.forward(&s).unwrap();
            beta_log_prob(a, b, g).unwrap()
        };
        let mut params = policy.into_params();
        let mut numeric_grad = Vec::with_capacity(analytic.len());
        for (i, &an) in analytic.iter().enumerate() {
            let orig = params[i];
            params[i] = orig + h;
            let up = BetaPolicy::from_params(params).unwrap();
            let f_up = logp(&up);
            params = up.into_params();
            params[i] = orig - h;
            let down = BetaPolicy::from_params(params).unwrap();
            let f_down = logp(&down);
            params = down.into_params();
            params[i] = orig;
            let numeric = (f_up - f_down) / (2.0 * h);
            let rel = (an - numeric).abs() / an.abs().max(numeric.abs()).max(GRADIENT_FLOOR);
            worst = worst.max(rel);
            numeric_grad.push(numeric);
        }
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff: Vec<f64> = analytic
            .iter()
            .zip(&numeric_grad)
            .map(|(a, n)| a - n)
            .collect();
        worst_vector = worst_vector.max(norm(&diff) / norm(&analytic).max(norm(&numeric_grad)));
    }
    let t = start.elapsed();
    outcome(
        worst < 1e-4 && within_budget(t, 10.0),
        format!(
            "max componentwise relative error {worst:.2e} (floor {GRADIENT_FLOOR:.0e}), \
             max vector relative error {worst_vector:.2e}, 100 triples, {:.2} s",
            t.as_secs_f64()
        ),
    )
}

fn beta_machinery() -> Outcome {
    let a = beta_log_prob(2.0, 2.0, 0.5).unwrap();
    let b = beta_log_prob(2.0, 5.0, 0.2).unwrap();
    let c = beta_log_prob(1.0, 1.0, 0.37).unwrap();
    let err_a = (a - 1.5f64.ln()).abs();
    let err_b = (b - (30.0 * 0.2 * 0.8f64.powi(4)).ln()).abs();
    let err_c = c.abs();
    let mut rng = rng(6);
    let draws: Vec<f64> = (0..100_000)
        .map(|_| sample_beta(2.0, 2.0, &mut rng))
        .collect();
    let m = mean(&draws);
    let v = draws.iter().map(|x| (x - m).powi(2)).sum::<f64>() / draws.len() as f64;
    let pass = err_a < 1e-9
        && err_b < 1e-9
        && err_c < 1e-9
        && (m - 0.5).abs() < 0.01
        && (v - 0.05).abs() < 0.005;
    outcome(
        pass,
        format!(
            "log-density errors {err_a:.1e}, {err_b:.1e}, {err_c:.1e}; Beta(2,2) sample mean {m:.4}, variance {v:.4}"
        ),
    )
}

fn bandit() -> Outcome {
    let start = Instant::now();
    let steps = 5000;
    let summary = CurvatureSummary::uniform();
    let reward = PeakReward { peak: 0.3 };
    let mut converged = 0;
    let mut max_exponent: f64 = 0.0;
    let mut tails = Vec::new();
    for seed in 0..10 {
        let mut rng = rng(seed);
        let mut policy = BetaPolicy::init(&mut rng);
        let mut state = TrainState::new(2e-2, seed);
        assert_eq!(state.decay, 0.99);
        let mut means = Vec::with_capacity(steps);
        let mut regret = Vec::with_capacity(steps);
        let mut cumulative = 0.0;
        for _ in 0..steps {
            let rec = policy_step(&mut policy, &mut state, &mut rng, &summary, |g| {
                Ok(reward.at(g))
            })
            .unwrap();
            let m = beta_mean(rec.alpha, rec.beta);
            cumulative += beta_variance(rec.alpha, rec.beta) + (m - 0.3).powi(2);
            means.push(m);
            regret.push(cumulative);
        }
        let tail = &means[steps - steps / 10..];
        let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if lo >= 0.25 && hi <= 0.35 {
            converged += 1;
        }
        tails.push(format!("[{lo:.3},{hi:.3}]"));
        let xs: Vec<f64> = (1..=steps).map(|t| (t as f64).ln()).collect();
        let ys: Vec<f64> = regret.iter().map(|r| r.ln()).collect();
        max_exponent = max_exponent.max(slope(&xs, &ys));
    }
    let t = start.elapsed();
    outcome(
        converged >= 8 && max_exponent < 1.0 && within_budget(t, 60.0),
        format!(
            "{converged}/10 seeds within 0.3 +/- 0.05 over the last 500 steps, \
             largest regret exponent {max_exponent:.3}, {:.2} s; tails {}",
            t.as_secs_f64(),
            tails.join(" ")
        ),
    )
}

fn baseline_recursion() -> Outcome {
    let s = CurvatureSummary::from_normalized(&[0.1, 0.5, 0.9]);
    let mut worst: f64 = 0.0;
    for &r in &[1.0, -0.37, 4.2, -1e-3] {
        for &t in &[1usize, 7, 100, 1000] {
            let mut policy = BetaPolicy::zeros();
            let mut state = TrainState::new(2e-2, 0);
            for _ in 0..t {
                reinforce_update(&mut policy, &mut state, &s, 0.4, r).unwrap();
            }
            let expected = r * (1.0 - 0.99f64.powi(t as i32));
            worst = worst.max((state.baseline - expected).abs());
        }
    }
    outcome(
        worst <= 1e-12,
        format!("max |b - R(1 - lambda^t)| = {worst:.1e}"),
    )
}

fn metrics_oracle() -> Outcome {
    let mut rng = rng(9);
    let mut mismatches = 0;
    for _ in 0..100 {
        let (na, nb) = (rng.random_range(1..=256), rng.random_range(1..=256));
        let a = random_cloud(&mut rng, na);
        let b = random_cloud(&mut rng, nb);
        let t = rng.random_range(0.01..0.5);
        if chamfer_distance(&a, &b) != brute_chamfer(&a, &b) {
            mismatches += 1;
        }
        if f1_score(&a, &b, t).unwrap() != brute_f1(&a, &b, t) {
            mismatches += 1;
        }
        if chamfer_distance(&a, &a) != 0.0 {
            mismatches += 1;
        }
    }
    let a = PointCloud::from_xyz(&[[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]]).unwrap();
    let b = PointCloud::from_xyz(&[[1.0, 0.0, 0.0]]).unwrap();
    let hand = chamfer_distance(&a, &b);
    outcome(
        mismatches == 0 && hand == 2.0,
        format!("{mismatches} mismatches against exhaustive references, 3-point chamfer = {hand}"),
    )
}

fn run_pipeline(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let bin = env!("CARGO_BIN_EXE_cfps");
    let steps: &[&[&str]] = &[
        &[
            "synth",
            "--shape",
            "torus",
            "--n",
            "2048",
            "-o",
            "torus.ply",
            "--oracle",
            "torus.h",
        ],
        &["curvature", "-i", "torus.ply", "-o", "torus.curv"],
        &[
            "sample",
            "-i",
            "torus.ply",
            "-o",
            "fps.ply",
            "--method",
            "fps",
            "--k",
            "256",
            "--seed-index",
            "random",
        ],
        &[
            "sample",
            "-i",
            "torus.ply",
            "-o",
            "cfps.ply",
            "--k",
            "256",
            "--ratio",
            "0.25",
            "--seed-index",
            "random",
        ],
        &[
            "train",
            "--synthetic-reward",
            "peak=0.3",
            "--epochs",
            "200",
            "--checkpoint-out",
            "policy.json",
            "--log",
            "train.jsonl",
        ],
        &[
            "sample",
            "-i",
            "torus.ply",
            "-o",
            "learned.xyz",
            "--k",
            "256",
            "--policy",
            "policy.json",
        ],
        &[
            "eval",
            "--gt",
            "torus.ply",
            "--pred",
            "fps.ply",
            "--pred",
            "cfps.ply",
            "--pred",
            "learned.xyz",
        ],
    ];
    let mut outputs = Vec::new();
    for (i, args) in steps.iter().enumerate() {
        let out = Command::new(bin)
            .args(*args)
            .current_dir(dir)
            .env("CFPS_SEED", "2024")
            .output()
            .expect("binary runs");
        assert!(
            out.status.success(),
            "step {args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        outputs.push((format!("stdout of step {i}"), out.stdout));
    }
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    for f in files {
        let name = f.file_name().unwrap().to_string_lossy().into_owned();
        outputs.push((name, std::fs::read(&f).unwrap()));
    }
    outputs
}

fn end_to_end_determinism() -> Outcome {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let a = run_pipeline(first.path());
    let b = run_pipeline(second.path());
    let differing: Vec<&str> = a
        .iter()
        .zip(&b)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| x.0.as_str())
        .collect();
    outcome(
        a.len() == b.len() && differing.is_empty(),
        format!("{} artifacts compared, differing: {differing:?}", a.len()),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("FPS oracle equivalence", fps_oracle),
        ("curvature analytic suite", curvature_suite),
        ("CFPS degeneracy and invariants", cfps_invariants),
        ("torus curvature uptake", torus_uptake),
        ("policy gradient correctness", gradient_check),
        ("Beta machinery", beta_machinery),
        ("bandit convergence", bandit),
        ("baseline recursion", baseline_recursion),
        ("metrics oracle equivalence", metrics_oracle),
        ("end-to-end determinism", end_to_end_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !result.pass {
            failed += 1;
        }
        let verdict = if result.pass { "PASS" } else { "FAIL" };
        println!("{verdict} {:>2} {name}: {}", i + 1, result.detail);
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
