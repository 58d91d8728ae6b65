//! Acceptance gate: one pass/fail line per criterion.
//!
//! Training runs are expensive (minutes to hours on one core) and bit-
//! deterministic, so finished runs are cached under target/acceptance-cache/
//! keyed by a hash of the full config. Delete the cache directory or set
//! PINN_ACCEPT_FRESH=1 to recompute everything from scratch.

use pinn_core::net::{NetworkParams, PhysicalParams};
use pinn_core::obsdata::builtin_radius_table;
use pinn_core::physics::{self, sample_collocation, total_loss, total_loss_and_grad};
use pinn_core::solver::{self, barenblatt::Barenblatt, Grid2D, SolveConfig};
use pinn_core::trainer::{self, preset, TrainConfig, TrainRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::PathBuf;

fn main() {
    let criteria: Vec<(&str, fn() -> Result<String, String>)> = vec![
        ("criterion 1: derivative correctness", c1_derivatives),
        ("criterion 2: residual identity", c2_residual_identity),
        ("criterion 3: solver oracle", c3_solver_oracle),
        ("criterion 4: synthetic recovery", c4_synthetic_recovery),
        ("criterion 5: noise robustness", c5_noise_robustness),
        ("criterion 6: real-data pipeline", c6_real_data),
        ("criterion 7: spatial mode", c7_spatial),
        ("criterion 8: v-and-a mode", c8_v_and_a),
        ("criterion 9: determinism", c9_determinism),
        ("criterion 10: loss decrease", c10_loss_decrease),
    ];
    // optional filter: criterion numbers as arguments (used to stage the
    // expensive runs; the full gate runs everything)
    let selected: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for (idx, (name, f)) in criteria.into_iter().enumerate() {
        if !selected.is_empty() && !selected.contains(&(idx + 1)) {
            continue;
        }
        match f() {
            Ok(detail) => println!("PASS {name} ({detail})"),
            Err(detail) => {
                println!("FAIL {name} ({detail})");
                failed += 1;
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------- cache

#[derive(Serialize, Deserialize)]
struct CachedRun {
    physical: Vec<f64>,
    flat_network: Vec<f64>,
    records: Vec<TrainRecord>,
}

fn cache_dir() -> PathBuf {
    if let Ok(dir) = std::env::var("PINN_ACCEPTANCE_CACHE") {
        return PathBuf::from(dir);
    }
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../target/acceptance-cache")
}

fn run_cached(tag: &str, cfg: &TrainConfig) -> Result<CachedRun, String> {
    let key = {
        let text = toml::to_string(cfg).map_err(|e| e.to_string())?;
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().take(6).map(|b| format!("{b:02x}")).collect::<String>()
    };
    let dir = cache_dir();
    let path = dir.join(format!("{tag}-{key}.json"));
    let fresh = std::env::var("PINN_ACCEPT_FRESH").is_ok();
    if !fresh {
        if let Ok(text) = std::fs::read_to_string(&path) {
            if let Ok(run) = serde_json::from_str::<CachedRun>(&text) {
                return Ok(run);
            }
        }
    }
    let out = trainer::train(cfg).map_err(|e| format!("{tag}: {e}"))?;
    let run = CachedRun {
        physical: out.phys.values.clone(),
        flat_network: out.net.flatten(),
        records: out.records,
    };
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    std::fs::write(&path, serde_json::to_string(&run).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    Ok(run)
}

fn rel_err(pred: f64, truth: f64) -> f64 {
    (pred - truth).abs() / truth.abs()
}

// ---------------------------------------------------------------- 1

/// Five input derivatives from the jet engine vs central finite differences
/// on 100 random small networks (< 1e-5), and full-loss parameter gradients
/// vs per-parameter finite differences (< 1e-4).
fn c1_derivatives() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut max_jet: f64 = 0.0;
    for trial in 0..100 {
        let net = NetworkParams::init_xavier(&[3, 6, 6, 1], 1000 + trial).unwrap();
        let p = [rng.gen::<f64>(), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let jet = net.forward_jet(p);
        let f = |q: [f64; 3]| net.forward(q);
        // Richardson-extrapolated central differences (O(h^4)) so the oracle
        // itself resolves the 1e-5 tolerance
        let d1 = |axis: usize| {
            let central = |h: f64| {
                let mut a = p;
                let mut b = p;
                a[axis] += h;
                b[axis] -= h;
                (f(a) - f(b)) / (2.0 * h)
            };
            let h = 1e-2;
            (4.0 * central(h / 2.0) - central(h)) / 3.0
        };
        let d2 = |axis: usize| {
            let central = |h: f64| {
                let mut a = p;
                let mut b = p;
                a[axis] += h;
                b[axis] -= h;
                (f(a) - 2.0 * f(p) + f(b)) / (h * h)
            };
            let h = 1e-2;
            (4.0 * central(h / 2.0) - central(h)) / 3.0
        };
        let fd = [d1(0), d1(1), d1(2), d2(1), d2(2)];
        let got = [jet.g[0], jet.g[1], jet.g[2], jet.h[0], jet.h[1]];
        for (g, d) in got.iter().zip(&fd) {
            max_jet = max_jet.max((g - d).abs() / d.abs().max(1e-6));
        }
    }
    if max_jet >= 1e-5 {
        return Err(format!("jet vs FD rel error {max_jet:.2e}"));
    }

    // full-loss gradient vs finite differences on a small problem
    let mut cfg = physics::CollocationConfig::default();
    cfg.n_interior = 25;
    cfg.n_edge = 6;
    let mut set = sample_collocation(&cfg, 3);
    let mut drng = ChaCha8Rng::seed_from_u64(4);
    set.data = (0..12)
        .map(|_| physics::DataPoint {
            t: drng.gen(),
            x: drng.gen_range(-2.0..2.0),
            y: drng.gen_range(-2.0..2.0),
            value: drng.gen::<f64>(),
        })
        .collect();
    let weights = physics::LossWeights { w1: 10.0, w2: 1.0, w3: 1.0, w4: 100.0 };
    let net = NetworkParams::init_xavier(&[3, 8, 1], 5).unwrap();
    let phys = PhysicalParams::constant_v(1.5);
    let (_, grad) = total_loss_and_grad(&net, &phys, &set, &weights).unwrap();
    let analytic: Vec<f64> = grad
        .wrt_network
        .iter()
        .chain(grad.wrt_physical.iter())
        .cloned()
        .collect();
    let flat0 = net.flatten();
    let n_net = flat0.len();
    let scale = analytic.iter().fold(0.0_f64, |a, g| a.max(g.abs()));
    let mut max_rel: f64 = 0.0;
    for i in 0..n_net + 1 {
        let h = 1e-6;
        let eval = |delta: f64| {
            let mut flat = flat0.clone();
            let mut ph = phys.clone();
            if i < n_net {
                flat[i] += delta;
            } else {
                ph.values[i - n_net] += delta;
            }
            let n = NetworkParams::unflatten(&[3, 8, 1], &flat).unwrap();
            total_loss(&n, &ph, &set, &weights).unwrap().total
        };
        let fd = (eval(h) - eval(-h)) / (2.0 * h);
        let rel = (analytic[i] - fd).abs() / fd.abs().max(1e-4 * scale);
        max_rel = max_rel.max(rel);
    }
    if max_rel >= 1e-4 {
        return Err(format!("loss gradient vs FD rel error {max_rel:.2e}"));
    }
    Ok(format!("jet {max_jet:.1e}, loss grad {max_rel:.1e}"))
}

// ---------------------------------------------------------------- 2

/// Expanded residual equals jet-evaluated u_t − Δ(u³) − g·u to 1e-10
/// relative on 1000 random evaluations.
fn c2_residual_identity() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut max_rel: f64 = 0.0;
    for trial in 0..10 {
        let net = NetworkParams::init_xavier(&[3, 16, 16, 1], 2000 + trial).unwrap();
        let phys = PhysicalParams::constant_v(rng.gen_range(0.5..3.5));
        for _ in 0..100 {
            let p = [rng.gen::<f64>(), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let expanded = physics::residual(&net, &phys, p).unwrap();
            let u = net.forward_jet(p);
            let u3 = u * u * u;
            let direct = u.g[0] - (u3.h[0] + u3.h[1]) - phys.growth_rate(p[1], p[2]) * u.v;
            max_rel = max_rel.max((expanded - direct).abs() / direct.abs().max(1e-12));
        }
    }
    if max_rel >= 1e-10 {
        return Err(format!("max rel diff {max_rel:.2e}"));
    }
    Ok(format!("max rel diff {max_rel:.1e}"))
}

// ---------------------------------------------------------------- 3

/// Barenblatt refinement order ≥ 0.8 over nx ∈ {101, 201, 401} and mass
/// drift < 0.5% while the support is interior.
fn c3_solver_oracle() -> Result<String, String> {
    let bb = Barenblatt { m: 3, c: 0.1 };
    let t0 = 1.0;
    let t1 = 2.0;
    let mut errors = Vec::new();
    let mut drifts = Vec::new();
    for nx in [101, 201, 401] {
        let grid = Grid2D::square(nx);
        let rho0 = bb.field(grid, t0);
        let mut cfg = SolveConfig::new(PhysicalParams::constant_v(0.0), t1 - t0, vec![t1 - t0]);
        cfg.m = 3;
        let fields = solver::solve(&cfg, grid, &rho0).map_err(|e| e.to_string())?;
        let end = &fields[0];
        let exact = bb.field(grid, t1);
        let l1: f64 = end
            .values
            .iter()
            .zip(&exact.values)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * grid.hx()
            * grid.hy();
        errors.push(l1);
        drifts.push(rel_err(end.mass(), rho0.mass()));
    }
    let order1 = (errors[0] / errors[1]).log2();
    let order2 = (errors[1] / errors[2]).log2();
    let order = order1.min(order2);
    if order < 0.8 {
        return Err(format!("observed order {order:.2} (errors {errors:?})"));
    }
    let max_drift = drifts.iter().cloned().fold(0.0, f64::max);
    if max_drift >= 5e-3 {
        return Err(format!("mass drift {max_drift:.2e}"));
    }
    Ok(format!("order {order:.2}, drift {max_drift:.1e}"))
}

// ---------------------------------------------------------------- 4

/// v_true = 2.0, Table-1 weights, 30000 epochs → v within 5%; the
/// trajectory at epoch 10000 (the smoke budget) must be within 15%.
fn c4_synthetic_recovery() -> Result<String, String> {
    let mut cfg = preset("synthetic-v2.0").unwrap();
    cfg.epochs = 30_000;
    let run = run_cached("c4-synthetic-v2.0", &cfg)?;
    let v = run.physical[0];
    let err = rel_err(v, 2.0);
    if err >= 0.05 {
        return Err(format!("v = {v:.4}, rel error {:.2}%", err * 100.0));
    }
    let smoke = run
        .records
        .iter()
        .find(|r| r.epoch == 10_000)
        .ok_or("no record at epoch 10000")?;
    let smoke_err = rel_err(smoke.physical[0], 2.0);
    if smoke_err >= 0.15 {
        return Err(format!("smoke (10000 epochs) rel error {:.2}%", smoke_err * 100.0));
    }
    Ok(format!(
        "v = {v:.4} ({:.2}%), smoke {:.2}%",
        err * 100.0,
        smoke_err * 100.0
    ))
}

// ---------------------------------------------------------------- 5

/// v_true = 2.1: lowest-noise preset < 5% error at 30000 epochs, and for
/// ε = 0.5 the final error is non-decreasing in σ up to a 20% slack.
fn c5_noise_robustness() -> Result<String, String> {
    let mut errs = Vec::new();
    for name in ["noise-e0.5-s0.2", "noise-e0.5-s0.5", "noise-e0.5-s1.0"] {
        let cfg = preset(name).unwrap();
        let run = run_cached(name, &cfg)?;
        errs.push(rel_err(run.physical[0], 2.1));
    }
    if errs[0] >= 0.05 {
        return Err(format!("lowest-noise error {:.2}%", errs[0] * 100.0));
    }
    for i in 1..errs.len() {
        if errs[i] < 0.8 * errs[i - 1] {
            return Err(format!(
                "errors not monotone in sigma: {:?}",
                errs.iter().map(|e| format!("{:.2}%", e * 100.0)).collect::<Vec<_>>()
            ));
        }
    }
    Ok(format!(
        "errors {}",
        errs.iter().map(|e| format!("{:.2}%", e * 100.0)).collect::<Vec<_>>().join(", ")
    ))
}

// ---------------------------------------------------------------- 6

/// real-bce for 60000 epochs from v = 2 → v ∈ [2.7, 3.5]; forward radii at
/// t = 0.875 and 1.0 within 10% of the observed 2.13 and 2.5.
fn c6_real_data() -> Result<String, String> {
    let mut cfg = preset("real-bce").unwrap();
    cfg.epochs = 60_000;
    let run = run_cached("c6-real-bce", &cfg)?;
    let v = run.physical[0];
    if !(2.7..=3.5).contains(&v) {
        return Err(format!("v = {v:.4} outside [2.7, 3.5]"));
    }
    let phys = PhysicalParams::constant_v(v);
    let radii = trainer::predict_forward(&phys, &[0.875, 1.0], 201).map_err(|e| e.to_string())?;
    let table = builtin_radius_table();
    let mut errs = Vec::new();
    for (t, r) in &radii {
        let obs = table.radius_at(*t).map_err(|e| e.to_string())?;
        let e = rel_err(*r, obs);
        if e >= 0.10 {
            return Err(format!("radius at t={t}: {r:.3} vs observed {obs} ({:.1}%)", e * 100.0));
        }
        errs.push(format!("{:.2}%", e * 100.0));
    }
    Ok(format!("v = {v:.4}, radius errors {}", errs.join(", ")))
}

// ---------------------------------------------------------------- 7

/// spatial preset: forward radii from the recovered (v1, v2) at
/// t = 0.875/1.0 within 10% of observed; no point-value requirement.
fn c7_spatial() -> Result<String, String> {
    let cfg = preset("spatial").unwrap();
    let run = run_cached("c7-spatial", &cfg)?;
    let phys = PhysicalParams::spatial(run.physical[0], run.physical[1]);
    let radii = trainer::predict_forward(&phys, &[0.875, 1.0], 201).map_err(|e| e.to_string())?;
    let table = builtin_radius_table();
    let mut errs = Vec::new();
    for (t, r) in &radii {
        let obs = table.radius_at(*t).map_err(|e| e.to_string())?;
        let e = rel_err(*r, obs);
        if e >= 0.10 {
            return Err(format!(
                "(v1,v2) = ({:.3},{:.3}); radius at t={t}: {r:.3} vs {obs} ({:.1}%)",
                run.physical[0],
                run.physical[1],
                e * 100.0
            ));
        }
        errs.push(format!("{:.2}%", e * 100.0));
    }
    Ok(format!(
        "(v1,v2) = ({:.3},{:.3}), radius errors {}",
        run.physical[0],
        run.physical[1],
        errs.join(", ")
    ))
}

// ---------------------------------------------------------------- 8

/// v-and-a: runs to completion; IC loss with the recovered a beats a = 1 by
/// ≥ 10%; forward radii within 15% of the table at held-out times.
fn c8_v_and_a() -> Result<String, String> {
    let cfg = preset("v-and-a").unwrap();
    let run = run_cached("c8-v-and-a", &cfg)?;
    let (v, a) = (run.physical[0], run.physical[1]);
    let net = NetworkParams::unflatten(&cfg.arch, &run.flat_network).map_err(|e| e.to_string())?;
    let set = sample_collocation(&cfg.collocation, cfg.seeds.sampling);
    let ic_rec = physics::loss_ic(&net, &PhysicalParams::v_and_a(v, a), &set)
        .map_err(|e| e.to_string())?;
    let ic_one = physics::loss_ic(&net, &PhysicalParams::v_and_a(v, 1.0), &set)
        .map_err(|e| e.to_string())?;
    if ic_rec > 0.9 * ic_one {
        return Err(format!("IC loss {ic_rec:.3e} with a = {a:.3} vs {ic_one:.3e} with a = 1"));
    }
    let phys = PhysicalParams::v_and_a(v, a);
    let held_out = [0.625, 0.75, 0.875, 1.0];
    let radii = trainer::predict_forward(&phys, &held_out, 201).map_err(|e| e.to_string())?;
    let table = builtin_radius_table();
    let mut worst: f64 = 0.0;
    for (t, r) in &radii {
        let obs = table.radius_at(*t).map_err(|e| e.to_string())?;
        worst = worst.max(rel_err(*r, obs));
    }
    if worst >= 0.15 {
        return Err(format!("v = {v:.4}, a = {a:.4}, worst held-out radius error {:.1}%", worst * 100.0));
    }
    Ok(format!(
        "v = {v:.4}, a = {a:.4}, IC gain {:.0}%, worst radius {:.1}%",
        (1.0 - ic_rec / ic_one) * 100.0,
        worst * 100.0
    ))
}

// ---------------------------------------------------------------- 9

/// Identical seeds reproduce trajectory.csv byte-for-byte; checkpoint
/// resume matches the uninterrupted run exactly.
fn c9_determinism() -> Result<String, String> {
    let mut cfg = preset("synthetic-v2.1").unwrap();
    cfg.arch = vec![3, 16, 1];
    cfg.collocation.n_interior = 100;
    cfg.collocation.n_edge = 20;
    cfg.n_data = 40;
    cfg.grid_n = 81;
    cfg.epochs = 200;

    let dir = std::env::temp_dir();
    let (p1, p2) = (dir.join("pinn_acc_t1.csv"), dir.join("pinn_acc_t2.csv"));
    let r1 = trainer::train(&cfg).map_err(|e| e.to_string())?;
    let r2 = trainer::train(&cfg).map_err(|e| e.to_string())?;
    trainer::write_trajectory(&p1, &r1.records, "acc").map_err(|e| e.to_string())?;
    trainer::write_trajectory(&p2, &r2.records, "acc").map_err(|e| e.to_string())?;
    let identical = std::fs::read(&p1).unwrap() == std::fs::read(&p2).unwrap();
    std::fs::remove_file(&p1).ok();
    std::fs::remove_file(&p2).ok();
    if !identical {
        return Err("rerun produced different trajectory.csv".into());
    }

    let (_, ckpt) = trainer::train_with_checkpoint(&cfg, 80).map_err(|e| e.to_string())?;
    let resumed = trainer::resume(&cfg, &ckpt).map_err(|e| e.to_string())?;
    if resumed.net.flatten() != r1.net.flatten() || resumed.phys.values != r1.phys.values {
        return Err("checkpoint resume diverged from uninterrupted run".into());
    }
    Ok("trajectory bit-identical, resume exact".into())
}

// ---------------------------------------------------------------- 10

/// Final total loss < initial total loss on every preset (epoch budgets
/// truncated to a desk scale; the long-run presets are covered above).
fn c10_loss_decrease() -> Result<String, String> {
    for name in trainer::PRESET_NAMES {
        let mut cfg = preset(name).unwrap();
        cfg.epochs = 300;
        cfg.grid_n = 101;
        let run = run_cached(&format!("c10-{name}"), &cfg)?;
        let first = run.records.first().ok_or("no records")?;
        let last = run.records.last().ok_or("no records")?;
        if !(last.loss.total < first.loss.total) {
            return Err(format!(
                "{name}: total went {:.4e} -> {:.4e}",
                first.loss.total, last.loss.total
            ));
        }
    }
    Ok(format!("all {} presets decreased", trainer::PRESET_NAMES.len()))
}
