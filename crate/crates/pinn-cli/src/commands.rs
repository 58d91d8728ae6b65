use crate::meta;
use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use pinn_core::net::PhysicalParams;
use pinn_core::obsdata::{self, extract_radius};
use pinn_core::solver::{self, DensityField, Grid2D, SolveConfig};
use pinn_core::trainer::{self, Checkpoint, DataSource, Seeds, TrainConfig, RADIUS_THRESHOLD};
use pinn_core::ParamMode;
use std::io::Write as _;
use std::path::{Path, PathBuf};

/// Marker for errors that should exit with code 2 (bad usage/config).
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn is_usage_error(e: &anyhow::Error) -> bool {
    e.chain().any(|c| c.is::<UsageError>())
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(UsageError(msg.into()))
}

fn seeds_from(base: Option<u64>) -> Option<Seeds> {
    base.map(|s| Seeds { init: s, sampling: s.wrapping_add(1), noise: s.wrapping_add(2) })
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| usage(format!("bad number '{x}'"))))
        .collect()
}

// ---------------------------------------------------------------- generate

#[derive(Args)]
pub struct GenerateArgs {
    /// Proliferation rate used by the forward solver.
    #[arg(long)]
    v: f64,
    #[arg(long, default_value_t = 1.0)]
    t_end: f64,
    /// Number of sampled observation points.
    #[arg(long, default_value_t = 200)]
    n_data: usize,
    #[arg(long)]
    noise_eps: Option<f64>,
    #[arg(long)]
    noise_sigma: Option<f64>,
    #[arg(long, default_value_t = 201)]
    grid_n: usize,
    /// Snapshot times; defaults to ten evenly spaced times up to t_end.
    #[arg(long)]
    times: Option<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

pub fn generate(a: GenerateArgs, seed: Option<u64>) -> Result<()> {
    if a.t_end <= 0.0 {
        return Err(usage("--t-end must be positive"));
    }
    let seeds = seeds_from(seed).unwrap_or_default();
    let times = match &a.times {
        Some(s) => parse_list(s)?,
        None => (1..=10).map(|k| a.t_end * k as f64 / 10.0).collect(),
    };
    let hash = meta::config_hash(&format!(
        "generate v={} t_end={} n={} noise={:?}/{:?} grid={} times={:?} seeds={:?}",
        a.v, a.t_end, a.n_data, a.noise_eps, a.noise_sigma, a.grid_n, times, seeds
    ));
    ensure_dir(&a.out)?;

    let grid = Grid2D::square(a.grid_n);
    let rho0 = DensityField::initial_patch(grid, 1.0);
    let cfg = SolveConfig::new(PhysicalParams::constant_v(a.v), a.t_end, times);
    let fields = solver::solve(&cfg, grid, &rho0)?;

    let snap_path = a.out.join("snapshots.csv");
    write_snapshots(&snap_path, &fields, &meta::header(&hash))?;

    let mut points = solver::synthetic_dataset(&fields, a.n_data, seeds.sampling)?;
    match (a.noise_eps, a.noise_sigma) {
        (Some(eps), Some(sigma)) => {
            points = solver::add_noise(&points, eps, sigma, seeds.noise)?;
        }
        (None, None) => {}
        _ => return Err(usage("--noise-eps and --noise-sigma must be given together")),
    }
    let data_path = a.out.join("dataset.csv");
    obsdata::write_observations(&data_path, &points, "t,x,y,value", &meta::header(&hash))?;
    println!(
        "wrote {} snapshots to {} and {} points to {}",
        fields.len(),
        snap_path.display(),
        points.len(),
        data_path.display()
    );
    Ok(())
}

fn write_snapshots(path: &Path, fields: &[DensityField], meta_line: &str) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "# {meta_line}")?;
    writeln!(f, "t,x,y,rho")?;
    for field in fields {
        let g = &field.grid;
        for i in 0..g.nx {
            for j in 0..g.ny {
                writeln!(f, "{},{},{},{}", field.t, g.x(i), g.y(j), field.at(i, j))?;
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- train

#[derive(Args)]
pub struct TrainArgs {
    /// Named preset (see `pinn train --list`).
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// TOML config file; unknown keys are rejected.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the preset/config epoch budget.
    #[arg(long)]
    epochs: Option<usize>,
    /// Resume from a checkpoint file.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Also write a checkpoint at this epoch.
    #[arg(long)]
    checkpoint_at: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// List available presets and exit.
    #[arg(long)]
    list: bool,
}

fn resolve_config(
    preset: &Option<String>,
    config: &Option<PathBuf>,
    epochs: Option<usize>,
    seed: Option<u64>,
) -> Result<TrainConfig> {
    let mut cfg = match (preset, config) {
        (Some(name), None) => trainer::preset(name).map_err(|e| usage(e.to_string()))?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            TrainConfig::from_toml(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        _ => return Err(usage("exactly one of --preset or --config is required")),
    };
    if let Some(e) = epochs {
        cfg.epochs = e;
    }
    if let Some(s) = seeds_from(seed) {
        cfg.seeds = s;
    }
    Ok(cfg)
}

pub fn train(a: TrainArgs, seed: Option<u64>) -> Result<()> {
    if a.list {
        for name in trainer::PRESET_NAMES {
            println!("{name}");
        }
        return Ok(());
    }
    let cfg = resolve_config(&a.preset, &a.config, a.epochs, seed)?;
    let hash = meta::config_hash(&toml::to_string(&cfg)?);
    ensure_dir(&a.out)?;

    let outcome = match &a.resume {
        Some(path) => {
            let ckpt = Checkpoint::load(path)?;
            trainer::resume(&cfg, &ckpt)?
        }
        None => match a.checkpoint_at {
            Some(k) => {
                let (partial, ckpt) = trainer::train_with_checkpoint(&cfg, k)?;
                ckpt.save(&a.out.join("checkpoint.json"))?;
                drop(partial);
                trainer::resume(&cfg, &ckpt)?
            }
            None => trainer::train(&cfg)?,
        },
    };

    trainer::write_trajectory(&a.out.join("trajectory.csv"), &outcome.records, &meta::header(&hash))?;
    write_final_json(&a.out.join("final.json"), &cfg, &a.preset, &outcome.phys, &hash)?;
    println!("recovered parameters: {:?}", outcome.phys.values);
    Ok(())
}

fn write_final_json(
    path: &Path,
    cfg: &TrainConfig,
    preset: &Option<String>,
    phys: &PhysicalParams,
    hash: &str,
) -> Result<()> {
    let json = serde_json::json!({
        "tool_version": meta::TOOL_VERSION,
        "config_hash": hash,
        "preset": preset,
        "mode": cfg.mode,
        "param_mode": phys.mode,
        "values": phys.values,
        "epochs": cfg.epochs,
        "seeds": cfg.seeds,
    });
    std::fs::write(path, serde_json::to_string_pretty(&json)?)?;
    Ok(())
}

// ---------------------------------------------------------------- multi-start

#[derive(Args)]
pub struct MultiStartArgs {
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Guess list: comma-separated within a guess, ';' between guesses
    /// (e.g. "1;2;3" for one parameter, "1,1;2,0" for two).
    #[arg(long)]
    guesses: String,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

pub fn multi_start(a: MultiStartArgs, seed: Option<u64>) -> Result<()> {
    let cfg = resolve_config(&a.preset, &a.config, a.epochs, seed)?;
    let guesses: Vec<Vec<f64>> = a
        .guesses
        .split(';')
        .map(parse_list)
        .collect::<Result<_>>()?;
    if guesses.is_empty() {
        return Err(usage("at least one guess required"));
    }
    let hash = meta::config_hash(&format!("{} guesses={guesses:?}", toml::to_string(&cfg)?));
    ensure_dir(&a.out)?;
    let outcomes = trainer::multi_start(&cfg, &guesses).map_err(usage_if_config)?;

    let path = a.out.join("multi_start.csv");
    let mut f = std::fs::File::create(&path)?;
    writeln!(f, "# {}", meta::header(&hash))?;
    writeln!(f, "guess,final")?;
    for (g, o) in guesses.iter().zip(&outcomes) {
        writeln!(
            f,
            "{},{}",
            g.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "),
            o.phys.values.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(" ")
        )?;
    }
    for k in 0..outcomes[0].phys.values.len() {
        let finals: Vec<f64> = outcomes.iter().map(|o| o.phys.values[k]).collect();
        let lo = finals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = finals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        println!("parameter {k}: range [{lo:.4}, {hi:.4}], spread {:.4}", hi - lo);
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn usage_if_config(e: pinn_core::Error) -> anyhow::Error {
    match &e {
        pinn_core::Error::Config(_) => usage(e.to_string()),
        _ => anyhow!(e),
    }
}

// ---------------------------------------------------------------- noise-sweep

#[derive(Args)]
pub struct NoiseSweepArgs {
    /// Noise pairs as "eps:sigma" separated by commas.
    #[arg(long, default_value = "0.5:0.2,0.5:0.5,0.5:1,1:0.2,10:0.2")]
    pairs: String,
    #[arg(long, default_value_t = 2.1)]
    v_true: f64,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

pub fn noise_sweep(a: NoiseSweepArgs, seed: Option<u64>) -> Result<()> {
    let pairs: Vec<(f64, f64)> = a
        .pairs
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            let (e, g) = s.split_once(':').ok_or_else(|| usage(format!("bad pair '{s}'")))?;
            Ok((
                e.trim().parse().map_err(|_| usage(format!("bad eps '{e}'")))?,
                g.trim().parse().map_err(|_| usage(format!("bad sigma '{g}'")))?,
            ))
        })
        .collect::<Result<_>>()?;
    if pairs.is_empty() {
        return Err(usage("empty noise pair list"));
    }
    ensure_dir(&a.out)?;
    let hash = meta::config_hash(&format!("noise-sweep v={} pairs={pairs:?}", a.v_true));

    let mut rows = Vec::new();
    for (eps, sigma) in &pairs {
        let mut cfg = trainer::preset("noise-e0.5-s0.2").map_err(|e| anyhow!(e))?;
        cfg.data = DataSource::Synthetic { v_true: a.v_true, noise: Some((*eps, *sigma)) };
        if let Some(e) = a.epochs {
            cfg.epochs = e;
        }
        if let Some(s) = seeds_from(seed) {
            cfg.seeds = s;
        }
        let out = trainer::train(&cfg)?;
        let v = out.phys.values[0];
        let err = (v - a.v_true).abs() / a.v_true;
        trainer::write_trajectory(
            &a.out.join(format!("noise_e{eps}_s{sigma}.csv")),
            &out.records,
            &meta::header(&hash),
        )?;
        println!("eps={eps} sigma={sigma}: v={v:.5}, rel err {:.3}%", err * 100.0);
        rows.push((*eps, *sigma, v, err));
    }

    let path = a.out.join("noise_summary.csv");
    let mut f = std::fs::File::create(&path)?;
    writeln!(f, "# {}", meta::header(&hash))?;
    writeln!(f, "eps,sigma,v,rel_error")?;
    for (eps, sigma, v, err) in &rows {
        writeln!(f, "{eps},{sigma},{v:.17e},{err:.17e}")?;
    }
    println!("wrote {}", path.display());
    Ok(())
}

// ---------------------------------------------------------------- predict

#[derive(Args)]
pub struct PredictArgs {
    /// Constant proliferation rate.
    #[arg(long, conflicts_with_all = ["params", "final_json"])]
    v: Option<f64>,
    /// Explicit parameter list with --mode.
    #[arg(long, requires = "mode")]
    params: Option<String>,
    #[arg(long, value_parser = ["constant_v", "spatial_v1v2", "v_and_a"])]
    mode: Option<String>,
    /// Read parameters from a training final.json.
    #[arg(long)]
    final_json: Option<PathBuf>,
    #[arg(long, default_value = "0.875,1.0")]
    times: String,
    #[arg(long, default_value_t = 201)]
    grid_n: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_mode(s: &str) -> Result<ParamMode> {
    match s {
        "constant_v" => Ok(ParamMode::ConstantV),
        "spatial_v1v2" => Ok(ParamMode::SpatialV1V2),
        "v_and_a" => Ok(ParamMode::VAndA),
        _ => Err(usage(format!("unknown mode '{s}'"))),
    }
}

pub fn predict(a: PredictArgs) -> Result<()> {
    let phys = if let Some(v) = a.v {
        PhysicalParams::constant_v(v)
    } else if let Some(list) = &a.params {
        let mode = parse_mode(a.mode.as_deref().unwrap())?;
        PhysicalParams::new(mode, parse_list(list)?).map_err(usage_if_config)?
    } else if let Some(path) = &a.final_json {
        let text = std::fs::read_to_string(path)?;
        let json: serde_json::Value = serde_json::from_str(&text)?;
        let mode: ParamMode = serde_json::from_value(
            json.get("param_mode").cloned().ok_or_else(|| anyhow!("final.json missing param_mode"))?,
        )?;
        let values: Vec<f64> = serde_json::from_value(
            json.get("values").cloned().ok_or_else(|| anyhow!("final.json missing values"))?,
        )?;
        PhysicalParams::new(mode, values).map_err(usage_if_config)?
    } else {
        return Err(usage("one of --v, --params, or --final-json is required"));
    };

    let times = parse_list(&a.times)?;
    let radii = trainer::predict_forward(&phys, &times, a.grid_n)?;
    let table = obsdata::builtin_radius_table();

    let mut lines = vec!["t,radius,observed,rel_error".to_string()];
    println!("{:>8} {:>10} {:>10} {:>10}", "t", "radius", "observed", "rel err");
    for (t, r) in &radii {
        let obs = table.radius_at(*t).ok();
        let (obs_s, err_s, obs_csv, err_csv) = match obs {
            Some(o) => {
                let e = obsdata::relative_error(*r, o)?;
                (format!("{o:.4}"), format!("{:.3}%", e * 100.0), o.to_string(), e.to_string())
            }
            None => ("-".into(), "-".into(), String::new(), String::new()),
        };
        println!("{t:>8.4} {r:>10.4} {obs_s:>10} {err_s:>10}");
        lines.push(format!("{t},{r},{obs_csv},{err_csv}"));
    }

    if let Some(path) = &a.out {
        let hash = meta::config_hash(&format!("predict {:?} {:?} times={times:?}", phys.mode, phys.values));
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "# {}", meta::header(&hash))?;
        for l in &lines {
            writeln!(f, "{l}")?;
        }
        println!("wrote {}", path.display());
    }
    Ok(())
}

// ---------------------------------------------------------------- radius

#[derive(Args)]
pub struct RadiusArgs {
    /// snapshots.csv produced by `pinn generate`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = RADIUS_THRESHOLD)]
    threshold: f64,
}

pub fn radius(a: RadiusArgs) -> Result<()> {
    let fields = read_snapshots(&a.input)?;
    let table = obsdata::builtin_radius_table();
    println!("{:>8} {:>10} {:>10}", "t", "radius", "rel err");
    for f in &fields {
        let r = extract_radius(f, a.threshold)?;
        let err = match table.radius_at(f.t) {
            Ok(o) => format!("{:.3}%", obsdata::relative_error(r, o)? * 100.0),
            Err(_) => "-".into(),
        };
        println!("{:>8.4} {r:>10.4} {err:>10}", f.t);
    }
    Ok(())
}

fn read_snapshots(path: &Path) -> Result<Vec<DensityField>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut rows: Vec<(f64, f64, f64, f64)> = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('t') {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 4 {
            bail!("bad snapshot row: {line}");
        }
        rows.push((
            parts[0].parse()?,
            parts[1].parse()?,
            parts[2].parse()?,
            parts[3].parse()?,
        ));
    }
    if rows.is_empty() {
        return Err(usage(format!("no snapshot rows in {}", path.display())));
    }

    let mut fields = Vec::new();
    let mut i = 0;
    while i < rows.len() {
        let t = rows[i].0;
        let mut j = i;
        while j < rows.len() && rows[j].0 == t {
            j += 1;
        }
        let block = &rows[i..j];
        let n = (block.len() as f64).sqrt().round() as usize;
        if n * n != block.len() {
            bail!("snapshot at t={t} is not a square grid ({} rows)", block.len());
        }
        let xmin = block.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
        let xmax = block.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
        let ymin = block.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
        let ymax = block.iter().map(|r| r.2).fold(f64::NEG_INFINITY, f64::max);
        let grid = Grid2D { nx: n, ny: n, xmin, xmax, ymin, ymax };
        let mut field = DensityField::zeros(grid, t);
        for (k, row) in block.iter().enumerate() {
            field.values[k] = row.3;
        }
        fields.push(field);
        i = j;
    }
    Ok(fields)
}

// ---------------------------------------------------------------- validate

#[derive(Args)]
pub struct ValidateArgs {
    /// Random derivative-check trials.
    #[arg(long, default_value_t = 20)]
    trials: usize,
}

pub fn validate(a: ValidateArgs) -> Result<()> {
    use pinn_core::net::NetworkParams;
    use pinn_core::physics;

    let mut failures = 0;

    // jet derivatives vs central finite differences
    let mut max_rel: f64 = 0.0;
    for k in 0..a.trials {
        let net = NetworkParams::init_xavier(&[3, 8, 8, 1], 100 + k as u64)?;
        let p = [0.3 + 0.01 * k as f64, 0.5 - 0.02 * k as f64, -0.4 + 0.015 * k as f64];
        let jet = net.forward_jet(p);
        let h = 1e-4;
        let f = |q: [f64; 3]| net.forward(q);
        let fd = [
            (f([p[0] + h, p[1], p[2]]) - f([p[0] - h, p[1], p[2]])) / (2.0 * h),
            (f([p[0], p[1] + h, p[2]]) - f([p[0], p[1] - h, p[2]])) / (2.0 * h),
            (f([p[0], p[1], p[2] + h]) - f([p[0], p[1], p[2] - h])) / (2.0 * h),
            (f([p[0], p[1] + h, p[2]]) - 2.0 * f(p) + f([p[0], p[1] - h, p[2]])) / (h * h),
            (f([p[0], p[1], p[2] + h]) - 2.0 * f(p) + f([p[0], p[1], p[2] - h])) / (h * h),
        ];
        let got = [jet.g[0], jet.g[1], jet.g[2], jet.h[0], jet.h[1]];
        for (g, d) in got.iter().zip(&fd) {
            let rel = (g - d).abs() / d.abs().max(1e-8);
            max_rel = max_rel.max(rel);
        }
    }
    report("jet derivatives vs finite differences", max_rel < 1e-5, &mut failures);

    // residual identity: expanded form vs jet-evaluated u_t - Δ(u³) - g·u
    let net = NetworkParams::init_xavier(&[3, 16, 16, 1], 7)?;
    let phys = PhysicalParams::constant_v(1.3);
    let mut max_diff: f64 = 0.0;
    for k in 0..200 {
        let p = [0.1 + 0.004 * k as f64, -2.0 + 0.02 * k as f64, 1.7 - 0.017 * k as f64];
        let r1 = physics::residual(&net, &phys, p)?;
        let u = net.forward_jet(p);
        let u3 = u * u * u;
        let r2 = u.g[0] - (u3.h[0] + u3.h[1]) - phys.growth_rate(p[1], p[2]) * u.v;
        max_diff = max_diff.max((r1 - r2).abs() / r2.abs().max(1.0));
    }
    report("expanded residual matches jet form", max_diff < 1e-10, &mut failures);

    // solver mass conservation without source
    let grid = Grid2D::square(101);
    let rho0 = DensityField::initial_patch(grid, 1.0);
    let cfg = SolveConfig::new(PhysicalParams::constant_v(0.0), 0.25, vec![0.25]);
    let fields = solver::solve(&cfg, grid, &rho0)?;
    let drift = (fields[0].mass() - rho0.mass()).abs() / rho0.mass();
    report("solver mass conservation (g = 0)", drift < 5e-3, &mut failures);

    // determinism of a tiny training run
    let mut cfg = trainer::preset("synthetic-v2.1").map_err(|e| anyhow!(e))?;
    cfg.arch = vec![3, 8, 1];
    cfg.collocation.n_interior = 50;
    cfg.collocation.n_edge = 10;
    cfg.n_data = 20;
    cfg.grid_n = 41;
    cfg.epochs = 20;
    let r1 = trainer::train(&cfg)?;
    let r2 = trainer::train(&cfg)?;
    report(
        "training determinism",
        r1.phys.values == r2.phys.values && r1.net.flatten() == r2.net.flatten(),
        &mut failures,
    );

    if failures > 0 {
        bail!("{failures} validation check(s) failed");
    }
    println!("all checks passed");
    Ok(())
}

fn report(name: &str, ok: bool, failures: &mut usize) {
    println!("{} {name}", if ok { "PASS" } else { "FAIL" });
    if !ok {
        *failures += 1;
    }
}
