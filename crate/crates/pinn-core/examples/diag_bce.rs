//! Diagnostic: BCE data loss of the finite-difference solution at a given v
//! against the real-bce preset's binary dataset. The FD solution has zero
//! PDE/IC residual by construction, so its data loss bounds the composite
//! loss the training could reach at that v.

use pinn_core::solver::{solve, DensityField, Grid2D, SolveConfig};
use pinn_core::trainer::{preset, DataSource};
use pinn_core::{ParamMode, PhysicalParams};

fn main() {
    let v: f64 = std::env::args().nth(1).map(|s| s.parse().unwrap()).unwrap_or(3.1264);
    let cfg = preset("real-bce").unwrap();
    let data = {
        // same dataset the trainer builds
        use pinn_core::obsdata::{builtin_radius_table, make_binary_dataset};
        let DataSource::BinaryTable { train_times, sampling } = &cfg.data else { panic!() };
        let sampling = match std::env::args().nth(2).as_deref() {
            Some("uniform") => pinn_core::obsdata::BinarySampling::Uniform,
            Some("balanced") => pinn_core::obsdata::BinarySampling::Balanced,
            _ => *sampling,
        };
        make_binary_dataset(
            &builtin_radius_table(),
            train_times,
            cfg.n_data,
            sampling,
            cfg.seeds.sampling,
        )
        .unwrap()
    };
    let mut times: Vec<f64> = data.iter().map(|p| p.t).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();

    let phys = PhysicalParams { mode: ParamMode::ConstantV, values: vec![v] };
    let grid = Grid2D::square(161);
    let rho0 = DensityField::initial_patch(grid, 1.0);
    let scfg = SolveConfig::new(phys, times.iter().cloned().fold(0.0, f64::max).max(1e-6), times.clone());
    let fields = solve(&scfg, grid, &rho0).unwrap();

    let eps = 1e-7;
    let mut total = 0.0;
    let mut worst: Vec<(f64, f64, f64, f64, f64)> = Vec::new();
    for p in &data {
        let f = fields.iter().min_by(|a, b| (a.t - p.t).abs().total_cmp(&(b.t - p.t).abs())).unwrap();
        let u = f.sample(p.x, p.y).unwrap().clamp(eps, 1.0 - eps);
        let l = -p.value * u.ln() - (1.0 - p.value) * (1.0 - u).ln();
        total += l;
        worst.push((l, p.t, p.x, p.y, p.value));
    }
    total /= data.len() as f64;
    worst.sort_by(|a, b| b.0.total_cmp(&a.0));
    println!("v = {v}  BCE(data) of FD solution = {total:.4e}  (w4*: {:.4e})", 5.0 * total);
    for (l, t, x, y, lab) in worst.iter().take(10) {
        println!("  loss {l:.3e} at t={t} ({x:.3},{y:.3}) label {lab}");
    }
}
