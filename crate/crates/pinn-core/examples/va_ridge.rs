//! Map the (v, a) identifiability ridge: for each initial plateau a, find the
//! v whose FD solution front matches the observed radius at t = 0.5, then
//! report the front radii/errors at the remaining tabulated times.

use pinn_core::obsdata::{builtin_radius_table, extract_radius};
use pinn_core::solver::{solve, DensityField, Grid2D, SolveConfig};
use pinn_core::{ParamMode, PhysicalParams};

fn radii(v: f64, a: f64, times: &[f64], n: usize) -> Vec<f64> {
    let phys = PhysicalParams { mode: ParamMode::VAndA, values: vec![v, a] };
    let grid = Grid2D::square(n);
    let rho0 = DensityField::initial_patch(grid, a);
    let cfg = SolveConfig::new(phys, 1.0, times.to_vec());
    let fields = solve(&cfg, grid, &rho0).unwrap();
    fields.iter().map(|f| extract_radius(f, 0.1).unwrap_or(0.0)).collect()
}

fn main() {
    let table = builtin_radius_table();
    let times = [0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0];
    let obs: Vec<f64> = times.iter().map(|t| table.radius_at(*t).unwrap()).collect();
    let n = 121;
    for &a in &[1.0, 0.8, 0.6, 0.5, 0.4, 0.3754] {
        // bisect v so the t = 0.5 radius matches 1.26
        let (mut lo, mut hi) = (2.0, 8.0);
        for _ in 0..12 {
            let mid = 0.5 * (lo + hi);
            let r = radii(mid, a, &[0.5], n)[0];
            if r < 1.26 { lo = mid } else { hi = mid }
        }
        let v = 0.5 * (lo + hi);
        let rs = radii(v, a, &times, n);
        let errs: Vec<String> = rs
            .iter()
            .zip(&obs)
            .map(|(r, o)| format!("{:+.1}%", 100.0 * (r - o) / o))
            .collect();
        println!("a = {a:.4}  v* = {v:.4}  errs(t=0.25..1.0): {}", errs.join(" "));
    }
}
