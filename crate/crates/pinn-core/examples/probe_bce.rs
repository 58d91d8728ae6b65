//! Scratch probe for the real-bce preset: run a truncated training with
//! sampling/resampling overrides and print the v trajectory.
//!
//! Usage: probe_bce <epochs> <uniform|balanced> <resample_every|0> [sampling_seed]

use pinn_core::trainer::{preset, train, DataSource};
use pinn_core::obsdata::BinarySampling;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let epochs: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(12000);
    let sampling = match args.get(2).map(String::as_str) {
        Some("balanced") => BinarySampling::Balanced,
        _ => BinarySampling::Uniform,
    };
    let resample: usize = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(1);

    let name = args.get(7).map(String::as_str).unwrap_or("real-bce");
    let mut cfg = preset(name).unwrap();
    cfg.epochs = epochs;
    cfg.log_every = 1000;
    if let DataSource::BinaryTable { sampling: s, .. } = &mut cfg.data {
        *s = sampling;
    }
    cfg.resample_every = if resample > 0 { Some(resample) } else { None };
    if let Some(seed) = args.get(4) {
        cfg.seeds.sampling = seed.parse().unwrap();
    }
    if let Some(g) = args.get(5) {
        if !g.is_empty() {
            cfg.guess = Some(g.split(',').map(|s| s.parse().unwrap()).collect());
        }
    }
    if let Some(tmax) = args.get(6) {
        if !tmax.is_empty() {
            cfg.collocation.domain.t.1 = tmax.parse().unwrap();
        }
    }

    let out = train(&cfg).unwrap();
    for r in &out.records {
        let phys: Vec<String> = r.physical.iter().map(|p| format!("{p:.4}")).collect();
        println!(
            "epoch {:6}  total {:.4e}  pde {:.4e}  ic {:.4e}  data {:.4e}  p [{}]",
            r.epoch,
            r.loss.total,
            r.loss.pde,
            r.loss.ic,
            r.loss.data,
            phys.join(", ")
        );
    }
}
