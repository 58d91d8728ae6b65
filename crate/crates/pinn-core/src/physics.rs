//! PDE residual and the four-term composite loss.
//!
//! The governing model is ρ_t − Δ(ρ³) = g(x,y) ρ on [−3,3]² × [0,1] with a
//! circular plateau initial condition and zero Dirichlet boundaries. The
//! residual uses the expanded m = 3 identity Δ(u³) = 3u²Δu + 6u|∇u|².

use crate::engine::{self, ParamGrad, NCOMP};
use crate::error::{Error, Result};
use crate::jet::{Jet2, T, X, Y};
use crate::net::{NetworkParams, ParamMode, PhysicalParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Radius² of the initial tumor patch (Eq. ρ₀ = plateau inside x²+y² < 0.25).
pub const PATCH_R2: f64 = 0.25;
/// Clamp applied to predictions before the BCE logarithms.
pub const BCE_EPS: f64 = 1e-7;

/// Space-time sampling box.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Domain {
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub t: (f64, f64),
}

impl Default for Domain {
    fn default() -> Self {
        Domain { x: (-3.0, 3.0), y: (-3.0, 3.0), t: (0.0, 1.0) }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CollocationConfig {
    pub domain: Domain,
    /// Interior residual points (N).
    pub n_interior: usize,
    /// Points per boundary edge and at t = 0 (N₁).
    pub n_edge: usize,
}

impl Default for CollocationConfig {
    fn default() -> Self {
        CollocationConfig { domain: Domain::default(), n_interior: 2000, n_edge: 100 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    /// Observed density (MSE mode) or 0/1 label (BCE mode).
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataMode {
    Mse,
    Bce,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CollocationSet {
    pub interior: Vec<[f64; 3]>,
    pub boundary: Vec<[f64; 3]>,
    pub initial: Vec<[f64; 3]>,
    pub data: Vec<DataPoint>,
    pub data_mode: DataMode,
}

/// Uniform sampling over the box, the four edges (with uniform t), and the
/// t = 0 plane. Deterministic per seed; the data slot starts empty.
pub fn sample_collocation(cfg: &CollocationConfig, seed: u64) -> CollocationSet {
    let d = &cfg.domain;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = |lo: f64, hi: f64| lo + (hi - lo) * rng.gen::<f64>();

    let interior: Vec<[f64; 3]> = (0..cfg.n_interior)
        .map(|_| [u(d.t.0, d.t.1), u(d.x.0, d.x.1), u(d.y.0, d.y.1)])
        .collect();

    let mut boundary = Vec::with_capacity(4 * cfg.n_edge);
    for edge in 0..4 {
        for _ in 0..cfg.n_edge {
            let t = u(d.t.0, d.t.1);
            let p = match edge {
                0 => [t, d.x.0, u(d.y.0, d.y.1)],
                1 => [t, d.x.1, u(d.y.0, d.y.1)],
                2 => [t, u(d.x.0, d.x.1), d.y.0],
                _ => [t, u(d.x.0, d.x.1), d.y.1],
            };
            boundary.push(p);
        }
    }

    let initial: Vec<[f64; 3]> = (0..cfg.n_edge)
        .map(|_| [0.0, u(d.x.0, d.x.1), u(d.y.0, d.y.1)])
        .collect();

    CollocationSet { interior, boundary, initial, data: Vec::new(), data_mode: DataMode::Mse }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LossWeights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub w4: f64,
}

impl LossWeights {
    pub fn new(w1: f64, w2: f64, w3: f64, w4: f64) -> Result<Self> {
        let w = LossWeights { w1, w2, w3, w4 };
        if [w1, w2, w3, w4].iter().any(|x| *x < 0.0 || !x.is_finite()) {
            return Err(Error::Config("loss weights must be nonnegative".into()));
        }
        if w1 + w2 + w3 + w4 == 0.0 {
            return Err(Error::Config("at least one loss weight must be positive".into()));
        }
        Ok(w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub pde: f64,
    pub ic: f64,
    pub bc: f64,
    pub data: f64,
    pub total: f64,
}

impl LossBreakdown {
    fn combine(w: &LossWeights, pde: f64, ic: f64, bc: f64, data: f64) -> Self {
        LossBreakdown {
            pde,
            ic,
            bc,
            data,
            total: w.w1 * pde + w.w2 * ic + w.w3 * bc + w.w4 * data,
        }
    }
}

/// Initial density ρ₀ with plateau height `a` (strict inequality at r = 0.5).
pub fn initial_density(x: f64, y: f64, a: f64) -> f64 {
    if x * x + y * y < PATCH_R2 {
        a
    } else {
        0.0
    }
}

/// Expanded residual R = u_t − 6u(u_x²+u_y²) − 3u²(u_xx+u_yy) − g u
/// from an output jet at (x, y).
pub fn residual_from_jet(u: &Jet2, phys: &PhysicalParams, x: f64, y: f64) -> f64 {
    let grad2 = u.g[X] * u.g[X] + u.g[Y] * u.g[Y];
    let lap = u.h[0] + u.h[1];
    u.g[T] - 6.0 * u.v * grad2 - 3.0 * u.v * u.v * lap - phys.growth_rate(x, y) * u.v
}

/// Pointwise residual of the configured model variant.
pub fn residual(net: &NetworkParams, phys: &PhysicalParams, point: [f64; 3]) -> Result<f64> {
    let u = net.forward_jet(point);
    if !u.is_finite() {
        return Err(Error::Numerical(format!("non-finite derivatives at {point:?}")));
    }
    Ok(residual_from_jet(&u, phys, point[1], point[2]))
}

/// ∂R/∂(u, u_t, u_x, u_y, u_xx, u_yy) packed in seed order.
fn residual_partials(u: &Jet2, g: f64) -> [f64; 6] {
    let grad2 = u.g[X] * u.g[X] + u.g[Y] * u.g[Y];
    let lap = u.h[0] + u.h[1];
    [
        -6.0 * grad2 - 6.0 * u.v * lap - g,
        1.0,
        -12.0 * u.v * u.g[X],
        -12.0 * u.v * u.g[Y],
        -3.0 * u.v * u.v,
        -3.0 * u.v * u.v,
    ]
}

pub fn loss_pde(net: &NetworkParams, phys: &PhysicalParams, set: &CollocationSet) -> Result<f64> {
    if set.interior.is_empty() {
        return Err(Error::Config("interior point set is empty".into()));
    }
    let cache = engine::batch_forward(net, &set.interior, NCOMP);
    let n = set.interior.len() as f64;
    let mut acc = 0.0;
    for (p, pt) in set.interior.iter().enumerate() {
        let u = cache.output(p);
        let r = residual_from_jet(&u, phys, pt[1], pt[2]);
        acc += r * r;
    }
    finite(acc / n, "L_PDE")
}

pub fn loss_ic(net: &NetworkParams, phys: &PhysicalParams, set: &CollocationSet) -> Result<f64> {
    if set.initial.is_empty() {
        return Err(Error::Config("initial point set is empty".into()));
    }
    let a = phys.plateau();
    let cache = engine::batch_forward(net, &set.initial, 1);
    let mut acc = 0.0;
    for (p, pt) in set.initial.iter().enumerate() {
        let d = cache.output(p).v - initial_density(pt[1], pt[2], a);
        acc += d * d;
    }
    finite(acc / set.initial.len() as f64, "L_IC")
}

pub fn loss_bc(net: &NetworkParams, set: &CollocationSet) -> Result<f64> {
    if set.boundary.is_empty() {
        return Err(Error::Config("boundary point set is empty".into()));
    }
    let cache = engine::batch_forward(net, &set.boundary, 1);
    let mut acc = 0.0;
    for p in 0..set.boundary.len() {
        let u = cache.output(p).v;
        acc += u * u;
    }
    finite(acc / set.boundary.len() as f64, "L_BC")
}

pub fn loss_data_mse(net: &NetworkParams, set: &CollocationSet) -> Result<f64> {
    if set.data_mode != DataMode::Mse {
        return Err(Error::Mode("MSE data loss called on a BCE-labeled set".into()));
    }
    data_points_mse(net, &set.data)
}

fn data_points_mse(net: &NetworkParams, data: &[DataPoint]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Config("data point set is empty".into()));
    }
    let points: Vec<[f64; 3]> = data.iter().map(|d| [d.t, d.x, d.y]).collect();
    let cache = engine::batch_forward(net, &points, 1);
    let mut acc = 0.0;
    for (p, d) in data.iter().enumerate() {
        let e = cache.output(p).v - d.value;
        acc += e * e;
    }
    finite(acc / data.len() as f64, "L_data")
}

pub fn loss_data_bce(net: &NetworkParams, set: &CollocationSet) -> Result<f64> {
    if set.data_mode != DataMode::Bce {
        return Err(Error::Mode("BCE data loss called on a non-binary set".into()));
    }
    if set.data.is_empty() {
        return Err(Error::Config("data point set is empty".into()));
    }
    for d in &set.data {
        if d.value != 0.0 && d.value != 1.0 {
            return Err(Error::Data(format!("BCE target must be 0 or 1, got {}", d.value)));
        }
    }
    let points: Vec<[f64; 3]> = set.data.iter().map(|d| [d.t, d.x, d.y]).collect();
    let cache = engine::batch_forward(net, &points, 1);
    let mut acc = 0.0;
    for (p, d) in set.data.iter().enumerate() {
        let yhat = cache.output(p).v.clamp(BCE_EPS, 1.0 - BCE_EPS);
        acc += -d.value * yhat.ln() - (1.0 - d.value) * (1.0 - yhat).ln();
    }
    finite(acc / set.data.len() as f64, "L_data")
}

fn finite(v: f64, term: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numerical(format!("{term} is non-finite")))
    }
}

/// All four loss terms plus the weighted combination.
pub fn total_loss(
    net: &NetworkParams,
    phys: &PhysicalParams,
    set: &CollocationSet,
    weights: &LossWeights,
) -> Result<LossBreakdown> {
    let pde = loss_pde(net, phys, set)?;
    let ic = loss_ic(net, phys, set)?;
    let bc = loss_bc(net, set)?;
    let data = match set.data_mode {
        DataMode::Mse => loss_data_mse(net, set)?,
        DataMode::Bce => loss_data_bce(net, set)?,
    };
    Ok(LossBreakdown::combine(weights, pde, ic, bc, data))
}

/// Loss breakdown together with the exact gradient of the weighted total
/// with respect to every network and physical parameter.
pub fn total_loss_and_grad(
    net: &NetworkParams,
    phys: &PhysicalParams,
    set: &CollocationSet,
    weights: &LossWeights,
) -> Result<(LossBreakdown, ParamGrad)> {
    if set.interior.is_empty() || set.initial.is_empty() || set.boundary.is_empty() {
        return Err(Error::Config("collocation set has an empty component".into()));
    }
    if set.data.is_empty() {
        return Err(Error::Config("data point set is empty".into()));
    }
    if set.data_mode == DataMode::Bce {
        for d in &set.data {
            if d.value != 0.0 && d.value != 1.0 {
                return Err(Error::Data(format!("BCE target must be 0 or 1, got {}", d.value)));
            }
        }
    }

    let mut grad = ParamGrad::zeros(net.param_count(), phys.mode.len());

    // Interior points: full jets.
    let n_int = set.interior.len() as f64;
    let cache = engine::batch_forward(net, &set.interior, NCOMP);
    let mut seeds = vec![[0.0; 6]; set.interior.len()];
    let mut pde_acc = 0.0;
    for (p, pt) in set.interior.iter().enumerate() {
        let u = cache.output(p);
        let (x, y) = (pt[1], pt[2]);
        let g = phys.growth_rate(x, y);
        let r = residual_from_jet(&u, phys, x, y);
        pde_acc += r * r;
        let scale = weights.w1 * 2.0 * r / n_int;
        let partials = residual_partials(&u, g);
        for c in 0..6 {
            seeds[p][c] = scale * partials[c];
        }
        // physical parameters enter through the source term g·u
        match phys.mode {
            ParamMode::ConstantV | ParamMode::VAndA => {
                grad.wrt_physical[0] += scale * (-u.v);
            }
            ParamMode::SpatialV1V2 => {
                grad.wrt_physical[0] += scale * (-u.v);
                grad.wrt_physical[1] += scale * (-(x * x + y * y).sqrt().sin() * u.v);
            }
        }
    }
    engine::batch_backward(net, &cache, &seeds, &mut grad.wrt_network);
    let pde = finite(pde_acc / n_int, "L_PDE")?;

    // Boundary, initial, and data points share one value-only batch.
    let n_bc = set.boundary.len();
    let n_ic = set.initial.len();
    let n_data = set.data.len();
    let mut points: Vec<[f64; 3]> = Vec::with_capacity(n_bc + n_ic + n_data);
    points.extend_from_slice(&set.boundary);
    points.extend_from_slice(&set.initial);
    points.extend(set.data.iter().map(|d| [d.t, d.x, d.y]));
    let cache = engine::batch_forward(net, &points, 1);
    let mut seeds = vec![[0.0; 6]; points.len()];

    let mut bc_acc = 0.0;
    for p in 0..n_bc {
        let u = cache.output(p).v;
        bc_acc += u * u;
        seeds[p][0] = weights.w3 * 2.0 * u / n_bc as f64;
    }
    let bc = finite(bc_acc / n_bc as f64, "L_BC")?;

    let a = phys.plateau();
    let mut ic_acc = 0.0;
    for (i, pt) in set.initial.iter().enumerate() {
        let p = n_bc + i;
        let inside = pt[1] * pt[1] + pt[2] * pt[2] < PATCH_R2;
        let target = if inside { a } else { 0.0 };
        let d = cache.output(p).v - target;
        ic_acc += d * d;
        seeds[p][0] = weights.w2 * 2.0 * d / n_ic as f64;
        if phys.mode == ParamMode::VAndA && inside {
            grad.wrt_physical[1] += weights.w2 * (-2.0) * d / n_ic as f64;
        }
    }
    let ic = finite(ic_acc / n_ic as f64, "L_IC")?;

    let mut data_acc = 0.0;
    for (i, d) in set.data.iter().enumerate() {
        let p = n_bc + n_ic + i;
        let u = cache.output(p).v;
        match set.data_mode {
            DataMode::Mse => {
                let e = u - d.value;
                data_acc += e * e;
                seeds[p][0] = weights.w4 * 2.0 * e / n_data as f64;
            }
            DataMode::Bce => {
                let yhat = u.clamp(BCE_EPS, 1.0 - BCE_EPS);
                data_acc += -d.value * yhat.ln() - (1.0 - d.value) * (1.0 - yhat).ln();
                // clamp saturation kills the gradient
                if u > BCE_EPS && u < 1.0 - BCE_EPS {
                    seeds[p][0] =
                        weights.w4 * (yhat - d.value) / (yhat * (1.0 - yhat)) / n_data as f64;
                }
            }
        }
    }
    let data = finite(data_acc / n_data as f64, "L_data")?;

    engine::batch_backward(net, &cache, &seeds, &mut grad.wrt_network);

    let breakdown = LossBreakdown::combine(weights, pde, ic, bc, data);
    finite(breakdown.total, "L_total")?;
    if !grad.is_finite() {
        return Err(Error::Numerical("non-finite gradient".into()));
    }
    Ok((breakdown, grad))
}
