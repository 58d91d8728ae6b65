//! MLP definition: architecture, Glorot initialization, parameter layout.
//!
//! The network maps (t, x, y) to a single density value. Hidden layers use
//! tanh; the final output passes through an absolute value so predicted
//! densities are nonnegative. The flat parameter layout is frozen:
//! layer-major, weights row-major, then the layer's bias.

use crate::error::{Error, Result};
use crate::jet::Jet2;
use crate::tape::{Comp, Tape, Unary, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const DEFAULT_ARCH: [usize; 5] = [3, 64, 64, 64, 1];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Layer {
    /// Row-major n_out x n_in.
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkParams {
    pub arch: Vec<usize>,
    pub layers: Vec<Layer>,
}

fn validate_arch(arch: &[usize]) -> Result<()> {
    if arch.len() < 2 {
        return Err(Error::Config("architecture needs at least two layers".into()));
    }
    if arch.contains(&0) {
        return Err(Error::Config("layer width 0 is not allowed".into()));
    }
    if arch[0] != 3 {
        return Err(Error::Config(format!(
            "input width must be 3 (t, x, y), got {}",
            arch[0]
        )));
    }
    if *arch.last().unwrap() != 1 {
        return Err(Error::Config(format!(
            "output width must be 1, got {}",
            arch.last().unwrap()
        )));
    }
    Ok(())
}

impl NetworkParams {
    /// Glorot-uniform weights (±√(6/(n_in+n_out))), zero biases,
    /// reproducible from the seed.
    pub fn init_xavier(arch: &[usize], seed: u64) -> Result<Self> {
        validate_arch(arch)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(arch.len() - 1);
        for l in 1..arch.len() {
            let (n_in, n_out) = (arch[l - 1], arch[l]);
            let lim = (6.0 / (n_in + n_out) as f64).sqrt();
            let w = (0..n_in * n_out).map(|_| rng.gen_range(-lim..lim)).collect();
            layers.push(Layer { w, b: vec![0.0; n_out] });
        }
        Ok(NetworkParams { arch: arch.to_vec(), layers })
    }

    pub fn zeros(arch: &[usize]) -> Result<Self> {
        validate_arch(arch)?;
        let layers = (1..arch.len())
            .map(|l| Layer { w: vec![0.0; arch[l - 1] * arch[l]], b: vec![0.0; arch[l]] })
            .collect();
        Ok(NetworkParams { arch: arch.to_vec(), layers })
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.w);
            out.extend_from_slice(&l.b);
        }
        out
    }

    pub fn unflatten(arch: &[usize], flat: &[f64]) -> Result<Self> {
        let mut net = Self::zeros(arch)?;
        if flat.len() != net.param_count() {
            return Err(Error::Config(format!(
                "flat vector length {} does not match parameter count {}",
                flat.len(),
                net.param_count()
            )));
        }
        let mut off = 0;
        for l in &mut net.layers {
            let nw = l.w.len();
            l.w.copy_from_slice(&flat[off..off + nw]);
            off += nw;
            let nb = l.b.len();
            l.b.copy_from_slice(&flat[off..off + nb]);
            off += nb;
        }
        Ok(net)
    }

    pub fn assign_from_flat(&mut self, flat: &[f64]) {
        debug_assert_eq!(flat.len(), self.param_count());
        let mut off = 0;
        for l in &mut self.layers {
            let nw = l.w.len();
            l.w.copy_from_slice(&flat[off..off + nw]);
            off += nw;
            let nb = l.b.len();
            l.b.copy_from_slice(&flat[off..off + nb]);
            off += nb;
        }
    }

    /// Plain value evaluation: |W_L tanh(... tanh(W_1 z + b_1) ...) + b_L|.
    pub fn forward(&self, point: [f64; 3]) -> f64 {
        let mut z = point.to_vec();
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            let n_in = z.len();
            let n_out = layer.b.len();
            let mut next = vec![0.0; n_out];
            for k in 0..n_out {
                let row = &layer.w[k * n_in..(k + 1) * n_in];
                let mut s = layer.b[k];
                for (wj, zj) in row.iter().zip(&z) {
                    s += wj * zj;
                }
                next[k] = if li == last { s } else { s.tanh() };
            }
            z = next;
        }
        z[0].abs()
    }

    /// Jet evaluation: value and input derivatives of u = |raw output|.
    pub fn forward_jet(&self, point: [f64; 3]) -> Jet2 {
        let (t, x, y) = Jet2::seed(point[0], point[1], point[2]);
        let mut z = vec![t, x, y];
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            let n_in = z.len();
            let n_out = layer.b.len();
            let mut next = Vec::with_capacity(n_out);
            for k in 0..n_out {
                let row = &layer.w[k * n_in..(k + 1) * n_in];
                let mut s = Jet2::constant(layer.b[k]);
                for (wj, zj) in row.iter().zip(&z) {
                    s = s + *zj * *wj;
                }
                next.push(if li == last { s } else { s.tanh() });
            }
            z = next;
        }
        z[0].abs()
    }

    /// Build the network on a tape with weights as trainable leaves, so the
    /// loss can be differentiated with respect to every parameter.
    /// Parameter indices follow the frozen flat layout starting at 0.
    pub fn tape_eval(&self, tape: &mut Tape, point: [f64; 3]) -> Var {
        let (jt, jx, jy) = Jet2::seed(point[0], point[1], point[2]);
        let mut z = vec![tape.input(jt), tape.input(jx), tape.input(jy)];
        let last = self.layers.len() - 1;
        let mut off = 0;
        for (li, layer) in self.layers.iter().enumerate() {
            let n_in = z.len();
            let n_out = layer.b.len();
            let b_off = off + layer.w.len();
            let mut next = Vec::with_capacity(n_out);
            for k in 0..n_out {
                let mut s = tape.param(b_off + k, layer.b[k]);
                for j in 0..n_in {
                    let w = tape.param(off + k * n_in + j, layer.w[k * n_in + j]);
                    let wz = tape.mul(w, z[j]);
                    s = tape.add(s, wz);
                }
                next.push(if li == last { s } else { tape.tanh(s) });
            }
            z = next;
            off = b_off + n_out;
        }
        tape.unary(Unary::Abs, z[0])
    }

    /// Output jet components of a tape-built network as scalar nodes
    /// (u, u_t, u_x, u_y, u_xx, u_yy).
    pub fn tape_output_comps(tape: &mut Tape, u: Var) -> [Var; 6] {
        [
            tape.extract(Comp::Value, u),
            tape.extract(Comp::Dt, u),
            tape.extract(Comp::Dx, u),
            tape.extract(Comp::Dy, u),
            tape.extract(Comp::Dxx, u),
            tape.extract(Comp::Dyy, u),
        ]
    }
}

/// Which physical unknowns are being inferred.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamMode {
    /// Constant proliferation rate v.
    ConstantV,
    /// Spatially varying rate g(x,y) = v1 + v2 sin(r).
    SpatialV1V2,
    /// Constant v plus unknown initial plateau height a.
    VAndA,
}

impl ParamMode {
    pub fn len(&self) -> usize {
        match self {
            ParamMode::ConstantV => 1,
            ParamMode::SpatialV1V2 | ParamMode::VAndA => 2,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub mode: ParamMode,
    pub values: Vec<f64>,
}

impl PhysicalParams {
    pub fn new(mode: ParamMode, values: Vec<f64>) -> Result<Self> {
        if values.len() != mode.len() {
            return Err(Error::Config(format!(
                "mode {mode:?} needs {} values, got {}",
                mode.len(),
                values.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::Config("physical parameters must be finite".into()));
        }
        Ok(PhysicalParams { mode, values })
    }

    pub fn constant_v(v: f64) -> Self {
        PhysicalParams { mode: ParamMode::ConstantV, values: vec![v] }
    }

    pub fn spatial(v1: f64, v2: f64) -> Self {
        PhysicalParams { mode: ParamMode::SpatialV1V2, values: vec![v1, v2] }
    }

    pub fn v_and_a(v: f64, a: f64) -> Self {
        PhysicalParams { mode: ParamMode::VAndA, values: vec![v, a] }
    }

    /// Proliferation coefficient g(x, y) for this mode.
    pub fn growth_rate(&self, x: f64, y: f64) -> f64 {
        match self.mode {
            ParamMode::ConstantV | ParamMode::VAndA => self.values[0],
            ParamMode::SpatialV1V2 => {
                self.values[0] + self.values[1] * (x * x + y * y).sqrt().sin()
            }
        }
    }

    /// Initial plateau height (1 unless a is a trainable unknown).
    pub fn plateau(&self) -> f64 {
        match self.mode {
            ParamMode::VAndA => self.values[1],
            _ => 1.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn init_is_deterministic() {
        let a = NetworkParams::init_xavier(&DEFAULT_ARCH, 42).unwrap();
        let b = NetworkParams::init_xavier(&DEFAULT_ARCH, 42).unwrap();
        assert_eq!(a.flatten(), b.flatten());
        let c = NetworkParams::init_xavier(&DEFAULT_ARCH, 43).unwrap();
        assert_ne!(a.flatten(), c.flatten());
    }

    #[test]
    fn xavier_bound_first_layer() {
        let net = NetworkParams::init_xavier(&DEFAULT_ARCH, 7).unwrap();
        let lim = (6.0 / 67.0_f64).sqrt();
        assert!(net.layers[0].w.iter().all(|w| w.abs() < lim));
    }

    #[test]
    fn biases_start_at_zero() {
        let net = NetworkParams::init_xavier(&DEFAULT_ARCH, 7).unwrap();
        for l in &net.layers {
            assert!(l.b.iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn param_count_default_arch() {
        let net = NetworkParams::zeros(&DEFAULT_ARCH).unwrap();
        // 3·64+64 + 64·64+64 + 64·64+64 + 64·1+1
        assert_eq!(net.param_count(), 8641);
    }

    #[test]
    fn flatten_roundtrip() {
        let net = NetworkParams::init_xavier(&[3, 8, 1], 3).unwrap();
        let flat = net.flatten();
        let back = NetworkParams::unflatten(&[3, 8, 1], &flat).unwrap();
        assert_eq!(flat, back.flatten());
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = NetworkParams::zeros(&DEFAULT_ARCH).unwrap();
        assert_eq!(net.forward([0.5, 1.0, -2.0]), 0.0);
        let j = net.forward_jet([0.5, 1.0, -2.0]);
        assert_eq!(j.v, 0.0);
        assert_eq!(j.g, [0.0; 3]);
        assert_eq!(j.h, [0.0; 2]);
    }

    #[test]
    fn single_linear_layer_jet() {
        // u = |2x + 3t| at (1,1,1): value 5, grad (3,2,0), hess (0,0)
        let mut net = NetworkParams::zeros(&[3, 1]).unwrap();
        net.layers[0].w = vec![3.0, 2.0, 0.0]; // order (t, x, y)
        let j = net.forward_jet([1.0, 1.0, 1.0]);
        assert_eq!(j.v, 5.0);
        assert_eq!(j.g, [3.0, 2.0, 0.0]);
        assert_eq!(j.h, [0.0, 0.0]);
    }

    #[test]
    fn output_nonnegative() {
        let net = NetworkParams::init_xavier(&[3, 16, 1], 11).unwrap();
        for i in 0..50 {
            let p = [i as f64 * 0.02, (i as f64).sin(), (i as f64).cos()];
            assert!(net.forward(p) >= 0.0);
        }
    }

    #[test]
    fn forward_matches_jet_value() {
        let net = NetworkParams::init_xavier(&DEFAULT_ARCH, 5).unwrap();
        for p in [[0.1, 0.4, -0.3], [0.9, 2.5, -2.9], [0.0, 0.0, 0.0]] {
            assert_relative_eq!(net.forward(p), net.forward_jet(p).v, max_relative = 1e-14);
        }
    }

    #[test]
    fn bad_arch_rejected() {
        assert!(NetworkParams::init_xavier(&[3, 0, 1], 0).is_err());
        assert!(NetworkParams::init_xavier(&[2, 8, 1], 0).is_err());
        assert!(NetworkParams::init_xavier(&[3, 8, 2], 0).is_err());
    }

    #[test]
    fn physical_param_modes() {
        assert!(PhysicalParams::new(ParamMode::ConstantV, vec![1.0, 2.0]).is_err());
        let p = PhysicalParams::spatial(2.0, 0.5);
        let r: f64 = 2.0;
        assert_relative_eq!(
            p.growth_rate(2.0, 0.0),
            2.0 + 0.5 * r.sin(),
            max_relative = 1e-15
        );
        assert_eq!(PhysicalParams::v_and_a(3.0, 0.4).plateau(), 0.4);
        assert_eq!(PhysicalParams::constant_v(3.0).plateau(), 1.0);
    }
}
