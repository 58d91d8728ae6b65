//! Batched network evaluation and backpropagation.
//!
//! Training evaluates the network at thousands of points per epoch, so this
//! module propagates jets for whole point batches at once. A batch is laid
//! out as one matrix per layer with `ncomp` columns per point (6 jet
//! components for interior points, 1 for value-only points); linear layers
//! then become single GEMM calls. The backward pass carries an adjoint per
//! jet component and yields the exact gradient with respect to every network
//! parameter in the frozen flat layout.
//!
//! Results are bit-deterministic: accumulation order is fixed and no
//! threading is involved.

use crate::jet::{sign_plus, Jet2};
use crate::net::NetworkParams;

/// Number of jet components tracked per point in the full path.
pub const NCOMP: usize = 6;

/// Gradient of a scalar loss with respect to every trainable scalar.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrad {
    /// Aligned with the frozen flat network layout.
    pub wrt_network: Vec<f64>,
    /// Aligned with `PhysicalParams::values`.
    pub wrt_physical: Vec<f64>,
}

impl ParamGrad {
    pub fn zeros(n_network: usize, n_physical: usize) -> Self {
        ParamGrad {
            wrt_network: vec![0.0; n_network],
            wrt_physical: vec![0.0; n_physical],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.wrt_network.iter().all(|g| g.is_finite())
            && self.wrt_physical.iter().all(|g| g.is_finite())
    }
}

/// Forward state kept for the backward pass.
pub struct BatchCache {
    ncomp: usize,
    n_points: usize,
    /// Input activation of each layer, n_in x (n_points * ncomp).
    act: Vec<Vec<f64>>,
    /// Pre-activation of each layer, n_out x (n_points * ncomp).
    pre: Vec<Vec<f64>>,
}

impl BatchCache {
    /// Raw (pre-abs) output jet of one point. Unset components are zero in
    /// the value-only path.
    pub fn raw_output(&self, p: usize) -> Jet2 {
        let last = self.pre.last().unwrap();
        let c = self.ncomp;
        if c == 1 {
            Jet2::constant(last[p])
        } else {
            Jet2 {
                v: last[p * c],
                g: [last[p * c + 1], last[p * c + 2], last[p * c + 3]],
                h: [last[p * c + 4], last[p * c + 5]],
            }
        }
    }

    /// Network output jet after the absolute-value transform.
    pub fn output(&self, p: usize) -> Jet2 {
        let raw = self.raw_output(p);
        let s = sign_plus(raw.v);
        Jet2 {
            v: raw.v.abs(),
            g: [s * raw.g[0], s * raw.g[1], s * raw.g[2]],
            h: [s * raw.h[0], s * raw.h[1]],
        }
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }
}

#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    rsa: isize,
    csa: isize,
    b: &[f64],
    rsb: isize,
    csb: isize,
    beta: f64,
    c: &mut [f64],
) {
    debug_assert!(c.len() >= m * n);
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Jet-seeded input matrix: rows (t, x, y), one column block per point.
fn seed_inputs(points: &[[f64; 3]], ncomp: usize) -> Vec<f64> {
    let cols = points.len() * ncomp;
    let mut a = vec![0.0; 3 * cols];
    for (p, pt) in points.iter().enumerate() {
        for row in 0..3 {
            a[row * cols + p * ncomp] = pt[row];
            if ncomp == NCOMP {
                // seed d(input_row)/d(input_row) = 1
                a[row * cols + p * ncomp + 1 + row] = 1.0;
            }
        }
    }
    a
}

/// Forward pass over a batch. `ncomp` is 6 (full jets) or 1 (values only).
pub fn batch_forward(net: &NetworkParams, points: &[[f64; 3]], ncomp: usize) -> BatchCache {
    assert!(ncomp == 1 || ncomp == NCOMP);
    let n_points = points.len();
    let cols = n_points * ncomp;
    let n_layers = net.layers.len();
    let mut act = Vec::with_capacity(n_layers);
    let mut pre = Vec::with_capacity(n_layers);
    act.push(seed_inputs(points, ncomp));
    for (li, layer) in net.layers.iter().enumerate() {
        let n_in = net.arch[li];
        let n_out = net.arch[li + 1];
        let mut z = vec![0.0; n_out * cols];
        gemm(
            n_out,
            n_in,
            cols,
            &layer.w,
            n_in as isize,
            1,
            &act[li],
            cols as isize,
            1,
            0.0,
            &mut z,
        );
        // bias enters the value component only
        for (k, bk) in layer.b.iter().enumerate() {
            let row = &mut z[k * cols..(k + 1) * cols];
            for p in 0..n_points {
                row[p * ncomp] += bk;
            }
        }
        if li + 1 < n_layers {
            let mut a = vec![0.0; n_out * cols];
            if ncomp == 1 {
                for (ai, zi) in a.iter_mut().zip(&z) {
                    *ai = zi.tanh();
                }
            } else {
                for k in 0..n_out {
                    let zrow = &z[k * cols..(k + 1) * cols];
                    let arow = &mut a[k * cols..(k + 1) * cols];
                    for p in 0..n_points {
                        let j = p * NCOMP;
                        let t = zrow[j].tanh();
                        let f1 = 1.0 - t * t;
                        let f2 = -2.0 * t * f1;
                        arow[j] = t;
                        for s in 1..4 {
                            arow[j + s] = f1 * zrow[j + s];
                        }
                        // hess slot 4 pairs with grad slot 2 (x), 5 with 3 (y)
                        arow[j + 4] = f2 * zrow[j + 2] * zrow[j + 2] + f1 * zrow[j + 4];
                        arow[j + 5] = f2 * zrow[j + 3] * zrow[j + 3] + f1 * zrow[j + 5];
                    }
                }
            }
            act.push(a);
        }
        pre.push(z);
    }
    BatchCache { ncomp, n_points, act, pre }
}

/// Backward pass. `seeds[p]` is the adjoint of the loss with respect to the
/// *post-abs* output jet components of point p, packed (v, gt, gx, gy, hxx,
/// hyy) with trailing entries ignored when `ncomp == 1`. Accumulates the
/// network-parameter gradient into `grad` (frozen flat layout).
pub fn batch_backward(
    net: &NetworkParams,
    cache: &BatchCache,
    seeds: &[[f64; 6]],
    grad: &mut [f64],
) {
    let ncomp = cache.ncomp;
    let n_points = cache.n_points;
    assert_eq!(seeds.len(), n_points);
    let cols = n_points * ncomp;
    let n_layers = net.layers.len();

    // adjoint of the raw output: abs chain multiplies every component by sign
    let out_width = *net.arch.last().unwrap();
    debug_assert_eq!(out_width, 1);
    let mut adj = vec![0.0; cols];
    for (p, seed) in seeds.iter().enumerate() {
        let s = sign_plus(cache.pre[n_layers - 1][p * ncomp]);
        for c in 0..ncomp {
            adj[p * ncomp + c] = s * seed[c];
        }
    }

    let mut layer_offsets = Vec::with_capacity(n_layers);
    let mut off = 0;
    for l in &net.layers {
        layer_offsets.push(off);
        off += l.w.len() + l.b.len();
    }

    for li in (0..n_layers).rev() {
        let n_in = net.arch[li];
        let n_out = net.arch[li + 1];
        let layer = &net.layers[li];
        let w_off = layer_offsets[li];
        let b_off = w_off + layer.w.len();

        // adj currently holds the adjoint of this layer's pre-activation.
        // dW += adjPre . act^T ; db += value-component column sums
        gemm(
            n_out,
            cols,
            n_in,
            &adj,
            cols as isize,
            1,
            &cache.act[li],
            1,
            cols as isize,
            1.0,
            &mut grad[w_off..w_off + n_out * n_in],
        );
        for k in 0..n_out {
            let row = &adj[k * cols..(k + 1) * cols];
            let mut s = 0.0;
            for p in 0..n_points {
                s += row[p * ncomp];
            }
            grad[b_off + k] += s;
        }

        if li == 0 {
            break;
        }

        // adjoint of the previous activation: W^T . adjPre
        let mut adj_act = vec![0.0; n_in * cols];
        gemm(
            n_in,
            n_out,
            cols,
            &layer.w,
            1,
            n_in as isize,
            &adj,
            cols as isize,
            1,
            0.0,
            &mut adj_act,
        );

        // through tanh of layer li-1: pre -> act
        let zpre = &cache.pre[li - 1];
        let mut adj_pre = vec![0.0; n_in * cols];
        if ncomp == 1 {
            for i in 0..n_in * cols {
                let t = zpre[i].tanh();
                adj_pre[i] = adj_act[i] * (1.0 - t * t);
            }
        } else {
            for k in 0..n_in {
                let z = &zpre[k * cols..(k + 1) * cols];
                let ao = &adj_act[k * cols..(k + 1) * cols];
                let ap = &mut adj_pre[k * cols..(k + 1) * cols];
                for p in 0..n_points {
                    let j = p * NCOMP;
                    let t = z[j].tanh();
                    let f1 = 1.0 - t * t;
                    let f2 = -2.0 * t * f1;
                    let f3 = -2.0 * f1 * f1 - 2.0 * t * f2;
                    let mut av = ao[j] * f1;
                    for s in 1..4 {
                        av += ao[j + s] * f2 * z[j + s];
                        ap[j + s] = ao[j + s] * f1;
                    }
                    for (hs, gs) in [(4usize, 2usize), (5, 3)] {
                        let zh = z[j + hs];
                        let zg = z[j + gs];
                        av += ao[j + hs] * (f3 * zg * zg + f2 * zh);
                        ap[j + gs] += ao[j + hs] * 2.0 * f2 * zg;
                        ap[j + hs] += ao[j + hs] * f1;
                    }
                    ap[j] = av;
                }
            }
        }
        adj = adj_pre;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tape::Tape;
    use approx::assert_relative_eq;

    fn small_net(seed: u64) -> NetworkParams {
        let mut net = NetworkParams::init_xavier(&[3, 8, 6, 1], seed).unwrap();
        // nonzero biases so the bias gradient path is exercised
        for l in &mut net.layers {
            for (i, b) in l.b.iter_mut().enumerate() {
                *b = 0.05 * (i as f64 + 1.0);
            }
        }
        net
    }

    #[test]
    fn batch_forward_matches_scalar_jets() {
        let net = small_net(9);
        let points = [[0.2, 0.5, -0.8], [0.9, -2.1, 1.4], [0.0, 0.1, 0.0]];
        let cache = batch_forward(&net, &points, NCOMP);
        for (p, pt) in points.iter().enumerate() {
            let a = cache.output(p);
            let b = net.forward_jet(*pt);
            assert_relative_eq!(a.v, b.v, max_relative = 1e-13, epsilon = 1e-15);
            for i in 0..3 {
                assert_relative_eq!(a.g[i], b.g[i], max_relative = 1e-12, epsilon = 1e-14);
            }
            for i in 0..2 {
                assert_relative_eq!(a.h[i], b.h[i], max_relative = 1e-11, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn value_only_path_matches_forward() {
        let net = small_net(3);
        let points = [[0.3, 1.5, 2.0], [0.7, -0.4, 0.2]];
        let cache = batch_forward(&net, &points, 1);
        for (p, pt) in points.iter().enumerate() {
            assert_relative_eq!(cache.output(p).v, net.forward(*pt), max_relative = 1e-14);
        }
    }

    // The tape engine is the independent general-purpose route; the batched
    // engine must agree with it on a loss that touches all six components.
    #[test]
    fn backward_matches_tape_gradient() {
        let net = small_net(17);
        let n = net.param_count();
        let points = [[0.4, 0.3, -0.6], [0.1, 1.2, 0.8]];

        // loss = sum over points of (u + 2 u_t + 3 u_x - u_y + 0.5 u_xx - u_yy)^2
        let coef = [1.0, 2.0, 3.0, -1.0, 0.5, -1.0];

        let mut tape_grad = vec![0.0; n];
        for pt in &points {
            let mut tape = Tape::new(n);
            let u = net.tape_eval(&mut tape, *pt);
            let comps = NetworkParams::tape_output_comps(&mut tape, u);
            let mut acc = tape.constant(0.0);
            for (c, var) in coef.iter().zip(comps) {
                let cst = tape.constant(*c);
                let term = tape.mul(cst, var);
                acc = tape.add(acc, term);
            }
            let loss = tape.sq(acc);
            let g = tape.gradient(loss).unwrap();
            for (t, gi) in tape_grad.iter_mut().zip(g) {
                *t += gi;
            }
        }

        let cache = batch_forward(&net, &points, NCOMP);
        let mut seeds = vec![[0.0; 6]; points.len()];
        for p in 0..points.len() {
            let out = cache.output(p);
            let lin = coef[0] * out.v
                + coef[1] * out.g[0]
                + coef[2] * out.g[1]
                + coef[3] * out.g[2]
                + coef[4] * out.h[0]
                + coef[5] * out.h[1];
            for c in 0..6 {
                seeds[p][c] = 2.0 * lin * coef[c];
            }
        }
        let mut grad = vec![0.0; n];
        batch_backward(&net, &cache, &seeds, &mut grad);

        for i in 0..n {
            assert_relative_eq!(grad[i], tape_grad[i], max_relative = 1e-9, epsilon = 1e-12);
        }
    }

    #[test]
    fn backward_value_only_matches_tape() {
        let net = small_net(23);
        let n = net.param_count();
        let pt = [0.6, -1.0, 2.2];

        let mut tape = Tape::new(n);
        let u = net.tape_eval(&mut tape, pt);
        let uval = tape.extract(crate::tape::Comp::Value, u);
        let loss = tape.sq(uval);
        let tg = tape.gradient(loss).unwrap();

        let cache = batch_forward(&net, &[pt], 1);
        let mut seeds = vec![[0.0; 6]];
        seeds[0][0] = 2.0 * cache.output(0).v;
        let mut grad = vec![0.0; n];
        batch_backward(&net, &cache, &seeds, &mut grad);
        for i in 0..n {
            assert_relative_eq!(grad[i], tg[i], max_relative = 1e-10, epsilon = 1e-13);
        }
    }
}
