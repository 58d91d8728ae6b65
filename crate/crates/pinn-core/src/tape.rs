//! Reverse accumulation over jet-valued scalars.
//!
//! Each tape node stores a [`Jet2`] propagated forward at build time. The
//! backward pass differentiates the scalar *value* of a chosen node with
//! respect to every trainable parameter leaf, treating all six jet components
//! as intermediate quantities (reverse-over-forward). This is the general,
//! unoptimized engine: it supports arbitrary composition of the frozen
//! primitive set and is used for small graphs and for cross-checking the
//! batched network path.

use crate::error::{Error, Result};
use crate::jet::{sign_plus, Jet2};

#[derive(Debug, Clone, Copy)]
pub struct Var(u32);

#[derive(Debug, Clone, Copy)]
pub enum Unary {
    Tanh,
    Abs,
    Sin,
    Sqrt,
    Ln,
    Exp,
    Recip,
    Powi(i32),
}

/// Component of a jet extracted into a plain scalar node.
#[derive(Debug, Clone, Copy)]
pub enum Comp {
    Value,
    Dt,
    Dx,
    Dy,
    Dxx,
    Dyy,
}

impl Comp {
    fn slot(self) -> usize {
        match self {
            Comp::Value => 0,
            Comp::Dt => 1,
            Comp::Dx => 2,
            Comp::Dy => 3,
            Comp::Dxx => 4,
            Comp::Dyy => 5,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Leaf,
    Param(usize),
    Add(u32, u32),
    Sub(u32, u32),
    Mul(u32, u32),
    Neg(u32),
    Un(Unary, u32),
    Extract(Comp, u32),
}

struct Node {
    jet: Jet2,
    op: Op,
}

/// Adjoint of one node: sensitivities of the loss to (v, gt, gx, gy, hxx, hyy).
type Adj = [f64; 6];

fn comps(j: &Jet2) -> [f64; 6] {
    [j.v, j.g[0], j.g[1], j.g[2], j.h[0], j.h[1]]
}

/// (f', f'', f''') of a unary primitive at v.
fn derivs(kind: Unary, v: f64) -> (f64, f64, f64) {
    match kind {
        Unary::Tanh => {
            let t = v.tanh();
            let f1 = 1.0 - t * t;
            let f2 = -2.0 * t * f1;
            (f1, f2, -2.0 * f1 * f1 - 2.0 * t * f2)
        }
        Unary::Abs => (sign_plus(v), 0.0, 0.0),
        Unary::Sin => (v.cos(), -v.sin(), -v.cos()),
        Unary::Sqrt => {
            let r = v.sqrt();
            (0.5 / r, -0.25 / (r * v), 0.375 / (r * v * v))
        }
        Unary::Ln => (1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v)),
        Unary::Exp => {
            let e = v.exp();
            (e, e, e)
        }
        Unary::Recip => {
            let r = 1.0 / v;
            (-r * r, 2.0 * r * r * r, -6.0 * r * r * r * r)
        }
        Unary::Powi(n) => {
            let n = f64::from(n);
            (
                n * v.powf(n - 1.0),
                n * (n - 1.0) * v.powf(n - 2.0),
                n * (n - 1.0) * (n - 2.0) * v.powf(n - 3.0),
            )
        }
    }
}

fn apply_unary(kind: Unary, a: Jet2) -> Jet2 {
    match kind {
        Unary::Tanh => a.tanh(),
        Unary::Abs => a.abs(),
        Unary::Sin => a.sin(),
        Unary::Sqrt => a.sqrt(),
        Unary::Ln => a.ln(),
        Unary::Exp => a.exp(),
        Unary::Recip => a.recip(),
        Unary::Powi(n) => a.powi(n),
    }
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    n_params: usize,
}

impl Tape {
    pub fn new(n_params: usize) -> Self {
        Tape { nodes: Vec::new(), n_params }
    }

    fn push(&mut self, jet: Jet2, op: Op) -> Var {
        self.nodes.push(Node { jet, op });
        Var(self.nodes.len() as u32 - 1)
    }

    pub fn value(&self, v: Var) -> f64 {
        self.nodes[v.0 as usize].jet.v
    }

    pub fn jet(&self, v: Var) -> Jet2 {
        self.nodes[v.0 as usize].jet
    }

    pub fn constant(&mut self, v: f64) -> Var {
        self.push(Jet2::constant(v), Op::Leaf)
    }

    /// Seeded input leaf (t, x or y of a collocation point).
    pub fn input(&mut self, jet: Jet2) -> Var {
        self.push(jet, Op::Leaf)
    }

    /// Trainable leaf; `index` addresses the flat parameter vector.
    pub fn param(&mut self, index: usize, value: f64) -> Var {
        assert!(index < self.n_params);
        self.push(Jet2::constant(value), Op::Param(index))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let jet = self.jet(a) + self.jet(b);
        self.push(jet, Op::Add(a.0, b.0))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let jet = self.jet(a) - self.jet(b);
        self.push(jet, Op::Sub(a.0, b.0))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let jet = self.jet(a) * self.jet(b);
        self.push(jet, Op::Mul(a.0, b.0))
    }

    pub fn div(&mut self, a: Var, b: Var) -> Var {
        let r = self.unary(Unary::Recip, b);
        self.mul(a, r)
    }

    pub fn neg(&mut self, a: Var) -> Var {
        let jet = -self.jet(a);
        self.push(jet, Op::Neg(a.0))
    }

    pub fn unary(&mut self, kind: Unary, a: Var) -> Var {
        let jet = apply_unary(kind, self.jet(a));
        self.push(jet, Op::Un(kind, a.0))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(Unary::Tanh, a)
    }

    pub fn abs(&mut self, a: Var) -> Var {
        self.unary(Unary::Abs, a)
    }

    pub fn sq(&mut self, a: Var) -> Var {
        self.mul(a, a)
    }

    /// Pull one jet component out as a plain scalar node.
    pub fn extract(&mut self, comp: Comp, a: Var) -> Var {
        let jet = Jet2::constant(comps(&self.jet(a))[comp.slot()]);
        self.push(jet, Op::Extract(comp, a.0))
    }

    /// Gradient of the scalar value of `loss` with respect to all parameter
    /// leaves. Errors if any node holds a non-finite jet.
    pub fn gradient(&self, loss: Var) -> Result<Vec<f64>> {
        for (i, n) in self.nodes.iter().enumerate() {
            if !n.jet.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite value at tape node {i} ({:?})",
                    n.op
                )));
            }
        }
        let mut adj: Vec<Adj> = vec![[0.0; 6]; self.nodes.len()];
        adj[loss.0 as usize][0] = 1.0;
        for i in (0..self.nodes.len()).rev() {
            let a_out = adj[i];
            if a_out == [0.0; 6] {
                continue;
            }
            match self.nodes[i].op {
                Op::Leaf | Op::Param(_) => {}
                Op::Add(a, b) => {
                    for s in 0..6 {
                        adj[a as usize][s] += a_out[s];
                        adj[b as usize][s] += a_out[s];
                    }
                }
                Op::Sub(a, b) => {
                    for s in 0..6 {
                        adj[a as usize][s] += a_out[s];
                        adj[b as usize][s] -= a_out[s];
                    }
                }
                Op::Neg(a) => {
                    for s in 0..6 {
                        adj[a as usize][s] -= a_out[s];
                    }
                }
                Op::Mul(a, b) => {
                    let ja = self.nodes[a as usize].jet;
                    let jb = self.nodes[b as usize].jet;
                    let (ca, cb) = (comps(&ja), comps(&jb));
                    let (aa, ab) = mul_backward(&ca, &cb, &a_out);
                    for s in 0..6 {
                        adj[a as usize][s] += aa[s];
                        adj[b as usize][s] += ab[s];
                    }
                }
                Op::Un(kind, a) => {
                    let ja = self.nodes[a as usize].jet;
                    let back = unary_backward(kind, &comps(&ja), &a_out);
                    for s in 0..6 {
                        adj[a as usize][s] += back[s];
                    }
                }
                Op::Extract(comp, a) => {
                    adj[a as usize][comp.slot()] += a_out[0];
                }
            }
        }
        let mut grad = vec![0.0; self.n_params];
        for (i, n) in self.nodes.iter().enumerate() {
            if let Op::Param(p) = n.op {
                grad[p] += adj[i][0];
            }
        }
        Ok(grad)
    }
}

/// Backward rule for c = a * b over jet components.
///
/// c.v     = av bv
/// c.g[i]  = ag[i] bv + av bg[i]
/// c.h[j]  = ah[j] bv + 2 ag[j+1] bg[j+1] + av bh[j]
fn mul_backward(a: &[f64; 6], b: &[f64; 6], out: &Adj) -> (Adj, Adj) {
    let mut aa = [0.0; 6];
    let mut ab = [0.0; 6];
    // value
    aa[0] += out[0] * b[0];
    ab[0] += out[0] * a[0];
    // gradients (slots 1..=3)
    for i in 1..=3 {
        aa[i] += out[i] * b[0];
        aa[0] += out[i] * b[i];
        ab[0] += out[i] * a[i];
        ab[i] += out[i] * a[0];
    }
    // hessian diag (slots 4, 5 pair with gradient slots 2, 3)
    for j in 0..2 {
        let (hs, gs) = (4 + j, 2 + j);
        aa[hs] += out[hs] * b[0];
        aa[gs] += 2.0 * out[hs] * b[gs];
        aa[0] += out[hs] * b[hs];
        ab[hs] += out[hs] * a[0];
        ab[gs] += 2.0 * out[hs] * a[gs];
        ab[0] += out[hs] * a[hs];
    }
    (aa, ab)
}

/// Backward rule for c = f(a):
///
/// c.v    = f
/// c.g[i] = f' ag[i]
/// c.h[j] = f'' ag[j+1]^2 + f' ah[j]
fn unary_backward(kind: Unary, a: &[f64; 6], out: &Adj) -> Adj {
    let (f1, f2, f3) = derivs(kind, a[0]);
    let mut back = [0.0; 6];
    back[0] += out[0] * f1;
    for i in 1..=3 {
        back[i] += out[i] * f1;
        back[0] += out[i] * f2 * a[i];
    }
    for j in 0..2 {
        let (hs, gs) = (4 + j, 2 + j);
        back[0] += out[hs] * (f3 * a[gs] * a[gs] + f2 * a[hs]);
        back[gs] += out[hs] * 2.0 * f2 * a[gs];
        back[hs] += out[hs] * f1;
    }
    back
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_gradient() {
        // loss = v^2 at v = 3 -> d/dv = 6
        let mut t = Tape::new(1);
        let v = t.param(0, 3.0);
        let loss = t.sq(v);
        let g = t.gradient(loss).unwrap();
        assert_eq!(g[0], 6.0);
    }

    #[test]
    fn gradient_through_extracted_derivatives() {
        // u = tanh(w * x), loss = (du/dx)^2. d loss/dw has a closed form.
        let w0 = 0.7;
        let x0 = 1.3;
        let mut t = Tape::new(1);
        let w = t.param(0, w0);
        let x = t.input(Jet2::var_x(x0));
        let wx = t.mul(w, x);
        let u = t.tanh(wx);
        let ux = t.extract(Comp::Dx, u);
        let loss = t.sq(ux);
        let g = t.gradient(loss).unwrap();

        // analytic: ux = w sech^2(wx); d(ux^2)/dw
        let s = (w0 * x0).tanh();
        let sech2 = 1.0 - s * s;
        let ux_v = w0 * sech2;
        let dux_dw = sech2 + w0 * (-2.0 * s * sech2) * x0;
        assert_relative_eq!(g[0], 2.0 * ux_v * dux_dw, max_relative = 1e-12);
    }

    #[test]
    fn second_derivative_extraction_backward() {
        // u = sin(w x); uxx = -w^2 sin(w x); loss = uxx. Check d loss/dw by FD.
        let x0 = 0.9;
        let loss_of = |w0: f64| -> f64 {
            let mut t = Tape::new(1);
            let w = t.param(0, w0);
            let x = t.input(Jet2::var_x(x0));
            let wx = t.mul(w, x);
            let u = t.unary(Unary::Sin, wx);
            let uxx = t.extract(Comp::Dxx, u);
            t.value(uxx)
        };
        let w0 = 0.8;
        let mut t = Tape::new(1);
        let w = t.param(0, w0);
        let x = t.input(Jet2::var_x(x0));
        let wx = t.mul(w, x);
        let u = t.unary(Unary::Sin, wx);
        let uxx = t.extract(Comp::Dxx, u);
        let g = t.gradient(uxx).unwrap();
        let h = 1e-5;
        let fd = (loss_of(w0 + h) - loss_of(w0 - h)) / (2.0 * h);
        assert_relative_eq!(g[0], fd, max_relative = 1e-7);
    }

    #[test]
    fn non_finite_detected() {
        let mut t = Tape::new(1);
        let v = t.param(0, 0.0);
        let bad = t.unary(Unary::Ln, v);
        assert!(t.gradient(bad).is_err());
    }

    #[test]
    fn deterministic_bit_identical() {
        let run = || {
            let mut t = Tape::new(2);
            let a = t.param(0, 0.3);
            let b = t.param(1, -1.2);
            let x = t.input(Jet2::var_x(0.5));
            let ax = t.mul(a, x);
            let s = t.add(ax, b);
            let u = t.tanh(s);
            let q = t.div(u, a);
            let loss = t.sq(q);
            t.gradient(loss).unwrap()
        };
        let g1 = run();
        let g2 = run();
        assert_eq!(g1, g2);
    }
}
