//! Second-order forward jets over the inputs (t, x, y).
//!
//! A [`Jet2`] carries a value, the first derivatives with respect to t, x, y,
//! and the pure second derivatives with respect to x and y. Propagating jets
//! through the network yields exactly the derivatives that appear in the PDE
//! residual: u, u_t, u_x, u_y, u_xx, u_yy. Mixed second derivatives are not
//! tracked because the residual never needs them.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Index of ∂/∂t in the gradient slot.
pub const T: usize = 0;
/// Index of ∂/∂x in the gradient slot.
pub const X: usize = 1;
/// Index of ∂/∂y in the gradient slot.
pub const Y: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    /// Function value.
    pub v: f64,
    /// (∂/∂t, ∂/∂x, ∂/∂y).
    pub g: [f64; 3],
    /// (∂²/∂x², ∂²/∂y²).
    pub h: [f64; 2],
}

impl Jet2 {
    pub const fn constant(v: f64) -> Self {
        Jet2 { v, g: [0.0; 3], h: [0.0; 2] }
    }

    /// Seed for the t input: ∂t/∂t = 1.
    pub const fn var_t(v: f64) -> Self {
        Jet2 { v, g: [1.0, 0.0, 0.0], h: [0.0; 2] }
    }

    /// Seed for the x input: ∂x/∂x = 1, ∂²x/∂x² = 0.
    pub const fn var_x(v: f64) -> Self {
        Jet2 { v, g: [0.0, 1.0, 0.0], h: [0.0; 2] }
    }

    /// Seed for the y input.
    pub const fn var_y(v: f64) -> Self {
        Jet2 { v, g: [0.0, 0.0, 1.0], h: [0.0; 2] }
    }

    /// Seeded inputs for a space-time point.
    pub fn seed(t: f64, x: f64, y: f64) -> (Self, Self, Self) {
        (Self::var_t(t), Self::var_x(x), Self::var_y(y))
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite()
            && self.g.iter().all(|d| d.is_finite())
            && self.h.iter().all(|d| d.is_finite())
    }

    /// Chain rule for a scalar function given f(v), f'(v), f''(v).
    ///
    /// The hessian slot j pairs with gradient slot j + 1 (x with xx, y with yy).
    #[inline]
    pub fn unary(self, f0: f64, f1: f64, f2: f64) -> Self {
        Jet2 {
            v: f0,
            g: [f1 * self.g[0], f1 * self.g[1], f1 * self.g[2]],
            h: [
                f2 * self.g[X] * self.g[X] + f1 * self.h[0],
                f2 * self.g[Y] * self.g[Y] + f1 * self.h[1],
            ],
        }
    }

    pub fn tanh(self) -> Self {
        let t = self.v.tanh();
        let f1 = 1.0 - t * t;
        self.unary(t, f1, -2.0 * t * f1)
    }

    /// Absolute value; the subderivative at 0 is fixed to +1.
    pub fn abs(self) -> Self {
        let s = sign_plus(self.v);
        self.unary(self.v.abs(), s, 0.0)
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.unary(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.unary(c, -s, -c)
    }

    pub fn sqrt(self) -> Self {
        let r = self.v.sqrt();
        self.unary(r, 0.5 / r, -0.25 / (r * self.v))
    }

    pub fn ln(self) -> Self {
        self.unary(self.v.ln(), 1.0 / self.v, -1.0 / (self.v * self.v))
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.unary(e, e, e)
    }

    pub fn recip(self) -> Self {
        let r = 1.0 / self.v;
        self.unary(r, -r * r, 2.0 * r * r * r)
    }

    /// Integer power with exact polynomial derivatives.
    pub fn powi(self, n: i32) -> Self {
        match n {
            0 => Jet2::constant(1.0),
            1 => self,
            _ => {
                let f0 = self.v.powi(n);
                let f1 = f64::from(n) * self.v.powi(n - 1);
                let f2 = f64::from(n) * f64::from(n - 1) * self.v.powi(n - 2);
                self.unary(f0, f1, f2)
            }
        }
    }

    /// Square, cheaper and valid at v = 0 (unlike powi's v^(n-2) route).
    pub fn sq(self) -> Self {
        self * self
    }
}

/// Sign with the convention sign(0) = +1.
#[inline]
pub fn sign_plus(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, o: Jet2) -> Jet2 {
        Jet2 {
            v: self.v + o.v,
            g: [self.g[0] + o.g[0], self.g[1] + o.g[1], self.g[2] + o.g[2]],
            h: [self.h[0] + o.h[0], self.h[1] + o.h[1]],
        }
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, o: Jet2) -> Jet2 {
        Jet2 {
            v: self.v - o.v,
            g: [self.g[0] - o.g[0], self.g[1] - o.g[1], self.g[2] - o.g[2]],
            h: [self.h[0] - o.h[0], self.h[1] - o.h[1]],
        }
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, o: Jet2) -> Jet2 {
        Jet2 {
            v: self.v * o.v,
            g: [
                self.g[0] * o.v + self.v * o.g[0],
                self.g[1] * o.v + self.v * o.g[1],
                self.g[2] * o.v + self.v * o.g[2],
            ],
            h: [
                self.h[0] * o.v + 2.0 * self.g[X] * o.g[X] + self.v * o.h[0],
                self.h[1] * o.v + 2.0 * self.g[Y] * o.g[Y] + self.v * o.h[1],
            ],
        }
    }
}

impl Div for Jet2 {
    type Output = Jet2;
    fn div(self, o: Jet2) -> Jet2 {
        self * o.recip()
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        Jet2 {
            v: -self.v,
            g: [-self.g[0], -self.g[1], -self.g[2]],
            h: [-self.h[0], -self.h[1]],
        }
    }
}

impl Mul<f64> for Jet2 {
    type Output = Jet2;
    fn mul(self, s: f64) -> Jet2 {
        Jet2 {
            v: self.v * s,
            g: [self.g[0] * s, self.g[1] * s, self.g[2] * s],
            h: [self.h[0] * s, self.h[1] * s],
        }
    }
}

impl Add<f64> for Jet2 {
    type Output = Jet2;
    fn add(self, s: f64) -> Jet2 {
        Jet2 { v: self.v + s, ..self }
    }
}
