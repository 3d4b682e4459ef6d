//! Truncated Taylor series ("jets") for exact derivative stacks.
//!
//! A [`Jet`] holds the normalized Taylor coefficients `c_k = u^(k)(x0) / k!`
//! for `k = 0..=ORDER`. Arithmetic on jets propagates all derivatives up to
//! `ORDER` exactly (up to rounding), which is how closed-form profiles deliver
//! the fourth derivatives needed by the viscous residuals.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Highest derivative order carried by a jet.
pub const ORDER: usize = 5;
const LEN: usize = ORDER + 1;

const FACTORIAL: [f64; LEN] = [1.0, 1.0, 2.0, 6.0, 24.0, 120.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub c: [f64; LEN],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; LEN];
        c[0] = v;
        Jet { c }
    }

    /// The independent variable at `x0`.
    pub fn variable(x0: f64) -> Self {
        let mut c = [0.0; LEN];
        c[0] = x0;
        c[1] = 1.0;
        Jet { c }
    }

    /// Builds a jet from all derivatives `u, u', ..., u^(ORDER)`.
    pub fn from_derivatives(d: [f64; LEN]) -> Self {
        let mut c = [0.0; LEN];
        for k in 0..LEN {
            c[k] = d[k] / FACTORIAL[k];
        }
        Jet { c }
    }

    pub fn derivatives(&self) -> [f64; LEN] {
        let mut d = [0.0; LEN];
        for k in 0..LEN {
            d[k] = self.c[k] * FACTORIAL[k];
        }
        d
    }

    /// Builds a jet from a stack `[u, .., u'''']`; the fifth derivative is
    /// taken as zero.
    pub fn from_stack(d: &[f64; 5]) -> Self {
        let mut full = [0.0; LEN];
        full[..5].copy_from_slice(d);
        Jet::from_derivatives(full)
    }

    /// The stack `[u, u', u'', u''', u'''']`.
    pub fn stack(&self) -> [f64; 5] {
        let d = self.derivatives();
        [d[0], d[1], d[2], d[3], d[4]]
    }

    /// Derivative jet `u'`; its top coefficient is unknown and set to zero.
    pub fn diff(&self) -> Self {
        let mut c = [0.0; LEN];
        for k in 0..ORDER {
            c[k] = self.c[k + 1] * (k + 1) as f64;
        }
        Jet { c }
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn derivative(&self, k: usize) -> f64 {
        self.c[k] * FACTORIAL[k]
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|v| v.is_finite())
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut c = self.c;
        c.iter_mut().for_each(|v| *v *= s);
        Jet { c }
    }

    /// Composes an outer function, given by its Taylor coefficients at
    /// `self.value()`, with this jet.
    pub fn compose(&self, outer: &[f64; LEN]) -> Self {
        // Horner in the shifted variable u - u0.
        let mut du = *self;
        du.c[0] = 0.0;
        let mut acc = Jet::constant(outer[ORDER]);
        for k in (0..ORDER).rev() {
            acc = acc * du + Jet::constant(outer[k]);
        }
        acc
    }

    /// `self^a` for a real exponent; requires a positive base.
    pub fn powf(&self, a: f64) -> Self {
        let u0 = self.c[0];
        let mut w = [0.0; LEN];
        w[0] = u0.powf(a);
        for k in 1..LEN {
            let mut acc = 0.0;
            for j in 0..k {
                acc += (a * (k - j) as f64 - j as f64) * self.c[k - j] * w[j];
            }
            w[k] = acc / (k as f64 * u0);
        }
        Jet { c: w }
    }

    pub fn powi(&self, n: i32) -> Self {
        match n {
            0 => Jet::constant(1.0),
            n if n < 0 => Jet::constant(1.0) / self.powi(-n),
            n => {
                let mut acc = *self;
                for _ in 1..n {
                    acc = acc * *self;
                }
                acc
            }
        }
    }

    pub fn sqrt(&self) -> Self {
        self.powf(0.5)
    }

    pub fn exp(&self) -> Self {
        let e0 = self.c[0].exp();
        let mut outer = [0.0; LEN];
        for k in 0..LEN {
            outer[k] = e0 / FACTORIAL[k];
        }
        self.compose(&outer)
    }

    pub fn ln(&self) -> Self {
        let u0 = self.c[0];
        let mut outer = [0.0; LEN];
        outer[0] = u0.ln();
        for k in 1..LEN {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            outer[k] = sign / (k as f64 * u0.powi(k as i32));
        }
        self.compose(&outer)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut c = self.c;
        for k in 0..LEN {
            c[k] += o.c[k];
        }
        Jet { c }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        let mut c = self.c;
        for k in 0..LEN {
            c[k] -= o.c[k];
        }
        Jet { c }
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut c = [0.0; LEN];
        for i in 0..LEN {
            for j in 0..LEN - i {
                c[i + j] += self.c[i] * o.c[j];
            }
        }
        Jet { c }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        let mut q = [0.0; LEN];
        for k in 0..LEN {
            let mut acc = self.c[k];
            for j in 0..k {
                acc -= q[j] * o.c[k - j];
            }
            q[k] = acc / o.c[0];
        }
        Jet { c: q }
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, o: f64) -> Jet {
        let mut c = self.c;
        c[0] += o;
        Jet { c }
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(self, o: f64) -> Jet {
        self + (-o)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, o: f64) -> Jet {
        self.scale(o)
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(self, o: f64) -> Jet {
        self.scale(1.0 / o)
    }
}

impl Add<Jet> for f64 {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        o + self
    }
}

impl Sub<Jet> for f64 {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        -o + self
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        o.scale(self)
    }
}

impl Div<Jet> for f64 {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        Jet::constant(self) / o
    }
}
