//! Special functions for the viscous nonexistence analysis: the Pochhammer
//! symbol, log-Gamma, and the Gauss hypergeometric series `2F1` together with
//! its closed form at `z = 1`.

use crate::error::{Result, VortexError};
use std::f64::consts::PI;

/// Parameters `(a, b; c)` of `2F1(a, b; c; z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl HyperParams {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if c <= 0.0 && c == c.round() {
            return Err(VortexError::Domain(format!(
                "2F1 lower parameter c = {c} is zero or a negative integer"
            )));
        }
        Ok(HyperParams { a, b, c })
    }

    /// The parameters `((1-b)/2, b/2; 3/2)` of the viscous azimuthal profile
    /// for a model exponent `b`.
    pub fn for_model_exponent(b_model: f64) -> Self {
        HyperParams {
            a: 0.5 * (1.0 - b_model),
            b: 0.5 * b_model,
            c: 1.5,
        }
    }

    /// Parameters of the `k`-th derivative series, `(a+k, b+k; c+k)`.
    pub fn shifted(&self, k: usize) -> Self {
        let k = k as f64;
        HyperParams {
            a: self.a + k,
            b: self.b + k,
            c: self.c + k,
        }
    }
}

/// Truncation controls for [`gauss_2f1_with`].
#[derive(Debug, Clone, Copy)]
pub struct SeriesControl {
    /// Stop once `|term| < rel_tol * |partial sum|`.
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl Default for SeriesControl {
    fn default() -> Self {
        SeriesControl {
            rel_tol: 1e-16,
            max_terms: 1_000_000,
        }
    }
}

/// Rising factorial `(x)_n = x (x+1) ... (x+n-1)`, with `(x)_0 = 1`.
pub fn pochhammer(x: f64, n: u32) -> f64 {
    (0..n).fold(1.0, |acc, k| acc * (x + k as f64))
}

// Lanczos approximation, g = 7, nine coefficients.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural logarithm of `Gamma(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(VortexError::Domain(format!("ln_gamma requires x > 0, got {x}")));
    }
    if x == 1.0 || x == 2.0 {
        return Ok(0.0);
    }
    if x < 0.5 {
        // Shift up; the series is least accurate for small arguments.
        return Ok(ln_gamma(x + 1.0)? - x.ln());
    }
    let z = x - 1.0;
    let mut series = LANCZOS[0];
    for (i, coeff) in LANCZOS.iter().enumerate().skip(1) {
        series += coeff / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    Ok(0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + series.ln())
}

/// `1 / Gamma(z)` for any real `z`; exactly zero at the poles of Gamma.
pub fn recip_gamma(z: f64) -> f64 {
    if z <= 0.0 && z == z.round() {
        return 0.0;
    }
    if z > 0.0 {
        (-ln_gamma(z).expect("positive argument")).exp()
    } else {
        // Reflection: 1/Gamma(z) = Gamma(1-z) sin(pi z) / pi
        let g = ln_gamma(1.0 - z).expect("positive argument").exp();
        g * (PI * z).sin() / PI
    }
}

/// Gauss hypergeometric series `2F1(a, b; c; z)` on `0 <= z < 1` with the
/// default truncation controls.
pub fn gauss_2f1(p: HyperParams, z: f64) -> Result<f64> {
    gauss_2f1_with(p, z, SeriesControl::default())
}

pub fn gauss_2f1_with(p: HyperParams, z: f64, ctl: SeriesControl) -> Result<f64> {
    if !(0.0..1.0).contains(&z) {
        return Err(VortexError::Domain(format!("2F1 series requires 0 <= z < 1, got {z}")));
    }
    if p.c <= 0.0 && p.c == p.c.round() {
        return Err(VortexError::Domain("2F1 lower parameter is a nonpositive integer".into()));
    }
    let mut sum = 1.0;
    let mut term = 1.0;
    for n in 0..ctl.max_terms {
        let nf = n as f64;
        term *= (p.a + nf) * (p.b + nf) / ((p.c + nf) * (nf + 1.0)) * z;
        sum += term;
        if term == 0.0 || term.abs() < ctl.rel_tol * sum.abs() {
            return Ok(sum);
        }
    }
    Err(VortexError::SeriesDivergence {
        terms: ctl.max_terms,
    })
}

/// `2F1((1-b)/2, b/2; 3/2; 1) = sqrt(pi) / (2 Gamma((3-b)/2) Gamma((2+b)/2))`.
///
/// Exactly zero when `(3-b)/2` hits a pole of Gamma, i.e. `b = 3, 5, 7, ...`.
pub fn gauss_2f1_at_one(b_model: f64) -> f64 {
    let r1 = recip_gamma(0.5 * (3.0 - b_model));
    let r2 = recip_gamma(0.5 * (2.0 + b_model));
    0.5 * PI.sqrt() * r1 * r2
}
