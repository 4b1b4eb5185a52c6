//! Bracketed bisection for the scalar equations behind the design
//! propositions. Every root the designs rely on is isolated on a known
//! bracket with a sign change, so plain bisection is enough and keeps the
//! results bit-for-bit deterministic.

use crate::error::{Error, Result};

/// Bisection stops once the bracket is this narrow.
pub const BRACKET_WIDTH: f64 = 1e-14;

const MAX_ITERATIONS: usize = 400;

/// A solved root together with where it was looked for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootRecord {
    pub name: &'static str,
    pub value: f64,
    /// The bracket the root was required to lie in.
    pub bracket: (f64, f64),
    /// `|f(value)|`.
    pub residual: f64,
}

impl RootRecord {
    pub fn strictly_inside(&self) -> bool {
        self.value > self.bracket.0 && self.value < self.bracket.1
    }
}

/// Final state of a bisection run. `lower` keeps the sign of `f(lo)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Bisection {
    pub lower: f64,
    pub upper: f64,
    pub f_lower: f64,
    pub f_upper: f64,
}

impl Bisection {
    /// The end of the final bracket with the smaller residual.
    pub fn best(&self) -> (f64, f64) {
        if self.f_lower.abs() <= self.f_upper.abs() {
            (self.lower, self.f_lower.abs())
        } else {
            (self.upper, self.f_upper.abs())
        }
    }
}

pub(crate) fn bisect<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> Result<Bisection> {
    let (f_lo, f_hi) = (f(lo), f(hi));
    let bracketed = lo < hi && f_lo * f_hi < 0.0;
    if !bracketed {
        return Err(Error::Bracket { lo, hi, f_lo, f_hi });
    }
    let (mut a, mut b, mut fa, mut fb) = (lo, hi, f_lo, f_hi);
    for _ in 0..MAX_ITERATIONS {
        if b - a <= BRACKET_WIDTH {
            break;
        }
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(Bisection {
                lower: m,
                upper: m,
                f_lower: 0.0,
                f_upper: 0.0,
            });
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
            fb = fm;
        }
    }
    Ok(Bisection {
        lower: a,
        upper: b,
        f_lower: fa,
        f_upper: fb,
    })
}

/// Root of `f` on `[lo, hi]`, which must bracket a sign change.
///
/// Returns whichever end of the final bracket has the smaller residual;
/// fails if that residual still exceeds `tol`.
pub fn solve_bracketed<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (root, residual) = bisect(f, lo, hi)?.best();
    if residual > tol {
        return Err(Error::InvalidInput(format!(
            "bisection converged to {root} with residual {residual} > {tol}; f is not continuous there"
        )));
    }
    Ok(root)
}
