use alloc::vec;
use core::f64::consts::PI;

use crate::diffcore::Jet;
use crate::{Error, Result};

/// Value and first three derivatives of the piecewise sine target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FSin {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl FSin {
    pub fn as_array(&self) -> [f64; 3] {
        [self.value, self.d1, self.d2]
    }
}

/// `sin(8πx)` on `[-2, 0)` and `sin(πx)` on `[0, 2]`.
pub fn f_sin_eval(x: f64) -> Result<FSin> {
    if !(-2.0..=2.0).contains(&x) {
        return Err(Error::OutOfDomain { value: x, lo: -2.0, hi: 2.0 });
    }
    let w = if x < 0.0 { 8.0 * PI } else { PI };
    let (s, c) = (libm::sin(w * x), libm::cos(w * x));
    Ok(FSin { value: s, d1: w * c, d2: -w * w * s, d3: -w * w * w * c })
}

/// [`f_sin_eval`] packaged as a one-dimensional [`Jet`], so the criterion code
/// can be exercised on an exactly differentiable function.
pub fn f_sin_jet(x: f64) -> Result<Jet> {
    let f = f_sin_eval(x)?;
    Ok(Jet { value: f.value, grad: vec![f.d1], hess: vec![f.d2], third: vec![f.d3] })
}
