use serde::{Deserialize, Serialize};

/// Anchors below this value are raised to it before condensing.
pub const GAMMA_FLOOR: f64 = 1e-6;

/// Monomial lower bounds `h_i(a) = c_i prod_s a_is^w_is` of
/// `g_i(a) = prod_s (1 + a_is)`, tight at the anchor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondensationPoint {
    pub a0: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
    pub c: Vec<f64>,
    /// `ln c_i`, kept separately because `c_i` overflows for long rows of large anchors.
    pub ln_c: Vec<f64>,
}

impl CondensationPoint {
    /// `ln h_i(a)`.
    pub fn ln_h(&self, i: usize, a: &[f64]) -> f64 {
        self.ln_c[i] + self.w[i].iter().zip(a).map(|(w, a)| w * a.ln()).sum::<f64>()
    }
}

/// Condenses each row of `a0`. Non-positive or non-finite anchors are
/// replaced by [`GAMMA_FLOOR`].
pub fn condense(a0: &[Vec<f64>]) -> CondensationPoint {
    let a0: Vec<Vec<f64>> =
        a0.iter().map(|r| r.iter().map(|&a| if a.is_nan() { GAMMA_FLOOR } else { a.max(GAMMA_FLOOR) }).collect()).collect();
    let w: Vec<Vec<f64>> = a0.iter().map(|r| r.iter().map(|a| a / (1.0 + a)).collect()).collect();
    let ln_c: Vec<f64> = a0
        .iter()
        .zip(&w)
        .map(|(r, wr)| r.iter().zip(wr).map(|(a, w)| a.ln_1p() - w * a.ln()).sum())
        .collect();
    let c = ln_c.iter().map(|l| l.exp()).collect();
    CondensationPoint { a0, w, c, ln_c }
}
