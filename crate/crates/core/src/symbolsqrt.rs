//! Toeplitz part of the square root: `b(z) = 1 - sqrt(a(z)/gamma)` by
//! evaluation and interpolation at roots of unity.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbol::LaurentSymbol;

/// Default cap on the half interpolation size.
pub const DEFAULT_N_MAX: usize = 1 << 20;
/// Default relative threshold for [`scaled_eps`].
pub const DEFAULT_REL_EPS: f64 = 1e-11;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SymbolSqrtResult {
    pub bhat: LaurentSymbol,
    /// Half the final number of interpolation nodes.
    pub n_final: usize,
    /// `b''(1) - bhat''(1)` at the final size.
    pub delta_m: f64,
    pub b1: f64,
    pub bp1: f64,
    pub bpp1: f64,
}

/// Approximates `b = 1 - sqrt(a/gamma)` by doubling the number of nodes,
/// starting from `n = 4`, until `b''(1) - bhat''(1) < eps`.
pub fn sqrt_symbol(
    a: &LaurentSymbol,
    gamma: f64,
    eps: f64,
    n_max: usize,
) -> Result<SymbolSqrtResult> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let (b1, bp1, bpp1) = root_derivatives_at_one(a, gamma)?;

    let mut n = 4;
    let mut delta = f64::NAN;
    while n <= n_max {
        let m = 2 * n;
        let values = a
            .eval_roots_of_unity(m)?
            .into_iter()
            .map(|v| {
                let w = v / gamma;
                if w.im == 0.0 && w.re < 0.0 {
                    return Err(Error::Hypothesis(format!(
                        "a/gamma takes the negative real value {} on the unit circle",
                        w.re
                    )));
                }
                Ok(Complex64::new(1.0, 0.0) - w.sqrt())
            })
            .collect::<Result<Vec<_>>>()?;
        let bhat = LaurentSymbol::interpolate(&values)?.symbol;
        delta = bpp1 - bhat.derivatives_at_one().2;
        log::debug!("sqrt_symbol: n = {n}, delta = {delta:e}");
        if delta < eps {
            // |delta| below eps is rounding in bhat''(1)
            if delta < -eps {
                log::warn!(
                    "sqrt_symbol: negative second-derivative gap {delta:e}; symbol may violate nonnegativity"
                );
            }
            return Ok(SymbolSqrtResult {
                bhat,
                n_final: n,
                delta_m: delta,
                b1,
                bp1,
                bpp1,
            });
        }
        n *= 2;
    }
    Err(Error::NoConvergence {
        method: "sqrt_symbol".into(),
        iterations: n / 2,
        residual: delta,
    })
}

/// `(b(1), b'(1), b''(1))` from the derivatives of `a` at 1.
pub fn root_derivatives_at_one(a: &LaurentSymbol, gamma: f64) -> Result<(f64, f64, f64)> {
    let (a1, ap1, app1) = a.derivatives_at_one();
    if !(a1 > 0.0) {
        return Err(Error::Hypothesis(format!("a(1) must be positive, got {a1}")));
    }
    let b1 = 1.0 - (a1 / gamma).sqrt();
    let denom = 2.0 * gamma * (b1 - 1.0);
    let bp1 = ap1 / denom;
    let bpp1 = (app1 - 2.0 * gamma * bp1 * bp1) / denom;
    Ok((b1, bp1, bpp1))
}

/// Stopping threshold `rel * max(1, |b''(1)|)`.
///
/// Rounding in `bhat''(1)` grows with the interpolation size, so a fixed
/// absolute threshold becomes unreachable when `b''(1)` is large.
pub fn scaled_eps(a: &LaurentSymbol, gamma: f64, rel: f64) -> Result<f64> {
    let (_, _, bpp1) = root_derivatives_at_one(a, gamma)?;
    Ok(rel * bpp1.abs().max(1.0))
}

/// True iff `||b_ref - bhat||_W <= (1 + 1/(2n)) eps`.
pub fn check_interpolation_bound(
    b_ref: &LaurentSymbol,
    bhat: &LaurentSymbol,
    eps: f64,
    n: usize,
) -> bool {
    b_ref.sub(bhat).wiener_norm() <= (1.0 + 1.0 / (2.0 * n as f64)) * eps
}
