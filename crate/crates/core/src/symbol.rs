//! Laurent symbols with finite support.
//!
//! A symbol `a(z) = sum_j a_j z^j` is stored as two coefficient vectors:
//! `pos = [a_0, a_1, ..., a_p]` and `neg = [a_{-1}, a_{-2}, ..., a_{-q}]`.
//! Exact zeros at either end of the band are removed on construction, so the
//! stored band always starts and ends on a nonzero coefficient.

pub use rustfft::num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative bound on the imaginary part tolerated after interpolating
/// values that should come from a real symbol.
pub const IMAG_RESIDUE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawSymbol")]
pub struct LaurentSymbol {
    neg: Vec<f64>,
    pos: Vec<f64>,
}

#[derive(Deserialize)]
struct RawSymbol {
    #[serde(default)]
    neg: Vec<f64>,
    #[serde(default)]
    pos: Vec<f64>,
}

impl From<RawSymbol> for LaurentSymbol {
    fn from(raw: RawSymbol) -> Self {
        LaurentSymbol::new(raw.neg, raw.pos)
    }
}

/// Result of [`LaurentSymbol::interpolate`].
#[derive(Clone, Debug)]
pub struct Interpolant {
    pub symbol: LaurentSymbol,
    /// Largest discarded imaginary part among the coefficients.
    pub max_imag: f64,
}

fn trim_trailing_zeros(v: &mut Vec<f64>) {
    while v.last() == Some(&0.0) {
        v.pop();
    }
}

fn check_power_of_two(m: usize) -> Result<()> {
    if m < 2 || !m.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "number of interpolation nodes must be a power of two >= 2, got {m}"
        )));
    }
    Ok(())
}

impl LaurentSymbol {
    pub fn new(mut neg: Vec<f64>, mut pos: Vec<f64>) -> Self {
        trim_trailing_zeros(&mut neg);
        trim_trailing_zeros(&mut pos);
        LaurentSymbol { neg, pos }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::new(Vec::new(), vec![c])
    }

    /// `c * z^j`.
    pub fn monomial(j: isize, c: f64) -> Self {
        Self::from_coeffs(j, vec![c])
    }

    /// Builds a symbol from contiguous coefficients `a_lo, a_{lo+1}, ...`.
    pub fn from_coeffs(lo: isize, coeffs: Vec<f64>) -> Self {
        let hi = lo + coeffs.len() as isize - 1;
        let mut neg = Vec::new();
        let mut pos = Vec::new();
        if lo < 0 {
            let q = (-lo) as usize;
            neg = vec![0.0; q];
            for j in lo..0.min(hi + 1) {
                neg[(-j - 1) as usize] = coeffs[(j - lo) as usize];
            }
        }
        if hi >= 0 {
            pos = vec![0.0; hi as usize + 1];
            for j in lo.max(0)..=hi {
                pos[j as usize] = coeffs[(j - lo) as usize];
            }
        }
        Self::new(neg, pos)
    }

    pub fn neg(&self) -> &[f64] {
        &self.neg
    }

    pub fn pos(&self) -> &[f64] {
        &self.pos
    }

    /// Number of negative-index coefficients, `q`.
    pub fn neg_degree(&self) -> usize {
        self.neg.len()
    }

    /// Highest positive index carrying a stored coefficient, `p`.
    pub fn pos_degree(&self) -> usize {
        self.pos.len().saturating_sub(1)
    }

    /// Width `p + q + 1` of the stored band; zero for the zero symbol.
    pub fn band(&self) -> usize {
        if self.is_zero() {
            0
        } else {
            self.pos_degree() + self.neg_degree() + 1
        }
    }

    pub fn is_zero(&self) -> bool {
        self.neg.is_empty() && self.pos.is_empty()
    }

    pub fn coeff(&self, j: isize) -> f64 {
        if j >= 0 {
            self.pos.get(j as usize).copied().unwrap_or(0.0)
        } else {
            self.neg.get((-j - 1) as usize).copied().unwrap_or(0.0)
        }
    }

    /// Lowest index of the stored band (`-q`).
    pub fn lo(&self) -> isize {
        -(self.neg.len() as isize)
    }

    /// Highest index of the stored band (`p`).
    pub fn hi(&self) -> isize {
        self.pos_degree() as isize
    }

    /// Coefficients `a_lo..=a_hi` as one contiguous vector.
    pub fn to_contiguous(&self) -> (isize, Vec<f64>) {
        let lo = self.lo();
        let mut v = Vec::with_capacity(self.neg.len() + self.pos.len().max(1));
        v.extend(self.neg.iter().rev());
        if self.pos.is_empty() {
            v.push(0.0);
        } else {
            v.extend(&self.pos);
        }
        (lo, v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (isize, f64)> + '_ {
        self.neg
            .iter()
            .enumerate()
            .map(|(k, &c)| (-(k as isize) - 1, c))
            .chain(self.pos.iter().enumerate().map(|(k, &c)| (k as isize, c)))
    }

    pub fn is_nonnegative(&self, tol: f64) -> bool {
        self.iter().all(|(_, c)| c >= -tol)
    }

    pub fn wiener_norm(&self) -> f64 {
        self.neg.iter().chain(&self.pos).fold(0.0, |s, c| s + c.abs())
    }

    /// Coefficient sum `a(1)`.
    pub fn sum(&self) -> f64 {
        self.neg.iter().chain(&self.pos).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(
            self.neg.iter().map(|c| c * s).collect(),
            self.pos.iter().map(|c| c * s).collect(),
        )
    }

    fn combine(&self, other: &Self, s: f64) -> Self {
        let mut neg = vec![0.0; self.neg.len().max(other.neg.len())];
        let mut pos = vec![0.0; self.pos.len().max(other.pos.len())];
        for (k, c) in self.neg.iter().enumerate() {
            neg[k] += c;
        }
        for (k, c) in other.neg.iter().enumerate() {
            neg[k] += s * c;
        }
        for (k, c) in self.pos.iter().enumerate() {
            pos[k] += c;
        }
        for (k, c) in other.pos.iter().enumerate() {
            pos[k] += s * c;
        }
        Self::new(neg, pos)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, -1.0)
    }

    /// Exact product by coefficient convolution.
    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let (lo_a, a) = self.to_contiguous();
        let (lo_b, b) = other.to_contiguous();
        let mut c = vec![0.0; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for (cj, &y) in c[i..].iter_mut().zip(&b) {
                *cj += x * y;
            }
        }
        Self::from_coeffs(lo_a + lo_b, c)
    }

    /// Direct evaluation by Horner's rule on both halves of the band.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        if z == Complex64::new(0.0, 0.0) {
            return Err(Error::InvalidArgument(
                "symbol evaluated at z = 0".into(),
            ));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in self.pos.iter().rev() {
            acc = acc * z + c;
        }
        let w = z.inv();
        let mut tail = Complex64::new(0.0, 0.0);
        for &c in self.neg.iter().rev() {
            tail = (tail + c) * w;
        }
        Ok(acc + tail)
    }

    /// Values `a(w^k)`, `k = 0..m`, with `w = exp(2*pi*i/m)`.
    ///
    /// The coefficients are wrapped modulo `m` and transformed with a single
    /// FFT, so the output index `k` is the exponent of the root of unity.
    pub fn eval_roots_of_unity(&self, m: usize) -> Result<Vec<Complex64>> {
        check_power_of_two(m)?;
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for (j, c) in self.iter() {
            buf[j.rem_euclid(m as isize) as usize] += c;
        }
        let fft = FftPlanner::new().plan_fft(m, FftDirection::Inverse);
        fft.process(&mut buf);
        Ok(buf)
    }

    /// Laurent polynomial `sum_{j=-n+1}^{n} c_j z^j` (`m = 2n`) taking the
    /// value `values[k]` at `w^k`.
    pub fn interpolate(values: &[Complex64]) -> Result<Interpolant> {
        let m = values.len();
        check_power_of_two(m)?;
        let n = m / 2;
        let mut buf = values.to_vec();
        let fft = FftPlanner::new().plan_fft(m, FftDirection::Forward);
        fft.process(&mut buf);
        let scale = 1.0 / m as f64;
        let max_val = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let max_imag = buf.iter().map(|c| (c.im * scale).abs()).fold(0.0, f64::max);
        let bound = IMAG_RESIDUE_TOL * max_val;
        if max_imag > bound {
            return Err(Error::ImaginaryResidue {
                residue: max_imag,
                bound,
            });
        }
        let pos = (0..=n).map(|j| buf[j].re * scale).collect();
        let neg = (1..n).map(|j| buf[m - j].re * scale).collect();
        Ok(Interpolant {
            symbol: Self::new(neg, pos),
            max_imag,
        })
    }

    /// `(a(1), a'(1), a''(1))` as exact finite sums.
    pub fn derivatives_at_one(&self) -> (f64, f64, f64) {
        self.iter().fold((0.0, 0.0, 0.0), |(v, d1, d2), (j, c)| {
            let jf = j as f64;
            (v + c, d1 + jf * c, d2 + jf * (jf - 1.0) * c)
        })
    }

    /// Removes outer coefficients, smallest end first, while the removed
    /// mass stays within `threshold` in the Wiener norm.
    pub fn trim(&self, threshold: f64) -> Self {
        if threshold <= 0.0 || self.is_zero() {
            return self.clone();
        }
        let (lo, v) = self.to_contiguous();
        let (mut a, mut b) = (0usize, v.len());
        let mut removed = 0.0;
        while a < b {
            let (left, right) = (v[a].abs(), v[b - 1].abs());
            let take_left = left <= right;
            let c = if take_left { left } else { right };
            if removed + c > threshold {
                break;
            }
            removed += c;
            if take_left {
                a += 1;
            } else {
                b -= 1;
            }
        }
        if a == b {
            return Self::zero();
        }
        Self::from_coeffs(lo + a as isize, v[a..b].to_vec())
    }
}
