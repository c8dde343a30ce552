//! Test-instance generators for the three example families.
//!
//! Random numbers come from ChaCha8 seeded with a `u64`, drawing uniform
//! doubles in `[0, 1)`.

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qt::{CorrectionBlock, QtMatrix, DEFAULT_THRESHOLD};
use crate::symbol::LaurentSymbol;

/// `A = gamma (I - A1)` with `A1 >= 0` and `||A1||_inf < 1`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Instance {
    pub a: QtMatrix,
    pub gamma: f64,
    #[serde(default)]
    pub description: String,
}

impl Instance {
    /// Wraps a matrix read without a scaling factor; `gamma` is taken as the
    /// largest diagonal entry so that `A1` has a nonnegative diagonal.
    pub fn from_matrix(a: QtMatrix) -> Self {
        let mut gamma = a.symbol.coeff(0);
        for i in 0..a.correction.rows().min(a.correction.cols()) {
            gamma = gamma.max(a.entry(i, i));
        }
        Instance {
            a,
            gamma,
            description: String::new(),
        }
    }

    /// `I - A / gamma`.
    pub fn a1(&self) -> QtMatrix {
        QtMatrix::identity(self.a.threshold).sub(&self.a.scale(1.0 / self.gamma))
    }

    /// Checks `gamma > 0`, `A1 >= 0` and `||A1||_inf < 1`.
    pub fn check_hypotheses(&self) -> Result<()> {
        if !(self.gamma > 0.0) {
            return Err(Error::Hypothesis(format!("gamma must be positive, got {}", self.gamma)));
        }
        let a1 = self.a1();
        if !a1.is_nonnegative(1e-14) {
            return Err(Error::Hypothesis("A1 = I - A/gamma has negative entries".into()));
        }
        let n = a1.norm_inf();
        if n >= 1.0 {
            return Err(Error::Hypothesis(format!("||A1||_inf = {n} is not below 1")));
        }
        Ok(())
    }
}

/// Parameters of a generated instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum InstanceSpec {
    Example1 {
        seed: u64,
        band_neg: usize,
        band_pos: usize,
        corr_dim: usize,
    },
    Example2 {
        seed: u64,
        s0: f64,
        m: usize,
        n: usize,
        p: usize,
        q: usize,
    },
    Example3 {
        seed: u64,
        p: usize,
        q: usize,
    },
}

impl InstanceSpec {
    pub fn generate(&self) -> Result<Instance> {
        let (a, gamma) = match *self {
            InstanceSpec::Example1 {
                seed,
                band_neg,
                band_pos,
                corr_dim,
            } => (gen_example1(seed, band_neg, band_pos, corr_dim)?, 1.0),
            InstanceSpec::Example2 { seed, s0, m, n, p, q } => {
                (gen_example2(seed, s0, m, n, p, q)?, 1.0)
            }
            InstanceSpec::Example3 { seed, p, q } => gen_example3(seed, p, q)?,
        };
        Ok(Instance {
            a,
            gamma,
            description: serde_json::to_string(self)?,
        })
    }
}

/// Symbol with `len_neg` coefficients of nonpositive index and `len_pos` of
/// nonnegative index, uniform in `[0, 1)`, and `a_0 = 1`.
fn random_band(rng: &mut ChaCha8Rng, len_neg: usize, len_pos: usize) -> LaurentSymbol {
    let sn: Vec<f64> = (0..len_neg).map(|_| rng.random()).collect();
    let mut sp: Vec<f64> = (0..len_pos).map(|_| rng.random()).collect();
    sp[0] = 1.0;
    LaurentSymbol::new(sn[1..].to_vec(), sp)
}

/// `A = I - S`, `S = S~ / (||S~||_inf + 1)` with `S~ = T(s) + E` random.
pub fn gen_example1(seed: u64, band_neg: usize, band_pos: usize, corr_dim: usize) -> Result<QtMatrix> {
    if band_neg == 0 || band_pos == 0 {
        return Err(Error::InvalidArgument("band sizes must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = random_band(&mut rng, band_neg, band_pos);
    let mut e = Mat::<f64>::zeros(corr_dim, corr_dim);
    for i in 0..corr_dim {
        for j in 0..corr_dim {
            e[(i, j)] = rng.random::<f64>();
        }
    }
    let st = QtMatrix::new(s, CorrectionBlock::from_dense(e), DEFAULT_THRESHOLD);
    let scale = 1.0 / (st.norm_inf() + 1.0);
    Ok(QtMatrix::identity(DEFAULT_THRESHOLD).sub(&st.scale(scale)))
}

/// `A = I - S` with `S = s0 I + E_S`, where `E_S` has leading block
/// `diag(V, O_m, -s0 I_n)` and `V` (q x q) holds in its first `p` rows an
/// upper triangular block with diagonal `-s0` and nonnegative strictly upper
/// entries summing to less than 1 in each row.
pub fn gen_example2(seed: u64, s0: f64, m: usize, n: usize, p: usize, q: usize) -> Result<QtMatrix> {
    if !(s0 > 0.0 && s0 < 1.0) {
        return Err(Error::InvalidArgument(format!("s0 must lie in (0, 1), got {s0}")));
    }
    if p > q {
        return Err(Error::InvalidArgument(format!("p = {p} exceeds q = {q}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = q + m + n;
    let mut e = Mat::<f64>::zeros(dim, dim);
    for i in 0..p {
        e[(i, i)] = -s0;
        let w: Vec<f64> = (i + 1..q).map(|_| rng.random::<f64>()).collect();
        let total: f64 = w.iter().sum();
        if total > 0.0 {
            let target = 0.9 * rng.random::<f64>().max(0.1);
            for (k, wk) in w.iter().enumerate() {
                e[(i, i + 1 + k)] = wk * target / total;
            }
        }
    }
    for i in q + m..dim {
        e[(i, i)] = -s0;
    }
    let s = QtMatrix::new(
        LaurentSymbol::constant(s0),
        CorrectionBlock::from_dense(e),
        DEFAULT_THRESHOLD,
    );
    Ok(QtMatrix::identity(DEFAULT_THRESHOLD).sub(&s))
}

/// `A = c I - T(s)` with random nonnegative `s`, `a_0 = 1`, and `c` the sum
/// of both coefficient vectors (so `a_0` counts twice). Returns `(A, c)`.
pub fn gen_example3(seed: u64, p: usize, q: usize) -> Result<(QtMatrix, f64)> {
    if p == 0 || q == 0 {
        return Err(Error::InvalidArgument("p and q must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sp: Vec<f64> = {
        let mut v: Vec<f64> = (0..p).map(|_| rng.random()).collect();
        v[0] = 1.0;
        v
    };
    let sn: Vec<f64> = {
        let mut v: Vec<f64> = (0..q).map(|_| rng.random()).collect();
        v[0] = 1.0;
        v
    };
    let c = sp.iter().sum::<f64>() + sn.iter().sum::<f64>();
    let s = LaurentSymbol::new(sn[1..].to_vec(), sp);
    let a = QtMatrix::toeplitz(LaurentSymbol::constant(c).sub(&s), DEFAULT_THRESHOLD);
    Ok((a, c))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example1_shapes_and_scaling() {
        for seed in 0..5 {
            let a = gen_example1(seed, 32, 30, 0).unwrap();
            assert!(a.correction.is_empty());
            assert_eq!(a.symbol.band(), 61);
            let inst = Instance { a, gamma: 1.0, description: String::new() };
            inst.check_hypotheses().unwrap();
            assert!(inst.a1().norm_inf() < 1.0);
        }
        let a = gen_example1(1, 4, 5, 20).unwrap();
        assert_eq!((a.correction.rows(), a.correction.cols()), (20, 20));
    }

    #[test]
    fn example1_scaling_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = random_band(&mut rng, 6, 7);
        let st = QtMatrix::toeplitz(s, 0.0);
        let n = st.norm_inf();
        let a = gen_example1(9, 6, 7, 0).unwrap();
        let a1 = QtMatrix::identity(0.0).sub(&a);
        assert!((a1.norm_inf() - n / (n + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn example1_is_deterministic() {
        let a = gen_example1(42, 8, 8, 10).unwrap();
        let b = gen_example1(42, 8, 8, 10).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn example2_structure() {
        let a = gen_example2(0, 0.5, 10, 15, 2, 10).unwrap();
        assert_eq!(a.symbol, LaurentSymbol::constant(0.5));
        let inst = Instance { a: a.clone(), gamma: 1.0, description: String::new() };
        inst.check_hypotheses().unwrap();
        // U diagonal cancels s0, last block restores the identity
        assert_eq!(a.entry(0, 0), 1.0);
        assert_eq!(a.entry(1, 1), 1.0);
        assert_eq!(a.entry(2, 2), 0.5);
        assert_eq!(a.entry(34, 34), 1.0);
        assert_eq!(a.entry(35, 35), 0.5);
        assert!(gen_example2(0, 0.5, 1, 1, 3, 2).is_err());
        assert!(gen_example2(0, 1.0, 1, 1, 1, 2).is_err());
    }

    #[test]
    fn example3_norm_below_c() {
        for (p, q) in [(4, 2), (12, 10), (20, 20)] {
            let (a, c) = gen_example3(p as u64, p, q).unwrap();
            let s = LaurentSymbol::constant(c).sub(&a.symbol);
            assert!(s.wiener_norm() < c);
            assert_eq!(s.pos_degree(), p - 1);
            assert_eq!(s.neg_degree(), q - 1);
            Instance { a, gamma: c, description: String::new() }.check_hypotheses().unwrap();
        }
    }

    #[test]
    fn spec_roundtrip() {
        let spec = InstanceSpec::Example3 { seed: 1, p: 4, q: 2 };
        let s = serde_json::to_string(&spec).unwrap();
        assert_eq!(s, r#"{"family":"example3","seed":1,"p":4,"q":2}"#);
        let inst = spec.generate().unwrap();
        let back: Instance = serde_json::from_str(&serde_json::to_string(&inst).unwrap()).unwrap();
        assert_eq!(back.gamma, inst.gamma);
    }
}
