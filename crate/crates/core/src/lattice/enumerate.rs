//! Complete short-vector enumeration (Fincke–Pohst on an exact Gram matrix).

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::exact::rational::{self, Rational};
use crate::linalg::RatMatrix;

pub const DEFAULT_ENUMERATION_LIMIT: usize = 2_000_000;

/// Every nonzero lattice vector with squared norm at most `radius_sq`,
/// as integer coordinates with their squared norms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShortVectorList {
    pub radius_sq: Rational,
    pub vectors: Vec<(Vec<i64>, Rational)>,
}

impl ShortVectorList {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// `G = Uᵗ D U` with `U` unit upper triangular.
fn ldl(gram: &RatMatrix) -> Result<(Vec<Rational>, RatMatrix)> {
    let n = gram.rows();
    let mut d = vec![Rational::zero(); n];
    let mut u = RatMatrix::identity(n);
    for i in 0..n {
        let mut di = gram[(i, i)].clone();
        for k in 0..i {
            di -= &d[k] * &u[(k, i)] * &u[(k, i)];
        }
        if !di.is_positive() {
            return Err(Error::InvalidLattice("Gram matrix is not positive definite".into()));
        }
        for j in i + 1..n {
            let mut v = gram[(i, j)].clone();
            for k in 0..i {
                v -= &d[k] * &u[(k, i)] * &u[(k, j)];
            }
            u[(i, j)] = v / &di;
        }
        d[i] = di;
    }
    Ok((d, u))
}

struct Search<'a> {
    d: &'a [Rational],
    u: &'a RatMatrix,
    gram: &'a RatMatrix,
    limit: usize,
    x: Vec<i64>,
    out: Vec<(Vec<i64>, Rational)>,
}

impl Search<'_> {
    fn level(&mut self, i: usize, budget: &Rational) -> Result<()> {
        let n = self.x.len();
        let mut center = Rational::zero();
        for j in i + 1..n {
            if self.x[j] != 0 {
                center -= &self.u[(i, j)] * BigInt::from(self.x[j]);
            }
        }
        let spread = rational::isqrt_floor(&(budget / &self.d[i]));
        let lo: BigInt = rational::floor(&center) - &spread - 1;
        let hi: BigInt = rational::ceil(&center) + &spread + 1;
        let (lo, hi) = match (lo.to_i64(), hi.to_i64()) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::EnumerationOverflow { limit: self.limit }),
        };
        for xi in lo..=hi {
            let off = Rational::from_integer(BigInt::from(xi)) - &center;
            let used = &self.d[i] * &off * &off;
            if &used > budget {
                continue;
            }
            self.x[i] = xi;
            let rest = budget - used;
            if i == 0 {
                if self.x.iter().any(|&c| c != 0) {
                    if self.out.len() >= self.limit {
                        return Err(Error::EnumerationOverflow { limit: self.limit });
                    }
                    let norm = quadratic_form(self.gram, &self.x);
                    self.out.push((self.x.clone(), norm));
                }
            } else {
                self.level(i - 1, &rest)?;
            }
        }
        self.x[i] = 0;
        Ok(())
    }
}

pub fn quadratic_form(gram: &RatMatrix, x: &[i64]) -> Rational {
    let n = x.len();
    let mut acc = Rational::zero();
    for i in 0..n {
        if x[i] == 0 {
            continue;
        }
        for j in 0..n {
            if x[j] != 0 {
                acc += &gram[(i, j)] * BigInt::from(x[i] * x[j]);
            }
        }
    }
    acc
}

/// All nonzero integer vectors `x` with `xᵗ G x <= radius_sq`, sorted by
/// (norm, coordinates).
pub fn enumerate_gram(gram: &RatMatrix, radius_sq: &Rational, limit: usize) -> Result<Vec<(Vec<i64>, Rational)>> {
    let n = gram.rows();
    if n == 0 || !gram.is_square() {
        return Err(Error::InvalidLattice("empty or non-square Gram matrix".into()));
    }
    let (d, u) = ldl(gram)?;
    if radius_sq.is_negative() {
        return Ok(Vec::new());
    }
    let mut search = Search { d: &d, u: &u, gram, limit, x: vec![0; n], out: Vec::new() };
    search.level(n - 1, radius_sq)?;
    let mut out = search.out;
    out.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    Ok(out)
}
