//! Dense rational matrices, sized for the small dimensions used here.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::exact::rational::{self, Rational};
use crate::error::{Error, Result};

pub type RatVector = Vec<Rational>;

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RatMatrix { rows, cols, data: vec![Rational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = RatMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rational::one();
        }
        m
    }

    pub fn diagonal(entries: &[Rational]) -> Self {
        let mut m = RatMatrix::zeros(entries.len(), entries.len());
        for (i, e) in entries.iter().enumerate() {
            m[(i, i)] = e.clone();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidInput("ragged matrix rows".into()));
        }
        Ok(RatMatrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    pub fn from_int_rows(rows: &[&[i64]]) -> Self {
        let rows = rows.iter().map(|r| r.iter().map(|&x| rational::int(x)).collect()).collect();
        RatMatrix::from_rows(rows).expect("rectangular")
    }

    pub fn from_columns(cols: &[RatVector]) -> Self {
        let c = cols.len();
        let r = cols.first().map_or(0, |x| x.len());
        let mut m = RatMatrix::zeros(r, c);
        for (j, col) in cols.iter().enumerate() {
            for (i, x) in col.iter().enumerate() {
                m[(i, j)] = x.clone();
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> RatVector {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn column(&self, j: usize) -> RatVector {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<RatVector> {
        (0..self.rows).map(|i| self.row(i)).collect()
    }

    pub fn transpose(&self) -> RatMatrix {
        let mut t = RatMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &RatMatrix) -> RatMatrix {
        assert_eq!(self.cols, other.rows, "matrix shape mismatch");
        let mut out = RatMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Rational]) -> RatVector {
        assert_eq!(self.cols, v.len(), "matrix/vector shape mismatch");
        (0..self.rows)
            .map(|i| (0..self.cols).fold(Rational::zero(), |acc, j| acc + &self[(i, j)] * &v[j]))
            .collect()
    }

    pub fn mul_int_vec(&self, v: &[i64]) -> RatVector {
        assert_eq!(self.cols, v.len(), "matrix/vector shape mismatch");
        (0..self.rows)
            .map(|i| {
                (0..self.cols).fold(Rational::zero(), |acc, j| {
                    if v[j] == 0 {
                        acc
                    } else {
                        acc + &self[(i, j)] * BigInt::from(v[j])
                    }
                })
            })
            .collect()
    }

    pub fn scale(&self, q: &Rational) -> RatMatrix {
        RatMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * q).collect() }
    }

    pub fn add(&self, other: &RatMatrix) -> RatMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        RatMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &RatMatrix) -> RatMatrix {
        self.add(&other.scale(&-Rational::one()))
    }

    pub fn is_identity(&self) -> bool {
        self.is_square() && *self == RatMatrix::identity(self.rows)
    }

    pub fn is_symmetric(&self) -> bool {
        *self == self.transpose()
    }

    pub fn is_integral(&self) -> bool {
        self.data.iter().all(|x| x.is_integer())
    }

    pub fn is_orthogonal(&self) -> bool {
        self.is_square() && self.transpose().mul(self).is_identity()
    }

    pub fn commutes_with(&self, other: &RatMatrix) -> bool {
        self.mul(other) == other.mul(self)
    }

    pub fn pow(&self, n: u32) -> RatMatrix {
        (0..n).fold(RatMatrix::identity(self.rows), |acc, _| acc.mul(self))
    }

    pub fn det(&self) -> Rational {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut det = Rational::one();
        for col in 0..n {
            let Some(pivot) = (col..n).find(|&r| !a[(r, col)].is_zero()) else {
                return Rational::zero();
            };
            if pivot != col {
                a.swap_rows(pivot, col);
                det = -det;
            }
            let p = a[(col, col)].clone();
            det *= &p;
            for r in col + 1..n {
                if a[(r, col)].is_zero() {
                    continue;
                }
                let f = &a[(r, col)] / &p;
                for c in col..n {
                    let v = &f * &a[(col, c)];
                    a[(r, c)] -= v;
                }
            }
        }
        det
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        for c in 0..self.cols {
            self.data.swap(i * self.cols + c, j * self.cols + c);
        }
    }

    /// Reduced row echelon form and pivot columns.
    pub fn rref(&self) -> (RatMatrix, Vec<usize>) {
        let mut a = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..a.cols {
            if row == a.rows {
                break;
            }
            let Some(p) = (row..a.rows).find(|&r| !a[(r, col)].is_zero()) else {
                continue;
            };
            a.swap_rows(p, row);
            let inv = a[(row, col)].recip();
            for c in 0..a.cols {
                a[(row, c)] *= &inv;
            }
            for r in 0..a.rows {
                if r != row && !a[(r, col)].is_zero() {
                    let f = a[(r, col)].clone();
                    for c in 0..a.cols {
                        let v = &f * &a[(row, c)];
                        a[(r, c)] -= v;
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        (a, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    pub fn inverse(&self) -> Result<RatMatrix> {
        if !self.is_square() {
            return Err(Error::InvalidInput("inverse of a non-square matrix".into()));
        }
        let n = self.rows;
        let mut aug = RatMatrix::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, n + i)] = Rational::one();
        }
        let (r, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return Err(Error::InvalidInput("singular matrix".into()));
        }
        let mut inv = RatMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                inv[(i, j)] = r[(i, n + j)].clone();
            }
        }
        Ok(inv)
    }

    /// Basis of the right nullspace, one vector per free column.
    pub fn nullspace(&self) -> Vec<RatVector> {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![Rational::zero(); self.cols];
                v[f] = Rational::one();
                for (row, &p) in pivots.iter().enumerate() {
                    v[p] = -r[(row, f)].clone();
                }
                v
            })
            .collect()
    }

    /// Solves `self · x = b`, returning one solution if consistent.
    pub fn solve(&self, b: &[Rational]) -> Option<RatVector> {
        let mut aug = RatMatrix::zeros(self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, self.cols)] = b[i].clone();
        }
        let (r, pivots) = aug.rref();
        if pivots.last() == Some(&self.cols) {
            return None;
        }
        let mut x = vec![Rational::zero(); self.cols];
        for (row, &p) in pivots.iter().enumerate() {
            x[p] = r[(row, self.cols)].clone();
        }
        Some(x)
    }

    /// Coefficients `c_0..c_n` of `det(x I - A) = Σ c_k x^k` (Faddeev–LeVerrier).
    pub fn char_poly(&self) -> Vec<Rational> {
        assert!(self.is_square());
        let n = self.rows;
        let mut coeffs = vec![Rational::zero(); n + 1];
        coeffs[n] = Rational::one();
        let mut m = RatMatrix::zeros(n, n);
        for k in 1..=n {
            let am = self.mul(&m);
            m = am.add(&RatMatrix::identity(n).scale(&coeffs[n - k + 1]));
            let trace = (0..n).fold(Rational::zero(), |acc, i| acc + &self.mul(&m)[(i, i)]);
            coeffs[n - k] = -trace / BigInt::from(k);
        }
        coeffs
    }

    /// Orthogonal projection onto the column span of `basis` (full column rank).
    pub fn projection_onto(basis: &RatMatrix) -> Result<RatMatrix> {
        let gram = basis.transpose().mul(basis);
        Ok(basis.mul(&gram.inverse()?).mul(&basis.transpose()))
    }
}

impl std::ops::Index<(usize, usize)> for RatMatrix {
    type Output = Rational;
    fn index(&self, (i, j): (usize, usize)) -> &Rational {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RatMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rational {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Display for RatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .to_rows()
            .iter()
            .map(|r| r.iter().map(rational::format_rational).collect::<Vec<_>>().join(", "))
            .collect();
        write!(f, "[[{}]]", rows.join("], ["))
    }
}

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).fold(Rational::zero(), |acc, (x, y)| acc + x * y)
}

pub fn sub_vec(a: &[Rational], b: &[Rational]) -> RatVector {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add_vec(a: &[Rational], b: &[Rational]) -> RatVector {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Distinct rational roots of a polynomial given by coefficients
/// `c_0..c_n` (rational root theorem after clearing denominators).
pub fn rational_roots(coeffs: &[Rational]) -> Result<Vec<Rational>> {
    let mut c: Vec<Rational> = coeffs.to_vec();
    while c.last().is_some_and(|x| x.is_zero()) {
        c.pop();
    }
    let mut roots = Vec::new();
    // Factor out x^k.
    let shift = c.iter().take_while(|x| x.is_zero()).count();
    if shift > 0 {
        roots.push(Rational::zero());
        c.drain(..shift);
    }
    if c.len() <= 1 {
        return Ok(roots);
    }
    let den = rational::common_denominator(c.iter());
    let ints: Vec<BigInt> = c.iter().map(|x| (x * &den).to_integer()).collect();
    let a0 = ints[0].abs();
    let an = ints.last().unwrap().abs();
    let divisors = |n: &BigInt| -> Result<Vec<BigInt>> {
        let limit = BigInt::from(1u64 << 40);
        if *n > limit {
            return Err(Error::Unsupported(format!("coefficient {n} too large for rational root search")));
        }
        let mut out = Vec::new();
        let mut d = BigInt::one();
        while &d * &d <= *n {
            if (n % &d).is_zero() {
                out.push(d.clone());
                let other = n / &d;
                if other != d {
                    out.push(other);
                }
            }
            d += 1;
        }
        Ok(out)
    };
    let eval = |x: &Rational| ints.iter().rev().fold(Rational::zero(), |acc, k| acc * x + Rational::from(k.clone()));
    let mut candidates = Vec::new();
    for p in divisors(&a0)? {
        for q in divisors(&an)? {
            candidates.push(Rational::new(p.clone(), q.clone()));
            candidates.push(-Rational::new(p.clone(), q));
        }
    }
    candidates.sort();
    candidates.dedup();
    for x in candidates {
        if eval(&x).is_zero() {
            roots.push(x);
        }
    }
    roots.sort();
    Ok(roots)
}

/// Column Hermite normal form of an integer matrix: returns the nonzero
/// columns `H` (lower-echelon) generating the same Z-module as the columns.
pub fn int_column_hnf(cols: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let Some(n) = cols.first().map(|c| c.len()) else {
        return Vec::new();
    };
    let mut cols: Vec<Vec<BigInt>> = cols.to_vec();
    let mut out = Vec::new();
    for row in 0..n {
        // Euclid across the remaining columns on this row.
        loop {
            let mut nz: Vec<usize> = (0..cols.len()).filter(|&j| !cols[j][row].is_zero()).collect();
            if nz.len() <= 1 {
                break;
            }
            nz.sort_by(|&a, &b| cols[a][row].abs().cmp(&cols[b][row].abs()));
            let p = nz[0];
            for &j in &nz[1..] {
                let q = cols[j][row].div_floor(&cols[p][row]);
                let pc = cols[p].clone();
                for (x, y) in cols[j].iter_mut().zip(&pc) {
                    *x -= &q * y;
                }
            }
        }
        if let Some(j) = (0..cols.len()).find(|&j| !cols[j][row].is_zero()) {
            let mut c = cols.remove(j);
            if c[row].is_negative() {
                c.iter_mut().for_each(|x| *x = -x.clone());
            }
            out.push(c);
        }
    }
    out
}

/// Whether integer vector `v` lies in the Z-span of the HNF columns.
pub fn in_int_span(hnf: &[Vec<BigInt>], v: &[BigInt]) -> bool {
    let mut r: Vec<BigInt> = v.to_vec();
    for col in hnf {
        let Some(row) = col.iter().position(|x| !x.is_zero()) else {
            continue;
        };
        if r[..row].iter().any(|x| !x.is_zero()) {
            return false;
        }
        let (q, rem) = r[row].div_rem(&col[row]);
        if !rem.is_zero() {
            return false;
        }
        for (x, y) in r.iter_mut().zip(col) {
            *x -= &q * y;
        }
    }
    r.iter().all(|x| x.is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rational::{int, rat};

    #[test]
    fn inverse_and_det() {
        let m = RatMatrix::from_int_rows(&[&[2, 1], &[1, 1]]);
        assert_eq!(m.det(), int(1));
        assert_eq!(m.mul(&m.inverse().unwrap()), RatMatrix::identity(2));
        let s = RatMatrix::from_int_rows(&[&[1, 2], &[2, 4]]);
        assert_eq!(s.det(), int(0));
        assert!(s.inverse().is_err());
    }

    #[test]
    fn char_poly_of_diagonal() {
        let m = RatMatrix::diagonal(&[int(2), int(3)]);
        // (x-2)(x-3) = x^2 - 5x + 6
        assert_eq!(m.char_poly(), vec![int(6), int(-5), int(1)]);
        assert_eq!(rational_roots(&m.char_poly()).unwrap(), vec![int(2), int(3)]);
        let r = rational_roots(&[int(-1), int(0), int(4)]).unwrap();
        assert_eq!(r, vec![rat(-1, 2), rat(1, 2)]);
        assert!(rational_roots(&[int(-2), int(0), int(1)]).unwrap().is_empty());
    }

    #[test]
    fn nullspace_and_solve() {
        let m = RatMatrix::from_int_rows(&[&[1, 1, 0], &[0, 0, 1]]);
        let ns = m.nullspace();
        assert_eq!(ns.len(), 1);
        assert!(m.mul_vec(&ns[0]).iter().all(|x| x.is_zero()));
        assert!(m.solve(&[int(2), int(3)]).is_some());
        let sing = RatMatrix::from_int_rows(&[&[1, 1], &[1, 1]]);
        assert!(sing.solve(&[int(0), int(1)]).is_none());
    }

    #[test]
    fn projection_is_idempotent() {
        let b = RatMatrix::from_int_rows(&[&[1], &[2], &[2]]);
        let p = RatMatrix::projection_onto(&b).unwrap();
        assert_eq!(p.mul(&p), p);
        assert!(p.is_symmetric());
    }

    #[test]
    fn int_span_membership() {
        let cols = vec![vec![BigInt::from(2), BigInt::from(0)], vec![BigInt::from(1), BigInt::from(3)]];
        let h = int_column_hnf(&cols);
        assert!(in_int_span(&h, &[BigInt::from(3), BigInt::from(3)]));
        assert!(!in_int_span(&h, &[BigInt::from(1), BigInt::from(0)]));
        assert!(in_int_span(&h, &[BigInt::from(-4), BigInt::from(0)]));
    }
}
