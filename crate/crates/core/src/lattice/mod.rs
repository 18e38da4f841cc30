//! Full-rank lattices in R^d with exact rational bases.

mod covering;
mod enumerate;
mod sublattice;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::rational::{self, Rational};
use crate::linalg::{RatMatrix, RatVector};

pub use covering::{covering_radius, covering_radius_with};
pub use enumerate::{enumerate_gram, ShortVectorList, DEFAULT_ENUMERATION_LIMIT};
pub use sublattice::{hnf_matrices, nested_chain, sublattices_of_index};

/// Supported dimension range for enumeration-heavy operations.
pub const MAX_DIM: usize = 4;

/// A lattice spanned by the columns of an invertible rational matrix.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Lattice {
    basis: RatMatrix,
}

impl Lattice {
    pub fn new(basis: RatMatrix) -> Result<Self> {
        if !basis.is_square() || basis.rows() == 0 {
            return Err(Error::InvalidLattice(format!("basis must be square and nonempty, got {}x{}", basis.rows(), basis.cols())));
        }
        if basis.det() == Rational::from_integer(0.into()) {
            return Err(Error::InvalidLattice("basis is singular".into()));
        }
        Ok(Lattice { basis })
    }

    pub fn integer(d: usize) -> Self {
        Lattice { basis: RatMatrix::identity(d) }
    }

    pub fn diagonal(entries: &[Rational]) -> Result<Self> {
        Lattice::new(RatMatrix::diagonal(entries))
    }

    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn basis(&self) -> &RatMatrix {
        &self.basis
    }

    pub fn gram(&self) -> RatMatrix {
        self.basis.transpose().mul(&self.basis)
    }

    pub fn covolume(&self) -> Rational {
        num_traits::Signed::abs(&self.basis.det())
    }

    /// The dual lattice `{y : <y, x> ∈ Z for all x}`, with basis `(Bᵗ)⁻¹`.
    pub fn dual(&self) -> Lattice {
        let inv = self.basis.transpose().inverse().expect("lattice basis is invertible");
        Lattice { basis: inv }
    }

    /// Image of the lattice under a linear map.
    pub fn transform(&self, a: &RatMatrix) -> Result<Lattice> {
        Lattice::new(a.mul(&self.basis))
    }

    /// Coordinates of a point with respect to the basis.
    pub fn coordinates(&self, p: &[Rational]) -> RatVector {
        self.basis.inverse().expect("invertible").mul_vec(p)
    }

    pub fn point(&self, coords: &[i64]) -> RatVector {
        self.basis.mul_int_vec(coords)
    }

    pub fn contains(&self, p: &[Rational]) -> bool {
        self.coordinates(p).iter().all(|c| c.is_integer())
    }

    /// Whether both lattices have the same point set.
    pub fn same_points(&self, other: &Lattice) -> bool {
        if self.dim() != other.dim() {
            return false;
        }
        let d = self.dim();
        (0..d).all(|j| other.contains(&self.basis.column(j))) && (0..d).all(|j| self.contains(&other.basis.column(j)))
    }

    /// Whether the matrix maps the lattice onto itself.
    pub fn is_preserved_by(&self, m: &RatMatrix) -> bool {
        let inv = self.basis.inverse().expect("invertible");
        let in_coords = inv.mul(m).mul(&self.basis);
        in_coords.is_integral() && num_traits::Signed::abs(&in_coords.det()) == Rational::from_integer(1.into())
    }

    /// Reduces a point into the half-open fundamental cell `B·[0,1)^d`.
    pub fn reduce(&self, p: &[Rational]) -> RatVector {
        let c: RatVector = self.coordinates(p).iter().map(|x| x - Rational::from_integer(rational::floor(x))).collect();
        self.basis.mul_vec(&c)
    }

    pub fn enumerate_short_vectors(&self, radius_sq: &Rational) -> Result<ShortVectorList> {
        self.enumerate_short_vectors_limited(radius_sq, DEFAULT_ENUMERATION_LIMIT)
    }

    pub fn enumerate_short_vectors_limited(&self, radius_sq: &Rational, limit: usize) -> Result<ShortVectorList> {
        if radius_sq < &Rational::from_integer(0.into()) {
            return Err(Error::InvalidInput("radius_sq must be nonnegative".into()));
        }
        let vectors = enumerate_gram(&self.gram(), radius_sq, limit)?;
        Ok(ShortVectorList { radius_sq: radius_sq.clone(), vectors })
    }

    pub fn covering_radius(&self, tolerance: f64) -> Result<f64> {
        covering_radius(self, tolerance)
    }

    pub fn to_file(&self) -> LatticeFile {
        LatticeFile {
            dim: self.dim(),
            basis: self.basis.to_rows().iter().map(|r| r.iter().map(rational::format_rational).collect()).collect(),
        }
    }

    pub fn from_file(f: &LatticeFile) -> Result<Self> {
        if f.basis.len() != f.dim {
            return Err(Error::InvalidLattice(format!("dim {} but {} basis rows", f.dim, f.basis.len())));
        }
        Lattice::new(parse_matrix(&f.basis)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Lattice::from_file(&serde_json::from_str(s)?)
    }
}

/// `{ "dim": d, "basis": [[...]] }`: the basis matrix row by row, with the
/// lattice generated by its columns; entries are `"p/q"` strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeFile {
    pub dim: usize,
    pub basis: Vec<Vec<String>>,
}

pub fn parse_matrix(rows: &[Vec<String>]) -> Result<RatMatrix> {
    let rows = rows
        .iter()
        .map(|r| r.iter().map(|s| rational::parse_rational(s)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    RatMatrix::from_rows(rows)
}

pub fn format_matrix(m: &RatMatrix) -> Vec<Vec<String>> {
    m.to_rows().iter().map(|r| r.iter().map(rational::format_rational).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rational::{int, rat};

    #[test]
    fn dual_examples() {
        assert_eq!(Lattice::integer(3).dual(), Lattice::integer(3));
        let l = Lattice::diagonal(&[int(2), rat(1, 2)]).unwrap();
        assert_eq!(l.dual(), Lattice::diagonal(&[rat(1, 2), int(2)]).unwrap());
        // A_t Z^2 with A_t = diag(1/t, t) has dual diag(t, 1/t) Z^2.
        let t = rat(1, 3);
        let l = Lattice::integer(2).transform(&RatMatrix::diagonal(&[t.recip(), t.clone()])).unwrap();
        assert_eq!(l.dual(), Lattice::diagonal(&[t.clone(), t.recip()]).unwrap());
        assert_eq!(l.covolume() * l.dual().covolume(), int(1));
    }

    #[test]
    fn singular_basis_rejected() {
        let m = RatMatrix::from_int_rows(&[&[1, 2], &[2, 4]]);
        assert!(matches!(Lattice::new(m), Err(Error::InvalidLattice(_))));
    }

    #[test]
    fn json_round_trip() {
        let l = Lattice::new(RatMatrix::from_rows(vec![vec![rat(1, 2), int(1)], vec![int(0), rat(3, 4)]]).unwrap()).unwrap();
        let s = l.to_json();
        assert!(s.contains("\"1/2\""));
        assert_eq!(Lattice::from_json(&s).unwrap(), l);
        assert!(Lattice::from_json(r#"{"dim": 2, "basis": [["1","0"]]}"#).is_err());
    }

    #[test]
    fn reduce_into_cell() {
        let l = Lattice::integer(2);
        assert_eq!(l.reduce(&[rat(-1, 2), rat(7, 3)]), vec![rat(1, 2), rat(1, 3)]);
        assert!(l.same_points(&Lattice::new(RatMatrix::from_int_rows(&[&[1, 1], &[0, 1]])).unwrap()));
        assert!(!l.same_points(&Lattice::diagonal(&[int(2), int(1)]).unwrap()));
    }
}
