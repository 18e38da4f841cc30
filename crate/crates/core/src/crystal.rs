//! Crystallographic groups given by a translation lattice and holonomy coset
//! representatives, with exact closure, torsion and cone checks and the
//! volume-preserving collapse family.

use std::path::Path;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::rational::{self, int, rat, Rational};
use crate::lattice::{format_matrix, parse_matrix, Lattice, LatticeFile};
use crate::linalg::{self, RatMatrix, RatVector};

/// `x ↦ A x + v`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AffineMap {
    pub linear: RatMatrix,
    pub translation: RatVector,
}

impl AffineMap {
    pub fn new(linear: RatMatrix, translation: RatVector) -> Result<Self> {
        if !linear.is_square() || linear.rows() != translation.len() {
            return Err(Error::InvalidInput(format!(
                "affine map with {}x{} linear part and translation of length {}",
                linear.rows(),
                linear.cols(),
                translation.len()
            )));
        }
        Ok(AffineMap { linear, translation })
    }

    pub fn identity(d: usize) -> Self {
        AffineMap { linear: RatMatrix::identity(d), translation: vec![Rational::zero(); d] }
    }

    pub fn translation_by(v: RatVector) -> Self {
        AffineMap { linear: RatMatrix::identity(v.len()), translation: v }
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    /// `(A,v)(B,w) = (AB, Aw + v)`.
    pub fn compose(&self, other: &AffineMap) -> AffineMap {
        AffineMap {
            linear: self.linear.mul(&other.linear),
            translation: linalg::add_vec(&self.linear.mul_vec(&other.translation), &self.translation),
        }
    }

    pub fn inverse(&self) -> Result<AffineMap> {
        let inv = self.linear.inverse()?;
        let t = inv.mul_vec(&self.translation).into_iter().map(|x| -x).collect();
        Ok(AffineMap { linear: inv, translation: t })
    }

    pub fn apply(&self, x: &[Rational]) -> RatVector {
        linalg::add_vec(&self.linear.mul_vec(x), &self.translation)
    }
}

/// A lattice of pure translations plus one representative `(B_i, v_i)` per
/// holonomy element; the first representative is the identity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrystalGroup {
    lattice: Lattice,
    holonomy: Vec<AffineMap>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationFailure {
    pub check: String,
    pub i: Option<usize>,
    pub j: Option<usize>,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub failures: Vec<ValidationFailure>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorsionReport {
    pub torsion_free: bool,
    /// Index of a holonomy coset containing an element of finite order.
    pub witness: Option<usize>,
}

impl CrystalGroup {
    /// Builds the group and reduces every translation into the fundamental
    /// cell of the lattice. No group axioms are checked here; see
    /// [`CrystalGroup::validate`].
    pub fn new(lattice: Lattice, holonomy: Vec<AffineMap>) -> Result<Self> {
        let d = lattice.dim();
        if holonomy.is_empty() {
            return Err(Error::InvalidGroup("holonomy list is empty".into()));
        }
        if let Some(bad) = holonomy.iter().position(|h| h.dim() != d || h.linear.rows() != d) {
            return Err(Error::InvalidGroup(format!("representative {bad} has the wrong dimension")));
        }
        let holonomy = holonomy
            .into_iter()
            .map(|h| AffineMap { translation: lattice.reduce(&h.translation), linear: h.linear })
            .collect();
        Ok(CrystalGroup { lattice, holonomy })
    }

    pub fn torus(lattice: Lattice) -> Self {
        let d = lattice.dim();
        CrystalGroup { lattice, holonomy: vec![AffineMap::identity(d)] }
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn holonomy(&self) -> &[AffineMap] {
        &self.holonomy
    }

    pub fn holonomy_order(&self) -> usize {
        self.holonomy.len()
    }

    pub fn has_trivial_holonomy(&self) -> bool {
        self.holonomy.iter().all(|h| h.linear.is_identity())
    }

    fn find_linear(&self, m: &RatMatrix) -> Option<usize> {
        self.holonomy.iter().position(|h| &h.linear == m)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut failures = Vec::new();
        let mut fail = |check: &str, i: Option<usize>, j: Option<usize>, message: String| {
            failures.push(ValidationFailure { check: check.into(), i, j, message });
        };
        let first = &self.holonomy[0];
        if !first.linear.is_identity() || first.translation.iter().any(|x| !x.is_zero()) {
            fail("identity_first", Some(0), None, "first representative must be (I, 0)".into());
        }
        for (i, h) in self.holonomy.iter().enumerate() {
            if !h.linear.is_orthogonal() {
                fail("orthogonal", Some(i), None, format!("linear part {} is not orthogonal", h.linear));
            }
            if !self.lattice.is_preserved_by(&h.linear) {
                fail("lattice_preserved", Some(i), None, format!("linear part {} does not preserve the lattice", h.linear));
            }
            for j in 0..i {
                if self.holonomy[j].linear == h.linear {
                    fail("distinct_linear_parts", Some(j), Some(i), "two representatives share a linear part".into());
                }
            }
        }
        for (i, a) in self.holonomy.iter().enumerate() {
            for (j, b) in self.holonomy.iter().enumerate() {
                let ab = a.compose(b);
                match self.find_linear(&ab.linear) {
                    None => fail("closure", Some(i), Some(j), format!("B_{i} B_{j} is not a holonomy element")),
                    Some(k) => {
                        let diff = linalg::sub_vec(&ab.translation, &self.holonomy[k].translation);
                        if !self.lattice.contains(&diff) {
                            fail(
                                "closure_translation",
                                Some(i),
                                Some(j),
                                format!("v_{i} + B_{i} v_{j} - v_{k} is not a lattice vector"),
                            );
                        }
                    }
                }
            }
        }
        ValidationReport { valid: failures.is_empty(), failures }
    }

    fn require_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.valid {
            Ok(())
        } else {
            let f = &report.failures[0];
            Err(Error::InvalidGroup(format!("{} ({:?}, {:?}): {}", f.check, f.i, f.j, f.message)))
        }
    }

    /// Projection onto the +1 eigenspace of `B`, the average of its powers.
    fn fixed_projection(&self, b: &RatMatrix) -> RatMatrix {
        let n = self.holonomy.len();
        let mut acc = RatMatrix::zeros(self.dim(), self.dim());
        let mut power = RatMatrix::identity(self.dim());
        for _ in 0..n {
            acc = acc.add(&power);
            power = power.mul(b);
        }
        acc.scale(&rat(1, n as i64))
    }

    /// A coset `(B, v + L)` with `B ≠ I` contains an element of finite order
    /// exactly when `P v ∈ P L`, `P` the projection onto `Fix(B)`.
    pub fn torsion_report(&self) -> Result<TorsionReport> {
        self.require_valid()?;
        for (i, h) in self.holonomy.iter().enumerate().skip(1) {
            let p = self.fixed_projection(&h.linear);
            let gens: Vec<RatVector> = (0..self.dim()).map(|j| p.mul_vec(&self.lattice.basis().column(j))).collect();
            let target = p.mul_vec(&h.translation);
            let den = rational::common_denominator(gens.iter().flatten().chain(target.iter()));
            let scale = |v: &[Rational]| -> Vec<BigInt> { v.iter().map(|x| (x * &den).to_integer()).collect() };
            let hnf = linalg::int_column_hnf(&gens.iter().map(|g| scale(g)).collect::<Vec<_>>());
            if linalg::in_int_span(&hnf, &scale(&target)) {
                return Ok(TorsionReport { torsion_free: false, witness: Some(i) });
            }
        }
        Ok(TorsionReport { torsion_free: true, witness: None })
    }

    pub fn is_torsion_free(&self) -> Result<bool> {
        Ok(self.torsion_report()?.torsion_free)
    }

    /// Whether `AᵗA` commutes with every holonomy matrix.
    pub fn cone_membership(&self, a: &RatMatrix) -> Result<bool> {
        if !a.is_square() || a.rows() != self.dim() || a.det().is_zero() {
            return Err(Error::InvalidInput("cone test needs an invertible matrix of the group's dimension".into()));
        }
        let ata = a.transpose().mul(a);
        Ok(self.holonomy.iter().all(|h| ata.commutes_with(&h.linear)))
    }

    /// `(A,v) G (A,v)⁻¹`.
    pub fn conjugate(&self, a: &RatMatrix, v: &[Rational]) -> Result<CrystalGroup> {
        if v.len() != self.dim() {
            return Err(Error::InvalidInput("conjugating translation has the wrong length".into()));
        }
        if !self.cone_membership(a)? {
            return Err(Error::NotIsometricAction(format!("{a}")));
        }
        let a_inv = a.inverse()?;
        let id = RatMatrix::identity(self.dim());
        let lattice = self.lattice.transform(a)?;
        let holonomy = self
            .holonomy
            .iter()
            .map(|h| {
                let b = a.mul(&h.linear).mul(&a_inv);
                let t = linalg::add_vec(&a.mul_vec(&h.translation), &id.sub(&b).mul_vec(v));
                AffineMap { linear: b, translation: t }
            })
            .collect();
        CrystalGroup::new(lattice, holonomy)
    }

    /// Projection onto a nontrivial proper invariant subspace of the
    /// holonomy representation.
    pub fn find_invariant_subspace(&self) -> Result<RatMatrix> {
        let d = self.dim();
        if d < 2 {
            return Err(Error::InvalidInput("an invariant splitting needs d >= 2".into()));
        }
        self.require_valid()?;
        if self.has_trivial_holonomy() {
            let mut p = RatMatrix::zeros(d, d);
            p[(0, 0)] = int(1);
            return Ok(p);
        }
        // Common fixed space.
        let mut stacked = Vec::new();
        for h in &self.holonomy[1..] {
            stacked.extend(h.linear.sub(&RatMatrix::identity(d)).to_rows());
        }
        let fixed = RatMatrix::from_rows(stacked)?.nullspace();
        if !fixed.is_empty() && fixed.len() < d {
            return RatMatrix::projection_onto(&RatMatrix::from_columns(&fixed));
        }
        // Eigenspaces of averaged symmetric seeds lie in the commutant.
        for seed in 0..SEED_BUDGET {
            let s = seed_matrix(d, seed);
            let mut m = RatMatrix::zeros(d, d);
            for h in &self.holonomy {
                m = m.add(&h.linear.transpose().mul(&s).mul(&h.linear));
            }
            let mut best: Option<(usize, Vec<usize>, RatMatrix)> = None;
            for mu in linalg::rational_roots(&m.char_poly())? {
                let space = m.sub(&RatMatrix::identity(d).scale(&mu)).nullspace();
                if space.is_empty() || space.len() == d {
                    continue;
                }
                let p = RatMatrix::projection_onto(&RatMatrix::from_columns(&space))?;
                let key = (space.len(), p.rref().1);
                if best.as_ref().is_none_or(|(k, piv, _)| (key.0, &key.1) < (*k, piv)) {
                    best = Some((key.0, key.1, p));
                }
            }
            if let Some((_, _, p)) = best {
                return Ok(p);
            }
        }
        Err(Error::IrreducibleUnexpected(format!("{SEED_BUDGET} seeds gave no rational splitting")))
    }

    pub fn to_file(&self) -> CrystalGroupFile {
        CrystalGroupFile {
            lattice: self.lattice.to_file(),
            holonomy: self
                .holonomy
                .iter()
                .map(|h| AffineMapFile {
                    linear: format_matrix(&h.linear),
                    translation: h.translation.iter().map(rational::format_rational).collect(),
                })
                .collect(),
        }
    }

    pub fn from_file(f: &CrystalGroupFile) -> Result<Self> {
        let lattice = Lattice::from_file(&f.lattice)?;
        let holonomy = f
            .holonomy
            .iter()
            .map(|h| {
                let t = h.translation.iter().map(|s| rational::parse_rational(s)).collect::<Result<Vec<_>>>()?;
                AffineMap::new(parse_matrix(&h.linear)?, t)
            })
            .collect::<Result<Vec<_>>>()?;
        CrystalGroup::new(lattice, holonomy)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        CrystalGroup::from_file(&serde_json::from_str(s)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        CrystalGroup::from_json(&std::fs::read_to_string(path)?)
    }
}

const SEED_BUDGET: usize = 16;

fn seed_matrix(d: usize, seed: usize) -> RatMatrix {
    let mut s = RatMatrix::zeros(d, d);
    for i in 0..d {
        s[(i, i)] = int((i + 1) as i64 * (seed as i64 + 1));
        for j in i + 1..d {
            let v = ((i + 2 * j + 3) * (seed + 1) % (5 + seed)) as i64;
            s[(i, j)] = int(v);
            s[(j, i)] = int(v);
        }
    }
    s
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffineMapFile {
    pub linear: Vec<Vec<String>>,
    pub translation: Vec<String>,
}

/// `{ "lattice": {...}, "holonomy": [ { "linear": [[...]], "translation": [...] } ] }`
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrystalGroupFile {
    pub lattice: LatticeFile,
    pub holonomy: Vec<AffineMapFile>,
}

/// Invariant-subspace data for `A_t = t^{k-d} P + t^k P⊥`, `k = dim E`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CollapseFamily {
    projection: RatMatrix,
    dim_e: usize,
    group: CrystalGroup,
}

impl CollapseFamily {
    pub fn new(group: CrystalGroup, projection: RatMatrix) -> Result<Self> {
        let d = group.dim();
        if projection.rows() != d || !projection.is_square() {
            return Err(Error::InvalidInput("projection has the wrong size".into()));
        }
        if projection.mul(&projection) != projection || !projection.is_symmetric() {
            return Err(Error::InvalidInput("projection must be symmetric and idempotent".into()));
        }
        if let Some(i) = group.holonomy.iter().position(|h| !h.linear.commutes_with(&projection)) {
            return Err(Error::InvalidInput(format!("subspace is not invariant under holonomy element {i}")));
        }
        let dim_e = projection.rank();
        if dim_e == 0 || dim_e == d {
            return Err(Error::InvalidInput(format!("invariant subspace must be proper, got dimension {dim_e} in R^{d}")));
        }
        Ok(CollapseFamily { projection, dim_e, group })
    }

    /// Collapse along the span of the given columns.
    pub fn from_basis(group: CrystalGroup, basis: &[RatVector]) -> Result<Self> {
        if basis.is_empty() {
            return Err(Error::InvalidInput("empty subspace basis".into()));
        }
        let p = RatMatrix::projection_onto(&RatMatrix::from_columns(basis))
            .map_err(|_| Error::InvalidInput("subspace basis is linearly dependent".into()))?;
        CollapseFamily::new(group, p)
    }

    pub fn auto(group: CrystalGroup) -> Result<Self> {
        let p = group.find_invariant_subspace()?;
        CollapseFamily::new(group, p)
    }

    pub fn projection(&self) -> &RatMatrix {
        &self.projection
    }

    pub fn dim_e(&self) -> usize {
        self.dim_e
    }

    pub fn group(&self) -> &CrystalGroup {
        &self.group
    }

    /// Exponents `(k - d, k)` of `t` on `E` and on `E⊥`.
    pub fn exponents(&self) -> (i32, i32) {
        let k = self.dim_e as i32;
        (k - self.group.dim() as i32, k)
    }

    pub fn collapse_map(&self, t: &Rational) -> Result<RatMatrix> {
        if !t.is_positive() {
            return Err(Error::InvalidInput(format!("collapse parameter must be positive, got {t}")));
        }
        let (a, b) = self.exponents();
        let perp = RatMatrix::identity(self.group.dim()).sub(&self.projection);
        Ok(self.projection.scale(&rational::pow_i(t, a)).add(&perp.scale(&rational::pow_i(t, b))))
    }

    /// The group conjugated by `A_t`, acting isometrically for the flat metric `h_t`.
    pub fn deformed_group(&self, t: &Rational) -> Result<CrystalGroup> {
        let a = self.collapse_map(t)?;
        self.group.conjugate(&a, &vec![Rational::zero(); self.group.dim()])
    }
}

pub fn collapse_map(c: &CollapseFamily, t: &Rational) -> Result<RatMatrix> {
    c.collapse_map(t)
}

pub fn validate_group(g: &CrystalGroup) -> ValidationReport {
    g.validate()
}

pub fn is_torsion_free(g: &CrystalGroup) -> Result<TorsionReport> {
    g.torsion_report()
}

pub fn cone_membership(g: &CrystalGroup, a: &RatMatrix) -> Result<bool> {
    g.cone_membership(a)
}

pub fn find_invariant_subspace(g: &CrystalGroup) -> Result<RatMatrix> {
    g.find_invariant_subspace()
}

pub fn conjugate_group(g: &CrystalGroup, a: &RatMatrix, v: &[Rational]) -> Result<CrystalGroup> {
    g.conjugate(a, v)
}

/// Built-in groups.
pub mod presets {
    use super::*;

    fn diag(entries: &[i64]) -> RatMatrix {
        RatMatrix::diagonal(&entries.iter().map(|&x| int(x)).collect::<Vec<_>>())
    }

    fn vec_q(entries: &[(i64, i64)]) -> RatVector {
        entries.iter().map(|&(n, d)| rat(n, d)).collect()
    }

    pub fn torus(d: usize) -> CrystalGroup {
        CrystalGroup::torus(Lattice::integer(d))
    }

    /// Klein bottle: glide reflection `(diag(1,-1), (1/2, 0))` over Z².
    pub fn klein() -> CrystalGroup {
        CrystalGroup::new(
            Lattice::integer(2),
            vec![AffineMap::identity(2), AffineMap { linear: diag(&[1, -1]), translation: vec_q(&[(1, 2), (0, 1)]) }],
        )
        .expect("preset")
    }

    /// `{±I}` over Z²; not torsion-free.
    pub fn point_inversion() -> CrystalGroup {
        CrystalGroup::new(
            Lattice::integer(2),
            vec![AffineMap::identity(2), AffineMap { linear: diag(&[-1, -1]), translation: vec_q(&[(0, 1), (0, 1)]) }],
        )
        .expect("preset")
    }

    /// Three-dimensional group with holonomy `Z/2 × Z/2` of diagonal sign changes.
    pub fn hantzsche_wendt() -> CrystalGroup {
        CrystalGroup::new(
            Lattice::integer(3),
            vec![
                AffineMap::identity(3),
                AffineMap { linear: diag(&[1, -1, -1]), translation: vec_q(&[(1, 2), (1, 2), (0, 1)]) },
                AffineMap { linear: diag(&[-1, 1, -1]), translation: vec_q(&[(0, 1), (1, 2), (1, 2)]) },
                AffineMap { linear: diag(&[-1, -1, 1]), translation: vec_q(&[(1, 2), (0, 1), (1, 2)]) },
            ],
        )
        .expect("preset")
    }

    /// Looks up a preset by name: `torus1`..`torus4`, `klein`,
    /// `point-inversion`, `hantzsche-wendt`.
    pub fn by_name(name: &str) -> Option<CrystalGroup> {
        match name {
            "torus1" => Some(torus(1)),
            "torus2" => Some(torus(2)),
            "torus3" => Some(torus(3)),
            "torus4" => Some(torus(4)),
            "klein" => Some(klein()),
            "point-inversion" => Some(point_inversion()),
            "hantzsche-wendt" | "hw" => Some(hantzsche_wendt()),
            _ => None,
        }
    }

    pub const NAMES: &[&str] = &["torus1", "torus2", "torus3", "torus4", "klein", "point-inversion", "hantzsche-wendt"];
}

#[cfg(test)]
mod tests {
    use super::presets::*;
    use super::*;

    fn diag_q(entries: &[Rational]) -> RatMatrix {
        RatMatrix::diagonal(entries)
    }

    #[test]
    fn validation_examples() {
        assert!(torus(2).validate().valid);
        assert!(klein().validate().valid);
        assert!(hantzsche_wendt().validate().valid);
        let bad = CrystalGroup::new(
            Lattice::diagonal(&[int(2), int(1)]).unwrap(),
            klein().holonomy().to_vec(),
        )
        .unwrap();
        let r = bad.validate();
        assert!(!r.valid);
        assert!(r.failures.iter().any(|f| f.check == "closure_translation" && f.i == Some(1) && f.j == Some(1)));
    }

    #[test]
    fn torsion_examples() {
        assert!(klein().is_torsion_free().unwrap());
        assert!(hantzsche_wendt().is_torsion_free().unwrap());
        let r = point_inversion().torsion_report().unwrap();
        assert_eq!(r, TorsionReport { torsion_free: false, witness: Some(1) });
        let shifted = CrystalGroup::new(
            Lattice::integer(2),
            vec![AffineMap::identity(2), AffineMap { linear: RatMatrix::from_int_rows(&[&[-1, 0], &[0, -1]]), translation: vec![rat(1, 2), rat(1, 2)] }],
        )
        .unwrap();
        assert!(!shifted.is_torsion_free().unwrap());
    }

    #[test]
    fn cone_examples() {
        let k = klein();
        assert!(k.cone_membership(&diag_q(&[int(2), int(3)])).unwrap());
        let rot = RatMatrix::from_rows(vec![vec![rat(3, 5), rat(-4, 5)], vec![rat(4, 5), rat(3, 5)]]).unwrap();
        assert!(k.cone_membership(&rot).unwrap());
        assert!(!k.cone_membership(&diag_q(&[int(2), int(1)]).mul(&rot)).unwrap());
        assert!(k.cone_membership(&RatMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn invariant_subspaces() {
        let e1 = |d: usize| {
            let mut p = RatMatrix::zeros(d, d);
            p[(0, 0)] = int(1);
            p
        };
        assert_eq!(torus(2).find_invariant_subspace().unwrap(), e1(2));
        assert_eq!(klein().find_invariant_subspace().unwrap(), e1(2));
        assert_eq!(hantzsche_wendt().find_invariant_subspace().unwrap(), e1(3));
        assert!(torus(1).find_invariant_subspace().is_err());
    }

    #[test]
    fn collapse_and_conjugation() {
        let fam = CollapseFamily::auto(torus(2)).unwrap();
        assert!(fam.collapse_map(&int(1)).unwrap().is_identity());
        assert_eq!(fam.collapse_map(&rat(1, 2)).unwrap(), diag_q(&[int(2), rat(1, 2)]));
        assert!(fam.collapse_map(&int(0)).is_err());

        let t = rat(1, 3);
        let kf = CollapseFamily::auto(klein()).unwrap();
        let g = kf.deformed_group(&t).unwrap();
        assert_eq!(g.lattice(), &Lattice::diagonal(&[int(3), t.clone()]).unwrap());
        assert_eq!(g.holonomy()[1].translation, vec![rat(3, 2), int(0)]);
        assert!(g.validate().valid && g.is_torsion_free().unwrap());

        let same = klein().conjugate(&RatMatrix::identity(2), &[int(0), int(0)]).unwrap();
        assert_eq!(same, klein());
        let skew = RatMatrix::from_int_rows(&[&[1, 1], &[0, 1]]);
        assert!(matches!(klein().conjugate(&skew, &[int(0), int(0)]), Err(Error::NotIsometricAction(_))));
    }

    #[test]
    fn json_round_trip() {
        let g = hantzsche_wendt();
        assert_eq!(CrystalGroup::from_json(&g.to_json()).unwrap(), g);
        assert!(presets::NAMES.iter().all(|n| by_name(n).is_some()));
    }
}
