//! Finite, certified-complete slices of Laplace spectra: round spheres, flat
//! tori, Bieberbach quotients and products.
//!
//! Flat eigenvalues are `4π²‖y‖²` for `y` in the dual lattice. On a quotient
//! the multiplicity of an eigenvalue is the dimension of the holonomy
//! invariant part of its torus eigenspace, computed as a character sum.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::crystal::CrystalGroup;
use crate::error::{Error, Result};
use crate::exact::rational::{self, int, Rational};
use crate::exact::{Certifier, ExactReal, Exponent};
use crate::lattice::{covering_radius, Lattice, DEFAULT_ENUMERATION_LIMIT};
use crate::linalg::{self, RatVector};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpectrumEntry {
    pub value: ExactReal,
    pub multiplicity: u64,
}

/// Every eigenvalue strictly below `cutoff`, with multiplicity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpectrumSlice {
    pub entries: Vec<SpectrumEntry>,
    pub cutoff: ExactReal,
    pub source: String,
    pub certificate: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntryFile {
    pub eigenvalue: f64,
    pub eigenvalue_exact: String,
    pub multiplicity: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSliceFile {
    pub source: String,
    pub cutoff: f64,
    pub cutoff_exact: String,
    pub complete_below_cutoff: bool,
    pub certificate: String,
    pub entries: Vec<SpectrumEntryFile>,
}

impl SpectrumSlice {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn multiplicity_of(&self, value: &ExactReal) -> u64 {
        self.entries.iter().find(|e| &e.value == value).map_or(0, |e| e.multiplicity)
    }

    /// Eigenvalues repeated according to multiplicity, `λ_0 = 0` first.
    pub fn expanded(&self) -> Vec<&ExactReal> {
        self.entries.iter().flat_map(|e| std::iter::repeat_n(&e.value, e.multiplicity as usize)).collect()
    }

    pub fn total_multiplicity(&self) -> u64 {
        self.entries.iter().map(|e| e.multiplicity).sum()
    }

    pub fn to_file(&self) -> SpectrumSliceFile {
        SpectrumSliceFile {
            source: self.source.clone(),
            cutoff: self.cutoff.to_f64(),
            cutoff_exact: self.cutoff.to_string(),
            complete_below_cutoff: true,
            certificate: self.certificate.clone(),
            entries: self
                .entries
                .iter()
                .map(|e| SpectrumEntryFile {
                    eigenvalue: e.value.to_f64(),
                    eigenvalue_exact: e.value.to_string(),
                    multiplicity: e.multiplicity,
                })
                .collect(),
        }
    }

    pub fn from_file(f: &SpectrumSliceFile) -> Result<Self> {
        let entries = f
            .entries
            .iter()
            .map(|e| Ok(SpectrumEntry { value: ExactReal::from_str(&e.eigenvalue_exact)?, multiplicity: e.multiplicity }))
            .collect::<Result<Vec<_>>>()?;
        Ok(SpectrumSlice {
            entries,
            cutoff: ExactReal::from_str(&f.cutoff_exact)?,
            source: f.source.clone(),
            certificate: f.certificate.clone(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        SpectrumSlice::from_file(&serde_json::from_str(s)?)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("eigenvalue,eigenvalue_exact,multiplicity\n");
        for e in &self.entries {
            let _ = writeln!(out, "{},{},{}", e.value.to_f64(), e.value, e.multiplicity);
        }
        out
    }

    /// Checks ordering, positivity of multiplicities and the leading `(0, 1)`.
    pub fn check(&self, cert: &Certifier) -> Result<()> {
        if let Some(first) = self.entries.first() {
            if !first.value.is_zero() || first.multiplicity != 1 {
                return Err(Error::InvalidInput("spectrum must start with (0, 1)".into()));
            }
        }
        for e in &self.entries {
            if e.multiplicity == 0 {
                return Err(Error::InvalidInput(format!("eigenvalue {} has multiplicity 0", e.value)));
            }
            if e.value.cmp_with(&self.cutoff, cert)? != Ordering::Less {
                return Err(Error::InvalidInput(format!("eigenvalue {} is not below the cutoff", e.value)));
            }
        }
        for w in self.entries.windows(2) {
            if w[0].value.cmp_with(&w[1].value, cert)? != Ordering::Less {
                return Err(Error::InvalidInput("eigenvalues must be strictly increasing".into()));
            }
        }
        Ok(())
    }
}

/// Sorts distinct exact values with certified comparisons.
fn sort_certified(values: &mut [SpectrumEntry], cert: &Certifier) -> Result<()> {
    let mut err = None;
    values.sort_by(|a, b| match a.value.cmp_with(&b.value, cert) {
        Ok(o) => o,
        Err(e) => {
            err.get_or_insert(e);
            Ordering::Equal
        }
    });
    err.map_or(Ok(()), Err)
}

/// `Vol(Sⁿ) = 2π^{(n+1)/2} / Γ((n+1)/2)` exactly.
pub fn sphere_volume(n: usize) -> ExactReal {
    if n % 2 == 1 {
        let m = (n + 1) / 2;
        let fact: BigInt = (1..m).map(BigInt::from).product();
        ExactReal::pi_power(Rational::new(BigInt::from(2), fact), Exponent::from_integer(m as i64))
    } else {
        let k = n / 2;
        let fk: BigInt = (1..=k).map(BigInt::from).product();
        let f2k: BigInt = (1..=2 * k).map(BigInt::from).product();
        let c = Rational::new(BigInt::from(2) * BigInt::from(4).pow(k as u32) * fk, f2k);
        ExactReal::pi_power(c, Exponent::from_integer(k as i64))
    }
}

/// Radius of the round `S^m` of volume 1.
pub fn unit_volume_sphere_radius(m: usize) -> Result<ExactReal> {
    sphere_volume(m).pow_ratio(Exponent::new(-1, m as i64))
}

fn binomial(n: u64, k: u64) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Multiplicity of the `j`-th eigenvalue of the round `S^m`.
pub fn sphere_multiplicity(m: usize, j: u64) -> u64 {
    let m = m as u64;
    let a = binomial(m + j, j);
    let b = if j >= 2 { binomial(m + j - 2, j - 2) } else { 0 };
    (a - b) as u64
}

/// `j(j+m-1)/R²` below the cutoff.
pub fn sphere_spectrum(m: usize, radius: &ExactReal, cutoff: &ExactReal, cert: &Certifier) -> Result<SpectrumSlice> {
    if m < 2 {
        return Err(Error::InvalidInput("sphere dimension must be at least 2".into()));
    }
    if radius.sign(cert)? != Ordering::Greater {
        return Err(Error::InvalidInput("radius must be positive".into()));
    }
    let inv_r_sq = radius.powi(-2)?;
    let mut entries = Vec::new();
    for j in 0u64.. {
        let value = inv_r_sq.scale(&int((j * (j + m as u64 - 1)) as i64));
        if value.cmp_with(cutoff, cert)? != Ordering::Less {
            break;
        }
        entries.push(SpectrumEntry { value, multiplicity: sphere_multiplicity(m, j) });
    }
    Ok(SpectrumSlice {
        entries,
        cutoff: cutoff.clone(),
        source: format!("sphere S^{m} radius {radius}"),
        certificate: "closed form j(j+m-1)/R^2".into(),
    })
}

/// Nonzero dual vectors `y` with `4π²‖y‖² < cutoff`, as points with norms.
fn dual_vectors_below(l: &Lattice, cutoff: &ExactReal, cert: &Certifier) -> Result<(Vec<(RatVector, Rational)>, Rational)> {
    let bound = cutoff.div(&ExactReal::four_pi_sq())?;
    if bound.sign(cert)? != Ordering::Greater {
        return Ok((Vec::new(), Rational::zero()));
    }
    let radius_sq = bound.enclose(cert).upper();
    let dual = l.dual();
    let list = dual.enumerate_short_vectors_limited(&radius_sq, DEFAULT_ENUMERATION_LIMIT)?;
    let mut out = Vec::with_capacity(list.len());
    for (coords, norm) in list.vectors {
        if ExactReal::four_pi_sq().scale(&norm).cmp_with(cutoff, cert)? == Ordering::Less {
            out.push((dual.point(&coords), norm));
        }
    }
    Ok((out, radius_sq))
}

/// `cos(2π r)` when it is rational.
fn rational_cos(r: &Rational) -> Option<Rational> {
    let frac = r - Rational::from_integer(rational::floor(r));
    let den = frac.denom().to_u64()?;
    let num = frac.numer().to_i64()?;
    let val = match (num, den) {
        (0, 1) => int(1),
        (1, 2) => int(-1),
        (1, 3) | (2, 3) => rational::rat(-1, 2),
        (1, 4) | (3, 4) => int(0),
        (1, 6) | (5, 6) => rational::rat(1, 2),
        _ => return None,
    };
    Some(val)
}

/// Dimension of the holonomy-invariant part of `span{e^{2πi⟨y,x⟩} : y ∈ ys}`.
///
/// `ys` must be a union of holonomy orbits of dual vectors of the group's
/// translation lattice. The element `(B, v)` maps `e_y` to
/// `e^{2πi⟨y,v⟩} e_{Bᵗy}`, so its trace is a sum of phases over fixed `y`.
pub fn invariant_dimension(g: &CrystalGroup, ys: &[RatVector], label: &str) -> Result<u64> {
    if g.has_trivial_holonomy() {
        return Ok(ys.len() as u64);
    }
    let mut exact = Rational::zero();
    let mut approx = 0.0f64;
    let mut inexact_terms = 0usize;
    for h in g.holonomy() {
        let identity = h.linear.is_identity();
        for y in ys {
            if !identity && &h.linear.mul_vec(y) != y {
                continue;
            }
            let r = linalg::dot(y, &h.translation);
            match rational_cos(&r) {
                Some(c) => exact += c,
                None => {
                    approx += (2.0 * std::f64::consts::PI * rational::to_f64(&(&r - Rational::from_integer(rational::floor(&r))))).cos();
                    inexact_terms += 1;
                }
            }
        }
    }
    let order = int(g.holonomy_order() as i64);
    let bad = |value: String| Error::NonIntegerMultiplicity { eigenvalue: label.to_string(), value };
    if inexact_terms == 0 {
        let m = exact / &order;
        if !m.is_integer() || m.is_negative() {
            return Err(bad(rational::format_rational(&m)));
        }
        return m.to_integer().to_u64().ok_or_else(|| bad(rational::format_rational(&m)));
    }
    let total = (rational::to_f64(&exact) + approx) / rational::to_f64(&order);
    let nearest = total.round();
    let tol = 1e-9 * (1.0 + ys.len() as f64);
    if (total - nearest).abs() > tol || nearest < 0.0 {
        return Err(bad(format!("{total}")));
    }
    Ok(nearest as u64)
}

/// Flat spectrum of `R^d / G` below the cutoff.
fn flat_spectrum(g: &CrystalGroup, cutoff: &ExactReal, cert: &Certifier, source: String) -> Result<SpectrumSlice> {
    let (vectors, radius_sq) = dual_vectors_below(g.lattice(), cutoff, cert)?;
    let mut groups: BTreeMap<Rational, Vec<RatVector>> = BTreeMap::new();
    for (y, norm) in vectors {
        groups.entry(norm).or_default().push(y);
    }
    let mut entries = Vec::new();
    if cutoff.sign(cert)? == Ordering::Greater {
        entries.push(SpectrumEntry { value: ExactReal::zero(), multiplicity: 1 });
    }
    for (norm, ys) in groups {
        let value = ExactReal::four_pi_sq().scale(&norm);
        let multiplicity = invariant_dimension(g, &ys, &value.to_string())?;
        if multiplicity > 0 {
            entries.push(SpectrumEntry { value, multiplicity });
        }
    }
    Ok(SpectrumSlice {
        entries,
        cutoff: cutoff.clone(),
        source,
        certificate: format!("complete dual-lattice enumeration to squared radius {}", rational::format_rational(&radius_sq)),
    })
}

pub fn torus_spectrum(l: &Lattice, cutoff: &ExactReal, cert: &Certifier) -> Result<SpectrumSlice> {
    flat_spectrum(&CrystalGroup::torus(l.clone()), cutoff, cert, format!("flat torus, dim {}", l.dim()))
}

pub fn bieberbach_spectrum(g: &CrystalGroup, cutoff: &ExactReal, cert: &Certifier) -> Result<SpectrumSlice> {
    let report = g.torsion_report()?;
    if !report.torsion_free {
        return Err(Error::InvalidGroup(format!("group has torsion in holonomy coset {}", report.witness.unwrap_or(0))));
    }
    flat_spectrum(g, cutoff, cert, format!("flat manifold, dim {}, holonomy order {}", g.dim(), g.holonomy_order()))
}

/// Smallest doubling of `start` whose torus slice holds more than `count`
/// eigenvalues counted with multiplicity.
pub fn torus_spectrum_with_count(l: &Lattice, count: usize, start: &ExactReal, cert: &Certifier) -> Result<SpectrumSlice> {
    let mut cutoff = start.clone();
    loop {
        let s = torus_spectrum(l, &cutoff, cert)?;
        if s.total_multiplicity() as usize > count {
            return Ok(s);
        }
        cutoff = cutoff.scale(&int(2));
    }
}

/// Sums `λ_a + λ_b` below the cutoff with multiplicities multiplied.
pub fn product_spectrum(a: &SpectrumSlice, b: &SpectrumSlice, cutoff: &ExactReal, cert: &Certifier) -> Result<SpectrumSlice> {
    for (name, s) in [("first", a), ("second", b)] {
        if s.cutoff.cmp_with(cutoff, cert)? == Ordering::Less {
            return Err(Error::IncompleteInput(format!("{name} factor is complete only below {}, need {cutoff}", s.cutoff)));
        }
    }
    let mut sums: Vec<SpectrumEntry> = Vec::new();
    let mut index: std::collections::HashMap<ExactReal, usize> = std::collections::HashMap::new();
    for x in &a.entries {
        for y in &b.entries {
            let v = &x.value + &y.value;
            if v.cmp_with(cutoff, cert)? != Ordering::Less {
                continue;
            }
            let m = x.multiplicity * y.multiplicity;
            match index.get(&v) {
                Some(&i) => sums[i].multiplicity += m,
                None => {
                    index.insert(v.clone(), sums.len());
                    sums.push(SpectrumEntry { value: v, multiplicity: m });
                }
            }
        }
    }
    sort_certified(&mut sums, cert)?;
    Ok(SpectrumSlice {
        entries: sums,
        cutoff: cutoff.clone(),
        source: format!("product of ({}) and ({})", a.source, b.source),
        certificate: "sums of complete slices with nonnegative eigenvalues".into(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiameterKind {
    Exact,
    UpperBound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diameter {
    pub value: f64,
    pub kind: DiameterKind,
}

/// Diameter of `R^d / G`: the covering radius for a torus, otherwise the
/// covering-torus diameter as an upper bound.
pub fn flat_diameter(g: &CrystalGroup, tolerance: f64) -> Result<Diameter> {
    let value = covering_radius(g.lattice(), tolerance)?;
    let kind = if g.has_trivial_holonomy() { DiameterKind::Exact } else { DiameterKind::UpperBound };
    Ok(Diameter { value, kind })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Satisfied,
    Violated,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChengRow {
    pub j: usize,
    pub lambda: f64,
    pub lambda_exact: String,
    pub bound: f64,
    pub margin: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChengReport {
    pub dim: usize,
    pub diameter: f64,
    pub diameter_kind: DiameterKind,
    pub rows: Vec<ChengRow>,
    pub violations: usize,
    pub verdict: Verdict,
}

/// `λ_j ≤ 2j²·d(d+4)/diam²` for `j = 1..=j_max`, with `λ_j` indexed with
/// multiplicity. With an upper-bound diameter a failure is inconclusive.
pub fn cheng_bound_check(spec: &SpectrumSlice, d: usize, diam: &Diameter, j_max: usize) -> Result<ChengReport> {
    if !(diam.value > 0.0) {
        return Err(Error::InvalidInput("diameter must be positive".into()));
    }
    let expanded = spec.expanded();
    if expanded.len() <= j_max {
        return Err(Error::IncompleteInput(format!(
            "slice holds {} eigenvalues with multiplicity, need index {j_max}",
            expanded.len()
        )));
    }
    let c = 2.0 * (d * (d + 4)) as f64 / (diam.value * diam.value);
    let rows: Vec<ChengRow> = (1..=j_max)
        .map(|j| {
            let lambda = expanded[j].to_f64();
            let bound = c * (j * j) as f64;
            ChengRow { j, lambda, lambda_exact: expanded[j].to_string(), bound, margin: bound - lambda, ok: lambda <= bound }
        })
        .collect();
    let violations = rows.iter().filter(|r| !r.ok).count();
    let verdict = match (violations, diam.kind) {
        (0, _) => Verdict::Satisfied,
        (_, DiameterKind::Exact) => Verdict::Violated,
        (_, DiameterKind::UpperBound) => Verdict::Inconclusive,
    };
    Ok(ChengReport { dim: d, diameter: diam.value, diameter_kind: diam.kind, rows, violations, verdict })
}

/// A closed factor `(M, g)` with constant scalar curvature.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClosedFactorKind {
    Sphere { radius: ExactReal },
    Custom { spectrum: SpectrumSlice },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosedFactor {
    pub kind: ClosedFactorKind,
    pub dim: usize,
    pub scal: ExactReal,
    pub volume: ExactReal,
}

impl ClosedFactor {
    /// Round `S^m` of the given radius: `scal = m(m-1)/R²`, `vol = Vol(S^m) R^m`.
    pub fn sphere(m: usize, radius: ExactReal) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidInput("sphere dimension must be at least 2".into()));
        }
        let scal = radius.powi(-2)?.scale(&int((m * (m - 1)) as i64));
        let volume = &sphere_volume(m) * &radius.powi(m as i32)?;
        Ok(ClosedFactor { kind: ClosedFactorKind::Sphere { radius }, dim: m, scal, volume })
    }

    pub fn unit_volume_sphere(m: usize) -> Result<Self> {
        ClosedFactor::sphere(m, unit_volume_sphere_radius(m)?)
    }

    pub fn custom(dim: usize, scal: ExactReal, volume: ExactReal, spectrum: SpectrumSlice, cert: &Certifier) -> Result<Self> {
        spectrum.check(cert)?;
        if spectrum.entries.is_empty() {
            return Err(Error::InvalidInput("custom spectrum must contain (0, 1)".into()));
        }
        if volume.sign(cert)? != Ordering::Greater {
            return Err(Error::InvalidInput("volume must be positive".into()));
        }
        Ok(ClosedFactor { kind: ClosedFactorKind::Custom { spectrum }, dim, scal, volume })
    }

    pub fn spectrum(&self, cutoff: &ExactReal, cert: &Certifier) -> Result<SpectrumSlice> {
        match &self.kind {
            ClosedFactorKind::Sphere { radius } => sphere_spectrum(self.dim, radius, cutoff, cert),
            ClosedFactorKind::Custom { spectrum } => {
                if spectrum.cutoff.cmp_with(cutoff, cert)? == Ordering::Less {
                    return Err(Error::IncompleteInput(format!(
                        "custom spectrum is complete below {}, need {cutoff}",
                        spectrum.cutoff
                    )));
                }
                let mut entries = Vec::new();
                for e in &spectrum.entries {
                    if e.value.cmp_with(cutoff, cert)? == Ordering::Less {
                        entries.push(e.clone());
                    }
                }
                Ok(SpectrumSlice { entries, cutoff: cutoff.clone(), ..spectrum.clone() })
            }
        }
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            ClosedFactorKind::Sphere { radius } => format!("S^{} radius {radius}", self.dim),
            ClosedFactorKind::Custom { .. } => format!("custom closed factor, dim {}", self.dim),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crystal::presets;
    use crate::exact::rational::rat;

    fn c() -> Certifier {
        Certifier::default()
    }

    fn pi2(q: Rational) -> ExactReal {
        ExactReal::four_pi_sq().scale(&q)
    }

    fn listing(s: &SpectrumSlice) -> Vec<(String, u64)> {
        s.entries.iter().map(|e| (e.value.to_string(), e.multiplicity)).collect()
    }

    #[test]
    fn sphere_examples() {
        let s = sphere_spectrum(2, &ExactReal::one(), &ExactReal::from_int(13), &c()).unwrap();
        assert_eq!(listing(&s), vec![("0".into(), 1), ("2".into(), 3), ("6".into(), 5), ("12".into(), 7)]);
        let s3 = sphere_spectrum(3, &ExactReal::one(), &ExactReal::from_int(4), &c()).unwrap();
        assert_eq!(s3.entries[1].multiplicity, 4);
        let u = ClosedFactor::unit_volume_sphere(2).unwrap();
        assert_eq!(u.scal, ExactReal::pi().scale(&int(8)));
        assert_eq!(u.volume, ExactReal::one());
        let s = u.spectrum(&ExactReal::from_int(100), &c()).unwrap();
        assert_eq!(s.entries[1].value, ExactReal::pi().scale(&int(8)));
        assert_eq!(sphere_volume(4), ExactReal::pi_power(rat(8, 3), Exponent::from_integer(2)));
        assert_eq!(sphere_volume(3), ExactReal::pi_power(int(2), Exponent::from_integer(2)));
    }

    #[test]
    fn torus_examples() {
        let s = torus_spectrum(&Lattice::integer(1), &ExactReal::from_int(50), &c()).unwrap();
        assert_eq!(listing(&s), vec![("0".into(), 1), ("4*pi^2".into(), 2)]);
        let s = torus_spectrum(&Lattice::integer(2), &ExactReal::from_int(100), &c()).unwrap();
        assert_eq!(listing(&s), vec![("0".into(), 1), ("4*pi^2".into(), 4), ("8*pi^2".into(), 4)]);
        let t = rat(1, 2);
        let l = Lattice::diagonal(&[t.recip(), t.clone()]).unwrap();
        let s = torus_spectrum(&l, &ExactReal::from_int(100), &c()).unwrap();
        assert_eq!(s.entries[1].value, ExactReal::pi_power(int(1), Exponent::from_integer(2)));
        let s = torus_spectrum(&Lattice::integer(2), &ExactReal::one(), &c()).unwrap();
        assert_eq!(listing(&s), vec![("0".into(), 1)]);
    }

    #[test]
    fn klein_multiplicities() {
        let s = bieberbach_spectrum(&presets::klein(), &ExactReal::from_int(100), &c()).unwrap();
        assert_eq!(s.multiplicity_of(&ExactReal::zero()), 1);
        assert_eq!(s.multiplicity_of(&pi2(int(1))), 1);
        let torus = torus_spectrum(&Lattice::integer(2), &ExactReal::from_int(100), &c()).unwrap();
        let trivial = bieberbach_spectrum(&presets::torus(2), &ExactReal::from_int(100), &c()).unwrap();
        assert_eq!(torus.entries, trivial.entries);
        for e in &s.entries {
            assert!(e.multiplicity <= torus.multiplicity_of(&e.value).max(1));
        }
        assert!(matches!(
            bieberbach_spectrum(&presets::point_inversion(), &ExactReal::from_int(10), &c()),
            Err(Error::InvalidGroup(_))
        ));
    }

    #[test]
    fn products() {
        let z1 = |cut: i64| torus_spectrum(&Lattice::integer(1), &ExactReal::from_int(cut), &c()).unwrap();
        let p = product_spectrum(&z1(40), &z1(40), &ExactReal::from_int(40), &c()).unwrap();
        assert_eq!(listing(&p), vec![("0".into(), 1), ("4*pi^2".into(), 4)]);
        let p = product_spectrum(&z1(100), &z1(100), &ExactReal::from_int(100), &c()).unwrap();
        assert_eq!(listing(&p), vec![("0".into(), 1), ("4*pi^2".into(), 4), ("8*pi^2".into(), 4)]);
        assert!(matches!(product_spectrum(&z1(40), &z1(100), &ExactReal::from_int(100), &c()), Err(Error::IncompleteInput(_))));

        let threshold = ExactReal::pi().scale(&rat(8, 3));
        let s2 = ClosedFactor::unit_volume_sphere(2).unwrap().spectrum(&threshold, &c()).unwrap();
        let t2 = torus_spectrum(&Lattice::integer(2), &threshold, &c()).unwrap();
        let p = product_spectrum(&s2, &t2, &threshold, &c()).unwrap();
        assert_eq!(listing(&p), vec![("0".into(), 1)]);
    }

    #[test]
    fn cheng_examples() {
        let l = Lattice::integer(2);
        let s = torus_spectrum_with_count(&l, 5, &ExactReal::from_int(50), &c()).unwrap();
        let diam = flat_diameter(&presets::torus(2), 1e-9).unwrap();
        let r = cheng_bound_check(&s, 2, &diam, 5).unwrap();
        assert_eq!(r.verdict, Verdict::Satisfied);
        assert!((r.rows[0].bound - 48.0).abs() < 1e-6);
        assert!(cheng_bound_check(&s, 2, &diam, 500).is_err());
        let kd = flat_diameter(&presets::klein(), 1e-9).unwrap();
        assert_eq!(kd.kind, DiameterKind::UpperBound);
        let fake = Diameter { value: 100.0, kind: DiameterKind::UpperBound };
        assert_eq!(cheng_bound_check(&s, 2, &fake, 1).unwrap().verdict, Verdict::Inconclusive);
    }

    #[test]
    fn json_and_csv_round_trip() {
        let s = bieberbach_spectrum(&presets::klein(), &ExactReal::from_int(200), &c()).unwrap();
        assert_eq!(SpectrumSlice::from_json(&s.to_json()).unwrap(), s);
        assert!(s.to_csv().starts_with("eigenvalue,eigenvalue_exact,multiplicity\n0,0,1\n"));
    }

    #[test]
    fn weyl_counting() {
        let b = crate::linalg::RatMatrix::from_rows(vec![vec![int(1), rat(1, 3)], vec![int(0), int(1)]]).unwrap();
        for l in [Lattice::integer(2), Lattice::new(b).unwrap(), Lattice::diagonal(&[int(2), rat(1, 2)]).unwrap()] {
            let s = torus_spectrum(&l, &ExactReal::from_int(400), &c()).unwrap();
            let n = s.total_multiplicity() as f64;
            let weyl = 400.0 / (4.0 * std::f64::consts::PI);
            assert!((n / weyl - 1.0).abs() < 0.2, "{n} vs {weyl}");
        }
    }
}
