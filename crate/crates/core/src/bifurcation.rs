//! The Morse-index curve `i_t` of `g ⊕ h_t`, threshold crossings and
//! certified bifurcation instants.
//!
//! Dual vectors `y` of the undeformed lattice are grouped into classes by
//! `a = ‖Py‖²`, `b = ‖P⊥y‖²`. Under `A_t` the eigenvalue of `y` becomes
//! `4π²(t^{2α} a + t^{-2β} b)` with `α = d - k`, `β = k`, and holonomy phases
//! do not depend on `t`, so each class carries a fixed quotient multiplicity.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::crystal::{CollapseFamily, CrystalGroup};
use crate::error::{Error, Result};
use crate::exact::rational::{self, int, Rational};
use crate::exact::{Certifier, ExactReal, Exponent};
use crate::lattice::{enumerate_gram, DEFAULT_ENUMERATION_LIMIT};
use crate::linalg::{self, RatMatrix, RatVector};
use crate::parallel::{self, Exec};
use crate::spectral::{invariant_dimension, ClosedFactor};

/// Which end of the parameter range the flat factor degenerates at.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `t ↘ 0`.
    #[default]
    Shrink,
    /// `t ↗ ∞`.
    Expand,
}

/// `(M, g) × (R^d / π, h_t)` with both factors of unit volume.
#[derive(Clone, Debug)]
pub struct Scenario {
    closed: ClosedFactor,
    group: CrystalGroup,
    collapse: Option<CollapseFamily>,
    direction: Direction,
    cert: Certifier,
    threshold: ExactReal,
    levels: Vec<Level>,
}

#[derive(Clone, Debug)]
struct Level {
    value: ExactReal,
    multiplicity: u64,
    /// `ρ - λ` and an enclosure of `(ρ - λ) / 4π²`.
    gap: ExactReal,
    gap_lo: Rational,
    gap_hi: Rational,
}

impl Scenario {
    /// `collapse = None` gives the constant family `h_t = h`.
    pub fn new(
        closed: ClosedFactor,
        group: CrystalGroup,
        collapse: Option<CollapseFamily>,
        direction: Direction,
        precision_bits: u32,
    ) -> Result<Self> {
        if precision_bits < 64 {
            return Err(Error::InvalidInput(format!("precision_bits must be at least 64, got {precision_bits}")));
        }
        let cert = Certifier::new(precision_bits);
        if closed.volume.cmp_with(&ExactReal::one(), &cert)? != Ordering::Equal {
            return Err(Error::InvalidInput(format!("closed factor must have volume 1, got {}", closed.volume)));
        }
        if closed.scal.sign(&cert)? != Ordering::Greater {
            return Err(Error::InvalidInput("closed factor must have positive scalar curvature".into()));
        }
        let report = group.torsion_report()?;
        if !report.torsion_free {
            return Err(Error::InvalidGroup(format!("flat group has torsion in coset {}", report.witness.unwrap_or(0))));
        }
        let flat_volume = group.lattice().covolume() / int(group.holonomy_order() as i64);
        if !flat_volume.is_one() {
            return Err(Error::InvalidInput(format!(
                "flat factor must have volume 1 (covolume / holonomy order), got {}",
                rational::format_rational(&flat_volume)
            )));
        }
        if let Some(c) = &collapse {
            if c.group() != &group {
                return Err(Error::InvalidInput("collapse family belongs to a different group".into()));
            }
        }
        let n = closed.dim + group.dim();
        let threshold = closed.scal.scale(&rational::rat(1, n as i64 - 1));
        let mut s = Scenario { closed, group, collapse, direction, cert, threshold, levels: Vec::new() };
        s.levels = s.levels_for(&s.threshold.clone())?;
        Ok(s)
    }

    fn levels_for(&self, rho: &ExactReal) -> Result<Vec<Level>> {
        let spec = self.closed.spectrum(rho, &self.cert)?;
        spec.entries
            .iter()
            .map(|e| {
                let gap = rho - &e.value;
                let scaled = gap.div(&ExactReal::four_pi_sq())?.enclose(&self.cert);
                Ok(Level { value: e.value.clone(), multiplicity: e.multiplicity, gap, gap_lo: scaled.lower(), gap_hi: scaled.upper() })
            })
            .collect()
    }

    pub fn threshold(&self) -> &ExactReal {
        &self.threshold
    }

    pub fn closed(&self) -> &ClosedFactor {
        &self.closed
    }

    pub fn group(&self) -> &CrystalGroup {
        &self.group
    }

    pub fn collapse(&self) -> Option<&CollapseFamily> {
        self.collapse.as_ref()
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn certifier(&self) -> &Certifier {
        &self.cert
    }

    pub fn total_dim(&self) -> usize {
        self.closed.dim + self.group.dim()
    }

    /// Closed-factor eigenvalues below the threshold with multiplicities.
    pub fn closed_levels(&self) -> Vec<(ExactReal, u64)> {
        self.levels.iter().map(|l| (l.value.clone(), l.multiplicity)).collect()
    }

    fn exponents(&self) -> (i32, i32) {
        match &self.collapse {
            Some(c) => {
                let (e, k) = c.exponents();
                (-e, k)
            }
            None => (0, 0),
        }
    }

    fn projection(&self) -> RatMatrix {
        match &self.collapse {
            Some(c) => c.projection().clone(),
            None => RatMatrix::identity(self.group.dim()),
        }
    }

    /// Eigen classes of every dual vector that can fall below `rho` for
    /// some `t` in `[t_lo, t_hi]`.
    fn classes(&self, t_lo: &Rational, t_hi: &Rational, rho: &ExactReal) -> Result<Vec<EigenClass>> {
        let (alpha, beta) = self.exponents();
        let p = self.projection();
        let perp = RatMatrix::identity(self.group.dim()).sub(&p);
        let dual = self.group.lattice().dual();
        let low = p.scale(&rational::pow_i(t_lo, 2 * alpha)).add(&perp.scale(&rational::pow_i(t_hi, -2 * beta)));
        let gram = dual.basis().transpose().mul(&low).mul(dual.basis());
        let radius = rho.div(&ExactReal::four_pi_sq())?.enclose(&self.cert).upper();
        let mut groups: BTreeMap<(Rational, Rational), Vec<RatVector>> = BTreeMap::new();
        if radius.is_positive() {
            for (coords, _) in enumerate_gram(&gram, &radius, DEFAULT_ENUMERATION_LIMIT)? {
                let y = dual.point(&coords);
                let a = linalg::dot(&y, &p.mul_vec(&y));
                let b = linalg::dot(&y, &perp.mul_vec(&y));
                groups.entry((a, b)).or_default().push(y);
            }
        }
        let mut classes = vec![EigenClass { a: Rational::zero(), b: Rational::zero(), weight: 1 }];
        for ((a, b), ys) in groups {
            let label = format!("class a={} b={}", rational::format_rational(&a), rational::format_rational(&b));
            let weight = invariant_dimension(&self.group, &ys, &label)?;
            if weight > 0 {
                classes.push(EigenClass { a, b, weight });
            }
        }
        Ok(classes)
    }

    fn model(&self, t_lo: &Rational, t_hi: &Rational) -> Result<IndexModel<'_>> {
        let classes = self.classes(t_lo, t_hi, &self.threshold)?;
        let (alpha, beta) = self.exponents();
        Ok(IndexModel { scenario: self, classes, levels: self.levels.clone(), alpha, beta })
    }

    fn model_for_rho(&self, t_lo: &Rational, t_hi: &Rational, rho: &ExactReal) -> Result<IndexModel<'_>> {
        let classes = self.classes(t_lo, t_hi, rho)?;
        let (alpha, beta) = self.exponents();
        let levels = self.levels_for(rho)?;
        Ok(IndexModel { scenario: self, classes, levels, alpha, beta })
    }
}

/// Dual vectors sharing `(‖Py‖², ‖P⊥y‖²)`; `weight` is the quotient multiplicity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EigenClass {
    #[serde(with = "rat_string")]
    pub a: Rational,
    #[serde(with = "rat_string")]
    pub b: Rational,
    pub weight: u64,
}

mod rat_string {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&rational::format_rational(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        rational::parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

/// A parameter value: rational, or an exact algebraic monomial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TValue {
    Rational(Rational),
    Exact(ExactReal),
}

struct IndexModel<'a> {
    scenario: &'a Scenario,
    classes: Vec<EigenClass>,
    levels: Vec<Level>,
    alpha: i32,
    beta: i32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EqualityPair {
    pub closed_eigenvalue: String,
    pub flat_eigenvalue: String,
    pub multiplicity: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexValue {
    pub index: u64,
    /// Pairs with `λ_{j₁} + λ_{j₂} = ρ` exactly; excluded from `index`.
    pub equalities: Vec<EqualityPair>,
}

impl IndexModel<'_> {
    fn cert(&self) -> &Certifier {
        &self.scenario.cert
    }

    fn q_rational(&self, c: &EigenClass, t: &Rational) -> Rational {
        let mut q = Rational::zero();
        if !c.a.is_zero() {
            q += &c.a * rational::pow_i(t, 2 * self.alpha);
        }
        if !c.b.is_zero() {
            q += &c.b * rational::pow_i(t, -2 * self.beta);
        }
        q
    }

    fn q_exact(&self, c: &EigenClass, t: &ExactReal) -> Result<ExactReal> {
        let mut q = ExactReal::zero();
        if !c.a.is_zero() {
            q = &q + &t.powi(2 * self.alpha)?.scale(&c.a);
        }
        if !c.b.is_zero() {
            q = &q + &t.powi(-2 * self.beta)?.scale(&c.b);
        }
        Ok(q)
    }

    /// Sign of `4π² q_t - (ρ - λ)`.
    fn cmp_at(&self, c: &EigenClass, l: &Level, t: &TValue) -> Result<Ordering> {
        match t {
            TValue::Rational(t) => {
                let q = self.q_rational(c, t);
                if q < l.gap_lo {
                    Ok(Ordering::Less)
                } else if q > l.gap_hi {
                    Ok(Ordering::Greater)
                } else {
                    (&ExactReal::four_pi_sq().scale(&q) - &l.gap).sign(self.cert())
                }
            }
            TValue::Exact(t) => (&(&ExactReal::four_pi_sq() * &self.q_exact(c, t)?) - &l.gap).sign(self.cert()),
        }
    }

    fn index(&self, t: &TValue) -> Result<IndexValue> {
        let mut index = 0u64;
        let mut equalities = Vec::new();
        for l in &self.levels {
            for c in &self.classes {
                match self.cmp_at(c, l, t)? {
                    Ordering::Less => index += l.multiplicity * c.weight,
                    Ordering::Equal => {
                        let flat = match t {
                            TValue::Rational(tq) => ExactReal::four_pi_sq().scale(&self.q_rational(c, tq)),
                            TValue::Exact(tx) => &ExactReal::four_pi_sq() * &self.q_exact(c, tx)?,
                        };
                        equalities.push(EqualityPair {
                            closed_eigenvalue: l.value.to_string(),
                            flat_eigenvalue: flat.to_string(),
                            multiplicity: l.multiplicity * c.weight,
                        })
                    }
                    Ordering::Greater => {}
                }
            }
        }
        Ok(IndexValue { index, equalities })
    }

    /// Flat eigenvalues (with multiplicity) below `ρ - λ` for the given level.
    fn flat_count_below(&self, l: &Level, t: &Rational) -> Result<u64> {
        let mut n = 0;
        for c in &self.classes {
            if self.cmp_at(c, l, &TValue::Rational(t.clone()))? == Ordering::Less {
                n += c.weight;
            }
        }
        Ok(n)
    }
}

fn enclose(x: &ExactReal, cert: &Certifier) -> (Rational, Rational) {
    let i = x.enclose(cert);
    (i.lower(), i.upper())
}

fn positive(t: &Rational) -> Result<()> {
    if t.is_positive() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("parameter t must be positive, got {}", rational::format_rational(t))))
    }
}

/// `i_t`: pairs `(j₁, j₂)` with `λ_{j₁}(M) + λ_{j₂}(F, h_t) < scal/(n-1)`,
/// counted with multiplicity and including `(0, 0)`.
pub fn index_at(s: &Scenario, t: &Rational) -> Result<IndexValue> {
    positive(t)?;
    s.model(t, t)?.index(&TValue::Rational(t.clone()))
}

/// [`index_at`] at an exact algebraic parameter.
pub fn index_at_exact(s: &Scenario, t: &ExactReal) -> Result<IndexValue> {
    let (lo, hi) = enclose(t, &s.cert);
    positive(&lo)?;
    s.model(&lo, &hi)?.index(&TValue::Exact(t.clone()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionA {
    pub holds: bool,
    pub witnesses: Vec<EqualityPair>,
}

/// Whether no `ρ - λ_j(M)` (for `λ_j < ρ`) is a flat eigenvalue at `t`.
pub fn condition_a_check(s: &Scenario, t: &TValue) -> Result<ConditionA> {
    let v = match t {
        TValue::Rational(q) => index_at(s, q)?,
        TValue::Exact(x) => index_at_exact(s, x)?,
    };
    Ok(ConditionA { holds: v.equalities.is_empty(), witnesses: v.equalities })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossingSource {
    pub closed_eigenvalue: String,
    pub class: EigenClass,
    pub multiplicity: u64,
}

/// A point of `D_ρ`, isolated in `[t_lo, t_hi]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Crossing {
    pub t_lo: Rational,
    pub t_hi: Rational,
    pub t_exact: Option<ExactReal>,
    pub sources: Vec<CrossingSource>,
}

impl Crossing {
    fn overlaps(&self, lo: &Rational, hi: &Rational) -> bool {
        &self.t_lo <= hi && &self.t_hi >= lo
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrossingSet {
    pub crossings: Vec<Crossing>,
    /// Levels hit for every `t` (constant families only).
    pub persistent: Vec<CrossingSource>,
}

enum Endpoint {
    Rat(Rational),
    Exact(ExactReal),
}

impl IndexModel<'_> {
    fn sign_at_endpoint(&self, c: &EigenClass, l: &Level, e: &Endpoint) -> Result<Ordering> {
        match e {
            Endpoint::Rat(q) => self.cmp_at(c, l, &TValue::Rational(q.clone())),
            Endpoint::Exact(x) => match x.as_rational() {
                Some(q) => self.cmp_at(c, l, &TValue::Rational(q)),
                None => self.cmp_at(c, l, &TValue::Exact(x.clone())),
            },
        }
    }

    fn endpoint_bounds(&self, e: &Endpoint) -> (Rational, Rational) {
        match e {
            Endpoint::Rat(q) => (q.clone(), q.clone()),
            Endpoint::Exact(x) => enclose(x, self.cert()),
        }
    }

    /// Root of a monotone branch on `[lo, hi]`, by exact-sign bisection.
    fn isolate(
        &self,
        c: &EigenClass,
        l: &Level,
        lo: Endpoint,
        hi: Endpoint,
        tol: &Rational,
    ) -> Result<Option<(Rational, Rational, Option<ExactReal>)>> {
        let s_lo = self.sign_at_endpoint(c, l, &lo)?;
        let s_hi = self.sign_at_endpoint(c, l, &hi)?;
        let exact_of = |e: &Endpoint| match e {
            Endpoint::Rat(q) => ExactReal::from_rational(q.clone()),
            Endpoint::Exact(x) => x.clone(),
        };
        if s_lo == Ordering::Equal {
            let (a, b) = self.endpoint_bounds(&lo);
            return Ok(Some((a, b, Some(exact_of(&lo)))));
        }
        if s_hi == Ordering::Equal {
            let (a, b) = self.endpoint_bounds(&hi);
            return Ok(Some((a, b, Some(exact_of(&hi)))));
        }
        if s_lo == s_hi {
            return Ok(None);
        }
        let mut a = self.endpoint_bounds(&lo).1;
        let mut b = self.endpoint_bounds(&hi).0;
        if a >= b || self.cmp_at(c, l, &TValue::Rational(a.clone()))? != s_lo || self.cmp_at(c, l, &TValue::Rational(b.clone()))? != s_hi {
            // The root sits within an endpoint enclosure.
            let (x, _) = self.endpoint_bounds(&lo);
            let (_, y) = self.endpoint_bounds(&hi);
            return Ok(Some((x, y, None)));
        }
        let half = rational::rat(1, 2);
        while &b - &a > *tol {
            let m = (&a + &b) * &half;
            match self.cmp_at(c, l, &TValue::Rational(m.clone()))? {
                Ordering::Equal => return Ok(Some((m.clone(), m.clone(), Some(ExactReal::from_rational(m))))),
                o if o == s_lo => a = m,
                _ => b = m,
            }
        }
        Ok(Some((a, b, None)))
    }

    /// Solutions of `4π² q_t = ρ - λ` for one class and level in `[t_min, t_max]`.
    fn solve(&self, c: &EigenClass, l: &Level, t_min: &Rational, t_max: &Rational, tol: &Rational) -> Result<Vec<(Rational, Rational, Option<ExactReal>)>> {
        let cert = self.cert();
        let (alpha, beta) = (self.alpha as i64, self.beta as i64);
        let u = l.gap.div(&ExactReal::four_pi_sq())?;
        let in_range = |x: &ExactReal| -> Result<bool> {
            Ok(x.cmp_with(&ExactReal::from_rational(t_min.clone()), cert)? != Ordering::Less
                && x.cmp_with(&ExactReal::from_rational(t_max.clone()), cert)? != Ordering::Greater)
        };
        let exact_root = |x: ExactReal| -> Result<Vec<(Rational, Rational, Option<ExactReal>)>> {
            if !in_range(&x)? {
                return Ok(Vec::new());
            }
            let (a, b) = match x.as_rational() {
                Some(q) => (q.clone(), q),
                None => enclose(&x, cert),
            };
            Ok(vec![(a, b, Some(x))])
        };
        let full = || (Endpoint::Rat(t_min.clone()), Endpoint::Rat(t_max.clone()));
        let a_on = !c.a.is_zero() && alpha > 0;
        let b_on = !c.b.is_zero() && beta > 0;
        match (a_on, b_on) {
            (false, false) => Ok(Vec::new()),
            (true, false) => {
                let ratio = u.scale(&c.a.recip());
                if ratio.as_monomial().is_some() {
                    exact_root(ratio.pow_ratio(Exponent::new(1, 2 * alpha))?)
                } else {
                    let (lo, hi) = full();
                    Ok(self.isolate(c, l, lo, hi, tol)?.into_iter().collect())
                }
            }
            (false, true) => {
                let ratio = u.scale(&c.b.recip());
                if ratio.as_monomial().is_some() {
                    exact_root(ratio.pow_ratio(Exponent::new(-1, 2 * beta))?)
                } else {
                    let (lo, hi) = full();
                    Ok(self.isolate(c, l, lo, hi, tol)?.into_iter().collect())
                }
            }
            (true, true) => {
                // Convex in t with its minimum at t_m.
                let base = Rational::from_integer(BigInt::from(beta)) * &c.b / (Rational::from_integer(BigInt::from(alpha)) * &c.a);
                let t_m = ExactReal::from_rational(base).pow_ratio(Exponent::new(1, 2 * alpha + 2 * beta))?;
                let mut out = Vec::new();
                let below_min = t_m.cmp_with(&ExactReal::from_rational(t_min.clone()), cert)? != Ordering::Greater;
                let above_max = t_m.cmp_with(&ExactReal::from_rational(t_max.clone()), cert)? != Ordering::Less;
                if below_min || above_max {
                    let (lo, hi) = full();
                    out.extend(self.isolate(c, l, lo, hi, tol)?);
                } else {
                    out.extend(self.isolate(c, l, Endpoint::Rat(t_min.clone()), Endpoint::Exact(t_m.clone()), tol)?);
                    out.extend(self.isolate(c, l, Endpoint::Exact(t_m.clone()), Endpoint::Rat(t_max.clone()), tol)?);
                }
                out.dedup();
                Ok(out)
            }
        }
    }

    fn crossings(&self, t_min: &Rational, t_max: &Rational) -> Result<CrossingSet> {
        let tol = (t_max - t_min) / Rational::from_integer(BigInt::one() << 50u32);
        let mut raw: Vec<Crossing> = Vec::new();
        let mut persistent = Vec::new();
        for l in &self.levels {
            for c in &self.classes {
                let source = CrossingSource { closed_eigenvalue: l.value.to_string(), class: c.clone(), multiplicity: l.multiplicity * c.weight };
                if self.alpha == 0 && self.beta == 0 {
                    if self.cmp_at(c, l, &TValue::Rational(t_min.clone()))? == Ordering::Equal {
                        persistent.push(source);
                    }
                    continue;
                }
                for (lo, hi, exact) in self.solve(c, l, t_min, t_max, &tol)? {
                    raw.push(Crossing { t_lo: lo, t_hi: hi, t_exact: exact, sources: vec![source.clone()] });
                }
            }
        }
        raw.sort_by(|x, y| x.t_lo.cmp(&y.t_lo).then_with(|| x.t_hi.cmp(&y.t_hi)));
        let mut merged: Vec<Crossing> = Vec::new();
        for x in raw {
            if let Some(last) = merged.last_mut() {
                let same = match (&last.t_exact, &x.t_exact) {
                    (Some(p), Some(q)) => p == q,
                    _ => false,
                };
                if same || last.overlaps(&x.t_lo, &x.t_hi) {
                    if last.t_exact.is_none() {
                        last.t_exact = x.t_exact.clone();
                    }
                    if x.t_lo < last.t_lo {
                        last.t_lo = x.t_lo.clone();
                    }
                    if x.t_hi > last.t_hi {
                        last.t_hi = x.t_hi.clone();
                    }
                    last.sources.extend(x.sources);
                    continue;
                }
            }
            merged.push(x);
        }
        Ok(CrossingSet { crossings: merged, persistent })
    }
}

fn check_range(t_min: &Rational, t_max: &Rational) -> Result<()> {
    positive(t_min)?;
    if t_min >= t_max {
        return Err(Error::InvalidInput("need t_min < t_max".into()));
    }
    Ok(())
}

/// `D_ρ ∩ [t_min, t_max]`: parameters where `ρ` is an eigenvalue of `g ⊕ h_t`.
pub fn d_rho_crossings(s: &Scenario, rho: &ExactReal, t_min: &Rational, t_max: &Rational) -> Result<CrossingSet> {
    check_range(t_min, t_max)?;
    s.model_for_rho(t_min, t_max, rho)?.crossings(t_min, t_max)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScanOptions {
    pub exec: Exec,
    /// Number of grid doublings allowed when a cell holds two crossings.
    pub max_refinements: u32,
    /// Instants are isolated to width `(t_max - t_min) / 2^width_bits`.
    pub width_bits: u32,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { exec: Exec::default(), max_refinements: 8, width_bits: 40 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instant {
    pub t_lo: Rational,
    pub t_hi: Rational,
    pub t_exact: Option<ExactReal>,
    /// `i` just past the instant toward the collapse end minus `i` just before.
    pub jump: i64,
    /// Condition (a) holds on the deleted neighbourhood of one interval width.
    pub condition_a: bool,
    pub index_before: u64,
    pub index_after: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScanReport {
    pub t_min: Rational,
    pub t_max: Rational,
    pub steps: usize,
    pub direction: Direction,
    pub threshold: ExactReal,
    pub grid: Vec<(Rational, IndexValue)>,
    pub instants: Vec<Instant>,
    pub accumulation: TailSummary,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TailSummary {
    /// `i_t` never decreases when moving toward the collapse end.
    pub monotone_toward_collapse: bool,
    pub index_far: u64,
    pub index_collapse_end: u64,
    pub instants: usize,
}

/// Rational to `f64`, rounded toward `-∞` or `+∞`.
fn round_f64(q: &Rational, up: bool) -> f64 {
    let x = rational::to_f64(q);
    let back = Rational::from_float(x);
    match back {
        Some(b) if up && b < *q => x.next_up(),
        Some(b) if !up && b > *q => x.next_down(),
        _ => x,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstantFile {
    pub t_lo: f64,
    pub t_hi: f64,
    pub t_lo_exact: String,
    pub t_hi_exact: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub t_exact: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub t_exact_value: Option<f64>,
    pub jump: i64,
    pub condition_a: bool,
    pub index_before: u64,
    pub index_after: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReportFile {
    pub t_min: String,
    pub t_max: String,
    pub steps: usize,
    pub direction: Direction,
    pub threshold: f64,
    pub threshold_exact: String,
    pub grid: Vec<(f64, u64)>,
    pub equality_points: Vec<(String, Vec<EqualityPair>)>,
    pub instants: Vec<InstantFile>,
    pub accumulation: TailSummary,
}

impl ScanReport {
    pub fn to_file(&self) -> ScanReportFile {
        ScanReportFile {
            t_min: rational::format_rational(&self.t_min),
            t_max: rational::format_rational(&self.t_max),
            steps: self.steps,
            direction: self.direction,
            threshold: self.threshold.to_f64(),
            threshold_exact: self.threshold.to_string(),
            grid: self.grid.iter().map(|(t, v)| (rational::to_f64(t), v.index)).collect(),
            equality_points: self
                .grid
                .iter()
                .filter(|(_, v)| !v.equalities.is_empty())
                .map(|(t, v)| (rational::format_rational(t), v.equalities.clone()))
                .collect(),
            instants: self
                .instants
                .iter()
                .map(|i| InstantFile {
                    t_lo: round_f64(&i.t_lo, false),
                    t_hi: round_f64(&i.t_hi, true),
                    t_lo_exact: rational::format_rational(&i.t_lo),
                    t_hi_exact: rational::format_rational(&i.t_hi),
                    t_exact: i.t_exact.as_ref().map(|x| x.to_string()),
                    t_exact_value: i.t_exact.as_ref().map(|x| x.to_f64()),
                    jump: i.jump,
                    condition_a: i.condition_a,
                    index_before: i.index_before,
                    index_after: i.index_after,
                })
                .collect(),
            accumulation: self.accumulation.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("serializable")
    }

    pub fn grid_csv(&self) -> String {
        let mut out = String::from("t,t_exact,index,equalities\n");
        for (t, v) in &self.grid {
            let _ = writeln!(out, "{},{},{},{}", rational::to_f64(t), rational::format_rational(t), v.index, v.equalities.len());
        }
        out
    }

    pub fn instants_csv(&self) -> String {
        let mut out = String::from("t_lo,t_hi,t_exact,jump,condition_a\n");
        for i in &self.instants {
            let exact = i.t_exact.as_ref().map(|x| x.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{},{}", round_f64(&i.t_lo, false), round_f64(&i.t_hi, true), exact, i.jump, i.condition_a);
        }
        out
    }
}

fn grid_points(t_min: &Rational, t_max: &Rational, steps: usize) -> Vec<Rational> {
    let h = (t_max - t_min) / int(steps as i64);
    (0..=steps).map(|i| t_min + &h * int(i as i64)).collect()
}

/// Largest number of crossings meeting any closed grid cell.
fn max_crossings_per_cell(crossings: &[Crossing], grid: &[Rational]) -> usize {
    grid.windows(2).map(|w| crossings.iter().filter(|c| c.overlaps(&w[0], &w[1])).count()).max().unwrap_or(0)
}

/// Evaluates `i_t` on a grid, isolates every jump by bisection and
/// certifies it against the crossing set `D_ρ`.
pub fn scan(s: &Scenario, t_min: &Rational, t_max: &Rational, steps: usize, opts: &ScanOptions) -> Result<ScanReport> {
    check_range(t_min, t_max)?;
    if steps < 2 {
        return Err(Error::InvalidInput("steps must be at least 2".into()));
    }
    let model = s.model(t_min, t_max)?;
    let set = model.crossings(t_min, t_max)?;
    let mut steps_used = steps;
    let mut grid = grid_points(t_min, t_max, steps_used);
    let mut refinements = 0;
    while max_crossings_per_cell(&set.crossings, &grid) >= 2 {
        if refinements == opts.max_refinements {
            return Err(Error::GridTooCoarse(format!(
                "a cell of the {steps_used}-step grid still holds two crossings after {refinements} refinements; rerun with more steps"
            )));
        }
        refinements += 1;
        steps_used *= 2;
        grid = grid_points(t_min, t_max, steps_used);
    }
    let values = parallel::try_map(opts.exec, &grid, |t| model.index(&TValue::Rational(t.clone())))?;
    let width = (t_max - t_min) / Rational::from_integer(BigInt::one() << opts.width_bits);
    let changed: Vec<usize> = (0..steps_used).filter(|&i| values[i].index != values[i + 1].index).collect();
    let isolated = parallel::try_map(opts.exec, &changed, |&i| -> Result<(Rational, Rational)> {
        let (mut lo, mut hi) = (grid[i].clone(), grid[i + 1].clone());
        let i_lo = values[i].index;
        let half = rational::rat(1, 2);
        while &hi - &lo > width {
            let m = (&lo + &hi) * &half;
            if model.index(&TValue::Rational(m.clone()))?.index == i_lo {
                lo = m;
            } else {
                hi = m;
            }
        }
        Ok((lo, hi))
    })?;
    // Attach each isolated change to its crossing; changes at a shared grid
    // point can come from both neighbouring cells.
    let mut by_crossing: BTreeMap<usize, (Rational, Rational)> = BTreeMap::new();
    for (lo, hi) in isolated {
        let Some(k) = set.crossings.iter().position(|c| c.overlaps(&lo, &hi)) else {
            return Err(Error::GridTooCoarse(format!(
                "index changes in [{}, {}] without a certified crossing",
                rational::format_rational(&lo),
                rational::format_rational(&hi)
            )));
        };
        let entry = by_crossing.entry(k).or_insert_with(|| (lo.clone(), hi.clone()));
        if lo < entry.0 {
            entry.0 = lo;
        }
        if hi > entry.1 {
            entry.1 = hi;
        }
    }
    let keys: Vec<(usize, (Rational, Rational))> = by_crossing.into_iter().collect();
    let mut instants = parallel::try_map(opts.exec, &keys, |(k, (lo, hi))| -> Result<Option<Instant>> {
        let c = &set.crossings[*k];
        // Narrow to the crossing's own enclosure when it is tighter.
        let lo = if c.t_lo > *lo && c.t_lo <= *hi { c.t_lo.clone() } else { lo.clone() };
        let hi = if c.t_hi < *hi && c.t_hi >= lo { c.t_hi.clone() } else { hi.clone() };
        let w = if hi > lo { &hi - &lo } else { width.clone() };
        let left = &lo - &w;
        let right = &hi + &w;
        let sample_left = if left.is_positive() { left.clone() } else { &lo * rational::rat(1, 2) };
        let v_left = model.index(&TValue::Rational(sample_left.clone()))?;
        let v_right = model.index(&TValue::Rational(right.clone()))?;
        let lonely = set.crossings.iter().filter(|x| x.overlaps(&sample_left, &right)).count() == 1;
        let (before, after) = match s.direction {
            Direction::Shrink => (v_right.index, v_left.index),
            Direction::Expand => (v_left.index, v_right.index),
        };
        let jump = after as i64 - before as i64;
        if jump == 0 {
            return Ok(None);
        }
        Ok(Some(Instant {
            t_lo: lo,
            t_hi: hi,
            t_exact: c.t_exact.clone(),
            jump,
            condition_a: lonely && v_left.equalities.is_empty() && v_right.equalities.is_empty(),
            index_before: before,
            index_after: after,
        }))
    })?
    .into_iter()
    .flatten()
    .collect::<Vec<_>>();
    match s.direction {
        Direction::Shrink => instants.sort_by(|a, b| b.t_lo.cmp(&a.t_lo)),
        Direction::Expand => instants.sort_by(|a, b| a.t_lo.cmp(&b.t_lo)),
    }
    let indices: Vec<u64> = values.iter().map(|v| v.index).collect();
    let toward: Vec<u64> = match s.direction {
        Direction::Shrink => indices.iter().rev().cloned().collect(),
        Direction::Expand => indices.clone(),
    };
    let accumulation = TailSummary {
        monotone_toward_collapse: toward.windows(2).all(|w| w[0] <= w[1]),
        index_far: toward[0],
        index_collapse_end: *toward.last().unwrap(),
        instants: instants.len(),
    };
    Ok(ScanReport {
        t_min: t_min.clone(),
        t_max: t_max.clone(),
        steps: steps_used,
        direction: s.direction,
        threshold: s.threshold.clone(),
        grid: grid.into_iter().zip(values).collect(),
        instants,
        accumulation,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccumulationInstant {
    pub k: usize,
    pub t_lo: f64,
    pub t_hi: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub t_exact: Option<String>,
    /// `i` on the far side of `t_k`.
    pub index_before: u64,
    /// `i` on the collapse side of `t_k`.
    pub index_after: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccumulationEvidence {
    pub instants: Vec<AccumulationInstant>,
    /// `index_after` strictly increases along the sequence.
    pub strictly_increasing: bool,
    /// Index of the largest closed eigenvalue below the threshold.
    pub n0: usize,
    pub lower_bound_points: usize,
    /// Flat eigenvalues below `ρ - λ_{N₀}` never exceed `i_t` on the grids.
    pub lower_bound_ok: bool,
    pub windows: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AccumulationOptions {
    pub t_start: Rational,
    pub max_windows: usize,
    pub steps_per_window: usize,
    pub scan: ScanOptions,
}

impl Default for AccumulationOptions {
    fn default() -> Self {
        AccumulationOptions { t_start: int(1), max_windows: 60, steps_per_window: 32, scan: ScanOptions::default() }
    }
}

/// The first `k_max` instants toward the collapse end, scanned over
/// windows `[t/2, t]` (or `[t, 2t]` when expanding).
pub fn accumulation_diagnostic(s: &Scenario, k_max: usize, opts: &AccumulationOptions) -> Result<AccumulationEvidence> {
    positive(&opts.t_start)?;
    let n0 = s.levels.len().saturating_sub(1);
    let mut evidence = AccumulationEvidence {
        instants: Vec::new(),
        strictly_increasing: true,
        n0,
        lower_bound_points: 0,
        lower_bound_ok: true,
        windows: 0,
    };
    if s.collapse.is_none() || k_max == 0 {
        return Ok(evidence);
    }
    let top = s.levels[n0].clone();
    let mut found: Vec<Instant> = Vec::new();
    let mut edge = opts.t_start.clone();
    while found.len() < k_max {
        if evidence.windows == opts.max_windows {
            return Err(Error::BudgetExhausted(format!(
                "found {} of {k_max} instants within {} windows",
                found.len(),
                opts.max_windows
            )));
        }
        let (lo, hi) = match s.direction {
            Direction::Shrink => (&edge * rational::rat(1, 2), edge.clone()),
            Direction::Expand => (edge.clone(), &edge * int(2)),
        };
        let report = scan(s, &lo, &hi, opts.steps_per_window, &opts.scan)?;
        evidence.windows += 1;
        let model = s.model(&lo, &hi)?;
        for (t, v) in &report.grid {
            evidence.lower_bound_points += 1;
            if model.flat_count_below(&top, t)? > v.index {
                evidence.lower_bound_ok = false;
            }
        }
        for inst in report.instants {
            let dup = found.iter().any(|f| match (&f.t_exact, &inst.t_exact) {
                (Some(a), Some(b)) => a == b,
                _ => f.t_lo <= inst.t_hi && f.t_hi >= inst.t_lo,
            });
            if !dup && found.len() < k_max {
                found.push(inst);
            }
        }
        edge = match s.direction {
            Direction::Shrink => lo,
            Direction::Expand => hi,
        };
    }
    evidence.strictly_increasing = found.windows(2).all(|w| w[1].index_after > w[0].index_after);
    evidence.instants = found
        .iter()
        .enumerate()
        .map(|(k, i)| AccumulationInstant {
            k: k + 1,
            t_lo: round_f64(&i.t_lo, false),
            t_hi: round_f64(&i.t_hi, true),
            t_exact: i.t_exact.as_ref().map(|x| x.to_string()),
            index_before: i.index_before,
            index_after: i.index_after,
        })
        .collect();
    Ok(evidence)
}
