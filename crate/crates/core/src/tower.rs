//! Hilbert–Einstein values of product metrics `g ⊕ λh`, the round-sphere
//! threshold and finite covering towers that push the value above it.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::rational::int;
use crate::exact::{Certifier, ExactReal, Exponent};
use crate::spectral::sphere_volume;

/// Constant-scalar-curvature data of `(M × Σ, g ⊕ λh)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductMetricData {
    pub scal_g: ExactReal,
    pub vol_g: ExactReal,
    pub dim_m: usize,
    pub scal_h: ExactReal,
    pub vol_h: ExactReal,
    pub dim_f: usize,
    pub lambda: ExactReal,
}

impl ProductMetricData {
    pub fn n(&self) -> usize {
        self.dim_m + self.dim_f
    }

    fn check(&self, cert: &Certifier) -> Result<()> {
        if self.n() < 3 {
            return Err(Error::InvalidInput(format!("total dimension {} is below 3", self.n())));
        }
        for (name, v) in [("scal_g", &self.scal_g), ("vol_g", &self.vol_g), ("vol_h", &self.vol_h), ("lambda", &self.lambda)] {
            if v.sign(cert)? != Ordering::Greater {
                return Err(Error::InvalidInput(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    /// `scal_g + scal_h / λ`.
    pub fn combined_scal(&self) -> Result<ExactReal> {
        Ok(&self.scal_g + &self.scal_h.div(&self.lambda)?)
    }

    /// `vol_g · λ^{dim_f/2} · vol_h`.
    pub fn combined_volume(&self) -> Result<ExactReal> {
        let l = self.lambda.pow_ratio(Exponent::new(self.dim_f as i64, 2))?;
        Ok(&(&self.vol_g * &l) * &self.vol_h)
    }

    /// Data of the pull-back to an `N`-sheeted covering of the second factor.
    pub fn covering(&self, degree: u64) -> ProductMetricData {
        ProductMetricData { vol_h: self.vol_h.scale(&int(degree as i64)), ..self.clone() }
    }
}

/// `max(0, -scal_h / scal_g)`.
pub fn lambda_zero(scal_g: &ExactReal, scal_h: &ExactReal, cert: &Certifier) -> Result<ExactReal> {
    if scal_g.sign(cert)? != Ordering::Greater {
        return Err(Error::InvalidInput("scal_g must be positive".into()));
    }
    let q = (-scal_h).div(scal_g)?;
    Ok(if q.sign(cert)? == Ordering::Greater { q } else { ExactReal::zero() })
}

/// `A = Vol^{2/n} · scal` of the product metric.
pub fn hilbert_einstein_value(p: &ProductMetricData, cert: &Certifier) -> Result<ExactReal> {
    p.check(cert)?;
    let scal = p.combined_scal()?;
    if scal.sign(cert)? != Ordering::Greater {
        return Err(Error::NonPositiveScal);
    }
    let v = p.combined_volume()?.pow_ratio(Exponent::new(2, p.n() as i64))?;
    Ok(&v * &scal)
}

/// `Y(Sⁿ) = n(n-1) Vol(Sⁿ)^{2/n}`.
pub fn sphere_yamabe_threshold(n: usize) -> Result<ExactReal> {
    if n < 3 {
        return Err(Error::InvalidInput("sphere threshold needs n >= 3".into()));
    }
    Ok(sphere_volume(n).pow_ratio(Exponent::new(2, n as i64))?.scale(&int((n * (n - 1)) as i64)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForcingReport {
    pub degree: u64,
    pub threshold: f64,
    pub threshold_exact: String,
    /// `A(N) - Y` at the returned degree (positive).
    pub margin_at_degree: f64,
    /// `A(N-1) - Y` (nonpositive), absent when `N = 1`.
    pub margin_below: Option<f64>,
    /// Set when `A(N-1) = Y` holds exactly.
    pub equality_below: bool,
}

/// Least `N` with `(N·Vol)^{2/n}·scal > Y(Sⁿ)`, decided exactly.
pub fn minimal_forcing_degree(p: &ProductMetricData, cert: &Certifier) -> Result<ForcingReport> {
    let y = sphere_yamabe_threshold(p.n())?;
    let a1 = hilbert_einstein_value(p, cert)?;
    let margin = |n: u64| -> Result<ExactReal> { Ok(&hilbert_einstein_value(&p.covering(n), cert)? - &y) };
    let report = |n: u64, below: Option<ExactReal>| -> Result<ForcingReport> {
        let equality_below = below.as_ref().is_some_and(|b| b.is_zero());
        Ok(ForcingReport {
            degree: n,
            threshold: y.to_f64(),
            threshold_exact: y.to_string(),
            margin_at_degree: margin(n)?.to_f64(),
            margin_below: below.map(|b| b.to_f64()),
            equality_below,
        })
    };
    if (&a1 - &y).sign(cert)? == Ordering::Greater {
        return report(1, None);
    }
    // A(N) = N^{2/n} A(1): start from the floating estimate and settle exactly.
    let estimate = (y.to_f64() / a1.to_f64()).powf(p.n() as f64 / 2.0);
    if !estimate.is_finite() || estimate > 1e15 {
        return Err(Error::BudgetExhausted(format!("forcing degree estimate {estimate} is out of range")));
    }
    let mut n = (estimate.floor() as u64).max(2);
    while n > 2 && margin(n - 1)?.sign(cert)? == Ordering::Greater {
        n -= 1;
    }
    while margin(n)?.sign(cert)? != Ordering::Greater {
        n += 1;
    }
    report(n, Some(margin(n - 1)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TowerLevel {
    pub level: usize,
    pub degree: u64,
    pub cumulative_degree: u64,
    pub volume: f64,
    pub volume_exact: String,
    #[serde(rename = "A_value")]
    pub a_value: f64,
    pub a_value_exact: String,
    pub crossed: bool,
    /// `"A > Y"`, `"A = Y"` or `"A < Y"`, decided exactly.
    pub certificate: String,
    pub distinct_from_previous: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TowerLedger {
    pub threshold: f64,
    pub threshold_exact: String,
    pub levels: Vec<TowerLevel>,
    pub first_crossing: Option<usize>,
}

/// Walks the covering chain `Σ ← Σ₁ ← Σ₂ ← …` with the given degrees.
pub fn tower_simulate(p: &ProductMetricData, degrees: &[u64], cert: &Certifier) -> Result<TowerLedger> {
    if degrees.contains(&0) {
        return Err(Error::InvalidInput("covering degrees must be positive".into()));
    }
    let y = sphere_yamabe_threshold(p.n())?;
    let mut previous = hilbert_einstein_value(p, cert)?;
    let mut cumulative = 1u64;
    let mut levels = Vec::new();
    let mut first_crossing = None;
    for (i, &deg) in degrees.iter().enumerate() {
        cumulative = cumulative
            .checked_mul(deg)
            .ok_or_else(|| Error::BudgetExhausted("cumulative covering degree overflows u64".into()))?;
        let q = p.covering(cumulative);
        let a = hilbert_einstein_value(&q, cert)?;
        let volume = q.combined_volume()?;
        let ord = (&a - &y).sign(cert)?;
        let crossed = ord == Ordering::Greater;
        if crossed && first_crossing.is_none() {
            first_crossing = Some(i + 1);
        }
        let certificate = match ord {
            Ordering::Greater => "A > Y",
            Ordering::Equal => "A = Y",
            Ordering::Less => "A < Y",
        };
        levels.push(TowerLevel {
            level: i + 1,
            degree: deg,
            cumulative_degree: cumulative,
            volume: volume.to_f64(),
            volume_exact: volume.to_string(),
            a_value: a.to_f64(),
            a_value_exact: a.to_string(),
            crossed,
            certificate: certificate.into(),
            distinct_from_previous: a != previous,
        });
        previous = a;
    }
    Ok(TowerLedger { threshold: y.to_f64(), threshold_exact: y.to_string(), levels, first_crossing })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Positive,
    Zero,
    Negative,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SingularScal {
    pub m: i64,
    pub k: i64,
    pub scal: i64,
    pub regime: Regime,
}

/// `(m - 2k - 2)(m - 1)` for `0 <= k <= m - 2`.
pub fn singular_scal(m: i64, k: i64) -> Result<SingularScal> {
    if m < 2 || k < 0 || k > m - 2 {
        return Err(Error::InvalidInput(format!("need 0 <= k <= m - 2, got m = {m}, k = {k}")));
    }
    let regime = match (2 * k).cmp(&(m - 2)) {
        Ordering::Less => Regime::Positive,
        Ordering::Equal => Regime::Zero,
        Ordering::Greater => Regime::Negative,
    };
    Ok(SingularScal { m, k, scal: (m - 2 * k - 2) * (m - 1), regime })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rational::rat;

    fn c() -> Certifier {
        Certifier::default()
    }

    fn s2_t2(lambda: ExactReal) -> ProductMetricData {
        ProductMetricData {
            scal_g: ExactReal::pi().scale(&int(8)),
            vol_g: ExactReal::one(),
            dim_m: 2,
            scal_h: ExactReal::zero(),
            vol_h: ExactReal::one(),
            dim_f: 2,
            lambda,
        }
    }

    #[test]
    fn lambda_zero_examples() {
        let eight_pi = ExactReal::pi().scale(&int(8));
        assert!(lambda_zero(&eight_pi, &ExactReal::zero(), &c()).unwrap().is_zero());
        let l = lambda_zero(&eight_pi, &ExactReal::from_int(-2), &c()).unwrap();
        assert!((l.to_f64() - 1.0 / (4.0 * std::f64::consts::PI)).abs() < 1e-15);
        assert!(lambda_zero(&eight_pi, &ExactReal::from_int(3), &c()).unwrap().is_zero());
    }

    #[test]
    fn hilbert_einstein_examples() {
        let a = hilbert_einstein_value(&s2_t2(ExactReal::one()), &c()).unwrap();
        assert_eq!(a, ExactReal::pi().scale(&int(8)));
        let a2 = hilbert_einstein_value(&s2_t2(ExactReal::one()).covering(2), &c()).unwrap();
        assert!((a2.to_f64() / a.to_f64() - 2f64.sqrt()).abs() < 1e-12);
        let neg = ProductMetricData { scal_h: ExactReal::from_int(-100), ..s2_t2(ExactReal::one()) };
        assert_eq!(hilbert_einstein_value(&neg, &c()), Err(Error::NonPositiveScal));
        let mut last = 0.0;
        for l in 1..6 {
            let v = hilbert_einstein_value(&s2_t2(ExactReal::from_int(l)), &c()).unwrap().to_f64();
            assert!(v > last);
            last = v;
        }
    }

    #[test]
    fn homothety_invariance() {
        for cq in [rat(1, 3), rat(2, 1), rat(9, 4)] {
            let base = ProductMetricData { scal_h: ExactReal::from_int(-1), lambda: ExactReal::from_int(3), ..s2_t2(ExactReal::one()) };
            let c_ = ExactReal::from_rational(cq.clone());
            let scaled = ProductMetricData {
                scal_g: base.scal_g.div(&c_).unwrap(),
                vol_g: &base.vol_g * &c_,
                scal_h: base.scal_h.div(&c_).unwrap(),
                vol_h: &base.vol_h * &c_,
                ..base.clone()
            };
            let a = hilbert_einstein_value(&base, &c()).unwrap().to_f64();
            let b = hilbert_einstein_value(&scaled, &c()).unwrap().to_f64();
            assert!((a - b).abs() < 1e-12 * a, "{a} {b}");
        }
    }

    #[test]
    fn thresholds() {
        let y4 = sphere_yamabe_threshold(4).unwrap();
        assert_eq!(y4.to_string(), "8*pi*6^(1/2)");
        assert!((y4.to_f64() - 61.5624).abs() < 1e-4);
        let y3 = sphere_yamabe_threshold(3).unwrap();
        assert!((y3.to_f64() - 6.0 * (2.0 * std::f64::consts::PI.powi(2)).powf(2.0 / 3.0)).abs() < 1e-10);
        for n in 3..=5 {
            let round = ProductMetricData {
                scal_g: ExactReal::from_int((n * (n - 1)) as i64),
                vol_g: sphere_volume(n),
                dim_m: n,
                scal_h: ExactReal::zero(),
                vol_h: ExactReal::one(),
                dim_f: 0,
                lambda: ExactReal::one(),
            };
            assert_eq!(hilbert_einstein_value(&round, &c()).unwrap(), sphere_yamabe_threshold(n).unwrap());
        }
    }

    #[test]
    fn forcing_degree_is_strict() {
        let r = minimal_forcing_degree(&s2_t2(ExactReal::one()), &c()).unwrap();
        assert_eq!(r.degree, 7);
        assert!(r.equality_below);
        assert_eq!(r.margin_below, Some(0.0));
        let big = ProductMetricData { vol_h: ExactReal::from_int(100), ..s2_t2(ExactReal::one()) };
        assert_eq!(minimal_forcing_degree(&big, &c()).unwrap().degree, 1);
        let half = ProductMetricData { vol_h: ExactReal::ratio(1, 2), ..s2_t2(ExactReal::one()) };
        let nh = minimal_forcing_degree(&half, &c()).unwrap().degree;
        assert!((13..=15).contains(&nh), "{nh}");
    }

    #[test]
    fn tower_ledgers() {
        let p = s2_t2(ExactReal::one());
        let l = tower_simulate(&p, &[2, 2, 2], &c()).unwrap();
        let vols: Vec<f64> = l.levels.iter().map(|x| x.volume).collect();
        assert_eq!(vols, vec![2.0, 4.0, 8.0]);
        assert_eq!(l.first_crossing, Some(3));
        assert!(l.levels.iter().all(|x| x.distinct_from_previous));
        assert_eq!(tower_simulate(&p, &[7], &c()).unwrap().first_crossing, Some(1));
        let six = tower_simulate(&p, &[6], &c()).unwrap();
        assert_eq!((six.first_crossing, six.levels[0].certificate.as_str()), (None, "A = Y"));
        assert!(tower_simulate(&p, &[], &c()).unwrap().levels.is_empty());
    }

    #[test]
    fn singular_examples() {
        assert_eq!(singular_scal(5, 1).unwrap(), SingularScal { m: 5, k: 1, scal: 4, regime: Regime::Positive });
        assert_eq!(singular_scal(4, 1).unwrap().regime, Regime::Zero);
        assert_eq!(singular_scal(4, 1).unwrap().scal, 0);
        assert_eq!(singular_scal(5, 2).unwrap().scal, -4);
        assert_eq!(singular_scal(5, 2).unwrap().regime, Regime::Negative);
        assert!(singular_scal(5, 4).is_err());
        assert!(singular_scal(5, -1).is_err());
    }
}
