use num_traits::{ToPrimitive, Zero};
use proptest::prelude::*;

use flatyamabe::bifurcation::{self, Direction, Scenario};
use flatyamabe::crystal::{presets, AffineMap, CollapseFamily, CrystalGroup};
use flatyamabe::exact::rational::{int, rat, Rational};
use flatyamabe::exact::{Certifier, ExactReal};
use flatyamabe::lattice::{self, Lattice};
use flatyamabe::linalg::{self, RatMatrix, RatVector};
use flatyamabe::spectral::{self, ClosedFactor};
use flatyamabe::tower::{self, ProductMetricData};

fn lattice_strategy(max_d: usize) -> impl Strategy<Value = Lattice> {
    (1..=max_d)
        .prop_flat_map(|d| prop::collection::vec((-6i64..=6, 1i64..=4), d * d).prop_map(move |e| (d, e)))
        .prop_filter_map("singular", |(d, e)| {
            let rows = (0..d).map(|i| (0..d).map(|j| rat(e[i * d + j].0, e[i * d + j].1)).collect()).collect();
            Lattice::new(RatMatrix::from_rows(rows).ok()?).ok()
        })
}

fn dyadic() -> impl Strategy<Value = Rational> {
    (1i64..=16, 0u32..=3).prop_map(|(m, s)| rat(m, 1 << s))
}

fn box_vectors(l: &Lattice, r: &Rational) -> Vec<(Vec<i64>, Rational)> {
    let g = l.gram();
    let inv = g.inverse().unwrap();
    let d = l.dim();
    let b: Vec<i64> = (0..d).map(|i| (r * &inv[(i, i)]).to_f64().unwrap().sqrt().floor() as i64 + 1).collect();
    let mut out = Vec::new();
    let mut c: Vec<i64> = b.iter().map(|x| -x).collect();
    'outer: loop {
        if c.iter().any(|&x| x != 0) {
            let q = linalg::dot(&c.iter().map(|&x| int(x)).collect::<Vec<_>>(), &g.mul_int_vec(&c));
            if &q <= r {
                out.push((c.clone(), q));
            }
        }
        for i in 0..d {
            c[i] += 1;
            if c[i] <= b[i] {
                continue 'outer;
            }
            c[i] = -b[i];
        }
        break;
    }
    out.sort_by(|x, y| x.1.cmp(&y.1).then_with(|| x.0.cmp(&y.0)));
    out
}

fn half_turn_group(signs: &[i64], shifts: &[i64]) -> Option<CrystalGroup> {
    let d = signs.len();
    let b = RatMatrix::diagonal(&signs.iter().map(|&s| int(s)).collect::<Vec<_>>());
    if b.is_identity() {
        return None;
    }
    let v: RatVector = shifts.iter().map(|&s| rat(s, 2)).collect();
    CrystalGroup::new(Lattice::integer(d), vec![AffineMap::identity(d), AffineMap::new(b, v).ok()?]).ok()
}

/// `(B, v + λ)` with `B² = I` has finite order iff `Bw + w = 0` for `w = v + λ`.
fn half_turn_torsion_brute(g: &CrystalGroup) -> bool {
    let h = &g.holonomy()[1];
    let d = g.dim();
    let mut c = vec![-2i64; d];
    'outer: loop {
        let w = linalg::add_vec(&h.translation, &g.lattice().point(&c));
        if linalg::add_vec(&h.linear.mul_vec(&w), &w).iter().all(|x| x.is_zero()) {
            return true;
        }
        for x in c.iter_mut() {
            *x += 1;
            if *x <= 2 {
                continue 'outer;
            }
            *x = -2;
        }
        return false;
    }
}

fn flagship() -> Scenario {
    let g = presets::torus(2);
    let fam = CollapseFamily::from_basis(g.clone(), &[vec![int(1), int(0)]]).unwrap();
    Scenario::new(ClosedFactor::unit_volume_sphere(2).unwrap(), g, Some(fam), Direction::Shrink, 128).unwrap()
}

const C: f64 = 0.460_658_865_961_780_6;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dual_of_dual_is_identity(l in lattice_strategy(4)) {
        prop_assert!(l.dual().dual().same_points(&l));
        prop_assert_eq!(l.covolume() * l.dual().covolume(), int(1));
    }

    #[test]
    fn transform_scales_covolume(l in lattice_strategy(3), k in 1i64..=5) {
        let d = l.dim();
        let a = RatMatrix::identity(d).scale(&int(k));
        let t = l.transform(&a).unwrap();
        prop_assert_eq!(t.covolume(), l.covolume() * int(k).pow(d as i32));
    }

    #[test]
    fn enumeration_matches_box(l in lattice_strategy(3), r in 1i64..=40) {
        let r = int(r);
        let g = l.gram();
        let inv = g.inverse().unwrap();
        let size: f64 = (0..l.dim()).map(|i| 2.0 * (&r * &inv[(i, i)]).to_f64().unwrap().sqrt() + 3.0).product();
        prop_assume!(size < 2e5);
        let got = l.enumerate_short_vectors(&r).unwrap().vectors;
        for (c, _) in &got {
            let neg: Vec<i64> = c.iter().map(|x| -x).collect();
            prop_assert!(got.iter().any(|(o, _)| *o == neg));
        }
        prop_assert_eq!(got, box_vectors(&l, &r));
    }

    #[test]
    fn collapse_is_a_unimodular_one_parameter_group(
        d in 2usize..=4,
        raw in prop::collection::vec(-3i64..=3, 4),
        s in dyadic(),
        t in dyadic(),
    ) {
        let v: RatVector = raw[..d].iter().map(|&x| int(x)).collect();
        prop_assume!(v.iter().any(|x| !x.is_zero()));
        let g = presets::torus(d);
        let fam = CollapseFamily::from_basis(g.clone(), &[v]).unwrap();
        let a_s = fam.collapse_map(&s).unwrap();
        let a_t = fam.collapse_map(&t).unwrap();
        prop_assert_eq!(a_s.det(), int(1));
        prop_assert_eq!(a_s.mul(&a_t), fam.collapse_map(&(&s * &t)).unwrap());
        prop_assert!(a_s.is_symmetric());
        prop_assert!(g.cone_membership(&a_s).unwrap());
        let conj = fam.deformed_group(&t).unwrap();
        prop_assert!(conj.validate().valid);
        prop_assert_eq!(conj.lattice().covolume(), int(1));
    }

    #[test]
    fn cone_is_closed_under_inverse_transpose(a in 1i64..=5, b in 1i64..=5, c in -3i64..=3) {
        let g = presets::klein();
        let m = RatMatrix::from_int_rows(&[&[a, c], &[0, b]]);
        let inside = g.cone_membership(&m).unwrap();
        let it = m.transpose().inverse().unwrap();
        prop_assert_eq!(inside, g.cone_membership(&it).unwrap());
        prop_assert_eq!(inside, c == 0);
    }

    #[test]
    fn torsion_verdict_matches_brute_force(
        d in 1usize..=3,
        signs in prop::collection::vec(prop::bool::ANY, 3),
        shifts in prop::collection::vec(0i64..=1, 3),
    ) {
        let signs: Vec<i64> = signs[..d].iter().map(|&b| if b { -1 } else { 1 }).collect();
        let shifts: Vec<i64> = shifts[..d].to_vec();
        let Some(g) = half_turn_group(&signs, &shifts) else { return Ok(()) };
        prop_assume!(g.validate().valid);
        prop_assert_eq!(g.is_torsion_free().unwrap(), !half_turn_torsion_brute(&g));
    }

    #[test]
    fn flagship_index_closed_form(n in 50i64..=2000) {
        let s = flagship();
        let t = rat(n, 1000);
        let tf = n as f64 / 1000.0;
        let want = 1 + 2 * (C / tf).floor() as u64 + 2 * (C * tf).floor() as u64;
        prop_assert_eq!(bifurcation::index_at(&s, &t).unwrap().index, want);
    }

    #[test]
    fn index_is_nonincreasing_toward_t_one(a in 50i64..=1000, b in 50i64..=1000) {
        prop_assume!(a < b);
        let s = flagship();
        let ia = bifurcation::index_at(&s, &rat(a, 1000)).unwrap().index;
        let ib = bifurcation::index_at(&s, &rat(b, 1000)).unwrap().index;
        prop_assert!(ia >= ib);
    }

    #[test]
    fn exact_real_parse_display_round_trip(p in -50i64..=50, q in 1i64..=20, e in -3i64..=3, r in 1i64..=12) {
        let x: ExactReal = format!("{p}/{q}*pi^({e})*{r}^(1/2)").parse().unwrap();
        let back: ExactReal = x.to_string().parse().unwrap();
        prop_assert_eq!(&back, &x);
        let f = (p as f64 / q as f64) * std::f64::consts::PI.powi(e as i32) * (r as f64).sqrt();
        prop_assert!((x.to_f64() - f).abs() <= 1e-12 * f.abs().max(1.0));
        let cert = Certifier::default();
        prop_assert_eq!(x.sign(&cert).unwrap(), p.cmp(&0));
        prop_assert!((&x - &x).is_zero());
    }

    #[test]
    fn spectra_are_sorted_and_bounded(l in lattice_strategy(3), cut in 1i64..=60) {
        let cert = Certifier::default();
        let cutoff = ExactReal::from_int(cut);
        let spec = spectral::torus_spectrum(&l, &cutoff, &cert).unwrap();
        prop_assert_eq!(spec.entries[0].value.clone(), ExactReal::zero());
        for w in spec.entries.windows(2) {
            prop_assert_eq!(w[0].value.cmp_with(&w[1].value, &cert).unwrap(), std::cmp::Ordering::Less);
        }
        for e in &spec.entries {
            prop_assert!(e.multiplicity > 0);
            prop_assert_eq!(e.value.cmp_with(&cutoff, &cert).unwrap(), std::cmp::Ordering::Less);
        }
        prop_assert_eq!(spectral::SpectrumSlice::from_json(&spec.to_json()).unwrap(), spec);
    }

    #[test]
    fn quotient_multiplicity_never_exceeds_torus(cut in 1i64..=400) {
        let cert = Certifier::default();
        let cutoff = ExactReal::from_int(cut);
        for g in [presets::klein(), presets::hantzsche_wendt()] {
            let q = spectral::bieberbach_spectrum(&g, &cutoff, &cert).unwrap();
            let t = spectral::torus_spectrum(g.lattice(), &cutoff, &cert).unwrap();
            for e in &q.entries {
                prop_assert!(e.multiplicity <= t.multiplicity_of(&e.value));
            }
        }
    }

    #[test]
    fn lattice_and_group_json_round_trip(l in lattice_strategy(4)) {
        prop_assert_eq!(Lattice::from_json(&l.to_json()).unwrap(), l.clone());
        let g = CrystalGroup::torus(l);
        prop_assert_eq!(CrystalGroup::from_json(&g.to_json()).unwrap(), g);
    }

    #[test]
    fn sublattice_counts_are_divisor_sums(k in 1u64..=20) {
        let sigma: u64 = (1..=k).filter(|d| k % d == 0).sum();
        prop_assert_eq!(lattice::sublattices_of_index(&Lattice::integer(2), k).unwrap().len() as u64, sigma);
        for s in lattice::sublattices_of_index(&Lattice::integer(2), k).unwrap() {
            prop_assert_eq!(s.covolume(), int(k as i64));
        }
    }

    #[test]
    fn hilbert_einstein_value_grows_with_degree(n in 1u64..=200) {
        let cert = Certifier::default();
        let p = ProductMetricData {
            scal_g: ExactReal::pi().scale(&int(8)),
            vol_g: ExactReal::one(),
            dim_m: 2,
            scal_h: ExactReal::zero(),
            vol_h: ExactReal::one(),
            dim_f: 2,
            lambda: ExactReal::one(),
        };
        let a = tower::hilbert_einstein_value(&p.covering(n), &cert).unwrap();
        let b = tower::hilbert_einstein_value(&p.covering(n + 1), &cert).unwrap();
        prop_assert!((&b - &a).sign(&cert).unwrap().is_gt());
        prop_assert!(((a.to_f64() - 8.0 * std::f64::consts::PI * (n as f64).sqrt()).abs()) < 1e-9);
    }

    #[test]
    fn covering_radius_matches_rectangular_formula(a in 1i64..=8, b in 1i64..=8, c in 1i64..=8) {
        let l = Lattice::diagonal(&[rat(a, b), rat(b, c)]).unwrap();
        let want = 0.5 * ((a as f64 / b as f64).powi(2) + (b as f64 / c as f64).powi(2)).sqrt();
        prop_assert!((l.covering_radius(1e-10).unwrap() - want).abs() < 1e-9);
    }
}
