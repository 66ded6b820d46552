use std::sync::Arc;

use egalg::grassmann::{Blade, GrassmannElement};
use egalg::scalar::ratio;
use egalg::singular::{
    linear_point_from_lambda, point_to_lambda, Open, RationalBox, Separation, SingularSpace,
    SpacePoint, StarPoint,
};
use egalg::stage::Category;
use egalg::symalg::{is_constant, new_rng, random_expr, random_polynomial, Chart, Constancy};
use num_rational::BigRational;
use num_traits::One;
use rand::Rng;

fn space() -> SingularSpace {
    SingularSpace::new(Chart::new(&["x", "y"]).unwrap())
}

fn vars() -> Vec<Arc<str>> {
    vec!["x".into(), "y".into()]
}

fn rational_point(rng: &mut impl Rng) -> Vec<BigRational> {
    (0..2).map(|_| ratio(rng.gen_range(-40..=40), 20)).collect()
}

#[test]
fn prolongation_matches_constancy() {
    let s = space();
    let mut rng = new_rng(8);
    for i in 0..150 {
        let f = if i % 3 == 0 {
            random_expr(&mut rng, &vars(), 3)
        } else {
            random_polynomial(&mut rng, &vars(), 3, 3)
        };
        match (s.prolong(&f), is_constant(&f, &s.base)) {
            (Ok(p), Ok(c)) => assert_eq!(
                p.prolongs(),
                !matches!(c, Constancy::NotConstant { .. }),
                "{f}"
            ),
            (Err(_), Err(_)) => {}
            (p, c) => panic!("{f}: prolong {p:?} but constancy {c:?}"),
        }
    }
}

#[test]
fn linear_points_are_a_bijection_onto_the_algebra() {
    for n in 1..=8u8 {
        let mut images = Vec::new();
        for mask in 0..(1u32 << n) {
            let b =
                GrassmannElement::from_blade(n, Blade::from_mask(mask as u16), BigRational::one());
            let rho = linear_point_from_lambda(&b);
            assert_eq!(point_to_lambda(&rho), b);
            assert_eq!(rho.apply(&ratio(3, 2)), b.scale(&ratio(3, 2)));
            images.push(rho.apply(&BigRational::one()));
        }
        images.sort_by_key(|x| x.to_string());
        images.dedup();
        assert_eq!(images.len(), 1 << n);
    }
}

#[test]
fn smooth_star_points_need_idempotents() {
    let b1 = GrassmannElement::generator(2, 1).unwrap();
    let one = GrassmannElement::one(2);
    assert!(StarPoint::new(Category::Smooth, &one + &b1).is_err());
    assert!(StarPoint::new(Category::Smooth, one.clone()).is_ok());
    assert!(StarPoint::new(Category::Smooth, GrassmannElement::zero(2)).is_ok());
    assert!(StarPoint::new(Category::Linear, &one + &b1).is_ok());
}

#[test]
fn star_is_in_the_closure_of_every_family() {
    let t = &space().topology;
    let mut rng = new_rng(9);
    for _ in 0..50 {
        let family: Vec<Open> = (0..rng.gen_range(1..5))
            .map(|_| {
                Open::Base(
                    RationalBox::around(&rational_point(&mut rng), &ratio(rng.gen_range(1..10), 7))
                        .unwrap(),
                )
            })
            .collect();
        assert!(t.star_in_closure(&family));
    }
    assert!(!t.star_in_closure(&[]));
}

#[test]
fn star_cannot_be_separated_but_base_points_can() {
    let t = &space().topology;
    let mut rng = new_rng(10);
    for _ in 0..30 {
        let p = rational_point(&mut rng);
        let mut q = rational_point(&mut rng);
        if q == p {
            q[0] += BigRational::one();
        }
        let (sp, sq) = (SpacePoint::base(p.clone()), SpacePoint::base(q.clone()));
        match t.separate(&sp, &sq).unwrap() {
            Separation::Separated { u, v } => {
                assert!(u.contains(&sp) && v.contains(&sq) && !u.intersects(&v));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            t.separate(&sp, &SpacePoint::Star).unwrap(),
            Separation::Inseparable { .. }
        ));
        let nb = t.neighborhoods(&sp).unwrap();
        assert!(nb.basis.iter().all(|u| u.contains(&sp)));
        assert!(nb.basis.iter().any(|u| matches!(u, Open::Base(_))) && !nb.complete);
    }
    assert!(t.separate(&SpacePoint::Star, &SpacePoint::Star).is_err());
}
