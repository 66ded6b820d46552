use egalg::grassmann::{Blade, BodyCase, Grading, GrassmannElement};
use egalg::scalar::ratio;
use egalg::singular::ternary_elements;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

fn element(n: u8, terms: &[(u16, i64, i64)]) -> GrassmannElement {
    let mask_limit = if n == 0 { 1 } else { 1u32 << n };
    let mut x = GrassmannElement::zero(n);
    for &(mask, p, q) in terms {
        let b = Blade::from_mask((mask as u32 % mask_limit) as u16);
        x = &x + &GrassmannElement::from_blade(n, b, ratio(p, q));
    }
    x
}

fn arb_terms() -> impl Strategy<Value = Vec<(u16, i64, i64)>> {
    prop::collection::vec((any::<u16>(), -6i64..=6, 1i64..=4), 0..8)
}

fn arb_element(n: u8) -> impl Strategy<Value = GrassmannElement> {
    arb_terms().prop_map(move |t| element(n, &t))
}

fn homogeneous(n: u8, grade: u32, terms: &[(u16, i64, i64)]) -> GrassmannElement {
    let blades: Vec<u16> = (0..(1u32 << n))
        .map(|m| m as u16)
        .filter(|m| m.count_ones() == grade)
        .collect();
    let mut x = GrassmannElement::zero(n);
    for &(i, p, q) in terms {
        let b = Blade::from_mask(blades[i as usize % blades.len()]);
        x = &x + &GrassmannElement::from_blade(n, b, ratio(p, q));
    }
    x
}

/// Sign and blade of `β_{a_1}…β_{a_k}·β_{b_1}…β_{b_l}` by sorting the
/// concatenated index word with adjacent transpositions.
fn oracle_blade_product(a: u16, b: u16) -> (i64, u16) {
    let mut word: Vec<u32> = (0..16).filter(|i| a >> i & 1 == 1).collect();
    word.extend((0..16).filter(|i| b >> i & 1 == 1));
    let mut sign = 1;
    for i in 0..word.len() {
        for j in 0..word.len() - 1 - i {
            if word[j] > word[j + 1] {
                word.swap(j, j + 1);
                sign = -sign;
            } else if word[j] == word[j + 1] {
                return (0, 0);
            }
        }
    }
    if word.windows(2).any(|w| w[0] == w[1]) {
        return (0, 0);
    }
    (sign, word.iter().fold(0u16, |m, i| m | 1 << i))
}

/// Dense product through a `2^n × 2^n` structure-constant table.
fn table_mul(
    n: u8,
    table: &[Vec<(i64, u16)>],
    x: &GrassmannElement,
    y: &GrassmannElement,
) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); 1 << n];
    for (bx, cx) in x.terms() {
        for (by, cy) in y.terms() {
            let (s, m) = table[bx.mask() as usize][by.mask() as usize];
            if s != 0 {
                out[m as usize] += cx * cy * BigRational::from_integer(s.into());
            }
        }
    }
    out
}

fn dense(n: u8, x: &GrassmannElement) -> Vec<BigRational> {
    (0..(1u32 << n))
        .map(|m| x.coeff(Blade::from_mask(m as u16)))
        .collect()
}

#[test]
fn anticommutation_exhaustive_over_generators() {
    for n in 1..=8u8 {
        for i in 1..=n as usize {
            for k in 1..=n as usize {
                let bi = GrassmannElement::generator(n, i).unwrap();
                let bk = GrassmannElement::generator(n, k).unwrap();
                assert!((&(&bi * &bk) + &(&bk * &bi)).is_zero(), "n={n} i={i} k={k}");
            }
        }
    }
}

#[test]
fn structure_constants_match_brute_force() {
    for n in 1..=4u8 {
        let size = 1usize << n;
        let table: Vec<Vec<(i64, u16)>> = (0..size)
            .map(|a| {
                (0..size)
                    .map(|b| oracle_blade_product(a as u16, b as u16))
                    .collect()
            })
            .collect();
        for a in 0..size {
            for b in 0..size {
                let (s, m) = Blade::from_mask(a as u16).product(Blade::from_mask(b as u16));
                let (os, om) = table[a][b];
                assert_eq!(s as i64, os, "n={n} {a:b}·{b:b}");
                if os != 0 {
                    assert_eq!(m.mask(), om);
                }
            }
        }
        let mut x = GrassmannElement::zero(n);
        let mut y = GrassmannElement::zero(n);
        for m in 0..size {
            x = &x
                + &GrassmannElement::from_blade(
                    n,
                    Blade::from_mask(m as u16),
                    ratio(m as i64 - 3, 2),
                );
            y = &y
                + &GrassmannElement::from_blade(
                    n,
                    Blade::from_mask(m as u16),
                    ratio(2 * m as i64 + 1, 3),
                );
        }
        assert_eq!(dense(n, &(&x * &y)), table_mul(n, &table, &x, &y));
    }
}

#[test]
fn idempotents_have_no_soul() {
    for n in 1..=3u8 {
        for x in ternary_elements(n) {
            let report = x.verify_idempotent_is_body();
            assert_eq!(report.idempotent, &x * &x == x);
            if report.idempotent {
                assert!(x.soul().is_zero());
                assert!(matches!(
                    report.case,
                    Some(BodyCase::Zero) | Some(BodyCase::One)
                ));
                assert!(!report.chain.is_empty());
            }
        }
    }
}

#[test]
fn nilpotency_examples() {
    let b = |i| GrassmannElement::generator(4, i).unwrap();
    assert_eq!(b(1).nilpotency_index().unwrap(), 2);
    let s = &(&b(1) * &b(2)) + &(&b(3) * &b(4));
    assert_eq!(s.nilpotency_index().unwrap(), 3);
    assert!(GrassmannElement::one(4).nilpotency_index().is_err());
}

proptest! {
    #[test]
    fn associativity(x in arb_element(8), y in arb_element(8), z in arb_element(8)) {
        prop_assert_eq!(&(&x * &y) * &z, &x * &(&y * &z));
    }

    #[test]
    fn distributivity(x in arb_element(8), y in arb_element(8), z in arb_element(8)) {
        prop_assert_eq!(&x * &(&y + &z), &(&x * &y) + &(&x * &z));
        prop_assert_eq!(&(&x + &y) * &z, &(&x * &z) + &(&y * &z));
    }

    #[test]
    fn graded_commutativity(j in 0u32..=8, k in 0u32..=8, a in arb_terms(), b in arb_terms()) {
        let x = homogeneous(8, j, &a);
        let y = homogeneous(8, k, &b);
        let sign = if j * k % 2 == 1 { ratio(-1, 1) } else { ratio(1, 1) };
        prop_assert_eq!(&x * &y, (&y * &x).scale(&sign));
    }

    #[test]
    fn body_is_a_homomorphism(x in arb_element(8), y in arb_element(8)) {
        prop_assert_eq!((&x * &y).body(), x.body() * y.body());
        prop_assert_eq!((&x + &y).body(), x.body() + y.body());
        prop_assert_eq!(GrassmannElement::one(8).body(), BigRational::one());
    }

    #[test]
    fn soul_is_nilpotent(n in 1u8..=8, t in arb_terms()) {
        let x = element(n, &t);
        let s = x.soul();
        prop_assert!(s.pow(n as u32 + 1).is_zero());
        if !s.is_zero() {
            prop_assert!(s.nilpotency_index().unwrap() <= n as u32 + 1);
        }
    }

    #[test]
    fn grading_closure(a in arb_terms(), b in arb_terms()) {
        let x = element(8, &a);
        let y = element(8, &b);
        let (xe, xo) = (x.grade_project(Grading::Even), x.grade_project(Grading::Odd));
        let (ye, yo) = (y.grade_project(Grading::Even), y.grade_project(Grading::Odd));
        for (p, expected) in [(&xe * &ye, Grading::Even), (&xo * &yo, Grading::Even), (&xe * &yo, Grading::Odd), (&xo * &ye, Grading::Odd)] {
            prop_assert!(p.is_zero() || p.parity() == Some(expected));
        }
    }

    #[test]
    fn json_round_trip(x in arb_element(6)) {
        prop_assert_eq!(GrassmannElement::from_json_value(&x.to_json_value()).unwrap(), x);
    }
}
