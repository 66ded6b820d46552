use super::expr::{Expr, Func};

/// Exact partial derivative with respect to the symbol `var`.
pub fn differentiate(e: &Expr, var: &str) -> Expr {
    if !e.contains_sym(var) {
        return Expr::zero();
    }
    match e {
        Expr::Num(_) => Expr::zero(),
        Expr::Sym(s) => {
            if &**s == var {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Expr::Add(ts) => Expr::add(ts.iter().map(|t| differentiate(t, var)).collect()),
        Expr::Mul(fs) => {
            let mut terms = Vec::new();
            for (i, f) in fs.iter().enumerate() {
                let d = differentiate(f, var);
                if d.is_zero() {
                    continue;
                }
                let mut factors: Vec<Expr> = Vec::with_capacity(fs.len());
                factors.extend(fs[..i].iter().cloned());
                factors.push(d);
                factors.extend(fs[i + 1..].iter().cloned());
                terms.push(Expr::mul(factors));
            }
            Expr::add(terms)
        }
        Expr::Pow(b, k) => Expr::mul(vec![
            Expr::int(*k),
            Expr::pow((**b).clone(), k - 1),
            differentiate(b, var),
        ]),
        Expr::Apply(f, u) => {
            let du = differentiate(u, var);
            let u = (**u).clone();
            let outer = match f {
                Func::Exp => Expr::exp(u),
                Func::Ln => Expr::pow(u, -1),
                Func::Sin => Expr::cos(u),
                Func::Cos => Expr::neg(Expr::sin(u)),
                Func::Tan => Expr::pow(Expr::cos(u), -2),
                Func::Sinh => Expr::apply(Func::Cosh, u),
                Func::Cosh => Expr::apply(Func::Sinh, u),
                Func::Sqrt => Expr::mul(vec![
                    Expr::num(crate::scalar::ratio(1, 2)),
                    Expr::pow(Expr::sqrt(u), -1),
                ]),
            };
            Expr::mul(vec![outer, du])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Expr {
        Expr::sym("x")
    }
    fn y() -> Expr {
        Expr::sym("y")
    }

    #[test]
    fn polynomial_rules() {
        let f = Expr::pow(x(), 2) * y();
        assert_eq!(differentiate(&f, "x"), Expr::int(2) * x() * y());
        assert_eq!(differentiate(&Expr::int(5), "x"), Expr::zero());
        assert_eq!(differentiate(&Expr::sym("c"), "x"), Expr::zero());
    }

    #[test]
    fn chain_rule() {
        let f = Expr::exp(Expr::pow(x(), 2));
        assert_eq!(differentiate(&f, "x"), Expr::int(2) * x() * f.clone());
        let g = Expr::sqrt(x());
        let dg = differentiate(&g, "x");
        assert_eq!(
            dg,
            Expr::num(crate::scalar::ratio(1, 2)) * Expr::pow(Expr::sqrt(x()), -1)
        );
    }

    #[test]
    fn pythagorean_derivative_vanishes() {
        let f = Expr::pow(Expr::sin(x()), 2) + Expr::pow(Expr::cos(x()), 2);
        assert_eq!(f, Expr::one());
        let g = Expr::pow(Expr::sin(x()), 2) * y();
        let dg = differentiate(&g, "x");
        assert_eq!(dg, Expr::int(2) * y() * Expr::sin(x()) * Expr::cos(x()));
    }
}
