use egalg::einstein::catalog::{builtin_catalog, entry_from_json, CatalogEntry};
use egalg::einstein::{
    christoffel, curvature, einstein_check, einstein_residual, EinsteinMode, EinsteinVerdict,
    EnergyMomentum, MetricField,
};
use egalg::scalar::Scalar;
use egalg::stage::base_kind;
use egalg::symalg::{evaluate_f64, Bindings, Expr};
use nalgebra::DMatrix;
use serde_json::json;

/// Non-diagonal Lorentzian metric outside the catalog.
fn skew_metric() -> CatalogEntry {
    entry_from_json(&json!({
        "name": "skew3",
        "coords": ["t", "x", "y"],
        "domain": {"t": ["0", "1"], "x": ["1/2", "3/2"], "y": ["1/2", "3/2"]},
        "g": [
            ["-(2 + x^2)", "x/5", "0"],
            ["x/5", "1 + t^2", "0"],
            ["0", "0", "2 + sin(y)"]
        ],
        "lambda": "0",
        "mode": "i"
    }))
    .unwrap()
}

fn metrics() -> Vec<CatalogEntry> {
    let mut all = builtin_catalog();
    all.push(skew_metric());
    all
}

fn at(b: &Bindings, e: &Expr) -> f64 {
    evaluate_f64(e, b).unwrap()
}

fn numeric(b: &Bindings, m: &[Vec<Expr>]) -> DMatrix<f64> {
    DMatrix::from_fn(m.len(), m.len(), |i, j| at(b, &m[i][j]))
}

fn shifted(g: &MetricField, point: &[Scalar], k: usize, h: f64) -> Bindings {
    let mut p: Vec<Scalar> = point.to_vec();
    p[k] = Scalar::Float(p[k].to_f64() + h);
    g.chart.bindings(&p).unwrap()
}

#[test]
fn christoffel_symbols_are_symmetric() {
    for e in metrics() {
        let (_, gamma) = christoffel(&e.metric).unwrap();
        for (mu, plane) in gamma.iter().enumerate() {
            for nu in 0..plane.len() {
                for sigma in 0..plane.len() {
                    assert_eq!(
                        plane[nu][sigma], plane[sigma][nu],
                        "{} Γ^{mu}_{nu}{sigma}",
                        e.metric.name
                    );
                }
            }
        }
    }
}

#[test]
fn ricci_and_riemann_symmetries_at_probes() {
    for e in metrics() {
        let g = &e.metric;
        let curv = curvature(g).unwrap();
        let m = g.dim();
        for p in g.probe_points().unwrap() {
            let b = g.chart.bindings(&p).unwrap();
            let ric = numeric(&b, &curv.ricci);
            assert!((&ric - ric.transpose()).amax() < 1e-9, "{} Ricci", g.name);
            let gm = numeric(&b, &g.g);
            let idx = |a: usize, bb: usize, c: usize, d: usize| ((a * m + bb) * m + c) * m + d;
            let mut riem = vec![0.0; m * m * m * m];
            for (a, bb, c, d) in
                (0..m * m * m * m).map(|i| (i / (m * m * m), i / (m * m) % m, i / m % m, i % m))
            {
                riem[idx(a, bb, c, d)] = at(&b, &curv.riemann[a][bb][c][d]);
            }
            let r = |a: usize, bb: usize, c: usize, d: usize| riem[idx(a, bb, c, d)];
            // R_{αβγδ} = g_{ακ} R^κ_{βγδ}
            let lower = |a: usize, bb: usize, c: usize, d: usize| {
                (0..m).map(|k| gm[(a, k)] * r(k, bb, c, d)).sum::<f64>()
            };
            for a in 0..m {
                for bb in 0..m {
                    for c in 0..m {
                        for d in 0..m {
                            let scale = 1.0 + r(a, bb, c, d).abs();
                            assert!(
                                (r(a, bb, c, d) + r(a, bb, d, c)).abs() < 1e-9 * scale,
                                "{}",
                                g.name
                            );
                            let cyc = r(a, bb, c, d) + r(a, c, d, bb) + r(a, d, bb, c);
                            assert!(cyc.abs() < 1e-9 * scale, "{} first Bianchi", g.name);
                            let pair = lower(a, bb, c, d) + lower(bb, a, c, d);
                            assert!(
                                pair.abs() < 1e-9 * (1.0 + lower(a, bb, c, d).abs()),
                                "{} pair antisymmetry",
                                g.name
                            );
                        }
                    }
                }
            }
        }
    }
}

/// `∇_μ G^μ_ν` with every derivative taken by central differences of the
/// metric and of the numerically raised Einstein tensor.
#[test]
fn contracted_bianchi_by_finite_differences() {
    const H: f64 = 1e-5;
    for e in metrics() {
        let g = &e.metric;
        let m = g.dim();
        let curv = curvature(g).unwrap();
        let einstein = einstein_residual(
            g,
            &curv,
            &Expr::zero(),
            &EnergyMomentum::zero(m),
            EinsteinMode::Full,
        )
        .unwrap();
        let mixed = |b: &Bindings| numeric(b, &g.g).try_inverse().unwrap() * numeric(b, &einstein);
        let mut worst = 0.0f64;
        for p in g.probe_points().unwrap() {
            let b = g.chart.bindings(&p).unwrap();
            let gm = numeric(&b, &g.g);
            let ginv = gm.clone().try_inverse().unwrap();
            let dg: Vec<DMatrix<f64>> = (0..m)
                .map(|k| {
                    (numeric(&shifted(g, &p, k, H), &g.g) - numeric(&shifted(g, &p, k, -H), &g.g))
                        / (2.0 * H)
                })
                .collect();
            let gamma = |mu: usize, nu: usize, s: usize| {
                0.5 * (0..m)
                    .map(|k| ginv[(mu, k)] * (dg[nu][(k, s)] + dg[s][(k, nu)] - dg[k][(nu, s)]))
                    .sum::<f64>()
            };
            let gmix = mixed(&b);
            let dgmix: Vec<DMatrix<f64>> = (0..m)
                .map(|k| (mixed(&shifted(g, &p, k, H)) - mixed(&shifted(g, &p, k, -H))) / (2.0 * H))
                .collect();
            for nu in 0..m {
                let mut div = 0.0;
                for mu in 0..m {
                    div += dgmix[mu][(mu, nu)];
                    for l in 0..m {
                        div += gamma(mu, mu, l) * gmix[(l, nu)] - gamma(l, mu, nu) * gmix[(mu, l)];
                    }
                }
                worst = worst.max(div.abs());
            }
        }
        assert!(worst < 1e-6, "{}: |∇G| = {worst:e}", g.name);
    }
}

#[test]
fn full_and_vacuum_modes_agree_without_sources() {
    for e in metrics() {
        let g = &e.metric;
        let zero = EnergyMomentum::zero(g.dim());
        let full = einstein_check(g, &Expr::zero(), &zero, EinsteinMode::Full).unwrap();
        let vacuum = einstein_check(g, &Expr::zero(), &zero, EinsteinMode::Vacuum).unwrap();
        if g.dim() == 2 {
            // G vanishes identically in two dimensions, so only the vacuum
            // form sees the curvature of the sphere.
            assert!(matches!(full.verdict, EinsteinVerdict::EinsteinAlgebra));
            assert_eq!(base_kind(&vacuum.verdict), "not_einstein");
        } else {
            assert_eq!(
                base_kind(&full.verdict),
                base_kind(&vacuum.verdict),
                "{}",
                g.name
            );
        }
    }
}
