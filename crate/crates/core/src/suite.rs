//! Deterministic verification reports, one per command plus the full suite.

use num_rational::BigRational;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::einstein::catalog::{self, CatalogEntry};
use crate::einstein::{
    curvature, einstein_check_with, induced_energy_momentum_with, EinsteinError, EinsteinMode,
    EinsteinVerdict, EnergyMomentum, PROBE_SEED,
};
use crate::grassmann::{Blade, GrassmannElement};
use crate::scalar::Scalar;
use crate::singular::{
    classify_multiplicative_point, linear_point_from_lambda, point_to_lambda, soul_survival,
    ternary_elements, ternary_idempotents, SingularSpace, SpacePoint, StarPoint,
};
use crate::stage::{
    find_nonpointwise_witness, lift_function, lifted_add, lifted_einstein_check, pointwise_add,
    values_agree, Category, Functional, Stage, StageError, StagePoint, StageTerm, StageValue,
};
use crate::supercurve::{
    lift_curve, pullback_apply, singular_endpoint, Curve, CurveError, CurveGrading, LiftedCurve,
};
use crate::supersheaf::{
    body_quotient, builtin_supermaps, default_supermap_probes, einstein_grassmann_check,
    lift_supermap_check, section_mul, singular_super_structure, SectionProlongation, SuperSection,
};
use crate::symalg::{equivalent, new_rng, parse_expr, random_polynomial, Chart, Expr};

pub const SCHEMA: &str = "1";
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    pub passed: bool,
    pub failures: Vec<String>,
    /// Sorted by `name`.
    pub items: Vec<Value>,
}

impl Report {
    fn new(command: &str, seed: u64, mut items: Vec<Value>, failures: Vec<String>) -> Report {
        items.sort_by(|a, b| a["name"].as_str().cmp(&b["name"].as_str()));
        Report {
            schema: SCHEMA,
            command: command.to_string(),
            seed,
            timestamp: None,
            passed: failures.is_empty(),
            failures,
            items,
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One line per item plus the overall result.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for item in &self.items {
            let name = item["name"].as_str().unwrap_or("?");
            let ok = item
                .get("passed")
                .and_then(Value::as_bool)
                .map(|b| if b { "ok" } else { "FAIL" })
                .unwrap_or("info");
            out.push_str(&format!("{ok:>4}  {name}\n"));
        }
        out.push_str(&format!(
            "{}: {} ({} failure{})\n",
            self.command,
            if self.passed { "passed" } else { "FAILED" },
            self.failures.len(),
            if self.failures.len() == 1 { "" } else { "s" }
        ));
        out
    }
}

/// Collects items and failing item names.
#[derive(Default)]
struct Collector {
    items: Vec<Value>,
    failures: Vec<String>,
}

impl Collector {
    fn check(&mut self, name: &str, passed: bool, mut detail: Value) {
        if !passed {
            self.failures.push(name.to_string());
        }
        if !detail.is_object() {
            detail = json!({ "detail": detail });
        }
        detail["name"] = json!(name);
        detail["passed"] = json!(passed);
        self.items.push(detail);
    }

    fn info(&mut self, name: &str, mut detail: Value) {
        detail["name"] = json!(name);
        self.items.push(detail);
    }

    fn finish(self, command: &str, seed: u64) -> Report {
        let mut failures = self.failures;
        failures.sort();
        Report::new(command, seed, self.items, failures)
    }
}

/// The value, or `{"error": message}`.
fn result_json<T: Serialize, E: std::fmt::Display>(r: Result<T, E>) -> Value {
    match r {
        Ok(v) => serde_json::to_value(v).expect("value serializes"),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn rat(p: i64, q: i64) -> BigRational {
    crate::scalar::ratio(p, q)
}

/// Random element with up to `terms` blades and small rational coefficients.
pub fn random_element(rng: &mut ChaCha8Rng, n: u8, terms: usize) -> GrassmannElement {
    let mut x = GrassmannElement::zero(n);
    for _ in 0..rng.gen_range(0..=terms) {
        let mask = if n == 0 {
            0
        } else {
            rng.gen_range(0..(1u32 << n)) as u16
        };
        let c = rat(rng.gen_range(-4..=4), rng.gen_range(1..=3));
        x = &x + &GrassmannElement::from_blade(n, Blade::from_mask(mask), c);
    }
    x
}

/// Random element supported on blades of a single grade.
pub fn random_homogeneous(
    rng: &mut ChaCha8Rng,
    n: u8,
    grade: u32,
    terms: usize,
) -> GrassmannElement {
    let blades: Vec<u16> = (0..(1u32 << n))
        .map(|m| m as u16)
        .filter(|m| m.count_ones() == grade)
        .collect();
    let mut x = GrassmannElement::zero(n);
    for _ in 0..terms {
        let mask = blades[rng.gen_range(0..blades.len())];
        x = &x
            + &GrassmannElement::from_blade(
                n,
                Blade::from_mask(mask),
                rat(rng.gen_range(-4..=4), 1),
            );
    }
    x
}

fn signed_blades(n: u8) -> Vec<GrassmannElement> {
    let mut out = Vec::new();
    for mask in 0..(1u32 << n) {
        for c in [1, -1] {
            out.push(GrassmannElement::from_blade(
                n,
                Blade::from_mask(mask as u16),
                rat(c, 1),
            ));
        }
    }
    out
}

fn graded_sign(j: u32, k: u32) -> BigRational {
    if (j * k) % 2 == 0 {
        rat(1, 1)
    } else {
        rat(-1, 1)
    }
}

/// Outcome counts of the Grassmann law checks.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LawCounts {
    pub cases: usize,
    pub failures: usize,
}

impl LawCounts {
    fn record(&mut self, ok: bool) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
        }
    }
}

/// Grassmann laws: exhaustive over signed basis blades for `n ≤ exhaustive_n`
/// (which covers every `{-1,0,1}` element by multilinearity), soul
/// nilpotence over all `(n+1)`-tuples of soul blades for the same `n` and
/// over all `{-1,0,1}` elements for `n ≤ 3`, and `random_cases` random
/// sparse elements for `n = 8`.
pub fn grassmann_laws(
    seed: u64,
    exhaustive_n: u8,
    random_cases: usize,
) -> Vec<(&'static str, LawCounts)> {
    let mut anti = LawCounts::default();
    let mut assoc = LawCounts::default();
    let mut graded = LawCounts::default();
    let mut body = LawCounts::default();
    let mut soul = LawCounts::default();
    let mut distrib = LawCounts::default();

    for n in 1..=8u8 {
        for i in 1..=n as usize {
            for k in 1..=n as usize {
                let bi = GrassmannElement::generator(n, i).expect("index in range");
                let bk = GrassmannElement::generator(n, k).expect("index in range");
                let s = &(&bi * &bk) + &(&bk * &bi);
                anti.record(s.is_zero());
            }
        }
    }
    for n in 1..=exhaustive_n {
        let basis = signed_blades(n);
        for a in &basis {
            for b in &basis {
                let ab = a * b;
                let ba = b * a;
                let (ja, jb) = (
                    a.homogeneous_grade().unwrap_or(0),
                    b.homogeneous_grade().unwrap_or(0),
                );
                graded.record(ab == ba.scale(&graded_sign(ja, jb)));
                body.record(
                    ab.body() == a.body() * b.body() && (a + b).body() == a.body() + b.body(),
                );
                for c in &basis {
                    assoc.record(&ab * c == a * &(b * c));
                    distrib.record(a * &(b + c) == &ab + &(a * c));
                }
            }
        }
    }
    for n in 1..=exhaustive_n {
        soul_blade_tuples(n, &mut soul);
    }
    for n in 1..=exhaustive_n.min(3) {
        for x in ternary_elements(n) {
            soul.record(x.soul().pow(n as u32 + 1).is_zero());
        }
    }
    let mut rng = new_rng(seed);
    let n = 8;
    for _ in 0..random_cases {
        let (x, y, z) = (
            random_element(&mut rng, n, 6),
            random_element(&mut rng, n, 6),
            random_element(&mut rng, n, 6),
        );
        assoc.record(&(&x * &y) * &z == &x * &(&y * &z));
        distrib.record(&x * &(&y + &z) == &(&x * &y) + &(&x * &z));
        body.record(
            (&x * &y).body() == x.body() * y.body() && (&x + &y).body() == x.body() + y.body(),
        );
        soul.record(x.soul().pow(n as u32 + 1).is_zero());
        let (j, k) = (rng.gen_range(0..=4u32), rng.gen_range(0..=4u32));
        let (h1, h2) = (
            random_homogeneous(&mut rng, n, j, 3),
            random_homogeneous(&mut rng, n, k, 3),
        );
        graded.record(&h1 * &h2 == (&h2 * &h1).scale(&graded_sign(j, k)));
    }
    vec![
        ("anticommutation", anti),
        ("associativity", assoc),
        ("body_homomorphism", body),
        ("distributivity", distrib),
        ("graded_commutativity", graded),
        ("soul_nilpotence", soul),
    ]
}

/// Every product of `n + 1` non-unit blades of `Λ_n` vanishes. By
/// multilinearity this gives `soul(x)^(n+1) = 0` for every `x ∈ Λ_n`.
fn soul_blade_tuples(n: u8, counts: &mut LawCounts) {
    let souls: Vec<Blade> = (1..(1u32 << n))
        .map(|m| Blade::from_mask(m as u16))
        .collect();
    let k = n as usize + 1;
    let mut idx = vec![0usize; k];
    loop {
        let mut acc = (1i8, Blade::UNIT);
        for &i in &idx {
            let (s, b) = acc.1.product(souls[i]);
            acc = (acc.0 * s, b);
        }
        counts.record(acc.0 == 0);
        let mut pos = 0;
        while pos < k && idx[pos] + 1 == souls.len() {
            idx[pos] = 0;
            pos += 1;
        }
        if pos == k {
            return;
        }
        idx[pos] += 1;
    }
}

fn g(n: u8, terms: &[(&[usize], i64)]) -> GrassmannElement {
    GrassmannElement::from_terms(n, terms.iter().map(|(b, c)| (b.to_vec(), rat(*c, 1))))
        .expect("valid blades")
}

pub fn grassmann_selftest(seed: u64) -> Report {
    let mut c = Collector::default();
    for (name, counts) in grassmann_laws(seed, 3, 200) {
        c.check(&format!("law/{name}"), counts.failures == 0, json!(counts));
    }
    let cases: [(&str, GrassmannElement, u32); 3] = [
        ("beta1", g(4, &[(&[1], 1)]), 2),
        ("beta1+beta2", g(4, &[(&[1], 1), (&[2], 1)]), 2),
        (
            "beta1beta2+beta3beta4",
            g(4, &[(&[1, 2], 1), (&[3, 4], 1)]),
            3,
        ),
    ];
    for (name, x, expected) in cases {
        let got = x.nilpotency_index().ok();
        c.check(
            &format!("nilpotency/{name}"),
            got == Some(expected),
            json!({ "element": x, "index": got }),
        );
    }
    for n in 1..=3u8 {
        let idem = ternary_idempotents(n);
        let ok = idem
            .iter()
            .all(|x| x.verify_idempotent_is_body().soul_vanishes);
        c.check(&format!("idempotents/n={n}"), ok, json!({ "found": idem }));
    }
    c.finish("grassmann selftest", seed)
}

fn residual_strings(m: &[Vec<Expr>]) -> Vec<Vec<String>> {
    m.iter()
        .map(|row| row.iter().map(|e| e.to_string()).collect())
        .collect()
}

/// `einstein-check`; passes iff the residual vanishes symbolically or stays
/// below `tolerance` at every probe point.
pub fn einstein_report(
    entry: &CatalogEntry,
    lambda: Option<&Expr>,
    mode: Option<EinsteinMode>,
    tolerance: f64,
) -> Result<Report, EinsteinError> {
    let g = &entry.metric;
    let lambda = lambda.unwrap_or(&entry.lambda);
    let mode = mode.unwrap_or(entry.mode);
    let curv = curvature(g)?;
    let check = einstein_check_with(g, &curv, lambda, &EnergyMomentum::zero(g.dim()), mode)?;
    let max_residual = check.probe_residuals.iter().cloned().fold(0.0, f64::max);
    let passed =
        matches!(check.verdict, EinsteinVerdict::EinsteinAlgebra) || max_residual < tolerance;
    let mut c = Collector::default();
    c.check(
        &g.name,
        passed,
        json!({
            "mode": mode,
            "tolerance": tolerance,
            "max_residual": max_residual,
            "lambda": lambda.to_string(),
            "verdict": check.verdict,
            "probe_residuals": check.probe_residuals,
            "residual": residual_strings(&check.residual),
            "ricci_scalar": curv.scalar.to_string(),
        }),
    );
    Ok(c.finish("einstein-check", PROBE_SEED))
}

/// `lift-check`: lifted and base verdicts agree, addition is pointwise at
/// random stage points, and a non-pointwise product witness exists.
pub fn lift_report(entry: &CatalogEntry, seed: u64) -> Result<Report, StageError> {
    let mut c = Collector::default();
    lift_items(&mut c, entry, seed)?;
    Ok(c.finish("lift-check", seed))
}

fn random_stage_point(rng: &mut ChaCha8Rng, chart: &Chart, n: u8, terms: usize) -> StagePoint {
    let stage = Stage::grassmann(n, Category::Linear);
    let mut out = Vec::with_capacity(terms);
    for _ in 0..terms {
        let lambda = random_element(rng, n, 3).map_coeffs(|c| Scalar::Exact(c.clone()));
        let point = chart
            .sample_points(rng, 1)
            .expect("chart has interior")
            .pop()
            .expect("one point");
        let functional = if rng.gen_bool(0.5) {
            Functional::Eval { point }
        } else {
            Functional::DirDeriv {
                point,
                v: (0..chart.dim())
                    .map(|_| Scalar::from(rng.gen_range(-2i64..=2)))
                    .collect(),
            }
        };
        out.push(StageTerm { lambda, functional });
    }
    StagePoint::new(stage, out).expect("full carrier admits every λ")
}

/// Fraction of `count` random three-term stage points at which
/// `(f̄ + ḡ)(ρ) = f̄(ρ) + ḡ(ρ)` holds exactly.
pub fn additivity_probe(chart: &Chart, seed: u64, count: usize) -> (usize, usize) {
    let mut rng = new_rng(seed);
    let vars = chart.coords().to_vec();
    let mut ok = 0;
    for _ in 0..count {
        let rho = random_stage_point(&mut rng, chart, 3, 3);
        let f = lift_function(&random_polynomial(&mut rng, &vars, 3, 3));
        let h = lift_function(&random_polynomial(&mut rng, &vars, 3, 3));
        let lifted = lifted_add(&f, &h).apply(chart, &rho);
        let pointwise = pointwise_add(&f, &h, chart, &rho);
        if matches!((lifted, pointwise), (Ok(a), Ok(b)) if a == b) {
            ok += 1;
        }
    }
    (ok, count)
}

fn lift_items(c: &mut Collector, entry: &CatalogEntry, seed: u64) -> Result<(), StageError> {
    let g = &entry.metric;
    let report =
        lifted_einstein_check(g, &entry.lambda, &EnergyMomentum::zero(g.dim()), entry.mode)?;
    c.check(&format!("lift/{}", g.name), report.agrees, json!(report));
    let poly_chart = Chart::uniform(
        &g.chart.coords().iter().map(|s| &**s).collect::<Vec<_>>(),
        -3,
        3,
    )
    .expect("coordinates are distinct");
    let (ok, total) = additivity_probe(&poly_chart, seed, 100);
    c.check(
        &format!("lift/{}/pointwise_addition", g.name),
        ok == total,
        json!({ "exact": ok, "points": total }),
    );
    let witness = find_nonpointwise_witness(&poly_chart, 2, seed, 200)
        .ok()
        .flatten();
    c.check(
        &format!("lift/{}/nonpointwise_product_witness", g.name),
        witness.is_some(),
        json!({ "witness": witness }),
    );
    Ok(())
}

fn singularity_items(c: &mut Collector) {
    let space = SingularSpace::new(Chart::new(&["x", "y"]).expect("valid chart"));
    let table = [
        ("5", true),
        ("x", false),
        ("x - x", true),
        ("sin(x)^2 + cos(x)^2", true),
        ("x*y + 1", false),
        ("exp(y)", false),
    ];
    let mut rows = Vec::new();
    let mut ok = true;
    for (src, expected) in table {
        let f = parse_expr(src).expect("valid expression");
        let verdict = space.prolong(&f);
        let prolongs = verdict.as_ref().map(|v| v.prolongs()).unwrap_or(false);
        ok &= prolongs == expected;
        rows.push(json!({ "f": src, "prolongation": result_json(verdict) }));
    }
    c.check("singularity/prolongation", ok, json!({ "table": rows }));

    let candidates: [(&str, GrassmannElement, Option<&str>); 4] = [
        ("0", g(2, &[]), Some("zero_map")),
        ("1", g(2, &[(&[], 1)]), Some("unit_point")),
        ("1+b1", g(2, &[(&[], 1), (&[1], 1)]), None),
        ("1+b1b2", g(2, &[(&[], 1), (&[1, 2], 1)]), None),
    ];
    for (label, rho1, expected) in candidates {
        let result = classify_multiplicative_point(&rho1);
        let got = result
            .as_ref()
            .ok()
            .map(|r| serde_json::to_value(r.class).expect("class serializes"));
        let ok = got.as_ref().and_then(Value::as_str) == expected;
        let detail = match result {
            Ok(r) => json!({ "rho_1": rho1, "classification": r }),
            Err(e) => json!({ "rho_1": rho1, "precondition_error": e.to_string() }),
        };
        c.check(&format!("singularity/classify/{label}"), ok, detail);
    }

    let unit = StarPoint::new(Category::Smooth, g(3, &[(&[], 1)])).expect("1 is idempotent");
    let lam = g(3, &[(&[], 2), (&[1], 1), (&[2, 3], 1)]);
    let linear = linear_point_from_lambda(&lam);
    let pure = linear_point_from_lambda(&g(3, &[(&[], 7)]));
    c.check(
        "singularity/soul/smooth_unit",
        soul_survival(&unit).is_zero(),
        json!({ "category": "smooth", "outcome": "collapsed", "soul": soul_survival(&unit) }),
    );
    c.check(
        "singularity/soul/linear_soul_bearing",
        soul_survival(&linear) == g(3, &[(&[1], 1), (&[2, 3], 1)]),
        json!({ "category": "linear", "outcome": "soul_bearing", "lambda": lam, "soul": soul_survival(&linear) }),
    );
    c.check(
        "singularity/soul/linear_pure_body",
        soul_survival(&pure).is_zero(),
        json!({ "category": "linear", "outcome": "collapsed", "soul": soul_survival(&pure) }),
    );
    let bb = g(2, &[(&[1, 2], 1)]);
    let rho = linear_point_from_lambda(&bb);
    c.check(
        "singularity/linear_point",
        rho.apply(&rat(3, 1)) == g(2, &[(&[1, 2], 3)]) && point_to_lambda(&rho) == bb,
        json!({ "lambda": bb, "rho_of_3": rho.apply(&rat(3, 1)) }),
    );

    let t = &space.topology;
    let star = t
        .neighborhoods(&SpacePoint::Star)
        .expect("star has a filter");
    c.check(
        "singularity/neighborhoods_of_star",
        star.basis.len() == 1,
        json!(star),
    );
    let p = SpacePoint::base(vec![rat(0, 1), rat(0, 1)]);
    let q = SpacePoint::base(vec![rat(1, 1), rat(1, 3)]);
    let pq = t.separate(&p, &q).expect("distinct points");
    let ps = t.separate(&p, &SpacePoint::Star).expect("distinct points");
    c.check(
        "singularity/separation",
        matches!(pq, crate::singular::Separation::Separated { .. })
            && matches!(ps, crate::singular::Separation::Inseparable { .. }),
        json!({ "p_q": pq, "p_star": ps }),
    );
}

pub fn singularity_demo(seed: u64) -> Report {
    singularity_report(seed, &[], &[])
}

/// The demo plus a prolongation row for each supplied function and a
/// classification for each supplied `ρ(1)`. Supplied inputs are recorded,
/// not judged.
pub fn singularity_report(seed: u64, functions: &[Expr], rho1s: &[GrassmannElement]) -> Report {
    let mut c = Collector::default();
    singularity_items(&mut c);
    let space = SingularSpace::new(Chart::new(&["x", "y"]).expect("valid chart"));
    for (i, f) in functions.iter().enumerate() {
        let verdict = result_json(space.prolong(f));
        c.info(
            &format!("singularity/supplied/function/{i:03}"),
            json!({ "f": f.to_string(), "prolongation": verdict }),
        );
    }
    for (i, rho1) in rho1s.iter().enumerate() {
        let detail = match classify_multiplicative_point(rho1) {
            Ok(r) => json!({ "rho_1": rho1, "classification": r }),
            Err(e) => json!({ "rho_1": rho1, "precondition_error": e.to_string() }),
        };
        c.info(&format!("singularity/supplied/rho_1/{i:03}"), detail);
    }
    c.finish("singularity demo", seed)
}

/// Interval point `λ·ev_t` with `λ` the unit, or `β₁` for odd curves.
fn interval_point(lifted: &LiftedCurve, t: Scalar) -> Result<(StagePoint, StageValue), CurveError> {
    let n = lifted.stage.n();
    let lambda = if lifted.grading == CurveGrading::Odd {
        StageValue::generator(n, 1).map_err(crate::stage::StageError::from)?
    } else {
        StageValue::one(n)
    };
    let rho = StagePoint::new(
        lifted.stage,
        vec![StageTerm {
            lambda: lambda.clone(),
            functional: Functional::Eval { point: vec![t] },
        }],
    )?;
    Ok((rho, lambda))
}

/// `γ̄(λ·ev_t) = λ·ev_{γ(t)}` at `samples` parameters, checked both on the
/// pushed point and by applying both sides to test functions.
pub fn naturality(
    lifted: &LiftedCurve,
    samples: usize,
    seed: u64,
) -> Result<(usize, usize), CurveError> {
    let curve = &lifted.curve;
    let mut rng = new_rng(seed);
    let ts = curve.interval_chart().sample_points(&mut rng, samples)?;
    let vars = curve.target().coords().to_vec();
    let mut tests: Vec<Expr> = (0..curve.target().dim())
        .map(|i| curve.target().coord_expr(i))
        .collect();
    tests.push(random_polynomial(&mut rng, &vars, 3, 3));
    let mut ok = 0;
    for t in ts {
        let t = t.into_iter().next().expect("one parameter");
        let (tau, lambda) = interval_point(lifted, t.clone())?;
        let image = lifted.image(&tau)?;
        let gamma_t = curve.at(&t)?;
        let expected = StagePoint::new(
            lifted.stage,
            vec![StageTerm {
                lambda: lambda.clone(),
                functional: Functional::Eval { point: gamma_t },
            }],
        )?;
        let mut good = image == expected;
        for f in &tests {
            let via_lift = lifted.apply(&tau, f)?;
            let direct = expected.apply(curve.target(), f)?;
            good &= values_agree(&via_lift, &direct, 1e-12);
        }
        if good {
            ok += 1;
        }
    }
    Ok((ok, samples))
}

pub fn supercurve_report(
    curve: &Curve,
    grading: CurveGrading,
    category: Category,
    seed: u64,
) -> Report {
    let mut c = Collector::default();
    supercurve_items(&mut c, curve, grading, category, seed);
    c.finish("supercurve", seed)
}

fn supercurve_items(
    c: &mut Collector,
    curve: &Curve,
    grading: CurveGrading,
    category: Category,
    seed: u64,
) {
    let base = format!(
        "supercurve/{}/{}/{}",
        curve.name,
        grading.code(),
        category.name()
    );
    let lifted = match grading
        .stage(2, category)
        .and_then(|stage| lift_curve(curve, stage, grading))
    {
        Ok(l) => l,
        Err(e) => {
            c.check(
                &format!("{base}/lift"),
                false,
                json!({ "error": e.to_string() }),
            );
            return;
        }
    };
    match naturality(&lifted, 32, seed) {
        Ok((ok, total)) => c.check(
            &format!("{base}/naturality"),
            ok == total,
            json!({ "agree": ok, "samples": total }),
        ),
        Err(e) => c.check(
            &format!("{base}/naturality"),
            false,
            json!({ "error": e.to_string() }),
        ),
    }
    let target = curve.target();
    let probe = Expr::mul(vec![
        target.coord_expr(0),
        target.coord_expr(target.dim() - 1),
    ]);
    c.info(
        &format!("{base}/pullback"),
        json!({ "f": probe.to_string(), "pullback": pullback_apply(curve, &probe).to_string() }),
    );
    if curve.terminates {
        let lambda = match category {
            Category::Smooth => g(2, &[(&[], 1)]),
            Category::Linear => g(2, &[(&[], 1), (&[1], 1)]),
        };
        let endpoint = singular_endpoint(&lifted, &lambda);
        let ok = match (&endpoint, category) {
            (Ok(crate::supercurve::Endpoint::Collapsed { .. }), Category::Smooth) => true,
            (Ok(crate::supercurve::Endpoint::SoulBearing { soul, .. }), Category::Linear) => {
                *soul == g(2, &[(&[1], 1)])
            }
            _ => false,
        };
        c.check(
            &format!("{base}/endpoint"),
            ok,
            json!({ "lambda": lambda, "endpoint": result_json(endpoint) }),
        );
    }
}

/// Random section with up to `terms` polynomial components, optionally
/// restricted to blades of one grade.
pub fn random_section(
    rng: &mut ChaCha8Rng,
    chart: &Chart,
    n: u8,
    terms: usize,
    grade: Option<u32>,
) -> SuperSection {
    let vars = chart.coords().to_vec();
    let blades: Vec<u16> = (0..(1u32 << n))
        .map(|m| m as u16)
        .filter(|m| grade.is_none_or(|k| m.count_ones() == k))
        .collect();
    let mut comps = Vec::with_capacity(terms);
    for _ in 0..rng.gen_range(1..=terms) {
        let blade = Blade::from_mask(blades[rng.gen_range(0..blades.len())]);
        comps.push((blade.indices(), random_polynomial(rng, &vars, 2, 2)));
    }
    SuperSection::from_terms(chart, n, comps).expect("valid blades")
}

/// Supercommutativity, ideal, and body-quotient checks on `count` random
/// section pairs with `n ≤ 6`. Returns the number of passing pairs.
pub fn section_laws(seed: u64, count: usize) -> usize {
    let chart = Chart::new(&["x", "y"]).expect("valid chart");
    let mut rng = new_rng(seed);
    let mut ok = 0;
    for i in 0..count {
        let n = 1 + (i % 6) as u8;
        let (j, k) = (rng.gen_range(0..=n as u32), rng.gen_range(0..=n as u32));
        let s = random_section(&mut rng, &chart, n, 3, Some(j));
        let t = random_section(&mut rng, &chart, n, 3, Some(k));
        let st = section_mul(&s, &t).expect("same chart");
        let ts = section_mul(&t, &s).expect("same chart");
        let signed = if (j * k) % 2 == 1 { ts.neg() } else { ts };
        let supercommutes = st.equivalent(&signed);
        let nil_grade = 1 + rng.gen_range(0..n as u32);
        let nil = random_section(&mut rng, &chart, n, 3, Some(nil_grade));
        let any = random_section(&mut rng, &chart, n, 3, None);
        let ideal = section_mul(&nil, &any).expect("same chart").is_nilpotent()
            && section_mul(&any, &nil).expect("same chart").is_nilpotent();
        let body = equivalent(
            &body_quotient(&section_mul(&any, &s).expect("same chart")),
            &Expr::mul(vec![body_quotient(&any), body_quotient(&s)]),
        );
        if supercommutes && ideal && body {
            ok += 1;
        }
    }
    ok
}

fn supersheaf_items(c: &mut Collector, seed: u64, random_sections: usize) {
    let passed = section_laws(seed, random_sections);
    c.check(
        "supersheaf/section_laws",
        passed == random_sections,
        json!({ "passed": passed, "cases": random_sections }),
    );
    for case in builtin_supermaps() {
        let result = default_supermap_probes(&case.map.source)
            .and_then(|p| lift_supermap_check(&case.map, &case.section, &p));
        match result {
            Ok(check) => c.check(
                &format!("supersheaf/supermap/{}", case.name),
                check.holds,
                json!({ "section": case.section, "probes": check.probes.len(), "holds": check.holds }),
            ),
            Err(e) => c.check(&format!("supersheaf/supermap/{}", case.name), false, json!({ "error": e.to_string() })),
        }
    }
    let st = singular_super_structure(
        &SingularSpace::new(Chart::new(&["x", "y"]).expect("valid chart")),
        6,
    );
    let round = st.basis_round_trip().unwrap_or(false);
    c.check(
        "supersheaf/singular_structure",
        round,
        json!({ "n": 6, "dimension": st.dimension(), "basis_round_trip": round }),
    );
    let chart = Chart::new(&["x", "y"]).expect("valid chart");
    let s = SuperSection::from_terms(
        &chart,
        2,
        [(vec![1], parse_expr("x").expect("valid expression"))],
    )
    .expect("valid");
    let rejected = matches!(
        st_prolong(&chart, &s),
        Some(SectionProlongation::DoesNotProlong { .. })
    );
    c.check(
        "supersheaf/nonconstant_section_rejected",
        rejected,
        json!({ "section": s }),
    );
}

fn st_prolong(chart: &Chart, s: &SuperSection) -> Option<SectionProlongation> {
    singular_super_structure(&SingularSpace::new(chart.clone()), s.n())
        .prolong(s)
        .ok()
}

fn einstein_grassmann_items(c: &mut Collector, entries: &[CatalogEntry]) {
    for e in entries {
        let g = &e.metric;
        match einstein_grassmann_check(g, &e.lambda, &EnergyMomentum::zero(g.dim()), e.mode, 2) {
            Ok(r) => c.info(
                &format!("supersheaf/einstein_grassmann/{}", g.name),
                json!(r),
            ),
            Err(err) => c.check(
                &format!("supersheaf/einstein_grassmann/{}", g.name),
                false,
                json!({ "error": err.to_string() }),
            ),
        }
    }
}

pub fn supersheaf_report(seed: u64) -> Report {
    let mut c = Collector::default();
    supersheaf_items(&mut c, seed, 60);
    let entries: Vec<CatalogEntry> = ["de_sitter_static", "minkowski", "schwarzschild"]
        .iter()
        .map(|n| catalog::builtin_entry(n).expect("built-in"))
        .collect();
    einstein_grassmann_items(&mut c, &entries);
    c.finish("supersheaf check", seed)
}

/// Every command over every built-in catalog item.
pub fn full_suite(seed: u64) -> Report {
    let mut c = Collector::default();
    for (name, counts) in grassmann_laws(seed, 3, 100) {
        c.check(
            &format!("grassmann/law/{name}"),
            counts.failures == 0,
            json!(counts),
        );
    }
    let entries = catalog::builtin_catalog();
    for e in &entries {
        let g = &e.metric;
        let result = curvature(g).and_then(|curv| {
            let check =
                einstein_check_with(g, &curv, &e.lambda, &EnergyMomentum::zero(g.dim()), e.mode)?;
            let t = induced_energy_momentum_with(g, &curv, &e.lambda)?;
            let round_trip = einstein_check_with(g, &curv, &e.lambda, &t, EinsteinMode::Full)?;
            Ok((check, round_trip))
        });
        match result {
            Ok((check, round_trip)) => {
                c.info(
                    &format!("einstein/{}", g.name),
                    json!({ "mode": e.mode, "verdict": check.verdict }),
                );
                c.check(
                    &format!("einstein/{}/induced_source_round_trip", g.name),
                    matches!(round_trip.verdict, EinsteinVerdict::EinsteinAlgebra),
                    json!({ "verdict": round_trip.verdict }),
                );
            }
            Err(err) => c.check(
                &format!("einstein/{}", g.name),
                false,
                json!({ "error": err.to_string() }),
            ),
        }
        if let Err(err) = lift_items(&mut c, e, seed) {
            c.check(
                &format!("lift/{}", g.name),
                false,
                json!({ "error": err.to_string() }),
            );
        }
    }
    singularity_items(&mut c);
    for curve in crate::supercurve::builtin_curves() {
        for category in [Category::Smooth, Category::Linear] {
            supercurve_items(&mut c, &curve, CurveGrading::Full, category, seed);
        }
    }
    supersheaf_items(&mut c, seed, 30);
    einstein_grassmann_items(&mut c, &entries);
    c.finish("suite", seed)
}
