use std::io::Read;

use serde::Deserialize;
use serde_json::{json, Value};

use quiverforge::algebra::{Membership, QuiverAlgebra};
use quiverforge::dga::extended_dga;
use quiverforge::formats::{
    complex_to_json, element_from_json, element_to_json, matrix_to_json, parse_rational, rational_from_json, AlgebraDoc,
    GraphDoc, JsonScalar, RepDoc, Resolved, TermJson, WitnessDoc,
};
use quiverforge::linalg::Matrix;
use quiverforge::monad::{
    assemble, build_adhm_framed_functor, build_adhm_monad, build_framed_functor_complex, build_nakajima_monad,
    evaluate_adhm_at_point, rank_profile_csv, slice_exactness, verify_d_squared, ComplexKind, FreeComplex, MonadError,
};
use quiverforge::quiver::{affine_delta, classify_form, double_quiver, dynkin_label, frame_double, positive_roots, Orientation};
use quiverforge::representation::{check_matrix_rep, moment_map, MatrixRep, RepCheck};
use quiverforge::scalar::{Novikov, Rational};
use quiverforge::stability::{
    gauge_normalize_an, is_stable_with, mc_region_classify, verify_witness, McPoint, Mode, SearchOptions, Verdict, WitnessVerdict,
};
use quiverforge::stack::{builtin_stack, verify_stack, CheckKind, CheckLine, StackDescriptor, StackReport};
use quiverforge::{Element, Scalar};

use crate::report::{Report, Status, UsageError};
use crate::{AlgebraCmd, Cli, Cmd, ElementArgs, GraphCmd, KindArg, ModeArg, MonadCmd, RepCmd, StabilityCmd, StackCmd, StackSource};

type Res = Result<Report, UsageError>;

/// Reads a file, or stdin for `-`.
fn read(path: &str) -> Result<String, UsageError> {
    if path == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        return Ok(s);
    }
    std::fs::read_to_string(path).map_err(|e| UsageError(format!("cannot read `{path}`: {e}")))
}

/// Inline JSON or a file holding it.
fn json_arg(s: &str) -> Result<Value, UsageError> {
    let t = s.trim_start();
    let text = if t.starts_with('{') || t.starts_with('[') { s.to_string() } else { read(s)? };
    Ok(serde_json::from_str(&text)?)
}

fn rationals(s: &str) -> Result<Vec<Rational>, UsageError> {
    s.split(',').map(|x| parse_rational(x).ok_or_else(|| UsageError(format!("bad rational `{x}`")))).collect()
}

fn show_matrix<K: Scalar>(m: &Matrix<K>) -> String {
    let (r, c) = m.shape();
    if r * c == 0 {
        return format!("0 ({r}×{c})");
    }
    let rows: Vec<String> = (0..r).map(|i| m.row(i).iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")).collect();
    format!("[{}]", rows.join("; "))
}

pub fn run<K: JsonScalar>(cli: &Cli) -> Res {
    let effort = cli.effort;
    match &cli.cmd {
        Cmd::Graph { cmd } => graph(cmd),
        Cmd::Algebra { cmd } => algebra::<K>(cmd, effort),
        Cmd::Rep { cmd } => rep::<K>(cmd, effort),
        Cmd::Stability { cmd } => stability::<K>(cmd, cli.seed),
        Cmd::Monad { cmd } => monad::<K>(cmd, effort),
        Cmd::Stack { cmd } => match cmd {
            StackCmd::Verify { source } => stack_verify::<K>(source, effort, None),
        },
    }
}

fn graph(cmd: &GraphCmd) -> Res {
    let load = |f: &str| -> Result<_, UsageError> { Ok(GraphDoc::from_json(&read(f)?)?.graph) };
    match cmd {
        GraphCmd::Classify { file } => {
            let g = load(file)?;
            let class = classify_form(&g)?;
            let label = dynkin_label(&g);
            let text = match &label {
                Some(l) => format!("{class} ({l})"),
                None => class.to_string(),
            };
            Ok(Report::new(Status::Pass).text(text).with("class", class).with("label", label))
        }
        GraphCmd::Delta { file } => {
            let g = load(file)?;
            match affine_delta(&g)? {
                Some(d) => {
                    let parts: Vec<String> = g.vertices.iter().zip(&d).map(|(v, x)| format!("{}={x}", v.id)).collect();
                    Ok(Report::new(Status::Pass).text(format!("δ = ({})", parts.join(", "))).with("delta", d))
                }
                None => {
                    let class = classify_form(&g)?;
                    Ok(Report::new(Status::Fail)
                        .text(format!("no affine δ: the form is {class}"))
                        .with("delta", Value::Null)
                        .with("class", class))
                }
            }
        }
        GraphCmd::Roots { file, bound } => {
            let g = load(file)?;
            let b: Vec<i64> = match bound {
                Some(s) => s.split(',').map(|x| x.trim().parse::<i64>()).collect::<Result<_, _>>()?,
                None => vec![1; g.n()],
            };
            if b.len() != g.n() {
                return Err(UsageError(format!("bound has {} entries for {} vertices", b.len(), g.n())));
            }
            let roots = positive_roots(&g, &b)?;
            let mut r = Report::new(Status::Pass);
            r.line(format!("{} roots with θᵗCθ ≤ 2 below ({})", roots.len(), b.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")));
            for t in &roots {
                r.line(format!("  ({})", t.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")));
            }
            Ok(r.with("roots", roots))
        }
    }
}

fn load_element<K: JsonScalar>(a: &ElementArgs) -> Result<(QuiverAlgebra<K>, Element<K>), UsageError> {
    let alg = AlgebraDoc::from_json(&read(&a.file)?)?.algebra.build::<K>()?;
    let f = if a.element.trim_start().starts_with('[') {
        let terms: Vec<TermJson> = serde_json::from_str(&a.element)?;
        element_from_json(&terms, &alg.quiver)?
    } else {
        alg.parse(&a.element)?
    };
    Ok((alg, f))
}

fn algebra<K: JsonScalar>(cmd: &AlgebraCmd, effort: usize) -> Res {
    match cmd {
        AlgebraCmd::Reduce(a) => {
            let (alg, f) = load_element::<K>(a)?;
            let nf = alg.normal_form(&f, effort)?;
            let q = &alg.quiver;
            Ok(Report::new(Status::Pass)
                .text(format!("nf = {}", alg.show(&nf)))
                .with("normal_form", alg.show(&nf))
                .with("terms", element_to_json(&nf, q)))
        }
        AlgebraCmd::Member(a) => {
            let (alg, f) = load_element::<K>(a)?;
            let m = alg.ideal_membership(&f, effort)?;
            let (status, text) = match m {
                Membership::ProvedMember => (Status::Pass, "proved member".to_string()),
                Membership::NotFound => (Status::Unknown, format!("not found at effort degree {effort}; residual {}", alg.show(&alg.nf(&f, effort)))),
            };
            Ok(Report::new(status).text(text).with("membership", m))
        }
        AlgebraCmd::DgCheck { file, framing, perturb } => {
            let g = GraphDoc::from_json(&read(file)?)?.graph;
            let sel = framing.iter().map(|v| g.index(v)).collect::<Result<Vec<_>, _>>()?;
            let dq = frame_double(&double_quiver(&g, &Orientation::Lexicographic)?, &sel)?;
            let mut e = extended_dga::<K>(&dq)?;
            for p in perturb {
                let (v, expr) = p.split_once('=').ok_or_else(|| UsageError(format!("--perturb expects VERTEX=EXPR, got `{p}`")))?;
                let v = dq.quiver.vertex(v.trim())?;
                let extra = e.alg.parse(expr)?;
                e.perturb(v, &extra);
            }
            let r = e.verify(effort)?;
            let mut rep = Report::new(if r.passed() { Status::Pass } else { Status::Fail });
            rep.line(format!("d² = 0 and d descends: {}", if r.dg.passed { "proved" } else { "not proved" }));
            for f in &r.dg.failed_generators {
                rep.line(format!("  d²({f}) not proved zero"));
            }
            for v in &r.outside {
                rep.line(format!("  d(t_{v}) not in the preprojective ideal"));
            }
            for v in &r.not_generated {
                rep.line(format!("  preprojective relation at {v} not generated"));
            }
            rep.put("dg_passed", r.dg.passed)
                .put("failed_generators", &r.dg.failed_generators)
                .put("failed_relations", &r.dg.failed_relations)
                .put("outside", &r.outside)
                .put("not_generated", &r.not_generated);
            Ok(rep)
        }
    }
}

fn load_rep<K: JsonScalar>(file: &str) -> Result<(RepDoc, Resolved<K>, MatrixRep<K>), UsageError> {
    let doc = RepDoc::from_json(&read(file)?)?;
    let (r, rho) = doc.build::<K>()?;
    Ok((doc, r, rho))
}

fn rep<K: JsonScalar>(cmd: &RepCmd, effort: usize) -> Res {
    match cmd {
        RepCmd::Check { file } => {
            let (_, r, rho) = load_rep::<K>(file)?;
            match check_matrix_rep(&rho, &r.alg)? {
                RepCheck::Pass => Ok(Report::new(Status::Pass)
                    .text(format!("all {} relations hold", r.alg.relations.len()))
                    .with("relations", r.alg.relations.len())),
                RepCheck::Fail { relation, residual } => {
                    let rel = r.alg.show(&r.alg.relations[relation]);
                    Ok(Report::new(Status::Fail)
                        .text(format!("relation {rel} fails: value {}", show_matrix(&residual)))
                        .with("relation", rel)
                        .with("residual", matrix_to_json(&residual)))
                }
            }
        }
        RepCmd::Moment { file } => {
            let (_, r, rho) = load_rep::<K>(file)?;
            let dq = r.dq.ok_or_else(|| UsageError("moment needs an `adhm` or `double` quiver source".into()))?;
            let mu = moment_map(&rho, &dq)?;
            let mut rep = Report::new(Status::Pass);
            let mut out = serde_json::Map::new();
            for (v, m) in &mu {
                let id = &dq.quiver.vertices[*v].id;
                rep.line(format!("μ_{id} = {}", show_matrix(m)));
                if !m.is_zero() {
                    rep.status = Status::Fail;
                }
                out.insert(id.clone(), json!(matrix_to_json(m)));
            }
            Ok(rep.with("moment", out))
        }
        RepCmd::ChartVerify { source, chart } => stack_verify::<K>(source, effort, Some(chart.as_deref())),
    }
}

fn mode(m: ModeArg) -> Mode {
    match m {
        ModeArg::Framed => Mode::Framed,
        ModeArg::Unframed => Mode::Unframed,
    }
}

#[derive(Deserialize)]
struct PointArg {
    sphere: Option<usize>,
    torus: Option<usize>,
    u: Option<Value>,
    v: Option<Value>,
    x: Option<Value>,
    y: Option<Value>,
}

fn stability<K: JsonScalar>(cmd: &StabilityCmd, seed: u64) -> Res {
    match cmd {
        StabilityCmd::Check { file, zeta, mode: m } => {
            let (_, r, rho) = load_rep::<K>(file)?;
            let q = &r.alg.quiver;
            let opts = SearchOptions { seed, ..SearchOptions::default() };
            let v = is_stable_with(&rho, q, &rationals(zeta)?, mode(*m), &opts)?;
            let status = match v {
                Verdict::Stable => Status::Pass,
                Verdict::Unknown => Status::Unknown,
                _ => Status::Fail,
            };
            let mut rep = Report::new(status).text(format!("verdict: {}", v.tag())).with("verdict", v.tag());
            if let Some(w) = v.witness() {
                let doc = WitnessDoc::from_witness(w, q);
                rep.line(format!("witness ({:?}, dims {:?}): {}", w.role, w.subspace.dims(), serde_json::to_string(&doc.basis)?));
                rep.put("witness", doc);
            }
            Ok(rep)
        }
        StabilityCmd::Witness { file, witness, zeta, mode: m } => {
            let (_, r, rho) = load_rep::<K>(file)?;
            let q = &r.alg.quiver;
            let w = WitnessDoc::from_json(&read(witness)?)?.to_witness::<K>(q, &rho.dims)?;
            let v = verify_witness(&rho, q, &w, &rationals(zeta)?, mode(*m))?;
            let (status, text, tag) = match v {
                WitnessVerdict::ValidDestabilizer { strict: true } => (Status::Pass, "valid destabilizer (strict)", "valid-strict"),
                WitnessVerdict::ValidDestabilizer { strict: false } => (Status::Pass, "valid destabilizer (equality)", "valid-equality"),
                WitnessVerdict::NotADestabilizer => (Status::Fail, "not a destabilizer", "not-a-destabilizer"),
                WitnessVerdict::NotInvariant => (Status::Fail, "subspace is not invariant", "not-invariant"),
            };
            Ok(Report::new(status).text(text).with("witness_verdict", tag))
        }
        StabilityCmd::Normalize { file, n, i } => {
            let (doc, r, rho) = load_rep::<K>(file)?;
            let out = gauge_normalize_an(&rho, &r.alg.quiver, *n, *i)?;
            let nd = RepDoc::from_rep(doc.quiver, &r.alg.quiver, &out);
            let mut rep = Report::new(Status::Pass);
            for (a, m) in r.alg.quiver.arrows.iter().zip(&out.mats) {
                rep.line(format!("{} = {}", a.id, show_matrix(m)));
            }
            Ok(rep.with("rep", nd))
        }
        StabilityCmd::McRegion { n, point, areas } => {
            let p: PointArg = serde_json::from_value(json_arg(point)?)?;
            let nov = |v: &Option<Value>, name: &str| -> Result<Novikov, UsageError> {
                let v = v.as_ref().ok_or_else(|| UsageError(format!("point is missing `{name}`")))?;
                Ok(Novikov::from_json(v)?)
            };
            let pt = match (p.sphere, p.torus) {
                (Some(j), None) => McPoint::Sphere { j, u: nov(&p.u, "u")?, v: nov(&p.v, "v")? },
                (None, Some(i)) => McPoint::Torus { i, x: nov(&p.x, "x")?, y: nov(&p.y, "y")? },
                _ => return Err(UsageError("point needs exactly one of `sphere` and `torus`".into())),
            };
            let a = json_arg(areas)?;
            let pairs = a.as_array().ok_or_else(|| UsageError("areas must be a list of pairs".into()))?;
            let areas = pairs
                .iter()
                .map(|p| match p.as_array().map(|x| x.as_slice()) {
                    Some([x, y]) => Ok((rational_from_json(x)?, rational_from_json(y)?)),
                    _ => Err(UsageError(format!("area entry {p} is not a pair"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            let region = mc_region_classify(*n, &pt, &areas)?;
            Ok(Report::new(Status::Pass).text(format!("region: {region}")).with("region", region.to_string()))
        }
    }
}

fn complex_for<K: JsonScalar>(r: &Resolved<K>, rho: &MatrixRep<K>, kind: KindArg, check: bool) -> Result<Result<FreeComplex<K>, MonadError>, UsageError> {
    let dq = r.dq.as_ref().ok_or_else(|| UsageError("monads need an `adhm` or `double` quiver source".into()))?;
    let ck = match kind {
        KindArg::Monad => ComplexKind::Monad,
        KindArg::FramedFunctor => ComplexKind::FramedFunctor,
    };
    Ok(match (check, r.adhm, kind) {
        (false, _, _) => assemble(dq, rho, ck),
        (true, true, KindArg::Monad) => build_adhm_monad(dq, rho),
        (true, true, KindArg::FramedFunctor) => build_adhm_framed_functor(dq, rho),
        (true, false, KindArg::Monad) => build_nakajima_monad(dq, rho),
        (true, false, KindArg::FramedFunctor) => build_framed_functor_complex(dq, rho),
    })
}

/// Obstructed data is an explicit failure; other monad errors are input errors.
fn obstructed(e: MonadError) -> Res {
    match e {
        MonadError::Obstructed(v) => Ok(Report::new(Status::Fail).text(format!("moment map does not vanish at `{v}`")).with("obstructed_at", v)),
        other => Err(other.into()),
    }
}

fn monad<K: JsonScalar>(cmd: &MonadCmd, effort: usize) -> Res {
    match cmd {
        MonadCmd::Build { file, kind } => {
            let (_, r, rho) = load_rep::<K>(file)?;
            let c = match complex_for(&r, &rho, *kind, true)? {
                Ok(c) => c,
                Err(e) => return obstructed(e),
            };
            let q = &c.coeff.quiver;
            let mut rep = Report::new(Status::Pass);
            for (k, t) in c.terms.iter().enumerate() {
                let slots: Vec<String> = t.iter().map(|s| format!("{}@{}×{}", s.label, q.vertices[s.vertex].id, s.mult)).collect();
                rep.line(format!("term {k}: {}", slots.join(", ")));
            }
            for (name, d, src, tgt) in [("d0", &c.d0, 0, 1), ("d1", &c.d1, 1, 2)] {
                for (ti, row) in d.iter().enumerate() {
                    for (si, op) in row.iter().enumerate() {
                        if op.is_zero() {
                            continue;
                        }
                        let entries: Vec<String> = (0..op.rows)
                            .map(|i| (0..op.cols).map(|j| c.coeff.show(&op.entry(i, j))).collect::<Vec<_>>().join(", "))
                            .collect();
                        rep.line(format!("{name} {} → {}: [{}]", c.terms[src][si].label, c.terms[tgt][ti].label, entries.join("; ")));
                    }
                }
            }
            Ok(rep.with("ranks", c.ranks()).with("complex", complex_to_json(&c)))
        }
        MonadCmd::D2 { file, kind } => {
            let (_, r, rho) = load_rep::<K>(file)?;
            let c = complex_for(&r, &rho, *kind, false)??;
            let bad = verify_d_squared(&c, effort)?;
            let mut rep = Report::new(if bad.is_empty() { Status::Pass } else { Status::Fail });
            rep.line(if bad.is_empty() { "d1∘d0 proved zero".to_string() } else { format!("{} entries of d1∘d0 not proved zero", bad.len()) });
            for e in &bad {
                rep.line(format!("  {} → {} ({},{}): {}", e.from, e.to, e.row, e.col, e.residual));
            }
            Ok(rep.with("failures", bad))
        }
        MonadCmd::Eval { adhm, grid, csv } => {
            let (_, r, rho) = load_rep::<K>(adhm)?;
            if !r.adhm {
                return Err(UsageError("eval needs an `adhm` quiver source".into()));
            }
            let c = match complex_for(&r, &rho, KindArg::Monad, true)? {
                Ok(c) => c,
                Err(e) => return obstructed(e),
            };
            let lo = -((*grid as i64) / 2);
            let coords: Vec<i64> = (0..*grid as i64).map(|k| lo + k).collect();
            let mut cells = Vec::new();
            for &y in &coords {
                for &x in &coords {
                    let p = evaluate_adhm_at_point(&c, (K::from_i64(x), K::from_i64(y)))?;
                    cells.push((x, y, p));
                }
            }
            let generic = cells.iter().map(|c| c.2.cohomology).min().unwrap_or(0);
            let jumps: Vec<(i64, i64)> = cells.iter().filter(|c| c.2.cohomology > generic).map(|c| (c.0, c.1)).collect();
            let mut rep = Report::new(Status::Pass);
            if *csv {
                let pts: Vec<(K, K)> = cells.iter().map(|c| (K::from_i64(c.0), K::from_i64(c.1))).collect();
                rep.line(rank_profile_csv(&c, &pts)?.trim_end().to_string());
            } else {
                rep.line(format!("middle cohomology on the {grid}×{grid} grid (rows y, columns x)"));
                rep.line(format!("{:>5} |{}", "y\\x", coords.iter().map(|x| format!("{x:>4}")).collect::<String>()));
                for &y in coords.iter().rev() {
                    let row: String = coords.iter().map(|&x| format!("{:>4}", cells.iter().find(|c| c.0 == x && c.1 == y).unwrap().2.cohomology)).collect();
                    rep.line(format!("{y:>5} |{row}"));
                }
                let js: Vec<String> = jumps.iter().map(|(x, y)| format!("({x},{y})")).collect();
                rep.line(format!("generic rank {generic}; jumps at {}", if js.is_empty() { "none".into() } else { js.join(" ") }));
            }
            let points: Vec<Value> = cells
                .iter()
                .map(|(x, y, p)| json!({ "x": x, "y": y, "rank_d0": p.rank_d0, "rank_d1": p.rank_d1, "cohomology": p.cohomology }))
                .collect();
            Ok(rep.with("generic", generic).with("jumps", jumps).with("points", points))
        }
        MonadCmd::Exactness { file, level, slack, kind } => {
            let (_, r, rho) = load_rep::<K>(file)?;
            let c = match complex_for(&r, &rho, *kind, true)? {
                Ok(c) => c,
                Err(e) => return obstructed(e),
            };
            let hs = slice_exactness(&c, *level, *slack)?;
            let exact = hs.iter().all(|h| h.h0 == 0 && h.h1 == 0);
            let mut rep = Report::new(if exact { Status::Pass } else { Status::Fail });
            for h in &hs {
                rep.line(format!("level {}: dim H0 = {}, dim H1 = {}", h.level, h.h0, h.h1));
            }
            Ok(rep.with("levels", hs))
        }
    }
}

fn load_stack(source: &StackSource) -> Result<StackDescriptor, UsageError> {
    match (&source.builtin, &source.file) {
        (Some(b), None) => Ok(builtin_stack(b)?),
        (None, Some(f)) => StackDescriptor::from_json(&read(f)?).map_err(|e| UsageError(e.to_string())),
        _ => Err(UsageError("give exactly one of --builtin and --file".into())),
    }
}

fn kind_word(k: CheckKind) -> &'static str {
    match k {
        CheckKind::Chart => "chart",
        CheckKind::Framing => "framing",
        CheckKind::Transition => "transition",
        CheckKind::Triple => "cocycle",
        CheckKind::Tetrahedron => "tetrahedron",
        CheckKind::Identity => "identity",
        CheckKind::Commutativity => "commutativity",
    }
}

fn line_text(l: &CheckLine) -> Vec<String> {
    let mut out = vec![format!("{} {:<13} {} ({} checks)", if l.passed() { "PASS" } else { "FAIL" }, kind_word(l.kind), l.label, l.checked)];
    for f in &l.failures {
        out.push(format!("    {} ({},{}): residual {}", f.what, f.row, f.col, f.residual));
    }
    out
}

/// `charts`: restrict to chart-level lines, optionally of one open.
fn stack_verify<K: JsonScalar>(source: &StackSource, effort: usize, charts: Option<Option<&str>>) -> Res {
    let d = load_stack(source)?;
    if let Some(Some(open)) = charts {
        if d.open_index(open).is_none() {
            return Err(UsageError(format!("stack `{}` has no open `{open}`", d.name)));
        }
    }
    let full = verify_stack::<K>(&d, effort)?;
    let report = match charts {
        None => full,
        Some(open) => StackReport {
            lines: full
                .lines
                .into_iter()
                .filter(|l| matches!(l.kind, CheckKind::Chart | CheckKind::Framing | CheckKind::Commutativity))
                .filter(|l| open.is_none_or(|o| l.label.split_whitespace().last() == Some(o)))
                .collect(),
            ..full
        },
    };
    let mut rep = Report::new(if report.passed() { Status::Pass } else { Status::Fail });
    rep.line(format!("stack {} at effort degree {effort}", report.name));
    for l in &report.lines {
        for t in line_text(l) {
            rep.line(t);
        }
    }
    let failing = report.failing().len();
    rep.line(format!("{} checks, {} failing", report.lines.len(), failing));
    Ok(rep.with("stack", &report.name).with("lines", &report.lines).with("failing", failing))
}
