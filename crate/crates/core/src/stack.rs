//! Quiver algebroid stacks built around a central chart U_0.
//!
//! Every other chart comes with maps to and from the localized central
//! algebra and a gerbe term c_0i0. Transitions between two non-central charts
//! are either given explicitly or composed through U_0; the remaining gerbe
//! terms are derived from the c_0i0. Localizations needed on an overlap are
//! attached per chart and per set of other opens, and a check on opens S uses
//! the algebras localized for S.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{AlgebraError, QuiverAlgebra};
use crate::localization::{localize_matrix, localize_scalar};
use crate::path::{Element, Path};
use crate::quiver::Quiver;
use crate::representation::{
    arrow_inverses, block_apply, check_symbolic_rep, compose_symbolic, unresolved_entries, verify_chart_view, ChartView,
    ElemMatrix, RepError, SymbolicRep, Unresolved,
};
use crate::scalar::{Rational, Scalar};

pub const STACK_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum StackError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Rep(#[from] RepError),
    #[error("no open with index {0}")]
    UnknownOpen(usize),
    #[error("no transition to `{0}` from `{1}`")]
    MissingTransition(String, String),
    #[error("no gerbe term for chart `{0}` at vertex `{1}`")]
    MissingGerbe(String, String),
    #[error("vertex `{1}` of chart `{0}` has no image")]
    MissingVertex(String, String),
    #[error("unsupported schema version {0}")]
    Schema(u32),
    #[error("unknown built-in stack `{0}`")]
    UnknownBuiltin(String),
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LocSpec {
    /// Adjoins an inverse of `element`, named `name`.
    Scalar { element: String, name: String },
    /// Adjoins the inverse of a matrix of elements; `names[j][i]` names its (j,i) entry.
    Matrix { rows: Vec<Vec<String>>, names: Vec<Vec<String>> },
}

impl LocSpec {
    pub fn scalar(element: impl Into<String>, name: impl Into<String>) -> Self {
        LocSpec::Scalar { element: element.into(), name: name.into() }
    }

    fn names(&self) -> Vec<&str> {
        match self {
            LocSpec::Scalar { name, .. } => vec![name.as_str()],
            LocSpec::Matrix { names, .. } => names.iter().flatten().map(|s| s.as_str()).collect(),
        }
    }

    pub fn apply<K: Scalar>(&self, a: QuiverAlgebra<K>) -> Result<QuiverAlgebra<K>, AlgebraError> {
        if self.names().iter().all(|n| a.quiver.has_arrow(n)) {
            return Ok(a);
        }
        match self {
            LocSpec::Scalar { element, name } => {
                let g = a.parse(element)?;
                localize_scalar(&a, &[(g, name.as_str())])
            }
            LocSpec::Matrix { rows, names } => {
                let s = rows.iter().map(|r| r.iter().map(|e| a.parse(e)).collect::<Result<Vec<_>, _>>()).collect::<Result<Vec<_>, _>>()?;
                let n: Vec<Vec<&str>> = names.iter().map(|r| r.iter().map(|s| s.as_str()).collect()).collect();
                localize_matrix(&a, &s, &n)
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct VertexSpec {
    pub id: String,
    #[serde(default)]
    pub framing: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ArrowSpec {
    pub id: String,
    pub tail: String,
    pub head: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AlgebraSpec {
    pub vertices: Vec<VertexSpec>,
    pub arrows: Vec<ArrowSpec>,
    pub relations: Vec<String>,
    #[serde(default)]
    pub localize: Vec<LocSpec>,
}

impl AlgebraSpec {
    pub fn quiver(&self) -> Result<Quiver, AlgebraError> {
        let mut q = Quiver::new();
        for v in &self.vertices {
            q.add_vertex(&v.id, v.framing)?;
        }
        for a in &self.arrows {
            q.add_arrow(&a.id, &a.tail, &a.head)?;
        }
        Ok(q)
    }

    /// The algebra with its own localizations followed by `extra`.
    pub fn build<K: Scalar>(&self, extra: &[&LocSpec]) -> Result<QuiverAlgebra<K>, AlgebraError> {
        let mut a = QuiverAlgebra::free(self.quiver()?);
        for r in &self.relations {
            let e = a.parse(r)?;
            a.add_relation(e)?;
        }
        for l in self.localize.iter().chain(extra.iter().copied()) {
            a = l.apply(a)?;
        }
        Ok(a)
    }
}

/// Images are matrices of expressions in the target; images of arrows the
/// source does not have in a given context are ignored.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MapSpec {
    pub vertex_map: Vec<(String, String)>,
    /// Ranks other than 1.
    #[serde(default)]
    pub rank: Vec<(String, usize)>,
    pub images: Vec<(String, Vec<Vec<String>>)>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GerbeEntry {
    pub vertex: String,
    pub c: Vec<Vec<String>>,
    pub c_inv: Vec<Vec<String>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ChartSpec {
    pub open: String,
    pub algebra: AlgebraSpec,
    /// G_0i, absent for the central chart.
    #[serde(default)]
    pub to_center: Option<MapSpec>,
    /// G_i0.
    #[serde(default)]
    pub from_center: Option<MapSpec>,
    /// c_0i0 by vertex of the central chart; unlisted vertices fixed by
    /// G_0i∘G_i0 with rank 1 get the idempotent.
    #[serde(default)]
    pub gerbe: Vec<GerbeEntry>,
    #[serde(default)]
    pub commutative: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct OverlapSpec {
    pub chart: usize,
    pub with: Vec<usize>,
    pub localize: Vec<LocSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TransitionSpec {
    Explicit { to: usize, from: usize, map: MapSpec },
    /// G_to,from = G_to,0 ∘ G_0,from.
    ViaCenter { to: usize, from: usize },
}

impl TransitionSpec {
    fn ends(&self) -> (usize, usize) {
        match self {
            TransitionSpec::Explicit { to, from, .. } | TransitionSpec::ViaCenter { to, from } => (*to, *from),
        }
    }
}

/// nf(lhs) = nf(rhs) in `chart` localized for `context`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct IdentitySpec {
    pub label: String,
    pub context: Vec<usize>,
    pub chart: usize,
    pub lhs: String,
    pub rhs: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct StackDescriptor {
    pub schema_version: u32,
    pub name: String,
    /// charts[0] is the central chart.
    pub charts: Vec<ChartSpec>,
    #[serde(default)]
    pub overlaps: Vec<OverlapSpec>,
    #[serde(default)]
    pub transitions: Vec<TransitionSpec>,
    /// Maximal sets of opens with nonempty common intersection.
    pub intersections: Vec<Vec<usize>>,
    #[serde(default)]
    pub tetrahedra: bool,
    #[serde(default)]
    pub identities: Vec<IdentitySpec>,
}

impl StackDescriptor {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("descriptor serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, Box<dyn std::error::Error + Send + Sync>> {
        let d: StackDescriptor = serde_json::from_str(s)?;
        if d.schema_version != STACK_SCHEMA_VERSION {
            return Err(Box::new(StackError::Schema(d.schema_version)));
        }
        Ok(d)
    }

    pub fn open_index(&self, id: &str) -> Option<usize> {
        self.charts.iter().position(|c| c.open == id)
    }

    fn has_transition(&self, i: usize, j: usize) -> bool {
        i == j || i == 0 || j == 0 || self.transitions.iter().any(|t| t.ends() == (i, j))
    }

    fn is_framed(&self) -> bool {
        self.charts.iter().any(|c| c.algebra.vertices.iter().any(|v| v.framing))
    }
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    Chart,
    Framing,
    Transition,
    Triple,
    Tetrahedron,
    Identity,
    Commutativity,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Failure {
    pub what: String,
    pub row: usize,
    pub col: usize,
    pub residual: String,
}

impl From<Unresolved> for Failure {
    fn from(u: Unresolved) -> Self {
        Failure { what: u.what, row: u.row, col: u.col, residual: u.residual }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct CheckLine {
    pub kind: CheckKind,
    pub label: String,
    pub checked: usize,
    pub failures: Vec<Failure>,
}

impl CheckLine {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StackReport {
    pub name: String,
    pub effort: usize,
    pub lines: Vec<CheckLine>,
}

impl StackReport {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.passed())
    }

    pub fn failing(&self) -> Vec<&CheckLine> {
        self.lines.iter().filter(|l| !l.passed()).collect()
    }

    pub fn line(&self, label: &str) -> Option<&CheckLine> {
        self.lines.iter().find(|l| l.label == label)
    }
}

type Ctx = Vec<usize>;

fn ctx_of(xs: &[usize]) -> Ctx {
    let mut s: BTreeSet<usize> = xs.iter().copied().collect();
    s.insert(0);
    s.into_iter().collect()
}

fn parse_mat<K: Scalar>(a: &QuiverAlgebra<K>, rows: &[Vec<String>]) -> Result<ElemMatrix<K>, AlgebraError> {
    let r = rows.iter().map(|r| r.iter().map(|e| a.parse(e)).collect::<Result<Vec<_>, _>>()).collect::<Result<Vec<_>, _>>()?;
    Ok(ElemMatrix::from_rows(r))
}

fn build_map<K: Scalar>(
    spec: &MapSpec,
    src: &QuiverAlgebra<K>,
    tgt: &QuiverAlgebra<K>,
    src_name: &str,
) -> Result<SymbolicRep<K>, StackError> {
    let sq = &src.quiver;
    let mut vertex_map = Vec::with_capacity(sq.n_vertices());
    let mut rank = Vec::with_capacity(sq.n_vertices());
    for v in &sq.vertices {
        let w = spec
            .vertex_map
            .iter()
            .find(|(s, _)| *s == v.id)
            .ok_or_else(|| StackError::MissingVertex(src_name.to_string(), v.id.clone()))?;
        vertex_map.push(tgt.quiver.vertex(&w.1).map_err(AlgebraError::from)?);
        rank.push(spec.rank.iter().find(|(s, _)| *s == v.id).map_or(1, |r| r.1));
    }
    let mut images = Vec::new();
    for (id, m) in &spec.images {
        if sq.has_arrow(id) {
            images.push((id.as_str(), parse_mat(tgt, m)?));
        }
    }
    Ok(SymbolicRep::build(src, tgt, vertex_map, rank, images)?)
}

/// Lazily built algebras and transitions per context, shared across checks.
struct Verifier<'a, K: Scalar> {
    d: &'a StackDescriptor,
    effort: usize,
    algs: Mutex<HashMap<(usize, Vec<usize>), Arc<QuiverAlgebra<K>>>>,
    reps: Mutex<HashMap<(usize, usize, Ctx), Arc<SymbolicRep<K>>>>,
    gerbes: Mutex<HashMap<(usize, Ctx), Arc<(Vec<ElemMatrix<K>>, Vec<ElemMatrix<K>>)>>>,
}

impl<'a, K: Scalar> Verifier<'a, K> {
    fn new(d: &'a StackDescriptor, effort: usize) -> Self {
        Verifier { d, effort, algs: Mutex::new(HashMap::new()), reps: Mutex::new(HashMap::new()), gerbes: Mutex::new(HashMap::new()) }
    }

    fn chart(&self, i: usize) -> Result<&'a ChartSpec, StackError> {
        self.d.charts.get(i).ok_or(StackError::UnknownOpen(i))
    }

    fn name(&self, i: usize) -> String {
        self.d.charts.get(i).map_or_else(|| i.to_string(), |c| c.open.clone())
    }

    fn alg(&self, i: usize, ctx: &Ctx) -> Result<Arc<QuiverAlgebra<K>>, StackError> {
        let spec = self.chart(i)?;
        let used: Vec<usize> = self
            .d
            .overlaps
            .iter()
            .enumerate()
            .filter(|(_, o)| o.chart == i && o.with.iter().all(|w| ctx.contains(w)))
            .map(|(k, _)| k)
            .collect();
        let key = (i, used.clone());
        if let Some(a) = self.algs.lock().unwrap().get(&key) {
            return Ok(a.clone());
        }
        let extra: Vec<&LocSpec> = used.iter().flat_map(|&k| self.d.overlaps[k].localize.iter()).collect();
        let a = Arc::new(spec.algebra.build(&extra)?);
        Ok(self.algs.lock().unwrap().entry(key).or_insert(a).clone())
    }

    /// G_ij: chart j → chart i.
    fn rep(&self, i: usize, j: usize, ctx: &Ctx) -> Result<Arc<SymbolicRep<K>>, StackError> {
        let key = (i, j, ctx.clone());
        if let Some(g) = self.reps.lock().unwrap().get(&key) {
            return Ok(g.clone());
        }
        let missing = || StackError::MissingTransition(self.name(i), self.name(j));
        let g = if i == j {
            SymbolicRep::identity(&self.alg(i, ctx)?.quiver)
        } else if i == 0 {
            let spec = self.chart(j)?.to_center.as_ref().ok_or_else(missing)?;
            build_map(spec, &*self.alg(j, ctx)?, &*self.alg(0, ctx)?, &self.name(j))?
        } else if j == 0 {
            let spec = self.chart(i)?.from_center.as_ref().ok_or_else(missing)?;
            build_map(spec, &*self.alg(0, ctx)?, &*self.alg(i, ctx)?, &self.name(0))?
        } else {
            match self.d.transitions.iter().find(|t| t.ends() == (i, j)).ok_or_else(missing)? {
                TransitionSpec::Explicit { map, .. } => build_map(map, &*self.alg(j, ctx)?, &*self.alg(i, ctx)?, &self.name(j))?,
                TransitionSpec::ViaCenter { .. } => {
                    let gi0 = self.rep(i, 0, ctx)?;
                    let g0j = self.rep(0, j, ctx)?;
                    compose_symbolic(&gi0, &g0j, &self.alg(j, ctx)?.quiver, &self.alg(0, ctx)?.quiver, &self.alg(i, ctx)?.quiver)?
                }
            }
        };
        let g = Arc::new(g);
        Ok(self.reps.lock().unwrap().entry(key).or_insert(g).clone())
    }

    /// c_0j0 and its inverse at every vertex of the central chart.
    fn center_gerbe(&self, j: usize, ctx: &Ctx) -> Result<Arc<(Vec<ElemMatrix<K>>, Vec<ElemMatrix<K>>)>, StackError> {
        let key = (j, ctx.clone());
        if let Some(g) = self.gerbes.lock().unwrap().get(&key) {
            return Ok(g.clone());
        }
        let a0 = self.alg(0, ctx)?;
        let gj0 = self.rep(j, 0, ctx)?;
        let g0j = self.rep(0, j, ctx)?;
        let spec = self.chart(j)?;
        let mut c = Vec::new();
        let mut ci = Vec::new();
        for (v, vx) in a0.quiver.vertices.iter().enumerate() {
            if let Some(e) = spec.gerbe.iter().find(|e| e.vertex == vx.id) {
                c.push(parse_mat(&a0, &e.c)?);
                ci.push(parse_mat(&a0, &e.c_inv)?);
            } else if gj0.rank[v] == 1 && g0j.vertex_map[gj0.vertex_map[v]] == v {
                c.push(ElemMatrix::identity(1, v));
                ci.push(ElemMatrix::identity(1, v));
            } else {
                return Err(StackError::MissingGerbe(spec.open.clone(), vx.id.clone()));
            }
        }
        let g = Arc::new((c, ci));
        Ok(self.gerbes.lock().unwrap().entry(key).or_insert(g).clone())
    }

    /// c_ijk and its inverse at every vertex of chart k.
    fn gerbe(&self, i: usize, j: usize, k: usize, ctx: &Ctx) -> Result<(Vec<ElemMatrix<K>>, Vec<ElemMatrix<K>>), StackError> {
        let ak = self.alg(k, ctx)?;
        let nk = ak.quiver.n_vertices();
        if i == j || j == k || j == 0 {
            let gik = self.rep(i, k, ctx)?;
            let id: Vec<ElemMatrix<K>> = (0..nk).map(|v| ElemMatrix::identity(gik.rank[v], gik.vertex_map[v])).collect();
            return Ok((id.clone(), id));
        }
        let c0 = self.center_gerbe(j, ctx)?;
        let w: Vec<usize> = if k == 0 { (0..nk).collect() } else { self.rep(0, k, ctx)?.vertex_map.clone() };
        if i == 0 {
            return Ok((w.iter().map(|&x| c0.0[x].clone()).collect(), w.iter().map(|&x| c0.1[x].clone()).collect()));
        }
        let gi0 = self.rep(i, 0, ctx)?;
        let q0 = &self.alg(0, ctx)?.quiver;
        let qi = &self.alg(i, ctx)?.quiver;
        let mut c = Vec::with_capacity(nk);
        let mut ci = Vec::with_capacity(nk);
        let g0j = self.rep(0, j, ctx)?;
        let gj0 = self.rep(j, 0, ctx)?;
        for &x in &w {
            let center = g0j.vertex_map[gj0.vertex_map[x]];
            c.push(block_apply(&gi0, &c0.0[x], Some((center, x)), q0, qi)?);
            ci.push(block_apply(&gi0, &c0.1[x], Some((x, center)), q0, qi)?);
        }
        Ok((c, ci))
    }

    fn chart_line(&self, k: usize) -> Result<Vec<CheckLine>, StackError> {
        let ctx = ctx_of(&[k]);
        let (a0, ak) = (self.alg(0, &ctx)?, self.alg(k, &ctx)?);
        let (g0k, gk0) = (self.rep(0, k, &ctx)?, self.rep(k, 0, &ctx)?);
        let cg = self.center_gerbe(k, &ctx)?;
        let view = ChartView { chart: &ak, big: &a0, g0i: &g0k, gi0: &gk0, gerbe: &cg.0, gerbe_inv: &cg.1 };
        let r = verify_chart_view(&view, self.effort)?;
        let mut out = vec![CheckLine {
            kind: CheckKind::Chart,
            label: format!("chart {}", self.name(k)),
            checked: r.checked,
            failures: r.failures().into_iter().cloned().map(Failure::from).collect(),
        }];
        if self.d.is_framed() {
            let mut failures = Vec::new();
            let mut checked = 2;
            if !g0k.framing_rigid(&ak.quiver, &a0.quiver) || !gk0.framing_rigid(&a0.quiver, &ak.quiver) {
                failures.push(Failure { what: "framing vertices not rigid".into(), row: 0, col: 0, residual: String::new() });
            }
            for (v, vx) in a0.quiver.vertices.iter().enumerate().filter(|(_, v)| v.framing) {
                checked += 1;
                if cg.0[v] != ElemMatrix::identity(1, v) || cg.1[v] != ElemMatrix::identity(1, v) {
                    failures.push(Failure { what: format!("c({})", vx.id), row: 0, col: 0, residual: a0.show(cg.0[v].get(0, 0)) });
                }
            }
            out.push(CheckLine { kind: CheckKind::Framing, label: format!("framing {}", self.name(k)), checked, failures });
        }
        if self.chart(k)?.commutative {
            let lines = commutativity_check(&ak, Some((&g0k, &a0)), self.effort);
            let failures = lines
                .iter()
                .filter(|l| !l.direct && !l.transfer)
                .map(|l| Failure { what: format!("[{}, {}]", l.a, l.b), row: 0, col: 0, residual: String::new() })
                .collect();
            out.push(CheckLine { kind: CheckKind::Commutativity, label: format!("commutativity {}", self.name(k)), checked: lines.len(), failures });
        }
        Ok(out)
    }

    fn transition_line(&self, i: usize, j: usize) -> Result<CheckLine, StackError> {
        let ctx = ctx_of(&[i, j]);
        let g = self.rep(i, j, &ctx)?;
        let u = check_symbolic_rep(&g, &*self.alg(j, &ctx)?, &*self.alg(i, &ctx)?, self.effort)?;
        Ok(CheckLine {
            kind: CheckKind::Transition,
            label: format!("G({},{})", self.name(i), self.name(j)),
            checked: self.alg(j, &ctx)?.relations.len(),
            failures: u.into_iter().map(Failure::from).collect(),
        })
    }

    /// G_ij∘G_jk(a) = c_ijk(h a)·G_ik(a)·c_ijk(t a)⁻¹ on arrows of chart k.
    fn triple_line(&self, i: usize, j: usize, k: usize) -> Result<CheckLine, StackError> {
        let ctx = ctx_of(&[i, j, k]);
        let (ai, aj, ak) = (self.alg(i, &ctx)?, self.alg(j, &ctx)?, self.alg(k, &ctx)?);
        let lhs = compose_symbolic(&*self.rep(i, j, &ctx)?, &*self.rep(j, k, &ctx)?, &ak.quiver, &aj.quiver, &ai.quiver)?;
        let gik = self.rep(i, k, &ctx)?;
        let (c, ci) = self.gerbe(i, j, k, &ctx)?;
        let qk = &ak.quiver;
        let label = format!("({},{},{})", self.name(i), self.name(j), self.name(k));
        let per: Vec<Vec<Failure>> = (0..qk.n_arrows())
            .into_par_iter()
            .map(|a| {
                let (h, t) = (qk.head(a), qk.tail(a));
                let what = format!("G{}{}∘G{}{}({})", self.name(i), self.name(j), self.name(j), self.name(k), qk.arrows[a].id);
                let m = &gik.arrows[a];
                if c[h].cols != m.rows || m.cols != ci[t].rows || (c[h].rows, ci[t].cols) != lhs.arrows[a].shape() {
                    return vec![Failure { what: format!("{what}: gerbe shape"), row: 0, col: 0, residual: String::new() }];
                }
                let rhs = c[h].mul(m, &ai.quiver).mul(&ci[t], &ai.quiver);
                unresolved_entries(&ai, &lhs.arrows[a].sub(&rhs), &what, self.effort).into_iter().map(Failure::from).collect()
            })
            .collect();
        Ok(CheckLine { kind: CheckKind::Triple, label, checked: qk.n_arrows(), failures: per.into_iter().flatten().collect() })
    }

    /// c_ijk(G_kl v)·c_ikl(v) = G_ij(c_jkl(v))·c_ijl(v) at every vertex of chart l.
    fn tetra_line(&self, i: usize, j: usize, k: usize, l: usize) -> Result<CheckLine, StackError> {
        let ctx = ctx_of(&[i, j, k, l]);
        let (ai, aj, al) = (self.alg(i, &ctx)?, self.alg(j, &ctx)?, self.alg(l, &ctx)?);
        let (cijk, _) = self.gerbe(i, j, k, &ctx)?;
        let (cikl, _) = self.gerbe(i, k, l, &ctx)?;
        let (cjkl, _) = self.gerbe(j, k, l, &ctx)?;
        let (cijl, _) = self.gerbe(i, j, l, &ctx)?;
        let gkl = self.rep(k, l, &ctx)?;
        let gij = self.rep(i, j, &ctx)?;
        let label = format!("({},{},{},{})", self.name(i), self.name(j), self.name(k), self.name(l));
        let mut failures = Vec::new();
        for (v, vx) in al.quiver.vertices.iter().enumerate() {
            let what = format!("{label} at {}", vx.id);
            let a = &cijk[gkl.vertex_map[v]];
            let b = &cikl[v];
            let c = block_apply(&gij, &cjkl[v], None, &aj.quiver, &ai.quiver)?;
            let d = &cijl[v];
            if a.cols != b.rows || c.cols != d.rows || (a.rows, b.cols) != (c.rows, d.cols) {
                failures.push(Failure { what: format!("{what}: shape"), row: 0, col: 0, residual: String::new() });
                continue;
            }
            let diff = a.mul(b, &ai.quiver).sub(&c.mul(d, &ai.quiver));
            failures.extend(unresolved_entries(&ai, &diff, &what, self.effort).into_iter().map(Failure::from));
        }
        Ok(CheckLine { kind: CheckKind::Tetrahedron, label, checked: al.quiver.n_vertices(), failures })
    }

    fn identity_line(&self, s: &IdentitySpec) -> Result<CheckLine, StackError> {
        let a = self.alg(s.chart, &ctx_of(&s.context))?;
        let (l, r) = (a.nf(&a.parse(&s.lhs)?, self.effort), a.nf(&a.parse(&s.rhs)?, self.effort));
        let failures = if l == r {
            Vec::new()
        } else {
            vec![Failure { what: format!("nf({}) = nf({})", s.lhs, s.rhs), row: 0, col: 0, residual: a.show(&l.sub(&r)) }]
        };
        Ok(CheckLine { kind: CheckKind::Identity, label: s.label.clone(), checked: 1, failures })
    }
}

/// Every ordered tuple from one of the intersection sets with no two
/// consecutive entries equal.
fn tuples(sets: &[Vec<usize>], len: usize) -> Vec<Vec<usize>> {
    let mut out = BTreeSet::new();
    for s in sets {
        let mut stack: Vec<Vec<usize>> = vec![vec![]];
        while let Some(t) = stack.pop() {
            if t.len() == len {
                out.insert(t);
                continue;
            }
            for &x in s {
                if t.last() != Some(&x) {
                    let mut u = t.clone();
                    u.push(x);
                    stack.push(u);
                }
            }
        }
    }
    out.into_iter().collect()
}

pub fn verify_stack<K: Scalar>(d: &StackDescriptor, effort: usize) -> Result<StackReport, StackError> {
    let v = Verifier::<K>::new(d, effort);
    let mut lines = Vec::new();
    let charts: Vec<Vec<CheckLine>> = (1..d.charts.len()).into_par_iter().map(|k| v.chart_line(k)).collect::<Result<_, _>>()?;
    lines.extend(charts.into_iter().flatten());
    let pairs: Vec<Vec<usize>> = tuples(&d.intersections, 2).into_iter().filter(|t| t[0] != 0 && t[1] != 0).collect();
    for t in &pairs {
        if !d.has_transition(t[0], t[1]) {
            return Err(StackError::MissingTransition(v.name(t[0]), v.name(t[1])));
        }
    }
    let pl: Vec<CheckLine> = pairs.par_iter().map(|t| v.transition_line(t[0], t[1])).collect::<Result<_, _>>()?;
    lines.extend(pl);
    let triples: Vec<Vec<usize>> =
        tuples(&d.intersections, 3).into_iter().filter(|t| !(t[0] == t[2] && (t[0] == 0 || t[1] == 0))).collect();
    let tl: Vec<CheckLine> = triples.par_iter().map(|t| v.triple_line(t[0], t[1], t[2])).collect::<Result<_, _>>()?;
    lines.extend(tl);
    if d.tetrahedra {
        let quads = tuples(&d.intersections, 4);
        let ql: Vec<CheckLine> = quads.par_iter().map(|t| v.tetra_line(t[0], t[1], t[2], t[3])).collect::<Result<_, _>>()?;
        lines.extend(ql);
    }
    for s in &d.identities {
        lines.push(v.identity_line(s)?);
    }
    Ok(StackReport { name: d.name.clone(), effort, lines })
}

/// Builds the transition G_ij of `d` in the context of opens `ctx`
/// together with its source and target algebras.
pub fn transition_in_context<K: Scalar>(
    d: &StackDescriptor,
    i: usize,
    j: usize,
    ctx: &[usize],
) -> Result<(QuiverAlgebra<K>, QuiverAlgebra<K>, SymbolicRep<K>), StackError> {
    let v = Verifier::<K>::new(d, 0);
    let ctx = ctx_of(ctx);
    let g = v.rep(i, j, &ctx)?;
    Ok(((*v.alg(j, &ctx)?).clone(), (*v.alg(i, &ctx)?).clone(), (*g).clone()))
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct CommutativityLine {
    pub a: String,
    pub b: String,
    /// [a,b] lies in the chart ideal.
    pub direct: bool,
    /// G_0i([a,b]) lies in the ideal of the big algebra.
    pub transfer: bool,
}

/// Commutators of the non-localization loops at each vertex of `chart`.
pub fn commutativity_check<K: Scalar>(
    chart: &QuiverAlgebra<K>,
    transfer: Option<(&SymbolicRep<K>, &QuiverAlgebra<K>)>,
    effort: usize,
) -> Vec<CommutativityLine> {
    let q = &chart.quiver;
    let gens: Vec<usize> = (0..q.n_arrows()).filter(|&a| q.head(a) == q.tail(a) && !chart.is_inverse_arrow(a)).collect();
    let mut out = Vec::new();
    for (x, &a) in gens.iter().enumerate() {
        for &b in &gens[x + 1..] {
            if q.head(a) != q.head(b) {
                continue;
            }
            let (ea, eb) = (Element::arrow(a), Element::arrow(b));
            let c = chart.mul(&ea, &eb).sub(&chart.mul(&eb, &ea));
            let direct = chart.member(&c, effort);
            let transfer = transfer.is_some_and(|(g, big)| {
                g.apply(&c, &big.quiver).map(|m| (0..m.rows).all(|i| (0..m.cols).all(|j| big.member(m.get(i, j), effort)))).unwrap_or(false)
            });
            out.push(CommutativityLine { a: q.arrows[a].id.clone(), b: q.arrows[b].id.clone(), direct, transfer });
        }
    }
    out
}

/// Exponent matrix of a transition whose images of chart generators are
/// single monomials: rows are source generators, columns target generators,
/// localization arrows count −1 towards the arrow they invert.
pub fn exponent_matrix<K: Scalar>(
    g: &SymbolicRep<K>,
    src: &QuiverAlgebra<K>,
    tgt: &QuiverAlgebra<K>,
) -> Option<(Vec<String>, Vec<String>, Vec<Vec<i64>>)> {
    let sg: Vec<usize> = (0..src.quiver.n_arrows()).filter(|&a| !src.is_inverse_arrow(a)).collect();
    let tg: Vec<usize> = (0..tgt.quiver.n_arrows()).filter(|&a| !tgt.is_inverse_arrow(a)).collect();
    let inv = arrow_inverses(tgt);
    let mut m = Vec::new();
    for &a in &sg {
        let img = &g.arrows[a];
        if img.shape() != (1, 1) || img.get(0, 0).terms.len() != 1 {
            return None;
        }
        let mut row = vec![0i64; tg.len()];
        if let Some((Path::Seq(w), _)) = img.get(0, 0).terms.iter().next() {
            for &b in w {
                let b = b as usize;
                if let Some(k) = tg.iter().position(|&x| x == b) {
                    row[k] += 1;
                } else {
                    let k = tg.iter().position(|&x| Some(&x) == inv.get(&b))?;
                    row[k] -= 1;
                }
            }
        }
        m.push(row);
    }
    let name = |q: &Quiver, v: &[usize]| v.iter().map(|&a| q.arrows[a].id.clone()).collect();
    Some((name(&src.quiver, &sg), name(&tgt.quiver, &tg), m))
}

/// The gluing of O(−2): up to reordering, base ↦ base⁻¹, fiber ↦ fiber·base²
/// and every other generator to a distinct generator.
pub fn is_minus_two_gluing(m: &[Vec<i64>]) -> bool {
    let n = m.len();
    if n < 2 || m.iter().any(|r| r.len() != n) {
        return false;
    }
    let unit = |r: &[i64], s: i64| -> Option<usize> {
        let nz: Vec<usize> = (0..r.len()).filter(|&k| r[k] != 0).collect();
        (nz.len() == 1 && r[nz[0]] == s).then(|| nz[0])
    };
    for b in 0..n {
        let Some(beta) = unit(&m[b], -1) else { continue };
        for f in (0..n).filter(|&f| f != b) {
            let mut r = m[f].clone();
            r[beta] -= 2;
            let Some(phi) = unit(&r, 1) else { continue };
            if phi == beta {
                continue;
            }
            let mut used = vec![beta, phi];
            let rest_ok = (0..n).filter(|&x| x != b && x != f).all(|x| match unit(&m[x], 1) {
                Some(c) if !used.contains(&c) => {
                    used.push(c);
                    true
                }
                _ => false,
            });
            if rest_ok {
                return true;
            }
        }
    }
    false
}

fn touches_framing(q: &Quiver, a: usize) -> bool {
    q.vertices[q.arrows[a].head].framing || q.vertices[q.arrows[a].tail].framing
}

/// Drops the terms of `s` that pass through a framing vertex.
fn strip_framing(alg: &QuiverAlgebra<Rational>, s: &str) -> Result<String, StackError> {
    let q = &alg.quiver;
    let mut r = Element::zero();
    for (p, x) in &alg.parse(s)?.terms {
        let through = match p {
            Path::Id(v) => q.vertices[*v as usize].framing,
            Path::Seq(w) => w.iter().any(|&a| touches_framing(q, a as usize)),
        };
        if !through {
            r = r.add(&Element::term(p.clone(), x.clone()));
        }
    }
    Ok(if r.is_zero() { "0".into() } else { alg.show(&r) })
}

fn strip_map(m: &mut MapSpec, src: &QuiverAlgebra<Rational>, tgt: &QuiverAlgebra<Rational>) -> Result<(), StackError> {
    let sq = &src.quiver;
    let framed_vertex = |id: &str| sq.vertex(id).is_ok_and(|v| sq.vertices[v].framing);
    m.vertex_map.retain(|(s, _)| !framed_vertex(s));
    m.rank.retain(|(s, _)| !framed_vertex(s));
    m.images.retain(|(a, _)| sq.arrow(a).is_ok_and(|x| !touches_framing(sq, x)));
    for (_, rows) in m.images.iter_mut() {
        for e in rows.iter_mut().flatten() {
            *e = strip_framing(tgt, e)?;
        }
    }
    Ok(())
}

/// Removes framing vertices, arrows touching them and every term through them.
pub fn unframe(d: &StackDescriptor) -> Result<StackDescriptor, StackError> {
    let full: Vec<QuiverAlgebra<Rational>> = (0..d.charts.len()).map(|i| full_algebra(d, i)).collect::<Result<_, _>>()?;
    let mut out = d.clone();
    for (i, c) in out.charts.iter_mut().enumerate() {
        let framing: Vec<String> = c.algebra.vertices.iter().filter(|v| v.framing).map(|v| v.id.clone()).collect();
        c.algebra.vertices.retain(|v| !v.framing);
        c.algebra.arrows.retain(|a| !framing.contains(&a.head) && !framing.contains(&a.tail));
        let rels = c.algebra.relations.iter().map(|r| strip_framing(&full[i], r)).collect::<Result<Vec<_>, _>>()?;
        c.algebra.relations = rels.into_iter().filter(|r| r != "0").collect();
        if let Some(m) = c.to_center.as_mut() {
            strip_map(m, &full[i], &full[0])?;
        }
        if let Some(m) = c.from_center.as_mut() {
            strip_map(m, &full[0], &full[i])?;
        }
        c.gerbe.retain(|e| full[0].quiver.vertex(&e.vertex).is_ok_and(|v| !full[0].quiver.vertices[v].framing));
        for e in c.gerbe.iter_mut() {
            for x in e.c.iter_mut().chain(e.c_inv.iter_mut()).flatten() {
                *x = strip_framing(&full[0], x)?;
            }
        }
    }
    for t in out.transitions.iter_mut() {
        if let TransitionSpec::Explicit { to, from, map } = t {
            strip_map(map, &full[*from], &full[*to])?;
        }
    }
    out.name = format!("{} (unframed)", d.name);
    out.identities.clear();
    Ok(out)
}

/// Chart `i` with every localization any overlap attaches to it.
fn full_algebra(d: &StackDescriptor, i: usize) -> Result<QuiverAlgebra<Rational>, StackError> {
    let spec = d.charts.get(i).ok_or(StackError::UnknownOpen(i))?;
    let extra: Vec<&LocSpec> = d.overlaps.iter().filter(|o| o.chart == i).flat_map(|o| o.localize.iter()).collect();
    Ok(spec.algebra.build(&extra)?)
}

/// Entries where the transitions of `a` and `b` differ modulo the target
/// ideal of `b`, compared on every pair of opens in the intersections of `a`.
pub fn compare_transitions(a: &StackDescriptor, b: &StackDescriptor, effort: usize) -> Result<Vec<String>, StackError> {
    let va = Verifier::<Rational>::new(a, 0);
    let vb = Verifier::<Rational>::new(b, 0);
    let mut out = Vec::new();
    for t in tuples(&a.intersections, 2) {
        let (i, j) = (t[0], t[1]);
        let ctx = ctx_of(&[i, j]);
        let (ga, gb) = (va.rep(i, j, &ctx)?, vb.rep(i, j, &ctx)?);
        let (sa, ta, tb) = (va.alg(j, &ctx)?, va.alg(i, &ctx)?, vb.alg(i, &ctx)?);
        let sb = vb.alg(j, &ctx)?;
        for (x, arrow) in sb.quiver.arrows.iter().enumerate() {
            let Ok(y) = sa.quiver.arrow(&arrow.id) else {
                out.push(format!("G({},{}): `{}` missing", va.name(i), va.name(j), arrow.id));
                continue;
            };
            let (ma, mb) = (&ga.arrows[y], &gb.arrows[x]);
            let same = ma.shape() == mb.shape()
                && (0..ma.rows).all(|r| {
                    (0..ma.cols).all(|c| {
                        let s = ta.show(ma.get(r, c));
                        let e = if ma.get(r, c).is_zero() { Ok(Element::zero()) } else { tb.parse(&s) };
                        e.is_ok_and(|e| tb.equal_mod(&e, mb.get(r, c), effort))
                    })
                });
            if !same {
                out.push(format!("G({},{})({})", va.name(i), va.name(j), arrow.id));
            }
        }
    }
    Ok(out)
}

fn vtx(id: impl Into<String>) -> VertexSpec {
    VertexSpec { id: id.into(), framing: false }
}

fn arr(id: impl Into<String>, tail: impl Into<String>, head: impl Into<String>) -> ArrowSpec {
    ArrowSpec { id: id.into(), tail: tail.into(), head: head.into() }
}

fn m1(s: impl Into<String>) -> Vec<Vec<String>> {
    vec![vec![s.into()]]
}

fn img(a: impl Into<String>, s: impl Into<String>) -> (String, Vec<Vec<String>>) {
    (a.into(), m1(s))
}

fn gerbe1(v: impl Into<String>, c: impl Into<String>, ci: impl Into<String>) -> GerbeEntry {
    GerbeEntry { vertex: v.into(), c: m1(c), c_inv: m1(ci) }
}

fn word(xs: &[String], empty: &str) -> String {
    if xs.is_empty() {
        empty.to_string()
    } else {
        xs.join(" ")
    }
}

/// Resolution of C²/Z_{n+1}: the central chart is the preprojective algebra
/// of the cyclic quiver with n+1 vertices, one commutative chart per vertex
/// and, if requested, the torus charts U_0i'.
pub fn builtin_an_stack(n: usize, torus: bool) -> StackDescriptor {
    let m = n + 1;
    let u = |j: usize| format!("uL{j}");
    let v = |j: usize| format!("vL{j}");
    let inv = |s: String| format!("{s}.inv");
    let next = |j: usize| j % m + 1;
    let prev = |j: usize| if j == 1 { m } else { j - 1 };
    let mut center = AlgebraSpec { vertices: (1..=m).map(|k| vtx(k.to_string())).collect(), arrows: vec![], relations: vec![], localize: vec![] };
    for j in 1..=m {
        center.arrows.push(arr(u(j), j.to_string(), next(j).to_string()));
        center.arrows.push(arr(v(j), next(j).to_string(), j.to_string()));
    }
    for k in 1..=m {
        center.relations.push(format!("{} {} - {} {}", v(k), u(k), u(prev(k)), v(prev(k))));
    }
    let mut charts = vec![ChartSpec { open: "U0".into(), algebra: center, to_center: None, from_center: None, gerbe: vec![], commutative: false }];
    let mut overlaps = Vec::new();
    // c(k): path from k to 1 through localized arrows of chart i (k ≤ split: v's, else u's)
    let gerbe_at = |k: usize, split: usize| -> GerbeEntry {
        if k == 1 {
            gerbe1("1", "e_1", "e_1")
        } else if k <= split {
            let c: Vec<String> = (1..k).map(v).collect();
            let ci: Vec<String> = (1..k).rev().map(|j| inv(v(j))).collect();
            gerbe1(k.to_string(), word(&c, "e_1"), word(&ci, "e_1"))
        } else {
            let c: Vec<String> = (k..=m).rev().map(u).collect();
            let ci: Vec<String> = (k..=m).map(|j| inv(u(j))).collect();
            gerbe1(k.to_string(), word(&c, "e_1"), word(&ci, "e_1"))
        }
    };
    let all_to_c: Vec<(String, String)> = (1..=m).map(|k| (k.to_string(), "c".to_string())).collect();
    for i in 1..=m {
        let (ui, vi) = (format!("u{i}"), format!("v{i}"));
        let algebra = AlgebraSpec {
            vertices: vec![vtx("c")],
            arrows: vec![arr(&ui, "c", "c"), arr(&vi, "c", "c")],
            relations: vec![format!("{ui} {vi} - {vi} {ui}")],
            localize: vec![],
        };
        let mut up: Vec<String> = (i + 1..=m).rev().map(u).collect();
        up.push(u(i));
        up.extend((1..i).rev().map(|j| inv(v(j))));
        let mut vp: Vec<String> = (1..=i).map(v).collect();
        vp.extend((i + 1..=m).map(|j| inv(u(j))));
        let to_center = MapSpec { vertex_map: vec![("c".into(), "1".into())], rank: vec![], images: vec![img(&ui, up.join(" ")), img(&vi, vp.join(" "))] };
        let mut images = Vec::new();
        for j in 1..=m {
            let (uj, vj) = match j.cmp(&i) {
                std::cmp::Ordering::Less => (format!("{vi} {ui}"), "e_c".to_string()),
                std::cmp::Ordering::Equal => (ui.clone(), vi.clone()),
                std::cmp::Ordering::Greater => ("e_c".to_string(), format!("{ui} {vi}")),
            };
            images.push(img(u(j), uj));
            images.push(img(v(j), vj));
        }
        let from_center = MapSpec { vertex_map: all_to_c.clone(), rank: vec![], images };
        let gerbe = (1..=m).map(|k| gerbe_at(k, i)).collect();
        charts.push(ChartSpec { open: format!("U{i}"), algebra, to_center: Some(to_center), from_center: Some(from_center), gerbe, commutative: true });
        let mut set: Vec<LocSpec> = (1..i).map(|j| LocSpec::scalar(v(j), inv(v(j)))).collect();
        set.extend((i + 1..=m).map(|j| LocSpec::scalar(u(j), inv(u(j)))));
        overlaps.push(OverlapSpec { chart: 0, with: vec![i], localize: set });
        for k in 1..=m {
            if k == i {
                continue;
            }
            // the chart-i coordinates invertible on U_i ∩ U_k
            let loc = if k == i + 1 {
                vec![LocSpec::scalar(&vi, inv(vi.clone()))]
            } else if i == k + 1 {
                vec![LocSpec::scalar(&ui, inv(ui.clone()))]
            } else {
                vec![LocSpec::scalar(&ui, inv(ui.clone())), LocSpec::scalar(&vi, inv(vi.clone()))]
            };
            overlaps.push(OverlapSpec { chart: i, with: vec![k], localize: loc });
            if k >= i + 2 {
                let all: Vec<LocSpec> = (1..=m).flat_map(|j| [LocSpec::scalar(u(j), inv(u(j))), LocSpec::scalar(v(j), inv(v(j)))]).collect();
                overlaps.push(OverlapSpec { chart: 0, with: vec![i, k], localize: all });
            }
        }
    }
    let mut transitions = Vec::new();
    for i in 1..=m {
        for k in 1..=m {
            if i != k {
                transitions.push(TransitionSpec::ViaCenter { to: i, from: k });
            }
        }
    }
    let mut intersections = vec![(0..=m).collect::<Vec<_>>()];
    if torus {
        for i in 1..=n {
            let idx = charts.len();
            let (x, y) = (format!("x{i}"), format!("y{i}"));
            let algebra = AlgebraSpec {
                vertices: vec![vtx("c")],
                arrows: vec![arr(&x, "c", "c"), arr(&y, "c", "c")],
                relations: vec![format!("{x} {y} - {y} {x}")],
                localize: vec![LocSpec::scalar(&y, inv(y.clone()))],
            };
            let mut xp: Vec<String> = (1..=i + 1).map(v).collect();
            xp.push(u(i + 1));
            xp.extend((1..=i).rev().map(|j| inv(v(j))));
            let mut yp: Vec<String> = (1..=i).map(v).collect();
            yp.extend((i + 1..=m).map(|j| inv(u(j))));
            let to_center = MapSpec {
                vertex_map: vec![("c".into(), "1".into())],
                rank: vec![],
                images: vec![img(&x, format!("{} + e_1", xp.join(" "))), img(&y, yp.join(" "))],
            };
            let xm = format!("{x} - e_c");
            let mut images = Vec::new();
            for j in 1..=m {
                let (uj, vj) = if j <= i {
                    (xm.clone(), "e_c".to_string())
                } else if j == i + 1 {
                    (inv(y.clone()), format!("({xm}) {y}"))
                } else {
                    ("e_c".to_string(), xm.clone())
                };
                images.push(img(u(j), uj));
                images.push(img(v(j), vj));
            }
            let from_center = MapSpec { vertex_map: all_to_c.clone(), rank: vec![], images };
            let gerbe = (1..=m).map(|k| gerbe_at(k, i + 1)).collect();
            charts.push(ChartSpec {
                open: format!("U0{i}'"),
                algebra,
                to_center: Some(to_center),
                from_center: Some(from_center),
                gerbe,
                commutative: true,
            });
            let mut set: Vec<LocSpec> = (1..=i).map(|j| LocSpec::scalar(v(j), inv(v(j)))).collect();
            set.extend((i + 1..=m).map(|j| LocSpec::scalar(u(j), inv(u(j)))));
            overlaps.push(OverlapSpec { chart: 0, with: vec![idx], localize: set });
            intersections.push(vec![0, idx]);
        }
    }
    StackDescriptor {
        schema_version: STACK_SCHEMA_VERSION,
        name: if torus { format!("A{n} with torus charts") } else { format!("A{n}") },
        charts,
        overlaps,
        transitions,
        intersections,
        tetrahedra: true,
        identities: vec![],
    }
}

/// The A1 stack with one framing vertex at each vertex of the central chart.
pub fn builtin_framed_a1_stack() -> StackDescriptor {
    let fv = |id: &str| VertexSpec { id: id.into(), framing: true };
    let center = AlgebraSpec {
        vertices: vec![vtx("1"), vtx("2"), fv("f1"), fv("f2")],
        arrows: vec![
            arr("uL1", "1", "2"),
            arr("vL1", "2", "1"),
            arr("uL2", "2", "1"),
            arr("vL2", "1", "2"),
            arr("i1", "f1", "1"),
            arr("j1", "1", "f1"),
            arr("i2", "f2", "2"),
            arr("j2", "2", "f2"),
        ],
        relations: vec!["vL1 uL1 - uL2 vL2 + i1 j1".into(), "vL2 uL2 - uL1 vL1 + i2 j2".into()],
        localize: vec![],
    };
    let mut charts = vec![ChartSpec { open: "U0".into(), algebra: center, to_center: None, from_center: None, gerbe: vec![], commutative: false }];
    let vmap_to = vec![("c".to_string(), "1".to_string()), ("f1".into(), "f1".into()), ("f2".into(), "f2".into())];
    let vmap_from = vec![("1".to_string(), "c".to_string()), ("2".into(), "c".into()), ("f1".into(), "f1".into()), ("f2".into(), "f2".into())];
    for k in 1..=2usize {
        let (u, v) = (format!("u{k}"), format!("v{k}"));
        let algebra = AlgebraSpec {
            vertices: vec![vtx("c"), fv("f1"), fv("f2")],
            arrows: vec![
                arr(&u, "c", "c"),
                arr(&v, "c", "c"),
                arr(format!("i{k}1"), "f1", "c"),
                arr(format!("j{k}1"), "c", "f1"),
                arr(format!("i{k}2"), "f2", "c"),
                arr(format!("j{k}2"), "c", "f2"),
            ],
            relations: vec![format!("{v} {u} - {u} {v} + i{k}1 j{k}1 + i{k}2 j{k}2")],
            localize: vec![],
        };
        let (to, from, gerbe) = if k == 1 {
            (
                vec![
                    img("u1", "uL2 uL1"),
                    img("v1", "vL1 uL2.inv"),
                    img("i11", "i1"),
                    img("j11", "j1"),
                    img("i12", "uL2 i2"),
                    img("j12", "j2 uL2.inv"),
                ],
                vec![
                    img("uL1", "u1"),
                    img("vL1", "v1"),
                    img("uL2", "e_c"),
                    img("vL2", "v1 u1 + i11 j11"),
                    img("i1", "i11"),
                    img("j1", "j11"),
                    img("i2", "i12"),
                    img("j2", "j12"),
                ],
                vec![gerbe1("2", "uL2", "uL2.inv")],
            )
        } else {
            (
                vec![
                    img("u2", "uL2 vL1.inv"),
                    img("v2", "vL1 vL2"),
                    img("i21", "i1"),
                    img("j21", "j1"),
                    img("i22", "vL1 i2"),
                    img("j22", "j2 vL1.inv"),
                ],
                vec![
                    img("uL2", "u2"),
                    img("vL2", "v2"),
                    img("uL1", "u2 v2 - i21 j21"),
                    img("vL1", "e_c"),
                    img("i1", "i21"),
                    img("j1", "j21"),
                    img("i2", "i22"),
                    img("j2", "j22"),
                ],
                vec![gerbe1("2", "vL1", "vL1.inv")],
            )
        };
        charts.push(ChartSpec {
            open: format!("U{k}"),
            algebra,
            to_center: Some(MapSpec { vertex_map: vmap_to.clone(), rank: vec![], images: to }),
            from_center: Some(MapSpec { vertex_map: vmap_from.clone(), rank: vec![], images: from }),
            gerbe,
            commutative: false,
        });
    }
    let overlaps = vec![
        OverlapSpec { chart: 0, with: vec![1], localize: vec![LocSpec::scalar("uL2", "uL2.inv")] },
        OverlapSpec { chart: 0, with: vec![2], localize: vec![LocSpec::scalar("vL1", "vL1.inv")] },
        OverlapSpec { chart: 1, with: vec![2], localize: vec![LocSpec::scalar("v1", "v1.inv")] },
        OverlapSpec { chart: 2, with: vec![1], localize: vec![LocSpec::scalar("u2", "u2.inv")] },
    ];
    StackDescriptor {
        schema_version: STACK_SCHEMA_VERSION,
        name: "framed A1".into(),
        charts,
        overlaps,
        transitions: vec![TransitionSpec::ViaCenter { to: 1, from: 2 }, TransitionSpec::ViaCenter { to: 2, from: 1 }],
        intersections: vec![vec![0, 1, 2]],
        tetrahedra: true,
        identities: vec![],
    }
}

/// One D4 chart: leaves (p,q,r) and the generator names playing the roles of
/// X, Y, Z in XY = (X+1)Z (unprimed) or XY = (XY²−1)Z (primed).
struct D4Chart {
    p: usize,
    q: usize,
    r: usize,
    x: String,
    y: String,
    z: String,
    primed: bool,
}

impl D4Chart {
    fn spec(&self, open: String) -> ChartSpec {
        let (p, q, r) = (self.p, self.q, self.r);
        let (x, y, z) = (&self.x, &self.y, &self.z);
        let gens = [x, y, z];
        let mut relations = vec![format!("{x} {y} - {y} {x}"), format!("{x} {z} - {z} {x}"), format!("{y} {z} - {z} {y}")];
        relations.push(if self.primed { format!("{x} {y} - ({x} {y} {y} - 1) {z}") } else { format!("{x} {y} - ({x} + 1) {z}") });
        let algebra =
            AlgebraSpec { vertices: vec![vtx("c")], arrows: gens.iter().map(|g| arr(g.as_str(), "c", "c")).collect(), relations, localize: vec![] };
        let to = if self.primed {
            vec![
                img(x, format!("al1_{p} a{q} b{q} a{p} b{p} a1")),
                img(y, format!("j{q} b{q} a1")),
                img(z, format!("i{r} b{r} a{p} b{p} a1")),
                img(format!("{y}.inv"), format!("i{q} b{q} a{p} b{p} a1")),
            ]
        } else {
            vec![
                img(x, format!("i{p} al{p}_{p} a{q} b{q} a1")),
                img(y, format!("i{q} b{q} a{p} b{p} a1")),
                img(z, format!("i{r} b{r} a{p} b{p} a1")),
                img(format!("{y}.inv"), format!("j{q} b{q} a1")),
                img(format!("{x}.inv"), format!("i{q} al{q}_{q} a{p} b{p} a1")),
                img(format!("{x}p1.inv"), format!("-i{r} al{r}_{r} a{p} b{p} a1")),
            ]
        };
        let col = |a: &str, b: &str| vec![vec![a.to_string()], vec![b.to_string()]];
        let row = |a: &str, b: &str| vec![vec![a.to_string(), b.to_string()]];
        let mut from = vec![
            ("a1".to_string(), col("1", "0")),
            (format!("a{p}"), col("0", "1")),
            (format!("b{p}"), row("1", "0")),
            (format!("b{r}"), row("1", z)),
            (format!("al1_{p}"), row("1", "0")),
            (format!("al{p}_{p}"), row("0", "1")),
        ];
        if self.primed {
            let mm = format!("{y} {x} {y} - 1");
            from.push((format!("a{q}"), col(x, &format!("-{y} {x}"))));
            from.push((format!("a{r}"), col(&format!("-{z} ({mm})"), &mm)));
            from.push(("b1".into(), row("0", &format!("{z} {x} {y} - {x}"))));
            from.push((format!("b{q}"), row(y, "1")));
        } else {
            from.push((format!("a{q}"), col(&format!("-{y} {x}"), x)));
            from.push((format!("a{r}"), col(&format!("{y} {x}"), &format!("-{x} - 1"))));
            from.push(("b1".into(), row("0", &format!("{y} {x} {y} - {y} {x} {z}"))));
            from.push((format!("b{q}"), row("1", y)));
            from.push((format!("al1_{q}"), row("1", y)));
            from.push((format!("al{q}_{q}"), row("0", &format!("{x}.inv"))));
            from.push((format!("al1_{r}"), row("1", &format!("{y} {x} {x}p1.inv"))));
            from.push((format!("al{r}_{r}"), row("0", &format!("-{x}p1.inv"))));
        }
        let gerbe = vec![
            GerbeEntry {
                vertex: "0".into(),
                c: vec![vec![format!("al1_{p}")], vec![format!("i{p} al{p}_{p}")]],
                c_inv: vec![vec!["a1".into(), format!("a{p} b{p} a1")]],
            },
            gerbe1(p.to_string(), format!("i{p}"), format!("b{p} a1")),
            if self.primed {
                gerbe1(q.to_string(), format!("j{q}"), format!("b{q} a{p} b{p} a1"))
            } else {
                gerbe1(q.to_string(), format!("i{q}"), format!("b{q} a1"))
            },
            gerbe1(r.to_string(), format!("i{r}"), format!("b{r} a1")),
        ];
        ChartSpec {
            open,
            algebra,
            to_center: Some(MapSpec { vertex_map: vec![("c".into(), "1".into())], rank: vec![], images: to }),
            from_center: Some(MapSpec {
                vertex_map: (0..5).map(|k| (k.to_string(), "c".to_string())).collect(),
                rank: vec![("0".into(), 2)],
                images: from,
            }),
            gerbe,
            commutative: true,
        }
    }

    fn center_localization(&self) -> Vec<LocSpec> {
        let (p, q, r) = (self.p, self.q, self.r);
        vec![
            LocSpec::Matrix { rows: vec![vec!["a1".into(), format!("a{p}")]], names: vec![vec![format!("al1_{p}")], vec![format!("al{p}_{p}")]] },
            LocSpec::scalar(format!("b{p} a1"), format!("i{p}")),
            if self.primed {
                LocSpec::scalar(format!("b{q} a{p} b{p} a1"), format!("j{q}"))
            } else {
                LocSpec::scalar(format!("b{q} a1"), format!("i{q}"))
            },
            LocSpec::scalar(format!("b{r} a1"), format!("i{r}")),
        ]
    }
}

/// Minimal resolution of C²/binary dihedral group: the D4 preprojective
/// algebra with reference vertex 1 and six commutative charts.
pub fn builtin_d4_stack() -> StackDescriptor {
    let mut center = AlgebraSpec { vertices: (0..5).map(|k| vtx(k.to_string())).collect(), arrows: vec![], relations: vec![], localize: vec![] };
    for k in 1..=4 {
        center.arrows.push(arr(format!("a{k}"), k.to_string(), "0"));
    }
    for k in 1..=4 {
        center.arrows.push(arr(format!("b{k}"), "0", k.to_string()));
    }
    center.relations.push("a1 b1 + a2 b2 + a3 b3 + a4 b4".into());
    for k in 1..=4 {
        center.relations.push(format!("b{k} a{k}"));
    }
    let mut charts = vec![ChartSpec { open: "U0".into(), algebra: center, to_center: None, from_center: None, gerbe: vec![], commutative: false }];
    // leaves and the names of the (X, Y, Z) roles for charts 2, 3, 4
    let roles = [(2, 3, 4, ["X2", "Y2", "Z2"]), (3, 4, 2, ["X3", "Z3", "Y3"]), (4, 2, 3, ["X4", "Y4", "Z4"])];
    let mut overlaps = Vec::new();
    let mut transitions = Vec::new();
    let mut intersections = Vec::new();
    let mut unprimed = Vec::new();
    for (p, q, r, names) in roles {
        let mk = |primed: bool| D4Chart {
            p,
            q,
            r,
            x: format!("{}{}", names[0], if primed { "'" } else { "" }),
            y: format!("{}{}", names[1], if primed { "'" } else { "" }),
            z: format!("{}{}", names[2], if primed { "'" } else { "" }),
            primed,
        };
        let (c, cp) = (mk(false), mk(true));
        let (ic, icp) = (charts.len(), charts.len() + 1);
        charts.push(c.spec(format!("U{p}")));
        charts.push(cp.spec(format!("U{p}'")));
        overlaps.push(OverlapSpec { chart: 0, with: vec![ic], localize: c.center_localization() });
        overlaps.push(OverlapSpec { chart: 0, with: vec![icp], localize: cp.center_localization() });
        overlaps.push(OverlapSpec { chart: ic, with: vec![icp], localize: vec![LocSpec::scalar(&c.y, format!("{}.inv", c.y))] });
        overlaps.push(OverlapSpec { chart: icp, with: vec![ic], localize: vec![LocSpec::scalar(&cp.y, format!("{}.inv", cp.y))] });
        let vm = vec![("c".to_string(), "c".to_string())];
        transitions.push(TransitionSpec::Explicit {
            to: ic,
            from: icp,
            map: MapSpec {
                vertex_map: vm.clone(),
                rank: vec![],
                images: vec![
                    img(&cp.x, format!("-{} {} {}", c.x, c.y, c.y)),
                    img(&cp.y, format!("{}.inv", c.y)),
                    img(&cp.z, &c.z),
                    img(format!("{}.inv", cp.y), &c.y),
                ],
            },
        });
        transitions.push(TransitionSpec::Explicit {
            to: icp,
            from: ic,
            map: MapSpec {
                vertex_map: vm,
                rank: vec![],
                images: vec![
                    img(&c.x, format!("-{} {} {}", cp.x, cp.y, cp.y)),
                    img(&c.y, format!("{}.inv", cp.y)),
                    img(&c.z, &cp.z),
                    img(format!("{}.inv", c.y), &cp.y),
                ],
            },
        });
        intersections.push(vec![0, ic, icp]);
        unprimed.push(ic);
    }
    let (i2, i3) = (unprimed[0], unprimed[1]);
    overlaps.push(OverlapSpec { chart: i2, with: vec![i3], localize: vec![LocSpec::scalar("X2", "X2.inv")] });
    overlaps.push(OverlapSpec { chart: i3, with: vec![i2], localize: vec![LocSpec::scalar("X3 + 1", "X3p1.inv")] });
    transitions.push(TransitionSpec::ViaCenter { to: i3, from: i2 });
    transitions.push(TransitionSpec::ViaCenter { to: i2, from: i3 });
    intersections.push(vec![0, i2, i3]);
    let identities = vec![IdentitySpec {
        label: "G02(X2)·G02(Y2)".into(),
        context: vec![i2],
        chart: 0,
        lhs: "i2 al2_2 a3 b3 a1 i3 b3 a2 b2 a1".into(),
        rhs: "-i2 b2 a3 b3 a1".into(),
    }];
    StackDescriptor {
        schema_version: STACK_SCHEMA_VERSION,
        name: "D4".into(),
        charts,
        overlaps,
        transitions,
        intersections,
        tetrahedra: false,
        identities,
    }
}

/// `an:<n>`, `an-torus:<n>`, `d4` or `framed-a1`.
pub fn builtin_stack(name: &str) -> Result<StackDescriptor, StackError> {
    let bad = || StackError::UnknownBuiltin(name.to_string());
    if let Some(n) = name.strip_prefix("an-torus:") {
        let n: usize = n.parse().map_err(|_| bad())?;
        return if n >= 1 { Ok(builtin_an_stack(n, true)) } else { Err(bad()) };
    }
    if let Some(n) = name.strip_prefix("an:") {
        let n: usize = n.parse().map_err(|_| bad())?;
        return if n >= 1 { Ok(builtin_an_stack(n, false)) } else { Err(bad()) };
    }
    match name {
        "d4" => Ok(builtin_d4_stack()),
        "framed-a1" => Ok(builtin_framed_a1_stack()),
        _ => Err(bad()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(d: &StackDescriptor, effort: usize) -> StackReport {
        verify_stack::<Rational>(d, effort).unwrap()
    }

    fn show_failures(r: &StackReport) -> String {
        r.failing().iter().map(|l| format!("{}: {:?}", l.label, l.failures.first())).collect::<Vec<_>>().join("\n")
    }

    #[test]
    fn a1_and_a2_stacks_verify() {
        for n in 1..=2 {
            let r = report(&builtin_an_stack(n, false), 8);
            assert!(r.passed(), "A{n}:\n{}", show_failures(&r));
        }
    }

    #[test]
    fn a2_torus_charts_verify() {
        let r = report(&builtin_an_stack(2, true), 8);
        assert!(r.passed(), "{}", show_failures(&r));
    }

    #[test]
    fn an_adjacent_transition_is_minus_two_gluing() {
        let d = builtin_an_stack(3, false);
        for i in 1..=3 {
            let (src, tgt, g) = transition_in_context::<Rational>(&d, i, i + 1, &[i, i + 1]).unwrap();
            let u = src.quiver.arrow(&format!("u{}", i + 1)).unwrap();
            let v = src.quiver.arrow(&format!("v{}", i + 1)).unwrap();
            assert!(tgt.equal_mod(g.arrows[u].get(0, 0), &tgt.p(&format!("v{i}.inv")), 6));
            assert!(tgt.equal_mod(g.arrows[v].get(0, 0), &tgt.p(&format!("u{i} v{i} v{i}")), 6));
            let (_, _, m) = exponent_matrix(&g, &src, &tgt).unwrap();
            assert!(is_minus_two_gluing(&m), "{m:?}");
        }
    }

    #[test]
    fn framed_a1_verifies_and_unframes_to_a1() {
        let d = builtin_framed_a1_stack();
        let r = report(&d, 8);
        assert!(r.passed(), "{}", show_failures(&r));
        let u = unframe(&d).unwrap();
        let diff = compare_transitions(&u, &builtin_an_stack(1, false), 8).unwrap();
        assert!(diff.is_empty(), "{diff:?}");
        assert!(report(&u, 8).passed());
    }

    #[test]
    fn framed_a1_derived_transition_matches() {
        let d = builtin_framed_a1_stack();
        let (src, tgt, g) = transition_in_context::<Rational>(&d, 1, 2, &[1, 2]).unwrap();
        let img = |a: &str| g.arrows[src.quiver.arrow(a).unwrap()].get(0, 0).clone();
        assert!(tgt.equal_mod(&img("u2"), &tgt.p("v1.inv"), 6));
        assert!(tgt.equal_mod(&img("v2"), &tgt.p("v1 (v1 u1 + i11 j11)"), 6));
        assert!(tgt.equal_mod(&img("i22"), &tgt.p("v1 i12"), 6));
    }

    #[test]
    fn corrupted_gerbe_is_located() {
        let mut d = builtin_framed_a1_stack();
        d.charts[1].gerbe = vec![gerbe1("2", "2 uL2", "1/2 uL2.inv")];
        let r = report(&d, 8);
        assert!(!r.passed());
        let l = r.line("chart U1").unwrap();
        assert!(l.failures.iter().any(|f| f.what == "G0i∘Gi0(uL1)"), "{:?}", l.failures);
    }

    #[test]
    fn d4_transitions_and_sign_of_g32() {
        let d = builtin_d4_stack();
        let i2 = d.open_index("U2").unwrap();
        let i3 = d.open_index("U3").unwrap();
        let (src, tgt, g) = transition_in_context::<Rational>(&d, i3, i2, &[i2, i3]).unwrap();
        let img = |a: &str| g.arrows[src.quiver.arrow(a).unwrap()].get(0, 0).clone();
        assert!(tgt.equal_mod(&img("X2"), &tgt.p("-X3p1.inv"), 8));
        assert!(tgt.equal_mod(&img("Y2"), &tgt.p("Y3 (X3 + 1)"), 8));
        assert!(tgt.equal_mod(&img("Z2"), &tgt.p("-Z3"), 8));
        for (k, kp) in [("U2", "U2'"), ("U3", "U3'"), ("U4", "U4'")] {
            let (a, b) = (d.open_index(k).unwrap(), d.open_index(kp).unwrap());
            let (src, tgt, g) = transition_in_context::<Rational>(&d, a, b, &[a, b]).unwrap();
            let (_, _, m) = exponent_matrix(&g, &src, &tgt).unwrap();
            assert!(is_minus_two_gluing(&m), "{k}: {m:?}");
        }
    }

    #[test]
    fn g32_with_flipped_signs_breaks_the_cocycle() {
        let mut d = builtin_d4_stack();
        let i2 = d.open_index("U2").unwrap();
        let i3 = d.open_index("U3").unwrap();
        let map = MapSpec {
            vertex_map: vec![("c".into(), "c".into())],
            rank: vec![],
            images: vec![img("X2", "-X3p1.inv"), img("Y2", "-Y3 (X3 + 1)"), img("Z2", "Z3"), img("X2.inv", "-X3 - 1")],
        };
        for t in d.transitions.iter_mut() {
            if t.ends() == (i3, i2) {
                *t = TransitionSpec::Explicit { to: i3, from: i2, map: map.clone() };
            }
        }
        let r = report(&d, 10);
        assert!(r.line("G(U3,U2)").unwrap().passed());
        assert!(!r.line("(U3,U0,U2)").unwrap().passed());
    }

    #[test]
    fn corrupted_an_gerbe_fails() {
        let mut d = builtin_an_stack(2, false);
        d.charts[2].gerbe[2] = gerbe1("3", "2 uL3", "1/2 uL3.inv");
        let r = report(&d, 8);
        assert!(!r.line("chart U2").unwrap().passed());
        assert!(r.line("chart U1").unwrap().passed());
    }

    #[test]
    fn json_round_trip() {
        let d = builtin_framed_a1_stack();
        let back = StackDescriptor::from_json(&d.to_json()).unwrap();
        assert_eq!(back, d);
        let mut bad = d.clone();
        bad.schema_version = 99;
        assert!(StackDescriptor::from_json(&bad.to_json()).is_err());
    }

    #[test]
    fn minus_two_detector() {
        assert!(is_minus_two_gluing(&[vec![1, 2, 0], vec![0, -1, 0], vec![0, 0, 1]]));
        assert!(!is_minus_two_gluing(&[vec![1, 1, 0], vec![0, -1, 0], vec![0, 0, 1]]));
        assert!(is_minus_two_gluing(&[vec![0, -1], vec![1, 2]]));
    }
}
