//! JSON documents read and written by the command-line tool. Every document
//! carries `schema_version`.
//!
//! Scalars are `{num, den}`, `{re, im}` or `{novikov: [{exp, coeff}], trunc}`;
//! plain integers and strings such as `"-3/4"` are accepted on input.
//! Elements are lists of `{coeff, path}` with `path` either a list of arrow
//! ids in written order or `{e: vertex}`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::algebra::{preprojective_algebra, AlgebraError, QuiverAlgebra};
use crate::linalg::Matrix;
use crate::monad::{BimoduleOperator, FreeComplex};
use crate::path::{is_composable, Element, Path};
use crate::quiver::{adhm_quiver, double_quiver, frame_double, DoubleQuiver, Graph, Orientation, Quiver, QuiverError};
use crate::representation::{MatrixRep, RepError};
use crate::scalar::{GaussRat, Novikov, Rational, Scalar};
use crate::stability::{GradedSubspace, Role, Witness};
use crate::stack::{ArrowSpec, LocSpec, VertexSpec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema version {0} (expected {SCHEMA_VERSION})")]
    Schema(u32),
    #[error("bad scalar {0}")]
    Scalar(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Quiver(#[from] QuiverError),
    #[error(transparent)]
    Rep(#[from] RepError),
    #[error("{0}")]
    Invalid(String),
}

fn check_version(v: u32) -> Result<(), FormatError> {
    if v == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(FormatError::Schema(v))
    }
}

/// Scalars with a JSON encoding.
pub trait JsonScalar: Scalar {
    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> Result<Self, FormatError>;
}

fn bigint_json(n: &BigInt) -> Value {
    match n.to_i64() {
        Some(k) => json!(k),
        None => Value::String(n.to_string()),
    }
}

fn bigint_from(v: &Value) -> Option<BigInt> {
    match v {
        Value::Number(n) => n.as_i64().map(BigInt::from),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

pub fn rational_to_json(q: &Rational) -> Value {
    json!({ "num": bigint_json(q.numer()), "den": bigint_json(q.denom()) })
}

pub fn rational_from_json(v: &Value) -> Result<Rational, FormatError> {
    let bad = || FormatError::Scalar(v.to_string());
    match v {
        Value::Number(_) => Ok(Rational::from_integer(bigint_from(v).ok_or_else(bad)?)),
        Value::String(s) => parse_rational(s).ok_or_else(bad),
        Value::Object(m) => {
            let num = m.get("num").and_then(bigint_from).ok_or_else(bad)?;
            let den = m.get("den").map_or(Some(BigInt::from(1)), bigint_from).ok_or_else(bad)?;
            if den == BigInt::from(0) {
                return Err(bad());
            }
            Ok(Rational::new(num, den))
        }
        _ => Err(bad()),
    }
}

/// "p" or "p/q".
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let q: BigInt = q.trim().parse().ok()?;
            if q == BigInt::from(0) {
                return None;
            }
            Some(Rational::new(p.trim().parse().ok()?, q))
        }
        None => Some(Rational::from_integer(s.parse().ok()?)),
    }
}

impl JsonScalar for Rational {
    fn to_json(&self) -> Value {
        rational_to_json(self)
    }

    fn from_json(v: &Value) -> Result<Self, FormatError> {
        if v.get("re").is_some() || v.get("novikov").is_some() {
            let g = GaussRat::from_json(v).map_err(|_| FormatError::Scalar(v.to_string()))?;
            if !num_traits::Zero::is_zero(&g.im) {
                return Err(FormatError::Scalar(format!("{v} is not rational")));
            }
            return Ok(g.re);
        }
        rational_from_json(v)
    }
}

impl JsonScalar for GaussRat {
    fn to_json(&self) -> Value {
        json!({ "re": rational_to_json(&self.re), "im": rational_to_json(&self.im) })
    }

    fn from_json(v: &Value) -> Result<Self, FormatError> {
        if let Some(re) = v.get("re") {
            let im = v.get("im").map_or(Ok(Rational::from_integer(0.into())), rational_from_json)?;
            return Ok(GaussRat::new(rational_from_json(re)?, im));
        }
        if v.get("novikov").is_some() {
            let n = Novikov::from_json(v)?;
            return match n.terms.as_slice() {
                [] => Ok(GaussRat::zero()),
                [(e, c)] if num_traits::Zero::is_zero(e) => Ok(c.clone()),
                _ => Err(FormatError::Scalar(format!("{v} is not a constant"))),
            };
        }
        Ok(GaussRat::new(rational_from_json(v)?, Rational::from_integer(0.into())))
    }
}

impl JsonScalar for Novikov {
    fn to_json(&self) -> Value {
        let terms: Vec<Value> = self.terms.iter().map(|(e, c)| json!({ "exp": rational_to_json(e), "coeff": c.to_json() })).collect();
        json!({ "novikov": terms, "trunc": self.trunc.as_ref().map(rational_to_json) })
    }

    fn from_json(v: &Value) -> Result<Self, FormatError> {
        let Some(list) = v.get("novikov") else {
            return Ok(Novikov::new(vec![(Rational::from_integer(0.into()), GaussRat::from_json(v)?)], None));
        };
        let list = list.as_array().ok_or_else(|| FormatError::Scalar(v.to_string()))?;
        let mut terms = Vec::new();
        let mut last: Option<Rational> = None;
        for t in list {
            let e = rational_from_json(t.get("exp").ok_or_else(|| FormatError::Scalar(t.to_string()))?)?;
            let c = GaussRat::from_json(t.get("coeff").ok_or_else(|| FormatError::Scalar(t.to_string()))?)?;
            if last.as_ref().is_some_and(|l| *l >= e) {
                return Err(FormatError::Scalar(format!("exponents of {v} are not strictly increasing")));
            }
            last = Some(e.clone());
            terms.push((e, c));
        }
        let trunc = match v.get("trunc") {
            None | Some(Value::Null) => None,
            Some(t) => Some(rational_from_json(t)?),
        };
        if let (Some(t), Some(l)) = (&trunc, &last) {
            if l >= t {
                return Err(FormatError::Scalar(format!("exponent of {v} at or above the truncation")));
            }
        }
        Ok(Novikov::new(terms, trunc))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PathJson {
    Idempotent { e: String },
    Arrows(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub coeff: Value,
    pub path: PathJson,
}

pub fn element_to_json<K: JsonScalar>(f: &Element<K>, q: &Quiver) -> Vec<TermJson> {
    f.terms
        .iter()
        .map(|(p, c)| {
            let path = match p {
                Path::Id(v) => PathJson::Idempotent { e: q.vertices[*v as usize].id.clone() },
                Path::Seq(w) => PathJson::Arrows(w.iter().map(|&a| q.arrows[a as usize].id.clone()).collect()),
            };
            TermJson { coeff: c.to_json(), path }
        })
        .collect()
}

pub fn element_from_json<K: JsonScalar>(terms: &[TermJson], q: &Quiver) -> Result<Element<K>, FormatError> {
    let mut f = Element::zero();
    for t in terms {
        let p = match &t.path {
            PathJson::Idempotent { e } => Path::Id(q.vertex(e)? as u32),
            PathJson::Arrows(ids) if ids.is_empty() => return Err(FormatError::Invalid("empty arrow list in a path".into())),
            PathJson::Arrows(ids) => {
                let w = ids.iter().map(|id| q.arrow(id).map(|a| a as u32)).collect::<Result<Vec<_>, _>>()?;
                if !is_composable(&w, q) {
                    return Err(FormatError::Invalid(format!("path `{}` is not composable", ids.join(" "))));
                }
                Path::Seq(w)
            }
        };
        f.add_term(p, K::from_json(&t.coeff)?);
    }
    Ok(f)
}

/// An element written either as an expression or as a term list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ElementSpec {
    Expr(String),
    Terms(Vec<TermJson>),
}

impl ElementSpec {
    pub fn resolve<K: JsonScalar>(&self, a: &QuiverAlgebra<K>) -> Result<Element<K>, FormatError> {
        match self {
            ElementSpec::Expr(s) => Ok(a.parse(s)?),
            ElementSpec::Terms(t) => element_from_json(t, &a.quiver),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphDoc {
    pub schema_version: u32,
    #[serde(flatten)]
    pub graph: Graph,
}

impl GraphDoc {
    pub fn new(graph: Graph) -> Self {
        GraphDoc { schema_version: SCHEMA_VERSION, graph }
    }

    pub fn from_json(s: &str) -> Result<Self, FormatError> {
        let d: GraphDoc = serde_json::from_str(s)?;
        check_version(d.schema_version)?;
        d.graph.validate()?;
        Ok(d)
    }
}

/// A quiver with relations, optionally localized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgebraBody {
    pub vertices: Vec<VertexSpec>,
    pub arrows: Vec<ArrowSpec>,
    #[serde(default)]
    pub relations: Vec<ElementSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub localize: Vec<LocSpec>,
}

impl AlgebraBody {
    pub fn build<K: JsonScalar>(&self) -> Result<QuiverAlgebra<K>, FormatError> {
        let mut q = Quiver::new();
        for v in &self.vertices {
            q.add_vertex(&v.id, v.framing)?;
        }
        for a in &self.arrows {
            q.add_arrow(&a.id, &a.tail, &a.head)?;
        }
        let mut alg = QuiverAlgebra::free(q);
        for r in &self.relations {
            let e = r.resolve(&alg)?;
            alg.add_relation(e)?;
        }
        for l in &self.localize {
            alg = l.apply(alg)?;
        }
        Ok(alg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgebraDoc {
    pub schema_version: u32,
    #[serde(flatten)]
    pub algebra: AlgebraBody,
}

impl AlgebraDoc {
    pub fn from_json(s: &str) -> Result<Self, FormatError> {
        let d: AlgebraDoc = serde_json::from_str(s)?;
        check_version(d.schema_version)?;
        Ok(d)
    }
}

/// Where the quiver of a representation comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum QuiverSource {
    /// The framed Jordan quiver with arrows x, y, i, j.
    Adhm,
    /// The double of a graph, framed at the listed vertices; the relations
    /// are the (framed) preprojective ones.
    Double {
        graph: Graph,
        #[serde(default)]
        framing: Vec<String>,
        /// Per edge: keep endA → endB as the `+` arrow.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        orientation: Option<Vec<bool>>,
    },
    Algebra(AlgebraBody),
}

/// A resolved quiver source.
pub struct Resolved<K: Scalar> {
    pub alg: QuiverAlgebra<K>,
    pub dq: Option<DoubleQuiver>,
    pub adhm: bool,
}

impl QuiverSource {
    pub fn double(&self) -> Result<Option<DoubleQuiver>, FormatError> {
        match self {
            QuiverSource::Adhm => Ok(Some(adhm_quiver())),
            QuiverSource::Double { graph, framing, orientation } => {
                let o = orientation.clone().map_or(Orientation::Lexicographic, Orientation::Explicit);
                let d = double_quiver(graph, &o)?;
                let sel = framing.iter().map(|v| graph.index(v)).collect::<Result<Vec<_>, _>>()?;
                Ok(Some(frame_double(&d, &sel)?))
            }
            QuiverSource::Algebra(_) => Ok(None),
        }
    }

    pub fn resolve<K: JsonScalar>(&self) -> Result<Resolved<K>, FormatError> {
        let dq = self.double()?;
        let alg = match (&dq, self) {
            (Some(d), _) => preprojective_algebra(d),
            (None, QuiverSource::Algebra(b)) => b.build()?,
            (None, _) => unreachable!("only algebra sources lack a double quiver"),
        };
        Ok(Resolved { alg, dq, adhm: matches!(self, QuiverSource::Adhm) })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepDoc {
    pub schema_version: u32,
    pub quiver: QuiverSource,
    /// Missing vertices have dimension 0.
    pub dims: BTreeMap<String, usize>,
    /// Missing arrows act by zero.
    #[serde(default)]
    pub matrices: BTreeMap<String, Vec<Vec<Value>>>,
}

pub fn matrix_to_json<K: JsonScalar>(m: &Matrix<K>) -> Vec<Vec<Value>> {
    (0..m.shape().0).map(|i| m.row(i).iter().map(|c| c.to_json()).collect()).collect()
}

pub fn matrix_from_json<K: JsonScalar>(rows: &[Vec<Value>], shape: (usize, usize), what: &str) -> Result<Matrix<K>, FormatError> {
    if rows.len() != shape.0 || rows.iter().any(|r| r.len() != shape.1) {
        if shape.0 * shape.1 == 0 && rows.iter().all(|r| r.is_empty()) {
            return Ok(Matrix::zeros(shape.0, shape.1));
        }
        return Err(FormatError::Invalid(format!("matrix of `{what}` should be {}×{}", shape.0, shape.1)));
    }
    let data = rows.iter().map(|r| r.iter().map(K::from_json).collect::<Result<Vec<_>, _>>()).collect::<Result<Vec<_>, _>>()?;
    Ok(Matrix::from_fn(shape.0, shape.1, |i, j| data[i][j].clone()))
}

impl RepDoc {
    pub fn from_json(s: &str) -> Result<Self, FormatError> {
        let d: RepDoc = serde_json::from_str(s)?;
        check_version(d.schema_version)?;
        Ok(d)
    }

    pub fn build<K: JsonScalar>(&self) -> Result<(Resolved<K>, MatrixRep<K>), FormatError> {
        let r = self.quiver.resolve::<K>()?;
        let q = &r.alg.quiver;
        for v in self.dims.keys() {
            q.vertex(v)?;
        }
        for a in self.matrices.keys() {
            q.arrow(a)?;
        }
        let dims: Vec<usize> = q.vertices.iter().map(|v| self.dims.get(&v.id).copied().unwrap_or(0)).collect();
        let mut rho = MatrixRep::zero(q, &dims);
        for (a, arrow) in q.arrows.iter().enumerate() {
            if let Some(rows) = self.matrices.get(&arrow.id) {
                rho.mats[a] = matrix_from_json(rows, (dims[arrow.head], dims[arrow.tail]), &arrow.id)?;
            }
        }
        Ok((r, rho))
    }

    pub fn from_rep<K: JsonScalar>(quiver: QuiverSource, q: &Quiver, rho: &MatrixRep<K>) -> Self {
        RepDoc {
            schema_version: SCHEMA_VERSION,
            quiver,
            dims: q.vertices.iter().zip(&rho.dims).map(|(v, &d)| (v.id.clone(), d)).collect(),
            matrices: q.arrows.iter().zip(&rho.mats).map(|(a, m)| (a.id.clone(), matrix_to_json(m))).collect(),
        }
    }
}

/// A graded subspace given by spanning vectors per vertex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessDoc {
    pub schema_version: u32,
    pub role: Role,
    #[serde(default)]
    pub strict: bool,
    pub basis: BTreeMap<String, Vec<Vec<Value>>>,
}

impl WitnessDoc {
    pub fn from_json(s: &str) -> Result<Self, FormatError> {
        let d: WitnessDoc = serde_json::from_str(s)?;
        check_version(d.schema_version)?;
        Ok(d)
    }

    pub fn from_witness<K: JsonScalar>(w: &Witness<K>, q: &Quiver) -> Self {
        let basis = q
            .vertices
            .iter()
            .zip(&w.subspace.basis)
            .filter(|(_, b)| !b.is_empty())
            .map(|(v, b)| (v.id.clone(), b.iter().map(|x| x.iter().map(|c| c.to_json()).collect()).collect()))
            .collect();
        WitnessDoc { schema_version: SCHEMA_VERSION, role: w.role, strict: w.strict, basis }
    }

    /// Vectors are kept as given (not reduced) so that dependent input can be
    /// reported.
    pub fn to_witness<K: JsonScalar>(&self, q: &Quiver, dims: &[usize]) -> Result<Witness<K>, FormatError> {
        let mut s = GradedSubspace::zero(q.n_vertices());
        for (v, vecs) in &self.basis {
            let k = q.vertex(v)?;
            for x in vecs {
                if x.len() != dims[k] {
                    return Err(FormatError::Invalid(format!("vector at `{v}` should have length {}", dims[k])));
                }
                s.basis[k].push(x.iter().map(K::from_json).collect::<Result<Vec<_>, _>>()?);
            }
        }
        Ok(Witness { role: self.role, subspace: s, strict: self.strict })
    }
}

fn operator_json<K: JsonScalar>(op: &BimoduleOperator<K>, q: &Quiver) -> Value {
    let terms: Vec<Value> =
        op.terms.iter().map(|(l, r)| json!({ "left": matrix_to_json(l), "right": element_to_json(r, q) })).collect();
    json!({ "rows": op.rows, "cols": op.cols, "terms": terms })
}

/// Terms and nonzero operator pairs of a complex.
pub fn complex_to_json<K: JsonScalar>(c: &FreeComplex<K>) -> Value {
    let q = &c.coeff.quiver;
    let slots = |k: usize| -> Vec<Value> {
        c.terms[k].iter().map(|s| json!({ "label": s.label, "vertex": q.vertices[s.vertex].id, "mult": s.mult })).collect()
    };
    let ops = |d: &[Vec<BimoduleOperator<K>>], src: usize, tgt: usize| -> Vec<Value> {
        let mut out = Vec::new();
        for (ti, row) in d.iter().enumerate() {
            for (si, op) in row.iter().enumerate() {
                if !op.is_zero() {
                    out.push(json!({
                        "from": c.terms[src][si].label,
                        "to": c.terms[tgt][ti].label,
                        "operator": operator_json(op, q),
                    }));
                }
            }
        }
        out
    };
    json!({
        "schema_version": SCHEMA_VERSION,
        "terms": [slots(0), slots(1), slots(2)],
        "d0": ops(&c.d0, 0, 1),
        "d1": ops(&c.d1, 1, 2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    #[test]
    fn scalar_forms() {
        assert_eq!(Rational::from_json(&json!("-3/4")).unwrap(), rat(-3, 4));
        assert_eq!(Rational::from_json(&json!(5)).unwrap(), rat(5, 1));
        assert_eq!(Rational::from_json(&json!({"num": 2, "den": 6})).unwrap(), rat(1, 3));
        assert!(Rational::from_json(&json!({"re": 0, "im": 1})).is_err());
        assert!(Rational::from_json(&json!({"num": 1, "den": 0})).is_err());
        let n = Novikov::from_json(&json!({"novikov": [{"exp": "1/2", "coeff": 3}], "trunc": 4})).unwrap();
        assert_eq!(Novikov::from_json(&n.to_json()).unwrap(), n);
        assert!(Novikov::from_json(&json!({"novikov": [{"exp": 2, "coeff": 1}, {"exp": 1, "coeff": 1}]})).is_err());
        assert!(Novikov::from_json(&json!({"novikov": [{"exp": 5, "coeff": 1}], "trunc": 4})).is_err());
    }

    #[test]
    fn elements_round_trip() {
        let q = adhm_quiver().quiver;
        let mut a = QuiverAlgebra::<Rational>::free(q.clone());
        a.add_relation(a.p("x y - y x + i j")).unwrap();
        let f = a.p("1/2 x y - 3 e_0 + i j");
        let js = element_to_json(&f, &q);
        assert_eq!(element_from_json::<Rational>(&js, &q).unwrap(), f);
        let bad = vec![TermJson { coeff: json!(1), path: PathJson::Arrows(vec!["i".into(), "x".into()]) }];
        assert!(element_from_json::<Rational>(&bad, &q).is_err());
    }

    #[test]
    fn schema_version_is_checked() {
        let s = r#"{"schema_version": 2, "vertices": [], "edges": []}"#;
        assert!(matches!(GraphDoc::from_json(s), Err(FormatError::Schema(2))));
    }
}
