//! Quiver algebras kQ/R with localization bookkeeping, ideal membership,
//! normal forms, substitutions and graded derivations.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::groebner::GbRun;
use crate::path::{Element, Path};
use crate::quiver::{DoubleQuiver, Quiver, QuiverError};
use crate::scalar::{Rational, Scalar, Valued};

#[derive(Debug, Error, PartialEq)]
pub enum AlgebraError {
    #[error(transparent)]
    Quiver(#[from] QuiverError),
    #[error("element of degree {degree} exceeds effort degree {effort}")]
    EffortTooSmall { degree: usize, effort: usize },
    #[error("element is not vertex-homogeneous: {0}")]
    NotHomogeneous(String),
    #[error("image of `{arrow}` has the wrong ends")]
    EndMismatch { arrow: String },
    #[error("d({arrow}) has degree {found}, expected {expected}")]
    DegreeMismatch { arrow: String, expected: i32, found: i32 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("row/column vertex mismatch in localization matrix")]
    MatrixShape,
}

/// Arrows adjoined by a localization: `inverse` is the n×m block of new
/// arrows inverting the m×n matrix `original`.
#[derive(Clone, Debug, PartialEq)]
pub struct InversePair<K> {
    pub inverse: Vec<Vec<usize>>,
    pub original: Vec<Vec<Element<K>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Membership {
    ProvedMember,
    NotFound,
}

pub struct QuiverAlgebra<K> {
    pub quiver: Quiver,
    pub relations: Vec<Element<K>>,
    pub inverse_pairs: Vec<InversePair<K>>,
    /// Path-length grading weight per arrow.
    pub weights: Vec<i64>,
    cache: Mutex<HashMap<usize, Arc<GbRun<K>>>>,
}

impl<K: Scalar> Clone for QuiverAlgebra<K> {
    fn clone(&self) -> Self {
        QuiverAlgebra {
            quiver: self.quiver.clone(),
            relations: self.relations.clone(),
            inverse_pairs: self.inverse_pairs.clone(),
            weights: self.weights.clone(),
            cache: Mutex::new(HashMap::new()),
        }
    }
}

impl<K: Scalar> std::fmt::Debug for QuiverAlgebra<K> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("QuiverAlgebra")
            .field("vertices", &self.quiver.vertices.iter().map(|v| &v.id).collect::<Vec<_>>())
            .field("arrows", &self.quiver.arrows.iter().map(|a| &a.id).collect::<Vec<_>>())
            .field("relations", &self.relations.iter().map(|r| self.show(r)).collect::<Vec<_>>())
            .finish()
    }
}

impl<K: Scalar> QuiverAlgebra<K> {
    pub fn free(quiver: Quiver) -> Self {
        let n = quiver.n_arrows();
        QuiverAlgebra { quiver, relations: Vec::new(), inverse_pairs: Vec::new(), weights: vec![1; n], cache: Mutex::new(HashMap::new()) }
    }

    pub fn with_relations(quiver: Quiver, relations: Vec<Element<K>>) -> Result<Self, AlgebraError> {
        let mut a = Self::free(quiver);
        for r in relations {
            a.add_relation(r)?;
        }
        Ok(a)
    }

    pub fn add_relation(&mut self, r: Element<K>) -> Result<(), AlgebraError> {
        if !r.is_homogeneous(&self.quiver) {
            return Err(AlgebraError::NotHomogeneous(self.show(&r)));
        }
        if !r.is_zero() {
            self.relations.push(r);
        }
        self.cache.lock().unwrap().clear();
        Ok(())
    }

    /// Adds a new arrow (e.g. when extending a quiver); clears cached bases.
    pub fn add_arrow(&mut self, id: &str, tail: usize, head: usize, degree: i32) -> Result<usize, AlgebraError> {
        let a = self.quiver.add_arrow_idx(id, tail, head, degree)?;
        self.weights.push(1);
        self.cache.lock().unwrap().clear();
        Ok(a)
    }

    pub fn q(&self) -> &Quiver {
        &self.quiver
    }

    pub fn show(&self, f: &Element<K>) -> String {
        f.display(&self.quiver)
    }

    pub fn e(&self, v: &str) -> Element<K> {
        Element::idempotent(self.quiver.vertex(v).expect("known vertex"))
    }

    pub fn a(&self, id: &str) -> Element<K> {
        Element::arrow(self.quiver.arrow(id).expect("known arrow"))
    }

    pub fn one(&self) -> Element<K> {
        Element::unit(&self.quiver)
    }

    pub fn mul(&self, x: &Element<K>, y: &Element<K>) -> Element<K> {
        x.mul(y, &self.quiver)
    }

    pub fn prod(&self, xs: &[&Element<K>]) -> Element<K> {
        let mut r = self.one();
        for x in xs {
            r = self.mul(&r, x);
        }
        r
    }

    /// Parses expressions such as `x*y - y*x + i j`, `2/3 b2 a1`, `(1 + x y)^2`
    /// and `e_0`. Juxtaposition is multiplication; bare scalars mean the unit.
    pub fn parse(&self, s: &str) -> Result<Element<K>, AlgebraError> {
        Parser::new(s, self).parse()
    }

    /// Like `parse` but panics on malformed input (for built-in data).
    pub fn p(&self, s: &str) -> Element<K> {
        self.parse(s).unwrap_or_else(|e| panic!("{s}: {e}"))
    }

    pub fn groebner(&self, effort: usize) -> Arc<GbRun<K>> {
        let mut cache = self.cache.lock().unwrap();
        cache
            .entry(effort)
            .or_insert_with(|| Arc::new(GbRun::compute(&self.quiver, &self.relations, effort)))
            .clone()
    }

    /// Spec-level membership query: requires deg f ≤ effort.
    pub fn ideal_membership(&self, f: &Element<K>, effort: usize) -> Result<Membership, AlgebraError> {
        let d = f.degree();
        if d > effort {
            return Err(AlgebraError::EffortTooSmall { degree: d, effort });
        }
        Ok(if self.member(f, effort) { Membership::ProvedMember } else { Membership::NotFound })
    }

    /// Membership proof with the basis truncated at `effort`; f may be longer.
    pub fn member(&self, f: &Element<K>, effort: usize) -> bool {
        f.is_zero() || self.groebner(effort).reduces_to_zero(f)
    }

    pub fn normal_form(&self, f: &Element<K>, effort: usize) -> Result<Element<K>, AlgebraError> {
        let d = f.degree();
        if d > effort {
            return Err(AlgebraError::EffortTooSmall { degree: d, effort });
        }
        Ok(self.nf(f, effort))
    }

    pub fn nf(&self, f: &Element<K>, effort: usize) -> Element<K> {
        self.groebner(effort).normal_form(f)
    }

    pub fn equal_mod(&self, f: &Element<K>, g: &Element<K>, effort: usize) -> bool {
        self.member(&f.sub(g), effort)
    }

    /// Arrows adjoined by localization.
    pub fn is_inverse_arrow(&self, a: usize) -> bool {
        self.inverse_pairs.iter().any(|p| p.inverse.iter().flatten().any(|&x| x == a))
    }

    /// Copies the algebra into another coefficient ring.
    pub fn map_coeffs<L: Scalar>(&self, f: impl Fn(&K) -> L + Copy) -> QuiverAlgebra<L> {
        QuiverAlgebra {
            quiver: self.quiver.clone(),
            relations: self.relations.iter().map(|r| r.map_coeffs(f)).filter(|r| !r.is_zero()).collect(),
            inverse_pairs: self
                .inverse_pairs
                .iter()
                .map(|p| InversePair {
                    inverse: p.inverse.clone(),
                    original: p.original.iter().map(|row| row.iter().map(|x| x.map_coeffs(f)).collect()).collect(),
                })
                .collect(),
            weights: self.weights.clone(),
            cache: Mutex::new(HashMap::new()),
        }
    }
}

/// Applies an arrow substitution multiplicatively. `vmap` sends source
/// vertices to target vertices; terms longer than `trunc` (in the target) are
/// dropped after each multiplication when a truncation is given.
pub fn substitute<K: Scalar>(
    f: &Element<K>,
    src: &Quiver,
    tgt: &Quiver,
    vmap: &dyn Fn(usize) -> usize,
    sigma: &dyn Fn(usize) -> Element<K>,
    trunc: Option<usize>,
) -> Element<K> {
    let mut out = Element::zero();
    for (p, c) in &f.terms {
        let img = match p {
            Path::Id(v) => Element::idempotent(vmap(*v as usize)),
            Path::Seq(w) => {
                let mut acc = sigma(w[0] as usize);
                for &a in &w[1..] {
                    let s = sigma(a as usize);
                    acc = match trunc {
                        Some(t) => acc.mul_trunc(&s, tgt, t),
                        None => acc.mul(&s, tgt),
                    };
                    if acc.is_zero() {
                        break;
                    }
                }
                acc
            }
        };
        let _ = src;
        let img = match trunc {
            Some(t) => img.truncate(t),
            None => img,
        };
        out.add_scaled(&img, c);
    }
    out
}

/// Substitution within one algebra, checking that every image has the ends
/// of the arrow it replaces.
pub fn substitute_in<K: Scalar>(
    alg: &QuiverAlgebra<K>,
    f: &Element<K>,
    sigma: &HashMap<usize, Element<K>>,
    trunc: Option<usize>,
) -> Result<Element<K>, AlgebraError> {
    let q = &alg.quiver;
    for (&a, img) in sigma {
        if let Some((h, t)) = img.homogeneous_ends(q) {
            if (h, t) != (q.head(a), q.tail(a)) {
                return Err(AlgebraError::EndMismatch { arrow: q.arrows[a].id.clone() });
            }
        } else if !img.is_zero() {
            return Err(AlgebraError::EndMismatch { arrow: q.arrows[a].id.clone() });
        }
    }
    let s = |a: usize| sigma.get(&a).cloned().unwrap_or_else(|| Element::arrow(a));
    Ok(substitute(f, q, q, &|v| v, &s, trunc))
}

/// Cohomological degree of a path.
pub fn path_degree(p: &Path, q: &Quiver) -> i32 {
    p.arrows().iter().map(|&a| q.arrows[a as usize].degree).sum()
}

/// Extends d on arrows to paths by the graded Leibniz rule
/// d(pq) = d(p) q + (−1)^{|p|} p d(q).
pub fn apply_derivation<K: Scalar>(f: &Element<K>, q: &Quiver, d: &dyn Fn(usize) -> Element<K>) -> Element<K> {
    let mut out = Element::zero();
    for (p, c) in &f.terms {
        let w = p.arrows();
        let mut sign_deg = 0i32;
        for i in 0..w.len() {
            let da = d(w[i] as usize);
            if !da.is_zero() {
                let sign = if sign_deg % 2 == 0 { K::one() } else { K::one().neg() };
                let left = Path::Seq(w[..i].to_vec());
                let right = Path::Seq(w[i + 1..].to_vec());
                for (dp, dc) in &da.terms {
                    let mut np = dp.clone();
                    if i > 0 {
                        match left.mul(&np, q) {
                            Some(x) => np = x,
                            None => continue,
                        }
                    }
                    if i + 1 < w.len() {
                        match np.mul(&right, q) {
                            Some(x) => np = x,
                            None => continue,
                        }
                    }
                    out.add_term(np, c.mul(dc).mul(&sign));
                }
            }
            sign_deg += q.arrows[w[i] as usize].degree;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct DgReport {
    pub passed: bool,
    /// Relations r with d(r) not proved in the ideal.
    pub failed_relations: Vec<usize>,
    /// Arrows a with d²(a) not proved in the ideal.
    pub failed_generators: Vec<String>,
}

/// Checks that d (given on arrows, of degree +1) descends to A and squares
/// to zero on generators.
pub fn check_dg<K: Scalar>(
    alg: &QuiverAlgebra<K>,
    d: &HashMap<usize, Element<K>>,
    effort: usize,
) -> Result<DgReport, AlgebraError> {
    let q = &alg.quiver;
    for (&a, img) in d {
        if img.is_zero() {
            continue;
        }
        let expected = q.arrows[a].degree + 1;
        for p in img.terms.keys() {
            let found = path_degree(p, q);
            if found != expected {
                return Err(AlgebraError::DegreeMismatch { arrow: q.arrows[a].id.clone(), expected, found });
            }
        }
        match img.homogeneous_ends(q) {
            Some(ends) if ends == (q.head(a), q.tail(a)) => {}
            _ => return Err(AlgebraError::EndMismatch { arrow: q.arrows[a].id.clone() }),
        }
    }
    let dfun = |a: usize| d.get(&a).cloned().unwrap_or_else(Element::zero);
    let mut failed_relations = Vec::new();
    for (k, r) in alg.relations.iter().enumerate() {
        if !alg.member(&apply_derivation(r, q, &dfun), effort) {
            failed_relations.push(k);
        }
    }
    let mut failed_generators = Vec::new();
    for a in 0..q.n_arrows() {
        let d2 = apply_derivation(&dfun(a), q, &dfun);
        if !alg.member(&d2, effort) {
            failed_generators.push(q.arrows[a].id.clone());
        }
    }
    Ok(DgReport { passed: failed_relations.is_empty() && failed_generators.is_empty(), failed_relations, failed_generators })
}

/// kQ/(Σ_{t(a)=v} ε(a) x_ā x_a : v unframed). On a framed double quiver the
/// framing pair contributes i_v j_v.
pub fn preprojective_algebra<K: Scalar>(dq: &DoubleQuiver) -> QuiverAlgebra<K> {
    let q = &dq.quiver;
    let mut alg = QuiverAlgebra::free(q.clone());
    for v in q.unframed_vertices() {
        let r = preprojective_relation(dq, v);
        alg.add_relation(r).expect("relation is a loop at v");
    }
    alg
}

pub fn preprojective_relation<K: Scalar>(dq: &DoubleQuiver, v: usize) -> Element<K> {
    let q = &dq.quiver;
    let mut r = Element::zero();
    for a in 0..q.n_arrows() {
        if q.tail(a) == v {
            let p = Path::Seq(vec![dq.bar[a] as u32, a as u32]);
            r.add_term(p, K::from_i64(dq.eps[a] as i64));
        }
    }
    r
}

/// min over terms of (scalar valuation + Σ arrow weights); `None` is +∞.
pub fn valuation<K: Scalar + Valued>(f: &Element<K>, weights: &dyn Fn(usize) -> Rational) -> Option<Rational> {
    f.terms
        .iter()
        .filter_map(|(p, c)| {
            let v = c.valuation()?;
            Some(p.arrows().iter().fold(v, |acc, &a| acc + weights(a as usize)))
        })
        .min()
}

struct Parser<'a, K> {
    toks: Vec<Tok>,
    pos: usize,
    alg: &'a QuiverAlgebra<K>,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

fn tokenize(s: &str) -> Result<Vec<Tok>, AlgebraError> {
    let cs: Vec<char> = s.chars().collect();
    let mut i = 0;
    let mut out = Vec::new();
    while i < cs.len() {
        let c = cs[i];
        match c {
            ' ' | '\t' | '\n' | '·' => i += 1,
            '+' => {
                out.push(Tok::Plus);
                i += 1
            }
            '-' | '−' => {
                out.push(Tok::Minus);
                i += 1
            }
            '*' => {
                out.push(Tok::Star);
                i += 1
            }
            '^' => {
                out.push(Tok::Caret);
                i += 1
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1
            }
            d if d.is_ascii_digit() => {
                let st = i;
                while i < cs.len() && cs[i].is_ascii_digit() {
                    i += 1;
                }
                let n: String = cs[st..i].iter().collect();
                let mut q: Rational = n.parse::<num_bigint::BigInt>().map(Rational::from_integer).map_err(|e| AlgebraError::Parse(e.to_string()))?;
                if i < cs.len() && cs[i] == '/' {
                    i += 1;
                    let st = i;
                    while i < cs.len() && cs[i].is_ascii_digit() {
                        i += 1;
                    }
                    let d: String = cs[st..i].iter().collect();
                    let d: num_bigint::BigInt = d.parse().map_err(|_| AlgebraError::Parse("bad denominator".into()))?;
                    q /= Rational::from_integer(d);
                }
                out.push(Tok::Num(q));
            }
            a if a.is_alphabetic() || a == '_' => {
                let st = i;
                while i < cs.len() && (cs[i].is_alphanumeric() || cs[i] == '_' || cs[i] == '\'' || cs[i] == '.') {
                    i += 1;
                }
                out.push(Tok::Ident(cs[st..i].iter().collect()));
            }
            other => return Err(AlgebraError::Parse(format!("unexpected `{other}`"))),
        }
    }
    Ok(out)
}

impl<'a, K: Scalar> Parser<'a, K> {
    fn new(s: &str, alg: &'a QuiverAlgebra<K>) -> Self {
        let toks = tokenize(s).unwrap_or_else(|_| vec![Tok::Ident("\u{0}".into())]);
        Parser { toks, pos: 0, alg }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn parse(mut self) -> Result<Element<K>, AlgebraError> {
        if self.toks.len() == 1 && self.toks[0] == Tok::Ident("\u{0}".into()) {
            return Err(AlgebraError::Parse("invalid character".into()));
        }
        let e = self.expr()?;
        if self.pos != self.toks.len() {
            return Err(AlgebraError::Parse(format!("trailing input at token {}", self.pos)));
        }
        Ok(e)
    }

    fn expr(&mut self) -> Result<Element<K>, AlgebraError> {
        let mut acc = Element::zero();
        let mut sign = K::one();
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            sign = sign.neg();
        } else if self.peek() == Some(&Tok::Plus) {
            self.pos += 1;
        }
        loop {
            let t = self.term()?;
            acc.add_scaled(&t, &sign);
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    sign = K::one();
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    sign = K::one().neg();
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Element<K>, AlgebraError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    let f = self.factor()?;
                    acc = self.alg.mul(&acc, &f);
                }
                Some(Tok::Num(_)) | Some(Tok::Ident(_)) | Some(Tok::LParen) => {
                    let f = self.factor()?;
                    acc = self.alg.mul(&acc, &f);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Element<K>, AlgebraError> {
        let base = self.atom()?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            match self.toks.get(self.pos).cloned() {
                Some(Tok::Num(n)) if n.is_integer() => {
                    self.pos += 1;
                    let e: u32 = n.to_integer().try_into().map_err(|_| AlgebraError::Parse("exponent".into()))?;
                    return Ok(base.pow(e, &self.alg.quiver));
                }
                _ => return Err(AlgebraError::Parse("expected nonnegative integer exponent".into())),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Element<K>, AlgebraError> {
        match self.toks.get(self.pos).cloned() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                let c = K::from_rational(&n).ok_or_else(|| AlgebraError::Parse("scalar not representable".into()))?;
                Ok(self.alg.one().scale(&c))
            }
            Some(Tok::Ident(id)) => {
                self.pos += 1;
                if let Ok(a) = self.alg.quiver.arrow(&id) {
                    return Ok(Element::arrow(a));
                }
                if let Some(v) = id.strip_prefix("e_") {
                    return Ok(Element::idempotent(self.alg.quiver.vertex(v)?));
                }
                Err(AlgebraError::Quiver(QuiverError::UnknownArrow(id)))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(AlgebraError::Parse("expected `)`".into()));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(Tok::Minus) => {
                self.pos += 1;
                Ok(self.factor()?.neg())
            }
            other => Err(AlgebraError::Parse(format!("unexpected token {other:?}"))),
        }
    }
}
