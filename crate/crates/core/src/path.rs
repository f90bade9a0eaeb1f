//! Paths and finite linear combinations of paths.
//!
//! A path is stored in written order: `Seq([b, a])` is the path "b a" which
//! first traverses `a` and then `b`, so it is composable iff t(b) = h(a).

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use crate::quiver::Quiver;
use crate::scalar::Scalar;

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Path {
    Id(u32),
    Seq(Vec<u32>),
}

impl Path {
    pub fn len(&self) -> usize {
        match self {
            Path::Id(_) => 0,
            Path::Seq(w) => w.len(),
        }
    }

    pub fn is_trivial(&self) -> bool {
        matches!(self, Path::Id(_))
    }

    pub fn arrows(&self) -> &[u32] {
        match self {
            Path::Id(_) => &[],
            Path::Seq(w) => w,
        }
    }

    pub fn head(&self, q: &Quiver) -> usize {
        match self {
            Path::Id(v) => *v as usize,
            Path::Seq(w) => q.head(w[0] as usize),
        }
    }

    pub fn tail(&self, q: &Quiver) -> usize {
        match self {
            Path::Id(v) => *v as usize,
            Path::Seq(w) => q.tail(*w.last().unwrap() as usize),
        }
    }

    /// Product self·other (other traversed first), or `None` if not composable.
    pub fn mul(&self, other: &Path, q: &Quiver) -> Option<Path> {
        if self.tail(q) != other.head(q) {
            return None;
        }
        Some(match (self, other) {
            (Path::Id(_), p) | (p, Path::Id(_)) => p.clone(),
            (Path::Seq(a), Path::Seq(b)) => {
                let mut w = Vec::with_capacity(a.len() + b.len());
                w.extend_from_slice(a);
                w.extend_from_slice(b);
                Path::Seq(w)
            }
        })
    }

    pub fn from_slice(w: &[u32], q: &Quiver, vertex_if_empty: usize) -> Path {
        if w.is_empty() {
            Path::Id(vertex_if_empty as u32)
        } else {
            debug_assert!(is_composable(w, q));
            Path::Seq(w.to_vec())
        }
    }

    /// Vertices visited, from tail to head.
    pub fn vertices(&self, q: &Quiver) -> Vec<usize> {
        match self {
            Path::Id(v) => vec![*v as usize],
            Path::Seq(w) => {
                let mut vs = vec![q.tail(*w.last().unwrap() as usize)];
                for a in w.iter().rev() {
                    vs.push(q.head(*a as usize));
                }
                vs
            }
        }
    }

    pub fn display(&self, q: &Quiver) -> String {
        match self {
            Path::Id(v) => format!("e_{}", q.vertices[*v as usize].id),
            Path::Seq(w) => w.iter().map(|&a| q.arrows[a as usize].id.as_str()).collect::<Vec<_>>().join("*"),
        }
    }
}

pub fn is_composable(w: &[u32], q: &Quiver) -> bool {
    w.windows(2).all(|p| q.tail(p[0] as usize) == q.head(p[1] as usize))
}

/// Degree-lexicographic order: length first, then arrow indices left to
/// right; trivial paths are ordered by vertex index.
impl Ord for Path {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Path::Id(a), Path::Id(b)) => a.cmp(b),
            (Path::Id(_), Path::Seq(_)) => Ordering::Less,
            (Path::Seq(_), Path::Id(_)) => Ordering::Greater,
            (Path::Seq(a), Path::Seq(b)) => a.len().cmp(&b.len()).then_with(|| a.cmp(b)),
        }
    }
}

impl PartialOrd for Path {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A finite linear combination of paths. Terms are kept in increasing
/// monomial order, so the leading term is the last one.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Element<K> {
    pub terms: BTreeMap<Path, K>,
}

impl<K: fmt::Debug> fmt::Debug for Element<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.terms.iter().rev().map(|(p, c)| format!("{c:?}·{p:?}")).collect();
        write!(f, "{}", if parts.is_empty() { "0".to_string() } else { parts.join(" + ") })
    }
}

impl<K: Scalar> Element<K> {
    pub fn zero() -> Self {
        Element { terms: BTreeMap::new() }
    }

    pub fn term(p: Path, c: K) -> Self {
        let mut e = Self::zero();
        if !c.is_zero() {
            e.terms.insert(p, c);
        }
        e
    }

    pub fn path(p: Path) -> Self {
        Self::term(p, K::one())
    }

    pub fn idempotent(v: usize) -> Self {
        Self::path(Path::Id(v as u32))
    }

    /// The unit Σ_v e_v.
    pub fn unit(q: &Quiver) -> Self {
        let mut e = Self::zero();
        for v in 0..q.n_vertices() {
            e.terms.insert(Path::Id(v as u32), K::one());
        }
        e
    }

    pub fn arrow(a: usize) -> Self {
        Self::path(Path::Seq(vec![a as u32]))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn add_term(&mut self, p: Path, c: K) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&p) {
            Some(x) => {
                *x = x.add(&c);
                if x.is_zero() {
                    self.terms.remove(&p);
                }
            }
            None => {
                self.terms.insert(p, c);
            }
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut r = self.clone();
        for (p, c) in &o.terms {
            r.add_term(p.clone(), c.clone());
        }
        r
    }

    pub fn sub(&self, o: &Self) -> Self {
        let mut r = self.clone();
        for (p, c) in &o.terms {
            r.add_term(p.clone(), c.neg());
        }
        r
    }

    pub fn add_scaled(&mut self, o: &Self, f: &K) {
        for (p, c) in &o.terms {
            self.add_term(p.clone(), c.mul(f));
        }
    }

    pub fn scale(&self, f: &K) -> Self {
        if f.is_zero() {
            return Self::zero();
        }
        Element { terms: self.terms.iter().map(|(p, c)| (p.clone(), c.mul(f))).collect() }
    }

    pub fn neg(&self) -> Self {
        self.scale(&K::one().neg())
    }

    pub fn mul(&self, o: &Self, q: &Quiver) -> Self {
        let mut r = Self::zero();
        for (p1, c1) in &self.terms {
            for (p2, c2) in &o.terms {
                if let Some(p) = p1.mul(p2, q) {
                    r.add_term(p, c1.mul(c2));
                }
            }
        }
        r
    }

    /// Product truncated at path length `max_len`.
    pub fn mul_trunc(&self, o: &Self, q: &Quiver, max_len: usize) -> Self {
        let mut r = Self::zero();
        for (p1, c1) in &self.terms {
            for (p2, c2) in &o.terms {
                if p1.len() + p2.len() > max_len {
                    continue;
                }
                if let Some(p) = p1.mul(p2, q) {
                    r.add_term(p, c1.mul(c2));
                }
            }
        }
        r
    }

    pub fn truncate(&self, max_len: usize) -> Self {
        Element { terms: self.terms.iter().filter(|(p, _)| p.len() <= max_len).map(|(p, c)| (p.clone(), c.clone())).collect() }
    }

    pub fn pow(&self, e: u32, q: &Quiver) -> Self {
        let mut r = Self::unit(q);
        for _ in 0..e {
            r = r.mul(self, q);
        }
        r
    }

    /// Maximal path length; 0 for the zero element.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(|p| p.len()).max().unwrap_or(0)
    }

    pub fn leading(&self) -> Option<(&Path, &K)> {
        self.terms.iter().next_back()
    }

    /// (head, tail) when all terms share them.
    pub fn homogeneous_ends(&self, q: &Quiver) -> Option<(usize, usize)> {
        let mut it = self.terms.keys();
        let first = it.next()?;
        let ends = (first.head(q), first.tail(q));
        it.all(|p| (p.head(q), p.tail(q)) == ends).then_some(ends)
    }

    pub fn is_homogeneous(&self, q: &Quiver) -> bool {
        self.is_zero() || self.homogeneous_ends(q).is_some()
    }

    /// e_h · self · e_t
    pub fn corner(&self, h: usize, t: usize, q: &Quiver) -> Self {
        Element {
            terms: self
                .terms
                .iter()
                .filter(|(p, _)| p.head(q) == h && p.tail(q) == t)
                .map(|(p, c)| (p.clone(), c.clone()))
                .collect(),
        }
    }

    /// Scalar in front of e_v when self is a multiple of an idempotent.
    pub fn as_scalar(&self) -> Option<K> {
        if self.is_zero() {
            return Some(K::zero());
        }
        let mut it = self.terms.iter();
        let (p, c) = it.next()?;
        if !p.is_trivial() || self.terms.iter().any(|(_, d)| d != c) || self.terms.keys().any(|p| !p.is_trivial()) {
            return None;
        }
        Some(c.clone())
    }

    pub fn display(&self, q: &Quiver) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (k, (p, c)) in self.terms.iter().rev().enumerate() {
            let cs = format!("{c}");
            let (neg, mag) = match cs.strip_prefix('-') {
                Some(rest) => (true, rest.to_string()),
                None => (false, cs),
            };
            if k == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let body = p.display(q);
            if mag == "1" {
                out.push_str(&body);
            } else {
                out.push_str(&format!("{mag}*{body}"));
            }
        }
        out
    }

    pub fn map_coeffs<L: Scalar>(&self, f: impl Fn(&K) -> L) -> Element<L> {
        let mut r = Element::<L>::zero();
        for (p, c) in &self.terms {
            r.add_term(p.clone(), f(c));
        }
        r
    }

    /// Re-indexes arrows and vertices through the given maps.
    pub fn reindex(&self, arrow_map: &[u32], vertex_map: &[u32]) -> Self {
        let mut r = Self::zero();
        for (p, c) in &self.terms {
            let np = match p {
                Path::Id(v) => Path::Id(vertex_map[*v as usize]),
                Path::Seq(w) => Path::Seq(w.iter().map(|&a| arrow_map[a as usize]).collect()),
            };
            r.add_term(np, c.clone());
        }
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn jordan() -> Quiver {
        let mut q = Quiver::new();
        q.add_vertex("0", false).unwrap();
        q.add_arrow("x", "0", "0").unwrap();
        q.add_arrow("y", "0", "0").unwrap();
        q
    }

    #[test]
    fn bilinear_expansion() {
        let q = jordan();
        let x = Element::<Rational>::arrow(0);
        let y = Element::<Rational>::arrow(1);
        let lhs = x.add(&y).mul(&x.sub(&y), &q);
        let rhs = x.mul(&x, &q).sub(&x.mul(&y, &q)).add(&y.mul(&x, &q)).sub(&y.mul(&y, &q));
        assert_eq!(lhs, rhs);
        assert_eq!(x.mul(&Element::idempotent(0), &q), x);
    }

    #[test]
    fn order_is_deglex() {
        assert!(Path::Id(3) < Path::Seq(vec![0]));
        assert!(Path::Seq(vec![1]) < Path::Seq(vec![0, 0]));
        assert!(Path::Seq(vec![0, 1]) < Path::Seq(vec![1, 0]));
    }
}
