//! Quivers, intersection graphs and the standard constructions on them.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum QuiverError {
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("unknown arrow `{0}`")]
    UnknownArrow(String),
    #[error("duplicate id `{0}`")]
    Duplicate(String),
    #[error("vertex `{0}` is already a framing vertex")]
    FramingVertex(String),
    #[error("missing rank entry for vertex `{0}`")]
    MissingRank(String),
    #[error("non-default Euler data is not supported by this operation")]
    Unsupported,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: String,
    #[serde(default)]
    pub framing: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arrow {
    pub id: String,
    pub tail: usize,
    pub head: usize,
    /// Cohomological degree (0 for ordinary arrows, −1 for the dga loops).
    pub degree: i32,
}

/// A quiver (I, E, h, t). Vertices and arrows are addressed by index; the
/// string ids are kept for I/O.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Quiver {
    pub vertices: Vec<Vertex>,
    pub arrows: Vec<Arrow>,
    vertex_index: HashMap<String, usize>,
    arrow_index: HashMap<String, usize>,
}

impl Quiver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, id: &str, framing: bool) -> Result<usize, QuiverError> {
        if self.vertex_index.contains_key(id) {
            return Err(QuiverError::Duplicate(id.to_string()));
        }
        let k = self.vertices.len();
        self.vertices.push(Vertex { id: id.to_string(), framing });
        self.vertex_index.insert(id.to_string(), k);
        Ok(k)
    }

    pub fn add_arrow(&mut self, id: &str, tail: &str, head: &str) -> Result<usize, QuiverError> {
        self.add_arrow_deg(id, tail, head, 0)
    }

    pub fn add_arrow_deg(&mut self, id: &str, tail: &str, head: &str, degree: i32) -> Result<usize, QuiverError> {
        let t = self.vertex(tail)?;
        let h = self.vertex(head)?;
        self.add_arrow_idx(id, t, h, degree)
    }

    pub fn add_arrow_idx(&mut self, id: &str, tail: usize, head: usize, degree: i32) -> Result<usize, QuiverError> {
        if self.arrow_index.contains_key(id) {
            return Err(QuiverError::Duplicate(id.to_string()));
        }
        let k = self.arrows.len();
        self.arrows.push(Arrow { id: id.to_string(), tail, head, degree });
        self.arrow_index.insert(id.to_string(), k);
        Ok(k)
    }

    pub fn vertex(&self, id: &str) -> Result<usize, QuiverError> {
        self.vertex_index.get(id).copied().ok_or_else(|| QuiverError::UnknownVertex(id.to_string()))
    }

    pub fn arrow(&self, id: &str) -> Result<usize, QuiverError> {
        self.arrow_index.get(id).copied().ok_or_else(|| QuiverError::UnknownArrow(id.to_string()))
    }

    pub fn has_arrow(&self, id: &str) -> bool {
        self.arrow_index.contains_key(id)
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_arrows(&self) -> usize {
        self.arrows.len()
    }

    pub fn head(&self, a: usize) -> usize {
        self.arrows[a].head
    }

    pub fn tail(&self, a: usize) -> usize {
        self.arrows[a].tail
    }

    pub fn unframed_vertices(&self) -> Vec<usize> {
        (0..self.vertices.len()).filter(|&v| !self.vertices[v].framing).collect()
    }

    /// The same vertices with every arrow reversed.
    pub fn opposite(&self) -> Quiver {
        let mut q = Quiver::new();
        for v in &self.vertices {
            q.add_vertex(&v.id, v.framing).expect("distinct ids");
        }
        for a in &self.arrows {
            q.add_arrow_idx(&a.id, a.head, a.tail, a.degree).expect("distinct ids");
        }
        q
    }

    /// Adds a framing vertex f_v and arrows i_v: f_v → v, j_v: v → f_v for each
    /// selected vertex. Returns the framed quiver; arrow ids are `i_<v>`, `j_<v>`.
    pub fn frame(&self, selected: &[usize]) -> Result<Quiver, QuiverError> {
        let mut q = self.clone();
        for &v in selected {
            if self.vertices[v].framing {
                return Err(QuiverError::FramingVertex(self.vertices[v].id.clone()));
            }
            let vid = self.vertices[v].id.clone();
            let f = q.add_vertex(&format!("f_{vid}"), true)?;
            q.add_arrow_idx(&format!("i_{vid}"), f, v, 0)?;
            q.add_arrow_idx(&format!("j_{vid}"), v, f, 0)?;
        }
        Ok(q)
    }
}

/// An undirected intersection graph with the Euler data entering the Floer
/// Euler form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    pub vertices: Vec<GraphVertex>,
    pub edges: Vec<GraphEdge>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphVertex {
    pub id: String,
    #[serde(default = "default_component_euler", rename = "componentEuler")]
    pub component_euler: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphEdge {
    #[serde(rename = "endA")]
    pub a: String,
    #[serde(rename = "endB")]
    pub b: String,
    #[serde(default = "default_one", rename = "intersectionEuler")]
    pub intersection_euler: i64,
    #[serde(default = "default_one", rename = "jumpDegree")]
    pub jump_degree: i64,
    #[serde(default = "default_codim")]
    pub codim: i64,
}

fn default_component_euler() -> i64 {
    2
}
fn default_one() -> i64 {
    1
}
fn default_codim() -> i64 {
    2
}

impl Graph {
    /// Sphere plumbing: every vertex χ = 2, every edge transverse.
    pub fn plumbing(ids: &[&str], edges: &[(&str, &str)]) -> Graph {
        Graph {
            vertices: ids.iter().map(|s| GraphVertex { id: s.to_string(), component_euler: 2 }).collect(),
            edges: edges
                .iter()
                .map(|(a, b)| GraphEdge {
                    a: a.to_string(),
                    b: b.to_string(),
                    intersection_euler: 1,
                    jump_degree: 1,
                    codim: 2,
                })
                .collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.vertices.len()
    }

    pub fn index(&self, id: &str) -> Result<usize, QuiverError> {
        self.vertices
            .iter()
            .position(|v| v.id == id)
            .ok_or_else(|| QuiverError::UnknownVertex(id.to_string()))
    }

    pub fn validate(&self) -> Result<(), QuiverError> {
        for (k, v) in self.vertices.iter().enumerate() {
            if self.vertices[..k].iter().any(|w| w.id == v.id) {
                return Err(QuiverError::Duplicate(v.id.clone()));
            }
        }
        for e in &self.edges {
            self.index(&e.a)?;
            self.index(&e.b)?;
        }
        Ok(())
    }

    pub fn endpoints(&self) -> Result<Vec<(usize, usize)>, QuiverError> {
        self.edges.iter().map(|e| Ok((self.index(&e.a)?, self.index(&e.b)?))).collect()
    }

    pub fn is_default_plumbing(&self) -> bool {
        self.vertices.iter().all(|v| v.component_euler == 2)
            && self.edges.iter().all(|e| e.intersection_euler == 1 && e.jump_degree == 1 && e.codim == 2)
    }

    /// Generalized Cartan matrix 2I − A for sphere plumbings (a self-edge
    /// contributes 2 to the adjacency diagonal).
    pub fn cartan(&self) -> Result<Vec<Vec<i64>>, QuiverError> {
        let n = self.n();
        let mut c = vec![vec![0i64; n]; n];
        for (i, row) in c.iter_mut().enumerate() {
            row[i] = 2;
        }
        for (a, b) in self.endpoints()? {
            if a == b {
                c[a][a] -= 2;
            } else {
                c[a][b] -= 1;
                c[b][a] -= 1;
            }
        }
        Ok(c)
    }

    pub fn is_connected(&self) -> bool {
        let n = self.n();
        if n == 0 {
            return true;
        }
        let Ok(ends) = self.endpoints() else { return false };
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &(a, b) in &ends {
                for (x, y) in [(a, b), (b, a)] {
                    if x == v && !seen[y] {
                        seen[y] = true;
                        stack.push(y);
                    }
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Sign assignment ε on the arrows of a double quiver, with the pairing a ↔ ā.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DoubleQuiver {
    pub quiver: Quiver,
    pub eps: Vec<i32>,
    pub bar: Vec<usize>,
}

/// Edge orientation choice for `double_quiver`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Orientation {
    /// Lower vertex index to higher; for self-edges the first copy is `+`.
    Lexicographic,
    /// Per edge: `true` keeps endA → endB as the `+` arrow.
    Explicit(Vec<bool>),
}

/// Each edge e = {A, B} gives arrows `a<k>`: A → B and `ab<k>`: B → A (k the
/// edge index); ε = +1 on the chosen orientation.
pub fn double_quiver(g: &Graph, orientation: &Orientation) -> Result<DoubleQuiver, QuiverError> {
    g.validate()?;
    let mut q = Quiver::new();
    for v in &g.vertices {
        q.add_vertex(&v.id, false)?;
    }
    let ends = g.endpoints()?;
    let mut eps = Vec::new();
    let mut bar = Vec::new();
    for (k, &(a, b)) in ends.iter().enumerate() {
        let forward = match orientation {
            Orientation::Lexicographic => a <= b,
            Orientation::Explicit(v) => v.get(k).copied().unwrap_or(true),
        };
        let (t, h) = if forward { (a, b) } else { (b, a) };
        let x = q.add_arrow_idx(&format!("a{k}"), t, h, 0)?;
        let y = q.add_arrow_idx(&format!("ab{k}"), h, t, 0)?;
        eps.push(1);
        eps.push(-1);
        bar.push(y);
        bar.push(x);
        debug_assert_eq!(x + 1, y);
    }
    Ok(DoubleQuiver { quiver: q, eps, bar })
}

/// Framing of a double quiver keeps ε/bar for the original arrows and pairs
/// i_v with j_v, with ε(j_v) = +1 so that Σ_{t(a)=v} ε(a) x_ā x_a ends in
/// + i_v j_v.
pub fn frame_double(d: &DoubleQuiver, selected: &[usize]) -> Result<DoubleQuiver, QuiverError> {
    let q = d.quiver.frame(selected)?;
    let mut eps = d.eps.clone();
    let mut bar = d.bar.clone();
    for k in 0..selected.len() {
        let i = d.quiver.n_arrows() + 2 * k;
        eps.push(-1);
        eps.push(1);
        bar.push(i + 1);
        bar.push(i);
    }
    Ok(DoubleQuiver { quiver: q, eps, bar })
}

/// The framed Jordan quiver with arrows x, y (loops at `0`), i: f → 0 and
/// j: 0 → f, signed so that the preprojective relation is xy − yx + ij.
pub fn adhm_quiver() -> DoubleQuiver {
    let mut q = Quiver::new();
    q.add_vertex("0", false).unwrap();
    q.add_vertex("f", true).unwrap();
    q.add_arrow("x", "0", "0").unwrap();
    q.add_arrow("y", "0", "0").unwrap();
    q.add_arrow("i", "f", "0").unwrap();
    q.add_arrow("j", "0", "f").unwrap();
    DoubleQuiver { quiver: q, eps: vec![-1, 1, -1, 1], bar: vec![1, 0, 3, 2] }
}

/// Σ_i χ(L_i) r_i² + 2 Σ_{codim even} (−1)^{deg u_e} χ(L_e) r_{h(e)} r_{t(e)}.
pub fn floer_euler_form(g: &Graph, r: &[i64]) -> Result<i64, QuiverError> {
    if r.len() < g.n() {
        return Err(QuiverError::MissingRank(g.vertices[r.len()].id.clone()));
    }
    let mut s: i64 = g.vertices.iter().zip(r).map(|(v, ri)| v.component_euler * ri * ri).sum();
    for e in &g.edges {
        if e.codim % 2 == 0 {
            let sign = if e.jump_degree % 2 == 0 { 1 } else { -1 };
            s += 2 * sign * e.intersection_euler * r[g.index(&e.a)?] * r[g.index(&e.b)?];
        }
    }
    Ok(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormClass {
    PositiveDefinite,
    StrictlySemiPositive,
    Indefinite,
}

impl std::fmt::Display for FormClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            FormClass::PositiveDefinite => "positive-definite",
            FormClass::StrictlySemiPositive => "strictly-semi-positive",
            FormClass::Indefinite => "indefinite",
        };
        f.write_str(s)
    }
}

/// Classifies the symmetric form C by exact symmetric elimination: C is
/// positive semidefinite iff elimination never meets a negative pivot, or a
/// zero pivot with a nonzero remaining row.
pub fn classify_symmetric(c: &[Vec<i64>]) -> FormClass {
    classify_bareiss(c).unwrap_or_else(|| classify_rational(c))
}

/// Fraction-free variant: after eliminating pivots P each live entry is the
/// minor on P ∪ {i} × P ∪ {j}, a positive multiple of the Schur complement.
/// None on overflow.
fn classify_bareiss(c: &[Vec<i64>]) -> Option<FormClass> {
    let n = c.len();
    let mut m: Vec<Vec<i128>> = c.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let mut live: Vec<usize> = (0..n).collect();
    let mut prev: i128 = 1;
    while !live.is_empty() {
        if live.iter().any(|&i| m[i][i] < 0) {
            return Some(FormClass::Indefinite);
        }
        let Some(pos) = live.iter().position(|&i| m[i][i] > 0) else {
            let nonzero = live.iter().any(|&i| live.iter().any(|&j| m[i][j] != 0));
            return Some(if nonzero { FormClass::Indefinite } else { FormClass::StrictlySemiPositive });
        };
        let p = live.remove(pos);
        let piv = m[p][p];
        for &i in &live {
            for &j in &live {
                let v = piv.checked_mul(m[i][j])?.checked_sub(m[i][p].checked_mul(m[p][j])?)?;
                m[i][j] = v / prev;
            }
        }
        prev = piv;
    }
    Some(FormClass::PositiveDefinite)
}

fn classify_rational(c: &[Vec<i64>]) -> FormClass {
    use crate::scalar::{int, Rational, Scalar};
    use num_traits::Signed;
    let n = c.len();
    let mut m: Vec<Vec<Rational>> = c.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect();
    let mut live: Vec<usize> = (0..n).collect();
    while !live.is_empty() {
        if live.iter().any(|&i| m[i][i].is_negative()) {
            return FormClass::Indefinite;
        }
        let Some(pos) = live.iter().position(|&i| m[i][i].is_positive()) else {
            let nonzero = live.iter().any(|&i| live.iter().any(|&j| !Scalar::is_zero(&m[i][j])));
            return if nonzero { FormClass::Indefinite } else { FormClass::StrictlySemiPositive };
        };
        let p = live.remove(pos);
        for &i in &live {
            if Scalar::is_zero(&m[i][p]) {
                continue;
            }
            let f = &m[i][p] / &m[p][p];
            for &j in &live {
                let d = &f * &m[p][j];
                m[i][j] = &m[i][j] - &d;
            }
        }
    }
    FormClass::PositiveDefinite
}

pub fn classify_form(g: &Graph) -> Result<FormClass, QuiverError> {
    if !g.is_default_plumbing() {
        return Err(QuiverError::Unsupported);
    }
    Ok(classify_symmetric(&g.cartan()?))
}

/// Integer kernel vector of the Cartan matrix with positive entries and
/// minimum entry 1, for strictly semi-positive forms with 1-dimensional kernel.
pub fn affine_delta(g: &Graph) -> Result<Option<Vec<i64>>, QuiverError> {
    use crate::linalg::Matrix;
    use crate::scalar::{int, Rational};
    use num_integer::Integer;
    use num_traits::{Signed, ToPrimitive};
    if classify_form(g)? != FormClass::StrictlySemiPositive {
        return Ok(None);
    }
    let c = g.cartan()?;
    let m = Matrix::<Rational>::from_fn(c.len(), c.len(), |i, j| int(c[i][j]));
    let ker = m.kernel();
    if ker.len() != 1 {
        return Ok(None);
    }
    let v = &ker[0];
    let lcm = v.iter().fold(num_bigint::BigInt::from(1), |l, x| l.lcm(x.denom()));
    let mut ints: Vec<num_bigint::BigInt> = v.iter().map(|x| (x * Rational::from_integer(lcm.clone())).to_integer()).collect();
    let g0 = ints.iter().fold(num_bigint::BigInt::from(0), |acc, x| acc.gcd(x));
    if g0 == num_bigint::BigInt::from(0) {
        return Ok(None);
    }
    for x in ints.iter_mut() {
        *x = &*x / &g0;
    }
    if ints.iter().all(|x| !x.is_positive()) {
        for x in ints.iter_mut() {
            *x = -x.clone();
        }
    }
    if !ints.iter().all(|x| x.is_positive()) {
        return Ok(None);
    }
    Ok(Some(ints.iter().map(|x| x.to_i64().unwrap_or(i64::MAX)).collect()))
}

/// Nonzero θ ≤ bound with θᵗCθ ≤ 2.
pub fn positive_roots(g: &Graph, bound: &[i64]) -> Result<Vec<Vec<i64>>, QuiverError> {
    let c = g.cartan()?;
    let n = g.n();
    if bound.len() < n {
        return Err(QuiverError::MissingRank(g.vertices[bound.len()].id.clone()));
    }
    let mut out = Vec::new();
    let mut theta = vec![0i64; n];
    loop {
        let mut k = 0;
        loop {
            if k == n {
                return Ok(out);
            }
            if theta[k] < bound[k] {
                theta[k] += 1;
                break;
            }
            theta[k] = 0;
            k += 1;
        }
        let q: i64 = (0..n).map(|i| (0..n).map(|j| theta[i] * c[i][j] * theta[j]).sum::<i64>()).sum();
        if q <= 2 {
            out.push(theta.clone());
        }
    }
}

/// ζ·θ = 0
pub fn on_wall(zeta: &[crate::scalar::Rational], theta: &[i64]) -> bool {
    use crate::scalar::{int, Rational, Scalar};
    let s = zeta.iter().zip(theta).fold(<Rational as Scalar>::zero(), |acc, (z, t)| acc + z * int(*t));
    Scalar::is_zero(&s)
}

/// Dynkin label of a sphere plumbing whose components are all ADE or affine
/// ADE diagrams, e.g. "A3", "D4+A1", "affine E6". None otherwise.
pub fn dynkin_label(g: &Graph) -> Option<String> {
    if !g.is_default_plumbing() {
        return None;
    }
    let ends = g.endpoints().ok()?;
    let n = g.n();
    let mut comp = vec![usize::MAX; n];
    let mut labels = Vec::new();
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        let mut members = vec![s];
        comp[s] = s;
        let mut k = 0;
        while k < members.len() {
            let v = members[k];
            for &(a, b) in &ends {
                for (x, y) in [(a, b), (b, a)] {
                    if x == v && comp[y] == usize::MAX {
                        comp[y] = s;
                        members.push(y);
                    }
                }
            }
            k += 1;
        }
        let edges: Vec<(usize, usize)> = ends.iter().copied().filter(|&(a, _)| comp[a] == s).collect();
        labels.push(component_label(&members, &edges)?);
    }
    Some(labels.join("+"))
}

fn component_label(vs: &[usize], edges: &[(usize, usize)]) -> Option<String> {
    let n = vs.len();
    if edges.iter().any(|&(a, b)| a == b) {
        return (n == 1 && edges.len() == 1).then(|| "affine A0".to_string());
    }
    let mut seen = std::collections::HashSet::new();
    for &(a, b) in edges {
        if !seen.insert((a.min(b), a.max(b))) {
            return (n == 2 && edges.len() == 2).then(|| "affine A1".to_string());
        }
    }
    let nbrs = |v: usize| -> Vec<usize> {
        edges.iter().filter_map(|&(a, b)| if a == v { Some(b) } else if b == v { Some(a) } else { None }).collect()
    };
    let deg = |v: usize| nbrs(v).len();
    if edges.len() == n && vs.iter().all(|&v| deg(v) == 2) {
        return Some(format!("affine A{}", n - 1));
    }
    if edges.len() + 1 != n {
        return None;
    }
    let branch: Vec<usize> = vs.iter().copied().filter(|&v| deg(v) >= 3).collect();
    // length of the arm starting at `first` away from `from`
    let arm = |from: usize, first: usize| -> usize {
        let (mut prev, mut cur, mut len) = (from, first, 1);
        loop {
            let next: Vec<usize> = nbrs(cur).into_iter().filter(|&w| w != prev).collect();
            if next.len() != 1 {
                return len;
            }
            prev = cur;
            cur = next[0];
            len += 1;
        }
    };
    match branch.as_slice() {
        [] => Some(format!("A{n}")),
        [c] if deg(*c) == 4 => (n == 5).then(|| "affine D4".to_string()),
        [c] if deg(*c) == 3 => {
            let mut arms: Vec<usize> = nbrs(*c).into_iter().map(|w| arm(*c, w)).collect();
            arms.sort_unstable();
            match arms.as_slice() {
                [1, 1, k] => Some(format!("D{}", k + 3)),
                [1, 2, 2] => Some("E6".into()),
                [1, 2, 3] => Some("E7".into()),
                [1, 2, 4] => Some("E8".into()),
                [2, 2, 2] => Some("affine E6".into()),
                [1, 3, 3] => Some("affine E7".into()),
                [1, 2, 5] => Some("affine E8".into()),
                _ => None,
            }
        }
        [a, b] if deg(*a) == 3 && deg(*b) == 3 => {
            let leaves = |c: usize| nbrs(c).into_iter().filter(|&w| deg(w) == 1).count();
            (leaves(*a) >= 2 && leaves(*b) >= 2).then(|| format!("affine D{}", n - 1))
        }
        _ => None,
    }
}

/// Standard graphs.
pub mod graphs {
    use super::Graph;

    pub fn finite_a(n: usize) -> Graph {
        let ids: Vec<String> = (1..=n).map(|k| format!("{k}")).collect();
        let refs: Vec<&str> = ids.iter().map(|s| s.as_str()).collect();
        let edges: Vec<(&str, &str)> = (0..n.saturating_sub(1)).map(|k| (refs[k], refs[k + 1])).collect();
        Graph::plumbing(&refs, &edges)
    }

    /// Cycle on n+1 vertices 1, …, n+1; for n = 1 two parallel edges.
    pub fn affine_a(n: usize) -> Graph {
        let ids: Vec<String> = (1..=n + 1).map(|k| format!("{k}")).collect();
        let refs: Vec<&str> = ids.iter().map(|s| s.as_str()).collect();
        let edges: Vec<(&str, &str)> = (0..=n).map(|k| (refs[k], refs[(k + 1) % (n + 1)])).collect();
        Graph::plumbing(&refs, &edges)
    }

    /// Central vertex 0 with leaves 1..4.
    pub fn affine_d4() -> Graph {
        Graph::plumbing(&["0", "1", "2", "3", "4"], &[("1", "0"), ("2", "0"), ("3", "0"), ("4", "0")])
    }

    /// One vertex with one self-edge (the self-plumbed sphere).
    pub fn jordan() -> Graph {
        Graph::plumbing(&["0"], &[("0", "0")])
    }
}
