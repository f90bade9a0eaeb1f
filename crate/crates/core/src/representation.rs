//! Matrix representations, representations by matrices over another quiver
//! algebra, affine charts and the obstruction coordinate change.

use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;
use thiserror::Error;

use crate::algebra::{preprojective_relation, substitute, AlgebraError, QuiverAlgebra};
use crate::linalg::{Matrix, SparseBasis};
use crate::path::{Element, Path};
use crate::quiver::{DoubleQuiver, Quiver};
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum RepError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("matrix of `{0}` has the wrong shape")]
    Shape(String),
    #[error("expected {expected} entries, found {found}")]
    Count { expected: usize, found: usize },
    #[error("entry ({row},{col}) of the image of `{arrow}` has the wrong ends")]
    EntryEnds { arrow: String, row: usize, col: usize },
    #[error("no image for `{0}`")]
    MissingImage(String),
    #[error("vertex maps do not chain")]
    Incompatible,
    #[error("element is not vertex-homogeneous")]
    NotHomogeneous,
    #[error("ε does not cover the quiver")]
    MissingEpsilon,
    #[error("reference vertex has rank {0}, expected 1")]
    RankNotOne(usize),
    #[error("gerbe at `{0}` is missing or has the wrong shape")]
    Gerbe(String),
    #[error("obstruction list does not match the unframed vertices")]
    ObstructionShape,
}

/// Linear maps B_a: K^{dims[t(a)]} → K^{dims[h(a)]}.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixRep<K: Scalar> {
    pub dims: Vec<usize>,
    pub mats: Vec<Matrix<K>>,
}

impl<K: Scalar> MatrixRep<K> {
    pub fn zero(q: &Quiver, dims: &[usize]) -> Self {
        let mats = q.arrows.iter().map(|a| Matrix::zeros(dims[a.head], dims[a.tail])).collect();
        MatrixRep { dims: dims.to_vec(), mats }
    }

    pub fn validate(&self, q: &Quiver) -> Result<(), RepError> {
        if self.dims.len() != q.n_vertices() {
            return Err(RepError::Count { expected: q.n_vertices(), found: self.dims.len() });
        }
        if self.mats.len() != q.n_arrows() {
            return Err(RepError::Count { expected: q.n_arrows(), found: self.mats.len() });
        }
        for (a, m) in q.arrows.iter().zip(&self.mats) {
            if m.shape() != (self.dims[a.head], self.dims[a.tail]) {
                return Err(RepError::Shape(a.id.clone()));
            }
        }
        Ok(())
    }

    pub fn eval_path(&self, p: &Path) -> Matrix<K> {
        match p {
            Path::Id(v) => Matrix::identity(self.dims[*v as usize]),
            Path::Seq(w) => {
                let mut m = self.mats[w[0] as usize].clone();
                for &a in &w[1..] {
                    m = m.mul(&self.mats[a as usize]);
                }
                m
            }
        }
    }

    /// Value of a vertex-homogeneous element.
    pub fn eval(&self, f: &Element<K>, q: &Quiver) -> Result<Matrix<K>, RepError> {
        let Some((h, t)) = f.homogeneous_ends(q) else {
            return if f.is_zero() { Ok(Matrix::zeros(0, 0)) } else { Err(RepError::NotHomogeneous) };
        };
        let mut m = Matrix::zeros(self.dims[h], self.dims[t]);
        for (p, c) in &f.terms {
            m = m.add(&self.eval_path(p).scale(c));
        }
        Ok(m)
    }

    /// Total dimension of the unframed part.
    pub fn unframed_dim(&self, q: &Quiver) -> usize {
        q.unframed_vertices().iter().map(|&v| self.dims[v]).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RepCheck<K: Scalar> {
    Pass,
    Fail { relation: usize, residual: Matrix<K> },
}

impl<K: Scalar> RepCheck<K> {
    pub fn passed(&self) -> bool {
        matches!(self, RepCheck::Pass)
    }
}

pub fn check_matrix_rep<K: Scalar>(rho: &MatrixRep<K>, alg: &QuiverAlgebra<K>) -> Result<RepCheck<K>, RepError> {
    rho.validate(&alg.quiver)?;
    for (k, r) in alg.relations.iter().enumerate() {
        let m = rho.eval(r, &alg.quiver)?;
        if !m.is_zero() {
            return Ok(RepCheck::Fail { relation: k, residual: m });
        }
    }
    Ok(RepCheck::Pass)
}

/// Σ_{t(a)=v} ε(a) B_ā B_a at each unframed vertex (the framing pair gives
/// i_v j_v).
pub fn moment_map<K: Scalar>(rho: &MatrixRep<K>, dq: &DoubleQuiver) -> Result<BTreeMap<usize, Matrix<K>>, RepError> {
    let q = &dq.quiver;
    rho.validate(q)?;
    if dq.eps.len() != q.n_arrows() || dq.bar.len() != q.n_arrows() {
        return Err(RepError::MissingEpsilon);
    }
    let mut out = BTreeMap::new();
    for v in q.unframed_vertices() {
        let r = preprojective_relation::<K>(dq, v);
        let m = if r.is_zero() { Matrix::zeros(rho.dims[v], rho.dims[v]) } else { rho.eval(&r, q)? };
        out.insert(v, m);
    }
    Ok(out)
}

/// A matrix whose entries are elements of a quiver algebra.
#[derive(Clone, Debug, PartialEq)]
pub struct ElemMatrix<K> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Element<K>>,
}

impl<K: Scalar> ElemMatrix<K> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ElemMatrix { rows, cols, data: vec![Element::zero(); rows * cols] }
    }

    /// e_v times the identity.
    pub fn identity(n: usize, v: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Element::idempotent(v));
        }
        m
    }

    pub fn scalar(e: Element<K>) -> Self {
        ElemMatrix { rows: 1, cols: 1, data: vec![e] }
    }

    pub fn from_rows(rows: Vec<Vec<Element<K>>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged matrix");
        ElemMatrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn get(&self, i: usize, j: usize) -> &Element<K> {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: Element<K>) {
        self.data[i * self.cols + j] = x;
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn mul(&self, o: &Self, q: &Quiver) -> Self {
        assert_eq!(self.cols, o.rows, "shape mismatch in product");
        let mut out = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let x = self.get(i, k);
                if x.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let y = o.get(k, j);
                    if !y.is_zero() {
                        let s = out.get(i, j).add(&x.mul(y, q));
                        out.set(i, j, s);
                    }
                }
            }
        }
        out
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!(self.shape(), o.shape());
        ElemMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&o.data).map(|(a, b)| a.add(b)).collect() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        assert_eq!(self.shape(), o.shape());
        ElemMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&o.data).map(|(a, b)| a.sub(b)).collect() }
    }

    pub fn scale(&self, c: &K) -> Self {
        ElemMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a.scale(c)).collect() }
    }

    pub fn map(&self, f: impl Fn(&Element<K>) -> Element<K>) -> Self {
        ElemMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn display(&self, q: &Quiver) -> Vec<Vec<String>> {
        (0..self.rows).map(|i| (0..self.cols).map(|j| self.get(i, j).display(q)).collect()).collect()
    }
}

/// A representation of a source quiver algebra by matrices over a target:
/// source vertex v goes to vertexMap(v) with multiplicity rank(v).
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolicRep<K> {
    pub vertex_map: Vec<usize>,
    pub rank: Vec<usize>,
    pub arrows: Vec<ElemMatrix<K>>,
}

impl<K: Scalar> SymbolicRep<K> {
    pub fn identity(q: &Quiver) -> Self {
        SymbolicRep {
            vertex_map: (0..q.n_vertices()).collect(),
            rank: vec![1; q.n_vertices()],
            arrows: (0..q.n_arrows()).map(|a| ElemMatrix::scalar(Element::arrow(a))).collect(),
        }
    }

    /// Builds a representation from images given by arrow id. Images of
    /// localized arrows may be omitted when the image of the localized
    /// element is a 1×1 invertible monomial; the inverse is then filled in.
    pub fn build(
        src: &QuiverAlgebra<K>,
        tgt: &QuiverAlgebra<K>,
        vertex_map: Vec<usize>,
        rank: Vec<usize>,
        images: Vec<(&str, ElemMatrix<K>)>,
    ) -> Result<Self, RepError> {
        let sq = &src.quiver;
        let mut arrows: Vec<Option<ElemMatrix<K>>> = vec![None; sq.n_arrows()];
        for (id, m) in images {
            let a = sq.arrow(id).map_err(AlgebraError::from)?;
            arrows[a] = Some(m);
        }
        for pair in &src.inverse_pairs {
            if pair.inverse.len() != 1 || pair.inverse[0].len() != 1 {
                continue;
            }
            let g = pair.inverse[0][0];
            if arrows[g].is_some() {
                continue;
            }
            let partial = SymbolicRep {
                vertex_map: vertex_map.clone(),
                rank: rank.clone(),
                arrows: arrows.iter().map(|m| m.clone().unwrap_or_else(|| ElemMatrix::zeros(0, 0))).collect(),
            };
            let orig = &pair.original[0][0];
            if orig.terms.keys().any(|p| p.arrows().iter().any(|&b| arrows[b as usize].is_none())) {
                continue;
            }
            let img = partial.apply(orig, &tgt.quiver)?;
            if img.shape() == (1, 1) {
                if let Some(inv) = invert_monomial(img.get(0, 0), tgt) {
                    arrows[g] = Some(ElemMatrix::scalar(inv));
                }
            }
        }
        let arrows = arrows
            .into_iter()
            .enumerate()
            .map(|(a, m)| m.ok_or_else(|| RepError::MissingImage(sq.arrows[a].id.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        let g = SymbolicRep { vertex_map, rank, arrows };
        g.validate(sq, &tgt.quiver)?;
        Ok(g)
    }

    pub fn validate(&self, src: &Quiver, tgt: &Quiver) -> Result<(), RepError> {
        if self.vertex_map.len() != src.n_vertices() || self.rank.len() != src.n_vertices() {
            return Err(RepError::Count { expected: src.n_vertices(), found: self.vertex_map.len().min(self.rank.len()) });
        }
        if self.arrows.len() != src.n_arrows() {
            return Err(RepError::Count { expected: src.n_arrows(), found: self.arrows.len() });
        }
        if self.vertex_map.iter().any(|&v| v >= tgt.n_vertices()) {
            return Err(RepError::Incompatible);
        }
        for (a, m) in src.arrows.iter().zip(&self.arrows) {
            if m.shape() != (self.rank[a.head], self.rank[a.tail]) {
                return Err(RepError::Shape(a.id.clone()));
            }
            let ends = (self.vertex_map[a.head], self.vertex_map[a.tail]);
            for i in 0..m.rows {
                for j in 0..m.cols {
                    let e = m.get(i, j);
                    if e.terms.keys().any(|p| (p.head(tgt), p.tail(tgt)) != ends) {
                        return Err(RepError::EntryEnds { arrow: a.id.clone(), row: i, col: j });
                    }
                }
            }
        }
        Ok(())
    }

    /// Image of a vertex-homogeneous element as a rank(h)×rank(t) matrix.
    pub fn apply(&self, f: &Element<K>, tgt: &Quiver) -> Result<ElemMatrix<K>, RepError> {
        let mut out: Option<ElemMatrix<K>> = None;
        for (p, c) in &f.terms {
            let m = match p {
                Path::Id(v) => ElemMatrix::identity(self.rank[*v as usize], self.vertex_map[*v as usize]),
                Path::Seq(w) => {
                    let mut m = self.arrows[w[0] as usize].clone();
                    for &a in &w[1..] {
                        m = m.mul(&self.arrows[a as usize], tgt);
                    }
                    m
                }
            }
            .scale(c);
            out = Some(match out {
                None => m,
                Some(o) if o.shape() == m.shape() => o.add(&m),
                Some(_) => return Err(RepError::NotHomogeneous),
            });
        }
        Ok(out.unwrap_or_else(|| ElemMatrix::zeros(0, 0)))
    }

    /// Rigid framing: framing vertices go to framing vertices with rank 1.
    pub fn framing_rigid(&self, src: &Quiver, tgt: &Quiver) -> bool {
        src.vertices.iter().enumerate().filter(|(_, v)| v.framing).all(|(k, _)| self.rank[k] == 1 && tgt.vertices[self.vertex_map[k]].framing)
    }
}

/// c·(path of invertible arrows) ↦ c⁻¹·(reversed path of inverses).
pub fn invert_monomial<K: Scalar>(f: &Element<K>, alg: &QuiverAlgebra<K>) -> Option<Element<K>> {
    if f.terms.len() != 1 {
        return None;
    }
    let (p, c) = f.terms.iter().next()?;
    let ci = c.inv()?;
    match p {
        Path::Id(v) => Some(Element::term(Path::Id(*v), ci)),
        Path::Seq(w) => {
            let inv = arrow_inverses(alg);
            let mut r = Vec::with_capacity(w.len());
            for a in w.iter().rev() {
                r.push(*inv.get(&(*a as usize))? as u32);
            }
            Some(Element::term(Path::Seq(r), ci))
        }
    }
}

/// Arrow ↔ inverse arrow for scalar localizations at single arrows.
pub fn arrow_inverses<K: Scalar>(alg: &QuiverAlgebra<K>) -> HashMap<usize, usize> {
    let mut m = HashMap::new();
    for pair in &alg.inverse_pairs {
        if pair.inverse.len() == 1 && pair.inverse[0].len() == 1 {
            if let Some((Path::Seq(w), c)) = pair.original[0][0].terms.iter().next() {
                if pair.original[0][0].terms.len() == 1 && w.len() == 1 && c.is_one() {
                    m.insert(w[0] as usize, pair.inverse[0][0]);
                    m.insert(pair.inverse[0][0], w[0] as usize);
                }
            }
        }
    }
    m
}

/// (G∘H)(a) = G applied entrywise to H(a), block (p,q) = G(H(a)_pq).
pub fn compose_symbolic<K: Scalar>(
    g: &SymbolicRep<K>,
    h: &SymbolicRep<K>,
    src: &Quiver,
    mid: &Quiver,
    tgt: &Quiver,
) -> Result<SymbolicRep<K>, RepError> {
    if h.vertex_map.iter().any(|&v| v >= g.vertex_map.len()) {
        return Err(RepError::Incompatible);
    }
    let vertex_map: Vec<usize> = h.vertex_map.iter().map(|&v| g.vertex_map[v]).collect();
    let rank: Vec<usize> = h.vertex_map.iter().zip(&h.rank).map(|(&v, &r)| r * g.rank[v]).collect();
    let mut arrows = Vec::with_capacity(h.arrows.len());
    for (a, m) in h.arrows.iter().enumerate() {
        let ends = (h.vertex_map[src.head(a)], h.vertex_map[src.tail(a)]);
        arrows.push(block_apply(g, m, Some(ends), mid, tgt)?);
    }
    Ok(SymbolicRep { vertex_map, rank, arrows })
}

/// Applies G to every entry of a matrix, assembling the blocks. Block sizes
/// come from the entries' ends; rows or columns that are entirely zero use
/// `ends` (head, tail) when given.
pub fn block_apply<K: Scalar>(
    g: &SymbolicRep<K>,
    m: &ElemMatrix<K>,
    ends: Option<(usize, usize)>,
    mid: &Quiver,
    tgt: &Quiver,
) -> Result<ElemMatrix<K>, RepError> {
    let mut row_v = vec![ends.map(|e| e.0); m.rows];
    let mut col_v = vec![ends.map(|e| e.1); m.cols];
    for i in 0..m.rows {
        for j in 0..m.cols {
            if let Some((hh, tt)) = m.get(i, j).homogeneous_ends(mid) {
                row_v[i] = Some(hh);
                col_v[j] = Some(tt);
            } else if !m.get(i, j).is_zero() {
                return Err(RepError::NotHomogeneous);
            }
        }
    }
    let rsz: Vec<usize> = row_v.iter().map(|v| v.map_or(0, |v| g.rank[v])).collect();
    let csz: Vec<usize> = col_v.iter().map(|v| v.map_or(0, |v| g.rank[v])).collect();
    let rows: usize = rsz.iter().sum();
    let cols: usize = csz.iter().sum();
    let mut out = ElemMatrix::zeros(rows, cols);
    let mut r0 = 0;
    for i in 0..m.rows {
        let mut c0 = 0;
        for j in 0..m.cols {
            let e = m.get(i, j);
            if !e.is_zero() {
                let b = g.apply(e, tgt)?;
                for p in 0..b.rows {
                    for q in 0..b.cols {
                        out.set(r0 + p, c0 + q, b.get(p, q).clone());
                    }
                }
            }
            c0 += csz[j];
        }
        r0 += rsz[i];
    }
    Ok(out)
}

/// An entry of a matrix identity that was not proved.
#[derive(Clone, Debug, PartialEq)]
pub struct Unresolved {
    pub what: String,
    pub row: usize,
    pub col: usize,
    pub residual: String,
}

/// Checks that every entry of `m` lies in the ideal of `alg`.
pub fn unresolved_entries<K: Scalar>(alg: &QuiverAlgebra<K>, m: &ElemMatrix<K>, what: &str, effort: usize) -> Vec<Unresolved> {
    let mut out = Vec::new();
    for i in 0..m.rows {
        for j in 0..m.cols {
            let e = m.get(i, j);
            if !alg.member(e, effort) {
                out.push(Unresolved { what: what.to_string(), row: i, col: j, residual: alg.show(&alg.nf(e, effort)) });
            }
        }
    }
    out
}

/// Relation preservation: every entry of G(r) is proved in the target ideal.
pub fn check_symbolic_rep<K: Scalar>(
    g: &SymbolicRep<K>,
    src: &QuiverAlgebra<K>,
    tgt: &QuiverAlgebra<K>,
    effort: usize,
) -> Result<Vec<Unresolved>, RepError> {
    g.validate(&src.quiver, &tgt.quiver)?;
    let images = src.relations.iter().map(|r| g.apply(r, &tgt.quiver)).collect::<Result<Vec<_>, _>>()?;
    tgt.groebner(effort);
    let out: Vec<Vec<Unresolved>> = images
        .par_iter()
        .enumerate()
        .map(|(k, m)| unresolved_entries(tgt, m, &format!("relation {}: {}", k, src.show(&src.relations[k])), effort))
        .collect();
    Ok(out.into_iter().flatten().collect())
}

/// An affine chart: a one-vertex algebra with maps to and from the localized
/// big algebra, mutually inverse up to conjugation by the gerbe c.
#[derive(Clone, Debug)]
pub struct ChartTriple<K: Scalar> {
    pub chart: QuiverAlgebra<K>,
    pub big: QuiverAlgebra<K>,
    /// chart → big
    pub g0i: SymbolicRep<K>,
    /// big → chart
    pub gi0: SymbolicRep<K>,
    /// c(v): rank(v)×1, entries from v to the reference vertex.
    pub gerbe: Vec<ElemMatrix<K>>,
    /// c(v)⁻¹: 1×rank(v).
    pub gerbe_inv: Vec<ElemMatrix<K>>,
}

#[derive(Clone, Debug, Default)]
pub struct ChartReport {
    pub g0i_relations: Vec<Unresolved>,
    pub gi0_relations: Vec<Unresolved>,
    /// Gi0∘G0i = Id on chart arrows.
    pub round_trip: Vec<Unresolved>,
    /// G0i∘Gi0(a) = c(h a) a c(t a)⁻¹ on big arrows.
    pub conjugation: Vec<Unresolved>,
    pub gerbe_inverse: Vec<Unresolved>,
    pub checked: usize,
}

impl ChartReport {
    pub fn passed(&self) -> bool {
        self.g0i_relations.is_empty()
            && self.gi0_relations.is_empty()
            && self.round_trip.is_empty()
            && self.conjugation.is_empty()
            && self.gerbe_inverse.is_empty()
    }

    pub fn failures(&self) -> Vec<&Unresolved> {
        self.g0i_relations
            .iter()
            .chain(&self.gi0_relations)
            .chain(&self.round_trip)
            .chain(&self.conjugation)
            .chain(&self.gerbe_inverse)
            .collect()
    }
}

impl<K: Scalar> ChartTriple<K> {
    /// Vertex of the big algebra the chart vertex is sent to.
    pub fn center(&self) -> usize {
        self.g0i.vertex_map[0]
    }
}

/// Borrowed pieces of a chart triple.
#[derive(Clone, Copy)]
pub struct ChartView<'a, K: Scalar> {
    pub chart: &'a QuiverAlgebra<K>,
    pub big: &'a QuiverAlgebra<K>,
    pub g0i: &'a SymbolicRep<K>,
    pub gi0: &'a SymbolicRep<K>,
    pub gerbe: &'a [ElemMatrix<K>],
    pub gerbe_inv: &'a [ElemMatrix<K>],
}

impl<K: Scalar> ChartTriple<K> {
    pub fn view(&self) -> ChartView<'_, K> {
        ChartView { chart: &self.chart, big: &self.big, g0i: &self.g0i, gi0: &self.gi0, gerbe: &self.gerbe, gerbe_inv: &self.gerbe_inv }
    }
}

pub fn verify_chart<K: Scalar>(c: &ChartTriple<K>, effort: usize) -> Result<ChartReport, RepError> {
    verify_chart_view(&c.view(), effort)
}

pub fn verify_chart_view<K: Scalar>(c: &ChartView<'_, K>, effort: usize) -> Result<ChartReport, RepError> {
    let bq = &c.big.quiver;
    let cq = &c.chart.quiver;
    let nb = bq.n_vertices();
    if c.gerbe.len() != nb || c.gerbe_inv.len() != nb {
        return Err(RepError::Gerbe("*".into()));
    }
    for v in 0..nb {
        let r = c.gi0.rank[v];
        if c.gerbe[v].shape() != (r, 1) || c.gerbe_inv[v].shape() != (1, r) {
            return Err(RepError::Gerbe(bq.vertices[v].id.clone()));
        }
    }
    let mut rep = ChartReport {
        g0i_relations: check_symbolic_rep(c.g0i, c.chart, c.big, effort)?,
        gi0_relations: check_symbolic_rep(c.gi0, c.big, c.chart, effort)?,
        ..Default::default()
    };
    let round = compose_symbolic(c.gi0, c.g0i, cq, bq, cq)?;
    for (x, m) in round.arrows.iter().enumerate() {
        let d = m.sub(&ElemMatrix::scalar(Element::arrow(x)));
        rep.round_trip.extend(unresolved_entries(c.chart, &d, &format!("Gi0∘G0i({})", cq.arrows[x].id), effort));
        rep.checked += 1;
    }
    let back = compose_symbolic(c.g0i, c.gi0, bq, cq, bq)?;
    let conj: Vec<Vec<Unresolved>> = (0..bq.n_arrows())
        .into_par_iter()
        .map(|a| {
            let (h, t) = (bq.head(a), bq.tail(a));
            let rhs = c.gerbe[h].mul(&ElemMatrix::scalar(Element::arrow(a)), bq).mul(&c.gerbe_inv[t], bq);
            let d = back.arrows[a].sub(&rhs);
            unresolved_entries(c.big, &d, &format!("G0i∘Gi0({})", bq.arrows[a].id), effort)
        })
        .collect();
    rep.checked += conj.len();
    rep.conjugation = conj.into_iter().flatten().collect();
    for v in 0..nb {
        let r = c.gi0.rank[v];
        let w = c.g0i.vertex_map[c.gi0.vertex_map[v]];
        let left = c.gerbe[v].mul(&c.gerbe_inv[v], bq).sub(&ElemMatrix::identity(r, w));
        let right = c.gerbe_inv[v].mul(&c.gerbe[v], bq).sub(&ElemMatrix::identity(1, v));
        let id = &bq.vertices[v].id;
        rep.gerbe_inverse.extend(unresolved_entries(c.big, &left, &format!("c({id})·c({id})⁻¹"), effort));
        rep.gerbe_inverse.extend(unresolved_entries(c.big, &right, &format!("c({id})⁻¹·c({id})"), effort));
        rep.checked += 2;
    }
    Ok(rep)
}

/// Result of the obstruction coordinate change.
#[derive(Clone, Debug)]
pub struct Standardization<K> {
    pub sigma: HashMap<usize, Element<K>>,
    pub sigma_inv: HashMap<usize, Element<K>>,
    pub verified: bool,
    pub mismatches: Vec<String>,
}

/// Σ_{t(a)=v} ε(a) x_ā x_a (1 + Σ a_j (x_ā x_a)^j) + i_v j_v (1 + Σ b_k (i_v j_v)^k),
/// truncated at path length `trunc`, for each unframed vertex.
pub fn raw_obstruction<K: Scalar>(dq: &DoubleQuiver, a: &[K], b: &[K], trunc: usize) -> Vec<Element<K>> {
    let q = &dq.quiver;
    let mut out = Vec::new();
    for v in q.unframed_vertices() {
        let mut r = Element::zero();
        for x in 0..q.n_arrows() {
            if q.tail(x) != v {
                continue;
            }
            let framing = q.vertices[q.head(x)].framing;
            let z = Element::path(Path::Seq(vec![dq.bar[x] as u32, x as u32]));
            let coeffs = if framing { b } else { a };
            let term = z.mul_trunc(&series(&z, coeffs, q, trunc), q, trunc);
            r.add_scaled(&term, &K::from_i64(dq.eps[x] as i64));
        }
        out.push(r);
    }
    out
}

/// 1 + Σ c_k z^k truncated at path length `trunc` (z a loop).
fn series<K: Scalar>(z: &Element<K>, c: &[K], q: &Quiver, trunc: usize) -> Element<K> {
    let (v, _) = z.homogeneous_ends(q).expect("loop");
    let mut out = Element::idempotent(v);
    let mut pw = Element::idempotent(v);
    for ck in c {
        pw = pw.mul_trunc(z, q, trunc);
        if pw.is_zero() {
            break;
        }
        out.add_scaled(&pw, ck);
    }
    out
}

/// Coefficients of g with g(z·u(z))·u(z) = 1 up to z^n, u = 1 + Σ c_k z^k.
pub fn inverse_series<K: Scalar>(c: &[K], n: usize) -> Vec<K> {
    let mul = |x: &[K], y: &[K]| -> Vec<K> {
        let mut r = vec![K::zero(); n + 1];
        for (i, xi) in x.iter().enumerate() {
            for (j, yj) in y.iter().enumerate() {
                if i + j <= n {
                    r[i + j] = r[i + j].add(&xi.mul(yj));
                }
            }
        }
        r
    };
    let mut u = vec![K::zero(); n + 1];
    u[0] = K::one();
    for (k, ck) in c.iter().enumerate() {
        if k < n {
            u[k + 1] = ck.clone();
        }
    }
    let mut h = vec![K::zero(); n + 1];
    h[1..].clone_from_slice(&u[..n]);
    // hk_u[k] = h^k · u
    let mut hk = {
        let mut one = vec![K::zero(); n + 1];
        one[0] = K::one();
        one
    };
    let mut hk_u = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        hk_u.push(mul(&hk, &u));
        hk = mul(&hk, &h);
    }
    let mut g = vec![K::zero(); n + 1];
    for m in 0..=n {
        let mut s = if m == 0 { K::one() } else { K::zero() };
        for k in 0..m {
            s = s.sub(&g[k].mul(&hk_u[k][m]));
        }
        g[m] = s;
    }
    g
}

/// Substitutes x_a ↦ x_a u(x_ā x_a) for ε(a) = +1 (non-framing) and
/// i_v ↦ u_b(i_v j_v) i_v, then checks against the raw obstruction.
pub fn coordinate_standardize<K: Scalar>(
    dq: &DoubleQuiver,
    raw: &[Element<K>],
    a: &[K],
    b: &[K],
    effort: usize,
) -> Result<Standardization<K>, RepError> {
    let q = &dq.quiver;
    if dq.eps.len() != q.n_arrows() {
        return Err(RepError::MissingEpsilon);
    }
    let verts = q.unframed_vertices();
    if raw.len() != verts.len() {
        return Err(RepError::ObstructionShape);
    }
    for (r, &v) in raw.iter().zip(&verts) {
        match r.homogeneous_ends(q) {
            Some(e) if e == (v, v) => {}
            None if r.is_zero() => {}
            _ => return Err(RepError::ObstructionShape),
        }
    }
    let n = effort / 2 + 1;
    let ga = inverse_series(a, n);
    let gb = inverse_series(b, n);
    let mut sigma = HashMap::new();
    let mut sigma_inv = HashMap::new();
    for x in 0..q.n_arrows() {
        let from_framing = q.vertices[q.tail(x)].framing;
        let to_framing = q.vertices[q.head(x)].framing;
        let xe = Element::arrow(x);
        if from_framing {
            // i_v, z = i_v j_v at v
            let z = Element::path(Path::Seq(vec![x as u32, dq.bar[x] as u32]));
            sigma.insert(x, series(&z, b, q, effort).mul_trunc(&xe, q, effort));
            sigma_inv.insert(x, series(&z, &gb[1..], q, effort).mul_trunc(&xe, q, effort));
        } else if !to_framing && dq.eps[x] > 0 {
            let z = Element::path(Path::Seq(vec![dq.bar[x] as u32, x as u32]));
            sigma.insert(x, xe.mul_trunc(&series(&z, a, q, effort), q, effort));
            sigma_inv.insert(x, xe.mul_trunc(&series(&z, &ga[1..], q, effort), q, effort));
        }
    }
    let apply = |s: &HashMap<usize, Element<K>>, f: &Element<K>| {
        let img = |k: usize| s.get(&k).cloned().unwrap_or_else(|| Element::arrow(k));
        substitute(f, q, q, &|v| v, &img, Some(effort))
    };
    let mut mismatches = Vec::new();
    for (r, &v) in raw.iter().zip(&verts) {
        let std_v: Element<K> = preprojective_relation(dq, v);
        let vid = &q.vertices[v].id;
        if apply(&sigma, &std_v) != r.truncate(effort) {
            mismatches.push(format!("σ(standard generator at {vid}) differs from the obstruction"));
        }
        if apply(&sigma_inv, r) != std_v.truncate(effort) {
            mismatches.push(format!("σ⁻¹(obstruction at {vid}) differs from the standard generator"));
        }
    }
    for x in sigma.keys() {
        let xe = Element::arrow(*x);
        if apply(&sigma, &sigma_inv[x]) != xe || apply(&sigma_inv, &sigma[x]) != xe {
            mismatches.push(format!("σ and σ⁻¹ are not inverse on {}", q.arrows[*x].id));
        }
    }
    Ok(Standardization { sigma, sigma_inv, verified: mismatches.is_empty(), mismatches })
}

/// Certificate that a family over a one-vertex chart is generated by the
/// line at the reference vertex: per vertex, paths whose images form an
/// invertible scalar matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct StableCertificate {
    pub stable: bool,
    pub paths: Vec<Vec<Path>>,
    /// Vertices whose blocks were not filled.
    pub missing: Vec<usize>,
}

pub fn stable_family_check<K: Scalar>(
    g: &SymbolicRep<K>,
    src: &QuiverAlgebra<K>,
    chart: &QuiverAlgebra<K>,
    v1: usize,
    effort: usize,
) -> Result<StableCertificate, RepError> {
    let sq = &src.quiver;
    let cq = &chart.quiver;
    g.validate(sq, cq)?;
    if g.rank[v1] != 1 {
        return Err(RepError::RankNotOne(g.rank[v1]));
    }
    let nv = sq.n_vertices();
    let mut bases: Vec<SparseBasis<K>> = (0..nv).map(|_| SparseBasis::new()).collect();
    let mut paths: Vec<Vec<Path>> = vec![Vec::new(); nv];
    let mut seen: HashSet<(usize, Vec<Element<K>>)> = HashSet::new();
    let start = vec![Element::idempotent(g.vertex_map[v1])];
    let mut frontier = vec![(v1, Path::Id(v1 as u32), start.clone())];
    seen.insert((v1, start.clone()));
    bases[v1].insert(vec![(0, K::one())]);
    paths[v1].push(Path::Id(v1 as u32));
    let full = |bases: &[SparseBasis<K>]| (0..nv).all(|v| bases[v].dim() == g.rank[v]);
    for _ in 0..effort {
        if full(&bases) || frontier.is_empty() {
            break;
        }
        let mut next = Vec::new();
        for (v, p, vec) in &frontier {
            for a in 0..sq.n_arrows() {
                if sq.tail(a) != *v {
                    continue;
                }
                let h = sq.head(a);
                let col = ElemMatrix { rows: vec.len(), cols: 1, data: vec.clone() };
                let img = g.arrows[a].mul(&col, cq);
                let nvec: Vec<Element<K>> = img.data.iter().map(|e| chart.nf(e, effort)).collect();
                if nvec.iter().all(|e| e.is_zero()) || !seen.insert((h, nvec.clone())) {
                    continue;
                }
                let np = Path::Seq(vec![a as u32]).mul(p, sq).expect("composable");
                if let Some(sv) = scalar_vector(&nvec) {
                    if bases[h].insert(sv) {
                        paths[h].push(np.clone());
                    }
                }
                if next.len() < 4096 {
                    next.push((h, np, nvec));
                }
            }
        }
        frontier = next;
    }
    let missing: Vec<usize> = (0..nv).filter(|&v| bases[v].dim() < g.rank[v]).collect();
    Ok(StableCertificate { stable: missing.is_empty(), paths, missing })
}

fn scalar_vector<K: Scalar>(v: &[Element<K>]) -> Option<Vec<(usize, K)>> {
    let mut out = Vec::new();
    for (i, e) in v.iter().enumerate() {
        let c = e.as_scalar()?;
        if !c.is_zero() {
            out.push((i, c));
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::preprojective_algebra;
    use crate::quiver::adhm_quiver;
    use crate::scalar::{int, Rational};

    fn adhm_rep(b1: Matrix<Rational>, b2: Matrix<Rational>, i: Matrix<Rational>, j: Matrix<Rational>) -> MatrixRep<Rational> {
        let n = b1.rows;
        let r = i.cols;
        MatrixRep { dims: vec![n, r], mats: vec![b1, b2, i, j] }
    }

    #[test]
    fn diagonal_adhm_passes() {
        let dq = adhm_quiver();
        let alg = preprojective_algebra::<Rational>(&dq);
        let rho = adhm_rep(
            Matrix::from_i64(&[&[0, 0], &[0, 1]]),
            Matrix::from_i64(&[&[0, 0], &[0, 2]]),
            Matrix::from_i64(&[&[1], &[1]]),
            Matrix::zeros(1, 2),
        );
        assert!(check_matrix_rep(&rho, &alg).unwrap().passed());
        assert!(moment_map(&rho, &dq).unwrap().values().all(|m| m.is_zero()));
    }

    #[test]
    fn nilpotent_pair_fails() {
        let dq = adhm_quiver();
        let alg = preprojective_algebra::<Rational>(&dq);
        let rho = adhm_rep(
            Matrix::from_i64(&[&[0, 1], &[0, 0]]),
            Matrix::from_i64(&[&[0, 0], &[1, 0]]),
            Matrix::zeros(2, 1),
            Matrix::zeros(1, 2),
        );
        match check_matrix_rep(&rho, &alg).unwrap() {
            RepCheck::Fail { residual, .. } => assert_eq!(residual, Matrix::from_i64(&[&[1, 0], &[0, -1]])),
            RepCheck::Pass => panic!("commutator is nonzero"),
        }
    }

    #[test]
    fn wrong_shape_is_an_error() {
        let dq = adhm_quiver();
        let alg = preprojective_algebra::<Rational>(&dq);
        let mut rho = MatrixRep::zero(&dq.quiver, &[2, 1]);
        rho.mats[2] = Matrix::zeros(1, 1);
        assert!(check_matrix_rep(&rho, &alg).is_err());
    }

    #[test]
    fn inverse_series_low_order() {
        // u = 1 + a z: g = 1 − a w + 2a² w² + ...
        let a = int(2);
        let g = inverse_series(std::slice::from_ref(&a), 3);
        assert_eq!(g[0], int(1));
        assert_eq!(g[1], -a.clone());
        assert_eq!(g[2], int(2) * a.clone() * a.clone());
    }

    #[test]
    fn zero_series_is_identity() {
        let dq = adhm_quiver();
        let raw = raw_obstruction::<Rational>(&dq, &[], &[], 6);
        let s = coordinate_standardize(&dq, &raw, &[], &[], 6).unwrap();
        assert!(s.verified);
        for (k, v) in &s.sigma {
            assert_eq!(*v, Element::arrow(*k));
        }
    }

    #[test]
    fn adhm_standardization() {
        let dq = adhm_quiver();
        let a = [Rational::new(3.into(), 7.into())];
        let b = [Rational::new((-2).into(), 5.into())];
        let raw = raw_obstruction(&dq, &a, &b, 8);
        let s = coordinate_standardize(&dq, &raw, &a, &b, 8).unwrap();
        assert!(s.verified, "{:?}", s.mismatches);
        let wrong = raw_obstruction(&dq, &[int(1)], &b, 8);
        assert!(!coordinate_standardize(&dq, &wrong, &a, &b, 8).unwrap().verified);
    }

    #[test]
    fn identity_rep_preserves_relations() {
        let dq = adhm_quiver();
        let alg = preprojective_algebra::<Rational>(&dq);
        let id = SymbolicRep::identity(&alg.quiver);
        assert!(check_symbolic_rep(&id, &alg, &alg, 4).unwrap().is_empty());
        let c = compose_symbolic(&id, &id, &alg.quiver, &alg.quiver, &alg.quiver).unwrap();
        assert_eq!(c, id);
    }
}
