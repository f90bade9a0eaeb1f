//! Three-term complexes of free right modules over a quiver algebra: the
//! ADHM monad, the Nakajima monad and the framed-functor complexes.
//!
//! A generator slot at vertex v with multiplicity m stands for K^m ⊗ 𝔸e_v.
//! Differentials act by η ↦ Σ L·η·r with scalar matrices L and r ∈ e_v𝔸e_w.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{preprojective_algebra, QuiverAlgebra};
use crate::linalg::{Matrix, SparseBasis};
use crate::path::{Element, Path};
use crate::quiver::{DoubleQuiver, Quiver};
use crate::representation::{moment_map, MatrixRep, RepError};
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum MonadError {
    #[error(transparent)]
    Rep(#[from] RepError),
    #[error("moment map does not vanish at vertex `{0}`")]
    Obstructed(String),
    #[error("operator from `{from}` to `{to}` has the wrong shape")]
    Shape { from: String, to: String },
    #[error("coefficient of the operator from `{from}` to `{to}` has the wrong ends")]
    Ends { from: String, to: String },
    #[error("the complex is not over a two-loop algebra")]
    NotAdhm,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub label: String,
    pub vertex: usize,
    pub mult: usize,
}

/// η ↦ Σ_k L_k η r_k.
#[derive(Clone, Debug, PartialEq)]
pub struct BimoduleOperator<K: Scalar> {
    pub rows: usize,
    pub cols: usize,
    pub terms: Vec<(Matrix<K>, Element<K>)>,
}

impl<K: Scalar> BimoduleOperator<K> {
    pub fn zero(rows: usize, cols: usize) -> Self {
        BimoduleOperator { rows, cols, terms: Vec::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|(l, r)| l.is_zero() || r.is_zero())
    }

    pub fn push(&mut self, l: Matrix<K>, r: Element<K>) {
        if !l.is_zero() && !r.is_zero() {
            self.terms.push((l, r));
        }
    }

    /// (self ∘ other)(η) = self(other(η)).
    pub fn compose(&self, other: &Self, q: &Quiver) -> Self {
        let mut out = BimoduleOperator::zero(self.rows, other.cols);
        for (l1, r1) in &self.terms {
            for (l0, r0) in &other.terms {
                out.push(l1.mul(l0), r0.mul(r1, q));
            }
        }
        out
    }

    /// Entry (p, q) as an algebra element Σ_k (L_k)_pq r_k.
    pub fn entry(&self, p: usize, q: usize) -> Element<K> {
        let mut e = Element::zero();
        for (l, r) in &self.terms {
            let c = l.get(p, q);
            if !c.is_zero() {
                e.add_scaled(r, c);
            }
        }
        e
    }
}

#[derive(Clone, Debug)]
pub struct FreeComplex<K: Scalar> {
    pub terms: [Vec<Slot>; 3],
    /// d0[target][source]
    pub d0: Vec<Vec<BimoduleOperator<K>>>,
    pub d1: Vec<Vec<BimoduleOperator<K>>>,
    pub coeff: QuiverAlgebra<K>,
}

impl<K: Scalar> FreeComplex<K> {
    pub fn ranks(&self) -> [usize; 3] {
        let r = |k: usize| self.terms[k].iter().map(|s| s.mult).sum();
        [r(0), r(1), r(2)]
    }

    pub fn validate(&self) -> Result<(), MonadError> {
        let q = &self.coeff.quiver;
        for (d, (src, tgt)) in [(&self.d0, (&self.terms[0], &self.terms[1])), (&self.d1, (&self.terms[1], &self.terms[2]))] {
            if d.len() != tgt.len() || d.iter().any(|row| row.len() != src.len()) {
                return Err(MonadError::Shape { from: "*".into(), to: "*".into() });
            }
            for (ti, t) in tgt.iter().enumerate() {
                for (si, s) in src.iter().enumerate() {
                    let op = &d[ti][si];
                    let err = || MonadError::Shape { from: s.label.clone(), to: t.label.clone() };
                    if op.rows != t.mult || op.cols != s.mult || op.terms.iter().any(|(l, _)| l.shape() != (t.mult, s.mult)) {
                        return Err(err());
                    }
                    for (_, r) in &op.terms {
                        if r.terms.keys().any(|p| p.head(q) != s.vertex || p.tail(q) != t.vertex) {
                            return Err(MonadError::Ends { from: s.label.clone(), to: t.label.clone() });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn slot_index(&self, pos: usize, label: &str) -> Option<usize> {
        self.terms[pos].iter().position(|s| s.label == label)
    }
}

/// Which complex to assemble from a framed double quiver.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ComplexKind {
    /// Coefficients in the unframed preprojective algebra; framing enters
    /// through J_v slots and the matrices i_v, j_v.
    Monad,
    /// Coefficients in the framed preprojective algebra; every arrow of the
    /// framed double quiver gets a middle slot and every vertex a last slot.
    FramedFunctor,
}

/// The unframed part of a framed double quiver.
pub fn unframed_part(dq: &DoubleQuiver) -> (DoubleQuiver, Vec<Option<usize>>, Vec<Option<usize>>) {
    let q = &dq.quiver;
    let mut out = Quiver::new();
    let mut vmap = vec![None; q.n_vertices()];
    for v in q.unframed_vertices() {
        vmap[v] = Some(out.add_vertex(&q.vertices[v].id, false).expect("distinct ids"));
    }
    let mut amap = vec![None; q.n_arrows()];
    for (k, a) in q.arrows.iter().enumerate() {
        if let (Some(t), Some(h)) = (vmap[a.tail], vmap[a.head]) {
            amap[k] = Some(out.add_arrow_idx(&a.id, t, h, a.degree).expect("distinct ids"));
        }
    }
    let kept: Vec<usize> = (0..q.n_arrows()).filter(|&k| amap[k].is_some()).collect();
    let eps = kept.iter().map(|&k| dq.eps[k]).collect();
    let bar = kept.iter().map(|&k| amap[dq.bar[k]].expect("bar of an unframed arrow is unframed")).collect();
    (DoubleQuiver { quiver: out, eps, bar }, vmap, amap)
}

fn check_unobstructed<K: Scalar>(rho: &MatrixRep<K>, dq: &DoubleQuiver) -> Result<(), MonadError> {
    for (v, m) in moment_map(rho, dq)? {
        if !m.is_zero() {
            return Err(MonadError::Obstructed(dq.quiver.vertices[v].id.clone()));
        }
    }
    Ok(())
}

/// Assembles the complex without checking the moment map.
pub fn assemble<K: Scalar>(dq: &DoubleQuiver, rho: &MatrixRep<K>, kind: ComplexKind) -> Result<FreeComplex<K>, MonadError> {
    let q = &dq.quiver;
    rho.validate(q)?;
    let framed = |v: usize| q.vertices[v].framing;
    let (coeff, vmap, amap): (QuiverAlgebra<K>, Vec<Option<usize>>, Vec<Option<usize>>) = match kind {
        ComplexKind::Monad => {
            let (u, vm, am) = unframed_part(dq);
            (preprojective_algebra(&u), vm, am)
        }
        ComplexKind::FramedFunctor => (preprojective_algebra(dq), (0..q.n_vertices()).map(Some).collect(), (0..q.n_arrows()).map(Some).collect()),
    };
    let cq = coeff.quiver.clone();
    let id = |v: usize| q.vertices[v].id.clone();
    let aid = |a: usize| q.arrows[a].id.clone();
    // slots
    let c0: Vec<(usize, Slot)> = q
        .unframed_vertices()
        .into_iter()
        .map(|v| (v, Slot { label: format!("M_{}", id(v)), vertex: vmap[v].unwrap(), mult: rho.dims[v] }))
        .collect();
    let mut c1: Vec<(usize, Slot)> = Vec::new();
    let mut c2: Vec<(usize, Slot)> = Vec::new();
    for a in 0..q.n_arrows() {
        if let Some(ca) = amap[a] {
            c1.push((a, Slot { label: format!("X_{}", aid(a)), vertex: cq.tail(ca), mult: rho.dims[q.head(a)] }));
        }
    }
    let js: Vec<usize> = (0..q.n_arrows()).filter(|&a| framed(q.head(a)) && !framed(q.tail(a))).collect();
    if kind == ComplexKind::Monad {
        for &j in &js {
            let v = q.tail(j);
            c1.push((j, Slot { label: format!("J_{}", id(v)), vertex: vmap[v].unwrap(), mult: rho.dims[q.head(j)] }));
        }
    }
    for v in 0..q.n_vertices() {
        if let Some(cv) = vmap[v] {
            c2.push((v, Slot { label: format!("P_{}", id(v)), vertex: cv, mult: rho.dims[v] }));
        }
    }
    let n_mid_x = c1.len() - if kind == ComplexKind::Monad { js.len() } else { 0 };
    let mut d0: Vec<Vec<BimoduleOperator<K>>> =
        c1.iter().map(|(_, t)| c0.iter().map(|(_, s)| BimoduleOperator::zero(t.mult, s.mult)).collect()).collect();
    let mut d1: Vec<Vec<BimoduleOperator<K>>> =
        c2.iter().map(|(_, t)| c1.iter().map(|(_, s)| BimoduleOperator::zero(t.mult, s.mult)).collect()).collect();
    let pos0 = |v: usize| c0.iter().position(|(w, _)| *w == v);
    let pos2 = |v: usize| c2.iter().position(|(w, _)| *w == v);
    let pos1 = |a: usize| c1[..n_mid_x].iter().position(|(b, _)| *b == a);
    let e = |v: usize| Element::idempotent(vmap[v].unwrap());
    let x = |a: usize| Element::arrow(amap[a].unwrap());
    let one = K::one();
    for (k, (a, _)) in c1[..n_mid_x].iter().enumerate() {
        let a = *a;
        let (t, h) = (q.tail(a), q.head(a));
        // d0: B_a η_t − η_h x_a
        if let Some(s) = pos0(t) {
            d0[k][s].push(rho.mats[a].clone(), e(t));
        }
        if let Some(s) = pos0(h) {
            d0[k][s].push(Matrix::identity(rho.dims[h]).neg(), x(a));
        }
        // d1 at P_t: ε(a) (B_ā ξ_a + ξ_ā x_a)
        let eps = K::from_i64(dq.eps[a] as i64);
        let b = dq.bar[a];
        if let Some(p) = pos2(t) {
            d1[p][k].push(rho.mats[b].scale(&eps), e(t));
            if let Some(kb) = pos1(b) {
                d1[p][kb].push(Matrix::identity(rho.dims[t]).scale(&eps), x(a));
            }
        }
    }
    if kind == ComplexKind::Monad {
        for (m, &j) in js.iter().enumerate() {
            let k = n_mid_x + m;
            let v = q.tail(j);
            let i = dq.bar[j];
            d0[k][pos0(v).unwrap()].push(rho.mats[j].clone(), e(v));
            d1[pos2(v).unwrap()][k].push(rho.mats[i].scale(&one), e(v));
        }
    }
    let c = FreeComplex {
        terms: [c0.into_iter().map(|x| x.1).collect(), c1.into_iter().map(|x| x.1).collect(), c2.into_iter().map(|x| x.1).collect()],
        d0,
        d1,
        coeff,
    };
    c.validate()?;
    Ok(c)
}

/// Monad with coefficients in the unframed preprojective algebra.
pub fn build_nakajima_monad<K: Scalar>(dq: &DoubleQuiver, rho: &MatrixRep<K>) -> Result<FreeComplex<K>, MonadError> {
    check_unobstructed(rho, dq)?;
    assemble(dq, rho, ComplexKind::Monad)
}

/// Framed-functor complex over the framed preprojective algebra.
pub fn build_framed_functor_complex<K: Scalar>(dq: &DoubleQuiver, rho: &MatrixRep<K>) -> Result<FreeComplex<K>, MonadError> {
    check_unobstructed(rho, dq)?;
    assemble(dq, rho, ComplexKind::FramedFunctor)
}

fn adhm_labels<K: Scalar>(mut c: FreeComplex<K>, map: &[(&str, &str)]) -> FreeComplex<K> {
    for t in c.terms.iter_mut() {
        for s in t.iter_mut() {
            if let Some((_, new)) = map.iter().find(|(old, _)| *old == s.label) {
                s.label = new.to_string();
            }
        }
    }
    c
}

/// ⟨α₁⟩ → ⟨X̃, Ỹ, J̃⟩ → ⟨α₂⟩ over k[x,y], for the framed Jordan quiver
/// from `adhm_quiver`.
pub fn build_adhm_monad<K: Scalar>(dq: &DoubleQuiver, rho: &MatrixRep<K>) -> Result<FreeComplex<K>, MonadError> {
    if dq.quiver.n_arrows() != 4 || dq.quiver.n_vertices() != 2 {
        return Err(MonadError::NotAdhm);
    }
    let c = build_nakajima_monad(dq, rho)?;
    Ok(adhm_labels(c, &[("M_0", "α1"), ("X_x", "X̃"), ("X_y", "Ỹ"), ("J_0", "J̃"), ("P_0", "α2")]))
}

/// ⟨α₁⟩ → ⟨X̃, Ỹ, Ĩ, J̃⟩ → ⟨α₂, α₃⟩ over the framed ADHM algebra.
pub fn build_adhm_framed_functor<K: Scalar>(dq: &DoubleQuiver, rho: &MatrixRep<K>) -> Result<FreeComplex<K>, MonadError> {
    if dq.quiver.n_arrows() != 4 || dq.quiver.n_vertices() != 2 {
        return Err(MonadError::NotAdhm);
    }
    let c = build_framed_functor_complex(dq, rho)?;
    Ok(adhm_labels(c, &[("M_0", "α1"), ("X_x", "X̃"), ("X_y", "Ỹ"), ("X_i", "Ĩ"), ("X_j", "J̃"), ("P_0", "α2"), ("P_f", "α3")]))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct D2Entry {
    pub from: String,
    pub to: String,
    pub row: usize,
    pub col: usize,
    pub residual: String,
}

/// Every entry of d1∘d0 proved in the coefficient ideal; returns the
/// entries that were not.
pub fn verify_d_squared<K: Scalar>(c: &FreeComplex<K>, effort: usize) -> Result<Vec<D2Entry>, MonadError> {
    c.validate()?;
    let q = &c.coeff.quiver;
    c.coeff.groebner(effort);
    let pairs: Vec<(usize, usize)> = (0..c.terms[2].len()).flat_map(|t| (0..c.terms[0].len()).map(move |s| (t, s))).collect();
    let out: Vec<Vec<D2Entry>> = pairs
        .par_iter()
        .map(|&(t, s)| {
            let mut acc = BimoduleOperator::zero(c.terms[2][t].mult, c.terms[0][s].mult);
            for m in 0..c.terms[1].len() {
                acc.terms.extend(c.d1[t][m].compose(&c.d0[m][s], q).terms);
            }
            let mut bad = Vec::new();
            for p in 0..acc.rows {
                for r in 0..acc.cols {
                    let e = acc.entry(p, r);
                    if !c.coeff.member(&e, effort) {
                        bad.push(D2Entry {
                            from: c.terms[0][s].label.clone(),
                            to: c.terms[2][t].label.clone(),
                            row: p,
                            col: r,
                            residual: c.coeff.show(&c.coeff.nf(&e, effort)),
                        });
                    }
                }
            }
            bad
        })
        .collect();
    Ok(out.into_iter().flatten().collect())
}

/// Scalar matrix of a differential with every loop arrow replaced by a
/// scalar (arrows not listed act by zero).
pub fn specialize<K: Scalar>(d: &[Vec<BimoduleOperator<K>>], src: &[Slot], tgt: &[Slot], values: &HashMap<usize, K>) -> Matrix<K> {
    let rows: usize = tgt.iter().map(|s| s.mult).sum();
    let cols: usize = src.iter().map(|s| s.mult).sum();
    let mut m = Matrix::<K>::zeros(rows, cols);
    let mut r0 = 0;
    for (ti, t) in tgt.iter().enumerate() {
        let mut c0 = 0;
        for (si, s) in src.iter().enumerate() {
            for (l, r) in &d[ti][si].terms {
                let mut val = K::zero();
                for (p, c) in &r.terms {
                    let mut x = c.clone();
                    for a in p.arrows() {
                        x = x.mul(values.get(&(*a as usize)).unwrap_or(&K::zero()));
                    }
                    val = val.add(&x);
                }
                if val.is_zero() {
                    continue;
                }
                for i in 0..t.mult {
                    for j in 0..s.mult {
                        let y = m.get(r0 + i, c0 + j).add(&l.get(i, j).mul(&val));
                        m.set(r0 + i, c0 + j, y);
                    }
                }
            }
            c0 += s.mult;
        }
        r0 += t.mult;
    }
    m
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointRanks {
    pub rank_d0: usize,
    pub rank_d1: usize,
    pub cohomology: usize,
}

/// Ranks of the ADHM monad at (x, y) = p.
pub fn evaluate_adhm_at_point<K: Scalar>(c: &FreeComplex<K>, p: (K, K)) -> Result<PointRanks, MonadError> {
    let q = &c.coeff.quiver;
    let (Ok(x), Ok(y)) = (q.arrow("x"), q.arrow("y")) else { return Err(MonadError::NotAdhm) };
    let values: HashMap<usize, K> = [(x, p.0), (y, p.1)].into_iter().collect();
    let m0 = specialize(&c.d0, &c.terms[0], &c.terms[1], &values);
    let m1 = specialize(&c.d1, &c.terms[1], &c.terms[2], &values);
    let mid = c.ranks()[1];
    let (r0, r1) = (m0.rank(), m1.rank());
    Ok(PointRanks { rank_d0: r0, rank_d1: r1, cohomology: mid - r0 - r1 })
}

/// One CSV row per grid point: x,y,rank_d0,rank_d1,cohomology.
pub fn rank_profile_csv<K: Scalar>(c: &FreeComplex<K>, points: &[(K, K)]) -> Result<String, MonadError> {
    let rows: Vec<Result<String, MonadError>> = points
        .par_iter()
        .map(|p| {
            let r = evaluate_adhm_at_point(c, p.clone())?;
            Ok(format!("{},{},{},{},{}", p.0, p.1, r.rank_d0, r.rank_d1, r.cohomology))
        })
        .collect();
    let mut out = String::from("x,y,rank_d0,rank_d1,cohomology\n");
    for r in rows {
        out.push_str(&r?);
        out.push('\n');
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelHomology {
    pub level: usize,
    pub h0: usize,
    pub h1: usize,
}

/// Coordinates (slot, multiplicity index, normal word) of a free term.
struct Coords {
    index: HashMap<(usize, usize, Path), usize>,
}

impl Coords {
    fn new() -> Self {
        Coords { index: HashMap::new() }
    }

    fn get(&mut self, key: (usize, usize, Path)) -> usize {
        let n = self.index.len();
        *self.index.entry(key).or_insert(n)
    }
}

/// Image of the basis vector e_p ⊗ w of source slot s under d.
fn apply_basis<K: Scalar>(
    d: &[Vec<BimoduleOperator<K>>],
    s: usize,
    p: usize,
    w: &Path,
    tgt: &[Slot],
    alg: &QuiverAlgebra<K>,
    effort: usize,
    coords: &mut Coords,
) -> Vec<(usize, K)> {
    let q = &alg.quiver;
    let mut acc: HashMap<usize, K> = HashMap::new();
    let we = Element::path(w.clone());
    for (ti, t) in tgt.iter().enumerate() {
        for (l, r) in &d[ti][s].terms {
            let prod = alg.nf(&we.mul(r, q), effort);
            if prod.is_zero() {
                continue;
            }
            for i in 0..t.mult {
                let c = l.get(i, p);
                if c.is_zero() {
                    continue;
                }
                for (path, pc) in &prod.terms {
                    let k = coords.get((ti, i, path.clone()));
                    let e = acc.entry(k).or_insert_with(K::zero);
                    *e = e.add(&c.mul(pc));
                }
            }
        }
    }
    let mut v: Vec<(usize, K)> = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
    v.sort_by_key(|x| x.0);
    v
}

/// Homology of the complex restricted to words of length ≤ L at positions
/// 0 and 1, for L = 0..=level. Position-1 boundaries are taken from
/// d0(F_{L+slack}).
pub fn slice_exactness<K: Scalar>(c: &FreeComplex<K>, level: usize, slack: usize) -> Result<Vec<LevelHomology>, MonadError> {
    c.validate()?;
    let alg = &c.coeff;
    let effort = level + slack + 2;
    let gb = alg.groebner(effort);
    let words = |slots: &[Slot], len: usize| -> Vec<(usize, usize, Path)> {
        let mut out = Vec::new();
        for (si, s) in slots.iter().enumerate() {
            let ws = gb.normal_words(s.vertex, len);
            for p in 0..s.mult {
                for w in &ws {
                    out.push((si, p, w.clone()));
                }
            }
        }
        out
    };
    let mut result = Vec::new();
    for l in 0..=level {
        // position 0
        let mut mid = Coords::new();
        let f0 = words(&c.terms[0], l);
        let img0: Vec<Vec<(usize, K)>> = f0.iter().map(|(s, p, w)| apply_basis(&c.d0, *s, *p, w, &c.terms[1], alg, effort, &mut mid)).collect();
        let mut b0 = SparseBasis::new();
        for v in &img0 {
            b0.insert(v.clone());
        }
        let h0 = f0.len() - b0.dim();
        // position 1: kernel of d1 on F_L(mid)
        let f1 = words(&c.terms[1], l);
        let mut last = Coords::new();
        let cols: Vec<Vec<(usize, K)>> = f1.iter().map(|(s, p, w)| apply_basis(&c.d1, *s, *p, w, &c.terms[2], alg, effort, &mut last)).collect();
        let rows = last.index.len();
        let m = Matrix::from_fn(rows, cols.len(), |i, j| cols[j].iter().find(|(k, _)| *k == i).map_or(K::zero(), |x| x.1.clone()));
        let ker = if cols.is_empty() { Vec::new() } else if rows == 0 { (0..cols.len()).map(|j| unit(cols.len(), j)).collect() } else { m.kernel() };
        let f1_idx: Vec<usize> = f1.iter().map(|key| mid.get(key.clone())).collect();
        let ker_sparse: Vec<Vec<(usize, K)>> = ker
            .iter()
            .map(|v| {
                let mut s: Vec<(usize, K)> = v.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(j, c)| (f1_idx[j], c.clone())).collect();
                s.sort_by_key(|x| x.0);
                s
            })
            .collect();
        let big = words(&c.terms[0], l + slack);
        let mut im = SparseBasis::new();
        for (s, p, w) in &big {
            im.insert(apply_basis(&c.d0, *s, *p, w, &c.terms[1], alg, effort, &mut mid));
        }
        let dim_im = im.dim();
        for k in ker_sparse {
            im.insert(k);
        }
        result.push(LevelHomology { level: l, h0, h1: im.dim() - dim_im });
    }
    Ok(result)
}

fn unit<K: Scalar>(n: usize, j: usize) -> Vec<K> {
    (0..n).map(|i| if i == j { K::one() } else { K::zero() }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quiver::adhm_quiver;
    use crate::scalar::{int, Rational};

    fn point_data() -> MatrixRep<Rational> {
        // n = 1, B = (0, 0), i = 1, j = 0
        MatrixRep { dims: vec![1, 1], mats: vec![Matrix::zeros(1, 1), Matrix::zeros(1, 1), Matrix::from_i64(&[&[1]]), Matrix::zeros(1, 1)] }
    }

    #[test]
    fn adhm_monad_shape_and_d2() {
        let dq = adhm_quiver();
        let c = build_adhm_monad(&dq, &point_data()).unwrap();
        assert_eq!(c.ranks(), [1, 3, 1]);
        assert!(verify_d_squared(&c, 6).unwrap().is_empty());
        let labels: Vec<&str> = c.terms[1].iter().map(|s| s.label.as_str()).collect();
        assert_eq!(labels, ["X̃", "Ỹ", "J̃"]);
    }

    #[test]
    fn point_evaluation() {
        let dq = adhm_quiver();
        let c = build_adhm_monad(&dq, &point_data()).unwrap();
        let at = |x: i64, y: i64| evaluate_adhm_at_point(&c, (int(x), int(y))).unwrap();
        assert_eq!(at(1, 0), PointRanks { rank_d0: 1, rank_d1: 1, cohomology: 1 });
        assert_eq!(at(0, 0), PointRanks { rank_d0: 0, rank_d1: 1, cohomology: 2 });
    }

    #[test]
    fn empty_monad() {
        let dq = adhm_quiver();
        let rho = MatrixRep::<Rational>::zero(&dq.quiver, &[0, 2]);
        let c = build_adhm_monad(&dq, &rho).unwrap();
        assert_eq!(c.ranks(), [0, 2, 0]);
        assert_eq!(evaluate_adhm_at_point(&c, (int(3), int(5))).unwrap().cohomology, 2);
        // the middle term is the whole cohomology: 2 copies of k[x,y]
        for h in slice_exactness(&c, 2, 2).unwrap() {
            assert_eq!((h.h0, h.h1), (0, (h.level + 1) * (h.level + 2)));
        }
    }

    #[test]
    fn obstructed_input_is_rejected() {
        let dq = adhm_quiver();
        let mut rho = point_data();
        rho.mats[3] = Matrix::from_i64(&[&[1]]);
        assert!(matches!(build_adhm_monad(&dq, &rho), Err(MonadError::Obstructed(_))));
    }

    #[test]
    fn framed_functor_exact_for_a_point() {
        let dq = adhm_quiver();
        let c = build_adhm_framed_functor(&dq, &point_data()).unwrap();
        assert_eq!(c.ranks(), [1, 4, 2]);
        assert!(verify_d_squared(&c, 6).unwrap().is_empty());
        for h in slice_exactness(&c, 3, 2).unwrap() {
            assert_eq!((h.h0, h.h1), (0, 0), "level {}", h.level);
        }
    }

    #[test]
    fn framed_functor_exact_two_points() {
        let dq = adhm_quiver();
        let rho = MatrixRep {
            dims: vec![2, 1],
            mats: vec![
                Matrix::<Rational>::from_i64(&[&[1, 0], &[0, 2]]),
                Matrix::<Rational>::from_i64(&[&[3, 0], &[0, 4]]),
                Matrix::<Rational>::from_i64(&[&[1], &[1]]),
                Matrix::<Rational>::zeros(1, 2),
            ],
        };
        let c = build_adhm_framed_functor(&dq, &rho).unwrap();
        for h in slice_exactness(&c, 3, 2).unwrap() {
            assert_eq!((h.h0, h.h1), (0, 0), "level {}", h.level);
        }
    }

    #[test]
    fn affine_a1_framed_functor() {
        use crate::quiver::{double_quiver, frame_double, graphs, Orientation};
        let dq = frame_double(&double_quiver(&graphs::affine_a(1), &Orientation::Lexicographic).unwrap(), &[0]).unwrap();
        let m = |x: i64| Matrix::<Rational>::from_i64(&[&[x]]);
        let rho = MatrixRep { dims: vec![1, 1, 1], mats: vec![m(1), m(1), m(1), m(-1), m(1), m(0)] };
        let c = build_framed_functor_complex(&dq, &rho).unwrap();
        assert!(verify_d_squared(&c, 6).unwrap().is_empty());
        for h in slice_exactness(&c, 3, 2).unwrap() {
            assert_eq!((h.h0, h.h1), (0, 0), "level {}", h.level);
        }
    }
}
