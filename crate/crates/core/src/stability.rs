//! King/Nakajima stability of quiver representations, destabilizing
//! witnesses, torus gauge fixing and Maurer-Cartan region tags.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Matrix;
use crate::quiver::Quiver;
use crate::representation::{MatrixRep, RepError};
use crate::scalar::{cmp_val, Novikov, Rational, Scalar, Valued};

#[derive(Debug, Error, PartialEq)]
pub enum StabilityError {
    #[error(transparent)]
    Rep(#[from] RepError),
    #[error("ζ·dim V = {0}, expected 0 in unframed mode")]
    NotBalanced(Rational),
    #[error("ζ has {found} entries, expected {expected}")]
    WeightLength { expected: usize, found: usize },
    #[error("basis vectors at `{0}` are not independent")]
    Dependent(String),
    #[error("designated arrow `{0}` is zero")]
    ZeroArrow(String),
    #[error("arrow `{0}` is not a 1×1 matrix")]
    NotRankOne(String),
    #[error("unknown arrow `{0}`")]
    UnknownArrow(String),
    #[error("malformed coordinates: {0}")]
    Malformed(String),
}

/// A graded subspace of the unframed part of V: per vertex, a basis in
/// reduced row echelon form (framing vertices carry nothing).
#[derive(Clone, Debug, PartialEq)]
pub struct GradedSubspace<K> {
    pub basis: Vec<Vec<Vec<K>>>,
}

impl<K: Scalar> GradedSubspace<K> {
    pub fn zero(nv: usize) -> Self {
        GradedSubspace { basis: vec![Vec::new(); nv] }
    }

    /// Spans of the given vectors, reduced.
    pub fn span(vectors: Vec<Vec<Vec<K>>>, dims: &[usize]) -> Self {
        GradedSubspace { basis: vectors.into_iter().zip(dims).map(|(vs, &d)| reduce_rows(vs, d)).collect() }
    }

    pub fn full(rho: &MatrixRep<K>, q: &Quiver) -> Self {
        let mut s = Self::zero(q.n_vertices());
        for v in q.unframed_vertices() {
            s.basis[v] = identity_rows(rho.dims[v]);
        }
        s
    }

    pub fn dims(&self) -> Vec<usize> {
        self.basis.iter().map(|b| b.len()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.basis.iter().all(|b| b.is_empty())
    }

    pub fn contains(&self, v: usize, x: &[K]) -> bool {
        let d = x.len();
        let mut rows = self.basis[v].clone();
        let r = rows.len();
        rows.push(x.to_vec());
        rank_rows(&rows, d) == r
    }
}

fn identity_rows<K: Scalar>(d: usize) -> Vec<Vec<K>> {
    (0..d).map(|i| (0..d).map(|j| if i == j { K::one() } else { K::zero() }).collect()).collect()
}

fn reduce_rows<K: Scalar>(vs: Vec<Vec<K>>, d: usize) -> Vec<Vec<K>> {
    if vs.is_empty() || d == 0 {
        return Vec::new();
    }
    let e = Matrix::from_rows(vs).echelon();
    (0..e.pivots.len()).map(|i| e.rref.row(i).to_vec()).collect()
}

fn rank_rows<K: Scalar>(vs: &[Vec<K>], d: usize) -> usize {
    if vs.is_empty() || d == 0 {
        return 0;
    }
    Matrix::from_rows(vs.to_vec()).rank()
}

fn is_unframed_arrow(q: &Quiver, a: usize) -> bool {
    !q.vertices[q.head(a)].framing && !q.vertices[q.tail(a)].framing
}

/// Smallest B-invariant graded subspace containing the seeds.
pub fn invariant_closure<K: Scalar>(rho: &MatrixRep<K>, q: &Quiver, seeds: Vec<(usize, Vec<K>)>) -> GradedSubspace<K> {
    let nv = q.n_vertices();
    let mut basis: Vec<Vec<Vec<K>>> = vec![Vec::new(); nv];
    let mut queue = seeds;
    while let Some((v, x)) = queue.pop() {
        if x.iter().all(|c| c.is_zero()) {
            continue;
        }
        let r = basis[v].len();
        let mut rows = basis[v].clone();
        rows.push(x.clone());
        if rank_rows(&rows, rho.dims[v]) == r {
            continue;
        }
        basis[v] = reduce_rows(rows, rho.dims[v]);
        for a in 0..q.n_arrows() {
            if q.tail(a) == v && is_unframed_arrow(q, a) {
                queue.push((q.head(a), rho.mats[a].mul_vec(&x)));
            }
        }
    }
    GradedSubspace { basis }
}

/// Smallest B-invariant subspace containing the images of the framing-in maps.
pub fn min_invariant_containing<K: Scalar>(rho: &MatrixRep<K>, q: &Quiver) -> GradedSubspace<K> {
    invariant_closure(rho, q, image_seeds(rho, q))
}

fn image_seeds<K: Scalar>(rho: &MatrixRep<K>, q: &Quiver) -> Vec<(usize, Vec<K>)> {
    let mut seeds = Vec::new();
    for a in 0..q.n_arrows() {
        let (t, h) = (q.tail(a), q.head(a));
        if q.vertices[t].framing && !q.vertices[h].framing {
            for j in 0..rho.dims[t] {
                seeds.push((h, rho.mats[a].col(j)));
            }
        }
    }
    seeds
}

/// Largest B-invariant subspace inside the given per-vertex subspaces.
pub fn invariant_interior<K: Scalar>(rho: &MatrixRep<K>, q: &Quiver, init: GradedSubspace<K>) -> GradedSubspace<K> {
    let mut s = init;
    loop {
        let mut changed = false;
        for a in 0..q.n_arrows() {
            if !is_unframed_arrow(q, a) {
                continue;
            }
            let (t, h) = (q.tail(a), q.head(a));
            if s.basis[t].is_empty() || s.basis[h].len() == rho.dims[h] {
                continue;
            }
            // annihilator of S_h
            let ann: Vec<Vec<K>> = if s.basis[h].is_empty() {
                identity_rows(rho.dims[h])
            } else {
                Matrix::from_rows(s.basis[h].clone()).kernel()
            };
            let m_t = Matrix::from_rows(s.basis[t].clone()).transpose();
            let c = Matrix::from_rows(ann).mul(&rho.mats[a]).mul(&m_t);
            let ker = c.kernel();
            if ker.len() < s.basis[t].len() {
                let vs: Vec<Vec<K>> = ker.iter().map(|k| m_t.mul_vec(k)).collect();
                s.basis[t] = reduce_rows(vs, rho.dims[t]);
                changed = true;
            }
        }
        if !changed {
            return s;
        }
    }
}

/// ∩ ker of the framing-out maps at each vertex.
fn kernel_of_b<K: Scalar>(rho: &MatrixRep<K>, q: &Quiver) -> GradedSubspace<K> {
    let mut s = GradedSubspace::full(rho, q);
    for v in q.unframed_vertices() {
        let mut m = Matrix::zeros(0, rho.dims[v]);
        for a in 0..q.n_arrows() {
            if q.tail(a) == v && q.vertices[q.head(a)].framing {
                m = m.vstack(&rho.mats[a]);
            }
        }
        s.basis[v] = reduce_rows(m.kernel(), rho.dims[v]);
    }
    s
}

/// Largest B-invariant subspace contained in ∩ ker b.
pub fn max_invariant_in_kernel<K: Scalar>(rho: &MatrixRep<K>, q: &Quiver) -> GradedSubspace<K> {
    invariant_interior(rho, q, kernel_of_b(rho, q))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Framed,
    Unframed,
}

/// Which inequality a witness tests.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    /// S ⊆ ker b (framed) or any subrepresentation (unframed).
    Sub,
    /// T ⊇ Im a (framed only).
    Quotient,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Witness<K> {
    pub role: Role,
    pub subspace: GradedSubspace<K>,
    /// The defining inequality fails strictly (not even semistable).
    pub strict: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict<K> {
    Stable,
    SemistableOnly(Witness<K>),
    Unstable(Witness<K>),
    Unknown,
}

impl<K> Verdict<K> {
    pub fn tag(&self) -> &'static str {
        match self {
            Verdict::Stable => "stable",
            Verdict::SemistableOnly(_) => "semistable-only",
            Verdict::Unstable(_) => "unstable",
            Verdict::Unknown => "unknown",
        }
    }

    pub fn witness(&self) -> Option<&Witness<K>> {
        match self {
            Verdict::SemistableOnly(w) | Verdict::Unstable(w) => Some(w),
            _ => None,
        }
    }
}

fn pairing(zeta: &[Rational], dims: &[usize], q: &Quiver) -> Rational {
    q.unframed_vertices().iter().map(|&v| zeta[v].clone() * Rational::from_integer((dims[v] as i64).into())).sum()
}

fn weights_for(zeta: &[Rational], q: &Quiver) -> Result<Vec<Rational>, StabilityError> {
    let nu = q.unframed_vertices();
    if zeta.len() == q.n_vertices() {
        return Ok(zeta.to_vec());
    }
    if zeta.len() != nu.len() {
        return Err(StabilityError::WeightLength { expected: nu.len(), found: zeta.len() });
    }
    let mut w = vec![Rational::from_integer(0.into()); q.n_vertices()];
    for (k, &v) in nu.iter().enumerate() {
        w[v] = zeta[k].clone();
    }
    Ok(w)
}

#[derive(Clone, Debug, PartialEq)]
pub enum WitnessVerdict {
    ValidDestabilizer { strict: bool },
    NotADestabilizer,
    NotInvariant,
}

/// Checks invariance, the side condition of the role, and whether the
/// stability inequality fails for the subspace.
pub fn verify_witness<K: Scalar>(
    rho: &MatrixRep<K>,
    q: &Quiver,
    w: &Witness<K>,
    zeta: &[Rational],
    mode: Mode,
) -> Result<WitnessVerdict, StabilityError> {
    rho.validate(q)?;
    let zeta = weights_for(zeta, q)?;
    let s = &w.subspace;
    for v in q.unframed_vertices() {
        if rank_rows(&s.basis[v], rho.dims[v]) != s.basis[v].len() || s.basis[v].iter().any(|x| x.len() != rho.dims[v]) {
            return Err(StabilityError::Dependent(q.vertices[v].id.clone()));
        }
    }
    for a in 0..q.n_arrows() {
        if !is_unframed_arrow(q, a) {
            continue;
        }
        for x in &s.basis[q.tail(a)] {
            if !s.contains(q.head(a), &rho.mats[a].mul_vec(x)) {
                return Ok(WitnessVerdict::NotInvariant);
            }
        }
    }
    let dims = s.dims();
    let full: Vec<usize> = rho.dims.clone();
    let is_full = q.unframed_vertices().iter().all(|&v| dims[v] == full[v]);
    let zs = pairing(&zeta, &dims, q);
    let zero = Rational::from_integer(0.into());
    let cmp = match (mode, w.role) {
        (Mode::Unframed, _) => {
            if s.is_zero() || is_full {
                return Ok(WitnessVerdict::NotADestabilizer);
            }
            zs.cmp(&zero)
        }
        (Mode::Framed, Role::Sub) => {
            for v in q.unframed_vertices() {
                for a in 0..q.n_arrows() {
                    if q.tail(a) == v && q.vertices[q.head(a)].framing && s.basis[v].iter().any(|x| !rho.mats[a].mul_vec(x).iter().all(|c| c.is_zero())) {
                        return Ok(WitnessVerdict::NotADestabilizer);
                    }
                }
            }
            if s.is_zero() {
                return Ok(WitnessVerdict::NotADestabilizer);
            }
            zs.cmp(&zero)
        }
        (Mode::Framed, Role::Quotient) => {
            if image_seeds(rho, q).iter().any(|(v, x)| !s.contains(*v, x)) || is_full {
                return Ok(WitnessVerdict::NotADestabilizer);
            }
            zs.cmp(&pairing(&zeta, &full, q))
        }
    };
    Ok(match cmp {
        Ordering::Greater => WitnessVerdict::ValidDestabilizer { strict: true },
        Ordering::Equal => WitnessVerdict::ValidDestabilizer { strict: false },
        Ordering::Less => WitnessVerdict::NotADestabilizer,
    })
}

/// Options for the bounded search used outside the sign-definite chambers.
#[derive(Clone, Debug)]
pub struct SearchOptions {
    pub seed: u64,
    pub random_trials: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { seed: 0, random_trials: 64 }
    }
}

pub fn is_stable<K: Scalar>(rho: &MatrixRep<K>, q: &Quiver, zeta: &[Rational], mode: Mode) -> Result<Verdict<K>, StabilityError> {
    is_stable_with(rho, q, zeta, mode, &SearchOptions::default())
}

pub fn is_stable_with<K: Scalar>(
    rho: &MatrixRep<K>,
    q: &Quiver,
    zeta: &[Rational],
    mode: Mode,
    opts: &SearchOptions,
) -> Result<Verdict<K>, StabilityError> {
    rho.validate(q)?;
    let zeta = weights_for(zeta, q)?;
    let zero = Rational::from_integer(0.into());
    let nu = q.unframed_vertices();
    if mode == Mode::Unframed {
        let z = pairing(&zeta, &rho.dims, q);
        if z != zero {
            return Err(StabilityError::NotBalanced(z));
        }
        return unframed_verdict(rho, q, &zeta, opts);
    }
    if rho.unframed_dim(q) == 0 {
        return Ok(Verdict::Stable);
    }
    let support: Vec<usize> = nu.iter().copied().filter(|&v| rho.dims[v] > 0).collect();
    let nonpos = support.iter().all(|&v| zeta[v] <= zero);
    let nonneg = support.iter().all(|&v| zeta[v] >= zero);
    let mk = |role, subspace, strict| Witness { role, subspace, strict };
    if nonpos {
        let c = min_invariant_containing(rho, q);
        let neg: Vec<usize> = support.iter().copied().filter(|&v| zeta[v] < zero).collect();
        if neg.iter().any(|&v| c.basis[v].len() < rho.dims[v]) {
            return Ok(Verdict::Unstable(mk(Role::Quotient, c, true)));
        }
        // equality cases
        let mut seeds = image_seeds(rho, q);
        for &v in &neg {
            for x in identity_rows(rho.dims[v]) {
                seeds.push((v, x));
            }
        }
        let t = invariant_closure(rho, q, seeds);
        if support.iter().any(|&v| t.basis[v].len() < rho.dims[v]) {
            return Ok(Verdict::SemistableOnly(mk(Role::Quotient, t, false)));
        }
        let mut init = kernel_of_b(rho, q);
        for &v in &neg {
            init.basis[v].clear();
        }
        let s = invariant_interior(rho, q, init);
        if !s.is_zero() {
            return Ok(Verdict::SemistableOnly(mk(Role::Sub, s, false)));
        }
        return Ok(Verdict::Stable);
    }
    if nonneg {
        let k = max_invariant_in_kernel(rho, q);
        let pos: Vec<usize> = support.iter().copied().filter(|&v| zeta[v] > zero).collect();
        if pos.iter().any(|&v| !k.basis[v].is_empty()) {
            return Ok(Verdict::Unstable(mk(Role::Sub, k, true)));
        }
        if !k.is_zero() {
            return Ok(Verdict::SemistableOnly(mk(Role::Sub, k, false)));
        }
        let mut seeds = image_seeds(rho, q);
        for &v in &pos {
            for x in identity_rows(rho.dims[v]) {
                seeds.push((v, x));
            }
        }
        let t = invariant_closure(rho, q, seeds);
        if support.iter().any(|&v| t.basis[v].len() < rho.dims[v]) {
            return Ok(Verdict::SemistableOnly(mk(Role::Quotient, t, false)));
        }
        return Ok(Verdict::Stable);
    }
    framed_search(rho, q, &zeta, opts)
}

fn random_vector<K: Scalar>(rng: &mut ChaCha8Rng, d: usize) -> Vec<K> {
    (0..d).map(|_| K::from_i64(rng.gen_range(-3..=3))).collect()
}

/// Candidate destabilizers: closures of coordinate and random vectors.
fn framed_search<K: Scalar>(rho: &MatrixRep<K>, q: &Quiver, zeta: &[Rational], opts: &SearchOptions) -> Result<Verdict<K>, StabilityError> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut candidates: Vec<Witness<K>> = Vec::new();
    let k = max_invariant_in_kernel(rho, q);
    candidates.push(Witness { role: Role::Sub, subspace: k.clone(), strict: false });
    for v in q.unframed_vertices() {
        for x in k.basis[v].clone() {
            candidates.push(Witness { role: Role::Sub, subspace: invariant_closure(rho, q, vec![(v, x)]), strict: false });
        }
    }
    let base = image_seeds(rho, q);
    candidates.push(Witness { role: Role::Quotient, subspace: invariant_closure(rho, q, base.clone()), strict: false });
    for v in q.unframed_vertices() {
        for x in identity_rows(rho.dims[v]) {
            let mut s = base.clone();
            s.push((v, x));
            candidates.push(Witness { role: Role::Quotient, subspace: invariant_closure(rho, q, s), strict: false });
        }
    }
    let nu = q.unframed_vertices();
    for _ in 0..opts.random_trials {
        let v = nu[rng.gen_range(0..nu.len())];
        let x: Vec<K> = random_vector(&mut rng, rho.dims[v]);
        let mut s = base.clone();
        s.push((v, x));
        candidates.push(Witness { role: Role::Quotient, subspace: invariant_closure(rho, q, s), strict: false });
    }
    pick_witness(rho, q, zeta, Mode::Framed, candidates)
}

fn pick_witness<K: Scalar>(
    rho: &MatrixRep<K>,
    q: &Quiver,
    zeta: &[Rational],
    mode: Mode,
    candidates: Vec<Witness<K>>,
) -> Result<Verdict<K>, StabilityError> {
    let mut weak = None;
    for mut w in candidates {
        match verify_witness(rho, q, &w, zeta, mode)? {
            WitnessVerdict::ValidDestabilizer { strict: true } => {
                w.strict = true;
                return Ok(Verdict::Unstable(w));
            }
            WitnessVerdict::ValidDestabilizer { strict: false } if weak.is_none() => weak = Some(w),
            _ => {}
        }
    }
    // an equality witness alone does not decide semistability here
    let _ = weak;
    Ok(Verdict::Unknown)
}

/// King stability with ζ·dim V = 0. Exact when a single vertex of dimension
/// one carries the only positive (or only negative) weight.
fn unframed_verdict<K: Scalar>(rho: &MatrixRep<K>, q: &Quiver, zeta: &[Rational], opts: &SearchOptions) -> Result<Verdict<K>, StabilityError> {
    let zero = Rational::from_integer(0.into());
    let support: Vec<usize> = q.unframed_vertices().into_iter().filter(|&v| rho.dims[v] > 0).collect();
    if support.len() <= 1 && support.iter().all(|&v| rho.dims[v] <= 1) {
        return Ok(Verdict::Stable);
    }
    let pos: Vec<usize> = support.iter().copied().filter(|&v| zeta[v] > zero).collect();
    let neg: Vec<usize> = support.iter().copied().filter(|&v| zeta[v] < zero).collect();
    let generic = pos.len() + neg.len() == support.len();
    let mk = |subspace| Witness { role: Role::Sub, subspace, strict: true };
    if generic && pos.len() == 1 && rho.dims[pos[0]] == 1 {
        // proper subrepresentations through V_p violate; others satisfy
        let c = invariant_closure(rho, q, vec![(pos[0], vec![K::one()])]);
        if support.iter().any(|&v| c.basis[v].len() < rho.dims[v]) {
            return Ok(Verdict::Unstable(mk(c)));
        }
        return Ok(Verdict::Stable);
    }
    if generic && neg.len() == 1 && rho.dims[neg[0]] == 1 {
        let mut init = GradedSubspace::full(rho, q);
        init.basis[neg[0]].clear();
        let s = invariant_interior(rho, q, init);
        if !s.is_zero() {
            return Ok(Verdict::Unstable(mk(s)));
        }
        return Ok(Verdict::Stable);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut candidates = Vec::new();
    for &v in &support {
        for x in identity_rows(rho.dims[v]) {
            candidates.push(Witness { role: Role::Sub, subspace: invariant_closure(rho, q, vec![(v, x)]), strict: false });
        }
        let mut init = GradedSubspace::full(rho, q);
        init.basis[v].clear();
        candidates.push(Witness { role: Role::Sub, subspace: invariant_interior(rho, q, init), strict: false });
    }
    for _ in 0..opts.random_trials {
        let v = support[rng.gen_range(0..support.len())];
        let x = random_vector(&mut rng, rho.dims[v]);
        candidates.push(Witness { role: Role::Sub, subspace: invariant_closure(rho, q, vec![(v, x)]), strict: false });
    }
    pick_witness(rho, q, zeta, Mode::Unframed, candidates)
}

/// Gauge-fixes a rank-(1,…,1) representation of the affine A_n double
/// quiver (arrows `u<k>`, `v<k>`, k = 1..n+1) so that v_1..v_{i−1} and
/// u_{i+1}..u_{n+1} become 1. Vertex 1 is kept fixed.
pub fn gauge_normalize_an<K: Scalar>(rho: &MatrixRep<K>, q: &Quiver, n: usize, i: usize) -> Result<MatrixRep<K>, StabilityError> {
    rho.validate(q)?;
    let mut designated = Vec::new();
    for k in 1..i {
        designated.push(format!("v{k}"));
    }
    for k in i + 1..=n + 1 {
        designated.push(format!("u{k}"));
    }
    let idx = |id: &str| q.arrow(id).map_err(|_| StabilityError::UnknownArrow(id.to_string()));
    let scalar = |a: usize| -> Result<K, StabilityError> {
        let m = &rho.mats[a];
        if m.shape() != (1, 1) {
            return Err(StabilityError::NotRankOne(q.arrows[a].id.clone()));
        }
        Ok(m.get(0, 0).clone())
    };
    let nv = q.n_vertices();
    let mut g: Vec<Option<K>> = vec![None; nv];
    g[q.vertex("1").map_err(|_| StabilityError::Malformed("no vertex 1".into()))?] = Some(K::one());
    let ds: Vec<usize> = designated.iter().map(|d| idx(d)).collect::<Result<_, _>>()?;
    for &a in &ds {
        if scalar(a)?.is_zero() {
            return Err(StabilityError::ZeroArrow(q.arrows[a].id.clone()));
        }
    }
    // B_a ↦ g_h B_a g_t⁻¹; propagate along the designated tree
    loop {
        let mut progress = false;
        for &a in &ds {
            let (t, h) = (q.tail(a), q.head(a));
            let b = scalar(a)?;
            match (&g[t], &g[h]) {
                (Some(gt), None) => {
                    g[h] = Some(gt.mul(&b.inv().expect("nonzero")));
                    progress = true;
                }
                (None, Some(gh)) => {
                    g[t] = Some(gh.mul(&b));
                    progress = true;
                }
                _ => {}
            }
        }
        if !progress {
            break;
        }
    }
    let g: Vec<K> = g.into_iter().map(|x| x.unwrap_or_else(K::one)).collect();
    let mut out = rho.clone();
    for a in 0..q.n_arrows() {
        let (t, h) = (q.tail(a), q.head(a));
        if rho.dims[t] == 1 && rho.dims[h] == 1 {
            let x = rho.mats[a].get(0, 0).mul(&g[h]).mul(&g[t].inv().expect("nonzero gauge"));
            out.mats[a].set(0, 0, x);
        }
    }
    Ok(out)
}

/// Coordinates of one chart of the Maurer-Cartan space.
#[derive(Clone, Debug, PartialEq)]
pub enum McPoint {
    /// (u_j, v_j) on the sphere S_j, j = 1..n+1.
    Sphere { j: usize, u: Novikov, v: Novikov },
    /// (x_i, y_i) on the torus T_i.
    Torus { i: usize, x: Novikov, y: Novikov },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    DefS(usize),
    DefT(usize),
    None,
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Region::DefS(j) => write!(f, "Def(S_{j})"),
            Region::DefT(i) => write!(f, "Def(T_{i})"),
            Region::None => write!(f, "none"),
        }
    }
}

fn val_ge(x: &Novikov, bound: &Rational) -> bool {
    cmp_val(&x.valuation(), &Some(bound.clone())) != Ordering::Less
}

/// Region tag of a chart point. `areas[k] = (A_{k+1}, A'_{k+1})`.
pub fn mc_region_classify(n: usize, point: &McPoint, areas: &[(Rational, Rational)]) -> Result<Region, StabilityError> {
    if areas.len() != n + 1 {
        return Err(StabilityError::Malformed(format!("expected {} area pairs, found {}", n + 1, areas.len())));
    }
    let zero = Rational::from_integer(0.into());
    let gap = |k: usize| {
        let (a, b) = &areas[k - 1];
        let d = a - b;
        if d < zero {
            -d
        } else {
            d
        }
    };
    match point {
        McPoint::Sphere { j, u, v } => {
            let j = *j;
            if j == 0 || j > n + 1 {
                return Err(StabilityError::Malformed(format!("sphere index {j}")));
            }
            if !val_ge(u, &zero) || !val_ge(v, &zero) {
                return Ok(Region::None);
            }
            let ok = if j == 1 {
                val_ge(u, &areas[0].0)
            } else if j == n + 1 {
                val_ge(v, &areas[n].1)
            } else {
                let g = gap(j).max(zero.clone());
                val_ge(u, &g) && val_ge(v, &g) && cmp_val(&u.mul(v).valuation(), &Some(zero.clone())) == Ordering::Greater
            };
            Ok(if ok { Region::DefS(j) } else { Region::None })
        }
        McPoint::Torus { i, x, y } => {
            let i = *i;
            if i == 0 || i > n + 1 {
                return Err(StabilityError::Malformed(format!("torus index {i}")));
            }
            let ok = x.is_unit_valuation_zero() && y.is_unit_valuation_zero() && val_ge(&x.add(&Novikov::one()), &gap(i));
            Ok(if ok { Region::DefT(i) } else { Region::None })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quiver::adhm_quiver;
    use crate::scalar::{int, GaussRat};

    fn adhm(b1: &[&[i64]], b2: &[&[i64]], i: &[&[i64]], j: &[&[i64]]) -> MatrixRep<Rational> {
        let b1 = Matrix::from_i64(b1);
        let n = b1.rows;
        let i = Matrix::from_i64(i);
        let r = i.cols;
        let j = if j.is_empty() { Matrix::zeros(r, n) } else { Matrix::from_i64(j) };
        MatrixRep { dims: vec![n, r], mats: vec![b1, Matrix::from_i64(b2), i, j] }
    }

    #[test]
    fn closures_of_adhm_points() {
        let q = adhm_quiver().quiver;
        let rho = adhm(&[&[1, 0], &[0, 2]], &[&[0, 0], &[0, 0]], &[&[1], &[1]], &[]);
        assert_eq!(min_invariant_containing(&rho, &q).dims(), vec![2, 0]);
        assert_eq!(max_invariant_in_kernel(&rho, &q).dims(), vec![2, 0]);
        let nil = adhm(&[&[0, 1], &[0, 0]], &[&[0, 0], &[0, 0]], &[&[0], &[1]], &[]);
        assert_eq!(min_invariant_containing(&nil, &q).dims(), vec![2, 0]);
        let zero_i = adhm(&[&[0, 1], &[0, 0]], &[&[0, 0], &[0, 0]], &[&[0], &[0]], &[]);
        assert!(min_invariant_containing(&zero_i, &q).is_zero());
    }

    #[test]
    fn kernel_interior() {
        let q = adhm_quiver().quiver;
        let rho = adhm(&[&[1, 0], &[0, 2]], &[&[0, 0], &[0, 0]], &[&[0], &[0]], &[&[1, 1]]);
        assert!(max_invariant_in_kernel(&rho, &q).is_zero());
        let rho = adhm(&[&[1, 0], &[0, 2]], &[&[0, 0], &[0, 0]], &[&[0], &[0]], &[&[1, 0]]);
        assert_eq!(max_invariant_in_kernel(&rho, &q).dims(), vec![1, 0]);
    }

    #[test]
    fn sign_definite_verdicts() {
        let q = adhm_quiver().quiver;
        let rho = adhm(&[&[1, 0], &[0, 2]], &[&[0, 0], &[0, 0]], &[&[1], &[1]], &[]);
        assert_eq!(is_stable(&rho, &q, &[int(-1)], Mode::Framed).unwrap(), Verdict::Stable);
        let zero = adhm(&[&[0]], &[&[0]], &[&[0]], &[]);
        let v = is_stable(&zero, &q, &[int(1)], Mode::Framed).unwrap();
        let w = v.witness().expect("witness").clone();
        assert_eq!(v.tag(), "unstable");
        assert_eq!(w.subspace.dims(), vec![1, 0]);
        assert_eq!(verify_witness(&zero, &q, &w, &[int(1)], Mode::Framed).unwrap(), WitnessVerdict::ValidDestabilizer { strict: true });
    }

    #[test]
    fn witness_edge_cases() {
        let q = adhm_quiver().quiver;
        let rho = adhm(&[&[0]], &[&[0]], &[&[0]], &[]);
        let w = Witness { role: Role::Sub, subspace: GradedSubspace::zero(2), strict: false };
        assert_eq!(verify_witness(&rho, &q, &w, &[int(1)], Mode::Framed).unwrap(), WitnessVerdict::NotADestabilizer);
        let bad = Witness { role: Role::Sub, subspace: GradedSubspace { basis: vec![vec![vec![int(0)]], vec![]] }, strict: false };
        assert!(verify_witness(&rho, &q, &bad, &[int(1)], Mode::Framed).is_err());
    }

    fn an_quiver(n: usize) -> Quiver {
        let mut q = Quiver::new();
        for k in 1..=n + 1 {
            q.add_vertex(&k.to_string(), false).unwrap();
        }
        for k in 1..=n + 1 {
            let next = if k == n + 1 { 1 } else { k + 1 };
            q.add_arrow(&format!("u{k}"), &k.to_string(), &next.to_string()).unwrap();
            q.add_arrow(&format!("v{k}"), &next.to_string(), &k.to_string()).unwrap();
        }
        q
    }

    #[test]
    fn gauge_fixing_a1() {
        let q = an_quiver(1);
        let u1 = q.arrow("u1").unwrap();
        let u2 = q.arrow("u2").unwrap();
        let mut rho = MatrixRep::<Rational>::zero(&q, &[1, 1]);
        rho.mats[u1] = Matrix::from_i64(&[&[3]]);
        rho.mats[u2] = Matrix::from_i64(&[&[2]]);
        let out = gauge_normalize_an(&rho, &q, 1, 1).unwrap();
        assert_eq!(out.mats[u2], Matrix::from_i64(&[&[1]]));
        assert_eq!(out.mats[u1].get(0, 0) * out.mats[u2].get(0, 0), int(6));
        assert_eq!(gauge_normalize_an(&out, &q, 1, 1).unwrap(), out);
        rho.mats[u2] = Matrix::zeros(1, 1);
        assert!(gauge_normalize_an(&rho, &q, 1, 1).is_err());
    }

    #[test]
    fn regions() {
        let areas = vec![(int(2), int(1)), (int(3), int(1)), (int(1), int(4))];
        let t = |e: i64| Novikov::t_pow(int(e));
        let p = McPoint::Sphere { j: 1, u: t(2), v: Novikov::zero() };
        assert_eq!(mc_region_classify(2, &p, &areas).unwrap(), Region::DefS(1));
        let x = Novikov::new(vec![(int(0), GaussRat::from_i64(-1)), (int(2), GaussRat::one())], None);
        let p = McPoint::Torus { i: 2, x, y: Novikov::one() };
        assert_eq!(mc_region_classify(2, &p, &areas).unwrap(), Region::DefT(2));
        let p = McPoint::Sphere { j: 2, u: Novikov::one(), v: Novikov::one() };
        assert_eq!(mc_region_classify(2, &p, &areas).unwrap(), Region::None);
    }
}
