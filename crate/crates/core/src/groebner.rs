//! Degree-truncated two-sided Gröbner bases in path algebras.
//!
//! Overlap pairs are processed in order of overlap length and dropped above
//! the effort degree. Whenever the maximal processed length grows, the
//! current basis is recorded as a checkpoint; a membership proof is a
//! reduction to zero modulo any checkpoint. The run at degree D is a prefix
//! of the run at any D' > D, so proofs are monotone in the effort degree.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use crate::path::{Element, Path};
use crate::quiver::Quiver;
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
struct Checkpoint {
    index: HashMap<Vec<u32>, usize>,
    killed: Vec<bool>,
    max_lm: usize,
}

/// Result of a truncated Buchberger run.
#[derive(Debug)]
pub struct GbRun<K> {
    quiver: Quiver,
    elems: Vec<Element<K>>,
    checkpoints: Vec<Checkpoint>,
    /// No overlap above the effort degree was discarded.
    pub complete: bool,
    pub effort: usize,
}

struct State<'q, K> {
    q: &'q Quiver,
    elems: Vec<Element<K>>,
    lms: Vec<Vec<u32>>,
    alive: Vec<bool>,
    index: HashMap<Vec<u32>, usize>,
    killed: Vec<bool>,
    max_lm: usize,
    queue: BinaryHeap<Reverse<(usize, u64, usize, usize, usize)>>,
    seq: u64,
    effort: usize,
    dropped: bool,
    pending: VecDeque<Element<K>>,
}

fn passes_killed(p: &Path, q: &Quiver, killed: &[bool]) -> bool {
    if !killed.iter().any(|&k| k) {
        return false;
    }
    p.vertices(q).iter().any(|&v| killed[v])
}

fn find_divisor(w: &[u32], index: &HashMap<Vec<u32>, usize>, max_lm: usize) -> Option<(usize, usize, usize)> {
    let n = w.len();
    for i in 0..n {
        for l in 1..=max_lm.min(n - i) {
            if let Some(&g) = index.get(&w[i..i + l]) {
                return Some((g, i, i + l));
            }
        }
    }
    None
}

fn splice(pre: &[u32], p: &Path, suf: &[u32]) -> Path {
    match p {
        Path::Id(v) if pre.is_empty() && suf.is_empty() => Path::Id(*v),
        _ => {
            let mut w = Vec::with_capacity(pre.len() + p.len() + suf.len());
            w.extend_from_slice(pre);
            w.extend_from_slice(p.arrows());
            w.extend_from_slice(suf);
            Path::Seq(w)
        }
    }
}

/// Full reduction of f modulo a basis given by its leading-word index.
fn reduce_with<K: Scalar>(
    f: &Element<K>,
    q: &Quiver,
    elems: &[Element<K>],
    index: &HashMap<Vec<u32>, usize>,
    killed: &[bool],
    max_lm: usize,
) -> Element<K> {
    let mut f = f.clone();
    let mut rem = Element::zero();
    while let Some((m, c)) = f.terms.pop_last() {
        if passes_killed(&m, q, killed) {
            continue;
        }
        let div = match &m {
            Path::Id(_) => None,
            Path::Seq(w) => find_divisor(w, index, max_lm),
        };
        match div {
            Some((g, i, j)) => {
                let w = m.arrows();
                let (pre, suf) = (&w[..i], &w[j..]);
                let mc = c.neg();
                let mut it = elems[g].terms.iter().rev();
                it.next();
                for (p, d) in it {
                    f.add_term(splice(pre, p, suf), mc.mul(d));
                }
            }
            None => {
                rem.terms.insert(m, c);
            }
        }
    }
    rem
}

impl<'q, K: Scalar> State<'q, K> {
    fn reduce(&self, f: &Element<K>) -> Element<K> {
        reduce_with(f, self.q, &self.elems, &self.index, &self.killed, self.max_lm)
    }

    fn checkpoint(&self) -> Checkpoint {
        Checkpoint { index: self.index.clone(), killed: self.killed.clone(), max_lm: self.max_lm }
    }

    fn retire(&mut self, g: usize) {
        self.alive[g] = false;
        self.index.remove(&self.lms[g]);
        self.pending.push_back(self.elems[g].clone());
    }

    fn push_pair(&mut self, deg: usize, a: usize, b: usize, k: usize) {
        if deg > self.effort {
            self.dropped = true;
            return;
        }
        self.seq += 1;
        self.queue.push(Reverse((deg, self.seq, a, b, k)));
    }

    fn insert(&mut self, g: Element<K>) {
        let (lm, lc) = g.leading().map(|(p, c)| (p.clone(), c.clone())).expect("nonzero");
        let g = g.scale(&lc.inv().expect("leading coefficient must be a unit"));
        match lm {
            Path::Id(v) => {
                self.killed[v as usize] = true;
                let touched: Vec<usize> = (0..self.elems.len())
                    .filter(|&h| self.alive[h] && self.elems[h].terms.keys().any(|p| p.vertices(self.q).contains(&(v as usize))))
                    .collect();
                for h in touched {
                    self.retire(h);
                }
            }
            Path::Seq(w) => {
                let covered: Vec<usize> = (0..self.elems.len())
                    .filter(|&h| self.alive[h] && contains_subword(&self.lms[h], &w))
                    .collect();
                for h in covered {
                    self.retire(h);
                }
                let id = self.elems.len();
                self.elems.push(g);
                self.lms.push(w.clone());
                self.alive.push(true);
                self.index.insert(w.clone(), id);
                self.max_lm = self.max_lm.max(w.len());
                for h in 0..=id {
                    if !self.alive[h] {
                        continue;
                    }
                    let u = self.lms[h].clone();
                    for k in overlaps(&u, &w) {
                        self.push_pair(u.len() + w.len() - k, h, id, k);
                    }
                    if h != id {
                        for k in overlaps(&w, &u) {
                            self.push_pair(u.len() + w.len() - k, id, h, k);
                        }
                    }
                }
            }
        }
    }

    fn drain(&mut self) {
        while let Some(f) = self.pending.pop_front() {
            let r = self.reduce(&f);
            if !r.is_zero() {
                self.insert(r);
            }
        }
    }

    /// g_a · w' − u' · g_b for LM(a) = u's, LM(b) = sw', |s| = k.
    fn spoly(&self, a: usize, b: usize, k: usize) -> Element<K> {
        let u = &self.lms[a];
        let w = &self.lms[b];
        let upre = &u[..u.len() - k];
        let wsuf = &w[k..];
        let mut s = Element::zero();
        for (p, c) in &self.elems[a].terms {
            s.add_term(splice(&[], p, wsuf), c.clone());
        }
        for (p, c) in &self.elems[b].terms {
            s.add_term(splice(upre, p, &[]), c.neg());
        }
        s
    }
}

fn contains_subword(hay: &[u32], needle: &[u32]) -> bool {
    needle.len() <= hay.len() && hay.windows(needle.len()).any(|x| x == needle)
}

/// Lengths k of proper overlaps where a suffix of u equals a prefix of w.
fn overlaps(u: &[u32], w: &[u32]) -> Vec<usize> {
    let m = u.len().min(w.len());
    (1..m).filter(|&k| u[u.len() - k..] == w[..k]).collect()
}

impl<K: Scalar> GbRun<K> {
    pub fn compute(q: &Quiver, relations: &[Element<K>], effort: usize) -> Self {
        let mut st = State {
            q,
            elems: Vec::new(),
            lms: Vec::new(),
            alive: Vec::new(),
            index: HashMap::new(),
            killed: vec![false; q.n_vertices()],
            max_lm: 0,
            queue: BinaryHeap::new(),
            seq: 0,
            effort,
            dropped: false,
            pending: relations.iter().filter(|r| !r.is_zero()).cloned().collect(),
        };
        st.drain();
        let mut checkpoints = vec![st.checkpoint()];
        let mut max_deg = 0;
        while let Some(Reverse((deg, _, a, b, k))) = st.queue.pop() {
            if deg > max_deg {
                checkpoints.push(st.checkpoint());
                max_deg = deg;
            }
            if !st.alive[a] || !st.alive[b] {
                continue;
            }
            let s = st.spoly(a, b, k);
            st.pending.push_back(s);
            st.drain();
        }
        checkpoints.push(st.checkpoint());
        GbRun { quiver: q.clone(), elems: st.elems, checkpoints, complete: !st.dropped, effort }
    }

    fn reduce_at(&self, f: &Element<K>, cp: &Checkpoint) -> Element<K> {
        reduce_with(f, &self.quiver, &self.elems, &cp.index, &cp.killed, cp.max_lm)
    }

    /// Remainder modulo the final basis.
    pub fn normal_form(&self, f: &Element<K>) -> Element<K> {
        self.reduce_at(f, self.checkpoints.last().unwrap())
    }

    /// True when f reduces to zero modulo some checkpoint basis.
    pub fn reduces_to_zero(&self, f: &Element<K>) -> bool {
        if f.is_zero() {
            return true;
        }
        self.checkpoints.iter().rev().any(|cp| self.reduce_at(f, cp).is_zero())
    }

    pub fn basis_size(&self) -> usize {
        self.checkpoints.last().unwrap().index.len()
    }

    /// Leading words of the final basis.
    pub fn leading_words(&self) -> Vec<Vec<u32>> {
        let mut v: Vec<Vec<u32>> = self.checkpoints.last().unwrap().index.keys().cloned().collect();
        v.sort();
        v
    }

    pub fn is_killed(&self, v: usize) -> bool {
        self.checkpoints.last().unwrap().killed[v]
    }

    /// Paths of length ≤ max_len with the given tail that contain no leading
    /// word of the final basis. For a basis complete through max_len these
    /// form a basis of the corresponding piece of the quotient.
    pub fn normal_words(&self, tail: usize, max_len: usize) -> Vec<Path> {
        let cp = self.checkpoints.last().unwrap();
        let q = &self.quiver;
        let mut out = Vec::new();
        if cp.killed[tail] {
            return out;
        }
        out.push(Path::Id(tail as u32));
        // words grow on the left (later arrows)
        let mut frontier: Vec<Vec<u32>> = vec![vec![]];
        for _ in 0..max_len {
            let mut next = Vec::new();
            for w in &frontier {
                let h = if w.is_empty() { tail } else { q.head(w[0] as usize) };
                for a in 0..q.n_arrows() {
                    if q.tail(a) != h || cp.killed[q.head(a)] {
                        continue;
                    }
                    let mut nw = Vec::with_capacity(w.len() + 1);
                    nw.push(a as u32);
                    nw.extend_from_slice(w);
                    let reducible = (1..=cp.max_lm.min(nw.len())).any(|l| cp.index.contains_key(&nw[..l]));
                    if !reducible {
                        out.push(Path::Seq(nw.clone()));
                        next.push(nw);
                    }
                }
            }
            frontier = next;
        }
        out
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
    fn commutative_plane() {
        let q = jordan();
        let x = Element::<Rational>::arrow(0);
        let y = Element::<Rational>::arrow(1);
        let r = x.mul(&y, &q).sub(&y.mul(&x, &q));
        let gb = GbRun::compute(&q, &[r], 8);
        assert_eq!(gb.normal_form(&y.mul(&x, &q)), x.mul(&y, &q));
        let yxy = y.mul(&x, &q).mul(&y, &q);
        let xyy = x.mul(&y, &q).mul(&y, &q);
        assert!(gb.reduces_to_zero(&yxy.sub(&xyy)));
        assert!(!gb.reduces_to_zero(&x));
        // the quotient is k[x,y]: n+1 monomials in degree n
        let words = gb.normal_words(0, 3);
        assert_eq!(words.len(), 1 + 2 + 3 + 4);
    }
}
