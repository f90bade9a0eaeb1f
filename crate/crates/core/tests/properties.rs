use proptest::prelude::*;

use quiverforge::formats::{element_from_json, element_to_json, rational_from_json, rational_to_json, JsonScalar, QuiverSource, RepDoc, WitnessDoc};
use quiverforge::linalg::Matrix;
use quiverforge::quiver::{adhm_quiver, affine_delta, classify_symmetric, double_quiver, dynkin_label, floer_euler_form, FormClass, Orientation};
use quiverforge::representation::{moment_map, MatrixRep};
use quiverforge::scalar::rat;
use quiverforge::stack::LocSpec;
use quiverforge::stability::{is_stable, verify_witness, Mode, Verdict, WitnessVerdict};
use quiverforge::{Element, GaussRat, Graph, Path, Quiver, QuiverAlgebra, Rational, Scalar};

fn rational() -> impl Strategy<Value = Rational> {
    (-60i64..60, 1i64..25).prop_map(|(n, d)| rat(n, d))
}

fn two_loops() -> Quiver {
    let mut q = Quiver::new();
    q.add_vertex("0", false).unwrap();
    q.add_arrow("x", "0", "0").unwrap();
    q.add_arrow("y", "0", "0").unwrap();
    q
}

/// Words over the loops x = 0, y = 1.
fn word() -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0u32..2, 0..5)
}

fn element(terms: &[(Vec<u32>, Rational)]) -> Element<Rational> {
    let mut f = Element::zero();
    for (w, c) in terms {
        let p = if w.is_empty() { Path::Id(0) } else { Path::Seq(w.clone()) };
        f.add_term(p, c.clone());
    }
    f
}

fn graph(n: usize, edges: &[(usize, usize)]) -> Graph {
    let ids: Vec<String> = (0..n).map(|k| k.to_string()).collect();
    let refs: Vec<&str> = ids.iter().map(|s| s.as_str()).collect();
    let e: Vec<(&str, &str)> = edges.iter().map(|&(a, b)| (refs[a % n], refs[b % n])).collect();
    Graph::plumbing(&refs, &e)
}

/// Sphere plumbings with up to `max` vertices, possibly disconnected, with
/// self-edges and parallel edges.
fn plumbing(max: usize) -> impl Strategy<Value = Graph> {
    (1..=max).prop_flat_map(|n| prop::collection::vec((0..n, 0..n), 0..=n + 2).prop_map(move |e| graph(n, &e)))
}

fn simple_graph(max: usize) -> impl Strategy<Value = Graph> {
    (1..=max).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n), 0..=n + 1).prop_map(move |e| {
            let mut e: Vec<(usize, usize)> = e.into_iter().filter(|(a, b)| a != b).map(|(a, b)| (a.min(b), a.max(b))).collect();
            e.sort_unstable();
            e.dedup();
            graph(n, &e)
        })
    })
}

fn quad(c: &[Vec<i64>], r: &[i64]) -> i64 {
    (0..r.len()).map(|i| (0..r.len()).map(|j| r[i] * c[i][j] * r[j]).sum::<i64>()).sum()
}

fn adhm_rep(n: usize, r: usize, vals: &[Rational]) -> MatrixRep<Rational> {
    let mut it = vals.iter().cycle().cloned();
    let mats = [(n, n), (n, n), (n, r), (r, n)].iter().map(|&(a, b)| Matrix::zeros(a, b).clone_with(&mut it)).collect();
    MatrixRep { dims: vec![n, r], mats }
}

trait Fill<K> {
    fn clone_with(self, it: &mut dyn Iterator<Item = K>) -> Self;
}

impl<K: Scalar> Fill<K> for Matrix<K> {
    fn clone_with(mut self, it: &mut dyn Iterator<Item = K>) -> Self {
        let (rows, cols) = self.shape();
        for a in 0..rows {
            for b in 0..cols {
                self.set(a, b, it.next().unwrap_or_else(K::zero));
            }
        }
        self
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rational_json_round_trip(q in rational()) {
        prop_assert_eq!(rational_from_json(&rational_to_json(&q)).unwrap(), q);
    }

    #[test]
    fn gauss_json_round_trip(a in rational(), b in rational()) {
        let z = GaussRat::new(a, b);
        prop_assert_eq!(GaussRat::from_json(&z.to_json()).unwrap(), z);
    }

    #[test]
    fn element_json_round_trip(terms in prop::collection::vec((word(), rational()), 0..6)) {
        let q = two_loops();
        let f = element(&terms);
        let back: Element<Rational> = element_from_json(&element_to_json(&f, &q), &q).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn rep_doc_round_trip(n in 0usize..3, r in 0usize..3, vals in prop::collection::vec(rational(), 1..12)) {
        let dq = adhm_quiver();
        let rho = adhm_rep(n, r, &vals);
        let doc = RepDoc::from_rep(QuiverSource::Adhm, &dq.quiver, &rho);
        let text = serde_json::to_string(&doc).unwrap();
        let (_, back) = RepDoc::from_json(&text).unwrap().build::<Rational>().unwrap();
        prop_assert_eq!(back, rho);
    }

    #[test]
    fn double_quiver_shape(g in plumbing(6)) {
        let dq = double_quiver(&g, &Orientation::Lexicographic).unwrap();
        let q = &dq.quiver;
        prop_assert_eq!(q.n_arrows(), 2 * g.edges.len());
        prop_assert_eq!(dq.eps.iter().map(|&e| e as i64).sum::<i64>(), 0);
        for a in 0..q.n_arrows() {
            let b = dq.bar[a];
            prop_assert_ne!(a, b);
            prop_assert_eq!(dq.bar[b], a);
            prop_assert_eq!(dq.eps[a], -dq.eps[b]);
            prop_assert_eq!((q.head(a), q.tail(a)), (q.tail(b), q.head(b)));
        }
    }

    #[test]
    fn euler_form_is_cartan_quadratic(g in plumbing(6), r in prop::collection::vec(-4i64..5, 6)) {
        let c = g.cartan().unwrap();
        let r = &r[..g.n()];
        prop_assert_eq!(floer_euler_form(&g, r).unwrap(), quad(&c, r));
        // symmetric polarization
        let s: Vec<i64> = r.iter().rev().cloned().collect();
        let sum: Vec<i64> = r.iter().zip(&s).map(|(a, b)| a + b).collect();
        let pol = floer_euler_form(&g, &sum).unwrap() - floer_euler_form(&g, r).unwrap() - floer_euler_form(&g, &s).unwrap();
        let bil: i64 = (0..r.len()).map(|i| (0..r.len()).map(|j| r[i] * c[i][j] * s[j]).sum::<i64>()).sum();
        prop_assert_eq!(pol, 2 * bil);
    }

    #[test]
    fn classification_respects_the_form(g in plumbing(7), rs in prop::collection::vec(prop::collection::vec(-3i64..4, 7), 8), perm_seed in any::<u64>()) {
        let c = g.cartan().unwrap();
        let n = c.len();
        let class = classify_symmetric(&c);
        for r in &rs {
            let r = &r[..n];
            let v = quad(&c, r);
            match class {
                FormClass::PositiveDefinite => prop_assert!(v > 0 || r.iter().all(|&x| x == 0)),
                FormClass::StrictlySemiPositive => prop_assert!(v >= 0),
                FormClass::Indefinite => {}
            }
        }
        let mut perm: Vec<usize> = (0..n).collect();
        let mut s = perm_seed;
        for k in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(k, (s >> 33) as usize % (k + 1));
        }
        let pc: Vec<Vec<i64>> = perm.iter().map(|&i| perm.iter().map(|&j| c[i][j]).collect()).collect();
        prop_assert_eq!(classify_symmetric(&pc), class);
        if let Some(d) = affine_delta(&g).unwrap() {
            prop_assert!(c.iter().all(|row| row.iter().zip(&d).map(|(a, b)| a * b).sum::<i64>() == 0));
        }
    }

    #[test]
    fn dynkin_label_matches_class(g in simple_graph(8)) {
        let class = classify_symmetric(&g.cartan().unwrap());
        let label = dynkin_label(&g);
        let expected = match &label {
            None => FormClass::Indefinite,
            Some(l) if l.contains("affine") => FormClass::StrictlySemiPositive,
            Some(_) => FormClass::PositiveDefinite,
        };
        prop_assert_eq!(class, expected, "label {:?}", label);
    }

    #[test]
    fn commutative_normal_forms(terms in prop::collection::vec((word(), rational()), 0..5), u in word(), v in word(), w1 in word(), w2 in word()) {
        let q = two_loops();
        let alg = QuiverAlgebra::with_relations(q.clone(), vec![]).unwrap();
        let comm = alg.p("x y - y x");
        let alg = QuiverAlgebra::with_relations(q, vec![comm.clone()]).unwrap();
        let f = element(&terms);
        let nf = alg.nf(&f, 8);
        prop_assert_eq!(alg.nf(&nf, 8), nf.clone());
        prop_assert!(alg.member(&f.sub(&nf), 8));
        let g = f.add(&alg.prod(&[&element(&[(u, rat(1, 1))]), &comm, &element(&[(v, rat(1, 1))])]));
        prop_assert_eq!(alg.nf(&g, 12), alg.nf(&f, 12));
        let count = |w: &[u32]| (w.iter().filter(|&&a| a == 0).count(), w.len());
        let same = count(&w1) == count(&w2);
        let (a, b) = (element(&[(w1, rat(1, 1))]), element(&[(w2, rat(1, 1))]));
        prop_assert_eq!(alg.nf(&a, 8) == alg.nf(&b, 8), same);
    }

    #[test]
    fn moment_map_traces_cancel(g in plumbing(4), vals in prop::collection::vec(-3i64..4, 1..40), dims in prop::collection::vec(0usize..3, 4)) {
        let dq = double_quiver(&g, &Orientation::Lexicographic).unwrap();
        let q = &dq.quiver;
        let dims = &dims[..q.n_vertices()];
        let mut it = vals.iter().cycle().map(|&v| rat(v, 1));
        let mats = q.arrows.iter().map(|a| Matrix::zeros(dims[a.head], dims[a.tail]).clone_with(&mut it)).collect();
        let rho = MatrixRep { dims: dims.to_vec(), mats };
        let mu = moment_map(&rho, &dq).unwrap();
        let total = mu.values().fold(Rational::zero(), |acc, m| (0..m.shape().0).fold(acc, |s, i| s.add(m.get(i, i))));
        prop_assert!(total.is_zero());
    }

    #[test]
    fn witnesses_destabilize(n in 0usize..3, r in 0usize..3, vals in prop::collection::vec(-2i64..3, 1..20), z in prop::sample::select(vec![-2i64, -1, 1, 2])) {
        let dq = adhm_quiver();
        let mut it = vals.iter().cycle().map(|&v| rat(v, 1));
        let mats = vec![
            Matrix::zeros(n, n).clone_with(&mut it),
            Matrix::zeros(n, n).clone_with(&mut it),
            Matrix::zeros(n, r).clone_with(&mut it),
            Matrix::zeros(r, n).clone_with(&mut it),
        ];
        let rho = MatrixRep { dims: vec![n, r], mats };
        let zeta = [rat(z, 1)];
        match is_stable(&rho, &dq.quiver, &zeta, Mode::Framed).unwrap() {
            Verdict::Stable => {}
            Verdict::Unknown => prop_assert!(false, "unknown verdict"),
            Verdict::Unstable(w) | Verdict::SemistableOnly(w) => {
                let got = verify_witness(&rho, &dq.quiver, &w, &zeta, Mode::Framed).unwrap();
                prop_assert_eq!(got, WitnessVerdict::ValidDestabilizer { strict: w.strict });
                let doc = WitnessDoc::from_witness(&w, &dq.quiver);
                let back = WitnessDoc::from_json(&serde_json::to_string(&doc).unwrap()).unwrap().to_witness::<Rational>(&dq.quiver, &rho.dims).unwrap();
                prop_assert_eq!(back, w);
            }
        }
    }

    #[test]
    fn localized_loops_invert(k in 1u32..4, word in prop::collection::vec(any::<bool>(), 0..4), c in rational()) {
        let mut q = Quiver::new();
        q.add_vertex("1", false).unwrap();
        q.add_vertex("2", false).unwrap();
        q.add_arrow("u", "1", "2").unwrap();
        q.add_arrow("v", "2", "1").unwrap();
        let alg = LocSpec::scalar("v u", "w").apply(QuiverAlgebra::<Rational>::free(q)).unwrap();
        let z = alg.p("v u");
        let w = alg.p("w");
        let e = alg.p("e_1");
        let zk = z.pow(k, &alg.quiver);
        let wk = w.pow(k, &alg.quiver);
        prop_assert!(alg.member(&alg.mul(&zk, &wk).sub(&e), 8));
        prop_assert!(alg.member(&alg.mul(&wk, &zk).sub(&e), 8));
        let mut f = e.scale(&c);
        for b in word {
            f = alg.mul(&f, if b { &z } else { &w });
        }
        let g = alg.prod(&[&f, &z, &w]);
        prop_assert_eq!(alg.nf(&g, 12), alg.nf(&f, 12));
    }
}
