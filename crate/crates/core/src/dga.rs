//! The framed double quiver with a degree −1 loop t_v at every unframed
//! vertex, d(t_v) the preprojective relation at v and d = 0 on arrows.
//! Its degree-0 homology is the framed preprojective algebra.

use std::collections::HashMap;

use crate::algebra::{check_dg, preprojective_algebra, preprojective_relation, AlgebraError, DgReport, QuiverAlgebra};
use crate::path::Element;
use crate::quiver::DoubleQuiver;
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct ExtendedDga<K: Scalar> {
    pub dq: DoubleQuiver,
    /// Free algebra on the framed double quiver plus the loops t_v.
    pub alg: QuiverAlgebra<K>,
    pub d: HashMap<usize, Element<K>>,
    /// (vertex, arrow index of t_v)
    pub loops: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DgaReport {
    pub dg: DgReport,
    /// Vertices whose d(t_v) is not in the preprojective ideal.
    pub outside: Vec<String>,
    /// Vertices whose preprojective relation is not generated by the d(t_w).
    pub not_generated: Vec<String>,
}

impl DgaReport {
    pub fn passed(&self) -> bool {
        self.dg.passed && self.outside.is_empty() && self.not_generated.is_empty()
    }
}

pub fn extended_dga<K: Scalar>(dq: &DoubleQuiver) -> Result<ExtendedDga<K>, AlgebraError> {
    let mut alg = QuiverAlgebra::free(dq.quiver.clone());
    let mut d = HashMap::new();
    let mut loops = Vec::new();
    for v in dq.quiver.unframed_vertices() {
        let id = format!("t_{}", dq.quiver.vertices[v].id);
        let t = alg.add_arrow(&id, v, v, -1)?;
        d.insert(t, preprojective_relation(dq, v));
        loops.push((v, t));
    }
    Ok(ExtendedDga { dq: dq.clone(), alg, d, loops })
}

impl<K: Scalar> ExtendedDga<K> {
    /// Adds `extra` to d(t_v).
    pub fn perturb(&mut self, v: usize, extra: &Element<K>) {
        if let Some(&(_, t)) = self.loops.iter().find(|(w, _)| *w == v) {
            let img = self.d.get(&t).cloned().unwrap_or_else(Element::zero).add(extra);
            self.d.insert(t, img);
        }
    }

    pub fn verify(&self, effort: usize) -> Result<DgaReport, AlgebraError> {
        let dg = check_dg(&self.alg, &self.d, effort)?;
        let q = &self.dq.quiver;
        let pre: QuiverAlgebra<K> = preprojective_algebra(&self.dq);
        let mut gen = QuiverAlgebra::free(q.clone());
        for (_, t) in &self.loops {
            gen.add_relation(self.d[t].clone())?;
        }
        let mut outside = Vec::new();
        let mut not_generated = Vec::new();
        for &(v, t) in &self.loops {
            let id = q.vertices[v].id.clone();
            if !pre.member(&self.d[&t], effort) {
                outside.push(id.clone());
            }
            if !gen.member(&preprojective_relation(&self.dq, v), effort) {
                not_generated.push(id);
            }
        }
        Ok(DgaReport { dg, outside, not_generated })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quiver::{double_quiver, frame_double, graphs, Orientation};
    use crate::scalar::Rational;

    fn framed(g: &crate::quiver::Graph, v: usize) -> DoubleQuiver {
        frame_double(&double_quiver(g, &Orientation::Lexicographic).unwrap(), &[v]).unwrap()
    }

    #[test]
    fn affine_a_and_d4_pass() {
        for n in 1..=3 {
            let e = extended_dga::<Rational>(&framed(&graphs::affine_a(n), 0)).unwrap();
            assert!(e.verify(6).unwrap().passed(), "n = {n}");
        }
        let e = extended_dga::<Rational>(&framed(&graphs::affine_d4(), 0)).unwrap();
        assert!(e.verify(6).unwrap().passed());
    }

    #[test]
    fn perturbation_is_caught() {
        let dq = framed(&graphs::affine_a(2), 0);
        let mut e = extended_dga::<Rational>(&dq).unwrap();
        let extra = e.alg.p("ab0 a0");
        e.perturb(0, &extra);
        let r = e.verify(6).unwrap();
        assert!(!r.passed());
        assert_eq!(r.outside, vec!["1".to_string()]);
    }
}
