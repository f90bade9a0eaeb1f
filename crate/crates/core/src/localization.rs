//! Universal localization at elements and at matrices of paths.

use crate::algebra::{AlgebraError, InversePair, QuiverAlgebra};
use crate::path::Element;
use crate::scalar::Scalar;

/// Adjoins γ⁻¹ for each γ (named by `names`), with relations γγ⁻¹ − e_{h(γ)}
/// and γ⁻¹γ − e_{t(γ)}.
pub fn localize_scalar<K: Scalar>(
    a: &QuiverAlgebra<K>,
    s: &[(Element<K>, &str)],
) -> Result<QuiverAlgebra<K>, AlgebraError> {
    let mut out = a.clone();
    for (g, name) in s {
        let (h, t) = g.homogeneous_ends(&a.quiver).ok_or_else(|| AlgebraError::NotHomogeneous(a.show(g)))?;
        let inv = out.add_arrow(name, h, t, 0)?;
        let gi = Element::arrow(inv);
        let r1 = out.mul(g, &gi).sub(&Element::idempotent(h));
        let r2 = out.mul(&gi, g).sub(&Element::idempotent(t));
        out.add_relation(r1)?;
        out.add_relation(r2)?;
        out.inverse_pairs.push(InversePair { inverse: vec![vec![inv]], original: vec![vec![g.clone()]] });
    }
    Ok(out)
}

/// Adjoins an n×m matrix of arrows γ inverting the m×n matrix S, whose rows
/// share heads and columns share tails. `names[j][i]` names γ_{ji}.
pub fn localize_matrix<K: Scalar>(
    a: &QuiverAlgebra<K>,
    s: &[Vec<Element<K>>],
    names: &[Vec<&str>],
) -> Result<QuiverAlgebra<K>, AlgebraError> {
    let q = &a.quiver;
    let m = s.len();
    let n = s.first().map_or(0, |r| r.len());
    if s.iter().any(|r| r.len() != n) || names.len() != n || names.iter().any(|r| r.len() != m) {
        return Err(AlgebraError::MatrixShape);
    }
    let mut heads = vec![None; m];
    let mut tails = vec![None; n];
    for i in 0..m {
        for j in 0..n {
            let (h, t) = s[i][j].homogeneous_ends(q).ok_or_else(|| AlgebraError::NotHomogeneous(a.show(&s[i][j])))?;
            if *heads[i].get_or_insert(h) != h || *tails[j].get_or_insert(t) != t {
                return Err(AlgebraError::MatrixShape);
            }
        }
    }
    let heads: Vec<usize> = heads.into_iter().map(|x| x.ok_or(AlgebraError::MatrixShape)).collect::<Result<_, _>>()?;
    let tails: Vec<usize> = tails.into_iter().map(|x| x.ok_or(AlgebraError::MatrixShape)).collect::<Result<_, _>>()?;
    let mut out = a.clone();
    let mut gamma = vec![vec![0usize; m]; n];
    for j in 0..n {
        for i in 0..m {
            gamma[j][i] = out.add_arrow(names[j][i], heads[i], tails[j], 0)?;
        }
    }
    // γS = I_n
    for j in 0..n {
        for k in 0..n {
            let mut r = Element::zero();
            for i in 0..m {
                r = r.add(&out.mul(&Element::arrow(gamma[j][i]), &s[i][k]));
            }
            if j == k {
                r = r.sub(&Element::idempotent(tails[j]));
            }
            out.add_relation(r)?;
        }
    }
    // Sγ = I_m
    for i in 0..m {
        for l in 0..m {
            let mut r = Element::zero();
            for j in 0..n {
                r = r.add(&out.mul(&s[i][j], &Element::arrow(gamma[j][l])));
            }
            if i == l {
                r = r.sub(&Element::idempotent(heads[i]));
            }
            out.add_relation(r)?;
        }
    }
    out.inverse_pairs.push(InversePair { inverse: gamma, original: s.to_vec() });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quiver::Quiver;
    use crate::scalar::Rational;

    #[test]
    fn jordan_localized_at_x() {
        let mut q = Quiver::new();
        q.add_vertex("0", false).unwrap();
        q.add_arrow("x", "0", "0").unwrap();
        q.add_arrow("y", "0", "0").unwrap();
        let a = QuiverAlgebra::<Rational>::free(q);
        let l = localize_scalar(&a, &[(a.p("x"), "xinv")]).unwrap();
        assert_eq!(l.quiver.n_arrows(), 3);
        assert_eq!(l.relations.len(), 2);
        assert!(l.member(&l.p("xinv x - e_0"), 4));
        assert!(l.member(&l.p("x xinv - e_0"), 4));
        assert!(l.member(&l.p("x x xinv xinv - e_0"), 4));
    }

    #[test]
    fn one_by_one_matrix_is_scalar() {
        let mut q = Quiver::new();
        q.add_vertex("0", false).unwrap();
        q.add_vertex("1", false).unwrap();
        q.add_arrow("a", "0", "1").unwrap();
        let a = QuiverAlgebra::<Rational>::free(q);
        let m = localize_matrix(&a, &[vec![a.p("a")]], &[vec!["g"]]).unwrap();
        let s = localize_scalar(&a, &[(a.p("a"), "g")]).unwrap();
        assert_eq!(m.relations.len(), s.relations.len());
        for r in &s.relations {
            assert!(m.member(r, 4));
        }
    }
}
