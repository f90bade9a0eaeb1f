//! Exact coefficient rings: rationals, Gaussian rationals, prime fields and
//! truncated Novikov series.

use std::cmp::Ordering;
use std::fmt;
use std::hash::Hash;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

/// Coefficients of path-algebra elements and matrices.
///
/// `inv` returns `None` for zero and for non-units (Novikov series with a
/// nonzero leading exponent).
pub trait Scalar: Clone + PartialEq + Eq + Hash + fmt::Debug + fmt::Display + Send + Sync + 'static {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn inv(&self) -> Option<Self>;
    /// Image of a rational number; `None` when the denominator is not invertible.
    fn from_rational(q: &Rational) -> Option<Self>;

    fn from_i64(n: i64) -> Self {
        Self::from_rational(&int(n)).expect("integers embed in every scalar ring")
    }

    fn is_one(&self) -> bool {
        *self == Self::one()
    }

    fn add_assign(&mut self, other: &Self) {
        *self = self.add(other);
    }

    fn pow(&self, e: u32) -> Self {
        let mut r = Self::one();
        for _ in 0..e {
            r = r.mul(self);
        }
        r
    }
}

impl Scalar for Rational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn inv(&self) -> Option<Self> {
        if Zero::is_zero(self) {
            None
        } else {
            Some(self.recip())
        }
    }
    fn from_rational(q: &Rational) -> Option<Self> {
        Some(q.clone())
    }
}

/// An element re + im·i of ℚ(i).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct GaussRat {
    pub re: Rational,
    pub im: Rational,
}

impl GaussRat {
    pub fn new(re: Rational, im: Rational) -> Self {
        GaussRat { re, im }
    }

    pub fn i() -> Self {
        GaussRat::new(int(0), int(1))
    }

    pub fn conj(&self) -> Self {
        GaussRat::new(self.re.clone(), -&self.im)
    }
}

impl fmt::Display for GaussRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if Zero::is_zero(&self.im) {
            write!(f, "{}", self.re)
        } else if Zero::is_zero(&self.re) {
            write!(f, "{}i", self.im)
        } else {
            write!(f, "({}+{}i)", self.re, self.im)
        }
    }
}

impl Scalar for GaussRat {
    fn zero() -> Self {
        GaussRat::new(int(0), int(0))
    }
    fn one() -> Self {
        GaussRat::new(int(1), int(0))
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(&self.re) && Zero::is_zero(&self.im)
    }
    fn add(&self, o: &Self) -> Self {
        GaussRat::new(&self.re + &o.re, &self.im + &o.im)
    }
    fn sub(&self, o: &Self) -> Self {
        GaussRat::new(&self.re - &o.re, &self.im - &o.im)
    }
    fn mul(&self, o: &Self) -> Self {
        GaussRat::new(
            &self.re * &o.re - &self.im * &o.im,
            &self.re * &o.im + &self.im * &o.re,
        )
    }
    fn neg(&self) -> Self {
        GaussRat::new(-&self.re, -&self.im)
    }
    fn inv(&self) -> Option<Self> {
        let n = &self.re * &self.re + &self.im * &self.im;
        if Zero::is_zero(&n) {
            return None;
        }
        Some(GaussRat::new(&self.re / &n, -&self.im / &n))
    }
    fn from_rational(q: &Rational) -> Option<Self> {
        Some(GaussRat::new(q.clone(), int(0)))
    }
}

/// The prime field 𝔽_P.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct Fp<const P: u64>(pub u64);

impl<const P: u64> Fp<P> {
    pub fn new(v: i64) -> Self {
        Fp(v.rem_euclid(P as i64) as u64)
    }

    pub fn elements() -> impl Iterator<Item = Self> {
        (0..P).map(Fp)
    }
}

impl<const P: u64> fmt::Display for Fp<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl<const P: u64> Scalar for Fp<P> {
    fn zero() -> Self {
        Fp(0)
    }
    fn one() -> Self {
        Fp(1 % P)
    }
    fn is_zero(&self) -> bool {
        self.0 == 0
    }
    fn add(&self, o: &Self) -> Self {
        Fp((self.0 + o.0) % P)
    }
    fn sub(&self, o: &Self) -> Self {
        Fp((self.0 + P - o.0) % P)
    }
    fn mul(&self, o: &Self) -> Self {
        Fp(((self.0 as u128 * o.0 as u128) % P as u128) as u64)
    }
    fn neg(&self) -> Self {
        Fp((P - self.0) % P)
    }
    fn inv(&self) -> Option<Self> {
        if self.0 == 0 {
            return None;
        }
        let mut r = Self::one();
        let mut b = *self;
        let mut e = P - 2;
        while e > 0 {
            if e & 1 == 1 {
                r = r.mul(&b);
            }
            b = b.mul(&b);
            e >>= 1;
        }
        Some(r)
    }
    fn from_rational(q: &Rational) -> Option<Self> {
        let p = BigInt::from(P);
        let n = q.numer().mod_floor(&p).to_u64()?;
        let d = q.denom().mod_floor(&p).to_u64()?;
        Fp::<P>(n).mul(&Fp::<P>(d).inv()?).into()
    }
}

pub type F2 = Fp<2>;
pub type F3 = Fp<3>;

/// Valuation of a scalar; `None` stands for +∞.
pub trait Valued {
    fn valuation(&self) -> Option<Rational>;
}

impl Valued for Rational {
    fn valuation(&self) -> Option<Rational> {
        if Zero::is_zero(self) {
            None
        } else {
            Some(int(0))
        }
    }
}

impl Valued for GaussRat {
    fn valuation(&self) -> Option<Rational> {
        if Scalar::is_zero(self) {
            None
        } else {
            Some(int(0))
        }
    }
}

/// A truncated Novikov series Σ c_k T^{λ_k}: exponents strictly increasing and
/// below `trunc` (when present). Products and sums drop terms at or above the
/// truncation.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Novikov {
    pub terms: Vec<(Rational, GaussRat)>,
    pub trunc: Option<Rational>,
}

impl Novikov {
    pub fn new(mut terms: Vec<(Rational, GaussRat)>, trunc: Option<Rational>) -> Self {
        terms.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(Rational, GaussRat)> = Vec::new();
        for (e, c) in terms {
            if let Some(t) = &trunc {
                if &e >= t {
                    continue;
                }
            }
            match merged.last_mut() {
                Some((le, lc)) if *le == e => *lc = lc.add(&c),
                _ => merged.push((e, c)),
            }
        }
        merged.retain(|(_, c)| !Scalar::is_zero(c));
        Novikov { terms: merged, trunc }
    }

    /// c·T^e
    pub fn monomial(e: Rational, c: GaussRat) -> Self {
        Novikov::new(vec![(e, c)], None)
    }

    pub fn t_pow(e: Rational) -> Self {
        Novikov::monomial(e, GaussRat::one())
    }

    pub fn with_trunc(mut self, trunc: Rational) -> Self {
        self.trunc = Some(trunc);
        Novikov::new(self.terms, self.trunc)
    }

    fn join_trunc(a: &Option<Rational>, b: &Option<Rational>) -> Option<Rational> {
        match (a, b) {
            (Some(x), Some(y)) => Some(std::cmp::min(x, y).clone()),
            (Some(x), None) | (None, Some(x)) => Some(x.clone()),
            (None, None) => None,
        }
    }

    pub fn leading(&self) -> Option<&(Rational, GaussRat)> {
        self.terms.first()
    }

    /// Membership in Λ_U = ℂ^× ⊕ Λ_+: valuation exactly zero.
    pub fn is_unit_valuation_zero(&self) -> bool {
        matches!(self.leading(), Some((e, _)) if Zero::is_zero(e))
    }
}

impl fmt::Display for Novikov {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(e, c)| if Zero::is_zero(e) { format!("{c}") } else { format!("{c}T^{e}") })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl Scalar for Novikov {
    fn zero() -> Self {
        Novikov { terms: vec![], trunc: None }
    }
    fn one() -> Self {
        Novikov::monomial(int(0), GaussRat::one())
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn add(&self, o: &Self) -> Self {
        let mut t = self.terms.clone();
        t.extend(o.terms.iter().cloned());
        Novikov::new(t, Novikov::join_trunc(&self.trunc, &o.trunc))
    }
    fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }
    fn mul(&self, o: &Self) -> Self {
        let mut t = Vec::with_capacity(self.terms.len() * o.terms.len());
        for (e1, c1) in &self.terms {
            for (e2, c2) in &o.terms {
                t.push((e1 + e2, c1.mul(c2)));
            }
        }
        Novikov::new(t, Novikov::join_trunc(&self.trunc, &o.trunc))
    }
    fn neg(&self) -> Self {
        Novikov {
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c.neg())).collect(),
            trunc: self.trunc.clone(),
        }
    }
    /// Inverts units c(1 + h) with h of positive valuation, as the truncated
    /// geometric series. Requires a truncation when h ≠ 0.
    fn inv(&self) -> Option<Self> {
        let (e0, c0) = self.leading()?;
        if !Zero::is_zero(e0) {
            return None;
        }
        let c0i = c0.inv()?;
        let h = Novikov::new(
            self.terms[1..].iter().map(|(e, c)| (e.clone(), c.mul(&c0i))).collect(),
            self.trunc.clone(),
        );
        if h.is_zero() {
            return Some(Novikov::new(vec![(int(0), c0i)], self.trunc.clone()));
        }
        let trunc = self.trunc.clone()?;
        let step = h.leading().map(|(e, _)| e.clone())?;
        let n = (&trunc / &step).ceil().to_integer().to_u64()? as usize + 1;
        let mut sum = Novikov::one().with_trunc(trunc.clone());
        let mut pow = Novikov::one().with_trunc(trunc.clone());
        let mh = h.neg();
        for _ in 0..n {
            pow = pow.mul(&mh);
            if pow.is_zero() {
                break;
            }
            sum = sum.add(&pow);
        }
        Some(sum.mul(&Novikov::new(vec![(int(0), c0i)], Some(trunc))))
    }
    fn from_rational(q: &Rational) -> Option<Self> {
        Some(Novikov::monomial(int(0), GaussRat::from_rational(q)?))
    }
}

impl Valued for Novikov {
    fn valuation(&self) -> Option<Rational> {
        self.leading().map(|(e, _)| e.clone())
    }
}

impl<const P: u64> Valued for Fp<P> {
    fn valuation(&self) -> Option<Rational> {
        if self.0 == 0 {
            None
        } else {
            Some(int(0))
        }
    }
}

/// Total order on optional valuations where `None` is +∞.
pub fn cmp_val(a: &Option<Rational>, b: &Option<Rational>) -> Ordering {
    match (a, b) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Greater,
        (Some(_), None) => Ordering::Less,
        (Some(x), Some(y)) => x.cmp(y),
    }
}

pub fn rational_sign(q: &Rational) -> i32 {
    if q.is_positive() {
        1
    } else if q.is_negative() {
        -1
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fp_inverse() {
        for a in 1..7 {
            let x = Fp::<7>(a);
            assert_eq!(x.mul(&x.inv().unwrap()), Fp::<7>::one());
        }
        assert_eq!(F2::from_rational(&rat(1, 3)), Some(Fp(1)));
        assert_eq!(F3::from_rational(&rat(1, 3)), None);
    }

    #[test]
    fn gauss_inverse() {
        let z = GaussRat::new(int(3), int(-4));
        assert_eq!(z.mul(&z.inv().unwrap()), GaussRat::one());
        assert_eq!(GaussRat::i().mul(&GaussRat::i()), GaussRat::from_i64(-1));
    }

    #[test]
    fn novikov_truncation_and_inverse() {
        let t = rat(3, 1);
        let x = Novikov::new(
            vec![(int(0), GaussRat::one()), (rat(1, 2), GaussRat::from_i64(2))],
            Some(t.clone()),
        );
        let y = x.inv().unwrap();
        assert_eq!(x.mul(&y), Novikov::one().with_trunc(t));
        assert!(Novikov::t_pow(int(1)).inv().is_none());
        assert_eq!(Novikov::zero().valuation(), None);
    }
}
