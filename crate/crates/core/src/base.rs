//! The base group Z^m, its congruence subgroups (p^k Z)^m and residues.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An element of Λ = Z^m.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BaseElement(Vec<BigInt>);

impl BaseElement {
    pub fn new(coords: Vec<BigInt>) -> Self {
        BaseElement(coords)
    }

    pub fn from_i64s(coords: &[i64]) -> Self {
        BaseElement(coords.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn identity(rank: usize) -> Self {
        BaseElement(vec![BigInt::zero(); rank])
    }

    /// `sign` times the `i`-th standard basis vector.
    pub fn unit(rank: usize, i: usize, sign: i64) -> Self {
        let mut c = vec![BigInt::zero(); rank];
        c[i] = BigInt::from(sign);
        BaseElement(c)
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[BigInt] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn compose(&self, other: &BaseElement) -> Result<BaseElement> {
        check_rank(self.rank(), other.rank())?;
        Ok(BaseElement(
            self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn inverse(&self) -> BaseElement {
        BaseElement(self.0.iter().map(|a| -a).collect())
    }

    /// `self - other`, i.e. `other^{-1} self` in additive notation.
    pub fn difference(&self, other: &BaseElement) -> Result<BaseElement> {
        check_rank(self.rank(), other.rank())?;
        Ok(BaseElement(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }
}

impl fmt::Display for BaseElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_tuple(f, self.0.iter())
    }
}

pub(crate) fn write_tuple<T: fmt::Display>(
    f: &mut fmt::Formatter<'_>,
    items: impl Iterator<Item = T>,
) -> fmt::Result {
    f.write_str("(")?;
    for (i, c) in items.enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{c}")?;
    }
    f.write_str(")")
}

pub(crate) fn check_rank(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::RankMismatch { expected, found })
    }
}

/// The congruence subgroup (p^k Z)^m of Z^m. Normal since Z^m is abelian;
/// its index is p^{km}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CongruenceSubgroup {
    prime: u64,
    exponent: u32,
    rank: usize,
    modulus: u64,
}

impl CongruenceSubgroup {
    pub fn new(prime: u64, exponent: u32, rank: usize) -> Result<Self> {
        if !is_prime(prime) {
            return Err(Error::NotPrime(prime));
        }
        let modulus = checked_pow(prime, exponent).ok_or(Error::ModulusOverflow {
            p: prime,
            k: exponent,
        })?;
        Ok(CongruenceSubgroup {
            prime,
            exponent,
            rank,
            modulus,
        })
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// p^k.
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// [Λ : Λ_γ] = p^{km}.
    pub fn index(&self) -> BigInt {
        num_traits::pow(BigInt::from(self.modulus), self.rank)
    }

    pub fn reduce(&self, e: &BaseElement) -> Result<BaseResidue> {
        check_rank(self.rank, e.rank())?;
        let n = BigInt::from(self.modulus);
        Ok(BaseResidue(
            e.coords()
                .iter()
                .map(|c| c.mod_floor(&n).to_u64().expect("residue below modulus"))
                .collect(),
        ))
    }

    pub fn in_kernel(&self, e: &BaseElement) -> Result<bool> {
        check_rank(self.rank, e.rank())?;
        let n = BigInt::from(self.modulus);
        Ok(e.coords().iter().all(|c| c.is_multiple_of(&n)))
    }

    /// Residue-group sum.
    pub fn add(&self, a: &BaseResidue, b: &BaseResidue) -> BaseResidue {
        BaseResidue(
            a.0.iter()
                .zip(&b.0)
                .map(|(&x, &y)| add_mod(x, y, self.modulus))
                .collect(),
        )
    }

    pub fn neg(&self, a: &BaseResidue) -> BaseResidue {
        BaseResidue(
            a.0.iter()
                .map(|&x| if x == 0 { 0 } else { self.modulus - x })
                .collect(),
        )
    }

    pub fn zero(&self) -> BaseResidue {
        BaseResidue(vec![0; self.rank])
    }

    /// Residues in canonical (lexicographic) order, lazily.
    pub fn residues(&self) -> impl Iterator<Item = BaseResidue> + '_ {
        let total = self.modulus.checked_pow(self.rank as u32);
        let count = total.unwrap_or(u64::MAX);
        (0..count).map(move |mut i| {
            let mut c = vec![0; self.rank];
            for slot in c.iter_mut().rev() {
                *slot = i % self.modulus;
                i /= self.modulus;
            }
            BaseResidue(c)
        })
    }
}

/// Canonical representative of a coset of (p^k Z)^m, coordinates in [0, p^k).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BaseResidue(pub Vec<u64>);

impl BaseResidue {
    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    /// Lift to the representative with the same coordinates.
    pub fn lift(&self) -> BaseElement {
        BaseElement(self.0.iter().map(|&c| BigInt::from(c)).collect())
    }
}

impl fmt::Display for BaseResidue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_tuple(f, self.0.iter())
    }
}

pub(crate) fn add_mod(x: u64, y: u64, n: u64) -> u64 {
    ((x as u128 + y as u128) % n as u128) as u64
}

pub(crate) fn checked_pow(base: u64, exp: u32) -> Option<u64> {
    base.checked_pow(exp).filter(|&v| v <= i64::MAX as u64)
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut f = 2u64;
    while f.saturating_mul(f) <= n {
        if n.is_multiple_of(f) {
            return false;
        }
        f += 1;
    }
    true
}

/// Least k ≥ 1 such that p^{km} > `index_bound` and no element of `avoid` lies
/// in (p^k Z)^m.
pub fn minimal_exponent(
    p: u64,
    rank: usize,
    avoid: &[BaseElement],
    index_bound: &BigRational,
) -> Result<u32> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    for a in avoid {
        check_rank(rank, a.rank())?;
        if a.is_identity() {
            return Err(Error::IdentityInAvoid);
        }
    }
    let p_big = BigInt::from(p);
    let mut modulus = p_big.clone();
    let mut k = 1u32;
    loop {
        let index = num_traits::pow(modulus.clone(), rank);
        let large_enough = BigRational::from_integer(index) > *index_bound;
        let separates = avoid
            .iter()
            .all(|a| a.coords().iter().any(|c| !c.is_multiple_of(&modulus)));
        if large_enough && separates {
            return Ok(k);
        }
        k += 1;
        modulus *= &p_big;
    }
}

/// Smallest prime strictly greater than `n`.
pub fn next_prime(n: u64) -> u64 {
    let mut c = n + 1;
    while !is_prime(c) {
        c += 1;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn e(c: &[i64]) -> BaseElement {
        BaseElement::from_i64s(c)
    }

    fn h(p: u64, k: u32, m: usize) -> CongruenceSubgroup {
        CongruenceSubgroup::new(p, k, m).unwrap()
    }

    #[test]
    fn compose_examples() {
        assert_eq!(e(&[3]).compose(&e(&[-3])).unwrap(), e(&[0]));
        assert_eq!(e(&[1, 2]).compose(&e(&[0, 0])).unwrap(), e(&[1, 2]));
        assert_eq!(e(&[5]).compose(&e(&[7])).unwrap(), e(&[12]));
        assert!(matches!(
            e(&[1]).compose(&e(&[1, 2])),
            Err(Error::RankMismatch { .. })
        ));
    }

    #[test]
    fn reduce_examples() {
        assert_eq!(h(2, 3, 1).reduce(&e(&[5])).unwrap(), BaseResidue(vec![5]));
        assert_eq!(h(2, 3, 1).reduce(&e(&[8])).unwrap(), BaseResidue(vec![0]));
        assert_eq!(h(3, 1, 1).reduce(&e(&[-1])).unwrap(), BaseResidue(vec![2]));
    }

    #[test]
    fn kernel_examples() {
        assert!(h(2, 3, 1).in_kernel(&e(&[8])).unwrap());
        assert!(!h(2, 2, 1).in_kernel(&e(&[6])).unwrap());
        assert!(h(3, 2, 2).in_kernel(&e(&[0, 9])).unwrap());
    }

    #[test]
    fn composite_prime_rejected() {
        assert_eq!(CongruenceSubgroup::new(4, 1, 1), Err(Error::NotPrime(4)));
    }

    #[test]
    fn minimal_exponent_examples() {
        let int = |n: i64| BigRational::from_integer(n.into());
        assert_eq!(minimal_exponent(2, 1, &[e(&[6])], &int(4)).unwrap(), 3);
        assert_eq!(minimal_exponent(3, 1, &[e(&[1])], &int(2)).unwrap(), 1);
        assert_eq!(minimal_exponent(2, 1, &[], &int(1)).unwrap(), 1);
        assert_eq!(
            minimal_exponent(2, 1, &[e(&[0])], &int(1)),
            Err(Error::IdentityInAvoid)
        );
    }

    #[test]
    fn residues_are_canonical_order() {
        let g = h(2, 1, 2);
        let all: Vec<_> = g.residues().collect();
        assert_eq!(
            all,
            vec![
                BaseResidue(vec![0, 0]),
                BaseResidue(vec![0, 1]),
                BaseResidue(vec![1, 0]),
                BaseResidue(vec![1, 1])
            ]
        );
    }

    #[test]
    fn primes() {
        let ps: Vec<u64> = (0..30).filter(|&n| is_prime(n)).collect();
        assert_eq!(ps, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert_eq!(next_prime(7), 11);
    }

    fn subgroup() -> impl Strategy<Value = CongruenceSubgroup> {
        (prop::sample::select(vec![2u64, 3, 5, 7]), 1u32..4, 1usize..4).prop_map(|(p, k, m)| h(p, k, m))
    }

    fn element(m: usize) -> impl Strategy<Value = BaseElement> {
        prop::collection::vec(-500i64..500, m).prop_map(|c| e(&c))
    }

    proptest! {
        #[test]
        fn reduce_is_a_homomorphism(
            (g, a, b) in subgroup().prop_flat_map(|g| (Just(g), element(g.rank()), element(g.rank())))
        ) {
            let lhs = g.reduce(&a.compose(&b).unwrap()).unwrap();
            let rhs = g.add(&g.reduce(&a).unwrap(), &g.reduce(&b).unwrap());
            prop_assert_eq!(lhs, rhs);
            let inv = g.reduce(&a.inverse()).unwrap();
            prop_assert_eq!(inv, g.neg(&g.reduce(&a).unwrap()));
        }

        #[test]
        fn kernel_iff_zero_residue(
            (g, a) in subgroup().prop_flat_map(|g| (Just(g), element(g.rank())))
        ) {
            prop_assert_eq!(g.in_kernel(&a).unwrap(), g.reduce(&a).unwrap().is_zero());
            // multiples of the modulus always lie in the kernel
            let scaled = BaseElement::new(a.coords().iter().map(|c| c * g.modulus()).collect());
            prop_assert!(g.in_kernel(&scaled).unwrap());
        }

        #[test]
        fn minimal_exponent_is_minimal(
            p in prop::sample::select(vec![2u64, 3, 5]),
            m in 1usize..3,
            avoid in prop::collection::vec(prop::collection::vec(-40i64..40, 2), 0..4),
            num in 1i64..200,
            den in 1i64..20,
        ) {
            let avoid: Vec<BaseElement> = avoid
                .into_iter()
                .map(|c| e(&c[..m]))
                .filter(|a| !a.is_identity())
                .collect();
            let bound = BigRational::new(num.into(), den.into());
            let k = minimal_exponent(p, m, &avoid, &bound).unwrap();
            // direct scan over exponents
            let ok = |k: u32| {
                let g = h(p, k, m);
                BigRational::from_integer(g.index()) > bound
                    && avoid.iter().all(|a| !g.in_kernel(a).unwrap())
            };
            prop_assert!(ok(k));
            prop_assert!((1..k).all(|j| !ok(j)));
        }
    }
}
