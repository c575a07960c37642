//! Finite-index subgroups Γ_γ = A_γ ⋊ Λ_γ separating a nontrivial γ = (g, δ).
//!
//! Λ_γ = (p^k Z)^m and A_γ is the set of lamp configurations whose sums over
//! each coset in a chosen set E of l cosets of Λ_γ vanish mod p.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::base::{is_prime, minimal_exponent, next_prime, BaseResidue, CongruenceSubgroup};
use crate::error::{Error, Result};
use crate::exact::{rational_text, serde_rational};
use crate::wreath::WreathElement;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawDatum")]
pub struct SubgroupDatum {
    pub gamma: WreathElement,
    pub p: u64,
    pub k: u32,
    pub l: usize,
    #[serde(rename = "E")]
    pub residues: Vec<BaseResidue>,
    #[serde(with = "serde_rational")]
    pub epsilon: BigRational,
    pub d: usize,
    pub m: usize,
}

#[derive(Deserialize)]
struct RawDatum {
    gamma: WreathElement,
    p: u64,
    k: u32,
    l: usize,
    #[serde(rename = "E")]
    residues: Vec<BaseResidue>,
    #[serde(with = "serde_rational")]
    epsilon: BigRational,
    d: usize,
    m: usize,
}

impl TryFrom<RawDatum> for SubgroupDatum {
    type Error = Error;

    fn try_from(raw: RawDatum) -> Result<Self> {
        let gamma = raw.gamma.with_dim(raw.d)?;
        crate::base::check_rank(raw.m, gamma.m())?;
        for q in &raw.residues {
            crate::base::check_rank(raw.m, q.0.len())?;
        }
        Ok(SubgroupDatum {
            gamma,
            p: raw.p,
            k: raw.k,
            l: raw.l,
            residues: raw.residues,
            epsilon: raw.epsilon,
            d: raw.d,
            m: raw.m,
        })
    }
}

/// A lamp value `v` lies in (pZ)^d iff every coordinate is divisible by p.
fn value_in_pz(v: &[BigInt], p: u64) -> bool {
    let p = BigInt::from(p);
    v.iter().all(|c| c.is_multiple_of(&p))
}

pub fn is_admissible(gamma: &WreathElement, p: u64) -> bool {
    is_prime(p) && gamma.lamp().iter().all(|(_, v)| !value_in_pz(v, p))
}

fn check_epsilon(epsilon: &BigRational) -> Result<()> {
    if *epsilon > BigRational::zero() && *epsilon < BigRational::one() {
        Ok(())
    } else {
        Err(Error::EpsilonOutOfRange(rational_text(epsilon)))
    }
}

pub fn forge(gamma: &WreathElement, p: u64, epsilon: &BigRational) -> Result<SubgroupDatum> {
    if gamma.is_identity() {
        return Err(Error::IdentityGamma);
    }
    check_epsilon(epsilon)?;
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if let Some((_, v)) = gamma.lamp().iter().find(|(_, v)| value_in_pz(v, p)) {
        let text = v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",");
        return Err(Error::InadmissiblePrime {
            p,
            value: format!("({text})"),
        });
    }
    let (d, m) = (gamma.d(), gamma.m());
    let support: Vec<_> = gamma.lamp().support().cloned().collect();
    let l = support.len() + 1;

    let mut avoid = Vec::new();
    if !gamma.shift().is_identity() {
        avoid.push(gamma.shift().clone());
    }
    for (i, a) in support.iter().enumerate() {
        for b in &support[i + 1..] {
            avoid.push(b.difference(a)?);
        }
    }
    let bound = BigRational::new(BigInt::from(l), BigInt::one()) / epsilon;
    let k = minimal_exponent(p, m, &avoid, &bound)?;
    let h = CongruenceSubgroup::new(p, k, m)?;

    let mut chosen = BTreeSet::new();
    for pos in &support {
        chosen.insert(h.reduce(pos)?);
    }
    for q in h.residues() {
        if chosen.len() >= l {
            break;
        }
        chosen.insert(q);
    }
    Ok(SubgroupDatum {
        gamma: gamma.clone(),
        p,
        k,
        l,
        residues: chosen.into_iter().collect(),
        epsilon: epsilon.clone(),
        d,
        m,
    })
}

impl SubgroupDatum {
    pub fn base_subgroup(&self) -> Result<CongruenceSubgroup> {
        CongruenceSubgroup::new(self.p, self.k, self.m)
    }

    /// [Λ : Λ_γ] = p^{km}.
    pub fn base_index(&self) -> BigInt {
        num_traits::pow(BigInt::from(self.p), self.k as usize * self.m)
    }

    /// [Γ : Γ_γ] = p^{km} · p^{ld}.
    pub fn index(&self) -> BigInt {
        num_traits::pow(BigInt::from(self.p), self.k as usize * self.m + self.l * self.d)
    }

    /// Sums of lamp values over each coset of Λ_γ meeting the support, mod nothing.
    fn coset_sums(
        &self,
        h: &CongruenceSubgroup,
        x: &WreathElement,
    ) -> Result<BTreeMap<BaseResidue, Vec<BigInt>>> {
        let mut sums: BTreeMap<BaseResidue, Vec<BigInt>> = BTreeMap::new();
        for (pos, v) in x.lamp().iter() {
            let slot = sums
                .entry(h.reduce(pos)?)
                .or_insert_with(|| vec![BigInt::zero(); self.d]);
            for (s, c) in slot.iter_mut().zip(v) {
                *s += c;
            }
        }
        Ok(sums)
    }

    /// Membership in Γ_γ: shift in (p^k Z)^m and every E-indexed coset sum in (pZ)^d.
    pub fn contains(&self, x: &WreathElement) -> Result<bool> {
        crate::base::check_rank(self.d, x.d())?;
        let h = self.base_subgroup()?;
        if !h.in_kernel(x.shift())? {
            return Ok(false);
        }
        let sums = self.coset_sums(&h, x)?;
        Ok(self
            .residues
            .iter()
            .all(|q| sums.get(q).is_none_or(|v| value_in_pz(v, self.p))))
    }

    /// Lists every violated structural invariant; empty means well-formed.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let h = match self.base_subgroup() {
            Ok(h) => h,
            Err(e) => return vec![e.to_string()],
        };
        if self.gamma.is_identity() {
            out.push("gamma is the identity".into());
        }
        if self.gamma.d() != self.d || self.gamma.m() != self.m {
            out.push("gamma ranks disagree with (d, m)".into());
        }
        if check_epsilon(&self.epsilon).is_err() {
            out.push(format!("epsilon {} outside (0,1)", rational_text(&self.epsilon)));
        }
        if self.k == 0 {
            out.push("k must be positive".into());
        }
        let supp: Vec<_> = self.gamma.lamp().support().cloned().collect();
        if self.l <= supp.len() {
            out.push(format!("l = {} does not exceed |supp(g)| = {}", self.l, supp.len()));
        }
        let lhs = BigRational::from_integer(BigInt::from(self.l));
        if lhs >= &self.epsilon * BigRational::from_integer(self.base_index()) {
            out.push(format!(
                "l = {} is not below epsilon * p^(km) = {} * {}",
                self.l,
                rational_text(&self.epsilon),
                self.base_index()
            ));
        }
        let unique: HashSet<_> = self.residues.iter().collect();
        if self.residues.len() != self.l || unique.len() != self.l {
            out.push(format!("E must hold {} distinct residues", self.l));
        }
        if self
            .residues
            .iter()
            .any(|q| q.0.len() != self.m || q.0.iter().any(|&c| c >= h.modulus()))
        {
            out.push("E holds a non-canonical residue".into());
        }
        let mut seen = HashSet::new();
        for pos in &supp {
            let Ok(r) = h.reduce(pos) else { continue };
            if !seen.insert(r.clone()) {
                out.push(format!("two support points share the residue {r}"));
            }
            if !unique.contains(&r) {
                out.push(format!("residue {r} of support point {pos} missing from E"));
            }
        }
        if !self.gamma.shift().is_identity() && h.in_kernel(self.gamma.shift()).unwrap_or(true) {
            out.push(format!("shift {} lies in Lambda_gamma", self.gamma.shift()));
        }
        if !is_admissible(&self.gamma, self.p) {
            out.push(format!("prime {} is inadmissible for gamma", self.p));
        }
        out
    }
}

/// Default ε_i = 2^{-(i+2)}; the partial products of (1 - ε_i) stay ≥ 1/2.
pub fn epsilon_schedule(i: usize) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << (i + 2))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EpsilonMode {
    Schedule,
    Fixed(BigRational),
}

impl EpsilonMode {
    pub fn epsilon(&self, i: usize) -> BigRational {
        match self {
            EpsilonMode::Schedule => epsilon_schedule(i),
            EpsilonMode::Fixed(e) => e.clone(),
        }
    }

    pub fn is_summable(&self) -> bool {
        matches!(self, EpsilonMode::Schedule)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeAssignment {
    pub entries: Vec<(WreathElement, u64, BigRational)>,
}

/// To the i-th gamma, assigns the smallest unused prime admissible for it.
pub fn assign_primes(gammas: &[WreathElement], mode: &EpsilonMode) -> Result<PrimeAssignment> {
    let mut used = HashSet::new();
    let mut entries = Vec::with_capacity(gammas.len());
    for (i, gamma) in gammas.iter().enumerate() {
        if gamma.is_identity() {
            return Err(Error::IdentityGamma);
        }
        let mut p = 2;
        while used.contains(&p) || !is_admissible(gamma, p) {
            p = next_prime(p);
        }
        used.insert(p);
        entries.push((gamma.clone(), p, mode.epsilon(i)));
    }
    Ok(PrimeAssignment { entries })
}

/// `assign_primes` followed by `forge` for each entry.
pub fn forge_window(gammas: &[WreathElement], mode: &EpsilonMode) -> Result<Vec<SubgroupDatum>> {
    assign_primes(gammas, mode)?
        .entries
        .iter()
        .map(|(g, p, e)| forge(g, *p, e))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::BaseElement;
    use crate::exact::ratio;
    use crate::wreath::GeneratorSet;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn el(t: &str) -> WreathElement {
        t.parse().unwrap()
    }

    fn residues(r: &[u64]) -> Vec<BaseResidue> {
        r.iter().map(|&c| BaseResidue(vec![c])).collect()
    }

    #[test]
    fn forge_lamp_example() {
        let d = forge(&el("{(0):(1)};(0)"), 2, &ratio(1, 2)).unwrap();
        assert_eq!((d.l, d.k), (2, 3));
        assert_eq!(d.base_index(), BigInt::from(8));
        assert_eq!(d.residues, residues(&[0, 1]));
        assert!(d.violations().is_empty());
        assert_eq!(d.index(), BigInt::from(32));
    }

    #[test]
    fn forge_shift_example() {
        let d = forge(&el("{};(1)"), 3, &ratio(1, 2)).unwrap();
        assert_eq!((d.l, d.k), (1, 1));
        assert_eq!(d.residues, residues(&[0]));
        assert_eq!(d.index(), BigInt::from(9));
    }

    #[test]
    fn forge_two_dim_lamp() {
        let d = forge(&el("{(0):(1,0)};(0)"), 2, &ratio(1, 2)).unwrap();
        assert_eq!(d.index(), BigInt::from(128));
    }

    #[test]
    fn forge_errors() {
        let half = ratio(1, 2);
        assert_eq!(
            forge(&WreathElement::identity(1, 1), 2, &half),
            Err(Error::IdentityGamma)
        );
        assert!(matches!(
            forge(&el("{(0):(6)};(0)"), 2, &half),
            Err(Error::InadmissiblePrime { p: 2, .. })
        ));
        assert!(matches!(
            forge(&el("{(0):(1)};(0)"), 2, &ratio(1, 1)),
            Err(Error::EpsilonOutOfRange(_))
        ));
        assert!(matches!(
            forge(&el("{(0):(1)};(0)"), 2, &ratio(0, 1)),
            Err(Error::EpsilonOutOfRange(_))
        ));
        assert_eq!(forge(&el("{(0):(1)};(0)"), 9, &half), Err(Error::NotPrime(9)));
    }

    #[test]
    fn forge_separates_support_and_shift() {
        // avoid {8, 4, -4}: 4 forces k ≥ 3 and the shift 8 forces k ≥ 4; E pads {0, 4} with 1
        let d = forge(&el("{(0):(1),(4):(3)};(8)"), 2, &ratio(1, 2)).unwrap();
        assert_eq!(d.l, 3);
        assert_eq!(d.k, 4);
        assert!(d.violations().is_empty());
        assert_eq!(d.residues, residues(&[0, 1, 4]));
    }

    #[test]
    fn admissibility_in_higher_dimension() {
        // (2,4) ∈ (2Z)^2 but (2,3) is not
        assert!(!is_admissible(&el("{(0):(2,4)};(0)"), 2));
        assert!(is_admissible(&el("{(0):(2,3)};(0)"), 2));
    }

    #[test]
    fn contains_examples() {
        let d = forge(&el("{(0):(1)};(0)"), 2, &ratio(1, 2)).unwrap();
        assert!(!d.contains(&d.gamma).unwrap());
        assert!(d.contains(&el("{(0):(2)};(8)")).unwrap());
        assert!(d.contains(&WreathElement::identity(1, 1)).unwrap());
        // sum over the coset 0 + 8Z is 1 + 1 = 2: inside
        assert!(d.contains(&el("{(0):(1),(8):(1)};(0)")).unwrap());
        // residue 2 is outside E, so any value there is free
        assert!(d.contains(&el("{(2):(1)};(0)")).unwrap());
        assert!(!d.contains(&el("{};(4)")).unwrap());
    }

    #[test]
    fn assign_primes_examples() {
        let gammas = [el("{(0):(1)};(0)"), el("{};(1)")];
        let a = assign_primes(&gammas, &EpsilonMode::Fixed(ratio(1, 2))).unwrap();
        let primes: Vec<_> = a.entries.iter().map(|e| e.1).collect();
        assert_eq!(primes, [2, 3]);

        let gammas = [el("{};(1)"), el("{};(2)"), el("{(0):(6)};(0)")];
        let a = assign_primes(&gammas, &EpsilonMode::Schedule).unwrap();
        let primes: Vec<_> = a.entries.iter().map(|e| e.1).collect();
        assert_eq!(primes, [2, 3, 5]);
        assert_eq!(a.entries[2].2, ratio(1, 16));

        // 6 rules out 2 and 3 even when they are free
        let a = assign_primes(&[el("{(0):(6)};(0)")], &EpsilonMode::Schedule).unwrap();
        assert_eq!(a.entries[0].1, 5);

        assert!(assign_primes(&[], &EpsilonMode::Schedule)
            .unwrap()
            .entries
            .is_empty());
    }

    #[test]
    fn schedule_values_and_partial_products() {
        assert_eq!(epsilon_schedule(0), ratio(1, 4));
        assert_eq!(epsilon_schedule(3), ratio(1, 32));
        let half = ratio(1, 2);
        let mut prod = BigRational::one();
        for i in 0..20 {
            prod *= BigRational::one() - epsilon_schedule(i);
            assert!(prod >= half, "partial product {} below 1/2", rational_text(&prod));
        }
    }

    #[test]
    fn forged_ball_data_are_valid_and_exclude_gamma() {
        let gens = GeneratorSet::new(1, 1);
        let gammas: Vec<_> = gens
            .ball(2, 4)
            .unwrap()
            .into_iter()
            .skip(1)
            .map(|e| e.element)
            .collect();
        for mode in [EpsilonMode::Fixed(ratio(1, 2)), EpsilonMode::Schedule] {
            let data = forge_window(&gammas, &mode).unwrap();
            let primes: HashSet<_> = data.iter().map(|d| d.p).collect();
            assert_eq!(primes.len(), data.len());
            for d in &data {
                assert!(d.violations().is_empty(), "{:?}", d.violations());
                assert!(!d.contains(&d.gamma).unwrap());
            }
        }
    }

    #[test]
    fn json_field_order_and_round_trip() {
        let d = forge(&el("{};(1)"), 3, &ratio(1, 2)).unwrap();
        let json = serde_json::to_string(&d).unwrap();
        assert_eq!(
            json,
            r#"{"gamma":"{};(1)","p":3,"k":1,"l":1,"E":[[0]],"epsilon":"1/2","d":1,"m":1}"#
        );
        let back: SubgroupDatum = serde_json::from_str(&json).unwrap();
        assert_eq!(back, d);
        let d2 = forge(&WreathElement::shift_by(2, BaseElement::from_i64s(&[1])), 3, &ratio(1, 2))
            .unwrap();
        let back: SubgroupDatum = serde_json::from_str(&serde_json::to_string(&d2).unwrap()).unwrap();
        assert_eq!(back.gamma.d(), 2);
    }

    /// Random member of A_γ ⋊ Λ_γ: random lamp, corrected on one point per coset in E.
    fn random_member(d: &SubgroupDatum, rng: &mut ChaCha8Rng, with_shift: bool) -> WreathElement {
        let h = d.base_subgroup().unwrap();
        let n = h.modulus() as i64;
        let mut entries = Vec::new();
        for _ in 0..rng.gen_range(0..6) {
            let pos = rng.gen_range(-3 * n..3 * n);
            let v: Vec<BigInt> = (0..d.d).map(|_| rng.gen_range(-5i64..6).into()).collect();
            entries.push((BaseElement::from_i64s(&[pos]), v));
        }
        let lamp = crate::wreath::LampConfig::from_entries(d.d, entries).unwrap();
        let x = WreathElement::new(lamp, BaseElement::identity(1)).unwrap();
        let sums = d.coset_sums(&h, &x).unwrap();
        let mut fixed = x.clone();
        for q in &d.residues {
            if let Some(v) = sums.get(q) {
                let p = BigInt::from(d.p);
                let corr: Vec<BigInt> = v.iter().map(|c| -c.mod_floor(&p)).collect();
                fixed = fixed
                    .multiply(&WreathElement::lamp_at(q.lift(), corr).unwrap())
                    .unwrap();
            }
        }
        let shift = if with_shift {
            rng.gen_range(-3i64..4) * n
        } else {
            0
        };
        fixed
            .multiply(&WreathElement::shift_by(d.d, BaseElement::from_i64s(&[shift])))
            .unwrap()
    }

    #[test]
    fn lamp_subgroup_is_invariant_under_base_subgroup() {
        let gammas = [el("{(0):(1)};(0)"), el("{(0):(1),(1):(-1)};(2)"), el("{};(1)")];
        let data = forge_window(&gammas, &EpsilonMode::Fixed(ratio(1, 2))).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in &data {
            let n = d.base_subgroup().unwrap().modulus() as i64;
            for _ in 0..200 {
                let x = random_member(d, &mut rng, false);
                assert!(d.contains(&x).unwrap());
                let lam = BaseElement::from_i64s(&[rng.gen_range(-4i64..5) * n]);
                let moved = WreathElement::new(
                    x.lamp().translate(&lam).unwrap(),
                    BaseElement::identity(1),
                )
                .unwrap();
                assert!(d.contains(&moved).unwrap());
            }
        }
    }

    proptest! {
        #[test]
        fn contains_is_a_subgroup_predicate(seed in any::<u64>()) {
            let d = forge(&el("{(0):(1),(1):(2)};(1)"), 5, &ratio(1, 2)).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_member(&d, &mut rng, true);
            let b = random_member(&d, &mut rng, true);
            prop_assert!(d.contains(&a).unwrap());
            prop_assert!(d.contains(&a.multiply(&b).unwrap()).unwrap());
            prop_assert!(d.contains(&a.invert()).unwrap());
        }
    }
}
