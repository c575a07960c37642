use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;

use crate::base::{add_mod, check_rank, BaseResidue, CongruenceSubgroup};
use crate::error::{Error, Result};
use crate::forge::SubgroupDatum;
use crate::wreath::{GeneratorSet, LampConfig, WreathElement};

use super::orbit::FiniteAction;
use super::state::CosetState;

/// The left coset action Γ ↷ Γ/Γ_γ for one forged datum.
#[derive(Debug, Clone)]
pub struct FiniteLevelSystem {
    datum: SubgroupDatum,
    subgroup: CongruenceSubgroup,
    slot_of: HashMap<BaseResidue, usize>,
    size: Option<u64>,
    generators: GeneratorSet,
    tables: OnceLock<Arc<Vec<Vec<u32>>>>,
}

impl FiniteLevelSystem {
    pub fn new(datum: SubgroupDatum) -> Result<Self> {
        let subgroup = datum.base_subgroup()?;
        let slot_of = datum
            .residues
            .iter()
            .enumerate()
            .map(|(i, q)| (q.clone(), i))
            .collect();
        let size = datum.index().to_u64();
        let generators = GeneratorSet::new(datum.d, datum.m);
        Ok(FiniteLevelSystem {
            datum,
            subgroup,
            slot_of,
            size,
            generators,
            tables: OnceLock::new(),
        })
    }

    pub fn datum(&self) -> &SubgroupDatum {
        &self.datum
    }

    pub fn subgroup(&self) -> &CongruenceSubgroup {
        &self.subgroup
    }

    pub fn generators(&self) -> &GeneratorSet {
        &self.generators
    }

    /// Number of states, [Γ : Γ_γ].
    pub fn index(&self) -> BigInt {
        self.datum.index()
    }

    pub fn size_within(&self, budget: u64) -> Result<u64> {
        match self.size {
            Some(n) if n <= budget => Ok(n),
            _ => Err(Error::budget("level states", self.index(), budget)),
        }
    }

    /// The coset Γ_γ itself.
    pub fn identity_state(&self) -> CosetState {
        CosetState {
            base: self.subgroup.zero(),
            sums: vec![vec![0; self.datum.d]; self.datum.l],
        }
    }

    pub fn check_state(&self, s: &CosetState) -> Result<()> {
        let n = self.subgroup.modulus();
        let p = self.datum.p;
        let ok = s.base.0.len() == self.datum.m
            && s.base.0.iter().all(|&c| c < n)
            && s.sums.len() == self.datum.l
            && s.sums
                .iter()
                .all(|v| v.len() == self.datum.d && v.iter().all(|&c| c < p));
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidStateSet(format!(
                "{s} is not a state of the level for p = {p}"
            )))
        }
    }

    /// Left action of x = (g, δ): base ↦ δ + base and, with the new base,
    /// sums[q] ↦ sums[q] + Σ_{λ ∈ base + q} g(λ) mod p.
    pub fn act(&self, x: &WreathElement, s: &CosetState) -> Result<CosetState> {
        check_rank(self.datum.d, x.d())?;
        check_rank(self.datum.m, x.m())?;
        let h = &self.subgroup;
        let base = h.add(&h.reduce(x.shift())?, &s.base);
        let minus_base = h.neg(&base);
        let mut sums = s.sums.clone();
        let p = BigInt::from(self.datum.p);
        for (pos, v) in x.lamp().iter() {
            let q = h.add(&h.reduce(pos)?, &minus_base);
            if let Some(&slot) = self.slot_of.get(&q) {
                for (acc, c) in sums[slot].iter_mut().zip(v) {
                    let c = c.mod_floor(&p).to_u64().expect("reduced mod p");
                    *acc = add_mod(*acc, c, self.datum.p);
                }
            }
        }
        Ok(CosetState { base, sums })
    }

    /// Mixed-radix index; the order agrees with the canonical order on states.
    pub fn encode(&self, s: &CosetState) -> u64 {
        let n = self.subgroup.modulus();
        let p = self.datum.p;
        let mut idx = 0u64;
        for &c in &s.base.0 {
            idx = idx * n + c;
        }
        for v in &s.sums {
            for &c in v {
                idx = idx * p + c;
            }
        }
        idx
    }

    pub fn decode(&self, mut idx: u64) -> CosetState {
        let n = self.subgroup.modulus();
        let p = self.datum.p;
        let mut sums = vec![vec![0; self.datum.d]; self.datum.l];
        for v in sums.iter_mut().rev() {
            for c in v.iter_mut().rev() {
                *c = idx % p;
                idx /= p;
            }
        }
        let mut base = vec![0; self.datum.m];
        for c in base.iter_mut().rev() {
            *c = idx % n;
            idx /= n;
        }
        CosetState {
            base: BaseResidue(base),
            sums,
        }
    }

    /// Applies generator `g` of the standard set directly on digits.
    fn apply_generator_state(&self, g: usize, s: &CosetState) -> CosetState {
        let d = self.datum.d;
        let mut out = s.clone();
        if g < 2 * d {
            // s_i^{±1} lives at the origin: it touches the slot q = -base when q ∈ E
            let i = g / 2;
            let q = self.subgroup.neg(&s.base);
            if let Some(&slot) = self.slot_of.get(&q) {
                let p = self.datum.p;
                let c = &mut out.sums[slot][i];
                *c = if g.is_multiple_of(2) { (*c + 1) % p } else { (*c + p - 1) % p };
            }
        } else {
            let j = (g - 2 * d) / 2;
            let n = self.subgroup.modulus();
            let c = &mut out.base.0[j];
            *c = if g.is_multiple_of(2) { (*c + 1) % n } else { (*c + n - 1) % n };
        }
        out
    }

    /// Per-generator permutation tables, built once.
    pub fn tables(&self, budget: u64) -> Result<Arc<Vec<Vec<u32>>>> {
        if let Some(t) = self.tables.get() {
            return Ok(t.clone());
        }
        let size = self.size_within(budget.min(u32::MAX as u64))?;
        let tables: Vec<Vec<u32>> = (0..self.generators.len())
            .map(|g| {
                (0..size)
                    .map(|x| self.encode(&self.apply_generator_state(g, &self.decode(x))) as u32)
                    .collect()
            })
            .collect();
        Ok(self.tables.get_or_init(|| Arc::new(tables)).clone())
    }

    pub fn action(&self, budget: u64) -> Result<LevelAction> {
        Ok(LevelAction {
            tables: self.tables(budget)?,
            size: self.size_within(budget)?,
        })
    }

    pub fn enumerate_states(&self, budget: u64) -> Result<Vec<CosetState>> {
        let n = self.size_within(budget)?;
        Ok((0..n).map(|i| self.decode(i)).collect())
    }

    /// An element of Γ whose coset is `s`: shift = base, and sums[q] placed at base + q.
    pub fn representative(&self, s: &CosetState) -> Result<WreathElement> {
        let base = s.base.lift();
        let entries = self
            .datum
            .residues
            .iter()
            .zip(&s.sums)
            .map(|(q, v)| {
                let pos = base.compose(&q.lift())?;
                Ok((pos, v.iter().map(|&c| BigInt::from(c)).collect()))
            })
            .collect::<Result<Vec<_>>>()?;
        let lamp = LampConfig::from_entries(self.datum.d, entries)?;
        WreathElement::new(lamp, base)
    }

    /// Closed-form number of states fixed by x = (g, δ): zero unless δ ∈ Λ_γ;
    /// otherwise a base is fixed iff no translated coset `base + q` (q ∈ E)
    /// carries a lamp sum outside (pZ)^d, and the fiber p^{ld} is free.
    pub fn fixed_count(&self, x: &WreathElement) -> Result<BigInt> {
        check_rank(self.datum.d, x.d())?;
        let h = &self.subgroup;
        if !h.in_kernel(x.shift())? {
            return Ok(BigInt::from(0));
        }
        let p = BigInt::from(self.datum.p);
        let mut sums: HashMap<BaseResidue, Vec<BigInt>> = HashMap::new();
        for (pos, v) in x.lamp().iter() {
            let slot = sums
                .entry(h.reduce(pos)?)
                .or_insert_with(|| vec![BigInt::from(0); self.datum.d]);
            for (a, c) in slot.iter_mut().zip(v) {
                *a += c;
            }
        }
        let mut bad = BTreeSet::new();
        for (r, v) in &sums {
            if v.iter().any(|c| !c.is_multiple_of(&p)) {
                for q in &self.datum.residues {
                    bad.insert(h.add(r, &h.neg(q)));
                }
            }
        }
        let free_bases = self.datum.base_index() - BigInt::from(bad.len());
        let fiber = num_traits::pow(p, self.datum.l * self.datum.d);
        Ok(free_bases * fiber)
    }

    /// Brute-force fixed set of x by acting on every state.
    pub fn fixed_states(&self, x: &WreathElement, budget: u64) -> Result<Vec<u64>> {
        let n = self.size_within(budget)?;
        let mut out = Vec::new();
        for i in 0..n {
            let s = self.decode(i);
            if self.act(x, &s)? == s {
                out.push(i);
            }
        }
        Ok(out)
    }
}

/// Table-driven generator action on one level.
#[derive(Debug, Clone)]
pub struct LevelAction {
    tables: Arc<Vec<Vec<u32>>>,
    size: u64,
}

impl FiniteAction for LevelAction {
    fn size(&self) -> u64 {
        self.size
    }

    fn generator_count(&self) -> usize {
        self.tables.len()
    }

    fn apply_generator(&self, g: usize, x: u64) -> u64 {
        self.tables[g][x as usize] as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ratio;
    use crate::forge::forge;

    fn el(t: &str) -> WreathElement {
        t.parse().unwrap()
    }

    fn level(gamma: &str, p: u64) -> FiniteLevelSystem {
        FiniteLevelSystem::new(forge(&el(gamma), p, &ratio(1, 2)).unwrap()).unwrap()
    }

    #[test]
    fn shift_and_lamp_on_identity_state() {
        let sys = level("{(0):(1)};(0)", 2);
        let id = sys.identity_state();
        let t = sys.act(&el("{};(1)"), &id).unwrap();
        assert_eq!(t.to_string(), "(1)|((0),(0))");
        let s = sys.act(&el("{(0):(1)};(0)"), &id).unwrap();
        assert_eq!(s.to_string(), "(0)|((1),(0))");
        assert_ne!(sys.act(&sys.datum().gamma.clone(), &id).unwrap(), id);
    }

    #[test]
    fn lamp_generator_state_identified_by_membership_oracle() {
        // find the coset of s_1 among all 32 states using only `contains`
        let sys = level("{(0):(1)};(0)", 2);
        let s1 = el("{(0):(1)};(0)");
        let hits: Vec<_> = sys
            .enumerate_states(1000)
            .unwrap()
            .into_iter()
            .filter(|st| {
                let r = sys.representative(st).unwrap();
                sys.datum().contains(&r.invert().multiply(&s1).unwrap()).unwrap()
            })
            .collect();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].to_string(), "(0)|((1),(0))");
    }

    #[test]
    fn encoding_agrees_with_membership_oracle() {
        // two representatives share a state iff r1^{-1} r2 ∈ Γ_γ
        for (g, p) in [("{(0):(1)};(0)", 2), ("{};(1)", 3), ("{(0):(1),(1):(2)};(1)", 5)] {
            let sys = level(g, p);
            let states = sys.enumerate_states(10_000).unwrap();
            let reps: Vec<_> = states
                .iter()
                .map(|s| sys.representative(s).unwrap())
                .collect();
            for (i, r) in reps.iter().enumerate().step_by(7) {
                for (j, r2) in reps.iter().enumerate().step_by(5) {
                    let same = sys.datum().contains(&r.invert().multiply(r2).unwrap()).unwrap();
                    assert_eq!(same, i == j);
                }
                // action on states agrees with multiplication of representatives
                for gen in sys.generators().elements() {
                    let moved = gen.multiply(r).unwrap();
                    let target = sys.act(gen, &states[i]).unwrap();
                    let tr = sys.representative(&target).unwrap();
                    assert!(sys.datum().contains(&tr.invert().multiply(&moved).unwrap()).unwrap());
                }
            }
        }
    }

    #[test]
    fn tables_match_general_action() {
        let sys = level("{(0,0):(1,1)};(1,0)", 3);
        let action = sys.action(1 << 20).unwrap();
        for x in (0..action.size()).step_by(97) {
            let s = sys.decode(x);
            assert_eq!(sys.encode(&s), x);
            for (g, gen) in sys.generators().elements().iter().enumerate() {
                assert_eq!(
                    action.apply_generator(g, x),
                    sys.encode(&sys.act(gen, &s).unwrap())
                );
            }
        }
    }

    #[test]
    fn fixed_count_examples() {
        let sys = level("{(0):(1)};(0)", 2);
        let s1 = el("{(0):(1)};(0)");
        assert_eq!(sys.fixed_count(&s1).unwrap(), BigInt::from(24));
        assert_eq!(sys.fixed_states(&s1, 100).unwrap().len(), 24);
        let e = WreathElement::identity(1, 1);
        assert_eq!(sys.fixed_states(&e, 100).unwrap().len(), 32);
        assert_eq!(sys.fixed_count(&e).unwrap(), BigInt::from(32));
        let sys9 = level("{};(1)", 3);
        assert_eq!(sys9.fixed_states(&s1, 100).unwrap().len(), 6);
        assert_eq!(sys9.fixed_count(&s1).unwrap(), BigInt::from(6));
    }

    #[test]
    fn closed_form_fixed_count_matches_brute_force_for_general_elements() {
        let sys = level("{(0):(1),(1):(2)};(1)", 5);
        let n = sys.subgroup().modulus() as i64;
        for text in [
            "{(0):(1),(3):(4)};(0)".to_string(),
            format!("{{(0):(5)}};({n})"),
            format!("{{(1):(2),({n}):(-1)}};(0)"),
            "{(2):(3)};(1)".to_string(),
        ] {
            let x = el(&text);
            assert_eq!(
                sys.fixed_count(&x).unwrap(),
                BigInt::from(sys.fixed_states(&x, 1 << 20).unwrap().len()),
                "{text}"
            );
        }
    }

    #[test]
    fn budget_is_enforced() {
        let sys = level("{(0):(1)};(0)", 2);
        assert!(matches!(
            sys.enumerate_states(31),
            Err(Error::BudgetExceeded { .. })
        ));
        assert_eq!(sys.enumerate_states(32).unwrap().len(), 32);
    }

    #[test]
    fn state_range_checks() {
        let sys = level("{};(1)", 3);
        assert!(sys.check_state(&CosetState::parse("(2)|((2))").unwrap()).is_ok());
        assert!(sys.check_state(&CosetState::parse("(3)|((2))").unwrap()).is_err());
        assert!(sys.check_state(&CosetState::parse("(0)|((0),(0))").unwrap()).is_err());
    }
}
