use std::collections::HashSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::product;
use crate::forge::SubgroupDatum;
use crate::wreath::{GeneratorSet, WreathElement};

use super::level::{FiniteLevelSystem, LevelAction};
use super::measure::UniformMeasure;
use super::orbit::{FiniteAction, Orbit};
use super::state::WindowState;

/// A finite stage X_F = Γ / ⋂_{γ∈F} Γ_γ, realized as the diagonal action on
/// the product of the level coset spaces.
#[derive(Debug, Clone)]
pub struct WindowSystem {
    levels: Vec<FiniteLevelSystem>,
    generators: GeneratorSet,
}

impl WindowSystem {
    /// Requires pairwise distinct primes.
    pub fn new(data: Vec<SubgroupDatum>) -> Result<Self> {
        let mut seen = HashSet::new();
        for d in &data {
            if !seen.insert(d.p) {
                return Err(Error::DuplicatePrime(d.p));
            }
        }
        Self::new_unchecked(data)
    }

    /// Skips the distinct-prime requirement; used for negative controls.
    pub fn new_unchecked(data: Vec<SubgroupDatum>) -> Result<Self> {
        let (d, m) = data.first().map(|x| (x.d, x.m)).unwrap_or((1, 1));
        let mut levels = Vec::with_capacity(data.len());
        for datum in data {
            crate::base::check_rank(d, datum.d)?;
            crate::base::check_rank(m, datum.m)?;
            levels.push(FiniteLevelSystem::new(datum)?);
        }
        Ok(WindowSystem {
            levels,
            generators: GeneratorSet::new(d, m),
        })
    }

    /// Empty window with explicit ranks: the one-point stage.
    pub fn trivial(d: usize, m: usize) -> Self {
        WindowSystem {
            levels: Vec::new(),
            generators: GeneratorSet::new(d, m),
        }
    }

    pub fn levels(&self) -> &[FiniteLevelSystem] {
        &self.levels
    }

    pub fn data(&self) -> Vec<SubgroupDatum> {
        self.levels.iter().map(|l| l.datum().clone()).collect()
    }

    pub fn generators(&self) -> &GeneratorSet {
        &self.generators
    }

    pub fn has_distinct_primes(&self) -> bool {
        let mut seen = HashSet::new();
        self.levels.iter().all(|l| seen.insert(l.datum().p))
    }

    /// |X_F|, the product of the level indices.
    pub fn size(&self) -> BigInt {
        self.levels.iter().map(|l| l.index()).product()
    }

    pub fn size_within(&self, budget: u64) -> Result<u64> {
        match self.size().to_u64() {
            Some(n) if n <= budget => Ok(n),
            _ => Err(Error::budget("window states", self.size(), budget)),
        }
    }

    pub fn measure(&self) -> UniformMeasure {
        UniformMeasure::new(self.size())
    }

    /// The identity-coset thread y_F.
    pub fn identity_state(&self) -> WindowState {
        WindowState(self.levels.iter().map(|l| l.identity_state()).collect())
    }

    pub fn act(&self, x: &WreathElement, s: &WindowState) -> Result<WindowState> {
        self.levels
            .iter()
            .zip(&s.0)
            .map(|(l, st)| l.act(x, st))
            .collect::<Result<Vec<_>>>()
            .map(WindowState)
    }

    fn radices(&self) -> Vec<u64> {
        self.levels
            .iter()
            .map(|l| l.index().to_u64().unwrap_or(u64::MAX))
            .collect()
    }

    /// Mixed-radix index, first level most significant.
    pub fn encode(&self, s: &WindowState) -> u64 {
        self.levels
            .iter()
            .zip(&s.0)
            .fold(0u64, |acc, (l, st)| acc * l.index().to_u64().unwrap() + l.encode(st))
    }

    pub fn decode(&self, idx: u64) -> WindowState {
        let parts = split_index(idx, &self.radices());
        WindowState(
            self.levels
                .iter()
                .zip(parts)
                .map(|(l, i)| l.decode(i))
                .collect(),
        )
    }

    /// Parses and range-checks a state in text form, returning its index.
    pub fn parse_state(&self, text: &str) -> Result<u64> {
        let s = WindowState::parse(text)?;
        self.check_state(&s)?;
        Ok(self.encode(&s))
    }

    pub fn check_state(&self, s: &WindowState) -> Result<()> {
        if s.0.len() != self.levels.len() {
            return Err(Error::InvalidStateSet(format!(
                "{s} has {} components, window has {} levels",
                s.0.len(),
                self.levels.len()
            )));
        }
        self.levels
            .iter()
            .zip(&s.0)
            .try_for_each(|(l, st)| l.check_state(st))
    }

    pub fn state_text(&self, idx: u64) -> String {
        self.decode(idx).to_string()
    }

    pub fn action(&self, budget: u64) -> Result<WindowAction> {
        let size = self.size_within(budget)?;
        let levels = self
            .levels
            .iter()
            .map(|l| l.action(budget))
            .collect::<Result<Vec<_>>>()?;
        Ok(WindowAction {
            levels,
            radices: self.radices(),
            size,
            generator_count: self.generators.len(),
        })
    }

    pub fn enumerate_states(&self, budget: u64) -> Result<Vec<WindowState>> {
        let n = self.size_within(budget)?;
        Ok((0..n).map(|i| self.decode(i)).collect())
    }

    /// Decides transitivity of Γ ↷ X_F. Within budget this is a BFS from y_F
    /// over the product. Otherwise every level is searched separately and the
    /// product follows from pairwise coprime level indices: [Γ : ⋂Γ_γ] is
    /// divisible by each index, hence by their product, which bounds it.
    pub fn is_transitive(&self, budget: u64) -> Result<TransitivityReport> {
        if let Ok(action) = self.action(budget) {
            let start = self.encode(&self.identity_state());
            let all: Vec<usize> = (0..action.generator_count()).collect();
            let orbit = Orbit::compute(&action, start, &all);
            return Ok(TransitivityReport {
                transitive: orbit.len() as u64 == action.size(),
                method: TransitivityMethod::ProductSearch,
                states: self.size().to_string(),
                orbit_size: Some(orbit.len() as u64),
                level_orbits: Vec::new(),
            });
        }
        if !self.has_distinct_primes() {
            return Err(Error::budget("window states", self.size(), budget));
        }
        let mut level_orbits = Vec::with_capacity(self.levels.len());
        let mut all_transitive = true;
        for level in &self.levels {
            let action = level.action(budget)?;
            let start = level.encode(&level.identity_state());
            let gens: Vec<usize> = (0..action.generator_count()).collect();
            let orbit = Orbit::compute(&action, start, &gens);
            all_transitive &= orbit.len() as u64 == action.size();
            level_orbits.push(orbit.len() as u64);
        }
        Ok(TransitivityReport {
            transitive: all_transitive,
            method: TransitivityMethod::CoprimeLevels,
            states: self.size().to_string(),
            orbit_size: None,
            level_orbits,
        })
    }

    /// Closed-form count of states fixed by `x`: the product over levels.
    pub fn fixed_count(&self, x: &WreathElement) -> Result<BigInt> {
        self.levels.iter().map(|l| l.fixed_count(x)).product()
    }

    pub fn fixed_fraction(&self, x: &WreathElement) -> Result<BigRational> {
        Ok(self.measure().of_count(self.fixed_count(x)?))
    }

    /// Brute-force fixed set of `x` on the product.
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

    /// Fraction of X_F fixed by every s_i, i.e. by the lamp group S at the
    /// origin: ∏ (1 − l / p^{km}) over the levels.
    pub fn s_fixed_fraction(&self) -> BigRational {
        let factors: Vec<BigRational> = self.levels.iter().map(level_s_fixed_fraction).collect();
        product(&factors)
    }

    /// Brute-force count of states fixed by all of s_1, …, s_d.
    pub fn s_fixed_count_brute(&self, budget: u64) -> Result<u64> {
        let action = self.action(budget)?;
        let lamp = self.generators.lamp_generators();
        Ok((0..action.size())
            .filter(|&x| lamp.iter().all(|&g| action.apply_generator(g, x) == x))
            .count() as u64)
    }

    /// Verifies that every γ of the window moves y_F, and classifies the
    /// nontrivial elements of the ball of the given radius.
    pub fn stabilizer_witness(&self, radius: usize, max_radius: usize) -> Result<StabilizerWitness> {
        let y = self.identity_state();
        let mut gammas = Vec::with_capacity(self.levels.len());
        for level in &self.levels {
            let g = &level.datum().gamma;
            gammas.push(GammaMove {
                gamma: g.clone(),
                moves: self.act(g, &y)? != y,
            });
        }
        let identity = WreathElement::identity(self.generators.d(), self.generators.m());
        let identity_fixes = self.act(&identity, &y)? == y;
        let mut movers = 0;
        let mut fixers = Vec::new();
        for entry in self.generators.ball(radius, max_radius)?.into_iter().skip(1) {
            if self.act(&entry.element, &y)? == y {
                fixers.push(entry.element);
            } else {
                movers += 1;
            }
        }
        let passed = identity_fixes && gammas.iter().all(|g| g.moves);
        Ok(StabilizerWitness {
            radius,
            gammas,
            identity_fixes,
            movers,
            fixers,
            passed,
        })
    }
}

pub fn level_s_fixed_fraction(level: &FiniteLevelSystem) -> BigRational {
    let d = level.datum();
    BigRational::one() - BigRational::new(BigInt::from(d.l), d.base_index())
}

pub(crate) fn split_index(mut idx: u64, radices: &[u64]) -> Vec<u64> {
    let mut parts = vec![0; radices.len()];
    for (slot, &r) in parts.iter_mut().zip(radices).rev() {
        *slot = idx % r;
        idx /= r;
    }
    parts
}

/// Diagonal generator action on a window, through per-level tables.
#[derive(Debug, Clone)]
pub struct WindowAction {
    levels: Vec<LevelAction>,
    radices: Vec<u64>,
    size: u64,
    generator_count: usize,
}

impl FiniteAction for WindowAction {
    fn size(&self) -> u64 {
        self.size
    }

    fn generator_count(&self) -> usize {
        self.generator_count
    }

    fn apply_generator(&self, g: usize, x: u64) -> u64 {
        let mut rest = x;
        let mut out = 0;
        let mut scale = 1;
        for (level, &r) in self.levels.iter().zip(&self.radices).rev() {
            let part = rest % r;
            rest /= r;
            out += level.apply_generator(g, part) * scale;
            scale *= r;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransitivityMethod {
    ProductSearch,
    CoprimeLevels,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitivityReport {
    pub transitive: bool,
    pub method: TransitivityMethod,
    pub states: String,
    pub orbit_size: Option<u64>,
    pub level_orbits: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GammaMove {
    pub gamma: WreathElement,
    pub moves: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilizerWitness {
    pub radius: usize,
    pub gammas: Vec<GammaMove>,
    pub identity_fixes: bool,
    pub movers: usize,
    pub fixers: Vec<WreathElement>,
    pub passed: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ratio;
    use crate::forge::{forge, forge_window, EpsilonMode};

    fn el(t: &str) -> WreathElement {
        t.parse().unwrap()
    }

    fn datum(g: &str, p: u64) -> SubgroupDatum {
        forge(&el(g), p, &ratio(1, 2)).unwrap()
    }

    #[test]
    fn product_of_32_and_9_is_transitive() {
        let w = WindowSystem::new(vec![datum("{(0):(1)};(0)", 2), datum("{};(1)", 3)]).unwrap();
        assert_eq!(w.size(), BigInt::from(288));
        let r = w.is_transitive(1_000).unwrap();
        assert!(r.transitive);
        assert_eq!(r.method, TransitivityMethod::ProductSearch);
        assert_eq!(r.orbit_size, Some(288));
        // coprime route agrees
        let r = w.is_transitive(100).unwrap();
        assert!(r.transitive);
        assert_eq!(r.method, TransitivityMethod::CoprimeLevels);
        assert_eq!(r.level_orbits, vec![32, 9]);
    }

    #[test]
    fn duplicate_primes_break_transitivity() {
        let data = vec![datum("{(0):(1)};(0)", 2), datum("{};(1)", 2)];
        assert_eq!(WindowSystem::new(data.clone()).unwrap_err(), Error::DuplicatePrime(2));
        let w = WindowSystem::new_unchecked(data).unwrap();
        let r = w.is_transitive(10_000).unwrap();
        assert!(!r.transitive);
        assert!(r.orbit_size.unwrap() < 256);
        assert!(matches!(w.is_transitive(10), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn singleton_and_empty_windows() {
        let w = WindowSystem::new(vec![datum("{};(1)", 3)]).unwrap();
        assert!(w.is_transitive(100).unwrap().transitive);
        let e = WindowSystem::trivial(1, 1);
        assert_eq!(e.size(), BigInt::one());
        assert!(e.is_transitive(1).unwrap().transitive);
        assert_eq!(e.s_fixed_fraction(), BigRational::one());
    }

    #[test]
    fn s_fixed_fraction_product_rule() {
        let a = WindowSystem::new(vec![datum("{(0):(1)};(0)", 2)]).unwrap();
        assert_eq!(a.s_fixed_fraction(), ratio(3, 4));
        assert_eq!(a.s_fixed_count_brute(100).unwrap(), 24);
        let w = WindowSystem::new(vec![datum("{(0):(1)};(0)", 2), datum("{};(1)", 3)]).unwrap();
        assert_eq!(w.s_fixed_fraction(), ratio(1, 2));
        assert_eq!(w.s_fixed_count_brute(1_000).unwrap(), 144);
        let s1 = el("{(0):(1)};(0)");
        assert_eq!(w.fixed_states(&s1, 1_000).unwrap().len(), 144);
        assert_eq!(w.fixed_count(&s1).unwrap(), BigInt::from(144));
    }

    #[test]
    fn encode_decode_and_text() {
        let w = WindowSystem::new(vec![datum("{(0):(1)};(0)", 2), datum("{};(1)", 3)]).unwrap();
        for i in [0u64, 1, 100, 287] {
            let s = w.decode(i);
            assert_eq!(w.encode(&s), i);
            assert_eq!(w.parse_state(&s.to_string()).unwrap(), i);
        }
        assert!(w.parse_state("(0)|((0),(0))").is_err());
        assert!(w.parse_state("(9)|((0),(0))/(0)|((0))").is_err());
    }

    #[test]
    fn window_action_matches_element_action() {
        let w = WindowSystem::new(vec![datum("{(0):(1)};(0)", 2), datum("{};(1)", 3)]).unwrap();
        let action = w.action(1_000).unwrap();
        for x in 0..action.size() {
            let s = w.decode(x);
            for (g, gen) in w.generators().elements().iter().enumerate() {
                assert_eq!(action.apply_generator(g, x), w.encode(&w.act(gen, &s).unwrap()));
            }
        }
    }

    #[test]
    fn stabilizer_witness_on_three_levels() {
        let gens = GeneratorSet::new(1, 1);
        let gammas: Vec<_> = gens.ball(1, 3).unwrap().into_iter().skip(1).take(3).map(|e| e.element).collect();
        let data = forge_window(&gammas, &EpsilonMode::Fixed(ratio(1, 2))).unwrap();
        let w = WindowSystem::new(data).unwrap();
        let r = w.stabilizer_witness(2, 3).unwrap();
        assert!(r.passed);
        assert!(r.identity_fixes);
        assert!(r.gammas.iter().all(|g| g.moves));
        let ball = gens.ball(2, 3).unwrap();
        assert_eq!(r.movers + r.fixers.len(), ball.len() - 1);
        // brute-force recount
        let y = w.identity_state();
        let fixers = ball[1..]
            .iter()
            .filter(|e| w.act(&e.element, &y).unwrap() == y)
            .count();
        assert_eq!(fixers, r.fixers.len());
    }
}
