//! Certificate for the allostery criterion on a finite window of nontrivial
//! elements: each γ lies outside its subgroup Γ_γ, the lamp group at the
//! origin fixes at least a (1 − ε_γ) fraction of Γ/Γ_γ, primes are pairwise
//! distinct, and the window stage is transitive with y_F moved by every γ.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::dynamics::{level_s_fixed_fraction, StabilizerWitness, TransitivityReport, WindowSystem};
use crate::error::{Error, Result};
use crate::exact::{product, serde_bigint, serde_rational, serde_rational_opt};
use crate::forge::{forge_window, SubgroupDatum};
use crate::wreath::WreathElement;

use super::{Kind, VERSION};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GammaRecord {
    pub gamma: WreathElement,
    pub p: u64,
    #[serde(with = "serde_rational")]
    pub epsilon: BigRational,
    #[serde(with = "serde_bigint")]
    pub index: BigInt,
    pub datum_violations: Vec<String>,
    /// γ ∉ Γ_γ by the membership predicate.
    pub gamma_excluded: bool,
    /// γ moves the identity coset in the coset encoding.
    pub gamma_moves_identity: bool,
    #[serde(with = "serde_rational")]
    pub fixed_fraction: BigRational,
    #[serde(with = "serde_rational_opt")]
    pub fixed_fraction_brute: Option<BigRational>,
    #[serde(with = "serde_rational")]
    pub required: BigRational,
    pub meets_required: bool,
}

impl GammaRecord {
    pub fn passed(&self) -> bool {
        self.datum_violations.is_empty()
            && self.gamma_excluded
            && self.gamma_moves_identity
            && self.meets_required
            && self
                .fixed_fraction_brute
                .as_ref()
                .is_none_or(|b| *b == self.fixed_fraction)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriterionCertificate {
    pub kind: Kind,
    pub v: u32,
    pub d: usize,
    pub m: usize,
    pub budget_states: u64,
    pub stabilizer_radius: usize,
    pub window: Vec<SubgroupDatum>,
    pub records: Vec<GammaRecord>,
    pub primes_distinct: bool,
    #[serde(with = "serde_rational")]
    pub epsilon_product: BigRational,
    #[serde(with = "serde_rational")]
    pub window_fixed_fraction: BigRational,
    #[serde(with = "serde_rational_opt")]
    pub window_fixed_fraction_brute: Option<BigRational>,
    pub window_meets_product: bool,
    pub stabilizer: Option<StabilizerWitness>,
    pub transitivity: Option<TransitivityReport>,
    pub notes: Vec<String>,
    pub partial: bool,
    pub valid: bool,
}

/// Forges the window for `gammas` under the configured ε mode and certifies it.
pub fn verify_criterion(gammas: &[WreathElement], cfg: &RunConfig) -> Result<CriterionCertificate> {
    if gammas.iter().any(WreathElement::is_identity) {
        return Err(Error::IdentityGamma);
    }
    let data = forge_window(gammas, &cfg.epsilon)?;
    certify(data, cfg)
}

/// Checks already-forged data; the data need not come from [`forge_window`].
pub fn certify(data: Vec<SubgroupDatum>, cfg: &RunConfig) -> Result<CriterionCertificate> {
    let (d, m) = data.first().map(|x| (x.d, x.m)).unwrap_or((cfg.d, cfg.m));
    let window = if data.is_empty() {
        WindowSystem::trivial(d, m)
    } else {
        WindowSystem::new_unchecked(data.clone())?
    };
    let budget = cfg.budget_states;
    let mut notes = Vec::new();
    let mut partial = false;

    let mut records = Vec::with_capacity(data.len());
    for level in window.levels() {
        let datum = level.datum();
        let fixed_fraction = level_s_fixed_fraction(level);
        let fixed_fraction_brute = match window_of(level.datum())?.s_fixed_count_brute(budget) {
            Ok(n) => Some(BigRational::new(BigInt::from(n), level.index())),
            Err(Error::BudgetExceeded { .. }) => None,
            Err(e) => return Err(e),
        };
        let required = BigRational::one() - &datum.epsilon;
        let moves = level.act(&datum.gamma, &level.identity_state())? != level.identity_state();
        records.push(GammaRecord {
            gamma: datum.gamma.clone(),
            p: datum.p,
            epsilon: datum.epsilon.clone(),
            index: datum.index(),
            datum_violations: datum.violations(),
            gamma_excluded: !datum.contains(&datum.gamma)?,
            gamma_moves_identity: moves,
            meets_required: fixed_fraction >= required,
            fixed_fraction,
            fixed_fraction_brute,
            required,
        });
    }

    let primes_distinct = window.has_distinct_primes();
    let complements: Vec<BigRational> = data
        .iter()
        .map(|x| BigRational::one() - &x.epsilon)
        .collect();
    let epsilon_product = product(&complements);
    let window_fixed_fraction = window.s_fixed_fraction();
    let window_fixed_fraction_brute = match window.s_fixed_count_brute(budget) {
        Ok(n) => Some(window.measure().of_count(n)),
        Err(Error::BudgetExceeded { size, .. }) => {
            notes.push(format!(
                "window brute-force count skipped: {size} states exceed budget {budget}"
            ));
            None
        }
        Err(e) => return Err(e),
    };
    let window_meets_product =
        window_fixed_fraction >= epsilon_product && epsilon_product > BigRational::zero();

    let stabilizer = match window.stabilizer_witness(cfg.stabilizer_radius, cfg.budget_word_length) {
        Ok(s) => Some(s),
        Err(e @ Error::BudgetExceeded { .. }) => {
            partial = true;
            notes.push(format!("stabilizer witness skipped: {e}"));
            None
        }
        Err(e) => return Err(e),
    };

    let transitivity = match window.is_transitive(budget) {
        Ok(t) => Some(t),
        Err(e @ Error::BudgetExceeded { .. }) => {
            partial = true;
            notes.push(format!("transitivity undecided: {e}"));
            None
        }
        Err(e) => return Err(e),
    };

    let mut cert = CriterionCertificate {
        kind: Kind::Criterion,
        v: VERSION,
        d,
        m,
        budget_states: budget,
        stabilizer_radius: cfg.stabilizer_radius,
        window: data,
        records,
        primes_distinct,
        epsilon_product,
        window_fixed_fraction,
        window_fixed_fraction_brute,
        window_meets_product,
        stabilizer,
        transitivity,
        notes,
        partial,
        valid: false,
    };
    cert.valid = cert.checks_pass();
    Ok(cert)
}

fn window_of(datum: &SubgroupDatum) -> Result<WindowSystem> {
    WindowSystem::new(vec![datum.clone()])
}

impl CriterionCertificate {
    /// Verdict implied by the recorded checks.
    pub fn checks_pass(&self) -> bool {
        !self.partial
            && self.primes_distinct
            && self.records.iter().all(GammaRecord::passed)
            && self.window_meets_product
            && self
                .window_fixed_fraction_brute
                .as_ref()
                .is_none_or(|b| *b == self.window_fixed_fraction)
            && self.stabilizer.as_ref().is_some_and(|s| s.passed)
            && self.transitivity.as_ref().is_some_and(|t| t.transitive)
    }

    pub fn gammas(&self) -> Vec<WreathElement> {
        self.window.iter().map(|d| d.gamma.clone()).collect()
    }

    /// Re-derives every recorded quantity from the serialized window alone,
    /// using the membership predicate and the index formulas rather than the
    /// coset encoding where possible, and reports the first disagreement.
    pub fn reverify(&self) -> Result<bool> {
        if self.kind != Kind::Criterion || self.v != VERSION {
            return Err(Error::InvalidCertificate("not a v1 criterion certificate".into()));
        }
        if self.records.len() != self.window.len() {
            return Err(Error::InvalidCertificate("record count differs from window".into()));
        }
        let mismatch = |what: String| Err(Error::InvalidCertificate(format!("{what} disagrees")));
        let mut primes = HashSet::new();
        let mut complements = Vec::new();
        let mut stage = BigRational::one();
        for (datum, rec) in self.window.iter().zip(&self.records) {
            primes.insert(datum.p);
            if rec.gamma != datum.gamma || rec.p != datum.p || rec.epsilon != datum.epsilon {
                return mismatch(format!("record for {}", datum.gamma));
            }
            if rec.index != datum.index() {
                return mismatch(format!("index of {}", datum.gamma));
            }
            if rec.datum_violations != datum.violations() {
                return mismatch(format!("invariants of {}", datum.gamma));
            }
            if rec.gamma_excluded == datum.contains(&datum.gamma)? {
                return mismatch(format!("membership of {}", datum.gamma));
            }
            // (p^{km} - l) / p^{km}, straight from the datum
            let base = datum.base_index();
            let frac = BigRational::new(&base - BigInt::from(datum.l), base);
            if rec.fixed_fraction != frac {
                return mismatch(format!("fixed fraction of {}", datum.gamma));
            }
            let required = BigRational::one() - &datum.epsilon;
            if rec.required != required || rec.meets_required != (frac >= required) {
                return mismatch(format!("bound check of {}", datum.gamma));
            }
            complements.push(required);
            stage *= frac;
        }
        let product = product(&complements);
        if self.primes_distinct != (primes.len() == self.window.len()) {
            return mismatch("prime distinctness".into());
        }
        if self.epsilon_product != product || self.window_fixed_fraction != stage {
            return mismatch("window fractions".into());
        }
        if self.window_meets_product != (stage >= product && product > BigRational::zero()) {
            return mismatch("window bound".into());
        }
        let cfg = RunConfig {
            d: self.d,
            m: self.m,
            budget_states: self.budget_states,
            stabilizer_radius: self.stabilizer_radius,
            budget_word_length: self.stabilizer_radius.max(1),
            ..RunConfig::default()
        };
        let again = certify(self.window.clone(), &cfg)?;
        if again.records != self.records {
            return mismatch("per-gamma brute-force checks".into());
        }
        if again.window_fixed_fraction_brute != self.window_fixed_fraction_brute {
            return mismatch("window brute-force count".into());
        }
        if again.stabilizer != self.stabilizer {
            return mismatch("stabilizer witness".into());
        }
        if again.transitivity != self.transitivity {
            return mismatch("transitivity".into());
        }
        if again.partial != self.partial || self.valid != self.checks_pass() {
            return mismatch("verdict".into());
        }
        Ok(self.valid)
    }
}
