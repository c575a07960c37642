//! The non-almost-finiteness report: a positive lower bound b on the measure
//! of Fix(s_1), combined with the castle inequality, rules out
//! ({s_1^{-1}}, ε)-castles for every ε ≤ b.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::dynamics::{level_s_fixed_fraction, WindowSystem};
use crate::error::{Error, Result};
use crate::exact::{parse_rational, product, rational_text, serde_bigint, serde_rational, serde_rational_opt};
use crate::forge::EpsilonMode;
use crate::wreath::WreathElement;

use super::criterion::CriterionCertificate;
use super::{Kind, VERSION};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportRow {
    pub gamma: WreathElement,
    pub p: u64,
    #[serde(with = "serde_bigint")]
    pub index: BigInt,
    #[serde(with = "serde_rational")]
    pub fixed_fraction: BigRational,
    #[serde(with = "serde_rational")]
    pub bound: BigRational,
}

/// One link of the inequality chain; `lhs` and `rhs` are exact rationals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainStep {
    pub claim: String,
    pub lhs: String,
    pub relation: String,
    pub rhs: String,
    pub holds: bool,
}

impl ChainStep {
    fn new(claim: &str, lhs: &BigRational, relation: &str, rhs: &BigRational) -> ChainStep {
        ChainStep {
            claim: claim.to_string(),
            lhs: rational_text(lhs),
            relation: relation.to_string(),
            rhs: rational_text(rhs),
            holds: compare(lhs, relation, rhs).unwrap_or(false),
        }
    }

    /// Re-evaluates the relation from the text fields.
    pub fn evaluate(&self) -> Result<bool> {
        let lhs = parse_rational(&self.lhs)?;
        let rhs = parse_rational(&self.rhs)?;
        compare(&lhs, &self.relation, &rhs)
            .ok_or_else(|| Error::InvalidCertificate(format!("unknown relation '{}'", self.relation)))
    }
}

fn compare(lhs: &BigRational, relation: &str, rhs: &BigRational) -> Option<bool> {
    Some(match relation {
        "=" => lhs == rhs,
        ">=" => lhs >= rhs,
        "<=" => lhs <= rhs,
        ">" => lhs > rhs,
        "<" => lhs < rhs,
        _ => return None,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonAfReport {
    pub kind: Kind,
    pub v: u32,
    /// `schedule` or the fixed ε as `"num/den"`.
    pub epsilon_mode: String,
    pub rows: Vec<ReportRow>,
    /// Fraction of X_F fixed by s_1, closed form.
    #[serde(with = "serde_rational")]
    pub b: BigRational,
    #[serde(with = "serde_rational_opt")]
    pub b_brute: Option<BigRational>,
    #[serde(with = "serde_rational")]
    pub epsilon_product: BigRational,
    /// Fixed fractions of the stages X_{F_1}, X_{F_2}, … for the prefixes of F.
    #[serde(with = "stage_list")]
    pub stage_fractions: Vec<BigRational>,
    pub chain: Vec<ChainStep>,
    #[serde(with = "serde_rational_opt")]
    pub limit_bound: Option<BigRational>,
    pub conclusion: String,
    pub criterion: CriterionCertificate,
    pub valid: bool,
}

mod stage_list {
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::exact::{parse_rational, rational_text};

    pub fn serialize<S: Serializer>(v: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(rational_text))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigRational>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|t| parse_rational(t).map_err(serde::de::Error::custom))
            .collect()
    }
}

fn mode_text(mode: &EpsilonMode) -> String {
    match mode {
        EpsilonMode::Schedule => "schedule".into(),
        EpsilonMode::Fixed(e) => rational_text(e),
    }
}

fn mode_from_text(text: &str) -> Result<EpsilonMode> {
    if text == "schedule" {
        Ok(EpsilonMode::Schedule)
    } else {
        parse_rational(text).map(EpsilonMode::Fixed)
    }
}

/// Assembles the report from a valid criterion certificate whose ε values
/// follow `mode`.
pub fn non_af_report(cert: &CriterionCertificate, mode: &EpsilonMode) -> Result<NonAfReport> {
    if !cert.valid {
        return Err(Error::InvalidCertificate("criterion certificate is not valid".into()));
    }
    if cert.window.is_empty() {
        return Err(Error::InvalidCertificate("the window is empty".into()));
    }
    for (i, datum) in cert.window.iter().enumerate() {
        if datum.epsilon != mode.epsilon(i) {
            return Err(Error::InvalidCertificate(format!(
                "epsilon of level {i} is {}, not {}",
                rational_text(&datum.epsilon),
                rational_text(&mode.epsilon(i))
            )));
        }
    }
    let window = WindowSystem::new(cert.window.clone())?;
    let s1 = window.generators().get(window.generators().lamp_generator(0)).clone();
    let b = window.fixed_fraction(&s1)?;
    let b_brute = match window.fixed_states(&s1, cert.budget_states) {
        Ok(v) => Some(window.measure().of_count(v.len())),
        Err(Error::BudgetExceeded { .. }) => None,
        Err(e) => return Err(e),
    };

    let rows: Vec<ReportRow> = window
        .levels()
        .iter()
        .map(|l| {
            let d = l.datum();
            ReportRow {
                gamma: d.gamma.clone(),
                p: d.p,
                index: d.index(),
                fixed_fraction: level_s_fixed_fraction(l),
                bound: BigRational::one() - &d.epsilon,
            }
        })
        .collect();
    let level_product = product(rows.iter().map(|r| &r.fixed_fraction));
    let epsilon_product = product(rows.iter().map(|r| &r.bound));
    let mut stage_fractions = Vec::with_capacity(rows.len());
    let mut acc = BigRational::one();
    for r in &rows {
        acc *= &r.fixed_fraction;
        stage_fractions.push(acc.clone());
    }
    let monotone = stage_fractions.windows(2).all(|w| w[1] <= w[0]);
    let previous = if stage_fractions.len() > 1 {
        stage_fractions[stage_fractions.len() - 2].clone()
    } else {
        BigRational::one()
    };

    let mut chain = vec![
        ChainStep::new(
            "the s_1-fixed fraction of X_F is the product of the level fractions (p^{km} - l)/p^{km}",
            &b,
            "=",
            &level_product,
        ),
        ChainStep::new(
            "each level meets 1 - eps_gamma, so the stage fraction is at least the product of the bounds",
            &b,
            ">=",
            &epsilon_product,
        ),
        ChainStep::new(
            "refining the window does not increase the fixed fraction",
            &b,
            "<=",
            &previous,
        ),
        ChainStep::new(
            "the product of the bounds is positive",
            &epsilon_product,
            ">",
            &BigRational::zero(),
        ),
    ];
    chain[2].holds &= monotone;
    if let Some(brute) = &b_brute {
        chain.push(ChainStep::new(
            "brute-force count over X_F agrees with the closed form",
            brute,
            "=",
            &b,
        ));
    }

    let limit_bound = match mode {
        EpsilonMode::Schedule => Some(BigRational::one() - BigRational::new(1.into(), 2.into())),
        EpsilonMode::Fixed(_) => None,
    };
    let conclusion = if let Some(lb) = &limit_bound {
        chain.push(ChainStep::new(
            "every stage bound is at least 1 - sum of eps_i, so the limit measure of Fix(s_1) is at least this",
            &epsilon_product,
            ">=",
            lb,
        ));
        chain.push(ChainStep::new(
            "a ({s_1^{-1}}, eps)-castle forces mu(Fix s_1) < eps, so none exists for eps at most the limit bound",
            lb,
            ">",
            &BigRational::zero(),
        ));
        format!(
            "mu(Fix s_1) >= {} on the limit space, so no ({{s_1^-1}}, eps)-castle exists for eps <= {}; the limit action is not almost finite",
            rational_text(lb),
            rational_text(lb)
        )
    } else {
        chain.push(ChainStep::new(
            "a ({s_1^{-1}}, eps)-castle on X_F forces mu_F(Fix s_1) < eps, so none exists on X_F for eps at most b",
            &b,
            ">",
            &BigRational::zero(),
        ));
        format!(
            "finite-stage obstruction only: no ({{s_1^-1}}, eps)-castle on X_F for eps <= {}; a constant eps gives no positive limit bound",
            rational_text(&b)
        )
    };
    let valid = chain.iter().all(|s| s.holds) && b > BigRational::zero();
    Ok(NonAfReport {
        kind: Kind::NonAfReport,
        v: VERSION,
        epsilon_mode: mode_text(mode),
        rows,
        b,
        b_brute,
        epsilon_product,
        stage_fractions,
        chain,
        limit_bound,
        conclusion,
        criterion: cert.clone(),
        valid,
    })
}

impl NonAfReport {
    /// Checks every chain step from its text, re-verifies the embedded
    /// criterion certificate and rebuilds the report from it.
    pub fn reverify(&self) -> Result<bool> {
        if self.kind != Kind::NonAfReport || self.v != VERSION {
            return Err(Error::InvalidCertificate("not a v1 non-AF report".into()));
        }
        for step in &self.chain {
            if step.evaluate()? != step.holds {
                return Err(Error::InvalidCertificate(format!(
                    "chain step '{}' is recorded wrongly",
                    step.claim
                )));
            }
        }
        if !self.criterion.reverify()? {
            return Err(Error::InvalidCertificate("embedded criterion certificate is invalid".into()));
        }
        let mode = mode_from_text(&self.epsilon_mode)?;
        let again = non_af_report(&self.criterion, &mode)?;
        if again != *self {
            return Err(Error::InvalidCertificate("report disagrees on recomputation".into()));
        }
        Ok(self.valid)
    }

    /// Per-γ summary table.
    pub fn markdown(&self) -> String {
        let mut out = String::from("| gamma | p | index | fixed fraction | bound 1-eps |\n|---|---|---|---|---|\n");
        for r in &self.rows {
            out.push_str(&format!(
                "| `{}` | {} | {} | {} | {} |\n",
                r.gamma,
                r.p,
                r.index,
                rational_text(&r.fixed_fraction),
                rational_text(&r.bound)
            ));
        }
        out.push_str(&format!(
            "\nb = {} (product of bounds {})\n\n{}\n",
            rational_text(&self.b),
            rational_text(&self.epsilon_product),
            self.conclusion
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificates::verify_criterion;
    use crate::config::RunConfig;
    use crate::exact::ratio;

    fn cfg(mode: EpsilonMode) -> RunConfig {
        RunConfig {
            epsilon: mode,
            ..RunConfig::default()
        }
    }

    #[test]
    fn single_level_bound() {
        let mode = EpsilonMode::Fixed(ratio(1, 2));
        let g = ["{(0):(1)};(0)".parse().unwrap()];
        let cert = verify_criterion(&g, &cfg(mode.clone())).unwrap();
        let report = non_af_report(&cert, &mode).unwrap();
        assert_eq!(report.b, ratio(3, 4));
        assert_eq!(report.b_brute, Some(ratio(3, 4)));
        assert!(report.valid);
        assert_eq!(report.limit_bound, None);
        assert!(report.reverify().unwrap());
    }

    #[test]
    fn schedule_window_has_limit_bound() {
        let mode = EpsilonMode::Schedule;
        let config = cfg(mode.clone());
        let g: Vec<WreathElement> = config.gammas().unwrap().into_iter().take(3).collect();
        let cert = verify_criterion(&g, &config).unwrap();
        let report = non_af_report(&cert, &mode).unwrap();
        assert!(report.valid);
        assert_eq!(report.limit_bound, Some(ratio(1, 2)));
        assert!(report.b >= ratio(1, 2));
        assert!(report.stage_fractions.windows(2).all(|w| w[1] <= w[0]));
        let json = serde_json::to_string(&report).unwrap();
        let back: NonAfReport = serde_json::from_str(&json).unwrap();
        assert!(back.reverify().unwrap());
    }

    #[test]
    fn invalid_certificate_rejected() {
        let mode = EpsilonMode::Fixed(ratio(1, 2));
        let g = ["{(0):(1)};(0)".parse().unwrap()];
        let mut cert = verify_criterion(&g, &cfg(mode.clone())).unwrap();
        cert.valid = false;
        assert!(matches!(non_af_report(&cert, &mode), Err(Error::InvalidCertificate(_))));
        let other = EpsilonMode::Fixed(ratio(1, 3));
        let cert = verify_criterion(&g, &cfg(mode)).unwrap();
        assert!(non_af_report(&cert, &other).is_err());
    }

    #[test]
    fn forged_chain_step_caught() {
        let mode = EpsilonMode::Fixed(ratio(1, 2));
        let g = ["{(0):(1)};(0)".parse().unwrap()];
        let cert = verify_criterion(&g, &cfg(mode.clone())).unwrap();
        let mut report = non_af_report(&cert, &mode).unwrap();
        report.chain[1].rhs = "7/8".into();
        assert!(report.reverify().is_err());
    }
}
