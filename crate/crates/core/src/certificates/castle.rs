//! Castles on a finite stage and the fixed-point audit: for a well-formed
//! castle and γ ≠ e, every γ-fixed state lies in a translate sV_i with
//! γs ∉ S_i, so μ(Fix γ) ≤ Σ |KS_i △ S_i| μ(V_i) with K = {γ^{-1}}.
//!
//! Text format, one tower per line (`#` starts a comment):
//!
//! ```text
//! epsilon = 1/2
//! V=(0)|((0)) (1)|((0)); S=[] [3] [2,2]
//! ```

use std::collections::{BTreeSet, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Orbit, WindowSystem};
use crate::error::{Error, Result};
use crate::exact::{parse_rational, rational_text, serde_rational, serde_rational_opt};
use crate::forge::SubgroupDatum;
use crate::wreath::{WreathElement, Word};

use super::{Kind, VERSION};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CastleLevel {
    pub base: BTreeSet<u64>,
    pub shape: Vec<Word>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Castle {
    pub levels: Vec<CastleLevel>,
    pub tolerance: Option<BigRational>,
}

impl Castle {
    pub fn parse(text: &str, window: &WindowSystem) -> Result<Castle> {
        let mut castle = Castle::default();
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = raw.split('#').next().unwrap_or("");
            if line.trim().is_empty() {
                continue;
            }
            let trimmed = line.trim_start();
            let col0 = line.len() - trimmed.len() + 1;
            if let Some(rest) = trimmed.strip_prefix("epsilon") {
                let value = rest.trim_start().strip_prefix('=').map(str::trim).ok_or_else(|| {
                    Error::parse(line_no, col0, "expected 'epsilon = <rational>'")
                })?;
                castle.tolerance = Some(
                    parse_rational(value)
                        .map_err(|_| Error::parse(line_no, col0, "invalid tolerance"))?,
                );
                continue;
            }
            castle.levels.push(parse_level(line, line_no, window)?);
        }
        Ok(castle)
    }

    pub fn to_text(&self, window: &WindowSystem) -> String {
        let mut out = String::new();
        if let Some(eps) = &self.tolerance {
            out.push_str(&format!("epsilon = {}\n", rational_text(eps)));
        }
        for level in &self.levels {
            let base: Vec<String> = level.base.iter().map(|&x| window.state_text(x)).collect();
            let shape: Vec<String> = level.shape.iter().map(|w| word_text(w)).collect();
            out.push_str(&format!("V={}; S={}\n", base.join(" "), shape.join(" ")));
        }
        out
    }
}

fn word_text(w: &[usize]) -> String {
    let parts: Vec<String> = w.iter().map(usize::to_string).collect();
    format!("[{}]", parts.join(","))
}

fn parse_level(line: &str, line_no: usize, window: &WindowSystem) -> Result<CastleLevel> {
    let err = |col: usize, msg: &str| Error::parse(line_no, col, msg);
    let v_at = line.find("V=").ok_or_else(|| err(1, "expected 'V=<states>; S=<words>'"))?;
    let semi = line.find(';').ok_or_else(|| err(line.len() + 1, "missing ';'"))?;
    let after = &line[semi + 1..];
    let s_at = semi + 1 + after.find("S=").ok_or_else(|| err(semi + 2, "missing 'S='"))?;

    let mut base = BTreeSet::new();
    let v_text = &line[v_at + 2..semi];
    for (off, tok) in tokens(v_text) {
        let col = v_at + 3 + off;
        let x = window
            .parse_state(tok)
            .map_err(|e| err(col, &format!("bad state '{tok}': {e}")))?;
        if !base.insert(x) {
            return Err(err(col, &format!("state '{tok}' repeated")));
        }
    }
    if base.is_empty() {
        return Err(err(v_at + 3, "empty base"));
    }

    let mut shape = Vec::new();
    let s_text = &line[s_at + 2..];
    for (off, tok) in tokens(s_text) {
        let col = s_at + 3 + off;
        let inner = tok
            .strip_prefix('[')
            .and_then(|t| t.strip_suffix(']'))
            .ok_or_else(|| err(col, &format!("word '{tok}' must look like [0,1]")))?;
        let mut word = Vec::new();
        for part in inner.split(',').filter(|p| !p.trim().is_empty()) {
            let g: usize = part
                .trim()
                .parse()
                .map_err(|_| err(col, &format!("bad generator index in '{tok}'")))?;
            if g >= window.generators().len() {
                return Err(err(col, &format!("generator {g} out of range")));
            }
            word.push(g);
        }
        shape.push(word);
    }
    if shape.is_empty() {
        return Err(err(s_at + 3, "empty shape"));
    }
    Ok(CastleLevel { base, shape })
}

/// Whitespace-separated tokens with their byte offsets.
fn tokens(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.split(' ')
        .scan(0, |pos, t| {
            let start = *pos;
            *pos += t.len() + 1;
            Some((start, t))
        })
        .filter(|(_, t)| !t.trim().is_empty())
        .map(|(o, t)| (o, t.trim()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerAudit {
    pub base: Vec<String>,
    pub shape: Vec<Word>,
    pub shape_elements: Vec<WreathElement>,
    pub sym_diff: usize,
    #[serde(with = "serde_rational")]
    pub defect: BigRational,
    #[serde(with = "serde_rational")]
    pub base_measure: BigRational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CastleAudit {
    pub kind: Kind,
    pub v: u32,
    pub d: usize,
    pub m: usize,
    pub window: Vec<SubgroupDatum>,
    pub gamma: WreathElement,
    pub k: Vec<WreathElement>,
    pub towers: Vec<TowerAudit>,
    #[serde(with = "serde_rational")]
    pub fixed_measure: BigRational,
    #[serde(with = "serde_rational")]
    pub fixed_measure_brute: BigRational,
    #[serde(with = "serde_rational")]
    pub bound: BigRational,
    pub inequality_holds: bool,
    #[serde(with = "serde_rational_opt")]
    pub tolerance: Option<BigRational>,
    #[serde(with = "serde_rational")]
    pub max_defect: BigRational,
    pub within_tolerance: Option<bool>,
    pub valid: bool,
}

/// Audits `castle` against `gamma`; overlapping or non-covering castles are
/// rejected with a witness state.
pub fn audit_castle(
    castle: &Castle,
    gamma: &WreathElement,
    window: &WindowSystem,
    budget: u64,
) -> Result<CastleAudit> {
    if gamma.is_identity() {
        return Err(Error::IdentityGamma);
    }
    let n = window.size_within(budget)?;
    let gens = window.generators();
    let malformed = |msg: String| Err(Error::MalformedCastle(msg));
    if castle.levels.is_empty() {
        return malformed("castle has no towers".into());
    }

    // which (tower, shape element, base state) covers each state
    let mut owner: HashMap<u64, (usize, usize, u64)> = HashMap::new();
    let mut elements = Vec::with_capacity(castle.levels.len());
    for (i, level) in castle.levels.iter().enumerate() {
        if let Some(&x) = level.base.iter().find(|&&x| x >= n) {
            return malformed(format!("tower {i}: base state index {x} out of range"));
        }
        let mut shape_elems: Vec<WreathElement> = Vec::with_capacity(level.shape.len());
        for (j, w) in level.shape.iter().enumerate() {
            let s = gens.evaluate(w)?;
            if let Some(k) = shape_elems.iter().position(|t| *t == s) {
                return malformed(format!(
                    "tower {i}: shape words {} and {} are the same element {s}",
                    word_text(&level.shape[k]),
                    word_text(w)
                ));
            }
            for &v in &level.base {
                let y = window.encode(&window.act(&s, &window.decode(v))?);
                if let Some(&(i2, j2, v2)) = owner.get(&y) {
                    return malformed(format!(
                        "translates overlap at {}: {} applied to {} (tower {i2}) and {} applied to {} (tower {i})",
                        window.state_text(y),
                        word_text(&castle.levels[i2].shape[j2]),
                        window.state_text(v2),
                        word_text(w),
                        window.state_text(v),
                    ));
                }
                owner.insert(y, (i, j, v));
            }
            shape_elems.push(s);
        }
        elements.push(shape_elems);
    }
    if (owner.len() as u64) < n {
        let x = (0..n).find(|x| !owner.contains_key(x)).expect("a gap exists");
        return malformed(format!("state {} is not covered", window.state_text(x)));
    }

    let measure = window.measure();
    let k = gamma.invert();
    let mut towers = Vec::with_capacity(castle.levels.len());
    let mut bound = BigRational::zero();
    let mut max_defect = BigRational::zero();
    for (level, shape_elems) in castle.levels.iter().zip(elements) {
        let s: BTreeSet<&WreathElement> = shape_elems.iter().collect();
        let ks: Vec<WreathElement> = shape_elems
            .iter()
            .map(|x| k.multiply(x))
            .collect::<Result<_>>()?;
        let ks: BTreeSet<&WreathElement> = ks.iter().collect();
        let sym_diff = s.symmetric_difference(&ks).count();
        let defect = BigRational::new(BigInt::from(sym_diff), BigInt::from(s.len()));
        let base_measure = measure.of_count(level.base.len());
        bound += BigRational::from_integer(BigInt::from(sym_diff)) * &base_measure;
        if defect > max_defect {
            max_defect = defect.clone();
        }
        towers.push(TowerAudit {
            base: level.base.iter().map(|&x| window.state_text(x)).collect(),
            shape: level.shape.clone(),
            shape_elements: shape_elems,
            sym_diff,
            defect,
            base_measure,
        });
    }
    let fixed_measure = window.fixed_fraction(gamma)?;
    let fixed_measure_brute = measure.of_count(window.fixed_states(gamma, budget)?.len());
    let inequality_holds = fixed_measure_brute <= bound;
    let within_tolerance = castle.tolerance.as_ref().map(|eps| max_defect < *eps);
    Ok(CastleAudit {
        kind: Kind::CastleAudit,
        v: VERSION,
        d: gens.d(),
        m: gens.m(),
        window: window.data(),
        gamma: gamma.clone(),
        k: vec![k],
        towers,
        valid: inequality_holds && fixed_measure == fixed_measure_brute,
        fixed_measure,
        fixed_measure_brute,
        bound,
        inequality_holds,
        tolerance: castle.tolerance.clone(),
        max_defect,
        within_tolerance,
    })
}

impl CastleAudit {
    fn window_system(&self) -> Result<WindowSystem> {
        if self.window.is_empty() {
            Ok(WindowSystem::trivial(self.d, self.m))
        } else {
            WindowSystem::new_unchecked(self.window.clone())
        }
    }

    /// Rebuilds the castle from the record and audits it again.
    pub fn reverify(&self, budget: u64) -> Result<bool> {
        if self.kind != Kind::CastleAudit || self.v != VERSION {
            return Err(Error::InvalidCertificate("not a v1 castle audit".into()));
        }
        let window = self.window_system()?;
        let mut levels = Vec::with_capacity(self.towers.len());
        for t in &self.towers {
            let base = t
                .base
                .iter()
                .map(|s| window.parse_state(s))
                .collect::<Result<BTreeSet<u64>>>()?;
            levels.push(CastleLevel {
                base,
                shape: t.shape.clone(),
            });
        }
        let castle = Castle {
            levels,
            tolerance: self.tolerance.clone(),
        };
        let again = audit_castle(&castle, &self.gamma, &window, budget)?;
        if again != *self {
            return Err(Error::InvalidCertificate("castle audit disagrees on recomputation".into()));
        }
        Ok(self.valid)
    }
}

/// One tower over the identity state whose shape is a Schreier transversal.
pub fn transversal_castle(window: &WindowSystem, budget: u64) -> Result<Castle> {
    let action = window.action(budget)?;
    let start = window.encode(&window.identity_state());
    let gens: Vec<usize> = (0..window.generators().len()).collect();
    let orbit = Orbit::compute(&action, start, &gens);
    if (orbit.len() as u64) < window.size_within(budget)? {
        return Err(Error::NotTransitive);
    }
    let shape = orbit
        .states()
        .iter()
        .map(|&x| orbit.word_to(x).expect("state is in the orbit"))
        .collect();
    Ok(Castle {
        levels: vec![CastleLevel {
            base: BTreeSet::from([start]),
            shape,
        }],
        tolerance: None,
    })
}

/// A random well-formed castle with shapes drawn from the ball of radius
/// `radius` (identity always included).
pub fn random_castle<R: Rng>(
    window: &WindowSystem,
    rng: &mut R,
    budget: u64,
    radius: usize,
) -> Result<Castle> {
    let n = window.size_within(budget)?;
    let ball = window.generators().ball(radius, radius)?;
    let mut images = Vec::with_capacity(ball.len());
    for entry in &ball {
        let row = (0..n)
            .map(|x| Ok(window.encode(&window.act(&entry.element, &window.decode(x))?)))
            .collect::<Result<Vec<u64>>>()?;
        images.push(row);
    }
    let mut order: Vec<u64> = (0..n).collect();
    order.shuffle(rng);
    let mut covered = vec![false; n as usize];
    let mut levels = Vec::new();
    for &x in &order {
        if covered[x as usize] {
            continue;
        }
        let target = rng.gen_range(1..=ball.len());
        let mut candidates: Vec<usize> = (1..ball.len()).collect();
        candidates.shuffle(rng);
        let mut shape = vec![0];
        let mut used = BTreeSet::from([x]);
        for j in candidates {
            if shape.len() >= target {
                break;
            }
            let y = images[j][x as usize];
            if !covered[y as usize] && used.insert(y) {
                shape.push(j);
            }
        }
        let extra = rng.gen_range(0..=2);
        let mut base = BTreeSet::from([x]);
        for &y in &order {
            if base.len() > extra {
                break;
            }
            if covered[y as usize] || used.contains(&y) {
                continue;
            }
            let imgs: BTreeSet<u64> = shape.iter().map(|&j| images[j][y as usize]).collect();
            if imgs.len() == shape.len()
                && imgs.iter().all(|&z| !covered[z as usize] && !used.contains(&z))
            {
                used.extend(imgs);
                base.insert(y);
            }
        }
        for &z in &used {
            covered[z as usize] = true;
        }
        levels.push(CastleLevel {
            base,
            shape: shape.into_iter().map(|j| ball[j].word.clone()).collect(),
        });
    }
    Ok(Castle {
        levels,
        tolerance: None,
    })
}
