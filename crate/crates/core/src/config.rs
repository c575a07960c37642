//! Run configuration and its `key = value` text format.
//!
//! ```text
//! # comments start with '#'
//! d = 1
//! m = 1
//! radius = 1
//! epsilon = 1/2          # or `schedule` for 2^-(i+2)
//! prime_strategy = smallest-admissible
//! budget_states = 1000000
//! budget_word_length = 4
//! stabilizer_radius = 2
//! window_size = 3        # optional: keep only the first N elements of the ball
//! seed = 0
//! out = results
//! ```

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::exact::parse_rational;
use crate::forge::EpsilonMode;
use crate::wreath::{GeneratorSet, WreathElement};

pub const DEFAULT_BUDGET_STATES: u64 = 1_000_000;
pub const BUDGET_ENV: &str = "ALLOSTERY_BUDGET_STATES";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrimeStrategy {
    SmallestAdmissible,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub d: usize,
    pub m: usize,
    pub radius: usize,
    pub epsilon: EpsilonMode,
    pub prime_strategy: PrimeStrategy,
    pub budget_states: u64,
    pub budget_word_length: usize,
    pub stabilizer_radius: usize,
    pub window_size: Option<usize>,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            d: 1,
            m: 1,
            radius: 1,
            epsilon: EpsilonMode::Schedule,
            prime_strategy: PrimeStrategy::SmallestAdmissible,
            budget_states: DEFAULT_BUDGET_STATES,
            budget_word_length: 4,
            stabilizer_radius: 2,
            window_size: None,
            seed: 0,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = raw.split('#').next().unwrap_or("");
            if line.trim().is_empty() {
                continue;
            }
            let Some(eq) = line.find('=') else {
                let col = line.len() - line.trim_start().len() + 1;
                return Err(Error::parse(line_no, col, "expected 'key = value'"));
            };
            let key = line[..eq].trim();
            let value = line[eq + 1..].trim();
            let value_col = eq + 2 + (line[eq + 1..].len() - line[eq + 1..].trim_start().len());
            cfg.set(key, value)
                .map_err(|msg| Error::parse(line_no, value_col, msg))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key from its text value.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
            v.parse()
                .map_err(|_| format!("invalid value '{v}' for '{key}'"))
        }
        match key {
            "d" => self.d = num(key, value)?,
            "m" => self.m = num(key, value)?,
            "radius" => self.radius = num(key, value)?,
            "epsilon" => self.epsilon = parse_epsilon_mode(value)?,
            "prime_strategy" => {
                if value != "smallest-admissible" {
                    return Err(format!("unknown prime strategy '{value}'"));
                }
                self.prime_strategy = PrimeStrategy::SmallestAdmissible;
            }
            "budget_states" => self.budget_states = num(key, value)?,
            "budget_word_length" => self.budget_word_length = num(key, value)?,
            "stabilizer_radius" => self.stabilizer_radius = num(key, value)?,
            "window_size" => self.window_size = Some(num(key, value)?),
            "seed" => self.seed = num(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Input(msg.into()));
        if self.d == 0 || self.m == 0 {
            return bad("ranks d and m must be at least 1");
        }
        if self.budget_states == 0 || self.budget_word_length == 0 {
            return bad("budgets must be positive");
        }
        if self.radius > self.budget_word_length || self.stabilizer_radius > self.budget_word_length {
            return Err(Error::budget(
                "ball radius",
                self.radius.max(self.stabilizer_radius),
                self.budget_word_length as u64,
            ));
        }
        Ok(())
    }

    pub fn generators(&self) -> GeneratorSet {
        GeneratorSet::new(self.d, self.m)
    }

    /// The nontrivial elements of the ball, in enumeration order, truncated
    /// to `window_size` when set.
    pub fn gammas(&self) -> Result<Vec<WreathElement>> {
        let ball = self.generators().ball(self.radius, self.budget_word_length)?;
        let take = self.window_size.unwrap_or(usize::MAX);
        Ok(ball.into_iter().skip(1).take(take).map(|e| e.element).collect())
    }
}

pub fn parse_epsilon_mode(value: &str) -> std::result::Result<EpsilonMode, String> {
    if value == "schedule" {
        return Ok(EpsilonMode::Schedule);
    }
    parse_rational(value)
        .map(EpsilonMode::Fixed)
        .map_err(|_| format!("epsilon must be 'schedule' or a rational, got '{value}'"))
}
