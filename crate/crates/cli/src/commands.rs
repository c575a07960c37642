use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

use allostery::base::next_prime;
use allostery::certificates::{
    audit_castle, comparison_certificate, non_af_report, random_castle, transversal_castle,
    verify_criterion, AnyCertificate, Castle, CriterionCertificate,
};
use allostery::config::RunConfig;
use allostery::dynamics::WindowSystem;
use allostery::exact::rational_text;
use allostery::forge::{forge as forge_datum, forge_window, is_admissible, SubgroupDatum};
use allostery::wreath::WreathElement;
use allostery::{Error, Result};

use crate::{read, Format, Output};

fn json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn element(cfg: &RunConfig, text: &str) -> Result<WreathElement> {
    WreathElement::parse(text, Some(cfg.d))
}

/// A window from a JSON file (one datum, a list of data, or anything with a
/// `window` field), or forged from the configuration.
fn load_window(cfg: &RunConfig, path: Option<&Path>) -> Result<WindowSystem> {
    let data: Vec<SubgroupDatum> = match path {
        Some(p) => {
            let v: Value = serde_json::from_str(&read(p)?)?;
            if v.is_array() {
                serde_json::from_value(v)?
            } else if let Some(w) = v.get("window") {
                serde_json::from_value(w.clone())?
            } else {
                vec![serde_json::from_value(v)?]
            }
        }
        None => forge_window(&cfg.gammas()?, &cfg.epsilon)?,
    };
    if data.is_empty() {
        Ok(WindowSystem::trivial(cfg.d, cfg.m))
    } else {
        WindowSystem::new(data)
    }
}

pub fn forge(cfg: &RunConfig, gamma: &str, p: Option<u64>) -> Result<Output> {
    let gamma = element(cfg, gamma)?;
    if gamma.is_identity() {
        return Err(Error::IdentityGamma);
    }
    let p = match p {
        Some(p) => p,
        None => {
            let mut p = 2;
            while !is_admissible(&gamma, p) {
                p = next_prime(p);
            }
            p
        }
    };
    let datum = forge_datum(&gamma, p, &cfg.epsilon.epsilon(0))?;
    let mut value = serde_json::to_value(&datum)?;
    value["index"] = Value::String(datum.index().to_string());
    Ok(Output {
        text: json(&value)?,
        name: "forge",
        format: Format::Json,
        pass: true,
    })
}

fn criterion_csv(cert: &CriterionCertificate) -> String {
    let mut out = String::from("gamma,p,epsilon,index,fixed_fraction,required,passed\n");
    for r in &cert.records {
        out.push_str(&format!(
            "\"{}\",{},{},{},{},{},{}\n",
            r.gamma,
            r.p,
            rational_text(&r.epsilon),
            r.index,
            rational_text(&r.fixed_fraction),
            rational_text(&r.required),
            r.passed()
        ));
    }
    out
}

fn criterion_md(cert: &CriterionCertificate) -> String {
    let mut out = String::from("| gamma | p | eps | index | fixed fraction | required | ok |\n|---|---|---|---|---|---|---|\n");
    for r in &cert.records {
        out.push_str(&format!(
            "| `{}` | {} | {} | {} | {} | {} | {} |\n",
            r.gamma,
            r.p,
            rational_text(&r.epsilon),
            r.index,
            rational_text(&r.fixed_fraction),
            rational_text(&r.required),
            r.passed()
        ));
    }
    out.push_str(&format!(
        "\nwindow fraction {} >= product {}: {}; valid: {}\n",
        rational_text(&cert.window_fixed_fraction),
        rational_text(&cert.epsilon_product),
        cert.window_meets_product,
        cert.valid
    ));
    out
}

pub fn verify(cfg: &RunConfig, format: Option<Format>) -> Result<Output> {
    let cert = verify_criterion(&cfg.gammas()?, cfg)?;
    eprintln!(
        "criterion: {} ({} elements, window fraction {} vs product {}{})",
        if cert.valid { "valid" } else { "INVALID" },
        cert.records.len(),
        rational_text(&cert.window_fixed_fraction),
        rational_text(&cert.epsilon_product),
        if cert.partial { ", partial" } else { "" }
    );
    let format = format.unwrap_or(Format::Json);
    let text = match format {
        Format::Json => json(&cert)?,
        Format::Csv => criterion_csv(&cert),
        Format::Md => criterion_md(&cert),
    };
    Ok(Output {
        text,
        name: "verify",
        format,
        pass: cert.valid,
    })
}

#[derive(Serialize)]
struct Reverified {
    kind: String,
    valid: bool,
    consistent: bool,
}

pub fn reverify(cfg: &RunConfig, path: &Path) -> Result<Output> {
    let cert = AnyCertificate::from_json(&read(path)?)?;
    let valid = cert.reverify(cfg.budget_states)?;
    let kind = serde_json::to_value(cert.kind())?
        .as_str()
        .unwrap_or_default()
        .to_string();
    eprintln!("{kind}: recomputation agrees; certificate {}", if valid { "valid" } else { "invalid" });
    Ok(Output {
        text: json(&Reverified {
            kind,
            valid,
            consistent: true,
        })?,
        name: "verify",
        format: Format::Json,
        pass: valid,
    })
}

#[derive(Serialize)]
struct Step {
    step: usize,
    state: String,
}

pub fn simulate(
    cfg: &RunConfig,
    window: Option<&Path>,
    element_text: &str,
    steps: usize,
    start: Option<&str>,
    format: Option<Format>,
) -> Result<Output> {
    let w = load_window(cfg, window)?;
    let x = element(cfg, element_text)?;
    let mut state = match start {
        Some(s) => w.decode(w.parse_state(s)?),
        None => w.identity_state(),
    };
    let mut trajectory = Vec::with_capacity(steps + 1);
    for step in 0..=steps {
        if step > 0 {
            state = w.act(&x, &state)?;
        }
        trajectory.push(Step {
            step,
            state: state.to_string(),
        });
    }
    let format = format.unwrap_or(Format::Csv);
    let text = match format {
        Format::Json => json(&trajectory)?,
        _ => {
            let mut out = String::from("step,state\n");
            for s in &trajectory {
                out.push_str(&format!("{},\"{}\"\n", s.step, s.state));
            }
            out
        }
    };
    Ok(Output {
        text,
        name: "simulate",
        format: if format == Format::Json { Format::Json } else { Format::Csv },
        pass: true,
    })
}

fn state_set(text: &str, w: &WindowSystem, rng: &mut ChaCha8Rng, budget: u64) -> Result<BTreeSet<u64>> {
    if let Some(n) = text.trim().strip_prefix("random:") {
        let n: usize = n
            .parse()
            .map_err(|_| Error::InvalidStateSet(format!("bad count in '{text}'")))?;
        let size = w.size_within(budget)? as usize;
        if n > size {
            return Err(Error::InvalidStateSet(format!("{n} states requested, level has {size}")));
        }
        return Ok(sample(rng, size, n).into_iter().map(|x| x as u64).collect());
    }
    text.split_whitespace().map(|s| w.parse_state(s)).collect()
}

pub fn compare(cfg: &RunConfig, window: Option<&Path>, a: &str, b: &str) -> Result<Output> {
    let w = load_window(cfg, window)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let a = state_set(a, &w, &mut rng, cfg.budget_states)?;
    let b = state_set(b, &w, &mut rng, cfg.budget_states)?;
    let cert = comparison_certificate(&a, &b, &w, cfg.budget_states)?;
    Ok(Output {
        text: json(&cert)?,
        name: "compare",
        format: Format::Json,
        pass: cert.valid,
    })
}

pub fn audit(cfg: &RunConfig, window: Option<&Path>, castle: &str, gamma: &str) -> Result<Output> {
    let w = load_window(cfg, window)?;
    let castle = match castle {
        "transversal" => transversal_castle(&w, cfg.budget_states)?,
        "random" => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            random_castle(&w, &mut rng, cfg.budget_states, cfg.stabilizer_radius)?
        }
        path => Castle::parse(&read(Path::new(path))?, &w)?,
    };
    let audit = audit_castle(&castle, &element(cfg, gamma)?, &w, cfg.budget_states)?;
    Ok(Output {
        text: json(&audit)?,
        name: "audit",
        format: Format::Json,
        pass: audit.valid,
    })
}

pub fn report(cfg: &RunConfig, format: Option<Format>) -> Result<Output> {
    let cert = verify_criterion(&cfg.gammas()?, cfg)?;
    let report = non_af_report(&cert, &cfg.epsilon)?;
    let md = report.markdown();
    if let Some(dir) = &cfg.out {
        fs::create_dir_all(dir)
            .and_then(|_| fs::write(dir.join("report.md"), &md))
            .map_err(|e| Error::Input(format!("cannot write to {}: {e}", dir.display())))?;
    }
    let format = format.unwrap_or(Format::Json);
    let text = if format == Format::Md {
        md
    } else {
        eprint!("{md}");
        json(&report)?
    };
    Ok(Output {
        text,
        name: "report",
        format: if format == Format::Md { Format::Md } else { Format::Json },
        pass: report.valid,
    })
}
