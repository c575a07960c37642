//! Structure maps between nested windows and the inverse-system laws.

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::orbit::FiniteAction;
use super::window::{split_index, WindowSystem};

/// Coordinate projection X_{F'} → X_F for F ⊆ F'.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureMap {
    positions: Vec<usize>,
    source_radices: Vec<u64>,
    target_radices: Vec<u64>,
}

impl StructureMap {
    pub fn new(source: &WindowSystem, target: &WindowSystem) -> Result<StructureMap> {
        let src = source.data();
        let mut positions = Vec::with_capacity(target.levels().len());
        for (i, d) in target.data().iter().enumerate() {
            let pos = src.iter().position(|s| s == d).ok_or_else(|| {
                Error::NonNestedWindows(format!(
                    "level {i} ({}) of the coarser window is missing from the finer one",
                    d.gamma
                ))
            })?;
            if positions.contains(&pos) {
                return Err(Error::NonNestedWindows(format!("level {i} repeats a datum")));
            }
            positions.push(pos);
        }
        let radices = |w: &WindowSystem| -> Vec<u64> {
            w.levels()
                .iter()
                .map(|l| l.index().to_u64().unwrap_or(u64::MAX))
                .collect()
        };
        Ok(StructureMap {
            positions,
            source_radices: radices(source),
            target_radices: radices(target),
        })
    }

    pub fn apply(&self, x: u64) -> u64 {
        let parts = split_index(x, &self.source_radices);
        self.positions
            .iter()
            .zip(&self.target_radices)
            .fold(0, |acc, (&p, &r)| acc * r + parts[p])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapCheck {
    pub finer: usize,
    pub coarser: usize,
    pub equivariant: bool,
    pub surjective: bool,
    pub pushforward_uniform: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InverseSystemReport {
    pub identities: bool,
    pub maps: Vec<MapCheck>,
    pub composition: bool,
    pub passed: bool,
}

/// Exhaustively checks the laws on a chain W_0 ⊆ W_1 ⊆ … of windows.
pub fn check_inverse_system(chain: &[WindowSystem], budget: u64) -> Result<InverseSystemReport> {
    let actions = chain
        .iter()
        .map(|w| w.action(budget))
        .collect::<Result<Vec<_>>>()?;

    let mut identities = true;
    for (w, a) in chain.iter().zip(&actions) {
        let f = StructureMap::new(w, w)?;
        identities &= (0..a.size()).all(|x| f.apply(x) == x);
    }

    let mut maps = Vec::new();
    for j in 0..chain.len() {
        for i in 0..j {
            let f = StructureMap::new(&chain[j], &chain[i])?;
            let (fine, coarse) = (&actions[j], &actions[i]);
            let mut fibers = vec![0u64; coarse.size() as usize];
            let mut equivariant = true;
            for x in 0..fine.size() {
                let fx = f.apply(x);
                fibers[fx as usize] += 1;
                for g in 0..fine.generator_count() {
                    equivariant &= f.apply(fine.apply_generator(g, x)) == coarse.apply_generator(g, fx);
                }
            }
            let surjective = fibers.iter().all(|&n| n > 0);
            let mu_fine = chain[j].measure();
            let mu_coarse = chain[i].measure().singleton();
            let pushforward_uniform = mu_fine.pushforward(&fibers).iter().all(|m| *m == mu_coarse);
            maps.push(MapCheck {
                finer: j,
                coarser: i,
                equivariant,
                surjective,
                pushforward_uniform,
            });
        }
    }

    let mut composition = true;
    for k in 0..chain.len() {
        for j in 0..=k {
            for i in 0..=j {
                let f_ik = StructureMap::new(&chain[k], &chain[i])?;
                let f_ij = StructureMap::new(&chain[j], &chain[i])?;
                let f_jk = StructureMap::new(&chain[k], &chain[j])?;
                composition &= (0..actions[k].size()).all(|x| f_ik.apply(x) == f_ij.apply(f_jk.apply(x)));
            }
        }
    }

    let passed = identities
        && composition
        && maps
            .iter()
            .all(|m| m.equivariant && m.surjective && m.pushforward_uniform);
    Ok(InverseSystemReport {
        identities,
        maps,
        composition,
        passed,
    })
}
