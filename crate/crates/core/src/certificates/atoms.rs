//! Atoms of the finite Boolean algebra generated by all translates of a
//! family of state sets.
//!
//! The atom partition is invariant under every generator and refines each
//! input set; conversely any generator-invariant partition refining the
//! inputs also refines every translate. So the atoms form the coarsest
//! generator-invariant refinement of the inputs, which label refinement
//! reaches without listing the (possibly many) translates.

use std::collections::{BTreeSet, HashMap};

use crate::dynamics::{FiniteAction, WindowSystem};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atoms {
    /// Blocks sorted internally and ordered by least element.
    pub blocks: Vec<Vec<u64>>,
    /// Refinement rounds until the labels were stable.
    pub rounds: usize,
}

impl Atoms {
    pub fn block_of(&self) -> HashMap<u64, usize> {
        self.blocks
            .iter()
            .enumerate()
            .flat_map(|(i, b)| b.iter().map(move |&x| (x, i)))
            .collect()
    }

    pub fn equal_sizes(&self) -> bool {
        self.blocks.windows(2).all(|w| w[0].len() == w[1].len())
    }

    /// Indices of the atoms whose union is `set`, or `None` if `set` is not a union of atoms.
    pub fn decompose(&self, set: &BTreeSet<u64>) -> Option<Vec<usize>> {
        let block_of = self.block_of();
        let mut used: BTreeSet<usize> = BTreeSet::new();
        for x in set {
            used.insert(*block_of.get(x)?);
        }
        used.iter()
            .all(|&i| self.blocks[i].iter().all(|x| set.contains(x)))
            .then(|| used.into_iter().collect())
    }
}

pub fn boolean_atoms(sets: &[BTreeSet<u64>], window: &WindowSystem, budget: u64) -> Result<Atoms> {
    let action = window.action(budget)?;
    let n = action.size() as usize;
    for s in sets {
        if let Some(&x) = s.iter().find(|&&x| x as usize >= n) {
            return Err(Error::InvalidStateSet(format!("state index {x} out of range")));
        }
    }
    let gens = action.generator_count();

    // initial labels: the membership pattern across the input sets
    let mut label = vec![0usize; n];
    let mut count = relabel(&mut label, |x| sets.iter().map(|s| s.contains(&(x as u64)) as usize).collect());
    let mut rounds = 0;
    loop {
        rounds += 1;
        let prev = label.clone();
        let next = relabel(&mut label, |x| {
            let mut sig = Vec::with_capacity(gens + 1);
            sig.push(prev[x]);
            sig.extend((0..gens).map(|g| prev[action.apply_generator(g, x as u64) as usize]));
            sig
        });
        if next == count {
            break;
        }
        count = next;
    }

    let mut blocks = vec![Vec::new(); count];
    for (x, &l) in label.iter().enumerate() {
        blocks[l].push(x as u64);
    }
    Ok(Atoms { blocks, rounds })
}

/// Replaces labels by dense ids of `sig(x)`, numbered by first occurrence.
fn relabel(label: &mut [usize], sig: impl Fn(usize) -> Vec<usize>) -> usize {
    let mut ids: HashMap<Vec<usize>, usize> = HashMap::new();
    let fresh: Vec<usize> = (0..label.len())
        .map(|x| {
            let next = ids.len();
            *ids.entry(sig(x)).or_insert(next)
        })
        .collect();
    label.copy_from_slice(&fresh);
    ids.len()
}
