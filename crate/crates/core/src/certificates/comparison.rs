//! Dynamical comparison on a transitive finite stage: when |A| < |B|, A splits
//! into atoms that are moved by group elements onto pairwise disjoint atoms
//! inside B.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Orbit, WindowSystem};
use crate::error::{Error, Result};
use crate::forge::SubgroupDatum;
use crate::wreath::Word;

use super::atoms::boolean_atoms;
use super::{Kind, VERSION};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Piece {
    pub states: Vec<String>,
    pub word: Word,
    pub image: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonCertificate {
    pub kind: Kind,
    pub v: u32,
    pub d: usize,
    pub m: usize,
    pub window: Vec<SubgroupDatum>,
    pub a: Vec<String>,
    pub b: Vec<String>,
    pub atom_size: usize,
    pub pieces: Vec<Piece>,
    pub valid: bool,
}

pub fn comparison_certificate(
    a: &BTreeSet<u64>,
    b: &BTreeSet<u64>,
    window: &WindowSystem,
    budget: u64,
) -> Result<ComparisonCertificate> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidStateSet("A and B must be nonempty".into()));
    }
    if a.len() >= b.len() {
        return Err(Error::MeasureCondition {
            a: a.len(),
            b: b.len(),
        });
    }
    if !window.is_transitive(budget)?.transitive {
        return Err(Error::NotTransitive);
    }
    let atoms = boolean_atoms(&[a.clone(), b.clone()], window, budget)?;
    let in_a = atoms.decompose(a).expect("A is a union of atoms");
    let in_b = atoms.decompose(b).expect("B is a union of atoms");

    // atoms already inside B stay put; the rest take unused B-atoms in order
    let mut free: Vec<usize> = in_b.iter().copied().filter(|i| !in_a.contains(i)).collect();
    free.reverse();
    let action = window.action(budget)?;
    let gens: Vec<usize> = (0..window.generators().len()).collect();
    let mut pieces = Vec::with_capacity(in_a.len());
    for &atom in &in_a {
        let target = if in_b.contains(&atom) {
            atom
        } else {
            free.pop().expect("fewer A-atoms than B-atoms")
        };
        let goal: BTreeSet<u64> = atoms.blocks[target].iter().copied().collect();
        let start = atoms.blocks[atom][0];
        let orbit = Orbit::search(&action, start, &gens, |x| goal.contains(&x));
        let word = orbit
            .word_to(orbit.last())
            .filter(|_| goal.contains(&orbit.last()))
            .ok_or(Error::NotTransitive)?;
        let element = window.generators().evaluate(&word)?;
        let mut image = Vec::with_capacity(atoms.blocks[atom].len());
        for &x in &atoms.blocks[atom] {
            image.push(window.encode(&window.act(&element, &window.decode(x))?));
        }
        image.sort_unstable();
        pieces.push(Piece {
            states: atoms.blocks[atom].iter().map(|&x| window.state_text(x)).collect(),
            word,
            image: image.iter().map(|&x| window.state_text(x)).collect(),
        });
    }
    let mut cert = ComparisonCertificate {
        kind: Kind::Comparison,
        v: VERSION,
        d: window.generators().d(),
        m: window.generators().m(),
        window: window.data(),
        a: a.iter().map(|&x| window.state_text(x)).collect(),
        b: b.iter().map(|&x| window.state_text(x)).collect(),
        atom_size: atoms.blocks[0].len(),
        pieces,
        valid: false,
    };
    cert.valid = cert.check().is_ok();
    Ok(cert)
}

impl ComparisonCertificate {
    fn window(&self) -> Result<WindowSystem> {
        if self.window.is_empty() {
            Ok(WindowSystem::trivial(self.d, self.m))
        } else {
            WindowSystem::new_unchecked(self.window.clone())
        }
    }

    /// Checks the decomposition from the serialized content alone.
    pub fn check(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidCertificate(msg));
        let w = self.window()?;
        let parse_set = |v: &[String]| -> Result<BTreeSet<u64>> {
            v.iter().map(|s| w.parse_state(s)).collect()
        };
        let a = parse_set(&self.a)?;
        let b = parse_set(&self.b)?;
        if a.len() >= b.len() {
            return fail(format!("|A| = {} is not below |B| = {}", a.len(), b.len()));
        }
        let mut covered = BTreeSet::new();
        let mut images = BTreeSet::new();
        for (i, piece) in self.pieces.iter().enumerate() {
            let states = parse_set(&piece.states)?;
            if states.is_empty() {
                return fail(format!("piece {i} is empty"));
            }
            for &x in &states {
                if !covered.insert(x) {
                    return fail(format!("state {} lies in two pieces", w.state_text(x)));
                }
            }
            let g = w.generators().evaluate(&piece.word)?;
            let mut image = BTreeSet::new();
            for &x in &states {
                let y = w.encode(&w.act(&g, &w.decode(x))?);
                if !b.contains(&y) {
                    return fail(format!("piece {i} sends a state outside B"));
                }
                if !images.insert(y) {
                    return fail(format!("piece {i} overlaps an earlier image"));
                }
                image.insert(y);
            }
            if image != parse_set(&piece.image)? {
                return fail(format!("recorded image of piece {i} is wrong"));
            }
        }
        if covered != a {
            return fail("pieces do not partition A".into());
        }
        Ok(())
    }

    pub fn reverify(&self) -> Result<bool> {
        if self.kind != Kind::Comparison || self.v != VERSION {
            return Err(Error::InvalidCertificate("not a v1 comparison certificate".into()));
        }
        let ok = self.check().is_ok();
        if ok != self.valid {
            return Err(Error::InvalidCertificate("recorded verdict disagrees".into()));
        }
        Ok(ok)
    }
}
