//! Orbits and Schreier trees of generator actions on finite sets `0..size`.

use crate::wreath::Word;

/// A group action on `0..size` given by generator permutations.
pub trait FiniteAction {
    fn size(&self) -> u64;
    fn generator_count(&self) -> usize;
    fn apply_generator(&self, g: usize, x: u64) -> u64;

    /// Applies a word right to left, so `[g0, g1]` acts as `g0 · g1`.
    fn apply_word(&self, word: &[usize], x: u64) -> u64 {
        word.iter().rev().fold(x, |y, &g| self.apply_generator(g, y))
    }
}

const UNSEEN: u64 = u64::MAX;

/// Breadth-first orbit with Schreier links. States are discovered in
/// (word length, lexicographic word) order, so every stored word is the
/// lexicographically least among the shortest words reaching its state.
#[derive(Debug, Clone)]
pub struct Orbit {
    start: u64,
    order: Vec<u64>,
    parent: Vec<u64>,
    via: Vec<u32>,
}

impl Orbit {
    pub fn compute<A: FiniteAction + ?Sized>(action: &A, start: u64, generators: &[usize]) -> Orbit {
        Self::search(action, start, generators, |_| false)
    }

    /// Stops as soon as `stop` accepts a discovered state.
    pub fn search<A: FiniteAction + ?Sized>(
        action: &A,
        start: u64,
        generators: &[usize],
        mut stop: impl FnMut(u64) -> bool,
    ) -> Orbit {
        let n = action.size() as usize;
        let mut parent = vec![UNSEEN; n];
        let mut via = vec![u32::MAX; n];
        parent[start as usize] = start;
        let mut order = vec![start];
        if stop(start) {
            return Orbit { start, order, parent, via };
        }
        let mut layer_start = 0;
        while layer_start < order.len() {
            let layer_end = order.len();
            for &g in generators {
                for i in layer_start..layer_end {
                    let x = order[i];
                    let y = action.apply_generator(g, x);
                    if parent[y as usize] == UNSEEN {
                        parent[y as usize] = x;
                        via[y as usize] = g as u32;
                        order.push(y);
                        if stop(y) {
                            return Orbit { start, order, parent, via };
                        }
                    }
                }
            }
            layer_start = layer_end;
        }
        Orbit { start, order, parent, via }
    }

    pub fn start(&self) -> u64 {
        self.start
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Reached states in discovery order.
    pub fn states(&self) -> &[u64] {
        &self.order
    }

    pub fn last(&self) -> u64 {
        *self.order.last().expect("orbit contains its start")
    }

    pub fn contains(&self, x: u64) -> bool {
        self.parent.get(x as usize).is_some_and(|&p| p != UNSEEN)
    }

    /// Word `w` with `w · start = x`, or `None` when `x` is unreached.
    pub fn word_to(&self, x: u64) -> Option<Word> {
        if !self.contains(x) {
            return None;
        }
        let mut word = Vec::new();
        let mut cur = x;
        while cur != self.start {
            word.push(self.via[cur as usize] as usize);
            cur = self.parent[cur as usize];
        }
        Some(word)
    }
}
