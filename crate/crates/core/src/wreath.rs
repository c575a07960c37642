//! Exact arithmetic in the wreath product Z^d ≀ Z^m.
//!
//! An element is a pair `(f, λ)` where `f` is a finitely supported lamp
//! configuration Z^m → Z^d and `λ ∈ Z^m` is the shift. The product is
//! `(f, λ)(f', λ') = (f + f'(λ^{-1}·), λλ')`.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::base::{check_rank, write_tuple, BaseElement};
use crate::error::{Error, Result};

/// Lamp values are stored only where nonzero, so the key set is exactly the support.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LampConfig {
    dim: usize,
    values: BTreeMap<BaseElement, Vec<BigInt>>,
}

impl LampConfig {
    pub fn zero(dim: usize) -> Self {
        LampConfig {
            dim,
            values: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    pub fn support_len(&self) -> usize {
        self.values.len()
    }

    pub fn support(&self) -> impl Iterator<Item = &BaseElement> {
        self.values.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BaseElement, &Vec<BigInt>)> {
        self.values.iter()
    }

    pub fn get(&self, pos: &BaseElement) -> Option<&Vec<BigInt>> {
        self.values.get(pos)
    }

    /// Adds `value` at `pos`, pruning the entry if it becomes zero.
    pub fn add_at(&mut self, pos: BaseElement, value: &[BigInt]) -> Result<()> {
        check_rank(self.dim, value.len())?;
        if let Some((first, _)) = self.values.iter().next() {
            check_rank(first.rank(), pos.rank())?;
        }
        if value.iter().all(Zero::is_zero) {
            return Ok(());
        }
        match self.values.entry(pos) {
            Entry::Vacant(slot) => {
                slot.insert(value.to_vec());
            }
            Entry::Occupied(mut slot) => {
                for (s, v) in slot.get_mut().iter_mut().zip(value) {
                    *s += v;
                }
                if slot.get().iter().all(Zero::is_zero) {
                    slot.remove();
                }
            }
        }
        Ok(())
    }

    /// `f(λ^{-1}·)`: moves every value from `pos` to `λ + pos`.
    pub fn translate(&self, by: &BaseElement) -> Result<LampConfig> {
        let mut values = BTreeMap::new();
        for (pos, v) in &self.values {
            values.insert(by.compose(pos)?, v.clone());
        }
        Ok(LampConfig {
            dim: self.dim,
            values,
        })
    }

    pub fn from_entries(
        dim: usize,
        entries: impl IntoIterator<Item = (BaseElement, Vec<BigInt>)>,
    ) -> Result<Self> {
        let mut lamp = LampConfig::zero(dim);
        for (pos, v) in entries {
            lamp.add_at(pos, &v)?;
        }
        Ok(lamp)
    }
}

/// The pair `(lamp, shift)`. Ordering is the canonical one: sorted support,
/// then shift.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WreathElement {
    lamp: LampConfig,
    shift: BaseElement,
}

impl WreathElement {
    pub fn new(lamp: LampConfig, shift: BaseElement) -> Result<Self> {
        if let Some(pos) = lamp.support().next() {
            check_rank(shift.rank(), pos.rank())?;
        }
        Ok(WreathElement { lamp, shift })
    }

    pub fn identity(d: usize, m: usize) -> Self {
        WreathElement {
            lamp: LampConfig::zero(d),
            shift: BaseElement::identity(m),
        }
    }

    /// Pure shift `(0, λ)`.
    pub fn shift_by(d: usize, shift: BaseElement) -> Self {
        WreathElement {
            lamp: LampConfig::zero(d),
            shift,
        }
    }

    /// `(f, e)` with a single lamp value at `pos`.
    pub fn lamp_at(pos: BaseElement, value: Vec<BigInt>) -> Result<Self> {
        let m = pos.rank();
        let lamp = LampConfig::from_entries(value.len(), [(pos, value)])?;
        Ok(WreathElement {
            lamp,
            shift: BaseElement::identity(m),
        })
    }

    pub fn lamp(&self) -> &LampConfig {
        &self.lamp
    }

    pub fn shift(&self) -> &BaseElement {
        &self.shift
    }

    pub fn d(&self) -> usize {
        self.lamp.dim
    }

    pub fn m(&self) -> usize {
        self.shift.rank()
    }

    pub fn is_identity(&self) -> bool {
        self.lamp.is_zero() && self.shift.is_identity()
    }

    fn check_ranks(&self, other: &WreathElement) -> Result<()> {
        check_rank(self.d(), other.d())?;
        check_rank(self.m(), other.m())
    }

    pub fn multiply(&self, other: &WreathElement) -> Result<WreathElement> {
        self.check_ranks(other)?;
        let mut lamp = self.lamp.clone();
        for (pos, v) in &other.lamp.values {
            lamp.add_at(self.shift.compose(pos)?, v)?;
        }
        Ok(WreathElement {
            lamp,
            shift: self.shift.compose(&other.shift)?,
        })
    }

    /// `(f, λ)^{-1} = (-f(λ·), λ^{-1})`.
    pub fn invert(&self) -> WreathElement {
        let values = self
            .lamp
            .values
            .iter()
            .map(|(pos, v)| {
                let moved = pos.difference(&self.shift).expect("ranks agree");
                (moved, v.iter().map(|x| -x).collect())
            })
            .collect();
        WreathElement {
            lamp: LampConfig {
                dim: self.lamp.dim,
                values,
            },
            shift: self.shift.inverse(),
        }
    }

    /// Parses the canonical text form `{pos:vec,...};shift`, e.g. `{(0):(1)};(0)`.
    /// `d_hint` supplies the lamp dimension when the support is empty.
    pub fn parse(text: &str, d_hint: Option<usize>) -> Result<WreathElement> {
        ElementParser::new(text).element(d_hint)
    }
}

impl fmt::Display for WreathElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (pos, v)) in self.lamp.values.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{pos}:")?;
            write_tuple(f, v.iter())?;
        }
        write!(f, "}};{}", self.shift)
    }
}

impl FromStr for WreathElement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        WreathElement::parse(s, None)
    }
}

impl Serialize for WreathElement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Deserializes from text; lamp dimension defaults to 1 for empty supports.
/// Records that carry `d` re-parse with the right hint afterwards.
impl<'de> Deserialize<'de> for WreathElement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        WreathElement::parse(&text, None).map_err(serde::de::Error::custom)
    }
}

impl WreathElement {
    /// Re-reads an element whose empty lamp may have defaulted to the wrong dimension.
    pub fn with_dim(self, d: usize) -> Result<WreathElement> {
        if self.lamp.is_zero() {
            Ok(WreathElement::shift_by(d, self.shift))
        } else {
            check_rank(d, self.d())?;
            Ok(self)
        }
    }
}

struct ElementParser<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> ElementParser<'a> {
    fn new(text: &'a str) -> Self {
        ElementParser { text, pos: 0 }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::parse(1, self.pos + 1, msg)
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn expect(&mut self, c: char) -> Result<()> {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(self.err(format!("expected '{c}'")))
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn integer(&mut self) -> Result<BigInt> {
        self.skip_ws();
        let start = self.pos;
        if matches!(self.peek(), Some('-') | Some('+')) {
            self.pos += 1;
        }
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        self.text[start..self.pos].parse::<BigInt>().map_err(|_| {
            self.pos = start;
            self.err("expected integer")
        })
    }

    fn tuple(&mut self) -> Result<Vec<BigInt>> {
        self.expect('(')?;
        let mut out = vec![self.integer()?];
        while self.eat(',') {
            out.push(self.integer()?);
        }
        self.expect(')')?;
        Ok(out)
    }

    fn element(&mut self, d_hint: Option<usize>) -> Result<WreathElement> {
        self.expect('{')?;
        let mut entries = Vec::new();
        if !self.eat('}') {
            loop {
                let at = self.pos;
                let pos = self.tuple()?;
                self.expect(':')?;
                let val = self.tuple()?;
                entries.push((at, BaseElement::new(pos), val));
                if self.eat('}') {
                    break;
                }
                self.expect(',')?;
            }
        }
        self.expect(';')?;
        let shift = BaseElement::new(self.tuple()?);
        self.skip_ws();
        if self.pos != self.text.len() {
            return Err(self.err("trailing input"));
        }
        let d = d_hint
            .or_else(|| entries.first().map(|(_, _, v)| v.len()))
            .unwrap_or(1);
        let mut lamp = LampConfig::zero(d);
        let mut seen = HashMap::new();
        for (at, pos, val) in entries {
            if pos.rank() != shift.rank() || val.len() != d {
                self.pos = at;
                return Err(self.err("inconsistent rank in lamp entry"));
            }
            if seen.insert(pos.clone(), ()).is_some() {
                self.pos = at;
                return Err(self.err("duplicate lamp position"));
            }
            lamp.add_at(pos, &val)?;
        }
        WreathElement::new(lamp, shift)
    }
}

/// Index into a [`GeneratorSet`].
pub type Word = Vec<usize>;

/// Standard generators of Z^d ≀ Z^m, in the fixed order
/// `s_1, s_1^{-1}, …, s_d, s_d^{-1}, t_1, t_1^{-1}, …, t_m, t_m^{-1}`
/// where `s_i = (t_i, e)` is the i-th lamp at the origin and `t_j` the j-th shift.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorSet {
    d: usize,
    m: usize,
    elements: Vec<WreathElement>,
}

impl GeneratorSet {
    pub fn new(d: usize, m: usize) -> Self {
        let mut elements = Vec::with_capacity(2 * (d + m));
        for i in 0..d {
            for sign in [1, -1] {
                let mut v = vec![BigInt::zero(); d];
                v[i] = BigInt::from(sign);
                elements.push(WreathElement::lamp_at(BaseElement::identity(m), v).unwrap());
            }
        }
        for j in 0..m {
            for sign in [1, -1] {
                elements.push(WreathElement::shift_by(d, BaseElement::unit(m, j, sign)));
            }
        }
        GeneratorSet { d, m, elements }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn get(&self, i: usize) -> &WreathElement {
        &self.elements[i]
    }

    pub fn elements(&self) -> &[WreathElement] {
        &self.elements
    }

    /// Index of the lamp generator `s_i` (0-based `i`).
    pub fn lamp_generator(&self, i: usize) -> usize {
        2 * i
    }

    /// Indices of `s_1, …, s_d`.
    pub fn lamp_generators(&self) -> Vec<usize> {
        (0..self.d).map(|i| 2 * i).collect()
    }

    pub fn name(&self, i: usize) -> String {
        let (letter, k) = if i < 2 * self.d {
            ('s', i / 2 + 1)
        } else {
            ('t', (i - 2 * self.d) / 2 + 1)
        };
        if i.is_multiple_of(2) {
            format!("{letter}{k}")
        } else {
            format!("{letter}{k}^-1")
        }
    }

    /// The product `g_{w_0} g_{w_1} ⋯ g_{w_n}`.
    pub fn evaluate(&self, word: &[usize]) -> Result<WreathElement> {
        let mut acc = WreathElement::identity(self.d, self.m);
        for &g in word {
            let gen = self.elements.get(g).ok_or_else(|| {
                Error::InvalidCertificate(format!("generator index {g} out of range"))
            })?;
            acc = acc.multiply(gen)?;
        }
        Ok(acc)
    }

    /// Elements of word length ≤ `radius`, ordered by word length and then
    /// canonically; identity first. Each carries the lexicographically least
    /// shortest word.
    pub fn ball(&self, radius: usize, max_radius: usize) -> Result<Vec<BallEntry>> {
        if radius > max_radius {
            return Err(Error::budget("ball radius", radius, max_radius as u64));
        }
        let identity = WreathElement::identity(self.d, self.m);
        let mut seen: HashMap<WreathElement, ()> = HashMap::new();
        seen.insert(identity.clone(), ());
        let mut layer = vec![BallEntry {
            element: identity,
            word: Vec::new(),
        }];
        let mut out = layer.clone();
        for _ in 0..radius {
            // next layer in lexicographic word order: first letter outermost
            let mut next = Vec::new();
            for (g, gen) in self.elements.iter().enumerate() {
                for entry in &layer {
                    let x = gen.multiply(&entry.element)?;
                    if seen.insert(x.clone(), ()).is_none() {
                        let mut word = Vec::with_capacity(entry.word.len() + 1);
                        word.push(g);
                        word.extend_from_slice(&entry.word);
                        next.push(BallEntry { element: x, word });
                    }
                }
            }
            let mut sorted = next.clone();
            sorted.sort_by(|a, b| a.element.cmp(&b.element));
            out.extend(sorted);
            layer = next;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BallEntry {
    pub element: WreathElement,
    pub word: Word,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn el(text: &str) -> WreathElement {
        text.parse().unwrap()
    }

    #[test]
    fn product_formula_example() {
        let a = el("{(0):(1)};(1)");
        let b = el("{(0):(1)};(0)");
        assert_eq!(a.multiply(&b).unwrap(), el("{(0):(1),(1):(1)};(1)"));
    }

    #[test]
    fn inverse_examples() {
        let a = el("{(0):(1)};(1)");
        assert_eq!(a.invert(), el("{(-1):(-1)};(-1)"));
        assert!(a.multiply(&a.invert()).unwrap().is_identity());
        let e = WreathElement::identity(1, 1);
        assert_eq!(e.invert(), e);
    }

    #[test]
    fn text_round_trip_and_errors() {
        let x = el("{ (0,1):(2,-3), (1,0):(0,1) } ; (4,-5)");
        assert_eq!(x.to_string(), "{(0,1):(2,-3),(1,0):(0,1)};(4,-5)");
        assert_eq!(el(&x.to_string()), x);
        // zero values are pruned
        assert_eq!(el("{(0):(0)};(0)"), WreathElement::identity(1, 1));
        let e = WreathElement::parse("{(0):(1)};", None).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, column: 11, .. }), "{e:?}");
        assert!(WreathElement::parse("{(0):(1),(0):(2)};(0)", None).is_err());
        assert!(WreathElement::parse("{(0,0):(1)};(0)", None).is_err());
        assert_eq!(
            WreathElement::parse("{};(1)", Some(3)).unwrap().d(),
            3
        );
    }

    #[test]
    fn rank_mismatch_is_reported() {
        let a = el("{(0):(1)};(0)");
        let b = el("{(0):(1,0)};(0)");
        assert!(matches!(a.multiply(&b), Err(Error::RankMismatch { .. })));
    }

    #[test]
    fn generator_names() {
        let g = GeneratorSet::new(2, 1);
        let names: Vec<_> = (0..g.len()).map(|i| g.name(i)).collect();
        assert_eq!(names, ["s1", "s1^-1", "s2", "s2^-1", "t1", "t1^-1"]);
        assert_eq!(g.get(2).to_string(), "{(0):(0,1)};(0)");
    }

    #[test]
    fn ball_small_radii() {
        let g = GeneratorSet::new(1, 1);
        let b0 = g.ball(0, 4).unwrap();
        assert_eq!(b0.len(), 1);
        assert!(b0[0].element.is_identity());
        let b1 = g.ball(1, 4).unwrap();
        let texts: Vec<_> = b1.iter().map(|e| e.element.to_string()).collect();
        assert_eq!(
            texts,
            ["{};(0)", "{};(-1)", "{};(1)", "{(0):(-1)};(0)", "{(0):(1)};(0)"]
        );
        assert!(matches!(g.ball(5, 4), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn ball_is_nested_and_words_evaluate() {
        let g = GeneratorSet::new(1, 1);
        let b2 = g.ball(2, 4).unwrap();
        let b3 = g.ball(3, 4).unwrap();
        assert_eq!(&b3[..b2.len()], &b2[..]);
        for entry in &b3 {
            assert!(entry.word.len() <= 3);
            assert_eq!(g.evaluate(&entry.word).unwrap(), entry.element);
        }
        // sizes by brute force over all words of length ≤ 2
        let mut all = std::collections::BTreeSet::new();
        for a in 0..=4 {
            for b in 0..=4 {
                let w: Vec<usize> = [a, b].into_iter().filter(|&x| x < 4).collect();
                all.insert(g.evaluate(&w).unwrap());
            }
        }
        assert_eq!(all.len(), b2.len());
    }

    fn arb_element() -> impl Strategy<Value = WreathElement> {
        (
            proptest::collection::vec((-3i64..3, -2i64..3), 0..4),
            -4i64..4,
        )
            .prop_map(|(entries, shift)| {
                let lamp = LampConfig::from_entries(
                    1,
                    entries
                        .into_iter()
                        .map(|(p, v)| (BaseElement::from_i64s(&[p]), vec![BigInt::from(v)])),
                )
                .unwrap();
                WreathElement::new(lamp, BaseElement::from_i64s(&[shift])).unwrap()
            })
    }

    proptest! {
        #[test]
        fn associativity(a in arb_element(), b in arb_element(), c in arb_element()) {
            let left = a.multiply(&b).unwrap().multiply(&c).unwrap();
            let right = a.multiply(&b.multiply(&c).unwrap()).unwrap();
            prop_assert_eq!(left, right);
        }

        #[test]
        fn identity_and_inverse(a in arb_element()) {
            let e = WreathElement::identity(1, 1);
            prop_assert_eq!(e.multiply(&a).unwrap(), a.clone());
            prop_assert_eq!(a.multiply(&e).unwrap(), a.clone());
            prop_assert!(a.multiply(&a.invert()).unwrap().is_identity());
            prop_assert!(a.invert().multiply(&a).unwrap().is_identity());
            prop_assert_eq!(a.invert().invert(), a);
        }

        #[test]
        fn support_of_product(a in arb_element(), b in arb_element()) {
            let p = a.multiply(&b).unwrap();
            for pos in p.lamp().support() {
                let in_a = a.lamp().get(pos).is_some();
                let back = pos.difference(a.shift()).unwrap();
                let in_b = b.lamp().get(&back).is_some();
                prop_assert!(in_a || in_b);
            }
        }

        #[test]
        fn text_round_trip(a in arb_element()) {
            prop_assert_eq!(WreathElement::parse(&a.to_string(), Some(1)).unwrap(), a);
        }
    }
}
