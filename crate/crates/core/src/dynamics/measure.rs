use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

/// The uniform probability measure on a finite level of `size` points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniformMeasure {
    size: BigInt,
}

impl UniformMeasure {
    pub fn new(size: BigInt) -> Self {
        assert!(size >= BigInt::one(), "uniform measure on an empty level");
        UniformMeasure { size }
    }

    pub fn size(&self) -> &BigInt {
        &self.size
    }

    pub fn singleton(&self) -> BigRational {
        BigRational::new(BigInt::one(), self.size.clone())
    }

    pub fn of_count(&self, count: impl Into<BigInt>) -> BigRational {
        BigRational::new(count.into(), self.size.clone())
    }

    /// Mass of the pushforward on a coarser level, from fiber cardinalities.
    pub fn pushforward(&self, fiber_sizes: &[u64]) -> Vec<BigRational> {
        fiber_sizes.iter().map(|&n| self.of_count(n)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ratio;

    #[test]
    fn masses() {
        let mu = UniformMeasure::new(BigInt::from(32));
        assert_eq!(mu.singleton(), ratio(1, 32));
        assert_eq!(mu.of_count(24), ratio(3, 4));
        assert_eq!(mu.of_count(32), BigRational::one());
        assert_eq!(mu.pushforward(&[8, 8, 8, 8]), vec![ratio(1, 4); 4]);
    }
}
