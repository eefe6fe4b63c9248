//! Non-descending compositions stored in block form `q^e`.

use crate::error::CoreError;
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;

/// One block `size^mult` of equal parts.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Block {
    pub size: u64,
    pub mult: BigInt,
}

/// A non-descending sequence of positive parts, run-length encoded.
///
/// Block sizes are strictly increasing and multiplicities positive, so the
/// encoding is canonical and equality of compositions is structural.
/// Multiplicities are arbitrary precision because family instances have
/// astronomically many parts.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Composition {
    blocks: Vec<Block>,
}

/// Largest composition we are willing to expand into an explicit part list.
pub const EXPAND_LIMIT: u64 = 50_000_000;

impl Composition {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_parts(parts: &[u64]) -> Result<Self, CoreError> {
        let mut comp = Self::empty();
        for (i, &p) in parts.iter().enumerate() {
            if p == 0 {
                return Err(CoreError::NonPositivePart { index: i + 1 });
            }
            comp.push_block(p, BigInt::one())
                .map_err(|e| match e {
                    CoreError::Descending { value, previous, .. } => CoreError::Descending {
                        index: BigInt::from(i + 1),
                        value,
                        previous,
                    },
                    other => other,
                })?;
        }
        Ok(comp)
    }

    /// Builds from `(size, multiplicity)` pairs. Adjacent equal sizes merge.
    pub fn from_blocks<I>(blocks: I) -> Result<Self, CoreError>
    where
        I: IntoIterator<Item = (u64, BigInt)>,
    {
        let mut comp = Self::empty();
        for (size, mult) in blocks {
            comp.push_block(size, mult)?;
        }
        Ok(comp)
    }

    /// Appends `size^mult`, keeping the encoding canonical.
    pub fn push_block(&mut self, size: u64, mult: BigInt) -> Result<(), CoreError> {
        if size == 0 {
            return Err(CoreError::NonPositivePart { index: 0 });
        }
        if !mult.is_positive() {
            return Err(CoreError::NonPositive { what: "block multiplicity", value: mult });
        }
        let previous = self.last();
        match previous {
            Some(p) if p == size => self.blocks.last_mut().expect("nonempty").mult += mult,
            Some(p) if p > size => {
                return Err(CoreError::Descending { index: self.len() + 1, value: size, previous: p })
            }
            _ => self.blocks.push(Block { size, mult }),
        }
        Ok(())
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Number of parts.
    pub fn len(&self) -> BigInt {
        self.blocks.iter().map(|b| &b.mult).sum()
    }

    /// Sum of all parts.
    pub fn total(&self) -> BigInt {
        self.blocks.iter().map(|b| &b.mult * b.size).sum()
    }

    pub fn first(&self) -> Option<u64> {
        self.blocks.first().map(|b| b.size)
    }

    pub fn last(&self) -> Option<u64> {
        self.blocks.last().map(|b| b.size)
    }

    /// Part `p_j`, 1-based.
    pub fn part(&self, j: &BigInt) -> Option<u64> {
        if !j.is_positive() {
            return None;
        }
        let mut end = BigInt::zero();
        for b in &self.blocks {
            end += &b.mult;
            if *j <= end {
                return Some(b.size);
            }
        }
        None
    }

    /// Prefix sum `P_j = p_1 + ... + p_j` for `0 <= j <= len`.
    pub fn prefix_sum(&self, j: &BigInt) -> Option<BigInt> {
        if j.is_negative() {
            return None;
        }
        let mut left = j.clone();
        let mut acc = BigInt::zero();
        for b in &self.blocks {
            if left.is_zero() {
                break;
            }
            let take = if left < b.mult { left.clone() } else { b.mult.clone() };
            acc += &take * b.size;
            left -= take;
        }
        left.is_zero().then_some(acc)
    }

    /// `(j, P_j)` at the last index of every block.
    pub fn block_ends(&self) -> Vec<(BigInt, BigInt)> {
        let mut j = BigInt::zero();
        let mut p = BigInt::zero();
        self.blocks
            .iter()
            .map(|b| {
                j += &b.mult;
                p += &b.mult * b.size;
                (j.clone(), p.clone())
            })
            .collect()
    }

    /// Expands into explicit parts, or `None` beyond [`EXPAND_LIMIT`].
    pub fn parts(&self) -> Option<Vec<u64>> {
        let len = self.len().to_u64().filter(|&l| l <= EXPAND_LIMIT)?;
        let mut out = Vec::with_capacity(len as usize);
        for b in &self.blocks {
            let m = b.mult.to_usize()?;
            out.extend(std::iter::repeat(b.size).take(m));
        }
        Some(out)
    }

    /// Concatenation; fails if the result would descend.
    pub fn concat(&self, tail: &Composition) -> Result<Composition, CoreError> {
        let mut out = self.clone();
        for b in &tail.blocks {
            out.push_block(b.size, b.mult.clone())?;
        }
        Ok(out)
    }

    /// The first `l` parts.
    pub fn prefix(&self, l: &BigInt) -> Option<Composition> {
        let mut left = l.clone();
        if left.is_negative() {
            return None;
        }
        let mut out = Composition::empty();
        for b in &self.blocks {
            if left.is_zero() {
                break;
            }
            let take = if left < b.mult { left.clone() } else { b.mult.clone() };
            left -= &take;
            out.blocks.push(Block { size: b.size, mult: take });
        }
        left.is_zero().then_some(out)
    }
}

impl fmt::Display for Composition {
    /// Block notation, e.g. `[2^9, 3^2]`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            if b.mult.is_one() {
                write!(f, "{}", b.size)?;
            } else {
                write!(f, "{}^{}", b.size, b.mult)?;
            }
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(x: i64) -> BigInt {
        BigInt::from(x)
    }

    #[test]
    fn parts_and_blocks_agree() {
        let c = Composition::from_parts(&[2, 2, 3, 5, 5, 5]).unwrap();
        assert_eq!(c.blocks().len(), 3);
        assert_eq!(c.len(), big(6));
        assert_eq!(c.total(), big(22));
        assert_eq!(c.parts().unwrap(), vec![2, 2, 3, 5, 5, 5]);
        let d = Composition::from_blocks([(2, big(2)), (3, big(1)), (5, big(3))]).unwrap();
        assert_eq!(c, d);
        assert_eq!(c.to_string(), "[2^2, 3, 5^3]");
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(
            Composition::from_parts(&[3, 2]),
            Err(CoreError::Descending { index: big(2), value: 2, previous: 3 })
        );
        assert_eq!(
            Composition::from_parts(&[0, 2]),
            Err(CoreError::NonPositivePart { index: 1 })
        );
        assert!(Composition::from_blocks([(2, big(0))]).is_err());
    }

    #[test]
    fn positional_queries() {
        let c = Composition::from_blocks([(2, big(9)), (3, big(2))]).unwrap();
        assert_eq!(c.part(&big(9)), Some(2));
        assert_eq!(c.part(&big(10)), Some(3));
        assert_eq!(c.part(&big(12)), None);
        assert_eq!(c.prefix_sum(&big(10)), Some(big(21)));
        assert_eq!(c.prefix_sum(&big(12)), None);
        assert_eq!(c.block_ends(), vec![(big(9), big(18)), (big(11), big(24))]);
        assert_eq!(c.prefix(&big(10)).unwrap().to_string(), "[2^9, 3]");
    }

    #[test]
    fn huge_multiplicities_stay_symbolic() {
        let m: BigInt = "10000000000000000".parse().unwrap();
        let c = Composition::from_blocks([(2, m.clone()), (3, m.clone())]).unwrap();
        assert_eq!(c.total(), &m * 5);
        assert!(c.parts().is_none());
        assert_eq!(c.part(&(&m + 1)), Some(3));
    }
}
