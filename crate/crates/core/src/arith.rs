//! Exact arithmetic: arbitrary-precision rationals and lexicographically
//! ordered perturbed costs.
//!
//! Every optimization comparison in this crate goes through [`LexCost`], a
//! rational "base" part plus a sparse vector of coefficients of the symbolic
//! infinitesimals ε₁ ≫ ε₂ ≫ …  (think ε_s = x^s for all sufficiently small
//! x > 0). Comparing two costs compares the base parts first and, on a tie,
//! the ε coefficient at the smallest rank where they differ. `(LexCost, +, ≤)`
//! is a linearly ordered abelian group, which is all the assignment solver
//! needs.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, AddAssign, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

/// Exact rational number, always in lowest terms with positive denominator.
pub type Rational = num_rational::BigRational;

/// Rational from an integer pair. Panics on a zero denominator.
pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

/// Rational from an integer.
pub fn rat(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

/// A cost value `base + Σ_s pert[s]·ε_s` with symbolic infinitesimals ε_s.
///
/// `pert` is sparse, sorted by rank, and never stores zero coefficients.
/// Plain edge costs carry a single `+1` coefficient at the edge's rank;
/// rational coefficients appear when arrangement vertices are solved for
/// exactly (their coordinates are ε-linear).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct LexCost {
    base: Rational,
    pert: Vec<(u32, Rational)>,
}

impl LexCost {
    pub fn zero() -> Self {
        LexCost {
            base: Rational::zero(),
            pert: Vec::new(),
        }
    }

    pub fn from_base(base: Rational) -> Self {
        LexCost {
            base,
            pert: Vec::new(),
        }
    }

    pub fn from_int(value: i64) -> Self {
        Self::from_base(rat(value))
    }

    /// The unit infinitesimal ε at the given rank.
    pub fn epsilon(rank: u32) -> Self {
        LexCost {
            base: Rational::zero(),
            pert: alloc::vec![(rank, Rational::one())],
        }
    }

    /// `base + ε_rank`, the shape of every lex-mode edge cost.
    pub fn with_epsilon(base: Rational, rank: u32) -> Self {
        LexCost {
            base,
            pert: alloc::vec![(rank, Rational::one())],
        }
    }

    pub fn base(&self) -> &Rational {
        &self.base
    }

    /// Sparse ε coefficients, sorted by rank.
    pub fn pert(&self) -> &[(u32, Rational)] {
        &self.pert
    }

    pub fn is_zero(&self) -> bool {
        self.base.is_zero() && self.pert.is_empty()
    }

    /// Sign of the value for all sufficiently small positive ε.
    pub fn sign(&self) -> Ordering {
        if !self.base.is_zero() {
            return if self.base.is_positive() {
                Ordering::Greater
            } else {
                Ordering::Less
            };
        }
        match self.pert.first() {
            None => Ordering::Equal,
            Some((_, c)) => {
                if c.is_positive() {
                    Ordering::Greater
                } else {
                    Ordering::Less
                }
            }
        }
    }

    /// Multiply by a rational scalar.
    pub fn scale(&self, factor: &Rational) -> Self {
        if factor.is_zero() {
            return Self::zero();
        }
        LexCost {
            base: &self.base * factor,
            pert: self
                .pert
                .iter()
                .map(|(rank, c)| (*rank, c * factor))
                .collect(),
        }
    }

    /// Evaluate at explicit values `eps[rank]` for each ε_rank.
    pub fn eval(&self, eps: &[Rational]) -> Rational {
        let mut acc = self.base.clone();
        for (rank, c) in &self.pert {
            acc += c * &eps[*rank as usize];
        }
        acc
    }

    fn merge(&self, other: &Self, negate_other: bool) -> Self {
        let base = if negate_other {
            &self.base - &other.base
        } else {
            &self.base + &other.base
        };
        let mut pert = Vec::with_capacity(self.pert.len() + other.pert.len());
        let mut ia = 0;
        let mut ib = 0;
        while ia < self.pert.len() || ib < other.pert.len() {
            let next = match (self.pert.get(ia), other.pert.get(ib)) {
                (Some((ra, ca)), Some((rb, cb))) => match ra.cmp(rb) {
                    Ordering::Less => {
                        ia += 1;
                        (*ra, ca.clone())
                    }
                    Ordering::Greater => {
                        ib += 1;
                        (*rb, if negate_other { -cb } else { cb.clone() })
                    }
                    Ordering::Equal => {
                        ia += 1;
                        ib += 1;
                        let c = if negate_other { ca - cb } else { ca + cb };
                        (*ra, c)
                    }
                },
                (Some((ra, ca)), None) => {
                    ia += 1;
                    (*ra, ca.clone())
                }
                (None, Some((rb, cb))) => {
                    ib += 1;
                    (*rb, if negate_other { -cb } else { cb.clone() })
                }
                (None, None) => unreachable!(),
            };
            if !next.1.is_zero() {
                pert.push(next);
            }
        }
        LexCost { base, pert }
    }
}

impl Ord for LexCost {
    fn cmp(&self, other: &Self) -> Ordering {
        let base_cmp = self.base.cmp(&other.base);
        if base_cmp != Ordering::Equal {
            return base_cmp;
        }
        // Smaller rank is strictly more significant: the first differing
        // coefficient decides.
        let mut ia = 0;
        let mut ib = 0;
        loop {
            match (self.pert.get(ia), other.pert.get(ib)) {
                (None, None) => return Ordering::Equal,
                (Some((_, ca)), None) => {
                    return if ca.is_positive() {
                        Ordering::Greater
                    } else {
                        Ordering::Less
                    }
                }
                (None, Some((_, cb))) => {
                    return if cb.is_positive() {
                        Ordering::Less
                    } else {
                        Ordering::Greater
                    }
                }
                (Some((ra, ca)), Some((rb, cb))) => match ra.cmp(rb) {
                    Ordering::Less => {
                        return if ca.is_positive() {
                            Ordering::Greater
                        } else {
                            Ordering::Less
                        }
                    }
                    Ordering::Greater => {
                        return if cb.is_positive() {
                            Ordering::Less
                        } else {
                            Ordering::Greater
                        }
                    }
                    Ordering::Equal => {
                        let c = ca.cmp(cb);
                        if c != Ordering::Equal {
                            return c;
                        }
                        ia += 1;
                        ib += 1;
                    }
                },
            }
        }
    }
}

impl PartialOrd for LexCost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for LexCost {
    type Output = LexCost;
    fn add(self, rhs: LexCost) -> LexCost {
        self.merge(&rhs, false)
    }
}

impl Add for &LexCost {
    type Output = LexCost;
    fn add(self, rhs: &LexCost) -> LexCost {
        self.merge(rhs, false)
    }
}

impl Sub for LexCost {
    type Output = LexCost;
    fn sub(self, rhs: LexCost) -> LexCost {
        self.merge(&rhs, true)
    }
}

impl Sub for &LexCost {
    type Output = LexCost;
    fn sub(self, rhs: &LexCost) -> LexCost {
        self.merge(rhs, true)
    }
}

impl AddAssign<&LexCost> for LexCost {
    fn add_assign(&mut self, rhs: &LexCost) {
        *self = self.merge(rhs, false);
    }
}

impl SubAssign<&LexCost> for LexCost {
    fn sub_assign(&mut self, rhs: &LexCost) {
        *self = self.merge(rhs, true);
    }
}

impl Neg for LexCost {
    type Output = LexCost;
    fn neg(self) -> LexCost {
        LexCost {
            base: -self.base,
            pert: self.pert.into_iter().map(|(r, c)| (r, -c)).collect(),
        }
    }
}

impl Neg for &LexCost {
    type Output = LexCost;
    fn neg(self) -> LexCost {
        LexCost {
            base: -&self.base,
            pert: self.pert.iter().map(|(r, c)| (*r, -c)).collect(),
        }
    }
}

impl fmt::Debug for LexCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.base)?;
        for (rank, c) in &self.pert {
            write!(f, " + {}ε{}", c, rank)?;
        }
        Ok(())
    }
}
