//! Numeric scores used to rank query nodes during decomposition.
//!
//! Selectivity is a ratio of two counts, so the decomposer is written against
//! [`Score`] and can run on exact rationals or on floats. Exact rationals are
//! the default because tie-breaking between equal sums must not depend on
//! rounding.

use std::cmp::Ordering;
use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{Num, NumCast};

/// A scalar that can hold `count / count` and be compared.
pub trait Score: Num + PartialOrd + Clone + Debug + Send + Sync {
    fn from_counts(numerator: u64, denominator: u64) -> Self;

    /// Lossy view for display and serialization.
    fn to_f64(&self) -> f64;
}

macro_rules! float_score {
    ($($t:ty),*) => {$(
        impl Score for $t {
            fn from_counts(numerator: u64, denominator: u64) -> Self {
                let n: $t = NumCast::from(numerator).unwrap_or(<$t>::INFINITY);
                let d: $t = NumCast::from(denominator).unwrap_or(<$t>::INFINITY);
                n / d
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }
        }
    )*};
}

float_score!(f32, f64);

impl Score for Ratio<u64> {
    fn from_counts(numerator: u64, denominator: u64) -> Self {
        Ratio::new(numerator, denominator)
    }

    fn to_f64(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

impl Score for Ratio<u128> {
    fn from_counts(numerator: u64, denominator: u64) -> Self {
        Ratio::new(numerator as u128, denominator as u128)
    }

    fn to_f64(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

/// The f-value of a query node: `degree / freq(label)`.
///
/// A label with no data nodes cannot be matched at all, which makes the node
/// infinitely selective. `Impossible` ranks above every finite value.
#[derive(Debug, Clone, PartialEq)]
pub enum Selectivity<S> {
    Impossible,
    Finite(S),
}

impl<S: Score> Selectivity<S> {
    pub fn new(degree: usize, freq: u64) -> Self {
        if freq == 0 {
            Selectivity::Impossible
        } else {
            Selectivity::Finite(S::from_counts(degree as u64, freq))
        }
    }

    pub fn is_impossible(&self) -> bool {
        matches!(self, Selectivity::Impossible)
    }

    pub fn value(&self) -> Option<&S> {
        match self {
            Selectivity::Finite(s) => Some(s),
            Selectivity::Impossible => None,
        }
    }

    /// Sum of two f-values, as used to rank an edge.
    pub fn edge_score(&self, other: &Self) -> EdgeScore<S> {
        match (self, other) {
            (Selectivity::Finite(a), Selectivity::Finite(b)) => EdgeScore {
                impossible: 0,
                sum: a.clone() + b.clone(),
            },
            (Selectivity::Finite(s), Selectivity::Impossible)
            | (Selectivity::Impossible, Selectivity::Finite(s)) => EdgeScore {
                impossible: 1,
                sum: s.clone(),
            },
            (Selectivity::Impossible, Selectivity::Impossible) => EdgeScore {
                impossible: 2,
                sum: S::zero(),
            },
        }
    }

    pub fn compare(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Selectivity::Impossible, Selectivity::Impossible) => Ordering::Equal,
            (Selectivity::Impossible, _) => Ordering::Greater,
            (_, Selectivity::Impossible) => Ordering::Less,
            (Selectivity::Finite(a), Selectivity::Finite(b)) => {
                a.partial_cmp(b).unwrap_or(Ordering::Equal)
            }
        }
    }
}

/// `f(u) + f(v)` with infinite terms counted separately.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeScore<S> {
    impossible: u8,
    sum: S,
}

impl<S: Score> EdgeScore<S> {
    pub fn compare(&self, other: &Self) -> Ordering {
        self.impossible
            .cmp(&other.impossible)
            .then_with(|| self.sum.partial_cmp(&other.sum).unwrap_or(Ordering::Equal))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_and_float_agree_on_simple_ratios() {
        let exact = Selectivity::<Ratio<u64>>::new(4, 10);
        let float = Selectivity::<f64>::new(4, 10);
        assert_eq!(exact.value().unwrap(), &Ratio::new(2, 5));
        assert!((float.value().unwrap() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn impossible_outranks_everything() {
        let imp = Selectivity::<f64>::new(1, 0);
        let big = Selectivity::<f64>::new(1000, 1);
        assert_eq!(imp.compare(&big), Ordering::Greater);
        let a = imp.edge_score(&Selectivity::new(0, 5));
        let b = big.edge_score(&big);
        assert_eq!(a.compare(&b), Ordering::Greater);
    }

    #[test]
    fn exact_sums_tie_where_floats_might_not() {
        // 1/10 + 2/10 vs 3/10
        let s = |d| Selectivity::<Ratio<u64>>::new(d, 10);
        let lhs = s(1).edge_score(&s(2));
        let rhs = s(3).edge_score(&s(0));
        assert_eq!(lhs.compare(&rhs), Ordering::Equal);
    }
}
