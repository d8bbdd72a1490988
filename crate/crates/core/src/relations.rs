//! Comparing one agent's allocations under the downward-lexicographic (DL)
//! and expected-utility (EU) relations.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{PsError, Result};
use crate::model::{LinearOrder, UtilityProfile};
use crate::rational::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Comparison {
    FirstPreferred,
    SecondPreferred,
    Indifferent,
}

impl From<Ordering> for Comparison {
    fn from(o: Ordering) -> Self {
        match o {
            Ordering::Greater => Comparison::FirstPreferred,
            Ordering::Less => Comparison::SecondPreferred,
            Ordering::Equal => Comparison::Indifferent,
        }
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(PsError::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// The house where the rows first differ, scanning from the top of `order`, decides.
pub fn dl_compare(
    row_p: &[Rational],
    row_q: &[Rational],
    order: &LinearOrder,
) -> Result<Comparison> {
    check_len(row_p.len(), row_q.len())?;
    check_len(row_p.len(), order.len())?;
    Ok(order
        .ranking()
        .iter()
        .map(|&h| row_p[h].cmp(&row_q[h]))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
        .into())
}

pub fn eu_value(row: &[Rational], agent_utils: &[Rational]) -> Result<Rational> {
    check_len(row.len(), agent_utils.len())?;
    Ok(row.iter().zip(agent_utils).map(|(p, u)| p * u).sum())
}

pub fn eu_compare(
    row_p: &[Rational],
    row_q: &[Rational],
    agent_utils: &[Rational],
) -> Result<Comparison> {
    check_len(row_p.len(), row_q.len())?;
    Ok(eu_value(row_p, agent_utils)?
        .cmp(&eu_value(row_q, agent_utils)?)
        .into())
}

/// How agents rank their own allocations.
#[derive(Clone, Copy, Debug)]
pub enum Relation<'a> {
    /// Downward lexicographic with respect to each agent's true order.
    Dl,
    /// Expected utility under the given (consistent) utilities.
    Eu(&'a UtilityProfile),
}

impl<'a> Relation<'a> {
    pub fn kind(&self) -> RelationKind {
        match self {
            Relation::Dl => RelationKind::Dl,
            Relation::Eu(_) => RelationKind::Eu,
        }
    }

    pub fn utilities(&self) -> Option<&'a UtilityProfile> {
        match self {
            Relation::Dl => None,
            Relation::Eu(u) => Some(u),
        }
    }

    /// An totally ordered key: larger means better for `agent`.
    pub(crate) fn key(&self, agent: usize, true_order: &LinearOrder, row: &[Rational]) -> Key {
        match self {
            Relation::Dl => Key::Lex(
                true_order
                    .ranking()
                    .iter()
                    .map(|&h| row[h].clone())
                    .collect(),
            ),
            Relation::Eu(u) => {
                Key::Utility(eu_value(row, u.row(agent)).expect("dimensions checked"))
            }
        }
    }

    pub fn payoff(&self, agent: usize, row: &[Rational]) -> Payoff {
        match self {
            Relation::Dl => Payoff::Allocation(row.to_vec()),
            Relation::Eu(u) => {
                Payoff::Utility(eu_value(row, u.row(agent)).expect("dimensions checked"))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationKind {
    Eu,
    Dl,
}

/// Comparison key: EU value, or the allocation listed in the agent's true order
/// (so lexicographic order on the vector is the DL relation).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) enum Key {
    Utility(Rational),
    Lex(Vec<Rational>),
}

/// What an agent gets from an outcome, for reporting.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Payoff {
    Utility(Rational),
    /// Allocation row indexed by house.
    Allocation(Vec<Rational>),
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn ints(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&k| Rational::from_integer(k)).collect()
    }

    #[test]
    fn dl_examples() {
        let truthful = [q(3, 4), q(0, 1), q(1, 4)];
        let manipulated = [q(1, 2), q(1, 3), q(1, 6)];
        let id = LinearOrder::identity(3);
        assert_eq!(
            dl_compare(&truthful, &manipulated, &id).unwrap(),
            Comparison::FirstPreferred
        );
        assert_eq!(
            dl_compare(&truthful, &truthful, &id).unwrap(),
            Comparison::Indifferent
        );
        let h2_first = LinearOrder::new(vec![1, 0]).unwrap();
        assert_eq!(
            dl_compare(&ints(&[0, 1]), &ints(&[1, 0]), &h2_first).unwrap(),
            Comparison::FirstPreferred
        );
        assert!(dl_compare(&ints(&[0, 1]), &ints(&[1]), &h2_first).is_err());
    }

    #[test]
    fn eu_examples() {
        let u = ints(&[7, 6, 0]);
        let truthful = [q(3, 4), q(0, 1), q(1, 4)];
        let manipulated = [q(1, 2), q(1, 3), q(1, 6)];
        assert_eq!(eu_value(&truthful, &u).unwrap(), q(21, 4));
        assert_eq!(eu_value(&manipulated, &u).unwrap(), q(11, 2));
        assert_eq!(
            eu_compare(&truthful, &manipulated, &u).unwrap(),
            Comparison::SecondPreferred
        );
        assert_eq!(
            eu_value(&truthful, &ints(&[0, 0, 0])).unwrap(),
            Rational::zero()
        );
        assert_eq!(
            eu_compare(&truthful, &truthful, &u).unwrap(),
            Comparison::Indifferent
        );
        assert_eq!(
            eu_compare(&ints(&[1, 0]), &ints(&[0, 1]), &ints(&[2, 1])).unwrap(),
            Comparison::FirstPreferred
        );
        assert!(eu_value(&truthful, &ints(&[1])).is_err());
    }

    #[test]
    fn cycle_instance_truthful_eu() {
        let p1 = [q(1, 2), q(1, 1), q(1, 2), q(1, 2), q(0, 1)];
        let p2 = [q(1, 2), q(0, 1), q(1, 2), q(1, 2), q(1, 1)];
        assert_eq!(eu_value(&p1, &ints(&[0, 4, 3, 1, 2])).unwrap(), q(6, 1));
        assert_eq!(eu_value(&p2, &ints(&[1, 0, 3, 2, 4])).unwrap(), q(7, 1));
    }

    fn arb_row(m: usize) -> impl Strategy<Value = Vec<Rational>> {
        prop::collection::vec((0i64..4, 1i64..4).prop_map(|(a, b)| q(a, b)), m)
    }

    proptest! {
        #[test]
        fn dl_is_a_strict_weak_order(a in arb_row(4), b in arb_row(4), c in arb_row(4), perm in Just(()).prop_perturb(|_, mut rng| {
            let mut v: Vec<usize> = (0..4).collect();
            for i in (1..4).rev() { v.swap(i, (rng.next_u32() as usize) % (i + 1)); }
            v
        })) {
            let order = LinearOrder::new(perm).unwrap();
            let ab = dl_compare(&a, &b, &order).unwrap();
            let ba = dl_compare(&b, &a, &order).unwrap();
            let flipped = match ab {
                Comparison::FirstPreferred => Comparison::SecondPreferred,
                Comparison::SecondPreferred => Comparison::FirstPreferred,
                Comparison::Indifferent => Comparison::Indifferent,
            };
            prop_assert_eq!(ba, flipped);
            prop_assert_eq!(ab == Comparison::Indifferent, a == b);
            let bc = dl_compare(&b, &c, &order).unwrap();
            if ab == Comparison::FirstPreferred && bc == Comparison::FirstPreferred {
                prop_assert_eq!(dl_compare(&a, &c, &order).unwrap(), Comparison::FirstPreferred);
            }
        }

        #[test]
        fn steep_utilities_agree_with_dl(a in arb_row(3), b in arb_row(3)) {
            // Entries lie in [0, 3] with denominators up to 3, so any nonzero
            // difference is at least 1/6; a utility ratio of 100 per rank lets
            // the top differing house outweigh everything below it.
            let order = LinearOrder::identity(3);
            let steep: Vec<Rational> = (0..3u32).map(|j| Rational::from_integer(100i64.pow(2 - j))).collect();
            prop_assert_eq!(dl_compare(&a, &b, &order).unwrap(), eu_compare(&a, &b, &steep).unwrap());
        }
    }
}
