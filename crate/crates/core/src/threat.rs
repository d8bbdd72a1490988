//! The two-agent threat profile.
//!
//! Each round takes both agents' top remaining houses `h` (agent 1) and `h'`
//! (agent 2). Both lists get their own top house next; if the tops differ,
//! each list then also gets the opponent's top, so that each agent "threatens"
//! to eat the other's favourite right after its own. Both houses are then
//! removed from both remaining lists.
//!
//! The resulting profile yields the truthful PS assignment and is a DL
//! equilibrium, hence an EU equilibrium for any consistent utilities.

use serde::Serialize;

use crate::bounds::Bounds;
use crate::equilibria::verify_pne;
use crate::error::{PsError, Result};
use crate::model::{Instance, LinearOrder, UtilityProfile};
use crate::ps::ps_assignment;
use crate::relations::Relation;

/// Threat profile `(Q1, Q2)` for true orders `order1`, `order2`.
pub fn threat_profile(
    order1: &LinearOrder,
    order2: &LinearOrder,
) -> Result<(LinearOrder, LinearOrder)> {
    threat_profile_counted(order1, order2).map(|(q1, q2, _)| (q1, q2))
}

/// Same as [`threat_profile`], also returning the number of list-cursor
/// advances and appends performed (linear in `m`).
pub fn threat_profile_counted(
    order1: &LinearOrder,
    order2: &LinearOrder,
) -> Result<(LinearOrder, LinearOrder, usize)> {
    if order1.len() != order2.len() {
        return Err(PsError::DimensionMismatch {
            expected: order1.len(),
            found: order2.len(),
        });
    }
    let (p1, p2) = (order1.ranking(), order2.ranking());
    let m = p1.len();
    let mut deleted = vec![false; m];
    let (mut c1, mut c2) = (0usize, 0usize);
    let mut q1 = Vec::with_capacity(m);
    let mut q2 = Vec::with_capacity(m);
    let mut ops = 0usize;

    loop {
        while c1 < m && deleted[p1[c1]] {
            c1 += 1;
            ops += 1;
        }
        while c2 < m && deleted[p2[c2]] {
            c2 += 1;
            ops += 1;
        }
        if c1 == m || c2 == m {
            break;
        }
        let (h, h2) = (p1[c1], p2[c2]);
        q1.push(h);
        q2.push(h2);
        deleted[h] = true;
        deleted[h2] = true;
        ops += 2;
        if h != h2 {
            q1.push(h2);
            q2.push(h);
            ops += 2;
        }
    }
    debug_assert_eq!(q1.len(), m);
    Ok((
        LinearOrder::from_vec_unchecked(q1),
        LinearOrder::from_vec_unchecked(q2),
        ops,
    ))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ThreatReport {
    pub q1: LinearOrder,
    pub q2: LinearOrder,
    /// PS on the threat profile equals PS on the truthful profile.
    pub same_assignment: bool,
    /// The threat profile is a DL equilibrium with respect to the true orders.
    pub dl_pne: bool,
    /// EU equilibrium status for each supplied utility profile.
    pub eu_pne: Vec<bool>,
}

impl ThreatReport {
    pub fn falsifications(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.same_assignment {
            out.push("assignment differs from truthful".to_string());
        }
        if !self.dl_pne {
            out.push("not a DL equilibrium".to_string());
        }
        for (k, ok) in self.eu_pne.iter().enumerate() {
            if !ok {
                out.push(format!("not an EU equilibrium for utility profile {k}"));
            }
        }
        out
    }

    pub fn holds(&self) -> bool {
        self.falsifications().is_empty()
    }
}

/// Builds the threat profile and checks its guarantees exhaustively.
pub fn check_threat_guarantees(
    order1: &LinearOrder,
    order2: &LinearOrder,
    utilities: &[UtilityProfile],
    bounds: &Bounds,
) -> Result<ThreatReport> {
    let (q1, q2) = threat_profile(order1, order2)?;
    let instance = Instance::new(vec![order1.clone(), order2.clone()])?;
    let threat = [q1.clone(), q2.clone()];
    let same_assignment =
        ps_assignment(instance.m(), &threat) == ps_assignment(instance.m(), instance.profile());
    let dl_pne = verify_pne(&instance, &Relation::Dl, &threat, bounds)?.is_pne;
    let eu_pne = utilities
        .iter()
        .map(|u| Ok(verify_pne(&instance, &Relation::Eu(u), &threat, bounds)?.is_pne))
        .collect::<Result<Vec<_>>>()?;
    Ok(ThreatReport {
        q1,
        q2,
        same_assignment,
        dl_pne,
        eu_pne,
    })
}
