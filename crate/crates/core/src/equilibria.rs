//! Pure Nash equilibria of the reporting game induced by PS.
//!
//! * [`verify_pne`] scans all `n · (m! − 1)` unilateral deviations.
//! * [`enumerate_pne`] finds every equilibrium among the `(m!)^n` profiles.
//!   Rather than verifying each profile separately it makes one pass per
//!   agent: profiles that differ only in that agent's report form a block of
//!   `m!`, and a profile is stable for the agent iff its value equals the
//!   block maximum. A profile is an equilibrium iff it is stable for everyone.
//! * [`compute_granularity`] and [`spne_construct`] build the discretized
//!   eating game in which agents take turns eating one quantum at a time,
//!   solve it by backward induction and read a preference profile off the
//!   equilibrium path.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::Bounds;
use crate::error::{PsError, Result};
use crate::model::{
    social_welfare, Assignment, Instance, LinearOrder, UtilityProfile, WelfareClass, WelfareRecord,
    WelfareReport,
};
use crate::perm::{all_permutations, decode_profile, unrank};
use crate::ps::{eat, finish_times, ps_assignment, run_ps};
use crate::rational::Rational;
use crate::relations::{Key, Payoff, Relation};
use crate::strategy::deviation_row;

/// A strictly improving unilateral deviation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Deviation {
    pub agent: usize,
    pub report: LinearOrder,
    pub old: Payoff,
    pub new: Payoff,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PneVerdict {
    pub is_pne: bool,
    pub witness: Option<Deviation>,
}

fn check_relation(instance: &Instance, relation: &Relation<'_>) -> Result<()> {
    if let Some(u) = relation.utilities() {
        if u.n() != instance.n() || u.m() != instance.m() {
            return Err(PsError::DimensionMismatch {
                expected: instance.n() * instance.m(),
                found: u.n() * u.m(),
            });
        }
    }
    Ok(())
}

/// Checks every unilateral deviation from `profile`; the witness is the first
/// improving one in (agent, lexicographic report) order.
pub fn verify_pne(
    instance: &Instance,
    relation: &Relation<'_>,
    profile: &[LinearOrder],
    bounds: &Bounds,
) -> Result<PneVerdict> {
    instance.check_profile(profile)?;
    check_relation(instance, relation)?;
    let reports = bounds.check_reports(instance.m())?;
    let m = instance.m();
    for agent in 0..instance.n() {
        let truth = instance.order(agent);
        let current_row = deviation_row(m, profile, agent, profile[agent].ranking());
        let current = relation.key(agent, truth, &current_row);
        let found = (0..reports).into_par_iter().find_map_first(|idx| {
            let report = unrank(idx, m);
            if report == profile[agent].ranking() {
                return None;
            }
            let row = deviation_row(m, profile, agent, &report);
            (relation.key(agent, truth, &row) > current).then_some((report, row))
        });
        if let Some((report, row)) = found {
            return Ok(PneVerdict {
                is_pne: false,
                witness: Some(Deviation {
                    agent,
                    report: LinearOrder::from_vec_unchecked(report),
                    old: relation.payoff(agent, &current_row),
                    new: relation.payoff(agent, &row),
                }),
            });
        }
    }
    Ok(PneVerdict {
        is_pne: true,
        witness: None,
    })
}

/// `mask[id]` is true iff profile `id` is a PNE. Profile ids are mixed-radix
/// numbers over report indices with agent 0 most significant.
pub fn pne_mask(
    instance: &Instance,
    relation: &Relation<'_>,
    bounds: &Bounds,
) -> Result<Vec<bool>> {
    check_relation(instance, relation)?;
    let (n, m) = (instance.n(), instance.m());
    let count = bounds.check_profiles(n, m)? as usize;
    let perms = all_permutations(m);
    let r = perms.len();
    let mut stable = vec![true; count];

    for agent in 0..n {
        let stride = r.pow((n - 1 - agent) as u32);
        let truth = instance.order(agent);
        let blocks = count / r;
        let flags: Vec<Option<Vec<bool>>> = (0..blocks)
            .into_par_iter()
            .map(|c| {
                let base = (c / stride) * stride * r + c % stride;
                if (0..r).all(|k| !stable[base + k * stride]) {
                    return None;
                }
                let digits = decode_profile(base as u64, n, r as u64);
                let mut orders: Vec<&[usize]> = digits
                    .iter()
                    .map(|&d| perms[d as usize].as_slice())
                    .collect();
                let keys: Vec<Key> = (0..r)
                    .map(|k| {
                        orders[agent] = &perms[k];
                        let fractions = eat(m, &orders, None);
                        relation.key(agent, truth, &fractions[agent * m..(agent + 1) * m])
                    })
                    .collect();
                let best = keys.iter().max().expect("nonempty");
                Some(keys.iter().map(|k| k == best).collect())
            })
            .collect();
        for (c, f) in flags.into_iter().enumerate() {
            let base = (c / stride) * stride * r + c % stride;
            match f {
                Some(f) => {
                    for (k, ok) in f.into_iter().enumerate() {
                        stable[base + k * stride] &= ok;
                    }
                }
                None => debug_assert!((0..r).all(|k| !stable[base + k * stride])),
            }
        }
    }
    Ok(stable)
}

/// Profile with the given id.
pub fn profile_from_id(id: u64, n: usize, m: usize) -> Vec<LinearOrder> {
    let reports = crate::perm::factorial(m).expect("small m");
    decode_profile(id, n, reports)
        .into_iter()
        .map(|d| LinearOrder::from_vec_unchecked(unrank(d, m)))
        .collect()
}

/// Inverse of [`profile_from_id`].
pub fn profile_id(profile: &[LinearOrder]) -> u64 {
    let m = profile.first().map_or(0, LinearOrder::len);
    let reports = crate::perm::factorial(m).expect("small m");
    crate::perm::encode_profile(
        &profile
            .iter()
            .map(|o| crate::perm::rank(o.ranking()))
            .collect::<Vec<_>>(),
        reports,
    )
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PneRecord {
    pub profile_id: u64,
    pub profile: Vec<LinearOrder>,
    pub assignment: Assignment,
    /// Social welfare under the welfare utilities, when available.
    pub welfare: Option<Rational>,
}

/// All PNE in lexicographic profile order. Welfare is measured with
/// `welfare_utilities`, falling back to the relation's utilities.
pub fn enumerate_pne(
    instance: &Instance,
    relation: &Relation<'_>,
    welfare_utilities: Option<&UtilityProfile>,
    bounds: &Bounds,
) -> Result<Vec<PneRecord>> {
    let mask = pne_mask(instance, relation, bounds)?;
    let utilities = welfare_utilities.or(relation.utilities());
    let (n, m) = (instance.n(), instance.m());
    mask.iter()
        .enumerate()
        .filter(|(_, &ok)| ok)
        .map(|(id, _)| {
            let profile = profile_from_id(id as u64, n, m);
            let assignment = ps_assignment(m, &profile);
            let welfare = utilities
                .map(|u| social_welfare(&assignment, u))
                .transpose()?;
            Ok(PneRecord {
                profile_id: id as u64,
                profile,
                assignment,
                welfare,
            })
        })
        .collect()
}

/// Classifies equilibria against the truthful profile's welfare.
pub fn welfare_report(
    instance: &Instance,
    utilities: &UtilityProfile,
    equilibria: &[PneRecord],
) -> Result<WelfareReport> {
    let (truthful, _) = run_ps(instance);
    let sw_truthful = social_welfare(&truthful, utilities)?;
    let records = equilibria
        .iter()
        .map(|e| {
            let sw = match &e.welfare {
                Some(sw) => sw.clone(),
                None => social_welfare(&e.assignment, utilities)?,
            };
            Ok(WelfareRecord::classify(e.profile_id, sw, &sw_truthful))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WelfareReport {
        sw_truthful,
        records,
    })
}

/// One row per profile, as streamed by the `enumerate` command.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CensusRow {
    pub profile_id: u64,
    pub is_pne: bool,
    pub sw: Option<Rational>,
    pub class: Option<WelfareClass>,
}

/// Every profile with its PNE status and, given utilities, welfare class
/// relative to the truthful profile.
pub fn profile_census(
    instance: &Instance,
    relation: &Relation<'_>,
    welfare_utilities: Option<&UtilityProfile>,
    bounds: &Bounds,
) -> Result<Vec<CensusRow>> {
    let mask = pne_mask(instance, relation, bounds)?;
    let utilities = welfare_utilities.or(relation.utilities());
    let (n, m) = (instance.n(), instance.m());
    let sw_truthful = utilities
        .map(|u| social_welfare(&run_ps(instance).0, u))
        .transpose()?;
    mask.par_iter()
        .enumerate()
        .map(|(id, &is_pne)| {
            let (sw, class) = match (utilities, &sw_truthful) {
                (Some(u), Some(base)) => {
                    let p = ps_assignment(m, &profile_from_id(id as u64, n, m));
                    let rec = WelfareRecord::classify(id as u64, social_welfare(&p, u)?, base);
                    (Some(rec.sw), Some(rec.class))
                }
                _ => (None, None),
            };
            Ok(CensusRow {
                profile_id: id as u64,
                is_pne,
                sw,
                class,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GranularityResult {
    /// GCD of all gaps between consecutive house-finish times (from time 0) over all profiles.
    pub g: Rational,
    /// `gcd(g, 1) / n`: the amount one agent eats per sub-stage.
    pub quantum: Rational,
    pub event_gap_count: u64,
}

/// GCD of the gaps between consecutive finish times of one run, starting at 0.
pub fn profile_granularity(m: usize, orders: &[&[usize]]) -> (Rational, u64) {
    let mut prev = Rational::zero();
    let mut g = Rational::zero();
    let mut count = 0;
    for t in finish_times(m, orders) {
        g = g.gcd(&(&t - &prev));
        prev = t;
        count += 1;
    }
    (g, count)
}

pub fn compute_granularity(instance: &Instance, bounds: &Bounds) -> Result<GranularityResult> {
    let (n, m) = (instance.n(), instance.m());
    let count = bounds.check_profiles(n, m)?;
    let perms = all_permutations(m);
    let r = perms.len() as u64;
    let (g, gaps) = (0..count)
        .into_par_iter()
        .map(|id| {
            let digits = decode_profile(id, n, r);
            let orders: Vec<&[usize]> = digits
                .iter()
                .map(|&d| perms[d as usize].as_slice())
                .collect();
            profile_granularity(m, &orders)
        })
        .reduce(|| (Rational::zero(), 0), |a, b| (a.0.gcd(&b.0), a.1 + b.1));
    let quantum = g.gcd(&Rational::one()) / Rational::from_integer(n as i64);
    Ok(GranularityResult {
        g,
        quantum,
        event_gap_count: gaps,
    })
}

/// The solved sub-stage eating game.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SubStageGame {
    pub quantum: Rational,
    /// Number of sub-stages (`m / quantum`); agents move in turn `0, 1, …, n-1, 0, …`.
    pub depth: usize,
    /// Distinct game states visited by the memoized backward induction.
    pub node_count: usize,
    /// `(agent, house)` for each sub-stage on the equilibrium path.
    pub path: Vec<(usize, usize)>,
    /// Each agent's total consumption along the path.
    pub allocation: Assignment,
    /// Preference profile read off the path.
    pub profile: Vec<LinearOrder>,
}

struct GameSolver<'a> {
    n: usize,
    m: usize,
    total_steps: usize,
    instance: &'a Instance,
    relation: &'a Relation<'a>,
    /// state -> (chosen house, future consumption n×m in quanta)
    memo: HashMap<Vec<u32>, (usize, Vec<u32>)>,
}

impl GameSolver<'_> {
    fn key(&self, agent: usize, future: &[u32]) -> Key {
        let row: Vec<Rational> = future[agent * self.m..(agent + 1) * self.m]
            .iter()
            .map(|&k| Rational::from_integer(k as i64))
            .collect();
        self.relation.key(agent, self.instance.order(agent), &row)
    }

    /// Houses the agent may eat next, in its true preference order. State
    /// layout: remaining quanta per house, then each agent's current house
    /// plus one (0 before its first move).
    fn moves(&self, state: &[u32], agent: usize) -> Vec<usize> {
        let current = state[self.m + agent];
        if current > 0 && state[current as usize - 1] > 0 {
            return vec![current as usize - 1];
        }
        let order = self.instance.order(agent).ranking();
        order.iter().copied().filter(|&h| state[h] > 0).collect()
    }

    /// Future consumption from `state` under backward-induction play.
    /// Only the future part matters: both relations are invariant under
    /// adding the (common) past consumption to both sides.
    fn solve(&mut self, state: &mut Vec<u32>) -> Vec<u32> {
        let left: u32 = state[..self.m].iter().sum();
        if left == 0 {
            return vec![0; self.n * self.m];
        }
        if let Some((_, f)) = self.memo.get(state.as_slice()) {
            return f.clone();
        }
        let step = self.total_steps - left as usize;
        let agent = step % self.n;
        let slot = self.m + agent;
        let saved = state[slot];
        let mut best: Option<(usize, Key, Vec<u32>)> = None;
        for h in self.moves(state, agent) {
            state[h] -= 1;
            state[slot] = h as u32 + 1;
            let mut future = self.solve(state);
            state[h] += 1;
            state[slot] = saved;
            future[agent * self.m + h] += 1;
            let key = self.key(agent, &future);
            if best.as_ref().is_none_or(|(_, k, _)| key > *k) {
                best = Some((h, key, future));
            }
        }
        let (h, _, future) = best.expect("some house has mass left");
        self.memo.insert(state.clone(), (h, future.clone()));
        future
    }
}

/// Solves the sub-stage game by backward induction and reads a profile off
/// the equilibrium path.
///
/// Moves follow PS: an agent keeps eating its current house until it is
/// gone and only then picks a new one. Among equally good choices the agent
/// takes the house it truly prefers. Each agent's extracted list holds the
/// houses in the order it starts eating them; before each newly started
/// house come the houses already exhausted at that moment (in true
/// preference order), and never-touched houses close the list in ascending
/// index order. The extracted profile reproduces the equilibrium path under PS.
pub fn spne_construct(
    instance: &Instance,
    relation: &Relation<'_>,
    quantum_override: Option<Rational>,
    bounds: &Bounds,
) -> Result<(SubStageGame, PneVerdict)> {
    check_relation(instance, relation)?;
    let (n, m) = (instance.n(), instance.m());
    let quantum = match quantum_override {
        Some(q) => q,
        None => compute_granularity(instance, bounds)?.quantum,
    };
    if quantum.is_negative() || quantum.is_zero() {
        return Err(PsError::InvalidParameter(format!(
            "quantum {quantum} must be positive"
        )));
    }
    let per_house = Rational::one() / &quantum;
    if !per_house.is_integer() {
        return Err(PsError::InvalidParameter(format!(
            "quantum {quantum} does not divide 1"
        )));
    }
    let units: u32 = per_house
        .to_string()
        .parse()
        .map_err(|_| PsError::InvalidParameter(format!("quantum {quantum} is too fine")))?;
    let total_steps = units as usize * m;
    if !total_steps.is_multiple_of(n) {
        return Err(PsError::InvalidParameter(format!(
            "quantum {quantum}: {total_steps} sub-stages cannot be split evenly among {n} agents"
        )));
    }
    let estimate = (units as f64 + 1.0).powi(m as i32) * (m as f64 + 1.0).powi(n as i32);
    if estimate > bounds.max_game_states as f64 {
        return Err(PsError::BoundExceeded {
            what: "sub-stage game",
            needed: format!("{estimate:.0} states"),
            bound: bounds.max_game_states.to_string(),
        });
    }

    let mut solver = GameSolver {
        n,
        m,
        total_steps,
        instance,
        relation,
        memo: HashMap::new(),
    };
    let mut state = vec![units; m];
    state.extend(std::iter::repeat_n(0, n));
    let future = solver.solve(&mut state);

    let mut path = Vec::with_capacity(total_steps);
    let mut lists: Vec<Vec<usize>> = vec![Vec::new(); n];
    for step in 0..total_steps {
        let agent = step % n;
        let (h, _) = solver.memo[state.as_slice()];
        path.push((agent, h));
        if !lists[agent].contains(&h) {
            for &x in instance.order(agent).ranking() {
                if state[x] == 0 && !lists[agent].contains(&x) {
                    lists[agent].push(x);
                }
            }
            lists[agent].push(h);
        }
        state[h] -= 1;
        state[m + agent] = h as u32 + 1;
    }
    let profile: Vec<LinearOrder> = lists
        .into_iter()
        .map(|mut seq| {
            let rest: Vec<usize> = (0..m).filter(|h| !seq.contains(h)).collect();
            seq.extend(rest);
            LinearOrder::from_vec_unchecked(seq)
        })
        .collect();
    let allocation = Assignment::from_flat(
        n,
        m,
        future
            .iter()
            .map(|&k| Rational::from_integer(k as i64) * &quantum)
            .collect(),
    );
    let verdict = verify_pne(instance, relation, &profile, bounds)?;
    let game = SubStageGame {
        quantum,
        depth: total_steps,
        node_count: solver.memo.len(),
        path,
        allocation,
        profile,
    };
    Ok((game, verdict))
}
