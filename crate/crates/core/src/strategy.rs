//! Best responses, best-response dynamics and improvement-path replay.
//!
//! Best responses are found by scanning all `m!` reports. Among reports with
//! the same value the lexicographically smallest ranking wins, so results do
//! not depend on how the scan is split across threads.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::Bounds;
use crate::error::{PsError, Result};
use crate::model::{Assignment, Instance, LinearOrder, UtilityProfile};
use crate::perm::unrank;
use crate::ps::{eat, ps_assignment};
use crate::rational::Rational;
use crate::relations::{eu_value, Key, Payoff, Relation};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BestResponse {
    pub agent: usize,
    pub order: LinearOrder,
    /// The agent's allocation row when playing `order`.
    pub row: Vec<Rational>,
    pub value: Payoff,
    /// Value of the agent's current report, for comparison.
    pub current: Payoff,
    /// Whether `order` is strictly better than the current report.
    pub improves: bool,
}

/// Row of `agent` when it reports `report` and everyone else keeps `reported`.
pub(crate) fn deviation_row(
    m: usize,
    reported: &[LinearOrder],
    agent: usize,
    report: &[usize],
) -> Vec<Rational> {
    let orders: Vec<&[usize]> = reported
        .iter()
        .enumerate()
        .map(|(i, o)| if i == agent { report } else { o.ranking() })
        .collect();
    let fractions = eat(m, &orders, None);
    fractions[agent * m..(agent + 1) * m].to_vec()
}

/// Best key over all `m!` reports: `(index, key, row)`, smallest index on ties.
pub(crate) fn best_report(
    instance: &Instance,
    relation: &Relation<'_>,
    reported: &[LinearOrder],
    agent: usize,
    reports: u64,
) -> (u64, Key, Vec<Rational>) {
    let m = instance.m();
    let truth = instance.order(agent);
    (0..reports)
        .into_par_iter()
        .map(|idx| {
            let row = deviation_row(m, reported, agent, &unrank(idx, m));
            (idx, relation.key(agent, truth, &row), row)
        })
        .reduce_with(|a, b| {
            if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                b
            } else {
                a
            }
        })
        .expect("at least one report")
}

fn check_relation(instance: &Instance, relation: &Relation<'_>) -> Result<()> {
    if let Relation::Eu(u) = relation {
        if u.n() != instance.n() || u.m() != instance.m() {
            return Err(PsError::DimensionMismatch {
                expected: instance.n() * instance.m(),
                found: u.n() * u.m(),
            });
        }
    }
    Ok(())
}

/// Best response of `agent` against the other agents' reports in `reported`,
/// judged by `relation` with respect to the agent's true order in `instance`.
pub fn best_response(
    instance: &Instance,
    relation: &Relation<'_>,
    reported: &[LinearOrder],
    agent: usize,
    bounds: &Bounds,
) -> Result<BestResponse> {
    instance.check_agent(agent)?;
    instance.check_profile(reported)?;
    check_relation(instance, relation)?;
    let reports = bounds.check_reports(instance.m())?;
    let m = instance.m();
    let (idx, best_key, row) = best_report(instance, relation, reported, agent, reports);
    let current_row = deviation_row(m, reported, agent, reported[agent].ranking());
    let current_key = relation.key(agent, instance.order(agent), &current_row);
    Ok(BestResponse {
        agent,
        order: LinearOrder::from_vec_unchecked(unrank(idx, m)),
        value: relation.payoff(agent, &row),
        current: relation.payoff(agent, &current_row),
        row,
        improves: best_key > current_key,
    })
}

/// EU best response against truthful reports of the others.
pub fn eu_best_response(
    instance: &Instance,
    utilities: &UtilityProfile,
    agent: usize,
    bounds: &Bounds,
) -> Result<BestResponse> {
    best_response(
        instance,
        &Relation::Eu(utilities),
        instance.profile(),
        agent,
        bounds,
    )
}

/// DL best response against truthful reports of the others.
pub fn dl_best_response(
    instance: &Instance,
    agent: usize,
    bounds: &Bounds,
) -> Result<BestResponse> {
    best_response(instance, &Relation::Dl, instance.profile(), agent, bounds)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MoverPolicy {
    /// Agents get a turn in order `0, 1, …, n-1, 0, …`.
    RoundRobin,
    /// The lowest-indexed agent with an improving best response moves.
    FirstImproving,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminal {
    /// No agent can improve on the final profile.
    FixedPoint(Vec<LinearOrder>),
    /// `trajectory[start + period] == trajectory[start]`.
    Cycle { start: usize, period: usize },
    /// `max_steps` moves were made without reaching either of the above.
    StepLimit,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DynamicsOutcome {
    /// Profiles visited; `trajectory[0]` is the starting profile.
    pub trajectory: Vec<Vec<LinearOrder>>,
    /// `movers[k]` moved from `trajectory[k]` to `trajectory[k + 1]`.
    pub movers: Vec<usize>,
    pub terminal: Terminal,
}

/// Best-response dynamics from `start`. A mover switches only when its best
/// response is strictly better; a repeated profile ends the run as a cycle.
pub fn run_dynamics(
    instance: &Instance,
    relation: &Relation<'_>,
    start: &[LinearOrder],
    policy: MoverPolicy,
    max_steps: usize,
    bounds: &Bounds,
) -> Result<DynamicsOutcome> {
    instance.check_profile(start)?;
    check_relation(instance, relation)?;
    bounds.check_reports(instance.m())?;
    let n = instance.n();
    let mut current = start.to_vec();
    let mut trajectory = vec![current.clone()];
    let mut movers = Vec::new();
    let mut seen: HashMap<Vec<LinearOrder>, usize> = HashMap::from([(current.clone(), 0)]);
    let mut turn = 0usize;
    let mut idle = 0usize;

    loop {
        let mover = match policy {
            MoverPolicy::RoundRobin => {
                if idle == n {
                    return Ok(DynamicsOutcome {
                        trajectory,
                        movers,
                        terminal: Terminal::FixedPoint(current),
                    });
                }
                let agent = turn;
                turn = (turn + 1) % n;
                let br = best_response(instance, relation, &current, agent, bounds)?;
                if !br.improves {
                    idle += 1;
                    continue;
                }
                idle = 0;
                Some(br)
            }
            MoverPolicy::FirstImproving => {
                let mut found = None;
                for agent in 0..n {
                    let br = best_response(instance, relation, &current, agent, bounds)?;
                    if br.improves {
                        found = Some(br);
                        break;
                    }
                }
                found
            }
        };
        let Some(br) = mover else {
            return Ok(DynamicsOutcome {
                trajectory,
                movers,
                terminal: Terminal::FixedPoint(current),
            });
        };
        if movers.len() == max_steps {
            return Ok(DynamicsOutcome {
                trajectory,
                movers,
                terminal: Terminal::StepLimit,
            });
        }
        current[br.agent] = br.order;
        movers.push(br.agent);
        trajectory.push(current.clone());
        let index = trajectory.len() - 1;
        if let Some(&start) = seen.get(&current) {
            return Ok(DynamicsOutcome {
                trajectory,
                movers,
                terminal: Terminal::Cycle {
                    start,
                    period: index - start,
                },
            });
        }
        seen.insert(current.clone(), index);
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReplayStep {
    pub agent: usize,
    pub report: LinearOrder,
    pub assignment: Assignment,
    /// Expected utility of every agent after the step (EU relation only).
    pub eu: Option<Vec<Rational>>,
    pub is_best_response: bool,
    pub strictly_improves: bool,
    /// Index of an earlier profile equal to this one (0 is the starting profile).
    pub revisits: Option<usize>,
}

/// Replays `steps` from the instance's truthful profile, checking that each
/// report is a best response for its mover and strictly improves it.
pub fn replay_path(
    instance: &Instance,
    relation: &Relation<'_>,
    steps: &[(usize, LinearOrder)],
    bounds: &Bounds,
) -> Result<Vec<ReplayStep>> {
    check_relation(instance, relation)?;
    for (k, (agent, report)) in steps.iter().enumerate() {
        if *agent >= instance.n() {
            return Err(PsError::MalformedSteps(format!(
                "step {}: agent {} out of range",
                k + 1,
                agent + 1
            )));
        }
        if report.len() != instance.m() {
            return Err(PsError::MalformedSteps(format!(
                "step {}: report ranks {} houses",
                k + 1,
                report.len()
            )));
        }
    }
    let reports = if steps.is_empty() {
        0
    } else {
        bounds.check_reports(instance.m())?
    };
    let m = instance.m();
    let mut current = instance.profile().to_vec();
    let mut history = vec![current.clone()];
    let mut out = Vec::with_capacity(steps.len());

    for (agent, report) in steps {
        let agent = *agent;
        let truth = instance.order(agent);
        let before = relation.key(
            agent,
            truth,
            &deviation_row(m, &current, agent, current[agent].ranking()),
        );
        let (_, best, _) = best_report(instance, relation, &current, agent, reports);
        current[agent] = report.clone();
        let assignment = ps_assignment(m, &current);
        let after = relation.key(agent, truth, assignment.row(agent));
        let eu = relation.utilities().map(|u| {
            (0..instance.n())
                .map(|i| eu_value(assignment.row(i), u.row(i)).expect("dimensions checked"))
                .collect()
        });
        let revisits = history.iter().position(|p| *p == current);
        history.push(current.clone());
        out.push(ReplayStep {
            agent,
            report: report.clone(),
            assignment,
            eu,
            is_best_response: after == best,
            strictly_improves: after > before,
            revisits,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn cycle_instance() -> (Instance, UtilityProfile) {
        let inst = Instance::from_rankings(&[&[1, 2, 4, 3, 0], &[4, 2, 3, 0, 1]]).unwrap();
        let u = UtilityProfile::from_integer_rows(&[&[0, 4, 3, 1, 2], &[1, 0, 3, 2, 4]]).unwrap();
        (inst, u)
    }

    #[test]
    fn cycle_instance_first_best_response() {
        let (inst, u) = cycle_instance();
        let br = eu_best_response(&inst, &u, 0, &Bounds::default()).unwrap();
        assert_eq!(br.value, Payoff::Utility(q(15, 2)));
        assert_eq!(br.current, Payoff::Utility(q(6, 1)));
        assert!(br.improves);
    }

    #[test]
    fn single_agent_never_improves() {
        let inst = Instance::from_rankings(&[&[1, 0, 2]]).unwrap();
        let u = UtilityProfile::from_integer_rows(&[&[2, 3, 1]]).unwrap();
        let br = eu_best_response(&inst, &u, 0, &Bounds::default()).unwrap();
        assert!(!br.improves);
        assert_eq!(br.value, Payoff::Utility(q(6, 1)));
        assert_eq!(br.order, LinearOrder::identity(3));
        assert!(
            !dl_best_response(&inst, 0, &Bounds::default())
                .unwrap()
                .improves
        );
    }

    #[test]
    fn two_agents_same_top() {
        let inst = Instance::from_rankings(&[&[0, 1], &[0, 1]]).unwrap();
        let u = UtilityProfile::from_integer_rows(&[&[2, 1], &[2, 1]]).unwrap();
        let br = eu_best_response(&inst, &u, 0, &Bounds::default()).unwrap();
        assert_eq!(br.value, Payoff::Utility(q(3, 2)));
        assert!(!br.improves);
        // Deviating to h2,h1 leaves the agent with all of h2 only.
        let row = deviation_row(2, inst.profile(), 0, &[1, 0]);
        assert_eq!(eu_value(&row, u.row(0)).unwrap(), q(1, 1));
    }

    #[test]
    fn contested_truth_is_dl_optimal() {
        let inst = Instance::from_rankings(&[&[0, 1, 2], &[1, 0, 2], &[1, 2, 0]]).unwrap();
        let br = dl_best_response(&inst, 0, &Bounds::default()).unwrap();
        assert!(!br.improves);
    }

    #[test]
    fn cycle_instance_dl_deviation() {
        let (inst, _) = cycle_instance();
        let row = deviation_row(5, inst.profile(), 0, &[2, 3, 1, 0, 4]);
        assert_eq!(row, vec![q(0, 1), q(1, 1), q(1, 1), q(1, 2), q(0, 1)]);
        let br = dl_best_response(&inst, 0, &Bounds::default()).unwrap();
        assert!(br.improves);
    }

    #[test]
    fn bound_is_enforced() {
        let inst = Instance::new(vec![LinearOrder::identity(9)]).unwrap();
        assert!(matches!(
            dl_best_response(&inst, 0, &Bounds::default()),
            Err(PsError::BoundExceeded { .. })
        ));
    }

    #[test]
    fn dynamics_fixed_points() {
        let inst = Instance::from_rankings(&[&[0, 1], &[0, 1]]).unwrap();
        let u = UtilityProfile::from_integer_rows(&[&[2, 1], &[2, 1]]).unwrap();
        for policy in [MoverPolicy::RoundRobin, MoverPolicy::FirstImproving] {
            let out = run_dynamics(
                &inst,
                &Relation::Eu(&u),
                inst.profile(),
                policy,
                10,
                &Bounds::default(),
            )
            .unwrap();
            assert_eq!(out.terminal, Terminal::FixedPoint(inst.profile().to_vec()));
            assert!(out.movers.is_empty());
        }
        let solo = Instance::from_rankings(&[&[1, 0]]).unwrap();
        let out = run_dynamics(
            &solo,
            &Relation::Dl,
            solo.profile(),
            MoverPolicy::RoundRobin,
            10,
            &Bounds::default(),
        )
        .unwrap();
        assert_eq!(out.terminal, Terminal::FixedPoint(solo.profile().to_vec()));
    }

    #[test]
    fn dynamics_step_limit() {
        let (inst, u) = cycle_instance();
        let out = run_dynamics(
            &inst,
            &Relation::Eu(&u),
            inst.profile(),
            MoverPolicy::RoundRobin,
            0,
            &Bounds::default(),
        )
        .unwrap();
        assert_eq!(out.terminal, Terminal::StepLimit);
    }

    #[test]
    fn replay_edge_cases() {
        let (inst, u) = cycle_instance();
        let rel = Relation::Eu(&u);
        assert!(replay_path(&inst, &rel, &[], &Bounds::default())
            .unwrap()
            .is_empty());
        let same = replay_path(
            &inst,
            &rel,
            &[(0, inst.order(0).clone())],
            &Bounds::default(),
        )
        .unwrap();
        assert!(!same[0].strictly_improves);
        assert_eq!(same[0].revisits, Some(0));
        assert!(replay_path(
            &inst,
            &rel,
            &[(2, inst.order(0).clone())],
            &Bounds::default()
        )
        .is_err());
        assert!(replay_path(
            &inst,
            &rel,
            &[(0, LinearOrder::identity(3))],
            &Bounds::default()
        )
        .is_err());
    }
}
