//! The probabilistic serial eating procedure.
//!
//! Every agent eats its most preferred house that still has mass left, all at
//! unit speed. The simulation jumps from one house-exhaustion time to the
//! next: between events the set of (agent, house) pairs is fixed, so the next
//! event is `min(remaining[h] / eaters[h])` over houses being eaten. There are
//! at most `m` events, each costing `O(n + m)`.

use std::fmt;

use serde::Serialize;

use crate::model::{Assignment, Instance, LinearOrder};
use crate::rational::Rational;

/// One house-exhaustion event.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EatingEvent {
    pub time: Rational,
    /// Houses that ran out at `time`, ascending.
    pub finished: Vec<usize>,
    /// `(agent, house, amount)` eaten since the previous event, by agent.
    pub consumed: Vec<(usize, usize, Rational)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EatingTrace {
    pub events: Vec<EatingEvent>,
    pub final_time: Rational,
}

impl EatingTrace {
    pub fn finish_times(&self) -> impl Iterator<Item = &Rational> {
        self.events.iter().map(|e| &e.time)
    }
}

impl fmt::Display for EatingTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.events {
            let names: Vec<String> = e.finished.iter().map(|h| format!("h{}", h + 1)).collect();
            writeln!(f, "t={} finished={{{}}}", e.time, names.join(","))?;
        }
        Ok(())
    }
}

/// Runs PS on the instance's profile, returning the assignment and event timeline.
pub fn run_ps(instance: &Instance) -> (Assignment, EatingTrace) {
    let orders: Vec<&[usize]> = instance
        .profile()
        .iter()
        .map(LinearOrder::ranking)
        .collect();
    let mut events = Vec::new();
    let fractions = eat(instance.m(), &orders, Some(&mut events));
    let final_time = events.last().map(|e| e.time.clone()).unwrap_or_default();
    (
        Assignment::from_flat(instance.n(), instance.m(), fractions),
        EatingTrace { events, final_time },
    )
}

/// PS assignment for an arbitrary reported profile over `m` houses.
pub fn ps_assignment(m: usize, profile: &[LinearOrder]) -> Assignment {
    let orders: Vec<&[usize]> = profile.iter().map(LinearOrder::ranking).collect();
    Assignment::from_flat(profile.len(), m, eat(m, &orders, None))
}

/// Event times at which at least one house is finished.
pub fn finish_times(m: usize, orders: &[&[usize]]) -> Vec<Rational> {
    let mut events = Vec::new();
    eat(m, orders, Some(&mut events));
    events.into_iter().map(|e| e.time).collect()
}

/// Core eating loop on raw rankings; returns the row-major `n × m` matrix.
pub(crate) fn eat(
    m: usize,
    orders: &[&[usize]],
    mut trace: Option<&mut Vec<EatingEvent>>,
) -> Vec<Rational> {
    let n = orders.len();
    let mut fractions = vec![Rational::zero(); n * m];
    let mut remaining = vec![Rational::one(); m];
    let mut cursor = vec![0usize; n];
    let mut eaters = vec![0i64; m];
    let mut current = vec![0usize; n];
    let mut live = m;
    let mut time = Rational::zero();

    while live > 0 {
        eaters.iter_mut().for_each(|c| *c = 0);
        for i in 0..n {
            while remaining[orders[i][cursor[i]]].is_zero() {
                cursor[i] += 1;
            }
            let h = orders[i][cursor[i]];
            current[i] = h;
            eaters[h] += 1;
        }
        let dt = (0..m)
            .filter(|&h| eaters[h] > 0)
            .map(|h| &remaining[h] / Rational::from_integer(eaters[h]))
            .min()
            .expect("some house is being eaten");
        for i in 0..n {
            fractions[i * m + current[i]] += &dt;
        }
        let mut finished = Vec::new();
        for h in 0..m {
            if eaters[h] > 0 {
                remaining[h] -= &dt * Rational::from_integer(eaters[h]);
                debug_assert!(!remaining[h].is_negative());
                if remaining[h].is_zero() {
                    finished.push(h);
                    live -= 1;
                }
            }
        }
        time += &dt;
        if let Some(events) = trace.as_deref_mut() {
            let consumed = (0..n).map(|i| (i, current[i], dt.clone())).collect();
            events.push(EatingEvent {
                time: time.clone(),
                finished,
                consumed,
            });
        }
    }
    fractions
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn rows(a: &Assignment) -> Vec<Vec<Rational>> {
        a.to_rows()
    }

    #[test]
    fn contested_truthful() {
        let inst = Instance::from_rankings(&[&[0, 1, 2], &[1, 0, 2], &[1, 2, 0]]).unwrap();
        let (p, trace) = run_ps(&inst);
        assert_eq!(
            rows(&p),
            vec![
                vec![q(3, 4), q(0, 1), q(1, 4)],
                vec![q(1, 4), q(1, 2), q(1, 4)],
                vec![q(0, 1), q(1, 2), q(1, 2)]
            ]
        );
        let times: Vec<_> = trace.finish_times().cloned().collect();
        assert_eq!(times, vec![q(1, 2), q(3, 4), q(1, 1)]);
        assert_eq!(trace.events[0].finished, vec![1]);
        assert_eq!(trace.events[1].finished, vec![0]);
        assert_eq!(
            trace.to_string(),
            "t=1/2 finished={h2}\nt=3/4 finished={h1}\nt=1 finished={h3}\n"
        );
    }

    #[test]
    fn contested_misreport() {
        let inst = Instance::from_rankings(&[&[1, 0, 2], &[1, 0, 2], &[1, 2, 0]]).unwrap();
        let (p, _) = run_ps(&inst);
        assert_eq!(
            rows(&p),
            vec![
                vec![q(1, 2), q(1, 3), q(1, 6)],
                vec![q(1, 2), q(1, 3), q(1, 6)],
                vec![q(0, 1), q(1, 3), q(2, 3)]
            ]
        );
    }

    #[test]
    fn identical_preferences_split_evenly() {
        for n in 1..=5 {
            let order: Vec<usize> = (0..n).rev().collect();
            let profile: Vec<&[usize]> = vec![&order; n];
            let (p, _) = run_ps(&Instance::from_rankings(&profile).unwrap());
            assert!(p.rows().flatten().all(|x| *x == q(1, n as i64)));
        }
    }

    #[test]
    fn single_agent_takes_everything() {
        let (p, trace) = run_ps(&Instance::from_rankings(&[&[2, 0, 1]]).unwrap());
        assert_eq!(rows(&p), vec![vec![q(1, 1); 3]]);
        assert_eq!(trace.final_time, q(3, 1));
    }

    #[test]
    fn simultaneous_exhaustion_is_one_event() {
        let (_, trace) = run_ps(&Instance::from_rankings(&[&[0, 1], &[1, 0]]).unwrap());
        assert_eq!(trace.events.len(), 1);
        assert_eq!(trace.events[0].finished, vec![0, 1]);
    }

    #[test]
    fn unequal_counts_end_at_m_over_n() {
        let (p, trace) = run_ps(&Instance::from_rankings(&[&[0, 1, 2], &[0, 2, 1]]).unwrap());
        p.validate().unwrap();
        assert_eq!(trace.final_time, q(3, 2));
    }
}
