//! Built-in reference cases, used by the `selfcheck` command.

use serde::Serialize;

use crate::bounds::Bounds;
use crate::equilibria::verify_pne;
use crate::model::{Instance, LinearOrder, UtilityProfile};
use crate::ps::run_ps;
use crate::rational::Rational;
use crate::relations::Relation;
use crate::strategy::replay_path;
use crate::threat::check_threat_guarantees;

/// Three agents over three houses; agents 2 and 3 compete for h2.
pub fn contested_instance() -> Instance {
    Instance::from_rankings(&[&[0, 1, 2], &[1, 0, 2], &[1, 2, 0]]).expect("valid")
}

/// The contested instance with agent 1 reporting h2,h1,h3.
pub fn contested_misreport() -> Instance {
    Instance::from_rankings(&[&[1, 0, 2], &[1, 0, 2], &[1, 2, 0]]).expect("valid")
}

fn fractions(rows: &[[(i64, i64); 3]]) -> Vec<Vec<Rational>> {
    rows.iter()
        .map(|r| r.iter().map(|&(a, b)| Rational::new(a, b)).collect())
        .collect()
}

pub fn contested_assignment() -> Vec<Vec<Rational>> {
    fractions(&[
        [(3, 4), (0, 1), (1, 4)],
        [(1, 4), (1, 2), (1, 4)],
        [(0, 1), (1, 2), (1, 2)],
    ])
}

pub fn contested_misreport_assignment() -> Vec<Vec<Rational>> {
    fractions(&[
        [(1, 2), (1, 3), (1, 6)],
        [(1, 2), (1, 3), (1, 6)],
        [(0, 1), (1, 3), (2, 3)],
    ])
}

/// Two agents, five houses, Borda utilities: best responses cycle.
pub fn cycle_instance() -> (Instance, UtilityProfile) {
    let inst = Instance::from_rankings(&[&[1, 2, 4, 3, 0], &[4, 2, 3, 0, 1]]).expect("valid");
    let u =
        UtilityProfile::from_integer_rows(&[&[0, 4, 3, 1, 2], &[1, 0, 3, 2, 4]]).expect("valid");
    (inst, u)
}

/// The five alternating best responses; the last returns to the profile after the first.
pub fn cycle_steps() -> Vec<(usize, LinearOrder)> {
    [
        (0, "h3,h4,h2,h1,h5"),
        (1, "h3,h4,h5,h1,h2"),
        (0, "h3,h5,h2,h1,h4"),
        (1, "h5,h3,h4,h1,h2"),
        (0, "h3,h4,h2,h1,h5"),
    ]
    .into_iter()
    .map(|(a, s)| (a, s.parse().expect("valid order")))
    .collect()
}

/// Expected utilities after each step of [`cycle_steps`].
pub fn cycle_eu() -> Vec<[Rational; 2]> {
    [
        ((15, 2), (6, 1)),
        ((6, 1), (7, 1)),
        ((15, 2), (9, 2)),
        ((7, 1), (13, 2)),
        ((15, 2), (6, 1)),
    ]
    .into_iter()
    .map(|((a, b), (c, d))| [Rational::new(a, b), Rational::new(c, d)])
    .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

pub fn run_selfcheck() -> Vec<CheckResult> {
    let bounds = Bounds::default();
    let mut out = Vec::new();
    let mut check = |name: &'static str, passed: bool, detail: String| {
        out.push(CheckResult {
            name,
            passed,
            detail,
        })
    };

    let (p, trace) = run_ps(&contested_instance());
    check(
        "contested-truthful",
        p.to_rows() == contested_assignment() && trace.events.len() == 3,
        format!("{:?}", p.to_rows()),
    );
    let (p, _) = run_ps(&contested_misreport());
    check(
        "contested-misreport",
        p.to_rows() == contested_misreport_assignment(),
        format!("{:?}", p.to_rows()),
    );

    let inst = contested_instance();
    let dl = verify_pne(&inst, &Relation::Dl, inst.profile(), &bounds);
    check(
        "contested-truthful-dl-pne",
        matches!(&dl, Ok(v) if v.is_pne),
        format!("{dl:?}"),
    );
    let u =
        UtilityProfile::from_integer_rows(&[&[7, 6, 0], &[2, 3, 1], &[1, 3, 2]]).expect("valid");
    let eu = verify_pne(&inst, &Relation::Eu(&u), inst.profile(), &bounds);
    check(
        "contested-truthful-eu-deviation",
        matches!(&eu, Ok(v) if !v.is_pne && v.witness.as_ref().is_some_and(|w| w.agent == 0)),
        format!("{eu:?}"),
    );

    let (inst, u) = cycle_instance();
    let steps = cycle_steps();
    for (name, relation) in [
        ("cycle-replay-eu", Relation::Eu(&u)),
        ("cycle-replay-dl", Relation::Dl),
    ] {
        match replay_path(&inst, &relation, &steps, &bounds) {
            Ok(rec) => {
                let eu_ok = match relation {
                    Relation::Eu(_) => rec
                        .iter()
                        .zip(cycle_eu())
                        .all(|(r, e)| r.eu.as_deref() == Some(&e[..])),
                    Relation::Dl => true,
                };
                let ok = eu_ok
                    && rec
                        .iter()
                        .all(|r| r.is_best_response && r.strictly_improves)
                    && rec.last().and_then(|r| r.revisits) == Some(1);
                check(name, ok, format!("{} steps", rec.len()));
            }
            Err(e) => check(name, false, e.to_string()),
        }
    }

    let fixtures = [
        ("h1,h2,h3", "h2,h3,h1"),
        ("h1,h2", "h2,h1"),
        ("h2,h1,h3,h4", "h2,h4,h1,h3"),
    ];
    for (a, b) in fixtures {
        let (o1, o2): (LinearOrder, LinearOrder) =
            (a.parse().expect("valid"), b.parse().expect("valid"));
        let inst = Instance::new(vec![o1.clone(), o2.clone()]).expect("valid");
        let borda = UtilityProfile::borda(&inst);
        let r = check_threat_guarantees(&o1, &o2, &[borda], &bounds);
        check(
            "threat-guarantees",
            matches!(&r, Ok(r) if r.holds()),
            format!("{a} / {b}"),
        );
    }
    out
}
