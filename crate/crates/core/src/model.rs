//! Instances, preference orders, assignments and utilities.
//!
//! Agents and houses are 0-indexed; `Display` impls use the 1-indexed
//! names `h1..hm`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{PsError, Result};
use crate::rational::Rational;

/// A strict ranking of houses, most preferred first.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinearOrder(Vec<usize>);

impl LinearOrder {
    /// Checks that `ranking` is a permutation of `0..ranking.len()`.
    pub fn new(ranking: Vec<usize>) -> Result<Self> {
        let m = ranking.len();
        let mut seen = vec![false; m];
        for &h in &ranking {
            if h >= m {
                return Err(PsError::InvalidOrder(format!(
                    "house index {h} out of range for {m} houses"
                )));
            }
            if std::mem::replace(&mut seen[h], true) {
                return Err(PsError::InvalidOrder(format!(
                    "house h{} ranked twice",
                    h + 1
                )));
            }
        }
        Ok(LinearOrder(ranking))
    }

    pub(crate) fn from_vec_unchecked(ranking: Vec<usize>) -> Self {
        debug_assert!(LinearOrder::new(ranking.clone()).is_ok());
        LinearOrder(ranking)
    }

    pub fn identity(m: usize) -> Self {
        LinearOrder((0..m).collect())
    }

    pub fn ranking(&self) -> &[usize] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn top(&self) -> Option<usize> {
        self.0.first().copied()
    }

    /// `positions()[h]` is the rank (0 = best) of house `h`.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.0.len()];
        for (r, &h) in self.0.iter().enumerate() {
            pos[h] = r;
        }
        pos
    }

    pub fn prefers(&self, a: usize, b: usize) -> bool {
        let pos = self.positions();
        pos[a] < pos[b]
    }
}

impl fmt::Display for LinearOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, h) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "h{}", h + 1)?;
        }
        Ok(())
    }
}

impl fmt::Debug for LinearOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{self}]")
    }
}

impl FromStr for LinearOrder {
    type Err = PsError;

    /// Parses `h2,h1,h3` (1-based house names).
    fn from_str(s: &str) -> Result<Self> {
        let ranking = s
            .split(',')
            .map(|tok| {
                let tok = tok.trim();
                let digits = tok.strip_prefix('h').unwrap_or(tok);
                match digits.parse::<usize>() {
                    Ok(k) if k >= 1 => Ok(k - 1),
                    _ => Err(PsError::InvalidOrder(format!("bad house name {tok:?}"))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        LinearOrder::new(ranking)
    }
}

impl Serialize for LinearOrder {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LinearOrder {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(d)?;
        LinearOrder::new(v).map_err(serde::de::Error::custom)
    }
}

/// Formats a reported profile as `h1,h2 | h2,h1`.
pub fn format_profile(profile: &[LinearOrder]) -> String {
    profile
        .iter()
        .map(|o| o.to_string())
        .collect::<Vec<_>>()
        .join(" | ")
}

/// An assignment problem: `n` agents with strict preferences over `m` houses.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Instance {
    n: usize,
    m: usize,
    profile: Vec<LinearOrder>,
}

impl Instance {
    pub fn new(profile: Vec<LinearOrder>) -> Result<Self> {
        let n = profile.len();
        if n == 0 {
            return Err(PsError::InvalidInstance("no agents".into()));
        }
        let m = profile[0].len();
        if m == 0 {
            return Err(PsError::InvalidInstance("no houses".into()));
        }
        if let Some(bad) = profile.iter().find(|o| o.len() != m) {
            return Err(PsError::DimensionMismatch {
                expected: m,
                found: bad.len(),
            });
        }
        Ok(Instance { n, m, profile })
    }

    /// Convenience constructor from raw 0-based rankings.
    pub fn from_rankings(rankings: &[&[usize]]) -> Result<Self> {
        let profile = rankings
            .iter()
            .map(|r| LinearOrder::new(r.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Instance::new(profile)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn profile(&self) -> &[LinearOrder] {
        &self.profile
    }

    pub fn order(&self, agent: usize) -> &LinearOrder {
        &self.profile[agent]
    }

    /// Same agents and houses with a different reported profile.
    pub fn with_profile(&self, profile: Vec<LinearOrder>) -> Result<Self> {
        if profile.len() != self.n {
            return Err(PsError::DimensionMismatch {
                expected: self.n,
                found: profile.len(),
            });
        }
        let inst = Instance::new(profile)?;
        if inst.m != self.m {
            return Err(PsError::DimensionMismatch {
                expected: self.m,
                found: inst.m,
            });
        }
        Ok(inst)
    }

    pub fn check_agent(&self, agent: usize) -> Result<()> {
        if agent >= self.n {
            return Err(PsError::AgentOutOfRange { agent, n: self.n });
        }
        Ok(())
    }

    pub(crate) fn check_profile(&self, profile: &[LinearOrder]) -> Result<()> {
        if profile.len() != self.n {
            return Err(PsError::DimensionMismatch {
                expected: self.n,
                found: profile.len(),
            });
        }
        if let Some(bad) = profile.iter().find(|o| o.len() != self.m) {
            return Err(PsError::DimensionMismatch {
                expected: self.m,
                found: bad.len(),
            });
        }
        Ok(())
    }
}

/// An `n × m` matrix of exact fractions, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    n: usize,
    m: usize,
    fractions: Vec<Rational>,
}

impl Assignment {
    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != m) {
            return Err(PsError::DimensionMismatch {
                expected: m,
                found: bad.len(),
            });
        }
        Ok(Assignment {
            n,
            m,
            fractions: rows.into_iter().flatten().collect(),
        })
    }

    pub(crate) fn from_flat(n: usize, m: usize, fractions: Vec<Rational>) -> Self {
        debug_assert_eq!(fractions.len(), n * m);
        Assignment { n, m, fractions }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, agent: usize, house: usize) -> &Rational {
        &self.fractions[agent * self.m + house]
    }

    pub fn row(&self, agent: usize) -> &[Rational] {
        &self.fractions[agent * self.m..(agent + 1) * self.m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Rational]> {
        self.fractions.chunks(self.m.max(1)).take(self.n)
    }

    pub fn to_rows(&self) -> Vec<Vec<Rational>> {
        self.rows().map(<[Rational]>::to_vec).collect()
    }

    /// Checks entries in `[0, 1]`, column sums of 1 and row sums of `m/n`.
    pub fn validate(&self) -> Result<()> {
        let one = Rational::one();
        for (k, x) in self.fractions.iter().enumerate() {
            if x.is_negative() || *x > one {
                return Err(PsError::InvalidAssignment(format!(
                    "entry ({}, h{}) = {x} outside [0, 1]",
                    k / self.m + 1,
                    k % self.m + 1
                )));
            }
        }
        for h in 0..self.m {
            let col: Rational = (0..self.n).map(|i| self.get(i, h)).sum();
            if col != one {
                return Err(PsError::InvalidAssignment(format!(
                    "column h{} sums to {col}",
                    h + 1
                )));
            }
        }
        let share = Rational::new(self.m as i64, self.n as i64);
        for i in 0..self.n {
            let row: Rational = self.row(i).iter().sum();
            if row != share {
                return Err(PsError::InvalidAssignment(format!(
                    "row {} sums to {row}, expected {share}",
                    i + 1
                )));
            }
        }
        Ok(())
    }
}

impl Serialize for Assignment {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells: Vec<String> = self.fractions.iter().map(|x| x.to_string()).collect();
        let width = cells.iter().map(String::len).max().unwrap_or(1);
        for i in 0..self.n {
            let line: Vec<String> = (0..self.m)
                .map(|h| format!("{:>width$}", cells[i * self.m + h]))
                .collect();
            writeln!(f, "{}", line.join("  "))?;
        }
        Ok(())
    }
}

impl fmt::Debug for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

/// Cardinal utilities `u_i(h_j)`, row-major. Consistency with an instance is
/// checked separately by [`UtilityProfile::check_consistent`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UtilityProfile {
    n: usize,
    m: usize,
    values: Vec<Rational>,
}

impl UtilityProfile {
    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let a = Assignment::from_rows(rows)?;
        Ok(UtilityProfile {
            n: a.n,
            m: a.m,
            values: a.fractions,
        })
    }

    pub fn from_integer_rows(rows: &[&[i64]]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&k| Rational::from_integer(k)).collect())
                .collect(),
        )
    }

    /// Borda utilities: `m - 1 - rank` for each agent's true order.
    pub fn borda(instance: &Instance) -> Self {
        let m = instance.m();
        let rows = instance
            .profile()
            .iter()
            .map(|o| {
                o.positions()
                    .iter()
                    .map(|&r| Rational::from_integer((m - 1 - r) as i64))
                    .collect()
            })
            .collect();
        Self::from_rows(rows).expect("rectangular")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn row(&self, agent: usize) -> &[Rational] {
        &self.values[agent * self.m..(agent + 1) * self.m]
    }

    pub fn to_rows(&self) -> Vec<Vec<Rational>> {
        self.values
            .chunks(self.m.max(1))
            .take(self.n)
            .map(<[Rational]>::to_vec)
            .collect()
    }

    pub fn scaled(&self, alpha: &Rational) -> Self {
        UtilityProfile {
            n: self.n,
            m: self.m,
            values: self.values.iter().map(|u| u * alpha).collect(),
        }
    }

    /// Utilities must be nonnegative and strictly decrease along each agent's ranking.
    pub fn check_consistent(&self, instance: &Instance) -> Result<()> {
        if self.n != instance.n() {
            return Err(PsError::DimensionMismatch {
                expected: instance.n(),
                found: self.n,
            });
        }
        if self.m != instance.m() {
            return Err(PsError::DimensionMismatch {
                expected: instance.m(),
                found: self.m,
            });
        }
        for (agent, order) in instance.profile().iter().enumerate() {
            let row = self.row(agent);
            if let Some(h) = row.iter().position(Rational::is_negative) {
                return Err(PsError::InconsistentUtilities {
                    agent,
                    reason: format!("negative utility for h{}", h + 1),
                });
            }
            for w in order.ranking().windows(2) {
                if row[w[0]] <= row[w[1]] {
                    return Err(PsError::InconsistentUtilities {
                        agent,
                        reason: format!(
                            "h{} is preferred to h{} but u = {} <= {}",
                            w[0] + 1,
                            w[1] + 1,
                            row[w[0]],
                            row[w[1]]
                        ),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Utilitarian welfare `Σ_i Σ_j u_i(h_j) · p(i)(h_j)`. Does not check utility consistency.
pub fn social_welfare(assignment: &Assignment, utilities: &UtilityProfile) -> Result<Rational> {
    if assignment.n != utilities.n {
        return Err(PsError::DimensionMismatch {
            expected: assignment.n,
            found: utilities.n,
        });
    }
    if assignment.m != utilities.m {
        return Err(PsError::DimensionMismatch {
            expected: assignment.m,
            found: utilities.m,
        });
    }
    Ok(assignment
        .fractions
        .iter()
        .zip(&utilities.values)
        .map(|(p, u)| p * u)
        .sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WelfareClass {
    Equal,
    Increase,
    Decrease,
}

impl fmt::Display for WelfareClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WelfareClass::Equal => "equal",
            WelfareClass::Increase => "increase",
            WelfareClass::Decrease => "decrease",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WelfareRecord {
    pub profile_id: u64,
    pub sw: Rational,
    pub class: WelfareClass,
    pub pct_change: Rational,
}

impl WelfareRecord {
    /// Classifies `sw` against the truthful welfare. `sw_truthful` must be nonzero
    /// for the percentage to be defined; a zero baseline yields a zero percentage.
    pub fn classify(profile_id: u64, sw: Rational, sw_truthful: &Rational) -> Self {
        let class = match sw.cmp(sw_truthful) {
            std::cmp::Ordering::Equal => WelfareClass::Equal,
            std::cmp::Ordering::Greater => WelfareClass::Increase,
            std::cmp::Ordering::Less => WelfareClass::Decrease,
        };
        let pct_change = if sw_truthful.is_zero() {
            Rational::zero()
        } else {
            (&sw - sw_truthful).abs() / sw_truthful.abs() * Rational::from_integer(100)
        };
        WelfareRecord {
            profile_id,
            sw,
            class,
            pct_change,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WelfareReport {
    pub sw_truthful: Rational,
    pub records: Vec<WelfareRecord>,
}

impl WelfareReport {
    pub fn count(&self, class: WelfareClass) -> usize {
        self.records.iter().filter(|r| r.class == class).count()
    }
}

/// JSON interchange form of an instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub n: usize,
    pub m: usize,
    pub preferences: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utilities: Option<Vec<Vec<Rational>>>,
}

impl InstanceFile {
    pub fn new(instance: &Instance, utilities: Option<&UtilityProfile>) -> Self {
        InstanceFile {
            n: instance.n(),
            m: instance.m(),
            preferences: instance
                .profile()
                .iter()
                .map(|o| o.ranking().to_vec())
                .collect(),
            utilities: utilities.map(UtilityProfile::to_rows),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| PsError::InvalidInstance(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    /// Validates the declared dimensions and returns the instance and its utilities, if any.
    pub fn into_parts(self) -> Result<(Instance, Option<UtilityProfile>)> {
        if self.preferences.len() != self.n {
            return Err(PsError::DimensionMismatch {
                expected: self.n,
                found: self.preferences.len(),
            });
        }
        let profile = self
            .preferences
            .into_iter()
            .map(LinearOrder::new)
            .collect::<Result<Vec<_>>>()?;
        let instance = Instance::new(profile)?;
        if instance.m() != self.m {
            return Err(PsError::DimensionMismatch {
                expected: self.m,
                found: instance.m(),
            });
        }
        let utilities = match self.utilities {
            Some(rows) => {
                let u = UtilityProfile::from_rows(rows)?;
                if u.n() != instance.n() || u.m() != instance.m() {
                    return Err(PsError::InvalidInstance(
                        "utility matrix does not match n x m".into(),
                    ));
                }
                Some(u)
            }
            None => None,
        };
        Ok((instance, utilities))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn order_validation() {
        assert!(LinearOrder::new(vec![2, 0, 1]).is_ok());
        assert!(LinearOrder::new(vec![0, 0, 1]).is_err());
        assert!(LinearOrder::new(vec![0, 3, 1]).is_err());
        let o: LinearOrder = "h2,h1,h3".parse().unwrap();
        assert_eq!(o.ranking(), &[1, 0, 2]);
        assert_eq!(o.to_string(), "h2,h1,h3");
        assert_eq!(o.positions(), vec![1, 0, 2]);
        assert!(o.prefers(1, 2));
    }

    #[test]
    fn instance_validation() {
        assert!(Instance::new(vec![]).is_err());
        assert!(Instance::from_rankings(&[&[0, 1], &[0]]).is_err());
        let inst = Instance::from_rankings(&[&[0, 1, 2], &[2, 1, 0]]).unwrap();
        assert_eq!((inst.n(), inst.m()), (2, 3));
        assert!(inst.check_agent(2).is_err());
    }

    #[test]
    fn welfare_of_contested_row() {
        let p = Assignment::from_rows(vec![
            vec![q(3, 4), q(0, 1), q(1, 4)],
            vec![q(1, 4), q(1, 2), q(1, 4)],
            vec![q(0, 1), q(1, 2), q(1, 2)],
        ])
        .unwrap();
        p.validate().unwrap();
        let u = UtilityProfile::from_integer_rows(&[&[7, 6, 0], &[0, 0, 0], &[0, 0, 0]]).unwrap();
        assert_eq!(social_welfare(&p, &u).unwrap(), q(21, 4));
        let zero =
            UtilityProfile::from_integer_rows(&[&[0, 0, 0], &[0, 0, 0], &[0, 0, 0]]).unwrap();
        assert_eq!(social_welfare(&p, &zero).unwrap(), Rational::zero());
        let bad = UtilityProfile::from_integer_rows(&[&[1, 2]]).unwrap();
        assert!(social_welfare(&p, &bad).is_err());
    }

    #[test]
    fn uniform_assignment_with_normalized_utilities() {
        // n = 2, m = 3, every entry 1/2, utilities per agent summing to 3.
        let p = Assignment::from_rows(vec![vec![q(1, 2); 3], vec![q(1, 2); 3]]).unwrap();
        let u = UtilityProfile::from_rows(vec![
            vec![q(2, 1), q(3, 4), q(1, 4)],
            vec![q(1, 3), q(1, 3), q(7, 3)],
        ])
        .unwrap();
        assert_eq!(social_welfare(&p, &u).unwrap(), Rational::from_integer(3));
    }

    #[test]
    fn assignment_validator_rejects_bad_sums() {
        let bad =
            Assignment::from_rows(vec![vec![q(1, 2), q(1, 2)], vec![q(1, 4), q(1, 2)]]).unwrap();
        assert!(bad.validate().is_err());
        let neg = Assignment::from_rows(vec![vec![q(-1, 2), q(3, 2)]]).unwrap();
        assert!(neg.validate().is_err());
    }

    #[test]
    fn consistency_check() {
        let inst = Instance::from_rankings(&[&[0, 1, 2]]).unwrap();
        let good = UtilityProfile::from_integer_rows(&[&[3, 2, 1]]).unwrap();
        assert!(good.check_consistent(&inst).is_ok());
        let flat = UtilityProfile::from_integer_rows(&[&[3, 2, 2]]).unwrap();
        assert!(matches!(
            flat.check_consistent(&inst),
            Err(PsError::InconsistentUtilities { agent: 0, .. })
        ));
        let borda = UtilityProfile::borda(&Instance::from_rankings(&[&[1, 2, 4, 3, 0]]).unwrap());
        assert_eq!(
            borda.to_rows(),
            UtilityProfile::from_integer_rows(&[&[0, 4, 3, 1, 2]])
                .unwrap()
                .to_rows()
        );
    }

    #[test]
    fn welfare_classification() {
        let base = q(10, 1);
        let r = WelfareRecord::classify(0, q(11, 1), &base);
        assert_eq!(
            (r.class, r.pct_change.clone()),
            (WelfareClass::Increase, q(10, 1))
        );
        let r = WelfareRecord::classify(0, q(10, 1), &base);
        assert_eq!(
            (r.class, r.pct_change.clone()),
            (WelfareClass::Equal, Rational::zero())
        );
        let r = WelfareRecord::classify(0, q(9, 1), &base);
        assert_eq!(r.class, WelfareClass::Decrease);
    }

    #[test]
    fn instance_json() {
        let text =
            r#"{"n":2,"m":2,"preferences":[[0,1],[1,0]],"utilities":[["2","1"],["3/2","1/2"]]}"#;
        let (inst, u) = InstanceFile::from_json(text).unwrap().into_parts().unwrap();
        assert_eq!(inst.order(1).ranking(), &[1, 0]);
        assert_eq!(u.as_ref().unwrap().row(1)[0], q(3, 2));
        let back = InstanceFile::new(&inst, u.as_ref()).to_json();
        assert_eq!(
            InstanceFile::from_json(&back).unwrap(),
            InstanceFile::from_json(text).unwrap()
        );
        assert!(
            InstanceFile::from_json(r#"{"n":3,"m":2,"preferences":[[0,1],[1,0]]}"#)
                .unwrap()
                .into_parts()
                .is_err()
        );
        assert!(
            InstanceFile::from_json(r#"{"n":1,"m":2,"preferences":[[0,0]]}"#)
                .unwrap()
                .into_parts()
                .is_err()
        );
    }

    #[test]
    fn social_welfare_is_linear() {
        let p =
            Assignment::from_rows(vec![vec![q(1, 3), q(2, 3)], vec![q(2, 3), q(1, 3)]]).unwrap();
        let u = UtilityProfile::from_rows(vec![vec![q(5, 7), q(1, 9)], vec![q(3, 1), q(0, 1)]])
            .unwrap();
        let alpha = q(13, 5);
        assert_eq!(
            social_welfare(&p, &u.scaled(&alpha)).unwrap(),
            social_welfare(&p, &u).unwrap() * &alpha
        );
    }
}
