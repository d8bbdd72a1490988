//! PrefLib strict-complete-order (SOC) files.
//!
//! Current format: a `#`-prefixed metadata header followed by
//! `count: a,b,c` rows of 1-based alternative ids. The older format puts the
//! alternative count on the first line, then `id,name` lines, a
//! `voters,sum,unique` line and `count,a,b,c` rows; it is read by
//! [`parse_soc_legacy`]. Both parse into the same [`PrefLibDocument`], which
//! always renders in the current format.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{PrefLibErrorKind, PsError, Result};
use crate::model::{Instance, LinearOrder};
use crate::rng::SeededRng;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PrefLibDocument {
    pub alternatives: usize,
    /// `names[k]` names alternative `k + 1`, when the file provides it.
    pub names: Vec<Option<String>>,
    /// `(multiplicity, order)` with 0-based alternative indices.
    pub rows: Vec<(u64, Vec<usize>)>,
    /// Metadata lines this parser does not interpret, without the leading `#`.
    pub comments: Vec<String>,
}

impl PrefLibDocument {
    pub fn voters(&self) -> u64 {
        self.rows.iter().map(|(c, _)| c).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.voters() == 0
    }

    /// Renders in the current PrefLib format.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            let _ = writeln!(out, "# {c}");
        }
        let _ = writeln!(out, "# DATA TYPE: soc");
        let _ = writeln!(out, "# NUMBER ALTERNATIVES: {}", self.alternatives);
        let _ = writeln!(out, "# NUMBER VOTERS: {}", self.voters());
        let _ = writeln!(out, "# NUMBER UNIQUE ORDERS: {}", self.rows.len());
        for (k, name) in self.names.iter().enumerate() {
            if let Some(name) = name {
                let _ = writeln!(out, "# ALTERNATIVE NAME {}: {name}", k + 1);
            }
        }
        for (count, order) in &self.rows {
            let ids: Vec<String> = order.iter().map(|a| (a + 1).to_string()).collect();
            let _ = writeln!(out, "{count}: {}", ids.join(","));
        }
        out
    }
}

fn err(line: usize, kind: PrefLibErrorKind) -> PsError {
    PsError::PrefLib { line, kind }
}

fn parse_count(line: usize, s: &str) -> Result<u64> {
    match s.trim().parse::<u64>() {
        Ok(c) if c >= 1 => Ok(c),
        _ => Err(err(
            line,
            PrefLibErrorKind::BadMultiplicity(s.trim().to_string()),
        )),
    }
}

fn parse_order(line: usize, s: &str, alternatives: usize) -> Result<Vec<usize>> {
    if s.contains(['{', '}']) {
        return Err(err(line, PrefLibErrorKind::Tie));
    }
    let mut seen = vec![false; alternatives];
    let mut order = Vec::with_capacity(alternatives);
    for tok in s.split(',') {
        let tok = tok.trim();
        let id: usize = tok
            .parse()
            .map_err(|_| err(line, PrefLibErrorKind::UnknownAlternative(tok.to_string())))?;
        if id == 0 || id > alternatives {
            return Err(err(
                line,
                PrefLibErrorKind::UnknownAlternative(tok.to_string()),
            ));
        }
        if std::mem::replace(&mut seen[id - 1], true) {
            return Err(err(line, PrefLibErrorKind::DuplicateAlternative(id)));
        }
        order.push(id - 1);
    }
    if order.len() != alternatives {
        return Err(err(
            line,
            PrefLibErrorKind::IncompleteOrder {
                expected: alternatives,
                found: order.len(),
            },
        ));
    }
    Ok(order)
}

/// Parses a current-format SOC file.
pub fn parse_soc(text: &str) -> Result<PrefLibDocument> {
    let mut alternatives: Option<usize> = None;
    let mut declared_voters: Option<(usize, u64)> = None;
    let mut declared_unique: Option<(usize, usize)> = None;
    let mut names: Vec<(usize, usize, String)> = Vec::new();
    let mut comments = Vec::new();
    let mut raw_rows: Vec<(usize, &str)> = Vec::new();

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(meta) = trimmed.strip_prefix('#') {
            let meta = meta.trim();
            let (key, value) = match meta.split_once(':') {
                Some((k, v)) => (k.trim().to_ascii_uppercase(), v.trim()),
                None => (String::new(), meta),
            };
            let number = |v: &str| {
                v.parse::<u64>()
                    .map_err(|_| err(lineno, PrefLibErrorKind::Malformed(line.to_string())))
            };
            match key.as_str() {
                "DATA TYPE" => {
                    if !value.eq_ignore_ascii_case("soc") {
                        return Err(err(
                            lineno,
                            PrefLibErrorKind::UnsupportedType(value.to_string()),
                        ));
                    }
                }
                "NUMBER ALTERNATIVES" => alternatives = Some(number(value)? as usize),
                "NUMBER VOTERS" => declared_voters = Some((lineno, number(value)?)),
                "NUMBER UNIQUE ORDERS" => declared_unique = Some((lineno, number(value)? as usize)),
                k if k.starts_with("ALTERNATIVE NAME ") => {
                    let id: usize = k["ALTERNATIVE NAME ".len()..]
                        .trim()
                        .parse()
                        .map_err(|_| err(lineno, PrefLibErrorKind::Malformed(line.to_string())))?;
                    names.push((lineno, id, value.to_string()));
                }
                _ => comments.push(meta.to_string()),
            }
            continue;
        }
        raw_rows.push((lineno, trimmed));
    }

    let alternatives = match alternatives {
        Some(a) => a,
        None => match raw_rows.first() {
            None => 0,
            Some((lineno, _)) => {
                return Err(err(*lineno, PrefLibErrorKind::MissingAlternativeCount))
            }
        },
    };
    let mut name_slots = vec![None; alternatives];
    for (lineno, id, name) in names {
        if id == 0 || id > alternatives {
            return Err(err(
                lineno,
                PrefLibErrorKind::UnknownAlternative(id.to_string()),
            ));
        }
        name_slots[id - 1] = Some(name);
    }
    let rows = raw_rows
        .into_iter()
        .map(|(lineno, row)| {
            let (count, order) = row
                .split_once(':')
                .ok_or_else(|| err(lineno, PrefLibErrorKind::Malformed(row.to_string())))?;
            Ok((
                parse_count(lineno, count)?,
                parse_order(lineno, order, alternatives)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let doc = PrefLibDocument {
        alternatives,
        names: name_slots,
        rows,
        comments,
    };
    if let Some((lineno, v)) = declared_voters {
        if v != doc.voters() {
            return Err(err(
                lineno,
                PrefLibErrorKind::Malformed(format!(
                    "declares {v} voters, rows sum to {}",
                    doc.voters()
                )),
            ));
        }
    }
    if let Some((lineno, u)) = declared_unique {
        if u != doc.rows.len() {
            return Err(err(
                lineno,
                PrefLibErrorKind::Malformed(format!(
                    "declares {u} unique orders, found {}",
                    doc.rows.len()
                )),
            ));
        }
    }
    Ok(doc)
}

/// Parses the older headerless SOC layout.
pub fn parse_soc_legacy(text: &str) -> Result<PrefLibDocument> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let malformed =
        |lineno: usize, l: &str| err(lineno, PrefLibErrorKind::Malformed(l.to_string()));
    let (lineno, first) = lines
        .next()
        .ok_or_else(|| err(1, PrefLibErrorKind::MissingAlternativeCount))?;
    let alternatives: usize = first.parse().map_err(|_| malformed(lineno, first))?;
    let mut names = vec![None; alternatives];
    for _ in 0..alternatives {
        let (lineno, l) = lines
            .next()
            .ok_or_else(|| malformed(lineno, "missing alternative names"))?;
        let (id, name) = l.split_once(',').ok_or_else(|| malformed(lineno, l))?;
        let id: usize = id.trim().parse().map_err(|_| malformed(lineno, l))?;
        if id == 0 || id > alternatives {
            return Err(err(
                lineno,
                PrefLibErrorKind::UnknownAlternative(id.to_string()),
            ));
        }
        names[id - 1] = Some(name.trim().to_string());
    }
    let (sum_line, summary) = lines
        .next()
        .ok_or_else(|| malformed(lineno, "missing voter summary"))?;
    let totals: Vec<u64> = summary
        .split(',')
        .map(|t| t.trim().parse().map_err(|_| malformed(sum_line, summary)))
        .collect::<Result<_>>()?;
    if totals.len() != 3 {
        return Err(malformed(sum_line, summary));
    }
    let mut rows = Vec::new();
    for (lineno, l) in lines {
        let (count, order) = l.split_once(',').ok_or_else(|| malformed(lineno, l))?;
        rows.push((
            parse_count(lineno, count)?,
            parse_order(lineno, order, alternatives)?,
        ));
    }
    let doc = PrefLibDocument {
        alternatives,
        names,
        rows,
        comments: Vec::new(),
    };
    if totals[1] != doc.voters() || totals[2] as usize != doc.rows.len() {
        return Err(malformed(sum_line, summary));
    }
    Ok(doc)
}

/// Samples an `n`-agent, `m`-house instance: a uniform `m`-subset of the
/// alternatives (house `j` is the `j`-th smallest chosen id), then `n` rows
/// drawn with replacement in proportion to their multiplicity, each
/// restricted to the subset.
pub fn sample_instance(doc: &PrefLibDocument, n: usize, m: usize, seed: u64) -> Result<Instance> {
    if doc.is_empty() {
        return Err(PsError::InvalidParameter("document has no voters".into()));
    }
    if m == 0 || n == 0 {
        return Err(PsError::InvalidParameter("n and m must be positive".into()));
    }
    if m > doc.alternatives {
        return Err(PsError::InvalidParameter(format!(
            "m = {m} exceeds {} alternatives",
            doc.alternatives
        )));
    }
    let mut rng = SeededRng::new(seed);
    let mut pool: Vec<usize> = (0..doc.alternatives).collect();
    for i in 0..m {
        let j = i + rng.below((pool.len() - i) as u64) as usize;
        pool.swap(i, j);
    }
    let mut chosen = pool[..m].to_vec();
    chosen.sort_unstable();
    let mut house_of = vec![None; doc.alternatives];
    for (j, &a) in chosen.iter().enumerate() {
        house_of[a] = Some(j);
    }
    let total = doc.voters();
    let profile = (0..n)
        .map(|_| {
            let mut r = rng.below(total);
            let (_, order) = doc
                .rows
                .iter()
                .find(|(c, _)| {
                    if r < *c {
                        true
                    } else {
                        r -= c;
                        false
                    }
                })
                .expect("r < total");
            LinearOrder::new(order.iter().filter_map(|&a| house_of[a]).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Instance::new(profile)
}
