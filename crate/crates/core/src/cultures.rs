//! Synthetic preference cultures and the random utility model.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use serde::Serialize;

use crate::error::{PsError, Result};
use crate::model::{Instance, LinearOrder, UtilityProfile};
use crate::perm::{factorial, unrank};
use crate::rational::Rational;
use crate::rng::{split_seed, SeededRng};

/// Mallows dispersion used when none is given.
pub const DEFAULT_PHI: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Culture {
    /// Impartial culture: independent uniform orders.
    Ic,
    /// Uniform over orders single-peaked on the axis `h1 < h2 < … < hm`.
    SpIc,
    /// `P(order) ∝ phi^kendall_tau(order, reference)`; identity reference when `None`.
    Mallows {
        phi: f64,
        reference: Option<LinearOrder>,
    },
    /// Pólya urn over all `m!` orders, tuned so two consecutive draws match with probability 1/2.
    Urn,
}

impl Culture {
    pub fn name(&self) -> &'static str {
        match self {
            Culture::Ic => "IC",
            Culture::SpIc => "SP-IC",
            Culture::Mallows { .. } => "Mallows",
            Culture::Urn => "Urn",
        }
    }
}

impl fmt::Display for Culture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Culture {
    type Err = PsError;

    /// `ic`, `sp-ic`, `urn`, `mallows` or `mallows:<phi>` (case-insensitive).
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let (name, arg) = match lower.split_once(':') {
            Some((a, b)) => (a, Some(b)),
            None => (lower.as_str(), None),
        };
        match (name, arg) {
            ("ic", None) => Ok(Culture::Ic),
            ("sp-ic" | "spic", None) => Ok(Culture::SpIc),
            ("urn", None) => Ok(Culture::Urn),
            ("mallows", None) => Ok(Culture::Mallows {
                phi: DEFAULT_PHI,
                reference: None,
            }),
            ("mallows", Some(phi)) => {
                let phi = phi
                    .parse()
                    .map_err(|_| PsError::InvalidParameter(format!("bad dispersion {phi:?}")))?;
                Ok(Culture::Mallows {
                    phi,
                    reference: None,
                })
            }
            _ => Err(PsError::InvalidParameter(format!("unknown culture {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CultureConfig {
    pub culture: Culture,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
}

impl CultureConfig {
    pub fn new(culture: Culture, n: usize, m: usize, seed: u64) -> Self {
        CultureConfig {
            culture,
            n,
            m,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(PsError::InvalidParameter("n and m must be positive".into()));
        }
        match &self.culture {
            Culture::Mallows { phi, reference } => {
                if !(phi.is_finite() && *phi > 0.0 && *phi <= 1.0) {
                    return Err(PsError::InvalidParameter(format!(
                        "Mallows dispersion {phi} not in (0, 1]"
                    )));
                }
                if let Some(r) = reference {
                    if r.len() != self.m {
                        return Err(PsError::DimensionMismatch {
                            expected: self.m,
                            found: r.len(),
                        });
                    }
                }
            }
            Culture::Urn if factorial(self.m).is_none() => {
                return Err(PsError::InvalidParameter(format!(
                    "{}! orders do not fit in 64 bits",
                    self.m
                )));
            }
            _ => {}
        }
        Ok(())
    }
}

/// Draws an instance from the configured culture.
pub fn generate(config: &CultureConfig) -> Result<Instance> {
    config.validate()?;
    let mut rng = SeededRng::new(config.seed);
    let (n, m) = (config.n, config.m);
    let profile = match &config.culture {
        Culture::Ic => (0..n).map(|_| ic_order(&mut rng, m)).collect(),
        Culture::SpIc => (0..n).map(|_| single_peaked_order(&mut rng, m)).collect(),
        Culture::Mallows { phi, reference } => {
            let reference = reference
                .clone()
                .unwrap_or_else(|| LinearOrder::identity(m));
            (0..n)
                .map(|_| mallows_order(&mut rng, &reference, *phi))
                .collect()
        }
        Culture::Urn => urn_orders(&mut rng, n, m),
    };
    Instance::new(profile)
}

pub fn gen_ic(n: usize, m: usize, seed: u64) -> Result<Instance> {
    generate(&CultureConfig::new(Culture::Ic, n, m, seed))
}

pub fn gen_sp_ic(n: usize, m: usize, seed: u64) -> Result<Instance> {
    generate(&CultureConfig::new(Culture::SpIc, n, m, seed))
}

pub fn gen_mallows(
    n: usize,
    m: usize,
    phi: f64,
    reference: Option<LinearOrder>,
    seed: u64,
) -> Result<Instance> {
    generate(&CultureConfig::new(
        Culture::Mallows { phi, reference },
        n,
        m,
        seed,
    ))
}

pub fn gen_urn(n: usize, m: usize, seed: u64) -> Result<Instance> {
    generate(&CultureConfig::new(Culture::Urn, n, m, seed))
}

fn ic_order(rng: &mut SeededRng, m: usize) -> LinearOrder {
    let mut v: Vec<usize> = (0..m).collect();
    rng.shuffle(&mut v);
    LinearOrder::from_vec_unchecked(v)
}

/// Builds the order from the bottom up: each of the `m − 1` fair coins picks
/// the left or right end of the remaining axis segment as the next-worst house.
fn single_peaked_order(rng: &mut SeededRng, m: usize) -> LinearOrder {
    let (mut lo, mut hi) = (0usize, m - 1);
    let mut bottom_up = Vec::with_capacity(m);
    while lo < hi {
        if rng.coin() {
            bottom_up.push(lo);
            lo += 1;
        } else {
            bottom_up.push(hi);
            hi -= 1;
        }
    }
    bottom_up.push(lo);
    bottom_up.reverse();
    LinearOrder::from_vec_unchecked(bottom_up)
}

/// True iff the order declines monotonically on both sides of its top house
/// along the axis `h1 < … < hm`.
pub fn is_single_peaked(order: &LinearOrder) -> bool {
    let r = order.ranking();
    let Some(&peak) = r.first() else { return true };
    let (mut lo, mut hi) = (peak, peak);
    for &h in &r[1..] {
        if lo > 0 && h == lo - 1 {
            lo -= 1;
        } else if h == hi + 1 {
            hi += 1;
        } else {
            return false;
        }
    }
    true
}

/// Repeated insertion: the `i`-th reference house is inserted at position
/// `j ∈ 0..=i` with weight `phi^(i − j)`.
fn mallows_order(rng: &mut SeededRng, reference: &LinearOrder, phi: f64) -> LinearOrder {
    let mut out: Vec<usize> = Vec::with_capacity(reference.len());
    for (i, &h) in reference.ranking().iter().enumerate() {
        let weights: Vec<f64> = (0..=i).map(|d| phi.powi(d as i32)).collect();
        let total: f64 = weights.iter().sum();
        let mut u = rng.unit_f64() * total;
        let mut displacement = i;
        for (d, w) in weights.iter().enumerate() {
            if u < *w {
                displacement = d;
                break;
            }
            u -= w;
        }
        out.insert(i - displacement, h);
    }
    LinearOrder::from_vec_unchecked(out)
}

/// Kendall tau distance (number of discordant pairs).
pub fn kendall_tau(a: &LinearOrder, b: &LinearOrder) -> usize {
    let pos = b.positions();
    let mapped: Vec<usize> = a.ranking().iter().map(|&h| pos[h]).collect();
    let mut d = 0;
    for i in 0..mapped.len() {
        for j in i + 1..mapped.len() {
            if mapped[i] > mapped[j] {
                d += 1;
            }
        }
    }
    d
}

/// Weight added to an order each time it is drawn from the urn.
pub fn urn_increment(m: usize) -> u64 {
    factorial(m).expect("validated").saturating_sub(2)
}

fn urn_orders(rng: &mut SeededRng, n: usize, m: usize) -> Vec<LinearOrder> {
    let base = factorial(m).expect("validated");
    let a = urn_increment(m);
    // Extra weight only for orders drawn so far, in first-draw order.
    let mut extra: Vec<(u64, u64)> = Vec::new();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let total = base + extra.iter().map(|(_, w)| w).sum::<u64>();
        let mut r = rng.below(total);
        let mut picked = None;
        for (idx, w) in &extra {
            if r < *w {
                picked = Some(*idx);
                break;
            }
            r -= w;
        }
        let idx = picked.unwrap_or(r);
        match extra.iter_mut().find(|(i, _)| *i == idx) {
            Some(slot) => slot.1 += a,
            None if a > 0 => extra.push((idx, a)),
            None => {}
        }
        out.push(LinearOrder::from_vec_unchecked(unrank(idx, m)));
    }
    out
}

/// Random utility row consistent with `order`: `m` distinct uniform draws from
/// (0, 1), sorted decreasingly along `order` and scaled to sum to exactly `m`.
/// Draws are dyadic (`k / 2^53`), so the row is exact.
pub fn gen_random_utilities(order: &LinearOrder, seed: u64) -> Vec<Rational> {
    let m = order.len();
    let mut rng = SeededRng::new(seed);
    let draws = loop {
        let mut d: Vec<u64> = (0..m).map(|_| rng.open_dyadic53()).collect();
        d.sort_unstable_by(|a, b| b.cmp(a));
        if d.windows(2).all(|w| w[0] > w[1]) {
            break d;
        }
    };
    let total: BigInt = draws.iter().map(|&k| BigInt::from(k)).sum();
    let mut row = vec![Rational::zero(); m];
    for (&h, &k) in order.ranking().iter().zip(&draws) {
        row[h] = Rational::from_bigints(BigInt::from(k) * BigInt::from(m), total.clone())
            .expect("positive total");
    }
    row
}

/// Random utilities for every agent; agent `i` uses seed `split_seed(seed, i)`.
pub fn random_utility_profile(instance: &Instance, seed: u64) -> UtilityProfile {
    let rows = instance
        .profile()
        .iter()
        .enumerate()
        .map(|(i, o)| gen_random_utilities(o, split_seed(seed, i as u64)))
        .collect();
    UtilityProfile::from_rows(rows).expect("rectangular")
}
