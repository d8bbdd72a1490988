//! Welfare of equilibria compared with truthful reporting.
//!
//! Each sample draws an instance and random utilities, enumerates every EU
//! equilibrium, and classifies each one by whether its social welfare is
//! equal to, above or below that of the truthful profile. Cells aggregate
//! samples with the same model and size.
//!
//! Seeds: cell `c` uses `split_seed(root, c)`; sample `s` of that cell uses
//! `split_seed(cell_seed, s)`; within a sample, the instance is drawn from
//! `split_seed(sample_seed, 0)` and utilities from `split_seed(sample_seed, 1)`.

use std::fmt::Write as _;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::Bounds;
use crate::cultures::{generate, random_utility_profile, Culture, CultureConfig};
use crate::equilibria::{enumerate_pne, verify_pne, welfare_report};
use crate::error::{PsError, Result};
use crate::model::{social_welfare, Instance, UtilityProfile, WelfareClass};
use crate::preflib::{sample_instance, PrefLibDocument};
use crate::ps::ps_assignment;
use crate::rational::Rational;
use crate::relations::Relation;
use crate::rng::split_seed;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum CellModel {
    Culture(Culture),
    /// Agents sampled from a PrefLib document.
    PrefLib {
        name: String,
        #[serde(skip)]
        doc: Arc<PrefLibDocument>,
    },
}

impl CellModel {
    pub fn name(&self) -> String {
        match self {
            CellModel::Culture(Culture::Mallows { phi, .. }) => format!("Mallows:{phi}"),
            CellModel::Culture(c) => c.name().to_string(),
            CellModel::PrefLib { name, .. } => name.clone(),
        }
    }

    pub fn draw(&self, n: usize, m: usize, seed: u64) -> Result<Instance> {
        match self {
            CellModel::Culture(c) => generate(&CultureConfig::new(c.clone(), n, m, seed)),
            CellModel::PrefLib { doc, .. } => sample_instance(doc, n, m, seed),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellSpec {
    pub model: CellModel,
    pub n: usize,
    pub m: usize,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub cells: Vec<CellSpec>,
    pub root_seed: u64,
    #[serde(skip)]
    pub bounds: Bounds,
    /// Every `cross_check_every`-th sample is re-derived by the slow path (0 disables).
    pub cross_check_every: usize,
}

impl ExperimentConfig {
    pub fn new(cells: Vec<CellSpec>, root_seed: u64) -> Self {
        ExperimentConfig {
            cells,
            root_seed,
            bounds: Bounds::default(),
            cross_check_every: 100,
        }
    }

    /// Parses `model,n,m,samples` lines. `#` starts a comment. Models are
    /// culture names (`ic`, `sp-ic`, `mallows[:phi]`, `urn`) or
    /// `preflib:<path>`, resolved through `load`.
    pub fn parse_cells(
        text: &str,
        mut load: impl FnMut(&str) -> Result<PrefLibDocument>,
    ) -> Result<Vec<CellSpec>> {
        let mut cells = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |what: &str| PsError::Config(format!("line {}: {what}: {raw:?}", idx + 1));
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(bad("expected model,n,m,samples"));
            }
            let model = match fields[0].strip_prefix("preflib:") {
                Some(path) => {
                    let stem = std::path::Path::new(path)
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned());
                    let name = format!("PrefLib:{}", stem.unwrap_or_default());
                    CellModel::PrefLib {
                        name,
                        doc: Arc::new(load(path)?),
                    }
                }
                None => CellModel::Culture(fields[0].parse().map_err(|_| bad("unknown model"))?),
            };
            let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad number"));
            let (n, m, samples) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
            if n == 0 || m == 0 {
                return Err(bad("n and m must be positive"));
            }
            cells.push(CellSpec {
                model,
                n,
                m,
                samples,
            });
        }
        Ok(cells)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SampleRecord {
    pub model: String,
    pub n: usize,
    pub m: usize,
    pub sample: usize,
    pub seed: u64,
    pub sw_truthful: Rational,
    pub num_pne: usize,
    pub equal: usize,
    pub increase: usize,
    pub decrease: usize,
    pub max_pct_increase: Rational,
    pub max_pct_decrease: Rational,
}

impl SampleRecord {
    pub fn fractions(&self) -> [Rational; 3] {
        let total = Rational::from_integer(self.num_pne.max(1) as i64);
        [self.equal, self.increase, self.decrease]
            .map(|k| Rational::from_integer(k as i64) / &total)
    }
}

/// Draws one sample from its seed and classifies its equilibria.
pub fn run_sample(
    model: &CellModel,
    n: usize,
    m: usize,
    sample: usize,
    seed: u64,
    bounds: &Bounds,
) -> Result<SampleRecord> {
    let (instance, utilities) = draw_sample(model, n, m, seed)?;
    let pne = enumerate_pne(&instance, &Relation::Eu(&utilities), None, bounds)?;
    let report = welfare_report(&instance, &utilities, &pne)?;
    let max_pct = |class| {
        report
            .records
            .iter()
            .filter(|r| r.class == class)
            .map(|r| r.pct_change.clone())
            .max()
            .unwrap_or_default()
    };
    Ok(SampleRecord {
        model: model.name(),
        n,
        m,
        sample,
        seed,
        num_pne: pne.len(),
        equal: report.count(WelfareClass::Equal),
        increase: report.count(WelfareClass::Increase),
        decrease: report.count(WelfareClass::Decrease),
        max_pct_increase: max_pct(WelfareClass::Increase),
        max_pct_decrease: max_pct(WelfareClass::Decrease),
        sw_truthful: report.sw_truthful,
    })
}

pub fn draw_sample(
    model: &CellModel,
    n: usize,
    m: usize,
    seed: u64,
) -> Result<(Instance, UtilityProfile)> {
    let instance = model.draw(n, m, split_seed(seed, 0))?;
    let utilities = random_utility_profile(&instance, split_seed(seed, 1));
    Ok((instance, utilities))
}

/// Re-derives a sample's classification profile by profile: every profile is
/// checked with [`verify_pne`] and equilibria are classified by direct welfare
/// comparison. Returns an error describing the first disagreement.
pub fn cross_check_sample(model: &CellModel, record: &SampleRecord, bounds: &Bounds) -> Result<()> {
    let (instance, utilities) = draw_sample(model, record.n, record.m, record.seed)?;
    let relation = Relation::Eu(&utilities);
    let count = bounds.check_profiles(record.n, record.m)?;
    let truthful = social_welfare(&ps_assignment(record.m, instance.profile()), &utilities)?;
    let counts = (0..count)
        .into_par_iter()
        .map(|id| {
            let profile = crate::equilibria::profile_from_id(id, record.n, record.m);
            if !verify_pne(&instance, &relation, &profile, bounds)?.is_pne {
                return Ok([0usize; 4]);
            }
            let sw = social_welfare(&ps_assignment(record.m, &profile), &utilities)?;
            Ok(match sw.cmp(&truthful) {
                std::cmp::Ordering::Equal => [1, 1, 0, 0],
                std::cmp::Ordering::Greater => [1, 0, 1, 0],
                std::cmp::Ordering::Less => [1, 0, 0, 1],
            })
        })
        .try_reduce(
            || [0; 4],
            |a, b| Ok([a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]),
        )?;
    let fast = [
        record.num_pne,
        record.equal,
        record.increase,
        record.decrease,
    ];
    if counts != fast || truthful != record.sw_truthful {
        return Err(PsError::Config(format!(
            "cross-check failed for {} n={} m={} sample {}: fast {fast:?}, slow {counts:?}",
            record.model, record.n, record.m, record.sample
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellSummary {
    pub model: String,
    pub n: usize,
    pub m: usize,
    pub samples: usize,
    /// Why the cell was not run, if it was skipped.
    pub skipped: Option<String>,
    pub mean_equal: Rational,
    pub mean_increase: Rational,
    pub mean_decrease: Rational,
    pub mean_num_pne: Rational,
    /// Pooled over all equilibria of the cell.
    pub frac_equal: Rational,
    pub frac_increase: Rational,
    pub frac_decrease: Rational,
    pub max_pct_increase: Rational,
    pub max_pct_decrease: Rational,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl CellSummary {
    fn from_samples(spec: &CellSpec, records: &[SampleRecord], wall_time: Duration) -> Self {
        let k = Rational::from_integer(records.len().max(1) as i64);
        let sum = |f: fn(&SampleRecord) -> usize| records.iter().map(f).sum::<usize>();
        let (eq, inc, dec, all) = (
            sum(|r| r.equal),
            sum(|r| r.increase),
            sum(|r| r.decrease),
            sum(|r| r.num_pne),
        );
        let frac = |x: usize| {
            if all == 0 {
                Rational::zero()
            } else {
                Rational::new(x as i64, all as i64)
            }
        };
        let mean = |x: usize| Rational::from_integer(x as i64) / &k;
        CellSummary {
            model: spec.model.name(),
            n: spec.n,
            m: spec.m,
            samples: records.len(),
            skipped: None,
            mean_equal: mean(eq),
            mean_increase: mean(inc),
            mean_decrease: mean(dec),
            mean_num_pne: mean(all),
            frac_equal: frac(eq),
            frac_increase: frac(inc),
            frac_decrease: frac(dec),
            max_pct_increase: records
                .iter()
                .map(|r| r.max_pct_increase.clone())
                .max()
                .unwrap_or_default(),
            max_pct_decrease: records
                .iter()
                .map(|r| r.max_pct_decrease.clone())
                .max()
                .unwrap_or_default(),
            wall_time,
        }
    }

    fn skipped(spec: &CellSpec, reason: String) -> Self {
        let mut s = Self::from_samples(spec, &[], Duration::ZERO);
        s.skipped = Some(reason);
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentOutput {
    pub summaries: Vec<CellSummary>,
    pub samples: Vec<SampleRecord>,
}

/// Runs every cell. Cells over the enumeration budget are skipped, not fatal.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let mut summaries = Vec::with_capacity(config.cells.len());
    let mut samples = Vec::new();
    for (c, spec) in config.cells.iter().enumerate() {
        if let Err(e) = config.bounds.check_profiles(spec.n, spec.m) {
            summaries.push(CellSummary::skipped(spec, e.to_string()));
            continue;
        }
        let started = Instant::now();
        let cell_seed = split_seed(config.root_seed, c as u64);
        let records = (0..spec.samples)
            .into_par_iter()
            .map(|s| {
                let rec = run_sample(
                    &spec.model,
                    spec.n,
                    spec.m,
                    s,
                    split_seed(cell_seed, s as u64),
                    &config.bounds,
                )?;
                if config.cross_check_every > 0 && s % config.cross_check_every == 0 {
                    cross_check_sample(&spec.model, &rec, &config.bounds)?;
                }
                Ok(rec)
            })
            .collect::<Result<Vec<_>>>()?;
        summaries.push(CellSummary::from_samples(spec, &records, started.elapsed()));
        samples.extend(records);
    }
    Ok(ExperimentOutput { summaries, samples })
}

pub const SAMPLES_HEADER: &str =
    "model,n,m,sample,seed,sw_truthful,num_pne,equal,increase,decrease,max_pct_increase,max_pct_decrease";
pub const CLASSIFICATION_HEADER: &str = "model,n,m,frac_equal,frac_increase,frac_decrease";
pub const EXTREMES_HEADER: &str = "model,n,m,max_pct_increase,max_pct_decrease,avg_num_pne";

/// Per-sample CSV with exact rationals.
pub fn samples_csv(samples: &[SampleRecord]) -> String {
    let mut out = format!("{SAMPLES_HEADER}\n");
    for r in samples {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.model,
            r.n,
            r.m,
            r.sample,
            r.seed,
            r.sw_truthful,
            r.num_pne,
            r.equal,
            r.increase,
            r.decrease,
            r.max_pct_increase,
            r.max_pct_decrease
        );
    }
    out
}

/// `(classification.csv, extremes.csv)` contents; skipped cells are omitted.
pub fn emit_figures_data(summaries: &[CellSummary]) -> (String, String) {
    let mut classification = format!("{CLASSIFICATION_HEADER}\n");
    let mut extremes = format!("{EXTREMES_HEADER}\n");
    for s in summaries.iter().filter(|s| s.skipped.is_none()) {
        let _ = writeln!(
            classification,
            "{},{},{},{},{},{}",
            s.model,
            s.n,
            s.m,
            s.frac_equal.to_decimal(4),
            s.frac_increase.to_decimal(4),
            s.frac_decrease.to_decimal(4)
        );
        let _ = writeln!(
            extremes,
            "{},{},{},{},{},{}",
            s.model,
            s.n,
            s.m,
            s.max_pct_increase.to_decimal(4),
            s.max_pct_decrease.to_decimal(4),
            s.mean_num_pne.to_decimal(4)
        );
    }
    (classification, extremes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(culture: Culture, n: usize, m: usize, samples: usize) -> CellSpec {
        CellSpec {
            model: CellModel::Culture(culture),
            n,
            m,
            samples,
        }
    }

    #[test]
    fn parses_cell_lines() {
        let text = "# comment\nic,2,2,30\n\nmallows:0.3, 3, 3, 5 # trailing\n";
        let cells = ExperimentConfig::parse_cells(text, |_| unreachable!()).unwrap();
        assert_eq!(cells.len(), 2);
        assert_eq!(
            cells[1].model,
            CellModel::Culture(Culture::Mallows {
                phi: 0.3,
                reference: None
            })
        );
        assert!(ExperimentConfig::parse_cells("ic,2,2\n", |_| unreachable!()).is_err());
        assert!(ExperimentConfig::parse_cells("foo,2,2,1\n", |_| unreachable!()).is_err());
    }

    #[test]
    fn empty_and_single_cell_csvs() {
        let (c, e) = emit_figures_data(&[]);
        assert_eq!(c, format!("{CLASSIFICATION_HEADER}\n"));
        assert_eq!(e, format!("{EXTREMES_HEADER}\n"));
        let out =
            run_experiment(&ExperimentConfig::new(vec![cell(Culture::Ic, 2, 2, 3)], 1)).unwrap();
        let (c, e) = emit_figures_data(&out.summaries);
        assert_eq!(c.lines().count(), 2);
        assert_eq!(e.lines().count(), 2);
    }

    #[test]
    fn single_agent_cell_is_all_equal() {
        // With one agent every report yields the same (full) allocation.
        let out =
            run_experiment(&ExperimentConfig::new(vec![cell(Culture::Ic, 1, 3, 5)], 3)).unwrap();
        for r in &out.samples {
            assert_eq!(r.num_pne, 6);
            assert_eq!(r.equal, 6);
            assert_eq!(r.sw_truthful, Rational::from_integer(3));
        }
    }

    #[test]
    fn oversized_cells_are_skipped() {
        let mut config = ExperimentConfig::new(
            vec![cell(Culture::Ic, 5, 5, 1), cell(Culture::Ic, 2, 2, 1)],
            0,
        );
        config.bounds.max_profiles = 1000;
        let out = run_experiment(&config).unwrap();
        assert!(out.summaries[0].skipped.is_some());
        assert!(out.summaries[1].skipped.is_none());
        assert_eq!(emit_figures_data(&out.summaries).0.lines().count(), 2);
    }
}
