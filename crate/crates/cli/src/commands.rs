//! Subcommand implementations.

use std::collections::hash_map::RandomState;
use std::fs;
use std::hash::BuildHasher;
use std::io::Read;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use pslab::cultures::{generate, random_utility_profile, Culture, CultureConfig};
use pslab::equilibria::{enumerate_pne, profile_census, welfare_report, CensusRow};
use pslab::experiments::{emit_figures_data, run_experiment, samples_csv, ExperimentConfig};
use pslab::model::format_profile;
use pslab::preflib::{parse_soc, parse_soc_legacy, sample_instance, PrefLibDocument};
use pslab::relations::Payoff;
use pslab::rng::split_seed;
use pslab::selfcheck::run_selfcheck;
use pslab::strategy::{best_response as library_best_response, run_dynamics, Terminal};
use pslab::threat::check_threat_guarantees;
use pslab::{
    compute_granularity, run_ps, spne_construct, verify_pne, Bounds, Instance, InstanceFile,
    LinearOrder, MoverPolicy, Rational, Relation, UtilityProfile,
};
use serde_json::{json, Value};

use crate::output::{self, OutputMode};
use crate::{CliError, Ctx, InstanceArgs, PolicyArg, RelationArg, UtilityArgs};

type CmdResult = Result<(), CliError>;

fn load_instance(args: &InstanceArgs) -> Result<(Instance, Option<UtilityProfile>), CliError> {
    let text = if args.instance.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        s
    } else {
        fs::read_to_string(&args.instance)
            .map_err(|e| CliError::Domain(format!("{}: {e}", args.instance.display())))?
    };
    Ok(InstanceFile::from_json(&text)?.into_parts()?)
}

/// Returns `seed`, or a fresh one announced on stderr.
fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let nanos = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_nanos() as u64);
        let fresh = RandomState::new().hash_one(nanos);
        eprintln!("seed: {fresh}");
        fresh
    })
}

/// Utilities for EU: `--borda`, else the file's, else sampled.
fn eu_utilities(
    instance: &Instance,
    file: Option<UtilityProfile>,
    args: &UtilityArgs,
) -> UtilityProfile {
    if args.borda {
        return UtilityProfile::borda(instance);
    }
    match file {
        Some(u) => u,
        None => random_utility_profile(instance, resolve_seed(args.seed)),
    }
}

/// Utilities needed by the relation, if any.
fn relation_utilities(
    relation: RelationArg,
    instance: &Instance,
    file: Option<UtilityProfile>,
    args: &UtilityArgs,
) -> Option<UtilityProfile> {
    match relation {
        RelationArg::Eu => Some(eu_utilities(instance, file, args)),
        RelationArg::Dl if args.borda => Some(UtilityProfile::borda(instance)),
        RelationArg::Dl => file,
    }
}

fn make_relation(kind: RelationArg, utilities: Option<&UtilityProfile>) -> Relation<'_> {
    match (kind, utilities) {
        (RelationArg::Eu, Some(u)) => Relation::Eu(u),
        _ => Relation::Dl,
    }
}

fn relation_name(kind: RelationArg) -> &'static str {
    match kind {
        RelationArg::Eu => "eu",
        RelationArg::Dl => "dl",
    }
}

fn parse_profile(text: Option<&str>, instance: &Instance) -> Result<Vec<LinearOrder>, CliError> {
    let Some(text) = text else {
        return Ok(instance.profile().to_vec());
    };
    let profile = text
        .split(';')
        .map(|s| s.parse::<LinearOrder>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Usage(format!("--profile: {e}")))?;
    instance.with_profile(profile.clone())?;
    Ok(profile)
}

fn payoff_json(p: &Payoff) -> Value {
    match p {
        Payoff::Utility(u) => output::rational(u),
        Payoff::Allocation(row) => output::rationals(row),
    }
}

fn payoff_text(p: &Payoff) -> String {
    match p {
        Payoff::Utility(u) => u.to_string(),
        Payoff::Allocation(row) => row
            .iter()
            .map(Rational::to_string)
            .collect::<Vec<_>>()
            .join(" "),
    }
}

fn bounds() -> Result<Bounds, CliError> {
    Ok(Bounds::from_env()?)
}

fn no_csv(what: &str) -> CliError {
    CliError::Usage(format!("{what} has no csv output; use human or json"))
}

pub fn ps(ctx: &Ctx, args: &InstanceArgs, trace: bool) -> CmdResult {
    let (instance, _) = load_instance(args)?;
    let (p, events) = run_ps(&instance);
    match ctx.output {
        OutputMode::Human => {
            print!("{p}");
            if ctx.approx {
                println!("\n{}", output::decimal_matrix(&p));
            }
            if trace {
                print!("{events}");
            }
        }
        OutputMode::Json => {
            let mut v = json!({ "n": p.n(), "m": p.m(), "assignment": output::matrix(&p) });
            if ctx.approx {
                v["approx"] = output::approx_matrix(&p);
            }
            if trace {
                v["trace"] = events
                    .events
                    .iter()
                    .map(|e| json!({ "time": output::rational(&e.time), "finished": e.finished }))
                    .collect();
            }
            output::print_json(&v)?;
        }
        OutputMode::Csv => {
            let mut w = output::csv_writer();
            let mut header = vec!["agent", "house", "fraction"];
            if ctx.approx {
                header.push("approx");
            }
            w.write_record(&header).map_err(csv_err)?;
            for i in 0..p.n() {
                for h in 0..p.m() {
                    let x = p.get(i, h);
                    let mut rec = vec![i.to_string(), h.to_string(), x.to_string()];
                    if ctx.approx {
                        rec.push(x.to_f64().to_string());
                    }
                    w.write_record(&rec).map_err(csv_err)?;
                }
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Domain(e.to_string())
}

fn agent_index(agent: usize, instance: &Instance) -> Result<usize, CliError> {
    if agent == 0 || agent > instance.n() {
        return Err(CliError::Usage(format!(
            "--agent must be between 1 and {}",
            instance.n()
        )));
    }
    Ok(agent - 1)
}

pub fn best_response(
    ctx: &Ctx,
    args: &InstanceArgs,
    agent: usize,
    kind: RelationArg,
    profile: Option<&str>,
    uargs: &UtilityArgs,
) -> CmdResult {
    let (instance, file_u) = load_instance(args)?;
    let agent = agent_index(agent, &instance)?;
    let reported = parse_profile(profile, &instance)?;
    let utilities = relation_utilities(kind, &instance, file_u, uargs);
    let relation = make_relation(kind, utilities.as_ref());
    let br = library_best_response(&instance, &relation, &reported, agent, &bounds()?)?;
    let mut v = json!({
        "agent": agent,
        "relation": relation_name(kind),
        "order": output::order(&br.order),
        "row": output::rationals(&br.row),
        "value": payoff_json(&br.value),
        "current": payoff_json(&br.current),
        "improves": br.improves,
    });
    if ctx.approx {
        v["row_approx"] = br.row.iter().map(output::approx).collect();
    }
    match ctx.output {
        OutputMode::Human => {
            println!("agent {} best response: {}", agent + 1, br.order);
            println!(
                "allocation: {}",
                payoff_text(&Payoff::Allocation(br.row.clone()))
            );
            println!(
                "value: {} (current {})",
                payoff_text(&br.value),
                payoff_text(&br.current)
            );
            println!("improves: {}", if br.improves { "yes" } else { "no" });
        }
        OutputMode::Json => output::print_json(&v)?,
        OutputMode::Csv => {
            let mut w = output::csv_writer();
            w.write_record(["agent", "relation", "order", "value", "current", "improves"])
                .map_err(csv_err)?;
            w.write_record([
                agent.to_string(),
                relation_name(kind).to_string(),
                br.order.to_string(),
                payoff_text(&br.value),
                payoff_text(&br.current),
                br.improves.to_string(),
            ])
            .map_err(csv_err)?;
            w.flush()?;
        }
    }
    Ok(())
}

pub fn dynamics(
    ctx: &Ctx,
    args: &InstanceArgs,
    kind: RelationArg,
    policy: PolicyArg,
    max_steps: usize,
    profile: Option<&str>,
    uargs: &UtilityArgs,
) -> CmdResult {
    let (instance, file_u) = load_instance(args)?;
    let start = parse_profile(profile, &instance)?;
    let utilities = relation_utilities(kind, &instance, file_u, uargs);
    let relation = make_relation(kind, utilities.as_ref());
    let policy = match policy {
        PolicyArg::RoundRobin => MoverPolicy::RoundRobin,
        PolicyArg::FirstImproving => MoverPolicy::FirstImproving,
    };
    let out = run_dynamics(&instance, &relation, &start, policy, max_steps, &bounds()?)?;
    let terminal = match &out.terminal {
        Terminal::FixedPoint(_) => json!({ "kind": "fixed_point" }),
        Terminal::Cycle { start, period } => {
            json!({ "kind": "cycle", "start": start, "period": period })
        }
        Terminal::StepLimit => json!({ "kind": "step_limit" }),
    };
    match ctx.output {
        OutputMode::Human => {
            println!("step 0: {}", format_profile(&out.trajectory[0]));
            for (k, agent) in out.movers.iter().enumerate() {
                println!(
                    "step {}: agent {} -> {}",
                    k + 1,
                    agent + 1,
                    format_profile(&out.trajectory[k + 1])
                );
            }
            match &out.terminal {
                Terminal::FixedPoint(_) => println!("fixed point after {} moves", out.movers.len()),
                Terminal::Cycle { start, period } => println!(
                    "cycle: step {} repeats step {start} (period {period})",
                    start + period
                ),
                Terminal::StepLimit => println!("stopped after {max_steps} moves"),
            }
        }
        OutputMode::Json => {
            let steps: Vec<Value> = out
                .trajectory
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    let mover = if k == 0 {
                        Value::Null
                    } else {
                        json!(out.movers[k - 1])
                    };
                    json!({ "step": k, "agent": mover, "profile": output::profile(p) })
                })
                .collect();
            output::print_json(
                &json!({ "relation": relation_name(kind), "steps": steps, "terminal": terminal }),
            )?;
        }
        OutputMode::Csv => {
            let mut w = output::csv_writer();
            w.write_record(["step", "agent", "profile"])
                .map_err(csv_err)?;
            for (k, p) in out.trajectory.iter().enumerate() {
                let agent = if k == 0 {
                    String::new()
                } else {
                    out.movers[k - 1].to_string()
                };
                w.write_record([k.to_string(), agent, format_profile(p)])
                    .map_err(csv_err)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

pub fn verify(
    ctx: &Ctx,
    args: &InstanceArgs,
    kind: RelationArg,
    profile: Option<&str>,
    uargs: &UtilityArgs,
) -> CmdResult {
    let (instance, file_u) = load_instance(args)?;
    let reported = parse_profile(profile, &instance)?;
    let utilities = relation_utilities(kind, &instance, file_u, uargs);
    let relation = make_relation(kind, utilities.as_ref());
    let verdict = verify_pne(&instance, &relation, &reported, &bounds()?)?;
    let witness = verdict.witness.as_ref().map(|d| {
        json!({ "agent": d.agent, "report": output::order(&d.report), "old": payoff_json(&d.old), "new": payoff_json(&d.new) })
    });
    match ctx.output {
        OutputMode::Human => {
            println!(
                "{}: {}",
                format_profile(&reported),
                if verdict.is_pne {
                    "equilibrium"
                } else {
                    "not an equilibrium"
                }
            );
            if let Some(d) = &verdict.witness {
                println!(
                    "agent {} deviates to {}: {} -> {}",
                    d.agent + 1,
                    d.report,
                    payoff_text(&d.old),
                    payoff_text(&d.new)
                );
            }
        }
        OutputMode::Json => output::print_json(&json!({
            "relation": relation_name(kind),
            "profile": output::profile(&reported),
            "is_pne": verdict.is_pne,
            "witness": witness,
        }))?,
        OutputMode::Csv => {
            let mut w = output::csv_writer();
            w.write_record(["is_pne", "agent", "report"])
                .map_err(csv_err)?;
            let (agent, report) = match &verdict.witness {
                Some(d) => (d.agent.to_string(), d.report.to_string()),
                None => (String::new(), String::new()),
            };
            w.write_record([verdict.is_pne.to_string(), agent, report])
                .map_err(csv_err)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn census_record(row: &CensusRow, approx: bool) -> Vec<String> {
    let mut rec = vec![
        row.profile_id.to_string(),
        row.is_pne.to_string(),
        row.sw.as_ref().map(Rational::to_string).unwrap_or_default(),
        row.class.map(|c| c.to_string()).unwrap_or_default(),
    ];
    if approx {
        rec.push(
            row.sw
                .as_ref()
                .map(|x| x.to_f64().to_string())
                .unwrap_or_default(),
        );
    }
    rec
}

pub fn enumerate(
    ctx: &Ctx,
    args: &InstanceArgs,
    kind: RelationArg,
    bound: Option<u64>,
    uargs: &UtilityArgs,
) -> CmdResult {
    let (instance, file_u) = load_instance(args)?;
    let mut b = bounds()?;
    if let Some(bound) = bound {
        b.max_profiles = bound;
    }
    let utilities = relation_utilities(kind, &instance, file_u, uargs);
    let relation = make_relation(kind, utilities.as_ref());
    match ctx.output {
        OutputMode::Csv => {
            let rows = profile_census(&instance, &relation, utilities.as_ref(), &b)?;
            let mut w = output::csv_writer();
            let mut header = vec!["profile_id", "is_pne", "sw", "class"];
            if ctx.approx {
                header.push("sw_approx");
            }
            w.write_record(&header).map_err(csv_err)?;
            for row in &rows {
                w.write_record(census_record(row, ctx.approx))
                    .map_err(csv_err)?;
            }
            w.flush()?;
        }
        OutputMode::Human | OutputMode::Json => {
            let pne = enumerate_pne(&instance, &relation, utilities.as_ref(), &b)?;
            let report = utilities
                .as_ref()
                .map(|u| welfare_report(&instance, u, &pne))
                .transpose()?;
            let total = b.check_profiles(instance.n(), instance.m())?;
            if ctx.output == OutputMode::Human {
                println!(
                    "{} of {total} profiles are equilibria ({})",
                    pne.len(),
                    relation_name(kind)
                );
                if let Some(r) = &report {
                    println!("truthful welfare: {}", r.sw_truthful);
                }
                for (k, rec) in pne.iter().enumerate() {
                    let class = report
                        .as_ref()
                        .map(|r| format!("  sw={} {}", r.records[k].sw, r.records[k].class));
                    println!(
                        "#{} {}{}",
                        rec.profile_id,
                        format_profile(&rec.profile),
                        class.unwrap_or_default()
                    );
                }
            } else {
                let equilibria: Vec<Value> = pne
                    .iter()
                    .enumerate()
                    .map(|(k, rec)| {
                        let mut v = json!({ "profile_id": rec.profile_id, "profile": output::profile(&rec.profile) });
                        if let Some(r) = &report {
                            let w = &r.records[k];
                            v["sw"] = output::rational(&w.sw);
                            v["class"] = json!(w.class);
                            v["pct_change"] = output::rational(&w.pct_change);
                            if ctx.approx {
                                v["sw_approx"] = output::approx(&w.sw);
                            }
                        }
                        v
                    })
                    .collect();
                output::print_json(&json!({
                    "relation": relation_name(kind),
                    "num_profiles": total,
                    "num_pne": pne.len(),
                    "sw_truthful": report.as_ref().map(|r| output::rational(&r.sw_truthful)),
                    "equilibria": equilibria,
                }))?;
            }
        }
    }
    Ok(())
}

pub fn spne(
    ctx: &Ctx,
    args: &InstanceArgs,
    kind: RelationArg,
    quantum: Option<&str>,
    uargs: &UtilityArgs,
) -> CmdResult {
    let (instance, file_u) = load_instance(args)?;
    let quantum = quantum
        .map(|q| {
            q.parse::<Rational>()
                .map_err(|e| CliError::Usage(format!("--quantum: {e}")))
        })
        .transpose()?;
    let utilities = relation_utilities(kind, &instance, file_u, uargs);
    let relation = make_relation(kind, utilities.as_ref());
    let b = bounds()?;
    let granularity = if quantum.is_none() {
        Some(compute_granularity(&instance, &b)?)
    } else {
        None
    };
    let (game, verdict) = spne_construct(&instance, &relation, quantum, &b)?;
    match ctx.output {
        OutputMode::Human => {
            if let Some(g) = &granularity {
                println!("granularity: {} ({} gaps)", g.g, g.event_gap_count);
            }
            println!(
                "quantum: {}  sub-stages: {}  states: {}",
                game.quantum, game.depth, game.node_count
            );
            println!("profile: {}", format_profile(&game.profile));
            print!("{}", game.allocation);
            println!(
                "{}",
                if verdict.is_pne {
                    "equilibrium"
                } else {
                    "not an equilibrium"
                }
            );
        }
        OutputMode::Json => {
            let mut v = json!({
                "relation": relation_name(kind),
                "quantum": output::rational(&game.quantum),
                "depth": game.depth,
                "node_count": game.node_count,
                "profile": output::profile(&game.profile),
                "allocation": output::matrix(&game.allocation),
                // agent of sub-stage k is k mod n
                "path": game.path.iter().map(|&(_, h)| h).collect::<Vec<_>>(),
                "is_pne": verdict.is_pne,
            });
            if let Some(g) = &granularity {
                v["granularity"] = output::rational(&g.g);
            }
            output::print_json(&v)?;
        }
        OutputMode::Csv => return Err(no_csv("spne")),
    }
    Ok(())
}

pub fn threat(ctx: &Ctx, args: &InstanceArgs, check: bool) -> CmdResult {
    let (instance, file_u) = load_instance(args)?;
    if instance.n() != 2 {
        return Err(CliError::Domain(format!(
            "threat profiles need exactly 2 agents, got {}",
            instance.n()
        )));
    }
    let (o1, o2) = (instance.order(0), instance.order(1));
    let mut utilities = vec![UtilityProfile::borda(&instance)];
    utilities.extend(file_u);
    let report = check_threat_guarantees(o1, o2, if check { &utilities } else { &[] }, &bounds()?)?;
    match ctx.output {
        OutputMode::Human => {
            println!("Q1: {}", report.q1);
            println!("Q2: {}", report.q2);
            if check {
                let bad = report.falsifications();
                println!("same assignment as truthful: {}", report.same_assignment);
                println!("DL equilibrium: {}", report.dl_pne);
                println!(
                    "EU equilibrium (borda{}): {:?}",
                    if utilities.len() > 1 { ", file" } else { "" },
                    report.eu_pne
                );
                println!(
                    "{}",
                    if bad.is_empty() {
                        "guarantees hold".to_string()
                    } else {
                        bad.join("; ")
                    }
                );
            }
        }
        OutputMode::Json => {
            let mut v = json!({ "q1": output::order(&report.q1), "q2": output::order(&report.q2) });
            if check {
                v["check"] = json!({
                    "same_assignment": report.same_assignment,
                    "dl_pne": report.dl_pne,
                    "eu_pne": report.eu_pne,
                    "holds": report.holds(),
                });
            }
            output::print_json(&v)?;
        }
        OutputMode::Csv => return Err(no_csv("threat")),
    }
    if check && !report.holds() {
        return Err(CliError::Domain(report.falsifications().join("; ")));
    }
    Ok(())
}

fn instance_json(f: &InstanceFile) -> String {
    output::pretty(&serde_json::to_value(f).expect("instance files serialize"))
}

fn write_instances(ctx: &Ctx, files: Vec<InstanceFile>, out: Option<&Path>) -> CmdResult {
    if ctx.output == OutputMode::Csv {
        return Err(no_csv("instance generation"));
    }
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            for (k, f) in files.iter().enumerate() {
                let path = dir.join(format!("instance-{k:04}.json"));
                fs::write(&path, instance_json(f))?;
                if ctx.output == OutputMode::Human {
                    println!("{}", path.display());
                }
            }
        }
        None if files.len() == 1 => print!("{}", instance_json(&files[0])),
        None => {
            for f in &files {
                println!(
                    "{}",
                    serde_json::to_string(f).map_err(|e| CliError::Domain(e.to_string()))?
                );
            }
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn gen(
    ctx: &Ctx,
    model: &str,
    n: usize,
    m: usize,
    seed: Option<u64>,
    phi: Option<f64>,
    count: usize,
    with_utilities: bool,
    out: Option<&Path>,
) -> CmdResult {
    let mut culture: Culture = model
        .parse()
        .map_err(|e: pslab::PsError| CliError::Usage(e.to_string()))?;
    if let Some(p) = phi {
        match &mut culture {
            Culture::Mallows { phi, .. } => *phi = p,
            _ => return Err(CliError::Usage("--phi only applies to mallows".into())),
        }
    }
    let seed = resolve_seed(seed);
    let files = (0..count)
        .map(|k| {
            let s = split_seed(seed, k as u64);
            let instance = generate(&CultureConfig::new(culture.clone(), n, m, s))?;
            let u = with_utilities.then(|| random_utility_profile(&instance, split_seed(s, 1)));
            Ok(InstanceFile::new(&instance, u.as_ref()))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    write_instances(ctx, files, out)
}

fn read_soc(path: &Path, legacy: bool) -> Result<PrefLibDocument, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))?;
    let doc = if legacy {
        parse_soc_legacy(&text)
    } else {
        parse_soc(&text)
    };
    doc.map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))
}

#[allow(clippy::too_many_arguments)]
pub fn import(
    ctx: &Ctx,
    input: &Path,
    legacy: bool,
    n: Option<usize>,
    m: Option<usize>,
    seed: Option<u64>,
    count: usize,
    with_utilities: bool,
    out: Option<&Path>,
) -> CmdResult {
    let doc = read_soc(input, legacy)?;
    let n = n.unwrap_or(doc.voters() as usize);
    let m = m.unwrap_or(doc.alternatives);
    let seed = resolve_seed(seed);
    let files = (0..count)
        .map(|k| {
            let s = split_seed(seed, k as u64);
            let instance = sample_instance(&doc, n, m, s)?;
            let u = with_utilities.then(|| random_utility_profile(&instance, split_seed(s, 1)));
            Ok(InstanceFile::new(&instance, u.as_ref()))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    write_instances(ctx, files, out)
}

pub fn experiment(ctx: &Ctx, config: &Path, out: &Path, seed: Option<u64>) -> CmdResult {
    let text = fs::read_to_string(config)
        .map_err(|e| CliError::Domain(format!("{}: {e}", config.display())))?;
    let base = config.parent().unwrap_or(Path::new("."));
    let cells = ExperimentConfig::parse_cells(&text, |p| {
        let path = base.join(p);
        let text = fs::read_to_string(&path)
            .map_err(|e| pslab::PsError::Config(format!("{}: {e}", path.display())))?;
        parse_soc(&text)
    })?;
    let mut cfg = ExperimentConfig::new(cells, resolve_seed(seed));
    cfg.bounds = bounds()?;
    let result = run_experiment(&cfg)?;
    fs::create_dir_all(out)?;
    let (classification, extremes) = emit_figures_data(&result.summaries);
    fs::write(out.join("samples.csv"), samples_csv(&result.samples))?;
    fs::write(out.join("classification.csv"), &classification)?;
    fs::write(out.join("extremes.csv"), &extremes)?;
    let summaries: Vec<Value> = result
        .summaries
        .iter()
        .map(|s| {
            json!({
                "model": s.model,
                "n": s.n,
                "m": s.m,
                "samples": s.samples,
                "skipped": s.skipped,
                "mean_equal": output::rational(&s.mean_equal),
                "mean_increase": output::rational(&s.mean_increase),
                "mean_decrease": output::rational(&s.mean_decrease),
                "mean_num_pne": output::rational(&s.mean_num_pne),
                "frac_equal": output::rational(&s.frac_equal),
                "frac_increase": output::rational(&s.frac_increase),
                "frac_decrease": output::rational(&s.frac_decrease),
                "max_pct_increase": output::rational(&s.max_pct_increase),
                "max_pct_decrease": output::rational(&s.max_pct_decrease),
                "wall_time_secs": s.wall_time.as_secs_f64(),
            })
        })
        .collect();
    let summary = json!({ "root_seed": cfg.root_seed, "cells": summaries });
    fs::write(out.join("summary.json"), output::pretty(&summary))?;
    match ctx.output {
        OutputMode::Human => {
            println!(
                "{:<10} {:>2} {:>2} {:>7} {:>8} {:>8} {:>8} {:>9} {:>9} {:>8}",
                "model",
                "n",
                "m",
                "samples",
                "equal",
                "increase",
                "decrease",
                "max+%",
                "max-%",
                "time"
            );
            for s in &result.summaries {
                if let Some(reason) = &s.skipped {
                    println!("{:<10} {:>2} {:>2} skipped: {reason}", s.model, s.n, s.m);
                    continue;
                }
                println!(
                    "{:<10} {:>2} {:>2} {:>7} {:>8} {:>8} {:>8} {:>9} {:>9} {:>7.2}s",
                    s.model,
                    s.n,
                    s.m,
                    s.samples,
                    s.frac_equal.to_decimal(4),
                    s.frac_increase.to_decimal(4),
                    s.frac_decrease.to_decimal(4),
                    s.max_pct_increase.to_decimal(4),
                    s.max_pct_decrease.to_decimal(4),
                    s.wall_time.as_secs_f64()
                );
            }
            println!("wrote {}", out.display());
        }
        OutputMode::Json => output::print_json(&summary)?,
        OutputMode::Csv => print!("{classification}"),
    }
    Ok(())
}

pub fn selfcheck(ctx: &Ctx) -> CmdResult {
    let results = run_selfcheck();
    match ctx.output {
        OutputMode::Human => {
            for r in &results {
                println!(
                    "{} {}: {}",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.name,
                    r.detail
                );
            }
        }
        OutputMode::Json => output::print_json(&json!({
            "passed": results.iter().all(|r| r.passed),
            "checks": results.iter().map(|r| json!({ "name": r.name, "passed": r.passed, "detail": r.detail })).collect::<Vec<_>>(),
        }))?,
        OutputMode::Csv => {
            let mut w = output::csv_writer();
            w.write_record(["name", "passed", "detail"])
                .map_err(csv_err)?;
            for r in &results {
                w.write_record([r.name, &r.passed.to_string(), &r.detail])
                    .map_err(csv_err)?;
            }
            w.flush()?;
        }
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(CliError::Domain(format!(
            "{failed} reference check(s) failed"
        )));
    }
    Ok(())
}
