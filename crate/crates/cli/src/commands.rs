use std::fs;
use std::path::Path;

use anyhow::Context;
use levy_bounds::asymptotics::{classify as classify_triplet, mc_exit_positivity, mc_positivity, McEvidence};
use levy_bounds::measure::{tail_report, TailReport};
use levy_bounds::path::{multilevel_bounds, Horizon};
use levy_bounds::sandwich::build_sandwich;
use levy_bounds::streams::{replicate, replication_rng, Purpose};
use levy_bounds::verify::run_suite;
use levy_bounds::{decompose, LevyError, PathEngine, RunConfig, SkeletonPath};
use serde_json::json;

use crate::{emit, Failure};

fn engine(config: &RunConfig) -> Result<PathEngine, LevyError> {
    let cutoff = match config.level_cutoffs().last() {
        Some(&finest) => finest,
        None => config.cutoff()?,
    };
    PathEngine::new(decompose(&config.triplet, cutoff)?, config.sim_config())
}

fn to_json<T: serde::Serialize>(value: &T) -> anyhow::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn curve(config: &RunConfig, out: Option<&Path>) -> Result<(), Failure> {
    let mut text = format!("{}\n", TailReport::CSV_HEADER);
    for x in config.x_grid()? {
        text.push_str(&tail_report(&config.triplet, x)?.csv_row());
        text.push('\n');
    }
    emit(out, &text)?;
    Ok(())
}

pub fn classify(config: &RunConfig, out: Option<&Path>) -> Result<(), Failure> {
    let mut report = classify_triplet(&config.triplet, &config.x_grid()?, config.params.thresholds)?;
    if config.sim.is_some() {
        let engine = engine(config)?;
        let n = config.replications();
        let positivity = config
            .params
            .t_list
            .iter()
            .map(|&t| mc_positivity(&engine, t, n))
            .collect::<Result<Vec<_>, _>>()?;
        let exit = config
            .params
            .r_list
            .iter()
            .map(|&r| mc_exit_positivity(&engine, r, n))
            .collect::<Result<Vec<_>, _>>()?;
        report.mc_evidence = Some(McEvidence { positivity, exit });
    }
    emit(out, &to_json(&report)?)?;
    Ok(())
}

struct Replication {
    path: Option<SkeletonPath>,
    envelopes: Option<String>,
    violations: usize,
    points: usize,
    reconstruction: f64,
    nested: bool,
    contained: bool,
    gaps_ok: bool,
}

pub fn simulate(config: &RunConfig, out: Option<&Path>) -> Result<(), Failure> {
    let dir = out.unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let engine = engine(config)?;
    let sim = engine.config().clone();
    let levels = config.level_cutoffs();
    let n = config.replications();
    // Surface configuration errors before spawning work.
    if !levels.is_empty() {
        multilevel_bounds(&mut replication_rng(sim.seed, Purpose::Auxiliary, 0), &config.triplet, &levels, Horizon::Steps(0), &sim)?;
    }
    let reps = replicate(sim.seed, Purpose::Skeleton, n, sim.workers, |rep, rng| {
        let (path, envelopes, nested, contained, gaps_ok) = if levels.is_empty() {
            (engine.skeleton_for(rng, sim.horizon, true), None, true, true, true)
        } else {
            let run = multilevel_bounds(rng, &config.triplet, &levels, sim.horizon, &sim).expect("levels checked");
            let csv = (rep == 0).then(|| run.envelopes_csv());
            let flags = (run.nested(), run.contains_path(), run.gaps_nonincreasing());
            (run.path, csv, flags.0, flags.1, flags.2)
        };
        let walks = build_sandwich(&path);
        Replication {
            violations: path.containment_violations(1e-12).unwrap_or(0),
            points: path.fine.as_ref().map_or(0, Vec::len),
            reconstruction: walks.reconstruction_error(&path),
            nested,
            contained,
            gaps_ok,
            envelopes,
            path: (rep == 0).then_some(path),
        }
    });
    let first = reps[0].path.as_ref().expect("replication 0 keeps its path");
    write(dir, "path.csv", &first.path_csv())?;
    write(dir, "skeleton.csv", &first.skeleton_csv())?;
    write(dir, "sandwich.csv", &build_sandwich(first).csv(first))?;
    if let Some(env) = &reps[0].envelopes {
        write(dir, "envelopes.csv", env)?;
    }

    let mut exits = Vec::new();
    for (i, &r) in config.params.r_list.iter().enumerate() {
        let mut rng = replication_rng(sim.seed, Purpose::Exit, i as u64);
        exits.push(match engine.exit_time(&mut rng, r) {
            Ok(o) => json!({ "r": r, "status": "exited", "time": o.time, "top": o.top, "overshoot": o.overshoot }),
            Err(LevyError::HorizonExceeded { cap }) => json!({ "r": r, "status": "horizon_exceeded", "time_cap": cap }),
            Err(e) => return Err(e.into()),
        });
    }

    let violations: usize = reps.iter().map(|r| r.violations).sum();
    let small = engine.small();
    let d = engine.decomposition();
    let summary = json!({
        "seed": sim.seed,
        "replications": n,
        "horizon": sim.horizon,
        "grid_step": sim.grid_step,
        "cutoff": d.cutoff(),
        "delta": d.delta(),
        "small": {
            "kind": small.kind(),
            "drift": small.drift(),
            "sigma2": small.sigma2(),
            "surrogate_variance": small.surrogate_variance(),
            "dropped_variance": small.dropped_variance(),
            "inner_rate": small.inner_rate(),
        },
        "containment": {
            "ok": violations == 0,
            "violations": violations,
            "points_checked": reps.iter().map(|r| r.points).sum::<usize>(),
        },
        "max_reconstruction_error": reps.iter().map(|r| r.reconstruction).fold(0.0, f64::max),
        "levels": config.params.levels,
        "envelopes": (!levels.is_empty()).then(|| json!({
            "nested": reps.iter().all(|r| r.nested),
            "contains_path": reps.iter().all(|r| r.contained),
            "gaps_nonincreasing": reps.iter().all(|r| r.gaps_ok),
        })),
        "exit": exits,
    });
    write(dir, "summary.json", &to_json(&summary)?)?;
    Ok(())
}

fn write(dir: &Path, name: &str, text: &str) -> anyhow::Result<()> {
    emit(Some(&dir.join(name)), text)
}

pub fn verify(config: &RunConfig, out: Option<&Path>) -> Result<(), Failure> {
    let suite = config
        .params
        .suite
        .ok_or_else(|| LevyError::param("params.suite", "missing (sandwich, wienerhopf, thm11, prop12 or identity25)"))?;
    let report = run_suite(config, suite)?;
    emit(out, &to_json(&report)?)?;
    for t in report.tests.iter().filter(|t| t.vacuous) {
        eprintln!("warning: {} is vacuous ({})", t.name, t.notes.join("; "));
    }
    if report.failed() {
        let names: Vec<&str> = report.tests.iter().filter(|t| t.is_failure()).map(|t| t.name.as_str()).collect();
        return Err(Failure::Verification(names.join(", ")));
    }
    Ok(())
}

pub fn exit_prob(config: &RunConfig, out: Option<&Path>) -> Result<(), Failure> {
    if config.params.r_list.is_empty() {
        return Err(LevyError::param("params.r_list", "missing or empty").into());
    }
    let engine = engine(config)?;
    let n = config.replications();
    let mut text = String::from("r,estimate,stderr,runs,excluded\n");
    for &r in &config.params.r_list {
        let p = mc_exit_positivity(&engine, r, n)?;
        text.push_str(&format!("{},{},{},{},{}\n", p.at, p.estimate, p.stderr, p.runs, p.excluded));
    }
    emit(out, &text)?;
    Ok(())
}
