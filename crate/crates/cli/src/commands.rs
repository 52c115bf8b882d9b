use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde_json::{json, Map, Value};
use skipping_core::diagnostics::{batch_means, burn_in, series};
use skipping_core::experiments::{
    run_tail_experiment, table1, table2, tail_start, tune_rwm_scale, TableOutcome, TailSetup,
};
use skipping_core::proposals::UnderlyingProposal;
use skipping_core::samplers::{run_mss, run_rwm, run_skipping, SkippingConfig};
use skipping_core::targets::{eggholder_problem, make_random_mixture, BoltzmannTarget, IntervalUnion, LevelConditionedTarget};
use skipping_core::trace::ChainResult;
use skipping_core::{LogTarget, Point, RngStream};

use crate::config::{ExperimentConfig, ProposalSpec, SamplerKind, TargetSpec};
use crate::output::{write_json, write_rows, write_series, write_text, write_trace, SCHEMA_VERSION};

const TAIL_PILOT_STEPS: usize = 10_000;

enum Target {
    Intervals(IntervalUnion),
    Tail(LevelConditionedTarget),
    Boltzmann(BoltzmannTarget<skipping_core::optimize::BoxProblem>),
    Objective(skipping_core::optimize::BoxProblem),
}

impl Target {
    fn build(spec: &TargetSpec) -> Result<Self> {
        Ok(match spec {
            TargetSpec::Intervals { intervals } => {
                Target::Intervals(IntervalUnion::new(intervals.iter().map(|[a, b]| (*a, *b)).collect())?)
            }
            TargetSpec::MixtureTail {
                dim,
                mixture_seed,
                components,
                spread,
                level_log,
            } => {
                let base = make_random_mixture(*mixture_seed, *components, *dim, *spread)?;
                Target::Tail(LevelConditionedTarget::new(base, *level_log)?)
            }
            TargetSpec::EggholderBoltzmann { temperature } => {
                Target::Boltzmann(BoltzmannTarget::new(eggholder_problem(), *temperature)?)
            }
            TargetSpec::Eggholder => Target::Objective(eggholder_problem()),
        })
    }

    fn log_target(&self) -> Option<&(dyn LogTarget + Sync)> {
        match self {
            Target::Intervals(t) => Some(t),
            Target::Tail(t) => Some(t),
            Target::Boltzmann(t) => Some(t),
            Target::Objective(_) => None,
        }
    }

    fn default_start(&self, rng: &mut RngStream) -> Result<Point> {
        Ok(match self {
            Target::Intervals(t) => {
                let (a, b) = t.intervals()[0];
                let x = match (a.is_finite(), b.is_finite()) {
                    (true, true) => 0.5 * (a + b),
                    (true, false) => a,
                    (false, true) => b,
                    (false, false) => 0.0,
                };
                Point::new(vec![x])?
            }
            Target::Tail(t) => tail_start(t, rng)?,
            Target::Boltzmann(t) => t.objective.sample_uniform(rng),
            Target::Objective(p) => p.sample_uniform(rng),
        })
    }
}

/// Overrides applied from the command line.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub steps: Option<usize>,
    pub out: Option<std::path::PathBuf>,
    pub tune: bool,
}

fn run_one(
    cfg: &ExperimentConfig,
    target: &Target,
    proposal: &UnderlyingProposal,
    start: Point,
    rng: &mut RngStream,
) -> Result<ChainResult> {
    let steps = cfg.run.steps;
    let s = &cfg.sampler;
    Ok(match (s.kind, target) {
        (SamplerKind::Mss, Target::Objective(p)) => {
            let sc = SkippingConfig::new(proposal.clone(), cfg.halting()?);
            run_mss(p, start, &sc, steps, rng)?
        }
        (SamplerKind::Rwm, t) => run_rwm(t.log_target().expect("validated"), start, proposal, steps, rng)?,
        (SamplerKind::Skipping, t) => {
            let sc = SkippingConfig::new(proposal.clone(), cfg.halting()?);
            run_skipping(t.log_target().expect("validated"), start, &sc, steps, rng)?
        }
        _ => unreachable!("validated"),
    })
}

pub fn sample(config_path: &Path, o: &Overrides) -> Result<()> {
    let clock = Instant::now();
    let mut cfg = ExperimentConfig::load(config_path)?;
    if let Some(seed) = o.seed {
        cfg.run.seed = seed;
    }
    if let Some(steps) = o.steps {
        cfg.run.steps = steps;
    }
    if let Some(out) = &o.out {
        cfg.output.dir = out.clone();
    }
    cfg.sampler.tune |= o.tune;
    cfg.validate()?;

    let target = Target::build(&cfg.target)?;
    let dim = cfg.target.dim();
    let root = RngStream::new(cfg.run.seed);
    let starts: Vec<(Point, RngStream)> = (0..cfg.run.chains)
        .map(|i| {
            let chain = root.child(i as u64);
            let start = match &cfg.run.start {
                Some(x) => Point::new(x.clone())?,
                None => target.default_start(&mut chain.child(0))?,
            };
            Ok((start, chain.child(1)))
        })
        .collect::<Result<_>>()?;

    let mut proposal = cfg.proposal()?;
    let mut tuning = Value::Null;
    if cfg.sampler.tune {
        let t = target.log_target().expect("validated");
        let tuned = tune_rwm_scale(
            t,
            &starts[0].0,
            cfg.sampler.target_acceptance,
            cfg.sampler.pilot_steps,
            // the first chain's stream, so the tuned pilot opens that chain
            starts[0].1.seed(),
        )?;
        proposal = UnderlyingProposal::isotropic_gaussian(dim, tuned.scale)?
            .with_equal_increments(cfg.sampler.equal_increments);
        cfg.sampler.proposal = ProposalSpec::IsotropicGaussian { scale: tuned.scale };
        tuning = serde_json::to_value(tuned)?;
    }

    let results: Vec<ChainResult> = starts
        .into_par_iter()
        .map(|(start, mut rng)| run_one(&cfg, &target, &proposal, start, &mut rng))
        .collect::<Result<_>>()?;

    let dir = &cfg.output.dir;
    for (i, res) in results.iter().enumerate() {
        let name = if results.len() == 1 {
            "trace.csv".to_string()
        } else {
            format!("trace_chain{}.csv", i + 1)
        };
        write_trace(&dir.join(name), res)?;
    }

    let k = results.len() as f64;
    let mut averages = Map::new();
    for (name, f) in cfg.functionals() {
        let per_chain: Vec<Value> = results
            .iter()
            .map(|r| {
                let v = series(r, |x| f.eval(x));
                match batch_means(burn_in(&v, cfg.run.burn_in)) {
                    Ok(e) => json!({"mean": e.mean, "std_error": e.std_error, "n_batches": e.n_batches}),
                    Err(_) => {
                        let kept = burn_in(&v, cfg.run.burn_in);
                        json!({"mean": kept.iter().sum::<f64>() / kept.len().max(1) as f64, "std_error": null, "n_batches": 0})
                    }
                }
            })
            .collect();
        let mean = per_chain.iter().map(|e| e["mean"].as_f64().unwrap_or(f64::NAN)).sum::<f64>() / k;
        let se = per_chain
            .iter()
            .map(|e| e["std_error"].as_f64().map(|s| s * s))
            .sum::<Option<f64>>()
            .map(|v| v.sqrt() / k);
        averages.insert(name, json!({"mean": mean, "std_error": se, "per_chain": per_chain}));
    }
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "sample",
        "config": cfg,
        "seed": cfg.run.seed,
        "acceptance_rate": results.iter().map(|r| r.acceptance_rate).sum::<f64>() / k,
        "skip_fraction": results.iter().map(|r| r.skip_fraction).sum::<f64>() / k,
        "metrics": {
            "steps": cfg.run.steps,
            "chains": results.len(),
            "burn_in": cfg.run.burn_in,
            "function_evals": results.iter().map(|r| r.evals).sum::<u64>(),
            "per_chain_acceptance_rate": results.iter().map(|r| r.acceptance_rate).collect::<Vec<_>>(),
            "per_chain_skip_fraction": results.iter().map(|r| r.skip_fraction).collect::<Vec<_>>(),
            "tuning": tuning,
            "ergodic_averages": averages,
        },
        "runtime_s": clock.elapsed().as_secs_f64(),
    });
    write_json(&dir.join("summary.json"), &summary)?;
    println!(
        "acceptance_rate={:.4} skip_fraction={:.4} -> {}",
        summary["acceptance_rate"].as_f64().unwrap_or(f64::NAN),
        summary["skip_fraction"].as_f64().unwrap_or(f64::NAN),
        dir.display()
    );
    Ok(())
}

pub fn tail_experiment(dim: usize, seed: u64, steps: usize, out: &Path) -> Result<()> {
    let clock = Instant::now();
    let setup = TailSetup::standard(dim, seed)?;
    let outcome = run_tail_experiment(&setup, steps, TAIL_PILOT_STEPS).context("tail experiment")?;
    let prefix = format!("tail_d{dim}");
    write_trace(&out.join(format!("{prefix}_rwm.csv")), &outcome.rwm)?;
    write_trace(&out.join(format!("{prefix}_skipping.csv")), &outcome.skipping)?;
    let first = |r: &ChainResult| series(r, |x| x[0]);
    write_series(
        &out.join(format!("{prefix}_x1.csv")),
        &["rwm", "skipping"],
        &[first(&outcome.rwm), first(&outcome.skipping)],
    )?;
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "tail-experiment",
        "config": {
            "setup": setup,
            "steps": steps,
            "pilot_steps": TAIL_PILOT_STEPS,
            "target_acceptance": 0.25,
            "start": outcome.start.coords(),
        },
        "seed": seed,
        "acceptance_rate": {
            "rwm": outcome.rwm.acceptance_rate,
            "skipping": outcome.skipping.acceptance_rate,
        },
        "skip_fraction": {
            "rwm": outcome.rwm.skip_fraction,
            "skipping": outcome.skipping.skip_fraction,
        },
        "metrics": {
            "tuned_scale": outcome.tune.scale,
            "pilot_acceptance": outcome.tune.acceptance,
            "pilot_runs": outcome.tune.pilots,
            "acceptance_gap": outcome.skipping.acceptance_rate - outcome.rwm.acceptance_rate,
            "function_evals": {"rwm": outcome.rwm.evals, "skipping": outcome.skipping.evals},
            "first_coordinate_series": format!("{prefix}_x1.csv"),
        },
        "runtime_s": clock.elapsed().as_secs_f64(),
    });
    write_json(&out.join(format!("{prefix}_summary.json")), &summary)?;
    println!(
        "d={dim}: rwm acceptance={:.4} skipping acceptance={:.4} skip_fraction={:.4} (scale {:.4})",
        outcome.rwm.acceptance_rate, outcome.skipping.acceptance_rate, outcome.skipping.skip_fraction, outcome.tune.scale
    );
    Ok(())
}

fn render_table(out: &TableOutcome) -> String {
    let mut s = format!(
        "{:<16} {:>6} {:>14} {:>14} {:>12} {:>12} {:>12}\n",
        "method", "runs", "basin_fraction", "avg_distance", "avg_gap", "avg_evals", "avg_time_s"
    );
    for m in &out.summaries {
        s.push_str(&format!(
            "{:<16} {:>6} {:>14.3} {:>14.3} {:>12.3} {:>12.1} {:>12.6}\n",
            m.method, m.runs, m.basin_fraction, m.avg_distance, m.avg_gap, m.avg_evals, m.avg_time_s
        ));
    }
    s
}

fn write_table(name: &str, out: &TableOutcome, config: Value, seed: u64, m: usize, dir: &Path, clock: Instant) -> Result<()> {
    let text = render_table(out);
    print!("{text}");
    write_text(&dir.join(format!("{name}.txt")), &text)?;
    let mut rows = Vec::new();
    for (summary, reports) in out.summaries.iter().zip(&out.reports) {
        for (i, r) in reports.iter().enumerate() {
            rows.push(vec![
                summary.method.clone(),
                i.to_string(),
                r.start_value.to_string(),
                r.final_point.coords()[0].to_string(),
                r.final_point.coords()[1].to_string(),
                r.final_value.to_string(),
                r.distance_to_optimum.to_string(),
                u8::from(r.in_basin).to_string(),
                r.function_evals.to_string(),
                r.accepted_moves.to_string(),
            ]);
        }
    }
    write_rows(
        &dir.join(format!("{name}_runs.csv")),
        &[
            "method",
            "run",
            "start_value",
            "x1",
            "x2",
            "final_value",
            "distance_to_optimum",
            "in_basin",
            "function_evals",
            "accepted_moves",
        ],
        &rows,
    )?;
    let per_method = |f: &dyn Fn(usize) -> f64| -> Map<String, Value> {
        out.summaries
            .iter()
            .enumerate()
            .map(|(i, s)| (s.method.clone(), json!(f(i))))
            .collect()
    };
    let acceptance = per_method(&|i| {
        let reps = &out.reports[i];
        reps.iter().map(|r| r.accepted_moves as f64 / m as f64).sum::<f64>() / reps.len() as f64
    });
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "command": name,
        "config": config,
        "seed": seed,
        "acceptance_rate": acceptance,
        "skip_fraction": Value::Null,
        "metrics": {
            "methods": out.summaries,
        },
        "runtime_s": clock.elapsed().as_secs_f64(),
    });
    write_json(&dir.join(format!("{name}.json")), &summary)
}

pub fn run_table1(runs: usize, m: usize, seed: u64, out: &Path) -> Result<()> {
    let clock = Instant::now();
    let t = table1(runs, m, seed)?;
    let config = json!({
        "problem": "eggholder",
        "runs": runs,
        "m": m,
        "halting_k": 200,
        "proposal_covariance": "2I",
        "temperature": 1.0,
    });
    write_table("table1", &t, config, seed, m, out, clock)
}

pub fn run_table2(runs: usize, m: usize, seed: u64, out: &Path) -> Result<()> {
    let clock = Instant::now();
    let t = table2(runs, m, seed)?;
    let config = json!({
        "problem": "eggholder",
        "runs": runs,
        "iterations": m,
        "halting_k": 200,
        "mss_proposal_covariance": "I",
        "uniform_half_width": skipping_core::optimize::UNIT_SD_HALF_WIDTH,
        "temperature": 1.0,
    });
    write_table("table2", &t, config, seed, m, out, clock)
}
