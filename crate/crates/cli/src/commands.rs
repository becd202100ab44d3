use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use hetlab_core::exponents::classify_escape;
use hetlab_core::kernel::{
    exit_direction_prob, exit_time_tail, local_limit_prediction, model_variances, two_saddle_prefactor, typical_exit_law,
    EntranceLaw, NuMeasure, SaddleBox, TailQuery,
};
use hetlab_core::network::{load_chain_spec, load_network, EscapeChainSpec, Saddle};
use hetlab_hierarchy::{merge_tree_dot, timescale_ladder};
use hetlab_lab::estimate::{run_chain_rung, sig17};
use hetlab_lab::svg::fit_plot;
use hetlab_lab::{chain_ladder, ChainSetup, EstimateRow, LabError, LadderConfig, MapChoice};
use hetlab_sim::batch::map_indexed;
use hetlab_sim::{path_rng, ChainOutcome, ChainSimulator, SimError};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{CliError, Result};
use crate::manifest::Recorder;
use crate::{AnalyzeArgs, ChainRunArgs, FitArgs, HierarchyArgs, Prediction, PredictArgs, SimulateArgs};

pub const SEED_ENV: &str = "HETLAB_SEED";

/// `HETLAB_SEED` wins over the flag.
fn resolve_seed(flag: u64) -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::validation(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(flag),
    }
}

fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(CliError::validation("--threads must be at least 1")),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| CliError::runtime(format!("cannot start thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn pretty(v: &impl Serialize) -> String {
    serde_json::to_string_pretty(v).expect("value serializes") + "\n"
}

pub fn analyze(a: &AnalyzeArgs, start: Instant) -> Result<()> {
    let spec = load_chain_spec(&a.chain)?;
    let report = classify_escape(&spec)?;
    match report.theta {
        Some(t) => println!("theta = {t}"),
        None => println!("theta undefined"),
    }
    print!("{report}");
    if let Some(out) = &a.out {
        let mut rec = Recorder::new("analyze", json!({ "chain": a.chain }), None, &[&a.chain])?;
        rec.write(out, &(report.to_json() + "\n"))?;
        rec.finish(start.elapsed())?;
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PredictInput {
    saddle: Saddle,
    #[serde(rename = "box", default)]
    sbox: Option<SaddleBox>,
    #[serde(default)]
    next: Option<Saddle>,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::validation(format!("cannot parse {}: {e}", path.display())))
}

pub fn predict(a: &PredictArgs, start: Instant) -> Result<()> {
    let input: PredictInput = read_json(&a.saddle)?;
    let (saddle, sbox) = (input.saddle, input.sbox.unwrap_or_default());
    let value = match a.kind {
        Prediction::ExitDirection => {
            let (c1, _) = model_variances(&saddle);
            let left = exit_direction_prob(a.x, c1);
            json!({ "left": left, "right": 1.0 - left, "c1": c1 })
        }
        Prediction::ExitTimeTail => {
            let q = TailQuery {
                x: a.x,
                alpha: a.alpha,
                theta: a.theta,
                beta: a.beta,
                c: a.c,
                r: a.r,
                eps: a.eps,
            };
            json!(exit_time_tail(&q, &saddle)?)
        }
        Prediction::LocalLimit => json!(local_limit_prediction(a.x, a.a, a.b, a.beta, &saddle, &sbox)?),
        Prediction::TypicalLaw => {
            let law = typical_exit_law(a.alpha, a.x, a.eps, &saddle, &sbox)?;
            json!({ "law": law, "mass": law.mass() })
        }
        Prediction::Prefactor => {
            let next = input
                .next
                .ok_or_else(|| CliError::validation(format!("{}: the prefactor needs a `next` saddle", a.saddle.display())))?;
            let nu = NuMeasure::for_saddle(&saddle, &sbox, 1.0)?;
            let entrance = if a.entrance_variance == 0.0 {
                EntranceLaw::Point { x: a.x }
            } else {
                EntranceLaw::Normal {
                    mean: a.x,
                    variance: a.entrance_variance,
                }
            };
            json!(two_saddle_prefactor(model_variances(&saddle).0, model_variances(&next).0, &nu, &entrance)?)
        }
    };
    let text = pretty(&json!({
        "prediction": a.kind,
        "params": a,
        "saddle": saddle,
        "box": sbox,
        "value": value,
    }));
    match &a.out {
        Some(out) => {
            let mut rec = Recorder::new("predict", json!(a), None, &[&a.saddle])?;
            rec.write(out, &text)?;
            rec.finish(start.elapsed())?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn setup(run: &ChainRunArgs) -> ChainSetup {
    ChainSetup {
        maps: if run.identity_maps { MapChoice::Identity } else { MapChoice::Default },
        ..ChainSetup::default()
    }
}

#[derive(Serialize)]
struct SimulateSummary {
    eps: f64,
    dt: f64,
    max_time: f64,
    seed: u64,
    #[serde(flatten)]
    row: EstimateRow,
    /// Mean total time over escaped paths.
    mean_escape_time: Option<f64>,
}

fn path_csv(spec: &EscapeChainSpec, outcomes: &[hetlab_sim::Result<ChainOutcome>]) -> String {
    let mut s = String::from("path_id,escaped,total_time");
    for k in 1..=spec.len() {
        let _ = write!(s, ",exit_{k},side_{k},loc_{k}");
    }
    s.push('\n');
    for (i, o) in outcomes.iter().enumerate() {
        let _ = write!(s, "{i}");
        match o {
            Ok(o) => {
                let _ = write!(s, ",{},{}", o.escaped as u8, sig17(o.total_time));
                for k in 0..spec.len() {
                    match o.exits.get(k) {
                        Some(e) => {
                            let _ = write!(s, ",{},{},{}", sig17(e.time), e.side, sig17(e.location));
                        }
                        None => s.push_str(",,,"),
                    }
                }
            }
            Err(_) => {
                s.push_str(",timeout,");
                s.push_str(&",,,".repeat(spec.len()));
            }
        }
        s.push('\n');
    }
    s
}

fn tally_outcomes(sim: &ChainSimulator, outcomes: &[hetlab_sim::Result<ChainOutcome>], n: u64) -> Result<(EstimateRow, Vec<f64>)> {
    let (mut hits, mut done, mut timeouts) = (0, 0, 0);
    let mut times = Vec::new();
    for o in outcomes {
        match o {
            Ok(o) => {
                done += 1;
                if o.escaped {
                    hits += 1;
                    times.push(o.total_time);
                }
            }
            Err(SimError::Timeout { .. }) => timeouts += 1,
            Err(e) => return Err(CliError::runtime(e.to_string())),
        }
    }
    let eps = sim.config().epsilon;
    if done == 0 {
        return Err(LabError::AllTimeout { eps, n }.into());
    }
    Ok((EstimateRow::from_counts(eps, hits, done, timeouts), times))
}

pub fn simulate(a: &SimulateArgs, start: Instant) -> Result<()> {
    let seed = resolve_seed(a.run.seed)?;
    if a.samples == 0 {
        return Err(CliError::validation("--samples must be positive"));
    }
    let spec = load_chain_spec(&a.run.chain)?;
    let sim = setup(&a.run).simulator(&spec, a.eps, a.run.dt)?;
    let mut rec = Recorder::new("simulate", json!(a), Some(seed), &[&a.run.chain])?;
    let (row, times) = match &a.record_paths {
        Some(path) => {
            let outcomes = in_pool(a.run.threads, || map_indexed(a.samples, |i| sim.run(&mut path_rng(seed, i))))?;
            let tally = tally_outcomes(&sim, &outcomes, a.samples)?;
            rec.write(path, &path_csv(&spec, &outcomes))?;
            tally
        }
        None => {
            let rung = in_pool(a.run.threads, || run_chain_rung(&sim, a.samples, seed, 0))??;
            (rung.row, rung.escapes.iter().map(|o| o.total_time).collect())
        }
    };
    let summary = SimulateSummary {
        eps: a.eps,
        dt: sim.dt(),
        max_time: sim.config().max_time,
        seed,
        row,
        mean_escape_time: (!times.is_empty()).then(|| times.iter().sum::<f64>() / times.len() as f64),
    };
    let text = pretty(&summary);
    match &a.out {
        Some(out) => rec.write(out, &text)?,
        None => print!("{text}"),
    }
    rec.finish(start.elapsed())?;
    Ok(())
}

pub fn fit(a: &FitArgs, start: Instant) -> Result<()> {
    let seed = resolve_seed(a.run.seed)?;
    let mut ladder = LadderConfig::new(a.eps_ladder.clone(), a.samples, seed)?;
    if let Some(dt) = a.run.dt {
        ladder = ladder.with_dt(dt)?;
    }
    let spec = load_chain_spec(&a.run.chain)?;
    let predicted = classify_escape(&spec)?.theta;
    let mut rec = Recorder::new("fit", json!({ "args": a, "ladder": ladder }), Some(seed), &[&a.run.chain])?;
    let (table, _) = in_pool(a.run.threads, || chain_ladder(&spec, &setup(&a.run), &ladder))??;
    rec.write(&a.out, &table.to_csv())?;
    if let Some(plot) = &a.plot {
        let title = format!("escape probability, {}", a.run.chain.display());
        rec.write(plot, &fit_plot(&table, predicted, &title))?;
    }
    let warnings = table.fit.as_ref().map(|f| f.warnings()).unwrap_or_default();
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    print!(
        "{}",
        pretty(&json!({ "fit": table.fit, "predicted_theta": predicted, "warnings": warnings }))
    );
    rec.finish(start.elapsed())?;
    if table.fit.is_none() {
        return Err(CliError::runtime(format!(
            "no power-law fit: fewer than 3 rungs with at least {} hits (table written to {})",
            hetlab_lab::fit::MIN_HITS,
            a.out.display()
        )));
    }
    Ok(())
}

pub fn hierarchy(a: &HierarchyArgs, start: Instant) -> Result<()> {
    let net = load_network(&a.network)?;
    let report = timescale_ladder(&net)?;
    let mut rec = Recorder::new("hierarchy", json!(a), None, &[&a.network])?;
    rec.write(&a.out, &(report.to_json() + "\n"))?;
    if let Some(dot) = &a.dot {
        rec.write(dot, &merge_tree_dot(&report))?;
    }
    rec.finish(start.elapsed())?;
    Ok(())
}
