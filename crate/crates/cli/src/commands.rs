//! Implementations of the subcommands.

use std::io::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde_json::{json, Value};

use crn_core::digraph::{check_strong_correctness, check_weak_correctness, explore, find_pitfalls, target_mask, Lasso, Mode, Verdict};
use crn_core::exec::{
    default_t_fair, run_adversarial, run_stochastic, settled_from, trial_rng, Execution, GreedyStarve, RandomStrategy, Stop,
    Strategy,
};
use crn_core::format::parse_rational;
use crn_core::model::{Configuration, Crn};
use crn_core::protocols::{registry, registry_names, va, ProtocolBundle};
use crn_core::runtime::{rt_of_execution, RtReport, RuntimePolicy, SkippingPolicy, TcSource};
use crn_core::{predicate, CrnError};

use crate::source::{self, initial, load, sweep_initial};
use crate::{
    CheckArgs, Command, CompileArgs, DigraphArgs, Format, PitfallsArgs, RunArgs, RuntimeArgs, SchedulerKind, SimulateArgs,
    StopKind, SweepArgs, TcKind,
};

/// Dispatch a parsed subcommand.
pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Simulate(a) => simulate(a),
        Command::Digraph(a) => digraph(a),
        Command::Check(a) => check(a),
        Command::Runtime(a) => runtime(a),
        Command::Pitfalls(a) => pitfalls(a),
        Command::Compile(a) => compile(a),
        Command::Sweep(a) => sweep(a),
    }
}

fn write_out(path: &Option<PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(out.flush()?)
        }
    }
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn policy_of(bundle: &ProtocolBundle, name: &Option<String>) -> Result<RuntimePolicy> {
    match name {
        None => Ok(bundle.policy.clone()),
        Some(n) if n == "full" => Ok(RuntimePolicy::full(&bundle.crn)),
        Some(n) => bundle
            .policy_named(n)
            .cloned()
            .ok_or_else(|| CrnError::invalid(format!("protocol {} has no policy '{n}'", bundle.name)).into()),
    }
}

fn strategy_of(bundle: &ProtocolBundle, c0: &Configuration, run: &RunArgs) -> Result<Box<dyn Strategy>> {
    Ok(match run.scheduler {
        SchedulerKind::Random => Box::new(RandomStrategy { void_prob: 0.0 }),
        SchedulerKind::GreedyStarve => Box::new(GreedyStarve { policy: policy_of(bundle, &run.policy)? }),
        SchedulerKind::Scripted => {
            let name = run.adversary.as_deref().context("--scheduler scripted needs --adversary")?;
            let adv = bundle
                .adversary(name)
                .ok_or_else(|| CrnError::invalid(format!("protocol {} has no adversary '{name}'", bundle.name)))?;
            (adv.strategy)(&bundle.crn, c0)
        }
        SchedulerKind::Stochastic => unreachable!("stochastic runs have no strategy"),
    })
}

/// One execution of the configured scheduler; `trial` selects the RNG stream.
fn execute(bundle: &ProtocolBundle, c0: &Configuration, run: &RunArgs, stop: &Stop, trial: u64) -> Result<Execution> {
    let mut rng = trial_rng(run.seed, trial);
    if run.scheduler == SchedulerKind::Stochastic {
        return Ok(run_stochastic(&bundle.crn, c0, &mut rng, stop, run.max_steps)?);
    }
    let mut strategy = strategy_of(bundle, c0, run)?;
    let t_fair = run.fair.then(|| run.t_fair.unwrap_or_else(|| default_t_fair(c0.total())));
    Ok(run_adversarial(&bundle.crn, c0, strategy.as_mut(), t_fair, stop, run.max_steps, &mut rng)?)
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let bundle = load(&a.source)?;
    let c0 = initial(&bundle, &a.init)?;
    let stop = match a.stop {
        StopKind::Halt => Stop::Halt,
        StopKind::Target => Stop::When(bundle.target_of(&c0)),
        StopKind::Steps => Stop::MaxSteps,
    };
    let e = execute(&bundle, &c0, &a.run, &stop, 0)?;
    write_out(&a.out.out, &e.to_jsonl(a.checkpoint))
}

fn digraph(a: DigraphArgs) -> Result<()> {
    let bundle = load(&a.source)?;
    let c0 = initial(&bundle, &a.init)?;
    let analysis = explore(&bundle.crn, &c0, a.max_states)?;
    let text = match a.format {
        Format::Json => {
            let report = analysis.report(&bundle.crn);
            json_text(&json!({
                "protocol": bundle.name,
                "c0": bundle.crn.format_configuration(&c0),
                "phi": analysis.phi(),
                "node_count": analysis.node_count(),
                "edge_count": analysis.edge_count(),
                "component_count": analysis.components().len(),
                "digraph": report,
            }))
        }
        Format::Dot => analysis.condensation_dot(&bundle.crn),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["source", "reaction", "target"])?;
            for u in 0..analysis.node_count() {
                for &(r, v) in analysis.edges(u) {
                    w.write_record([u.to_string(), bundle.crn.reaction_label(r), v.to_string()])?;
                }
            }
            String::from_utf8(w.into_inner()?)?
        }
    };
    write_out(&a.out.out, &text)
}

fn lasso_json(crn: &Crn, l: &Lasso) -> Value {
    let labels = |v: &[usize]| v.iter().map(|&r| crn.reaction_label(r)).collect::<Vec<_>>();
    json!({ "stem": labels(&l.stem), "cycle": labels(&l.cycle) })
}

/// Witness nodes printed per verdict.
const WITNESS_NODES_SHOWN: usize = 20;

fn verdict_json(crn: &Crn, analysis: &crn_core::digraph::DigraphAnalysis, v: &Verdict) -> Value {
    match &v.witness {
        None => json!({ "correct": v.correct }),
        Some(w) => json!({
            "correct": v.correct,
            "witness": {
                "component": w.component,
                "size": w.nodes.len(),
                "nodes": w.nodes.iter().take(WITNESS_NODES_SHOWN).map(|&u| crn.format_configuration(analysis.node(u))).collect::<Vec<_>>(),
                "lasso": w.lasso.as_ref().map(|l| lasso_json(crn, l)),
            }
        }),
    }
}

fn check(a: CheckArgs) -> Result<()> {
    let bundle = load(&a.source)?;
    let mode = source::mode(&bundle, &a.mode)?;
    let configs: Vec<Configuration> = match a.up_to {
        Some(max) => (1..=max).flat_map(|n| bundle.initial_configs(n)).collect(),
        None => vec![initial(&bundle, &a.init)?],
    };
    if configs.is_empty() {
        bail!("protocol {} has no valid initial configurations in range", bundle.name);
    }
    let crn = &bundle.crn;
    let results: Vec<Result<(bool, bool, Value)>> = configs
        .par_iter()
        .map(|c0| {
            let analysis = explore(crn, c0, a.max_states)?;
            let z = analysis.mask(&*bundle.target_of(c0));
            let weak = check_weak_correctness(crn, &analysis, &z, mode);
            let strong = check_strong_correctness(&analysis, &z, mode);
            let row = json!({
                "c0": crn.format_configuration(c0),
                "nodes": analysis.node_count(),
                "weak": verdict_json(crn, &analysis, &weak),
                "strong": verdict_json(crn, &analysis, &strong),
                "expected_weak": bundle.expected_weak(c0),
                "expected_strong": bundle.expected.strong,
            });
            Ok((weak.correct, strong.correct, row))
        })
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    let (mut all_weak, mut all_strong) = (true, true);
    for r in results {
        let (w, s, row) = r?;
        all_weak &= w;
        all_strong &= s;
        rows.push(row);
    }
    let doc = json!({
        "protocol": bundle.name,
        "mode": mode,
        "checked": rows.len(),
        "weakly_correct": all_weak,
        "strongly_correct": all_strong,
        "results": rows,
    });
    write_out(&a.out.out, &json_text(&doc))
}

/// Stop condition for a runtime measurement and how `t*` is then found.
///
/// With an explorable digraph the run stops at the first configuration of
/// `stab(Z)` or `halt(Z)`. Otherwise halting runs stop when halting and
/// stabilizing runs stop at their first visit to `Z`.
fn t_star_stop(bundle: &ProtocolBundle, c0: &Configuration, mode: Mode, max_states: usize) -> (Stop, &'static str) {
    if let Ok(analysis) = explore(&bundle.crn, c0, max_states) {
        let z = analysis.mask(&*bundle.target_of(c0));
        let target = target_mask(&analysis, &z, mode);
        let hit = move |c: &Configuration| analysis.index_of(c).is_some_and(|i| target[i]);
        return (Stop::When(std::sync::Arc::new(hit)), "digraph");
    }
    match mode {
        Mode::Halt => (Stop::Halt, "halting-step"),
        Mode::Stab => (Stop::When(bundle.target_of(c0)), "first-target-hit"),
    }
}

fn stop_reached(bundle: &ProtocolBundle, stop: &Stop, e: &Execution) -> bool {
    match stop {
        Stop::Halt => bundle.crn.is_halting(e.last()),
        Stop::When(z) => z(e.last()),
        Stop::MaxSteps => true,
    }
}

fn skipping_of(bundle: &ProtocolBundle, run: &RunArgs, name: &str) -> Result<SkippingPolicy> {
    if name == "identity" {
        return Ok(SkippingPolicy::Identity);
    }
    let adv = run.adversary.as_deref().and_then(|n| bundle.adversary(n));
    match adv {
        Some(adv) if name == "adversary" || adv.skipping.name() == name => Ok(adv.skipping.clone()),
        _ => bail!("skipping policy '{name}' needs a scripted adversary that provides it"),
    }
}

fn tc_source(kind: TcKind, trials: usize, seed: u64, max_states: usize) -> TcSource {
    match kind {
        TcKind::Mc => TcSource::Mc { trials, seed },
        TcKind::Bound => TcSource::Bound { max_states },
    }
}

fn rounds_csv(crn: &Crn, rep: &RtReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["round", "t", "t_e", "end", "q_size", "targets", "accomplished", "tc_time_units", "cumulative_rt_time_units"])?;
    let mut total = 0.0;
    for (i, (r, c)) in rep.partition.rounds.iter().zip(&rep.costs).enumerate() {
        total += c;
        let targets: Vec<String> = r.targets.iter().map(|&x| crn.reaction_label(x)).collect();
        w.write_record([
            i.to_string(),
            r.t.to_string(),
            r.t_e.to_string(),
            r.end.to_string(),
            r.targets.len().to_string(),
            targets.join(" "),
            r.accomplished.to_string(),
            format!("{c:.9}"),
            format!("{total:.9}"),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn runtime(a: RuntimeArgs) -> Result<()> {
    let bundle = load(&a.source)?;
    let c0 = initial(&bundle, &a.init)?;
    let mode = source::mode(&bundle, &a.mode)?;
    let rho = policy_of(&bundle, &a.run.policy)?;
    let sigma = skipping_of(&bundle, &a.run, &a.skipping)?;
    let (stop, how) = t_star_stop(&bundle, &c0, mode, a.max_states);
    let e = execute(&bundle, &c0, &a.run, &stop, 0)?;
    let t = e.len();
    if !stop_reached(&bundle, &stop, &e) {
        bail!("the run did not reach t* within {} steps", a.run.max_steps);
    }
    let rep = rt_of_execution(&bundle.crn, &e, &rho, &sigma, t, tc_source(a.tc, a.trials, a.run.seed, a.max_states))?;
    let summary = json!({
        "protocol": bundle.name,
        "c0": bundle.crn.format_configuration(&c0),
        "n": c0.total(),
        "mode": mode,
        "scheduler": format!("{:?}", a.run.scheduler).to_lowercase(),
        "policy": rho.name,
        "skipping": sigma.name(),
        "seed": a.run.seed,
        "steps": e.len(),
        "t_star": t,
        "t_star_source": how,
        "rounds": rep.partition.rounds.len(),
        "rt_time_units": rep.rt,
        "stochastic_runtime_time_units": e.spans().map(|s| s[..t].iter().sum::<f64>()),
    });
    write_out(&a.rounds_csv, &rounds_csv(&bundle.crn, &rep)?)?;
    match &a.summary {
        Some(p) => std::fs::write(p, json_text(&summary)).with_context(|| format!("writing {}", p.display())),
        None => {
            eprintln!("{summary}");
            Ok(())
        }
    }
}

fn pitfalls(a: PitfallsArgs) -> Result<()> {
    let bundle = load(&a.source)?;
    let c0 = initial(&bundle, &a.init)?;
    let mode = source::mode(&bundle, &a.mode)?;
    let s = parse_rational(&a.s, 0)?;
    let analysis = explore(&bundle.crn, &c0, a.max_states)?;
    let z = analysis.mask(&*bundle.target_of(&c0));
    let nodes = find_pitfalls(&bundle.crn, &analysis, &z, &s, mode)?;
    let target = target_mask(&analysis, &z, mode);
    let doc = json!({
        "protocol": bundle.name,
        "c0": bundle.crn.format_configuration(&c0),
        "mode": mode,
        "s": a.s,
        "nodes": analysis.node_count(),
        "target_nodes": target.iter().filter(|&&t| t).count(),
        "pitfall_count": nodes.len(),
        "pitfalls": nodes.iter().map(|&u| bundle.crn.format_configuration(analysis.node(u))).collect::<Vec<_>>(),
    });
    write_out(&a.out.out, &json_text(&doc))
}

fn compile(a: CompileArgs) -> Result<()> {
    if a.list {
        let mut text = registry_names().join("\n");
        text.push('\n');
        return write_out(&a.out.out, &text);
    }
    let mut bundle = match (&a.predicate, &a.protocol) {
        (Some(p), _) => predicate::compile(&predicate::parse(p)?)?,
        (None, Some(name)) => registry(name)?,
        (None, None) => bail!("give a predicate, --protocol or --list"),
    };
    if let Some(eps) = &a.amplify {
        bundle = va::vote_amplified_compile(&bundle, &parse_rational(eps, 0)?)?;
    }
    write_out(&a.out.out, &bundle.to_text())
}

/// One sweep point: means over executions.
struct Point {
    n: u64,
    rt_stab: f64,
    rt_halt: f64,
    stochastic: f64,
    steps: f64,
}

fn sweep_point(bundle: &ProtocolBundle, a: &SweepArgs, n: u64) -> Result<Point> {
    let c0 = sweep_initial(bundle, n, a.weights.as_deref(), a.pick)?;
    let rho = policy_of(bundle, &a.run.policy)?;
    let z = bundle.target_of(&c0);
    let (mut rt_stab, mut rt_halt, mut stochastic, mut steps) = (0.0, 0.0, 0.0, 0.0);
    let trials = a.trials.max(1);
    for trial in 0..trials as u64 {
        let stream = n << 32 | trial;
        let e = execute(bundle, &c0, &a.run, &Stop::Halt, stream)?;
        let t_halt = e.len();
        let t_stab = settled_from(&e, &*z).ok_or_else(|| CrnError::Horizon { what: format!("n = {n}: halted outside the target set") })?;
        let rep = rt_of_execution(&bundle.crn, &e, &rho, &SkippingPolicy::Identity, t_halt, TcSource::Mc { trials: a.tc_trials, seed: a.run.seed ^ stream })?;
        rt_halt += rep.rt;
        rt_stab += rep.partition.rounds.iter().zip(&rep.costs).filter(|(r, _)| r.t < t_stab).map(|(_, c)| c).sum::<f64>();
        steps += t_halt as f64;
        stochastic += match e.spans() {
            Some(s) => s.iter().sum::<f64>(),
            None => {
                let mut rng = trial_rng(a.run.seed ^ 0x5eed, stream);
                let se = run_stochastic(&bundle.crn, &c0, &mut rng, &Stop::Halt, a.run.max_steps)?;
                se.spans().expect("stochastic spans").iter().sum::<f64>()
            }
        };
    }
    let k = trials as f64;
    Ok(Point { n, rt_stab: rt_stab / k, rt_halt: rt_halt / k, stochastic: stochastic / k, steps: steps / k })
}

fn sweep(a: SweepArgs) -> Result<()> {
    if a.n_min == 0 || a.n_max < a.n_min {
        bail!("need 1 <= --n-min <= --n-max");
    }
    let bundle = load(&a.source)?;
    let mut ns = Vec::new();
    let mut n = a.n_min;
    while n <= a.n_max {
        ns.push(n);
        n *= 2;
    }
    let points: Vec<Result<Point>> = ns.par_iter().map(|&n| sweep_point(&bundle, &a, n)).collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "rt_stab_time_units", "rt_halt_time_units", "stochastic_runtime_time_units", "mean_steps", "trials"])?;
    for p in points {
        let p = p?;
        w.write_record([
            p.n.to_string(),
            format!("{:.9}", p.rt_stab),
            format!("{:.9}", p.rt_halt),
            format!("{:.9}", p.stochastic),
            format!("{:.3}", p.steps),
            a.trials.max(1).to_string(),
        ])?;
    }
    write_out(&a.out.out, &String::from_utf8(w.into_inner()?)?)
}
