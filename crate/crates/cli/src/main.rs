mod args;
mod render;
mod verify;

use std::process::ExitCode;

use clap::Parser;
use probserial::engine::{completion_time, run_with_pauses};
use probserial::experiment::{self, ExperimentConfig, ExperimentError, Format, SpaceKind};
use probserial::generators::{default_epsilon, dichotomous_for, random_profile, tight_instance, worked_example, Seed};
use probserial::manipulation::{best_response, SearchSpace};
use probserial::{Instance, PauseInterval, PausePlan, Valuation};
use serde_json::json;

use crate::args::{
    Cli, Command, ExperimentArgs, GenArgs, ManipulateArgs, RunArgs, Source, Space, TableFormat, TextOrJson,
};
use crate::render::{meta, show, write_output};

/// How a subcommand can fail; the variant picks the exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad input or an I/O problem (exit 2).
    Usage(String),
    /// A checked property failed (exit 1).
    Violation(String),
}

impl<E: std::error::Error> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Manipulate(a) => cmd_manipulate(a),
        Command::Verify(a) => verify::cmd_verify(a, cli.quiet),
        Command::Gen(a) => cmd_gen(a),
        Command::Experiment(a) => cmd_experiment(a, cli.quiet),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violation(msg)) => {
            eprintln!("violation: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load_source(src: &Source, seed: u64) -> Result<Instance, Failure> {
    if let Some(path) = &src.instance {
        return Instance::load(path).map_err(|e| usage(format!("{}: {e}", path.display())));
    }
    if src.worked_example {
        let w = worked_example();
        return Ok(Instance::new(w.profile, Some(w.utilities.into()), PausePlan::empty())?);
    }
    if let Some(n) = src.tight {
        let t = tight_instance(n)?;
        return Ok(Instance::new(t.profile, Some(t.valuation.into()), PausePlan::empty())?);
    }
    if let Some(nm) = &src.random {
        let profile = random_profile(nm[0], nm[1], Seed(seed))?;
        return Ok(Instance::new(profile, None, PausePlan::empty())?);
    }
    unreachable!("clap requires one instance source")
}

fn cmd_run(a: RunArgs) -> Result<(), Failure> {
    let mut inst = load_source(&a.source, a.seed)?;
    let mut pauses = inst.pauses.clone();
    let mut by_agent: std::collections::BTreeMap<usize, Vec<PauseInterval>> = Default::default();
    for p in &a.pauses {
        by_agent.entry(p.agent).or_default().push(PauseInterval::new(p.start.clone(), p.end.clone()));
    }
    for (agent, mut ivs) in by_agent {
        ivs.extend(pauses.intervals(agent).iter().cloned());
        pauses.set(agent, ivs)?;
    }
    inst = Instance::new(inst.profile, inst.valuation, pauses)?;
    let trace = run_with_pauses(&inst.profile, &inst.pauses)?;
    let utility = match &inst.valuation {
        Some(v) => Some((v.agent(), v.utility(trace.row(v.agent()))?)),
        None => None,
    };
    let completion = match &inst.valuation {
        Some(Valuation::Dichotomous(d)) => Some(completion_time(&trace, d.interested())?),
        _ => None,
    };
    let m = meta("run", a.seed);
    let text = match a.format {
        TextOrJson::Json => {
            let mut doc = json!({ "meta": m.json, "trace": trace });
            if let Some((agent, u)) = &utility {
                doc["utility"] = json!({ "agent": agent, "value": u });
            }
            if let Some(t) = &completion {
                doc["interested_completion"] = json!(t);
            }
            serde_json::to_string_pretty(&doc)? + "\n"
        }
        TextOrJson::Text => {
            let mut s = m.comment_header();
            s += &render::trace_text(&trace);
            if let Some((agent, u)) = &utility {
                s += &format!("utility of agent {agent}: {}\n", show(u));
            }
            if let Some(t) = &completion {
                s += &format!("interested items finished at T = {}\n", render::show_horizon(t));
            }
            if a.timeline {
                s += "timeline:\n";
                s += &trace.timeline(|j| j.to_string());
            }
            s
        }
    };
    write_output(a.out.as_deref(), &text)
}

fn cmd_manipulate(a: ManipulateArgs) -> Result<(), Failure> {
    let inst = load_source(&a.source, a.seed)?;
    let profile = &inst.profile;
    let valuation: Valuation = match (a.k, inst.valuation) {
        (Some(k), _) => dichotomous_for(profile, a.agent.unwrap_or(0), k, default_epsilon())?.into(),
        (None, Some(v)) => {
            if a.agent.is_some_and(|x| x != v.agent()) {
                return Err(usage(format!("utilities belong to agent {}; pass --k to pick another agent", v.agent())));
            }
            v
        }
        (None, None) => return Err(usage("no utilities: pass --k or an instance with utilities")),
    };
    let agent = valuation.agent();
    let space = match (a.full_search, a.space, &valuation) {
        (true, _, _) | (false, Some(Space::Full), _) | (false, None, Valuation::Cardinal(_)) => {
            SearchSpace::FullPermutations { cap: a.cap }
        }
        (false, _, Valuation::Dichotomous(d)) => SearchSpace::interested_first(d.interested().to_vec()),
        (false, Some(Space::InterestedFirst), Valuation::Cardinal(_)) => {
            return Err(usage("interested-first needs a dichotomous valuation (pass --k)"))
        }
    };
    let res = best_response(profile, agent, &valuation, &space)?;
    let m = meta("manipulate", a.seed);
    let text = match a.format {
        TextOrJson::Json => serde_json::to_string_pretty(&json!({ "meta": m.json, "result": res }))? + "\n",
        TextOrJson::Text => {
            let list = |r: &[usize]| r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
            let mut s = m.comment_header();
            s += &format!("agent: {agent}\n");
            s += &format!("truthful report: {}\n", list(profile.ordering(agent)));
            s += &format!("truthful utility: {}\n", show(&res.truthful_utility));
            s += &format!("best report: {}\n", list(&res.best_report));
            s += &format!("best utility: {}\n", show(&res.best_utility));
            s += &format!("incentive ratio: {}\n", render::show_ratio(&res.ratio));
            s += &format!("reports evaluated: {}\n", res.reports_evaluated);
            s
        }
    };
    write_output(a.out.as_deref(), &text)
}

fn cmd_gen(a: GenArgs) -> Result<(), Failure> {
    let mut m = meta("gen", a.seed);
    let inst = if let Some(n) = a.source.tight {
        let t = tight_instance(n)?;
        m.json["strategy"] = json!(t.strategy);
        Instance::new(t.profile, Some(t.valuation.into()), PausePlan::empty())?
    } else if let Some(v) = &a.source.random {
        let profile = random_profile(v[0], v[1], Seed(a.seed))?;
        let val = dichotomous_for(&profile, 0, v[2], default_epsilon())?;
        Instance::new(profile, Some(val.into()), PausePlan::empty())?
    } else {
        let w = worked_example();
        m.json["misreport"] = json!(w.misreport);
        Instance::new(w.profile, Some(w.utilities.into()), PausePlan::empty())?
    };
    write_output(a.out.as_deref(), &(inst.to_json_with_meta(Some(m.json)) + "\n"))
}

fn experiment_config(a: &ExperimentArgs) -> Result<ExperimentConfig, Failure> {
    let mut cfg = if a.paper_scale { ExperimentConfig::paper_scale() } else { ExperimentConfig::default() };
    if let Some((lo, hi)) = a.n_range {
        if a.n_step == 0 {
            return Err(usage("--n-step must be positive"));
        }
        cfg.n_values = (lo..=hi).step_by(a.n_step).collect();
    }
    if let Some((lo, hi)) = a.k_range {
        cfg.k_values = (lo..=hi).collect();
    }
    if let Some(c) = a.per_cell {
        cfg.instances_per_cell = c;
    }
    cfg.seed = Seed(a.seed);
    if a.full_search || a.space == Some(Space::Full) {
        cfg.space = SpaceKind::Full;
    }
    cfg.workers = a.workers;
    if let Some(b) = a.budget {
        cfg.budget = b;
    }
    Ok(cfg)
}

fn cmd_experiment(a: ExperimentArgs, quiet: bool) -> Result<(), Failure> {
    let cfg = experiment_config(&a)?;
    let mut m = meta("experiment", a.seed);
    let mut resolved = serde_json::to_value(&cfg)?;
    resolved.as_object_mut().expect("config is an object").remove("workers");
    m.json["config"] = resolved.clone();
    let results = match experiment::run_grid(&cfg) {
        Ok(r) => r,
        Err(e @ ExperimentError::BoundViolation { .. }) => return Err(Failure::Violation(e.to_string())),
        Err(e) => return Err(usage(e.to_string())),
    };
    let warnings = if quiet { Vec::new() } else { experiment::trend_warnings(&results, &a.slack) };
    for w in warnings {
        let (what, dir) = if w.along == "k" { ("k", "rises") } else { ("n", "falls") };
        eprintln!(
            "warning: mean ratio {dir} by {} from (n={}, k={}) to (n={}, k={}) along {what}",
            w.change.abs().to_decimal(4),
            w.from.0,
            w.from.1,
            w.to.0,
            w.to.1
        );
    }
    let format = match a.format {
        TableFormat::Csv => Format::Csv,
        TableFormat::Json => Format::Json,
        TableFormat::Gnuplot => Format::Gnuplot,
    };
    let mut header = m.header_lines();
    header.push(format!("config: {resolved}"));
    let text = experiment::render(&results, format, &header, Some(m.json))?;
    write_output(a.out.as_deref(), &text)
}
