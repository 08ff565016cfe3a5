use std::fs;

use clap::ValueEnum;
use fairmatch::experiments::{
    cef_upper_run, cprop_panel, preset_cef_lower, preset_cnsw, preset_cprop, preset_divisible,
    preset_price_of_fairness, Check, Report, Row,
};
use fairmatch::rng::DEFAULT_SEED;
use fairmatch::valuation::{
    cmnw_bruteforce_with_caps, prop_share_oracle_with_caps, prop_shares, PropShare,
};
use fairmatch::{
    gen_cef_impossibility, gen_cnsw_counterexample, gen_divisible_hardness, gen_price_of_fairness,
    gen_random_bipartite, gen_upper_triangular, metrics_report, run_envy_capped_greedy,
    run_greedy_lexico, run_random, usw_opt, ClassId, Instance, OracleCaps,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{AlgorithmName, CapArgs, Cli, Command, Format, OracleKind, Source};
use crate::output::write_output;
use crate::params::Params;
use crate::CliError;

pub const GENERATORS: [&str; 6] = [
    "upper_triangular",
    "cef_impossibility",
    "divisible_hardness",
    "price_of_fairness",
    "cnsw_counterexample",
    "random_bipartite",
];

pub const PRESETS: [&str; 7] = [
    "cef_lower",
    "cef_upper",
    "ode",
    "cprop",
    "pof",
    "divisible",
    "cnsw",
];

/// JSON document for `run` and `oracle`.
#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    config: &'a Value,
    result: T,
}

fn envelope<T: Serialize>(config: &Value, result: T) -> String {
    let doc = Envelope {
        tool: "fairmatch",
        version: fairmatch::VERSION,
        config,
        result,
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("result is serializable");
    text.push('\n');
    text
}

fn generate(name: &str, mut p: Params, seed: u64) -> Result<(Instance, Value), CliError> {
    let inst = match name {
        "upper_triangular" => gen_upper_triangular(p.required_usize("n")?),
        "cef_impossibility" => gen_cef_impossibility(p.required_usize("n")?),
        "divisible_hardness" => gen_divisible_hardness(p.required_usize("n")?),
        "price_of_fairness" => {
            let k = p.required_usize("k")?;
            let pp = p.required_usize("p")?;
            gen_price_of_fairness(k, pp, p.required_usize("q")?)
        }
        "cnsw_counterexample" => gen_cnsw_counterexample(),
        "random_bipartite" => {
            let k = p.required_usize("k")?;
            let apc = p.required_usize("agents_per_class")?;
            let items = p.required_usize("num_items")?;
            let prob = p.required_f64("edge_prob")?;
            gen_random_bipartite(k, apc, items, prob, p.u64("seed", seed)?)
        }
        _ => {
            return Err(CliError::Usage(format!(
                "unknown generator `{name}` (valid: {})",
                GENERATORS.join(", ")
            )))
        }
    }?;
    let params = p.finish(&format!("generator {name}"))?;
    Ok((inst, params))
}

fn load(source: &Source, params: &[String], seed: u64) -> Result<(Instance, Value), CliError> {
    match (&source.instance, &source.generator) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Validation(format!("cannot read {}: {e}", path.display()))
            })?;
            let inst = Instance::from_json(&text)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            Ok((inst, json!({"file": path.display().to_string()})))
        }
        (None, Some(name)) => {
            let (inst, resolved) = generate(name, Params::parse(params)?, seed)?;
            Ok((inst, json!({"generator": name, "params": resolved})))
        }
        (None, None) => Err(CliError::Usage("no instance source".into())),
    }
}

fn caps(args: &CapArgs) -> OracleCaps {
    let d = OracleCaps::default();
    OracleCaps {
        prop_items: args.prop_items.unwrap_or(d.prop_items),
        prop_classes: args.prop_classes.unwrap_or(d.prop_classes),
        cmnw_items: args.cmnw_items.unwrap_or(d.cmnw_items),
    }
}

fn info(preset: &str, params: &Value, metric: impl Into<String>, value: f64) -> Row {
    Row::exact(preset, params, metric, value, Check::Info)
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn emit(cli: &Cli, text: &str) -> Result<(), CliError> {
    write_output(cli.out.as_deref(), text)
}

fn reject_trials(cli: &Cli, what: &str) -> Result<(), CliError> {
    match cli.trials {
        Some(_) => Err(CliError::Usage(format!(
            "--trials does not apply to {what}"
        ))),
        None => Ok(()),
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    match &cli.command {
        Command::Gen { generator, params } => {
            reject_trials(cli, "gen")?;
            if cli.format == Some(Format::Csv) {
                return Err(CliError::Usage("instances are written as JSON only".into()));
            }
            let (inst, _) = generate(generator, Params::parse(params)?, seed)?;
            emit(cli, &inst.to_json())
        }
        Command::Run {
            source,
            params,
            algorithm,
            alpha,
            caps: cap_args,
        } => {
            reject_trials(cli, "run")?;
            let (inst, instance_cfg) = load(source, params, seed)?;
            let matching = match algorithm {
                AlgorithmName::Random => run_random(&inst, seed).matching,
                AlgorithmName::GreedyLexico => run_greedy_lexico(&inst),
                AlgorithmName::EnvyCappedGreedy => {
                    if !(0.0..=1.0).contains(alpha) {
                        return Err(CliError::Usage(format!("alpha {alpha} is not in [0, 1]")));
                    }
                    run_envy_capped_greedy(&inst, *alpha)
                }
            };
            let caps = caps(cap_args);
            let report = metrics_report(&inst, &matching, Some(&caps));
            let config = json!({
                "command": "run",
                "instance": instance_cfg,
                "algorithm": algorithm.to_possible_value().map(|v| v.get_name().to_string()),
                "alpha": alpha,
                "caps": caps,
                "seed": seed,
            });
            match cli.format.unwrap_or(Format::Json) {
                Format::Json => emit(
                    cli,
                    &envelope(&config, json!({"metrics": report, "matching": matching})),
                ),
                Format::Csv => {
                    let p = json!({"instance": inst.name()});
                    let mut rows = vec![
                        info("run", &p, "usw", report.usw as f64),
                        info("run", &p, "usw_opt", report.usw_opt as f64),
                        info("run", &p, "nonwasteful", flag(report.nonwasteful)),
                    ];
                    for (c, v) in report.class_values.iter().enumerate() {
                        rows.push(info("run", &p, format!("class_value(i={c})"), *v as f64));
                    }
                    for pair in &report.cef.pairs {
                        let name = format!("v_star(i={},j={})", pair.envious, pair.envied);
                        rows.push(info("run", &p, name, pair.v_star as f64));
                    }
                    rows.push(info("run", &p, "cef_alpha", report.cef.cef_alpha));
                    rows.push(info("run", &p, "cef1", flag(report.cef1)));
                    for e in report.cprop.iter().flatten() {
                        rows.push(info(
                            "run",
                            &p,
                            format!("prop(i={})", e.class),
                            e.prop as f64,
                        ));
                        rows.push(info(
                            "run",
                            &p,
                            format!("divisible_gap(i={})", e.class),
                            flag(e.divisible_gap),
                        ));
                    }
                    rows.push(info("run", &p, "cnsw", report.cnsw));
                    emit(cli, &Report::new(config, rows).to_csv()?)
                }
            }
        }
        Command::Exp { preset, params } => exp(cli, preset, params, seed),
        Command::Oracle {
            kind,
            source,
            params,
            class,
            caps: cap_args,
        } => {
            reject_trials(cli, "oracle")?;
            let (inst, instance_cfg) = load(source, params, seed)?;
            let caps = caps(cap_args);
            let config = json!({
                "command": "oracle",
                "kind": kind.to_possible_value().map(|v| v.get_name().to_string()),
                "instance": instance_cfg,
                "class": class,
                "caps": caps,
                "seed": seed,
            });
            let p = json!({"instance": inst.name()});
            let format = cli.format.unwrap_or(Format::Json);
            let (result, rows) = match kind {
                OracleKind::UswOpt => {
                    let v = usw_opt(&inst);
                    (
                        json!({"usw_opt": v}),
                        vec![info("oracle", &p, "usw_opt", v as f64)],
                    )
                }
                OracleKind::Cmnw => {
                    let r = cmnw_bruteforce_with_caps(&inst, &caps)?;
                    let mut rows = vec![info("oracle", &p, "cnsw", r.cnsw)];
                    for (c, v) in r.class_values.iter().enumerate() {
                        rows.push(info("oracle", &p, format!("class_value(i={c})"), *v as f64));
                    }
                    (serde_json::to_value(&r).expect("serializable"), rows)
                }
                OracleKind::Prop => {
                    let shares: Vec<PropShare> = match class {
                        Some(c) => vec![prop_share_oracle_with_caps(&inst, ClassId(*c), &caps)?],
                        None => prop_shares(&inst, &caps)?,
                    };
                    let mut rows = Vec::new();
                    for s in &shares {
                        let c = s.class;
                        rows.push(info("oracle", &p, format!("prop(i={c})"), s.value as f64));
                        rows.push(info(
                            "oracle",
                            &p,
                            format!("upper_bound(i={c})"),
                            s.upper_bound,
                        ));
                        rows.push(info(
                            "oracle",
                            &p,
                            format!("divisible_gap(i={c})"),
                            flag(s.divisible_gap),
                        ));
                        if s.divisible_gap {
                            eprintln!(
                                "warning: class {c} integral share {} is below the divisible bound {:.4}",
                                s.value, s.upper_bound
                            );
                        }
                    }
                    (serde_json::to_value(&shares).expect("serializable"), rows)
                }
            };
            match format {
                Format::Json => emit(cli, &envelope(&config, result)),
                Format::Csv => emit(cli, &Report::new(config, rows).to_csv()?),
            }
        }
    }
}

fn exp(cli: &Cli, preset: &str, args: &[String], seed: u64) -> Result<(), CliError> {
    let mut p = Params::parse(args)?;
    let requested = match (cli.trials, p.detach_usize("trials")?) {
        (Some(_), Some(_)) => {
            return Err(CliError::Usage(
                "trials given both as a flag and a parameter".into(),
            ))
        }
        (flag, param) => flag.or(param),
    };
    let trials = |default: usize| -> Result<usize, CliError> {
        match requested {
            Some(0) => Err(CliError::Usage("trials must be >= 1".into())),
            Some(t) => Ok(t),
            None => Ok(default),
        }
    };
    let deterministic = |what: &str| match requested {
        Some(_) => Err(CliError::Usage(format!("trials do not apply to {what}"))),
        None => Ok(()),
    };
    let threads = cli.threads;
    let (rows, trials_used) = match preset {
        "cef_lower" => {
            let n = p.usize("n", 200)?;
            let panel = p.usize("panel", 20)?;
            let t = trials(5000)?;
            (
                preset_cef_lower(n, panel, t, seed, threads)?.rows(),
                Some(t),
            )
        }
        "cef_upper" | "ode" => {
            let n = p.usize("n", 2000)?;
            let t = trials(500)?;
            let run = cef_upper_run(n, t, seed, threads)?;
            let rows = if preset == "ode" {
                run.ode_rows()
            } else {
                run.cef_upper_rows()
            };
            (rows, Some(t))
        }
        "cprop" => {
            let t = trials(10_000)?;
            (
                preset_cprop(&cprop_panel(seed), t, seed, threads)?.rows(),
                Some(t),
            )
        }
        "pof" => {
            deterministic("exp pof")?;
            let k = p.usize("k", 50)?;
            let pp = p.usize("p", 1)?;
            let q = p.usize("q", 2)?;
            (preset_price_of_fairness(k, pp, q)?.rows(), None)
        }
        "divisible" => {
            deterministic("exp divisible")?;
            (preset_divisible(p.usize("n", 100_000)?)?.rows(), None)
        }
        "cnsw" => {
            deterministic("exp cnsw")?;
            (preset_cnsw(p.usize("count", 500)?, seed)?.rows(), None)
        }
        _ => {
            return Err(CliError::Usage(format!(
                "unknown preset `{preset}` (valid: {})",
                PRESETS.join(", ")
            )))
        }
    };
    let params = p.finish(&format!("preset {preset}"))?;
    let config = json!({
        "command": "exp",
        "preset": preset,
        "params": params,
        "trials": trials_used,
        "seed": seed,
    });
    let report = Report::new(config, rows);
    let text = match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => report.to_csv()?,
        Format::Json => report.to_json(),
    };
    emit(cli, &text)?;
    let failed: Vec<&str> = report.failures().map(|r| r.metric.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Targets(failed.join(", ")))
    }
}
