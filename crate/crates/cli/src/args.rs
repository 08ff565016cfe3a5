use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "fairmatch",
    version,
    about = "Online class-fair matching laboratory"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Master seed [default: 20240601].
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Trials per instance (exp only).
    #[arg(long, global = true)]
    pub trials: Option<usize>,

    /// Output file; stdout when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Output format [default: csv for exp, json otherwise].
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Worker threads; 0 picks one per core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a generated instance as JSON.
    Gen {
        /// upper_triangular, cef_impossibility, divisible_hardness,
        /// price_of_fairness, cnsw_counterexample or random_bipartite.
        generator: String,
        /// Generator parameters as key=value.
        params: Vec<String>,
    },
    /// Run one algorithm once and report every metric.
    Run {
        #[command(flatten)]
        source: Source,
        #[arg(long = "param", value_name = "KEY=VALUE", requires = "generator")]
        params: Vec<String>,
        #[arg(long, value_enum, default_value_t = AlgorithmName::Random)]
        algorithm: AlgorithmName,
        /// Envy cap for envy_capped_greedy.
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[command(flatten)]
        caps: CapArgs,
    },
    /// Run a named experiment preset and check its targets.
    Exp {
        /// cef_lower, cef_upper, ode, cprop, pof, divisible or cnsw.
        preset: String,
        /// Preset parameters as key=value.
        params: Vec<String>,
    },
    /// Evaluate an exact oracle on one instance.
    Oracle {
        #[arg(value_enum)]
        kind: OracleKind,
        #[command(flatten)]
        source: Source,
        #[arg(long = "param", value_name = "KEY=VALUE", requires = "generator")]
        params: Vec<String>,
        /// Restrict the prop oracle to one class.
        #[arg(long)]
        class: Option<usize>,
        #[command(flatten)]
        caps: CapArgs,
    },
}

/// Where the instance comes from.
#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// Instance JSON file.
    #[arg(long, value_name = "PATH")]
    pub instance: Option<PathBuf>,
    /// Generator name; parameters follow as --param key=value.
    #[arg(long = "gen", value_name = "GENERATOR")]
    pub generator: Option<String>,
}

#[derive(Debug, Args)]
pub struct CapArgs {
    #[arg(long, value_name = "N")]
    pub prop_items: Option<usize>,
    #[arg(long, value_name = "N")]
    pub prop_classes: Option<usize>,
    #[arg(long, value_name = "N")]
    pub cmnw_items: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmName {
    #[value(name = "random")]
    Random,
    #[value(name = "greedy_lexico")]
    GreedyLexico,
    #[value(name = "envy_capped_greedy")]
    EnvyCappedGreedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleKind {
    #[value(name = "prop")]
    Prop,
    #[value(name = "cmnw")]
    Cmnw,
    #[value(name = "usw_opt")]
    UswOpt,
}
