use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lls_core::config::parse_override;
use lls_core::output::write_run;
use lls_core::{run, sweep, Preset, Rule, ScenarioConfig, SimError};

#[derive(Parser)]
#[command(name = "lls-sim", version, about = "Multi-cell downlink scheduling simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its artifacts.
    Run(Common),
    /// Run a scenario grid over one parameter and a list of seeds.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Parameter to vary: a dotted config key or an alias (alpha, beta, c, N, lambda, W, rule, handover).
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
        /// Comma-separated seeds (defaults to --seed or the configured seed).
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
    },
}

#[derive(Args)]
struct Common {
    /// Config file in the flat `key = value` format.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value = "paper")]
    preset: Preset,
    #[arg(long)]
    rule: Option<Rule>,
    /// Override a key, e.g. `--set scheduler.alpha=0.1`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn load(&self) -> Result<ScenarioConfig, SimError> {
        let mut cfg = ScenarioConfig::preset(self.preset);
        if let Some(path) = &self.config {
            cfg.apply_text(&std::fs::read_to_string(path)?)?;
        }
        for o in &self.overrides {
            let (k, v) = parse_override(o)?;
            cfg.set(&k, &v)?;
        }
        if let Some(rule) = self.rule {
            cfg.scheduler.rule = rule;
        }
        if let Some(seed) = self.seed {
            cfg.sim.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> Result<(), SimError> {
    match Cli::parse().command {
        Command::Run(common) => {
            let cfg = common.load()?;
            let log = run(&cfg)?;
            write_run(&common.out, &log)?;
            let r = &log.report;
            println!(
                "{} seed={} T_Net={:.3} Mbit/s J_Net={} T_Slot10={:.3} Mbit/s R_log={:.3} handovers={}",
                r.rule,
                r.seed,
                r.t_net / 1e6,
                fmt_opt(r.j_net),
                r.t_slot10 / 1e6,
                r.r_log_net,
                r.handovers
            );
            if let Some(f) = r.f_lt_avg {
                println!("F_LT={:.4} J_F_Net={}", f, fmt_opt(r.j_f_net));
            }
        }
        Command::Sweep {
            common,
            axis,
            values,
            mut seeds,
        } => {
            let cfg = common.load()?;
            if seeds.is_empty() {
                seeds.push(cfg.sim.seed);
            }
            let points = sweep(&cfg, &axis, &values, &seeds, Some(&common.out))?;
            println!("axis,value,seed,rule,t_net,j_net,t_slot10,r_log_net,f_lt_avg,j_f_net");
            for p in points {
                let r = &p.report;
                println!(
                    "{},{},{},{},{},{},{},{},{},{}",
                    p.axis,
                    p.value,
                    p.seed,
                    r.rule,
                    r.t_net,
                    fmt_opt(r.j_net),
                    r.t_slot10,
                    r.r_log_net,
                    fmt_opt(r.f_lt_avg),
                    fmt_opt(r.j_f_net)
                );
            }
        }
    }
    Ok(())
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"))
}
