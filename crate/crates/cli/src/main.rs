use clap::{Args, Parser, Subcommand, ValueEnum};
use kmrate_core::bounds::{
    compute_phi_asreg, compute_phi_cat0, compute_phi_metastable, quant_qihou_psi, BoundInputs, Budget, Constant,
    CounterexampleFn, QihouInputs,
};
use kmrate_core::exact::parse_rational;
use kmrate_core::harness::{
    check_mapping, check_modulus, check_space, default_matrix, emit_report, iterate_to_csv, run_experiment,
    soundness_suite, ExperimentConfig, Format,
};
use kmrate_core::modulus::ModulusConfig;
use kmrate_core::{Error, Result};
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "kmrate", version, about = "Krasnoselski-Mann iteration experiments and exact rate bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for artifacts; results go to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
    #[arg(long, value_enum, default_value_t = Variant::Both)]
    variant: Variant,
    /// Step budget for iterating bound step functions.
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Paper,
    Strict,
    Both,
}

impl Variant {
    fn constants(self) -> Vec<Constant> {
        match self {
            Variant::Paper => vec![Constant::Paper],
            Variant::Strict => vec![Constant::Strict],
            Variant::Both => vec![Constant::Paper, Constant::Strict],
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundKind {
    Metastable,
    Asreg,
    Cat0,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the convexity axioms of the configured space.
    CheckSpace {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Sample the modulus inequalities of the configured modulus on the configured space.
    VerifyModulus {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
    },
    /// Check the declared (k_n) of the configured mapping on sampled pairs.
    ValidateMapping {
        #[command(flatten)]
        common: Common,
    },
    /// Run the configured iteration and write its residual CSV.
    Iterate {
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a bound exactly.
    Bound {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = BoundKind::Metastable)]
        kind: BoundKind,
        #[arg(long = "K", default_value = "0")]
        k: String,
        #[arg(long = "L", default_value_t = 2)]
        l: u64,
        /// Anchor radius, or the diameter for the CAT(0) bound.
        #[arg(long, default_value = "1")]
        b: String,
        #[arg(long, default_value = "1")]
        eps: String,
        #[arg(long, default_value = "zero")]
        g: String,
        /// "cat0" or a JSON custom modulus.
        #[arg(long, default_value = "cat0")]
        modulus: String,
        #[arg(long)]
        eta_tilde: bool,
    },
    /// Evaluate the two-sequence bound Ψ.
    Qihou {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "1")]
        a1: String,
        #[arg(long, default_value = "1")]
        a2: String,
        #[arg(long, default_value = "0")]
        b1: String,
        #[arg(long, default_value = "0")]
        b2: String,
        #[arg(long, default_value = "0")]
        c1: String,
        #[arg(long, default_value = "0")]
        c2: String,
        #[arg(long, default_value = "1")]
        theta: String,
        #[arg(long, default_value = "zero")]
        g: String,
    },
    /// Run one experiment end to end.
    Experiment {
        #[command(flatten)]
        common: Common,
    },
    /// Run a matrix of experiments (the default matrix without --config).
    Suite {
        #[command(flatten)]
        common: Common,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Hypothesis(_)
        | Error::Integrity { .. }
        | Error::Numeric { .. }
        | Error::Precondition { .. }
        | Error::Counterexample(_) => 1,
        _ => 2,
    }
}

fn read_config(common: &Common) -> Result<ExperimentConfig> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config <path> is required".into()))?;
    let mut cfg = ExperimentConfig::from_json(&fs::read_to_string(path)?)?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(b) = common.budget {
        cfg.budget = Some(b);
    }
    cfg.variants = common.variant.constants();
    Ok(cfg)
}

/// Writes `value` as pretty JSON to `out/name` or stdout.
fn emit_json<T: Serialize>(value: &T, out: Option<&Path>, name: &str) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let path = dir.join(name);
            fs::write(&path, text + "\n")?;
            println!("{}", path.display());
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn verdict(pass: bool) -> u8 {
    if pass {
        0
    } else {
        1
    }
}

fn budget(common: &Common) -> Budget {
    Budget {
        steps: common.budget.unwrap_or(Budget::default().steps),
        ..Budget::default()
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::CheckSpace { common, samples } => {
            let cfg = read_config(&common)?;
            let r = check_space(&cfg.space, cfg.seed, samples, cfg.tolerances.axioms)?;
            emit_json(&r, common.out.as_deref(), "space.json")?;
            Ok(verdict(r.pass))
        }
        Command::VerifyModulus {
            common,
            samples,
            tolerance,
        } => {
            let cfg = read_config(&common)?;
            let r = check_modulus(&cfg.space, &cfg.modulus, cfg.seed, samples, tolerance)?;
            emit_json(&r, common.out.as_deref(), "modulus.json")?;
            Ok(verdict(r.pass))
        }
        Command::ValidateMapping { common } => {
            let cfg = read_config(&common)?;
            let r = check_mapping(&cfg)?;
            emit_json(&r, common.out.as_deref(), "mapping.json")?;
            Ok(verdict(r.pass))
        }
        Command::Iterate { common } => {
            let cfg = read_config(&common)?;
            match &common.out {
                Some(dir) => {
                    fs::create_dir_all(dir)?;
                    let path = dir.join("residuals.csv");
                    iterate_to_csv(&cfg, fs::File::create(&path)?)?;
                    println!("{}", path.display());
                }
                None => {
                    iterate_to_csv(&cfg, std::io::stdout().lock())?;
                }
            }
            Ok(0)
        }
        Command::Bound {
            common,
            kind,
            k,
            l,
            b,
            eps,
            g,
            modulus,
            eta_tilde,
        } => {
            let m: ModulusConfig = if modulus.trim_start().starts_with('{') {
                serde_json::from_str(&modulus)?
            } else {
                ModulusConfig::Named(modulus)
            };
            let base = BoundInputs::from_rationals(
                parse_rational(&k)?,
                l,
                parse_rational(&b)?,
                parse_rational(&eps)?,
                CounterexampleFn::parse(&g)?,
                m.build()?,
            )?
            .with_eta_tilde(eta_tilde)
            .with_budget(budget(&common));
            let mut out = Vec::new();
            for c in common.variant.constants() {
                let inp = base.clone().with_constant(c);
                out.push(match kind {
                    BoundKind::Metastable => serde_json::to_value(compute_phi_metastable(&inp)?)?,
                    BoundKind::Asreg => serde_json::to_value(compute_phi_asreg(&inp)?)?,
                    BoundKind::Cat0 => serde_json::to_value(compute_phi_cat0(&inp)?)?,
                });
            }
            emit_json(&out, common.out.as_deref(), "bound.json")?;
            Ok(0)
        }
        Command::Qihou {
            common,
            a1,
            a2,
            b1,
            b2,
            c1,
            c2,
            theta,
            g,
        } => {
            let inp = QihouInputs {
                a: [parse_rational(&a1)?, parse_rational(&a2)?],
                b: [parse_rational(&b1)?, parse_rational(&b2)?],
                c: [parse_rational(&c1)?, parse_rational(&c2)?],
                theta: parse_rational(&theta)?,
                g: CounterexampleFn::parse(&g)?,
                budget: budget(&common),
            };
            let r = quant_qihou_psi(&inp)?;
            emit_json(&r, common.out.as_deref(), "qihou.json")?;
            Ok(0)
        }
        Command::Experiment { common } => {
            let cfg = read_config(&common)?;
            let dir = common.out.as_ref().map(|o| o.join(cfg.id()));
            let rep = run_experiment(&cfg, dir.as_deref())?;
            match &dir {
                Some(d) => {
                    let format = match common.format {
                        FormatArg::Json => Format::Json,
                        FormatArg::Csv => Format::Csv,
                    };
                    println!("{}", emit_report(&rep, format, d)?.display());
                }
                None => println!("{}", serde_json::to_string_pretty(&rep)?),
            }
            Ok(verdict(rep.pass))
        }
        Command::Suite { common } => {
            let mut matrix = match &common.config {
                Some(path) => serde_json::from_str::<Vec<ExperimentConfig>>(&fs::read_to_string(path)?)
                    .map_err(|e| Error::Config(format!("suite config: {e}")))?,
                None => default_matrix(),
            };
            for cfg in &mut matrix {
                if let Some(s) = common.seed {
                    cfg.seed = s;
                }
                if let Some(b) = common.budget {
                    cfg.budget = Some(b);
                }
                cfg.variants = common.variant.constants();
            }
            let summary = soundness_suite(&matrix, common.out.as_deref());
            match (&common.out, common.format) {
                (Some(dir), FormatArg::Csv) => {
                    fs::create_dir_all(dir)?;
                    let path = dir.join("summary.csv");
                    summary.write_csv(fs::File::create(&path)?)?;
                    println!("{}", path.display());
                }
                (out, _) => emit_json(&summary, out.as_deref(), "summary.json")?,
            }
            Ok(verdict(summary.pass))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
