use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::config::{parse_pairs, DataFormat, DatasetKind, ExperimentConfig};
use super::metrics::{write_records_file, MetricsRecord};
use super::run::{load_split, run_experiment, run_sweep, SweepPlan};
use crate::dataio::{write_raw_container, Fraction};
use crate::ensemble::DiversityKind;
use crate::ssl::UnlabeledMode;
use crate::{FfError, Result};

#[derive(Debug, Parser)]
#[command(name = "ffcnn", version, about = "Feedforward-designed semi-supervised CNN experiments")]
pub struct Cli {
    /// Log more (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train and evaluate one configuration.
    Run(ConfigArgs),
    /// Run a grid of label fractions, unlabeled modes and seeds.
    Sweep(SweepArgs),
    /// Train an ensemble (defaults to T1,T3 on gray data, T1,T2,T3 on color).
    Ensemble(ConfigArgs),
    /// Re-encode a dataset split as an FFC1 raw container.
    Convert(ConvertArgs),
    /// Print the resolved configuration as key = value lines.
    PrintConfig(ConfigArgs),
}

macro_rules! key_flags {
    ($($field:ident),* $(,)?) => {
        /// One flag per config key; each overrides the config file.
        #[derive(Debug, Default, Args)]
        pub struct KeyFlags {
            $(
                #[arg(long)]
                pub $field: Option<String>,
            )*
        }

        impl KeyFlags {
            fn pairs(&self) -> Vec<(String, String)> {
                let mut out = Vec::new();
                $(
                    if let Some(v) = &self.$field {
                        out.push((stringify!($field).to_string(), v.clone()));
                    }
                )*
                out
            }
        }
    };
}

key_flags!(
    dataset,
    format,
    train,
    test,
    fraction,
    seed,
    alpha,
    keep_fraction,
    arch,
    cpca_dim,
    stage_widths,
    unlabeled_mode,
    ensemble_types,
    svm_c,
    svm_gamma,
    energy_threshold,
    patch_cap,
    ridge_scale,
    jobs,
    output,
    model_dir,
);

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Config file of key = value lines.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub keys: KeyFlags,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut pairs = match &self.config {
            Some(path) => parse_pairs(&fs::read_to_string(path)?)?,
            None => Vec::new(),
        };
        pairs.extend(self.keys.pairs());
        ExperimentConfig::from_pairs(&pairs)
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub base: ConfigArgs,
    /// Comma-separated fractions; defaults to 1/2..1/512 (1/2..1/256 for CIFAR-10).
    #[arg(long)]
    pub fractions: Option<String>,
    /// Comma-separated unlabeled modes (none, all, selected).
    #[arg(long)]
    pub modes: Option<String>,
    /// Comma-separated seeds.
    #[arg(long)]
    pub seeds: Option<String>,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// Source encoding: idx, cifar or raw.
    #[arg(long)]
    pub format: String,
    /// Comma-separated input files (idx: images,labels).
    #[arg(long)]
    pub input: String,
    #[arg(long)]
    pub output: PathBuf,
}

fn list<T>(value: &str, parse: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(parse)
        .collect()
}

/// The protocol's label fractions for a dataset.
pub fn default_fractions(dataset: DatasetKind) -> Vec<Fraction> {
    let deepest = if dataset == DatasetKind::Cifar10 { 8 } else { 9 };
    (1..=deepest).map(Fraction::inverse_power_of_two).collect()
}

fn print_record(r: &MetricsRecord) {
    if r.is_error() {
        eprintln!("{} {} seed {}: error: {}", r.dataset, r.fraction, r.seed, r.error);
        return;
    }
    let ens = r.ensemble_accuracy.map_or(String::new(), |a| format!(", ensemble {a:.2}%"));
    println!(
        "{} {} {} seed {}: {} labeled, accuracy {:.2}%{ens} ({:.1}s)",
        r.dataset,
        r.fraction,
        r.unlabeled_mode,
        r.seed,
        r.labeled_count,
        r.accuracy.unwrap_or(f64::NAN),
        r.seconds
    );
}

/// Executes a parsed command line; `Ok(false)` means some run failed.
pub fn execute(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::PrintConfig(args) => {
            print!("{}", args.resolve()?.to_kv_string());
            Ok(true)
        }
        Command::Run(args) => {
            let cfg = args.resolve()?;
            let rec = run_experiment(&cfg).unwrap_or_else(|e| MetricsRecord::failed(&cfg, &e, 0.0));
            print_record(&rec);
            write_records_file(&cfg.output, std::slice::from_ref(&rec))?;
            Ok(!rec.is_error())
        }
        Command::Ensemble(args) => {
            let mut cfg = args.resolve()?;
            if cfg.ensemble_types.is_empty() {
                cfg.ensemble_types = match cfg.dataset {
                    DatasetKind::Mnist => vec![DiversityKind::T1, DiversityKind::T3],
                    _ => vec![DiversityKind::T1, DiversityKind::T2, DiversityKind::T3],
                };
            }
            let rec = run_experiment(&cfg).unwrap_or_else(|e| MetricsRecord::failed(&cfg, &e, 0.0));
            print_record(&rec);
            write_records_file(&cfg.output, std::slice::from_ref(&rec))?;
            Ok(!rec.is_error())
        }
        Command::Sweep(args) => {
            let cfg = args.base.resolve()?;
            let plan = SweepPlan {
                fractions: match &args.fractions {
                    Some(v) => list(v, str::parse)?,
                    None => default_fractions(cfg.dataset),
                },
                modes: match &args.modes {
                    Some(v) => list(v, str::parse::<UnlabeledMode>)?,
                    None => Vec::new(),
                },
                seeds: match &args.seeds {
                    Some(v) => list(v, |s| s.parse().map_err(|_| FfError::config(format!("bad seed `{s}`"))))?,
                    None => Vec::new(),
                },
            };
            let records = run_sweep(&cfg, &plan)?;
            records.iter().for_each(print_record);
            write_records_file(&cfg.output, &records)?;
            Ok(records.iter().all(|r| !r.is_error()))
        }
        Command::Convert(args) => {
            let format: DataFormat = args.format.parse()?;
            let inputs = list(&args.input, |s| Ok(PathBuf::from(s)))?;
            let set = load_split(format, &inputs)?;
            write_raw_container(&set, &args.output)?;
            println!("wrote {} images to {}", set.len(), args.output.display());
            Ok(true)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_line_is_well_formed() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_override_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.conf");
        fs::write(&path, "dataset = cifar10\nseed = 3\nalpha = 20\n").unwrap();
        let cli = Cli::try_parse_from([
            "ffcnn",
            "run",
            "--config",
            path.to_str().unwrap(),
            "--seed",
            "9",
            "--fraction",
            "1/64",
        ])
        .unwrap();
        let Command::Run(args) = &cli.command else { panic!() };
        let cfg = args.resolve().unwrap();
        assert_eq!(cfg.dataset, DatasetKind::Cifar10);
        assert_eq!((cfg.seed, cfg.alpha), (9, 20.0));
        assert_eq!(cfg.fraction, Fraction::inverse_power_of_two(6));
    }

    #[test]
    fn default_fraction_lists() {
        assert_eq!(default_fractions(DatasetKind::Mnist).len(), 9);
        let c = default_fractions(DatasetKind::Cifar10);
        assert_eq!(c.len(), 8);
        assert_eq!(c.last().unwrap().to_string(), "1/256");
    }
}
