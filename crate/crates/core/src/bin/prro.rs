use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use prro::encoding::{load_corpus, write_corpus, write_rejects, NameMode, ParsePolicy};
use prro::evaluation::{degenerate_positive_fix, evaluate_scenarios, ClassifierKind, ScenarioReport};
use prro::generator::{leakage_check, DEFAULT_MARGIN};
use prro::pipeline::{
    generate_stage, load_input, prune_stage, reorder_stage, run_pipeline, save_with_sidecar, seeds,
    EvaluationSection, GeneratorKind, GeneratorSection, InputTable, PipelineConfig, PruneMethod, PruningSection,
    ReorderingSection,
};
use prro::reordering::{inverse_reorder, ColumnPermutation, ImportanceMetric, ReorderMode};
use prro::seed::derive_seed;
use prro::table::{load_csv, sidecar_path_for, split, SchemaSource, SplitBundle, SplitRatios};
use prro::{PrroError, Result};

#[derive(Parser)]
#[command(name = "prro", version, about = "Pre-synthesis pruning and reordering for tabular generators")]
struct Cli {
    /// Log stage progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct TableArgs {
    /// Input CSV.
    #[arg(short, long)]
    input: PathBuf,
    /// Schema sidecar (default: <input stem>.schema.toml if present).
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long)]
    label: Option<String>,
    /// Positive (interest) label.
    #[arg(long)]
    positive: Option<String>,
}

impl TableArgs {
    fn load(&self) -> Result<InputTable> {
        load_input(&self.input, self.schema.as_deref(), self.label.as_deref(), self.positive.as_deref())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Split into generator-train, holdout and validation parts.
    Split {
        #[command(flatten)]
        table: TableArgs,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated generator-train,holdout,validation fractions.
        #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [0.4, 0.4, 0.2])]
        ratios: Vec<f64>,
        #[arg(long)]
        no_stratify: bool,
    },
    /// Prune the non-interest class (or undersample it).
    Prune {
        #[command(flatten)]
        table: TableArgs,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, default_value_t = prro::pruning::DEFAULT_TAU)]
        tau: f64,
        #[arg(long, value_enum, default_value = "signal")]
        method: MethodArg,
        #[arg(long, default_value_t = 0.5)]
        majority_ratio: f64,
        #[arg(long)]
        clusters: Option<usize>,
        #[arg(long)]
        max_comparisons: Option<usize>,
        /// Report path (default: next to the output, `.prune_report.txt`).
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Rearrange columns, or restore them with --inverse.
    Reorder {
        #[command(flatten)]
        table: TableArgs,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, default_value = "predictor_last")]
        mode: String,
        #[arg(long)]
        inverse: bool,
        /// Permutation sidecar (default: <out stem>.permutation.json when
        /// reordering, <input stem>.permutation.json with --inverse).
        #[arg(long)]
        permutation: Option<PathBuf>,
        #[arg(long, default_value = "decision_tree")]
        classifier: String,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long, default_value = "accuracy")]
        metric: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Encode rows as sentences, or parse a corpus back with --decode.
    Encode {
        #[command(flatten)]
        table: TableArgs,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        decode: bool,
        /// Use `Column i` names instead of real column names.
        #[arg(long)]
        placeholder: bool,
        #[arg(long)]
        rejects: Option<PathBuf>,
        #[arg(long, default_value_t = ParsePolicy::default().max_reject_fraction)]
        max_reject_fraction: f64,
    },
    /// Fit the chain generator (or call the bridge) and sample.
    Generate {
        #[command(flatten)]
        table: TableArgs,
        #[arg(short, long)]
        out: PathBuf,
        /// Rows to draw (default: input size).
        #[arg(short, long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 8)]
        bins: usize,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// External generator command; the bridge is used when this or
        /// PRRO_BRIDGE_CMD is set.
        #[arg(long)]
        bridge_cmd: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Replacement and appendant scenarios against a split directory.
    Evaluate {
        /// Directory written by `split`.
        #[arg(long)]
        split_dir: PathBuf,
        /// Synthetic CSV in the original column order.
        #[arg(long)]
        synthetic: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        positive: Option<String>,
        #[arg(long, value_delimiter = ',', default_value = "logistic_regression,decision_tree,gaussian_nb")]
        classifiers: Vec<String>,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        /// Also write a leakage report here.
        #[arg(long)]
        leakage: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_MARGIN)]
        margin: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Flatten a scenario report JSON into the long CSV table.
    Report {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Run the whole pipeline from a TOML config.
    Run {
        #[arg(short, long)]
        config: PathBuf,
        /// Override a config key, e.g. `--set pruning.tau=0.4`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Also run the arm without pruning or reordering.
        #[arg(long)]
        compare: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum MethodArg {
    Signal,
    RandomUndersample,
    ClusterCentroids,
}

fn parse_arg<T: std::str::FromStr<Err = PrroError>>(s: &str) -> Result<T> {
    s.parse()
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn load_split_dir(dir: &Path, positive: Option<&str>) -> Result<(SplitBundle, String)> {
    let part = |name: &str| load_input(&dir.join(name), None, None, positive);
    let train = part("generator_train.csv")?;
    let holdout = part("holdout.csv")?;
    let validation = part("validation.csv")?;
    Ok((
        SplitBundle {
            generator_train: train.dataset,
            holdout: holdout.dataset,
            validation: validation.dataset,
            seed: 0,
            ratios: SplitRatios::DEFAULT,
            indices: Default::default(),
        },
        train.positive,
    ))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Split {
            table,
            out_dir,
            seed,
            ratios,
            no_stratify,
        } => {
            let input = table.load()?;
            let ratios = SplitRatios::new(ratios[0], ratios[1], ratios[2])?;
            let bundle = split(&input.dataset, ratios, derive_seed(seed, seeds::SPLIT), !no_stratify)?;
            std::fs::create_dir_all(&out_dir).map_err(|e| PrroError::io(&out_dir, e))?;
            let pos = Some(input.positive.as_str());
            save_with_sidecar(&bundle.generator_train, &out_dir.join("generator_train.csv"), pos)?;
            save_with_sidecar(&bundle.holdout, &out_dir.join("holdout.csv"), pos)?;
            save_with_sidecar(&bundle.validation, &out_dir.join("validation.csv"), pos)?;
            println!(
                "generator_train {} / holdout {} / validation {}",
                bundle.generator_train.n_rows(),
                bundle.holdout.n_rows(),
                bundle.validation.n_rows()
            );
        }
        Command::Prune {
            table,
            out,
            tau,
            method,
            majority_ratio,
            clusters,
            max_comparisons,
            report,
            seed,
        } => {
            let input = table.load()?;
            let section = PruningSection {
                enabled: true,
                method: match method {
                    MethodArg::Signal => PruneMethod::Signal,
                    MethodArg::RandomUndersample => PruneMethod::RandomUndersample,
                    MethodArg::ClusterCentroids => PruneMethod::ClusterCentroids,
                },
                tau,
                majority_ratio,
                clusters,
                max_comparisons,
                ..PruningSection::default()
            };
            let (pruned, rep) = prune_stage(&input.dataset, &section, &input.positive, derive_seed(seed, seeds::PRUNE))?;
            save_with_sidecar(&pruned, &out, Some(&input.positive))?;
            let report = report.unwrap_or_else(|| with_suffix(&out, ".prune_report.txt"));
            std::fs::write(&report, rep.to_text()).map_err(|e| PrroError::io(&report, e))?;
            print!("{}", rep.to_text());
        }
        Command::Reorder {
            table,
            out,
            mode,
            inverse,
            permutation,
            classifier,
            repeats,
            metric,
            seed,
        } => {
            let input = table.load()?;
            if inverse {
                let path = permutation.unwrap_or_else(|| with_suffix(&table.input, ".permutation.json"));
                let perm = ColumnPermutation::load(&path)?;
                let restored = inverse_reorder(&input.dataset, &perm)?;
                save_with_sidecar(&restored, &out, Some(&input.positive))?;
            } else {
                let section = ReorderingSection {
                    mode: parse_arg::<ReorderMode>(&mode)?,
                    classifier: parse_arg::<ClassifierKind>(&classifier)?,
                    repeats,
                    metric: parse_arg::<ImportanceMetric>(&metric)?,
                };
                let (reordered, perm) = reorder_stage(
                    &input.dataset,
                    &section,
                    &input.positive,
                    &EvaluationSection::default().classifier_config(),
                    derive_seed(seed, seeds::REORDER),
                )?;
                save_with_sidecar(&reordered, &out, Some(&input.positive))?;
                perm.save(&permutation.unwrap_or_else(|| with_suffix(&out, ".permutation.json")))?;
                println!("{}", reordered.schema().names().join(", "));
            }
        }
        Command::Encode {
            table,
            out,
            decode,
            placeholder,
            rejects,
            max_reject_fraction,
        } => {
            let mode = if placeholder { NameMode::Placeholder } else { NameMode::Real };
            if decode {
                let sidecar = table
                    .schema
                    .clone()
                    .ok_or_else(|| PrroError::Config("--decode needs --schema".into()))?;
                let side = prro::table::load_sidecar(&sidecar)?;
                let schema = side
                    .pinned_schema()?
                    .ok_or_else(|| PrroError::Config(format!("{} does not list columns", sidecar.display())))?;
                let policy = ParsePolicy {
                    max_reject_fraction,
                    ..ParsePolicy::default()
                };
                let (d, rej) = load_corpus(&table.input, &schema, &policy, mode)?;
                save_with_sidecar(&d, &out, side.positive.as_deref())?;
                if let Some(path) = rejects {
                    write_rejects(&path, &rej)?;
                }
                println!("{} rows parsed, {} rejected", d.n_rows(), rej.len());
            } else {
                let input = table.load()?;
                write_corpus(&out, &input.dataset, mode)?;
                prro::table::SchemaSidecar::from_schema(input.dataset.schema(), Some(&input.positive))
                    .save(&sidecar_path_for(&out))?;
            }
        }
        Command::Generate {
            table,
            out,
            n,
            bins,
            alpha,
            bridge_cmd,
            seed,
        } => {
            let input = table.load()?;
            let command = bridge_cmd.or_else(prro::generator::bridge_command_from_env);
            let section = GeneratorSection {
                kind: if command.is_some() { GeneratorKind::Bridge } else { GeneratorKind::Chain },
                bins,
                alpha,
                command,
                ..GeneratorSection::default()
            };
            let n = n.unwrap_or(input.dataset.n_rows());
            let bridge_dir = with_suffix(&out, ".bridge");
            let (synthetic, rej) =
                generate_stage(&input.dataset, &section, n, derive_seed(seed, seeds::GENERATE), &bridge_dir)?;
            if !rej.is_empty() {
                write_rejects(&with_suffix(&out, ".rejects.jsonl"), &rej)?;
            }
            save_with_sidecar(&synthetic, &out, Some(&input.positive))?;
        }
        Command::Evaluate {
            split_dir,
            synthetic,
            out,
            positive,
            classifiers,
            threshold,
            leakage,
            margin,
            seed,
        } => {
            let (bundle, positive) = load_split_dir(&split_dir, positive.as_deref())?;
            let synth = load_csv(&synthetic, &SchemaSource::Pinned(bundle.generator_train.schema().clone()))?;
            if let Some(path) = leakage {
                let report = leakage_check(&synth, &bundle.generator_train, &bundle.holdout, margin)?;
                std::fs::write(&path, report.to_json() + "\n").map_err(|e| PrroError::io(&path, e))?;
            }
            let fixed = degenerate_positive_fix(&synth, &positive, derive_seed(seed, seeds::POSITIVE_FIX))?;
            let kinds = classifiers
                .iter()
                .map(|c| parse_arg::<ClassifierKind>(c))
                .collect::<Result<Vec<_>>>()?;
            let section = EvaluationSection {
                threshold,
                ..EvaluationSection::default()
            };
            let name = synthetic.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let report = evaluate_scenarios(&name, &bundle, &fixed, &kinds, &positive, &section.eval_config())?;
            std::fs::write(&out, report.to_json() + "\n").map_err(|e| PrroError::io(&out, e))?;
        }
        Command::Report { input, out } => {
            let text = std::fs::read_to_string(&input).map_err(|e| PrroError::io(&input, e))?;
            let report = ScenarioReport::from_json(&text)?;
            std::fs::write(&out, report.to_csv()).map_err(|e| PrroError::io(&out, e))?;
        }
        Command::Run {
            config,
            mut overrides,
            compare,
            output,
        } => {
            if let Some(dir) = output {
                overrides.push(format!("output={:?}", dir.to_string_lossy()));
            }
            let cfg = PipelineConfig::load(&config, &overrides)?;
            let outcome = run_pipeline(&cfg, compare)?;
            println!("wrote {}", cfg.output.display());
            if let Some(c) = outcome.comparison {
                println!(
                    "discount without pruning {:.2}%, with pruning {:.2}%",
                    c.discount_without_pruning * 100.0,
                    c.discount_with_pruning * 100.0
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
