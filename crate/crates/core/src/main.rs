//! Command-line driver for the rotor prognosis pipeline.
//!
//! Every command is a deterministic function of (config, inputs, seed); all
//! randomness flows from the config seed. On failure the process exits
//! nonzero after printing a single machine-readable `error: ...` line to
//! stderr.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use rotor_prognosis::cascade::CascadeModel;
use rotor_prognosis::classifiers::TrainedModel;
use rotor_prognosis::config::Config;
use rotor_prognosis::datagen::generate_fleet;
use rotor_prognosis::io;
use rotor_prognosis::pipeline::{
    self, cv_report_csv, featurize, score_predictions, select_feature_lists, train_all,
    TrainedSuite,
};
use rotor_prognosis::report;
use rotor_prognosis::selection::boxplot_export;

#[derive(Parser)]
#[command(
    name = "rotor-prognosis",
    version,
    about = "Rotor deterioration prognosis: synthetic fleets, feature pipelines, cascade models, and time-weighted scoring"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic fleet: one wave-bundle CSV per machine plus a
    /// machine manifest.
    Datagen {
        /// TOML config file; omit for the reference defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for <machine>.csv files and machines.csv.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Denoise waves, extract the 144-feature records, and label them.
    Featurize {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory holding the per-machine wave CSVs.
        #[arg(long)]
        waves_dir: PathBuf,
        /// Machine manifest written by datagen.
        #[arg(long)]
        manifest: PathBuf,
        /// Output feature CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the two-stage feature selection on the training split; writes
    /// na_features.txt, rh_features.txt, ternary_features.txt.
    SelectFeatures {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Train the cascade grid and ternary baselines; writes serialized
    /// models and the cross-validation report.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        features: PathBuf,
        /// Feature list for the normal-abnormal stage (override the selected
        /// list by editing the file).
        #[arg(long)]
        na_list: PathBuf,
        /// Feature list for the risky-high-risk stage.
        #[arg(long)]
        rh_list: PathBuf,
        /// Feature list for the ternary baseline.
        #[arg(long)]
        ternary_list: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Evaluate every trained model on the train-set re-test and the test
    /// set; writes the score grid, ranking, and per-machine reports.
    Evaluate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        models_dir: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Score a standalone prediction CSV (loop_id,timestamp,truth,predicted).
    Score {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        predictions: PathBuf,
        /// Output report CSV; a human-readable summary goes to stdout.
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit SVG boxplots of selected features and, given a ranking file, the
    /// grouped test-score bar chart and ranked model table.
    Report {
        #[arg(long)]
        features: PathBuf,
        /// Feature list to plot (e.g. the selected na list).
        #[arg(long)]
        feature_list: PathBuf,
        /// ranking.csv from the evaluate command.
        #[arg(long)]
        ranking: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn load_config(path: &Option<PathBuf>) -> Result<Config> {
    match path {
        Some(p) => {
            let config = Config::load(p.to_str().context("non-UTF-8 config path")?)?;
            Ok(config)
        }
        None => Ok(Config::default()),
    }
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Datagen { config, out_dir } => {
            let config = load_config(&config)?;
            let fleet = generate_fleet(&config.fleet())?;
            let mut manifest = Vec::new();
            for machine in &fleet {
                io::write_wave_csv(&out_dir, machine)?;
                manifest.push(io::ManifestEntry {
                    machine_id: machine.timeline.machine_id().to_string(),
                    failure_time: machine.timeline.failure_time(),
                    downtime_end: machine.timeline.downtime_end(),
                });
            }
            io::write_manifest(&out_dir.join("machines.csv"), &manifest)?;
            println!(
                "wrote {} machines to {}",
                fleet.len(),
                out_dir.display()
            );
            Ok(())
        }
        Command::Featurize {
            config,
            waves_dir,
            manifest,
            out,
        } => {
            let config = load_config(&config)?;
            let manifest = io::read_manifest(&manifest)?;
            let mut arrays = Vec::new();
            for entry in &manifest {
                let path = waves_dir.join(format!("{}.csv", entry.machine_id));
                arrays.extend(io::read_wave_csv(&path)?);
            }
            let matrix = featurize(&arrays, &manifest, config.features.denoise)?;
            io::write_feature_csv(&out, &matrix)?;
            println!(
                "extracted {} x {} features to {}",
                matrix.len(),
                matrix.names().len(),
                out.display()
            );
            Ok(())
        }
        Command::SelectFeatures {
            config,
            features,
            out_dir,
        } => {
            let config = load_config(&config)?;
            let matrix = io::read_feature_csv(&features)?;
            let (train, _) = pipeline::split_by_config(&matrix, &config)?;
            let lists = select_feature_lists(&train, &config)?;
            io::write_feature_list(&out_dir.join("na_features.txt"), &lists.na)?;
            io::write_feature_list(&out_dir.join("rh_features.txt"), &lists.rh)?;
            io::write_feature_list(&out_dir.join("ternary_features.txt"), &lists.ternary)?;
            println!(
                "selected {} (na), {} (rh), {} (ternary) features",
                lists.na.len(),
                lists.rh.len(),
                lists.ternary.len()
            );
            Ok(())
        }
        Command::Train {
            config,
            features,
            na_list,
            rh_list,
            ternary_list,
            out_dir,
        } => {
            let config = load_config(&config)?;
            let matrix = io::read_feature_csv(&features)?;
            let (train, _) = pipeline::split_by_config(&matrix, &config)?;
            let lists = pipeline::SelectedFeatures {
                na: io::read_feature_list(&na_list)?,
                rh: io::read_feature_list(&rh_list)?,
                ternary: io::read_feature_list(&ternary_list)?,
            };
            let suite = train_all(&train, &lists, &config)?;
            for (name, model) in &suite.cascades {
                let path = out_dir.join(format!("cascade_{}.json", name.replace('+', "_")));
                io::atomic_write(&path, &serde_json::to_string_pretty(model)?)?;
            }
            for (name, model) in &suite.ternaries {
                let path = out_dir.join(format!("ternary_{name}.json"));
                io::atomic_write(&path, &model.to_json()?)?;
            }
            io::atomic_write(&out_dir.join("cv_report.csv"), &cv_report_csv(&suite.cv_rows))?;
            println!(
                "trained {} cascade and {} ternary models to {}",
                suite.cascades.len(),
                suite.ternaries.len(),
                out_dir.display()
            );
            Ok(())
        }
        Command::Evaluate {
            config,
            features,
            models_dir,
            out_dir,
        } => {
            let config = load_config(&config)?;
            let matrix = io::read_feature_csv(&features)?;
            let (train, test) = pipeline::split_by_config(&matrix, &config)?;
            let suite = load_models(&models_dir)?;
            let weights = config.weights()?;
            let outcome = pipeline::evaluate_all(&suite, &train, &test, weights)?;
            io::atomic_write(
                &out_dir.join("score_grid.csv"),
                &report::score_grid_csv(&outcome.candidates),
            )?;
            io::atomic_write(
                &out_dir.join("ranking.csv"),
                &report::ranking_csv(&outcome.candidates, &outcome.ranking),
            )?;
            let mut per_machine = String::new();
            for (name, evaluation) in &outcome.test_reports {
                per_machine.push_str(&report::per_machine_csv(name, evaluation));
            }
            io::atomic_write(&out_dir.join("per_machine.csv"), &per_machine)?;
            print!("{}", report::ranking_table(&outcome.candidates, &outcome.ranking));
            Ok(())
        }
        Command::Score {
            config,
            predictions,
            out,
        } => {
            let config = load_config(&config)?;
            let rows = io::read_prediction_csv(&predictions)?;
            let score = score_predictions(&rows, config.weights()?)?;
            io::atomic_write(&out, &pipeline::score_report_csv(&score))?;
            print!("{}", pipeline::score_report_text(&score));
            Ok(())
        }
        Command::Report {
            features,
            feature_list,
            ranking,
            out_dir,
        } => {
            let matrix = io::read_feature_csv(&features)?;
            let names = io::read_feature_list(&feature_list)?;
            let selected = matrix.select(&names)?;
            let (stats, warnings) = boxplot_export(&selected)?;
            for warning in warnings {
                eprintln!("warning: {warning}");
            }
            io::atomic_write(
                &out_dir.join("boxplots.svg"),
                &report::svg_boxplots("selected features by state", &stats),
            )?;
            if let Some(ranking_path) = ranking {
                let (groups, table) = bar_groups_from_ranking(&ranking_path)?;
                io::atomic_write(
                    &out_dir.join("test_scores.svg"),
                    &report::svg_grouped_bars(
                        "test scores by model",
                        &groups,
                        &["accuracy", "S", "C"],
                    ),
                )?;
                io::atomic_write(&out_dir.join("ranked_models.txt"), &table)?;
            }
            println!("wrote report artifacts to {}", out_dir.display());
            Ok(())
        }
    }
}

/// Reassemble a trained suite from the files the train command wrote.
fn load_models(dir: &Path) -> Result<TrainedSuite> {
    let mut cascades = Vec::new();
    let mut ternaries = Vec::new();
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("cannot list {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    entries.sort();
    for path in entries {
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        let text = std::fs::read_to_string(&path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        if let Some(name) = stem.strip_prefix("cascade_") {
            let model: CascadeModel = serde_json::from_str(&text)
                .with_context(|| format!("cannot parse {}", path.display()))?;
            cascades.push((name.replacen('_', "+", 1), model));
        } else if let Some(name) = stem.strip_prefix("ternary_") {
            let model = TrainedModel::from_json(&text)
                .with_context(|| format!("cannot parse {}", path.display()))?;
            ternaries.push((name.to_string(), model));
        }
    }
    if cascades.is_empty() && ternaries.is_empty() {
        bail!("no model files (cascade_*.json / ternary_*.json) in {}", dir.display());
    }
    Ok(TrainedSuite {
        cascades,
        ternaries,
        cv_rows: Vec::new(),
    })
}

/// Parse ranking.csv back into bar-chart groups plus the rendered table.
fn bar_groups_from_ranking(path: &Path) -> Result<(Vec<(String, Vec<f64>)>, String)> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().context("empty ranking file")?;
    if !header.starts_with("rank,model,kind,test_s,test_c,test_accuracy") {
        bail!("{}: unexpected ranking header", path.display());
    }
    let mut groups = Vec::new();
    let mut table = String::from("rank model kind test_s test_c test_accuracy\n");
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 6 {
            bail!("{}:{}: expected at least 6 fields", path.display(), i + 2);
        }
        let parse = |f: &str| -> f64 { f.parse().unwrap_or(f64::NAN) };
        let accuracy = parse(fields[5]);
        let s = parse(fields[3]);
        let c = parse(fields[4]);
        groups.push((fields[1].to_string(), vec![accuracy, s, c]));
        table.push_str(&format!(
            "{} {} {} {} {} {}\n",
            fields[0], fields[1], fields[2], fields[3], fields[4], fields[5]
        ));
    }
    Ok((groups, table))
}

fn main() {
    if let Err(error) = run() {
        eprintln!("error: {error:#}");
        std::process::exit(1);
    }
}
