use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;

use lfpp::harness::{
    export_results, ingest_events_with, kernel_method_summary, read_embeddings, read_labels, run_grid,
    transfer_variants_grid, write_embeddings, write_events_csv, write_labels_csv, EmbedConfig, Embedders,
    EmbeddingRow, ExperimentGrid, Method, SimulateConfig,
};
use lfpp::learn::{adjusted_rand_index, auc, kmeans_spectral, predict_score, train_logistic, LogisticConfig};
use lfpp::simulate::simulate_cohort;
use lfpp::Error;

#[derive(Parser)]
#[command(name = "lfpp", version, about = "Latent factor point processes: simulate, embed, classify, cluster")]
struct Cli {
    /// Base seed; overrides the seed in the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for outputs whose path is not given explicitly.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a labelled cohort and write event and label CSVs.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Embed every patient of an event CSV.
    Embed {
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Number of codes; required when some codes never occur.
        #[arg(long)]
        dim: Option<usize>,
    },
    /// Fit a logistic model on training embeddings and score test embeddings.
    Classify {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Labels of the test patients, for AUC; defaults to --labels.
        #[arg(long)]
        test_labels: Option<PathBuf>,
        /// Logistic regression settings (JSON).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// K-means with spectral initialisation on embeddings.
    Cluster {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long, default_value_t = 300)]
        max_iter: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a simulation grid and write result tables and figures.
    Experiment {
        /// Grid settings (JSON); fields left out take the preset's values.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Preset::Figures)]
        preset: Preset,
        #[arg(long)]
        no_svg: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// Separation grid over n and T with the gauss kernel.
    Figures,
    /// Four transfer kernels at a single large separation.
    TransferVariants,
}

fn is_config_error(e: &Error) -> bool {
    matches!(
        e,
        Error::InvalidConfig(_)
            | Error::InvalidModel(_)
            | Error::InvalidEvents(_)
            | Error::DimensionMismatch { .. }
            | Error::DominatingBound { .. }
            | Error::SingleClass { .. }
            | Error::Parse { .. }
            | Error::Json(_)
            | Error::Csv(_)
    )
}

fn read_json<T: DeserializeOwned>(path: &Path) -> lfpp::Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
}

/// Merges the JSON object in `path` over `base`.
fn read_json_over<T: DeserializeOwned + serde::Serialize>(base: &T, path: &Path) -> lfpp::Result<T> {
    let text = std::fs::read_to_string(path)?;
    let patch: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
    let mut value = serde_json::to_value(base)?;
    match (value.as_object_mut(), patch) {
        (Some(obj), serde_json::Value::Object(p)) => obj.extend(p),
        _ => return Err(Error::InvalidConfig(format!("{}: expected a JSON object", path.display()))),
    }
    serde_json::from_value(value).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
}

fn output(explicit: Option<PathBuf>, out_dir: &Path, default: &str) -> lfpp::Result<PathBuf> {
    match explicit {
        Some(p) => Ok(p),
        None => {
            std::fs::create_dir_all(out_dir)?;
            Ok(out_dir.join(default))
        }
    }
}

/// Groups embedding rows by method, keeping first-appearance order.
fn by_method(rows: Vec<EmbeddingRow>) -> Vec<(Option<Method>, Vec<EmbeddingRow>)> {
    let mut groups: Vec<(Option<Method>, Vec<EmbeddingRow>)> = Vec::new();
    for r in rows {
        match groups.iter_mut().find(|g| g.0 == r.method) {
            Some(g) => g.1.push(r),
            None => groups.push((r.method, vec![r])),
        }
    }
    groups
}

fn method_suffix(m: Option<Method>) -> String {
    m.map_or(String::new(), |m| format!(" [{m}]"))
}

/// The larger of the two distinct labels (lexicographically) is positive.
fn binary_classes(labels: &HashMap<String, String>) -> lfpp::Result<String> {
    let mut classes: Vec<&String> = labels.values().collect();
    classes.sort();
    classes.dedup();
    match classes.as_slice() {
        [_, positive] => Ok((*positive).clone()),
        [_] | [] => Err(Error::InvalidConfig("training labels contain a single class".into())),
        _ => Err(Error::InvalidConfig(format!("expected two classes, found {}", classes.len()))),
    }
}

fn label_map(path: &Path) -> lfpp::Result<HashMap<String, String>> {
    Ok(read_labels(path)?.into_iter().collect())
}

fn run(cli: Cli) -> lfpp::Result<ExitCode> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Simulate { config, out, labels } => {
            let mut cfg: SimulateConfig = read_json(&config)?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            let data = simulate_cohort(&cfg.plan()?)?;
            let events_path = output(out, &cli.out_dir, "events.csv")?;
            let labels_path = output(labels, &cli.out_dir, "labels.csv")?;
            write_events_csv(&data, &events_path)?;
            write_labels_csv(&data, &labels_path)?;
            println!(
                "simulated {} patients, {} events -> {}, {}",
                data.len(),
                data.records.iter().map(|r| r.events.total_events()).sum::<usize>(),
                events_path.display(),
                labels_path.display()
            );
        }
        Command::Embed { events, config, out, dim } => {
            let cfg: EmbedConfig = match config {
                Some(p) => read_json(&p)?,
                None => EmbedConfig::default(),
            };
            if cfg.methods.is_empty() {
                return Err(Error::InvalidConfig("methods must be nonempty".into()));
            }
            let data = ingest_events_with(&events, None, dim)?;
            let embedders = Embedders::from_config(&cfg)?;
            let tag = cfg.methods != [Method::FourierEigen];
            let mut rows = Vec::new();
            for &method in &cfg.methods {
                let features = embedders.features(&data, method)?;
                for (r, f) in data.records.iter().zip(features) {
                    rows.push(EmbeddingRow {
                        id: r.id.clone(),
                        method: tag.then_some(method),
                        features: f,
                    });
                }
            }
            let path = output(out, &cli.out_dir, "embeddings.csv")?;
            write_embeddings(&rows, &path)?;
            println!("embedded {} patients -> {}", data.len(), path.display());
        }
        Command::Classify { train, labels, test, test_labels, config, out } => {
            let cfg: LogisticConfig = match config {
                Some(p) => read_json(&p)?,
                None => LogisticConfig::default(),
            };
            let train_labels = label_map(&labels)?;
            let test_labels = match test_labels {
                Some(p) => label_map(&p)?,
                None => train_labels.clone(),
            };
            let positive = binary_classes(&train_labels)?;
            let tests = by_method(read_embeddings(&test)?);
            let path = output(out, &cli.out_dir, "scores.csv")?;
            let mut w = csv::Writer::from_path(&path)?;
            let tagged = tests.iter().any(|g| g.0.is_some());
            let mut header = vec!["patient_id"];
            if tagged {
                header.push("method");
            }
            header.extend(["score", "label"]);
            w.write_record(&header)?;
            let trains = by_method(read_embeddings(&train)?);
            for (method, train_rows) in &trains {
                let mut x = Vec::new();
                let mut y = Vec::new();
                for r in train_rows {
                    let label = train_labels.get(&r.id).ok_or_else(|| {
                        Error::InvalidConfig(format!("no label for training patient {:?}", r.id))
                    })?;
                    x.push(r.features.clone());
                    y.push(*label == positive);
                }
                let model = train_logistic(&x, &y, &cfg)?;
                let Some((_, test_rows)) = tests.iter().find(|g| g.0 == *method) else {
                    return Err(Error::InvalidConfig(format!("test embeddings lack method{}", method_suffix(*method))));
                };
                let mut scores = Vec::new();
                let mut truth = Vec::new();
                for r in test_rows {
                    let s = predict_score(&model, &r.features)?;
                    let label = test_labels.get(&r.id);
                    let mut rec = vec![r.id.clone()];
                    if tagged {
                        rec.push(method.map_or(String::new(), |m| m.name().to_string()));
                    }
                    rec.push(s.to_string());
                    rec.push(label.cloned().unwrap_or_default());
                    w.write_record(&rec)?;
                    scores.push(s);
                    truth.push(label.map(|l| *l == positive));
                }
                if truth.iter().all(|t| t.is_some()) {
                    let truth: Vec<bool> = truth.into_iter().flatten().collect();
                    match auc(&scores, &truth) {
                        Ok(a) => println!("auc{}: {a:.6}", method_suffix(*method)),
                        Err(e) => println!("auc{}: unavailable ({e})", method_suffix(*method)),
                    }
                }
            }
            w.flush()?;
            println!("scores -> {}", path.display());
        }
        Command::Cluster { embeddings, k, labels, max_iter, out } => {
            let seed = cli.seed.unwrap_or(0);
            let labels = labels.map(|p| label_map(&p)).transpose()?;
            let groups = by_method(read_embeddings(&embeddings)?);
            let path = output(out, &cli.out_dir, "assignments.csv")?;
            let mut w = csv::Writer::from_path(&path)?;
            let tagged = groups.iter().any(|g| g.0.is_some());
            let mut header = vec!["patient_id"];
            if tagged {
                header.push("method");
            }
            header.push("cluster");
            w.write_record(&header)?;
            for (method, rows) in &groups {
                let features: Vec<Vec<f64>> = rows.iter().map(|r| r.features.clone()).collect();
                let result = kmeans_spectral(&features, k, seed, max_iter)?;
                for (r, c) in rows.iter().zip(&result.assignments) {
                    let mut rec = vec![r.id.clone()];
                    if tagged {
                        rec.push(method.map_or(String::new(), |m| m.name().to_string()));
                    }
                    rec.push(c.to_string());
                    w.write_record(&rec)?;
                }
                if let Some(labels) = &labels {
                    let truth: Option<Vec<&String>> = rows.iter().map(|r| labels.get(&r.id)).collect();
                    if let Some(truth) = truth {
                        let ari = adjusted_rand_index(&truth, &result.assignments)?;
                        println!("ari{}: {ari:.6}", method_suffix(*method));
                    }
                }
            }
            w.flush()?;
            println!("assignments -> {}", path.display());
        }
        Command::Experiment { config, preset, no_svg } => {
            let base = match preset {
                Preset::Figures => ExperimentGrid::default(),
                Preset::TransferVariants => transfer_variants_grid(),
            };
            let mut grid = match config {
                Some(p) => read_json_over(&base, &p)?,
                None => base,
            };
            if let Some(seed) = cli.seed {
                grid.seed = seed;
            }
            let table = run_grid(&grid)?;
            std::fs::create_dir_all(&cli.out_dir)?;
            let paths = export_results(&table, &cli.out_dir, !no_svg)?;
            print!("{}", table.to_text());
            if grid.kernels.len() > 1 {
                print!("\n{}", kernel_method_summary(&table));
            }
            for p in paths {
                println!("wrote {}", p.display());
            }
            if table.has_failures() {
                eprintln!("{} replication failures; see failures.csv", table.failures.len());
                return Ok(ExitCode::from(3));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if is_config_error(&e) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
