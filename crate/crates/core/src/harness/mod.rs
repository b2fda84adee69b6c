//! Simulation studies: grids of (kernel, n, T, delta) cells, each replicated
//! with fresh cohorts, scored by test AUC and clustering ARI per embedding
//! method, and aggregated into a tidy result table.

mod io;
mod svg;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{count_embedding, pmi_embedding, PmiConfig};
use crate::config::{EstimatorConfig, SpectralConfig};
use crate::error::{Error, Result};
use crate::events::Dataset;
use crate::learn::{adjusted_rand_index, auc, kmeans_spectral, predict_score, train_logistic, LogisticConfig};
use crate::model::{two_group_model, ModelSpec, RateDesign, TransferBank, TransferKernel};
use crate::rng::{derive_seed, seeded_rng};
use crate::simulate::{simulate_cohort, ObservationTimes, SimulationPlan};
use crate::spectral::FourierEigenEmbedder;

pub use io::{
    ingest_events, ingest_events_with, read_embeddings, read_labels, read_results, write_embeddings,
    write_events_csv, write_labels_csv, EmbeddingRow,
};
pub use svg::render_figure;

const TAG_COEFFICIENTS: u64 = 1;
const TAG_TRAIN: u64 = 2;
const TAG_TEST: u64 = 3;
const TAG_KMEANS: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    FourierEigen,
    Pmi,
    Counts,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::FourierEigen, Method::Pmi, Method::Counts];

    pub fn name(self) -> &'static str {
        match self {
            Method::FourierEigen => "fourier_eigen",
            Method::Pmi => "pmi",
            Method::Counts => "counts",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Out-of-sample AUC of a logistic model trained on the embeddings.
    Auc,
    /// Adjusted Rand index of 2-means clusters of the training embeddings.
    Ari,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Auc => "auc",
            Metric::Ari => "ari",
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.name())
    }
}

/// Embedding settings shared by the CLI `embed` command and the grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedConfig {
    pub estimator: EstimatorConfig,
    pub spectral: SpectralConfig,
    pub pmi: PmiConfig,
    pub methods: Vec<Method>,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            estimator: EstimatorConfig::default(),
            spectral: SpectralConfig::default(),
            pmi: PmiConfig::default(),
            methods: vec![Method::FourierEigen],
        }
    }
}

/// Turns event sequences into per-method feature vectors.
#[derive(Debug, Clone)]
pub struct Embedders {
    fourier: FourierEigenEmbedder,
    pmi: PmiConfig,
}

impl Embedders {
    pub fn new(estimator: EstimatorConfig, spectral: SpectralConfig, pmi: PmiConfig) -> Result<Self> {
        Ok(Embedders {
            fourier: FourierEigenEmbedder::new(estimator, spectral)?,
            pmi,
        })
    }

    pub fn from_config(cfg: &EmbedConfig) -> Result<Self> {
        Self::new(cfg.estimator, cfg.spectral, cfg.pmi)
    }

    /// Features of every record, in record order.
    pub fn features(&self, data: &Dataset, method: Method) -> Result<Vec<Vec<f64>>> {
        match method {
            Method::FourierEigen => Ok(self
                .fourier
                .embed_all(data.records.par_iter().map(|r| &r.events))?
                .into_iter()
                .map(|e| e.into_vec())
                .collect()),
            Method::Pmi => data
                .records
                .par_iter()
                .map(|r| pmi_embedding(&r.events, &self.pmi).map(|e| e.into_vec()))
                .collect(),
            Method::Counts => Ok(data
                .records
                .par_iter()
                .map(|r| count_embedding(&r.events).to_features())
                .collect()),
        }
    }
}

/// Two-group model with coefficients drawn i.i.d. uniform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelGenerator {
    pub d: usize,
    pub k: usize,
    pub kernel: TransferKernel,
    /// Constant baseline rate of every code.
    pub baseline_rate: f64,
    /// Latent rates the two groups are placed around; `None` means all ones.
    pub base_mu: Option<Vec<f64>>,
    /// Euclidean distance between the two groups' latent rate vectors.
    pub delta: f64,
    pub rate_design: RateDesign,
    pub coefficient_range: [f64; 2],
}

impl Default for ModelGenerator {
    fn default() -> Self {
        ModelGenerator {
            d: 100,
            k: 2,
            kernel: TransferKernel::Gauss,
            baseline_rate: 0.1,
            base_mu: None,
            delta: 0.5,
            rate_design: RateDesign::Anchored,
            coefficient_range: [0.0, 0.5],
        }
    }
}

impl ModelGenerator {
    pub fn base_rates(&self) -> Vec<f64> {
        self.base_mu.clone().unwrap_or_else(|| vec![1.0; self.k])
    }

    pub fn build(&self, coefficient_seed: u64) -> Result<ModelSpec> {
        if !(self.baseline_rate.is_finite() && self.baseline_rate >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "baseline_rate must be >= 0, got {}",
                self.baseline_rate
            )));
        }
        let base = self.base_rates();
        if base.len() != self.k {
            return Err(Error::InvalidConfig(format!(
                "base_mu has {} entries, expected k = {}",
                base.len(),
                self.k
            )));
        }
        let [lo, hi] = self.coefficient_range;
        let mut rng = seeded_rng(coefficient_seed, 0);
        let bank = TransferBank::random_uniform(self.d, self.k, self.kernel, lo, hi, &mut rng)?;
        two_group_model(bank, vec![self.baseline_rate; self.d], &base, self.delta, self.rate_design)
    }
}

/// Input of the `simulate` command: an explicit model, or a generator whose
/// coefficients are drawn from `coefficient_seed` (default: `seed`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub model: Option<ModelSpec>,
    pub generator: ModelGenerator,
    pub coefficient_seed: Option<u64>,
    pub n: usize,
    pub observation_times: ObservationTimes,
    pub stratified: bool,
    pub burn_in: Option<f64>,
    pub seed: u64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            model: None,
            generator: ModelGenerator::default(),
            coefficient_seed: None,
            n: 100,
            observation_times: ObservationTimes::Common(100.0),
            stratified: true,
            burn_in: None,
            seed: 0,
        }
    }
}

impl SimulateConfig {
    pub fn plan(&self) -> Result<SimulationPlan> {
        let model = match &self.model {
            Some(m) => m.clone(),
            None => self
                .generator
                .build(self.coefficient_seed.unwrap_or(self.seed))?,
        };
        Ok(SimulationPlan {
            model,
            n: self.n,
            observation_times: self.observation_times.clone(),
            seed: self.seed,
            stratified: self.stratified,
            burn_in: self.burn_in,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentGrid {
    pub d: usize,
    pub k: usize,
    /// Training cohort sizes.
    pub n: Vec<usize>,
    /// Observation times.
    pub t: Vec<f64>,
    /// Group separations.
    pub delta: Vec<f64>,
    pub kernels: Vec<TransferKernel>,
    pub replications: usize,
    /// Size of the independent test cohort used for AUC.
    pub test_size: usize,
    pub baseline_rate: f64,
    pub base_mu: Option<Vec<f64>>,
    pub rate_design: RateDesign,
    pub coefficient_range: [f64; 2],
    /// Draw the coefficient matrix once per kernel instead of once per
    /// replication.
    pub freeze_coefficients: bool,
    pub estimator: EstimatorConfig,
    pub spectral: SpectralConfig,
    pub pmi: PmiConfig,
    pub logistic: LogisticConfig,
    pub kmeans_max_iter: usize,
    pub methods: Vec<Method>,
    pub metrics: Vec<Metric>,
    pub seed: u64,
}

impl Default for ExperimentGrid {
    fn default() -> Self {
        ExperimentGrid {
            d: 100,
            k: 2,
            n: vec![250, 500, 750],
            t: vec![50.0, 100.0, 150.0],
            delta: vec![0.3, 0.4, 0.5, 0.6, 0.7, 0.8],
            kernels: vec![TransferKernel::Gauss],
            replications: 20,
            test_size: 50,
            baseline_rate: 0.1,
            base_mu: None,
            rate_design: RateDesign::Anchored,
            coefficient_range: [0.0, 0.5],
            freeze_coefficients: false,
            estimator: EstimatorConfig::default(),
            spectral: SpectralConfig::default(),
            pmi: PmiConfig::default(),
            logistic: LogisticConfig::default(),
            kmeans_max_iter: 300,
            methods: Method::ALL.to_vec(),
            metrics: vec![Metric::Auc, Metric::Ari],
            seed: 2024,
        }
    }
}

/// The transfer-kernel robustness study: four compactly supported kernels
/// at a single large separation. The groups are placed symmetrically about
/// `(1, 1)` because anchoring one group there cannot reach `delta = 1.6`
/// with nonnegative rates.
pub fn transfer_variants_grid() -> ExperimentGrid {
    ExperimentGrid {
        n: vec![500],
        t: vec![100.0],
        delta: vec![1.6],
        kernels: vec![
            TransferKernel::SincDecay,
            TransferKernel::SqrtRamp,
            TransferKernel::LinRamp,
            TransferKernel::Exp4,
        ],
        rate_design: RateDesign::Symmetric,
        ..Default::default()
    }
}

/// One point of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub kernel: TransferKernel,
    pub n: usize,
    pub t: f64,
    pub delta: f64,
}

impl ExperimentGrid {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.d == 0 || self.k == 0 {
            return bad("d and k must be >= 1".into());
        }
        if self.n.is_empty() || self.t.is_empty() || self.delta.is_empty() || self.kernels.is_empty() {
            return bad("n, t, delta and kernels must be nonempty".into());
        }
        if let Some(n) = self.n.iter().find(|n| **n < 2) {
            return bad(format!("training size {n} must be >= 2"));
        }
        if let Some(t) = self.t.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return bad(format!("observation time {t} must be > 0"));
        }
        if let Some(x) = self.delta.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return bad(format!("separation {x} must be >= 0"));
        }
        if self.replications == 0 {
            return bad("replications must be >= 1".into());
        }
        if self.methods.is_empty() || self.metrics.is_empty() {
            return bad("methods and metrics must be nonempty".into());
        }
        if self.metrics.contains(&Metric::Auc) && self.test_size < 2 {
            return bad("test_size must be >= 2 to compute AUC".into());
        }
        self.estimator.validate()?;
        self.spectral.validate(self.d)?;
        if self.methods.contains(&Method::Pmi) {
            self.pmi.validate(self.d)?;
        }
        for &kernel in &self.kernels {
            for &delta in &self.delta {
                // feasibility of the rate design; coefficients do not matter
                self.generator(kernel, delta).build(0)?;
            }
        }
        Ok(())
    }

    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for &kernel in &self.kernels {
            for &n in &self.n {
                for &t in &self.t {
                    for &delta in &self.delta {
                        cells.push(Cell { kernel, n, t, delta });
                    }
                }
            }
        }
        cells
    }

    pub fn generator(&self, kernel: TransferKernel, delta: f64) -> ModelGenerator {
        ModelGenerator {
            d: self.d,
            k: self.k,
            kernel,
            baseline_rate: self.baseline_rate,
            base_mu: self.base_mu.clone(),
            delta,
            rate_design: self.rate_design,
            coefficient_range: self.coefficient_range,
        }
    }

    /// Seeds never depend on `delta`, so cells that differ only in the
    /// separation share coefficients and random streams replication by
    /// replication (common random numbers for paired comparisons).
    fn seeds(&self, cell: &Cell, rep: usize) -> (u64, u64, u64, u64) {
        let kernel = TransferKernel::ALL.iter().position(|k| *k == cell.kernel).unwrap_or(0) as u64;
        let rep = rep as u64;
        let coefficients = if self.freeze_coefficients {
            derive_seed(self.seed, &[TAG_COEFFICIENTS, kernel])
        } else {
            derive_seed(self.seed, &[TAG_COEFFICIENTS, kernel, rep])
        };
        let key = [kernel, cell.n as u64, cell.t.to_bits(), rep];
        let train = derive_seed(self.seed, &[&[TAG_TRAIN][..], &key].concat());
        let test = derive_seed(self.seed, &[&[TAG_TEST][..], &key].concat());
        let kmeans = derive_seed(self.seed, &[&[TAG_KMEANS][..], &key].concat());
        (coefficients, train, test, kmeans)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub kernel: TransferKernel,
    pub n: usize,
    pub t: f64,
    pub delta: f64,
    pub method: Method,
    pub metric: Metric,
    /// Mean over successful replications; empty when all failed.
    pub mean: Option<f64>,
    /// Standard error of the mean; empty with fewer than 2 replications.
    pub se: Option<f64>,
    pub replications: usize,
    pub failures: usize,
}

impl ResultRow {
    pub fn cell(&self) -> Cell {
        Cell {
            kernel: self.kernel,
            n: self.n,
            t: self.t,
            delta: self.delta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateValue {
    pub kernel: TransferKernel,
    pub n: usize,
    pub t: f64,
    pub delta: f64,
    pub method: Method,
    pub metric: Metric,
    pub replication: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub kernel: TransferKernel,
    pub n: usize,
    pub t: f64,
    pub delta: f64,
    pub replication: usize,
    /// Empty when the whole replication failed (e.g. during simulation).
    pub method: Option<Method>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
    pub replicates: Vec<ReplicateValue>,
    pub failures: Vec<FailureRecord>,
}

impl ResultTable {
    pub fn row(&self, cell: &Cell, method: Method, metric: Metric) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.cell() == *cell && r.method == method && r.metric == metric)
    }

    /// Per-replication values of one row as `(replication, value)`.
    pub fn replicate_values(&self, cell: &Cell, method: Method, metric: Metric) -> Vec<(usize, f64)> {
        self.replicates
            .iter()
            .filter(|r| {
                r.kernel == cell.kernel
                    && r.n == cell.n
                    && r.t == cell.t
                    && r.delta == cell.delta
                    && r.method == method
                    && r.metric == metric
            })
            .map(|r| (r.replication, r.value))
            .collect()
    }

    pub fn has_failures(&self) -> bool {
        !self.failures.is_empty()
    }

    /// Human-readable summary, one line per row.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{:<11} {:>5} {:>7} {:>6} {:<14} {:<4} {:>8} {:>8} {:>3}\n",
            "kernel", "n", "T", "delta", "method", "", "mean", "se", "R"
        );
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
        for r in &self.rows {
            out.push_str(&format!(
                "{:<11} {:>5} {:>7} {:>6} {:<14} {:<4} {:>8} {:>8} {:>3}{}\n",
                r.kernel.name(),
                r.n,
                r.t,
                r.delta,
                r.method.name(),
                r.metric.name(),
                fmt(r.mean),
                fmt(r.se),
                r.replications,
                if r.failures > 0 { format!("  ({} failed)", r.failures) } else { String::new() }
            ));
        }
        out
    }
}

/// Mean and standard error of a sample.
pub fn mean_se(values: &[f64]) -> (Option<f64>, Option<f64>) {
    let n = values.len();
    if n == 0 {
        return (None, None);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (Some(mean), None);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (Some(mean), Some((var / n as f64).sqrt()))
}

struct Replicate {
    /// Indexed by `method_index * metrics.len() + metric_index`.
    values: Vec<Option<f64>>,
    failures: Vec<(Option<Method>, String)>,
}

fn run_replication(grid: &ExperimentGrid, embedders: &Embedders, cell: &Cell, rep: usize) -> Replicate {
    let slots = grid.methods.len() * grid.metrics.len();
    let failed = |message: String| Replicate {
        values: vec![None; slots],
        failures: vec![(None, message)],
    };
    let (coef_seed, train_seed, test_seed, kmeans_seed) = grid.seeds(cell, rep);
    let model = match grid.generator(cell.kernel, cell.delta).build(coef_seed) {
        Ok(m) => m,
        Err(e) => return failed(e.to_string()),
    };
    let plan = |n: usize, seed: u64| SimulationPlan {
        model: model.clone(),
        n,
        observation_times: ObservationTimes::Common(cell.t),
        seed,
        stratified: true,
        burn_in: None,
    };
    let want_auc = grid.metrics.contains(&Metric::Auc);
    let train = match simulate_cohort(&plan(cell.n, train_seed)) {
        Ok(d) => d,
        Err(e) => return failed(format!("training cohort: {e}")),
    };
    let test = if want_auc {
        match simulate_cohort(&plan(grid.test_size, test_seed)) {
            Ok(d) => Some(d),
            Err(e) => return failed(format!("test cohort: {e}")),
        }
    } else {
        None
    };
    let positive = |d: &Dataset| -> Vec<bool> {
        d.records
            .iter()
            .map(|r| r.label.as_deref() == Some(model.groups[1].label.as_str()))
            .collect()
    };
    let y_train = positive(&train);

    let mut out = Replicate {
        values: vec![None; slots],
        failures: Vec::new(),
    };
    for (mi, &method) in grid.methods.iter().enumerate() {
        let result = (|| -> Result<Vec<f64>> {
            let features = embedders.features(&train, method)?;
            let mut values = Vec::with_capacity(grid.metrics.len());
            for metric in &grid.metrics {
                values.push(match metric {
                    Metric::Auc => {
                        let test = test.as_ref().expect("test cohort simulated when AUC is requested");
                        let model = train_logistic(&features, &y_train, &grid.logistic)?;
                        let scores = embedders
                            .features(test, method)?
                            .iter()
                            .map(|f| predict_score(&model, f))
                            .collect::<Result<Vec<f64>>>()?;
                        auc(&scores, &positive(test))?
                    }
                    Metric::Ari => {
                        let clusters = kmeans_spectral(&features, 2, kmeans_seed, grid.kmeans_max_iter)?;
                        let truth: Vec<usize> = y_train.iter().map(|&y| y as usize).collect();
                        adjusted_rand_index(&truth, &clusters.assignments)?
                    }
                });
            }
            Ok(values)
        })();
        match result {
            Ok(values) => {
                for (xi, v) in values.into_iter().enumerate() {
                    out.values[mi * grid.metrics.len() + xi] = Some(v);
                }
            }
            Err(e) => out.failures.push((Some(method), e.to_string())),
        }
    }
    out
}

/// Runs every cell of the grid for every method and metric.
///
/// A failing replication is recorded in `failures` and excluded from its
/// rows; the run continues.
pub fn run_grid(grid: &ExperimentGrid) -> Result<ResultTable> {
    grid.validate()?;
    let embedders = Embedders::new(grid.estimator, grid.spectral, grid.pmi)?;
    let cells = grid.cells();
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..grid.replications).map(move |r| (c, r)))
        .collect();
    let total = jobs.len();
    let done = std::sync::atomic::AtomicUsize::new(0);
    let outcomes: Vec<Replicate> = jobs
        .par_iter()
        .map(|&(c, r)| {
            let out = run_replication(grid, &embedders, &cells[c], r);
            let finished = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
            log::info!(
                "{} n={} T={} delta={} replication {r}: done ({finished}/{total})",
                cells[c].kernel,
                cells[c].n,
                cells[c].t,
                cells[c].delta
            );
            out
        })
        .collect();

    let mut table = ResultTable::default();
    for (c, cell) in cells.iter().enumerate() {
        let reps = &outcomes[c * grid.replications..(c + 1) * grid.replications];
        for (r, rep) in reps.iter().enumerate() {
            for (method, message) in &rep.failures {
                log::warn!("{} n={} T={} delta={} replication {r}: {message}", cell.kernel, cell.n, cell.t, cell.delta);
                table.failures.push(FailureRecord {
                    kernel: cell.kernel,
                    n: cell.n,
                    t: cell.t,
                    delta: cell.delta,
                    replication: r,
                    method: *method,
                    message: message.clone(),
                });
            }
        }
        for (mi, &method) in grid.methods.iter().enumerate() {
            for (xi, &metric) in grid.metrics.iter().enumerate() {
                let slot = mi * grid.metrics.len() + xi;
                let mut values = Vec::new();
                for (r, rep) in reps.iter().enumerate() {
                    if let Some(v) = rep.values[slot] {
                        values.push(v);
                        table.replicates.push(ReplicateValue {
                            kernel: cell.kernel,
                            n: cell.n,
                            t: cell.t,
                            delta: cell.delta,
                            method,
                            metric,
                            replication: r,
                            value: v,
                        });
                    }
                }
                let (mean, se) = mean_se(&values);
                table.rows.push(ResultRow {
                    kernel: cell.kernel,
                    n: cell.n,
                    t: cell.t,
                    delta: cell.delta,
                    method,
                    metric,
                    mean,
                    se,
                    replications: values.len(),
                    failures: grid.replications - values.len(),
                });
            }
        }
    }
    Ok(table)
}

/// Test-AUC study: logistic models trained on each method's embeddings.
pub fn run_classification_grid(grid: &ExperimentGrid) -> Result<ResultTable> {
    run_grid(&ExperimentGrid {
        metrics: vec![Metric::Auc],
        ..grid.clone()
    })
}

/// Clustering study: 2-means on each method's training embeddings.
pub fn run_clustering_grid(grid: &ExperimentGrid) -> Result<ResultTable> {
    run_grid(&ExperimentGrid {
        metrics: vec![Metric::Ari],
        ..grid.clone()
    })
}

/// Both metrics for every kernel of `grid` (normally
/// [`transfer_variants_grid`]).
pub fn run_transfer_variants(grid: &ExperimentGrid) -> Result<ResultTable> {
    run_grid(&ExperimentGrid {
        metrics: vec![Metric::Auc, Metric::Ari],
        ..grid.clone()
    })
}

/// Kernel-by-method layout of a table with one (n, T, delta) cell per
/// kernel: `mean (se)` for AUC and ARI.
pub fn kernel_method_summary(table: &ResultTable) -> String {
    let mut kernels: Vec<TransferKernel> = Vec::new();
    let mut methods: Vec<Method> = Vec::new();
    for r in &table.rows {
        if !kernels.contains(&r.kernel) {
            kernels.push(r.kernel);
        }
        if !methods.contains(&r.method) {
            methods.push(r.method);
        }
    }
    let cell_text = |kernel: TransferKernel, method: Method, metric: Metric| {
        table
            .rows
            .iter()
            .find(|r| r.kernel == kernel && r.method == method && r.metric == metric)
            .and_then(|r| r.mean.map(|m| format!("{m:.4} ({:.4})", r.se.unwrap_or(f64::NAN))))
            .unwrap_or_else(|| "-".into())
    };
    let mut out = format!("{:<11} {:<14} {:>17} {:>17}\n", "kernel", "method", "AUC", "ARI");
    for &k in &kernels {
        for &m in &methods {
            out.push_str(&format!(
                "{:<11} {:<14} {:>17} {:>17}\n",
                k.name(),
                m.name(),
                cell_text(k, m, Metric::Auc),
                cell_text(k, m, Metric::Ari)
            ));
        }
    }
    out
}

/// Writes `results.csv`, `replicates.csv`, `failures.csv` and, when `svg` is
/// set, one `figure_<metric>_<kernel>.svg` per metric and kernel. Returns
/// the written paths.
pub fn export_results(table: &ResultTable, dir: &std::path::Path, svg: bool) -> Result<Vec<std::path::PathBuf>> {
    if table.rows.is_empty() {
        return Err(Error::InvalidConfig("result table is empty".into()));
    }
    let mut paths = io::write_result_csvs(table, dir)?;
    if svg {
        let mut figures: Vec<(Metric, TransferKernel)> = Vec::new();
        for r in &table.rows {
            if !figures.contains(&(r.metric, r.kernel)) {
                figures.push((r.metric, r.kernel));
            }
        }
        for (metric, kernel) in figures {
            let path = dir.join(format!("figure_{}_{}.svg", metric.name(), kernel.name()));
            std::fs::write(&path, render_figure(table, metric, kernel))?;
            paths.push(path);
        }
    }
    Ok(paths)
}
