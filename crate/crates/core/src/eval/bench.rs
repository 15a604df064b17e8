//! Baseline-vs-transformed benchmark over a fold plan.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::eval::folds::{make_fold_plan, Fold};
use crate::eval::linear::{fit_model, LinearModel, ModelKind};
use crate::eval::metrics::{rse, smape};
use crate::stats::{mean, sample_std};
use crate::transform::{
    deflation_from_dataset, fit, side_for, DeflationIndex, FittedTransform, TransformKind,
};

/// Environment variable capping the benchmark thread pool.
pub const THREADS_ENV: &str = "YTX_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub name: String,
    pub models: Vec<ModelKind>,
    pub transforms: Vec<TransformKind>,
    pub alpha: f64,
    pub seed: u64,
    /// Worker threads; `None` reads `YTX_THREADS`, then uses every core.
    pub threads: Option<usize>,
    /// Price series for the deflate transform. Defaults to the dataset's own
    /// time and price index columns.
    pub deflation: Option<DeflationIndex>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            name: "dataset".into(),
            models: vec![ModelKind::Ridge],
            transforms: vec![TransformKind::Identity],
            alpha: 1.0,
            seed: 42,
            threads: None,
            deflation: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub mean: f64,
    /// Sample standard deviation over the folds.
    pub std: f64,
    pub folds: Vec<f64>,
}

impl CellStats {
    pub fn from_folds(folds: Vec<f64>) -> Self {
        Self {
            mean: mean(&folds),
            std: sample_std(&folds),
            folds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkCell {
    pub model: ModelKind,
    pub transform: TransformKind,
    pub rse: CellStats,
    pub smape: CellStats,
    /// Test predictions clamped on inversion, summed over folds.
    pub clamped: usize,
    pub non_converged_folds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub dataset: String,
    pub n: usize,
    pub seed: u64,
    pub alpha: f64,
    pub models: Vec<ModelKind>,
    pub transforms: Vec<TransformKind>,
    pub cells: Vec<BenchmarkCell>,
    pub warnings: Vec<String>,
}

impl BenchmarkReport {
    pub fn cell(&self, model: ModelKind, transform: TransformKind) -> Option<&BenchmarkCell> {
        self.cells
            .iter()
            .find(|c| c.model == model && c.transform == transform)
    }
}

/// A transform and model trained on one fold's training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldFit {
    pub transform: FittedTransform,
    pub model: LinearModel,
}

/// Fits the transform on the fold's training targets, then the model on the
/// transformed targets. Nothing from the test rows is read.
pub fn fit_fold(
    ds: &Dataset,
    fold: &Fold,
    model: ModelKind,
    kind: TransformKind,
    alpha: f64,
    deflation: Option<&DeflationIndex>,
) -> Result<FoldFit> {
    let train = ds.select_rows(&fold.train);
    let side = side_for(&train, kind)?;
    let transform = fit(kind, train.target(), side, deflation)?;
    let z = transform.forward(train.target(), side)?;
    let model = fit_model(model, train.features(), &z, alpha)?;
    Ok(FoldFit { transform, model })
}

struct Outcome {
    rse: f64,
    smape: f64,
    clamped: usize,
    converged: bool,
}

fn evaluate(
    ds: &Dataset,
    fold: &Fold,
    model: ModelKind,
    kind: TransformKind,
    alpha: f64,
    deflation: Option<&DeflationIndex>,
) -> Result<Outcome> {
    let fitted = fit_fold(ds, fold, model, kind, alpha, deflation)?;
    let test = ds.select_rows(&fold.test);
    let z = fitted.model.predict(test.features());
    let inv = fitted
        .transform
        .inverse_clamped(&z, side_for(&test, kind)?)?;
    Ok(Outcome {
        rse: rse(test.target(), &inv.values)?,
        smape: smape(test.target(), &inv.values)?,
        clamped: inv.clamped,
        converged: fitted.model.converged,
    })
}

fn thread_count(requested: Option<usize>) -> Result<usize> {
    if let Some(n) = requested {
        return Ok(n);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| {
            Error::Config(format!("{THREADS_ENV} must be a thread count, got \"{v}\""))
        }),
        Err(_) => Ok(0),
    }
}

fn dedup<T: PartialEq + Copy>(items: impl IntoIterator<Item = T>) -> Vec<T> {
    let mut out = Vec::new();
    for item in items {
        if !out.contains(&item) {
            out.push(item);
        }
    }
    out
}

/// Scores every (model, transform) pair on the ten folds of the plan seeded by
/// `config.seed`. The identity baseline is always included, first.
pub fn run_benchmark(ds: &Dataset, config: &BenchmarkConfig) -> Result<BenchmarkReport> {
    let models = dedup(config.models.iter().copied());
    if models.is_empty() {
        return Err(Error::Config("no model requested".into()));
    }
    if let Some(m) = models.iter().find(|m| !m.is_trainable()) {
        return Err(Error::Config(format!(
            "model {m} is reserved for external results and cannot be trained here"
        )));
    }
    let transforms =
        dedup(std::iter::once(TransformKind::Identity).chain(config.transforms.iter().copied()));
    let deflation = match (
        &config.deflation,
        transforms.contains(&TransformKind::Deflate),
    ) {
        (Some(d), _) => Some(d.clone()),
        (None, true) => Some(deflation_from_dataset(ds, None)?),
        (None, false) => None,
    };
    let plan = make_fold_plan(ds.n(), config.seed)?;

    let mut tasks = Vec::new();
    for (mi, _) in models.iter().enumerate() {
        for (ti, _) in transforms.iter().enumerate() {
            for (fi, _) in plan.folds.iter().enumerate() {
                tasks.push((mi, ti, fi));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count(config.threads)?)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let outcomes: Vec<Outcome> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(mi, ti, fi)| {
                evaluate(
                    ds,
                    &plan.folds[fi],
                    models[mi],
                    transforms[ti],
                    config.alpha,
                    deflation.as_ref(),
                )
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let folds = plan.folds.len();
    let mut cells = Vec::new();
    let mut warnings = Vec::new();
    for (chunk, &(mi, ti, _)) in outcomes.chunks(folds).zip(tasks.iter().step_by(folds)) {
        let (model, transform) = (models[mi], transforms[ti]);
        let clamped = chunk.iter().map(|o| o.clamped).sum();
        let non_converged_folds = chunk.iter().filter(|o| !o.converged).count();
        if non_converged_folds > 0 {
            warnings.push(format!(
                "{model}/{transform}: solver did not converge on {non_converged_folds} of {folds} folds"
            ));
        }
        if clamped > 0 {
            warnings.push(format!(
                "{model}/{transform}: {clamped} test predictions clamped on inversion"
            ));
        }
        cells.push(BenchmarkCell {
            model,
            transform,
            rse: CellStats::from_folds(chunk.iter().map(|o| o.rse).collect()),
            smape: CellStats::from_folds(chunk.iter().map(|o| o.smape).collect()),
            clamped,
            non_converged_folds,
        });
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(BenchmarkReport {
        dataset: config.name.clone(),
        n: ds.n(),
        seed: config.seed,
        alpha: config.alpha,
        models,
        transforms,
        cells,
        warnings,
    })
}
