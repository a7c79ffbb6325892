//! k-fold cross validation over a raw table.
//!
//! Per fold, the quantizer is fitted on the training rows only and applied to
//! every row; one-hot encoding is then fitted on the whole quantized table so
//! that all folds share one feature space.

use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;

use crate::dataset::{kfold_split, BinDataset, DatasetError, OneHotEncoder, Quantizer, RawDataset};
use crate::maxsat::MaxSatSolver;
use crate::metrics::{accuracy, average_explanation_dl, decimal};
use crate::trainer::{train, Mode, OrderingStrategy};

#[derive(Debug, Clone)]
pub struct CvConfig {
    pub folds: usize,
    pub seed: u64,
    /// Equal-width bins for numeric columns; `None` keeps values as categories.
    pub intervals: Option<usize>,
    pub mode: Mode,
    pub strategy: OrderingStrategy,
    /// Folds trained concurrently.
    pub jobs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldMetrics {
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub size: usize,
    pub rules: usize,
    /// Average explanation size on the test rows.
    pub explanation: f64,
    pub optimal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldResult {
    pub fold: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    #[serde(flatten)]
    pub metrics: Option<FoldMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl Summary {
    fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(Summary { mean, std: var.sqrt() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvReport {
    pub folds: Vec<FoldResult>,
    /// True when at least one fold failed; aggregates cover the rest.
    pub partial: bool,
    pub majority_baseline: f64,
    pub test_accuracy: Option<Summary>,
    pub train_accuracy: Option<Summary>,
    pub size: Option<Summary>,
    pub explanation: Option<Summary>,
}

/// Splits, encodes and trains every fold.
pub fn cross_validate(
    raw: &RawDataset,
    cfg: &CvConfig,
    solver: &dyn MaxSatSolver,
) -> Result<CvReport, DatasetError> {
    let split = kfold_split(raw.rows(), cfg.folds, cfg.seed)?;
    let prepared: Vec<(BinDataset, BinDataset)> = (0..cfg.folds)
        .map(|f| {
            let (train_rows, test_rows) = split.fold(f);
            let table = match cfg.intervals {
                Some(k) => Quantizer::fit(&raw.select_rows(&train_rows), k)?.apply(raw)?,
                None => raw.clone(),
            };
            let full = OneHotEncoder::fit(&table)?.transform(&table)?;
            Ok((full.subset(&train_rows), full.subset(&test_rows)))
        })
        .collect::<Result<_, DatasetError>>()?;

    let results: Mutex<Vec<Option<FoldResult>>> = Mutex::new(vec![None; cfg.folds]);
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..cfg.jobs.clamp(1, cfg.folds) {
            scope.spawn(|| loop {
                let f = next.fetch_add(1, Ordering::Relaxed);
                if f >= cfg.folds {
                    break;
                }
                let (train_ds, test_ds) = &prepared[f];
                let result = run_fold(f, train_ds, test_ds, cfg, solver);
                results.lock().expect("fold results")[f] = Some(result);
            });
        }
    });
    let folds: Vec<FoldResult> = results
        .into_inner()
        .expect("fold results")
        .into_iter()
        .map(|r| r.expect("every fold ran"))
        .collect();

    let ok: Vec<&FoldMetrics> = folds.iter().filter_map(|f| f.metrics.as_ref()).collect();
    let pick = |g: fn(&FoldMetrics) -> f64| Summary::of(&ok.iter().map(|m| g(m)).collect::<Vec<_>>());
    let (first_train, first_test) = &prepared[0];
    let mut counts = vec![0usize; first_train.class_count()];
    for inst in first_train.instances.iter().chain(&first_test.instances) {
        counts[inst.class_id] += 1;
    }
    Ok(CvReport {
        partial: ok.len() < folds.len(),
        majority_baseline: *counts.iter().max().unwrap_or(&0) as f64 / raw.rows() as f64,
        test_accuracy: pick(|m| m.test_accuracy),
        train_accuracy: pick(|m| m.train_accuracy),
        size: pick(|m| m.size as f64),
        explanation: pick(|m| m.explanation),
        folds,
    })
}

fn run_fold(
    fold: usize,
    train_ds: &BinDataset,
    test_ds: &BinDataset,
    cfg: &CvConfig,
    solver: &dyn MaxSatSolver,
) -> FoldResult {
    let metrics = (|| -> Result<FoldMetrics, String> {
        let outcome = train(train_ds, &cfg.mode, &cfg.strategy, solver).map_err(|e| e.to_string())?;
        let list = outcome.list;
        let explanation = average_explanation_dl(&list, test_ds).map_err(|e| e.to_string())?;
        Ok(FoldMetrics {
            train_accuracy: accuracy(&list, train_ds).map_err(|e| e.to_string())?,
            test_accuracy: accuracy(&list, test_ds).map_err(|e| e.to_string())?,
            size: list.size(),
            rules: list.rules.len(),
            explanation: decimal(explanation).parse().expect("decimal"),
            optimal: outcome.optimal,
        })
    })();
    FoldResult {
        fold: fold + 1,
        train_rows: train_ds.len(),
        test_rows: test_ds.len(),
        error: metrics.as_ref().err().cloned(),
        metrics: metrics.ok(),
    }
}

fn cell(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.4}")).unwrap_or_default()
}

impl CvReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per fold, then `mean` and `std` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "fold,train_rows,test_rows,train_accuracy,test_accuracy,size,rules,explanation,optimal,error\n",
        );
        for f in &self.folds {
            let m = f.metrics.as_ref();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                f.fold,
                f.train_rows,
                f.test_rows,
                cell(m.map(|m| m.train_accuracy)),
                cell(m.map(|m| m.test_accuracy)),
                m.map(|m| m.size.to_string()).unwrap_or_default(),
                m.map(|m| m.rules.to_string()).unwrap_or_default(),
                cell(m.map(|m| m.explanation)),
                m.map(|m| m.optimal.to_string()).unwrap_or_default(),
                f.error.as_deref().unwrap_or("").replace([',', '\n'], ";"),
            );
        }
        for (label, get) in [("mean", (|s: Summary| s.mean) as fn(Summary) -> f64), ("std", |s: Summary| s.std)] {
            let _ = writeln!(
                out,
                "{label},,,{},{},{},,{},,{}",
                cell(self.train_accuracy.map(get)),
                cell(self.test_accuracy.map(get)),
                cell(self.size.map(get)),
                cell(self.explanation.map(get)),
                if self.partial { "partial" } else { "" },
            );
        }
        out
    }
}
