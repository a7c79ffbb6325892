//! Accuracy, literal size, sparse objective and explanation size.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_rational::Ratio;
use serde::Serialize;
use thiserror::Error;

use crate::dataset::BinDataset;
use crate::model::{DecisionList, DecisionSet, ModelError};

pub type Size = Ratio<u64>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("accuracy of an empty dataset is undefined")]
    EmptyDataset,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Anything that maps a feature vector to a class or abstains.
pub trait Classifier {
    fn classify(&self, features: &[bool]) -> Result<Option<usize>, ModelError>;
}

impl Classifier for DecisionList {
    fn classify(&self, features: &[bool]) -> Result<Option<usize>, ModelError> {
        Ok(self.predict(features)?.map(|(c, _)| c))
    }
}

impl Classifier for DecisionSet {
    fn classify(&self, features: &[bool]) -> Result<Option<usize>, ModelError> {
        self.predict(features)
    }
}

/// Number of instances classified correctly; abstentions count as wrong.
pub fn correct_count<C: Classifier>(model: &C, ds: &BinDataset) -> Result<usize, MetricsError> {
    let mut correct = 0;
    for inst in &ds.instances {
        if model.classify(&inst.features)? == Some(inst.class_id) {
            correct += 1;
        }
    }
    Ok(correct)
}

pub fn accuracy<C: Classifier>(model: &C, ds: &BinDataset) -> Result<f64, MetricsError> {
    if ds.is_empty() {
        return Err(MetricsError::EmptyDataset);
    }
    Ok(correct_count(model, ds)? as f64 / ds.len() as f64)
}

/// Literal size: antecedent literals plus one per rule.
pub fn model_size(dl: &DecisionList) -> usize {
    dl.size()
}

/// Literals read to justify the prediction: every antecedent up to and
/// including the firing rule, plus one for the class. Without a firing rule
/// the whole list is needed.
pub fn explain_dl(dl: &DecisionList, features: &[bool]) -> Result<Size, ModelError> {
    Ok(Ratio::from_integer(match dl.predict(features)? {
        Some((_, j)) => dl.rules[..=j].iter().map(|r| r.antecedent.len()).sum::<usize>() as u64 + 1,
        None => dl.size() as u64,
    }))
}

/// Firing rules grouped by class; each group contributes the mean size of
/// its rules. Without a firing rule the whole set is needed.
pub fn explain_ds(ds: &DecisionSet, features: &[bool]) -> Result<Size, ModelError> {
    let firing = ds.firing(features)?;
    if firing.is_empty() {
        return Ok(Ratio::from_integer(ds.size() as u64));
    }
    let mut groups: BTreeMap<usize, (u64, u64)> = BTreeMap::new();
    for k in firing {
        let rule = &ds.rules[k];
        let entry = groups.entry(rule.class).or_default();
        entry.0 += rule.size() as u64;
        entry.1 += 1;
    }
    Ok(groups
        .values()
        .map(|&(total, count)| Ratio::new(total, count))
        .sum())
}

fn mean(values: &[Size]) -> Option<Size> {
    if values.is_empty() {
        return None;
    }
    Some(values.iter().copied().sum::<Size>() / values.len() as u64)
}

pub fn average_explanation_dl(dl: &DecisionList, ds: &BinDataset) -> Result<Size, MetricsError> {
    let sizes = ds
        .instances
        .iter()
        .map(|i| explain_dl(dl, &i.features))
        .collect::<Result<Vec<_>, _>>()?;
    mean(&sizes).ok_or(MetricsError::EmptyDataset)
}

pub fn average_explanation_ds(set: &DecisionSet, ds: &BinDataset) -> Result<Size, MetricsError> {
    let sizes = ds
        .instances
        .iter()
        .map(|i| explain_ds(set, &i.features))
        .collect::<Result<Vec<_>, _>>()?;
    mean(&sizes).ok_or(MetricsError::EmptyDataset)
}

/// Breakdown of the sparse objective for a list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SparseObjective {
    /// Misclassified plus unclassified instances.
    pub errors: u64,
    /// `big_lambda` times the used nodes.
    pub node_cost: u64,
    /// The constant `N * big_lambda` that the solver does not see.
    pub offset: u64,
    /// `errors + node_cost + offset`.
    pub total: u64,
}

impl SparseObjective {
    /// What the MaxSAT solver minimizes.
    pub fn solver_cost(&self) -> u64 {
        self.errors + self.node_cost
    }
}

pub fn sparse_objective(
    dl: &DecisionList,
    ds: &BinDataset,
    big_lambda: u64,
    nodes: usize,
) -> Result<SparseObjective, ModelError> {
    let mut errors = 0u64;
    for inst in &ds.instances {
        if dl.classify(&inst.features)? != Some(inst.class_id) {
            errors += 1;
        }
    }
    let node_cost = big_lambda * dl.size() as u64;
    let offset = big_lambda * nodes as u64;
    Ok(SparseObjective {
        errors,
        node_cost,
        offset,
        total: errors + node_cost + offset,
    })
}

/// Renders a rational as a decimal with four places.
pub fn decimal(r: Size) -> String {
    format!("{:.4}", *r.numer() as f64 / *r.denom() as f64)
}

/// One row of a per-instance report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceRow {
    pub instance: usize,
    pub expected: String,
    pub predicted: Option<String>,
    pub rule: Option<usize>,
    pub explanation: String,
}

/// Summary of a list against a dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub instances: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub size: usize,
    pub rules: usize,
    pub average_explanation: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub per_instance: Vec<InstanceRow>,
}

pub fn evaluate(dl: &DecisionList, ds: &BinDataset, per_instance: bool) -> Result<Evaluation, MetricsError> {
    let correct = correct_count(dl, ds)?;
    let avg = average_explanation_dl(dl, ds)?;
    let mut rows = Vec::new();
    if per_instance {
        for (i, inst) in ds.instances.iter().enumerate() {
            let hit = dl.predict(&inst.features)?;
            rows.push(InstanceRow {
                instance: i + 1,
                expected: ds.class_names[inst.class_id].clone(),
                predicted: hit.map(|(c, _)| dl.schema.class_names[c].clone()),
                rule: hit.map(|(_, k)| k + 1),
                explanation: decimal(explain_dl(dl, &inst.features)?),
            });
        }
    }
    Ok(Evaluation {
        instances: ds.len(),
        correct,
        accuracy: correct as f64 / ds.len() as f64,
        size: dl.size(),
        rules: dl.rules.len(),
        average_explanation: decimal(avg),
        per_instance: rows,
    })
}

impl Evaluation {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("evaluation serializes")
    }

    /// `key,value` summary lines, then the per-instance table if present.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "metric,value");
        let _ = writeln!(out, "instances,{}", self.instances);
        let _ = writeln!(out, "correct,{}", self.correct);
        let _ = writeln!(out, "accuracy,{:.4}", self.accuracy);
        let _ = writeln!(out, "size,{}", self.size);
        let _ = writeln!(out, "rules,{}", self.rules);
        let _ = writeln!(out, "average_explanation,{}", self.average_explanation);
        if !self.per_instance.is_empty() {
            let _ = writeln!(out, "\ninstance,expected,predicted,rule,explanation");
            for r in &self.per_instance {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    r.instance,
                    r.expected,
                    r.predicted.as_deref().unwrap_or(""),
                    r.rule.map(|k| k.to_string()).unwrap_or_default(),
                    r.explanation
                );
            }
        }
        out
    }
}
