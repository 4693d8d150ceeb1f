//! Explaining a detected group through a surrogate of the ranking.
//!
//! A regression model is trained to predict each row's rank position. The
//! Shapley values of its prediction are averaged over the group's rows, and
//! the attributes with the largest averages are compared between the group
//! and the top-k. Lower predicted positions are better, so a negative value
//! pushes a row towards the top.

pub mod shapley;
pub mod surrogate;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Pattern, Ranking};
use crate::error::{Error, Result};

pub use shapley::{shapley_values, shapley_values_on_stream, Background, BackgroundInfo, ShapleyMode};
pub use surrogate::{fit_surrogate, Hyperparams, SurrogateKind, SurrogateModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplainConfig {
    pub mode: ShapleyMode,
    pub background_rows: usize,
    pub seed: u64,
    /// Number of attributes that receive histograms.
    pub top_m: usize,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        ExplainConfig {
            mode: ShapleyMode::Exact,
            background_rows: 512,
            seed: 0,
            top_m: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueSummary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub std_dev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeShapley {
    pub attribute: String,
    pub index: usize,
    pub aggregated_value: f64,
    pub per_tuple: ValueSummary,
}

/// Proportions of each category among the group's rows and among the top-k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub attribute: String,
    pub labels: Vec<String>,
    pub group: Vec<f64>,
    pub topk: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TupleShapley {
    pub row: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyReport {
    pub group: Pattern,
    pub group_label: String,
    pub k: usize,
    pub group_size: usize,
    /// What the surrogate predicts; positions are 1 for the best row.
    pub target: String,
    pub mode: ShapleyMode,
    pub background: BackgroundInfo,
    /// Every attribute once, by decreasing magnitude of `aggregated_value`.
    pub per_attribute: Vec<AttributeShapley>,
    pub histograms: Vec<Histogram>,
    pub tuples: Vec<TupleShapley>,
}

impl ShapleyReport {
    pub fn aggregated(&self, attribute: &str) -> Option<f64> {
        self.per_attribute
            .iter()
            .find(|a| a.attribute == attribute)
            .map(|a| a.aggregated_value)
    }
}

fn proportions(data: &Dataset, rows: impl Iterator<Item = usize>, attribute: usize) -> Vec<f64> {
    let mut counts = vec![0usize; data.schema().attributes()[attribute].domain_size()];
    let mut total = 0usize;
    for r in rows {
        counts[data.row(r)[attribute] as usize] += 1;
        total += 1;
    }
    counts.iter().map(|&c| c as f64 / total.max(1) as f64).collect()
}

/// Shapley values of every member of `group`, their mean per attribute, and
/// group-versus-top-k value distributions for the most influential attributes.
pub fn explain_group(
    data: &Dataset,
    ranking: &Ranking,
    model: &SurrogateModel,
    group: &Pattern,
    k: usize,
    config: &ExplainConfig,
) -> Result<ShapleyReport> {
    data.schema().check_pattern(group)?;
    if k == 0 || k > data.n_rows() || ranking.len() != data.n_rows() {
        return Err(Error::Parameter(format!("k = {k} is outside 1..={}", data.n_rows())));
    }
    let members: Vec<usize> = (0..data.n_rows()).filter(|&i| group.matches(data.row(i))).collect();
    if members.is_empty() {
        return Err(Error::EmptyGroup);
    }
    let background = Background::from_dataset(data, config.background_rows, config.seed)?;
    let tuples: Vec<TupleShapley> = members
        .par_iter()
        .map(|&row| {
            shapley_values_on_stream(model, data.row(row), &background, config.mode, row as u64)
                .map(|values| TupleShapley { row, values })
        })
        .collect::<Result<_>>()?;

    let m = data.n_attributes();
    let g = tuples.len() as f64;
    let mut per_attribute: Vec<AttributeShapley> = (0..m)
        .map(|a| {
            let vals = tuples.iter().map(|t| t.values[a]);
            let mean = vals.clone().sum::<f64>() / g;
            let var = vals.clone().map(|v| (v - mean).powi(2)).sum::<f64>() / g;
            AttributeShapley {
                attribute: data.schema().attributes()[a].name.clone(),
                index: a,
                aggregated_value: mean,
                per_tuple: ValueSummary {
                    mean,
                    min: vals.clone().fold(f64::INFINITY, f64::min),
                    max: vals.fold(f64::NEG_INFINITY, f64::max),
                    std_dev: var.sqrt(),
                },
            }
        })
        .collect();
    per_attribute.sort_by(|x, y| {
        y.aggregated_value
            .abs()
            .total_cmp(&x.aggregated_value.abs())
            .then(x.index.cmp(&y.index))
    });

    let histograms = per_attribute
        .iter()
        .take(config.top_m)
        .map(|a| Histogram {
            attribute: a.attribute.clone(),
            labels: data.schema().attributes()[a.index].domain.clone(),
            group: proportions(data, members.iter().copied(), a.index),
            topk: proportions(data, ranking.prefix(k).iter().copied(), a.index),
        })
        .collect();

    Ok(ShapleyReport {
        group: group.clone(),
        group_label: data.describe(group),
        k,
        group_size: members.len(),
        target: "rank-position".into(),
        mode: config.mode,
        background: background.info().clone(),
        per_attribute,
        histograms,
        tuples,
    })
}

/// Histogram rows as `attribute,value_label,group_proportion,topk_proportion`.
pub fn write_histograms<W: std::io::Write>(report: &ShapleyReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Ingest(e.into());
    w.write_record(["attribute", "value_label", "group_proportion", "topk_proportion"])
        .map_err(io)?;
    for h in &report.histograms {
        for (i, label) in h.labels.iter().enumerate() {
            w.write_record([
                h.attribute.as_str(),
                label.as_str(),
                &h.group[i].to_string(),
                &h.topk[i].to_string(),
            ])
            .map_err(io)?;
        }
    }
    w.flush().map_err(|e| Error::Ingest(e.into()))?;
    Ok(())
}
