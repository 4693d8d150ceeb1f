//! CSV ingestion with equal-width binning of numeric columns.
//!
//! Every column plays one role. Ignored columns are dropped, the rank column
//! and score columns feed the ranking, numeric columns become binned
//! attributes, and everything else is a categorical attribute. A score column
//! stays an attribute only if it is also declared categorical or numeric.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{ranking_from_rank_column, ranking_from_scores, Attribute, Dataset, Direction, Ranking, Schema};
use crate::error::{IngestError, Result};

pub const DEFAULT_BINS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NumericColumn {
    pub name: String,
    #[serde(default)]
    pub bins: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreColumn {
    pub name: String,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    pub categorical: Vec<String>,
    pub numeric: Vec<NumericColumn>,
    pub default_bins: usize,
    pub rank_column: Option<String>,
    pub score_columns: Vec<ScoreColumn>,
    pub ignore: Vec<String>,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            categorical: Vec::new(),
            numeric: Vec::new(),
            default_bins: DEFAULT_BINS,
            rank_column: None,
            score_columns: Vec::new(),
            ignore: Vec::new(),
        }
    }
}

/// Bin edges of one numeric column; `edges.len()` is the bin count plus one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Binning {
    pub column: String,
    pub edges: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub data: Dataset,
    pub ranking: Option<Ranking>,
    pub binnings: Vec<Binning>,
    pub warnings: Vec<String>,
}

impl Ingested {
    pub fn require_ranking(&self) -> Result<&Ranking> {
        self.ranking.as_ref().ok_or_else(|| IngestError::NoRankingColumns.into())
    }
}

/// Equal-width edges over `[min, max]`. A zero-width range yields one bin.
pub fn equal_width_edges(min: f64, max: f64, bins: usize) -> Vec<f64> {
    if max <= min {
        return vec![min, max];
    }
    let width = (max - min) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|i| min + width * i as f64).collect();
    edges.push(max);
    edges
}

/// Index of the bin holding `v`; bins are `[lo, hi)` except the last, which is closed.
pub fn bin_index(edges: &[f64], v: f64) -> usize {
    let bins = edges.len() - 1;
    edges[1..bins].partition_point(|&e| e <= v)
}

fn bin_label(edges: &[f64], i: usize) -> String {
    let close = if i + 2 == edges.len() { ']' } else { ')' };
    format!("[{},{}{close}", edges[i], edges[i + 1])
}

pub fn ingest_csv(path: impl AsRef<Path>, config: &IngestConfig) -> Result<Ingested> {
    let file = std::fs::File::open(path.as_ref()).map_err(IngestError::Io)?;
    ingest_reader(file, config)
}

pub fn ingest_reader<R: Read>(reader: R, config: &IngestConfig) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(IngestError::Csv)?
        .iter()
        .map(str::to_string)
        .collect();
    let mut records = Vec::new();
    for rec in rdr.records() {
        records.push(rec.map_err(IngestError::Csv)?);
    }
    let column = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::MissingColumn(name.to_string()).into())
    };

    let declared = config
        .categorical
        .iter()
        .chain(config.numeric.iter().map(|c| &c.name))
        .chain(config.score_columns.iter().map(|c| &c.name))
        .chain(config.ignore.iter())
        .chain(config.rank_column.iter());
    for name in declared {
        column(name)?;
    }

    let ignored: HashSet<&str> = config.ignore.iter().map(String::as_str).collect();
    let numeric: HashSet<&str> = config.numeric.iter().map(|c| c.name.as_str()).collect();
    let categorical: HashSet<&str> = config.categorical.iter().map(String::as_str).collect();
    let scores: HashSet<&str> = config.score_columns.iter().map(|c| c.name.as_str()).collect();

    let parse_number = |col: usize, row: usize, value: &str| -> Result<f64> {
        value
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|v| !v.is_nan())
            .ok_or_else(|| {
                IngestError::NonNumeric {
                    column: header[col].clone(),
                    row: row + 1,
                    value: value.to_string(),
                }
                .into()
            })
    };

    let mut attributes = Vec::new();
    let mut columns_codes: Vec<Vec<u32>> = Vec::new();
    let mut binnings = Vec::new();
    let mut warnings = Vec::new();
    for (col, name) in header.iter().enumerate() {
        let name_s = name.as_str();
        if ignored.contains(name_s) || config.rank_column.as_deref() == Some(name_s) {
            continue;
        }
        if numeric.contains(name_s) {
            let bins = config
                .numeric
                .iter()
                .find(|c| c.name == *name)
                .and_then(|c| c.bins)
                .unwrap_or(config.default_bins);
            if bins == 0 {
                return Err(IngestError::ZeroBins(name.clone()).into());
            }
            let values: Vec<f64> = records
                .iter()
                .enumerate()
                .map(|(r, rec)| parse_number(col, r, rec.get(col).unwrap_or("")))
                .collect::<Result<_>>()?;
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if min == max {
                warnings.push(format!("column `{name}` is constant; it becomes a single bin"));
            }
            let edges = equal_width_edges(min, max, bins);
            let idx: Vec<usize> = values.iter().map(|&v| bin_index(&edges, v)).collect();
            // empty bins are not part of the active domain
            let mut used = vec![false; edges.len() - 1];
            for &i in &idx {
                used[i] = true;
            }
            let mut code_of = vec![u32::MAX; used.len()];
            let mut domain = Vec::new();
            for (i, _) in used.iter().enumerate().filter(|(_, &u)| u) {
                code_of[i] = domain.len() as u32;
                domain.push(bin_label(&edges, i));
            }
            attributes.push(Attribute::new(name.clone(), domain));
            columns_codes.push(idx.iter().map(|&i| code_of[i]).collect());
            binnings.push(Binning {
                column: name.clone(),
                edges,
            });
        } else if categorical.contains(name_s) || !scores.contains(name_s) {
            let mut domain: Vec<String> = Vec::new();
            let mut lookup = std::collections::HashMap::new();
            let mut codes = Vec::with_capacity(records.len());
            for rec in &records {
                let label = rec.get(col).unwrap_or("").to_string();
                let code = *lookup.entry(label.clone()).or_insert_with(|| {
                    domain.push(label);
                    domain.len() as u32 - 1
                });
                codes.push(code);
            }
            attributes.push(Attribute::new(name.clone(), domain));
            columns_codes.push(codes);
        }
    }
    if attributes.is_empty() {
        return Err(IngestError::NoAttributes.into());
    }
    if records.is_empty() {
        return Err(crate::error::Error::EmptyDataset);
    }
    let rows: Vec<Vec<u32>> = (0..records.len())
        .map(|r| columns_codes.iter().map(|c| c[r]).collect())
        .collect();
    let data = Dataset::new(Schema::new(attributes)?, rows)?;

    let ranking = if let Some(rank) = &config.rank_column {
        let col = column(rank)?;
        let ranks: Vec<u64> = records
            .iter()
            .enumerate()
            .map(|(r, rec)| {
                let v = rec.get(col).unwrap_or("");
                v.trim().parse::<u64>().map_err(|_| {
                    IngestError::BadRank {
                        column: rank.clone(),
                        row: r + 1,
                        value: v.to_string(),
                    }
                    .into()
                })
            })
            .collect::<Result<_>>()?;
        Some(ranking_from_rank_column(&data, &ranks)?)
    } else if !config.score_columns.is_empty() {
        let cols: Vec<usize> = config
            .score_columns
            .iter()
            .map(|c| column(&c.name))
            .collect::<Result<_>>()?;
        let score_rows: Vec<Vec<f64>> = records
            .iter()
            .enumerate()
            .map(|(r, rec)| {
                cols.iter()
                    .map(|&c| parse_number(c, r, rec.get(c).unwrap_or("")))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        let dirs: Vec<Direction> = config.score_columns.iter().map(|c| c.direction).collect();
        Some(ranking_from_scores(&data, &score_rows, &dirs)?)
    } else {
        None
    };

    Ok(Ingested {
        data,
        ranking,
        binnings,
        warnings,
    })
}

/// Writes `data` as CSV with attribute labels, plus a `rank` column when a
/// ranking is given.
pub fn write_csv<W: std::io::Write>(data: &Dataset, ranking: Option<&Ranking>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = data.schema().attributes().iter().map(|a| a.name.clone()).collect();
    if ranking.is_some() {
        header.push("rank".into());
    }
    w.write_record(&header).map_err(IngestError::Csv)?;
    let positions = ranking.map(Ranking::positions);
    for (i, row) in data.rows().enumerate() {
        let mut rec: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(a, &c)| data.schema().attributes()[a].domain[c as usize].clone())
            .collect();
        if let Some(pos) = &positions {
            rec.push(pos[i].to_string());
        }
        w.write_record(&rec).map_err(IngestError::Csv)?;
    }
    w.flush().map_err(IngestError::Io)?;
    Ok(())
}
