//! JSON audit reports.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::bounds::{BoundMode, BoundsSpec};
use crate::data::{Dataset, Pattern, Ranking, RankingSource};
use crate::error::{Error, Result};
use crate::lattice::CountCache;
use crate::search::{ResultSet, StepStats};

/// Order of patterns within one k.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SortOrder {
    /// Canonical pattern key.
    #[default]
    Canonical,
    /// Largest groups first.
    Size,
    /// Largest shortfall below the bound first.
    Deficit,
}

impl std::str::FromStr for SortOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "canonical" => Ok(SortOrder::Canonical),
            "size" => Ok(SortOrder::Size),
            "deficit" => Ok(SortOrder::Deficit),
            other => Err(Error::Parameter(format!("unknown sort order `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub attribute: String,
    pub label: String,
    pub attribute_index: usize,
    pub code: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportedPattern {
    pub assignments: Vec<Assignment>,
    #[serde(rename = "size_in_D")]
    pub size_in_d: u64,
    pub topk_count: u64,
    /// The count the pattern would need to meet the bound at this k.
    pub required: f64,
}

impl ReportedPattern {
    pub fn pattern(&self) -> Result<Pattern> {
        Pattern::new(self.assignments.iter().map(|a| (a.attribute_index, a.code)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KEntry {
    pub k: usize,
    /// `L_k` in global mode; absent in proportional mode, where each pattern
    /// carries its own `required` value.
    pub bound: Option<u64>,
    pub patterns: Vec<ReportedPattern>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecSummary {
    pub size_threshold: u64,
    pub k_min: usize,
    pub k_max: usize,
    /// `(from_k, L)` steps, global mode only.
    pub bounds: Option<Vec<(usize, u64)>>,
    /// Exact fraction `num/den`, proportional mode only.
    pub alpha: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSummary {
    pub name: String,
    pub domain: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n_rows: usize,
    pub attributes: Vec<AttributeSummary>,
    pub ranking_source: RankingSource,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KStats {
    pub k: usize,
    pub generated: u64,
    pub evaluated: u64,
    pub reevaluated: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportStats {
    pub per_k: Vec<KStats>,
    pub total_generated: u64,
    pub total_evaluated: u64,
    pub total_reevaluated: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub mode: String,
    pub spec: SpecSummary,
    pub dataset_summary: DatasetSummary,
    pub per_k: Vec<KEntry>,
    pub stats: ReportStats,
}

impl AuditReport {
    pub fn build(data: &Dataset, ranking: &Ranking, spec: &BoundsSpec, result: &ResultSet, sort: SortOrder) -> Self {
        let n = data.n_rows();
        let mut cache = CountCache::new();
        let attrs = data.schema().attributes();
        let per_k = result
            .per_k
            .iter()
            .map(|(&k, patterns)| {
                let mut reported: Vec<ReportedPattern> = patterns
                    .iter()
                    .map(|p| {
                        let size = cache.pattern_size(p, data);
                        let count = cache.topk_count(p, data, ranking, k);
                        ReportedPattern {
                            assignments: p
                                .iter()
                                .map(|(a, c)| Assignment {
                                    attribute: attrs[a].name.clone(),
                                    label: attrs[a].domain[c as usize].clone(),
                                    attribute_index: a,
                                    code: c,
                                })
                                .collect(),
                            size_in_d: size,
                            topk_count: count,
                            required: spec.required(size, k, n),
                        }
                    })
                    .collect();
                // canonical order is the iteration order of the set; sorts are stable
                match sort {
                    SortOrder::Canonical => {}
                    SortOrder::Size => reported.sort_by_key(|p| std::cmp::Reverse(p.size_in_d)),
                    SortOrder::Deficit => reported.sort_by(|a, b| {
                        let da = a.required - a.topk_count as f64;
                        let db = b.required - b.topk_count as f64;
                        db.total_cmp(&da)
                    }),
                }
                KEntry {
                    k,
                    bound: spec.schedule().and_then(|s| s.get(k)),
                    patterns: reported,
                }
            })
            .collect();

        let stat = |k: usize, s: &StepStats| KStats {
            k,
            generated: s.generated,
            evaluated: s.evaluated,
            reevaluated: s.reevaluated,
        };
        let totals = result.totals();
        AuditReport {
            mode: match spec.mode {
                BoundMode::Global(_) => "global".into(),
                BoundMode::Proportional(_) => "proportional".into(),
            },
            spec: SpecSummary {
                size_threshold: spec.size_threshold,
                k_min: spec.k_min,
                k_max: spec.k_max,
                bounds: spec.schedule().map(|s| s.steps()),
                alpha: spec.alpha().map(|a| a.to_string()),
            },
            dataset_summary: DatasetSummary {
                n_rows: n,
                attributes: attrs
                    .iter()
                    .map(|a| AttributeSummary {
                        name: a.name.clone(),
                        domain: a.domain.clone(),
                    })
                    .collect(),
                ranking_source: ranking.source(),
            },
            per_k,
            stats: ReportStats {
                per_k: result.stats.iter().map(|(&k, s)| stat(k, s)).collect(),
                total_generated: totals.generated,
                total_evaluated: totals.evaluated,
                total_reevaluated: totals.reevaluated,
            },
        }
    }

    /// The patterns and counters this report was built from.
    pub fn to_result_set(&self) -> Result<ResultSet> {
        let mut out = ResultSet::default();
        for entry in &self.per_k {
            let set = entry
                .patterns
                .iter()
                .map(ReportedPattern::pattern)
                .collect::<Result<BTreeSet<_>>>()?;
            out.per_k.insert(entry.k, set);
        }
        for s in &self.stats.per_k {
            out.stats.insert(
                s.k,
                StepStats {
                    generated: s.generated,
                    evaluated: s.evaluated,
                    reevaluated: s.reevaluated,
                    elapsed: Default::default(),
                },
            );
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is always serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parameter(format!("malformed report: {e}")))
    }
}
