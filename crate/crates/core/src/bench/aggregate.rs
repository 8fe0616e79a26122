//! Cross-dataset summary: mean ALC, average rank, win times and W/T/L.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bench::experiment::ExperimentRecord;
use crate::bench::stats::{paired_t_test, Outcome};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WinTieLoss {
    pub wins: usize,
    pub ties: usize,
    pub losses: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetResult {
    pub dataset: String,
    pub strategy: String,
    pub reps: usize,
    pub mean_alc: f64,
    pub std_alc: f64,
    pub rank: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub strategy: String,
    pub datasets: usize,
    pub mean_alc: f64,
    pub average_rank: f64,
    /// Datasets on which the strategy is best or indistinguishable from the best.
    pub win_times: usize,
    /// Against the reference strategy; `None` for the reference itself.
    pub vs_reference: Option<WinTieLoss>,
    pub errored_cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub alpha: f64,
    pub reference: Option<String>,
    pub datasets: Vec<String>,
    pub strategies: Vec<StrategySummary>,
    pub per_dataset: Vec<DatasetResult>,
}

/// ALC by repetition for one (dataset, strategy), successful cells only.
type AlcByRep = BTreeMap<usize, f64>;

/// Paired comparison over the repetitions both strategies completed.
/// Fewer than two shared repetitions cannot be significant.
fn compare(a: &AlcByRep, b: &AlcByRep, alpha: f64) -> Outcome {
    let (xs, ys): (Vec<f64>, Vec<f64>) = a
        .iter()
        .filter_map(|(r, &x)| b.get(r).map(|&y| (x, y)))
        .unzip();
    paired_t_test(&xs, &ys, alpha).unwrap_or(Outcome::Tie)
}

/// Ranks with 1 for the highest value; tied values share their mean rank.
fn ranks_desc(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = shared;
        }
        i = j + 1;
    }
    ranks
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

pub fn aggregate(records: &[ExperimentRecord], reference: Option<&str>, alpha: f64) -> Summary {
    let mut cells: BTreeMap<&str, BTreeMap<&str, AlcByRep>> = BTreeMap::new();
    let mut errored: BTreeMap<&str, usize> = BTreeMap::new();
    for r in records {
        let per_ds = cells.entry(&r.dataset).or_default();
        let by_rep = per_ds.entry(&r.strategy).or_default();
        *errored.entry(&r.strategy).or_default() += usize::from(!r.ok());
        if r.ok() {
            by_rep.insert(r.repetition, r.alc);
        }
    }
    let strategies: Vec<&str> = errored.keys().copied().collect();

    let mut per_dataset = Vec::new();
    let mut alc_sum: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    let mut rank_sum: BTreeMap<&str, f64> = BTreeMap::new();
    let mut wins: BTreeMap<&str, usize> = BTreeMap::new();
    let mut wtl: BTreeMap<&str, WinTieLoss> = BTreeMap::new();

    for (&ds, per_ds) in &cells {
        let present: Vec<(&str, &AlcByRep)> = per_ds
            .iter()
            .filter(|(_, m)| !m.is_empty())
            .map(|(&s, m)| (s, m))
            .collect();
        if present.is_empty() {
            continue;
        }
        let stats: Vec<(f64, f64)> = present
            .iter()
            .map(|(_, m)| mean_std(&m.values().copied().collect::<Vec<_>>()))
            .collect();
        let means: Vec<f64> = stats.iter().map(|s| s.0).collect();
        let ranks = ranks_desc(&means);
        let best = ranks
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap();

        for (idx, &(s, m)) in present.iter().enumerate() {
            per_dataset.push(DatasetResult {
                dataset: ds.to_string(),
                strategy: s.to_string(),
                reps: m.len(),
                mean_alc: stats[idx].0,
                std_alc: stats[idx].1,
                rank: ranks[idx],
            });
            let e = alc_sum.entry(s).or_default();
            e.0 += stats[idx].0;
            e.1 += 1;
            *rank_sum.entry(s).or_default() += ranks[idx];
            if idx == best
                || ranks[idx] == ranks[best]
                || compare(m, present[best].1, alpha) == Outcome::Tie
            {
                *wins.entry(s).or_default() += 1;
            }
            if let Some(reference) = reference.filter(|&rf| rf != s) {
                if let Some(ref_alc) = per_ds.get(reference).filter(|m| !m.is_empty()) {
                    let t = wtl.entry(s).or_default();
                    match compare(m, ref_alc, alpha) {
                        Outcome::AWins => t.wins += 1,
                        Outcome::Tie => t.ties += 1,
                        Outcome::BWins => t.losses += 1,
                    }
                }
            }
        }
    }

    let summaries = strategies
        .iter()
        .map(|&s| {
            let (sum, count) = alc_sum.get(s).copied().unwrap_or((0.0, 0));
            let denom = count.max(1) as f64;
            StrategySummary {
                strategy: s.to_string(),
                datasets: count,
                mean_alc: if count > 0 { sum / denom } else { f64::NAN },
                average_rank: if count > 0 {
                    rank_sum[s] / denom
                } else {
                    f64::NAN
                },
                win_times: wins.get(s).copied().unwrap_or(0),
                vs_reference: match reference {
                    Some(rf) if rf != s => Some(wtl.get(s).copied().unwrap_or_default()),
                    _ => None,
                },
                errored_cells: errored[s],
            }
        })
        .collect();

    Summary {
        schema_version: SCHEMA_VERSION,
        alpha,
        reference: reference.map(str::to_string),
        datasets: cells.keys().map(|s| s.to_string()).collect(),
        strategies: summaries,
        per_dataset,
    }
}
