use serde::{Deserialize, Serialize};

use super::stats;
use super::ExperimentReport;
use crate::error::{Error, Result};
use crate::graph::{CentralityMeasure, CentralityScores, CommunityPartition, NodeId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralityRow {
    pub node: NodeId,
    /// One score per measure, in the table's measure order.
    pub scores: Vec<f64>,
    pub mean_sick_days: f64,
    pub p_infected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TercileRow {
    pub measure: CentralityMeasure,
    /// 0 = bottom, 1 = middle, 2 = top.
    pub tercile: usize,
    pub nodes: Vec<NodeId>,
    pub mean_sick_days: f64,
    pub mean_p_infected: f64,
}

impl TercileRow {
    pub fn label(&self) -> &'static str {
        ["bottom", "middle", "top"][self.tercile]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralityTable {
    pub measures: Vec<CentralityMeasure>,
    pub rows: Vec<CentralityRow>,
    pub terciles: Vec<TercileRow>,
    /// Spearman correlation of each measure with mean sick days.
    pub spearman_sick_days: Vec<Option<f64>>,
}

/// Splits nodes into thirds by ascending score; ties go by node index.
/// Tercile `t` holds ranks `t * n / 3 .. (t + 1) * n / 3`.
pub fn terciles(scores: &[f64]) -> [Vec<NodeId>; 3] {
    let n = scores.len();
    let mut order: Vec<NodeId> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    [0, 1, 2].map(|t| order[t * n / 3..(t + 1) * n / 3].to_vec())
}

pub fn burden_by_centrality(report: &ExperimentReport, scores: &[CentralityScores]) -> Result<CentralityTable> {
    let n = report.num_nodes;
    if let Some(bad) = scores.iter().find(|s| s.scores.len() != n) {
        return Err(Error::InvalidParameter(format!(
            "{} scores cover {} nodes, report has {n}",
            bad.measure.name(),
            bad.scores.len()
        )));
    }
    let rows = (0..n)
        .map(|v| CentralityRow {
            node: v,
            scores: scores.iter().map(|s| s.scores[v]).collect(),
            mean_sick_days: report.node_mean_sick_days[v],
            p_infected: report.node_p_infected[v],
        })
        .collect();
    let mut tercile_rows = Vec::new();
    for s in scores {
        for (t, nodes) in terciles(&s.scores).into_iter().enumerate() {
            let pick = |values: &[f64]| stats::mean(&nodes.iter().map(|&v| values[v]).collect::<Vec<_>>());
            tercile_rows.push(TercileRow {
                measure: s.measure,
                tercile: t,
                mean_sick_days: pick(&report.node_mean_sick_days),
                mean_p_infected: pick(&report.node_p_infected),
                nodes,
            });
        }
    }
    Ok(CentralityTable {
        measures: scores.iter().map(|s| s.measure).collect(),
        rows,
        terciles: tercile_rows,
        spearman_sick_days: scores.iter().map(|s| stats::spearman(&s.scores, &report.node_mean_sick_days)).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityBurden {
    pub community: usize,
    pub members: Vec<NodeId>,
    /// Total sick days inside the community, one entry per run.
    pub run_totals: Vec<u32>,
    pub median: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityTable {
    pub communities: Vec<CommunityBurden>,
}

pub fn burden_by_community(report: &ExperimentReport, partition: &CommunityPartition) -> Result<CommunityTable> {
    if report.records.is_empty() {
        return Err(Error::InvalidParameter("no runs to group".into()));
    }
    if partition.labels.len() != report.num_nodes {
        return Err(Error::InvalidParameter("partition does not cover the report's nodes".into()));
    }
    let communities = (0..partition.k)
        .map(|c| {
            let members = partition.members(c);
            let run_totals: Vec<u32> =
                report.records.iter().map(|r| members.iter().map(|&v| r.node_sick_days[v]).sum()).collect();
            let as_f64: Vec<f64> = run_totals.iter().map(|&t| t as f64).collect();
            CommunityBurden { community: c, members, median: stats::median(&as_f64), mean: stats::mean(&as_f64), run_totals }
        })
        .collect();
    Ok(CommunityTable { communities })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tercile_boundaries() {
        let t = terciles(&[5.0, 1.0, 1.0, 3.0, 2.0, 9.0, 0.0]);
        assert_eq!(t[0], vec![6, 1]);
        assert_eq!(t[1], vec![2, 4]);
        assert_eq!(t[2], vec![3, 0, 5]);
    }
}
