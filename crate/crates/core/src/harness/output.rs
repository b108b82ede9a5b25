use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use super::{
    burden_by_centrality, burden_by_community, run_experiment_in, CentralityTable, CommunityTable, ExperimentConfig,
    ExperimentReport, Metric,
};
use crate::error::{finish_csv, Error, Result};
use crate::graph::{girvan_newman_bisect, CentralityMeasure};

/// Everything one experiment produces.
#[derive(Debug, Clone, Serialize)]
pub struct Analysis {
    pub report: ExperimentReport,
    pub centrality: CentralityTable,
    pub communities: Option<CommunityTable>,
}

/// Runs the experiment and derives the centrality (always) and community
/// (when requested) tables.
pub fn analyze(cfg: &ExperimentConfig, base_dir: &Path) -> Result<Analysis> {
    let report = run_experiment_in(cfg, base_dir)?;
    let graph = cfg.graph.build(base_dir)?;
    let scores = CentralityMeasure::ALL.iter().map(|m| m.compute(&graph)).collect::<Result<Vec<_>>>()?;
    let centrality = burden_by_centrality(&report, &scores)?;
    let communities = if cfg.wants(Metric::Communities) {
        Some(burden_by_community(&report, &girvan_newman_bisect(&graph)?)?)
    } else {
        None
    };
    Ok(Analysis { report, centrality, communities })
}

#[derive(Debug, Clone)]
pub struct OutputFiles {
    pub report: PathBuf,
    pub runs: PathBuf,
    pub centrality: PathBuf,
    pub terciles: PathBuf,
    pub meta: PathBuf,
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn report_csv(report: &ExperimentReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["node", "mean_sick_days", "se_sick_days", "p_infected", "se_p_infected"])?;
    for v in 0..report.num_nodes {
        w.write_record([
            v.to_string(),
            report.node_mean_sick_days[v].to_string(),
            report.node_se_sick_days[v].to_string(),
            report.node_p_infected[v].to_string(),
            report.node_se_p_infected[v].to_string(),
        ])?;
    }
    finish_csv(w)
}

/// Long format: one `all` row per run, then one row per run and community.
pub fn runs_csv(report: &ExperimentReport, communities: Option<&CommunityTable>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["run", "seed", "community", "total_sick_days"])?;
    for r in &report.records {
        w.write_record([r.run.to_string(), r.seed.to_string(), "all".into(), r.total_sick_days.to_string()])?;
    }
    for c in communities.map(|t| t.communities.as_slice()).unwrap_or_default() {
        for (r, total) in report.records.iter().zip(&c.run_totals) {
            w.write_record([r.run.to_string(), r.seed.to_string(), c.community.to_string(), total.to_string()])?;
        }
    }
    finish_csv(w)
}

pub fn centrality_csv(table: &CentralityTable) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["node".to_string()];
    header.extend(table.measures.iter().map(|m| m.name().to_string()));
    header.extend(["mean_sick_days".into(), "p_infected".into()]);
    w.write_record(&header)?;
    for row in &table.rows {
        let mut rec = vec![row.node.to_string()];
        rec.extend(row.scores.iter().map(f64::to_string));
        rec.extend([row.mean_sick_days.to_string(), row.p_infected.to_string()]);
        w.write_record(&rec)?;
    }
    finish_csv(w)
}

pub fn terciles_csv(table: &CentralityTable) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["measure", "tercile", "num_nodes", "mean_sick_days", "mean_p_infected"])?;
    for t in &table.terciles {
        w.write_record([
            t.measure.name().to_string(),
            t.label().to_string(),
            t.nodes.len().to_string(),
            t.mean_sick_days.to_string(),
            t.mean_p_infected.to_string(),
        ])?;
    }
    finish_csv(w)
}

/// Config echo, seeding scheme, per-run seeds and headline numbers.
pub fn meta_json(cfg: &ExperimentConfig, analysis: &Analysis) -> String {
    let r = &analysis.report;
    let spearman: serde_json::Map<String, serde_json::Value> = analysis
        .centrality
        .measures
        .iter()
        .zip(&analysis.centrality.spearman_sick_days)
        .map(|(m, s)| (m.name().to_string(), json!(s)))
        .collect();
    let communities = analysis.communities.as_ref().map(|t| {
        t.communities
            .iter()
            .map(|c| json!({"community": c.community, "members": c.members, "median": c.median, "mean": c.mean}))
            .collect::<Vec<_>>()
    });
    let meta = json!({
        "tool": "contagion",
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "seed_mixing": "run i uses splitmix64(base_seed ^ splitmix64(i)) to seed ChaCha8",
        "run_seeds": r.seeds(),
        "summary": {
            "policy": r.policy,
            "runs": r.runs,
            "mean_total_sick_days": r.mean_total_sick_days,
            "se_total_sick_days": r.se_total_sick_days,
            "median_total_sick_days": r.median_total_sick_days,
            "mean_epidemic_size": r.mean_epidemic_size,
            "spearman_centrality_vs_sick_days": spearman,
            "communities": communities,
        },
    });
    serde_json::to_string_pretty(&meta).expect("meta serialization is infallible")
}

pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, analysis: &Analysis) -> Result<OutputFiles> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = OutputFiles {
        report: dir.join("report.csv"),
        runs: dir.join("runs.csv"),
        centrality: dir.join("centrality.csv"),
        terciles: dir.join("terciles.csv"),
        meta: dir.join("meta.json"),
    };
    write(&files.report, &report_csv(&analysis.report)?)?;
    write(&files.runs, &runs_csv(&analysis.report, analysis.communities.as_ref())?)?;
    write(&files.centrality, &centrality_csv(&analysis.centrality)?)?;
    write(&files.terciles, &terciles_csv(&analysis.centrality)?)?;
    write(&files.meta, &meta_json(cfg, analysis))?;
    Ok(files)
}
