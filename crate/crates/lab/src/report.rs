//! Per-criterion summaries of an assessment table.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::assess::{write_csv, AssessmentRow};
use crate::error::{LabError, Result};
use crate::SCHEMA_VERSION;

pub const REPORT_FILE: &str = "report.json";
pub const PLOT_FILE: &str = "ec_vs_time.csv";

/// Grid-energy statistics of the rows sharing one criterion value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub value: String,
    pub count: usize,
    /// J
    pub min: f64,
    /// J
    pub max: f64,
    /// J
    pub mean: f64,
    /// Index of the cheapest row in the group.
    pub best_index: usize,
    /// Index of the most expensive row in the group.
    pub worst_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionSummary {
    pub criterion: String,
    pub groups: Vec<GroupStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub rows: usize,
    pub overall: GroupStats,
    pub criteria: Vec<CriterionSummary>,
}

/// One point of the energy-versus-duration plot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub index: usize,
    #[serde(rename = "move")]
    pub move_name: String,
    pub payload: f64,
    pub command: String,
    pub v_level: String,
    pub a_level: String,
    pub profile: String,
    pub duration: f64,
    pub e_grid: f64,
}

type Key = fn(&AssessmentRow) -> String;

/// Criteria the report groups by, in output order.
pub const CRITERIA: [(&str, Key); 6] = [
    ("move", |r| r.move_name.clone()),
    ("payload", |r| format!("{}", r.payload)),
    ("command", |r| r.command.to_string()),
    ("v_level", |r| r.v_level.clone()),
    ("a_level", |r| r.a_level.clone()),
    ("profile", |r| r.profile.clone()),
];

/// Statistics of `rows`, labelled `value`; `None` for no rows.
pub fn group_stats(value: &str, rows: &[&AssessmentRow]) -> Option<GroupStats> {
    let best = rows.iter().min_by(|a, b| a.e_grid.total_cmp(&b.e_grid))?;
    let worst = rows.iter().max_by(|a, b| a.e_grid.total_cmp(&b.e_grid))?;
    let mean = rows.iter().map(|r| r.e_grid).sum::<f64>() / rows.len() as f64;
    Some(GroupStats {
        value: value.to_string(),
        count: rows.len(),
        min: best.e_grid,
        max: worst.e_grid,
        // Keeps min ≤ mean ≤ max under round-off.
        mean: mean.clamp(best.e_grid, worst.e_grid),
        best_index: best.index,
        worst_index: worst.index,
    })
}

/// Groups by each criterion, preserving first-appearance order of values.
pub fn summarize(rows: &[AssessmentRow]) -> Result<Report> {
    let all: Vec<&AssessmentRow> = rows.iter().collect();
    let overall = group_stats("all", &all).ok_or(LabError::EmptyTable)?;
    let criteria = CRITERIA
        .iter()
        .map(|(name, key)| {
            let mut order: Vec<String> = Vec::new();
            let mut groups: BTreeMap<String, Vec<&AssessmentRow>> = BTreeMap::new();
            for r in rows {
                let k = key(r);
                if !groups.contains_key(&k) {
                    order.push(k.clone());
                }
                groups.entry(k).or_default().push(r);
            }
            CriterionSummary {
                criterion: name.to_string(),
                groups: order.iter().filter_map(|k| group_stats(k, &groups[k])).collect(),
            }
        })
        .collect();
    Ok(Report {
        schema_version: SCHEMA_VERSION,
        rows: rows.len(),
        overall,
        criteria,
    })
}

pub fn plot_rows(rows: &[AssessmentRow]) -> Vec<PlotRow> {
    rows.iter()
        .map(|r| PlotRow {
            index: r.index,
            move_name: r.move_name.clone(),
            payload: r.payload,
            command: r.command.to_string(),
            v_level: r.v_level.clone(),
            a_level: r.a_level.clone(),
            profile: r.profile.clone(),
            duration: r.duration,
            e_grid: r.e_grid,
        })
        .collect()
}

/// Writes `report.json` and `ec_vs_time.csv` into `out_dir`.
pub fn emit_report(rows: &[AssessmentRow], out_dir: &Path) -> Result<Report> {
    let report = summarize(rows)?;
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join(REPORT_FILE), serde_json::to_string_pretty(&report)?)?;
    write_csv(&out_dir.join(PLOT_FILE), &plot_rows(rows))?;
    Ok(report)
}

impl Report {
    pub fn criterion(&self, name: &str) -> Option<&CriterionSummary> {
        self.criteria.iter().find(|c| c.criterion == name)
    }
}

impl CriterionSummary {
    pub fn group(&self, value: &str) -> Option<&GroupStats> {
        self.groups.iter().find(|g| g.value == value)
    }
}
