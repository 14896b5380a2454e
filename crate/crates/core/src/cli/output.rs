//! File writers for run outputs. Schemas are described in `docs/formats.md`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::agent::{AgentKind, EvalReport, MetricRow, Policy};
use crate::memory::MemoryConfig;
use crate::nn::{QNet, MEMORY_STORES};

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub fn metrics_jsonl(rows: &[MetricRow]) -> String {
    let mut out = String::new();
    for r in rows {
        out.push_str(&serde_json::to_string(r).expect("metric rows serialize"));
        out.push('\n');
    }
    out
}

/// `episode,step,policy,row,short,episodic,semantic`, one line per
/// attention-matrix row.
pub fn attention_csv(report: &EvalReport) -> String {
    let mut out = String::from("episode,step,policy,row,short,episodic,semantic\n");
    for a in &report.attention {
        for (name, row) in MEMORY_STORES.iter().zip(a.weights) {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                a.episode,
                a.step,
                a.policy.name(),
                name,
                row[0],
                row[1],
                row[2]
            );
        }
    }
    out
}

pub const POLICY_FORMAT: &str = "humemai-policy";

/// Sidecar describing a trained agent; network weights live in separate
/// checkpoint files named relative to it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolicyFile {
    pub format: String,
    pub version: u32,
    pub agent: AgentKind,
    pub capacity: usize,
    #[serde(default)]
    pub memory: Option<MemoryConfig>,
    #[serde(default)]
    pub mm: Option<String>,
    #[serde(default)]
    pub explore: Option<String>,
    #[serde(default)]
    pub network: Option<String>,
}

pub fn save_policy(dir: &Path, policy: &Policy) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let save = |name: &str, net: &QNet| -> Result<String, CliError> {
        let path = dir.join(name);
        net.save(&path).map_err(|e| CliError::Io(e.to_string()))?;
        Ok(name.to_owned())
    };
    let file = match policy {
        Policy::Humemai {
            kind,
            memory,
            mm,
            explore,
        } => PolicyFile {
            format: POLICY_FORMAT.into(),
            version: 1,
            agent: *kind,
            capacity: memory.capacity,
            memory: Some(memory.clone()),
            mm: Some(save("mm.ckpt.json", mm)?),
            explore: explore.as_ref().map(|n| save("explore.ckpt.json", n)).transpose()?,
            network: None,
        },
        Policy::Baseline { capacity, net } => PolicyFile {
            format: POLICY_FORMAT.into(),
            version: 1,
            agent: AgentKind::Baseline,
            capacity: *capacity,
            memory: None,
            mm: None,
            explore: None,
            network: Some(save("baseline.ckpt.json", net)?),
        },
    };
    let path = dir.join("policy.json");
    write_file(&path, &serde_json::to_string_pretty(&file).expect("policy serializes"))?;
    Ok(path)
}

pub fn load_policy(path: &Path) -> Result<Policy, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let file: PolicyFile =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if file.format != POLICY_FORMAT {
        return Err(CliError::Config(format!("{}: not a policy file", path.display())));
    }
    let dir = path.parent().unwrap_or(Path::new("."));
    let load = |name: &Option<String>, what: &str| -> Result<QNet, CliError> {
        let name = name
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("policy file lacks the {what} checkpoint")))?;
        QNet::load(&dir.join(name)).map_err(|e| CliError::Config(e.to_string()))
    };
    Ok(match file.agent {
        AgentKind::Baseline => Policy::Baseline {
            capacity: file.capacity,
            net: load(&file.network, "network")?,
        },
        kind => Policy::Humemai {
            kind,
            memory: file.memory.clone().unwrap_or_else(|| MemoryConfig::new(file.capacity)),
            mm: load(&file.mm, "mm")?,
            explore: file.explore.as_ref().map(|_| load(&file.explore, "explore")).transpose()?,
        },
    })
}

/// One line of the Table 1 reproduction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub capacity: usize,
    pub agent: AgentKind,
    /// Per-seed mean test reward of the phase-one policy (HumemAI only).
    pub phase1: Vec<f64>,
    /// Per-seed mean test reward of the final agent.
    pub phase2: Vec<f64>,
    /// `None` when every seed completed.
    pub failure: Option<String>,
}

fn mean_std(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    Some((m, (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt()))
}

fn label(agent: AgentKind) -> &'static str {
    match agent {
        AgentKind::Humemai => "HumemAI",
        AgentKind::HumemaiEpisodicOnly => "HumemAI (E)",
        AgentKind::HumemaiSemanticOnly => "HumemAI (S)",
        AgentKind::Baseline => "Baseline",
    }
}

fn cell(xs: &[f64]) -> String {
    match mean_std(xs) {
        Some((m, s)) => format!("{m:.0} (±{s:.0})"),
        None => "N/A".into(),
    }
}

/// Markdown table with Phase 1 and Phase 2 columns, one row per cell, ordered by
/// capacity. Failed cells are marked.
pub fn table_markdown(rows: &[TableRow]) -> String {
    let mut sorted: Vec<&TableRow> = rows.iter().collect();
    sorted.sort_by_key(|r| (r.capacity, AgentKind::ALL.iter().position(|k| *k == r.agent)));
    let mut out = String::from("| Capacity | Agent Type | Phase 1 | Phase 2 |\n|---|---|---|---|\n");
    for r in sorted {
        let flag = if r.failure.is_some() { " (FAILED, partial)" } else { "" };
        let _ = writeln!(out, "| {} | {}{} | {} | {} |", r.capacity, label(r.agent), flag, cell(&r.phase1), cell(&r.phase2));
    }
    out
}

/// `capacity,agent,phase1_mean,phase1_std,phase2_mean,phase2_std,n_seeds,status`.
pub fn table_csv(rows: &[TableRow]) -> String {
    let mut out = String::from("capacity,agent,phase1_mean,phase1_std,phase2_mean,phase2_std,n_seeds,status\n");
    for r in rows {
        let fmt = |xs: &[f64]| match mean_std(xs) {
            Some((m, s)) => format!("{m},{s}"),
            None => ",".into(),
        };
        let status = match &r.failure {
            None => "ok".to_owned(),
            Some(e) => format!("failed: {}", e.replace([',', '\n'], " ")),
        };
        let _ = writeln!(out, "{},{},{},{},{},{}", r.capacity, r.agent, fmt(&r.phase1), fmt(&r.phase2), r.phase2.len(), status);
    }
    out
}
