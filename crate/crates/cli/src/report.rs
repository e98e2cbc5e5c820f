use std::fmt::Write as _;
use std::path::Path;

use anyhow::Result;
use num_bigint::BigInt;

use crate::config::Plan;
use crate::pipeline::{read_json, CertRecord, Manifest, SolveRecord};

struct ShapeRow {
    name: String,
    manifest: Option<Manifest>,
    solve: Option<SolveRecord>,
    cert: Option<CertRecord>,
}

fn shape_label(parts: &[usize]) -> String {
    let p: Vec<String> = parts.iter().map(|v| v.to_string()).collect();
    format!("({})", p.join(","))
}

fn sorted_dirs(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut dirs: Vec<_> = std::fs::read_dir(dir)
        .map(|rd| rd.filter_map(|e| e.ok()).map(|e| e.path()).filter(|p| p.is_dir()).collect())
        .unwrap_or_default();
    dirs.sort();
    dirs
}

fn opt<T: for<'a> serde::Deserialize<'a>>(path: &Path) -> Option<T> {
    path.exists().then(|| read_json(path).ok()).flatten()
}

/// One report over every run found under `out`. The claimed bound for a
/// run is the smallest certified integer bound among its shapes.
pub fn render(out: &Path) -> Result<String> {
    let mut s = String::new();
    let _ = writeln!(s, "split SDP bounds report");
    let runs: Vec<_> = sorted_dirs(out)
        .into_iter()
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with('n')))
        .collect();
    if runs.is_empty() {
        let _ = writeln!(s, "\nno runs found");
        return Ok(s);
    }
    for run in runs {
        let plan: Option<Plan> = opt(&run.join("run.json"));
        let name = run.file_name().unwrap().to_string_lossy().to_string();
        let rows: Vec<ShapeRow> = sorted_dirs(&run)
            .into_iter()
            .map(|dir| ShapeRow {
                name: dir.file_name().unwrap().to_string_lossy().to_string(),
                manifest: opt(&dir.join("manifest.json")),
                solve: opt(&dir.join("solve.json")),
                cert: opt(&dir.join("certificate.json")),
            })
            .collect();

        let _ = writeln!(s);
        let (n, d) = match &plan {
            Some(p) => (p.n, p.d),
            None => match rows.iter().find_map(|r| r.manifest.as_ref()) {
                Some(m) => (m.n, m.d),
                None => {
                    let _ = writeln!(s, "{name}: no readable artifacts");
                    continue;
                }
            },
        };
        if let Some(p) = &plan {
            if p.is_propagated() {
                let _ = writeln!(s, "A({}, {}) = A({n}, {d}) (odd distance propagated)", p.requested_n, p.requested_d);
            }
        }
        let best = rows
            .iter()
            .filter_map(|r| r.cert.as_ref().filter(|c| c.certified))
            .filter_map(|c| c.integer_bound.parse::<BigInt>().ok().map(|b| (b, c)))
            .min_by(|a, b| a.0.cmp(&b.0));
        match &best {
            Some((b, c)) => {
                let _ = writeln!(s, "A({n}, {d}) <= {b}   certified with shape {}", shape_label(&c.shape));
            }
            None => {
                let _ = writeln!(s, "A({n}, {d}): no certified bound");
            }
        }

        let _ = writeln!(s, "  {:<12} {:>6} {:>6} {:>6}  {:<10} {:>16}  certificate", "shape", "vars", "blocks", "rows", "solver", "dual");
        for r in &rows {
            let label = r.manifest.as_ref().map(|m| shape_label(&m.shape)).unwrap_or_else(|| r.name.clone());
            let (vars, blocks, lin) = match &r.manifest {
                Some(m) => (
                    m.variables.to_string(),
                    m.blocks.len().to_string(),
                    m.linear_rows.values().sum::<usize>().to_string(),
                ),
                None => ("-".into(), "-".into(), "-".into()),
            };
            let (status, dual) = match &r.solve {
                Some(sr) => (
                    sr.status.clone(),
                    sr.dual_objective.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into()),
                ),
                None => ("-".into(), "-".into()),
            };
            let cert = match &r.cert {
                Some(c) if c.certified => {
                    let mark = if best.as_ref().is_some_and(|(_, b)| b.shape == c.shape) { "  <= claimed" } else { "" };
                    format!("certified {}{mark}", c.integer_bound)
                }
                Some(c) => format!("uncertified ({})", c.reason.as_deref().unwrap_or("no reason recorded")),
                None => "-".into(),
            };
            let _ = writeln!(s, "  {label:<12} {vars:>6} {blocks:>6} {lin:>6}  {status:<10} {dual:>16}  {cert}");
            if let Some(err) = r.solve.as_ref().and_then(|sr| sr.error.as_ref()) {
                let _ = writeln!(s, "    solver error: {err}");
            }
        }

        if let Some(m) = rows.iter().find_map(|r| r.manifest.as_ref()) {
            let _ = writeln!(s, "  constraints: {}", m.families.join(", "));
        }
        let mut used: Vec<_> = rows.iter().filter_map(|r| r.manifest.as_ref()).flat_map(|m| m.bounds_used.iter()).collect();
        used.sort();
        used.dedup();
        if !used.is_empty() {
            let _ = writeln!(s, "  bounds used:");
            for u in used {
                let _ = writeln!(s, "    {} = {}  [{}]", u.key, u.value, u.source);
            }
        }
        let mut notes: Vec<&String> = plan.iter().flat_map(|p| p.notices.iter()).collect();
        notes.extend(rows.iter().filter_map(|r| r.manifest.as_ref()).flat_map(|m| m.notices.iter()));
        notes.dedup();
        for note in notes {
            let _ = writeln!(s, "  note: {note}");
        }
    }
    Ok(s)
}
