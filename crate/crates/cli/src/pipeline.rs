use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use splitsdp_core::algebra::{valid_profiles, SplitShape};
use splitsdp_core::bounds::{load_table, BoundKey, BoundTable, UsedBound};
use splitsdp_core::model::{build_model, SdpModel};
use splitsdp_core::oracle::{exact_A, exact_A_cw};
use splitsdp_core::sdpa::{read_solution, run_solver, write_sdpa, SolverCommand, SolverFiles, StandardForm};
use splitsdp_core::verifier::{verify_solution, CertStatus};
use splitsdp_core::Error;

use crate::config::{enabled_families, Plan};

/// Largest length at which user table entries are checked by search.
const TABLE_CHECK_MAX_N: usize = 8;

#[derive(Debug, Serialize, Deserialize)]
pub struct BlockInfo {
    pub label: String,
    pub size: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub n: usize,
    pub d: usize,
    pub shape: Vec<usize>,
    pub digest: String,
    pub profiles: usize,
    pub classes: usize,
    pub forced_zero_classes: usize,
    pub variables: usize,
    pub blocks: Vec<BlockInfo>,
    pub linear_rows: BTreeMap<String, usize>,
    pub families: Vec<String>,
    pub bounds_used: Vec<UsedBound>,
    pub notices: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SolveRecord {
    pub shape: Vec<usize>,
    pub status: String,
    pub primal_objective: Option<f64>,
    pub dual_objective: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CertRecord {
    pub shape: Vec<usize>,
    pub certified: bool,
    pub integer_bound: String,
    pub raw_bound: String,
    pub raw_bound_approx: f64,
    pub reason: Option<String>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: for<'a> Deserialize<'a>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// The built-in table with the user's table on top, plus warnings for user
/// entries that contradict exhaustive search.
pub fn bounds_table(plan: &Plan) -> Result<(BoundTable, Vec<String>)> {
    let mut table = BoundTable::builtin();
    let mut warnings = Vec::new();
    if let Some(path) = &plan.config.bounds_table {
        let user = load_table(path).map_err(|e| anyhow!("{e}"))?;
        for (key, entry) in user.entries() {
            let exact = match *key {
                BoundKey::Cw { n, d, w } if n <= TABLE_CHECK_MAX_N => exact_A_cw(n, d, w).ok(),
                BoundKey::A { n, d } if n <= TABLE_CHECK_MAX_N => exact_A(n, d).ok(),
                _ => None,
            };
            if let Some(v) = exact {
                if entry.value < v {
                    warnings.push(format!(
                        "table entry `{key} {}` is below the exact value {v}; bounds using it are not sound",
                        entry.value
                    ));
                }
            }
        }
        table.merge(&user);
    }
    Ok((table, warnings))
}

pub fn model_for(plan: &Plan, parts: &[usize], table: &BoundTable) -> Result<SdpModel> {
    let shape = SplitShape::new(parts.to_vec()).map_err(|e| anyhow!("{e}"))?;
    build_model(&shape, plan.d, table, &plan.config.options).map_err(|e| anyhow!("{e}"))
}

pub fn build_shape(plan: &Plan, parts: &[usize], table: &BoundTable, notices: &[String]) -> Result<(SdpModel, StandardForm)> {
    let model = model_for(plan, parts, table)?;
    let sf = StandardForm::from_model(&model).map_err(|e| anyhow!("{e}"))?;
    let dir = plan.shape_dir(parts);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    write_sdpa(&sf, dir.join("model.dat-s")).map_err(|e| anyhow!("{e}"))?;

    let mut linear_rows = BTreeMap::new();
    for row in &model.linear {
        *linear_rows.entry(row.tag.clone()).or_insert(0) += 1;
    }
    let manifest = Manifest {
        n: plan.n,
        d: plan.d,
        shape: parts.to_vec(),
        digest: model.digest.clone(),
        profiles: valid_profiles(&model.shape).len(),
        classes: model.classes.len(),
        forced_zero_classes: model.classes.iter().filter(|c| c.forced_zero).count(),
        variables: model.num_vars(),
        blocks: sf.blocks.iter().map(|b| BlockInfo { label: b.label.clone(), size: b.size }).collect(),
        linear_rows,
        families: enabled_families(&plan.config.options),
        bounds_used: model.bounds_used.clone(),
        notices: notices.to_vec(),
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok((model, sf))
}

fn files(dir: &Path) -> SolverFiles {
    SolverFiles::in_dir(dir)
}

/// Rebuild the model and check it is the one that was written by `build`.
fn current_model(plan: &Plan, parts: &[usize], table: &BoundTable) -> Result<StandardForm> {
    let dir = plan.shape_dir(parts);
    let model = model_for(plan, parts, table)?;
    let manifest_path = dir.join("manifest.json");
    if manifest_path.exists() {
        let manifest: Manifest = read_json(&manifest_path)?;
        if manifest.digest != model.digest {
            bail!(
                "the model in {} was built with different settings; run `splitsdp build` again",
                dir.display()
            );
        }
    }
    StandardForm::from_model(&model).map_err(|e| anyhow!("{e}"))
}

pub enum SolveOutcome {
    Solved(SolveRecord),
    Failed(SolveRecord),
}

pub fn solve_shape(plan: &Plan, parts: &[usize], table: &BoundTable) -> Result<SolveOutcome> {
    let dir = plan.shape_dir(parts);
    let sf = if dir.join("model.dat-s").exists() {
        current_model(plan, parts, table)?
    } else {
        build_shape(plan, parts, table, &[])?.1
    };
    let mut cmd = SolverCommand::new(plan.config.solver_command.clone());
    if let Some(t) = plan.config.timeout_sec {
        cmd = cmd.with_timeout(Duration::from_secs(t));
    }
    let outcome = match run_solver(&sf, &cmd, &files(&dir)) {
        Ok(sol) => SolveOutcome::Solved(SolveRecord {
            shape: parts.to_vec(),
            status: sol.solver_status.clone(),
            primal_objective: Some(sol.primal_objective),
            dual_objective: Some(sol.dual_objective),
            error: None,
        }),
        Err(e) => {
            let mut msg = e.to_string();
            if matches!(e, Error::SolverSpawn { .. }) {
                msg.push_str(
                    "; install an SDPA-format solver such as CSDP or pass --solver-cmd \
                     (for example \"python3 tools/sdpa_cvxopt.py\")",
                );
            }
            SolveOutcome::Failed(SolveRecord {
                shape: parts.to_vec(),
                status: "failed".into(),
                primal_objective: None,
                dual_objective: None,
                error: Some(msg),
            })
        }
    };
    let record = match &outcome {
        SolveOutcome::Solved(r) | SolveOutcome::Failed(r) => r,
    };
    write_json(&dir.join("solve.json"), record)?;
    Ok(outcome)
}

pub fn verify_shape(plan: &Plan, parts: &[usize], table: &BoundTable) -> Result<CertRecord> {
    let dir = plan.shape_dir(parts);
    let sol_path: PathBuf = files(&dir).solution;
    if !sol_path.exists() {
        bail!("no solution at {}; run `splitsdp solve` first", sol_path.display());
    }
    let sf = current_model(plan, parts, table)?;
    let sol = read_solution(&sol_path, &sf).map_err(|e| anyhow!("{e}"))?;
    let cert = verify_solution(&sf, &sol, plan.config.denominator).map_err(|e| anyhow!("{e}"))?;
    std::fs::write(dir.join("certificate.txt"), cert.text())?;
    let record = CertRecord {
        shape: parts.to_vec(),
        certified: cert.is_certified(),
        integer_bound: cert.certified_integer_bound.to_string(),
        raw_bound: cert.raw_bound.to_string(),
        raw_bound_approx: cert.raw_bound_f64(),
        reason: match &cert.status {
            CertStatus::Certified => None,
            CertStatus::Uncertified(r) => Some(r.clone()),
        },
    };
    write_json(&dir.join("certificate.json"), &record)?;
    Ok(record)
}
