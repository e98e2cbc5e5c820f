//! Rigorous upper bounds from approximate dual solutions.
//!
//! For a PSD `Y` and any `x` with `F(x) = G_0 + sum x_i G_i` PSD and
//! `0 <= x <= 1`, `0 <= tr(F(x) Y)` gives
//! `c.x <= tr(G_0 Y) + sum_i x_i eps_i <= tr(G_0 Y) + sum_i max(0, eps_i)`
//! where `eps_i = tr(G_i Y) + c_i`.
//!
//! Dense solver blocks are scaled by `D = diag(w^{-1/2})`. The verifier
//! rationalizes the solver's `Y` to `Y^` and works with `E Y^ E`, where
//! `E` holds exact rational approximations of `w^{-1/2}`. Against the
//! unscaled entries `S` this pairs like `Y` against the solver matrices, and
//! it is PSD exactly when `Y^` is.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::form::ratio_to_f64;
use crate::model::SdpModel;
use crate::sdpa::{BlockKind, SolverSolution, StandardForm};

/// Denominator used by default when rationalizing solver output.
pub const DEFAULT_DENOMINATOR: u64 = 1 << 40;

/// Slack allowed between the solver's dual objective and the exact bound
/// before the integer parts are compared.
pub const OBJECTIVE_TOLERANCE: f64 = 1e-6;

/// A rational symmetric block. Dense blocks are stored row-major, diagonal
/// blocks as their diagonal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalBlock {
    pub kind: BlockKind,
    pub size: usize,
    pub data: Vec<BigRational>,
}

impl RationalBlock {
    pub fn zeros(kind: BlockKind, size: usize) -> Self {
        let len = match kind {
            BlockKind::Dense => size * size,
            BlockKind::Diagonal => size,
        };
        Self { kind, size, data: vec![BigRational::zero(); len] }
    }

    pub fn dense(size: usize, data: Vec<BigRational>) -> Self {
        assert_eq!(data.len(), size * size);
        Self { kind: BlockKind::Dense, size, data }
    }

    pub fn get(&self, r: usize, c: usize) -> BigRational {
        match self.kind {
            BlockKind::Dense => self.data[r * self.size + c].clone(),
            BlockKind::Diagonal if r == c => self.data[r].clone(),
            BlockKind::Diagonal => BigRational::zero(),
        }
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.size, self.size, |r, c| ratio_to_f64(&self.get(r, c)))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }
}

fn round_to(v: f64, denominator: &BigInt) -> BigInt {
    let l = denominator.to_f64().unwrap_or(f64::MAX);
    BigInt::from_f64((v * l).round()).unwrap_or_else(BigInt::zero)
}

fn rationalize_matrix(m: &DMatrix<f64>, denominator: &BigInt) -> Vec<BigRational> {
    let n = m.nrows();
    let mut out = vec![BigRational::zero(); n * n];
    for r in 0..n {
        for c in r..n {
            let avg = 0.5 * m[(r, c)] + 0.5 * m[(c, r)];
            let v = BigRational::new(round_to(avg, denominator), denominator.clone());
            out[c * n + r] = v.clone();
            out[r * n + c] = v;
        }
    }
    out
}

/// Round every entry of the solver's `Y` to a multiple of
/// `1 / denominator` and average each block with its transpose.
pub fn rationalize_dual(
    solution: &SolverSolution,
    sf: &StandardForm,
    denominator: u64,
) -> Result<Vec<RationalBlock>> {
    if solution.dual_y.len() != sf.blocks.len() {
        return Err(Error::ShapeMismatch {
            block: "dual".into(),
            message: format!("{} blocks given, the model has {}", solution.dual_y.len(), sf.blocks.len()),
        });
    }
    let den = BigInt::from(denominator.max(1));
    sf.blocks
        .iter()
        .zip(&solution.dual_y)
        .map(|(b, y)| {
            if y.nrows() != b.size || y.ncols() != b.size {
                return Err(Error::ShapeMismatch {
                    block: b.label.clone(),
                    message: format!("dual block is {}x{}, expected {}", y.nrows(), y.ncols(), b.size),
                });
            }
            Ok(match b.kind {
                BlockKind::Dense => RationalBlock::dense(b.size, rationalize_matrix(y, &den)),
                BlockKind::Diagonal => RationalBlock {
                    kind: BlockKind::Diagonal,
                    size: b.size,
                    data: (0..b.size)
                        .map(|r| BigRational::new(round_to(y[(r, r)], &den), den.clone()))
                        .collect(),
                },
            })
        })
        .collect()
}

/// Outcome of an exact `LDL^T` factorization with diagonal pivoting.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PsdWitness {
    pub psd: bool,
    /// Row eliminated at each step.
    pub order: Vec<usize>,
    pub pivots: Vec<BigRational>,
    /// Why the matrix is not PSD.
    pub failure: Option<String>,
}

impl PsdWitness {
    pub fn rank(&self) -> usize {
        self.pivots.iter().filter(|p| p.is_positive()).count()
    }
}

/// Decide positive semidefiniteness of a symmetric rational matrix exactly.
///
/// At each step the largest remaining diagonal entry is eliminated. A
/// negative maximum, or a zero maximum with a nonzero entry in its row,
/// proves the matrix indefinite.
pub fn verify_psd(block: &RationalBlock) -> PsdWitness {
    let n = block.size;
    if block.kind == BlockKind::Diagonal {
        let bad = block.data.iter().position(|v| v.is_negative());
        return PsdWitness {
            psd: bad.is_none(),
            order: (0..n).collect(),
            pivots: block.data.clone(),
            failure: bad.map(|r| format!("diagonal entry {r} is negative")),
        };
    }
    let mut a = block.data.clone();
    let mut alive: Vec<usize> = (0..n).collect();
    let mut order = Vec::with_capacity(n);
    let mut pivots = Vec::with_capacity(n);
    let fail = |order, pivots, msg: String| PsdWitness { psd: false, order, pivots, failure: Some(msg) };
    while !alive.is_empty() {
        let (pos, &p) = alive
            .iter()
            .enumerate()
            .max_by(|(_, &x), (_, &y)| a[x * n + x].cmp(&a[y * n + y]).then(y.cmp(&x)))
            .unwrap();
        let piv = a[p * n + p].clone();
        if piv.is_negative() {
            return fail(order, pivots, format!("negative pivot {piv} at row {p}"));
        }
        if piv.is_zero() {
            // Every remaining diagonal entry is zero, so PSD needs the rest to vanish.
            for &r in &alive {
                for &c in &alive {
                    if !a[r * n + c].is_zero() {
                        return fail(order, pivots, format!("zero diagonal with entry ({r}, {c}) nonzero"));
                    }
                }
            }
            for &r in &alive {
                order.push(r);
                pivots.push(BigRational::zero());
            }
            break;
        }
        alive.remove(pos);
        let col: Vec<BigRational> = alive.iter().map(|&r| &a[r * n + p] / &piv).collect();
        for (ir, &r) in alive.iter().enumerate() {
            if col[ir].is_zero() {
                continue;
            }
            let arp = a[r * n + p].clone();
            for (ic, &c) in alive.iter().enumerate().skip(ir) {
                if col[ic].is_zero() {
                    continue;
                }
                let v = &a[r * n + c] - &col[ic] * &arp;
                a[c * n + r] = v.clone();
                a[r * n + c] = v;
            }
        }
        order.push(p);
        pivots.push(piv);
    }
    PsdWitness { psd: true, order, pivots, failure: None }
}

fn shifted(data: &[BigRational], n: usize, s: &BigRational) -> Vec<BigRational> {
    let mut out = data.to_vec();
    for r in 0..n {
        out[r * n + r] += s;
    }
    out
}

/// Smallest `g >= 0` making `m + g I` diagonally dominant.
fn gershgorin_shift(data: &[BigRational], n: usize) -> BigRational {
    let mut g = BigRational::zero();
    for r in 0..n {
        let mut off = BigRational::zero();
        for c in 0..n {
            if c != r {
                off += data[r * n + c].abs();
            }
        }
        let need = off - &data[r * n + r];
        if need > g {
            g = need;
        }
    }
    g
}

/// Replace a block that fails [`verify_psd`] by a nearby verified PSD one.
///
/// Tried in turn: negative eigenvalues clipped to zero with growing
/// diagonal shifts, the clipped matrix made diagonally dominant, and
/// finally the zero matrix. Returns the block, its witness and what was done
/// (`None` when the input was already PSD).
pub fn repair_psd(block: &RationalBlock, denominator: u64) -> (RationalBlock, PsdWitness, Option<String>) {
    let w = verify_psd(block);
    if w.psd {
        return (block.clone(), w, None);
    }
    let n = block.size;
    if block.kind == BlockKind::Diagonal {
        let data: Vec<BigRational> =
            block.data.iter().map(|v| if v.is_negative() { BigRational::zero() } else { v.clone() }).collect();
        let clipped = block.data.iter().filter(|v| v.is_negative()).count();
        let fixed = RationalBlock { kind: BlockKind::Diagonal, size: n, data };
        let w = verify_psd(&fixed);
        return (fixed, w, Some(format!("{clipped} negative entries set to zero")));
    }

    let den = BigInt::from(denominator.max(1));
    let eig = block.to_f64().symmetric_eigen();
    let lam = eig.eigenvalues.map(|l| l.max(0.0));
    let clip = &eig.eigenvectors * DMatrix::from_diagonal(&lam) * eig.eigenvectors.transpose();
    let scale = eig.eigenvalues.iter().fold(1.0f64, |m, l| m.max(l.abs()));
    let base = rationalize_matrix(&clip, &den);
    let mut shift = 0.0;
    for k in 0..=8 {
        if k > 0 {
            shift = scale * 10f64.powi(2 * k - 18);
        }
        let s = BigRational::from_float(shift).unwrap_or_else(BigRational::zero);
        let cand = RationalBlock::dense(n, shifted(&base, n, &s));
        let w = verify_psd(&cand);
        if w.psd {
            let what = if k == 0 {
                "negative eigenvalues clipped".to_string()
            } else {
                format!("negative eigenvalues clipped, diagonal shift {shift:.1e}")
            };
            return (cand, w, Some(what));
        }
    }
    let g = gershgorin_shift(&base, n);
    let cand = RationalBlock::dense(n, shifted(&base, n, &g));
    let w = verify_psd(&cand);
    if w.psd {
        return (cand, w, Some(format!("diagonal dominance shift {:.3e}", ratio_to_f64(&g))));
    }
    let zero = RationalBlock::zeros(BlockKind::Dense, n);
    let w = verify_psd(&zero);
    (zero, w, Some("replaced by zero".into()))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CertStatus {
    Certified,
    Uncertified(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockCheck {
    pub label: String,
    pub witness: PsdWitness,
    pub repair: Option<String>,
}

/// Everything needed to re-check a bound by hand.
#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub model_digest: String,
    pub denominator: u64,
    /// The verified `Y^` per block, in solver coordinates.
    pub y: Vec<RationalBlock>,
    /// `eps_i = tr(G_i Y) + c_i` per solver variable.
    pub residuals: Vec<BigRational>,
    /// `const + tr(G_0 Y)`.
    pub dual_value: BigRational,
    pub raw_bound: BigRational,
    pub certified_integer_bound: BigInt,
    pub blocks: Vec<BlockCheck>,
    /// Dual objective reported with the solution, for comparison.
    pub solver_dual: f64,
    pub status: CertStatus,
}

impl Certificate {
    pub fn is_certified(&self) -> bool {
        self.status == CertStatus::Certified
    }

    pub fn raw_bound_f64(&self) -> f64 {
        ratio_to_f64(&self.raw_bound)
    }

    /// Human-readable certificate; a function of the model, `Y^` and the
    /// denominator only.
    pub fn text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "model {}", self.model_digest);
        let _ = writeln!(s, "denominator {}", self.denominator);
        let _ = writeln!(s, "variables {}", self.residuals.len());
        let _ = writeln!(s, "estimate uses 0 <= x_i <= 1 for every variable (box rows of the linear block)");
        for b in &self.blocks {
            let _ = writeln!(
                s,
                "block {} size {} rank {} {}",
                b.label,
                b.witness.pivots.len(),
                b.witness.rank(),
                match &b.repair {
                    None => "psd".to_string(),
                    Some(r) => format!("repaired: {r}"),
                }
            );
        }
        for (i, e) in self.residuals.iter().enumerate() {
            let sign = if e.is_positive() {
                '+'
            } else if e.is_negative() {
                '-'
            } else {
                '0'
            };
            let _ = writeln!(s, "eps x{i} {sign} {:.6e}", ratio_to_f64(e));
        }
        let _ = writeln!(s, "dual value {}", self.dual_value);
        let _ = writeln!(s, "positive residuals {}", positive_part_sum(&self.residuals));
        let _ = writeln!(s, "raw bound {}", self.raw_bound);
        let _ = writeln!(s, "raw bound approx {:.9}", self.raw_bound_f64());
        let _ = writeln!(s, "solver dual objective {:.9}", self.solver_dual);
        let _ = writeln!(s, "integer bound {}", self.certified_integer_bound);
        match &self.status {
            CertStatus::Certified => {
                let _ = writeln!(s, "status certified");
            }
            CertStatus::Uncertified(why) => {
                let _ = writeln!(s, "status uncertified: {why}");
            }
        }
        s
    }
}

pub fn positive_part_sum(residuals: &[BigRational]) -> BigRational {
    residuals.iter().filter(|e| e.is_positive()).fold(BigRational::zero(), |acc, e| acc + e)
}

/// `dual_value + sum max(0, eps_i)`.
pub fn raw_bound(dual_value: &BigRational, residuals: &[BigRational]) -> BigRational {
    dual_value + positive_part_sum(residuals)
}

fn inv_sqrt(w: &BigInt) -> BigRational {
    let v = 1.0 / w.to_f64().unwrap_or(f64::INFINITY).sqrt();
    BigRational::from_float(v).unwrap_or_else(BigRational::zero)
}

/// Pairings `tr(G_k Y)` for `k = 0..=num_vars` from one block.
fn block_pairings(sf: &StandardForm, bi: usize, y: &RationalBlock) -> Vec<BigRational> {
    let b = &sf.blocks[bi];
    let mut acc = vec![BigRational::zero(); sf.num_vars + 1];
    match b.kind {
        BlockKind::Diagonal => {
            for e in &b.entries {
                let v = &y.data[e.row];
                if !v.is_zero() {
                    acc[e.mat] += &e.value * v;
                }
            }
        }
        BlockKind::Dense => {
            let n = b.size;
            let scale: Vec<BigRational> = b.row_weights.iter().map(inv_sqrt).collect();
            let two = BigRational::from_integer(2.into());
            let mut p = vec![BigRational::zero(); n * n];
            for r in 0..n {
                for c in r..n {
                    let v = &y.data[r * n + c];
                    if v.is_zero() {
                        continue;
                    }
                    let mut t = &scale[r] * &scale[c] * v;
                    if r != c {
                        t *= &two;
                    }
                    p[r * n + c] = t;
                }
            }
            for e in &b.entries {
                let t = &p[e.row * n + e.col];
                if !t.is_zero() {
                    acc[e.mat] += &e.value * t;
                }
            }
        }
    }
    acc
}

/// Verify (and if needed repair) every block of `y`, compute the residuals
/// exactly and derive the bound.
///
/// The result is certified when the integer part of the exact bound does not
/// exceed that of `solver_dual + OBJECTIVE_TOLERANCE`.
pub fn certified_bound(
    sf: &StandardForm,
    y: &[RationalBlock],
    solver_dual: f64,
    denominator: u64,
) -> Result<Certificate> {
    if y.len() != sf.blocks.len() {
        return Err(Error::ShapeMismatch {
            block: "dual".into(),
            message: format!("{} blocks given, the model has {}", y.len(), sf.blocks.len()),
        });
    }
    for (b, yb) in sf.blocks.iter().zip(y) {
        if yb.size != b.size || yb.kind != b.kind {
            return Err(Error::ShapeMismatch {
                block: b.label.clone(),
                message: format!("dual block has size {}, expected {}", yb.size, b.size),
            });
        }
    }

    let checked: Vec<(RationalBlock, PsdWitness, Option<String>)> =
        y.par_iter().map(|b| repair_psd(b, denominator)).collect();
    if let Some((i, _)) = checked.iter().enumerate().find(|(_, c)| !c.1.psd) {
        return Err(Error::Verification(format!("block {} is not PSD after repair", sf.blocks[i].label)));
    }

    let pairings: Vec<Vec<BigRational>> =
        (0..sf.blocks.len()).into_par_iter().map(|bi| block_pairings(sf, bi, &checked[bi].0)).collect();
    let mut total = vec![BigRational::zero(); sf.num_vars + 1];
    for p in &pairings {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    let dual_value = &sf.objective_constant + &total[0];
    let residuals: Vec<BigRational> = sf.objective.iter().zip(&total[1..]).map(|(c, t)| t + c).collect();
    let raw = raw_bound(&dual_value, &residuals);
    let floor = raw.floor().to_integer();

    let claimed = BigRational::from_float(solver_dual + OBJECTIVE_TOLERANCE)
        .map(|v| v.floor().to_integer())
        .unwrap_or_else(|| floor.clone());
    let blocks: Vec<BlockCheck> = sf
        .blocks
        .iter()
        .zip(&checked)
        .map(|(b, (_, w, r))| BlockCheck { label: b.label.clone(), witness: w.clone(), repair: r.clone() })
        .collect();
    let status = if floor <= claimed {
        CertStatus::Certified
    } else {
        CertStatus::Uncertified(uncertified_reason(&blocks, &residuals, &raw, solver_dual))
    };

    Ok(Certificate {
        model_digest: sf.digest.clone(),
        denominator,
        y: checked.into_iter().map(|c| c.0).collect(),
        residuals,
        dual_value,
        raw_bound: raw,
        certified_integer_bound: floor,
        blocks,
        solver_dual,
        status,
    })
}

fn uncertified_reason(blocks: &[BlockCheck], residuals: &[BigRational], raw: &BigRational, solver: f64) -> String {
    let mut why = format!("exact bound {:.6} exceeds the solver value {solver:.6}", ratio_to_f64(raw));
    let heavy: Vec<String> = blocks
        .iter()
        .filter_map(|b| match &b.repair {
            Some(r) if !r.starts_with("negative eigenvalues clipped") => Some(format!("{} ({r})", b.label)),
            _ => None,
        })
        .collect();
    let clipped: Vec<&str> = blocks
        .iter()
        .filter(|b| b.repair.as_deref().is_some_and(|r| r.starts_with("negative eigenvalues clipped")))
        .map(|b| b.label.as_str())
        .collect();
    if !heavy.is_empty() {
        let _ = write!(why, "; blocks needing repair: {}", heavy.join(", "));
    } else if !clipped.is_empty() {
        let _ = write!(why, "; blocks with clipped eigenvalues: {}", clipped.join(", "));
    }
    if let Some((i, e)) = residuals.iter().enumerate().filter(|(_, e)| e.is_positive()).max_by(|a, b| a.1.cmp(b.1))
    {
        let _ = write!(why, "; largest residual x{i} = {:.3e}", ratio_to_f64(e));
    }
    why
}

/// Rationalize a solver solution and certify it.
pub fn verify_solution(sf: &StandardForm, solution: &SolverSolution, denominator: u64) -> Result<Certificate> {
    let y = rationalize_dual(solution, sf, denominator)?;
    certified_bound(sf, &y, solution.dual_objective, denominator)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RowCheck {
    pub tag: String,
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeasibilityReport {
    pub rows: Vec<RowCheck>,
    /// Smallest eigenvalue of each normalized PSD block.
    pub block_min_eigenvalues: Vec<(String, f64)>,
    pub objective: f64,
    pub pass: bool,
}

impl FeasibilityReport {
    pub fn failures(&self, tol: f64) -> Vec<String> {
        let rows = self.rows.iter().filter(|r| r.slack < -tol).map(|r| format!("{} (slack {:.3e})", r.tag, r.slack));
        let blocks = self
            .block_min_eigenvalues
            .iter()
            .filter(|(_, e)| *e < -tol)
            .map(|(l, e)| format!("{l} (eigenvalue {e:.3e})"));
        rows.chain(blocks).collect()
    }
}

/// Check values given per variable class against every model constraint.
pub fn check_feasible(model: &SdpModel, class_values: &[f64], tol: f64) -> FeasibilityReport {
    let mut rows = Vec::new();
    let pin = ratio_to_f64(&model.pin());
    for (k, class) in model.classes.iter().enumerate() {
        let v = class_values.get(k).copied().unwrap_or(0.0);
        if class.forced_zero {
            rows.push(RowCheck { tag: format!("class {k} forced zero"), slack: -v.abs() });
        } else if model.var_of_class(k).is_none() {
            rows.push(RowCheck { tag: "pin".into(), slack: -(v - pin).abs() });
        }
    }
    let vars: Vec<f64> =
        model.variables.iter().map(|&c| class_values.get(c).copied().unwrap_or(0.0)).collect();
    for (k, v) in vars.iter().enumerate() {
        rows.push(RowCheck { tag: format!("x{k} >= 0"), slack: *v });
        rows.push(RowCheck { tag: format!("x{k} <= 1"), slack: 1.0 - v });
    }
    for lc in &model.linear {
        rows.push(RowCheck { tag: lc.tag.clone(), slack: lc.slack_f64(&vars) });
    }
    let block_min_eigenvalues: Vec<(String, f64)> = model
        .psd_blocks
        .par_iter()
        .map(|b| {
            let m = b.evaluate(&vars);
            let e = if m.nrows() == 0 { 0.0 } else { m.symmetric_eigenvalues().min() };
            (b.label(), e)
        })
        .collect();
    let objective = model.objective.eval_f64(&vars);
    let pass = rows.iter().all(|r| r.slack >= -tol) && block_min_eigenvalues.iter().all(|(_, e)| *e >= -tol);
    FeasibilityReport { rows, block_min_eigenvalues, objective, pass }
}

/// `true` when `c.x` at exact values stays below the certificate's bound.
pub fn bound_dominates(cert: &Certificate, objective_value: &BigRational) -> bool {
    objective_value <= &cert.raw_bound
}
