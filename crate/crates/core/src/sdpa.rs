//! Standard form, SDPA sparse files, solver subprocesses and solution files.
//!
//! The model is brought to `maximize const + c.x` subject to
//! `F(x) = G_0 + sum_i x_i G_i` positive semidefinite, block diagonal. The
//! SDPA file states the equivalent minimization `min -c.x` with
//! `sum_i x_i G_i - (-G_0)`, so an SDPA dual matrix `Y` satisfies
//! `tr(G_i Y) + c_i = 0` at optimality.
//!
//! Dense block entries are kept exactly as `S_rc`, with the solver seeing
//! `S_rc / sqrt(w_r w_c)`. Diagonal blocks carry the linear rows and the box
//! `0 <= x <= 1`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::Duration;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use wait_timeout::ChildExt;

use crate::error::{Error, Result};
use crate::form::{int, ratio_to_f64, LinearForm};
use crate::model::{Relation, SdpModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    Dense,
    Diagonal,
}

/// One nonzero of matrix `mat` (0 for `G_0`, `i + 1` for `G_i`) in the upper
/// triangle of a block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StdEntry {
    pub mat: usize,
    pub row: usize,
    pub col: usize,
    pub value: BigRational,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StdBlock {
    pub label: String,
    pub kind: BlockKind,
    pub size: usize,
    /// Entry `(r, c)` is scaled by `1 / sqrt(w_r w_c)` for the solver.
    pub row_weights: Vec<BigInt>,
    /// Sorted by `(mat, row, col)`.
    pub entries: Vec<StdEntry>,
    /// Description of each diagonal position, empty for dense blocks.
    pub row_labels: Vec<String>,
}

impl StdBlock {
    pub fn scale(&self, r: usize, c: usize) -> f64 {
        if self.kind == BlockKind::Diagonal {
            return 1.0;
        }
        let w = &self.row_weights[r] * &self.row_weights[c];
        1.0 / w.to_f64().unwrap_or(f64::INFINITY).sqrt()
    }

    pub fn solver_value(&self, e: &StdEntry) -> f64 {
        ratio_to_f64(&e.value) * self.scale(e.row, e.col)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StandardForm {
    pub num_vars: usize,
    /// Whether a variable was added because the model had none.
    pub padded: bool,
    pub objective: Vec<BigRational>,
    pub objective_constant: BigRational,
    pub blocks: Vec<StdBlock>,
    pub digest: String,
}

fn push_sym(entries: &mut Vec<StdEntry>, mat: usize, r: usize, c: usize, value: BigRational) {
    if value.is_zero() {
        return;
    }
    let (row, col) = if r <= c { (r, c) } else { (c, r) };
    entries.push(StdEntry { mat, row, col, value });
}

impl StandardForm {
    pub fn from_model(model: &SdpModel) -> Result<Self> {
        let padded = model.num_vars() == 0;
        let num_vars = model.num_vars().max(1);
        if padded && model.psd_blocks.is_empty() && model.linear.is_empty() {
            return Err(Error::EmptyModel);
        }
        let mut objective = vec![BigRational::zero(); num_vars];
        for (v, c) in &model.objective.terms {
            objective[*v] = c.clone();
        }

        let mut blocks = Vec::new();
        for b in &model.psd_blocks {
            // Rows that vanish identically are dropped: they carry no
            // constraint and leave the problem without an interior point.
            let keep: Vec<usize> = (0..b.size())
                .filter(|&r| (0..b.size()).any(|c| *b.entry(r, c) != LinearForm::zero()))
                .collect();
            if keep.is_empty() {
                continue;
            }
            let mut entries = Vec::new();
            let n = keep.len();
            for r in 0..n {
                for c in r..n {
                    let f = b.entry(keep[r], keep[c]);
                    push_sym(&mut entries, 0, r, c, f.constant.clone());
                    for (v, coeff) in &f.terms {
                        push_sym(&mut entries, v + 1, r, c, coeff.clone());
                    }
                }
            }
            entries.sort_by(|a, b| (a.mat, a.row, a.col).cmp(&(b.mat, b.row, b.col)));
            blocks.push(StdBlock {
                label: b.label(),
                kind: BlockKind::Dense,
                size: n,
                row_weights: keep.iter().map(|&r| b.row_weights[r].clone()).collect(),
                entries,
                row_labels: Vec::new(),
            });
        }

        // Rows `rhs - sum a x >= 0`, then `x >= 0` and `1 - x >= 0` per variable.
        let mut entries = Vec::new();
        let mut row_labels = Vec::new();
        let mut row = 0;
        for lc in &model.linear {
            let mut emit = |sign: &BigRational, tag: String| {
                push_sym(&mut entries, 0, row, row, sign * &lc.rhs);
                for (v, c) in &lc.coeffs {
                    push_sym(&mut entries, v + 1, row, row, -(sign * c));
                }
                row_labels.push(tag);
                row += 1;
            };
            emit(&BigRational::one(), lc.tag.clone());
            if lc.relation == Relation::Eq {
                emit(&-BigRational::one(), format!("{} (reversed)", lc.tag));
            }
        }
        for v in 0..num_vars {
            push_sym(&mut entries, v + 1, row, row, BigRational::one());
            row_labels.push(format!("x{v} >= 0"));
            row += 1;
            push_sym(&mut entries, 0, row, row, BigRational::one());
            push_sym(&mut entries, v + 1, row, row, -BigRational::one());
            row_labels.push(format!("x{v} <= 1"));
            row += 1;
        }
        entries.sort_by(|a, b| (a.mat, a.row, a.col).cmp(&(b.mat, b.row, b.col)));
        blocks.push(StdBlock {
            label: "linear".into(),
            kind: BlockKind::Diagonal,
            size: row,
            row_weights: vec![BigInt::one(); row],
            entries,
            row_labels,
        });

        Ok(Self {
            num_vars,
            padded,
            objective,
            objective_constant: model.objective.constant.clone(),
            blocks,
            digest: model.digest.clone(),
        })
    }

    /// `F(x)` of one block, as the solver sees it.
    pub fn slack_block(&self, block: usize, x: &[f64]) -> DMatrix<f64> {
        let b = &self.blocks[block];
        let mut m = DMatrix::zeros(b.size, b.size);
        for e in &b.entries {
            let coeff = if e.mat == 0 { 1.0 } else { x[e.mat - 1] };
            let v = b.solver_value(e) * coeff;
            m[(e.row, e.col)] += v;
            if e.row != e.col {
                m[(e.col, e.row)] += v;
            }
        }
        m
    }

    /// `F(x)` of one block at exact values, without the `1/sqrt(w_r w_c)`
    /// scaling (a congruent matrix).
    pub fn slack_block_exact(&self, block: usize, x: &[BigRational]) -> Vec<BigRational> {
        let b = &self.blocks[block];
        let mut m = vec![BigRational::zero(); b.size * b.size];
        for e in &b.entries {
            let v = if e.mat == 0 { e.value.clone() } else { &e.value * &x[e.mat - 1] };
            m[e.row * b.size + e.col] += &v;
            if e.row != e.col {
                m[e.col * b.size + e.row] += v;
            }
        }
        m
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        ratio_to_f64(&self.objective_constant)
            + self.objective.iter().zip(x).map(|(c, v)| ratio_to_f64(c) * v).sum::<f64>()
    }

    /// `const + tr(G_0 Y)` in floating point.
    pub fn dual_value(&self, y: &[DMatrix<f64>]) -> f64 {
        let mut acc = ratio_to_f64(&self.objective_constant);
        for (b, yb) in self.blocks.iter().zip(y) {
            for e in b.entries.iter().filter(|e| e.mat == 0) {
                let mult = if e.row == e.col { 1.0 } else { 2.0 };
                acc += mult * b.solver_value(e) * yb[(e.row, e.col)];
            }
        }
        acc
    }
}

/// SDPA sparse text for the standard form.
pub fn sdpa_text(sf: &StandardForm) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "\"model {}", sf.digest);
    let _ = writeln!(s, "{}", sf.num_vars);
    let _ = writeln!(s, "{}", sf.blocks.len());
    let sizes: Vec<String> = sf
        .blocks
        .iter()
        .map(|b| match b.kind {
            BlockKind::Dense => b.size.to_string(),
            BlockKind::Diagonal => format!("-{}", b.size),
        })
        .collect();
    let _ = writeln!(s, "{}", sizes.join(" "));
    let c: Vec<String> = sf.objective.iter().map(|v| format!("{:.16e}", -ratio_to_f64(v))).collect();
    let _ = writeln!(s, "{}", c.join(" "));
    let mut lines: Vec<(usize, usize, usize, usize, f64)> = Vec::new();
    for (bi, b) in sf.blocks.iter().enumerate() {
        for e in &b.entries {
            let mut v = b.solver_value(e);
            if e.mat == 0 {
                v = -v;
            }
            lines.push((e.mat, bi + 1, e.row + 1, e.col + 1, v));
        }
    }
    lines.sort_by(|a, b| (a.0, a.1, a.2, a.3).cmp(&(b.0, b.1, b.2, b.3)));
    for (mat, blk, r, c, v) in lines {
        let _ = writeln!(s, "{mat} {blk} {r} {c} {v:.16e}");
    }
    s
}

pub fn write_sdpa(sf: &StandardForm, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, sdpa_text(sf))?;
    Ok(())
}

/// Structure of an SDPA sparse file.
#[derive(Clone, Debug, PartialEq)]
pub struct SdpaProblem {
    pub num_vars: usize,
    /// Negative sizes mark diagonal blocks.
    pub block_sizes: Vec<i64>,
    pub c: Vec<f64>,
    /// `(mat, block, row, col, value)`, 1-based block/row/col.
    pub entries: Vec<(usize, usize, usize, usize, f64)>,
}

impl SdpaProblem {
    /// Nonzero count of every matrix `F_0 .. F_m`.
    pub fn nonzeros_per_matrix(&self) -> Vec<usize> {
        let mut out = vec![0; self.num_vars + 1];
        for e in &self.entries {
            out[e.0] += 1;
        }
        out
    }
}

/// Whitespace tokens with their byte offsets; `,`, `{`, `}`, `(`, `)` count
/// as whitespace as in SDPA files.
fn tokens(text: &str) -> Vec<(usize, &str)> {
    let is_sep = |c: char| c.is_whitespace() || matches!(c, ',' | '{' | '}' | '(' | ')');
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in text.char_indices() {
        if is_sep(ch) {
            if let Some(s) = start.take() {
                out.push((s, &text[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s, &text[s..]));
    }
    out
}

struct TokenStream<'a> {
    toks: Vec<(usize, &'a str)>,
    pos: usize,
    end: usize,
}

impl<'a> TokenStream<'a> {
    fn new(text: &'a str) -> Self {
        Self { toks: tokens(text), pos: 0, end: text.len() }
    }

    fn done(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.0)
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        let t = self.toks.get(self.pos).copied().ok_or_else(|| Error::Parse {
            offset: self.end,
            message: format!("unexpected end of input, expected {what}"),
        })?;
        self.pos += 1;
        Ok(t)
    }

    fn float(&mut self, what: &str) -> Result<f64> {
        let (off, t) = self.next(what)?;
        t.replace(['D', 'd'], "e").parse::<f64>().map_err(|_| Error::Parse {
            offset: off,
            message: format!("expected {what}, found {t:?}"),
        })
    }

    fn int(&mut self, what: &str) -> Result<i64> {
        let (off, t) = self.next(what)?;
        t.parse::<i64>().map_err(|_| Error::Parse {
            offset: off,
            message: format!("expected {what}, found {t:?}"),
        })
    }
}

pub fn parse_sdpa(text: &str) -> Result<SdpaProblem> {
    let body_start = text
        .lines()
        .take_while(|l| l.starts_with('"') || l.starts_with('*'))
        .map(|l| l.len() + 1)
        .sum::<usize>()
        .min(text.len());
    let mut ts = TokenStream::new(&text[body_start..]);
    let shift = |e: Error| match e {
        Error::Parse { offset, message } => Error::Parse { offset: offset + body_start, message },
        other => other,
    };
    let mut inner = || -> Result<SdpaProblem> {
        let m = ts.int("number of variables")?;
        let nb = ts.int("number of blocks")?;
        if m < 0 || nb <= 0 {
            return Err(Error::Parse { offset: 0, message: "bad header counts".into() });
        }
        let mut block_sizes = Vec::new();
        for _ in 0..nb {
            block_sizes.push(ts.int("block size")?);
        }
        let mut c = Vec::new();
        for _ in 0..m {
            c.push(ts.float("objective coefficient")?);
        }
        let mut entries = Vec::new();
        while !ts.done() {
            let off = ts.offset();
            let mat = ts.int("matrix number")?;
            let blk = ts.int("block number")?;
            let r = ts.int("row")?;
            let col = ts.int("column")?;
            let v = ts.float("value")?;
            if mat < 0 || mat > m || blk < 1 || blk > nb || r < 1 || col < 1 {
                return Err(Error::Parse { offset: off, message: "entry index out of range".into() });
            }
            let size = block_sizes[blk as usize - 1].unsigned_abs() as i64;
            if r > size || col > size {
                return Err(Error::Parse { offset: off, message: format!("entry outside block {blk}") });
            }
            entries.push((mat as usize, blk as usize, r as usize, col as usize, v));
        }
        Ok(SdpaProblem { num_vars: m as usize, block_sizes, c, entries })
    };
    inner().map_err(shift)
}

/// Primal and dual output of a solver, reshaped to the standard form.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverSolution {
    pub primal_x: Vec<f64>,
    /// Dual matrix `Y` per block, full symmetric.
    pub dual_y: Vec<DMatrix<f64>>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub solver_status: String,
}

/// Parse a solution in the CSDP format: the `x` vector, then lines
/// `matno block i j value` where matrix 1 is the primal slack and matrix 2
/// is the dual `Y`.
pub fn parse_solution(text: &str, sf: &StandardForm) -> Result<SolverSolution> {
    let mut ts = TokenStream::new(text);
    let mut x = Vec::with_capacity(sf.num_vars);
    for k in 0..sf.num_vars {
        x.push(ts.float(&format!("x{k}"))?);
    }
    let mut y: Vec<DMatrix<f64>> = sf.blocks.iter().map(|b| DMatrix::zeros(b.size, b.size)).collect();
    while !ts.done() {
        let off = ts.offset();
        let mat = ts.int("matrix number")?;
        let blk = ts.int("block number")?;
        let r = ts.int("row")?;
        let c = ts.int("column")?;
        let v = ts.float("value")?;
        if mat != 1 && mat != 2 {
            return Err(Error::Parse { offset: off, message: format!("matrix number {mat} is not 1 or 2") });
        }
        if blk < 1 || blk as usize > sf.blocks.len() {
            return Err(Error::ShapeMismatch {
                block: format!("#{blk}"),
                message: format!("the model has {} blocks", sf.blocks.len()),
            });
        }
        let b = &sf.blocks[blk as usize - 1];
        if r < 1 || c < 1 || r as usize > b.size || c as usize > b.size {
            return Err(Error::ShapeMismatch {
                block: b.label.clone(),
                message: format!("entry ({r}, {c}) outside a block of size {}", b.size),
            });
        }
        if b.kind == BlockKind::Diagonal && r != c {
            return Err(Error::ShapeMismatch {
                block: b.label.clone(),
                message: format!("off-diagonal entry ({r}, {c}) in a diagonal block"),
            });
        }
        if mat == 2 {
            let (r, c) = (r as usize - 1, c as usize - 1);
            y[blk as usize - 1][(r, c)] = v;
            y[blk as usize - 1][(c, r)] = v;
        }
    }
    let primal_objective = sf.objective_value(&x);
    let dual_objective = sf.dual_value(&y);
    Ok(SolverSolution {
        primal_x: x,
        dual_y: y,
        primal_objective,
        dual_objective,
        solver_status: "parsed".into(),
    })
}

pub fn read_solution(path: impl AsRef<Path>, sf: &StandardForm) -> Result<SolverSolution> {
    parse_solution(&std::fs::read_to_string(path)?, sf)
}

/// Write a solution in the same format, for tests and hand-made duals.
pub fn solution_text(sol: &SolverSolution, sf: &StandardForm) -> String {
    let mut s = String::new();
    let xs: Vec<String> = sol.primal_x.iter().map(|v| format!("{v:.16e}")).collect();
    let _ = writeln!(s, "{}", xs.join(" "));
    for (bi, (b, y)) in sf.blocks.iter().zip(&sol.dual_y).enumerate() {
        for r in 0..b.size {
            let cols = if b.kind == BlockKind::Diagonal { r..r + 1 } else { r..b.size };
            for c in cols {
                if y[(r, c)] != 0.0 {
                    let _ = writeln!(s, "2 {} {} {} {:.16e}", bi + 1, r + 1, c + 1, y[(r, c)]);
                }
            }
        }
    }
    s
}

/// How to start the solver: a command template where `{in}` and `{out}`
/// are replaced by the problem and solution paths (appended when absent).
#[derive(Clone, Debug)]
pub struct SolverCommand {
    pub template: String,
    pub timeout: Option<Duration>,
}

impl SolverCommand {
    pub fn new(template: impl Into<String>) -> Self {
        Self { template: template.into(), timeout: None }
    }

    pub fn with_timeout(mut self, t: Duration) -> Self {
        self.timeout = Some(t);
        self
    }

    pub fn argv(&self, input: &Path, output: &Path) -> Vec<String> {
        let mut words: Vec<String> = self.template.split_whitespace().map(String::from).collect();
        let has_in = words.iter().any(|w| w.contains("{in}"));
        let has_out = words.iter().any(|w| w.contains("{out}"));
        if !has_in {
            words.push("{in}".into());
        }
        if !has_out {
            words.push("{out}".into());
        }
        words
            .into_iter()
            .map(|w| {
                w.replace("{in}", &input.to_string_lossy())
                    .replace("{out}", &output.to_string_lossy())
            })
            .collect()
    }
}

/// Paths written by [`run_solver`].
#[derive(Clone, Debug)]
pub struct SolverFiles {
    pub problem: PathBuf,
    pub solution: PathBuf,
    pub log: PathBuf,
}

impl SolverFiles {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            problem: dir.join("model.dat-s"),
            solution: dir.join("solution.sol"),
            log: dir.join("solver.log"),
        }
    }
}

fn tail(text: &str, lines: usize) -> String {
    let all: Vec<&str> = text.lines().collect();
    all[all.len().saturating_sub(lines)..].join("\n")
}

/// Write the problem, run the solver and parse its solution.
///
/// Exit codes follow CSDP: 0 success, 3 partial success (accepted), 1 and 2
/// infeasibility, anything else failure.
pub fn run_solver(sf: &StandardForm, cmd: &SolverCommand, files: &SolverFiles) -> Result<SolverSolution> {
    write_sdpa(sf, &files.problem)?;
    if files.solution.exists() {
        std::fs::remove_file(&files.solution)?;
    }
    let argv = cmd.argv(&files.problem, &files.solution);
    let (prog, args) = argv.split_first().ok_or_else(|| Error::SolverSpawn {
        command: cmd.template.clone(),
        source: std::io::Error::new(std::io::ErrorKind::InvalidInput, "empty solver command"),
    })?;
    let log = std::fs::File::create(&files.log)?;
    let mut child = Command::new(prog)
        .args(args)
        .stdin(Stdio::null())
        .stdout(log.try_clone()?)
        .stderr(log)
        .spawn()
        .map_err(|source| Error::SolverSpawn { command: argv.join(" "), source })?;
    let status = match cmd.timeout {
        Some(t) => match child.wait_timeout(t)? {
            Some(s) => s,
            None => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(Error::SolverTimeout(t.as_secs()));
            }
        },
        None => child.wait()?,
    };
    let log_text = std::fs::read_to_string(&files.log).unwrap_or_default();
    let code = status.code();
    match code {
        Some(0) | Some(3) => {}
        Some(c @ (1 | 2)) => {
            return Err(Error::SolverInfeasible { code: c, detail: tail(&log_text, 5) });
        }
        other => return Err(Error::SolverFailed { code: other, detail: tail(&log_text, 5) }),
    }
    if !files.solution.exists() {
        return Err(Error::SolverFailed {
            code,
            detail: format!("no solution file at {}", files.solution.display()),
        });
    }
    let mut sol = read_solution(&files.solution, sf)?;
    sol.solver_status = if code == Some(0) { "optimal".into() } else { "partial".into() };
    Ok(sol)
}

/// Exact `x` from solver floats.
pub fn exact_values(x: &[f64]) -> Vec<BigRational> {
    x.iter()
        .map(|&v| BigRational::from_float(v).unwrap_or_else(|| int(0)))
        .collect()
}
