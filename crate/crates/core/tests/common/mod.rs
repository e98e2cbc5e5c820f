#![allow(dead_code)]

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use splitsdp_core::algebra::{
    assemble_block, block_indices, valid_profiles, BlockFamily, BlockSpec, OrbitProfile, SplitShape,
};
use splitsdp_core::combinatorics::{binom, krawtchouk};
use splitsdp_core::form::{ratio_to_f64, LinearForm};
use splitsdp_core::model::SdpModel;
use splitsdp_core::oracle::{dense_element, dense_generator, part_masks, pair_profile, CodeSample};
use splitsdp_core::sdpa::SolverCommand;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Every shape with `m` positive parts summing to `n`.
pub fn compositions(n: usize, m: usize) -> Vec<Vec<usize>> {
    if m == 1 {
        return if n >= 1 { vec![vec![n]] } else { Vec::new() };
    }
    let mut out = Vec::new();
    for first in 1..n {
        for mut rest in compositions(n - first, m - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

pub fn shapes(max_n: usize, max_m: usize) -> Vec<SplitShape> {
    let mut out = Vec::new();
    for n in 1..=max_n {
        for m in 1..=max_m {
            for parts in compositions(n, m) {
                out.push(SplitShape::new(parts).unwrap());
            }
        }
    }
    out
}

fn span(n: usize, gens: &[&str]) -> CodeSample {
    let gens = CodeSample::from_strings(gens).unwrap().words;
    let mut words = vec![0u64];
    for g in gens {
        let more: Vec<u64> = words.iter().map(|w| w ^ g).collect();
        words.extend(more);
    }
    CodeSample::new(n, words).unwrap()
}

fn random_code(rng: &mut ChaCha8Rng, n: usize, d: usize) -> CodeSample {
    let mut all: Vec<u64> = (0..1u64 << n).collect();
    all.shuffle(rng);
    let target = rng.gen_range(2..=12);
    let mut words: Vec<u64> = Vec::new();
    for w in all {
        if words.len() == target {
            break;
        }
        if words.iter().all(|&c| (c ^ w).count_ones() as usize >= d) {
            words.push(w);
        }
    }
    CodeSample::new(n, words).unwrap()
}

/// A named code and the even distance its model is built with.
pub struct CorpusCode {
    pub name: String,
    pub code: CodeSample,
    pub d: usize,
}

/// Fixed corpus of explicit codes: singleton, repetition, even weight,
/// extended Hamming and 20 random codes of distance at least 4.
pub fn corpus() -> Vec<CorpusCode> {
    let mut out = vec![
        CorpusCode { name: "singleton".into(), code: CodeSample::new(6, vec![0b101100]).unwrap(), d: 4 },
        CorpusCode { name: "repetition-6".into(), code: span(6, &["111111"]), d: 6 },
        CorpusCode { name: "repetition-7".into(), code: span(7, &["1111111"]), d: 4 },
        CorpusCode {
            name: "even-weight-6".into(),
            code: span(6, &["110000", "011000", "001100", "000110", "000011"]),
            d: 2,
        },
        CorpusCode {
            name: "extended-hamming".into(),
            code: span(8, &["11110000", "00111100", "00001111", "01010101"]),
            d: 4,
        },
    ];
    let mut r = rng(4);
    let mut k = 0;
    while k < 20 {
        let n = r.gen_range(5..=8);
        let code = random_code(&mut r, n, 4);
        if code.min_distance().is_some_and(|d| d >= 4) {
            out.push(CorpusCode { name: format!("random-{k} (n={n}, |C|={})", code.len()), code, d: 4 });
            k += 1;
        }
    }
    out
}

/// The shapes each corpus code is checked at.
pub fn corpus_shapes(n: usize) -> Vec<SplitShape> {
    let mut out = vec![SplitShape::single(n), SplitShape::new(vec![2, n - 2]).unwrap()];
    if n >= 4 {
        out.push(SplitShape::new(vec![1, 2, n - 3]).unwrap());
    }
    out
}

fn min_eigen(m: DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.symmetric_eigen().eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Exact slacks for the linear rows and boxes, floating eigenvalues for the
/// blocks, and the exact objective.
pub fn assert_code_feasible(model: &SdpModel, x: &HashMap<OrbitProfile, BigRational>, size: usize) -> Result<(), String> {
    let vars = model.variable_values(x);
    for (k, v) in vars.iter().enumerate() {
        if v.is_negative() || *v > BigRational::one() {
            return Err(format!("box violated by x{k} = {v}"));
        }
    }
    for row in &model.linear {
        if row.slack(&vars).is_negative() {
            return Err(format!("{} violated by {}", row.tag, -row.slack(&vars)));
        }
    }
    let fv: Vec<f64> = vars.iter().map(ratio_to_f64).collect();
    for b in &model.psd_blocks {
        let e = min_eigen(b.evaluate(&fv));
        if e < -1e-9 {
            return Err(format!("{} has eigenvalue {e}", b.label()));
        }
    }
    let obj = model.objective_value(&vars);
    if obj != BigRational::from_integer(size.into()) {
        return Err(format!("objective {obj} differs from |C| = {size}"));
    }
    for (p, v) in model.profile_values(&vars) {
        let class = model.class_of(&p).unwrap();
        let ok = if class.forced_zero { x[&p].is_zero() } else { x[&p] == v };
        if !ok {
            return Err(format!("profile {p} has {} but its class says {v}", x[&p]));
        }
    }
    Ok(())
}

fn on_path(program: &str) -> bool {
    std::env::var_os("PATH")
        .map(|paths| std::env::split_paths(&paths).any(|dir| dir.join(program).is_file()))
        .unwrap_or(false)
}

pub fn adapter_script() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../tools/sdpa_cvxopt.py")
}

/// `SPLITSDP_SOLVER`, else `csdp` on the path, else the cvxopt adapter when
/// python can import cvxopt.
pub fn solver() -> Option<(SolverCommand, String)> {
    if let Ok(cmd) = std::env::var("SPLITSDP_SOLVER") {
        if !cmd.trim().is_empty() {
            return Some((SolverCommand::new(cmd.clone()), cmd));
        }
    }
    if on_path("csdp") {
        return Some((SolverCommand::new("csdp"), "csdp".into()));
    }
    let cvxopt = std::process::Command::new("python3")
        .args(["-c", "import cvxopt"])
        .stdout(std::process::Stdio::null())
        .stderr(std::process::Stdio::null())
        .status()
        .map(|s| s.success())
        .unwrap_or(false);
    if cvxopt {
        let cmd = format!("python3 {}", adapter_script().display());
        return Some((SolverCommand::new(cmd.clone()), cmd));
    }
    None
}

pub fn random_element(rng: &mut ChaCha8Rng, shape: &SplitShape) -> HashMap<OrbitProfile, f64> {
    valid_profiles(shape).into_iter().map(|p| (p, rng.gen_range(-3i32..=3) as f64)).collect()
}

pub fn dense(shape: &SplitShape, coeff: &HashMap<OrbitProfile, f64>) -> DMatrix<f64> {
    dense_element(shape, &|p| coeff.get(p).copied().unwrap_or(0.0)).unwrap()
}

/// Coefficients of a dense matrix that is constant on every orbit.
pub fn coefficients(shape: &SplitShape, m: &DMatrix<f64>) -> Result<HashMap<OrbitProfile, f64>, String> {
    let masks = part_masks(shape);
    let mut out: HashMap<OrbitProfile, f64> = HashMap::new();
    for x in 0..m.nrows() {
        for y in 0..m.ncols() {
            let p = pair_profile(&masks, x as u64, y as u64);
            let v = m[(x, y)];
            match out.get(&p) {
                Some(&old) if old != v => return Err(format!("{shape}: matrix is not constant on orbit {p}")),
                Some(_) => {}
                None => {
                    out.insert(p, v);
                }
            }
        }
    }
    Ok(out)
}

pub fn images(shape: &SplitShape, coeff: &HashMap<OrbitProfile, f64>) -> Vec<BlockSpec> {
    let exact: HashMap<OrbitProfile, BigRational> =
        coeff.iter().map(|(p, v)| (p.clone(), BigRational::from_float(*v).unwrap())).collect();
    let expr = |p: &OrbitProfile| exact.get(p).cloned().map(LinearForm::constant).unwrap_or_else(LinearForm::zero);
    block_indices(shape)
        .iter()
        .map(|k| assemble_block(shape, k, BlockFamily::Primary, &expr).unwrap())
        .collect()
}

/// `S_a W^-1 S_b`, the unnormalized form of the product of normalized blocks.
fn block_product(a: &BlockSpec, b: &BlockSpec) -> Vec<BigRational> {
    let n = a.size();
    let ea = a.evaluate_exact(&[]);
    let eb = b.evaluate_exact(&[]);
    let mut out = vec![BigRational::zero(); n * n];
    for r in 0..n {
        for c in 0..n {
            let mut acc = BigRational::zero();
            for k in 0..n {
                acc += &ea[r * n + k] * &eb[k * n + c] / BigRational::from_integer(a.row_weights[k].clone());
            }
            out[r * n + c] = acc;
        }
    }
    out
}

/// Image of a product equals the product of images, exactly and within
/// `1e-9` after normalization.
pub fn check_homomorphism(shape: &SplitShape, samples: usize, rng: &mut ChaCha8Rng) -> Result<(), String> {
    for _ in 0..samples {
        let a = random_element(rng, shape);
        let b = random_element(rng, shape);
        let c = coefficients(shape, &(dense(shape, &a) * dense(shape, &b)))?;
        let (ia, ib, ic) = (images(shape, &a), images(shape, &b), images(shape, &c));
        for ((ba, bb), bc) in ia.iter().zip(&ib).zip(&ic) {
            if block_product(ba, bb) != bc.evaluate_exact(&[]) {
                return Err(format!("{shape}: product mismatch in block {}", bc.block_index));
            }
            let diff = (ba.evaluate(&[]) * bb.evaluate(&[]) - bc.evaluate(&[])).abs().max();
            if diff > 1e-9 * (1.0 + bc.evaluate(&[]).abs().max()) {
                return Err(format!("{shape}: normalized product off by {diff:e} in block {}", bc.block_index));
            }
        }
    }
    Ok(())
}

fn identity(shape: &SplitShape) -> HashMap<OrbitProfile, f64> {
    valid_profiles(shape)
        .into_iter()
        .map(|p| {
            let v = if p.i == p.j && p.j == p.t { 1.0 } else { 0.0 };
            (p, v)
        })
        .collect()
}

fn add_scaled(a: &HashMap<OrbitProfile, f64>, b: &HashMap<OrbitProfile, f64>, s: f64) -> HashMap<OrbitProfile, f64> {
    a.iter().map(|(p, v)| (p.clone(), v + s * b.get(p).copied().unwrap_or(0.0))).collect()
}

/// Dense element PSD exactly when all blocks are, on `pairs` pairs of a PSD
/// element `B B^T + I/4` and a shift of it with smallest eigenvalue `-1/4`.
pub fn check_psd_equivalence(pairs: usize, rng: &mut ChaCha8Rng) -> Result<(), String> {
    let pool: Vec<SplitShape> = shapes(6, 3).into_iter().filter(|s| s.n() >= 2).collect();
    for _ in 0..pairs {
        let shape = pool[rng.gen_range(0..pool.len())].clone();
        let b = random_element(rng, &shape);
        let db = dense(&shape, &b);
        let gram = coefficients(&shape, &(&db * db.transpose()))?;
        let id = identity(&shape);
        let psd = add_scaled(&gram, &id, 0.25);
        let lowest = min_eigen(dense(&shape, &psd));
        let shift = (lowest + 0.25).round();
        let not_psd = add_scaled(&psd, &id, -(shift + 0.25).max(0.5));
        for (what, elem, expect) in [("psd", &psd, true), ("shifted", &not_psd, false)] {
            let dense_min = min_eigen(dense(&shape, elem));
            let block_min = images(&shape, elem)
                .iter()
                .map(|b| min_eigen(b.evaluate(&[])))
                .fold(f64::INFINITY, f64::min);
            let scale = 1.0 + dense_min.abs();
            if (dense_min >= -1e-9) != (block_min >= -1e-9 * scale) || (dense_min >= -1e-9) != expect {
                return Err(format!("{shape} {what}: dense min {dense_min}, block min {block_min}"));
            }
            if (dense_min - block_min).abs() > 1e-8 * scale {
                return Err(format!("{shape} {what}: spectra differ, {dense_min} vs {block_min}"));
            }
        }
    }
    Ok(())
}

/// Generators of every two-part shape with `n1 + n2 <= max_n` are Kronecker
/// products of unsplit generators. Returns the number of profiles checked.
pub fn check_tensor_identity(max_n: usize) -> Result<usize, String> {
    use rayon::prelude::*;
    let mut checked = 0;
    for n in 2..=max_n {
        for parts in compositions(n, 2) {
            let shape = SplitShape::new(parts.clone()).unwrap();
            let ones = |n1: usize| -> HashMap<OrbitProfile, DMatrix<u8>> {
                valid_profiles(&SplitShape::single(n1))
                    .into_iter()
                    .map(|p| {
                        let g = dense_generator(&SplitShape::single(n1), &p).unwrap();
                        (p, g)
                    })
                    .collect()
            };
            let (g1, g2) = (ones(parts[0]), ones(parts[1]));
            let profiles = valid_profiles(&shape);
            let total = profiles
                .par_iter()
                .map(|p| {
                    let left = &g1[&OrbitProfile::new(vec![p.i[0]], vec![p.j[0]], vec![p.t[0]])];
                    let right = &g2[&OrbitProfile::new(vec![p.i[1]], vec![p.j[1]], vec![p.t[1]])];
                    let g = dense_generator(&shape, p).unwrap();
                    if g != left.kronecker(right) {
                        return Err(format!("{shape}: generator {p} is not a Kronecker product"));
                    }
                    Ok(g.map(u32::from))
                })
                .try_reduce(|| DMatrix::zeros(1 << n, 1 << n), |a, b| Ok(a + b))?;
            if total.iter().any(|&v| v != 1) {
                return Err(format!("{shape}: generators do not partition all pairs"));
            }
            checked += profiles.len();
        }
    }
    Ok(checked)
}

/// `sum_k N_k^2 = prod_p C(n_p + 3, 3)` for every shape up to `max_n` with at
/// most `max_m` parts. Returns the number of shapes.
pub fn check_dimensions(max_n: usize, max_m: usize) -> Result<usize, String> {
    let all = shapes(max_n, max_m);
    for shape in &all {
        let lhs: BigInt = block_indices(shape).iter().map(|k| BigInt::from(k.size(shape)).pow(2)).sum();
        let rhs: BigInt = shape.parts().iter().map(|&n| binom(n as i64 + 3, 3)).product();
        if lhs != rhs {
            return Err(format!("{shape}: blocks give {lhs}, expected {rhs}"));
        }
        if shape.n() <= 12 && BigInt::from(valid_profiles(shape).len()) != rhs {
            return Err(format!("{shape}: {} profiles, expected {rhs}", valid_profiles(shape).len()));
        }
    }
    Ok(all.len())
}

/// Split distance distribution of a code straight from its pairs, divided
/// by `|C|`, keyed by the per-part weights of `x ^ y`.
pub fn split_distribution(code: &CodeSample, shape: &SplitShape) -> HashMap<Vec<usize>, BigRational> {
    let masks = part_masks(shape);
    let mut counts: HashMap<Vec<usize>, u64> = HashMap::new();
    for &x in &code.words {
        for &y in &code.words {
            let key: Vec<usize> = masks.iter().map(|m| ((x ^ y) & m).count_ones() as usize).collect();
            *counts.entry(key).or_insert(0) += 1;
        }
    }
    counts
        .into_iter()
        .map(|(k, c)| (k, BigRational::new(c.into(), code.len().into())))
        .collect()
}

/// Every value of the split Krawtchouk transform, computed from the pairs.
pub fn krawtchouk_transform(code: &CodeSample, shape: &SplitShape) -> Vec<(Vec<usize>, BigRational)> {
    let dist = split_distribution(code, shape);
    let mut ks: Vec<Vec<usize>> = vec![Vec::new()];
    for &n in shape.parts() {
        ks = ks
            .into_iter()
            .flat_map(|p| {
                (0..=n).map(move |k| {
                    let mut v = p.clone();
                    v.push(k);
                    v
                })
            })
            .collect();
    }
    ks.into_iter()
        .map(|k| {
            let mut acc = BigRational::zero();
            for (i, a) in &dist {
                let mut kv = BigInt::one();
                for p in 0..shape.m() {
                    kv *= krawtchouk(k[p] as i64, shape.parts()[p] as i64, i[p] as i64);
                }
                acc += a * BigRational::from_integer(kv);
            }
            (k, acc)
        })
        .collect()
}

/// `x` of every corpus code satisfies its model at each corpus shape.
pub fn check_corpus_feasible(codes: &[CorpusCode]) -> Result<usize, String> {
    use splitsdp_core::bounds::BoundTable;
    use splitsdp_core::model::{build_model, ModelOptions};
    use splitsdp_core::oracle::code_x;
    let table = BoundTable::builtin();
    let mut checked = 0;
    for c in codes {
        for shape in corpus_shapes(c.code.n) {
            let model = build_model(&shape, c.d, &table, &ModelOptions::default()).map_err(|e| e.to_string())?;
            let x = code_x(&c.code, &shape).map_err(|e| e.to_string())?;
            assert_code_feasible(&model, &x, c.code.len()).map_err(|e| format!("{} at {shape}: {e}", c.name))?;
            checked += 1;
        }
    }
    Ok(checked)
}

fn same_values(
    a: &HashMap<OrbitProfile, BigRational>,
    b: &HashMap<OrbitProfile, BigRational>,
    shape: &SplitShape,
) -> Result<(), OrbitProfile> {
    for p in valid_profiles(shape) {
        let va = a.get(&p).cloned().unwrap_or_else(BigRational::zero);
        let vb = b.get(&p).cloned().unwrap_or_else(BigRational::zero);
        if va != vb {
            return Err(p);
        }
    }
    Ok(())
}

fn agg(
    x: &HashMap<OrbitProfile, BigRational>,
    fine: &SplitShape,
    coarse: &SplitShape,
) -> HashMap<OrbitProfile, BigRational> {
    splitsdp_core::model::aggregate(x, fine, coarse).unwrap()
}

/// Three-part counts and unknowns aggregate to the two-part and unsplit
/// ones, by either route.
pub fn check_aggregation(codes: &[CorpusCode]) -> Result<usize, String> {
    use splitsdp_core::oracle::{code_x, lambda_counts};
    let mut checked = 0;
    for c in codes {
        let n = c.code.n;
        let fine = SplitShape::new(vec![1, 2, n - 3]).unwrap();
        let mid = SplitShape::new(vec![3, n - 3]).unwrap();
        let one = SplitShape::single(n);
        let lam = |s: &SplitShape| lambda_counts(&c.code, s).unwrap();
        let err = |what: &str| format!("{}: {what}", c.name);
        if lam(&fine).aggregate(&mid).unwrap() != lam(&mid) {
            return Err(err("3-part counts do not sum to 2-part counts"));
        }
        if lam(&fine).aggregate(&one).unwrap() != lam(&one) || lam(&mid).aggregate(&one).unwrap() != lam(&one) {
            return Err(err("split counts do not sum to unsplit counts"));
        }
        if lam(&one).total() != (c.code.len() as u64).pow(3) {
            return Err(err("counts do not total |C|^3"));
        }
        let (xf, xm, x1) = (code_x(&c.code, &fine).unwrap(), code_x(&c.code, &mid).unwrap(), code_x(&c.code, &one).unwrap());
        same_values(&agg(&xf, &fine, &mid), &xm, &mid).map_err(|p| err(&format!("3 to 2 differs at {p}")))?;
        same_values(&agg(&xm, &mid, &one), &x1, &one).map_err(|p| err(&format!("2 to 1 differs at {p}")))?;
        same_values(&agg(&xf, &fine, &one), &x1, &one).map_err(|p| err(&format!("3 to 1 differs at {p}")))?;
        let down = agg(&xf, &fine, &mid);
        let chained = agg(&down, &mid, &one);
        same_values(&chained, &agg(&xf, &fine, &one), &one).map_err(|p| err(&format!("routes differ at {p}")))?;
        checked += 1;
    }
    Ok(checked)
}

/// The split Krawtchouk transform of every corpus code is nonnegative and
/// matches the transform of the model's distance distribution.
pub fn check_delsarte(codes: &[CorpusCode]) -> Result<usize, String> {
    use splitsdp_core::model::delsarte_check;
    use splitsdp_core::oracle::code_x;
    let mut checked = 0;
    for c in codes {
        for shape in corpus_shapes(c.code.n) {
            let direct = krawtchouk_transform(&c.code, &shape);
            let via_x = delsarte_check(&code_x(&c.code, &shape).unwrap(), &shape);
            if direct != via_x {
                return Err(format!("{} at {shape}: transforms disagree", c.name));
            }
            if let Some((k, v)) = direct.iter().find(|(_, v)| v.is_negative()) {
                return Err(format!("{} at {shape}: transform at {k:?} is {v}", c.name));
            }
            let total: BigRational = split_distribution(&c.code, &shape).values().cloned().sum();
            if total != BigRational::from_integer(c.code.len().into()) {
                return Err(format!("{} at {shape}: distribution sums to {total}", c.name));
            }
            checked += direct.len();
        }
    }
    Ok(checked)
}
