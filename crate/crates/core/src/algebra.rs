//! Orbits of the split isometry group on pairs of words, and the explicit
//! block diagonalization of the m-split Terwilliger algebra.
//!
//! The algebra for a split shape `(n_1, ..., n_m)` is the tensor product of
//! the per-part Terwilliger algebras, so every block is indexed by a vector
//! `k` with `0 <= k_p <= n_p / 2`, has rows labelled by weight vectors with
//! `k_p <= i_p <= n_p - k_p`, and its entries are products of per-part
//! coefficients `beta`. Row normalizers are kept as integers (`row_weights`);
//! the entry actually handed to a numerical solver is
//! `S_rc / sqrt(w_r * w_c)`, where `S_rc` is the exact rational form stored
//! in the block.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::binom;
use crate::error::{Error, Result};
use crate::form::{ratio_to_f64, LinearForm};

/// Part sizes of a consecutive-coordinate partition of `{0, .., n-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SplitShape {
    parts: Vec<usize>,
}

impl SplitShape {
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidShape("a shape needs at least one part".into()));
        }
        if parts.iter().any(|&p| p == 0) {
            return Err(Error::InvalidShape(format!("zero-sized part in {parts:?}")));
        }
        Ok(Self { parts })
    }

    pub fn single(n: usize) -> Self {
        Self::new(vec![n]).expect("n must be positive")
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn m(&self) -> usize {
        self.parts.len()
    }

    pub fn n(&self) -> usize {
        self.parts.iter().sum()
    }

    /// First coordinate of every part.
    pub fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.parts
            .iter()
            .map(|&p| {
                let o = acc;
                acc += p;
                o
            })
            .collect()
    }

    /// How the parts of `self` group into the parts of `coarse`, if `coarse`
    /// is obtained by merging runs of consecutive parts.
    pub fn grouping_into(&self, coarse: &SplitShape) -> Result<Vec<std::ops::Range<usize>>> {
        let mut groups = Vec::with_capacity(coarse.m());
        let mut start = 0;
        for &target in &coarse.parts {
            let mut end = start;
            let mut acc = 0;
            while acc < target && end < self.parts.len() {
                acc += self.parts[end];
                end += 1;
            }
            if acc != target {
                return Err(Error::IncompatibleShapes {
                    fine: self.to_string(),
                    coarse: coarse.to_string(),
                });
            }
            groups.push(start..end);
            start = end;
        }
        if start != self.parts.len() {
            return Err(Error::IncompatibleShapes {
                fine: self.to_string(),
                coarse: coarse.to_string(),
            });
        }
        Ok(groups)
    }
}

impl fmt::Display for SplitShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.parts.iter().map(|p| p.to_string()).collect();
        write!(f, "({})", s.join(","))
    }
}

/// Orbit label `(i, j, t)` of a pair `(X, Y)`: per part, `|X|`, `|Y|` and
/// `|X ∩ Y|` restricted to that part.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OrbitProfile {
    pub i: Vec<usize>,
    pub j: Vec<usize>,
    pub t: Vec<usize>,
}

impl OrbitProfile {
    pub fn new(i: Vec<usize>, j: Vec<usize>, t: Vec<usize>) -> Self {
        Self { i, j, t }
    }

    pub fn zero(m: usize) -> Self {
        Self::new(vec![0; m], vec![0; m], vec![0; m])
    }

    /// The profile `(i, 0, 0)`.
    pub fn diagonal(i: Vec<usize>) -> Self {
        let m = i.len();
        Self::new(i, vec![0; m], vec![0; m])
    }

    pub fn m(&self) -> usize {
        self.i.len()
    }

    /// Part-wise `i + j - 2t`, the size of `X Δ Y` in each part.
    pub fn distance(&self) -> Vec<usize> {
        (0..self.m())
            .map(|p| self.i[p] + self.j[p] - 2 * self.t[p])
            .collect()
    }

    pub fn is_valid(&self, shape: &SplitShape) -> bool {
        let m = shape.m();
        if self.i.len() != m || self.j.len() != m || self.t.len() != m {
            return false;
        }
        (0..m).all(|p| {
            let n = shape.parts[p];
            let (i, j, t) = (self.i[p], self.j[p], self.t[p]);
            t <= i.min(j) && i + j - t <= n
        })
    }

    pub fn total_i(&self) -> usize {
        self.i.iter().sum()
    }

    pub fn total_j(&self) -> usize {
        self.j.iter().sum()
    }

    pub fn total_distance(&self) -> usize {
        self.distance().iter().sum()
    }
}

impl fmt::Display for OrbitProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = |x: &[usize]| x.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(",");
        write!(f, "i=({}) j=({}) t=({})", v(&self.i), v(&self.j), v(&self.t))
    }
}

/// Valid `(i, j, t)` triples for a single part of size `n`, lexicographic.
fn part_triples(n: usize) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for i in 0..=n {
        for j in 0..=n {
            for t in 0..=i.min(j) {
                if i + j - t <= n {
                    out.push((i, j, t));
                }
            }
        }
    }
    out
}

/// Every orbit profile of the shape, sorted lexicographically by `(i, j, t)`.
pub fn valid_profiles(shape: &SplitShape) -> Vec<OrbitProfile> {
    let per_part: Vec<Vec<(usize, usize, usize)>> =
        shape.parts.iter().map(|&n| part_triples(n)).collect();
    let m = shape.m();
    let mut out = Vec::new();
    let mut idx = vec![0usize; m];
    loop {
        let mut p = OrbitProfile::zero(m);
        for (q, &ix) in idx.iter().enumerate() {
            let (i, j, t) = per_part[q][ix];
            p.i[q] = i;
            p.j[q] = j;
            p.t[q] = t;
        }
        out.push(p);
        let mut q = m;
        loop {
            if q == 0 {
                out.sort();
                return out;
            }
            q -= 1;
            idx[q] += 1;
            if idx[q] < per_part[q].len() {
                break;
            }
            idx[q] = 0;
        }
    }
}

/// Block index `k`, one entry per part with `0 <= k_p <= n_p / 2`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BlockIndex(pub Vec<usize>);

impl BlockIndex {
    pub fn is_valid(&self, shape: &SplitShape) -> bool {
        self.0.len() == shape.m() && self.0.iter().zip(shape.parts()).all(|(&k, &n)| 2 * k <= n)
    }

    /// Block size `prod_p (n_p - 2 k_p + 1)`.
    pub fn size(&self, shape: &SplitShape) -> usize {
        self.0
            .iter()
            .zip(shape.parts())
            .map(|(&k, &n)| n - 2 * k + 1)
            .product()
    }
}

impl fmt::Display for BlockIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.0.iter().map(|p| p.to_string()).collect();
        write!(f, "k=({})", s.join(","))
    }
}

/// All block indices of the shape in lexicographic order.
pub fn block_indices(shape: &SplitShape) -> Vec<BlockIndex> {
    let mut out = vec![Vec::new()];
    for &n in shape.parts() {
        let mut next = Vec::new();
        for prefix in &out {
            for k in 0..=n / 2 {
                let mut v = prefix.clone();
                v.push(k);
                next.push(v);
            }
        }
        out = next;
    }
    out.into_iter().map(BlockIndex).collect()
}

/// Row labels of block `k`: weight vectors with `k_p <= i_p <= n_p - k_p`,
/// lexicographic.
pub fn block_rows(shape: &SplitShape, k: &BlockIndex) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for (&n, &kp) in shape.parts().iter().zip(&k.0) {
        let mut next = Vec::new();
        for prefix in &out {
            for i in kp..=n - kp {
                let mut v = prefix.clone();
                v.push(i);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// `beta_{i,j,k}^t = sum_u (-1)^(u-t) C(u,t) C(n-2k,u-k) C(n-k-u,i-u) C(n-k-u,j-u)`.
pub fn beta(i: usize, j: usize, k: usize, t: usize, n: usize) -> BigInt {
    let (i, j, k, t, n) = (i as i64, j as i64, k as i64, t as i64, n as i64);
    let mut acc = BigInt::zero();
    for u in k.max(t)..=(n - k).min(i).min(j) {
        let term = binom(u, t) * binom(n - 2 * k, u - k) * binom(n - k - u, i - u) * binom(n - k - u, j - u);
        if (u - t) % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc
}

/// Cached `beta` values for one `(n, k)`, indexed by `(i, j, t)` over
/// `0..=n` in each coordinate.
struct BetaTable {
    n: usize,
    values: Vec<BigInt>,
}

impl BetaTable {
    fn build(n: usize, k: usize) -> Self {
        let d = n + 1;
        let mut values = vec![BigInt::zero(); d * d * d];
        for i in k..=n - k {
            for j in k..=n - k {
                for t in 0..=i.min(j) {
                    values[(i * d + j) * d + t] = beta(i, j, k, t, n);
                }
            }
        }
        Self { n, values }
    }

    fn get(&self, i: usize, j: usize, t: usize) -> &BigInt {
        let d = self.n + 1;
        &self.values[(i * d + j) * d + t]
    }
}

fn beta_table(n: usize, k: usize) -> Arc<BetaTable> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<BetaTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = cache.lock().unwrap().get(&(n, k)) {
        return t.clone();
    }
    let table = Arc::new(BetaTable::build(n, k));
    cache.lock().unwrap().entry((n, k)).or_insert(table).clone()
}

/// `sqrt(num / den)`, kept exact until emission.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SqrtRatio {
    pub num: BigInt,
    pub den: BigInt,
}

impl SqrtRatio {
    pub fn to_f64(&self) -> f64 {
        ratio_to_f64(&BigRational::new(self.num.clone(), self.den.clone())).sqrt()
    }

    pub fn squared(&self) -> BigRational {
        BigRational::new(self.num.clone(), self.den.clone())
    }
}

/// Product over parts of the row normalizer `C(n_p - 2k_p, i_p - k_p)`.
pub fn row_weight(shape: &SplitShape, k: &BlockIndex, row: &[usize]) -> BigInt {
    shape
        .parts()
        .iter()
        .zip(&k.0)
        .zip(row)
        .map(|((&n, &kp), &i)| binom(n as i64 - 2 * kp as i64, i as i64 - kp as i64))
        .product()
}

/// Normalizer `alpha = prod_p [C(n_p-2k_p, i_p-k_p) C(n_p-2k_p, j_p-k_p)]^(-1/2)`.
pub fn alpha(i: &[usize], j: &[usize], k: &BlockIndex, shape: &SplitShape) -> Result<SqrtRatio> {
    if !k.is_valid(shape) || i.len() != shape.m() || j.len() != shape.m() {
        return Err(Error::OutOfRange(format!("block {k} does not fit shape {shape}")));
    }
    for p in 0..shape.m() {
        let (n, kp) = (shape.parts()[p], k.0[p]);
        if i[p] < kp || i[p] > n - kp || j[p] < kp || j[p] > n - kp {
            return Err(Error::OutOfRange(format!(
                "row {:?} / column {:?} outside block {k} of shape {shape}",
                i, j
            )));
        }
    }
    Ok(SqrtRatio {
        num: BigInt::from(1),
        den: row_weight(shape, k, i) * row_weight(shape, k, j),
    })
}

/// Which of the two positive semidefinite algebra elements a block images.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BlockFamily {
    /// Image of `sum x_p M_p`.
    Primary,
    /// Image of `sum (x_{(i+j-2t),0,0} - x_p) M_p`.
    Complement,
}

/// One explicit block of the block-diagonalized algebra, as a matrix of
/// affine forms in the unknowns supplied by the caller.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockSpec {
    pub family: BlockFamily,
    pub shape: SplitShape,
    pub block_index: BlockIndex,
    pub rows: Vec<Vec<usize>>,
    /// `prod_p C(n_p - 2k_p, i_p - k_p)` per row.
    pub row_weights: Vec<BigInt>,
    /// Row-major `size x size` unnormalized entries `S_rc`.
    pub entries: Vec<LinearForm>,
}

impl BlockSpec {
    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn entry(&self, r: usize, c: usize) -> &LinearForm {
        &self.entries[r * self.size() + c]
    }

    pub fn label(&self) -> String {
        let fam = match self.family {
            BlockFamily::Primary => "R",
            BlockFamily::Complement => "R'",
        };
        format!("{fam}{}{}", self.shape, self.block_index)
    }

    /// `1 / sqrt(w_r w_c)`.
    pub fn normalizer(&self, r: usize, c: usize) -> f64 {
        let w = &self.row_weights[r] * &self.row_weights[c];
        1.0 / w.to_f64().unwrap_or(f64::INFINITY).sqrt()
    }

    /// Normalized coefficient of unknown `var` at `(r, c)`.
    pub fn coefficient(&self, r: usize, c: usize, var: usize) -> f64 {
        ratio_to_f64(&self.entry(r, c).coeff(var)) * self.normalizer(r, c)
    }

    /// The normalized block at the given values of the unknowns.
    pub fn evaluate(&self, values: &[f64]) -> DMatrix<f64> {
        let n = self.size();
        DMatrix::from_fn(n, n, |r, c| self.entry(r, c).eval_f64(values) * self.normalizer(r, c))
    }

    /// The unnormalized block `S` at exact values. Congruent to the
    /// normalized block, so it is PSD exactly when the normalized one is.
    pub fn evaluate_exact(&self, values: &[BigRational]) -> Vec<BigRational> {
        self.entries.iter().map(|f| f.eval(values)).collect()
    }

    pub fn map_forms(&self, mut f: impl FnMut(&LinearForm) -> LinearForm) -> BlockSpec {
        BlockSpec {
            entries: self.entries.iter().map(&mut f).collect(),
            ..self.clone()
        }
    }
}

fn t_range(i: usize, j: usize, n: usize) -> std::ops::RangeInclusive<usize> {
    (i + j).saturating_sub(n)..=i.min(j)
}

/// Assemble block `k` of the image of `sum_p expr(p) M_p` (or of the
/// complement element for [`BlockFamily::Complement`]).
///
/// `expr` gives the affine form standing in for the coefficient of each orbit
/// profile; callers use it to merge profiles into variable classes, eliminate
/// pinned or vanishing coefficients, or substitute aggregates.
pub fn assemble_block(
    shape: &SplitShape,
    k: &BlockIndex,
    family: BlockFamily,
    expr: &(dyn Fn(&OrbitProfile) -> LinearForm + Sync),
) -> Result<BlockSpec> {
    if !k.is_valid(shape) {
        return Err(Error::OutOfRange(format!("block {k} does not fit shape {shape}")));
    }
    let m = shape.m();
    let rows = block_rows(shape, k);
    let size = rows.len();
    let tables: Vec<Arc<BetaTable>> = (0..m).map(|p| beta_table(shape.parts()[p], k.0[p])).collect();
    let row_weights: Vec<BigInt> = rows.iter().map(|r| row_weight(shape, k, r)).collect();

    let entries: Vec<LinearForm> = (0..size * size)
        .into_par_iter()
        .map(|idx| {
            let (ri, ci) = (idx / size, idx % size);
            let (iv, jv) = (&rows[ri], &rows[ci]);
            let ranges: Vec<Vec<usize>> = (0..m)
                .map(|p| t_range(iv[p], jv[p], shape.parts()[p]).collect())
                .collect();
            let mut form = LinearForm::zero();
            let mut pos = vec![0usize; m];
            if ranges.iter().any(|r| r.is_empty()) {
                return form;
            }
            loop {
                let t: Vec<usize> = (0..m).map(|p| ranges[p][pos[p]]).collect();
                let mut coeff = BigInt::from(1);
                for p in 0..m {
                    coeff *= tables[p].get(iv[p], jv[p], t[p]);
                    if coeff.is_zero() {
                        break;
                    }
                }
                if !coeff.is_zero() {
                    let profile = OrbitProfile::new(iv.clone(), jv.clone(), t);
                    match family {
                        BlockFamily::Primary => form.add_scaled_int(&expr(&profile), &coeff),
                        BlockFamily::Complement => {
                            let diag = OrbitProfile::diagonal(profile.distance());
                            form.add_scaled_int(&expr(&diag), &coeff);
                            form.add_scaled_int(&expr(&profile), &-coeff);
                        }
                    }
                }
                let mut q = m;
                loop {
                    if q == 0 {
                        return form;
                    }
                    q -= 1;
                    pos[q] += 1;
                    if pos[q] < ranges[q].len() {
                        break;
                    }
                    pos[q] = 0;
                }
            }
        })
        .collect();

    Ok(BlockSpec {
        family,
        shape: shape.clone(),
        block_index: k.clone(),
        rows,
        row_weights,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::binom_u64;

    #[test]
    fn profiles_of_length_one() {
        let got = valid_profiles(&SplitShape::single(1));
        let want = vec![
            OrbitProfile::new(vec![0], vec![0], vec![0]),
            OrbitProfile::new(vec![0], vec![1], vec![0]),
            OrbitProfile::new(vec![1], vec![0], vec![0]),
            OrbitProfile::new(vec![1], vec![1], vec![1]),
        ];
        assert_eq!(got, want);
    }

    #[test]
    fn profile_counts_match_algebra_dimension() {
        for n in 1..=14usize {
            let c = valid_profiles(&SplitShape::single(n)).len() as u64;
            assert_eq!(c, binom_u64(n as i64 + 3, 3));
        }
        for n1 in 1..=5usize {
            for n2 in 1..=(10 - n1) {
                let c = valid_profiles(&SplitShape::new(vec![n1, n2]).unwrap()).len() as u64;
                assert_eq!(c, binom_u64(n1 as i64 + 3, 3) * binom_u64(n2 as i64 + 3, 3));
            }
        }
    }

    #[test]
    fn every_enumerated_profile_is_valid() {
        let shape = SplitShape::new(vec![2, 3, 1]).unwrap();
        let all = valid_profiles(&shape);
        assert!(all.iter().all(|p| p.is_valid(&shape)));
        let mut sorted = all.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted, all);
    }

    #[test]
    fn beta_base_cases() {
        for n in 0..=12 {
            assert_eq!(beta(0, 0, 0, 0, n), BigInt::from(1));
        }
        for n in 0..=8 {
            for k in 0..=n / 2 {
                for i in 0..=n {
                    for j in 0..=n {
                        for t in 0..=n {
                            assert_eq!(beta(i, j, k, t, n), beta(j, i, k, t, n));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn alpha_values() {
        let shape = SplitShape::single(4);
        let a = alpha(&[1], &[1], &BlockIndex(vec![1]), &shape).unwrap();
        assert_eq!(a.to_f64(), 1.0);
        let a = alpha(&[2], &[2], &BlockIndex(vec![1]), &shape).unwrap();
        assert_eq!(a.squared(), BigRational::new(1.into(), 4.into()));
        assert_eq!(a.to_f64(), 0.5);
        assert!(alpha(&[0], &[2], &BlockIndex(vec![1]), &shape).is_err());

        let two = SplitShape::new(vec![4, 3]).unwrap();
        let k = BlockIndex(vec![1, 1]);
        let a2 = alpha(&[2, 1], &[3, 2], &k, &two).unwrap();
        let a_first = alpha(&[2], &[3], &BlockIndex(vec![1]), &SplitShape::single(4)).unwrap();
        let a_second = alpha(&[1], &[2], &BlockIndex(vec![1]), &SplitShape::single(3)).unwrap();
        assert_eq!(a2.squared(), a_first.squared() * a_second.squared());
    }

    #[test]
    fn corner_entry_of_first_block() {
        let shape = SplitShape::single(5);
        let b = assemble_block(&shape, &BlockIndex(vec![0]), BlockFamily::Primary, &|p| {
            if *p == OrbitProfile::zero(1) {
                LinearForm::var(0)
            } else {
                LinearForm::zero()
            }
        })
        .unwrap();
        assert_eq!(b.entry(0, 0), &LinearForm::var(0));
        assert_eq!(b.coefficient(0, 0, 0), 1.0);
    }

    #[test]
    fn block_dimension_identity() {
        for parts in [vec![1], vec![6], vec![2, 16], vec![3, 4, 5]] {
            let shape = SplitShape::new(parts.clone()).unwrap();
            let total: u64 = block_indices(&shape)
                .iter()
                .map(|k| (k.size(&shape) as u64).pow(2))
                .sum();
            let want: u64 = parts.iter().map(|&n| binom_u64(n as i64 + 3, 3)).product();
            assert_eq!(total, want, "{shape}");
        }
    }

    #[test]
    fn grouping() {
        let fine = SplitShape::new(vec![1, 2, 3]).unwrap();
        let coarse = SplitShape::new(vec![3, 3]).unwrap();
        assert_eq!(fine.grouping_into(&coarse).unwrap(), vec![0..2, 2..3]);
        assert!(fine.grouping_into(&SplitShape::new(vec![2, 4]).unwrap()).is_err());
        assert!(fine.grouping_into(&SplitShape::single(5)).is_err());
    }
}
