//! Brute-force ground truth for small lengths: dense generator matrices,
//! triple counts on explicit codes, the matrices `R` and `R'` built two ways,
//! exact code sizes by clique search, and the Delsarte bound.
//!
//! Words are bitmasks with coordinate 0 in the most significant bit, so the
//! first part of a split shape occupies the high bits and dense split
//! generators are Kronecker products of per-part generators in part order.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use crate::algebra::{valid_profiles, OrbitProfile, SplitShape};
use crate::combinatorics::multinom;
use crate::error::{Error, Result};
use crate::form::ratio_to_f64;

/// Largest length for dense `2^n x 2^n` matrices.
pub const DENSE_CAP: usize = 12;
/// Largest length for the rational `R` matrices.
pub const R_CAP: usize = 10;
/// Largest length for group averaging.
pub const AVERAGE_CAP: usize = 6;
/// Largest length for exhaustive code searches.
pub const SEARCH_CAP: usize = 11;

/// An explicit binary code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeSample {
    pub n: usize,
    pub words: Vec<u64>,
}

impl CodeSample {
    /// Sorts and deduplicates the words.
    pub fn new(n: usize, mut words: Vec<u64>) -> Result<Self> {
        if n > 63 {
            return Err(Error::CapExceeded(format!("length {n} exceeds 63")));
        }
        if let Some(w) = words.iter().find(|&&w| w >> n != 0) {
            return Err(Error::OutOfRange(format!("word {w:#b} is longer than {n}")));
        }
        words.sort_unstable();
        words.dedup();
        Ok(Self { n, words })
    }

    /// Words as 0/1 strings, coordinate 0 first.
    pub fn from_strings<S: AsRef<str>>(rows: &[S]) -> Result<Self> {
        let mut n = None;
        let mut words = Vec::new();
        for (k, row) in rows.iter().enumerate() {
            let row = row.as_ref().trim();
            if n.is_some_and(|len| len != row.len()) {
                return Err(Error::Parse {
                    offset: k,
                    message: format!("word {row:?} has a different length"),
                });
            }
            n = Some(row.len());
            let mut w = 0u64;
            for ch in row.chars() {
                w = (w << 1)
                    | match ch {
                        '0' => 0,
                        '1' => 1,
                        _ => {
                            return Err(Error::Parse {
                                offset: k,
                                message: format!("unexpected character {ch:?}"),
                            })
                        }
                    };
            }
            words.push(w);
        }
        Self::new(n.unwrap_or(0), words)
    }

    /// One codeword per line; blank lines and lines starting with `#` are skipped.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let rows: Vec<&str> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect();
        Self::from_strings(&rows)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Minimum pairwise distance, `None` for fewer than two words.
    pub fn min_distance(&self) -> Option<usize> {
        let mut best = None;
        for (a, &x) in self.words.iter().enumerate() {
            for &y in &self.words[a + 1..] {
                let d = (x ^ y).count_ones() as usize;
                best = Some(best.map_or(d, |b: usize| b.min(d)));
            }
        }
        best
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.words.iter().map(|w| format!("{:0width$b}", w, width = self.n)).collect()
    }
}

/// Bitmask of each part's coordinates.
pub fn part_masks(shape: &SplitShape) -> Vec<u64> {
    let n = shape.n();
    shape
        .offsets()
        .iter()
        .zip(shape.parts())
        .map(|(&o, &p)| ((1u64 << p) - 1) << (n - o - p))
        .collect()
}

/// Profile of the pair `(X, Y)`: per part `|X|`, `|Y|`, `|X ∩ Y|`.
pub fn pair_profile(masks: &[u64], x: u64, y: u64) -> OrbitProfile {
    OrbitProfile::new(
        masks.iter().map(|m| (x & m).count_ones() as usize).collect(),
        masks.iter().map(|m| (y & m).count_ones() as usize).collect(),
        masks.iter().map(|m| (x & y & m).count_ones() as usize).collect(),
    )
}

/// The 0/1 matrix with a 1 at `(X, Y)` exactly when the pair has `profile`.
pub fn dense_generator(shape: &SplitShape, profile: &OrbitProfile) -> Result<DMatrix<u8>> {
    let n = shape.n();
    if n > DENSE_CAP {
        return Err(Error::CapExceeded(format!("dense generators need n <= {DENSE_CAP}, got {n}")));
    }
    let masks = part_masks(shape);
    let size = 1usize << n;
    let m = masks.len();
    if profile.m() != m {
        return Ok(DMatrix::zeros(size, size));
    }
    Ok(DMatrix::from_fn(size, size, |x, y| {
        let (x, y) = (x as u64, y as u64);
        u8::from((0..m).all(|p| {
            let mask = masks[p];
            (x & mask).count_ones() as usize == profile.i[p]
                && (y & mask).count_ones() as usize == profile.j[p]
                && (x & y & mask).count_ones() as usize == profile.t[p]
        }))
    }))
}

/// Dense `sum_p coeff(p) M_p` in floating point.
pub fn dense_element(shape: &SplitShape, coeff: &dyn Fn(&OrbitProfile) -> f64) -> Result<DMatrix<f64>> {
    let n = shape.n();
    if n > DENSE_CAP {
        return Err(Error::CapExceeded(format!("dense elements need n <= {DENSE_CAP}, got {n}")));
    }
    let masks = part_masks(shape);
    let size = 1usize << n;
    let mut cache: HashMap<OrbitProfile, f64> = HashMap::new();
    let mut out = DMatrix::zeros(size, size);
    for x in 0..size {
        for y in 0..size {
            let p = pair_profile(&masks, x as u64, y as u64);
            let v = *cache.entry(p).or_insert_with_key(|p| coeff(p));
            out[(x, y)] = v;
        }
    }
    Ok(out)
}

/// Triple counts `lambda` per profile of `(X Δ Y, X Δ Z)` over `C^3`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LambdaCounts {
    pub shape: SplitShape,
    pub counts: BTreeMap<OrbitProfile, u64>,
}

impl LambdaCounts {
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Counts on a coarser shape: plain sums over the fine profiles.
    pub fn aggregate(&self, coarse: &SplitShape) -> Result<LambdaCounts> {
        let groups = self.shape.grouping_into(coarse)?;
        let mut counts = BTreeMap::new();
        for (p, &c) in &self.counts {
            let mut q = OrbitProfile::zero(coarse.m());
            for (g, range) in groups.iter().enumerate() {
                for part in range.clone() {
                    q.i[g] += p.i[part];
                    q.j[g] += p.j[part];
                    q.t[g] += p.t[part];
                }
            }
            *counts.entry(q).or_insert(0) += c;
        }
        Ok(LambdaCounts { shape: coarse.clone(), counts })
    }
}

pub fn lambda_counts(code: &CodeSample, shape: &SplitShape) -> Result<LambdaCounts> {
    if code.n != shape.n() {
        return Err(Error::InvalidShape(format!("code length {} but shape {shape}", code.n)));
    }
    let masks = part_masks(shape);
    let mut counts = BTreeMap::new();
    for &x in &code.words {
        for &y in &code.words {
            for &z in &code.words {
                *counts.entry(pair_profile(&masks, x ^ y, x ^ z)).or_insert(0) += 1;
            }
        }
    }
    Ok(LambdaCounts { shape: shape.clone(), counts })
}

/// `x_p = lambda_p / (|C| prod_p multinom(n_p; i_p - t_p, j_p - t_p, t_p))`
/// for every valid profile.
pub fn x_from_lambda(
    counts: &LambdaCounts,
    code_size: usize,
    shape: &SplitShape,
) -> Result<HashMap<OrbitProfile, BigRational>> {
    if code_size == 0 {
        return Err(Error::Degenerate("empty code".into()));
    }
    let mut out = HashMap::new();
    for p in valid_profiles(shape) {
        let lambda = counts.counts.get(&p).copied().unwrap_or(0);
        let mut den = BigInt::from(code_size);
        for q in 0..shape.m() {
            den *= multinom(
                shape.parts()[q] as i64,
                (p.i[q] - p.t[q]) as i64,
                (p.j[q] - p.t[q]) as i64,
                p.t[q] as i64,
            );
        }
        out.insert(p, BigRational::new(BigInt::from(lambda), den));
    }
    Ok(out)
}

/// Exact `x` of an explicit code.
pub fn code_x(code: &CodeSample, shape: &SplitShape) -> Result<HashMap<OrbitProfile, BigRational>> {
    x_from_lambda(&lambda_counts(code, shape)?, code.len(), shape)
}

/// Dense square matrix of rationals, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenseRational {
    pub dim: usize,
    pub data: Vec<BigRational>,
}

impl DenseRational {
    pub fn get(&self, r: usize, c: usize) -> &BigRational {
        &self.data[r * self.dim + c]
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |r, c| ratio_to_f64(self.get(r, c)))
    }
}

fn r_prime_factor(code: &CodeSample) -> Result<BigRational> {
    let total = BigInt::one() << code.n;
    let size = BigInt::from(code.len());
    if size == total {
        return Err(Error::Degenerate(format!(
            "the code is the whole space of length {}, so R' has no defining average",
            code.n
        )));
    }
    Ok(BigRational::new(size.clone(), total - size))
}

/// `R = sum x_p M_p` and `R' = |C| / (2^n - |C|) sum (x_{i+j-2t,0}^0 - x_p) M_p`.
pub fn build_r_matrices(code: &CodeSample, shape: &SplitShape) -> Result<(DenseRational, DenseRational)> {
    let n = shape.n();
    if n > R_CAP {
        return Err(Error::CapExceeded(format!("R matrices need n <= {R_CAP}, got {n}")));
    }
    let factor = r_prime_factor(code)?;
    let x = code_x(code, shape)?;
    let masks = part_masks(shape);
    let size = 1usize << n;
    let mut r = Vec::with_capacity(size * size);
    let mut rp = Vec::with_capacity(size * size);
    for a in 0..size as u64 {
        for b in 0..size as u64 {
            let p = pair_profile(&masks, a, b);
            let v = &x[&p];
            r.push(v.clone());
            rp.push(&factor * (&x[&OrbitProfile::diagonal(p.distance())] - v));
        }
    }
    Ok((DenseRational { dim: size, data: r }, DenseRational { dim: size, data: rp }))
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for k in 0..n {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..=k).map(move |pos| {
                    let mut q = p.clone();
                    q.insert(pos, k);
                    q
                })
            })
            .collect();
    }
    out
}

/// `R` and `R'` as averages of `chi chi^T` over the images of the code under
/// the split automorphism group, split by whether the image contains the
/// empty word.
pub fn averaged_r_matrices(code: &CodeSample, shape: &SplitShape) -> Result<(DenseRational, DenseRational)> {
    let n = shape.n();
    if n > AVERAGE_CAP {
        return Err(Error::CapExceeded(format!("group averaging needs n <= {AVERAGE_CAP}, got {n}")));
    }
    r_prime_factor(code)?;
    // Coordinate permutations preserving every part.
    let mut perms: Vec<Vec<usize>> = vec![Vec::new()];
    for (&off, &len) in shape.offsets().iter().zip(shape.parts()) {
        let local = permutations(len);
        perms = perms
            .into_iter()
            .flat_map(|p| {
                local.iter().map(move |q| {
                    let mut r = p.clone();
                    r.extend(q.iter().map(|&c| c + off));
                    r
                })
            })
            .collect();
    }
    let apply = |perm: &[usize], w: u64| -> u64 {
        let mut out = 0u64;
        for (c, &target) in perm.iter().enumerate() {
            if w >> (n - 1 - c) & 1 == 1 {
                out |= 1 << (n - 1 - target);
            }
        }
        out
    };
    let size = 1usize << n;
    let mut acc = vec![0u64; size * size];
    let mut acc_p = vec![0u64; size * size];
    let (mut count, mut count_p) = (0u64, 0u64);
    let mut image = Vec::with_capacity(code.len());
    for perm in &perms {
        for shift in 0..size as u64 {
            image.clear();
            image.extend(code.words.iter().map(|&w| apply(perm, w) ^ shift));
            let (target, cnt) = if image.contains(&0) {
                (&mut acc, &mut count)
            } else {
                (&mut acc_p, &mut count_p)
            };
            *cnt += 1;
            for &a in &image {
                for &b in &image {
                    target[a as usize * size + b as usize] += 1;
                }
            }
        }
    }
    let finish = |v: Vec<u64>, c: u64| DenseRational {
        dim: size,
        data: v.into_iter().map(|e| BigRational::new(e.into(), c.into())).collect(),
    };
    Ok((finish(acc, count), finish(acc_p, count_p)))
}

struct Bitset(Vec<u64>);

impl Bitset {
    fn empty(len: usize) -> Self {
        Bitset(vec![0; len.div_ceil(64)])
    }
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn clear(&mut self, i: usize) {
        self.0[i / 64] &= !(1 << (i % 64));
    }
    fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }
    fn first(&self) -> Option<usize> {
        self.0
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(k, &w)| k * 64 + w.trailing_zeros() as usize)
    }
    fn contains(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }
    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(k, &w)| {
            (0..64).filter(move |b| w >> b & 1 == 1).map(move |b| k * 64 + b)
        })
    }
    fn and(&self, other: &Bitset) -> Bitset {
        Bitset(self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect())
    }
}

/// Branch and bound for the largest set of words with pairwise distance at
/// least `d`, all compatible with a fixed partial code.
///
/// Coordinate permutations preserving every cell of `cells` are assumed to
/// fix the partial code and map the candidate set to itself. After a branch
/// on `v` is done, every candidate in the orbit of `v` is dropped.
struct CodeSearch {
    words: Vec<u64>,
    adj: Vec<Bitset>,
    target: usize,
}

impl CodeSearch {
    fn new(words: Vec<u64>, d: usize, target: usize) -> Self {
        let adj = words
            .iter()
            .map(|&a| {
                let mut b = Bitset::empty(words.len());
                for (k, &c) in words.iter().enumerate() {
                    if a != c && (a ^ c).count_ones() as usize >= d {
                        b.set(k);
                    }
                }
                b
            })
            .collect();
        Self { words, adj, target }
    }

    /// Largest extension size, or `floor` if nothing beats it.
    fn run(&self, cells: &[u64], floor: usize) -> usize {
        let mut all = Bitset::empty(self.words.len());
        for v in 0..self.words.len() {
            all.set(v);
        }
        let mut best = floor;
        if !self.words.is_empty() && floor < self.target {
            self.expand(0, all, cells, &mut best);
        }
        best
    }

    fn orbit_key(cells: &[u64], w: u64) -> Vec<u32> {
        cells.iter().map(|c| (c & w).count_ones()).collect()
    }

    fn expand(&self, size: usize, mut cand: Bitset, cells: &[u64], best: &mut usize) {
        // Greedy coloring of the candidates; vertices come out sorted by color.
        let mut order = Vec::new();
        let mut colors = Vec::new();
        let mut uncolored = Bitset(cand.0.clone());
        let mut color = 0;
        while !uncolored.is_empty() {
            color += 1;
            let mut avail = Bitset(uncolored.0.clone());
            while let Some(v) = avail.first() {
                avail.clear(v);
                uncolored.clear(v);
                for (a, b) in avail.0.iter_mut().zip(&self.adj[v].0) {
                    *a &= !b;
                }
                order.push(v);
                colors.push(color);
            }
        }
        for k in (0..order.len()).rev() {
            if size + colors[k] <= *best || *best >= self.target {
                return;
            }
            let v = order[k];
            if !cand.contains(v) {
                continue;
            }
            let next = cand.and(&self.adj[v]);
            if next.is_empty() {
                if size + 1 > *best {
                    *best = size + 1;
                }
            } else {
                let w = self.words[v];
                let refined: Vec<u64> = cells
                    .iter()
                    .flat_map(|&c| [c & w, c & !w])
                    .filter(|&c| c != 0)
                    .collect();
                self.expand(size + 1, next, &refined, best);
            }
            let key = Self::orbit_key(cells, self.words[v]);
            let members: Vec<usize> = cand.iter().filter(|&u| Self::orbit_key(cells, self.words[u]) == key).collect();
            for u in members {
                cand.clear(u);
            }
        }
    }
}

fn full_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Split of the coordinates into the support of `anchor` and the rest.
fn anchor_cells(n: usize, anchor: u64) -> Vec<u64> {
    [anchor, full_mask(n) & !anchor].into_iter().filter(|&c| c != 0).collect()
}

/// `A(n, d)` by exhaustive search.
///
/// The search is capped by Delsarte's bound and by `A(n, d) <= 2 A(n - 1, d)`.
/// Without loss of generality the code contains the zero word and, when it
/// has minimum distance `δ`, the word `1^δ 0^(n-δ)`; all other words are then
/// at distance at least `δ`. For even `d` only even-weight words are needed.
#[allow(non_snake_case)]
pub fn exact_A(n: usize, d: usize) -> Result<u64> {
    if n > SEARCH_CAP {
        return Err(Error::CapExceeded(format!("exhaustive search needs n <= {SEARCH_CAP}, got {n}")));
    }
    if d <= 1 {
        return Ok(1 << n);
    }
    if d > n {
        return Ok(1);
    }
    let mut upper = crate::lp::floor(&delsarte_lp_value(n, d)).to_u64().unwrap_or(u64::MAX);
    if n > d {
        upper = upper.min(2 * exact_A(n - 1, d)?);
    }
    let even = d % 2 == 0;
    let mut best = (best_known_code(n, d).len() as u64).max(2);
    for delta in d..=n {
        if best >= upper {
            break;
        }
        if even && delta % 2 == 1 {
            continue;
        }
        let anchor = ((1u64 << delta) - 1) << (n - delta);
        let cand: Vec<u64> = (1..1u64 << n)
            .filter(|&w| w != anchor)
            .filter(|&w| !even || w.count_ones() % 2 == 0)
            .filter(|&w| w.count_ones() as usize >= delta && (w ^ anchor).count_ones() as usize >= delta)
            .collect();
        let search = CodeSearch::new(cand, delta, upper as usize - 2);
        let found = search.run(&anchor_cells(n, anchor), best as usize - 2);
        best = best.max(2 + found as u64);
    }
    Ok(best)
}

/// `A(n, d, w)` by exhaustive search, with the first word fixed to `1^w 0^(n-w)`.
#[allow(non_snake_case)]
pub fn exact_A_cw(n: usize, d: usize, w: usize) -> Result<u64> {
    if n > SEARCH_CAP {
        return Err(Error::CapExceeded(format!("exhaustive search needs n <= {SEARCH_CAP}, got {n}")));
    }
    if w > n {
        return Ok(0);
    }
    let anchor = ((1u64 << w) - 1) << (n - w);
    let cand: Vec<u64> = (0..1u64 << n)
        .filter(|&x| x.count_ones() as usize == w && x != anchor)
        .filter(|&x| (x ^ anchor).count_ones() as usize >= d)
        .collect();
    let search = CodeSearch::new(cand, d, usize::MAX);
    Ok(1 + search.run(&anchor_cells(n, anchor), 0) as u64)
}

/// Delsarte's linear programming bound, exactly.
pub fn delsarte_lp_value(n: usize, d: usize) -> BigRational {
    crate::lp::delsarte_lp(n, d)
}

/// Largest code among the lexicode and codes invariant under a cyclic
/// coordinate permutation found by [`symmetric_code`].
pub fn best_known_code(n: usize, d: usize) -> CodeSample {
    let mut best = lexicode(n, d);
    if d < 2 || d > n {
        return best;
    }
    for covered in [n, n - 1] {
        for len in 2..=covered {
            if covered % len != 0 {
                continue;
            }
            let code = symmetric_code(n, d, len, covered, 200_000);
            if code.len() > best.len() {
                best = code;
            }
        }
    }
    best
}

/// Search codes that are unions of orbits of the permutation made of
/// `covered / len` cycles of length `len` on the first `covered`
/// coordinates. The search gives up after `budget` nodes and returns the
/// largest code seen.
pub fn symmetric_code(n: usize, d: usize, len: usize, covered: usize, budget: usize) -> CodeSample {
    let perm = |w: u64| -> u64 {
        let mut r = w & !full_mask(covered);
        for i in 0..covered {
            if w >> i & 1 == 1 {
                let j = if (i + 1) % len == 0 { i + 1 - len } else { i + 1 };
                r |= 1 << j;
            }
        }
        r
    };
    let even = d % 2 == 0;
    let mut seen = vec![false; 1 << n];
    let mut orbits: Vec<Vec<u64>> = Vec::new();
    for w in 0..1u64 << n {
        if seen[w as usize] || (even && w.count_ones() % 2 == 1) {
            continue;
        }
        let mut orbit = vec![w];
        seen[w as usize] = true;
        let mut x = perm(w);
        while x != w {
            seen[x as usize] = true;
            orbit.push(x);
            x = perm(x);
        }
        let ok = orbit.iter().enumerate().all(|(k, a)| orbit[k + 1..].iter().all(|b| (a ^ b).count_ones() as usize >= d));
        if ok {
            orbits.push(orbit);
        }
    }
    orbits.sort_by_key(|o| std::cmp::Reverse(o.len()));
    let m = orbits.len();
    let compatible: Vec<Vec<bool>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| i != j && orbits[i].iter().all(|a| orbits[j].iter().all(|b| (a ^ b).count_ones() as usize >= d)))
                .collect()
        })
        .collect();

    struct State<'a> {
        sizes: Vec<usize>,
        compatible: &'a [Vec<bool>],
        best: usize,
        best_set: Vec<usize>,
        nodes: usize,
        budget: usize,
    }
    fn dfs(st: &mut State, chosen: &mut Vec<usize>, total: usize, cand: &[usize]) {
        st.nodes += 1;
        if total > st.best {
            st.best = total;
            st.best_set = chosen.clone();
        }
        let mut rest: usize = cand.iter().map(|&c| st.sizes[c]).sum();
        for (k, &c) in cand.iter().enumerate() {
            if total + rest <= st.best || st.nodes > st.budget {
                return;
            }
            rest -= st.sizes[c];
            let next: Vec<usize> = cand[k + 1..].iter().copied().filter(|&x| st.compatible[c][x]).collect();
            chosen.push(c);
            dfs(st, chosen, total + st.sizes[c], &next);
            chosen.pop();
        }
    }
    let mut st = State {
        sizes: orbits.iter().map(Vec::len).collect(),
        compatible: &compatible,
        best: 0,
        best_set: Vec::new(),
        nodes: 0,
        budget,
    };
    let all: Vec<usize> = (0..m).collect();
    dfs(&mut st, &mut Vec::new(), 0, &all);
    let words = st.best_set.iter().flat_map(|&o| orbits[o].iter().copied()).collect();
    CodeSample::new(n, words).expect("length fits")
}

/// A maximum-size code found greedily in lexicographic order (the lexicode).
pub fn lexicode(n: usize, d: usize) -> CodeSample {
    let mut words: Vec<u64> = Vec::new();
    for w in 0..1u64 << n {
        if words.iter().all(|&c| (c ^ w).count_ones() as usize >= d) {
            words.push(w);
        }
    }
    CodeSample::new(n, words).expect("length fits")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_words() {
        let c = CodeSample::from_strings(&["000", "110", "101"]).unwrap();
        assert_eq!(c.words, vec![0, 0b101, 0b110]);
        assert_eq!(c.min_distance(), Some(2));
        assert_eq!(c.to_strings(), vec!["000", "101", "110"]);
        assert!(CodeSample::from_strings(&["01", "011"]).is_err());
        assert!(CodeSample::from_strings(&["0x"]).is_err());
    }

    #[test]
    fn generator_of_length_one() {
        let g = dense_generator(&SplitShape::single(1), &OrbitProfile::zero(1)).unwrap();
        assert_eq!(g, DMatrix::from_row_slice(2, 2, &[1, 0, 0, 0]));
        assert!(dense_generator(&SplitShape::single(13), &OrbitProfile::zero(1)).is_err());
    }

    #[test]
    fn two_word_code_counts() {
        let code = CodeSample::from_strings(&["00", "11"]).unwrap();
        let shape = SplitShape::single(2);
        let l = lambda_counts(&code, &shape).unwrap();
        let get = |i, j, t| l.counts.get(&OrbitProfile::new(vec![i], vec![j], vec![t])).copied().unwrap_or(0);
        assert_eq!(get(0, 0, 0), 2);
        assert_eq!(get(2, 0, 0), 2);
        assert_eq!(get(0, 2, 0), 2);
        assert_eq!(get(2, 2, 2), 2);
        assert_eq!(l.total(), 8);
        let x = x_from_lambda(&l, 2, &shape).unwrap();
        assert_eq!(x[&OrbitProfile::diagonal(vec![2])], BigRational::one());
        assert_eq!(x[&OrbitProfile::zero(1)], BigRational::one());
    }

    #[test]
    fn small_exact_values() {
        assert_eq!(exact_A(5, 1).unwrap(), 32);
        assert_eq!(exact_A(6, 7).unwrap(), 1);
        assert_eq!(exact_A(7, 3).unwrap(), 16);
        assert_eq!(exact_A(8, 4).unwrap(), 16);
        assert_eq!(exact_A(6, 3).unwrap(), 8);
        assert_eq!(exact_A_cw(6, 4, 3).unwrap(), 4);
        assert_eq!(exact_A_cw(7, 4, 3).unwrap(), 7);
        assert_eq!(exact_A_cw(5, 2, 2).unwrap(), 10);
    }

    #[test]
    fn whole_space_is_degenerate() {
        let all = CodeSample::new(2, vec![0, 1, 2, 3]).unwrap();
        assert!(matches!(build_r_matrices(&all, &SplitShape::single(2)), Err(Error::Degenerate(_))));
    }

    #[test]
    fn lexicode_distance() {
        let c = lexicode(7, 3);
        assert_eq!(c.len(), 16);
        assert_eq!(c.min_distance(), Some(3));
    }
}
