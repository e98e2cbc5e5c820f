//! The full semidefinite program for an m-split shape: variable classes,
//! objective, positive semidefinite blocks and linear constraints.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::algebra::{
    assemble_block, block_indices, valid_profiles, BlockFamily, BlockSpec, OrbitProfile, SplitShape,
};
use crate::bounds::{BoundTable, UsedBound};
use crate::combinatorics::{binom, krawtchouk, multinom};
use crate::error::{Error, Result};
use crate::form::{int, LinearForm};

/// Orbit profiles merged into one unknown.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VariableClass {
    pub id: usize,
    pub representative: OrbitProfile,
    pub members: Vec<OrbitProfile>,
    pub forced_zero: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Relation {
    Le,
    Eq,
}

/// `sum coeffs[v] * x_v (relation) rhs`, indexed by solver variable.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LinearConstraint {
    #[serde(serialize_with = "ser_coeffs")]
    pub coeffs: BTreeMap<usize, BigRational>,
    pub relation: Relation,
    #[serde(serialize_with = "ser_ratio")]
    pub rhs: BigRational,
    pub tag: String,
}

fn ser_ratio<S: serde::Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

fn ser_coeffs<S: serde::Serializer>(
    c: &BTreeMap<usize, BigRational>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut m = s.serialize_map(Some(c.len()))?;
    for (k, v) in c {
        m.serialize_entry(k, &v.to_string())?;
    }
    m.end()
}

impl LinearConstraint {
    /// `form <= rhs`, with the constant of `form` moved to the right.
    pub fn le(form: LinearForm, rhs: BigRational, tag: impl Into<String>) -> Self {
        Self {
            rhs: rhs - &form.constant,
            coeffs: form.terms,
            relation: Relation::Le,
            tag: tag.into(),
        }
    }

    pub fn lhs(&self, values: &[BigRational]) -> BigRational {
        self.coeffs.iter().fold(BigRational::zero(), |acc, (v, c)| acc + c * &values[*v])
    }

    /// `rhs - lhs` for `<=`, `-|rhs - lhs|` for `=`; nonnegative iff satisfied.
    pub fn slack(&self, values: &[BigRational]) -> BigRational {
        let s = &self.rhs - self.lhs(values);
        match self.relation {
            Relation::Le => s,
            Relation::Eq => -s.abs(),
        }
    }

    pub fn slack_f64(&self, values: &[f64]) -> f64 {
        let lhs: f64 = self
            .coeffs
            .iter()
            .map(|(v, c)| crate::form::ratio_to_f64(c) * values[*v])
            .sum();
        let s = crate::form::ratio_to_f64(&self.rhs) - lhs;
        match self.relation {
            Relation::Le => s,
            Relation::Eq => -s.abs(),
        }
    }
}

/// Switches for every constraint family.
#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
#[serde(default)]
pub struct ModelOptions {
    /// Value of the all-zero profile. Anything but 1 is only useful for
    /// exercising infeasibility handling.
    pub pin_value: i64,
    pub primary_blocks: bool,
    pub complement_blocks: bool,
    /// Unsplit blocks on aggregated unknowns when the shape has several parts.
    pub coarse_blocks: bool,
    /// `0 <= x <= x_{i,0}^0` on the split unknowns.
    pub upper: bool,
    /// `x_{i,0}^0 + x_{j,0}^0 <= 1 + x_{i,j}^t` on the split unknowns.
    pub pair: bool,
    /// The two families above on aggregated unknowns.
    pub coarse_linear: bool,
    /// Values of `k` for the shortening inequality on the distance distribution.
    pub shortening_k: Vec<usize>,
    pub antipodal: bool,
    pub antipodal_weight: bool,
    pub near_antipodal: bool,
    pub weight_class: bool,
    pub doubly_constant: bool,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            pin_value: 1,
            primary_blocks: true,
            complement_blocks: true,
            coarse_blocks: true,
            upper: true,
            pair: true,
            coarse_linear: true,
            shortening_k: vec![1, 2, 3, 4],
            antipodal: true,
            antipodal_weight: true,
            near_antipodal: true,
            weight_class: true,
            doubly_constant: true,
        }
    }
}

/// The semidefinite program in solver-agnostic form.
///
/// Solver variables are the classes that are neither pinned nor forced to
/// zero, numbered in class order.
#[derive(Clone, Debug)]
pub struct SdpModel {
    pub shape: SplitShape,
    pub d: usize,
    pub classes: Vec<VariableClass>,
    /// Class id of every solver variable.
    pub variables: Vec<usize>,
    /// Maximized; its constant is the contribution of the pinned class.
    pub objective: LinearForm,
    pub psd_blocks: Vec<BlockSpec>,
    pub linear: Vec<LinearConstraint>,
    pub bounds_used: Vec<UsedBound>,
    pub options: ModelOptions,
    pub digest: String,
    profile_class: HashMap<OrbitProfile, usize>,
    class_var: Vec<Option<usize>>,
}

/// Smallest profile obtained by permuting the part-wise vectors
/// `(i, j, i + j - 2t)` and solving for `t` again.
pub fn canonical_class(p: &OrbitProfile) -> OrbitProfile {
    let d = p.distance();
    let triple = [&p.i, &p.j, &d];
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    PERMS
        .iter()
        .map(|perm| {
            let (a, b, c) = (triple[perm[0]], triple[perm[1]], triple[perm[2]]);
            let t = (0..p.m()).map(|q| (a[q] + b[q] - c[q]) / 2).collect();
            OrbitProfile::new(a.clone(), b.clone(), t)
        })
        .min()
        .unwrap()
}

/// Whether some aggregate of `|i|`, `|j|`, `|i| + |j| - 2|t|` lies in `1..d`.
pub fn is_forced_zero(p: &OrbitProfile, d: usize) -> bool {
    [p.total_i(), p.total_j(), p.total_distance()]
        .iter()
        .any(|&v| v >= 1 && v < d)
}

/// Group all profiles of `shape` into classes, sorted by representative.
pub fn variable_classes(shape: &SplitShape, d: usize) -> Vec<VariableClass> {
    let mut groups: BTreeMap<OrbitProfile, Vec<OrbitProfile>> = BTreeMap::new();
    for p in valid_profiles(shape) {
        groups.entry(canonical_class(&p)).or_default().push(p);
    }
    groups
        .into_iter()
        .enumerate()
        .map(|(id, (rep, members))| VariableClass {
            id,
            forced_zero: is_forced_zero(&rep, d),
            representative: rep,
            members,
        })
        .collect()
}

/// Every fine profile with the coarse profile it sums to and the weight
/// `prod multinom(fine) / prod multinom(coarse)` it carries in the
/// aggregated unknown.
pub fn aggregation_terms(
    fine: &SplitShape,
    coarse: &SplitShape,
) -> Result<Vec<(OrbitProfile, OrbitProfile, BigRational)>> {
    let groups = fine.grouping_into(coarse)?;
    let mut out = Vec::new();
    for p in valid_profiles(fine) {
        let mut c = OrbitProfile::zero(coarse.m());
        let mut num = BigInt::one();
        for (q, range) in groups.iter().enumerate() {
            for part in range.clone() {
                c.i[q] += p.i[part];
                c.j[q] += p.j[part];
                c.t[q] += p.t[part];
                num *= multinom(
                    fine.parts()[part] as i64,
                    (p.i[part] - p.t[part]) as i64,
                    (p.j[part] - p.t[part]) as i64,
                    p.t[part] as i64,
                );
            }
        }
        let mut den = BigInt::one();
        for q in 0..coarse.m() {
            den *= multinom(
                coarse.parts()[q] as i64,
                (c.i[q] - c.t[q]) as i64,
                (c.j[q] - c.t[q]) as i64,
                c.t[q] as i64,
            );
        }
        out.push((p, c, BigRational::new(num, den)));
    }
    Ok(out)
}

/// Coarse unknowns from fine ones: `x_coarse = sum weight * x_fine` over
/// the fine profiles that sum to each coarse profile.
pub fn aggregate(
    x: &HashMap<OrbitProfile, BigRational>,
    fine: &SplitShape,
    coarse: &SplitShape,
) -> Result<HashMap<OrbitProfile, BigRational>> {
    let mut out: HashMap<OrbitProfile, BigRational> = HashMap::new();
    for (p, c, w) in aggregation_terms(fine, coarse)? {
        let v = x.get(&p).cloned().unwrap_or_else(BigRational::zero);
        *out.entry(c).or_insert_with(BigRational::zero) += w * v;
    }
    Ok(out)
}

/// Aggregate distance distribution `A_j` and the split distribution
/// `A_i = prod_p C(n_p, i_p) x_{i,0}^0` keyed by weight vector.
pub fn distance_distribution(
    x: &HashMap<OrbitProfile, BigRational>,
    shape: &SplitShape,
) -> (Vec<BigRational>, BTreeMap<Vec<usize>, BigRational>) {
    let mut total = vec![BigRational::zero(); shape.n() + 1];
    let mut split = BTreeMap::new();
    for p in valid_profiles(shape) {
        if p.j.iter().any(|&v| v != 0) {
            continue;
        }
        let weight: BigInt = shape
            .parts()
            .iter()
            .zip(&p.i)
            .map(|(&n, &i)| binom(n as i64, i as i64))
            .product();
        let v = x.get(&p).cloned().unwrap_or_else(BigRational::zero) * BigRational::from_integer(weight);
        total[p.total_i()] += &v;
        split.insert(p.i.clone(), v);
    }
    (total, split)
}

/// The split Krawtchouk transform `sum_i A_i prod_p K_{k_p}^{n_p}(i_p)` for
/// every `k`, in lexicographic order of `k`. Nonnegative on genuine codes.
pub fn delsarte_check(
    x: &HashMap<OrbitProfile, BigRational>,
    shape: &SplitShape,
) -> Vec<(Vec<usize>, BigRational)> {
    let (_, split) = distance_distribution(x, shape);
    let mut ks: Vec<Vec<usize>> = vec![Vec::new()];
    for &n in shape.parts() {
        ks = ks
            .into_iter()
            .flat_map(|prefix| {
                (0..=n).map(move |k| {
                    let mut v = prefix.clone();
                    v.push(k);
                    v
                })
            })
            .collect();
    }
    ks.into_iter()
        .map(|k| {
            let mut acc = BigRational::zero();
            for (i, a) in &split {
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

struct ConstraintSink {
    seen: BTreeSet<(BTreeMap<usize, BigRational>, BigRational)>,
    rows: Vec<LinearConstraint>,
}

impl ConstraintSink {
    fn new() -> Self {
        Self { seen: BTreeSet::new(), rows: Vec::new() }
    }

    /// Add `form <= rhs`. Rows without unknowns are kept only when violated.
    fn le(&mut self, form: LinearForm, rhs: BigRational, tag: &str) {
        let row = LinearConstraint::le(form, rhs, tag);
        if row.coeffs.is_empty() && !row.rhs.is_negative() {
            return;
        }
        if self.seen.insert((row.coeffs.clone(), row.rhs.clone())) {
            self.rows.push(row);
        }
    }
}

impl SdpModel {
    pub fn n(&self) -> usize {
        self.shape.n()
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn class_of(&self, p: &OrbitProfile) -> Option<&VariableClass> {
        self.profile_class.get(p).map(|&c| &self.classes[c])
    }

    pub fn var_of_class(&self, class: usize) -> Option<usize> {
        self.class_var[class]
    }

    pub fn pin(&self) -> BigRational {
        int(self.options.pin_value)
    }

    /// The affine form standing in for the coefficient of profile `p`.
    pub fn profile_form(&self, p: &OrbitProfile) -> LinearForm {
        profile_form(&self.profile_class, &self.classes, &self.class_var, self.options.pin_value, p)
    }

    /// Solver variable values from values per profile (taken at each class
    /// representative).
    pub fn variable_values(&self, x: &HashMap<OrbitProfile, BigRational>) -> Vec<BigRational> {
        self.variables
            .iter()
            .map(|&c| x.get(&self.classes[c].representative).cloned().unwrap_or_else(BigRational::zero))
            .collect()
    }

    /// Values per profile implied by solver variable values.
    pub fn profile_values(&self, vars: &[BigRational]) -> HashMap<OrbitProfile, BigRational> {
        self.profile_class
            .keys()
            .map(|p| (p.clone(), self.profile_form(p).eval(vars)))
            .collect()
    }

    pub fn objective_value(&self, vars: &[BigRational]) -> BigRational {
        self.objective.eval(vars)
    }

    /// Text that determines the model; its SHA-256 is [`SdpModel::digest`].
    pub fn canonical_text(&self) -> String {
        canonical_text(self)
    }
}

fn profile_form(
    profile_class: &HashMap<OrbitProfile, usize>,
    classes: &[VariableClass],
    class_var: &[Option<usize>],
    pin: i64,
    p: &OrbitProfile,
) -> LinearForm {
    let c = profile_class[p];
    if classes[c].forced_zero {
        LinearForm::zero()
    } else if c == 0 {
        LinearForm::constant(int(pin))
    } else {
        LinearForm::var(class_var[c].expect("free class has a variable"))
    }
}

fn canonical_text(m: &SdpModel) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "shape {} d {}", m.shape, m.d);
    let _ = writeln!(s, "options {:?}", m.options);
    for c in &m.classes {
        let _ = writeln!(s, "class {} {} zero={} size={}", c.id, c.representative, c.forced_zero, c.members.len());
    }
    let _ = writeln!(s, "variables {:?}", m.variables);
    let _ = writeln!(s, "objective {}", m.objective);
    for b in &m.psd_blocks {
        let _ = writeln!(s, "block {} weights {:?}", b.label(), b.row_weights.iter().map(|w| w.to_string()).collect::<Vec<_>>());
        for (idx, e) in b.entries.iter().enumerate() {
            let _ = writeln!(s, "  {idx} {e}");
        }
    }
    for r in &m.linear {
        let terms: Vec<String> = r.coeffs.iter().map(|(v, c)| format!("{c}*x{v}")).collect();
        let _ = writeln!(s, "row {} {:?} {} {}", r.tag, r.relation, terms.join(" "), r.rhs);
    }
    for u in &m.bounds_used {
        let _ = writeln!(s, "bound {} = {} ({})", u.key, u.value, u.source);
    }
    s
}

/// Build the program bounding `A(n, d)` for `shape`.
///
/// `d` must be even with `d <= n`, or equal to `n + 1` (then every nonzero
/// distance is excluded and the optimum is 1).
pub fn build_model(shape: &SplitShape, d: usize, table: &BoundTable, options: &ModelOptions) -> Result<SdpModel> {
    let n = shape.n();
    if d == 0 {
        return Err(Error::InvalidModel("minimum distance must be positive".into()));
    }
    if d > n + 1 {
        return Err(Error::InvalidModel(format!("d = {d} exceeds n + 1 = {}", n + 1)));
    }
    if d % 2 == 1 && d != n + 1 {
        return Err(Error::InvalidModel(format!(
            "d = {d} is odd; use A({n}, {d}) = A({}, {})",
            n + 1,
            d + 1
        )));
    }

    let classes = variable_classes(shape, d);
    let mut profile_class = HashMap::new();
    for c in &classes {
        for p in &c.members {
            profile_class.insert(p.clone(), c.id);
        }
    }
    let mut variables = Vec::new();
    let mut class_var = vec![None; classes.len()];
    for c in &classes {
        if c.id != 0 && !c.forced_zero {
            class_var[c.id] = Some(variables.len());
            variables.push(c.id);
        }
    }
    let form = |p: &OrbitProfile| profile_form(&profile_class, &classes, &class_var, options.pin_value, p);

    let mut objective = LinearForm::zero();
    for p in valid_profiles(shape) {
        if p.j.iter().all(|&v| v == 0) {
            let w: BigInt = shape
                .parts()
                .iter()
                .zip(&p.i)
                .map(|(&np, &ip)| binom(np as i64, ip as i64))
                .product();
            objective.add_scaled_int(&form(&p), &w);
        }
    }

    let mut families = Vec::new();
    if options.primary_blocks {
        families.push(BlockFamily::Primary);
    }
    if options.complement_blocks {
        families.push(BlockFamily::Complement);
    }

    let mut psd_blocks = Vec::new();
    for k in block_indices(shape) {
        for &fam in &families {
            psd_blocks.push(assemble_block(shape, &k, fam, &form)?);
        }
    }

    let single = SplitShape::single(n);
    let coarse: HashMap<OrbitProfile, LinearForm> = if shape.m() == 1 {
        profile_class.keys().map(|p| (p.clone(), form(p))).collect()
    } else {
        let mut acc: HashMap<OrbitProfile, LinearForm> = HashMap::new();
        for (p, c, w) in aggregation_terms(shape, &single)? {
            acc.entry(c).or_default().add_scaled(&form(&p), &w);
        }
        acc
    };
    let cform = |p: &OrbitProfile| coarse[p].clone();

    if shape.m() > 1 && options.coarse_blocks {
        for k in block_indices(&single) {
            for &fam in &families {
                psd_blocks.push(assemble_block(&single, &k, fam, &cform)?);
            }
        }
    }

    let mut sink = ConstraintSink::new();
    let zero = BigRational::zero();
    let one = BigRational::one();

    if options.upper {
        for c in &classes {
            if c.forced_zero || c.id == 0 {
                continue;
            }
            let x = form(&c.representative);
            let mut seen = BTreeSet::new();
            for m in &c.members {
                if seen.insert(m.i.clone()) {
                    sink.le(x.sub(&form(&OrbitProfile::diagonal(m.i.clone()))), zero.clone(), "upper");
                }
            }
        }
    }
    if options.pair {
        for p in valid_profiles(shape) {
            let mut f = form(&OrbitProfile::diagonal(p.i.clone()));
            f.add_scaled(&form(&OrbitProfile::diagonal(p.j.clone())), &one);
            sink.le(f.sub(&form(&p)), one.clone(), "pair");
        }
    }
    if shape.m() > 1 && options.coarse_linear {
        for p in valid_profiles(&single) {
            sink.le(cform(&p).sub(&cform(&OrbitProfile::diagonal(p.i.clone()))), zero.clone(), "coarse-upper");
        }
        for p in valid_profiles(&single) {
            let mut f = cform(&OrbitProfile::diagonal(p.i.clone()));
            f.add_scaled(&cform(&OrbitProfile::diagonal(p.j.clone())), &one);
            sink.le(f.sub(&cform(&p)), one.clone(), "coarse-pair");
        }
    }

    table.reset_used();
    if d <= n {
        literature_constraints(n, d, &cform, table, options, &mut sink);
    }
    let bounds_used = table.used();

    let mut model = SdpModel {
        shape: shape.clone(),
        d,
        classes,
        variables,
        objective,
        psd_blocks,
        linear: sink.rows,
        bounds_used,
        options: options.clone(),
        digest: String::new(),
        profile_class,
        class_var,
    };
    model.digest = hex::encode(Sha256::digest(canonical_text(&model).as_bytes()));
    Ok(model)
}

/// Constraints from the coding literature, stated on the aggregated
/// distribution `A_j = C(n, j) x_{j,0}^0` and on aggregated unknowns.
fn literature_constraints(
    n: usize,
    d: usize,
    cform: &dyn Fn(&OrbitProfile) -> LinearForm,
    table: &BoundTable,
    options: &ModelOptions,
    sink: &mut ConstraintSink,
) {
    let dist: Vec<LinearForm> = (0..=n)
        .map(|j| cform(&OrbitProfile::diagonal(vec![j])).scaled(&BigRational::from_integer(binom(n as i64, j as i64))))
        .collect();
    let a = |j: usize| dist[j].clone();
    let r = |v: u64| BigRational::from_integer(BigInt::from(v));
    let h = d / 2;

    for &k in &options.shortening_k {
        if k == 0 || k >= n {
            continue;
        }
        let mut f = LinearForm::zero();
        for i in 0..=n {
            f.add_scaled_int(&a(i), &binom((n - i) as i64, k as i64));
        }
        let rhs = BigRational::from_integer(binom(n as i64, k as i64)) * r(table.a(n - k, d));
        sink.le(f, rhs, &format!("shortening-k{k}"));
    }

    if options.antipodal && h >= 1 && h <= n {
        let q = int(((2 * n) / d) as i64);
        let mut f = a(n - h);
        for i in 0..h {
            f.add_scaled(&a(n - i), &q);
        }
        sink.le(f, q, "antipodal");
    }

    if options.antipodal_weight && h >= 2 && n >= h + 2 {
        let p = r(table.cw(n - 1, d, h + 1));
        let q = r(table.cw(n - h, d, h + 1));
        let rr = r(table.cw(n - h + 2, d, h + 2));
        let nn = int(n as i64);
        let mut f = a(n - h - 2).scaled(&int((h + 2) as i64));
        f.add_scaled(&a(n - h), &(int(h as i64) * (&p - &q)));
        f.add_scaled(&a(n - h + 2), &(&nn * &p - int((h + 2) as i64) * &rr));
        for i in (n + 3).saturating_sub(h)..=n {
            f.add_scaled(&a(i), &(&nn * &p));
        }
        sink.le(f, nn * p, "antipodal-weight");
    }

    if options.near_antipodal {
        for i in 1..h {
            if n < h + i {
                continue;
            }
            let w = h + i;
            let big = r(table.cw(n, d, w));
            let small = r(table.cw(n - h + i, d, w));
            let mut f = a(n - h - i);
            f.add_scaled(&a(n - h + i), &(&big - &small));
            for j in i + 1..=h {
                f.add_scaled(&a(n - h + j), &big);
            }
            sink.le(f, big, &format!("near-antipodal-i{i}"));
        }
    }

    if options.weight_class {
        for i in 1..=n {
            sink.le(a(i), r(table.cw(n, d, i)), &format!("weight-class-i{i}"));
        }
    }

    if options.doubly_constant {
        for p in valid_profiles(&SplitShape::single(n)) {
            let (i, j, t) = (p.i[0], p.j[0], p.t[0]);
            let x = cform(&p);
            if x.is_constant() && x.constant.is_zero() {
                continue;
            }
            let cap = BigRational::new(
                BigInt::from(table.dcw(t, i, j - t, n - i, d)),
                binom(i as i64, t as i64) * binom((n - i) as i64, (j - t) as i64),
            );
            if cap >= BigRational::one() {
                continue;
            }
            let diag = cform(&OrbitProfile::diagonal(vec![i]));
            sink.le(x.sub(&diag.scaled(&cap)), BigRational::zero(), "doubly-constant");
        }
    }
}
