use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use splitsdp_core::algebra::SplitShape;
use splitsdp_core::bounds::propagate;
use splitsdp_core::model::ModelOptions;
use splitsdp_core::verifier::DEFAULT_DENOMINATOR;

use crate::Args;

pub const FAMILIES: [&str; 12] = [
    "primary-blocks",
    "complement-blocks",
    "coarse-blocks",
    "upper",
    "pair",
    "coarse-linear",
    "shortening",
    "antipodal",
    "antipodal-weight",
    "near-antipodal",
    "weight-class",
    "doubly-constant",
];

/// Everything a run depends on. A JSON config file has the same fields;
/// command-line flags override it.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub d: usize,
    pub splits: Vec<Vec<usize>>,
    /// Try the unsplit shape and every `(n1, n - n1)` with `n1 <= n / 2`.
    pub sweep: bool,
    pub solver_command: String,
    pub bounds_table: Option<PathBuf>,
    pub timeout_sec: Option<u64>,
    pub output_dir: PathBuf,
    pub denominator: u64,
    pub options: ModelOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 0,
            d: 0,
            splits: Vec::new(),
            sweep: false,
            solver_command: "csdp".into(),
            bounds_table: None,
            timeout_sec: None,
            output_dir: "out".into(),
            denominator: DEFAULT_DENOMINATOR,
            options: ModelOptions::default(),
        }
    }
}

/// A validated configuration with `d` made even.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Plan {
    pub requested_n: usize,
    pub requested_d: usize,
    pub n: usize,
    pub d: usize,
    pub notices: Vec<String>,
    pub shapes: Vec<Vec<usize>>,
    pub config: RunConfig,
}

impl Plan {
    pub fn run_dir(&self) -> PathBuf {
        run_dir(&self.config.output_dir, self.n, self.d)
    }

    pub fn shape_dir(&self, parts: &[usize]) -> PathBuf {
        self.run_dir().join(shape_dir_name(parts))
    }

    pub fn is_propagated(&self) -> bool {
        (self.n, self.d) != (self.requested_n, self.requested_d)
    }
}

pub fn run_dir(out: &Path, n: usize, d: usize) -> PathBuf {
    out.join(format!("n{n}-d{d}"))
}

pub fn shape_dir_name(parts: &[usize]) -> String {
    let p: Vec<String> = parts.iter().map(|v| v.to_string()).collect();
    format!("split-{}", p.join("-"))
}

pub fn parse_split(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|p| p.trim().parse::<usize>().with_context(|| format!("bad split part {p:?} in {text:?}")))
        .collect()
}

fn disable(options: &mut ModelOptions, family: &str) -> Result<()> {
    match family {
        "primary-blocks" => options.primary_blocks = false,
        "complement-blocks" => options.complement_blocks = false,
        "coarse-blocks" => options.coarse_blocks = false,
        "upper" => options.upper = false,
        "pair" => options.pair = false,
        "coarse-linear" => options.coarse_linear = false,
        "shortening" => options.shortening_k.clear(),
        "antipodal" => options.antipodal = false,
        "antipodal-weight" => options.antipodal_weight = false,
        "near-antipodal" => options.near_antipodal = false,
        "weight-class" => options.weight_class = false,
        "doubly-constant" => options.doubly_constant = false,
        other => bail!("unknown constraint family {other:?}; known: {}", FAMILIES.join(", ")),
    }
    Ok(())
}

/// Names of the enabled families.
pub fn enabled_families(o: &ModelOptions) -> Vec<String> {
    let flags = [
        o.primary_blocks,
        o.complement_blocks,
        o.coarse_blocks,
        o.upper,
        o.pair,
        o.coarse_linear,
        !o.shortening_k.is_empty(),
        o.antipodal,
        o.antipodal_weight,
        o.near_antipodal,
        o.weight_class,
        o.doubly_constant,
    ];
    FAMILIES
        .iter()
        .zip(flags)
        .filter(|(_, on)| *on)
        .map(|(name, _)| {
            if *name == "shortening" {
                let ks: Vec<String> = o.shortening_k.iter().map(|k| k.to_string()).collect();
                format!("shortening(k={})", ks.join(","))
            } else {
                name.to_string()
            }
        })
        .collect()
}

pub fn load(args: &Args) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => RunConfig::default(),
    };
    if let Some(n) = args.n {
        cfg.n = n;
    }
    if let Some(d) = args.d {
        cfg.d = d;
    }
    if !args.split.is_empty() {
        cfg.splits = args.split.iter().map(|s| parse_split(s)).collect::<Result<_>>()?;
    }
    if args.sweep {
        cfg.sweep = true;
    }
    if let Some(s) = &args.solver_cmd {
        cfg.solver_command = s.clone();
    }
    if let Some(p) = &args.bounds_table {
        cfg.bounds_table = Some(p.clone());
    }
    if let Some(t) = args.timeout_sec {
        cfg.timeout_sec = Some(t);
    }
    if let Some(o) = &args.out {
        cfg.output_dir = o.clone();
    }
    if let Some(den) = args.denominator {
        cfg.denominator = den;
    }
    if let Some(ks) = &args.shortening_k {
        cfg.options.shortening_k = parse_split(ks)?;
    }
    for fam in &args.disable {
        disable(&mut cfg.options, fam)?;
    }
    Ok(cfg)
}

pub fn plan(cfg: RunConfig) -> Result<Plan> {
    if cfg.n == 0 {
        bail!("--n is required and must be positive");
    }
    if cfg.d == 0 {
        bail!("--d is required and must be at least 1");
    }
    if cfg.n > 64 {
        bail!("n = {} is too large", cfg.n);
    }
    if cfg.denominator == 0 {
        bail!("the denominator must be positive");
    }
    let mut notices = Vec::new();
    let (n, d) = if cfg.d <= cfg.n { propagate(cfg.n, cfg.d) } else { (cfg.n, cfg.d) };
    if (n, d) != (cfg.n, cfg.d) {
        notices.push(format!(
            "odd distance: A({}, {}) = A({n}, {d}), working with n = {n}, d = {d}",
            cfg.n, cfg.d
        ));
    }

    let mut shapes: Vec<Vec<usize>> = Vec::new();
    let push = |shapes: &mut Vec<Vec<usize>>, s: Vec<usize>| {
        if !shapes.contains(&s) {
            shapes.push(s);
        }
    };
    if cfg.sweep {
        push(&mut shapes, vec![n]);
        for n1 in 1..=n / 2 {
            push(&mut shapes, vec![n1, n - n1]);
        }
    }
    for s in &cfg.splits {
        let total: usize = s.iter().sum();
        let mut s = s.clone();
        if total == cfg.n && n == cfg.n + 1 && !s.is_empty() {
            *s.last_mut().unwrap() += 1;
            notices.push(format!("split {:?} widened to {:?} for the propagated length", strip(&s), s));
        } else if total != n {
            bail!("split {} sums to {total}, expected n = {n}", s.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","));
        }
        SplitShape::new(s.clone()).map_err(|e| anyhow::anyhow!("{e}"))?;
        push(&mut shapes, s);
    }
    if shapes.is_empty() {
        push(&mut shapes, if n >= 4 { vec![2, n - 2] } else { vec![n] });
    }
    Ok(Plan { requested_n: cfg.n, requested_d: cfg.d, n, d, notices, shapes, config: cfg })
}

fn strip(s: &[usize]) -> Vec<usize> {
    let mut v = s.to_vec();
    if let Some(last) = v.last_mut() {
        *last -= 1;
    }
    v
}
