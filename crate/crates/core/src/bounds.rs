//! Upper bounds on constant-weight, doubly constant-weight and unrestricted
//! codes, from a table file with analytic fallbacks.
//!
//! Table format, one entry per line, `#` starts the provenance string:
//!
//! ```text
//! cw n d w value # source
//! dcw w1 t1 w2 t2 d value # source
//! a n d value # source
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::combinatorics::binom;
use crate::error::{Error, Result};
use crate::lp::{delsarte_lp, floor};

const BUILTIN: &str = include_str!("../data/bounds.txt");

/// Replace odd `d` by `(n + 1, d + 1)`; even `d` is returned unchanged.
pub fn propagate(n: usize, d: usize) -> (usize, usize) {
    if d % 2 == 1 {
        (n + 1, d + 1)
    } else {
        (n, d)
    }
}

/// Key of one table entry, in canonical form.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum BoundKey {
    /// `A(n, d, w)` with `d` even and `w <= n - w`.
    Cw { n: usize, d: usize, w: usize },
    /// `T(w1, t1, w2, t2, d)`, smallest of its four symmetric spellings.
    Dcw { w1: usize, t1: usize, w2: usize, t2: usize, d: usize },
    /// `A(n, d)` with `d` even.
    A { n: usize, d: usize },
}

fn even(d: usize) -> usize {
    d.max(1) + d.max(1) % 2
}

impl BoundKey {
    pub fn cw(n: usize, d: usize, w: usize) -> Self {
        BoundKey::Cw { n, d: even(d), w: w.min(n.saturating_sub(w)) }
    }

    pub fn dcw(w1: usize, t1: usize, w2: usize, t2: usize, d: usize) -> Self {
        let d = even(d);
        let variants = [
            (w1, t1, w2, t2),
            (w2, t2, w1, t1),
            (t1 - w1, t1, t2 - w2, t2),
            (t2 - w2, t2, t1 - w1, t1),
        ];
        let (w1, t1, w2, t2) = variants.into_iter().min().unwrap();
        BoundKey::Dcw { w1, t1, w2, t2, d }
    }

    pub fn a(n: usize, d: usize) -> Self {
        let (n, d) = propagate(n, d.max(1));
        BoundKey::A { n, d }
    }
}

impl fmt::Display for BoundKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundKey::Cw { n, d, w } => write!(f, "cw {n} {d} {w}"),
            BoundKey::Dcw { w1, t1, w2, t2, d } => write!(f, "dcw {w1} {t1} {w2} {t2} {d}"),
            BoundKey::A { n, d } => write!(f, "a {n} {d}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TableEntry {
    pub value: u64,
    pub provenance: String,
}

/// A bound the model consumed, with the value used and where it came from.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UsedBound {
    pub key: String,
    pub value: u64,
    pub source: String,
}

/// Table entries plus a memo of computed fallbacks. Lookups are safe from
/// many threads at once.
#[derive(Default)]
pub struct BoundTable {
    entries: BTreeMap<BoundKey, TableEntry>,
    memo: Mutex<HashMap<BoundKey, u64>>,
    used: Mutex<BTreeMap<String, UsedBound>>,
}

impl Clone for BoundTable {
    fn clone(&self) -> Self {
        Self {
            entries: self.entries.clone(),
            ..Default::default()
        }
    }
}

impl fmt::Debug for BoundTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundTable").field("entries", &self.entries).finish()
    }
}

impl BoundTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// The table shipped with the crate.
    pub fn builtin() -> Self {
        parse_table(BUILTIN, Path::new("<builtin>")).expect("shipped bounds table parses")
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&BoundKey, &TableEntry)> {
        self.entries.iter()
    }

    pub fn get(&self, key: &BoundKey) -> Option<&TableEntry> {
        self.entries.get(key)
    }

    pub fn insert(&mut self, key: BoundKey, value: u64, provenance: impl Into<String>) {
        self.entries.insert(key, TableEntry { value, provenance: provenance.into() });
        self.memo.lock().unwrap().clear();
    }

    /// Entries of `other` replace entries of `self` with the same key.
    pub fn merge(&mut self, other: &BoundTable) {
        for (k, e) in &other.entries {
            self.entries.insert(k.clone(), e.clone());
        }
        self.memo.lock().unwrap().clear();
    }

    /// Every bound consumed since construction or the last [`Self::reset_used`].
    pub fn used(&self) -> Vec<UsedBound> {
        self.used.lock().unwrap().values().cloned().collect()
    }

    pub fn reset_used(&self) {
        self.used.lock().unwrap().clear();
    }

    fn record(&self, key: &BoundKey, value: u64, source: &str) {
        let text = key.to_string();
        self.used.lock().unwrap().entry(text.clone()).or_insert(UsedBound {
            key: text,
            value,
            source: source.to_string(),
        });
    }

    fn table_hit(&self, key: &BoundKey) -> Option<u64> {
        let e = self.entries.get(key)?;
        self.record(key, e.value, &format!("table: {}", e.provenance));
        Some(e.value)
    }

    fn memo_get(&self, key: &BoundKey) -> Option<u64> {
        self.memo.lock().unwrap().get(key).copied()
    }

    fn memo_put(&self, key: BoundKey, v: u64) {
        self.memo.lock().unwrap().insert(key, v);
    }

    fn cw_inner(&self, n: usize, d: usize, w: usize) -> u64 {
        if w > n {
            return 0;
        }
        let key = BoundKey::cw(n, d, w);
        let BoundKey::Cw { d, w, .. } = key else { unreachable!() };
        if let Some(v) = self.table_hit(&key) {
            return v;
        }
        if w == 0 {
            return 1;
        }
        let all = binom(n as i64, w as i64).to_u64().unwrap_or(u64::MAX);
        if d <= 2 {
            return all;
        }
        if d > 2 * w {
            return 1;
        }
        if let Some(v) = self.memo_get(&key) {
            return v;
        }
        let mut best = all;
        let shrink = |inner: u64, den: usize| ((n as u128 * inner as u128) / den as u128).min(u64::MAX as u128) as u64;
        best = best.min(shrink(self.cw_inner(n - 1, d, w - 1), w));
        best = best.min(shrink(self.cw_inner(n - 1, d, w), n - w));
        self.memo_put(key, best);
        best
    }

    /// Upper bound on `A(n, d, w)`.
    pub fn cw(&self, n: usize, d: usize, w: usize) -> u64 {
        let v = self.cw_inner(n, d, w);
        let key = BoundKey::cw(n, d, w);
        if w <= n && self.entries.get(&key).is_none() {
            self.record(&key, v, "fallback: Johnson recursion");
        }
        v
    }

    /// Upper bound on `T(w1, t1, w2, t2, d)`; zero when `w1 > t1` or `w2 > t2`.
    pub fn dcw(&self, w1: usize, t1: usize, w2: usize, t2: usize, d: usize) -> u64 {
        if w1 > t1 || w2 > t2 {
            return 0;
        }
        let key = BoundKey::dcw(w1, t1, w2, t2, d);
        if let Some(v) = self.table_hit(&key) {
            return v;
        }
        let product = (binom(t1 as i64, w1 as i64) * binom(t2 as i64, w2 as i64))
            .to_u64()
            .unwrap_or(u64::MAX);
        let v = product.min(self.cw_inner(t1 + t2, d, w1 + w2));
        self.record(&key, v, "fallback: min(constant weight bound, product of binomials)");
        v
    }

    /// Upper bound on `A(n, d)`.
    pub fn a(&self, n: usize, d: usize) -> u64 {
        let key = BoundKey::a(n, d);
        let BoundKey::A { n, d } = key else { unreachable!() };
        if d > n {
            return 1;
        }
        if d <= 2 {
            return 1u64 << (n - 1);
        }
        if let Some(v) = self.table_hit(&key) {
            return v;
        }
        if let Some(v) = self.memo_get(&key) {
            self.record(&key, v, "fallback: Delsarte linear program");
            return v;
        }
        let v = floor(&delsarte_lp(n, d)).to_u64().unwrap_or(u64::MAX);
        self.memo_put(key.clone(), v);
        self.record(&key, v, "fallback: Delsarte linear program");
        v
    }
}

/// Upper bound on `A(n, d, w)` from `table`, falling back to the Johnson
/// recursion.
pub fn cw_bound(n: usize, d: usize, w: usize, table: &BoundTable) -> u64 {
    table.cw(n, d, w)
}

/// Upper bound on the doubly constant-weight count `T(w1, t1, w2, t2, d)`.
pub fn dcw_bound(w1: usize, t1: usize, w2: usize, t2: usize, d: usize, table: &BoundTable) -> u64 {
    table.dcw(w1, t1, w2, t2, d)
}

pub fn load_table(path: impl AsRef<Path>) -> Result<BoundTable> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_table(&text, path)
}

pub fn parse_table(text: &str, path: &Path) -> Result<BoundTable> {
    let mut table = BoundTable::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |message: String| Error::TableParse {
            path: PathBuf::from(path),
            line: line_no,
            message,
        };
        let (body, provenance) = match raw.split_once('#') {
            Some((b, p)) => (b.trim(), p.trim()),
            None => (raw.trim(), ""),
        };
        if body.is_empty() {
            continue;
        }
        let mut words = body.split_whitespace();
        let kind = words.next().unwrap();
        let nums: Vec<usize> = words
            .map(|w| w.parse::<usize>().map_err(|_| err(format!("not a nonnegative integer: {w:?}"))))
            .collect::<Result<_>>()?;
        let (key, value) = match (kind, nums.as_slice()) {
            ("cw", &[n, d, w, v]) => {
                if w > n {
                    return Err(err(format!("weight {w} exceeds length {n}")));
                }
                (BoundKey::cw(n, d, w), v)
            }
            ("dcw", &[w1, t1, w2, t2, d, v]) => {
                if w1 > t1 || w2 > t2 {
                    return Err(err("a weight exceeds its part length".into()));
                }
                (BoundKey::dcw(w1, t1, w2, t2, d), v)
            }
            ("a", &[n, d, v]) => (BoundKey::a(n, d), v),
            ("cw" | "dcw" | "a", _) => return Err(err(format!("wrong number of fields for {kind}"))),
            _ => return Err(err(format!("unknown entry kind {kind:?}"))),
        };
        if value == 0 {
            return Err(err("bound value 0 is not allowed".into()));
        }
        let value = value as u64;
        if let Some(prev) = table.entries.get(&key) {
            if prev.value != value {
                return Err(err(format!("{key} already set to {}, now {value}", prev.value)));
            }
            continue;
        }
        table.entries.insert(
            key,
            TableEntry {
                value,
                provenance: if provenance.is_empty() { "unspecified".into() } else { provenance.into() },
            },
        );
    }
    Ok(table)
}
