//! Exact integer combinatorics: binomials, trinomial-type multinomials and
//! binary Krawtchouk polynomials.
//!
//! Every function here is total: arguments outside the natural domain give
//! zero, so assembly loops can run over rectangular index ranges.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::{One, Zero};

const PASCAL_ROWS: usize = 96;

fn pascal() -> &'static Vec<Vec<BigInt>> {
    static TABLE: OnceLock<Vec<Vec<BigInt>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut rows: Vec<Vec<BigInt>> = Vec::with_capacity(PASCAL_ROWS);
        for n in 0..PASCAL_ROWS {
            let mut row = vec![BigInt::one(); n + 1];
            for k in 1..n {
                row[k] = &rows[n - 1][k - 1] + &rows[n - 1][k];
            }
            rows.push(row);
        }
        rows
    })
}

/// Binomial coefficient `C(n, k)`; zero when `k < 0`, `k > n` or `n < 0`.
pub fn binom(n: i64, k: i64) -> BigInt {
    if n < 0 || k < 0 || k > n {
        return BigInt::zero();
    }
    let (n, k) = (n as usize, k as usize);
    if n < PASCAL_ROWS {
        return pascal()[n][k].clone();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for step in 0..k {
        acc *= n - step;
        acc /= step + 1;
    }
    acc
}

/// `binom` as a machine integer, for small arguments where it is known to fit.
pub fn binom_u64(n: i64, k: i64) -> u64 {
    u64::try_from(binom(n, k)).expect("binomial coefficient exceeds u64")
}

/// `n! / (a! b! c! (n-a-b-c)!)`, the number of ways to place three disjoint
/// labelled sets of sizes `a`, `b`, `c` inside an `n`-set. Zero when any size
/// is negative or `a + b + c > n`.
pub fn multinom(n: i64, a: i64, b: i64, c: i64) -> BigInt {
    if n < 0 || a < 0 || b < 0 || c < 0 || a + b + c > n {
        return BigInt::zero();
    }
    binom(n, a) * binom(n - a, b) * binom(n - a - b, c)
}

/// Binary Krawtchouk polynomial `K_k^n(x) = sum_y (-1)^y C(x,y) C(n-x,k-y)`.
pub fn krawtchouk(k: i64, n: i64, x: i64) -> BigInt {
    if k < 0 || x < 0 || k > n || x > n {
        return BigInt::zero();
    }
    let mut acc = BigInt::zero();
    for y in 0..=k.min(x) {
        let term = binom(x, y) * binom(n - x, k - y);
        if y % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc
}
