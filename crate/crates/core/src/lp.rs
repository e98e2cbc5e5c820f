//! Exact rational simplex for small dense LPs, and the Delsarte bound.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::combinatorics::krawtchouk;

/// Optimum of `max c.x` subject to `A x <= b`, `x >= 0`, with `b >= 0` so
/// the origin is feasible. `None` if unbounded.
///
/// Bland's rule, so the method terminates on degenerate problems.
pub fn simplex_max(
    c: &[BigRational],
    a: &[Vec<BigRational>],
    b: &[BigRational],
) -> Option<(BigRational, Vec<BigRational>)> {
    let (rows, cols) = (a.len(), c.len());
    assert!(b.iter().all(|v| !v.is_negative()), "origin must be feasible");
    let width = cols + rows + 1;
    let mut t: Vec<Vec<BigRational>> = (0..rows)
        .map(|r| {
            let mut row = vec![BigRational::zero(); width];
            row[..cols].clone_from_slice(&a[r]);
            row[cols + r] = BigRational::one();
            row[width - 1] = b[r].clone();
            row
        })
        .collect();
    // Reduced costs of the objective row, stored as -c.
    let mut z: Vec<BigRational> = vec![BigRational::zero(); width];
    for (k, v) in c.iter().enumerate() {
        z[k] = -v;
    }
    let mut basis: Vec<usize> = (cols..cols + rows).collect();

    loop {
        let Some(enter) = (0..width - 1).find(|&k| z[k].is_negative()) else {
            break;
        };
        let mut leave: Option<(usize, BigRational)> = None;
        for r in 0..rows {
            if t[r][enter].is_positive() {
                let ratio = &t[r][width - 1] / &t[r][enter];
                let better = match &leave {
                    None => true,
                    Some((lr, best)) => ratio < *best || (ratio == *best && basis[r] < basis[*lr]),
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let (pr, _) = leave?;
        let piv = t[pr][enter].clone();
        for v in t[pr].iter_mut() {
            *v /= &piv;
        }
        let pivot_row = t[pr].clone();
        for (r, row) in t.iter_mut().enumerate() {
            if r != pr && !row[enter].is_zero() {
                let f = row[enter].clone();
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= &f * p;
                }
            }
        }
        if !z[enter].is_zero() {
            let f = z[enter].clone();
            for (v, p) in z.iter_mut().zip(&pivot_row) {
                *v -= &f * p;
            }
        }
        basis[pr] = enter;
    }

    let mut x = vec![BigRational::zero(); cols];
    for (r, &bv) in basis.iter().enumerate() {
        if bv < cols {
            x[bv] = t[r][width - 1].clone();
        }
    }
    Some((z[width - 1].clone(), x))
}

/// Delsarte's linear programming bound for binary codes of length `n` and
/// minimum distance `d`: maximize `sum_j A_j` with `A_0 = 1`, `A_j >= 0`,
/// `A_j = 0` for `0 < j < d`, and `sum_j A_j K_k(j) >= 0` for every `k`.
pub fn delsarte_lp(n: usize, d: usize) -> BigRational {
    let support: Vec<usize> = (d.max(1)..=n).collect();
    if support.is_empty() {
        return BigRational::one();
    }
    let ni = n as i64;
    let c = vec![BigRational::one(); support.len()];
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for k in 1..=ni {
        a.push(
            support
                .iter()
                .map(|&j| BigRational::from_integer(-krawtchouk(k, ni, j as i64)))
                .collect(),
        );
        b.push(BigRational::from_integer(krawtchouk(k, ni, 0)));
    }
    let (value, _) = simplex_max(&c, &a, &b).expect("the Delsarte LP is bounded by 2^n");
    value + BigRational::one()
}

/// `floor` of a rational as a `BigInt`.
pub fn floor(r: &BigRational) -> BigInt {
    r.floor().to_integer()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::form::int;

    #[test]
    fn textbook_problem() {
        // max 3x + 2y, x + y <= 4, x + 3y <= 6, x <= 3
        let c = vec![int(3), int(2)];
        let a = vec![vec![int(1), int(1)], vec![int(1), int(3)], vec![int(1), int(0)]];
        let b = vec![int(4), int(6), int(3)];
        let (v, x) = simplex_max(&c, &a, &b).unwrap();
        assert_eq!(v, int(11));
        assert_eq!(x, vec![int(3), int(1)]);
    }

    #[test]
    fn unbounded_is_reported() {
        let c = vec![int(1)];
        let a = vec![vec![int(-1)]];
        assert!(simplex_max(&c, &a, &[int(1)]).is_none());
    }

    #[test]
    fn delsarte_edge_cases() {
        for n in 1..=10 {
            assert_eq!(delsarte_lp(n, n + 1), int(1));
            assert_eq!(delsarte_lp(n, 1), int(1i64 << n));
        }
    }

    #[test]
    fn delsarte_known_values() {
        // Perfect codes meet the LP bound.
        assert_eq!(delsarte_lp(7, 3), int(16));
        assert_eq!(delsarte_lp(8, 4), int(16));
        assert_eq!(delsarte_lp(23, 7), int(4096));
    }
}
