//! Exact linear feasibility for `Ax = b, x >= 0` over the rationals.
//!
//! Phase-1 simplex on a dense tableau with Bland's pivoting rule, so
//! termination is unconditional. On infeasible systems the final objective
//! row yields a separating certificate `y` with `yᵀA <= 0 < yᵀb`, which is
//! re-verified against the original data before being returned.

use crate::error::{CwError, Result};
use crate::rational::{qone, qzero, Q};
use num::Zero;

pub(crate) enum LinearFeasibility {
    /// A solution `x >= 0` with `Ax = b`, re-verified exactly.
    Feasible(Vec<Q>),
    /// A certificate `y` with `yᵀA <= 0` and `yᵀb > 0`, re-verified exactly.
    Infeasible(Vec<Q>),
}

pub(crate) fn solve_eq_nonneg(a: &[Vec<Q>], b: &[Q]) -> Result<LinearFeasibility> {
    let m = b.len();
    if a.len() != m {
        return Err(CwError::internal("row count mismatch in feasibility solve"));
    }
    let k = a.first().map_or(0, Vec::len);
    if a.iter().any(|row| row.len() != k) {
        return Err(CwError::internal("ragged matrix in feasibility solve"));
    }
    if m == 0 {
        return Ok(LinearFeasibility::Feasible(vec![qzero(); k]));
    }

    // Tableau rows [A' | I | b'] with b' >= 0 (rows sign-flipped as needed);
    // artificial i starts basic in row i.
    let width = k + m + 1;
    let mut rows: Vec<Vec<Q>> = Vec::with_capacity(m);
    let mut sign = vec![false; m]; // true = row negated
    for i in 0..m {
        let flip = b[i] < qzero();
        sign[i] = flip;
        let mut row = Vec::with_capacity(width);
        for j in 0..k {
            row.push(if flip { -&a[i][j] } else { a[i][j].clone() });
        }
        for j in 0..m {
            row.push(if j == i { qone() } else { qzero() });
        }
        row.push(if flip { -&b[i] } else { b[i].clone() });
        rows.push(row);
    }
    // Objective row for min(sum of artificials), reduced against the initial
    // basis: structural entries sum the rows, artificial entries start at 0.
    let mut obj = vec![qzero(); width];
    for j in (0..k).chain([k + m]) {
        for row in &rows {
            obj[j] += &row[j];
        }
    }
    let mut basis: Vec<usize> = (k..k + m).collect();

    loop {
        // Bland: entering column = smallest index with positive reduced cost.
        let Some(enter) = (0..k + m).find(|&j| obj[j] > qzero()) else {
            break;
        };
        // Leaving row: minimum ratio, ties broken by smallest basis variable.
        let mut leave: Option<usize> = None;
        for i in 0..m {
            if rows[i][enter] <= qzero() {
                continue;
            }
            let better = match leave {
                None => true,
                Some(l) => {
                    let cur = &rows[l][width - 1] * &rows[i][enter];
                    let new = &rows[i][width - 1] * &rows[l][enter];
                    new < cur || (new == cur && basis[i] < basis[l])
                }
            };
            if better {
                leave = Some(i);
            }
        }
        let Some(r) = leave else {
            return Err(CwError::internal(
                "phase-1 objective unbounded below; it is bounded by zero",
            ));
        };
        // Pivot on (r, enter).
        let piv = rows[r][enter].clone();
        for v in rows[r].iter_mut() {
            *v /= &piv;
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r || row[enter].is_zero() {
                continue;
            }
            let f = row[enter].clone();
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                *v -= &f * p;
            }
        }
        if !obj[enter].is_zero() {
            let f = obj[enter].clone();
            for (v, p) in obj.iter_mut().zip(&pivot_row) {
                *v -= &f * p;
            }
        }
        basis[r] = enter;
    }

    if obj[width - 1].is_zero() {
        let mut x = vec![qzero(); k];
        for (i, &bv) in basis.iter().enumerate() {
            if bv < k {
                x[bv] = rows[i][width - 1].clone();
            }
        }
        for (i, row) in a.iter().enumerate() {
            let mut acc = qzero();
            for (aj, xj) in row.iter().zip(&x) {
                acc += aj * xj;
            }
            if acc != b[i] {
                return Err(CwError::internal(format!("feasible solution fails row {i}")));
            }
        }
        if x.iter().any(|v| *v < qzero()) {
            return Err(CwError::internal("feasible solution has a negative entry"));
        }
        Ok(LinearFeasibility::Feasible(x))
    } else {
        // The objective row is sum(rows) minus pivoting corrections, so its
        // artificial block plus one per coordinate is the multiplier vector
        // against the sign-normalized rows; undo the sign flips.
        let mut y = Vec::with_capacity(m);
        for i in 0..m {
            let mu = &obj[k + i] + qone();
            y.push(if sign[i] { -mu } else { mu });
        }
        for j in 0..k {
            let mut acc = qzero();
            for i in 0..m {
                acc += &y[i] * &a[i][j];
            }
            if acc > qzero() {
                return Err(CwError::internal(format!("certificate fails column {j}")));
            }
        }
        let mut yb = qzero();
        for i in 0..m {
            yb += &y[i] * &b[i];
        }
        if yb <= qzero() {
            return Err(CwError::internal("certificate has nonpositive value"));
        }
        Ok(LinearFeasibility::Infeasible(y))
    }
}
