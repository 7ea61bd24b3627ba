//! Dense determinants and a small two-phase simplex solver.

use crate::scalar::Scalar;

/// Determinant by Gaussian elimination with partial pivoting. Only an exactly
/// zero pivot column short-circuits to zero.
pub fn determinant<S: Scalar>(mut a: Vec<Vec<S>>) -> S {
    let n = a.len();
    let mut det = S::one();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                a[i][col].abs_val().partial_cmp(&a[j][col].abs_val()).unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("nonempty range");
        if a[pivot][col].is_zero() {
            return S::zero();
        }
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        let p = a[col][col].clone();
        det = det * p.clone();
        for row in col + 1..n {
            if a[row][col].is_zero() {
                continue;
            }
            let factor = a[row][col].clone() / p.clone();
            for k in col..n {
                let delta = factor.clone() * a[col][k].clone();
                a[row][k] = a[row][k].clone() - delta;
            }
        }
    }
    det
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<S> {
    /// Optimal primal point, objective value, and duals `y` with `Aᵀy >= c`.
    Optimal { x: Vec<S>, value: S, duals: Vec<S> },
    /// Farkas certificate: `Aᵀy >= 0` and `bᵀy < 0`.
    Infeasible { farkas: Vec<S> },
    Unbounded,
}

/// Maximizes `cᵀx` subject to `Ax = b`, `x >= 0` with the two-phase
/// tableau method and Bland's rule.
pub fn maximize<S: Scalar>(c: &[S], a: &[Vec<S>], b: &[S]) -> LpOutcome<S> {
    let rows = a.len();
    let n = c.len();
    let width = n + rows + 1;
    let eps = S::feas_tol();

    let mut flipped = vec![false; rows];
    let mut t: Vec<Vec<S>> = Vec::with_capacity(rows + 1);
    for i in 0..rows {
        let mut row = Vec::with_capacity(width);
        flipped[i] = b[i] < S::zero();
        let sign = if flipped[i] { -S::one() } else { S::one() };
        row.extend(a[i].iter().map(|v| sign.clone() * v.clone()));
        row.extend((0..rows).map(|j| if j == i { S::one() } else { S::zero() }));
        row.push(sign * b[i].clone());
        t.push(row);
    }
    let mut basis: Vec<usize> = (n..n + rows).collect();

    // Phase 1: maximize -sum(artificials). Objective row holds reduced costs.
    let mut obj = vec![S::zero(); width];
    for j in n..n + rows {
        obj[j] = S::one();
    }
    for row in &t {
        for j in 0..width {
            obj[j] = obj[j].clone() - row[j].clone();
        }
    }
    t.push(obj);
    run_simplex(&mut t, &mut basis, n + rows, &eps);

    let phase1 = t[rows][width - 1].clone();
    if phase1 < -eps.clone() {
        // Duals of phase 1 sit under the artificial columns, offset by their cost.
        let farkas = (0..rows)
            .map(|i| {
                let y = t[rows][n + i].clone() - S::one();
                if flipped[i] { -y } else { y }
            })
            .collect();
        return LpOutcome::Infeasible { farkas };
    }

    // Drive zero-level artificials out of the basis where possible.
    for r in 0..rows {
        if basis[r] >= n {
            if let Some(col) = (0..n).find(|&j| t[r][j].abs_val() > eps) {
                pivot(&mut t, &mut basis, r, col);
            }
        }
    }

    // Phase 2 objective row: -c plus basis corrections.
    let mut obj = vec![S::zero(); width];
    for j in 0..n {
        obj[j] = -c[j].clone();
    }
    for r in 0..rows {
        let bj = basis[r];
        if bj < n && !c[bj].is_zero() {
            let cb = c[bj].clone();
            for j in 0..width {
                obj[j] = obj[j].clone() + cb.clone() * t[r][j].clone();
            }
        }
    }
    t[rows] = obj;
    if !run_simplex(&mut t, &mut basis, n, &eps) {
        return LpOutcome::Unbounded;
    }

    let mut x = vec![S::zero(); n];
    for r in 0..rows {
        if basis[r] < n {
            x[basis[r]] = t[r][width - 1].clone();
        }
    }
    let duals = (0..rows)
        .map(|i| {
            let y = t[rows][n + i].clone();
            if flipped[i] { -y } else { y }
        })
        .collect();
    LpOutcome::Optimal { x, value: t[rows][width - 1].clone(), duals }
}

/// Pivots until optimal; returns `false` if unbounded. Only the first
/// `enter_limit` columns may enter.
fn run_simplex<S: Scalar>(t: &mut [Vec<S>], basis: &mut [usize], enter_limit: usize, eps: &S) -> bool {
    let rows = basis.len();
    let rhs = t[0].len() - 1;
    loop {
        let Some(enter) = (0..enter_limit).find(|&j| t[rows][j] < -eps.clone()) else {
            return true;
        };
        let mut leave: Option<(usize, S)> = None;
        for r in 0..rows {
            if t[r][enter] > eps.clone() {
                let ratio = t[r][rhs].clone() / t[r][enter].clone();
                let better = match &leave {
                    None => true,
                    Some((lr, best)) => ratio < *best || (ratio == *best && basis[r] < basis[*lr]),
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let Some((r, _)) = leave else {
            return false;
        };
        pivot(t, basis, r, enter);
    }
}

fn pivot<S: Scalar>(t: &mut [Vec<S>], basis: &mut [usize], r: usize, col: usize) {
    let p = t[r][col].clone();
    for v in t[r].iter_mut() {
        *v = v.clone() / p.clone();
    }
    let pivot_row = t[r].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i == r || row[col].is_zero() {
            continue;
        }
        let factor = row[col].clone();
        for (v, pv) in row.iter_mut().zip(&pivot_row) {
            *v = v.clone() - factor.clone() * pv.clone();
        }
    }
    basis[r] = col;
}

/// Value and optimal mixed strategies of `min_p max_q pᵀRq` (rows minimize).
pub fn matrix_game<S: Scalar>(r: &[Vec<S>]) -> (S, Vec<S>, Vec<S>) {
    let rows = r.len();
    let cols = r[0].len();
    let mut lowest = r[0][0].clone();
    for row in r {
        for v in row {
            lowest = lowest.min_val(v.clone());
        }
    }
    // Shift so every payoff is at least one; the value moves by the same constant.
    let shift = S::one() - lowest;
    // maximize 1ᵀu  s.t.  R'ᵀu + s = 1,  u, s >= 0;  value = 1 / 1ᵀu.
    let mut a = Vec::with_capacity(cols);
    for j in 0..cols {
        let mut row = Vec::with_capacity(rows + cols);
        row.extend((0..rows).map(|i| r[i][j].clone() + shift.clone()));
        row.extend((0..cols).map(|k| if k == j { S::one() } else { S::zero() }));
        a.push(row);
    }
    let mut c = vec![S::one(); rows];
    c.extend((0..cols).map(|_| S::zero()));
    let b = vec![S::one(); cols];
    match maximize(&c, &a, &b) {
        LpOutcome::Optimal { x, value, duals } => {
            let p: Vec<S> = x[..rows].iter().map(|u| u.clone() / value.clone()).collect();
            let total = duals.iter().fold(S::zero(), |acc, y| acc + y.clone());
            let q: Vec<S> = duals.iter().map(|y| y.clone() / total.clone()).collect();
            (S::one() / value - shift, p, q)
        }
        other => unreachable!("shifted matrix game LP is feasible and bounded: {other:?}"),
    }
}
