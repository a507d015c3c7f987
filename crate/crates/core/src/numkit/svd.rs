//! Thin SVD by one-sided (Hestenes) Jacobi rotations.

use ndarray::{Array1, Array2};

use super::NumError;

/// `M = U · diag(S) · Vt` with `U: m×r`, `S: r`, `Vt: r×n`, `r = min(m, n)`.
///
/// Singular values are sorted in descending order. Each right singular
/// vector (row of `Vt`) has its largest-magnitude entry positive, with the
/// matching column of `U` flipped alongside, so results are reproducible.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: Array2<f64>,
    pub s: Array1<f64>,
    pub vt: Array2<f64>,
}

impl SvdResult {
    pub fn reconstruct(&self) -> Array2<f64> {
        let mut us = self.u.clone();
        for (j, mut col) in us.columns_mut().into_iter().enumerate() {
            col *= self.s[j];
        }
        us.dot(&self.vt)
    }
}

const MAX_SWEEPS: usize = 80;

pub fn svd(m: &Array2<f64>) -> Result<SvdResult, NumError> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(NumError::NonFinite("svd input"));
    }
    let (rows, cols) = m.dim();
    if rows >= cols {
        let (u, s, v) = jacobi(m);
        Ok(finish(u, s, v))
    } else {
        // M^T = U' S V'^T  =>  M = V' S U'^T
        let (u_t, s, v_t) = jacobi(&m.t().to_owned());
        Ok(finish(v_t, s, u_t))
    }
}

/// Returns `(left, s, right)` with `left` and `right` stored as column lists.
/// `left` has orthonormal columns (completed where `s` is zero).
fn jacobi(a: &Array2<f64>) -> (Vec<Vec<f64>>, Vec<f64>, Vec<Vec<f64>>) {
    let (m, n) = a.dim();
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j).to_vec()).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let (cp, cq) = (&cols[p], &cols[q]);
                    let mut alpha = 0.0;
                    let mut beta = 0.0;
                    let mut gamma = 0.0;
                    for i in 0..m {
                        alpha += cp[i] * cp[i];
                        beta += cq[i] * cq[i];
                        gamma += cp[i] * cq[i];
                    }
                    (alpha, beta, gamma)
                };
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let sigma: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let sigma_max = sigma.iter().copied().fold(0.0, f64::max);
    let tol = sigma_max * (m.max(n) as f64) * f64::EPSILON;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]).then(i.cmp(&j)));

    let mut left = Vec::with_capacity(n);
    let mut s = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    let mut missing = Vec::new();
    for (slot, &j) in order.iter().enumerate() {
        if sigma[j] > tol && sigma[j] > 0.0 {
            left.push(cols[j].iter().map(|x| x / sigma[j]).collect());
            s.push(sigma[j]);
        } else {
            left.push(vec![0.0; m]);
            s.push(0.0);
            missing.push(slot);
        }
        right.push(v[j].clone());
    }
    complete_basis(&mut left, &missing, m);
    (left, s, right)
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = cols.split_at_mut(q);
    let cp = &mut head[p];
    let cq = &mut tail[0];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Fills the listed columns with unit vectors orthogonal to every other column.
fn complete_basis(cols: &mut [Vec<f64>], missing: &[usize], m: usize) {
    let mut candidate = 0usize;
    for &slot in missing {
        while candidate < m {
            let mut e = vec![0.0; m];
            e[candidate] = 1.0;
            candidate += 1;
            // two Gram-Schmidt passes for numerical orthogonality
            for _ in 0..2 {
                for (k, c) in cols.iter().enumerate() {
                    if k == slot || (missing.contains(&k) && c.iter().all(|x| *x == 0.0)) {
                        continue;
                    }
                    let proj: f64 = c.iter().zip(&e).map(|(a, b)| a * b).sum();
                    for (ei, ci) in e.iter_mut().zip(c) {
                        *ei -= proj * ci;
                    }
                }
            }
            let norm = e.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.5 {
                cols[slot] = e.into_iter().map(|x| x / norm).collect();
                break;
            }
        }
    }
}

fn finish(left: Vec<Vec<f64>>, s: Vec<f64>, right: Vec<Vec<f64>>) -> SvdResult {
    let r = s.len();
    let m = left.first().map_or(0, Vec::len);
    let n = right.first().map_or(0, Vec::len);
    let mut u = Array2::zeros((m, r));
    let mut vt = Array2::zeros((r, n));
    for j in 0..r {
        let (mut best, mut best_abs) = (0usize, -1.0f64);
        for (i, x) in right[j].iter().enumerate() {
            if x.abs() > best_abs {
                best_abs = x.abs();
                best = i;
            }
        }
        let sign = if right[j][best] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..m {
            u[[i, j]] = sign * left[j][i];
        }
        for i in 0..n {
            vt[[j, i]] = sign * right[j][i];
        }
    }
    SvdResult {
        u,
        s: Array1::from(s),
        vt,
    }
}
