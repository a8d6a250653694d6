//! Small Krylov solvers for the matrix-free systems in the proximal steps.

use crate::error::{Error, Result};

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct KrylovStats {
    pub iterations: usize,
    pub rel_residual: f64,
}

/// Preconditioned conjugate gradients for SPD `A`, starting from `x`.
/// Converges when `‖b − Ax‖ ≤ tol·‖b‖`.
pub(crate) fn pcg(
    mut apply_a: impl FnMut(&[f64], &mut [f64]),
    mut apply_m_inv: impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<KrylovStats> {
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.fill(0.0);
        return Ok(KrylovStats {
            iterations: 0,
            rel_residual: 0.0,
        });
    }
    let mut r = vec![0.0; n];
    apply_a(x, &mut r);
    r.iter_mut().zip(b).for_each(|(r, b)| *r = b - *r);
    let mut z = vec![0.0; n];
    apply_m_inv(&r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut res = norm(&r) / bnorm;
    for it in 0..max_iter {
        if res <= tol {
            return Ok(KrylovStats {
                iterations: it,
                rel_residual: res,
            });
        }
        apply_a(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = norm(&r) / bnorm;
        apply_m_inv(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    if res <= tol {
        return Ok(KrylovStats {
            iterations: max_iter,
            rel_residual: res,
        });
    }
    Err(Error::LinearSolve {
        iterations: max_iter,
        residual: res,
    })
}

/// Restarted GMRES with right preconditioning, starting from `x`.
pub(crate) fn gmres(
    mut apply_a: impl FnMut(&[f64], &mut [f64]),
    mut apply_m_inv: impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<KrylovStats> {
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.fill(0.0);
        return Ok(KrylovStats {
            iterations: 0,
            rel_residual: 0.0,
        });
    }
    let m = restart.max(1);
    let mut v = vec![vec![0.0; n]; m + 1];
    let mut zs = vec![vec![0.0; n]; m];
    let mut hess = vec![vec![0.0; m]; m + 1];
    let (mut cs, mut sn, mut g) = (vec![0.0; m], vec![0.0; m], vec![0.0; m + 1]);
    let mut w = vec![0.0; n];
    let mut total = 0;
    let mut res;
    loop {
        apply_a(x, &mut w);
        for i in 0..n {
            v[0][i] = b[i] - w[i];
        }
        let beta = norm(&v[0]);
        res = beta / bnorm;
        if res <= tol || total >= max_iter {
            break;
        }
        v[0].iter_mut().for_each(|e| *e /= beta);
        g.fill(0.0);
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            apply_m_inv(&v[k], &mut zs[k]);
            apply_a(&zs[k], &mut w);
            for j in 0..=k {
                let h = dot(&w, &v[j]);
                hess[j][k] = h;
                for i in 0..n {
                    w[i] -= h * v[j][i];
                }
            }
            let hn = norm(&w);
            hess[k + 1][k] = hn;
            if hn > 0.0 {
                for i in 0..n {
                    v[k + 1][i] = w[i] / hn;
                }
            }
            for j in 0..k {
                let t = cs[j] * hess[j][k] + sn[j] * hess[j + 1][k];
                hess[j + 1][k] = -sn[j] * hess[j][k] + cs[j] * hess[j + 1][k];
                hess[j][k] = t;
            }
            let d = hess[k][k].hypot(hess[k + 1][k]);
            if d == 0.0 {
                cs[k] = 1.0;
                sn[k] = 0.0;
            } else {
                cs[k] = hess[k][k] / d;
                sn[k] = hess[k + 1][k] / d;
            }
            hess[k][k] = d;
            hess[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total += 1;
            k_used = k + 1;
            if g[k + 1].abs() / bnorm <= tol || hn == 0.0 || total >= max_iter {
                break;
            }
        }
        // back substitution for the least-squares coefficients
        let mut y = vec![0.0; k_used];
        for j in (0..k_used).rev() {
            let mut s = g[j];
            for l in j + 1..k_used {
                s -= hess[j][l] * y[l];
            }
            y[j] = if hess[j][j] != 0.0 { s / hess[j][j] } else { 0.0 };
        }
        for (j, yj) in y.iter().enumerate() {
            for i in 0..n {
                x[i] += yj * zs[j][i];
            }
        }
    }
    if res <= tol {
        Ok(KrylovStats {
            iterations: total,
            rel_residual: res,
        })
    } else {
        Err(Error::LinearSolve {
            iterations: total,
            residual: res,
        })
    }
}
