//! Independent test oracles. Everything here is implemented from scratch
//! against textbook definitions and never calls into the fitting or
//! screening paths it is used to check.

#![allow(dead_code)]

use vscs_core::{GenotypeDataset, ModelMask};

/// Dense design matrix (intercept, masked SNPs, covariates) as rows.
fn oracle_design(data: &GenotypeDataset, mask: &ModelMask) -> Vec<Vec<f64>> {
    let mut rows = Vec::with_capacity(data.n());
    for i in 0..data.n() {
        let mut row = vec![1.0];
        for j in mask.indices() {
            row.push(data.genotype(i, j) as f64);
        }
        for c in 0..data.q() {
            row.push(data.covariate(i, c));
        }
        rows.push(row);
    }
    rows
}

fn oracle_loglik(rows: &[Vec<f64>], y: &[u8], beta: &[f64]) -> f64 {
    let mut ll = 0.0;
    for (row, &yi) in rows.iter().zip(y) {
        let eta: f64 = row.iter().zip(beta).map(|(x, b)| x * b).sum();
        let log1pexp = if eta > 0.0 {
            eta + (-eta).exp().ln_1p()
        } else {
            eta.exp().ln_1p()
        };
        ll += yi as f64 * eta - log1pexp;
    }
    ll
}

/// Gaussian elimination with partial pivoting.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let k = b.len();
    for col in 0..k {
        let pivot = (col..k).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in 0..k {
            if row == col {
                continue;
            }
            let factor = a[row][col] / a[col][col];
            for c in col..k {
                a[row][c] -= factor * a[col][c];
            }
            b[row] -= factor * b[col];
        }
    }
    Some((0..k).map(|i| b[i] / a[i][i]).collect())
}

/// Generic damped second-order optimizer for the logistic log-likelihood,
/// independent of the library fitter. Returns the maximized log-likelihood.
pub fn newton_oracle_loglik(data: &GenotypeDataset, mask: &ModelMask) -> f64 {
    let rows = oracle_design(data, mask);
    let y = data.responses();
    let k = rows[0].len();
    let mut beta = vec![0.0; k];
    let mut ll = oracle_loglik(&rows, y, &beta);
    for _ in 0..200 {
        let mut grad = vec![0.0; k];
        let mut hess = vec![vec![0.0; k]; k];
        for (row, &yi) in rows.iter().zip(y) {
            let eta: f64 = row.iter().zip(&beta).map(|(x, b)| x * b).sum();
            let mu = 1.0 / (1.0 + (-eta).exp());
            let w = mu * (1.0 - mu);
            for a in 0..k {
                grad[a] += row[a] * (yi as f64 - mu);
                for b in 0..=a {
                    hess[a][b] += w * row[a] * row[b];
                    if a != b {
                        hess[b][a] = hess[a][b];
                    }
                }
            }
        }
        let Some(step) = solve_dense(hess, grad.clone()) else {
            break;
        };
        let mut scale = 1.0;
        let mut improved = false;
        for _ in 0..40 {
            let trial: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + scale * s).collect();
            let trial_ll = oracle_loglik(&rows, y, &trial);
            if trial_ll >= ll - 1e-13 {
                beta = trial;
                improved = trial_ll - ll > 1e-12;
                ll = trial_ll;
                break;
            }
            scale *= 0.5;
        }
        let gmax = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if !improved && gmax < 1e-9 {
            break;
        }
    }
    ll
}

/// Lower incomplete gamma P(a, x) via the plain power series only.
fn gamma_p_series(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    // ln Gamma by Stirling with correction terms, independent of the
    // library's Lanczos coefficients.
    let ln_gamma = |mut z: f64| {
        let mut acc = 0.0;
        while z < 12.0 {
            acc -= z.ln();
            z += 1.0;
        }
        let inv = 1.0 / z;
        let inv2 = inv * inv;
        acc + 0.5 * ((2.0 * std::f64::consts::PI).ln() - z.ln()) + z * (z.ln() - 1.0)
            + inv / 12.0 - inv * inv2 / 360.0 + inv * inv2 * inv2 / 1260.0
    };
    let mut term = 1.0 / a;
    let mut sum = term;
    for k in 1..2000 {
        term *= x / (a + k as f64);
        sum += term;
        if term.abs() < 1e-16 * sum.abs() {
            break;
        }
    }
    (sum.ln() + a * x.ln() - x - ln_gamma(a)).exp()
}

/// Upper chi-square quantile by bisection on the series-only survival
/// function.
pub fn chisq_quantile_oracle(alpha: f64, nu: usize) -> f64 {
    let sf = |x: f64| 1.0 - gamma_p_series(nu as f64 / 2.0, x / 2.0);
    let mut lo = 0.0;
    let mut hi = 20.0 + 4.0 * nu as f64;
    while sf(hi) > alpha {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sf(mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Pairwise-comparison AUC (Mann-Whitney with ties counted one half).
pub fn pairwise_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let mut concordant = 0.0;
    let mut pairs = 0.0;
    for (i, (&si, &li)) in scores.iter().zip(labels).enumerate() {
        for (&sj, &lj) in scores.iter().zip(labels).skip(i + 1) {
            let (sp, sn) = match (li, lj) {
                (1, 0) => (si, sj),
                (0, 1) => (sj, si),
                _ => continue,
            };
            pairs += 1.0;
            concordant += if sp > sn {
                1.0
            } else if sp == sn {
                0.5
            } else {
                0.0
            };
        }
    }
    concordant / pairs
}

/// O(|V|^2) lower-boundary extraction by pairwise subset checks.
pub fn brute_force_lbms(members: &[u32]) -> Vec<u32> {
    let mut out: Vec<u32> = members
        .iter()
        .copied()
        .filter(|&m| {
            !members
                .iter()
                .any(|&other| other != m && other & !m == 0)
        })
        .collect();
    out.sort_unstable();
    out
}

/// Bit-by-bit Hamming distance.
pub fn hamming_oracle(a: u32, b: u32, width: usize) -> usize {
    (0..width)
        .filter(|&j| (a >> j) & 1 != (b >> j) & 1)
        .count()
}
