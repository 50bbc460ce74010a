//! Logistic regression restricted to a predictor subset, fitted by
//! iteratively reweighted least squares (Newton updates on the canonical
//! logit link), plus likelihood-based scores.

use crate::dataset::{Design, GenotypeDataset, ModelMask};
use crate::error::{Error, Result};

/// Score max-norm required (together with the log-likelihood tolerance)
/// before a fit is declared converged.
const GRAD_TOL: f64 = 1e-7;

/// IRLS controls. Defaults: 50 iterations, 1e-8 relative log-likelihood
/// change, 1e-10 ridge stabilizer, separation flag at |eta| > 30.
#[derive(Debug, Clone)]
pub struct FitConfig {
    pub max_iterations: usize,
    pub convergence_tolerance: f64,
    pub ridge_epsilon: f64,
    pub separation_threshold: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            max_iterations: 50,
            convergence_tolerance: 1e-8,
            ridge_epsilon: 1e-10,
            separation_threshold: 30.0,
        }
    }
}

/// A fitted logistic submodel. Non-convergent fits keep their last
/// log-likelihood and are flagged rather than discarded, so screening has a
/// statistic for every model.
#[derive(Debug, Clone)]
pub struct GlmFit {
    pub mask: ModelMask,
    pub beta0: f64,
    /// One coefficient per included SNP, in ascending predictor order.
    pub beta: Vec<f64>,
    /// Coefficients of the forced covariates.
    pub gamma: Vec<f64>,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
    pub separation_flag: bool,
}

/// Outcome of the low-level fit; coefficients stay in the workspace.
pub(crate) struct CoreFit {
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    pub separated: bool,
}

/// Reusable buffers so lattice enumeration does not allocate per mask.
pub(crate) struct FitWorkspace {
    pub beta: Vec<f64>,
    eta: Vec<f64>,
    trial_eta: Vec<f64>,
    trial_beta: Vec<f64>,
    resid: Vec<f64>,
    weight: Vec<f64>,
    wcol: Vec<f64>,
    grad: Vec<f64>,
    hess: Vec<f64>,
    factor: Vec<f64>,
    delta: Vec<f64>,
}

impl FitWorkspace {
    pub fn new() -> Self {
        FitWorkspace {
            beta: Vec::new(),
            eta: Vec::new(),
            trial_eta: Vec::new(),
            trial_beta: Vec::new(),
            resid: Vec::new(),
            weight: Vec::new(),
            wcol: Vec::new(),
            grad: Vec::new(),
            hess: Vec::new(),
            factor: Vec::new(),
            delta: Vec::new(),
        }
    }

    fn prepare(&mut self, n: usize, k: usize) {
        self.beta.clear();
        self.beta.resize(k, 0.0);
        self.eta.resize(n, 0.0);
        self.trial_eta.resize(n, 0.0);
        self.trial_beta.resize(k, 0.0);
        self.resid.resize(n, 0.0);
        self.weight.resize(n, 0.0);
        self.wcol.resize(n, 0.0);
        self.grad.resize(k, 0.0);
        self.hess.resize(k * k, 0.0);
        self.factor.resize(k * k, 0.0);
        self.delta.resize(k, 0.0);
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Numerically stable log(1 + exp(x)).
#[inline]
fn log1pexp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let (ca, ra) = a.split_at(a.len() - a.len() % 4);
    let (cb, rb) = b.split_at(ca.len());
    for (xa, xb) in ca.chunks_exact(4).zip(cb.chunks_exact(4)) {
        acc[0] += xa[0] * xb[0];
        acc[1] += xa[1] * xb[1];
        acc[2] += xa[2] * xb[2];
        acc[3] += xa[3] * xb[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (xa, xb) in ra.iter().zip(rb) {
        s += xa * xb;
    }
    s
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Fill `eta = X_active * beta` and return the log-likelihood
/// `sum_i y_i eta_i - log(1 + exp(eta_i))`.
fn eval_loglik(design: &Design, active: &[usize], beta: &[f64], eta: &mut [f64]) -> f64 {
    eta.fill(0.0);
    for (&c, &b) in active.iter().zip(beta) {
        axpy(b, design.col(c), eta);
    }
    let mut ll = 0.0;
    for (&e, &yi) in eta.iter().zip(&design.y) {
        ll += yi * e - log1pexp(e);
    }
    ll
}

/// In-place lower Cholesky of a row-major `k x k` matrix.
/// Returns false on a non-positive pivot.
pub(crate) fn cholesky_in_place(a: &mut [f64], k: usize) -> bool {
    for j in 0..k {
        let mut d = a[j * k + j];
        for t in 0..j {
            d -= a[j * k + t] * a[j * k + t];
        }
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        let d = d.sqrt();
        a[j * k + j] = d;
        for i in j + 1..k {
            let mut s = a[i * k + j];
            for t in 0..j {
                s -= a[i * k + t] * a[j * k + t];
            }
            a[i * k + j] = s / d;
        }
    }
    true
}

fn chol_solve(l: &[f64], k: usize, b: &mut [f64]) {
    for i in 0..k {
        let mut s = b[i];
        for t in 0..i {
            s -= l[i * k + t] * b[t];
        }
        b[i] = s / l[i * k + i];
    }
    for i in (0..k).rev() {
        let mut s = b[i];
        for t in i + 1..k {
            s -= l[t * k + i] * b[t];
        }
        b[i] = s / l[i * k + i];
    }
}

/// Newton/IRLS fit over the given active design columns. `warm`, when
/// present, must be aligned with `active`.
pub(crate) fn fit_masked(
    design: &Design,
    active: &[usize],
    config: &FitConfig,
    warm: Option<&[f64]>,
    ws: &mut FitWorkspace,
) -> Result<CoreFit> {
    let n = design.n;
    let k = active.len();
    ws.prepare(n, k);
    if let Some(start) = warm {
        debug_assert_eq!(start.len(), k);
        ws.beta.copy_from_slice(start);
    }

    let mut loglik = eval_loglik(design, active, &ws.beta, &mut ws.eta);
    let mut rel_change = f64::INFINITY;
    let mut converged = false;
    let mut updates = 0;

    while updates < config.max_iterations {
        // Residuals, working weights and score at the current iterate.
        for i in 0..n {
            let mu = sigmoid(ws.eta[i]);
            ws.resid[i] = design.y[i] - mu;
            ws.weight[i] = mu * (1.0 - mu);
        }
        let mut gmax = 0.0f64;
        for (gc, &c) in ws.grad.iter_mut().zip(active) {
            *gc = dot(design.col(c), &ws.resid);
            gmax = gmax.max(gc.abs());
        }
        if updates > 0 && rel_change < config.convergence_tolerance && gmax < GRAD_TOL {
            converged = true;
            break;
        }

        // Observed-information Hessian: H[a][b] = sum_i w_i x_ia x_ib.
        for a in 0..k {
            let col_a = design.col(active[a]);
            for ((wc, xa), wi) in ws.wcol.iter_mut().zip(col_a).zip(&ws.weight) {
                *wc = xa * wi;
            }
            for b in 0..=a {
                let h = dot(&ws.wcol, design.col(active[b]));
                ws.hess[a * k + b] = h;
                ws.hess[b * k + a] = h;
            }
        }

        ws.factor.copy_from_slice(&ws.hess);
        if !cholesky_in_place(&mut ws.factor, k) {
            ws.factor.copy_from_slice(&ws.hess);
            for j in 0..k {
                ws.factor[j * k + j] += config.ridge_epsilon;
            }
            if !cholesky_in_place(&mut ws.factor, k) {
                return Err(Error::SingularDesign);
            }
        }
        ws.delta.copy_from_slice(&ws.grad);
        chol_solve(&ws.factor, k, &mut ws.delta);

        // Step halving keeps the log-likelihood nondecreasing.
        let mut step = 1.0;
        let mut trial_ll;
        loop {
            for i in 0..k {
                ws.trial_beta[i] = ws.beta[i] + step * ws.delta[i];
            }
            trial_ll = eval_loglik(design, active, &ws.trial_beta, &mut ws.trial_eta);
            if trial_ll + 1e-12 * (1.0 + loglik.abs()) >= loglik || step < 1e-8 {
                break;
            }
            step *= 0.5;
        }
        ws.beta.copy_from_slice(&ws.trial_beta);
        std::mem::swap(&mut ws.eta, &mut ws.trial_eta);
        rel_change = (trial_ll - loglik).abs() / (loglik.abs() + 0.1);
        loglik = trial_ll;
        updates += 1;
    }

    let separated = ws
        .eta
        .iter()
        .any(|e| e.abs() > config.separation_threshold);
    Ok(CoreFit {
        loglik,
        iterations: updates,
        converged,
        separated,
    })
}

/// Align a warm-start fit's coefficients with the active columns of `mask`.
pub(crate) fn warm_from_fit(warm: &GlmFit, mask: &ModelMask, q: usize) -> Vec<f64> {
    let mut flat = Vec::with_capacity(1 + mask.popcount() + q);
    flat.push(warm.beta0);
    let warm_idx: Vec<usize> = warm.mask.indices().collect();
    for j in mask.indices() {
        match warm_idx.binary_search(&j) {
            Ok(pos) => flat.push(warm.beta[pos]),
            Err(_) => flat.push(0.0),
        }
    }
    flat.extend_from_slice(&warm.gamma);
    flat
}

/// Maximize the logistic log-likelihood over the intercept, the SNP columns
/// in `mask`, and all forced covariates.
///
/// `warm_start` should come from a fit on the same dataset whose mask is a
/// superset or subset of `mask`; shared coefficients seed the iteration.
pub fn fit_logistic(
    data: &GenotypeDataset,
    mask: &ModelMask,
    config: &FitConfig,
    warm_start: Option<&GlmFit>,
) -> Result<GlmFit> {
    if mask.width() != data.p() {
        return Err(Error::DimensionMismatch(format!(
            "mask width {} does not match dataset p = {}",
            mask.width(),
            data.p()
        )));
    }
    let design = data.design();
    let active = design.active_columns(mask);
    let warm_flat = warm_start.map(|w| warm_from_fit(w, mask, data.q()));
    let mut ws = FitWorkspace::new();
    let core = fit_masked(design, &active, config, warm_flat.as_deref(), &mut ws)?;
    Ok(assemble_fit(mask, data.q(), &ws.beta, &core))
}

pub(crate) fn assemble_fit(mask: &ModelMask, q: usize, flat: &[f64], core: &CoreFit) -> GlmFit {
    let m = mask.popcount();
    GlmFit {
        mask: *mask,
        beta0: flat[0],
        beta: flat[1..1 + m].to_vec(),
        gamma: flat[1 + m..1 + m + q].to_vec(),
        loglik: core.loglik,
        converged: core.converged,
        iterations: core.iterations,
        separation_flag: core.separated,
    }
}

fn flat_coefficients(beta0: f64, beta: &[f64], gamma: &[f64]) -> Vec<f64> {
    let mut flat = Vec::with_capacity(1 + beta.len() + gamma.len());
    flat.push(beta0);
    flat.extend_from_slice(beta);
    flat.extend_from_slice(gamma);
    flat
}

fn check_coefficient_dims(
    data: &GenotypeDataset,
    mask: &ModelMask,
    beta: &[f64],
    gamma: &[f64],
) -> Result<()> {
    if mask.width() != data.p() {
        return Err(Error::DimensionMismatch(format!(
            "mask width {} does not match dataset p = {}",
            mask.width(),
            data.p()
        )));
    }
    if beta.len() != mask.popcount() {
        return Err(Error::DimensionMismatch(format!(
            "beta has {} entries, mask includes {}",
            beta.len(),
            mask.popcount()
        )));
    }
    if gamma.len() != data.q() {
        return Err(Error::DimensionMismatch(format!(
            "gamma has {} entries, dataset has q = {}",
            gamma.len(),
            data.q()
        )));
    }
    Ok(())
}

/// Log-likelihood of arbitrary coefficients for a masked model.
pub fn log_likelihood_at(
    data: &GenotypeDataset,
    mask: &ModelMask,
    beta0: f64,
    beta: &[f64],
    gamma: &[f64],
) -> Result<f64> {
    check_coefficient_dims(data, mask, beta, gamma)?;
    let design = data.design();
    let active = design.active_columns(mask);
    let flat = flat_coefficients(beta0, beta, gamma);
    let mut eta = vec![0.0; design.n];
    Ok(eval_loglik(design, &active, &flat, &mut eta))
}

/// Recomputes `sum_i [y_i eta_i - log(1 + exp(eta_i))]` from the stored
/// coefficients; equals `fit.loglik` up to floating rounding.
pub fn log_likelihood(fit: &GlmFit, data: &GenotypeDataset) -> f64 {
    log_likelihood_at(data, &fit.mask, fit.beta0, &fit.beta, &fit.gamma)
        .expect("fit and dataset dimensions agree")
}

/// Analytic score vector `X^T (y - mu)` at arbitrary coefficients, ordered
/// as intercept, masked SNPs ascending, covariates.
pub fn score_at(
    data: &GenotypeDataset,
    mask: &ModelMask,
    beta0: f64,
    beta: &[f64],
    gamma: &[f64],
) -> Result<Vec<f64>> {
    check_coefficient_dims(data, mask, beta, gamma)?;
    let design = data.design();
    let active = design.active_columns(mask);
    let flat = flat_coefficients(beta0, beta, gamma);
    let mut eta = vec![0.0; design.n];
    eval_loglik(design, &active, &flat, &mut eta);
    let resid: Vec<f64> = eta
        .iter()
        .zip(&design.y)
        .map(|(&e, &yi)| yi - sigmoid(e))
        .collect();
    Ok(active.iter().map(|&c| dot(design.col(c), &resid)).collect())
}

/// Score vector of a fitted model at its optimum.
pub fn score(fit: &GlmFit, data: &GenotypeDataset) -> Vec<f64> {
    score_at(data, &fit.mask, fit.beta0, &fit.beta, &fit.gamma)
        .expect("fit and dataset dimensions agree")
}

/// Number of free parameters: intercept + included SNPs + covariates.
pub fn model_dimension(fit: &GlmFit) -> usize {
    1 + fit.mask.popcount() + fit.gamma.len()
}

/// `-2 loglik + 2k`.
pub fn aic(fit: &GlmFit) -> f64 {
    -2.0 * fit.loglik + 2.0 * model_dimension(fit) as f64
}

/// `-2 loglik + k log n`.
pub fn bic(fit: &GlmFit, n: usize) -> f64 {
    -2.0 * fit.loglik + model_dimension(fit) as f64 * (n as f64).ln()
}
