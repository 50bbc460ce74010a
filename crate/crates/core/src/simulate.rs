//! Synthetic genotype/phenotype generation via a latent multivariate-normal
//! threshold model, and the Monte Carlo experiment harnesses.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::aggregate::{aggregate_lbm, forward_select, SelectionCriterion};
use crate::dataset::{GenotypeDataset, ModelMask};
use crate::dist::normal_quantile;
use crate::error::{Error, Result};
use crate::glm::FitConfig;
use crate::importance::avg_hamming_to_target;
use crate::model_space::{extract_lbms, scan_lattice, WarmStartPolicy};

/// One simulation setting: coefficient pattern and latent correlation.
///
/// Models 1/2 use constant-size coefficients, models 3/4 decreasing sizes;
/// models 1/3 use a Toeplitz latent correlation, models 2/4 block-diagonal.
#[derive(Debug, Clone, Copy)]
pub struct SimSpec {
    pub model_id: u8,
    pub n: usize,
    pub p: usize,
    pub rho: f64,
    pub seed: u64,
}

impl SimSpec {
    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.model_id) {
            return Err(Error::DomainError(format!(
                "model_id = {} must be in 1..=4",
                self.model_id
            )));
        }
        if self.p == 0 || self.p % 2 != 0 {
            return Err(Error::DomainError(format!(
                "p = {} must be positive and even (k = p/2 true predictors)",
                self.p
            )));
        }
        if matches!(self.model_id, 2 | 4) && self.p % 4 != 0 {
            return Err(Error::DomainError(format!(
                "p = {} must be divisible by 4 for block covariance",
                self.p
            )));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::DomainError(format!("rho = {} must lie in [0, 1)", self.rho)));
        }
        if self.n <= self.p + 1 {
            return Err(Error::DomainError(format!(
                "n = {} must exceed p + 1 = {}",
                self.n,
                self.p + 1
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovKind {
    Toeplitz,
    Block,
}

/// Latent correlation structure: Toeplitz `rho^|i-j|` or block-diagonal
/// with four `p/4`-sized blocks of constant within-block correlation.
#[derive(Debug, Clone, Copy)]
pub struct CovStructure {
    pub kind: CovKind,
    pub rho: f64,
}

impl CovStructure {
    /// Dense row-major `p x p` correlation matrix.
    pub fn matrix(&self, p: usize) -> Vec<f64> {
        let mut sigma = vec![0.0; p * p];
        match self.kind {
            CovKind::Toeplitz => {
                for i in 0..p {
                    for j in 0..p {
                        sigma[i * p + j] = self.rho.powi((i as i32 - j as i32).abs());
                    }
                }
            }
            CovKind::Block => {
                let block = p / 4;
                for i in 0..p {
                    for j in 0..p {
                        sigma[i * p + j] = if i == j {
                            1.0
                        } else if i / block == j / block {
                            self.rho
                        } else {
                            0.0
                        };
                    }
                }
            }
        }
        sigma
    }
}

/// Latent correlation used by each simulation model.
pub fn cov_for_model(spec: &SimSpec) -> CovStructure {
    let kind = match spec.model_id {
        2 | 4 => CovKind::Block,
        _ => CovKind::Toeplitz,
    };
    CovStructure { kind, rho: spec.rho }
}

/// True coefficient vector: the first `k = p/2` entries are `(-1)^j`
/// (models 1/2) or `(-1)^j / j` (models 3/4) for `j = 1..k`, the rest zero.
pub fn true_beta(spec: &SimSpec) -> Vec<f64> {
    let k = spec.p / 2;
    let mut beta = vec![0.0; spec.p];
    for idx in 0..k {
        let j = (idx + 1) as f64;
        let sign = if (idx + 1) % 2 == 1 { -1.0 } else { 1.0 };
        beta[idx] = match spec.model_id {
            1 | 2 => sign,
            _ => sign / j,
        };
    }
    beta
}

/// Mask of the nonzero true coefficients (the first p/2 predictors).
pub fn true_mask(spec: &SimSpec) -> ModelMask {
    let indices: Vec<usize> = (0..spec.p / 2).collect();
    ModelMask::from_indices(spec.p, &indices).expect("valid true mask")
}

fn lower_cholesky(sigma: &mut [f64], p: usize) -> Result<()> {
    if !crate::glm::cholesky_in_place(sigma, p) {
        return Err(Error::CholeskyFailure);
    }
    Ok(())
}

/// Draw latent `u_i ~ N(0, Sigma)` rows and threshold at the standard
/// normal tertiles into genotype codes 0/1/2 (row-major `n x p`).
pub fn sample_genotypes(
    spec: &SimSpec,
    cov: &CovStructure,
    rng: &mut impl Rng,
) -> Result<Vec<u8>> {
    spec.validate()?;
    let p = spec.p;
    let mut chol = cov.matrix(p);
    lower_cholesky(&mut chol, p)?;
    let c1 = normal_quantile(1.0 / 3.0)?;
    let c2 = normal_quantile(2.0 / 3.0)?;
    let mut codes = Vec::with_capacity(spec.n * p);
    let mut z = vec![0.0f64; p];
    for _ in 0..spec.n {
        for slot in z.iter_mut() {
            *slot = rng.sample(StandardNormal);
        }
        for j in 0..p {
            let mut u = 0.0;
            for t in 0..=j {
                u += chol[j * p + t] * z[t];
            }
            codes.push(if u < c1 {
                0
            } else if u < c2 {
                1
            } else {
                2
            });
        }
    }
    Ok(codes)
}

/// Independent Bernoulli responses with `pi_i = logistic(beta . x_i)`
/// (intercept and covariate effects are zero in the simulation models).
pub fn sample_response(codes: &[u8], p: usize, beta: &[f64], rng: &mut impl Rng) -> Vec<u8> {
    assert_eq!(beta.len(), p, "beta length must equal p");
    assert_eq!(codes.len() % p, 0, "codes length must be a multiple of p");
    let n = codes.len() / p;
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let eta: f64 = (0..p).map(|j| beta[j] * codes[i * p + j] as f64).sum();
        let pi = 1.0 / (1.0 + (-eta).exp());
        y.push(u8::from(rng.random::<f64>() < pi));
    }
    y
}

fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// Simulate one dataset; `replicate` selects an independent RNG stream so
/// parallel and serial Monte Carlo runs agree.
pub fn simulate_dataset(spec: &SimSpec, replicate: u64) -> Result<GenotypeDataset> {
    spec.validate()?;
    let mut rng = replicate_rng(spec.seed, replicate);
    let cov = cov_for_model(spec);
    let codes = sample_genotypes(spec, &cov, &mut rng)?;
    let beta = true_beta(spec);
    let y = sample_response(&codes, spec.p, &beta, &mut rng);
    let names = (1..=spec.p).map(|j| format!("snp{j}")).collect();
    GenotypeDataset::new(y, codes, vec![], names, vec![])
}

/// Synthetic stand-in for the motivating case-control data: n = 684
/// subjects, 20 SNPs with a Toeplitz latent correlation, two forced
/// covariates (standardized age, 0/1 gender), and eight planted predictors
/// with descending effect sizes. Returns the dataset and the planted mask.
pub fn amd_standin(seed: u64) -> Result<(GenotypeDataset, ModelMask)> {
    let n = 684;
    let p = 20;
    let planted: [usize; 8] = [0, 2, 4, 6, 9, 12, 15, 18];
    let mut beta = vec![0.0; p];
    for (rank, &j) in planted.iter().enumerate() {
        let sign = if rank % 2 == 0 { 1.0 } else { -1.0 };
        beta[j] = sign * (0.9 - 0.07 * rank as f64);
    }
    let gamma = [0.3, -0.3];
    let beta0 = 0.4;

    let cov = CovStructure { kind: CovKind::Toeplitz, rho: 0.3 };
    let mut chol = cov.matrix(p);
    lower_cholesky(&mut chol, p)?;
    let c1 = normal_quantile(1.0 / 3.0)?;
    let c2 = normal_quantile(2.0 / 3.0)?;

    let mut rng = replicate_rng(seed, 0);
    let mut codes = Vec::with_capacity(n * p);
    let mut z = vec![0.0f64; p];
    let mut covariates = Vec::with_capacity(n * 2);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        for slot in z.iter_mut() {
            *slot = rng.sample(StandardNormal);
        }
        let row_start = codes.len();
        for j in 0..p {
            let mut u = 0.0;
            for t in 0..=j {
                u += chol[j * p + t] * z[t];
            }
            codes.push(if u < c1 {
                0
            } else if u < c2 {
                1
            } else {
                2
            });
        }
        let age: f64 = rng.sample(StandardNormal);
        let gender = f64::from(rng.random::<f64>() < 0.5);
        covariates.push(age);
        covariates.push(gender);
        let mut eta = beta0 + gamma[0] * age + gamma[1] * gender;
        for j in 0..p {
            eta += beta[j] * codes[row_start + j] as f64;
        }
        let pi = 1.0 / (1.0 + (-eta).exp());
        y.push(u8::from(rng.random::<f64>() < pi));
    }
    let snp_names = (1..=p).map(|j| format!("snp{j:02}")).collect();
    let covariate_names = vec!["age".to_string(), "gender".to_string()];
    let data = GenotypeDataset::new(y, codes, covariates, snp_names, covariate_names)?;
    Ok((data, ModelMask::from_indices(p, &planted)?))
}

/// Per-replicate outcomes recorded by MC experiment 1.
#[derive(Debug, Clone)]
pub struct McReplicateRecord {
    pub replicate: u64,
    pub covered: bool,
    pub vscs_size: usize,
    pub lbm_size: usize,
    pub avg_lbm_predictors: f64,
    pub lbm_hamming_to_true: f64,
}

/// Monte Carlo summary for one alpha.
#[derive(Debug, Clone)]
pub struct McResult {
    pub alpha: f64,
    pub replicates: usize,
    pub coverage: f64,
    pub coverage_se: f64,
    pub mean_vscs_size: f64,
    pub vscs_size_se: f64,
    pub mean_lbm_size: f64,
    pub lbm_size_se: f64,
    pub mean_avg_lbm_predictors: f64,
    pub avg_lbm_predictors_se: f64,
    pub mean_lbm_hamming_to_true: f64,
    pub lbm_hamming_se: f64,
    pub records: Vec<McReplicateRecord>,
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn run_with_pool<T: Send>(parallel: usize, job: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    if parallel == 0 {
        job()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallel)
            .build()
            .map_err(|e| Error::DomainError(format!("thread pool: {e}")))?;
        pool.install(job)
    }
}

/// MC experiment 1: coverage and cardinality of the confidence set and its
/// lower boundary across replicates, one summary per alpha.
pub fn run_mc_experiment1(
    spec: &SimSpec,
    alphas: &[f64],
    replicates: usize,
    fit_config: &FitConfig,
    parallel: usize,
) -> Result<Vec<McResult>> {
    spec.validate()?;
    if replicates == 0 {
        return Err(Error::DomainError("replicates must be >= 1".into()));
    }
    let truth = true_mask(spec);
    let spec = *spec;
    let alphas_owned = alphas.to_vec();
    let fit_config = fit_config.clone();

    let per_replicate: Vec<Vec<McReplicateRecord>> = run_with_pool(parallel, move || {
        (0..replicates as u64)
            .into_par_iter()
            .map(|rep| -> Result<Vec<McReplicateRecord>> {
                let data = simulate_dataset(&spec, rep)?;
                let scan = scan_lattice(&data, &fit_config, WarmStartPolicy::FromFull, 1)?;
                let mut rows = Vec::with_capacity(alphas_owned.len());
                for &alpha in &alphas_owned {
                    let vscs = scan.vscs(&data, alpha)?;
                    let lbms = extract_lbms(&vscs, spec.p);
                    let avg_pred = if lbms.masks.is_empty() {
                        0.0
                    } else {
                        lbms.masks.iter().map(|m| m.popcount()).sum::<usize>() as f64
                            / lbms.masks.len() as f64
                    };
                    let lbm_dh = if lbms.masks.is_empty() {
                        0.0
                    } else {
                        avg_hamming_to_target(&lbms.masks, &truth)?
                    };
                    rows.push(McReplicateRecord {
                        replicate: rep,
                        covered: vscs.contains(&truth),
                        vscs_size: vscs.len(),
                        lbm_size: lbms.len(),
                        avg_lbm_predictors: avg_pred,
                        lbm_hamming_to_true: lbm_dh,
                    });
                }
                Ok(rows)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut results = Vec::with_capacity(alphas.len());
    for (a_idx, &alpha) in alphas.iter().enumerate() {
        let records: Vec<McReplicateRecord> =
            per_replicate.iter().map(|rows| rows[a_idx].clone()).collect();
        let r = records.len() as f64;
        let coverage = records.iter().filter(|rec| rec.covered).count() as f64 / r;
        let coverage_se = (coverage * (1.0 - coverage) / r).sqrt();
        let (mean_vscs, se_vscs) =
            mean_and_se(&records.iter().map(|rec| rec.vscs_size as f64).collect::<Vec<_>>());
        let (mean_lbm, se_lbm) =
            mean_and_se(&records.iter().map(|rec| rec.lbm_size as f64).collect::<Vec<_>>());
        let (mean_avg, se_avg) =
            mean_and_se(&records.iter().map(|rec| rec.avg_lbm_predictors).collect::<Vec<_>>());
        let (mean_dh, se_dh) =
            mean_and_se(&records.iter().map(|rec| rec.lbm_hamming_to_true).collect::<Vec<_>>());
        results.push(McResult {
            alpha,
            replicates,
            coverage,
            coverage_se,
            mean_vscs_size: mean_vscs,
            vscs_size_se: se_vscs,
            mean_lbm_size: mean_lbm,
            lbm_size_se: se_lbm,
            mean_avg_lbm_predictors: mean_avg,
            avg_lbm_predictors_se: se_avg,
            mean_lbm_hamming_to_true: mean_dh,
            lbm_hamming_se: se_dh,
            records,
        });
    }
    Ok(results)
}

/// Per-replicate Hamming distances recorded by MC experiment 2.
#[derive(Debug, Clone)]
pub struct Mc2Record {
    pub replicate: u64,
    /// Distance of the AIC-aggregated model to the truth, one per alpha.
    pub dh_agg_aic: Vec<usize>,
    pub dh_agg_bic: Vec<usize>,
    pub dh_forward_aic: usize,
    pub dh_forward_bic: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct SummaryStat {
    pub mean: f64,
    pub mc_se: f64,
}

#[derive(Debug, Clone)]
pub struct Mc2Row {
    pub alpha: f64,
    pub agg_aic: SummaryStat,
    pub agg_bic: SummaryStat,
}

/// Hamming-distance table comparing LBM aggregation with forward selection.
#[derive(Debug, Clone)]
pub struct Mc2Result {
    pub alphas: Vec<f64>,
    pub replicates: usize,
    pub rows: Vec<Mc2Row>,
    pub forward_aic: SummaryStat,
    pub forward_bic: SummaryStat,
    pub records: Vec<Mc2Record>,
}

/// MC experiment 2: per replicate, distance to the true model of the
/// AIC/BIC-aggregated models and the forward-selection baselines.
///
/// Replicates where no predictor attains positive importance fall back to
/// the empty aggregated model.
pub fn run_mc_experiment2(
    spec: &SimSpec,
    alphas: &[f64],
    replicates: usize,
    fit_config: &FitConfig,
    parallel: usize,
) -> Result<Mc2Result> {
    spec.validate()?;
    if replicates == 0 {
        return Err(Error::DomainError("replicates must be >= 1".into()));
    }
    let truth = true_mask(spec);
    let spec_copy = *spec;
    let alphas_owned = alphas.to_vec();
    let fit_config = fit_config.clone();

    let records: Vec<Mc2Record> = run_with_pool(parallel, move || {
        (0..replicates as u64)
            .into_par_iter()
            .map(|rep| -> Result<Mc2Record> {
                let data = simulate_dataset(&spec_copy, rep)?;
                let scan = scan_lattice(&data, &fit_config, WarmStartPolicy::FromFull, 1)?;
                let mut dh_agg_aic = Vec::with_capacity(alphas_owned.len());
                let mut dh_agg_bic = Vec::with_capacity(alphas_owned.len());
                for &alpha in &alphas_owned {
                    let vscs = scan.vscs(&data, alpha)?;
                    let lbms = extract_lbms(&vscs, spec_copy.p);
                    for (criterion, out) in [
                        (SelectionCriterion::Aic, &mut dh_agg_aic),
                        (SelectionCriterion::Bic, &mut dh_agg_bic),
                    ] {
                        let selected =
                            match aggregate_lbm(&lbms, &vscs, &data, criterion, &fit_config) {
                                Ok(result) => result.selected,
                                Err(Error::NoPositiveImportance) | Err(Error::EmptyLbmSet) => {
                                    ModelMask::empty(spec_copy.p)
                                }
                                Err(e) => return Err(e),
                            };
                        out.push(selected.hamming(&truth));
                    }
                }
                let f_aic = forward_select(&data, SelectionCriterion::Aic, &fit_config)?;
                let f_bic = forward_select(&data, SelectionCriterion::Bic, &fit_config)?;
                Ok(Mc2Record {
                    replicate: rep,
                    dh_agg_aic,
                    dh_agg_bic,
                    dh_forward_aic: f_aic.hamming(&truth),
                    dh_forward_bic: f_bic.hamming(&truth),
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let summarize = |values: Vec<f64>| {
        let (mean, mc_se) = mean_and_se(&values);
        SummaryStat { mean, mc_se }
    };
    let mut rows = Vec::with_capacity(alphas.len());
    for (a_idx, &alpha) in alphas.iter().enumerate() {
        rows.push(Mc2Row {
            alpha,
            agg_aic: summarize(records.iter().map(|r| r.dh_agg_aic[a_idx] as f64).collect()),
            agg_bic: summarize(records.iter().map(|r| r.dh_agg_bic[a_idx] as f64).collect()),
        });
    }
    let forward_aic = summarize(records.iter().map(|r| r.dh_forward_aic as f64).collect());
    let forward_bic = summarize(records.iter().map(|r| r.dh_forward_bic as f64).collect());
    Ok(Mc2Result {
        alphas: alphas.to_vec(),
        replicates,
        rows,
        forward_aic,
        forward_bic,
        records,
    })
}

fn csv_value(v: f64) -> String {
    format!("{v:.12}")
}

/// MC experiment 1 table as CSV, one row per (alpha, statistic) cell.
pub fn mc1_csv(spec: &SimSpec, results: &[McResult]) -> String {
    let mut out = String::from("model_id,n,p,rho,alpha,statistic,mean,mc_se\n");
    for res in results {
        let cells: [(&str, f64, f64); 5] = [
            ("coverage", res.coverage, res.coverage_se),
            ("vscs_size", res.mean_vscs_size, res.vscs_size_se),
            ("lbm_size", res.mean_lbm_size, res.lbm_size_se),
            (
                "avg_lbm_predictors",
                res.mean_avg_lbm_predictors,
                res.avg_lbm_predictors_se,
            ),
            (
                "lbm_hamming_to_true",
                res.mean_lbm_hamming_to_true,
                res.lbm_hamming_se,
            ),
        ];
        for (stat, mean, se) in cells {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                spec.model_id,
                spec.n,
                spec.p,
                spec.rho,
                res.alpha,
                stat,
                csv_value(mean),
                csv_value(se)
            ));
        }
    }
    out
}

/// MC experiment 2 table as CSV with the same cell schema; the
/// alpha-independent forward baselines repeat per alpha.
pub fn mc2_csv(spec: &SimSpec, result: &Mc2Result) -> String {
    let mut out = String::from("model_id,n,p,rho,alpha,statistic,mean,mc_se\n");
    let mut push = |alpha: f64, stat: &str, s: SummaryStat| {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            spec.model_id,
            spec.n,
            spec.p,
            spec.rho,
            alpha,
            stat,
            csv_value(s.mean),
            csv_value(s.mc_se)
        ));
    };
    for row in &result.rows {
        push(row.alpha, "dh_aic_lbm", row.agg_aic);
        push(row.alpha, "dh_bic_lbm", row.agg_bic);
        push(row.alpha, "dh_f_aic", result.forward_aic);
        push(row.alpha, "dh_f_bic", result.forward_bic);
    }
    out
}
