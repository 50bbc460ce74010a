//! Out-of-sample evaluation: k-fold cross-validated ROC curves and AUC for
//! fixed model masks.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{GenotypeDataset, ModelMask};
use crate::error::{Error, Result};
use crate::glm::{fit_logistic, FitConfig};

/// ROC curve over pooled out-of-fold scores.
///
/// A subject is classified positive when its score is `>= threshold`; the
/// leading threshold `max score + 1` anchors the curve at (0, 0) and the
/// trailing threshold (the minimum score) reaches (1, 1). AUC is the
/// trapezoid-rule area, identical to the tie-adjusted Mann-Whitney
/// statistic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RocCurve {
    pub thresholds: Vec<f64>,
    pub fpr: Vec<f64>,
    pub tpr: Vec<f64>,
    pub auc: f64,
}

/// Random partition of `0..n` into `k` folds with sizes differing by at
/// most one; deterministic given the seed.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 || k > n {
        return Err(Error::BadFoldCount(format!("k = {k} must satisfy 2 <= k <= n = {n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut assignment = vec![0usize; n];
    for (pos, &subject) in order.iter().enumerate() {
        assignment[subject] = pos % k;
    }
    Ok(assignment)
}

/// ROC curve and AUC from scores and binary labels, sweeping thresholds
/// over the distinct scores in descending order. Tied scores collapse into
/// one threshold step.
pub fn roc_from_scores(scores: &[f64], labels: &[u8]) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DomainError("ROC needs both classes present".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));

    let max_score = scores[order[0]];
    let mut thresholds = vec![max_score + 1.0];
    let mut fpr = vec![0.0];
    let mut tpr = vec![0.0];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut idx = 0;
    while idx < order.len() {
        let t = scores[order[idx]];
        while idx < order.len() && scores[order[idx]] == t {
            if labels[order[idx]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            idx += 1;
        }
        thresholds.push(t);
        fpr.push(fp as f64 / n_neg as f64);
        tpr.push(tp as f64 / n_pos as f64);
    }

    let mut auc = 0.0;
    for w in 0..fpr.len() - 1 {
        auc += (fpr[w + 1] - fpr[w]) * (tpr[w + 1] + tpr[w]) / 2.0;
    }
    Ok(RocCurve { thresholds, fpr, tpr, auc })
}

/// Cross-validated ROC for a fixed mask: fit on each fold's complement,
/// score the held-out subjects with predicted probabilities, pool all
/// out-of-fold scores into a single curve.
pub fn cv_roc(
    data: &GenotypeDataset,
    mask: &ModelMask,
    k: usize,
    fit_config: &FitConfig,
    seed: u64,
) -> Result<RocCurve> {
    let n = data.n();
    let assignment = kfold_split(n, k, seed)?;
    let mut scores = vec![0.0f64; n];
    for fold in 0..k {
        let train: Vec<usize> = (0..n).filter(|&i| assignment[i] != fold).collect();
        let first = data.response(train[0]);
        if train.iter().all(|&i| data.response(i) == first) {
            return Err(Error::DegenerateFold);
        }
        let sub = subset_dataset(data, &train)?;
        let fit = fit_logistic(&sub, mask, fit_config, None)?;
        for i in (0..n).filter(|&i| assignment[i] == fold) {
            let mut eta = fit.beta0;
            for (pos, j) in mask.indices().enumerate() {
                eta += fit.beta[pos] * data.genotype(i, j) as f64;
            }
            for (c, g) in fit.gamma.iter().enumerate() {
                eta += g * data.covariate(i, c);
            }
            scores[i] = 1.0 / (1.0 + (-eta).exp());
        }
    }
    roc_from_scores(&scores, data.responses())
}

fn subset_dataset(data: &GenotypeDataset, rows: &[usize]) -> Result<GenotypeDataset> {
    let p = data.p();
    let q = data.q();
    let mut y = Vec::with_capacity(rows.len());
    let mut x = Vec::with_capacity(rows.len() * p);
    let mut z = Vec::with_capacity(rows.len() * q);
    for &i in rows {
        y.push(data.response(i));
        for j in 0..p {
            x.push(data.genotype(i, j));
        }
        for c in 0..q {
            z.push(data.covariate(i, c));
        }
    }
    GenotypeDataset::new(
        y,
        x,
        z,
        data.snp_names().to_vec(),
        data.covariate_names().to_vec(),
    )
}

/// ROC points as CSV rows (`model,threshold,fpr,tpr`) followed by one
/// commented AUC summary line per model.
pub fn roc_csv(curves: &[(String, RocCurve)]) -> String {
    let mut out = String::from("model,threshold,fpr,tpr\n");
    for (label, curve) in curves {
        for i in 0..curve.thresholds.len() {
            out.push_str(&format!(
                "{},{:.12},{:.12},{:.12}\n",
                label, curve.thresholds[i], curve.fpr[i], curve.tpr[i]
            ));
        }
    }
    for (label, curve) in curves {
        out.push_str(&format!("# AUC {} {:.12}\n", label, curve.auc));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    #[test]
    fn folds_have_balanced_sizes() {
        let a = kfold_split(10, 5, 1).unwrap();
        let mut sizes = [0usize; 5];
        for f in &a {
            sizes[*f] += 1;
        }
        assert!(sizes.iter().all(|&s| s == 2));

        let b = kfold_split(11, 5, 1).unwrap();
        let mut sizes = vec![0usize; 5];
        for f in &b {
            sizes[*f] += 1;
        }
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 2, 2, 2, 3]);
    }

    #[test]
    fn folds_are_deterministic() {
        assert_eq!(kfold_split(31, 5, 9).unwrap(), kfold_split(31, 5, 9).unwrap());
        assert_ne!(kfold_split(31, 5, 9).unwrap(), kfold_split(31, 5, 10).unwrap());
    }

    #[test]
    fn bad_fold_counts() {
        assert!(kfold_split(10, 1, 0).is_err());
        assert!(kfold_split(10, 11, 0).is_err());
    }

    #[test]
    fn perfect_scores_give_unit_auc() {
        let labels = vec![0, 1, 0, 1, 1, 0];
        let scores: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
        let curve = roc_from_scores(&scores, &labels).unwrap();
        assert_abs_diff_eq!(curve.auc, 1.0, epsilon = 1e-12);
        assert_eq!((curve.fpr[0], curve.tpr[0]), (0.0, 0.0));
        let last = curve.fpr.len() - 1;
        assert_eq!((curve.fpr[last], curve.tpr[last]), (1.0, 1.0));
    }

    #[test]
    fn random_scores_give_half_auc() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 2000;
        let labels: Vec<u8> = (0..n).map(|_| u8::from(rng.random::<f64>() < 0.5)).collect();
        let scores: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let curve = roc_from_scores(&scores, &labels).unwrap();
        assert!((curve.auc - 0.5).abs() < 0.05, "auc = {}", curve.auc);
    }

    /// Naive pairwise Mann-Whitney with ties counted one half.
    fn pairwise_auc(scores: &[f64], labels: &[u8]) -> f64 {
        let pos: Vec<f64> = scores
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l == 1)
            .map(|(s, _)| *s)
            .collect();
        let neg: Vec<f64> = scores
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l == 0)
            .map(|(s, _)| *s)
            .collect();
        let mut total = 0.0;
        for &sp in &pos {
            for &sn in &neg {
                total += if sp > sn {
                    1.0
                } else if sp == sn {
                    0.5
                } else {
                    0.0
                };
            }
        }
        total / (pos.len() * neg.len()) as f64
    }

    #[test]
    fn trapezoid_matches_pairwise_oracle_with_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let n = 80;
            let labels: Vec<u8> = (0..n).map(|_| u8::from(rng.random::<f64>() < 0.4)).collect();
            if labels.iter().all(|&l| l == 0) || labels.iter().all(|&l| l == 1) {
                continue;
            }
            // Coarse grid forces plenty of tied scores.
            let scores: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() * 8.0).floor() / 8.0).collect();
            let curve = roc_from_scores(&scores, &labels).unwrap();
            assert_abs_diff_eq!(curve.auc, pairwise_auc(&scores, &labels), epsilon = 1e-10);
        }
    }

    #[test]
    fn auc_invariant_to_monotone_transforms() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let n = 200;
        let labels: Vec<u8> = (0..n).map(|_| u8::from(rng.random::<f64>() < 0.5)).collect();
        let scores: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let base = roc_from_scores(&scores, &labels).unwrap().auc;
        let exp_scores: Vec<f64> = scores.iter().map(|s| s.exp()).collect();
        let affine: Vec<f64> = scores.iter().map(|s| 3.5 * s - 2.0).collect();
        assert_abs_diff_eq!(roc_from_scores(&exp_scores, &labels).unwrap().auc, base, epsilon = 1e-12);
        assert_abs_diff_eq!(roc_from_scores(&affine, &labels).unwrap().auc, base, epsilon = 1e-12);
    }

    fn labeled_dataset(seed: u64, n: usize) -> GenotypeDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Vec::with_capacity(n * 2);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let a: u8 = rng.random_range(0..3);
            let b: u8 = rng.random_range(0..3);
            x.push(a);
            x.push(b);
            let eta = 1.5 * (a as f64 - 1.0);
            y.push(u8::from(rng.random::<f64>() < 1.0 / (1.0 + (-eta).exp())));
        }
        GenotypeDataset::new(
            y,
            x,
            vec![],
            vec!["snp1".into(), "snp2".into()],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn cv_roc_scores_every_subject_once() {
        let data = labeled_dataset(3, 120);
        let curve = cv_roc(&data, &ModelMask::full(2), 5, &FitConfig::default(), 42).unwrap();
        assert!(curve.auc > 0.6, "auc = {}", curve.auc);
        // Same invocation is deterministic.
        let again = cv_roc(&data, &ModelMask::full(2), 5, &FitConfig::default(), 42).unwrap();
        assert_eq!(curve.auc.to_bits(), again.auc.to_bits());
    }

    #[test]
    fn degenerate_training_fold_is_an_error() {
        let n = 12;
        let y = vec![0u8; n];
        let x: Vec<u8> = (0..n).map(|i| (i % 3) as u8).collect();
        let data = GenotypeDataset::new(y, x, vec![], vec!["snp1".into()], vec![]).unwrap();
        let err = cv_roc(&data, &ModelMask::full(1), 4, &FitConfig::default(), 0);
        assert!(matches!(err, Err(Error::DegenerateFold)));
    }

    #[test]
    fn roc_csv_contains_auc_summary() {
        let labels = vec![0, 1, 0, 1];
        let scores = vec![0.2, 0.9, 0.3, 0.6];
        let curve = roc_from_scores(&scores, &labels).unwrap();
        let csv = roc_csv(&[("full".to_string(), curve)]);
        assert!(csv.starts_with("model,threshold,fpr,tpr\n"));
        assert!(csv.contains("# AUC full"));
    }
}
