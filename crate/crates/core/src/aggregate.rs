//! Aggregation of the lower boundary models into a single representative
//! model via inclusion-importance ranks, plus classic forward selection.

use serde::{Deserialize, Serialize};

use crate::dataset::{GenotypeDataset, ModelMask};
use crate::error::{Error, Result};
use crate::glm::{aic, bic, fit_logistic, FitConfig, GlmFit};
use crate::importance::ii_marginal;
use crate::model_space::{LbmSet, Vscs};

/// Model-selection criterion for choosing the aggregated model size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SelectionCriterion {
    #[serde(rename = "AIC")]
    Aic,
    #[serde(rename = "BIC")]
    Bic,
}

impl SelectionCriterion {
    fn value(&self, fit: &GlmFit, n: usize) -> f64 {
        match self {
            SelectionCriterion::Aic => aic(fit),
            SelectionCriterion::Bic => bic(fit, n),
        }
    }
}

impl std::fmt::Display for SelectionCriterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SelectionCriterion::Aic => write!(f, "AIC"),
            SelectionCriterion::Bic => write!(f, "BIC"),
        }
    }
}

/// The aggregated model and the stepwise path that produced it.
#[derive(Debug, Clone)]
pub struct AggregationResult {
    pub selected: ModelMask,
    pub k_tilde: usize,
    /// All predictors ordered by descending importance, ties broken by
    /// ascending index.
    pub rank_order: Vec<usize>,
    /// Criterion value of every evaluated prefix model (one per predictor
    /// with positive importance), so the stopping rule is auditable.
    pub criterion_path: Vec<f64>,
    pub in_vscs: bool,
    pub criterion: SelectionCriterion,
}

/// Predictors sorted by descending marginal importance, ties by index.
pub fn importance_ranking(lbms: &LbmSet, p: usize) -> Result<Vec<usize>> {
    let mut ii = Vec::with_capacity(p);
    for j in 0..p {
        ii.push(ii_marginal(lbms, j)?);
    }
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| ii[b].partial_cmp(&ii[a]).unwrap().then(a.cmp(&b)));
    Ok(order)
}

fn criterion_of_prefix(
    mask: &ModelMask,
    vscs: &Vscs,
    data: &GenotypeDataset,
    criterion: SelectionCriterion,
    fit_config: &FitConfig,
) -> Result<f64> {
    if let Some(entry) = vscs.entry(mask) {
        return Ok(match criterion {
            SelectionCriterion::Aic => entry.aic,
            SelectionCriterion::Bic => entry.bic,
        });
    }
    let fit = fit_logistic(data, mask, fit_config, Some(&vscs.full_fit))?;
    Ok(criterion.value(&fit, data.n()))
}

/// Build the importance-ranked aggregated model.
///
/// Prefix models of the ranking are evaluated for every predictor with
/// positive importance. The walk stops at the first prefix where adding the
/// next predictor fails to improve the criterion (strictly) and the prefix
/// is a VSCS member. If the stopping point is never inside the VSCS, the
/// walk continues; on exhaustion the criterion-best prefix inside the VSCS
/// is returned, or the criterion-best prefix overall with `in_vscs = false`
/// when no prefix is a member.
pub fn aggregate_lbm(
    lbms: &LbmSet,
    vscs: &Vscs,
    data: &GenotypeDataset,
    criterion: SelectionCriterion,
    fit_config: &FitConfig,
) -> Result<AggregationResult> {
    if lbms.masks.is_empty() {
        return Err(Error::EmptyLbmSet);
    }
    let p = data.p();
    let rank_order = importance_ranking(lbms, p)?;
    let n_positive = {
        let mut count = 0;
        for &j in &rank_order {
            if ii_marginal(lbms, j)? > 0.0 {
                count += 1;
            } else {
                break;
            }
        }
        count
    };
    if n_positive == 0 {
        return Err(Error::NoPositiveImportance);
    }

    let mut prefix = ModelMask::empty(p);
    let mut path = Vec::with_capacity(n_positive);
    let mut membership = Vec::with_capacity(n_positive);
    let mut masks = Vec::with_capacity(n_positive);
    for &j in rank_order.iter().take(n_positive) {
        prefix = prefix.with(j);
        path.push(criterion_of_prefix(&prefix, vscs, data, criterion, fit_config)?);
        membership.push(vscs.contains(&prefix));
        masks.push(prefix);
    }

    let stop = (0..n_positive).find(|&idx| {
        let no_improvement = idx + 1 == n_positive || path[idx + 1] >= path[idx];
        no_improvement && membership[idx]
    });
    let (k_tilde, in_vscs) = match stop {
        Some(idx) => (idx + 1, true),
        None => {
            let candidates: Vec<usize> = (0..n_positive).filter(|&i| membership[i]).collect();
            let all: Vec<usize>;
            let pool: &[usize] = if candidates.is_empty() {
                all = (0..n_positive).collect();
                &all
            } else {
                &candidates
            };
            let best = *pool
                .iter()
                .min_by(|&&a, &&b| path[a].partial_cmp(&path[b]).unwrap())
                .unwrap();
            (best + 1, !candidates.is_empty())
        }
    };

    Ok(AggregationResult {
        selected: masks[k_tilde - 1],
        k_tilde,
        rank_order,
        criterion_path: path,
        in_vscs,
        criterion,
    })
}

/// Greedy forward stepwise selection from the empty SNP mask (intercept and
/// covariates always included): add the predictor that most improves the
/// criterion, stop when no addition improves it.
pub fn forward_select(
    data: &GenotypeDataset,
    criterion: SelectionCriterion,
    fit_config: &FitConfig,
) -> Result<ModelMask> {
    let p = data.p();
    let mut current = ModelMask::empty(p);
    let mut current_fit = fit_logistic(data, &current, fit_config, None)?;
    let mut current_score = criterion.value(&current_fit, data.n());
    loop {
        let mut best: Option<(usize, f64, GlmFit)> = None;
        for j in 0..p {
            if current.contains(j) {
                continue;
            }
            let candidate = current.with(j);
            let fit = fit_logistic(data, &candidate, fit_config, Some(&current_fit))?;
            let score = criterion.value(&fit, data.n());
            if best.as_ref().map(|(_, s, _)| score < *s).unwrap_or(true) {
                best = Some((j, score, fit));
            }
        }
        match best {
            Some((j, score, fit)) if score < current_score => {
                current = current.with(j);
                current_fit = fit;
                current_score = score;
            }
            _ => break,
        }
    }
    Ok(current)
}
