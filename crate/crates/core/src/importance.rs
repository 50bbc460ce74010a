//! Inclusion-importance statistics over the lower boundary models, pairwise
//! genotype mutual information, and LBM-set summaries.

use serde::{Deserialize, Serialize};

use crate::dataset::{GenotypeDataset, ModelMask};
use crate::error::{Error, Result};
use crate::model_space::{LbmSet, Vscs};

/// Fraction of lower boundary models that include predictor `j`.
pub fn ii_marginal(lbms: &LbmSet, j: usize) -> Result<f64> {
    if lbms.masks.is_empty() {
        return Err(Error::EmptyLbmSet);
    }
    let count = lbms.masks.iter().filter(|m| m.contains(j)).count();
    Ok(count as f64 / lbms.masks.len() as f64)
}

/// Fraction of lower boundary models that include both `j` and `k`.
pub fn ii_joint(lbms: &LbmSet, j: usize, k: usize) -> Result<f64> {
    if lbms.masks.is_empty() {
        return Err(Error::EmptyLbmSet);
    }
    let count = lbms
        .masks
        .iter()
        .filter(|m| m.contains(j) && m.contains(k))
        .count();
    Ok(count as f64 / lbms.masks.len() as f64)
}

/// Conditional importance `II(j, k) / II(k)`; `None` when `II(k) = 0`
/// (undefined is a value here, not an error).
pub fn ii_conditional(lbms: &LbmSet, j: usize, k: usize) -> Result<Option<f64>> {
    let marginal_k = ii_marginal(lbms, k)?;
    if marginal_k == 0.0 {
        return Ok(None);
    }
    Ok(Some(ii_joint(lbms, j, k)? / marginal_k))
}

/// Standardized co-importance `II(j, k) / II(j or k)` with
/// `II(j or k) = II(j) + II(k) - II(j, k)`; `None` when the union frequency
/// is zero.
pub fn standardized_co_importance(lbms: &LbmSet, j: usize, k: usize) -> Result<Option<f64>> {
    let joint = ii_joint(lbms, j, k)?;
    let union = ii_marginal(lbms, j)? + ii_marginal(lbms, k)? - joint;
    if union == 0.0 {
        return Ok(None);
    }
    Ok(Some(joint / union))
}

/// Plug-in mutual information of the 3x3 empirical genotype table for SNPs
/// `j` and `k`, in nats. Empty cells contribute zero.
pub fn mutual_information(data: &GenotypeDataset, j: usize, k: usize) -> f64 {
    let n = data.n();
    let mut counts = [[0usize; 3]; 3];
    for i in 0..n {
        counts[data.genotype(i, j) as usize][data.genotype(i, k) as usize] += 1;
    }
    let mut row = [0usize; 3];
    let mut col = [0usize; 3];
    for a in 0..3 {
        for b in 0..3 {
            row[a] += counts[a][b];
            col[b] += counts[a][b];
        }
    }
    let nf = n as f64;
    let mut mi = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            if counts[a][b] == 0 {
                continue;
            }
            let p_ab = counts[a][b] as f64 / nf;
            let p_a = row[a] as f64 / nf;
            let p_b = col[b] as f64 / nf;
            mi += p_ab * (p_ab / (p_a * p_b)).ln();
        }
    }
    mi
}

/// All importance statistics for one alpha level.
///
/// `joint[j][j]` equals `marginal[j]`; conditional and standardized
/// co-importance keep `None` (serialized as null) where the denominator is
/// zero, which renders differently from an exact zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IiReport {
    pub alpha: f64,
    pub marginal: Vec<f64>,
    pub joint: Vec<Vec<f64>>,
    /// Row `j`, column `k` holds `II(j | k)`.
    pub conditional: Vec<Vec<Option<f64>>>,
    pub standardized_co: Vec<Vec<Option<f64>>>,
}

/// Compute every importance statistic over `p` predictors.
pub fn ii_report(lbms: &LbmSet, p: usize) -> Result<IiReport> {
    let mut marginal = Vec::with_capacity(p);
    for j in 0..p {
        marginal.push(ii_marginal(lbms, j)?);
    }
    let mut joint = vec![vec![0.0; p]; p];
    let mut conditional = vec![vec![None; p]; p];
    let mut standardized_co = vec![vec![None; p]; p];
    for j in 0..p {
        for k in 0..p {
            joint[j][k] = ii_joint(lbms, j, k)?;
            conditional[j][k] = ii_conditional(lbms, j, k)?;
            standardized_co[j][k] = standardized_co_importance(lbms, j, k)?;
        }
    }
    Ok(IiReport {
        alpha: lbms.alpha,
        marginal,
        joint,
        conditional,
        standardized_co,
    })
}

/// Five-number summary plus dispersion statistics of an LBM set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LbmSummary {
    pub vscs_size: usize,
    pub lbm_size: usize,
    /// min / Q1 / median / Q3 / max of per-LBM predictor counts.
    pub size_five_number: [f64; 5],
    /// Average Hamming distance over all unordered LBM pairs; 0 for a
    /// singleton set.
    pub ahd: f64,
}

/// Linear-interpolation quantile (R type 7) of a sorted slice.
fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Summary statistics of the LBM set relative to its VSCS.
pub fn lbm_summary(vscs: &Vscs, lbms: &LbmSet) -> Result<LbmSummary> {
    if lbms.masks.is_empty() {
        return Err(Error::EmptyLbmSet);
    }
    let mut sizes: Vec<f64> = lbms.masks.iter().map(|m| m.popcount() as f64).collect();
    sizes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let five = [
        sizes[0],
        quantile_sorted(&sizes, 0.25),
        quantile_sorted(&sizes, 0.5),
        quantile_sorted(&sizes, 0.75),
        sizes[sizes.len() - 1],
    ];
    let b = lbms.masks.len();
    let ahd = if b < 2 {
        0.0
    } else {
        let mut total = 0usize;
        for i in 0..b {
            for j in i + 1..b {
                total += lbms.masks[i].hamming(&lbms.masks[j]);
            }
        }
        total as f64 / (b * (b - 1) / 2) as f64
    };
    Ok(LbmSummary {
        vscs_size: vscs.len(),
        lbm_size: b,
        size_five_number: five,
        ahd,
    })
}

/// Mean Hamming distance from each mask in `models` to `target`.
pub fn avg_hamming_to_target(models: &[ModelMask], target: &ModelMask) -> Result<f64> {
    if models.is_empty() {
        return Err(Error::DomainError("empty model set".into()));
    }
    let total: usize = models.iter().map(|m| m.hamming(target)).sum();
    Ok(total as f64 / models.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::GenotypeDataset;
    use approx::assert_abs_diff_eq;

    fn lbm(p: usize, masks: &[&[usize]]) -> LbmSet {
        LbmSet {
            masks: masks
                .iter()
                .map(|idx| ModelMask::from_indices(p, idx).unwrap())
                .collect(),
            alpha: 0.05,
        }
    }

    #[test]
    fn marginal_counts() {
        // Predictors 0-based: {{0,1},{0,2}}.
        let set = lbm(4, &[&[0, 1], &[0, 2]]);
        assert_abs_diff_eq!(ii_marginal(&set, 0).unwrap(), 1.0);
        assert_abs_diff_eq!(ii_marginal(&set, 1).unwrap(), 0.5);
        assert_abs_diff_eq!(ii_marginal(&set, 3).unwrap(), 0.0);
    }

    #[test]
    fn singleton_lbm_gives_unit_importance() {
        let set = lbm(4, &[&[1, 3]]);
        for j in [1usize, 3] {
            assert_abs_diff_eq!(ii_marginal(&set, j).unwrap(), 1.0);
        }
        assert_abs_diff_eq!(ii_marginal(&set, 0).unwrap(), 0.0);
    }

    #[test]
    fn empty_set_is_an_error() {
        let set = LbmSet { masks: vec![], alpha: 0.05 };
        assert!(matches!(ii_marginal(&set, 0), Err(Error::EmptyLbmSet)));
    }

    #[test]
    fn joint_counts() {
        let set = lbm(4, &[&[0, 1], &[0, 2]]);
        assert_abs_diff_eq!(ii_joint(&set, 0, 1).unwrap(), 0.5);
        assert_abs_diff_eq!(ii_joint(&set, 1, 2).unwrap(), 0.0);
        // Diagonal reduces to the marginal.
        assert_abs_diff_eq!(ii_joint(&set, 0, 0).unwrap(), ii_marginal(&set, 0).unwrap());
    }

    #[test]
    fn conditional_values_and_undefined() {
        let set = lbm(4, &[&[0, 1], &[0, 2]]);
        assert_abs_diff_eq!(ii_conditional(&set, 1, 0).unwrap().unwrap(), 0.5);
        assert_abs_diff_eq!(ii_conditional(&set, 0, 1).unwrap().unwrap(), 1.0);
        assert!(ii_conditional(&set, 0, 3).unwrap().is_none());
        // Predictor 0 is in every LBM, so conditioning cannot lower it.
        for k in [1usize, 2] {
            assert_abs_diff_eq!(ii_conditional(&set, 0, k).unwrap().unwrap(), 1.0);
        }
    }

    #[test]
    fn standardized_co_importance_cases() {
        let single = lbm(3, &[&[0, 1]]);
        assert_abs_diff_eq!(standardized_co_importance(&single, 0, 1).unwrap().unwrap(), 1.0);
        let disjoint = lbm(3, &[&[0], &[1]]);
        assert_abs_diff_eq!(standardized_co_importance(&disjoint, 0, 1).unwrap().unwrap(), 0.0);
        assert!(standardized_co_importance(&disjoint, 2, 2).unwrap().is_none());
    }

    #[test]
    fn identities_on_a_fixed_antichain() {
        let set = lbm(5, &[&[0, 1], &[0, 2], &[1, 2, 3]]);
        for j in 0..5 {
            for k in 0..5 {
                let joint = ii_joint(&set, j, k).unwrap();
                let mj = ii_marginal(&set, j).unwrap();
                let mk = ii_marginal(&set, k).unwrap();
                assert!(joint <= mj.min(mk) + 1e-15);
                if let Some(cond) = ii_conditional(&set, j, k).unwrap() {
                    assert_abs_diff_eq!(cond * mk, joint, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn mi_of_identical_uniform_columns_is_log3() {
        // Two identical columns with equal thirds.
        let n = 9;
        let mut x = Vec::new();
        for i in 0..n {
            let code = (i % 3) as u8;
            x.push(code);
            x.push(code);
        }
        let y = vec![0, 1, 0, 1, 0, 1, 0, 1, 1];
        let data = GenotypeDataset::new(
            y,
            x,
            vec![],
            vec!["snp1".into(), "snp2".into()],
            vec![],
        )
        .unwrap();
        assert_abs_diff_eq!(mutual_information(&data, 0, 1), 3.0f64.ln(), epsilon = 1e-12);
        // MI(j, j) equals the empirical entropy of the column.
        assert_abs_diff_eq!(mutual_information(&data, 0, 0), 3.0f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn mi_hand_table() {
        // Table: counts [[2,1,0],[0,3,1],[1,0,2]], n = 10.
        let col_j = [0, 0, 0, 1, 1, 1, 1, 2, 2, 2];
        let col_k = [0, 0, 1, 1, 1, 1, 2, 0, 2, 2];
        let mut x = Vec::new();
        for i in 0..10 {
            x.push(col_j[i]);
            x.push(col_k[i]);
        }
        let y = vec![0, 1, 0, 1, 0, 1, 0, 1, 0, 1];
        let data = GenotypeDataset::new(
            y,
            x,
            vec![],
            vec!["snp1".into(), "snp2".into()],
            vec![],
        )
        .unwrap();
        // Scalar oracle: direct sum over nonzero cells.
        let counts = [[2.0, 1.0, 0.0], [0.0, 3.0, 1.0], [1.0, 0.0, 2.0]];
        let rows = [3.0, 4.0, 3.0];
        let cols = [3.0, 4.0, 3.0];
        let mut expected = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                let c: f64 = counts[a][b];
                if c > 0.0 {
                    let p_ab = c / 10.0;
                    expected += p_ab * (p_ab / (rows[a] / 10.0 * cols[b] / 10.0)).ln();
                }
            }
        }
        assert_abs_diff_eq!(mutual_information(&data, 0, 1), expected, epsilon = 1e-12);
        assert!(mutual_information(&data, 0, 1) >= 0.0);
    }

    #[test]
    fn ahd_examples() {
        let set = lbm(4, &[&[0, 1], &[1, 2]]);
        let vscs_stub = {
            // lbm_summary only reads the size from the VSCS.
            use crate::glm::FitConfig;
            use crate::model_space::{enumerate_vscs, ScreeningConfig};
            let y = vec![0, 1, 0, 1, 1, 0, 1, 0, 0, 1, 1, 0];
            let x: Vec<u8> = (0..12 * 4).map(|i| ((i * 7 + 3) % 3) as u8).collect();
            let names = (1..=4).map(|j| format!("snp{j}")).collect();
            let data = GenotypeDataset::new(y, x, vec![], names, vec![]).unwrap();
            enumerate_vscs(&data, &ScreeningConfig::default(), &FitConfig::default()).unwrap()
        };
        let summary = lbm_summary(&vscs_stub, &set).unwrap();
        assert_abs_diff_eq!(summary.ahd, 2.0, epsilon = 1e-12);
        assert_eq!(summary.lbm_size, 2);

        let one = lbm(6, &[&[0, 1, 2, 3, 4]]);
        let s1 = lbm_summary(&vscs_stub, &one);
        // Width mismatch with the stub VSCS does not matter for the summary.
        let s1 = s1.unwrap();
        assert_eq!(s1.size_five_number, [5.0; 5]);
        assert_abs_diff_eq!(s1.ahd, 0.0);
    }

    #[test]
    fn avg_hamming_examples() {
        let target = ModelMask::from_indices(4, &[0, 2]).unwrap();
        let set = vec![ModelMask::from_indices(4, &[0, 1]).unwrap()];
        assert_abs_diff_eq!(avg_hamming_to_target(&set, &target).unwrap(), 2.0);
        assert_abs_diff_eq!(avg_hamming_to_target(&[target], &target).unwrap(), 0.0);
        assert!(avg_hamming_to_target(&[], &target).is_err());
    }

    #[test]
    fn quantiles_interpolate() {
        let sorted = [4.0, 5.0, 6.0, 7.0, 10.0];
        assert_abs_diff_eq!(quantile_sorted(&sorted, 0.5), 6.0);
        assert_abs_diff_eq!(quantile_sorted(&sorted, 0.25), 5.0);
        assert_abs_diff_eq!(quantile_sorted(&sorted, 0.75), 7.0);
        let two = [1.0, 2.0];
        assert_abs_diff_eq!(quantile_sorted(&two, 0.5), 1.5);
    }
}
