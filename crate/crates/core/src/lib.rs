//! Variable-selection confidence sets for logistic-regression submodels.
//!
//! The pipeline screens every submodel of a full logistic model by a
//! likelihood ratio test, keeps the survivors as a confidence set, extracts
//! the minimal (lower boundary) models, ranks predictors by how often they
//! appear in those boundary models, and aggregates the top-ranked
//! predictors into a single representative model. A latent-Gaussian
//! genotype simulator and cross-validated ROC evaluation support the Monte
//! Carlo studies.

pub mod aggregate;
pub mod dataset;
pub mod dist;
pub mod error;
pub mod evaluate;
pub mod glm;
pub mod importance;
pub mod model_space;
pub mod report;
pub mod simulate;

pub use aggregate::{
    aggregate_lbm, forward_select, importance_ranking, AggregationResult, SelectionCriterion,
};
pub use dataset::{
    load_dataset, load_dataset_path, FormatConfig, GenotypeDataset, LoadedDataset, ModelMask,
};
pub use dist::{chisq_quantile, chisq_sf, normal_cdf, normal_quantile};
pub use error::{Error, Result};
pub use evaluate::{cv_roc, kfold_split, roc_csv, roc_from_scores, RocCurve};
pub use glm::{aic, bic, fit_logistic, log_likelihood, log_likelihood_at, score, score_at, FitConfig, GlmFit};
pub use importance::{
    avg_hamming_to_target, ii_conditional, ii_joint, ii_marginal, ii_report, lbm_summary,
    mutual_information, standardized_co_importance, IiReport, LbmSummary,
};
pub use model_space::{
    enumerate_vscs, extract_lbms, hamming_distance, lrt_statistic, scan_lattice, LatticeScan,
    LbmSet, ScreeningConfig, Vscs, VscsEntry, WarmStartPolicy, MAX_ENUMERATION_PREDICTORS,
};
pub use report::{
    aggregate_csv, analyze, export_ii_graph, from_json, rank_csv, to_json, vscs_summary_csv,
    AnalysisReport, AnalyzeOptions, REPORT_SCHEMA,
};
pub use simulate::{
    amd_standin, cov_for_model, mc1_csv, mc2_csv, run_mc_experiment1, run_mc_experiment2,
    sample_genotypes, sample_response, simulate_dataset, true_beta, true_mask, CovKind,
    CovStructure, Mc2Result, McResult, SimSpec,
};
