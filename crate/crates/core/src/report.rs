//! The end-to-end analysis report: screening summaries, importance
//! statistics, aggregated and forward-selected models, JSON serialization,
//! and DOT export of the inclusion-importance network.

use serde::{Deserialize, Serialize};

use crate::aggregate::{aggregate_lbm, forward_select, AggregationResult, SelectionCriterion};
use crate::dataset::{GenotypeDataset, ModelMask};
use crate::dist::chisq_sf;
use crate::error::{Error, Result};
use crate::glm::{fit_logistic, FitConfig};
use crate::importance::{ii_report, lbm_summary, mutual_information, IiReport, LbmSummary};
use crate::model_space::{extract_lbms, scan_lattice, ScreeningConfig, Vscs};

/// JSON schema the serialized report validates against.
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetFingerprint {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub sha256: String,
}

/// A selected model with its fit statistics and the LRT comparison against
/// the full model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionReport {
    pub criterion: SelectionCriterion,
    pub indices: Vec<usize>,
    pub names: Vec<String>,
    pub size: usize,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub lrt_stat: f64,
    pub lrt_df: usize,
    pub lrt_pvalue: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregateReport {
    pub k_tilde: usize,
    pub rank_order: Vec<usize>,
    pub criterion_path: Vec<f64>,
    pub in_vscs: bool,
    pub selection: SelectionReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlphaReport {
    pub alpha: f64,
    pub vscs_size: usize,
    pub lbm_size: usize,
    pub lbm_summary: LbmSummary,
    pub ii: IiReport,
    /// None when no predictor attains positive importance.
    pub aggregate_aic: Option<AggregateReport>,
    pub aggregate_bic: Option<AggregateReport>,
    pub forward_aic_in_vscs: bool,
    pub forward_bic_in_vscs: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub tool_version: String,
    pub seed: u64,
    pub fingerprint: DatasetFingerprint,
    pub rows_rejected: usize,
    pub snp_names: Vec<String>,
    pub covariate_names: Vec<String>,
    pub alphas: Vec<f64>,
    pub mutual_information: Vec<Vec<f64>>,
    pub forward_aic: SelectionReport,
    pub forward_bic: SelectionReport,
    pub per_alpha: Vec<AlphaReport>,
}

/// Pipeline configuration for [`analyze`].
#[derive(Debug, Clone)]
pub struct AnalyzeOptions {
    pub alphas: Vec<f64>,
    pub fit_config: FitConfig,
    pub screening: ScreeningConfig,
    pub seed: u64,
    /// Carried into the report for ingestion bookkeeping.
    pub rows_rejected: usize,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            alphas: vec![0.05],
            fit_config: FitConfig::default(),
            screening: ScreeningConfig::default(),
            seed: 0,
            rows_rejected: 0,
        }
    }
}

fn selection_report(
    data: &GenotypeDataset,
    mask: &ModelMask,
    vscs: &Vscs,
    criterion: SelectionCriterion,
    fit_config: &FitConfig,
) -> Result<SelectionReport> {
    let (loglik, aic, bic) = match vscs.entry(mask) {
        Some(entry) => (entry.loglik, entry.aic, entry.bic),
        None => {
            let fit = fit_logistic(data, mask, fit_config, Some(&vscs.full_fit))?;
            (fit.loglik, crate::glm::aic(&fit), crate::glm::bic(&fit, data.n()))
        }
    };
    let lrt_stat = (2.0 * (vscs.full_fit.loglik - loglik)).max(0.0);
    let lrt_df = data.p() - mask.popcount();
    let lrt_pvalue = if lrt_df == 0 { 1.0 } else { chisq_sf(lrt_stat, lrt_df) };
    let indices: Vec<usize> = mask.indices().collect();
    let names = indices.iter().map(|&j| data.snp_names()[j].clone()).collect();
    Ok(SelectionReport {
        criterion,
        size: indices.len(),
        indices,
        names,
        loglik,
        aic,
        bic,
        lrt_stat,
        lrt_df,
        lrt_pvalue,
    })
}

fn aggregate_report(
    data: &GenotypeDataset,
    result: &AggregationResult,
    vscs: &Vscs,
    fit_config: &FitConfig,
) -> Result<AggregateReport> {
    let selection = selection_report(data, &result.selected, vscs, result.criterion, fit_config)?;
    Ok(AggregateReport {
        k_tilde: result.k_tilde,
        rank_order: result.rank_order.clone(),
        criterion_path: result.criterion_path.clone(),
        in_vscs: result.in_vscs,
        selection,
    })
}

/// Run the full pipeline: one lattice scan, then per-alpha screening,
/// boundary extraction, importance statistics and aggregation, plus the
/// alpha-independent forward baselines and mutual-information matrix.
pub fn analyze(data: &GenotypeDataset, opts: &AnalyzeOptions) -> Result<AnalysisReport> {
    if opts.alphas.is_empty() {
        return Err(Error::DomainError("at least one alpha level is required".into()));
    }
    let p = data.p();
    let scan = scan_lattice(
        data,
        &opts.fit_config,
        opts.screening.warm_start_policy,
        opts.screening.parallel_chunks,
    )?;

    let forward_aic_mask = forward_select(data, SelectionCriterion::Aic, &opts.fit_config)?;
    let forward_bic_mask = forward_select(data, SelectionCriterion::Bic, &opts.fit_config)?;

    let mut mi = vec![vec![0.0; p]; p];
    for j in 0..p {
        for k in 0..p {
            mi[j][k] = mutual_information(data, j, k);
        }
    }

    let mut per_alpha = Vec::with_capacity(opts.alphas.len());
    let mut forward_reports: Option<(SelectionReport, SelectionReport)> = None;
    for &alpha in &opts.alphas {
        let vscs = scan.vscs(data, alpha)?;
        let lbms = extract_lbms(&vscs, p);
        let summary = lbm_summary(&vscs, &lbms)?;
        let ii = ii_report(&lbms, p)?;
        let mut agg = [None, None];
        for (slot, criterion) in [(0, SelectionCriterion::Aic), (1, SelectionCriterion::Bic)] {
            agg[slot] = match aggregate_lbm(&lbms, &vscs, data, criterion, &opts.fit_config) {
                Ok(result) => Some(aggregate_report(data, &result, &vscs, &opts.fit_config)?),
                Err(Error::NoPositiveImportance) => None,
                Err(e) => return Err(e),
            };
        }
        let [aggregate_aic, aggregate_bic] = agg;
        if forward_reports.is_none() {
            // Fit statistics of the forward models are alpha-independent;
            // compute them against the first screened set.
            forward_reports = Some((
                selection_report(data, &forward_aic_mask, &vscs, SelectionCriterion::Aic, &opts.fit_config)?,
                selection_report(data, &forward_bic_mask, &vscs, SelectionCriterion::Bic, &opts.fit_config)?,
            ));
        }
        per_alpha.push(AlphaReport {
            alpha,
            vscs_size: vscs.len(),
            lbm_size: lbms.len(),
            lbm_summary: summary,
            ii,
            aggregate_aic,
            aggregate_bic,
            forward_aic_in_vscs: vscs.contains(&forward_aic_mask),
            forward_bic_in_vscs: vscs.contains(&forward_bic_mask),
        });
    }
    let (forward_aic, forward_bic) = forward_reports.expect("alphas is non-empty");

    Ok(AnalysisReport {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: opts.seed,
        fingerprint: DatasetFingerprint {
            n: data.n(),
            p,
            q: data.q(),
            sha256: data.fingerprint(),
        },
        rows_rejected: opts.rows_rejected,
        snp_names: data.snp_names().to_vec(),
        covariate_names: data.covariate_names().to_vec(),
        alphas: opts.alphas.clone(),
        mutual_information: mi,
        forward_aic,
        forward_bic,
        per_alpha,
    })
}

/// Serialize with stable field order; floats use the shortest
/// representation that round-trips exactly.
pub fn to_json(report: &AnalysisReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn from_json(text: &str) -> Result<AnalysisReport> {
    serde_json::from_str(text)
        .map_err(|e| Error::Parse { line: e.line(), column: e.column(), message: e.to_string() })
}

fn alpha_section<'r>(report: &'r AnalysisReport, alpha: f64) -> Result<&'r AlphaReport> {
    report
        .per_alpha
        .iter()
        .find(|s| (s.alpha - alpha).abs() < 1e-12)
        .ok_or_else(|| Error::DomainError(format!("report has no alpha = {alpha} section")))
}

/// DOT rendering of the inclusion-importance network at one alpha.
///
/// One node per SNP with positive marginal importance (width proportional
/// to it); a directed edge `k -> j` for every defined conditional
/// importance `II(j|k) >= threshold`, penwidth proportional to the value.
/// Nodes and edges are emitted in predictor-index order.
pub fn export_ii_graph(report: &AnalysisReport, alpha: f64, threshold: f64) -> Result<String> {
    let section = alpha_section(report, alpha)?;
    let p = report.snp_names.len();
    let mut out = String::from("digraph inclusion_importance {\n");
    out.push_str("  rankdir=LR;\n");
    out.push_str("  node [shape=circle, fixedsize=true];\n");
    for j in 0..p {
        let ii = section.ii.marginal[j];
        if ii > 0.0 {
            out.push_str(&format!(
                "  \"{}\" [width={:.4}];\n",
                report.snp_names[j],
                2.0 * ii
            ));
        }
    }
    for k in 0..p {
        for j in 0..p {
            if j == k {
                continue;
            }
            if let Some(cond) = section.ii.conditional[j][k] {
                if cond >= threshold {
                    out.push_str(&format!(
                        "  \"{}\" -> \"{}\" [penwidth={:.4}];\n",
                        report.snp_names[k], report.snp_names[j], 3.0 * cond
                    ));
                }
            }
        }
    }
    out.push_str("}\n");
    Ok(out)
}

fn fmt12(v: f64) -> String {
    format!("{v:.12}")
}

/// Screening summary as CSV, one row per alpha (cardinalities, five-number
/// summary of LBM sizes, average pairwise Hamming distance).
pub fn vscs_summary_csv(report: &AnalysisReport) -> String {
    let mut out = String::from("alpha,vscs_size,lbm_size,min,q1,median,q3,max,ahd\n");
    for s in &report.per_alpha {
        let f = &s.lbm_summary.size_five_number;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            s.alpha,
            s.vscs_size,
            s.lbm_size,
            fmt12(f[0]),
            fmt12(f[1]),
            fmt12(f[2]),
            fmt12(f[3]),
            fmt12(f[4]),
            fmt12(s.lbm_summary.ahd)
        ));
    }
    out
}

/// Importance statistics in long CSV form: `kind` is one of marginal,
/// joint, conditional, standardized_co, mi; undefined values leave the
/// value field empty.
pub fn rank_csv(report: &AnalysisReport) -> String {
    let mut out = String::from("alpha,kind,snp_i,snp_j,value\n");
    let names = &report.snp_names;
    let p = names.len();
    for s in &report.per_alpha {
        for j in 0..p {
            out.push_str(&format!(
                "{},marginal,{},,{}\n",
                s.alpha,
                names[j],
                fmt12(s.ii.marginal[j])
            ));
        }
        for j in 0..p {
            for k in 0..p {
                out.push_str(&format!(
                    "{},joint,{},{},{}\n",
                    s.alpha,
                    names[j],
                    names[k],
                    fmt12(s.ii.joint[j][k])
                ));
            }
        }
        for (kind, matrix) in [
            ("conditional", &s.ii.conditional),
            ("standardized_co", &s.ii.standardized_co),
        ] {
            for j in 0..p {
                for k in 0..p {
                    let value = matrix[j][k].map(fmt12).unwrap_or_default();
                    out.push_str(&format!(
                        "{},{kind},{},{},{}\n",
                        s.alpha, names[j], names[k], value
                    ));
                }
            }
        }
    }
    for j in 0..p {
        for k in 0..p {
            out.push_str(&format!(
                ",mi,{},{},{}\n",
                names[j],
                names[k],
                fmt12(report.mutual_information[j][k])
            ));
        }
    }
    out
}

/// Selected models as CSV: the aggregated models per alpha and the forward
/// baselines (with per-alpha VSCS membership).
pub fn aggregate_csv(report: &AnalysisReport) -> String {
    let mut out =
        String::from("alpha,method,criterion,k,snps,in_vscs,loglik,aic,bic,lrt_stat,lrt_df,lrt_pvalue\n");
    let mut push = |alpha: f64, method: &str, sel: &SelectionReport, in_vscs: bool| {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            alpha,
            method,
            sel.criterion,
            sel.size,
            sel.names.join(";"),
            in_vscs,
            fmt12(sel.loglik),
            fmt12(sel.aic),
            fmt12(sel.bic),
            fmt12(sel.lrt_stat),
            sel.lrt_df,
            fmt12(sel.lrt_pvalue)
        ));
    };
    for s in &report.per_alpha {
        if let Some(agg) = &s.aggregate_aic {
            push(s.alpha, "aggregate", &agg.selection, agg.in_vscs);
        }
        if let Some(agg) = &s.aggregate_bic {
            push(s.alpha, "aggregate", &agg.selection, agg.in_vscs);
        }
        push(s.alpha, "forward", &report.forward_aic, s.forward_aic_in_vscs);
        push(s.alpha, "forward", &report.forward_bic, s.forward_bic_in_vscs);
    }
    out
}
