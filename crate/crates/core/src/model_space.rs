//! Exhaustive enumeration of the 2^p submodel lattice, LRT screening into a
//! variable-selection confidence set, and extraction of the lower-boundary
//! antichain.

use rayon::prelude::*;

use crate::dataset::{GenotypeDataset, ModelMask};
use crate::dist::chisq_quantile;
use crate::error::{Error, Result};
use crate::glm::{self, fit_logistic, FitConfig, FitWorkspace, GlmFit};

/// Exhaustive enumeration is guarded at this many predictors.
pub const MAX_ENUMERATION_PREDICTORS: usize = 25;

/// How reduced-model fits are initialized during enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WarmStartPolicy {
    /// Cold start every fit from zero coefficients.
    None,
    /// Start each fit at the full-model coefficients restricted to the mask.
    FromFull,
    /// Depth-first walk of the lattice, warm-starting each mask from the
    /// submodel with its lowest included predictor removed. Runs
    /// sequentially; `parallel_chunks` is ignored.
    FromParent,
}

/// Screening controls. `parallel_chunks = 0` picks a chunk count from the
/// rayon thread pool; results are identical for any chunking.
#[derive(Debug, Clone)]
pub struct ScreeningConfig {
    pub alpha: f64,
    pub parallel_chunks: usize,
    pub warm_start_policy: WarmStartPolicy,
}

impl Default for ScreeningConfig {
    fn default() -> Self {
        ScreeningConfig {
            alpha: 0.05,
            parallel_chunks: 0,
            warm_start_policy: WarmStartPolicy::FromFull,
        }
    }
}

/// Maximized log-likelihood of every mask in the lattice; screening at any
/// alpha derives from one scan.
pub struct LatticeScan {
    p: usize,
    loglik: Vec<f64>,
    converged: Vec<bool>,
    full_fit: GlmFit,
}

/// One retained model with its screening statistics.
#[derive(Debug, Clone)]
pub struct VscsEntry {
    pub mask: ModelMask,
    pub d_stat: f64,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub converged: bool,
}

/// The screened confidence set: all masks surviving the LRT plus the full
/// model, sorted by mask value.
pub struct Vscs {
    pub alpha: f64,
    pub entries: Vec<VscsEntry>,
    pub full_fit: GlmFit,
    p: usize,
    membership: Vec<u64>,
}

/// The antichain of minimal VSCS members.
#[derive(Debug, Clone)]
pub struct LbmSet {
    pub masks: Vec<ModelMask>,
    pub alpha: f64,
}

/// LRT statistic `2 (loglik(full) - loglik(m))`, clamped at zero.
///
/// The reduced-minus-full orientation would be non-positive and could never
/// exceed an upper chi-square quantile, so the full-minus-reduced gap is the
/// screening statistic. Degrees of freedom for the comparison are
/// `popcount(full) - popcount(m)`.
pub fn lrt_statistic(fit_m: &GlmFit, fit_full: &GlmFit) -> Result<f64> {
    if !fit_m.mask.is_subset_of(&fit_full.mask) {
        return Err(Error::MaskNotNested);
    }
    Ok((2.0 * (fit_full.loglik - fit_m.loglik)).max(0.0))
}

/// Number of predictors on which two masks differ.
pub fn hamming_distance(m1: &ModelMask, m2: &ModelMask) -> usize {
    m1.hamming(m2)
}

fn check_enumeration_size(p: usize) -> Result<()> {
    if p > MAX_ENUMERATION_PREDICTORS {
        return Err(Error::TooManyPredictors(p));
    }
    Ok(())
}

fn full_flat_coefficients(full_fit: &GlmFit, p: usize, q: usize) -> Vec<f64> {
    let mut flat = vec![0.0; 1 + p + q];
    flat[0] = full_fit.beta0;
    for (pos, j) in full_fit.mask.indices().enumerate() {
        flat[1 + j] = full_fit.beta[pos];
    }
    flat[1 + p..].copy_from_slice(&full_fit.gamma);
    flat
}

/// Push the active design columns of `mask` into `active`.
#[inline]
fn fill_active(active: &mut Vec<usize>, mask_bits: u32, p: usize, q: usize) {
    active.clear();
    active.push(0);
    let mut bits = mask_bits;
    while bits != 0 {
        let j = bits.trailing_zeros() as usize;
        active.push(1 + j);
        bits &= bits - 1;
    }
    active.extend(p + 1..p + 1 + q);
}

/// Gather the full-model coefficients for the active columns of a mask.
#[inline]
fn gather_warm(warm: &mut Vec<f64>, full_flat: &[f64], active: &[usize]) {
    warm.clear();
    warm.extend(active.iter().map(|&c| full_flat[c]));
}

/// Fit all 2^p masks and record per-mask log-likelihood and convergence.
pub fn scan_lattice(
    data: &GenotypeDataset,
    fit_config: &FitConfig,
    policy: WarmStartPolicy,
    parallel_chunks: usize,
) -> Result<LatticeScan> {
    let p = data.p();
    let q = data.q();
    check_enumeration_size(p)?;
    let full_mask = ModelMask::full(p);
    let full_fit = fit_logistic(data, &full_mask, fit_config, None)?;
    let design = data.design();

    let total = 1usize << p;
    let mut loglik = vec![0.0f64; total];
    let mut converged = vec![false; total];

    match policy {
        WarmStartPolicy::FromParent => {
            scan_from_parent(data, fit_config, &mut loglik, &mut converged)?;
        }
        WarmStartPolicy::None | WarmStartPolicy::FromFull => {
            let full_flat = full_flat_coefficients(&full_fit, p, q);
            let chunks = if parallel_chunks == 0 {
                (rayon::current_num_threads() * 8).max(1)
            } else {
                parallel_chunks
            };
            let chunk_len = total.div_ceil(chunks).max(1);
            loglik
                .par_chunks_mut(chunk_len)
                .zip(converged.par_chunks_mut(chunk_len))
                .enumerate()
                .try_for_each(|(chunk_idx, (ll_chunk, conv_chunk))| -> Result<()> {
                    let base = chunk_idx * chunk_len;
                    let mut ws = FitWorkspace::new();
                    let mut active = Vec::with_capacity(1 + p + q);
                    let mut warm = Vec::with_capacity(1 + p + q);
                    for (offset, (ll, conv)) in
                        ll_chunk.iter_mut().zip(conv_chunk.iter_mut()).enumerate()
                    {
                        let bits = (base + offset) as u32;
                        fill_active(&mut active, bits, p, q);
                        let start = match policy {
                            WarmStartPolicy::FromFull => {
                                gather_warm(&mut warm, &full_flat, &active);
                                Some(warm.as_slice())
                            }
                            _ => None,
                        };
                        let core = glm::fit_masked(design, &active, fit_config, start, &mut ws)?;
                        *ll = core.loglik;
                        *conv = core.converged;
                    }
                    Ok(())
                })?;
        }
    }

    // The dedicated full fit is the screening reference.
    loglik[full_mask.bits() as usize] = full_fit.loglik;
    converged[full_mask.bits() as usize] = full_fit.converged;

    Ok(LatticeScan { p, loglik, converged, full_fit })
}

/// Depth-first lattice walk: children of `s` append one predictor below its
/// lowest included bit, so each mask is visited once and warm-started from
/// the fit with that bit removed.
fn scan_from_parent(
    data: &GenotypeDataset,
    fit_config: &FitConfig,
    loglik: &mut [f64],
    converged: &mut [bool],
) -> Result<()> {
    let p = data.p();
    let q = data.q();
    let design = data.design();
    let mut ws = FitWorkspace::new();
    let mut active = Vec::with_capacity(1 + p + q);
    let mut warm = Vec::with_capacity(1 + p + q);

    // Stack entries: (mask bits, parent's fitted coefficients, flat by
    // parent's active order extended for the new column).
    struct Node {
        bits: u32,
        start: Option<Vec<f64>>,
    }
    let mut stack = vec![Node { bits: 0, start: None }];
    while let Some(node) = stack.pop() {
        let bits = node.bits;
        fill_active(&mut active, bits, p, q);
        let start = node.start.as_deref();
        let core = glm::fit_masked(design, &active, fit_config, start, &mut ws)?;
        loglik[bits as usize] = core.loglik;
        converged[bits as usize] = core.converged;
        let fitted = ws.beta.clone();

        let limit = if bits == 0 {
            p
        } else {
            bits.trailing_zeros() as usize
        };
        for b in 0..limit {
            let child_bits = bits | (1 << b);
            // Child active order: intercept, bit b, then the parent's SNPs
            // and covariates; insert a zero coefficient at slot 1.
            warm.clear();
            warm.push(fitted[0]);
            warm.push(0.0);
            warm.extend_from_slice(&fitted[1..]);
            stack.push(Node { bits: child_bits, start: Some(warm.clone()) });
        }
    }
    Ok(())
}

impl LatticeScan {
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn full_fit(&self) -> &GlmFit {
        &self.full_fit
    }

    pub fn loglik_of(&self, mask: &ModelMask) -> f64 {
        self.loglik[mask.bits() as usize]
    }

    pub fn converged_of(&self, mask: &ModelMask) -> bool {
        self.converged[mask.bits() as usize]
    }

    /// Screen the scanned lattice at `alpha`: retain masks with
    /// `d_stat < chisq_quantile(alpha, p - p_m)` plus the full model.
    pub fn vscs(&self, data: &GenotypeDataset, alpha: f64) -> Result<Vscs> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::DomainError(format!("alpha = {alpha} must lie in (0, 1)")));
        }
        let p = self.p;
        let n = data.n() as f64;
        let q = data.q();
        let mut quantiles = vec![0.0; p + 1];
        for (df, slot) in quantiles.iter_mut().enumerate() {
            *slot = chisq_quantile(alpha, df)?;
        }
        let full_bits = ModelMask::full(p).bits();
        let ll_full = self.full_fit.loglik;
        let total = 1usize << p;
        let mut entries = Vec::new();
        let mut membership = vec![0u64; total.div_ceil(64)];
        for bits in 0..total as u32 {
            let pm = bits.count_ones() as usize;
            let d_stat = if bits == full_bits {
                0.0
            } else {
                (2.0 * (ll_full - self.loglik[bits as usize])).max(0.0)
            };
            let pass = bits == full_bits || d_stat < quantiles[p - pm];
            if pass {
                membership[bits as usize / 64] |= 1 << (bits % 64);
                let k = (1 + pm + q) as f64;
                let ll = self.loglik[bits as usize];
                entries.push(VscsEntry {
                    mask: ModelMask::from_bits(bits, p),
                    d_stat,
                    loglik: ll,
                    aic: -2.0 * ll + 2.0 * k,
                    bic: -2.0 * ll + k * n.ln(),
                    converged: self.converged[bits as usize],
                });
            }
        }
        Ok(Vscs {
            alpha,
            entries,
            full_fit: self.full_fit.clone(),
            p,
            membership,
        })
    }
}

impl Vscs {
    /// Assemble a confidence set from an explicit member list (the full
    /// mask is added if absent). Screening statistics are zeroed; intended
    /// for synthetic lattices in tests and tooling.
    pub fn from_members(p: usize, alpha: f64, members: &[ModelMask], full_fit: GlmFit) -> Vscs {
        let total = 1usize << p;
        let mut bits_sorted: Vec<u32> = members.iter().map(|m| m.bits()).collect();
        bits_sorted.push(ModelMask::full(p).bits());
        bits_sorted.sort_unstable();
        bits_sorted.dedup();
        let mut membership = vec![0u64; total.div_ceil(64)];
        let mut entries = Vec::with_capacity(bits_sorted.len());
        for &bits in &bits_sorted {
            membership[bits as usize / 64] |= 1 << (bits % 64);
            entries.push(VscsEntry {
                mask: ModelMask::from_bits(bits, p),
                d_stat: 0.0,
                loglik: 0.0,
                aic: 0.0,
                bic: 0.0,
                converged: true,
            });
        }
        Vscs { alpha, entries, full_fit, p, membership }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, mask: &ModelMask) -> bool {
        debug_assert_eq!(mask.width(), self.p);
        let bits = mask.bits() as usize;
        self.membership[bits / 64] & (1 << (bits % 64)) != 0
    }

    pub fn entry(&self, mask: &ModelMask) -> Option<&VscsEntry> {
        self.entries
            .binary_search_by_key(&mask.bits(), |e| e.mask.bits())
            .ok()
            .map(|idx| &self.entries[idx])
    }
}

/// Enumerate the lattice and screen at the configured alpha.
pub fn enumerate_vscs(
    data: &GenotypeDataset,
    config: &ScreeningConfig,
    fit_config: &FitConfig,
) -> Result<Vscs> {
    let scan = scan_lattice(data, fit_config, config.warm_start_policy, config.parallel_chunks)?;
    scan.vscs(data, config.alpha)
}

/// Minimal elements of the VSCS under subset order.
///
/// Popcount-ordered dynamic program: `covered(m)` is true when some proper
/// submodel of `m` lies in the VSCS; since every `m \ {j}` is numerically
/// smaller than `m`, a single ascending pass suffices. O(2^p * p) time.
pub fn extract_lbms(vscs: &Vscs, p: usize) -> LbmSet {
    assert_eq!(p, vscs.p(), "p does not match the VSCS");
    let total = 1usize << p;
    let mut covered = vec![0u64; total.div_ceil(64)];
    let mut masks = Vec::new();
    for bits in 0..total as u32 {
        let mut is_covered = false;
        let mut rest = bits;
        while rest != 0 {
            let j = rest.trailing_zeros();
            rest &= rest - 1;
            let sub = (bits & !(1u32 << j)) as usize;
            let sub_in_vscs = vscs.membership[sub / 64] & (1 << (sub % 64)) != 0;
            let sub_covered = covered[sub / 64] & (1 << (sub % 64)) != 0;
            if sub_in_vscs || sub_covered {
                is_covered = true;
                break;
            }
        }
        if is_covered {
            covered[bits as usize / 64] |= 1 << (bits % 64);
        } else {
            let in_vscs = vscs.membership[bits as usize / 64] & (1 << (bits % 64)) != 0;
            if in_vscs {
                masks.push(ModelMask::from_bits(bits, p));
            }
        }
    }
    let set = LbmSet { masks, alpha: vscs.alpha };
    debug_assert!(set.masks.len() > 10_000 || set.is_antichain());
    set
}

impl LbmSet {
    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    /// True when no member is a proper subset of another.
    pub fn is_antichain(&self) -> bool {
        for (i, a) in self.masks.iter().enumerate() {
            for (j, b) in self.masks.iter().enumerate() {
                if i != j && a.is_subset_of(b) {
                    return false;
                }
            }
        }
        true
    }
}
