//! Classical-shadow estimation of full counting statistics, magnetization
//! PDFs, Pauli moments and their statistical errors.
//!
//! A measurement shot (u, s) on one site reconstructs the snapshot
//! `3 u†|s⟩⟨s|u − I`, which averages to the true single-site state. All
//! estimators reduce to the per-site weights `w = Tr[snapshot · σ^μ]`:
//!
//! * FCS: the per-shot trace factorizes, Tr[ρ̂ e^{iαS}] = Π_j (cos α + i w_j sin α).
//! * PDF: the snapshot's diagonal in the μ-eigenbasis is ((1±w_j)/2); a
//!   dynamic-programming convolution over sites yields all Tr[ρ̂ Π_q] at once.
//! * Pauli strings: Tr[ρ̂ σ_T] = Π_{j∈T} w_j.
//!
//! Averaging is two-level and fixed: shots first (giving the per-unitary
//! estimate ρ̂^{(r)}), then unitaries; error bars are taken over the per-unitary
//! estimates. Estimation parallelizes over records and is reduced in record
//! order, so results do not depend on the worker count.

use rayon::prelude::*;

use crate::mat2::Mat2;
use crate::randmeas::{DatasetRecord, LocalUnitary, RandomizedDataset};
use crate::spin::{Axis, PauliString, SubsystemSpec, magnetization_outcomes};
use crate::stats::{self, ErrorMethod};
use crate::{C64, Error, Result};

/// Largest subsystem for which the 2^{N_A}-term product expansion is built.
pub const MAX_TERM_SET_SITES: usize = 6;

/// Product-form shadow snapshot: one 2×2 matrix per subsystem site.
#[derive(Clone, Debug)]
pub struct ShadowSnapshot {
    sites: Vec<usize>,
    mats: Vec<Mat2>,
}

impl ShadowSnapshot {
    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn site_matrices(&self) -> &[Mat2] {
        &self.mats
    }
}

/// `3 u†|s⟩⟨s|u − I` for every subsystem site.
///
/// `unitaries` and `bits` cover the full system (site 1 first); the snapshot
/// keeps only the requested sites.
pub fn snapshot(
    unitaries: &[LocalUnitary],
    bits: &[u8],
    subsystem: &SubsystemSpec,
) -> Result<ShadowSnapshot> {
    if bits.len() != unitaries.len() {
        return Err(Error::input("bitstring length does not match unitaries"));
    }
    if subsystem.max_site() > bits.len() {
        return Err(Error::input(format!(
            "subsystem site {} has no measured bit",
            subsystem.max_site()
        )));
    }
    let mats = subsystem
        .sites()
        .iter()
        .map(|&site| {
            let u = unitaries[site - 1].matrix();
            let b = bits[site - 1] as usize;
            // v = u†|s⟩ is the conjugated s-th row of u
            let v0 = u.get(b, 0).conj();
            let v1 = u.get(b, 1).conj();
            let three = C64::new(3.0, 0.0);
            Mat2::new(
                three * v0 * v0.conj() - C64::new(1.0, 0.0),
                three * v0 * v1.conj(),
                three * v1 * v0.conj(),
                three * v1 * v1.conj() - C64::new(1.0, 0.0),
            )
        })
        .collect();
    Ok(ShadowSnapshot {
        sites: subsystem.sites().to_vec(),
        mats,
    })
}

/// Tr[snapshot · σ^μ] for the shot (u, s) on one site; always real.
#[inline]
pub fn snapshot_weight(u: &Mat2, bit: u8, axis: Axis) -> f64 {
    let b = bit as usize;
    let v0 = u.get(b, 0).conj();
    let v1 = u.get(b, 1).conj();
    3.0 * match axis {
        Axis::Z => v0.norm_sqr() - v1.norm_sqr(),
        Axis::X => 2.0 * (v0.conj() * v1).re,
        Axis::Y => 2.0 * (v0.conj() * v1).im,
    }
}

/// Per-record lookup of the weights for bit 0 / bit 1 at each subsystem site.
fn record_weights(rec: &DatasetRecord, sites: &[usize], axis: Axis) -> Vec<[f64; 2]> {
    sites
        .iter()
        .map(|&site| {
            let u = rec.unitaries[site - 1].matrix();
            [snapshot_weight(u, 0, axis), snapshot_weight(u, 1, axis)]
        })
        .collect()
}

/// Estimated FCS over a grid of spectral parameters.
#[derive(Clone, Debug)]
pub struct FCSCurve {
    pub axis: Axis,
    pub subsystem: SubsystemSpec,
    pub alpha_grid: Vec<f64>,
    pub values: Vec<C64>,
    pub stderr_re: Vec<f64>,
    pub stderr_im: Vec<f64>,
    pub n_unitaries: usize,
}

/// Estimated magnetization PDF over the outcomes −N_A..N_A (step 2).
///
/// Probabilities are reported unclipped and may be slightly negative; they sum
/// to 1 up to round-off because every snapshot has unit trace.
#[derive(Clone, Debug)]
pub struct PDFEstimate {
    pub axis: Axis,
    pub subsystem: SubsystemSpec,
    pub outcomes: Vec<i64>,
    pub probabilities: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n_unitaries: usize,
}

impl PDFEstimate {
    /// Clamp negative estimates to zero and renormalize; off by default
    /// everywhere, provided for presentation only.
    pub fn projected_to_simplex(&self) -> PDFEstimate {
        let clipped: Vec<f64> = self.probabilities.iter().map(|&p| p.max(0.0)).collect();
        let total: f64 = clipped.iter().sum();
        let probabilities = if total > 0.0 {
            clipped.iter().map(|&p| p / total).collect()
        } else {
            clipped
        };
        PDFEstimate {
            probabilities,
            ..self.clone()
        }
    }
}

/// Default spectral grid: 65 evenly spaced points on [0, π] for even N_A and
/// [0, 2π] for odd N_A (the FCS period).
pub fn default_alpha_grid(n_a: usize) -> Vec<f64> {
    let top = if n_a.is_multiple_of(2) {
        std::f64::consts::PI
    } else {
        2.0 * std::f64::consts::PI
    };
    (0..65).map(|k| top * k as f64 / 64.0).collect()
}

fn validate_estimation_inputs(
    dataset: &RandomizedDataset,
    subsystem: &SubsystemSpec,
) -> Result<()> {
    subsystem.validate_within(dataset.meta.n_qubits)?;
    if dataset.records.is_empty() {
        return Err(Error::input("dataset has no records"));
    }
    Ok(())
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::input("spectral grid is empty"));
    }
    if !grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::input("spectral grid must be strictly increasing"));
    }
    Ok(())
}

/// FCS estimator with standard-error bars over unitaries.
pub fn estimate_fcs(
    dataset: &RandomizedDataset,
    subsystem: &SubsystemSpec,
    axis: Axis,
    alpha_grid: &[f64],
) -> Result<FCSCurve> {
    estimate_fcs_with(dataset, subsystem, axis, alpha_grid, ErrorMethod::Stderr)
}

/// FCS estimator with a chosen error method.
pub fn estimate_fcs_with(
    dataset: &RandomizedDataset,
    subsystem: &SubsystemSpec,
    axis: Axis,
    alpha_grid: &[f64],
    method: ErrorMethod,
) -> Result<FCSCurve> {
    validate_grid(alpha_grid)?;
    let per_record = per_record_fcs(dataset, subsystem, axis, alpha_grid)?;
    let mut values = Vec::with_capacity(alpha_grid.len());
    let mut stderr_re = Vec::with_capacity(alpha_grid.len());
    let mut stderr_im = Vec::with_capacity(alpha_grid.len());
    let mut column = vec![C64::new(0.0, 0.0); per_record.len()];
    for k in 0..alpha_grid.len() {
        for (r, rec_vals) in per_record.iter().enumerate() {
            column[r] = rec_vals[k];
        }
        let (mean, se_re, se_im) = stats::complex_mean_err(&column, method);
        values.push(mean);
        stderr_re.push(se_re);
        stderr_im.push(se_im);
    }
    Ok(FCSCurve {
        axis,
        subsystem: subsystem.clone(),
        alpha_grid: alpha_grid.to_vec(),
        values,
        stderr_re,
        stderr_im,
        n_unitaries: dataset.records.len(),
    })
}

/// Per-shot convolution weights over the outcome index m = number of sites
/// seen in the −1 eigenstate of σ^μ.
fn shot_pdf_weights(weights: &[[f64; 2]], sites: &[usize], shot: &[u8], out: &mut [f64]) {
    let n_a = sites.len();
    out[..=n_a].fill(0.0);
    out[0] = 1.0;
    for (pos, &site) in sites.iter().enumerate() {
        let w = weights[pos][shot[site - 1] as usize];
        let d_up = 0.5 * (1.0 + w);
        let d_dn = 0.5 * (1.0 - w);
        for m in (1..=pos + 1).rev() {
            out[m] = d_up * out[m] + d_dn * out[m - 1];
        }
        out[0] *= d_up;
    }
}

/// PDF estimator with standard-error bars over unitaries.
pub fn estimate_pdf(
    dataset: &RandomizedDataset,
    subsystem: &SubsystemSpec,
    axis: Axis,
) -> Result<PDFEstimate> {
    estimate_pdf_with(dataset, subsystem, axis, ErrorMethod::Stderr)
}

/// PDF estimator with a chosen error method.
pub fn estimate_pdf_with(
    dataset: &RandomizedDataset,
    subsystem: &SubsystemSpec,
    axis: Axis,
    method: ErrorMethod,
) -> Result<PDFEstimate> {
    let n_a = subsystem.len();
    let per_record = per_record_pdf(dataset, subsystem, axis)?;
    let mut probabilities = Vec::with_capacity(n_a + 1);
    let mut stderr = Vec::with_capacity(n_a + 1);
    let mut column = vec![0.0f64; per_record.len()];
    for j in 0..=n_a {
        for (r, rec_vals) in per_record.iter().enumerate() {
            column[r] = rec_vals[j];
        }
        probabilities.push(stats::mean(&column));
        stderr.push(method.apply(&column));
    }
    Ok(PDFEstimate {
        axis,
        subsystem: subsystem.clone(),
        outcomes: magnetization_outcomes(n_a),
        probabilities,
        stderr,
        n_unitaries: dataset.records.len(),
    })
}

/// ⟨Σ_k c_k P_k⟩ with the error bar taken over per-unitary estimates of the
/// full combination (correlations between terms are kept).
pub fn estimate_linear_combination(
    dataset: &RandomizedDataset,
    terms: &[(f64, PauliString)],
) -> Result<(f64, f64)> {
    if terms.is_empty() {
        return Err(Error::input("no terms supplied"));
    }
    for (_, string) in terms {
        if let Some(max) = string.max_site() {
            if max > dataset.meta.n_qubits {
                return Err(Error::input(format!(
                    "observable site {max} outside the {}-qubit dataset",
                    dataset.meta.n_qubits
                )));
            }
        }
    }
    if dataset.records.is_empty() {
        return Err(Error::input("dataset has no records"));
    }
    let needed: Vec<(usize, Axis)> = {
        let mut v: Vec<(usize, Axis)> = terms
            .iter()
            .flat_map(|(_, s)| s.terms().collect::<Vec<_>>())
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let per_record: Vec<f64> = dataset
        .records
        .par_iter()
        .map(|rec| {
            let weights: Vec<[f64; 2]> = needed
                .iter()
                .map(|&(site, axis)| {
                    let u = rec.unitaries[site - 1].matrix();
                    [snapshot_weight(u, 0, axis), snapshot_weight(u, 1, axis)]
                })
                .collect();
            let lookup = |site: usize, axis: Axis, bit: u8| -> f64 {
                let idx = needed
                    .binary_search(&(site, axis))
                    .expect("weight precomputed");
                weights[idx][bit as usize]
            };
            let mut acc = 0.0;
            for shot in &rec.shots {
                let mut shot_val = 0.0;
                for (coeff, string) in terms {
                    let mut prod = 1.0;
                    for (site, axis) in string.terms() {
                        prod *= lookup(site, axis, shot[site - 1]);
                    }
                    shot_val += coeff * prod;
                }
                acc += shot_val;
            }
            acc / rec.shots.len() as f64
        })
        .collect();
    Ok((stats::mean(&per_record), stats::sem(&per_record)))
}

/// ⟨P⟩ of a single Pauli string with its standard error.
pub fn estimate_pauli_expectation(
    dataset: &RandomizedDataset,
    observable: &PauliString,
) -> Result<(f64, f64)> {
    estimate_linear_combination(dataset, &[(1.0, observable.clone())])
}

/// ⟨S_A^μ⟩ and ⟨(S_A^μ)²⟩ with errors over per-unitary estimates.
pub fn estimate_magnetization_moments(
    dataset: &RandomizedDataset,
    subsystem: &SubsystemSpec,
    axis: Axis,
) -> Result<((f64, f64), (f64, f64))> {
    validate_estimation_inputs(dataset, subsystem)?;
    let sites = subsystem.sites();
    let first: Vec<(f64, PauliString)> = sites
        .iter()
        .map(|&s| (1.0, PauliString::single(s, axis).unwrap()))
        .collect();
    // S² = N_A·I + 2 Σ_{j<k} σ_j σ_k
    let mut second: Vec<(f64, PauliString)> = vec![(sites.len() as f64, PauliString::identity())];
    for (i, &sj) in sites.iter().enumerate() {
        for &sk in sites.iter().skip(i + 1) {
            second.push((2.0, PauliString::new([(sj, axis), (sk, axis)]).unwrap()));
        }
    }
    Ok((
        estimate_linear_combination(dataset, &first)?,
        estimate_linear_combination(dataset, &second)?,
    ))
}

/// One term of the product expansion of e^{iα S_A^μ}.
#[derive(Clone, Debug)]
pub struct TermEstimate {
    pub string: PauliString,
    pub value: f64,
    pub stderr: f64,
}

/// Estimate every σ_T, T ⊆ A, of the product expansion of e^{iα S_A^μ}.
///
/// Terms are ordered by subset bitmask over the subsystem sites; the identity
/// (T = ∅) comes first with value 1 and zero error.
pub fn estimate_fcs_term_set(
    dataset: &RandomizedDataset,
    subsystem: &SubsystemSpec,
    axis: Axis,
) -> Result<Vec<TermEstimate>> {
    validate_estimation_inputs(dataset, subsystem)?;
    let sites = subsystem.sites();
    let n_a = sites.len();
    if n_a > MAX_TERM_SET_SITES {
        return Err(Error::input(format!(
            "product expansion capped at {MAX_TERM_SET_SITES} sites, got {n_a}"
        )));
    }
    let n_subsets = 1usize << n_a;
    let per_record: Vec<Vec<f64>> = dataset
        .records
        .par_iter()
        .map(|rec| {
            let weights = record_weights(rec, sites, axis);
            let mut acc = vec![0.0f64; n_subsets];
            let mut prod = vec![1.0f64; n_subsets];
            for shot in &rec.shots {
                for mask in 1..n_subsets {
                    let low = mask.trailing_zeros() as usize;
                    let w = weights[low][shot[sites[low] - 1] as usize];
                    prod[mask] = prod[mask & (mask - 1)] * w;
                }
                for (a, &p) in acc.iter_mut().zip(prod.iter()) {
                    *a += p;
                }
            }
            let inv = 1.0 / rec.shots.len() as f64;
            acc.into_iter().map(|a| a * inv).collect()
        })
        .collect();
    let mut out = Vec::with_capacity(n_subsets);
    let mut column = vec![0.0f64; per_record.len()];
    for mask in 0..n_subsets {
        for (r, rec_vals) in per_record.iter().enumerate() {
            column[r] = rec_vals[mask];
        }
        let string = PauliString::new(
            (0..n_a)
                .filter(|p| (mask >> p) & 1 == 1)
                .map(|p| (sites[p], axis)),
        )
        .unwrap();
        out.push(TermEstimate {
            string,
            value: stats::mean(&column),
            stderr: stats::sem(&column),
        });
    }
    Ok(out)
}

/// Map the supplied terms onto subset bitmasks of the subsystem, checking the
/// set is exactly the 2^{N_A}-term product expansion on the given axis.
fn index_term_set<'a>(
    terms: &'a [TermEstimate],
    subsystem: &SubsystemSpec,
    axis: Axis,
) -> Result<Vec<&'a TermEstimate>> {
    let sites = subsystem.sites();
    let n_a = sites.len();
    if n_a > MAX_TERM_SET_SITES {
        return Err(Error::input(format!(
            "product expansion capped at {MAX_TERM_SET_SITES} sites, got {n_a}"
        )));
    }
    let n_subsets = 1usize << n_a;
    if terms.len() != n_subsets {
        return Err(Error::input(format!(
            "expected {n_subsets} expansion terms, got {}",
            terms.len()
        )));
    }
    let mut slots: Vec<Option<&TermEstimate>> = vec![None; n_subsets];
    for term in terms {
        let mut mask = 0usize;
        for (site, term_axis) in term.string.terms() {
            if term_axis != axis {
                return Err(Error::input(format!(
                    "term {} uses axis {term_axis}, expected {axis}",
                    term.string
                )));
            }
            let pos = sites
                .iter()
                .position(|&s| s == site)
                .ok_or_else(|| Error::input(format!("term site {site} outside subsystem")))?;
            mask |= 1 << pos;
        }
        if slots[mask].replace(term).is_some() {
            return Err(Error::input(format!("duplicate term {}", term.string)));
        }
    }
    Ok(slots.into_iter().map(|t| t.unwrap()).collect())
}

/// Reconstruct χ(α) from independently estimated expansion terms:
/// χ = Σ_T cos^{N_A−|T|}(α) (i sin α)^{|T|} ⟨σ_T⟩.
pub fn fcs_from_terms(
    terms: &[TermEstimate],
    subsystem: &SubsystemSpec,
    axis: Axis,
    alpha: f64,
) -> Result<C64> {
    let ordered = index_term_set(terms, subsystem, axis)?;
    let n_a = subsystem.len();
    let (c, s) = (alpha.cos(), alpha.sin());
    let mut total = C64::new(0.0, 0.0);
    for (mask, term) in ordered.iter().enumerate() {
        let k = mask.count_ones() as usize;
        let weight = c.powi((n_a - k) as i32) * s.powi(k as i32);
        let i_pow = match k % 4 {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        };
        total += i_pow * C64::new(weight * term.value, 0.0);
    }
    Ok(total)
}

/// Propagated errors of Re χ(α) and Im χ(α) from per-term errors, treating the
/// terms as independently measured.
///
/// Even-|T| terms carry the real part, odd-|T| terms the imaginary part; the
/// per-term errors combine in quadrature with the trigonometric weights
/// cos^{N_A−|T|}(α) sin^{|T|}(α). The identity term is exact and contributes
/// nothing.
pub fn propagate_fcs_error(
    terms: &[TermEstimate],
    subsystem: &SubsystemSpec,
    axis: Axis,
    alpha: f64,
) -> Result<(f64, f64)> {
    let ordered = index_term_set(terms, subsystem, axis)?;
    let n_a = subsystem.len();
    let (c, s) = (alpha.cos(), alpha.sin());
    let mut var_re = 0.0;
    let mut var_im = 0.0;
    for (mask, term) in ordered.iter().enumerate() {
        let k = mask.count_ones() as usize;
        if k == 0 {
            continue;
        }
        let weight = c.powi((n_a - k) as i32) * s.powi(k as i32);
        let contribution = weight * weight * term.stderr * term.stderr;
        if k.is_multiple_of(2) {
            var_re += contribution;
        } else {
            var_im += contribution;
        }
    }
    Ok((var_re.sqrt(), var_im.sqrt()))
}

/// Contiguous windows of length `n_a` that avoid `exclude_each_end` sites at
/// both chain ends.
pub fn bulk_windows(
    n_qubits: usize,
    n_a: usize,
    exclude_each_end: usize,
) -> Result<Vec<SubsystemSpec>> {
    if n_a == 0 {
        return Err(Error::input("window length must be positive"));
    }
    let first = exclude_each_end + 1;
    let last_start = (n_qubits.saturating_sub(exclude_each_end) + 1).saturating_sub(n_a);
    if last_start < first {
        return Err(Error::input(format!(
            "no bulk windows of length {n_a} fit in {n_qubits} sites \
             (excluding {exclude_each_end} per end)"
        )));
    }
    (first..=last_start)
        .map(|start| SubsystemSpec::contiguous(start, start + n_a - 1))
        .collect()
}

/// What [`average_bulk_subsystems`] should estimate.
#[derive(Clone, Debug)]
pub enum BulkTarget {
    Fcs(Vec<f64>),
    Pdf,
}

/// Bulk-averaged estimate; the embedded subsystem is the first window.
#[derive(Clone, Debug)]
pub enum BulkEstimate {
    Fcs(FCSCurve),
    Pdf(PDFEstimate),
}

/// Average an estimate over all bulk windows of length `n_a` (one excluded
/// site per chain end), pooling per-unitary, per-window estimates for the
/// error bar.
pub fn average_bulk_subsystems(
    dataset: &RandomizedDataset,
    n_a: usize,
    axis: Axis,
    target: &BulkTarget,
) -> Result<BulkEstimate> {
    average_bulk_subsystems_with(dataset, n_a, axis, target, 1)
}

/// Same as [`average_bulk_subsystems`] with a configurable edge exclusion.
pub fn average_bulk_subsystems_with(
    dataset: &RandomizedDataset,
    n_a: usize,
    axis: Axis,
    target: &BulkTarget,
    exclude_each_end: usize,
) -> Result<BulkEstimate> {
    let windows = bulk_windows(dataset.meta.n_qubits, n_a, exclude_each_end)?;
    match target {
        BulkTarget::Fcs(grid) => {
            validate_grid(grid)?;
            let n_u = dataset.records.len();
            // pooled per-(window, record) estimates per grid point
            let mut pool: Vec<Vec<C64>> =
                vec![Vec::with_capacity(windows.len() * n_u); grid.len()];
            for window in &windows {
                let per_rec = per_record_fcs(dataset, window, axis, grid)?;
                for rec_vals in per_rec {
                    for (k, v) in rec_vals.into_iter().enumerate() {
                        pool[k].push(v);
                    }
                }
            }
            let mut values = Vec::with_capacity(grid.len());
            let mut stderr_re = Vec::with_capacity(grid.len());
            let mut stderr_im = Vec::with_capacity(grid.len());
            for col in &pool {
                let (mean, se_re, se_im) = stats::complex_mean_err(col, ErrorMethod::Stderr);
                values.push(mean);
                stderr_re.push(se_re);
                stderr_im.push(se_im);
            }
            Ok(BulkEstimate::Fcs(FCSCurve {
                axis,
                subsystem: windows[0].clone(),
                alpha_grid: grid.clone(),
                values,
                stderr_re,
                stderr_im,
                n_unitaries: n_u,
            }))
        }
        BulkTarget::Pdf => {
            let mut pool: Vec<Vec<f64>> = vec![Vec::new(); n_a + 1];
            for window in &windows {
                let per_rec = per_record_pdf(dataset, window, axis)?;
                for rec_vals in per_rec {
                    for (j, v) in rec_vals.into_iter().enumerate() {
                        pool[j].push(v);
                    }
                }
            }
            let probabilities: Vec<f64> = pool.iter().map(|col| stats::mean(col)).collect();
            let stderr: Vec<f64> = pool.iter().map(|col| stats::sem(col)).collect();
            Ok(BulkEstimate::Pdf(PDFEstimate {
                axis,
                subsystem: windows[0].clone(),
                outcomes: magnetization_outcomes(n_a),
                probabilities,
                stderr,
                n_unitaries: dataset.records.len(),
            }))
        }
    }
}

/// Per-record FCS estimates (mean over shots), one vector per record.
fn per_record_fcs(
    dataset: &RandomizedDataset,
    subsystem: &SubsystemSpec,
    axis: Axis,
    grid: &[f64],
) -> Result<Vec<Vec<C64>>> {
    validate_estimation_inputs(dataset, subsystem)?;
    let sites = subsystem.sites();
    let trig: Vec<(f64, f64)> = grid.iter().map(|&a| (a.cos(), a.sin())).collect();
    Ok(dataset
        .records
        .par_iter()
        .map(|rec| {
            let weights = record_weights(rec, sites, axis);
            let mut acc = vec![C64::new(0.0, 0.0); trig.len()];
            for shot in &rec.shots {
                for (k, &(c, s)) in trig.iter().enumerate() {
                    let mut prod = C64::new(1.0, 0.0);
                    for (pos, &site) in sites.iter().enumerate() {
                        let w = weights[pos][shot[site - 1] as usize];
                        prod *= C64::new(c, w * s);
                    }
                    acc[k] += prod;
                }
            }
            let inv = 1.0 / rec.shots.len() as f64;
            for v in &mut acc {
                *v *= inv;
            }
            acc
        })
        .collect())
}

/// Per-record PDF estimates (mean over shots), ascending outcome order.
fn per_record_pdf(
    dataset: &RandomizedDataset,
    subsystem: &SubsystemSpec,
    axis: Axis,
) -> Result<Vec<Vec<f64>>> {
    validate_estimation_inputs(dataset, subsystem)?;
    let sites = subsystem.sites();
    let n_a = sites.len();
    Ok(dataset
        .records
        .par_iter()
        .map(|rec| {
            let weights = record_weights(rec, sites, axis);
            let mut acc = vec![0.0f64; n_a + 1];
            let mut scratch = vec![0.0f64; n_a + 1];
            for shot in &rec.shots {
                shot_pdf_weights(&weights, sites, shot, &mut scratch);
                for (a, &s) in acc.iter_mut().zip(scratch.iter()) {
                    *a += s;
                }
            }
            let inv = 1.0 / rec.shots.len() as f64;
            // outcome q = −N_A + 2j corresponds to m = N_A − j down-sites
            (0..=n_a).map(|j| acc[n_a - j] * inv).collect()
        })
        .collect())
}

/// Mean and variance of the PDF from a quadratic fit of log χ around α = 0.
///
/// Returns (μ, σ²) with μ the linear imaginary coefficient and σ² = −2× the
/// quadratic real coefficient; the fit window defaults to |α| ≤ 0.3. Reading
/// σ² off the logarithm avoids the catastrophic cancellation of
/// ⟨S²⟩ − ⟨S⟩² when both moments are large.
pub fn cumulants_from_fcs(curve: &FCSCurve) -> Result<(f64, f64)> {
    cumulants_from_fcs_with(curve, 0.3)
}

/// [`cumulants_from_fcs`] with an explicit fit window.
pub fn cumulants_from_fcs_with(curve: &FCSCurve, window: f64) -> Result<(f64, f64)> {
    let mut xs = Vec::new();
    let mut re_ys = Vec::new();
    let mut im_ys = Vec::new();
    let mut in_window = 0usize;
    let has_negative = curve.alpha_grid.iter().any(|&a| a < 0.0);
    for (&alpha, &value) in curve.alpha_grid.iter().zip(curve.values.iter()) {
        if alpha.abs() > window + 1e-12 {
            continue;
        }
        in_window += 1;
        let log = value.ln();
        xs.push(alpha);
        re_ys.push(log.re);
        im_ys.push(log.im);
        // conjugation symmetry supplies the mirrored point when the grid
        // only covers α ≥ 0
        if !has_negative && alpha > 0.0 {
            xs.push(-alpha);
            re_ys.push(log.re);
            im_ys.push(-log.im);
        }
    }
    if in_window < 5 {
        return Err(Error::input(format!(
            "only {in_window} grid points inside the fit window |α| ≤ {window}; need 5"
        )));
    }
    let (_, _, c2_re) = stats::fit_quadratic(&xs, &re_ys)?;
    let (_, c1_im, _) = stats::fit_quadratic(&xs, &im_ys)?;
    Ok((c1_im, -2.0 * c2_re))
}
