//! Exact and closed-form reference values for every estimator.
//!
//! The dense routines work on arbitrary density matrices; the closed forms
//! evaluate the product-state expressions for the Néel and tilted-ferromagnet
//! families and are exact ground truth wherever they apply.

use crate::dense;
use crate::spin::{Axis, DensityMatrix, PauliString};
use crate::{C64, Error, Result};

/// χ(α) = Tr(ρ e^{iα S^μ}) via the factorized phase operator applied site by
/// site to a copy of ρ.
pub fn exact_fcs(rho: &DensityMatrix, axis: Axis, alpha: f64) -> C64 {
    let n = rho.n_sites();
    let phase = crate::spin::single_qubit_phase(axis, alpha);
    let mut m = rho.matrix().clone();
    for pos in 0..n {
        dense::apply_mat2_right(&mut m, n, pos, &phase);
    }
    dense::trace(&m)
}

/// [`exact_fcs`] over a grid.
pub fn exact_fcs_curve(rho: &DensityMatrix, axis: Axis, grid: &[f64]) -> Vec<C64> {
    grid.iter().map(|&a| exact_fcs(rho, axis, a)).collect()
}

/// p(q) = Tr(Π_q ρ) for all q at once, ascending outcome order.
///
/// Rotates ρ into the μ eigenbasis per site and bins the diagonal by
/// magnetization.
pub fn exact_pdf(rho: &DensityMatrix, axis: Axis) -> Vec<f64> {
    let n = rho.n_sites();
    let mut m = rho.matrix().clone();
    if axis != Axis::Z {
        let r = axis.basis_rotation();
        let r_dag = r.adjoint();
        for pos in 0..n {
            dense::apply_mat2_left(&mut m, n, pos, &r_dag);
            dense::apply_mat2_right(&mut m, n, pos, &r);
        }
    }
    let mut probs = vec![0.0f64; n + 1];
    for k in 0..m.nrows() {
        // outcome q = n − 2·(#down) at ascending index j = (q + n)/2 = n − #down
        let j = n - k.count_ones() as usize;
        probs[j] += m[(k, k)].re;
    }
    probs
}

/// ⟨S_A^μ⟩ and ⟨(S_A^μ)²⟩ of a density matrix.
pub fn exact_magnetization_moments(rho: &DensityMatrix, axis: Axis) -> Result<(f64, f64)> {
    let sites = rho.sites().to_vec();
    let mut first = 0.0;
    for &s in &sites {
        first += crate::spin::expectation(rho, &PauliString::single(s, axis)?)?;
    }
    let mut second = sites.len() as f64;
    for (i, &sj) in sites.iter().enumerate() {
        for &sk in sites.iter().skip(i + 1) {
            second +=
                2.0 * crate::spin::expectation(rho, &PauliString::new([(sj, axis), (sk, axis)])?)?;
        }
    }
    Ok((first, second))
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Closed-form families for product initial states.
#[derive(Clone, Debug, PartialEq)]
pub enum ClosedFormSpec {
    /// Néel longitudinal FCS: χ_x(α) = cos^{N_A}(α).
    NeelFcsX { n_a: usize },
    /// Néel longitudinal PDF: p_x(q) = 2^{−N_A} C(N_A, (N_A−q)/2).
    NeelPdfX { n_a: usize },
    /// Transverse FCS of a bit-flipped Néel block: one factor
    /// cos α ± i(1−2p_j) sin α per site, sign set by the site's sublattice
    /// (+ for odd sites, which hold ↑).
    NeelBitflipFcsZ { sites: Vec<usize>, rates: Vec<f64> },
    /// Tilted ferromagnet: χ_z(α) = (cos α − i sin α cos θ)^{N_A}.
    TiltedFcsZ { n_a: usize, theta: f64 },
    /// Tilted ferromagnet: χ_x(α) = (cos α + i sin α sin θ)^{N_A}.
    TiltedFcsX { n_a: usize, theta: f64 },
    /// Tilted ferromagnet at θ = π/2: p_z(q) = 2^{−N_A} C(N_A, (N_A−q)/2).
    TiltedPdfZHalfPi { n_a: usize },
    /// Spin parity of the tilted ferromagnet: ⟨P_z⟩ = (−cos θ)^{N_A},
    /// ⟨P_x⟩ = (sin θ)^{N_A}, ⟨P_y⟩ = 0.
    Parity { axis: Axis, theta: f64, n_a: usize },
}

impl ClosedFormSpec {
    fn check(&self) -> Result<()> {
        let n_a = match self {
            ClosedFormSpec::NeelFcsX { n_a }
            | ClosedFormSpec::NeelPdfX { n_a }
            | ClosedFormSpec::TiltedFcsZ { n_a, .. }
            | ClosedFormSpec::TiltedFcsX { n_a, .. }
            | ClosedFormSpec::TiltedPdfZHalfPi { n_a }
            | ClosedFormSpec::Parity { n_a, .. } => *n_a,
            ClosedFormSpec::NeelBitflipFcsZ { sites, rates } => {
                if sites.is_empty() || sites.len() != rates.len() {
                    return Err(Error::input(
                        "bit-flip closed form needs one rate per site",
                    ));
                }
                if rates.iter().any(|&p| !(0.0..=0.5).contains(&p)) {
                    return Err(Error::input("bit-flip rates must lie in [0, 0.5]"));
                }
                sites.len()
            }
        };
        if n_a == 0 {
            return Err(Error::input("closed form needs at least one site"));
        }
        Ok(())
    }

    /// Evaluate an FCS family at spectral parameter α.
    pub fn fcs(&self, alpha: f64) -> Result<C64> {
        self.check()?;
        let (c, s) = (alpha.cos(), alpha.sin());
        match self {
            ClosedFormSpec::NeelFcsX { n_a } => Ok(C64::new(c.powi(*n_a as i32), 0.0)),
            ClosedFormSpec::NeelBitflipFcsZ { sites, rates } => {
                let mut acc = C64::new(1.0, 0.0);
                for (&site, &p) in sites.iter().zip(rates.iter()) {
                    let damp = (1.0 - 2.0 * p) * s;
                    // odd sites hold ↑ in |↑↓↑↓…⟩ and carry the +i factor
                    let factor = if site % 2 == 1 {
                        C64::new(c, damp)
                    } else {
                        C64::new(c, -damp)
                    };
                    acc *= factor;
                }
                Ok(acc)
            }
            ClosedFormSpec::TiltedFcsZ { n_a, theta } => {
                Ok(C64::new(c, -s * theta.cos()).powi(*n_a as i32))
            }
            ClosedFormSpec::TiltedFcsX { n_a, theta } => {
                Ok(C64::new(c, s * theta.sin()).powi(*n_a as i32))
            }
            _ => Err(Error::input("not an FCS family")),
        }
    }

    /// Evaluate a PDF family at outcome q.
    pub fn pdf(&self, q: i64) -> Result<f64> {
        self.check()?;
        let n_a = match self {
            ClosedFormSpec::NeelPdfX { n_a } | ClosedFormSpec::TiltedPdfZHalfPi { n_a } => *n_a,
            _ => return Err(Error::input("not a PDF family")),
        };
        if q.abs() > n_a as i64 || (q - n_a as i64) % 2 != 0 {
            return Err(Error::input(format!(
                "q={q} is not an eigenvalue of a {n_a}-site magnetization"
            )));
        }
        let k = ((n_a as i64 - q) / 2) as usize;
        Ok(binomial(n_a, k) / (1u64 << n_a) as f64)
    }

    /// Evaluate the parity family.
    pub fn parity(&self) -> Result<f64> {
        self.check()?;
        match self {
            ClosedFormSpec::Parity { axis, theta, n_a } => {
                let per_site = match axis {
                    Axis::Z => -theta.cos(),
                    Axis::X => theta.sin(),
                    Axis::Y => 0.0,
                };
                Ok(per_site.powi(*n_a as i32))
            }
            _ => Err(Error::input("not a parity family")),
        }
    }
}

/// The N_A+1 equally spaced spectral points α_k = πk/(N_A+1) that invert the
/// finite Fourier sum of the PDF.
pub fn inversion_grid(n_a: usize) -> Vec<f64> {
    (0..=n_a)
        .map(|k| std::f64::consts::PI * k as f64 / (n_a + 1) as f64)
        .collect()
}

/// Invert χ(α) = Σ_q p(q) e^{iαq} on the discrete outcome set.
///
/// The supplied grid must contain the N_A+1 points of [`inversion_grid`]
/// (within 1e-9); returns probabilities in ascending outcome order.
pub fn fcs_to_pdf(grid: &[f64], values: &[C64], n_a: usize) -> Result<Vec<f64>> {
    if grid.len() != values.len() {
        return Err(Error::input("grid/value length mismatch"));
    }
    let needed = inversion_grid(n_a);
    let picked: Vec<C64> = needed
        .iter()
        .map(|&alpha| {
            grid.iter()
                .position(|&a| (a - alpha).abs() < 1e-9)
                .map(|idx| values[idx])
                .ok_or_else(|| {
                    Error::input(format!(
                        "grid lacks the inversion point α = {alpha:.6}; need πk/{}",
                        n_a + 1
                    ))
                })
        })
        .collect::<Result<_>>()?;
    let m_count = n_a + 1;
    // p_m = (1/(N_A+1)) Σ_k χ(α_k) e^{−iα_k N_A} e^{+2πi km/(N_A+1)}
    let mut probs_by_m = vec![0.0f64; m_count];
    for (m, slot) in probs_by_m.iter_mut().enumerate() {
        let mut acc = C64::new(0.0, 0.0);
        for (k, &chi) in picked.iter().enumerate() {
            let alpha_k = needed[k];
            let twiddle = C64::from_polar(
                1.0,
                -alpha_k * n_a as f64
                    + 2.0 * std::f64::consts::PI * (k * m) as f64 / m_count as f64,
            );
            acc += chi * twiddle;
        }
        *slot = acc.re / m_count as f64;
    }
    // m = number of −1 outcomes; ascending q = n_a − 2m reversed
    Ok((0..m_count).map(|j| probs_by_m[n_a - j]).collect())
}
