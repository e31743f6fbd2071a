//! State preparation, the long-range XY Hamiltonian, exact time evolution and
//! local noise channels.
//!
//! Couplings are given in rad/s and times in milliseconds at every interface;
//! times are converted to seconds internally so that `J0·t` is the
//! dimensionless phase (ħ = 1).

use faer::Col;

use crate::dense;
use crate::spin::{Axis, DensityMatrix, StateVector, site_bit};
use crate::{C64, CMat, Error, MAX_QUBITS, Result};

/// Parameters of a quench with the power-law XY Hamiltonian.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuenchConfig {
    pub n_qubits: usize,
    /// Overall coupling J0 in rad/s.
    pub j0_rad_per_s: f64,
    /// Power-law exponent of the coupling decay.
    pub alpha_exp: f64,
    /// Evolution times of interest, in milliseconds.
    pub times_ms: Vec<f64>,
}

impl QuenchConfig {
    /// Néel-quench experiment: N=10, J0 ≈ 420 rad/s, α ≈ 1.24.
    pub fn case_i() -> Self {
        QuenchConfig {
            n_qubits: 10,
            j0_rad_per_s: 420.0,
            alpha_exp: 1.24,
            times_ms: vec![0.0, 1.0, 4.0],
        }
    }

    /// Tilted-ferromagnet experiment: N=12, J0 ≈ 560 rad/s, α ≈ 1.
    pub fn case_ii() -> Self {
        QuenchConfig {
            n_qubits: 12,
            j0_rad_per_s: 560.0,
            alpha_exp: 1.0,
            times_ms: vec![0.0, 1.0, 4.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits < 2 {
            return Err(Error::input("quench needs at least two qubits"));
        }
        if self.n_qubits > MAX_QUBITS {
            return Err(Error::Capacity {
                requested: self.n_qubits,
                cap: MAX_QUBITS,
            });
        }
        if self.j0_rad_per_s.is_nan() || self.j0_rad_per_s <= 0.0 {
            return Err(Error::input("J0 must be positive"));
        }
        if self.alpha_exp.is_nan() || self.alpha_exp < 0.0 {
            return Err(Error::input("power-law exponent must be non-negative"));
        }
        if self.times_ms.iter().any(|&t| t.is_nan() || t < 0.0) {
            return Err(Error::input("evolution times must be non-negative"));
        }
        Ok(())
    }
}

/// Which product state the chain is prepared in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialStateKind {
    Neel,
    TiltedFerromagnet,
}

/// Initial-state description, including optional preparation bit-flip rates.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct InitialStateSpec {
    pub kind: InitialStateKind,
    /// Tilt angle in radians; ignored for the Néel state.
    #[serde(default)]
    pub theta: f64,
    /// Per-site bit-flip probabilities in [0, 0.5]; `None` means ideal.
    #[serde(default)]
    pub bitflip_rates: Option<Vec<f64>>,
}

impl InitialStateSpec {
    pub fn neel() -> Self {
        InitialStateSpec {
            kind: InitialStateKind::Neel,
            theta: 0.0,
            bitflip_rates: None,
        }
    }

    pub fn tilted(theta: f64) -> Self {
        InitialStateSpec {
            kind: InitialStateKind::TiltedFerromagnet,
            theta,
            bitflip_rates: None,
        }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if self.kind == InitialStateKind::TiltedFerromagnet
            && !(0.0..=std::f64::consts::PI).contains(&self.theta)
        {
            return Err(Error::input(format!(
                "tilt angle {} outside [0, π]",
                self.theta
            )));
        }
        if let Some(rates) = &self.bitflip_rates {
            if rates.len() != n_qubits {
                return Err(Error::input(format!(
                    "{} bit-flip rates supplied for {} qubits",
                    rates.len(),
                    n_qubits
                )));
            }
            if rates.iter().any(|&p| !(0.0..=0.5).contains(&p)) {
                return Err(Error::input("bit-flip rates must lie in [0, 0.5]"));
            }
        }
        Ok(())
    }

    /// The ideal (noise-free) pure state.
    pub fn prepare(&self, n_qubits: usize) -> Result<StateVector> {
        self.validate(n_qubits)?;
        match self.kind {
            InitialStateKind::Neel => prepare_neel(n_qubits),
            InitialStateKind::TiltedFerromagnet => prepare_tilted_ferromagnet(n_qubits, self.theta),
        }
    }

    /// Short human/machine-readable label used in file metadata.
    pub fn descriptor(&self) -> String {
        let base = match self.kind {
            InitialStateKind::Neel => "neel".to_string(),
            InitialStateKind::TiltedFerromagnet => format!("tilted_ferromagnet(theta={})", self.theta),
        };
        match &self.bitflip_rates {
            None => base,
            Some(_) => format!("{base}+bitflip"),
        }
    }
}

/// Dense XY Hamiltonian with a cached eigendecomposition.
#[derive(Clone, Debug)]
pub struct Hamiltonian {
    n_qubits: usize,
    matrix: CMat,
    eigenvalues: Vec<f64>,
    eigenvectors: CMat,
}

/// H = Σ_{i>j} J0/(2|i−j|^α) (σ^x_i σ^x_j + σ^y_i σ^y_j).
///
/// The flip-flop form hops |…01…⟩ ↔ |…10…⟩ with amplitude J0/|i−j|^α, which
/// conserves the total transverse magnetization exactly.
pub fn build_xy_hamiltonian(config: &QuenchConfig) -> Result<Hamiltonian> {
    config.validate()?;
    let n = config.n_qubits;
    let dim = 1usize << n;
    let mut matrix = CMat::zeros(dim, dim);
    for i in 1..=n {
        for j in (i + 1)..=n {
            let dist = (j - i) as f64;
            let hop = config.j0_rad_per_s / dist.powf(config.alpha_exp);
            let mask = (1usize << (n - i)) | (1usize << (n - j));
            for k in 0..dim {
                if site_bit(k, n, i) != site_bit(k, n, j) {
                    matrix[(k ^ mask, k)] += C64::new(hop, 0.0);
                }
            }
        }
    }
    let evd = matrix
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::input(format!("eigendecomposition failed: {e:?}")))?;
    let eigenvalues: Vec<f64> = (0..dim).map(|k| evd.S()[k].re).collect();
    Ok(Hamiltonian {
        n_qubits: n,
        matrix,
        eigenvalues,
        eigenvectors: evd.U().to_owned(),
    })
}

impl Hamiltonian {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &CMat {
        &self.eigenvectors
    }

    /// ⟨ψ|H|ψ⟩ in rad/s.
    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        if state.dim() != self.dim() {
            return Err(Error::input("state dimension does not match Hamiltonian"));
        }
        let psi = Col::<C64>::from_fn(self.dim(), |i| state.amplitudes()[i]);
        let h_psi = &self.matrix * &psi;
        let val: C64 = (0..self.dim()).map(|i| psi[i].conj() * h_psi[i]).sum();
        Ok(val.re)
    }

    /// Relative Frobenius error of `V Λ V† − H`; cheap sanity check for tests.
    pub fn reconstruction_error(&self) -> f64 {
        let dim = self.dim();
        let mut vl = self.eigenvectors.clone();
        for k in 0..dim {
            let lambda = C64::new(self.eigenvalues[k], 0.0);
            for i in 0..dim {
                vl[(i, k)] *= lambda;
            }
        }
        let recon = &vl * self.eigenvectors.adjoint();
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for j in 0..dim {
            for i in 0..dim {
                num += (recon[(i, j)] - self.matrix[(i, j)]).norm_sqr();
                den += self.matrix[(i, j)].norm_sqr();
            }
        }
        (num / den).sqrt()
    }
}

/// |↑↓↑↓…⟩ with ↑ at site 1.
pub fn prepare_neel(n_qubits: usize) -> Result<StateVector> {
    let mut index = 0usize;
    for site in 1..=n_qubits {
        if site.is_multiple_of(2) {
            index |= 1usize << (n_qubits - site);
        }
    }
    StateVector::computational_basis(n_qubits, index)
}

/// e^{iθ/2 Σ_j σ^y_j} |↓↓…↓⟩: every site in sin(θ/2)|↑⟩ + cos(θ/2)|↓⟩.
pub fn prepare_tilted_ferromagnet(n_qubits: usize, theta: f64) -> Result<StateVector> {
    let ket = [
        C64::new((theta / 2.0).sin(), 0.0),
        C64::new((theta / 2.0).cos(), 0.0),
    ];
    StateVector::from_site_kets(&vec![ket; n_qubits])
}

/// exp(−i H t)|Ψ⟩ through the cached eigendecomposition.
pub fn evolve(state: &StateVector, h: &Hamiltonian, t_ms: f64) -> Result<StateVector> {
    if state.dim() != h.dim() {
        return Err(Error::input("state dimension does not match Hamiltonian"));
    }
    if t_ms.is_nan() || t_ms < 0.0 {
        return Err(Error::input("evolution time must be non-negative"));
    }
    let t_s = t_ms * 1e-3;
    let dim = h.dim();
    let psi = Col::<C64>::from_fn(dim, |i| state.amplitudes()[i]);
    let mut coeffs = h.eigenvectors().adjoint() * &psi;
    for k in 0..dim {
        coeffs[k] *= C64::from_polar(1.0, -h.eigenvalues[k] * t_s);
    }
    let out = h.eigenvectors() * &coeffs;
    StateVector::new(state.n_qubits(), (0..dim).map(|i| out[i]).collect())
}

/// ⟨σ_site^μ⟩ of a pure state.
pub fn site_magnetization(state: &StateVector, site: usize, axis: Axis) -> f64 {
    let n = state.n_qubits();
    let amps = state.amplitudes();
    let mask = 1usize << (n - site);
    match axis {
        Axis::Z => amps
            .iter()
            .enumerate()
            .map(|(k, a)| {
                let sign = if k & mask == 0 { 1.0 } else { -1.0 };
                sign * a.norm_sqr()
            })
            .sum(),
        Axis::X => {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..amps.len() {
                if k & mask == 0 {
                    acc += amps[k].conj() * amps[k | mask];
                }
            }
            2.0 * acc.re
        }
        Axis::Y => {
            // ⟨σ^y⟩ = 2 Im Σ_{k: bit=0} ψ*_k ψ_{k|mask} · … with σ^y|1⟩ = −i|0⟩
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..amps.len() {
                if k & mask == 0 {
                    acc += amps[k].conj() * amps[k | mask] * C64::new(0.0, -1.0);
                }
            }
            2.0 * acc.re
        }
    }
}

/// ⟨S^μ_total⟩ = Σ_j ⟨σ_j^μ⟩ of a pure state.
pub fn total_magnetization(state: &StateVector, axis: Axis) -> f64 {
    (1..=state.n_qubits())
        .map(|site| site_magnetization(state, site, axis))
        .sum()
}

fn validate_rates(rates: &[f64], n_sites: usize) -> Result<()> {
    if rates.len() != n_sites {
        return Err(Error::input(format!(
            "{} rates supplied for {} sites",
            rates.len(),
            n_sites
        )));
    }
    if rates.iter().any(|&p| !(0.0..=0.5).contains(&p)) {
        return Err(Error::input("bit-flip rates must lie in [0, 0.5]"));
    }
    Ok(())
}

/// Independent per-site bit-flip channel ρ → (1−p_j)ρ + p_j σ^x_j ρ σ^x_j.
pub fn apply_bitflip_channel(rho: &DensityMatrix, rates: &[f64]) -> Result<DensityMatrix> {
    validate_rates(rates, rho.n_sites())?;
    let n = rho.n_sites();
    let dim = rho.dim();
    let mut cur = rho.matrix().clone();
    for (pos, &p) in rates.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let mask = 1usize << dense::pos_shift(n, pos);
        let mut next = CMat::zeros(dim, dim);
        for j in 0..dim {
            for i in 0..dim {
                next[(i, j)] =
                    (1.0 - p) * cur[(i, j)] + p * cur[(i ^ mask, j ^ mask)];
            }
        }
        cur = next;
    }
    DensityMatrix::new(rho.sites().to_vec(), cur)
}

/// Uniform per-site dephasing ρ → (1−p)ρ + p σ^z_j ρ σ^z_j at every site.
///
/// Stand-in decoherence model for the quench dynamics; applying it at each
/// site scales the (i, j) entry by (1−2p)^{hamming(i⊕j)}.
pub fn apply_dephasing_channel(rho: &DensityMatrix, rate: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::input("dephasing rate must lie in [0, 1]"));
    }
    let dim = rho.dim();
    let factor = 1.0 - 2.0 * rate;
    let mut out = rho.matrix().clone();
    for j in 0..dim {
        for i in 0..dim {
            let weight = (i ^ j).count_ones();
            if weight > 0 {
                out[(i, j)] *= factor.powi(weight as i32);
            }
        }
    }
    DensityMatrix::new(rho.sites().to_vec(), out)
}

/// Learned bit-flip rates p_j = (1 − |⟨σ_j^z⟩|)/2.
pub fn estimate_bitflip_rates(sigma_z_expectations: &[f64]) -> Result<Vec<f64>> {
    sigma_z_expectations
        .iter()
        .map(|&v| {
            if v.abs() > 1.0 {
                Err(Error::input(format!(
                    "⟨σ^z⟩ = {v} lies outside [−1, 1]"
                )))
            } else {
                Ok((1.0 - v.abs()) / 2.0)
            }
        })
        .collect()
}

/// Exact unitary evolution of a full-system density matrix.
pub fn evolve_density(rho: &DensityMatrix, h: &Hamiltonian, t_ms: f64) -> Result<DensityMatrix> {
    if rho.dim() != h.dim() {
        return Err(Error::input("density dimension does not match Hamiltonian"));
    }
    if t_ms.is_nan() || t_ms < 0.0 {
        return Err(Error::input("evolution time must be non-negative"));
    }
    let t_s = t_ms * 1e-3;
    let v = h.eigenvectors();
    // A = V† ρ V, then phase the eigenbasis entries, then rotate back.
    let mut a = v.adjoint() * rho.matrix() * v;
    let dim = h.dim();
    for l in 0..dim {
        for k in 0..dim {
            let phase = C64::from_polar(1.0, -(h.eigenvalues[k] - h.eigenvalues[l]) * t_s);
            a[(k, l)] *= phase;
        }
    }
    let out = v * &a * v.adjoint();
    DensityMatrix::new(rho.sites().to_vec(), out)
}

/// Trotterized evolution with interleaved per-site dephasing.
///
/// Evolves in equal slices no longer than `dt_ms`, applying
/// [`apply_dephasing_channel`] with probability `gamma_per_ms · slice` after
/// each unitary slice.
pub fn evolve_density_with_dephasing(
    rho: &DensityMatrix,
    h: &Hamiltonian,
    t_ms: f64,
    gamma_per_ms: f64,
    dt_ms: f64,
) -> Result<DensityMatrix> {
    if gamma_per_ms.is_nan() || gamma_per_ms < 0.0 {
        return Err(Error::input("dephasing rate must be non-negative"));
    }
    if dt_ms.is_nan() || dt_ms <= 0.0 {
        return Err(Error::input("Trotter step must be positive"));
    }
    if t_ms == 0.0 || gamma_per_ms == 0.0 {
        return evolve_density(rho, h, t_ms);
    }
    let steps = (t_ms / dt_ms).ceil().max(1.0) as usize;
    let slice = t_ms / steps as f64;
    let p_step = gamma_per_ms * slice;
    if p_step > 0.5 {
        return Err(Error::input(format!(
            "dephasing probability per slice {p_step} exceeds 0.5; reduce the step"
        )));
    }
    // Precompute the slice propagator once; each step is two matmuls.
    let dim = h.dim();
    let t_s = slice * 1e-3;
    let mut vp = h.eigenvectors().clone();
    for k in 0..dim {
        let phase = C64::from_polar(1.0, -h.eigenvalues[k] * t_s);
        for i in 0..dim {
            vp[(i, k)] *= phase;
        }
    }
    let u_step = &vp * h.eigenvectors().adjoint();
    let u_dag = dense::adjoint(&u_step);
    let mut cur = rho.clone();
    for _ in 0..steps {
        let evolved = &u_step * cur.matrix() * &u_dag;
        cur = DensityMatrix::new(cur.sites().to_vec(), evolved)?;
        cur = apply_dephasing_channel(&cur, p_step)?;
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{PauliString, SubsystemSpec, expectation, partial_trace};

    const TABLE_I_RATES: [f64; 10] = [
        0.019, 0.012, 0.041, 0.038, 0.034, 0.015, 0.007, 0.047, 0.002, 0.034,
    ];

    fn config(n: usize) -> QuenchConfig {
        QuenchConfig {
            n_qubits: n,
            j0_rad_per_s: 420.0,
            alpha_exp: 1.24,
            times_ms: vec![],
        }
    }

    #[test]
    fn two_qubit_spectrum_is_hand_checkable() {
        let h = build_xy_hamiltonian(&QuenchConfig {
            n_qubits: 2,
            j0_rad_per_s: 420.0,
            alpha_exp: 1.24,
            times_ms: vec![],
        })
        .unwrap();
        let mut evs = h.eigenvalues().to_vec();
        evs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expected = [-420.0, 0.0, 0.0, 420.0];
        for (got, want) in evs.iter().zip(expected.iter()) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
        assert!(h.reconstruction_error() < 1e-12);
    }

    #[test]
    fn hamiltonian_commutes_with_total_z() {
        // the commutator vanishes exactly: hops preserve magnetization
        let h = build_xy_hamiltonian(&config(5)).unwrap();
        let n = 5;
        let dim = 1 << n;
        let sz = |k: usize| n as f64 - 2.0 * k.count_ones() as f64;
        for j in 0..dim {
            for i in 0..dim {
                let comm = h.matrix()[(i, j)] * C64::new(sz(j) - sz(i), 0.0);
                assert_eq!(comm, C64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn long_range_coupling_vanishes_at_large_exponent() {
        let mut cfg = config(3);
        cfg.alpha_exp = 40.0;
        let h = build_xy_hamiltonian(&cfg).unwrap();
        // |↑↓↓⟩ ↔ |↓↓↑⟩ is the (1,3) hop
        let from = 0b011usize;
        let to = 0b110usize;
        assert!(h.matrix()[(to, from)].norm() < 1e-9);
    }

    #[test]
    fn capacity_cap_enforced() {
        let mut cfg = config(15);
        cfg.times_ms = vec![];
        assert!(matches!(
            build_xy_hamiltonian(&cfg),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn neel_examples() {
        let n2 = prepare_neel(2).unwrap();
        assert!((n2.amplitudes()[0b01] - C64::new(1.0, 0.0)).norm() < 1e-15);

        let n10 = prepare_neel(10).unwrap();
        for site in 1..=10 {
            let want = if site % 2 == 1 { 1.0 } else { -1.0 };
            assert!((site_magnetization(&n10, site, Axis::Z) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn tilted_ferromagnet_examples() {
        let down = prepare_tilted_ferromagnet(3, 0.0).unwrap();
        assert!((down.amplitudes()[0b111] - C64::new(1.0, 0.0)).norm() < 1e-15);

        let half = prepare_tilted_ferromagnet(4, 0.5 * std::f64::consts::PI).unwrap();
        for site in 1..=4 {
            assert!((site_magnetization(&half, site, Axis::X) - 1.0).abs() < 1e-12);
            assert!(site_magnetization(&half, site, Axis::Z).abs() < 1e-12);
        }

        let theta = 0.2 * std::f64::consts::PI;
        let tilted = prepare_tilted_ferromagnet(4, theta).unwrap();
        for site in 1..=4 {
            assert!((site_magnetization(&tilted, site, Axis::Z) + theta.cos()).abs() < 1e-12);
            assert!((site_magnetization(&tilted, site, Axis::X) - theta.sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn evolve_at_zero_time_is_identity() {
        let h = build_xy_hamiltonian(&config(4)).unwrap();
        let psi = prepare_neel(4).unwrap();
        let out = evolve(&psi, &h, 0.0).unwrap();
        assert!((psi.inner(&out).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigenstates_only_pick_up_a_phase() {
        let h = build_xy_hamiltonian(&config(4)).unwrap();
        let dim = h.dim();
        let amps: Vec<C64> = (0..dim).map(|i| h.eigenvectors()[(i, 3)]).collect();
        let psi = StateVector::new(4, amps).unwrap();
        let out = evolve(&psi, &h, 2.5).unwrap();
        let overlap = psi.inner(&out);
        assert!((overlap.norm() - 1.0).abs() < 1e-10);
        let expected = C64::from_polar(1.0, -h.eigenvalues()[3] * 2.5e-3);
        assert!((overlap - expected).norm() < 1e-9);
    }

    /// Independent oracle: 4th-order Runge–Kutta on dψ/dt = −iHψ.
    #[allow(clippy::needless_range_loop)]
    fn rk4_evolve(psi0: &StateVector, h: &Hamiltonian, t_s: f64, dt_s: f64) -> Vec<C64> {
        let dim = h.dim();
        let matvec = |v: &[C64]| -> Vec<C64> {
            let mut out = vec![C64::new(0.0, 0.0); dim];
            for (j, out_j) in out.iter_mut().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for i in 0..dim {
                    acc += h.matrix()[(j, i)] * v[i];
                }
                *out_j = acc * C64::new(0.0, -1.0);
            }
            out
        };
        let mut psi: Vec<C64> = psi0.amplitudes().to_vec();
        let steps = (t_s / dt_s).round() as usize;
        for _ in 0..steps {
            let k1 = matvec(&psi);
            let y2: Vec<C64> = psi.iter().zip(&k1).map(|(p, k)| p + 0.5 * dt_s * k).collect();
            let k2 = matvec(&y2);
            let y3: Vec<C64> = psi.iter().zip(&k2).map(|(p, k)| p + 0.5 * dt_s * k).collect();
            let k3 = matvec(&y3);
            let y4: Vec<C64> = psi.iter().zip(&k3).map(|(p, k)| p + dt_s * k).collect();
            let k4 = matvec(&y4);
            for i in 0..dim {
                psi[i] += dt_s / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        psi
    }

    #[test]
    fn evolution_matches_runge_kutta_oracle() {
        let h = build_xy_hamiltonian(&config(6)).unwrap();
        let psi0 = prepare_neel(6).unwrap();
        let exact = evolve(&psi0, &h, 1.0).unwrap();
        let rk = rk4_evolve(&psi0, &h, 1e-3, 1e-6);
        let diff: f64 = exact
            .amplitudes()
            .iter()
            .zip(rk.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(diff < 1e-6, "RK4 mismatch {diff:.3e}");
    }

    #[test]
    fn evolution_is_unitary_and_conserves_motion_constants() {
        let h = build_xy_hamiltonian(&config(6)).unwrap();
        assert!(h.reconstruction_error() < 1e-8);
        let a = prepare_neel(6).unwrap();
        let b = prepare_tilted_ferromagnet(6, 0.3 * std::f64::consts::PI).unwrap();
        let overlap0 = a.inner(&b);
        let e0 = h.expectation(&a).unwrap();
        let z0 = total_magnetization(&a, Axis::Z);
        for t in [0.3, 1.1, 2.7] {
            let at = evolve(&a, &h, t).unwrap();
            let bt = evolve(&b, &h, t).unwrap();
            assert!((at.inner(&bt) - overlap0).norm() < 1e-10);
            assert!((at.norm() - 1.0).abs() < 1e-10);
            let et = h.expectation(&at).unwrap();
            assert!((et - e0).abs() <= 1e-9 * e0.abs().max(1.0));
            assert!((total_magnetization(&at, Axis::Z) - z0).abs() < 1e-9);
        }
    }

    #[test]
    fn longitudinal_magnetization_is_not_conserved() {
        // tilted ferromagnet θ = π/2, N = 6: ⟨S^x⟩ must drift before J0·t = 2
        let h = build_xy_hamiltonian(&config(6)).unwrap();
        let psi0 = prepare_tilted_ferromagnet(6, 0.5 * std::f64::consts::PI).unwrap();
        let x0 = total_magnetization(&psi0, Axis::X);
        let mut max_dev = 0.0f64;
        for k in 1..=20 {
            let t_ms = 2.0 / 420.0 * 1000.0 * k as f64 / 20.0;
            let psi = evolve(&psi0, &h, t_ms).unwrap();
            max_dev = max_dev.max((total_magnetization(&psi, Axis::X) - x0).abs());
        }
        assert!(max_dev > 1e-3, "⟨S^x⟩ stayed constant: {max_dev:.3e}");
    }

    #[test]
    fn site_magnetization_agrees_with_density_route() {
        let h = build_xy_hamiltonian(&config(4)).unwrap();
        let psi0 = prepare_tilted_ferromagnet(4, 0.7).unwrap();
        let psi = evolve(&psi0, &h, 0.9).unwrap();
        for site in 1..=4 {
            let sub = SubsystemSpec::new(vec![site]).unwrap();
            let rho = partial_trace(&psi, &sub).unwrap();
            for axis in Axis::ALL {
                let direct = site_magnetization(&psi, site, axis);
                let via_rho =
                    expectation(&rho, &PauliString::single(site, axis).unwrap()).unwrap();
                assert!(
                    (direct - via_rho).abs() < 1e-12,
                    "site {site}, axis {axis}: {direct} vs {via_rho}"
                );
            }
        }
    }

    #[test]
    fn bitflip_channel_examples() {
        let neel = prepare_neel(4).unwrap();
        let rho = DensityMatrix::from_pure(vec![1, 2, 3, 4], neel.amplitudes()).unwrap();

        let ideal = apply_bitflip_channel(&rho, &[0.0; 4]).unwrap();
        assert!(crate::dense::max_abs_diff(ideal.matrix(), rho.matrix()) < 1e-15);

        let up = DensityMatrix::from_pure(vec![1], &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)])
            .unwrap();
        let mixed = apply_bitflip_channel(&up, &[0.5]).unwrap();
        assert!((mixed.entry(0, 0).re - 0.5).abs() < 1e-15);
        assert!((mixed.entry(1, 1).re - 0.5).abs() < 1e-15);

        let rates = &TABLE_I_RATES[..4];
        let noisy = apply_bitflip_channel(&rho, rates).unwrap();
        noisy.validate_psd().unwrap();
        for site in 1..=4 {
            let sign = if site % 2 == 1 { 1.0 } else { -1.0 };
            let z = expectation(&noisy, &PauliString::single(site, Axis::Z).unwrap()).unwrap();
            assert!(
                (z - sign * (1.0 - 2.0 * rates[site - 1])).abs() < 1e-12,
                "site {site}"
            );
        }
    }

    #[test]
    fn rate_estimation_examples() {
        assert_eq!(estimate_bitflip_rates(&[1.0]).unwrap(), vec![0.0]);
        let p = estimate_bitflip_rates(&[-0.918]).unwrap();
        assert!((p[0] - 0.041).abs() < 1e-12);
        assert_eq!(estimate_bitflip_rates(&[0.0]).unwrap(), vec![0.5]);
        assert!(estimate_bitflip_rates(&[1.2]).is_err());
    }

    #[test]
    fn dephasing_channel_examples() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus =
            DensityMatrix::from_pure(vec![1], &[C64::new(s, 0.0), C64::new(s, 0.0)]).unwrap();

        let same = apply_dephasing_channel(&plus, 0.0).unwrap();
        assert!(crate::dense::max_abs_diff(same.matrix(), plus.matrix()) < 1e-15);

        let dead = apply_dephasing_channel(&plus, 0.5).unwrap();
        assert!(dead.entry(0, 1).norm() < 1e-15);

        let partial = apply_dephasing_channel(&plus, 0.1).unwrap();
        let x = expectation(&partial, &PauliString::single(1, Axis::X).unwrap()).unwrap();
        assert!((x - 0.8).abs() < 1e-12);
        partial.validate_psd().unwrap();
    }

    #[test]
    fn density_evolution_matches_pure_evolution() {
        let h = build_xy_hamiltonian(&config(4)).unwrap();
        let psi0 = prepare_neel(4).unwrap();
        let rho0 = DensityMatrix::from_pure(vec![1, 2, 3, 4], psi0.amplitudes()).unwrap();
        let t = 1.3;
        let psi_t = evolve(&psi0, &h, t).unwrap();
        let rho_t = evolve_density(&rho0, &h, t).unwrap();
        let expect = DensityMatrix::from_pure(vec![1, 2, 3, 4], psi_t.amplitudes()).unwrap();
        assert!(crate::dense::max_abs_diff(rho_t.matrix(), expect.matrix()) < 1e-10);
    }

    #[test]
    fn trotterized_dephasing_contracts_coherences() {
        let h = build_xy_hamiltonian(&config(3)).unwrap();
        let psi0 = prepare_tilted_ferromagnet(3, 0.5 * std::f64::consts::PI).unwrap();
        let rho0 = DensityMatrix::from_pure(vec![1, 2, 3], psi0.amplitudes()).unwrap();
        let noisy = evolve_density_with_dephasing(&rho0, &h, 2.0, 0.05, 0.1).unwrap();
        noisy.validate_psd().unwrap();
        let clean = evolve_density(&rho0, &h, 2.0).unwrap();
        assert!(noisy.purity() < clean.purity() - 1e-3);
        // reduces to the exact path when γ = 0
        let off = evolve_density_with_dephasing(&rho0, &h, 2.0, 0.0, 0.1).unwrap();
        assert!(crate::dense::max_abs_diff(off.matrix(), clean.matrix()) < 1e-10);
    }

    #[test]
    fn channels_preserve_subsystem_reduction_consistency() {
        // reducing after the channel equals applying the channel to the
        // reduction when the flipped sites are inside the kept block
        let neel = prepare_neel(4).unwrap();
        let rho = DensityMatrix::from_pure(vec![1, 2, 3, 4], neel.amplitudes()).unwrap();
        let rates = [0.1, 0.2, 0.0, 0.0];
        let noisy = apply_bitflip_channel(&rho, &rates).unwrap();
        let keep = SubsystemSpec::new(vec![1, 2]).unwrap();
        let reduced_after = noisy.partial_trace(&keep).unwrap();
        let reduced_before = partial_trace(&neel, &keep).unwrap();
        let noisy_reduced = apply_bitflip_channel(&reduced_before, &rates[..2]).unwrap();
        assert!(
            crate::dense::max_abs_diff(reduced_after.matrix(), noisy_reduced.matrix()) < 1e-12
        );
    }
}
