//! States, density matrices, subsystems and Pauli observables.
//!
//! Conventions used everywhere in the crate:
//!
//! * Sites are numbered 1..=N. Site 1 is the **most significant bit** of a
//!   computational-basis index.
//! * Bit value 0 is spin up (the +1 eigenstate of σ^z), bit value 1 is spin
//!   down.
//! * Subsystem magnetizations S_A^μ = Σ_{j∈A} σ_j^μ have integer eigenvalues
//!   spaced by 2 (twice the conventional magnetization).

use std::collections::BTreeMap;
use std::fmt;

use crate::dense;
use crate::mat2::Mat2;
use crate::{C64, CMat, Error, MAX_QUBITS, Result};

/// Norm / trace / Hermiticity tolerance for validated quantum objects.
pub const STATE_TOL: f64 = 1e-12;
/// Eigenvalue floor for the positive-semidefiniteness check.
pub const PSD_FLOOR: f64 = -1e-10;

/// Measurement axis of a single-site Pauli operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    /// The corresponding 2×2 Pauli matrix.
    pub fn matrix(self) -> Mat2 {
        match self {
            Axis::X => Mat2::pauli_x(),
            Axis::Y => Mat2::pauli_y(),
            Axis::Z => Mat2::pauli_z(),
        }
    }

    /// Unitary `r` with `r σ^z r† = σ^μ`; maps the computational basis to the
    /// eigenbasis of this axis (`r|0⟩` is the +1 eigenstate).
    pub fn basis_rotation(self) -> Mat2 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let c = |re: f64, im: f64| C64::new(re, im);
        match self {
            Axis::Z => Mat2::identity(),
            Axis::X => Mat2::new(c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)),
            Axis::Y => Mat2::new(c(s, 0.0), c(s, 0.0), c(0.0, s), c(0.0, -s)),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::X => write!(f, "x"),
            Axis::Y => write!(f, "y"),
            Axis::Z => write!(f, "z"),
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(Error::input(format!("unknown axis `{other}`"))),
        }
    }
}

/// Bit of `site` (1-based) in the basis index `index` of an `n`-qubit register.
#[inline]
pub fn site_bit(index: usize, n_qubits: usize, site: usize) -> u8 {
    ((index >> (n_qubits - site)) & 1) as u8
}

/// Eigenvalues of S_A^μ on `n_a` sites, ascending: −N_A, −N_A+2, …, N_A.
pub fn magnetization_outcomes(n_a: usize) -> Vec<i64> {
    (0..=n_a).map(|m| -(n_a as i64) + 2 * m as i64).collect()
}

fn check_capacity(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 {
        return Err(Error::input("system must have at least one qubit"));
    }
    if n_qubits > MAX_QUBITS {
        return Err(Error::Capacity {
            requested: n_qubits,
            cap: MAX_QUBITS,
        });
    }
    Ok(())
}

/// Pure state of `n_qubits` qubits: 2^n complex amplitudes with unit norm.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// Validates the dimension and the unit-norm invariant.
    pub fn new(n_qubits: usize, amps: Vec<C64>) -> Result<Self> {
        check_capacity(n_qubits)?;
        if amps.len() != 1 << n_qubits {
            return Err(Error::input(format!(
                "expected {} amplitudes for {} qubits, got {}",
                1usize << n_qubits,
                n_qubits,
                amps.len()
            )));
        }
        let norm_sq: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > STATE_TOL {
            return Err(Error::input(format!(
                "state norm² deviates from 1 by {:.3e}",
                (norm_sq - 1.0).abs()
            )));
        }
        Ok(StateVector { n_qubits, amps })
    }

    /// The computational basis state |index⟩.
    pub fn computational_basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_capacity(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::input(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        Ok(StateVector { n_qubits, amps })
    }

    /// Product state ⊗_j (kets[j][0]|0⟩ + kets[j][1]|1⟩); site 1 first.
    /// Each single-site ket must be normalized.
    pub fn from_site_kets(kets: &[[C64; 2]]) -> Result<Self> {
        check_capacity(kets.len())?;
        let n = kets.len();
        let mut amps = vec![C64::new(1.0, 0.0)];
        for ket in kets {
            let mut next = Vec::with_capacity(amps.len() * 2);
            for a in &amps {
                next.push(a * ket[0]);
                next.push(a * ket[1]);
            }
            amps = next;
        }
        StateVector::new(n, amps)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Bit of `site` (1-based) in basis index `index`.
    pub fn bit(&self, index: usize, site: usize) -> u8 {
        site_bit(index, self.n_qubits, site)
    }
}

/// Strictly increasing list of 1-based site indices.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SubsystemSpec {
    sites: Vec<usize>,
}

impl SubsystemSpec {
    pub fn new(sites: Vec<usize>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::input("subsystem must be non-empty"));
        }
        if sites[0] == 0 {
            return Err(Error::input("site indices are 1-based"));
        }
        if !sites.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::input(
                "subsystem sites must be strictly increasing with no duplicates",
            ));
        }
        Ok(SubsystemSpec { sites })
    }

    /// Contiguous window `first..=last`.
    pub fn contiguous(first: usize, last: usize) -> Result<Self> {
        if first == 0 || last < first {
            return Err(Error::input(format!(
                "invalid contiguous subsystem {first}:{last}"
            )));
        }
        SubsystemSpec::new((first..=last).collect())
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn max_site(&self) -> usize {
        *self.sites.last().unwrap()
    }

    pub fn validate_within(&self, n_qubits: usize) -> Result<()> {
        if self.max_site() > n_qubits {
            return Err(Error::input(format!(
                "subsystem site {} outside system of {} qubits",
                self.max_site(),
                n_qubits
            )));
        }
        Ok(())
    }
}

impl fmt::Display for SubsystemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let strs: Vec<String> = self.sites.iter().map(|s| s.to_string()).collect();
        write!(f, "{}", strs.join(","))
    }
}

/// Product of single-site Pauli operators; identity on unlisted sites.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PauliString {
    terms: BTreeMap<usize, Axis>,
}

impl PauliString {
    pub fn identity() -> Self {
        PauliString {
            terms: BTreeMap::new(),
        }
    }

    pub fn single(site: usize, axis: Axis) -> Result<Self> {
        PauliString::new([(site, axis)])
    }

    pub fn new(terms: impl IntoIterator<Item = (usize, Axis)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (site, axis) in terms {
            if site == 0 {
                return Err(Error::input("site indices are 1-based"));
            }
            if map.insert(site, axis).is_some() {
                return Err(Error::input(format!("duplicate site {site} in Pauli string")));
            }
        }
        Ok(PauliString { terms: map })
    }

    /// Uniform-axis string on every site of a subsystem.
    pub fn uniform(subsystem: &SubsystemSpec, axis: Axis) -> Self {
        PauliString {
            terms: subsystem.sites().iter().map(|&s| (s, axis)).collect(),
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, Axis)> + '_ {
        self.terms.iter().map(|(&s, &a)| (s, a))
    }

    pub fn weight(&self) -> usize {
        self.terms.len()
    }

    pub fn is_identity(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_site(&self) -> Option<usize> {
        self.terms.keys().next_back().copied()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "I");
        }
        let strs: Vec<String> = self
            .terms
            .iter()
            .map(|(s, a)| format!("s{s}^{a}"))
            .collect();
        write!(f, "{}", strs.join(" "))
    }
}

/// Density operator on an ordered subset of sites.
///
/// Hermiticity and unit trace are enforced at construction; positivity is
/// checked separately by [`DensityMatrix::validate_psd`] since it costs an
/// eigendecomposition.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    sites: Vec<usize>,
    mat: CMat,
}

impl DensityMatrix {
    pub fn new(sites: Vec<usize>, mat: CMat) -> Result<Self> {
        let spec = SubsystemSpec::new(sites)?;
        let sites = spec.sites().to_vec();
        let dim = 1usize << sites.len();
        if mat.nrows() != dim || mat.ncols() != dim {
            return Err(Error::input(format!(
                "density matrix on {} sites must be {dim}×{dim}, got {}×{}",
                sites.len(),
                mat.nrows(),
                mat.ncols()
            )));
        }
        let herm = dense::hermiticity_defect(&mat);
        if herm > STATE_TOL {
            return Err(Error::input(format!(
                "density matrix deviates from Hermiticity by {herm:.3e}"
            )));
        }
        let tr = dense::trace(&mat);
        if (tr - C64::new(1.0, 0.0)).norm() > STATE_TOL {
            return Err(Error::input(format!(
                "density matrix trace deviates from 1 by {:.3e}",
                (tr - C64::new(1.0, 0.0)).norm()
            )));
        }
        Ok(DensityMatrix { sites, mat })
    }

    /// |ψ⟩⟨ψ| of a normalized ket on the given sites.
    pub fn from_pure(sites: Vec<usize>, ket: &[C64]) -> Result<Self> {
        let dim = ket.len();
        let mat = CMat::from_fn(dim, dim, |i, j| ket[i] * ket[j].conj());
        DensityMatrix::new(sites, mat)
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.mat[(i, j)]
    }

    /// Position of a 1-based site within this operator's tensor ordering.
    pub fn site_position(&self, site: usize) -> Option<usize> {
        self.sites.iter().position(|&s| s == site)
    }

    /// Tr ρ²
    pub fn purity(&self) -> f64 {
        let mut acc = 0.0;
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                acc += self.mat[(i, j)].norm_sqr();
            }
        }
        acc
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let evs = self
            .mat
            .self_adjoint_eigenvalues(faer::Side::Lower)
            .expect("eigenvalue computation failed");
        evs.into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Checks eigenvalues ≥ −1e-10.
    pub fn validate_psd(&self) -> Result<()> {
        let min = self.min_eigenvalue();
        if min < PSD_FLOOR {
            return Err(Error::input(format!(
                "density matrix has negative eigenvalue {min:.3e}"
            )));
        }
        Ok(())
    }

    /// Reduce onto `keep`, tracing out the remaining sites of this operator.
    pub fn partial_trace(&self, keep: &SubsystemSpec) -> Result<DensityMatrix> {
        let keep_pos: Vec<usize> = keep
            .sites()
            .iter()
            .map(|&s| {
                self.site_position(s).ok_or_else(|| {
                    Error::input(format!("site {s} not part of this density matrix"))
                })
            })
            .collect::<Result<_>>()?;
        let n = self.n_sites();
        let env_pos: Vec<usize> = (0..n).filter(|p| !keep_pos.contains(p)).collect();
        let nk = keep_pos.len();
        let dim_k = 1usize << nk;
        let dim_e = 1usize << env_pos.len();
        let assemble = |sub: usize, env: usize| -> usize {
            let mut k = 0usize;
            for (t, &p) in keep_pos.iter().enumerate() {
                k |= ((sub >> (nk - 1 - t)) & 1) << dense::pos_shift(n, p);
            }
            for (t, &p) in env_pos.iter().enumerate() {
                k |= ((env >> (env_pos.len() - 1 - t)) & 1) << dense::pos_shift(n, p);
            }
            k
        };
        let mut out = CMat::zeros(dim_k, dim_k);
        for e in 0..dim_e {
            for a in 0..dim_k {
                let ka = assemble(a, e);
                for b in 0..dim_k {
                    let kb = assemble(b, e);
                    out[(a, b)] += self.mat[(ka, kb)];
                }
            }
        }
        DensityMatrix::new(keep.sites().to_vec(), out)
    }
}

/// Reduced density matrix of a pure state on the listed sites.
pub fn partial_trace(state: &StateVector, subsystem: &SubsystemSpec) -> Result<DensityMatrix> {
    let n = state.n_qubits();
    subsystem.validate_within(n)?;
    let a_sites = subsystem.sites();
    let na = a_sites.len();
    let dim_a = 1usize << na;
    let a_shifts: Vec<usize> = a_sites.iter().map(|&s| n - s).collect();
    let env_shifts: Vec<usize> = (1..=n)
        .filter(|s| !a_sites.contains(s))
        .map(|s| n - s)
        .collect();
    let ne = env_shifts.len();
    let dim_e = 1usize << ne;
    let amps = state.amplitudes();

    let mut rho = CMat::zeros(dim_a, dim_a);
    let mut block = vec![C64::new(0.0, 0.0); dim_a];
    for e in 0..dim_e {
        let mut base = 0usize;
        for (t, &sh) in env_shifts.iter().enumerate() {
            base |= ((e >> (ne - 1 - t)) & 1) << sh;
        }
        for (a, slot) in block.iter_mut().enumerate() {
            let mut k = base;
            for (t, &sh) in a_shifts.iter().enumerate() {
                k |= ((a >> (na - 1 - t)) & 1) << sh;
            }
            *slot = amps[k];
        }
        for i in 0..dim_a {
            let vi = block[i];
            if vi.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..dim_a {
                rho[(i, j)] += vi * block[j].conj();
            }
        }
    }
    DensityMatrix::new(a_sites.to_vec(), rho)
}

/// cos(α)·I + i·sin(α)·σ^μ, the single-site factor of e^{iα S_A^μ}.
pub fn single_qubit_phase(axis: Axis, alpha: f64) -> Mat2 {
    let c = C64::new(alpha.cos(), 0.0);
    let is = C64::new(0.0, alpha.sin());
    Mat2::identity().scale(c).add(&axis.matrix().scale(is))
}

/// Projector onto the q-eigenspace of S_A^μ on `n_a` sites.
///
/// `q` must lie in {−N_A, −N_A+2, …, N_A}.
pub fn magnetization_projector(n_a: usize, axis: Axis, q: i64) -> Result<CMat> {
    check_capacity(n_a)?;
    if q.abs() > n_a as i64 || (q - n_a as i64) % 2 != 0 {
        return Err(Error::input(format!(
            "q={q} is not an eigenvalue of a {n_a}-site magnetization"
        )));
    }
    let dim = 1usize << n_a;
    let mut proj = CMat::zeros(dim, dim);
    for k in 0..dim {
        let mag = n_a as i64 - 2 * (k.count_ones() as i64);
        if mag == q {
            proj[(k, k)] = C64::new(1.0, 0.0);
        }
    }
    if axis != Axis::Z {
        let r = axis.basis_rotation();
        let r_dag = r.adjoint();
        for pos in 0..n_a {
            dense::apply_mat2_left(&mut proj, n_a, pos, &r);
            dense::apply_mat2_right(&mut proj, n_a, pos, &r_dag);
        }
    }
    Ok(proj)
}

/// Tr(ρ P) for a Pauli string supported on ρ's sites.
pub fn expectation(rho: &DensityMatrix, observable: &PauliString) -> Result<f64> {
    let n = rho.n_sites();
    // positions and axes of the string within ρ's tensor ordering
    let mut flip_mask = 0usize;
    let mut z_mask = 0usize;
    let mut y_mask = 0usize;
    for (site, axis) in observable.terms() {
        let pos = rho
            .site_position(site)
            .ok_or_else(|| Error::input(format!("observable site {site} not in density matrix")))?;
        let bit = 1usize << dense::pos_shift(n, pos);
        match axis {
            Axis::Z => z_mask |= bit,
            Axis::X => flip_mask |= bit,
            Axis::Y => {
                flip_mask |= bit;
                y_mask |= bit;
            }
        }
    }
    // Tr(ρ P) = Σ_a ρ[a][a ^ flip] · phase(a), with P|a⟩ = phase(a)|a ^ flip⟩
    let dim = rho.dim();
    let mut acc = C64::new(0.0, 0.0);
    for a in 0..dim {
        // σ^z: sign per set bit; σ^y: |0⟩→i|1⟩, |1⟩→−i|0⟩
        let z_sign = 1 - 2 * (((a & z_mask).count_ones() & 1) as i64);
        let y_down = (a & y_mask).count_ones() as i64; // sites where σ^y sees bit 1
        let y_up = (y_mask.count_ones() as i64) - y_down;
        // phase = (+i)^{y_up} · (−i)^{y_down}
        let quarter_turns = ((y_up - y_down).rem_euclid(4)) as u32;
        let y_phase = match quarter_turns {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        };
        acc += rho.entry(a, a ^ flip_mask) * y_phase * C64::new(z_sign as f64, 0.0);
    }
    debug_assert!(
        acc.im.abs() < 1e-9,
        "expectation of a Hermitian string came out complex: {acc}"
    );
    Ok(acc.re)
}
