//! Haar-random single-qubit unitaries and simulated randomized-measurement
//! data acquisition.
//!
//! The acquisition protocol is fixed: apply independent per-site random
//! rotations `U = ⊗_i u_i`, then projectively measure every site in the
//! computational z-basis. Each record `r` holds the applied rotations and
//! `N_M` measured bitstrings; every record is generated from its own RNG
//! stream derived deterministically from the master seed and `r`, so records
//! can be produced in parallel and are reproducible bit for bit.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::mat2::Mat2;
use crate::spin::{DensityMatrix, StateVector, site_bit};
use crate::{C64, Error, Result, dense};

/// Unitarity tolerance for stored local rotations.
pub const UNITARY_TOL: f64 = 1e-12;
/// Tolerance for the ZYZ angle ↔ matrix round trip (up to global phase).
pub const ZYZ_TOL: f64 = 1e-10;

/// A single-qubit rotation together with optional ZYZ Euler angles.
///
/// The matrix is authoritative; the angles are a derived, gauge-dependent
/// convenience for pulse-level descriptions.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalUnitary {
    mat: Mat2,
    zyz: Option<(f64, f64, f64)>,
}

impl LocalUnitary {
    pub fn new(mat: Mat2) -> Result<Self> {
        let defect = mat.unitarity_defect();
        if defect > UNITARY_TOL {
            return Err(Error::input(format!(
                "matrix deviates from unitarity by {defect:.3e}"
            )));
        }
        Ok(LocalUnitary { mat, zyz: None })
    }

    /// Attach precomputed angles, checking they reproduce the matrix.
    pub fn with_angles(mat: Mat2, z1: f64, y: f64, z2: f64) -> Result<Self> {
        let u = LocalUnitary::new(mat)?;
        let recon = zyz_matrix(z1, y, z2);
        let dist = phase_aligned_distance(&mat, &recon);
        if dist > ZYZ_TOL {
            return Err(Error::input(format!(
                "ZYZ angles reconstruct the matrix only to {dist:.3e}"
            )));
        }
        Ok(LocalUnitary {
            zyz: Some((z1, y, z2)),
            ..u
        })
    }

    pub fn identity() -> Self {
        LocalUnitary {
            mat: Mat2::identity(),
            zyz: Some((0.0, 0.0, 0.0)),
        }
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.mat
    }

    pub fn stored_angles(&self) -> Option<(f64, f64, f64)> {
        self.zyz
    }

    /// ZYZ angles, computing them on demand.
    pub fn angles(&self) -> (f64, f64, f64) {
        self.zyz
            .unwrap_or_else(|| zyz_decompose(&self.mat).expect("stored unitary must decompose"))
    }

    /// Same matrix with the angles filled in.
    pub fn with_computed_angles(mut self) -> Self {
        if self.zyz.is_none() {
            self.zyz = Some(zyz_decompose(&self.mat).expect("stored unitary must decompose"));
        }
        self
    }
}

/// Rz(z1) · Ry(y) · Rz(z2) with Rz(a) = diag(e^{−ia/2}, e^{ia/2}).
pub fn zyz_matrix(z1: f64, y: f64, z2: f64) -> Mat2 {
    let (hc, hs) = ((y / 2.0).cos(), (y / 2.0).sin());
    let e = |phase: f64| C64::from_polar(1.0, phase);
    Mat2::new(
        e(-(z1 + z2) / 2.0) * hc,
        -e(-(z1 - z2) / 2.0) * hs,
        e((z1 - z2) / 2.0) * hs,
        e((z1 + z2) / 2.0) * hc,
    )
}

/// Max-abs distance between `a` and `b` minimized over a global phase.
pub fn phase_aligned_distance(a: &Mat2, b: &Mat2) -> f64 {
    let overlap: C64 = b
        .e
        .iter()
        .zip(a.e.iter())
        .map(|(bi, ai)| bi.conj() * ai)
        .sum();
    if overlap.norm() < 1e-300 {
        return a.max_abs_diff(b);
    }
    let phase = overlap / overlap.norm();
    a.max_abs_diff(&b.scale(phase))
}

/// ZYZ Euler angles of a unitary: `Rz(z1)·Ry(y)·Rz(z2) = e^{iφ} u` with
/// `y ∈ [0, π]`.
///
/// At y = 0 (y = π) only z1+z2 (z1−z2) is determined; the free combination is
/// gauged to zero.
pub fn zyz_decompose(u: &Mat2) -> Result<(f64, f64, f64)> {
    let defect = u.unitarity_defect();
    if defect > UNITARY_TOL {
        return Err(Error::input(format!(
            "cannot decompose a non-unitary matrix (defect {defect:.3e})"
        )));
    }
    // strip the global phase: v = e^{−iφ}u ∈ SU(2)
    let det = u.det();
    let phi = det.arg() / 2.0;
    let v = u.scale(C64::from_polar(1.0, -phi));
    let (v00, v10, v11) = (v.e[0], v.e[2], v.e[3]);
    let y = 2.0 * v10.norm().atan2(v00.norm());
    const EDGE: f64 = 1e-12;
    let (z1, z2) = if v10.norm() < EDGE {
        let s = v11.arg();
        (s, s)
    } else if v00.norm() < EDGE {
        let d = v10.arg();
        (d, -d)
    } else {
        let s = v11.arg();
        let d = v10.arg();
        (s + d, s - d)
    };
    Ok((z1, y, z2))
}

fn standard_normal_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    // Box–Muller; 1−u keeps the log argument in (0, 1]
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    let r = (-2.0 * u1.ln()).sqrt();
    let phi = 2.0 * std::f64::consts::PI * u2;
    (r * phi.cos(), r * phi.sin())
}

fn complex_standard_normal(rng: &mut ChaCha8Rng) -> C64 {
    let (re, im) = standard_normal_pair(rng);
    C64::new(
        re * std::f64::consts::FRAC_1_SQRT_2,
        im * std::f64::consts::FRAC_1_SQRT_2,
    )
}

/// Draw a Haar-distributed 2×2 unitary (CUE).
///
/// QR factorization of a complex standard-Gaussian matrix with the diagonal of
/// R made real and positive (the Mezzadri phase convention); Gram–Schmidt on
/// the columns produces that decomposition directly.
pub fn sample_cue_unitary(rng: &mut ChaCha8Rng) -> LocalUnitary {
    loop {
        let z00 = complex_standard_normal(rng);
        let z10 = complex_standard_normal(rng);
        let z01 = complex_standard_normal(rng);
        let z11 = complex_standard_normal(rng);
        let r11 = (z00.norm_sqr() + z10.norm_sqr()).sqrt();
        if r11 < 1e-12 {
            continue;
        }
        let q00 = z00 / r11;
        let q10 = z10 / r11;
        let proj = q00.conj() * z01 + q10.conj() * z11;
        let w0 = z01 - proj * q00;
        let w1 = z11 - proj * q10;
        let r22 = (w0.norm_sqr() + w1.norm_sqr()).sqrt();
        if r22 < 1e-12 {
            continue;
        }
        let mat = Mat2::new(q00, w0 / r22, q10, w1 / r22);
        let (z1, y, z2) = zyz_decompose(&mat).expect("Gram–Schmidt output is unitary");
        return LocalUnitary {
            mat,
            zyz: Some((z1, y, z2)),
        };
    }
}

/// Derive the RNG stream of record `record_index` from the master seed.
///
/// Counter construction: two splitmix64 chains, the first whitening the seed,
/// the second expanding `whitened ⊕ index` into a 32-byte ChaCha8 key. Records
/// are independent of generation order.
pub fn record_rng(master_seed: u64, record_index: u64) -> ChaCha8Rng {
    fn splitmix64(state: &mut u64) -> u64 {
        *state = state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = *state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }
    let mut seed_chain = master_seed;
    let whitened = splitmix64(&mut seed_chain);
    let mut key_chain = whitened ^ record_index;
    let mut key = [0u8; 32];
    for chunk in key.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut key_chain).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Metadata of a randomized-measurement dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetMeta {
    pub n_qubits: usize,
    pub n_unitaries: usize,
    pub shots_per_unitary: usize,
    pub seed: u64,
    pub state_descriptor: String,
    pub time_ms: f64,
}

/// One random-rotation setting: per-site unitaries plus the measured shots.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetRecord {
    /// 1-based record number.
    pub index: usize,
    pub unitaries: Vec<LocalUnitary>,
    /// Each shot is one bit (0 = ↑, 1 = ↓) per site, site 1 first.
    pub shots: Vec<Vec<u8>>,
}

/// Full randomized-measurement dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomizedDataset {
    pub meta: DatasetMeta,
    pub records: Vec<DatasetRecord>,
}

impl RandomizedDataset {
    /// Check the structural invariants (record count, shot counts, lengths,
    /// unitarity of every stored rotation).
    pub fn validate(&self) -> Result<()> {
        if self.records.len() != self.meta.n_unitaries {
            return Err(Error::input(format!(
                "dataset holds {} records but metadata says {}",
                self.records.len(),
                self.meta.n_unitaries
            )));
        }
        for rec in &self.records {
            if rec.unitaries.len() != self.meta.n_qubits {
                return Err(Error::input(format!(
                    "record {} has {} unitaries for {} qubits",
                    rec.index,
                    rec.unitaries.len(),
                    self.meta.n_qubits
                )));
            }
            if rec.shots.len() != self.meta.shots_per_unitary {
                return Err(Error::input(format!(
                    "record {} has {} shots, expected {}",
                    rec.index,
                    rec.shots.len(),
                    self.meta.shots_per_unitary
                )));
            }
            for shot in &rec.shots {
                if shot.len() != self.meta.n_qubits {
                    return Err(Error::input(format!(
                        "record {} contains a bitstring of length {}",
                        rec.index,
                        shot.len()
                    )));
                }
                if shot.iter().any(|&b| b > 1) {
                    return Err(Error::input("bitstrings must contain only 0/1"));
                }
            }
            for u in &rec.unitaries {
                if !u.matrix().is_unitary(UNITARY_TOL) {
                    return Err(Error::input(format!(
                        "record {} stores a non-unitary rotation",
                        rec.index
                    )));
                }
            }
        }
        Ok(())
    }
}

/// State being measured: a pure state or a full-system density matrix.
#[derive(Clone, Copy, Debug)]
pub enum SourceState<'a> {
    Pure(&'a StateVector),
    Mixed(&'a DensityMatrix),
}

impl<'a> SourceState<'a> {
    fn n_qubits(&self) -> Result<usize> {
        match self {
            SourceState::Pure(s) => Ok(s.n_qubits()),
            SourceState::Mixed(rho) => {
                let n = rho.n_sites();
                let full: Vec<usize> = (1..=n).collect();
                if rho.sites() != full.as_slice() {
                    return Err(Error::input(
                        "mixed-state acquisition needs a full-system density matrix (sites 1..=N)",
                    ));
                }
                Ok(n)
            }
        }
    }

    /// Born probabilities after rotating by the per-site unitaries.
    fn rotated_probabilities(&self, unitaries: &[LocalUnitary]) -> Vec<f64> {
        match self {
            SourceState::Pure(state) => {
                let n = state.n_qubits();
                let mut amps = state.amplitudes().to_vec();
                for (pos, u) in unitaries.iter().enumerate() {
                    dense::apply_mat2_to_vec(&mut amps, n, pos, u.matrix());
                }
                amps.iter().map(|a| a.norm_sqr()).collect()
            }
            SourceState::Mixed(rho) => {
                let n = rho.n_sites();
                let mut m = rho.matrix().clone();
                for (pos, u) in unitaries.iter().enumerate() {
                    dense::apply_mat2_left(&mut m, n, pos, u.matrix());
                    dense::apply_mat2_right(&mut m, n, pos, &u.matrix().adjoint());
                }
                (0..m.nrows()).map(|k| m[(k, k)].re.max(0.0)).collect()
            }
        }
    }
}

impl<'a> From<&'a StateVector> for SourceState<'a> {
    fn from(s: &'a StateVector) -> Self {
        SourceState::Pure(s)
    }
}

impl<'a> From<&'a DensityMatrix> for SourceState<'a> {
    fn from(r: &'a DensityMatrix) -> Self {
        SourceState::Mixed(r)
    }
}

/// Acquire a dataset with CUE rotations.
pub fn acquire_dataset(
    state: SourceState<'_>,
    n_unitaries: usize,
    shots_per_unitary: usize,
    seed: u64,
) -> Result<RandomizedDataset> {
    acquire_dataset_with(state, n_unitaries, shots_per_unitary, seed, &|rng| {
        sample_cue_unitary(rng)
    })
}

/// Acquire a dataset with a caller-supplied rotation sampler.
///
/// The sampler draws one rotation per site per record from the record's RNG
/// stream; the default is [`sample_cue_unitary`]. Forcing a fixed rotation
/// (e.g. the identity) keeps the shot sampling exercised while making the
/// outcome distribution predictable.
pub fn acquire_dataset_with<F>(
    state: SourceState<'_>,
    n_unitaries: usize,
    shots_per_unitary: usize,
    seed: u64,
    sample_rotation: &F,
) -> Result<RandomizedDataset>
where
    F: Fn(&mut ChaCha8Rng) -> LocalUnitary + Sync,
{
    if n_unitaries == 0 || shots_per_unitary == 0 {
        return Err(Error::input("need at least one unitary and one shot"));
    }
    let n = state.n_qubits()?;
    let records: Vec<DatasetRecord> = (1..=n_unitaries)
        .into_par_iter()
        .map(|r| {
            let mut rng = record_rng(seed, r as u64);
            let unitaries: Vec<LocalUnitary> = (0..n).map(|_| sample_rotation(&mut rng)).collect();
            let probs = state.rotated_probabilities(&unitaries);
            let mut cumulative = Vec::with_capacity(probs.len());
            let mut acc = 0.0;
            for p in &probs {
                acc += p;
                cumulative.push(acc);
            }
            let dim = probs.len();
            let shots: Vec<Vec<u8>> = (0..shots_per_unitary)
                .map(|_| {
                    let x: f64 = rng.random::<f64>() * acc;
                    let k = cumulative.partition_point(|&c| c <= x).min(dim - 1);
                    (1..=n).map(|site| site_bit(k, n, site)).collect()
                })
                .collect();
            DatasetRecord {
                index: r,
                unitaries,
                shots,
            }
        })
        .collect();
    Ok(RandomizedDataset {
        meta: DatasetMeta {
            n_qubits: n,
            n_unitaries,
            shots_per_unitary,
            seed,
            state_descriptor: match state {
                SourceState::Pure(_) => "pure".to_string(),
                SourceState::Mixed(_) => "mixed".to_string(),
            },
            time_ms: 0.0,
        },
        records,
    })
}

/// Histogram of up-spin counts used to characterize rotation uniformity.
///
/// For each site, counts over records how many of the `N_M` shots came out ↑;
/// ideal CUE rotations on a product state make the pooled histogram flat.
#[derive(Clone, Debug)]
pub struct UniformityHistogram {
    pub shots_per_unitary: usize,
    /// `per_site[s][m]` = number of records where site s+1 measured ↑ exactly m times.
    pub per_site: Vec<Vec<u64>>,
    /// Sum of the per-site histograms.
    pub pooled: Vec<u64>,
}

pub fn uniformity_histogram(dataset: &RandomizedDataset) -> Result<UniformityHistogram> {
    if dataset.records.is_empty() {
        return Err(Error::input("dataset has no records"));
    }
    let n = dataset.meta.n_qubits;
    let n_m = dataset.meta.shots_per_unitary;
    let mut per_site = vec![vec![0u64; n_m + 1]; n];
    for rec in &dataset.records {
        for site in 0..n {
            let ups = rec.shots.iter().filter(|shot| shot[site] == 0).count();
            per_site[site][ups] += 1;
        }
    }
    let mut pooled = vec![0u64; n_m + 1];
    for hist in &per_site {
        for (m, &c) in hist.iter().enumerate() {
            pooled[m] += c;
        }
    }
    Ok(UniformityHistogram {
        shots_per_unitary: n_m,
        per_site,
        pooled,
    })
}

impl UniformityHistogram {
    /// Chi-square test of the pooled histogram against a flat distribution.
    pub fn pooled_flatness(&self) -> Result<crate::stats::ChiSquareTest> {
        crate::stats::chi_square_uniform_test(&self.pooled)
    }
}
