//! Implementations of the pipeline subcommands.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result, anyhow, bail};
use fcshadow::dynamics;
use fcshadow::io::{self, StateFile, StateMeta};
use fcshadow::oracle::{self, ClosedFormSpec};
use fcshadow::randmeas::{self, SourceState};
use fcshadow::shadows::{self, BulkEstimate, BulkTarget, FCSCurve, PDFEstimate};
use fcshadow::spin::{Axis, DensityMatrix, PauliString, SubsystemSpec, partial_trace};
use fcshadow::stats::ErrorMethod;
use fcshadow::{C64, spin};

use crate::config::RunConfig;

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn base_meta(command: &str, config: &RunConfig) -> Vec<(String, String)> {
    vec![
        ("command".to_string(), command.to_string()),
        ("build".to_string(), io::BUILD_ID.to_string()),
        ("config".to_string(), config.to_json().to_string()),
    ]
}

/// `simulate`: prepare the initial state, evolve it, write one state file per
/// requested time.
///
/// The output is a pure state unless bit-flip rates or dephasing are
/// configured, in which case the full-system density matrix is written.
pub fn run_simulate(config: &RunConfig, out: &str) -> Result<Vec<PathBuf>> {
    config.system.validate()?;
    config.state.validate(config.system.n_qubits)?;
    let times = &config.system.times_ms;
    if times.is_empty() {
        bail!("no evolution times configured (set --times-ms)");
    }
    if times.len() > 1 && !out.contains("{t}") {
        bail!("{} times requested: --out must contain a {{t}} placeholder", times.len());
    }
    let n = config.system.n_qubits;
    let psi0 = config.state.prepare(n)?;
    let mixed = config.state.bitflip_rates.is_some() || config.noise.dephasing_gamma_per_ms > 0.0;
    let needs_evolution = times.iter().any(|&t| t > 0.0);
    let hamiltonian = if needs_evolution {
        Some(dynamics::build_xy_hamiltonian(&config.system)?)
    } else {
        None
    };
    let descriptor = config.state.descriptor();
    let mut written = Vec::new();
    for &t_ms in times {
        let meta = StateMeta {
            n_qubits: n,
            time_ms: t_ms,
            descriptor: descriptor.clone(),
            config: Some(config.to_json()),
        };
        let file = if mixed {
            let mut rho = DensityMatrix::from_pure((1..=n).collect(), psi0.amplitudes())?;
            if let Some(rates) = &config.state.bitflip_rates {
                rho = dynamics::apply_bitflip_channel(&rho, rates)?;
            }
            if t_ms > 0.0 {
                let h = hamiltonian.as_ref().expect("built above");
                rho = if config.noise.dephasing_gamma_per_ms > 0.0 {
                    dynamics::evolve_density_with_dephasing(
                        &rho,
                        h,
                        t_ms,
                        config.noise.dephasing_gamma_per_ms,
                        config.noise.dephasing_dt_ms,
                    )?
                } else {
                    dynamics::evolve_density(&rho, h, t_ms)?
                };
            }
            StateFile::Density { meta, rho }
        } else {
            let state = if t_ms > 0.0 {
                dynamics::evolve(&psi0, hamiltonian.as_ref().expect("built above"), t_ms)?
            } else {
                psi0.clone()
            };
            StateFile::Pure { meta, state }
        };
        let path = PathBuf::from(out.replace("{t}", &fmt(t_ms)));
        io::write_state(&path, &file)?;
        written.push(path);
    }
    Ok(written)
}

/// `acquire`: read a state file and simulate the randomized-measurement run.
pub fn run_acquire(config: &RunConfig, state_path: &Path, out: &Path) -> Result<()> {
    let file = io::read_state(state_path)
        .with_context(|| format!("reading state {}", state_path.display()))?;
    let acq = &config.acquisition;
    if acq.n_u == 0 || acq.n_m == 0 {
        bail!("need at least one unitary and one shot");
    }
    let mut dataset = match &file {
        StateFile::Pure { state, .. } => {
            randmeas::acquire_dataset(SourceState::Pure(state), acq.n_u, acq.n_m, acq.seed)?
        }
        StateFile::Density { rho, .. } => {
            randmeas::acquire_dataset(SourceState::Mixed(rho), acq.n_u, acq.n_m, acq.seed)?
        }
    };
    dataset.meta.state_descriptor = file.meta().descriptor.clone();
    dataset.meta.time_ms = file.meta().time_ms;
    io::write_dataset(out, &dataset)?;
    Ok(())
}

/// Analysis targets of `estimate` and `oracle`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    Fcs,
    Pdf,
    Moments,
    Rates,
}

impl std::str::FromStr for Target {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fcs" => Ok(Target::Fcs),
            "pdf" => Ok(Target::Pdf),
            "moments" => Ok(Target::Moments),
            "rates" => Ok(Target::Rates),
            other => bail!("unknown target `{other}` (expected fcs|pdf|moments|rates)"),
        }
    }
}

fn analysis_axis(config: &RunConfig) -> Result<Axis> {
    config
        .analysis
        .axis
        .parse::<Axis>()
        .map_err(|e| anyhow!("{e}"))
}

fn analysis_grid(config: &RunConfig, n_a: usize) -> Vec<f64> {
    let points = config.analysis.grid_points.max(2);
    let top = if n_a.is_multiple_of(2) {
        std::f64::consts::PI
    } else {
        2.0 * std::f64::consts::PI
    };
    (0..points)
        .map(|k| top * k as f64 / (points - 1) as f64)
        .collect()
}

fn curve_meta(curve: &FCSCurve, dataset_time_ms: f64) -> Vec<(String, String)> {
    vec![
        ("kind".to_string(), "fcs".to_string()),
        ("axis".to_string(), curve.axis.to_string()),
        ("subsystem".to_string(), curve.subsystem.to_string()),
        ("time_ms".to_string(), fmt(dataset_time_ms)),
        ("n_unitaries".to_string(), curve.n_unitaries.to_string()),
    ]
}

fn pdf_meta(pdf: &PDFEstimate, dataset_time_ms: f64) -> Vec<(String, String)> {
    vec![
        ("kind".to_string(), "pdf".to_string()),
        ("axis".to_string(), pdf.axis.to_string()),
        ("subsystem".to_string(), pdf.subsystem.to_string()),
        ("time_ms".to_string(), fmt(dataset_time_ms)),
        ("n_unitaries".to_string(), pdf.n_unitaries.to_string()),
    ]
}

fn fcs_rows(curve: &FCSCurve) -> Vec<Vec<String>> {
    (0..curve.alpha_grid.len())
        .map(|k| {
            vec![
                fmt(curve.alpha_grid[k]),
                fmt(curve.values[k].re),
                fmt(curve.values[k].im),
                fmt(curve.stderr_re[k]),
                fmt(curve.stderr_im[k]),
            ]
        })
        .collect()
}

fn pdf_rows(pdf: &PDFEstimate) -> Vec<Vec<String>> {
    (0..pdf.outcomes.len())
        .map(|j| {
            vec![
                pdf.outcomes[j].to_string(),
                fmt(pdf.probabilities[j]),
                fmt(pdf.stderr[j]),
            ]
        })
        .collect()
}

/// `estimate`: shadow estimators over a dataset file.
pub fn run_estimate(
    config: &RunConfig,
    dataset_path: &Path,
    target: Target,
    out: &Path,
) -> Result<()> {
    let dataset = io::read_dataset(dataset_path)
        .with_context(|| format!("reading dataset {}", dataset_path.display()))?;
    let time_ms = dataset.meta.time_ms;
    let method = if config.analysis.jackknife {
        ErrorMethod::Jackknife
    } else {
        ErrorMethod::Stderr
    };
    let mut meta = base_meta("estimate", config);
    meta.push(("seed".to_string(), dataset.meta.seed.to_string()));
    meta.push((
        "dataset_state".to_string(),
        dataset.meta.state_descriptor.clone(),
    ));
    match target {
        Target::Fcs => {
            let axis = analysis_axis(config)?;
            let subsystem = crate::config::parse_subsystem(&config.analysis.subsystem)?;
            let grid = analysis_grid(config, subsystem.len());
            let curve = if config.analysis.bulk {
                match shadows::average_bulk_subsystems(
                    &dataset,
                    subsystem.len(),
                    axis,
                    &BulkTarget::Fcs(grid),
                )? {
                    BulkEstimate::Fcs(c) => c,
                    _ => unreachable!(),
                }
            } else {
                shadows::estimate_fcs_with(&dataset, &subsystem, axis, &grid, method)?
            };
            meta.extend(curve_meta(&curve, time_ms));
            if config.analysis.bulk {
                meta.push(("bulk_averaged".to_string(), "true".to_string()));
            }
            io::write_table(
                out,
                &meta,
                &["alpha", "re", "im", "stderr_re", "stderr_im"],
                &fcs_rows(&curve),
            )?;
        }
        Target::Pdf => {
            let axis = analysis_axis(config)?;
            let subsystem = crate::config::parse_subsystem(&config.analysis.subsystem)?;
            let pdf = if config.analysis.bulk {
                match shadows::average_bulk_subsystems(
                    &dataset,
                    subsystem.len(),
                    axis,
                    &BulkTarget::Pdf,
                )? {
                    BulkEstimate::Pdf(p) => p,
                    _ => unreachable!(),
                }
            } else {
                shadows::estimate_pdf_with(&dataset, &subsystem, axis, method)?
            };
            meta.extend(pdf_meta(&pdf, time_ms));
            if config.analysis.bulk {
                meta.push(("bulk_averaged".to_string(), "true".to_string()));
            }
            io::write_table(out, &meta, &["q", "p", "stderr"], &pdf_rows(&pdf))?;
        }
        Target::Moments => {
            let axis = analysis_axis(config)?;
            let subsystem = crate::config::parse_subsystem(&config.analysis.subsystem)?;
            let ((m1, e1), (m2, e2)) =
                shadows::estimate_magnetization_moments(&dataset, &subsystem, axis)?;
            meta.push(("kind".to_string(), "moments".to_string()));
            meta.push(("axis".to_string(), axis.to_string()));
            meta.push(("subsystem".to_string(), subsystem.to_string()));
            io::write_table(
                out,
                &meta,
                &[
                    "time_ms",
                    "mean",
                    "mean_stderr",
                    "second_moment",
                    "second_moment_stderr",
                ],
                &[vec![fmt(time_ms), fmt(m1), fmt(e1), fmt(m2), fmt(e2)]],
            )?;
        }
        Target::Rates => {
            // per-site ⟨σ_j^z⟩ from shadows, then the learned bit-flip rates
            let n = dataset.meta.n_qubits;
            let mut rows = Vec::with_capacity(n);
            for site in 1..=n {
                let (z, err) = shadows::estimate_pauli_expectation(
                    &dataset,
                    &PauliString::single(site, Axis::Z)?,
                )?;
                let rate = dynamics::estimate_bitflip_rates(&[z.clamp(-1.0, 1.0)])?[0];
                rows.push(vec![site.to_string(), fmt(z), fmt(err), fmt(rate)]);
            }
            meta.push(("kind".to_string(), "rates".to_string()));
            meta.push(("time_ms".to_string(), fmt(time_ms)));
            io::write_table(
                out,
                &meta,
                &["site", "sigma_z", "sigma_z_stderr", "rate"],
                &rows,
            )?;
        }
    }
    Ok(())
}

/// Reduce a state file onto a subsystem.
fn reduce_state(file: &StateFile, subsystem: &SubsystemSpec) -> Result<DensityMatrix> {
    match file {
        StateFile::Pure { state, .. } => Ok(partial_trace(state, subsystem)?),
        StateFile::Density { rho, .. } => Ok(rho.partial_trace(subsystem)?),
    }
}

/// Closed-form family selected on the command line.
pub struct ClosedFormArgs {
    pub family: String,
    pub n_a: usize,
    pub theta_rad: f64,
    pub sites: Option<Vec<usize>>,
    pub rates: Option<Vec<f64>>,
}

impl ClosedFormArgs {
    fn build(&self) -> Result<ClosedFormSpec> {
        let spec = match self.family.to_ascii_lowercase().as_str() {
            "neel-fcs-x" => ClosedFormSpec::NeelFcsX { n_a: self.n_a },
            "neel-pdf-x" => ClosedFormSpec::NeelPdfX { n_a: self.n_a },
            "neel-bitflip-fcs-z" => {
                let rates = self
                    .rates
                    .clone()
                    .ok_or_else(|| anyhow!("--rates required for neel-bitflip-fcs-z"))?;
                let sites = self
                    .sites
                    .clone()
                    .unwrap_or_else(|| (1..=rates.len()).collect());
                ClosedFormSpec::NeelBitflipFcsZ { sites, rates }
            }
            "tilted-fcs-z" => ClosedFormSpec::TiltedFcsZ {
                n_a: self.n_a,
                theta: self.theta_rad,
            },
            "tilted-fcs-x" => ClosedFormSpec::TiltedFcsX {
                n_a: self.n_a,
                theta: self.theta_rad,
            },
            "tilted-pdf-z-halfpi" => ClosedFormSpec::TiltedPdfZHalfPi { n_a: self.n_a },
            "parity-z" => ClosedFormSpec::Parity {
                axis: Axis::Z,
                theta: self.theta_rad,
                n_a: self.n_a,
            },
            "parity-x" => ClosedFormSpec::Parity {
                axis: Axis::X,
                theta: self.theta_rad,
                n_a: self.n_a,
            },
            other => bail!("unknown closed form `{other}`"),
        };
        Ok(spec)
    }

    fn is_pdf(&self) -> bool {
        self.family.contains("pdf")
    }

    fn is_parity(&self) -> bool {
        self.family.starts_with("parity")
    }

    fn site_count(&self) -> usize {
        match &self.rates {
            Some(r) => r.len(),
            None => self.n_a,
        }
    }
}

/// `oracle`: exact reference tables, from a state file or a closed form.
pub fn run_oracle(
    config: &RunConfig,
    state_path: Option<&Path>,
    closed_form: Option<&ClosedFormArgs>,
    target: Target,
    out: &Path,
) -> Result<()> {
    let mut meta = base_meta("oracle", config);
    match (state_path, closed_form) {
        (Some(path), None) => {
            let file =
                io::read_state(path).with_context(|| format!("reading state {}", path.display()))?;
            let subsystem = crate::config::parse_subsystem(&config.analysis.subsystem)?;
            let axis = analysis_axis(config)?;
            let rho = reduce_state(&file, &subsystem)?;
            meta.push(("axis".to_string(), axis.to_string()));
            meta.push(("subsystem".to_string(), subsystem.to_string()));
            meta.push(("time_ms".to_string(), fmt(file.meta().time_ms)));
            match target {
                Target::Fcs => {
                    let grid = analysis_grid(config, subsystem.len());
                    let values = oracle::exact_fcs_curve(&rho, axis, &grid);
                    meta.insert(0, ("kind".to_string(), "fcs".to_string()));
                    let rows: Vec<Vec<String>> = grid
                        .iter()
                        .zip(values.iter())
                        .map(|(&a, v)| vec![fmt(a), fmt(v.re), fmt(v.im)])
                        .collect();
                    io::write_table(out, &meta, &["alpha", "re", "im"], &rows)?;
                }
                Target::Pdf => {
                    let probs = oracle::exact_pdf(&rho, axis);
                    meta.insert(0, ("kind".to_string(), "pdf".to_string()));
                    let rows: Vec<Vec<String>> = spin::magnetization_outcomes(subsystem.len())
                        .iter()
                        .zip(probs.iter())
                        .map(|(&q, &p)| vec![q.to_string(), fmt(p)])
                        .collect();
                    io::write_table(out, &meta, &["q", "p"], &rows)?;
                }
                Target::Moments => {
                    let (m1, m2) = oracle::exact_magnetization_moments(&rho, axis)?;
                    meta.insert(0, ("kind".to_string(), "moments".to_string()));
                    io::write_table(
                        out,
                        &meta,
                        &["time_ms", "mean", "second_moment"],
                        &[vec![fmt(file.meta().time_ms), fmt(m1), fmt(m2)]],
                    )?;
                }
                Target::Rates => bail!("rates is not an oracle target"),
            }
        }
        (None, Some(args)) => {
            let spec = args.build()?;
            meta.push(("closed_form".to_string(), args.family.clone()));
            if args.is_parity() {
                let value = spec.parity()?;
                meta.insert(0, ("kind".to_string(), "parity".to_string()));
                io::write_table(out, &meta, &["parity"], &[vec![fmt(value)]])?;
            } else if args.is_pdf() {
                meta.insert(0, ("kind".to_string(), "pdf".to_string()));
                let rows: Vec<Vec<String>> = spin::magnetization_outcomes(args.n_a)
                    .iter()
                    .map(|&q| vec![q.to_string(), fmt(spec.pdf(q).expect("valid outcome"))])
                    .collect();
                io::write_table(out, &meta, &["q", "p"], &rows)?;
            } else {
                meta.insert(0, ("kind".to_string(), "fcs".to_string()));
                let grid = analysis_grid(config, args.site_count());
                let rows: Vec<Vec<String>> = grid
                    .iter()
                    .map(|&a| {
                        let v = spec.fcs(a).expect("validated family");
                        vec![fmt(a), fmt(v.re), fmt(v.im)]
                    })
                    .collect();
                io::write_table(out, &meta, &["alpha", "re", "im"], &rows)?;
            }
        }
        _ => bail!("oracle needs exactly one of --state or --closed-form"),
    }
    Ok(())
}

fn z_score(diff: f64, stderr: f64) -> f64 {
    if stderr <= 1e-300 {
        if diff.abs() < 1e-12 { 0.0 } else { f64::INFINITY }
    } else {
        diff / stderr
    }
}

/// `compare`: estimates side by side with exact values and z-scores.
///
/// The exact side comes either from a state file (evaluated on the estimate's
/// own grid) or from a previously written oracle table (grids must match).
pub fn run_compare(
    config: &RunConfig,
    estimate_path: &Path,
    state_path: Option<&Path>,
    oracle_path: Option<&Path>,
    out: &Path,
) -> Result<f64> {
    let est = io::read_table(estimate_path)
        .with_context(|| format!("reading estimate {}", estimate_path.display()))?;
    let kind = est
        .meta
        .get("kind")
        .ok_or_else(|| anyhow!("estimate table lacks a `kind` metadata line"))?
        .clone();
    let axis: Axis = est
        .meta
        .get("axis")
        .ok_or_else(|| anyhow!("estimate table lacks an `axis` metadata line"))?
        .parse()?;
    let subsystem = crate::config::parse_subsystem(
        est.meta
            .get("subsystem")
            .ok_or_else(|| anyhow!("estimate table lacks a `subsystem` metadata line"))?,
    )?;

    let mut meta = base_meta("compare", config);
    if let Some(seed) = est.meta.get("seed") {
        meta.push(("seed".to_string(), seed.clone()));
    }
    meta.push(("kind".to_string(), format!("compare-{kind}")));
    meta.push(("axis".to_string(), axis.to_string()));
    meta.push(("subsystem".to_string(), subsystem.to_string()));

    let max_abs_z;
    match kind.as_str() {
        "fcs" => {
            let alphas = est.numeric_column("alpha")?;
            let re = est.numeric_column("re")?;
            let im = est.numeric_column("im")?;
            let se_re = est.numeric_column("stderr_re")?;
            let se_im = est.numeric_column("stderr_im")?;
            let exact: Vec<C64> = match (state_path, oracle_path) {
                (Some(path), None) => {
                    let file = io::read_state(path)?;
                    let rho = reduce_state(&file, &subsystem)?;
                    oracle::exact_fcs_curve(&rho, axis, &alphas)
                }
                (None, Some(path)) => {
                    let oracle_table = io::read_table(path)?;
                    let oa = oracle_table.numeric_column("alpha")?;
                    if oa.len() != alphas.len()
                        || oa
                            .iter()
                            .zip(alphas.iter())
                            .any(|(a, b)| (a - b).abs() > 1e-9)
                    {
                        bail!("oracle grid does not match the estimate grid");
                    }
                    let ore = oracle_table.numeric_column("re")?;
                    let oim = oracle_table.numeric_column("im")?;
                    ore.iter()
                        .zip(oim.iter())
                        .map(|(&r, &i)| C64::new(r, i))
                        .collect()
                }
                _ => bail!("compare needs exactly one of --state or --oracle"),
            };
            let mut rows = Vec::with_capacity(alphas.len());
            let mut max_z = 0.0f64;
            for k in 0..alphas.len() {
                let z_r = z_score(re[k] - exact[k].re, se_re[k]);
                let z_i = z_score(im[k] - exact[k].im, se_im[k]);
                max_z = max_z.max(z_r.abs()).max(z_i.abs());
                rows.push(vec![
                    fmt(alphas[k]),
                    fmt(re[k]),
                    fmt(im[k]),
                    fmt(se_re[k]),
                    fmt(se_im[k]),
                    fmt(exact[k].re),
                    fmt(exact[k].im),
                    fmt(z_r),
                    fmt(z_i),
                ]);
            }
            max_abs_z = max_z;
            meta.push(("max_abs_z".to_string(), fmt(max_z)));
            io::write_table(
                out,
                &meta,
                &[
                    "alpha", "est_re", "est_im", "stderr_re", "stderr_im", "exact_re", "exact_im",
                    "z_re", "z_im",
                ],
                &rows,
            )?;
        }
        "pdf" => {
            let qs = est.numeric_column("q")?;
            let ps = est.numeric_column("p")?;
            let ses = est.numeric_column("stderr")?;
            let exact: Vec<f64> = match (state_path, oracle_path) {
                (Some(path), None) => {
                    let file = io::read_state(path)?;
                    let rho = reduce_state(&file, &subsystem)?;
                    oracle::exact_pdf(&rho, axis)
                }
                (None, Some(path)) => {
                    let oracle_table = io::read_table(path)?;
                    let oq = oracle_table.numeric_column("q")?;
                    if oq.len() != qs.len()
                        || oq.iter().zip(qs.iter()).any(|(a, b)| (a - b).abs() > 1e-9)
                    {
                        bail!("oracle outcomes do not match the estimate outcomes");
                    }
                    oracle_table.numeric_column("p")?
                }
                _ => bail!("compare needs exactly one of --state or --oracle"),
            };
            if exact.len() != qs.len() {
                bail!(
                    "outcome count mismatch: estimate has {}, oracle has {}",
                    qs.len(),
                    exact.len()
                );
            }
            let mut rows = Vec::with_capacity(qs.len());
            let mut max_z = 0.0f64;
            for k in 0..qs.len() {
                let z = z_score(ps[k] - exact[k], ses[k]);
                max_z = max_z.max(z.abs());
                rows.push(vec![
                    fmt(qs[k]),
                    fmt(ps[k]),
                    fmt(ses[k]),
                    fmt(exact[k]),
                    fmt(z),
                ]);
            }
            max_abs_z = max_z;
            meta.push(("max_abs_z".to_string(), fmt(max_z)));
            io::write_table(
                out,
                &meta,
                &["q", "est_p", "stderr", "exact_p", "z"],
                &rows,
            )?;
        }
        other => bail!("cannot compare tables of kind `{other}`"),
    }
    println!("max |z| = {max_abs_z}");
    Ok(max_abs_z)
}

/// `hist`: rotation-uniformity histograms with a pooled flatness test.
pub fn run_hist(config: &RunConfig, dataset_path: &Path, out: &Path) -> Result<()> {
    let dataset = io::read_dataset(dataset_path)
        .with_context(|| format!("reading dataset {}", dataset_path.display()))?;
    let hist = randmeas::uniformity_histogram(&dataset)?;
    let test = hist.pooled_flatness()?;
    let mut meta = base_meta("hist", config);
    meta.push(("kind".to_string(), "uniformity-histogram".to_string()));
    meta.push(("seed".to_string(), dataset.meta.seed.to_string()));
    meta.push(("n_m".to_string(), hist.shots_per_unitary.to_string()));
    meta.push(("pooled_chi2".to_string(), fmt(test.statistic)));
    meta.push(("pooled_chi2_dof".to_string(), test.dof.to_string()));
    meta.push(("pooled_chi2_p".to_string(), fmt(test.p_value)));
    // site 0 is the pooled histogram
    let mut rows = Vec::new();
    for (m, &count) in hist.pooled.iter().enumerate() {
        rows.push(vec!["0".to_string(), m.to_string(), count.to_string()]);
    }
    for (site_idx, per_site) in hist.per_site.iter().enumerate() {
        for (m, &count) in per_site.iter().enumerate() {
            rows.push(vec![
                (site_idx + 1).to_string(),
                m.to_string(),
                count.to_string(),
            ]);
        }
    }
    io::write_table(out, &meta, &["site", "m", "count"], &rows)?;
    println!(
        "pooled flatness: chi2 = {:.3} (dof {}), p = {:.4}",
        test.statistic, test.dof, test.p_value
    );
    Ok(())
}

/// Resolve the worker-thread count: flag, then environment, then automatic.
pub fn thread_count(flag: Option<usize>) -> Option<usize> {
    flag.or_else(|| {
        std::env::var("FCSHADOW_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
}
