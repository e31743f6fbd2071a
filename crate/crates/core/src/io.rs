//! File schemas: randomized-measurement datasets, simulated states and
//! analysis tables.
//!
//! All formats are line-delimited text. Floats are written with Rust's
//! shortest round-trip formatting (JSON fields through serde_json's ryu), so
//! re-reading a file reproduces every value bit for bit and identical inputs
//! produce byte-identical files.
//!
//! * Dataset (`rm-dataset/1`): a JSON metadata line, then one JSON line per
//!   record `{r, unitaries, shots}` where each unitary is 8 floats (matrix
//!   entries re/im, row-major) followed by 3 ZYZ angles, and shots are 0/1
//!   strings.
//! * State (`rm-state/1`): a JSON metadata line, then amplitudes (`re im`,
//!   one line each) for pure states or one whitespace-separated row of the
//!   density matrix per line.
//! * Table (`rm-table/1`): `# key: value` metadata lines, a CSV header, CSV
//!   data rows.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::mat2::Mat2;
use crate::randmeas::{DatasetMeta, DatasetRecord, LocalUnitary, RandomizedDataset};
use crate::spin::{DensityMatrix, StateVector};
use crate::{C64, CMat, Error, Result};

pub const DATASET_SCHEMA: &str = "rm-dataset/1";
pub const STATE_SCHEMA: &str = "rm-state/1";
pub const TABLE_SCHEMA: &str = "rm-table/1";

/// Write atomically: the contents land in a temp file in the target directory
/// which is then renamed over the destination.
pub fn atomic_write(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::input(format!("not a file path: {}", path.display())))?;
    let tmp_name = format!(".{}.tmp-{}", file_name.to_string_lossy(), std::process::id());
    let tmp = match dir {
        Some(d) => d.join(&tmp_name),
        None => std::path::PathBuf::from(&tmp_name),
    };
    std::fs::write(&tmp, contents)?;
    match std::fs::rename(&tmp, path) {
        Ok(()) => Ok(()),
        Err(e) => {
            let _ = std::fs::remove_file(&tmp);
            Err(e.into())
        }
    }
}

fn schema_check(expected: &str, found: &str) -> Result<()> {
    if expected != found {
        return Err(Error::SchemaMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        });
    }
    Ok(())
}

// --- dataset ----------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct DatasetMetaLine {
    schema: String,
    n_qubits: usize,
    n_u: usize,
    n_m: usize,
    seed: u64,
    state: String,
    time_ms: f64,
}

#[derive(Serialize, Deserialize)]
struct RecordLine {
    r: usize,
    unitaries: Vec<[f64; 11]>,
    shots: Vec<String>,
}

fn unitary_to_fields(u: &LocalUnitary) -> [f64; 11] {
    let m = u.matrix();
    let (z1, y, z2) = u.angles();
    [
        m.e[0].re, m.e[0].im, m.e[1].re, m.e[1].im, m.e[2].re, m.e[2].im, m.e[3].re, m.e[3].im,
        z1, y, z2,
    ]
}

fn unitary_from_fields(f: &[f64; 11]) -> Result<LocalUnitary> {
    let mat = Mat2::new(
        C64::new(f[0], f[1]),
        C64::new(f[2], f[3]),
        C64::new(f[4], f[5]),
        C64::new(f[6], f[7]),
    );
    LocalUnitary::with_angles(mat, f[8], f[9], f[10])
}

/// Serialize a dataset to the line-delimited text form.
pub fn serialize_dataset(dataset: &RandomizedDataset) -> Result<String> {
    dataset.validate()?;
    let mut out = String::new();
    let meta = DatasetMetaLine {
        schema: DATASET_SCHEMA.to_string(),
        n_qubits: dataset.meta.n_qubits,
        n_u: dataset.meta.n_unitaries,
        n_m: dataset.meta.shots_per_unitary,
        seed: dataset.meta.seed,
        state: dataset.meta.state_descriptor.clone(),
        time_ms: dataset.meta.time_ms,
    };
    writeln!(out, "{}", serde_json::to_string(&meta).expect("meta serializes"))
        .expect("string write");
    for rec in &dataset.records {
        let line = RecordLine {
            r: rec.index,
            unitaries: rec.unitaries.iter().map(unitary_to_fields).collect(),
            shots: rec
                .shots
                .iter()
                .map(|shot| shot.iter().map(|&b| if b == 0 { '0' } else { '1' }).collect())
                .collect(),
        };
        writeln!(out, "{}", serde_json::to_string(&line).expect("record serializes"))
            .expect("string write");
    }
    Ok(out)
}

/// Parse a dataset from its serialized form, validating every invariant
/// (including unitarity of each stored rotation).
pub fn parse_dataset(text: &str) -> Result<RandomizedDataset> {
    let mut lines = text.lines();
    let meta_line = lines
        .next()
        .ok_or_else(|| Error::Parse("empty dataset file".into()))?;
    let meta: DatasetMetaLine = serde_json::from_str(meta_line)
        .map_err(|e| Error::Parse(format!("bad dataset metadata: {e}")))?;
    schema_check(DATASET_SCHEMA, &meta.schema)?;
    let mut records = Vec::with_capacity(meta.n_u);
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: RecordLine = serde_json::from_str(line)
            .map_err(|e| Error::Parse(format!("bad record on line {}: {e}", lineno + 2)))?;
        let unitaries: Vec<LocalUnitary> = rec
            .unitaries
            .iter()
            .map(unitary_from_fields)
            .collect::<Result<_>>()?;
        let shots: Vec<Vec<u8>> = rec
            .shots
            .iter()
            .map(|s| {
                s.chars()
                    .map(|c| match c {
                        '0' => Ok(0u8),
                        '1' => Ok(1u8),
                        other => Err(Error::Parse(format!("bad shot character `{other}`"))),
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        records.push(DatasetRecord {
            index: rec.r,
            unitaries,
            shots,
        });
    }
    let dataset = RandomizedDataset {
        meta: DatasetMeta {
            n_qubits: meta.n_qubits,
            n_unitaries: meta.n_u,
            shots_per_unitary: meta.n_m,
            seed: meta.seed,
            state_descriptor: meta.state,
            time_ms: meta.time_ms,
        },
        records,
    };
    dataset.validate()?;
    Ok(dataset)
}

pub fn write_dataset(path: &Path, dataset: &RandomizedDataset) -> Result<()> {
    atomic_write(path, &serialize_dataset(dataset)?)
}

pub fn read_dataset(path: &Path) -> Result<RandomizedDataset> {
    parse_dataset(&std::fs::read_to_string(path)?)
}

// --- state ------------------------------------------------------------------

/// Metadata carried by a state file.
#[derive(Clone, Debug, PartialEq)]
pub struct StateMeta {
    pub n_qubits: usize,
    pub time_ms: f64,
    pub descriptor: String,
    /// Full run configuration as recorded by the producer.
    pub config: Option<serde_json::Value>,
}

/// A simulated state on disk: pure vector or full-system density matrix.
#[derive(Clone, Debug)]
pub enum StateFile {
    Pure { meta: StateMeta, state: StateVector },
    Density { meta: StateMeta, rho: DensityMatrix },
}

impl StateFile {
    pub fn meta(&self) -> &StateMeta {
        match self {
            StateFile::Pure { meta, .. } | StateFile::Density { meta, .. } => meta,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.meta().n_qubits
    }
}

#[derive(Serialize, Deserialize)]
struct StateMetaLine {
    schema: String,
    kind: String,
    n_qubits: usize,
    time_ms: f64,
    state: String,
    /// Version of the writer, for provenance.
    #[serde(default)]
    build: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    config: Option<serde_json::Value>,
}

/// Build identifier stamped into files this library writes.
pub const BUILD_ID: &str = concat!("fcshadow/", env!("CARGO_PKG_VERSION"));

pub fn serialize_state(file: &StateFile) -> Result<String> {
    let (kind, meta) = match file {
        StateFile::Pure { meta, .. } => ("pure", meta),
        StateFile::Density { meta, .. } => ("density", meta),
    };
    let mut out = String::new();
    let meta_line = StateMetaLine {
        schema: STATE_SCHEMA.to_string(),
        kind: kind.to_string(),
        n_qubits: meta.n_qubits,
        time_ms: meta.time_ms,
        state: meta.descriptor.clone(),
        build: BUILD_ID.to_string(),
        config: meta.config.clone(),
    };
    writeln!(
        out,
        "{}",
        serde_json::to_string(&meta_line).expect("meta serializes")
    )
    .expect("string write");
    match file {
        StateFile::Pure { state, .. } => {
            for a in state.amplitudes() {
                writeln!(out, "{} {}", a.re, a.im).expect("string write");
            }
        }
        StateFile::Density { rho, .. } => {
            let dim = rho.dim();
            for i in 0..dim {
                let mut row = String::new();
                for j in 0..dim {
                    let e = rho.entry(i, j);
                    if j > 0 {
                        row.push(' ');
                    }
                    write!(row, "{} {}", e.re, e.im).expect("string write");
                }
                writeln!(out, "{row}").expect("string write");
            }
        }
    }
    Ok(out)
}

pub fn parse_state(text: &str) -> Result<StateFile> {
    let mut lines = text.lines();
    let meta_line = lines
        .next()
        .ok_or_else(|| Error::Parse("empty state file".into()))?;
    let meta: StateMetaLine = serde_json::from_str(meta_line)
        .map_err(|e| Error::Parse(format!("bad state metadata: {e}")))?;
    schema_check(STATE_SCHEMA, &meta.schema)?;
    let n = meta.n_qubits;
    if n == 0 {
        return Err(Error::Parse("state file declares zero qubits".into()));
    }
    if n > crate::MAX_QUBITS {
        return Err(Error::Capacity {
            requested: n,
            cap: crate::MAX_QUBITS,
        });
    }
    let dim = 1usize << n;
    let parse_floats = |line: &str| -> Result<Vec<f64>> {
        line.split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad float `{tok}`: {e}")))
            })
            .collect()
    };
    let state_meta = StateMeta {
        n_qubits: n,
        time_ms: meta.time_ms,
        descriptor: meta.state,
        config: meta.config,
    };
    match meta.kind.as_str() {
        "pure" => {
            let mut amps = Vec::with_capacity(dim);
            for line in lines.by_ref() {
                if line.trim().is_empty() {
                    continue;
                }
                let f = parse_floats(line)?;
                if f.len() != 2 {
                    return Err(Error::Parse(format!(
                        "amplitude line needs 2 floats, got {}",
                        f.len()
                    )));
                }
                amps.push(C64::new(f[0], f[1]));
            }
            if amps.len() != dim {
                return Err(Error::Parse(format!(
                    "expected {dim} amplitudes, found {}",
                    amps.len()
                )));
            }
            Ok(StateFile::Pure {
                meta: state_meta,
                state: StateVector::new(n, amps)?,
            })
        }
        "density" => {
            let mut mat = CMat::zeros(dim, dim);
            let mut row = 0usize;
            for line in lines.by_ref() {
                if line.trim().is_empty() {
                    continue;
                }
                if row >= dim {
                    return Err(Error::Parse("too many density-matrix rows".into()));
                }
                let f = parse_floats(line)?;
                if f.len() != 2 * dim {
                    return Err(Error::Parse(format!(
                        "density row needs {} floats, got {}",
                        2 * dim,
                        f.len()
                    )));
                }
                for j in 0..dim {
                    mat[(row, j)] = C64::new(f[2 * j], f[2 * j + 1]);
                }
                row += 1;
            }
            if row != dim {
                return Err(Error::Parse(format!(
                    "expected {dim} density rows, found {row}"
                )));
            }
            Ok(StateFile::Density {
                meta: state_meta,
                rho: DensityMatrix::new((1..=n).collect(), mat)?,
            })
        }
        other => Err(Error::Parse(format!("unknown state kind `{other}`"))),
    }
}

pub fn write_state(path: &Path, file: &StateFile) -> Result<()> {
    atomic_write(path, &serialize_state(file)?)
}

pub fn read_state(path: &Path) -> Result<StateFile> {
    parse_state(&std::fs::read_to_string(path)?)
}

// --- tables -----------------------------------------------------------------

/// A parsed analysis table.
#[derive(Clone, Debug)]
pub struct Table {
    pub meta: BTreeMap<String, String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::input(format!("table has no column `{name}`")))
    }

    pub fn numeric_column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self.column_index(name)?;
        self.rows
            .iter()
            .map(|row| {
                row[idx]
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad float in column `{name}`: {e}")))
            })
            .collect()
    }
}

/// Render a table: `# key: value` metadata, CSV header, CSV rows.
///
/// The schema line is added automatically.
pub fn render_table(meta: &[(String, String)], columns: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    writeln!(out, "# schema: {TABLE_SCHEMA}").expect("string write");
    for (k, v) in meta {
        writeln!(out, "# {k}: {v}").expect("string write");
    }
    writeln!(out, "{}", columns.join(",")).expect("string write");
    for row in rows {
        writeln!(out, "{}", row.join(",")).expect("string write");
    }
    out
}

pub fn write_table(
    path: &Path,
    meta: &[(String, String)],
    columns: &[&str],
    rows: &[Vec<String>],
) -> Result<()> {
    atomic_write(path, &render_table(meta, columns, rows))
}

pub fn parse_table(text: &str) -> Result<Table> {
    let mut meta = BTreeMap::new();
    let mut columns: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once(':') {
                meta.insert(k.trim().to_string(), v.trim().to_string());
            }
            continue;
        }
        let fields: Vec<String> = line.split(',').map(|f| f.trim().to_string()).collect();
        match &columns {
            None => columns = Some(fields),
            Some(cols) => {
                if fields.len() != cols.len() {
                    return Err(Error::Parse(format!(
                        "row has {} fields, header has {}",
                        fields.len(),
                        cols.len()
                    )));
                }
                rows.push(fields);
            }
        }
    }
    let columns = columns.ok_or_else(|| Error::Parse("table has no header".into()))?;
    if let Some(schema) = meta.get("schema") {
        schema_check(TABLE_SCHEMA, schema)?;
    }
    Ok(Table {
        meta,
        columns,
        rows,
    })
}

pub fn read_table(path: &Path) -> Result<Table> {
    parse_table(&std::fs::read_to_string(path)?)
}
