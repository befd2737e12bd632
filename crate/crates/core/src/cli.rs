//! `tkd` command-line front end.
//!
//! Process specifications and result documents are JSON. Complex scalars are
//! `[re, im]` pairs and matrices are row-major nested arrays of them. Floats
//! are written in shortest round-trip form, so every document is lossless at
//! double precision and byte-identical across runs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use ndarray::Dimension;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channels::{validate_cptp, DensityOperator, Instrument, InstrumentBranch, QuantumChannel};
use crate::charfunc::{
    calibration, char_fn, circuit_sim, default_nodes, product_grid, CharSetting, ObservableSchedule, ShotConfig,
};
use crate::linops::{hermitian_eig, unitarity_defect, ComplexMatrix};
use crate::measurements::{spectral_measurement, HsBasis, MeasurementSchedule, Outcome, ProjectiveMeasurement};
use crate::quasiprob::{
    classicality_witness, extended_kd_right, kd_doubled, kd_left, kd_right, lvn, mh_from_kd, nonclassicality,
    Block, CommutatorPair, MultiTimeProcess, QuasiDistribution, Variant,
};
use crate::tomography::{
    correlators, kd_state_recursive, mh_state, pdo, reconstruct_state, CorrKind, Method, TemporalStateOperator,
};

/// Environment variable overriding the default validation tolerance.
pub const TOL_ENV: &str = "TKD_TOL";
pub const DEFAULT_TOL: f64 = 1e-9;
pub const SPEC_VERSION: u32 = 1;
pub const RESULT_FORMAT: &str = "tkd-result/1";
pub const DEMO_FORMAT: &str = "tkd-demo/1";
/// Stands in for the spec path inside recorded arguments.
pub const SPEC_PLACEHOLDER: &str = "<spec>";
const BUNDLED_PREFIX: &str = "bundled:";
const EIG_TOL: f64 = 1e-12;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;

/// Bundled specifications, addressable as `bundled:<name>`.
pub const BUNDLED: [(&str, &str); 3] = [
    ("xy-qubit", include_str!("../specs/xy-qubit.json")),
    ("replacement", include_str!("../specs/replacement.json")),
    ("measure-replace", include_str!("../specs/measure-replace.json")),
];

pub fn bundled_spec(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Usage(String),
    Parse(String),
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::Parse(_) => EXIT_PARSE,
            Self::Validation(_) => EXIT_VALIDATION,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Usage(m) | Self::Parse(m) | Self::Validation(m) => m,
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        Self::Validation(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn parse_err<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Parse(msg.into()))
}

fn invalid<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Validation(msg.into()))
}

// ---------------------------------------------------------------- spec file

/// Row-major complex matrix, one `[re, im]` pair per entry.
pub type MatrixJson = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub version: u32,
    pub dims: Vec<usize>,
    pub initial_state: MatrixJson,
    #[serde(default)]
    pub channels: Vec<ChannelJson>,
    #[serde(default)]
    pub schedules: BTreeMap<String, Vec<StepJson>>,
    #[serde(default)]
    pub options: OptionsJson,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelJson {
    Identity,
    Unitary { matrix: MatrixJson },
    Kraus { operators: Vec<MatrixJson> },
    Replacement { state: MatrixJson },
    Depolarizing { p: f64 },
    MeasureReplace { instrument: Vec<BranchJson>, outputs: Vec<MatrixJson> },
}

impl ChannelJson {
    fn name(&self) -> &'static str {
        match self {
            Self::Identity => "identity",
            Self::Unitary { .. } => "unitary",
            Self::Kraus { .. } => "kraus",
            Self::Replacement { .. } => "replacement",
            Self::Depolarizing { .. } => "depolarizing",
            Self::MeasureReplace { .. } => "measure_replace",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchJson {
    pub label: String,
    pub kraus: Vec<MatrixJson>,
}

/// Exactly one of `observable` or `projectors`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepJson {
    pub observable: Option<MatrixJson>,
    pub projectors: Option<Vec<ProjectorJson>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectorJson {
    pub value: f64,
    pub projector: MatrixJson,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionsJson {
    pub tol: Option<f64>,
    pub seed: Option<u64>,
}

fn complex(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn matrix_json(m: &ComplexMatrix) -> MatrixJson {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| complex(m[(i, j)])).collect()).collect()
}

fn decode_matrix(m: &MatrixJson, field: &str) -> CliResult<ComplexMatrix> {
    let rows: Vec<Vec<Complex64>> = m.iter().map(|r| r.iter().map(|&[re, im]| Complex64::new(re, im)).collect()).collect();
    if rows.is_empty() || rows[0].is_empty() {
        return parse_err(format!("{field}: empty matrix"));
    }
    if rows.iter().any(|r| r.len() != rows[0].len()) {
        return parse_err(format!("{field}: ragged matrix rows"));
    }
    if m.iter().flatten().flatten().any(|x| !x.is_finite()) {
        return parse_err(format!("{field}: non-finite entry"));
    }
    ComplexMatrix::from_rows(&rows).map_err(|e| CliError::Parse(format!("{field}: {e}")))
}

fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Default tolerance: spec option, then [`TOL_ENV`], then [`DEFAULT_TOL`].
fn resolve_tol(options: &OptionsJson) -> CliResult<f64> {
    let tol = match options.tol {
        Some(t) => t,
        None => match std::env::var(TOL_ENV) {
            Ok(s) => s
                .trim()
                .parse::<f64>()
                .map_err(|_| CliError::Parse(format!("{TOL_ENV}: cannot parse {s:?} as a number")))?,
            Err(_) => DEFAULT_TOL,
        },
    };
    if !(tol.is_finite() && tol > 0.0) {
        return parse_err(format!("tolerance must be positive and finite, got {tol}"));
    }
    Ok(tol)
}

/// A parsed and fully validated specification.
#[derive(Debug, Clone)]
pub struct LoadedSpec {
    pub hash: String,
    pub file: SpecFile,
    pub tol: f64,
    pub process: MultiTimeProcess,
    pub schedules: BTreeMap<String, MeasurementSchedule>,
}

impl LoadedSpec {
    pub fn schedule(&self, name: &str) -> CliResult<&MeasurementSchedule> {
        self.schedules.get(name).ok_or_else(|| {
            let known: Vec<&str> = self.schedules.keys().map(String::as_str).collect();
            CliError::Parse(format!("schedules.{name}: no such schedule (known: {})", known.join(", ")))
        })
    }

    pub fn observables(&self, name: &str) -> CliResult<ObservableSchedule> {
        let obs = self.schedule(name)?.steps().iter().map(ProjectiveMeasurement::observable).collect();
        Ok(ObservableSchedule::new(obs)?)
    }

    /// Instrument of the first measure-and-replace channel.
    pub fn instrument(&self) -> CliResult<Instrument> {
        self.file
            .channels
            .iter()
            .enumerate()
            .find_map(|(k, c)| match c {
                ChannelJson::MeasureReplace { instrument, .. } => Some(build_instrument(instrument, &format!("channels[{k}]"))),
                _ => None,
            })
            .unwrap_or_else(|| invalid("spec has no measure_replace channel"))
    }
}

pub fn parse_spec(text: &str) -> CliResult<SpecFile> {
    let file: SpecFile = serde_json::from_str(text).map_err(|e| CliError::Parse(format!("spec: {e}")))?;
    if file.version != SPEC_VERSION {
        return parse_err(format!("version: unsupported version {}, expected {SPEC_VERSION}", file.version));
    }
    if file.dims.is_empty() || file.dims.contains(&0) {
        return parse_err("dims: need at least one positive dimension");
    }
    if file.dims.len() != file.channels.len() + 1 {
        return parse_err(format!(
            "dims: {} dimensions for {} channels, expected {}",
            file.dims.len(),
            file.channels.len(),
            file.channels.len() + 1
        ));
    }
    Ok(file)
}

fn build_instrument(branches: &[BranchJson], field: &str) -> CliResult<Instrument> {
    let branches = branches
        .iter()
        .enumerate()
        .map(|(b, br)| {
            let kraus = br
                .kraus
                .iter()
                .enumerate()
                .map(|(i, m)| decode_matrix(m, &format!("{field}.instrument[{b}].kraus[{i}]")))
                .collect::<CliResult<Vec<_>>>()?;
            Ok(InstrumentBranch { label: br.label.clone(), kraus })
        })
        .collect::<CliResult<Vec<_>>>()?;
    Instrument::new(branches).map_err(|e| CliError::Validation(format!("{field}.instrument: {e}")))
}

fn build_state(m: &MatrixJson, field: &str, tol: f64) -> CliResult<DensityOperator> {
    let m = decode_matrix(m, field)?;
    DensityOperator::with_tol(m, tol).map_err(|e| CliError::Validation(format!("{field}: {e}")))
}

fn build_channel_json(c: &ChannelJson, d_in: usize, d_out: usize, field: &str, tol: f64) -> CliResult<QuantumChannel> {
    let square = |what: &str| {
        if d_in != d_out {
            return invalid(format!("{field}: {what} channel needs equal dimensions, got {d_in} -> {d_out}"));
        }
        Ok(())
    };
    let wrap = |e: crate::Error| CliError::Validation(format!("{field}: {e}"));
    let ch = match c {
        ChannelJson::Identity => {
            square("identity")?;
            QuantumChannel::identity(d_in)
        }
        ChannelJson::Unitary { matrix } => {
            let u = decode_matrix(matrix, &format!("{field}.matrix"))?;
            let defect = unitarity_defect(&u);
            if u.is_square() && defect > tol {
                return invalid(format!("{field}.matrix: not unitary (defect {defect:.3e} > tol {tol:.3e})"));
            }
            QuantumChannel::unitary(u).map_err(wrap)?
        }
        ChannelJson::Kraus { operators } => {
            let ks = operators
                .iter()
                .enumerate()
                .map(|(i, m)| decode_matrix(m, &format!("{field}.operators[{i}]")))
                .collect::<CliResult<Vec<_>>>()?;
            QuantumChannel::from_kraus_unchecked(ks).map_err(wrap)?
        }
        ChannelJson::Replacement { state } => {
            let omega = build_state(state, &format!("{field}.state"), tol)?;
            QuantumChannel::replacement(&omega, d_in)
        }
        ChannelJson::Depolarizing { p } => {
            square("depolarizing")?;
            QuantumChannel::depolarizing(d_in, *p).map_err(wrap)?
        }
        ChannelJson::MeasureReplace { instrument, outputs } => {
            let inst = build_instrument(instrument, field)?;
            let outs = outputs
                .iter()
                .enumerate()
                .map(|(i, m)| build_state(m, &format!("{field}.outputs[{i}]"), tol))
                .collect::<CliResult<Vec<_>>>()?;
            QuantumChannel::measure_replace(&inst, &outs).map_err(wrap)?
        }
    };
    if (ch.d_in(), ch.d_out()) != (d_in, d_out) {
        return invalid(format!(
            "{field}: maps dimension {} -> {}, dims require {d_in} -> {d_out}",
            ch.d_in(),
            ch.d_out()
        ));
    }
    let report = validate_cptp(&ch, tol);
    if !report.trace_preserving {
        return invalid(format!("{field}: not trace preserving (defect {:.3e} > tol {tol:.3e})", report.defect));
    }
    Ok(ch)
}

fn build_step(step: &StepJson, field: &str, tol: f64) -> CliResult<ProjectiveMeasurement> {
    match (&step.observable, &step.projectors) {
        (Some(obs), None) => {
            let m = decode_matrix(obs, &format!("{field}.observable"))?;
            let defect = m.hermiticity_defect();
            if defect > tol {
                return invalid(format!("{field}.observable: not Hermitian (defect {defect:.3e} > tol {tol:.3e})"));
            }
            spectral_measurement(&m.hermitian_part(), EIG_TOL).map_err(|e| CliError::Validation(format!("{field}: {e}")))
        }
        (None, Some(projectors)) => {
            let outcomes = projectors
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    Ok(Outcome {
                        value: p.value,
                        projector: decode_matrix(&p.projector, &format!("{field}.projectors[{i}].projector"))?,
                    })
                })
                .collect::<CliResult<Vec<_>>>()?;
            ProjectiveMeasurement::new(outcomes).map_err(|e| CliError::Validation(format!("{field}: {e}")))
        }
        _ => parse_err(format!("{field}: give exactly one of \"observable\" or \"projectors\"")),
    }
}

fn build_schedule(steps: &[StepJson], name: &str, dims: &[usize], tol: f64) -> CliResult<MeasurementSchedule> {
    let field = format!("schedules.{name}");
    if steps.len() != dims.len() {
        return invalid(format!("{field}: {} steps for {} times", steps.len(), dims.len()));
    }
    let ms = steps
        .iter()
        .enumerate()
        .map(|(t, s)| {
            let m = build_step(s, &format!("{field}[{t}]"), tol)?;
            if m.dim() != dims[t] {
                return invalid(format!("{field}[{t}]: acts on dimension {}, time {t} has {}", m.dim(), dims[t]));
            }
            Ok(m)
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(MeasurementSchedule::new(ms)?)
}

pub fn load_spec(text: &str) -> CliResult<LoadedSpec> {
    let file = parse_spec(text)?;
    let tol = resolve_tol(&file.options)?;
    let rho = build_state(&file.initial_state, "initial_state", tol)?;
    if rho.dim() != file.dims[0] {
        return invalid(format!("initial_state: dimension {}, dims[0] is {}", rho.dim(), file.dims[0]));
    }
    let channels = file
        .channels
        .iter()
        .enumerate()
        .map(|(k, c)| build_channel_json(c, file.dims[k], file.dims[k + 1], &format!("channels[{k}] ({})", c.name()), tol))
        .collect::<CliResult<Vec<_>>>()?;
    let process = MultiTimeProcess::new(rho, channels)?;
    let schedules = file
        .schedules
        .iter()
        .map(|(name, steps)| Ok((name.clone(), build_schedule(steps, name, &file.dims, tol)?)))
        .collect::<CliResult<BTreeMap<_, _>>>()?;
    Ok(LoadedSpec { hash: sha256_hex(text), file, tol, process, schedules })
}

fn read_spec_text(source: &str) -> CliResult<String> {
    if let Some(name) = source.strip_prefix(BUNDLED_PREFIX) {
        return bundled_spec(name).map(str::to_owned).ok_or_else(|| {
            let names: Vec<&str> = BUNDLED.iter().map(|(n, _)| *n).collect();
            CliError::Parse(format!("{source}: unknown bundled spec (available: {})", names.join(", ")))
        });
    }
    std::fs::read_to_string(source).map_err(|e| CliError::Parse(format!("{source}: {e}")))
}

// ---------------------------------------------------------------- documents

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<usize>,
    pub block: String,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EntryDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    pub value: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationDoc {
    pub readout_sign: f64,
    pub phase_sign: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization_defect: Option<f64>,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl Check {
    /// Passes when `|value − expected| ≤ tolerance`.
    fn near(name: impl Into<String>, value: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value: Some(value),
            expected: Some(expected),
            tolerance: Some(tolerance),
            pass: (value - expected).abs() <= tolerance,
            message: None,
        }
    }

    /// Passes when a deviation is at most `tolerance`.
    fn small(name: impl Into<String>, deviation: f64, tolerance: f64) -> Self {
        Self::near(name, deviation, 0.0, tolerance)
    }

    fn outcome<T>(name: impl Into<String>, r: &CliResult<T>) -> Self {
        Self {
            name: name.into(),
            value: None,
            expected: None,
            tolerance: None,
            pass: r.is_ok(),
            message: r.as_ref().err().map(|e| e.message().to_owned()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub format: String,
    pub command: String,
    /// Canonical arguments with the spec path replaced by [`SPEC_PLACEHOLDER`].
    pub args: Vec<String>,
    pub spec_sha256: String,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub axes: Vec<AxisDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub entries: Vec<EntryDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MatrixJson>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eigenvalues: Vec<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub scalars: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<Check>,
    pub diagnostics: Diagnostics,
}

impl ResultDocument {
    fn new(cmd: &Command, spec: &LoadedSpec, kind: impl Into<String>) -> Self {
        Self {
            format: RESULT_FORMAT.into(),
            command: cmd.name().into(),
            args: cmd.canonical_args(),
            spec_sha256: spec.hash.clone(),
            kind: kind.into(),
            axes: Vec::new(),
            entries: Vec::new(),
            matrix: None,
            eigenvalues: Vec::new(),
            scalars: BTreeMap::new(),
            checks: Vec::new(),
            diagnostics: Diagnostics { tolerance: spec.tol, seed: spec.file.options.seed, ..Diagnostics::default() },
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoDocument {
    pub format: String,
    pub demo: String,
    pub spec_sha256: String,
    pub documents: Vec<ResultDocument>,
    pub checks: Vec<Check>,
}

fn to_json<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("documents contain finite numbers and string keys");
    s.push('\n');
    s
}

fn block_name(b: Block) -> &'static str {
    match b {
        Block::Single => "single",
        Block::Ket => "ket",
        Block::Bra => "bra",
    }
}

/// Axis order of the presented table: latest time first within each block.
fn presentation_order(q: &QuasiDistribution) -> Vec<usize> {
    let axes = q.axes();
    let mut order = Vec::with_capacity(axes.len());
    let mut start = 0;
    while start < axes.len() {
        let mut end = start + 1;
        while end < axes.len() && axes[end].block == axes[start].block {
            end += 1;
        }
        order.extend((start..end).rev());
        start = end;
    }
    order
}

fn fill_distribution(doc: &mut ResultDocument, q: &QuasiDistribution) {
    let order = presentation_order(q);
    let axes: Vec<_> = order.iter().map(|&i| &q.axes()[i]).collect();
    doc.axes = axes
        .iter()
        .map(|a| AxisDoc { time: a.time, block: block_name(a.block).into(), dim: a.len(), values: a.values.clone() })
        .collect();
    let view = q.values().view().permuted_axes(order.as_slice());
    doc.entries = view
        .indexed_iter()
        .map(|(idx, &v)| {
            let index: Vec<usize> = idx.slice().to_vec();
            let outcome = index.iter().zip(&axes).map(|(&i, a)| a.values[i]).collect();
            EntryDoc { index: Some(index), outcome: Some(outcome), value: complex(v), ..EntryDoc::default() }
        })
        .collect();
    doc.diagnostics.normalization_defect = Some(q.normalization_defect());
}

fn axis_label(a: &AxisDoc) -> String {
    let letter = if a.block == "ket" { 'a' } else { 'b' };
    match a.time {
        Some(t) => format!("{letter}{t}"),
        None => letter.to_string(),
    }
}

/// One outcome tuple per row, presented axis order, then `re,im`.
pub fn distribution_csv(doc: &ResultDocument) -> String {
    let mut out = String::new();
    let header: Vec<String> = doc.axes.iter().map(axis_label).chain(["re".into(), "im".into()]).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for e in &doc.entries {
        let mut row: Vec<String> = e.outcome.iter().flatten().map(|v| format!("{v}")).collect();
        row.push(format!("{}", e.value[0]));
        row.push(format!("{}", e.value[1]));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------- commands

#[derive(Debug, Parser)]
#[command(name = "tkd", version, about = "Temporal Kirkwood-Dirac quasiprobabilities of multi-time quantum processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistArg {
    Right,
    Left,
    Doubled,
    Mh,
    Lvn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StateArg {
    KdRight,
    KdLeft,
    Doubled,
    Mh,
    Pdo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CharArg {
    Right,
    Left,
    Doubled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DemoArg {
    Replacement,
    MeasureReplace,
    XyQubit,
}

fn value_name<T: ValueEnum>(v: &T) -> String {
    v.to_possible_value().expect("no skipped variants").get_name().to_owned()
}

/// A phase point, written as comma-separated reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(pub Vec<f64>);

impl FromStr for Point {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        s.split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|_| format!("{x:?} is not a number")))
            .collect::<std::result::Result<Vec<_>, _>>()
            .and_then(|v| {
                if v.iter().all(|x| x.is_finite()) {
                    Ok(Point(v))
                } else {
                    Err("phase points must be finite".into())
                }
            })
    }
}

#[derive(Debug, Clone, clap::Args)]
pub struct CharArgs {
    /// Spec file path or `bundled:<name>`.
    spec: String,
    #[arg(long, value_enum)]
    kind: CharArg,
    /// Schedule whose observables enter the phase gates (ket side for doubled).
    #[arg(long)]
    schedule: String,
    /// Bra-side schedule of the doubled kind; defaults to `--schedule`.
    #[arg(long)]
    bra: Option<String>,
    /// Phase point, one phase per time (doubled: ket phases then bra phases).
    /// Repeatable; defaults to the spectral product grid.
    #[arg(long = "point", allow_hyphen_values = true)]
    points: Vec<Point>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Check the state, channels and schedules of a spec.
    Validate {
        spec: String,
    },
    /// Emit a temporal quasiprobability distribution.
    Dist {
        spec: String,
        #[arg(long, value_enum)]
        kind: DistArg,
        #[arg(long)]
        schedule: String,
        /// Bra-side schedule of the doubled kind; defaults to `--schedule`.
        #[arg(long)]
        bra: Option<String>,
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
    },
    /// Nonclassicality of a distribution.
    Nonclassicality {
        spec: String,
        #[arg(long, value_enum, default_value_t = DistArg::Right)]
        kind: DistArg,
        #[arg(long)]
        schedule: String,
        #[arg(long)]
        bra: Option<String>,
        #[arg(long, value_enum, default_value_t = VariantArg::Linear)]
        variant: VariantArg,
    },
    /// Nonclassicality together with the commutator witness.
    Witness {
        spec: String,
        #[arg(long)]
        schedule: String,
    },
    /// Temporal state operator with its eigenvalue summary.
    State {
        spec: String,
        #[arg(long, value_enum)]
        kind: StateArg,
    },
    /// Characteristic function on phase points.
    Charfn(CharArgs),
    /// Interferometric estimate of the characteristic function.
    CircuitSim {
        #[command(flatten)]
        char_args: CharArgs,
        /// Total shots per point, split evenly between X and Y readout; 0 gives exact expectations.
        #[arg(long, default_value_t = 0)]
        shots: u64,
        /// Overrides the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Bundled worked examples with their closed-form checks.
    Demo {
        #[arg(value_enum)]
        name: DemoArg,
    },
    /// Recompute a result document from its spec and compare.
    Verify {
        result: String,
        spec: String,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Validate { .. } => "validate",
            Self::Dist { .. } => "dist",
            Self::Nonclassicality { .. } => "nonclassicality",
            Self::Witness { .. } => "witness",
            Self::State { .. } => "state",
            Self::Charfn(_) => "charfn",
            Self::CircuitSim { .. } => "circuit-sim",
            Self::Demo { .. } => "demo",
            Self::Verify { .. } => "verify",
        }
    }

    fn spec_source(&self) -> Option<&str> {
        match self {
            Self::Validate { spec }
            | Self::Dist { spec, .. }
            | Self::Nonclassicality { spec, .. }
            | Self::Witness { spec, .. }
            | Self::State { spec, .. }
            | Self::Verify { spec, .. } => Some(spec),
            Self::Charfn(a) | Self::CircuitSim { char_args: a, .. } => Some(&a.spec),
            Self::Demo { .. } => None,
        }
    }

    /// Arguments that reproduce this command, with the spec path masked.
    pub fn canonical_args(&self) -> Vec<String> {
        let mut v = vec![self.name().to_owned()];
        let flag = |v: &mut Vec<String>, name: &str, value: String| {
            v.push(format!("--{name}"));
            v.push(value);
        };
        match self {
            Self::Validate { .. } => v.push(SPEC_PLACEHOLDER.into()),
            Self::Dist { kind, schedule, bra, format, .. } => {
                v.push(SPEC_PLACEHOLDER.into());
                flag(&mut v, "kind", value_name(kind));
                flag(&mut v, "schedule", schedule.clone());
                if let Some(b) = bra {
                    flag(&mut v, "bra", b.clone());
                }
                flag(&mut v, "format", value_name(format));
            }
            Self::Nonclassicality { kind, schedule, bra, variant, .. } => {
                v.push(SPEC_PLACEHOLDER.into());
                flag(&mut v, "kind", value_name(kind));
                flag(&mut v, "schedule", schedule.clone());
                if let Some(b) = bra {
                    flag(&mut v, "bra", b.clone());
                }
                flag(&mut v, "variant", value_name(variant));
            }
            Self::Witness { schedule, .. } => {
                v.push(SPEC_PLACEHOLDER.into());
                flag(&mut v, "schedule", schedule.clone());
            }
            Self::State { kind, .. } => {
                v.push(SPEC_PLACEHOLDER.into());
                flag(&mut v, "kind", value_name(kind));
            }
            Self::Charfn(a) | Self::CircuitSim { char_args: a, .. } => {
                v.push(SPEC_PLACEHOLDER.into());
                flag(&mut v, "kind", value_name(&a.kind));
                flag(&mut v, "schedule", a.schedule.clone());
                if let Some(b) = &a.bra {
                    flag(&mut v, "bra", b.clone());
                }
                for p in &a.points {
                    let text: Vec<String> = p.0.iter().map(|x| format!("{x}")).collect();
                    v.push(format!("--point={}", text.join(",")));
                }
                if let Self::CircuitSim { shots, seed, .. } = self {
                    flag(&mut v, "shots", shots.to_string());
                    if let Some(s) = seed {
                        flag(&mut v, "seed", s.to_string());
                    }
                }
            }
            Self::Demo { name } => v.push(value_name(name)),
            Self::Verify { .. } => {
                v.push("<result>".into());
                v.push(SPEC_PLACEHOLDER.into());
            }
        }
        v
    }
}

fn distribution(spec: &LoadedSpec, kind: DistArg, schedule: &str, bra: Option<&str>) -> CliResult<QuasiDistribution> {
    let p = &spec.process;
    let s = spec.schedule(schedule)?;
    Ok(match kind {
        DistArg::Right => kd_right(p, s)?,
        DistArg::Left => kd_left(p, s)?,
        DistArg::Doubled => kd_doubled(p, s, spec.schedule(bra.unwrap_or(schedule))?)?,
        DistArg::Mh => mh_from_kd(&kd_right(p, s)?)?,
        DistArg::Lvn => lvn(p, s)?,
    })
}

fn temporal_state(p: &MultiTimeProcess, kind: StateArg) -> CliResult<TemporalStateOperator> {
    Ok(match kind {
        StateArg::KdRight => kd_state_recursive(p)?,
        StateArg::KdLeft => kd_state_recursive(p)?.adjoint(),
        StateArg::Mh => mh_state(&kd_state_recursive(p)?)?,
        StateArg::Pdo => pdo(p)?,
        StateArg::Doubled => {
            let bases = p.dims().iter().map(|&d| HsBasis::new_canonical(d)).collect::<crate::Result<Vec<_>>>()?;
            reconstruct_state(&correlators(p, &bases, CorrKind::Doubled, Method::Direct)?, &bases)?
        }
    })
}

fn pair_note(pair: &CommutatorPair) -> String {
    match pair {
        CommutatorPair::Sequence { later, first } => {
            let idx: Vec<String> = later.iter().map(usize::to_string).collect();
            format!("worst pair: sequence operator with later outcome indices [{}] against first outcome {first}", idx.join(", "))
        }
        CommutatorPair::Marginals { k, bk, l, bl } => {
            format!("worst pair: marginal operators (time {k}, outcome {bk}) and (time {l}, outcome {bl})")
        }
    }
}

fn cmd_validate(cmd: &Command, text: &str) -> CliResult<(ResultDocument, bool)> {
    let file = parse_spec(text)?;
    let tol = resolve_tol(&file.options)?;
    let mut checks = Vec::new();
    let state = decode_matrix(&file.initial_state, "initial_state")?;
    checks.push(Check::small("initial_state.hermiticity_defect", state.hermiticity_defect(), tol));
    checks.push(Check::small("initial_state.trace_defect", (state.trace() - Complex64::new(1.0, 0.0)).norm(), tol));
    if let Ok(groups) = hermitian_eig(&state.hermitian_part(), EIG_TOL) {
        let min = groups.iter().map(|g| g.value).fold(f64::INFINITY, f64::min);
        checks.push(Check::small("initial_state.negativity", (-min).max(0.0), tol));
    }
    checks.push(Check::outcome("initial_state", &build_state(&file.initial_state, "initial_state", tol)));
    for (k, c) in file.channels.iter().enumerate() {
        let field = format!("channels[{k}] ({})", c.name());
        let built = build_channel_json(c, file.dims[k], file.dims[k + 1], &field, tol);
        if let Ok(ch) = &built {
            checks.push(Check::small(format!("channels[{k}].tp_defect"), validate_cptp(ch, tol).defect, tol));
        }
        checks.push(Check::outcome(format!("channels[{k}]"), &built));
    }
    for (name, steps) in &file.schedules {
        checks.push(Check::outcome(format!("schedules.{name}"), &build_schedule(steps, name, &file.dims, tol)));
    }
    let all = load_spec(text);
    checks.push(Check::outcome("process", &all));
    let pass = checks.iter().all(|c| c.pass);
    let doc = ResultDocument {
        format: RESULT_FORMAT.into(),
        command: cmd.name().into(),
        args: cmd.canonical_args(),
        spec_sha256: sha256_hex(text),
        kind: "validation".into(),
        axes: file
            .dims
            .iter()
            .enumerate()
            .map(|(t, &d)| AxisDoc { time: Some(t), block: "single".into(), dim: d, values: Vec::new() })
            .collect(),
        entries: Vec::new(),
        matrix: None,
        eigenvalues: Vec::new(),
        scalars: BTreeMap::new(),
        checks,
        diagnostics: Diagnostics { tolerance: tol, seed: file.options.seed, ..Diagnostics::default() },
    };
    Ok((doc, pass))
}

fn char_setting<'a>(kind: CharArg, ket: &'a ObservableSchedule, bra: &'a ObservableSchedule) -> CharSetting<'a> {
    match kind {
        CharArg::Right => CharSetting::Right(ket),
        CharArg::Left => CharSetting::Left(ket),
        CharArg::Doubled => CharSetting::Doubled { ket, bra },
    }
}

fn char_grid(spec: &LoadedSpec, a: &CharArgs, ket: &ObservableSchedule, bra: &ObservableSchedule) -> CliResult<Vec<Vec<f64>>> {
    if !a.points.is_empty() {
        return Ok(a.points.iter().map(|p| p.0.clone()).collect());
    }
    let mut spectra = ket.spectra()?;
    if a.kind == CharArg::Doubled {
        spectra.extend(bra.spectra()?);
    }
    let nodes: Vec<Vec<f64>> = spectra.iter().map(|s| default_nodes(s)).collect();
    debug_assert_eq!(nodes.len(), char_setting(a.kind, ket, bra).point_len(spec.process.times()));
    Ok(product_grid(&nodes))
}

fn char_axes(a: &CharArgs, times: usize) -> Vec<AxisDoc> {
    let axis = |t: usize, block: &str| AxisDoc { time: Some(t), block: block.into(), dim: 1, values: Vec::new() };
    match a.kind {
        CharArg::Right => (0..times).map(|t| axis(t, "single")).collect(),
        CharArg::Left => (0..times).map(|t| axis(t, "single")).collect(),
        CharArg::Doubled => (0..times).map(|t| axis(t, "ket")).chain((0..times).map(|t| axis(t, "bra"))).collect(),
    }
}

fn execute(cmd: &Command, spec: &LoadedSpec) -> CliResult<ResultDocument> {
    match cmd {
        Command::Dist { kind, schedule, bra, .. } => {
            let q = distribution(spec, *kind, schedule, bra.as_deref())?;
            let mut doc = ResultDocument::new(cmd, spec, q.kind().name());
            fill_distribution(&mut doc, &q);
            Ok(doc)
        }
        Command::Nonclassicality { kind, schedule, bra, variant, .. } => {
            let q = distribution(spec, *kind, schedule, bra.as_deref())?;
            let v = match variant {
                VariantArg::Linear => Variant::Linear,
                VariantArg::Log => Variant::Log,
            };
            let mut doc = ResultDocument::new(cmd, spec, q.kind().name());
            doc.scalars.insert("nonclassicality".into(), nonclassicality(&q, v));
            doc.diagnostics.normalization_defect = Some(q.normalization_defect());
            Ok(doc)
        }
        Command::Witness { schedule, .. } => {
            let s = spec.schedule(schedule)?;
            let report = classicality_witness(&spec.process, s)?;
            let mut doc = ResultDocument::new(cmd, spec, "witness");
            doc.scalars.insert("nonclassicality".into(), report.nonclassicality);
            doc.scalars.insert("max_commutator_norm".into(), report.max_commutator_norm);
            if let Some(pair) = &report.worst_pair {
                doc.diagnostics.notes.push(pair_note(pair));
            }
            Ok(doc)
        }
        Command::State { kind, .. } => {
            let y = temporal_state(&spec.process, *kind)?;
            let mut doc = ResultDocument::new(cmd, spec, y.kind().name());
            let block = if y.kind().is_doubled() { ["ket", "bra"].as_slice() } else { ["single"].as_slice() };
            doc.axes = block
                .iter()
                .flat_map(|b| {
                    y.times().iter().zip(y.dims()).map(move |(&t, &d)| AxisDoc { time: Some(t), block: (*b).into(), dim: d, values: Vec::new() })
                })
                .collect();
            doc.matrix = Some(matrix_json(y.matrix()));
            let eig = y.eigenvalues();
            let tr = y.trace();
            doc.scalars.insert("trace_re".into(), tr.re);
            doc.scalars.insert("trace_im".into(), tr.im);
            doc.scalars.insert("hermiticity_defect".into(), y.matrix().hermiticity_defect());
            doc.scalars.insert("min_eigenvalue".into(), eig.last().copied().unwrap_or(0.0));
            doc.scalars.insert("max_eigenvalue".into(), eig.first().copied().unwrap_or(0.0));
            doc.scalars.insert("negativity".into(), eig.iter().filter(|&&l| l < 0.0).map(|l| -l).sum());
            doc.eigenvalues = eig;
            doc.diagnostics.normalization_defect = Some((tr - Complex64::new(1.0, 0.0)).norm());
            if !y.kind().is_hermitian() {
                doc.diagnostics.notes.push("eigenvalues are those of the Hermitian part".into());
            }
            Ok(doc)
        }
        Command::Charfn(a) => {
            let ket = spec.observables(&a.schedule)?;
            let bra = spec.observables(a.bra.as_deref().unwrap_or(&a.schedule))?;
            let setting = char_setting(a.kind, &ket, &bra);
            let grid = char_grid(spec, a, &ket, &bra)?;
            let samples = char_fn(&spec.process, setting, &grid)?;
            let mut doc = ResultDocument::new(cmd, spec, format!("char_{}", samples.kind.name()));
            doc.axes = char_axes(a, spec.process.times());
            doc.entries = samples
                .grid
                .iter()
                .zip(&samples.values)
                .map(|(u, &v)| EntryDoc { point: Some(u.clone()), value: complex(v), ..EntryDoc::default() })
                .collect();
            Ok(doc)
        }
        Command::CircuitSim { char_args: a, shots, seed } => {
            let ket = spec.observables(&a.schedule)?;
            let bra = spec.observables(a.bra.as_deref().unwrap_or(&a.schedule))?;
            let setting = char_setting(a.kind, &ket, &bra);
            let grid = char_grid(spec, a, &ket, &bra)?;
            let seed = seed.or(spec.file.options.seed).unwrap_or(0);
            let mut doc = ResultDocument::new(cmd, spec, format!("char_{}_circuit", setting.kind().name()));
            doc.axes = char_axes(a, spec.process.times());
            for (i, u) in grid.iter().enumerate() {
                let cfg = (*shots > 0).then_some(ShotConfig { shots: *shots, seed, stream: i as u64 });
                let out = circuit_sim(&spec.process, setting, u, cfg)?;
                doc.entries.push(match out.estimate {
                    Some(est) => EntryDoc {
                        point: Some(u.clone()),
                        value: complex(est.value),
                        exact: Some(complex(out.exact)),
                        std_error: Some(est.std_error),
                        ..EntryDoc::default()
                    },
                    None => EntryDoc { point: Some(u.clone()), value: complex(out.exact), ..EntryDoc::default() },
                });
            }
            let cal = calibration();
            doc.diagnostics.calibration = Some(CalibrationDoc { readout_sign: cal.readout_sign, phase_sign: cal.phase_sign });
            doc.diagnostics.seed = Some(seed);
            doc.diagnostics.shots = Some(*shots);
            Ok(doc)
        }
        Command::Validate { .. } | Command::Demo { .. } | Command::Verify { .. } => {
            Err(CliError::Usage(format!("{} is not a spec computation", cmd.name())))
        }
    }
}

// ---------------------------------------------------------------- demos

fn entry_value(doc: &ResultDocument, outcome: &[f64]) -> Complex64 {
    let e = doc
        .entries
        .iter()
        .find(|e| e.outcome.as_deref() == Some(outcome))
        .expect("outcome present in table");
    Complex64::new(e.value[0], e.value[1])
}

fn run_sub(spec: &LoadedSpec, args: &[&str]) -> CliResult<ResultDocument> {
    let argv = std::iter::once("tkd").chain(args.iter().copied());
    let cli = Cli::try_parse_from(argv).map_err(|e| CliError::Usage(e.to_string()))?;
    execute(&cli.command, spec)
}

fn outer(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

fn single_time_kd(rho: &ComplexMatrix, ket: &ProjectiveMeasurement, bra: &ProjectiveMeasurement) -> Vec<Complex64> {
    ket.outcomes()
        .iter()
        .flat_map(|a| bra.outcomes().iter().map(move |b| a.projector.matmul(rho).matmul(&b.projector).trace()))
        .collect()
}

fn abs_sum(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).sum()
}

fn max_dev(a: impl IntoIterator<Item = Complex64>, b: impl IntoIterator<Item = Complex64>) -> f64 {
    a.into_iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Values of a document's entries in table order.
fn doc_values(doc: &ResultDocument) -> Vec<Complex64> {
    doc.entries.iter().map(|e| Complex64::new(e.value[0], e.value[1])).collect()
}

fn demo_xy(spec: &LoadedSpec) -> CliResult<(Vec<ResultDocument>, Vec<Check>)> {
    let dist = run_sub(spec, &["dist", SPEC_PLACEHOLDER, "--kind", "right", "--schedule", "xy"])?;
    let nc = run_sub(spec, &["nonclassicality", SPEC_PLACEHOLDER, "--kind", "right", "--schedule", "xy"])?;
    let mut checks = Vec::new();
    for (b1, b0) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
        // ⟨0|Π_{b0}^X Π_{b1}^Y|0⟩ = (1 + i·b0·b1)/4
        let q = entry_value(&dist, &[b1, b0]);
        let expected = Complex64::new(0.25, 0.25 * b0 * b1);
        checks.push(Check::small(format!("Q(b1={b1}, b0={b0}) = (1{}i)/4", if b0 * b1 > 0.0 { '+' } else { '-' }), (q - expected).norm(), 1e-12));
    }
    checks.push(Check::near("nonclassicality = sqrt(2) - 1", nc.scalars["nonclassicality"], 2f64.sqrt() - 1.0, 1e-12));
    Ok((vec![dist, nc], checks))
}

fn demo_replacement(spec: &LoadedSpec) -> CliResult<(Vec<ResultDocument>, Vec<Check>)> {
    let right = run_sub(spec, &["dist", SPEC_PLACEHOLDER, "--kind", "right", "--schedule", "xz"])?;
    let doubled = run_sub(spec, &["dist", SPEC_PLACEHOLDER, "--kind", "doubled", "--schedule", "xz", "--bra", "zx"])?;
    let omega = match &spec.file.channels[0] {
        ChannelJson::Replacement { state } => decode_matrix(state, "channels[0].state")?,
        _ => return invalid("replacement demo needs a replacement channel at channels[0]"),
    };
    let rho = spec.process.rho0().matrix();
    let (xz, zx) = (spec.schedule("xz")?, spec.schedule("zx")?);
    let born = |state: &ComplexMatrix, m: &ProjectiveMeasurement| -> Vec<f64> {
        m.outcomes().iter().map(|o| state.matmul(&o.projector).trace().re).collect()
    };
    // presented order (b1, b0): b1 slowest
    let product = outer(&born(&omega, &xz.steps()[1]), &born(rho, &xz.steps()[0]));
    let fact = max_dev(doc_values(&right), product.iter().map(|&x| Complex64::new(x, 0.0)));
    let nc_right: f64 = abs_sum(&doc_values(&right)) - 1.0;

    let q1 = single_time_kd(&omega, &xz.steps()[1], &zx.steps()[1]);
    let q0 = single_time_kd(rho, &xz.steps()[0], &zx.steps()[0]);
    let (k1, b1n) = (xz.steps()[1].len(), zx.steps()[1].len());
    let (k0, b0n) = (xz.steps()[0].len(), zx.steps()[0].len());
    // presented order (a1, a0, b1, b0)
    let mut expected = Vec::new();
    for a1 in 0..k1 {
        for a0 in 0..k0 {
            for b1 in 0..b1n {
                for b0 in 0..b0n {
                    expected.push(q1[a1 * b1n + b1] * q0[a0 * b0n + b0]);
                }
            }
        }
    }
    let fact2 = max_dev(doc_values(&doubled), expected);
    let (n1, n0) = (abs_sum(&q1) - 1.0, abs_sum(&q0) - 1.0);
    let nd = abs_sum(&doc_values(&doubled)) - 1.0;
    let checks = vec![
        Check::small("right KD = p_t1(b1) p_t0(b0)", fact, 1e-15),
        Check::small("nonclassicality of right KD = 0", nc_right.abs(), 1e-15),
        Check::small("doubled KD = Q_t1(a1,b1) Q_t0(a0,b0)", fact2, 1e-15),
        Check::near("doubled nonclassicality = N1 N0 + N1 + N0", nd, n1 * n0 + n1 + n0, 1e-12),
    ];
    Ok((vec![right, doubled], checks))
}

fn demo_measure_replace(spec: &LoadedSpec) -> CliResult<(Vec<ResultDocument>, Vec<Check>)> {
    let right = run_sub(spec, &["dist", SPEC_PLACEHOLDER, "--kind", "right", "--schedule", "xy"])?;
    let doubled = run_sub(spec, &["dist", SPEC_PLACEHOLDER, "--kind", "doubled", "--schedule", "xy", "--bra", "zy"])?;
    let instrument = spec.instrument()?;
    let outputs = match &spec.file.channels[0] {
        ChannelJson::MeasureReplace { outputs, .. } => outputs
            .iter()
            .enumerate()
            .map(|(i, m)| decode_matrix(m, &format!("channels[0].outputs[{i}]")))
            .collect::<CliResult<Vec<_>>>()?,
        _ => return invalid("measure-replace demo needs a measure_replace channel at channels[0]"),
    };
    let (xy, zy) = (spec.schedule("xy")?, spec.schedule("zy")?);
    let rho = spec.process.rho0();
    let ext = extended_kd_right(rho, &xy.steps()[0], &instrument)?;
    let branches = instrument.branches().len();
    let t1 = &xy.steps()[1];
    let mut expected = Vec::new();
    for o1 in t1.outcomes() {
        for b0 in 0..xy.steps()[0].len() {
            let v: Complex64 = (0..branches)
                .map(|k| outputs[k].matmul(&o1.projector).trace().re * ext.get(&[b0, k]))
                .sum();
            expected.push(v);
        }
    }
    let fact = max_dev(doc_values(&right), expected);
    let nc_right = abs_sum(&doc_values(&right)) - 1.0;
    let nc_ext = ext.abs_sum() - 1.0;

    let (ket, bra) = (xy.steps(), zy.steps());
    let mut expected2 = Vec::new();
    for a1 in ket[1].outcomes() {
        for a0 in ket[0].outcomes() {
            for b1 in bra[1].outcomes() {
                for b0 in bra[0].outcomes() {
                    let x = a0.projector.matmul(rho.matrix()).matmul(&b0.projector);
                    let mut v = Complex64::new(0.0, 0.0);
                    for (k, w) in outputs.iter().enumerate() {
                        v += instrument.apply_branch(k, &x)?.trace() * a1.projector.matmul(w).matmul(&b1.projector).trace();
                    }
                    expected2.push(v);
                }
            }
        }
    }
    let fact2 = max_dev(doc_values(&doubled), expected2);
    let checks = vec![
        Check::small("right KD = sum_k p_t1(b1|omega_k) Q_t0(b0,k)", fact, 1e-10),
        Check::near("nonclassicality of right KD = extended t0 KD nonclassicality", nc_right, nc_ext, 1e-10),
        Check::small("doubled KD = sum_k Q_t0(a0,b0,k) Q_t1(a1,b1|omega_k)", fact2, 1e-10),
    ];
    Ok((vec![right, doubled], checks))
}

fn run_demo(name: DemoArg) -> CliResult<(DemoDocument, bool)> {
    let text = bundled_spec(&value_name(&name)).expect("every demo has a bundled spec");
    let spec = load_spec(text)?;
    let (documents, checks) = match name {
        DemoArg::XyQubit => demo_xy(&spec)?,
        DemoArg::Replacement => demo_replacement(&spec)?,
        DemoArg::MeasureReplace => demo_measure_replace(&spec)?,
    };
    let pass = checks.iter().all(|c| c.pass);
    let doc = DemoDocument { format: DEMO_FORMAT.into(), demo: value_name(&name), spec_sha256: spec.hash, documents, checks };
    Ok((doc, pass))
}

// ---------------------------------------------------------------- verify

fn numbers(doc: &ResultDocument) -> Vec<f64> {
    let mut v = Vec::new();
    for e in &doc.entries {
        v.extend(e.value);
        v.extend(e.exact.iter().flatten());
        v.extend(e.std_error);
        v.extend(e.point.iter().flatten());
        v.extend(e.outcome.iter().flatten());
    }
    v.extend(doc.matrix.iter().flatten().flatten().flatten());
    v.extend(&doc.eigenvalues);
    v.extend(doc.scalars.values());
    v
}

/// Largest deviation between a recorded document and its recomputation.
pub fn verify_document(result_text: &str, spec_text: &str) -> CliResult<(ResultDocument, f64)> {
    let recorded: ResultDocument = serde_json::from_str(result_text).map_err(|e| CliError::Parse(format!("result: {e}")))?;
    if recorded.format != RESULT_FORMAT {
        return parse_err(format!("result: format {:?}, expected {RESULT_FORMAT:?}", recorded.format));
    }
    let hash = sha256_hex(spec_text);
    if hash != recorded.spec_sha256 {
        return invalid(format!("spec hash {hash} does not match recorded {}", recorded.spec_sha256));
    }
    let cli = Cli::try_parse_from(std::iter::once("tkd").chain(recorded.args.iter().map(String::as_str)))
        .map_err(|e| CliError::Parse(format!("result.args: {e}")))?;
    let fresh = if matches!(cli.command, Command::Validate { .. }) {
        cmd_validate(&cli.command, spec_text)?.0
    } else {
        execute(&cli.command, &load_spec(spec_text)?)?
    };
    let (a, b) = (numbers(&recorded), numbers(&fresh));
    let shape_ok = a.len() == b.len() && recorded.kind == fresh.kind && recorded.checks.len() == fresh.checks.len();
    let dev = if shape_ok {
        a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    Ok((recorded, dev))
}

fn cmd_verify(cmd: &Command, result: &str, spec_source: &str) -> CliResult<(ResultDocument, bool)> {
    let result_text = std::fs::read_to_string(result).map_err(|e| CliError::Parse(format!("{result}: {e}")))?;
    let spec_text = read_spec_text(spec_source)?;
    let (recorded, dev) = verify_document(&result_text, &spec_text)?;
    let tol = recorded.diagnostics.tolerance;
    let mut doc = ResultDocument {
        format: RESULT_FORMAT.into(),
        command: cmd.name().into(),
        args: cmd.canonical_args(),
        spec_sha256: recorded.spec_sha256.clone(),
        kind: "verification".into(),
        axes: Vec::new(),
        entries: Vec::new(),
        matrix: None,
        eigenvalues: Vec::new(),
        scalars: BTreeMap::new(),
        checks: vec![Check::small(format!("{} recomputation", recorded.command), dev, tol)],
        diagnostics: Diagnostics { tolerance: tol, ..Diagnostics::default() },
    };
    if dev.is_finite() {
        doc.scalars.insert("max_deviation".into(), dev);
    } else {
        doc.checks[0].value = None;
        doc.checks[0].message = Some("recomputed document has a different shape".into());
    }
    let pass = doc.passed();
    Ok((doc, pass))
}

// ---------------------------------------------------------------- entry point

fn dispatch(cmd: &Command) -> CliResult<(String, bool)> {
    match cmd {
        Command::Validate { spec } => {
            let (doc, pass) = cmd_validate(cmd, &read_spec_text(spec)?)?;
            Ok((to_json(&doc), pass))
        }
        Command::Demo { name } => {
            let (doc, pass) = run_demo(*name)?;
            Ok((to_json(&doc), pass))
        }
        Command::Verify { result, spec } => {
            let (doc, pass) = cmd_verify(cmd, result, spec)?;
            Ok((to_json(&doc), pass))
        }
        _ => {
            let source = cmd.spec_source().expect("spec commands carry a spec");
            let spec = load_spec(&read_spec_text(source)?)?;
            let doc = execute(cmd, &spec)?;
            let text = match cmd {
                Command::Dist { format: FormatArg::Csv, .. } => distribution_csv(&doc),
                _ => to_json(&doc),
            };
            Ok((text, true))
        }
    }
}

/// Runs `tkd` on `argv` (program name first) and returns the exit code and
/// the text for stdout (code 0 or a failed check) or stderr (errors).
pub fn run<I, T>(argv: I) -> (i32, String)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            return (code, e.render().to_string());
        }
    };
    match dispatch(&cli.command) {
        Ok((text, true)) => (EXIT_OK, text),
        Ok((text, false)) => (EXIT_VALIDATION, text),
        Err(e) => {
            let mut msg = String::new();
            let _ = writeln!(msg, "error: {}", e.message());
            (e.exit_code(), msg)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tkd(args: &[&str]) -> (i32, String) {
        run(std::iter::once("tkd").chain(args.iter().copied()))
    }

    #[test]
    fn bundled_specs_validate() {
        for (name, _) in BUNDLED {
            let (code, out) = tkd(&["validate", &format!("bundled:{name}")]);
            assert_eq!(code, EXIT_OK, "{name}: {out}");
            let doc: ResultDocument = serde_json::from_str(&out).unwrap();
            for c in doc.checks.iter().filter(|c| c.value.is_some()) {
                assert!(c.value.unwrap() < 1e-12, "{name}: {}", c.name);
            }
        }
    }

    #[test]
    fn xy_table_and_csv() {
        let (code, out) = tkd(&["dist", "bundled:xy-qubit", "--kind", "right", "--schedule", "xy"]);
        assert_eq!(code, EXIT_OK);
        let doc: ResultDocument = serde_json::from_str(&out).unwrap();
        for e in &doc.entries {
            let o = e.outcome.as_ref().unwrap();
            assert!((e.value[0] - 0.25).abs() < 1e-12 && (e.value[1] - 0.25 * o[0] * o[1]).abs() < 1e-12);
        }
        let (_, csv) = tkd(&["dist", "bundled:xy-qubit", "--kind", "doubled", "--schedule", "xy", "--format", "csv"]);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("a1,a0,b1,b0,re,im"));
        assert_eq!(lines.count(), 16);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(tkd(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(tkd(&["dist", "bundled:xy-qubit", "--kind", "sideways", "--schedule", "xy"]).0, EXIT_USAGE);
        assert_eq!(tkd(&["--help"]).0, EXIT_OK);
        assert_eq!(tkd(&["validate", "bundled:nope"]).0, EXIT_PARSE);
        assert_eq!(tkd(&["dist", "bundled:xy-qubit", "--kind", "right", "--schedule", "nope"]).0, EXIT_PARSE);
    }

    #[test]
    fn parse_errors_are_anchored() {
        let err = load_spec("{\n  \"version\": 1,\n  \"dims\": [2\n}").unwrap_err();
        assert!(matches!(&err, CliError::Parse(m) if m.contains("line 4")), "{err:?}");
        let ragged = r#"{"version":1,"dims":[2],"initial_state":[[[1,0],[0,0]],[[0,0]]]}"#;
        assert!(matches!(load_spec(ragged), Err(CliError::Parse(m)) if m.starts_with("initial_state")));
        let leaky = r#"{"version":1,"dims":[2,2],"initial_state":[[[1,0],[0,0]],[[0,0],[0,0]]],
            "channels":[{"kind":"kraus","operators":[[[[1,0],[0,0]],[[0,0],[0.5,0]]]]}]}"#;
        let err = load_spec(leaky).unwrap_err();
        assert!(matches!(&err, CliError::Validation(m) if m.starts_with("channels[0] (kraus)")), "{err:?}");
        assert_eq!(err.exit_code(), EXIT_VALIDATION);
    }

    #[test]
    fn documents_round_trip() {
        let text = bundled_spec("measure-replace").unwrap();
        let spec = load_spec(text).unwrap();
        for args in [
            vec!["dist", SPEC_PLACEHOLDER, "--kind", "lvn", "--schedule", "xy"],
            vec!["state", SPEC_PLACEHOLDER, "--kind", "pdo"],
            vec!["charfn", SPEC_PLACEHOLDER, "--kind", "doubled", "--schedule", "xy", "--bra", "zy"],
        ] {
            let doc = run_sub(&spec, &args).unwrap();
            let json = to_json(&doc);
            let back: ResultDocument = serde_json::from_str(&json).unwrap();
            assert_eq!(back, doc, "lossless serialization");
            let (_, dev) = verify_document(&json, text).unwrap();
            assert!(dev <= doc.diagnostics.tolerance);
        }
        let other = bundled_spec("xy-qubit").unwrap();
        let doc = to_json(&run_sub(&spec, &["state", SPEC_PLACEHOLDER, "--kind", "mh"]).unwrap());
        assert!(matches!(verify_document(&doc, other), Err(CliError::Validation(_))));
    }

    #[test]
    fn output_is_deterministic() {
        let args = ["circuit-sim", "bundled:xy-qubit", "--kind", "right", "--schedule", "xy", "--shots", "2000", "--seed", "3"];
        assert_eq!(tkd(&args), tkd(&args));
        let (code, a) = tkd(&["demo", "measure-replace"]);
        assert_eq!(code, EXIT_OK);
        assert_eq!(a, tkd(&["demo", "measure-replace"]).1);
    }

    #[test]
    fn negative_points_parse() {
        let (code, out) = tkd(&["charfn", "bundled:xy-qubit", "--kind", "right", "--schedule", "xy", "--point", "-1.5,0.25"]);
        assert_eq!(code, EXIT_OK, "{out}");
        let doc: ResultDocument = serde_json::from_str(&out).unwrap();
        assert_eq!(doc.entries[0].point.as_deref(), Some([-1.5, 0.25].as_slice()));
        assert!(doc.args.contains(&"--point=-1.5,0.25".to_owned()));
    }
}
