//! Temporal quasiprobability distributions of multi-time processes.
//!
//! Every distribution is stored with its outcome axes in ascending time
//! order: axis `i` belongs to `t_i`. Doubled kinds carry the ket block
//! `a_0..a_n` followed by the bra block `b_0..b_n`.

use std::fmt;

use ndarray::{ArrayD, Dimension, IxDyn};
use num_complex::Complex64;

use crate::channels::{compose, DensityOperator, Instrument, QuantumChannel};
use crate::error::{dim_err, Error, Result};
use crate::linops::{inner, spectral_norm, vec_norm, ComplexMatrix, ONE, ZERO};
use crate::measurements::{product_measurement, MeasurementSchedule, ProjectiveMeasurement};

/// Entrywise classicality threshold: real and not below `-CLASSICAL_TOL`.
pub const CLASSICAL_TOL: f64 = 1e-10;

/// An initial state and a chain of channels `E_1, …, E_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiTimeProcess {
    rho0: DensityOperator,
    channels: Vec<QuantumChannel>,
}

impl MultiTimeProcess {
    pub fn new(rho0: DensityOperator, channels: Vec<QuantumChannel>) -> Result<Self> {
        let mut d = rho0.dim();
        for (k, ch) in channels.iter().enumerate() {
            if ch.d_in() != d {
                return dim_err(format!(
                    "channel {} expects input dimension {}, system at t{} has {}",
                    k + 1,
                    ch.d_in(),
                    k,
                    d
                ));
            }
            d = ch.d_out();
        }
        Ok(Self { rho0, channels })
    }

    pub fn rho0(&self) -> &DensityOperator {
        &self.rho0
    }

    pub fn channels(&self) -> &[QuantumChannel] {
        &self.channels
    }

    /// Number of channels `n`; the process has `n + 1` times.
    pub fn steps(&self) -> usize {
        self.channels.len()
    }

    pub fn times(&self) -> usize {
        self.channels.len() + 1
    }

    /// System dimension at `t_0..t_n`.
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.rho0.dim())
            .chain(self.channels.iter().map(|c| c.d_out()))
            .collect()
    }

    /// `ρ_{t_k}` for every time.
    pub fn states(&self) -> Vec<ComplexMatrix> {
        let mut out = vec![self.rho0.matrix().clone()];
        for ch in &self.channels {
            let next = ch.apply(out.last().expect("nonempty")).expect("dimension chain checked");
            out.push(next);
        }
        out
    }

    pub fn is_square(&self) -> bool {
        self.channels.iter().all(|c| c.is_square())
    }

    /// Parallel composition of two processes with the same number of steps.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        if self.steps() != other.steps() {
            return Err(Error::InvalidParameter("tensoring processes with different step counts".into()));
        }
        let channels = self
            .channels
            .iter()
            .zip(&other.channels)
            .map(|(a, b)| a.tensor(b))
            .collect();
        Self::new(self.rho0.tensor(&other.rho0), channels)
    }

    /// The process seen only at the given (strictly increasing) times.
    pub fn subprocess(&self, times: &[usize]) -> Result<Self> {
        let first = *times
            .first()
            .ok_or_else(|| Error::EmptySelection("subprocess needs at least one time".into()))?;
        if times.windows(2).any(|w| w[0] >= w[1]) || times.iter().any(|&t| t >= self.times()) {
            return Err(Error::InvalidParameter(format!("invalid time selection {times:?}")));
        }
        let rho = DensityOperator::new(self.states().swap_remove(first))?;
        let mut channels = Vec::new();
        for w in times.windows(2) {
            let mut ch = self.channels[w[0]].clone();
            for k in w[0] + 1..w[1] {
                ch = compose(&self.channels[k], &ch)?;
            }
            channels.push(ch);
        }
        Self::new(rho, channels)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistKind {
    KdRight,
    KdLeft,
    KdDoubled,
    Mh,
    MhDoubled,
    Lvn,
}

impl DistKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::KdRight => "kd_right",
            Self::KdLeft => "kd_left",
            Self::KdDoubled => "kd_doubled",
            Self::Mh => "mh",
            Self::MhDoubled => "mh_doubled",
            Self::Lvn => "lvn",
        }
    }

    pub fn is_doubled(self) -> bool {
        matches!(self, Self::KdDoubled | Self::MhDoubled)
    }

    pub fn is_real(self) -> bool {
        matches!(self, Self::Mh | Self::MhDoubled | Self::Lvn)
    }
}

impl fmt::Display for DistKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which side of the state an axis' projectors act on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Single,
    Ket,
    Bra,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    /// `None` for axes that are not tied to a time step (coarse-grained cells, instrument branches).
    pub time: Option<usize>,
    pub block: Block,
    pub values: Vec<f64>,
}

impl Axis {
    fn timed(time: usize, block: Block, m: &ProjectiveMeasurement) -> Self {
        Self {
            time: Some(time),
            block,
            values: m.values(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuasiDistribution {
    kind: DistKind,
    axes: Vec<Axis>,
    values: ArrayD<Complex64>,
}

impl QuasiDistribution {
    pub fn from_parts(kind: DistKind, axes: Vec<Axis>, values: ArrayD<Complex64>) -> Result<Self> {
        let shape: Vec<usize> = axes.iter().map(Axis::len).collect();
        if values.shape() != shape.as_slice() {
            return dim_err(format!("tensor shape {:?} does not match axes {:?}", values.shape(), shape));
        }
        Ok(Self { kind, axes, values })
    }

    pub fn kind(&self) -> DistKind {
        self.kind
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn values(&self) -> &ArrayD<Complex64> {
        &self.values
    }

    pub fn shape(&self) -> &[usize] {
        self.values.shape()
    }

    pub fn get(&self, index: &[usize]) -> Complex64 {
        self.values[IxDyn(index)]
    }

    pub fn total(&self) -> Complex64 {
        self.values.iter().sum()
    }

    pub fn normalization_defect(&self) -> f64 {
        (self.total() - ONE).norm()
    }

    /// `(multi-index, value)` in row-major (lexicographic) order.
    pub fn entries(&self) -> Vec<(Vec<usize>, Complex64)> {
        self.values
            .indexed_iter()
            .map(|(idx, &v)| (idx.slice().to_vec(), v))
            .collect()
    }

    /// `Σ |Q|`
    pub fn abs_sum(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).sum()
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        if self.values.shape() != other.values.shape() {
            return f64::INFINITY;
        }
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn conj(&self) -> Self {
        Self {
            kind: self.kind,
            axes: self.axes.clone(),
            values: self.values.mapv(|z| z.conj()),
        }
    }

    /// All entries real and not below `-tol`.
    pub fn is_classical(&self, tol: f64) -> bool {
        self.values.iter().all(|z| z.im.abs() <= tol && z.re >= -tol)
    }
}

/// Row-major strides of a shape.
fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * shape[i + 1];
    }
    s
}

/// Projector choice at one time: left factor, right factor, output axis slots.
struct StepChoice<'a> {
    left: Option<&'a ComplexMatrix>,
    right: Option<&'a ComplexMatrix>,
    offset: usize,
}

/// Forward evaluation of `Tr[L_n E_n(… L_0 ρ R_0 …) R_n]` for every choice tuple.
///
/// `choices[k]` lists the admissible `(L_k, R_k)` pairs at time `k`; every
/// entry is the trace of its own operator chain, so no cross-tuple summation
/// enters any value.
fn forward_sandwich(p: &MultiTimeProcess, choices: &[Vec<StepChoice<'_>>], shape: &[usize]) -> ArrayD<Complex64> {
    fn recurse(
        p: &MultiTimeProcess,
        choices: &[Vec<StepChoice<'_>>],
        k: usize,
        state: &ComplexMatrix,
        flat: usize,
        out: &mut [Complex64],
    ) {
        for ch in &choices[k] {
            let mut x = match ch.left {
                Some(l) => l.matmul(state),
                None => state.clone(),
            };
            if let Some(r) = ch.right {
                x = x.matmul(r);
            }
            let idx = flat + ch.offset;
            if k + 1 == choices.len() {
                out[idx] = x.trace();
            } else {
                let next = p.channels[k].apply(&x).expect("dimension chain checked");
                recurse(p, choices, k + 1, &next, idx, out);
            }
        }
    }
    let total = shape.iter().product();
    let mut out = vec![ZERO; total];
    recurse(p, choices, 0, p.rho0.matrix(), 0, &mut out);
    ArrayD::from_shape_vec(IxDyn(shape), out).expect("shape matches element count")
}

fn check(p: &MultiTimeProcess, s: &MeasurementSchedule) -> Result<()> {
    s.check_dims(&p.dims())
}

/// Outcome layout of a single or doubled distribution, shared with [`joint_ops`].
struct Layout<'a> {
    kind: DistKind,
    axes: Vec<Axis>,
    shape: Vec<usize>,
    choices: Vec<Vec<StepChoice<'a>>>,
}

fn layout<'a>(
    kind: DistKind,
    ket: Option<&'a MeasurementSchedule>,
    bra: Option<&'a MeasurementSchedule>,
) -> Layout<'a> {
    let mut axes = Vec::new();
    if let Some(k) = ket {
        let block = if bra.is_some() { Block::Ket } else { Block::Single };
        axes.extend(k.steps().iter().enumerate().map(|(t, m)| Axis::timed(t, block, m)));
    }
    if let Some(b) = bra {
        let block = if ket.is_some() { Block::Bra } else { Block::Single };
        axes.extend(b.steps().iter().enumerate().map(|(t, m)| Axis::timed(t, block, m)));
    }
    let shape: Vec<usize> = axes.iter().map(Axis::len).collect();
    let st = strides(&shape);
    let times = ket.or(bra).map_or(0, |s| s.len());
    let bra_axis0 = if ket.is_some() { times } else { 0 };
    let mut choices = Vec::with_capacity(times);
    for t in 0..times {
        let mut step = Vec::new();
        match (ket, bra) {
            (Some(k), Some(b)) => {
                for (i, a) in k.steps()[t].outcomes().iter().enumerate() {
                    for (j, o) in b.steps()[t].outcomes().iter().enumerate() {
                        step.push(StepChoice {
                            left: Some(&a.projector),
                            right: Some(&o.projector),
                            offset: i * st[t] + j * st[bra_axis0 + t],
                        });
                    }
                }
            }
            (Some(k), None) => {
                for (i, a) in k.steps()[t].outcomes().iter().enumerate() {
                    step.push(StepChoice {
                        left: Some(&a.projector),
                        right: None,
                        offset: i * st[t],
                    });
                }
            }
            (None, Some(b)) => {
                for (j, o) in b.steps()[t].outcomes().iter().enumerate() {
                    step.push(StepChoice {
                        left: None,
                        right: Some(&o.projector),
                        offset: j * st[t],
                    });
                }
            }
            (None, None) => unreachable!("at least one schedule"),
        }
        choices.push(step);
    }
    Layout {
        kind,
        axes,
        shape,
        choices,
    }
}

fn evaluate(p: &MultiTimeProcess, l: Layout<'_>) -> QuasiDistribution {
    let values = forward_sandwich(p, &l.choices, &l.shape);
    QuasiDistribution {
        kind: l.kind,
        axes: l.axes,
        values,
    }
}

/// `Tr[E_n(…E_1(ρ Π_{b0}) Π_{b1}…) Π_{bn}]`
pub fn kd_right(p: &MultiTimeProcess, s: &MeasurementSchedule) -> Result<QuasiDistribution> {
    check(p, s)?;
    Ok(evaluate(p, layout(DistKind::KdRight, None, Some(s))))
}

/// `Tr[Π_{an} E_n(…Π_{a1} E_1(Π_{a0} ρ))]`
pub fn kd_left(p: &MultiTimeProcess, s: &MeasurementSchedule) -> Result<QuasiDistribution> {
    check(p, s)?;
    Ok(evaluate(p, layout(DistKind::KdLeft, Some(s), None)))
}

/// `Tr[Π_{an} E_n(…Π_{a0} ρ Π_{b0}…) Π_{bn}]`, ket block first.
pub fn kd_doubled(p: &MultiTimeProcess, ket: &MeasurementSchedule, bra: &MeasurementSchedule) -> Result<QuasiDistribution> {
    check(p, ket)?;
    check(p, bra)?;
    Ok(evaluate(p, layout(DistKind::KdDoubled, Some(ket), Some(bra))))
}

/// Sequential Lüders measurement probabilities.
pub fn lvn(p: &MultiTimeProcess, s: &MeasurementSchedule) -> Result<QuasiDistribution> {
    check(p, s)?;
    let axes: Vec<Axis> = s
        .steps()
        .iter()
        .enumerate()
        .map(|(t, m)| Axis::timed(t, Block::Single, m))
        .collect();
    let shape: Vec<usize> = axes.iter().map(Axis::len).collect();
    let st = strides(&shape);
    let choices = s
        .steps()
        .iter()
        .enumerate()
        .map(|(t, m)| {
            m.outcomes()
                .iter()
                .enumerate()
                .map(|(i, o)| StepChoice {
                    left: Some(&o.projector),
                    right: Some(&o.projector),
                    offset: i * st[t],
                })
                .collect()
        })
        .collect::<Vec<_>>();
    let values = forward_sandwich(p, &choices, &shape).mapv(|z| Complex64::new(z.re, 0.0));
    Ok(QuasiDistribution {
        kind: DistKind::Lvn,
        axes,
        values,
    })
}

/// Entrywise real part of a KD distribution.
pub fn mh_from_kd(q: &QuasiDistribution) -> Result<QuasiDistribution> {
    let kind = match q.kind {
        DistKind::KdRight | DistKind::KdLeft => DistKind::Mh,
        DistKind::KdDoubled => DistKind::MhDoubled,
        other => return Err(Error::WrongKind(other.name().into())),
    };
    Ok(QuasiDistribution {
        kind,
        axes: q.axes.clone(),
        values: q.values.mapv(|z| Complex64::new(z.re, 0.0)),
    })
}

/// Sums over every axis not listed in `keep`; kept axes retain their order.
pub fn marginalize(q: &QuasiDistribution, keep: &[usize]) -> Result<QuasiDistribution> {
    if keep.is_empty() {
        return Err(Error::EmptySelection("marginal must keep at least one axis".into()));
    }
    let n = q.axes.len();
    if let Some(&bad) = keep.iter().find(|&&a| a >= n) {
        return Err(Error::IndexOutOfRange { index: bad, len: n });
    }
    let mut values = q.values.clone();
    for axis in (0..n).rev() {
        if !keep.contains(&axis) {
            values = values.sum_axis(ndarray::Axis(axis));
        }
    }
    let axes = (0..n).filter(|a| keep.contains(a)).map(|a| q.axes[a].clone()).collect();
    Ok(QuasiDistribution {
        kind: q.kind,
        axes,
        values,
    })
}

/// Merges outcome tuples cell by cell.
///
/// `partition` lists disjoint cells of row-major flat tuple indices that
/// together cover the whole tensor; the result has one axis labeled by cell.
pub fn coarse_grain(q: &QuasiDistribution, partition: &[Vec<usize>]) -> Result<QuasiDistribution> {
    let total = q.values.len();
    let mut seen = vec![false; total];
    for cell in partition {
        if cell.is_empty() {
            return Err(Error::EmptySelection("empty partition cell".into()));
        }
        for &i in cell {
            if i >= total {
                return Err(Error::IndexOutOfRange { index: i, len: total });
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidParameter(format!("tuple {i} appears in two cells")));
            }
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::InvalidParameter("partition does not cover every outcome tuple".into()));
    }
    let flat: Vec<Complex64> = q.values.iter().copied().collect();
    let merged: Vec<Complex64> = partition.iter().map(|cell| cell.iter().map(|&i| flat[i]).sum()).collect();
    let axis = Axis {
        time: None,
        block: Block::Single,
        values: (0..partition.len()).map(|i| i as f64).collect(),
    };
    Ok(QuasiDistribution {
        kind: q.kind,
        axes: vec![axis],
        values: ArrayD::from_shape_vec(IxDyn(&[partition.len()]), merged).expect("one value per cell"),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// `Σ|Q| − 1`
    Linear,
    /// `ln Σ|Q|`
    Log,
}

pub fn nonclassicality(q: &QuasiDistribution, variant: Variant) -> f64 {
    let s = q.abs_sum();
    match variant {
        Variant::Linear => s - 1.0,
        Variant::Log => s.ln(),
    }
}

/// Heisenberg-picture operators on `H_{t0}` with `Tr(M ρ₀) = Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointMeasurementOperators {
    kind: DistKind,
    axes: Vec<Axis>,
    /// Row-major over the outcome axes.
    ops: Vec<ComplexMatrix>,
}

impl JointMeasurementOperators {
    pub fn kind(&self) -> DistKind {
        self.kind
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Axis::len).collect()
    }

    pub fn ops(&self) -> &[ComplexMatrix] {
        &self.ops
    }

    pub fn get(&self, index: &[usize]) -> &ComplexMatrix {
        let st = strides(&self.shape());
        &self.ops[index.iter().zip(&st).map(|(i, s)| i * s).sum::<usize>()]
    }

    pub fn sum(&self) -> ComplexMatrix {
        self.ops.iter().cloned().sum()
    }

    /// `Tr(M ρ)` for every tuple.
    pub fn distribution(&self, rho: &ComplexMatrix) -> QuasiDistribution {
        let vals = self.ops.iter().map(|m| m.trace_product(rho)).collect();
        QuasiDistribution {
            kind: self.kind,
            axes: self.axes.clone(),
            values: ArrayD::from_shape_vec(IxDyn(&self.shape()), vals).expect("one operator per tuple"),
        }
    }
}

/// Backward recursion `Y_n = R_n L_n`, `Y_k = R_k E_{k+1}†(Y_{k+1}) L_k`.
fn backward_ops(p: &MultiTimeProcess, l: &Layout<'_>) -> Vec<ComplexMatrix> {
    fn recurse(
        p: &MultiTimeProcess,
        choices: &[Vec<StepChoice<'_>>],
        k: usize,
        later: Option<&ComplexMatrix>,
        flat: usize,
        out: &mut [Option<ComplexMatrix>],
    ) {
        for ch in &choices[k] {
            let mut y = match later {
                Some(y) => p.channels[k].adjoint_apply(y).expect("dimension chain checked"),
                None => ComplexMatrix::identity(p.channels.get(k.wrapping_sub(1)).map_or(p.rho0.dim(), |c| c.d_out())),
            };
            if let Some(r) = ch.right {
                y = r.matmul(&y);
            }
            if let Some(l) = ch.left {
                y = y.matmul(l);
            }
            let idx = flat + ch.offset;
            if k == 0 {
                out[idx] = Some(y);
            } else {
                recurse(p, choices, k - 1, Some(&y), idx, out);
            }
        }
    }
    let total: usize = l.shape.iter().product();
    let mut out = vec![None; total];
    recurse(p, &l.choices, l.choices.len() - 1, None, 0, &mut out);
    out.into_iter().map(|m| m.expect("every tuple visited")).collect()
}

/// Which joint operators to build.
#[derive(Debug, Clone, Copy)]
pub enum JointKind<'a> {
    Right(&'a MeasurementSchedule),
    Left(&'a MeasurementSchedule),
    Doubled {
        ket: &'a MeasurementSchedule,
        bra: &'a MeasurementSchedule,
    },
}

pub fn joint_ops(p: &MultiTimeProcess, kind: JointKind<'_>) -> Result<JointMeasurementOperators> {
    let l = match kind {
        JointKind::Right(s) => {
            check(p, s)?;
            layout(DistKind::KdRight, None, Some(s))
        }
        JointKind::Left(s) => {
            check(p, s)?;
            layout(DistKind::KdLeft, Some(s), None)
        }
        JointKind::Doubled { ket, bra } => {
            check(p, ket)?;
            check(p, bra)?;
            layout(DistKind::KdDoubled, Some(ket), Some(bra))
        }
    };
    let ops = backward_ops(p, &l);
    Ok(JointMeasurementOperators {
        kind: l.kind,
        axes: l.axes,
        ops,
    })
}

/// The pair of operators whose commutator attains the reported maximum.
#[derive(Debug, Clone, PartialEq)]
pub enum CommutatorPair {
    /// `[M_{b_n..b_1}, Π_{b_0}]`; `later` holds the indices `b_1..b_n`.
    Sequence { later: Vec<usize>, first: usize },
    /// `[M_{b_k}, M_{b_l}]` of single-time back-evolved projectors, `k < l`.
    Marginals { k: usize, bk: usize, l: usize, bl: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessReport {
    pub nonclassicality: f64,
    pub max_commutator_norm: f64,
    pub worst_pair: Option<CommutatorPair>,
}

/// Nonclassicality of the right KD distribution together with the
/// commutator structure of the back-evolved measurement operators.
///
/// Both the sequence commutators `[M_{b_n..b_1}, Π_{b_0}]` and the pairwise
/// commutators of single-time marginals `M_{b_k} = E_1†∘…∘E_k†(Π_{b_k})` are
/// scanned, whatever the channels.
pub fn classicality_witness(p: &MultiTimeProcess, s: &MeasurementSchedule) -> Result<WitnessReport> {
    check(p, s)?;
    let nc = nonclassicality(&kd_right(p, s)?, Variant::Linear);
    let mut best = 0.0;
    let mut worst = None;
    let mut consider = |norm: f64, pair: CommutatorPair| {
        if norm > best {
            best = norm;
            worst = Some(pair);
        }
    };

    let first = &s.steps()[0];
    if p.steps() > 0 {
        // M_{b_n..b_1}: right joint operators of the schedule with a trivial t0 measurement
        let mut steps = s.steps().to_vec();
        steps[0] = crate::measurements::spectral_measurement(&ComplexMatrix::identity(p.dims()[0]), 1e-12)?;
        let later_sched = MeasurementSchedule::new(steps)?;
        let later = joint_ops(p, JointKind::Right(&later_sched))?;
        let later_shape: Vec<usize> = s.shape()[1..].to_vec();
        for (flat, m) in later.ops().iter().enumerate() {
            let idx = unflatten(flat, &later_shape);
            for (b0, o) in first.outcomes().iter().enumerate() {
                let norm = spectral_norm(&m.commutator(&o.projector));
                consider(norm, CommutatorPair::Sequence { later: idx.clone(), first: b0 });
            }
        }
    }

    let marginals = single_time_marginals(p, s)?;
    for k in 0..marginals.len() {
        for l in k + 1..marginals.len() {
            for (bk, mk) in marginals[k].iter().enumerate() {
                for (bl, ml) in marginals[l].iter().enumerate() {
                    consider(spectral_norm(&mk.commutator(ml)), CommutatorPair::Marginals { k, bk, l, bl });
                }
            }
        }
    }
    Ok(WitnessReport {
        nonclassicality: nc,
        max_commutator_norm: best,
        worst_pair: worst,
    })
}

fn unflatten(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for (i, &n) in shape.iter().enumerate().rev() {
        idx[i] = flat % n;
        flat /= n;
    }
    idx
}

/// `M_{b_k} = E_1†∘…∘E_k†(Π_{b_k})` for every time and outcome.
fn single_time_marginals(p: &MultiTimeProcess, s: &MeasurementSchedule) -> Result<Vec<Vec<ComplexMatrix>>> {
    s.steps()
        .iter()
        .enumerate()
        .map(|(k, m)| {
            m.outcomes()
                .iter()
                .map(|o| {
                    let mut y = o.projector.clone();
                    for ch in p.channels[..k].iter().rev() {
                        y = ch.adjoint_apply(&y)?;
                    }
                    Ok(y)
                })
                .collect()
        })
        .collect()
}

/// `⟨post|A|pre⟩ / ⟨post|pre⟩` for normalised pre- and post-selected states.
pub fn weak_value(a: &ComplexMatrix, pre: &[Complex64], post: &[Complex64]) -> Result<Complex64> {
    if a.rows() != pre.len() || a.cols() != pre.len() || post.len() != pre.len() {
        return dim_err("observable and states must share one dimension");
    }
    let pre_n = vec_norm(pre);
    let post_n = vec_norm(post);
    if pre_n == 0.0 || post_n == 0.0 {
        return Err(Error::InvalidParameter("zero state vector".into()));
    }
    let overlap = inner(post, pre) / (pre_n * post_n);
    if overlap.norm() <= 1e-12 {
        return Err(Error::UndefinedWeakValue);
    }
    Ok(inner(post, &a.apply(pre)) / (pre_n * post_n) / overlap)
}

/// Conditional mean of `target`'s values given `given` at outcome `index`:
/// `Σ v·Q / Σ Q` over the slice.
pub fn conditional_mean(q: &QuasiDistribution, target: usize, given: usize, index: usize) -> Result<Complex64> {
    let n = q.axes.len();
    for a in [target, given] {
        if a >= n {
            return Err(Error::IndexOutOfRange { index: a, len: n });
        }
    }
    if target == given {
        return Err(Error::InvalidParameter("target and conditioning axis coincide".into()));
    }
    let joint = marginalize(q, &{
        let mut k = vec![target, given];
        k.sort_unstable();
        k
    })?;
    let (ti, gi) = if target < given { (0, 1) } else { (1, 0) };
    let mut num = ZERO;
    let mut den = ZERO;
    for (idx, v) in joint.entries() {
        if idx[gi] == index {
            num += v * q.axes[target].values[idx[ti]];
            den += v;
        }
    }
    if den.norm() <= 1e-15 {
        return Err(Error::UndefinedWeakValue);
    }
    Ok(num / den)
}

/// `Q(b_0, k) = Tr[M_k(ρ Π_{b0})]`: the right KD object extended by the
/// instrument branch `k` applied at `t_0`.
pub fn extended_kd_right(
    rho: &DensityOperator,
    m: &ProjectiveMeasurement,
    instrument: &Instrument,
) -> Result<QuasiDistribution> {
    if m.dim() != rho.dim() || instrument.dim_in() != rho.dim() {
        return dim_err("measurement, instrument and state must share one dimension");
    }
    let k = instrument.branches().len();
    let mut vals = Vec::with_capacity(m.len() * k);
    for o in m.outcomes() {
        let x = rho.matrix().matmul(&o.projector);
        for b in 0..k {
            vals.push(instrument.apply_branch(b, &x)?.trace());
        }
    }
    let axes = vec![
        Axis::timed(0, Block::Single, m),
        Axis {
            time: None,
            block: Block::Single,
            values: (0..k).map(|i| i as f64).collect(),
        },
    ];
    QuasiDistribution::from_parts(
        DistKind::KdRight,
        axes,
        ArrayD::from_shape_vec(IxDyn(&[m.len(), k]), vals).expect("one value per pair"),
    )
}

/// Per-step product of two schedules, for tensor-product processes.
pub fn product_schedule(a: &MeasurementSchedule, b: &MeasurementSchedule) -> Result<MeasurementSchedule> {
    if a.len() != b.len() {
        return dim_err("schedules of different length");
    }
    MeasurementSchedule::new(
        a.steps()
            .iter()
            .zip(b.steps())
            .map(|(x, y)| product_measurement(&[x.clone(), y.clone()]))
            .collect::<Result<_>>()?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{c, paulis::*};
    use crate::measurements::spectral_measurement;

    fn sched(obs: &[ComplexMatrix]) -> MeasurementSchedule {
        MeasurementSchedule::from_observables(obs, 1e-12).unwrap()
    }

    fn ket0_rho() -> DensityOperator {
        DensityOperator::pure(&ket0()).unwrap()
    }

    fn xy_process() -> (MultiTimeProcess, MeasurementSchedule) {
        let p = MultiTimeProcess::new(ket0_rho(), vec![QuantumChannel::identity(2)]).unwrap();
        (p, sched(&[x(), y()]))
    }

    #[test]
    fn xy_table() {
        let (p, s) = xy_process();
        let q = kd_right(&p, &s).unwrap();
        // axes ascending: [x at t0, y at t1]; outcome 0 is +1
        let quarter = |re, im| c(re / 4.0, im / 4.0);
        assert!((q.get(&[0, 0]) - quarter(1.0, 1.0)).norm() < 1e-12);
        assert!((q.get(&[1, 0]) - quarter(1.0, -1.0)).norm() < 1e-12);
        assert!((q.get(&[0, 1]) - quarter(1.0, -1.0)).norm() < 1e-12);
        assert!((q.get(&[1, 1]) - quarter(1.0, 1.0)).norm() < 1e-12);
        assert!((nonclassicality(&q, Variant::Linear) - (2f64.sqrt() - 1.0)).abs() < 1e-12);
        let l = kd_left(&p, &s).unwrap();
        assert!(l.max_diff(&q.conj()) < 1e-15);
        let mh = mh_from_kd(&q).unwrap();
        assert!(mh.values().iter().all(|z| (z - c(0.25, 0.0)).norm() < 1e-12));
        assert_eq!(mh.kind(), DistKind::Mh);
        assert!(mh_from_kd(&mh).is_err());
    }

    #[test]
    fn hadamard_zz() {
        let p = MultiTimeProcess::new(ket0_rho(), vec![QuantumChannel::unitary(hadamard()).unwrap()]).unwrap();
        let q = kd_right(&p, &sched(&[z(), z()])).unwrap();
        assert!((q.get(&[0, 0]) - c(0.5, 0.0)).norm() < 1e-12);
        assert!((q.get(&[0, 1]) - c(0.5, 0.0)).norm() < 1e-12);
        assert!(q.get(&[1, 0]).norm() < 1e-12 && q.get(&[1, 1]).norm() < 1e-12);
    }

    #[test]
    fn lvn_examples() {
        let p = MultiTimeProcess::new(ket0_rho(), vec![QuantumChannel::identity(2)]).unwrap();
        let q = lvn(&p, &sched(&[z(), z()])).unwrap();
        assert!((q.get(&[0, 0]) - ONE).norm() < 1e-12);
        assert!(q.abs_sum() - 1.0 < 1e-12);
        let q = lvn(&p, &sched(&[z(), x()])).unwrap();
        assert!((q.get(&[0, 0]).re - 0.5).abs() < 1e-12 && (q.get(&[0, 1]).re - 0.5).abs() < 1e-12);
        assert!(q.get(&[1, 0]).norm() < 1e-12);
        assert_eq!(nonclassicality(&q, Variant::Linear).abs() < 1e-12, true);
    }

    #[test]
    fn doubled_plus_state_diagonal() {
        let p = MultiTimeProcess::new(DensityOperator::pure(&ket_plus()).unwrap(), vec![QuantumChannel::identity(2)]).unwrap();
        let zz = sched(&[z(), z()]);
        let q = kd_doubled(&p, &zz, &zz).unwrap();
        // axes [a0, a1, b0, b1]
        assert!((q.get(&[0, 0, 0, 0]) - c(0.5, 0.0)).norm() < 1e-12);
        assert!((q.get(&[1, 1, 1, 1]) - c(0.5, 0.0)).norm() < 1e-12);
        // cross-time: Tr[Π_a1 Π_a0 ρ Π_b0 Π_b1] vanishes unless a1=a0 and b1=b0
        assert!(q.get(&[0, 1, 0, 1]).norm() < 1e-12);
        assert!((q.get(&[0, 0, 1, 1]).norm() - 0.0).abs() < 1e-12);
        assert!(q.normalization_defect() < 1e-12);
    }

    #[test]
    fn one_time_doubled_is_standard_kd() {
        let rho = DensityOperator::pure(&[c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let p = MultiTimeProcess::new(rho.clone(), vec![]).unwrap();
        let q = kd_doubled(&p, &sched(&[x()]), &sched(&[z()])).unwrap();
        let xm = spectral_measurement(&x(), 1e-12).unwrap();
        let zm = spectral_measurement(&z(), 1e-12).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                let expected = xm.projector(a).matmul(rho.matrix()).matmul(zm.projector(b)).trace();
                assert!((q.get(&[a, b]) - expected).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn marginal_single_time() {
        let (p, s) = xy_process();
        let q = kd_right(&p, &s).unwrap();
        let m = marginalize(&q, &[0]).unwrap();
        assert!((m.get(&[0]) - c(0.5, 0.0)).norm() < 1e-12);
        assert!(marginalize(&q, &[]).is_err());
        assert_eq!(marginalize(&q, &[0, 1]).unwrap(), q);
    }

    #[test]
    fn coarse_grain_checks_partition() {
        let (p, s) = xy_process();
        let q = kd_right(&p, &s).unwrap();
        let cg = coarse_grain(&q, &[vec![0, 3], vec![1, 2]]).unwrap();
        assert!((cg.get(&[0]) - c(0.5, 0.5)).norm() < 1e-12);
        assert!(nonclassicality(&cg, Variant::Linear) <= nonclassicality(&q, Variant::Linear));
        assert!(coarse_grain(&q, &[vec![0, 1], vec![2]]).is_err());
        assert!(coarse_grain(&q, &[vec![0, 1], vec![1, 2, 3]]).is_err());
    }

    #[test]
    fn joint_ops_examples() {
        let (p, _) = xy_process();
        let zx = sched(&[z(), x()]);
        let ops = joint_ops(&p, JointKind::Right(&zx)).unwrap();
        let zm = &zx.steps()[0];
        let xm = &zx.steps()[1];
        assert!(ops.get(&[0, 1]).approx_eq(&zm.projector(0).matmul(xm.projector(1)), 1e-12));
        assert!(ops.sum().approx_eq(&ComplexMatrix::identity(2), 1e-12));
        let q = kd_right(&p, &zx).unwrap();
        assert!(ops.distribution(p.rho0().matrix()).max_diff(&q) < 1e-12);

        let single = MultiTimeProcess::new(ket0_rho(), vec![]).unwrap();
        let ops = joint_ops(&single, JointKind::Right(&sched(&[x()]))).unwrap();
        assert!(ops.get(&[0]).approx_eq(&ComplexMatrix::projector(&ket_plus()), 1e-12));

        let u = hadamard();
        let pu = MultiTimeProcess::new(ket0_rho(), vec![QuantumChannel::unitary(u.clone()).unwrap()]).unwrap();
        let zz = sched(&[z(), z()]);
        let ops = joint_ops(&pu, JointKind::Right(&zz)).unwrap();
        let pz = |i| zz.steps()[0].projector(i).clone();
        let expected = pz(1).matmul(&u.adjoint()).matmul(&pz(0)).matmul(&u);
        assert!(ops.get(&[1, 0]).approx_eq(&expected, 1e-12));
    }

    #[test]
    fn witness_examples() {
        let p = MultiTimeProcess::new(DensityOperator::new(ComplexMatrix::diag_real(&[0.3, 0.7])).unwrap(), vec![QuantumChannel::identity(2)]).unwrap();
        let r = classicality_witness(&p, &sched(&[z(), z()])).unwrap();
        assert!(r.nonclassicality.abs() < 1e-12);
        assert!(r.max_commutator_norm < 1e-12);
        assert!(r.worst_pair.is_none());

        let (p, s) = xy_process();
        let r = classicality_witness(&p, &s).unwrap();
        assert!((r.nonclassicality - (2f64.sqrt() - 1.0)).abs() < 1e-12);
        assert!((r.max_commutator_norm - 0.5).abs() < 1e-12);

        let r = classicality_witness(&p, &sched(&[z(), x()])).unwrap();
        assert!(r.nonclassicality.abs() < 1e-12);
        assert!((r.max_commutator_norm - 0.5).abs() < 1e-12);
    }

    #[test]
    fn weak_value_examples() {
        assert!((weak_value(&z(), &ket_plus(), &ket0()).unwrap() - ONE).norm() < 1e-12);
        assert!((weak_value(&x(), &ket0(), &ket_y_plus()).unwrap() - c(0.0, -1.0)).norm() < 1e-12);
        assert!((weak_value(&ComplexMatrix::identity(2), &ket_y_minus(), &ket_plus()).unwrap() - ONE).norm() < 1e-12);
        assert_eq!(weak_value(&x(), &ket0(), &ket1()), Err(Error::UndefinedWeakValue));
    }

    #[test]
    fn weak_value_from_left_kd() {
        // pre-selection |0⟩, observable X at t0, post-selection onto |y+⟩ at t1
        let (p, s) = xy_process();
        let q = kd_left(&p, &s).unwrap();
        let w = conditional_mean(&q, 0, 1, 0).unwrap();
        assert!((w - c(0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn subprocess_composes_channels() {
        let p = MultiTimeProcess::new(
            ket0_rho(),
            vec![
                QuantumChannel::unitary(hadamard()).unwrap(),
                QuantumChannel::depolarizing(2, 0.2).unwrap(),
            ],
        )
        .unwrap();
        let sp = p.subprocess(&[0, 2]).unwrap();
        assert_eq!(sp.steps(), 1);
        assert!(sp.states()[1].approx_eq(&p.states()[2], 1e-12));
        assert!(p.subprocess(&[2, 1]).is_err());
    }
}
