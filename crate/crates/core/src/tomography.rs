//! Temporal Bloch tomography and temporal state operators.
//!
//! A [`TemporalStateOperator`] orders its tensor factors latest time first,
//! `H_{t_n} ⊗ … ⊗ H_{t_0}`. Doubled kinds carry the ket (L) block followed
//! by the bra (R) block, each ordered the same way.

use ndarray::{ArrayD, IxDyn};
use num_complex::Complex64;

use crate::error::{dim_err, Error, Result};
use crate::linops::{hermitian_eig, kron, kron_all, partial_trace, ComplexMatrix, DimProfile, ONE};
use crate::measurements::{spectral_measurement, HsBasis, MeasurementSchedule, ProjectiveMeasurement};
use crate::quasiprob::{self, Block, MultiTimeProcess, QuasiDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CorrKind {
    Right,
    Left,
    Doubled,
    Mh,
    MhDoubled,
    /// Sequential projective statistics `Σ b Π_b X Π_b` per time. These equal the
    /// Jordan correlators of the PDO when every basis operator squares to the identity.
    Lvn,
}

impl CorrKind {
    pub fn is_doubled(self) -> bool {
        matches!(self, Self::Doubled | Self::MhDoubled)
    }

    /// Kind of the state a Bloch sum of these correlators produces.
    pub fn state_kind(self) -> StateKind {
        match self {
            Self::Right => StateKind::KdRight,
            Self::Left => StateKind::KdLeft,
            Self::Doubled => StateKind::KdDoubled,
            Self::Mh => StateKind::Mh,
            Self::MhDoubled => StateKind::MhDoubled,
            Self::Lvn => StateKind::Pdo,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Value-weighted sums of quasiprobabilities of spectral measurements.
    ViaDistributions,
    /// Trace formulas with the basis operators inserted directly.
    Direct,
}

/// Correlators `T` indexed by basis indices, axes in ascending time
/// (doubled kinds: ket block then bra block).
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatorTensor {
    kind: CorrKind,
    values: ArrayD<Complex64>,
}

impl CorrelatorTensor {
    pub fn new(kind: CorrKind, values: ArrayD<Complex64>) -> Self {
        Self { kind, values }
    }

    pub fn kind(&self) -> CorrKind {
        self.kind
    }

    pub fn values(&self) -> &ArrayD<Complex64> {
        &self.values
    }

    pub fn get(&self, index: &[usize]) -> Complex64 {
        self.values[IxDyn(index)]
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
}

fn check_bases(p: &MultiTimeProcess, bases: &[HsBasis]) -> Result<()> {
    let dims = p.dims();
    if bases.len() != dims.len() {
        return dim_err(format!("{} bases for {} times", bases.len(), dims.len()));
    }
    for (k, (b, d)) in bases.iter().zip(&dims).enumerate() {
        if b.dim() != *d {
            return dim_err(format!("basis at t{k} has dimension {}, system has {d}", b.dim()));
        }
    }
    Ok(())
}

fn multi_indices(shape: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let total: usize = shape.iter().product();
    (0..total).map(move |mut flat| {
        let mut idx = vec![0; shape.len()];
        for (i, &n) in shape.iter().enumerate().rev() {
            idx[i] = flat % n;
            flat /= n;
        }
        idx
    })
}

/// `Σ_tuples (∏ outcome values) · Q(tuple)`
fn weighted_sum(q: &QuasiDistribution) -> Complex64 {
    q.entries()
        .into_iter()
        .map(|(idx, v)| {
            let w: f64 = idx.iter().zip(q.axes()).map(|(&i, a)| a.values[i]).product();
            v * w
        })
        .sum()
}

pub fn correlators(p: &MultiTimeProcess, bases: &[HsBasis], kind: CorrKind, method: Method) -> Result<CorrelatorTensor> {
    check_bases(p, bases)?;
    let block: Vec<usize> = bases.iter().map(HsBasis::len).collect();
    let shape: Vec<usize> = if kind.is_doubled() {
        block.iter().chain(&block).copied().collect()
    } else {
        block.clone()
    };
    let values = match method {
        Method::ViaDistributions => via_distributions(p, bases, kind, &shape)?,
        Method::Direct => direct(p, bases, kind, &shape),
    };
    Ok(CorrelatorTensor { kind, values })
}

fn via_distributions(p: &MultiTimeProcess, bases: &[HsBasis], kind: CorrKind, shape: &[usize]) -> Result<ArrayD<Complex64>> {
    let meas: Vec<Vec<ProjectiveMeasurement>> = bases
        .iter()
        .map(|b| b.ops().iter().map(|s| spectral_measurement(s, 1e-12)).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let times = bases.len();
    let schedule = |mu: &[usize]| MeasurementSchedule::new(mu.iter().enumerate().map(|(k, &m)| meas[k][m].clone()).collect());
    let mut out = Vec::with_capacity(shape.iter().product());
    for idx in multi_indices(shape) {
        let value = match kind {
            CorrKind::Right => weighted_sum(&quasiprob::kd_right(p, &schedule(&idx)?)?),
            CorrKind::Left => weighted_sum(&quasiprob::kd_left(p, &schedule(&idx)?)?),
            CorrKind::Mh => weighted_sum(&quasiprob::mh_from_kd(&quasiprob::kd_right(p, &schedule(&idx)?)?)?),
            CorrKind::Lvn => weighted_sum(&quasiprob::lvn(p, &schedule(&idx)?)?),
            CorrKind::Doubled | CorrKind::MhDoubled => {
                let q = quasiprob::kd_doubled(p, &schedule(&idx[..times])?, &schedule(&idx[times..])?)?;
                if kind == CorrKind::MhDoubled {
                    weighted_sum(&quasiprob::mh_from_kd(&q)?)
                } else {
                    weighted_sum(&q)
                }
            }
        };
        out.push(value);
    }
    Ok(ArrayD::from_shape_vec(IxDyn(shape), out).expect("one value per index"))
}

/// `X ↦ Σ_b b Π_b X Π_b`
fn luders_weighted(m: &ProjectiveMeasurement, x: &ComplexMatrix) -> ComplexMatrix {
    m.outcomes()
        .iter()
        .map(|o| o.projector.matmul(x).matmul(&o.projector).scale_real(o.value))
        .sum()
}

fn direct(p: &MultiTimeProcess, bases: &[HsBasis], kind: CorrKind, shape: &[usize]) -> ArrayD<Complex64> {
    let times = bases.len();
    let luders: Vec<Vec<ProjectiveMeasurement>> = if kind == CorrKind::Lvn {
        bases
            .iter()
            .map(|b| b.ops().iter().map(|s| spectral_measurement(s, 1e-12).expect("basis operators are Hermitian")).collect())
            .collect()
    } else {
        Vec::new()
    };
    let mut out = Vec::with_capacity(shape.iter().product());
    for idx in multi_indices(shape) {
        let mut x = p.rho0().matrix().clone();
        for k in 0..times {
            if k > 0 {
                x = p.channels()[k - 1].apply(&x).expect("dimension chain checked");
            }
            let ops = bases[k].ops();
            x = match kind {
                CorrKind::Right | CorrKind::Mh => x.matmul(&ops[idx[k]]),
                CorrKind::Left => ops[idx[k]].matmul(&x),
                CorrKind::Doubled | CorrKind::MhDoubled => ops[idx[k]].matmul(&x).matmul(&ops[idx[times + k]]),
                CorrKind::Lvn => luders_weighted(&luders[k][idx[k]], &x),
            };
        }
        let t = x.trace();
        out.push(match kind {
            CorrKind::Mh | CorrKind::MhDoubled | CorrKind::Lvn => Complex64::new(t.re, 0.0),
            _ => t,
        });
    }
    ArrayD::from_shape_vec(IxDyn(shape), out).expect("one value per index")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateKind {
    KdRight,
    KdLeft,
    KdDoubled,
    Mh,
    MhDoubled,
    Pdo,
}

impl StateKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::KdRight => "kd_right",
            Self::KdLeft => "kd_left",
            Self::KdDoubled => "kd_doubled",
            Self::Mh => "mh",
            Self::MhDoubled => "mh_doubled",
            Self::Pdo => "pdo",
        }
    }

    pub fn is_doubled(self) -> bool {
        matches!(self, Self::KdDoubled | Self::MhDoubled)
    }

    pub fn is_hermitian(self) -> bool {
        matches!(self, Self::Mh | Self::MhDoubled | Self::Pdo)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemporalStateOperator {
    kind: StateKind,
    /// Time labels of one block, latest first.
    times: Vec<usize>,
    /// System dimension per entry of `times`.
    dims: Vec<usize>,
    matrix: ComplexMatrix,
}

impl TemporalStateOperator {
    pub fn new(kind: StateKind, times: Vec<usize>, dims: Vec<usize>, matrix: ComplexMatrix) -> Result<Self> {
        if times.len() != dims.len() || times.is_empty() {
            return dim_err("one dimension per time label required");
        }
        let block: usize = dims.iter().product();
        let expected = if kind.is_doubled() { block * block } else { block };
        if !matrix.is_square() || matrix.rows() != expected {
            return dim_err(format!("state matrix is {}x{}, factors give {expected}", matrix.rows(), matrix.cols()));
        }
        Ok(Self { kind, times, dims, matrix })
    }

    pub fn kind(&self) -> StateKind {
        self.kind
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn times(&self) -> &[usize] {
        &self.times
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Per-factor dimensions in storage order.
    pub fn profile(&self) -> DimProfile {
        let mut dims = self.dims.clone();
        if self.kind.is_doubled() {
            dims.extend_from_slice(&self.dims);
        }
        DimProfile::new(dims).expect("dimensions validated at construction")
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// Eigenvalues of the Hermitian part, descending, with multiplicity.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eig(&self.matrix.hermitian_part(), 1e-9)
            .expect("Hermitian part")
            .iter()
            .flat_map(|g| std::iter::repeat_n(g.value, g.multiplicity()))
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        let kind = match self.kind {
            StateKind::KdRight => StateKind::KdLeft,
            StateKind::KdLeft => StateKind::KdRight,
            other => other,
        };
        Self {
            kind,
            times: self.times.clone(),
            dims: self.dims.clone(),
            matrix: self.matrix.adjoint(),
        }
    }
}

/// `Υ = (1/∏ d_f) Σ T · (⊗ σ)` over every factor `f`.
pub fn reconstruct_state(t: &CorrelatorTensor, bases: &[HsBasis]) -> Result<TemporalStateOperator> {
    let times = bases.len();
    let doubled = t.kind.is_doubled();
    let block: Vec<usize> = bases.iter().map(HsBasis::len).collect();
    let expected: Vec<usize> = if doubled { block.iter().chain(&block).copied().collect() } else { block };
    if t.values.shape() != expected.as_slice() {
        return dim_err(format!("correlator shape {:?}, bases need {:?}", t.values.shape(), expected));
    }
    // factor f ↦ (basis, tensor axis), latest time first within each block
    let mut factors: Vec<(&HsBasis, usize)> = (0..times).rev().map(|k| (&bases[k], k)).collect();
    if doubled {
        factors.extend((0..times).rev().map(|k| (&bases[k], times + k)));
    }
    let norm: f64 = factors.iter().map(|(b, _)| b.dim() as f64).product();

    fn build(factors: &[(&HsBasis, usize)], f: usize, idx: &mut [usize], t: &ArrayD<Complex64>) -> ComplexMatrix {
        if f == factors.len() {
            return ComplexMatrix::new(1, 1, vec![t[IxDyn(idx)]]).expect("1x1");
        }
        let (basis, axis) = factors[f];
        let mut acc: Option<ComplexMatrix> = None;
        for (mu, sigma) in basis.ops().iter().enumerate() {
            idx[axis] = mu;
            let term = kron(sigma, &build(factors, f + 1, idx, t));
            match acc.as_mut() {
                Some(a) => a.add_assign(&term),
                None => acc = Some(term),
            }
        }
        acc.expect("bases are nonempty")
    }

    let mut idx = vec![0; expected.len()];
    let matrix = build(&factors, 0, &mut idx, &t.values).scale_real(1.0 / norm);
    TemporalStateOperator::new(
        t.kind.state_kind(),
        (0..times).rev().collect(),
        bases.iter().rev().map(HsBasis::dim).collect(),
        matrix,
    )
}

/// Correlators of a state: `Tr[Υ (⊗σ)]`, axes in ascending time.
pub fn state_correlators(y: &TemporalStateOperator, bases: &[HsBasis]) -> Result<CorrelatorTensor> {
    let times = y.times.len();
    if bases.len() != times {
        return dim_err("one basis per time factor required");
    }
    // bases are given in ascending order of the state's time labels
    let block: Vec<usize> = bases.iter().map(HsBasis::len).collect();
    let doubled = y.kind.is_doubled();
    let shape: Vec<usize> = if doubled { block.iter().chain(&block).copied().collect() } else { block };
    let mut out = Vec::new();
    for idx in multi_indices(&shape) {
        let mut ops: Vec<&ComplexMatrix> = (0..times).rev().map(|k| &bases[k].ops()[idx[k]]).collect();
        if doubled {
            ops.extend((0..times).rev().map(|k| &bases[k].ops()[idx[times + k]]));
        }
        out.push(kron_all(ops).trace_product(&y.matrix));
    }
    let kind = match y.kind {
        StateKind::KdRight => CorrKind::Right,
        StateKind::KdLeft => CorrKind::Left,
        StateKind::KdDoubled => CorrKind::Doubled,
        StateKind::Mh => CorrKind::Mh,
        StateKind::MhDoubled => CorrKind::MhDoubled,
        StateKind::Pdo => CorrKind::Lvn,
    };
    Ok(CorrelatorTensor {
        kind,
        values: ArrayD::from_shape_vec(IxDyn(&shape), out).expect("one value per index"),
    })
}

/// `(N ⊗ I_A)(I_C ⊗ M)` for `N` on `H_C ⊗ H_B` and `M` on `H_B ⊗ H_A`.
pub fn star(n: &ComplexMatrix, m: &ComplexMatrix, shared_dim: usize) -> Result<ComplexMatrix> {
    if !n.is_square() || !m.is_square() || shared_dim == 0 {
        return dim_err("star product needs square operands");
    }
    if n.rows() % shared_dim != 0 || m.rows() % shared_dim != 0 {
        return dim_err(format!(
            "shared dimension {shared_dim} does not divide operand sizes {} and {}",
            n.rows(),
            m.rows()
        ));
    }
    let c = n.rows() / shared_dim;
    let a = m.rows() / shared_dim;
    Ok(kron(n, &ComplexMatrix::identity(a)).matmul(&kron(&ComplexMatrix::identity(c), m)))
}

fn block_labels(p: &MultiTimeProcess) -> (Vec<usize>, Vec<usize>) {
    let dims = p.dims();
    ((0..dims.len()).rev().collect(), dims.into_iter().rev().collect())
}

/// `Υ→ = J[E_n] ⋆ … ⋆ J[E_1] ⋆ ρ₀`
pub fn kd_state_recursive(p: &MultiTimeProcess) -> Result<TemporalStateOperator> {
    let mut y = p.rho0().matrix().clone();
    for ch in p.channels() {
        y = star(&ch.jamiolkowski(), &y, ch.d_in())?;
    }
    let (times, dims) = block_labels(p);
    TemporalStateOperator::new(StateKind::KdRight, times, dims, y)
}

/// `(Υ + Υ†)/2`
pub fn mh_state(y: &TemporalStateOperator) -> Result<TemporalStateOperator> {
    let kind = match y.kind {
        StateKind::KdRight | StateKind::KdLeft => StateKind::Mh,
        StateKind::KdDoubled => StateKind::MhDoubled,
        other => return Err(Error::WrongKind(other.name().into())),
    };
    Ok(TemporalStateOperator {
        kind,
        times: y.times.clone(),
        dims: y.dims.clone(),
        matrix: y.matrix.hermitian_part(),
    })
}

/// Pseudo-density operator by the Jordan recursion
/// `R_k = ½[(J_k ⊗ I)(I ⊗ R_{k−1}) + (I ⊗ R_{k−1})(J_k ⊗ I)]`, `R_0 = ρ₀`.
pub fn pdo(p: &MultiTimeProcess) -> Result<TemporalStateOperator> {
    let mut r = p.rho0().matrix().clone();
    for ch in p.channels() {
        let a = r.rows() / ch.d_in();
        let j = kron(&ch.jamiolkowski(), &ComplexMatrix::identity(a));
        let rest = kron(&ComplexMatrix::identity(ch.d_out()), &r);
        r = (&j.matmul(&rest) + &rest.matmul(&j)).scale_real(0.5);
    }
    let (times, dims) = block_labels(p);
    TemporalStateOperator::new(StateKind::Pdo, times, dims, r)
}

/// `Tr[(⊗Π) Υ]` with one projector per factor in storage order
/// (latest time first; doubled kinds list the ket block then the bra block).
pub fn born_eval(y: &TemporalStateOperator, projectors: &[ComplexMatrix]) -> Result<Complex64> {
    let profile = y.profile();
    if projectors.len() != profile.len() {
        return dim_err(format!("{} projectors for {} factors", projectors.len(), profile.len()));
    }
    for (f, (p, &d)) in projectors.iter().zip(profile.dims()).enumerate() {
        if !p.is_square() || p.rows() != d {
            return dim_err(format!("projector for factor {f} must be {d}x{d}"));
        }
    }
    Ok(kron_all(projectors).trace_product(&y.matrix))
}

/// [`born_eval`] with projectors given per time in ascending order.
pub fn born_eval_ascending(y: &TemporalStateOperator, ket: &[ComplexMatrix], bra: Option<&[ComplexMatrix]>) -> Result<Complex64> {
    let mut factors: Vec<ComplexMatrix> = ket.iter().rev().cloned().collect();
    if let Some(b) = bra {
        factors.extend(b.iter().rev().cloned());
    }
    born_eval(y, &factors)
}

/// Partial trace keeping the listed time labels (both blocks for doubled kinds).
pub fn reduce_state(y: &TemporalStateOperator, keep_times: &[usize]) -> Result<TemporalStateOperator> {
    if keep_times.is_empty() {
        return Err(Error::EmptySelection("reduction must keep at least one time".into()));
    }
    for t in keep_times {
        if !y.times.contains(t) {
            return Err(Error::InvalidParameter(format!("time t{t} is not a factor of this state")));
        }
    }
    let block = y.times.len();
    let kept: Vec<usize> = (0..block).filter(|&f| keep_times.contains(&y.times[f])).collect();
    let mut factors = kept.clone();
    if y.kind.is_doubled() {
        factors.extend(kept.iter().map(|f| f + block));
    }
    let matrix = partial_trace(&y.matrix, &y.profile(), &factors)?;
    Ok(TemporalStateOperator {
        kind: y.kind,
        times: kept.iter().map(|&f| y.times[f]).collect(),
        dims: kept.iter().map(|&f| y.dims[f]).collect(),
        matrix,
    })
}

/// Traces one block of a doubled state: tracing `Ket` leaves the right
/// KD (or MH) state, tracing `Bra` the left one.
pub fn trace_block(y: &TemporalStateOperator, traced: Block) -> Result<TemporalStateOperator> {
    let block = y.times.len();
    let (kind, keep): (StateKind, Vec<usize>) = match (y.kind, traced) {
        (StateKind::KdDoubled, Block::Ket) => (StateKind::KdRight, (block..2 * block).collect()),
        (StateKind::KdDoubled, Block::Bra) => (StateKind::KdLeft, (0..block).collect()),
        (StateKind::MhDoubled, Block::Ket) => (StateKind::Mh, (block..2 * block).collect()),
        (StateKind::MhDoubled, Block::Bra) => (StateKind::Mh, (0..block).collect()),
        (other, _) => return Err(Error::WrongKind(other.name().into())),
    };
    let matrix = partial_trace(&y.matrix, &y.profile(), &keep)?;
    Ok(TemporalStateOperator {
        kind,
        times: y.times.clone(),
        dims: y.dims.clone(),
        matrix,
    })
}

/// The physical state `ρ_{t_k}` carried by a temporal state.
pub fn fixed_time_state(y: &TemporalStateOperator, time: usize) -> Result<ComplexMatrix> {
    let r = reduce_state(y, &[time])?;
    if r.kind.is_doubled() {
        let profile = r.profile();
        partial_trace(&r.matrix, &profile, &[1])
    } else {
        Ok(r.matrix)
    }
}

/// Checks the unit-trace invariant.
pub fn trace_defect(y: &TemporalStateOperator) -> f64 {
    (y.trace() - ONE).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{DensityOperator, QuantumChannel};
    use crate::linops::{c, paulis::*};
    use crate::measurements::hs_basis;

    fn qubit_bases(times: usize) -> Vec<HsBasis> {
        vec![hs_basis(2).unwrap(); times]
    }

    fn identity_process(rho: DensityOperator) -> MultiTimeProcess {
        MultiTimeProcess::new(rho, vec![QuantumChannel::identity(2)]).unwrap()
    }

    #[test]
    fn star_examples() {
        let i4 = ComplexMatrix::identity(4);
        assert!(star(&i4, &i4, 2).unwrap().approx_eq(&ComplexMatrix::identity(8), 0.0));
        let rho = ComplexMatrix::unit(2, 0, 0);
        let s = star(&swap(), &rho, 2).unwrap();
        let mut expected = ComplexMatrix::zeros(4, 4);
        expected[(0, 0)] = ONE; // |00⟩⟨00|
        expected[(1, 2)] = ONE; // |01⟩⟨10|
        assert!(s.approx_eq(&expected, 0.0));
        assert!(star(&i4, &ComplexMatrix::identity(3), 2).is_err());
    }

    #[test]
    fn recursive_state_examples() {
        let rho = DensityOperator::new(ComplexMatrix::from_rows(&[vec![c(0.7, 0.0), c(0.1, -0.2)], vec![c(0.1, 0.2), c(0.3, 0.0)]]).unwrap()).unwrap();
        let p0 = MultiTimeProcess::new(rho.clone(), vec![]).unwrap();
        assert!(kd_state_recursive(&p0).unwrap().matrix().approx_eq(rho.matrix(), 0.0));
        let y = kd_state_recursive(&identity_process(rho.clone())).unwrap();
        let expected = swap().matmul(&kron(&ComplexMatrix::identity(2), rho.matrix()));
        assert!(y.matrix().approx_eq(&expected, 1e-15));
        assert!((y.trace() - ONE).norm() < 1e-12);
    }

    #[test]
    fn lvn_correlators_of_maximally_mixed_qubit() {
        let p = identity_process(DensityOperator::maximally_mixed(2));
        let bases = qubit_bases(2);
        for method in [Method::Direct, Method::ViaDistributions] {
            let t = correlators(&p, &bases, CorrKind::Lvn, method).unwrap();
            for mu in 0..4 {
                for nu in 0..4 {
                    let expected = if mu == nu { 1.0 } else { 0.0 };
                    assert!((t.get(&[mu, nu]) - c(expected, 0.0)).norm() < 1e-12);
                }
            }
            let y = reconstruct_state(&t, &bases).unwrap();
            assert!(y.matrix().approx_eq(&swap().scale_real(0.5), 1e-12));
            let ev = y.eigenvalues();
            assert!((ev[0] - 0.5).abs() < 1e-12 && (ev[3] + 0.5).abs() < 1e-12);
        }
        assert!(pdo(&p).unwrap().matrix().approx_eq(&swap().scale_real(0.5), 1e-12));
    }

    #[test]
    fn one_time_bloch_is_state() {
        let rho = DensityOperator::pure(&ket_y_plus()).unwrap();
        let p = MultiTimeProcess::new(rho.clone(), vec![]).unwrap();
        let bases = qubit_bases(1);
        let t = correlators(&p, &bases, CorrKind::Right, Method::Direct).unwrap();
        assert!(reconstruct_state(&t, &bases).unwrap().matrix().approx_eq(rho.matrix(), 1e-12));
    }

    #[test]
    fn reductions_and_blocks() {
        let rho = DensityOperator::pure(&ket_plus()).unwrap();
        let u = QuantumChannel::unitary(hadamard().matmul(&z())).unwrap();
        let p = MultiTimeProcess::new(rho.clone(), vec![u.clone()]).unwrap();
        let y = kd_state_recursive(&p).unwrap();
        let r1 = fixed_time_state(&y, 1).unwrap();
        assert!(r1.approx_eq(&u.apply(rho.matrix()).unwrap(), 1e-12));
        assert_eq!(reduce_state(&y, &[0, 1]).unwrap(), y);
        assert!(reduce_state(&y, &[]).is_err());

        let bases = qubit_bases(2);
        let d = reconstruct_state(&correlators(&p, &bases, CorrKind::Doubled, Method::Direct).unwrap(), &bases).unwrap();
        assert!(trace_block(&d, Block::Ket).unwrap().matrix().approx_eq(y.matrix(), 1e-12));
        assert!(trace_block(&d, Block::Bra).unwrap().matrix().approx_eq(y.adjoint().matrix(), 1e-12));
        assert!(fixed_time_state(&d, 0).unwrap().approx_eq(rho.matrix(), 1e-12));
        assert!((d.trace() - ONE).norm() < 1e-12);
    }

    #[test]
    fn pdo_on_eigenstate_chain() {
        let p = identity_process(DensityOperator::pure(&ket0()).unwrap());
        let r = pdo(&p).unwrap();
        let zz = MeasurementSchedule::from_observables(&[z(), z()], 1e-12).unwrap();
        let q = quasiprob::lvn(&p, &zz).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                let v = born_eval_ascending(&r, &[zz.steps()[0].projector(a).clone(), zz.steps()[1].projector(b).clone()], None).unwrap();
                assert!((v - q.get(&[a, b])).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn born_identity_is_trace() {
        let p = identity_process(DensityOperator::maximally_mixed(2));
        let y = kd_state_recursive(&p).unwrap();
        let v = born_eval(&y, &[ComplexMatrix::identity(2), ComplexMatrix::identity(2)]).unwrap();
        assert!((v - ONE).norm() < 1e-12);
        assert!(born_eval(&y, &[ComplexMatrix::identity(2)]).is_err());
    }

    #[test]
    fn mh_state_kinds() {
        let p = identity_process(DensityOperator::maximally_mixed(2));
        let y = kd_state_recursive(&p).unwrap();
        let m = mh_state(&y).unwrap();
        assert_eq!(m.kind(), StateKind::Mh);
        assert!(mh_state(&m).is_err());
        assert!(m.matrix().approx_eq(pdo(&p).unwrap().matrix(), 1e-12));
    }

    #[test]
    fn three_time_pdo_matches_sequential_correlators() {
        let mut r = crate::random::rng(3);
        let p = crate::random::random_process(&[2, 2, 2], false, &mut r).unwrap();
        let bases = qubit_bases(3);
        let direct = correlators(&p, &bases, CorrKind::Lvn, Method::Direct).unwrap();
        let via = correlators(&p, &bases, CorrKind::Lvn, Method::ViaDistributions).unwrap();
        assert!(direct.max_diff(&via) < 1e-12);
        let y = reconstruct_state(&direct, &bases).unwrap();
        assert!(y.matrix().approx_eq(pdo(&p).unwrap().matrix(), 1e-12));
    }
}
