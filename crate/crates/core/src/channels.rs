//! CPTP maps in Kraus form.
//!
//! A [`QuantumChannel`] acts on arbitrary operators, not only density
//! operators: quasiprobability evaluation pushes products such as `ρ Π`
//! through the channel chain.

use num_complex::Complex64;

use crate::error::{dim_err, Error, Result};
use crate::linops::{gram_schmidt, hermitian_eig, kron, unitarity_defect, ComplexMatrix, ONE, ZERO};

/// Tolerance used when a constructor checks trace preservation or unitarity.
pub const CPTP_TOL: f64 = 1e-9;

/// A validated density operator: Hermitian, unit trace, no eigenvalue below `-1e-9`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator(ComplexMatrix);

impl DensityOperator {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        Self::with_tol(m, CPTP_TOL)
    }

    pub fn with_tol(m: ComplexMatrix, tol: f64) -> Result<Self> {
        if !m.is_square() {
            return dim_err("density operator must be square");
        }
        let groups = hermitian_eig(&m, tol)?;
        let min = groups.iter().map(|g| g.value).fold(f64::INFINITY, f64::min);
        if min < -tol {
            return Err(Error::InvalidParameter(format!(
                "density operator has negative eigenvalue {min:.3e}"
            )));
        }
        let tr = m.trace();
        if (tr - ONE).norm() > tol {
            return Err(Error::InvalidParameter(format!(
                "density operator trace is {:.6}{:+.6}i, expected 1",
                tr.re, tr.im
            )));
        }
        Ok(Self(m))
    }

    /// `|ψ⟩⟨ψ|` for a (normalised on the fly) state vector.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let norm = crate::linops::vec_norm(psi);
        if norm == 0.0 {
            return Err(Error::InvalidParameter("zero state vector".into()));
        }
        let v: Vec<Complex64> = psi.iter().map(|z| z / norm).collect();
        Ok(Self(ComplexMatrix::projector(&v)))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self(ComplexMatrix::identity(d).scale_real(1.0 / d as f64))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self(kron(&self.0, &other.0))
    }

    /// Convex combination `λ self + (1−λ) other`.
    pub fn mix(&self, other: &Self, lambda: f64) -> Result<Self> {
        if self.dim() != other.dim() {
            return dim_err("mixing density operators of different dimension");
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidParameter(format!("mixing weight {lambda} outside [0,1]")));
        }
        Ok(Self(&self.0.scale_real(lambda) + &other.0.scale_real(1.0 - lambda)))
    }
}

impl AsRef<ComplexMatrix> for DensityOperator {
    fn as_ref(&self) -> &ComplexMatrix {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumChannel {
    d_in: usize,
    d_out: usize,
    kraus: Vec<ComplexMatrix>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CptpReport {
    pub trace_preserving: bool,
    /// `‖Σ K†K − I‖_max`
    pub defect: f64,
}

/// Checks trace preservation of a Kraus set.
pub fn validate_cptp(c: &QuantumChannel, tol: f64) -> CptpReport {
    let defect = c.tp_defect();
    CptpReport {
        trace_preserving: defect <= tol,
        defect,
    }
}

impl QuantumChannel {
    /// Builds a channel and enforces trace preservation within [`CPTP_TOL`].
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let c = Self::from_kraus_unchecked(kraus)?;
        let report = validate_cptp(&c, CPTP_TOL);
        if !report.trace_preserving {
            return Err(Error::InvalidParameter(format!(
                "Kraus set is not trace preserving (defect {:.3e})",
                report.defect
            )));
        }
        Ok(c)
    }

    /// Shape checks only; trace preservation is left to [`validate_cptp`].
    pub fn from_kraus_unchecked(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let first = kraus.first().ok_or(Error::EmptyKraus)?;
        let (d_out, d_in) = (first.rows(), first.cols());
        if kraus.iter().any(|k| k.rows() != d_out || k.cols() != d_in) {
            return dim_err("Kraus operators of different shapes");
        }
        Ok(Self { d_in, d_out, kraus })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            d_in: d,
            d_out: d,
            kraus: vec![ComplexMatrix::identity(d)],
        }
    }

    pub fn unitary(u: ComplexMatrix) -> Result<Self> {
        let defect = unitarity_defect(&u);
        if defect > CPTP_TOL {
            return Err(Error::InvalidParameter(format!("matrix is not unitary (defect {defect:.3e})")));
        }
        Ok(Self {
            d_in: u.cols(),
            d_out: u.rows(),
            kraus: vec![u],
        })
    }

    /// `ω Tr(·)`
    pub fn replacement(omega: &DensityOperator, d_in: usize) -> Self {
        let groups = hermitian_eig(omega.matrix(), CPTP_TOL).expect("density operators are Hermitian");
        let mut kraus = Vec::new();
        for g in groups.iter().filter(|g| g.value > 0.0) {
            let amp = g.value.sqrt();
            for v in &g.vectors {
                for j in 0..d_in {
                    let mut e = vec![ZERO; d_in];
                    e[j] = ONE;
                    kraus.push(ComplexMatrix::outer(v, &e).scale_real(amp));
                }
            }
        }
        Self {
            d_in,
            d_out: omega.dim(),
            kraus,
        }
    }

    /// `x ↦ Σ_k Tr[M_k(x)] ω_k`
    pub fn measure_replace(instrument: &Instrument, outputs: &[DensityOperator]) -> Result<Self> {
        if instrument.branches().len() != outputs.len() {
            return Err(Error::InvalidParameter(format!(
                "{} instrument branches but {} output states",
                instrument.branches().len(),
                outputs.len()
            )));
        }
        let d_out = outputs[0].dim();
        if outputs.iter().any(|w| w.dim() != d_out) {
            return dim_err("output states of different dimension");
        }
        let mut kraus = Vec::new();
        for (branch, omega) in instrument.branches().iter().zip(outputs) {
            let replace = Self::replacement(omega, branch.kraus[0].rows());
            for e in &branch.kraus {
                for r in &replace.kraus {
                    kraus.push(r.matmul(e));
                }
            }
        }
        Ok(Self {
            d_in: instrument.dim_in(),
            d_out,
            kraus,
        })
    }

    /// `(1−p) x + p Tr(x) I/d`
    pub fn depolarizing(d: usize, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("depolarizing probability {p} outside [0,1]")));
        }
        let mut kraus = Vec::new();
        if p < 1.0 {
            kraus.push(ComplexMatrix::identity(d).scale_real((1.0 - p).sqrt()));
        }
        if p > 0.0 {
            let amp = (p / d as f64).sqrt();
            for i in 0..d {
                for j in 0..d {
                    kraus.push(ComplexMatrix::unit(d, i, j).scale_real(amp));
                }
            }
        }
        Ok(Self { d_in: d, d_out: d, kraus })
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn is_square(&self) -> bool {
        self.d_in == self.d_out
    }

    /// The unitary, when the channel is a single square Kraus operator.
    pub fn as_unitary(&self) -> Option<&ComplexMatrix> {
        match self.kraus.as_slice() {
            [u] if self.is_square() && unitarity_defect(u) <= CPTP_TOL => Some(u),
            _ => None,
        }
    }

    fn tp_defect(&self) -> f64 {
        let sum: ComplexMatrix = self.kraus.iter().map(|k| k.adjoint().matmul(k)).sum();
        sum.max_diff(&ComplexMatrix::identity(self.d_in))
    }

    /// `Σ K x K†`
    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.rows() != self.d_in || x.cols() != self.d_in {
            return dim_err(format!(
                "channel input is {0}x{0}, operator is {1}x{2}",
                self.d_in,
                x.rows(),
                x.cols()
            ));
        }
        Ok(self
            .kraus
            .iter()
            .map(|k| k.matmul(x).matmul(&k.adjoint()))
            .sum())
    }

    /// Hilbert–Schmidt adjoint `Σ K† x K`.
    pub fn adjoint_apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.rows() != self.d_out || x.cols() != self.d_out {
            return dim_err(format!(
                "adjoint channel input is {0}x{0}, operator is {1}x{2}",
                self.d_out,
                x.rows(),
                x.cols()
            ));
        }
        Ok(self
            .kraus
            .iter()
            .map(|k| k.adjoint().matmul(x).matmul(k))
            .sum())
    }

    /// Kraus union `{√λ K} ∪ {√(1−λ) L}`.
    pub fn mix(&self, other: &Self, lambda: f64) -> Result<Self> {
        if (self.d_in, self.d_out) != (other.d_in, other.d_out) {
            return dim_err("mixing channels of different shapes");
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidParameter(format!("mixing weight {lambda} outside [0,1]")));
        }
        let a = lambda.sqrt();
        let b = (1.0 - lambda).sqrt();
        let kraus = self
            .kraus
            .iter()
            .map(|k| k.scale_real(a))
            .chain(other.kraus.iter().map(|k| k.scale_real(b)))
            .collect();
        Ok(Self {
            d_in: self.d_in,
            d_out: self.d_out,
            kraus,
        })
    }

    /// Parallel composition `self ⊗ other`.
    pub fn tensor(&self, other: &Self) -> Self {
        let kraus = self
            .kraus
            .iter()
            .flat_map(|k| other.kraus.iter().map(move |l| kron(k, l)))
            .collect();
        Self {
            d_in: self.d_in * other.d_in,
            d_out: self.d_out * other.d_out,
            kraus,
        }
    }

    /// `J = Σ_{k,l} E(|k⟩⟨l|) ⊗ |l⟩⟨k|` on `H_out ⊗ H_in`.
    pub fn jamiolkowski(&self) -> ComplexMatrix {
        let mut j = ComplexMatrix::zeros(self.d_out * self.d_in, self.d_out * self.d_in);
        for k in 0..self.d_in {
            for l in 0..self.d_in {
                let image = self
                    .apply(&ComplexMatrix::unit(self.d_in, k, l))
                    .expect("unit operator has the input shape");
                j.add_assign(&kron(&image, &ComplexMatrix::unit(self.d_in, l, k)));
            }
        }
        j
    }

    /// Unitary dilation on `H_sys ⊗ H_env` with the environment starting in `|0⟩`.
    pub fn stinespring(&self) -> Result<Dilation> {
        if !self.is_square() {
            return Err(Error::Rectangular(format!(
                "cannot dilate a {}→{} channel on one system register",
                self.d_in, self.d_out
            )));
        }
        let d = self.d_in;
        let r = self.kraus.len();
        let total = d * r;
        // V|j⟩ = Σ_x (K_x|j⟩) ⊗ |x⟩ fills the env-|0⟩ columns.
        let mut columns: Vec<Option<Vec<Complex64>>> = vec![None; total];
        for j in 0..d {
            let mut col = vec![ZERO; total];
            for (x, k) in self.kraus.iter().enumerate() {
                for i in 0..d {
                    col[i * r + x] = k[(i, j)];
                }
            }
            columns[j * r] = Some(col);
        }
        let isometry: Vec<Vec<Complex64>> = columns.iter().flatten().cloned().collect();
        let orth = gram_schmidt(&isometry);
        if orth.len() != d {
            return Err(Error::Dilation("Kraus set does not define an isometry".into()));
        }
        // complete with canonical basis vectors, swept in index order
        let mut basis = isometry.clone();
        let mut completion = Vec::new();
        for e in 0..total {
            if basis.len() == total {
                break;
            }
            let mut v = vec![ZERO; total];
            v[e] = ONE;
            let mut candidate = basis.clone();
            candidate.push(v);
            let ortho = gram_schmidt(&candidate);
            if ortho.len() == candidate.len() {
                let new = ortho.last().expect("nonempty").clone();
                basis.push(new.clone());
                completion.push(new);
            }
        }
        if basis.len() != total {
            return Err(Error::Dilation("could not complete the isometry to a unitary".into()));
        }
        let mut fill = completion.into_iter();
        let cols: Vec<Vec<Complex64>> = columns
            .into_iter()
            .map(|c| c.unwrap_or_else(|| fill.next().expect("completion size matches free columns")))
            .collect();
        let u = ComplexMatrix::from_columns(&cols)?;
        let defect = unitarity_defect(&u);
        if defect > 1e-10 {
            return Err(Error::Dilation(format!("completed dilation not unitary (defect {defect:.3e})")));
        }
        let mut env = ComplexMatrix::zeros(r, r);
        env[(0, 0)] = ONE;
        Ok(Dilation {
            unitary: u,
            sys_dim: d,
            env_dim: r,
            env_state: DensityOperator(env),
        })
    }
}

/// `later ∘ earlier`
pub fn compose(later: &QuantumChannel, earlier: &QuantumChannel) -> Result<QuantumChannel> {
    if earlier.d_out != later.d_in {
        return dim_err(format!(
            "cannot compose: earlier outputs dimension {}, later expects {}",
            earlier.d_out, later.d_in
        ));
    }
    let kraus = later
        .kraus
        .iter()
        .flat_map(|l| earlier.kraus.iter().map(move |e| l.matmul(e)))
        .collect();
    Ok(QuantumChannel {
        d_in: earlier.d_in,
        d_out: later.d_out,
        kraus,
    })
}

/// Stinespring dilation of a square channel.
#[derive(Debug, Clone)]
pub struct Dilation {
    /// Unitary on `H_sys ⊗ H_env` (system index most significant).
    pub unitary: ComplexMatrix,
    pub sys_dim: usize,
    pub env_dim: usize,
    pub env_state: DensityOperator,
}

impl Dilation {
    /// `Tr_env[u (x ⊗ |0⟩⟨0|) u†]`
    pub fn reduced_action(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        let big = kron(x, self.env_state.matrix());
        let out = self.unitary.matmul(&big).matmul(&self.unitary.adjoint());
        let profile = crate::linops::DimProfile::new(vec![self.sys_dim, self.env_dim])?;
        crate::linops::partial_trace(&out, &profile, &[0])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstrumentBranch {
    pub label: String,
    pub kraus: Vec<ComplexMatrix>,
}

/// A quantum instrument: CP trace-nonincreasing branches summing to a CPTP map.
#[derive(Debug, Clone, PartialEq)]
pub struct Instrument {
    branches: Vec<InstrumentBranch>,
}

impl Instrument {
    pub fn new(branches: Vec<InstrumentBranch>) -> Result<Self> {
        let all: Vec<ComplexMatrix> = branches.iter().flat_map(|b| b.kraus.iter().cloned()).collect();
        if branches.iter().any(|b| b.kraus.is_empty()) {
            return Err(Error::EmptyKraus);
        }
        // reuse the channel checks on the total map
        QuantumChannel::new(all)?;
        Ok(Self { branches })
    }

    /// Lüders instrument `M_k(x) = Π_k x Π_k` of a projective measurement.
    pub fn projective(m: &crate::measurements::ProjectiveMeasurement) -> Self {
        Self {
            branches: m
                .outcomes()
                .iter()
                .map(|o| InstrumentBranch {
                    label: format!("{}", o.value),
                    kraus: vec![o.projector.clone()],
                })
                .collect(),
        }
    }

    pub fn branches(&self) -> &[InstrumentBranch] {
        &self.branches
    }

    pub fn dim_in(&self) -> usize {
        self.branches[0].kraus[0].cols()
    }

    /// `M_k(x)` for branch `k`.
    pub fn apply_branch(&self, k: usize, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        let b = self
            .branches
            .get(k)
            .ok_or(Error::IndexOutOfRange { index: k, len: self.branches.len() })?;
        if x.rows() != self.dim_in() || x.cols() != self.dim_in() {
            return dim_err("instrument input dimension mismatch");
        }
        Ok(b.kraus.iter().map(|e| e.matmul(x).matmul(&e.adjoint())).sum())
    }
}

/// Parameters for [`build_channel`].
#[derive(Debug, Clone)]
pub enum ChannelSpec {
    Unitary(ComplexMatrix),
    Replacement { omega: DensityOperator, d_in: usize },
    MeasureReplace { instrument: Instrument, outputs: Vec<DensityOperator> },
    Depolarizing { d: usize, p: f64 },
}

pub fn build_channel(spec: ChannelSpec) -> Result<QuantumChannel> {
    match spec {
        ChannelSpec::Unitary(u) => QuantumChannel::unitary(u),
        ChannelSpec::Replacement { omega, d_in } => Ok(QuantumChannel::replacement(&omega, d_in)),
        ChannelSpec::MeasureReplace { instrument, outputs } => QuantumChannel::measure_replace(&instrument, &outputs),
        ChannelSpec::Depolarizing { d, p } => QuantumChannel::depolarizing(d, p),
    }
}
