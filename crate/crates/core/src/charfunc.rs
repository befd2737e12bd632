//! Temporal KD characteristic functions and their interferometric measurement.
//!
//! Phase points follow the distribution axis layout: one phase per time in
//! ascending order, doubled kinds listing the ket phases `v` before the bra
//! phases `u`.

use std::sync::OnceLock;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::channels::{DensityOperator, QuantumChannel};
use crate::error::{dim_err, Error, Result};
use crate::linops::{condition_number, exp_i_hermitian, kron, kron_all, paulis, partial_trace, ComplexMatrix, DimProfile, ONE, ZERO};
use crate::measurements::{spectral_measurement, MeasurementSchedule};
use crate::quasiprob::{Axis, Block, DistKind, MultiTimeProcess, QuasiDistribution};

/// Largest accepted condition number of a per-axis transform matrix.
pub const MAX_CONDITION: f64 = 1e6;

const OBS_TOL: f64 = 1e-9;

/// One Hermitian observable per time step.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSchedule(Vec<ComplexMatrix>);

impl ObservableSchedule {
    pub fn new(observables: Vec<ComplexMatrix>) -> Result<Self> {
        if observables.is_empty() {
            return Err(Error::EmptySelection("observable schedule has no steps".into()));
        }
        for (k, o) in observables.iter().enumerate() {
            if !o.is_square() {
                return dim_err(format!("observable at t{k} is not square"));
            }
            let defect = o.hermiticity_defect();
            if defect > OBS_TOL {
                return Err(Error::NotHermitian { defect, tol: OBS_TOL });
            }
        }
        Ok(Self(observables))
    }

    pub fn observables(&self) -> &[ComplexMatrix] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Spectral measurements of the observables.
    pub fn schedule(&self) -> Result<MeasurementSchedule> {
        MeasurementSchedule::from_observables(&self.0, 1e-12)
    }

    /// Distinct eigenvalues per step, descending.
    pub fn spectra(&self) -> Result<Vec<Vec<f64>>> {
        self.0
            .iter()
            .map(|o| spectral_measurement(o, 1e-12).map(|m| m.values()))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CharKind {
    Right,
    Left,
    Doubled,
}

impl CharKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Right => "right",
            Self::Left => "left",
            Self::Doubled => "doubled",
        }
    }
}

/// Observables entering the phase gates.
#[derive(Debug, Clone, Copy)]
pub enum CharSetting<'a> {
    /// `e^{−iB_k u_k}` on the bra side.
    Right(&'a ObservableSchedule),
    /// `e^{+iA_k v_k}` on the ket side.
    Left(&'a ObservableSchedule),
    Doubled {
        ket: &'a ObservableSchedule,
        bra: &'a ObservableSchedule,
    },
}

impl CharSetting<'_> {
    pub fn kind(&self) -> CharKind {
        match self {
            Self::Right(_) => CharKind::Right,
            Self::Left(_) => CharKind::Left,
            Self::Doubled { .. } => CharKind::Doubled,
        }
    }

    fn ket(&self) -> Option<&ObservableSchedule> {
        match self {
            Self::Left(s) => Some(s),
            Self::Doubled { ket, .. } => Some(ket),
            Self::Right(_) => None,
        }
    }

    fn bra(&self) -> Option<&ObservableSchedule> {
        match self {
            Self::Right(s) => Some(s),
            Self::Doubled { bra, .. } => Some(bra),
            Self::Left(_) => None,
        }
    }

    /// Phase-point length for a process with `times` time steps.
    pub fn point_len(&self, times: usize) -> usize {
        match self {
            Self::Doubled { .. } => 2 * times,
            _ => times,
        }
    }

    fn check(&self, p: &MultiTimeProcess) -> Result<()> {
        let dims = p.dims();
        for s in [self.ket(), self.bra()].into_iter().flatten() {
            if s.len() != dims.len() {
                return dim_err(format!("{} observables for {} times", s.len(), dims.len()));
            }
            for (k, (o, d)) in s.observables().iter().zip(&dims).enumerate() {
                if o.rows() != *d {
                    return dim_err(format!("observable at t{k} acts on dimension {}, system has {d}", o.rows()));
                }
            }
        }
        Ok(())
    }

    /// `(ket phase gate, bra phase gate)` at time `k`, with `sign` multiplying every exponent.
    fn phase_gates(&self, point: &[f64], times: usize, k: usize, sign: f64) -> Result<(Option<ComplexMatrix>, Option<ComplexMatrix>)> {
        let ket = match self.ket() {
            Some(s) => Some(exp_i_hermitian(&s.observables()[k], sign * point[k], OBS_TOL)?),
            None => None,
        };
        let bra = match self {
            Self::Right(s) => Some(exp_i_hermitian(&s.observables()[k], -sign * point[k], OBS_TOL)?),
            Self::Doubled { bra, .. } => Some(exp_i_hermitian(&bra.observables()[k], -sign * point[times + k], OBS_TOL)?),
            Self::Left(_) => None,
        };
        Ok((ket, bra))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharSamples {
    pub kind: CharKind,
    pub grid: Vec<Vec<f64>>,
    pub values: Vec<Complex64>,
}

/// `Tr[e^{iA_n v_n} E_n(… e^{iA_0 v_0} ρ e^{−iB_0 u_0} …) e^{−iB_n u_n}]`,
/// dropping whichever side the kind does not carry.
pub fn char_value(p: &MultiTimeProcess, setting: CharSetting<'_>, point: &[f64]) -> Result<Complex64> {
    setting.check(p)?;
    let times = p.times();
    if point.len() != setting.point_len(times) {
        return dim_err(format!("phase point has {} entries, expected {}", point.len(), setting.point_len(times)));
    }
    // every gate is the identity: the value is Tr ρ_n = 1 by trace preservation
    if point.iter().all(|&u| u == 0.0) {
        return Ok(ONE);
    }
    let mut x = p.rho0().matrix().clone();
    for k in 0..times {
        if k > 0 {
            x = p.channels()[k - 1].apply(&x)?;
        }
        let (ket, bra) = setting.phase_gates(point, times, k, 1.0)?;
        if let Some(g) = ket {
            x = g.matmul(&x);
        }
        if let Some(g) = bra {
            x = x.matmul(&g);
        }
    }
    Ok(x.trace())
}

pub fn char_fn(p: &MultiTimeProcess, setting: CharSetting<'_>, grid: &[Vec<f64>]) -> Result<CharSamples> {
    let values = grid
        .iter()
        .map(|u| char_value(p, setting, u))
        .collect::<Result<_>>()?;
    Ok(CharSamples {
        kind: setting.kind(),
        grid: grid.to_vec(),
        values,
    })
}

/// Sign of the Fourier exponent carried by an axis: `−` on the bra side, `+` on the ket side.
fn axis_sign(kind: DistKind, axis: &Axis) -> Result<f64> {
    match (kind, axis.block) {
        (DistKind::KdRight, _) | (DistKind::KdDoubled, Block::Bra) => Ok(-1.0),
        (DistKind::KdLeft, _) | (DistKind::KdDoubled, Block::Ket) => Ok(1.0),
        (other, _) => Err(Error::WrongKind(other.name().into())),
    }
}

/// `Σ Q(b) e^{∓i⟨b, u⟩}` with the signs of the distribution's axes.
pub fn fourier_sum(q: &QuasiDistribution, point: &[f64]) -> Result<Complex64> {
    if point.len() != q.axes().len() {
        return dim_err("phase point length must match the number of axes");
    }
    let signs: Vec<f64> = q.axes().iter().map(|a| axis_sign(q.kind(), a)).collect::<Result<_>>()?;
    Ok(q.entries()
        .into_iter()
        .map(|(idx, v)| {
            let phase: f64 = idx
                .iter()
                .enumerate()
                .map(|(a, &i)| signs[a] * q.axes()[a].values[i] * point[a])
                .sum();
            v * Complex64::from_polar(1.0, phase)
        })
        .sum())
}

/// `u_j = j·π/(1 + max|b − b′|)`, `j = 0..m`.
pub fn default_nodes(spectrum: &[f64]) -> Vec<f64> {
    let max = spectrum.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = spectrum.iter().cloned().fold(f64::INFINITY, f64::min);
    let theta = std::f64::consts::PI / (1.0 + (max - min));
    (0..spectrum.len()).map(|j| j as f64 * theta).collect()
}

/// Cartesian product of per-axis nodes, last axis fastest.
pub fn product_grid(nodes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    nodes.iter().fold(vec![vec![]], |acc, axis| {
        acc.into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&u| {
                    let mut p = prefix.clone();
                    p.push(u);
                    p
                })
            })
            .collect()
    })
}

/// Recovers the quasiprobability tensor from samples on a product grid.
///
/// `spectra` lists the outcome values per axis in the layout of the
/// sampled kind; each axis needs as many distinct nodes as outcomes.
pub fn invert_char(samples: &CharSamples, spectra: &[Vec<f64>]) -> Result<QuasiDistribution> {
    let naxes = spectra.len();
    if samples.grid.iter().any(|u| u.len() != naxes) {
        return dim_err("grid points must have one phase per axis");
    }
    let (kind, signs, blocks): (DistKind, Vec<f64>, Vec<Block>) = match samples.kind {
        CharKind::Right => (DistKind::KdRight, vec![-1.0; naxes], vec![Block::Single; naxes]),
        CharKind::Left => (DistKind::KdLeft, vec![1.0; naxes], vec![Block::Single; naxes]),
        CharKind::Doubled => {
            if naxes % 2 != 0 {
                return dim_err("doubled spectra need an even number of axes");
            }
            let h = naxes / 2;
            let signs = (0..naxes).map(|a| if a < h { 1.0 } else { -1.0 }).collect();
            let blocks = (0..naxes).map(|a| if a < h { Block::Ket } else { Block::Bra }).collect();
            (DistKind::KdDoubled, signs, blocks)
        }
    };

    // per-axis nodes in order of first appearance
    let mut nodes: Vec<Vec<f64>> = vec![Vec::new(); naxes];
    for u in &samples.grid {
        for (a, &x) in u.iter().enumerate() {
            if !nodes[a].contains(&x) {
                nodes[a].push(x);
            }
        }
    }
    let shape: Vec<usize> = spectra.iter().map(Vec::len).collect();
    for (a, (n, s)) in nodes.iter().zip(spectra).enumerate() {
        if n.len() != s.len() {
            return Err(Error::InvalidParameter(format!(
                "axis {a} has {} distinct nodes but {} outcomes",
                n.len(),
                s.len()
            )));
        }
    }
    let total: usize = shape.iter().product();
    if samples.grid.len() != total {
        return Err(Error::InvalidParameter("grid is not a full product grid".into()));
    }
    let strides = row_major_strides(&shape);
    let mut chi = vec![None; total];
    for (u, &v) in samples.grid.iter().zip(&samples.values) {
        let flat: usize = u
            .iter()
            .enumerate()
            .map(|(a, x)| nodes[a].iter().position(|n| n == x).expect("node collected") * strides[a])
            .sum();
        if chi[flat].replace(v).is_some() {
            return Err(Error::InvalidParameter("grid repeats a phase point".into()));
        }
    }
    let mut data: Vec<Complex64> = chi.into_iter().map(|v| v.expect("product grid covered")).collect();

    for a in 0..naxes {
        let m = shape[a];
        let mut f = ComplexMatrix::zeros(m, m);
        for (r, &u) in nodes[a].iter().enumerate() {
            for (k, &b) in spectra[a].iter().enumerate() {
                f[(r, k)] = Complex64::from_polar(1.0, signs[a] * u * b);
            }
        }
        let cond = condition_number(&f);
        if cond.is_nan() || cond > MAX_CONDITION {
            return Err(Error::IllConditioned { cond });
        }
        let inv = f.inverse().ok_or(Error::IllConditioned { cond: f64::INFINITY })?;
        apply_along_axis(&mut data, &shape, a, &inv);
    }

    let axes = spectra
        .iter()
        .zip(&blocks)
        .enumerate()
        .map(|(a, (s, &block))| Axis {
            time: Some(if kind == DistKind::KdDoubled { a % (naxes / 2) } else { a }),
            block,
            values: s.clone(),
        })
        .collect();
    QuasiDistribution::from_parts(
        kind,
        axes,
        ndarray::ArrayD::from_shape_vec(ndarray::IxDyn(&shape), data).expect("shape matches data"),
    )
}

fn row_major_strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * shape[i + 1];
    }
    s
}

/// `data ← (I ⊗ … ⊗ M ⊗ … ⊗ I) data` with `M` on `axis`.
fn apply_along_axis(data: &mut [Complex64], shape: &[usize], axis: usize, m: &ComplexMatrix) {
    let st = row_major_strides(shape);
    let n = shape[axis];
    let stride = st[axis];
    let outer = data.len() / (n * stride);
    let mut buf = vec![ZERO; n];
    for o in 0..outer {
        for i in 0..stride {
            let base = o * n * stride + i;
            for (r, slot) in buf.iter_mut().enumerate() {
                *slot = (0..n).map(|k| m[(r, k)] * data[base + k * stride]).sum();
            }
            for (r, &v) in buf.iter().enumerate() {
                data[base + r * stride] = v;
            }
        }
    }
}

/// Readout and gate-phase conventions of the interferometer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    /// `s` in `⟨X⟩ + i·s·⟨Y⟩`.
    pub readout_sign: f64,
    /// Sign multiplying every phase-gate exponent relative to `χ`.
    pub phase_sign: f64,
}

/// Conventions fixed once by matching the circuit against [`char_value`]
/// on a reference process.
pub fn calibration() -> Calibration {
    static CAL: OnceLock<Calibration> = OnceLock::new();
    *CAL.get_or_init(|| {
        let rho = DensityOperator::new(ComplexMatrix::from_rows(&[
            vec![Complex64::new(0.7, 0.0), Complex64::new(0.2, 0.1)],
            vec![Complex64::new(0.2, -0.1), Complex64::new(0.3, 0.0)],
        ])
        .expect("2x2"))
        .expect("valid reference state");
        let u = exp_i_hermitian(&(&paulis::x() + &paulis::z().scale_real(0.5)), 0.8, 1e-12).expect("Hermitian");
        let p = MultiTimeProcess::new(rho, vec![QuantumChannel::unitary(u).expect("unitary")]).expect("chain");
        let ket = ObservableSchedule::new(vec![paulis::y(), paulis::x()]).expect("Hermitian");
        let bra = ObservableSchedule::new(vec![paulis::x(), paulis::z()]).expect("Hermitian");
        let setting = CharSetting::Doubled { ket: &ket, bra: &bra };
        let point = [0.3, -0.7, 1.1, 0.4];
        let target = char_value(&p, setting, &point).expect("reference evaluation");
        let mut best = (f64::INFINITY, Calibration { readout_sign: 1.0, phase_sign: 1.0 });
        for phase_sign in [1.0, -1.0] {
            let (x, y) = ancilla_expectations(&p, setting, &point, phase_sign).expect("reference circuit");
            for readout_sign in [1.0, -1.0] {
                let err = (Complex64::new(x, readout_sign * y) - target).norm();
                if err < best.0 {
                    best = (err, Calibration { readout_sign, phase_sign });
                }
            }
        }
        assert!(best.0 < 1e-10, "no interferometer convention reproduces the characteristic function");
        best.1
    })
}

/// Places `w` (on system ⊗ env_k) into system ⊗ env_1 ⊗ … ⊗ env_n.
fn embed(w: &ComplexMatrix, d: usize, envs: &[usize], k: usize) -> ComplexMatrix {
    let env_total: usize = envs.iter().product();
    let before: usize = envs[..k].iter().product();
    let after: usize = envs[k + 1..].iter().product();
    let r = envs[k];
    let n = d * env_total;
    let mut out = ComplexMatrix::zeros(n, n);
    let index = |s: usize, pre: usize, e: usize, post: usize| ((s * before + pre) * r + e) * after + post;
    for s in 0..d {
        for e in 0..r {
            for s2 in 0..d {
                for e2 in 0..r {
                    let val = w[(s * r + e, s2 * r + e2)];
                    if val == ZERO {
                        continue;
                    }
                    for pre in 0..before {
                        for post in 0..after {
                            out[(index(s, pre, e, post), index(s2, pre, e2, post))] = val;
                        }
                    }
                }
            }
        }
    }
    out
}

/// Exact `(⟨X⟩, ⟨Y⟩)` of the ancilla after the controlled pair.
fn ancilla_expectations(p: &MultiTimeProcess, setting: CharSetting<'_>, point: &[f64], phase_sign: f64) -> Result<(f64, f64)> {
    setting.check(p)?;
    let times = p.times();
    if point.len() != setting.point_len(times) {
        return dim_err(format!("phase point has {} entries, expected {}", point.len(), setting.point_len(times)));
    }
    let d = p.rho0().dim();
    if p.channels().iter().any(|c| c.d_in() != d || c.d_out() != d) {
        return Err(Error::Rectangular("the interferometer needs one fixed system dimension".into()));
    }
    let dilations = p.channels().iter().map(|c| c.stinespring()).collect::<Result<Vec<_>>>()?;
    let envs: Vec<usize> = dilations.iter().map(|dl| dl.env_dim).collect();
    let env_total: usize = envs.iter().product();
    let id_env = ComplexMatrix::identity(env_total);

    let mut g1 = ComplexMatrix::identity(d * env_total);
    let mut g2 = g1.clone();
    for k in 0..times {
        if k > 0 {
            let w = embed(&dilations[k - 1].unitary, d, &envs, k - 1);
            g1 = w.matmul(&g1);
            g2 = w.matmul(&g2);
        }
        // ket gates carry e^{+iAv}; bra gates enter G2 as the adjoint of e^{−iBu}
        let (ket, bra) = setting.phase_gates(point, times, k, phase_sign)?;
        if let Some(g) = ket {
            g1 = kron(&g, &id_env).matmul(&g1);
        }
        if let Some(g) = bra {
            g2 = kron(&g.adjoint(), &id_env).matmul(&g2);
        }
    }

    let mut env0 = ComplexMatrix::zeros(env_total, env_total);
    env0[(0, 0)] = ONE;
    let plus = ComplexMatrix::projector(&paulis::ket_plus());
    let initial = kron_all([&plus, p.rho0().matrix(), &env0]);
    let n = d * env_total;
    let mut controlled = ComplexMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            controlled[(i, j)] = g1[(i, j)];
            controlled[(n + i, n + j)] = g2[(i, j)];
        }
    }
    let out = controlled.matmul(&initial).matmul(&controlled.adjoint());
    let anc = partial_trace(&out, &DimProfile::new(vec![2, n])?, &[0])?;
    Ok((anc.trace_product(&paulis::x()).re, anc.trace_product(&paulis::y()).re))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotConfig {
    pub shots: u64,
    pub seed: u64,
    /// Counter selecting an independent random stream, e.g. the grid-point index.
    pub stream: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotEstimate {
    pub value: Complex64,
    /// Analytic standard error of the complex estimate.
    pub std_error: f64,
    /// `|estimate − exact|`
    pub deviation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitOutcome {
    pub exact: Complex64,
    pub ancilla_x: f64,
    pub ancilla_y: f64,
    pub calibration: Calibration,
    pub estimate: Option<ShotEstimate>,
}

/// Runs the ancilla interferometer for one phase point.
///
/// Every channel is replaced by its Stinespring unitary acting on a fresh
/// environment register. With `shots`, half the shots measure the ancilla in
/// the X basis and half in the Y basis.
pub fn circuit_sim(p: &MultiTimeProcess, setting: CharSetting<'_>, point: &[f64], shots: Option<ShotConfig>) -> Result<CircuitOutcome> {
    let cal = calibration();
    let (x, y) = ancilla_expectations(p, setting, point, cal.phase_sign)?;
    let exact = Complex64::new(x, cal.readout_sign * y);
    let estimate = shots.map(|cfg| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(cfg.stream);
        let nx = cfg.shots / 2;
        let ny = cfg.shots - nx;
        let mut sample = |n: u64, mean: f64| -> f64 {
            if n == 0 {
                return 0.0;
            }
            let prob = ((1.0 + mean) / 2.0).clamp(0.0, 1.0);
            let ups = Binomial::new(n, prob).expect("probability in [0,1]").sample(&mut rng);
            2.0 * ups as f64 / n as f64 - 1.0
        };
        let ex = sample(nx, x);
        let ey = sample(ny, y);
        let value = Complex64::new(ex, cal.readout_sign * ey);
        let var = |n: u64, mean: f64| if n == 0 { 0.0 } else { (1.0 - mean * mean).max(0.0) / n as f64 };
        ShotEstimate {
            value,
            std_error: (var(nx, x) + var(ny, y)).sqrt(),
            deviation: (value - exact).norm(),
        }
    });
    Ok(CircuitOutcome {
        exact,
        ancilla_x: x,
        ancilla_y: y,
        calibration: cal,
        estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{c, paulis::*};
    use crate::quasiprob::{kd_doubled, kd_left, kd_right};

    fn xy() -> (MultiTimeProcess, ObservableSchedule) {
        let p = MultiTimeProcess::new(DensityOperator::pure(&ket0()).unwrap(), vec![QuantumChannel::identity(2)]).unwrap();
        (p, ObservableSchedule::new(vec![x(), y()]).unwrap())
    }

    #[test]
    fn xy_examples() {
        let (p, b) = xy();
        assert_eq!(char_value(&p, CharSetting::Right(&b), &[0.0, 0.0]).unwrap(), ONE);
        assert!(char_value(&p, CharSetting::Right(&b), &[std::f64::consts::FRAC_PI_2, 0.0]).unwrap().norm() < 1e-12);
        let v = char_value(&p, CharSetting::Right(&b), &[0.0, std::f64::consts::PI]).unwrap();
        assert!((v + ONE).norm() < 1e-12);
    }

    #[test]
    fn fourier_identity() {
        let (p, b) = xy();
        let q = kd_right(&p, &b.schedule().unwrap()).unwrap();
        for pt in [[0.3, -1.2], [2.0, 0.7]] {
            let direct = char_value(&p, CharSetting::Right(&b), &pt).unwrap();
            assert!((direct - fourier_sum(&q, &pt).unwrap()).norm() < 1e-12);
        }
        let ql = kd_left(&p, &b.schedule().unwrap()).unwrap();
        let direct = char_value(&p, CharSetting::Left(&b), &[0.4, 0.9]).unwrap();
        assert!((direct - fourier_sum(&ql, &[0.4, 0.9]).unwrap()).norm() < 1e-12);
        let a = ObservableSchedule::new(vec![z(), x()]).unwrap();
        let qd = kd_doubled(&p, &a.schedule().unwrap(), &b.schedule().unwrap()).unwrap();
        let pt = [0.1, 0.2, -0.3, 0.5];
        let direct = char_value(&p, CharSetting::Doubled { ket: &a, bra: &b }, &pt).unwrap();
        assert!((direct - fourier_sum(&qd, &pt).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn inversion_grid_conditioning() {
        let (p, b) = xy();
        let spectra = b.spectra().unwrap();
        let bad = product_grid(&[vec![0.0, std::f64::consts::PI], vec![0.0, std::f64::consts::PI]]);
        let samples = char_fn(&p, CharSetting::Right(&b), &bad).unwrap();
        assert!(matches!(invert_char(&samples, &spectra), Err(Error::IllConditioned { .. })));

        let good = product_grid(&[vec![0.0, std::f64::consts::FRAC_PI_2], vec![0.0, std::f64::consts::FRAC_PI_2]]);
        let samples = char_fn(&p, CharSetting::Right(&b), &good).unwrap();
        let q = invert_char(&samples, &spectra).unwrap();
        let direct = kd_right(&p, &b.schedule().unwrap()).unwrap();
        assert!(q.max_diff(&direct) < 1e-10);
        assert!((q.get(&[0, 0]) - c(0.25, 0.25)).norm() < 1e-10);
    }

    #[test]
    fn default_nodes_spacing() {
        let n = default_nodes(&[1.0, -1.0]);
        assert_eq!(n[0], 0.0);
        assert!((n[1] - std::f64::consts::PI / 3.0).abs() < 1e-15);
    }

    #[test]
    fn calibration_matches_derivation() {
        let cal = calibration();
        assert_eq!(cal.readout_sign, -1.0);
        assert_eq!(cal.phase_sign, 1.0);
    }

    #[test]
    fn circuit_zero_phase_and_xy() {
        let (p, b) = xy();
        let out = circuit_sim(&p, CharSetting::Right(&b), &[0.0, 0.0], None).unwrap();
        assert!((out.exact - ONE).norm() < 1e-12);
        let out = circuit_sim(&p, CharSetting::Right(&b), &[std::f64::consts::FRAC_PI_2, 0.0], None).unwrap();
        assert!(out.exact.norm() < 1e-10);
    }

    #[test]
    fn circuit_dephasing_step() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let deph = QuantumChannel::new(vec![ComplexMatrix::identity(2).scale_real(s), z().scale_real(s)]).unwrap();
        let p = MultiTimeProcess::new(DensityOperator::pure(&ket_plus()).unwrap(), vec![deph]).unwrap();
        let b = ObservableSchedule::new(vec![y(), x()]).unwrap();
        let pt = [0.37, -1.41];
        let out = circuit_sim(&p, CharSetting::Right(&b), &pt, None).unwrap();
        assert!((out.exact - char_value(&p, CharSetting::Right(&b), &pt).unwrap()).norm() < 1e-10);
    }

    #[test]
    fn shots_are_deterministic() {
        let (p, b) = xy();
        let cfg = Some(ShotConfig { shots: 1000, seed: 9, stream: 3 });
        let a = circuit_sim(&p, CharSetting::Right(&b), &[0.4, 0.2], cfg).unwrap();
        let again = circuit_sim(&p, CharSetting::Right(&b), &[0.4, 0.2], cfg).unwrap();
        assert_eq!(a.estimate, again.estimate);
    }

    #[test]
    fn rejects_non_hermitian_observable() {
        assert!(ObservableSchedule::new(vec![ComplexMatrix::unit(2, 0, 1)]).is_err());
    }
}
