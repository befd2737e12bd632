//! Brute-force reference paths.
//!
//! Everything here works in the Heisenberg picture with channels turned into
//! Liouville superoperators, and enumerates every outcome or basis tuple
//! separately. Nothing calls into the forward evaluators of `quasiprob` or
//! the star-product and Bloch code of `tomography`.

use ndarray::{ArrayD, IxDyn};
use num_complex::Complex64;

use crate::channels::QuantumChannel;
use crate::error::Result;
use crate::linops::{kron, kron_all, ComplexMatrix, ZERO};
use crate::measurements::{hs_basis, MeasurementSchedule};
use crate::quasiprob::{Axis, Block, DistKind, MultiTimeProcess, QuasiDistribution};
use crate::tomography::{StateKind, TemporalStateOperator};

/// Row-major vectorisation: `vec(K X K†) = (K ⊗ K̄) vec(X)`.
fn liouville(c: &QuantumChannel) -> ComplexMatrix {
    c.kraus().iter().map(|k| kron(k, &k.conj())).sum()
}

fn vectorize(m: &ComplexMatrix) -> Vec<Complex64> {
    m.data().to_vec()
}

fn unvectorize(v: Vec<Complex64>, d: usize) -> ComplexMatrix {
    ComplexMatrix::new(d, d, v).expect("square reshape")
}

/// `E†(Y)` via the adjoint superoperator.
fn heisenberg(superop: &ComplexMatrix, y: &ComplexMatrix, d_in: usize) -> ComplexMatrix {
    unvectorize(superop.adjoint().apply(&vectorize(y)), d_in)
}

fn decode(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for (i, &n) in shape.iter().enumerate().rev() {
        idx[i] = flat % n;
        flat /= n;
    }
    idx
}

/// `Tr(M ρ) = Σ_ij M_ij ρ_ji`
fn expectation(m: &ComplexMatrix, rho: &ComplexMatrix) -> Complex64 {
    let d = m.rows();
    let mut acc = ZERO;
    for i in 0..d {
        for j in 0..d {
            acc += m[(i, j)] * rho[(j, i)];
        }
    }
    acc
}

#[derive(Debug, Clone, Copy)]
pub enum OracleKind<'a> {
    Right(&'a MeasurementSchedule),
    Left(&'a MeasurementSchedule),
    Doubled {
        ket: &'a MeasurementSchedule,
        bra: &'a MeasurementSchedule,
    },
}

/// Heisenberg operator `Y_0` of the chain `Y_n = R_n L_n`, `Y_k = R_k E_{k+1}†(Y_{k+1}) L_k`.
fn back_evolve(
    supers: &[ComplexMatrix],
    dims: &[usize],
    left: &[Option<&ComplexMatrix>],
    right: &[Option<&ComplexMatrix>],
) -> ComplexMatrix {
    let n = dims.len() - 1;
    let mut y = ComplexMatrix::identity(dims[n]);
    for k in (0..=n).rev() {
        if k < n {
            y = heisenberg(&supers[k], &y, dims[k]);
        }
        if let Some(r) = right[k] {
            y = r.matmul(&y);
        }
        if let Some(l) = left[k] {
            y = y.matmul(l);
        }
    }
    y
}

pub fn oracle_kd(p: &MultiTimeProcess, kind: OracleKind<'_>) -> Result<QuasiDistribution> {
    let dims = p.dims();
    let (dist_kind, ket, bra) = match kind {
        OracleKind::Right(s) => (DistKind::KdRight, None, Some(s)),
        OracleKind::Left(s) => (DistKind::KdLeft, Some(s), None),
        OracleKind::Doubled { ket, bra } => (DistKind::KdDoubled, Some(ket), Some(bra)),
    };
    for s in [ket, bra].into_iter().flatten() {
        s.check_dims(&dims)?;
    }
    let supers: Vec<ComplexMatrix> = p.channels().iter().map(liouville).collect();
    let times = dims.len();
    let doubled = ket.is_some() && bra.is_some();
    let mut axes = Vec::new();
    for (s, block) in [(ket, Block::Ket), (bra, Block::Bra)] {
        if let Some(s) = s {
            for (t, m) in s.steps().iter().enumerate() {
                axes.push(Axis {
                    time: Some(t),
                    block: if doubled { block } else { Block::Single },
                    values: m.values(),
                });
            }
        }
    }
    let shape: Vec<usize> = axes.iter().map(Axis::len).collect();
    let total: usize = shape.iter().product();
    let mut values = Vec::with_capacity(total);
    for flat in 0..total {
        let idx = decode(flat, &shape);
        let mut cursor = 0;
        let left: Vec<Option<&ComplexMatrix>> = match ket {
            Some(s) => {
                cursor = times;
                (0..times).map(|t| Some(s.steps()[t].projector(idx[t]))).collect()
            }
            None => vec![None; times],
        };
        let right: Vec<Option<&ComplexMatrix>> = match bra {
            Some(s) => (0..times).map(|t| Some(s.steps()[t].projector(idx[cursor + t]))).collect(),
            None => vec![None; times],
        };
        let m = back_evolve(&supers, &dims, &left, &right);
        values.push(expectation(&m, p.rho0().matrix()));
    }
    QuasiDistribution::from_parts(
        dist_kind,
        axes,
        ArrayD::from_shape_vec(IxDyn(&shape), values).expect("one value per tuple"),
    )
}

/// Jordan product `X ↦ ½(σX + Xσ)`.
fn jordan(sigma: &ComplexMatrix, x: &ComplexMatrix) -> ComplexMatrix {
    let mut out = sigma.matmul(x);
    out.add_assign(&x.matmul(sigma));
    out.scale_real(0.5)
}

/// Bloch sum over direct-trace correlators, one full tensor product per term.
pub fn oracle_state(p: &MultiTimeProcess, kind: StateKind) -> Result<TemporalStateOperator> {
    let dims = p.dims();
    let times = dims.len();
    let bases = dims.iter().map(|&d| hs_basis(d)).collect::<Result<Vec<_>>>()?;
    let supers: Vec<ComplexMatrix> = p.channels().iter().map(liouville).collect();
    let doubled = kind.is_doubled();
    let block: Vec<usize> = dims.iter().map(|d| d * d).collect();
    let shape: Vec<usize> = if doubled { block.iter().chain(&block).copied().collect() } else { block };
    let block_dim: usize = dims.iter().product();
    let full = if doubled { block_dim * block_dim } else { block_dim };
    let norm = if doubled { (block_dim * block_dim) as f64 } else { block_dim as f64 };
    let mut acc = ComplexMatrix::zeros(full, full);
    let total: usize = shape.iter().product();
    for flat in 0..total {
        let idx = decode(flat, &shape);
        let sigma = |k: usize| &bases[k].ops()[idx[k]];
        let tau = |k: usize| &bases[k].ops()[idx[times + k]];
        let t = match kind {
            StateKind::KdRight | StateKind::Mh | StateKind::KdLeft => {
                let ops: Vec<Option<&ComplexMatrix>> = (0..times).map(|k| Some(sigma(k))).collect();
                let none = vec![None; times];
                let y = if kind == StateKind::KdLeft {
                    back_evolve(&supers, &dims, &ops, &none)
                } else {
                    back_evolve(&supers, &dims, &none, &ops)
                };
                let v = expectation(&y, p.rho0().matrix());
                if kind == StateKind::Mh {
                    Complex64::new(v.re, 0.0)
                } else {
                    v
                }
            }
            StateKind::KdDoubled | StateKind::MhDoubled => {
                let ket: Vec<Option<&ComplexMatrix>> = (0..times).map(|k| Some(sigma(k))).collect();
                let bra: Vec<Option<&ComplexMatrix>> = (0..times).map(|k| Some(tau(k))).collect();
                let v = expectation(&back_evolve(&supers, &dims, &ket, &bra), p.rho0().matrix());
                if kind == StateKind::MhDoubled {
                    Complex64::new(v.re, 0.0)
                } else {
                    v
                }
            }
            StateKind::Pdo => {
                let n = times - 1;
                let mut y = sigma(n).clone();
                for k in (0..n).rev() {
                    y = jordan(sigma(k), &heisenberg(&supers[k], &y, dims[k]));
                }
                Complex64::new(expectation(&y, p.rho0().matrix()).re, 0.0)
            }
        };
        if t == ZERO {
            continue;
        }
        let mut factors: Vec<&ComplexMatrix> = (0..times).rev().map(sigma).collect();
        if doubled {
            factors.extend((0..times).rev().map(tau));
        }
        acc.add_scaled(&kron_all(factors), t / norm);
    }
    TemporalStateOperator::new(kind, (0..times).rev().collect(), dims.iter().rev().copied().collect(), acc)
}
