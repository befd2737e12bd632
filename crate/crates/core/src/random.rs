//! Seeded random corpora: Haar unitaries, Ginibre states, Stinespring channels.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channels::{DensityOperator, QuantumChannel};
use crate::error::Result;
use crate::linops::{gram_schmidt, ComplexMatrix};
use crate::quasiprob::MultiTimeProcess;

/// Environment dimension of [`random_channel`].
pub const ENV_DIM: usize = 2;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn ginibre(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let data = (0..rows * cols).map(|_| gaussian(rng)).collect();
    ComplexMatrix::new(rows, cols, data).expect("data length matches shape")
}

/// Haar-distributed unitary: Gram–Schmidt of a complex Gaussian matrix.
pub fn haar_unitary(d: usize, rng: &mut impl Rng) -> ComplexMatrix {
    loop {
        let g = ginibre(d, d, rng);
        let cols: Vec<Vec<Complex64>> = (0..d).map(|j| g.column(j)).collect();
        let q = gram_schmidt(&cols);
        if q.len() == d {
            return ComplexMatrix::from_columns(&q).expect("square column set");
        }
    }
}

/// `G G† / Tr(G G†)` for a Ginibre `G`.
pub fn random_density(d: usize, rng: &mut impl Rng) -> DensityOperator {
    let g = ginibre(d, d, rng);
    let m = g.matmul(&g.adjoint());
    let tr = m.trace().re;
    DensityOperator::new(m.scale_real(1.0 / tr).hermitian_part()).expect("Ginibre states are valid")
}

pub fn random_pure(d: usize, rng: &mut impl Rng) -> Vec<Complex64> {
    haar_unitary(d, rng).column(0)
}

pub fn random_hermitian(d: usize, rng: &mut impl Rng) -> ComplexMatrix {
    ginibre(d, d, rng).hermitian_part()
}

/// Channel with Kraus operators `K_x = (I ⊗ ⟨x|) V` of a Haar isometry `V: H_in → H_out ⊗ C²`.
pub fn random_channel(d_in: usize, d_out: usize, rng: &mut impl Rng) -> QuantumChannel {
    assert!(d_in <= d_out * ENV_DIM, "isometry needs d_in ≤ {ENV_DIM}·d_out");
    let u = haar_unitary(d_out * ENV_DIM, rng);
    let kraus = (0..ENV_DIM)
        .map(|x| {
            let mut k = ComplexMatrix::zeros(d_out, d_in);
            for i in 0..d_out {
                for j in 0..d_in {
                    k[(i, j)] = u[(i * ENV_DIM + x, j)];
                }
            }
            k
        })
        .collect();
    QuantumChannel::new(kraus).expect("isometry columns give a trace-preserving set")
}

pub fn random_unitary_channel(d: usize, rng: &mut impl Rng) -> QuantumChannel {
    QuantumChannel::unitary(haar_unitary(d, rng)).expect("Haar unitaries are unitary")
}

/// Random process over `dims = [d_0, …, d_n]`; unitary steps need equal dimensions.
pub fn random_process(dims: &[usize], unitary: bool, rng: &mut impl Rng) -> Result<MultiTimeProcess> {
    let rho = random_density(dims[0], rng);
    let channels = dims
        .windows(2)
        .map(|w| {
            if unitary {
                assert_eq!(w[0], w[1], "unitary steps need equal dimensions");
                random_unitary_channel(w[0], rng)
            } else {
                random_channel(w[0], w[1], rng)
            }
        })
        .collect();
    MultiTimeProcess::new(rho, channels)
}

/// Rank-one measurement in a Haar-random basis, values centred on zero.
pub fn random_basis_measurement(d: usize, rng: &mut impl Rng) -> crate::measurements::ProjectiveMeasurement {
    let u = haar_unitary(d, rng);
    let vecs: Vec<Vec<Complex64>> = (0..d).map(|j| u.column(j)).collect();
    let values: Vec<f64> = (0..d).map(|j| j as f64 - (d as f64 - 1.0) / 2.0).collect();
    crate::measurements::ProjectiveMeasurement::from_basis(&vecs, &values).expect("Haar columns are orthonormal")
}
