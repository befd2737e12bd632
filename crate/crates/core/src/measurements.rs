use num_complex::Complex64;

use crate::error::{dim_err, Error, Result};
use crate::linops::{hermitian_eig, kron_all, ComplexMatrix, ONE};

const PROJECTOR_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub value: f64,
    pub projector: ComplexMatrix,
}

/// A complete set of orthogonal projectors labeled by distinct real values.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectiveMeasurement {
    dim: usize,
    outcomes: Vec<Outcome>,
    /// Per-site outcome values, present for product measurements.
    site_labels: Option<Vec<Vec<f64>>>,
}

impl ProjectiveMeasurement {
    pub fn new(outcomes: Vec<Outcome>) -> Result<Self> {
        let first = outcomes
            .first()
            .ok_or_else(|| Error::EmptySelection("measurement has no outcomes".into()))?;
        let dim = first.projector.rows();
        for (i, o) in outcomes.iter().enumerate() {
            let p = &o.projector;
            if !p.is_square() || p.rows() != dim {
                return dim_err(format!("projector {i} is not {dim}x{dim}"));
            }
            if !p.is_hermitian(PROJECTOR_TOL) || !p.matmul(p).approx_eq(p, PROJECTOR_TOL) {
                return Err(Error::InvalidParameter(format!("outcome {i} is not a projector")));
            }
            if !o.value.is_finite() {
                return Err(Error::InvalidParameter(format!("outcome {i} has non-finite value")));
            }
            for (j, other) in outcomes[..i].iter().enumerate() {
                if other.value == o.value {
                    return Err(Error::InvalidParameter(format!("outcomes {j} and {i} share value {}", o.value)));
                }
                if p.matmul(&other.projector).max_abs() > PROJECTOR_TOL {
                    return Err(Error::InvalidParameter(format!("projectors {j} and {i} are not orthogonal")));
                }
            }
        }
        let total: ComplexMatrix = outcomes.iter().map(|o| o.projector.clone()).sum();
        if !total.approx_eq(&ComplexMatrix::identity(dim), PROJECTOR_TOL) {
            return Err(Error::InvalidParameter("projectors do not sum to the identity".into()));
        }
        Ok(Self {
            dim,
            outcomes,
            site_labels: None,
        })
    }

    /// Computational-basis measurement with outcome values `0, 1, …, d−1`.
    pub fn computational(d: usize) -> Self {
        let outcomes = (0..d)
            .map(|i| Outcome {
                value: i as f64,
                projector: ComplexMatrix::unit(d, i, i),
            })
            .collect();
        Self {
            dim: d,
            outcomes,
            site_labels: None,
        }
    }

    /// Rank-one measurement onto an orthonormal basis, with the given values.
    pub fn from_basis(vectors: &[Vec<Complex64>], values: &[f64]) -> Result<Self> {
        if vectors.len() != values.len() {
            return dim_err("one value per basis vector required");
        }
        Self::new(
            vectors
                .iter()
                .zip(values)
                .map(|(v, &value)| Outcome {
                    value,
                    projector: ComplexMatrix::projector(v),
                })
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.outcomes.iter().map(|o| o.value).collect()
    }

    pub fn projector(&self, i: usize) -> &ComplexMatrix {
        &self.outcomes[i].projector
    }

    pub fn site_labels(&self) -> Option<&[Vec<f64>]> {
        self.site_labels.as_deref()
    }

    /// `Σ value · projector`
    pub fn observable(&self) -> ComplexMatrix {
        self.outcomes
            .iter()
            .map(|o| o.projector.scale_real(o.value))
            .sum()
    }
}

/// Spectral projectors of a Hermitian observable, grouped by eigenvalue (descending).
pub fn spectral_measurement(observable: &ComplexMatrix, tol: f64) -> Result<ProjectiveMeasurement> {
    let groups = hermitian_eig(observable, tol)?;
    let outcomes = groups
        .iter()
        .map(|g| Outcome {
            value: g.value,
            projector: g.projector(),
        })
        .collect();
    Ok(ProjectiveMeasurement {
        dim: observable.rows(),
        outcomes,
        site_labels: None,
    })
}

/// Joint measurement of independent sites.
///
/// Outcomes enumerate site tuples lexicographically (first site slowest).
/// Product values such as `(+1)(−1)` would collide, so each outcome is valued
/// by its flat tuple index and the per-site values are kept in `site_labels`.
pub fn product_measurement(locals: &[ProjectiveMeasurement]) -> Result<ProjectiveMeasurement> {
    match locals {
        [] => Err(Error::EmptySelection("product of zero measurements".into())),
        [single] => Ok(single.clone()),
        _ => {
            let mut tuples: Vec<Vec<usize>> = vec![vec![]];
            for m in locals {
                tuples = tuples
                    .into_iter()
                    .flat_map(|t| {
                        (0..m.len()).map(move |i| {
                            let mut next = t.clone();
                            next.push(i);
                            next
                        })
                    })
                    .collect();
            }
            let mut outcomes = Vec::with_capacity(tuples.len());
            let mut labels = Vec::with_capacity(tuples.len());
            for (flat, t) in tuples.iter().enumerate() {
                let projector = kron_all(t.iter().zip(locals).map(|(&i, m)| m.projector(i)));
                outcomes.push(Outcome {
                    value: flat as f64,
                    projector,
                });
                labels.push(t.iter().zip(locals).map(|(&i, m)| m.outcomes[i].value).collect());
            }
            Ok(ProjectiveMeasurement {
                dim: locals.iter().map(|m| m.dim).product(),
                outcomes,
                site_labels: Some(labels),
            })
        }
    }
}

/// One projective measurement per time step `t_0..t_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSchedule(Vec<ProjectiveMeasurement>);

impl MeasurementSchedule {
    pub fn new(steps: Vec<ProjectiveMeasurement>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::EmptySelection("schedule has no time steps".into()));
        }
        Ok(Self(steps))
    }

    /// Spectral measurements of one observable per time step.
    pub fn from_observables(observables: &[ComplexMatrix], tol: f64) -> Result<Self> {
        Self::new(
            observables
                .iter()
                .map(|o| spectral_measurement(o, tol))
                .collect::<Result<_>>()?,
        )
    }

    pub fn steps(&self) -> &[ProjectiveMeasurement] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.0.iter().map(|m| m.len()).collect()
    }

    /// Checks the schedule against per-time system dimensions.
    pub fn check_dims(&self, dims: &[usize]) -> Result<()> {
        if self.0.len() != dims.len() {
            return dim_err(format!(
                "schedule has {} steps, process has {} times",
                self.0.len(),
                dims.len()
            ));
        }
        for (k, (m, &d)) in self.0.iter().zip(dims).enumerate() {
            if m.dim() != d {
                return dim_err(format!("measurement at t{k} acts on dimension {}, system has {d}", m.dim()));
            }
        }
        Ok(())
    }
}

/// Orthogonal Hermitian operator basis with `ops[0] = I` and `Tr(σ_μ σ_ν) = d δ_μν`.
#[derive(Debug, Clone, PartialEq)]
pub struct HsBasis {
    dim: usize,
    ops: Vec<ComplexMatrix>,
}

impl HsBasis {
    pub fn new(ops: Vec<ComplexMatrix>) -> Result<Self> {
        let d = ops.first().map(|o| o.rows()).unwrap_or(0);
        if d < 2 || ops.len() != d * d {
            return Err(Error::InvalidParameter(format!("need d² operators with d ≥ 2, got {}", ops.len())));
        }
        if !ops[0].approx_eq(&ComplexMatrix::identity(d), 0.0) {
            return Err(Error::InvalidParameter("first basis operator must be the identity".into()));
        }
        for (mu, a) in ops.iter().enumerate() {
            if a.rows() != d || !a.is_square() {
                return dim_err(format!("basis operator {mu} has the wrong shape"));
            }
            if !a.is_hermitian(1e-10) {
                return Err(Error::InvalidParameter(format!("basis operator {mu} is not Hermitian")));
            }
            for (nu, b) in ops.iter().enumerate().take(mu + 1) {
                let expected = if mu == nu { d as f64 } else { 0.0 };
                if (a.trace_product(b) - Complex64::new(expected, 0.0)).norm() > 1e-9 {
                    return Err(Error::InvalidParameter(format!("basis operators {nu},{mu} not orthogonal")));
                }
            }
        }
        Ok(Self { dim: d, ops })
    }

    /// Paulis for `d = 2`; scaled generalized Gell-Mann matrices otherwise.
    ///
    /// Order after the identity: symmetric off-diagonal pairs `(j<k)`
    /// lexicographically, antisymmetric pairs in the same order, then the
    /// diagonal ladder `l = 1..d−1`. For `d = 2` this order is `X, Y, Z`.
    pub fn new_canonical(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidParameter(format!("HS basis needs d ≥ 2, got {d}")));
        }
        let scale = (d as f64 / 2.0).sqrt();
        let pairs: Vec<(usize, usize)> = (0..d).flat_map(|j| (j + 1..d).map(move |k| (j, k))).collect();
        let mut ops = vec![ComplexMatrix::identity(d)];
        for &(j, k) in &pairs {
            let mut m = ComplexMatrix::zeros(d, d);
            m[(j, k)] = ONE;
            m[(k, j)] = ONE;
            ops.push(m.scale_real(scale));
        }
        for &(j, k) in &pairs {
            let mut m = ComplexMatrix::zeros(d, d);
            m[(j, k)] = Complex64::new(0.0, -1.0);
            m[(k, j)] = Complex64::new(0.0, 1.0);
            ops.push(m.scale_real(scale));
        }
        for l in 1..d {
            let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
            let mut diag = vec![0.0; d];
            diag[..l].iter_mut().for_each(|x| *x = 1.0);
            diag[l] = -(l as f64);
            ops.push(ComplexMatrix::diag_real(&diag).scale_real(norm * scale));
        }
        Ok(Self { dim: d, ops })
    }

    /// `{I} ∪ {U σ_μ U†}`: another valid basis for any unitary `U`.
    pub fn conjugated(&self, u: &ComplexMatrix) -> Result<Self> {
        if u.rows() != self.dim || !u.is_square() {
            return dim_err("conjugating unitary has the wrong dimension");
        }
        let ud = u.adjoint();
        let ops = self
            .ops
            .iter()
            .enumerate()
            .map(|(mu, s)| if mu == 0 { s.clone() } else { u.matmul(s).matmul(&ud) })
            .collect();
        Self::new(ops)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ops(&self) -> &[ComplexMatrix] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// `Tr(h σ_μ)/d` for every μ.
    pub fn coefficients(&self, h: &ComplexMatrix) -> Vec<Complex64> {
        let d = self.dim as f64;
        self.ops.iter().map(|s| h.trace_product(s) / d).collect()
    }

    pub fn expand(&self, coefficients: &[Complex64]) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for (s, &c) in self.ops.iter().zip(coefficients) {
            out.add_scaled(s, c);
        }
        out
    }
}

pub fn hs_basis(d: usize) -> Result<HsBasis> {
    HsBasis::new_canonical(d)
}
