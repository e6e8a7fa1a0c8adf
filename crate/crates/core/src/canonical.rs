//! Canonical charts `(q¹..qⁿ, p₁..pₙ)`.

use nalgebra::DVector;

use crate::dynamics::{acceleration, gchs_rate, FlowProblem};
use crate::error::{check_dim, Error, Result};
use crate::fields::ScalarField;
use crate::poisson::{StructuralData, StructureMatrixField};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CanonicalChart {
    n: usize,
}

impl CanonicalChart {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Settings("a canonical chart needs n >= 1".into()));
        }
        Ok(Self { n })
    }

    pub fn degrees_of_freedom(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    /// `q1..qn, p1..pn`, or `q, p` when `n = 1`.
    pub fn coordinate_names(&self) -> Vec<String> {
        if self.n == 1 {
            return vec!["q".into(), "p".into()];
        }
        let q = (1..=self.n).map(|a| format!("q{a}"));
        let p = (1..=self.n).map(|a| format!("p{a}"));
        q.chain(p).collect()
    }

    pub fn structure(&self) -> StructureMatrixField {
        StructureMatrixField::canonical(self.n).expect("n >= 1 by construction")
    }
}

pub fn canonical_structure(n: usize) -> Result<StructureMatrixField> {
    StructureMatrixField::canonical(n)
}

/// `q̇^a = ∂H/∂p_a + (∂χ/∂p_a)H`, `ṗ_a = −(∂H/∂q^a + (∂χ/∂q^a)H)`.
pub fn generalized_hamilton_rhs(
    h: &dyn ScalarField,
    chi: &dyn ScalarField,
    chart: CanonicalChart,
    x: &[f64],
) -> Result<DVector<f64>> {
    let (m, n) = (chart.dim(), chart.n);
    check_dim(m, x.len())?;
    check_dim(m, h.dim())?;
    check_dim(m, chi.dim())?;
    let (hv, hg, a) = (h.value(x)?, h.gradient(x)?, chi.gradient(x)?);
    let mut out = DVector::zeros(m);
    for k in 0..n {
        out[k] = hg[n + k] + a[n + k] * hv;
        out[n + k] = -(hg[k] + a[k] * hv);
    }
    Ok(out)
}

/// Components of `X_χ`: `−∂χ/∂p_a` on the q-block, `∂χ/∂q^a` on the p-block.
pub fn canonical_structure_vector(chi: &dyn ScalarField, chart: CanonicalChart, x: &[f64]) -> Result<DVector<f64>> {
    let (m, n) = (chart.dim(), chart.n);
    check_dim(m, x.len())?;
    check_dim(m, chi.dim())?;
    let a = chi.gradient(x)?;
    let mut out = DVector::zeros(m);
    for k in 0..n {
        out[k] = -a[n + k];
        out[n + k] = a[k];
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct MomentumRate {
    pub covariant: DVector<f64>,
    pub plain: DVector<f64>,
}

/// Component `k` is `−D_kH + p_k·w` (covariant) and `−D_kH` (plain).
///
/// In a canonical chart the first `n` components with `p_a = x_{n+a}` are
/// the momentum equations, and the covariant one equals `{p_a, H}`.
pub fn momentum_rate(
    h: &dyn ScalarField,
    j: &StructureMatrixField,
    s: &StructuralData,
    x: &[f64],
    p: &[f64],
) -> Result<MomentumRate> {
    check_dim(j.dim(), p.len())?;
    let sp = s.at(j, x)?;
    let hg = h.gradient(x)?;
    let w = sp.b.dot(&hg);
    let plain = -(hg + &sp.a * h.value(x)?);
    let covariant = &plain + DVector::from_column_slice(p) * w;
    Ok(MomentumRate { covariant, plain })
}

#[derive(Debug, Clone)]
pub struct MomentumState {
    pub mass: f64,
    /// `m·Dx/dt`.
    pub momentum: DVector<f64>,
    /// Covariant rate of the momentum from [`momentum_rate`].
    pub force_bracket: DVector<f64>,
    /// `m·a` from the acceleration flow.
    pub force_newton: DVector<f64>,
}

pub fn covariant_momentum(problem: &FlowProblem, x: &[f64]) -> Result<MomentumState> {
    let (h, j, s) = (problem.h.as_ref(), &problem.j, &problem.s);
    let momentum = gchs_rate(h, j, s, x)? * problem.mass;
    let force_bracket = momentum_rate(h, j, s, x, momentum.as_slice())?.covariant;
    let (a, _) = acceleration(h, j, s, x)?;
    Ok(MomentumState {
        mass: problem.mass,
        momentum,
        force_bracket,
        force_newton: a * problem.mass,
    })
}
