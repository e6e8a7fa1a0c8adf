//! Riemannian specialization with `χ = log√det g`.
//!
//! The contraction `Γ^l_{li}` is computed through the trace identity
//! `½ tr(g⁻¹ ∂_i g)`. The full Levi-Civita symbols are also available and
//! serve as an independent route to the same vector.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{assemble_acceleration, flow_jet, CharacteristicData};
use crate::error::{check_dim, Error, Result};
use crate::fields::{
    gradient_of, hessian_of, seed, value_of, Evaluate, ExprMatrix, Expression, FieldRef, MatrixField, Provenance,
    Scalar, ScalarField,
};
use crate::poisson::StructureMatrixField;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    Constant,
    Diagonal,
    Full,
}

/// Symmetric positive-definite matrix field `g(x)`.
#[derive(Debug, Clone)]
pub struct MetricField {
    grid: ExprMatrix,
    kind: MetricKind,
}

impl MetricField {
    pub fn constant(g: &DMatrix<f64>, coords: &[String]) -> Result<Self> {
        crate::fields::validate_coordinates(coords)?;
        let grid = ExprMatrix::constant(g, coords.into())?;
        let metric = Self {
            grid,
            kind: MetricKind::Constant,
        };
        metric.check(&[vec![0.0; coords.len()]], 0.0)?;
        Ok(metric)
    }

    pub fn diagonal(entries: &[String], coords: &[String]) -> Result<Self> {
        crate::fields::validate_coordinates(coords)?;
        let m = coords.len();
        check_dim(m, entries.len())?;
        let shared: Arc<[String]> = coords.into();
        let mut slots = vec![None; m * m];
        for (i, text) in entries.iter().enumerate() {
            slots[i * m + i] = Some(Expression::parse_shared(text, shared.clone())?);
        }
        Ok(Self {
            grid: ExprMatrix::new(m, slots)?,
            kind: MetricKind::Diagonal,
        })
    }

    /// Symmetry and definiteness are checked numerically by [`Self::check`].
    pub fn full(rows: &[Vec<String>], coords: &[String]) -> Result<Self> {
        Ok(Self {
            grid: ExprMatrix::parse_grid(rows, coords)?,
            kind: MetricKind::Full,
        })
    }

    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn value(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.grid.value(x)
    }

    pub fn partials(&self, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        self.grid.partials(x)
    }

    /// Rejects asymmetry above `tol` and any point where Cholesky fails.
    pub fn check(&self, points: &[Vec<f64>], tol: f64) -> Result<()> {
        for x in points {
            let g = self.value(x)?;
            let m = g.nrows();
            for i in 0..m {
                for j in i + 1..m {
                    let d = (g[(i, j)] - g[(j, i)]).abs();
                    if d > tol {
                        return Err(Error::Metric(format!(
                            "g[{i}][{j}] - g[{j}][{i}] = {d:e} at {x:?}"
                        )));
                    }
                }
            }
            if g.cholesky().is_none() {
                return Err(Error::Metric(format!("not positive definite at {x:?}")));
            }
        }
        Ok(())
    }
}

impl MatrixField for MetricField {
    fn dim(&self) -> usize {
        self.grid.dim()
    }
    fn value(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.grid.value(x)
    }
    fn partials(&self, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        self.grid.partials(x)
    }
}

/// Determinant by Gaussian elimination with partial pivoting, over any scalar.
fn determinant<S: Scalar>(mut a: Vec<S>, m: usize) -> S {
    let mut det = S::one();
    for c in 0..m {
        let p = (c..m)
            .max_by(|&r, &s| a[r * m + c].re().abs().total_cmp(&a[s * m + c].re().abs()))
            .unwrap_or(c);
        if a[p * m + c].re() == 0.0 {
            return S::zero();
        }
        if p != c {
            for k in 0..m {
                a.swap(p * m + k, c * m + k);
            }
            det = -det;
        }
        let pivot = a[c * m + c];
        det = det * pivot;
        for r in c + 1..m {
            let f = a[r * m + c] / pivot;
            for k in c..m {
                a[r * m + k] = a[r * m + k] - f * a[c * m + k];
            }
        }
    }
    det
}

/// Gauss–Jordan inverse, over any scalar.
fn inverse<S: Scalar>(mut a: Vec<S>, m: usize) -> Result<Vec<S>> {
    let scale = a.iter().map(|v| v.re().abs()).fold(0.0, f64::max);
    let mut inv: Vec<S> = (0..m * m)
        .map(|k| if k / m == k % m { S::one() } else { S::zero() })
        .collect();
    for c in 0..m {
        let p = (c..m)
            .max_by(|&r, &s| a[r * m + c].re().abs().total_cmp(&a[s * m + c].re().abs()))
            .unwrap_or(c);
        if a[p * m + c].re().abs() <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Metric("singular metric".into()));
        }
        for k in 0..m {
            a.swap(p * m + k, c * m + k);
            inv.swap(p * m + k, c * m + k);
        }
        let pivot = a[c * m + c];
        for k in 0..m {
            a[c * m + k] = a[c * m + k] / pivot;
            inv[c * m + k] = inv[c * m + k] / pivot;
        }
        for r in 0..m {
            if r == c {
                continue;
            }
            let f = a[r * m + c];
            for k in 0..m {
                a[r * m + k] = a[r * m + k] - f * a[c * m + k];
                inv[r * m + k] = inv[r * m + k] - f * inv[c * m + k];
            }
        }
    }
    Ok(inv)
}

/// `g` and all its first partials `∂_l g` at `x`, over any scalar.
fn metric_jet<S: Scalar>(g: &ExprMatrix, x: &[S]) -> Result<(Vec<S>, Vec<Vec<S>>)> {
    let value = g.eval(x)?;
    let parts = (0..x.len())
        .map(|l| Ok(g.eval(&seed(x, l))?.into_iter().map(|d| d.eps).collect()))
        .collect::<Result<Vec<Vec<S>>>>()?;
    Ok((value, parts))
}

/// `Γc_i = ½ Σ_ab g^{ab} ∂_i g_ba`.
fn contraction_trace<S: Scalar>(g: &ExprMatrix, x: &[S]) -> Result<Vec<S>> {
    let m = g.dim();
    let (value, parts) = metric_jet(g, x)?;
    let inv = inverse(value, m)?;
    let half = S::constant(0.5);
    Ok(parts
        .iter()
        .map(|d| {
            let mut acc = S::zero();
            for a in 0..m {
                for b in 0..m {
                    acc = acc + inv[a * m + b] * d[b * m + a];
                }
            }
            half * acc
        })
        .collect())
}

/// All `Γ^i_{jk}` as `out[i][(j, k)]`.
pub fn christoffel_symbols(g: &MetricField, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
    let m = g.dim();
    check_dim(m, x.len())?;
    let (value, parts) = metric_jet(&g.grid, x)?;
    let inv = inverse(value, m)?;
    let dg = |l: usize, a: usize, b: usize| parts[l][a * m + b];
    Ok((0..m)
        .map(|i| {
            DMatrix::from_fn(m, m, |j, k| {
                0.5 * (0..m)
                    .map(|l| inv[i * m + l] * (dg(j, l, k) + dg(k, j, l) - dg(l, j, k)))
                    .sum::<f64>()
            })
        })
        .collect())
}

/// `Γ^l_{li}` via the trace identity.
pub fn christoffel_contraction(g: &MetricField, x: &[f64]) -> Result<DVector<f64>> {
    check_dim(g.dim(), x.len())?;
    let c = contraction_trace(&g.grid, x)?;
    finite_vector(c)
}

/// `Γ^l_{li}` by contracting the full symbols.
pub fn christoffel_contraction_full(g: &MetricField, x: &[f64]) -> Result<DVector<f64>> {
    let gamma = christoffel_symbols(g, x)?;
    let m = g.dim();
    finite_vector((0..m).map(|i| (0..m).map(|l| gamma[l][(l, i)]).sum()).collect())
}

/// `out[(i, l)] = ∂_l Γ^k_{ki}`.
pub fn contraction_jacobian(g: &MetricField, x: &[f64]) -> Result<DMatrix<f64>> {
    let m = g.dim();
    check_dim(m, x.len())?;
    let mut out = DMatrix::zeros(m, m);
    for l in 0..m {
        let c = contraction_trace(&g.grid, &seed(x, l))?;
        for (i, v) in c.iter().enumerate() {
            out[(i, l)] = v.eps;
        }
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("non-finite contraction derivative"));
    }
    Ok(out)
}

fn finite_vector(v: Vec<f64>) -> Result<DVector<f64>> {
    if v.iter().any(|c| !c.is_finite()) {
        return Err(Error::domain("non-finite christoffel contraction"));
    }
    Ok(DVector::from_vec(v))
}

/// `χ = ½ log det g` as a scalar field.
#[derive(Debug, Clone)]
pub struct MetricChi {
    grid: ExprMatrix,
}

impl Evaluate for MetricChi {
    fn dim(&self) -> usize {
        self.grid.dim()
    }

    fn eval<S: Scalar>(&self, x: &[S]) -> Result<S> {
        let m = self.grid.dim();
        let det = determinant(self.grid.eval(x)?, m);
        if det.re() <= 0.0 {
            return Err(Error::Metric(format!("det g = {:e} is not positive", det.re())));
        }
        Ok(S::constant(0.5) * det.ln())
    }
}

impl ScalarField for MetricChi {
    fn dim(&self) -> usize {
        self.grid.dim()
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        value_of(self, x)
    }
    fn gradient(&self, x: &[f64]) -> Result<DVector<f64>> {
        gradient_of(self, x)
    }
    fn hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        hessian_of(self, x)
    }
    fn provenance(&self) -> Provenance {
        Provenance::Composed
    }
}

pub fn chi_from_metric(g: &MetricField) -> FieldRef {
    Arc::new(MetricChi { grid: g.grid.clone() })
}

fn check_pair(h: &dyn ScalarField, j: &StructureMatrixField, g: &MetricField, x: &[f64]) -> Result<()> {
    check_dim(j.dim(), g.dim())?;
    check_dim(j.dim(), h.dim())?;
    check_dim(j.dim(), x.len())
}

/// `ẋ_k = Σ_j J_kj ∂_j H + Σ_j J_kj Γ^l_{lj} H`.
pub fn riemann_tghs(h: &dyn ScalarField, j: &StructureMatrixField, g: &MetricField, x: &[f64]) -> Result<DVector<f64>> {
    check_pair(h, j, g, x)?;
    let jm = j.value(x)?;
    let gc = christoffel_contraction(g, x)?;
    Ok(&jm * h.gradient(x)? + &jm * gc * h.value(x)?)
}

/// `w = Σ_ij J_ij Γ^l_{li} ∂_j H`.
pub fn riemann_s_dynamics(h: &dyn ScalarField, j: &StructureMatrixField, g: &MetricField, x: &[f64]) -> Result<f64> {
    check_pair(h, j, g, x)?;
    let jm = j.value(x)?;
    let gc = christoffel_contraction(g, x)?;
    Ok(gc.dot(&(jm * h.gradient(x)?)))
}

/// `Dx_k/dt = Σ_j J_kj ∂_j H + Σ_j J_kj Γ^i_{ji} H + x_k Σ_ij J_ij Γ^l_{il} ∂_j H`.
pub fn riemann_gchs_rate(
    h: &dyn ScalarField,
    j: &StructureMatrixField,
    g: &MetricField,
    x: &[f64],
) -> Result<DVector<f64>> {
    let w = riemann_s_dynamics(h, j, g, x)?;
    Ok(riemann_tghs(h, j, g, x)? + DVector::from_column_slice(x) * w)
}

/// `B_k + V_k·H` with `V_k = Σ_j J_kj ∂_j log√g` and
/// `B_k = Σ_j J_kj ∂_j H + x_k Σ_ij J_ij Γ^l_{li} ∂_j H`.
pub fn riemann_equilibrium_residual(
    h: &dyn ScalarField,
    j: &StructureMatrixField,
    g: &MetricField,
    x: &[f64],
) -> Result<DVector<f64>> {
    check_pair(h, j, g, x)?;
    let jm = j.value(x)?;
    let v = &jm * chi_from_metric(g).gradient(x)?;
    let b = &jm * h.gradient(x)? + DVector::from_column_slice(x) * riemann_s_dynamics(h, j, g, x)?;
    Ok(b + v * h.value(x)?)
}

/// Acceleration flow along the Riemannian TGHS, with `ẍ` and `dw/dt` taken
/// along that flow.
pub fn riemann_acceleration(
    h: &dyn ScalarField,
    j: &StructureMatrixField,
    g: &MetricField,
    x: &[f64],
) -> Result<(DVector<f64>, CharacteristicData)> {
    check_pair(h, j, g, x)?;
    let gc = christoffel_contraction(g, x)?;
    // flow_jet wants ∂_l A_i in row l
    let jac = contraction_jacobian(g, x)?.transpose();
    let jet = flow_jet(h, j, &gc, &jac, x)?;
    Ok(assemble_acceleration(&jet, x))
}

/// `ẍ_k + 2w₀ Σ_j J_kj ∂_jH + 2w₀ Σ_j J_kj Γ^l_{jl} H + x_k w₀²` with `w₀`
/// the S-dynamics at `x`. Equals `a_k − x_k·dw/dt`, so it is the whole
/// acceleration when `w` is constant along the flow.
pub fn geodesic_like_residual(
    h: &dyn ScalarField,
    j: &StructureMatrixField,
    g: &MetricField,
    x: &[f64],
) -> Result<DVector<f64>> {
    check_pair(h, j, g, x)?;
    let gc = christoffel_contraction(g, x)?;
    let jac = contraction_jacobian(g, x)?.transpose();
    let jet = flow_jet(h, j, &gc, &jac, x)?;
    let w0 = jet.w;
    let jm = j.value(x)?;
    Ok(&jet.x_ddot
        + &jm * h.gradient(x)? * (2.0 * w0)
        + &jm * gc * (2.0 * w0 * h.value(x)?)
        + DVector::from_column_slice(x) * (w0 * w0))
}
