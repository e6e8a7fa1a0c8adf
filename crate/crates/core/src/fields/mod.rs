//! Differentiable scalar and matrix fields on coordinate space.
//!
//! Expressions are evaluated generically over [`Scalar`]; first derivatives
//! come from one [`Dual`] pass per coordinate and second derivatives from
//! nested duals. Central finite differences ([`fd_gradient`]) are kept as an
//! independent oracle.

pub mod dual;
pub mod expr;
pub mod matrix;
pub mod polynomial;

use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

pub use dual::{Dual, Scalar};
pub use expr::{validate_coordinates, Expression};
pub use matrix::{matrix_partials, ExprMatrix, MatrixField};
pub use polynomial::polynomial_family;

use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Parsed,
    BuiltIn,
    Composed,
}

/// A smooth real function of the state with derivative access.
///
/// Implementations are immutable and safe to share across threads.
pub trait ScalarField: Send + Sync + Debug {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> Result<f64>;
    fn gradient(&self, x: &[f64]) -> Result<DVector<f64>>;
    /// Composed fields built from first derivatives may not support this
    /// and return [`Error::OrderUnavailable`].
    fn hessian(&self, x: &[f64]) -> Result<DMatrix<f64>>;
    fn provenance(&self) -> Provenance;
}

pub type FieldRef = Arc<dyn ScalarField>;

/// Anything that can be evaluated over an arbitrary [`Scalar`].
pub trait Evaluate: Send + Sync {
    fn dim(&self) -> usize;
    fn eval<S: Scalar>(&self, x: &[S]) -> Result<S>;
}

impl Evaluate for Expression {
    fn dim(&self) -> usize {
        Expression::dim(self)
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Result<S> {
        Expression::eval(self, x)
    }
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::domain(format!("non-finite {what}")))
    }
}

/// Seeds coordinate `k` of `x` as the active variable.
pub(crate) fn seed<T: Scalar>(x: &[T], k: usize) -> Vec<Dual<T>> {
    x.iter()
        .enumerate()
        .map(|(i, &v)| Dual::new(v, if i == k { T::one() } else { T::zero() }))
        .collect()
}

pub fn value_of<F: Evaluate + ?Sized>(f: &F, x: &[f64]) -> Result<f64> {
    check_dim(f.dim(), x.len())?;
    finite(f.eval(x)?, "value")
}

pub fn gradient_of<F: Evaluate + ?Sized>(f: &F, x: &[f64]) -> Result<DVector<f64>> {
    check_dim(f.dim(), x.len())?;
    let m = x.len();
    let mut g = DVector::zeros(m);
    for k in 0..m {
        g[k] = finite(f.eval(&seed(x, k))?.eps, "derivative")?;
    }
    Ok(g)
}

/// Full m×m Hessian by nested forward mode. Every entry is computed
/// independently so symmetry is an observable property, not an assumption.
pub fn hessian_of<F: Evaluate + ?Sized>(f: &F, x: &[f64]) -> Result<DMatrix<f64>> {
    check_dim(f.dim(), x.len())?;
    let m = x.len();
    let mut h = DMatrix::zeros(m, m);
    for j in 0..m {
        let inner = seed(x, j);
        for i in 0..m {
            let outer = seed(&inner, i);
            h[(i, j)] = finite(f.eval(&outer)?.eps.eps, "second derivative")?;
        }
    }
    Ok(h)
}

/// Scalar field backed by an [`Expression`].
#[derive(Debug, Clone)]
pub struct ExprField {
    expr: Expression,
    provenance: Provenance,
}

impl ExprField {
    pub fn parse(text: &str, coords: &[String]) -> Result<Self> {
        Ok(Self {
            expr: Expression::parse(text, coords)?,
            provenance: Provenance::Parsed,
        })
    }

    pub fn new(expr: Expression, provenance: Provenance) -> Self {
        Self { expr, provenance }
    }

    /// The coordinate function `x_k`.
    pub fn coordinate(coords: Arc<[String]>, k: usize) -> Self {
        Self::new(Expression::variable(k, coords), Provenance::BuiltIn)
    }

    pub fn expression(&self) -> &Expression {
        &self.expr
    }

    pub fn into_ref(self) -> FieldRef {
        Arc::new(self)
    }
}

impl From<Expression> for ExprField {
    fn from(expr: Expression) -> Self {
        Self::new(expr, Provenance::Composed)
    }
}

impl ScalarField for ExprField {
    fn dim(&self) -> usize {
        self.expr.dim()
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        value_of(&self.expr, x)
    }
    fn gradient(&self, x: &[f64]) -> Result<DVector<f64>> {
        gradient_of(&self.expr, x)
    }
    fn hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        hessian_of(&self.expr, x)
    }
    fn provenance(&self) -> Provenance {
        self.provenance
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantField {
    pub value: f64,
    pub dim: usize,
}

impl ConstantField {
    pub fn new(value: f64, dim: usize) -> Self {
        Self { value, dim }
    }
}

impl ScalarField for ConstantField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        Ok(self.value)
    }
    fn gradient(&self, x: &[f64]) -> Result<DVector<f64>> {
        check_dim(self.dim, x.len())?;
        Ok(DVector::zeros(self.dim))
    }
    fn hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        check_dim(self.dim, x.len())?;
        Ok(DMatrix::zeros(self.dim, self.dim))
    }
    fn provenance(&self) -> Provenance {
        Provenance::BuiltIn
    }
}

/// Pointwise product `f·g` of two fields.
#[derive(Debug, Clone)]
pub struct ProductField {
    pub f: FieldRef,
    pub g: FieldRef,
}

impl ProductField {
    pub fn new(f: FieldRef, g: FieldRef) -> Self {
        assert_eq!(f.dim(), g.dim(), "product of fields with different dimensions");
        Self { f, g }
    }
}

impl ScalarField for ProductField {
    fn dim(&self) -> usize {
        self.f.dim()
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.f.value(x)? * self.g.value(x)?)
    }
    fn gradient(&self, x: &[f64]) -> Result<DVector<f64>> {
        let (f, g) = (self.f.value(x)?, self.g.value(x)?);
        Ok(self.g.gradient(x)? * f + self.f.gradient(x)? * g)
    }
    fn hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let (f, g) = (self.f.value(x)?, self.g.value(x)?);
        let (df, dg) = (self.f.gradient(x)?, self.g.gradient(x)?);
        let cross = &df * dg.transpose();
        Ok(self.g.hessian(x)? * f + self.f.hessian(x)? * g + &cross + cross.transpose())
    }
    fn provenance(&self) -> Provenance {
        Provenance::Composed
    }
}

/// `Σ c_i f_i` for real coefficients.
#[derive(Debug, Clone)]
pub struct LinearCombination {
    terms: Vec<(f64, FieldRef)>,
    dim: usize,
}

impl LinearCombination {
    pub fn new(terms: Vec<(f64, FieldRef)>) -> Self {
        let dim = terms.first().map(|(_, f)| f.dim()).expect("empty linear combination");
        assert!(terms.iter().all(|(_, f)| f.dim() == dim), "mixed dimensions");
        Self { terms, dim }
    }
}

impl ScalarField for LinearCombination {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        self.terms
            .iter()
            .try_fold(0.0, |acc, (c, f)| Ok(acc + c * f.value(x)?))
    }
    fn gradient(&self, x: &[f64]) -> Result<DVector<f64>> {
        self.terms
            .iter()
            .try_fold(DVector::zeros(self.dim), |acc, (c, f)| Ok(acc + f.gradient(x)? * *c))
    }
    fn hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.terms.iter().try_fold(DMatrix::zeros(self.dim, self.dim), |acc, (c, f)| {
            Ok(acc + f.hessian(x)? * *c)
        })
    }
    fn provenance(&self) -> Provenance {
        Provenance::Composed
    }
}

/// Central-difference gradient `(f(x+h·e_i) − f(x−h·e_i)) / 2h`.
pub fn fd_gradient(field: &dyn ScalarField, x: &[f64], h: f64) -> Result<DVector<f64>> {
    if h.is_nan() || h <= 0.0 {
        return Err(Error::Settings(format!("finite-difference step must be > 0, got {h}")));
    }
    check_dim(field.dim(), x.len())?;
    let mut probe = x.to_vec();
    let mut g = DVector::zeros(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let fp = field.value(&probe)?;
        probe[i] = x[i] - h;
        let fm = field.value(&probe)?;
        probe[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    Ok(g)
}
