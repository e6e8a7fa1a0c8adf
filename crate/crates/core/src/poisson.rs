//! Structure matrices, structural data and the generalized structural
//! Poisson bracket
//!
//! ```text
//! {f, g} = Σ_ij J_ij D_i f D_j g,     D_i = ∂_i + A_i,  A = ∇χ
//! ```
//!
//! together with the classical bracket, the structural operator
//! `Ŝf = Σ_j b_j ∂_j f` with `b = AᵀJ`, and numerical residuals for every
//! identity the bracket is expected to satisfy.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::fields::{
    ConstantField, ExprMatrix, FieldRef, MatrixField, ProductField, Provenance, ScalarField,
};

#[derive(Debug, Clone, PartialEq)]
pub enum StructureKind {
    Canonical { n: usize },
    Constant,
    So3,
    ExpressionGrid,
}

#[derive(Debug, Clone)]
struct ConstantMatrix(DMatrix<f64>);

impl MatrixField for ConstantMatrix {
    fn dim(&self) -> usize {
        self.0.nrows()
    }
    fn value(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        check_dim(self.dim(), x.len())?;
        Ok(self.0.clone())
    }
    fn partials(&self, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        check_dim(self.dim(), x.len())?;
        let m = self.dim();
        Ok(vec![DMatrix::zeros(m, m); m])
    }
}

/// Lie–Poisson structure of so(3): `J_ij = ε_ijk x_k`.
#[derive(Debug, Clone, Copy)]
struct So3Matrix;

impl MatrixField for So3Matrix {
    fn dim(&self) -> usize {
        3
    }
    fn value(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        check_dim(3, x.len())?;
        #[rustfmt::skip]
        let m = DMatrix::from_row_slice(3, 3, &[
            0.0,   x[2], -x[1],
            -x[2], 0.0,   x[0],
            x[1], -x[0],  0.0,
        ]);
        Ok(m)
    }
    fn partials(&self, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        check_dim(3, x.len())?;
        Ok((0..3)
            .map(|l| {
                let mut e = [0.0; 3];
                e[l] = 1.0;
                self.value(&e).expect("dimension already checked")
            })
            .collect())
    }
}

/// Skew-symmetric structure matrix `J(x)`.
#[derive(Debug, Clone)]
pub struct StructureMatrixField {
    matrix: Arc<dyn MatrixField>,
    kind: StructureKind,
}

impl StructureMatrixField {
    /// Canonical `2n×2n` block matrix on `(q¹..qⁿ, p₁..pₙ)`.
    pub fn canonical(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Settings("canonical structure needs n ≥ 1".into()));
        }
        let mut j = DMatrix::zeros(2 * n, 2 * n);
        for a in 0..n {
            j[(a, n + a)] = 1.0;
            j[(n + a, a)] = -1.0;
        }
        Ok(Self {
            matrix: Arc::new(ConstantMatrix(j)),
            kind: StructureKind::Canonical { n },
        })
    }

    pub fn constant(j: DMatrix<f64>) -> Result<Self> {
        if !j.is_square() || j.nrows() == 0 {
            return Err(Error::Settings("structure matrix must be square and non-empty".into()));
        }
        let field = Self {
            matrix: Arc::new(ConstantMatrix(j)),
            kind: StructureKind::Constant,
        };
        let origin = vec![0.0; field.dim()];
        field.check_skew(std::slice::from_ref(&origin), 0.0)?;
        Ok(field)
    }

    pub fn so3() -> Self {
        Self {
            matrix: Arc::new(So3Matrix),
            kind: StructureKind::So3,
        }
    }

    /// User-supplied entry expressions. Skew-symmetry is not assumed; call
    /// [`check_skew`](Self::check_skew) at sample points.
    pub fn expression_grid(grid: ExprMatrix) -> Self {
        Self {
            matrix: Arc::new(grid),
            kind: StructureKind::ExpressionGrid,
        }
    }

    pub fn kind(&self) -> &StructureKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn value(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.matrix.value(x)
    }

    pub fn partials(&self, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        self.matrix.partials(x)
    }

    /// Fails at the first point where `|J_ij + J_ji| > tol` (this includes
    /// a non-zero diagonal).
    pub fn check_skew(&self, points: &[Vec<f64>], tol: f64) -> Result<()> {
        for x in points {
            let j = self.value(x)?;
            for r in 0..j.nrows() {
                for c in r..j.ncols() {
                    let residual = (j[(r, c)] + j[(c, r)]).abs();
                    if residual > tol {
                        return Err(Error::SkewViolation {
                            i: r,
                            j: c,
                            residual,
                            point: x.clone(),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// The structural function χ.
#[derive(Debug, Clone)]
pub struct StructuralData {
    chi: FieldRef,
}

/// χ, `A = ∇χ`, `b = AᵀJ` and `J` itself at one point.
#[derive(Debug, Clone)]
pub struct StructuralPoint {
    pub chi: f64,
    pub a: DVector<f64>,
    pub b: DVector<f64>,
    pub j: DMatrix<f64>,
}

impl StructuralData {
    pub fn new(chi: FieldRef) -> Self {
        Self { chi }
    }

    /// Constant χ: every structural term vanishes.
    pub fn flat(dim: usize) -> Self {
        Self::new(Arc::new(ConstantField::new(0.0, dim)))
    }

    pub fn chi(&self) -> &FieldRef {
        &self.chi
    }

    pub fn at(&self, j: &StructureMatrixField, x: &[f64]) -> Result<StructuralPoint> {
        check_dim(j.dim(), self.chi.dim())?;
        let jm = j.value(x)?;
        let a = self.chi.gradient(x)?;
        let b = jm.tr_mul(&a);
        Ok(StructuralPoint {
            chi: self.chi.value(x)?,
            a,
            b,
            j: jm,
        })
    }
}

impl StructuralPoint {
    /// `Σ_k b_k A_k`, zero for any skew `J`.
    pub fn b_dot_a(&self) -> f64 {
        self.b.dot(&self.a)
    }
}

fn covariant(grad: DVector<f64>, value: f64, a: &DVector<f64>) -> DVector<f64> {
    grad + a * value
}

/// `D_i f = ∂_i f + A_i f`.
pub fn covariant_gradient(f: &dyn ScalarField, s: &StructuralData, x: &[f64]) -> Result<DVector<f64>> {
    let a = s.chi.gradient(x)?;
    Ok(covariant(f.gradient(x)?, f.value(x)?, &a))
}

/// Classical bracket `Σ_ij J_ij ∂_i f ∂_j g`.
pub fn gpb(f: &dyn ScalarField, g: &dyn ScalarField, j: &StructureMatrixField, x: &[f64]) -> Result<f64> {
    let jm = j.value(x)?;
    Ok(f.gradient(x)?.dot(&(jm * g.gradient(x)?)))
}

pub fn gspb(
    f: &dyn ScalarField,
    g: &dyn ScalarField,
    j: &StructureMatrixField,
    s: &StructuralData,
    x: &[f64],
) -> Result<f64> {
    let sp = s.at(j, x)?;
    gspb_at(f, g, &sp, x)
}

pub(crate) fn gspb_at(f: &dyn ScalarField, g: &dyn ScalarField, sp: &StructuralPoint, x: &[f64]) -> Result<f64> {
    let df = covariant(f.gradient(x)?, f.value(x)?, &sp.a);
    let dg = covariant(g.gradient(x)?, g.value(x)?, &sp.a);
    Ok(df.dot(&(&sp.j * dg)))
}

/// `Ŝf = Σ_j b_j ∂_j f`, the action of the structural vector field `X_χ`.
pub fn structural_operator(
    f: &dyn ScalarField,
    j: &StructureMatrixField,
    s: &StructuralData,
    x: &[f64],
) -> Result<f64> {
    let sp = s.at(j, x)?;
    Ok(sp.b.dot(&f.gradient(x)?))
}

/// `X_χ(f, g) = f·Ŝg − g·Ŝf`.
pub fn x_chi_pair(
    f: &dyn ScalarField,
    g: &dyn ScalarField,
    j: &StructureMatrixField,
    s: &StructuralData,
    x: &[f64],
) -> Result<f64> {
    let sp = s.at(j, x)?;
    x_chi_pair_at(f, g, &sp, x)
}

fn x_chi_pair_at(f: &dyn ScalarField, g: &dyn ScalarField, sp: &StructuralPoint, x: &[f64]) -> Result<f64> {
    let sf = sp.b.dot(&f.gradient(x)?);
    let sg = sp.b.dot(&g.gradient(x)?);
    Ok(f.value(x)? * sg - g.value(x)? * sf)
}

/// `X_f` with component `j` equal to `Σ_i J_ij ∂_i f`, so that
/// `X_f g = {f, g}_classical`.
pub fn hamiltonian_vector_field(f: &dyn ScalarField, j: &StructureMatrixField, x: &[f64]) -> Result<DVector<f64>> {
    Ok(j.value(x)?.tr_mul(&f.gradient(x)?))
}

/// `X_f^M = X_f + f·X_χ`.
pub fn modified_vector_field(
    f: &dyn ScalarField,
    j: &StructureMatrixField,
    s: &StructuralData,
    x: &[f64],
) -> Result<DVector<f64>> {
    let sp = s.at(j, x)?;
    Ok(sp.j.tr_mul(&f.gradient(x)?) + &sp.b * f.value(x)?)
}

/// `W_kl = J_kl + x_k b_l − x_l b_k`, the bracket of coordinate functions.
pub fn extended_structure_matrix(j: &StructureMatrixField, s: &StructuralData, x: &[f64]) -> Result<DMatrix<f64>> {
    let sp = s.at(j, x)?;
    Ok(extended_at(&sp, x))
}

pub(crate) fn extended_at(sp: &StructuralPoint, x: &[f64]) -> DMatrix<f64> {
    let xv = DVector::from_column_slice(x);
    let outer = &xv * sp.b.transpose();
    &sp.j + &outer - outer.transpose()
}

/// Largest cyclic sum `|Σ_l J_il D_l J_jk + J_jl D_l J_ki + J_kl D_l J_ij|`
/// over all index triples, with `D_l J_jk = ∂_l J_jk + A_l J_jk`.
///
/// This is an admissibility diagnostic for the pair (J, χ): it vanishes for
/// any pair in dimension 2, but not in general.
pub fn gji_residual(j: &StructureMatrixField, s: &StructuralData, x: &[f64]) -> Result<f64> {
    let sp = s.at(j, x)?;
    let parts = j.partials(x)?;
    let m = j.dim();
    let jm = &sp.j;
    // cov[l][(a, b)] = D_l J_ab
    let cov: Vec<DMatrix<f64>> = parts
        .iter()
        .enumerate()
        .map(|(l, p)| p + jm * sp.a[l])
        .collect();
    let mut worst: f64 = 0.0;
    for i in 0..m {
        for jj in 0..m {
            for k in 0..m {
                let mut sum = 0.0;
                for (l, dl) in cov.iter().enumerate() {
                    sum += jm[(i, l)] * dl[(jj, k)] + jm[(jj, l)] * dl[(k, i)] + jm[(k, l)] * dl[(i, jj)];
                }
                worst = worst.max(sum.abs());
            }
        }
    }
    Ok(worst)
}

/// The bracket `{f, g}` as a field in its own right, with gradient from
/// second derivatives of `f`, `g` and χ.
#[derive(Debug, Clone)]
pub struct BracketField {
    f: FieldRef,
    g: FieldRef,
    j: StructureMatrixField,
    s: StructuralData,
}

impl BracketField {
    pub fn new(f: FieldRef, g: FieldRef, j: StructureMatrixField, s: StructuralData) -> Self {
        Self { f, g, j, s }
    }
}

impl ScalarField for BracketField {
    fn dim(&self) -> usize {
        self.j.dim()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        gspb(self.f.as_ref(), self.g.as_ref(), &self.j, &self.s, x)
    }

    fn gradient(&self, x: &[f64]) -> Result<DVector<f64>> {
        let sp = self.s.at(&self.j, x)?;
        let hchi = self.s.chi.hessian(x)?;
        let parts = self.j.partials(x)?;
        // (M_f)_li = ∂_l D_i f = ∂_l∂_i f + f ∂_l A_i + ∂_l f A_i
        let jac = |h: &dyn ScalarField| -> Result<(DVector<f64>, DMatrix<f64>)> {
            let (v, g) = (h.value(x)?, h.gradient(x)?);
            let m = h.hessian(x)? + &hchi * v + &g * sp.a.transpose();
            Ok((covariant(g, v, &sp.a), m))
        };
        let (df, mf) = jac(self.f.as_ref())?;
        let (dg, mg) = jac(self.g.as_ref())?;
        let mut grad = &mf * (&sp.j * &dg) + &mg * sp.j.tr_mul(&df);
        for (l, p) in parts.iter().enumerate() {
            grad[l] += df.dot(&(p * &dg));
        }
        Ok(grad)
    }

    fn hessian(&self, _x: &[f64]) -> Result<DMatrix<f64>> {
        Err(Error::OrderUnavailable(2))
    }

    fn provenance(&self) -> Provenance {
        Provenance::Composed
    }
}

/// `|{f,{g,h}} + {g,{h,f}} + {h,{f,g}}|` at `x`.
pub fn jacobiator_residual(
    f: &FieldRef,
    g: &FieldRef,
    h: &FieldRef,
    j: &StructureMatrixField,
    s: &StructuralData,
    x: &[f64],
) -> Result<f64> {
    let sp = s.at(j, x)?;
    let inner = |a: &FieldRef, b: &FieldRef| BracketField::new(a.clone(), b.clone(), j.clone(), s.clone());
    let total = gspb_at(f.as_ref(), &inner(g, h), &sp, x)?
        + gspb_at(g.as_ref(), &inner(h, f), &sp, x)?
        + gspb_at(h.as_ref(), &inner(f, g), &sp, x)?;
    Ok(total.abs())
}

/// `|Ŝ(f·g) − X_χ(f, g) − 2g·Ŝf|`.
pub fn s_product_residual(
    f: &FieldRef,
    g: &FieldRef,
    j: &StructureMatrixField,
    s: &StructuralData,
    x: &[f64],
) -> Result<f64> {
    let sp = s.at(j, x)?;
    let fg = ProductField::new(f.clone(), g.clone());
    let s_fg = sp.b.dot(&fg.gradient(x)?);
    let s_f = sp.b.dot(&f.gradient(x)?);
    let pair = x_chi_pair_at(f.as_ref(), g.as_ref(), &sp, x)?;
    Ok((s_fg - pair - 2.0 * g.value(x)? * s_f).abs())
}

/// The two sides of the non-degeneracy property:
/// `({f, g}_classical, X_χ(g, f))`. They coincide exactly when `{f, g} = 0`.
pub fn nondegeneracy_sides(
    f: &dyn ScalarField,
    g: &dyn ScalarField,
    j: &StructureMatrixField,
    s: &StructuralData,
    x: &[f64],
) -> Result<(f64, f64)> {
    let sp = s.at(j, x)?;
    Ok((gpb(f, g, j, x)?, x_chi_pair_at(g, f, &sp, x)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{fd_gradient, ExprField};

    fn qp() -> Vec<String> {
        vec!["q".into(), "p".into()]
    }

    fn field(text: &str, coords: &[String]) -> FieldRef {
        ExprField::parse(text, coords).unwrap().into_ref()
    }

    fn chi_q() -> (StructureMatrixField, StructuralData) {
        (
            StructureMatrixField::canonical(1).unwrap(),
            StructuralData::new(field("q", &qp())),
        )
    }

    #[test]
    fn covariant_gradient_examples() {
        let c = qp();
        let (_, s) = chi_q();
        let q = field("q", &c);
        let x = [1.0, 2.0];
        // oracle: finite-difference gradient plus A·f
        let fd = fd_gradient(q.as_ref(), &x, 1e-6).unwrap();
        let want = fd + DVector::from_vec(vec![1.0, 0.0]) * q.value(&x).unwrap();
        let got = covariant_gradient(q.as_ref(), &s, &x).unwrap();
        assert_eq!(got.as_slice(), &[2.0, 0.0]);
        assert!((got - want).amax() < 1e-9);

        let one = ConstantField::new(1.0, 2);
        assert_eq!(covariant_gradient(&one, &s, &x).unwrap().as_slice(), &[1.0, 0.0]);
        let flat = StructuralData::flat(2);
        let h = field("q^2*p", &c);
        assert_eq!(
            covariant_gradient(h.as_ref(), &flat, &x).unwrap(),
            h.gradient(&x).unwrap()
        );
    }

    #[test]
    fn classical_bracket_examples() {
        let c = qp();
        let j = StructureMatrixField::canonical(1).unwrap();
        let (q, p) = (field("q", &c), field("p", &c));
        assert_eq!(gpb(q.as_ref(), p.as_ref(), &j, &[0.3, 0.9]).unwrap(), 1.0);
        let f = field("q^2*sin(p)", &c);
        assert_eq!(gpb(f.as_ref(), f.as_ref(), &j, &[0.3, 0.9]).unwrap(), 0.0);

        let x3: Vec<String> = vec!["x1".into(), "x2".into(), "x3".into()];
        let so3 = StructureMatrixField::so3();
        let (a, b) = (field("x1", &x3), field("x2", &x3));
        assert_eq!(gpb(a.as_ref(), b.as_ref(), &so3, &[0.0, 0.0, 3.0]).unwrap(), 3.0);
    }

    #[test]
    fn structural_bracket_worked_example() {
        let c = qp();
        let (j, s) = chi_q();
        let (q, p) = (field("q", &c), field("p", &c));
        let x = [1.0, 2.0];
        assert_eq!(gspb(q.as_ref(), p.as_ref(), &j, &s, &x).unwrap(), 2.0);
        assert_eq!(structural_operator(q.as_ref(), &j, &s, &x).unwrap(), 0.0);
        assert_eq!(structural_operator(p.as_ref(), &j, &s, &x).unwrap(), 1.0);
        assert_eq!(x_chi_pair(q.as_ref(), p.as_ref(), &j, &s, &x).unwrap(), 1.0);
        assert_eq!(gspb(q.as_ref(), q.as_ref(), &j, &s, &x).unwrap(), 0.0);
        assert_eq!(x_chi_pair(p.as_ref(), p.as_ref(), &j, &s, &x).unwrap(), 0.0);
    }

    #[test]
    fn flat_chi_reduces_to_classical() {
        let c = qp();
        let j = StructureMatrixField::canonical(1).unwrap();
        let s = StructuralData::new(field("4.2", &c));
        let (f, g) = (field("q^3 - p*q", &c), field("exp(p) + q", &c));
        let x = [0.4, -0.7];
        assert_eq!(
            gspb(f.as_ref(), g.as_ref(), &j, &s, &x).unwrap(),
            gpb(f.as_ref(), g.as_ref(), &j, &x).unwrap()
        );
        assert_eq!(structural_operator(f.as_ref(), &j, &s, &x).unwrap(), 0.0);
        assert_eq!(x_chi_pair(f.as_ref(), g.as_ref(), &j, &s, &x).unwrap(), 0.0);
        assert_eq!(extended_structure_matrix(&j, &s, &x).unwrap(), j.value(&x).unwrap());
        assert_eq!(s_product_residual(&f, &g, &j, &s, &x).unwrap(), 0.0);
    }

    #[test]
    fn chi_annihilates_itself() {
        let c = qp();
        let j = StructureMatrixField::canonical(1).unwrap();
        for chi in ["q", "q*p", "sin(q)*p^2", "exp(q - p)"] {
            let s = StructuralData::new(field(chi, &c));
            for x in [[0.3, 0.2], [-0.9, 1.4]] {
                let v = structural_operator(s.chi().as_ref(), &j, &s, &x).unwrap();
                assert!(v.abs() < 1e-12, "{chi}: {v}");
                assert!(s.at(&j, &x).unwrap().b_dot_a().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn vector_fields() {
        let c = qp();
        let (j, s) = chi_q();
        let h = field("(q^2+p^2)/2", &c);
        let x = [1.0, 2.0];
        let xh = hamiltonian_vector_field(h.as_ref(), &j, &x).unwrap();
        assert_eq!(xh.as_slice(), &[-2.0, 1.0]);
        let xm = modified_vector_field(h.as_ref(), &j, &s, &x).unwrap();
        assert_eq!(xm.as_slice(), &[-2.0, 3.5]);
        let zero = ConstantField::new(0.0, 2);
        assert_eq!(modified_vector_field(&zero, &j, &s, &x).unwrap(), DVector::zeros(2));
        let flat = StructuralData::flat(2);
        assert_eq!(modified_vector_field(h.as_ref(), &j, &flat, &x).unwrap(), xh);

        // {f, g} = X_f^M g + g·X_f χ
        let g = field("q*p^2 - sin(q)", &c);
        let xm = modified_vector_field(h.as_ref(), &j, &s, &x).unwrap();
        let xhf = hamiltonian_vector_field(h.as_ref(), &j, &x).unwrap();
        let lhs = gspb(h.as_ref(), g.as_ref(), &j, &s, &x).unwrap();
        let rhs = xm.dot(&g.gradient(&x).unwrap())
            + g.value(&x).unwrap() * xhf.dot(&s.chi().gradient(&x).unwrap());
        assert!((lhs - rhs).abs() < 1e-12);

        let x3: Vec<String> = vec!["x1".into(), "x2".into(), "x3".into()];
        let casimir = field("(x1^2+x2^2+x3^2)/2", &x3);
        let v = hamiltonian_vector_field(casimir.as_ref(), &StructureMatrixField::so3(), &[0.3, -1.1, 2.0]).unwrap();
        assert!(v.amax() < 1e-15);
    }

    #[test]
    fn extended_matrix_matches_coordinate_brackets() {
        let c = qp();
        let (j, s) = chi_q();
        let x = [1.0, 2.0];
        let w = extended_structure_matrix(&j, &s, &x).unwrap();
        assert_eq!(w[(0, 1)], 2.0);
        assert_eq!(w[(0, 0)], 0.0);
        assert_eq!(w[(1, 0)], -2.0);
        let (q, p) = (field("q", &c), field("p", &c));
        assert_eq!(w[(0, 1)], gspb(q.as_ref(), p.as_ref(), &j, &s, &x).unwrap());
    }

    #[test]
    fn gji_examples() {
        let c = qp();
        let j2 = StructureMatrixField::canonical(1).unwrap();
        let s = StructuralData::new(field("sin(q)*exp(p)", &c));
        assert!(gji_residual(&j2, &s, &[0.3, -0.4]).unwrap() < 1e-12);

        let c4: Vec<String> = ["q1", "q2", "p1", "p2"].iter().map(|s| s.to_string()).collect();
        let j4 = StructureMatrixField::canonical(2).unwrap();
        let s4 = StructuralData::new(field("q1", &c4));
        let r = gji_residual(&j4, &s4, &[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        assert_eq!(gji_residual(&j4, &StructuralData::flat(4), &[0.1; 4]).unwrap(), 0.0);
    }

    #[test]
    fn jacobiator_worked_example() {
        let c = qp();
        let (j, s) = chi_q();
        let (f, g, h) = (field("q", &c), field("p", &c), field("q*p", &c));
        let r = jacobiator_residual(&f, &g, &h, &j, &s, &[1.0, 2.0]).unwrap();
        assert!(r < 1e-12, "{r}");
        let r = jacobiator_residual(&f, &f, &h, &j, &s, &[0.3, 0.1]).unwrap();
        assert!(r < 1e-12);
    }

    #[test]
    fn bracket_field_gradient_matches_finite_differences() {
        let c = qp();
        let j = StructureMatrixField::canonical(1).unwrap();
        let s = StructuralData::new(field("sin(q)*p", &c));
        let b = BracketField::new(field("q^2*p", &c), field("exp(q)*p^3", &c), j, s);
        let x = [0.35, -0.6];
        let exact = b.gradient(&x).unwrap();
        let fd = fd_gradient(&b, &x, 1e-5).unwrap();
        assert!((exact - fd).amax() < 1e-8);
        assert!(matches!(b.hessian(&x), Err(Error::OrderUnavailable(2))));
    }

    #[test]
    fn s_product_examples() {
        let c = qp();
        let (j, s) = chi_q();
        let (q, p) = (field("q", &c), field("p", &c));
        assert!(s_product_residual(&q, &p, &j, &s, &[1.0, 2.0]).unwrap() < 1e-14);
        let f = field("sin(q)*p", &c);
        assert!(s_product_residual(&f, &f, &j, &s, &[0.2, 0.7]).unwrap() < 1e-14);
    }

    #[test]
    fn nondegeneracy_sides_agree_when_bracket_vanishes() {
        let c = qp();
        let (j, s) = chi_q();
        let f = field("q", &c);
        let (lhs, rhs) = nondegeneracy_sides(f.as_ref(), f.as_ref(), &j, &s, &[0.4, 0.5]).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn skew_checks() {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = 1.0;
        m[(1, 0)] = 1.0;
        assert!(matches!(
            StructureMatrixField::constant(m),
            Err(Error::SkewViolation { i: 0, j: 1, .. })
        ));
        let mut d = DMatrix::zeros(2, 2);
        d[(1, 1)] = 0.5;
        assert!(StructureMatrixField::constant(d).is_err());

        let grid = ExprMatrix::parse_grid(
            &[vec!["0".into(), "q".into()], vec!["q".into(), "0".into()]],
            &qp(),
        )
        .unwrap();
        let j = StructureMatrixField::expression_grid(grid);
        assert!(j.check_skew(&[vec![0.0, 0.0]], 1e-12).is_ok());
        assert!(j.check_skew(&[vec![0.5, 0.0]], 1e-12).is_err());
    }
}
