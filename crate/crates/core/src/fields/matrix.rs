use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::dual::Scalar;
use super::expr::Expression;
use super::seed;
use crate::error::{check_dim, Error, Result};

/// Square-matrix-valued function of the state with entrywise partials.
pub trait MatrixField: Send + Sync + Debug {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> Result<DMatrix<f64>>;
    /// `partials(x)[l]` is the matrix of `∂_l M_jk`.
    fn partials(&self, x: &[f64]) -> Result<Vec<DMatrix<f64>>>;
}

/// m×m grid of entry expressions. `None` entries are identically zero.
#[derive(Debug, Clone)]
pub struct ExprMatrix {
    dim: usize,
    entries: Vec<Option<Expression>>,
}

impl ExprMatrix {
    /// `entries` is row-major with `dim*dim` slots.
    pub fn new(dim: usize, entries: Vec<Option<Expression>>) -> Result<Self> {
        check_dim(dim * dim, entries.len())?;
        for e in entries.iter().flatten() {
            check_dim(dim, e.dim())?;
        }
        Ok(Self { dim, entries })
    }

    pub fn parse_grid(rows: &[Vec<String>], coords: &[String]) -> Result<Self> {
        super::expr::validate_coordinates(coords)?;
        let shared: Arc<[String]> = coords.into();
        let m = coords.len();
        check_dim(m, rows.len())?;
        let mut entries = Vec::with_capacity(m * m);
        for row in rows {
            check_dim(m, row.len())?;
            for text in row {
                entries.push(Some(Expression::parse_shared(text, shared.clone())?));
            }
        }
        Self::new(m, entries)
    }

    pub fn constant(matrix: &DMatrix<f64>, coords: Arc<[String]>) -> Result<Self> {
        let m = coords.len();
        if matrix.nrows() != m || matrix.ncols() != m {
            return Err(Error::Dimension {
                expected: m,
                got: matrix.nrows().max(matrix.ncols()),
            });
        }
        let entries = (0..m * m)
            .map(|idx| {
                let v = matrix[(idx / m, idx % m)];
                (v != 0.0).then(|| Expression::constant(v, coords.clone()))
            })
            .collect();
        Self::new(m, entries)
    }

    pub fn entry(&self, i: usize, j: usize) -> Option<&Expression> {
        self.entries[i * self.dim + j].as_ref()
    }

    /// Row-major entries evaluated over any scalar type.
    pub fn eval<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        check_dim(self.dim, x.len())?;
        self.entries
            .iter()
            .map(|e| match e {
                Some(e) => e.eval(x),
                None => Ok(S::zero()),
            })
            .collect()
    }
}

impl MatrixField for ExprMatrix {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let v = self.eval(x)?;
        Ok(DMatrix::from_row_slice(self.dim, self.dim, &v))
    }

    fn partials(&self, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        check_dim(self.dim, x.len())?;
        (0..self.dim)
            .map(|l| {
                let v: Vec<f64> = self.eval(&seed(x, l))?.iter().map(|d| d.eps).collect();
                if v.iter().any(|d| !d.is_finite()) {
                    return Err(Error::domain("non-finite matrix entry derivative"));
                }
                Ok(DMatrix::from_row_slice(self.dim, self.dim, &v))
            })
            .collect()
    }
}

/// All `m³` partials `∂_l M_jk` at `x`, indexed `[l][(j, k)]`.
pub fn matrix_partials(field: &dyn MatrixField, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
    field.partials(x)
}
