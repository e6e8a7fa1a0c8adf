//! S-dynamics, TGHS and GCHS flows, observables, equilibria and the
//! acceleration flow.
//!
//! The integrated field is always the TGHS right-hand side `ẋ = J·DH`; the
//! covariant rate `Dx/dt = ẋ + w·x` is derived from it.

use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64;

use crate::error::{check_dim, Error, Result};
use crate::fields::{FieldRef, ScalarField};
use crate::poisson::{gspb_at, StructuralData, StructuralPoint, StructureMatrixField};
use crate::riemann::{self, MetricField};
use crate::sampling::SampleBox;

/// `w = ŜH = Σ_j b_j ∂_j H`.
pub fn s_dynamics(h: &dyn ScalarField, j: &StructureMatrixField, s: &StructuralData, x: &[f64]) -> Result<f64> {
    let sp = s.at(j, x)?;
    Ok(sp.b.dot(&h.gradient(x)?))
}

/// `ẋ = J·DH` with `D_j H = ∂_j H + A_j H`.
pub fn tghs_rhs(h: &dyn ScalarField, j: &StructureMatrixField, s: &StructuralData, x: &[f64]) -> Result<DVector<f64>> {
    let sp = s.at(j, x)?;
    Ok(&sp.j * covariant_h(h, &sp, x)?)
}

fn covariant_h(h: &dyn ScalarField, sp: &StructuralPoint, x: &[f64]) -> Result<DVector<f64>> {
    Ok(h.gradient(x)? + &sp.a * h.value(x)?)
}

/// `Dx_k/dt = ẋ_k + x_k·w`, which equals `{x_k, H}`.
pub fn gchs_rate(h: &dyn ScalarField, j: &StructureMatrixField, s: &StructuralData, x: &[f64]) -> Result<DVector<f64>> {
    let sp = s.at(j, x)?;
    let w = sp.b.dot(&h.gradient(x)?);
    Ok(&sp.j * covariant_h(h, &sp, x)? + DVector::from_column_slice(x) * w)
}

/// `‖W·DH − gchs_rate‖∞`, the gap between the matrix form with the extended
/// structure matrix and the coordinate-bracket form.
pub fn w_form_discrepancy(h: &dyn ScalarField, j: &StructureMatrixField, s: &StructuralData, x: &[f64]) -> Result<f64> {
    let sp = s.at(j, x)?;
    let wm = crate::poisson::extended_at(&sp, x);
    let dh = covariant_h(h, &sp, x)?;
    let w = sp.b.dot(&h.gradient(x)?);
    let rate = &sp.j * &dh + DVector::from_column_slice(x) * w;
    Ok((wm * dh - rate).amax())
}

/// `({f, H}, {f, H} − w·f)`. The second entry is `d/dt f(x(t))` along the
/// TGHS flow.
pub fn observable_rate(
    f: &dyn ScalarField,
    h: &dyn ScalarField,
    j: &StructureMatrixField,
    s: &StructuralData,
    x: &[f64],
) -> Result<(f64, f64)> {
    let sp = s.at(j, x)?;
    let cov = gspb_at(f, h, &sp, x)?;
    let w = sp.b.dot(&h.gradient(x)?);
    Ok((cov, cov - w * f.value(x)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicData {
    pub w: f64,
    pub dwdt: f64,
    pub beta: f64,
    pub discriminant: f64,
    pub roots: [Complex64; 2],
    pub oscillatory: bool,
}

/// Roots of `λ² + 2wλ + β = 0` with `β = w² + dw/dt`.
pub fn characteristic_roots(w: f64, dwdt: f64) -> CharacteristicData {
    let beta = w * w + dwdt;
    let discriminant = -4.0 * dwdt;
    let oscillatory = dwdt > 0.0;
    let r = (-dwdt).abs().sqrt();
    let roots = if oscillatory {
        [Complex64::new(-w, r), Complex64::new(-w, -r)]
    } else {
        [Complex64::new(-w + r, 0.0), Complex64::new(-w - r, 0.0)]
    };
    CharacteristicData {
        w,
        dwdt,
        beta,
        discriminant,
        roots,
        oscillatory,
    }
}

/// First and second time derivatives of the TGHS flow at a point, and of `w`.
#[derive(Debug, Clone)]
pub struct FlowJet {
    pub x_dot: DVector<f64>,
    pub x_ddot: DVector<f64>,
    pub w: f64,
    pub dwdt: f64,
}

/// `a` is the gradient of the structural function and `hchi` its Hessian.
pub(crate) fn flow_jet(
    h: &dyn ScalarField,
    j: &StructureMatrixField,
    a: &DVector<f64>,
    hchi: &DMatrix<f64>,
    x: &[f64],
) -> Result<FlowJet> {
    let m = j.dim();
    check_dim(m, x.len())?;
    let (hv, hg, hh) = (h.value(x)?, h.gradient(x)?, h.hessian(x)?);
    let jm = j.value(x)?;
    let parts = j.partials(x)?;
    let dh = &hg + a * hv;
    let x_dot = &jm * &dh;
    // m_lj = ∂_l D_j H
    let mjac = &hh + hchi * hv + &hg * a.transpose();
    let mut jac = &jm * mjac.transpose();
    for (l, p) in parts.iter().enumerate() {
        jac.set_column(l, &(jac.column(l) + p * &dh));
    }
    let x_ddot = &jac * &x_dot;
    let b = jm.tr_mul(a);
    let w = b.dot(&hg);
    let mut grad_w = hchi * (&jm * &hg) + &hh * &b;
    for (l, p) in parts.iter().enumerate() {
        grad_w[l] += a.dot(&(p * &hg));
    }
    let dwdt = grad_w.dot(&x_dot);
    Ok(FlowJet {
        x_dot,
        x_ddot,
        w,
        dwdt,
    })
}

/// `a = ẍ + 2wẋ + xβ` along the TGHS flow.
pub fn acceleration(
    h: &dyn ScalarField,
    j: &StructureMatrixField,
    s: &StructuralData,
    x: &[f64],
) -> Result<(DVector<f64>, CharacteristicData)> {
    let a = s.chi().gradient(x)?;
    let hchi = s.chi().hessian(x)?;
    let jet = flow_jet(h, j, &a, &hchi, x)?;
    Ok(assemble_acceleration(&jet, x))
}

pub(crate) fn assemble_acceleration(jet: &FlowJet, x: &[f64]) -> (DVector<f64>, CharacteristicData) {
    let ch = characteristic_roots(jet.w, jet.dwdt);
    let acc = &jet.x_ddot + &jet.x_dot * (2.0 * jet.w) + DVector::from_column_slice(x) * ch.beta;
    (acc, ch)
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 50,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Equilibrium {
    pub x: DVector<f64>,
    pub residual: f64,
    pub iterations: usize,
}

const DET_THRESHOLD: f64 = 1e-12;
const MAX_HALVINGS: usize = 20;

/// Damped Newton on `x ↦ DH(x)`. Requires `|det J| > 1e-12` at every iterate.
pub fn equilibrium_solve(
    h: &dyn ScalarField,
    j: &StructureMatrixField,
    s: &StructuralData,
    guess: &[f64],
    settings: NewtonSettings,
) -> Result<Equilibrium> {
    check_dim(j.dim(), guess.len())?;
    if settings.tol.is_nan() || settings.tol <= 0.0 {
        return Err(Error::Settings("tolerance must be > 0".into()));
    }
    let residual_at = |x: &DVector<f64>| -> Result<(DVector<f64>, f64)> {
        let sp = s.at(j, x.as_slice())?;
        let det = sp.j.determinant();
        let dh = covariant_h(h, &sp, x.as_slice())?;
        if det.abs() <= DET_THRESHOLD {
            return Err(Error::DegenerateStructure {
                det,
                residual: (&sp.j * &dh).amax(),
            });
        }
        let r = dh.amax();
        Ok((dh, r))
    };
    let mut x = DVector::from_column_slice(guess);
    let (mut f, mut r) = residual_at(&x)?;
    for iteration in 0..=settings.max_iter {
        if r <= settings.tol {
            return Ok(Equilibrium {
                x,
                residual: r,
                iterations: iteration,
            });
        }
        if iteration == settings.max_iter {
            break;
        }
        let xs = x.as_slice();
        let a = s.chi().gradient(xs)?;
        let (hv, hg) = (h.value(xs)?, h.gradient(xs)?);
        // jac_jl = ∂_l D_j H
        let jac = h.hessian(xs)? + s.chi().hessian(xs)? * hv + a * hg.transpose();
        let step = jac
            .lu()
            .solve(&(-&f))
            .filter(|d| d.iter().all(|v| v.is_finite()))
            .ok_or(Error::SingularJacobian { iteration })?;
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial = &x + &step * alpha;
            match residual_at(&trial) {
                Ok((ft, rt)) if rt < r => {
                    accepted = Some((trial, ft, rt));
                    break;
                }
                Err(e @ Error::DegenerateStructure { .. }) => return Err(e),
                _ => alpha *= 0.5,
            }
        }
        match accepted {
            Some((xn, fnew, rn)) => {
                x = xn;
                f = fnew;
                r = rn;
            }
            None => {
                return Err(Error::NoConvergence {
                    iterations: iteration,
                    residual: r,
                })
            }
        }
    }
    Err(Error::NoConvergence {
        iterations: settings.max_iter,
        residual: r,
    })
}

/// `f₀·e^{−wt}`.
pub fn decay_solution(f0: f64, w: f64, t: f64) -> f64 {
    f0 * (-w * t).exp()
}

#[derive(Debug, Clone)]
pub struct CasimirReport {
    pub max_abs: f64,
    pub worst_point: Vec<f64>,
    pub samples: usize,
    pub tol: f64,
    pub commuting: bool,
}

/// Largest `|{f, H}|` over seeded samples of `domain`.
#[allow(clippy::too_many_arguments)]
pub fn casimir_scan(
    f: &dyn ScalarField,
    h: &dyn ScalarField,
    j: &StructureMatrixField,
    s: &StructuralData,
    domain: &SampleBox,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<CasimirReport> {
    check_dim(j.dim(), domain.dim())?;
    let mut max_abs = 0.0;
    let mut worst_point = Vec::new();
    for x in domain.sample(samples, seed) {
        let sp = s.at(j, &x)?;
        let v = gspb_at(f, h, &sp, &x)?.abs();
        if v > max_abs || worst_point.is_empty() {
            max_abs = v;
            worst_point = x;
        }
    }
    Ok(CasimirReport {
        max_abs,
        worst_point,
        samples,
        tol,
        commuting: max_abs <= tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorSettings {
    pub method: Method,
    pub dt: f64,
    pub t_end: f64,
}

impl IntegratorSettings {
    pub fn rk4(dt: f64, t_end: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Settings("dt must be > 0".into()));
        }
        if !(t_end.is_finite() && t_end >= 0.0) {
            return Err(Error::Settings("t_end must be >= 0".into()));
        }
        Ok(Self {
            method: Method::Rk4,
            dt,
            t_end,
        })
    }

    /// Number of steps; the step actually taken is `t_end / steps` so the
    /// last sample lands on `t_end`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}

#[derive(Debug, Clone)]
pub struct FlowProblem {
    pub j: StructureMatrixField,
    pub s: StructuralData,
    pub h: FieldRef,
    pub mass: f64,
    pub x0: Vec<f64>,
    pub settings: IntegratorSettings,
    pub observables: Vec<(String, FieldRef)>,
}

impl FlowProblem {
    pub fn new(
        j: StructureMatrixField,
        s: StructuralData,
        h: FieldRef,
        mass: f64,
        x0: Vec<f64>,
        settings: IntegratorSettings,
    ) -> Result<Self> {
        let m = j.dim();
        check_dim(m, x0.len())?;
        check_dim(m, h.dim())?;
        check_dim(m, s.chi().dim())?;
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::Settings("mass must be > 0".into()));
        }
        Ok(Self {
            j,
            s,
            h,
            mass,
            x0,
            settings,
            observables: Vec::new(),
        })
    }

    pub fn with_observable(mut self, name: impl Into<String>, f: FieldRef) -> Result<Self> {
        check_dim(self.j.dim(), f.dim())?;
        self.observables.push((name.into(), f));
        Ok(self)
    }
}

#[derive(Debug, Clone)]
pub enum RhsSelector {
    Tghs,
    RiemannTghs(MetricField),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub x: Vec<f64>,
    pub w: f64,
    pub h: f64,
    pub observables: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub observable_names: Vec<String>,
    pub dt: f64,
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }
}

struct Rhs<'a> {
    problem: &'a FlowProblem,
    selector: &'a RhsSelector,
}

impl Rhs<'_> {
    fn field(&self, x: &[f64]) -> Result<DVector<f64>> {
        let p = self.problem;
        match self.selector {
            RhsSelector::Tghs => tghs_rhs(p.h.as_ref(), &p.j, &p.s, x),
            RhsSelector::RiemannTghs(g) => riemann::riemann_tghs(p.h.as_ref(), &p.j, g, x),
        }
    }

    fn sample(&self, t: f64, x: &[f64]) -> Result<Sample> {
        let p = self.problem;
        let w = match self.selector {
            RhsSelector::Tghs => s_dynamics(p.h.as_ref(), &p.j, &p.s, x)?,
            RhsSelector::RiemannTghs(g) => riemann::riemann_s_dynamics(p.h.as_ref(), &p.j, g, x)?,
        };
        let observables = p
            .observables
            .iter()
            .map(|(_, f)| f.value(x))
            .collect::<Result<Vec<_>>>()?;
        Ok(Sample {
            t,
            x: x.to_vec(),
            w,
            h: p.h.value(x)?,
            observables,
        })
    }

    fn step(&self, x: &DVector<f64>, dt: f64) -> Result<DVector<f64>> {
        let k1 = self.field(x.as_slice())?;
        let k2 = self.field((x + &k1 * (dt / 2.0)).as_slice())?;
        let k3 = self.field((x + &k2 * (dt / 2.0)).as_slice())?;
        let k4 = self.field((x + &k3 * dt).as_slice())?;
        let next = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("non-finite state"));
        }
        Ok(next)
    }
}

/// Fixed-step classical RK4 from `x₀` over `[0, T]`.
///
/// On failure the samples produced so far travel inside [`Error::BlowUp`].
pub fn integrate(problem: &FlowProblem, selector: &RhsSelector) -> Result<Trajectory> {
    let settings = problem.settings;
    let n = settings.steps();
    let dt = if n == 0 { settings.dt } else { settings.t_end / n as f64 };
    let rhs = Rhs { problem, selector };
    let mut traj = Trajectory {
        observable_names: problem.observables.iter().map(|(n, _)| n.clone()).collect(),
        dt,
        samples: Vec::with_capacity(n + 1),
    };
    let mut x = DVector::from_column_slice(&problem.x0);
    let first = rhs.sample(0.0, x.as_slice())?;
    traj.samples.push(first);
    for i in 1..=n {
        let t = if i == n { settings.t_end } else { i as f64 * dt };
        let next = rhs.step(&x, dt).and_then(|xn| rhs.sample(t, xn.as_slice()).map(|s| (xn, s)));
        match next {
            Ok((xn, s)) => {
                x = xn;
                traj.samples.push(s);
            }
            Err(e) => {
                return Err(Error::BlowUp {
                    time: t,
                    reason: e.to_string(),
                    partial: Box::new(traj),
                })
            }
        }
    }
    Ok(traj)
}
