//! The bracket and flow invariant suite behind `covham verify`.

use std::sync::Arc;
use std::time::Instant;

use covham::dynamics::{acceleration, gchs_rate, s_dynamics, tghs_rhs};
use covham::fields::{polynomial_family, ExprField, FieldRef};
use covham::poisson::{
    extended_structure_matrix, gji_residual, gpb, gspb, jacobiator_residual, structural_operator, x_chi_pair,
};
use covham::riemann::{
    christoffel_contraction, christoffel_contraction_full, riemann_acceleration, riemann_equilibrium_residual,
    riemann_gchs_rate, riemann_s_dynamics, riemann_tghs,
};
use serde::Serialize;

use crate::exit::CliError;
use crate::scenario::{Model, Tolerances};

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub worst_point: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub scenario: Option<String>,
    pub seed: u64,
    pub samples: usize,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
    pub elapsed_ms: f64,
}

impl RunReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub samples: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
    /// Random polynomial pairs per sample point.
    pub pairs: usize,
    /// Random polynomial triples and points used for the Jacobiator.
    pub triples: usize,
    pub jacobiator_points: usize,
}

impl VerifyOptions {
    pub fn for_model(model: &Model) -> Self {
        Self {
            samples: model.samples(),
            seed: model.scenario.seed,
            tolerances: model.scenario.tolerances,
            pairs: 10,
            triples: 5,
            jacobiator_points: 10,
        }
    }
}

struct Tracker {
    name: &'static str,
    tolerance: f64,
    residual: f64,
    worst_point: Vec<f64>,
}

impl Tracker {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            tolerance,
            residual: 0.0,
            worst_point: Vec::new(),
        }
    }

    fn record(&mut self, residual: f64, x: &[f64]) {
        if residual > self.residual || residual.is_nan() || self.worst_point.is_empty() {
            self.residual = residual;
            self.worst_point = x.to_vec();
        }
    }

    fn finish(self) -> CheckResult {
        CheckResult {
            name: self.name.into(),
            passed: self.residual <= self.tolerance,
            residual: self.residual,
            tolerance: self.tolerance,
            worst_point: self.worst_point,
        }
    }
}

fn numerical(what: &str, x: &[f64], e: covham::Error) -> CliError {
    CliError::numerical(format!("{what} failed at {x:?}: {e}"))
}

pub fn run(model: &Model, opts: VerifyOptions) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let tol = opts.tolerances;
    let coords = model.coordinates();
    let m = model.dim();
    let (j, s, h) = (&model.j, &model.s, model.h.as_ref());
    let points = model.domain.sample(opts.samples, opts.seed);
    let polys: Vec<FieldRef> = polynomial_family(coords, 3, 2 * opts.pairs + 3 * opts.triples, opts.seed)
        .into_iter()
        .map(|e| Arc::new(ExprField::from(e)) as FieldRef)
        .collect();
    let (pair_polys, triple_polys) = polys.split_at(2 * opts.pairs);
    let coordinate_fields: Vec<ExprField> = (0..m).map(|k| ExprField::coordinate(coords.into(), k)).collect();

    let mut antisym = Tracker::new("antisymmetry", tol.bracket);
    let mut decomposition = Tracker::new("decomposition", tol.bracket);
    let mut reduction = model.chi_is_constant().then(|| Tracker::new("reduction", tol.bracket));
    let mut xchi = Tracker::new("x_chi_chi", tol.bracket);
    let mut wskew = Tracker::new("w_antisymmetry", tol.bracket);
    let mut wcoord = Tracker::new("w_coordinate_brackets", tol.bracket);
    let mut rates = Tracker::new("coordinate_rates", tol.bracket);
    let mut gji = Tracker::new("gji", tol.gji);
    let mut jacobi = Tracker::new("jacobiator", tol.jacobiator);
    let mut christoffel = model.metric.as_ref().map(|_| Tracker::new("christoffel_trace", tol.christoffel));
    let mut riemann = model.metric.as_ref().map(|_| Tracker::new("riemann_equivalence", tol.riemann));

    for x in &points {
        let x = x.as_slice();
        let ev = |what: &str, e| numerical(what, x, e);
        for pair in pair_polys.chunks(2) {
            let (f, g) = (pair[0].as_ref(), pair[1].as_ref());
            let fg = gspb(f, g, j, s, x).map_err(|e| ev("bracket", e))?;
            let gf = gspb(g, f, j, s, x).map_err(|e| ev("bracket", e))?;
            let classical = gpb(f, g, j, x).map_err(|e| ev("classical bracket", e))?;
            let pair_term = x_chi_pair(f, g, j, s, x).map_err(|e| ev("structural pair", e))?;
            antisym.record((fg + gf).abs(), x);
            decomposition.record((fg - classical - pair_term).abs(), x);
            if let Some(r) = reduction.as_mut() {
                r.record((fg - classical).abs(), x);
            }
        }
        let sc = structural_operator(s.chi().as_ref(), j, s, x).map_err(|e| ev("structural operator", e))?;
        xchi.record(sc.abs(), x);

        let w = extended_structure_matrix(j, s, x).map_err(|e| ev("extended structure matrix", e))?;
        wskew.record((&w + w.transpose()).amax(), x);
        let rate = gchs_rate(h, j, s, x).map_err(|e| ev("covariant rate", e))?;
        for (k, xk) in coordinate_fields.iter().enumerate() {
            for (l, xl) in coordinate_fields.iter().enumerate() {
                let b = gspb(xk, xl, j, s, x).map_err(|e| ev("coordinate bracket", e))?;
                wcoord.record((w[(k, l)] - b).abs(), x);
            }
            let b = gspb(xk, h, j, s, x).map_err(|e| ev("coordinate bracket", e))?;
            rates.record((rate[k] - b).abs(), x);
        }
        gji.record(gji_residual(j, s, x).map_err(|e| ev("GJI residual", e))?, x);

        if let (Some(g), Some(ct), Some(rt)) = (&model.metric, christoffel.as_mut(), riemann.as_mut()) {
            let a = christoffel_contraction(g, x).map_err(|e| ev("christoffel contraction", e))?;
            let b = christoffel_contraction_full(g, x).map_err(|e| ev("christoffel symbols", e))?;
            ct.record((a - b).amax(), x);
            let diffs = riemann_differences(model, x).map_err(|e| ev("riemann forms", e))?;
            rt.record(diffs, x);
        }
    }

    for x in points.iter().take(opts.jacobiator_points) {
        for t in triple_polys.chunks(3) {
            let r = jacobiator_residual(&t[0], &t[1], &t[2], j, s, x).map_err(|e| numerical("jacobiator", x, e))?;
            jacobi.record(r, x);
        }
    }

    let mut checks = vec![antisym.finish(), decomposition.finish()];
    checks.extend(reduction.map(Tracker::finish));
    checks.extend([xchi.finish(), wskew.finish(), wcoord.finish(), rates.finish(), gji.finish(), jacobi.finish()]);
    checks.extend(christoffel.map(Tracker::finish));
    checks.extend(riemann.map(Tracker::finish));
    if let Some(bad) = checks.iter().find(|c| !c.residual.is_finite()) {
        return Err(CliError::numerical(format!("check `{}` produced a non-finite residual", bad.name)));
    }
    Ok(RunReport {
        scenario: model.scenario.name.clone(),
        seed: opts.seed,
        samples: opts.samples,
        passed: checks.iter().all(|c| c.passed),
        checks,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Largest gap between each Riemannian form and its generic counterpart.
pub fn riemann_differences(model: &Model, x: &[f64]) -> covham::Result<f64> {
    let g = model.metric.as_ref().expect("metric scenario");
    let (j, s, h) = (&model.j, &model.s, model.h.as_ref());
    let mut worst: f64 = 0.0;
    worst = worst.max((riemann_tghs(h, j, g, x)? - tghs_rhs(h, j, s, x)?).amax());
    worst = worst.max((riemann_s_dynamics(h, j, g, x)? - s_dynamics(h, j, s, x)?).abs());
    let rate = gchs_rate(h, j, s, x)?;
    worst = worst.max((riemann_gchs_rate(h, j, g, x)? - &rate).amax());
    worst = worst.max((riemann_equilibrium_residual(h, j, g, x)? - &rate).amax());
    let (ra, rc) = riemann_acceleration(h, j, g, x)?;
    let (ga, gc) = acceleration(h, j, s, x)?;
    worst = worst.max((ra - ga).amax());
    worst = worst.max((rc.dwdt - gc.dwdt).abs());
    Ok(worst)
}

