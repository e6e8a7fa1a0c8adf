//! Scenario files.
//!
//! A scenario is a JSON object; unknown keys are rejected. Example:
//!
//! ```json
//! {
//!   "dimension": 2,
//!   "coordinates": ["q", "p"],
//!   "structure": { "canonical": { "n": 1 } },
//!   "hamiltonian": "(q^2 + p^2)/2",
//!   "chi": { "expression": "q" },
//!   "initial_state": [0.5, 0.0],
//!   "integrator": { "method": "rk4", "dt": 0.001, "t_end": 5.0 },
//!   "sampling": { "box": [[-1, 1], [-1, 1]], "samples": 100 },
//!   "seed": 7
//! }
//! ```
//!
//! `structure` is one of `{"canonical": {"n": n}}`, `"so3"`,
//! `{"constant": [[..], ..]}` or `{"expressions": [["..", ..], ..]}`.
//! `chi` is `{"expression": ".."}`, `{"constant": c}` or `"metric"`; the last
//! needs a `metric` entry, one of `{"constant": [[..]]}`,
//! `{"diagonal": [".."]}` or `{"full": [[".."]]}`.

use std::path::Path;
use std::sync::Arc;

use covham::dynamics::{FlowProblem, IntegratorSettings, RhsSelector};
use covham::fields::{ConstantField, ExprField, ExprMatrix, FieldRef};
use covham::poisson::{StructuralData, StructureMatrixField};
use covham::riemann::{chi_from_metric, MetricField};
use covham::sampling::SampleBox;
use nalgebra::DMatrix;
use serde::Deserialize;

use crate::exit::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: Option<String>,
    pub dimension: usize,
    pub coordinates: Vec<String>,
    pub structure: StructureDef,
    pub hamiltonian: String,
    pub chi: ChiDef,
    #[serde(default)]
    pub metric: Option<MetricDef>,
    #[serde(default = "one")]
    pub mass: f64,
    pub initial_state: Vec<f64>,
    pub integrator: IntegratorDef,
    #[serde(default)]
    pub sampling: Option<SamplingDef>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum StructureDef {
    Canonical { n: usize },
    So3,
    Constant(Vec<Vec<f64>>),
    Expressions(Vec<Vec<String>>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum ChiDef {
    Expression(String),
    Constant(f64),
    Metric,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum MetricDef {
    Constant(Vec<Vec<f64>>),
    Diagonal(Vec<String>),
    Full(Vec<Vec<String>>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorDef {
    pub method: String,
    pub dt: f64,
    pub t_end: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingDef {
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    100
}

/// Per-check tolerance overrides.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub bracket: f64,
    pub gji: f64,
    pub jacobiator: f64,
    pub skew: f64,
    pub christoffel: f64,
    pub riemann: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            bracket: 1e-12,
            gji: 1e-12,
            jacobiator: 1e-8,
            skew: 1e-12,
            christoffel: 1e-9,
            riemann: 1e-10,
        }
    }
}

/// A validated scenario with every field built.
#[derive(Debug, Clone)]
pub struct Model {
    pub scenario: Scenario,
    pub j: StructureMatrixField,
    pub s: StructuralData,
    pub h: FieldRef,
    pub metric: Option<MetricField>,
    pub domain: SampleBox,
    pub settings: IntegratorSettings,
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::input(format!("{field}: {msg}"))
}

fn square<T>(rows: &[Vec<T>], m: usize, field: &str) -> Result<(), CliError> {
    if rows.len() != m || rows.iter().any(|r| r.len() != m) {
        return Err(invalid(field, format!("expected a {m}x{m} matrix")));
    }
    Ok(())
}

fn matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let m = rows.len();
    DMatrix::from_fn(m, m, |i, j| rows[i][j])
}

pub fn parse_scenario(text: &str) -> Result<Scenario, CliError> {
    serde_json::from_str(text).map_err(|e| {
        CliError::input(format!("scenario parse error at line {}, column {}: {e}", e.line(), e.column()))
    })
}

pub fn load_scenario(path: &Path) -> Result<Model, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    build(parse_scenario(&text)?)
}

pub fn build(sc: Scenario) -> Result<Model, CliError> {
    let m = sc.dimension;
    let coords = &sc.coordinates;
    if coords.len() != m {
        return Err(invalid("coordinates", format!("{} names for dimension {m}", coords.len())));
    }
    covham::fields::validate_coordinates(coords).map_err(|e| invalid("coordinates", e))?;

    if sc.integrator.method != "rk4" {
        return Err(invalid("integrator.method", format!("unsupported method `{}`", sc.integrator.method)));
    }
    if !(sc.integrator.dt.is_finite() && sc.integrator.dt > 0.0) {
        return Err(CliError::input("integrator.dt must be > 0"));
    }
    if !(sc.integrator.t_end.is_finite() && sc.integrator.t_end >= 0.0) {
        return Err(CliError::input("integrator.t_end must be >= 0"));
    }
    let settings = IntegratorSettings::rk4(sc.integrator.dt, sc.integrator.t_end).map_err(|e| invalid("integrator", e))?;
    if !(sc.mass.is_finite() && sc.mass > 0.0) {
        return Err(CliError::input("mass must be > 0"));
    }
    if sc.initial_state.len() != m {
        return Err(invalid("initial_state", format!("expected {m} values, got {}", sc.initial_state.len())));
    }

    let j = match &sc.structure {
        StructureDef::Canonical { n } => {
            if 2 * n != m || *n == 0 {
                return Err(invalid("structure.canonical.n", format!("n = {n} does not match dimension {m}")));
            }
            StructureMatrixField::canonical(*n).map_err(|e| invalid("structure", e))?
        }
        StructureDef::So3 => {
            if m != 3 {
                return Err(invalid("structure", "so3 needs dimension 3"));
            }
            StructureMatrixField::so3()
        }
        StructureDef::Constant(rows) => {
            square(rows, m, "structure.constant")?;
            StructureMatrixField::constant(matrix(rows)).map_err(|e| invalid("structure.constant", e))?
        }
        StructureDef::Expressions(rows) => {
            square(rows, m, "structure.expressions")?;
            let grid = ExprMatrix::parse_grid(rows, coords).map_err(|e| invalid("structure.expressions", e))?;
            StructureMatrixField::expression_grid(grid)
        }
    };

    let h = ExprField::parse(&sc.hamiltonian, coords)
        .map_err(|e| invalid("hamiltonian", e))?
        .into_ref();

    let metric = match &sc.metric {
        None => None,
        Some(def) => Some(match def {
            MetricDef::Constant(rows) => {
                square(rows, m, "metric.constant")?;
                MetricField::constant(&matrix(rows), coords).map_err(|e| invalid("metric.constant", e))?
            }
            MetricDef::Diagonal(entries) => {
                if entries.len() != m {
                    return Err(invalid("metric.diagonal", format!("expected {m} entries")));
                }
                MetricField::diagonal(entries, coords).map_err(|e| invalid("metric.diagonal", e))?
            }
            MetricDef::Full(rows) => {
                square(rows, m, "metric.full")?;
                MetricField::full(rows, coords).map_err(|e| invalid("metric.full", e))?
            }
        }),
    };

    let chi: FieldRef = match (&sc.chi, &metric) {
        (ChiDef::Metric, Some(g)) => chi_from_metric(g),
        (ChiDef::Metric, None) => return Err(invalid("chi", "\"metric\" requires a metric entry")),
        (_, Some(_)) => return Err(invalid("metric", "only allowed together with chi = \"metric\"")),
        (ChiDef::Expression(text), None) => ExprField::parse(text, coords)
            .map_err(|e| invalid("chi.expression", e))?
            .into_ref(),
        (ChiDef::Constant(c), None) => Arc::new(ConstantField::new(*c, m)),
    };

    let domain = match &sc.sampling {
        None => SampleBox::unit(m),
        Some(def) => {
            if def.bounds.len() != m {
                return Err(invalid("sampling.box", format!("expected {m} intervals")));
            }
            SampleBox::new(def.bounds.iter().map(|b| (b[0], b[1])).collect())
                .map_err(|e| invalid("sampling.box", e))?
        }
    };
    let t = sc.tolerances;
    for (name, v) in [
        ("bracket", t.bracket),
        ("gji", t.gji),
        ("jacobiator", t.jacobiator),
        ("skew", t.skew),
        ("christoffel", t.christoffel),
        ("riemann", t.riemann),
    ] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(invalid(&format!("tolerances.{name}"), "must be a finite value >= 0"));
        }
    }

    let points = domain.sample(sc.sampling.as_ref().map_or(100, |s| s.samples), sc.seed);
    j.check_skew(&points, t.skew).map_err(|e| invalid("structure", e))?;
    if let Some(g) = &metric {
        g.check(&points, t.skew).map_err(|e| invalid("metric", e))?;
    }

    Ok(Model {
        s: StructuralData::new(chi),
        scenario: sc,
        j,
        h,
        metric,
        domain,
        settings,
    })
}

impl Model {
    pub fn dim(&self) -> usize {
        self.scenario.dimension
    }

    pub fn coordinates(&self) -> &[String] {
        &self.scenario.coordinates
    }

    pub fn samples(&self) -> usize {
        self.scenario.sampling.as_ref().map_or(100, |s| s.samples)
    }

    /// True when χ is declared constant, so every structural term vanishes.
    pub fn chi_is_constant(&self) -> bool {
        match &self.scenario.chi {
            ChiDef::Constant(_) => true,
            ChiDef::Expression(_) | ChiDef::Metric => false,
        }
    }

    pub fn selector(&self) -> RhsSelector {
        match &self.metric {
            Some(g) => RhsSelector::RiemannTghs(g.clone()),
            None => RhsSelector::Tghs,
        }
    }

    pub fn field(&self, text: &str) -> Result<FieldRef, CliError> {
        Ok(ExprField::parse(text, self.coordinates())
            .map_err(|e| CliError::input(format!("`{text}`: {e}")))?
            .into_ref())
    }

    pub fn problem(&self, settings: IntegratorSettings) -> Result<FlowProblem, CliError> {
        FlowProblem::new(
            self.j.clone(),
            self.s.clone(),
            self.h.clone(),
            self.scenario.mass,
            self.scenario.initial_state.clone(),
            settings,
        )
        .map_err(|e| CliError::input(e.to_string()))
    }
}
