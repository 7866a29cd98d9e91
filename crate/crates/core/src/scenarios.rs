//! Built-in scenarios: the planar circle, a circle in space cut out by two surfaces, and a
//! gradient system whose attractor is a non-compact open segment.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::dynamics::{Domain, Dynamics, Puncture};
use crate::field::{FieldError, GuidingField};
use crate::geometry::{AnalyticSurface, GeometryError, Surface, SurfaceSystem};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("unknown scenario '{0}' (known: circle2d, circle3d, counterexample1)")]
    Unknown(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Where a reference fact comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    /// Stated in the literature the scenario reproduces.
    Literature,
    /// Established numerically by this crate's own checks.
    Computed,
    /// Follows by direct evaluation.
    Direct,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Literature => "literature",
            Provenance::Computed => "computed",
            Provenance::Direct => "direct",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fact {
    pub statement: &'static str,
    pub provenance: Provenance,
}

/// `dist(x, A)^2` for the open segment `A = (-1, 1) x {0}`.
pub fn segment_distance_sq(x: &[f64]) -> f64 {
    let dx = segment_offset(x[0]);
    dx * dx + x[1] * x[1]
}

pub fn segment_distance_sq_gradient(x: &[f64]) -> [f64; 2] {
    [2.0 * segment_offset(x[0]), 2.0 * x[1]]
}

fn segment_offset(x: f64) -> f64 {
    if x > 1.0 {
        x - 1.0
    } else if x < -1.0 {
        x + 1.0
    } else {
        0.0
    }
}

/// Gradient descent on the squared distance to the open segment `(-1, 1) x {0}`, on the
/// plane with the segment's end points removed. Lyapunov function: the square of the
/// squared distance.
#[derive(Clone, Debug)]
pub struct SegmentAttractor {
    domain: Domain,
}

/// Radius of the removed discs around `(+-1, 0)` during integration. Flows from `|x| > 1`
/// converge to these points without reaching them, so only the points themselves are
/// removed.
pub const SEGMENT_GUARD_RADIUS: f64 = 0.0;

impl SegmentAttractor {
    pub fn new() -> Self {
        let punctures = [-1.0, 1.0]
            .iter()
            .map(|c| Puncture { center: vec![*c, 0.0], radius: SEGMENT_GUARD_RADIUS })
            .collect();
        Self { domain: Domain { bounds: None, punctures } }
    }
}

impl Default for SegmentAttractor {
    fn default() -> Self {
        Self::new()
    }
}

impl Dynamics for SegmentAttractor {
    fn dim(&self) -> usize {
        2
    }

    fn velocity_into(&self, x: &[f64], out: &mut [f64]) -> Result<(), GeometryError> {
        let g = segment_distance_sq_gradient(x);
        out[0] = -g[0];
        out[1] = -g[1];
        Ok(())
    }

    fn lyapunov(&self, x: &[f64]) -> Result<f64, GeometryError> {
        let f = segment_distance_sq(x);
        Ok(f * f)
    }

    fn target_distance(&self, x: &[f64]) -> Option<f64> {
        Some(libm::sqrt(segment_distance_sq(x)))
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }
}

#[derive(Clone, Debug)]
pub enum ScenarioField {
    Guiding(GuidingField),
    Segment(SegmentAttractor),
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub dim: usize,
    pub field: ScenarioField,
    /// Balls excluded from sampling and from grid classification.
    pub exclusions: Vec<Puncture>,
    /// Default box for grids, searches and sampling.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// A point on or near the path, used to build the path atlas.
    pub path_seed: Option<Vec<f64>>,
    /// Default ellipsoid level for the tube around the path.
    pub default_radius: Option<f64>,
    pub singular_points: Vec<Vec<f64>>,
    pub facts: Vec<Fact>,
}

impl Scenario {
    pub fn guiding(&self) -> Option<&GuidingField> {
        match &self.field {
            ScenarioField::Guiding(f) => Some(f),
            ScenarioField::Segment(_) => None,
        }
    }

    pub fn dynamics(&self) -> &(dyn Dynamics + Sync) {
        match &self.field {
            ScenarioField::Guiding(f) => f,
            ScenarioField::Segment(f) => f,
        }
    }

    /// A guiding-field scenario from surface expressions, with a symmetric default box.
    pub fn custom(name: &str, dim: usize, surfaces: &[&str], gains: Vec<f64>) -> Result<Self, ScenarioError> {
        let sys = SurfaceSystem::from_exprs(dim, surfaces)?;
        Ok(Self::from_field(name, GuidingField::new(sys, gains)?))
    }

    pub fn from_field(name: &str, field: GuidingField) -> Self {
        let dim = field.system().dim();
        Self {
            name: name.to_string(),
            dim,
            field: ScenarioField::Guiding(field),
            exclusions: Vec::new(),
            lower: vec![-5.0; dim],
            upper: vec![5.0; dim],
            path_seed: None,
            default_radius: None,
            singular_points: Vec::new(),
            facts: Vec::new(),
        }
    }
}

fn planar_circle_value(x: &[f64]) -> f64 {
    x[0] * x[0] + x[1] * x[1] - 4.0
}

fn planar_circle_gradient(x: &[f64], out: &mut [f64]) {
    out.fill(0.0);
    out[0] = 2.0 * x[0];
    out[1] = 2.0 * x[1];
}

fn height_value(x: &[f64]) -> f64 {
    x[2]
}

fn height_gradient(_: &[f64], out: &mut [f64]) {
    out.fill(0.0);
    out[2] = 1.0;
}

const CIRCLE: AnalyticSurface = AnalyticSurface { value: planar_circle_value, gradient: planar_circle_gradient };
const HEIGHT: AnalyticSurface = AnalyticSurface { value: height_value, gradient: height_gradient };

fn surface(text: &str, dim: usize, analytic: AnalyticSurface) -> Surface {
    Surface::parse(text, dim).expect("built-in surface parses").with_analytic(analytic)
}

pub const SCENARIO_NAMES: [&str; 3] = ["circle2d", "circle3d", "counterexample1"];

pub fn get_scenario(name: &str) -> Result<Scenario, ScenarioError> {
    match name {
        "circle2d" => {
            let sys = SurfaceSystem::new(2, vec![surface("x1^2 + x2^2 - 4", 2, CIRCLE)])?;
            let mut s = Scenario::from_field(name, GuidingField::new(sys, vec![1.0])?);
            s.path_seed = Some(vec![2.0, 0.0]);
            s.default_radius = Some(1.0);
            s.singular_points = vec![vec![0.0, 0.0]];
            s.facts = vec![
                Fact { statement: "singular set is {(0,0)}", provenance: Provenance::Literature },
                Fact { statement: "domain of attraction is R^2 minus the origin", provenance: Provenance::Literature },
            ];
            Ok(s)
        }
        "circle3d" => {
            let sys = SurfaceSystem::new(3, vec![surface("x1^2 + x2^2 - 4", 3, CIRCLE), surface("x3", 3, HEIGHT)])?;
            let mut s = Scenario::from_field(name, GuidingField::new(sys, vec![1.0, 1.0])?);
            s.lower = vec![-3.0; 3];
            s.upper = vec![3.0; 3];
            s.path_seed = Some(vec![2.0, 0.0, 0.0]);
            s.default_radius = Some(1.0);
            s.singular_points = vec![vec![0.0, 0.0, 0.0]];
            s.facts = vec![
                Fact { statement: "singular set is {(0,0,0)}; the z-axis is its stable set", provenance: Provenance::Computed },
                Fact { statement: "domain of attraction is R^3 minus the z-axis", provenance: Provenance::Computed },
            ];
            Ok(s)
        }
        "counterexample1" => Ok(Scenario {
            name: name.to_string(),
            dim: 2,
            field: ScenarioField::Segment(SegmentAttractor::new()),
            exclusions: [-1.0, 1.0].iter().map(|c| Puncture { center: vec![*c, 0.0], radius: 0.05 }).collect(),
            lower: vec![-3.0; 2],
            upper: vec![3.0; 2],
            path_seed: None,
            default_radius: None,
            singular_points: Vec::new(),
            facts: vec![
                Fact { statement: "the open segment (-1,1) x {0} is globally uniformly asymptotically stable", provenance: Provenance::Literature },
                Fact { statement: "f((0,0.5)) = 0.25, f((2,0)) = 1, grad f((2,0)) = (2,0)", provenance: Provenance::Direct },
            ],
        }),
        _ => Err(ScenarioError::Unknown(name.to_string())),
    }
}
