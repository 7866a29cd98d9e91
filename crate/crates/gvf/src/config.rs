//! Run configuration: a flat `key = value` file with `[section]` headers, overlaid by
//! command-line flags, resolved into typed settings before any computation starts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use gvf_core::flow::Method;
use gvf_core::scenarios::{get_scenario, Scenario};
use gvf_core::{GuidingField, IntegratorOptions, Puncture, SurfaceSystem};

use crate::CliError;

/// Every key a config file or flag may set, as `section.key`.
pub const KNOWN_KEYS: &[&str] = &[
    "scenario.name",
    "scenario.dim",
    "scenario.surfaces",
    "scenario.gains",
    "scenario.box",
    "scenario.exclusions",
    "scenario.path_seed",
    "integrator.method",
    "integrator.h",
    "integrator.max_step",
    "integrator.abs_tol",
    "integrator.rel_tol",
    "integrator.t_max",
    "integrator.normalize",
    "wazewski.R",
    "run.seed",
    "run.workers",
    "simulate.x0",
    "simulate.backward",
    "doa.res",
    "verify.suites",
    "verify.samples",
    "chart.points",
    "fiber.level",
    "fiber.step",
    "singular.step",
    "atlas.step",
];

/// Raw settings keyed by `section.key`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut out = Self::default();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config(format!("config line {}: expected 'key = value'", lineno + 1)));
            };
            if section.is_empty() {
                return Err(CliError::Config(format!("config line {}: key outside of a [section]", lineno + 1)));
            }
            out.set(&format!("{section}.{}", key.trim()), value.trim())?;
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(CliError::Config(format!("unknown config key '{key}'")));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Applies `section.key=value` overrides.
    pub fn apply_assignment(&mut self, assignment: &str) -> Result<(), CliError> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set expects section.key=value, got '{assignment}'")))?;
        self.set(key.trim(), value.trim())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.get(key).map(|v| parse_f64(key, v)).transpose()
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>, CliError> {
        self.get(key)
            .map(|v| v.parse().map_err(|_| CliError::Config(format!("{key}: expected a non-negative integer, got '{v}'"))))
            .transpose()
    }

    pub fn bool(&self, key: &str) -> Result<bool, CliError> {
        match self.get(key) {
            None | Some("false") | Some("0") => Ok(false),
            Some("true") | Some("1") => Ok(true),
            Some(v) => Err(CliError::Config(format!("{key}: expected true or false, got '{v}'"))),
        }
    }

    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        self.get(key).map(|v| parse_list(key, v)).transpose()
    }
}

pub fn parse_f64(key: &str, text: &str) -> Result<f64, CliError> {
    match text.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(CliError::Config(format!("{key}: expected a finite number, got '{text}'"))),
    }
}

/// Comma-separated reals.
pub fn parse_list(key: &str, text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',').map(|t| parse_f64(key, t)).collect()
}

/// `lo:hi,lo:hi,...`
pub fn parse_box(key: &str, text: &str) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for axis in text.split(',') {
        let (lo, hi) = axis
            .split_once(':')
            .ok_or_else(|| CliError::Config(format!("{key}: expected lo:hi per axis, got '{axis}'")))?;
        let (lo, hi) = (parse_f64(key, lo)?, parse_f64(key, hi)?);
        if !(lo < hi) {
            return Err(CliError::Config(format!("{key}: empty interval {lo}:{hi}")));
        }
        lower.push(lo);
        upper.push(hi);
    }
    Ok((lower, upper))
}

/// `x,y,...@radius;x,y,...@radius`
pub fn parse_exclusions(key: &str, text: &str) -> Result<Vec<Puncture>, CliError> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|item| {
            let (center, radius) = item
                .split_once('@')
                .ok_or_else(|| CliError::Config(format!("{key}: expected center@radius, got '{item}'")))?;
            let radius = parse_f64(key, radius)?;
            if radius < 0.0 {
                return Err(CliError::Config(format!("{key}: negative radius {radius}")));
            }
            Ok(Puncture { center: parse_list(key, center)?, radius })
        })
        .collect()
}

fn format_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

#[derive(Clone, Debug, PartialEq)]
pub enum RadiusChoice {
    Auto,
    Fixed(f64),
}

/// Validated configuration shared by all subcommands.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub integrator: IntegratorOptions,
    /// `None` when not set; each command applies its own default horizon.
    pub t_max: Option<f64>,
    pub radius: Option<RadiusChoice>,
    pub seed: u64,
    pub workers: Option<usize>,
    pub settings: Settings,
}

impl RunConfig {
    pub fn resolve(settings: Settings) -> Result<Self, CliError> {
        let mut scenario = resolve_scenario(&settings)?;
        let dim = scenario.dim;
        if let Some(text) = settings.get("scenario.box") {
            let (lower, upper) = parse_box("scenario.box", text)?;
            check_dim("scenario.box", lower.len(), dim)?;
            scenario.lower = lower;
            scenario.upper = upper;
        }
        if let Some(text) = settings.get("scenario.exclusions") {
            let ex = parse_exclusions("scenario.exclusions", text)?;
            for p in &ex {
                check_dim("scenario.exclusions", p.center.len(), dim)?;
            }
            scenario.exclusions = ex;
        }
        if let Some(seed) = settings.list("scenario.path_seed")? {
            check_dim("scenario.path_seed", seed.len(), dim)?;
            scenario.path_seed = Some(seed);
        }
        let method = match settings.get("integrator.method") {
            None | Some("rk4") => Method::Rk4,
            Some("rk45") => Method::Rk45,
            Some(m) => return Err(CliError::Config(format!("integrator.method: expected rk4 or rk45, got '{m}'"))),
        };
        let mut integrator = IntegratorOptions { method, ..IntegratorOptions::default() };
        for (key, slot) in [
            ("integrator.h", &mut integrator.step),
            ("integrator.max_step", &mut integrator.max_step),
            ("integrator.abs_tol", &mut integrator.abs_tol),
            ("integrator.rel_tol", &mut integrator.rel_tol),
        ] {
            if let Some(v) = settings.f64(key)? {
                if !(v > 0.0) {
                    return Err(CliError::Config(format!("{key}: must be positive, got {v}")));
                }
                *slot = v;
            }
        }
        integrator.normalize = settings.bool("integrator.normalize")?;
        let t_max = settings.f64("integrator.t_max")?;
        if let Some(t) = t_max {
            if !(t > 0.0) {
                return Err(CliError::Config(format!("integrator.t_max: must be positive, got {t}")));
            }
        }
        let radius = match settings.get("wazewski.R") {
            None => None,
            Some("auto") => Some(RadiusChoice::Auto),
            Some(v) => {
                let r = parse_f64("wazewski.R", v)?;
                if !(r > 0.0) {
                    return Err(CliError::Config(format!("wazewski.R: must be positive, got {r}")));
                }
                Some(RadiusChoice::Fixed(r))
            }
        };
        let seed = match settings.get("run.seed") {
            None => 0,
            Some(v) => v.parse().map_err(|_| CliError::Config(format!("run.seed: expected an unsigned integer, got '{v}'")))?,
        };
        let workers = settings.usize("run.workers")?;
        if workers == Some(0) {
            return Err(CliError::Config("run.workers: must be at least 1".into()));
        }
        Ok(Self { scenario, integrator, t_max, radius, seed, workers, settings })
    }

    pub fn horizon_or(&self, default: f64) -> f64 {
        self.t_max.unwrap_or(default)
    }

    pub fn guiding(&self) -> Result<&GuidingField, CliError> {
        self.scenario
            .guiding()
            .ok_or_else(|| CliError::Config(format!("scenario '{}' is not a guiding field; this command needs one", self.scenario.name)))
    }

    /// `key = value` lines describing every resolved setting, in a stable order. The
    /// worker count is omitted: outputs do not depend on it.
    pub fn describe(&self, command: &str, extra: &[(&str, String)]) -> Vec<(String, String)> {
        let s = &self.scenario;
        let mut out: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: String| out.push((k.to_string(), v));
        push("command", command.to_string());
        push("scenario.name", s.name.clone());
        push("scenario.dim", s.dim.to_string());
        if let Some(f) = s.guiding() {
            let surfaces: Vec<&str> = f.system().surfaces().iter().map(|x| x.source()).collect();
            push("scenario.surfaces", surfaces.join(";"));
            push("scenario.gains", format_list(f.gains()));
        }
        let mut bx = String::new();
        for (i, (l, u)) in s.lower.iter().zip(&s.upper).enumerate() {
            let _ = write!(bx, "{}{l:?}:{u:?}", if i > 0 { "," } else { "" });
        }
        push("scenario.box", bx);
        let ex: Vec<String> = s.exclusions.iter().map(|p| format!("{}@{:?}", format_list(&p.center), p.radius)).collect();
        push("scenario.exclusions", ex.join(";"));
        push("scenario.path_seed", s.path_seed.as_deref().map(format_list).unwrap_or_default());
        let o = &self.integrator;
        push("integrator.method", match o.method {
            Method::Rk4 => "rk4".into(),
            Method::Rk45 => "rk45".into(),
        });
        push("integrator.h", format!("{:?}", o.step));
        push("integrator.max_step", format!("{:?}", o.max_step));
        push("integrator.abs_tol", format!("{:?}", o.abs_tol));
        push("integrator.rel_tol", format!("{:?}", o.rel_tol));
        push("integrator.normalize", o.normalize.to_string());
        push("run.seed", self.seed.to_string());
        for (k, v) in extra {
            push(k, v.clone());
        }
        out
    }
}

fn check_dim(key: &str, got: usize, dim: usize) -> Result<(), CliError> {
    if got != dim {
        return Err(CliError::Config(format!("{key}: expected {dim} coordinates, got {got}")));
    }
    Ok(())
}

fn resolve_scenario(settings: &Settings) -> Result<Scenario, CliError> {
    let gains = settings.list("scenario.gains")?;
    if let Some(text) = settings.get("scenario.surfaces") {
        let dim = settings
            .usize("scenario.dim")?
            .ok_or_else(|| CliError::Config("scenario.dim is required with scenario.surfaces".into()))?;
        let surfaces: Vec<&str> = text.split(';').map(str::trim).filter(|s| !s.is_empty()).collect();
        let gains = gains.unwrap_or_else(|| vec![1.0; surfaces.len()]);
        let name = settings.get("scenario.name").unwrap_or("inline");
        return Scenario::custom(name, dim, &surfaces, gains).map_err(|e| CliError::Config(format!("scenario: {e}")));
    }
    let name = settings
        .get("scenario.name")
        .ok_or_else(|| CliError::Config("no scenario given (set --scenario or scenario.surfaces)".into()))?;
    let mut scenario = get_scenario(name).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(dim) = settings.usize("scenario.dim")? {
        check_dim("scenario.dim", dim, scenario.dim)?;
    }
    if let Some(gains) = gains {
        let field = scenario
            .guiding()
            .ok_or_else(|| CliError::Config(format!("scenario '{name}' has no gains to override")))?;
        let sys: SurfaceSystem = field.system().clone();
        let rebuilt = GuidingField::new(sys, gains).map_err(|e| CliError::Config(format!("scenario.gains: {e}")))?;
        scenario.field = gvf_core::scenarios::ScenarioField::Guiding(rebuilt);
    }
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_comments() {
        let s = Settings::parse("# comment\n[scenario]\nname = circle2d\n\n[wazewski]\nR = 1\n").unwrap();
        assert_eq!(s.get("scenario.name"), Some("circle2d"));
        assert_eq!(s.f64("wazewski.R").unwrap(), Some(1.0));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_lines() {
        assert!(Settings::parse("[scenario]\ncolour = red\n").is_err());
        assert!(Settings::parse("name = circle2d\n").is_err());
        assert!(Settings::parse("[scenario]\nname\n").is_err());
    }

    #[test]
    fn box_and_exclusions() {
        assert_eq!(parse_box("b", "-5:5,-1:2").unwrap(), (vec![-5.0, -1.0], vec![5.0, 2.0]));
        assert!(parse_box("b", "5:-5").is_err());
        let ex = parse_exclusions("e", "1,0@0.05;-1,0@0.05").unwrap();
        assert_eq!(ex.len(), 2);
        assert_eq!(ex[1].center, vec![-1.0, 0.0]);
    }

    #[test]
    fn resolves_inline_scenario_and_overrides() {
        let mut s = Settings::default();
        s.set("scenario.surfaces", "x1^2 + x2^2 - 9").unwrap();
        s.set("scenario.dim", "2").unwrap();
        s.set("scenario.gains", "2").unwrap();
        s.set("integrator.h", "0.01").unwrap();
        let c = RunConfig::resolve(s).unwrap();
        assert_eq!(c.guiding().unwrap().gains(), &[2.0]);
        assert_eq!(c.integrator.step, 0.01);
        let mut bad = Settings::default();
        bad.set("scenario.name", "circle2d").unwrap();
        bad.set("scenario.box", "0:1").unwrap();
        assert!(RunConfig::resolve(bad).is_err());
    }
}
