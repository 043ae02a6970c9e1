//! Scenario configuration: JSON ingestion with explicit unit suffixes,
//! named presets, and conversion to runnable scenes.
//!
//! Dimensioned fields are strings of the form "<value> <unit>"; accepted
//! units are deg|rad for angles, km^-1|m^-1 for coefficients, cm2|m2 for
//! areas, m for lengths, and J for energies. Bare numbers are rejected for
//! dimensioned fields. A `preset` key expands first; any other keys then
//! override the expanded values field by field.

use crate::channel::{scaled_obstacle, ReflectionParams, Scene};
use crate::error::{Error, Result};
use crate::geometry::{BlockageEvaluator, ObstacleBox, SystemGeometry};
use crate::mcpt::McptSpec;
use crate::scattering::{Atmosphere, QuadratureSpec};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Deserialize, Serialize, Default)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    geometry: Option<RawGeometry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    atmosphere: Option<RawAtmosphere>,
    #[serde(skip_serializing_if = "Option::is_none")]
    obstacle: Option<RawObstacle>,
    #[serde(skip_serializing_if = "Option::is_none")]
    surface: Option<RawSurface>,
    #[serde(skip_serializing_if = "Option::is_none")]
    quadrature: Option<RawQuadrature>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mcpt: Option<RawMcpt>,
    #[serde(skip_serializing_if = "Option::is_none")]
    evaluator: Option<BlockageEvaluator>,
}

#[derive(Debug, Clone, Deserialize, Serialize, Default)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    beta_t: Option<String>,
    beta_r: Option<String>,
    theta_t: Option<String>,
    theta_r: Option<String>,
    alpha_t: Option<String>,
    alpha_r: Option<String>,
    range_r: Option<String>,
    aperture_area: Option<String>,
    pulse_energy: Option<String>,
}

#[derive(Debug, Clone, Deserialize, Serialize, Default)]
#[serde(deny_unknown_fields)]
struct RawAtmosphere {
    ks_ray: Option<String>,
    ks_mie: Option<String>,
    ka: Option<String>,
    gamma: Option<f64>,
    g: Option<f64>,
    f: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize, Default)]
#[serde(deny_unknown_fields)]
struct RawObstacle {
    #[serde(skip_serializing_if = "Option::is_none")]
    scale_with_range: Option<bool>,
    thickness_s: Option<String>,
    width_w: Option<String>,
    height_kappa: Option<String>,
    center_x: Option<String>,
    center_y: Option<String>,
}

#[derive(Debug, Clone, Deserialize, Serialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSurface {
    r_r: Option<f64>,
    m_s: Option<f64>,
    eta: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize, Default)]
#[serde(deny_unknown_fields)]
struct RawQuadrature {
    n_vartheta: Option<usize>,
    n_varpi: Option<usize>,
    n_tau: Option<usize>,
    tau_truncation: Option<f64>,
    epsilon_floor: Option<String>,
}

#[derive(Debug, Clone, Deserialize, Serialize, Default)]
#[serde(deny_unknown_fields)]
struct RawMcpt {
    n_photons: Option<u64>,
    survival_threshold: Option<f64>,
    rng_seed: Option<u64>,
    batch_size: Option<u64>,
}

/// Fully resolved, SI-normalized scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub geometry: SystemGeometry,
    pub atmosphere: Atmosphere,
    /// `None` means no obstacle in the scene.
    pub obstacle: Option<ObstacleBox>,
    /// Obstacle dimensions re-derived from the range by the scaling rule.
    pub obstacle_scales_with_range: bool,
    pub surface: Option<ReflectionParams>,
    pub quadrature: QuadratureSpec,
    pub mcpt: McptSpec,
    pub evaluator: BlockageEvaluator,
}

impl ScenarioConfig {
    pub fn scene(&self) -> Scene {
        Scene {
            geom: self.geometry,
            atm: self.atmosphere,
            obstacle: self.obstacle,
            reflection: self.surface,
            quad: self.quadrature,
            evaluator: self.evaluator,
        }
    }

    /// Scene with the range replaced; a scaling obstacle is re-derived.
    pub fn scene_at_range(&self, range_r: f64) -> Scene {
        let mut scene = self.scene();
        scene.geom.range_r = range_r;
        if self.obstacle_scales_with_range {
            scene.obstacle = Some(scaled_obstacle(range_r));
        }
        scene
    }

    /// Serialize back to the config document format (SI units, explicit
    /// suffixes). `load_config_str(emit(c)) == c`.
    pub fn emit(&self) -> String {
        let g = &self.geometry;
        let a = &self.atmosphere;
        let raw = RawConfig {
            preset: None,
            geometry: Some(RawGeometry {
                beta_t: Some(format!("{:?} rad", g.beta_t)),
                beta_r: Some(format!("{:?} rad", g.beta_r)),
                theta_t: Some(format!("{:?} rad", g.theta_t)),
                theta_r: Some(format!("{:?} rad", g.theta_r)),
                alpha_t: Some(format!("{:?} rad", g.alpha_t)),
                alpha_r: Some(format!("{:?} rad", g.alpha_r)),
                range_r: Some(format!("{:?} m", g.range_r)),
                aperture_area: Some(format!("{:?} m2", g.aperture_area)),
                pulse_energy: Some(format!("{:?} J", g.pulse_energy)),
            }),
            atmosphere: Some(RawAtmosphere {
                ks_ray: Some(format!("{:?} m^-1", a.ks_ray)),
                ks_mie: Some(format!("{:?} m^-1", a.ks_mie)),
                ka: Some(format!("{:?} m^-1", a.ka)),
                gamma: Some(a.gamma),
                g: Some(a.g),
                f: Some(a.f),
            }),
            obstacle: self.obstacle.map(|o| RawObstacle {
                scale_with_range: if self.obstacle_scales_with_range {
                    Some(true)
                } else {
                    None
                },
                thickness_s: Some(format!("{:?} m", o.thickness_s)),
                width_w: Some(format!("{:?} m", o.width_w)),
                height_kappa: Some(format!("{:?} m", o.height_kappa)),
                center_x: Some(format!("{:?} m", o.center_x)),
                center_y: Some(format!("{:?} m", o.center_y)),
            }),
            surface: self.surface.map(|s| RawSurface {
                r_r: Some(s.r_r),
                m_s: Some(s.m_s),
                eta: Some(s.eta),
            }),
            quadrature: Some(RawQuadrature {
                n_vartheta: Some(self.quadrature.n_vartheta),
                n_varpi: Some(self.quadrature.n_varpi),
                n_tau: Some(self.quadrature.n_tau),
                tau_truncation: Some(self.quadrature.tau_truncation),
                epsilon_floor: Some(format!("{:?} m", self.quadrature.epsilon_floor)),
            }),
            mcpt: Some(RawMcpt {
                n_photons: Some(self.mcpt.n_photons),
                survival_threshold: Some(self.mcpt.survival_threshold),
                rng_seed: Some(self.mcpt.rng_seed),
                batch_size: Some(self.mcpt.batch_size),
            }),
            evaluator: Some(self.evaluator),
        };
        serde_json::to_string_pretty(&raw).expect("config serializes")
    }
}

/// Parse a quantity string "<value> <unit>" into SI.
fn parse_quantity(s: &str, kind: UnitKind, field: &str) -> Result<f64> {
    let s = s.trim();
    let (num, unit) = s
        .split_once(char::is_whitespace)
        .ok_or_else(|| Error::Parse(format!("field '{field}': '{s}' missing unit suffix")))?;
    let value: f64 = num
        .parse()
        .map_err(|_| Error::Parse(format!("field '{field}': '{num}' is not a number")))?;
    let unit = unit.trim();
    let factor = match (kind, unit) {
        (UnitKind::Angle, "rad") => 1.0,
        (UnitKind::Angle, "deg") => std::f64::consts::PI / 180.0,
        (UnitKind::InverseLength, "m^-1") => 1.0,
        (UnitKind::InverseLength, "km^-1") => 1e-3,
        (UnitKind::Area, "m2") => 1.0,
        (UnitKind::Area, "cm2") => 1e-4,
        (UnitKind::Length, "m") => 1.0,
        (UnitKind::Length, "km") => 1e3,
        (UnitKind::Energy, "J") => 1.0,
        (UnitKind::Energy, "mJ") => 1e-3,
        _ => {
            return Err(Error::Parse(format!(
                "field '{field}': unit '{unit}' not valid for {kind:?}"
            )))
        }
    };
    Ok(value * factor)
}

#[derive(Debug, Clone, Copy)]
enum UnitKind {
    Angle,
    InverseLength,
    Area,
    Length,
    Energy,
}

fn preset_document(name: &str) -> Result<Value> {
    let base_table3 = serde_json::json!({
        "geometry": {
            "beta_t": "30 deg", "beta_r": "30 deg",
            "alpha_t": "95 deg", "alpha_r": "-95 deg",
            "range_r": "100 m",
            "aperture_area": "1.92 cm2",
            "pulse_energy": "1 J"
        },
        "atmosphere": {
            "ks_ray": "0.24 km^-1", "ks_mie": "0.25 km^-1", "ka": "0.90 km^-1",
            "gamma": 0.017, "g": 0.72, "f": 0.5
        },
        "obstacle": { "scale_with_range": true },
        "surface": { "r_r": 0.1, "m_s": 5.0, "eta": 0.5 }
    });
    let with_elevations = |t: &str, r: &str| -> Value {
        let mut doc = base_table3.clone();
        doc["geometry"]["theta_t"] = Value::String(t.to_string());
        doc["geometry"]["theta_r"] = Value::String(r.to_string());
        doc
    };
    match name {
        // Scenario I elevations chosen by anchoring the no-obstacle result at
        // r = 100 m: (25, 35) lands within 0.25 dB of the 98.55 dB reference,
        // while equal elevations miss it by 3 dB.
        "table3-scenario1" => Ok(with_elevations("25 deg", "35 deg")),
        "table3-scenario2" => Ok(with_elevations("35 deg", "35 deg")),
        // alternate reading of the per-scenario elevation sentence
        "table3-equal25" => Ok(with_elevations("25 deg", "25 deg")),
        "table4" => Ok(serde_json::json!({
            "geometry": {
                "beta_t": "15 deg", "beta_r": "15 deg",
                "theta_t": "20 deg", "theta_r": "20 deg",
                "alpha_t": "120 deg", "alpha_r": "-120 deg",
                "range_r": "200 m",
                "aperture_area": "1.92 cm2",
                "pulse_energy": "1 J"
            },
            "atmosphere": {
                "ks_ray": "0.24 km^-1", "ks_mie": "0.25 km^-1", "ka": "0.90 km^-1",
                "gamma": 0.017, "g": 0.72, "f": 0.5
            },
            "obstacle": {
                "thickness_s": "30 m", "width_w": "40 m", "height_kappa": "80 m",
                "center_x": "-45 m", "center_y": "100 m"
            },
            "surface": { "r_r": 0.1, "m_s": 5.0, "eta": 0.5 }
        })),
        other => Err(Error::Parse(format!("unknown preset '{other}'"))),
    }
}

/// Recursive object merge: values from `over` replace values in `base`.
fn merge(base: &mut Value, over: &Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (slot, v) => *slot = v.clone(),
    }
}

/// Load and normalize a config file.
pub fn load_config(path: &std::path::Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)?;
    load_config_str(&text)
}

/// Load and normalize a config document from a string.
pub fn load_config_str(text: &str) -> Result<ScenarioConfig> {
    let user: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let mut doc = match user.get("preset") {
        Some(Value::String(name)) => preset_document(name)?,
        Some(v) => return Err(Error::Parse(format!("preset must be a string, got {v}"))),
        None => Value::Object(Default::default()),
    };
    merge(&mut doc, &user);
    if let Some(obj) = doc.as_object_mut() {
        obj.remove("preset");
    }
    let raw: RawConfig =
        serde_json::from_value(doc).map_err(|e| Error::Parse(e.to_string()))?;
    resolve(raw)
}

// negated comparisons are deliberate throughout: NaN must fail validation,
// and e.g. `v <= 0.0` would let it through
#[allow(clippy::neg_cmp_op_on_partial_ord)]
fn resolve(raw: RawConfig) -> Result<ScenarioConfig> {
    let mut missing: Vec<String> = Vec::new();
    let mut violations: Vec<String> = Vec::new();

    let g = raw.geometry.unwrap_or_default();
    let a = raw.atmosphere.unwrap_or_default();

    let mut angle = |v: &Option<String>, name: &str| -> Result<f64> {
        match v {
            Some(s) => parse_quantity(s, UnitKind::Angle, name),
            None => {
                missing.push(format!("geometry.{name}"));
                Ok(f64::NAN)
            }
        }
    };
    let beta_t = angle(&g.beta_t, "beta_t")?;
    let beta_r = angle(&g.beta_r, "beta_r")?;
    let theta_t = angle(&g.theta_t, "theta_t")?;
    let theta_r = angle(&g.theta_r, "theta_r")?;
    let alpha_t = angle(&g.alpha_t, "alpha_t")?;
    let alpha_r = angle(&g.alpha_r, "alpha_r")?;
    let mut req = |v: &Option<String>, kind: UnitKind, name: &str| -> Result<f64> {
        match v {
            Some(s) => parse_quantity(s, kind, name),
            None => {
                missing.push(name.to_string());
                Ok(f64::NAN)
            }
        }
    };
    let range_r = req(&g.range_r, UnitKind::Length, "geometry.range_r")?;
    let aperture_area = req(&g.aperture_area, UnitKind::Area, "geometry.aperture_area")?;
    let pulse_energy = req(&g.pulse_energy, UnitKind::Energy, "geometry.pulse_energy")?;
    let ks_ray = req(&a.ks_ray, UnitKind::InverseLength, "atmosphere.ks_ray")?;
    let ks_mie = req(&a.ks_mie, UnitKind::InverseLength, "atmosphere.ks_mie")?;
    let ka = req(&a.ka, UnitKind::InverseLength, "atmosphere.ka")?;
    for (name, v) in [
        ("atmosphere.gamma", &a.gamma),
        ("atmosphere.g", &a.g),
        ("atmosphere.f", &a.f),
    ] {
        if v.is_none() {
            missing.push(name.to_string());
        }
    }
    if !missing.is_empty() {
        return Err(Error::Validation(
            missing.iter().map(|m| format!("missing mandatory field {m}")).collect(),
        ));
    }

    let geometry = SystemGeometry {
        beta_t,
        beta_r,
        theta_t,
        theta_r,
        alpha_t,
        alpha_r,
        range_r,
        aperture_area,
        pulse_energy,
    };
    let atmosphere = Atmosphere {
        ks_ray,
        ks_mie,
        ka,
        gamma: a.gamma.unwrap(),
        g: a.g.unwrap(),
        f: a.f.unwrap(),
    };

    let (obstacle, scales) = match raw.obstacle {
        None => (None, false),
        Some(o) => {
            if o.scale_with_range.unwrap_or(false) {
                (Some(scaled_obstacle(range_r)), true)
            } else {
                let field = |v: &Option<String>, name: &str| -> Result<f64> {
                    match v {
                        Some(s) => parse_quantity(s, UnitKind::Length, name),
                        None => Err(Error::Validation(vec![format!(
                            "missing mandatory field obstacle.{name}"
                        )])),
                    }
                };
                let obs = ObstacleBox {
                    thickness_s: field(&o.thickness_s, "thickness_s")?,
                    width_w: field(&o.width_w, "width_w")?,
                    height_kappa: field(&o.height_kappa, "height_kappa")?,
                    center_x: field(&o.center_x, "center_x")?,
                    center_y: field(&o.center_y, "center_y")?,
                };
                (Some(obs), false)
            }
        }
    };

    let surface = match raw.surface {
        None => None,
        Some(s) => {
            let get = |v: Option<f64>, name: &str| {
                v.ok_or_else(|| {
                    Error::Validation(vec![format!("missing mandatory field surface.{name}")])
                })
            };
            Some(ReflectionParams {
                r_r: get(s.r_r, "r_r")?,
                m_s: get(s.m_s, "m_s")?,
                eta: get(s.eta, "eta")?,
            })
        }
    };

    let qd = QuadratureSpec::default();
    let q = raw.quadrature.unwrap_or_default();
    let quadrature = QuadratureSpec {
        n_vartheta: q.n_vartheta.unwrap_or(qd.n_vartheta),
        n_varpi: q.n_varpi.unwrap_or(qd.n_varpi),
        n_tau: q.n_tau.unwrap_or(qd.n_tau),
        tau_truncation: q.tau_truncation.unwrap_or(qd.tau_truncation),
        epsilon_floor: match &q.epsilon_floor {
            Some(s) => parse_quantity(s, UnitKind::Length, "quadrature.epsilon_floor")?,
            None => qd.epsilon_floor,
        },
    };
    let md = McptSpec::default();
    let m = raw.mcpt.unwrap_or_default();
    let mcpt = McptSpec {
        n_photons: m.n_photons.unwrap_or(md.n_photons),
        survival_threshold: m.survival_threshold.unwrap_or(md.survival_threshold),
        rng_seed: m.rng_seed.unwrap_or(md.rng_seed),
        batch_size: m.batch_size.unwrap_or(md.batch_size),
    };

    // hard invariants; geometric validity (corner limits etc.) is reported
    // separately by validate_geometry and does not block loading
    for (name, v, lo, hi) in [
        ("beta_t", beta_t, 0.0, std::f64::consts::FRAC_PI_2),
        ("beta_r", beta_r, 0.0, std::f64::consts::FRAC_PI_2),
        ("theta_t", theta_t, 0.0, std::f64::consts::FRAC_PI_2),
        ("theta_r", theta_r, 0.0, std::f64::consts::FRAC_PI_2),
    ] {
        if !(v > lo && v < hi) {
            violations.push(format!("geometry.{name} = {v} outside ({lo}, {hi})"));
        }
    }
    for (name, v) in [
        ("geometry.range_r", range_r),
        ("geometry.aperture_area", aperture_area),
        ("geometry.pulse_energy", pulse_energy),
    ] {
        if !(v > 0.0) {
            violations.push(format!("{name} = {v} must be positive"));
        }
    }
    for (name, v) in [
        ("atmosphere.ks_ray", ks_ray),
        ("atmosphere.ks_mie", ks_mie),
        ("atmosphere.ka", ka),
    ] {
        if !(v >= 0.0) {
            violations.push(format!("{name} = {v} must be non-negative"));
        }
    }
    if !(ks_ray + ks_mie > 0.0) {
        violations.push("atmosphere: ks_ray + ks_mie must be positive".into());
    }
    if !(atmosphere.g > -1.0 && atmosphere.g < 1.0) {
        violations.push(format!("atmosphere.g = {} outside (-1, 1)", atmosphere.g));
    }
    if !(0.0..=1.0).contains(&atmosphere.f) {
        violations.push(format!("atmosphere.f = {} outside [0, 1]", atmosphere.f));
    }
    if !(atmosphere.gamma >= 0.0) {
        violations.push(format!("atmosphere.gamma = {} must be >= 0", atmosphere.gamma));
    }
    if let Some(s) = &surface {
        if !(0.0..=1.0).contains(&s.r_r) {
            violations.push(format!("surface.r_r = {} outside [0, 1]", s.r_r));
        }
        if !(0.0..=1.0).contains(&s.eta) {
            violations.push(format!("surface.eta = {} outside [0, 1]", s.eta));
        }
        if !(s.m_s >= 0.0) {
            violations.push(format!("surface.m_s = {} must be >= 0", s.m_s));
        }
    }
    if let Some(o) = &obstacle {
        for (name, v) in [
            ("thickness_s", o.thickness_s),
            ("width_w", o.width_w),
            ("height_kappa", o.height_kappa),
        ] {
            if !(v > 0.0) {
                violations.push(format!("obstacle.{name} = {v} must be positive"));
            }
        }
        if !(o.center_x < -0.5 * o.thickness_s) {
            violations.push(format!(
                "obstacle.center_x = {} must be < -s/2 = {}",
                o.center_x,
                -0.5 * o.thickness_s
            ));
        }
    }
    if quadrature.n_vartheta < 2 || quadrature.n_varpi < 2 || quadrature.n_tau < 2 {
        violations.push("quadrature node counts must be >= 2".into());
    }
    if !(quadrature.tau_truncation > 0.0) {
        violations.push("quadrature.tau_truncation must be positive".into());
    }
    if !(quadrature.epsilon_floor > 0.0) {
        violations.push("quadrature.epsilon_floor must be positive".into());
    }
    if mcpt.n_photons < 1 {
        violations.push("mcpt.n_photons must be >= 1".into());
    }
    if !(mcpt.survival_threshold > 0.0 && mcpt.survival_threshold < 1.0) {
        violations.push("mcpt.survival_threshold must be in (0, 1)".into());
    }
    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }

    Ok(ScenarioConfig {
        geometry,
        atmosphere,
        obstacle,
        obstacle_scales_with_range: scales,
        surface,
        quadrature,
        mcpt,
        evaluator: raw.evaluator.unwrap_or_default(),
    })
}
