//! Facade reflection: effective region on the obstacle face toward the link
//! and the reflected-energy double integral.

use crate::error::{Error, Result};
use crate::geometry::{ObstacleBox, SystemGeometry};
use crate::quad::gauss_legendre_on;
use crate::vec3::Vec3;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Reflecting facade of the obstacle: the +X face spanned by corners C, D
/// and their ground projections. Outward normal (1, 0, 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionSurface {
    /// Reflection coefficient.
    pub r_r: f64,
    /// Specular directivity exponent.
    pub m_s: f64,
    /// Diffusely reflected fraction.
    pub eta: f64,
    /// Facade plane x = x_c (m).
    pub plane_x: f64,
    /// Facade span in y: [y_c, y_d] (m).
    pub y_span: (f64, f64),
    /// Facade span in z: [0, kappa] (m).
    pub z_span: (f64, f64),
}

impl ReflectionSurface {
    /// Facade of the given obstacle with the stated reflection parameters.
    pub fn on_facade(obstacle: &ObstacleBox, r_r: f64, m_s: f64, eta: f64) -> Self {
        ReflectionSurface {
            r_r,
            m_s,
            eta,
            plane_x: obstacle.x_max(),
            y_span: (obstacle.y_min(), obstacle.y_max()),
            z_span: (0.0, obstacle.height_kappa),
        }
    }

    pub fn normal(&self) -> Vec3 {
        Vec3::new(1.0, 0.0, 0.0)
    }
}

/// One facade patch with its transfer geometry.
#[derive(Debug, Clone, Copy)]
pub struct ReflectionPatchSample {
    pub point: Vec3,
    /// T -> patch vector and its length.
    pub tau_vec: Vec3,
    pub tau: f64,
    /// patch -> R vector and its length.
    pub eps_vec: Vec3,
    pub epsilon: f64,
    /// Incidence angle from the facade normal.
    pub omega_i: f64,
    /// Specular direction of the incident ray about the normal.
    pub v_s: Vec3,
    /// Angle between the outgoing direction and the normal.
    pub theta_1: f64,
    /// Angle between the outgoing direction and the specular direction.
    pub theta_2: f64,
    /// Arrival off-axis angle at the receiver.
    pub theta_v: f64,
}

impl ReflectionPatchSample {
    pub fn at(point: Vec3, geom: &SystemGeometry, surface: &ReflectionSurface) -> Self {
        let n = surface.normal();
        let tau_vec = point;
        let tau = tau_vec.norm();
        let tau_hat = tau_vec / tau;
        let r = geom.receiver();
        let eps_vec = r - point;
        let epsilon = eps_vec.norm();
        let eps_hat = eps_vec / epsilon;
        let v_s = tau_hat - 2.0 * tau_hat.dot(n) * n;
        ReflectionPatchSample {
            point,
            tau_vec,
            tau,
            eps_vec,
            epsilon,
            omega_i: (-n.dot(tau_hat)).clamp(-1.0, 1.0).acos(),
            v_s,
            theta_1: eps_hat.angle_to(n),
            theta_2: eps_hat.angle_to(v_s),
            theta_v: (point - r).angle_to(geom.rx_axis()),
        }
    }
}

/// True when the facade point lies inside the effective reflection region:
/// on the facade rectangle and within both the beam and FoV cones.
pub fn in_reflection_region(point: Vec3, geom: &SystemGeometry, obstacle: &ObstacleBox) -> bool {
    let (y_lo, y_hi) = (obstacle.y_min(), obstacle.y_max());
    if point.y < y_lo || point.y > y_hi || point.z < 0.0 || point.z > obstacle.height_kappa {
        return false;
    }
    let tau = point.norm();
    let eps = (point - geom.receiver()).norm();
    if tau == 0.0 || eps == 0.0 {
        return false;
    }
    let cos_t_esp = geom.tx_axis().dot(point) / tau;
    let cos_r_esp = geom.rx_axis().dot(point - geom.receiver()) / eps;
    cos_t_esp >= geom.beta_t.cos() && cos_r_esp >= geom.beta_r.cos()
}

/// Phong reflection pattern: Lambertian diffuse lobe plus a directive
/// specular lobe, clamped to zero below the surface horizon (sr^-1).
pub fn phong_intensity(theta_1: f64, theta_2: f64, eta: f64, m_s: f64) -> Result<f64> {
    if !(0.0..=std::f64::consts::FRAC_PI_2 + 1e-12).contains(&theta_1) {
        return Err(Error::Domain(format!("theta_1 = {theta_1} outside [0, pi/2]")));
    }
    if !(0.0..=PI + 1e-12).contains(&theta_2) {
        return Err(Error::Domain(format!("theta_2 = {theta_2} outside [0, pi]")));
    }
    let diffuse = eta * theta_1.cos() / PI;
    let c2 = theta_2.cos();
    let specular = if c2 > 0.0 {
        (1.0 - eta) * (m_s + 1.0) / (2.0 * PI) * c2.powf(m_s)
    } else {
        0.0
    };
    Ok(diffuse + specular)
}

/// Reflected-energy integrand density at a patch (J m^-2), including the
/// r_r * Q_t * A_r scale.
pub fn reflection_integrand(
    patch: &ReflectionPatchSample,
    geom: &SystemGeometry,
    atm: &crate::scattering::Atmosphere,
    surface: &ReflectionSurface,
) -> Result<f64> {
    let ir = phong_intensity(patch.theta_1, patch.theta_2, surface.eta, surface.m_s)?;
    let z = ir * patch.theta_v.cos() * patch.omega_i.cos()
        * (-atm.ke() * (patch.tau + patch.epsilon)).exp()
        / (2.0 * PI
            * (1.0 - geom.beta_t.cos())
            * patch.tau
            * patch.tau
            * patch.epsilon
            * patch.epsilon);
    Ok(surface.r_r * geom.pulse_energy * geom.aperture_area * z)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ReflectionDiagnostics {
    /// Fraction of facade cubature nodes inside the effective region.
    pub active_fraction: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct ReflectionEstimate {
    pub q_ref: f64,
    pub diagnostics: ReflectionDiagnostics,
}

/// Gauss-Legendre cubature of the reflected-energy double integral over the
/// facade, with the integrand zeroed outside the effective region.
pub fn reflected_energy(
    geom: &SystemGeometry,
    atm: &crate::scattering::Atmosphere,
    obstacle: &ObstacleBox,
    surface: &ReflectionSurface,
    n_y: usize,
    n_z: usize,
) -> ReflectionEstimate {
    let (y_lo, y_hi) = surface.y_span;
    let (z_lo, z_hi) = surface.z_span;
    let y_rule = gauss_legendre_on(n_y, y_lo, y_hi);
    let z_rule = gauss_legendre_on(n_z, z_lo, z_hi);
    let rows: Vec<(f64, usize)> = y_rule
        .par_iter()
        .map(|&(y, wy)| {
            let mut acc = 0.0;
            let mut active = 0;
            for &(z, wz) in &z_rule {
                let point = Vec3::new(surface.plane_x, y, z);
                if !in_reflection_region(point, geom, obstacle) {
                    continue;
                }
                active += 1;
                let patch = ReflectionPatchSample::at(point, geom, surface);
                if let Ok(v) = reflection_integrand(&patch, geom, atm, surface) {
                    acc += wy * wz * v;
                }
            }
            (acc, active)
        })
        .collect();
    let q: f64 = rows.iter().map(|(v, _)| v).sum();
    let active: usize = rows.iter().map(|(_, a)| a).sum();
    ReflectionEstimate {
        q_ref: q.max(0.0),
        diagnostics: ReflectionDiagnostics {
            active_fraction: active as f64 / (n_y * n_z) as f64,
        },
    }
}
