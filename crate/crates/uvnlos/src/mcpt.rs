//! Monte-Carlo photon tracing with a single collision event (scatter or
//! facade reflection) and next-event estimation to the receiver.
//!
//! Free paths are sampled against the scattering coefficient; absorption is
//! carried as a multiplicative weight, which is equivalent in expectation to
//! extinction-based sampling with survival re-weighting and has lower
//! variance at a single collision order.

use crate::geometry::{segment_hits_box, ObstacleBox, SystemGeometry};
use crate::reflection::{phong_intensity, ReflectionSurface};
use crate::scattering::{phase, Atmosphere};
use crate::vec3::Vec3;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Simulation controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McptSpec {
    pub n_photons: u64,
    /// Contributions below this weight are dropped.
    pub survival_threshold: f64,
    pub rng_seed: u64,
    /// Photons per deterministic accumulation batch.
    pub batch_size: u64,
}

impl Default for McptSpec {
    fn default() -> Self {
        McptSpec {
            n_photons: 10_000_000,
            survival_threshold: 1e-10,
            rng_seed: 1,
            batch_size: 65_536,
        }
    }
}

/// Monte-Carlo estimate of the received energy.
#[derive(Debug, Clone, Copy)]
pub struct McptEstimate {
    /// Estimated received energy (J).
    pub q_r_hat: f64,
    /// Standard error of the estimate (J).
    pub std_error: f64,
    pub path_loss_db: f64,
    /// Photons with a nonzero contribution.
    pub n_contributing: u64,
    pub n_photons: u64,
}

impl McptEstimate {
    /// Standard error expressed in dB at the current estimate.
    pub fn std_error_db(&self) -> f64 {
        if self.q_r_hat > 0.0 {
            10.0 / std::f64::consts::LN_10 * self.std_error / self.q_r_hat
        } else {
            f64::INFINITY
        }
    }

    pub fn insufficient(&self) -> bool {
        self.n_contributing == 0
    }
}

/// Counter-based per-photon generator: the stream depends only on
/// (seed, photon index), so any parallel schedule reproduces it.
pub fn photon_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut state = seed ^ 0x9e37_79b9_7f4a_7c15;
    for chunk in key.chunks_mut(8) {
        state = splitmix64(state.wrapping_add(index.wrapping_mul(0xbf58_476d_1ce4_e5b9)));
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Uniform direction on the spherical cap of half-angle beta_t about the
/// beam axis.
pub fn sample_beam_direction<R: Rng>(rng: &mut R, geom: &SystemGeometry) -> Vec3 {
    let cos_theta = 1.0 - rng.gen::<f64>() * (1.0 - geom.beta_t.cos());
    let sin_theta = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
    let phi = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
    let local = Vec3::new(sin_theta * phi.cos(), sin_theta * phi.sin(), cos_theta);
    let axis = geom.tx_axis();
    let (u, v) = orthonormal_basis(axis);
    u * local.x + v * local.y + axis * local.z
}

fn orthonormal_basis(w: Vec3) -> (Vec3, Vec3) {
    let helper = if w.z.abs() < 0.9 {
        Vec3::new(0.0, 0.0, 1.0)
    } else {
        Vec3::new(1.0, 0.0, 0.0)
    };
    let u = helper.cross(w).normalized();
    (u, w.cross(u))
}

/// First intersection of the ray origin + t*dir with the box, as
/// (t_entry, entry_face), where the face is 0/1/2 for x/y/z slab and the
/// bool is true for the max-side face.
fn ray_box_entry(origin: Vec3, dir: Vec3, obstacle: &ObstacleBox) -> Option<(f64, usize, bool)> {
    let mut t_lo = 0.0_f64;
    let mut t_hi = f64::INFINITY;
    let mut entry_axis = usize::MAX;
    let mut entry_max_side = false;
    let slabs = [
        (origin.x, dir.x, obstacle.x_min(), obstacle.x_max()),
        (origin.y, dir.y, obstacle.y_min(), obstacle.y_max()),
        (origin.z, dir.z, 0.0, obstacle.height_kappa),
    ];
    for (axis, (o, d, lo, hi)) in slabs.into_iter().enumerate() {
        if d.abs() < 1e-300 {
            if o <= lo || o >= hi {
                return None;
            }
        } else {
            let inv = 1.0 / d;
            let (mut t0, mut t1) = ((lo - o) * inv, (hi - o) * inv);
            // the entry face along the ray: max side when travelling backward
            let max_side = d < 0.0;
            if t0 > t1 {
                std::mem::swap(&mut t0, &mut t1);
            }
            if t0 > t_lo {
                t_lo = t0;
                entry_axis = axis;
                entry_max_side = max_side;
            }
            t_hi = t_hi.min(t1);
            if t_lo >= t_hi {
                return None;
            }
        }
    }
    if entry_axis == usize::MAX || t_lo <= 0.0 {
        None
    } else {
        Some((t_lo, entry_axis, entry_max_side))
    }
}

/// Trace the configured photon count and estimate the received energy.
pub fn trace(
    geom: &SystemGeometry,
    atm: &Atmosphere,
    obstacle: Option<&ObstacleBox>,
    surface: Option<&ReflectionSurface>,
    spec: &McptSpec,
) -> McptEstimate {
    let n = spec.n_photons;
    let batch = spec.batch_size.max(1);
    let n_batches = n.div_ceil(batch);
    let partials: Vec<(f64, f64, u64)> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let start = b * batch;
            let end = ((b + 1) * batch).min(n);
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            let mut contributing = 0;
            for i in start..end {
                let w = trace_photon(spec.rng_seed, i, geom, atm, obstacle, surface, spec);
                if w > 0.0 {
                    contributing += 1;
                }
                sum += w;
                sumsq += w * w;
            }
            (sum, sumsq, contributing)
        })
        .collect();
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    let mut contributing = 0;
    for (s, sq, c) in partials {
        sum += s;
        sumsq += sq;
        contributing += c;
    }
    let nf = n as f64;
    let mean = sum / nf;
    let var = (sumsq / nf - mean * mean).max(0.0);
    let q = geom.pulse_energy * mean;
    let se = geom.pulse_energy * (var / nf).sqrt();
    McptEstimate {
        q_r_hat: q,
        std_error: se,
        path_loss_db: crate::channel::path_loss_db(geom.pulse_energy, q),
        n_contributing: contributing,
        n_photons: n,
    }
}

/// Weight contributed by one photon (already normalized by Q_t).
fn trace_photon(
    seed: u64,
    index: u64,
    geom: &SystemGeometry,
    atm: &Atmosphere,
    obstacle: Option<&ObstacleBox>,
    surface: Option<&ReflectionSurface>,
    spec: &McptSpec,
) -> f64 {
    let mut rng = photon_rng(seed, index);
    let dir = sample_beam_direction(&mut rng, geom);
    let ks = atm.ks();
    let free_path = -rng.gen::<f64>().ln() / ks;

    let hit = obstacle.and_then(|obs| ray_box_entry(Vec3::ZERO, dir, obs));
    if let Some((t_box, axis, max_side)) = hit {
        if t_box < free_path {
            // collision with the obstacle before any scattering event
            let facade_hit = axis == 0 && max_side;
            let Some(surf) = surface else {
                return 0.0;
            };
            if !facade_hit || surf.r_r <= 0.0 {
                return 0.0;
            }
            let point = dir * t_box;
            let patch = crate::reflection::ReflectionPatchSample::at(point, geom, surf);
            if patch.theta_v > geom.beta_r {
                return 0.0;
            }
            let ir = match phong_intensity(patch.theta_1, patch.theta_2, surf.eta, surf.m_s) {
                Ok(v) => v,
                Err(_) => return 0.0,
            };
            // the threshold applies to the photon's carried weight, not to
            // the next-event contribution (which includes the receiver
            // solid-angle factor); thresholding the contribution would bias
            // the estimate low at long range
            let carried = surf.r_r * (-atm.ka * patch.tau).exp();
            if carried < spec.survival_threshold {
                return 0.0;
            }
            return carried * ir * geom.aperture_area * patch.theta_v.cos()
                / (patch.epsilon * patch.epsilon)
                * (-atm.ke() * patch.epsilon).exp();
        }
    }

    // scattering collision at the sampled free path
    let p = dir * free_path;
    let to_receiver = geom.receiver() - p;
    let eps = to_receiver.norm();
    if eps <= 0.0 {
        return 0.0;
    }
    let theta_v = (p - geom.receiver()).angle_to(geom.rx_axis());
    if theta_v > geom.beta_r {
        return 0.0;
    }
    if let Some(obs) = obstacle {
        if segment_hits_box(p, geom.receiver(), obs) {
            return 0.0;
        }
    }
    let mu = dir.dot(to_receiver / eps).clamp(-1.0, 1.0);
    let ph = match phase(mu, atm) {
        Ok(v) => v,
        Err(_) => return 0.0,
    };
    let carried = (-atm.ka * free_path).exp();
    if carried < spec.survival_threshold {
        return 0.0;
    }
    carried * ph * geom.aperture_area * theta_v.cos() / (eps * eps) * (-atm.ke() * eps).exp()
}
