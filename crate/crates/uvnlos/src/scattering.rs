//! Scattering phase functions and the scattered-energy triple integral.

use crate::error::{Error, Result};
use crate::geometry::{
    g_wei_oracle, g_wei_paper, scatter_point, tau_interval, varpi_bounds, BlockageEvaluator,
    ObstacleBox, ScatterSample, SystemGeometry,
};
use crate::quad::gauss_legendre_on;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Atmospheric scattering/absorption coefficients and phase-function
/// parameters. All coefficients in m^-1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atmosphere {
    /// Rayleigh scattering coefficient (m^-1).
    pub ks_ray: f64,
    /// Mie scattering coefficient (m^-1).
    pub ks_mie: f64,
    /// Absorption coefficient (m^-1).
    pub ka: f64,
    /// Rayleigh anisotropy parameter.
    pub gamma: f64,
    /// Mie asymmetry factor.
    pub g: f64,
    /// Mie hemispheric correction weight.
    pub f: f64,
}

impl Atmosphere {
    pub fn ks(&self) -> f64 {
        self.ks_ray + self.ks_mie
    }
    pub fn ke(&self) -> f64 {
        self.ks() + self.ka
    }
}

/// Node counts and regularization knobs for the cubature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub n_vartheta: usize,
    pub n_varpi: usize,
    pub n_tau: usize,
    /// Unbounded tau intervals are capped at tau_lo + C / k_e.
    pub tau_truncation: f64,
    /// Minimum epsilon below which the integrand is zeroed.
    pub epsilon_floor: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            n_vartheta: 64,
            n_varpi: 64,
            n_tau: 128,
            tau_truncation: 30.0,
            epsilon_floor: 1e-6,
        }
    }
}

/// Rayleigh phase function with anisotropy parameter gamma (sr^-1).
pub fn phase_rayleigh(mu: f64, gamma: f64) -> Result<f64> {
    check_mu(mu)?;
    Ok(3.0 * (1.0 + 3.0 * gamma + (1.0 - gamma) * mu * mu) / (16.0 * PI * (1.0 + 2.0 * gamma)))
}

/// Generalized Henyey-Greenstein phase function with hemispheric correction
/// weight f (sr^-1).
pub fn phase_mie(mu: f64, g: f64, f: f64) -> Result<f64> {
    check_mu(mu)?;
    if g.abs() >= 1.0 {
        return Err(Error::Domain(format!("asymmetry factor g = {g} outside (-1, 1)")));
    }
    let g2 = g * g;
    Ok((1.0 - g2) / (4.0 * PI)
        * ((1.0 + g2 - 2.0 * g * mu).powf(-1.5)
            + f * (3.0 * mu * mu - 1.0) / (2.0 * (1.0 + g2).powf(1.5))))
}

/// Mixture phase function weighted by the scattering coefficients (sr^-1).
pub fn phase(mu: f64, atm: &Atmosphere) -> Result<f64> {
    let ks = atm.ks();
    if ks <= 0.0 {
        return Err(Error::ZeroScattering);
    }
    Ok((atm.ks_ray / ks) * phase_rayleigh(mu, atm.gamma)?
        + (atm.ks_mie / ks) * phase_mie(mu, atm.g, atm.f)?)
}

fn check_mu(mu: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&mu) {
        return Err(Error::Domain(format!("mu = {mu} outside [-1, 1]")));
    }
    Ok(())
}

/// Scattered-energy integrand density at a sample, with the volume Jacobian
/// folded in and the tau^2 factors cancelled analytically. Excludes the
/// weighting factor. Units J m^-1 rad^-2.
pub fn kernel(
    sample: &ScatterSample,
    geom: &SystemGeometry,
    atm: &Atmosphere,
    epsilon_floor: f64,
) -> Result<f64> {
    if sample.epsilon <= epsilon_floor {
        return Err(Error::EpsilonUnderflow);
    }
    let ke = atm.ke();
    let p = phase(sample.theta_s.cos().clamp(-1.0, 1.0), atm)?;
    Ok(geom.pulse_energy * sample.theta_v.cos() * p * (-ke * (sample.tau + sample.epsilon)).exp()
        * geom.aperture_area
        * atm.ks()
        * sample.varpi.cos()
        / (2.0 * PI * (1.0 - geom.beta_t.cos()) * sample.epsilon * sample.epsilon))
}

/// Convergence/blockage diagnostics of one cubature run.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScatterDiagnostics {
    /// Fraction of the total tau-interval length with weighting factor zero.
    pub blocked_fraction: f64,
    /// Remainder bound of the tau truncation, Q_t * exp(-C).
    pub truncation_bound: f64,
    /// Nodes zeroed because epsilon fell below the floor.
    pub epsilon_underflows: usize,
    /// (vartheta, varpi) node pairs whose tau interval was empty.
    pub empty_columns: usize,
    /// Total (vartheta, varpi) node pairs.
    pub total_columns: usize,
}

/// Result of the scattered-energy cubature.
#[derive(Debug, Clone, Copy)]
pub struct ScatterEstimate {
    pub q_sca: f64,
    pub diagnostics: ScatterDiagnostics,
}

/// Evaluate the scattered-energy triple integral by tensor-product
/// Gauss-Legendre cubature. `obstacle` of `None` evaluates the no-obstacle
/// limit (weighting factor identically one).
pub fn scattered_energy(
    geom: &SystemGeometry,
    atm: &Atmosphere,
    obstacle: Option<&ObstacleBox>,
    quad: &QuadratureSpec,
    evaluator: BlockageEvaluator,
) -> ScatterEstimate {
    let theta_rule = gauss_legendre_on(quad.n_vartheta, -geom.beta_t, geom.beta_t);
    let per_theta: Vec<(f64, f64, usize, usize, f64, f64)> = theta_rule
        .par_iter()
        .map(|&(vt, wt)| integrate_plane(vt, wt, geom, atm, obstacle, quad, evaluator))
        .collect();

    let mut q = 0.0;
    let mut blocked_len = 0.0;
    let mut total_len = 0.0;
    let mut underflows = 0;
    let mut empty = 0;
    let mut total_cols = 0;
    for (qi, blocked, uf, emp, tlen, _) in &per_theta {
        q += qi;
        blocked_len += blocked;
        underflows += uf;
        empty += emp;
        total_len += tlen;
        total_cols += quad.n_varpi;
    }
    ScatterEstimate {
        q_sca: q.max(0.0),
        diagnostics: ScatterDiagnostics {
            blocked_fraction: if total_len > 0.0 { blocked_len / total_len } else { 0.0 },
            truncation_bound: geom.pulse_energy * (-quad.tau_truncation).exp(),
            epsilon_underflows: underflows,
            empty_columns: empty,
            total_columns: total_cols,
        },
    }
}

/// Integrate one rotating plane: inner cubature over (varpi, tau).
/// Returns (sum, blocked_length, underflows, empty_columns, total_length, vt).
#[allow(clippy::too_many_arguments)]
fn integrate_plane(
    vt: f64,
    wt: f64,
    geom: &SystemGeometry,
    atm: &Atmosphere,
    obstacle: Option<&ObstacleBox>,
    quad: &QuadratureSpec,
    evaluator: BlockageEvaluator,
) -> (f64, f64, usize, usize, f64, f64) {
    let (w_min, w_max) = varpi_bounds(vt, geom.beta_t).expect("vartheta node inside beam");
    let tx_frame = obstacle
        .filter(|_| evaluator == BlockageEvaluator::PaperCases)
        .map(|obs| crate::geometry::tx_plane_frame(vt, geom, obs));
    let mut sum = 0.0;
    let mut blocked_len = 0.0;
    let mut total_len = 0.0;
    let mut underflows = 0;
    let mut empty_cols = 0;

    let g_of = |s: &ScatterSample| -> u8 {
        match obstacle {
            None => 1,
            Some(obs) => match evaluator {
                BlockageEvaluator::ExactOracle => g_wei_oracle(s.point_p, geom, obs),
                BlockageEvaluator::PaperCases => {
                    let frame = tx_frame.as_ref().expect("tx frame built for paper evaluator");
                    match frame {
                        Ok(fr) => g_wei_paper(s, geom, obs, fr).unwrap_or(0),
                        Err(_) => g_wei_oracle(s.point_p, geom, obs),
                    }
                }
            },
        }
    };

    for &(vw, ww) in &gauss_legendre_on(quad.n_varpi, w_min, w_max) {
        let interval = tau_interval(vt, vw, geom);
        if interval.is_empty() {
            empty_cols += 1;
            continue;
        }
        let lo = interval.lo.max(0.0);
        let hi = match interval.hi {
            Some(h) => h,
            None => lo + quad.tau_truncation / atm.ke().max(1e-12),
        };
        if hi <= lo {
            empty_cols += 1;
            continue;
        }
        total_len += hi - lo;

        let sample_at = |tau: f64| scatter_point(tau, vw, vt, geom);
        let g_at = |tau: f64| -> u8 { sample_at(tau).map(|s| g_of(&s)).unwrap_or(0) };

        // locate weighting-factor transitions along tau, then integrate each
        // unblocked sub-interval
        let pieces = if obstacle.is_some() {
            unblocked_pieces(lo, hi, &g_at)
        } else {
            vec![(lo, hi)]
        };
        let covered: f64 = pieces.iter().map(|(a, b)| b - a).sum();
        blocked_len += (hi - lo) - covered;

        for (a, b) in pieces {
            for &(tau, wtau) in &gauss_legendre_on(quad.n_tau, a, b) {
                if let Ok(s) = sample_at(tau) {
                    match kernel(&s, geom, atm, quad.epsilon_floor) {
                        Ok(k) => sum += wt * ww * wtau * k,
                        Err(Error::EpsilonUnderflow) => underflows += 1,
                        Err(_) => {}
                    }
                }
            }
        }
    }
    (sum, blocked_len, underflows, empty_cols, total_len, vt)
}

/// Sub-intervals of [lo, hi] on which the weighting factor is one.
/// Transitions are located by uniform probing plus bisection to 1e-9 m.
fn unblocked_pieces(lo: f64, hi: f64, g_at: &dyn Fn(f64) -> u8) -> Vec<(f64, f64)> {
    const PROBES: usize = 33;
    const BISECT_TOL: f64 = 1e-9;
    let mut xs = Vec::with_capacity(PROBES);
    let mut gs = Vec::with_capacity(PROBES);
    for i in 0..PROBES {
        let t = lo + (hi - lo) * (i as f64 + 0.5) / PROBES as f64;
        xs.push(t);
        gs.push(g_at(t));
    }
    let mut cuts = vec![lo];
    for i in 0..PROBES - 1 {
        if gs[i] != gs[i + 1] {
            let (mut a, mut b) = (xs[i], xs[i + 1]);
            let ga = gs[i];
            while b - a > BISECT_TOL {
                let m = 0.5 * (a + b);
                if g_at(m) == ga {
                    a = m;
                } else {
                    b = m;
                }
            }
            cuts.push(0.5 * (a + b));
        }
    }
    cuts.push(hi);
    let mut pieces = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b > a && g_at(0.5 * (a + b)) == 1 {
            pieces.push((a, b));
        }
    }
    pieces
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::geometry::scatter_point;

    fn table3_atm() -> Atmosphere {
        Atmosphere { ks_ray: 0.24e-3, ks_mie: 0.25e-3, ka: 0.90e-3, gamma: 0.017, g: 0.72, f: 0.5 }
    }

    fn table3_geom() -> SystemGeometry {
        SystemGeometry {
            beta_t: 30f64.to_radians(),
            beta_r: 30f64.to_radians(),
            theta_t: 25f64.to_radians(),
            theta_r: 35f64.to_radians(),
            alpha_t: 95f64.to_radians(),
            alpha_r: -95f64.to_radians(),
            range_r: 100.0,
            aperture_area: 1.92e-4,
            pulse_energy: 1.0,
        }
    }

    /// Sphere integral of an azimuthally symmetric density given as f(mu).
    fn sphere_integral(f: impl Fn(f64) -> f64) -> f64 {
        // 2 pi * int_{-1}^{1} f(mu) d mu
        gauss_legendre_on(200, -1.0, 1.0)
            .iter()
            .map(|&(mu, w)| w * f(mu))
            .sum::<f64>()
            * 2.0
            * PI
    }

    #[test]
    fn rayleigh_normalized_even_and_pinned() {
        let gamma = 0.017;
        let s = sphere_integral(|mu| phase_rayleigh(mu, gamma).unwrap());
        assert!((s - 1.0).abs() < 1e-9, "integral = {s}");
        for mu in [0.1, 0.35, 0.99] {
            assert_eq!(phase_rayleigh(mu, gamma).unwrap(), phase_rayleigh(-mu, gamma).unwrap());
        }
        let v = phase_rayleigh(0.0, 0.0).unwrap();
        assert!((v - 3.0 / (16.0 * PI)).abs() < 1e-15);
        assert!(matches!(phase_rayleigh(1.2, gamma), Err(Error::Domain(_))));
    }

    #[test]
    fn mie_isotropic_limit_normalization_and_forward_peak() {
        for mu in [-1.0, -0.3, 0.0, 0.8, 1.0] {
            let v = phase_mie(mu, 0.0, 0.0).unwrap();
            assert!((v - 1.0 / (4.0 * PI)).abs() < 1e-15);
        }
        let s = sphere_integral(|mu| phase_mie(mu, 0.72, 0.5).unwrap());
        assert!((s - 1.0).abs() < 1e-9, "integral = {s}");
        assert!(phase_mie(1.0, 0.72, 0.5).unwrap() > phase_mie(-1.0, 0.72, 0.5).unwrap());
        assert!(matches!(phase_mie(0.0, 1.0, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn mixture_weights_normalization_and_collapse() {
        let atm = table3_atm();
        let wr = atm.ks_ray / atm.ks();
        assert!((wr - 0.24 / 0.49).abs() < 1e-12);
        let s = sphere_integral(|mu| phase(mu, &atm).unwrap());
        assert!((s - 1.0).abs() < 1e-9, "integral = {s}");

        let pure = Atmosphere { ks_mie: 0.0, ..atm };
        for mu in [-0.9, 0.0, 0.5] {
            let got = phase(mu, &pure).unwrap();
            let want = phase_rayleigh(mu, atm.gamma).unwrap();
            assert!((got - want).abs() < 1e-15);
        }
        let dead = Atmosphere { ks_ray: 0.0, ks_mie: 0.0, ..atm };
        assert!(matches!(phase(0.0, &dead), Err(Error::ZeroScattering)));
    }

    #[test]
    fn kernel_matches_term_by_term_form() {
        // uncancelled product with the explicit Jacobian against the
        // cancelled implementation
        let geom = table3_geom();
        let atm = table3_atm();
        let mut failures = 0;
        for (i, tau) in [40.0, 80.0, 120.0, 160.0].iter().enumerate() {
            let vt = -0.3 + 0.17 * i as f64;
            let (wlo, whi) = crate::geometry::varpi_bounds(vt, geom.beta_t).unwrap();
            let vw = wlo + 0.3 * (whi - wlo);
            let s = scatter_point(*tau, vw, vt, &geom).unwrap();
            let cancelled = kernel(&s, &geom, &atm, 1e-6).unwrap();
            let j3 = crate::geometry::jacobian(*tau, vw);
            let raw = geom.pulse_energy
                * s.theta_v.cos()
                * phase(s.theta_s.cos(), &atm).unwrap()
                * (-atm.ke() * (s.tau + s.epsilon)).exp()
                * geom.aperture_area
                * atm.ks()
                * j3
                / (2.0 * PI * (1.0 - geom.beta_t.cos()) * tau * tau * s.epsilon * s.epsilon);
            if ((cancelled - raw) / raw).abs() > 1e-12 {
                failures += 1;
            }
        }
        assert_eq!(failures, 0);
    }

    #[test]
    fn kernel_collapse_without_extinction() {
        let geom = table3_geom();
        // isotropic phase, no extinction
        let atm = Atmosphere { ks_ray: 0.0, ks_mie: 1.0, ka: -1.0, gamma: 0.0, g: 0.0, f: 0.0 };
        assert_eq!(atm.ke(), 0.0);
        let s = scatter_point(90.0, 0.12, 0.2, &geom).unwrap();
        let got = kernel(&s, &geom, &atm, 1e-6).unwrap();
        let want = s.theta_v.cos() * geom.aperture_area * atm.ks() * s.varpi.cos()
            / (8.0 * PI * PI * (1.0 - geom.beta_t.cos()) * s.epsilon * s.epsilon);
        assert!(((got - want) / want).abs() < 1e-13);
    }

    #[test]
    fn kernel_epsilon_floor() {
        let geom = table3_geom();
        let atm = table3_atm();
        let s = scatter_point(90.0, 0.0, 0.0, &geom).unwrap();
        assert!(matches!(
            kernel(&s, &geom, &atm, s.epsilon + 1.0),
            Err(Error::EpsilonUnderflow)
        ));
    }

    #[test]
    fn no_obstacle_limit_matches_far_obstacle() {
        let geom = table3_geom();
        let atm = table3_atm();
        let quad = QuadratureSpec { n_vartheta: 24, n_varpi: 24, n_tau: 48, ..Default::default() };
        let baseline = scattered_energy(&geom, &atm, None, &quad, BlockageEvaluator::ExactOracle);
        let far = ObstacleBox {
            thickness_s: 1.0,
            width_w: 1.0,
            height_kappa: 1.0,
            center_x: -1e7,
            center_y: 0.0,
        };
        let with_far =
            scattered_energy(&geom, &atm, Some(&far), &quad, BlockageEvaluator::ExactOracle);
        let rel = ((baseline.q_sca - with_far.q_sca) / baseline.q_sca).abs();
        assert!(rel < 1e-12, "rel = {rel}");
        assert!(baseline.q_sca > 0.0 && baseline.q_sca <= geom.pulse_energy);
    }

    #[test]
    fn obstacle_never_increases_energy() {
        let geom = table3_geom();
        let atm = table3_atm();
        let quad = QuadratureSpec { n_vartheta: 16, n_varpi: 16, n_tau: 32, ..Default::default() };
        let baseline = scattered_energy(&geom, &atm, None, &quad, BlockageEvaluator::ExactOracle);
        let obs = crate::channel::scaled_obstacle(geom.range_r);
        for evaluator in [BlockageEvaluator::ExactOracle, BlockageEvaluator::PaperCases] {
            let with_obs = scattered_energy(&geom, &atm, Some(&obs), &quad, evaluator);
            assert!(with_obs.q_sca <= baseline.q_sca * (1.0 + 1e-12));
            assert!(with_obs.q_sca >= 0.0);
            assert!(with_obs.diagnostics.blocked_fraction > 0.0);
        }
    }

    #[test]
    fn fully_occluded_overlap_yields_zero() {
        // both cones point toward -X; a wall filling x < 0 blocks every
        // transmitter segment before it can reach the overlap volume
        let geom = SystemGeometry {
            beta_t: 20f64.to_radians(),
            beta_r: 20f64.to_radians(),
            theta_t: 25f64.to_radians(),
            theta_r: 25f64.to_radians(),
            alpha_t: 170f64.to_radians(),
            alpha_r: -170f64.to_radians(),
            range_r: 100.0,
            aperture_area: 1.92e-4,
            pulse_energy: 1.0,
        };
        let atm = table3_atm();
        let wall = ObstacleBox {
            thickness_s: 1e5,
            width_w: 1e6,
            height_kappa: 1e6,
            center_x: -5e4 - 1e-3,
            center_y: 0.0,
        };
        let quad = QuadratureSpec { n_vartheta: 12, n_varpi: 12, n_tau: 24, ..Default::default() };
        let est = scattered_energy(&geom, &atm, Some(&wall), &quad, BlockageEvaluator::ExactOracle);
        assert_eq!(est.q_sca, 0.0);
    }

    #[test]
    fn evaluators_agree_on_reference_scene() {
        let geom = table3_geom();
        let atm = table3_atm();
        let obs = crate::channel::scaled_obstacle(geom.range_r);
        let quad = QuadratureSpec { n_vartheta: 24, n_varpi: 24, n_tau: 48, ..Default::default() };
        let a = scattered_energy(&geom, &atm, Some(&obs), &quad, BlockageEvaluator::PaperCases);
        let b = scattered_energy(&geom, &atm, Some(&obs), &quad, BlockageEvaluator::ExactOracle);
        let rel = ((a.q_sca - b.q_sca) / b.q_sca).abs();
        assert!(rel < 1e-6, "rel = {rel}");
    }
}
