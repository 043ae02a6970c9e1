//! Acceptance suite: one test per release criterion, each printing a single
//! `criterion N: PASS/FAIL` line with the measured numbers.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::f64::consts::{FRAC_PI_2, PI};
use std::time::Instant;
use uvnlos::channel::{no_obstacle_baseline, path_loss_db, scaled_obstacle, sweep_obstacle_offset, total_energy};
use uvnlos::config::load_config_str;
use uvnlos::geometry::{
    classify, g_wei_oracle, g_wei_paper_classified, jacobian, rx_plane_frame, scatter_point,
    tau_interval, tx_plane_frame, varpi_bounds, RxPlaneFrame, SystemGeometry, TxPlaneFrame,
};
use uvnlos::mcpt::{trace, McptSpec};
use uvnlos::reflection::ReflectionSurface;
use uvnlos::scattering::{phase, phase_mie, phase_rayleigh, Atmosphere};
use uvnlos::vec3::Vec3;

fn verdict(n: usize, ok: bool, detail: &str) -> bool {
    println!(
        "criterion {n}: {} — {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    ok
}

#[test]
fn criterion_1_headline_path_loss_at_100m() {
    let cfg = load_config_str(r#"{"preset": "table3-scenario1"}"#).unwrap();
    let t0 = Instant::now();
    let with_obstacle = total_energy(&cfg.scene());
    let t_obstacle = t0.elapsed().as_secs_f64();
    let t0 = Instant::now();
    let baseline = no_obstacle_baseline(&cfg.geometry, &cfg.atmosphere, &cfg.quadrature);
    let t_baseline = t0.elapsed().as_secs_f64();

    let pl = with_obstacle.path_loss_db;
    let pl_base = baseline.path_loss_db;
    let obstacle_ok = (pl - 93.81).abs() <= 1.0;
    let baseline_ok = (pl_base - 98.55).abs() <= 1.0;
    let runtime_ok = t_obstacle < 10.0 && t_baseline < 10.0;
    let ok = obstacle_ok && baseline_ok && runtime_ok;
    verdict(
        1,
        ok,
        &format!(
            "with-obstacle {pl:.2} dB vs 93.81±1.0 ({}), baseline {pl_base:.2} dB vs 98.55±1.0 \
             ({}), runtimes {t_obstacle:.1}/{t_baseline:.1} s vs <10 s ({}); the with-obstacle \
             reference is reproduced only by a Phong variant whose specular lobe is not scaled \
             by (1-eta) — the implemented pattern keeps the energy-conserving (1-eta) weight, \
             so its reflected term is weaker and the total sits ~1.6 dB above the reference",
            if obstacle_ok { "ok" } else { "out of band" },
            if baseline_ok { "ok" } else { "out of band" },
            if runtime_ok { "ok" } else { "too slow" },
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_2_analytic_vs_monte_carlo_agreement() {
    let mut worst: f64 = 0.0;
    let mut worst_se: f64 = 0.0;
    let mut lines = Vec::new();
    let mut ok = true;
    for preset in ["table3-scenario1", "table3-scenario2"] {
        let cfg = load_config_str(&format!(r#"{{"preset": "{preset}"}}"#)).unwrap();
        for r in [50.0, 100.0, 150.0, 200.0] {
            let scene = cfg.scene_at_range(r);
            let analytic = total_energy(&scene);
            let surface = match (&scene.obstacle, &scene.reflection) {
                (Some(obs), Some(rp)) => {
                    Some(ReflectionSurface::on_facade(obs, rp.r_r, rp.m_s, rp.eta))
                }
                _ => None,
            };
            let spec = McptSpec {
                n_photons: 10_000_000,
                rng_seed: 42,
                ..McptSpec::default()
            };
            let mc = trace(
                &scene.geom,
                &scene.atm,
                scene.obstacle.as_ref(),
                surface.as_ref(),
                &spec,
            );
            let delta = analytic.path_loss_db - mc.path_loss_db;
            let se = mc.std_error_db();
            worst = worst.max(delta.abs());
            worst_se = worst_se.max(se);
            if delta.abs() > 0.3 || se >= 0.1 {
                ok = false;
                lines.push(format!("{preset} r={r}: delta {delta:+.3} dB, se {se:.3} dB"));
            }
        }
    }
    verdict(
        2,
        ok,
        &format!(
            "8 points (2 presets x 4 ranges, 1e7 photons): worst |delta| {worst:.3} dB vs <=0.3, \
             worst MC stderr {worst_se:.3} dB vs <0.1{}{}",
            if lines.is_empty() { "" } else { "; offenders: " },
            lines.join("; ")
        ),
    );
    assert!(ok);
}

/// Smallest angular distance to any ordering boundary the case logic
/// compares against, over both in-plane frames and the sample's own angle.
fn boundary_distance(tx: &TxPlaneFrame, rx: &RxPlaneFrame, p: Vec3) -> f64 {
    let mut d = f64::INFINITY;
    for (omegas, psis, esp) in [
        ([tx.omega_min, tx.omega_max], [tx.psi_min, tx.psi_max], tx.psi_esp(p)),
        ([rx.omega_min, rx.omega_max], [rx.psi_min, rx.psi_max], rx.psi_esp(p)),
    ] {
        for o in omegas {
            for s in psis {
                d = d.min((o - s).abs());
            }
        }
        for b in omegas.into_iter().chain(psis) {
            d = d.min((esp - b).abs());
        }
    }
    d
}

#[test]
fn criterion_3_blockage_case_logic_vs_segment_oracle() {
    // (scene, sample) pairs drawn across the reference scenario families:
    // the two range-scaled scenes at randomized ranges plus the fixed-obstacle
    // scene, with the sample randomized inside the overlap volume
    let presets = ["table3-scenario1", "table3-scenario2", "table4"];
    let cfgs: Vec<_> = presets
        .iter()
        .map(|p| load_config_str(&format!(r#"{{"preset": "{p}"}}"#)).unwrap())
        .collect();
    let mut rng = StdRng::seed_from_u64(7);
    let total = 100_000u64;
    let mut checked = 0u64;
    let mut agreed = 0u64;
    let mut disagreements: Vec<String> = Vec::new();
    while checked < total {
        let which = rng.gen_range(0..cfgs.len());
        let mut geom = cfgs[which].geometry;
        let obs = if cfgs[which].obstacle_scales_with_range {
            geom.range_r = rng.gen_range(50.0..250.0);
            scaled_obstacle(geom.range_r)
        } else {
            cfgs[which].obstacle.unwrap()
        };
        let vartheta = rng.gen_range(-0.999..0.999) * geom.beta_t;
        let Ok((_, w_max)) = varpi_bounds(vartheta, geom.beta_t) else {
            continue;
        };
        let varpi = rng.gen_range(-0.999..0.999) * w_max;
        let iv = tau_interval(vartheta, varpi, &geom);
        if iv.is_empty() {
            continue;
        }
        let hi = iv.hi.unwrap_or(iv.lo + 2.0 * geom.range_r);
        let tau = iv.lo + rng.gen_range(0.001..0.999) * (hi - iv.lo);
        let Ok(sample) = scatter_point(tau, varpi, vartheta, &geom) else {
            continue;
        };
        let Ok(tx) = tx_plane_frame(vartheta, &geom, &obs) else {
            continue;
        };
        let sigma = geom.sigma_of(sample.point_p).clamp(-geom.beta_r, geom.beta_r);
        let Ok(rx) = rx_plane_frame(sigma, &geom, &obs) else {
            continue;
        };
        if boundary_distance(&tx, &rx, sample.point_p) < 1e-9 {
            continue;
        }
        let Ok(class) = classify(&tx, &rx) else {
            continue;
        };
        let closed_form = g_wei_paper_classified(&sample, &geom, &tx, &rx, &class);
        let oracle = g_wei_oracle(sample.point_p, &geom, &obs);
        checked += 1;
        if closed_form == oracle {
            agreed += 1;
        } else if disagreements.len() < 20 {
            disagreements.push(format!(
                "case {}/condition {} at P=({:.2},{:.2},{:.2}): closed-form {} vs oracle {}",
                class.tx_case,
                class.rx_condition,
                sample.point_p.x,
                sample.point_p.y,
                sample.point_p.z,
                closed_form,
                oracle
            ));
        }
    }
    let rate = agreed as f64 / checked as f64;
    let ok = rate >= 0.9999;
    for d in &disagreements {
        println!("criterion 3 disagreement: {d}");
    }
    verdict(
        3,
        ok,
        &format!(
            "{agreed}/{checked} agreements ({:.4}%) vs >=99.99%; {} disagreements logged",
            rate * 100.0,
            checked - agreed
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_4_jacobian_vs_finite_differences() {
    let mut rng = StdRng::seed_from_u64(11);
    let mut checked = 0u64;
    let mut worst: f64 = 0.0;
    while checked < 10_000 {
        let beta_t = rng.gen_range(0.1..0.45);
        let geom = SystemGeometry {
            beta_t,
            beta_r: 0.3,
            theta_t: beta_t + rng.gen_range(0.05..0.8),
            theta_r: 0.6,
            alpha_t: rng.gen_range(FRAC_PI_2 + 0.05..PI - 0.05),
            alpha_r: -2.0,
            range_r: 100.0,
            aperture_area: 1.92e-4,
            pulse_energy: 1.0,
        };
        let vartheta = rng.gen_range(-0.85..0.85) * geom.beta_t;
        let Ok((_, w_max)) = varpi_bounds(vartheta, geom.beta_t) else {
            continue;
        };
        let varpi = rng.gen_range(-0.8..0.8) * w_max;
        let tau = rng.gen_range(5.0..400.0);

        let point = |t: f64, w: f64, v: f64| -> Option<Vec3> {
            scatter_point(t, w, v, &geom).ok().map(|s| s.point_p)
        };
        // five-point central-difference derivative in each coordinate
        let h_tau = 1e-3 * tau;
        let h_ang = 1e-4;
        let stencil = |f: &dyn Fn(f64) -> Option<Vec3>, x: f64, h: f64| -> Option<Vec3> {
            let (p2, p1, m1, m2) = (f(x + 2.0 * h)?, f(x + h)?, f(x - h)?, f(x - 2.0 * h)?);
            Some((m2 - p2 + (p1 - m1) * 8.0) / (12.0 * h))
        };
        let d_tau = stencil(&|t| point(t, varpi, vartheta), tau, h_tau);
        let d_varpi = stencil(&|w| point(tau, w, vartheta), varpi, h_ang);
        let d_vartheta = stencil(&|v| point(tau, varpi, v), vartheta, h_ang);
        let (Some(dt), Some(dw), Some(dv)) = (d_tau, d_varpi, d_vartheta) else {
            continue;
        };
        let det = dt.dot(dw.cross(dv)).abs();
        let j3 = jacobian(tau, varpi);
        let rel = (det - j3).abs() / j3;
        worst = worst.max(rel);
        checked += 1;
    }
    let ok = worst <= 1e-8;
    verdict(
        4,
        ok,
        &format!("10000 points: worst relative error {worst:.2e} vs <=1e-8"),
    );
    assert!(ok);
}

/// Composite Simpson rule over [-1, 1]; deliberately a different quadrature
/// family from the Gauss-Legendre rules used by the integrators.
fn simpson_sphere_integral(f: impl Fn(f64) -> f64, intervals: usize) -> f64 {
    assert!(intervals.is_multiple_of(2));
    let h = 2.0 / intervals as f64;
    let mut acc = f(-1.0) + f(1.0);
    for i in 1..intervals {
        let mu = -1.0 + i as f64 * h;
        acc += f(mu) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    2.0 * PI * acc * h / 3.0
}

#[test]
fn criterion_5_phase_function_normalization() {
    let atm = Atmosphere {
        ks_ray: 0.24e-3,
        ks_mie: 0.25e-3,
        ka: 0.9e-3,
        gamma: 0.017,
        g: 0.72,
        f: 0.5,
    };
    let n = 65_536;
    let i_ray = simpson_sphere_integral(|mu| phase_rayleigh(mu, atm.gamma).unwrap(), n);
    let i_mie = simpson_sphere_integral(|mu| phase_mie(mu, atm.g, atm.f).unwrap(), n);
    let i_mix = simpson_sphere_integral(|mu| phase(mu, &atm).unwrap(), n);
    let worst = [(i_ray - 1.0).abs(), (i_mie - 1.0).abs(), (i_mix - 1.0).abs()]
        .into_iter()
        .fold(0.0_f64, f64::max);
    let ok = worst <= 1e-6;
    verdict(
        5,
        ok,
        &format!(
            "sphere integrals {i_ray:.8} / {i_mie:.8} / {i_mix:.8} (molecular / aerosol / \
             mixture), worst deviation {worst:.2e} vs <=1e-6"
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_6_cubature_node_doubling() {
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for preset in ["table3-scenario1", "table3-scenario2", "table4"] {
        let cfg = load_config_str(&format!(r#"{{"preset": "{preset}"}}"#)).unwrap();
        let base = total_energy(&cfg.scene());
        let mut doubled_scene = cfg.scene();
        doubled_scene.quad.n_vartheta *= 2;
        doubled_scene.quad.n_varpi *= 2;
        doubled_scene.quad.n_tau *= 2;
        let doubled = total_energy(&doubled_scene);
        let delta = (doubled.path_loss_db - base.path_loss_db).abs();
        worst = worst.max(delta);
        detail.push(format!("{preset} {delta:.4} dB"));
    }
    let ok = worst < 0.05;
    verdict(
        6,
        ok,
        &format!("node-doubling shifts: {} (all vs <0.05 dB)", detail.join(", ")),
    );
    assert!(ok);
}

#[test]
fn criterion_7_reflected_loss_trend_vs_facade_offset() {
    let cfg = load_config_str(r#"{"preset": "table4"}"#).unwrap();
    let offsets = [-75.0, -80.0, -85.0, -90.0, -95.0, -100.0, -105.0];
    let rows = sweep_obstacle_offset(&cfg.scene(), &offsets);
    let qt = cfg.geometry.pulse_energy;
    let mut monotone = true;
    let mut below_scattered = true;
    let mut prev = f64::NEG_INFINITY;
    let mut cols = Vec::new();
    for row in &rows {
        let pl_ref = path_loss_db(qt, row.result.q_ref);
        let pl_sca = path_loss_db(qt, row.result.q_sca);
        monotone &= pl_ref >= prev - 1e-9;
        below_scattered &= pl_ref < pl_sca;
        prev = pl_ref;
        cols.push(format!(
            "x_o={:.0}: ref {pl_ref:.2} / sca {pl_sca:.2}",
            row.x_o_m.unwrap()
        ));
    }
    let ok = monotone && below_scattered;
    verdict(
        7,
        ok,
        &format!(
            "reflected column monotone non-decreasing in |x_o+s/2|: {monotone}; below scattered \
             column throughout the window: {below_scattered} [{}]",
            cols.join("; ")
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_8_monte_carlo_statistical_sanity() {
    // scenario II keeps the receiver outside the beam cone, so the
    // next-event weights are bounded and the variance estimate is stable
    let cfg = load_config_str(r#"{"preset": "table3-scenario2"}"#).unwrap();
    let analytic = no_obstacle_baseline(&cfg.geometry, &cfg.atmosphere, &cfg.quadrature);

    let mut within = 0;
    for seed in 0..30 {
        let spec = McptSpec {
            n_photons: 1_000_000,
            rng_seed: seed,
            ..McptSpec::default()
        };
        let mc = trace(&cfg.geometry, &cfg.atmosphere, None, None, &spec);
        if (mc.q_r_hat - analytic.q_total).abs() <= 3.0 * mc.std_error {
            within += 1;
        }
    }
    let coverage_ok = within >= 28;

    let mut scaled = Vec::new();
    for n in [100_000u64, 400_000, 1_600_000] {
        let spec = McptSpec {
            n_photons: n,
            rng_seed: 1,
            ..McptSpec::default()
        };
        let mc = trace(&cfg.geometry, &cfg.atmosphere, None, None, &spec);
        scaled.push(mc.std_error * (n as f64).sqrt());
    }
    let spread = scaled
        .iter()
        .map(|s| (s / scaled[0] - 1.0).abs())
        .fold(0.0_f64, f64::max);
    let scaling_ok = spread <= 0.2;

    let ok = coverage_ok && scaling_ok;
    verdict(
        8,
        ok,
        &format!(
            "{within}/30 seeds within 3 stderr of the analytic baseline (need >=28); \
             stderr*sqrt(n) spread {:.1}% across n=1e5/4e5/1.6e6 (need <=20%)",
            spread * 100.0
        ),
    );
    assert!(ok);
}
