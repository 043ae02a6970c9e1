//! Composition of scattered and reflected energies into total received
//! energy and path loss, plus the parameter sweeps.

use crate::geometry::{validate_geometry, BlockageEvaluator, ObstacleBox, SystemGeometry};
use crate::reflection::{reflected_energy, ReflectionDiagnostics, ReflectionSurface};
use crate::scattering::{scattered_energy, Atmosphere, QuadratureSpec, ScatterDiagnostics};

/// Phong-surface parameters applied to the obstacle facade.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionParams {
    pub r_r: f64,
    pub m_s: f64,
    pub eta: f64,
}

/// One fully specified evaluation scene.
#[derive(Debug, Clone, Copy)]
pub struct Scene {
    pub geom: SystemGeometry,
    pub atm: Atmosphere,
    pub obstacle: Option<ObstacleBox>,
    pub reflection: Option<ReflectionParams>,
    pub quad: QuadratureSpec,
    pub evaluator: BlockageEvaluator,
}

/// Energies, path loss, and cubature diagnostics for one scene.
#[derive(Debug, Clone, Copy)]
pub struct ChannelResult {
    pub q_sca: f64,
    pub q_ref: f64,
    pub q_total: f64,
    /// 10 log10(Q_t / Q_r); +inf when nothing is received.
    pub path_loss_db: f64,
    pub scatter_diag: ScatterDiagnostics,
    pub reflection_diag: ReflectionDiagnostics,
}

pub fn path_loss_db(pulse_energy: f64, received: f64) -> f64 {
    if received > 0.0 {
        10.0 * (pulse_energy / received).log10()
    } else {
        f64::INFINITY
    }
}

/// Total received energy: scattered plus facade-reflected.
pub fn total_energy(scene: &Scene) -> ChannelResult {
    let sca = scattered_energy(
        &scene.geom,
        &scene.atm,
        scene.obstacle.as_ref(),
        &scene.quad,
        scene.evaluator,
    );
    let (q_ref, refl_diag) = match (&scene.obstacle, &scene.reflection) {
        (Some(obs), Some(rp)) if rp.r_r > 0.0 => {
            let surface = ReflectionSurface::on_facade(obs, rp.r_r, rp.m_s, rp.eta);
            let est = reflected_energy(
                &scene.geom,
                &scene.atm,
                obs,
                &surface,
                scene.quad.n_varpi.max(2),
                scene.quad.n_tau.max(2),
            );
            (est.q_ref, est.diagnostics)
        }
        _ => (0.0, ReflectionDiagnostics::default()),
    };
    let q_total = sca.q_sca + q_ref;
    ChannelResult {
        q_sca: sca.q_sca,
        q_ref,
        q_total,
        path_loss_db: path_loss_db(scene.geom.pulse_energy, q_total),
        scatter_diag: sca.diagnostics,
        reflection_diag: refl_diag,
    }
}

/// No-obstacle single-scattering baseline: weighting factor identically one,
/// no reflected term.
pub fn no_obstacle_baseline(
    geom: &SystemGeometry,
    atm: &Atmosphere,
    quad: &QuadratureSpec,
) -> ChannelResult {
    let sca = scattered_energy(geom, atm, None, quad, BlockageEvaluator::ExactOracle);
    ChannelResult {
        q_sca: sca.q_sca,
        q_ref: 0.0,
        q_total: sca.q_sca,
        path_loss_db: path_loss_db(geom.pulse_energy, sca.q_sca),
        scatter_diag: sca.diagnostics,
        reflection_diag: ReflectionDiagnostics::default(),
    }
}

/// Obstacle dimensions scaled to the communication range: s = r/10, w = 2r,
/// kappa = 2r, x_o = -3s/2, y_o = r/2.
pub fn scaled_obstacle(range_r: f64) -> ObstacleBox {
    let s = range_r / 10.0;
    ObstacleBox {
        thickness_s: s,
        width_w: 2.0 * range_r,
        height_kappa: 2.0 * range_r,
        center_x: -1.5 * s,
        center_y: 0.5 * range_r,
    }
}

/// One row of a sweep; failed validation is recorded, not fatal.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub range_m: f64,
    pub x_o_m: Option<f64>,
    pub result: ChannelResult,
    pub validation_violations: Vec<String>,
}

/// Path loss versus range, with the obstacle re-derived per range by the
/// scaling rule.
pub fn sweep_range(base: &Scene, ranges: &[f64]) -> Vec<SweepRow> {
    ranges
        .iter()
        .map(|&r| {
            let mut scene = *base;
            scene.geom.range_r = r;
            let obstacle = scaled_obstacle(r);
            scene.obstacle = Some(obstacle);
            let report = validate_geometry(&scene.geom, &obstacle);
            SweepRow {
                range_m: r,
                x_o_m: Some(obstacle.center_x),
                result: total_energy(&scene),
                validation_violations: report.violations,
            }
        })
        .collect()
}

/// Separate scattered-only and reflected-only path losses versus the
/// obstacle center offset x_o.
pub fn sweep_obstacle_offset(base: &Scene, x_o_values: &[f64]) -> Vec<SweepRow> {
    x_o_values
        .iter()
        .map(|&xo| {
            let mut scene = *base;
            let mut obstacle = scene
                .obstacle
                .unwrap_or_else(|| scaled_obstacle(scene.geom.range_r));
            obstacle.center_x = xo;
            scene.obstacle = Some(obstacle);
            let report = validate_geometry(&scene.geom, &obstacle);
            SweepRow {
                range_m: scene.geom.range_r,
                x_o_m: Some(xo),
                result: total_energy(&scene),
                validation_violations: report.violations,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::load_config_str;

    fn quick_scene() -> Scene {
        let cfg = load_config_str(
            r#"{"preset": "table3-scenario1",
                "quadrature": {"n_vartheta": 16, "n_varpi": 16, "n_tau": 32}}"#,
        )
        .unwrap();
        cfg.scene()
    }

    #[test]
    fn path_loss_definition_and_sentinel() {
        assert_eq!(path_loss_db(1.0, 1.0), 0.0);
        assert!((path_loss_db(1.0, 1e-9) - 90.0).abs() < 1e-12);
        assert_eq!(path_loss_db(1.0, 0.0), f64::INFINITY);
        assert_eq!(path_loss_db(1.0, -1.0), f64::INFINITY);
    }

    #[test]
    fn scaled_obstacle_rule() {
        let o = scaled_obstacle(100.0);
        assert_eq!(o.thickness_s, 10.0);
        assert_eq!(o.width_w, 200.0);
        assert_eq!(o.height_kappa, 200.0);
        assert_eq!(o.center_x, -15.0);
        assert_eq!(o.center_y, 50.0);
    }

    #[test]
    fn totals_are_additive() {
        let scene = quick_scene();
        let res = total_energy(&scene);
        assert_eq!(res.q_total, res.q_sca + res.q_ref);
        assert!(res.q_sca > 0.0 && res.q_ref > 0.0);
        assert_eq!(
            res.path_loss_db,
            path_loss_db(scene.geom.pulse_energy, res.q_total)
        );
    }

    #[test]
    fn bare_scene_equals_baseline() {
        let mut scene = quick_scene();
        scene.obstacle = None;
        scene.reflection = None;
        let a = total_energy(&scene);
        let b = no_obstacle_baseline(&scene.geom, &scene.atm, &scene.quad);
        assert_eq!(a.q_total, b.q_total);
        assert_eq!(b.q_ref, 0.0);
    }

    #[test]
    fn zero_reflectance_drops_reflected_term() {
        let mut scene = quick_scene();
        scene.reflection = Some(ReflectionParams { r_r: 0.0, m_s: 5.0, eta: 0.5 });
        let res = total_energy(&scene);
        assert_eq!(res.q_ref, 0.0);
        assert!(res.q_sca > 0.0);
    }

    #[test]
    fn obstacle_with_facade_beats_baseline() {
        // the reference configuration receives more energy with the
        // reflecting obstacle than without any obstacle
        let scene = quick_scene();
        let with_obs = total_energy(&scene);
        let base = no_obstacle_baseline(&scene.geom, &scene.atm, &scene.quad);
        assert!(with_obs.path_loss_db < base.path_loss_db);
    }

    #[test]
    fn baseline_loss_increases_with_range() {
        let scene = quick_scene();
        let mut last = f64::NEG_INFINITY;
        for r in [50.0, 100.0, 150.0, 200.0] {
            let mut geom = scene.geom;
            geom.range_r = r;
            let pl = no_obstacle_baseline(&geom, &scene.atm, &scene.quad).path_loss_db;
            assert!(pl > last, "r={r}: {pl} <= {last}");
            last = pl;
        }
    }

    #[test]
    fn sweep_range_rows_and_consistency() {
        let scene = quick_scene();
        let ranges = [50.0, 100.0, 150.0];
        let rows = sweep_range(&scene, &ranges);
        assert_eq!(rows.len(), ranges.len());
        for (row, r) in rows.iter().zip(ranges) {
            assert_eq!(row.range_m, r);
            assert_eq!(row.x_o_m, Some(-1.5 * r / 10.0));
        }
        // the r = 100 row equals a single-shot evaluation
        let mut single = scene;
        single.geom.range_r = 100.0;
        single.obstacle = Some(scaled_obstacle(100.0));
        let want = total_energy(&single);
        assert_eq!(rows[1].result.q_total, want.q_total);
    }

    #[test]
    fn sweep_offset_rows_and_scatter_column() {
        let cfg = load_config_str(
            r#"{"preset": "table4",
                "quadrature": {"n_vartheta": 16, "n_varpi": 16, "n_tau": 32}}"#,
        )
        .unwrap();
        let scene = cfg.scene();
        let offsets = [-25.0, -35.0, -45.0];
        let rows = sweep_obstacle_offset(&scene, &offsets);
        assert_eq!(rows.len(), offsets.len());
        for (row, xo) in rows.iter().zip(offsets) {
            assert_eq!(row.x_o_m, Some(xo));
            // the scattered column is exactly the scattering module output
            // for the displaced obstacle
            let mut obs = scene.obstacle.unwrap();
            obs.center_x = xo;
            let want = crate::scattering::scattered_energy(
                &scene.geom,
                &scene.atm,
                Some(&obs),
                &scene.quad,
                scene.evaluator,
            );
            assert_eq!(row.result.q_sca, want.q_sca);
        }
    }
}
