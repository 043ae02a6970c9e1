//! Rotating-plane frames on the transmitter and receiver sides, and the
//! case/condition classification of beam/FoV overlap with the obstacle.
//!
//! A frame fixes one rotating plane (by its rotation angle), computes the
//! plane-normal coefficients, the angular positions of the four obstacle
//! edge lines within the plane, and the angular span of the in-plane rays.
//! Classification compares those spans in descending order.

use super::{varpi_bounds, ObstacleBox, SystemGeometry};
use crate::error::{Error, Result};
use crate::vec3::Vec3;

/// In-plane ray direction at polar angle `w` for a cone with apex azimuth
/// `alpha` and in-plane elevation `delta`.
fn in_plane_dir(w: f64, delta: f64, alpha: f64) -> Vec3 {
    let phi = (w.tan() / delta.cos()).atan();
    let c = w.cos() * delta.cos() / phi.cos();
    Vec3::new(
        c * (alpha + phi).cos(),
        c * (alpha + phi).sin(),
        w.cos() * delta.sin(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corner {
    A,
    B,
    C,
    D,
}

/// Intersection of a rotating plane with one vertical obstacle edge line,
/// with the in-plane angle from the YZ-plane reference ray.
#[derive(Debug, Clone, Copy)]
pub struct EdgePoint {
    pub corner: Corner,
    pub point: Vec3,
    pub psi: f64,
}

/// Transmitter-side frame for the plane at rotation angle `vartheta`.
#[derive(Debug, Clone)]
pub struct TxPlaneFrame {
    pub vartheta: f64,
    /// Plane normal coefficients (Xi_a, Xi_b, Xi_c).
    pub xi: [f64; 3],
    /// Auxiliary angle phi_t.
    pub phi_t: f64,
    /// Edge points in corner order A, B, C, D.
    pub edges: [EdgePoint; 4],
    pub omega_min: f64,
    pub omega_max: f64,
    /// Psi_t,min = Psi_t,dd'.
    pub psi_min: f64,
    /// Psi_t,max = Psi_t,bb'.
    pub psi_max: f64,
    /// In-plane orthonormal basis: `u` along the reference ray TK, `v`
    /// oriented so the beam rays have positive angle.
    u: Vec3,
    v: Vec3,
}

impl TxPlaneFrame {
    pub fn edge(&self, corner: Corner) -> &EdgePoint {
        &self.edges[corner_index(corner)]
    }

    /// Signed in-plane angle of a point from the YZ reference ray TK.
    ///
    /// All frame angles (edge angles and ray-span bounds) share this
    /// convention, so the interval comparisons stay consistent.
    pub fn psi_esp(&self, p: Vec3) -> f64 {
        p.dot(self.v).atan2(p.dot(self.u))
    }

    /// Distance bound on |TP| from the near-face edge line through
    /// P_t,dd' and P_t,cc'. Returns `None` when the line does not constrain
    /// the given direction.
    pub fn tp_bound(&self, psi_esp: f64) -> Option<f64> {
        let pd = self.edge(Corner::D);
        let pc = self.edge(Corner::C);
        polar_line_bound(pd.point, pd.psi, pc.point, psi_esp, Vec3::ZERO)
    }
}

/// Receiver-side frame for the plane at rotation angle `sigma`.
#[derive(Debug, Clone)]
pub struct RxPlaneFrame {
    pub sigma: f64,
    pub xi: [f64; 3],
    pub phi_r: f64,
    /// Aperture half-angle of the in-plane FoV rays.
    pub cap_c: f64,
    pub edges: [EdgePoint; 4],
    pub omega_min: f64,
    pub omega_max: f64,
    /// Psi_r,min = Psi_r,cc'.
    pub psi_min: f64,
    /// Psi_r,max = Psi_r,aa'.
    pub psi_max: f64,
    receiver: Vec3,
    u: Vec3,
    v: Vec3,
}

impl RxPlaneFrame {
    pub fn edge(&self, corner: Corner) -> &EdgePoint {
        &self.edges[corner_index(corner)]
    }

    /// Signed in-plane angle of a point from the YZ reference ray RS.
    pub fn psi_esp(&self, p: Vec3) -> f64 {
        let q = p - self.receiver;
        q.dot(self.v).atan2(q.dot(self.u))
    }

    /// Distance bound on |RP| from the near-face edge line through
    /// P_r,cc' and P_r,dd'.
    pub fn rp_bound(&self, psi_esp: f64) -> Option<f64> {
        let pc = self.edge(Corner::C);
        let pd = self.edge(Corner::D);
        polar_line_bound(pc.point, pc.psi, pd.point, psi_esp, self.receiver)
    }
}

fn corner_index(c: Corner) -> usize {
    match c {
        Corner::A => 0,
        Corner::B => 1,
        Corner::C => 2,
        Corner::D => 3,
    }
}

/// Polar-coordinate distance to the straight line through `p1` and `p2`,
/// about origin `origin`, along the direction at in-plane angle `psi_esp`.
/// `psi1` is the in-plane angle of `p1`.
fn polar_line_bound(p1: Vec3, psi1: f64, p2: Vec3, psi_esp: f64, origin: Vec3) -> Option<f64> {
    let v1 = p1 - origin;
    let small_psi = (-v1).angle_to(p2 - p1);
    let denom = (psi_esp + small_psi - psi1).sin();
    if denom <= 1e-15 {
        None
    } else {
        Some(v1.norm() * small_psi.sin() / denom)
    }
}

/// Build the transmitter-side frame at plane rotation `vartheta`.
pub fn tx_plane_frame(
    vartheta: f64,
    geom: &SystemGeometry,
    obstacle: &ObstacleBox,
) -> Result<TxPlaneFrame> {
    let delta = geom.theta_t + vartheta;
    let rad = (geom.beta_t.tan().powi(2) - vartheta.tan().powi(2)).max(0.0);
    let phi_t = (rad.sqrt() * vartheta.cos() / delta.cos()).atan();
    let sec2 = vartheta.cos().powi(-2);
    let tphi = phi_t.tan();
    let xi_a = -geom.alpha_t.cos() * sec2 * (2.0 * delta).sin() * tphi;
    let xi_b = -geom.alpha_t.sin() * sec2 * (2.0 * delta).sin() * tphi;
    let xi_c = 2.0 * sec2 * delta.cos().powi(2) * tphi;
    if xi_b.abs() < 1e-300 && xi_c.abs() < 1e-300 {
        return Err(Error::DegenerateFrame);
    }
    let corners = obstacle.corners();
    let tops = [
        (Corner::A, corners.a),
        (Corner::B, corners.b),
        (Corner::C, corners.c),
        (Corner::D, corners.d),
    ];
    // reference ray TK = plane intersected with YZ; orient the transverse
    // basis vector so the beam's central ray has positive angle
    let u = Vec3::new(0.0, xi_c, -xi_b).normalized();
    let normal = Vec3::new(xi_a, xi_b, xi_c).normalized();
    let central = in_plane_dir(0.0, delta, geom.alpha_t);
    let mut v = normal.cross(u);
    if central.dot(v) < 0.0 {
        v = -1.0 * v;
    }
    let angle_of = |p: Vec3| p.dot(v).atan2(p.dot(u));
    let edges = tops.map(|(corner, m)| {
        let z = -(xi_a * m.x + xi_b * m.y) / xi_c;
        let p = Vec3::new(m.x, m.y, z);
        EdgePoint { corner, point: p, psi: angle_of(p) }
    });
    let (w_min, w_max) = varpi_bounds(vartheta, geom.beta_t)?;
    // exact ray-span bounds in the same angle convention as the edge angles;
    // the closed-form alpha_t + w - pi/2 misplaces TK by a rotation-dependent
    // constant and is only exact in the horizontal plane
    let o1 = angle_of(in_plane_dir(w_min, delta, geom.alpha_t));
    let o2 = angle_of(in_plane_dir(w_max, delta, geom.alpha_t));
    Ok(TxPlaneFrame {
        vartheta,
        xi: [xi_a, xi_b, xi_c],
        phi_t,
        psi_min: edges[corner_index(Corner::D)].psi,
        psi_max: edges[corner_index(Corner::B)].psi,
        edges,
        omega_min: o1.min(o2),
        omega_max: o1.max(o2),
        u,
        v,
    })
}

/// Build the receiver-side frame at plane rotation `sigma`.
pub fn rx_plane_frame(
    sigma: f64,
    geom: &SystemGeometry,
    obstacle: &ObstacleBox,
) -> Result<RxPlaneFrame> {
    if sigma.abs() > geom.beta_r {
        return Err(Error::Domain(format!(
            "sigma {sigma} outside [-{0}, {0}]",
            geom.beta_r
        )));
    }
    let delta = geom.theta_r + sigma;
    let rad = (geom.beta_r.tan().powi(2) - sigma.tan().powi(2)).max(0.0);
    let cap_c = (sigma.cos() * rad.sqrt()).atan();
    let phi_r = (rad.sqrt() * sigma.cos() / delta.cos()).atan();
    let sec2 = sigma.cos().powi(-2);
    let tphi = phi_r.tan();
    let xi_a = -geom.alpha_r.cos() * sec2 * (2.0 * delta).sin() * tphi;
    let xi_b = -geom.alpha_r.sin() * sec2 * (2.0 * delta).sin() * tphi;
    let xi_c = 2.0 * sec2 * delta.cos().powi(2) * tphi;
    if xi_b.abs() < 1e-300 && xi_c.abs() < 1e-300 {
        return Err(Error::DegenerateFrame);
    }
    let r = geom.range_r;
    let receiver = geom.receiver();
    let corners = obstacle.corners();
    let tops = [
        (Corner::A, corners.a),
        (Corner::B, corners.b),
        (Corner::C, corners.c),
        (Corner::D, corners.d),
    ];
    // reference ray RS; the receiver-side angle convention flips the sign of
    // the Y component relative to the transmitter side
    let u = Vec3::new(0.0, -xi_c, xi_b).normalized();
    let normal = Vec3::new(xi_a, xi_b, xi_c).normalized();
    let central = in_plane_dir(0.0, delta, geom.alpha_r);
    let mut v = normal.cross(u);
    if central.dot(v) < 0.0 {
        v = -1.0 * v;
    }
    let angle_of = |q: Vec3| q.dot(v).atan2(q.dot(u));
    let edges = tops.map(|(corner, m)| {
        let z = (r * xi_b - m.y * xi_b - m.x * xi_a) / xi_c;
        let p = Vec3::new(m.x, m.y, z);
        EdgePoint { corner, point: p, psi: angle_of(p - receiver) }
    });
    let o1 = angle_of(in_plane_dir(-cap_c, delta, geom.alpha_r));
    let o2 = angle_of(in_plane_dir(cap_c, delta, geom.alpha_r));
    Ok(RxPlaneFrame {
        sigma,
        xi: [xi_a, xi_b, xi_c],
        phi_r,
        cap_c,
        psi_min: edges[corner_index(Corner::C)].psi,
        psi_max: edges[corner_index(Corner::A)].psi,
        edges,
        omega_min: o1.min(o2),
        omega_max: o1.max(o2),
        receiver,
        u,
        v,
    })
}

/// Result of the descending-order comparison of the ray span against the
/// obstacle edge span, on both sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockageClassification {
    /// Transmitter-side case, 1..=6.
    pub tx_case: u8,
    /// Receiver-side condition, 1..=6.
    pub rx_condition: u8,
}

/// Absolute tolerance for angle ties; ties take the `>=` branch.
pub const CLASSIFY_TOL: f64 = 1e-12;

fn order_index(omega_min: f64, omega_max: f64, psi_min: f64, psi_max: f64) -> Result<u8> {
    for v in [omega_min, omega_max, psi_min, psi_max] {
        if v.is_nan() {
            return Err(Error::UnorderedFrame);
        }
    }
    let ge = |a: f64, b: f64| a >= b - CLASSIFY_TOL;
    let gt = |a: f64, b: f64| a > b + CLASSIFY_TOL;
    // rows checked in table order; first matching interleaving wins
    if gt(omega_max, omega_min) && ge(omega_min, psi_max) && gt(psi_max, psi_min) {
        Ok(1)
    } else if gt(omega_max, psi_max) && gt(psi_max, omega_min) && ge(omega_min, psi_min) {
        Ok(2)
    } else if gt(omega_max, psi_max) && gt(psi_max, psi_min) && ge(psi_min, omega_min) {
        Ok(3)
    } else if ge(psi_max, omega_max) && gt(omega_max, omega_min) && ge(omega_min, psi_min) {
        Ok(4)
    } else if ge(psi_max, omega_max) && gt(omega_max, psi_min) && gt(psi_min, omega_min) {
        Ok(5)
    } else if gt(psi_max, psi_min) && ge(psi_min, omega_max) && gt(omega_max, omega_min) {
        Ok(6)
    } else {
        // Non-table interleaving (e.g. inverted edge angles); classify by the
        // span relationship so evaluation stays total.
        if ge(psi_min.min(psi_max), omega_max) {
            Ok(6)
        } else if ge(omega_min, psi_min.max(psi_max)) {
            Ok(1)
        } else {
            Ok(4)
        }
    }
}

/// Classify the frame pair into its Table-1 case and Table-2 condition.
pub fn classify(tx: &TxPlaneFrame, rx: &RxPlaneFrame) -> Result<BlockageClassification> {
    Ok(BlockageClassification {
        tx_case: order_index(tx.omega_min, tx.omega_max, tx.psi_min, tx.psi_max)?,
        rx_condition: order_index(rx.omega_min, rx.omega_max, rx.psi_min, rx.psi_max)?,
    })
}
