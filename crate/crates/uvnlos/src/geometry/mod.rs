//! System geometry: transceiver cones, the cuboid obstacle, the rotating
//! integration planes, and all intersection/classification math.
//!
//! Conventions: the transmitter T sits at the origin, the receiver R at
//! (0, r, 0). The beam axis has elevation `theta_t` above the XY plane and
//! azimuth `alpha_t` from +X; likewise for the receiver FoV axis. A scatter
//! point is parametrized by (tau, varpi, vartheta): the rotation angle of the
//! plane through the beam-axis ground line, the in-plane ray angle, and the
//! distance from T.

mod blockage;
mod frames;

pub use blockage::{g_wei_oracle, g_wei_paper, segment_hits_box, BlockageEvaluator};
pub use blockage::g_wei_paper_classified;
pub use frames::{
    classify, rx_plane_frame, tx_plane_frame, BlockageClassification, Corner, EdgePoint,
    RxPlaneFrame, TxPlaneFrame, CLASSIFY_TOL,
};

use crate::error::{Error, Result};
use crate::vec3::Vec3;

/// Transceiver placement and beam/FoV shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemGeometry {
    /// Transmitter half-beam angle (rad).
    pub beta_t: f64,
    /// Receiver half-FoV angle (rad).
    pub beta_r: f64,
    /// Transmitter elevation angle (rad).
    pub theta_t: f64,
    /// Receiver elevation angle (rad).
    pub theta_r: f64,
    /// Transmitter azimuth (rad), in [pi/2, pi).
    pub alpha_t: f64,
    /// Receiver azimuth (rad), in (-pi, -pi/2].
    pub alpha_r: f64,
    /// T-R baseline distance (m).
    pub range_r: f64,
    /// Receiver detection area A_r (m^2).
    pub aperture_area: f64,
    /// Transmitted pulse energy Q_t (J).
    pub pulse_energy: f64,
}

impl SystemGeometry {
    pub fn receiver(&self) -> Vec3 {
        Vec3::new(0.0, self.range_r, 0.0)
    }

    /// Beam axis unit vector N_t.
    pub fn tx_axis(&self) -> Vec3 {
        Vec3::new(
            self.theta_t.cos() * self.alpha_t.cos(),
            self.theta_t.cos() * self.alpha_t.sin(),
            self.theta_t.sin(),
        )
    }

    /// FoV axis unit vector N_r.
    pub fn rx_axis(&self) -> Vec3 {
        Vec3::new(
            self.theta_r.cos() * self.alpha_r.cos(),
            self.theta_r.cos() * self.alpha_r.sin(),
            self.theta_r.sin(),
        )
    }

    /// Plane rotation angle vartheta of a point as seen from the transmitter.
    ///
    /// Inverts the plane membership relation: tan(delta_t) = z / (x cos a_t + y sin a_t).
    pub fn vartheta_of(&self, p: Vec3) -> f64 {
        let horiz = p.x * self.alpha_t.cos() + p.y * self.alpha_t.sin();
        p.z.atan2(horiz) - self.theta_t
    }

    /// Plane rotation angle sigma of a point as seen from the receiver.
    pub fn sigma_of(&self, p: Vec3) -> f64 {
        let q = p - self.receiver();
        let horiz = q.x * self.alpha_r.cos() + q.y * self.alpha_r.sin();
        q.z.atan2(horiz) - self.theta_r
    }
}

/// Axis-aligned cuboid obstacle standing on the ground plane z = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObstacleBox {
    /// Thickness s along X (m).
    pub thickness_s: f64,
    /// Width w along Y (m).
    pub width_w: f64,
    /// Height kappa above the XY plane (m).
    pub height_kappa: f64,
    /// Center x_o (m); the box occupies x in [x_o - s/2, x_o + s/2].
    pub center_x: f64,
    /// Center y_o (m); the box occupies y in [y_o - w/2, y_o + w/2].
    pub center_y: f64,
}

/// Top corners A, B, C, D (z = kappa) and their ground projections
/// A', B', C', D' (z = 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObstacleCorners {
    pub a: Vec3,
    pub b: Vec3,
    pub c: Vec3,
    pub d: Vec3,
    pub a_prime: Vec3,
    pub b_prime: Vec3,
    pub c_prime: Vec3,
    pub d_prime: Vec3,
}

impl ObstacleBox {
    pub fn x_min(&self) -> f64 {
        self.center_x - 0.5 * self.thickness_s
    }
    pub fn x_max(&self) -> f64 {
        self.center_x + 0.5 * self.thickness_s
    }
    pub fn y_min(&self) -> f64 {
        self.center_y - 0.5 * self.width_w
    }
    pub fn y_max(&self) -> f64 {
        self.center_y + 0.5 * self.width_w
    }

    /// Corner coordinates: A and B on the far face x = x_o - s/2, C and D on
    /// the near face x = x_o + s/2; A and D on the high-Y side.
    pub fn corners(&self) -> ObstacleCorners {
        let (xf, xn) = (self.x_min(), self.x_max());
        let (ylo, yhi) = (self.y_min(), self.y_max());
        let k = self.height_kappa;
        ObstacleCorners {
            a: Vec3::new(xf, yhi, k),
            b: Vec3::new(xf, ylo, k),
            c: Vec3::new(xn, ylo, k),
            d: Vec3::new(xn, yhi, k),
            a_prime: Vec3::new(xf, yhi, 0.0),
            b_prime: Vec3::new(xf, ylo, 0.0),
            c_prime: Vec3::new(xn, ylo, 0.0),
            d_prime: Vec3::new(xn, yhi, 0.0),
        }
    }

    /// True when the point is strictly inside the occupied volume.
    pub fn contains_open(&self, p: Vec3) -> bool {
        p.x > self.x_min()
            && p.x < self.x_max()
            && p.y > self.y_min()
            && p.y < self.y_max()
            && p.z > 0.0
            && p.z < self.height_kappa
    }
}

/// A single scattering point with all derived angles.
#[derive(Debug, Clone, Copy)]
pub struct ScatterSample {
    /// Distance T -> P (m).
    pub tau: f64,
    /// In-plane ray angle (rad).
    pub varpi: f64,
    /// Plane rotation angle (rad).
    pub vartheta: f64,
    /// Cartesian position of P (m).
    pub point_p: Vec3,
    /// theta_t + vartheta (rad).
    pub delta_t: f64,
    /// Auxiliary angle phi = atan(tan varpi * sec delta_t) (rad).
    pub phi: f64,
    /// Distance P -> R (m).
    pub epsilon: f64,
    /// Scattering angle between TP and PR (rad).
    pub theta_s: f64,
    /// Arrival off-axis angle between RP and the FoV axis (rad).
    pub theta_v: f64,
}

/// Unit-direction coefficients of the in-plane ray: P = tau * (A1, A2, A3).
pub fn ray_coefficients(varpi: f64, vartheta: f64, geom: &SystemGeometry) -> Vec3 {
    let delta_t = geom.theta_t + vartheta;
    let phi = (varpi.tan() / delta_t.cos()).atan();
    let c = varpi.cos() * delta_t.cos() / phi.cos();
    Vec3::new(
        c * (geom.alpha_t + phi).cos(),
        c * (geom.alpha_t + phi).sin(),
        varpi.cos() * delta_t.sin(),
    )
}

/// Build a `ScatterSample` from the (tau, varpi, vartheta) parametrization.
// `!(x > 0.0)` style checks are deliberate: NaN must be rejected too
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn scatter_point(
    tau: f64,
    varpi: f64,
    vartheta: f64,
    geom: &SystemGeometry,
) -> Result<ScatterSample> {
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("tau must be positive, got {tau}")));
    }
    if vartheta.abs() >= geom.beta_t {
        return Err(Error::Domain(format!(
            "vartheta {vartheta} outside open beam interval (-{0}, {0})",
            geom.beta_t
        )));
    }
    let w_max = varpi_bounds(vartheta, geom.beta_t)?.1;
    if varpi.abs() > w_max + 1e-12 {
        return Err(Error::Domain(format!(
            "varpi {varpi} outside [-{w_max}, {w_max}] at vartheta {vartheta}"
        )));
    }
    let delta_t = geom.theta_t + vartheta;
    let phi = (varpi.tan() / delta_t.cos()).atan();
    let p = ray_coefficients(varpi, vartheta, geom) * tau;
    let r = geom.receiver();
    let epsilon = (p - r).norm();
    let theta_s = p.angle_to(r - p);
    let theta_v = (p - r).angle_to(geom.rx_axis());
    Ok(ScatterSample {
        tau,
        varpi,
        vartheta,
        point_p: p,
        delta_t,
        phi,
        epsilon,
        theta_s,
        theta_v,
    })
}

/// Volume-element Jacobian |J3| = tau^2 cos(varpi) of the
/// (tau, varpi, vartheta) -> (x, y, z) map.
pub fn jacobian(tau: f64, varpi: f64) -> f64 {
    tau * tau * varpi.cos()
}

/// In-plane ray angle limits (varpi_min, varpi_max) keeping the ray inside
/// the beam cone at plane rotation `vartheta`.
pub fn varpi_bounds(vartheta: f64, beta_t: f64) -> Result<(f64, f64)> {
    if vartheta.abs() > beta_t {
        return Err(Error::Domain(format!(
            "vartheta {vartheta} outside [-{beta_t}, {beta_t}]"
        )));
    }
    let rad = (beta_t.tan().powi(2) - vartheta.tan().powi(2)).max(0.0);
    let w = (rad.sqrt() * vartheta.cos()).atan();
    Ok((-w, w))
}

/// Signed implicit residual of the receiver conical surface:
/// cos^2(beta_r) * |P - R|^2 - (N_r . (P - R))^2. Zero on the cone (both
/// nappes), negative strictly inside.
pub fn receiver_cone_residual(point: Vec3, geom: &SystemGeometry) -> Result<f64> {
    let q = point - geom.receiver();
    if q.norm_sq() == 0.0 {
        return Err(Error::Domain("point coincides with the receiver".into()));
    }
    let n = geom.rx_axis();
    let proj = n.dot(q);
    Ok(geom.beta_r.cos().powi(2) * q.norm_sq() - proj * proj)
}

/// Branch of the tau interval along an in-plane ray.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TauIntervalKind {
    /// Linear case: residual changes sign once, interval unbounded above.
    HalfLineFromTau0,
    /// Quadratic case with one positive entry point, unbounded above.
    HalfLineFromTau2,
    /// Bounded segment [tau1, tau2].
    Segment,
    Empty,
}

/// Interval of distances tau along a fixed in-plane ray for which the point
/// lies inside the receiver FoV cone (correct nappe only).
#[derive(Debug, Clone, Copy)]
pub struct TauInterval {
    pub kind: TauIntervalKind,
    /// Lower endpoint (m); 0 when the ray starts inside.
    pub lo: f64,
    /// Upper endpoint (m); `None` when unbounded.
    pub hi: Option<f64>,
    pub xi1: f64,
    pub xi2: f64,
    pub xi3: f64,
    pub discriminant: f64,
}

impl TauInterval {
    pub fn empty(xi1: f64, xi2: f64, xi3: f64, disc: f64) -> Self {
        TauInterval {
            kind: TauIntervalKind::Empty,
            lo: 0.0,
            hi: Some(0.0),
            xi1,
            xi2,
            xi3,
            discriminant: disc,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.kind == TauIntervalKind::Empty
    }
}

/// Intersection of the in-plane ray at (vartheta, varpi) with the receiver
/// FoV cone. The quadratic in tau comes from substituting the ray's
/// parametric coefficients into the cone implicit equation; roots on the
/// mirror nappe (negative projection on the FoV axis) are discarded.
pub fn tau_interval(vartheta: f64, varpi: f64, geom: &SystemGeometry) -> TauInterval {
    let a = ray_coefficients(varpi, vartheta, geom);
    let n = geom.rx_axis();
    let r = geom.range_r;
    let cb2 = geom.beta_r.cos().powi(2);
    let axis_dot = n.dot(a);
    let xi1 = cb2 * a.norm_sq() - axis_dot * axis_dot;
    let xi2 = 2.0 * r * (axis_dot * geom.theta_r.cos() * geom.alpha_r.sin() - a.y * cb2);
    let xi3 = r * r * (cb2 - (geom.theta_r.cos() * geom.alpha_r.sin()).powi(2));
    let disc = xi2 * xi2 - 4.0 * xi1 * xi3;

    // Set where the residual xi1 t^2 + xi2 t + xi3 is negative, as up to two
    // open intervals of the positive half-line.
    let scale = (xi1.abs().max(xi2.abs() / r).max(xi3.abs() / (r * r))).max(1e-300);
    let mut neg: Vec<(f64, Option<f64>)> = Vec::new();
    let mut linear = false;
    if xi1.abs() < 1e-14 * scale {
        linear = true;
        if xi2.abs() < 1e-14 * scale * r {
            if xi3 < 0.0 {
                neg.push((0.0, None));
            }
        } else {
            let t0 = -xi3 / xi2;
            if xi2 < 0.0 {
                // negative for t > t0
                neg.push((t0.max(0.0), None));
            } else if t0 > 0.0 {
                neg.push((0.0, Some(t0)));
            }
        }
    } else if xi1 > 0.0 {
        if disc > 0.0 {
            let (t1, t2) = quadratic_roots(xi1, xi2, disc);
            if t2 > 0.0 {
                neg.push((t1.max(0.0), Some(t2)));
            }
        }
    } else {
        // xi1 < 0: negative outside the roots
        if disc > 0.0 {
            let (t1, t2) = quadratic_roots(xi1, xi2, disc);
            // quadratic_roots orders by value for xi1 > 0; recompute ordered
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            if lo > 0.0 {
                neg.push((0.0, Some(lo)));
            }
            neg.push((hi.max(0.0), None));
        } else {
            neg.push((0.0, None));
        }
    }

    // Correct-nappe constraint: N_r . (P - R) > 0. Linear in tau and positive
    // at tau = 0, so the admissible set is either everything or (0, t_nappe).
    let proj0 = -r * n.y; // projection at tau = 0
    let nappe_hi = if axis_dot >= 0.0 {
        None
    } else {
        Some(proj0.max(0.0) / -axis_dot)
    };

    let mut best: Option<(f64, Option<f64>)> = None;
    for (lo, hi) in neg {
        let (clo, chi) = match (hi, nappe_hi) {
            (None, None) => (lo, None),
            (None, Some(nh)) => (lo, Some(nh)),
            (Some(h), None) => (lo, Some(h)),
            (Some(h), Some(nh)) => (lo, Some(h.min(nh))),
        };
        let ok = match chi {
            None => true,
            Some(h) => h > clo,
        };
        if ok {
            // the correct-nappe interior is connected; keep the first live piece
            best = Some((clo, chi));
            break;
        }
    }

    match best {
        None => TauInterval::empty(xi1, xi2, xi3, disc),
        Some((lo, hi)) => {
            let kind = match hi {
                None if linear => TauIntervalKind::HalfLineFromTau0,
                None => TauIntervalKind::HalfLineFromTau2,
                Some(_) => TauIntervalKind::Segment,
            };
            TauInterval {
                kind,
                lo,
                hi,
                xi1,
                xi2,
                xi3,
                discriminant: disc,
            }
        }
    }
}

/// Numerically stable roots of xi1 t^2 + xi2 t + xi3 with disc > 0,
/// returned in ascending order.
fn quadratic_roots(xi1: f64, xi2: f64, disc: f64) -> (f64, f64) {
    let sq = disc.sqrt();
    let q = -0.5 * (xi2 + xi2.signum() * sq);
    let xi3 = (xi2 * xi2 - disc) / (4.0 * xi1);
    let (ra, rb) = if q != 0.0 {
        (q / xi1, xi3 / q)
    } else {
        // xi2 == 0 and disc == 0 only; double root at zero
        (0.0, 0.0)
    };
    if ra <= rb {
        (ra, rb)
    } else {
        (rb, ra)
    }
}

/// Corner angle limits Theta_{t,m} and Theta_{r,m} for m in {a, b, c, d}:
/// elevation of each top corner within the respective rotating-plane family.
#[derive(Debug, Clone, Copy)]
pub struct CornerAngleLimits {
    pub tx: [f64; 4],
    pub rx: [f64; 4],
}

impl CornerAngleLimits {
    pub fn tx_min(&self) -> f64 {
        self.tx.iter().cloned().fold(f64::INFINITY, f64::min)
    }
    pub fn rx_min(&self) -> f64 {
        self.rx.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

pub fn corner_angle_limits(
    geom: &SystemGeometry,
    obstacle: &ObstacleBox,
) -> Result<CornerAngleLimits> {
    if geom.alpha_t.sin().abs() < 1e-12 || geom.alpha_r.sin().abs() < 1e-12 {
        return Err(Error::DegenerateAzimuth);
    }
    let cot_t = geom.alpha_t.cos() / geom.alpha_t.sin();
    let cot_r = geom.alpha_r.cos() / geom.alpha_r.sin();
    let k = obstacle.height_kappa;
    let corners = obstacle.corners();
    let tops = [corners.a, corners.b, corners.c, corners.d];
    let mut tx = [0.0; 4];
    let mut rx = [0.0; 4];
    for (i, m) in tops.iter().enumerate() {
        tx[i] = (k * (cot_t * cot_t + 1.0).sqrt() / (m.x * cot_t + m.y).abs()).atan();
        rx[i] =
            (k * (cot_r * cot_r + 1.0).sqrt() / (m.x * cot_r + m.y - geom.range_r).abs()).atan();
    }
    Ok(CornerAngleLimits { tx, rx })
}

/// Outcome of the validity screen: the elevation/corner constraints the
/// closed-form blockage cases rely on.
#[derive(Debug, Clone, Default)]
pub struct ValidityReport {
    pub violations: Vec<String>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check parameter ranges plus the plane-elevation constraints at the
/// extreme plane rotations. Never aborts; every violated inequality is
/// listed.
// `!(x > 0.0)` style checks are deliberate: NaN must be rejected too
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn validate_geometry(geom: &SystemGeometry, obstacle: &ObstacleBox) -> ValidityReport {
    let mut v = Vec::new();
    let half_pi = std::f64::consts::FRAC_PI_2;
    let pi = std::f64::consts::PI;
    for (name, val) in [
        ("beta_t", geom.beta_t),
        ("beta_r", geom.beta_r),
        ("theta_t", geom.theta_t),
        ("theta_r", geom.theta_r),
    ] {
        if !(val > 0.0 && val < half_pi) {
            v.push(format!("{name} = {val} outside (0, pi/2)"));
        }
    }
    if !(geom.alpha_t >= half_pi && geom.alpha_t < pi) {
        v.push(format!("alpha_t = {} outside [pi/2, pi)", geom.alpha_t));
    }
    if !(geom.alpha_r > -pi && geom.alpha_r <= -half_pi) {
        v.push(format!("alpha_r = {} outside (-pi, -pi/2]", geom.alpha_r));
    }
    for (name, val) in [
        ("range_r", geom.range_r),
        ("aperture_area", geom.aperture_area),
        ("pulse_energy", geom.pulse_energy),
    ] {
        if !(val > 0.0) {
            v.push(format!("{name} = {val} must be positive"));
        }
    }
    for (name, val) in [
        ("s", obstacle.thickness_s),
        ("w", obstacle.width_w),
        ("kappa", obstacle.height_kappa),
    ] {
        if !(val > 0.0) {
            v.push(format!("obstacle {name} = {val} must be positive"));
        }
    }
    if !(obstacle.center_x < -0.5 * obstacle.thickness_s) {
        v.push(format!(
            "x_o = {} must lie below -s/2 = {}",
            obstacle.center_x,
            -0.5 * obstacle.thickness_s
        ));
    }
    if !(obstacle.center_y > 0.5 * obstacle.width_w
        && obstacle.center_y < geom.range_r - 0.5 * obstacle.width_w)
    {
        v.push(format!(
            "y_o = {} outside (w/2, r - w/2) = ({}, {})",
            obstacle.center_y,
            0.5 * obstacle.width_w,
            geom.range_r - 0.5 * obstacle.width_w
        ));
    }
    // delta_t > 0 over the open plane-rotation interval, checked at closure
    if !(geom.theta_t - geom.beta_t > 0.0) {
        v.push(format!(
            "delta_t = theta_t + vartheta not positive over vartheta in (-beta_t, beta_t): theta_t = {}, beta_t = {}",
            geom.theta_t, geom.beta_t
        ));
    }
    if !(geom.theta_r - geom.beta_r > 0.0) {
        v.push(format!(
            "delta_r = theta_r + sigma not positive over sigma in (-beta_r, beta_r): theta_r = {}, beta_r = {}",
            geom.theta_r, geom.beta_r
        ));
    }
    match corner_angle_limits(geom, obstacle) {
        Ok(lim) => {
            if geom.theta_t + geom.beta_t > lim.tx_min() {
                v.push(format!(
                    "theta_t + beta_t = {} exceeds min corner limit Theta_t = {}",
                    geom.theta_t + geom.beta_t,
                    lim.tx_min()
                ));
            }
            if geom.theta_r + geom.beta_r > lim.rx_min() {
                v.push(format!(
                    "theta_r + beta_r = {} exceeds min corner limit Theta_r = {}",
                    geom.theta_r + geom.beta_r,
                    lim.rx_min()
                ));
            }
        }
        Err(e) => v.push(format!("corner angle limits unavailable: {e}")),
    }
    ValidityReport { violations: v }
}

/// A parametric ray (origin + omega * direction); the direction carries the
/// exact boundary-ray coefficients, not normalized.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryRay {
    pub origin: Vec3,
    pub direction: Vec3,
}

/// Boundary rays of the beam and FoV cones in the extreme rotating planes.
/// Test-only constructors; their measure-zero contribution is excluded from
/// quadrature.
pub struct BoundaryRays {
    pub tx_plus: BoundaryRay,
    pub tx_minus: BoundaryRay,
    pub rx_plus: BoundaryRay,
    pub rx_minus: BoundaryRay,
}

pub fn boundary_rays(geom: &SystemGeometry) -> BoundaryRays {
    let tx = |delta: f64| BoundaryRay {
        origin: Vec3::ZERO,
        direction: Vec3::new(
            geom.beta_t.cos().recip() * delta.cos() * geom.alpha_t.cos(),
            geom.beta_t.cos().recip() * delta.cos() * geom.alpha_t.sin(),
            geom.beta_t.cos().recip() * delta.sin(),
        ),
    };
    let rx = |delta: f64| BoundaryRay {
        origin: geom.receiver(),
        direction: Vec3::new(
            geom.beta_r.cos().recip() * delta.cos() * geom.alpha_r.cos(),
            geom.beta_r.cos().recip() * delta.cos() * geom.alpha_r.sin(),
            geom.beta_r.cos().recip() * delta.sin(),
        ),
    };
    BoundaryRays {
        tx_plus: tx(geom.theta_t + geom.beta_t),
        tx_minus: tx(geom.theta_t - geom.beta_t),
        rx_plus: rx(geom.theta_r + geom.beta_r),
        rx_minus: rx(geom.theta_r - geom.beta_r),
    }
}
