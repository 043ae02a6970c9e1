//! Blockage weighting factor for a scattering point: the closed-form
//! case/condition evaluation and the exact segment-box oracle.

use super::frames::{classify, rx_plane_frame, BlockageClassification, RxPlaneFrame, TxPlaneFrame};
use super::{ObstacleBox, ScatterSample, SystemGeometry};
use crate::error::Result;
use crate::vec3::Vec3;

/// Which evaluator decides the weighting factor during quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockageEvaluator {
    /// Closed-form case/condition interval logic.
    #[default]
    PaperCases,
    /// Exact segment-box intersection test.
    ExactOracle,
}

/// True when the open segment p0 -> p1 passes through the open box volume.
/// Slab method; touching a face does not count.
pub fn segment_hits_box(p0: Vec3, p1: Vec3, obstacle: &ObstacleBox) -> bool {
    let d = p1 - p0;
    let mut t_lo: f64 = 0.0;
    let mut t_hi: f64 = 1.0;
    let slabs = [
        (p0.x, d.x, obstacle.x_min(), obstacle.x_max()),
        (p0.y, d.y, obstacle.y_min(), obstacle.y_max()),
        (p0.z, d.z, 0.0, obstacle.height_kappa),
    ];
    for (o, dir, lo, hi) in slabs {
        if dir.abs() < 1e-300 {
            if o <= lo || o >= hi {
                return false;
            }
        } else {
            let inv = 1.0 / dir;
            let (mut t0, mut t1) = ((lo - o) * inv, (hi - o) * inv);
            if t0 > t1 {
                std::mem::swap(&mut t0, &mut t1);
            }
            t_lo = t_lo.max(t0);
            t_hi = t_hi.min(t1);
            if t_lo >= t_hi {
                return false;
            }
        }
    }
    true
}

/// Exact ground truth for the weighting factor: 1 iff neither the segment
/// T -> P nor the segment P -> R crosses the obstacle volume.
pub fn g_wei_oracle(point_p: Vec3, geom: &SystemGeometry, obstacle: &ObstacleBox) -> u8 {
    let t = Vec3::ZERO;
    let r = geom.receiver();
    if segment_hits_box(t, point_p, obstacle) || segment_hits_box(point_p, r, obstacle) {
        0
    } else {
        1
    }
}

#[derive(Clone, Copy)]
struct Interval {
    lo: f64,
    lo_closed: bool,
    hi: f64,
    hi_closed: bool,
}

impl Interval {
    fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }
}

fn closed(lo: f64, hi: f64) -> Interval {
    Interval { lo, lo_closed: true, hi, hi_closed: true }
}
fn open_closed(lo: f64, hi: f64) -> Interval {
    Interval { lo, lo_closed: false, hi, hi_closed: true }
}
fn closed_open(lo: f64, hi: f64) -> Interval {
    Interval { lo, lo_closed: true, hi, hi_closed: false }
}

/// Closed-form weighting factor for a scattering point, given the
/// transmitter-side frame of its plane. The receiver-side frame is built
/// from the point's own plane rotation angle.
pub fn g_wei_paper(
    sample: &ScatterSample,
    geom: &SystemGeometry,
    obstacle: &ObstacleBox,
    tx_frame: &TxPlaneFrame,
) -> Result<u8> {
    let sigma = geom.sigma_of(sample.point_p);
    let sigma = sigma.clamp(-geom.beta_r, geom.beta_r);
    let rx_frame = rx_plane_frame(sigma, geom, obstacle)?;
    let class = classify(tx_frame, &rx_frame)?;
    Ok(g_wei_paper_classified(sample, geom, tx_frame, &rx_frame, &class))
}

/// Case/condition interval evaluation with pre-built frames and
/// classification.
pub fn g_wei_paper_classified(
    sample: &ScatterSample,
    geom: &SystemGeometry,
    tx: &TxPlaneFrame,
    rx: &RxPlaneFrame,
    class: &BlockageClassification,
) -> u8 {
    if class.tx_case == 6 || class.rx_condition == 6 {
        return 1;
    }
    let p = sample.point_p;
    let psi_t = tx.psi_esp(p);
    let psi_r = rx.psi_esp(p);
    let tp = sample.tau;
    let rp = (p - geom.receiver()).norm();

    // receiver-side clear intervals
    let r_low_clear = closed_open(rx.omega_min, rx.psi_min); // [Omega_r,min, Psi_r,min)
    let r_high_clear = open_closed(rx.psi_max, rx.omega_max); // (Psi_r,max, Omega_r,max]
    // transmitter-side clear intervals
    let t_low_clear = closed_open(tx.omega_min, tx.psi_min);
    let t_high_clear = open_closed(tx.psi_max, tx.omega_max);

    // distance-constrained membership of the t-side interval, per the
    // near-face polar line bound
    let tp_ok = |iv: Interval| -> bool {
        iv.contains(psi_t)
            && match tx.tp_bound(psi_t) {
                None => true,
                Some(b) => tp < b,
            }
    };
    let rp_ok = |iv: Interval| -> bool {
        iv.contains(psi_r)
            && match rx.rp_bound(psi_r) {
                None => true,
                Some(b) => rp < b,
            }
    };

    // per-condition receiver interval for the distance-constrained branch
    let psi_r_dd = rx.edge(super::frames::Corner::D).psi;
    let r_possible = |cond: u8| -> bool {
        match cond {
            2 => rp_ok(closed(rx.omega_min, psi_r_dd)),
            3 => rp_ok(closed(rx.psi_min, psi_r_dd)),
            4 => rp_ok(closed(rx.omega_min, rx.omega_max.min(psi_r_dd))),
            5 => rp_ok(closed(rx.psi_min, rx.omega_max.min(psi_r_dd))),
            _ => false,
        }
    };

    let psi_t_cc = tx.edge(super::frames::Corner::C).psi;
    let cond = class.rx_condition;

    let one = match class.tx_case {
        1 => match cond {
            1 => true,
            2 => r_high_clear.contains(psi_r),
            3 => r_low_clear.contains(psi_r) || r_high_clear.contains(psi_r),
            5 => r_low_clear.contains(psi_r),
            _ => false,
        },
        2 => {
            let always = match cond {
                1 => t_high_clear.contains(psi_t),
                2 => t_high_clear.contains(psi_t) && r_high_clear.contains(psi_r),
                3 => {
                    t_high_clear.contains(psi_t)
                        && (r_high_clear.contains(psi_r) || r_low_clear.contains(psi_r))
                }
                5 => t_high_clear.contains(psi_t) && r_low_clear.contains(psi_r),
                _ => false,
            };
            let possible = (2..=5).contains(&cond)
                && tp_ok(closed(tx.omega_min, psi_t_cc))
                && r_possible(cond);
            always || possible
        }
        3 => {
            let always = match cond {
                1 => t_low_clear.contains(psi_t) || t_high_clear.contains(psi_t),
                2 => {
                    t_low_clear.contains(psi_t)
                        || (t_high_clear.contains(psi_t) && r_high_clear.contains(psi_r))
                }
                3 => {
                    t_low_clear.contains(psi_t)
                        || (r_low_clear.contains(psi_r)
                            && closed(tx.psi_min, tx.psi_max).contains(psi_t))
                        || ((r_low_clear.contains(psi_r) || r_high_clear.contains(psi_r))
                            && t_high_clear.contains(psi_t))
                }
                4 => t_low_clear.contains(psi_t),
                5 => {
                    t_low_clear.contains(psi_t)
                        || (closed(tx.psi_min, tx.omega_max).contains(psi_t)
                            && r_low_clear.contains(psi_r))
                }
                _ => false,
            };
            let possible = (2..=5).contains(&cond)
                && tp_ok(closed(tx.psi_min, psi_t_cc))
                && r_possible(cond);
            always || possible
        }
        4 => {
            let always = (cond == 3 || cond == 5) && r_low_clear.contains(psi_r);
            let possible = (2..=5).contains(&cond)
                && tp_ok(closed(tx.omega_min, tx.omega_max.min(psi_t_cc)))
                && r_possible(cond);
            always || possible
        }
        5 => {
            let always = match cond {
                1..=5 => {
                    t_low_clear.contains(psi_t)
                        || ((cond == 3 || cond == 5)
                            && closed(tx.psi_min, tx.omega_max).contains(psi_t)
                            && r_low_clear.contains(psi_r))
                }
                _ => false,
            };
            let possible = (2..=5).contains(&cond)
                && tp_ok(closed(tx.psi_min, tx.omega_max.min(psi_t_cc)))
                && r_possible(cond);
            always || possible
        }
        _ => true,
    };
    u8::from(one)
}
