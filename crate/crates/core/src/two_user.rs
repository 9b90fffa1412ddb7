//! Closed-form EE-optimal powers for two-user clusters.
//!
//! Users are indexed by descending gain (user 0 is the stronger one). Under
//! Case I the stronger user is decoded first; under Case II the weaker one
//! is. Each case is split into phases by the signs of the EE gradient at the
//! corner points of the power box, and every phase has its own solution,
//! needing at most one bisection.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cluster::{ee_gradient, min_powers, ClusterInstance, EeSolution, PowerVector};
use crate::{Error, Result};

/// Bisection precision in watts.
pub const BISECTION_DELTA_W: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SicCase {
    /// The stronger user is decoded first.
    CaseI,
    /// The weaker user is decoded first.
    CaseII,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PhaseLabel {
    I,
    II,
    III,
    IV,
}

impl fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PhaseLabel::I => "I",
            PhaseLabel::II => "II",
            PhaseLabel::III => "III",
            PhaseLabel::IV => "IV",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Phase {
    case: SicCase,
    label: PhaseLabel,
}

impl Phase {
    /// Phase IV exists only under Case I.
    pub fn new(case: SicCase, label: PhaseLabel) -> Result<Self> {
        if case == SicCase::CaseII && label == PhaseLabel::IV {
            return Err(Error::Domain("Case II has no phase IV".into()));
        }
        Ok(Self { case, label })
    }

    pub fn case(&self) -> SicCase {
        self.case
    }

    pub fn label(&self) -> PhaseLabel {
        self.label
    }
}

/// Substitution that keeps the weaker user's QoS tight under Case II:
/// `P_1 = k P_2 + b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseIIGeometry {
    /// Infinite when the weaker user has no QoS target.
    pub k: f64,
    pub b: f64,
    /// Smallest power meeting the stronger user's QoS with no interference.
    pub p1_bar_min: f64,
}

impl CaseIIGeometry {
    pub fn new(instance: &ClusterInstance) -> Result<Self> {
        check_two_users(instance)?;
        let (h1, h2) = (instance.gains()[0], instance.gains()[1]);
        let noise = instance.noise_power();
        Ok(Self {
            k: h2 / (instance.sinr_target(1) * h1),
            b: -noise / h1,
            p1_bar_min: instance.sinr_target(0) * noise / h1,
        })
    }

    pub fn p1(&self, p2: f64) -> f64 {
        self.k * p2 + self.b
    }

    pub fn p2(&self, p1: f64) -> f64 {
        (p1 - self.b) / self.k
    }
}

/// EE partial derivatives at the corner points that decide the phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseDerivatives {
    /// dEE/dP1 at (P1max, P2max).
    pub d1_at_max: f64,
    /// dEE/dP2 at (P1max, P2max).
    pub d2_at_max: f64,
    /// dEE/dP1 at (P1max, P2min).
    pub d1_at_p2_min: f64,
    /// dEE/dP2 at (P1max, P2min).
    pub d2_at_p2_min: f64,
}

/// `P2min = (2^R2 - 1) noise / |h2|^2` is the weaker user's interference-free
/// minimum.
pub fn phase_derivatives(instance: &ClusterInstance) -> Result<PhaseDerivatives> {
    check_two_users(instance)?;
    let [p1_max, p2_max] = caps(instance);
    let p2_min = interference_free_min(instance, 1);
    let at_max = ee_gradient(instance, &[p1_max, p2_max])?;
    let at_min = ee_gradient(instance, &[p1_max, p2_min])?;
    Ok(PhaseDerivatives {
        d1_at_max: at_max[0],
        d2_at_max: at_max[1],
        d1_at_p2_min: at_min[0],
        d2_at_p2_min: at_min[1],
    })
}

pub fn classify_phase_case1(instance: &ClusterInstance) -> Result<Phase> {
    ensure_feasible(instance)?;
    let d = phase_derivatives(instance)?;
    // d1 >= d2 at every point, so the rows below are exhaustive; exact zeros
    // fall into the lower-numbered phase.
    let label = if d.d2_at_max >= 0.0 {
        PhaseLabel::I
    } else if d.d1_at_max >= 0.0 && d.d1_at_p2_min >= 0.0 {
        PhaseLabel::II
    } else if d.d1_at_p2_min >= 0.0 {
        PhaseLabel::III
    } else {
        PhaseLabel::IV
    };
    Phase::new(SicCase::CaseI, label)
}

pub fn classify_phase_case2(instance: &ClusterInstance) -> Result<Phase> {
    ensure_feasible(&case2_order(instance)?)?;
    let d = phase_derivatives(instance)?;
    let label = if d.d2_at_max >= 0.0 {
        PhaseLabel::I
    } else if d.d1_at_max >= 0.0 {
        PhaseLabel::II
    } else {
        PhaseLabel::III
    };
    Phase::new(SicCase::CaseII, label)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoUserSolution {
    /// `None` when the instance is infeasible under the requested order.
    pub phase: Option<Phase>,
    /// Powers and rates indexed by user (0 = stronger), with rates computed
    /// under the requested decoding order.
    pub solution: EeSolution,
    /// Set when the solution fell back to a boundary point the phase table
    /// does not list explicitly.
    pub note: Option<&'static str>,
}

/// Case I solution; `solution.feasible == false` when the QoS targets cannot
/// be met.
pub fn solve_case1(instance: &ClusterInstance) -> Result<TwoUserSolution> {
    check_two_users(instance)?;
    if !min_powers(instance).is_feasible() {
        return Ok(infeasible());
    }
    let phase = classify_phase_case1(instance)?;
    let [p1_max, p2_max] = caps(instance);
    let p2_min = interference_free_min(instance, 1);
    let p2_cap = qos_cap(instance, 0, p1_max);

    let powers = match phase.label {
        PhaseLabel::I => [p1_max, p2_max.min(p2_cap)],
        PhaseLabel::II | PhaseLabel::III => {
            let root = stationary_p2(instance, p1_max, p2_min, p2_max)?;
            [p1_max, root.min(p2_cap).max(p2_min)]
        }
        PhaseLabel::IV => {
            let p1_min = min_powers(instance).powers[0];
            let d1 = |p1: f64| ee_gradient(instance, &[p1, p2_min]).map_or(f64::NAN, |g| g[0]);
            let p1 = root_or_boundary(d1, p1_min, p1_max)?;
            [p1, p2_min]
        }
    };
    let solution = EeSolution::evaluate(instance, PowerVector::new(powers.to_vec()))?;
    Ok(TwoUserSolution {
        phase: Some(phase),
        solution,
        note: None,
    })
}

/// Case II solution; `solution.feasible == false` when the QoS targets
/// cannot be met with the weaker user decoded first.
pub fn solve_case2(instance: &ClusterInstance) -> Result<TwoUserSolution> {
    check_two_users(instance)?;
    let reversed = case2_order(instance)?;
    if !min_powers(&reversed).is_feasible() {
        return Ok(infeasible());
    }
    let phase = classify_phase_case2(instance)?;
    let geo = CaseIIGeometry::new(instance)?;
    let [p1_max, p2_max] = caps(instance);
    let mut note = None;

    let [p1, p2] = match phase.label {
        PhaseLabel::I => [p1_max.min(geo.p1(p2_max)), p2_max],
        _ if geo.k.is_infinite() => {
            // No QoS target for the weaker user: at the optimum either it is
            // silent or the stronger user is at full power.
            let d1 = |p1: f64| ee_gradient(instance, &[p1, 0.0]).map_or(f64::NAN, |g| g[0]);
            let p1 = root_or_boundary(d1, geo.p1_bar_min, p1_max)?;
            if p1 < p1_max {
                [p1, 0.0]
            } else {
                [p1_max, stationary_p2(instance, p1_max, 0.0, p2_max)?]
            }
        }
        _ => {
            let lo = geo.p2(geo.p1_bar_min).max(0.0);
            let at_p1_max = geo.p2(p1_max);
            let hi = p2_max.min(at_p1_max);
            let slope = |p2: f64| {
                let p1 = geo.p1(p2).max(0.0);
                ee_gradient(instance, &[p1, p2]).map_or(f64::NAN, |g| geo.k * g[0] + g[1])
            };
            if slope(lo) <= 0.0 {
                [geo.p1_bar_min, lo]
            } else if slope(hi) >= 0.0 {
                if at_p1_max <= p2_max {
                    [p1_max, stationary_p2(instance, p1_max, at_p1_max, p2_max)?]
                } else {
                    note = Some("case II optimum on the P2 = P2max edge");
                    [geo.p1(p2_max), p2_max]
                }
            } else {
                let p2 = bisect_root(slope, lo, hi, BISECTION_DELTA_W)?;
                [geo.p1(p2).clamp(geo.p1_bar_min, p1_max), p2]
            }
        }
    };
    if phase.label == PhaseLabel::III {
        let g = ee_gradient(instance, &[geo.p1_bar_min, geo.p2(geo.p1_bar_min).max(0.0)])?;
        if g[0] <= 0.0 && g[1] <= 0.0 && note.is_none() {
            note = Some("case II below the phase table: both gradients negative at the QoS floor");
        }
    }

    // rates under Case II: evaluate on the reversed instance, map back
    let eval = EeSolution::evaluate(&reversed, PowerVector::new(vec![p2, p1]))?;
    let solution = EeSolution {
        powers: PowerVector::new(vec![p1, p2]),
        rates: vec![eval.rates[1], eval.rates[0]],
        ..eval
    };
    Ok(TwoUserSolution {
        phase: Some(phase),
        solution,
        note,
    })
}

/// Bisection on `[lo, hi]` for a sign change of `f`; returns a point within
/// `delta` of a root after at most `ceil(log2((hi - lo) / delta))` halvings.
pub fn bisect_root<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, delta: f64) -> Result<f64> {
    if !(lo <= hi) || !(delta > 0.0) {
        return Err(Error::Domain(format!(
            "need lo <= hi and delta > 0, got [{lo}, {hi}], delta = {delta}"
        )));
    }
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.is_nan() || fb.is_nan() || fa.signum() == fb.signum() {
        return Err(Error::NotBracketed { f_lo: fa, f_hi: fb });
    }
    let halvings = ((hi - lo) / delta).log2().ceil().max(0.0) as usize;
    for _ in 0..halvings {
        let mid = 0.5 * (a + b);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

fn check_two_users(instance: &ClusterInstance) -> Result<()> {
    if instance.len() != 2 {
        return Err(Error::LengthMismatch {
            expected: 2,
            got: instance.len(),
        });
    }
    Ok(())
}

fn ensure_feasible(instance: &ClusterInstance) -> Result<()> {
    min_powers(instance).into_result(instance).map(|_| ())
}

fn case2_order(instance: &ClusterInstance) -> Result<ClusterInstance> {
    check_two_users(instance)?;
    instance.with_decode_order(&[1, 0])
}

fn infeasible() -> TwoUserSolution {
    TwoUserSolution {
        phase: None,
        solution: EeSolution::infeasible(2),
        note: None,
    }
}

fn caps(instance: &ClusterInstance) -> [f64; 2] {
    [instance.max_powers()[0], instance.max_powers()[1]]
}

fn interference_free_min(instance: &ClusterInstance, l: usize) -> f64 {
    instance.sinr_target(l) * instance.noise_power() / instance.gains()[l]
}

/// Largest power of the other user that user `l` at power `p` tolerates
/// while decoded first; infinite without a QoS target.
fn qos_cap(instance: &ClusterInstance, l: usize, p: f64) -> f64 {
    let other = 1 - l;
    let c = instance.sinr_target(l);
    if c == 0.0 {
        return f64::INFINITY;
    }
    let (h, h_other) = (instance.gains()[l], instance.gains()[other]);
    p * h / (c * h_other) - instance.noise_power() / h_other
}

/// Root of dEE/dP2 with P1 fixed, searched on `[lo, hi]`; falls back to the
/// endpoint the sign of the derivative points to.
fn stationary_p2(instance: &ClusterInstance, p1: f64, lo: f64, hi: f64) -> Result<f64> {
    let d2 = |p2: f64| ee_gradient(instance, &[p1, p2]).map_or(f64::NAN, |g| g[1]);
    root_or_boundary(d2, lo, hi)
}

/// Maximizer of a pseudo-concave 1-D function on `[lo, hi]` from its
/// derivative.
fn root_or_boundary<F: Fn(f64) -> f64>(deriv: F, lo: f64, hi: f64) -> Result<f64> {
    if !(hi > lo) {
        return Ok(lo);
    }
    if deriv(lo) <= 0.0 {
        Ok(lo)
    } else if deriv(hi) >= 0.0 {
        Ok(hi)
    } else {
        bisect_root(deriv, lo, hi, BISECTION_DELTA_W)
    }
}
