//! Closed-form SIR distributions for relay-assisted downlinks and metrics
//! derived from them by numerical quadrature.
//!
//! Working in normalized units (dimensionless distance r, interferer density
//! lambda per unit area), the SIR at a receiver served from distance r with
//! Rayleigh fading on every link and a field of NLoS interferers outside the
//! serving distance has the complementary distribution
//!
//! ```text
//! aerial relay:  P(SIR > xi) = exp(-lambda pi r  sqrt(xi) atan(sqrt(xi)/r))
//! ground relay:  P(SIR > xi) = exp(-lambda pi r^2 sqrt(xi) atan(sqrt(xi)))
//! ```
//!
//! The two branches coincide exactly at r = 1: the aerial advantage at
//! longer serving distances is expressed relative to the distance unit.
//! `montecarlo` validates both branches against direct simulation.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::propagation::RelayKind;

/// Absolute tolerance used by all quadrature in this module.
pub const QUAD_TOL: f64 = 1e-6;

/// A point query against the closed-form SIR distribution.
#[derive(Debug, Clone, Copy)]
pub struct SirQuery {
    pub kind: RelayKind,
    /// Interferer density per unit area (normalized units).
    pub lambda: f64,
    /// Serving-link distance (normalized units).
    pub r: f64,
    /// SIR threshold, linear.
    pub xi: f64,
}

impl SirQuery {
    pub fn new(kind: RelayKind, lambda: f64, r: f64, xi: f64) -> Result<Self> {
        let q = SirQuery { kind, lambda, r, xi };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::invalid("lambda", "must be finite and >= 0"));
        }
        if !(self.r.is_finite() && self.r > 0.0) {
            return Err(Error::invalid("r", "must be finite and positive"));
        }
        if self.xi.is_nan() || self.xi < 0.0 {
            return Err(Error::invalid("xi", "must be >= 0"));
        }
        Ok(())
    }
}

pub(crate) fn ccdf_value(kind: RelayKind, lambda: f64, r: f64, xi: f64) -> f64 {
    let sx = xi.sqrt();
    let exponent = match kind {
        RelayKind::SuavRn => lambda * PI * r * sx * (sx / r).atan(),
        RelayKind::GroundRn => lambda * PI * (r * r) * sx * sx.atan(),
    };
    (-exponent).exp()
}

/// P(SIR > xi) for the given query.
pub fn ccdf_sir(q: &SirQuery) -> Result<f64> {
    q.validate()?;
    Ok(ccdf_value(q.kind, q.lambda, q.r, q.xi))
}

/// Outage probability P(SIR <= xi_min), the complement of the CCDF.
pub fn outage(q: &SirQuery) -> Result<f64> {
    Ok(1.0 - ccdf_sir(q)?)
}

/// Ergodic capacity result. `interference_free` flags the degenerate
/// lambda = 0 case where the SIR integral diverges and the configured
/// spectral-efficiency cap is reported instead.
#[derive(Debug, Clone, Copy)]
pub struct CapacityEstimate {
    pub bits_per_hz: f64,
    pub interference_free: bool,
}

/// E[log2(1 + SIR)] in bits/s/Hz, computed as the integral over t of
/// P(SIR > 2^t - 1).
pub fn ergodic_capacity(
    kind: RelayKind,
    lambda: f64,
    r: f64,
    se_cap: f64,
) -> Result<CapacityEstimate> {
    SirQuery::new(kind, lambda, r, 0.0)?;
    if !(se_cap.is_finite() && se_cap > 0.0) {
        return Err(Error::invalid("se_cap", "must be finite and positive"));
    }
    if lambda == 0.0 {
        return Ok(CapacityEstimate {
            bits_per_hz: se_cap,
            interference_free: true,
        });
    }
    let integrand = |t: f64| ccdf_value(kind, lambda, r, (2.0_f64).powf(t) - 1.0);
    // The integrand decays doubly exponentially in t; find a cutoff where it
    // is negligible, then integrate adaptively.
    let mut hi = 1.0;
    while integrand(hi) > 1e-14 && hi < 1e6 {
        hi *= 2.0;
    }
    let value = quad::adaptive_simpson(&integrand, 0.0, hi, QUAD_TOL)?;
    Ok(CapacityEstimate {
        bits_per_hz: value,
        interference_free: false,
    })
}

/// Serving-distance distribution used when averaging metrics over r.
#[derive(Debug, Clone, Copy)]
pub enum DistanceLaw {
    /// Distance to the nearest point of a Poisson process of this density:
    /// f(r) = 2 pi lambda r exp(-lambda pi r^2).
    NearestPoint { lambda: f64 },
    /// Uniform position in a disk of this radius around the serving node:
    /// f(r) = 2 r / radius^2.
    UniformDisk { radius: f64 },
    /// Degenerate law, metric evaluated at one distance.
    FixedDistance { r: f64 },
}

impl DistanceLaw {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            DistanceLaw::NearestPoint { lambda } => lambda.is_finite() && *lambda > 0.0,
            DistanceLaw::UniformDisk { radius } => radius.is_finite() && *radius > 0.0,
            DistanceLaw::FixedDistance { r } => r.is_finite() && *r > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("distance_law", "parameter must be positive"))
        }
    }
}

/// Which pointwise metric to average over the distance law.
#[derive(Debug, Clone, Copy)]
pub enum SirMetric {
    CcdfAt(f64),
    OutageAt(f64),
    ErgodicCapacity { se_cap: f64 },
}

fn metric_at(metric: SirMetric, kind: RelayKind, lambda: f64, r: f64) -> Result<f64> {
    match metric {
        SirMetric::CcdfAt(xi) => ccdf_sir(&SirQuery::new(kind, lambda, r, xi)?),
        SirMetric::OutageAt(xi) => outage(&SirQuery::new(kind, lambda, r, xi)?),
        SirMetric::ErgodicCapacity { se_cap } => {
            Ok(ergodic_capacity(kind, lambda, r, se_cap)?.bits_per_hz)
        }
    }
}

/// Average of a pointwise metric over the serving distance distribution.
pub fn mean_over_distance(
    metric: SirMetric,
    kind: RelayKind,
    lambda: f64,
    law: &DistanceLaw,
) -> Result<f64> {
    law.validate()?;
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::invalid("lambda", "must be finite and >= 0"));
    }
    match *law {
        DistanceLaw::FixedDistance { r } => metric_at(metric, kind, lambda, r),
        DistanceLaw::UniformDisk { radius } => {
            let f = |r: f64| {
                if r <= 0.0 {
                    return 0.0;
                }
                let density = 2.0 * r / (radius * radius);
                metric_at(metric, kind, lambda, r).unwrap_or(f64::NAN) * density
            };
            quad::adaptive_simpson(&f, 0.0, radius, QUAD_TOL)
        }
        DistanceLaw::NearestPoint { lambda: law_lambda } => {
            // Integrate to where the distance density has no remaining mass.
            let r_max = (37.0 / (law_lambda * PI)).sqrt();
            let f = |r: f64| {
                if r <= 0.0 {
                    return 0.0;
                }
                let density = 2.0 * PI * law_lambda * r * (-law_lambda * PI * r * r).exp();
                metric_at(metric, kind, lambda, r).unwrap_or(f64::NAN) * density
            };
            quad::adaptive_simpson(&f, 0.0, r_max, QUAD_TOL)
        }
    }
}

pub(crate) mod quad {
    use crate::error::{Error, Result};

    /// Adaptive Simpson integration to an absolute tolerance.
    pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
        if !(a.is_finite() && b.is_finite() && b >= a) {
            return Err(Error::invalid("integration bounds", "need finite a <= b"));
        }
        if a == b {
            return Ok(0.0);
        }
        let m = 0.5 * (a + b);
        let fa = f(a);
        let fm = f(m);
        let fb = f(b);
        if !(fa.is_finite() && fm.is_finite() && fb.is_finite()) {
            return Err(Error::numeric("quadrature", "non-finite integrand"));
        }
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        recurse(f, a, b, fa, fm, fb, whole, tol, 60)
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        if !(flm.is_finite() && frm.is_finite()) {
            return Err(Error::numeric("quadrature", "non-finite integrand"));
        }
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        if depth == 0 {
            return Err(Error::numeric("quadrature", "refinement limit reached"));
        }
        let half_tol = 0.5 * tol;
        Ok(recurse(f, a, m, fa, flm, fm, left, half_tol, depth - 1)?
            + recurse(f, m, b, fm, frm, fb, right, half_tol, depth - 1)?)
    }

}
