use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::ode::{dopri5, OdeOptions, OdeStatus};
use crate::geometry::MetricField;

/// Base point and tangent vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
}

impl PhasePoint {
    pub fn new(x: Vec<f64>, xi: Vec<f64>) -> Result<Self> {
        check_dim(x.len(), xi.len())?;
        Ok(PhasePoint { x, xi })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn require_nonzero(&self) -> Result<()> {
        if self.xi.iter().all(|v| *v == 0.0) {
            Err(Error::ZeroTangent)
        } else {
            Ok(())
        }
    }

    pub fn scaled(&self, lambda: f64) -> PhasePoint {
        PhasePoint {
            x: self.x.clone(),
            xi: self.xi.iter().map(|v| lambda * v).collect(),
        }
    }

    fn state(&self) -> Vec<f64> {
        self.x.iter().chain(&self.xi).copied().collect()
    }

    fn from_state(y: &[f64], n: usize) -> PhasePoint {
        PhasePoint {
            x: y[..n].to_vec(),
            xi: y[n..2 * n].to_vec(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GeodesicOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Largest allowed relative drift of `g(ξ,ξ)` over the trajectory.
    pub energy_tol: f64,
    pub h_max: Option<f64>,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for GeodesicOptions {
    fn default() -> Self {
        GeodesicOptions {
            rtol: 1e-10,
            atol: 1e-10,
            energy_tol: 1e-8,
            h_max: None,
            h_min: 1e-14,
            max_steps: 1_000_000,
        }
    }
}

impl GeodesicOptions {
    fn ode(&self) -> OdeOptions {
        OdeOptions {
            rtol: self.rtol,
            atol: self.atol,
            h_max: self.h_max,
            h_min: self.h_min,
            max_steps: self.max_steps,
        }
    }
}

/// Samples of a geodesic at the integrator's accepted steps.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub points: Vec<PhasePoint>,
    pub metric: MetricField,
    /// The flow left the chart before the requested end.
    pub exited_domain: bool,
    /// Largest relative deviation of `g(ξ,ξ)` from its initial value.
    pub max_energy_drift: f64,
}

#[derive(Serialize)]
struct SampleRow<'a> {
    t: f64,
    x: &'a [f64],
    xi: &'a [f64],
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    pub fn first(&self) -> &PhasePoint {
        &self.points[0]
    }

    pub fn last(&self) -> &PhasePoint {
        self.points.last().expect("trajectory has at least one sample")
    }

    pub fn csv_header(n: usize) -> String {
        let mut cols = vec!["t".to_string()];
        cols.extend((1..=n).map(|i| format!("x{i}")));
        cols.extend((1..=n).map(|i| format!("xi{i}")));
        cols.join(",")
    }

    /// CSV with columns `t,x1..xn,xi1..xin`.
    pub fn to_csv(&self) -> String {
        let mut out = Trajectory::csv_header(self.dim());
        out.push('\n');
        for (t, p) in self.t.iter().zip(&self.points) {
            let row: Vec<String> = std::iter::once(*t)
                .chain(p.x.iter().copied())
                .chain(p.xi.iter().copied())
                .map(|v| format!("{v:e}"))
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// JSON array of `{t, x, xi}` objects.
    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<SampleRow> = self
            .t
            .iter()
            .zip(&self.points)
            .map(|(t, p)| SampleRow { t: *t, x: &p.x, xi: &p.xi })
            .collect();
        serde_json::to_value(rows).expect("plain numeric rows serialize")
    }
}

/// Right-hand side of `ẋ = ξ`, `ξ̇^k = −Γ^k_{ij} ξ^i ξ^j`; `None` outside the
/// region where the metric is defined and positive definite.
pub fn geodesic_rhs(metric: &MetricField, y: &[f64]) -> Option<Vec<f64>> {
    let n = metric.dim();
    let (x, xi) = y.split_at(n);
    let gamma = metric.christoffel(x).ok()?;
    let acc = gamma.contract(xi);
    Some(xi.iter().copied().chain(acc.into_iter().map(|a| -a)).collect())
}

fn validate(metric: &MetricField, p0: &PhasePoint) -> Result<f64> {
    check_dim(metric.dim(), p0.dim())?;
    p0.require_nonzero()?;
    metric.cholesky(&p0.x)?;
    metric.norm_sq(&p0.x, &p0.xi)
}

fn finish(
    metric: &MetricField,
    t: Vec<f64>,
    ys: Vec<Vec<f64>>,
    status: OdeStatus,
    e0: f64,
    energy_tol: f64,
) -> Result<Trajectory> {
    let n = metric.dim();
    let points: Vec<PhasePoint> = ys.iter().map(|y| PhasePoint::from_state(y, n)).collect();
    let mut drift: f64 = 0.0;
    for p in &points {
        let e = metric.norm_sq(&p.x, &p.xi)?;
        drift = drift.max((e - e0).abs() / e0);
    }
    if drift > energy_tol {
        return Err(Error::EnergyDrift { drift, tol: energy_tol });
    }
    Ok(Trajectory {
        t,
        points,
        metric: metric.clone(),
        exited_domain: status == OdeStatus::DomainExit,
        max_energy_drift: drift,
    })
}

/// Integrate the geodesic flow of `metric` from `p0` over `[0, t_end]`.
pub fn integrate_geodesic(
    metric: &MetricField,
    p0: &PhasePoint,
    t_end: f64,
    opts: &GeodesicOptions,
) -> Result<Trajectory> {
    let e0 = validate(metric, p0)?;
    if !(t_end > 0.0) {
        return Err(Error::InvalidArgument("t_end must be positive".into()));
    }
    let sol = dopri5(
        |_, y| geodesic_rhs(metric, y),
        0.0,
        &p0.state(),
        t_end,
        &opts.ode(),
        None,
    )?;
    finish(metric, sol.t, sol.y, sol.status, e0, opts.energy_tol)
}

/// Integrate the geodesic flow of `metric` until the curve has length
/// `length` as measured by `measure` (which may differ from `metric`).
pub fn integrate_geodesic_length(
    metric: &MetricField,
    p0: &PhasePoint,
    measure: &MetricField,
    length: f64,
    opts: &GeodesicOptions,
) -> Result<Trajectory> {
    let e0 = validate(metric, p0)?;
    check_dim(metric.dim(), measure.dim())?;
    if !(length > 0.0) {
        return Err(Error::InvalidArgument("length must be positive".into()));
    }
    let n = metric.dim();
    let speed0 = measure.norm_sq(&p0.x, &p0.xi)?.sqrt();
    // Geodesic speed in its own metric is constant, so the measured speed
    // stays within a bounded factor of `speed0`; this horizon is generous.
    let t_end = 1e3 * length / speed0.max(f64::MIN_POSITIVE);
    let mut y0 = p0.state();
    y0.push(0.0);
    let rhs = |_: f64, y: &[f64]| -> Option<Vec<f64>> {
        let mut d = geodesic_rhs(metric, &y[..2 * n])?;
        let s = measure.norm_sq(&y[..n], &y[n..2 * n]).ok()?;
        if !(s >= 0.0) {
            return None;
        }
        d.push(s.sqrt());
        Some(d)
    };
    let mut event = |_: f64, y: &[f64]| y[2 * n] - length;
    let sol = dopri5(rhs, 0.0, &y0, t_end, &opts.ode(), Some(&mut event))?;
    let ys = sol.y.into_iter().map(|mut y| {
        y.truncate(2 * n);
        y
    });
    finish(metric, sol.t, ys.collect(), sol.status, e0, opts.energy_tol)
}
