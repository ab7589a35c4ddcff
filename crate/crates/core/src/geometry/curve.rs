use crate::error::{check_dim, Error, Result};
use crate::geometry::{MetricField, Trajectory};

#[derive(Clone, Debug)]
pub struct ReparamOptions {
    /// Number of output points, including both ends.
    pub samples: usize,
    /// Truncate the curve at this arc length.
    pub max_length: Option<f64>,
}

impl Default for ReparamOptions {
    fn default() -> Self {
        ReparamOptions {
            samples: 256,
            max_length: None,
        }
    }
}

/// Base points at equal arc-length spacing.
#[derive(Clone, Debug)]
pub struct Curve {
    pub points: Vec<Vec<f64>>,
    /// Arc length covered by `points`.
    pub length: f64,
}

// Five-point Gauss–Legendre nodes and weights on [-1, 1].
const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

/// Cubic Hermite segment through `(x0, v0)` and `(x1, v1)` over a time span `h`.
struct Segment<'a> {
    x0: &'a [f64],
    v0: &'a [f64],
    x1: &'a [f64],
    v1: &'a [f64],
    h: f64,
}

impl Segment<'_> {
    fn position(&self, u: f64) -> Vec<f64> {
        let u2 = u * u;
        let u3 = u2 * u;
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        (0..self.x0.len())
            .map(|i| {
                h00 * self.x0[i] + h10 * self.h * self.v0[i] + h01 * self.x1[i] + h11 * self.h * self.v1[i]
            })
            .collect()
    }

    /// Derivative with respect to time.
    fn velocity(&self, u: f64) -> Vec<f64> {
        let u2 = u * u;
        let d00 = 6.0 * u2 - 6.0 * u;
        let d10 = 3.0 * u2 - 4.0 * u + 1.0;
        let d01 = -6.0 * u2 + 6.0 * u;
        let d11 = 3.0 * u2 - 2.0 * u;
        (0..self.x0.len())
            .map(|i| {
                (d00 * self.x0[i] + d01 * self.x1[i]) / self.h + d10 * self.v0[i] + d11 * self.v1[i]
            })
            .collect()
    }

    fn speed(&self, metric: &MetricField, u: f64) -> Result<f64> {
        let s = metric.norm_sq(&self.position(u), &self.velocity(u))?;
        Ok(s.max(0.0).sqrt())
    }

    /// Arc length over the local parameter range `[0, u]`.
    fn length_to(&self, metric: &MetricField, u: f64) -> Result<f64> {
        let mut acc = 0.0;
        for (node, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
            let s = 0.5 * u * (node + 1.0);
            acc += w * self.speed(metric, s)?;
        }
        Ok(0.5 * u * self.h * acc)
    }
}

/// Resample a trajectory at equal `metric`-arc-length spacing.
///
/// Between samples the base curve is the cubic Hermite interpolant of
/// positions and velocities; segment lengths use Gauss–Legendre quadrature
/// of `√g(ẋ,ẋ)` and interior targets are located by safeguarded Newton.
pub fn arclength_reparam(traj: &Trajectory, metric: &MetricField, opts: &ReparamOptions) -> Result<Curve> {
    if traj.len() < 2 {
        return Err(Error::InvalidArgument("trajectory needs at least two samples".into()));
    }
    check_dim(metric.dim(), traj.dim())?;
    if opts.samples < 2 {
        return Err(Error::InvalidArgument("need at least two curve samples".into()));
    }
    let segs: Vec<Segment> = (0..traj.len() - 1)
        .map(|k| Segment {
            x0: &traj.points[k].x,
            v0: &traj.points[k].xi,
            x1: &traj.points[k + 1].x,
            v1: &traj.points[k + 1].xi,
            h: traj.t[k + 1] - traj.t[k],
        })
        .collect();
    let mut cum = vec![0.0];
    for s in &segs {
        let l = s.length_to(metric, 1.0)?;
        cum.push(cum.last().unwrap() + l);
    }
    let total = *cum.last().unwrap();
    if !(total > 0.0) {
        return Err(Error::ZeroLength);
    }
    let length = opts.max_length.map_or(total, |m| m.min(total));
    let mut points = Vec::with_capacity(opts.samples);
    let mut k = 0;
    for j in 0..opts.samples {
        let target = length * j as f64 / (opts.samples - 1) as f64;
        while k + 1 < segs.len() && cum[k + 1] < target {
            k += 1;
        }
        let seg = &segs[k];
        let local = target - cum[k];
        let seg_len = cum[k + 1] - cum[k];
        if local <= 0.0 {
            points.push(seg.position(0.0));
            continue;
        }
        if local >= seg_len {
            points.push(seg.position(1.0));
            continue;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut u = local / seg_len;
        for _ in 0..50 {
            let f = seg.length_to(metric, u)? - local;
            if f.abs() <= 1e-15 * (1.0 + length) {
                break;
            }
            if f > 0.0 {
                hi = u;
            } else {
                lo = u;
            }
            let d = seg.speed(metric, u)? * seg.h;
            let next = u - f / d;
            u = if d > 0.0 && next > lo && next < hi { next } else { 0.5 * (lo + hi) };
            if hi - lo < 1e-16 {
                break;
            }
        }
        points.push(seg.position(u));
    }
    Ok(Curve { points, length })
}

fn point_segment_distance(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let mut ab2 = 0.0;
    let mut ap_ab = 0.0;
    for i in 0..p.len() {
        let d = b[i] - a[i];
        ab2 += d * d;
        ap_ab += (p[i] - a[i]) * d;
    }
    let s = if ab2 > 0.0 { (ap_ab / ab2).clamp(0.0, 1.0) } else { 0.0 };
    (0..p.len())
        .map(|i| {
            let q = a[i] + s * (b[i] - a[i]);
            (p[i] - q).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

const CHUNK: usize = 16;

struct Chunk {
    start: usize,
    end: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Chunk {
    fn distance_lower_bound(&self, p: &[f64]) -> f64 {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (lo, hi))| {
                let d = if v < lo { lo - v } else if v > hi { v - hi } else { 0.0 };
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// One-sided Hausdorff distance: the largest Euclidean-in-chart distance
/// from a point of `c1` to the polyline through `c2`.
pub fn curve_distance(c1: &[Vec<f64>], c2: &[Vec<f64>]) -> f64 {
    if c1.is_empty() || c2.is_empty() {
        return f64::INFINITY;
    }
    if c2.len() == 1 {
        return c1
            .iter()
            .map(|p| point_segment_distance(p, &c2[0], &c2[0]))
            .fold(0.0, f64::max);
    }
    let nseg = c2.len() - 1;
    let chunks: Vec<Chunk> = (0..nseg)
        .step_by(CHUNK)
        .map(|start| {
            let end = (start + CHUNK).min(nseg);
            let dim = c2[start].len();
            let mut lo = vec![f64::INFINITY; dim];
            let mut hi = vec![f64::NEG_INFINITY; dim];
            for q in &c2[start..=end] {
                for i in 0..dim {
                    lo[i] = lo[i].min(q[i]);
                    hi[i] = hi[i].max(q[i]);
                }
            }
            Chunk { start, end, lo, hi }
        })
        .collect();
    let mut worst: f64 = 0.0;
    for p in c1 {
        let mut best = f64::INFINITY;
        for ch in &chunks {
            if ch.distance_lower_bound(p) >= best {
                continue;
            }
            for k in ch.start..ch.end {
                best = best.min(point_segment_distance(p, &c2[k], &c2[k + 1]));
            }
        }
        worst = worst.max(best);
    }
    worst
}

/// `max(d(c1, c2), d(c2, c1))`.
pub fn symmetric_curve_distance(c1: &[Vec<f64>], c2: &[Vec<f64>]) -> f64 {
    curve_distance(c1, c2).max(curve_distance(c2, c1))
}
