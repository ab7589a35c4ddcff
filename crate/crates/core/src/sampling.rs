//! Seeded phase-point sampling: base points uniform in the chart's sampling
//! box, directions uniform on the unit `g`-sphere.

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::SplitMix64;

use crate::error::{Error, Result};
use crate::geometry::{MetricField, PhasePoint};
use crate::integrals::MetricPair;
use crate::linalg;

pub fn rng(seed: u64) -> SplitMix64 {
    SplitMix64::seed_from_u64(seed)
}

/// Uniform point of the sampling box accepted by `accept`.
pub fn sample_base_point(
    pair: &MetricPair,
    rng: &mut SplitMix64,
    accept: &dyn Fn(&[f64]) -> bool,
) -> Result<Vec<f64>> {
    let chart = pair.chart();
    let bx = chart.sampling_box()?;
    for _ in 0..10_000 {
        let x: Vec<f64> = bx.iter().map(|(lo, hi)| rng.random_range(*lo..*hi)).collect();
        if chart.contains(&x) && pair.matrices(&x).is_ok() && accept(&x) {
            return Ok(x);
        }
    }
    Err(Error::InvalidArgument(
        "could not find an admissible base point in the sampling box".into(),
    ))
}

/// Unit vector for `g` at `x`: `ξ = L⁻ᵀ z/|z|` with Gaussian `z`.
pub fn sample_unit_direction(g: &MetricField, x: &[f64], rng: &mut SplitMix64) -> Result<Vec<f64>> {
    let n = g.dim();
    let (_, l) = g.cholesky(x)?;
    loop {
        let z: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-12 {
            continue;
        }
        let u: Vec<f64> = z.iter().map(|v| v / norm).collect();
        // Solve Lᵀ ξ = u.
        let mut xi = u;
        for i in (0..n).rev() {
            let mut s = xi[i];
            for k in (i + 1)..n {
                s -= l[k * n + i] * xi[k];
            }
            xi[i] = s / l[i * n + i];
        }
        debug_assert!((linalg::bilinear(&g.values(x)?, &xi, &xi) - 1.0).abs() < 1e-10);
        return Ok(xi);
    }
}

/// `count` seeded phase points with `g(ξ, ξ) = 1`.
pub fn sample_phase_points(
    pair: &MetricPair,
    count: usize,
    seed: u64,
    accept: &dyn Fn(&[f64]) -> bool,
) -> Result<Vec<PhasePoint>> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let x = sample_base_point(pair, &mut r, accept)?;
            let xi = sample_unit_direction(&pair.g, &x, &mut r)?;
            Ok(PhasePoint { x, xi })
        })
        .collect()
}
