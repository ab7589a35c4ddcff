//! Verification suites over a metric pair: conservation, involution, rank,
//! factory divisibility and geodesic coincidence. Work fans out over the
//! rayon pool; reports are ordered by point and trajectory id.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::catalog::CatalogEntry;
use crate::error::{Error, Result};
use crate::factory::{crosscheck, factory_drift, factory_integrals};
use crate::geometry::{
    arclength_reparam, integrate_geodesic, integrate_geodesic_length, symmetric_curve_distance,
    GeodesicOptions, PhasePoint, ReparamOptions, Trajectory,
};
use crate::hamiltonian::{conservation_drift, integral_functions, involution_matrix, rank_at, PhaseFunction};
use crate::integrals::{all_integrals, eigen_profile, MetricPair, DEFAULT_CLUSTER_TOL};
use crate::sampling::sample_phase_points;

/// Thresholds and sizes shared by every suite.
#[derive(Clone, Debug, Serialize)]
pub struct SuiteOptions {
    pub seed: u64,
    pub trajectories: usize,
    pub points: usize,
    /// Unit-speed geodesics run to this time, i.e. this `g`-arc length.
    pub t_end: f64,
    pub tol_drift: f64,
    pub tol_bracket: f64,
    pub rank_tol: f64,
    pub tol_energy_identity: f64,
    pub tol_remainder: f64,
    pub tol_crosscheck: f64,
    pub tol_coincidence: f64,
    /// Arc-length samples per curve in the coincidence test.
    pub samples: usize,
    #[serde(skip)]
    pub geodesic: GeodesicOptions,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            seed: 0,
            trajectories: 20,
            points: 100,
            t_end: 5.0,
            tol_drift: 1e-6,
            tol_bracket: 1e-8,
            rank_tol: 1e-8,
            tol_energy_identity: 1e-10,
            tol_remainder: 1e-8,
            tol_crosscheck: 1e-8,
            tol_coincidence: 1e-5,
            samples: 2048,
            geodesic: GeodesicOptions::default(),
        }
    }
}

impl SuiteOptions {
    pub fn validate(&self) -> Result<()> {
        if self.trajectories == 0 {
            return Err(Error::Config("trajectory count must be at least 1".into()));
        }
        if self.points == 0 {
            return Err(Error::Config("point count must be at least 1".into()));
        }
        if self.samples < 2 {
            return Err(Error::Config("curve samples must be at least 2".into()));
        }
        let positive = [
            ("t_end", self.t_end),
            ("tol_drift", self.tol_drift),
            ("tol_bracket", self.tol_bracket),
            ("rank_tol", self.rank_tol),
            ("tol_energy_identity", self.tol_energy_identity),
            ("tol_remainder", self.tol_remainder),
            ("tol_crosscheck", self.tol_crosscheck),
            ("tol_coincidence", self.tol_coincidence),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    fn point_seed(&self) -> u64 {
        self.seed.wrapping_add(0x9e37_79b9_7f4a_7c15)
    }
}

fn admissible(entry: &CatalogEntry) -> impl Fn(&[f64]) -> bool + '_ {
    move |x| entry.lc_spec.as_ref().is_none_or(|s| s.phi_values(x).is_ok())
}

/// Starting points of the seeded trajectories.
pub fn trajectory_starts(entry: &CatalogEntry, opts: &SuiteOptions) -> Result<Vec<PhasePoint>> {
    sample_phase_points(&entry.pair, opts.trajectories, opts.seed, &admissible(entry))
}

/// Seeded phase points for pointwise checks.
pub fn sample_points(entry: &CatalogEntry, opts: &SuiteOptions) -> Result<Vec<PhasePoint>> {
    sample_phase_points(&entry.pair, opts.points, opts.point_seed(), &admissible(entry))
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

fn integral_key(k: usize) -> String {
    format!("I_{k}")
}

#[derive(Clone, Debug, Serialize)]
pub struct PointRecord {
    pub point_id: usize,
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    pub integrals: Vec<f64>,
    pub rank: usize,
    pub distinct_eigenvalues: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrajectoryRecord {
    pub trajectory_id: usize,
    pub x0: Vec<f64>,
    pub xi0: Vec<f64>,
    pub steps: usize,
    pub exited_domain: bool,
    pub energy_drift: f64,
    /// Relative drift of each `I_k`.
    pub drift: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub pair_id: String,
    pub seed: u64,
    pub dim: usize,
    pub options: SuiteOptions,
    pub points: Vec<PointRecord>,
    /// Largest normalized bracket of each pair of integrals.
    pub involution: Vec<Vec<f64>>,
    pub involution_max: f64,
    /// Largest relative drift of each integral over all trajectories.
    pub drift: BTreeMap<String, f64>,
    pub trajectories: Vec<TrajectoryRecord>,
    /// Largest `|I_{n−1} + g(ξ,ξ)| / g(ξ,ξ)` over the points.
    pub energy_identity: f64,
    pub rank: usize,
    pub distinct_eigenvalues: usize,
    pub failures: Vec<String>,
    pub passed: bool,
}

/// Conservation, involution, energy identity and independence rank.
pub fn run_verify(entry: &CatalogEntry, opts: &SuiteOptions) -> Result<VerifyReport> {
    opts.validate()?;
    let pair = &entry.pair;
    let n = pair.dim();
    let starts = trajectory_starts(entry, opts)?;
    let funcs = integral_functions(pair);
    let trajectories: Vec<TrajectoryRecord> = starts
        .par_iter()
        .enumerate()
        .map(|(id, p0)| {
            let traj = integrate_geodesic(&pair.g, p0, opts.t_end, &opts.geodesic)?;
            let drift = funcs
                .iter()
                .map(|f| conservation_drift(f, &traj))
                .collect::<Result<Vec<_>>>()?;
            Ok(TrajectoryRecord {
                trajectory_id: id,
                x0: p0.x.clone(),
                xi0: p0.xi.clone(),
                steps: traj.len(),
                exited_domain: traj.exited_domain,
                energy_drift: traj.max_energy_drift,
                drift,
            })
        })
        .collect::<Result<_>>()?;
    let drift: BTreeMap<String, f64> = (0..n)
        .map(|k| (integral_key(k), max_of(trajectories.iter().map(|t| t.drift[k]))))
        .collect();

    let pts = sample_points(entry, opts)?;
    let refs: Vec<&dyn PhaseFunction> = funcs.iter().map(|f| f as &dyn PhaseFunction).collect();
    let points: Vec<PointRecord> = pts
        .par_iter()
        .enumerate()
        .map(|(id, p)| {
            Ok(PointRecord {
                point_id: id,
                x: p.x.clone(),
                xi: p.xi.clone(),
                integrals: all_integrals(pair, p)?,
                rank: rank_at(&refs, p, opts.rank_tol)?,
                distinct_eigenvalues: eigen_profile(pair, &p.x, DEFAULT_CLUSTER_TOL)?.m,
            })
        })
        .collect::<Result<_>>()?;
    let involution = involution_matrix(pair, &pts)?;
    let involution_max = max_of(involution.iter().flatten().copied());
    let energy_identity = max_of(
        pts.iter()
            .zip(&points)
            .map(|(p, rec)| {
                let s = pair.g.norm_sq(&p.x, &p.xi)?;
                Ok((rec.integrals[n - 1] + s).abs() / s)
            })
            .collect::<Result<Vec<f64>>>()?,
    );
    let rank = points.iter().map(|p| p.rank).max().unwrap_or(0);
    let distinct_eigenvalues = points.iter().map(|p| p.distinct_eigenvalues).max().unwrap_or(0);

    let mut failures = Vec::new();
    for (k, v) in &drift {
        if !(*v <= opts.tol_drift) {
            failures.push(format!("conservation: {k} drift {v:.3e} exceeds {:.1e}", opts.tol_drift));
        }
    }
    if !(involution_max <= opts.tol_bracket) {
        failures.push(format!(
            "involution: bracket {involution_max:.3e} exceeds {:.1e}",
            opts.tol_bracket
        ));
    }
    if !(energy_identity <= opts.tol_energy_identity) {
        failures.push(format!(
            "energy identity: {energy_identity:.3e} exceeds {:.1e}",
            opts.tol_energy_identity
        ));
    }
    if rank < distinct_eigenvalues {
        failures.push(format!("independence: rank {rank} below {distinct_eigenvalues}"));
    }
    Ok(VerifyReport {
        pair_id: entry.name.clone(),
        seed: opts.seed,
        dim: n,
        options: opts.clone(),
        points,
        involution,
        involution_max,
        drift,
        trajectories,
        energy_identity,
        rank,
        distinct_eigenvalues,
        passed: failures.is_empty(),
        failures,
    })
}

impl VerifyReport {
    /// Rows `k,point_id,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,point_id,value\n");
        for k in 0..self.dim {
            for p in &self.points {
                out.push_str(&format!("{k},{},{:e}\n", p.point_id, p.integrals[k]));
            }
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FactoryPoint {
    pub point_id: usize,
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    pub a: f64,
    pub delta: Vec<f64>,
    pub quotient: Vec<f64>,
    pub remainder: f64,
    pub relative_remainder: f64,
    pub closed_form: Vec<f64>,
    pub crosscheck_delta: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FactoryReport {
    pub pair_id: String,
    pub seed: u64,
    pub dim: usize,
    pub options: SuiteOptions,
    pub points: Vec<FactoryPoint>,
    pub max_relative_remainder: f64,
    pub max_crosscheck_delta: f64,
    /// Largest relative drift of each quotient coefficient along the
    /// trajectories.
    pub coefficient_drift: Vec<f64>,
    pub failures: Vec<String>,
    pub passed: bool,
}

/// Divisibility, closed-form cross-check and conservation of the quotient.
pub fn run_factory(entry: &CatalogEntry, opts: &SuiteOptions) -> Result<FactoryReport> {
    opts.validate()?;
    let pair = &entry.pair;
    let n = pair.dim();
    let pts = sample_points(entry, opts)?;
    let points: Vec<FactoryPoint> = pts
        .par_iter()
        .enumerate()
        .map(|(id, p)| {
            let out = factory_integrals(pair, p)?;
            let cc = crosscheck(pair, p)?;
            Ok(FactoryPoint {
                point_id: id,
                x: p.x.clone(),
                xi: p.xi.clone(),
                a: out.a,
                relative_remainder: out.relative_remainder(),
                delta: out.delta.coeffs,
                quotient: out.quotient.coeffs,
                remainder: out.remainder,
                closed_form: cc.closed_form,
                crosscheck_delta: cc.max_delta,
            })
        })
        .collect::<Result<_>>()?;
    let starts = trajectory_starts(entry, opts)?;
    let drifts: Vec<Vec<f64>> = starts
        .par_iter()
        .map(|p0| {
            let traj = integrate_geodesic(&pair.g, p0, opts.t_end, &opts.geodesic)?;
            factory_drift(pair, &traj)
        })
        .collect::<Result<_>>()?;
    let coefficient_drift: Vec<f64> = (0..n).map(|j| max_of(drifts.iter().map(|d| d[j]))).collect();
    let max_relative_remainder = max_of(points.iter().map(|p| p.relative_remainder));
    let max_crosscheck_delta = max_of(points.iter().map(|p| p.crosscheck_delta));

    let mut failures = Vec::new();
    if !(max_relative_remainder <= opts.tol_remainder) {
        failures.push(format!(
            "divisibility: remainder {max_relative_remainder:.3e} exceeds {:.1e}",
            opts.tol_remainder
        ));
    }
    if !(max_crosscheck_delta <= opts.tol_crosscheck) {
        failures.push(format!(
            "cross-check: delta {max_crosscheck_delta:.3e} exceeds {:.1e}",
            opts.tol_crosscheck
        ));
    }
    for (j, v) in coefficient_drift.iter().enumerate() {
        if !(*v <= opts.tol_drift) {
            failures.push(format!(
                "conservation: quotient coefficient {j} drift {v:.3e} exceeds {:.1e}",
                opts.tol_drift
            ));
        }
    }
    Ok(FactoryReport {
        pair_id: entry.name.clone(),
        seed: opts.seed,
        dim: n,
        options: opts.clone(),
        points,
        max_relative_remainder,
        max_crosscheck_delta,
        coefficient_drift,
        passed: failures.is_empty(),
        failures,
    })
}

impl FactoryReport {
    /// Rows `point_id,t_or_coeff_index,value,remainder` with one row per
    /// quotient coefficient.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("point_id,t_or_coeff_index,value,remainder\n");
        for p in &self.points {
            for (j, c) in p.quotient.iter().enumerate() {
                out.push_str(&format!("{},{j},{c:e},{:e}\n", p.point_id, p.remainder));
            }
        }
        out
    }
}

/// The `g`- and `ḡ`-geodesics through one phase point, compared as curves.
#[derive(Clone, Debug)]
pub struct CoincidenceRun {
    pub g: Trajectory,
    pub gbar: Trajectory,
    /// `g`-arc length over which the curves were compared.
    pub compared_length: f64,
    pub distance: f64,
}

impl CoincidenceRun {
    pub fn exited_domain(&self) -> bool {
        self.g.exited_domain || self.gbar.exited_domain
    }
}

/// Integrate both flows from `p0` for `g`-arc length `length` and measure
/// the symmetrized distance between the arc-length resampled curves.
pub fn geodesic_coincidence(
    pair: &MetricPair,
    p0: &PhasePoint,
    length: f64,
    samples: usize,
    opts: &GeodesicOptions,
) -> Result<CoincidenceRun> {
    let g = integrate_geodesic_length(&pair.g, p0, &pair.g, length, opts)?;
    let gbar = integrate_geodesic_length(&pair.gbar, p0, &pair.g, length, opts)?;
    let full = ReparamOptions { samples: 2, max_length: None };
    let lg = arclength_reparam(&g, &pair.g, &full)?.length;
    let lb = arclength_reparam(&gbar, &pair.g, &full)?.length;
    let common = lg.min(lb).min(length);
    let ro = ReparamOptions { samples, max_length: Some(common) };
    let cg = arclength_reparam(&g, &pair.g, &ro)?;
    let cb = arclength_reparam(&gbar, &pair.g, &ro)?;
    let distance = symmetric_curve_distance(&cg.points, &cb.points);
    Ok(CoincidenceRun {
        g,
        gbar,
        compared_length: common,
        distance,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CoincidenceRecord {
    pub trajectory_id: usize,
    pub x0: Vec<f64>,
    pub xi0: Vec<f64>,
    pub g_steps: usize,
    pub gbar_steps: usize,
    pub compared_length: f64,
    pub curve_distance: f64,
    pub exited_domain: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GeodesicSummary {
    pub pair_id: String,
    pub seed: u64,
    pub dim: usize,
    pub options: SuiteOptions,
    pub runs: Vec<CoincidenceRecord>,
    pub max_curve_distance: f64,
    pub failures: Vec<String>,
    pub passed: bool,
}

/// Coincidence of `g`- and `ḡ`-geodesics along the seeded directions.
pub fn run_geodesic(entry: &CatalogEntry, opts: &SuiteOptions) -> Result<(GeodesicSummary, Vec<CoincidenceRun>)> {
    opts.validate()?;
    let starts = trajectory_starts(entry, opts)?;
    let mut geo = opts.geodesic.clone();
    if geo.h_max.is_none() {
        geo.h_max = Some(opts.t_end / 500.0);
    }
    let runs: Vec<CoincidenceRun> = starts
        .par_iter()
        .map(|p0| geodesic_coincidence(&entry.pair, p0, opts.t_end, opts.samples, &geo))
        .collect::<Result<_>>()?;
    let records: Vec<CoincidenceRecord> = starts
        .iter()
        .zip(&runs)
        .enumerate()
        .map(|(id, (p0, r))| CoincidenceRecord {
            trajectory_id: id,
            x0: p0.x.clone(),
            xi0: p0.xi.clone(),
            g_steps: r.g.len(),
            gbar_steps: r.gbar.len(),
            compared_length: r.compared_length,
            curve_distance: r.distance,
            exited_domain: r.exited_domain(),
            warning: r.exited_domain().then(|| {
                format!(
                    "left the chart; compared over arc length {:.6} of {}",
                    r.compared_length, opts.t_end
                )
            }),
        })
        .collect();
    let max_curve_distance = max_of(records.iter().map(|r| r.curve_distance));
    let mut failures = Vec::new();
    if !(max_curve_distance <= opts.tol_coincidence) {
        failures.push(format!(
            "coincidence: curve distance {max_curve_distance:.3e} exceeds {:.1e}",
            opts.tol_coincidence
        ));
    }
    Ok((
        GeodesicSummary {
            pair_id: entry.name.clone(),
            seed: opts.seed,
            dim: entry.pair.dim(),
            options: opts.clone(),
            runs: records,
            max_curve_distance,
            passed: failures.is_empty(),
            failures,
        },
        runs,
    ))
}
