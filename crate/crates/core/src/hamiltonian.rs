//! Canonical phase space: Legendre transform, Poisson brackets, drift along
//! trajectories, involution and functional independence checks.
//!
//! Brackets use `{F, G} = Σ_i (∂F/∂p_i ∂G/∂x^i − ∂F/∂x^i ∂G/∂p_i)`, so
//! `{p_1, x^1} = 1` and `dF/dt = {H, F}` along the flow of `H`.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dual::{Jet, Scalar};
use crate::error::{check_dim, Error, Result};
use crate::geometry::{MetricField, PhasePoint, Trajectory};
use crate::integrals::{integral_family, painleve_generic, MetricPair, TransferredKilling};
use crate::linalg;

/// Position and momentum `p_i = g_ij ξ^j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanonicalPoint {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
}

pub fn legendre(g: &MetricField, pt: &PhasePoint) -> Result<CanonicalPoint> {
    check_dim(g.dim(), pt.dim())?;
    let (gm, _) = g.cholesky(&pt.x)?;
    Ok(CanonicalPoint {
        x: pt.x.clone(),
        p: linalg::matvec(&gm, &pt.xi),
    })
}

pub fn legendre_inverse(g: &MetricField, cp: &CanonicalPoint) -> Result<PhasePoint> {
    check_dim(g.dim(), cp.x.len())?;
    check_dim(g.dim(), cp.p.len())?;
    let (_, l) = g.cholesky(&cp.x)?;
    Ok(PhasePoint {
        x: cp.x.clone(),
        xi: linalg::chol_solve(&l, &cp.p),
    })
}

/// A scalar function of `(x, ξ)` evaluable on first-order jets, which gives
/// its exact gradient.
pub trait PhaseFunction: Send + Sync {
    fn label(&self) -> String;

    fn eval_jet(&self, x: &[Jet], xi: &[Jet]) -> Result<Jet>;

    fn value(&self, p: &PhasePoint) -> Result<f64> {
        let x: Vec<Jet> = p.x.iter().map(|&v| Jet::constant(v)).collect();
        let xi: Vec<Jet> = p.xi.iter().map(|&v| Jet::constant(v)).collect();
        Ok(self.eval_jet(&x, &xi)?.v)
    }

    /// Value and gradient in `(x, ξ)`, length `2n`.
    fn gradient(&self, p: &PhasePoint) -> Result<(f64, Vec<f64>)> {
        let n = p.dim();
        let x = Jet::seed(&p.x, 0, 2 * n);
        let xi = Jet::seed(&p.xi, n, 2 * n);
        let f = self.eval_jet(&x, &xi)?;
        Ok((f.v, f.gradient(2 * n)))
    }
}

fn npd_at(x: &[Jet]) -> impl Fn(usize) -> Error + '_ {
    move |minor| Error::NotPositiveDefinite {
        point: x.iter().map(|j| j.v).collect(),
        minor,
    }
}

/// `H = ½ g(ξ, ξ)`.
#[derive(Clone, Debug)]
pub struct Hamiltonian(pub MetricField);

impl PhaseFunction for Hamiltonian {
    fn label(&self) -> String {
        "H".into()
    }

    fn eval_jet(&self, x: &[Jet], xi: &[Jet]) -> Result<Jet> {
        let g = self.0.eval(x)?;
        Ok(linalg::bilinear(&g, xi, xi).scale(0.5))
    }
}

/// The integral `I_k` of a metric pair.
#[derive(Clone, Debug)]
pub struct IntegralK {
    pub pair: MetricPair,
    pub k: usize,
}

impl PhaseFunction for IntegralK {
    fn label(&self) -> String {
        format!("I_{}", self.k)
    }

    fn eval_jet(&self, x: &[Jet], xi: &[Jet]) -> Result<Jet> {
        let g = self.pair.g.eval(x)?;
        let gb = self.pair.gbar.eval(x)?;
        let all = integral_family(&g, &gb, xi).map_err(npd_at(x))?;
        all.into_iter()
            .nth(self.k)
            .ok_or_else(|| Error::InvalidArgument(format!("k = {} out of range", self.k)))
    }
}

/// `I_0..I_{n−1}` as phase functions.
pub fn integral_functions(pair: &MetricPair) -> Vec<IntegralK> {
    (0..pair.dim())
        .map(|k| IntegralK { pair: pair.clone(), k })
        .collect()
}

/// `(det g / det ḡ)^{2/(n+1)} ḡ(ξ, ξ)`.
#[derive(Clone, Debug)]
pub struct PainleveIntegral(pub MetricPair);

impl PhaseFunction for PainleveIntegral {
    fn label(&self) -> String {
        "painleve".into()
    }

    fn eval_jet(&self, x: &[Jet], xi: &[Jet]) -> Result<Jet> {
        let g = self.0.g.eval(x)?;
        let gb = self.0.gbar.eval(x)?;
        painleve_generic(&g, &gb, xi).map_err(npd_at(x))
    }
}

impl PhaseFunction for TransferredKilling {
    fn label(&self) -> String {
        "killing".into()
    }

    fn eval_jet(&self, x: &[Jet], xi: &[Jet]) -> Result<Jet> {
        self.eval_generic(x, xi)
    }
}

/// The coordinate function `x^i`.
#[derive(Clone, Copy, Debug)]
pub struct Coordinate(pub usize);

impl PhaseFunction for Coordinate {
    fn label(&self) -> String {
        format!("x{}", self.0 + 1)
    }

    fn eval_jet(&self, x: &[Jet], _xi: &[Jet]) -> Result<Jet> {
        Ok(x[self.0].clone())
    }
}

/// The momentum `p_i = g_ij ξ^j`.
#[derive(Clone, Debug)]
pub struct Momentum {
    pub g: MetricField,
    pub index: usize,
}

impl PhaseFunction for Momentum {
    fn label(&self) -> String {
        format!("p{}", self.index + 1)
    }

    fn eval_jet(&self, x: &[Jet], xi: &[Jet]) -> Result<Jet> {
        let n = xi.len();
        let g = self.g.eval(x)?;
        Ok(linalg::dot(&g[self.index * n..(self.index + 1) * n], xi))
    }
}

/// Pointwise product of two phase functions.
#[derive(Clone)]
pub struct Product(pub Arc<dyn PhaseFunction>, pub Arc<dyn PhaseFunction>);

impl PhaseFunction for Product {
    fn label(&self) -> String {
        format!("({})*({})", self.0.label(), self.1.label())
    }

    fn eval_jet(&self, x: &[Jet], xi: &[Jet]) -> Result<Jet> {
        Ok(self.0.eval_jet(x, xi)? * self.1.eval_jet(x, xi)?)
    }
}

/// Value and gradient in canonical coordinates `(x, p)`, obtained by
/// differentiating through `ξ = g(x)⁻¹ p`.
pub fn canonical_gradient(f: &dyn PhaseFunction, g: &MetricField, pt: &PhasePoint) -> Result<(f64, Vec<f64>)> {
    let n = g.dim();
    let cp = legendre(g, pt)?;
    let x = Jet::seed(&cp.x, 0, 2 * n);
    let p = Jet::seed(&cp.p, n, 2 * n);
    let gm = g.eval(&x)?;
    let l = linalg::cholesky(&gm, n).map_err(npd_at(&x))?;
    let xi = linalg::chol_solve(&l, &p);
    let v = f.eval_jet(&x, &xi)?;
    Ok((v.v, v.gradient(2 * n)))
}

fn bracket_from_gradients(df: &[f64], dg: &[f64]) -> f64 {
    let n = df.len() / 2;
    (0..n).map(|i| df[n + i] * dg[i] - df[i] * dg[n + i]).sum()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// `{F, G}` at a phase point of the cotangent bundle of `g`.
pub fn poisson_bracket(
    f: &dyn PhaseFunction,
    h: &dyn PhaseFunction,
    g: &MetricField,
    pt: &PhasePoint,
) -> Result<f64> {
    let (_, df) = canonical_gradient(f, g, pt)?;
    let (_, dh) = canonical_gradient(h, g, pt)?;
    Ok(bracket_from_gradients(&df, &dh))
}

/// `|{F, G}| / (1 + |dF||dG|)` with canonical gradients.
pub fn normalized_bracket(
    f: &dyn PhaseFunction,
    h: &dyn PhaseFunction,
    g: &MetricField,
    pt: &PhasePoint,
) -> Result<f64> {
    let (_, df) = canonical_gradient(f, g, pt)?;
    let (_, dh) = canonical_gradient(h, g, pt)?;
    Ok(bracket_from_gradients(&df, &dh).abs() / (1.0 + norm(&df) * norm(&dh)))
}

/// Floor for relative drift: a thousandth of `|ξ|·|∂F/∂ξ|` at the start,
/// so functions that vanish at the initial point are still measured on
/// their natural scale.
pub fn drift_floor(f: &dyn PhaseFunction, p0: &PhasePoint) -> Result<f64> {
    let (_, grad) = f.gradient(p0)?;
    let n = p0.dim();
    Ok(1e-3 * norm(&p0.xi) * norm(&grad[n..]))
}

/// `max_t |F(t) − F(0)| / max(|F(0)|, floor)` over the given values.
pub fn relative_drift(values: &[f64], floor: f64) -> f64 {
    let Some(&f0) = values.first() else { return 0.0 };
    let denom = f0.abs().max(floor).max(f64::MIN_POSITIVE);
    values.iter().map(|v| (v - f0).abs()).fold(0.0, f64::max) / denom
}

/// Relative drift of `F` along a trajectory, using [`drift_floor`].
pub fn conservation_drift(f: &dyn PhaseFunction, traj: &Trajectory) -> Result<f64> {
    if traj.is_empty() {
        return Err(Error::InvalidArgument("empty trajectory".into()));
    }
    let values: Vec<f64> = traj.points.iter().map(|p| f.value(p)).collect::<Result<_>>()?;
    let floor = drift_floor(f, traj.first())?;
    Ok(relative_drift(&values, floor))
}

/// Entry `(j, k)`: largest normalized `|{F_j, F_k}|` over the points.
/// Symmetric with an exactly zero diagonal.
pub fn involution_matrix_of(
    funcs: &[&dyn PhaseFunction],
    g: &MetricField,
    points: &[PhasePoint],
) -> Result<Vec<Vec<f64>>> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("need at least one phase point".into()));
    }
    let m = funcs.len();
    let mut out = vec![vec![0.0; m]; m];
    for pt in points {
        let grads: Vec<Vec<f64>> = funcs
            .iter()
            .map(|f| canonical_gradient(*f, g, pt).map(|(_, d)| d))
            .collect::<Result<_>>()?;
        for j in 0..m {
            for k in (j + 1)..m {
                let b = bracket_from_gradients(&grads[j], &grads[k]).abs()
                    / (1.0 + norm(&grads[j]) * norm(&grads[k]));
                if b > out[j][k] {
                    out[j][k] = b;
                    out[k][j] = b;
                }
            }
        }
    }
    Ok(out)
}

/// Involution matrix of `I_0..I_{n−1}`.
pub fn involution_matrix(pair: &MetricPair, points: &[PhasePoint]) -> Result<Vec<Vec<f64>>> {
    let funcs = integral_functions(pair);
    let refs: Vec<&dyn PhaseFunction> = funcs.iter().map(|f| f as &dyn PhaseFunction).collect();
    involution_matrix_of(&refs, &pair.g, points)
}

pub const RANK_TOL: f64 = 1e-8;

/// Numerical rank of the differentials of `funcs` at one point.
pub fn rank_at(funcs: &[&dyn PhaseFunction], pt: &PhasePoint, tol: f64) -> Result<usize> {
    let n = pt.dim();
    let mut rows = Vec::with_capacity(funcs.len() * 2 * n);
    for f in funcs {
        rows.extend(f.gradient(pt)?.1);
    }
    let m = DMatrix::from_row_slice(funcs.len(), 2 * n, &rows);
    let sv = m.singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|&&s| s > tol * smax).count())
}

/// Rank of `(dI_0, …, dI_{n−1})` at each point.
pub fn ranks_per_point(pair: &MetricPair, points: &[PhasePoint]) -> Result<Vec<usize>> {
    let funcs = integral_functions(pair);
    let refs: Vec<&dyn PhaseFunction> = funcs.iter().map(|f| f as &dyn PhaseFunction).collect();
    points.iter().map(|p| rank_at(&refs, p, RANK_TOL)).collect()
}

/// Largest rank of `(dI_0, …, dI_{n−1})` over the points.
pub fn independence_rank(pair: &MetricPair, points: &[PhasePoint]) -> Result<usize> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("need at least one phase point".into()));
    }
    Ok(ranks_per_point(pair, points)?.into_iter().max().unwrap_or(0))
}
