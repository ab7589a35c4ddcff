//! Integrals from the trajectorial map `Φ(x, ξ) = (x, (|ξ|_g/|ξ|_ḡ) ξ)`.
//!
//! `Φ` sends `g`-geodesics to reparametrized `ḡ`-geodesics and the
//! isoenergy surfaces of one flow to those of the other. With `ω` the
//! symplectic form of `g` and `ω̄` that of `ḡ`,
//! `Δ(t) = Pf(Φ*ω̄ − tω)/Pf(ω)` is divisible by `(t − a)` with
//! `a = |ξ|_ḡ/|ξ|_g`, and the coefficients of the quotient are integrals.

mod pfaffian;
mod poly;

use serde::Serialize;

pub use pfaffian::{pfaffian, FormMatrix};
pub use poly::{horner_divide, PolyCoeffs};

use crate::dual::{Jet, Scalar};
use crate::error::{check_dim, Error, Result};
use crate::geometry::{MetricField, PhasePoint, Trajectory};
use crate::hamiltonian::relative_drift;
use crate::integrals::{all_integrals, generalized_eigen, painleve_i0, MetricPair};
use crate::linalg;

/// Form matrix of `−dθ` for `θ = f_i dx^i` given as jets in `(x, ξ)`.
/// Basis order `(x^1..x^n, ξ^1..ξ^n)`.
fn exterior_of_one_form(f: &[Jet], n: usize) -> FormMatrix {
    let mut m = FormMatrix::zeros(2 * n);
    for k in 0..n {
        for i in (k + 1)..n {
            m.set(k, i, f[k].partial(i) - f[i].partial(k));
        }
    }
    for i in 0..n {
        for k in 0..n {
            m.set(i, n + k, f[i].partial(n + k));
        }
    }
    m
}

fn phase_jets(p: &PhasePoint) -> (Vec<Jet>, Vec<Jet>) {
    let n = p.dim();
    (Jet::seed(&p.x, 0, 2 * n), Jet::seed(&p.xi, n, 2 * n))
}

/// The symplectic form `d[g_ij ξ^j dx^i]` at a phase point.
pub fn omega_g_at(g: &MetricField, p: &PhasePoint) -> Result<FormMatrix> {
    check_dim(g.dim(), p.dim())?;
    g.cholesky(&p.x)?;
    let (x, xi) = phase_jets(p);
    let gm = g.eval(&x)?;
    Ok(exterior_of_one_form(&linalg::matvec(&gm, &xi), g.dim()))
}

/// `Φ*ω̄ = d[(|ξ|_g/|ξ|_ḡ) ḡ_ij ξ^j dx^i]` at a phase point.
pub fn pullback_phi_omega(pair: &MetricPair, p: &PhasePoint) -> Result<FormMatrix> {
    check_dim(pair.dim(), p.dim())?;
    p.require_nonzero()?;
    pair.matrices(&p.x)?;
    let (x, xi) = phase_jets(p);
    let g = pair.g.eval(&x)?;
    let gb = pair.gbar.eval(&x)?;
    let gbar_xi = linalg::matvec(&gb, &xi);
    let s = linalg::bilinear(&g, &xi, &xi);
    let q = linalg::dot(&gbar_xi, &xi);
    let r = (s / q).sqrt();
    let f: Vec<Jet> = gbar_xi.into_iter().map(|v| r.clone() * v).collect();
    Ok(exterior_of_one_form(&f, pair.dim()))
}

/// `a = |ξ|_ḡ / |ξ|_g`.
pub fn a_scalar(pair: &MetricPair, p: &PhasePoint) -> Result<f64> {
    check_dim(pair.dim(), p.dim())?;
    p.require_nonzero()?;
    let at = pair.matrices(&p.x)?;
    let s = linalg::bilinear(&at.g, &p.xi, &p.xi);
    let q = linalg::bilinear(&at.gbar, &p.xi, &p.xi);
    Ok((q / s).sqrt())
}

/// Chebyshev nodes on `[−r, r]`.
fn chebyshev_nodes(count: usize, r: f64) -> Vec<f64> {
    (0..count)
        .map(|j| r * ((2 * j + 1) as f64 * std::f64::consts::PI / (2 * count) as f64).cos())
        .collect()
}

/// Coefficients of `Pf(Φ*ω̄ − tω)/Pf(ω)` normalized to a unit leading
/// coefficient, from interpolation at `n + 1` Chebyshev nodes.
pub fn delta_poly(pair: &MetricPair, p: &PhasePoint) -> Result<PolyCoeffs> {
    let n = pair.dim();
    let omega = omega_g_at(&pair.g, p)?;
    let phi = pullback_phi_omega(pair, p)?;
    let a = a_scalar(pair, p)?;
    let pf_omega = omega.pfaffian()?;
    let nodes = chebyshev_nodes(n + 1, 1.0 + a.abs());
    let mut vander = Vec::with_capacity((n + 1) * (n + 1));
    let mut values = Vec::with_capacity(n + 1);
    for &t in &nodes {
        for k in 0..=n {
            vander.push(t.powi((n - k) as i32));
        }
        values.push(phi.sub_scaled(&omega, t).pfaffian()? / pf_omega);
    }
    let coeffs = linalg::lu_solve(&vander, &values)
        .ok_or_else(|| Error::InvalidArgument("singular interpolation system".into()))?;
    let poly = PolyCoeffs::new(coeffs);
    if poly.coeffs[0] == 0.0 {
        return Err(Error::InvalidArgument("vanishing leading coefficient".into()));
    }
    Ok(poly.monic())
}

/// Diagonal-plus-rank-one description of the velocity block of
/// `Φ*ω̄ − tω` in a `g`-orthonormal eigenframe of `g⁻¹ḡ`:
/// `det(diag(t + μ) − A ⊗ B)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankOneData {
    pub mu: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

/// Rank-one data at a phase point, together with the frame `V` (columns,
/// row-major) in which `Vᵀ g V = E` and `Vᵀ ḡ V = diag(ρ)`.
pub fn rank_one_data(pair: &MetricPair, p: &PhasePoint) -> Result<(RankOneData, Vec<f64>)> {
    check_dim(pair.dim(), p.dim())?;
    p.require_nonzero()?;
    let n = pair.dim();
    let at = pair.matrices(&p.x)?;
    let (rho, v) = generalized_eigen(&at);
    // ξ = V ξ', and V⁻¹ = Vᵀ g.
    let g_xi = linalg::matvec(&at.g, &p.xi);
    let xi_f: Vec<f64> = (0..n).map(|i| (0..n).map(|r| v[r * n + i] * g_xi[r]).sum()).collect();
    let s: f64 = xi_f.iter().map(|c| c * c).sum();
    let q: f64 = xi_f.iter().zip(&rho).map(|(c, r)| r * c * c).sum();
    let r = (s / q).sqrt();
    let a_scal = 1.0 / r;
    let data = RankOneData {
        mu: rho.iter().map(|rh| -rh * r).collect(),
        a: rho.iter().zip(&xi_f).map(|(rh, c)| rh * c).collect(),
        b: rho.iter().zip(&xi_f).map(|(rh, c)| (a_scal - rh * r) * c / q).collect(),
    };
    Ok((data, v))
}

/// `Π(t + μ_i) − Σ_i A_i B_i Π_{j≠i}(t + μ_j)`.
pub fn rank_one_delta(d: &RankOneData, t: f64) -> f64 {
    let n = d.mu.len();
    let full: f64 = d.mu.iter().map(|m| t + m).product();
    let mut correction = 0.0;
    for i in 0..n {
        let rest: f64 = (0..n).filter(|&j| j != i).map(|j| t + d.mu[j]).product();
        correction += d.a[i] * d.b[i] * rest;
    }
    full - correction
}

/// The quotient `Δ(t)/(t − a)` and the divisibility witness.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FactoryOutput {
    pub delta: PolyCoeffs,
    pub a: f64,
    pub quotient: PolyCoeffs,
    pub remainder: f64,
}

impl FactoryOutput {
    /// `|remainder| / ‖Δ coefficients‖`.
    pub fn relative_remainder(&self) -> f64 {
        self.remainder.abs() / self.delta.norm()
    }
}

pub fn factory_integrals(pair: &MetricPair, p: &PhasePoint) -> Result<FactoryOutput> {
    let delta = delta_poly(pair, p)?;
    let a = a_scalar(pair, p)?;
    let (quotient, remainder) = horner_divide(&delta, a);
    Ok(FactoryOutput {
        delta,
        a,
        quotient,
        remainder,
    })
}

/// Quotient coefficients predicted from the closed-form integrals.
///
/// In a `g`-orthonormal eigenframe the quotient is
/// `(1/ḡ(ξ,ξ)) Σ_i ρ_i ξ_i² Π_{j≠i}(t − rρ_j)` with `r = |ξ|_g/|ξ|_ḡ`.
/// Expanding against the characteristic coefficients gives, for the
/// descending coefficient `β_m`,
/// `β_m = (−1)ⁿ (g(ξ,ξ)/P)^{m/2} I_m / P`, where `P` is the Painlevé
/// integral `(−1)ⁿ I_0`.
pub fn closed_form_quotient(pair: &MetricPair, p: &PhasePoint) -> Result<Vec<f64>> {
    let n = pair.dim();
    let ints = all_integrals(pair, p)?;
    let big_p = painleve_i0(pair, p)?;
    let s = pair.g.norm_sq(&p.x, &p.xi)?;
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok((0..n)
        .map(|m| sign * (s / big_p).powf(m as f64 / 2.0) * ints[m] / big_p)
        .collect())
}

/// Factory quotient against the closed-form prediction at one point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossCheck {
    pub factory: Vec<f64>,
    pub closed_form: Vec<f64>,
    /// Largest `|difference| / max(1, |factory value|)`.
    pub max_delta: f64,
}

pub fn crosscheck(pair: &MetricPair, p: &PhasePoint) -> Result<CrossCheck> {
    let out = factory_integrals(pair, p)?;
    let closed = closed_form_quotient(pair, p)?;
    let max_delta = out
        .quotient
        .coeffs
        .iter()
        .zip(&closed)
        .map(|(f, c)| (f - c).abs() / f.abs().max(1.0))
        .fold(0.0, f64::max);
    Ok(CrossCheck {
        factory: out.quotient.coeffs,
        closed_form: closed,
        max_delta,
    })
}

/// Relative drift of each quotient coefficient along a trajectory. The
/// floor is a thousandth of the initial coefficient-vector norm.
pub fn factory_drift(pair: &MetricPair, traj: &Trajectory) -> Result<Vec<f64>> {
    let n = pair.dim();
    let mut series: Vec<Vec<f64>> = vec![Vec::with_capacity(traj.len()); n];
    for p in &traj.points {
        let q = factory_integrals(pair, p)?.quotient;
        for (s, c) in series.iter_mut().zip(q.coeffs) {
            s.push(c);
        }
    }
    let floor = 1e-3 * series.iter().map(|s| s[0] * s[0]).sum::<f64>().sqrt();
    Ok(series.iter().map(|s| relative_drift(s, floor)).collect())
}

/// Determinant by partial-pivot elimination, used as an oracle only.
pub fn determinant(a: &[f64], n: usize) -> f64 {
    let mut m = a.to_vec();
    let mut det = 1.0;
    for c in 0..n {
        let piv = (c..n)
            .max_by(|&i, &j| m[i * n + c].abs().total_cmp(&m[j * n + c].abs()))
            .unwrap();
        if m[piv * n + c] == 0.0 {
            return 0.0;
        }
        if piv != c {
            for k in 0..n {
                m.swap(c * n + k, piv * n + k);
            }
            det = -det;
        }
        let d = m[c * n + c];
        det *= d;
        for r in (c + 1)..n {
            let f = m[r * n + c] / d;
            for k in c..n {
                m[r * n + k] -= f * m[c * n + k];
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Chart;
    use std::sync::Arc;

    fn identity_pair() -> MetricPair {
        let chart = Arc::new(Chart::standard(2).unwrap());
        let g = MetricField::parse_matrix(chart, &[vec!["1+x1^2", "0.2*x2"], vec!["0.2*x2", "2"]]).unwrap();
        MetricPair::new(g.clone(), g).unwrap()
    }

    fn pt() -> PhasePoint {
        PhasePoint::new(vec![0.3, 0.4], vec![0.7, -0.2]).unwrap()
    }

    #[test]
    fn euclidean_omega_is_canonical() {
        let e = MetricField::euclidean(Arc::new(Chart::standard(2).unwrap())).unwrap();
        let w = omega_g_at(&e, &pt()).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(w.get(i, j), 0.0);
                assert_eq!(w.get(i, 2 + j), if i == j { 1.0 } else { 0.0 });
                assert_eq!(w.get(2 + i, 2 + j), 0.0);
            }
        }
    }

    #[test]
    fn identity_pair_forms_agree() {
        let pair = identity_pair();
        let w = omega_g_at(&pair.g, &pt()).unwrap();
        let phi = pullback_phi_omega(&pair, &pt()).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((w.get(i, j) - phi.get(i, j)).abs() < 1e-15);
            }
        }
        assert!((a_scalar(&pair, &pt()).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identity_pair_delta() {
        let pair = identity_pair();
        let out = factory_integrals(&pair, &pt()).unwrap();
        let want = PolyCoeffs::binomial_power(1.0, 2);
        for (a, b) in out.delta.coeffs.iter().zip(&want.coeffs) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((out.quotient.coeffs[1] + 1.0).abs() < 1e-12);
        assert!(out.remainder.abs() < 1e-12);
    }

    #[test]
    fn rank_one_base_cases() {
        let d = RankOneData { mu: vec![0.5], a: vec![2.0], b: vec![0.25] };
        assert_eq!(rank_one_delta(&d, 1.0), 1.5 - 0.5);
        let d = RankOneData { mu: vec![1.0, 2.0], a: vec![0.0, 0.0], b: vec![3.0, 4.0] };
        assert_eq!(rank_one_delta(&d, 0.5), 1.5 * 2.5);
    }

    #[test]
    fn determinant_small() {
        assert_eq!(determinant(&[0.0, 1.0, 1.0, 0.0], 2), -1.0);
        assert!((determinant(&[2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0], 3) - 18.0).abs() < 1e-12);
    }
}
