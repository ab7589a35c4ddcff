//! Quadratic integrals of the geodesic flow of `g` induced by a geodesically
//! equivalent metric `ḡ`.
//!
//! With `G = g⁻¹ḡ` and `det(G − μE) = c_0 μⁿ + … + c_n` (so `c_0 = (−1)ⁿ`),
//! `S_k = Σ_{i≤k} c_i G^{k−i}` and
//!
//! ```text
//! I_k(x, ξ) = (det g / det ḡ)^{(k+2)/(n+1)} ḡ(S_k ξ, ξ),   k = 0..n−1.
//! ```

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::dsl::Expression;
use crate::dual::Scalar;
use crate::error::{check_dim, Error, Result};
use crate::geometry::{Chart, MetricField, PhasePoint};
use crate::linalg;

/// Two metrics on one chart.
#[derive(Clone, Debug)]
pub struct MetricPair {
    pub g: MetricField,
    pub gbar: MetricField,
}

impl MetricPair {
    pub fn new(g: MetricField, gbar: MetricField) -> Result<Self> {
        let same = Arc::ptr_eq(g.chart(), gbar.chart()) || g.chart().names() == gbar.chart().names();
        if !same {
            return Err(Error::InvalidArgument("metrics live on different charts".into()));
        }
        Ok(MetricPair { g, gbar })
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.g.chart()
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    /// The pair with the roles of the metrics exchanged.
    pub fn swapped(&self) -> MetricPair {
        MetricPair {
            g: self.gbar.clone(),
            gbar: self.g.clone(),
        }
    }

    /// Both metrics at `x`, with their Cholesky factors.
    pub fn matrices(&self, x: &[f64]) -> Result<PairAt> {
        let (g, lg) = self.g.cholesky(x)?;
        let (gbar, lb) = self.gbar.cholesky(x)?;
        Ok(PairAt {
            n: self.dim(),
            g,
            gbar,
            lg,
            lb,
        })
    }
}

/// Metric values and Cholesky factors of a pair at one point.
#[derive(Clone, Debug)]
pub struct PairAt {
    pub n: usize,
    pub g: Vec<f64>,
    pub gbar: Vec<f64>,
    pub lg: Vec<f64>,
    pub lb: Vec<f64>,
}

impl PairAt {
    /// `log det g − log det ḡ`.
    pub fn log_det_ratio(&self) -> f64 {
        linalg::chol_logdet(&self.lg, self.n) - linalg::chol_logdet(&self.lb, self.n)
    }
}

/// Coefficients of `det(G − μE)` in descending powers of `μ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CharCoeffs {
    pub c: Vec<f64>,
}

/// Sorted common eigenvalues and their clustering.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenProfile {
    pub values: Vec<f64>,
    pub m: usize,
    pub multiplicities: Vec<usize>,
    pub strictly_nonproportional: bool,
}

pub const DEFAULT_CLUSTER_TOL: f64 = 1e-8;

/// `G = g⁻¹ḡ` at `x`, row-major.
pub fn g_operator(pair: &MetricPair, x: &[f64]) -> Result<Vec<f64>> {
    let at = pair.matrices(x)?;
    Ok(linalg::chol_solve_matrix(&at.lg, &at.gbar, at.n))
}

/// Characteristic coefficients by the Faddeev–LeVerrier recurrence.
pub fn char_coeffs(g_op: &[f64], n: usize) -> Result<CharCoeffs> {
    check_dim(n * n, g_op.len())?;
    Ok(CharCoeffs {
        c: linalg::faddeev_leverrier(g_op, n),
    })
}

/// `S_k`, accumulated as `((c_0 G + c_1 E) G + c_2 E) …`.
pub fn s_matrix(pair: &MetricPair, x: &[f64], k: usize) -> Result<Vec<f64>> {
    let n = pair.dim();
    if k >= n {
        return Err(Error::InvalidArgument(format!("k = {k} must be below n = {n}")));
    }
    let g_op = g_operator(pair, x)?;
    let c = char_coeffs(&g_op, n)?.c;
    let mut s = linalg::identity::<f64>(n);
    s.iter_mut().for_each(|v| *v *= c[0]);
    for ci in c.iter().take(k + 1).skip(1) {
        s = linalg::matmul(&s, &g_op, n);
        for i in 0..n {
            s[i * n + i] += ci;
        }
    }
    Ok(s)
}

/// All `I_0..I_{n−1}` from metric matrices over any scalar carrier.
/// Fails with the 1-based leading minor when a matrix is not positive
/// definite.
pub(crate) fn integral_family<T: Scalar>(g: &[T], gbar: &[T], xi: &[T]) -> std::result::Result<Vec<T>, usize> {
    let n = xi.len();
    let lg = linalg::cholesky(g, n)?;
    let lb = linalg::cholesky(gbar, n)?;
    let log_ratio = linalg::chol_logdet(&lg, n) - linalg::chol_logdet(&lb, n);
    let g_op = linalg::chol_solve_matrix(&lg, gbar, n);
    let c = linalg::faddeev_leverrier(&g_op, n);
    let gbar_xi = linalg::matvec(gbar, xi);
    let mut v: Vec<T> = xi.iter().map(|x| x.scale(c[0].value())).collect();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        if k > 0 {
            let gv = linalg::matvec(&g_op, &v);
            v = gv
                .into_iter()
                .zip(xi)
                .map(|(a, b)| a + c[k].clone() * b.clone())
                .collect();
        }
        let power = log_ratio.scale((k + 2) as f64 / (n + 1) as f64).exp();
        out.push(power * linalg::dot(&gbar_xi, &v));
    }
    Ok(out)
}

/// `(det g / det ḡ)^{2/(n+1)} ḡ(ξ, ξ)` over any scalar carrier.
pub(crate) fn painleve_generic<T: Scalar>(g: &[T], gbar: &[T], xi: &[T]) -> std::result::Result<T, usize> {
    let n = xi.len();
    let lg = linalg::cholesky(g, n)?;
    let lb = linalg::cholesky(gbar, n)?;
    let log_ratio = linalg::chol_logdet(&lg, n) - linalg::chol_logdet(&lb, n);
    Ok(log_ratio.scale(2.0 / (n + 1) as f64).exp() * linalg::bilinear(gbar, xi, xi))
}

fn checked_point(pair: &MetricPair, p: &PhasePoint) -> Result<PairAt> {
    check_dim(pair.dim(), p.dim())?;
    p.require_nonzero()?;
    pair.matrices(&p.x)
}

/// `I_k(x, ξ)`.
pub fn integral_ik(pair: &MetricPair, p: &PhasePoint, k: usize) -> Result<f64> {
    let n = pair.dim();
    if k >= n {
        return Err(Error::InvalidArgument(format!("k = {k} must be below n = {n}")));
    }
    Ok(all_integrals(pair, p)?[k])
}

/// `I_0..I_{n−1}` at one phase point.
pub fn all_integrals(pair: &MetricPair, p: &PhasePoint) -> Result<Vec<f64>> {
    let at = checked_point(pair, p)?;
    integral_family(&at.g, &at.gbar, &p.xi).map_err(|minor| Error::NotPositiveDefinite {
        point: p.x.clone(),
        minor,
    })
}

/// `(det g / det ḡ)^{2/(n+1)} ḡ(ξ, ξ)`; equals `(−1)ⁿ I_0`.
pub fn painleve_i0(pair: &MetricPair, p: &PhasePoint) -> Result<f64> {
    let at = checked_point(pair, p)?;
    painleve_generic(&at.g, &at.gbar, &p.xi).map_err(|minor| Error::NotPositiveDefinite {
        point: p.x.clone(),
        minor,
    })
}

/// Eigenvalues of `G` with a `g`-orthonormal eigenbasis: columns of `v`
/// satisfy `vᵀ g v = E` and `vᵀ ḡ v = diag(values)`. Values ascend.
pub(crate) fn generalized_eigen(at: &PairAt) -> (Vec<f64>, Vec<f64>) {
    let n = at.n;
    let l = DMatrix::from_row_slice(n, n, &at.lg);
    let gbar = DMatrix::from_row_slice(n, n, &at.gbar);
    let linv = l
        .clone()
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .expect("Cholesky factor has a positive diagonal");
    let mut c = &linv * gbar * linv.transpose();
    c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = linv.transpose() * &eig.eigenvectors;
    let mut v = vec![0.0; n * n];
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            v[row * n + col] = vecs[(row, src)];
        }
    }
    (values, v)
}

/// Cluster the sorted eigenvalues of `G`; neighbours closer than
/// `tol·(1 + |ρ|)` merge.
pub fn eigen_profile(pair: &MetricPair, x: &[f64], tol: f64) -> Result<EigenProfile> {
    let at = pair.matrices(x)?;
    let (values, _) = generalized_eigen(&at);
    let mut multiplicities = vec![1];
    for w in values.windows(2) {
        if (w[1] - w[0]).abs() < tol * (1.0 + w[1].abs()) {
            *multiplicities.last_mut().unwrap() += 1;
        } else {
            multiplicities.push(1);
        }
    }
    let m = multiplicities.len();
    Ok(EigenProfile {
        strictly_nonproportional: m == values.len(),
        values,
        m,
        multiplicities,
    })
}

/// Linear integral of the `g`-flow obtained from a linear integral
/// `Σ a_i(x) ξ^i` of the `ḡ`-flow:
/// `(det g / det ḡ)^{1/(n+1)} Σ a_i(x) ξ^i`.
#[derive(Clone, Debug)]
pub struct TransferredKilling {
    pub pair: MetricPair,
    pub covector: Vec<Expression>,
}

pub fn transfer_killing(pair: &MetricPair, covector: Vec<Expression>) -> Result<TransferredKilling> {
    check_dim(pair.dim(), covector.len())?;
    Ok(TransferredKilling {
        pair: pair.clone(),
        covector,
    })
}

impl TransferredKilling {
    pub(crate) fn eval_generic<T: Scalar>(&self, x: &[T], xi: &[T]) -> Result<T> {
        let n = self.pair.dim();
        let point = || x.iter().map(Scalar::value).collect::<Vec<f64>>();
        let g = self.pair.g.eval(x)?;
        let gbar = self.pair.gbar.eval(x)?;
        let npd = |minor| Error::NotPositiveDefinite { point: point(), minor };
        let lg = linalg::cholesky(&g, n).map_err(npd)?;
        let lb = linalg::cholesky(&gbar, n).map_err(npd)?;
        let log_ratio = linalg::chol_logdet(&lg, n) - linalg::chol_logdet(&lb, n);
        let a: Vec<T> = self
            .covector
            .iter()
            .map(|e| e.eval(x))
            .collect::<std::result::Result<_, _>>()?;
        Ok(log_ratio.scale(1.0 / (n + 1) as f64).exp() * linalg::dot(&a, xi))
    }

    pub fn value(&self, p: &PhasePoint) -> Result<f64> {
        self.pair.chart().require(&p.x)?;
        self.eval_generic(&p.x, &p.xi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(g: [&str; 4], gb: [&str; 4]) -> MetricPair {
        let chart = Arc::new(Chart::standard(2).unwrap());
        let m = |e: [&str; 4]| {
            MetricField::parse_matrix(chart.clone(), &[vec![e[0], e[1]], vec![e[2], e[3]]]).unwrap()
        };
        MetricPair::new(m(g), m(gb)).unwrap()
    }

    #[test]
    fn operator_examples() {
        let p = pair(["1", "0", "0", "1"], ["2", "0", "0", "3"]);
        assert_eq!(g_operator(&p, &[0.0, 0.0]).unwrap(), vec![2.0, 0.0, 0.0, 3.0]);
        let same = pair(["2+x1^2", "x2", "x2", "3"], ["2+x1^2", "x2", "x2", "3"]);
        let g = g_operator(&same, &[0.5, 0.2]).unwrap();
        for (a, b) in g.iter().zip(linalg::identity::<f64>(2)) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn s_matrix_identity_pair() {
        let same = pair(["1", "0", "0", "1"], ["1", "0", "0", "1"]);
        assert_eq!(s_matrix(&same, &[0.0, 0.0], 1).unwrap(), vec![-1.0, 0.0, 0.0, -1.0]);
        assert_eq!(s_matrix(&same, &[0.0, 0.0], 0).unwrap(), vec![1.0, 0.0, 0.0, 1.0]);
        assert!(s_matrix(&same, &[0.0, 0.0], 2).is_err());
    }

    #[test]
    fn scaled_pair_i0() {
        let p = pair(["1", "0", "0", "1"], ["2", "0", "0", "2"]);
        let pt = PhasePoint::new(vec![0.0, 0.0], vec![0.6, -0.8]).unwrap();
        let want = 0.25f64.powf(2.0 / 3.0) * 2.0;
        assert!((integral_ik(&p, &pt, 0).unwrap() - want).abs() < 1e-14);
        assert!((integral_ik(&p, &pt, 0).unwrap() - painleve_i0(&p, &pt).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn zero_tangent_rejected() {
        let p = pair(["1", "0", "0", "1"], ["2", "0", "0", "2"]);
        let pt = PhasePoint::new(vec![0.0, 0.0], vec![0.0, 0.0]).unwrap();
        assert!(matches!(integral_ik(&p, &pt, 0), Err(Error::ZeroTangent)));
    }

    #[test]
    fn profile_clusters() {
        let chart = Arc::new(Chart::standard(3).unwrap());
        let g = MetricField::euclidean(chart.clone()).unwrap();
        let gb = MetricField::parse_matrix(
            chart,
            &[vec!["1", "0", "0"], vec!["0", "1", "0"], vec!["0", "0", "4"]],
        )
        .unwrap();
        let prof = eigen_profile(&MetricPair::new(g, gb).unwrap(), &[0.0; 3], 1e-8).unwrap();
        assert_eq!(prof.m, 2);
        assert_eq!(prof.multiplicities, vec![2, 1]);
        assert!(!prof.strictly_nonproportional);
    }

    #[test]
    fn generalized_frame() {
        let p = pair(["2", "0.3", "0.3", "1"], ["1", "-0.2", "-0.2", "3"]);
        let at = p.matrices(&[0.0, 0.0]).unwrap();
        let (vals, v) = generalized_eigen(&at);
        let vt = |m: &[f64]| {
            let mut out = vec![0.0; 4];
            for i in 0..2 {
                for j in 0..2 {
                    for a in 0..2 {
                        for b in 0..2 {
                            out[i * 2 + j] += v[a * 2 + i] * m[a * 2 + b] * v[b * 2 + j];
                        }
                    }
                }
            }
            out
        };
        let eg = vt(&at.g);
        let eb = vt(&at.gbar);
        for i in 0..2 {
            for j in 0..2 {
                let id = if i == j { 1.0 } else { 0.0 };
                assert!((eg[i * 2 + j] - id).abs() < 1e-12);
                assert!((eb[i * 2 + j] - id * vals[i]).abs() < 1e-12);
            }
        }
        assert!(vals[0] < vals[1]);
    }
}
