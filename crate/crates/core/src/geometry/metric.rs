use std::sync::Arc;

use crate::dsl::Expression;
use crate::dual::{Dual2, Jet, Scalar};
use crate::error::{check_dim, Error, Result};
use crate::geometry::Chart;
use crate::linalg;

/// A Riemannian metric on a chart: a symmetric matrix of expressions,
/// stored as its upper triangle.
#[derive(Clone, Debug)]
pub struct MetricField {
    chart: Arc<Chart>,
    upper: Vec<Expression>,
}

/// Metric entries with first and second derivatives at a point, plus the
/// Cholesky factor of the value matrix.
#[derive(Clone, Debug)]
pub struct MetricAt {
    pub n: usize,
    /// Row-major `n × n`, symmetric by construction.
    pub entries: Vec<Dual2>,
    /// Lower Cholesky factor of the value matrix.
    pub cholesky: Vec<f64>,
}

impl MetricAt {
    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|d| d.value).collect()
    }
}

/// Christoffel symbols `Γ^k_{ij}` stored as `[k][i][j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Christoffel {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Christoffel {
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.n + i) * self.n + j]
    }

    /// `Γ^k_{ij} v^i v^j` for every `k`.
    pub fn contract(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|k| {
                let mut acc = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        acc += self.get(k, i, j) * v[i] * v[j];
                    }
                }
                acc
            })
            .collect()
    }
}

fn upper_len(n: usize) -> usize {
    n * (n + 1) / 2
}

impl MetricField {
    pub fn new(chart: Arc<Chart>, upper: Vec<Expression>) -> Result<Self> {
        let n = chart.dim();
        check_dim(upper_len(n), upper.len())?;
        for e in &upper {
            if let Some(&i) = e.variables().iter().next_back() {
                if i >= n {
                    return Err(Error::InvalidArgument(format!(
                        "expression `{e}` references coordinate {i} outside the chart"
                    )));
                }
            }
        }
        Ok(MetricField { chart, upper })
    }

    /// Build from a closure evaluated on the upper triangle `i <= j`.
    pub fn from_fn(chart: Arc<Chart>, mut f: impl FnMut(usize, usize) -> Expression) -> Result<Self> {
        let n = chart.dim();
        let mut upper = Vec::with_capacity(upper_len(n));
        for i in 0..n {
            for j in i..n {
                upper.push(f(i, j));
            }
        }
        MetricField::new(chart, upper)
    }

    pub fn diagonal(chart: Arc<Chart>, diag: Vec<Expression>) -> Result<Self> {
        check_dim(chart.dim(), diag.len())?;
        MetricField::from_fn(chart, |i, j| {
            if i == j {
                diag[i].clone()
            } else {
                Expression::num(0.0)
            }
        })
    }

    /// Parse a full matrix of entry strings. Mirrored entries must parse to
    /// the same expression.
    pub fn parse_matrix<S: AsRef<str>>(chart: Arc<Chart>, rows: &[Vec<S>]) -> Result<Self> {
        let n = chart.dim();
        check_dim(n, rows.len())?;
        for r in rows {
            check_dim(n, r.len())?;
        }
        let mut upper = Vec::with_capacity(upper_len(n));
        for i in 0..n {
            for j in i..n {
                let e = chart.parse(rows[i][j].as_ref())?;
                if i != j {
                    let m = chart.parse(rows[j][i].as_ref())?;
                    if m != e {
                        return Err(Error::InvalidArgument(format!(
                            "metric entries ({i},{j}) and ({j},{i}) differ"
                        )));
                    }
                }
                upper.push(e);
            }
        }
        MetricField::new(chart, upper)
    }

    /// Euclidean metric on the chart.
    pub fn euclidean(chart: Arc<Chart>) -> Result<Self> {
        let n = chart.dim();
        MetricField::diagonal(chart, vec![Expression::num(1.0); n])
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn entry(&self, i: usize, j: usize) -> &Expression {
        &self.upper[self.upper_index(i, j)]
    }

    /// Metric with every entry multiplied by `factor`.
    pub fn scaled(&self, factor: &Expression) -> Result<Self> {
        let upper = self.upper.iter().map(|e| factor.clone() * e.clone()).collect();
        MetricField::new(self.chart.clone(), upper)
    }

    /// Full matrix evaluated over an arbitrary scalar carrier. No domain or
    /// definiteness checks.
    pub fn eval<T: Scalar>(&self, x: &[T]) -> Result<Vec<T>> {
        let n = self.dim();
        check_dim(n, x.len())?;
        let vals: Vec<T> = self
            .upper
            .iter()
            .map(|e| e.eval(x))
            .collect::<Result<_, _>>()?;
        let mut full = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                full.push(vals[self.upper_index(i, j)].clone());
            }
        }
        Ok(full)
    }

    fn upper_index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let n = self.dim();
        i * n - i * (i + 1) / 2 + j
    }

    /// Matrix values at `x`.
    pub fn values(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.eval(x)
    }

    fn factor(&self, x: &[f64], g: &[f64]) -> Result<Vec<f64>> {
        linalg::cholesky(g, self.dim()).map_err(|minor| Error::NotPositiveDefinite {
            point: x.to_vec(),
            minor,
        })
    }

    /// Values and Cholesky factor at a point of the domain.
    pub fn cholesky(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.chart.require(x)?;
        let g = self.values(x)?;
        let l = self.factor(x, &g)?;
        Ok((g, l))
    }

    pub fn metric_at(&self, x: &[f64]) -> Result<MetricAt> {
        self.chart.require(x)?;
        let n = self.dim();
        let vals: Vec<Dual2> = self
            .upper
            .iter()
            .map(|e| e.eval2(x))
            .collect::<Result<_, _>>()?;
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(vals[self.upper_index(i, j)].clone());
            }
        }
        let g: Vec<f64> = entries.iter().map(|d| d.value).collect();
        let cholesky = self.factor(x, &g)?;
        Ok(MetricAt { n, entries, cholesky })
    }

    /// `g_x(v, w)`.
    pub fn inner(&self, x: &[f64], v: &[f64], w: &[f64]) -> Result<f64> {
        check_dim(self.dim(), v.len())?;
        let g = self.values(x)?;
        Ok(linalg::bilinear(&g, v, w))
    }

    pub fn norm_sq(&self, x: &[f64], v: &[f64]) -> Result<f64> {
        self.inner(x, v, v)
    }

    /// Christoffel symbols of the second kind,
    /// `Γ^k_{ij} = ½ g^{kl}(∂_i g_{jl} + ∂_j g_{il} − ∂_l g_{ij})`.
    pub fn christoffel(&self, x: &[f64]) -> Result<Christoffel> {
        self.chart.require(x)?;
        let n = self.dim();
        let jets = self.eval(&Jet::seed(x, 0, n))?;
        let g: Vec<f64> = jets.iter().map(|j| j.v).collect();
        let l = self.factor(x, &g)?;
        let ginv = linalg::chol_solve_matrix(&l, &linalg::identity::<f64>(n), n);
        // dg[(a*n + b)*n + c] = ∂_c g_ab
        let dg = |a: usize, b: usize, c: usize| jets[a * n + b].partial(c);
        let mut first = vec![0.0; n * n * n]; // [l][i][j]
        for l_ in 0..n {
            for i in 0..n {
                for j in i..n {
                    let v = 0.5 * (dg(j, l_, i) + dg(i, l_, j) - dg(i, j, l_));
                    first[(l_ * n + i) * n + j] = v;
                    first[(l_ * n + j) * n + i] = v;
                }
            }
        }
        let mut data = vec![0.0; n * n * n];
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let mut acc = 0.0;
                    for l_ in 0..n {
                        acc += ginv[k * n + l_] * first[(l_ * n + i) * n + j];
                    }
                    data[(k * n + i) * n + j] = acc;
                    data[(k * n + j) * n + i] = acc;
                }
            }
        }
        Ok(Christoffel { n, data })
    }

    /// Check definiteness at each point; returns the first failure.
    pub fn check_positive_definite(&self, points: &[Vec<f64>]) -> Result<()> {
        for x in points {
            self.cholesky(x)?;
        }
        Ok(())
    }

    /// Entry strings keyed `g[i][j]` (1-based) for the upper triangle.
    pub fn entry_strings(&self) -> Vec<(usize, usize, String)> {
        let n = self.dim();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i..n {
                out.push((i, j, self.entry(i, j).to_string()));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart2() -> Arc<Chart> {
        Arc::new(Chart::standard(2).unwrap())
    }

    #[test]
    fn entries_are_symmetric_lookups() {
        let chart = Arc::new(Chart::standard(3).unwrap());
        let m = MetricField::from_fn(chart, |i, j| Expression::num((10 * i + j) as f64)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let (a, b) = if i <= j { (i, j) } else { (j, i) };
                assert_eq!(m.entry(i, j), &Expression::num((10 * a + b) as f64));
            }
        }
    }

    #[test]
    fn euclidean_metric_at() {
        let m = MetricField::parse_matrix(chart2(), &[vec!["1", "0"], vec!["0", "1"]]).unwrap();
        let at = m.metric_at(&[0.3, -2.0]).unwrap();
        assert_eq!(at.values(), vec![1.0, 0.0, 0.0, 1.0]);
        assert!(at.entries.iter().all(|d| d.grad.iter().all(|&g| g == 0.0)));
        assert_eq!(at.cholesky, vec![1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn exponential_metric_gradient() {
        let m = MetricField::parse_matrix(
            chart2(),
            &[vec!["exp(2*x1)", "0"], vec!["0", "exp(2*x1)"]],
        )
        .unwrap();
        let at = m.metric_at(&[0.0, 0.0]).unwrap();
        assert_eq!(at.values(), vec![1.0, 0.0, 0.0, 1.0]);
        assert_eq!(at.entries[0].grad, vec![2.0, 0.0]);
    }

    #[test]
    fn indefinite_metric_rejected() {
        let m = MetricField::parse_matrix(chart2(), &[vec!["1", "0"], vec!["0", "-0.5"]]).unwrap();
        match m.metric_at(&[0.0, 0.0]) {
            Err(Error::NotPositiveDefinite { minor, .. }) => assert_eq!(minor, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn asymmetric_strings_rejected() {
        assert!(MetricField::parse_matrix(chart2(), &[vec!["1", "x1"], vec!["x2", "1"]]).is_err());
    }

    #[test]
    fn christoffel_polar() {
        let m = MetricField::parse_matrix(chart2(), &[vec!["1", "0"], vec!["0", "x1^2"]]).unwrap();
        let gamma = m.christoffel(&[2.0, 0.3]).unwrap();
        assert!((gamma.get(0, 1, 1) + 2.0).abs() < 1e-14);
        assert!((gamma.get(1, 0, 1) - 0.5).abs() < 1e-14);
        assert_eq!(gamma.get(1, 0, 1), gamma.get(1, 1, 0));
        assert_eq!(gamma.get(0, 0, 0), 0.0);
    }

    #[test]
    fn christoffel_sphere() {
        let m = MetricField::parse_matrix(chart2(), &[vec!["1", "0"], vec!["0", "sin(x1)^2"]]).unwrap();
        let gamma = m.christoffel(&[std::f64::consts::FRAC_PI_4, 1.0]).unwrap();
        assert!((gamma.get(0, 1, 1) + 0.5).abs() < 1e-14);
        assert!((gamma.get(1, 0, 1) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn christoffel_flat_is_zero() {
        let m = MetricField::euclidean(chart2()).unwrap();
        assert!(m.christoffel(&[1.0, 2.0]).unwrap().data.iter().all(|&v| v == 0.0));
    }
}
