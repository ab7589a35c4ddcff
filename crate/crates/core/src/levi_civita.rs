//! Geodesically equivalent pairs in Levi-Civita normal form.
//!
//! Coordinates split into blocks `x̄_1, …, x̄_m` of sizes `k_1..k_m`. Each
//! block carries a positive definite form `A_i(x̄_i)` and a weight `φ_i`,
//! constant when `k_i > 1` and a function of the single coordinate
//! otherwise, with `0 < φ_1 < … < φ_m`. Then
//!
//! ```text
//! g = Σ Π_i A_i,   ḡ = Σ ρ^i Π_i A_i,   ρ^i = 1/(φ_1⋯φ_m φ_i),
//! Π_i = Π_{j<i}(φ_i − φ_j) · Π_{j>i}(φ_j − φ_i).
//! ```

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::config::{entry_key, upper_from_entries, EntryMap, PairConfig};
use crate::dsl::Expression;
use crate::dual::{Jet, Scalar};
use crate::error::{check_dim, Error, Result};
use crate::geometry::{Chart, ChartConfig, MetricField, PhasePoint};
use crate::hamiltonian::PhaseFunction;
use crate::integrals::MetricPair;
use crate::linalg;

/// Block weight.
#[derive(Clone, Debug, PartialEq)]
pub enum Phi {
    Constant(f64),
    /// Function of the block's only coordinate.
    Function(Expression),
}

impl Phi {
    pub fn expression(&self) -> Expression {
        match self {
            Phi::Constant(c) => Expression::num(*c),
            Phi::Function(e) => e.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct LcSpec {
    chart: Arc<Chart>,
    sizes: Vec<usize>,
    phi: Vec<Phi>,
    /// Upper triangles of the block forms, in global coordinate indices.
    blocks: Vec<Vec<Expression>>,
}

fn upper_len(k: usize) -> usize {
    k * (k + 1) / 2
}

fn upper_index(k: usize, a: usize, b: usize) -> usize {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    a * k - a * (a + 1) / 2 + b
}

impl LcSpec {
    pub fn new(chart: Arc<Chart>, sizes: Vec<usize>, phi: Vec<Phi>, blocks: Vec<Vec<Expression>>) -> Result<Self> {
        let m = sizes.len();
        if m == 0 || sizes.contains(&0) {
            return Err(Error::InvalidArgument("block sizes must be positive".into()));
        }
        check_dim(chart.dim(), sizes.iter().sum())?;
        check_dim(m, phi.len())?;
        check_dim(m, blocks.len())?;
        let spec = LcSpec { chart, sizes, phi, blocks };
        for i in 0..m {
            let range = spec.block_range(i);
            match &spec.phi[i] {
                Phi::Constant(c) => {
                    if !(*c > 0.0) {
                        return Err(Error::InvalidArgument(format!("phi_{} must be positive", i + 1)));
                    }
                }
                Phi::Function(e) => {
                    if spec.sizes[i] > 1 {
                        return Err(Error::InvalidArgument(format!(
                            "phi_{} must be constant on a block of size {}",
                            i + 1,
                            spec.sizes[i]
                        )));
                    }
                    if e.variables().iter().any(|&v| v != range.start) {
                        return Err(Error::InvalidArgument(format!(
                            "phi_{} may depend only on its block coordinate",
                            i + 1
                        )));
                    }
                }
            }
            check_dim(upper_len(spec.sizes[i]), spec.blocks[i].len())?;
            for e in &spec.blocks[i] {
                if e.variables().iter().any(|v| !range.contains(v)) {
                    return Err(Error::InvalidArgument(format!(
                        "block {} form may depend only on its own coordinates",
                        i + 1
                    )));
                }
            }
        }
        Ok(spec)
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn m(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn phi(&self) -> &[Phi] {
        &self.phi
    }

    pub fn block_range(&self, i: usize) -> std::ops::Range<usize> {
        let start: usize = self.sizes[..i].iter().sum();
        start..start + self.sizes[i]
    }

    pub fn block_entry(&self, i: usize, a: usize, b: usize) -> &Expression {
        &self.blocks[i][upper_index(self.sizes[i], a, b)]
    }

    fn phi_exprs(&self) -> Vec<Expression> {
        self.phi.iter().map(Phi::expression).collect()
    }

    /// `Π_i` as expressions.
    pub fn pi_expressions(&self) -> Vec<Expression> {
        let phi = self.phi_exprs();
        let m = self.m();
        (0..m)
            .map(|i| {
                Expression::product(
                    (0..m)
                        .filter(|&j| j != i)
                        .map(|j| if j < i { phi[i].clone() - phi[j].clone() } else { phi[j].clone() - phi[i].clone() }),
                )
            })
            .collect()
    }

    /// `ρ^i = 1/(φ_1⋯φ_m φ_i)` as expressions.
    pub fn rho_expressions(&self) -> Vec<Expression> {
        let phi = self.phi_exprs();
        let prod = Expression::product(phi.iter().cloned());
        phi.iter()
            .map(|p| Expression::num(1.0) / (prod.clone() * p.clone()))
            .collect()
    }

    /// Block-diagonal metric `Σ w_i Π_i A_i`.
    fn weighted_metric(&self, weights: &[Expression]) -> Result<MetricField> {
        let n = self.dim();
        let pis = self.pi_expressions();
        let mut owner = vec![0; n];
        for i in 0..self.m() {
            for c in self.block_range(i) {
                owner[c] = i;
            }
        }
        MetricField::from_fn(self.chart.clone(), |r, c| {
            let i = owner[r];
            if owner[c] != i {
                return Expression::num(0.0);
            }
            let start = self.block_range(i).start;
            weights[i].clone() * pis[i].clone() * self.block_entry(i, r - start, c - start).clone()
        })
    }

    /// The pair `(g, ḡ)` of the normal form.
    pub fn build_pair(&self) -> Result<MetricPair> {
        let one = vec![Expression::num(1.0); self.m()];
        let g = self.weighted_metric(&one)?;
        let gbar = self.weighted_metric(&self.rho_expressions())?;
        MetricPair::new(g, gbar)
    }

    /// `g_c = (1/Π(φ_j + c)) Σ (1/(φ_i + c)) Π_i A_i`, equivalent to `g`.
    pub fn gc_metric(&self, c: f64) -> Result<MetricField> {
        if !(c >= 0.0) {
            return Err(Error::InvalidArgument("c must be non-negative".into()));
        }
        let shifted: Vec<Expression> = self.phi_exprs().into_iter().map(|p| p + Expression::num(c)).collect();
        let prod = Expression::product(shifted.iter().cloned());
        let weights: Vec<Expression> = shifted
            .iter()
            .map(|s| Expression::num(1.0) / (prod.clone() * s.clone()))
            .collect();
        self.weighted_metric(&weights)
    }

    /// `φ_i` values at `x`, checking `0 < φ_1 < … < φ_m`.
    pub fn phi_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        let vals: Vec<f64> = self.phi.iter().map(|p| p.expression().eval_f64(x)).collect::<std::result::Result<_, _>>()?;
        let ordered = vals[0] > 0.0 && vals.windows(2).all(|w| w[0] < w[1]);
        if !ordered {
            return Err(Error::OrderingViolated { point: x.to_vec() });
        }
        Ok(vals)
    }

    /// Check ordering of `φ` and definiteness of every block form at the
    /// given points.
    pub fn validate_at(&self, points: &[Vec<f64>]) -> Result<()> {
        for x in points {
            self.phi_values(x)?;
            for i in 0..self.m() {
                let k = self.sizes[i];
                let mut a = Vec::with_capacity(k * k);
                for r in 0..k {
                    for c in 0..k {
                        a.push(self.block_entry(i, r, c).eval_f64(x)?);
                    }
                }
                linalg::cholesky(&a, k).map_err(|minor| Error::NotPositiveDefinite {
                    point: x.clone(),
                    minor: self.block_range(i).start + minor,
                })?;
            }
        }
        Ok(())
    }

    /// `L_1..L_m` over any scalar carrier.
    pub(crate) fn lc_integrals_generic<T: Scalar>(&self, x: &[T], xi: &[T]) -> Result<Vec<T>> {
        let m = self.m();
        let phi: Vec<T> = self
            .phi
            .iter()
            .map(|p| p.expression().eval(x))
            .collect::<std::result::Result<_, _>>()?;
        let mut terms = Vec::with_capacity(m);
        for i in 0..m {
            let mut pi = T::from_f64(1.0);
            for j in 0..m {
                if j < i {
                    pi = pi * (phi[i].clone() - phi[j].clone());
                } else if j > i {
                    pi = pi * (phi[j].clone() - phi[i].clone());
                }
            }
            let range = self.block_range(i);
            let k = self.sizes[i];
            let mut quad = T::from_f64(0.0);
            for a in 0..k {
                for b in 0..k {
                    let e = self.block_entry(i, a, b).eval(x)?;
                    quad = quad + e * xi[range.start + a].clone() * xi[range.start + b].clone();
                }
            }
            terms.push(pi * quad);
        }
        let mut out = Vec::with_capacity(m);
        for k in 1..=m {
            let mut acc = T::from_f64(0.0);
            for i in 0..m {
                let others: Vec<T> = (0..m).filter(|&j| j != i).map(|j| phi[j].clone()).collect();
                acc = acc + elementary_symmetric(&others, k - 1) * terms[i].clone();
            }
            out.push(acc);
        }
        Ok(out)
    }

    pub fn to_config(&self) -> LcSpecConfig {
        LcSpecConfig {
            chart: self.chart.to_config(),
            sizes: self.sizes.clone(),
            phi: self
                .phi
                .iter()
                .map(|p| match p {
                    Phi::Constant(c) => PhiConfig::Constant(*c),
                    Phi::Function(e) => PhiConfig::Expression(e.to_string()),
                })
                .collect(),
            blocks: (0..self.m())
                .map(|i| {
                    let k = self.sizes[i];
                    let mut map = BTreeMap::new();
                    for a in 0..k {
                        for b in a..k {
                            map.insert(entry_key(a, b), self.block_entry(i, a, b).to_string());
                        }
                    }
                    map
                })
                .collect(),
        }
    }
}

/// `Π_1..Π_m` at a point.
pub fn pi_factors(spec: &LcSpec, x: &[f64]) -> Result<Vec<f64>> {
    let phi = spec.phi_values(x)?;
    Ok(pi_from_phi(&phi))
}

pub fn pi_from_phi(phi: &[f64]) -> Vec<f64> {
    let m = phi.len();
    (0..m)
        .map(|i| {
            (0..m)
                .filter(|&j| j != i)
                .map(|j| if j < i { phi[i] - phi[j] } else { phi[j] - phi[i] })
                .product()
        })
        .collect()
}

/// `ρ^i = 1/(φ_1⋯φ_m φ_i)`.
pub fn rho_from_phi(phi: &[f64]) -> Vec<f64> {
    let prod: f64 = phi.iter().product();
    phi.iter().map(|p| 1.0 / (prod * p)).collect()
}

/// `φ_i = (ρ^1⋯ρ^m)^{1/(m+1)} / ρ^i`.
pub fn phi_from_rho(rho: &[f64]) -> Vec<f64> {
    let m = rho.len() as f64;
    let root = rho.iter().product::<f64>().powf(1.0 / (m + 1.0));
    rho.iter().map(|r| root / r).collect()
}

/// Elementary symmetric polynomial `σ_k`, by the triangle recurrence.
pub fn elementary_symmetric<T: Scalar>(vals: &[T], k: usize) -> T {
    if k > vals.len() {
        return T::from_f64(0.0);
    }
    let mut e: Vec<T> = vec![T::from_f64(0.0); k + 1];
    e[0] = T::from_f64(1.0);
    for (count, v) in vals.iter().enumerate() {
        for j in (1..=k.min(count + 1)).rev() {
            e[j] = e[j].clone() + v.clone() * e[j - 1].clone();
        }
    }
    e[k].clone()
}

/// `L_1..L_m` at a phase point.
pub fn lc_integrals(spec: &LcSpec, p: &PhasePoint) -> Result<Vec<f64>> {
    check_dim(spec.dim(), p.dim())?;
    spec.chart.require(&p.x)?;
    spec.phi_values(&p.x)?;
    spec.lc_integrals_generic(&p.x, &p.xi)
}

/// `L_k` (1-based) as a phase function.
#[derive(Clone, Debug)]
pub struct LcIntegral {
    pub spec: LcSpec,
    pub k: usize,
}

impl PhaseFunction for LcIntegral {
    fn label(&self) -> String {
        format!("L_{}", self.k)
    }

    fn eval_jet(&self, x: &[Jet], xi: &[Jet]) -> Result<Jet> {
        let all = self.spec.lc_integrals_generic(x, xi)?;
        all.into_iter()
            .nth(self.k - 1)
            .ok_or_else(|| Error::InvalidArgument(format!("L_{} out of range", self.k)))
    }
}

pub fn lc_integral_functions(spec: &LcSpec) -> Vec<LcIntegral> {
    (1..=spec.m()).map(|k| LcIntegral { spec: spec.clone(), k }).collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `I_k` written through the Levi-Civita integrals:
/// `I_k = (−1)^{n+k} C_k Σ_{i=0}^{m−1} B_{k−i} L_{m−i}`, with
/// `C_k = [Π φ_l^{k_l−1}]^{(k+2)/(n+1)}` and
/// `B_j = Σ_{|α|=j} Π_l binom(k_l−1, α_l) φ_l^{−α_l}` (`B_0 = 1`, `B_{<0} = 0`).
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub k: usize,
    pub c: Expression,
    /// `(j, B_j)` for `j = k, k−1, …, k−m+1`, pairing with `L_m, …, L_1`.
    pub b: Vec<(isize, Expression)>,
}

fn b_expression(spec: &LcSpec, j: isize) -> Expression {
    if j < 0 {
        return Expression::num(0.0);
    }
    let j = j as usize;
    let tops: Vec<usize> = spec.sizes.iter().map(|k| k - 1).collect();
    let phi = spec.phi_exprs();
    let mut terms = Vec::new();
    let mut alpha = vec![0usize; tops.len()];
    fn walk(
        l: usize,
        left: usize,
        tops: &[usize],
        alpha: &mut Vec<usize>,
        phi: &[Expression],
        terms: &mut Vec<Expression>,
    ) {
        if l == tops.len() {
            if left == 0 {
                let coeff: f64 = alpha.iter().zip(tops).map(|(&a, &t)| binomial(t, a)).product();
                let factors = alpha
                    .iter()
                    .zip(phi)
                    .filter(|(&a, _)| a > 0)
                    .map(|(&a, p)| p.clone().powi(-(a as i32)));
                terms.push(Expression::num(coeff) * Expression::product(factors));
            }
            return;
        }
        for a in 0..=tops[l].min(left) {
            alpha[l] = a;
            walk(l + 1, left - a, tops, alpha, phi, terms);
        }
        alpha[l] = 0;
    }
    walk(0, j, &tops, &mut alpha, &phi, &mut terms);
    if terms.is_empty() {
        Expression::num(0.0)
    } else {
        Expression::sum(terms)
    }
}

pub fn decompose_ik(spec: &LcSpec, k: usize) -> Result<Decomposition> {
    let n = spec.dim();
    if k >= n {
        return Err(Error::InvalidArgument(format!("k = {k} must be below n = {n}")));
    }
    let phi = spec.phi_exprs();
    let base = Expression::product(
        phi.iter()
            .zip(&spec.sizes)
            .filter(|(_, &s)| s > 1)
            .map(|(p, &s)| p.clone().powi(s as i32 - 1)),
    );
    let c = base.pow(Expression::num((k + 2) as f64 / (n + 1) as f64));
    let m = spec.m() as isize;
    let b = (0..m).map(|i| (k as isize - i, b_expression(spec, k as isize - i))).collect();
    Ok(Decomposition { k, c, b })
}

impl Decomposition {
    /// Right-hand side at a phase point; should equal `I_k`.
    pub fn evaluate(&self, spec: &LcSpec, p: &PhasePoint) -> Result<f64> {
        let l = lc_integrals(spec, p)?;
        let m = spec.m();
        let n = spec.dim();
        let mut acc = 0.0;
        for (i, (_, bj)) in self.b.iter().enumerate() {
            acc += bj.eval_f64(&p.x)? * l[m - 1 - i];
        }
        let sign = if (n + self.k).is_multiple_of(2) { 1.0 } else { -1.0 };
        Ok(sign * self.c.eval_f64(&p.x)? * acc)
    }
}

/// Block weight in JSON: a number or an expression string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PhiConfig {
    Constant(f64),
    Expression(String),
}

/// JSON form of an [`LcSpec`]. Block entries use block-local 1-based keys
/// `g[a][b]` and global coordinate names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LcSpecConfig {
    #[serde(flatten)]
    pub chart: ChartConfig,
    pub sizes: Vec<usize>,
    pub phi: Vec<PhiConfig>,
    pub blocks: Vec<EntryMap>,
}

impl LcSpecConfig {
    pub fn build(&self) -> Result<LcSpec> {
        let mut chart_cfg = self.chart.clone();
        if chart_cfg.coordinates.is_empty() {
            let n: usize = self.sizes.iter().sum();
            chart_cfg.coordinates = (1..=n).map(|i| format!("x{i}")).collect();
        }
        let chart = Arc::new(Chart::from_config(&chart_cfg)?);
        if self.blocks.len() != self.sizes.len() || self.phi.len() != self.sizes.len() {
            return Err(Error::Config("sizes, phi and blocks must have the same length".into()));
        }
        let phi = self
            .phi
            .iter()
            .map(|p| match p {
                PhiConfig::Constant(c) => Ok(Phi::Constant(*c)),
                PhiConfig::Expression(s) => {
                    let e = chart.parse(s)?;
                    Ok(match e.constant_value() {
                        Some(c) => Phi::Constant(c),
                        None => Phi::Function(e),
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let blocks = self
            .blocks
            .iter()
            .zip(&self.sizes)
            .map(|(map, &k)| upper_from_entries(&chart, map, k))
            .collect::<Result<Vec<_>>>()?;
        LcSpec::new(chart, self.sizes.clone(), phi, blocks)
    }

    /// Metric-pair config of the normal form.
    pub fn pair_config(&self) -> Result<PairConfig> {
        Ok(PairConfig::from_pair(&self.build()?.build_pair()?))
    }
}
