//! Built-in metric pairs: the ellipsoid in elliptic coordinates, Levi-Civita
//! demonstration pairs, sanity pairs and non-equivalent controls.

use std::path::Path;
use std::sync::Arc;

use crate::dsl::Expression;
use crate::dual::{Jet, Scalar};
use crate::error::{Error, Result};
use crate::geometry::{Chart, MetricField};
use crate::integrals::MetricPair;
use crate::levi_civita::{LcSpec, LcSpecConfig, Phi};
use crate::linalg;

/// Ellipsoid `Σ (x^i)²/a_i = 1` with `0 < a_1 < … < a_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct EllipsoidSpec {
    a: Vec<f64>,
}

impl EllipsoidSpec {
    pub fn new(a: Vec<f64>) -> Result<Self> {
        if a.len() < 2 {
            return Err(Error::InvalidArgument("ellipsoid needs at least two semi-axes".into()));
        }
        if !(a[0] > 0.0) || a.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument(
                "semi-axes must be positive and strictly increasing".into(),
            ));
        }
        Ok(EllipsoidSpec { a })
    }

    pub fn axes(&self) -> &[f64] {
        &self.a
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    /// Open interval of `ν^{i+2}`, `i = 0..n−2`, before margins.
    pub fn interval(&self, i: usize) -> (f64, f64) {
        (self.a[i], self.a[i + 1])
    }

    /// `(ν^2, …, ν^n)` with `ν^1 = 0` mapped to the ambient point.
    pub fn elliptic_to_cartesian<T: Scalar>(&self, nu: &[T]) -> Result<Vec<T>> {
        let n = self.n();
        if nu.len() != n - 1 {
            return Err(Error::DimensionMismatch { expected: n - 1, found: nu.len() });
        }
        for (i, v) in nu.iter().enumerate() {
            let (lo, hi) = self.interval(i);
            if !(v.value() > lo && v.value() < hi) {
                return Err(Error::OutsideDomain {
                    point: nu.iter().map(Scalar::value).collect(),
                });
            }
        }
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let ai = self.a[i];
            // ν^1 = 0 contributes the factor a_i.
            let mut num = T::from_f64(ai);
            for v in nu {
                num = num * (T::from_f64(ai) - v.clone());
            }
            let den: f64 = (0..n).filter(|&j| j != i).map(|j| ai - self.a[j]).product();
            let rad = num.scale(1.0 / den);
            if rad.value() < 0.0 {
                return Err(Error::OutsideDomain {
                    point: nu.iter().map(Scalar::value).collect(),
                });
            }
            out.push(rad.sqrt());
        }
        Ok(out)
    }

    /// Elliptic chart with a margin of 2% of each interval.
    pub fn chart(&self) -> Result<Chart> {
        let n = self.n();
        let names = (2..=n).map(|i| format!("nu{i}"));
        let (bounds, inner): (Vec<_>, Vec<_>) = (0..n - 1)
            .map(|i| {
                let (lo, hi) = self.interval(i);
                let w = hi - lo;
                ((lo + 0.02 * w, hi - 0.02 * w), (lo + 0.2 * w, hi - 0.2 * w))
            })
            .unzip();
        Chart::new(names)?.with_bounds(bounds)?.with_sample_box(inner)
    }

    /// Metrics induced on the ellipsoid by `Σ(dx^i)²` and by
    /// `(Σ(dx^i)²/a_i)/(Σ(x^i/a_i)²)`, in elliptic coordinates.
    pub fn pair(&self) -> Result<MetricPair> {
        let n = self.n();
        let chart = Arc::new(self.chart()?);
        let names = chart.names().to_vec();
        let sign = if (n - 1).is_multiple_of(2) { 0.25 } else { -0.25 };
        let prod_a: f64 = self.a.iter().product();
        let prod_nu = names.join("*");
        let mut gd = Vec::with_capacity(n - 1);
        let mut bd = Vec::with_capacity(n - 1);
        for (i, nu) in names.iter().enumerate() {
            let mut pi: Vec<String> = names
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, o)| format!("({nu} - {o})"))
                .collect();
            pi.push("1".into());
            let den: Vec<String> = self.a.iter().map(|aj| format!("({aj:e} - {nu})")).collect();
            let base = format!("({sign:e})*{}*{nu}/({})", pi.join("*"), den.join("*"));
            gd.push(chart.parse(&base)?);
            bd.push(chart.parse(&format!("({prod_a:e})*{base}/({nu}*{prod_nu})"))?);
        }
        let g = MetricField::diagonal(chart.clone(), gd)?;
        let gbar = MetricField::diagonal(chart, bd)?;
        MetricPair::new(g, gbar)
    }

    /// Eigenvalues of `g⁻¹ḡ` predicted by the elliptic coordinates:
    /// `(a_1⋯a_n)/(ν^i ν^2⋯ν^n)`.
    pub fn expected_eigenvalues(&self, nu: &[f64]) -> Vec<f64> {
        let prod_a: f64 = self.a.iter().product();
        let prod_nu: f64 = nu.iter().product();
        let mut v: Vec<f64> = nu.iter().map(|x| prod_a / (x * prod_nu)).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Pullbacks of the two ambient metrics through
    /// [`elliptic_to_cartesian`](Self::elliptic_to_cartesian), with the
    /// Jacobian taken by forward differentiation.
    pub fn ambient_pullbacks(&self, nu: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let d = nu.len();
        let x = self.elliptic_to_cartesian(&Jet::seed(nu, 0, d))?;
        let n = self.n();
        let jac: Vec<Vec<f64>> = x.iter().map(|xi| xi.gradient(d)).collect();
        let weight: f64 = x.iter().zip(&self.a).map(|(xi, a)| (xi.v / a).powi(2)).sum();
        let mut g = vec![0.0; d * d];
        let mut gb = vec![0.0; d * d];
        for r in 0..d {
            for c in 0..d {
                for i in 0..n {
                    let t = jac[i][r] * jac[i][c];
                    g[r * d + c] += t;
                    gb[r * d + c] += t / self.a[i] / weight;
                }
            }
        }
        Ok((g, gb))
    }
}

/// A named pair with what is expected of it.
#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub name: String,
    pub pair: MetricPair,
    pub lc_spec: Option<LcSpec>,
    /// Whether the pair is geodesically equivalent.
    pub equivalent: bool,
    pub description: String,
}

fn big_box(n: usize, half: f64, sample: f64) -> Result<Chart> {
    Chart::standard(n)?
        .with_bounds(vec![(-half, half); n])?
        .with_sample_box(vec![(-sample, sample); n])
}

fn lc_entry(name: &str, spec: LcSpec, description: &str) -> Result<CatalogEntry> {
    Ok(CatalogEntry {
        name: name.into(),
        pair: spec.build_pair()?,
        lc_spec: Some(spec),
        equivalent: true,
        description: description.into(),
    })
}

fn parse_all(chart: &Chart, srcs: &[&str]) -> Result<Vec<Expression>> {
    srcs.iter().map(|s| chart.parse(s)).collect()
}

fn phi_fn(chart: &Chart, src: &str) -> Result<Phi> {
    Ok(Phi::Function(chart.parse(src)?))
}

/// `m = 2`, one coordinate per block.
pub fn demo_lc2() -> Result<LcSpec> {
    let chart = Arc::new(big_box(2, 20.0, 2.0)?);
    let phi = vec![phi_fn(&chart, "1 + 0.3*sin(x1)")?, phi_fn(&chart, "3 + 0.5*cos(x2)")?];
    let blocks = vec![parse_all(&chart, &["2 + cos(x1)"])?, parse_all(&chart, &["2 + 0.5*sin(x2)"])?];
    LcSpec::new(chart, vec![1, 1], phi, blocks)
}

/// `m = 3`, one coordinate per block.
pub fn demo_lc3() -> Result<LcSpec> {
    let chart = Arc::new(big_box(3, 20.0, 2.0)?);
    let phi = vec![
        phi_fn(&chart, "1 + 0.2*sin(x1)")?,
        phi_fn(&chart, "2.5 + 0.3*cos(x2)")?,
        phi_fn(&chart, "4 + 0.4*sin(x3)")?,
    ];
    let blocks = vec![
        parse_all(&chart, &["1.5 + 0.5*cos(x1)"])?,
        parse_all(&chart, &["2 + 0.5*sin(x2)"])?,
        parse_all(&chart, &["1.8 + 0.3*cos(x3)"])?,
    ];
    LcSpec::new(chart, vec![1, 1, 1], phi, blocks)
}

/// `m = 2` with block sizes `(2, 1)`.
pub fn demo_lc_block() -> Result<LcSpec> {
    let chart = Arc::new(big_box(3, 20.0, 2.0)?);
    let phi = vec![Phi::Constant(1.0), phi_fn(&chart, "2.5 + 0.4*sin(x3)")?];
    let blocks = vec![
        parse_all(&chart, &["2 + sin(x1)", "0.3*sin(x2)", "1.5 + cos(x1)^2"])?,
        parse_all(&chart, &["1.5 + 0.5*cos(x3)"])?,
    ];
    LcSpec::new(chart, vec![2, 1], phi, blocks)
}

/// `m = 3` with block sizes `(1, 2, 1)`.
pub fn demo_lc_block4() -> Result<LcSpec> {
    let chart = Arc::new(big_box(4, 20.0, 2.0)?);
    let phi = vec![
        phi_fn(&chart, "1 + 0.3*sin(x1)")?,
        Phi::Constant(2.0),
        phi_fn(&chart, "3.5 + 0.4*cos(x4)")?,
    ];
    let blocks = vec![
        parse_all(&chart, &["1.5 + 0.5*cos(x1)"])?,
        parse_all(&chart, &["2 + cos(x2)", "0.2*sin(x3)", "1.5 + 0.5*sin(x2)"])?,
        parse_all(&chart, &["2 + 0.5*sin(x4)"])?,
    ];
    LcSpec::new(chart, vec![1, 2, 1], phi, blocks)
}

/// Single block of size 2: `ḡ` is a constant multiple of `g`.
pub fn demo_lc_single() -> Result<LcSpec> {
    let chart = Arc::new(big_box(2, 20.0, 2.0)?);
    let blocks = vec![parse_all(&chart, &["2 + sin(x1)", "0.3*sin(x2)", "1.5 + cos(x1)^2"])?];
    LcSpec::new(chart, vec![2], vec![Phi::Constant(1.5)], blocks)
}

/// `m = 2` with block sizes `(1, 2)`.
pub fn demo_lc_12() -> Result<LcSpec> {
    let chart = Arc::new(big_box(3, 20.0, 2.0)?);
    let phi = vec![phi_fn(&chart, "1 + 0.3*sin(x1)")?, Phi::Constant(3.0)];
    let blocks = vec![
        parse_all(&chart, &["2 + cos(x1)"])?,
        parse_all(&chart, &["1.5 + 0.5*cos(x3)", "0.25*cos(x2)", "2 + sin(x2)"])?,
    ];
    LcSpec::new(chart, vec![1, 2], phi, blocks)
}

/// `m = 2` with block sizes `(2, 2)`.
pub fn demo_lc_22() -> Result<LcSpec> {
    let chart = Arc::new(big_box(4, 20.0, 2.0)?);
    let phi = vec![Phi::Constant(1.0), Phi::Constant(2.5)];
    let blocks = vec![
        parse_all(&chart, &["2 + sin(x1)", "0.3*sin(x2)", "1.5 + cos(x1)^2"])?,
        parse_all(&chart, &["1.5 + 0.5*cos(x4)", "0.2*cos(x3)", "2 + 0.5*sin(x3)"])?,
    ];
    LcSpec::new(chart, vec![2, 2], phi, blocks)
}

/// Surface of revolution in normal form: `φ_1(x1)`, constant `φ_2`, flat
/// blocks; `x2` is cyclic for both metrics.
pub fn demo_revolution() -> Result<LcSpec> {
    let chart = Arc::new(big_box(2, 20.0, 2.0)?);
    let one = Expression::num(1.0);
    let phi = vec![phi_fn(&chart, "1 + 0.5*sin(x1)")?, Phi::Constant(3.0)];
    LcSpec::new(chart, vec![1, 1], phi, vec![vec![one.clone()], vec![one]])
}

/// Levi-Civita specs used for the decomposition identity, with names.
pub fn lc_battery() -> Result<Vec<(&'static str, LcSpec)>> {
    Ok(vec![
        ("lc-single", demo_lc_single()?),
        ("lc2", demo_lc2()?),
        ("lc-block", demo_lc_block()?),
        ("lc-12", demo_lc_12()?),
        ("lc-22", demo_lc_22()?),
        ("lc3", demo_lc3()?),
        ("lc-block4", demo_lc_block4()?),
    ])
}

/// Round sphere `dθ² + sin²θ dϕ²` paired with itself.
pub fn sphere() -> Result<MetricPair> {
    let chart = Arc::new(
        Chart::new(["theta", "phi"])?
            .with_bounds(vec![(0.05, std::f64::consts::PI - 0.05), (-50.0, 50.0)])?
            .with_sample_box(vec![(0.5, 2.6), (-3.0, 3.0)])?,
    );
    let g = MetricField::parse_matrix(chart, &[vec!["1", "0"], vec!["0", "sin(theta)^2"]])?;
    MetricPair::new(g.clone(), g)
}

/// Euclidean metric paired with itself.
pub fn flat(n: usize) -> Result<MetricPair> {
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let g = MetricField::euclidean(Arc::new(big_box(n, 20.0, 2.0)?))?;
    MetricPair::new(g.clone(), g)
}

/// The `m = 2` demonstration pair with `ḡ` multiplied entrywise by
/// `1 + amplitude·sin(x1·x2)`.
pub fn perturbed_lc(amplitude: f64) -> Result<MetricPair> {
    let base = demo_lc2()?.build_pair()?;
    let factor = base.chart().parse(&format!("1 + {amplitude}*sin(x1*x2)"))?;
    MetricPair::new(base.g.clone(), base.gbar.scaled(&factor)?)
}

/// Euclidean `g` with the conformal `ḡ = e^{x1} g`.
pub fn random_conformal() -> Result<MetricPair> {
    let g = MetricField::euclidean(Arc::new(big_box(2, 20.0, 2.0)?))?;
    let factor = g.chart().parse("exp(x1)")?;
    let gbar = g.scaled(&factor)?;
    MetricPair::new(g, gbar)
}

pub const BUILTIN_NAMES: &[(&str, &str)] = &[
    ("ellipsoid:a1,a2,...", "ellipsoid pair in elliptic coordinates, 0 < a1 < a2 < ..."),
    ("lc:<path>", "Levi-Civita normal form from a JSON spec"),
    ("demo:lc2", "Levi-Civita pair, two blocks of size 1"),
    ("demo:lc3", "Levi-Civita pair, three blocks of size 1"),
    ("demo:lc-block", "Levi-Civita pair, blocks of size 2 and 1"),
    ("demo:lc-block4", "Levi-Civita pair, blocks of size 1, 2 and 1"),
    ("demo:lc-single", "Levi-Civita pair, one block of size 2 (proportional metrics)"),
    ("demo:lc-12", "Levi-Civita pair, blocks of size 1 and 2"),
    ("demo:lc-22", "Levi-Civita pair, two blocks of size 2"),
    ("demo:revolution", "surface of revolution in Levi-Civita form"),
    ("sphere", "round sphere paired with itself"),
    ("flat:N", "Euclidean N-space paired with itself"),
    ("falsify:perturbed-lc[:amp]", "demo:lc2 with gbar scaled by 1 + amp*sin(x1*x2), amp defaults to 0.1"),
    ("falsify:random-conformal", "Euclidean plane against exp(x1) times itself"),
];

fn parse_numbers(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("`{t}` is not a number")))
        })
        .collect()
}

/// Resolve a catalog name.
pub fn lookup(name: &str) -> Result<CatalogEntry> {
    let entry = |pair, equivalent, description: &str| CatalogEntry {
        name: name.into(),
        pair,
        lc_spec: None,
        equivalent,
        description: description.into(),
    };
    if let Some(rest) = name.strip_prefix("ellipsoid:") {
        let spec = EllipsoidSpec::new(parse_numbers(rest)?)?;
        return Ok(entry(spec.pair()?, true, "ellipsoid pair"));
    }
    if let Some(path) = name.strip_prefix("lc:") {
        let text = std::fs::read_to_string(Path::new(path))
            .map_err(|e| Error::Config(format!("{path}: {e}")))?;
        let cfg: LcSpecConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{path}: {e}")))?;
        let spec = cfg.build()?;
        return lc_entry(name, spec, "Levi-Civita pair from file");
    }
    if let Some(rest) = name.strip_prefix("flat:") {
        let n: usize = rest
            .parse()
            .map_err(|_| Error::Config(format!("`{rest}` is not a dimension")))?;
        return Ok(entry(flat(n)?, true, "Euclidean pair"));
    }
    if let Some(rest) = name.strip_prefix("falsify:perturbed-lc") {
        let amp = match rest.strip_prefix(':') {
            Some(a) => a
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("`{a}` is not an amplitude")))?,
            None if rest.is_empty() => 0.1,
            None => return Err(Error::Config(format!("unknown catalog entry `{name}`"))),
        };
        return Ok(entry(perturbed_lc(amp)?, amp == 0.0, "perturbed Levi-Civita pair"));
    }
    match name {
        "demo:lc2" => lc_entry(name, demo_lc2()?, "Levi-Civita pair, sizes (1,1)"),
        "demo:lc3" => lc_entry(name, demo_lc3()?, "Levi-Civita pair, sizes (1,1,1)"),
        "demo:lc-block" => lc_entry(name, demo_lc_block()?, "Levi-Civita pair, sizes (2,1)"),
        "demo:lc-block4" => lc_entry(name, demo_lc_block4()?, "Levi-Civita pair, sizes (1,2,1)"),
        "demo:lc-single" => lc_entry(name, demo_lc_single()?, "Levi-Civita pair, sizes (2)"),
        "demo:lc-12" => lc_entry(name, demo_lc_12()?, "Levi-Civita pair, sizes (1,2)"),
        "demo:lc-22" => lc_entry(name, demo_lc_22()?, "Levi-Civita pair, sizes (2,2)"),
        "demo:revolution" => lc_entry(name, demo_revolution()?, "surface of revolution"),
        "sphere" => Ok(entry(sphere()?, true, "round sphere")),
        "falsify:random-conformal" => Ok(entry(random_conformal()?, false, "conformal control")),
        _ => Err(Error::Config(format!("unknown catalog entry `{name}`"))),
    }
}

/// Cholesky-free check that a pair's operator has the predicted spectrum;
/// returns the largest relative eigenvalue mismatch.
pub fn ellipsoid_spectrum_error(spec: &EllipsoidSpec, nu: &[f64]) -> Result<f64> {
    let pair = spec.pair()?;
    let at = pair.matrices(nu)?;
    let d = nu.len();
    let g_op = linalg::chol_solve_matrix(&at.lg, &at.gbar, d);
    let mut got: Vec<f64> = (0..d).map(|i| g_op[i * d + i]).collect();
    got.sort_by(f64::total_cmp);
    let want = spec.expected_eigenvalues(nu);
    Ok(got
        .iter()
        .zip(&want)
        .map(|(a, b)| (a - b).abs() / b.abs())
        .fold(0.0, f64::max))
}
