use serde::{Deserialize, Serialize};

use crate::dsl::{parse_with_names, Expression};
use crate::error::{check_dim, Error, Result};

/// A coordinate domain.
///
/// A point is inside when it lies in the open `bounds` box (if any) and every
/// predicate expression evaluates to a positive number. `sample_box`, when
/// given, restricts where random phase points are drawn.
#[derive(Clone, Debug)]
pub struct Chart {
    names: Vec<String>,
    bounds: Option<Vec<(f64, f64)>>,
    predicates: Vec<Expression>,
    sample_box: Option<Vec<(f64, f64)>>,
}

/// Serializable description of a chart.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ChartConfig {
    #[serde(default)]
    pub coordinates: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<(f64, f64)>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub domain: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_box: Option<Vec<(f64, f64)>>,
}

impl Chart {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::InvalidArgument("chart needs at least one coordinate".into()));
        }
        for (i, a) in names.iter().enumerate() {
            if names[..i].contains(a) {
                return Err(Error::InvalidArgument(format!("duplicate coordinate name `{a}`")));
            }
            if crate::dsl::Func::from_name(a).is_some() || a == "pi" {
                return Err(Error::InvalidArgument(format!("reserved coordinate name `{a}`")));
            }
        }
        Ok(Chart {
            names,
            bounds: None,
            predicates: Vec::new(),
            sample_box: None,
        })
    }

    /// Chart with coordinates `x1..xn`.
    pub fn standard(n: usize) -> Result<Self> {
        Chart::new((1..=n).map(|i| format!("x{i}")))
    }

    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Result<Self> {
        check_dim(self.dim(), bounds.len())?;
        if bounds.iter().any(|(lo, hi)| !(lo < hi)) {
            return Err(Error::InvalidArgument("chart bounds must satisfy lo < hi".into()));
        }
        self.bounds = Some(bounds);
        Ok(self)
    }

    pub fn with_predicate(mut self, src: &str) -> Result<Self> {
        let e = self.parse(src)?;
        self.predicates.push(e);
        Ok(self)
    }

    pub fn with_sample_box(mut self, sample_box: Vec<(f64, f64)>) -> Result<Self> {
        check_dim(self.dim(), sample_box.len())?;
        if sample_box.iter().any(|(lo, hi)| !(lo < hi)) {
            return Err(Error::InvalidArgument("sample box must satisfy lo < hi".into()));
        }
        self.sample_box = Some(sample_box);
        Ok(self)
    }

    pub fn from_config(cfg: &ChartConfig) -> Result<Self> {
        let mut chart = Chart::new(cfg.coordinates.iter().cloned())?;
        if let Some(b) = &cfg.bounds {
            chart = chart.with_bounds(b.clone())?;
        }
        for p in &cfg.domain {
            chart = chart.with_predicate(p)?;
        }
        if let Some(b) = &cfg.sample_box {
            chart = chart.with_sample_box(b.clone())?;
        }
        Ok(chart)
    }

    pub fn to_config(&self) -> ChartConfig {
        ChartConfig {
            coordinates: self.names.clone(),
            bounds: self.bounds.clone(),
            domain: self.predicates.iter().map(|e| e.to_string()).collect(),
            sample_box: self.sample_box.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn bounds(&self) -> Option<&[(f64, f64)]> {
        self.bounds.as_deref()
    }

    pub fn predicates(&self) -> &[Expression] {
        &self.predicates
    }

    /// Parse an expression over this chart's coordinates.
    pub fn parse(&self, src: &str) -> Result<Expression> {
        Ok(parse_with_names(src, &self.names)?)
    }

    pub fn var(&self, index: usize) -> Expression {
        Expression::var(index, &self.names[index])
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        if let Some(b) = &self.bounds {
            if x.iter().zip(b).any(|(v, (lo, hi))| !(*v > *lo && *v < *hi)) {
                return false;
            }
        }
        self.predicates
            .iter()
            .all(|p| matches!(p.eval_f64(x), Ok(v) if v > 0.0))
    }

    pub fn require(&self, x: &[f64]) -> Result<()> {
        check_dim(self.dim(), x.len())?;
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::OutsideDomain { point: x.to_vec() })
        }
    }

    /// Box used for random sampling: the explicit sample box, else the
    /// bounds shrunk by 10% on each side.
    pub fn sampling_box(&self) -> Result<Vec<(f64, f64)>> {
        if let Some(b) = &self.sample_box {
            return Ok(b.clone());
        }
        match &self.bounds {
            Some(b) => Ok(b
                .iter()
                .map(|(lo, hi)| {
                    let m = 0.1 * (hi - lo);
                    (lo + m, hi - m)
                })
                .collect()),
            None => Err(Error::InvalidArgument(
                "chart has neither bounds nor a sample box".into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_must_be_distinct() {
        assert!(Chart::new(["x", "x"]).is_err());
        assert!(Chart::new(Vec::<String>::new()).is_err());
        assert!(Chart::new(["sin"]).is_err());
    }

    #[test]
    fn membership() {
        let c = Chart::standard(2)
            .unwrap()
            .with_bounds(vec![(-1.0, 1.0), (0.0, 2.0)])
            .unwrap()
            .with_predicate("1 - x1^2 - (x2 - 1)^2")
            .unwrap();
        assert!(c.contains(&[0.0, 1.0]));
        assert!(!c.contains(&[0.9, 1.9]));
        assert!(!c.contains(&[0.0, 2.5]));
        assert!(!c.contains(&[0.0]));
        assert!(c.require(&[2.0, 1.0]).is_err());
    }

    #[test]
    fn config_round_trip() {
        let cfg = ChartConfig {
            coordinates: vec!["u".into(), "v".into()],
            bounds: Some(vec![(0.0, 1.0), (0.0, 1.0)]),
            domain: vec!["u + v".into()],
            sample_box: None,
        };
        let chart = Chart::from_config(&cfg).unwrap();
        assert_eq!(chart.to_config(), cfg);
        assert_eq!(chart.sampling_box().unwrap()[0], (0.1, 0.9));
    }
}
