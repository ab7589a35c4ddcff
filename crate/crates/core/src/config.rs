//! JSON descriptions of metric pairs. Matrix entries are DSL strings keyed
//! `g[i][j]` with 1-based indices; absent off-diagonal entries are zero.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dsl::Expression;
use crate::error::{Error, Result};
use crate::geometry::{Chart, ChartConfig, MetricField};
use crate::integrals::MetricPair;

pub type EntryMap = BTreeMap<String, String>;

pub fn entry_key(i: usize, j: usize) -> String {
    format!("g[{}][{}]", i + 1, j + 1)
}

/// Parse `g[i][j]` into 0-based indices.
pub fn parse_entry_key(key: &str) -> Result<(usize, usize)> {
    let bad = || Error::Config(format!("malformed entry key `{key}`, expected g[i][j]"));
    let rest = key.trim().strip_prefix("g[").ok_or_else(bad)?;
    let (i, rest) = rest.split_once("][").ok_or_else(bad)?;
    let j = rest.strip_suffix(']').ok_or_else(bad)?;
    let i: usize = i.trim().parse().map_err(|_| bad())?;
    let j: usize = j.trim().parse().map_err(|_| bad())?;
    if i == 0 || j == 0 {
        return Err(Error::Config(format!("entry key `{key}` is 1-based")));
    }
    Ok((i - 1, j - 1))
}

/// Upper-triangle expressions of a `dim × dim` matrix described by an entry
/// map, parsed over `chart`.
pub fn upper_from_entries(chart: &Chart, map: &EntryMap, dim: usize) -> Result<Vec<Expression>> {
    let mut slots: Vec<Option<Expression>> = vec![None; dim * dim];
    for (key, src) in map {
        let (i, j) = parse_entry_key(key)?;
        if i >= dim || j >= dim {
            return Err(Error::Config(format!("entry `{key}` outside a {dim}×{dim} matrix")));
        }
        let e = chart
            .parse(src)
            .map_err(|err| Error::Config(format!("entry `{key}`: {err}")))?;
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        match &slots[a * dim + b] {
            Some(prev) if *prev != e => {
                return Err(Error::Config(format!(
                    "entries {} and {} differ",
                    entry_key(a, b),
                    entry_key(b, a)
                )))
            }
            _ => slots[a * dim + b] = Some(e),
        }
    }
    let mut upper = Vec::with_capacity(dim * (dim + 1) / 2);
    for i in 0..dim {
        for j in i..dim {
            match slots[i * dim + j].take() {
                Some(e) => upper.push(e),
                None if i != j => upper.push(Expression::num(0.0)),
                None => return Err(Error::Config(format!("missing diagonal entry {}", entry_key(i, i)))),
            }
        }
    }
    Ok(upper)
}

pub fn metric_from_entries(chart: &Arc<Chart>, map: &EntryMap) -> Result<MetricField> {
    let upper = upper_from_entries(chart, map, chart.dim())?;
    MetricField::new(chart.clone(), upper)
}

pub fn entries_of(metric: &MetricField) -> EntryMap {
    metric
        .entry_strings()
        .into_iter()
        .map(|(i, j, s)| (entry_key(i, j), s))
        .collect()
}

/// Inline metric pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairConfig {
    #[serde(flatten)]
    pub chart: ChartConfig,
    pub g: EntryMap,
    pub gbar: EntryMap,
}

impl PairConfig {
    pub fn build(&self) -> Result<MetricPair> {
        let chart = Arc::new(Chart::from_config(&self.chart)?);
        let g = metric_from_entries(&chart, &self.g)?;
        let gbar = metric_from_entries(&chart, &self.gbar)?;
        MetricPair::new(g, gbar)
    }

    pub fn from_pair(pair: &MetricPair) -> Self {
        PairConfig {
            chart: pair.chart().to_config(),
            g: entries_of(&pair.g),
            gbar: entries_of(&pair.gbar),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys() {
        assert_eq!(parse_entry_key("g[1][2]").unwrap(), (0, 1));
        assert_eq!(entry_key(2, 0), "g[3][1]");
        assert!(parse_entry_key("g[0][1]").is_err());
        assert!(parse_entry_key("h[1][1]").is_err());
        assert!(parse_entry_key("g[1]").is_err());
    }

    #[test]
    fn pair_round_trip() {
        let json = r#"{
            "coordinates": ["x1", "x2"],
            "bounds": [[-1, 1], [-1, 1]],
            "g": {"g[1][1]": "1 + x1^2", "g[2][2]": "2", "g[1][2]": "x2/10"},
            "gbar": {"g[1][1]": "3", "g[2][2]": "4"}
        }"#;
        let cfg: PairConfig = serde_json::from_str(json).unwrap();
        let pair = cfg.build().unwrap();
        assert_eq!(pair.g.values(&[0.5, 0.5]).unwrap(), vec![1.25, 0.05, 0.05, 2.0]);
        assert_eq!(pair.gbar.values(&[0.0, 0.0]).unwrap(), vec![3.0, 0.0, 0.0, 4.0]);
        let again = PairConfig::from_pair(&pair).build().unwrap();
        assert_eq!(again.g.values(&[0.3, -0.2]).unwrap(), pair.g.values(&[0.3, -0.2]).unwrap());
    }

    #[test]
    fn missing_diagonal_and_conflicts() {
        let chart = Chart::standard(2).unwrap();
        let mut m = EntryMap::new();
        m.insert("g[1][1]".into(), "1".into());
        assert!(upper_from_entries(&chart, &m, 2).is_err());
        m.insert("g[2][2]".into(), "1".into());
        m.insert("g[1][2]".into(), "x1".into());
        m.insert("g[2][1]".into(), "x2".into());
        assert!(upper_from_entries(&chart, &m, 2).is_err());
    }
}
