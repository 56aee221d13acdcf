use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// A summary function tabulated on a grid.
///
/// `values[k]` is `None` where the estimator is undefined (empty
/// denominator). `flagged[k]` marks nodes whose value is known to be biased,
/// with the reason recorded under the `flag` parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryCurve {
    pub name: String,
    pub grid: Vec<f64>,
    pub values: Vec<Option<f64>>,
    pub counts: Vec<usize>,
    pub flagged: Vec<bool>,
    pub parameters: BTreeMap<String, Value>,
    pub warnings: Vec<String>,
}

impl SummaryCurve {
    pub fn new(name: &str, grid: Vec<f64>) -> Self {
        let n = grid.len();
        SummaryCurve {
            name: name.to_string(),
            grid,
            values: vec![None; n],
            counts: vec![0; n],
            flagged: vec![false; n],
            parameters: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    pub fn with_param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.parameters.insert(key.to_string(), value.into());
        self
    }

    pub fn set_param(&mut self, key: &str, value: impl Into<Value>) {
        self.parameters.insert(key.to_string(), value.into());
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Value at node `k`, NaN when undefined.
    pub fn value(&self, k: usize) -> f64 {
        self.values[k].unwrap_or(f64::NAN)
    }

    /// Linear interpolation at `x`; `None` outside the grid or next to an
    /// undefined node.
    pub fn interpolate(&self, x: f64) -> Option<f64> {
        let g = &self.grid;
        if g.is_empty() || x < g[0] || x > g[g.len() - 1] {
            return None;
        }
        let k = g.partition_point(|&v| v <= x);
        if g[k - 1] == x {
            return self.values[k - 1];
        }
        let (x0, x1) = (g[k - 1], g[k]);
        let (y0, y1) = (self.values[k - 1]?, self.values[k]?);
        if x1 == x0 {
            return Some(y0);
        }
        Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
    }
}

/// A summary function on a product grid `(angle, r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryCurve2D {
    pub name: String,
    pub angles: Vec<f64>,
    /// Second angle coordinate in 3D (polar angle); empty in 2D.
    #[serde(default)]
    pub polar: Vec<f64>,
    pub r: Vec<f64>,
    /// Indexed `[angle][polar][r]` flattened row-major (`polar` has length 1
    /// in spirit when empty).
    pub values: Vec<Option<f64>>,
    pub counts: Vec<usize>,
    pub flagged: Vec<bool>,
    pub parameters: BTreeMap<String, Value>,
    pub warnings: Vec<String>,
}

impl SummaryCurve2D {
    pub fn new(name: &str, angles: Vec<f64>, polar: Vec<f64>, r: Vec<f64>) -> Self {
        let n = angles.len() * polar.len().max(1) * r.len();
        SummaryCurve2D {
            name: name.to_string(),
            angles,
            polar,
            r,
            values: vec![None; n],
            counts: vec![0; n],
            flagged: vec![false; n],
            parameters: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    pub fn index(&self, a: usize, p: usize, k: usize) -> usize {
        (a * self.polar.len().max(1) + p) * self.r.len() + k
    }

    pub fn get(&self, a: usize, p: usize, k: usize) -> Option<f64> {
        self.values[self.index(a, p, k)]
    }

    pub fn set_param(&mut self, key: &str, value: impl Into<Value>) {
        self.parameters.insert(key.to_string(), value.into());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation() {
        let mut c = SummaryCurve::new("k", vec![0.0, 1.0, 2.0]);
        c.values = vec![Some(0.0), Some(2.0), None];
        assert_eq!(c.interpolate(0.5), Some(1.0));
        assert_eq!(c.interpolate(1.0), Some(2.0));
        assert_eq!(c.interpolate(1.5), None);
        assert_eq!(c.interpolate(-0.1), None);
    }

    #[test]
    fn product_grid_indexing() {
        let c = SummaryCurve2D::new("g", vec![0.0, 1.0], vec![], vec![0.1, 0.2, 0.3]);
        assert_eq!(c.values.len(), 6);
        assert_eq!(c.index(1, 0, 2), 5);
    }
}
