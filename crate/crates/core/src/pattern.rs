use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::RectWindow;

/// A finite simple point pattern observed in a box window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointPattern {
    dim: usize,
    coords: Vec<f64>,
    window: RectWindow,
    /// Set when the window is the bounding box of a non axis-aligned region
    /// (for example after a rotation), so parts of it were never observed.
    #[serde(default)]
    window_is_bounding_box: bool,
}

impl PointPattern {
    pub fn new(points: &[Vec<f64>], window: RectWindow) -> Result<Self> {
        let dim = window.dim();
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::InvalidPattern(format!(
                    "point {i} has {} coordinates, window has {dim}",
                    p.len()
                )));
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(dim, coords, window)
    }

    /// Build from row-major coordinates (`n * dim` values).
    pub fn from_flat(dim: usize, coords: Vec<f64>, window: RectWindow) -> Result<Self> {
        if window.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: window.dim(),
                got: dim,
            });
        }
        if coords.len() % dim != 0 {
            return Err(Error::InvalidPattern(
                "coordinate count is not a multiple of the dimension".into(),
            ));
        }
        let p = PointPattern {
            dim,
            coords,
            window,
            window_is_bounding_box: false,
        };
        p.validate()?;
        Ok(p)
    }

    /// Build without the containment/duplicate checks; for internal use by
    /// generators that guarantee both by construction.
    pub(crate) fn from_flat_unchecked(dim: usize, coords: Vec<f64>, window: RectWindow) -> Self {
        debug_assert_eq!(coords.len() % dim, 0);
        PointPattern {
            dim,
            coords,
            window,
            window_is_bounding_box: false,
        }
    }

    pub fn empty(window: RectWindow) -> Self {
        PointPattern {
            dim: window.dim(),
            coords: Vec::new(),
            window,
            window_is_bounding_box: false,
        }
    }

    fn validate(&self) -> Result<()> {
        for i in 0..self.len() {
            let p = self.point(i);
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidPattern(format!("point {i} is not finite")));
            }
            if !self.window.contains(p) {
                return Err(Error::InvalidPattern(format!(
                    "point {i} {p:?} lies outside the window"
                )));
            }
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            self.point(a)
                .partial_cmp(self.point(b))
                .expect("coordinates are finite")
        });
        for w in order.windows(2) {
            if self.point(w[0]) == self.point(w[1]) {
                return Err(Error::InvalidPattern(format!(
                    "points {} and {} coincide",
                    w[0].min(w[1]),
                    w[0].max(w[1])
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn window(&self) -> &RectWindow {
        &self.window
    }

    pub fn window_is_bounding_box(&self) -> bool {
        self.window_is_bounding_box
    }

    pub(crate) fn set_window_is_bounding_box(&mut self, flag: bool) {
        self.window_is_bounding_box = flag;
    }

    /// `n / |W|`.
    pub fn intensity(&self) -> f64 {
        self.len() as f64 / self.window.volume()
    }

    /// Shift points and window together.
    pub fn translate(&self, t: &[f64]) -> PointPattern {
        let coords = self
            .coords
            .chunks_exact(self.dim)
            .flat_map(|p| p.iter().zip(t).map(|(a, b)| a + b).collect::<Vec<_>>())
            .collect();
        PointPattern {
            dim: self.dim,
            coords,
            window: self.window.translate(t),
            window_is_bounding_box: self.window_is_bounding_box,
        }
    }

    /// Keep the points inside `window` and adopt it as the new window.
    pub fn restrict(&self, window: &RectWindow) -> Result<PointPattern> {
        if window.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: window.dim(),
            });
        }
        let coords = self
            .points()
            .filter(|p| {
                (0..self.dim).all(|j| p[j] >= window.lo()[j] && p[j] <= window.hi()[j])
            })
            .flatten()
            .copied()
            .collect();
        Ok(PointPattern {
            dim: self.dim,
            coords,
            window: window.clone(),
            window_is_bounding_box: false,
        })
    }

    /// Superposition of two patterns on the same window.
    pub fn superpose(&self, other: &PointPattern) -> Result<PointPattern> {
        if self.window != other.window {
            return Err(Error::InvalidPattern("superposed windows differ".into()));
        }
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&other.coords);
        Ok(PointPattern {
            dim: self.dim,
            coords,
            window: self.window.clone(),
            window_is_bounding_box: self.window_is_bounding_box,
        })
    }
}
