//! Time grids: uniform, geometrically graded toward the horizon, and refinements.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Strictly increasing sequence of time nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeGrid<T> {
    points: Vec<T>,
}

impl<T: Real> TimeGrid<T> {
    pub fn from_points(points: Vec<T>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::GridMismatch(
                "a time grid needs at least two nodes".into(),
            ));
        }
        if points.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite { what: "time grid" });
        }
        if !points.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::GridMismatch(
                "time nodes must be strictly increasing".into(),
            ));
        }
        Ok(Self { points })
    }

    /// `steps` equal intervals on `[0, t_end]`.
    pub fn uniform(t_end: T, steps: usize) -> Result<Self> {
        if steps == 0 || !(t_end > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "grid",
                reason: format!("need steps > 0 and t_end > 0, got {steps} and {t_end}"),
            });
        }
        let h = t_end / T::lit(steps as f64);
        let mut points: Vec<T> = (0..steps).map(|i| h * T::lit(i as f64)).collect();
        points.push(t_end);
        Self::from_points(points)
    }

    /// Uniform spacing `h = t_end / steps` away from `t_end`. From the first
    /// node whose remaining distance `d` satisfies `(1 - ratio) d < h`, gaps
    /// shrink geometrically (`d ← ratio·d`) until `d < min_gap`, then the grid closes at `t_end`.
    pub fn graded(t_end: T, steps: usize, ratio: T, min_gap: T) -> Result<Self> {
        if !(ratio > T::zero() && ratio < T::one()) {
            return Err(Error::InvalidParameter {
                name: "grading_ratio",
                reason: format!("must lie in (0, 1), got {ratio}"),
            });
        }
        if !(min_gap > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "min_gap",
                reason: format!("must be positive, got {min_gap}"),
            });
        }
        let uniform = Self::uniform(t_end, steps)?;
        let h = t_end / T::lit(steps as f64);
        let one_minus = T::one() - ratio;
        let mut points: Vec<T> = uniform
            .points
            .iter()
            .copied()
            .take_while(|&t| t < t_end && one_minus * (t_end - t + h) >= h)
            .collect();
        let last = *points.last().unwrap_or(&T::zero());
        if points.is_empty() {
            points.push(T::zero());
        }
        let mut d = t_end - last;
        loop {
            d = d * ratio;
            if d < min_gap {
                break;
            }
            points.push(t_end - d);
        }
        points.push(t_end);
        Self::from_points(points)
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn start(&self) -> T {
        self.points[0]
    }

    pub fn end(&self) -> T {
        *self.points.last().expect("grid has at least two nodes")
    }

    pub fn max_step(&self) -> T {
        self.points
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(T::zero(), T::max)
    }

    /// Splits every interval into `substeps` equal pieces.
    pub fn refined(&self, substeps: usize) -> Self {
        let substeps = substeps.max(1);
        let mut points = Vec::with_capacity((self.points.len() - 1) * substeps + 1);
        for w in self.points.windows(2) {
            let h = (w[1] - w[0]) / T::lit(substeps as f64);
            points.push(w[0]);
            for j in 1..substeps {
                points.push(w[0] + h * T::lit(j as f64));
            }
        }
        points.push(self.end());
        Self { points }
    }

    /// Refines each interval just enough that no step exceeds `max_step`.
    pub fn capped(&self, max_step: T) -> Self {
        let mut points = Vec::with_capacity(self.points.len());
        for w in self.points.windows(2) {
            let gap = w[1] - w[0];
            let pieces = (gap / max_step).ceil().to_usize().unwrap_or(1).max(1);
            let h = gap / T::lit(pieces as f64);
            points.push(w[0]);
            for j in 1..pieces {
                points.push(w[0] + h * T::lit(j as f64));
            }
        }
        points.push(self.end());
        Self { points }
    }

    /// Inserts extra interior nodes. Points outside the grid, or within a
    /// relative `1e-12` of an existing node, are skipped.
    pub fn with_points(&self, extra: &[T]) -> Self {
        let eps = T::lit(1e-12) * (self.end() - self.start());
        let mut points = self.points.clone();
        for &p in extra {
            if !(p > self.start() && p < self.end()) {
                continue;
            }
            let idx = points.partition_point(|&t| t < p);
            let near_prev = idx > 0 && (p - points[idx - 1]).abs() <= eps;
            let near_next = idx < points.len() && (points[idx] - p).abs() <= eps;
            if !near_prev && !near_next {
                points.insert(idx, p);
            }
        }
        Self { points }
    }

    /// Index of the node equal to `t`, if any.
    pub fn index_of(&self, t: T) -> Option<usize> {
        self.points
            .binary_search_by(|p| p.partial_cmp(&t).unwrap())
            .ok()
    }
}
