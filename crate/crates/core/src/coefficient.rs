//! Time-dependent propagation speeds `c(t)` and the class-𝒦 audit.
//!
//! A path is a finite set of samples joined by straight lines. The class
//! `𝒦(q, M, K₀, T)` asks for `m₀ ≤ c ≤ M` and `|c'(t)| ≤ K₀ / (T - t)^q`.

use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::scalar::Real;

/// Parameters of the class `𝒦(q, M, K₀, T)` with lower bound `m₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassKParams<T> {
    pub q: T,
    /// Upper bound `M`.
    pub m_upper: T,
    /// Slope constant `K₀` (the `K` of the linear estimate).
    pub k0: T,
    /// Horizon `T`.
    pub horizon: T,
    /// Lower bound `m₀`; 1 for the class proper.
    pub m0: T,
}

impl<T: Real> ClassKParams<T> {
    pub fn new(q: T, m_upper: T, k0: T, horizon: T) -> Result<Self> {
        Self::with_lower_bound(q, m_upper, k0, horizon, T::one())
    }

    pub fn with_lower_bound(q: T, m_upper: T, k0: T, horizon: T, m0: T) -> Result<Self> {
        let bad = |name, reason: String| Err(Error::InvalidParameter { name, reason });
        if !(q > T::one()) {
            return bad("q", format!("must exceed 1, got {q}"));
        }
        if !(horizon > T::zero()) || !horizon.is_finite() {
            return bad("T", format!("must be positive, got {horizon}"));
        }
        if !(k0 >= T::zero()) || !k0.is_finite() {
            return bad("K0", format!("must be nonnegative, got {k0}"));
        }
        if !(m0 > T::zero()) {
            return bad("m0", format!("must be positive, got {m0}"));
        }
        if !(m_upper >= m0) || !m_upper.is_finite() {
            return bad("M", format!("must be at least m0 = {m0}, got {m_upper}"));
        }
        Ok(Self {
            q,
            m_upper,
            k0,
            horizon,
            m0,
        })
    }

    /// `K₀ / (T - t)^q`, infinite at `t = T`.
    pub fn slope_envelope(&self, t: T) -> T {
        let d = self.horizon - t;
        if d <= T::zero() {
            T::infinity()
        } else {
            self.k0 / d.powf(self.q)
        }
    }
}

/// Piecewise-linear coefficient `c(t)` on `[t_0, t_m]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientPath<T> {
    times: Vec<T>,
    values: Vec<T>,
}

impl<T: Real> CoefficientPath<T> {
    pub fn new(times: Vec<T>, values: Vec<T>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::EmptyPath);
        }
        if times.len() != values.len() {
            return Err(Error::LengthMismatch {
                what: "path values",
                expected: times.len(),
                found: values.len(),
            });
        }
        if times.iter().chain(&values).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                what: "coefficient path",
            });
        }
        if !times.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::GridMismatch(
                "path times must be strictly increasing".into(),
            ));
        }
        if values.iter().any(|&c| !(c > T::zero())) {
            return Err(Error::InvalidParameter {
                name: "c",
                reason: "propagation speed must be positive".into(),
            });
        }
        Ok(Self { times, values })
    }

    pub fn constant(grid: &TimeGrid<T>, c: T) -> Result<Self> {
        Self::new(grid.points().to_vec(), vec![c; grid.len()])
    }

    pub fn from_fn(grid: &TimeGrid<T>, f: impl Fn(T) -> T) -> Result<Self> {
        Self::new(
            grid.points().to_vec(),
            grid.points().iter().map(|&t| f(t)).collect(),
        )
    }

    /// Samples `c(t) = 1 + δ (2 + sin(((T - t)^{1-q} - T^{1-q}) / (q - 1)))`.
    ///
    /// Its derivative is `δ cos(·) (T - t)^{-q}`, so it sits in the class with
    /// `K₀ = δ` and `1 + δ ≤ c ≤ 1 + 3δ`. The formula has no limit at `T`;
    /// nodes at or past `T` repeat the previous sample.
    pub fn manufactured(grid: &TimeGrid<T>, delta: T, q: T, horizon: T) -> Result<Self> {
        let exponent = T::one() - q;
        let base = horizon.powf(exponent);
        let two = T::lit(2.0);
        let mut values = Vec::with_capacity(grid.len());
        for &t in grid.points() {
            let v = if t < horizon {
                let phase = ((horizon - t).powf(exponent) - base) / (q - T::one());
                T::one() + delta * (two + phase.sin())
            } else {
                *values.last().unwrap_or(&(T::one() + two * delta))
            };
            values.push(v);
        }
        Self::new(grid.points().to_vec(), values)
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn start(&self) -> T {
        self.times[0]
    }

    pub fn end(&self) -> T {
        *self.times.last().expect("path is never empty")
    }

    pub fn max_value(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn min_value(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    fn check_domain(&self, t: T) -> Result<()> {
        if t < self.start() || t > self.end() || !t.is_finite() {
            return Err(Error::OutOfDomain {
                t: t.as_f64(),
                lo: self.start().as_f64(),
                hi: self.end().as_f64(),
            });
        }
        Ok(())
    }

    /// Index `i` of the interval `[t_i, t_{i+1}]` that holds `t`, preferring
    /// the interval to the left at interior nodes.
    fn left_interval(&self, t: T) -> usize {
        let idx = self.times.partition_point(|&s| s < t);
        idx.saturating_sub(1)
            .min(self.times.len().saturating_sub(2))
    }

    fn right_interval(&self, t: T) -> usize {
        let idx = self.times.partition_point(|&s| s <= t);
        idx.saturating_sub(1)
            .min(self.times.len().saturating_sub(2))
    }

    fn interval_slope(&self, i: usize) -> T {
        if self.times.len() < 2 {
            return T::zero();
        }
        (self.values[i + 1] - self.values[i]) / (self.times[i + 1] - self.times[i])
    }

    pub fn eval(&self, t: T) -> Result<T> {
        self.check_domain(t)?;
        if self.times.len() == 1 {
            return Ok(self.values[0]);
        }
        let i = self.left_interval(t);
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let w = (t - t0) / (t1 - t0);
        Ok(self.values[i] + w * (self.values[i + 1] - self.values[i]))
    }

    /// Slope of the piece to the left of `t`; at the first node, the slope of
    /// the first piece.
    pub fn slope_left(&self, t: T) -> Result<T> {
        self.check_domain(t)?;
        Ok(self.interval_slope(self.left_interval(t)))
    }

    /// Slope of the piece to the right of `t`; at the last node, the slope of
    /// the last piece.
    pub fn slope_right(&self, t: T) -> Result<T> {
        self.check_domain(t)?;
        Ok(self.interval_slope(self.right_interval(t)))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "c"])?;
        for (t, c) in self.times.iter().zip(&self.values) {
            w.write_record([format!("{t:e}"), format!("{c:e}")])?;
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut times = Vec::new();
        let mut values = Vec::new();
        for record in r.records() {
            let record = record?;
            if record.len() != 2 {
                return Err(Error::Csv(format!(
                    "expected two columns (t, c), found {}",
                    record.len()
                )));
            }
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map(T::lit)
                    .map_err(|e| Error::Csv(format!("bad number `{s}`: {e}")))
            };
            times.push(parse(&record[0])?);
            values.push(parse(&record[1])?);
        }
        Self::new(times, values)
    }
}

/// Outcome of [`check_class_k`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassKReport<T> {
    pub min_value: T,
    pub max_value: T,
    /// `min_i min(c_i - m₀, M - c_i)`; negative means a bound is broken.
    pub worst_bound_margin: T,
    pub bounds_ok: bool,
    /// `min_i (K₀/(T - t_{i+1})^q - |slope_i|)`.
    pub worst_slope_margin: T,
    /// Interval `[t_i, t_{i+1}]` attaining the worst slope margin.
    pub worst_slope_interval: Option<(T, T)>,
    pub slope_ok: bool,
    pub passed: bool,
}

/// Audits membership of a sampled path in `𝒦(q, M, K₀, T)`.
///
/// Each chord slope is compared against the envelope at the right end of its
/// interval, where the envelope is largest.
pub fn check_class_k<T: Real>(
    path: &CoefficientPath<T>,
    params: &ClassKParams<T>,
    tol: T,
) -> Result<ClassKReport<T>> {
    if path.end() > params.horizon {
        return Err(Error::PathBeyondHorizon {
            end: path.end().as_f64(),
            horizon: params.horizon.as_f64(),
        });
    }
    if !(tol >= T::zero()) {
        return Err(Error::InvalidParameter {
            name: "tol",
            reason: format!("must be nonnegative, got {tol}"),
        });
    }
    let worst_bound_margin = path
        .values()
        .iter()
        .map(|&c| (c - params.m0).min(params.m_upper - c))
        .fold(T::infinity(), T::min);

    let mut worst_slope_margin = T::infinity();
    let mut worst_slope_interval = None;
    for (i, w) in path.times().windows(2).enumerate() {
        let slope = path.interval_slope(i).abs();
        let margin = params.slope_envelope(w[1]) - slope;
        if margin < worst_slope_margin {
            worst_slope_margin = margin;
            worst_slope_interval = Some((w[0], w[1]));
        }
    }

    let bounds_ok = worst_bound_margin >= -tol;
    let slope_ok = worst_slope_margin >= -tol;
    Ok(ClassKReport {
        min_value: path.min_value(),
        max_value: path.max_value(),
        worst_bound_margin,
        bounds_ok,
        worst_slope_margin,
        worst_slope_interval,
        slope_ok,
        passed: bounds_ok && slope_ok,
    })
}

/// `K₀/(q-1) · [(T - t2)^{1-q} - (T - t1)^{1-q}]`, the modulus of continuity
/// shared by every member of the class, for `0 ≤ t1 ≤ t2 < T`.
pub fn equicontinuity_gap<T: Real>(params: &ClassKParams<T>, t1: T, t2: T) -> Result<T> {
    if !(t2 < params.horizon) {
        return Err(Error::OutOfDomain {
            t: t2.as_f64(),
            lo: 0.0,
            hi: params.horizon.as_f64(),
        });
    }
    if !(t1 >= T::zero() && t1 <= t2) {
        return Err(Error::InvalidParameter {
            name: "t1",
            reason: format!("need 0 <= t1 <= t2, got t1 = {t1}, t2 = {t2}"),
        });
    }
    if t1 == t2 || params.k0 == T::zero() {
        return Ok(T::zero());
    }
    let e = T::one() - params.q;
    let gap = params.k0 / (params.q - T::one())
        * ((params.horizon - t2).powf(e) - (params.horizon - t1).powf(e));
    Ok(gap.max(T::zero()))
}

/// Smallest `equicontinuity_gap(t_i, t_j) - |c(t_j) - c(t_i)|` over all node
/// pairs `t_i < t_j < T`. Linear in the node count: with `G(t)` the
/// antiderivative of the envelope, the margin of a pair is
/// `min((G_j ∓ c_j) - (G_i ∓ c_i))`, so prefix maxima suffice.
///
/// Returns `+∞` when fewer than two nodes lie before `T` or `K₀` is infinite.
pub fn equicontinuity_margin<T: Real>(path: &CoefficientPath<T>, params: &ClassKParams<T>) -> T {
    if !params.k0.is_finite() {
        return T::infinity();
    }
    let e = T::one() - params.q;
    let scale = params.k0 / (params.q - T::one());
    let mut worst = T::infinity();
    let mut best_minus = T::neg_infinity();
    let mut best_plus = T::neg_infinity();
    for (&t, &c) in path.times().iter().zip(path.values()) {
        if !(t < params.horizon) {
            break;
        }
        let g = if params.k0 == T::zero() {
            T::zero()
        } else {
            scale * (params.horizon - t).powf(e)
        };
        worst = worst.min((g - c) - best_minus).min((g + c) - best_plus);
        best_minus = best_minus.max(g - c);
        best_plus = best_plus.max(g + c);
    }
    worst
}

/// `max |a(t) - b(t)|` over `[lo, hi]`. Both paths are piecewise linear, so
/// the maximum is attained on the merged node set.
pub fn sup_distance<T: Real>(
    a: &CoefficientPath<T>,
    b: &CoefficientPath<T>,
    lo: T,
    hi: T,
) -> Result<T> {
    if !(lo <= hi) {
        return Err(Error::InvalidParameter {
            name: "interval",
            reason: format!("empty interval [{lo}, {hi}]"),
        });
    }
    for p in [a, b] {
        if p.start() > lo || p.end() < hi {
            return Err(Error::OutOfDomain {
                t: if p.start() > lo {
                    lo.as_f64()
                } else {
                    hi.as_f64()
                },
                lo: p.start().as_f64(),
                hi: p.end().as_f64(),
            });
        }
    }
    let inside = |t: &&T| **t > lo && **t < hi;
    let mut worst = T::zero();
    let nodes = [lo, hi]
        .into_iter()
        .chain(a.times().iter().filter(inside).copied())
        .chain(b.times().iter().filter(inside).copied());
    for t in nodes {
        worst = worst.max((a.eval(t)? - b.eval(t)?).abs());
    }
    Ok(worst)
}
