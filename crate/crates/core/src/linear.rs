//! Linear mode equations `v'' + c(t)² λ v = 0` and the regularised energy
//! estimate for coefficients whose derivative blows up at the horizon.
//!
//! For a frequency `μ` with `T μ^{1/(qs-s)} > 1` the coefficient is frozen
//! after `T - μ^{-1/(qs-s)}`; `α(t, μ)` pays for both the freezing error and
//! the variation of `c`, and the weighted energy
//! `E(t, μ) = (v'² + c*² μ² v²) μ^{2(σ-1)} exp(η μ^{1/s} - ∫α)` cannot grow.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::coefficient::{check_class_k, ClassKParams, ClassKReport, CoefficientPath};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::scalar::Real;
use crate::spectral::{gevrey_norm_sq, GevreyParams, ModeBasis, SpectralState};

/// Largest admissible value of `c_max · sqrt(λ) · Δt`.
pub const STABILITY_LIMIT: f64 = 0.5;

/// Solution of one mode equation on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeTrajectory<T> {
    /// Zero-based index into the basis.
    pub mode: usize,
    pub times: Vec<T>,
    pub v: Vec<T>,
    pub vdot: Vec<T>,
}

/// Rejects grids whose largest step breaks `c_max · sqrt(λ) · Δt ≤ 0.5`.
pub(crate) fn check_guard<T: Real>(grid: &TimeGrid<T>, c_max: T, lambda: T) -> Result<()> {
    let rate = c_max * lambda.sqrt();
    if rate <= T::zero() {
        return Ok(());
    }
    let required = T::lit(STABILITY_LIMIT) / rate;
    let (at, step) = grid.points().windows(2).map(|w| (w[0], w[1] - w[0])).fold(
        (T::zero(), T::zero()),
        |acc, x| if x.1 > acc.1 { x } else { acc },
    );
    // Relative slack absorbs rounding in grids built to sit exactly at the limit.
    if step > required * T::lit(1.0 + 1e-12) {
        return Err(Error::StabilityGuard {
            step: step.as_f64(),
            required: required.as_f64(),
            at: at.as_f64(),
        });
    }
    Ok(())
}

/// Classical fourth-order Runge–Kutta for `(v, v̇)' = (v̇, -c(t)² λ v)`.
///
/// Stage times are `t`, `t + h/2`, `t + h`; when the grid contains the path's
/// nodes the coefficient is linear inside every step and the local error is
/// `O(Δt⁵)`.
pub fn solve_mode<T: Real>(
    coeff: &CoefficientPath<T>,
    lambda: T,
    v0: T,
    v1: T,
    grid: &TimeGrid<T>,
) -> Result<ModeTrajectory<T>> {
    if !(lambda > T::zero()) {
        return Err(Error::InvalidParameter {
            name: "lambda",
            reason: format!("must be positive, got {lambda}"),
        });
    }
    if grid.start() < coeff.start() || grid.end() > coeff.end() {
        let t = if grid.start() < coeff.start() {
            grid.start()
        } else {
            grid.end()
        };
        return Err(Error::OutOfDomain {
            t: t.as_f64(),
            lo: coeff.start().as_f64(),
            hi: coeff.end().as_f64(),
        });
    }
    check_guard(grid, coeff.max_value(), lambda)?;

    let n = grid.len();
    let mut v = Vec::with_capacity(n);
    let mut vdot = Vec::with_capacity(n);
    v.push(v0);
    vdot.push(v1);
    if v0 == T::zero() && v1 == T::zero() {
        v.resize(n, T::zero());
        vdot.resize(n, T::zero());
        return Ok(ModeTrajectory {
            mode: 0,
            times: grid.points().to_vec(),
            v,
            vdot,
        });
    }

    let half = T::lit(0.5);
    let sixth = T::lit(1.0 / 6.0);
    let two = T::lit(2.0);
    let (mut x, mut y) = (v0, v1);
    for w in grid.points().windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let h = t1 - t0;
        let c0 = coeff.eval(t0)?;
        let cm = coeff.eval(t0 + half * h)?;
        let c1 = coeff.eval(t1)?;
        let (a0, am, a1) = (c0 * c0 * lambda, cm * cm * lambda, c1 * c1 * lambda);

        let k1x = y;
        let k1y = -a0 * x;
        let k2x = y + half * h * k1y;
        let k2y = -am * (x + half * h * k1x);
        let k3x = y + half * h * k2y;
        let k3y = -am * (x + half * h * k2x);
        let k4x = y + h * k3y;
        let k4y = -a1 * (x + h * k3x);

        x = x + h * sixth * (k1x + two * k2x + two * k3x + k4x);
        y = y + h * sixth * (k1y + two * k2y + two * k3y + k4y);
        v.push(x);
        vdot.push(y);
    }
    if v.iter().chain(&vdot).any(|z| !z.is_finite()) {
        return Err(Error::NonFinite {
            what: "mode trajectory",
        });
    }
    Ok(ModeTrajectory {
        mode: 0,
        times: grid.points().to_vec(),
        v,
        vdot,
    })
}

/// Solves every mode of `initial` on a shared grid, in parallel.
pub fn solve_all_modes<T: Real>(
    coeff: &CoefficientPath<T>,
    initial: &SpectralState<T>,
    grid: &TimeGrid<T>,
) -> Result<Vec<ModeTrajectory<T>>> {
    let basis = initial.basis();
    check_guard(
        grid,
        coeff.max_value(),
        basis.eigenvalues()[basis.count() - 1],
    )?;
    (0..basis.count())
        .into_par_iter()
        .map(|k| {
            let mut traj = solve_mode(
                coeff,
                basis.eigenvalues()[k],
                initial.position()[k],
                initial.velocity()[k],
                grid,
            )?;
            traj.mode = k;
            Ok(traj)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CStarBranch {
    /// `T μ^{1/(qs-s)} ≤ 1`: the coefficient is replaced by `c(T)`.
    LowFrequency,
    /// Before the freeze time: `c* = c`.
    Following,
    /// After the freeze time: `c*` stays at its value there.
    Frozen,
}

fn regularity_gap<T: Real>(params: &ClassKParams<T>, s: T) -> Result<T> {
    let r = params.q * s - s;
    if !(r > T::zero()) {
        return Err(Error::InvalidParameter {
            name: "s",
            reason: format!("need qs - s > 0, got {r}"),
        });
    }
    Ok(r)
}

/// Freeze time `T - μ^{-1/(qs-s)}`, or `None` in the low-frequency branch.
pub fn freeze_time<T: Real>(mu: T, params: &ClassKParams<T>, s: T) -> Result<Option<T>> {
    let r = regularity_gap(params, s)?;
    if !(mu > T::zero()) {
        return Err(Error::InvalidParameter {
            name: "mu",
            reason: format!("frequency must be positive, got {mu}"),
        });
    }
    if params.horizon * mu.powf(r.recip()) <= T::one() {
        Ok(None)
    } else {
        Ok(Some(params.horizon - mu.powf(-r.recip())))
    }
}

fn check_time<T: Real>(t: T, params: &ClassKParams<T>) -> Result<()> {
    if !(t >= T::zero() && t <= params.horizon) {
        return Err(Error::OutOfDomain {
            t: t.as_f64(),
            lo: 0.0,
            hi: params.horizon.as_f64(),
        });
    }
    Ok(())
}

pub fn c_star_branch<T: Real>(t: T, mu: T, params: &ClassKParams<T>, s: T) -> Result<CStarBranch> {
    check_time(t, params)?;
    Ok(match freeze_time(mu, params, s)? {
        None => CStarBranch::LowFrequency,
        Some(tf) if t <= tf => CStarBranch::Following,
        Some(_) => CStarBranch::Frozen,
    })
}

/// The regularised coefficient `c*(t, μ)`.
pub fn c_star<T: Real>(
    coeff: &CoefficientPath<T>,
    t: T,
    mu: T,
    params: &ClassKParams<T>,
    s: T,
) -> Result<T> {
    match c_star_branch(t, mu, params, s)? {
        CStarBranch::LowFrequency => coeff.eval(params.horizon),
        CStarBranch::Following => coeff.eval(t),
        CStarBranch::Frozen => coeff.eval(freeze_time(mu, params, s)?.expect("frozen branch")),
    }
}

fn alpha_with_slope<T: Real>(
    c: T,
    c_star: T,
    c_star_slope: T,
    mu: T,
    params: &ClassKParams<T>,
) -> T {
    let two = T::lit(2.0);
    two * params.m_upper / params.m0 * (c_star - c).abs() * mu + two * c_star_slope.abs() / c_star
}

/// `α(t, μ) = 2 M m₀⁻¹ |c* - c| μ + 2 |c*'| / c*`, with `c*'` the left-limit
/// slope of the path on the following branch and zero elsewhere.
pub fn alpha<T: Real>(
    coeff: &CoefficientPath<T>,
    t: T,
    mu: T,
    params: &ClassKParams<T>,
    s: T,
) -> Result<T> {
    let branch = c_star_branch(t, mu, params, s)?;
    let cs = c_star(coeff, t, mu, params, s)?;
    let slope = match branch {
        CStarBranch::Following => coeff.slope_left(t)?,
        _ => T::zero(),
    };
    Ok(alpha_with_slope(coeff.eval(t)?, cs, slope, mu, params))
}

/// `∫_a^b |d(τ)| dτ` for `d` linear between `d_a` and `d_b`.
fn abs_linear_integral<T: Real>(h: T, d_a: T, d_b: T) -> T {
    let half = T::lit(0.5);
    if d_a * d_b >= T::zero() {
        half * h * (d_a.abs() + d_b.abs())
    } else {
        half * h * (d_a * d_a + d_b * d_b) / (d_a.abs() + d_b.abs())
    }
}

/// Cumulative `∫_{t_0}^{t_i} α(τ, μ) dτ` on the nodes of `grid`.
///
/// Within each step `c*'` is taken from the midpoint and `|c* - c|` is
/// integrated as the modulus of a linear function, so the rule is exact
/// whenever the path's nodes and the freeze time are grid nodes.
pub fn alpha_integrals<T: Real>(
    coeff: &CoefficientPath<T>,
    grid: &TimeGrid<T>,
    mu: T,
    params: &ClassKParams<T>,
    s: T,
) -> Result<Vec<T>> {
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let gain = two * params.m_upper / params.m0 * mu;
    let mut acc = T::zero();
    let mut out = Vec::with_capacity(grid.len());
    out.push(acc);
    for w in grid.points().windows(2) {
        let (a, b) = (w[0], w[1]);
        let h = b - a;
        let mid = half * (a + b);
        let slope = match c_star_branch(mid, mu, params, s)? {
            CStarBranch::Following => coeff.slope_left(mid)?,
            _ => T::zero(),
        };
        let (cs_a, cs_b) = (
            c_star(coeff, a, mu, params, s)?,
            c_star(coeff, b, mu, params, s)?,
        );
        let d_a = cs_a - coeff.eval(a)?;
        let d_b = cs_b - coeff.eval(b)?;
        let gap = gain * abs_linear_integral(h, d_a, d_b);
        let rate = two * slope.abs() * half * h * (cs_a.recip() + cs_b.recip());
        acc = acc + gap + rate;
        out.push(acc);
    }
    Ok(out)
}

/// Quadrature grid for a single frequency on `[0, t_end]`: the path's nodes,
/// the freeze time, refined until `c_max μ Δt ≤ 0.5`.
pub fn quadrature_grid<T: Real>(
    coeff: &CoefficientPath<T>,
    t_end: T,
    mu: T,
    params: &ClassKParams<T>,
    s: T,
) -> Result<TimeGrid<T>> {
    let mut nodes: Vec<T> = coeff
        .times()
        .iter()
        .copied()
        .filter(|&t| t < t_end)
        .collect();
    nodes.push(t_end);
    let base = TimeGrid::from_points(nodes)?;
    let extra: Vec<T> = freeze_time(mu, params, s)?.into_iter().collect();
    let cap = T::lit(STABILITY_LIMIT) / (coeff.max_value() * mu);
    Ok(base.with_points(&extra).capped(cap))
}

/// `∫₀ᵗ α(τ, μ) dτ` by the composite trapezoid rule on [`quadrature_grid`].
pub fn alpha_integral<T: Real>(
    coeff: &CoefficientPath<T>,
    t: T,
    mu: T,
    params: &ClassKParams<T>,
    s: T,
) -> Result<T> {
    check_time(t, params)?;
    if coeff.start() != T::zero() {
        return Err(Error::OutOfDomain {
            t: 0.0,
            lo: coeff.start().as_f64(),
            hi: coeff.end().as_f64(),
        });
    }
    if t == T::zero() {
        return Ok(T::zero());
    }
    let grid = quadrature_grid(coeff, t, mu, params, s)?;
    Ok(*alpha_integrals(coeff, &grid, mu, params, s)?
        .last()
        .expect("grid is nonempty"))
}

/// The a-priori bound on `∫α` for one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaBound<T> {
    pub branch: CStarBranch,
    pub bound: T,
}

/// `4M² m₀⁻¹ T^{1-(qs-s)}` below the threshold, otherwise
/// `2K m₀⁻¹ μ^{1/s} / (q-1) + 4M² m₀⁻¹ μ^{1-1/(qs-s)}`.
pub fn alpha_integral_bound<T: Real>(
    mu: T,
    params: &ClassKParams<T>,
    s: T,
) -> Result<AlphaBound<T>> {
    let r = regularity_gap(params, s)?;
    let four_m2 = T::lit(4.0) * params.m_upper * params.m_upper / params.m0;
    Ok(match freeze_time(mu, params, s)? {
        None => AlphaBound {
            branch: CStarBranch::LowFrequency,
            bound: four_m2 * params.horizon.powf(T::one() - r),
        },
        Some(_) => AlphaBound {
            branch: CStarBranch::Following,
            bound: T::lit(2.0) * params.k0 / params.m0 * mu.powf(s.recip()) / (params.q - T::one())
                + four_m2 * mu.powf(T::one() - r.recip()),
        },
    })
}

/// `E(t_i, μ)` along a mode trajectory.
pub fn approximate_energy<T: Real>(
    traj: &ModeTrajectory<T>,
    coeff: &CoefficientPath<T>,
    params: &ClassKParams<T>,
    gp: &GevreyParams<T>,
    sigma: T,
    mu: T,
) -> Result<Vec<T>> {
    if traj.times.len() != traj.v.len() || traj.v.len() != traj.vdot.len() {
        return Err(Error::GridMismatch(
            "trajectory columns differ in length".into(),
        ));
    }
    if traj.times.first() != Some(&coeff.start()) && traj.times.first() != Some(&T::zero()) {
        return Err(Error::GridMismatch(
            "trajectory must start where the coefficient starts".into(),
        ));
    }
    let grid = TimeGrid::from_points(traj.times.clone())?;
    let integrals = alpha_integrals(coeff, &grid, mu, params, gp.s)?;
    let weight_log = gp.exponent(mu) + T::lit(2.0) * (sigma - T::one()) * mu.ln();
    let mu2 = mu * mu;
    let mut out = Vec::with_capacity(traj.times.len());
    for (i, &t) in traj.times.iter().enumerate() {
        let cs = c_star(coeff, t, mu, params, gp.s)?;
        let core = traj.vdot[i] * traj.vdot[i] + cs * cs * mu2 * traj.v[i] * traj.v[i];
        let log_k = weight_log - integrals[i];
        if log_k > T::max_exp_arg() {
            return Err(Error::Range {
                what: "energy weight k(t, mu)",
                log_value: log_k.as_f64(),
            });
        }
        out.push(core * log_k.exp());
    }
    Ok(out)
}

/// `2K m₀⁻¹ / (q-1) + 4M² m₀⁻¹`, the loss of Gevrey radius.
pub fn eta_threshold<T: Real>(params: &ClassKParams<T>) -> T {
    T::lit(2.0) * params.k0 / params.m0 / (params.q - T::one())
        + T::lit(4.0) * params.m_upper * params.m_upper / params.m0
}

/// `η' = η - (2K m₀⁻¹/(q-1) + 4M² m₀⁻¹)`; the sign is reported, not enforced.
pub fn eta_prime<T: Real>(gp: &GevreyParams<T>, params: &ClassKParams<T>) -> T {
    gp.eta - eta_threshold(params)
}

/// Linear Cauchy problem with a prescribed coefficient.
#[derive(Debug, Clone)]
pub struct LinearProblem<T> {
    pub basis: Arc<ModeBasis<T>>,
    pub coeff: CoefficientPath<T>,
    pub params: ClassKParams<T>,
    pub initial: SpectralState<T>,
    /// Sobolev order `σ ≥ 1` of the estimate.
    pub sigma: T,
    pub gevrey: GevreyParams<T>,
}

impl<T: Real> LinearProblem<T> {
    pub fn new(
        coeff: CoefficientPath<T>,
        params: ClassKParams<T>,
        initial: SpectralState<T>,
        sigma: T,
        gevrey: GevreyParams<T>,
    ) -> Result<Self> {
        if !(sigma >= T::one()) {
            return Err(Error::InvalidParameter {
                name: "sigma",
                reason: format!("must be at least 1, got {sigma}"),
            });
        }
        if coeff.start() != T::zero() {
            return Err(Error::GridMismatch(
                "coefficient must start at t = 0".into(),
            ));
        }
        if coeff.end() > params.horizon {
            return Err(Error::PathBeyondHorizon {
                end: coeff.end().as_f64(),
                horizon: params.horizon.as_f64(),
            });
        }
        Ok(Self {
            basis: Arc::clone(initial.basis()),
            coeff,
            params,
            initial,
            sigma,
            gevrey,
        })
    }

    /// Fails with [`Error::HypothesisUnmet`] unless `η` exceeds the threshold.
    pub fn check_eta(&self) -> Result<()> {
        let threshold = eta_threshold(&self.params);
        if !(self.gevrey.eta > threshold) {
            return Err(Error::HypothesisUnmet(format!(
                "eta = {} must exceed 2K/(m0 (q-1)) + 4M^2/m0 = {}",
                self.gevrey.eta, threshold
            )));
        }
        Ok(())
    }

    /// Fails unless `1 ≤ s < q/(q-1)`.
    pub fn check_order(&self) -> Result<()> {
        let (s, q) = (self.gevrey.s, self.params.q);
        let limit = q / (q - T::one());
        if !(s >= T::one() && s < limit) {
            return Err(Error::HypothesisUnmet(format!(
                "Gevrey order s = {s} must satisfy 1 <= s < q/(q-1) = {limit}"
            )));
        }
        Ok(())
    }

    /// Shared audit grid: path nodes refined `substeps` times, every mode's
    /// freeze time, and steps capped by the stability guard of the top mode.
    pub fn audit_grid(&self, substeps: usize) -> Result<TimeGrid<T>> {
        let base = TimeGrid::from_points(self.coeff.times().to_vec())?.refined(substeps);
        let mut freezes = Vec::new();
        for &mu in self.basis.frequencies() {
            if let Some(tf) = freeze_time(mu, &self.params, self.gevrey.s)? {
                freezes.push(tf);
            }
        }
        let cap = T::lit(STABILITY_LIMIT) / (self.coeff.max_value() * self.basis.max_frequency());
        Ok(base.with_points(&freezes).capped(cap))
    }

    pub fn solve(&self, grid: &TimeGrid<T>) -> Result<Vec<ModeTrajectory<T>>> {
        solve_all_modes(&self.coeff, &self.initial, grid)
    }

    /// Runs the full audit: class membership, per-mode energy monotonicity,
    /// `∫α` bounds, and the interval estimate.
    pub fn audit(&self, opts: &AuditOptions<T>) -> Result<LinearAudit<T>> {
        self.check_eta()?;
        self.check_order()?;
        let class_k = check_class_k(&self.coeff, &self.params, opts.bound_tol)?;
        if !class_k.passed {
            return Err(Error::HypothesisUnmet(format!(
                "coefficient is outside the class: bound margin {}, slope margin {}",
                class_k.worst_bound_margin, class_k.worst_slope_margin
            )));
        }

        let grid = self.audit_grid(opts.substeps)?;
        let trajectories = self.solve(&grid)?;
        let s = self.gevrey.s;
        let r = self.params.q * s - s;

        let modes: Vec<(ModeAudit<T>, Vec<T>)> = trajectories
            .par_iter()
            .map(|traj| {
                let mu = self.basis.frequencies()[traj.mode];
                let energy = approximate_energy(
                    traj,
                    &self.coeff,
                    &self.params,
                    &self.gevrey,
                    self.sigma,
                    mu,
                )?;
                let worst_energy_increase = worst_relative_increase(&energy);
                let integrals = alpha_integrals(&self.coeff, &grid, mu, &self.params, s)?;
                let alpha_total = *integrals.last().expect("nonempty");
                let bound = alpha_integral_bound(mu, &self.params, s)?;
                let lhs = mu.powf(T::one() - r.recip());
                let rhs = T::one() + mu.powf(s.recip());
                let audit = ModeAudit {
                    mode: traj.mode,
                    mu,
                    branch: bound.branch,
                    freeze_time: freeze_time(mu, &self.params, s)?,
                    alpha_integral: alpha_total,
                    alpha_bound: bound.bound,
                    alpha_ok: alpha_total <= bound.bound + opts.bound_tol,
                    worst_energy_increase,
                    energy_ok: worst_energy_increase <= opts.energy_tol,
                    weight_inequality_ok: lhs <= rhs,
                };
                Ok((audit, energy))
            })
            .collect::<Result<_>>()?;
        let (modes, energies): (Vec<_>, Vec<_>) = modes.into_iter().unzip();

        let g_interval = verify_g_interval(self, &trajectories)?;
        let passed = class_k.passed
            && g_interval.passed
            && modes
                .iter()
                .all(|m| m.alpha_ok && m.energy_ok && m.weight_inequality_ok);
        Ok(LinearAudit {
            report: LinearAuditReport {
                grid_nodes: grid.len(),
                eta: self.gevrey.eta,
                eta_threshold: eta_threshold(&self.params),
                eta_prime: eta_prime(&self.gevrey, &self.params),
                params: self.params,
                sigma: self.sigma,
                s,
                class_k,
                modes,
                g_interval,
                passed,
            },
            trajectories,
            energies,
        })
    }
}

/// `max_i (E_{i+1} - E_i) / E_i`, ignoring steps where both values vanish.
fn worst_relative_increase<T: Real>(energy: &[T]) -> T {
    let mut worst = T::neg_infinity();
    for w in energy.windows(2) {
        let rel = if w[0] > T::zero() {
            (w[1] - w[0]) / w[0]
        } else if w[1] > T::zero() {
            T::infinity()
        } else {
            T::zero()
        };
        worst = worst.max(rel);
    }
    if worst == T::neg_infinity() {
        T::zero()
    } else {
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditOptions<T> {
    /// Refinement of each path interval.
    pub substeps: usize,
    /// Largest tolerated relative one-step growth of `E`.
    pub energy_tol: T,
    /// Absolute slack on the `∫α` bounds and the class check.
    pub bound_tol: T,
}

impl<T: Real> Default for AuditOptions<T> {
    fn default() -> Self {
        Self {
            substeps: 4,
            energy_tol: T::lit(1e-6),
            bound_tol: T::lit(1e-6),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeAudit<T> {
    pub mode: usize,
    pub mu: T,
    pub branch: CStarBranch,
    pub freeze_time: Option<T>,
    pub alpha_integral: T,
    pub alpha_bound: T,
    pub alpha_ok: bool,
    pub worst_energy_increase: T,
    pub energy_ok: bool,
    /// `μ^{1-1/(qs-s)} ≤ 1 + μ^{1/s}`.
    pub weight_inequality_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GIntervalReport<T> {
    pub eta_prime: T,
    /// Natural log of `max{M², 1} e^{4M² m₀⁻¹ max{1, T^{1-(qs-s)}}}`.
    pub log_constant: T,
    /// `‖((-Δ)^{σ/2}u₀, (-Δ)^{(σ-1)/2}u₁)‖²` at radius `η`.
    pub data_norm_sq: T,
    pub worst_ratio: T,
    pub worst_time: T,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearAuditReport<T> {
    pub grid_nodes: usize,
    pub eta: T,
    pub eta_threshold: T,
    pub eta_prime: T,
    pub params: ClassKParams<T>,
    pub sigma: T,
    pub s: T,
    pub class_k: ClassKReport<T>,
    pub modes: Vec<ModeAudit<T>>,
    pub g_interval: GIntervalReport<T>,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct LinearAudit<T> {
    pub report: LinearAuditReport<T>,
    pub trajectories: Vec<ModeTrajectory<T>>,
    /// `E(t_i, μ_k)` per mode, on the trajectory grid.
    pub energies: Vec<Vec<T>>,
}

/// Checks, at every output time,
/// `m₀² ‖(-Δ)^{σ/2}u‖²_{η'} + ‖(-Δ)^{(σ-1)/2}∂ₜu‖²_{η'} ≤ C ‖data‖²_η`.
pub fn verify_g_interval<T: Real>(
    problem: &LinearProblem<T>,
    trajectories: &[ModeTrajectory<T>],
) -> Result<GIntervalReport<T>> {
    problem.check_eta()?;
    let basis = &problem.basis;
    if trajectories.len() != basis.count() {
        return Err(Error::LengthMismatch {
            what: "mode trajectories",
            expected: basis.count(),
            found: trajectories.len(),
        });
    }
    let times = &trajectories[0].times;
    if trajectories.iter().any(|t| &t.times != times) {
        return Err(Error::GridMismatch(
            "mode trajectories must share one time grid".into(),
        ));
    }
    let params = &problem.params;
    let sigma = problem.sigma;
    let s = problem.gevrey.s;
    let r = params.q * s - s;
    let eta_p = eta_prime(&problem.gevrey, params);
    let gp_prime = GevreyParams::new(s, eta_p)?;

    let log_constant = T::lit(2.0) * params.m_upper.max(T::one()).ln()
        + T::lit(4.0) * params.m_upper * params.m_upper / params.m0
            * T::one().max(params.horizon.powf(T::one() - r));
    let data_norm_sq = gevrey_norm_sq(problem.initial.position(), basis, &problem.gevrey, sigma)?
        + gevrey_norm_sq(
            problem.initial.velocity(),
            basis,
            &problem.gevrey,
            sigma - T::one(),
        )?;

    let m0_sq = params.m0 * params.m0;
    let mut worst_ratio = T::zero();
    let mut worst_time = times[0];
    let mut pos = vec![T::zero(); basis.count()];
    let mut vel = vec![T::zero(); basis.count()];
    for (i, &t) in times.iter().enumerate() {
        for (k, traj) in trajectories.iter().enumerate() {
            pos[k] = traj.v[i];
            vel[k] = traj.vdot[i];
        }
        let lhs = m0_sq * gevrey_norm_sq(&pos, basis, &gp_prime, sigma)?
            + gevrey_norm_sq(&vel, basis, &gp_prime, sigma - T::one())?;
        let ratio = if lhs == T::zero() {
            T::zero()
        } else if data_norm_sq == T::zero() {
            T::infinity()
        } else {
            (lhs.ln() - data_norm_sq.ln() - log_constant).exp()
        };
        if ratio > worst_ratio {
            worst_ratio = ratio;
            worst_time = t;
        }
    }
    Ok(GIntervalReport {
        eta_prime: eta_p,
        log_constant,
        data_norm_sq,
        worst_ratio,
        worst_time,
        passed: worst_ratio <= T::one(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn constant(c: f64, t_end: f64) -> CoefficientPath<f64> {
        CoefficientPath::constant(&TimeGrid::uniform(t_end, 1).unwrap(), c).unwrap()
    }

    #[test]
    fn cosine_mode() {
        let grid = TimeGrid::uniform(PI / 2.0, 2000).unwrap();
        let traj = solve_mode(&constant(1.0, PI / 2.0), 4.0, 1.0, 0.0, &grid).unwrap();
        assert_relative_eq!(*traj.v.last().unwrap(), -1.0, epsilon = 1e-10);
    }

    #[test]
    fn sine_mode_with_faster_speed() {
        let grid = TimeGrid::uniform(PI / 4.0, 2000).unwrap();
        let traj = solve_mode(&constant(2.0, PI / 4.0), 1.0, 0.0, 1.0, &grid).unwrap();
        assert_relative_eq!(*traj.v.last().unwrap(), 0.5, epsilon = 1e-10);
    }

    #[test]
    fn zero_data_stays_zero() {
        let grid = TimeGrid::uniform(1.0, 50).unwrap();
        let traj = solve_mode(&constant(1.3, 1.0), 9.0, 0.0, 0.0, &grid).unwrap();
        assert!(traj.v.iter().chain(&traj.vdot).all(|&x| x == 0.0));
    }

    #[test]
    fn guard_refuses_coarse_grid() {
        let grid = TimeGrid::uniform(1.0, 10).unwrap();
        let err = solve_mode(&constant(1.0, 1.0), 100.0, 1.0, 0.0, &grid).unwrap_err();
        match err {
            Error::StabilityGuard { required, .. } => assert_relative_eq!(required, 0.05),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn grid_outside_coefficient_is_error() {
        let grid = TimeGrid::uniform(2.0, 100).unwrap();
        assert!(matches!(
            solve_mode(&constant(1.0, 1.0), 1.0, 1.0, 0.0, &grid),
            Err(Error::OutOfDomain { .. })
        ));
    }

    fn ramp_path() -> CoefficientPath<f64> {
        CoefficientPath::from_fn(&TimeGrid::uniform(1.0, 100).unwrap(), |t| 1.0 + 0.2 * t).unwrap()
    }

    #[test]
    fn c_star_branches() {
        let params = ClassKParams::new(1.5, 2.0, 1.0, 1.0).unwrap();
        let p = ramp_path();
        // s = 2 so qs - s = 1: threshold T μ > 1, freeze at 1 - 1/μ.
        assert_eq!(
            c_star_branch(0.5, 1.0, &params, 2.0).unwrap(),
            CStarBranch::LowFrequency
        );
        assert_relative_eq!(c_star(&p, 0.2, 1.0, &params, 2.0).unwrap(), 1.2);
        assert_relative_eq!(c_star(&p, 0.5, 4.0, &params, 2.0).unwrap(), 1.1);
        assert_relative_eq!(c_star(&p, 0.9, 4.0, &params, 2.0).unwrap(), 1.15);
        assert_eq!(
            c_star_branch(0.9, 4.0, &params, 2.0).unwrap(),
            CStarBranch::Frozen
        );
        assert!(c_star(&p, 1.5, 4.0, &params, 2.0).is_err());
        assert!(freeze_time(4.0, &params, 0.0).is_err());
    }

    #[test]
    fn alpha_branches() {
        let params = ClassKParams::new(1.5, 2.0, 1.0, 1.0).unwrap();
        let flat = constant(1.4, 1.0);
        for t in [0.0, 0.3, 0.99] {
            for mu in [1.0, 3.0, 10.0] {
                assert_eq!(alpha(&flat, t, mu, &params, 2.0).unwrap(), 0.0);
            }
        }
        let p = ramp_path();
        // Following branch: only the slope term survives.
        assert_relative_eq!(
            alpha(&p, 0.5, 4.0, &params, 2.0).unwrap(),
            2.0 * 0.2 / 1.1,
            max_relative = 1e-12
        );
        // Frozen branch: only the freezing term survives.
        assert_relative_eq!(
            alpha(&p, 0.9, 4.0, &params, 2.0).unwrap(),
            2.0 * 2.0 * (1.18 - 1.15) * 4.0,
            max_relative = 1e-10
        );
    }

    #[test]
    fn eta_prime_examples() {
        let gp = GevreyParams::new(2.0, 5.0).unwrap();
        let params = ClassKParams::new(2.0, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(eta_prime(&gp, &params), 1.0);
        let gp = GevreyParams::new(2.0, 20.0).unwrap();
        let params = ClassKParams::new(2.0, 2.0, 1.0, 1.0).unwrap();
        assert_eq!(eta_prime(&gp, &params), 2.0);
        let gp = GevreyParams::new(2.0, eta_threshold(&params)).unwrap();
        assert_eq!(eta_prime(&gp, &params), 0.0);
    }

    #[test]
    fn constant_energy_is_conserved() {
        let params = ClassKParams::new(1.5, 1.5, 0.1, 1.0).unwrap();
        let path = constant(1.5, 1.0);
        let grid = TimeGrid::uniform(1.0, 2000).unwrap();
        let gp = GevreyParams::new(2.0, 1.0).unwrap();
        for mu in [1.0, 5.0] {
            let traj = solve_mode(&path, mu * mu, 0.3, -0.2, &grid).unwrap();
            let e = approximate_energy(&traj, &path, &params, &gp, 1.0, mu).unwrap();
            for x in &e {
                assert_relative_eq!(*x, e[0], max_relative = 1e-9);
            }
        }
        let zero = solve_mode(&path, 4.0, 0.0, 0.0, &grid).unwrap();
        let e = approximate_energy(&zero, &path, &params, &gp, 1.0, 2.0).unwrap();
        assert!(e.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn audit_refuses_small_eta() {
        let basis = Arc::new(ModeBasis::interval_dirichlet(2).unwrap());
        let initial = SpectralState::new(basis, vec![1.0, 0.0], vec![0.0, 0.0]).unwrap();
        let params = ClassKParams::new(1.5, 1.3, 0.1, 1.0).unwrap();
        let gp = GevreyParams::new(2.0, 1.0).unwrap();
        let problem = LinearProblem::new(constant(1.2, 1.0), params, initial, 1.0, gp).unwrap();
        assert!(matches!(
            problem.audit(&AuditOptions::default()),
            Err(Error::HypothesisUnmet(_))
        ));
    }

    #[test]
    fn constant_unit_speed_audit() {
        let basis = Arc::new(ModeBasis::interval_dirichlet(4).unwrap());
        let initial =
            SpectralState::new(basis, vec![0.5, 0.0, 0.1, 0.0], vec![0.0, 0.2, 0.0, 0.0]).unwrap();
        let params = ClassKParams::new(1.5, 1.0, 0.0, 1.0).unwrap();
        let gp = GevreyParams::new(2.0, 5.0).unwrap();
        let grid = TimeGrid::uniform(1.0, 50).unwrap();
        let path = CoefficientPath::constant(&grid, 1.0).unwrap();
        let problem = LinearProblem::new(path, params, initial, 1.0, gp).unwrap();
        let audit = problem.audit(&AuditOptions::default()).unwrap();
        assert!(audit.report.passed, "{:#?}", audit.report);
        // Constant e^{4} with M = m0 = 1.
        assert_relative_eq!(audit.report.g_interval.log_constant, 4.0);
        assert!(audit.report.g_interval.worst_ratio < 1.0);
    }

    #[test]
    fn zero_data_audit_passes() {
        let basis = Arc::new(ModeBasis::interval_dirichlet(3).unwrap());
        let initial = SpectralState::zeros(basis);
        let params = ClassKParams::new(1.5, 1.0, 0.0, 1.0).unwrap();
        let gp = GevreyParams::new(2.0, 5.0).unwrap();
        let path = CoefficientPath::constant(&TimeGrid::uniform(1.0, 10).unwrap(), 1.0).unwrap();
        let problem = LinearProblem::new(path, params, initial, 1.0, gp).unwrap();
        let audit = problem.audit(&AuditOptions::default()).unwrap();
        assert!(audit.report.passed);
        assert_eq!(audit.report.g_interval.worst_ratio, 0.0);
    }
}
