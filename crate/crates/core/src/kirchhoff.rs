//! Nonlinear dynamics: `v_k'' + (1 + Σ_j λ_j v_j²) λ_k v_k = 0`.
//!
//! Two independent routes are provided. [`fixed_point_solve`] iterates the map
//! `Θ: c ↦ c̃ = sqrt(1 + ‖∇v‖²)`, where `v` solves the *linear* problem with
//! speed `c`. [`direct_oracle`] integrates the coupled system directly.

use std::sync::Arc;

use serde::Serialize;

use crate::certificate::Certificate;
use crate::coefficient::{check_class_k, sup_distance, ClassKParams, CoefficientPath};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::linear::{check_guard, solve_all_modes, ModeTrajectory};
use crate::scalar::Real;
use crate::spectral::{gevrey_norm, sobolev_norm, GevreyParams, ModeBasis, SpectralState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    FixedPoint,
    DirectOracle,
}

/// Nonlinear Cauchy problem on `[0, T]` together with its discretisation.
#[derive(Debug, Clone)]
pub struct KirchhoffRun<T> {
    pub initial: SpectralState<T>,
    pub horizon: T,
    pub gevrey: GevreyParams<T>,
    pub grid: TimeGrid<T>,
    pub method: Method,
}

impl<T: Real> KirchhoffRun<T> {
    pub fn new(
        initial: SpectralState<T>,
        gevrey: GevreyParams<T>,
        grid: TimeGrid<T>,
        method: Method,
    ) -> Result<Self> {
        if grid.start() != T::zero() {
            return Err(Error::GridMismatch("run grid must start at t = 0".into()));
        }
        Ok(Self {
            horizon: grid.end(),
            initial,
            gevrey,
            grid,
            method,
        })
    }

    pub fn basis(&self) -> &Arc<ModeBasis<T>> {
        self.initial.basis()
    }

    /// Solves with the configured method.
    pub fn solve(&self, tol: T, max_iter: usize) -> Result<Trajectory<T>> {
        match self.method {
            Method::DirectOracle => direct_oracle(self),
            Method::FixedPoint => Ok(fixed_point_solve(self, tol, max_iter)?.final_solution),
        }
    }
}

/// Time series of states with the Hamiltonian and `c̃` precomputed.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    pub times: Vec<T>,
    pub states: Vec<SpectralState<T>>,
    pub hamiltonian: Vec<T>,
    pub ctilde: Vec<T>,
}

impl<T: Real> Trajectory<T> {
    pub fn from_states(times: Vec<T>, states: Vec<SpectralState<T>>) -> Self {
        let hamiltonian = states.iter().map(SpectralState::hamiltonian).collect();
        let ctilde = states.iter().map(ctilde).collect();
        Self {
            times,
            states,
            hamiltonian,
            ctilde,
        }
    }

    /// Transposes per-mode solutions (all on one grid) into states.
    pub fn from_modes(basis: &Arc<ModeBasis<T>>, modes: &[ModeTrajectory<T>]) -> Result<Self> {
        if modes.len() != basis.count() {
            return Err(Error::LengthMismatch {
                what: "mode trajectories",
                expected: basis.count(),
                found: modes.len(),
            });
        }
        let times = modes[0].times.clone();
        let states = (0..times.len())
            .map(|i| {
                SpectralState::new(
                    Arc::clone(basis),
                    modes.iter().map(|m| m.v[i]).collect(),
                    modes.iter().map(|m| m.vdot[i]).collect(),
                )
            })
            .collect::<Result<_>>()?;
        Ok(Self::from_states(times, states))
    }

    /// `max_t |ℋ(t) - ℋ(0)| / max(ℋ(0), 1e-30)`.
    pub fn relative_hamiltonian_drift(&self) -> T {
        let h0 = self.hamiltonian[0];
        let scale = h0.max(T::lit(1e-30));
        self.hamiltonian
            .iter()
            .map(|&h| (h - h0).abs() / scale)
            .fold(T::zero(), T::max)
    }

    pub fn ctilde_path(&self) -> Result<CoefficientPath<T>> {
        CoefficientPath::new(self.times.clone(), self.ctilde.clone())
    }

    pub fn last(&self) -> &SpectralState<T> {
        self.states.last().expect("trajectory is nonempty")
    }
}

/// `c̃ = sqrt(1 + ‖∇v‖²)`.
pub fn ctilde<T: Real>(state: &SpectralState<T>) -> T {
    (T::one() + state.dirichlet_energy()).sqrt()
}

/// Exact `c̃'` from `c̃ c̃' = Σ λ_k v_k v̇_k`.
pub fn ctilde_rate<T: Real>(state: &SpectralState<T>) -> T {
    let dot: T = state
        .basis()
        .eigenvalues()
        .iter()
        .zip(state.position().iter().zip(state.velocity()))
        .map(|(&l, (&v, &w))| l * v * w)
        .sum();
    dot / ctilde(state)
}

/// `‖v‖_{Ḣ^{3/2}} ‖∂ₜv‖_{Ḣ^{1/2}}`, an upper bound for `|c̃'|` since `c̃ ≥ 1`.
pub fn ctilde_slope_bound<T: Real>(state: &SpectralState<T>) -> T {
    let basis = state.basis();
    let a = sobolev_norm(state.position(), basis, T::lit(1.5)).expect("state matches basis");
    let b = sobolev_norm(state.velocity(), basis, T::lit(0.5)).expect("state matches basis");
    a * b
}

/// The same bound measured in `γ^s_{η}`, which dominates the Sobolev form.
pub fn ctilde_slope_bound_gevrey<T: Real>(
    state: &SpectralState<T>,
    gp: &GevreyParams<T>,
) -> Result<T> {
    let basis = state.basis();
    Ok(gevrey_norm(state.position(), basis, gp, T::lit(1.5))?
        * gevrey_norm(state.velocity(), basis, gp, T::lit(0.5))?)
}

/// `Θ(c)` together with the linear solution that produced it.
pub fn theta_map_with_solution<T: Real>(
    coeff: &CoefficientPath<T>,
    run: &KirchhoffRun<T>,
) -> Result<(CoefficientPath<T>, Vec<ModeTrajectory<T>>)> {
    let modes = solve_all_modes(coeff, &run.initial, &run.grid)?;
    let lambdas = run.basis().eigenvalues();
    let values = (0..run.grid.len())
        .map(|i| {
            let d: T = modes
                .iter()
                .zip(lambdas)
                .map(|(m, &l)| l * m.v[i] * m.v[i])
                .sum();
            (T::one() + d).sqrt()
        })
        .collect();
    let image = CoefficientPath::new(run.grid.points().to_vec(), values)?;
    Ok((image, modes))
}

/// `Θ(c)(t_i) = sqrt(1 + Σ λ_k v_k(t_i)²)` on the run grid.
pub fn theta_map<T: Real>(
    coeff: &CoefficientPath<T>,
    run: &KirchhoffRun<T>,
) -> Result<CoefficientPath<T>> {
    Ok(theta_map_with_solution(coeff, run)?.0)
}

#[derive(Debug, Clone)]
pub struct FixedPointReport<T> {
    pub iterations: usize,
    /// `‖c^{(n+1)} - c^{(n)}‖_∞` per iteration.
    pub distances: Vec<T>,
    pub converged: bool,
    pub final_coeff: CoefficientPath<T>,
    /// Linear solution driven by the last input coefficient.
    pub final_solution: Trajectory<T>,
}

/// Picard iteration `c^{(n+1)} = Θ(c^{(n)})` from the constant
/// `c^{(0)} ≡ sqrt(1 + ‖∇u₀‖²)`. Non-convergence is reported, not raised.
pub fn fixed_point_solve<T: Real>(
    run: &KirchhoffRun<T>,
    tol: T,
    max_iter: usize,
) -> Result<FixedPointReport<T>> {
    if !(tol > T::zero()) {
        return Err(Error::InvalidParameter {
            name: "tol",
            reason: format!("must be positive, got {tol}"),
        });
    }
    if max_iter == 0 {
        return Err(Error::InvalidParameter {
            name: "max_iter",
            reason: "need at least one iteration".into(),
        });
    }
    let mut coeff = CoefficientPath::constant(&run.grid, ctilde(&run.initial))?;
    let mut distances = Vec::new();
    let mut converged = false;
    let mut solution = Vec::new();
    for _ in 0..max_iter {
        let (next, modes) = theta_map_with_solution(&coeff, run)?;
        let d = sup_distance(&next, &coeff, T::zero(), run.horizon)?;
        distances.push(d);
        coeff = next;
        solution = modes;
        if d < tol {
            converged = true;
            break;
        }
    }
    Ok(FixedPointReport {
        iterations: distances.len(),
        distances,
        converged,
        final_coeff: coeff,
        final_solution: Trajectory::from_modes(run.basis(), &solution)?,
    })
}

fn coupled_rhs<T: Real>(lambdas: &[T], x: &[T], y: &[T], dx: &mut [T], dy: &mut [T]) {
    let d: T = lambdas.iter().zip(x).map(|(&l, &v)| l * v * v).sum();
    let speed_sq = T::one() + d;
    for k in 0..x.len() {
        dx[k] = y[k];
        dy[k] = -speed_sq * lambdas[k] * x[k];
    }
}

/// Classical RK4 on the coupled Galerkin system.
pub fn direct_oracle<T: Real>(run: &KirchhoffRun<T>) -> Result<Trajectory<T>> {
    let basis = run.basis();
    let lambdas = basis.eigenvalues();
    let c_max = (T::one() + T::lit(2.0) * run.initial.hamiltonian()).sqrt();
    check_guard(&run.grid, c_max, lambdas[lambdas.len() - 1])?;

    let n = basis.count();
    let mut x = run.initial.position().to_vec();
    let mut y = run.initial.velocity().to_vec();
    let (mut k1x, mut k1y) = (vec![T::zero(); n], vec![T::zero(); n]);
    let (mut k2x, mut k2y) = (vec![T::zero(); n], vec![T::zero(); n]);
    let (mut k3x, mut k3y) = (vec![T::zero(); n], vec![T::zero(); n]);
    let (mut k4x, mut k4y) = (vec![T::zero(); n], vec![T::zero(); n]);
    let (mut sx, mut sy) = (vec![T::zero(); n], vec![T::zero(); n]);

    let half = T::lit(0.5);
    let sixth = T::lit(1.0 / 6.0);
    let two = T::lit(2.0);
    let mut states = Vec::with_capacity(run.grid.len());
    states.push(run.initial.clone());
    for w in run.grid.points().windows(2) {
        let h = w[1] - w[0];
        coupled_rhs(lambdas, &x, &y, &mut k1x, &mut k1y);
        for k in 0..n {
            sx[k] = x[k] + half * h * k1x[k];
            sy[k] = y[k] + half * h * k1y[k];
        }
        coupled_rhs(lambdas, &sx, &sy, &mut k2x, &mut k2y);
        for k in 0..n {
            sx[k] = x[k] + half * h * k2x[k];
            sy[k] = y[k] + half * h * k2y[k];
        }
        coupled_rhs(lambdas, &sx, &sy, &mut k3x, &mut k3y);
        for k in 0..n {
            sx[k] = x[k] + h * k3x[k];
            sy[k] = y[k] + h * k3y[k];
        }
        coupled_rhs(lambdas, &sx, &sy, &mut k4x, &mut k4y);
        for k in 0..n {
            x[k] = x[k] + h * sixth * (k1x[k] + two * k2x[k] + two * k3x[k] + k4x[k]);
            y[k] = y[k] + h * sixth * (k1y[k] + two * k2y[k] + two * k3y[k] + k4y[k]);
        }
        states.push(SpectralState::new(Arc::clone(basis), x.clone(), y.clone())?);
    }
    Ok(Trajectory::from_states(run.grid.points().to_vec(), states))
}

/// Constants the image of `Θ` must respect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImageBounds<T> {
    pub m_upper: T,
    pub k0: T,
    pub q: T,
    pub horizon: T,
}

impl<T: Real> ImageBounds<T> {
    pub fn from_certificate(cert: &Certificate<T>) -> Self {
        Self {
            m_upper: cert.m_upper,
            k0: cert.k0.unwrap_or(T::infinity()),
            q: cert.q,
            horizon: cert.horizon,
        }
    }

    pub fn class_params(&self) -> Result<ClassKParams<T>> {
        ClassKParams::new(self.q, self.m_upper, self.k0, self.horizon)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaImageReport<T> {
    pub bounds: ImageBounds<T>,
    pub min_value: T,
    pub max_value: T,
    /// `1 ≤ c̃`.
    pub lower_ok: bool,
    /// `c̃ ≤ M`.
    pub upper_ok: bool,
    /// Worst `K₀/(T - t_{i+1})^q - |slope_i|`.
    pub worst_slope_margin: T,
    pub slope_ok: bool,
    /// Largest measured chord slope.
    pub max_slope: T,
    /// `K₀ / T^q`.
    pub uniform_slope_bound: T,
    pub uniform_ok: bool,
    /// Codes of certificate hypotheses that failed, if a certificate was given.
    pub unmet_hypotheses: Vec<String>,
    pub passed: bool,
}

/// Checks `1 ≤ c̃ ≤ M`, `|c̃'| ≤ K₀/(T - t)^q` and the uniform `|c̃'| ≤ K₀/T^q`
/// on the samples of `coeff_out`.
pub fn check_theta_image<T: Real>(
    coeff_out: &CoefficientPath<T>,
    bounds: &ImageBounds<T>,
    tol: T,
    certificate: Option<&Certificate<T>>,
) -> Result<ThetaImageReport<T>> {
    let class = check_class_k(coeff_out, &bounds.class_params()?, tol)?;
    let max_slope = coeff_out
        .times()
        .windows(2)
        .zip(coeff_out.values().windows(2))
        .map(|(t, c)| ((c[1] - c[0]) / (t[1] - t[0])).abs())
        .fold(T::zero(), T::max);
    let uniform_slope_bound = bounds.k0 / bounds.horizon.powf(bounds.q);
    let lower_ok = class.min_value >= T::one() - tol;
    let upper_ok = class.max_value <= bounds.m_upper + tol;
    let uniform_ok = max_slope <= uniform_slope_bound + tol;
    let unmet_hypotheses = certificate
        .map(|c| c.failed_codes().into_iter().map(String::from).collect())
        .unwrap_or_default();
    Ok(ThetaImageReport {
        bounds: *bounds,
        min_value: class.min_value,
        max_value: class.max_value,
        lower_ok,
        upper_ok,
        worst_slope_margin: class.worst_slope_margin,
        slope_ok: class.slope_ok,
        max_slope,
        uniform_slope_bound,
        uniform_ok,
        unmet_hypotheses,
        passed: lower_ok && upper_ok && class.slope_ok && uniform_ok,
    })
}

/// Pointwise check of `|c̃'(t)| ≤ ‖v‖_{Ḣ^{3/2}} ‖∂ₜv‖_{Ḣ^{1/2}}`, using the
/// exact rate from [`ctilde_rate`]. Returns the worst `bound - |rate|`.
pub fn slope_estimate_margin<T: Real>(traj: &Trajectory<T>) -> T {
    traj.states
        .iter()
        .map(|s| ctilde_slope_bound(s) - ctilde_rate(s).abs())
        .fold(T::infinity(), T::min)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityEntry<T> {
    pub delta: T,
    /// `‖c_δ - c‖_∞`.
    pub coefficient_distance: T,
    /// `max_t ‖∂ₜw‖² + c(t)² ‖∇w‖²` with `w = v_δ - v`.
    pub max_energy: T,
    pub energy_over_delta_sq: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityReport<T> {
    pub entries: Vec<ContinuityEntry<T>>,
    /// Each entry's energy is at most the previous one's.
    pub monotone: bool,
}

/// Perturbs `coeff` by `δ sin²(π t / T)` for each `δ` and measures the
/// energy of the difference of the two linear solutions.
pub fn theta_continuity_probe<T: Real>(
    run: &KirchhoffRun<T>,
    coeff: &CoefficientPath<T>,
    params: &ClassKParams<T>,
    deltas: &[T],
) -> Result<ContinuityReport<T>> {
    let base = solve_all_modes(coeff, &run.initial, &run.grid)?;
    let lambdas = run.basis().eigenvalues();
    let speeds: Vec<T> = run
        .grid
        .points()
        .iter()
        .map(|&t| coeff.eval(t))
        .collect::<Result<_>>()?;

    let mut entries = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let perturbed = CoefficientPath::new(
            coeff.times().to_vec(),
            coeff
                .times()
                .iter()
                .zip(coeff.values())
                .map(|(&t, &c)| {
                    let b = (T::PI() * t / run.horizon).sin();
                    c + delta * b * b
                })
                .collect(),
        )?;
        let class = check_class_k(&perturbed, params, T::zero())?;
        if !class.passed {
            return Err(Error::HypothesisUnmet(format!(
                "perturbed coefficient (delta = {delta}) leaves the class"
            )));
        }
        let pert = solve_all_modes(&perturbed, &run.initial, &run.grid)?;
        let mut max_energy = T::zero();
        for (i, &c) in speeds.iter().enumerate() {
            let mut kinetic = T::zero();
            let mut gradient = T::zero();
            for k in 0..lambdas.len() {
                let w = pert[k].v[i] - base[k].v[i];
                let wdot = pert[k].vdot[i] - base[k].vdot[i];
                kinetic = kinetic + wdot * wdot;
                gradient = gradient + lambdas[k] * w * w;
            }
            max_energy = max_energy.max(kinetic + c * c * gradient);
        }
        entries.push(ContinuityEntry {
            delta,
            coefficient_distance: sup_distance(&perturbed, coeff, T::zero(), run.horizon)?,
            max_energy,
            energy_over_delta_sq: if delta == T::zero() {
                T::zero()
            } else {
                max_energy / (delta * delta)
            },
        });
    }
    let monotone = entries
        .windows(2)
        .all(|w| w[1].max_energy <= w[0].max_energy);
    Ok(ContinuityReport { entries, monotone })
}
