//! Spectral simulation of the Kirchhoff equation
//! `∂ₜ²u - (1 + ∫|∇u|²) Δu = 0` together with audits of the Gevrey-class
//! energy estimates, coefficient-class bounds and fixed-point machinery
//! behind its well-posedness.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the scalar to `f64` or `f32` for convenience.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificate;
pub mod coefficient;
pub mod error;
pub mod grid;
pub mod kirchhoff;
pub mod linear;
pub mod scalar;
pub mod spectral;

pub use certificate::{
    check_hypotheses, data_radius, data_radius_log, eta0, eta0_log, k0, minimal_m, q_from_s,
    Certificate, Verdict,
};
pub use coefficient::{
    check_class_k, equicontinuity_gap, equicontinuity_margin, sup_distance, ClassKParams,
    ClassKReport, CoefficientPath,
};
pub use error::{Error, Result};
pub use grid::TimeGrid;
pub use kirchhoff::{
    check_theta_image, ctilde, ctilde_rate, ctilde_slope_bound, direct_oracle, fixed_point_solve,
    theta_continuity_probe, theta_map, ContinuityReport, FixedPointReport, ImageBounds,
    KirchhoffRun, Method, ThetaImageReport, Trajectory,
};
pub use linear::{
    alpha_integral, alpha_integral_bound, approximate_energy, c_star, eta_prime, solve_all_modes,
    solve_mode, verify_g_interval, AuditOptions, CStarBranch, LinearAudit, LinearAuditReport,
    LinearProblem, ModeTrajectory,
};
pub use scalar::Real;
pub use spectral::{
    gevrey_norm, gevrey_norm_sq, sobolev_norm, BasisKind, GevreyParams, ModeBasis, SpectralState,
};

pub type ModeBasis64 = ModeBasis<f64>;
pub type SpectralState64 = SpectralState<f64>;
pub type GevreyParams64 = GevreyParams<f64>;
pub type TimeGrid64 = TimeGrid<f64>;
pub type CoefficientPath64 = CoefficientPath<f64>;
pub type ClassKParams64 = ClassKParams<f64>;
pub type LinearProblem64 = LinearProblem<f64>;
pub type KirchhoffRun64 = KirchhoffRun<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type Certificate64 = Certificate<f64>;

pub type ModeBasis32 = ModeBasis<f32>;
pub type SpectralState32 = SpectralState<f32>;
pub type GevreyParams32 = GevreyParams<f32>;
pub type TimeGrid32 = TimeGrid<f32>;
pub type CoefficientPath32 = CoefficientPath<f32>;
pub type KirchhoffRun32 = KirchhoffRun<f32>;
