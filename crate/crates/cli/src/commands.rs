use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use kirchhoff_core::{
    check_hypotheses, check_theta_image, data_radius_log, direct_oracle, equicontinuity_margin,
    fixed_point_solve, gevrey_norm, sobolev_norm, sup_distance, theta_continuity_probe,
    AuditOptions, Certificate, ContinuityReport, Error, GevreyParams, ImageBounds,
    LinearAuditReport, LinearProblem, Method, SpectralState, ThetaImageReport,
};
use serde::Serialize;

use crate::scenario::{ConfigError, Scenario};

/// Process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success = 0,
    HypothesisUnmet = 2,
    NotConverged = 3,
    AuditFailed = 4,
    Usage = 64,
}

impl Status {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug)]
pub struct CliError {
    pub status: Status,
    pub message: String,
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self {
            status: Status::Usage,
            message: e.to_string(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::HypothesisUnmet(_) => Status::HypothesisUnmet,
            Error::StabilityGuard { .. } | Error::InvalidParameter { .. } => Status::Usage,
            _ => Status::AuditFailed,
        };
        let message = match &e {
            Error::StabilityGuard { required, .. } => {
                format!("grid.steps: {e}; use a step of at most {required:e}")
            }
            _ => e.to_string(),
        };
        Self { status, message }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError {
        status: Status::Usage,
        message: format!("{}: {e}", path.display()),
    }
}

/// Settings shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Context {
    pub out_dir: PathBuf,
    /// Overrides the command's primary tolerance.
    pub tol: Option<f64>,
}

/// What a command printed and how it ended.
#[derive(Debug)]
pub struct Outcome {
    pub status: Status,
    pub stdout: String,
    pub files: Vec<PathBuf>,
}

struct Csv {
    path: PathBuf,
    out: BufWriter<File>,
}

impl Csv {
    fn create(path: PathBuf, header: &[&str]) -> Result<Self, CliError> {
        let file = File::create(&path).map_err(|e| io_error(&path, e))?;
        let mut csv = Self {
            path,
            out: BufWriter::new(file),
        };
        csv.line(header.iter().map(|s| s.to_string()))?;
        Ok(csv)
    }

    fn line(&mut self, fields: impl IntoIterator<Item = String>) -> Result<(), CliError> {
        let row: Vec<String> = fields.into_iter().collect();
        writeln!(self.out, "{}", row.join(",")).map_err(|e| io_error(&self.path, e))
    }

    fn row(&mut self, values: &[f64]) -> Result<(), CliError> {
        self.line(values.iter().map(|v| format!("{v:e}")))
    }

    fn finish(mut self) -> Result<PathBuf, CliError> {
        self.out.flush().map_err(|e| io_error(&self.path, e))?;
        Ok(self.path)
    }
}

fn write_json<S: Serialize>(path: PathBuf, value: &S) -> Result<PathBuf, CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError {
        status: Status::AuditFailed,
        message: e.to_string(),
    })?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| io_error(&path, e))?;
    Ok(path)
}

fn output_rows(len: usize, stride: usize) -> impl Iterator<Item = usize> {
    (0..len).filter(move |&i| i % stride == 0 || i + 1 == len)
}

impl Context {
    fn file(&self, scenario: &Scenario, suffix: &str) -> PathBuf {
        self.out_dir.join(format!("{}-{suffix}", scenario.name))
    }

    fn prepare(&self) -> Result<(), CliError> {
        fs::create_dir_all(&self.out_dir).map_err(|e| io_error(&self.out_dir, e))
    }
}

fn certificate(scenario: &Scenario) -> Result<Certificate<f64>, CliError> {
    let m = scenario.certify.and_then(|c| c.m_upper);
    Ok(check_hypotheses(
        &scenario.initial_state(),
        scenario.gevrey.s,
        scenario.gevrey.eta,
        scenario.horizon,
        m,
    )?)
}

#[derive(Serialize)]
struct SimulateReport<'a> {
    name: &'a str,
    command: &'static str,
    modes: usize,
    horizon: f64,
    grid_nodes: usize,
    max_step: f64,
    h0: f64,
    final_hamiltonian: f64,
    max_relative_drift: f64,
    drift_tol: f64,
    drift_ok: bool,
    ctilde_initial: f64,
    ctilde_final: f64,
    ctilde_max: f64,
    slope_estimate_margin: f64,
    norm_eta: f64,
    norm_at_eta_prime: bool,
    certificate: String,
    passed: bool,
}

/// Runs the direct solver and writes the trajectory and a summary.
pub fn simulate(scenario: &Scenario, ctx: &Context) -> Result<Outcome, CliError> {
    ctx.prepare()?;
    let spec = scenario.simulate.unwrap_or_default();
    let drift_tol = ctx.tol.unwrap_or(spec.drift_tol);
    let run = scenario.run(Method::DirectOracle)?;
    let traj = direct_oracle(&run)?;
    let cert = certificate(scenario)?;
    let (norm_eta, norm_at_eta_prime) = match cert.eta_prime {
        Some(e) if e > 0.0 => (e, true),
        _ => (scenario.gevrey.eta, false),
    };
    let norm_params = GevreyParams::new(scenario.gevrey.s, norm_eta)?;

    let mut csv = Csv::create(
        ctx.file(scenario, "trajectory.csv"),
        &["t", "hamiltonian", "ctilde", "gevrey_norm"],
    )?;
    for i in output_rows(traj.times.len(), scenario.grid.output_stride) {
        let norm = state_norm(&traj.states[i], &norm_params)?;
        csv.row(&[traj.times[i], traj.hamiltonian[i], traj.ctilde[i], norm])?;
    }
    let trajectory = csv.finish()?;

    let drift = traj.relative_hamiltonian_drift();
    let drift_ok = drift <= drift_tol;
    let report = SimulateReport {
        name: &scenario.name,
        command: "simulate",
        modes: scenario.basis.modes,
        horizon: scenario.horizon,
        grid_nodes: run.grid.len(),
        max_step: run.grid.max_step(),
        h0: traj.hamiltonian[0],
        final_hamiltonian: *traj.hamiltonian.last().unwrap(),
        max_relative_drift: drift,
        drift_tol,
        drift_ok,
        ctilde_initial: traj.ctilde[0],
        ctilde_final: *traj.ctilde.last().unwrap(),
        ctilde_max: traj.ctilde.iter().copied().fold(f64::MIN, f64::max),
        slope_estimate_margin: kirchhoff_core::kirchhoff::slope_estimate_margin(&traj),
        norm_eta,
        norm_at_eta_prime,
        certificate: cert.verdict_line(),
        passed: drift_ok,
    };
    let summary = write_json(ctx.file(scenario, "report.json"), &report)?;
    Ok(Outcome {
        status: if drift_ok {
            Status::Success
        } else {
            Status::AuditFailed
        },
        stdout: format!("max relative drift {drift:e} (tol {drift_tol:e})\n"),
        files: vec![trajectory, summary],
    })
}

/// `sqrt(Σ e^{η μ^{1/s}} (μ³ u_k² + μ u̇_k²))`, formed from its logarithm.
fn state_norm(state: &SpectralState<f64>, gp: &GevreyParams<f64>) -> Result<f64, CliError> {
    let log = data_radius_log(state.position(), state.velocity(), state.basis(), gp)?;
    Ok((0.5 * log).exp())
}

#[derive(Serialize)]
struct Equicontinuity {
    k0: Option<f64>,
    q: f64,
    worst_margin: f64,
    tol: f64,
    passed: bool,
}

#[derive(Serialize)]
struct FixedPointOutput<'a> {
    name: &'a str,
    command: &'static str,
    tol: f64,
    max_iter: usize,
    iterations: usize,
    converged: bool,
    final_distance: Option<f64>,
    oracle_gap: f64,
    hamiltonian_drift: f64,
    certificate: &'a Certificate<f64>,
    image: Option<ThetaImageReport<f64>>,
    image_unchecked_reason: Option<&'static str>,
    equicontinuity: Equicontinuity,
    probe: Option<ContinuityReport<f64>>,
    passed: bool,
}

/// Picard iteration for the nonlinear coefficient, followed by the image
/// and equicontinuity audits of the converged coefficient.
pub fn fixedpoint(scenario: &Scenario, ctx: &Context) -> Result<Outcome, CliError> {
    ctx.prepare()?;
    let spec = scenario.fixedpoint.unwrap_or_default();
    let tol = ctx.tol.unwrap_or(spec.tol);
    let run = scenario.run(Method::FixedPoint)?;
    let report = fixed_point_solve(&run, tol, spec.max_iter)?;
    let oracle = direct_oracle(&run)?.ctilde_path()?;
    let oracle_gap = sup_distance(&report.final_coeff, &oracle, 0.0, scenario.horizon)?;
    let cert = certificate(scenario)?;

    let mut csv = Csv::create(
        ctx.file(scenario, "iterations.csv"),
        &["iteration", "distance"],
    )?;
    for (i, d) in report.distances.iter().enumerate() {
        csv.line([(i + 1).to_string(), format!("{d:e}")])?;
    }
    let iterations = csv.finish()?;
    let mut csv = Csv::create(ctx.file(scenario, "coefficient.csv"), &["t", "c"])?;
    let path = &report.final_coeff;
    for i in output_rows(path.times().len(), scenario.grid.output_stride) {
        csv.row(&[path.times()[i], path.values()[i]])?;
    }
    let coefficient = csv.finish()?;

    let bounds = ImageBounds::from_certificate(&cert);
    let (image, image_unchecked_reason) = if bounds.k0.is_finite() {
        let image = check_theta_image(&report.final_coeff, &bounds, spec.image_tol, Some(&cert))?;
        (Some(image), None)
    } else {
        (None, Some("K0 is not representable"))
    };
    let worst_margin = if bounds.k0.is_finite() {
        equicontinuity_margin(&report.final_coeff, &bounds.class_params()?)
    } else {
        f64::INFINITY
    };
    let equicontinuity = Equicontinuity {
        k0: cert.k0,
        q: cert.q,
        worst_margin,
        tol: spec.image_tol,
        passed: worst_margin >= -spec.image_tol,
    };
    let probe = match &scenario.probe {
        Some(p) if report.converged => Some(theta_continuity_probe(
            &run,
            &report.final_coeff,
            &scenario.probe_params(p)?,
            &p.deltas,
        )?),
        _ => None,
    };

    let image_ok = image.as_ref().is_some_and(|i| i.passed);
    let passed = report.converged && image_ok;
    let status = if !report.converged {
        Status::NotConverged
    } else if image_ok {
        Status::Success
    } else if !cert.passed {
        Status::HypothesisUnmet
    } else {
        Status::AuditFailed
    };
    let out = FixedPointOutput {
        name: &scenario.name,
        command: "fixedpoint",
        tol,
        max_iter: spec.max_iter,
        iterations: report.iterations,
        converged: report.converged,
        final_distance: report.distances.last().copied(),
        oracle_gap,
        hamiltonian_drift: report.final_solution.relative_hamiltonian_drift(),
        certificate: &cert,
        image,
        image_unchecked_reason,
        equicontinuity,
        probe,
        passed,
    };
    let summary = write_json(ctx.file(scenario, "fixedpoint.json"), &out)?;
    let stdout = format!(
        "{} after {} iterations; image bounds {}\n",
        if report.converged {
            "converged"
        } else {
            "not converged"
        },
        report.iterations,
        if image_ok { "pass" } else { "fail" },
    );
    Ok(Outcome {
        status,
        stdout,
        files: vec![iterations, coefficient, summary],
    })
}

#[derive(Serialize)]
struct AuditOutput<'a> {
    name: &'a str,
    command: &'static str,
    report: &'a LinearAuditReport<f64>,
}

/// Linear energy audit for a prescribed coefficient.
pub fn linear_audit(scenario: &Scenario, ctx: &Context) -> Result<Outcome, CliError> {
    ctx.prepare()?;
    let spec = scenario.audit_spec()?;
    let params = scenario.audit_params(spec)?;
    let coeff = scenario.audit_coefficient(spec)?;
    let gevrey = GevreyParams::new(scenario.gevrey.s, spec.eta.unwrap_or(scenario.gevrey.eta))?;
    let problem = LinearProblem::new(coeff, params, scenario.initial_state(), spec.sigma, gevrey)?;
    let opts = AuditOptions {
        substeps: spec.substeps,
        energy_tol: ctx.tol.unwrap_or(spec.energy_tol),
        bound_tol: spec.bound_tol,
    };
    let audit = problem.audit(&opts)?;

    let mut files = Vec::new();
    for (traj, energy) in audit.trajectories.iter().zip(&audit.energies) {
        let mut csv = Csv::create(
            ctx.file(scenario, &format!("mode-{}.csv", traj.mode + 1)),
            &["t", "v", "vdot", "energy"],
        )?;
        for i in output_rows(traj.times.len(), scenario.grid.output_stride) {
            csv.row(&[traj.times[i], traj.v[i], traj.vdot[i], energy[i]])?;
        }
        files.push(csv.finish()?);
    }
    let out = AuditOutput {
        name: &scenario.name,
        command: "linear-audit",
        report: &audit.report,
    };
    files.push(write_json(ctx.file(scenario, "audit.json"), &out)?);
    let r = &audit.report;
    let stdout = format!(
        "audit {}: worst interval ratio {:e}\n",
        if r.passed { "PASS" } else { "FAIL" },
        r.g_interval.worst_ratio
    );
    Ok(Outcome {
        status: if r.passed {
            Status::Success
        } else {
            Status::AuditFailed
        },
        stdout,
        files,
    })
}

#[derive(Serialize)]
struct CertifyOutput<'a> {
    name: &'a str,
    command: &'static str,
    verdict: String,
    certificate: &'a Certificate<f64>,
}

/// Evaluates the hypotheses of the existence theorem for the initial data.
pub fn certify(scenario: &Scenario, ctx: &Context) -> Result<Outcome, CliError> {
    ctx.prepare()?;
    let cert = certificate(scenario)?;
    let verdict = cert.verdict_line();
    let out = CertifyOutput {
        name: &scenario.name,
        command: "certify",
        verdict: verdict.clone(),
        certificate: &cert,
    };
    let file = write_json(ctx.file(scenario, "certificate.json"), &out)?;
    Ok(Outcome {
        status: if cert.passed {
            Status::Success
        } else {
            Status::HypothesisUnmet
        },
        stdout: format!("{verdict}\n"),
        files: vec![file],
    })
}

#[derive(Serialize)]
struct ComponentNorms {
    sobolev: Vec<(f64, f64)>,
    gevrey: Vec<(f64, Option<f64>)>,
}

#[derive(Serialize)]
struct NormsOutput<'a> {
    name: &'a str,
    command: &'static str,
    s: f64,
    eta: f64,
    position: ComponentNorms,
    velocity: ComponentNorms,
    dirichlet_energy: f64,
    kinetic_energy: f64,
    hamiltonian: f64,
    ctilde: f64,
    data_radius_log: f64,
}

const SOBOLEV_ORDERS: [f64; 5] = [0.0, 0.5, 1.0, 1.5, 2.0];
const GEVREY_ORDERS: [f64; 3] = [0.0, 0.5, 1.0];

fn component_norms(
    coeffs: &[f64],
    state: &SpectralState<f64>,
    gp: &GevreyParams<f64>,
) -> ComponentNorms {
    let basis = state.basis();
    ComponentNorms {
        sobolev: SOBOLEV_ORDERS
            .iter()
            .map(|&sigma| {
                (
                    sigma,
                    sobolev_norm(coeffs, basis, sigma).unwrap_or(f64::NAN),
                )
            })
            .collect(),
        gevrey: GEVREY_ORDERS
            .iter()
            .map(|&sigma| (sigma, gevrey_norm(coeffs, basis, gp, sigma).ok()))
            .collect(),
    }
}

/// Every norm and energy of the scenario's initial data.
pub fn norms(scenario: &Scenario, ctx: &Context) -> Result<Outcome, CliError> {
    ctx.prepare()?;
    let state = scenario.initial_state();
    let gp = scenario.gevrey_params();
    let out = NormsOutput {
        name: &scenario.name,
        command: "norms",
        s: gp.s,
        eta: gp.eta,
        position: component_norms(state.position(), &state, &gp),
        velocity: component_norms(state.velocity(), &state, &gp),
        dirichlet_energy: state.dirichlet_energy(),
        kinetic_energy: state.kinetic_energy(),
        hamiltonian: state.hamiltonian(),
        ctilde: kirchhoff_core::ctilde(&state),
        data_radius_log: data_radius_log(state.position(), state.velocity(), state.basis(), &gp)?,
    };
    let file = write_json(ctx.file(scenario, "norms.json"), &out)?;
    let mut stdout = String::new();
    for (label, c) in [("position", &out.position), ("velocity", &out.velocity)] {
        for (sigma, v) in &c.sobolev {
            stdout.push_str(&format!("{label} sobolev sigma={sigma}: {v:e}\n"));
        }
        for (sigma, v) in &c.gevrey {
            match v {
                Some(v) => stdout.push_str(&format!("{label} gevrey sigma={sigma}: {v:e}\n")),
                None => stdout.push_str(&format!("{label} gevrey sigma={sigma}: overflow\n")),
            }
        }
    }
    stdout.push_str(&format!(
        "dirichlet energy: {:e}\nkinetic energy: {:e}\nhamiltonian: {:e}\nctilde: {:e}\n",
        out.dirichlet_energy, out.kinetic_energy, out.hamiltonian, out.ctilde
    ));
    Ok(Outcome {
        status: Status::Success,
        stdout,
        files: vec![file],
    })
}
