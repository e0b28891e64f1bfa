use std::fmt;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use kirchhoff_core::{
    ClassKParams, CoefficientPath, GevreyParams, KirchhoffRun, Method, ModeBasis, SpectralState,
    TimeGrid,
};
use serde::Deserialize;

/// A field-level configuration problem. `field` is a dotted path into the
/// scenario document.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.field, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub basis: BasisSpec,
    pub initial: InitialSpec,
    pub gevrey: GevreySpec,
    pub horizon: f64,
    pub grid: GridSpec,
    #[serde(default)]
    pub simulate: Option<SimulateSpec>,
    #[serde(default)]
    pub fixedpoint: Option<FixedPointSpec>,
    #[serde(default)]
    pub audit: Option<AuditSpec>,
    #[serde(default)]
    pub certify: Option<CertifySpec>,
    #[serde(default)]
    pub probe: Option<ProbeSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisKindSpec {
    Interval,
    Torus,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSpec {
    pub kind: BasisKindSpec,
    pub modes: usize,
    #[serde(default)]
    pub period: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub position: DataSpec,
    pub velocity: DataSpec,
}

/// Coefficients of one component of the initial data.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    Zero,
    /// Explicit list; missing trailing modes are zero.
    Coefficients(Vec<f64>),
    /// `a_k = A e^{-β μ_k^{1/s}}` for `first_mode ≤ k ≤ last_mode`.
    Family(FamilySpec),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub amplitude: f64,
    pub decay: f64,
    pub first_mode: usize,
    pub last_mode: usize,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GevreySpec {
    pub s: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub steps: usize,
    #[serde(default)]
    pub grading_ratio: Option<f64>,
    #[serde(default = "default_min_gap")]
    pub min_gap: f64,
    #[serde(default = "one")]
    pub output_stride: usize,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSpec {
    pub drift_tol: f64,
}

impl Default for SimulateSpec {
    fn default() -> Self {
        Self { drift_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedPointSpec {
    #[serde(default = "default_fixed_point_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_image_tol")]
    pub image_tol: f64,
}

impl Default for FixedPointSpec {
    fn default() -> Self {
        Self {
            tol: default_fixed_point_tol(),
            max_iter: default_max_iter(),
            image_tol: default_image_tol(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditSpec {
    #[serde(default = "one_f64")]
    pub sigma: f64,
    #[serde(default = "one_f64")]
    pub m0: f64,
    pub m_upper: f64,
    pub k: f64,
    pub q: f64,
    /// Defaults to `gevrey.eta`.
    #[serde(default)]
    pub eta: Option<f64>,
    pub coefficient: CoefficientSpec,
    #[serde(default = "default_substeps")]
    pub substeps: usize,
    #[serde(default = "default_audit_tol")]
    pub energy_tol: f64,
    #[serde(default = "default_audit_tol")]
    pub bound_tol: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientSpec {
    /// `1 + δ(2 + sin(((T - t)^{1-q} - T^{1-q})/(q - 1)))` with the audit's `q`.
    Manufactured {
        delta: f64,
    },
    Constant {
        value: f64,
    },
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifySpec {
    #[serde(default)]
    pub m_upper: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    pub deltas: Vec<f64>,
    pub m_upper: f64,
    pub k0: f64,
    /// Defaults to `1 + 1/s`.
    #[serde(default)]
    pub q: Option<f64>,
}

fn one() -> usize {
    1
}

fn one_f64() -> f64 {
    1.0
}

fn default_min_gap() -> f64 {
    1e-6
}

fn default_fixed_point_tol() -> f64 {
    1e-10
}

fn default_max_iter() -> usize {
    30
}

fn default_image_tol() -> f64 {
    1e-8
}

fn default_substeps() -> usize {
    4
}

fn default_audit_tol() -> f64 {
    1e-6
}

fn check(ok: bool, field: &str, message: impl Into<String>) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::new(field, message))
    }
}

fn positive(x: f64, field: &str) -> Result<(), ConfigError> {
    check(
        x.is_finite() && x > 0.0,
        field,
        format!("must be finite and > 0, got {x}"),
    )
}

fn finite(x: f64, field: &str) -> Result<(), ConfigError> {
    check(x.is_finite(), field, format!("must be finite, got {x}"))
}

impl Scenario {
    /// Reads, parses and validates a scenario file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| ConfigError::new("", e.to_string()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            let field = if field == "." || field == "?" {
                String::new()
            } else {
                field
            };
            ConfigError::new(field, e.into_inner().to_string())
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        check(
            !self.name.is_empty()
                && self
                    .name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_'),
            "name",
            "must be a nonempty string of letters, digits, '-' or '_'",
        )?;
        check(self.basis.modes >= 1, "basis.modes", "must be at least 1")?;
        match (self.basis.kind, self.basis.period) {
            (BasisKindSpec::Torus, Some(p)) => positive(p, "basis.period")?,
            (BasisKindSpec::Torus, None) => {
                return Err(ConfigError::new(
                    "basis.period",
                    "required for the torus basis",
                ))
            }
            (BasisKindSpec::Interval, Some(_)) => {
                return Err(ConfigError::new(
                    "basis.period",
                    "only allowed for the torus basis",
                ))
            }
            (BasisKindSpec::Interval, None) => {}
        }
        check(
            self.gevrey.s.is_finite() && self.gevrey.s > 1.0,
            "gevrey.s",
            format!("must be finite and > 1, got {}", self.gevrey.s),
        )?;
        positive(self.gevrey.eta, "gevrey.eta")?;
        positive(self.horizon, "horizon")?;
        self.validate_data(&self.initial.position, "initial.position")?;
        self.validate_data(&self.initial.velocity, "initial.velocity")?;
        check(self.grid.steps >= 1, "grid.steps", "must be at least 1")?;
        check(
            self.grid.output_stride >= 1,
            "grid.output_stride",
            "must be at least 1",
        )?;
        positive(self.grid.min_gap, "grid.min_gap")?;
        if let Some(r) = self.grid.grading_ratio {
            check(
                r > 0.0 && r < 1.0,
                "grid.grading_ratio",
                format!("must lie in (0, 1), got {r}"),
            )?;
        }
        if let Some(sim) = &self.simulate {
            positive(sim.drift_tol, "simulate.drift_tol")?;
        }
        if let Some(fp) = &self.fixedpoint {
            positive(fp.tol, "fixedpoint.tol")?;
            positive(fp.image_tol, "fixedpoint.image_tol")?;
            check(
                fp.max_iter >= 1,
                "fixedpoint.max_iter",
                "must be at least 1",
            )?;
        }
        if let Some(a) = &self.audit {
            check(
                a.sigma.is_finite() && a.sigma >= 1.0,
                "audit.sigma",
                format!("must be finite and >= 1, got {}", a.sigma),
            )?;
            positive(a.m0, "audit.m0")?;
            check(
                a.m_upper.is_finite() && a.m_upper >= a.m0,
                "audit.m_upper",
                format!("must be finite and >= audit.m0, got {}", a.m_upper),
            )?;
            check(
                a.k.is_finite() && a.k >= 0.0,
                "audit.k",
                format!("must be finite and >= 0, got {}", a.k),
            )?;
            check(
                a.q.is_finite() && a.q > 1.0,
                "audit.q",
                format!("must be finite and > 1, got {}", a.q),
            )?;
            if let Some(eta) = a.eta {
                positive(eta, "audit.eta")?;
            }
            check(a.substeps >= 1, "audit.substeps", "must be at least 1")?;
            positive(a.energy_tol, "audit.energy_tol")?;
            positive(a.bound_tol, "audit.bound_tol")?;
            match a.coefficient {
                CoefficientSpec::Manufactured { delta } => {
                    check(
                        delta.is_finite() && delta >= 0.0,
                        "audit.coefficient.manufactured.delta",
                        format!("must be finite and >= 0, got {delta}"),
                    )?;
                }
                CoefficientSpec::Constant { value } => {
                    positive(value, "audit.coefficient.constant.value")?;
                }
            }
        }
        if let Some(c) = &self.certify {
            if let Some(m) = c.m_upper {
                positive(m, "certify.m_upper")?;
            }
        }
        if let Some(p) = &self.probe {
            check(!p.deltas.is_empty(), "probe.deltas", "must not be empty")?;
            for (i, &d) in p.deltas.iter().enumerate() {
                finite(d, &format!("probe.deltas[{i}]"))?;
            }
            positive(p.m_upper, "probe.m_upper")?;
            check(
                p.k0.is_finite() && p.k0 >= 0.0,
                "probe.k0",
                format!("must be finite and >= 0, got {}", p.k0),
            )?;
            if let Some(q) = p.q {
                check(
                    q.is_finite() && q > 1.0,
                    "probe.q",
                    format!("must be finite and > 1, got {q}"),
                )?;
            }
        }
        Ok(())
    }

    fn validate_data(&self, spec: &DataSpec, field: &str) -> Result<(), ConfigError> {
        let n = self.basis.modes;
        match spec {
            DataSpec::Zero => Ok(()),
            DataSpec::Coefficients(c) => {
                check(
                    c.len() <= n,
                    &format!("{field}.coefficients"),
                    format!("has {} entries but basis.modes is {n}", c.len()),
                )?;
                for (i, &x) in c.iter().enumerate() {
                    finite(x, &format!("{field}.coefficients[{i}]"))?;
                }
                Ok(())
            }
            DataSpec::Family(f) => {
                let field = format!("{field}.family");
                finite(f.amplitude, &format!("{field}.amplitude"))?;
                check(
                    f.decay.is_finite() && f.decay >= 0.0,
                    &format!("{field}.decay"),
                    format!("must be finite and >= 0, got {}", f.decay),
                )?;
                check(
                    f.first_mode >= 1,
                    &format!("{field}.first_mode"),
                    "must be at least 1",
                )?;
                check(
                    f.first_mode <= f.last_mode && f.last_mode <= n,
                    &format!("{field}.last_mode"),
                    format!(
                        "must satisfy first_mode <= last_mode <= basis.modes = {n}, got {}",
                        f.last_mode
                    ),
                )
            }
        }
    }

    pub fn basis(&self) -> Arc<ModeBasis<f64>> {
        let b = match self.basis.kind {
            BasisKindSpec::Interval => ModeBasis::interval_dirichlet(self.basis.modes),
            BasisKindSpec::Torus => {
                ModeBasis::torus(self.basis.modes, self.basis.period.unwrap_or(0.0))
            }
        };
        Arc::new(b.expect("validated basis"))
    }

    fn coefficients(&self, spec: &DataSpec, basis: &ModeBasis<f64>) -> Vec<f64> {
        let n = basis.count();
        match spec {
            DataSpec::Zero => vec![0.0; n],
            DataSpec::Coefficients(c) => {
                let mut out = c.clone();
                out.resize(n, 0.0);
                out
            }
            DataSpec::Family(f) => basis
                .frequencies()
                .iter()
                .enumerate()
                .map(|(i, &mu)| {
                    if (f.first_mode..=f.last_mode).contains(&(i + 1)) {
                        f.amplitude * (-f.decay * mu.powf(1.0 / self.gevrey.s)).exp()
                    } else {
                        0.0
                    }
                })
                .collect(),
        }
    }

    pub fn initial_state(&self) -> SpectralState<f64> {
        let basis = self.basis();
        let u0 = self.coefficients(&self.initial.position, &basis);
        let u1 = self.coefficients(&self.initial.velocity, &basis);
        SpectralState::new(basis, u0, u1).expect("validated data")
    }

    pub fn gevrey_params(&self) -> GevreyParams<f64> {
        GevreyParams::new(self.gevrey.s, self.gevrey.eta).expect("validated gevrey")
    }

    pub fn time_grid(&self) -> Result<TimeGrid<f64>, ConfigError> {
        let g = &self.grid;
        match g.grading_ratio {
            None => TimeGrid::uniform(self.horizon, g.steps),
            Some(r) => TimeGrid::graded(self.horizon, g.steps, r, g.min_gap),
        }
        .map_err(|e| ConfigError::new("grid", e.to_string()))
    }

    pub fn run(&self, method: Method) -> Result<KirchhoffRun<f64>, ConfigError> {
        KirchhoffRun::new(
            self.initial_state(),
            self.gevrey_params(),
            self.time_grid()?,
            method,
        )
        .map_err(|e| ConfigError::new("grid", e.to_string()))
    }

    pub fn audit_spec(&self) -> Result<&AuditSpec, ConfigError> {
        self.audit
            .as_ref()
            .ok_or_else(|| ConfigError::new("audit", "section required for linear-audit"))
    }

    pub fn audit_params(&self, audit: &AuditSpec) -> Result<ClassKParams<f64>, ConfigError> {
        ClassKParams::with_lower_bound(audit.q, audit.m_upper, audit.k, self.horizon, audit.m0)
            .map_err(|e| ConfigError::new("audit", e.to_string()))
    }

    pub fn audit_coefficient(
        &self,
        audit: &AuditSpec,
    ) -> Result<CoefficientPath<f64>, ConfigError> {
        let grid = self.time_grid()?;
        match audit.coefficient {
            CoefficientSpec::Manufactured { delta } => {
                CoefficientPath::manufactured(&grid, delta, audit.q, self.horizon)
            }
            CoefficientSpec::Constant { value } => CoefficientPath::constant(&grid, value),
        }
        .map_err(|e| ConfigError::new("audit.coefficient", e.to_string()))
    }

    pub fn probe_params(&self, probe: &ProbeSpec) -> Result<ClassKParams<f64>, ConfigError> {
        let q = probe.q.unwrap_or(1.0 + 1.0 / self.gevrey.s);
        ClassKParams::new(q, probe.m_upper, probe.k0, self.horizon)
            .map_err(|e| ConfigError::new("probe", e.to_string()))
    }
}
