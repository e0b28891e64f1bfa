//! The acceptance suite: one line per criterion, nonzero exit if any fails.

mod common;

use std::process::ExitCode;

use kirchhoff_cli::Scenario;
use kirchhoff_core::{
    check_hypotheses, check_theta_image, ctilde, direct_oracle, equicontinuity_margin, eta0, k0,
    q_from_s, solve_mode, theta_continuity_probe, theta_map, AuditOptions, CoefficientPath,
    ImageBounds, LinearProblem, Method, ModeBasis, SpectralState, TimeGrid,
};
use kirchhoff_core::{fixed_point_solve, GevreyParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fixed_point_scenarios() -> Vec<Scenario> {
    common::scenario_files()
        .iter()
        .map(|p| common::load(p))
        .filter(|s| s.fixedpoint.is_some())
        .collect()
}

fn hamiltonian_conservation() -> Outcome {
    let mut worst = 0.0f64;
    for name in ["conservation-single", "conservation-multi"] {
        let s = common::example(name);
        let run = s.run(Method::DirectOracle).map_err(|e| e.to_string())?;
        ensure(s.basis.modes == 32, || {
            format!("{name}: N = {}", s.basis.modes)
        })?;
        ensure(s.horizon == 1.0, || format!("{name}: T = {}", s.horizon))?;
        let dt = run.grid.max_step();
        ensure((dt - 1e-4).abs() < 1e-15, || format!("{name}: dt = {dt}"))?;
        let h0 = run.initial.hamiltonian();
        ensure((1e-4..=1.0).contains(&h0), || {
            format!("{name}: H(0) = {h0}")
        })?;
        let drift = direct_oracle(&run)
            .map_err(|e| e.to_string())?
            .relative_hamiltonian_drift();
        ensure(drift <= 1e-6, || format!("{name}: drift {drift:e}"))?;
        worst = worst.max(drift);
    }
    Ok(format!("worst relative drift {worst:e}"))
}

fn fixed_point_matches_oracle() -> Outcome {
    let mut summary = Vec::new();
    for s in fixed_point_scenarios() {
        let run = s.run(Method::FixedPoint).map_err(|e| e.to_string())?;
        let report = fixed_point_solve(&run, 1e-10, 30).map_err(|e| e.to_string())?;
        ensure(report.converged && report.iterations <= 30, || {
            format!("{}: not converged in 30 iterations", s.name)
        })?;
        let oracle = direct_oracle(&run).map_err(|e| e.to_string())?;
        let gap = report
            .final_coeff
            .values()
            .iter()
            .zip(&oracle.states)
            .map(|(c, st)| (c - (1.0 + st.dirichlet_energy()).sqrt()).abs())
            .fold(0.0, f64::max);
        ensure(gap <= 1e-6, || format!("{}: gap {gap:e}", s.name))?;
        summary.push(format!(
            "{} ({} it, gap {gap:.1e})",
            s.name, report.iterations
        ));
    }
    Ok(summary.join(", "))
}

fn theta_image_bounds() -> Outcome {
    let mut checked = Vec::new();
    for s in fixed_point_scenarios() {
        let run = s.run(Method::FixedPoint).map_err(|e| e.to_string())?;
        let cert = check_hypotheses(&run.initial, s.gevrey.s, s.gevrey.eta, s.horizon, None)
            .map_err(|e| e.to_string())?;
        if !cert.passed {
            continue;
        }
        let report = fixed_point_solve(&run, 1e-10, 30).map_err(|e| e.to_string())?;
        let bounds = ImageBounds::from_certificate(&cert);
        let image = check_theta_image(&report.final_coeff, &bounds, 1e-8, Some(&cert))
            .map_err(|e| e.to_string())?;
        ensure(image.passed && image.uniform_ok, || {
            format!("{}: {image:?}", s.name)
        })?;
        checked.push(s.name.clone());
    }
    ensure(!checked.is_empty(), || "no certified scenario".into())?;
    Ok(format!("certified: {}", checked.join(", ")))
}

fn linear_energy_audit() -> Outcome {
    let s = common::example("manufactured-audit");
    let a = s.audit_spec().map_err(|e| e.to_string())?;
    let (q, m, k) = (a.q, a.m_upper, a.k);
    let expected_eta = 2.0 * k / (q - 1.0) + 4.0 * m * m + 1.0;
    let eta = a.eta.unwrap_or(s.gevrey.eta);
    ensure(
        q == 1.5
            && s.gevrey.s == 2.0
            && s.horizon == 1.0
            && a.m0 == 1.0
            && m == 1.3
            && k == 0.1
            && s.basis.modes == 16
            && (eta - expected_eta).abs() < 1e-12,
        || "scenario parameters differ from the audit setup".into(),
    )?;
    let problem = LinearProblem::new(
        s.audit_coefficient(a).map_err(|e| e.to_string())?,
        s.audit_params(a).map_err(|e| e.to_string())?,
        s.initial_state(),
        a.sigma,
        GevreyParams::new(s.gevrey.s, eta).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let audit = problem
        .audit(&AuditOptions {
            substeps: 4,
            energy_tol: 1e-6,
            bound_tol: 1e-6,
        })
        .map_err(|e| e.to_string())?;
    for (i, e) in audit.energies.iter().enumerate() {
        let bad = e.windows(2).position(|w| w[1] > w[0] * (1.0 + 1e-6));
        ensure(bad.is_none(), || format!("mode {}: energy rises", i + 1))?;
    }
    let ratio = audit.report.g_interval.worst_ratio;
    ensure(ratio <= 1.0, || format!("worst ratio {ratio}"))?;
    for mode in &audit.report.modes {
        ensure(mode.alpha_integral <= mode.alpha_bound + 1e-6, || {
            format!(
                "mode {}: integral {} > bound {}",
                mode.mode + 1,
                mode.alpha_integral,
                mode.alpha_bound
            )
        })?;
    }
    ensure(audit.report.passed, || "audit report failed".into())?;
    Ok(format!(
        "16 modes, worst ratio {ratio:.3e}, {} nodes",
        audit.report.grid_nodes
    ))
}

fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let u: f64 = rng.gen();
        if u > 0.0 {
            return u;
        }
    }
}

fn constant_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6b69_7263);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let m = 2.0 + 3.0 * open_unit(&mut rng);
        let r = 10.0 * rng.gen::<f64>();
        let t = 3.0 * open_unit(&mut rng);
        let s = 1.0 + 4.0 * open_unit(&mut rng);
        let q = q_from_s(s).map_err(|e| e.to_string())?;
        let direct = eta0(m, r, t, s).map_err(|e| e.to_string())?;
        let via = 2.0 * k0(m, r, t, q).map_err(|e| e.to_string())? * s + 4.0 * m * m;
        let rel = (direct - via).abs() / direct;
        ensure(rel <= 1e-12, || {
            format!("M={m} R={r} T={t} s={s}: rel {rel:e}")
        })?;
        worst = worst.max(rel);
    }
    let basis = std::sync::Arc::new(ModeBasis::interval_dirichlet(3).unwrap());
    for _ in 0..100 {
        let a: f64 = rng.gen_range(-1e-8..1e-8);
        let b: f64 = rng.gen_range(-1e-8..1e-8);
        let eta: f64 = rng.gen_range(1.0..60.0);
        let state = SpectralState::new(basis.clone(), vec![a, 0.0, b], vec![b, a, 0.0]).unwrap();
        let cert = check_hypotheses(&state, 2.0, eta, 1.0, None).map_err(|e| e.to_string())?;
        let (Some(e0), Some(ep)) = (cert.eta0, cert.eta_prime) else {
            return Err("eta0 not representable".into());
        };
        ensure(ep == eta - e0, || format!("eta' {ep} != {eta} - {e0}"))?;
        let eta_ok = cert.verdicts.iter().any(|v| v.code == "eta" && v.passed);
        ensure(eta_ok == (ep > 0.0), || format!("verdict vs eta' = {ep}"))?;
    }
    Ok(format!("100-point sweep, worst relative error {worst:.1e}"))
}

fn convergence_order() -> Outcome {
    let error = |lambda: f64, steps: usize| {
        let c = CoefficientPath::constant(&TimeGrid::uniform(1.0, 1).unwrap(), 1.0).unwrap();
        let grid = TimeGrid::uniform(1.0, steps).unwrap();
        let traj = solve_mode(&c, lambda, 1.0, 0.0, &grid).unwrap();
        traj.times
            .iter()
            .zip(&traj.v)
            .map(|(&t, &v)| (v - (lambda.sqrt() * t).cos()).abs())
            .fold(0.0, f64::max)
    };
    let mut ratios = Vec::new();
    for lambda in [1.0f64, 4.0, 100.0] {
        let coarse = (lambda.sqrt() / 0.1).round() as usize;
        let ratio = error(lambda, coarse) / error(lambda, 2 * coarse);
        ensure((12.0..=20.0).contains(&ratio), || {
            format!("lambda {lambda}: ratio {ratio}")
        })?;
        ratios.push(format!("{ratio:.2}"));
    }
    Ok(format!("ratios {}", ratios.join(", ")))
}

fn equicontinuity() -> Outcome {
    let mut paths = 0;
    let mut worst = f64::INFINITY;
    for s in fixed_point_scenarios() {
        let run = s.run(Method::FixedPoint).map_err(|e| e.to_string())?;
        let cert = check_hypotheses(&run.initial, s.gevrey.s, s.gevrey.eta, s.horizon, None)
            .map_err(|e| e.to_string())?;
        let bounds = ImageBounds::from_certificate(&cert);
        let params = bounds.class_params().map_err(|e| e.to_string())?;
        let report = fixed_point_solve(&run, 1e-10, 30).map_err(|e| e.to_string())?;
        let first = CoefficientPath::constant(&run.grid, ctilde(&run.initial))
            .and_then(|c| theta_map(&c, &run))
            .map_err(|e| e.to_string())?;
        for path in [&first, &report.final_coeff] {
            let margin = equicontinuity_margin(path, &params);
            ensure(margin >= -1e-8, || format!("{}: margin {margin:e}", s.name))?;
            worst = worst.min(margin);
            paths += 1;
        }
    }
    Ok(format!("{paths} image paths, worst margin {worst:.3e}"))
}

fn continuity_probe() -> Outcome {
    let s = common::example("reference");
    let probe = s.probe.as_ref().ok_or("reference has no probe section")?;
    let run = s.run(Method::FixedPoint).map_err(|e| e.to_string())?;
    let report = fixed_point_solve(&run, 1e-10, 30).map_err(|e| e.to_string())?;
    let params = s.probe_params(probe).map_err(|e| e.to_string())?;
    let out = theta_continuity_probe(&run, &report.final_coeff, &params, &[1e-1, 1e-2, 1e-3])
        .map_err(|e| e.to_string())?;
    let e: Vec<f64> = out.entries.iter().map(|x| x.max_energy).collect();
    ensure(out.monotone && e.windows(2).all(|w| w[1] < w[0]), || {
        format!("not monotone: {e:?}")
    })?;
    ensure(e[2] < 1e-8, || format!("max energy at 1e-3 is {:e}", e[2]))?;
    Ok(format!(
        "max energy {:.2e}, {:.2e}, {:.2e}",
        e[0], e[1], e[2]
    ))
}

fn galerkin_stability() -> Outcome {
    let s = common::example("reference");
    let state = s.initial_state();
    let supported = state
        .position()
        .iter()
        .chain(state.velocity())
        .enumerate()
        .all(|(i, &x)| i % s.basis.modes < 8 || x == 0.0);
    ensure(supported, || "reference data leave modes 1..8".into())?;
    let mut finals = Vec::new();
    for modes in [16, 32] {
        let mut variant = s.clone();
        variant.basis.modes = modes;
        let run = variant.run(Method::FixedPoint).map_err(|e| e.to_string())?;
        let report = fixed_point_solve(&run, 1e-10, 30).map_err(|e| e.to_string())?;
        finals.push(*report.final_coeff.values().last().unwrap());
    }
    let change = (finals[1] - finals[0]).abs();
    ensure(change < 1e-8, || format!("c~(T) changed by {change:e}"))?;
    Ok(format!("change in c~(T) {change:e}"))
}

fn cli_contract() -> Outcome {
    let goldens = common::check_goldens();
    let malformed = common::check_malformed();
    let problems: Vec<String> = goldens.into_iter().chain(malformed).collect();
    ensure(problems.is_empty(), || problems.join("; "))?;
    Ok(format!(
        "{} scenarios match goldens, {} malformed configs exit 64",
        common::scenario_files().len(),
        common::MALFORMED.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("Hamiltonian conservation", hamiltonian_conservation),
        ("fixed point equals oracle", fixed_point_matches_oracle),
        ("image bounds", theta_image_bounds),
        ("linear energy audit", linear_energy_audit),
        ("constant identities", constant_identities),
        ("convergence order", convergence_order),
        ("equicontinuity", equicontinuity),
        ("continuity probe", continuity_probe),
        ("Galerkin stability", galerkin_stability),
        ("CLI determinism and exit codes", cli_contract),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("[PASS] criterion {}: {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] criterion {}: {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
