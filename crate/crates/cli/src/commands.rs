use std::io::Write;

use serde::Serialize;

use pseudospin::ermakov::BreathingEnvelope;
use pseudospin::export;
use pseudospin::flow::{integrate_with, FlipEvent, FlowOptions, FlowParams, Trajectory};
use pseudospin::fock::{run_oracle_suite, OracleConfig, QuarticCoefficients, ResidualEntry, VerificationReport};
use pseudospin::physics::{delta_window_check, derive_scales, flip_distance_physical, DerivedScales, WindowVerdict};
use pseudospin::quantum::{heisenberg_residual, propagate, PropagationConfig, QuantumTrajectory};
use pseudospin::render::{azimuthal_contrast, render_state, GridSpec};
use pseudospin::scan::{fit_power_law, flip_threshold, run_scan_streaming, ScanAxis, ScanConfig, ScanRange};
use pseudospin::shell::{build_generators, casimir_residual, commutator_residual, seeded_state};
use pseudospin::stability::FloquetMode;
use pseudospin::{Execution, PseudospinVector, ShellSpec, ShellState};

use crate::output::{load_scenario, CliError, LoadedScenario, OutDir, RunManifest};
use crate::{Axis, DeriveArgs, Floquet, Mode, RenderArgs, ScanArgs, SimulateArgs, Source, VerifyArgs};

const ID_SU2_COMMUTATOR: &str = "[L_i, L_j] = i eps_ijk L_k (shell basis)";
const ID_SU2_CASIMIR: &str = "L^2 = j(j+1) (shell basis)";

fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

pub fn verify(args: &VerifyArgs, exec: Execution) -> Result<(), CliError> {
    let cfg = OracleConfig {
        two_j_max: args.two_j_max,
        margin: args.margin,
        coefficients: QuarticCoefficients {
            x2y2: args.quartic_cross_coeff,
            ..QuarticCoefficients::default()
        },
        ..OracleConfig::default()
    };
    let mut report = run_oracle_suite(&cfg, exec)?;
    let shells: Vec<u32> = (1..=args.algebra_two_j_max).collect();
    let algebra = exec.map(&shells, |&two_j| {
        let spec = ShellSpec::new(two_j, 0.0).expect("two_j >= 1");
        let g = build_generators(&spec);
        // entries of L_i L_j reach j(j+1)/4: the round-off floor scales with it
        let comm_tol = 1e-15 * (1.0 + spec.casimir());
        [
            ResidualEntry::new(ID_SU2_COMMUTATOR, Some(two_j as usize), commutator_residual(&g), comm_tol),
            ResidualEntry::new(ID_SU2_CASIMIR, Some(two_j as usize), casimir_residual(&spec, &g), 1e-10),
        ]
    });
    report.extend(VerificationReport {
        entries: algebra.into_iter().flatten().collect(),
    });

    let mut names: Vec<&str> = Vec::new();
    for e in &report.entries {
        if !names.contains(&e.identity.as_str()) {
            names.push(&e.identity);
        }
    }
    for name in &names {
        let entries: Vec<&ResidualEntry> = report.entries.iter().filter(|e| e.identity == *name).collect();
        let ok = entries.iter().all(|e| e.pass);
        let worst = entries.iter().map(|e| e.residual).fold(0.0, f64::max);
        println!("{} {name}: max residual {worst:.3e}", if ok { "PASS" } else { "FAIL" });
    }
    let failures: Vec<&ResidualEntry> = report.failures().collect();
    for f in &failures {
        println!(
            "  failed: {} at two_j = {}: residual {:.3e} >= {:.1e}",
            f.identity,
            f.two_j.map_or("-".into(), |t| t.to_string()),
            f.residual,
            f.threshold
        );
    }
    if let Some(out) = &args.out {
        let mut dir = OutDir::create(out)?;
        dir.write_json("verify.json", &report)?;
        dir.finish(RunManifest::new("verify", out, None, args))?;
    }
    if failures.is_empty() {
        println!("verification passed ({} checks)", report.entries.len());
        Ok(())
    } else {
        Err(CliError::Verification(failures.len()))
    }
}

#[derive(Serialize)]
struct RunSummary {
    first_flip_z: Option<f64>,
    first_flip_meter: Option<f64>,
    flip_count: usize,
    min_l3: f64,
    max_norm_drift: f64,
    /// Only meaningful for static runs.
    max_energy_drift: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    heisenberg_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_casimir_drift: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    two_j: Option<u32>,
}

#[derive(Serialize)]
struct SimulationSummary<'a> {
    scenario: &'a str,
    mu: f64,
    derived: &'a DerivedScales,
    seed_window: WindowVerdict,
    breathing: bool,
    classical: Option<RunSummary>,
    quantum: Option<RunSummary>,
}

#[derive(Serialize)]
struct Events<'a> {
    classical: Option<&'a [FlipEvent]>,
    quantum: Option<&'a [FlipEvent]>,
}

fn physical(z: Option<f64>, d: &DerivedScales) -> Result<Option<f64>, CliError> {
    Ok(match z {
        Some(z) => Some(flip_distance_physical(z, d)?),
        None => None,
    })
}

fn classical_summary(t: &Trajectory, static_run: bool, d: &DerivedScales) -> Result<RunSummary, CliError> {
    Ok(RunSummary {
        first_flip_z: t.first_flip(),
        first_flip_meter: physical(t.first_flip(), d)?,
        flip_count: t.events.len(),
        min_l3: t.diagnostics.min_l3,
        max_norm_drift: t.diagnostics.max_norm_drift,
        max_energy_drift: static_run.then_some(t.diagnostics.max_energy_drift),
        heisenberg_residual: None,
        max_casimir_drift: None,
        two_j: None,
    })
}

fn quantum_summary(t: &QuantumTrajectory, d: &DerivedScales) -> Result<RunSummary, CliError> {
    let heis = heisenberg_residual(t).ok().map(|h| h.max);
    Ok(RunSummary {
        first_flip_z: t.first_flip(),
        first_flip_meter: physical(t.first_flip(), d)?,
        flip_count: t.events.len(),
        min_l3: t.min_l3(),
        max_norm_drift: t.diagnostics.max_norm_drift,
        max_energy_drift: t.envelope.is_none().then_some(t.diagnostics.max_energy_drift),
        heisenberg_residual: heis,
        max_casimir_drift: Some(t.diagnostics.max_casimir_drift),
        two_j: Some(t.spec.two_j()),
    })
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        usage(format!("--{name} must be positive, got {v}"))
    }
}

/// Shell for quantum runs: `two_j` defaults to the scenario's `2j`, and the
/// control parameter is held at `mu` when the shell is resized.
fn quantum_shell(two_j: Option<u32>, scenario_j: u32, mu: f64) -> Result<ShellSpec, CliError> {
    Ok(ShellSpec::with_control(two_j.unwrap_or(2 * scenario_j), mu)?)
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    positive("zmax", args.zmax)?;
    positive("sample-step", args.sample_step)?;
    positive("quantum-sample-step", args.quantum_sample_step)?;
    let loaded = load_scenario(&args.scenario)?;
    let s = &loaded.scenario;
    let d = derive_scales(s)?;
    let mu = args.mu.unwrap_or(d.mu);
    if !(mu >= 0.0 && mu.is_finite()) {
        return usage(format!("--mu must be non-negative, got {mu}"));
    }
    let env = s.envelope()?;
    let mut dir = OutDir::create(&args.out)?;

    let classical = if matches!(args.mode, Mode::Classical | Mode::Both) {
        let params = match env {
            Some(e) => FlowParams::breathing(mu, e),
            None => FlowParams::static_flow(mu),
        };
        let opts = FlowOptions::with_tol(args.tol).sample_step(Some(args.sample_step));
        let t = integrate_with(PseudospinVector::seeded(s.delta_rad), &params, args.zmax, &opts)?;
        dir.write_with("classical.csv", |w| export::write_classical_csv(w, &t))?;
        Some(t)
    } else {
        None
    };

    let quantum = if matches!(args.mode, Mode::Quantum | Mode::Both) {
        let spec = quantum_shell(args.two_j, s.j, mu)?;
        let cfg = PropagationConfig::new(spec, args.zmax, args.quantum_sample_step, args.tol).with_envelope(env);
        let t = propagate(&seeded_state(&spec, s.delta_rad)?, &cfg)?;
        dir.write_with("quantum.csv", |w| export::write_quantum_csv(w, &t))?;
        Some(t)
    } else {
        None
    };

    dir.write_json(
        "events.json",
        &Events {
            classical: classical.as_ref().map(|t| t.events.as_slice()),
            quantum: quantum.as_ref().map(|t| t.events.as_slice()),
        },
    )?;
    let summary = SimulationSummary {
        scenario: &loaded.reference,
        mu,
        derived: &d,
        seed_window: delta_window_check(s.j as f64, s.delta_rad)?,
        breathing: env.is_some(),
        classical: classical
            .as_ref()
            .map(|t| classical_summary(t, env.is_none(), &d))
            .transpose()?,
        quantum: quantum.as_ref().map(|t| quantum_summary(t, &d)).transpose()?,
    };
    dir.write_json("summary.json", &summary)?;
    println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    dir.finish(RunManifest::new("simulate", &args.out, Some(&loaded), args))
}

pub fn scan(args: &ScanArgs, exec: Execution) -> Result<(), CliError> {
    let axis = match args.axis {
        Axis::Mu => ScanAxis::Mu,
        Axis::B0 => ScanAxis::B0,
        Axis::Delta => ScanAxis::Delta,
    };
    let range = ScanRange::new(args.from, args.to, args.steps)?;
    positive("zmax", args.zmax)?;
    let loaded = args.scenario.as_deref().map(load_scenario).transpose()?;
    let mut cfg = ScanConfig::new(axis, range);
    if let Some(l) = &loaded {
        cfg.mu = derive_scales(&l.scenario)?.mu;
        cfg.b0 = l.scenario.b0;
        cfg.delta = l.scenario.delta_rad;
    }
    cfg.mu = args.mu.unwrap_or(cfg.mu);
    cfg.b0 = args.b0.unwrap_or(cfg.b0);
    cfg.delta = args.delta.unwrap_or(cfg.delta);
    cfg.z_max = args.zmax;
    cfg.tol = args.tol;
    if let Some(f) = args.floquet {
        cfg.floquet = match f {
            Floquet::Hill => FloquetMode::LinearizedHill,
            Floquet::Exact => FloquetMode::ExactTangent,
        };
    }

    let mut dir = OutDir::create(&args.out)?;
    let path = dir.path("scan.csv");
    let file = std::fs::File::create(&path).map_err(|e| CliError::Io(path.clone(), e))?;
    let mut w = std::io::BufWriter::new(file);
    export::write_scan_header(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::Io(path.clone(), e))?;
    let chunk = match exec {
        Execution::Sequential => 1,
        Execution::Parallel => 16,
    };
    let mut rows = Vec::new();
    let mut pending = 0;
    // rows reach the file chunk by chunk, so an interrupted scan keeps its prefix
    let result = run_scan_streaming(&cfg, exec, chunk, |r| {
        export::write_scan_row(&mut w, r)?;
        rows.push(*r);
        pending += 1;
        if pending == chunk {
            pending = 0;
            w.flush()?;
        }
        Ok(())
    });
    w.flush().map_err(|e| CliError::Io(path.clone(), e))?;
    result?;
    dir.written.push("scan.csv".into());

    #[derive(Serialize)]
    struct ScanSummary {
        points: usize,
        floquet_mode: FloquetMode,
        flip_threshold: Option<f64>,
        /// Exponent of `sigma_numeric` against `|b0 - 1/b0|` (b0 scans).
        mismatch_exponent: Option<f64>,
    }
    let exponent = (axis == ScanAxis::B0).then(|| {
        let xs: Vec<f64> = rows.iter().map(|r| (r.b0 - r.b0.recip()).abs()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.sigma_numeric).collect();
        fit_power_law(&xs, &ys)
    });
    let summary = ScanSummary {
        points: rows.len(),
        floquet_mode: cfg.floquet,
        flip_threshold: flip_threshold(&rows, axis),
        mismatch_exponent: exponent.flatten(),
    };
    dir.write_json("scan-summary.json", &summary)?;
    println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    dir.finish(RunManifest::new("scan", &args.out, loaded.as_ref(), args))
}

#[derive(Serialize)]
struct FrameRecord {
    file: String,
    z: f64,
    b: f64,
    extent: f64,
    outside_fraction: f64,
    azimuthal_contrast: f64,
    l: PseudospinVector,
}

pub fn render(args: &RenderArgs, exec: Execution) -> Result<(), CliError> {
    if args.z.iter().any(|z| !(z.is_finite() && *z >= 0.0)) {
        return usage("--z values must be finite and non-negative");
    }
    if args.resolution < 2 {
        return usage("--resolution must be at least 2");
    }
    let loaded = load_scenario(&args.scenario)?;
    let s = &loaded.scenario;
    let mu = args.mu.unwrap_or(derive_scales(s)?.mu);
    let two_j = args.two_j.unwrap_or((2 * s.j).min(20));
    let spec = quantum_shell(Some(two_j), s.j, mu)?;
    let env = s.envelope()?;
    let b_at = |z: f64| env.map_or(1.0, |e: BreathingEnvelope| e.b(z));

    let mut order: Vec<usize> = (0..args.z.len()).collect();
    order.sort_by(|&a, &b| args.z[a].total_cmp(&args.z[b]));

    let mut state = match args.source {
        Source::Seeded => seeded_state(&spec, s.delta_rad)?,
        Source::Pole => ShellState::pole(&spec),
    };
    let mut z_now = 0.0;
    let mut frames: Vec<Option<FrameRecord>> = (0..args.z.len()).map(|_| None).collect();
    let mut dir = OutDir::create(&args.out)?;
    for &k in &order {
        let z = args.z[k];
        if z > z_now {
            let cfg = PropagationConfig::new(spec, z, z - z_now, args.tol)
                .with_envelope(env)
                .starting_at(z_now);
            state = propagate(&state, &cfg)?.final_state.expect("propagate returns the final state");
            z_now = z;
        }
        let b = b_at(z);
        let grid = GridSpec::covering(two_j, b, args.resolution);
        let r = render_state(&state, &spec, &grid, b, z, exec)?;
        if let Some(w) = &r.warning {
            eprintln!("warning: z = {z}: {w}");
        }
        let name = format!("grid_{k:03}.txt");
        dir.write_with(&name, |w| export::write_grid(w, &r.grid))?;
        frames[k] = Some(FrameRecord {
            file: name,
            z,
            b,
            extent: grid.extent,
            outside_fraction: r.outside_fraction,
            azimuthal_contrast: azimuthal_contrast(&state, &spec),
            l: pseudospin::shell::expectations(&state, &spec)?,
        });
    }
    let frames: Vec<FrameRecord> = frames.into_iter().flatten().collect();
    dir.write_json("frames.json", &frames)?;
    for f in &frames {
        println!(
            "{}: z = {}, l3 = {:.4}, azimuthal contrast {:.3}",
            f.file, f.z, f.l.l3, f.azimuthal_contrast
        );
    }
    dir.finish(RunManifest::new("render", &args.out, Some(&loaded), args))
}

#[derive(Serialize)]
struct DeriveReport<'a> {
    scenario: &'a LoadedScenario,
    derived: DerivedScales,
    seed_window: WindowVerdict,
}

pub fn derive(args: &DeriveArgs) -> Result<(), CliError> {
    let loaded = load_scenario(&args.scenario)?;
    let report = DeriveReport {
        derived: derive_scales(&loaded.scenario)?,
        seed_window: delta_window_check(loaded.scenario.j as f64, loaded.scenario.delta_rad)?,
        scenario: &loaded,
    };
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    if let Some(out) = &args.out {
        let mut dir = OutDir::create(out)?;
        dir.write_json("derive.json", &report)?;
        dir.finish(RunManifest::new("derive", out, Some(&loaded), args))?;
    }
    Ok(())
}
