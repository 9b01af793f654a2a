//! Command implementations behind the thin clap front end.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array1;

use oscopt_core::continuous::damping_sweep;
use oscopt_core::coordinate::{
    acd_run, sampler_from_lipschitz, AcdSettings, EngineKind, SelectionMode,
};
use oscopt_core::lyapunov::{Certificate, CertifierSuite, Reference};
use oscopt_core::problems::{
    banded_quadratic, quadratic_from_spectrum, reference_minimizer, ridge_least_squares, BoxTerm,
    CompositeOracle, ProblemInstance, L1Term,
};
use oscopt_core::rng::SeededRng;
use oscopt_core::schemes::{run, DiscreteState, RunError, Scheme, SchemeConfig, Variant};
use oscopt_core::trace::{
    render_certificates, render_compare, render_coord_trace, render_plot_data, render_sweep,
    render_trace,
};

use crate::config::{ExperimentConfig, Setting};
use crate::error::CliError;

/// Scheme selector including the stochastic variants.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CliVariant {
    Deterministic(Variant),
    Coordinate { greedy: bool },
}

pub fn parse_variant(text: &str) -> Result<CliVariant, CliError> {
    Ok(match text {
        "semi-implicit" => CliVariant::Deterministic(Variant::SemiImplicit),
        "forward-backward" => CliVariant::Deterministic(Variant::ForwardBackward),
        "nesterov" => CliVariant::Deterministic(Variant::Nesterov),
        "heavy-ball" => CliVariant::Deterministic(Variant::HeavyBall),
        "gradient-descent" => CliVariant::Deterministic(Variant::GradientDescent),
        "coordinate" => CliVariant::Coordinate { greedy: false },
        "coordinate-greedy" => CliVariant::Coordinate { greedy: true },
        other => {
            return Err(CliError::Config(format!(
                "unknown scheme variant {other:?}"
            )))
        }
    })
}

/// Evenly spaced spectrum over `[spectrum_min, spectrum_max]`.
fn spectrum(config: &ExperimentConfig) -> Vec<f64> {
    let p = &config.problem;
    let d = p.dimension;
    if d == 1 {
        return vec![p.spectrum_min];
    }
    (0..d)
        .map(|k| {
            p.spectrum_min + (p.spectrum_max - p.spectrum_min) * k as f64 / (d - 1) as f64
        })
        .collect()
}

pub fn build_problem(config: &ExperimentConfig) -> Result<ProblemInstance, CliError> {
    let p = &config.problem;
    let rotation = if p.rotated { Some(p.seed) } else { None };
    let linear = SeededRng::new(p.seed.wrapping_add(1)).normal_vector(p.dimension);
    Ok(match p.kind.as_str() {
        "quadratic" => ProblemInstance::Smooth(Box::new(quadratic_from_spectrum(
            &spectrum(config),
            &linear,
            rotation,
        )?)),
        "banded" => ProblemInstance::Smooth(Box::new(banded_quadratic(
            p.dimension,
            p.bandwidth,
            p.seed,
        )?)),
        "ridge" => ProblemInstance::Smooth(Box::new(ridge_least_squares(
            p.dimension,
            p.dimension + p.dimension / 3 + 1,
            p.spectrum_max,
            p.ridge,
            p.seed,
        )?)),
        "ridge-l1" => {
            let smooth = ridge_least_squares(
                p.dimension,
                p.dimension + p.dimension / 3 + 1,
                p.spectrum_max,
                p.ridge,
                p.seed,
            )?;
            ProblemInstance::Composite(CompositeOracle::new(
                Box::new(smooth),
                Box::new(L1Term::new(p.regularization)),
            ))
        }
        "box-quadratic" => {
            let smooth = quadratic_from_spectrum(&spectrum(config), &linear, rotation)?;
            let term = BoxTerm::new(
                Array1::from_elem(p.dimension, p.box_lower),
                Array1::from_elem(p.dimension, p.box_upper),
            )?;
            ProblemInstance::Composite(CompositeOracle::new(Box::new(smooth), Box::new(term)))
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown problem kind {other:?}"
            )))
        }
    })
}

fn initial_point(config: &ExperimentConfig, problem: &ProblemInstance, seed: u64) -> Array1<f64> {
    let p = &config.problem;
    let mut rng = SeededRng::new(p.seed.wrapping_mul(31).wrapping_add(seed));
    let mut x0 = Array1::from(rng.normal_vector(p.dimension));
    x0.mapv_inplace(|v| v * p.init_scale);
    match problem {
        ProblemInstance::Composite(c) => c.nonsmooth.clamp_to_domain(x0),
        ProblemInstance::Smooth(_) => x0,
    }
}

/// Resolves `"auto"` step against the problem: `1/√L` for the deterministic
/// schemes, the sampler step for the coordinate ones.
fn resolve_step(config: &ExperimentConfig, problem: &ProblemInstance) -> f64 {
    config
        .scheme
        .step
        .resolve(1.0 / problem.lipschitz().sqrt())
}

struct SeedOutput {
    seed: u64,
    trace_csv: String,
    cert_csv: String,
    first_failure: Option<(String, usize, String)>,
    diverged: Option<usize>,
}

fn first_failure(log: &[Certificate]) -> Option<(String, usize, String)> {
    log.iter()
        .find(|c| !c.pass)
        .map(|c| (c.name.to_string(), c.iteration, c.z_tag.clone()))
}

fn run_one_seed(
    config: &ExperimentConfig,
    problem: &ProblemInstance,
    reference: &Reference,
    variant: CliVariant,
    seed: u64,
) -> Result<SeedOutput, CliError> {
    let x0 = initial_point(config, problem, seed);
    let initial = DiscreteState::at_rest(x0);
    let step = resolve_step(config, problem);
    let alpha = problem.alpha();
    let domain = match problem {
        ProblemInstance::Composite(c) => Some(c.nonsmooth.as_ref()),
        ProblemInstance::Smooth(_) => None,
    };

    match variant {
        CliVariant::Deterministic(v) => {
            let cfg = SchemeConfig {
                step,
                alpha,
                variant: v,
                // A forced numeric step is an exploratory run; certificates
                // report failures instead of the run aborting.
                strict_step_check: matches!(config.scheme.step, Setting::Auto),
            };
            let scheme = Scheme::from_variant(v, problem).map_err(CliError::Core)?;
            let mut suite = config.run.certify.then(|| {
                CertifierSuite::new(
                    problem.objective(),
                    domain,
                    reference,
                    step,
                    alpha,
                    config.run.z_samples,
                    seed.wrapping_add(0x5eed),
                )
            });
            let result = run(
                &scheme,
                &cfg,
                &initial,
                config.run.iterations,
                reference,
                suite.as_mut(),
            );
            let (records, diverged) = match result {
                Ok(records) => (records, None),
                Err(RunError::Diverged { step, records }) => (records, Some(step)),
                Err(RunError::Invalid(e)) => return Err(CliError::Core(e)),
            };
            let cert_log = suite.map(|s| s.log).unwrap_or_default();
            Ok(SeedOutput {
                seed,
                trace_csv: render_trace(&records),
                cert_csv: render_certificates(&cert_log),
                first_failure: first_failure(&cert_log),
                diverged,
            })
        }
        CliVariant::Coordinate { greedy } => {
            let oracle = match problem {
                ProblemInstance::Smooth(o) => o.as_ref(),
                ProblemInstance::Composite(_) => {
                    return Err(CliError::Config(
                        "coordinate variants need a smooth problem".into(),
                    ))
                }
            };
            let sampler = sampler_from_lipschitz(oracle.coord_lipschitz(), seed)
                .map_err(CliError::Core)?;
            let engine = match config.scheme.engine.as_str() {
                "lazy" => EngineKind::Lazy,
                _ => EngineKind::Dense,
            };
            let settings = AcdSettings {
                mode: if greedy {
                    SelectionMode::SemiGreedy
                } else {
                    SelectionMode::Sampled
                },
                engine,
                enumerate_expectation: config.run.enumerate_expectation,
                lazy_checkpoint: 100,
            };
            let mut suite = (config.run.certify && engine == EngineKind::Dense).then(|| {
                CertifierSuite::new(
                    problem.objective(),
                    None,
                    reference,
                    sampler.step,
                    alpha,
                    config.run.z_samples,
                    seed.wrapping_add(0x5eed),
                )
            });
            let result = acd_run(
                oracle,
                &sampler,
                alpha,
                &initial,
                config.run.iterations,
                &settings,
                reference,
                suite.as_mut(),
            );
            let outcome = match result {
                Ok(outcome) => outcome,
                Err(RunError::Diverged { step, .. }) => {
                    return Ok(SeedOutput {
                        seed,
                        trace_csv: render_coord_trace(&[]),
                        cert_csv: render_certificates(&[]),
                        first_failure: None,
                        diverged: Some(step),
                    })
                }
                Err(RunError::Invalid(e)) => return Err(CliError::Core(e)),
            };
            let cert_log = suite.map(|s| s.log).unwrap_or_default();
            Ok(SeedOutput {
                seed,
                trace_csv: render_coord_trace(&outcome.records),
                cert_csv: render_certificates(&cert_log),
                first_failure: first_failure(&cert_log),
                diverged: None,
            })
        }
    }
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Concatenates per-seed CSVs in seed order, keeping one header.
fn merge_csv(parts: &[&str]) -> String {
    let mut out = String::new();
    for (i, part) in parts.iter().enumerate() {
        if i == 0 {
            out.push_str(part);
        } else {
            for line in part.lines().skip(1) {
                out.push_str(line);
                out.push('\n');
            }
        }
    }
    out
}

/// Runs the configured experiment and writes `trace.csv` plus
/// `certificates.csv` under the output directory. Multi-seed runs execute
/// concurrently, write per-seed files, and merge in seed order.
pub fn cmd_run(config: &ExperimentConfig) -> Result<(), CliError> {
    config.validate()?;
    let variant = parse_variant(&config.scheme.variant)?;
    let problem = build_problem(config)?;
    let (xstar, fstar) = reference_minimizer(&problem, config.run.reference_tolerance)?;
    let reference = Reference { xstar, fstar };

    let seeds = &config.run.seeds;
    let mut outputs: Vec<SeedOutput> = Vec::with_capacity(seeds.len());
    if seeds.len() == 1 {
        outputs.push(run_one_seed(config, &problem, &reference, variant, seeds[0])?);
    } else {
        let results: Vec<Result<SeedOutput, CliError>> = std::thread::scope(|scope| {
            let handles: Vec<_> = seeds
                .iter()
                .map(|&seed| {
                    let problem = &problem;
                    let reference = &reference;
                    scope.spawn(move || run_one_seed(config, problem, reference, variant, seed))
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        for result in results {
            outputs.push(result?);
        }
        outputs.sort_by_key(|o| {
            seeds
                .iter()
                .position(|&s| s == o.seed)
                .unwrap_or(usize::MAX)
        });
    }

    let out_dir = PathBuf::from(&config.run.out_dir);
    fs::create_dir_all(&out_dir)?;
    if outputs.len() > 1 {
        for o in &outputs {
            write_atomic(&out_dir.join(format!("trace-seed-{}.csv", o.seed)), &o.trace_csv)?;
            write_atomic(
                &out_dir.join(format!("certificates-seed-{}.csv", o.seed)),
                &o.cert_csv,
            )?;
        }
    }
    let traces: Vec<&str> = outputs.iter().map(|o| o.trace_csv.as_str()).collect();
    let certs: Vec<&str> = outputs.iter().map(|o| o.cert_csv.as_str()).collect();
    write_atomic(&out_dir.join("trace.csv"), &merge_csv(&traces))?;
    write_atomic(&out_dir.join("certificates.csv"), &merge_csv(&certs))?;

    if let Some(o) = outputs.iter().find(|o| o.diverged.is_some()) {
        return Err(CliError::Divergence {
            step: o.diverged.unwrap(),
        });
    }
    if config.run.certify {
        if let Some(o) = outputs.iter().find(|o| o.first_failure.is_some()) {
            let (name, iteration, z_tag) = o.first_failure.clone().unwrap();
            return Err(CliError::Certification {
                name,
                iteration,
                z_tag,
            });
        }
    }
    println!(
        "wrote {} and {}",
        out_dir.join("trace.csv").display(),
        out_dir.join("certificates.csv").display()
    );
    Ok(())
}

/// Runs every listed variant on the shared problem and writes
/// `compare.csv`: the first iteration reaching the gap tolerance per
/// variant, with an `inf` sentinel when the budget runs out.
pub fn cmd_compare(config: &ExperimentConfig) -> Result<(), CliError> {
    config.validate()?;
    if config.compare.variants.is_empty() {
        return Err(CliError::Config("compare.variants must not be empty".into()));
    }
    let problem = build_problem(config)?;
    let (xstar, fstar) = reference_minimizer(&problem, config.run.reference_tolerance)?;
    let reference = Reference { xstar, fstar };
    let seed = config.run.seeds[0];
    let tolerance = config.run.tolerance;

    let mut rows = Vec::new();
    for name in &config.compare.variants {
        let variant = parse_variant(name)?;
        let x0 = initial_point(config, &problem, seed);
        let initial = DiscreteState::at_rest(x0);
        let hit = match variant {
            CliVariant::Deterministic(v) => {
                let cfg = SchemeConfig {
                    step: resolve_step(config, &problem),
                    alpha: problem.alpha(),
                    variant: v,
                    strict_step_check: matches!(config.scheme.step, Setting::Auto),
                };
                let scheme = Scheme::from_variant(v, &problem).map_err(CliError::Core)?;
                match run(
                    &scheme,
                    &cfg,
                    &initial,
                    config.run.iterations,
                    &reference,
                    None,
                ) {
                    Ok(records) => records.iter().find(|r| r.f_gap <= tolerance).map(|r| r.n),
                    Err(RunError::Diverged { .. }) => None,
                    Err(RunError::Invalid(e)) => return Err(CliError::Core(e)),
                }
            }
            CliVariant::Coordinate { greedy } => {
                let oracle = match &problem {
                    ProblemInstance::Smooth(o) => o.as_ref(),
                    ProblemInstance::Composite(_) => {
                        return Err(CliError::Config(
                            "coordinate variants need a smooth problem".into(),
                        ))
                    }
                };
                let sampler = sampler_from_lipschitz(oracle.coord_lipschitz(), seed)
                    .map_err(CliError::Core)?;
                let settings = AcdSettings {
                    mode: if greedy {
                        SelectionMode::SemiGreedy
                    } else {
                        SelectionMode::Sampled
                    },
                    ..AcdSettings::default()
                };
                match acd_run(
                    oracle,
                    &sampler,
                    problem.alpha(),
                    &initial,
                    config.run.iterations,
                    &settings,
                    &reference,
                    None,
                ) {
                    Ok(outcome) => outcome
                        .records
                        .iter()
                        .find(|r| r.f_gap <= tolerance)
                        .map(|r| r.n),
                    Err(RunError::Diverged { .. }) => None,
                    Err(RunError::Invalid(e)) => return Err(CliError::Core(e)),
                }
            }
        };
        rows.push((name.clone(), hit));
    }

    let out_dir = PathBuf::from(&config.run.out_dir);
    fs::create_dir_all(&out_dir)?;
    let path = out_dir.join("compare.csv");
    write_atomic(&path, &render_compare(&rows))?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Sweeps the damping rate over `(0, 4√λ_min]` and writes `sweep.csv` with
/// the analytic and fitted decay rates per grid point.
pub fn cmd_sweep_damping(config: &ExperimentConfig) -> Result<(), CliError> {
    config.validate()?;
    let rows = damping_sweep(
        config.problem.spectrum_min,
        config.problem.spectrum_max,
        config.sweep.grid,
        config.sweep.dt,
        config.sweep.horizon,
    )
    .map_err(|e| match e {
        oscopt_core::Error::InvalidParameter(msg) => CliError::Config(msg),
        other => CliError::Core(other),
    })?;
    let out_dir = PathBuf::from(&config.run.out_dir);
    fs::create_dir_all(&out_dir)?;
    let path = out_dir.join("sweep.csv");
    write_atomic(&path, &render_sweep(&rows))?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Converts trace CSVs into gnuplot-ready `(n, log10 f_gap)` files, one
/// `.dat` per input.
pub fn cmd_plot_data(traces: &[PathBuf], out: Option<&Path>) -> Result<(), CliError> {
    if traces.is_empty() {
        return Err(CliError::Config("no trace files given".into()));
    }
    for trace in traces {
        let text = fs::read_to_string(trace)?;
        let mut points = Vec::new();
        for line in text.lines().skip(1) {
            let mut cols = line.split(',');
            let n: f64 = cols
                .next()
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| CliError::Config(format!("malformed trace row: {line:?}")))?;
            let gap: f64 = cols
                .next()
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| CliError::Config(format!("malformed trace row: {line:?}")))?;
            points.push((n, gap));
        }
        let stem = trace
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("trace");
        let target = match out {
            Some(dir) => dir.join(format!("{stem}.dat")),
            None => trace.with_extension("dat"),
        };
        if let Some(parent) = target.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)?;
            }
        }
        write_atomic(&target, &render_plot_data(&points))?;
        println!("wrote {}", target.display());
    }
    Ok(())
}

/// Prints the default configuration as TOML.
pub fn cmd_defaults() {
    print!("{}", ExperimentConfig::default().to_toml());
}
