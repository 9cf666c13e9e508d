//! Subcommand implementations.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use eccforge_core::ecmath::ECPoint;
use eccforge_core::fitness::{validate_curve, Candidate, ProbeConfig};
use eccforge_core::ga::{run_ga, GaConfig};
use eccforge_core::pso::{run_pso, PsoConfig};
use eccforge_core::rho_attack::attack_entity_b;
use eccforge_core::simnet::{
    run_entity_a, serve_entity_b, OrdersSource, ParamsSource, ReplayOptions, ServeConfig,
    SimError,
};
use eccforge_core::stats::{write_history_csv, write_history_dat, GenerationStats};
use eccforge_core::seed_rng;

use crate::manifest::RunManifest;
use crate::{Algorithm, CliError, OptimizeFlags};

fn io_usage(context: &str, err: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("{context}: {err}"))
}

fn sim_to_cli(err: SimError) -> CliError {
    match err {
        SimError::Io(_) | SimError::Parse { .. } | SimError::MissingKey(_) => {
            CliError::Usage(err.to_string())
        }
        other => CliError::Domain(other.to_string()),
    }
}

fn ensure_out_dir(out_dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| io_usage(&format!("cannot create {}", out_dir.display()), e))
}

struct ResolvedRun {
    ga: GaConfig,
    pso: PsoConfig,
    probe: ProbeConfig,
}

fn resolve_configs(flags: &OptimizeFlags) -> ResolvedRun {
    let mut ga = GaConfig {
        seed: flags.seed,
        ..GaConfig::default()
    };
    let mut pso = PsoConfig {
        seed: flags.seed,
        ..PsoConfig::default()
    };
    let mut probe = ProbeConfig {
        deterministic_timing: flags.deterministic_timing,
        ..ProbeConfig::default()
    };
    if flags.budget_small {
        ga.bits = 16;
        ga.pop_size = 20;
        ga.ngen = 10;
        pso.bits = 16;
        pso.swarm_size = 20;
        pso.max_iterations = 10;
    }
    if let Some(bits) = flags.bits {
        ga.bits = bits;
        pso.bits = bits;
    }
    if let Some(size) = flags.pop_size {
        ga.pop_size = size;
        pso.swarm_size = size;
    }
    if let Some(rounds) = flags.generations {
        ga.ngen = rounds;
        pso.max_iterations = rounds;
    }
    if let Some(v) = flags.cxpb {
        ga.cxpb = v;
    }
    if let Some(v) = flags.mutpb {
        ga.mutpb = v;
    }
    if let Some(v) = flags.indpb {
        ga.indpb = v;
    }
    if let Some(v) = flags.multiparent_cxpb {
        ga.multiparent_cxpb = v;
    }
    if let Some(v) = flags.elitism_rate {
        ga.elitism_rate = v;
    }
    if let Some(v) = flags.tournament_size {
        ga.tournament_size = v;
    }
    if let Some(v) = flags.c1 {
        pso.c1 = v;
    }
    if let Some(v) = flags.c2 {
        pso.c2 = v;
    }
    if let Some(v) = flags.w_max {
        pso.w_max = v;
    }
    if let Some(v) = flags.w_min {
        pso.w_min = v;
    }
    if let Some(v) = flags.stall_limit {
        pso.stall_limit = v;
    }
    if let Some(v) = flags.trials {
        probe.trials = v;
    }
    if let Some(v) = flags.probe_iterations {
        probe.max_iterations = v;
    }
    if let Some(v) = flags.distinguished_bits {
        probe.distinguished_bits = v;
    }
    ResolvedRun { ga, pso, probe }
}

fn probe_success_count(population: &[Candidate]) -> usize {
    population
        .iter()
        .filter(|c| {
            c.report
                .as_ref()
                .is_some_and(|r| r.valid && r.attack_resistance_score == 0)
        })
        .count()
}

fn validity_rate(population: &[Candidate]) -> f64 {
    let valid = population
        .iter()
        .filter(|c| c.report.as_ref().is_some_and(|r| r.valid))
        .count();
    valid as f64 / population.len().max(1) as f64
}

fn print_results_block(
    label: &str,
    parameters_heading: &str,
    final_stats: &GenerationStats,
    attack_count: usize,
    best: &Candidate,
) {
    println!("=== {label} results ===");
    println!("Attack {attack_count}");
    println!("Min {}", final_stats.min);
    println!("Max {}", final_stats.max);
    println!("Avg {}", final_stats.avg);
    println!("Std {}", final_stats.std);
    println!("{parameters_heading}");
    let p = &best.params;
    println!("Parameter a {}", p.a);
    println!("Parameter b {}", p.b);
    println!("Parameter p {}", p.p);
    match &p.g {
        ECPoint::Infinity => println!("Parameter G (infinity)"),
        ECPoint::Affine { x, y } => println!("Parameter G {x}, {y}"),
    }
    println!("Parameter n {}", p.n);
    println!("Parameter h {}", p.h);
}

struct OptimizeArtifacts {
    best: Candidate,
    history: Vec<GenerationStats>,
    final_population: Vec<Candidate>,
    wall_seconds: f64,
}

fn run_one(
    algorithm: Algorithm,
    run: &ResolvedRun,
    out_dir: &Path,
    manifest: &mut RunManifest,
) -> Result<OptimizeArtifacts, CliError> {
    ensure_out_dir(out_dir)?;
    let started = Instant::now();
    let (artifacts, index_label, params_name) = match algorithm {
        Algorithm::Ga => {
            let mut rng = seed_rng(run.ga.seed);
            let result = run_ga(&run.ga, &run.probe, &mut rng);
            (
                OptimizeArtifacts {
                    best: result.best,
                    history: result.history,
                    final_population: result.final_population,
                    wall_seconds: started.elapsed().as_secs_f64(),
                },
                "generation",
                "ga_ecc_params.txt",
            )
        }
        Algorithm::Pso => {
            let mut rng = seed_rng(run.pso.seed);
            let result = run_pso(&run.pso, &run.probe, &mut rng);
            (
                OptimizeArtifacts {
                    best: result.best,
                    history: result.history,
                    final_population: result.final_population,
                    wall_seconds: started.elapsed().as_secs_f64(),
                },
                "iteration",
                "pso_ecc_params.txt",
            )
        }
    };

    let params_path = out_dir.join(params_name);
    eccforge_core::ga::write_params_file(&artifacts.best, &params_path)
        .map_err(|e| io_usage(&format!("writing {}", params_path.display()), e))?;
    manifest.record_output(&params_path);

    let csv_path = out_dir.join("fitness_history.csv");
    write_history_csv(&csv_path, index_label, &artifacts.history)
        .map_err(|e| io_usage("writing fitness history csv", e))?;
    manifest.record_output(&csv_path);

    let dat_path = out_dir.join("fitness_history.dat");
    write_history_dat(&dat_path, index_label, &artifacts.history)
        .map_err(|e| io_usage("writing fitness history dat", e))?;
    manifest.record_output(&dat_path);

    Ok(artifacts)
}

pub fn optimize(
    algorithm: Algorithm,
    flags: &OptimizeFlags,
    out_dir: &Path,
) -> Result<(), CliError> {
    let run = resolve_configs(flags);
    let (name, config) = match algorithm {
        Algorithm::Ga => (
            "optimize ga",
            serde_json::json!({"ga": run.ga, "probe": run.probe}),
        ),
        Algorithm::Pso => (
            "optimize pso",
            serde_json::json!({"pso": run.pso, "probe": run.probe}),
        ),
    };
    let mut manifest = RunManifest::new(name, flags.seed, config);
    let artifacts = run_one(algorithm, &run, out_dir, &mut manifest)?;
    let final_stats = artifacts.history.last().expect("history never empty");
    let (label, heading) = match algorithm {
        Algorithm::Ga => ("GA", "Best Individual Parameters"),
        Algorithm::Pso => ("PSO", "Best Particle Parameters"),
    };
    print_results_block(
        label,
        heading,
        final_stats,
        probe_success_count(&artifacts.final_population),
        &artifacts.best,
    );
    println!("wall_seconds {}", artifacts.wall_seconds);
    manifest
        .finish(out_dir)
        .map_err(|e| io_usage("writing manifest", e))?;
    Ok(())
}

pub fn validate(params_file: &Path, out_dir: &Path) -> Result<(), CliError> {
    let text = std::fs::read_to_string(params_file)
        .map_err(|e| io_usage(&format!("reading {}", params_file.display()), e))?;
    let params = eccforge_core::simnet::parse_params_text(&text).map_err(sim_to_cli)?;
    ensure_out_dir(out_dir)?;
    let manifest = RunManifest::new(
        "validate",
        0,
        serde_json::json!({"params_file": params_file.display().to_string()}),
    );
    let result = match validate_curve(&params) {
        Ok(()) => {
            println!("valid: all checks passed");
            Ok(())
        }
        Err(reason) => {
            println!("invalid: {reason}");
            Err(CliError::Domain(reason.to_string()))
        }
    };
    manifest
        .finish(out_dir)
        .map_err(|e| io_usage("writing manifest", e))?;
    result
}

pub fn serve(
    curve: &str,
    bind: &str,
    seed: u64,
    workers: usize,
    out_dir: &Path,
) -> Result<(), CliError> {
    let source: ParamsSource = curve.parse().expect("infallible");
    ensure_out_dir(out_dir)?;
    let config = ServeConfig {
        workers,
        params_dir: out_dir.to_path_buf(),
        seed,
    };
    let handle = serve_entity_b(&source, bind, &config).map_err(sim_to_cli)?;
    let mut manifest = RunManifest::new(
        "serve",
        seed,
        serde_json::json!({"curve": source.to_string(), "bind": bind, "workers": workers}),
    );
    manifest.record_output(Path::new(&handle.base_url()));
    manifest
        .finish(out_dir)
        .map_err(|e| io_usage("writing manifest", e))?;
    println!("serving {} on {}", source, handle.base_url());
    println!("endpoints: GET /ecc_params, GET /public_key, POST /order");
    println!("press Ctrl-C to stop");
    loop {
        std::thread::sleep(Duration::from_secs(3600));
    }
}

pub fn replay(
    server: &str,
    orders: Option<PathBuf>,
    duration: f64,
    interval: f64,
    seed: u64,
    out_dir: &Path,
) -> Result<(), CliError> {
    let orders_source = match orders {
        Some(path) => OrdersSource::Path(path),
        None => OrdersSource::Bundled,
    };
    let opts = ReplayOptions {
        duration: Duration::from_secs_f64(duration.max(0.0)),
        interval: Duration::from_secs_f64(interval.max(0.0)),
        ..ReplayOptions::default()
    };
    let mut rng = seed_rng(seed);
    let summary = run_entity_a(server, &orders_source, &opts, &mut rng).map_err(sim_to_cli)?;
    println!(
        "sent={} accepted={} rejected={} connection_failures={} skipped_rows={}",
        summary.sent,
        summary.accepted,
        summary.rejected,
        summary.connection_failures,
        summary.skipped_rows
    );
    println!(
        "latency_ms min={} avg={} max={}",
        summary.latency.min_ms, summary.latency.avg_ms, summary.latency.max_ms
    );
    ensure_out_dir(out_dir)?;
    let mut manifest = RunManifest::new(
        "replay",
        seed,
        serde_json::json!({
            "server": server,
            "duration": duration,
            "interval": interval,
            "summary": summary,
        }),
    );
    manifest.record_output(Path::new("stdout"));
    manifest
        .finish(out_dir)
        .map_err(|e| io_usage("writing manifest", e))?;
    Ok(())
}

pub fn attack(
    server: &str,
    workers: usize,
    step_budget: u64,
    seed: u64,
    out_dir: &Path,
) -> Result<(), CliError> {
    let report = attack_entity_b(server, workers, step_budget, seed)
        .map_err(|e| CliError::Domain(e.to_string()))?;
    for worker in &report.workers {
        println!(
            "walker {}: {} loops over {} walks",
            worker.worker, worker.loops, worker.walks
        );
    }
    println!("wall_seconds {}", report.wall_seconds);
    ensure_out_dir(out_dir)?;
    let mut manifest = RunManifest::new(
        "attack",
        seed,
        serde_json::json!({"server": server, "workers": workers, "step_budget": step_budget}),
    );
    let report_path = out_dir.join("attack_report.json");
    std::fs::write(
        &report_path,
        serde_json::to_string_pretty(&report).expect("report serializes"),
    )
    .map_err(|e| io_usage("writing attack report", e))?;
    manifest.record_output(&report_path);
    manifest
        .finish(out_dir)
        .map_err(|e| io_usage("writing manifest", e))?;
    match report.key {
        Some(key) => {
            println!("recovered private key: {key}");
            Ok(())
        }
        None => {
            println!("no collision found within the step budget");
            Err(CliError::Domain("attack exhausted its step budget".into()))
        }
    }
}

pub fn compare(flags: &OptimizeFlags, out_dir: &Path) -> Result<(), CliError> {
    let run = resolve_configs(flags);
    ensure_out_dir(out_dir)?;
    let mut manifest = RunManifest::new(
        "compare",
        flags.seed,
        serde_json::json!({"ga": run.ga, "pso": run.pso, "probe": run.probe}),
    );

    let ga_dir = out_dir.join("ga");
    let mut ga_manifest = RunManifest::new(
        "compare/ga",
        flags.seed,
        serde_json::json!({"ga": run.ga, "probe": run.probe}),
    );
    let ga = run_one(Algorithm::Ga, &run, &ga_dir, &mut ga_manifest)?;
    ga_manifest
        .finish(&ga_dir)
        .map_err(|e| io_usage("writing ga manifest", e))?;

    let pso_dir = out_dir.join("pso");
    let mut pso_manifest = RunManifest::new(
        "compare/pso",
        flags.seed,
        serde_json::json!({"pso": run.pso, "probe": run.probe}),
    );
    let pso = run_one(Algorithm::Pso, &run, &pso_dir, &mut pso_manifest)?;
    pso_manifest
        .finish(&pso_dir)
        .map_err(|e| io_usage("writing pso manifest", e))?;

    let ga_final = ga.history.last().expect("nonempty history");
    let pso_final = pso.history.last().expect("nonempty history");
    let ga_best_valid = validate_curve(&ga.best.params).is_ok();
    let pso_best_valid = validate_curve(&pso.best.params).is_ok();

    let rows: Vec<(&str, String, String)> = vec![
        (
            "wall_seconds",
            ga.wall_seconds.to_string(),
            pso.wall_seconds.to_string(),
        ),
        (
            "best_fitness",
            ga.best.fitness().to_string(),
            pso.best.fitness().to_string(),
        ),
        ("final_avg", ga_final.avg.to_string(), pso_final.avg.to_string()),
        ("final_std", ga_final.std.to_string(), pso_final.std.to_string()),
        (
            "validity_rate",
            validity_rate(&ga.final_population).to_string(),
            validity_rate(&pso.final_population).to_string(),
        ),
        (
            "probe_successes",
            probe_success_count(&ga.final_population).to_string(),
            probe_success_count(&pso.final_population).to_string(),
        ),
        (
            "rounds_run",
            (ga.history.len() - 1).to_string(),
            (pso.history.len() - 1).to_string(),
        ),
        (
            "best_passes_validation",
            ga_best_valid.to_string(),
            pso_best_valid.to_string(),
        ),
    ];

    let mut table = format!("{:<24}{:<28}{:<28}\n", "criterion", "GA", "PSO");
    for (name, ga_v, pso_v) in &rows {
        table.push_str(&format!("{name:<24}{ga_v:<28}{pso_v:<28}\n"));
    }
    let mut csv = String::from("criterion,ga,pso\n");
    for (name, ga_v, pso_v) in &rows {
        csv.push_str(&format!("{name},{ga_v},{pso_v}\n"));
    }

    print!("{table}");
    if run.ga.bits >= 64 && ga.wall_seconds >= pso.wall_seconds {
        println!(
            "WARN: GA wall time ({}) not below PSO wall time ({}) at {} bits",
            ga.wall_seconds, pso.wall_seconds, run.ga.bits
        );
    }

    let report_txt = out_dir.join("compare_report.txt");
    std::fs::write(&report_txt, &table).map_err(|e| io_usage("writing compare report", e))?;
    manifest.record_output(&report_txt);
    let report_csv = out_dir.join("compare_report.csv");
    std::fs::write(&report_csv, &csv).map_err(|e| io_usage("writing compare csv", e))?;
    manifest.record_output(&report_csv);
    manifest
        .finish(out_dir)
        .map_err(|e| io_usage("writing manifest", e))?;

    if !ga_best_valid || !pso_best_valid {
        return Err(CliError::Domain(
            "an optimizer's best candidate failed validation".into(),
        ));
    }
    Ok(())
}
