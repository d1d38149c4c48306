//! Subcommand implementations. Each writes its files into the output
//! directory, including a JSON file that echoes the resolved config, and
//! returns a short JSON summary for stdout.

use std::fs;
use std::path::Path;

use aqo_core::dos;
use aqo_core::evolution::{IntegratorConfig, Propagator};
use aqo_core::experiments::{self, SweepConfig, TSearch};
use aqo_core::hamiltonian::{DriverParams, Schedule};
use aqo_core::partition::{brute_force_min_residue, Problem, SppInstance};
use aqo_core::spectral;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::cli::{Cli, Command, DosArgs, EvolveArgs, GenArgs, InstanceArgs, OracleArgs, SpectrumArgs, SweepNArgs, SweepTArgs};
use crate::error::{CliError, Result};
use crate::io;

/// Largest n for which `gen` prints the exhaustive optimum.
pub const GEN_ORACLE_MAX_N: usize = 22;

pub fn execute(cli: &Cli) -> Result<Value> {
    if cli.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    fs::create_dir_all(&cli.out_dir).map_err(|e| CliError::io(&cli.out_dir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} worker threads: {e}", cli.jobs)))?;
    let config = json!(cli);
    let out = cli.out_dir.as_path();
    pool.install(|| match &cli.command {
        Command::Gen(a) => gen(a, out, config),
        Command::Evolve(a) => evolve(a, out, config),
        Command::SweepT(a) => sweep_t(a, out, config),
        Command::SweepN(a) => sweep_n(a, out, config),
        Command::Spectrum(a) => spectrum(a, out, config),
        Command::Dos(a) => dos_cmd(a, out, config),
        Command::Oracle(a) => oracle(a, out, config),
    })
}

fn load_instance(args: &InstanceArgs) -> Result<SppInstance> {
    match (&args.instance, args.n) {
        (Some(path), _) => io::read_instance(path),
        (None, Some(n)) => Ok(SppInstance::generate(n, args.b, args.seed)?),
        (None, None) => Err(CliError::Usage("give either --instance FILE or --n".into())),
    }
}

fn load_problem(args: &InstanceArgs) -> Result<Problem> {
    Ok(Problem::new(load_instance(args)?, args.k_multiplier)?)
}

fn costs_summary(problem: &Problem) -> Value {
    let c = problem.costs();
    json!({
        "delta": c.delta(),
        "levels": c.levels(),
        "d0": c.d0(),
        "degenerate": c.is_degenerate(),
        "degeneracies": c.degeneracies(),
    })
}

fn gen(args: &GenArgs, out: &Path, config: Value) -> Result<Value> {
    let inst = SppInstance::generate(args.n, args.b, args.seed)?;
    let path = args.out.clone().unwrap_or_else(|| out.join("instance.json"));
    io::write_instance(&path, &inst)?;
    let mut summary = json!({ "config": config, "file": path });
    if inst.n() <= GEN_ORACLE_MAX_N {
        let (best, optimal) = brute_force_min_residue(&inst)?;
        summary["oracle"] = json!({
            "min_residue": inst.to_unit(best as i64),
            "min_residue_units": best,
            "optimal_count": optimal.len(),
        });
    }
    Ok(summary)
}

fn integrator(prop: &Propagator<'_>, args: &crate::cli::IntegratorArgs) -> IntegratorConfig {
    let mut cfg = prop.default_config(args.method.into());
    if let Some(dt) = args.dt {
        cfg.dt = dt;
    }
    cfg
}

fn evolve(args: &EvolveArgs, out: &Path, config: Value) -> Result<Value> {
    let problem = load_problem(&args.instance)?;
    let params = DriverParams::uniform(problem.n());
    let schedule = Schedule::linear().with_shift(args.integrator.shift);
    let prop = Propagator::new(&problem, &params, schedule)?;
    let mut cfg = integrator(&prop, &args.integrator);
    cfg.record_profile_at = args.snapshot_at.clone();
    let result = prop.run(args.duration, &cfg)?;

    io::write_profile_csv(&out.join("profile.csv"), &problem, &result.final_state.probabilities())?;
    io::write_costs_csv(&out.join("costs.csv"), problem.costs())?;
    if args.checkpoint {
        io::write_state(&out.join("state.bin"), &result.final_state)?;
    }
    let mut result_json = json!(result);
    // The full profile goes to profile.csv.
    if let Some(obj) = result_json.as_object_mut() {
        obj.remove("profile");
    }
    let doc = json!({
        "config": config,
        "integrator": cfg,
        "instance": problem.instance(),
        "costs": costs_summary(&problem),
        "result": result_json,
    });
    io::write_json(&out.join("evolve.json"), &doc)?;
    Ok(json!({
        "config": config,
        "p0": result.p0,
        "d0": problem.costs().d0(),
        "steps": result.steps,
        "norm_drift": result.norm_drift,
        "complexity": experiments::complexity(args.duration, result.p0, problem.costs().d0()),
    }))
}

fn sweep_t(args: &SweepTArgs, out: &Path, config: Value) -> Result<Value> {
    let problem = load_problem(&args.instance)?;
    let params = DriverParams::uniform(problem.n());
    let schedule = Schedule::linear().with_shift(args.integrator.shift);
    let prop = Propagator::new(&problem, &params, schedule)?;
    let cfg = integrator(&prop, &args.integrator);
    let mut search = TSearch::for_size(problem.n());
    search.t_min = args.t_min.unwrap_or(search.t_min);
    search.t_max = args.t_max.unwrap_or(search.t_max);
    search.grid_points = args.grid_points;
    search.budget = args.budget;

    let curve = experiments::minimize_batched(&search, problem.costs().d0(), |ts| {
        ts.par_iter().map(|&t| Ok(prop.run(t, &cfg)?.p0)).collect()
    })?;

    io::write_curve_csv(&out.join("curve.csv"), &curve)?;
    io::write_text(&out.join("curve.gp"), &io::curve_script("curve.csv"))?;
    let doc = json!({
        "config": config,
        "integrator": cfg,
        "search": search,
        "instance": problem.instance(),
        "costs": costs_summary(&problem),
        "result": curve,
    });
    io::write_json(&out.join("sweep_t.json"), &doc)?;
    Ok(json!({
        "config": config,
        "t_star": curve.t_star,
        "c_star": curve.c_star,
        "p0_star": curve.p0_star,
        "d0": curve.d0,
        "unbracketed": curve.unbracketed,
        "evaluations": curve.points.len(),
    }))
}

fn sweep_n(args: &SweepNArgs, out: &Path, config: Value) -> Result<Value> {
    if args.n_min > args.n_max {
        return Err(CliError::Usage(format!("empty n range {}..={}", args.n_min, args.n_max)));
    }
    let search = match (args.t_min, args.t_max) {
        (None, None) => None,
        (lo, hi) => {
            let base = TSearch::for_size(args.n_max);
            Some(TSearch {
                t_min: lo.unwrap_or(base.t_min),
                t_max: hi.unwrap_or(base.t_max),
                grid_points: args.grid_points,
                budget: args.budget,
                rel_tol: base.rel_tol,
            })
        }
    };
    let cfg = SweepConfig {
        n_values: (args.n_min..=args.n_max).collect(),
        instances_per_n: args.instances,
        b: args.b,
        k_multiplier: args.k_multiplier,
        base_seed: args.seed,
        method: args.method.into(),
        dt: args.dt,
        search,
        fit_window: (args.fit_min.unwrap_or(args.n_min), args.fit_max.unwrap_or(args.n_max)),
    };
    cfg.validate()?;
    let jobs: Vec<(usize, usize)> =
        cfg.n_values.iter().flat_map(|&n| (0..cfg.instances_per_n).map(move |i| (n, i))).collect();
    let outcomes = jobs
        .par_iter()
        .map(|&(n, i)| {
            let mut local = cfg.clone();
            if local.search.is_none() {
                let mut s = TSearch::for_size(n);
                s.grid_points = args.grid_points;
                s.budget = args.budget;
                local.search = Some(s);
            }
            experiments::run_instance(&local, n, i, &DriverParams::uniform(n))
        })
        .collect();
    let report = experiments::assemble_report(&cfg, outcomes);

    io::write_sweep_csv(&out.join("sweep_n.csv"), &report)?;
    let (scatter, medians) = io::scaling_data(&report);
    io::write_text(&out.join("scaling_scatter.dat"), &scatter)?;
    io::write_text(&out.join("scaling_medians.dat"), &medians)?;
    let fit = report.fit.as_ref().map(|f| (f.slope, f.intercept));
    io::write_text(
        &out.join("scaling.gp"),
        &io::scaling_script("scaling_scatter.dat", "scaling_medians.dat", fit),
    )?;
    let failures: usize = report.per_n.iter().map(|s| s.failures).sum();
    let summary = json!({
        "config": config,
        "sweep": cfg,
        "per_n": report.per_n,
        "fit": report.fit,
        "base2_exponent": report.fit.as_ref().map(|f| f.base2_exponent()),
        "failures": failures,
    });
    io::write_json(&out.join("sweep_n.json"), &summary)?;
    Ok(json!({
        "config": config,
        "slope": report.fit.as_ref().map(|f| f.slope),
        "medians": report.per_n.iter().map(|s| json!({"n": s.n, "median_c_star": s.median_c_star})).collect::<Vec<_>>(),
        "failures": failures,
    }))
}

fn spectrum(args: &SpectrumArgs, out: &Path, config: Value) -> Result<Value> {
    let problem = load_problem(&args.instance)?;
    let params = DriverParams::uniform(problem.n());
    let schedule = Schedule::linear().with_shift(args.shift);
    let grid = spectral::uniform_grid(args.s_points);
    let mut res = spectral::adiabatic_spectrum(&problem, &params, &schedule, &grid, args.levels)?;
    if args.refine > 0 && res.min_gap.is_some() {
        res.refine(args.refine)?;
    }
    let eta = match (args.duration, res.min_gap) {
        (Some(t), Some(_)) => Some(res.eta(t)?),
        _ => None,
    };
    let v_tilde = res.v_tilde().ok();

    io::write_spectrum_csv(&out.join("spectrum.csv"), &res)?;
    io::write_text(&out.join("spectrum.gp"), &io::spectrum_script("spectrum.csv", args.levels))?;
    let final_merging = res.merging_count(res.s_grid.len() - 1);
    let gap = json!({
        "config": config,
        "min_gap": res.min_gap.map(|g| g.gap),
        "s_star": res.min_gap.map(|g| g.s_star),
        "gap_level": res.min_gap.map(|g| g.level),
        "eta": eta,
        "v_tilde": v_tilde,
        "merging_at_end": final_merging,
        "d0": problem.costs().d0(),
        "warnings": res.warnings,
        "costs": costs_summary(&problem),
    });
    let mut gap = gap;
    if res.min_gap.is_none() {
        gap["note"] = json!(format!(
            "every computed level merges into the ground level; use --levels > d0 = {}",
            problem.costs().d0()
        ));
    }
    io::write_json(&out.join("gap.json"), &gap)?;
    Ok(gap)
}

fn dos_cmd(args: &DosArgs, out: &Path, config: Value) -> Result<Value> {
    let problem = load_problem(&args.instance)?;
    let inst = problem.instance();
    let window = args.window.unwrap_or_else(|| dos::default_window(inst.n()));
    let hist = dos::coarse_grained_dos(inst, problem.table(), window)?;
    io::write_dos_csv(&out.join("dos.csv"), &hist)?;
    io::write_text(&out.join("dos.gp"), &io::dos_script("dos.csv"))?;
    let resonances = if args.q.is_empty() {
        None
    } else {
        let reports = dos::approximate_gcd_scan(inst, &args.q)?;
        let doc = json!({ "config": config, "resonances": reports });
        io::write_json(&out.join("resonance.json"), &doc)?;
        Some(reports)
    };
    let summary = json!({
        "config": config,
        "window": hist.window,
        "sigma2": hist.sigma2,
        "bins": hist.bin_centers.len(),
        "total_mass": hist.total_mass(),
        "mean_relative_error": hist.mean_relative_error(hist.width()),
        "resonances_passing": resonances.map(|r| r.iter().filter(|r| r.passes).count()),
    });
    io::write_json(&out.join("dos.json"), &summary)?;
    Ok(summary)
}

fn oracle(args: &OracleArgs, out: &Path, config: Value) -> Result<Value> {
    let problem = load_problem(&args.instance)?;
    let inst = problem.instance();
    let (best, optimal) = brute_force_min_residue(inst)?;
    io::write_costs_csv(&out.join("costs.csv"), problem.costs())?;
    let first: Option<String> = optimal.first().map(|&z| {
        // Bit j of z is the side of a_j.
        (0..inst.n()).map(|j| if z >> j & 1 == 1 { '1' } else { '0' }).collect()
    });
    let doc = json!({
        "config": config,
        "min_residue": inst.to_unit(best as i64),
        "min_residue_units": best,
        "optimal_count": optimal.len(),
        "first_optimum_bits": first,
        "costs": costs_summary(&problem),
    });
    io::write_json(&out.join("oracle.json"), &doc)?;
    Ok(doc)
}
