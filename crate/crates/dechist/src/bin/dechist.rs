//! Command-line front end: parses an experiment config, runs the requested
//! analysis (optionally swept over dephasing rates), and emits CSV tables.
//!
//! Exit codes: 0 success, 2 configuration error, 3 budget exceeded,
//! 1 anything else.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_complex::Complex;

use dechist::config::{parse_basis, ExperimentConfig};
use dechist::dynamics::{delocalization, evolve, populations};
use dechist::histories::ProjectionBasis;
use dechist::measures::{
    average_coherence_q, average_interference, coherence_scan, efficiency_decomposition,
    interference_trace,
};
use dechist::numerics::eigvals_hermitian;
use dechist::report::{config_hash, csv_path, CsvTable, CsvValue};
use dechist::{Error, Result};

#[derive(Parser)]
#[command(name = "dechist", version, about = "Decoherent-histories analysis of dephasing-assisted exciton transport")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config (TOML)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the dephasing sweep (repeatable), ps^-1
    #[arg(long = "gamma", global = true)]
    gamma: Vec<f64>,

    /// Override the number of projections N
    #[arg(long, global = true)]
    n: Option<usize>,

    /// Override the projection basis
    #[arg(long, global = true, value_parser = ["site", "exciton"])]
    basis: Option<String>,

    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Output directory (default: from config)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Hamiltonian eigenvalues and oscillation periods
    Eigen,
    /// Populations and delocalization entropy vs time
    Evolve,
    /// Coherence C, C_L, h, h_c vs projection spacing, per gamma
    Coherence,
    /// Time-averaged coherence Q vs gamma, per averaging horizon
    Qavg,
    /// Site interference vs history duration, per gamma, plus averages
    Interference,
    /// Transport efficiency decomposed into classical and interference parts
    Efficiency,
    /// Check a config file; exit 0 iff clean
    Validate,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::BudgetExceeded { .. } => 3,
        Error::ConfigInvalid(_)
        | Error::ParseError(_)
        | Error::FileNotFound(_)
        | Error::Io(_)
        | Error::ModelInvalid(_)
        | Error::StateInvalid(_)
        | Error::InvalidGrid(_)
        | Error::GridTooCoarse(_)
        | Error::IndexOutOfRange { .. }
        | Error::NoTrap => 2,
        _ => 1,
    }
}

/// Everything the subcommands share: parsed config, its hash, and the
/// flag overrides already folded in.
struct Context {
    cfg: ExperimentConfig,
    sha: String,
    gammas: Vec<f64>,
    n: usize,
    basis: ProjectionBasis,
    out_dir: PathBuf,
}

fn load(cli: &Cli) -> Result<Context> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::ConfigInvalid("--config is required".into()))?;
    if !path.exists() {
        return Err(Error::FileNotFound(path.display().to_string()));
    }
    let text = std::fs::read_to_string(path)?;
    let cfg = ExperimentConfig::from_str_toml(&text)?;
    let rep = cfg.validate();
    if !rep.errors.is_empty() {
        return Err(Error::ConfigInvalid(rep.errors.join("; ")));
    }
    let basis = match &cli.basis {
        Some(b) => parse_basis(b)?,
        None => cfg.history.projection_basis()?,
    };
    let gammas = if cli.gamma.is_empty() {
        cfg.gammas()
    } else {
        cli.gamma.clone()
    };
    if gammas.iter().any(|g| *g < 0.0) {
        return Err(Error::ConfigInvalid("--gamma: rates must be >= 0".into()));
    }
    let n = cli.n.unwrap_or(cfg.history.n);
    if n == 0 {
        return Err(Error::ConfigInvalid("--n: must be >= 1".into()));
    }
    let out_dir = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    Ok(Context {
        sha: config_hash(&text),
        cfg,
        gammas,
        n,
        basis,
        out_dir,
    })
}

fn run(cli: &Cli) -> Result<ExitCode> {
    if let Command::Validate = cli.command {
        return validate(cli);
    }
    let ctx = load(cli)?;
    match cli.command {
        Command::Eigen => eigen(&ctx),
        Command::Evolve => evolve_cmd(&ctx),
        Command::Coherence => coherence(&ctx),
        Command::Qavg => qavg(&ctx),
        Command::Interference => interference(&ctx),
        Command::Efficiency => efficiency(&ctx),
        Command::Validate => unreachable!(),
    }?;
    Ok(ExitCode::SUCCESS)
}

fn validate(cli: &Cli) -> Result<ExitCode> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::ConfigInvalid("--config is required".into()))?;
    let cfg = ExperimentConfig::from_path(path)?;
    let rep = cfg.validate();
    for w in &rep.warnings {
        println!("warning: {w}");
    }
    for e in &rep.errors {
        println!("error: {e}");
    }
    if rep.is_clean() {
        println!("ok: {}", path.display());
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(2))
    }
}

/// Stable text form of a rate for filenames and parameter records.
fn gamma_label(g: f64) -> String {
    format!("{g}")
}

fn eigen(ctx: &Context) -> Result<()> {
    let model = ctx.cfg.to_model(None, false)?;
    let h = model
        .hamiltonian()
        .mapv(|x| Complex::new(x, 0.0));
    let mut ev = eigvals_hermitian::<f64>(&h)?;
    ev.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));

    let params = "command=eigen".to_string();
    let mut t = CsvTable::new(
        &["index", "energy_cm1"],
        &ctx.sha,
        &params,
        ctx.cfg.output.precision,
    );
    for (i, e) in ev.iter().enumerate() {
        t.row(&[CsvValue::Int(i as i64 + 1), CsvValue::Real(*e)]);
    }
    t.write_to(&csv_path(&ctx.out_dir, "eigen"))?;

    let kappa = model.energy_to_angular();
    let mut p = CsvTable::new(
        &["level_a", "level_b", "period_ps"],
        &ctx.sha,
        &params,
        ctx.cfg.output.precision,
    );
    for a in 0..ev.len() {
        for b in a + 1..ev.len() {
            let de = (ev[a] - ev[b]).abs();
            if de > 0.0 {
                p.row(&[
                    CsvValue::Int(a as i64 + 1),
                    CsvValue::Int(b as i64 + 1),
                    CsvValue::Real(2.0 * std::f64::consts::PI / (kappa * de)),
                ]);
            }
        }
    }
    p.write_to(&csv_path(&ctx.out_dir, "periods"))?;
    Ok(())
}

fn evolve_cmd(ctx: &Context) -> Result<()> {
    let grid = ctx.cfg.history.dt_grid.points_ps();
    for &g in &ctx.gammas {
        let model = ctx.cfg.to_model(Some(g), true)?;
        let rho0 = ctx.cfg.to_initial_state(&model)?;
        let states = evolve(&model, &rho0, &grid)?;
        let n = model.n_sites();
        let mut cols: Vec<String> = vec!["t_ps".into()];
        cols.extend((1..=n).map(|i| format!("p{i}")));
        if model.trap().is_some() {
            cols.push("p_sink".into());
        }
        cols.push("delocalization".into());
        let col_refs: Vec<&str> = cols.iter().map(|s| s.as_str()).collect();
        let params = format!("command=evolve gamma={}", gamma_label(g));
        let mut t = CsvTable::new(&col_refs, &ctx.sha, &params, ctx.cfg.output.precision);
        for (tp, rho) in grid.iter().zip(&states) {
            let mut row = vec![CsvValue::Real(*tp)];
            row.extend(populations(rho).into_iter().map(CsvValue::Real));
            row.push(CsvValue::Real(delocalization(rho, n)));
            t.row(&row);
        }
        t.write_to(&csv_path(
            &ctx.out_dir,
            &format!("evolve_gamma{}", gamma_label(g)),
        ))?;
    }
    Ok(())
}

fn coherence(ctx: &Context) -> Result<()> {
    let grid = ctx.cfg.history.dt_grid.points_ps();
    let include_trap = ctx.cfg.analysis.coherence_include_trap;
    for &g in &ctx.gammas {
        let model = ctx.cfg.to_model(Some(g), include_trap)?;
        let rho0 = ctx.cfg.to_initial_state(&model)?;
        let scan = coherence_scan(&model, &rho0, ctx.basis, ctx.n, &grid, g)?;
        let params = format!(
            "command=coherence gamma={} basis={} n={}",
            gamma_label(g),
            ctx.basis,
            ctx.n
        );
        let mut t = CsvTable::new(
            &["dt_ps", "c", "c_l", "h", "h_c"],
            &ctx.sha,
            &params,
            ctx.cfg.output.precision,
        );
        for s in &scan.samples {
            t.row(&[
                CsvValue::Real(s.step),
                CsvValue::Real(s.c),
                CsvValue::Real(s.c_l),
                CsvValue::Real(s.h),
                CsvValue::Real(s.h_c),
            ]);
        }
        t.write_to(&csv_path(
            &ctx.out_dir,
            &format!("coherence_gamma{}", gamma_label(g)),
        ))?;
    }
    Ok(())
}

fn qavg(ctx: &Context) -> Result<()> {
    let grid = ctx.cfg.history.dt_grid.points_ps();
    let include_trap = ctx.cfg.analysis.coherence_include_trap;
    let taus: Vec<f64> = ctx
        .cfg
        .analysis
        .tau_d_fs
        .iter()
        .map(|f| f / 1000.0)
        .collect();
    let params = format!("command=qavg basis={} n={}", ctx.basis, ctx.n);
    let mut t = CsvTable::new(
        &["gamma_ps", "tau_d_ps", "q"],
        &ctx.sha,
        &params,
        ctx.cfg.output.precision,
    );
    for &g in &ctx.gammas {
        let model = ctx.cfg.to_model(Some(g), include_trap)?;
        let rho0 = ctx.cfg.to_initial_state(&model)?;
        let scan = coherence_scan(&model, &rho0, ctx.basis, ctx.n, &grid, g)?;
        for &tau in &taus {
            let q = average_coherence_q(&scan, tau)?;
            t.row(&[
                CsvValue::Real(g),
                CsvValue::Real(tau),
                CsvValue::Real(q),
            ]);
        }
    }
    t.write_to(&csv_path(&ctx.out_dir, "qavg"))?;
    Ok(())
}

fn interference(ctx: &Context) -> Result<()> {
    let grid = ctx.cfg.history.dt_grid.points_ps();
    let include_trap = ctx.cfg.analysis.interference_include_trap;
    let site = ctx.cfg.analysis.site - 1;
    let tau_trap = ctx.cfg.analysis.tau_trap_fs / 1000.0;
    let params_avg = format!(
        "command=interference site={} n={} tau_trap_ps={}",
        ctx.cfg.analysis.site,
        ctx.n,
        tau_trap
    );
    let mut avg_table = CsvTable::new(
        &["gamma_ps", "i_pos", "i_neg", "i_tot"],
        &ctx.sha,
        &params_avg,
        ctx.cfg.output.precision,
    );
    for &g in &ctx.gammas {
        let model = ctx.cfg.to_model(Some(g), include_trap)?;
        let rho0 = ctx.cfg.to_initial_state(&model)?;
        let trace = interference_trace(&model, &rho0, site, ctx.n, &grid, g)?;
        let params = format!(
            "command=interference gamma={} site={} n={}",
            gamma_label(g),
            ctx.cfg.analysis.site,
            ctx.n
        );
        let mut t = CsvTable::new(
            &["tau_ps", "interference", "weight_sum", "population"],
            &ctx.sha,
            &params,
            ctx.cfg.output.precision,
        );
        for s in &trace.samples {
            t.row(&[
                CsvValue::Real(s.time),
                CsvValue::Real(s.interference),
                CsvValue::Real(s.weight_sum),
                CsvValue::Real(s.population),
            ]);
        }
        t.write_to(&csv_path(
            &ctx.out_dir,
            &format!("interference_gamma{}", gamma_label(g)),
        ))?;
        let avg = average_interference(&trace, tau_trap)?;
        avg_table.row(&[
            CsvValue::Real(g),
            CsvValue::Real(avg.positive),
            CsvValue::Real(avg.negative),
            CsvValue::Real(avg.total),
        ]);
    }
    avg_table.write_to(&csv_path(&ctx.out_dir, "interference_averages"))?;
    Ok(())
}

fn efficiency(ctx: &Context) -> Result<()> {
    let grid = ctx.cfg.history.dt_grid.points_ps();
    for &g in &ctx.gammas {
        let model = ctx.cfg.to_model(Some(g), true)?;
        if model.trap().is_none() {
            return Err(Error::NoTrap);
        }
        let rho0 = ctx.cfg.to_initial_state(&model)?;
        let trace = efficiency_decomposition(&model, &rho0, ctx.n, &grid)?;
        let params = format!("command=efficiency gamma={} n={}", gamma_label(g), ctx.n);
        let mut t = CsvTable::new(
            &["t_ps", "eta", "classical", "interference", "p_sink"],
            &ctx.sha,
            &params,
            ctx.cfg.output.precision,
        );
        for s in &trace.samples {
            t.row(&[
                CsvValue::Real(s.time),
                CsvValue::Real(s.eta),
                CsvValue::Real(s.classical),
                CsvValue::Real(s.interference),
                CsvValue::Real(s.p_sink),
            ]);
        }
        t.write_to(&csv_path(
            &ctx.out_dir,
            &format!("efficiency_gamma{}", gamma_label(g)),
        ))?;
    }
    Ok(())
}
