//! `ptcs`: coherent states, quantization and phase-space dynamics for
//! trigonometric Poschl-Teller wells.

mod render;
mod symbols;
mod units;

use std::f64::consts::PI;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ptcs_core::checks::{run_suite, CheckOptions, Tolerances, SUITES};
use ptcs_core::coherent_states::{cs_coefficients, cs_moments, CoherentState};
use ptcs_core::cs_quantization::{lower_symbol, quantize, Observable, OperatorKind};
use ptcs_core::dynamics::{
    autocorrelation, classical_trajectory, evolve, husimi, mean_energy_closed_form, time_averaged_husimi,
};
use ptcs_core::eigensystem::{energy, EigenBasis, DEFAULT_NMAX};
use ptcs_core::io::{emit_grid, format_float, read_curve, read_grid, write_curve, write_grid, GridData};
use ptcs_core::physical_model::{GridSpec, PhysicalConfig, Units, DEFAULT_Q_MARGIN};
use ptcs_core::wavefunction::Wavefunction;
use serde_json::json;

use crate::units::Boundary;

#[derive(Parser)]
#[command(
    name = "ptcs",
    version,
    about = "Coherent states and phase-space dynamics in Poschl-Teller wells"
)]
struct Cli {
    /// JSON file with `L` and `mass` or `particle`, optional `hbar`, `nu`, `units`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Potential strength (overrides the config).
    #[arg(long, global = true)]
    nu: Option<f64>,
    /// Highest eigenbasis index.
    #[arg(long, global = true, default_value_t = DEFAULT_NMAX)]
    nmax: usize,
    /// `natural` (reduced: L = pi, hbar = 1, E0 = 1) or `SI` (the config's units).
    #[arg(long, global = true)]
    units: Option<Units>,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 20_100_801)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Energies, or eigenfunctions sampled on a grid.
    Eigen(EigenArgs),
    /// Coherent-state wavefunction and moments.
    Cs(CsArgs),
    /// Quantize a classical symbol: multiplier values or an eigenbasis matrix.
    Quantize(QuantizeArgs),
    /// Lower symbol of an observable at a label.
    Symbols(SymbolsArgs),
    /// Husimi density of an evolved coherent state.
    Husimi(HusimiArgs),
    /// Autocorrelation and energy of an evolved coherent state.
    Evolve(EvolveArgs),
    /// Classical orbit at a given energy.
    Trajectory(TrajectoryArgs),
    /// Run an invariant suite; exits nonzero on failure.
    Check(CheckArgs),
    /// Render a grid CSV as a PNG heatmap.
    Render(RenderArgs),
}

#[derive(Args)]
struct Output {
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

impl Output {
    fn writer(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(path) => Box::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?),
            None => Box::new(io::stdout().lock()),
        })
    }
}

#[derive(Args)]
struct Label {
    /// Label position.
    #[arg(long, allow_hyphen_values = true)]
    q: f64,
    /// Label momentum.
    #[arg(long, allow_hyphen_values = true)]
    p: f64,
    /// Potential strength of the coherent-state family (defaults to --nu).
    #[arg(long)]
    nu_cs: Option<f64>,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long, default_value_t = 256)]
    grid_q: usize,
    #[arg(long, default_value_t = 256)]
    grid_p: usize,
    /// Momentum window half-width, reduced units.
    #[arg(long, default_value_t = 12.0)]
    p_max: f64,
    /// Distance of the first and last q-cells from the walls, reduced units.
    #[arg(long, default_value_t = DEFAULT_Q_MARGIN)]
    q_margin: f64,
}

impl GridArgs {
    fn spec(&self) -> Result<GridSpec> {
        Ok(GridSpec::new(self.grid_q, self.grid_p, self.p_max, self.q_margin)?)
    }
}

#[derive(Args)]
struct EigenArgs {
    /// Sample phi_0..phi_nmax at this many points instead of listing energies.
    #[arg(long)]
    points: Option<usize>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct CsArgs {
    #[command(flatten)]
    label: Label,
    /// Also write the wavefunction at this many points to --out.
    #[arg(long, default_value_t = 512)]
    points: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct QuantizeArgs {
    /// Built-in name (unit, position, superpotential, potential, momentum, p2,
    /// hamiltonian) or `<u-expr>:<p-degree>` with `x` in [0, pi].
    #[arg(long, allow_hyphen_values = true)]
    symbol: String,
    /// Emit the eigenbasis matrix even for multiplication operators.
    #[arg(long)]
    matrix: bool,
    /// Points for multiplier output.
    #[arg(long, default_value_t = 256)]
    points: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SymbolsArgs {
    /// position, superpotential, potential, momentum, p2, or a quantized symbol spec.
    #[arg(long, allow_hyphen_values = true)]
    observable: String,
    #[command(flatten)]
    label: Label,
}

#[derive(Args)]
struct HusimiArgs {
    #[command(flatten)]
    label: Label,
    /// Evolution time, or `avg` for the long-time average.
    #[arg(long, default_value = "0")]
    t: String,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct EvolveArgs {
    #[command(flatten)]
    label: Label,
    /// Final time (default: one revival period).
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long, default_value_t = 200)]
    steps: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct TrajectoryArgs {
    /// Orbit energy; alternatively give --q and --p to use the coherent-state mean energy.
    #[arg(long)]
    energy: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    q: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    p: Option<f64>,
    #[arg(long, default_value_t = 400)]
    points: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct CheckArgs {
    /// One of eigen, susy, cs, identity, table1, table2, dynamics, all.
    #[arg(long, default_value = "all")]
    suite: String,
    /// Tolerance override: `<bound>` for every case or `<case>=<bound>`.
    #[arg(long)]
    tol: Vec<String>,
    /// Write the report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args)]
struct RenderArgs {
    /// Grid CSV written by `husimi`.
    #[arg(long)]
    input: PathBuf,
    /// Curve CSV (`q,p`) drawn on top, e.g. from `trajectory`.
    #[arg(long)]
    overlay: Option<PathBuf>,
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = 800)]
    width: u32,
    #[arg(long, default_value_t = 600)]
    height: u32,
    #[arg(long, default_value = "")]
    title: String,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(value) = std::env::var("PTCS_THREADS") {
        let n: usize = value
            .parse()
            .with_context(|| format!("PTCS_THREADS = `{value}` is not a count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    configure_threads()?;
    let config = cli.config.as_deref().map(PhysicalConfig::from_json_file).transpose()?;
    let io = Boundary::new(config, cli.units, cli.nu)?;
    let nmax = cli.nmax;
    match cli.command {
        Command::Eigen(args) => eigen_cmd(&io, nmax, args),
        Command::Cs(args) => cs_cmd(&io, nmax, args),
        Command::Quantize(args) => quantize_cmd(&io, nmax, args),
        Command::Symbols(args) => symbols_cmd(&io, nmax, args),
        Command::Husimi(args) => husimi_cmd(&io, nmax, args),
        Command::Evolve(args) => evolve_cmd(&io, nmax, args),
        Command::Trajectory(args) => trajectory_cmd(&io, args),
        Command::Check(args) => return check_cmd(cli.seed, nmax, args),
        Command::Render(args) => render_cmd(args),
    }?;
    Ok(ExitCode::SUCCESS)
}

fn write_header(out: &mut dyn Write, metadata: &[(String, String)]) -> Result<()> {
    for (k, v) in metadata {
        writeln!(out, "# {k} = {v}")?;
    }
    Ok(())
}

fn eigen_cmd(io: &Boundary, nmax: usize, args: EigenArgs) -> Result<()> {
    let mut out = args.output.writer()?;
    write_header(&mut out, &io.metadata())?;
    match args.points {
        None => {
            writeln!(out, "n,energy")?;
            for n in 0..=nmax {
                writeln!(out, "{n},{}", format_float(io.energy_out(energy(n, io.nu()))))?;
            }
        }
        Some(points) => {
            if points < 2 {
                bail!("--points must be at least 2");
            }
            let basis = EigenBasis::new(io.nu(), nmax)?;
            let header: Vec<String> = (0..=nmax).map(|n| format!("phi_{n}")).collect();
            writeln!(out, "x,{}", header.join(","))?;
            let mut values = vec![0.0; basis.len()];
            let scale = io.wavefunction_scale();
            for k in 0..points {
                let t = PI * k as f64 / (points - 1) as f64;
                basis.values(t, &mut values);
                let row: Vec<String> = values.iter().map(|v| format_float(v * scale)).collect();
                writeln!(out, "{},{}", format_float(io.position_out(t)), row.join(","))?;
            }
        }
    }
    Ok(())
}

struct ReducedLabel {
    nu_cs: f64,
    q: f64,
    p: f64,
}

fn reduced_label(io: &Boundary, label: &Label) -> Result<ReducedLabel> {
    Ok(ReducedLabel {
        nu_cs: label.nu_cs.unwrap_or(io.nu()),
        q: io.position_in(label.q)?,
        p: io.momentum_in(label.p),
    })
}

fn cs_cmd(io: &Boundary, nmax: usize, args: CsArgs) -> Result<()> {
    let l = reduced_label(io, &args.label)?;
    let state = CoherentState::new(l.nu_cs, l.q, l.p)?;
    let m = cs_moments(l.nu_cs, l.q, l.p)?;
    let coeffs = cs_coefficients(l.nu_cs, l.q, l.p, io.nu(), nmax)?;
    let z = state.eigenvalue();
    let summary = json!({
        "units": io.unit_label(),
        "nu_cs": l.nu_cs,
        "q": l.q,
        "p": l.p,
        "eigenvalue": [z.re, z.im],
        "normalization": state.normalization(),
        "norm": m.norm,
        "mean_p": m.mean_p.re,
        "delta_p": m.delta_p,
        "mean_w": m.mean_w,
        "delta_w": m.delta_w,
        "mean_w_prime": m.mean_w_prime,
        "saturation_defect": m.saturation_defect,
        "basis_nu": io.nu(),
        "nmax": nmax,
        "truncation_mass": coeffs.truncation_mass,
    });
    if let Some(path) = &args.output.out {
        let mut out = args.output.writer()?;
        let mut meta = io.metadata();
        meta.push(("q".into(), args.label.q.to_string()));
        meta.push(("p".into(), args.label.p.to_string()));
        write_header(&mut out, &meta)?;
        writeln!(out, "x,re,im,abs")?;
        let scale = io.wavefunction_scale();
        for k in 0..args.points.max(2) {
            let t = PI * k as f64 / (args.points.max(2) - 1) as f64;
            let v = state.value(t) * scale;
            writeln!(
                out,
                "{},{},{},{}",
                format_float(io.position_out(t)),
                format_float(v.re),
                format_float(v.im),
                format_float(v.norm())
            )?;
        }
        log::info!("wavefunction written to {}", path.display());
    }
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn quantize_cmd(io: &Boundary, nmax: usize, args: QuantizeArgs) -> Result<()> {
    let symbol = symbols::parse_symbol(&args.symbol, io.nu())?;
    let op = quantize(&symbol, io.nu(), nmax)?;
    let mut out = args.output.writer()?;
    match (&op.kind, args.matrix) {
        (OperatorKind::Multiplier(m), false) => {
            write_header(&mut out, &io.metadata())?;
            writeln!(out, "# symbol = {}", args.symbol)?;
            writeln!(out, "x,value,error")?;
            let n = args.points.max(1);
            for k in 1..=n {
                let x = PI * k as f64 / (n + 1) as f64;
                let e = m.estimate(x)?;
                writeln!(
                    out,
                    "{},{},{}",
                    format_float(x),
                    format_float(e.value),
                    format_float(e.error)
                )?;
            }
        }
        _ => {
            let mat = op.to_matrix(nmax)?;
            let re: Vec<Vec<f64>> = mat
                .data
                .rows()
                .into_iter()
                .map(|r| r.iter().map(|z| z.re).collect())
                .collect();
            let im: Vec<Vec<f64>> = mat
                .data
                .rows()
                .into_iter()
                .map(|r| r.iter().map(|z| z.im).collect())
                .collect();
            let doc = json!({
                "symbol": args.symbol,
                "nu": io.nu(),
                "nmax": mat.nmax(),
                "hermiticity_defect": mat.hermiticity_defect(),
                "re": re,
                "im": im,
            });
            writeln!(out, "{}", serde_json::to_string(&doc)?)?;
        }
    }
    Ok(())
}

fn observable(spec: &str, nu: f64, nmax: usize) -> Result<Observable> {
    Ok(match spec {
        "position" | "q" => Observable::Position,
        "superpotential" | "W" => Observable::Superpotential,
        "potential" | "inverse_sin_squared" => Observable::InverseSinSquared,
        "momentum" | "p" => Observable::Momentum,
        "momentum_squared" | "p2" => Observable::MomentumSquared,
        other => {
            let symbol = symbols::parse_symbol(other, nu)?;
            Observable::Quantized(std::sync::Arc::new(quantize(&symbol, nu, nmax)?))
        }
    })
}

fn symbols_cmd(io: &Boundary, nmax: usize, args: SymbolsArgs) -> Result<()> {
    let l = reduced_label(io, &args.label)?;
    let op = observable(&args.observable, l.nu_cs, nmax)?;
    let s = lower_symbol(&op, l.nu_cs, l.q, l.p)?;
    let doc = json!({
        "observable": args.observable,
        "units": "reduced",
        "nu_cs": l.nu_cs,
        "q": l.q,
        "p": l.p,
        "value": [s.value.re, s.value.im],
        "error": s.error,
        "truncation_mass": s.truncation_mass,
        "truncation_dominated": s.truncation_dominated,
    });
    println!("{}", serde_json::to_string_pretty(&doc)?);
    Ok(())
}

fn husimi_cmd(io: &Boundary, nmax: usize, args: HusimiArgs) -> Result<()> {
    let l = reduced_label(io, &args.label)?;
    let grid = args.grid.spec()?;
    let state = cs_coefficients(l.nu_cs, l.q, l.p, io.nu(), nmax)?.state;
    let mut meta = io.metadata();
    meta.extend([
        ("nu_cs".to_string(), l.nu_cs.to_string()),
        ("q0".to_string(), args.label.q.to_string()),
        ("p0".to_string(), args.label.p.to_string()),
        ("nmax".to_string(), nmax.to_string()),
        ("t".to_string(), args.t.clone()),
    ]);
    let dist = if args.t == "avg" {
        time_averaged_husimi(&state, l.nu_cs, &grid)?
    } else {
        let t: f64 = args
            .t
            .parse()
            .with_context(|| format!("--t `{}` is neither a time nor `avg`", args.t))?;
        let evolved = evolve(&state, io.time_in(t), io.nu())?;
        husimi(&evolved, l.nu_cs, &grid)?
    };
    meta.push(("mass".to_string(), dist.mass().to_string()));
    let data = GridData::from_distribution(&dist, meta);
    let data = if io.si {
        data.scaled(io.position_out(1.0), io.momentum_out(1.0), io.density_scale())
    } else {
        data
    };
    match &args.output.out {
        Some(path) => emit_grid(&data, path)?,
        None => write_grid(&data, io::stdout().lock())?,
    }
    Ok(())
}

fn evolve_cmd(io: &Boundary, nmax: usize, args: EvolveArgs) -> Result<()> {
    let l = reduced_label(io, &args.label)?;
    let state = cs_coefficients(l.nu_cs, l.q, l.p, io.nu(), nmax)?.state;
    let t_max = args.t_max.map(|t| io.time_in(t)).unwrap_or(2.0 * PI);
    let steps = args.steps.max(1);
    let mut out = args.output.writer()?;
    let mut meta = io.metadata();
    meta.push((
        "mean_energy_closed_form".into(),
        format_float(io.energy_out(mean_energy_closed_form(l.nu_cs, l.q, l.p, io.nu()))),
    ));
    meta.push(("truncation_mass".into(), format_float(state.truncation_mass())));
    write_header(&mut out, &meta)?;
    writeln!(out, "t,abs_autocorrelation,re,im,mean_energy,norm")?;
    for k in 0..=steps {
        let t = t_max * k as f64 / steps as f64;
        let a = autocorrelation(&state, t, io.nu())?;
        let evolved = evolve(&state, t, io.nu())?;
        writeln!(
            out,
            "{},{},{},{},{},{}",
            format_float(io.time_out(t)),
            format_float(a.norm()),
            format_float(a.re),
            format_float(a.im),
            format_float(io.energy_out(evolved.mean_energy())),
            format_float(evolved.norm_sqr())
        )?;
    }
    Ok(())
}

fn trajectory_cmd(io: &Boundary, args: TrajectoryArgs) -> Result<()> {
    let e = match (args.energy, args.q, args.p) {
        (Some(e), None, None) => io.energy_in(e),
        (None, Some(q), Some(p)) => mean_energy_closed_form(io.nu(), io.position_in(q)?, io.momentum_in(p), io.nu()),
        _ => bail!("give either --energy or both --q and --p"),
    };
    let points = classical_trajectory(e, io.nu(), args.points)?;
    let points: Vec<(f64, f64)> = points
        .into_iter()
        .map(|(q, p)| (io.position_out(q), io.momentum_out(p)))
        .collect();
    let mut meta = io.metadata();
    meta.push(("energy".into(), format_float(io.energy_out(e))));
    match &args.output.out {
        Some(path) => write_curve(path, &points, &meta)?,
        None => {
            let mut out = io::stdout().lock();
            write_header(&mut out, &meta)?;
            writeln!(out, "q,p")?;
            for (q, p) in points {
                writeln!(out, "{},{}", format_float(q), format_float(p))?;
            }
        }
    }
    Ok(())
}

fn check_cmd(seed: u64, nmax: usize, args: CheckArgs) -> Result<ExitCode> {
    if !SUITES.contains(&args.suite.as_str()) {
        bail!("unknown suite `{}`; expected one of {}", args.suite, SUITES.join(", "));
    }
    let opts = CheckOptions {
        seed,
        tolerances: Tolerances::parse(&args.tol)?,
        grid: args.grid.spec()?,
        nmax,
    };
    let report = run_suite(&args.suite, &opts)?;
    print!("{}", report.render());
    if let Some(path) = &args.json {
        std::fs::write(path, serde_json::to_string_pretty(&report)?)
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    let failed = report.failures().count();
    println!("{} of {} cases failed", failed, report.cases.len());
    Ok(if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn render_cmd(args: RenderArgs) -> Result<()> {
    let data = read_grid(&args.input)?;
    let overlay = args.overlay.as_deref().map(read_curve).transpose()?;
    let opts = render::RenderOptions {
        width: args.width,
        height: args.height,
        title: args.title,
    };
    render::render(&data, overlay.as_deref(), &opts, Path::new(&args.out))
}
