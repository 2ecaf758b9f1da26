use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use chainent::dmrg::DmrgConfig;
use chainent::exact_diag::low_spectrum;
use chainent::model::{build_couplings_with, hamiltonian_terms};
use chainent::sweep::{
    emit, onset, preset, run_sweep, write_csv, write_threshold_csv, Grid, OutputFormat, PairLabel, PresetName,
    PresetOverrides, SolverChoice, SweepResult, SweepSpec, VaryParam,
};
use chainent::validation::{run_validation, CORRELATOR_TOL, DMRG_CONCURRENCE_TOL, DMRG_ENERGY_TOL, EQ3_TOL};
use chainent::{Boundary, FieldParity, ModelParams};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

/// Ground-state pairwise entanglement sweeps for alternating XY chains.
#[derive(Parser, Debug)]
#[command(name = "chainent", version)]
struct Cli {
    /// Worker threads for independent grid points and curves.
    #[arg(long, env = "CHAINENT_WORKERS", global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one parameter sweep.
    Sweep(SweepArgs),
    /// Run the sweeps behind one of the figure presets.
    Preset(PresetArgs),
    /// Cross-check the solvers against exact diagonalization.
    Validate(ValidateArgs),
    /// Print the lowest exact levels of each parity sector as JSON.
    Spectrum(SpectrumArgs),
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum BoundaryArg {
    Open,
    Periodic,
}

impl From<BoundaryArg> for Boundary {
    fn from(b: BoundaryArg) -> Self {
        match b {
            BoundaryArg::Open => Boundary::Open,
            BoundaryArg::Periodic => Boundary::Periodic,
        }
    }
}

#[derive(Args, Debug, Default)]
struct DmrgArgs {
    #[arg(long)]
    max_bond: Option<usize>,
    #[arg(long)]
    sweeps: Option<usize>,
    #[arg(long)]
    energy_tol: Option<f64>,
    #[arg(long)]
    cutoff: Option<f64>,
}

impl DmrgArgs {
    fn apply(&self, cfg: &mut DmrgConfig) {
        if let Some(v) = self.max_bond {
            cfg.max_bond = v;
        }
        if let Some(v) = self.sweeps {
            cfg.sweeps = v;
        }
        if let Some(v) = self.energy_tol {
            cfg.energy_tol = v;
        }
        if let Some(v) = self.cutoff {
            cfg.truncation_cutoff = v;
        }
    }

    fn is_set(&self) -> bool {
        self.max_bond.is_some() || self.sweeps.is_some() || self.energy_tol.is_some() || self.cutoff.is_some()
    }
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// JSON sweep specification; flags below override its fields.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long = "N")]
    n_sites: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long, value_enum)]
    boundary: Option<BoundaryArg>,
    /// Parameter to vary: lambda, alpha, beta or kappa.
    #[arg(long)]
    vary: Option<String>,
    #[arg(long)]
    from: Option<f64>,
    #[arg(long)]
    to: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    /// Explicit grid values, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["from", "to", "points"])]
    values: Option<Vec<f64>>,
    /// Pair labels: nn_J1, nn_J2, nnn or custom(i,j) with 1-based sites.
    #[arg(long, value_delimiter = ';')]
    pairs: Option<Vec<String>>,
    /// exact, free_fermion, dmrg or auto.
    #[arg(long)]
    solver: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Measure the edge pairs (1,2), (2,3), (1,3) instead of central ones.
    #[arg(long)]
    edge_pairs: bool,
    /// Put the reduced field on the odd sublattice.
    #[arg(long)]
    swap_field_parity: bool,
    /// Solve dmrg points independently instead of continuing along the grid.
    #[arg(long)]
    no_continuation: bool,
    /// Record wall time in the seconds column.
    #[arg(long)]
    timing: bool,
    /// Save dmrg states here and resume from any already present.
    #[arg(long)]
    checkpoint_dir: Option<PathBuf>,
    #[command(flatten)]
    dmrg: DmrgArgs,
}

#[derive(Args, Debug)]
struct PresetArgs {
    /// fig2, fig3 or fig4.
    name: String,
    #[arg(long = "N")]
    n_sites: Option<usize>,
    #[arg(long)]
    solver: Option<String>,
    #[arg(long, value_enum)]
    boundary: Option<BoundaryArg>,
    /// Explicit λ grid, comma separated.
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,
    /// κ curves for fig4, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    kappas: Option<Vec<f64>>,
    /// Ratios scanned by the fig3 threshold scan, comma separated.
    #[arg(long, value_delimiter = ',')]
    threshold_values: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    edge_pairs: bool,
    #[arg(long)]
    swap_field_parity: bool,
    #[arg(long)]
    timing: bool,
    /// Directory for the per-curve CSV files.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[command(flatten)]
    dmrg: DmrgArgs,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    /// Random points compared between exact and free_fermion.
    #[arg(long, default_value_t = 25)]
    free_fermion_points: usize,
    /// Random points compared between exact and dmrg.
    #[arg(long, default_value_t = 10)]
    dmrg_points: usize,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    /// Write the full report as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[arg(long = "N")]
    n_sites: usize,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    kappa: f64,
    #[arg(long, value_enum, default_value = "open")]
    boundary: BoundaryArg,
    #[arg(long)]
    swap_field_parity: bool,
    /// Number of levels listed.
    #[arg(long, default_value_t = 6)]
    levels: usize,
}

fn build_spec(a: &SweepArgs) -> Result<SweepSpec> {
    let mut spec = match &a.spec {
        Some(path) => SweepSpec::from_json_file(path).with_context(|| format!("reading {}", path.display()))?,
        None => {
            let vary = a.vary.as_deref().unwrap_or("lambda").parse::<VaryParam>()?;
            SweepSpec::new(ModelParams::default(), vary, Grid::default_lambda())
        }
    };
    let b = &mut spec.base;
    if let Some(v) = a.n_sites {
        b.n_sites = v;
    }
    for (name, v) in
        [("gamma", a.gamma), ("lambda", a.lambda), ("alpha", a.alpha), ("beta", a.beta), ("kappa", a.kappa)]
    {
        if let Some(v) = v {
            b.set(name, v)?;
        }
    }
    if let Some(bd) = a.boundary {
        b.boundary = bd.into();
    }
    if let Some(v) = &a.vary {
        spec.vary = v.parse()?;
    }
    if let Some(values) = &a.values {
        spec.grid = Grid::List(values.clone());
    } else if a.from.is_some() || a.to.is_some() || a.points.is_some() {
        let (Some(start), Some(stop), Some(points)) = (a.from, a.to, a.points) else {
            bail!("--from, --to and --points must be given together");
        };
        spec.grid = Grid::Range { start, stop, points };
    }
    if let Some(pairs) = &a.pairs {
        spec.pairs = pairs.iter().map(|p| p.parse::<PairLabel>()).collect::<chainent::Result<_>>()?;
    }
    if let Some(s) = &a.solver {
        spec.solver = s.parse()?;
    }
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    if let Some(o) = &a.out {
        spec.output_path = Some(o.clone());
    }
    spec.edge_pairs |= a.edge_pairs;
    if a.swap_field_parity {
        spec.field_parity = FieldParity::Swapped;
    }
    if a.no_continuation {
        spec.continuation = false;
    }
    spec.record_timing |= a.timing;
    if let Some(d) = &a.checkpoint_dir {
        spec.checkpoint_dir = Some(d.clone());
    }
    a.dmrg.apply(&mut spec.dmrg);
    Ok(spec)
}

fn write_result(result: &SweepResult, spec: &SweepSpec, format: OutputFormat) -> Result<()> {
    match &spec.output_path {
        Some(path) => {
            emit(result, format, path).with_context(|| format!("writing {}", path.display()))?;
            info!("wrote {} rows to {}", result.rows.len(), path.display());
        }
        None => match format {
            OutputFormat::Csv => write_csv(result, std::io::stdout().lock())?,
            OutputFormat::Json => println!("{}", serde_json::to_string_pretty(result)?),
        },
    }
    Ok(())
}

fn cmd_sweep(a: &SweepArgs) -> Result<bool> {
    let spec = build_spec(a)?;
    let result = run_sweep(&spec)?;
    write_result(&result, &spec, a.format.into())?;
    Ok(result.all_converged())
}

fn cmd_preset(a: &PresetArgs) -> Result<bool> {
    let name: PresetName = a.name.parse()?;
    let dmrg = a.dmrg.is_set().then(|| {
        let mut cfg = DmrgConfig::default();
        a.dmrg.apply(&mut cfg);
        cfg
    });
    let overrides = PresetOverrides {
        n_sites: a.n_sites,
        solver: a.solver.as_deref().map(str::parse::<SolverChoice>).transpose()?,
        boundary: a.boundary.map(Into::into),
        grid: a.values.clone().map(Grid::List),
        dmrg,
        seed: a.seed,
        kappas: a.kappas.clone(),
        threshold_values: a.threshold_values.clone(),
        edge_pairs: a.edge_pairs,
        field_parity: if a.swap_field_parity { FieldParity::Swapped } else { FieldParity::Standard },
        record_timing: a.timing,
        out_dir: Some(a.out_dir.clone()),
    };
    let plan = preset(name, &overrides)?;
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let results = chainent::sweep::run_sweeps(&plan.specs)?;
    let mut converged = true;
    for (spec, result) in plan.specs.iter().zip(&results) {
        write_result(result, spec, OutputFormat::Csv)?;
        converged &= result.all_converged();
    }
    for scan in &plan.threshold_scans {
        let rows = scan.run()?;
        let path = a.out_dir.join(format!("{name}_threshold_{}.csv", scan.family.name()));
        write_threshold_csv(&rows, BufWriter::new(File::create(&path)?))?;
        match onset(&rows) {
            Some(v) => println!("{}: nnn concurrence onset at {} = {v}", path.display(), scan.family.name()),
            None => println!("{}: no clean nnn concurrence onset in the scanned range", path.display()),
        }
        converged &= rows.iter().all(|r| r.converged);
    }
    Ok(converged)
}

fn cmd_validate(a: &ValidateArgs) -> Result<bool> {
    let report = run_validation(a.free_fermion_points, a.dmrg_points, a.seed)?;
    let worst = |v: &[chainent::validation::PointCheck], f: fn(&chainent::validation::PointCheck) -> f64| {
        v.iter().map(f).fold(0.0, f64::max)
    };
    let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
    println!(
        "{} exact vs free_fermion: {} points, max correlator diff {:.3e} (tol {CORRELATOR_TOL:e}), max concurrence diff {:.3e}",
        verdict(report.free_fermion_pass()),
        report.free_fermion.len(),
        worst(&report.free_fermion, |c| c.max_correlator_diff),
        worst(&report.free_fermion, |c| c.max_concurrence_diff),
    );
    println!(
        "{} exact vs dmrg: {} points, max energy diff {:.3e} (tol {DMRG_ENERGY_TOL:e}), max concurrence diff {:.3e} (tol {DMRG_CONCURRENCE_TOL:e})",
        verdict(report.dmrg_pass()),
        report.dmrg.len(),
        worst(&report.dmrg, |c| c.energy_diff.abs()),
        worst(&report.dmrg, |c| c.max_concurrence_diff),
    );
    let all: Vec<_> = report.free_fermion.iter().chain(&report.dmrg).cloned().collect();
    println!(
        "{} restricted vs full density matrices: max entry diff {:.3e} (tol {EQ3_TOL:e})",
        verdict(report.eq3_pass()),
        worst(&all, |c| c.max_eq3_diff),
    );
    if let Some(path) = &a.report {
        serde_json::to_writer_pretty(BufWriter::new(File::create(path)?), &report)?;
    }
    Ok(report.all_pass())
}

fn cmd_spectrum(a: &SpectrumArgs) -> Result<bool> {
    let params = ModelParams {
        n_sites: a.n_sites,
        gamma: a.gamma,
        lambda: a.lambda,
        alpha: a.alpha,
        beta: a.beta,
        kappa: a.kappa,
        boundary: a.boundary.into(),
    };
    let parity = if a.swap_field_parity { FieldParity::Swapped } else { FieldParity::Standard };
    let terms = hamiltonian_terms(&build_couplings_with(&params, parity)?, params.gamma)?;
    let spectrum = low_spectrum(&terms, a.levels)?;
    println!("{}", serde_json::to_string_pretty(&spectrum.to_json(a.levels))?);
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot size the worker pool: {e}");
            return ExitCode::from(1);
        }
    }
    let outcome = match &cli.command {
        Command::Sweep(a) => cmd_sweep(a),
        Command::Preset(a) => cmd_preset(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Spectrum(a) => cmd_spectrum(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("warning: some points did not converge or checks failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
