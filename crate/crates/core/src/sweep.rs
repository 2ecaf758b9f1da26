//! Parameter sweeps, figure presets and result files.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dmrg::{self, load_checkpoint, save_checkpoint, Checkpoint, DmrgConfig, Mps};
use crate::entanglement::pair_concurrence;
use crate::error::{Error, Result};
use crate::exact_diag;
use crate::free_fermion::FreeFermionGroundState;
use crate::handle::GroundStateHandle;
use crate::model::{build_couplings_with, hamiltonian_terms, Boundary, FieldParity, ModelParams};

/// Header of every sweep CSV file.
pub const CSV_COLUMNS: [&str; 11] =
    ["vary_name", "vary_value", "pair", "i", "j", "concurrence", "energy", "solver", "converged", "clip", "seconds"];

/// Concurrence above this counts as nonzero in threshold scans.
pub const ONSET_TOL: f64 = 1e-8;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VaryParam {
    Lambda,
    Alpha,
    Beta,
    Kappa,
}

impl VaryParam {
    pub fn name(self) -> &'static str {
        match self {
            VaryParam::Lambda => "lambda",
            VaryParam::Alpha => "alpha",
            VaryParam::Beta => "beta",
            VaryParam::Kappa => "kappa",
        }
    }
}

impl FromStr for VaryParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lambda" => Ok(VaryParam::Lambda),
            "alpha" => Ok(VaryParam::Alpha),
            "beta" => Ok(VaryParam::Beta),
            "kappa" => Ok(VaryParam::Kappa),
            _ => Err(Error::Config(format!("cannot vary '{s}'; expected lambda, alpha, beta or kappa"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum Grid {
    Range { start: f64, stop: f64, points: usize },
    List(Vec<f64>),
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::Range { start, stop, points } => {
                let n = *points;
                (0..n)
                    .map(|k| if n == 1 { *start } else { start + (stop - start) * k as f64 / (n - 1) as f64 })
                    .collect()
            }
            Grid::List(v) => v.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.values();
        if v.len() < 2 {
            return Err(Error::Config(format!("grid needs at least 2 points, got {}", v.len())));
        }
        if v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("grid must be finite and strictly increasing".into()));
        }
        Ok(())
    }

    /// Default λ grid: 37 points on [0.2, 2.0] merged with steps of 0.01 on
    /// [0.85, 1.15].
    pub fn default_lambda() -> Self {
        let mut v: Vec<f64> = Grid::Range { start: 0.2, stop: 2.0, points: 37 }.values();
        v.extend((0..=30).map(|k| 0.85 + 0.01 * k as f64));
        let mut v: Vec<f64> = v.into_iter().map(|x| (x * 1e9).round() / 1e9).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        Grid::List(v)
    }
}

/// Which pair of sites a row refers to.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum PairLabel {
    /// Central bond carrying `J1`.
    NnJ1,
    /// Adjacent central bond carrying `J2 = αJ1`.
    NnJ2,
    /// Central next-nearest-neighbour pair.
    Nnn,
    /// Explicit 1-based sites.
    Custom(usize, usize),
}

impl fmt::Display for PairLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PairLabel::NnJ1 => f.write_str("nn_J1"),
            PairLabel::NnJ2 => f.write_str("nn_J2"),
            PairLabel::Nnn => f.write_str("nnn"),
            PairLabel::Custom(i, j) => write!(f, "custom({i},{j})"),
        }
    }
}

impl FromStr for PairLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "nn_J1" => return Ok(PairLabel::NnJ1),
            "nn_J2" => return Ok(PairLabel::NnJ2),
            "nnn" => return Ok(PairLabel::Nnn),
            _ => {}
        }
        let bad = || Error::Config(format!("unknown pair label '{s}'; expected nn_J1, nn_J2, nnn or custom(i,j)"));
        let inner = s.strip_prefix("custom(").and_then(|r| r.strip_suffix(')')).ok_or_else(bad)?;
        let (a, b) = inner.split_once(',').ok_or_else(bad)?;
        let i = a.trim().parse().map_err(|_| bad())?;
        let j = b.trim().parse().map_err(|_| bad())?;
        Ok(PairLabel::Custom(i, j))
    }
}

impl Serialize for PairLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PairLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl PairLabel {
    /// 1-based sites of the pair on an `n`-site chain. Central pairs are
    /// placed around site `m = ⌈n/2⌉` so that the first one always sits on
    /// a `J1` bond; `edge` selects the literal pairs (1,2), (2,3), (1,3).
    pub fn sites(&self, n: usize, edge: bool) -> Result<(usize, usize)> {
        let (i, j) = match (self, edge) {
            (PairLabel::Custom(i, j), _) => (*i, *j),
            (PairLabel::NnJ1, true) => (1, 2),
            (PairLabel::NnJ2, true) => (2, 3),
            (PairLabel::Nnn, true) => (1, 3),
            (label, false) => {
                let m = n.div_ceil(2);
                let (j1, j2, nnn) = if m.is_multiple_of(2) {
                    ((m - 1, m), (m, m + 1), (m - 1, m + 1))
                } else {
                    ((m, m + 1), (m - 1, m), (m, m + 2))
                };
                match label {
                    PairLabel::NnJ1 => j1,
                    PairLabel::NnJ2 => j2,
                    _ => nnn,
                }
            }
        };
        if i == 0 || j == 0 || i > n || j > n || i == j {
            return Err(Error::Config(format!("pair {self} resolves to ({i}, {j}), outside a {n}-site chain")));
        }
        Ok((i, j))
    }
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    Exact,
    FreeFermion,
    Dmrg,
    #[default]
    Auto,
}

impl FromStr for SolverChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(SolverChoice::Exact),
            "free_fermion" => Ok(SolverChoice::FreeFermion),
            "dmrg" => Ok(SolverChoice::Dmrg),
            "auto" => Ok(SolverChoice::Auto),
            _ => Err(Error::Config(format!("unknown solver '{s}'; expected exact, free_fermion, dmrg or auto"))),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    Exact,
    FreeFermion,
    Dmrg,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::Exact => "exact",
            Solver::FreeFermion => "free_fermion",
            Solver::Dmrg => "dmrg",
        }
    }

    /// Fails when this solver cannot handle `params`.
    pub fn check(self, params: &ModelParams) -> Result<()> {
        match self {
            Solver::Exact if params.n_sites > exact_diag::MAX_SITES => Err(Error::Config(format!(
                "exact solver is limited to {} sites, got {}",
                exact_diag::MAX_SITES,
                params.n_sites
            ))),
            Solver::FreeFermion if params.kappa != 0.0 => Err(Error::Config(format!(
                "free_fermion solver needs kappa = 0, got {}; use exact or dmrg",
                params.kappa
            ))),
            Solver::Dmrg if params.boundary == Boundary::Periodic => {
                Err(Error::Config("dmrg solver handles open chains only".into()))
            }
            _ => Ok(()),
        }
    }
}

impl SolverChoice {
    pub fn resolve(self, params: &ModelParams) -> Solver {
        match self {
            SolverChoice::Exact => Solver::Exact,
            SolverChoice::FreeFermion => Solver::FreeFermion,
            SolverChoice::Dmrg => Solver::Dmrg,
            SolverChoice::Auto => {
                if params.kappa == 0.0 && params.n_sites > 20 {
                    Solver::FreeFermion
                } else if params.n_sites <= 14 {
                    Solver::Exact
                } else {
                    Solver::Dmrg
                }
            }
        }
    }
}

/// A solved ground state ready for measurement.
pub struct Solved {
    pub handle: Box<dyn GroundStateHandle + Send + Sync>,
    pub solver: Solver,
    pub converged: bool,
    /// Final matrix product states of a dmrg run, one per parity sector.
    pub warm_starts: Vec<Mps>,
}

/// Solves one parameter point. `initial` seeds dmrg and is ignored by the
/// other solvers.
pub fn solve(
    params: &ModelParams,
    parity: FieldParity,
    solver: Solver,
    dmrg_config: &DmrgConfig,
    initial: &[Mps],
) -> Result<Solved> {
    params.validate()?;
    solver.check(params)?;
    let bonds = build_couplings_with(params, parity)?;
    Ok(match solver {
        Solver::Exact => {
            let gs = exact_diag::ground_state(&hamiltonian_terms(&bonds, params.gamma)?)?;
            Solved { handle: Box::new(gs), solver, converged: true, warm_starts: Vec::new() }
        }
        Solver::FreeFermion => {
            let gs = FreeFermionGroundState::solve(&bonds, params.gamma)?;
            Solved { handle: Box::new(gs), solver, converged: true, warm_starts: Vec::new() }
        }
        Solver::Dmrg => {
            let mpo = dmrg::mpo_build(&hamiltonian_terms(&bonds, params.gamma)?)?;
            let gs = dmrg::dmrg_ground_state_from(&mpo, dmrg_config, initial)?;
            let converged = gs.converged();
            let warm_starts = gs.warm_starts();
            Solved { handle: Box::new(gs), solver, converged, warm_starts }
        }
    })
}

fn default_pairs() -> Vec<PairLabel> {
    vec![PairLabel::NnJ1]
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub base: ModelParams,
    pub vary: VaryParam,
    pub grid: Grid,
    #[serde(default = "default_pairs")]
    pub pairs: Vec<PairLabel>,
    #[serde(default)]
    pub solver: SolverChoice,
    #[serde(default)]
    pub dmrg: DmrgConfig,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    /// Seeds the dmrg initial state and noise.
    #[serde(default)]
    pub seed: u64,
    /// Measure the literal edge pairs instead of the central ones.
    #[serde(default)]
    pub edge_pairs: bool,
    #[serde(default)]
    pub field_parity: FieldParity,
    /// Start each dmrg point from the previous point's state.
    #[serde(default = "default_true")]
    pub continuation: bool,
    /// Fill the `seconds` column; otherwise it is written as 0 so that
    /// repeated runs give identical files.
    #[serde(default)]
    pub record_timing: bool,
    /// Curve name used by presets.
    #[serde(default)]
    pub label: Option<String>,
    /// Directory of dmrg state snapshots, one file per grid point and
    /// parity sector. Existing snapshots seed their point; every solved
    /// point is written back.
    #[serde(default)]
    pub checkpoint_dir: Option<PathBuf>,
}

impl SweepSpec {
    pub fn new(base: ModelParams, vary: VaryParam, grid: Grid) -> Self {
        Self {
            base,
            vary,
            grid,
            pairs: default_pairs(),
            solver: SolverChoice::Auto,
            dmrg: DmrgConfig::default(),
            output_path: None,
            seed: 0,
            edge_pairs: false,
            field_parity: FieldParity::Standard,
            continuation: true,
            record_timing: false,
            label: None,
            checkpoint_dir: None,
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let spec: Self = serde_json::from_reader(std::io::BufReader::new(File::open(path)?))?;
        Ok(spec)
    }

    /// Parameters at each grid point.
    pub fn points(&self) -> Result<Vec<(f64, ModelParams)>> {
        self.grid
            .values()
            .into_iter()
            .map(|v| {
                let mut p = self.base.clone();
                p.set(self.vary.name(), v)?;
                Ok((v, p))
            })
            .collect()
    }

    /// Checks everything that can fail before any ground state is computed.
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.pairs.is_empty() {
            return Err(Error::Config("sweep needs at least one pair".into()));
        }
        self.dmrg.validate()?;
        for (_, p) in self.points()? {
            p.validate()?;
            self.solver.resolve(&p).check(&p)?;
            for pair in &self.pairs {
                pair.sites(p.n_sites, self.edge_pairs)?;
            }
        }
        Ok(())
    }

    fn dmrg_config(&self) -> DmrgConfig {
        DmrgConfig { seed: self.seed, ..self.dmrg.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub vary_name: String,
    pub vary_value: f64,
    pub pair: String,
    /// 1-based sites.
    pub i: usize,
    pub j: usize,
    pub concurrence: f64,
    pub energy: f64,
    pub solver: String,
    pub converged: bool,
    pub clip: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.converged)
    }

    /// Rows of one pair label in grid order.
    pub fn curve(&self, pair: &str) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| r.pair == pair).collect()
    }

    fn sort(&mut self) {
        self.rows.sort_by(|a, b| a.vary_value.total_cmp(&b.vary_value).then_with(|| a.pair.cmp(&b.pair)));
    }
}

fn measure(spec: &SweepSpec, value: f64, params: &ModelParams, solved: &Solved, seconds: f64) -> Result<Vec<SweepRow>> {
    spec.pairs
        .iter()
        .map(|pair| {
            let (i, j) = pair.sites(params.n_sites, spec.edge_pairs)?;
            let c = pair_concurrence(solved.handle.as_ref(), i - 1, j - 1)?;
            Ok(SweepRow {
                vary_name: spec.vary.name().to_string(),
                vary_value: value,
                pair: pair.to_string(),
                i,
                j,
                concurrence: c.value,
                energy: solved.handle.energy(),
                solver: solved.solver.name().to_string(),
                converged: solved.converged,
                clip: c.clip_applied,
                seconds: if spec.record_timing { seconds } else { 0.0 },
            })
        })
        .collect()
}

fn checkpoint_path(spec: &SweepSpec, dir: &Path, index: usize, sector: usize) -> PathBuf {
    let label = spec.label.as_deref().unwrap_or("sweep");
    dir.join(format!("{label}_{index:04}_{sector}.json"))
}

fn load_checkpoints(spec: &SweepSpec, dir: &Path, index: usize, params: &ModelParams) -> Result<Vec<Mps>> {
    let mut states = Vec::new();
    for sector in 0..2 {
        let path = checkpoint_path(spec, dir, index, sector);
        if !path.exists() {
            break;
        }
        let cp = load_checkpoint(&path)?;
        if cp.params.as_ref().is_some_and(|p| p != params) || cp.mps.n_sites() != params.n_sites {
            return Err(Error::Config(format!("{}: checkpoint belongs to another point", path.display())));
        }
        states.push(cp.mps);
    }
    Ok(states)
}

fn run_point(
    spec: &SweepSpec,
    index: usize,
    value: f64,
    params: &ModelParams,
    initial: &[Mps],
) -> Result<(Vec<SweepRow>, Vec<Mps>)> {
    let start = Instant::now();
    let solver = spec.solver.resolve(params);
    let dir = spec.checkpoint_dir.as_deref().filter(|_| solver == Solver::Dmrg);
    let restored = match dir {
        Some(d) => load_checkpoints(spec, d, index, params)?,
        None => Vec::new(),
    };
    let initial = if restored.is_empty() { initial } else { &restored };
    let solved = solve(params, spec.field_parity, solver, &spec.dmrg_config(), initial)?;
    if let Some(d) = dir {
        std::fs::create_dir_all(d)?;
        for (sector, mps) in solved.warm_starts.iter().enumerate() {
            let cp = Checkpoint::new(mps.clone(), solved.handle.energy(), Some(params.clone()));
            save_checkpoint(&checkpoint_path(spec, d, index, sector), &cp)?;
        }
    }
    let rows = measure(spec, value, params, &solved, 0.0)?;
    let seconds = start.elapsed().as_secs_f64();
    let rows =
        rows.into_iter().map(|r| SweepRow { seconds: if spec.record_timing { seconds } else { 0.0 }, ..r }).collect();
    Ok((rows, solved.warm_starts))
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let points = spec.points()?;
    let uses_dmrg = points.iter().any(|(_, p)| spec.solver.resolve(p) == Solver::Dmrg);
    let mut rows = Vec::new();
    if spec.continuation && uses_dmrg {
        let mut state: Vec<Mps> = Vec::new();
        for (k, (v, p)) in points.iter().enumerate() {
            let (r, mps) = run_point(spec, k, *v, p, &state)?;
            info!("{} = {v}: done", spec.vary.name());
            rows.extend(r);
            state = mps;
        }
    } else {
        let parts: Vec<Vec<SweepRow>> = points
            .par_iter()
            .enumerate()
            .map(|(k, (v, p))| run_point(spec, k, *v, p, &[]).map(|(r, _)| r))
            .collect::<Result<_>>()?;
        rows = parts.into_iter().flatten().collect();
    }
    let mut result = SweepResult { rows };
    result.sort();
    Ok(result)
}

/// Runs independent sweeps concurrently, keeping input order.
pub fn run_sweeps(specs: &[SweepSpec]) -> Result<Vec<SweepResult>> {
    for s in specs {
        s.validate()?;
    }
    specs.par_iter().map(run_sweep).collect()
}

fn fmt_num(x: f64) -> String {
    format!("{x:.11e}")
}

pub fn write_csv<W: Write>(result: &SweepResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in &result.rows {
        w.write_record([
            r.vary_name.clone(),
            fmt_num(r.vary_value),
            r.pair.clone(),
            r.i.to_string(),
            r.j.to_string(),
            fmt_num(r.concurrence),
            fmt_num(r.energy),
            r.solver.clone(),
            r.converged.to_string(),
            fmt_num(r.clip),
            fmt_num(r.seconds),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<SweepResult> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != CSV_COLUMNS {
        return Err(Error::Config(format!("unexpected CSV header {header:?}")));
    }
    let rows = rd.deserialize().collect::<std::result::Result<Vec<SweepRow>, _>>()?;
    Ok(SweepResult { rows })
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

pub fn emit(result: &SweepResult, format: OutputFormat, path: &Path) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    match format {
        OutputFormat::Csv => write_csv(result, file),
        OutputFormat::Json => {
            serde_json::to_writer_pretty(file, result)?;
            Ok(())
        }
    }
}

/// Maximum over λ of the central next-nearest-neighbour concurrence as
/// one coupling ratio is scanned.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdScan {
    /// `alpha` or `beta`.
    pub family: VaryParam,
    pub values: Vec<f64>,
    /// λ sweep run at every value; its `pairs` should hold `nnn`.
    pub sweep: SweepSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub param: String,
    pub value: f64,
    pub max_concurrence: f64,
    pub argmax_lambda: f64,
    pub solver: String,
    pub converged: bool,
}

impl ThresholdScan {
    pub fn validate(&self) -> Result<()> {
        if !matches!(self.family, VaryParam::Alpha | VaryParam::Beta) {
            return Err(Error::Config("threshold scans run over alpha or beta".into()));
        }
        if self.values.is_empty() {
            return Err(Error::Config("threshold scan needs values".into()));
        }
        for spec in self.specs()? {
            spec.validate()?;
        }
        Ok(())
    }

    fn specs(&self) -> Result<Vec<SweepSpec>> {
        self.values
            .iter()
            .map(|&v| {
                let mut s = self.sweep.clone();
                s.base.set(self.family.name(), v)?;
                Ok(s)
            })
            .collect()
    }

    pub fn run(&self) -> Result<Vec<ThresholdRow>> {
        self.validate()?;
        let results = run_sweeps(&self.specs()?)?;
        Ok(self
            .values
            .iter()
            .zip(results)
            .map(|(&value, res)| {
                let best = res.rows.iter().max_by(|a, b| a.concurrence.total_cmp(&b.concurrence));
                ThresholdRow {
                    param: self.family.name().to_string(),
                    value,
                    max_concurrence: best.map_or(0.0, |r| r.concurrence),
                    argmax_lambda: best.map_or(f64::NAN, |r| r.vary_value),
                    solver: best.map_or_else(String::new, |r| r.solver.clone()),
                    converged: res.all_converged(),
                }
            })
            .collect())
    }
}

/// Smallest scanned value above which every maximum is nonzero and below
/// which every maximum vanishes; `None` when the scan is not a clean onset.
pub fn onset(rows: &[ThresholdRow]) -> Option<f64> {
    let k = rows.iter().position(|r| r.max_concurrence > ONSET_TOL)?;
    let clean = rows[..k].iter().all(|r| r.max_concurrence <= ONSET_TOL)
        && rows[k..].iter().all(|r| r.max_concurrence > ONSET_TOL);
    clean.then_some(rows[k].value)
}

pub fn write_threshold_csv<W: Write>(rows: &[ThresholdRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["param", "value", "max_concurrence", "argmax_lambda", "solver", "converged"])?;
    for r in rows {
        w.write_record([
            r.param.clone(),
            fmt_num(r.value),
            fmt_num(r.max_concurrence),
            fmt_num(r.argmax_lambda),
            r.solver.clone(),
            r.converged.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PresetName {
    Fig2,
    Fig3,
    Fig4,
}

impl FromStr for PresetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig2" => Ok(PresetName::Fig2),
            "fig3" => Ok(PresetName::Fig3),
            "fig4" => Ok(PresetName::Fig4),
            _ => Err(Error::Config(format!("unknown preset '{s}'; expected fig2, fig3 or fig4"))),
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PresetName::Fig2 => "fig2",
            PresetName::Fig3 => "fig3",
            PresetName::Fig4 => "fig4",
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PresetOverrides {
    pub n_sites: Option<usize>,
    pub solver: Option<SolverChoice>,
    pub boundary: Option<Boundary>,
    pub grid: Option<Grid>,
    pub dmrg: Option<DmrgConfig>,
    pub seed: Option<u64>,
    /// fig4 curve values.
    pub kappas: Option<Vec<f64>>,
    /// fig3 threshold scan values.
    pub threshold_values: Option<Vec<f64>>,
    pub edge_pairs: bool,
    pub field_parity: FieldParity,
    pub record_timing: bool,
    /// Directory receiving one CSV per curve.
    pub out_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PresetPlan {
    pub name: PresetName,
    pub specs: Vec<SweepSpec>,
    pub threshold_scans: Vec<ThresholdScan>,
}

pub const PRESET_RATIOS: [f64; 3] = [0.5, 1.0, 1.5];
pub const FIG4_KAPPAS: [f64; 6] = [-0.8, -0.4, 0.0, 0.25, 0.5, 0.75];

/// Default values of the fig3 threshold scan: 0.5 to 1.0 in steps of 0.05.
pub fn default_threshold_values() -> Vec<f64> {
    (0..=10).map(|k| ((0.5 + 0.05 * k as f64) * 1e9).round() / 1e9).collect()
}

pub fn preset(name: PresetName, o: &PresetOverrides) -> Result<PresetPlan> {
    let base = ModelParams {
        n_sites: o.n_sites.unwrap_or(59),
        boundary: o.boundary.unwrap_or(Boundary::Open),
        ..Default::default()
    };
    let template = |params: ModelParams, pairs: Vec<PairLabel>, label: String| -> SweepSpec {
        let output_path = o.out_dir.as_ref().map(|d| d.join(format!("{label}.csv")));
        SweepSpec {
            base: params,
            vary: VaryParam::Lambda,
            grid: o.grid.clone().unwrap_or_else(Grid::default_lambda),
            pairs,
            solver: o.solver.unwrap_or(SolverChoice::Dmrg),
            dmrg: o.dmrg.clone().unwrap_or_default(),
            output_path,
            seed: o.seed.unwrap_or(0),
            edge_pairs: o.edge_pairs,
            field_parity: o.field_parity,
            continuation: true,
            record_timing: o.record_timing,
            label: Some(label),
            checkpoint_dir: None,
        }
    };
    let ratio_curves = |pairs: Vec<PairLabel>| -> Vec<SweepSpec> {
        let mut specs = Vec::new();
        for (family, other) in [(VaryParam::Alpha, "beta"), (VaryParam::Beta, "alpha")] {
            for r in PRESET_RATIOS {
                let mut p = base.clone();
                p.set(family.name(), r).expect("known parameter");
                p.set(other, 1.0).expect("known parameter");
                specs.push(template(p, pairs.clone(), format!("{name}_{}_{r}", family.name())));
            }
        }
        specs
    };
    let mut plan = PresetPlan { name, specs: Vec::new(), threshold_scans: Vec::new() };
    match name {
        PresetName::Fig2 => plan.specs = ratio_curves(vec![PairLabel::NnJ1, PairLabel::NnJ2]),
        PresetName::Fig3 => {
            plan.specs = ratio_curves(vec![PairLabel::Nnn]);
            let values = o.threshold_values.clone().unwrap_or_else(default_threshold_values);
            for family in [VaryParam::Alpha, VaryParam::Beta] {
                let mut sweep =
                    template(base.clone(), vec![PairLabel::Nnn], format!("{name}_threshold_{}", family.name()));
                sweep.output_path = None;
                plan.threshold_scans.push(ThresholdScan { family, values: values.clone(), sweep });
            }
        }
        PresetName::Fig4 => {
            let kappas = o.kappas.clone().unwrap_or_else(|| FIG4_KAPPAS.to_vec());
            for k in kappas {
                let p = ModelParams { kappa: k, ..base.clone() };
                plan.specs.push(template(p, vec![PairLabel::NnJ1, PairLabel::Nnn], format!("{name}_kappa_{k}")));
            }
        }
    }
    for s in &plan.specs {
        s.validate()?;
    }
    for t in &plan.threshold_scans {
        t.validate()?;
    }
    Ok(plan)
}
