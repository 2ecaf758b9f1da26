//! Acceptance suite: one PASS/FAIL line per criterion.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use chainent::dmrg::DmrgConfig;
use chainent::entanglement::{concurrence, pair_concurrence, TwoSiteRdm};
use chainent::exact_diag::low_spectrum;
use chainent::sweep::{
    onset, preset, run_sweep, run_sweeps, solve, Grid, PairLabel, PresetName, PresetOverrides, Solver, SolverChoice,
    SweepResult, SweepSpec, VaryParam,
};
use chainent::validation::{
    validate_dmrg, validate_free_fermion, PointCheck, ValidationReport, CORRELATOR_TOL, DMRG_CONCURRENCE_TOL,
    DMRG_ENERGY_TOL, EQ3_TOL, FREE_FERMION_CONCURRENCE_TOL,
};
use chainent::{Boundary, FieldParity, ModelParams, Result};
use nalgebra::{Matrix2, Matrix4, Vector4};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const SEED: u64 = 2024;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Result<Verdict> {
    Ok(Verdict { pass, detail })
}

fn secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}

fn worst(checks: &[PointCheck], f: fn(&PointCheck) -> f64) -> f64 {
    checks.iter().map(f).fold(0.0, f64::max)
}

fn max_curve(result: &SweepResult, pair: &str) -> (f64, f64) {
    result
        .curve(pair)
        .into_iter()
        .map(|r| (r.vary_value, r.concurrence))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((f64::NAN, f64::NAN))
}

fn lambda_sweep(base: ModelParams, grid: Grid, pairs: Vec<PairLabel>, solver: SolverChoice) -> SweepSpec {
    SweepSpec { pairs, solver, ..SweepSpec::new(base, VaryParam::Lambda, grid) }
}

fn cross_solver(report: &mut ValidationReport) -> Result<Verdict> {
    let start = Instant::now();
    report.free_fermion = validate_free_fermion(25, SEED)?;
    let elapsed = start.elapsed();
    let ff = &report.free_fermion;
    let corr = worst(ff, |c| c.max_correlator_diff);
    let conc = worst(ff, |c| c.max_concurrence_diff);
    verdict(
        corr < CORRELATOR_TOL && conc < FREE_FERMION_CONCURRENCE_TOL && elapsed < Duration::from_secs(60),
        format!("{} points, correlator diff {corr:.2e}, concurrence diff {conc:.2e}, {}", ff.len(), secs(elapsed)),
    )
}

fn dmrg_fidelity(report: &mut ValidationReport) -> Result<Verdict> {
    let start = Instant::now();
    let cfg = DmrgConfig { max_bond: 64, ..Default::default() };
    report.dmrg = validate_dmrg(10, SEED + 1, &cfg)?;
    let elapsed = start.elapsed();
    let d = &report.dmrg;
    let energy = worst(d, |c| c.energy_diff.abs());
    let conc = worst(d, |c| c.max_concurrence_diff);
    let converged = d.iter().all(|c| c.converged);
    verdict(
        converged && energy < DMRG_ENERGY_TOL && conc < DMRG_CONCURRENCE_TOL && elapsed < Duration::from_secs(300),
        format!(
            "{} points, energy diff {energy:.2e}, concurrence diff {conc:.2e}, converged {converged}, {}",
            d.len(),
            secs(elapsed)
        ),
    )
}

fn homogeneous() -> Result<Verdict> {
    let pairs = vec![PairLabel::NnJ1, PairLabel::NnJ2];
    let exact = lambda_sweep(
        ModelParams { n_sites: 12, boundary: Boundary::Periodic, ..Default::default() },
        Grid::List(vec![0.5, 0.7, 1.0, 1.5, 2.0]),
        pairs.clone(),
        SolverChoice::Exact,
    );
    let dmrg = lambda_sweep(
        ModelParams { n_sites: 32, ..Default::default() },
        Grid::List(vec![0.5, 0.7, 1.5, 2.0]),
        pairs,
        SolverChoice::Dmrg,
    );
    let mut details = Vec::new();
    let mut pass = true;
    for (name, spec) in [("exact N=12", exact), ("dmrg N=32", dmrg)] {
        let res = run_sweep(&spec)?;
        let (a, b) = (res.curve("nn_J1"), res.curve("nn_J2"));
        let diff = a.iter().zip(&b).map(|(x, y)| (x.concurrence - y.concurrence).abs()).fold(0.0, f64::max);
        pass &= diff < 1e-6 && res.all_converged() && a.len() == b.len() && !a.is_empty();
        details.push(format!("{name} max bond difference {diff:.2e}"));
    }
    verdict(pass, details.join(", "))
}

fn critical_peak() -> Result<Verdict> {
    let start = Instant::now();
    let big = lambda_sweep(
        ModelParams { n_sites: 59, ..Default::default() },
        Grid::default_lambda(),
        vec![PairLabel::Nnn],
        SolverChoice::Dmrg,
    );
    let big = run_sweep(&big)?;
    let elapsed = start.elapsed();
    let small = lambda_sweep(
        ModelParams { n_sites: 12, boundary: Boundary::Periodic, ..Default::default() },
        Grid::default_lambda(),
        vec![PairLabel::Nnn],
        SolverChoice::Exact,
    );
    let small = run_sweep(&small)?;
    let (l_big, c_big) = max_curve(&big, "nnn");
    let (l_small, c_small) = max_curve(&small, "nnn");
    verdict(
        (0.9..=1.1).contains(&l_big)
            && (0.85..=1.2).contains(&l_small)
            && big.all_converged()
            && elapsed < Duration::from_secs(900),
        format!(
            "N=59 dmrg argmax λ={l_big} (C={c_big:.3e}, {}), N=12 exact periodic argmax λ={l_small} (C={c_small:.3e})",
            secs(elapsed)
        ),
    )
}

fn suppression() -> Result<Verdict> {
    let specs: Vec<SweepSpec> = [("alpha", 0.5), ("beta", 0.5)]
        .iter()
        .map(|&(name, v)| {
            let mut p = ModelParams { n_sites: 59, ..Default::default() };
            p.set(name, v)?;
            Ok(lambda_sweep(p, Grid::default_lambda(), vec![PairLabel::Nnn], SolverChoice::Dmrg))
        })
        .collect::<Result<_>>()?;
    let results = run_sweeps(&specs)?;
    let (la, ca) = max_curve(&results[0], "nnn");
    let (lb, cb) = max_curve(&results[1], "nnn");
    let converged = results.iter().all(SweepResult::all_converged);
    verdict(
        ca < 1e-4 && cb < 1e-4 && converged,
        format!("α=0.5 max C={ca:.3e} at λ={la}, β=0.5 max C={cb:.3e} at λ={lb} (bound 1e-4)"),
    )
}

fn threshold_onset() -> Result<Verdict> {
    let overrides = PresetOverrides { solver: Some(SolverChoice::FreeFermion), ..Default::default() };
    let plan = preset(PresetName::Fig3, &overrides)?;
    let mut alpha_onset = None;
    let mut details = Vec::new();
    for scan in &plan.threshold_scans {
        let rows = scan.run()?;
        let o = onset(&rows);
        details.push(format!("{} onset {:?}", scan.family.name(), o));
        if scan.family == VaryParam::Alpha {
            alpha_onset = o;
        }
    }
    verdict(alpha_onset.is_some_and(|a| a > 0.5 && a < 1.0), details.join(", "))
}

fn frustration() -> Result<Verdict> {
    let lambda = 0.5;
    let params =
        |kappa: f64| ModelParams { n_sites: 12, lambda, kappa, boundary: Boundary::Periodic, ..Default::default() };
    let mut gap_min = (f64::NAN, f64::INFINITY);
    for k in 0..=40 {
        let kappa = 0.025 * k as f64;
        let terms = chainent::model::model_terms(&params(kappa), FieldParity::Standard)?;
        let spec = low_spectrum(&terms, 2)?;
        let gap = spec.even[1] - spec.even[0];
        if gap < gap_min.1 {
            gap_min = (kappa, gap);
        }
    }
    let nn = |kappa: f64| -> Result<f64> {
        let p = params(kappa);
        let s = solve(&p, FieldParity::Standard, Solver::Exact, &DmrgConfig::default(), &[])?;
        let (i, j) = PairLabel::NnJ1.sites(12, false)?;
        Ok(pair_concurrence(s.handle.as_ref(), i - 1, j - 1)?.value)
    };
    let (c0, c1, c2) = (nn(0.0)?, nn(0.25)?, nn(0.75)?);
    verdict(
        (0.4..=0.6).contains(&gap_min.0) && c1 > c0 && c1 > c2,
        format!(
            "even-sector gap minimum {:.3e} at κ={:.3}; nn C(0)={c0:.5}, C(0.25)={c1:.5}, C(0.75)={c2:.5} at λ={lambda}",
            gap_min.1, gap_min.0
        ),
    )
}

fn frustration_sign() -> Result<Verdict> {
    let nnn = |kappa: f64| -> Result<(f64, bool)> {
        let p = ModelParams { n_sites: 31, kappa, ..Default::default() };
        let s = solve(&p, FieldParity::Standard, Solver::Dmrg, &DmrgConfig::default(), &[])?;
        let (i, j) = PairLabel::Nnn.sites(31, false)?;
        Ok((pair_concurrence(s.handle.as_ref(), i - 1, j - 1)?.value, s.converged))
    };
    let ((af, ca), (ff, cf)) = (nnn(-0.5)?, nnn(0.5)?);
    verdict(af > ff && ca && cf, format!("C(κ=-0.5)={af:.3e}, C(κ=+0.5)={ff:.3e}"))
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn pure(v: [f64; 4]) -> Matrix4<Complex64> {
    let v = Vector4::from(v.map(c)).normalize();
    v * v.adjoint()
}

fn random_unitary(rng: &mut ChaCha8Rng) -> Matrix2<Complex64> {
    let mut g = || Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng));
    Matrix2::new(g(), g(), g(), g()).qr().q()
}

fn concurrence_units() -> Result<Verdict> {
    let value =
        |rho: Matrix4<Complex64>| -> Result<f64> { Ok(concurrence(&TwoSiteRdm::from_matrix((0, 1), rho)?)?.value) };
    let bell = value(pure([1.0, 0.0, 0.0, 1.0]))?;
    let product = value(pure([1.0, 2.0, 3.0, 6.0]))?;
    let singlet = pure([0.0, 1.0, -1.0, 0.0]);
    let werner = value(singlet * c(0.5) + Matrix4::identity() * c(0.125))?;

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut g = || Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
    let a = Matrix4::from_fn(|_, _| g());
    // Rank-two mixture so the reference has sizeable concurrence.
    let mixed = pure([1.0, 0.3, -0.2, 0.9]) * c(0.8) + (a * a.adjoint()).scale(0.2 / (a * a.adjoint()).trace().re);
    let reference = value(mixed)?;
    let mut lu = 0.0_f64;
    for _ in 0..50 {
        let (ua, ub) = (random_unitary(&mut rng), random_unitary(&mut rng));
        let u = Matrix4::from_fn(|r, c| ua[(r / 2, c / 2)] * ub[(r % 2, c % 2)]);
        lu = lu.max((value(u * mixed * u.adjoint())? - reference).abs());
    }
    verdict(
        (bell - 1.0).abs() < 1e-10 && product.abs() < 1e-10 && (werner - 0.25).abs() < 1e-10 && lu < 1e-9,
        format!(
            "Bell {:.1e}, product {:.1e}, Werner {:.1e} off target; local unitaries {lu:.1e} (C={reference:.4})",
            (bell - 1.0).abs(),
            product.abs(),
            (werner - 0.25).abs()
        ),
    )
}

fn eq3_form(report: &ValidationReport) -> Result<Verdict> {
    let all: Vec<PointCheck> = report.free_fermion.iter().chain(&report.dmrg).cloned().collect();
    let gap = worst(&all, |c| c.max_eq3_diff);
    verdict(
        !report.free_fermion.is_empty() && !report.dmrg.is_empty() && report.eq3_pass(),
        format!("{} ground states, max entry difference {gap:.2e} (tol {EQ3_TOL:e})", all.len() * 2),
    )
}

fn main() -> ExitCode {
    let mut report = ValidationReport::default();
    let mut all = true;
    let mut line = |name: &str, outcome: Result<Verdict>| {
        let (pass, detail) = match outcome {
            Ok(v) => (v.pass, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        all &= pass;
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    };
    line("cross-solver oracle equivalence", cross_solver(&mut report));
    line("dmrg fidelity", dmrg_fidelity(&mut report));
    line("homogeneous-chain symmetry", homogeneous());
    line("nnn critical peak", critical_peak());
    line("nnn suppression", suppression());
    line("nnn threshold existence", threshold_onset());
    line("frustration ordering", frustration());
    line("antiferromagnetic vs ferromagnetic nnn", frustration_sign());
    line("concurrence unit tests", concurrence_units());
    line("restricted density matrix validity", eq3_form(&report));
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
