//! Command implementations behind the `tqm` binary. Each command resolves a
//! config, writes its CSV outputs into an output directory together with a
//! `report.json`, and maps the outcome to an exit code: 0 pass, 1 check or
//! physics failure, 2 usage or config error.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::clock::{
    convolution_check, covariance_check, left_eigen_check, outcome_density, outcome_series, pointer_wavefunction,
    pointer_wavefunction_numeric, posterior_state, realized_density, realized_series, sharpness_metrics, ClockSpec,
    DEFAULT_QUADRATURE_POINTS,
};
use crate::config::{ClockConfig, ExperimentConfig};
use crate::error::{Error, Result};
use crate::grid::{EnergyGrid, PhysicsParams, TimeGrid};
use crate::io::{fmt_f64, write_rows, write_with};
use crate::povm::{ideal_density_series, ideal_time_density, ml_estimate, nogo_sweep, tv_distance, DensityProfile};
use crate::report::{Check, RunReport};
use crate::representation::{
    energy_to_time, make_energy_state, prepare_energy_state, time_to_energy, CoherentLabel, EnergyState, StateSpec,
};
use crate::sampling::{ks_statistic, median, sample_from_density, sample_from_density_serial, GridCdf};
use crate::shift::{coherent_overlap, coherent_vector, completeness_check, coshift, ShiftAmount};

pub const DEFAULT_NOGO_WIDTHS: [f64; 5] = [1.0, 0.3, 0.1, 0.03, 0.01];
/// Total-variation distance between Cauchy laws of scale 1 and 2.
pub fn cauchy_tv_oracle() -> f64 {
    2.0 / PI * (1.0 / (2.0 * 2f64.sqrt())).atan()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Lambda,
    E,
    Hbar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMetric {
    Fwhm,
    Tv,
    Peak,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Verify,
    Density,
    Clock { tau: Option<f64>, samples: Option<usize>, seed: Option<u64> },
    Sweep { param: SweepParam, values: Vec<f64>, metric: SweepMetric },
    Nogo { lambdas: Option<Vec<f64>> },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Density => "density",
            Command::Clock { .. } => "clock",
            Command::Sweep { .. } => "sweep",
            Command::Nogo { .. } => "nogo",
        }
    }
}

/// Exit code for an error that aborted a command.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::ImpossibleOutcome { .. } | Error::ZeroMass | Error::GridMismatch(_) => 1,
        _ => 2,
    }
}

/// Run `cmd` and write `report.json` into `out`, whatever happens.
pub fn run(cmd: &Command, config: Option<&Path>, out: &Path) -> (RunReport, i32) {
    let start = Instant::now();
    let cfg = match config {
        Some(p) => ExperimentConfig::load(p).map_err(|e| match e {
            Error::Io { .. } => e,
            other => Error::Config(other.to_string()),
        }),
        None => Ok(ExperimentConfig::default()),
    };
    let mut report = RunReport::new(cmd.name(), cfg.as_ref().ok().cloned());
    let result = std::fs::create_dir_all(out)
        .map_err(|source| Error::Io { path: out.to_path_buf(), source })
        .and_then(|_| cfg)
        .and_then(|cfg| match cmd {
            Command::Verify => cmd_verify(&cfg, &mut report),
            Command::Density => cmd_density(&cfg, out, &mut report),
            Command::Clock { tau, samples, seed } => cmd_clock(&cfg, *tau, *samples, *seed, out, &mut report),
            Command::Sweep { param, values, metric } => cmd_sweep(&cfg, *param, values, *metric, out, &mut report),
            Command::Nogo { lambdas } => {
                cmd_nogo(&cfg, lambdas.as_deref().unwrap_or(&DEFAULT_NOGO_WIDTHS), out, &mut report)
            }
        });
    let code = match result {
        Ok(()) if report.all_pass() => 0,
        Ok(()) => 1,
        Err(e) => {
            let code = exit_code(&e);
            report.error = Some(e.to_string());
            code
        }
    };
    report.wall_time_s = start.elapsed().as_secs_f64();
    let path = out.join("report.json");
    if let Err(e) = report.write(&path) {
        eprintln!("tqm: cannot write report: {e}");
        return (report, 2);
    }
    (report, code)
}

fn record(report: &mut RunReport, path: PathBuf) {
    report.outputs.push(path);
}

fn state_of(cfg: &ExperimentConfig) -> Result<EnergyState> {
    make_energy_state(&cfg.state, cfg.energy, cfg.params)
}

/// Width-adapted symmetric grid for pointer metrics.
fn pointer_grid(spec: &ClockSpec) -> Result<TimeGrid> {
    let w0 = spec.params().hbar / spec.momentum_spread();
    TimeGrid::new(-20.0 * w0, 20.0 * w0, 8001)
}

pub fn cmd_density(cfg: &ExperimentConfig, out: &Path, report: &mut RunReport) -> Result<()> {
    let state = state_of(cfg)?;
    let d = ideal_time_density(&state, &cfg.time);
    let path = out.join("density.csv");
    write_rows(&path, &["tau", "p_ideal"], cfg.time.points().zip(&d.values).map(|(t, p)| vec![t, *p]))?;
    record(report, path);
    report.value("mass", d.mass).value("tail_loss", d.tail_loss());
    if let Ok(t) = ml_estimate(&d) {
        report.value("ml_estimate", t);
    }
    Ok(())
}

pub fn cmd_clock(
    cfg: &ExperimentConfig,
    tau: Option<f64>,
    samples: Option<usize>,
    seed: Option<u64>,
    out: &Path,
    report: &mut RunReport,
) -> Result<()> {
    let state = state_of(cfg)?;
    let spec = cfg.clock_spec()?;
    let real = outcome_density(&state, &spec, &cfg.time)?;
    let ideal = ideal_time_density(&state, &cfg.time);
    let path = out.join("density.csv");
    write_rows(
        &path,
        &["tau", "p_real", "p_ideal"],
        cfg.time.points().zip(real.values.iter().zip(&ideal.values)).map(|(t, (a, b))| vec![t, *a, *b]),
    )?;
    record(report, path);
    report.value("mass_real", real.mass).value("mass_ideal", ideal.mass);

    // A flat case (b) profile has a Fejer pointer with zeros at 2 pi k hbar / E. The outcome
    // law is that pointer convolved with |h|^2, so it only dips there; both are recorded.
    if let ClockConfig::B { lambda, e } = cfg.clock {
        if lambda == 0.0 {
            let series = realized_series(&state, &spec)?;
            let zeros: Vec<f64> = (1..=3).map(|k| 2.0 * PI * k as f64 * cfg.params.hbar / e).collect();
            let num =
                pointer_wavefunction_numeric(&spec, &TimeGrid::new(zeros[0], zeros[2], 2)?, DEFAULT_QUADRATURE_POINTS);
            let mut worst = 0.0f64;
            for (k, t) in zeros.iter().enumerate() {
                worst = worst.max(spec.pointer_density_exact(*t).unwrap_or(f64::NAN));
                report.value(&format!("p_real_at_zero_{}", k + 1), series.eval(*t));
            }
            report.value("pointer_numeric_at_zero_1", num.values[0].norm_sqr());
            report.check(Check::new("pointer.fejer_zeros", worst, 1e-12));
        }
    }

    if let Some(tau) = tau {
        let o = posterior_state(&state, &spec, tau)?;
        let path = out.join("posterior.csv");
        write_rows(
            &path,
            &["eps", "re", "im"],
            o.posterior.grid.points().zip(&o.posterior.amps).map(|(e, a)| vec![e, a.re, a.im]),
        )?;
        record(report, path);
        report.value("tau", tau).value("likelihood", o.likelihood).value("fidelity", o.fidelity(&state)?);
        report.check(Check::new("posterior.norm", o.posterior.norm_sqr() - 1.0, 1e-12));
        report.check(Check::new("posterior.discarded_negative_mass", o.negative_mass, 1e-10));
    }
    if let Some(n) = samples {
        let seed = seed.unwrap_or(cfg.seed);
        let x = sample_from_density(&real, n, seed)?;
        let path = out.join("samples.csv");
        write_with(&path, &["idx", "tau"], x.iter().enumerate().map(|(i, t)| vec![i.to_string(), fmt_f64(*t)]))?;
        record(report, path);
        let cdf = GridCdf::new(&real)?;
        report.value("seed", seed as f64).value("median", median(&x).unwrap());
        report.check(Check::new("sampler.ks", ks_statistic(&x, |t| cdf.eval(t)), 1.95 / (n as f64).sqrt()));
    }
    Ok(())
}

fn sweep_spec(cfg: &ExperimentConfig, param: SweepParam, v: f64) -> Result<ClockSpec> {
    let params = if param == SweepParam::Hbar { PhysicsParams::new(v)? } else { cfg.params };
    match (&cfg.clock, param) {
        (ClockConfig::A { .. }, SweepParam::Lambda) => ClockSpec::exponential(v, params),
        (ClockConfig::A { lambda }, SweepParam::Hbar) => ClockSpec::exponential(*lambda, params),
        (ClockConfig::B { e, .. }, SweepParam::Lambda) => ClockSpec::truncated(v, *e, params),
        (ClockConfig::B { lambda, .. }, SweepParam::E) => ClockSpec::truncated(*lambda, v, params),
        (ClockConfig::B { lambda, e }, SweepParam::Hbar) => ClockSpec::truncated(*lambda, *e, params),
        (ClockConfig::File(p), SweepParam::Hbar) => ClockSpec::from_file(p, params),
        (c, p) => Err(Error::Config(format!("cannot sweep {p:?} for clock {c:?}"))),
    }
}

pub fn cmd_sweep(
    cfg: &ExperimentConfig,
    param: SweepParam,
    values: &[f64],
    metric: SweepMetric,
    out: &Path,
    report: &mut RunReport,
) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let mut rows = Vec::with_capacity(values.len());
    for &v in values {
        let spec = sweep_spec(cfg, param, v)?;
        let y = match metric {
            SweepMetric::Fwhm | SweepMetric::Peak => {
                let m = sharpness_metrics(&spec, &pointer_grid(&spec)?, 1.0)?;
                if metric == SweepMetric::Fwhm {
                    m.fwhm
                } else {
                    m.peak_height
                }
            }
            SweepMetric::Tv => {
                let state = make_energy_state(&cfg.state, cfg.energy, spec.params())?;
                let tg = TimeGrid::full_period(&cfg.energy, &spec.params(), 4 * cfg.energy.n)?;
                let ideal = DensityProfile::new(tg, ideal_density_series(&state).eval_grid(&tg));
                tv_distance(&realized_density(&state, &spec, &tg)?, &ideal)?
            }
        };
        rows.push(vec![v, y]);
    }
    let path = out.join("sweep.csv");
    write_rows(&path, &["value", "metric"], rows.iter().cloned())?;
    record(report, path);
    let ys: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let same = |a: f64, b: f64| (a > 0.0) == (b > 0.0);
    let increasing = xs.windows(2).zip(ys.windows(2)).all(|(x, y)| same(x[1] - x[0], y[1] - y[0]));
    let decreasing = xs.windows(2).zip(ys.windows(2)).all(|(x, y)| same(x[1] - x[0], y[0] - y[1]));
    report.value("monotone_increasing", increasing as u8 as f64).value("monotone_decreasing", decreasing as u8 as f64);
    if matches!(metric, SweepMetric::Fwhm | SweepMetric::Peak) {
        if let Some(s) = sweep_spec(cfg, param, values[0])?.lorentz_scale() {
            report.notes.push(format!(
                "case (a) sharpness parameter is hbar*lambda (= {s} at the first value); sharp-measurement threshold quoted as \"lambda <= 1/hbar\""
            ));
        }
    }
    Ok(())
}

pub fn cmd_nogo(cfg: &ExperimentConfig, widths: &[f64], out: &Path, report: &mut RunReport) -> Result<()> {
    if widths.is_empty() {
        return Err(Error::Config("nogo needs at least one lambda".into()));
    }
    let state = state_of(cfg)?;
    let tg = TimeGrid::full_period(&cfg.energy, &cfg.params, 4 * cfg.energy.n)?;
    let table = nogo_sweep(&state, widths, &tg)?;
    let path = out.join("nogo.csv");
    write_rows(&path, &["lambda", "tv_distance"], table.rows.iter().map(|r| vec![r.lambda, r.tv_distance]))?;
    record(report, path);
    report.check(Check::flag("nogo.positive", table.all_positive()));
    report.check(Check::flag("nogo.strictly_decreasing", table.strictly_decreasing()));
    Ok(())
}

/// The full invariant suite. Config-driven checks use the configured grids,
/// state and clock; closed-form oracles use their own fixed setups.
pub fn cmd_verify(cfg: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let f = cfg.tolerance.factor();
    let mut v = Verifier { report, f };
    verify_representation(cfg, &mut v)?;
    verify_shift_algebra(&mut v)?;
    verify_pointer(&mut v)?;
    verify_instrument(cfg, &mut v)?;
    verify_left_eigen(cfg, &mut v)?;
    verify_oracles(&mut v)?;
    verify_nogo(cfg, &mut v)?;
    verify_sampler(&mut v)?;
    verify_limits(&mut v)?;
    Ok(())
}

struct Verifier<'a> {
    report: &'a mut RunReport,
    f: f64,
}

impl Verifier<'_> {
    /// Tolerance scaled by the profile.
    fn scaled(&mut self, name: &str, value: f64, tol: f64) {
        self.report.check(Check::new(name, value, tol * self.f));
    }

    /// Contract threshold that the profile does not touch.
    fn fixed(&mut self, name: &str, value: f64, tol: f64) {
        self.report.check(Check::new(name, value, tol));
    }

    fn flag(&mut self, name: &str, holds: bool) {
        self.report.check(Check::flag(name, holds));
    }

    fn value(&mut self, name: &str, x: f64) {
        self.report.value(name, x);
    }
}

fn p1() -> PhysicsParams {
    PhysicsParams::default()
}

fn default_grid() -> EnergyGrid {
    EnergyGrid { eps_max: 40.0, n: 1 << 14 }
}

fn exp1(grid: EnergyGrid) -> Result<EnergyState> {
    make_energy_state(&StateSpec::Exp { beta: 1.0 }, grid, p1())
}

fn max_by(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(0.0, f64::max)
}

fn verify_representation(cfg: &ExperimentConfig, v: &mut Verifier) -> Result<()> {
    let prepared = prepare_energy_state(&cfg.state, cfg.energy, cfg.params)?;
    v.scaled("state.tail_mass", prepared.tail_mass, 1e-10);
    let s = prepared.state;
    v.scaled("state.norm", s.norm_sqr() - 1.0, 1e-12);
    let tg = TimeGrid::full_period(&s.grid, &s.params, 2 * s.grid.n)?;
    let h = energy_to_time(&s, &tg);
    v.scaled("time.parseval", h.norm_sqr() - s.norm_sqr(), 1e-3);
    let back = time_to_energy(&h, s.grid);
    v.scaled("time.round_trip", back.state.max_abs_diff(&s), 1e-3);
    let window = ideal_time_density(&s, &cfg.time);
    v.value("time.window_mass", window.mass);
    Ok(())
}

fn s_lattice() -> Vec<CoherentLabel> {
    let mut out = Vec::new();
    for &k in &[0.0, 0.5, 1.0] {
        for &t in &[-2.0, 0.0, 2.0] {
            out.push(CoherentLabel { k, tau: t });
        }
    }
    out
}

fn verify_shift_algebra(v: &mut Verifier) -> Result<()> {
    let p = p1();
    let fine = EnergyGrid::new(40.0, 1 << 17)?;
    let labels = s_lattice();
    let vecs: Vec<_> = labels.iter().map(|l| coherent_vector(*l, fine, p)).collect();
    let mut worst = 0.0f64;
    for (a, va) in labels.iter().zip(&vecs) {
        for (b, vb) in labels.iter().zip(&vecs) {
            if a.k + b.k > 0.0 {
                let exact = coherent_overlap(a, b, &p)?;
                worst = worst.max((va.overlap(vb)? - exact).norm() / exact.norm());
            }
        }
    }
    v.scaled("coherent.overlap_rel", worst, 1e-6);
    let diag = max_by(labels.iter().filter(|l| l.k > 0.0).map(|l| {
        let exact = coherent_overlap(l, l, &p).unwrap();
        (exact.re - 1.0 / (2.0 * l.k)).abs() + exact.im.abs()
    }));
    v.scaled("coherent.diagonal", diag, 1e-15);

    let g = EnergyGrid::new(32.0, 1 << 14)?;
    let mut eig = 0.0f64;
    for l in labels.iter().filter(|l| l.k >= 0.5) {
        let vec = coherent_vector(*l, g, p).as_state();
        for lam in [g.step(), 10.0 * g.step(), 0.5] {
            let q = g.commensurate_cells(lam).expect("commensurate shift");
            let lhs = coshift(&vec, ShiftAmount::cells(&g, q));
            let factor = (-lam * l.s(&p)).exp();
            // Cells whose shifted argument leaves the grid are not compared.
            let num = (0..g.n - q).map(|j| (lhs.amps[j] - factor * vec.amps[j]).norm_sqr()).sum::<f64>();
            eig = eig.max((num / vec.amps.iter().map(|a| a.norm_sqr()).sum::<f64>()).sqrt());
        }
    }
    v.scaled("shift.eigenrelation", eig, 1e-10);

    let cg = default_grid();
    let tg = TimeGrid::full_period(&cg, &p, 2 * cg.n)?;
    let pairs = [
        (StateSpec::Exp { beta: 1.0 }, StateSpec::Gauss { mu: 5.0, sigma: 1.0 }),
        (StateSpec::Indicator { a: 0.0, b: 2.0 }, StateSpec::Exp { beta: 0.5 }),
    ];
    let mut comp = 0.0f64;
    for (a, b) in &pairs {
        let (a, b) = (make_energy_state(a, cg, p)?, make_energy_state(b, cg, p)?);
        for k in [0.0, 0.1, 0.5] {
            comp = comp.max(completeness_check(&a, &b, k, &tg)?.abs_err);
        }
    }
    v.scaled("shift.completeness", comp, 1e-3);
    Ok(())
}

fn verify_pointer(v: &mut Verifier) -> Result<()> {
    let p = p1();
    let tg = TimeGrid::new(-20.0, 20.0, 160)?;
    let (mut amp, mut dens_an, mut dens_num, mut fwhm) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for lambda in [0.5, 1.0, 2.0] {
        let spec = ClockSpec::exponential(lambda, p)?;
        let exact = pointer_wavefunction(&spec, &tg);
        let num = pointer_wavefunction_numeric(&spec, &tg, DEFAULT_QUADRATURE_POINTS);
        for (i, (a, b)) in exact.values.iter().zip(&num.values).enumerate() {
            let d = spec.pointer_density_exact(tg.point(i)).unwrap();
            amp = amp.max((a - b).norm());
            dens_an = dens_an.max((a.norm_sqr() - d).abs() / d);
            dens_num = dens_num.max((b.norm_sqr() - d).abs() / d);
        }
        let m = sharpness_metrics(&spec, &pointer_grid(&spec)?, 1.0)?;
        fwhm = fwhm.max((m.fwhm - 2.0 * lambda).abs());
    }
    v.scaled("pointer.a.amplitude", amp, 1e-6);
    v.scaled("pointer.a.density_analytic", dens_an, 1e-8);
    v.scaled("pointer.a.density_numeric", dens_num, 1e-5);
    v.scaled("pointer.a.fwhm", fwhm, 1e-6);

    let mut b_rel = 0.0f64;
    for (lambda, e) in [(1.0, 1.0), (0.1, 4.0)] {
        let spec = ClockSpec::truncated(lambda, e, p)?;
        let num = pointer_wavefunction_numeric(&spec, &tg, DEFAULT_QUADRATURE_POINTS);
        for (i, b) in num.values.iter().enumerate() {
            let d = spec.pointer_density_exact(tg.point(i)).unwrap();
            b_rel = b_rel.max((b.norm_sqr() - d).abs() / d);
        }
    }
    v.scaled("pointer.b.density", b_rel, 1e-5);

    let flat = ClockSpec::truncated(0.0, 1.0, p)?;
    let num = pointer_wavefunction_numeric(&flat, &tg, DEFAULT_QUADRATURE_POINTS);
    let peak = 1.0 / (2.0 * PI);
    let flat_err = max_by(
        num.values
            .iter()
            .enumerate()
            .map(|(i, b)| (b.norm_sqr() - flat.pointer_density_exact(tg.point(i)).unwrap()).abs() / peak),
    );
    v.scaled("pointer.b.flat_profile", flat_err, 1e-5);
    let near = ClockSpec::truncated(1e-7, 1.0, p)?;
    let lim = max_by(
        tg.points()
            .map(|t| (near.pointer_density_exact(t).unwrap() - flat.pointer_density_exact(t).unwrap()).abs() / peak),
    );
    v.scaled("pointer.b.lambda_to_zero", lim, 1e-5);
    let m = sharpness_metrics(&flat, &pointer_grid(&flat)?, 1.0)?;
    v.scaled("pointer.b.flat_peak", m.peak_height / peak - 1.0, 5e-3);
    let zeros = max_by((1..=3).map(|k| flat.pointer_density_exact(2.0 * PI * k as f64).unwrap()));
    v.scaled("pointer.b.fejer_zeros", zeros, 1e-12);
    Ok(())
}

fn builtin_clocks(p: PhysicsParams) -> Result<Vec<ClockSpec>> {
    Ok(vec![
        ClockSpec::exponential(1.0, p)?,
        ClockSpec::truncated(1.0, 1.0, p)?,
        ClockSpec::truncated(0.1, 4.0, p)?,
        ClockSpec::truncated(0.0, 1.0, p)?,
    ])
}

fn verify_instrument(cfg: &ExperimentConfig, v: &mut Verifier) -> Result<()> {
    let p = cfg.params;
    let g = cfg.energy;
    let mut states = vec![
        make_energy_state(&StateSpec::Exp { beta: 1.0 }, g, p)?,
        make_energy_state(&StateSpec::Indicator { a: 0.0, b: 1.0 }, g, p)?,
        make_energy_state(&StateSpec::Gauss { mu: 5.0, sigma: 1.0 }, g, p)?,
    ];
    states.push(state_of(cfg)?);
    let mut clocks = builtin_clocks(p)?;
    clocks.push(cfg.clock_spec()?);
    let mut norm = 0.0f64;
    for c in &clocks {
        let lat = c.lattice(&g)?;
        for s in &states {
            norm = norm.max((outcome_series(s, &lat)?.period_integral() - 1.0).abs());
        }
    }
    v.scaled("instrument.normalization", norm, 1e-3);

    // Same sum, one operator application per node, on a reduced grid.
    let small = EnergyGrid::new(20.0, 512)?;
    let s = make_energy_state(&cfg.state, small, p)?;
    let spec = ClockSpec::truncated(0.0, 2.0, p)?;
    let lat = spec.lattice(&small)?;
    let tg = TimeGrid::full_period(&small, &p, 2 * small.n)?;
    let mut total = 0.0;
    let mut discarded = 0.0f64;
    for t in tg.points() {
        let r = crate::clock::apply_lattice(&s, &lat, t)?;
        total += r.state.norm_sqr() * tg.step();
        discarded = discarded.max(r.negative_mass);
    }
    v.scaled("instrument.normalization_operator_sum", total - 1.0, 1e-3);
    v.scaled("instrument.discarded_negative_mass", discarded, 1e-10);

    let state = state_of(cfg)?;
    let spec = cfg.clock_spec()?;
    let conv = convolution_check(&state, &spec, 1e-6)?;
    v.scaled("outcome.convolution_rel", conv.max_rel_err, 1e-4);

    let t_grid = cfg.time;
    let (mut dens, mut post, mut theta) = (0.0f64, 0.0f64, 0.0f64);
    for q in [0usize, 1, 37, 205] {
        let r = covariance_check(&state, &spec, q as f64 * t_grid.step(), &t_grid)?;
        dens = dens.max(r.density.abs_err);
        post = post.max(r.posterior.abs_err);
        theta = theta.max(r.theta);
    }
    v.scaled("covariance.density", dens, 1e-8);
    v.scaled("covariance.posterior", post, 1e-8);
    v.scaled("covariance.theta", theta, 1e-8);
    v.value("covariance.theta", theta);

    let o = posterior_state(&state, &spec, 0.0)?;
    v.scaled("posterior.norm", o.posterior.norm_sqr() - 1.0, 1e-12);
    v.scaled("posterior.discarded_negative_mass", o.negative_mass, 1e-10);
    Ok(())
}

fn verify_left_eigen(cfg: &ExperimentConfig, v: &mut Verifier) -> Result<()> {
    let spec = cfg.clock_spec()?;
    let (mut defect, mut resid, mut quad) = (0.0f64, 0.0f64, 0.0f64);
    for label in s_lattice() {
        for tau in [-2.0, 0.0, 2.0] {
            let c = left_eigen_check(&spec, &cfg.energy, &label, tau)?;
            defect = defect.max(c.colinearity_defect);
            resid = resid.max(c.grid_residual);
        }
    }
    let a = ClockSpec::exponential(1.0, p1())?;
    for label in s_lattice() {
        for tau in [-2.0, 0.0, 2.0] {
            let closed = crate::clock::left_eigen_envelope(&a, &label, tau);
            let q = crate::clock::left_eigen_envelope_quadrature(&a, &label, tau, DEFAULT_QUADRATURE_POINTS);
            quad = quad.max((closed - q).norm());
        }
    }
    v.scaled("left_eigen.colinearity", defect, 1e-6);
    v.scaled("left_eigen.grid_residual", resid, 1e-6);
    v.scaled("left_eigen.closed_form", quad, 1e-6);
    Ok(())
}

fn verify_oracles(v: &mut Verifier) -> Result<()> {
    let g = default_grid();
    let s = exp1(g)?;
    let spec = ClockSpec::exponential(1.0, p1())?;
    let o = posterior_state(&s, &spec, 0.0)?;
    v.scaled("oracle.p0", o.likelihood - 1.0 / (2.0 * PI), 1e-4);
    let tg = TimeGrid::full_period(&g, &p1(), 4 * g.n)?;
    let ideal = DensityProfile::new(tg, ideal_density_series(&s).eval_grid(&tg));
    let tv = tv_distance(&realized_density(&s, &spec, &tg)?, &ideal)?;
    v.value("oracle.tv", tv);
    v.scaled("oracle.tv", tv - cauchy_tv_oracle(), 2e-3);
    Ok(())
}

fn verify_nogo(cfg: &ExperimentConfig, v: &mut Verifier) -> Result<()> {
    let s = state_of(cfg)?;
    let tg = TimeGrid::full_period(&cfg.energy, &cfg.params, 4 * cfg.energy.n)?;
    let t = nogo_sweep(&s, &DEFAULT_NOGO_WIDTHS, &tg)?;
    v.flag("nogo.positive", t.all_positive());
    v.flag("nogo.strictly_decreasing", t.strictly_decreasing());
    v.fixed("nogo.final", t.last().unwrap().tv_distance, 0.02);
    for r in &t.rows {
        v.value(&format!("nogo.tv[{}]", r.lambda), r.tv_distance);
    }
    Ok(())
}

fn verify_sampler(v: &mut Verifier) -> Result<()> {
    let g = default_grid();
    let s = exp1(g)?;
    let spec = ClockSpec::exponential(1.0, p1())?;
    let tg = TimeGrid::full_period(&g, &p1(), 4 * g.n)?;
    let d = outcome_density(&s, &spec, &tg)?;
    let n = 100_000;
    let x = sample_from_density(&d, n, 7)?;
    let cdf = GridCdf::new(&d)?;
    v.fixed("sampler.ks", ks_statistic(&x, |t| cdf.eval(t)), 1.95 / (n as f64).sqrt());
    v.fixed("sampler.median", median(&x).unwrap(), 0.03);
    v.flag("sampler.reproducible", x == sample_from_density(&d, n, 7)?);
    v.flag("sampler.parallel_equals_serial", x == sample_from_density_serial(&d, n, 7)?);
    Ok(())
}

fn verify_limits(v: &mut Verifier) -> Result<()> {
    let fwhm = |spec: &ClockSpec| -> Result<f64> { Ok(sharpness_metrics(spec, &pointer_grid(spec)?, 1.0)?.fwhm) };
    let lam = max_by(
        [1.0, 0.5, 0.1, 0.01]
            .iter()
            .map(|&l| fwhm(&ClockSpec::exponential(l, p1()).unwrap()).unwrap() / (2.0 * l) - 1.0)
            .map(f64::abs),
    );
    v.scaled("limits.fwhm_linear_in_lambda", lam, 1e-2);
    let hb = max_by([1.0, 0.5, 0.1].iter().map(|&h| {
        let spec = ClockSpec::exponential(1.0, PhysicsParams::new(h).unwrap()).unwrap();
        (fwhm(&spec).unwrap() / (2.0 * h) - 1.0).abs()
    }));
    v.scaled("limits.fwhm_linear_in_hbar", hb, 1e-2);
    let es = [1.0, 4.0, 16.0, 64.0];
    let mut peak = 0.0f64;
    let mut widths = Vec::new();
    for &e in &es {
        let spec = ClockSpec::truncated(0.0, e, p1())?;
        let m = sharpness_metrics(&spec, &pointer_grid(&spec)?, 1.0)?;
        peak = peak.max((m.peak_height / (e / (2.0 * PI)) - 1.0).abs());
        widths.push(m.fwhm);
    }
    v.scaled("limits.peak_linear_in_e", peak, 1e-2);
    v.flag("limits.flat_fwhm_decreasing_in_e", widths.windows(2).all(|w| w[1] < w[0]));
    Ok(())
}
