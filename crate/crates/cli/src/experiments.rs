//! Dispatch from a validated configuration to the owning library module, and the
//! artifacts each experiment writes.

use std::f64::consts::PI;
use std::fs;
use std::time::Instant;

use serde_json::{json, Value};
use stablelab_core::format::fmt17;
use stablelab_core::grid::TSlice;
use stablelab_core::harnack_lab::{
    box_heights, box_hitting_sweep, default_phi_starts, estimate_mean_exit_time, estimate_phi,
    exit_law_comparison, exit_time_scaling, harnack_ratio_experiment, holder_constant_estimate,
    oscillation_profile, phi_is_monotone, random_boundary_data, resolvent_identity, resolvent_mc_at,
    resolvent_quadrature, EstimateCI, HorizontalShell, Region, ResolventOptions, ShapeKind, TargetSize,
    DEFAULT_CONFIDENCE,
};
use stablelab_core::kernel_engine::{
    exit_cdf_mu, stable_density_with, DensityConfig, DensityRoute, ExtendOptions, ExtensionField,
    VerticalBoundary,
};
use stablelab_core::littlewood_paley::{
    g_functions, gf_ratio_experiment, lp_family, maximal_domination, meyer_majorant_check, Datum, LpOptions,
    RatioTable, TGrid,
};
use stablelab_core::parallel::{par_map, with_workers};
use stablelab_core::simulator::{complete_to_boundary, jump_census, run_path_with, PathOptions};
use stablelab_core::special::gamma;
use stablelab_core::stable_core::tail_mass;
use stablelab_core::{AnisotropicBox, GridFunction, RngStream, SpaceTimePoint, StableParams};

use crate::config::{Experiment, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::manifest::{sha256_hex, Check, OutputFile, RunManifest, Status, CODE_VERSION};

const TAG_T0: u64 = 0x54_30;
const TAG_CENSUS: u64 = 0x43_45_4e;
const TAG_HARNACK: u64 = 0x48_41_52;
const TAG_HOLDER: u64 = 0x48_4f_4c;
const TAG_RES: u64 = 0x52_45_53;
const TAG_EXIT_CONTROL: u64 = 0x56_43;

/// Files and checks produced by one experiment, before anything touches the disk.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<(String, Vec<u8>)>,
    pub checks: Vec<Check>,
}

impl Outcome {
    fn file(&mut self, name: String, bytes: Vec<u8>) {
        self.files.push((name, bytes));
    }

    fn json(&mut self, name: String, v: &Value) {
        let mut text = serde_json::to_string_pretty(v).expect("json values serialise");
        text.push('\n');
        self.file(name, text.into_bytes());
    }

    fn check(&mut self, property: &str, status: Status, detail: String) {
        self.checks.push(Check {
            property: property.to_string(),
            status,
            detail,
        });
    }
}

/// Comma-separated table with a header row; floats in round-trip form.
struct Csv {
    text: String,
}

impl Csv {
    fn new(header: &[&str]) -> Self {
        Self {
            text: header.join(",") + "\n",
        }
    }

    fn row(&mut self, cells: &[Cell]) {
        let line: Vec<String> = cells.iter().map(Cell::render).collect();
        self.text.push_str(&line.join(","));
        self.text.push('\n');
    }

    fn bytes(self) -> Vec<u8> {
        self.text.into_bytes()
    }
}

enum Cell {
    F(f64),
    U(usize),
    S(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(v) => fmt17(*v),
            Cell::U(v) => v.to_string(),
            Cell::S(s) => s.clone(),
        }
    }
}

use Cell::{F, S, U};

/// Runs the experiment, writes its artifacts and manifest into `out_dir`, and returns the
/// manifest.
pub fn run_experiment(config: &ExperimentConfig) -> CliResult<RunManifest> {
    let started = Instant::now();
    let outcome = with_workers(config.workers, || compute(config))?;
    fs::create_dir_all(&config.out_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", config.out_dir.display())))?;
    let mut outputs = Vec::with_capacity(outcome.files.len());
    for (name, bytes) in &outcome.files {
        fs::write(config.out_dir.join(name), bytes)?;
        outputs.push(OutputFile {
            file: name.clone(),
            bytes: bytes.len(),
            sha256: sha256_hex(bytes),
        });
    }
    let manifest = RunManifest {
        experiment: config.experiment,
        version: CODE_VERSION.to_string(),
        config_toml: config.to_toml(),
        config: config.clone(),
        wall_time_s: started.elapsed().as_secs_f64(),
        outputs,
        checks: outcome.checks,
    };
    manifest.write(&config.out_dir)?;
    Ok(manifest)
}

/// The experiment's artifacts in memory; deterministic for a given configuration.
pub fn compute(c: &ExperimentConfig) -> CliResult<Outcome> {
    match c.experiment {
        Experiment::KernelCheck => kernel_check(c),
        Experiment::Simulate => simulate(c),
        Experiment::ExitTime => exit_time(c),
        Experiment::Hitting => hitting(c),
        Experiment::Phi => phi(c),
        Experiment::Harnack => harnack(c),
        Experiment::Holder => holder(c),
        Experiment::Resolvent => resolvent(c),
        Experiment::Lp => lp(c),
    }
}

fn extend_opts(c: &ExperimentConfig) -> ExtendOptions {
    c.tol.map(ExtendOptions::with_tol).unwrap_or_default()
}

fn boundary_template(c: &ExperimentConfig) -> CliResult<GridFunction> {
    Ok(GridFunction::zeros(c.origin(), c.grid.spacing, c.extent())?)
}

/// Same window, half the spacing.
fn refined(g: &GridFunction) -> CliResult<GridFunction> {
    let extent = g.extent().iter().map(|n| 2 * (n - 1) + 1).collect();
    Ok(GridFunction::zeros(g.origin().to_vec(), 0.5 * g.spacing(), extent)?)
}

fn ci_json(e: &EstimateCI) -> Value {
    json!({"mean": e.mean, "std_error": e.std_error, "n": e.n, "lower": e.lower, "upper": e.upper})
}

fn prefix(c: &ExperimentConfig) -> &'static str {
    c.experiment.name()
}

/// Cauchy density for `alpha = 1`.
pub fn cauchy_density(d: usize, s: f64, r: f64) -> f64 {
    let k = (d as f64 + 1.0) / 2.0;
    s * gamma(k) / PI.powf(k) / (s * s + r * r).powf(k)
}

fn kernel_check(c: &ExperimentConfig) -> CliResult<Outcome> {
    let p = c.params();
    let cauchy = p.alpha() == 1.0;
    let mut cfg = DensityConfig::default();
    if let Some(t) = c.tol {
        cfg.abs_tol = t;
        cfg.rel_tol = t;
    }
    let kc = &c.kernel_check;
    let pairs: Vec<(f64, f64)> = kc.s.iter().flat_map(|&s| kc.r.iter().map(move |&r| (s, r))).collect();
    let vals = par_map(pairs.len(), |i| -> CliResult<(f64, f64)> {
        let (s, r) = pairs[i];
        let v = stable_density_with(p, s, r, &cfg)?.value;
        let oracle = if cauchy {
            cauchy_density(p.d(), s, r)
        } else {
            stable_density_with(p, s, r, &DensityConfig { route: DensityRoute::Mixture, ..cfg })?.value
        };
        Ok((v, oracle))
    });
    let oracle_name = if cauchy { "cauchy_oracle" } else { "mixture_route" };
    let mut csv = Csv::new(&["s", "r", "p", oracle_name, "abs_err"]);
    let mut max_err = 0.0_f64;
    for ((s, r), v) in pairs.iter().zip(vals) {
        let (v, o) = v?;
        let err = (v - o).abs();
        max_err = max_err.max(err);
        csv.row(&[F(*s), F(*r), F(v), F(o), F(err)]);
    }
    let gate = if cauchy { 1e-6 } else { 1e-5 };
    let mut out = Outcome::default();
    out.file(format!("{}.csv", prefix(c)), csv.bytes());
    out.json(
        format!("{}.json", prefix(c)),
        &json!({"oracle": oracle_name, "points": pairs.len(), "max_abs_err": max_err, "gate": gate}),
    );
    out.check(
        "kernel oracle",
        Status::from_bool(max_err < gate),
        format!("max abs error {max_err:.3e} against the {oracle_name} (gate {gate:.0e})"),
    );
    Ok(out)
}

/// One path from `start` to the boundary: stepped up to `horizon` with the bridge
/// correction, then completed exactly.
pub fn boundary_hit(p: StableParams, start: &SpaceTimePoint, dt: f64, horizon: f64, rng: &mut RngStream) -> CliResult<(f64, Vec<f64>)> {
    let opts = PathOptions {
        jump_threshold: f64::INFINITY,
        record_states: false,
        bridge_correction: true,
        monitor: None,
    };
    let rec = run_path_with(p, start, dt, horizon, &opts, rng)?;
    let last = rec.last();
    Ok(match rec.t0 {
        Some(t0) => (t0, last.x.clone()),
        None => {
            let (tau, y) = complete_to_boundary(p, &last.x, last.t, rng);
            (last.time + tau, y)
        }
    })
}

fn simulate(c: &ExperimentConfig) -> CliResult<Outcome> {
    let p = c.params();
    let sim = &c.simulate;
    let start = SpaceTimePoint::at_height(p.d(), sim.start_t);
    let dt = c.dt.unwrap_or(sim.start_t * sim.start_t / 100.0);
    let horizon = sim.probes.iter().copied().fold(dt, f64::max);
    let hits = par_map(c.n, |i| {
        let mut rng = RngStream::for_task(c.seed, TAG_T0, i as u64);
        boundary_hit(p, &start, dt, horizon, &mut rng)
    });
    let hits: Vec<(f64, Vec<f64>)> = hits.into_iter().collect::<CliResult<_>>()?;
    let mut out = Outcome::default();

    let mut csv = Csv::new(&["s", "empirical_cdf", "std_error", "oracle_cdf", "z"]);
    let mut cdf_ok = true;
    let mut cdf_rows = Vec::new();
    for &s in &sim.probes {
        let k = hits.iter().filter(|(t, _)| *t <= s).count() as u64;
        let e = EstimateCI::from_proportion(k, c.n as u64, DEFAULT_CONFIDENCE);
        let oracle = exit_cdf_mu(sim.start_t, s);
        let z = z_of(&e, oracle);
        cdf_ok &= z.abs() <= 3.0;
        csv.row(&[F(s), F(e.mean), F(e.std_error), F(oracle), F(z)]);
        cdf_rows.push(json!({"s": s, "estimate": ci_json(&e), "oracle": oracle, "z": z}));
    }
    out.file(format!("{}-hitting-time.csv", prefix(c)), csv.bytes());

    // boundary values against the deterministic extension of a Gaussian bump
    let bump = GridFunction::from_fn(c.origin(), c.grid.spacing, c.extent(), |x| {
        (-x.iter().map(|v| v * v).sum::<f64>()).exp()
    })?;
    let mc = EstimateCI::from_samples(
        &hits.iter().map(|(_, y)| bump.interpolate(y)).collect::<Vec<_>>(),
        DEFAULT_CONFIDENCE,
    );
    let field = ExtensionField::new(&bump, p, sim.start_t, &extend_opts(c))?;
    let oracle = field.eval(&start.x, sim.start_t);
    let bz = z_of(&mc, oracle);

    let dtc = c.dt.unwrap_or(sim.census_time / 1000.0);
    let census_start = SpaceTimePoint::at_height(p.d(), sim.census_start_t);
    let threshold = sim.radii.iter().copied().fold(f64::INFINITY, f64::min);
    let counts = par_map(c.n, |i| -> CliResult<Vec<usize>> {
        let mut rng = RngStream::for_task(c.seed, TAG_CENSUS, i as u64);
        let opts = PathOptions {
            jump_threshold: threshold,
            record_states: false,
            bridge_correction: true,
            monitor: None,
        };
        let rec = run_path_with(p, &census_start, dtc, sim.census_time, &opts, &mut rng)?;
        sim.radii.iter().map(|&r| Ok(jump_census(&rec, r)?)).collect()
    });
    let counts: Vec<Vec<usize>> = counts.into_iter().collect::<CliResult<_>>()?;
    let mut csv = Csv::new(&["radius", "mean_count", "std_error", "target", "z"]);
    let mut census_ok = true;
    let mut census_rows = Vec::new();
    for (j, &r) in sim.radii.iter().enumerate() {
        let e = EstimateCI::from_samples(&counts.iter().map(|v| v[j] as f64).collect::<Vec<_>>(), DEFAULT_CONFIDENCE);
        let target = sim.census_time * tail_mass(p, r);
        let z = z_of(&e, target);
        census_ok &= z.abs() <= 3.0;
        csv.row(&[F(r), F(e.mean), F(e.std_error), F(target), F(z)]);
        census_rows.push(json!({"radius": r, "estimate": ci_json(&e), "target": target, "z": z}));
    }
    out.file(format!("{}-census.csv", prefix(c)), csv.bytes());
    out.json(
        format!("{}.json", prefix(c)),
        &json!({
            "dt": dt, "census_dt": dtc, "paths": c.n,
            "hitting_time": cdf_rows,
            "boundary_value": {"estimate": ci_json(&mc), "extension": oracle, "z": bz},
            "census": census_rows,
        }),
    );
    out.check(
        "boundary-hit law",
        Status::from_bool(cdf_ok && bz.abs() <= 3.0),
        format!("hitting-time CDF within 3 SE at {} probes: {cdf_ok}; boundary value z = {bz:.2}", sim.probes.len()),
    );
    out.check(
        "Levy system jump census",
        Status::from_bool(census_ok),
        format!("big-jump counts within 3 SE of the Levy-measure rate at R = {:?}", sim.radii),
    );
    Ok(out)
}

fn z_of(e: &EstimateCI, target: f64) -> f64 {
    if e.std_error > 0.0 {
        (e.mean - target) / e.std_error
    } else if e.mean == target {
        0.0
    } else {
        f64::INFINITY
    }
}

fn exit_time(c: &ExperimentConfig) -> CliResult<Outcome> {
    let p = c.params();
    let et = &c.exit_time;
    let fit = exit_time_scaling(p, &et.r, c.n, et.dt_factor, c.seed)?;
    let mut out = Outcome::default();
    let mut csv = Csv::new(&["r", "mean_exit_time", "std_error", "lower", "upper", "control_mean", "control_std_error", "control_oracle"]);
    let mut control_ok = true;
    let mut rows = Vec::new();
    for (j, (&r, e)) in et.r.iter().zip(&fit.estimates).enumerate() {
        let (cm, cse) = if et.control {
            let center = SpaceTimePoint::at_height(p.d(), r);
            let bx = AnisotropicBox::plain(center.clone(), r)?.with_horizontal_stretch(1e9)?;
            let seed = c.seed ^ TAG_EXIT_CONTROL.wrapping_mul(j as u64 + 1);
            let ctl = estimate_mean_exit_time(p, &bx, &center, c.n, et.dt_factor * r * r, seed)?;
            control_ok &= ctl.within_se(r * r / 8.0, 3.0);
            (ctl.mean, ctl.std_error)
        } else {
            (f64::NAN, f64::NAN)
        };
        csv.row(&[F(r), F(e.mean), F(e.std_error), F(e.lower), F(e.upper), F(cm), F(cse), F(r * r / 8.0)]);
        rows.push(json!({"r": r, "estimate": ci_json(e), "control_mean": cm, "control_std_error": cse}));
    }
    out.file(format!("{}.csv", prefix(c)), csv.bytes());

    // exit-position comparability on D_1 at height 1
    let center = SpaceTimePoint::at_height(p.d(), 1.0);
    let bx = AnisotropicBox::new(center.clone(), 1.0, 0.5)?;
    let hw = bx.horizontal_half_width(p);
    let hv = bx.vertical_half_width();
    let shift = |dx: f64, dt: f64| SpaceTimePoint {
        x: center.x.iter().enumerate().map(|(a, v)| if a == 0 { v + dx } else { *v }).collect(),
        t: center.t + dt,
    };
    let starts = vec![center.clone(), shift(0.2 * hw, 0.0), shift(0.0, 0.2 * hv), shift(-0.2 * hw, -0.2 * hv)];
    let outer = bx.scaled(2.0)?.horizontal_half_width(p);
    let targets = [
        HorizontalShell { inner: outer, outer: 2.0 * outer },
        HorizontalShell { inner: 2.0 * outer, outer: f64::INFINITY },
    ];
    let law = exit_law_comparison(p, &bx, &starts, &targets, c.n, et.dt_factor, c.seed ^ 0x4c33)?;

    let ratio: Vec<f64> = fit.estimates.iter().zip(&et.r).map(|(e, r)| e.mean / (r * r)).collect();
    let (lo, hi) = (ratio.iter().copied().fold(f64::INFINITY, f64::min), ratio.iter().copied().fold(0.0, f64::max));
    let slope_ok = (1.9..=2.1).contains(&fit.slope);
    out.json(
        format!("{}.json", prefix(c)),
        &json!({
            "slope": fit.slope, "slope_se": fit.slope_se,
            "slope_ci": [fit.slope_lower, fit.slope_upper],
            "prefactor": fit.prefactor,
            "scales": rows,
            "exit_law": {"band": law.band, "probabilities": law.probabilities.iter().map(|r| r.iter().map(ci_json).collect::<Vec<_>>()).collect::<Vec<_>>()},
        }),
    );
    let detail = format!("slope {:.4} (CI {:.4}..{:.4}), E tau / r^2 in [{lo:.4}, {hi:.4}]", fit.slope, fit.slope_lower, fit.slope_upper);
    out.check("mean exit time upper bound", Status::from_bool(slope_ok && hi.is_finite()), detail.clone());
    out.check("mean exit time lower bound", Status::from_bool(slope_ok && lo > 0.0), detail);
    if et.control {
        out.check("vertical exit-time control", Status::from_bool(control_ok), "mean within 3 SE of r^2/8 at every scale".into());
    }
    out.check(
        "exit-position comparability",
        Status::from_bool(law.band.is_finite()),
        format!("largest ratio between starts {:.4}", law.band),
    );
    Ok(out)
}

fn hitting(c: &ExperimentConfig) -> CliResult<Outcome> {
    let p = c.params();
    let center = SpaceTimePoint::at_height(p.d(), c.hitting.center_t);
    let start = SpaceTimePoint { x: center.x.clone(), t: center.t + 0.5 };
    let sizes: Vec<TargetSize> = c
        .hitting
        .sizes
        .iter()
        .map(|[h, v]| TargetSize { horizontal_fraction: *h, vertical_fraction: *v })
        .collect();
    let dt = c.dt.unwrap_or(1.0 / 400.0);
    let sweep = box_hitting_sweep(p, &center, &sizes, &start, c.n, dt, c.seed)?;
    let mut csv = Csv::new(&["horizontal_fraction", "vertical_fraction", "measure", "probability", "std_error", "lower", "ratio"]);
    for r in &sweep.rows {
        csv.row(&[
            F(r.size.horizontal_fraction),
            F(r.size.vertical_fraction),
            F(r.measure),
            F(r.estimate.mean),
            F(r.estimate.std_error),
            F(r.estimate.lower),
            F(r.estimate.mean / r.measure),
        ]);
    }
    let mut out = Outcome::default();
    out.file(format!("{}.csv", prefix(c)), csv.bytes());
    out.json(
        format!("{}.json", prefix(c)),
        &json!({"c_hat": sweep.c_hat, "c_hat_lower": sweep.c_hat_lower, "dt": dt, "paths": c.n}),
    );
    out.check(
        "box hitting lower bound",
        Status::from_bool(sweep.c_hat_lower > 0.0),
        format!("c_hat {:.4}, lower confidence bound {:.4}", sweep.c_hat, sweep.c_hat_lower),
    );
    Ok(out)
}

fn shape_name(s: ShapeKind) -> &'static str {
    match s {
        ShapeKind::SubBox => "sub-box",
        ShapeKind::TwoBoxes => "two-boxes",
        ShapeKind::Annulus => "annulus",
    }
}

fn phi(c: &ExperimentConfig) -> CliResult<Outcome> {
    let p = c.params();
    let center = SpaceTimePoint::at_height(p.d(), c.phi.center_t);
    let starts = default_phi_starts(p, &center);
    let dt = c.dt.unwrap_or(1.0 / 400.0);
    let pts = estimate_phi(p, &center, &c.phi.eps, &ShapeKind::ALL, &starts, c.n, dt, c.seed)?;
    let mut csv = Csv::new(&["epsilon", "shape", "start", "probability", "std_error", "lower", "upper", "envelope"]);
    for pt in &pts {
        for (k, e) in pt.all.iter().enumerate() {
            let shape = ShapeKind::ALL[k / starts.len()];
            let start = k % starts.len();
            let env = shape == pt.shape && start == pt.start;
            csv.row(&[F(pt.epsilon), S(shape_name(shape).into()), U(start), F(e.mean), F(e.std_error), F(e.lower), F(e.upper), U(env as usize)]);
        }
    }
    let positive = pts.iter().all(|pt| pt.estimate.lower > 0.0);
    let monotone = phi_is_monotone(&pts, DEFAULT_CONFIDENCE);
    let mut out = Outcome::default();
    out.file(format!("{}.csv", prefix(c)), csv.bytes());
    out.json(
        format!("{}.json", prefix(c)),
        &json!({
            "confidence": DEFAULT_CONFIDENCE,
            "phi": pts.iter().map(|pt| json!({"epsilon": pt.epsilon, "estimate": ci_json(&pt.estimate), "shape": shape_name(pt.shape), "start": pt.start})).collect::<Vec<_>>(),
            "monotone": monotone,
        }),
    );
    let env: Vec<String> = pts.iter().map(|pt| format!("{:.3}", pt.estimate.mean)).collect();
    out.check(
        "Krylov-Safonov function",
        Status::from_bool(positive && monotone),
        format!("phi = [{}] at eps = {:?}; positive at 99%: {positive}; monotone within CI: {monotone}", env.join(", "), c.phi.eps),
    );
    Ok(out)
}

fn harnack(c: &ExperimentConfig) -> CliResult<Outcome> {
    let p = c.params();
    let hc = &c.harnack;
    let bx = hc.eval_box(p.d())?;
    let heights = box_heights(&bx, hc.heights);
    let opts = extend_opts(c);
    let run = |template: &GridFunction| -> CliResult<(f64, f64, Vec<f64>)> {
        let base = random_boundary_data(template, hc.data, &mut RngStream::new(c.seed ^ TAG_HARNACK, 0));
        let fresh = random_boundary_data(template, hc.fresh, &mut RngStream::new(c.seed ^ TAG_HARNACK, 1));
        let a = harnack_ratio_experiment(p, &base, &bx, &heights, hc.points, &opts)?;
        let b = if fresh.is_empty() {
            a.max_ratio
        } else {
            harnack_ratio_experiment(p, &fresh, &bx, &heights, hc.points, &opts)?.max_ratio
        };
        Ok((a.max_ratio, a.max_ratio.max(b), a.rows.iter().map(|r| r.ratio).collect()))
    };
    let template = boundary_template(c)?;
    let (base, augmented, ratios) = run(&template)?;
    let (fine, _, fine_ratios) = run(&refined(&template)?)?;
    let mut csv = Csv::new(&["datum", "ratio", "ratio_refined"]);
    for (i, (a, b)) in ratios.iter().zip(&fine_ratios).enumerate() {
        csv.row(&[U(i), F(*a), F(*b)]);
    }
    let refine_change = (fine / base - 1.0).abs();
    let growth = augmented / base - 1.0;
    let mut out = Outcome::default();
    out.file(format!("{}.csv", prefix(c)), csv.bytes());
    out.json(
        format!("{}.json", prefix(c)),
        &json!({"max_ratio": base, "max_ratio_refined": fine, "max_ratio_with_fresh": augmented, "refinement_change": refine_change, "fresh_growth": growth}),
    );
    out.check(
        "Harnack inequality",
        Status::from_bool(base.is_finite() && refine_change < 0.1 && growth < 0.1),
        format!("max ratio {base:.4}; refinement change {:.2}%; growth with fresh data {:.2}%", 100.0 * refine_change, 100.0 * growth),
    );
    Ok(out)
}

fn holder(c: &ExperimentConfig) -> CliResult<Outcome> {
    let p = c.params();
    let hc = &c.holder;
    let center = SpaceTimePoint::at_height(p.d(), hc.center_t);
    let data = random_boundary_data(&boundary_template(c)?, hc.data, &mut RngStream::new(c.seed ^ TAG_HOLDER, 0));
    let opts = extend_opts(c);
    let mut csv = Csv::new(&["datum", "theta", "level", "inf", "sup", "oscillation"]);
    let mut fits = Csv::new(&["datum", "theta", "beta_hat", "gamma_hat", "c_hat", "residual", "contracting"]);
    let mut contracting = true;
    let mut bounds = true;
    let mut worst_spread = 0.0_f64;
    let mut summary = Vec::new();
    for (i, f) in data.iter().enumerate() {
        let mut gammas = Vec::new();
        for &theta in &hc.theta {
            let fit = oscillation_profile(p, f, &center, theta, hc.levels, hc.side_points, &opts)?;
            for l in &fit.profile.levels {
                csv.row(&[U(i), F(theta), U(l.k), F(l.a), F(l.b), F(l.b - l.a)]);
            }
            let ok = fit.profile.is_contracting();
            contracting &= ok;
            bounds &= fit.beta_hat < 1.0 && fit.fit.gamma_hat > 0.0;
            fits.row(&[U(i), F(theta), F(fit.beta_hat), F(fit.fit.gamma_hat), F(fit.fit.c_hat), F(fit.fit.residual), U(ok as usize)]);
            gammas.push(fit.fit.gamma_hat);
        }
        let lo = gammas.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = gammas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let spread = if lo > 0.0 { hi / lo - 1.0 } else { f64::INFINITY };
        worst_spread = worst_spread.max(spread);
        summary.push(json!({"datum": i, "gamma_hat": gammas, "theta_spread": spread}));
    }
    let mut out = Outcome::default();
    out.file(format!("{}-profiles.csv", prefix(c)), csv.bytes());
    out.file(format!("{}-fits.csv", prefix(c)), fits.bytes());
    out.json(format!("{}.json", prefix(c)), &json!({"theta": hc.theta, "data": summary, "worst_theta_spread": worst_spread}));
    out.check(
        "Holder decay of oscillation",
        Status::from_bool(contracting && bounds && worst_spread <= 0.2),
        format!("contracting: {contracting}; beta < 1 and gamma > 0: {bounds}; worst theta spread {:.2}%", 100.0 * worst_spread),
    );
    Ok(out)
}

/// Space-time bump on the configured horizontal lattice, a quarter of the way up the
/// slab so that the slab top is far from the rows the identity is checked on.
pub fn resolvent_datum(c: &ExperimentConfig) -> CliResult<GridFunction> {
    let rc = &c.resolvent;
    let base = boundary_template(c)?;
    let mid = 0.25 * rc.height;
    let slices = (0..rc.rows)
        .map(|j| {
            let t = rc.height * j as f64 / (rc.rows - 1) as f64;
            let values = (0..base.len())
                .map(|k| {
                    let x = base.point(k);
                    (-x.iter().map(|v| v * v).sum::<f64>() - (t - mid).powi(2)).exp()
                })
                .collect();
            TSlice { t, values }
        })
        .collect();
    Ok(base.with_slices(slices)?)
}

fn resolvent(c: &ExperimentConfig) -> CliResult<Outcome> {
    let p = c.params();
    let rc = &c.resolvent;
    let f2 = resolvent_datum(c)?;
    let opts = ResolventOptions {
        vertical: if rc.vertical == "killed" { VerticalBoundary::Killed } else { VerticalBoundary::Free },
        tol: c.tol.unwrap_or(ResolventOptions::default().tol),
        ..Default::default()
    };
    let id = resolvent_identity(&f2, p, rc.lambda, rc.beta, &opts)?;
    let ul = resolvent_quadrature(&f2, p, rc.lambda, &opts)?;
    let bound = ul.error_bound();
    let f = |x: &[f64], t: f64| f2.interpolate_space_time(x, t);
    let mut csv = Csv::new(&["t", "quadrature", "error_bound", "monte_carlo", "std_error", "z"]);
    let mut agree = true;
    let mut probes = Vec::new();
    for (j, &t) in rc.probes.iter().enumerate() {
        let pt = SpaceTimePoint::at_height(p.d(), t);
        let q = ul.field.interpolate_space_time(&pt.x, t);
        let mc = resolvent_mc_at(p, &f, &pt, rc.lambda, c.n, c.seed ^ TAG_RES ^ ((j as u64) << 20), opts.vertical)?;
        let z = (mc.mean - q).abs() / mc.std_error.max(f64::MIN_POSITIVE);
        agree &= (mc.mean - q).abs() <= 3.0 * mc.std_error + bound;
        csv.row(&[F(t), F(q), F(bound), F(mc.mean), F(mc.std_error), F(z)]);
        probes.push(json!({"t": t, "quadrature": q, "monte_carlo": ci_json(&mc)}));
    }
    // Holder regularity of U_lambda f inside the slab
    let hw = 0.25 * (f2.extent()[0] - 1) as f64 * f2.spacing();
    let region = Region {
        x_lo: vec![-hw.min(2.0); p.d()],
        x_hi: vec![hw.min(2.0); p.d()],
        t_lo: 0.25 * rc.height,
        t_hi: 0.75 * rc.height,
    };
    let hf = holder_constant_estimate(&ul.field, &region, 1.0, 1.0)?;
    let mut out = Outcome::default();
    out.file(format!("{}.csv", prefix(c)), csv.bytes());
    out.json(
        format!("{}.json", prefix(c)),
        &json!({
            "lambda": rc.lambda, "beta": rc.beta, "vertical": rc.vertical,
            "identity_residual": id.residual, "identity_tolerance": id.tolerance,
            "quadrature_error_bound": bound, "probes": probes,
            "holder": {"gamma_hat": hf.gamma_hat, "c_hat": hf.c_hat, "residual": hf.residual},
        }),
    );
    out.check(
        "resolvent identity",
        Status::from_bool(id.residual <= id.tolerance && agree),
        format!("residual {:.3e} (tolerance {:.3e}); Monte Carlo within 3 SE at every probe: {agree}", id.residual, id.tolerance),
    );
    out.check(
        "Holder continuity of resolvents",
        Status::from_bool(hf.gamma_hat > 0.0 && hf.c_hat.is_finite()),
        format!("gamma_hat {:.4}, c_hat {:.4}", hf.gamma_hat, hf.c_hat),
    );
    Ok(out)
}

/// The square-function family at a given lattice, with the matching options.
pub fn lp_setup(c: &ExperimentConfig, refine: bool) -> CliResult<(Vec<Datum>, LpOptions)> {
    let n = c.grid.extent[0];
    let hw = 0.5 * (n - 1) as f64 * c.grid.spacing;
    let (n, hw, count) = if refine {
        // halve the spacing, widen the window by a quarter, double the height nodes
        let cells = ((n - 1) as f64 * 2.5).round() as usize;
        (cells + 1, 1.25 * hw, 2 * c.t_grid.count)
    } else {
        (n, hw, c.t_grid.count)
    };
    let mut opts = LpOptions {
        t_grid: TGrid::new(c.t_grid.min, c.t_grid.max, count)?,
        p_list: c.lp.p.clone(),
        ..Default::default()
    };
    if let Some(t) = c.tol {
        opts.extend = ExtendOptions::with_tol(t);
    }
    Ok((lp_family(c.d, n, hw)?, opts))
}

fn majorant_family(c: &ExperimentConfig, refine: bool) -> CliResult<(Vec<(f64, GridFunction)>, LpOptions)> {
    let (fam, opts) = lp_setup(c, refine)?;
    let lattice = &fam[0].grid;
    let data = [0.5, 1.0, 2.0]
        .iter()
        .map(|&w| -> CliResult<(f64, GridFunction)> {
            let g = GridFunction::from_fn(lattice.origin().to_vec(), lattice.spacing(), lattice.extent().to_vec(), |x| {
                (-x.iter().map(|v| v * v).sum::<f64>() / (w * w)).exp() + c.lp.meyer_floor
            })?;
            Ok((w, g))
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok((data, opts))
}

fn ratio_rows(csv: &mut Csv, lattice: &str, t: &RatioTable) {
    for r in &t.rows {
        csv.row(&[S(lattice.into()), S(r.datum.clone()), F(r.p), F(r.f_norm), F(r.truncated), F(r.full), F(r.vertical)]);
    }
}

fn lp(c: &ExperimentConfig) -> CliResult<Outcome> {
    let p = c.params();
    let (fam, opts) = lp_setup(c, false)?;
    let base = gf_ratio_experiment(&fam, p, &c.lp.p, &opts)?;
    let (fam_r, opts_r) = lp_setup(c, true)?;
    let fine = gf_ratio_experiment(&fam_r, p, &c.lp.p, &opts_r)?;
    let mut out = Outcome::default();

    let mut csv = Csv::new(&["lattice", "datum", "p", "f_norm", "truncated_ratio", "full_ratio", "vertical_ratio"]);
    ratio_rows(&mut csv, "base", &base);
    ratio_rows(&mut csv, "refined", &fine);
    out.file(format!("{}-ratios.csv", prefix(c)), csv.bytes());

    let mut finite = true;
    let mut worst = 0.0_f64;
    for ((q, a), (_, b)) in base.max_truncated.iter().zip(&fine.max_truncated) {
        finite &= a.is_finite() && *a > 0.0;
        worst = worst.max((b / a - 1.0).abs());
        let _ = q;
    }
    let full_max: Vec<(f64, f64)> = c
        .lp
        .p
        .iter()
        .map(|&q| (q, base.rows.iter().filter(|r| r.p == q).map(|r| r.full).fold(0.0, f64::max)))
        .collect();

    // square functions of the bump, for export
    let bump = fam.iter().find(|d| d.name == "bump").expect("family has a bump");
    let set = g_functions(&bump.grid, p, &opts)?;
    let mut idx = vec![0usize; c.d];
    let mut header: Vec<String> = (0..c.d).map(|a| format!("i_{a}")).collect();
    for k in [&set.vertical, &set.horizontal_full, &set.horizontal_truncated, &set.general] {
        header.push(k.kind.label().to_string());
    }
    let hdr: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut g = Csv::new(&hdr);
    for k in 0..set.vertical.values.len() {
        set.vertical.values.multi_index(k, &mut idx);
        let mut cells: Vec<Cell> = idx.iter().map(|i| U(*i)).collect();
        for r in [&set.vertical, &set.horizontal_full, &set.horizontal_truncated, &set.general] {
            cells.push(F(r.values.values()[k]));
        }
        g.row(&cells);
    }
    out.file(format!("{}-gfunctions.csv", prefix(c)), g.bytes());

    let dom = fam
        .iter()
        .map(|d| maximal_domination(&d.grid, p, &opts).map(|m| m.c_hat))
        .collect::<Result<Vec<f64>, _>>()?;
    let dom_c = dom.iter().copied().fold(0.0, f64::max);

    let mut meyer = json!(null);
    if c.d == 1 {
        let run = |refine: bool| -> CliResult<Vec<(f64, f64, f64)>> {
            let (data, o) = majorant_family(c, refine)?;
            data.iter()
                .map(|(w, g)| {
                    let m = meyer_majorant_check(g, p, c.lp.meyer_p, &o)?;
                    Ok((*w, m.lhs, m.rhs))
                })
                .collect()
        };
        let a = run(false)?;
        let b = run(true)?;
        let chat = |v: &[(f64, f64, f64)]| v.iter().map(|(_, l, r)| l / r).fold(f64::INFINITY, f64::min);
        let (ca, cb) = (chat(&a), chat(&b));
        let mut m = Csv::new(&["lattice", "width", "lhs", "rhs", "ratio"]);
        for (name, rows) in [("base", &a), ("refined", &b)] {
            for (w, l, r) in rows.iter() {
                m.row(&[S(name.into()), F(*w), F(*l), F(*r), F(l / r)]);
            }
        }
        out.file(format!("{}-majorant.csv", prefix(c)), m.bytes());
        let change = (cb / ca - 1.0).abs();
        out.check(
            "majorant inequality",
            Status::from_bool(ca > 0.0 && ca.is_finite() && change <= 0.15),
            format!("c_hat {ca:.4} at p = {}; refinement change {:.2}%", c.lp.meyer_p, 100.0 * change),
        );
        meyer = json!({"p": c.lp.meyer_p, "c_hat": ca, "c_hat_refined": cb, "refinement_change": change});
    }
    out.json(
        format!("{}.json", prefix(c)),
        &json!({
            "max_truncated": base.max_truncated,
            "max_truncated_refined": fine.max_truncated,
            "refinement_change": worst,
            "max_full": full_max,
            "maximal_domination_c_hat": dom_c,
            "majorant": meyer,
            "bump": {
                "small_t_bound": set.horizontal_truncated.small_t_bound,
                "tail_estimate": set.horizontal_truncated.tail_estimate,
                "window_estimate": set.horizontal_truncated.window_estimate,
            },
        }),
    );
    let maxes: Vec<String> = base.max_truncated.iter().map(|(q, v)| format!("{q}: {v:.4}")).collect();
    out.check(
        "horizontal square function bound",
        Status::from_bool(finite && worst < 0.1),
        format!("max truncated ratio per p [{}]; refinement change {:.2}%", maxes.join(", "), 100.0 * worst),
    );
    out.check(
        "full horizontal square function",
        Status::Recorded,
        format!("max full ratios {:?}, no bound claimed for p < 2", full_max.iter().map(|(q, v)| format!("{q}: {v:.4}")).collect::<Vec<_>>()),
    );
    out.check(
        "maximal function domination",
        Status::from_bool(dom_c > 0.0 && dom_c.is_finite()),
        format!("single c_hat {dom_c:.4} across the family"),
    );
    Ok(out)
}
