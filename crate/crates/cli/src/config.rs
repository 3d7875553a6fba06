//! Experiment configuration: a flat TOML document with one optional section per
//! experiment, validated before anything is computed.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use stablelab_core::simulator::AnisotropicBox;
use stablelab_core::{SpaceTimePoint, StableParams};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    KernelCheck,
    Simulate,
    ExitTime,
    Hitting,
    Phi,
    Harnack,
    Holder,
    Resolvent,
    Lp,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Self::KernelCheck,
        Self::Simulate,
        Self::ExitTime,
        Self::Hitting,
        Self::Phi,
        Self::Harnack,
        Self::Holder,
        Self::Resolvent,
        Self::Lp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::KernelCheck => "kernel-check",
            Self::Simulate => "simulate",
            Self::ExitTime => "exit-time",
            Self::Hitting => "hitting",
            Self::Phi => "phi",
            Self::Harnack => "harnack",
            Self::Holder => "holder",
            Self::Resolvent => "resolvent",
            Self::Lp => "lp",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub spacing: f64,
    /// Points per axis; a single entry applies to every axis.
    pub extent: Vec<usize>,
    /// Lower corner per axis; empty centres the lattice on the origin.
    pub origin: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            spacing: 0.125,
            extent: vec![257],
            origin: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TGridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub geometric: bool,
}

impl Default for TGridSpec {
    fn default() -> Self {
        Self {
            min: 1e-3,
            max: 10.0,
            count: 60,
            geometric: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelCheck {
    pub s: Vec<f64>,
    pub r: Vec<f64>,
}

impl Default for KernelCheck {
    fn default() -> Self {
        Self {
            s: vec![0.1, 0.3, 1.0, 3.0, 10.0],
            r: vec![0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Simulate {
    /// Starting height of the boundary-hitting paths.
    pub start_t: f64,
    /// Times at which the empirical law of the hitting time is compared with its oracle.
    pub probes: Vec<f64>,
    /// Jump census radii.
    pub radii: Vec<f64>,
    pub census_time: f64,
    /// Height of the census paths, high enough that the boundary is not reached.
    pub census_start_t: f64,
}

impl Default for Simulate {
    fn default() -> Self {
        Self {
            start_t: 1.0,
            probes: vec![0.25, 1.0, 4.0],
            radii: vec![1.0, 2.0, 4.0],
            census_time: 1.0,
            census_start_t: 100.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExitTime {
    pub r: Vec<f64>,
    /// Step as a multiple of `r^2`.
    pub dt_factor: f64,
    /// Also run the vertical-only control at each scale.
    pub control: bool,
}

impl Default for ExitTime {
    fn default() -> Self {
        Self {
            r: vec![0.5, 1.0, 2.0, 4.0],
            dt_factor: 1.0 / 400.0,
            control: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Hitting {
    pub center_t: f64,
    /// Target sizes as `[horizontal, vertical]` fractions of `D_1`.
    pub sizes: Vec<[f64; 2]>,
}

impl Default for Hitting {
    fn default() -> Self {
        Self {
            center_t: 4.0,
            sizes: vec![[0.5, 0.5], [0.25, 0.25], [0.1, 0.5], [0.5, 0.1]],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Phi {
    pub center_t: f64,
    pub eps: Vec<f64>,
}

impl Default for Phi {
    fn default() -> Self {
        Self {
            center_t: 4.0,
            eps: vec![0.3, 0.5, 0.8],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Harnack {
    pub center_t: f64,
    /// Scale of the evaluation box.
    pub r: f64,
    pub data: usize,
    /// Extra data drawn to test stability of the maximum.
    pub fresh: usize,
    pub points: usize,
    pub heights: usize,
}

impl Default for Harnack {
    fn default() -> Self {
        Self {
            center_t: 1.0,
            r: 1.0 / 16.0,
            data: 50,
            fresh: 50,
            points: 9,
            heights: 5,
        }
    }
}

impl Harnack {
    pub fn eval_box(&self, d: usize) -> CliResult<AnisotropicBox> {
        let c = SpaceTimePoint {
            x: vec![0.0; d],
            t: self.center_t,
        };
        AnisotropicBox::plain(c, self.r).map_err(CliError::from)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Holder {
    pub center_t: f64,
    pub theta: Vec<f64>,
    pub levels: usize,
    pub side_points: usize,
    pub data: usize,
}

impl Default for Holder {
    fn default() -> Self {
        Self {
            center_t: 4.0,
            theta: vec![0.25, 1.0 / 3.0],
            levels: 4,
            side_points: 7,
            data: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Resolvent {
    pub lambda: f64,
    pub beta: f64,
    /// Heights of the Monte Carlo probes, at the horizontal origin.
    pub probes: Vec<f64>,
    /// `free` or `killed`.
    pub vertical: String,
    /// The datum lives on `rows` equally spaced heights in `[0, height]`.
    pub height: f64,
    pub rows: usize,
}

impl Default for Resolvent {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            beta: 2.0,
            probes: vec![2.0, 3.0, 5.0],
            vertical: "free".into(),
            height: 12.0,
            rows: 121,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Lp {
    pub p: Vec<f64>,
    pub meyer_p: f64,
    /// Positive floor added to the majorant data.
    pub meyer_floor: f64,
}

impl Default for Lp {
    fn default() -> Self {
        Self {
            p: vec![1.25, 1.5, 1.75],
            meyer_p: 1.5,
            meyer_floor: 0.1,
        }
    }
}

/// The document as written; every field optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: Option<Experiment>,
    d: Option<usize>,
    alpha: Option<f64>,
    seed: Option<u64>,
    n: Option<usize>,
    dt: Option<f64>,
    tol: Option<f64>,
    workers: Option<usize>,
    out_dir: Option<PathBuf>,
    grid: Option<GridSpec>,
    t_grid: Option<TGridSpec>,
    #[serde(rename = "kernel-check")]
    kernel_check: Option<KernelCheck>,
    simulate: Option<Simulate>,
    #[serde(rename = "exit-time")]
    exit_time: Option<ExitTime>,
    hitting: Option<Hitting>,
    phi: Option<Phi>,
    harnack: Option<Harnack>,
    holder: Option<Holder>,
    resolvent: Option<Resolvent>,
    lp: Option<Lp>,
}

/// A validated configuration with every default filled in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub d: usize,
    pub alpha: f64,
    pub seed: u64,
    /// Monte Carlo path count.
    pub n: usize,
    /// Time step; `None` picks the experiment's scale-aware default.
    pub dt: Option<f64>,
    /// Numerical tolerance override; `None` keeps each routine's default.
    pub tol: Option<f64>,
    pub workers: usize,
    pub out_dir: PathBuf,
    pub grid: GridSpec,
    pub t_grid: TGridSpec,
    pub kernel_check: KernelCheck,
    pub simulate: Simulate,
    pub exit_time: ExitTime,
    pub hitting: Hitting,
    pub phi: Phi,
    pub harnack: Harnack,
    pub holder: Holder,
    pub resolvent: Resolvent,
    pub lp: Lp,
}

pub const DEFAULT_SEED: u64 = 20240607;
pub const DEFAULT_N: usize = 10_000;
pub const DEFAULT_OUT: &str = "stablelab-out";

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        Self {
            experiment,
            d: 1,
            alpha: 1.0,
            seed: DEFAULT_SEED,
            n: DEFAULT_N,
            dt: None,
            tol: None,
            workers: 0,
            out_dir: PathBuf::from(DEFAULT_OUT),
            grid: GridSpec::default(),
            t_grid: TGridSpec::default(),
            kernel_check: KernelCheck::default(),
            simulate: Simulate::default(),
            exit_time: ExitTime::default(),
            hitting: Hitting::default(),
            phi: Phi::default(),
            harnack: Harnack::default(),
            holder: Holder::default(),
            resolvent: Resolvent::default(),
            lp: Lp::default(),
        }
    }

    pub fn params(&self) -> StableParams {
        StableParams::new(self.d, self.alpha).expect("validated")
    }

    /// Extent per axis after broadcasting.
    pub fn extent(&self) -> Vec<usize> {
        if self.grid.extent.len() == 1 {
            vec![self.grid.extent[0]; self.d]
        } else {
            self.grid.extent.clone()
        }
    }

    pub fn origin(&self) -> Vec<f64> {
        if self.grid.origin.is_empty() {
            self.extent()
                .iter()
                .map(|&n| -0.5 * (n as f64 - 1.0) * self.grid.spacing)
                .collect()
        } else if self.grid.origin.len() == 1 {
            vec![self.grid.origin[0]; self.d]
        } else {
            self.grid.origin.clone()
        }
    }

    /// The configuration as a TOML document that validates back to `self`.
    pub fn to_toml(&self) -> String {
        toml::to_string(&Echo::from(self)).expect("config serialises")
    }
}

/// Serialised form matching the input layout.
#[derive(Serialize)]
struct Echo<'a> {
    experiment: Experiment,
    d: usize,
    alpha: f64,
    seed: u64,
    n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tol: Option<f64>,
    workers: usize,
    out_dir: &'a PathBuf,
    grid: &'a GridSpec,
    t_grid: &'a TGridSpec,
    #[serde(rename = "kernel-check")]
    kernel_check: &'a KernelCheck,
    simulate: &'a Simulate,
    #[serde(rename = "exit-time")]
    exit_time: &'a ExitTime,
    hitting: &'a Hitting,
    phi: &'a Phi,
    harnack: &'a Harnack,
    holder: &'a Holder,
    resolvent: &'a Resolvent,
    lp: &'a Lp,
}

impl<'a> From<&'a ExperimentConfig> for Echo<'a> {
    fn from(c: &'a ExperimentConfig) -> Self {
        Self {
            experiment: c.experiment,
            d: c.d,
            alpha: c.alpha,
            seed: c.seed,
            n: c.n,
            dt: c.dt,
            tol: c.tol,
            workers: c.workers,
            out_dir: &c.out_dir,
            grid: &c.grid,
            t_grid: &c.t_grid,
            kernel_check: &c.kernel_check,
            simulate: &c.simulate,
            exit_time: &c.exit_time,
            hitting: &c.hitting,
            phi: &c.phi,
            harnack: &c.harnack,
            holder: &c.holder,
            resolvent: &c.resolvent,
            lp: &c.lp,
        }
    }
}

/// Values given on the command line or in the environment; they beat the document.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub experiment: Option<Experiment>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    pub tol: Option<f64>,
}

/// Line of `key` inside `[section]` (or the top level), for error messages.
fn locate(raw: &str, section: Option<&str>, key: &str) -> String {
    let mut current: Option<String> = None;
    for (i, line) in raw.lines().enumerate() {
        let l = line.trim();
        if l.starts_with('[') {
            current = Some(l.trim_matches(|c| c == '[' || c == ']').trim().to_string());
            continue;
        }
        let name = l.split('=').next().unwrap_or("").trim().trim_matches('"');
        if name == key && current.as_deref() == section {
            return format!("line {}: ", i + 1);
        }
    }
    match section {
        Some(s) => format!("[{s}] {key}: "),
        None => format!("{key}: "),
    }
}

struct Checker<'a> {
    raw: &'a str,
    errors: Vec<String>,
}

impl Checker<'_> {
    fn fail(&mut self, section: Option<&str>, key: &str, msg: impl AsRef<str>) {
        let at = locate(self.raw, section, key);
        self.errors.push(format!("{at}{key} {}", msg.as_ref()));
    }

    fn positive(&mut self, section: Option<&str>, key: &str, v: f64) {
        if !(v > 0.0 && v.is_finite()) {
            self.fail(section, key, format!("= {v} must be positive and finite"));
        }
    }

    fn positive_list(&mut self, section: Option<&str>, key: &str, v: &[f64]) {
        if v.is_empty() {
            self.fail(section, key, "must not be empty");
        }
        for x in v {
            self.positive(section, key, *x);
        }
    }
}

/// Parse and validate a configuration document. Command-line overrides are applied
/// before validation so that their values are checked too.
pub fn validate_config(raw: &str) -> CliResult<ExperimentConfig> {
    validate_with(raw, &Overrides::default())
}

pub fn validate_with(raw: &str, over: &Overrides) -> CliResult<ExperimentConfig> {
    let doc: RawConfig = toml::from_str(raw).map_err(|e| CliError::Validation(e.to_string().trim_end().to_string()))?;
    let experiment = match (over.experiment, doc.experiment) {
        (Some(a), Some(b)) if a != b => {
            return Err(CliError::Validation(format!(
                "{}experiment = \"{}\" conflicts with the `{}` subcommand",
                locate(raw, None, "experiment"),
                b.name(),
                a.name()
            )))
        }
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => {
            return Err(CliError::Validation(
                "no experiment selected: give a subcommand or `experiment = ...`".into(),
            ))
        }
    };
    let base = ExperimentConfig::defaults(experiment);
    let cfg = ExperimentConfig {
        experiment,
        d: doc.d.unwrap_or(base.d),
        alpha: doc.alpha.unwrap_or(base.alpha),
        seed: over.seed.or(doc.seed).unwrap_or(base.seed),
        n: doc.n.unwrap_or(base.n),
        dt: doc.dt,
        tol: over.tol.or(doc.tol),
        workers: over.workers.or(doc.workers).unwrap_or(base.workers),
        out_dir: over.out_dir.clone().or(doc.out_dir).unwrap_or(base.out_dir),
        grid: doc.grid.unwrap_or_default(),
        t_grid: doc.t_grid.unwrap_or_default(),
        kernel_check: doc.kernel_check.unwrap_or_default(),
        simulate: doc.simulate.unwrap_or_default(),
        exit_time: doc.exit_time.unwrap_or_default(),
        hitting: doc.hitting.unwrap_or_default(),
        phi: doc.phi.unwrap_or_default(),
        harnack: doc.harnack.unwrap_or_default(),
        holder: doc.holder.unwrap_or_default(),
        resolvent: doc.resolvent.unwrap_or_default(),
        lp: doc.lp.unwrap_or_default(),
    };
    check(raw, &cfg)?;
    Ok(cfg)
}

fn check(raw: &str, c: &ExperimentConfig) -> CliResult<()> {
    let mut k = Checker { raw, errors: Vec::new() };
    if !(c.alpha > 0.0 && c.alpha < 2.0) {
        k.fail(None, "alpha", format!("= {} must lie in the open interval (0, 2)", c.alpha));
    }
    if !(1..=3).contains(&c.d) {
        k.fail(None, "d", format!("= {} must be 1, 2 or 3", c.d));
    }
    if c.n == 0 {
        k.fail(None, "n", "must be at least 1");
    }
    if let Some(dt) = c.dt {
        k.positive(None, "dt", dt);
    }
    if let Some(tol) = c.tol {
        k.positive(None, "tol", tol);
    }
    let g = Some("grid");
    k.positive(g, "spacing", c.grid.spacing);
    if !(c.grid.extent.len() == 1 || c.grid.extent.len() == c.d) || c.grid.extent.iter().any(|&n| n < 2) {
        k.fail(g, "extent", format!("needs 1 or d = {} entries, each at least 2", c.d));
    }
    if !(c.grid.origin.len() <= 1 || c.grid.origin.len() == c.d) {
        k.fail(g, "origin", format!("needs 0, 1 or d = {} entries", c.d));
    }
    let tg = Some("t_grid");
    k.positive(tg, "min", c.t_grid.min);
    if !(c.t_grid.max > c.t_grid.min) {
        k.fail(tg, "max", format!("= {} must exceed min = {}", c.t_grid.max, c.t_grid.min));
    }
    if c.t_grid.count < 2 {
        k.fail(tg, "count", "must be at least 2");
    }
    if !c.t_grid.geometric {
        k.fail(tg, "geometric", "= false is not supported: the height quadrature is geometric");
    }
    if !k.errors.is_empty() {
        return Err(CliError::Validation(k.errors.join("; ")));
    }
    // experiment-specific domains and geometry, before any compute
    match c.experiment {
        Experiment::KernelCheck => {
            let s = Some("kernel-check");
            k.positive_list(s, "s", &c.kernel_check.s);
            if c.kernel_check.r.is_empty() || c.kernel_check.r.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
                k.fail(s, "r", "must be a nonempty list of nonnegative radii");
            }
        }
        Experiment::Simulate => {
            let s = Some("simulate");
            k.positive(s, "start_t", c.simulate.start_t);
            k.positive_list(s, "probes", &c.simulate.probes);
            k.positive_list(s, "radii", &c.simulate.radii);
            k.positive(s, "census_time", c.simulate.census_time);
            k.positive(s, "census_start_t", c.simulate.census_start_t);
        }
        Experiment::ExitTime => {
            let s = Some("exit-time");
            k.positive_list(s, "r", &c.exit_time.r);
            if c.exit_time.r.len() < 2 {
                k.fail(s, "r", "needs at least two scales for the fit");
            }
            k.positive(s, "dt_factor", c.exit_time.dt_factor);
        }
        Experiment::Hitting => {
            let s = Some("hitting");
            if c.hitting.sizes.is_empty() {
                k.fail(s, "sizes", "must not be empty");
            }
            for [a, b] in &c.hitting.sizes {
                if !(*a > 0.0 && *a <= 1.0 && *b > 0.0 && *b <= 1.0) {
                    k.fail(s, "sizes", format!("entry [{a}, {b}] must have fractions in (0, 1]"));
                }
            }
            let d6 = AnisotropicBox::plain(SpaceTimePoint { x: vec![0.0; c.d], t: c.hitting.center_t }, 6.0)?;
            if !d6.in_half_space() {
                k.fail(s, "center_t", format!("= {}: D_6 box leaves the half-space (need center_t >= 3)", c.hitting.center_t));
            }
        }
        Experiment::Phi => {
            let s = Some("phi");
            if c.phi.eps.is_empty() || c.phi.eps.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
                k.fail(s, "eps", "must be a nonempty list of fractions in (0, 1)");
            }
            let d6 = AnisotropicBox::plain(SpaceTimePoint { x: vec![0.0; c.d], t: c.phi.center_t }, 6.0)?;
            if !d6.in_half_space() {
                k.fail(s, "center_t", format!("= {}: D_6 box leaves the half-space (need center_t >= 3)", c.phi.center_t));
            }
        }
        Experiment::Harnack => {
            let s = Some("harnack");
            k.positive(s, "r", c.harnack.r);
            k.positive(s, "center_t", c.harnack.center_t);
            if c.harnack.data == 0 {
                k.fail(s, "data", "must be at least 1");
            }
            if c.harnack.points == 0 || c.harnack.heights == 0 {
                k.fail(s, "points", "and heights must be at least 1");
            }
            if k.errors.is_empty() {
                let big = c.harnack.eval_box(c.d)?.scaled(32.0)?;
                if !big.in_half_space() {
                    k.fail(
                        s,
                        "center_t",
                        format!(
                            "= {} with r = {}: D~_32 box leaves the half-space (need center_t >= 16 r)",
                            c.harnack.center_t, c.harnack.r
                        ),
                    );
                }
            }
        }
        Experiment::Holder => {
            let s = Some("holder");
            if c.holder.theta.is_empty() || c.holder.theta.iter().any(|t| !(*t > 0.0 && *t <= 1.0 / 3.0)) {
                k.fail(s, "theta", "must be a nonempty list in (0, 1/3]");
            }
            if c.holder.levels < 2 {
                k.fail(s, "levels", "must be at least 2");
            }
            if c.holder.side_points < 2 {
                k.fail(s, "side_points", "must be at least 2");
            }
            if c.holder.data == 0 {
                k.fail(s, "data", "must be at least 1");
            }
            let d4 = AnisotropicBox::plain(SpaceTimePoint { x: vec![0.0; c.d], t: c.holder.center_t }, 4.0)?;
            if !d4.in_half_space() {
                k.fail(s, "center_t", format!("= {}: D_4 box leaves the half-space (need center_t >= 2)", c.holder.center_t));
            }
        }
        Experiment::Resolvent => {
            let s = Some("resolvent");
            if !(c.resolvent.lambda > 0.0) {
                k.fail(s, "lambda", format!("= {} must be positive", c.resolvent.lambda));
            }
            if !(c.resolvent.beta > c.resolvent.lambda) {
                k.fail(s, "beta", format!("= {} must exceed lambda", c.resolvent.beta));
            }
            k.positive_list(s, "probes", &c.resolvent.probes);
            k.positive(s, "height", c.resolvent.height);
            if c.resolvent.rows < 3 {
                k.fail(s, "rows", "must be at least 3");
            }
            if c.resolvent.probes.iter().any(|t| *t >= c.resolvent.height) {
                k.fail(s, "probes", "must lie below height");
            }
            if !matches!(c.resolvent.vertical.as_str(), "free" | "killed") {
                k.fail(s, "vertical", format!("= \"{}\" must be \"free\" or \"killed\"", c.resolvent.vertical));
            }
        }
        Experiment::Lp => {
            let s = Some("lp");
            if c.lp.p.is_empty() || c.lp.p.iter().any(|q| !(*q >= 1.0)) {
                k.fail(s, "p", "must be a nonempty list of exponents >= 1");
            }
            if !(c.lp.meyer_p > 1.0 && c.lp.meyer_p < 2.0) {
                k.fail(s, "meyer_p", format!("= {} must lie in (1, 2)", c.lp.meyer_p));
            }
            k.positive(s, "meyer_floor", c.lp.meyer_floor);
            if c.d > 2 {
                k.fail(None, "d", "square functions need d <= 2");
            }
            if c.grid.extent.iter().any(|n| *n != c.grid.extent[0]) || !c.grid.origin.is_empty() {
                k.fail(g, "extent", "the square-function family needs a cubic lattice centred on the origin");
            }
        }
    }
    if k.errors.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(k.errors.join("; ")))
    }
}

/// Documented defaults, shown by `--help`.
pub fn defaults_doc() -> String {
    let mut s = String::from("Configuration keys and their defaults (TOML; every key optional):\n\n");
    s.push_str(&ExperimentConfig::defaults(Experiment::KernelCheck).to_toml().replace("experiment = \"kernel-check\"\n", ""));
    s.push_str(
        "\nUnset `dt` uses each experiment's scale-aware step; unset `tol` keeps each routine's own tolerance.\n\
         Precedence: command-line flag, then STABLELAB_* environment variable, then the config file, then the default.\n",
    );
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document_gives_defaults() {
        let c = validate_config("experiment = \"exit-time\"\n").unwrap();
        assert_eq!(c, ExperimentConfig::defaults(Experiment::ExitTime));
    }

    #[test]
    fn alpha_outside_domain_is_named() {
        let e = validate_config("experiment = \"lp\"\nalpha = 2.5\n").unwrap_err();
        let m = e.to_string();
        assert!(m.contains("(0, 2)") && m.contains("line 2"), "{m}");
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn harnack_box_must_fit() {
        let doc = "experiment = \"harnack\"\n[harnack]\ncenter_t = 0.1\nr = 1.0\n";
        let m = validate_config(doc).unwrap_err().to_string();
        assert!(m.contains("D~_32 box leaves the half-space") && m.contains("line 3"), "{m}");
    }

    #[test]
    fn unknown_keys_are_rejected_with_position() {
        let m = validate_config("experiment = \"lp\"\nalpah = 1.0\n").unwrap_err().to_string();
        assert!(m.contains("alpah") && m.contains("line 2"), "{m}");
    }

    #[test]
    fn echo_round_trips() {
        for e in Experiment::ALL {
            let mut c = ExperimentConfig::defaults(e);
            c.dt = Some(0.01);
            c.tol = Some(1e-7);
            c.seed = 7;
            let back = validate_config(&c.to_toml()).unwrap();
            assert_eq!(back, c);
        }
    }

    #[test]
    fn overrides_beat_the_document() {
        let over = Overrides {
            seed: Some(9),
            experiment: Some(Experiment::Lp),
            ..Default::default()
        };
        let c = validate_with("seed = 3\n", &over).unwrap();
        assert_eq!(c.seed, 9);
        assert!(validate_with("experiment = \"phi\"\n", &over).is_err());
    }
}
