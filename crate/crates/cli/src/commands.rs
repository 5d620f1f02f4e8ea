use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use evtdyn::dynsys::{SystemKind, SystemSpec, Trajectory};
use evtdyn::evt::{
    fit_gev_lmoments, fit_gev_mle, fit_gpd_lmoments, fit_gpd_mle, fit_gpd_moments, FitMethod,
    FitResult,
};
use evtdyn::extraction::{
    block_maxima, ei_blocks, ei_ferro_segers, ei_runs, ei_sueveges, exceedances,
    exceedances_at_quantile, quantile_threshold, runs_decluster, EiEstimate,
};
use evtdyn::geometry::{information_dimension, lyapunov_spectrum, DimensionConfig, Route};
use evtdyn::indicators::{
    noise_scaling_study, pooled_dimension, recurrence_scan, recurrence_scan_2d, stability_map,
    tipping_scan, NoiseKind, NoiseStudyConfig, RecurrenceConfig, RecurrenceRow, StabilityConfig,
    StabilityMethod, TippingConfig,
};
use evtdyn::observables::ObsClass;
use serde_json::{json, Value};

use crate::failure::{Failure, Outcome};
use crate::io::{
    envelope, num, open_out, opt, read_table, write_csv, write_json, Provenance, Table,
};
use crate::opts::{join, scalar_series, ObsOpts, SourceOpts, SystemOpts};
use crate::parse;

#[derive(Debug, Parser)]
#[command(
    name = "evtdyn",
    version,
    about = "Extreme value analysis of dynamical systems and time series"
)]
pub struct Cli {
    /// File of `key = value` defaults; command-line flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: EVTDYN_THREADS or all cores)
    #[arg(long, global = true, value_parser = parse::count)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write an orbit as CSV
    Simulate(Simulate),
    /// Fit a GEV law to bin maxima of an observable
    BmFit(BmFit),
    /// Fit a GPD law to threshold excesses of an observable
    PotFit(PotFit),
    /// Estimate the extremal index
    Ei(Ei),
    /// Extremal index and GEV fits over a grid of reference values of a series
    Recurrence(Recurrence),
    /// Information dimension from extreme value fits at random reference points
    Dimension(Dimension),
    /// Lyapunov spectrum and the dimensions derived from it
    Lyapunov(Lyapunov),
    /// Local dimensions of the standard map over a grid of initial conditions
    StabilityMap(StabilityMap),
    /// Extreme value indicators of noise-induced transitions in the toy model
    Tipping(Tipping),
    /// Location parameter of noisy one-dimensional maps against its predicted scaling
    NoiseStudy(NoiseStudy),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GevMethod {
    Mle,
    Lmom,
}

impl GevMethod {
    fn fit_method(self) -> FitMethod {
        match self {
            GevMethod::Mle => FitMethod::Mle,
            GevMethod::Lmom => FitMethod::Lmom,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct TableOut {
    /// Output file (default: standard output)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Also write the JSON summary to this file
    #[arg(long)]
    pub json: Option<PathBuf>,
}

impl TableOut {
    fn emit(&self, prov: &Provenance, table: &Table, summary: Value) -> Outcome<()> {
        let full = envelope(prov, summary);
        match self.format {
            Format::Csv => write_csv(&mut *open_out(self.out.as_deref())?, prov, table)?,
            Format::Json => write_json(&mut *open_out(self.out.as_deref())?, &full)?,
        }
        if let Some(p) = &self.json {
            write_json(&mut *open_out(Some(p))?, &full)?;
        }
        Ok(())
    }
}

pub fn run(cli: Cli) -> Outcome<()> {
    match cli.command {
        Command::Simulate(c) => c.run(),
        Command::BmFit(c) => c.run(),
        Command::PotFit(c) => c.run(),
        Command::Ei(c) => c.run(),
        Command::Recurrence(c) => c.run(),
        Command::Dimension(c) => c.run(),
        Command::Lyapunov(c) => c.run(),
        Command::StabilityMap(c) => c.run(),
        Command::Tipping(c) => c.run(),
        Command::NoiseStudy(c) => c.run(),
    }
}

fn require_seed(seed: Option<u64>, command: &str) -> Outcome<u64> {
    seed.ok_or_else(|| Failure::Config(format!("{command} is stochastic: --seed is required")))
}

fn check_gof(fit: &FitResult, required: bool) -> Outcome<()> {
    if !required {
        return Ok(());
    }
    match &fit.gof {
        Some(g) if g.pass => Ok(()),
        Some(g) => Err(Failure::Gof(format!(
            "KS statistic {:.4} with p-value {:.3e}",
            g.statistic, g.p_value
        ))),
        None => Err(Failure::Gof("no goodness-of-fit test could be run".into())),
    }
}

fn summarize(fit: &FitResult) {
    let gof = fit
        .gof
        .as_ref()
        .map(|g| format!(" ks_p={:.4}", g.p_value))
        .unwrap_or_default();
    eprintln!(
        "{} fit of {} values: xi={:.6} sigma={:.6}{}",
        fit.method,
        fit.n,
        fit.params.xi(),
        fit.params.sigma(),
        gof
    );
}

#[derive(Debug, Args)]
pub struct Simulate {
    #[command(flatten)]
    pub sys: SystemOpts,
    /// Number of recorded states
    #[arg(long, value_parser = parse::count, default_value = "10000")]
    pub n: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Simulate {
    fn run(self) -> Outcome<()> {
        let spec = self.sys.spec()?;
        let mut prov = Provenance::new("simulate");
        self.sys.record(&spec, &mut prov)?;
        prov.add("n", self.n);
        let x0 = self.sys.x0(&spec)?;
        let mut traj = Trajectory::new(
            &spec,
            self.sys.noise()?,
            &x0,
            self.sys.burn_in,
            self.sys.seed()?,
        )?;
        let d = spec.dim();
        let mut table = Table::new(&[]);
        table.header = (1..=d).map(|i| format!("x{i}")).collect();
        if spec.kind.is_flow() {
            table.header.insert(0, "t".into());
        }
        for i in 0..self.n {
            let x = traj.next_state()?;
            let mut row: Vec<String> = x.iter().map(|&v| num(v)).collect();
            if spec.kind.is_flow() {
                row.insert(0, num((i + 1) as f64 * spec.dt));
            }
            table.rows.push(row);
        }
        write_csv(&mut *open_out(self.out.as_deref())?, &prov, &table)
    }
}

#[derive(Debug, Args)]
pub struct BmFit {
    #[command(flatten)]
    pub sys: SystemOpts,
    #[command(flatten)]
    pub obs: ObsOpts,
    #[command(flatten)]
    pub src: SourceOpts,
    /// Bin length
    #[arg(long, value_parser = parse::count, default_value = "1000")]
    pub n: usize,
    /// Smallest and largest maxima discarded at each end
    #[arg(long, value_parser = parse::count, default_value = "1")]
    pub trim: usize,
    #[arg(long, value_enum, default_value = "mle")]
    pub method: GevMethod,
    /// Exit with status 5 when the Kolmogorov–Smirnov test rejects the fit
    #[arg(long)]
    pub require_gof: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl BmFit {
    fn run(self) -> Outcome<()> {
        let mut prov = Provenance::new("bm-fit");
        let series = scalar_series(&self.sys, &self.obs, &self.src, &mut prov)?;
        prov.add("n", self.n);
        prov.add("trim", self.trim);
        let bm = block_maxima(&series, self.n, self.trim)?;
        let fit = match self.method {
            GevMethod::Mle => fit_gev_mle(&bm.maxima)?,
            GevMethod::Lmom => fit_gev_lmoments(&bm.maxima)?,
        };
        let mut result = fit.to_json();
        result["bin_length"] = json!(bm.bin_length);
        result["trimmed"] = json!(bm.trimmed);
        result["warnings"] = json!(fit.warnings);
        write_json(
            &mut *open_out(self.out.as_deref())?,
            &envelope(&prov, result),
        )?;
        summarize(&fit);
        check_gof(&fit, self.require_gof)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GpdMethod {
    Mle,
    Lmom,
    Moments,
}

#[derive(Debug, Args)]
pub struct PotFit {
    #[command(flatten)]
    pub sys: SystemOpts,
    #[command(flatten)]
    pub obs: ObsOpts,
    #[command(flatten)]
    pub src: SourceOpts,
    /// Threshold as an empirical quantile of the series
    #[arg(long, value_parser = parse::real, default_value_t = 0.99)]
    pub p: f64,
    /// Fixed threshold (overrides --p)
    #[arg(long, value_parser = parse::real, allow_hyphen_values = true)]
    pub threshold: Option<f64>,
    #[arg(long, value_enum, default_value = "mle")]
    pub method: GpdMethod,
    /// Highest moment used by the moment fit
    #[arg(long, default_value_t = 2)]
    pub order: u32,
    /// Keep one excess per cluster, clusters ending after this many non-exceedances
    #[arg(long, value_parser = parse::count)]
    pub decluster: Option<usize>,
    #[arg(long)]
    pub require_gof: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl PotFit {
    fn run(self) -> Outcome<()> {
        let mut prov = Provenance::new("pot-fit");
        let series = scalar_series(&self.sys, &self.obs, &self.src, &mut prov)?;
        let mut exc = match self.threshold {
            Some(t) => exceedances(&series, t),
            None => exceedances_at_quantile(&series, self.p)?,
        };
        prov.add("threshold", exc.threshold);
        if let Some(p) = exc.p {
            prov.add("p", p);
        }
        if let Some(q) = self.decluster {
            exc = runs_decluster(&exc, q);
            prov.add("decluster", q);
        }
        let t = exc.threshold;
        let (result, fit) = match self.method {
            GpdMethod::Mle | GpdMethod::Lmom => {
                let fit = if self.method == GpdMethod::Mle {
                    fit_gpd_mle(&exc.values, t)?
                } else {
                    fit_gpd_lmoments(&exc.values, t)?
                };
                let mut r = fit.to_json();
                r["warnings"] = json!(fit.warnings);
                (r, Some(fit))
            }
            GpdMethod::Moments => {
                let g = fit_gpd_moments(&exc.values, self.order, t)?;
                let r = json!({
                    "method": FitMethod::Moments(self.order).to_string(),
                    "xi": g.xi,
                    "sigma": g.sigma,
                    "threshold": g.threshold,
                    "n": exc.len(),
                });
                eprintln!(
                    "moment fit of {} excesses: xi={:.6} sigma={:.6}",
                    exc.len(),
                    g.xi,
                    g.sigma
                );
                (r, None)
            }
        };
        write_json(
            &mut *open_out(self.out.as_deref())?,
            &envelope(&prov, result),
        )?;
        match fit {
            Some(f) => {
                summarize(&f);
                check_gof(&f, self.require_gof)
            }
            None if self.require_gof => Err(Failure::Config(
                "--require-gof is not available for the moment fit".into(),
            )),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Estimator {
    Fs,
    Sueveges,
    Runs,
    Blocks,
}

#[derive(Debug, Args)]
pub struct Ei {
    #[command(flatten)]
    pub sys: SystemOpts,
    #[command(flatten)]
    pub obs: ObsOpts,
    #[command(flatten)]
    pub src: SourceOpts,
    #[arg(long, value_enum, default_value = "fs")]
    pub estimator: Estimator,
    /// Threshold quantile
    #[arg(long, value_parser = parse::real, default_value_t = 0.99)]
    pub p: f64,
    /// Fixed threshold for the runs and blocks estimators (overrides --p)
    #[arg(long, value_parser = parse::real, allow_hyphen_values = true)]
    pub threshold: Option<f64>,
    /// Run length of the runs estimator
    #[arg(long, value_parser = parse::count, default_value = "1")]
    pub run_length: usize,
    /// Block length of the blocks estimator
    #[arg(long, value_parser = parse::count, default_value = "100")]
    pub block: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Ei {
    fn run(self) -> Outcome<()> {
        let mut prov = Provenance::new("ei");
        let series = scalar_series(&self.sys, &self.obs, &self.src, &mut prov)?;
        let fixed = || -> Outcome<f64> {
            Ok(match self.threshold {
                Some(t) => t,
                None => quantile_threshold(&series, self.p)?,
            })
        };
        let est: EiEstimate = match self.estimator {
            Estimator::Fs => ei_ferro_segers(&series, self.p)?,
            Estimator::Sueveges => ei_sueveges(&series, self.p)?,
            Estimator::Runs => ei_runs(&series, fixed()?, self.run_length)?,
            Estimator::Blocks => ei_blocks(&series, fixed()?, self.block)?,
        };
        let result = serde_json::to_value(est).unwrap_or_default();
        write_json(
            &mut *open_out(self.out.as_deref())?,
            &envelope(&prov, result),
        )?;
        eprintln!(
            "theta={:.6} from {} exceedances in {} clusters",
            est.theta, est.n_exceedances, est.n_clusters
        );
        Ok(())
    }
}

#[derive(Debug, Args)]
pub struct Recurrence {
    #[command(flatten)]
    pub sys: SystemOpts,
    /// CSV file holding the series
    #[arg(long, conflicts_with = "system")]
    pub input: Option<PathBuf>,
    /// One or two 1-based columns (of the file, or of the simulated state)
    #[arg(long, value_parser = parse::counts, default_value = "1")]
    pub columns: ::std::vec::Vec<usize>,
    /// Simulated series length
    #[arg(long, value_parser = parse::count, default_value = "1e6")]
    pub s: usize,
    /// Reference values per series
    #[arg(long, value_parser = parse::count, default_value = "20")]
    pub zetas: usize,
    #[arg(long, value_parser = parse::real, default_value_t = 0.99)]
    pub p: f64,
    /// Bin length (default ⌊s/n⌋ − 2 with n = ⌊√s/2⌋ bins)
    #[arg(long, value_parser = parse::count)]
    pub bin: Option<usize>,
    #[arg(long, value_parser = parse::count, default_value = "1")]
    pub trim: usize,
    #[command(flatten)]
    pub output: TableOut,
}

impl Recurrence {
    fn columns(&self, prov: &mut Provenance) -> Outcome<Vec<Vec<f64>>> {
        if !(1..=2).contains(&self.columns.len()) {
            return Err(Failure::Config("--columns takes one or two columns".into()));
        }
        let (width, get): (usize, Box<dyn Fn(usize) -> Vec<f64>>) = match &self.input {
            Some(path) => {
                let t = read_table(path)?;
                prov.add("input", path.display());
                (t.columns, Box::new(move |c| t.column(c)))
            }
            None => {
                let spec = self.sys.spec()?;
                self.sys.record(&spec, prov)?;
                prov.add("s", self.s);
                let x0 = self.sys.x0(&spec)?;
                let orbit = evtdyn::dynsys::iterate(
                    &spec,
                    self.sys.noise()?,
                    &x0,
                    self.s,
                    self.sys.burn_in,
                    self.sys.seed()?,
                )?;
                (spec.dim(), Box::new(move |c| orbit.coordinate(c)))
            }
        };
        if self.columns.iter().any(|&c| c == 0 || c > width) {
            return Err(Failure::Config(format!(
                "--columns must lie in 1..={width}"
            )));
        }
        prov.add(
            "columns",
            self.columns
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(" "),
        );
        Ok(self.columns.iter().map(|&c| get(c - 1)).collect())
    }

    fn run(self) -> Outcome<()> {
        let seed = require_seed(self.sys.seed, "recurrence")?;
        let mut prov = Provenance::new("recurrence");
        let cols = self.columns(&mut prov)?;
        if self.input.is_some() {
            prov.add("seed", seed);
        }
        prov.add("zetas", self.zetas);
        prov.add("p", self.p);
        let cfg = RecurrenceConfig {
            p: self.p,
            bin: self.bin,
            trim: self.trim,
            seed,
        };
        let rows: Vec<RecurrenceRow> = match cols.as_slice() {
            [a] => recurrence_scan(a, self.zetas, &cfg)?,
            [a, b] => recurrence_scan_2d(a, b, self.zetas, &cfg)?
                .into_iter()
                .flatten()
                .collect(),
            _ => unreachable!("column count checked above"),
        };
        let mut header: Vec<&str> = if cols.len() == 1 {
            vec!["zeta"]
        } else {
            vec!["zeta1", "zeta2"]
        };
        header.extend([
            "theta_fs", "theta_sv", "xi", "sigma", "mu", "ks_p", "gof_pass", "flag",
        ]);
        let mut table = Table::new(&header);
        for r in &rows {
            let mut row: Vec<String> = r.zeta.iter().map(|&z| num(z)).collect();
            row.extend([
                opt(r.theta_fs),
                opt(r.theta_sv),
                opt(r.gev.map(|g| g.xi)),
                opt(r.gev.map(|g| g.sigma)),
                opt(r.gev.map(|g| g.mu)),
                opt(r.gof.map(|g| g.p_value)),
                r.gof.map(|g| g.pass.to_string()).unwrap_or_default(),
                r.flag.clone().unwrap_or_default(),
            ]);
            table.rows.push(row);
        }
        let summary = json!({ "rows": rows });
        self.output.emit(&prov, &table, summary)
    }
}

#[derive(Debug, Args)]
pub struct Dimension {
    #[command(flatten)]
    pub sys: SystemOpts,
    /// Number of random reference points drawn from the attractor
    #[arg(long, value_parser = parse::count, default_value = "10")]
    pub zetas: usize,
    /// Comma list of routes: sigma_g1, mu_slope_g1, xi_g2, mu_g2, sigma_g2, xi_g3, sigma_g3 (default: all)
    #[arg(long)]
    pub routes: Option<String>,
    /// Series length per reference point
    #[arg(long, value_parser = parse::count, default_value = "1e6")]
    pub s: usize,
    /// Bin length for the single-fit routes
    #[arg(long, value_parser = parse::count, default_value = "1000")]
    pub block: usize,
    /// Bin lengths for the slope routes
    #[arg(long, value_parser = parse::counts, default_value = "250,500,1000,2000")]
    pub slope_blocks: ::std::vec::Vec<usize>,
    /// Exponent α of g2 and g3
    #[arg(long, value_parser = parse::real, default_value_t = 3.0)]
    pub alpha: f64,
    /// Constant C of g3
    #[arg(long, value_parser = parse::real, default_value_t = 0.0, allow_hyphen_values = true)]
    pub c: f64,
    #[arg(long, value_parser = parse::count, default_value = "1")]
    pub trim: usize,
    #[arg(long, value_enum, default_value = "lmom")]
    pub method: GevMethod,
    #[command(flatten)]
    pub output: TableOut,
}

impl Dimension {
    fn run(self) -> Outcome<()> {
        let seed = require_seed(self.sys.seed, "dimension")?;
        let spec = self.sys.spec()?;
        let mut prov = Provenance::new("dimension");
        self.sys.record(&spec, &mut prov)?;
        let routes: Vec<Route> = match &self.routes {
            Some(list) => list
                .split(',')
                .map(|s| Route::parse(s.trim()))
                .collect::<Result<_, _>>()?,
            None => Route::ALL.to_vec(),
        };
        let cfg = DimensionConfig {
            series_len: self.s,
            block: self.block,
            slope_blocks: self.slope_blocks.clone(),
            burn_in: self.sys.burn_in,
            alpha: self.alpha,
            c: self.c,
            trim: self.trim,
            method: self.method.fit_method(),
        };
        prov.add("zetas", self.zetas);
        prov.add("s", self.s);
        prov.add("block", self.block);
        prov.add("alpha", self.alpha);
        prov.add("c", self.c);
        prov.add("method", cfg.method);
        let x0 = self.sys.x0(&spec)?;
        let rep = information_dimension(
            &spec,
            self.sys.noise()?,
            &x0,
            &routes,
            self.zetas,
            &cfg,
            seed,
        )?;
        let mut table = Table::new(&["route", "formula", "mean", "sd", "failures", "first_error"]);
        for r in &rep.routes {
            table.rows.push(vec![
                r.route.name().into(),
                r.formula.clone(),
                num(r.mean),
                num(r.sd),
                r.failures.to_string(),
                r.first_error.clone().unwrap_or_default(),
            ]);
        }
        eprintln!("d1={:.6} sd={:.6}", rep.d1, rep.d1_sd);
        let summary = serde_json::to_value(&rep).unwrap_or_default();
        self.output.emit(&prov, &table, summary)
    }
}

#[derive(Debug, Args)]
pub struct Lyapunov {
    #[command(flatten)]
    pub sys: SystemOpts,
    /// Iterates (maps) or samples (flows)
    #[arg(long, value_parser = parse::count, default_value = "1e6")]
    pub n: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Lyapunov {
    fn run(self) -> Outcome<()> {
        let spec = self.sys.spec()?;
        let mut prov = Provenance::new("lyapunov");
        self.sys.record(&spec, &mut prov)?;
        prov.add("n", self.n);
        let x0 = self.sys.x0(&spec)?;
        let rep = lyapunov_spectrum(&spec, &x0, self.n, self.sys.burn_in, self.sys.seed()?)?;
        eprintln!("lyapunov {} d_ky={:.6}", join(&rep.lyapunov), rep.d_ky);
        let result = serde_json::to_value(&rep).unwrap_or_default();
        write_json(
            &mut *open_out(self.out.as_deref())?,
            &envelope(&prov, result),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExtremesMethod {
    Pot,
    Bm,
}

#[derive(Debug, Args)]
pub struct StabilityMap {
    /// Kick strength K
    #[arg(long, value_parser = parse::real)]
    pub k: f64,
    /// Initial conditions on an N×N grid of cell centres of the torus
    #[arg(long, value_parser = parse::count, default_value = "10")]
    pub grid: usize,
    /// Orbit length per initial condition
    #[arg(long, value_parser = parse::count, default_value = "1e5")]
    pub s: usize,
    #[arg(long, value_enum, default_value = "pot")]
    pub extremes: ExtremesMethod,
    /// Exceedances per orbit
    #[arg(long, value_parser = parse::count, default_value = "1000")]
    pub exceedances: usize,
    /// Bin length for block maxima
    #[arg(long, value_parser = parse::count, default_value = "100")]
    pub block: usize,
    #[arg(long, value_parser = parse::count, default_value = "1")]
    pub trim: usize,
    #[arg(long, value_enum, default_value = "lmom")]
    pub method: GevMethod,
    #[arg(long, value_parser = parse::real, default_value_t = 3.0)]
    pub alpha: f64,
    #[arg(long, value_parser = parse::real, default_value_t = 1.0, allow_hyphen_values = true)]
    pub c: f64,
    /// Steps of the round-off diagnostics
    #[arg(long, value_parser = parse::count, default_value = "100")]
    pub horizon: usize,
    #[command(flatten)]
    pub output: TableOut,
}

impl StabilityMap {
    fn run(self) -> Outcome<()> {
        if self.grid == 0 {
            return Err(Failure::Config("--grid must be >= 1".into()));
        }
        let cfg = StabilityConfig {
            series_len: self.s,
            method: match self.extremes {
                ExtremesMethod::Pot => StabilityMethod::Pot,
                ExtremesMethod::Bm => StabilityMethod::Bm,
            },
            exceedances: self.exceedances,
            block: self.block,
            trim: self.trim,
            fit: self.method.fit_method(),
            alpha: self.alpha,
            c: self.c,
            horizon: self.horizon,
        };
        let g = self.grid as f64;
        let ics: Vec<[f64; 2]> = (0..self.grid)
            .flat_map(|i| (0..self.grid).map(move |j| [(i as f64 + 0.5) / g, (j as f64 + 0.5) / g]))
            .collect();
        let cells = stability_map(self.k, &ics, &cfg)?;
        let mut prov = Provenance::new("stability-map");
        prov.add("system", SystemKind::StandardMap { k: self.k }.name());
        prov.add("k", self.k);
        prov.add("grid", self.grid);
        prov.add("s", self.s);
        prov.add("extremes", format!("{:?}", self.extremes).to_lowercase());
        prov.add("method", cfg.fit);
        prov.add("alpha", self.alpha);
        prov.add("c", self.c);
        let mut table = Table::new(&[
            "x", "y", "d_g1", "d_g2", "d_g3", "d_mean", "r_t", "delta_t", "flags",
        ]);
        for cell in &cells {
            let d = |class: ObsClass| {
                opt(cell
                    .fits
                    .iter()
                    .find(|f| f.class == class)
                    .and_then(|f| f.d))
            };
            let flags: Vec<String> = cell
                .fits
                .iter()
                .filter_map(|f| {
                    f.flag
                        .as_ref()
                        .map(|m| format!("{:?}: {m}", f.class).to_lowercase())
                })
                .collect();
            table.rows.push(vec![
                num(cell.x0[0]),
                num(cell.x0[1]),
                d(ObsClass::G1),
                d(ObsClass::G2),
                d(ObsClass::G3),
                opt(cell.d_mean),
                opt(cell.r_t),
                opt(cell.delta_t),
                flags.join("; "),
            ]);
        }
        let pooled = |class| pooled_dimension(&cells, class, self.alpha);
        let summary = json!({
            "pooled_dimension": {
                "g1": pooled(ObsClass::G1),
                "g2": pooled(ObsClass::G2),
                "g3": pooled(ObsClass::G3),
            },
            "cells": cells,
        });
        self.output.emit(&prov, &table, summary)
    }
}

#[derive(Debug, Args)]
pub struct Tipping {
    #[arg(long, value_parser = parse::real, default_value_t = 1.0)]
    pub mu: f64,
    #[arg(long, value_parser = parse::real, default_value_t = 0.2475)]
    pub nu: f64,
    /// Noise amplitudes, `start:step:end` or a comma list
    #[arg(long, value_parser = parse::grid)]
    pub u_grid: ::std::vec::Vec<f64>,
    /// Trajectories per noise amplitude (at least 10)
    #[arg(long, value_parser = parse::count, default_value = "10")]
    pub ensemble: usize,
    /// Steps per trajectory
    #[arg(long, value_parser = parse::count, default_value = "1e6")]
    pub steps: usize,
    #[arg(long, value_parser = parse::real, default_value_t = 0.01)]
    pub dt: f64,
    /// Bin length for maxima and minima
    #[arg(long, value_parser = parse::count, default_value = "1000")]
    pub block: usize,
    #[arg(long, value_parser = parse::count, default_value = "1")]
    pub trim: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: TableOut,
}

impl Tipping {
    fn run(self) -> Outcome<()> {
        let seed = require_seed(self.seed, "tipping")?;
        if self.u_grid.is_empty() {
            return Err(Failure::Config("--u-grid is required".into()));
        }
        let grid: Vec<f64> = self.u_grid.clone();
        let cfg = TippingConfig {
            dt: self.dt,
            steps: self.steps,
            block: self.block,
            trim: self.trim,
            seed,
        };
        let rep = tipping_scan(self.mu, self.nu, &grid, self.ensemble, &cfg)?;
        let mut prov = Provenance::new("tipping");
        prov.add("system", "toy");
        prov.add("mu", self.mu);
        prov.add("nu", self.nu);
        prov.add("u", join(&grid));
        prov.add("ensemble", self.ensemble);
        prov.add("steps", self.steps);
        prov.add("dt", self.dt);
        prov.add("block", self.block);
        prov.add("seed", seed);
        let mut table = Table::new(&[
            "u",
            "xi_max",
            "xi_max_sd",
            "xi_max_lo",
            "xi_max_hi",
            "xi_min",
            "xi_min_sd",
            "xi_min_lo",
            "xi_min_hi",
            "variance",
            "skewness",
            "transitions",
            "members_transitioned",
            "failed",
            "u_c",
            "flag",
        ]);
        for r in &rep.rows {
            table.rows.push(vec![
                num(r.u),
                num(r.xi_max),
                num(r.xi_max_sd),
                num(r.ci95_max.0),
                num(r.ci95_max.1),
                num(r.xi_min),
                num(r.xi_min_sd),
                num(r.ci95_min.0),
                num(r.ci95_min.1),
                num(r.variance),
                num(r.skewness),
                r.total_transitions().to_string(),
                r.n_transitions
                    .iter()
                    .filter(|&&n| n > 0)
                    .count()
                    .to_string(),
                r.failed.to_string(),
                opt(rep.u_c),
                r.flag.clone().unwrap_or_default(),
            ]);
        }
        match rep.u_c {
            Some(u) => eprintln!("u_c={u:.6}"),
            None => eprintln!(
                "no critical value: the mean xi of minima does not change sign at the onset"
            ),
        }
        let summary = serde_json::to_value(&rep).unwrap_or_default();
        self.output.emit(&prov, &table, summary)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PerturbationKind {
    Additive,
    Observational,
}

#[derive(Debug, Args)]
pub struct NoiseStudy {
    #[command(flatten)]
    pub sys: SystemOpts,
    /// Reference point ζ
    #[arg(long, value_parser = parse::real)]
    pub zeta: f64,
    /// Noise amplitudes, `start:step:end` or a comma list
    #[arg(long = "eps-grid", value_parser = parse::grid)]
    pub eps_grid: ::std::vec::Vec<f64>,
    #[arg(long, value_enum, default_value = "additive")]
    pub kind: PerturbationKind,
    /// Bin lengths
    #[arg(long, value_parser = parse::counts, default_value = "1000")]
    pub m: ::std::vec::Vec<usize>,
    /// Series length per amplitude
    #[arg(long, value_parser = parse::count, default_value = "1e6")]
    pub s: usize,
    #[arg(long, value_parser = parse::count, default_value = "1")]
    pub trim: usize,
    #[command(flatten)]
    pub output: TableOut,
}

impl NoiseStudy {
    fn run(self) -> Outcome<()> {
        let seed = require_seed(self.sys.seed, "noise-study")?;
        if self.eps_grid.is_empty() {
            return Err(Failure::Config("--eps-grid is required".into()));
        }
        let spec: SystemSpec = self.sys.spec()?;
        let x0 = self.sys.x0(&spec)?;
        let [x0] = x0[..] else {
            return Err(Failure::Lib(evtdyn::Error::Unsupported(
                "the noise study needs a one-dimensional system".into(),
            )));
        };
        let cfg = NoiseStudyConfig {
            series_len: self.s,
            burn_in: self.sys.burn_in,
            x0,
            trim: self.trim,
            seed,
        };
        let kind = match self.kind {
            PerturbationKind::Additive => NoiseKind::Additive,
            PerturbationKind::Observational => NoiseKind::Observational,
        };
        let rows = noise_scaling_study(&spec, self.zeta, &self.eps_grid, kind, &self.m, &cfg)?;
        let mut prov = Provenance::new("noise-study");
        self.sys.record(&spec, &mut prov)?;
        prov.add("zeta", self.zeta);
        prov.add("kind", format!("{:?}", self.kind).to_lowercase());
        prov.add("s", self.s);
        let mut table = Table::new(&[
            "eps",
            "m",
            "n_blocks",
            "xi",
            "sigma",
            "mu_hat",
            "b_theory",
            "rel_error",
            "ball_measure",
            "ks_p",
            "flag",
        ]);
        for r in &rows {
            table.rows.push(vec![
                num(r.eps),
                r.m.to_string(),
                r.n_blocks.to_string(),
                opt(r.xi),
                opt(r.sigma),
                opt(r.mu_hat),
                opt(r.b_theory),
                opt(r.rel_error),
                num(r.ball_measure),
                opt(r.gof.map(|g| g.p_value)),
                r.flag.clone().unwrap_or_default(),
            ]);
        }
        let summary = json!({ "rows": rows });
        self.output.emit(&prov, &table, summary)
    }
}
