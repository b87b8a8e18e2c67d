use std::path::{Path, PathBuf};

use clap::Args;

use asep_core::bethe::{transition_probabilities, transition_probability, BetheOptions};
use asep_core::fredholm::marginal_cdf;
use asep_core::harness::{current_limit_study, particle_limit_study, ConvergenceReport, LimitLaws, StudyConfig};
use asep_core::identities::{identity_sweep, SweepConfig};
use asep_core::painleve::{default_distribution, solve_hastings_mcleod};
use asep_core::sim::{sample_marginal, InitialCondition};
use asep_core::HoppingRates;

use crate::config::Settings;
use crate::output::{emit, Cell, Format, Table};
use crate::{Cli, CliError, Command, Common};

const DEFAULT_SEED: u64 = 1;
const DEFAULT_TRIALS: usize = 10_000;
const DEFAULT_LADDER: [f64; 3] = [50.0, 100.0, 200.0];

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Particle index, counted from the left starting at 1.
    #[arg(long)]
    pub m: Option<usize>,
    /// Process time.
    #[arg(long)]
    pub t: Option<f64>,
    /// Window half-width in units of t.
    #[arg(long)]
    pub safety: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    /// Initial sites, comma separated and strictly increasing.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub y: Option<Vec<i64>>,
    /// Final sites, comma separated and strictly increasing.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Option<Vec<i64>>,
    /// File with one final configuration per line (comma separated sites).
    #[arg(long, conflicts_with = "x")]
    pub batch: Option<PathBuf>,
    #[arg(long)]
    pub t: Option<f64>,
}

#[derive(Debug, Args)]
pub struct IdentitiesArgs {
    #[arg(long)]
    pub n_min: Option<usize>,
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Largest size for the determinant identity.
    #[arg(long)]
    pub det_max: Option<usize>,
    /// Random points per row.
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TwArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub s_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub s_max: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
    /// Print mean, variance, skewness and excess kurtosis instead.
    #[arg(long)]
    pub moments: bool,
}

#[derive(Debug, Args)]
pub struct CdfArgs {
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub x_min: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    pub x_max: Option<i64>,
    /// Process time.
    #[arg(long)]
    pub t: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ConvergeParticleArgs {
    /// Ratio m / t.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Scaled times, comma separated and increasing.
    #[arg(long, value_delimiter = ',')]
    pub ladder: Option<Vec<f64>>,
    #[arg(long)]
    pub safety: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ConvergeCurrentArgs {
    /// Ratio x / t.
    #[arg(long, allow_negative_numbers = true)]
    pub v: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub ladder: Option<Vec<f64>>,
    #[arg(long)]
    pub safety: Option<f64>,
}

struct Context<'a> {
    common: &'a Common,
    settings: Settings,
}

impl Context<'_> {
    fn rates(&self) -> Result<HoppingRates, CliError> {
        Ok(HoppingRates::new(self.settings.require("p", self.common.p)?)?)
    }

    fn rho(&self) -> Result<f64, CliError> {
        self.settings.get("rho", self.common.rho, 1.0)
    }

    fn seed(&self) -> Result<u64, CliError> {
        self.settings.get("seed", self.common.seed, DEFAULT_SEED)
    }

    fn trials(&self) -> Result<usize, CliError> {
        self.settings.get("trials", self.common.trials, DEFAULT_TRIALS)
    }

    fn format(&self) -> Result<Option<Format>, CliError> {
        self.settings.get_opt("format", self.common.format)
    }

    fn out(&self) -> Result<Option<PathBuf>, CliError> {
        self.settings.get_opt("out", self.common.out.clone())
    }

    fn finish(&self, table: &Table) -> Result<(), CliError> {
        let format = self.format()?.unwrap_or(Format::Csv);
        emit(&table.render(format), self.out()?.as_deref())
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let settings = Settings::load(cli.common.config.as_deref(), cli.command.name())?;
    let ctx = Context { common: &cli.common, settings };
    match &cli.command {
        Command::Simulate(a) => simulate(&ctx, a),
        Command::Exact(a) => exact(&ctx, a),
        Command::Identities(a) => identities(&ctx, a),
        Command::Tw(a) => tw(&ctx, a),
        Command::Cdf(a) => cdf(&ctx, a),
        Command::ConvergeParticle(a) => converge_particle(&ctx, a),
        Command::ConvergeCurrent(a) => converge_current(&ctx, a),
    }
}

fn simulate(ctx: &Context, a: &SimulateArgs) -> Result<(), CliError> {
    let s = &ctx.settings;
    let rates = ctx.rates()?;
    let m = s.require("m", a.m)?;
    let t = s.require("t", a.t)?;
    let safety = s.get("safety", a.safety, 8.0)?;
    let (seed, trials) = (ctx.seed()?, ctx.trials()?);
    let init = InitialCondition::from_density(ctx.rho()?)?;
    let sample = sample_marginal(&init, rates, m, t, trials, seed, safety)?;
    let mut table = Table::new("simulate", &["trial", "position"]);
    for (k, x) in sample.positions.iter().enumerate() {
        table.push(vec![Cell::from(k), Cell::from(*x)]);
    }
    table.meta("m", m);
    table.meta("t", t);
    table.meta("p", rates.p());
    table.meta("seed", seed);
    table.meta("truncation", &sample.plan);
    ctx.finish(&table)
}

fn join_sites(x: &[i64]) -> String {
    x.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

fn read_batch(path: &Path) -> Result<Vec<Vec<i64>>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| f.trim().parse::<i64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Usage(format!("{} line {}: {e}", path.display(), i + 1)))?;
        rows.push(row);
    }
    Ok(rows)
}

fn exact(ctx: &Context, a: &ExactArgs) -> Result<(), CliError> {
    let s = &ctx.settings;
    let rates = ctx.rates()?;
    let y: Vec<i64> = s.require("y", a.y.clone())?;
    let t = s.require("t", a.t)?;
    let opts = BetheOptions::default();
    let batch: Option<PathBuf> = s.get_opt("batch", a.batch.clone())?;
    if let Some(path) = batch {
        let xs = read_batch(&path)?;
        let estimates = transition_probabilities(&y, &xs, t, rates, &opts)?;
        let mut table = Table::new("exact", &["X", "probability"]);
        for (x, e) in xs.iter().zip(&estimates) {
            table.push(vec![Cell::from(join_sites(x)), Cell::from(e.probability)]);
        }
        table.meta("Y", &y);
        table.meta("t", t);
        table.meta("p", rates.p());
        return ctx.finish(&table);
    }
    let x: Vec<i64> = s.require("x", a.x.clone())?;
    let e = transition_probability(&y, &x, t, rates, &opts)?;
    let format = ctx.format()?;
    if format.is_none() {
        let text = format!(
            "Y = {}\nX = {}\nt = {t}\np = {}\nprobability = {:?}\nimaginary = {:e}\nradius = {:?}\nnodes = {}\nmirrored = {}\nlast_change = {:e}\nintegrand_bound = {:e}\n",
            join_sites(&y),
            join_sites(&x),
            rates.p(),
            e.probability,
            e.imaginary,
            e.radius,
            e.nodes,
            e.mirrored,
            e.last_change,
            e.integrand_bound,
        );
        return emit(&text, ctx.out()?.as_deref());
    }
    let mut table = Table::new(
        "exact",
        &["X", "probability", "imaginary", "radius", "nodes", "mirrored", "last_change"],
    );
    table.push(vec![
        Cell::from(join_sites(&x)),
        Cell::from(e.probability),
        Cell::from(e.imaginary),
        Cell::from(e.radius),
        Cell::from(e.nodes),
        Cell::from(e.mirrored.to_string()),
        Cell::from(e.last_change),
    ]);
    table.meta("Y", &y);
    table.meta("t", t);
    table.meta("p", rates.p());
    ctx.finish(&table)
}

fn identities(ctx: &Context, a: &IdentitiesArgs) -> Result<(), CliError> {
    let s = &ctx.settings;
    let d = SweepConfig::default();
    let config = SweepConfig {
        n_min: s.get("n-min", a.n_min, d.n_min)?,
        n_max: s.get("n-max", a.n_max, d.n_max)?,
        det_max: s.get("det-max", a.det_max, d.det_max)?,
        points: s.get("points", a.points, d.points)?,
        seed: ctx.seed()?,
    };
    let rates = ctx.rates()?;
    let reports = identity_sweep(rates, &config)?;
    let mut table = Table::new("identities", &["identity", "N", "m", "max_residual", "points"]);
    for r in &reports {
        let m = r.m.map_or(Cell::from(""), Cell::from);
        table.push(vec![Cell::from(r.identity.name()), Cell::from(r.n), m, Cell::from(r.max_residual), Cell::from(r.points)]);
    }
    table.meta("p", rates.p());
    table.meta("seed", config.seed);
    ctx.finish(&table)
}

fn tw(ctx: &Context, a: &TwArgs) -> Result<(), CliError> {
    let s = &ctx.settings;
    let sol = solve_hastings_mcleod(-10.0, 8.0, 1e-12)?;
    if s.get("moments", a.moments.then_some(true), false)? {
        let mut table = Table::new("tw", &["beta", "mean", "variance", "skewness", "excess_kurtosis"]);
        for beta in [1u8, 2] {
            let m = default_distribution(&sol, beta)?.moments()?;
            table.push(vec![
                Cell::from(beta as i64),
                Cell::from(m.mean),
                Cell::from(m.variance),
                Cell::from(m.skewness),
                Cell::from(m.excess_kurtosis),
            ]);
        }
        return ctx.finish(&table);
    }
    let lo = s.get("s-min", a.s_min, -8.0)?;
    let hi = s.get("s-max", a.s_max, 6.0)?;
    let step: f64 = s.get("step", a.step, 0.1)?;
    if !(step > 0.0 && lo <= hi && lo.is_finite() && hi.is_finite()) {
        return Err(CliError::Usage("need s-min <= s-max and step > 0".into()));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    let mut table = Table::new("tw", &["s", "F1", "F2", "f1_density", "f2_density"]);
    for k in 0..=n {
        let x = lo + k as f64 * step;
        let (f1, _, d1) = sol.distribution_point(1, x)?;
        let (f2, _, d2) = sol.distribution_point(2, x)?;
        table.push(vec![Cell::from(x), Cell::from(f1), Cell::from(f2), Cell::from(d1), Cell::from(d2)]);
    }
    ctx.finish(&table)
}

fn cdf(ctx: &Context, a: &CdfArgs) -> Result<(), CliError> {
    let s = &ctx.settings;
    let rates = ctx.rates()?;
    let rho = ctx.rho()?;
    let m = s.require("m", a.m)?;
    let t = s.require("t", a.t)?;
    let lo: i64 = s.require("x-min", a.x_min)?;
    let hi: i64 = s.require("x-max", a.x_max)?;
    if lo > hi {
        return Err(CliError::Usage(format!("x-min = {lo} exceeds x-max = {hi}")));
    }
    let mut table = Table::new("cdf", &["x", "cdf", "raw", "imag_residue", "n_xi", "n_lambda"]);
    for x in lo..=hi {
        let c = marginal_cdf(m, x, t, rates, rho)?;
        table.push(vec![
            Cell::from(x),
            Cell::from(c.value),
            Cell::from(c.raw),
            Cell::from(c.imag_residue),
            Cell::from(c.n_xi),
            Cell::from(c.n_lambda),
        ]);
    }
    table.meta("m", m);
    table.meta("t", t);
    table.meta("p", rates.p());
    table.meta("rho", rho);
    ctx.finish(&table)
}

fn study_config(ctx: &Context, ladder: Option<Vec<f64>>, safety: Option<f64>) -> Result<StudyConfig, CliError> {
    let s = &ctx.settings;
    let ladder = s.get("ladder", ladder, DEFAULT_LADDER.to_vec())?;
    let mut config = StudyConfig::new(ctx.rates()?, ctx.rho()?, ladder, ctx.trials()?, ctx.seed()?);
    config.safety = s.get("safety", safety, config.safety)?;
    Ok(config)
}

fn report_table(report: &ConvergenceReport, command: &'static str, index_name: &'static str) -> Table {
    let mut table = Table::new(
        command,
        &["t", "process_time", index_name, "ks", "max_atom", "mean", "variance", "trials", "seed", "regime"],
    );
    for r in &report.rungs {
        table.push(vec![
            Cell::from(r.time.scaled),
            Cell::from(r.time.process),
            Cell::from(r.index),
            Cell::from(r.ks),
            Cell::from(r.max_atom),
            Cell::from(r.mean),
            Cell::from(r.variance),
            Cell::from(report.trials),
            Cell::from(report.seed.to_string()),
            Cell::from(report.regime.label()),
        ]);
    }
    table.meta("report", report);
    table
}

fn converge_particle(ctx: &Context, a: &ConvergeParticleArgs) -> Result<(), CliError> {
    let sigma = ctx.settings.require("sigma", a.sigma)?;
    let config = study_config(ctx, a.ladder.clone(), a.safety)?;
    let laws = LimitLaws::new()?;
    let report = particle_limit_study(&config, sigma, &laws)?;
    ctx.finish(&report_table(&report, "converge-particle", "m"))
}

fn converge_current(ctx: &Context, a: &ConvergeCurrentArgs) -> Result<(), CliError> {
    let v = ctx.settings.require("v", a.v)?;
    let config = study_config(ctx, a.ladder.clone(), a.safety)?;
    let laws = LimitLaws::new()?;
    let report = current_limit_study(&config, v, &laws)?;
    ctx.finish(&report_table(&report, "converge-current", "x"))
}
