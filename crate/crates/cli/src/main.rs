//! `tidal`: scenario runner for the charged-particle tangent-bundle engine.
//!
//! Exit codes: 0 success, 1 verification failure, 2 bad input, 3 truncated run.

mod plot;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use tidal_core::connection::{ConnectionData, LocalGeometry};
use tidal_core::curvature::TidalPacket;
use tidal_core::dynamics::{convert_deviation_frame, integrate_deviation_tidal, integrate_worldline, RateFrame};
use tidal_core::fields::{metric_catalog, potential_catalog, Chart};
use tidal_core::scenario::{builtin_suite, Resolved, Scenario};
use tidal_core::table::Table;
use tidal_core::tensor::{norm_and_sign, Vec4};
use tidal_core::verify::{run_suite, sweep, SuiteConfig};

use plot::{line_plot, Series};

#[derive(Parser, Debug)]
#[command(
    name = "tidal",
    version,
    about = "Tidal tensors and worldlines of charged particles on the tangent bundle"
)]
struct Cli {
    /// Scenario file; repeat to verify several.
    #[arg(long, global = true)]
    scenario: Vec<PathBuf>,
    /// Output file (stdout when omitted; verify defaults to tidal_report.json).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for random phase points.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Also write an SVG plot next to the output.
    #[arg(long, global = true)]
    plot: bool,
    /// Print the scenario with every default filled in, then exit.
    #[arg(long, global = true)]
    echo_defaults: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List catalog metrics and potentials.
    List,
    /// Connection and tidal data at one phase point.
    Compute(ComputeArgs),
    /// Integrate the charged worldline.
    Simulate(RunArgs),
    /// Integrate the worldline together with a deviation field.
    Deviate(DeviateArgs),
    /// Run the identity checks on random phase points.
    Verify(VerifyArgs),
    /// Tidal trace decomposition across a set of α values.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
struct ComputeArgs {
    /// Base point override, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    at: Option<Vec<f64>>,
    /// Fiber vector override, comma separated; used as given.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    y: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
}

#[derive(Args, Debug)]
struct DeviateArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Which rate the v columns hold.
    #[arg(long, value_enum, default_value = "adapted")]
    frame: FrameArg,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum FrameArg {
    Adapted,
    LeviCivita,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Phase points per scenario.
    #[arg(long, default_value_t = 50)]
    points: usize,
    /// α values, comma separated; defaults to each scenario's own α.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    alphas: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// α values, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "range")]
    alphas: Option<Vec<f64>>,
    /// Evenly spaced α values as START:STOP:COUNT.
    #[arg(long, allow_hyphen_values = true)]
    range: Option<String>,
    #[arg(long, default_value_t = 5)]
    points: usize,
}

enum Failure {
    Input(anyhow::Error),
    Verification,
    Truncated(String),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.into())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("TIDAL_LOG"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Truncated(note)) => {
            eprintln!("warning: {note}");
            ExitCode::from(3)
        }
    }
}

fn load(path: &Path) -> anyhow::Result<Resolved> {
    let scenario = Scenario::load(path)?;
    let resolved = scenario
        .resolve()
        .with_context(|| format!("scenario {}", path.display()))?;
    log::info!("loaded scenario {} from {}", resolved.scenario.id, path.display());
    Ok(resolved)
}

fn single(cli: &Cli) -> anyhow::Result<Resolved> {
    match cli.scenario.as_slice() {
        [one] => load(one),
        [] => bail!("this command needs --scenario PATH"),
        _ => bail!("this command takes exactly one --scenario"),
    }
}

fn emit(cli: &Cli, text: &str) -> anyhow::Result<()> {
    match &cli.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

fn plot_path(cli: &Cli, fallback: &str) -> PathBuf {
    match &cli.out {
        Some(p) => p.with_extension("svg"),
        None => PathBuf::from(format!("{fallback}.svg")),
    }
}

fn write_plot(cli: &Cli, fallback: &str, svg: String) -> anyhow::Result<()> {
    if cli.plot {
        let path = plot_path(cli, fallback);
        fs::write(&path, svg).with_context(|| format!("writing {}", path.display()))?;
        eprintln!("plot: {}", path.display());
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

fn vec4(v: &[f64], name: &str) -> anyhow::Result<Vec4> {
    v.try_into().map_err(|_| anyhow!("--{name} needs exactly 4 components"))
}

fn run(cli: &Cli) -> Outcome {
    if cli.echo_defaults {
        let r = single(cli)?;
        emit(cli, &(r.scenario.to_json() + "\n"))?;
        return Ok(());
    }
    match &cli.command {
        Command::List => list(cli),
        Command::Compute(a) => compute(cli, a),
        Command::Simulate(a) => simulate(cli, a),
        Command::Deviate(a) => deviate(cli, a),
        Command::Verify(a) => verify(cli, a),
        Command::Sweep(a) => sweep_cmd(cli, a),
    }
}

fn list(cli: &Cli) -> Outcome {
    #[derive(Serialize)]
    struct Catalog {
        metrics: Vec<tidal_core::fields::CatalogEntry>,
        potentials: Vec<tidal_core::fields::CatalogEntry>,
    }
    let cat = Catalog {
        metrics: metric_catalog(),
        potentials: potential_catalog(),
    };
    if cli.format == Some(Format::Json) {
        emit(cli, &to_json(&cat))?;
        return Ok(());
    }
    let mut text = String::new();
    for (kind, entries) in [("metric", &cat.metrics), ("potential", &cat.potentials)] {
        for e in entries {
            text.push_str(&format!(
                "{kind:<9} {:<20} chart={:<10} params=[{}]  {}\n",
                e.name,
                e.chart,
                e.params.join(", "),
                e.description
            ));
        }
    }
    emit(cli, &text)?;
    Ok(())
}

fn with_alpha(r: Resolved, alpha: Option<f64>) -> Resolved {
    match alpha {
        Some(a) => r.with_alpha(a),
        None => r,
    }
}

fn compute(cli: &Cli, a: &ComputeArgs) -> Outcome {
    if cli.format == Some(Format::Csv) {
        return Err(Failure::Input(anyhow!("compute emits JSON only")));
    }
    let r = with_alpha(single(cli)?, a.alpha);
    let x = match &a.at {
        Some(v) => vec4(v, "at")?,
        None => r.x0,
    };
    let y = match &a.y {
        Some(v) => vec4(v, "y")?,
        None => r.y0,
    };
    let g = r.metric.jet(&x).context("base point")?.g;
    let (_, sign) = norm_and_sign(&g, &y).context("fiber vector")?;
    let geo = LocalGeometry::new(r.metric.as_ref(), r.potential.as_ref(), r.spec, &x, sign).context("base point")?;

    #[derive(Serialize)]
    struct Dump<'a> {
        scenario: &'a str,
        connection: ConnectionData,
        tidal: TidalPacket,
    }
    let dump = Dump {
        scenario: &r.scenario.id,
        connection: ConnectionData::new(&geo, &y),
        tidal: TidalPacket::new(&geo, &y),
    };
    emit(cli, &to_json(&dump))?;
    Ok(())
}

fn configured(r: &Resolved, t_end: Option<f64>) -> anyhow::Result<tidal_core::dynamics::IntegratorConfig> {
    let mut cfg = r.scenario.integrator;
    if let Some(t) = t_end {
        cfg.t_end = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Projection used for trajectory plots: Cartesian pairs, or the equatorial
/// embedding for spherical charts.
fn planar(chart: Chart, x: &Vec4) -> (f64, f64) {
    match chart {
        Chart::Cartesian => (x[1], x[2]),
        Chart::Spherical => (x[1] * x[2].sin() * x[3].cos(), x[1] * x[2].sin() * x[3].sin()),
    }
}

fn finish(table: &Table, truncation: Option<String>, cli: &Cli, json: String) -> Outcome {
    match cli.format {
        Some(Format::Json) => emit(cli, &json)?,
        _ => emit(cli, &table.render())?,
    }
    match truncation {
        Some(note) => Err(Failure::Truncated(note)),
        None => Ok(()),
    }
}

fn simulate(cli: &Cli, a: &RunArgs) -> Outcome {
    let r = with_alpha(single(cli)?, a.alpha);
    let cfg = configured(&r, a.t_end)?;
    let line = integrate_worldline(r.metric.as_ref(), r.potential.as_ref(), &r.spec, &r.x0, &r.y0, &cfg)?;
    log::info!("worldline: {} steps, {} samples", line.steps, line.t.len());
    let table = line.to_table();
    let chart = r.metric.chart();
    let (xl, yl) = match chart {
        Chart::Cartesian => ("x1", "x2"),
        Chart::Spherical => ("r sin(theta) cos(phi)", "r sin(theta) sin(phi)"),
    };
    write_plot(
        cli,
        &format!("{}-simulate", r.scenario.id),
        line_plot(
            &format!("{} worldline", r.scenario.id),
            xl,
            yl,
            &[Series {
                label: format!("alpha = {}", r.spec.alpha),
                points: line.x.iter().map(|x| planar(chart, x)).collect(),
            }],
        ),
    )?;
    let note = line
        .truncation
        .as_ref()
        .map(|t| format!("integration truncated at t={}: {}", t.t, t.reason));
    finish(&table, note, cli, to_json(&line))
}

fn deviate(cli: &Cli, a: &DeviateArgs) -> Outcome {
    let r = with_alpha(single(cli)?, a.run.alpha);
    let init = r
        .deviation_init()
        .ok_or_else(|| anyhow!("deviation: scenario {} has no deviation block", r.scenario.id))?;
    let cfg = configured(&r, a.run.t_end)?;
    let (m, p) = (r.metric.as_ref(), r.potential.as_ref());
    let mut dev = integrate_deviation_tidal(m, p, &r.spec, &init, &cfg)?;
    if let FrameArg::LeviCivita = a.frame {
        dev = convert_deviation_frame(m, p, &r.spec, &dev, RateFrame::LeviCivita)?;
    }
    log::info!("deviation: {} steps, {} samples", dev.steps, dev.samples.len());
    write_plot(
        cli,
        &format!("{}-deviate", r.scenario.id),
        line_plot(
            &format!("{} deviation", r.scenario.id),
            "t",
            "|w| (component norm)",
            &[Series {
                label: "|w|".into(),
                points: dev
                    .samples
                    .iter()
                    .map(|s| (s.t, s.w.iter().map(|v| v * v).sum::<f64>().sqrt()))
                    .collect(),
            }],
        ),
    )?;
    let note = dev
        .truncation
        .as_ref()
        .map(|t| format!("integration truncated at t={}: {}", t.t, t.reason));
    finish(&dev.to_table(), note, cli, to_json(&dev))
}

fn verify(cli: &Cli, a: &VerifyArgs) -> Outcome {
    let suite = if cli.scenario.is_empty() {
        builtin_suite()
            .iter()
            .map(|s| s.resolve().map_err(anyhow::Error::from))
            .collect::<anyhow::Result<Vec<_>>>()?
    } else {
        cli.scenario
            .iter()
            .map(|p| load(p))
            .collect::<anyhow::Result<Vec<_>>>()?
    };
    if cli.format == Some(Format::Csv) {
        return Err(Failure::Input(anyhow!("verify emits a JSON report only")));
    }
    let cfg = SuiteConfig {
        points: a.points,
        alphas: a.alphas.clone(),
        seed: cli.seed,
    };
    let report = run_suite(&suite, &cfg)?;
    let path = cli.out.clone().unwrap_or_else(|| PathBuf::from("tidal_report.json"));
    fs::write(&path, report.to_json() + "\n").with_context(|| format!("writing {}", path.display()))?;

    let mut stdout = std::io::stdout().lock();
    let _ = write!(stdout, "{}", report.summary_table());
    for c in report.checks.iter().filter(|c| !c.pass).take(10) {
        let _ = writeln!(
            stdout,
            "FAIL {} [{} point {} alpha {}] rel {:.3e}",
            c.check, c.scenario, c.point, c.alpha, c.rel_residual
        );
    }
    let _ = writeln!(stdout, "report: {}", path.display());
    drop(stdout);

    if cli.plot {
        let points = report
            .summary
            .per_check
            .values()
            .enumerate()
            .map(|(k, s)| (k as f64, s.max_rel_residual.max(1e-18).log10()))
            .collect();
        let svg = line_plot(
            "max relative residual per check",
            "check index (alphabetical)",
            "log10 residual",
            &[Series {
                label: "max rel".into(),
                points,
            }],
        );
        let p = path.with_extension("svg");
        fs::write(&p, svg).with_context(|| format!("writing {}", p.display()))?;
        eprintln!("plot: {}", p.display());
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn parse_range(spec: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        bail!("--range expects START:STOP:COUNT, got {spec}");
    };
    let (a, b): (f64, f64) = (a.parse()?, b.parse()?);
    let n: usize = n.parse()?;
    Ok(match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
    })
}

fn sweep_cmd(cli: &Cli, a: &SweepArgs) -> Outcome {
    let r = single(cli)?;
    let alphas = match (&a.alphas, &a.range) {
        (Some(v), _) => v.clone(),
        (None, Some(spec)) => parse_range(spec)?,
        (None, None) => vec![r.spec.alpha],
    };
    if alphas.is_empty() {
        return Err(Failure::Input(anyhow!("sweep needs at least one alpha")));
    }
    let table = sweep(&r, &alphas, a.points, cli.seed)?;
    let trace = table.column("tidal_trace").unwrap_or_default();
    let alpha_col = table.column("alpha").unwrap_or_default();
    write_plot(
        cli,
        &format!("{}-sweep", r.scenario.id),
        line_plot(
            &format!("{} tidal trace", r.scenario.id),
            "alpha",
            "E^i_i",
            &(0..a.points)
                .map(|p| Series {
                    label: format!("point {p}"),
                    points: (0..alphas.len())
                        .map(|k| (alpha_col[k * a.points + p], trace[k * a.points + p]))
                        .collect(),
                })
                .collect::<Vec<_>>(),
        ),
    )?;
    match cli.format {
        Some(Format::Json) => {
            #[derive(Serialize)]
            struct Rows<'a> {
                header: &'a [String],
                rows: &'a [Vec<f64>],
            }
            emit(
                cli,
                &to_json(&Rows {
                    header: &table.header,
                    rows: &table.rows,
                }),
            )?
        }
        _ => emit(cli, &table.render())?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_are_inclusive() {
        assert_eq!(parse_range("-1:1:3").unwrap(), vec![-1.0, 0.0, 1.0]);
        assert_eq!(parse_range("2:5:1").unwrap(), vec![2.0]);
        assert!(parse_range("1:2").is_err());
    }
}
