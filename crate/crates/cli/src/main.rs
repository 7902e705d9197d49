use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use retrodict::channel_io::{self, Channel, ChannelFile};
use retrodict::config::Config;
use retrodict::error::{CliError, Result};
use retrodict::estimator::Estimator;
use retrodict::experiments::{self, BitConfig, QubitConfig, TritConfig};
use retrodict::format::{self, OutputFormat, Table};
use retrodict::heatmap::{self, HeatmapSpec};
use retrodict::verify::{self, Suite, VerifyConfig};
use retrodict_core::classical;
use retrodict_core::measures::{IntegrationConfig, MeasureEstimate, MeasureKind, Target};
use retrodict_core::quantum;
use retrodict_core::samplers::{self, GridCell};
use serde_json::json;

/// Bayesian retrodiction and irreversibility measures for finite channels.
#[derive(Debug, Parser)]
#[command(name = "retrodict", version)]
struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo prior pairs per estimate.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Output path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Table format: csv or json.
    #[arg(long, global = true)]
    format: Option<OutputFormat>,
    /// Flat `key = value` file with defaults for any long flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the measures of a channel file.
    Measure(MeasureArgs),
    /// Draw a random channel and write it as JSON.
    Sample {
        #[command(subcommand)]
        kind: SampleKind,
    },
    /// Write the data behind the bit, qubit or trit density plots.
    Experiment {
        #[command(subcommand)]
        kind: ExperimentKind,
    },
    /// Run a property suite and write a JSON report.
    Verify(VerifyArgs),
    /// Render a bin-averaged SVG heatmap from a CSV file.
    Heatmap(HeatmapArgs),
}

#[derive(Debug, Args)]
struct MeasureArgs {
    /// Channel JSON file.
    channel: PathBuf,
    /// subjectivity, divergence or both.
    #[arg(long, default_value = "both")]
    measure: String,
    /// Report unnormalized values.
    #[arg(long)]
    raw: bool,
    /// Diamond-norm restarts for quantum channels.
    #[arg(long)]
    restarts: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum SampleKind {
    /// Columns uniform on the simplex.
    Classical {
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long, default_value_t = 0)]
        index: u64,
    },
    /// Trit map from the restricted-simplex sampler.
    Trit {
        #[arg(long)]
        det: f64,
        #[arg(long, default_value_t = 0)]
        index: u64,
    },
    /// Qubit channel from the (u, f) grid sampler.
    Qubit {
        #[arg(long)]
        grid: Option<usize>,
        /// Cell as `i,j`.
        #[arg(long)]
        cell: String,
        #[arg(long, default_value_t = 0)]
        index: u64,
    },
}

#[derive(Debug, Args)]
struct ExperimentCommon {
    /// Also write an SVG heatmap next to the data file.
    #[arg(long)]
    svg: bool,
    /// JSON file caching erasure reference values between runs.
    #[arg(long)]
    cache: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum ExperimentKind {
    Bit {
        #[arg(long)]
        grid: Option<usize>,
        /// Adds quadrature and Monte Carlo columns.
        #[arg(long)]
        cross_check: bool,
        #[command(flatten)]
        common: ExperimentCommon,
    },
    Qubit {
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        quota: Option<usize>,
        #[arg(long)]
        restarts: Option<usize>,
        /// Restricts the run to cells `i,j;i,j;...`.
        #[arg(long)]
        cells: Option<String>,
        #[command(flatten)]
        common: ExperimentCommon,
    },
    Trit {
        /// Comma-separated sampler levels D.
        #[arg(long)]
        levels: Option<String>,
        #[arg(long)]
        per_level: Option<usize>,
        /// Leaves out the spiral, absorber and permutation populations.
        #[arg(long)]
        no_inject: bool,
        #[command(flatten)]
        common: ExperimentCommon,
    },
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// dpi, theorems or absorbing.
    suite: Suite,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    pairs: Option<usize>,
    #[arg(long)]
    quantum_pairs: Option<usize>,
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long)]
    absorbers: Option<usize>,
    #[arg(long)]
    quantum_samples: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
}

#[derive(Debug, Args)]
struct HeatmapArgs {
    /// CSV data file.
    data: PathBuf,
    #[arg(long)]
    x: String,
    #[arg(long)]
    y: String,
    #[arg(long)]
    value: String,
    #[arg(long)]
    bins: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

struct Globals {
    config: Config,
    seed: u64,
    samples: Option<usize>,
    out: Option<PathBuf>,
    format: OutputFormat,
}

impl Globals {
    fn out_or(&self, default: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(default))
    }
}

fn run(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let format = match cli.format {
        Some(f) => f,
        None => config.get_str("format").map(str::parse).transpose()?.unwrap_or_default(),
    };
    let g = Globals {
        seed: config.pick(cli.seed, "seed", 0)?,
        samples: match cli.samples {
            Some(s) => Some(s),
            None => config.get("samples")?,
        },
        out: cli.out.or_else(|| config.get_str("out").map(PathBuf::from)),
        format,
        config,
    };
    if g.samples == Some(0) {
        return Err(CliError::Usage("--samples must be positive".into()));
    }
    match cli.command {
        Command::Measure(a) => measure(&g, a),
        Command::Sample { kind } => sample(&g, kind),
        Command::Experiment { kind } => experiment(&g, kind),
        Command::Verify(a) => run_verify(&g, a),
        Command::Heatmap(a) => run_heatmap(&g, a),
    }
}

fn emit_text(g: &Globals, text: &str) -> Result<()> {
    match &g.out {
        Some(p) => format::write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn estimate_json(e: &MeasureEstimate) -> serde_json::Value {
    json!({"value": e.value, "stderr": e.stderr, "nsamples": e.nsamples, "seed": e.seed,
           "normalized": e.normalized, "rejected": e.rejected})
}

fn measure(g: &Globals, a: MeasureArgs) -> Result<()> {
    let kinds: Vec<MeasureKind> = match a.measure.as_str() {
        "subjectivity" => vec![MeasureKind::Subjectivity],
        "divergence" => vec![MeasureKind::Divergence],
        "both" => vec![MeasureKind::Subjectivity, MeasureKind::Divergence],
        other => return Err(CliError::Usage(format!("unknown measure `{other}`"))),
    };
    let channel = channel_io::read_channel(&a.channel)?;
    let mut est = match g.config.get_str("cache") {
        Some(p) => Estimator::with_cache_file(Path::new(p))?,
        None => Estimator::new(),
    };
    let (target, base, mut out) = match &channel {
        Channel::Classical(map) => {
            let summary = json!({
                "type": "classical", "dim": map.dim(),
                "cad": classical::abs_determinant(map), "cfd": classical::cfd(map)?,
                "skew": if map.dim() == 3 { classical::skew(map)? } else { None },
                "class": classical::classify(map)?.tag(),
                "period": classical::asymptote(map)?.period,
            });
            (Target::Classical(map), IntegrationConfig::classical(g.seed), summary)
        }
        Channel::Quantum { kraus, .. } => {
            let restarts = g.config.pick(a.restarts, "restarts", 16)?;
            let summary = json!({
                "type": "quantum", "dim": kraus.dim(), "qad": quantum::qad(kraus), "qfd": quantum::qfd(kraus)?,
            });
            let cfg = IntegrationConfig { diamond_restarts: restarts, ..IntegrationConfig::quantum(g.seed) };
            (Target::Quantum(kraus), cfg, summary)
        }
    };
    let mut cfg = if let Some(n) = g.samples { base.with_npairs(n) } else { base };
    if !a.raw {
        cfg = cfg.normalized();
    }
    for kind in kinds {
        let e = est.estimate(target, kind, &cfg)?;
        out[kind.name()] = estimate_json(&e);
    }
    est.save()?;
    emit_text(g, &format!("{}\n", serde_json::to_string_pretty(&out).expect("json")))
}

fn parse_cell(s: &str) -> Result<(usize, usize)> {
    let bad = || CliError::Usage(format!("cell `{s}` is not `i,j`"));
    let (i, j) = s.split_once(',').ok_or_else(bad)?;
    Ok((i.trim().parse().map_err(|_| bad())?, j.trim().parse().map_err(|_| bad())?))
}

fn sample(g: &Globals, kind: SampleKind) -> Result<()> {
    let file = match kind {
        SampleKind::Classical { dim, index } => {
            let dim = g.config.pick(dim, "dim", 3)?;
            if dim < 2 {
                return Err(CliError::Usage("dimension must be at least 2".into()));
            }
            let mut rng = samplers::stream(g.seed, index);
            ChannelFile::from_classical(&samplers::sample_stochastic(dim, &mut rng))
        }
        SampleKind::Trit { det, index } => {
            let mut rng = samplers::stream(g.seed, index);
            ChannelFile::from_classical(&samplers::sample_trit_channel_restricted(det, &mut rng)?)
        }
        SampleKind::Qubit { grid, cell, index } => {
            let grid = g.config.pick(grid, "grid", 8)?;
            let (i, j) = parse_cell(&cell)?;
            let cell = GridCell::of_grid(grid, i, j, 1)?;
            let mut rng = samplers::stream(g.seed, index);
            let s = samplers::sample_qubit_gad_grid(&cell, &Default::default(), &mut rng);
            ChannelFile::from_sampled(&s)
        }
    };
    emit_text(g, &file.to_json())
}

fn estimator(g: &Globals, common: &ExperimentCommon) -> Result<Estimator> {
    match common.cache.clone().or_else(|| g.config.get_str("cache").map(PathBuf::from)) {
        Some(p) => Estimator::with_cache_file(&p),
        None => Ok(Estimator::new()),
    }
}

fn want_svg(g: &Globals, common: &ExperimentCommon) -> Result<bool> {
    Ok(common.svg || g.config.get_bool("svg")?.unwrap_or(false))
}

fn write_outputs(g: &Globals, table: &Table, path: &Path, svg: Option<(&str, &str, &str)>) -> Result<()> {
    format::write_table(table, path, g.format)?;
    eprintln!("wrote {} rows to {}", table.rows.len(), path.display());
    if let Some((x, y, value)) = svg {
        let data = format::parse_csv(&table.to_csv());
        let spec = HeatmapSpec { x: x.into(), y: y.into(), value: value.into(), bins: 64 };
        let (_, svg) = heatmap::emit_heatmap(&data, &spec)?;
        let svg_path = path.with_extension("svg");
        format::write_text(&svg_path, &svg)?;
        eprintln!("wrote {}", svg_path.display());
    }
    Ok(())
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{stem}{suffix}.{ext}"))
}

fn experiment(g: &Globals, kind: ExperimentKind) -> Result<()> {
    let c = &g.config;
    let ext = match g.format {
        OutputFormat::Csv => "csv",
        OutputFormat::Json => "json",
    };
    match kind {
        ExperimentKind::Bit { grid, cross_check, common } => {
            let cfg = BitConfig {
                grid: c.pick(grid, "grid", 64)?,
                seed: g.seed,
                cross_check: cross_check || c.get_bool("cross-check")?.unwrap_or(false),
                npairs: g.samples.unwrap_or(2000),
                quadrature_points: c.pick(None, "quadrature-points", 100)?,
            };
            let table = experiments::run_bit_figure(&cfg)?;
            let svg = want_svg(g, &common)?.then_some(("d", "f", "is"));
            write_outputs(g, &table, &g.out_or(&format!("bit.{ext}")), svg)
        }
        ExperimentKind::Qubit { grid, quota, restarts, cells, common } => {
            let cells = match cells.or_else(|| c.get_str("cells").map(String::from)) {
                Some(s) => Some(s.split(';').filter(|t| !t.trim().is_empty()).map(parse_cell).collect::<Result<Vec<_>>>()?),
                None => None,
            };
            let cfg = QubitConfig {
                grid: c.pick(grid, "grid", 8)?,
                quota: c.pick(quota, "quota", 4)?,
                cells,
                seed: g.seed,
                npairs: g.samples.unwrap_or(200),
                restarts: c.pick(restarts, "restarts", 16)?,
                ..Default::default()
            };
            let mut est = estimator(g, &common)?;
            let out = experiments::run_qubit_figure(&cfg, &mut est)?;
            est.save()?;
            let path = g.out_or(&format!("qubit.{ext}"));
            let svg = want_svg(g, &common)?.then_some(("qad", "qfd", "is"));
            write_outputs(g, &out.rows, &path, svg)?;
            write_outputs(g, &out.cells, &sibling(&path, "_cells"), None)
        }
        ExperimentKind::Trit { levels, per_level, no_inject, common } => {
            let defaults = TritConfig::default();
            let levels = match levels.or_else(|| c.get_str("levels").map(String::from)) {
                Some(s) => s
                    .split(',')
                    .map(|t| t.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("bad level `{t}`"))))
                    .collect::<Result<Vec<_>>>()?,
                None => defaults.levels,
            };
            let cfg = TritConfig {
                levels,
                per_level: c.pick(per_level, "per-level", defaults.per_level)?,
                inject: !(no_inject || c.get_bool("no-inject")?.unwrap_or(false)),
                seed: g.seed,
                npairs: g.samples.unwrap_or(defaults.npairs),
            };
            let mut est = estimator(g, &common)?;
            let table = experiments::run_trit_figure(&cfg, &mut est)?;
            est.save()?;
            let svg = want_svg(g, &common)?.then_some(("cad", "cfd", "is"));
            write_outputs(g, &table, &g.out_or(&format!("trit.{ext}")), svg)
        }
    }
}

fn run_verify(g: &Globals, a: VerifyArgs) -> Result<()> {
    let c = &g.config;
    let d = VerifyConfig::default();
    let cfg = VerifyConfig {
        seed: g.seed,
        dim: c.pick(a.dim, "dim", d.dim)?,
        pairs: c.pick(a.pairs, "pairs", d.pairs)?,
        quantum_pairs: c.pick(a.quantum_pairs, "quantum-pairs", d.quantum_pairs)?,
        instances: c.pick(a.instances, "instances", d.instances)?,
        absorbers: c.pick(a.absorbers, "absorbers", d.absorbers)?,
        npairs: g.samples.unwrap_or(d.npairs),
        quantum_npairs: c.pick(a.quantum_samples, "quantum-samples", d.quantum_npairs)?,
        restarts: c.pick(a.restarts, "restarts", d.restarts)?,
    };
    let report = verify::run_suite(a.suite, &cfg)?;
    let path = g.out_or(&format!("{}_report.json", a.suite.name()));
    format::write_text(&path, &report.to_json())?;
    for p in &report.properties {
        println!("{} {} statistic={} threshold={}", if p.pass { "PASS" } else { "FAIL" }, p.name, p.statistic, p.threshold);
    }
    eprintln!("wrote {}", path.display());
    if report.all_pass() {
        Ok(())
    } else {
        Err(CliError::PropertyFailure(report.failures()))
    }
}

fn run_heatmap(g: &Globals, a: HeatmapArgs) -> Result<()> {
    let data = format::read_csv(&a.data)?;
    let spec = HeatmapSpec { x: a.x, y: a.y, value: a.value, bins: g.config.pick(a.bins, "bins", 64)? };
    let (table, svg) = heatmap::emit_heatmap(&data, &spec)?;
    let path = g.out_or("heatmap.svg");
    format::write_text(&path, &svg)?;
    eprintln!("wrote {} ({} filled bins)", path.display(), table.filled());
    Ok(())
}
