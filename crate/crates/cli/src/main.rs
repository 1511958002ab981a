use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use randcomplex::collapse::{collapse_phases, collapse_to_core, ShadowPeeler};
use randcomplex::complex::Complex;
use randcomplex::homology::{
    betti_via_core, classify_regime_with, r_shadow, rank_of_complex, FieldChoice,
};
use randcomplex::sampling::{sample, Density, Model, SampleConfig};
use randcomplex::stats::{poisson_goodness_of_fit, MeanAccumulator};
use randcomplex::sweep::{self, parse_field, run_sweep, Statistic, SweepConfig};
use randcomplex::thresholds::{curves, rooted_degree_rate, t_k, threshold_table, DEFAULT_TOL};
use randcomplex::tree::{delta_k_samples, population_dynamics_x};

#[derive(Parser, Debug)]
#[command(
    name = "randcomplex",
    version,
    about = "Random simplicial complexes: sampling, collapse, homology and threshold numerics"
)]
struct Cli {
    /// Base seed for every random choice (default 0).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
    /// Plain complex format: header `n d`, one face per line.
    Text,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a complex.
    Sample(SampleArgs),
    /// Collapse a complex to its core.
    Collapse(CollapseArgs),
    /// Top Betti number of a complex.
    Betti(BettiArgs),
    /// Sizes of the real and collapse shadows of a complex.
    Rshadow(ShadowArgs),
    /// Threshold constants per dimension.
    Thresholds(ThresholdArgs),
    /// Limiting densities on a grid of c.
    Curves(CurveArgs),
    /// Poisson tree experiments: rooted degree law and spectral atom.
    Tree(TreeArgs),
    /// Monte Carlo sweep against theory.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[arg(long)]
    n: u32,
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Density with p = c/n.
    #[arg(long, conflicts_with = "p")]
    c: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    /// Exact face count; switches to the uniform model.
    #[arg(long)]
    m: Option<u64>,
    #[arg(long, value_enum, default_value_t = ModelArg::Binomial)]
    model: ModelArg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Binomial,
    UniformM,
    Evolution,
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Complex file, JSON or plain text; `-` reads stdin.
    #[arg(long = "in")]
    input: PathBuf,
}

#[derive(Args, Debug)]
struct CollapseArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Stop after this many phases instead of collapsing to the core.
    #[arg(long)]
    phases: Option<usize>,
    /// Also write the resulting complex here (JSON).
    #[arg(long)]
    core_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BettiArgs {
    #[command(flatten)]
    input: InputArgs,
    /// `rational`, `prime` or `prime:<q>`.
    #[arg(long, default_value = "prime", value_parser = field_arg)]
    field: FieldChoice,
    /// Compute on the core; the answer is the same.
    #[arg(long)]
    via_core: bool,
    /// Also report the homological regime.
    #[arg(long)]
    regime: bool,
}

#[derive(Args, Debug)]
struct ShadowArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value = "prime", value_parser = field_arg)]
    field: FieldChoice,
}

#[derive(Args, Debug)]
struct ThresholdArgs {
    /// Comma-separated dimensions.
    #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,10,100,1000")]
    d: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
}

#[derive(Args, Debug)]
struct CurveArgs {
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 0.5)]
    c_min: f64,
    #[arg(long, default_value_t = 5.0)]
    c_max: f64,
    #[arg(long, default_value_t = 0.05)]
    step: f64,
}

#[derive(Args, Debug)]
struct TreeArgs {
    #[arg(long, default_value_t = 3.0)]
    c: f64,
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Rooted collapse phases.
    #[arg(long, default_value_t = 6)]
    k: usize,
    #[arg(long, default_value_t = 100_000)]
    trials: usize,
    /// Run population dynamics for the spectral atom instead.
    #[arg(long)]
    population: bool,
    #[arg(long, default_value_t = 10_000)]
    pool: usize,
    #[arg(long, default_value_t = 200)]
    generations: usize,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Flat `key = value` file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    d: Option<usize>,
    /// Comma-separated vertex counts.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<u32>>,
    #[arg(long)]
    c_min: Option<f64>,
    #[arg(long)]
    c_max: Option<f64>,
    #[arg(long)]
    c_step: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated statistics.
    #[arg(long, value_delimiter = ',')]
    stats: Option<Vec<Statistic>>,
    #[arg(long, value_parser = field_arg)]
    field: Option<FieldChoice>,
    #[arg(long)]
    k: Option<usize>,
    /// Run statistics above their size cap.
    #[arg(long)]
    force: bool,
}

fn field_arg(s: &str) -> std::result::Result<FieldChoice, String> {
    parse_field(s).map_err(|e| e.to_string())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("thread pool")?;
    }
    let out = cli.out.as_deref();
    let seed = cli.seed.unwrap_or(0);
    let format = cli.format;
    match cli.command {
        Command::Sample(a) => cmd_sample(a, seed, out, format),
        Command::Collapse(a) => cmd_collapse(a, out),
        Command::Betti(a) => cmd_betti(a, out),
        Command::Rshadow(a) => cmd_rshadow(a, out),
        Command::Thresholds(a) => cmd_thresholds(a, out, format),
        Command::Curves(a) => cmd_curves(a, out, format),
        Command::Tree(a) => cmd_tree(a, seed, out),
        Command::Sweep(a) => cmd_sweep(a, cli.seed, out, format),
    }
}

fn writer(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot write {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut w = writer(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_table<T: Serialize>(
    rows: &[T],
    out: Option<&Path>,
    format: Option<OutputFormat>,
) -> Result<()> {
    match format.unwrap_or(OutputFormat::Csv) {
        OutputFormat::Json => write_json(&rows, out),
        OutputFormat::Csv => {
            let mut wr = csv::Writer::from_writer(writer(out)?);
            for r in rows {
                wr.serialize(r)?;
            }
            wr.flush()?;
            Ok(())
        }
        OutputFormat::Text => bail!("text output is only for complexes"),
    }
}

fn read_complex(path: &Path) -> Result<Complex> {
    let mut text = String::new();
    if path == Path::new("-") {
        io::stdin().read_to_string(&mut text)?;
    } else {
        BufReader::new(
            File::open(path).with_context(|| format!("cannot read {}", path.display()))?,
        )
        .read_to_string(&mut text)?;
    }
    let y = if text.trim_start().starts_with('{') {
        Complex::from_json(&text)?
    } else {
        Complex::read_text(text.as_bytes())?
    };
    Ok(y)
}

fn cmd_sample(
    a: SampleArgs,
    seed: u64,
    out: Option<&Path>,
    format: Option<OutputFormat>,
) -> Result<()> {
    let density = match (a.c, a.p) {
        (Some(c), _) => Density::C(c),
        (None, Some(p)) => Density::P(p),
        (None, None) if a.m.is_some() => Density::P(0.0),
        (None, None) => bail!("one of --c, --p or --m is required"),
    };
    let model = match (a.model, a.m) {
        (ModelArg::Binomial, Some(_)) | (ModelArg::UniformM, _) => Model::UniformM,
        (ModelArg::Binomial, None) => Model::Binomial,
        (ModelArg::Evolution, _) => Model::Evolution,
    };
    if model != Model::Binomial && a.m.is_none() {
        bail!("--m is required for the uniform and evolution models");
    }
    let cfg = SampleConfig {
        n: a.n,
        d: a.d,
        density,
        seed,
        model,
    };
    let y = sample(&cfg, a.m)?;
    match format.unwrap_or(OutputFormat::Json) {
        OutputFormat::Text => {
            let mut w = writer(out)?;
            y.write_text(&mut w)?;
            w.flush()?;
        }
        OutputFormat::Json => {
            let mut w = writer(out)?;
            writeln!(w, "{}", y.to_json()?)?;
            w.flush()?;
        }
        OutputFormat::Csv => bail!("complexes are written as json or text"),
    }
    Ok(())
}

#[derive(Serialize)]
struct CollapseReport {
    f_d: usize,
    f_dminus1: u64,
    phases_used: Option<usize>,
    result_f_d: usize,
    result_f_dminus1: u64,
    is_collapsible: bool,
    is_gravel: Option<bool>,
    gravel_components: Option<Vec<Vec<u32>>>,
}

fn cmd_collapse(a: CollapseArgs, out: Option<&Path>) -> Result<()> {
    let y = read_complex(&a.input.input)?;
    let (report, result) = match a.phases {
        Some(k) => {
            let r = collapse_phases(&y, k);
            let report = CollapseReport {
                f_d: y.f_d(),
                f_dminus1: y.f_dminus1(),
                phases_used: None,
                result_f_d: r.f_d(),
                result_f_dminus1: r.f_dminus1(),
                is_collapsible: r.f_d() == 0,
                is_gravel: None,
                gravel_components: None,
            };
            (report, r)
        }
        None => {
            let core = collapse_to_core(&y);
            let report = CollapseReport {
                f_d: y.f_d(),
                f_dminus1: y.f_dminus1(),
                phases_used: Some(core.phases_used),
                result_f_d: core.f_d(),
                result_f_dminus1: core.core_dminus1_count,
                is_collapsible: core.is_collapsible,
                is_gravel: Some(core.is_gravel),
                gravel_components: Some(core.gravel_components),
            };
            (report, core.core)
        }
    };
    if let Some(p) = &a.core_out {
        std::fs::write(p, result.to_json()?)
            .with_context(|| format!("cannot write {}", p.display()))?;
    }
    write_json(&report, out)
}

#[derive(Serialize)]
struct BettiReport {
    betti: usize,
    rank: usize,
    f_d: usize,
    f_dminus1: u64,
    method: randcomplex::homology::RankMethod,
    #[serde(skip_serializing_if = "Option::is_none")]
    regime: Option<randcomplex::homology::Regime>,
}

fn cmd_betti(a: BettiArgs, out: Option<&Path>) -> Result<()> {
    let y = read_complex(&a.input.input)?;
    let r = rank_of_complex(&y, a.field)?;
    let betti = if a.via_core {
        betti_via_core(&y, a.field)?
    } else {
        r.kernel_dim
    };
    let regime = if a.regime {
        Some(classify_regime_with(&y, a.field)?)
    } else {
        None
    };
    write_json(
        &BettiReport {
            betti,
            rank: r.rank,
            f_d: y.f_d(),
            f_dminus1: y.f_dminus1(),
            method: r.method,
            regime,
        },
        out,
    )
}

#[derive(Serialize)]
struct ShadowReport {
    shadow_size: usize,
    c_shadow_size: usize,
    candidates: u64,
}

fn cmd_rshadow(a: ShadowArgs, out: Option<&Path>) -> Result<()> {
    let y = read_complex(&a.input.input)?;
    let report = ShadowReport {
        shadow_size: r_shadow(&y, a.field)?.len(),
        c_shadow_size: ShadowPeeler::new(&y).shadow_size(),
        candidates: y.d_face_count() - y.f_d() as u64,
    };
    write_json(&report, out)
}

fn cmd_thresholds(
    a: ThresholdArgs,
    out: Option<&Path>,
    format: Option<OutputFormat>,
) -> Result<()> {
    let rows =
        a.d.iter()
            .map(|&d| threshold_table(d, a.tol))
            .collect::<randcomplex::error::Result<Vec<_>>>()?;
    write_table(&rows, out, format)
}

fn cmd_curves(a: CurveArgs, out: Option<&Path>, format: Option<OutputFormat>) -> Result<()> {
    write_table(&curves(a.d, a.c_min, a.c_max, a.step)?, out, format)
}

#[derive(Serialize)]
struct DeltaReport {
    c: f64,
    d: usize,
    k: usize,
    trials: usize,
    /// `t_{k-1}`, the collapse probability one phase earlier.
    t_prev: f64,
    poisson_rate: f64,
    mean: f64,
    stderr: f64,
    histogram: Vec<u64>,
    chi_square: f64,
    p_value: f64,
}

fn cmd_tree(a: TreeArgs, seed: u64, out: Option<&Path>) -> Result<()> {
    if a.population {
        let est = population_dynamics_x(a.c, a.d, a.pool, a.generations, seed)?;
        return write_json(&est, out);
    }
    if a.trials == 0 || a.k == 0 {
        bail!("need trials >= 1 and k >= 1");
    }
    let samples = delta_k_samples(a.c, a.d, a.k, a.trials, seed);
    let top = samples.iter().copied().max().unwrap_or(0) as usize;
    let mut histogram = vec![0u64; top + 1];
    for &s in &samples {
        histogram[s as usize] += 1;
    }
    let acc: MeanAccumulator = samples.iter().map(|&s| s as f64).collect();
    let rate = rooted_degree_rate(a.c, a.d, a.k);
    let test = poisson_goodness_of_fit(&histogram, rate)?;
    write_json(
        &DeltaReport {
            c: a.c,
            d: a.d,
            k: a.k,
            trials: a.trials,
            t_prev: t_k(a.c, a.d, a.k as i64 - 1),
            poisson_rate: rate,
            mean: acc.mean(),
            stderr: acc.std_err(),
            histogram,
            chi_square: test.statistic,
            p_value: test.p_value,
        },
        out,
    )
}

fn cmd_sweep(
    a: SweepArgs,
    seed: Option<u64>,
    out: Option<&Path>,
    format: Option<OutputFormat>,
) -> Result<()> {
    let mut cfg = SweepConfig::default();
    if let Some(p) = &a.config {
        let text =
            std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
        cfg.apply_kv(&text)?;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(d) = a.d {
        cfg.d = d;
    }
    if let Some(ns) = a.n {
        cfg.ns = ns;
    }
    if let Some(c) = a.c_min {
        cfg.c_min = c;
        if a.c_max.is_none() && cfg.c_max < c {
            cfg.c_max = c;
        }
    }
    if let Some(c) = a.c_max {
        cfg.c_max = c;
    }
    if let Some(s) = a.c_step {
        cfg.c_step = s;
    }
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(s) = a.stats {
        cfg.stats = s;
    }
    if let Some(f) = a.field {
        cfg.field = f;
    }
    if let Some(k) = a.k {
        cfg.k = k;
    }
    cfg.force |= a.force;
    if let Some(p) = out {
        cfg.out = Some(p.to_path_buf());
    }
    match format {
        Some(OutputFormat::Csv) => cfg.format = sweep::Format::Csv,
        Some(OutputFormat::Json) => cfg.format = sweep::Format::Json,
        Some(OutputFormat::Text) => bail!("sweeps are written as csv or json"),
        None => {}
    }
    cfg.validate()?;
    let rows = run_sweep(&cfg)?;
    match &cfg.out {
        Some(p) => sweep::emit_to_path(&rows, cfg.format, p)?,
        None => {
            let mut w = writer(None)?;
            sweep::emit(&rows, cfg.format, &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}
