use std::fs::File;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use hybrid_bem::experiment::{
    self, append_csv, write_csv, write_json, write_plot_data, Curve, ExperimentConfig,
    ExperimentResult, Method, Metric, ProblemKind, SweepAxis,
};
use hybrid_bem::geometry::ElementKind;
use hybrid_bem::{Error, Result};

#[derive(Parser)]
#[command(
    name = "hybrid-bem",
    version,
    about = "Hybrid boundary element / singular function solver for 2-D Laplace problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Run(RunArgs),
    /// Run one experiment per value of a parameter.
    Sweep(SweepArgs),
    /// Run hybrid, BEM and finite elements at the same Dirichlet-segment resolution.
    Compare(RunArgs),
    /// Show the built-in table and figure settings.
    ListPresets,
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON experiment configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Start from a built-in setting (see list-presets).
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, value_parser = parse::<ProblemKind>)]
    problem: Option<ProblemKind>,
    /// JSON domain description for the custom problem.
    #[arg(long)]
    problem_file: Option<PathBuf>,
    #[arg(long, value_parser = parse::<Method>)]
    method: Option<Method>,
    /// Total boundary elements, arcs included.
    #[arg(long)]
    n: Option<usize>,
    /// Elements on the Dirichlet half of the bottom edge; sets every side to twice this.
    #[arg(long)]
    n_gamma5: Option<usize>,
    /// Elements per interface arc.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    r2: Option<f64>,
    #[arg(long)]
    n_alpha: Option<usize>,
    #[arg(long)]
    n_alpha2: Option<usize>,
    #[arg(long, value_parser = parse::<ElementKind>)]
    element_kind: Option<ElementKind>,
    #[arg(long)]
    quadrature_order: Option<usize>,
    /// Fraction of the Dirichlet segment dropped at each end before fitting.
    #[arg(long)]
    exclusion: Option<f64>,
    /// Exponents of the flux fit, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    fit_exponents: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Record wall-clock time per run.
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
struct OutputArgs {
    /// Append CSV rows to this file instead of printing them.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write all results as a JSON array.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    output: OutputArgs,
    #[arg(long, value_parser = parse::<SweepAxis>)]
    axis: Option<SweepAxis>,
    /// Comma-separated axis values; an empty string gives no runs.
    #[arg(long, allow_hyphen_values = true)]
    values: Option<String>,
    /// One curve per method (comma separated).
    #[arg(long, value_delimiter = ',', value_parser = parse::<Method>)]
    methods: Option<Vec<Method>>,
    /// One hybrid curve per expansion size (comma separated).
    #[arg(long, value_delimiter = ',')]
    n_alphas: Option<Vec<usize>>,
    /// Error measure written to the plot files.
    #[arg(long, value_parser = parse::<Metric>)]
    metric: Option<Metric>,
    /// Directory for one two-column (x, E) file per curve.
    #[arg(long)]
    plot_dir: Option<PathBuf>,
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn merge(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (b, o) => *b = o,
    }
}

impl ConfigArgs {
    fn preset(&self) -> Result<Option<experiment::Preset>> {
        self.preset.as_deref().map(experiment::preset).transpose()
    }

    /// File fields, then flags, on top of `base`.
    fn apply(&self, base: &ExperimentConfig) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => {
                let mut value = serde_json::to_value(base)?;
                let text = std::fs::read_to_string(path)?;
                merge(&mut value, serde_json::from_str(&text)?);
                serde_json::from_value(value)?
            }
            None => base.clone(),
        };
        macro_rules! set {
            ($($field:ident),*) => { $(if let Some(v) = self.$field.clone() { c.$field = v; })* };
        }
        set!(problem, method, n, r, r2, n_alpha, element_kind, quadrature_order, seed);
        macro_rules! set_some {
            ($($field:ident),*) => { $(if let Some(v) = self.$field.clone() { c.$field = Some(v); })* };
        }
        set_some!(problem_file, n_gamma5, m, n_alpha2);
        if let Some(e) = self.exclusion {
            c.fit.exclusion = e;
        }
        if let Some(e) = &self.fit_exponents {
            c.fit.exponents = e.clone();
        }
        if self.timings {
            c.timings = true;
        }
        if self.problem_file.is_some() && self.problem.is_none() {
            c.problem = ProblemKind::Custom;
        }
        Ok(c)
    }

    fn resolve(&self) -> Result<ExperimentConfig> {
        let base = self.preset()?.map(|p| p.config).unwrap_or_default();
        self.apply(&base)
    }
}

fn emit(results: &[ExperimentResult], out: &OutputArgs) -> Result<()> {
    match &out.output {
        Some(path) => append_csv(path, results)?,
        None => write_csv(io::stdout().lock(), results)?,
    }
    if let Some(path) = &out.json {
        write_json(BufWriter::new(File::create(path)?), results)?;
    }
    Ok(())
}

fn parse_values(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("bad sweep value {s:?}")))
        })
        .collect()
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let preset = args.config.preset()?;
    let axis = args
        .axis
        .or_else(|| preset.as_ref().and_then(|p| p.axis))
        .ok_or_else(|| Error::InvalidParameter("--axis is required without a sweeping preset".into()))?;
    let values = match &args.values {
        Some(text) => parse_values(text)?,
        None => preset.as_ref().map(|p| p.values.clone()).unwrap_or_default(),
    };
    let base = args.config.resolve()?;
    let curves: Vec<Curve> = match (&preset, &args.methods, &args.n_alphas) {
        (Some(p), None, None) => p
            .curves
            .iter()
            .map(|c| {
                Ok(Curve {
                    label: c.label.clone(),
                    config: args.config.apply(&c.config)?,
                })
            })
            .collect::<Result<_>>()?,
        _ => {
            let methods = args.methods.clone().unwrap_or_else(|| vec![base.method]);
            let n_alphas = args.n_alphas.clone().unwrap_or_else(|| vec![base.n_alpha]);
            let mut curves = Vec::new();
            for &method in &methods {
                let sizes: &[usize] = if method == Method::Hybrid { &n_alphas } else { &n_alphas[..1] };
                for &n_alpha in sizes {
                    curves.push(Curve::new(ExperimentConfig {
                        method,
                        n_alpha,
                        ..base.clone()
                    }));
                }
            }
            curves
        }
    };
    let metric = args
        .metric
        .or_else(|| preset.as_ref().map(|p| p.metric))
        .unwrap_or_else(|| axis.default_metric());

    let swept = experiment::sweep(&curves, axis, &values);
    let rows: Vec<ExperimentResult> = swept
        .iter()
        .flat_map(|c| c.points.iter().map(|p| p.result.clone()))
        .collect();
    emit(&rows, &args.output)?;
    if let Some(dir) = &args.plot_dir {
        std::fs::create_dir_all(dir)?;
        for curve in &swept {
            let path = dir.join(format!("{}.csv", curve.label));
            write_plot_data(BufWriter::new(File::create(&path)?), &curve.plot_data(metric))?;
        }
    }
    Ok(())
}

fn list_presets() {
    for p in experiment::presets() {
        println!("{:<8} {}", p.name, p.description);
        if let Some(axis) = p.axis {
            let values: Vec<String> = p.values.iter().map(f64::to_string).collect();
            println!("{:<8} sweep {axis}: {}", "", values.join(","));
        }
        let labels: Vec<&str> = p.curves.iter().map(|c| c.label.as_str()).collect();
        println!("{:<8} curves: {}", "", labels.join(" "));
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let result = experiment::run(&args.config.resolve()?)?;
            emit(&[result], &args.output)
        }
        Command::Compare(args) => emit(&experiment::compare(&args.config.resolve()?), &args.output),
        Command::Sweep(args) => sweep(&args),
        Command::ListPresets => {
            list_presets();
            Ok(())
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
