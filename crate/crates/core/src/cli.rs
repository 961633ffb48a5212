use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand};

use x3d_forge::arch::{instantiate, preset, ArchConfig, ArchSpec, ExpansionFactors};
use x3d_forge::config::{resolve_threads, RunConfig, RunTarget};
use x3d_forge::cost::{inference_cost, report, InferenceStrategy};
use x3d_forge::criterion::CriterionSpec;
use x3d_forge::expansion::{
    curve_points, forward_expand_with_hook, select_instance, write_curve_csv, ArchCost, ExpansionHook, ExpansionSettings,
    ExpansionStep, Regime, SelectionSource, Trajectory,
};
use x3d_forge::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "x3d-forge", version, about = "Instantiate, cost and expand X3D-style video networks")]
pub struct Cli {
    /// Worker threads (overrides X3D_FORGE_THREADS).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the layer-by-layer spec of a preset or factor set.
    Instantiate(InstantiateArgs),
    /// Report multiply-adds and parameters.
    Cost(CostArgs),
    /// Run greedy expansion from a run configuration.
    Expand(ExpandArgs),
    /// Select the instance for a cost bound from a saved trajectory.
    Contract(ContractArgs),
    /// Score a factor set with a criterion.
    Eval(EvalArgs),
    /// Export plot-ready trade-off points from a saved trajectory.
    Curve(CurveArgs),
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["preset", "factors"])))]
pub struct FactorSource {
    /// Preset name: X2D, X3D-XS, X3D-S, X3D-M or X3D-XL.
    #[arg(long)]
    pub preset: Option<String>,
    /// Comma-separated overrides such as `gamma_b=2.25,gamma_t=4`.
    #[arg(long)]
    pub factors: Option<String>,
}

impl FactorSource {
    fn resolve(&self) -> Result<ExpansionFactors> {
        match (&self.preset, &self.factors) {
            (Some(p), _) => preset(p),
            (None, Some(f)) => ExpansionFactors::parse_overrides(f),
            (None, None) => Ok(ExpansionFactors::unit()),
        }
    }
}

#[derive(Debug, Args)]
pub struct InstantiateArgs {
    #[command(flatten)]
    pub source: FactorSource,
    /// Architecture options as TOML.
    #[arg(long)]
    pub arch_config: Option<PathBuf>,
    /// Spec output file; stdout when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("model").required(true).args(["preset", "factors", "spec"])))]
pub struct CostArgs {
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub factors: Option<String>,
    /// Spec file written by `instantiate`.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub arch_config: Option<PathBuf>,
    /// Test-time view strategy: `center` or `lcr`.
    #[arg(long)]
    pub strategy: Option<InferenceStrategy>,
    /// Clips per video for the inference cost.
    #[arg(long, default_value_t = 1)]
    pub clips: u64,
    /// `table`, `csv` or `toml`.
    #[arg(long, default_value = "table")]
    pub format: String,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExpandArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Suppress per-step progress on stderr.
    #[arg(long, short)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("bound").required(true).args(["regime", "target_gflops"])))]
pub struct ContractArgs {
    #[arg(long)]
    pub trajectory: PathBuf,
    /// XS, S, M, L, XL or XXL.
    #[arg(long)]
    pub regime: Option<Regime>,
    #[arg(long)]
    pub target_gflops: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub epsilon: f64,
    #[arg(long)]
    pub arch_config: Option<PathBuf>,
    /// Spec output file for the selected instance.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub source: FactorSource,
    /// Criterion spec (TOML); the analytic oracle when absent.
    #[arg(long)]
    pub criterion: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub arch_config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long)]
    pub trajectory: PathBuf,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    let io = |e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    fs::write(path, text).map_err(io)
}

/// Writes to stdout; a closed pipe ends output quietly.
fn out(text: &str) -> Result<()> {
    let mut o = std::io::stdout().lock();
    match o.write_all(text.as_bytes()).and_then(|()| o.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::Io {
            path: "<stdout>".into(),
            source: e,
        }),
        _ => Ok(()),
    }
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => write(p, text),
        None => out(text),
    }
}

fn arch_config(path: Option<&Path>) -> Result<ArchConfig> {
    match path {
        Some(p) => {
            let c: ArchConfig = toml::from_str(&read(p)?)?;
            c.validate()?;
            Ok(c)
        }
        None => Ok(ArchConfig::default()),
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

pub fn summary(spec: &ArchSpec) -> String {
    let i = &spec.input;
    format!(
        "input {}x{}^2 (frame stride {})\nconv1 width {}\nstage widths [{}]\nbottleneck widths [{}]\ndepths [{}]\nconv5 width {}\n",
        i.frames,
        i.resolution,
        i.stride,
        spec.conv1.width,
        join(&spec.stage_widths()),
        join(&spec.bottleneck_widths()),
        join(&spec.depths()),
        spec.head.conv5_width
    )
}

fn cmd_instantiate(a: &InstantiateArgs) -> Result<()> {
    let spec = instantiate(&a.source.resolve()?, &arch_config(a.arch_config.as_deref())?)?;
    let text = spec.to_toml()?;
    match &a.output {
        Some(p) => {
            write(p, &text)?;
            out(&summary(&spec))
        }
        None => {
            eprint!("{}", summary(&spec));
            out(&text)
        }
    }
}

fn cmd_cost(a: &CostArgs) -> Result<()> {
    let spec = match (&a.spec, &a.preset, &a.factors) {
        (Some(p), _, _) => ArchSpec::from_toml(&read(p)?)?,
        (None, Some(name), _) => instantiate(&preset(name)?, &arch_config(a.arch_config.as_deref())?)?,
        (None, None, Some(list)) => {
            instantiate(&ExpansionFactors::parse_overrides(list)?, &arch_config(a.arch_config.as_deref())?)?
        }
        (None, None, None) => unreachable!("clap requires a model source"),
    };
    let r = report(&spec)?;
    let mut text = match a.format.as_str() {
        "table" => r.render_table(),
        "toml" => r.to_toml()?,
        "csv" => {
            let mut buf = Vec::new();
            r.write_csv(&mut buf)?;
            String::from_utf8(buf).expect("csv output is UTF-8")
        }
        other => return Err(Error::InvalidConfig(format!("unknown format `{other}` (table, csv or toml)"))),
    };
    if let Some(strategy) = a.strategy {
        let c = inference_cost(&spec, strategy, a.clips)?;
        let line = format!(
            "inference crop {} per_view {} ({:.4}G) views {} total {} ({:.4}G)\n",
            c.crop,
            c.per_view_flops,
            c.per_view_flops as f64 / 1e9,
            c.views,
            c.total,
            c.total as f64 / 1e9
        );
        match a.format.as_str() {
            "table" => text.push_str(&line),
            "toml" => {
                text.push_str("\n[inference]\n");
                text.push_str(&toml::to_string(&c)?);
            }
            _ => eprint!("{line}"),
        }
    }
    emit(a.output.as_deref(), &text)
}

struct Progress {
    quiet: bool,
}

impl ExpansionHook for Progress {
    fn on_step(&mut self, s: &ExpansionStep, rejected: &[(x3d_forge::arch::Axis, String)]) {
        if self.quiet {
            return;
        }
        eprintln!(
            "step {:>2}: {:<10} knob {:<10} {:>14} madds {:>12} params score {:.6}",
            s.index, s.axis, s.knob, s.cost_flops, s.params, s.score
        );
        for (axis, why) in rejected {
            eprintln!("         {axis} skipped: {why}");
        }
    }
}

fn cmd_expand(a: &ExpandArgs, threads: Option<usize>) -> Result<()> {
    let cfg = RunConfig::load(&a.config)?;
    init_threads(threads, cfg.threads)?;
    let start = cfg.start_factors()?;
    let target = cfg.target()?;
    let criterion = cfg.criterion.build(&cfg.arch)?;
    let cost = ArchCost::new(cfg.arch.clone());
    let t = forward_expand_with_hook(
        &start,
        target.flops(),
        criterion.as_ref(),
        &cost,
        &cfg.settings,
        &mut Progress { quiet: a.quiet },
    )?;
    let selected = match target {
        RunTarget::Regime(r) => select_instance(&t, r.bound_flops(), &cost, cfg.settings.epsilon)?,
        RunTarget::Flops(_) => x3d_forge::expansion::Selection {
            factors: t.final_factors().clone(),
            cost: t.final_cost(),
            source: SelectionSource::Kept { point: t.steps.len() },
        },
    };
    if let Some(p) = &cfg.output.trajectory {
        write(p, &t.to_csv_string()?)?;
    }
    if let Some(p) = &cfg.output.curve {
        let mut buf = Vec::new();
        write_curve_csv(&curve_points(&t), &mut buf)?;
        write(p, &String::from_utf8(buf).expect("csv output is UTF-8"))?;
    }
    let spec = instantiate(&selected.factors, &cfg.arch)?;
    if let Some(p) = &cfg.output.spec {
        write(p, &spec.to_toml()?)?;
    }
    out(&format!(
        "steps {} axes [{}]\nfinal cost {} ({:.4}G)\n{}{}",
        t.steps.len(),
        join(&t.axes()),
        t.final_cost(),
        t.final_cost() as f64 / 1e9,
        selection(&selected.factors, selected.cost, &selected.source),
        summary(&spec)
    ))
}

fn selection(f: &ExpansionFactors, cost: u64, source: &SelectionSource) -> String {
    let how = match source {
        SelectionSource::Kept { point } => format!("point {point}"),
        SelectionSource::Contracted { point, knob } => format!("step after point {point} contracted to knob {knob}"),
    };
    format!(
        "selected {how}: cost {cost} ({:.4}G)\nfactors gamma_tau={} gamma_t={} gamma_s={} gamma_w={} gamma_b={} gamma_d={}\n",
        cost as f64 / 1e9,
        f.gamma_tau,
        f.gamma_t,
        f.gamma_s,
        f.gamma_w,
        f.gamma_b,
        f.gamma_d
    )
}

fn load_trajectory(path: &Path) -> Result<Trajectory> {
    Trajectory::from_csv(read(path)?.as_bytes(), ExpansionSettings::default(), path.display().to_string())
}

fn cmd_contract(a: &ContractArgs) -> Result<()> {
    let t = load_trajectory(&a.trajectory)?;
    let bound = match (a.regime, a.target_gflops) {
        (Some(r), _) => r.bound_flops(),
        (None, Some(g)) if g > 0.0 => (g * 1e9).round() as u64,
        (None, g) => return Err(Error::InvalidConfig(format!("target_gflops must be positive, got {g:?}"))),
    };
    let arch = arch_config(a.arch_config.as_deref())?;
    let s = select_instance(&t, bound, &ArchCost::new(arch.clone()), a.epsilon)?;
    let spec = instantiate(&s.factors, &arch)?;
    if let Some(p) = &a.output {
        write(p, &spec.to_toml()?)?;
    }
    out(&selection(&s.factors, s.cost, &s.source))
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let mut spec: CriterionSpec = match &a.criterion {
        Some(p) => {
            let mut s: CriterionSpec = toml::from_str(&read(p)?)?;
            let base = p.parent().unwrap_or(Path::new(""));
            if let Some(t) = s.table.as_mut().filter(|t| t.is_relative()) {
                *t = base.join(&*t);
            }
            s
        }
        None => CriterionSpec::default(),
    };
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    let criterion = spec.build(&arch_config(a.arch_config.as_deref())?)?;
    let score = criterion.score(&a.source.resolve()?)?;
    out(&format!("{} {score:.6}\n", criterion.id()))
}

fn cmd_curve(a: &CurveArgs) -> Result<()> {
    let t = load_trajectory(&a.trajectory)?;
    let mut buf = Vec::new();
    write_curve_csv(&curve_points(&t), &mut buf)?;
    emit(a.output.as_deref(), &String::from_utf8(buf).expect("csv output is UTF-8"))
}

fn init_threads(explicit: Option<usize>, configured: Option<usize>) -> Result<()> {
    if explicit == Some(0) {
        return Err(Error::InvalidConfig("--threads must be positive".into()));
    }
    let n = resolve_threads(explicit, configured)?;
    // a second initialization only happens in-process and is harmless
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Expand(a) => cmd_expand(a, cli.threads),
        other => {
            init_threads(cli.threads, None)?;
            match other {
                Command::Instantiate(a) => cmd_instantiate(a),
                Command::Cost(a) => cmd_cost(a),
                Command::Contract(a) => cmd_contract(a),
                Command::Eval(a) => cmd_eval(a),
                Command::Curve(a) => cmd_curve(a),
                Command::Expand(_) => unreachable!(),
            }
        }
    }
    .and_then(|()| std::io::stdout().flush().map_err(|e| Error::Io {
        path: "<stdout>".into(),
        source: e,
    }))
}

/// 1 for usage and file-access problems, 2 for infeasible or invalid inputs.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } => 1,
        _ => 2,
    }
}
