use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use feedsim::engine::{self, tuning_grid, ControllerSpec, RunResult, SweepMetric};
use feedsim::gpc::{model_from_axis, stability_margins, synthesize_rst, GpcTuning};
use feedsim::identification::{add_noise, identify_axis, Stage};
use feedsim::io::profile::bundled_names;
use feedsim::io::report::{
    comparison_to_string, display_trace, ident_to_string, metrics_to_string, sweep_to_csv,
};
use feedsim::io::rst_file::{write_rst, ModelInfo, RstExport};
use feedsim::io::scenario_file::{load_scenario, ScenarioFile};
use feedsim::io::{load_profile, profile_to_string, read_trace, write_trace, MachineProfile};
use feedsim::params::validate_profile_for_step;
use feedsim::trace::split_channel_name;
use feedsim::{AxisKind, Error, Trace};

#[derive(Parser)]
#[command(name = "feedsim", version, about = "Machine-tool feed-drive simulator")]
struct Cli {
    /// Plant integration step, µs (overrides scenario files that do not set it).
    #[arg(long, global = true)]
    plant_step: Option<f64>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Seed of the noise-injection utilities.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Print nothing but errors.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ControllerKind {
    Cascade,
    Rst,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    MaxTracking,
    RmsTracking,
    MaxRadial,
}

#[derive(Args, Clone)]
struct TuningArgs {
    #[arg(long)]
    n1: Option<usize>,
    #[arg(long)]
    n2: Option<usize>,
    #[arg(long)]
    nu: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
}

impl TuningArgs {
    fn tuning(&self) -> GpcTuning {
        let d = GpcTuning::default();
        GpcTuning {
            n1: self.n1.unwrap_or(d.n1),
            n2: self.n2.unwrap_or(d.n2),
            nu: self.nu.unwrap_or(d.nu),
            lambda: self.lambda.unwrap_or(d.lambda),
        }
    }

    fn given(&self) -> bool {
        self.n1.is_some() || self.n2.is_some() || self.nu.is_some() || self.lambda.is_some()
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario; writes the trace CSV and a metrics summary.
    Simulate {
        scenario: PathBuf,
        /// Replace the scenario's controllers on every axis.
        #[arg(long, value_enum)]
        controller: Option<ControllerKind>,
        #[command(flatten)]
        tuning: TuningArgs,
    },
    /// Identify axis parameters from recorded traces; writes a profile and a report.
    Identify {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        #[arg(long, default_value = "all")]
        stage: Stage,
        #[arg(long, default_value = "X")]
        axis: String,
        /// Profile supplying the starting values and the non-identified constants.
        #[arg(long, default_value = "mikron_ucp710")]
        profile: String,
        /// Add Gaussian noise of this standard deviation (A) to the measured current.
        #[arg(long)]
        current_noise: Option<f64>,
    },
    /// Synthesize the RST controller of one axis; writes the RST export.
    SynthesizeRst {
        /// Profile name or path.
        profile: String,
        #[arg(long, default_value = "X")]
        axis: String,
        #[command(flatten)]
        tuning: TuningArgs,
    },
    /// Run the scenario with RST over a tuning grid; writes the ranked table.
    Sweep {
        scenario: PathBuf,
        /// Lists per knob, e.g. "n1=1 n2=5,10,15 nu=1,2,3 lambda=0.1,1,10".
        #[arg(long, default_value = "n2=5,10,15 nu=1,2,3 lambda=0.1,1,10,100")]
        grid: String,
        #[arg(long, value_enum, default_value = "max-tracking")]
        metric: Metric,
    },
    /// Run cascade and RST on identical setpoints; writes both results and the ratio.
    Compare { scenario: PathBuf },
    /// Bundled machine profiles.
    Profiles {
        #[command(subcommand)]
        action: ProfilesAction,
    },
}

#[derive(Subcommand)]
enum ProfilesAction {
    List,
    Show { name: String },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if cli.quiet {
        "error"
    } else {
        "info"
    }))
    .format_timestamp(None)
    .format_target(false)
    .init();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn say(cli: &Cli, text: &str) {
    if !cli.quiet {
        println!("{text}");
    }
}

fn plant_step(cli: &Cli) -> Result<Option<f64>, Error> {
    match cli.plant_step {
        Some(us) if !(us > 0.0 && us.is_finite()) => Err(Error::Usage(format!(
            "--plant-step must be positive, got {us}"
        ))),
        Some(us) => Ok(Some(us * 1e-6)),
        None => Ok(None),
    }
}

fn check_profile(p: &MachineProfile, axes: &[String], step: f64) -> Result<(), Error> {
    let mut errs = Vec::new();
    for name in axes {
        if let Some(a) = p.axis(name) {
            if let Err(v) = validate_profile_for_step(a, step) {
                errs.extend(v.into_iter().map(|v| (name.clone(), v)));
            }
        }
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(errs))
    }
}

fn scenario(cli: &Cli, path: &Path) -> Result<ScenarioFile, Error> {
    let mut f = load_scenario(path)?;
    if let Some(step) = plant_step(cli)? {
        if !f.plant_step_set {
            f.scenario.options.plant_step = step;
        }
    }
    let s = &f.scenario;
    check_profile(&s.profile, &s.axes(), s.options.plant_step)?;
    Ok(f)
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(feedsim::io::IoError::io(dir, e)))?;
    }
    std::fs::write(path, text).map_err(|e| Error::Io(feedsim::io::IoError::io(path, e)))
}

fn write_run(cli: &Cli, run: &RunResult, stem: &str) -> Result<(), Error> {
    let csv = cli.out_dir.join(format!("{stem}.csv"));
    write_trace(&display_trace(&run.combined_trace()?)?, &csv)?;
    info!("wrote {}", csv.display());
    Ok(())
}

/// Display position unit of a run and its factor from SI.
fn display_scale(run: &RunResult) -> (&'static str, f64) {
    let angular = run.axes[0]
        .trace
        .channel("sp")
        .is_some_and(|c| c.unit.is_angular());
    let unit = if angular {
        AxisKind::Rotary
    } else {
        AxisKind::Linear
    }
    .position_unit();
    (unit.symbol(), 1.0 / unit.to_si())
}

fn execute(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Simulate {
            scenario: path,
            controller,
            tuning,
        } => {
            let mut f = scenario(cli, path)?;
            let s = &mut f.scenario;
            match controller {
                Some(ControllerKind::Cascade) => {
                    *s = s.clone().with_controller(f.compare.0.clone())
                }
                Some(ControllerKind::Rst) => {
                    *s = s
                        .clone()
                        .with_controller(ControllerSpec::Rst(tuning.tuning()))
                }
                None if tuning.given() => {
                    return Err(Error::Usage("tuning flags need --controller rst".into()));
                }
                None => {}
            }
            let run = engine::run(s)?;
            write_run(cli, &run, &s.name)?;
            let metrics = cli.out_dir.join(format!("{}.metrics.toml", s.name));
            write_text(&metrics, &metrics_to_string(&run))?;
            info!("wrote {}", metrics.display());
            for w in run.warnings() {
                log::warn!("{w}");
            }
            let (unit, scale) = display_scale(&run);
            say(
                cli,
                &format!(
                    "{}: max tracking error {:.6} {unit}, rms {:.6} {unit}",
                    s.name,
                    run.metrics.tracking.max * scale,
                    run.metrics.tracking.rms * scale
                ),
            );
            Ok(())
        }
        Command::Identify {
            traces,
            stage,
            axis,
            profile,
            current_noise,
        } => {
            let mut prof = load_profile(profile)?;
            let start = prof
                .axis(axis)
                .ok_or_else(|| {
                    Error::Usage(format!("axis {axis} is not in profile {}", prof.machine))
                })?
                .clone();
            let step = plant_step(cli)?.unwrap_or(feedsim::params::DEFAULT_PLANT_STEP);
            check_profile(&prof, std::slice::from_ref(axis), step)?;
            let mut loaded = Vec::new();
            for (k, path) in traces.iter().enumerate() {
                let mut t = axis_view(&read_trace(path)?, axis)?;
                if let Some(sigma) = current_noise {
                    let name = t
                        .channels()
                        .iter()
                        .find(|c| split_channel_name(&c.name).0 == "smc")
                        .map(|c| c.name.clone())
                        .ok_or_else(|| {
                            Error::Usage(format!(
                                "{}: no smc channel to add noise to",
                                path.display()
                            ))
                        })?;
                    t = add_noise(&t, &name, *sigma, cli.seed.wrapping_add(k as u64))?;
                }
                loaded.push(t);
            }
            let (found, reports) = identify_axis(&loaded, &start, *stage, step)?;
            *prof.axis_mut(axis).expect("axis checked above") = found;
            let out_profile = cli.out_dir.join("identified_profile.toml");
            write_text(&out_profile, &profile_to_string(&prof))?;
            let out_report = cli.out_dir.join(format!("identification_{axis}.toml"));
            write_text(&out_report, &ident_to_string(axis, &reports))?;
            info!(
                "wrote {} and {}",
                out_profile.display(),
                out_report.display()
            );
            for r in &reports {
                let values: Vec<String> = r
                    .values
                    .iter()
                    .map(|(k, v)| format!("{k} = {v:.6e}"))
                    .collect();
                say(
                    cli,
                    &format!(
                        "{}: {} (r² = {:.6})",
                        r.stage,
                        values.join(", "),
                        r.stats.r_squared
                    ),
                );
                for d in &r.diagnostics {
                    log::warn!("{}: {d}", r.stage);
                }
            }
            Ok(())
        }
        Command::SynthesizeRst {
            profile,
            axis,
            tuning,
        } => {
            let prof = load_profile(profile)?;
            let p = prof.axis(axis).ok_or_else(|| {
                Error::Usage(format!("axis {axis} is not in profile {}", prof.machine))
            })?;
            let step = plant_step(cli)?.unwrap_or(feedsim::params::DEFAULT_PLANT_STEP);
            check_profile(&prof, std::slice::from_ref(axis), step)?;
            let m = model_from_axis(p, step)?;
            let t = tuning.tuning();
            let syn = synthesize_rst(&m.model, &t)?;
            let margins = stability_margins(&m.model, &syn.rst);
            let export = RstExport {
                axis: Some(axis.clone()),
                rst: syn.rst,
                tuning: Some(t),
                model: Some(ModelInfo {
                    a: m.model.a().to_vec(),
                    b: m.model.b().to_vec(),
                    tau: m.tau,
                    fit_rms: m.fit_rms,
                }),
                condition: Some(syn.condition),
                margins: Some(margins),
            };
            let out = cli.out_dir.join(format!("rst_{axis}.toml"));
            write_rst(&export, &out)?;
            info!("wrote {}", out.display());
            let fmt = |x: Option<f64>| x.map_or("none".to_string(), |v| format!("{v:.3}"));
            say(
                cli,
                &format!(
                    "{axis}: tau = {:.3} ms, phase margin {} deg, gain margin {}",
                    m.tau * 1e3,
                    fmt(margins.phase_margin),
                    fmt(margins.gain_margin)
                ),
            );
            Ok(())
        }
        Command::Sweep {
            scenario: path,
            grid,
            metric,
        } => {
            let f = scenario(cli, path)?;
            let grid = parse_grid(grid)?;
            let metric = match metric {
                Metric::MaxTracking => SweepMetric::MaxTracking,
                Metric::RmsTracking => SweepMetric::RmsTracking,
                Metric::MaxRadial => SweepMetric::MaxRadial,
            };
            let rows = engine::tuning_sweep(&f.scenario, &grid, metric)?;
            let kind = f
                .scenario
                .profile
                .axis(&f.scenario.axes()[0])
                .map_or(AxisKind::Linear, |a| a.kind);
            let out = cli.out_dir.join(format!("{}.sweep.csv", f.scenario.name));
            write_text(&out, &sweep_to_csv(&rows, metric, kind))?;
            info!("wrote {}", out.display());
            if let Some(best) = rows.first() {
                let t = best.tuning;
                say(
                    cli,
                    &format!(
                        "best: n1 = {}, n2 = {}, nu = {}, lambda = {}",
                        t.n1, t.n2, t.nu, t.lambda
                    ),
                );
            }
            Ok(())
        }
        Command::Compare { scenario: path } => {
            let f = scenario(cli, path)?;
            let c = engine::compare(&f.scenario, f.compare.0.clone(), f.compare.1.clone())?;
            let name = &f.scenario.name;
            let (unit, scale) = display_scale(&c.cascade);
            write_run(cli, &c.cascade, &format!("{name}.cascade"))?;
            write_run(cli, &c.rst, &format!("{name}.rst"))?;
            let out = cli.out_dir.join(format!("{name}.compare.toml"));
            write_text(&out, &comparison_to_string(&c))?;
            info!("wrote {}", out.display());
            say(
                cli,
                &format!(
                    "{name}: cascade max {:.6} {unit}, rst max {:.6} {unit}, ratio {:.4}",
                    c.cascade.metrics.tracking.max * scale,
                    c.rst.metrics.tracking.max * scale,
                    c.ratio
                ),
            );
            Ok(())
        }
        Command::Profiles { action } => match action {
            ProfilesAction::List => {
                for n in bundled_names() {
                    println!("{n}");
                }
                Ok(())
            }
            ProfilesAction::Show { name } => {
                print!("{}", profile_to_string(&load_profile(name)?));
                Ok(())
            }
        },
    }
}

/// Channels of `axis` only, with the axis suffix kept.
fn axis_view(t: &Trace, axis: &str) -> Result<Trace, Error> {
    let mut out = Trace::new(t.dt(), t.t0())?;
    for c in t.channels() {
        match split_channel_name(&c.name).1 {
            None => out.push(&c.name, c.unit, c.data.clone())?,
            Some(a) if a == axis => out.push(&c.name, c.unit, c.data.clone())?,
            Some(_) => {}
        }
    }
    if out.channels().is_empty() {
        return Err(Error::Usage(format!(
            "trace has no channels for axis {axis}"
        )));
    }
    Ok(out)
}

fn parse_grid(spec: &str) -> Result<Vec<GpcTuning>, Error> {
    let d = GpcTuning::default();
    let (mut n1, mut n2, mut nu, mut lambda) = (vec![d.n1], vec![d.n2], vec![d.nu], vec![d.lambda]);
    for item in spec.split([' ', ';']).filter(|s| !s.is_empty()) {
        let (key, values) = item
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("grid item `{item}` is not key=v1,v2,...")))?;
        let bad = |v: &str| Error::Usage(format!("grid value `{v}` for {key} does not parse"));
        let ints = || -> Result<Vec<usize>, Error> {
            values
                .split(',')
                .map(|v| v.parse().map_err(|_| bad(v)))
                .collect()
        };
        match key {
            "n1" => n1 = ints()?,
            "n2" => n2 = ints()?,
            "nu" => nu = ints()?,
            "lambda" => {
                lambda = values
                    .split(',')
                    .map(|v| v.parse().map_err(|_| bad(v)))
                    .collect::<Result<_, _>>()?
            }
            _ => {
                return Err(Error::Usage(format!(
                    "unknown grid key `{key}` (n1, n2, nu, lambda)"
                )))
            }
        }
    }
    Ok(tuning_grid(&n1, &n2, &nu, &lambda))
}
