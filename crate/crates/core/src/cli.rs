//! Command-line front end. [`run_command`] is the whole program; the binary
//! only forwards its arguments.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::access::{accessibility_loss, compute_accessibility, format_loss_csv, format_zone_loss_csv};
use crate::climate::{ClimateScenario, ScenarioId};
use crate::env::{format_trajectory, AdaptationAction, AdaptationEnv, EnvParams, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::flood::FloodModel;
use crate::io::ascii_grid::format_ascii_grid;
use crate::io::bundle::{bundle_model, load_bundle, render_synth_bundle, write_files, Bundle};
use crate::io::pgm::format_pgm;
use crate::ppo::{
    evaluate_policy, format_training_log, make_baseline, paired_difference, train_with, Agent, BaselineKind, Checkpoint,
    Environment, EvalSummary, PpoConfig,
};
use crate::raster::DEFAULT_NODATA;
use crate::synth::SynthCitySpec;
use crate::transport::map_depths_to_edges;
use crate::wellbeing::{fit_wellbeing, read_survey, WellbeingModel};

/// Rainfall amounts used when `--rain` is absent.
pub const DEFAULT_RAIN_MM: [f64; 4] = [0.0, 10.0, 50.0, 100.0];
pub const DEFAULT_OUT: &str = "pathways-out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub episodes: usize,
    /// Discount for reported returns; the PPO discount when absent.
    pub gamma: Option<f64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            episodes: 100,
            gamma: None,
        }
    }
}

/// Experiment description. Relative paths resolve against the file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub bundle: Option<PathBuf>,
    /// Scenario files replacing the bundle's own.
    pub scenarios: Vec<PathBuf>,
    pub wellbeing_model: Option<PathBuf>,
    pub survey: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub output: Option<PathBuf>,
    /// Global seed; also used for PPO and the city generator.
    pub seed: u64,
    /// Write an intermediate checkpoint every this many iterations; 0 writes only the final one.
    pub checkpoint_every: usize,
    pub env: EnvParams,
    pub ppo: PpoConfig,
    pub city: SynthCitySpec,
    pub evaluation: EvalConfig,
}

impl RunConfig {
    /// A directory is taken as a bundle with default settings.
    pub fn load(path: &Path) -> Result<Self> {
        if path.is_dir() {
            return Ok(RunConfig {
                bundle: Some(path.to_path_buf()),
                ..RunConfig::default()
            });
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), "config", e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.bundle.as_mut().map(fix);
        cfg.scenarios.iter_mut().for_each(fix);
        cfg.wellbeing_model.as_mut().map(fix);
        cfg.survey.as_mut().map(fix);
        cfg.checkpoint.as_mut().map(fix);
        cfg.output.as_mut().map(fix);
        cfg.check_files()?;
        Ok(cfg)
    }

    fn check_files(&self) -> Result<()> {
        let mut missing = Vec::new();
        let named = [
            ("wellbeing_model", &self.wellbeing_model),
            ("survey", &self.survey),
            ("checkpoint", &self.checkpoint),
        ];
        for (key, p) in named {
            if p.as_ref().is_some_and(|p| !p.exists()) {
                missing.push(key.to_string());
            }
        }
        for (i, p) in self.scenarios.iter().enumerate() {
            if !p.exists() {
                missing.push(format!("scenarios[{i}]"));
            }
        }
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::Config { keys: missing })
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut keys = Vec::new();
        for check in [self.env.validate(), self.ppo.validate(), self.city.validate()] {
            if let Err(Error::Config { keys: k }) = check {
                keys.extend(k);
            }
        }
        if self.evaluation.episodes == 0 {
            keys.push("evaluation.episodes".into());
        }
        if self.evaluation.gamma.is_some_and(|g| !(0.0..=1.0).contains(&g)) {
            keys.push("evaluation.gamma".into());
        }
        if keys.is_empty() {
            Ok(())
        } else {
            Err(Error::Config { keys })
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "pathways", version, about = "Flood, accessibility and wellbeing simulation with PPO adaptation planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Run configuration (JSON) or a city bundle directory.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Flood depths for one rainfall amount, or for 0, 10, 50 and 100 mm.
    Flood {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "MM")]
        rain: Option<f64>,
    },
    /// Accessibility loss tables for one rainfall amount, or the default set.
    Access {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "MM")]
        rain: Option<f64>,
    },
    /// Fit the wellbeing model to a survey file.
    FitWellbeing {
        #[command(flatten)]
        common: Common,
        /// Survey CSV; overrides the configuration and bundle.
        #[arg(long, value_name = "PATH")]
        survey: Option<PathBuf>,
    },
    /// Train a PPO policy.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "ID")]
        scenario: Option<String>,
        #[arg(long, value_name = "N")]
        iterations: Option<usize>,
        /// Add a wall-time column to the training log.
        #[arg(long)]
        wall_time: bool,
    },
    /// Evaluate a checkpoint against the baseline policies.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "ID")]
        scenario: Option<String>,
        #[arg(long, value_name = "N")]
        episodes: Option<usize>,
        #[arg(long, value_name = "PATH")]
        checkpoint: Option<PathBuf>,
    },
    /// Write a synthetic city bundle.
    SynthCity {
        #[command(flatten)]
        common: Common,
    },
}

/// Parses `argv` (program name first), runs the command and returns the
/// exit status: 0 on success, 2 on usage or validation errors, 1 otherwise.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                2
            } else {
                1
            }
        }
    }
}

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
}

impl Ctx {
    fn new(common: &Common) -> Result<Self> {
        let mut cfg = match &common.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = common.seed {
            cfg.seed = seed;
        }
        cfg.ppo.seed = cfg.seed;
        cfg.city.seed = cfg.seed;
        cfg.validate()?;
        let out = common
            .out
            .clone()
            .or_else(|| cfg.output.clone())
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        Ok(Self { cfg, out })
    }

    fn bundle(&self) -> Result<Bundle> {
        let root = self.cfg.bundle.as_ref().ok_or_else(|| Error::Config {
            keys: vec!["bundle".into()],
        })?;
        // Checked here rather than at load time: synth-city creates the bundle.
        if !root.exists() {
            return Err(Error::Config {
                keys: vec!["bundle".into()],
            });
        }
        load_bundle(root)
    }

    fn scenarios(&self, bundle: &Bundle, only: Option<&str>) -> Result<Vec<ClimateScenario>> {
        let mut all = if self.cfg.scenarios.is_empty() {
            bundle.scenarios.clone()
        } else {
            self.cfg.scenarios.iter().map(|p| ClimateScenario::load(p)).collect::<Result<_>>()?
        };
        if let Some(id) = only {
            let id: ScenarioId = id.parse()?;
            all.retain(|s| s.id == id);
            if all.is_empty() {
                return Err(Error::Config {
                    keys: vec![format!("scenario {id}")],
                });
            }
        }
        Ok(all)
    }

    fn model(&self, bundle: &Bundle) -> Result<WellbeingModel> {
        match &self.cfg.wellbeing_model {
            Some(p) => WellbeingModel::load(p),
            None => bundle_model(bundle),
        }
    }

    fn env(&self, scenario: Option<&str>) -> Result<AdaptationEnv> {
        let bundle = self.bundle()?;
        let scenarios = self.scenarios(&bundle, scenario)?;
        let model = self.model(&bundle)?;
        AdaptationEnv::new(bundle.city, scenarios, model, self.cfg.env.clone())
    }
}

fn rain_list(rain: Option<f64>) -> Result<Vec<f64>> {
    match rain {
        Some(r) if !(r >= 0.0 && r.is_finite()) => Err(Error::invalid(format!("rain {r} mm must be finite and >= 0"))),
        Some(r) => Ok(vec![r]),
        None => Ok(DEFAULT_RAIN_MM.to_vec()),
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Flood { common, rain } => flood(&Ctx::new(&common)?, &rain_list(rain)?),
        Command::Access { common, rain } => access(&Ctx::new(&common)?, &rain_list(rain)?),
        Command::FitWellbeing { common, survey } => fit(&Ctx::new(&common)?, survey),
        Command::Train {
            common,
            scenario,
            iterations,
            wall_time,
        } => {
            let mut ctx = Ctx::new(&common)?;
            if let Some(n) = iterations {
                ctx.cfg.ppo.iterations = n;
                ctx.cfg.validate()?;
            }
            train(&ctx, scenario.as_deref(), wall_time)
        }
        Command::Evaluate {
            common,
            scenario,
            episodes,
            checkpoint,
        } => {
            let mut ctx = Ctx::new(&common)?;
            if let Some(n) = episodes {
                ctx.cfg.evaluation.episodes = n;
                ctx.cfg.validate()?;
            }
            let checkpoint = checkpoint.or_else(|| ctx.cfg.checkpoint.clone());
            evaluate(&ctx, scenario.as_deref(), checkpoint.as_deref())
        }
        Command::SynthCity { common } => synth_city(&Ctx::new(&common)?),
    }
}

fn fmt_mm(r: f64) -> String {
    format!("{r}mm")
}

fn flood(ctx: &Ctx, rains: &[f64]) -> Result<()> {
    let bundle = ctx.bundle()?;
    let city = &bundle.city;
    let model = FloodModel::new(city.dem.clone())?;
    let g = city.dem.geometry;
    let mut files = Vec::new();
    let mut summary = String::from("rain_mm,volume_m3,max_depth_mm,flooded_cells\n");
    for &r in rains {
        let d = model.simulate(&city.drainage, r)?.depths;
        let wet = d.depths_mm.iter().filter(|&&v| v > 0.0).count();
        let _ = writeln!(summary, "{r},{},{},{wet}", d.volume_m3(), d.max_mm());
        println!("rain {r} mm: {wet} flooded cells, max depth {:.1} mm", d.max_mm());
        files.push((format!("depth_{}.asc", fmt_mm(r)), format_ascii_grid(&g, &d.depths_mm, DEFAULT_NODATA)));
        files.push((format!("depth_{}.pgm", fmt_mm(r)), format_pgm(g.n_cols, g.n_rows, &d.depths_mm)));
    }
    files.push(("flood_summary.csv".into(), summary));
    write_files(&ctx.out, &files)
}

fn access(ctx: &Ctx, rains: &[f64]) -> Result<()> {
    let bundle = ctx.bundle()?;
    let city = &bundle.city;
    let p = &ctx.cfg.env;
    let model = FloodModel::new(city.dem.clone())?;
    let dry = vec![0.0; city.network.edges().len()];
    let base = compute_accessibility(&city.network, &city.zones, &city.destinations, &dry, &p.depth_speed, &p.gravity)?;
    let mut files = Vec::new();
    for &r in rains {
        let d = model.simulate(&city.drainage, r)?.depths;
        let edge_depths = map_depths_to_edges(&d, &city.network)?;
        let flooded =
            compute_accessibility(&city.network, &city.zones, &city.destinations, &edge_depths, &p.depth_speed, &p.gravity)?;
        let loss = accessibility_loss(&base, &flooded, &p.loss_weights)?;
        let mean = loss.zone_losses().iter().sum::<f64>() / loss.n_zones().max(1) as f64;
        println!("rain {r} mm: mean zone accessibility loss {mean:.4}");
        files.push((format!("loss_{}.csv", fmt_mm(r)), format_loss_csv(&base, &flooded, &loss)));
        files.push((format!("zone_loss_{}.csv", fmt_mm(r)), format_zone_loss_csv(&loss)));
    }
    write_files(&ctx.out, &files)
}

fn fit(ctx: &Ctx, survey: Option<PathBuf>) -> Result<()> {
    let path = match survey.or_else(|| ctx.cfg.survey.clone()) {
        Some(p) => p,
        None => ctx.bundle()?.survey_path().ok_or_else(|| Error::Config {
            keys: vec!["survey".into()],
        })?,
    };
    let survey = read_survey(&path)?;
    let (model, report) = fit_wellbeing(&survey)?;
    println!("retained {} components", report.retained);
    println!("explained variance {:.4}", report.explained_variance);
    println!("SRMR {:.4}", report.srmr);
    let report_json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    write_files(
        &ctx.out,
        &[("wellbeing.json".into(), model.to_json()), ("fit_report.json".into(), report_json)],
    )
}

fn train(ctx: &Ctx, scenario: Option<&str>, wall_time: bool) -> Result<()> {
    let env = ctx.env(scenario)?;
    let cfg = &ctx.cfg;
    let every = cfg.checkpoint_every;
    let out = ctx.out.clone();
    let outcome = train_with(&env, &cfg.ppo, |it, policy, value, entry| {
        if let Some(r) = entry.mean_return {
            log::info!("iteration {it}: mean return {r:.4}");
        }
        if every > 0 && (it + 1) % every == 0 && it + 1 < cfg.ppo.iterations {
            let c = Checkpoint::new(it + 1, policy, value, &cfg.ppo);
            write_files(&out, &[(format!("checkpoints/iter_{:05}.json", it + 1), c.to_json())])?;
        }
        Ok(())
    })?;
    let last = outcome.log.last().and_then(|e| e.mean_return);
    println!(
        "trained {} iterations; final mean return {}",
        cfg.ppo.iterations,
        last.map(|r| format!("{r:.4}")).unwrap_or_else(|| "n/a".into())
    );
    let c = Checkpoint::new(cfg.ppo.iterations, &outcome.policy, &outcome.value, &cfg.ppo);
    write_files(
        &ctx.out,
        &[
            ("checkpoint.json".into(), c.to_json()),
            ("training_log.csv".into(), format_training_log(&outcome.log, wall_time)),
        ],
    )
}

/// Step through one episode, recording the trajectory log.
fn record_episode(env: &AdaptationEnv, agent: &Agent, seed: u64) -> Result<Vec<TrajectoryRecord>> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed.wrapping_add(0xA5A5_5A5A));
    let (mut state, mut obs) = env.reset(seed)?;
    let mut records = Vec::new();
    loop {
        let a = agent.act(&obs, env.action_count(), &mut rng);
        let action = AdaptationAction::from_index(a, env.n_zones())?;
        let (next, tr) = env.step(&state, action)?;
        records.push(TrajectoryRecord {
            year: tr.year,
            scenario: next.scenario_id,
            rain_mm: next.last_rain_mm,
            action,
            reward: tr.reward,
            zone_loss: next.zone_loss.clone(),
        });
        if tr.done {
            return Ok(records);
        }
        state = next;
        obs = tr.observation;
    }
}

fn evaluate(ctx: &Ctx, scenario: Option<&str>, checkpoint: Option<&Path>) -> Result<()> {
    let env = ctx.env(scenario)?;
    let cfg = &ctx.cfg;
    let mut agents = Vec::new();
    if let Some(path) = checkpoint {
        let c = Checkpoint::load(path)?;
        if c.policy.observation_len() != Environment::observation_len(&env) || c.policy.action_count() != Environment::action_count(&env) {
            return Err(Error::parse(path, 0, "policy", "shape does not match the environment"));
        }
        agents.push(Agent::Learned(c.policy));
    }
    agents.extend(BaselineKind::ALL.map(make_baseline));
    let gamma = cfg.evaluation.gamma.unwrap_or(cfg.ppo.gamma);
    let seeds: Vec<u64> = (0..cfg.evaluation.episodes as u64).map(|i| cfg.seed.wrapping_add(i)).collect();
    let results: Vec<EvalSummary> = agents
        .iter()
        .map(|a| evaluate_policy(&env, a, &seeds, gamma))
        .collect::<Result<_>>()?;

    let mut summary = String::from("agent,episodes,mean_return,std,ci_low,ci_high\n");
    for (a, r) in agents.iter().zip(&results) {
        let _ = writeln!(summary, "{a},{},{},{},{},{}", r.returns.len(), r.mean, r.std, r.ci95.0, r.ci95.1);
        println!("{:<16} mean {:.4}  95% CI [{:.4}, {:.4}]", a.name(), r.mean, r.ci95.0, r.ci95.1);
    }
    let mut per_episode = String::from("episode,seed");
    for a in &agents {
        let _ = write!(per_episode, ",{a}");
    }
    per_episode.push('\n');
    for (i, s) in seeds.iter().enumerate() {
        let _ = write!(per_episode, "{i},{s}");
        for r in &results {
            let _ = write!(per_episode, ",{}", r.returns[i]);
        }
        per_episode.push('\n');
    }
    let mut files = vec![
        ("evaluation.csv".to_string(), summary),
        ("returns.csv".to_string(), per_episode),
    ];
    if checkpoint.is_some() {
        let mut paired = String::from("comparison,mean_difference,ci_low,ci_high\n");
        for (a, r) in agents.iter().zip(&results).skip(1) {
            let d = paired_difference(&results[0], r);
            let _ = writeln!(paired, "ppo-{a},{},{},{}", d.mean, d.ci95.0, d.ci95.1);
        }
        files.push(("paired_differences.csv".into(), paired));
    }
    for a in &agents {
        let rec = record_episode(&env, a, seeds[0])?;
        files.push((format!("trajectory_{a}.csv"), format_trajectory(&rec, env.n_zones())));
    }
    write_files(&ctx.out, &files)
}

fn synth_city(ctx: &Ctx) -> Result<()> {
    let (files, report) = render_synth_bundle(&ctx.cfg.city)?;
    write_files(&ctx.out, &files)?;
    println!(
        "wrote synthetic city to {} ({} files; wellbeing model retains {} components)",
        ctx.out.display(),
        files.len(),
        report.retained
    );
    Ok(())
}
