//! Command-line entry point.
//!
//! Exit codes: 0 success, 1 the task or placement failed, 2 usage or
//! configuration error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ctxplace_core::energy::total_energy;
use ctxplace_core::judge::judge_scene;
use ctxplace_core::optimizer::{apply_result, solve};
use ctxplace_core::task::{check, TaskDef};
use ctxplace_core::vac::{cue_text, render_four_views, render_top_view, Drawing, Preset};
use ctxplace_core::Scene;
use serde_json::json;

use crate::eval::{self, EvalReport};
use crate::pipeline::{self, Limits, RunRecord};
use crate::vlm::transcript::{read_entries, Transcript};
use crate::vlm::transport::{HttpTransport, ReplayTransport, Transport};
use crate::vlm::{stub::StubServer, Client, VlmConfig, VlmError};
use crate::{format, raster, suite, Error};

#[derive(Debug, Parser)]
#[command(name = "ctxplace", version, about = "Context-aware object placement")]
pub struct Cli {
    /// Print machine-readable JSON on standard output.
    #[arg(long, global = true)]
    pub porcelain: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the visual cues for one target.
    Render(RenderArgs),
    /// Place a task's targets with the optimizer only.
    Solve(SolveArgs),
    /// Run one task through the placement loop.
    Run(RunArgs),
    /// Run every task repeatedly and write a report.
    Eval(EvalArgs),
    /// Judge a scene against a task.
    Judge(JudgeArgs),
    /// Serve a transcript's replies as a chat-completions endpoint.
    StubServe(StubArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Deterministic,
    Vlm,
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Scene file. Either this or --task.
    #[arg(long, conflicts_with = "task", required_unless_present = "task")]
    pub scene: Option<PathBuf>,
    /// Built-in task id or title, or a task file; renders its spawned scene.
    #[arg(long)]
    pub task: Option<String>,
    /// Target object; defaults to the task's first target.
    #[arg(long)]
    pub target: Option<String>,
    /// Related objects, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub related: Vec<String>,
    #[arg(long, default_value = "triple+ra+bb+top", value_parser = parse_preset)]
    pub preset: Preset,
    /// Also write PNG rasters.
    #[arg(long)]
    pub png: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub task: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub restarts: Option<u32>,
    #[arg(long)]
    pub max_iterations: Option<u32>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct VlmArgs {
    /// Replay a transcript instead of calling an endpoint.
    #[arg(long)]
    pub replay: Option<PathBuf>,
    /// VLM settings file (TOML).
    #[arg(long)]
    pub vlm_config: Option<PathBuf>,
    /// Overrides the endpoint URL from the settings.
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long, default_value = "triple+ra+bb+top", value_parser = parse_preset)]
    pub preset: Preset,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub task: String,
    #[arg(long, value_enum, default_value = "deterministic")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = pipeline::DEFAULT_MAX_LOOPS)]
    pub max_loops: u32,
    #[command(flatten)]
    pub vlm: VlmArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Tasks to run, comma separated; all twelve by default.
    #[arg(long, value_delimiter = ',')]
    pub tasks: Vec<String>,
    #[arg(long, value_enum, default_value = "deterministic")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = eval::DEFAULT_TRIALS, value_parser = clap::value_parser!(u32).range(1..))]
    pub trials: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = pipeline::DEFAULT_MAX_LOOPS)]
    pub max_loops: u32,
    /// Worker threads; defaults to the number of logical CPUs.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Exit 1 when any task's accuracy is below this percentage.
    #[arg(long)]
    pub require_accuracy: Option<f64>,
    /// Directory of `<TASK>.jsonl` transcripts replayed in vlm mode.
    #[arg(long)]
    pub replay_dir: Option<PathBuf>,
    /// Report mean wall-clock seconds; reports then differ between runs.
    #[arg(long)]
    pub timing: bool,
    #[command(flatten)]
    pub vlm: VlmArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct JudgeArgs {
    #[arg(long)]
    pub task: String,
    /// Scene to judge; defaults to the task's spawned scene.
    #[arg(long)]
    pub scene: Option<PathBuf>,
    /// Object the verdict is about; defaults to the task's first target.
    #[arg(long)]
    pub target: Option<String>,
}

#[derive(Debug, Args)]
pub struct StubArgs {
    /// Transcript whose responses are served in order.
    #[arg(long)]
    pub transcript: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8089")]
    pub addr: String,
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    Preset::parse(s).ok_or_else(|| {
        let names = Preset::ALL.iter().map(|p| p.name()).collect::<Vec<_>>().join(", ");
        format!("unknown preset {s:?}; expected one of {names}")
    })
}

/// Failures, split by exit code.
#[derive(Debug)]
pub enum Failure {
    /// Exit 1.
    Task(String),
    /// Exit 2.
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Vlm(VlmError::Protocol { .. } | VlmError::Transport(_)) | Error::Unresolvable(_) => {
                Failure::Task(e.to_string())
            }
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<VlmError> for Failure {
    fn from(e: VlmError) -> Self {
        Error::from(e).into()
    }
}

pub fn main_with<I, S>(args: I) -> ExitCode
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Task(m)) => {
            eprintln!("ctxplace: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("ctxplace: {m}");
            ExitCode::from(2)
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Render(a) => render(a, cli.porcelain),
        Command::Solve(a) => solve_cmd(a, cli.porcelain),
        Command::Run(a) => run(a, cli.porcelain),
        Command::Eval(a) => eval_cmd(a, cli.porcelain),
        Command::Judge(a) => judge(a, cli.porcelain),
        Command::StubServe(a) => stub(a),
    }
}

/// A built-in task by id or title, or a task file.
pub fn load_task(name: &str) -> Result<TaskDef, Error> {
    let p = Path::new(name);
    if p.is_file() {
        format::read_task(p)
    } else {
        suite::task(name)
    }
}

fn write(dir: &Path, name: &str, bytes: impl AsRef<[u8]>) -> Result<PathBuf, Error> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let p = dir.join(name);
    fs::write(&p, bytes).map_err(|e| Error::io(&p, e))?;
    Ok(p)
}

fn first_target(task: &TaskDef) -> String {
    task.target_ids().next().expect("validated tasks have a target").to_string()
}

fn render(a: &RenderArgs, porcelain: bool) -> Result<(), Failure> {
    let (scene, target, related) = match (&a.scene, &a.task) {
        (Some(p), _) => {
            let s = format::read_scene(p)?;
            let t = a
                .target
                .clone()
                .ok_or_else(|| Failure::Usage("--target is required with --scene".into()))?;
            (s, t, a.related.clone())
        }
        (None, Some(name)) => {
            let task = load_task(name)?;
            let s = task.spawned_scene().map_err(Error::from)?;
            let t = a.target.clone().unwrap_or_else(|| first_target(&task));
            let rel = if a.related.is_empty() {
                task.instruction.related.clone()
            } else {
                a.related.clone()
            };
            (s, t, rel)
        }
        (None, None) => return Err(Failure::Usage("one of --scene or --task is required".into())),
    };
    let rel = related.iter().map(String::as_str).collect::<Vec<_>>();
    let opts = a.preset.options();
    let mut drawings: Vec<(String, Drawing)> = Vec::new();
    if opts.four_views {
        let views = render_four_views(&scene, &target, &rel, &opts).map_err(Error::from)?;
        for (name, d) in ["side_px", "side_nx", "side_pz", "side_nz"].into_iter().zip(views) {
            drawings.push((name.into(), d));
        }
    }
    if opts.top_view {
        drawings.push(("top".into(), render_top_view(&scene, &target, &opts)));
    }
    let text = cue_text(&scene, &target, &rel, &opts).map_err(Error::from)?;
    let mut files = vec![write(&a.out.out, "cues.txt", &text)?];
    for (name, d) in &drawings {
        files.push(write(&a.out.out, &format!("{name}.svg"), d.to_svg())?);
        if a.png {
            files.push(write(&a.out.out, &format!("{name}.png"), raster::drawing_to_png(d)?)?);
        }
    }
    if porcelain {
        let names = files.iter().map(|p| p.display().to_string()).collect::<Vec<_>>();
        println!("{}", json!({"target": target, "preset": a.preset.name(), "files": names}));
    } else {
        print!("{text}");
        if !text.ends_with('\n') && !text.is_empty() {
            println!();
        }
        println!("wrote {} files to {}", files.len(), a.out.out.display());
    }
    Ok(())
}

fn solve_cmd(a: &SolveArgs, porcelain: bool) -> Result<(), Failure> {
    let task = load_task(&a.task)?;
    let mut cfg = task.solve;
    cfg.seed = a.seed;
    if let Some(r) = a.restarts {
        cfg.restarts = r;
    }
    if let Some(m) = a.max_iterations {
        cfg.max_iterations = m;
    }
    cfg.validate().map_err(Error::from)?;
    let mut scene = task.spawned_scene().map_err(Error::from)?;
    let problem = task.problem(&scene).map_err(Error::from)?;
    for t in task.target_ids().map(String::from).collect::<Vec<_>>() {
        let r = solve(&scene, &t, &problem, &cfg).map_err(Error::from)?;
        scene = apply_result(&scene, &t, &r).map_err(Error::from)?;
    }
    let e = total_energy(&scene, &problem).map_err(Error::from)?;
    let path = write(&a.out.out, &format!("{}.scene", task.id), format::emit_scene(&scene))?;
    let ok = e.total <= task.epsilon;
    if porcelain {
        println!("{}", json!({"task": task.id, "energy": e.total, "converged": ok, "scene": path.display().to_string()}));
    } else {
        println!("{}: energy {} -> {}", task.id, format::real(e.total), path.display());
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::Task(format!("{}: energy {} above {}", task.id, e.total, task.epsilon)))
    }
}

fn vlm_config(a: &VlmArgs) -> Result<VlmConfig, Error> {
    let mut c = match &a.vlm_config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            VlmConfig::from_toml(&text)?
        }
        None => VlmConfig::default(),
    };
    if let Some(e) = &a.endpoint {
        c.endpoint = e.clone();
    }
    c.validate()?;
    Ok(c)
}

/// The transport for a VLM run: a replay when given one, otherwise HTTP.
fn transport(replay: Option<&Path>, config: &VlmConfig) -> Result<Box<dyn Transport>, Error> {
    Ok(match replay {
        Some(p) => Box::new(ReplayTransport::from_path(p)?),
        None => Box::new(HttpTransport::new(config)?),
    })
}

fn run_vlm_once(
    task: &TaskDef,
    replay: Option<&Path>,
    config: &VlmConfig,
    preset: Preset,
    limits: &Limits,
    log: Transcript,
) -> Result<(Scene, RunRecord, Transcript), Error> {
    let t = transport(replay, config)?;
    let mut client = Client::new(t, config.clone(), log);
    let (scene, record) = pipeline::run_vlm(task, &mut client, preset, limits)?;
    Ok((scene, record, client.into_transcript()))
}

fn run(a: &RunArgs, porcelain: bool) -> Result<(), Failure> {
    let task = load_task(&a.task)?;
    let limits = Limits { max_loops: a.max_loops };
    if limits.max_loops == 0 {
        return Err(Failure::Usage("--max-loops must be at least 1".into()));
    }
    let (scene, record) = match a.mode {
        ModeArg::Deterministic => pipeline::run_deterministic(&task, a.seed, &limits)?,
        ModeArg::Vlm => {
            let config = vlm_config(&a.vlm)?;
            let log_path = a.out.out.join(format!("{}.transcript.jsonl", task.id));
            fs::create_dir_all(&a.out.out).map_err(|e| Error::io(&a.out.out, e))?;
            if log_path.exists() {
                fs::remove_file(&log_path).map_err(|e| Error::io(&log_path, e))?;
            }
            let log = Transcript::to_file(&log_path)?;
            let (s, r, _) = run_vlm_once(&task, a.vlm.replay.as_deref(), &config, a.vlm.preset, &limits, log)?;
            (s, r)
        }
    };
    write(&a.out.out, &format!("{}.scene", task.id), format::emit_scene(&scene))?;
    write(&a.out.out, &format!("{}.run.json", task.id), record.canonical_json() + "\n")?;
    if porcelain {
        println!("{}", serde_json::to_string(&record).expect("record serializes"));
    } else {
        println!(
            "{}: {} after {} judge loop(s)",
            task.id,
            if record.success { "success" } else { "failure" },
            record.judge_loops
        );
        if let Some(n) = &record.note {
            println!("  {n}");
        }
        if let Err(why) = check(&scene, &task) {
            println!("  {why}");
        }
    }
    if record.success {
        Ok(())
    } else {
        Err(Failure::Task(format!("{} did not succeed", task.id)))
    }
}

fn eval_cmd(a: &EvalArgs, porcelain: bool) -> Result<(), Failure> {
    let names = if a.tasks.is_empty() {
        suite::ids().map(String::from).collect::<Vec<_>>()
    } else {
        a.tasks.clone()
    };
    let tasks = names
        .iter()
        .map(|n| (n.to_uppercase(), load_task(n)))
        .collect::<Vec<eval::Entry>>();
    let limits = Limits { max_loops: a.max_loops };
    if limits.max_loops == 0 {
        return Err(Failure::Usage("--max-loops must be at least 1".into()));
    }
    let jobs = a
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let report: EvalReport = match a.mode {
        ModeArg::Deterministic => eval::evaluate(&tasks, "deterministic", a.trials, a.seed, jobs, |t, _, seed| {
            pipeline::run_deterministic(t, seed, &limits).map(|(_, r)| r)
        })?,
        ModeArg::Vlm => {
            let config = vlm_config(&a.vlm)?;
            if a.replay_dir.is_none() {
                // fail before any trial starts
                config.api_key()?;
            }
            let dir = a.replay_dir.clone();
            eval::evaluate(&tasks, "vlm", a.trials, a.seed, jobs, |t, _, _| {
                let replay = dir.as_ref().map(|d| d.join(format!("{}.jsonl", t.id)));
                run_vlm_once(t, replay.as_deref(), &config, a.vlm.preset, &limits, Transcript::in_memory())
                    .map(|(_, r, _)| r)
            })?
        }
    };
    let table = report.to_table(a.timing);
    write(&a.out.out, "report.txt", &table)?;
    write(&a.out.out, "report.csv", report.to_csv(a.timing))?;
    let records = report
        .records
        .iter()
        .map(|(_, k, r)| {
            let mut v = serde_json::to_value(r).expect("record serializes");
            v["trial"] = json!(k);
            if !a.timing {
                v["wall_seconds"] = json!(0.0);
            }
            v.to_string() + "\n"
        })
        .collect::<String>();
    write(&a.out.out, "records.jsonl", records)?;
    if porcelain {
        println!("{}", serde_json::to_string(&report).expect("report serializes"));
    } else {
        print!("{table}");
    }
    if report.any_errored() {
        return Err(Failure::Task("some tasks errored".into()));
    }
    if let Some(bar) = a.require_accuracy {
        let below = report
            .tasks
            .iter()
            .filter(|t| t.accuracy < bar)
            .map(|t| t.task.as_str())
            .collect::<Vec<_>>();
        if !below.is_empty() {
            return Err(Failure::Task(format!("below {bar}% accuracy: {}", below.join(", "))));
        }
    }
    Ok(())
}

fn judge(a: &JudgeArgs, porcelain: bool) -> Result<(), Failure> {
    let task = load_task(&a.task)?;
    let scene = match &a.scene {
        Some(p) => format::read_scene(p)?,
        None => task.spawned_scene().map_err(Error::from)?,
    };
    let target = a.target.clone().unwrap_or_else(|| first_target(&task));
    scene.object(&target).map_err(Error::from)?;
    let v = judge_scene(&scene, &task).map_err(Error::from)?;
    let ok = v.pass && check(&scene, &task).is_ok();
    if porcelain {
        println!("{}", json!({"task": task.id, "target": target, "success": ok, "verdict": v}));
    } else {
        println!("{}: {}", task.id, if v.pass { "pass" } else { "fail" });
        for viol in &v.violations {
            println!("  {} {}", viol.code.as_str(), viol.subjects.join(" "));
        }
        if let Err(why) = check(&scene, &task) {
            println!("  {why}");
        }
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::Task(format!("{} fails", task.id)))
    }
}

fn stub(a: &StubArgs) -> Result<(), Failure> {
    let entries = read_entries(&a.transcript).map_err(Error::from)?;
    let server = StubServer::bind(&a.addr, entries).map_err(Error::from)?;
    if let Some(addr) = server.local_addr() {
        eprintln!("serving on http://{addr}/");
    }
    let n = server.serve().map_err(Error::from)?;
    eprintln!("served {n} replies");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_each_subcommand() {
        for argv in [
            &["ctxplace", "render", "--task", "L1T1"][..],
            &["ctxplace", "solve", "--task", "L1T1", "--seed", "3"],
            &["ctxplace", "run", "--task", "L4T1", "--mode", "vlm"],
            &["ctxplace", "eval", "--trials", "2", "--jobs", "1", "--porcelain"],
            &["ctxplace", "judge", "--task", "L1T1"],
            &["ctxplace", "stub-serve", "--transcript", "t.jsonl"],
        ] {
            Cli::try_parse_from(argv).unwrap();
        }
    }

    #[test]
    fn rejects_bad_usage() {
        assert!(Cli::try_parse_from(["ctxplace"]).is_err());
        assert!(Cli::try_parse_from(["ctxplace", "eval", "--trials", "0"]).is_err());
        assert!(Cli::try_parse_from(["ctxplace", "render", "--task", "L1T1", "--preset", "xx"]).is_err());
        assert!(Cli::try_parse_from(["ctxplace", "run", "--task", "L1T1", "--bogus"]).is_err());
    }
}
