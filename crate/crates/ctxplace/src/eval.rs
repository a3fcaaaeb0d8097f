//! Repeated trials over a set of tasks, aggregated into a report.

use std::fmt::Write as _;

use ctxplace_core::task::TaskDef;
use rayon::prelude::*;
use serde::Serialize;

use crate::pipeline::RunRecord;
use crate::Error;

pub const DEFAULT_TRIALS: u32 = 10;

/// Seed for one trial, mixed from the run seed and the trial number.
pub fn trial_seed(seed: u64, trial: u32) -> u64 {
    let mut z = seed.wrapping_add(u64::from(trial).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskSummary {
    pub task: String,
    pub level: u8,
    pub title: String,
    pub trials: u32,
    pub successes: u32,
    /// Percent.
    pub accuracy: f64,
    pub mean_seconds: f64,
    pub mean_loops: f64,
    /// Set when the task could not be loaded or a trial failed to run.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub mode: String,
    pub seed: u64,
    pub trials: u32,
    pub tasks: Vec<TaskSummary>,
    /// Per-trial records, sorted by task then trial.
    #[serde(skip)]
    pub records: Vec<(String, u32, RunRecord)>,
}

/// A task to evaluate, or the reason it could not be loaded.
pub type Entry = (String, Result<TaskDef, Error>);

/// Runs `trials` trials of each task on at most `jobs` threads. `run` gets
/// the task, the trial number and the trial seed.
pub fn evaluate<F>(tasks: &[Entry], mode: &str, trials: u32, seed: u64, jobs: usize, run: F) -> Result<EvalReport, Error>
where
    F: Fn(&TaskDef, u32, u64) -> Result<RunRecord, Error> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Format {
            origin: "thread pool".into(),
            message: e.to_string(),
        })?;
    let work = tasks
        .iter()
        .enumerate()
        .filter_map(|(i, (_, t))| t.as_ref().ok().map(|t| (i, t)))
        .flat_map(|(i, t)| (0..trials).map(move |k| (i, t, k)))
        .collect::<Vec<_>>();
    let results = pool.install(|| {
        work.par_iter()
            .map(|&(i, t, k)| (i, k, run(t, k, trial_seed(seed, k))))
            .collect::<Vec<_>>()
    });

    let mut summaries = Vec::new();
    let mut records = Vec::new();
    for (i, (id, t)) in tasks.iter().enumerate() {
        let t = match t {
            Ok(t) => t,
            Err(e) => {
                summaries.push(TaskSummary {
                    task: id.clone(),
                    level: 0,
                    title: String::new(),
                    trials,
                    successes: 0,
                    accuracy: 0.0,
                    mean_seconds: 0.0,
                    mean_loops: 0.0,
                    error: Some(e.to_string()),
                });
                continue;
            }
        };
        let mut successes = 0u32;
        let mut seconds = 0.0;
        let mut loops = 0u64;
        let mut error = None;
        for (_, k, r) in results.iter().filter(|(j, _, _)| *j == i) {
            match r {
                Ok(r) => {
                    successes += u32::from(r.success);
                    seconds += r.wall_seconds;
                    loops += u64::from(r.judge_loops);
                    records.push((t.id.clone(), *k, r.clone()));
                }
                Err(e) => {
                    error.get_or_insert_with(|| format!("trial {k}: {e}"));
                }
            }
        }
        let n = f64::from(trials.max(1));
        summaries.push(TaskSummary {
            task: t.id.clone(),
            level: t.level,
            title: t.title.clone(),
            trials,
            successes,
            accuracy: 100.0 * (f64::from(successes) / n),
            mean_seconds: seconds / n,
            mean_loops: loops as f64 / n,
            error,
        });
    }
    records.sort_by(|a, b| (&a.0, a.1).cmp(&(&b.0, b.1)));
    Ok(EvalReport {
        mode: mode.into(),
        seed,
        trials,
        tasks: summaries,
        records,
    })
}

impl EvalReport {
    pub fn accuracy(&self, task: &str) -> Option<f64> {
        self.tasks.iter().find(|t| t.task == task).map(|t| t.accuracy)
    }

    pub fn any_errored(&self) -> bool {
        self.tasks.iter().any(|t| t.error.is_some())
    }

    /// Aligned table, one column per task, rows accuracy / speed / loops.
    /// Speed is shown as `-` unless `timing` is set, so that reports of
    /// the same run compare byte for byte.
    pub fn to_table(&self, timing: bool) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# mode={} trials={} seed={}", self.mode, self.trials, self.seed);
        let cell = |t: &TaskSummary, s: String| if t.error.is_some() && t.level == 0 { "ERR".to_string() } else { s };
        let rows: [(&str, Vec<String>); 4] = [
            ("task", self.tasks.iter().map(|t| t.task.clone()).collect()),
            (
                "accuracy(%)",
                self.tasks.iter().map(|t| cell(t, format!("{:.1}", t.accuracy))).collect(),
            ),
            (
                "speed(s)",
                self.tasks
                    .iter()
                    .map(|t| cell(t, if timing { format!("{:.3}", t.mean_seconds) } else { "-".into() }))
                    .collect(),
            ),
            ("loops", self.tasks.iter().map(|t| cell(t, format!("{:.2}", t.mean_loops))).collect()),
        ];
        let width = rows
            .iter()
            .flat_map(|(_, cells)| cells.iter().map(String::len))
            .max()
            .unwrap_or(0)
            .max(5);
        for (label, cells) in &rows {
            let _ = write!(out, "{label:<12}");
            for c in cells {
                let _ = write!(out, " {c:>width$}");
            }
            out.push('\n');
        }
        for t in self.tasks.iter().filter(|t| t.error.is_some()) {
            let _ = writeln!(out, "# {} errored: {}", t.task, t.error.as_deref().unwrap_or_default());
        }
        out
    }

    pub fn to_csv(&self, timing: bool) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let _ = w.write_record([
            "task",
            "level",
            "title",
            "trials",
            "successes",
            "accuracy",
            "mean_seconds",
            "mean_loops",
            "error",
        ]);
        for t in &self.tasks {
            let _ = w.write_record([
                t.task.clone(),
                t.level.to_string(),
                t.title.clone(),
                t.trials.to_string(),
                t.successes.to_string(),
                t.accuracy.to_string(),
                if timing { t.mean_seconds.to_string() } else { String::new() },
                t.mean_loops.to_string(),
                t.error.clone().unwrap_or_default(),
            ]);
        }
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{run_deterministic, Limits};
    use crate::suite;

    fn det(t: &TaskDef, _k: u32, seed: u64) -> Result<RunRecord, Error> {
        run_deterministic(t, seed, &Limits::default()).map(|(_, r)| r)
    }

    #[test]
    fn errored_task_does_not_stop_the_others() {
        let tasks = vec![
            ("L1T1".to_string(), suite::task("L1T1")),
            ("nope".to_string(), suite::task("nope")),
        ];
        let r = evaluate(&tasks, "deterministic", 2, 0, 2, det).unwrap();
        assert_eq!(r.tasks.len(), 2);
        assert_eq!(r.tasks[0].accuracy, 100.0);
        assert!(r.tasks[1].error.is_some());
        assert!(r.to_table(false).contains("ERR"));
        assert_eq!(r.records.len(), 2);
    }

    #[test]
    fn reports_do_not_depend_on_thread_count() {
        let tasks = vec![("L1T2".to_string(), suite::task("L1T2"))];
        let a = evaluate(&tasks, "deterministic", 3, 5, 1, det).unwrap();
        let b = evaluate(&tasks, "deterministic", 3, 5, 3, det).unwrap();
        assert_eq!(a.to_table(false), b.to_table(false));
        assert_eq!(a.to_csv(false), b.to_csv(false));
    }

    #[test]
    fn trial_seeds_differ() {
        assert_ne!(trial_seed(0, 0), trial_seed(0, 1));
        assert_eq!(trial_seed(3, 2), trial_seed(3, 2));
    }

    #[test]
    fn accuracy_is_the_success_ratio() {
        let tasks = vec![("L1T1".to_string(), suite::task("L1T1"))];
        let r = evaluate(&tasks, "deterministic", 4, 0, 1, |t, k, s| {
            let mut r = det(t, k, s)?;
            r.success = k % 2 == 0;
            Ok(r)
        })
        .unwrap();
        assert_eq!(r.tasks[0].successes, 2);
        assert_eq!(r.tasks[0].accuracy, 50.0);
    }
}
