//! The propose / judge / correct loop.
//!
//! Deterministic mode resolves the structured instruction from the task
//! table, places each target with the optimizer and judges with the rule
//! judge. VLM mode sends the three role prompts through a [`vlm::Client`].
//! Both stop at the first passing verdict or after `max_loops` judge calls.

use std::collections::BTreeSet;
use std::time::Instant;

use ctxplace_core::energy::{total_energy, Problem};
use ctxplace_core::judge::{Judge, RuleJudge, Verdict};
use ctxplace_core::optimizer::{apply_correction, apply_result, solve, SolveConfig};
use ctxplace_core::task::{success, TaskDef};
use ctxplace_core::vac::Preset;
use ctxplace_core::{ObjectInstance, Scene, Vec3};
use serde::Serialize;

use crate::vlm::{self, Action, Transport};
use crate::Error;

pub const DEFAULT_MAX_LOOPS: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Deterministic,
    Vlm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_loops: u32,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_loops: DEFAULT_MAX_LOOPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinalPose {
    pub id: String,
    pub position: Vec3,
    pub yaw: f64,
}

impl FinalPose {
    fn of(o: &ObjectInstance) -> Self {
        FinalPose {
            id: o.id.clone(),
            position: o.position,
            yaw: o.orientation.yaw,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub task: String,
    pub success: bool,
    pub wall_seconds: f64,
    pub judge_loops: u32,
    /// One per judge call, in order.
    pub verdicts: Vec<Verdict>,
    /// Target poses in the final scene, in placement order.
    pub final_poses: Vec<FinalPose>,
    /// Why the run stopped without success.
    pub note: Option<String>,
}

impl RunRecord {
    /// JSON with the wall-clock field zeroed, for comparing runs.
    pub fn canonical_json(&self) -> String {
        let mut r = self.clone();
        r.wall_seconds = 0.0;
        serde_json::to_string_pretty(&r).expect("record serializes")
    }
}

fn final_poses(task: &TaskDef, scene: &Scene) -> Vec<FinalPose> {
    task.target_ids()
        .filter_map(|id| scene.get(id))
        .map(FinalPose::of)
        .collect()
}

/// Objects whose constraints may be enforced once `target` is placed:
/// everything that is not a target, plus targets placed so far.
fn placed_set<'a>(task: &'a TaskDef, scene: &'a Scene, upto: usize) -> BTreeSet<&'a str> {
    let targets = task.target_ids().collect::<Vec<_>>();
    scene
        .objects
        .iter()
        .map(|o| o.id.as_str())
        .filter(|id| match targets.iter().position(|t| t == id) {
            Some(i) => i <= upto,
            None => true,
        })
        .collect()
}

fn energy(scene: &Scene, problem: &Problem) -> Result<f64, Error> {
    Ok(total_energy(scene, problem)?.total)
}

/// Seed for one solver call, mixed from the run seed and the loop number.
fn solve_seed(seed: u64, round: u32) -> u64 {
    let mut z = seed ^ (u64::from(round)).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic mode: table-driven resolution, optimizer placement, rule
/// judge.
pub fn run_deterministic(task: &TaskDef, seed: u64, limits: &Limits) -> Result<(Scene, RunRecord), Error> {
    let start = Instant::now();
    let mut scene = task.spawned_scene()?;
    let full = task.problem(&scene)?;
    let targets = task.target_ids().map(String::from).collect::<Vec<_>>();
    let cfg = |round| SolveConfig {
        seed: solve_seed(seed, round),
        ..task.solve
    };

    for (i, t) in targets.iter().enumerate() {
        let placed = placed_set(task, &scene, i);
        let p = full.restricted(|id| placed.contains(id));
        let r = solve(&scene, t, &p, &cfg(0))?;
        scene = apply_result(&scene, t, &r)?;
    }

    let mut judge = RuleJudge;
    let mut verdicts = Vec::new();
    let mut note = None;
    loop {
        let v = judge.judge(&scene, task, &targets[0])?;
        let pass = v.pass;
        verdicts.push(v);
        if pass {
            break;
        }
        if verdicts.len() as u32 >= limits.max_loops {
            note = Some(format!("loop cap of {} reached", limits.max_loops));
            break;
        }
        let round = verdicts.len() as u32;
        let mut e = energy(&scene, &full)?;
        for viol in &verdicts[round as usize - 1].violations {
            let (Some(d), Some(subject)) = (viol.suggested_delta, viol.subjects.first()) else {
                continue;
            };
            if !task.is_target(subject) {
                continue;
            }
            let cand = apply_correction(&scene, subject, d.translation, d.yaw)?;
            let ec = energy(&cand, &full)?;
            if ec <= e {
                scene = cand;
                e = ec;
            }
        }
        for t in &targets {
            let r = solve(&scene, t, &full, &cfg(round))?;
            if r.breakdown.total <= e {
                scene = apply_result(&scene, t, &r)?;
                e = r.breakdown.total;
            }
        }
    }

    let judge_loops = verdicts.len() as u32;
    let last_pass = verdicts.last().is_some_and(|v| v.pass);
    let record = RunRecord {
        task: task.id.clone(),
        success: last_pass && success(&scene, task),
        wall_seconds: start.elapsed().as_secs_f64(),
        judge_loops,
        final_poses: final_poses(task, &scene),
        verdicts,
        note,
    };
    Ok((scene, record))
}

/// VLM mode: generate, worker and judge requests through `client`. The
/// verdict's energy field is computed locally; pass/fail and violations are
/// the model's. Success additionally requires the task predicates.
pub fn run_vlm<T: Transport>(
    task: &TaskDef,
    client: &mut vlm::Client<T>,
    preset: Preset,
    limits: &Limits,
) -> Result<(Scene, RunRecord), Error> {
    let start = Instant::now();
    let mut scene = task.scene.clone();
    scene.validate()?;
    let problem = task.problem(&task.spawned_scene()?)?;
    let mut related = task.instruction.related.clone();
    let mut placed = Vec::new();

    for t in &task.instruction.targets {
        let g = client.generate_step(&task.instruction.text, &scene)?;
        match (g.action, &t.asset) {
            (Action::New, Some(_)) => {
                let a = scene
                    .asset(&g.target)
                    .ok_or_else(|| Error::Unresolvable(format!("asset {} is not in the catalog", g.target)))?;
                let obj = ObjectInstance::from_asset(&t.id, a, t.spawn, t.spawn_yaw);
                scene = scene.with_object(obj)?;
            }
            (Action::Move, None) if g.target == t.id => {}
            _ => {
                return Err(Error::Unresolvable(format!(
                    "{} {} does not match target {}",
                    g.action.as_str(),
                    g.target,
                    t.id
                )))
            }
        }
        for r in g.related {
            if !related.contains(&r) && scene.get(&r).is_some() {
                related.push(r);
            }
        }
        let rel = related.iter().map(String::as_str).collect::<Vec<_>>();
        let (p, yaw) = client.worker_step(&task.instruction.text, &scene, &t.id, &rel, preset, None)?;
        scene = scene.with_pose(&t.id, p, yaw)?;
        placed.push(t.id.clone());
    }

    let focus = placed[0].clone();
    let mut others = placed[1..].to_vec();
    others.extend(related.iter().filter(|r| !placed.contains(r)).cloned());
    let mut verdicts = Vec::new();
    let mut note = None;
    loop {
        let rel = others.iter().map(String::as_str).collect::<Vec<_>>();
        let mut v = client.judge_step(&task.instruction.text, &scene, &focus, &rel, preset)?;
        v.energy = total_energy(&scene, &problem)?;
        let pass = v.pass;
        verdicts.push(v);
        if pass {
            break;
        }
        if verdicts.len() as u32 >= limits.max_loops {
            note = Some(format!("loop cap of {} reached", limits.max_loops));
            break;
        }
        let last = verdicts.last().expect("just pushed").clone();
        let mut redo = Vec::new();
        for viol in &last.violations {
            let Some(subject) = viol.subjects.first().filter(|s| placed.contains(s)) else {
                continue;
            };
            match viol.suggested_delta {
                Some(d) => scene = apply_correction(&scene, subject, d.translation, d.yaw)?,
                None if !redo.contains(subject) => redo.push(subject.clone()),
                None => {}
            }
        }
        if last.violations.is_empty() {
            redo.push(focus.clone());
        }
        for id in redo {
            let rel = related.iter().map(String::as_str).collect::<Vec<_>>();
            let feedback = serde_json::to_string(&last.violations).expect("violations serialize");
            let (p, yaw) = client.worker_step(&task.instruction.text, &scene, &id, &rel, preset, Some(&feedback))?;
            scene = scene.with_pose(&id, p, yaw)?;
        }
    }

    let last_pass = verdicts.last().is_some_and(|v| v.pass);
    let record = RunRecord {
        task: task.id.clone(),
        success: last_pass && success(&scene, task),
        wall_seconds: start.elapsed().as_secs_f64(),
        judge_loops: verdicts.len() as u32,
        final_poses: final_poses(task, &scene),
        verdicts,
        note,
    };
    Ok((scene, record))
}
