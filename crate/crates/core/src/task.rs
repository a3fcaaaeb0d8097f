//! Task definitions: initial scene, structured instruction, constraints,
//! success predicate and hand-made fixtures.

use alloc::string::String;
use alloc::vec::Vec;

use crate::constraint::{compile, WeightedConstraint};
use crate::energy::Problem;
use crate::error::{SceneError, SpecError};
use crate::judge::ViolationCode;
use crate::math::Vec3;
use crate::optimizer::SolveConfig;
use crate::scene::{ObjectInstance, Scene};

/// Default pass threshold on total energy.
pub const EPS_TASK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Verb {
    Put,
    Move,
    Arrange,
}

/// One object the instruction places. With `asset` set the object is new
/// and spawns at `spawn`; otherwise it already exists in the scene.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TargetSpec {
    pub id: String,
    #[cfg_attr(feature = "serde", serde(default))]
    pub asset: Option<String>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub spawn: Vec3,
    #[cfg_attr(feature = "serde", serde(default))]
    pub spawn_yaw: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Instruction {
    pub verb: Verb,
    /// Placement order.
    pub targets: Vec<TargetSpec>,
    pub relation: String,
    pub related: Vec<String>,
    pub level: u8,
    /// Free text, used verbatim in VLM mode.
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PoseOverride {
    pub id: String,
    pub position: Vec3,
    #[cfg_attr(feature = "serde", serde(default))]
    pub yaw: f64,
}

/// A hand-posed scene with its expected outcome.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Fixture {
    pub name: String,
    pub pass: bool,
    #[cfg_attr(feature = "serde", serde(default))]
    pub code: Option<ViolationCode>,
    pub poses: Vec<PoseOverride>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskDef {
    pub id: String,
    pub level: u8,
    pub title: String,
    pub scene: Scene,
    pub instruction: Instruction,
    pub constraints: Vec<WeightedConstraint>,
    pub lambda_dist: f64,
    pub clearance: f64,
    pub epsilon: f64,
    pub solve: SolveConfig,
    pub fixtures: Vec<Fixture>,
}

impl TaskDef {
    pub fn validate(&self) -> Result<(), SpecError> {
        if !(1..=4).contains(&self.level) || self.instruction.level != self.level {
            return Err(SpecError::malformed(&self.id, "level must be 1-4 and match the instruction"));
        }
        if !(self.epsilon > 0.0) {
            return Err(SpecError::malformed(&self.id, "epsilon must be positive"));
        }
        if self.instruction.targets.is_empty() {
            return Err(SpecError::malformed(&self.id, "instruction has no targets"));
        }
        let s = self.spawned_scene()?;
        self.problem(&s)?;
        Ok(())
    }

    /// Initial scene with every new target added at its spawn pose.
    pub fn spawned_scene(&self) -> Result<Scene, SpecError> {
        let mut s = self.scene.clone();
        s.validate()?;
        for t in &self.instruction.targets {
            match &t.asset {
                Some(asset) => {
                    let a = s.asset(asset).ok_or_else(|| SceneError::UnknownAsset(asset.clone()))?;
                    let o = ObjectInstance::from_asset(&t.id, a, t.spawn, t.spawn_yaw);
                    s = s.with_object(o)?;
                }
                None => {
                    s.object(&t.id)?;
                }
            }
        }
        Ok(s)
    }

    pub fn target_ids(&self) -> impl Iterator<Item = &str> {
        self.instruction.targets.iter().map(|t| t.id.as_str())
    }

    pub fn is_target(&self, id: &str) -> bool {
        self.target_ids().any(|t| t == id)
    }

    pub fn problem(&self, scene: &Scene) -> Result<Problem, SpecError> {
        let mut p = compile(scene, &self.constraints, self.lambda_dist)?;
        p.clearance = self.clearance;
        Ok(p)
    }

    /// Spawned scene with a fixture's pose overrides applied.
    pub fn fixture_scene(&self, f: &Fixture) -> Result<Scene, SpecError> {
        let mut s = self.spawned_scene()?;
        for p in &f.poses {
            s = s.with_pose(&p.id, p.position, p.yaw)?;
        }
        Ok(s)
    }

    /// Indices of constraints whose predicate fails.
    pub fn failing(&self, scene: &Scene) -> Result<Vec<usize>, SpecError> {
        let mut out = Vec::new();
        for (i, c) in self.constraints.iter().enumerate() {
            if !c.constraint.holds(scene)? {
                out.push(i);
            }
        }
        Ok(out)
    }
}

/// Conjunction of the task's predicates. A missing object or malformed
/// constraint counts as failure; the reason is available from [`check`].
pub fn success(scene: &Scene, task: &TaskDef) -> bool {
    check(scene, task).is_ok()
}

/// `Ok` when every predicate holds, else the first failing constraint's name
/// or the resolution error.
pub fn check(scene: &Scene, task: &TaskDef) -> Result<(), String> {
    match task.failing(scene) {
        Ok(v) if v.is_empty() => Ok(()),
        Ok(v) => Err(String::from(task.constraints[v[0]].constraint.name())),
        Err(e) => Err(alloc::format!("{e}")),
    }
}
