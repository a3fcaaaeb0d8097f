//! Judges decide whether a scene is acceptable and propose corrections.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::constraint::{compile_one, support_top, Constraint};
use crate::energy::{
    containment_excess, misalignment_deg, mirror_across, region_world, total_energy, EnergyBreakdown, FacingMode,
    Problem, Side,
};
use crate::error::SpecError;
use crate::geometry::{footprint, intersection_area, separation};
use crate::math::{bearing_deg, right_of, wrap_180, Point2, Vec3};
use crate::scene::{ObjectInstance, Scene};
use crate::task::TaskDef;

/// Extra distance added to corrective moves so they land strictly inside.
const NUDGE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ViolationCode {
    Collision,
    Distance,
    Orientation,
    Side,
    Order,
    Stacking,
    Floating,
    Region,
}

impl ViolationCode {
    pub const ALL: [ViolationCode; 8] = [
        ViolationCode::Collision,
        ViolationCode::Distance,
        ViolationCode::Orientation,
        ViolationCode::Side,
        ViolationCode::Order,
        ViolationCode::Stacking,
        ViolationCode::Floating,
        ViolationCode::Region,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::Collision => "collision",
            ViolationCode::Distance => "distance",
            ViolationCode::Orientation => "orientation",
            ViolationCode::Side => "side",
            ViolationCode::Order => "order",
            ViolationCode::Stacking => "stacking",
            ViolationCode::Floating => "floating",
            ViolationCode::Region => "region",
        }
    }

    pub fn parse(s: &str) -> Option<ViolationCode> {
        ViolationCode::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Delta {
    pub translation: Vec3,
    pub yaw: f64,
}

impl Delta {
    pub fn moving(t: Vec3) -> Self {
        Delta { translation: t, yaw: 0.0 }
    }

    pub fn turning(yaw: f64) -> Self {
        Delta {
            translation: Vec3::ZERO,
            yaw,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Violation {
    pub code: ViolationCode,
    /// The first subject is the object the suggested delta applies to.
    pub subjects: Vec<String>,
    pub magnitude: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub suggested_delta: Option<Delta>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Verdict {
    pub pass: bool,
    pub violations: Vec<Violation>,
    pub energy: EnergyBreakdown,
}

/// Anything that can look at a scene and say whether the task's target is
/// placed acceptably.
pub trait Judge {
    type Error;
    fn judge(&mut self, scene: &Scene, task: &TaskDef, target_id: &str) -> Result<Verdict, Self::Error>;
}

/// Deterministic judge: energy plus the task predicates, one violation per
/// unsatisfied constraint.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleJudge;

impl Judge for RuleJudge {
    type Error = SpecError;

    fn judge(&mut self, scene: &Scene, task: &TaskDef, _target_id: &str) -> Result<Verdict, SpecError> {
        judge_scene(scene, task)
    }
}

pub fn judge_scene(scene: &Scene, task: &TaskDef) -> Result<Verdict, SpecError> {
    let problem = task.problem(scene)?;
    let energy = total_energy(scene, &problem)?;
    let failing = task.failing(scene)?;
    let pass = energy.total <= task.epsilon && failing.is_empty();
    let mut violations = Vec::new();
    if !pass {
        for (i, wc) in task.constraints.iter().enumerate() {
            let mut single = Problem {
                lambda_dist: task.lambda_dist,
                clearance: task.clearance,
                ..Problem::default()
            };
            compile_one(scene, wc, &mut single)?;
            let e = total_energy(scene, &single)?.total;
            if e > 0.0 || failing.contains(&i) {
                let mut v = diagnose(scene, &wc.constraint, task.clearance)?;
                if !(v.magnitude > 0.0) {
                    v.magnitude = if e > 0.0 { e } else { f64::EPSILON };
                }
                violations.push(v);
            }
        }
    }
    Ok(Verdict {
        pass,
        violations,
        energy,
    })
}

fn ids(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| String::from(*s)).collect()
}

fn lift(p: Point2) -> Vec3 {
    Vec3::new(p.x, 0.0, p.z)
}

/// Signed yaw turn that makes `subject` face as `mode` asks.
fn facing_turn(subject: &ObjectInstance, related: &ObjectInstance, mode: FacingMode) -> f64 {
    let want = match mode {
        FacingMode::FaceSameDirection => related.front_yaw(),
        FacingMode::FaceToward => bearing_deg(related.position.ground() - subject.position.ground()),
        FacingMode::FaceAway => bearing_deg(subject.position.ground() - related.position.ground()),
    };
    wrap_180(want - subject.front_yaw())
}

/// Classifies one constraint's failure and suggests a move for its first subject.
pub fn diagnose(scene: &Scene, c: &Constraint, clearance: f64) -> Result<Violation, SpecError> {
    let o = |id: &str| scene.object(id);
    let subjects = ids(&c.participants());
    let v = |code, magnitude, delta: Option<Delta>| Violation {
        code,
        subjects: subjects.clone(),
        magnitude,
        suggested_delta: delta,
    };
    let out = match c {
        Constraint::OnTop {
            subject,
            support,
            anchor,
            max_gap_frac,
        } => {
            let (s, t) = (o(subject)?, o(support)?);
            let gap = s.world_aabb().min.y - support_top(t, anchor.as_deref())?;
            let limit = max_gap_frac * t.world_aabb().size().y;
            let outside = containment_excess(&footprint(s), &footprint(t));
            let horizontal = if outside > 0.0 {
                lift(t.position.ground() - s.position.ground())
            } else {
                Vec3::ZERO
            };
            let fix = horizontal + Vec3::new(0.0, -gap, 0.0);
            if gap > limit {
                v(ViolationCode::Floating, gap, Some(Delta::moving(fix)))
            } else if gap < -limit {
                v(ViolationCode::Distance, -gap, Some(Delta::moving(fix)))
            } else {
                v(ViolationCode::Distance, outside, Some(Delta::moving(horizontal)))
            }
        }
        Constraint::Inside {
            subject,
            container,
            anchor,
            extent,
        } => {
            let s = o(subject)?;
            let a = o(container)?.anchor_world(anchor).unwrap_or(s.position);
            let d = s.position - a;
            let mag = (d.x.abs() - extent.x)
                .max(d.y.abs() - extent.y)
                .max(d.z.abs() - extent.z);
            v(ViolationCode::Distance, mag, Some(Delta::moving(a - s.position)))
        }
        Constraint::NextTo {
            subject,
            related,
            factor,
        } => {
            let (s, r) = (o(subject)?, o(related)?);
            let reach = factor * (footprint(s).bounding_circle().1 + footprint(r).bounding_circle().1);
            let d = r.position.ground() - s.position.ground();
            let excess = d.norm() - reach;
            let step = if d.norm() > 0.0 {
                d * ((excess + NUDGE) / d.norm())
            } else {
                Point2::default()
            };
            v(ViolationCode::Distance, excess, Some(Delta::moving(lift(step))))
        }
        Constraint::Facing {
            subject,
            related,
            mode,
            tolerance_deg,
        } => {
            let (s, r) = (o(subject)?, o(related)?);
            let mag = misalignment_deg(s, r, *mode) - tolerance_deg;
            v(ViolationCode::Orientation, mag, Some(Delta::turning(facing_turn(s, r, *mode))))
        }
        Constraint::MutualFacing { a, b, tolerance_deg } => {
            let (sa, sb) = (o(a)?, o(b)?);
            let ma = misalignment_deg(sa, sb, FacingMode::FaceToward);
            let mb = misalignment_deg(sb, sa, FacingMode::FaceToward);
            let mag = (ma - tolerance_deg).max(0.0) + (mb - tolerance_deg).max(0.0);
            // turn whichever side is off; `a` first
            let (subj, turn) = if ma > *tolerance_deg {
                (vec![a.clone(), b.clone()], facing_turn(sa, sb, FacingMode::FaceToward))
            } else {
                (vec![b.clone(), a.clone()], facing_turn(sb, sa, FacingMode::FaceToward))
            };
            Violation {
                code: ViolationCode::Orientation,
                subjects: subj,
                magnitude: mag,
                suggested_delta: Some(Delta::turning(turn)),
            }
        }
        Constraint::SideOf {
            subject,
            related,
            side,
            margin,
        } => {
            let (s, r) = (o(subject)?, o(related)?);
            let right = right_of(r.front_ground());
            let sign = if *side == Side::Right { 1.0 } else { -1.0 };
            let lateral = (s.position.ground() - r.position.ground()).dot(right) * sign;
            let short = margin - lateral;
            v(ViolationCode::Side, short, Some(Delta::moving(lift(right * (sign * (short + NUDGE))))))
        }
        Constraint::InFrontOf {
            subject,
            related,
            anchor,
            min_along,
            max_along,
            max_lateral,
        } => {
            let (s, r) = (o(subject)?, o(related)?);
            let q = anchor
                .as_deref()
                .and_then(|a| r.anchor_world(a))
                .unwrap_or(r.position)
                .ground();
            let f = r.front_ground();
            let rt = right_of(f);
            let d = s.position.ground() - q;
            let (along, lateral) = (d.dot(f), d.dot(rt));
            let inset = 0.5 * (max_along - min_along).min(*max_lateral) * 0.1;
            let ca = along.clamp(min_along + inset, max_along - inset);
            let cl = lateral.clamp(-max_lateral + inset, max_lateral - inset);
            let mag = (min_along - along).max(0.0) + (along - max_along).max(0.0) + (lateral.abs() - max_lateral).max(0.0);
            let step = f * (ca - along) + rt * (cl - lateral);
            v(ViolationCode::Region, mag, Some(Delta::moving(lift(step))))
        }
        Constraint::Row {
            members,
            min_gap,
            max_gap,
        } => {
            let mut mag = 0.0;
            for w in members.windows(2) {
                let g = o(&w[0])?.position.ground().dist(o(&w[1])?.position.ground());
                mag += (min_gap - g).max(0.0) + (g - max_gap).max(0.0);
            }
            v(ViolationCode::Order, mag, None)
        }
        Constraint::EqualSpacing { members, max_variance } => {
            let mut g = Vec::new();
            for w in members.windows(2) {
                g.push(o(&w[0])?.position.ground().dist(o(&w[1])?.position.ground()));
            }
            let n = g.len() as f64;
            let mean = g.iter().sum::<f64>() / n;
            let var = g.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
            v(ViolationCode::Order, var - max_variance, None)
        }
        Constraint::StackOrder {
            members,
            horizontal_tolerance,
        } => {
            let mut found = None;
            let mut mag = 0.0;
            for w in members.windows(2) {
                let (lo, up) = (o(&w[0])?, o(&w[1])?);
                let off = up.position.ground().dist(lo.position.ground());
                let inverted = up.position.y <= lo.position.y;
                let bad = inverted || off > *horizontal_tolerance;
                mag += if inverted { 1.0 } else { 0.0 } + (off - horizontal_tolerance).max(0.0);
                if bad && found.is_none() {
                    let lb = lo.world_aabb();
                    let ub = up.world_aabb();
                    let dy = if inverted { lb.max.y - ub.min.y } else { 0.0 };
                    let t = Vec3::new(lo.position.x - up.position.x, dy, lo.position.z - up.position.z);
                    found = Some((w[1].clone(), w[0].clone(), t));
                }
            }
            let (up, lo, t) = found.unwrap_or((members[1].clone(), members[0].clone(), Vec3::ZERO));
            Violation {
                code: ViolationCode::Stacking,
                subjects: vec![up, lo],
                magnitude: mag,
                suggested_delta: Some(Delta::moving(t)),
            }
        }
        Constraint::SymmetricPair { a, b, axis, .. } => {
            let (sa, sb, ax) = (o(a)?, o(b)?, o(axis)?);
            let m = mirror_across(sa.position.ground(), ax.position.ground(), ax.front_ground());
            let t = Vec3::new(m.x - sb.position.x, sa.position.y - sb.position.y, m.z - sb.position.z);
            v(ViolationCode::Distance, t.norm(), Some(Delta::moving(t)))
        }
        Constraint::InRegion {
            subject,
            reference,
            region,
        } => {
            let s = o(subject)?;
            let poly = region_world(o(reference)?, region);
            let c = poly.vertex_mean();
            let mag = poly.distance_outside(s.position.ground());
            v(ViolationCode::Region, mag, Some(Delta::moving(lift(c - s.position.ground()))))
        }
        Constraint::NoOverlap { a, b } => {
            let (fa, fb) = (footprint(o(a)?), footprint(o(b)?));
            let area = intersection_area(
                &crate::geometry::dilate(&fa, clearance),
                &crate::geometry::dilate(&fb, clearance),
            );
            // move `a` off `b`
            let (depth, axis) = separation(&fb, &fa);
            let push = (depth + 2.0 * clearance).max(0.0) + NUDGE;
            v(ViolationCode::Collision, area, Some(Delta::moving(lift(axis * push))))
        }
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::WeightedConstraint;
    use crate::optimizer::{apply_correction, SolveConfig};
    use crate::scene::AssetRecord;
    use crate::task::{Instruction, TargetSpec, Verb, EPS_TASK};

    fn bed_task() -> TaskDef {
        let bed = AssetRecord::new("bed", Vec3::new(1.0, 0.3, 1.0));
        let pillow = AssetRecord::new("pillow", Vec3::new(0.3, 0.08, 0.2));
        let mut scene = Scene::new(vec![bed.clone(), pillow]);
        scene
            .objects
            .push(ObjectInstance::from_asset("bed", &bed, Vec3::new(0.0, 0.3, 0.0), 0.0));
        TaskDef {
            id: "T".into(),
            level: 1,
            title: "t".into(),
            scene,
            instruction: Instruction {
                verb: Verb::Put,
                targets: vec![TargetSpec {
                    id: "pillow".into(),
                    asset: Some("pillow".into()),
                    spawn: Vec3::new(3.0, 0.08, 0.0),
                    spawn_yaw: 0.0,
                }],
                relation: "on_top".into(),
                related: vec!["bed".into()],
                level: 1,
                text: "Put a pillow on the bed.".into(),
            },
            constraints: vec![WeightedConstraint::from(Constraint::OnTop {
                subject: "pillow".into(),
                support: "bed".into(),
                anchor: None,
                max_gap_frac: 0.01,
            })],
            lambda_dist: 1.0,
            clearance: 0.0,
            epsilon: EPS_TASK,
            solve: SolveConfig::default(),
            fixtures: vec![],
        }
    }

    #[test]
    fn satisfied_scene_passes() {
        let t = bed_task();
        let s = t.spawned_scene().unwrap().with_pose("pillow", Vec3::new(0.2, 0.68, 0.1), 0.0).unwrap();
        let v = judge_scene(&s, &t).unwrap();
        assert!(v.pass);
        assert!(v.violations.is_empty());
        assert_eq!(v.energy.total, 0.0);
    }

    #[test]
    fn floating_pillow() {
        let t = bed_task();
        // bed top at 0.6, pillow bottom at 0.9
        let s = t.spawned_scene().unwrap().with_pose("pillow", Vec3::new(0.2, 0.98, 0.1), 0.0).unwrap();
        let v = judge_scene(&s, &t).unwrap();
        assert!(!v.pass);
        assert_eq!(v.violations.len(), 1);
        let x = &v.violations[0];
        assert_eq!(x.code, ViolationCode::Floating);
        assert!((x.magnitude - 0.3).abs() < 1e-12);
        let d = x.suggested_delta.unwrap();
        assert!((d.translation.y + 0.3).abs() < 1e-12 && d.translation.x == 0.0 && d.translation.z == 0.0);
        let fixed = apply_correction(&s, "pillow", d.translation, d.yaw).unwrap();
        assert!(judge_scene(&fixed, &t).unwrap().pass);
    }

    #[test]
    fn misaligned_chair() {
        let desk = AssetRecord::new("desk", Vec3::new(0.6, 0.375, 0.3));
        let chair = AssetRecord::new("chair", Vec3::new(0.25, 0.45, 0.25));
        let mut t = bed_task();
        t.scene = Scene::new(vec![desk.clone(), chair.clone()]);
        t.scene
            .objects
            .push(ObjectInstance::from_asset("desk", &desk, Vec3::new(0.0, 0.375, 0.0), 0.0));
        t.scene
            .objects
            .push(ObjectInstance::from_asset("chair", &chair, Vec3::new(0.0, 0.45, -0.8), 90.0));
        t.instruction.targets = vec![TargetSpec {
            id: "chair".into(),
            asset: None,
            spawn: Vec3::ZERO,
            spawn_yaw: 0.0,
        }];
        t.constraints = vec![WeightedConstraint::from(Constraint::Facing {
            subject: "chair".into(),
            related: "desk".into(),
            mode: FacingMode::FaceToward,
            tolerance_deg: 15.0,
        })];
        let s = t.spawned_scene().unwrap();
        let v = judge_scene(&s, &t).unwrap();
        assert_eq!(v.violations.len(), 1);
        let x = &v.violations[0];
        assert_eq!(x.code, ViolationCode::Orientation);
        assert_eq!(x.magnitude, 75.0);
        let d = x.suggested_delta.unwrap();
        assert_eq!(d.yaw, -90.0);
        let fixed = apply_correction(&s, "chair", d.translation, d.yaw).unwrap();
        assert!(judge_scene(&fixed, &t).unwrap().pass);
    }

    #[test]
    fn codes_round_trip() {
        for c in ViolationCode::ALL {
            assert_eq!(ViolationCode::parse(c.as_str()), Some(c));
        }
        assert_eq!(ViolationCode::parse("nope"), None);
    }
}
