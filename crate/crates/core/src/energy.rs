//! Layered placement energies.
//!
//! The objective is `E_collision + E_distance + E_affordance + E_social +
//! E_culture`, each term non-negative and exactly zero on its satisfied set.
//! Collision and distance follow the classic furniture-layout formulation;
//! affordance is a hinge on angular misalignment; the social and cultural
//! terms are sums over a small catalog of declarative relation kinds.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{SceneError, SpecError};
use crate::geometry::{dilate, footprint, intersection_area, ConvexPolygon};
use crate::math::{bearing_deg, right_of, yaw_gap, Point2, Vec3};
use crate::scene::{ObjectInstance, Scene};

/// Relative-displacement relation `p_subject - q - d_star`, where `q` is the
/// related object's position or one of its anchors.
///
/// Components flagged in `free` do not contribute. Each remaining component
/// is penalized only beyond its `tolerance` dead zone. With
/// `horizontal_radius` set, the x/z residual is measured as a radial distance
/// instead. With `contain` set, the subject's footprint must also lie inside
/// the related object's footprint.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PairRelation {
    pub subject_id: String,
    pub related_id: String,
    #[cfg_attr(feature = "serde", serde(default))]
    pub related_anchor: Option<String>,
    pub d_star: Vec3,
    #[cfg_attr(feature = "serde", serde(default))]
    pub free: [bool; 3],
    #[cfg_attr(feature = "serde", serde(default))]
    pub tolerance: Vec3,
    #[cfg_attr(feature = "serde", serde(default))]
    pub horizontal_radius: Option<f64>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub contain: bool,
}

impl PairRelation {
    /// Plain relation with every component constrained and no dead zone.
    pub fn new(subject: &str, related: &str, d_star: Vec3) -> Self {
        PairRelation {
            subject_id: subject.into(),
            related_id: related.into(),
            related_anchor: None,
            d_star,
            free: [false; 3],
            tolerance: Vec3::ZERO,
            horizontal_radius: None,
            contain: false,
        }
    }

    /// Point the subject is drawn toward on its constrained components.
    pub fn reference_point(&self, scene: &Scene) -> Result<Vec3, SceneError> {
        let rel = scene.object(&self.related_id)?;
        anchor_or_center(rel, self.related_anchor.as_deref())
    }
}

/// Per-component breakdown of a [`PairRelation`]'s residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelationResidual {
    /// `p_subject - q - d_star`.
    pub raw: Vec3,
    /// Per-axis amount beyond the dead zone (zero for free or radial axes).
    pub excess: Vec3,
    /// Horizontal radial excess when `horizontal_radius` is set.
    pub radial_excess: f64,
    /// How far the subject footprint pokes out of the related footprint.
    pub contain_excess: f64,
}

impl RelationResidual {
    pub fn squared(&self) -> f64 {
        self.excess.dot(self.excess)
            + self.radial_excess * self.radial_excess
            + self.contain_excess * self.contain_excess
    }
}

fn anchor_or_center(obj: &ObjectInstance, anchor: Option<&str>) -> Result<Vec3, SceneError> {
    match anchor {
        None => Ok(obj.position),
        Some(a) => obj.anchor_world(a).ok_or_else(|| SceneError::UnknownAnchor {
            id: obj.id.clone(),
            anchor: a.into(),
        }),
    }
}

/// How far `inner`'s footprint extends outside `outer`'s footprint, measured
/// as the worst edge-line violation over `inner`'s vertices.
pub fn containment_excess(inner: &ConvexPolygon, outer: &ConvexPolygon) -> f64 {
    inner
        .vertices()
        .iter()
        .map(|v| outer.max_edge_violation(*v))
        .fold(0.0, f64::max)
}

pub fn relation_residual(scene: &Scene, rel: &PairRelation) -> Result<RelationResidual, SceneError> {
    let subject = scene.object(&rel.subject_id)?;
    let related = scene.object(&rel.related_id)?;
    let q = anchor_or_center(related, rel.related_anchor.as_deref())?;
    let raw = subject.position - q - rel.d_star;

    let mut excess = Vec3::ZERO;
    let radial = rel.horizontal_radius.filter(|_| !(rel.free[0] && rel.free[2]));
    for axis in 0..3 {
        if rel.free[axis] || (radial.is_some() && axis != 1) {
            continue;
        }
        let e = (raw.component(axis).abs() - rel.tolerance.component(axis)).max(0.0);
        excess = excess.with_component(axis, e);
    }
    let radial_excess = match radial {
        Some(r) => {
            let h = Point2::new(
                if rel.free[0] { 0.0 } else { raw.x },
                if rel.free[2] { 0.0 } else { raw.z },
            );
            (h.norm() - r).max(0.0)
        }
        None => 0.0,
    };
    let contain_excess = if rel.contain {
        containment_excess(&footprint(subject), &footprint(related))
    } else {
        0.0
    };
    Ok(RelationResidual {
        raw,
        excess,
        radial_excess,
        contain_excess,
    })
}

/// `E_collision = Σ A(J_i ∩ J_j)` over the listed pairs, with `J` the
/// footprint dilated by `clearance`.
pub fn e_collision(scene: &Scene, pairs: &[(String, String)], clearance: f64) -> Result<f64, SceneError> {
    let mut total = 0.0;
    for (a, b) in pairs {
        total += pair_overlap(scene, a, b, clearance)?;
    }
    Ok(total)
}

pub fn pair_overlap(scene: &Scene, a: &str, b: &str, clearance: f64) -> Result<f64, SceneError> {
    let ja = dilate(&footprint(scene.object(a)?), clearance);
    let jb = dilate(&footprint(scene.object(b)?), clearance);
    Ok(intersection_area(&ja, &jb))
}

/// `E_distance = λ Σ ‖p_i - p_j - d*_ij‖²` over the constrained components.
pub fn e_distance(scene: &Scene, relations: &[PairRelation], lambda_dist: f64) -> Result<f64, SceneError> {
    let mut total = 0.0;
    for r in relations {
        total += relation_residual(scene, r)?.squared();
    }
    Ok(lambda_dist * total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FacingMode {
    FaceToward,
    FaceAway,
    FaceSameDirection,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AffordanceSpec {
    pub subject_id: String,
    pub related_id: String,
    pub mode: FacingMode,
    pub tolerance_deg: f64,
    pub alpha: f64,
}

/// Unsigned angle between the subject's front and the direction the mode
/// asks for, in degrees. Zero when the target direction is undefined
/// (coincident centers).
pub fn misalignment_deg(subject: &ObjectInstance, related: &ObjectInstance, mode: FacingMode) -> f64 {
    let target = match mode {
        FacingMode::FaceSameDirection => related.front_yaw(),
        FacingMode::FaceToward | FacingMode::FaceAway => {
            let mut d = related.position.ground() - subject.position.ground();
            if d.norm() < 1e-12 {
                return 0.0;
            }
            if mode == FacingMode::FaceAway {
                d = d * -1.0;
            }
            bearing_deg(d)
        }
    };
    yaw_gap(subject.front_yaw(), target)
}

pub fn affordance_term(scene: &Scene, spec: &AffordanceSpec) -> Result<f64, SceneError> {
    let s = scene.object(&spec.subject_id)?;
    let r = scene.object(&spec.related_id)?;
    let d = misalignment_deg(s, r, spec.mode) - spec.tolerance_deg;
    Ok((spec.alpha * d).max(0.0))
}

/// `E_affordance = Σ max(0, α · d_affordance)`.
pub fn e_affordance(scene: &Scene, specs: &[AffordanceSpec]) -> Result<f64, SceneError> {
    let mut total = 0.0;
    for s in specs {
        total += affordance_term(scene, s)?;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Side {
    Left,
    Right,
}

/// Relation kinds feeding the social and cultural terms.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum ContextKind {
    /// `[subject, related]`: subject center at least `margin` into the named
    /// half-plane of the related object's frame.
    SideOf { side: Side, margin: f64 },
    /// `[subject, related]`: subject inside a box in front of the related
    /// object (or its anchor): `min_along ≤ along ≤ max_along`,
    /// `|lateral| ≤ max_lateral`.
    InFrontOf {
        #[cfg_attr(feature = "serde", serde(default))]
        anchor: Option<String>,
        min_along: f64,
        max_along: f64,
        max_lateral: f64,
    },
    /// Adjacent horizontal gaps within `[min_gap, max_gap]`.
    OrderedRow { min_gap: f64, max_gap: f64 },
    /// Variance of adjacent gaps at most `max_variance` (m²).
    EqualSpacing { max_variance: f64 },
    /// `[a, b]`: each faces the other within the tolerance.
    MutualFacing { tolerance_deg: f64 },
    /// Bottom to top: strictly rising centers, stacked within a horizontal tolerance.
    StackOrder { horizontal_tolerance: f64 },
    /// `[a, b, axis]`: `a` mirrored across the axis object's front line lands on `b`.
    SymmetricPair { tolerance: f64 },
    /// `[subject, reference]`: subject center inside a region given in the
    /// reference object's local `(x, z)` frame.
    RegionPlacement { region: Vec<Point2> },
}

impl ContextKind {
    pub fn name(&self) -> &'static str {
        match self {
            ContextKind::SideOf { .. } => "side_of",
            ContextKind::InFrontOf { .. } => "in_front_of",
            ContextKind::OrderedRow { .. } => "ordered_row",
            ContextKind::EqualSpacing { .. } => "equal_spacing",
            ContextKind::MutualFacing { .. } => "mutual_facing",
            ContextKind::StackOrder { .. } => "stack_order",
            ContextKind::SymmetricPair { .. } => "symmetric_pair",
            ContextKind::RegionPlacement { .. } => "region_placement",
        }
    }

    /// Kinds only meaningful for the cultural term.
    pub fn is_cultural_only(&self) -> bool {
        matches!(
            self,
            ContextKind::StackOrder { .. } | ContextKind::SymmetricPair { .. } | ContextKind::RegionPlacement { .. }
        )
    }

    fn participants_ok(&self, n: usize) -> bool {
        match self {
            ContextKind::SideOf { .. }
            | ContextKind::InFrontOf { .. }
            | ContextKind::MutualFacing { .. }
            | ContextKind::RegionPlacement { .. } => n == 2,
            ContextKind::SymmetricPair { .. } => n == 3,
            ContextKind::OrderedRow { .. } | ContextKind::StackOrder { .. } => n >= 2,
            ContextKind::EqualSpacing { .. } => n >= 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ContextSpec {
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub kind: ContextKind,
    pub participants: Vec<String>,
    pub weight: f64,
}

pub type SocialSpec = ContextSpec;
pub type CultureSpec = ContextSpec;

impl ContextSpec {
    pub fn new(kind: ContextKind, participants: &[&str], weight: f64) -> Self {
        ContextSpec {
            kind,
            participants: participants.iter().map(|s| String::from(*s)).collect(),
            weight,
        }
    }

    fn label(&self) -> String {
        let mut s = String::from(self.kind.name());
        s.push('(');
        s.push_str(&self.participants.join(","));
        s.push(')');
        s
    }

    pub fn validate(&self, scene: &Scene) -> Result<(), SpecError> {
        if !self.kind.participants_ok(self.participants.len()) {
            return Err(SpecError::malformed(self.label(), "participant count does not match kind"));
        }
        if !(self.weight > 0.0) {
            return Err(SpecError::malformed(self.label(), "weight must be positive"));
        }
        for p in &self.participants {
            scene.object(p)?;
        }
        if let ContextKind::InFrontOf { anchor: Some(a), .. } = &self.kind {
            anchor_or_center(scene.object(&self.participants[1])?, Some(a))?;
        }
        if let ContextKind::RegionPlacement { region } = &self.kind {
            if region.len() < 3 {
                return Err(SpecError::malformed(self.label(), "region needs at least 3 points"));
            }
        }
        Ok(())
    }
}

/// Region of a `RegionPlacement` spec in world ground coordinates.
pub fn region_world(reference: &ObjectInstance, region: &[Point2]) -> ConvexPolygon {
    let pts: Vec<Point2> = region
        .iter()
        .map(|p| {
            // region corners are placed in the reference frame, ignoring scale
            let local = Vec3::new(p.x, 0.0, p.z);
            (reference.position + reference.rotation().apply(local)).ground()
        })
        .collect();
    ConvexPolygon::hull(&pts)
}

/// Reflects `p` across the line through `origin` along unit `dir`.
pub fn mirror_across(p: Point2, origin: Point2, dir: Point2) -> Point2 {
    let v = p - origin;
    let along = dir * v.dot(dir);
    let perp = v - along;
    origin + along - perp
}

fn horizontal_gaps(objs: &[&ObjectInstance]) -> Vec<f64> {
    objs.windows(2)
        .map(|w| w[0].position.ground().dist(w[1].position.ground()))
        .collect()
}

/// Unweighted violation of one context spec.
pub fn context_violation(scene: &Scene, spec: &ContextSpec) -> Result<f64, SpecError> {
    spec.validate(scene)?;
    let objs: Vec<&ObjectInstance> = spec
        .participants
        .iter()
        .map(|id| scene.object(id))
        .collect::<Result<_, _>>()?;
    let v = match &spec.kind {
        ContextKind::SideOf { side, margin } => {
            let (s, r) = (objs[0], objs[1]);
            let offset = (s.position.ground() - r.position.ground()).dot(right_of(r.front_ground()));
            match side {
                Side::Right => (margin - offset).max(0.0),
                Side::Left => (margin + offset).max(0.0),
            }
        }
        ContextKind::InFrontOf {
            anchor,
            min_along,
            max_along,
            max_lateral,
        } => {
            let (s, r) = (objs[0], objs[1]);
            let q = anchor_or_center(r, anchor.as_deref())?.ground();
            let f = r.front_ground();
            let v = s.position.ground() - q;
            let along = v.dot(f);
            let lateral = v.dot(right_of(f));
            (min_along - along).max(0.0) + (along - max_along).max(0.0) + (lateral.abs() - max_lateral).max(0.0)
        }
        ContextKind::OrderedRow { min_gap, max_gap } => horizontal_gaps(&objs)
            .iter()
            .map(|g| (min_gap - g).max(0.0) + (g - max_gap).max(0.0))
            .sum(),
        ContextKind::EqualSpacing { max_variance } => {
            let gaps = horizontal_gaps(&objs);
            let n = gaps.len() as f64;
            let mean = gaps.iter().sum::<f64>() / n;
            let var = gaps.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / n;
            (var - max_variance).max(0.0)
        }
        ContextKind::MutualFacing { tolerance_deg } => {
            let (a, b) = (objs[0], objs[1]);
            let ma = misalignment_deg(a, b, FacingMode::FaceToward);
            let mb = misalignment_deg(b, a, FacingMode::FaceToward);
            (ma - tolerance_deg).max(0.0) + (mb - tolerance_deg).max(0.0)
        }
        ContextKind::StackOrder { horizontal_tolerance } => objs
            .windows(2)
            .map(|w| {
                let (lower, upper) = (w[0], w[1]);
                let inversion = if upper.position.y <= lower.position.y { 1.0 } else { 0.0 };
                let off = upper.position.ground().dist(lower.position.ground());
                inversion + (off - horizontal_tolerance).max(0.0)
            })
            .sum(),
        ContextKind::SymmetricPair { tolerance } => {
            let (a, b, axis) = (objs[0], objs[1], objs[2]);
            let m = mirror_across(a.position.ground(), axis.position.ground(), axis.front_ground());
            let dh = m - b.position.ground();
            let dy = a.position.y - b.position.y;
            let residual = libm::sqrt(dh.dot(dh) + dy * dy);
            (residual - tolerance).max(0.0)
        }
        ContextKind::RegionPlacement { region } => {
            region_world(objs[1], region).distance_outside(objs[0].position.ground())
        }
    };
    Ok(v)
}

pub fn context_term(scene: &Scene, spec: &ContextSpec) -> Result<f64, SpecError> {
    Ok(spec.weight * context_violation(scene, spec)?)
}

/// `E_social`: side-of, in-front-of, rows, spacing and mutual facing.
pub fn e_social(scene: &Scene, specs: &[SocialSpec]) -> Result<f64, SpecError> {
    let mut total = 0.0;
    for s in specs {
        if s.kind.is_cultural_only() {
            return Err(SpecError::malformed(s.label(), "cultural kind used in the social term"));
        }
        total += context_term(scene, s)?;
    }
    Ok(total)
}

/// `E_culture`: any context kind, including stacking order, mirrored pairs
/// and region placement.
pub fn e_culture(scene: &Scene, specs: &[CultureSpec]) -> Result<f64, SpecError> {
    let mut total = 0.0;
    for s in specs {
        total += context_term(scene, s)?;
    }
    Ok(total)
}

/// Everything needed to evaluate the layered objective.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct Problem {
    pub collision_pairs: Vec<(String, String)>,
    pub clearance: f64,
    pub relations: Vec<PairRelation>,
    pub lambda_dist: f64,
    pub affordances: Vec<AffordanceSpec>,
    pub social: Vec<SocialSpec>,
    pub culture: Vec<CultureSpec>,
}

impl Default for Problem {
    fn default() -> Self {
        Problem {
            collision_pairs: Vec::new(),
            clearance: 0.0,
            relations: Vec::new(),
            lambda_dist: 1.0,
            affordances: Vec::new(),
            social: Vec::new(),
            culture: Vec::new(),
        }
    }
}

impl Problem {
    pub fn validate(&self, scene: &Scene) -> Result<(), SpecError> {
        if !(self.lambda_dist > 0.0) {
            return Err(SpecError::malformed("lambda_dist", "must be positive"));
        }
        if !(self.clearance >= 0.0) {
            return Err(SpecError::malformed("clearance", "must be non-negative"));
        }
        for (a, b) in &self.collision_pairs {
            scene.object(a)?;
            scene.object(b)?;
            if a == b {
                return Err(SpecError::malformed("collision", "pair repeats one object"));
            }
        }
        for r in &self.relations {
            scene.object(&r.subject_id)?;
            r.reference_point(scene)?;
            if r.subject_id == r.related_id {
                return Err(SpecError::malformed("relation", "subject and related must differ"));
            }
            let t = r.tolerance;
            if !(t.x >= 0.0 && t.y >= 0.0 && t.z >= 0.0) || r.horizontal_radius.is_some_and(|h| !(h >= 0.0)) {
                return Err(SpecError::malformed("relation", "tolerances must be non-negative"));
            }
        }
        for a in &self.affordances {
            scene.object(&a.subject_id)?;
            scene.object(&a.related_id)?;
            if !(a.tolerance_deg > 0.0 && a.tolerance_deg <= 180.0) || !(a.alpha > 0.0) {
                return Err(SpecError::malformed(
                    "affordance",
                    "tolerance must be in (0, 180] and alpha positive",
                ));
            }
        }
        for s in &self.social {
            if s.kind.is_cultural_only() {
                return Err(SpecError::malformed(s.label(), "cultural kind used in the social term"));
            }
            s.validate(scene)?;
        }
        for s in &self.culture {
            s.validate(scene)?;
        }
        Ok(())
    }

    /// Sub-problem keeping only specs whose objects all satisfy `keep`.
    pub fn restricted(&self, keep: impl Fn(&str) -> bool) -> Problem {
        Problem {
            collision_pairs: self
                .collision_pairs
                .iter()
                .filter(|(a, b)| keep(a) && keep(b))
                .cloned()
                .collect(),
            clearance: self.clearance,
            relations: self
                .relations
                .iter()
                .filter(|r| keep(&r.subject_id) && keep(&r.related_id))
                .cloned()
                .collect(),
            lambda_dist: self.lambda_dist,
            affordances: self
                .affordances
                .iter()
                .filter(|a| keep(&a.subject_id) && keep(&a.related_id))
                .cloned()
                .collect(),
            social: self
                .social
                .iter()
                .filter(|s| s.participants.iter().all(|p| keep(p)))
                .cloned()
                .collect(),
            culture: self
                .culture
                .iter()
                .filter(|s| s.participants.iter().all(|p| keep(p)))
                .cloned()
                .collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.collision_pairs.is_empty()
            && self.relations.is_empty()
            && self.affordances.is_empty()
            && self.social.is_empty()
            && self.culture.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnergyBreakdown {
    pub e_collision: f64,
    pub e_distance: f64,
    pub e_affordance: f64,
    pub e_social: f64,
    pub e_culture: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    /// Sums in the fixed order collision, distance, affordance, social, culture.
    pub fn from_terms(c: f64, d: f64, a: f64, s: f64, k: f64) -> Self {
        EnergyBreakdown {
            e_collision: c,
            e_distance: d,
            e_affordance: a,
            e_social: s,
            e_culture: k,
            total: c + d + a + s + k,
        }
    }
}

pub fn total_energy(scene: &Scene, problem: &Problem) -> Result<EnergyBreakdown, SpecError> {
    Ok(EnergyBreakdown::from_terms(
        e_collision(scene, &problem.collision_pairs, problem.clearance)?,
        e_distance(scene, &problem.relations, problem.lambda_dist)?,
        e_affordance(scene, &problem.affordances)?,
        e_social(scene, &problem.social)?,
        e_culture(scene, &problem.culture)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{AssetRecord, ObjectInstance};
    use alloc::vec;

    fn scene_of(objs: &[(&str, Vec3, f64, Vec3)]) -> Scene {
        let mut cat = Vec::new();
        let mut s = Scene::default();
        for (id, pos, yaw, half) in objs {
            let a = AssetRecord::new(id, *half);
            s.objects.push(ObjectInstance::from_asset(id, &a, *pos, *yaw));
            cat.push(a);
        }
        s.catalog = cat;
        s
    }

    const CUBE: Vec3 = Vec3::new(0.5, 0.5, 0.5);
    const CHAIR: Vec3 = Vec3::new(0.25, 0.45, 0.25);

    fn pair(a: &str, b: &str) -> (String, String) {
        (a.into(), b.into())
    }

    #[test]
    fn collision_cases() {
        let far = scene_of(&[("a", Vec3::ZERO, 0.0, CHAIR), ("b", Vec3::new(5.0, 0.0, 0.0), 0.0, CHAIR)]);
        assert_eq!(e_collision(&far, &[pair("a", "b")], 0.0).unwrap(), 0.0);

        let same = scene_of(&[("a", Vec3::ZERO, 0.0, CUBE), ("b", Vec3::ZERO, 0.0, CUBE)]);
        assert_eq!(e_collision(&same, &[pair("a", "b")], 0.0).unwrap(), 1.0);

        // squares 5 m apart with 0.5 m footprints: gap 4.5, clearance 2.5 overlaps
        let e = e_collision(&far, &[pair("a", "b")], 2.5).unwrap();
        let ja = dilate(&footprint(&far.objects[0]), 2.5);
        let jb = dilate(&footprint(&far.objects[1]), 2.5);
        assert!(e > 0.0);
        assert_eq!(e, intersection_area(&ja, &jb));

        assert_eq!(
            e_collision(&far, &[pair("a", "zz")], 0.0),
            Err(SceneError::UnknownObject("zz".into()))
        );
    }

    #[test]
    fn distance_cases() {
        let s = scene_of(&[("i", Vec3::new(1.0, 2.0, 3.0), 0.0, CUBE), ("j", Vec3::ZERO, 0.0, CUBE)]);
        let r = PairRelation::new("i", "j", Vec3::new(1.0, 2.0, 3.0));
        assert_eq!(e_distance(&s, &[r], 1.0).unwrap(), 0.0);

        let r = PairRelation::new("i", "j", Vec3::new(1.0, 1.0, 3.0));
        assert_eq!(e_distance(&s, &[r], 1.0).unwrap(), 1.0);

        let s = scene_of(&[("i", Vec3::new(3.0, 4.0, 0.0), 0.0, CUBE), ("j", Vec3::ZERO, 0.0, CUBE)]);
        let mut r = PairRelation::new("i", "j", Vec3::ZERO);
        r.free = [true, false, false];
        assert_eq!(e_distance(&s, &[r], 2.0).unwrap(), 32.0);
    }

    #[test]
    fn distance_dead_zone_and_radius() {
        let s = scene_of(&[("i", Vec3::new(3.0, 0.25, 4.0), 0.0, CUBE), ("j", Vec3::ZERO, 0.0, CUBE)]);
        let mut r = PairRelation::new("i", "j", Vec3::ZERO);
        r.tolerance = Vec3::new(0.0, 0.5, 0.0);
        r.horizontal_radius = Some(4.0);
        // radial 5 - 4 = 1, y inside its dead zone
        assert_eq!(e_distance(&s, &[r.clone()], 1.0).unwrap(), 1.0);
        r.horizontal_radius = Some(5.0);
        assert_eq!(e_distance(&s, &[r], 1.0).unwrap(), 0.0);
    }

    #[test]
    fn containment_term() {
        let s = scene_of(&[
            ("cup", Vec3::new(0.55, 1.0, 0.0), 0.0, Vec3::new(0.1, 0.1, 0.1)),
            ("table", Vec3::ZERO, 0.0, Vec3::new(0.6, 0.5, 0.4)),
        ]);
        let mut r = PairRelation::new("cup", "table", Vec3::ZERO);
        r.free = [true, true, true];
        r.contain = true;
        let res = relation_residual(&s, &r).unwrap();
        assert!((res.contain_excess - 0.05).abs() < 1e-12);
    }

    #[test]
    fn affordance_cases() {
        // chair south of desk facing +z (toward the desk)
        let s = scene_of(&[("chair", Vec3::new(0.0, 0.0, -1.0), 0.0, CHAIR), ("desk", Vec3::ZERO, 0.0, CUBE)]);
        let spec = AffordanceSpec {
            subject_id: "chair".into(),
            related_id: "desk".into(),
            mode: FacingMode::FaceToward,
            tolerance_deg: 15.0,
            alpha: 1.0,
        };
        assert_eq!(e_affordance(&s, core::slice::from_ref(&spec)).unwrap(), 0.0);

        let s = s.with_pose("chair", Vec3::new(0.0, 0.0, -1.0), 90.0).unwrap();
        assert_eq!(e_affordance(&s, &[spec]).unwrap(), 75.0);

        let s = scene_of(&[("p1", Vec3::ZERO, 30.0, CHAIR), ("p2", Vec3::new(1.0, 0.0, 0.0), 30.0, CHAIR)]);
        let same = AffordanceSpec {
            subject_id: "p2".into(),
            related_id: "p1".into(),
            mode: FacingMode::FaceSameDirection,
            tolerance_deg: 15.0,
            alpha: 1.0,
        };
        assert_eq!(e_affordance(&s, &[same]).unwrap(), 0.0);

        let coincident = scene_of(&[("a", Vec3::ZERO, 123.0, CHAIR), ("b", Vec3::ZERO, 0.0, CHAIR)]);
        let spec = AffordanceSpec {
            subject_id: "a".into(),
            related_id: "b".into(),
            mode: FacingMode::FaceToward,
            tolerance_deg: 1.0,
            alpha: 1.0,
        };
        assert_eq!(e_affordance(&coincident, &[spec]).unwrap(), 0.0);
    }

    #[test]
    fn social_side_of() {
        let plate = ("plate", Vec3::ZERO, 0.0, Vec3::new(0.13, 0.01, 0.13));
        let right = scene_of(&[plate, ("knife", Vec3::new(0.3, 0.0, 0.0), 0.0, Vec3::new(0.01, 0.005, 0.1))]);
        let spec = ContextSpec::new(ContextKind::SideOf { side: Side::Right, margin: 0.0 }, &["knife", "plate"], 1.0);
        assert_eq!(e_social(&right, core::slice::from_ref(&spec)).unwrap(), 0.0);
        let left = right.with_pose("knife", Vec3::new(-0.3, 0.0, 0.0), 0.0).unwrap();
        assert!((e_social(&left, core::slice::from_ref(&spec)).unwrap() - 0.3).abs() < 1e-15);

        // the plate's frame matters: turn the plate around and left becomes right
        let turned = left.with_pose("plate", Vec3::ZERO, 180.0).unwrap();
        assert_eq!(e_social(&turned, &[spec]).unwrap(), 0.0);
    }

    #[test]
    fn social_spacing_and_counts() {
        let s = scene_of(&[
            ("d1", Vec3::ZERO, 0.0, CHAIR),
            ("d2", Vec3::new(1.0, 0.0, 0.0), 0.0, CHAIR),
            ("d3", Vec3::new(2.0, 0.0, 0.0), 0.0, CHAIR),
        ]);
        let eq = ContextSpec::new(ContextKind::EqualSpacing { max_variance: 0.0 }, &["d1", "d2", "d3"], 1.0);
        assert_eq!(e_social(&s, &[eq]).unwrap(), 0.0);

        let s2 = s.with_pose("d3", Vec3::new(3.0, 0.0, 0.0), 0.0).unwrap();
        let eq = ContextSpec::new(ContextKind::EqualSpacing { max_variance: 0.0 }, &["d1", "d2", "d3"], 2.0);
        // gaps 1 and 2: variance 0.25
        assert_eq!(e_social(&s2, &[eq]).unwrap(), 0.5);

        let bad = ContextSpec::new(ContextKind::EqualSpacing { max_variance: 0.0 }, &["d1", "d2"], 1.0);
        assert!(matches!(e_social(&s, &[bad]), Err(SpecError::Malformed { .. })));
        let cultural = ContextSpec::new(ContextKind::StackOrder { horizontal_tolerance: 0.1 }, &["d1", "d2"], 1.0);
        assert!(e_social(&s, &[cultural]).is_err());
    }

    #[test]
    fn culture_stack_order() {
        let s = scene_of(&[
            ("large", Vec3::new(0.0, 0.1, 0.0), 0.0, Vec3::new(0.15, 0.1, 0.15)),
            ("small", Vec3::new(0.0, 0.28, 0.0), 0.0, Vec3::new(0.11, 0.08, 0.11)),
            ("orange", Vec3::new(0.0, 0.41, 0.0), 0.0, Vec3::new(0.05, 0.05, 0.05)),
        ]);
        let spec = ContextSpec::new(
            ContextKind::StackOrder { horizontal_tolerance: 0.02 },
            &["large", "small", "orange"],
            3.0,
        );
        assert_eq!(e_culture(&s, core::slice::from_ref(&spec)).unwrap(), 0.0);
        let s2 = s.with_pose("orange", Vec3::new(0.05, 0.2, 0.0), 0.0).unwrap();
        // one inversion plus 0.03 m excess offset
        assert!((e_culture(&s2, &[spec]).unwrap() - 3.0 * 1.03).abs() < 1e-12);
    }

    #[test]
    fn culture_region_and_symmetry() {
        let s = scene_of(&[
            ("shrine", Vec3::ZERO, 0.0, Vec3::new(2.0, 2.0, 2.0)),
            ("a", Vec3::new(-2.0, 0.0, 6.0), 0.0, CHAIR),
            ("un", Vec3::new(2.0, 0.0, 6.0), 0.0, CHAIR),
        ]);
        let region = vec![
            Point2::new(-4.0, 4.0),
            Point2::new(-1.0, 4.0),
            Point2::new(-1.0, 8.0),
            Point2::new(-4.0, 8.0),
        ];
        let spec = ContextSpec::new(ContextKind::RegionPlacement { region }, &["a", "shrine"], 1.0);
        assert_eq!(e_culture(&s, core::slice::from_ref(&spec)).unwrap(), 0.0);
        let swapped = s.with_pose("a", Vec3::new(2.0, 0.0, 6.0), 0.0).unwrap();
        assert!((e_culture(&swapped, &[spec]).unwrap() - 3.0).abs() < 1e-12);

        let sym = ContextSpec::new(ContextKind::SymmetricPair { tolerance: 0.0 }, &["a", "un", "shrine"], 1.0);
        assert_eq!(e_culture(&s, core::slice::from_ref(&sym)).unwrap(), 0.0);
        let off = s.with_pose("un", Vec3::new(2.0, 0.0, 6.5), 0.0).unwrap();
        assert!((e_culture(&off, &[sym]).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn total_energy_cases() {
        let s = scene_of(&[("a", Vec3::ZERO, 0.0, CUBE), ("b", Vec3::ZERO, 0.0, CUBE)]);
        let e = total_energy(&s, &Problem::default()).unwrap();
        assert_eq!(e, EnergyBreakdown::default());

        let p = Problem {
            collision_pairs: vec![pair("a", "b")],
            ..Problem::default()
        };
        let e = total_energy(&s, &p).unwrap();
        assert_eq!(e.total, 1.0);
        assert_eq!(e.e_collision, 1.0);
    }

    #[test]
    fn chair_next_to_desk_satisfied() {
        let s = scene_of(&[
            ("desk", Vec3::new(0.0, 0.375, 0.0), 0.0, Vec3::new(0.6, 0.375, 0.3)),
            ("chair", Vec3::new(0.0, 0.45, -0.7), 0.0, CHAIR),
        ]);
        let mut near = PairRelation::new("chair", "desk", Vec3::new(0.0, 0.45 - 0.375, 0.0));
        near.horizontal_radius = Some(1.5 * (0.67 + 0.36));
        let p = Problem {
            collision_pairs: vec![pair("chair", "desk")],
            relations: vec![near],
            affordances: vec![AffordanceSpec {
                subject_id: "chair".into(),
                related_id: "desk".into(),
                mode: FacingMode::FaceToward,
                tolerance_deg: 15.0,
                alpha: 1.0,
            }],
            ..Problem::default()
        };
        p.validate(&s).unwrap();
        assert_eq!(total_energy(&s, &p).unwrap().total, 0.0);
    }

    #[test]
    fn restriction_drops_unplaced() {
        let p = Problem {
            collision_pairs: vec![pair("a", "b"), pair("a", "c")],
            relations: vec![PairRelation::new("a", "c", Vec3::ZERO)],
            ..Problem::default()
        };
        let r = p.restricted(|id| id != "c");
        assert_eq!(r.collision_pairs, vec![pair("a", "b")]);
        assert!(r.relations.is_empty());
    }
}
