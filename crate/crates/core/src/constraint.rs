//! Declarative task constraints.
//!
//! Each [`Constraint`] compiles into energy specs (see [`compile`]) and also
//! carries an exact geometric predicate ([`Constraint::holds`]) written
//! against the raw scene rather than the energy code, so the two can be
//! checked against each other.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::energy::{AffordanceSpec, ContextKind, ContextSpec, FacingMode, PairRelation, Problem, Side};
use crate::error::{SceneError, SpecError};
use crate::geometry::{footprint, separation};
use crate::math::{Point2, Vec3, GEOM_EPS};
use crate::scene::{ObjectInstance, Scene};

#[cfg(feature = "serde")]
fn one() -> f64 {
    1.0
}
#[cfg(feature = "serde")]
fn default_gap_frac() -> f64 {
    0.01
}
#[cfg(feature = "serde")]
fn default_next_factor() -> f64 {
    1.5
}
#[cfg(feature = "serde")]
fn default_tol_deg() -> f64 {
    15.0
}
#[cfg(feature = "serde")]
fn default_variance() -> f64 {
    1e-4
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Constraint {
    /// Subject rests on the support's top (or on a named anchor), its
    /// footprint inside the support's footprint, with a vertical gap of at
    /// most `max_gap_frac` of the support's height.
    OnTop {
        subject: String,
        support: String,
        #[cfg_attr(feature = "serde", serde(default))]
        anchor: Option<String>,
        #[cfg_attr(feature = "serde", serde(default = "default_gap_frac"))]
        max_gap_frac: f64,
    },
    /// Subject center inside the box `anchor ± extent`.
    Inside {
        subject: String,
        container: String,
        anchor: String,
        extent: Vec3,
    },
    /// Horizontal center distance at most `factor · (r_subject + r_related)`,
    /// with `r` the footprint bounding-circle radius.
    NextTo {
        subject: String,
        related: String,
        #[cfg_attr(feature = "serde", serde(default = "default_next_factor"))]
        factor: f64,
    },
    Facing {
        subject: String,
        related: String,
        mode: FacingMode,
        #[cfg_attr(feature = "serde", serde(default = "default_tol_deg"))]
        tolerance_deg: f64,
    },
    SideOf {
        subject: String,
        related: String,
        side: Side,
        #[cfg_attr(feature = "serde", serde(default))]
        margin: f64,
    },
    InFrontOf {
        subject: String,
        related: String,
        #[cfg_attr(feature = "serde", serde(default))]
        anchor: Option<String>,
        min_along: f64,
        max_along: f64,
        max_lateral: f64,
    },
    Row {
        members: Vec<String>,
        min_gap: f64,
        max_gap: f64,
    },
    EqualSpacing {
        members: Vec<String>,
        #[cfg_attr(feature = "serde", serde(default = "default_variance"))]
        max_variance: f64,
    },
    MutualFacing {
        a: String,
        b: String,
        #[cfg_attr(feature = "serde", serde(default = "default_tol_deg"))]
        tolerance_deg: f64,
    },
    /// Members listed bottom to top.
    StackOrder {
        members: Vec<String>,
        horizontal_tolerance: f64,
    },
    /// `a` mirrored across the axis object's front line lands on `b`.
    SymmetricPair {
        a: String,
        b: String,
        axis: String,
        tolerance: f64,
    },
    /// Subject center inside `region`, given in the reference's local `(x, z)` frame.
    InRegion {
        subject: String,
        reference: String,
        region: Vec<Point2>,
    },
    NoOverlap { a: String, b: String },
}

/// A constraint plus its energy weight.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeightedConstraint {
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub constraint: Constraint,
    #[cfg_attr(feature = "serde", serde(default = "one"))]
    pub weight: f64,
    /// Score a social-kind constraint in the cultural term instead, for
    /// conventions such as which side a statue stands on.
    #[cfg_attr(feature = "serde", serde(default))]
    pub culture: bool,
}

impl From<Constraint> for WeightedConstraint {
    fn from(constraint: Constraint) -> Self {
        WeightedConstraint {
            constraint,
            weight: 1.0,
            culture: false,
        }
    }
}

impl Constraint {
    pub fn name(&self) -> &'static str {
        match self {
            Constraint::OnTop { .. } => "on_top",
            Constraint::Inside { .. } => "inside",
            Constraint::NextTo { .. } => "next_to",
            Constraint::Facing { .. } => "facing",
            Constraint::SideOf { .. } => "side_of",
            Constraint::InFrontOf { .. } => "in_front_of",
            Constraint::Row { .. } => "row",
            Constraint::EqualSpacing { .. } => "equal_spacing",
            Constraint::MutualFacing { .. } => "mutual_facing",
            Constraint::StackOrder { .. } => "stack_order",
            Constraint::SymmetricPair { .. } => "symmetric_pair",
            Constraint::InRegion { .. } => "in_region",
            Constraint::NoOverlap { .. } => "no_overlap",
        }
    }

    /// Every object id the constraint mentions; the first is the one a
    /// correction moves.
    pub fn participants(&self) -> Vec<&str> {
        match self {
            Constraint::OnTop { subject, support: r, .. }
            | Constraint::Inside { subject, container: r, .. }
            | Constraint::NextTo { subject, related: r, .. }
            | Constraint::Facing { subject, related: r, .. }
            | Constraint::SideOf { subject, related: r, .. }
            | Constraint::InFrontOf { subject, related: r, .. }
            | Constraint::InRegion { subject, reference: r, .. } => vec![subject.as_str(), r.as_str()],
            Constraint::Row { members, .. }
            | Constraint::EqualSpacing { members, .. }
            | Constraint::StackOrder { members, .. } => members.iter().map(String::as_str).collect(),
            Constraint::MutualFacing { a, b, .. } | Constraint::NoOverlap { a, b } => vec![a.as_str(), b.as_str()],
            Constraint::SymmetricPair { a, b, axis, .. } => vec![b.as_str(), a.as_str(), axis.as_str()],
        }
    }

    fn label(&self) -> String {
        let mut s = String::from(self.name());
        s.push('(');
        s.push_str(&self.participants().join(","));
        s.push(')');
        s
    }

    fn check_params(&self) -> Result<(), SpecError> {
        let bad = |why: &str| Err(SpecError::malformed(self.label(), why));
        match self {
            Constraint::OnTop { max_gap_frac, .. } if !(*max_gap_frac > 0.0) => bad("max_gap_frac must be positive"),
            Constraint::Inside { extent, .. } if !(extent.x > 0.0 && extent.y > 0.0 && extent.z > 0.0) => {
                bad("extent must be positive")
            }
            Constraint::NextTo { factor, .. } if !(*factor > 0.0) => bad("factor must be positive"),
            Constraint::Facing { tolerance_deg, .. } | Constraint::MutualFacing { tolerance_deg, .. }
                if !(*tolerance_deg > 0.0 && *tolerance_deg <= 180.0) =>
            {
                bad("tolerance must be in (0, 180]")
            }
            Constraint::SideOf { margin, .. } if !(*margin >= 0.0) => bad("margin must be non-negative"),
            Constraint::InFrontOf {
                min_along,
                max_along,
                max_lateral,
                ..
            } if !(min_along < max_along && *max_lateral > 0.0) => bad("empty in-front box"),
            Constraint::Row { members, min_gap, max_gap } if members.len() < 2 || !(min_gap <= max_gap) => {
                bad("row needs two members and min_gap ≤ max_gap")
            }
            Constraint::EqualSpacing { members, max_variance } if members.len() < 3 || !(*max_variance > 0.0) => {
                bad("equal spacing needs three members and a positive variance tolerance")
            }
            Constraint::StackOrder {
                members,
                horizontal_tolerance,
            } if members.len() < 2 || !(*horizontal_tolerance > 0.0) => bad("stack needs two members"),
            Constraint::SymmetricPair { tolerance, .. } if !(*tolerance > 0.0) => bad("tolerance must be positive"),
            Constraint::InRegion { region, .. } if region.len() < 3 => bad("region needs three points"),
            _ => Ok(()),
        }
    }

    pub fn validate(&self, scene: &Scene) -> Result<(), SpecError> {
        self.check_params()?;
        let ids = self.participants();
        for (i, id) in ids.iter().enumerate() {
            scene.object(id)?;
            if ids[..i].contains(id) {
                return Err(SpecError::malformed(self.label(), "participants must be distinct"));
            }
        }
        match self {
            Constraint::OnTop {
                support,
                anchor: Some(a),
                ..
            } => anchor_world(scene.object(support)?, a).map(|_| ()),
            Constraint::Inside { container, anchor, .. } => anchor_world(scene.object(container)?, anchor).map(|_| ()),
            Constraint::InFrontOf {
                related, anchor: Some(a), ..
            } => anchor_world(scene.object(related)?, a).map(|_| ()),
            _ => Ok(()),
        }
    }

    /// Exact predicate evaluated on the raw scene.
    pub fn holds(&self, scene: &Scene) -> Result<bool, SpecError> {
        self.validate(scene)?;
        let o = |id: &str| scene.object(id);
        let ok = match self {
            Constraint::OnTop {
                subject,
                support,
                anchor,
                max_gap_frac,
            } => {
                let (s, t) = (o(subject)?, o(support)?);
                let top = support_top(t, anchor.as_deref())?;
                let gap = s.world_aabb().min.y - top;
                let limit = max_gap_frac * t.world_aabb().size().y;
                let fp = footprint(t);
                gap.abs() <= limit && footprint(s).vertices().iter().all(|v| fp.contains(*v))
            }
            Constraint::Inside {
                subject,
                container,
                anchor,
                extent,
            } => {
                let c = anchor_world(o(container)?, anchor)?;
                let d = o(subject)?.position - c;
                d.x.abs() <= extent.x && d.y.abs() <= extent.y && d.z.abs() <= extent.z
            }
            Constraint::NextTo {
                subject,
                related,
                factor,
            } => {
                let (s, r) = (o(subject)?, o(related)?);
                let reach = factor * (ground_radius(s) + ground_radius(r));
                s.position.ground().dist(r.position.ground()) <= reach
            }
            Constraint::Facing {
                subject,
                related,
                mode,
                tolerance_deg,
            } => facing_ok(o(subject)?, o(related)?, *mode, *tolerance_deg),
            Constraint::SideOf {
                subject,
                related,
                side,
                margin,
            } => {
                let (lateral, _) = local_ground(o(related)?, o(subject)?.position);
                match side {
                    Side::Right => lateral >= *margin,
                    Side::Left => lateral <= -margin,
                }
            }
            Constraint::InFrontOf {
                subject,
                related,
                anchor,
                min_along,
                max_along,
                max_lateral,
            } => {
                let r = o(related)?;
                let origin = match anchor {
                    Some(a) => anchor_world(r, a)?,
                    None => r.position,
                };
                let (lateral, along) = frame_coords(r, origin, o(subject)?.position);
                along >= *min_along && along <= *max_along && lateral.abs() <= *max_lateral
            }
            Constraint::Row {
                members,
                min_gap,
                max_gap,
            } => gaps(scene, members)?.iter().all(|g| g >= min_gap && g <= max_gap),
            Constraint::EqualSpacing { members, max_variance } => {
                let g = gaps(scene, members)?;
                let n = g.len() as f64;
                let mean = g.iter().sum::<f64>() / n;
                g.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n <= *max_variance
            }
            Constraint::MutualFacing { a, b, tolerance_deg } => {
                let (a, b) = (o(a)?, o(b)?);
                facing_ok(a, b, FacingMode::FaceToward, *tolerance_deg)
                    && facing_ok(b, a, FacingMode::FaceToward, *tolerance_deg)
            }
            Constraint::StackOrder {
                members,
                horizontal_tolerance,
            } => {
                let objs = members.iter().map(|m| o(m)).collect::<Result<Vec<_>, _>>()?;
                objs.windows(2).all(|w| {
                    w[1].position.y > w[0].position.y
                        && w[1].position.ground().dist(w[0].position.ground()) <= *horizontal_tolerance
                })
            }
            Constraint::SymmetricPair { a, b, axis, tolerance } => {
                let ax = o(axis)?;
                let (pa, pb) = (o(a)?.position, o(b)?.position);
                let (la, fa) = local_ground(ax, pa);
                let (lb, fb) = local_ground(ax, pb);
                let (dx, dz, dy) = (la + lb, fa - fb, pa.y - pb.y);
                libm::sqrt(dx * dx + dz * dz + dy * dy) <= *tolerance
            }
            Constraint::InRegion {
                subject,
                reference,
                region,
            } => {
                let (lx, lz) = local_ground(o(reference)?, o(subject)?.position);
                point_in_local_region(Point2::new(lx, lz), region)
            }
            Constraint::NoOverlap { a, b } => separation(&footprint(o(a)?), &footprint(o(b)?)).0 <= GEOM_EPS,
        };
        Ok(ok)
    }
}

fn anchor_world(obj: &ObjectInstance, name: &str) -> Result<Vec3, SpecError> {
    obj.anchor_world(name).ok_or_else(|| {
        SceneError::UnknownAnchor {
            id: obj.id.clone(),
            anchor: name.into(),
        }
        .into()
    })
}

/// World height a supported object should rest at.
pub fn support_top(support: &ObjectInstance, anchor: Option<&str>) -> Result<f64, SpecError> {
    match anchor {
        Some(a) => Ok(anchor_world(support, a)?.y),
        None => Ok(support.world_aabb().max.y),
    }
}

/// Largest horizontal distance from the object's center to a box corner.
fn ground_radius(obj: &ObjectInstance) -> f64 {
    let c = obj.position.ground();
    obj.world_corners()
        .iter()
        .map(|k| k.ground().dist(c))
        .fold(0.0, f64::max)
}

/// `(lateral, along)` coordinates of `p` relative to `origin` in `frame`'s
/// ground axes (`lateral` positive on its right).
fn frame_coords(frame: &ObjectInstance, origin: Vec3, p: Vec3) -> (f64, f64) {
    let f = frame.front_ground();
    let d = p.ground() - origin.ground();
    (d.x * f.z - d.z * f.x, d.x * f.x + d.z * f.z)
}

fn local_ground(frame: &ObjectInstance, p: Vec3) -> (f64, f64) {
    frame_coords(frame, frame.position, p)
}

fn facing_ok(s: &ObjectInstance, r: &ObjectInstance, mode: FacingMode, tol: f64) -> bool {
    let f = s.front_ground();
    let want = match mode {
        FacingMode::FaceSameDirection => r.front_ground(),
        FacingMode::FaceToward | FacingMode::FaceAway => {
            let d = r.position.ground() - s.position.ground();
            let n = d.norm();
            if n < 1e-12 {
                return true;
            }
            let sign = if mode == FacingMode::FaceAway { -1.0 } else { 1.0 };
            d * (sign / n)
        }
    };
    let cos = (f.dot(want) / (f.norm() * want.norm())).clamp(-1.0, 1.0);
    // compare in cosine space, nudged so an exact-tolerance angle passes
    cos >= libm::cos(tol.to_radians()) - 1e-12
}

fn gaps(scene: &Scene, members: &[String]) -> Result<Vec<f64>, SpecError> {
    let pts = members
        .iter()
        .map(|m| scene.object(m).map(|o| o.position.ground()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(pts.windows(2).map(|w| w[0].dist(w[1])).collect())
}

/// Point-in-convex-region by consistent turn direction. The region is given
/// as lateral/forward pairs in the reference frame, either winding.
fn point_in_local_region(p: Point2, region: &[Point2]) -> bool {
    // local (x, z) uses x = lateral (right), z = forward
    let n = region.len();
    let mut pos = false;
    let mut neg = false;
    for i in 0..n {
        let a = region[i];
        let b = region[(i + 1) % n];
        let c = (b - a).cross(p - a) / (b - a).norm();
        if c > GEOM_EPS {
            pos = true;
        }
        if c < -GEOM_EPS {
            neg = true;
        }
    }
    !(pos && neg)
}

/// Compiles constraints into an energy [`Problem`]. Support relations
/// (`OnTop`, `Inside`) never add collision pairs; only `NoOverlap` does.
/// Distance-type constraints (`OnTop`, `Inside`, `NextTo`) are scaled by the
/// global `lambda_dist` and ignore their own weight.
pub fn compile(scene: &Scene, constraints: &[WeightedConstraint], lambda_dist: f64) -> Result<Problem, SpecError> {
    let mut p = Problem {
        lambda_dist,
        ..Problem::default()
    };
    for wc in constraints {
        compile_one(scene, wc, &mut p)?;
    }
    p.validate(scene)?;
    Ok(p)
}

pub fn compile_one(scene: &Scene, wc: &WeightedConstraint, p: &mut Problem) -> Result<(), SpecError> {
    let c = &wc.constraint;
    c.validate(scene)?;
    if !(wc.weight > 0.0) {
        return Err(SpecError::malformed(c.label(), "weight must be positive"));
    }
    let w = wc.weight;
    let ctx = |kind: ContextKind, ids: &[&str]| ContextSpec::new(kind, ids, w);
    let social_kind = matches!(
        c,
        Constraint::SideOf { .. }
            | Constraint::InFrontOf { .. }
            | Constraint::Row { .. }
            | Constraint::EqualSpacing { .. }
            | Constraint::MutualFacing { .. }
    );
    if wc.culture && !social_kind {
        return Err(SpecError::malformed(c.label(), "only social kinds can move to the cultural term"));
    }
    let social = if wc.culture { &mut p.culture } else { &mut p.social };
    match c {
        Constraint::OnTop {
            subject,
            support,
            anchor,
            max_gap_frac,
        } => {
            let s = scene.object(subject)?;
            let t = scene.object(support)?;
            let half_h = s.position.y - s.world_aabb().min.y;
            let base = match anchor {
                Some(_) => 0.0,
                None => t.world_aabb().max.y - t.position.y,
            };
            let mut r = PairRelation::new(subject, support, Vec3::new(0.0, base + half_h, 0.0));
            r.related_anchor = anchor.clone();
            r.free = [true, false, true];
            r.tolerance = Vec3::new(0.0, max_gap_frac * t.world_aabb().size().y, 0.0);
            r.contain = true;
            p.relations.push(r);
        }
        Constraint::Inside {
            subject,
            container,
            anchor,
            extent,
        } => {
            let mut r = PairRelation::new(subject, container, Vec3::ZERO);
            r.related_anchor = Some(anchor.clone());
            r.tolerance = *extent;
            p.relations.push(r);
        }
        Constraint::NextTo {
            subject,
            related,
            factor,
        } => {
            let rs = footprint(scene.object(subject)?).bounding_circle().1;
            let rr = footprint(scene.object(related)?).bounding_circle().1;
            let mut r = PairRelation::new(subject, related, Vec3::ZERO);
            r.free = [false, true, false];
            r.horizontal_radius = Some(factor * (rs + rr));
            p.relations.push(r);
        }
        Constraint::Facing {
            subject,
            related,
            mode,
            tolerance_deg,
        } => p.affordances.push(AffordanceSpec {
            subject_id: subject.clone(),
            related_id: related.clone(),
            mode: *mode,
            tolerance_deg: *tolerance_deg,
            alpha: w,
        }),
        Constraint::SideOf {
            subject,
            related,
            side,
            margin,
        } => social.push(ctx(
            ContextKind::SideOf {
                side: *side,
                margin: *margin,
            },
            &[subject, related],
        )),
        Constraint::InFrontOf {
            subject,
            related,
            anchor,
            min_along,
            max_along,
            max_lateral,
        } => social.push(ctx(
            ContextKind::InFrontOf {
                anchor: anchor.clone(),
                min_along: *min_along,
                max_along: *max_along,
                max_lateral: *max_lateral,
            },
            &[subject, related],
        )),
        Constraint::Row {
            members,
            min_gap,
            max_gap,
        } => social.push(ContextSpec {
            kind: ContextKind::OrderedRow {
                min_gap: *min_gap,
                max_gap: *max_gap,
            },
            participants: members.clone(),
            weight: w,
        }),
        Constraint::EqualSpacing { members, max_variance } => social.push(ContextSpec {
            kind: ContextKind::EqualSpacing {
                max_variance: *max_variance,
            },
            participants: members.clone(),
            weight: w,
        }),
        Constraint::MutualFacing { a, b, tolerance_deg } => social.push(ctx(
            ContextKind::MutualFacing {
                tolerance_deg: *tolerance_deg,
            },
            &[a, b],
        )),
        Constraint::StackOrder {
            members,
            horizontal_tolerance,
        } => p.culture.push(ContextSpec {
            kind: ContextKind::StackOrder {
                horizontal_tolerance: *horizontal_tolerance,
            },
            participants: members.clone(),
            weight: w,
        }),
        Constraint::SymmetricPair { a, b, axis, tolerance } => p.culture.push(ctx(
            ContextKind::SymmetricPair { tolerance: *tolerance },
            &[a, b, axis],
        )),
        Constraint::InRegion {
            subject,
            reference,
            region,
        } => p.culture.push(ctx(
            ContextKind::RegionPlacement { region: region.clone() },
            &[subject, reference],
        )),
        Constraint::NoOverlap { a, b } => p.collision_pairs.push((a.clone(), b.clone())),
    }
    Ok(())
}
