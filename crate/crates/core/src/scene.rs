//! Scene representation: oriented boxes with anchors, plus the asset catalog.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::error::SceneError;
use crate::math::{bearing_deg, wrap_180, wrap_360, Mat3, Point2, Vec3};

/// Rotation as yaw/pitch/roll in degrees, applied roll first, then pitch,
/// then yaw (`R = Ry · Rx · Rz`).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Orientation {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

impl Orientation {
    /// Builds a normalized orientation: yaw in `[0, 360)`, pitch and roll in
    /// `[-180, 180)`.
    pub fn new(yaw: f64, pitch: f64, roll: f64) -> Self {
        Orientation {
            yaw: wrap_360(yaw),
            pitch: wrap_180(pitch),
            roll: wrap_180(roll),
        }
    }

    pub fn from_yaw(yaw: f64) -> Self {
        Orientation::new(yaw, 0.0, 0.0)
    }

    pub fn matrix(&self) -> Mat3 {
        Mat3::rot_y(self.yaw)
            .mul(&Mat3::rot_x(self.pitch))
            .mul(&Mat3::rot_z(self.roll))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScaleVec {
    pub sx: f64,
    pub sy: f64,
    pub sz: f64,
}

impl ScaleVec {
    pub const ONE: ScaleVec = ScaleVec { sx: 1.0, sy: 1.0, sz: 1.0 };

    pub fn as_vec3(self) -> Vec3 {
        Vec3::new(self.sx, self.sy, self.sz)
    }
}

impl Default for ScaleVec {
    fn default() -> Self {
        ScaleVec::ONE
    }
}

/// Catalog entry: the geometry every instance of an asset starts from.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AssetRecord {
    pub asset_id: String,
    pub half_extents: Vec3,
    pub front_axis: Vec3,
    pub anchors: BTreeMap<String, Vec3>,
    pub tags: Vec<String>,
}

impl AssetRecord {
    pub fn new(asset_id: &str, half_extents: Vec3) -> Self {
        AssetRecord {
            asset_id: asset_id.into(),
            half_extents,
            front_axis: Vec3::UNIT_Z,
            anchors: BTreeMap::new(),
            tags: Vec::new(),
        }
    }

    pub fn has_tag(&self, tag: &str) -> bool {
        self.tags.iter().any(|t| t == tag)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ObjectInstance {
    pub id: String,
    pub asset_id: String,
    pub position: Vec3,
    pub orientation: Orientation,
    pub scale: ScaleVec,
    /// Local box half-sizes before scale.
    pub half_extents: Vec3,
    /// Unit front direction in the local frame.
    pub front_axis: Vec3,
    pub anchors: BTreeMap<String, Vec3>,
}

/// World-space axis-aligned bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn size(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn translated(&self, t: Vec3) -> Aabb {
        Aabb {
            min: self.min + t,
            max: self.max + t,
        }
    }

    pub fn union(&self, o: &Aabb) -> Aabb {
        Aabb {
            min: Vec3::new(
                self.min.x.min(o.min.x),
                self.min.y.min(o.min.y),
                self.min.z.min(o.min.z),
            ),
            max: Vec3::new(
                self.max.x.max(o.max.x),
                self.max.y.max(o.max.y),
                self.max.z.max(o.max.z),
            ),
        }
    }
}

impl ObjectInstance {
    /// Instantiates an asset at `position` with the given yaw and unit scale.
    pub fn from_asset(id: &str, asset: &AssetRecord, position: Vec3, yaw: f64) -> Self {
        ObjectInstance {
            id: id.into(),
            asset_id: asset.asset_id.clone(),
            position,
            orientation: Orientation::from_yaw(yaw),
            scale: ScaleVec::ONE,
            half_extents: asset.half_extents,
            front_axis: asset.front_axis,
            anchors: asset.anchors.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let bad = |reason: &str| {
            Err(SceneError::InvalidObject {
                id: self.id.clone(),
                reason: reason.into(),
            })
        };
        if !self.position.is_finite() {
            return bad("position is not finite");
        }
        let o = self.orientation;
        if !(o.yaw.is_finite() && o.pitch.is_finite() && o.roll.is_finite()) {
            return bad("orientation is not finite");
        }
        if !(0.0..360.0).contains(&o.yaw)
            || !(-180.0..180.0).contains(&o.pitch)
            || !(-180.0..180.0).contains(&o.roll)
        {
            return bad("orientation is not normalized");
        }
        let s = self.scale;
        if !(s.sx > 0.0 && s.sy > 0.0 && s.sz > 0.0) || !s.as_vec3().is_finite() {
            return bad("scale must be positive");
        }
        let h = self.half_extents;
        if !(h.x > 0.0 && h.y > 0.0 && h.z > 0.0) || !h.is_finite() {
            return bad("half extents must be positive");
        }
        if (self.front_axis.norm() - 1.0).abs() > 1e-6 {
            return bad("front axis must be unit length");
        }
        if self.anchors.values().any(|a| !a.is_finite()) {
            return bad("anchor is not finite");
        }
        Ok(())
    }

    pub fn rotation(&self) -> Mat3 {
        self.orientation.matrix()
    }

    /// Maps a point from the object's local (unscaled) frame to the world.
    pub fn local_to_world(&self, local: Vec3) -> Vec3 {
        self.position + self.rotation().apply(local.hadamard(self.scale.as_vec3()))
    }

    /// The eight box corners in world space.
    ///
    /// Corner `i` uses `+half` on x when bit 0 of `i` is set, on y for bit 1
    /// and on z for bit 2; `-half` otherwise. Corner 0 is `(-,-,-)` and
    /// corner 7 is `(+,+,+)`.
    pub fn world_corners(&self) -> [Vec3; 8] {
        let r = self.rotation();
        let h = self.half_extents.hadamard(self.scale.as_vec3());
        let mut out = [Vec3::ZERO; 8];
        for (i, c) in out.iter_mut().enumerate() {
            let sx = if i & 1 != 0 { h.x } else { -h.x };
            let sy = if i & 2 != 0 { h.y } else { -h.y };
            let sz = if i & 4 != 0 { h.z } else { -h.z };
            *c = self.position + r.apply(Vec3::new(sx, sy, sz));
        }
        out
    }

    pub fn world_aabb(&self) -> Aabb {
        let c = self.world_corners();
        let mut min = c[0];
        let mut max = c[0];
        for p in &c[1..] {
            min = Vec3::new(min.x.min(p.x), min.y.min(p.y), min.z.min(p.z));
            max = Vec3::new(max.x.max(p.x), max.y.max(p.y), max.z.max(p.z));
        }
        Aabb { min, max }
    }

    /// World-space front direction (unit, 3D).
    pub fn world_front(&self) -> Vec3 {
        self.rotation().apply(self.front_axis)
    }

    /// Ground-plane unit front direction. Falls back to `+z` when the front
    /// axis points straight up or down.
    pub fn front_ground(&self) -> Point2 {
        let f = self.world_front().ground();
        let n = f.norm();
        if n < 1e-12 {
            Point2::new(0.0, 1.0)
        } else {
            f * (1.0 / n)
        }
    }

    /// Bearing of the ground-plane front direction, degrees in `[0, 360)`.
    pub fn front_yaw(&self) -> f64 {
        bearing_deg(self.front_ground())
    }

    pub fn anchor_world(&self, name: &str) -> Option<Vec3> {
        self.anchors.get(name).map(|a| self.local_to_world(*a))
    }

    /// Copy of this object with a new position and yaw; pitch and roll kept.
    pub fn with_pose(&self, position: Vec3, yaw: f64) -> ObjectInstance {
        let mut o = self.clone();
        o.position = position;
        o.orientation = Orientation::new(yaw, self.orientation.pitch, self.orientation.roll);
        o
    }
}

/// Ordered objects plus the catalog they were instantiated from.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scene {
    pub objects: Vec<ObjectInstance>,
    pub catalog: Vec<AssetRecord>,
}

impl Scene {
    pub fn new(catalog: Vec<AssetRecord>) -> Self {
        Scene {
            objects: Vec::new(),
            catalog,
        }
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        for (i, a) in self.catalog.iter().enumerate() {
            if self.catalog[..i].iter().any(|b| b.asset_id == a.asset_id) {
                return Err(SceneError::DuplicateAsset(a.asset_id.clone()));
            }
        }
        for (i, o) in self.objects.iter().enumerate() {
            o.validate()?;
            if self.objects[..i].iter().any(|p| p.id == o.id) {
                return Err(SceneError::DuplicateId(o.id.clone()));
            }
            if self.asset(&o.asset_id).is_none() {
                return Err(SceneError::UnknownAsset(o.asset_id.clone()));
            }
        }
        Ok(())
    }

    pub fn asset(&self, asset_id: &str) -> Option<&AssetRecord> {
        self.catalog.iter().find(|a| a.asset_id == asset_id)
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.objects.iter().position(|o| o.id == id)
    }

    pub fn get(&self, id: &str) -> Option<&ObjectInstance> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn object(&self, id: &str) -> Result<&ObjectInstance, SceneError> {
        self.get(id).ok_or_else(|| SceneError::UnknownObject(id.into()))
    }

    pub(crate) fn object_mut(&mut self, id: &str) -> Result<&mut ObjectInstance, SceneError> {
        self.objects
            .iter_mut()
            .find(|o| o.id == id)
            .ok_or_else(|| SceneError::UnknownObject(id.into()))
    }

    /// New scene with `obj` appended. Fails on a duplicate id or unknown asset.
    pub fn with_object(&self, obj: ObjectInstance) -> Result<Scene, SceneError> {
        if self.get(&obj.id).is_some() {
            return Err(SceneError::DuplicateId(obj.id));
        }
        if self.asset(&obj.asset_id).is_none() {
            return Err(SceneError::UnknownAsset(obj.asset_id));
        }
        obj.validate()?;
        let mut s = self.clone();
        s.objects.push(obj);
        Ok(s)
    }

    /// New scene where object `id` has the given position and yaw.
    pub fn with_pose(&self, id: &str, position: Vec3, yaw: f64) -> Result<Scene, SceneError> {
        let mut s = self.clone();
        let o = s.object_mut(id)?;
        *o = o.with_pose(position, yaw);
        Ok(s)
    }

    /// Deterministic line-oriented listing of every object, in insertion
    /// order. Used as the textual scene state handed to judges.
    pub fn snapshot_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# scene snapshot: {} objects, {} assets",
            self.objects.len(),
            self.catalog.len()
        );
        out.push_str("# object <id> asset=<asset> pos=(x,y,z) yaw=<deg> min=(x,y,z) max=(x,y,z)\n");
        for o in &self.objects {
            let b = o.world_aabb();
            let _ = writeln!(
                out,
                "object {} asset={} pos={} yaw={} min={} max={}",
                o.id,
                o.asset_id,
                fmt_vec(o.position),
                fmt9(o.orientation.yaw),
                fmt_vec(b.min),
                fmt_vec(b.max)
            );
        }
        out
    }
}

/// Fixed nine-decimal rendering; negative zero prints as zero.
pub fn fmt9(v: f64) -> String {
    let s = format!("{:.9}", v);
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        String::from(&s[1..])
    } else {
        s
    }
}

pub fn fmt_vec(v: Vec3) -> String {
    format!("({},{},{})", fmt9(v.x), fmt9(v.y), fmt9(v.z))
}
