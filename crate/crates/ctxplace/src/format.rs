//! Scene and task files.
//!
//! Both are TOML. Vectors are arrays (`[x, y, z]`, ground points `[x, z]`),
//! angles are degrees. Scene files are written by a small hand emitter so
//! every real carries at least nine significant digits and field order is
//! fixed; reading goes through `toml` + `serde`.
//!
//! Scene file:
//!
//! ```toml
//! [[catalog]]
//! asset_id = "table"
//! half_extents = [0.6, 0.375, 0.4]
//! front_axis = [0.0, 0.0, 1.0]      # optional, default +z
//! tags = []                         # optional
//! anchors = { top_surface = [0.0, 0.375, 0.0] }   # optional
//!
//! [[objects]]
//! id = "table"
//! asset_id = "table"
//! position = [0.0, 0.375, 0.0]
//! orientation = [0.0, 0.0, 0.0]     # yaw, pitch, roll; optional
//! scale = [1.0, 1.0, 1.0]           # optional
//! # half_extents, front_axis, anchors: optional, copied from the asset
//! ```
//!
//! A task file holds `id`, `level`, `title`, optional `epsilon`,
//! `lambda_dist`, `clearance` and `[solve]` overrides, a `[scene]` table in
//! the scene layout above, an `[instruction]` table, `[[constraints]]`
//! (tagged by `kind`) and `[[fixtures]]`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use ctxplace_core::constraint::WeightedConstraint;
use ctxplace_core::optimizer::SolveConfig;
use ctxplace_core::scene::{Orientation, ScaleVec};
use ctxplace_core::task::{Fixture, Instruction, TaskDef, EPS_TASK};
use ctxplace_core::{AssetRecord, ObjectInstance, Scene, Vec3};
use serde::Deserialize;

use crate::Error;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AssetDoc {
    asset_id: String,
    half_extents: Vec3,
    #[serde(default = "unit_z")]
    front_axis: Vec3,
    #[serde(default)]
    anchors: BTreeMap<String, Vec3>,
    #[serde(default)]
    tags: Vec<String>,
}

fn unit_z() -> Vec3 {
    Vec3::UNIT_Z
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectDoc {
    id: String,
    asset_id: String,
    position: Vec3,
    #[serde(default)]
    orientation: [f64; 3],
    #[serde(default)]
    scale: Option<Vec3>,
    #[serde(default)]
    half_extents: Option<Vec3>,
    #[serde(default)]
    front_axis: Option<Vec3>,
    #[serde(default)]
    anchors: Option<BTreeMap<String, Vec3>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneDoc {
    #[serde(default)]
    catalog: Vec<AssetDoc>,
    #[serde(default)]
    objects: Vec<ObjectDoc>,
}

impl SceneDoc {
    fn into_scene(self, origin: &str) -> Result<Scene, Error> {
        let catalog = self
            .catalog
            .into_iter()
            .map(|a| AssetRecord {
                asset_id: a.asset_id,
                half_extents: a.half_extents,
                front_axis: a.front_axis,
                anchors: a.anchors,
                tags: a.tags,
            })
            .collect::<Vec<_>>();
        let mut scene = Scene::new(catalog);
        for o in self.objects {
            let asset = scene.asset(&o.asset_id).ok_or_else(|| Error::Format {
                origin: origin.into(),
                message: format!("object {} uses unknown asset {}", o.id, o.asset_id),
            })?;
            let [yaw, pitch, roll] = o.orientation;
            let scale = o.scale.unwrap_or(Vec3::new(1.0, 1.0, 1.0));
            let obj = ObjectInstance {
                half_extents: o.half_extents.unwrap_or(asset.half_extents),
                front_axis: o.front_axis.unwrap_or(asset.front_axis),
                anchors: o.anchors.unwrap_or_else(|| asset.anchors.clone()),
                id: o.id,
                asset_id: o.asset_id,
                position: o.position,
                orientation: Orientation::new(yaw, pitch, roll),
                scale: ScaleVec {
                    sx: scale.x,
                    sy: scale.y,
                    sz: scale.z,
                },
            };
            scene = scene.with_object(obj)?;
        }
        scene.validate()?;
        Ok(scene)
    }
}

pub fn parse_scene(text: &str, origin: &str) -> Result<Scene, Error> {
    let doc: SceneDoc = toml::from_str(text).map_err(|e| Error::Format {
        origin: origin.into(),
        message: e.to_string(),
    })?;
    doc.into_scene(origin)
}

pub fn read_scene(path: &Path) -> Result<Scene, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scene(&text, &path.display().to_string())
}

/// TOML float with at least nine significant digits that parses back to
/// the same `f64`.
pub fn real(v: f64) -> String {
    if v == 0.0 {
        return "0.00000000".into();
    }
    if !v.is_finite() {
        // validated scenes never hold these
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    // Display is the shortest round-trip form and never uses an exponent
    let mut s = format!("{v}");
    if !s.contains('.') {
        s.push('.');
    }
    let digits = s.trim_start_matches('-').bytes().filter(u8::is_ascii_digit).collect::<Vec<_>>();
    let lead = digits.iter().take_while(|&&d| d == b'0').count();
    let sig = digits.len() - lead;
    for _ in sig..9 {
        s.push('0');
    }
    if s.ends_with('.') {
        s.push('0');
    }
    s
}

fn vec3(v: Vec3) -> String {
    format!("[{}, {}, {}]", real(v.x), real(v.y), real(v.z))
}

fn string(s: &str) -> String {
    // TOML basic strings accept JSON escapes
    serde_json::to_string(s).expect("string serializes")
}

fn key(s: &str) -> String {
    if !s.is_empty() && s.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-') {
        s.into()
    } else {
        string(s)
    }
}

fn anchors(m: &BTreeMap<String, Vec3>) -> String {
    let body = m
        .iter()
        .map(|(k, v)| format!("{} = {}", key(k), vec3(*v)))
        .collect::<Vec<_>>()
        .join(", ");
    if body.is_empty() {
        "{}".into()
    } else {
        format!("{{ {body} }}")
    }
}

/// Scene as a TOML document. Every field of every object and asset is
/// written, so reading it back gives an equal scene.
pub fn emit_scene(scene: &Scene) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# ctxplace scene: {} assets, {} objects", scene.catalog.len(), scene.objects.len());
    for a in &scene.catalog {
        out.push_str("\n[[catalog]]\n");
        let _ = writeln!(out, "asset_id = {}", string(&a.asset_id));
        let _ = writeln!(out, "half_extents = {}", vec3(a.half_extents));
        let _ = writeln!(out, "front_axis = {}", vec3(a.front_axis));
        let tags = a.tags.iter().map(|t| string(t)).collect::<Vec<_>>().join(", ");
        let _ = writeln!(out, "tags = [{tags}]");
        let _ = writeln!(out, "anchors = {}", anchors(&a.anchors));
    }
    for o in &scene.objects {
        out.push_str("\n[[objects]]\n");
        let _ = writeln!(out, "id = {}", string(&o.id));
        let _ = writeln!(out, "asset_id = {}", string(&o.asset_id));
        let _ = writeln!(out, "position = {}", vec3(o.position));
        let r = o.orientation;
        let _ = writeln!(out, "orientation = [{}, {}, {}]", real(r.yaw), real(r.pitch), real(r.roll));
        let _ = writeln!(out, "scale = {}", vec3(o.scale.as_vec3()));
        let _ = writeln!(out, "half_extents = {}", vec3(o.half_extents));
        let _ = writeln!(out, "front_axis = {}", vec3(o.front_axis));
        let _ = writeln!(out, "anchors = {}", anchors(&o.anchors));
    }
    out
}

pub fn write_scene(path: &Path, scene: &Scene) -> Result<(), Error> {
    std::fs::write(path, emit_scene(scene)).map_err(|e| Error::io(path, e))
}

fn default_eps() -> f64 {
    EPS_TASK
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskDoc {
    id: String,
    level: u8,
    title: String,
    #[serde(default = "default_eps")]
    epsilon: f64,
    #[serde(default = "one")]
    lambda_dist: f64,
    #[serde(default)]
    clearance: f64,
    #[serde(default)]
    solve: SolveConfig,
    scene: SceneDoc,
    instruction: Instruction,
    constraints: Vec<WeightedConstraint>,
    #[serde(default)]
    fixtures: Vec<Fixture>,
}

pub fn parse_task(text: &str, origin: &str) -> Result<TaskDef, Error> {
    let doc: TaskDoc = toml::from_str(text).map_err(|e| Error::Format {
        origin: origin.into(),
        message: e.to_string(),
    })?;
    let task = TaskDef {
        scene: doc.scene.into_scene(origin)?,
        id: doc.id,
        level: doc.level,
        title: doc.title,
        instruction: doc.instruction,
        constraints: doc.constraints,
        lambda_dist: doc.lambda_dist,
        clearance: doc.clearance,
        epsilon: doc.epsilon,
        solve: doc.solve,
        fixtures: doc.fixtures,
    };
    task.validate()?;
    for f in &task.fixtures {
        task.fixture_scene(f)?;
    }
    Ok(task)
}

pub fn read_task(path: &Path) -> Result<TaskDef, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_task(&text, &path.display().to_string())
}
