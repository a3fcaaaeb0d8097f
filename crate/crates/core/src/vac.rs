//! Visual assistive cues: orthographic top and side renders with markers,
//! shading, wireframes, clearance circles and index labels, plus the
//! bounding-box and relation-angle text cues.
//!
//! Renders are built as a small list of drawing primitives and serialized to
//! SVG with fixed precision, so equal inputs give equal bytes.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::error::SceneError;
use crate::geometry::{convex_hull, footprint, ConvexPolygon};
use crate::math::{bearing_deg, wrap_180, Point2, Vec3};
use crate::scene::{fmt9, fmt_vec, ObjectInstance, Scene};

pub const FRONT_COLOR: &str = "#1f5fff";
pub const TOP_COLOR: &str = "#1a9e2a";
pub const RIGHT_COLOR: &str = "#e02020";
pub const CLEAR_COLOR: &str = "#1a9e2a";
pub const HIT_COLOR: &str = "#e02020";
pub const SHADE_FRONT: &str = "#f4a0a0";
pub const SHADE_BACK: &str = "#a0b8f4";
/// Circle radius relative to the footprint's bounding-circle radius.
pub const CIRCLE_SCALE: f64 = 4.0 / 3.0;
/// Objects carrying this asset tag (floors, fields) get no clearance circle.
pub const GROUND_TAG: &str = "ground";

const CANVAS: f64 = 800.0;
const MARGIN: f64 = 0.08;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Preset {
    None,
    Bb,
    TripleRaBb,
    SingleRaBb,
    WfRaBb,
    SdRaBb,
    #[default]
    TripleRaBbTop,
}

impl Preset {
    pub const ALL: [Preset; 7] = [
        Preset::None,
        Preset::Bb,
        Preset::TripleRaBb,
        Preset::SingleRaBb,
        Preset::WfRaBb,
        Preset::SdRaBb,
        Preset::TripleRaBbTop,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::None => "none",
            Preset::Bb => "bb",
            Preset::TripleRaBb => "triple+ra+bb",
            Preset::SingleRaBb => "single+ra+bb",
            Preset::WfRaBb => "wf+ra+bb",
            Preset::SdRaBb => "sd+ra+bb",
            Preset::TripleRaBbTop => "triple+ra+bb+top",
        }
    }

    /// Case-insensitive; also accepts the 1-based row number.
    pub fn parse(s: &str) -> Option<Preset> {
        let lower = s.trim().to_ascii_lowercase();
        if let Ok(n) = lower.parse::<usize>() {
            return n.checked_sub(1).and_then(|i| Preset::ALL.get(i).copied());
        }
        Preset::ALL.into_iter().find(|p| p.name() == lower)
    }

    pub fn options(self) -> VacOptions {
        let ra_bb = VacOptions {
            bounding_box_text: true,
            relation_angle_text: true,
            ..VacOptions::plain(self)
        };
        match self {
            Preset::None => VacOptions::plain(self),
            Preset::Bb => VacOptions {
                bounding_box_text: true,
                ..VacOptions::plain(self)
            },
            Preset::TripleRaBb => VacOptions {
                front_marker_triple: true,
                ..ra_bb
            },
            Preset::SingleRaBb => VacOptions {
                front_marker_single: true,
                ..ra_bb
            },
            Preset::WfRaBb => VacOptions { wireframe: true, ..ra_bb },
            Preset::SdRaBb => VacOptions {
                front_shader: true,
                ..ra_bb
            },
            Preset::TripleRaBbTop => VacOptions {
                front_marker_triple: true,
                top_view: true,
                clearance_circles: true,
                indices: true,
                ..ra_bb
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VacOptions {
    pub front_marker_single: bool,
    pub front_marker_triple: bool,
    pub front_shader: bool,
    pub wireframe: bool,
    pub clearance_circles: bool,
    pub indices: bool,
    pub top_view: bool,
    pub four_views: bool,
    pub bounding_box_text: bool,
    pub relation_angle_text: bool,
    pub preset: Preset,
}

impl VacOptions {
    /// Four plain side views and nothing else.
    fn plain(preset: Preset) -> Self {
        VacOptions {
            front_marker_single: false,
            front_marker_triple: false,
            front_shader: false,
            wireframe: false,
            clearance_circles: false,
            indices: false,
            top_view: false,
            four_views: true,
            bounding_box_text: false,
            relation_angle_text: false,
            preset,
        }
    }

    pub fn validate(&self) -> Result<(), &'static str> {
        if self.front_marker_single && self.front_marker_triple {
            Err("single and triple front markers are mutually exclusive")
        } else {
            Ok(())
        }
    }
}

impl Default for VacOptions {
    fn default() -> Self {
        Preset::default().options()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    Polygon {
        points: Vec<Point2>,
        fill: &'static str,
        stroke: &'static str,
        width: f64,
    },
    Line {
        a: Point2,
        b: Point2,
        stroke: &'static str,
        width: f64,
    },
    Circle {
        center: Point2,
        radius: f64,
        fill: &'static str,
        stroke: &'static str,
        width: f64,
    },
    Text {
        at: Point2,
        size: f64,
        fill: &'static str,
        text: String,
    },
}

/// A vector image in pixel coordinates (origin top-left, y down).
#[derive(Debug, Clone, PartialEq)]
pub struct Drawing {
    pub width: f64,
    pub height: f64,
    pub title: String,
    pub items: Vec<Item>,
}

fn px(v: f64) -> String {
    let s = format!("{:.3}", v);
    if s == "-0.000" {
        String::from("0.000")
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    let mut out = String::new();
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

impl Drawing {
    pub fn to_svg(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">",
            w = px(self.width),
            h = px(self.height)
        );
        let _ = writeln!(s, "<title>{}</title>", escape(&self.title));
        let _ = writeln!(
            s,
            "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>",
            px(self.width),
            px(self.height)
        );
        for item in &self.items {
            match item {
                Item::Polygon {
                    points,
                    fill,
                    stroke,
                    width,
                } => {
                    let pts: Vec<String> = points.iter().map(|p| format!("{},{}", px(p.x), px(p.z))).collect();
                    let _ = writeln!(
                        s,
                        "<polygon points=\"{}\" fill=\"{}\" stroke=\"{}\" stroke-width=\"{}\"/>",
                        pts.join(" "),
                        fill,
                        stroke,
                        px(*width)
                    );
                }
                Item::Line { a, b, stroke, width } => {
                    let _ = writeln!(
                        s,
                        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"{}\"/>",
                        px(a.x),
                        px(a.z),
                        px(b.x),
                        px(b.z),
                        stroke,
                        px(*width)
                    );
                }
                Item::Circle {
                    center,
                    radius,
                    fill,
                    stroke,
                    width,
                } => {
                    let _ = writeln!(
                        s,
                        "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{}\" stroke=\"{}\" stroke-width=\"{}\"/>",
                        px(center.x),
                        px(center.z),
                        px(*radius),
                        fill,
                        stroke,
                        px(*width)
                    );
                }
                Item::Text { at, size, fill, text } => {
                    let _ = writeln!(
                        s,
                        "<text x=\"{}\" y=\"{}\" font-family=\"DejaVu Sans\" font-size=\"{}\" fill=\"{}\" text-anchor=\"middle\" dominant-baseline=\"central\">{}</text>",
                        px(at.x),
                        px(at.z),
                        px(*size),
                        fill,
                        escape(text)
                    );
                }
            }
        }
        s.push_str("</svg>\n");
        s
    }

    /// Smallest pixel box covering every primitive.
    pub fn extent(&self) -> (Point2, Point2) {
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        let mut add = |p: Point2, r: f64| {
            lo = Point2::new(lo.x.min(p.x - r), lo.z.min(p.z - r));
            hi = Point2::new(hi.x.max(p.x + r), hi.z.max(p.z + r));
        };
        for item in &self.items {
            match item {
                Item::Polygon { points, .. } => points.iter().for_each(|p| add(*p, 0.0)),
                Item::Line { a, b, .. } => {
                    add(*a, 0.0);
                    add(*b, 0.0);
                }
                Item::Circle { center, radius, .. } => add(*center, *radius),
                Item::Text { at, .. } => add(*at, 0.0),
            }
        }
        (lo, hi)
    }
}

/// Maps a world-space 2D window onto the canvas, keeping aspect ratio.
#[derive(Debug, Clone, Copy)]
struct Frame {
    lo: Point2,
    hi: Point2,
    scale: f64,
    width: f64,
    height: f64,
}

impl Frame {
    fn fit(lo: Point2, hi: Point2) -> Frame {
        let span = Point2::new((hi.x - lo.x).max(1e-3), (hi.z - lo.z).max(1e-3));
        let pad = span.x.max(span.z) * MARGIN;
        let lo = Point2::new(lo.x - pad, lo.z - pad);
        let hi = Point2::new(lo.x + span.x + 2.0 * pad, lo.z + span.z + 2.0 * pad);
        let scale = CANVAS / (hi.x - lo.x).max(hi.z - lo.z);
        Frame {
            lo,
            hi,
            scale,
            width: (hi.x - lo.x) * scale,
            height: (hi.z - lo.z) * scale,
        }
    }

    /// World `(h, v)` with `v` pointing up on screen.
    fn map(&self, p: Point2) -> Point2 {
        Point2::new((p.x - self.lo.x) * self.scale, (self.hi.z - p.z) * self.scale)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClearanceCircle {
    pub id: String,
    /// Position in the scene's object list.
    pub index: usize,
    pub center: Point2,
    pub radius: f64,
    pub colliding: bool,
}

/// Circles for every non-ground object. A circle is colliding when its
/// center lies strictly closer than the sum of radii to another circle's.
pub fn clearance_circles(scene: &Scene) -> Vec<ClearanceCircle> {
    let mut out: Vec<ClearanceCircle> = scene
        .objects
        .iter()
        .enumerate()
        .filter(|(_, o)| !scene.asset(&o.asset_id).is_some_and(|a| a.has_tag(GROUND_TAG)))
        .map(|(i, o)| {
            let (c, r) = footprint(o).bounding_circle();
            ClearanceCircle {
                id: o.id.clone(),
                index: i,
                center: c,
                radius: r * CIRCLE_SCALE,
                colliding: false,
            }
        })
        .collect();
    for i in 0..out.len() {
        let hit = (0..out.len())
            .any(|j| j != i && out[i].center.dist(out[j].center) < out[i].radius + out[j].radius);
        out[i].colliding = hit;
    }
    out
}

/// World corners with the part behind the front plane folded onto it.
fn front_half_corners(obj: &ObjectInstance, front: bool) -> [Vec3; 8] {
    let f = obj.front_axis;
    let h = obj.half_extents.hadamard(obj.scale.as_vec3());
    let mut out = [Vec3::ZERO; 8];
    for (i, slot) in out.iter_mut().enumerate() {
        let l = Vec3::new(
            if i & 1 != 0 { h.x } else { -h.x },
            if i & 2 != 0 { h.y } else { -h.y },
            if i & 4 != 0 { h.z } else { -h.z },
        );
        let d = l.dot(f);
        let keep = if front { d.max(0.0) } else { d.min(0.0) };
        let l = l + f * (keep - d);
        *slot = obj.position + obj.rotation().apply(l);
    }
    out
}

const BOX_EDGES: [(usize, usize); 12] = [
    (0, 1),
    (2, 3),
    (4, 5),
    (6, 7),
    (0, 2),
    (1, 3),
    (4, 6),
    (5, 7),
    (0, 4),
    (1, 5),
    (2, 6),
    (3, 7),
];

/// A view direction: projects world points to `(horizontal, vertical)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum View {
    Top,
    PlusX,
    MinusX,
    PlusZ,
    MinusZ,
}

impl View {
    pub const SIDES: [View; 4] = [View::PlusX, View::MinusX, View::PlusZ, View::MinusZ];

    pub fn name(self) -> &'static str {
        match self {
            View::Top => "top",
            View::PlusX => "px",
            View::MinusX => "nx",
            View::PlusZ => "pz",
            View::MinusZ => "nz",
        }
    }

    /// Screen coordinates: camera on the named side looking back at the
    /// scene with `y` up.
    pub fn project(self, p: Vec3) -> Point2 {
        match self {
            View::Top => Point2::new(p.x, p.z),
            View::PlusX => Point2::new(-p.z, p.y),
            View::MinusX => Point2::new(p.z, p.y),
            View::PlusZ => Point2::new(p.x, p.y),
            View::MinusZ => Point2::new(-p.x, p.y),
        }
    }

    /// Larger means closer to the camera.
    fn depth(self, p: Vec3) -> f64 {
        match self {
            View::Top => p.y,
            View::PlusX => p.x,
            View::MinusX => -p.x,
            View::PlusZ => p.z,
            View::MinusZ => -p.z,
        }
    }
}

fn project_hull(view: View, pts: &[Vec3]) -> ConvexPolygon {
    let p: Vec<Point2> = pts.iter().map(|c| view.project(*c)).collect();
    convex_hull(&p)
}

fn marker_len(obj: &ObjectInstance) -> f64 {
    let h = obj.half_extents.hadamard(obj.scale.as_vec3());
    h.x.max(h.z).max(h.y) * 1.6
}

/// One marker glyph in world space.
#[derive(Debug, Clone, PartialEq)]
pub enum Glyph {
    Arrow { from: Vec3, to: Vec3, color: &'static str },
    Dot { at: Vec3, color: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarkerKind {
    Single,
    Triple,
}

/// Front-marker glyphs for an object. `Single` is one arrow along the world
/// front from the footprint edge outward; `Triple` is a front arrow (blue),
/// a top dot (green) and a right arrow (red), all from the object's center.
pub fn marker_overlay(obj: &ObjectInstance, kind: MarkerKind) -> Vec<Glyph> {
    let f = obj.world_front();
    let len = marker_len(obj);
    let c = obj.position;
    match kind {
        MarkerKind::Single => {
            let h = obj.half_extents.hadamard(obj.scale.as_vec3());
            let reach = (obj.front_axis.x.abs() * h.x + obj.front_axis.y.abs() * h.y + obj.front_axis.z.abs() * h.z).max(1e-6);
            let from = c + f * reach;
            vec![Glyph::Arrow {
                from,
                to: from + f * (len * 0.6),
                color: FRONT_COLOR,
            }]
        }
        MarkerKind::Triple => {
            let up = obj.rotation().apply(Vec3::new(0.0, 1.0, 0.0));
            // right = up × front
            let right = Vec3::new(up.y * f.z - up.z * f.y, up.z * f.x - up.x * f.z, up.x * f.y - up.y * f.x);
            let top = c + up * obj.half_extents.hadamard(obj.scale.as_vec3()).y;
            vec![
                Glyph::Arrow {
                    from: c,
                    to: c + f * len,
                    color: FRONT_COLOR,
                },
                Glyph::Dot { at: top, color: TOP_COLOR },
                Glyph::Arrow {
                    from: c,
                    to: c + right * len,
                    color: RIGHT_COLOR,
                },
            ]
        }
    }
}

fn arrow_items(frame: &Frame, a: Point2, b: Point2, color: &'static str, out: &mut Vec<Item>) {
    let (pa, pb) = (frame.map(a), frame.map(b));
    let d = pb - pa;
    let n = d.norm();
    out.push(Item::Line {
        a: pa,
        b: pb,
        stroke: color,
        width: 3.0,
    });
    if n > 1e-9 {
        let u = d * (1.0 / n);
        let side = Point2::new(-u.z, u.x);
        let head = (n * 0.3).min(14.0);
        let base = pb - u * head;
        out.push(Item::Polygon {
            points: vec![pb, base + side * (head * 0.45), base - side * (head * 0.45)],
            fill: color,
            stroke: color,
            width: 1.0,
        });
    }
}

fn glyph_items(frame: &Frame, view: View, glyphs: &[Glyph], out: &mut Vec<Item>) {
    for g in glyphs {
        match g {
            Glyph::Arrow { from, to, color } => {
                let (a, b) = (view.project(*from), view.project(*to));
                if a.dist(b) > 1e-9 {
                    arrow_items(frame, a, b, color, out);
                }
            }
            Glyph::Dot { at, color } => out.push(Item::Circle {
                center: frame.map(view.project(*at)),
                radius: 5.0,
                fill: color,
                stroke: color,
                width: 1.0,
            }),
        }
    }
}

fn view_points(view: View, obj: &ObjectInstance, options: &VacOptions) -> Vec<Point2> {
    let mut pts: Vec<Point2> = obj.world_corners().iter().map(|c| view.project(*c)).collect();
    if options.front_marker_single || options.front_marker_triple {
        let kind = if options.front_marker_single {
            MarkerKind::Single
        } else {
            MarkerKind::Triple
        };
        for g in marker_overlay(obj, kind) {
            match g {
                Glyph::Arrow { from, to, .. } => {
                    pts.push(view.project(from));
                    pts.push(view.project(to));
                }
                Glyph::Dot { at, .. } => pts.push(view.project(at)),
            }
        }
    }
    pts
}

fn object_items(frame: &Frame, view: View, obj: &ObjectInstance, is_target: bool, options: &VacOptions, out: &mut Vec<Item>) {
    let fill = if is_target { "#fff3b0" } else { "#e4e4e4" };
    let corners = obj.world_corners();
    let outline = if view == View::Top {
        footprint(obj)
    } else {
        project_hull(view, &corners)
    };
    let mapped: Vec<Point2> = outline.vertices().iter().map(|p| frame.map(*p)).collect();
    if options.front_shader {
        out.push(Item::Polygon {
            points: mapped.clone(),
            fill,
            stroke: "none",
            width: 0.0,
        });
        for (front, color) in [(false, SHADE_BACK), (true, SHADE_FRONT)] {
            let half = project_hull(view, &front_half_corners(obj, front));
            out.push(Item::Polygon {
                points: half.vertices().iter().map(|p| frame.map(*p)).collect(),
                fill: color,
                stroke: "none",
                width: 0.0,
            });
        }
        out.push(Item::Polygon {
            points: mapped,
            fill: "none",
            stroke: "#202020",
            width: 1.5,
        });
    } else {
        out.push(Item::Polygon {
            points: mapped,
            fill,
            stroke: "#202020",
            width: 1.5,
        });
    }
    if options.wireframe {
        for (i, j) in BOX_EDGES {
            out.push(Item::Line {
                a: frame.map(view.project(corners[i])),
                b: frame.map(view.project(corners[j])),
                stroke: "#404040",
                width: 1.0,
            });
        }
    }
    if options.front_marker_single {
        glyph_items(frame, view, &marker_overlay(obj, MarkerKind::Single), out);
    } else if options.front_marker_triple {
        glyph_items(frame, view, &marker_overlay(obj, MarkerKind::Triple), out);
    }
}

/// Orthographic top view of the whole scene.
pub fn render_top_view(scene: &Scene, target_id: &str, options: &VacOptions) -> Drawing {
    let circles = if options.clearance_circles {
        clearance_circles(scene)
    } else {
        Vec::new()
    };
    let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut grow = |p: Point2, r: f64| {
        lo = Point2::new(lo.x.min(p.x - r), lo.z.min(p.z - r));
        hi = Point2::new(hi.x.max(p.x + r), hi.z.max(p.z + r));
    };
    for o in &scene.objects {
        for p in view_points(View::Top, o, options) {
            grow(p, 0.0);
        }
    }
    for c in &circles {
        grow(c.center, c.radius);
    }
    if scene.objects.is_empty() {
        grow(Point2::default(), 1.0);
    }
    let frame = Frame::fit(lo, hi);
    let mut items = Vec::new();
    // lower objects first so tabletop items stay visible
    let mut order: Vec<usize> = (0..scene.objects.len()).collect();
    order.sort_by(|&a, &b| {
        let (ya, yb) = (scene.objects[a].world_aabb().max.y, scene.objects[b].world_aabb().max.y);
        ya.total_cmp(&yb).then(a.cmp(&b))
    });
    for i in order {
        let o = &scene.objects[i];
        object_items(&frame, View::Top, o, o.id == target_id, options, &mut items);
    }
    for c in &circles {
        let color = if c.colliding { HIT_COLOR } else { CLEAR_COLOR };
        items.push(Item::Circle {
            center: frame.map(c.center),
            radius: c.radius * frame.scale,
            fill: "none",
            stroke: color,
            width: 2.0,
        });
    }
    if options.indices {
        for (i, o) in scene.objects.iter().enumerate() {
            let at = circles
                .iter()
                .find(|c| c.index == i)
                .map(|c| c.center)
                .unwrap_or_else(|| footprint(o).vertex_mean());
            items.push(Item::Text {
                at: frame.map(at),
                size: 18.0,
                fill: "#000000",
                text: format!("{i}"),
            });
        }
    }
    Drawing {
        width: frame.width,
        height: frame.height,
        title: format!("top view, target {target_id}"),
        items,
    }
}

/// One side view, framed on the target and `related`.
pub fn render_side_view(
    scene: &Scene,
    target_id: &str,
    related: &[&str],
    view: View,
    options: &VacOptions,
) -> Result<Drawing, SceneError> {
    let target = scene.object(target_id)?;
    let mut shown: Vec<&ObjectInstance> = vec![target];
    for r in related {
        let o = scene.object(r)?;
        if o.id != target.id && !shown.iter().any(|s| s.id == o.id) {
            shown.push(o);
        }
    }
    let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for o in &shown {
        for p in view_points(view, o, options) {
            lo = Point2::new(lo.x.min(p.x), lo.z.min(p.z));
            hi = Point2::new(hi.x.max(p.x), hi.z.max(p.z));
        }
    }
    // center on the target's box
    let ta = target.world_aabb();
    let tc = view.project(ta.center());
    let half = Point2::new((tc.x - lo.x).max(hi.x - tc.x), (tc.z - lo.z).max(hi.z - tc.z));
    let frame = Frame::fit(tc - half, tc + half);
    let mut order: Vec<usize> = (0..shown.len()).collect();
    order.sort_by(|&a, &b| {
        let (da, db) = (view.depth(shown[a].position), view.depth(shown[b].position));
        da.total_cmp(&db).then(a.cmp(&b))
    });
    let mut items = Vec::new();
    for i in order {
        object_items(&frame, view, shown[i], i == 0, options, &mut items);
    }
    Ok(Drawing {
        width: frame.width,
        height: frame.height,
        title: format!("{} view, target {target_id}", view.name()),
        items,
    })
}

/// Side views from `+x`, `-x`, `+z` and `-z`, in that order.
pub fn render_four_views(
    scene: &Scene,
    target_id: &str,
    related: &[&str],
    options: &VacOptions,
) -> Result<[Drawing; 4], SceneError> {
    let [a, b, c, d] = View::SIDES;
    Ok([
        render_side_view(scene, target_id, related, a, options)?,
        render_side_view(scene, target_id, related, b, options)?,
        render_side_view(scene, target_id, related, c, options)?,
        render_side_view(scene, target_id, related, d, options)?,
    ])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelationAngle {
    pub degrees: f64,
    /// Set when the two centers coincide on the ground plane; `degrees` is 0.
    pub degenerate: bool,
}

/// Signed angle from the target's front to the direction of `related`, in
/// `[-180, 180)`. Positive means the related object is clockwise (toward the
/// target's right) in the top view, so adding it to the target's yaw makes
/// the target face it.
pub fn relation_angle(scene: &Scene, target_id: &str, related_id: &str) -> Result<RelationAngle, SceneError> {
    let t = scene.object(target_id)?;
    let r = scene.object(related_id)?;
    let d = r.position.ground() - t.position.ground();
    if d.norm() < 1e-12 {
        return Ok(RelationAngle {
            degrees: 0.0,
            degenerate: true,
        });
    }
    Ok(RelationAngle {
        degrees: wrap_180(bearing_deg(d) - t.front_yaw()),
        degenerate: false,
    })
}

pub fn bounding_box_text(scene: &Scene, ids: &[&str]) -> Result<String, SceneError> {
    let mut out = String::from("# bounding boxes: id asset min=(x,y,z) max=(x,y,z) center=(x,y,z) yaw=deg\n");
    for id in ids {
        let o = scene.object(id)?;
        let b = o.world_aabb();
        let _ = writeln!(
            out,
            "bbox {} asset={} min={} max={} center={} yaw={}",
            o.id,
            o.asset_id,
            fmt_vec(b.min),
            fmt_vec(b.max),
            fmt_vec(b.center()),
            fmt9(o.orientation.yaw)
        );
    }
    Ok(out)
}

pub fn relation_angle_text(scene: &Scene, target_id: &str, related: &[&str]) -> Result<String, SceneError> {
    let mut out = String::from("# relation angles: bearing to related minus target front yaw, degrees in [-180,180)\n");
    for r in related {
        let a = relation_angle(scene, target_id, r)?;
        let _ = writeln!(
            out,
            "angle {} -> {} deg={}{}",
            target_id,
            r,
            fmt9(a.degrees),
            if a.degenerate { " degenerate" } else { "" }
        );
    }
    Ok(out)
}

/// Text cues enabled by `options`, concatenated.
pub fn cue_text(scene: &Scene, target_id: &str, related: &[&str], options: &VacOptions) -> Result<String, SceneError> {
    let mut out = String::new();
    if options.bounding_box_text {
        let mut ids = vec![target_id];
        ids.extend(related.iter().copied().filter(|r| *r != target_id));
        out.push_str(&bounding_box_text(scene, &ids)?);
    }
    if options.relation_angle_text {
        out.push_str(&relation_angle_text(scene, target_id, related)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::AssetRecord;

    fn scene_with(objs: &[(&str, Vec3, f64)], half: Vec3) -> Scene {
        let a = AssetRecord::new("box", half);
        let mut s = Scene::new(vec![a.clone()]);
        for (id, p, yaw) in objs {
            s.objects.push(ObjectInstance::from_asset(id, &a, *p, *yaw));
        }
        s
    }

    const CHAIR: Vec3 = Vec3::new(0.25, 0.45, 0.25);

    #[test]
    fn circles_green_when_apart_red_when_close() {
        let far = scene_with(&[("a", Vec3::ZERO, 0.0), ("b", Vec3::new(5.0, 0.0, 0.0), 0.0)], CHAIR);
        assert!(clearance_circles(&far).iter().all(|c| !c.colliding));
        let r = 0.25 * 2f64.sqrt() * CIRCLE_SCALE;
        let close = scene_with(&[("a", Vec3::ZERO, 0.0), ("b", Vec3::new(2.0 * r - 0.01, 0.0, 0.0), 0.0)], CHAIR);
        assert!(clearance_circles(&close).iter().all(|c| c.colliding));
        let svg = render_top_view(&close, "a", &Preset::TripleRaBbTop.options()).to_svg();
        assert!(svg.contains(HIT_COLOR));
    }

    #[test]
    fn ground_objects_have_no_circle() {
        let mut s = scene_with(&[("a", Vec3::ZERO, 0.0)], CHAIR);
        let mut floor = AssetRecord::new("floor", Vec3::new(5.0, 0.01, 5.0));
        floor.tags.push("ground".into());
        s.catalog.push(floor.clone());
        s.objects.push(ObjectInstance::from_asset("floor", &floor, Vec3::ZERO, 0.0));
        let c = clearance_circles(&s);
        assert_eq!(c.len(), 1);
        assert!(!c[0].colliding);
    }

    #[test]
    fn indices_follow_insertion_order() {
        let s = scene_with(
            &[
                ("c", Vec3::new(3.0, 0.0, 0.0), 0.0),
                ("a", Vec3::ZERO, 0.0),
                ("b", Vec3::new(-3.0, 0.0, 0.0), 0.0),
            ],
            CHAIR,
        );
        let d = render_top_view(&s, "a", &Preset::TripleRaBbTop.options());
        let labels: Vec<&str> = d
            .items
            .iter()
            .filter_map(|i| match i {
                Item::Text { text, .. } => Some(text.as_str()),
                _ => None,
            })
            .collect();
        assert_eq!(labels, ["0", "1", "2"]);
    }

    #[test]
    fn markers() {
        let a = AssetRecord::new("box", Vec3::new(0.5, 0.5, 0.5));
        let o = ObjectInstance::from_asset("o", &a, Vec3::ZERO, 0.0);
        let g = marker_overlay(&o, MarkerKind::Single);
        assert_eq!(g.len(), 1);
        let Glyph::Arrow { from, to, .. } = g[0] else { panic!() };
        assert_eq!(from, Vec3::new(0.0, 0.0, 0.5));
        assert!(to.z > from.z && to.x == 0.0);

        let turned = o.with_pose(Vec3::ZERO, 90.0);
        let Glyph::Arrow { from, to, .. } = marker_overlay(&turned, MarkerKind::Single)[0] else { panic!() };
        assert!(to.x > from.x && (to.z - from.z).abs() < 1e-12);

        let t = marker_overlay(&o, MarkerKind::Triple);
        assert_eq!(t.len(), 3);
        let colors: Vec<&str> = t
            .iter()
            .map(|g| match g {
                Glyph::Arrow { color, .. } | Glyph::Dot { color, .. } => *color,
            })
            .collect();
        assert_eq!(colors, [FRONT_COLOR, TOP_COLOR, RIGHT_COLOR]);
        let Glyph::Arrow { to, .. } = t[2] else { panic!() };
        assert!(to.x > 0.0, "right marker points +x for an unrotated object");
    }

    #[test]
    fn relation_angle_cases() {
        let s = scene_with(&[("t", Vec3::ZERO, 0.0), ("r", Vec3::new(0.0, 0.0, 1.0), 0.0)], CHAIR);
        assert_eq!(relation_angle(&s, "t", "r").unwrap().degrees, 0.0);
        let s = s.with_pose("r", Vec3::new(1.0, 0.0, 0.0), 0.0).unwrap();
        assert_eq!(relation_angle(&s, "t", "r").unwrap().degrees, 90.0);
        let turned = s.with_pose("t", Vec3::ZERO, 30.0).unwrap();
        assert!((relation_angle(&turned, "t", "r").unwrap().degrees - 60.0).abs() < 1e-12);
        let same = s.with_pose("r", Vec3::new(0.0, 2.0, 0.0), 0.0).unwrap();
        let a = relation_angle(&same, "t", "r").unwrap();
        assert!(a.degenerate && a.degrees == 0.0);
    }

    #[test]
    fn bbox_text() {
        let s = scene_with(&[("cube", Vec3::ZERO, 0.0)], Vec3::new(0.5, 0.5, 0.5));
        let t = bounding_box_text(&s, &["cube"]).unwrap();
        assert!(t.contains("min=(-0.500000000,-0.500000000,-0.500000000)"));
        assert_eq!(bounding_box_text(&s, &[]).unwrap().lines().count(), 1);
        assert!(bounding_box_text(&s, &["ghost"]).is_err());
    }

    #[test]
    fn four_views_of_a_cube_match() {
        let s = scene_with(&[("cube", Vec3::ZERO, 0.0)], Vec3::new(0.5, 0.5, 0.5));
        let views = render_four_views(&s, "cube", &[], &Preset::None.options()).unwrap();
        let outline = |d: &Drawing| match &d.items[0] {
            Item::Polygon { points, .. } => {
                let mut p: Vec<(i64, i64)> = points.iter().map(|q| ((q.x * 1e6) as i64, (q.z * 1e6) as i64)).collect();
                p.sort();
                p
            }
            _ => panic!(),
        };
        let first = outline(&views[0]);
        assert_eq!(first.len(), 4);
        for v in &views[1..] {
            assert_eq!(outline(v), first);
        }
    }

    #[test]
    fn presets_parse_and_validate() {
        for p in Preset::ALL {
            assert_eq!(Preset::parse(p.name()), Some(p));
            assert!(p.options().validate().is_ok());
        }
        assert_eq!(Preset::parse("TRIPLE+RA+BB+TOP"), Some(Preset::TripleRaBbTop));
        assert_eq!(Preset::parse("7"), Some(Preset::TripleRaBbTop));
        assert_eq!(Preset::parse("8"), None);
        assert_eq!(VacOptions::default().preset, Preset::TripleRaBbTop);
        let bad = VacOptions {
            front_marker_single: true,
            front_marker_triple: true,
            ..VacOptions::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn top_view_stays_in_viewport_and_is_deterministic() {
        let s = scene_with(
            &[("a", Vec3::new(-4.0, 0.0, 2.0), 33.0), ("b", Vec3::new(7.0, 0.0, -1.0), 200.0)],
            CHAIR,
        );
        for p in Preset::ALL {
            let d = render_top_view(&s, "a", &p.options());
            let (lo, hi) = d.extent();
            assert!(lo.x >= 0.0 && lo.z >= 0.0 && hi.x <= d.width && hi.z <= d.height);
            assert_eq!(d.to_svg(), render_top_view(&s, "a", &p.options()).to_svg());
        }
    }
}
