use ctxplace_core::energy::e_collision;
use ctxplace_core::geometry::{dilate, footprint, intersection_area, ConvexPolygon};
use ctxplace_core::math::{wrap_180, wrap_360};
use ctxplace_core::optimizer::apply_correction;
use ctxplace_core::vac::relation_angle;
use ctxplace_core::{AssetRecord, ObjectInstance, Point2, Scene, Vec3};
use proptest::prelude::*;

fn polygon() -> impl Strategy<Value = ConvexPolygon> {
    prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 3..12)
        .prop_map(|pts| ConvexPolygon::hull(&pts.into_iter().map(|(x, z)| Point2::new(x, z)).collect::<Vec<_>>()))
        .prop_filter("needs area", |p| p.area() > 1e-3)
}

#[derive(Debug, Clone, Copy)]
struct BoxPose {
    x: f64,
    z: f64,
    hx: f64,
    hz: f64,
    yaw: f64,
}

fn box_pose() -> impl Strategy<Value = BoxPose> {
    (-1.5..1.5f64, -1.5..1.5f64, 0.05..1.0f64, 0.05..1.0f64, 0.0..360.0f64).prop_map(|(x, z, hx, hz, yaw)| BoxPose {
        x,
        z,
        hx,
        hz,
        yaw,
    })
}

fn two_boxes(a: BoxPose, b: BoxPose) -> Scene {
    let asset = AssetRecord::new("box", Vec3::new(0.5, 0.5, 0.5));
    let mut s = Scene::new(vec![asset.clone()]);
    for (id, p) in [("a", a), ("b", b)] {
        let mut o = ObjectInstance::from_asset(id, &asset, Vec3::new(p.x, 0.5, p.z), p.yaw);
        o.half_extents = Vec3::new(p.hx, 0.5, p.hz);
        s = s.with_object(o).unwrap();
    }
    s
}

/// Ground-plane corners, written out from the yaw convention: local `+z`
/// maps to `(sin, cos)`, local `+x` to `(cos, -sin)`.
fn corners(p: BoxPose) -> [(f64, f64); 4] {
    let (s, c) = p.yaw.to_radians().sin_cos();
    let w = |lx: f64, lz: f64| (p.x + lx * c + lz * s, p.z - lx * s + lz * c);
    [w(p.hx, p.hz), w(-p.hx, p.hz), w(-p.hx, -p.hz), w(p.hx, -p.hz)]
}

/// Smallest projection overlap over the four box axes; positive means the
/// boxes overlap.
fn sat_margin(a: BoxPose, b: BoxPose) -> f64 {
    let (ca, cb) = (corners(a), corners(b));
    let mut axes = Vec::new();
    for c in [&ca, &cb] {
        for i in 0..2 {
            let (dx, dz) = (c[i + 1].0 - c[i].0, c[i + 1].1 - c[i].1);
            let n = dx.hypot(dz);
            axes.push((-dz / n, dx / n));
        }
    }
    axes.iter()
        .map(|&(ax, az)| {
            let proj = |c: &[(f64, f64); 4]| {
                let v = c.map(|(x, z)| x * ax + z * az);
                (v.iter().cloned().fold(f64::INFINITY, f64::min), v.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
            };
            let ((a0, a1), (b0, b1)) = (proj(&ca), proj(&cb));
            a1.min(b1) - a0.max(b0)
        })
        .fold(f64::INFINITY, f64::min)
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = wrap_360(a - b);
    d.min(360.0 - d)
}

proptest! {
    #[test]
    fn intersection_is_symmetric_and_bounded(p in polygon(), q in polygon()) {
        let a = intersection_area(&p, &q);
        let b = intersection_area(&q, &p);
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a));
        prop_assert!(a >= 0.0);
        prop_assert!(a <= p.area().min(q.area()) + 1e-9);
    }

    #[test]
    fn self_intersection_is_the_area(p in polygon()) {
        prop_assert!((intersection_area(&p, &p) - p.area()).abs() <= 1e-9);
    }

    #[test]
    fn far_apart_polygons_do_not_intersect(p in polygon(), q in polygon()) {
        prop_assert_eq!(intersection_area(&p, &q.translated(Point2::new(10.0, 0.0))), 0.0);
    }

    #[test]
    fn dilation_area_is_within_the_steiner_bounds(p in polygon(), r in 0.01..1.0f64) {
        let (a, per) = (p.area(), p.perimeter());
        let got = dilate(&p, r).area();
        let circle = core::f64::consts::PI * r * r;
        prop_assert!(got >= a + per * r + 0.99 * circle - 1e-9);
        prop_assert!(got <= a + per * r + circle + 1e-9);
    }

    #[test]
    fn collision_energy_agrees_with_separating_axes(a in box_pose(), b in box_pose()) {
        let margin = sat_margin(a, b);
        prop_assume!(margin.abs() > 1e-9);
        let e = e_collision(&two_boxes(a, b), &[("a".into(), "b".into())], 0.0).unwrap();
        prop_assert_eq!(e > 0.0, margin > 0.0, "margin {} energy {}", margin, e);
    }

    #[test]
    fn full_turns_leave_the_footprint_unchanged(a in box_pose(), k in -3i32..3) {
        let s = two_boxes(a, BoxPose { x: 5.0, ..a });
        let turned = apply_correction(&s, "a", Vec3::ZERO, 360.0 * f64::from(k)).unwrap();
        let (p, q) = (footprint(s.object("a").unwrap()), footprint(turned.object("a").unwrap()));
        prop_assert!((intersection_area(&p, &q) - p.area()).abs() < 1e-9);
    }

    #[test]
    fn relation_angle_turns_against_yaw(a in box_pose(), b in box_pose(), delta in -720.0..720.0f64) {
        let s = two_boxes(a, b);
        let before = relation_angle(&s, "a", "b").unwrap();
        prop_assume!(!before.degenerate);
        let turned = apply_correction(&s, "a", Vec3::ZERO, delta).unwrap();
        let after = relation_angle(&turned, "a", "b").unwrap();
        prop_assert!((-180.0..180.0).contains(&after.degrees));
        prop_assert!(angle_gap(after.degrees, wrap_180(before.degrees - delta)) < 1e-6);
    }

    #[test]
    fn facing_correction_by_relation_angle(a in box_pose(), b in box_pose()) {
        let s = two_boxes(a, b);
        let ra = relation_angle(&s, "a", "b").unwrap();
        prop_assume!(!ra.degenerate);
        let turned = apply_correction(&s, "a", Vec3::ZERO, ra.degrees).unwrap();
        prop_assert!(angle_gap(relation_angle(&turned, "a", "b").unwrap().degrees, 0.0) < 1e-6);
    }
}
