use ctxplace::format::{emit_scene, parse_scene, read_scene, write_scene};
use ctxplace::suite;
use ctxplace_core::scene::{Orientation, ScaleVec};
use ctxplace_core::{AssetRecord, ObjectInstance, Scene, Vec3};
use proptest::prelude::*;

fn vec3(lo: f64, hi: f64) -> impl Strategy<Value = Vec3> {
    (lo..hi, lo..hi, lo..hi).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn front() -> impl Strategy<Value = Vec3> {
    prop_oneof![
        Just(Vec3::UNIT_Z),
        Just(Vec3::new(1.0, 0.0, 0.0)),
        Just(Vec3::new(-1.0, 0.0, 0.0)),
        Just(Vec3::new(0.0, 0.0, -1.0)),
    ]
}

fn scene() -> impl Strategy<Value = Scene> {
    let asset = (vec3(0.01, 3.0), front(), prop::option::of(vec3(-1.0, 1.0)), any::<bool>());
    let object = (0..3usize, vec3(-10.0, 10.0), -720.0..720.0f64, -5.0..5.0f64, vec3(0.1, 4.0));
    (prop::collection::vec(asset, 1..4), prop::collection::vec(object, 0..6)).prop_map(|(assets, objects)| {
        let catalog = assets
            .into_iter()
            .enumerate()
            .map(|(i, (he, f, anchor, ground))| {
                let mut a = AssetRecord::new(&format!("asset_{i}"), he);
                a.front_axis = f;
                if let Some(p) = anchor {
                    a.anchors.insert("top_surface".into(), p);
                }
                if ground {
                    a.tags.push("ground".into());
                }
                a
            })
            .collect::<Vec<_>>();
        let mut s = Scene::new(catalog);
        for (k, (i, pos, yaw, pitch, scale)) in objects.into_iter().enumerate() {
            let a = s.catalog[i % s.catalog.len()].clone();
            let mut o = ObjectInstance::from_asset(&format!("obj_{k}"), &a, pos, yaw);
            o.orientation = Orientation::new(yaw, pitch, 0.0);
            o.scale = ScaleVec {
                sx: scale.x,
                sy: scale.y,
                sz: scale.z,
            };
            s = s.with_object(o).unwrap();
        }
        s
    })
}

proptest! {
    #[test]
    fn emitted_scenes_parse_back_exactly(s in scene()) {
        let text = emit_scene(&s);
        let back = parse_scene(&text, "roundtrip").unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(emit_scene(&back), text);
    }
}

#[test]
fn task_scenes_survive_a_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for t in suite::builtin().unwrap() {
        let s = t.spawned_scene().unwrap();
        let p = dir.path().join(format!("{}.scene", t.id));
        write_scene(&p, &s).unwrap();
        assert_eq!(read_scene(&p).unwrap(), s);
    }
}

#[test]
fn malformed_scenes_are_rejected() {
    for bad in [
        "[[objects]]\nid = \"a\"\nasset_id = \"missing\"\nposition = [0.0, 0.0, 0.0]\n",
        "[[catalog]]\nasset_id = \"x\"\nhalf_extents = [1.0, 1.0]\n",
        "[[catalog]]\nasset_id = \"x\"\nhalf_extents = [1.0, 1.0, 1.0]\ncolour = 3\n",
        "not toml at all [",
    ] {
        assert!(parse_scene(bad, "bad").is_err(), "{bad}");
    }
}
