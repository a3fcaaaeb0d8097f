use std::path::PathBuf;
use std::process::Command;

use ctxplace::pipeline::{run_vlm, Limits, RunRecord};
use ctxplace::suite;
use ctxplace::vlm::transcript::read_entries;
use ctxplace::vlm::{Client, ReplayTransport, Transcript, VlmConfig};
use ctxplace_core::judge::ViolationCode;
use ctxplace_core::vac::Preset;
use ctxplace_core::Vec3;

fn transcript(task: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("transcripts").join(format!("{task}.jsonl"))
}

fn replay(task: &str) -> (RunRecord, Transcript, usize) {
    let t = suite::task(task).unwrap();
    let mut transport = ReplayTransport::from_path(&transcript(task)).unwrap();
    let mut client = Client::new(&mut transport, VlmConfig::default(), Transcript::in_memory());
    let (_, r) = run_vlm(&t, &mut client, Preset::TripleRaBbTop, &Limits::default()).unwrap();
    let log = client.into_transcript();
    (r, log, transport.remaining())
}

fn close(a: Vec3, b: Vec3) -> bool {
    (a - b).norm() < 1e-12
}

#[test]
fn cup_run_passes_first_time() {
    let (r, _, left) = replay("L1T1");
    assert_eq!(left, 0);
    assert!(r.success);
    assert_eq!(r.judge_loops, 1);
    assert_eq!(r.final_poses.len(), 1);
    assert!(close(r.final_poses[0].position, Vec3::new(0.0, 0.8, 0.0)));
    assert_eq!(r.final_poses[0].yaw, 0.0);
    assert_eq!(r.verdicts[0].energy.total, 0.0);
}

#[test]
fn chair_run_takes_two_corrections() {
    let (r, _, left) = replay("L2T2");
    assert_eq!(left, 0);
    assert!(r.success);
    assert_eq!(r.judge_loops, 3);
    let codes = r
        .verdicts
        .iter()
        .map(|v| v.violations.iter().map(|x| x.code).collect::<Vec<_>>())
        .collect::<Vec<_>>();
    assert_eq!(codes, vec![vec![ViolationCode::Orientation], vec![ViolationCode::Collision], vec![]]);
    // chair z in [0.2, 0.7] against desk z in [-0.35, 0.35], 0.5 wide
    let overlap = 0.15 * 0.5;
    assert!((r.verdicts[0].energy.e_collision - overlap).abs() < 1e-12);
    // facing away: 180 degrees off, 15 of them tolerated
    assert!((r.verdicts[0].energy.e_affordance - 165.0).abs() < 1e-9);
    assert_eq!(r.verdicts[1].energy.e_affordance, 0.0);
    assert!((r.verdicts[1].energy.e_collision - overlap).abs() < 1e-12);
    assert_eq!(r.verdicts[2].energy.total, 0.0);
    let p = &r.final_poses[0];
    assert!(close(p.position, Vec3::new(0.0, 0.45, 0.75)));
    assert!((p.yaw - 180.0).abs() < 1e-12);
}

#[test]
fn swapped_komainu_passed_by_the_judge_still_fails() {
    let (r, _, left) = replay("L4T1");
    assert_eq!(left, 0);
    assert!(r.verdicts[0].pass);
    assert!(!r.success);
    assert_eq!(r.judge_loops, 1);
    assert!(r.verdicts[0].energy.e_culture > 0.0);
    let ids = r.final_poses.iter().map(|p| p.id.as_str()).collect::<Vec<_>>();
    assert_eq!(ids, ["komainu_a", "komainu_un"]);
    assert!(close(r.final_poses[0].position, Vec3::new(2.0, 0.5, 6.0)));
    assert!(close(r.final_poses[1].position, Vec3::new(-2.0, 0.5, 6.0)));
}

#[test]
fn replays_reproduce_the_recorded_prompts() {
    for task in ["L1T1", "L2T2", "L4T1"] {
        let recorded = read_entries(&transcript(task)).unwrap();
        let (a, log, _) = replay(task);
        let (b, _, _) = replay(task);
        assert_eq!(a.canonical_json(), b.canonical_json(), "{task}");
        let got = log.entries();
        assert_eq!(got.len(), recorded.len(), "{task}");
        for (g, w) in got.iter().zip(&recorded) {
            assert_eq!((g.index, g.role, g.attempt), (w.index, w.role, w.attempt), "{task}");
            assert_eq!(g.prompt, w.prompt, "{task} request {}", g.index);
            assert_eq!(g.image_bytes, w.image_bytes, "{task} request {}", g.index);
            assert_eq!(g.response, w.response);
        }
    }
}

#[test]
fn http_stub_serves_a_recorded_run() {
    use ctxplace::vlm::stub::StubServer;
    let entries = read_entries(&transcript("L2T2")).unwrap();
    let server = StubServer::bind("127.0.0.1:0", entries).unwrap();
    let (addr, handle) = server.spawn();
    let addr = addr.unwrap();

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("vlm.toml");
    std::fs::write(&cfg, "model = \"stub\"\napi_key_env = \"CTXPLACE_STUB_KEY\"\ntimeout_secs = 30\n").unwrap();
    let out = dir.path().join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_ctxplace"))
        .args(["run", "--task", "L2T2", "--mode", "vlm", "--vlm-config"])
        .arg(&cfg)
        .args(["--endpoint", &format!("http://{addr}/v1/chat/completions"), "--out"])
        .arg(&out)
        .env("CTXPLACE_STUB_KEY", "test")
        .env("NO_PROXY", "*")
        .env_remove("HTTP_PROXY")
        .env_remove("http_proxy")
        .env_remove("ALL_PROXY")
        .env_remove("all_proxy")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert_eq!(handle.join().unwrap().unwrap(), 5);

    let record = std::fs::read_to_string(out.join("L2T2.run.json")).unwrap();
    let (direct, _, _) = replay("L2T2");
    assert_eq!(record, direct.canonical_json() + "\n");
    let log = read_entries(&out.join("L2T2.transcript.jsonl")).unwrap();
    assert_eq!(log.len(), 5);
}
