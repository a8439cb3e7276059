mod common;

use std::path::Path;

use adjustsat_core::audio::{read_wav, write_wav, AudioClip, WavEncoding};
use adjustsat_core::stimulus::{AR_GRID, WDR_GRID};
use common::*;

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn fixture() -> (tempfile::TempDir, std::path::PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_study_fixture(dir.path(), 16_000, 1.0);
    (dir, manifest)
}

#[test]
fn prepare_renders_once() {
    let (dir, manifest) = fixture();
    let out = adjustsat(&["--manifest", s(&manifest), "prepare"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("17 rendered, 0 up to date, 0 failed"), "{text}");
    assert!(text.contains("wdr3_oo: rendered, 41 versions"), "{text}");
    assert!(text.contains("ar2_ds: rendered, 74 versions"), "{text}");

    let cache = dir.path().join("out/cache");
    let wav_count = |id: &str| {
        std::fs::read_dir(cache.join(id))
            .unwrap()
            .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "wav"))
            .count()
    };
    assert_eq!(wav_count("wdr1_oo"), 41);
    assert_eq!(wav_count("ar1_ds"), 74);
    let index: serde_json::Value =
        serde_json::from_slice(&std::fs::read(cache.join("ar1_ds/index.json")).unwrap()).unwrap();
    for v in index["versions"].as_array().unwrap() {
        assert!((v["measured_lufs"].as_f64().unwrap() + 23.0).abs() <= 0.2);
    }
    let mtime = std::fs::metadata(cache.join("wdr1_oo/v+0.0.wav")).unwrap().modified().unwrap();

    let again = adjustsat(&["--manifest", s(&manifest), "prepare"]);
    assert!(again.status.success());
    assert!(stdout(&again).contains("0 rendered, 17 up to date, 0 failed"), "{}", stdout(&again));
    assert_eq!(std::fs::metadata(cache.join("wdr1_oo/v+0.0.wav")).unwrap().modified().unwrap(), mtime);

    // a different target invalidates every entry
    let retarget = adjustsat(&["--manifest", s(&manifest), "--target-lufs", "-24", "prepare"]);
    assert!(stdout(&retarget).contains("17 rendered, 0 up to date"), "{}", stdout(&retarget));
}

#[test]
fn prepare_reports_missing_stems() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_study_fixture(dir.path(), 16_000, 1.0);
    std::fs::remove_file(dir.path().join("stems/AR3_bg.wav")).unwrap();
    let out = adjustsat(&["--manifest", s(&manifest), "prepare"]);
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.contains("item ar3_oo") && err.contains("AR3_bg.wav"), "{err}");
    assert!(err.contains("item ar3_ds"), "{err}");
    assert!(stdout(&out).contains("15 rendered, 0 up to date, 2 failed"), "{}", stdout(&out));
}

#[test]
fn prepare_honours_target_override() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_study_fixture(dir.path(), 16_000, 1.0);
    let mut m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    m["target_loudness"] = serde_json::Value::Null;
    m["items"].as_array_mut().unwrap().truncate(2);
    m["playlist"].as_array_mut().unwrap().truncate(2);
    std::fs::write(&manifest, m.to_string()).unwrap();
    let out = adjustsat(&["--manifest", s(&manifest), "--target-lufs", "-31", "prepare"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let index: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("out/cache/wdr3_oo/index.json")).unwrap()).unwrap();
    assert_eq!(index["key"]["target_lufs"], -31.0);
    let again = adjustsat(&["--manifest", s(&manifest), "prepare"]);
    assert!(stdout(&again).contains("2 rendered"), "{}", stdout(&again));
}

#[test]
fn measure_reports() {
    let dir = tempfile::tempdir().unwrap();
    let amp = 10f64.powf(-23.0 / 20.0);
    let t = tone(48_000, 997.0, amp, 3.0, 2);
    let f32_path = dir.path().join("tone_f32.wav");
    let pcm24_path = dir.path().join("tone_24.wav");
    write_wav(&f32_path, &t, WavEncoding::Float32).unwrap();
    write_wav(&pcm24_path, &t, WavEncoding::Pcm24).unwrap();

    let out = adjustsat(&["measure", s(&f32_path)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out).lines().next().unwrap(), "-23.0 LUFS");
    assert!(stdout(&out).contains("48000 Hz"));

    let lufs = |p: &Path| {
        let clip = read_wav(p).unwrap();
        adjustsat_core::integrated_loudness(&clip).unwrap().lufs().unwrap()
    };
    assert!((lufs(&f32_path) - lufs(&pcm24_path)).abs() <= 0.05);
    assert_eq!(stdout(&adjustsat(&["measure", s(&pcm24_path)])).lines().next().unwrap(), "-23.0 LUFS");

    let silent = dir.path().join("silence.wav");
    write_wav(&silent, &AudioClip::silence(48_000, 2, 48_000).unwrap(), WavEncoding::Pcm24).unwrap();
    assert_eq!(stdout(&adjustsat(&["measure", s(&silent)])).lines().next().unwrap(), "below gate");

    let short = dir.path().join("short.wav");
    write_wav(&short, &tone(48_000, 997.0, 0.1, 0.2, 2), WavEncoding::Pcm24).unwrap();
    let out = adjustsat(&["measure", s(&short)]);
    assert!(!out.status.success());

    let out = adjustsat(&["measure", "/nonexistent/x.wav"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("cannot read /nonexistent/x.wav"), "{}", stderr(&out));
}

fn ceiling_line(text: &str, key: &str) -> f64 {
    let line = text.lines().find(|l| l.starts_with(key)).unwrap();
    line[key.len()..].trim().trim_end_matches(" LU").parse().unwrap()
}

#[test]
fn simulate_ds_ceiling_and_files() {
    let dir = tempfile::tempdir().unwrap();
    // equal loudness stems: default LD 0
    let stems = tone_stems(16_000, 2.0, 0.0);
    let fg = dir.path().join("fg.wav");
    let bg = dir.path().join("bg.wav");
    write_wav(&fg, stems.fg(), WavEncoding::Float32).unwrap();
    write_wav(&bg, stems.bg(), WavEncoding::Float32).unwrap();
    let out_dir = dir.path().join("sim");

    let out = adjustsat(&[
        "--leakage-db", "-20", "--out", s(&out_dir), "simulate-ds", "--fg", s(&fg), "--bg", s(&bg), "--grid", WDR_GRID,
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let ceiling = ceiling_line(&text, "DS ceiling:");
    let clean = ceiling_line(&text, "leakage-free:");
    assert!((ceiling - 20.0).abs() <= 1.0, "{text}");
    assert!(ceiling < clean);
    assert!((clean - 40.0).abs() <= 0.5, "{text}");
    assert!(out_dir.join("fg_est.wav").is_file() && out_dir.join("bg_est.wav").is_file());

    let out = adjustsat(&[
        "--leakage-db", "-inf", "--out", s(&out_dir), "simulate-ds", "--fg", s(&fg), "--bg", s(&bg), "--grid", AR_GRID,
    ]);
    let text = stdout(&out);
    assert!(text.contains("leakage:          disabled"), "{text}");
    assert!((ceiling_line(&text, "DS ceiling:") - 20.0).abs() <= 0.5, "{text}");

    let out = adjustsat(&["--leakage-db", "3", "simulate-ds", "--fg", s(&fg), "--bg", s(&bg)]);
    assert!(!out.status.success());
}

#[test]
fn simulate_ds_with_silent_background() {
    let dir = tempfile::tempdir().unwrap();
    let fg_clip = tone(16_000, FG_HZ, 0.5, 1.0, 2);
    let fg = dir.path().join("fg.wav");
    let bg = dir.path().join("bg.wav");
    write_wav(&fg, &fg_clip, WavEncoding::Pcm24).unwrap();
    write_wav(&bg, &AudioClip::silence(16_000, 2, 16_000).unwrap(), WavEncoding::Pcm24).unwrap();
    let out = adjustsat(&["--leakage-db", "-20", "--out", s(dir.path()), "simulate-ds", "--fg", s(&fg), "--bg", s(&bg)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("DS ceiling:       n/a"), "{}", stdout(&out));

    let fg_read = read_wav(&fg).unwrap();
    let bg_est = read_wav(dir.path().join("bg_est.wav")).unwrap();
    let g = 10f64.powf(-20.0 / 20.0);
    let q = |x: f64| (x * 8_388_608.0).round() / 8_388_608.0;
    for (est, src) in bg_est.channels().iter().zip(fg_read.channels()) {
        for (e, x) in est.iter().zip(src) {
            assert_eq!(*e, q(g * x));
        }
    }
}

#[test]
fn cli_usage_errors() {
    let out = adjustsat(&["prepare"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("--manifest"), "{}", stderr(&out));
    let out = adjustsat(&["analyze"]);
    assert!(!out.status.success());
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("m.json");
    std::fs::write(&bad, r#"{"items": [], "playlist": ["x"]}"#).unwrap();
    let out = adjustsat(&["--manifest", s(&bad), "prepare"]);
    assert!(stderr(&out).contains("undeclared item x"), "{}", stderr(&out));
}
