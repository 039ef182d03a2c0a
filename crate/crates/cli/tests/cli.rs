use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn btbd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_btbd")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn write_clip(dir: &Path) -> String {
    let (w, h, n) = (72usize, 40usize, 3usize);
    let mut bytes = Vec::with_capacity(w * h * n);
    for t in 0..n {
        for r in 0..h {
            for c in 0..w {
                let inside = (8..24).contains(&r) && (10 + 2 * t..30 + 2 * t).contains(&c);
                bytes.push(if inside { 190 } else { 30 + (r / 8) as u8 });
            }
        }
    }
    let path = p(dir, "clip.raw");
    fs::write(&path, bytes).unwrap();
    path
}

#[test]
fn lossless_encode_decode_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let clip = write_clip(dir.path());
    let (stream, out) = (p(dir.path(), "clip.btbd"), p(dir.path(), "out.raw"));
    let enc = btbd(&["encode", "--in", &clip, "--width", "72", "--height", "40", "--q", "1", "--out", &stream]);
    assert_eq!(code(&enc), 0, "{}", String::from_utf8_lossy(&enc.stderr));
    let dec = btbd(&["decode", "--in", &stream, "--out", &out, "--report", "--reference", &clip]);
    assert_eq!(code(&dec), 0, "{}", String::from_utf8_lossy(&dec.stderr));
    assert_eq!(fs::read(&clip).unwrap(), fs::read(&out).unwrap());
    let report = String::from_utf8_lossy(&dec.stdout);
    assert_eq!(report.lines().count(), 3);
    assert!(report.contains("psnr inf"), "{report}");
}

#[test]
fn encoding_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let clip = write_clip(dir.path());
    let a = p(dir.path(), "a.btbd");
    let b = p(dir.path(), "b.btbd");
    let common = ["--in", &clip, "--width", "72", "--height", "40", "--q", "5", "--gop", "2"];
    assert_eq!(code(&btbd(&[&["--threads", "1", "encode"][..], &common, &["--out", &a]].concat())), 0);
    assert_eq!(code(&btbd(&[&["--threads", "4", "encode"][..], &common, &["--out", &b]].concat())), 0);
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}

#[test]
fn even_q_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let clip = write_clip(dir.path());
    let o = btbd(&["encode", "--in", &clip, "--width", "72", "--height", "40", "--q", "4", "--out", &p(dir.path(), "x")]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("q must be odd"));
}

#[test]
fn exit_code_contract() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&btbd(&[])), 1);
    assert_eq!(code(&btbd(&["frobnicate"])), 1);
    assert_eq!(code(&btbd(&["--help"])), 0);
    let garbage = p(dir.path(), "garbage.btbd");
    fs::write(&garbage, b"not a stream at all").unwrap();
    assert_eq!(code(&btbd(&["decode", "--in", &garbage, "--out", &p(dir.path(), "o.raw")])), 2);
    assert_eq!(code(&btbd(&["decode", "--in", &p(dir.path(), "missing"), "--out", &p(dir.path(), "o.raw")])), 2);
    let clip = write_clip(dir.path());
    assert_eq!(code(&btbd(&["encode", "--in", &clip, "--out", &p(dir.path(), "x")])), 1);
    assert_eq!(code(&btbd(&["encode", "--in", &clip, "--width", "71", "--height", "40", "--frames", "3", "--out", &p(dir.path(), "x")])), 2);
}

#[test]
fn stats_compression_ratio_matches_encode_log() {
    let dir = tempfile::tempdir().unwrap();
    let clip = write_clip(dir.path());
    let (stream, out) = (p(dir.path(), "s.btbd"), p(dir.path(), "d.raw"));
    let enc = btbd(&["encode", "--in", &clip, "--width", "72", "--height", "40", "--out", &stream]);
    let log = String::from_utf8_lossy(&enc.stdout).into_owned();
    let bpp: f64 = log.split("bytes, ").nth(1).unwrap().split(' ').next().unwrap().parse().unwrap();
    assert_eq!(code(&btbd(&["decode", "--in", &stream, "--out", &out])), 0);
    let st = btbd(&["stats", "--original", &clip, "--decoded", &out, "--bits", &stream]);
    assert_eq!(code(&st), 0, "{}", String::from_utf8_lossy(&st.stderr));
    let text = String::from_utf8_lossy(&st.stdout).into_owned();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split('\t').collect();
    let cr: f64 = row[1].parse().unwrap();
    assert!((cr - 8.0 / bpp).abs() / cr < 1e-3, "cr {cr} vs 8/{bpp}");
    assert_eq!(row[2], "inf");
    let bits = fs::metadata(&stream).unwrap().len() * 8;
    let st2 = btbd(&["stats", "--original", &clip, "--decoded", &out, "--bits", &bits.to_string(), "--width", "72", "--height", "40"]);
    assert_eq!(String::from_utf8_lossy(&st2.stdout).lines().nth(1).unwrap().split('\t').nth(1).unwrap(), row[1]);
}

#[test]
fn bd_and_synth_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let a = p(dir.path(), "a.csv");
    let b = p(dir.path(), "b.csv");
    fs::write(&a, "bpp,psnr\n0.1,40\n0.2,44\n0.4,47\n0.8,49.5\n").unwrap();
    fs::write(&b, "bpp,psnr\n0.1,41\n0.2,45\n0.4,48\n0.8,50.5\n").unwrap();
    let o = btbd(&["bd", "--curve-a", &a, "--curve-b", &b]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("BD-PSNR 1.000 dB"));
    fs::write(&b, "rate\n1\n").unwrap();
    assert_eq!(code(&btbd(&["bd", "--curve-a", &a, "--curve-b", &b])), 2);

    let spec = p(dir.path(), "scene.txt");
    fs::write(&spec, "width = 64\nheight = 48\nframes = 2\nbackground = 50\nobject = rect 4 4 16 16 200 2 0\n").unwrap();
    let out = p(dir.path(), "scene.pgm");
    assert_eq!(code(&btbd(&["synth", "--spec", &spec, "--out", &out])), 0);
    let bytes = fs::read(&out).unwrap();
    assert!(bytes.starts_with(b"P5\n64 48\n255\n"));
    assert_eq!(bytes.len(), 2 * (13 + 64 * 48));
    fs::write(&spec, "width = sixty\n").unwrap();
    assert_eq!(code(&btbd(&["synth", "--spec", &spec, "--out", &out])), 2);
}
