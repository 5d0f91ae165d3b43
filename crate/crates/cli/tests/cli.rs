use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use jpegdna::metrics::psnr;
use jpegdna::ImageGray8;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_jpegdna"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// A small natural-looking test image written to `dir`.
fn sample(dir: &Path) -> PathBuf {
    let img = ImageGray8::from_fn(96, 72, |x, y| {
        let r = ((x as f64 - 40.0).powi(2) + (y as f64 - 30.0).powi(2)).sqrt();
        (128.0 + 90.0 * (r / 9.0).cos() + (x as f64) * 0.4) as u8
    });
    let p = dir.join("in.pgm");
    img.write_pgm(&p).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn encode_decode_round_trip_each_method() {
    let dir = tempfile::tempdir().unwrap();
    let img = sample(dir.path());
    let original = ImageGray8::read_pgm(&img).unwrap();
    for (enc, extra) in [
        ("encode", ["-q", "80"]),
        ("transcode", ["-q", "80"]),
        ("fixedlen-encode", ["--step", "4"]),
    ] {
        let strand = dir.path().join(format!("{enc}.fa"));
        let out = dir.path().join(format!("{enc}.pgm"));
        let o = run(&[enc, s(&img), extra[0], extra[1], "-o", s(&strand)]);
        assert_eq!(code(&o), 0, "{enc}: {}", String::from_utf8_lossy(&o.stderr));
        let o = run(&["decode", s(&strand), "-o", s(&out)]);
        assert_eq!(code(&o), 0, "{enc}: {}", String::from_utf8_lossy(&o.stderr));
        let back = ImageGray8::read_pgm(&out).unwrap();
        assert!(psnr(&original, &back) > 30.0, "{enc}");
    }
}

#[test]
fn fixedlen_decode_accepts_text_format_oligos() {
    let dir = tempfile::tempdir().unwrap();
    let img = sample(dir.path());
    let oligos = dir.path().join("o.txt");
    let out = dir.path().join("o.pgm");
    let o = run(&[
        "fixedlen-encode",
        s(&img),
        "--payload-len",
        "150",
        "--format",
        "txt",
        "-o",
        s(&oligos),
    ]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(&oligos).unwrap();
    assert!(text.lines().count() > 1 && !text.contains('>'));
    let o = run(&["fixedlen-decode", s(&oligos), "-o", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn oligos_pack_unpack() {
    let dir = tempfile::tempdir().unwrap();
    let img = sample(dir.path());
    let (strand, packed, unpacked) = (
        dir.path().join("s.fa"),
        dir.path().join("p.fa"),
        dir.path().join("u.fa"),
    );
    assert_eq!(code(&run(&["encode", s(&img), "-o", s(&strand)])), 0);
    let o = run(&[
        "oligos",
        "pack",
        s(&strand),
        "--payload-len",
        "100",
        "-o",
        s(&packed),
    ]);
    assert_eq!(code(&o), 0);
    assert!(fs::read_to_string(&packed).unwrap().contains(">oligo_1"));
    assert_eq!(
        code(&run(&["oligos", "unpack", s(&packed), "-o", s(&unpacked)])),
        0
    );
    let a = jpegdna::fasta::parse_records(&fs::read_to_string(&strand).unwrap()).unwrap();
    let b = jpegdna::fasta::parse_records(&fs::read_to_string(&unpacked).unwrap()).unwrap();
    assert_eq!(a[0].seq, b[0].seq);

    // drop one oligo: output is still written, exit code 3
    let text = fs::read_to_string(&packed).unwrap();
    let kept: Vec<&str> = text.split_inclusive('>').collect();
    let damaged: String = kept[..2].concat() + &kept[3..].concat();
    fs::write(&packed, damaged).unwrap();
    assert_eq!(
        code(&run(&["oligos", "unpack", s(&packed), "-o", s(&unpacked)])),
        3
    );
    assert!(unpacked.exists());
}

#[test]
fn deletion_gives_partial_output_and_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let img = sample(dir.path());
    let (strand, bad, out, log) = (
        dir.path().join("s.fa"),
        dir.path().join("bad.fa"),
        dir.path().join("bad.pgm"),
        dir.path().join("log.csv"),
    );
    assert_eq!(code(&run(&["encode", s(&img), "-o", s(&strand)])), 0);
    let len = jpegdna::fasta::parse_records(&fs::read_to_string(&strand).unwrap()).unwrap()[0]
        .seq
        .len();
    let pos = (len - 40).to_string();
    let o = run(&[
        "corrupt",
        s(&strand),
        "--delete",
        &pos,
        "--log",
        s(&log),
        "-o",
        s(&bad),
    ]);
    assert_eq!(code(&o), 0);
    let log = fs::read_to_string(&log).unwrap();
    assert!(log.starts_with("position,kind,before,after\n"));
    assert!(log.contains(&format!("{pos},deletion,")));
    let o = run(&["decode", s(&bad), "-o", s(&out)]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.exists());
}

#[test]
fn seeded_corruption_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let img = sample(dir.path());
    let strand = dir.path().join("s.fa");
    assert_eq!(code(&run(&["transcode", s(&img), "-o", s(&strand)])), 0);
    let mut outs = Vec::new();
    for k in 0..2 {
        let p = dir.path().join(format!("c{k}.fa"));
        let o = run(&[
            "corrupt",
            s(&strand),
            "--sub-rate",
            "0.01",
            "--del-rate",
            "0.005",
            "--seed",
            "42",
            "-o",
            s(&p),
        ]);
        assert_eq!(code(&o), 0);
        outs.push(fs::read_to_string(&p).unwrap());
    }
    assert_eq!(outs[0], outs[1]);
    assert_ne!(outs[0], fs::read_to_string(&strand).unwrap());
}

#[test]
fn format_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let img = sample(dir.path());
    let junk = dir.path().join("junk.fa");
    fs::write(&junk, ">x\nACGTQ\n").unwrap();
    let out = dir.path().join("o.pgm");
    assert_eq!(code(&run(&["decode", s(&junk), "-o", s(&out)])), 2);
    // a PGM is not a sequence file
    assert_eq!(code(&run(&["decode", s(&img), "-o", s(&out)])), 2);
    // valid nucleotides, no known stream header
    fs::write(&junk, ">x\nACGTACGTACGTACGTACGTACGTACGTACGT\n").unwrap();
    assert_eq!(code(&run(&["decode", s(&junk), "-o", s(&out)])), 2);
    assert_eq!(code(&run(&["psnr", s(&junk), s(&img)])), 2);
    assert!(!out.exists());
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&run(&["encode"])), 1);
    assert_eq!(code(&run(&["no-such-command"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn psnr_of_identical_images_is_inf() {
    let dir = tempfile::tempdir().unwrap();
    let img = sample(dir.path());
    let o = run(&["psnr", s(&img), s(&img)]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "inf");
}

#[test]
fn sweep_csv_has_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let img = sample(dir.path());
    let csv = dir.path().join("sweep.csv");
    let o = run(&[
        "sweep",
        s(&img),
        "--method",
        "jpeg-dna,transcode",
        "--params",
        "20,50,80",
        "--csv",
        s(&csv),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 7);
    assert!(lines[0].starts_with("method,param,psnr_db,total_nt"));
    assert!(lines[1].starts_with("jpeg-dna,20,"));
    assert!(lines[6].starts_with("transcode,80,"));
}

#[test]
fn robustness_writes_images_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let img = sample(dir.path());
    let out = dir.path().join("rob");
    let csv = dir.path().join("rob.csv");
    let o = run(&[
        "robustness",
        s(&img),
        "--target-psnr",
        "35",
        "--seed",
        "1",
        "--out-dir",
        s(&out),
        "--csv",
        s(&csv),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 3);
    for m in ["jpeg-dna", "transcode", "fixedlen"] {
        assert!(out.join(format!("{m}_clean.pgm")).exists());
        assert!(out.join(format!("{m}_corrupt.pgm")).exists());
    }
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.contains("deletion@"));
}

#[test]
fn codebook_lists_table_and_words() {
    let o = run(&["codebook"]);
    assert_eq!(code(&o), 0);
    let t = stdout(&o);
    assert!(t.contains("\n2\t1\t5\t10\t10\n"));
    assert!(t.contains("\n8\t2776\t7775\t10000\t10000\n"));
    let o = run(&["codebook", "--length", "2", "--limit", "20"]);
    let words: Vec<String> = stdout(&o)
        .lines()
        .map(|l| l.split('\t').nth(1).unwrap().to_string())
        .collect();
    assert_eq!(
        words,
        ["AT", "AC", "AG", "TA", "TC", "TG", "CA", "CT", "GA", "GT"]
    );
    assert_eq!(code(&run(&["codebook", "--length", "1"])), 1);
}
