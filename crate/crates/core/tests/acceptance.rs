//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Run with
//! `cargo test -p jpegdna-core --test acceptance`.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use jpegdna::binary::{
    binary_entropy_decode, binary_entropy_encode, decode_image_binary, encode_image_binary,
};
use jpegdna::experiment::{
    encode, quality_search, robustness_at, sweep, Method, RobustnessOptions,
};
use jpegdna::fixedlen::{self, decode_indices, encode_indices, SubbandLayout, DEFAULT_LEVELS};
use jpegdna::jpegdna::{decode_image, encode_image, entropy_decode, entropy_encode, EOB, ZRL};
use jpegdna::metrics::{psnr, Overhead};
use jpegdna::oligo::{self, Oligo, MAX_PAYLOAD_LEN, MIN_PAYLOAD_LEN};
use jpegdna::paircode::{self, capacity, CATEGORY_TABLE, MAX_VALUE, PAIRS, TAILS};
use jpegdna::pipeline::{
    forward_pipeline, inverse_pipeline, quant_table, BlockIndexStream, BlockIndices, Frame,
};
use jpegdna::transcode::{detranscode_bytes, transcode_bytes, NT_PER_BYTE};
use jpegdna::trit::{build_code, SymbolFrequencyTable};
use jpegdna::{ImageGray8, Nucleotide, NucleotideSequence};

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn testdata(name: &str) -> ImageGray8 {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "testdata", name]
        .iter()
        .collect();
    ImageGray8::read_pgm(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

fn below(r: &mut Xoshiro256PlusPlus, n: u64) -> u64 {
    r.next_u64() % n
}

fn range(r: &mut Xoshiro256PlusPlus, lo: i64, hi: i64) -> i64 {
    lo + below(r, (hi - lo + 1) as u64) as i64
}

/// Gradient, texture and noise mixed at random strengths.
fn random_image(r: &mut Xoshiro256PlusPlus, max_side: u64) -> ImageGray8 {
    let w = 1 + below(r, max_side) as usize;
    let h = 1 + below(r, max_side) as usize;
    let gx = range(r, -6, 6) as f64;
    let gy = range(r, -6, 6) as f64;
    let base = range(r, 0, 255) as f64;
    let noise = below(r, 129) as i64;
    let period = 2 + below(r, 12) as usize;
    let stripes = range(r, 0, 60) as f64;
    let mut seed = r.next_u64() | 1;
    ImageGray8::from_fn(w, h, |x, y| {
        seed ^= seed << 13;
        seed ^= seed >> 7;
        seed ^= seed << 17;
        let n = if noise == 0 {
            0
        } else {
            (seed % (2 * noise as u64 + 1)) as i64 - noise
        };
        let s = if (x / period + y / period).is_multiple_of(2) {
            stripes
        } else {
            -stripes
        };
        (base + gx * x as f64 + gy * y as f64 + s + n as f64).clamp(0.0, 255.0) as u8
    })
}

/// A non-zero value with a roughly log-uniform magnitude up to `max`.
fn random_value(r: &mut Xoshiro256PlusPlus, max: i64) -> i32 {
    let bits = 64 - (max as u64).leading_zeros() as u64;
    let cap = (1i64 << (1 + below(r, bits))).min(max);
    let m = range(r, 1, cap);
    if r.next_u64() & 1 == 0 {
        m as i32
    } else {
        -m as i32
    }
}

fn random_indices(r: &mut Xoshiro256PlusPlus, bw: usize, bh: usize) -> BlockIndexStream {
    let mut s = BlockIndexStream::zeros(bw, bh);
    for b in &mut s.blocks {
        let mut zz = [0i32; 64];
        let density = below(r, 5);
        for c in zz.iter_mut().skip(1) {
            if below(r, 4) < density {
                *c = random_value(r, MAX_VALUE as i64);
            }
        }
        let dc = if below(r, 4) == 0 {
            0
        } else {
            random_value(r, MAX_VALUE as i64)
        };
        *b = BlockIndices::from_zigzag(dc, &zz);
    }
    s
}

/// Lengths in nucleotides of the trit-coded segments of a JPEG-DNA payload,
/// interleaved with the PAIRCODE words that follow them: `(is_trit, len)`.
fn payload_segments(
    indices: &BlockIndexStream,
    dc: &jpegdna::trit::TernaryCode,
    ac: &jpegdna::trit::TernaryCode,
) -> Vec<(bool, usize)> {
    let cat = |v: i32| paircode::category_of(v).unwrap().category as usize;
    let mut out = Vec::new();
    for b in &indices.blocks {
        let c = cat(b.dc_diff);
        out.push((true, dc.code(c as u32).unwrap().len()));
        out.push((false, c));
        for a in &b.ac {
            let sym = if a.is_zrl() {
                ZRL
            } else {
                ((a.run as u32) << 4) | cat(a.value) as u32
            };
            out.push((true, ac.code(sym).unwrap().len()));
            if !a.is_zrl() {
                out.push((false, cat(a.value)));
            }
        }
        if b.has_eob() {
            out.push((true, ac.code(EOB).unwrap().len()));
        }
    }
    out
}

fn criterion_1() -> Verdict {
    const SIZES: [u64; 7] = [10, 40, 100, 400, 1000, 4000, 10000];
    // independent count: every 4-ary string that parses as pairs plus an
    // optional tail
    let brute = |len: usize| -> u64 {
        let mut n = 0;
        for code in 0..4u32.pow(len as u32) {
            let s: Vec<Nucleotide> = (0..len)
                .map(|i| Nucleotide::ALL[(code >> (2 * i)) as usize & 3])
                .collect();
            let ok_pairs = s.chunks_exact(2).all(|p| PAIRS.iter().any(|q| q == p));
            let ok_tail = len.is_multiple_of(2) || TAILS.contains(&s[len - 1]);
            n += (ok_pairs && ok_tail) as u64;
        }
        n
    };
    for (c, &want) in (2..=8).zip(SIZES.iter()) {
        let entry = CATEGORY_TABLE.iter().find(|e| e.category == c as u8);
        let entry = entry.ok_or_else(|| format!("category {c} missing"))?;
        let cap = capacity(c).map_err(|e| e.to_string())?;
        ensure(cap == want, || {
            format!("capacity({c}) = {cap}, want {want}")
        })?;
        ensure(entry.size() == want, || {
            format!("category {c} range size {} != {want}", entry.size())
        })?;
        let b = brute(c);
        ensure(b == want, || format!("enumerated words of length {c}: {b}"))?;
    }
    Ok("capacity(2..8) = 10,40,100,400,1000,4000,10000 = table ranges = enumeration".into())
}

fn criterion_2() -> Verdict {
    let mut r = rng(2);
    let mut checked = 0usize;
    let mut trit_nt = 0usize;
    for case in 0..1000 {
        let img = random_image(&mut r, 48);
        let q = range(&mut r, 1, 100) as u8;
        let ctx = |what: &str| {
            format!(
                "case {case} ({}x{} q{q}): {what}",
                img.width(),
                img.height()
            )
        };

        let s = encode_image(&img, q).map_err(|e| ctx(&e.to_string()))?;
        let strand = s.to_sequence();
        ensure(strand.max_run() <= 3, || ctx("JPEG-DNA strand run > 3"))?;
        ensure(entropy_decode(&s).is_clean(), || {
            ctx("JPEG-DNA decode not clean")
        })?;

        // walk the payload segment by segment; each trit nucleotide must
        // differ from the one before it in the strand
        let idx = forward_pipeline(&img, q).unwrap();
        let mut prev = *s.header_nt.last().unwrap();
        let mut at = 0;
        for (is_trit, len) in payload_segments(&idx, &s.header.dc_code, &s.header.ac_code) {
            let seg = s
                .payload
                .get(at..at + len)
                .ok_or_else(|| ctx("payload shorter than its segments"))?;
            if is_trit {
                for &n in seg {
                    ensure(n != prev, || {
                        ctx(&format!("adjacent repeat at payload {at}"))
                    })?;
                    prev = n;
                }
                trit_nt += len;
            } else if len > 0 {
                prev = seg[len - 1];
            }
            at += len;
        }
        ensure(at == s.payload.len(), || {
            ctx("segments do not cover the payload")
        })?;

        let t = encode(&img, Method::Transcode, q as f64).map_err(|e| ctx(&e.to_string()))?;
        ensure(t.strand.max_run() <= 3, || ctx("transcoded run > 3"))?;

        let step = Method::FixedLen.grid()[below(&mut r, 45) as usize];
        let f = encode(&img, Method::FixedLen, step).map_err(|e| ctx(&e.to_string()))?;
        ensure(f.strand.max_run() <= 3, || ctx("fixed-length run > 3"))?;

        let l = range(&mut r, MIN_PAYLOAD_LEN as i64, MAX_PAYLOAD_LEN as i64) as usize;
        for st in [&strand, &t.strand, &f.strand] {
            for o in oligo::fragment(st, l).map_err(|e| ctx(&e.to_string()))? {
                ensure(o.to_sequence().max_run() <= 3, || ctx("oligo run > 3"))?;
            }
        }
        checked += 1;
    }
    let mut gc = Vec::new();
    for name in ["camera", "moon", "astronaut"] {
        let img = testdata(&format!("{name}.pgm"));
        for q in [50, 75, 90] {
            let s = encode_image(&img, q).unwrap();
            gc.push(format!("{name}/q{q} {:.3}", s.payload.gc_fraction()));
        }
    }
    println!("      JPEG-DNA payload GC fraction: {}", gc.join(", "));
    Ok(format!(
        "{checked} random images: runs <= 3 in all streams and oligos, {trit_nt} trit nt without repeats"
    ))
}

fn criterion_3() -> Verdict {
    let mut r = rng(3);
    // entropy layers on random index streams
    for case in 0..300 {
        let (bw, bh) = (1 + below(&mut r, 6) as usize, 1 + below(&mut r, 6) as usize);
        let idx = random_indices(&mut r, bw, bh);
        let w = bw * 8 - below(&mut r, 8) as usize;
        let h = bh * 8 - below(&mut r, 8) as usize;
        let frame = Frame::new(w, h, range(&mut r, 1, 100) as u8).unwrap();
        let s = entropy_encode(&idx, frame).map_err(|e| format!("case {case}: {e}"))?;
        let back = jpegdna::jpegdna::JpegDnaStream::from_sequence(&s.to_sequence())
            .map_err(|e| format!("case {case}: {e}"))?;
        let d = entropy_decode(&back);
        ensure(d.is_clean() && d.indices == idx, || {
            format!("case {case}: JPEG-DNA entropy round trip")
        })?;
        let b = binary_entropy_encode(&idx, frame).map_err(|e| format!("case {case}: {e}"))?;
        let d = binary_entropy_decode(&b);
        ensure(d.is_clean() && d.indices == idx, || {
            format!("case {case}: binary entropy round trip")
        })?;
    }
    // transcoding
    for case in 0..300 {
        let n = below(&mut r, 2000) as usize;
        let bytes: Vec<u8> = (0..n).map(|_| r.next_u64() as u8).collect();
        let s = transcode_bytes(&bytes);
        ensure(detranscode_bytes(&s).ok() == Some(bytes), || {
            format!("case {case}: transcode round trip")
        })?;
    }
    // fragment / reassemble, shuffled and through text form
    for case in 0..300 {
        let n = 1 + below(&mut r, 6000) as usize;
        let strand: NucleotideSequence = (0..n)
            .map(|_| Nucleotide::ALL[below(&mut r, 4) as usize])
            .collect();
        let l = range(&mut r, MIN_PAYLOAD_LEN as i64, MAX_PAYLOAD_LEN as i64) as usize;
        let mut seqs: Vec<NucleotideSequence> = oligo::fragment(&strand, l)
            .map_err(|e| e.to_string())?
            .iter()
            .map(Oligo::to_sequence)
            .collect();
        for i in (1..seqs.len()).rev() {
            seqs.swap(i, below(&mut r, i as u64 + 1) as usize);
        }
        let (oligos, dropped) = oligo::parse_all(&seqs);
        ensure(dropped.is_empty(), || {
            format!("case {case}: unparsable oligo")
        })?;
        let hint = if r.next_u64() & 1 == 0 { Some(l) } else { None };
        let re = oligo::reassemble(&oligos, hint).map_err(|e| e.to_string())?;
        ensure(re.is_complete() && re.strand == strand, || {
            format!("case {case}: reassemble(fragment) differs (n={n}, L={l})")
        })?;
    }
    // fixed-length at index level
    for case in 0..200 {
        let img = random_image(&mut r, 40);
        let step = Method::FixedLen.grid()[below(&mut r, 45) as usize];
        let layout = SubbandLayout::plan(&img, DEFAULT_LEVELS, step).map_err(|e| e.to_string())?;
        let mut indices = Vec::new();
        for (b, q) in layout.subbands().iter().zip(&layout.bands) {
            for _ in 0..b.len() {
                indices.push(range(&mut r, q.min_index as i64, q.max_index()) as i32);
            }
        }
        let enc = encode_indices(&indices, &layout).map_err(|e| e.to_string())?;
        ensure(enc.clamped == 0, || {
            format!("case {case}: in-range index clamped")
        })?;
        let d = decode_indices(&enc.payload, &layout).map_err(|e| e.to_string())?;
        ensure(
            d.indices == indices && d.malformed.is_empty() && d.missing == 0,
            || format!("case {case}: fixed-length index round trip"),
        )?;
        let q = fixedlen::quantize_image(&img, &layout).map_err(|e| e.to_string())?;
        let strand =
            fixedlen::encode_strand(&img, DEFAULT_LEVELS, step).map_err(|e| e.to_string())?;
        let seq = strand.to_sequence();
        let (lay2, payload) = fixedlen::split_strand(&seq).map_err(|e| e.to_string())?;
        let d = decode_indices(payload, &lay2).map_err(|e| e.to_string())?;
        ensure(lay2 == layout && d.indices == q, || {
            format!("case {case}: fixed-length strand round trip")
        })?;
    }
    // pixel identity between the two entropy layers
    let mut compared = 0;
    let mut check = |img: &ImageGray8, q: u8| -> Result<(), String> {
        let a = decode_image(&encode_image(img, q).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let b = decode_image_binary(&encode_image_binary(img, q).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        compared += 1;
        ensure(
            a.image == b.image && a.outcome.is_clean() && b.outcome.is_clean(),
            || {
                format!(
                    "{}x{} q{q}: JPEG-DNA and binary reconstructions differ",
                    img.width(),
                    img.height()
                )
            },
        )
    };
    for name in ["camera", "moon", "astronaut"] {
        let img = testdata(&format!("{name}.pgm"));
        for q in [5, 25, 50, 75, 95, 100] {
            check(&img, q)?;
        }
    }
    for _ in 0..100 {
        let img = random_image(&mut r, 64);
        let q = range(&mut r, 1, 100) as u8;
        check(&img, q)?;
    }
    Ok(format!(
        "entropy x300 (both layers), transcode x300, oligos x300, fixed-length x200, {compared} pixel-identical pairs"
    ))
}

/// Smallest weighted length over Kraft-feasible ternary length vectors.
/// Counts are sorted descending, so non-decreasing length vectors suffice.
fn ternary_optimum(counts: &[u64]) -> u64 {
    const MAX_LEN: u32 = 6;
    fn go(counts: &[u64], min_len: u32, kraft_left: u64, best: &mut u64, acc: u64) {
        let Some((&c, rest)) = counts.split_first() else {
            *best = (*best).min(acc);
            return;
        };
        for l in min_len..=MAX_LEN {
            let w = 3u64.pow(MAX_LEN - l);
            if w <= kraft_left {
                go(rest, l, kraft_left - w, best, acc + c * l as u64);
            }
        }
    }
    let mut sorted = counts.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let mut best = u64::MAX;
    go(&sorted, 1, 3u64.pow(MAX_LEN), &mut best, 0);
    best
}

fn criterion_4() -> Verdict {
    let start = Instant::now();
    let mut tables = 0;
    let mut multiset = Vec::new();
    fn each(
        ms: &mut Vec<u64>,
        lo: u64,
        f: &mut dyn FnMut(&[u64]) -> Result<(), String>,
    ) -> Result<(), String> {
        if !ms.is_empty() {
            f(ms)?;
        }
        if ms.len() == 6 {
            return Ok(());
        }
        for c in lo..=8 {
            ms.push(c);
            each(ms, c, f)?;
            ms.pop();
        }
        Ok(())
    }
    each(&mut multiset, 1, &mut |counts| {
        let opt = ternary_optimum(counts);
        // ascending and descending symbol ids exercise tie-breaking
        for rev in [false, true] {
            let freqs: SymbolFrequencyTable = counts
                .iter()
                .enumerate()
                .map(|(i, &c)| (if rev { 100 - i as u32 } else { i as u32 }, c))
                .collect();
            let code = build_code(&freqs).map_err(|e| e.to_string())?;
            let got = code.weighted_length(&freqs);
            ensure(got == opt, || {
                format!("{counts:?}: weighted length {got}, optimum {opt}")
            })?;
            tables += 1;
        }
        Ok(())
    })?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("took {secs:.1} s"))?;
    Ok(format!(
        "{tables} tables of 1..6 symbols optimal ({secs:.2} s)"
    ))
}

fn criterion_5() -> Verdict {
    let mut r = rng(5);
    for n in [0usize, 1, 2, 17, 1000, 4096] {
        let bytes: Vec<u8> = (0..n).map(|_| r.next_u64() as u8).collect();
        let s = transcode_bytes(&bytes);
        ensure(s.len() == NT_PER_BYTE * n && NT_PER_BYTE == 5, || {
            format!("{n} bytes -> {} nt", s.len())
        })?;
    }
    let camera = testdata("camera.pgm");
    let mut notes = Vec::new();
    for q in [85.0, 90.0, 95.0] {
        let dna = sweep(&camera, Method::JpegDna, &[q], Overhead::default())
            .map_err(|e| e.to_string())?;
        let tr = sweep(&camera, Method::Transcode, &[q], Overhead::default())
            .map_err(|e| e.to_string())?;
        let (d, t) = (dna[0].rate.total_nt, tr[0].rate.total_nt);
        ensure(t < d, || {
            format!("camera q{q}: transcode {t} nt >= JPEG-DNA {d} nt")
        })?;
        notes.push(format!("q{q}: {t} < {d}"));
    }
    Ok(format!(
        "5 nt/byte; camera transcode vs JPEG-DNA total_nt {}",
        notes.join(", ")
    ))
}

fn criterion_6() -> Verdict {
    let mut cases = 0;
    let mut words_checked = 0usize;
    let mut images = vec![(testdata("camera.pgm"), 4.756828460010884)];
    let mut r = rng(6);
    for _ in 0..6 {
        let step = Method::FixedLen.grid()[below(&mut r, 45) as usize];
        images.push((random_image(&mut r, 120), step));
    }
    for (n, (img, step)) in images.iter().enumerate() {
        let fs = fixedlen::encode_strand(img, DEFAULT_LEVELS, *step).map_err(|e| e.to_string())?;
        let strand = fs.to_sequence();
        let head = fs.header_nt.len();
        let offsets = fs.layout.offsets();
        let clean = decode_indices(&fs.payload, &fs.layout).map_err(|e| e.to_string())?;
        for seed in 0..8u64 {
            let l = [187usize, 100, 267, 37][seed as usize % 4];
            let pos = head + jpegdna::channel::random_position(fs.payload.len(), seed);
            let mut oligos = oligo::fragment(&strand, l).map_err(|e| e.to_string())?;
            let k = pos / l;
            let mut seq = oligos[k].to_sequence().into_vec();
            let first = seq.len() - oligos[k].payload.len();
            seq.remove(first + pos % l);
            oligos[k] = Oligo::parse(&seq).map_err(|e| e.to_string())?;
            let re = oligo::reassemble(&oligos, None).map_err(|e| e.to_string())?;
            let (layout, payload) =
                fixedlen::split_strand(&re.strand).map_err(|e| e.to_string())?;
            let got = decode_indices(payload, &layout).map_err(|e| e.to_string())?;
            // the hit oligo covers payload offsets [lo, hi)
            let lo = (k * l).saturating_sub(head);
            let hi = ((k + 1) * l).saturating_sub(head);
            for i in 0..clean.indices.len() {
                let (a, b) = (offsets[i], offsets[i + 1]);
                if b <= lo || a >= hi {
                    ensure(got.indices[i] == clean.indices[i], || {
                        format!("image {n} seed {seed}: coefficient {i} outside oligo {k} changed")
                    })?;
                    words_checked += 1;
                }
            }
            cases += 1;
        }
    }
    Ok(format!(
        "{cases} in-oligo deletions; {words_checked} outside coefficients bit-identical"
    ))
}

fn criterion_7() -> Verdict {
    let camera = testdata("camera.pgm");
    let (w, h) = (camera.width(), camera.height());
    let target = 38.5;
    let start = Instant::now();
    let mut found = Vec::new();
    for m in Method::ALL {
        let s = quality_search(&camera, m, target).map_err(|e| e.to_string())?;
        ensure((s.psnr_db - target).abs() <= 1.0, || {
            format!("{m}: search landed at {:.2} dB", s.psnr_db)
        })?;
        found.push((m, s));
    }
    let run = |m: Method, p: f64, seed: u64| {
        robustness_at(
            &camera,
            m,
            p,
            RobustnessOptions {
                seed: Some(seed),
                ..Default::default()
            },
        )
        .map_err(|e| e.to_string())
    };
    let mut after = Vec::new();
    for &(m, s) in &found {
        after.push(run(m, s.param, 0)?);
    }
    let (dna, tr, fl) = (&after[0], &after[1], &after[2]);

    // blocks wholly before the deletion decode exactly as in the clean run
    let enc = encode(&camera, Method::JpegDna, found[0].1.param).map_err(|e| e.to_string())?;
    let del = dna.site.as_ref().unwrap().strand_position;
    ensure(del >= enc.header_nt, || {
        "deletion fell in the header".into()
    })?;
    let at = del - enc.header_nt;
    let clean = dna.clean.outcome.as_ref().unwrap();
    let corrupt = dna.corrupt.outcome.as_ref().unwrap();
    let before = clean.block_ends.iter().take_while(|&&e| e <= at).count();
    ensure(
        corrupt.indices.blocks[..before] == clean.indices.blocks[..before],
        || "a block before the deletion changed".into(),
    )?;
    let bw = clean.indices.blocks_wide;
    for b in 0..before {
        let (bx, by) = (b % bw * 8, b / bw * 8);
        for y in by..(by + 8).min(h) {
            for x in bx..(bx + 8).min(w) {
                ensure(
                    dna.corrupt.image.get(x, y) == dna.clean.image.get(x, y),
                    || format!("pixel ({x},{y}) of block {b} changed"),
                )?;
            }
        }
    }

    println!(
        "      seed 0: jpeg-dna q{} {:.2} -> {:.2} dB, transcode q{} {:.2} -> {:.2} dB, fixedlen step {:.3} {:.2} -> {:.2} dB; {before} blocks before the deletion intact",
        dna.param, dna.clean_psnr, dna.corrupt_psnr, tr.param, tr.clean_psnr, tr.corrupt_psnr,
        fl.param, fl.clean_psnr, fl.corrupt_psnr
    );
    for seed in 1..6 {
        let mut line = Vec::new();
        for &(m, s) in &found {
            line.push(format!("{m} {:.2}", run(m, s.param, seed)?.corrupt_psnr));
        }
        println!("      seed {seed} (informational): {}", line.join(", "));
    }
    ensure(dna.corrupt_psnr < fl.corrupt_psnr, || {
        format!(
            "JPEG-DNA after deletion {:.2} dB not below fixed-length {:.2} dB",
            dna.corrupt_psnr, fl.corrupt_psnr
        )
    })?;
    ensure(
        tr.corrupt_psnr < dna.corrupt_psnr && tr.corrupt_psnr < fl.corrupt_psnr,
        || {
            format!(
                "transcoding after deletion {:.2} dB is not the lowest",
                tr.corrupt_psnr
            )
        },
    )?;
    Ok(format!(
        "camera, seed 0: transcode {:.2} < jpeg-dna {:.2} < fixedlen {:.2} dB ({:.1} s)",
        tr.corrupt_psnr,
        dna.corrupt_psnr,
        fl.corrupt_psnr,
        start.elapsed().as_secs_f64()
    ))
}

fn criterion_8() -> Verdict {
    let qs: Vec<f64> = (1..=9).map(|k| 10.0 * k as f64).collect();
    let mut notes = Vec::new();
    for name in ["camera", "moon"] {
        let img = testdata(&format!("{name}.pgm"));
        let start = Instant::now();
        for m in [Method::JpegDna, Method::Transcode] {
            let mut recs = sweep(&img, m, &qs, Overhead::default()).map_err(|e| e.to_string())?;
            recs.sort_by(|a, b| a.rate.coding_potential.total_cmp(&b.rate.coding_potential));
            for p in recs.windows(2) {
                ensure(p[1].psnr_db <= p[0].psnr_db, || {
                    format!(
                        "{name} {m}: PSNR rises from {:.2} to {:.2} dB as coding potential grows ({} -> {})",
                        p[0].psnr_db, p[1].psnr_db, p[0].param, p[1].param
                    )
                })?;
            }
        }
        let secs = start.elapsed().as_secs_f64();
        ensure(secs < 60.0, || format!("{name}: sweep took {secs:.1} s"))?;
        notes.push(format!("{name} {secs:.1} s"));
    }
    Ok(format!(
        "9 qualities x 2 methods monotone on camera and moon ({})",
        notes.join(", ")
    ))
}

/// Round half away from zero of `num / den` for integers, `den > 0`.
fn div_round(num: i64, den: i64) -> i64 {
    let m = (2 * num.abs() + den) / (2 * den);
    if num < 0 {
        -m
    } else {
        m
    }
}

fn criterion_9() -> Verdict {
    let table = quant_table(50).unwrap();
    let mut r = rng(9);
    let mut blocks: Vec<[u8; 64]> = (0..10)
        .map(|_| {
            let mut b = [0u8; 64];
            b.iter_mut().for_each(|v| *v = r.next_u64() as u8);
            b
        })
        .collect();
    let mut impulse = [128u8; 64];
    impulse[0] = 255;
    blocks.push(impulse);
    let mut impulse0 = [0u8; 64];
    impulse0[27] = 255;
    blocks.push(impulse0);
    let img = ImageGray8::from_fn(8 * blocks.len(), 8, |x, y| blocks[x / 8][y * 8 + x % 8]);
    let got = forward_pipeline(&img, 50).unwrap().coefficient_blocks();
    let c = |k: usize| if k == 0 { 0.5f64.sqrt() } else { 1.0 };
    let pi = std::f64::consts::PI;
    let mut exact_cells = 0;
    for (n, (blk, g)) in blocks.iter().zip(&got).enumerate() {
        for v in 0..8 {
            for u in 0..8 {
                let want = if u % 4 == 0 && v % 4 == 0 {
                    // (2x+1)·4π/16 has cosine ±√½: signs + - - + + - - +
                    let sign = |k: usize, x: usize| -> i64 {
                        if k == 0 || matches!(x % 4, 0 | 3) {
                            1
                        } else {
                            -1
                        }
                    };
                    let mut s = 0i64;
                    for y in 0..8 {
                        for x in 0..8 {
                            s += sign(u, x) * sign(v, y) * (blk[y * 8 + x] as i64 - 128);
                        }
                    }
                    exact_cells += 1;
                    div_round(s, 8 * table[v * 8 + u] as i64) as i32
                } else {
                    let mut f = 0.0;
                    for y in 0..8 {
                        for x in 0..8 {
                            f += (blk[y * 8 + x] as f64 - 128.0)
                                * ((2 * x + 1) as f64 * u as f64 * pi / 16.0).cos()
                                * ((2 * y + 1) as f64 * v as f64 * pi / 16.0).cos();
                        }
                    }
                    let q = 0.25 * c(u) * c(v) * f / table[v * 8 + u] as f64;
                    let frac = q.abs().fract();
                    ensure((frac - 0.5).abs() > 1e-9, || {
                        format!("block {n} ({u},{v}): oracle value {q} on a rounding tie")
                    })?;
                    q.round() as i32
                };
                ensure(g[v * 8 + u] == want, || {
                    format!(
                        "block {n} (u={u}, v={v}): pipeline {} vs oracle {want}",
                        g[v * 8 + u]
                    )
                })?;
            }
        }
    }
    let mut notes = Vec::new();
    for name in ["camera", "moon", "astronaut"] {
        let img = testdata(&format!("{name}.pgm"));
        let idx = forward_pipeline(&img, 75).unwrap();
        let rec =
            inverse_pipeline(&idx, 75, img.width(), img.height()).map_err(|e| e.to_string())?;
        let p = psnr(&img, &rec);
        ensure(p >= 30.0, || format!("{name} q75: {p:.2} dB"))?;
        notes.push(format!("{name} {p:.2}"));
    }
    Ok(format!(
        "{} blocks match the direct DCT oracle ({exact_cells} cells in exact integers); q75 PSNR {}",
        blocks.len(),
        notes.join(", ")
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("category capacities", criterion_1),
        ("constraint suite", criterion_2),
        ("round trips", criterion_3),
        ("ternary Huffman optimality", criterion_4),
        ("transcoding rate", criterion_5),
        ("fixed-length deletion locality", criterion_6),
        ("variable-length deletion propagation", criterion_7),
        ("rate-distortion shape", criterion_8),
        ("pipeline oracle", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = f();
        let secs = start.elapsed().as_secs_f64();
        match v {
            Ok(msg) => println!("PASS {}. {name}: {msg} [{secs:.1} s]", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {}. {name}: {msg} [{secs:.1} s]", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
