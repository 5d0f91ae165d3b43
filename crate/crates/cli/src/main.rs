//! `jpegdna` command-line tool.
//!
//! Exit codes: 0 success, 1 other errors (I/O, bad arguments),
//! 2 unreadable input format, 3 corruption detected with partial output
//! written.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use jpegdna::binary::decode_transcoded;
use jpegdna::channel::{
    corrupt, oligo_seed, single_random_deletion, write_logs_csv, ChannelSpec, EventLog,
    ExplicitEvent,
};
use jpegdna::experiment::{
    detect_method, encode, robustness_experiment, sweep, Method, RobustnessOptions,
};
use jpegdna::fasta::{parse_records, write_records, Format, Record};
use jpegdna::fixedlen::{self, DEFAULT_LEVELS};
use jpegdna::metrics::{format_db, psnr, rate_report, write_csv, ExperimentRecord, Overhead};
use jpegdna::oligo::{self, DEFAULT_PAYLOAD_LEN};
use jpegdna::paircode::{capacity, codeword, CATEGORY_TABLE, MAX_LENGTH};
use jpegdna::pipeline::DecodeOutcome;
use jpegdna::{ImageGray8, NucleotideSequence};

#[derive(Parser)]
#[command(name = "jpegdna", version, about = "Image coding for DNA storage")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a PGM image as a JPEG-DNA strand.
    Encode(EncodeArgs),
    /// Decode a strand or a set of oligos back to a PGM image.
    Decode(DecodeArgs),
    /// Encode a PGM image as binary JPEG-style bytes transcoded at 5 nt/byte.
    Transcode(EncodeArgs),
    /// Encode a PGM image with the fixed-length wavelet coder.
    FixedlenEncode(FixedArgs),
    /// Decode a fixed-length strand or its oligos.
    FixedlenDecode(DecodeArgs),
    /// Split strands into indexed oligos or put them back together.
    #[command(subcommand)]
    Oligos(OligoCommand),
    /// Pass sequences through the seeded error channel.
    Corrupt(CorruptArgs),
    /// PSNR between two PGM images.
    Psnr { a: PathBuf, b: PathBuf },
    /// Rate-distortion sweep written as CSV.
    Sweep(SweepArgs),
    /// Single-deletion experiment at a matched clean PSNR.
    Robustness(RobustnessArgs),
    /// Print the category table or PAIRCODE codewords.
    Codebook(CodebookArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Fasta,
    Txt,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::Fasta => Format::Fasta,
            FormatArg::Txt => Format::Text,
        }
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Output sequence file.
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value = "fasta")]
    format: FormatArg,
    /// Write oligos with this many payload nucleotides instead of one strand.
    #[arg(long)]
    payload_len: Option<usize>,
}

#[derive(Args)]
struct EncodeArgs {
    input: PathBuf,
    #[arg(short, long, default_value_t = 75)]
    quality: u8,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct FixedArgs {
    input: PathBuf,
    /// Base quantizer step of the LL band; detail bands use multiples of it.
    #[arg(long, default_value_t = 8.0)]
    step: f64,
    #[arg(long, default_value_t = DEFAULT_LEVELS)]
    levels: u8,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct DecodeArgs {
    input: PathBuf,
    /// Output PGM image.
    #[arg(short, long)]
    output: PathBuf,
    /// Payload length for oligo input; inferred when omitted.
    #[arg(long)]
    payload_len: Option<usize>,
}

#[derive(Subcommand)]
enum OligoCommand {
    /// Fragment every strand of a file into oligos.
    Pack {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = DEFAULT_PAYLOAD_LEN)]
        payload_len: usize,
        #[arg(long, value_enum, default_value = "fasta")]
        format: FormatArg,
    },
    /// Reassemble oligos into one strand.
    Unpack {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        payload_len: Option<usize>,
        #[arg(long, value_enum, default_value = "fasta")]
        format: FormatArg,
    },
}

#[derive(Args)]
struct CorruptArgs {
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    sub_rate: f64,
    #[arg(long, default_value_t = 0.0)]
    ins_rate: f64,
    #[arg(long, default_value_t = 0.0)]
    del_rate: f64,
    /// Delete these positions instead of drawing random events.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["sub_rate", "ins_rate", "del_rate", "single_deletion"])]
    delete: Vec<usize>,
    /// Delete one seeded random position per record.
    #[arg(long, conflicts_with_all = ["sub_rate", "ins_rate", "del_rate"])]
    single_deletion: bool,
    /// CSV log of the applied events.
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "fasta")]
    format: FormatArg,
}

#[derive(Args)]
struct SweepArgs {
    input: PathBuf,
    /// Methods to run; all three by default.
    #[arg(long, value_delimiter = ',')]
    method: Vec<String>,
    /// Qualities (or fixed-length steps); the full grid by default.
    #[arg(long, value_delimiter = ',')]
    params: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_PAYLOAD_LEN)]
    payload_len: usize,
    /// Count the bare strand only, without oligo headers.
    #[arg(long)]
    exclude_overhead: bool,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct RobustnessArgs {
    input: PathBuf,
    #[arg(long, value_delimiter = ',')]
    method: Vec<String>,
    #[arg(long, default_value_t = 38.5)]
    target_psnr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_PAYLOAD_LEN)]
    payload_len: usize,
    /// Directory for `<method>_clean.pgm` and `<method>_corrupt.pgm`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct CodebookArgs {
    /// List codewords of this length instead of the category table.
    #[arg(long)]
    length: Option<usize>,
    /// Maximum number of codewords listed.
    #[arg(long, default_value_t = 100)]
    limit: u64,
}

enum Failure {
    Other(String),
    Format(String),
    /// Output was written but the input was damaged.
    Corrupt(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Other(_) => 1,
            Failure::Format(_) => 2,
            Failure::Corrupt(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Other(m) | Failure::Format(m) | Failure::Corrupt(m) => m,
        }
    }
}

type Res<T = ()> = Result<T, Failure>;

fn other(e: impl ToString) -> Failure {
    Failure::Other(e.to_string())
}

fn format_err(e: impl ToString) -> Failure {
    Failure::Format(e.to_string())
}

/// Writes through a temporary file in the same directory and renames it.
fn write_atomic(path: &Path, data: &[u8]) -> Res {
    let name = path
        .file_name()
        .ok_or_else(|| other(format!("{}: not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(
        ".{}.{}.tmp",
        name.to_string_lossy(),
        std::process::id()
    ));
    fs::write(&tmp, data)
        .and_then(|_| fs::rename(&tmp, path))
        .map_err(|e| {
            let _ = fs::remove_file(&tmp);
            other(format!("{}: {e}", path.display()))
        })
}

fn read_image(path: &Path) -> Res<ImageGray8> {
    ImageGray8::read_pgm(path).map_err(|e| match e {
        jpegdna::image::ImageError::Io(e) => other(format!("{}: {e}", path.display())),
        e => format_err(format!("{}: {e}", path.display())),
    })
}

fn write_image(path: &Path, img: &ImageGray8) -> Res {
    write_atomic(path, &img.to_pgm_bytes().map_err(other)?)
}

fn read_records(path: &Path) -> Res<Vec<Record>> {
    let bytes = fs::read(path).map_err(|e| other(format!("{}: {e}", path.display())))?;
    let text = String::from_utf8(bytes)
        .map_err(|_| format_err(format!("{}: not a text sequence file", path.display())))?;
    parse_records(&text).map_err(|e| format_err(format!("{}: {e}", path.display())))
}

fn write_sequences(path: &Path, records: &[Record], format: FormatArg) -> Res {
    write_atomic(path, write_records(records, format.into()).as_bytes())
}

fn oligo_records(strand: &NucleotideSequence, payload_len: usize) -> Res<Vec<Record>> {
    Ok(oligo::fragment(strand, payload_len)
        .map_err(other)?
        .iter()
        .map(|o| Record::new(o.id(), o.to_sequence()))
        .collect())
}

fn write_strand(strand: &NucleotideSequence, id: &str, out: &OutputArgs) -> Res {
    let records = match out.payload_len {
        Some(l) => oligo_records(strand, l)?,
        None => vec![Record::new(id, strand.clone())],
    };
    write_sequences(&out.output, &records, out.format)
}

/// A strand read from a file, with any reassembly damage noted.
struct Input {
    strand: NucleotideSequence,
    damage: Vec<String>,
}

fn looks_like_oligos(records: &[Record]) -> bool {
    records.len() > 1 || records[0].id.starts_with("oligo_")
}

fn reassemble_records(records: &[Record], payload_len: Option<usize>) -> Res<Input> {
    let (oligos, dropped) = oligo::parse_all(&records.iter().map(|r| &r.seq).collect::<Vec<_>>());
    let r = oligo::reassemble(&oligos, payload_len).map_err(format_err)?;
    let mut damage = Vec::new();
    if !dropped.is_empty() {
        damage.push(format!("{} unreadable oligos", dropped.len()));
    }
    if !r.missing.is_empty() {
        damage.push(format!("missing oligos {:?}", r.missing));
    }
    if !r.resized.is_empty() {
        damage.push(format!("oligos of wrong length {:?}", r.resized));
    }
    if !r.extraneous.is_empty() {
        damage.push(format!("oligos beyond the strand {:?}", r.extraneous));
    }
    Ok(Input {
        strand: r.strand,
        damage,
    })
}

fn read_strand(path: &Path, payload_len: Option<usize>) -> Res<Input> {
    let records = read_records(path)?;
    if looks_like_oligos(&records) {
        reassemble_records(&records, payload_len)
    } else {
        Ok(Input {
            strand: records.into_iter().next().unwrap().seq,
            damage: Vec::new(),
        })
    }
}

fn outcome_damage(o: &DecodeOutcome, damage: &mut Vec<String>) {
    if let Some(f) = o.failure {
        damage.push(format!(
            "decoding stopped in block {} at payload offset {} ({:?}); later blocks are mid-gray",
            f.block, f.position, f.kind
        ));
    } else if o.trailing > 0 {
        damage.push(format!("{} unused payload symbols", o.trailing));
    }
}

fn decode_cmd(args: &DecodeArgs, forced: Option<Method>) -> Res {
    let Input { strand, mut damage } = read_strand(&args.input, args.payload_len)?;
    if strand.is_empty() {
        return Err(format_err("empty strand"));
    }
    let method = forced
        .or_else(|| detect_method(&strand))
        .ok_or_else(|| format_err("unrecognised stream header"))?;
    let image = match method {
        Method::JpegDna => {
            let d = jpegdna::jpegdna::decode_strand(&strand).map_err(format_err)?;
            outcome_damage(&d.outcome, &mut damage);
            d.image
        }
        Method::Transcode => {
            let d = decode_transcoded(&strand).map_err(format_err)?;
            outcome_damage(&d.outcome, &mut damage);
            d.image
        }
        Method::FixedLen => {
            let d = fixedlen::decode_strand(&strand).map_err(format_err)?;
            if !d.decode.malformed.is_empty() || d.decode.missing > 0 {
                damage.push(format!(
                    "{} malformed and {} missing coefficient words read as 0",
                    d.decode.malformed.len(),
                    d.decode.missing
                ));
            }
            d.image
        }
    };
    write_image(&args.output, &image)?;
    eprintln!(
        "{method}: {}x{} image from {} nt",
        image.width(),
        image.height(),
        strand.len()
    );
    if damage.is_empty() {
        Ok(())
    } else {
        Err(Failure::Corrupt(damage.join("; ")))
    }
}

fn encode_cmd(input: &Path, method: Method, param: f64, out: &OutputArgs) -> Res {
    let img = read_image(input)?;
    let enc = encode(&img, method, param).map_err(other)?;
    write_strand(&enc.strand, method.name(), out)?;
    let rate = rate_report(
        &enc.strand,
        img.width(),
        img.height(),
        out.payload_len
            .map_or(Overhead::Exclude, |payload_len| Overhead::Oligos {
                payload_len,
            }),
    )
    .map_err(other)?;
    eprintln!(
        "{method}: {} nt ({} header), {:.4} nt/pixel, {:.4} bits/nt, GC {:.3}",
        rate.total_nt, enc.header_nt, rate.nt_per_pixel, rate.coding_potential, rate.gc_fraction
    );
    Ok(())
}

fn fixed_encode_cmd(args: &FixedArgs) -> Res {
    if args.levels == DEFAULT_LEVELS {
        return encode_cmd(&args.input, Method::FixedLen, args.step, &args.out);
    }
    let img = read_image(&args.input)?;
    let s = fixedlen::encode_strand(&img, args.levels, args.step).map_err(other)?;
    write_strand(&s.to_sequence(), Method::FixedLen.name(), &args.out)?;
    eprintln!(
        "fixedlen: {} nt ({} header), {} clamped",
        s.total_nt(),
        s.header_nt.len(),
        s.clamped
    );
    Ok(())
}

fn oligos_cmd(cmd: &OligoCommand) -> Res {
    match cmd {
        OligoCommand::Pack {
            input,
            output,
            payload_len,
            format,
        } => {
            let mut out = Vec::new();
            for r in read_records(input)? {
                out.extend(oligo_records(&r.seq, *payload_len)?);
            }
            eprintln!("{} oligos", out.len());
            write_sequences(output, &out, *format)
        }
        OligoCommand::Unpack {
            input,
            output,
            payload_len,
            format,
        } => {
            let inp = reassemble_records(&read_records(input)?, *payload_len)?;
            write_sequences(output, &[Record::new("strand", inp.strand)], *format)?;
            if inp.damage.is_empty() {
                Ok(())
            } else {
                Err(Failure::Corrupt(inp.damage.join("; ")))
            }
        }
    }
}

fn corrupt_cmd(args: &CorruptArgs) -> Res {
    let records = read_records(&args.input)?;
    let single = records.len() == 1;
    let mut out = Vec::with_capacity(records.len());
    let mut logs = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        let seed = if single {
            args.seed
        } else {
            oligo_seed(args.seed, i as u64)
        };
        let spec = if args.single_deletion {
            if r.seq.is_empty() {
                ChannelSpec::clean()
            } else {
                let (_, pos) = single_random_deletion(&r.seq, seed);
                ChannelSpec::Explicit(vec![ExplicitEvent::deletion(pos)])
            }
        } else if !args.delete.is_empty() {
            let mut pos = args.delete.clone();
            pos.sort_unstable();
            pos.dedup();
            ChannelSpec::Explicit(pos.into_iter().map(ExplicitEvent::deletion).collect())
        } else {
            ChannelSpec::Rates {
                sub_rate: args.sub_rate,
                ins_rate: args.ins_rate,
                del_rate: args.del_rate,
                seed,
            }
        };
        let (seq, log) = corrupt(&r.seq, &spec).map_err(other)?;
        out.push(Record::new(r.id.clone(), seq));
        logs.push(log);
    }
    write_sequences(&args.output, &out, args.format)?;
    let total: usize = logs.iter().map(EventLog::len).sum();
    eprintln!("{total} events over {} records", records.len());
    if let Some(path) = &args.log {
        let mut buf = Vec::new();
        if single {
            logs[0].write_csv(&mut buf).map_err(other)?;
        } else {
            let tagged: Vec<(&str, &EventLog)> =
                records.iter().map(|r| r.id.as_str()).zip(&logs).collect();
            write_logs_csv(&tagged, &mut buf).map_err(other)?;
        }
        write_atomic(path, &buf)?;
    }
    Ok(())
}

fn methods(names: &[String]) -> Res<Vec<Method>> {
    if names.is_empty() {
        return Ok(Method::ALL.to_vec());
    }
    names.iter().map(|n| n.parse().map_err(other)).collect()
}

fn emit_csv(records: &[ExperimentRecord], path: Option<&Path>) -> Res {
    let mut buf = Vec::new();
    write_csv(records, &mut buf).map_err(other)?;
    match path {
        Some(p) => write_atomic(p, &buf),
        None => io::stdout().write_all(&buf).map_err(other),
    }
}

fn sweep_cmd(args: &SweepArgs) -> Res {
    let img = read_image(&args.input)?;
    let overhead = if args.exclude_overhead {
        Overhead::Exclude
    } else {
        Overhead::Oligos {
            payload_len: args.payload_len,
        }
    };
    let mut records = Vec::new();
    for m in methods(&args.method)? {
        let params = if args.params.is_empty() {
            m.grid()
        } else {
            args.params.clone()
        };
        records.extend(sweep(&img, m, &params, overhead).map_err(other)?);
    }
    emit_csv(&records, args.csv.as_deref())
}

fn robustness_cmd(args: &RobustnessArgs) -> Res {
    let img = read_image(&args.input)?;
    let opts = RobustnessOptions {
        seed: Some(args.seed),
        payload_len: args.payload_len,
    };
    if let Some(dir) = &args.out_dir {
        fs::create_dir_all(dir).map_err(other)?;
    }
    let mut records = Vec::new();
    for m in methods(&args.method)? {
        let (found, r) = robustness_experiment(&img, m, args.target_psnr, opts).map_err(other)?;
        if (found.psnr_db - args.target_psnr).abs() > 1.0 {
            eprintln!(
                "{m}: target {} dB not reached, closest is {} dB",
                args.target_psnr,
                format_db(found.psnr_db)
            );
        }
        println!(
            "{m}\t{} {}\tclean {} dB\tafter deletion {} dB\t{}",
            m.param_name(),
            r.param,
            format_db(r.clean_psnr),
            format_db(r.corrupt_psnr),
            r.record.corruption.as_deref().unwrap_or("")
        );
        if let Some(dir) = &args.out_dir {
            write_image(&dir.join(format!("{m}_clean.pgm")), &r.clean.image)?;
            write_image(&dir.join(format!("{m}_corrupt.pgm")), &r.corrupt.image)?;
        }
        records.push(r.record);
    }
    if let Some(p) = &args.csv {
        emit_csv(&records, Some(p))?;
    }
    Ok(())
}

fn codebook_cmd(args: &CodebookArgs) -> Res {
    let mut out = String::new();
    match args.length {
        None => {
            out.push_str("category\tmagnitude_lo\tmagnitude_hi\tvalues\tcodewords\n");
            for e in CATEGORY_TABLE {
                let cap = if e.category == 0 {
                    1
                } else {
                    capacity(e.category as usize).map_err(other)?
                };
                out.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{cap}\n",
                    e.category,
                    e.lo,
                    e.hi,
                    e.size()
                ));
            }
        }
        Some(len) => {
            let cap =
                capacity(len).map_err(|e| other(format!("{e} (lengths 2..={MAX_LENGTH})")))?;
            for i in 0..cap.min(args.limit) {
                let w = codeword(len, i).map_err(other)?;
                out.push_str(&format!("{i}\t{}\n", w.symbols));
            }
        }
    }
    io::stdout().write_all(out.as_bytes()).map_err(other)
}

fn run(cli: Cli) -> Res {
    match cli.command {
        Command::Encode(a) => encode_cmd(&a.input, Method::JpegDna, a.quality as f64, &a.out),
        Command::Transcode(a) => encode_cmd(&a.input, Method::Transcode, a.quality as f64, &a.out),
        Command::Decode(a) => decode_cmd(&a, None),
        Command::FixedlenEncode(a) => fixed_encode_cmd(&a),
        Command::FixedlenDecode(a) => decode_cmd(&a, Some(Method::FixedLen)),
        Command::Oligos(c) => oligos_cmd(&c),
        Command::Corrupt(a) => corrupt_cmd(&a),
        Command::Psnr { a, b } => {
            let (a, b) = (read_image(&a)?, read_image(&b)?);
            if (a.width(), a.height()) != (b.width(), b.height()) {
                return Err(other("images differ in size"));
            }
            println!("{}", format_db(psnr(&a, &b)));
            Ok(())
        }
        Command::Sweep(a) => sweep_cmd(&a),
        Command::Robustness(a) => robustness_cmd(&a),
        Command::Codebook(a) => codebook_cmd(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("jpegdna: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
