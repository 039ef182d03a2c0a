//! `btbd` command-line front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use btbd::analysis::{bd_metrics, parse_rd_csv, sequence_stats};
use btbd::codec::{decode_sequence, encode_sequence, EncoderConfig, FrameType, StreamHeader};
use btbd::frame::{load_pgm, load_raw, psnr_region, store_pgm, store_raw, Sequence};
use btbd::synth::{calibrate_noise, generate, temporal_zero_proportion, SceneSpec};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "btbd", version, about = "Lossless and near-lossless depth-map sequence codec")]
struct Cli {
    /// Worker threads for encoding (output bytes do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Raw,
    Pgm,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a raw or PGM depth sequence.
    Encode {
        #[arg(long = "in")]
        input: PathBuf,
        /// Input format; inferred from the extension when omitted.
        #[arg(long)]
        format: Option<Format>,
        #[arg(long)]
        width: Option<usize>,
        #[arg(long)]
        height: Option<usize>,
        /// Frame count of raw input; inferred from the file size when omitted.
        #[arg(long)]
        frames: Option<usize>,
        /// Odd quantisation step in 1..=15; 1 is lossless.
        #[arg(long, default_value_t = 1)]
        q: u32,
        #[arg(long, default_value_t = 32)]
        search_width: u32,
        #[arg(long, default_value_t = 8)]
        gop: u32,
        #[arg(long)]
        out: PathBuf,
        /// Print per-frame sizes and chosen modes.
        #[arg(long)]
        report: bool,
    },
    /// Decode a stream to raw or PGM.
    Decode {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        format: Option<Format>,
        /// Print per-frame bpp (and PSNR when a reference is given).
        #[arg(long)]
        report: bool,
        /// Original sequence for PSNR in the report.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Rate and distortion of a decoded sequence.
    Stats {
        #[arg(long)]
        original: PathBuf,
        #[arg(long)]
        decoded: PathBuf,
        /// Coded size: a bit count or the path of the coded stream.
        #[arg(long)]
        bits: String,
        #[arg(long)]
        format: Option<Format>,
        #[arg(long)]
        width: Option<usize>,
        #[arg(long)]
        height: Option<usize>,
    },
    /// Bjøntegaard deltas between two `bpp,psnr` CSV curves.
    Bd {
        #[arg(long)]
        curve_a: PathBuf,
        #[arg(long)]
        curve_b: PathBuf,
    },
    /// Generate a synthetic sequence from a scene file.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        format: Option<Format>,
        /// Tune the noise density to this temporal zero proportion.
        #[arg(long)]
        calibrate: Option<f64>,
    },
}

enum Failure {
    Usage(String),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

type Outcome = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn format_of(path: &Path, explicit: Option<Format>) -> Format {
    explicit.unwrap_or_else(|| {
        let is_pgm = path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
        if is_pgm {
            Format::Pgm
        } else {
            Format::Raw
        }
    })
}

fn read(path: &Path) -> anyhow::Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn load_sequence(path: &Path, format: Format, width: Option<usize>, height: Option<usize>, frames: Option<usize>) -> Result<Sequence, Failure> {
    let bytes = read(path)?;
    let seq = match format {
        Format::Pgm => load_pgm(&bytes),
        Format::Raw => {
            let (Some(w), Some(h)) = (width, height) else {
                return Err(usage("raw input needs --width and --height"));
            };
            if w == 0 || h == 0 {
                return Err(usage("--width and --height must be positive"));
            }
            let n = match frames {
                Some(n) => n,
                None if bytes.len() % (w * h) == 0 => bytes.len() / (w * h),
                None => return Err(Failure::Data(anyhow!("raw size {} is not a multiple of {w}x{h}", bytes.len()))),
            };
            load_raw(&bytes, w, h, n)
        }
    };
    seq.with_context(|| format!("loading {}", path.display())).map_err(Failure::Data)
}

fn store_sequence(path: &Path, format: Format, seq: &Sequence) -> anyhow::Result<()> {
    let bytes = match format {
        Format::Raw => store_raw(seq),
        Format::Pgm => store_pgm(seq),
    };
    write(path, &bytes)
}

fn run(cli: Cli) -> Outcome {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Data(anyhow!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Encode {
            input,
            format,
            width,
            height,
            frames,
            q,
            search_width,
            gop,
            out,
            report,
        } => {
            if q % 2 == 0 {
                return Err(usage("q must be odd"));
            }
            if !(1..=15).contains(&q) {
                return Err(usage("q must be in 1..=15"));
            }
            if !(1..=255).contains(&search_width) || !(1..=255).contains(&gop) {
                return Err(usage("--search-width and --gop must be in 1..=255"));
            }
            let seq = load_sequence(&input, format_of(&input, format), width, height, frames)?;
            let config = EncoderConfig::new(q)
                .map_err(|e| usage(e.to_string()))?
                .with_search_width(search_width)
                .with_gop(gop);
            let coded = encode_sequence(&seq, &config).context("encoding")?;
            write(&out, &coded.bytes)?;
            if report {
                let px = (seq.original_width * seq.original_height) as f64;
                for f in &coded.report.frames {
                    let modes: Vec<String> = f
                        .maps
                        .iter()
                        .map(|m| format!("{}={}", m.kind.name(), m.mode.map_or("empty", |m| m.name())))
                        .collect();
                    println!(
                        "frame {:>4} {} bits {:>9} bpp {:.4} {}",
                        f.index,
                        if f.frame_type == FrameType::Intra { "I" } else { "P" },
                        f.bits,
                        f.bits as f64 / px,
                        modes.join(" ")
                    );
                }
            }
            println!(
                "encoded {} frames, {} bytes, {:.4} bpp, cr {:.2}",
                seq.len(),
                coded.bytes.len(),
                coded.report.bpp(),
                8.0 / coded.report.bpp()
            );
            Ok(())
        }
        Command::Decode {
            input,
            out,
            format,
            report,
            reference,
        } => {
            if reference.is_some() && !report {
                return Err(usage("--reference requires --report"));
            }
            let bytes = read(&input)?;
            let decoded = decode_sequence(&bytes).with_context(|| format!("decoding {}", input.display()))?;
            store_sequence(&out, format_of(&out, format), &decoded.sequence)?;
            if report {
                let h = decoded.header;
                let (w, hgt) = (usize::from(h.original_width), usize::from(h.original_height));
                let original = match &reference {
                    Some(p) => Some(load_sequence(p, format_of(p, None), Some(w), Some(hgt), None)?),
                    None => None,
                };
                if let Some(o) = &original {
                    if o.len() != decoded.sequence.len() || o.original_width != w || o.original_height != hgt {
                        return Err(Failure::Data(anyhow!("reference does not match the decoded sequence")));
                    }
                }
                for (t, info) in decoded.frames.iter().enumerate() {
                    let bpp = info.bits as f64 / (w * hgt) as f64;
                    let mut line = format!("frame {t:>4} bpp {bpp:.4}");
                    if let Some(o) = &original {
                        let p = psnr_region(&o.frames[t], &decoded.sequence.frames[t], w, hgt).context("PSNR")?;
                        line.push_str(&format!(" psnr {p:.2}"));
                    }
                    println!("{line}");
                }
            }
            Ok(())
        }
        Command::Stats {
            original,
            decoded,
            bits,
            format,
            width,
            height,
        } => {
            let (coded_bits, stream) = match bits.parse::<usize>() {
                Ok(n) => (n, None),
                Err(_) => {
                    let p = PathBuf::from(&bits);
                    if !p.exists() {
                        return Err(usage("--bits must be a bit count or a stream file"));
                    }
                    let bytes = read(&p)?;
                    (bytes.len() * 8, Some(bytes))
                }
            };
            let header = match &stream {
                Some(b) => Some(StreamHeader::parse(b).context("stream header")?),
                None => None,
            };
            let w = width.or(header.map(|h| usize::from(h.original_width)));
            let h = height.or(header.map(|h| usize::from(h.original_height)));
            let a = load_sequence(&original, format_of(&original, format), w, h, None)?;
            let b = load_sequence(&decoded, format_of(&decoded, format), w, h, None)?;
            let mut stats = sequence_stats(&a, &b, coded_bits).context("statistics")?;
            if let Some(bytes) = &stream {
                stats.zero_proportion = decode_sequence(bytes).context("decoding stream")?.zero_proportion();
            }
            println!("bpp\tcr\tpsnr\tp");
            let p = stats.zero_proportion.map_or("-".to_string(), |p| format!("{p:.4}"));
            println!("{:.4}\t{:.2}\t{:.2}\t{p}", stats.bpp, stats.compression_ratio, stats.psnr);
            Ok(())
        }
        Command::Bd { curve_a, curve_b } => {
            let parse = |p: &Path| -> anyhow::Result<_> {
                let text = String::from_utf8(read(p)?).context("CSV is not UTF-8")?;
                parse_rd_csv(&text).with_context(|| format!("parsing {}", p.display()))
            };
            let m = bd_metrics(&parse(&curve_a)?, &parse(&curve_b)?).context("BD metrics")?;
            println!("BD-BR {:.3} %", m.bd_br);
            println!("BD-PSNR {:.3} dB", m.bd_psnr);
            Ok(())
        }
        Command::Synth {
            spec,
            out,
            format,
            calibrate,
        } => {
            if let Some(t) = calibrate {
                if !(0.0..=1.0).contains(&t) {
                    return Err(usage("--calibrate must be in [0, 1]"));
                }
            }
            let text = String::from_utf8(read(&spec)?).context("scene file is not UTF-8")?;
            let mut scene = SceneSpec::parse(&text).context("scene file")?;
            if let Some(t) = calibrate {
                scene = calibrate_noise(&scene, t, 0.02).context("calibration")?;
            }
            let seq = generate(&scene).context("generation")?;
            store_sequence(&out, format_of(&out, format), &seq)?;
            println!(
                "{} frames {}x{}, noise density {:.5}, temporal zero proportion {:.4}",
                seq.len(),
                seq.original_width,
                seq.original_height,
                scene.noise_density,
                temporal_zero_proportion(&seq)
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
