use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rose::baselines::{encode_block, encode_rose_detailed, CodingConfig, MethodKind};
use rose::harness::{
    bd_rate, extract_rate_samples, generate, read_mask_pgm, read_pgm, read_stats, run_frame, synth,
    write_mask_pgm, write_pgm, write_stats, FrameJob, FrameStats, RdPoint, SynthConfig,
};
use rose::rate::{
    fit_params, mean_relative_error, read_samples, write_samples, RateModelKind, RateModelParams,
};
use rose::transform::{forward_2d, TransformType};
use rose::{Block, Error, Mask, Result};

#[derive(Parser)]
#[command(
    name = "rose",
    version,
    about = "Occupancy-aware residual coding experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Code a frame with each method and QP, write per-frame statistics as CSV
    Run {
        #[arg(long)]
        frame: PathBuf,
        #[arg(long)]
        mask: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [22, 27, 32, 37])]
        qp: Vec<i64>,
        #[arg(long, value_delimiter = ',', default_values_t = MethodKind::ALL.map(|m| m.to_string()))]
        method: Vec<String>,
        #[arg(long, default_value_t = 16)]
        block_size: usize,
        /// JSON parameter file; replaces the default model of its kind
        #[arg(long)]
        rate_model_params: Vec<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV, stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write rate-model training samples here
        #[arg(long)]
        samples_out: Option<PathBuf>,
    },
    /// Generate a synthetic frame and blob occupancy mask as PGM files
    Gen {
        #[arg(long, default_value_t = 256)]
        width: usize,
        #[arg(long, default_value_t = 256)]
        height: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 16)]
        blob_count: usize,
        #[arg(long, default_value_t = 2.0)]
        noise: f64,
        #[arg(long, default_value = "frame.pgm")]
        frame_out: PathBuf,
        #[arg(long, default_value = "mask.pgm")]
        mask_out: PathBuf,
    },
    /// Fit rate model parameters to a sample file
    Fit {
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        model: RateModelKind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// BD-rate of one RD curve against another
    Bdrate {
        #[arg(long)]
        anchor: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Method to pick from the anchor file when it holds several
        #[arg(long)]
        anchor_method: Option<String>,
        #[arg(long)]
        test_method: Option<String>,
    },
    /// Code a single residual block and print its coefficients and costs
    Block {
        /// CSV with one row of samples per block row
        #[arg(long)]
        input: PathBuf,
        /// CSV of occupancy weights of the same shape; full when omitted
        #[arg(long)]
        mask: Option<PathBuf>,
        #[arg(long, default_value_t = 32)]
        qp: i64,
    },
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn parse_methods(names: &[String]) -> Result<Vec<MethodKind>> {
    names.iter().map(|n| n.parse()).collect()
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    frame: &Path,
    mask: &Path,
    qps: &[i64],
    methods: &[String],
    block_size: usize,
    params: &[PathBuf],
    seed: u64,
    out: Option<&Path>,
    samples_out: Option<&Path>,
) -> Result<()> {
    let name = frame
        .file_stem()
        .map_or_else(|| "frame".to_string(), |s| s.to_string_lossy().into_owned());
    let mut job = FrameJob::new(name, read_pgm(frame)?, read_mask_pgm(mask)?, block_size)
        .with_qps(qps)
        .with_methods(&parse_methods(methods)?);
    job.seed = seed;
    for p in params {
        job = job.with_model(RateModelParams::load(p)?);
    }
    let stats: Vec<FrameStats> = run_frame(&job)?.into_iter().map(|r| r.stats).collect();
    write_stats(output(out)?, &stats)?;

    let points = |m: MethodKind| -> Vec<RdPoint> {
        stats
            .iter()
            .filter(|s| s.method == m.to_string())
            .map(FrameStats::rd_point)
            .collect()
    };
    let anchor = points(MethodKind::Ref);
    for &m in job.methods.iter().filter(|&&m| m != MethodKind::Ref) {
        if let Ok(r) = bd_rate(&anchor, &points(m)) {
            eprintln!("BD-rate {m} vs REF: {r:+.3} %");
        }
    }
    if let Some(p) = samples_out {
        let samples = extract_rate_samples(&job)?;
        write_samples(File::create(p)?, &samples)?;
        eprintln!("wrote {} samples to {}", samples.len(), p.display());
    }
    Ok(())
}

fn cmd_gen(cfg: &SynthConfig, frame_out: &Path, mask_out: &Path) -> Result<()> {
    let (frame, mask) = generate(cfg)?;
    write_pgm(frame_out, &frame)?;
    write_mask_pgm(mask_out, &mask)?;
    eprintln!(
        "{}x{} frame, occupancy {:.1} %, written to {} and {}",
        cfg.width,
        cfg.height,
        100.0 * synth::occupancy(&mask),
        frame_out.display(),
        mask_out.display()
    );
    Ok(())
}

fn cmd_fit(samples: &Path, model: RateModelKind, out: Option<&Path>) -> Result<()> {
    let samples = read_samples(samples)?;
    let params = fit_params(&samples, model)?;
    let eps = mean_relative_error(&samples, &params)?;
    eprintln!("{} samples, mean relative error {eps:.4}", samples.len());
    match out {
        Some(p) => params.save(p)?,
        None => println!("{}", serde_json::to_string_pretty(&params)?),
    }
    Ok(())
}

fn curve_from(path: &Path, method: Option<&str>) -> Result<Vec<RdPoint>> {
    let stats = read_stats(path)?;
    let method = match method {
        Some(m) => m.parse::<MethodKind>()?.to_string(),
        None => {
            let first = stats
                .first()
                .ok_or_else(|| Error::Curve(format!("{} holds no rows", path.display())))?;
            if stats.iter().any(|s| s.method != first.method) {
                return Err(Error::Curve(format!(
                    "{} holds several methods; pick one",
                    path.display()
                )));
            }
            first.method.clone()
        }
    };
    Ok(stats
        .iter()
        .filter(|s| s.method == method)
        .map(FrameStats::rd_point)
        .collect())
}

fn read_matrix(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        rows.push(
            rec.iter()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|e| Error::InvalidParameter(format!("`{t}`: {e}")))
                })
                .collect::<Result<Vec<_>>>()?,
        );
    }
    Ok(rows)
}

fn read_block(path: &Path) -> Result<Block> {
    let rows = read_matrix(path)?;
    let b = rows.len();
    if rows.iter().any(|r| r.len() != b) {
        return Err(Error::InvalidParameter(format!(
            "{} is not square",
            path.display()
        )));
    }
    Block::from_vec(b, rows.concat())
}

fn print_grid(label: &str, b: usize, values: &[f64]) {
    println!("{label}:");
    for row in values.chunks(b) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:9.3}")).collect();
        println!("  {}", line.join(" "));
    }
}

fn cmd_block(input: &Path, mask: Option<&Path>, qp: i64) -> Result<()> {
    let s = read_block(input)?;
    let b = s.size();
    let mask = match mask {
        Some(p) => {
            let rows = read_matrix(p)?;
            Mask::weighted(b, rows.len(), rows.concat())?
        }
        None => Mask::square_full(b),
    };
    let transform = TransformType::dct(b)?;
    let cfg = CodingConfig::from_qp(transform, qp)?;
    println!(
        "{transform}, QP {qp}, qstep {:.4}, lambda {:.4}",
        cfg.quant.qstep,
        cfg.lambda()
    );
    print_grid("S", b, forward_2d(&s, transform.matrix())?.as_slice());
    for kind in [MethodKind::RoseL, MethodKind::RoseS] {
        let (_, r) = encode_rose_detailed(&s, &mask, &cfg, kind)?;
        print_grid(
            &format!("S~ ({kind}, N = {})", r.budget),
            b,
            r.coeffs.as_slice(),
        );
    }
    println!(
        "{:<6} {:>8} {:>12} {:>12} {:>10} {:>12}",
        "method", "levels", "masked_sse", "full_sse", "bits", "cost"
    );
    for m in MethodKind::ALL {
        let o = encode_block(&s, &mask, &cfg, m)?;
        println!(
            "{:<6} {:>8} {:>12.3} {:>12.3} {:>10.3} {:>12.3}",
            m.to_string(),
            o.levels.nonzero_count(),
            o.masked_distortion,
            o.full_distortion,
            o.estimated_bits,
            o.rd_cost
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            frame,
            mask,
            qp,
            method,
            block_size,
            rate_model_params,
            seed,
            out,
            samples_out,
        } => cmd_run(
            frame,
            mask,
            qp,
            method,
            *block_size,
            rate_model_params,
            *seed,
            out.as_deref(),
            samples_out.as_deref(),
        ),
        Command::Gen {
            width,
            height,
            seed,
            blob_count,
            noise,
            frame_out,
            mask_out,
        } => {
            let cfg = SynthConfig {
                noise_sigma: *noise,
                ..SynthConfig::new(*width, *height, *seed, *blob_count)
            };
            cmd_gen(&cfg, frame_out, mask_out)
        }
        Command::Fit {
            samples,
            model,
            out,
        } => cmd_fit(samples, *model, out.as_deref()),
        Command::Bdrate {
            anchor,
            test,
            anchor_method,
            test_method,
        } => (|| {
            let a = curve_from(anchor, anchor_method.as_deref())?;
            let t = curve_from(test, test_method.as_deref())?;
            println!("{:.4} %", bd_rate(&a, &t)?);
            Ok(())
        })(),
        Command::Block { input, mask, qp } => cmd_block(input, mask.as_deref(), *qp),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
