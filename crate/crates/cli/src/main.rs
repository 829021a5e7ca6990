//! `procdur` command-line interface.
//!
//! Every subcommand prints its fully resolved configuration as one JSON line
//! on stderr before doing any work. Failures end with a single JSON line
//! `{"error": kind, "message": ...}` on stderr and exit code 1 (2 for usage
//! errors).

mod error;

use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use procdur::datamodel::{
    load_dataset, parse_frame, parse_header, ChannelSet, ProcedureRecord, ProcedureType,
};
use procdur::estimator::{
    gradient_check_suite, load_checkpoint, open_session, save_checkpoint, train_with_progress,
    FusionConfig, Preset, Variant,
};
use procdur::evalbench::run_eval_with_log;
use procdur::synthgen::{generate, save_synthetic, SynthSpec};

use error::CliError;

/// Environment variable holding the default seed.
const SEED_ENV: &str = "PROCDUR_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "procdur",
    version,
    about = "Online procedure-duration prediction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset (plus trace.json) from a spec file.
    Gen {
        /// JSON synthetic spec; omitted fields take their defaults.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train one variant on a dataset and write a checkpoint.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        variant: Variant,
        #[arg(long, default_value = "desk")]
        preset: Preset,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, env = SEED_ENV, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Stream predictions, one line per frame: i, y, n_hat, remaining.
    Predict {
        #[arg(long)]
        ckpt: PathBuf,
        /// Procedure file, or `-` for standard input. The header line is
        /// optional; without it channels are inferred from the first frame.
        #[arg(long, default_value = "-")]
        input: String,
        /// Procedure type 1..=5; overrides the header.
        #[arg(long)]
        ptype: Option<u8>,
    },
    /// Four-fold cross-validated comparison against the baselines.
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "v,t,d,td,vt,vtd")]
        variants: Vec<Variant>,
        #[arg(long, default_value = "desk")]
        preset: Preset,
        #[arg(long, env = SEED_ENV, default_value_t = 0)]
        seed: u64,
        /// Text report; the JSON report goes to the same path plus `.json`.
        #[arg(long)]
        report: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Finite-difference check of the analytic gradients.
    Gradcheck {
        #[arg(long, env = SEED_ENV, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 12)]
        configs: usize,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },
}

/// Overrides of the preset defaults.
#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    enc_image: Option<usize>,
    #[arg(long)]
    enc_tools: Option<usize>,
    #[arg(long)]
    enc_device: Option<usize>,
    /// Do not feed the procedure-type one-hot.
    #[arg(long)]
    no_ptype: bool,
    #[arg(long)]
    clip_norm: Option<f64>,
    #[arg(long)]
    epsilon_progress: Option<f64>,
}

impl ModelArgs {
    fn config(&self, variant: Variant, preset: Preset, seed: u64, d_img: usize) -> FusionConfig {
        let mut c = FusionConfig::for_variant(variant, preset);
        c.seed = seed;
        c.d_img = d_img;
        c.use_ptype = !self.no_ptype;
        if let Some(v) = self.epochs {
            c.epochs = v;
        }
        if let Some(v) = self.lr {
            c.lr = v;
        }
        if let Some(v) = self.hidden {
            c.hidden = v;
        }
        if let Some(v) = self.enc_image {
            c.enc_image = v;
        }
        if let Some(v) = self.enc_tools {
            c.enc_tools = v;
        }
        if let Some(v) = self.enc_device {
            c.enc_device = v;
        }
        if self.clip_norm.is_some() {
            c.clip_norm = self.clip_norm;
        }
        if let Some(v) = self.epsilon_progress {
            c.epsilon_progress = v;
        }
        c
    }
}

fn print_config(command: &str, config: Value) {
    eprintln!("{}", json!({ "command": command, "config": config }));
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("plain data serializes")
}

fn io_error(path: &Path, e: io::Error) -> CliError {
    CliError::new("io", format!("{}: {e}", path.display()))
}

/// Image width of a dataset; every record must agree.
fn dataset_d_img(records: &[ProcedureRecord]) -> Result<usize, CliError> {
    let mut widths = records
        .iter()
        .filter(|r| r.channels().image)
        .map(|r| r.channels().d_img);
    let first = widths.next().unwrap_or(0);
    if widths.any(|w| w != first) {
        return Err(CliError::new(
            "data",
            "records disagree on image feature width",
        ));
    }
    Ok(first)
}

fn load_nonempty(dir: &Path) -> Result<Vec<ProcedureRecord>, CliError> {
    let records = load_dataset(dir)?;
    if records.is_empty() {
        return Err(CliError::new(
            "data",
            format!("{}: no procedure files", dir.display()),
        ));
    }
    Ok(records)
}

fn cmd_gen(spec_path: &Path, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let text = fs::read_to_string(spec_path).map_err(|e| io_error(spec_path, e))?;
    let mut spec: SynthSpec = serde_json::from_str(&text)
        .map_err(|e| CliError::new("config", format!("{}: {e}", spec_path.display())))?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    spec.validate()?;
    print_config(
        "gen",
        json!({ "spec": to_value(&spec), "out": out.display().to_string() }),
    );
    let output = generate(&spec)?;
    save_synthetic(&output, out)?;
    eprintln!(
        "wrote {} procedures to {}",
        output.records.len(),
        out.display()
    );
    Ok(())
}

fn cmd_train(
    data: &Path,
    variant: Variant,
    preset: Preset,
    out: &Path,
    seed: u64,
    model: &ModelArgs,
) -> Result<(), CliError> {
    let records = load_nonempty(data)?;
    let config = model.config(variant, preset, seed, dataset_d_img(&records)?);
    config.validate()?;
    print_config("train", to_value(&config));
    let epochs = config.epochs;
    let (trained, _) = train_with_progress(&records, &config, |epoch, loss| {
        eprintln!("epoch {epoch}/{epochs} loss {loss:.6}");
    })?;
    save_checkpoint(&trained, out)?;
    eprintln!("wrote {}", out.display());
    Ok(())
}

/// Channels implied by the keys of a frame line.
fn infer_channels(line: &str) -> Result<ChannelSet, CliError> {
    let v: Value = serde_json::from_str(line)
        .map_err(|e| CliError::new("parse", format!("line 1: malformed frame: {e}")))?;
    let d_img = v.get("img").and_then(Value::as_array).map_or(0, Vec::len);
    Ok(ChannelSet {
        device: v.get("device").is_some(),
        tools: v.get("tools").is_some(),
        image: v.get("img").is_some(),
        d_img,
    })
}

fn cmd_predict(ckpt: &Path, input: &str, ptype_flag: Option<u8>) -> Result<(), CliError> {
    let model = load_checkpoint(ckpt)?;
    let reader: Box<dyn BufRead> = if input == "-" {
        Box::new(BufReader::new(io::stdin().lock()))
    } else {
        let f = File::open(input).map_err(|e| io_error(Path::new(input), e))?;
        Box::new(BufReader::new(f))
    };
    let mut lines = reader.lines().enumerate().filter_map(|(k, l)| match l {
        Ok(s) if s.trim().is_empty() => None,
        other => Some((k + 1, other)),
    });
    let read_err = |k: usize, e: io::Error| CliError::new("io", format!("{input}:{k}: {e}"));

    let Some((k0, first)) = lines.next() else {
        return Err(CliError::new("parse", format!("{input}: no frames")));
    };
    let first = first.map_err(|e| read_err(k0, e))?;
    let is_header = serde_json::from_str::<Value>(&first)
        .ok()
        .is_some_and(|v| v.get("format_version").is_some());
    let (channels, header_ptype, pending) = if is_header {
        let h = parse_header(&first)
            .map_err(|m| CliError::new("parse", format!("{input}:{k0}: {m}")))?;
        (h.channels, Some(h.ptype), None)
    } else {
        (infer_channels(&first)?, None, Some((k0, first)))
    };
    model.config.check_channels(input, &channels)?;
    let ptype_id = match (ptype_flag, header_ptype) {
        (Some(p), _) | (None, Some(p)) => p,
        (None, None) if model.config.use_ptype => {
            return Err(CliError::new(
                "config",
                "the model uses the procedure type; pass --ptype or a header line",
            ))
        }
        (None, None) => 1,
    };
    let ptype = ProcedureType::new(ptype_id)?;
    print_config(
        "predict",
        json!({
            "ckpt": ckpt.display().to_string(),
            "input": input,
            "ptype": ptype_id,
            "channels": to_value(&channels),
            "model": to_value(&model.config),
        }),
    );

    let mut session = open_session(&model, ptype);
    let stdout = io::stdout();
    let mut out = stdout.lock();
    for (k, line) in pending.into_iter().map(|(k, l)| (k, Ok(l))).chain(lines) {
        let line = line.map_err(|e| read_err(k, e))?;
        let t = session.frames_seen() + 1;
        let frame = parse_frame(&line, &channels, t)
            .map_err(|m| CliError::new("parse", format!("{input}:{k}: {m}")))?;
        let p = session.feed(&frame)?;
        writeln!(out, "{}\t{}\t{}\t{}", p.i, p.y, p.n_hat, p.remaining)
            .and_then(|_| out.flush())
            .map_err(|e| CliError::new("io", format!("stdout: {e}")))?;
    }
    if session.frames_seen() == 0 {
        return Err(CliError::new("parse", format!("{input}: no frames")));
    }
    Ok(())
}

fn cmd_eval(
    data: &Path,
    variants: &[Variant],
    preset: Preset,
    seed: u64,
    report_path: &Path,
    model: &ModelArgs,
) -> Result<(), CliError> {
    if variants.is_empty() {
        return Err(CliError::new("config", "no variants given"));
    }
    let records = load_nonempty(data)?;
    let d_img = dataset_d_img(&records)?;
    let configs: Vec<FusionConfig> = variants
        .iter()
        .map(|&v| model.config(v, preset, seed, d_img))
        .collect();
    for c in &configs {
        c.validate()?;
    }
    print_config(
        "eval",
        json!({
            "data": data.display().to_string(),
            "seed": seed,
            "report": report_path.display().to_string(),
            "configs": to_value(&configs),
        }),
    );
    let report = run_eval_with_log(&records, &configs, seed, &|line| eprintln!("{line}"))?;
    let json_path = PathBuf::from(format!("{}.json", report_path.display()));
    fs::write(report_path, report.render_text()).map_err(|e| io_error(report_path, e))?;
    fs::write(&json_path, report.to_json() + "\n").map_err(|e| io_error(&json_path, e))?;
    print!("{}", report.render_text());
    Ok(())
}

fn cmd_gradcheck(seed: u64, configs: usize, tolerance: f64) -> Result<(), CliError> {
    if configs == 0 {
        return Err(CliError::new("config", "--configs must be at least 1"));
    }
    if tolerance.is_nan() || tolerance <= 0.0 {
        return Err(CliError::new("config", "--tolerance must be positive"));
    }
    print_config(
        "gradcheck",
        json!({ "seed": seed, "configs": configs, "tolerance": tolerance }),
    );
    let cases = gradient_check_suite(seed, configs, tolerance)?;
    let mut failed = 0;
    for case in &cases {
        let verdict = if case.passed() { "ok" } else { "FAIL" };
        println!(
            "{verdict:<4} {:.3e}  {}",
            case.report.max_rel_error(),
            case.name
        );
        if !case.passed() {
            failed += 1;
            print!("{}", case.report.render(5));
        }
    }
    let worst = cases
        .iter()
        .map(|c| c.report.max_rel_error())
        .fold(0.0, f64::max);
    println!(
        "{} configurations, max relative error {worst:.3e}",
        cases.len()
    );
    if failed > 0 {
        return Err(CliError::new(
            "gradcheck",
            format!(
                "{failed} of {} configurations exceed tolerance {tolerance:e}",
                cases.len()
            ),
        ));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen { spec, out, seed } => cmd_gen(&spec, &out, seed),
        Command::Train {
            data,
            variant,
            preset,
            out,
            seed,
            model,
        } => cmd_train(&data, variant, preset, &out, seed, &model),
        Command::Predict { ckpt, input, ptype } => cmd_predict(&ckpt, &input, ptype),
        Command::Eval {
            data,
            variants,
            preset,
            seed,
            report,
            model,
        } => cmd_eval(&data, &variants, preset, seed, &report, &model),
        Command::Gradcheck {
            seed,
            configs,
            tolerance,
        } => cmd_gradcheck(seed, configs, tolerance),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let message = e.render().to_string();
            let first = message.lines().next().unwrap_or("invalid arguments");
            let first = first.strip_prefix("error: ").unwrap_or(first);
            eprintln!("{}", CliError::new("usage", first).to_json_line());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::FAILURE
        }
    }
}
