use std::fs::File;
use std::io::{BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hpsg_lmf::fs::{LexiconReader, ReadItem};
use hpsg_lmf::lmf::{parse_tei, validate};
use hpsg_lmf::pipeline::{self, RunConfig};
use hpsg_lmf::synth::{generate_synthetic_lexicon, SynthCounts};

const FATAL: u8 = 2;

/// Convert Arabic HPSG lexica (TEI feature structures) into LMF resources (TEI).
#[derive(Parser)]
#[command(name = "hpsg2lmf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Project and merge HPSG lexica into one LMF resource.
    Convert(ConvertArgs),
    /// Check an LMF TEI file against the model invariants.
    Validate {
        path: PathBuf,
    },
    /// Write a seeded synthetic HPSG lexicon.
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        verbs: usize,
        #[arg(long, default_value_t = 30)]
        nouns: usize,
        #[arg(long, default_value_t = 5)]
        particles: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the projected emissions of lexicon entries.
    Inspect {
        #[arg(long)]
        input: PathBuf,
        /// Only entries whose PHON equals this value.
        #[arg(long)]
        phon: Option<String>,
        #[arg(long)]
        registry: Option<PathBuf>,
        #[arg(long)]
        rules: Option<PathBuf>,
        #[arg(long)]
        values: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ConvertArgs {
    #[arg(long = "input", required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    registry: Option<PathBuf>,
    #[arg(long)]
    rules: Option<PathBuf>,
    #[arg(long)]
    values: Option<PathBuf>,
    /// Exit 1 when any information was lost or any merge conflict was seen.
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    loss_report: Option<PathBuf>,
    #[arg(long)]
    merge_report: Option<PathBuf>,
    /// Write run statistics as JSON.
    #[arg(long)]
    stats: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Leave out the extension blocks.
    #[arg(long)]
    compat: bool,
    #[arg(long, default_value = "ar")]
    language: String,
}

fn convert(a: ConvertArgs) -> Result<u8, String> {
    let config = RunConfig {
        output: a.output,
        registry: a.registry,
        rules: a.rules,
        values: a.values,
        strict: a.strict,
        loss_report: a.loss_report,
        merge_report: a.merge_report,
        stats: a.stats,
        jobs: a.jobs,
        compat: a.compat,
        language: a.language,
        ..RunConfig::new(a.inputs)
    };
    let out = pipeline::run(&config).map_err(|e| e.to_string())?;
    if config.output.is_none() {
        std::io::stdout().write_all(&out.tei).map_err(|e| e.to_string())?;
    }
    let s = &out.stats;
    eprintln!(
        "{} input entries ({} rejected) -> {} LMF entries; {} loss, {} conflict diagnostics; {} ms",
        s.input_entries,
        s.rejected_entries,
        s.output_entries(),
        s.loss_diagnostics,
        s.conflict_diagnostics,
        s.wall_time_ms
    );
    if config.strict {
        for d in out.diagnostics.iter().filter(|d| d.kind.is_loss()) {
            eprintln!("  {d}");
        }
    }
    Ok(out.exit_code(config.strict) as u8)
}

fn validate_file(path: PathBuf) -> Result<u8, String> {
    let bytes = std::fs::read(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let parsed = parse_tei(&bytes).map_err(|e| format!("{}: {e}", path.display()))?;
    for d in &parsed.diagnostics {
        eprintln!("{d}");
    }
    let violations = validate(&parsed.resource);
    for v in &violations {
        eprintln!("{v}");
    }
    let entries: usize = parsed.resource.lexicons.iter().map(|l| l.entries.len()).sum();
    eprintln!("{entries} entries, {} violations", violations.len());
    Ok(u8::from(!violations.is_empty()))
}

fn inspect(
    input: PathBuf,
    phon: Option<String>,
    registry: Option<PathBuf>,
    rules: Option<PathBuf>,
    values: Option<PathBuf>,
) -> Result<u8, String> {
    let registry = pipeline::load_registry(registry.as_deref()).map_err(|e| e.to_string())?;
    let rules = pipeline::load_rules(rules.as_deref(), values.as_deref()).map_err(|e| e.to_string())?;
    let file = File::open(&input).map_err(|e| format!("{}: {e}", input.display()))?;
    let name = input.display().to_string();
    let wanted = phon.map(|p| hpsg_lmf::text::nfc(&p));
    let mut stdout = std::io::stdout().lock();
    for item in LexiconReader::new(BufReader::new(file), name) {
        match item.map_err(|e| e.to_string())? {
            ReadItem::Entry(e) => {
                if wanted.as_ref().is_none_or(|w| hpsg_lmf::text::nfc(&e.phon) == *w) {
                    let text = pipeline::inspect(&e, &registry, &rules);
                    if stdout.write_all(text.as_bytes()).is_err() {
                        break;
                    }
                }
            }
            ReadItem::Rejected(d) => {
                if wanted.is_none() {
                    if writeln!(stdout, "! {d}").is_err() {
                        break;
                    }
                }
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::Convert(a) => convert(a),
        Command::Validate { path } => validate_file(path),
        Command::Gen {
            seed,
            verbs,
            nouns,
            particles,
            output,
        } => {
            let doc = generate_synthetic_lexicon(seed, SynthCounts::new(verbs, nouns, particles));
            match output {
                Some(p) => pipeline::write_file(&p, &doc).map(|_| 0).map_err(|e| e.to_string()),
                None => {
                                std::io::stdout().write_all(&doc).map(|_| 0).map_err(|e| e.to_string())
                }
            }
        }
        Command::Inspect {
            input,
            phon,
            registry,
            rules,
            values,
        } => inspect(input, phon, registry, rules, values),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("hpsg2lmf: {e}");
            ExitCode::from(FATAL)
        }
    }
}
