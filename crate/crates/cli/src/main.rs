mod pages;

use std::collections::HashMap;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use imgseg::concept::{tag, ConceptClass, ConceptLexicon};
use imgseg::eval::{load_dataset, load_external_segments, score, to_jsonl, EvalReport, LabeledSegment, Prediction};
use imgseg::fixture::{generate_fixture, FixtureSpec};
use imgseg::location::{default_significant_locations, PageCategory, SignificantLocationTable};
use imgseg::pipeline::{process_page, PipelineConfig};
use imgseg::segment::SegmentConfig;
use imgseg::stats::{parse_location_counts, pearson, split_half_reliability, test_locations, DEFAULT_ALPHA};

use pages::{collect_inputs, mean_ms, page_id, process_all, PageOutcome};

#[derive(Parser)]
#[command(name = "imgseg", version, about = "Segment web pages around their images and extract contextual text")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    /// One JSON object per line.
    Json,
    /// Aligned plain-text tables.
    Human,
}

#[derive(Subcommand)]
enum Command {
    /// Report the image segments of each page.
    Segment(PageArgs),
    /// Extract contextual text for each image segment.
    Extract {
        #[command(flatten)]
        pages: PageArgs,
        /// Tag every item with a concept class.
        #[arg(long)]
        tag: bool,
        /// Lexicon file (`phrase<TAB>class`); implies --tag.
        #[arg(long)]
        lexicon: Option<PathBuf>,
    },
    /// Score predictions against labeled segments.
    Eval {
        /// Labeled dataset files, or directories of `.truth` files.
        #[arg(long, required = true)]
        truth: Vec<PathBuf>,
        /// Predictions file; when absent the pages in INPUTS are processed.
        #[arg(long)]
        predictions: Option<PathBuf>,
        #[command(flatten)]
        pages: PageArgs,
    },
    /// Binomial significance test per location, or correlation checks.
    Stats(StatsArgs),
    /// Write synthetic pages with ground truth.
    GenFixtures(GenArgs),
}

#[derive(Args)]
struct PageArgs {
    /// HTML files or directories.
    inputs: Vec<PathBuf>,
    /// Page category; selects the significant locations.
    #[arg(long, default_value = "unknown")]
    category: PageCategory,
    /// Ignore images without both width and height.
    #[arg(long)]
    strict_dims: bool,
    /// Encoding label for the input bytes (default: UTF-8).
    #[arg(long)]
    encoding: Option<String>,
    /// Significant-location table (JSON) replacing the built-in one.
    #[arg(long)]
    locations: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    /// Count table: `location<TAB>count` per line.
    table: Option<PathBuf>,
    /// Null proportion; defaults to 1/k with k the number of rows.
    #[arg(long)]
    p: Option<f64>,
    /// Total relevant items; defaults to the table sum.
    #[arg(long)]
    n: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    /// Correlate two files of numbers instead.
    #[arg(long, num_args = 2, value_names = ["X", "Y"], conflicts_with_all = ["table", "split_half"])]
    pearson: Option<Vec<PathBuf>>,
    /// Split-half reliability of a file with one item per line and its
    /// measurements separated by whitespace.
    #[arg(long, conflicts_with = "table")]
    split_half: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GenArgs {
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Number of pages.
    #[arg(long, default_value_t = 1)]
    count: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    unlisted: usize,
    #[arg(long, default_value_t = 2)]
    listed: usize,
    #[arg(long, default_value_t = 2)]
    semi_listed: usize,
    #[arg(long, default_value_t = 1)]
    min_words: usize,
    #[arg(long, default_value_t = 6)]
    max_words: usize,
    #[arg(long, default_value = "unknown")]
    category: PageCategory,
    /// Add a navigation bar with an icon that must be ignored.
    #[arg(long)]
    nav: bool,
    /// File name prefix.
    #[arg(long, default_value = "fixture")]
    prefix: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let code = match cli.command {
        Command::Segment(args) => cmd_segment(&args, cli.format, &mut out)?,
        Command::Extract { pages, tag, lexicon } => {
            let lexicon = match (tag, lexicon) {
                (_, Some(path)) => Some(ConceptLexicon::load(&path, ConceptClass::Object)?),
                (true, None) => Some(ConceptLexicon::starter()),
                (false, None) => None,
            };
            cmd_extract(&pages, lexicon.as_ref(), cli.format, &mut out)?
        }
        Command::Eval {
            truth,
            predictions,
            pages,
        } => cmd_eval(&truth, predictions.as_deref(), &pages, cli.format, &mut out)?,
        Command::Stats(args) => cmd_stats(&args, cli.format, &mut out)?,
        Command::GenFixtures(args) => cmd_gen(&args, cli.format, &mut out)?,
    };
    out.flush()?;
    Ok(code)
}

fn pipeline_config(args: &PageArgs) -> Result<PipelineConfig> {
    let locations = match &args.locations {
        Some(path) => SignificantLocationTable::load(path)?,
        None => default_significant_locations(),
    };
    Ok(PipelineConfig {
        category: args.category,
        segment: SegmentConfig {
            strict_dims: args.strict_dims,
            ..SegmentConfig::default()
        },
        locations,
        encoding: args.encoding.clone(),
    })
}

fn emit(out: &mut impl Write, record: &Value) -> Result<()> {
    writeln!(out, "{record}")?;
    Ok(())
}

fn report_error(path: &Path, e: &anyhow::Error, format: Format, out: &mut impl Write) -> Result<()> {
    match format {
        Format::Json => emit(out, &json!({"file": path.display().to_string(), "error": format!("{e:#}")})),
        Format::Human => {
            eprintln!("error: {}: {e:#}", path.display());
            Ok(())
        }
    }
}

/// Print the timing summary and pick the exit code: failure only when
/// every input failed.
fn finish<T>(outcomes: &[PageOutcome<T>]) -> ExitCode {
    let failed = outcomes.iter().filter(|o| o.result.is_err()).count();
    eprintln!(
        "{} pages, {failed} failed, mean {:.2} ms/page",
        outcomes.len(),
        mean_ms(outcomes)
    );
    if !outcomes.is_empty() && failed == outcomes.len() {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn cmd_segment(args: &PageArgs, format: Format, out: &mut impl Write) -> Result<ExitCode> {
    let config = pipeline_config(args)?;
    let files = collect_inputs(&args.inputs)?;
    let outcomes = process_all(&files, |_, bytes| Ok(process_page(bytes, &config)?));
    if format == Format::Human {
        writeln!(out, "{:<24} {:<24} {:<12} {:>5}  segment root", "page", "image", "arrangement", "texts")?;
    }
    for o in &outcomes {
        let page = match &o.result {
            Ok(page) => page,
            Err(e) => {
                report_error(&o.path, e, format, out)?;
                continue;
            }
        };
        let id = page_id(&o.path);
        let ms = o.elapsed.as_secs_f64() * 1000.0;
        for s in &page.segments {
            let seg = &s.segment;
            let root = page.tree.path(seg.segment_root);
            match format {
                Format::Json => emit(
                    out,
                    &json!({
                        "page_id": id,
                        "image_key": seg.image.key(),
                        "arrangement": seg.arrangement.to_string(),
                        "segment_root": root,
                        "slice": seg.slice.map(|c| [c.start, c.end]),
                        "text_nodes": seg.text_node_ids.len(),
                        "page_ms": ms,
                    }),
                )?,
                Format::Human => {
                    let root = match seg.slice {
                        Some(c) => format!("{root}[{}..={}]", c.start, c.end),
                        None => root,
                    };
                    writeln!(
                        out,
                        "{:<24} {:<24} {:<12} {:>5}  {root}",
                        id,
                        seg.image.key(),
                        seg.arrangement.to_string(),
                        seg.text_node_ids.len()
                    )?
                }
            }
        }
        for skip in &page.skipped {
            eprintln!("{}: skipped image {}: {}", id, skip.image.key(), skip.reason);
        }
    }
    Ok(finish(&outcomes))
}

fn cmd_extract(args: &PageArgs, lexicon: Option<&ConceptLexicon>, format: Format, out: &mut impl Write) -> Result<ExitCode> {
    let config = pipeline_config(args)?;
    let files = collect_inputs(&args.inputs)?;
    let outcomes = process_all(&files, |_, bytes| Ok(process_page(bytes, &config)?));
    for o in &outcomes {
        let page = match &o.result {
            Ok(page) => page,
            Err(e) => {
                report_error(&o.path, e, format, out)?;
                continue;
            }
        };
        let id = page_id(&o.path);
        for s in &page.segments {
            let key = s.segment.image.key();
            match format {
                Format::Json => {
                    let items: Vec<Value> = s
                        .items
                        .iter()
                        .map(|i| {
                            let mut v = json!({
                                "text": i.text,
                                "location": i.location.to_string(),
                                "visibility": i.visibility,
                            });
                            if let Some(lex) = lexicon {
                                v["concept"] = json!(tag(&i.text, lex).ok());
                            }
                            v
                        })
                        .collect();
                    let text: Vec<&str> = s.items.iter().map(|i| i.text.as_str()).collect();
                    emit(
                        out,
                        &json!({
                            "page_id": id,
                            "image_key": key,
                            "arrangement": s.segment.arrangement.to_string(),
                            "text": text,
                            "items": items,
                        }),
                    )?
                }
                Format::Human => {
                    writeln!(out, "{id} {key} ({})", s.segment.arrangement)?;
                    for i in &s.items {
                        let concept = lexicon
                            .and_then(|lex| tag(&i.text, lex).ok())
                            .map(|c| format!(" [{c}]"))
                            .unwrap_or_default();
                        writeln!(out, "    {:<20} {}{concept}", i.location.to_string(), i.text)?;
                    }
                }
            }
        }
    }
    Ok(finish(&outcomes))
}

fn load_truth(paths: &[PathBuf]) -> Result<Vec<LabeledSegment>> {
    let mut truth = Vec::new();
    for path in paths {
        if path.is_dir() {
            let mut files: Vec<PathBuf> = fs::read_dir(path)
                .with_context(|| format!("reading {}", path.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|e| e == "truth"))
                .collect();
            files.sort();
            for f in files {
                truth.extend(load_dataset(&f)?);
            }
        } else {
            truth.extend(load_dataset(path)?);
        }
    }
    Ok(truth)
}

fn cmd_eval(
    truth_paths: &[PathBuf],
    predictions: Option<&Path>,
    args: &PageArgs,
    format: Format,
    out: &mut impl Write,
) -> Result<ExitCode> {
    let truth = load_truth(truth_paths)?;
    let (method, predicted): (&str, Vec<Prediction>) = match predictions {
        Some(path) => ("external", load_external_segments(path)?),
        None => {
            if args.inputs.is_empty() {
                bail!("give --predictions or HTML inputs to process");
            }
            // pages listed in the truth use their labeled category
            let categories: HashMap<&str, PageCategory> =
                truth.iter().map(|t| (t.page_id.as_str(), t.category)).collect();
            let base = pipeline_config(args)?;
            let files = collect_inputs(&args.inputs)?;
            let outcomes = process_all(&files, |path, bytes| {
                let id = page_id(path);
                let mut config = base.clone();
                if let Some(c) = categories.get(id.as_str()) {
                    config.category = *c;
                }
                Ok(process_page(bytes, &config)?.predictions(&id))
            });
            let mut predicted = Vec::new();
            for o in &outcomes {
                match &o.result {
                    Ok(p) => predicted.extend(p.iter().cloned()),
                    Err(e) => eprintln!("error: {}: {e:#}", o.path.display()),
                }
            }
            eprintln!("{} pages, mean {:.2} ms/page", outcomes.len(), mean_ms(&outcomes));
            ("imgseg", predicted)
        }
    };
    let report = score(&truth, &predicted)?;
    print_report(method, &report, format, out)?;
    Ok(ExitCode::SUCCESS)
}

fn print_report(method: &str, r: &EvalReport, format: Format, out: &mut impl Write) -> Result<()> {
    match format {
        Format::Json => emit(out, &json!({"method": method, "report": r})),
        Format::Human => {
            writeln!(out, "{:<12} {:>8} {:>10} {:>8} {:>7} {:>10}", "Method", "Actual", "Extracted", "Correct", "Recall", "Precision")?;
            writeln!(
                out,
                "{:<12} {:>8} {:>10} {:>8} {:>7.2} {:>10.2}",
                method, r.actual, r.extracted, r.correct, r.recall, r.precision
            )?;
            Ok(())
        }
    }
}

fn read_numbers(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(i, l)| {
            l.split_whitespace()
                .map(|v| {
                    v.parse::<f64>()
                        .with_context(|| format!("{}:{}: bad number `{v}`", path.display(), i + 1))
                })
                .collect()
        })
        .collect()
}

fn cmd_stats(args: &StatsArgs, format: Format, out: &mut impl Write) -> Result<ExitCode> {
    if let Some(paths) = &args.pearson {
        let flat = |p: &Path| -> Result<Vec<f64>> { Ok(read_numbers(p)?.into_iter().flatten().collect()) };
        let r = pearson(&flat(&paths[0])?, &flat(&paths[1])?)?;
        match format {
            Format::Json => emit(out, &json!({"pearson": r}))?,
            Format::Human => writeln!(out, "pearson r = {r:.4}")?,
        }
        return Ok(ExitCode::SUCCESS);
    }
    if let Some(path) = &args.split_half {
        let s = split_half_reliability(&read_numbers(path)?, args.seed)?;
        match format {
            Format::Json => emit(
                out,
                &json!({"split_half": s.r, "reliable": s.is_reliable(), "first_half": s.first_half, "seed": args.seed}),
            )?,
            Format::Human => writeln!(
                out,
                "split-half r = {:.4} ({})",
                s.r,
                if s.is_reliable() { "reliable" } else { "not reliable" }
            )?,
        }
        return Ok(ExitCode::SUCCESS);
    }
    let Some(path) = &args.table else {
        bail!("give a count table, --pearson X Y or --split-half FILE");
    };
    let tsv = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let counts = parse_location_counts(&tsv, &path.display().to_string())?;
    let rows = test_locations(&counts, args.n, args.p, args.alpha)?;
    match format {
        Format::Json => {
            for r in &rows {
                emit(
                    out,
                    &json!({
                        "location": r.location.to_string(),
                        "count": r.successes,
                        "z": r.result.z,
                        "critical": r.result.critical,
                        "decision": r.result.decision.label(),
                        "approximation_valid": r.result.approximation_valid,
                    }),
                )?;
            }
        }
        Format::Human => {
            writeln!(out, "{:<24} {:>8} {:>9}  Conclusion", "Location", "Count", "z-score")?;
            for r in &rows {
                let flag = if r.result.approximation_valid { "" } else { " (approximation invalid)" };
                writeln!(
                    out,
                    "{:<24} {:>8} {:>9.2}  {} H0{flag}",
                    r.location.to_string(),
                    r.successes,
                    r.result.z,
                    r.result.decision.label()
                )?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_gen(args: &GenArgs, format: Format, out: &mut impl Write) -> Result<ExitCode> {
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let width = args.count.saturating_sub(1).max(1).to_string().len().max(4);
    for i in 0..args.count {
        let name = format!("{}-{:0width$}", args.prefix, i);
        let spec = FixtureSpec {
            seed: args.seed.wrapping_add(i),
            page_id: name.clone(),
            unlisted: args.unlisted,
            listed: args.listed,
            semi_listed: args.semi_listed,
            min_words: args.min_words,
            max_words: args.max_words,
            category: args.category,
            nav: args.nav,
        };
        let fixture = generate_fixture(&spec);
        let html = args.out.join(format!("{name}.html"));
        let truth = args.out.join(format!("{name}.truth"));
        fs::write(&html, &fixture.html).with_context(|| format!("writing {}", html.display()))?;
        fs::write(&truth, to_jsonl(&fixture.truth)).with_context(|| format!("writing {}", truth.display()))?;
        match format {
            Format::Json => emit(
                out,
                &json!({"html": html.display().to_string(), "truth": truth.display().to_string(), "segments": fixture.truth.len()}),
            )?,
            Format::Human => writeln!(out, "{} ({} segments)", html.display(), fixture.truth.len())?,
        }
    }
    Ok(ExitCode::SUCCESS)
}
