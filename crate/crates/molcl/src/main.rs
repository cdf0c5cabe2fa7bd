//! Command-line entry point: fingerprints, fragmentation, pre-training,
//! fine-tuning, embedding, and representation-space retrieval.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.

use clap::{Args, Parser, Subcommand};
use molcl::chem::{self, parse_smiles, read_corpus_lines, FeatureSet};
use molcl::fingerprint::{ecfp, DEFAULT_NBITS, DEFAULT_RADIUS};
use molcl::fragment::brics_partition;
use molcl::nn::checkpoint::{content_hash, load};
use molcl::nn::{encode, readout_graph, GinModel};
use molcl::train::{self, Dataset, TrainConfig, TrainError};
use molcl::util::atomic_write;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "molcl", version, about = "Molecular contrastive representation learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print one hex fingerprint per corpus molecule.
    Fp {
        /// Corpus file, one SMILES per line ('#' comments allowed).
        corpus: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RADIUS)]
        radius: u32,
        #[arg(long, default_value_t = DEFAULT_NBITS)]
        nbits: usize,
    },
    /// Print the retrosynthetic fragment partition of each molecule.
    Fragment {
        corpus: PathBuf,
    },
    /// Contrastive pre-training from a run config.
    Pretrain(RunArgs),
    /// Fine-tune a checkpoint on a labeled dataset named in the config.
    Finetune {
        #[command(flatten)]
        run: RunArgs,
        /// Pre-trained checkpoint to start from.
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Write the representation of every corpus molecule to a CSV table.
    Embed {
        #[arg(long)]
        checkpoint: PathBuf,
        corpus: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank the embedding table by cosine similarity to a query molecule.
    Similar {
        /// Embedding table written by `embed`.
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Query SMILES.
        query: String,
        #[arg(long, default_value_t = 8)]
        k: usize,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration file (key = value lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for checkpoint, logs, and the resolved config.
    #[arg(long)]
    out: PathBuf,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Force deterministic mode.
    #[arg(long)]
    deterministic: bool,
    /// Override the config's feature set (original | extended).
    #[arg(long)]
    feature_set: Option<String>,
}

struct CliError {
    code: i32,
    msg: String,
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        CliError {
            code: 1,
            msg: msg.into(),
        }
    }

    fn data(msg: impl Into<String>) -> Self {
        CliError {
            code: 2,
            msg: msg.into(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::data(format!("io: {e}"))
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        let numeric = matches!(
            &e,
            TrainError::NonFiniteGrad { .. }
                | TrainError::BatchFailed { .. }
                | TrainError::Loss(molcl::loss::LossError::NonFinite)
        );
        CliError {
            code: if numeric { 3 } else { 2 },
            msg: e.to_string(),
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are successes; anything else is a usage error.
            if e.use_stderr() {
                eprint!("{e}");
                std::process::exit(1);
            }
            print!("{e}");
            std::process::exit(0);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {}", e.msg);
        std::process::exit(e.code);
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fp {
            corpus,
            radius,
            nbits,
        } => cmd_fp(&corpus, radius, nbits),
        Command::Fragment { corpus } => cmd_fragment(&corpus),
        Command::Pretrain(run) => cmd_pretrain(run),
        Command::Finetune { run, checkpoint } => cmd_finetune(run, &checkpoint),
        Command::Embed {
            checkpoint,
            corpus,
            out,
        } => cmd_embed(&checkpoint, &corpus, &out),
        Command::Similar {
            embeddings,
            checkpoint,
            query,
            k,
        } => cmd_similar(&embeddings, &checkpoint, &query, k),
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))
}

fn cmd_fp(corpus: &Path, radius: u32, nbits: usize) -> Result<(), CliError> {
    let text = read_file(corpus)?;
    let mut out = String::new();
    for (line, smiles) in read_corpus_lines(&text) {
        let mol = parse_smiles(smiles).map_err(|e| CliError::data(format!("line {line}: {e}")))?;
        let fp =
            ecfp(&mol, radius, nbits).map_err(|e| CliError::data(format!("line {line}: {e}")))?;
        out.push_str(&fp.to_hex());
        out.push('\n');
    }
    print!("{out}");
    Ok(())
}

fn cmd_fragment(corpus: &Path) -> Result<(), CliError> {
    let text = read_file(corpus)?;
    let mut out = String::new();
    for (line, smiles) in read_corpus_lines(&text) {
        let mol = parse_smiles(smiles).map_err(|e| CliError::data(format!("line {line}: {e}")))?;
        let fm = brics_partition(&mol);
        let groups: Vec<String> = fm
            .groups()
            .iter()
            .map(|g| {
                g.iter()
                    .map(|a| a.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect();
        out.push_str(&format!(
            "{smiles}\t{}\t{}\n",
            fm.n_fragments,
            groups.join(";")
        ));
    }
    print!("{out}");
    Ok(())
}

fn apply_overrides(mut cfg: TrainConfig, run: &RunArgs) -> Result<TrainConfig, CliError> {
    if let Some(seed) = run.seed {
        cfg.seed = seed;
    }
    if run.deterministic {
        cfg.deterministic = true;
    }
    if let Some(fs) = &run.feature_set {
        cfg.feature_set = FeatureSet::parse(fs)
            .ok_or_else(|| CliError::usage(format!("unknown feature set {fs:?}")))?;
    }
    Ok(cfg)
}

fn cmd_pretrain(run: RunArgs) -> Result<(), CliError> {
    let cfg_text = read_file(&run.config)?;
    let cfg = TrainConfig::parse(&cfg_text, TrainConfig::pretrain_defaults())?;
    let cfg = apply_overrides(cfg, &run)?;
    let corpus_path = cfg
        .corpus
        .clone()
        .ok_or_else(|| CliError::data("config is missing required key 'corpus'"))?;
    let corpus = read_file(&resolve(&run.config, &corpus_path))?;
    let output = train::pretrain(&corpus, &cfg, Some(&run.out))?;
    println!(
        "pre-trained {} epochs; first-epoch mean loss {:.6}, final {:.6}",
        output.epoch_stats.len(),
        output.first_epoch_mean(),
        output.final_epoch_mean()
    );
    if let (Some(e), Some(v)) = (output.best_epoch, output.best_val_loss) {
        println!("best validation loss {v:.6} at epoch {e}");
    }
    println!("artifacts in {}", run.out.display());
    Ok(())
}

fn cmd_finetune(run: RunArgs, checkpoint: &Path) -> Result<(), CliError> {
    let cfg_text = read_file(&run.config)?;
    let cfg = TrainConfig::parse(&cfg_text, TrainConfig::finetune_defaults())?;
    let cfg = apply_overrides(cfg, &run)?;
    let dataset_path = cfg
        .dataset
        .clone()
        .ok_or_else(|| CliError::data("config is missing required key 'dataset'"))?;
    let csv_text = read_file(&resolve(&run.config, &dataset_path))?;
    let ds = Dataset::from_csv(&csv_text, &cfg.task_types)?;
    let encoder = load(checkpoint).map_err(|e| CliError::data(format!("checkpoint: {e}")))?;
    let (model, report) = train::finetune(&encoder, &ds, &cfg)?;
    std::fs::create_dir_all(&run.out)?;
    atomic_write(
        &run.out.join("model.bin"),
        &molcl::nn::checkpoint::to_bytes(&model),
    )?;
    atomic_write(&run.out.join("report.txt"), report.to_text().as_bytes())?;
    atomic_write(&run.out.join("resolved.cfg"), cfg.to_text().as_bytes())?;
    print!("{}", report.to_text());
    println!("artifacts in {}", run.out.display());
    Ok(())
}

/// Paths inside a config resolve relative to the config file's directory.
fn resolve(config: &Path, value: &str) -> PathBuf {
    let p = Path::new(value);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        config.parent().unwrap_or_else(|| Path::new(".")).join(p)
    }
}

fn embed_corpus(
    model: &GinModel<f32>,
    entries: &[(usize, &str)],
) -> Result<Vec<(usize, String, Vec<f32>)>, CliError> {
    let d = model.config.d;
    let mut rows = Vec::with_capacity(entries.len());
    for &(line, smiles) in entries {
        let mol = parse_smiles(smiles).map_err(|e| CliError::data(format!("line {line}: {e}")))?;
        let fg = chem::featurize(&mol, model.config.feature_set)
            .map_err(|e| CliError::data(format!("line {line}: {e}")))?;
        let trace = encode(model, &fg).map_err(|e| CliError::data(format!("line {line}: {e}")))?;
        rows.push((
            line,
            smiles.to_string(),
            readout_graph(&trace.out, fg.n_atoms, d),
        ));
    }
    Ok(rows)
}

fn cmd_embed(checkpoint: &Path, corpus: &Path, out: &Path) -> Result<(), CliError> {
    let model = load(checkpoint).map_err(|e| CliError::data(format!("checkpoint: {e}")))?;
    let hash = content_hash(&std::fs::read(checkpoint)?);
    let text = read_file(corpus)?;
    let entries = read_corpus_lines(&text);
    let rows = embed_corpus(&model, &entries)?;
    let d = model.config.d;
    let mut csv = format!("# checkpoint_hash {hash}\n");
    csv.push_str("line,smiles");
    for j in 0..d {
        csv.push_str(&format!(",h{j}"));
    }
    csv.push('\n');
    for (line, smiles, h) in &rows {
        csv.push_str(&format!("{line},{smiles}"));
        for v in h {
            csv.push_str(&format!(",{v}"));
        }
        csv.push('\n');
    }
    atomic_write(out, csv.as_bytes())?;
    println!("wrote {} embeddings to {}", rows.len(), out.display());
    Ok(())
}

struct EmbeddingTable {
    hash: String,
    rows: Vec<(usize, String, Vec<f32>)>,
}

fn read_embeddings(path: &Path) -> Result<EmbeddingTable, CliError> {
    let text = read_file(path)?;
    let mut lines = text.lines();
    let hash_line = lines
        .next()
        .ok_or_else(|| CliError::data("empty embeddings file"))?;
    let hash = hash_line
        .strip_prefix("# checkpoint_hash ")
        .ok_or_else(|| CliError::data("embeddings file lacks the checkpoint hash line"))?
        .to_string();
    let header = lines
        .next()
        .ok_or_else(|| CliError::data("embeddings file lacks a header"))?;
    if !header.starts_with("line,smiles") {
        return Err(CliError::data("unexpected embeddings header"));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 3 {
            return Err(CliError::data(format!("embeddings row {} malformed", i + 3)));
        }
        let line_no: usize = fields[0]
            .parse()
            .map_err(|_| CliError::data(format!("embeddings row {}: bad line number", i + 3)))?;
        let smiles = fields[1].to_string();
        let h: Result<Vec<f32>, _> = fields[2..].iter().map(|f| f.parse::<f32>()).collect();
        let h = h.map_err(|_| CliError::data(format!("embeddings row {}: bad float", i + 3)))?;
        rows.push((line_no, smiles, h));
    }
    Ok(EmbeddingTable { hash, rows })
}

fn cmd_similar(
    embeddings: &Path,
    checkpoint: &Path,
    query: &str,
    k: usize,
) -> Result<(), CliError> {
    let table = read_embeddings(embeddings)?;
    let model = load(checkpoint).map_err(|e| CliError::data(format!("checkpoint: {e}")))?;
    let hash = content_hash(&std::fs::read(checkpoint)?);
    if hash != table.hash {
        return Err(CliError::data(format!(
            "embeddings were written by checkpoint {} but {} hashes to {hash}",
            table.hash,
            checkpoint.display()
        )));
    }
    if k > table.rows.len() {
        return Err(CliError::data(format!(
            "k = {k} exceeds the table size {}",
            table.rows.len()
        )));
    }
    let mol = parse_smiles(query).map_err(|e| CliError::data(format!("query: {e}")))?;
    let fg = chem::featurize(&mol, model.config.feature_set)
        .map_err(|e| CliError::data(format!("query: {e}")))?;
    let trace = encode(&model, &fg).map_err(|e| CliError::data(format!("query: {e}")))?;
    let q = readout_graph(&trace.out, fg.n_atoms, model.config.d);
    let qn: f32 = q.iter().map(|v| v * v).sum::<f32>().sqrt();

    let mut scored: Vec<(f64, usize, &str)> = table
        .rows
        .iter()
        .map(|(line, smiles, h)| {
            let dot: f32 = h.iter().zip(q.iter()).map(|(a, b)| a * b).sum();
            let hn: f32 = h.iter().map(|v| v * v).sum::<f32>().sqrt();
            let cos = if hn > 0.0 && qn > 0.0 {
                (dot / (hn * qn)) as f64
            } else {
                0.0
            };
            (cos, *line, smiles.as_str())
        })
        .collect();
    // Descending cosine, ties broken by line number.
    scored.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.cmp(&b.1))
    });
    for (rank, (cos, line, smiles)) in scored.iter().take(k).enumerate() {
        println!("{}\t{:.6}\t{}\t{}", rank + 1, cos, line, smiles);
    }
    Ok(())
}
