use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use relmap::eval::{ablate, evaluate, load_problems, render_table};
use relmap::model::{entities, DomainSide};
use relmap::relations::{Mode, Snapshot, SourceWarning, WarningKind};
use relmap::render::{explain_text, mapping_dot, mapping_text, suggest_text};
use relmap::suggest::suggest;
use relmap::{Engine, RunConfig};
use tracing_subscriber::EnvFilter;

/// Exit code when the engine ran but found nothing.
const EXIT_NO_MAPPING: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_SOURCE: u8 = 3;

#[derive(Parser)]
#[command(name = "relmap", version, about = "Map entities between two domains by shared relations")]
struct Cli {
    #[command(flatten)]
    run: RunFlags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunFlags {
    /// TOML run configuration; its keys take precedence over flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Relation snapshot (JSONL).
    #[arg(long, global = true)]
    snapshot: Option<PathBuf>,
    /// Allow network-backed sources on snapshot misses.
    #[arg(long, global = true)]
    live: bool,
    /// Embedding service base URL.
    #[arg(long, global = true, env = "RELMAP_EMBED_URL")]
    embed_url: Option<String>,
    /// Embedding cache file (JSONL), read and extended.
    #[arg(long, global = true)]
    embedding_cache: Option<PathBuf>,
    /// Stoplist file replacing the bundled one.
    #[arg(long, global = true)]
    stoplist: Option<PathBuf>,
    /// Entries of the stoplist to use [default: 500].
    #[arg(long, global = true)]
    stoplist_size: Option<usize>,
    /// Minimum phrase similarity [default: 0.2].
    #[arg(long, global = true)]
    sim_threshold: Option<f64>,
    /// Merge distance for phrase clusters [default: 0.5].
    #[arg(long, global = true)]
    cluster_threshold: Option<f64>,
    /// Matched clusters kept per direction [default: 3].
    #[arg(long, global = true)]
    top_k: Option<usize>,
    /// Beam width [default: 20].
    #[arg(long, global = true)]
    beam_width: Option<usize>,
    /// Leave out a source (repeatable).
    #[arg(long, global = true)]
    disable: Vec<String>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Dot,
}

#[derive(Args)]
struct Domains {
    /// Comma-separated base entities.
    #[arg(long)]
    base: String,
    /// Comma-separated target entities.
    #[arg(long)]
    target: String,
}

impl Domains {
    fn split(&self) -> (Vec<String>, Vec<String>) {
        (split_list(&self.base), split_list(&self.target))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Rank mappings from the base domain into the target domain.
    Map {
        #[command(flatten)]
        domains: Domains,
        /// Mappings to print in text mode.
        #[arg(long, default_value_t = 3)]
        top: usize,
    },
    /// Propose a target entity for an unmapped base entity.
    Suggest {
        #[command(flatten)]
        domains: Domains,
        /// Base entity to find an image for.
        #[arg(long)]
        entity: String,
    },
    /// Score a problem file against its gold mappings.
    Eval {
        problems: PathBuf,
        /// Repeat the evaluation without this source (repeatable).
        #[arg(long)]
        ablate: Vec<String>,
    },
    /// Show clusters, edges and matching for one quadruple.
    Explain {
        /// Base pair as "b1,b2".
        #[arg(long)]
        base_pair: String,
        /// Target pair as "t1,t2".
        #[arg(long)]
        target_pair: String,
    },
    /// Build or inspect relation snapshots.
    #[command(subcommand)]
    Snapshot(SnapshotCommand),
}

#[derive(Subcommand)]
enum SnapshotCommand {
    /// Extract relations for the given domains or problems and save them.
    Build {
        #[arg(long)]
        base: Option<String>,
        #[arg(long)]
        target: Option<String>,
        #[arg(long)]
        problems: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-source record counts.
    Stats { path: PathBuf },
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(str::to_string)
        .collect()
}

fn pair(s: &str) -> Result<(String, String)> {
    match split_list(s).as_slice() {
        [a, b] => Ok((a.clone(), b.clone())),
        _ => bail!(relmap::Error::Input(format!("expected two comma-separated names, got {s:?}"))),
    }
}

/// Flags first, then every key present in the config file on top.
fn run_config(flags: &RunFlags) -> Result<(RunConfig, PathBuf)> {
    let mut table = toml::Table::new();
    let mut set = |k: &str, v: toml::Value| {
        table.insert(k.to_string(), v);
    };
    let path = |p: &Path| toml::Value::String(p.display().to_string());
    if let Some(p) = &flags.snapshot {
        set("snapshot", path(p));
    }
    if flags.live {
        set("live", true.into());
    }
    if let Some(u) = &flags.embed_url {
        set("embed_url", u.clone().into());
    }
    if let Some(p) = &flags.embedding_cache {
        set("embedding_cache", path(p));
    }
    if let Some(p) = &flags.stoplist {
        set("stoplist", path(p));
    }
    if let Some(n) = flags.stoplist_size {
        set("stoplist_size", (n as i64).into());
    }
    if let Some(x) = flags.sim_threshold {
        set("sim_threshold", x.into());
    }
    if let Some(x) = flags.cluster_threshold {
        set("cluster_threshold", x.into());
    }
    if let Some(n) = flags.top_k {
        set("top_k", (n as i64).into());
    }
    if let Some(n) = flags.beam_width {
        set("beam_width", (n as i64).into());
    }
    if !flags.disable.is_empty() {
        set("disable", flags.disable.clone().into());
    }

    let mut base_dir = PathBuf::from(".");
    if let Some(cfg) = &flags.config {
        let text = std::fs::read_to_string(cfg)
            .map_err(|e| relmap::Error::Io { path: cfg.clone(), source: e })?;
        let file: toml::Table = text
            .parse()
            .map_err(|e| relmap::Error::Config(format!("{}: {e}", cfg.display())))?;
        base_dir = cfg.parent().map(Path::to_path_buf).unwrap_or_default();
        for (k, mut v) in file {
            if matches!(k.as_str(), "snapshot" | "embedding_cache" | "stoplist") {
                if let Some(s) = v.as_str() {
                    v = path(&base_dir.join(s));
                }
            }
            table.insert(k, v);
        }
    }
    let config: RunConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e| relmap::Error::Config(e.to_string()))?;
    Ok((config, base_dir))
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn source_failed(mode: Mode, warnings: &[SourceWarning]) -> bool {
    mode == Mode::Live && warnings.iter().any(|w| w.kind == WarningKind::Unavailable)
}

fn report_warnings(warnings: &[SourceWarning]) {
    for w in warnings {
        eprintln!("warning: {}: {}", w.source, w.message);
    }
}

fn run(cli: Cli) -> Result<u8> {
    let (config, base_dir) = run_config(&cli.run)?;
    let engine = Engine::from_config(&config, &base_dir)?;
    let mode = engine.mode();
    let format = cli.run.format;
    match cli.command {
        Command::Map { domains, top } => {
            let (b, t) = domains.split();
            let out = engine.map_names(&b, &t)?;
            match format {
                Format::Text => print!("{}", mapping_text(&out, top)),
                Format::Json => print_json(&out)?,
                Format::Dot => print!("{}", mapping_dot(&out)),
            }
            report_warnings(&out.warnings);
            if source_failed(mode, &out.warnings) {
                return Ok(EXIT_SOURCE);
            }
            if out.best().is_none_or(|m| m.is_empty()) {
                return Ok(EXIT_NO_MAPPING);
            }
        }
        Command::Suggest { domains, entity } => {
            let (b, t) = domains.split();
            let base = entities(&b, DomainSide::Base)?;
            let target = entities(&t, DomainSide::Target)?;
            let unmapped = relmap::model::Entity::new(&entity, DomainSide::Base)?;
            if !base.contains(&unmapped) {
                bail!(relmap::Error::Input(format!("{entity:?} is not in the base domain")));
            }
            let mapped = engine.map(&base, &target)?;
            let Some(best) = mapped.best().filter(|m| !m.is_empty()) else {
                eprintln!("no mapping to extend");
                return Ok(EXIT_NO_MAPPING);
            };
            if best.image(&unmapped.name).is_some() {
                bail!(relmap::Error::Input(format!(
                    "{entity:?} is already mapped to {:?}",
                    best.image(&unmapped.name).unwrap_or_default()
                )));
            }
            let out = suggest(&engine, &unmapped, best, &base, &target)?;
            match format {
                Format::Json => print_json(&out)?,
                _ => print!("{}", suggest_text(&out)),
            }
            report_warnings(&out.warnings);
            if source_failed(mode, &out.warnings) {
                return Ok(EXIT_SOURCE);
            }
            if out.candidates.is_empty() {
                return Ok(EXIT_NO_MAPPING);
            }
        }
        Command::Eval { problems, ablate: ids } => {
            let problems = load_problems(&problems)?;
            let report = evaluate(&problems, &engine)?;
            let ablations = ablate(&problems, &engine, &ids)?;
            match format {
                Format::Json => print_json(&serde_json::json!({
                    "report": report,
                    "ablations": ablations
                        .iter()
                        .map(|(id, r)| serde_json::json!({"disabled": id, "report": r}))
                        .collect::<Vec<_>>(),
                }))?,
                _ => {
                    print!("{}", render_table(&report));
                    for (id, r) in &ablations {
                        println!("\nwithout {id}:");
                        print!("{}", render_table(r));
                    }
                }
            }
        }
        Command::Explain { base_pair, target_pair } => {
            let (b1, b2) = pair(&base_pair)?;
            let (t1, t2) = pair(&target_pair)?;
            let x = engine.explain((&b1, &b2), (&t1, &t2))?;
            match format {
                Format::Json => print_json(&x)?,
                _ => print!("{}", explain_text(&x)),
            }
        }
        Command::Snapshot(SnapshotCommand::Build {
            base,
            target,
            problems,
            out,
        }) => {
            let mut domains: Vec<(Vec<String>, Vec<String>)> = Vec::new();
            if let Some(p) = problems {
                for p in load_problems(&p)? {
                    domains.push((p.base, p.target));
                }
            }
            match (base, target) {
                (Some(b), Some(t)) => domains.push((split_list(&b), split_list(&t))),
                (None, None) => {}
                _ => bail!(relmap::Error::Input("--base and --target go together".into())),
            }
            if domains.is_empty() {
                bail!(relmap::Error::Input("nothing to build: give --problems or --base/--target".into()));
            }
            let mut warnings = Vec::new();
            for (b, t) in &domains {
                let b = entities(b, DomainSide::Base)?;
                let t = entities(t, DomainSide::Target)?;
                warnings.extend(engine.relations(&b, &t).warnings);
            }
            engine.snapshot().save(&out)?;
            report_warnings(&warnings);
            eprintln!(
                "wrote {} relation and {} entity records to {}",
                engine.snapshot().relation_record_count(),
                engine.snapshot().entity_record_count(),
                out.display()
            );
            if source_failed(mode, &warnings) {
                return Ok(EXIT_SOURCE);
            }
        }
        Command::Snapshot(SnapshotCommand::Stats { path }) => {
            let snap = Snapshot::load(&path)?;
            let stats = snap.stats();
            match format {
                Format::Json => print_json(&stats
                    .iter()
                    .map(|(id, (records, non_empty, phrases))| {
                        (id.clone(), serde_json::json!({
                            "records": records,
                            "non_empty": non_empty,
                            "phrases": phrases,
                        }))
                    })
                    .collect::<serde_json::Map<_, _>>())?,
                _ => {
                    println!("{:<16} {:>8} {:>9} {:>8}", "source", "records", "non-empty", "phrases");
                    for (id, (records, non_empty, phrases)) in &stats {
                        println!("{id:<16} {records:>8} {non_empty:>9} {phrases:>8}");
                    }
                    println!("entity records {}", snap.entity_record_count());
                }
            }
        }
    }
    Ok(0)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<relmap::Error>() {
        Some(relmap::Error::SourceUnavailable { .. } | relmap::Error::EmbeddingUnavailable { .. }) => EXIT_SOURCE,
        _ => EXIT_INPUT,
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_env("RELMAP_LOG").unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
