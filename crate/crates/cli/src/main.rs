mod output;

use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use odcl_core::config::{Paths, PipelineConfig};
use odcl_core::index::FacetQuery;
use odcl_core::mindmap::{Mindmap, MindmapDocument};
use odcl_core::{pipeline, KeywordKind, MindmapStore};
use odcl_service::AppState;

use output::{float, opt, Format, Table};

/// Batch pipeline and learner service for design-feedback comments.
#[derive(Parser)]
#[command(name = "odcl", version)]
struct Cli {
    /// TOML configuration file. `ODCL_*` environment variables override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Put every artifact under this directory.
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and filter a newline-delimited JSON dump into a corpus.
    Ingest {
        /// Dump to read instead of the configured one.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Segment, label and keyword-tag every comment.
    Structure {
        /// Gazetteer to use instead of the configured one.
        #[arg(long)]
        gazetteer: Option<PathBuf>,
    },
    /// Embed, cluster and name keywords; count co-occurrence.
    BuildTaxonomy {
        /// Naming file to use instead of the configured one.
        #[arg(long)]
        naming: Option<PathBuf>,
    },
    /// Report inertia and silhouette over the configured k range.
    ScanK,
    /// Compute per-post keyword statistics.
    BuildIndex,
    /// Per-cluster mention counts for one post.
    Stats {
        /// Post id.
        #[arg(long)]
        post: String,
    },
    /// Top posts for a component and/or element cluster.
    Top {
        /// Component cluster name.
        #[arg(long)]
        ui: Option<String>,
        /// Element cluster name.
        #[arg(long)]
        ve: Option<String>,
        /// Number of posts to print.
        #[arg(short, default_value_t = 10)]
        n: usize,
    },
    /// Print the co-occurrence matrix.
    Cooccurrence,
    /// Mind map documents.
    Mindmap {
        #[command(subcommand)]
        action: MindmapCommand,
    },
    /// Serve the HTTP API over the built artifacts.
    Serve,
    /// Run every stage on the bundled fixtures.
    Demo {
        /// Working directory for the demo artifacts.
        #[arg(long, default_value = "odcl-demo")]
        dir: PathBuf,
        /// Start the server afterwards.
        #[arg(long)]
        serve: bool,
    },
}

#[derive(Subcommand)]
enum MindmapCommand {
    /// Write a stored map's portable document.
    Export {
        /// Map id.
        #[arg(long)]
        map: String,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Store a portable document under a map id, replacing any existing map.
    Import {
        /// Map id to store under.
        #[arg(long)]
        map: String,
        file: PathBuf,
    },
    /// Check a portable document without storing it.
    Lint { file: PathBuf },
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    cfg.apply_env(std::env::vars())?;
    if let Some(dir) = &cli.data_dir {
        cfg.paths = Paths::under(dir);
    }
    Ok(cfg)
}

fn kind_name(kind: KeywordKind) -> String {
    kind.to_string()
}

fn label<T: serde::Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_config(&cli)?;
    let out = &mut io::stdout().lock();
    let fmt = cli.format;
    match cli.command {
        Command::Ingest { dump } => {
            let dump = dump.unwrap_or_else(|| cfg.paths.dump.clone());
            let art = pipeline::ingest(&dump, &cfg.paths.corpus, &cfg.ingest)?;
            let p = &art.payload;
            let mut t = Table::new(["item", "count"]);
            t.row(vec!["input_posts".into(), p.drops.input_posts.to_string()]);
            t.row(vec!["input_comments".into(), p.drops.input_comments.to_string()]);
            t.row(vec!["malformed_lines".into(), p.malformed_lines.len().to_string()]);
            for (r, n) in &p.drops.post_drops {
                t.row(vec![format!("dropped_post:{}", label(r)), n.to_string()]);
            }
            for (r, n) in &p.drops.comment_drops {
                t.row(vec![format!("dropped_comment:{}", label(r)), n.to_string()]);
            }
            t.row(vec!["retained_posts".into(), p.drops.retained_posts.to_string()]);
            t.row(vec!["retained_comments".into(), p.drops.retained_comments.to_string()]);
            t.write(fmt, out)?;
        }
        Command::Structure { gazetteer } => {
            let gaz = gazetteer.unwrap_or_else(|| cfg.paths.gazetteer.clone());
            let art = pipeline::structure(&cfg.paths.corpus, &gaz, &cfg.structure.provider, &cfg.paths.structured)?;
            let mut t = Table::new(["comments", "sentences", "mentions"]);
            let c = &art.payload.comments;
            t.row(vec![
                c.len().to_string(),
                c.values().map(|s| s.sentences.len()).sum::<usize>().to_string(),
                c.values().map(|s| s.mentions.len()).sum::<usize>().to_string(),
            ]);
            t.write(fmt, out)?;
        }
        Command::BuildTaxonomy { naming } => {
            let naming = naming.unwrap_or_else(|| cfg.paths.naming.clone());
            let art = pipeline::build_taxonomy(
                &cfg.paths.corpus,
                &cfg.paths.structured,
                &naming,
                &cfg.clustering,
                &cfg.paths.taxonomy,
            )?;
            let tax = &art.payload.build.taxonomy;
            let mut t = Table::new(["axis", "cluster", "name", "unnamed", "members"]);
            for kind in [KeywordKind::UiComponent, KeywordKind::VisualElement] {
                for c in tax.clusters(kind) {
                    t.row(vec![
                        kind_name(kind),
                        c.id.to_string(),
                        c.name.clone(),
                        c.unnamed.to_string(),
                        c.member_terms.join("; "),
                    ]);
                }
            }
            t.write(fmt, out)?;
        }
        Command::ScanK => {
            let mut t = Table::new(["axis", "k", "inertia", "silhouette"]);
            for (kind, rows) in pipeline::scan_k(&cfg.paths.structured, &cfg.clustering)? {
                for r in rows {
                    t.row(vec![kind_name(kind), r.k.to_string(), float(r.inertia), float(r.silhouette)]);
                }
            }
            t.write(fmt, out)?;
        }
        Command::BuildIndex => {
            let art = pipeline::build_index(&cfg.paths, &cfg.scoring)?;
            let mut t = Table::new(["posts", "w_ui", "w_ve", "config_hash"]);
            t.row(vec![
                art.payload.stats.len().to_string(),
                art.payload.scoring.w_ui.to_string(),
                art.payload.scoring.w_ve.to_string(),
                art.config_hash.clone(),
            ]);
            t.write(fmt, out)?;
        }
        Command::Stats { post } => {
            let index = pipeline::load_index(&cfg.paths)?;
            let stats = index.stats(&post).with_context(|| format!("unknown post {post}"))?;
            let tax = index.taxonomy();
            let mut t = Table::new(["axis", "cluster", "mentions"]);
            for (kind, counts) in [
                (KeywordKind::UiComponent, &stats.num_ui_by_cluster),
                (KeywordKind::VisualElement, &stats.num_ve_by_cluster),
            ] {
                for (name, n) in tax.names(kind).into_iter().zip(counts) {
                    t.row(vec![kind_name(kind), name, n.to_string()]);
                }
            }
            t.write(fmt, out)?;
        }
        Command::Top { ui, ve, n } => {
            let index = pipeline::load_index(&cfg.paths)?;
            let ranked = index.sort_posts(&FacetQuery::new(ui.as_deref(), ve.as_deref()))?;
            let mut t = Table::new(["rank", "post_id", "title", "num_ui", "num_ve", "score"]);
            for (i, r) in ranked.iter().take(n).enumerate() {
                t.row(vec![
                    (i + 1).to_string(),
                    r.post_id.clone(),
                    index.post(&r.post_id)?.title.clone(),
                    opt(r.num_ui),
                    opt(r.num_ve),
                    opt(r.score.map(float)),
                ]);
            }
            t.write(fmt, out)?;
        }
        Command::Cooccurrence => {
            let art: pipeline::TaxonomyArtifact =
                odcl_core::artifact::Artifact::read(&cfg.paths.taxonomy, odcl_core::artifact::TAXONOMY)?;
            let m = &art.payload.cooccurrence;
            let mut t = Table::new(["ui_component", "visual_element", "comments"]);
            for (i, u) in m.ui_names.iter().enumerate() {
                for (j, v) in m.ve_names.iter().enumerate() {
                    t.row(vec![u.clone(), v.clone(), m.counts[i][j].to_string()]);
                }
            }
            t.write(fmt, out)?;
        }
        Command::Mindmap { action } => match action {
            MindmapCommand::Export { map, out: file } => {
                let store = MindmapStore::open(&cfg.paths.maps_dir)?;
                let text = store.export(&map)?;
                match file {
                    Some(path) => std::fs::write(&path, text).with_context(|| path.display().to_string())?,
                    None => out.write_all(text.as_bytes())?,
                }
            }
            MindmapCommand::Import { map, file } => {
                let doc = read_document(&file)?;
                let store = MindmapStore::open(&cfg.paths.maps_dir)?;
                let m = store.import(&map, doc)?;
                writeln!(out, "imported {} nodes into {}", m.len(), m.map_id())?;
            }
            MindmapCommand::Lint { file } => {
                let m = Mindmap::import(read_document(&file)?)?;
                writeln!(out, "ok: {} nodes", m.len())?;
            }
        },
        Command::Serve => serve(&cfg)?,
        Command::Demo { dir, serve: then_serve } => {
            let (demo_cfg, s) = pipeline::demo(&dir)?;
            let mut t = Table::new(["item", "value"]);
            t.row(vec!["dir".into(), dir.display().to_string()]);
            t.row(vec!["posts".into(), s.posts.to_string()]);
            t.row(vec!["comments".into(), s.comments.to_string()]);
            t.row(vec!["malformed_lines".into(), s.malformed_lines.to_string()]);
            t.row(vec!["sentences".into(), s.sentences.to_string()]);
            t.row(vec!["mentions".into(), s.mentions.to_string()]);
            t.row(vec!["ui_components".into(), s.ui_clusters.join("; ")]);
            t.row(vec!["visual_elements".into(), s.ve_clusters.join("; ")]);
            t.row(vec!["cooccurring_comment_pairs".into(), s.cooccurrence_total.to_string()]);
            t.write(fmt, out)?;
            if then_serve {
                cfg.paths = demo_cfg.paths;
                serve(&cfg)?;
            }
        }
    }
    Ok(())
}

fn read_document(path: &Path) -> Result<MindmapDocument> {
    let text = std::fs::read_to_string(path).with_context(|| path.display().to_string())?;
    MindmapDocument::from_json(&text).with_context(|| path.display().to_string())
}

fn serve(cfg: &PipelineConfig) -> Result<()> {
    let index = pipeline::load_index(&cfg.paths)?;
    let maps = MindmapStore::open(&cfg.paths.maps_dir)?;
    let state = Arc::new(AppState::new(index, maps, cfg.service.clone()));
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(odcl_service::serve(state))?;
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(io::stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
