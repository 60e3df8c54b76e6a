use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use synthlayout::dataset::visible_models;
use synthlayout::io::{analyze_dir, generate, read_json, to_stable_json, with_jobs, CatalogSpec, GenerateOptions};
use synthlayout::metrics::MetricsConfig;
use synthlayout::pretrain::{simulate_pretrain, PretrainConfig};
use synthlayout::scene::presets::{preset, presets};
use synthlayout::scene::{query_poses, LayoutParams};
use synthlayout::search::{search, MetricTarget, SearchConfig};

#[derive(Parser)]
#[command(name = "synthlayout", version, about = "Synthetic scene layouts, label rendering and layout metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: GlobalOpts,
}

#[derive(Args, Clone)]
struct GlobalOpts {
    /// Master seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores)
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Image size as WIDTHxHEIGHT
    #[arg(long, global = true, value_parser = parse_resolution)]
    resolution: Option<(u32, u32)>,
    /// Directory of .obj models to use instead of the primitive catalog
    #[arg(long, global = true)]
    models: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate scenes, label buffers and a manifest
    Generate {
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        /// Layout parameters JSON
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        count: u64,
        #[arg(long, default_value = "dataset")]
        out: PathBuf,
        #[arg(long)]
        no_depth: bool,
        #[arg(long)]
        no_query_poses: bool,
    },
    /// Measure the scenes of a generated directory
    Analyze {
        dir: PathBuf,
        /// Metrics JSON path (default DIR/metrics.json)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Viewpoint histogram CSV path (default DIR/viewpoints.csv)
        #[arg(long)]
        viewpoints: Option<PathBuf>,
    },
    /// Search layout parameters against a metric target
    Search {
        /// Target JSON
        #[arg(long, conflicts_with = "target_preset")]
        target: Option<PathBuf>,
        /// Built-in target profile (see `presets`)
        #[arg(long)]
        target_preset: Option<String>,
        /// Base layout preset (default random_placement)
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        budget: usize,
        #[arg(long, default_value_t = 50)]
        scenes_per_eval: u64,
        /// Resolution used while searching
        #[arg(long, value_parser = parse_resolution, default_value = "160x120")]
        search_resolution: (u32, u32),
        #[arg(long, default_value = "search_report.json")]
        out: PathBuf,
    },
    /// Print the eight turntable query poses of a model
    QueryPoses {
        model: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the contrastive memory-bank simulation
    PretrainSim {
        /// Simulation config JSON
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "loss.csv")]
        out: PathBuf,
    },
    /// List the layout presets and reference metric targets
    Presets {
        /// Emit full parameters as JSON
        #[arg(long)]
        json: bool,
    },
}

/// Usage problems exit with 1, bad or unreadable data with 2.
enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
}

type Outcome = Result<(), Failure>;

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure::Usage(anyhow!("{msg}"))
}

fn data<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Data(e.into())
}

fn parse_resolution(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WIDTHxHEIGHT, got {s:?}"))?;
    let w: u32 = w.trim().parse().map_err(|_| format!("bad width in {s:?}"))?;
    let h: u32 = h.trim().parse().map_err(|_| format!("bad height in {s:?}"))?;
    if w == 0 || h == 0 {
        return Err("resolution must be positive".into());
    }
    Ok((w, h))
}

fn catalog_spec(g: &GlobalOpts) -> CatalogSpec {
    match &g.models {
        Some(p) => CatalogSpec::ObjDir { path: p.clone() },
        None => CatalogSpec::Primitives,
    }
}

fn layout_params(g: &GlobalOpts, preset_name: Option<&str>, config: Option<&Path>) -> Result<LayoutParams, Failure> {
    let mut params = match (preset_name, config) {
        (_, Some(path)) => read_json::<LayoutParams>(path).map_err(data)?,
        (Some(name), None) => preset(name)
            .ok_or_else(|| usage(format!("unknown preset {name:?}; run `synthlayout presets`")))?
            .params,
        (None, None) => LayoutParams::default(),
    };
    if let Some(seed) = g.seed {
        params.seed = seed;
    }
    if let Some((w, h)) = g.resolution {
        params.image_width = w;
        params.image_height = h;
    }
    params.validate().map_err(data)?;
    Ok(params)
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(data)
}

fn run(cli: Cli) -> Outcome {
    let g = cli.global.clone();
    match cli.command {
        Command::Generate {
            preset,
            config,
            count,
            out,
            no_depth,
            no_query_poses,
        } => {
            let params = layout_params(&g, preset.as_deref(), config.as_deref())?;
            let spec = catalog_spec(&g);
            let catalog = spec.load().map_err(data)?;
            let opts = GenerateOptions {
                count,
                jobs: g.jobs,
                write_depth: !no_depth,
                query_poses: !no_query_poses,
                metrics: MetricsConfig::for_resolution(params.image_width, params.image_height),
            };
            let manifest = generate(&params, &spec, &catalog, &out, &opts).map_err(data)?;
            eprintln!(
                "wrote {} scenes ({} failed) to {}",
                manifest.scenes.len(),
                manifest.failed.len(),
                out.display()
            );
            Ok(())
        }
        Command::Analyze { dir, out, viewpoints } => {
            if !dir.is_dir() {
                return Err(data(anyhow!("{} is not a directory", dir.display())));
            }
            let report = analyze_dir(&dir, &catalog_spec(&g), None, g.jobs).map_err(data)?;
            let out = out.unwrap_or_else(|| dir.join("metrics.json"));
            let vp = viewpoints.unwrap_or_else(|| dir.join("viewpoints.csv"));
            write_text(&out, &to_stable_json(&report).map_err(data)?)?;
            let mut csv = Vec::new();
            report.metrics.viewpoint_hist.write_csv(&mut csv).map_err(data)?;
            fs::write(&vp, csv)
                .with_context(|| format!("writing {}", vp.display()))
                .map_err(data)?;
            eprintln!("analyzed {} scenes", report.scene_files);
            Ok(())
        }
        Command::Search {
            target,
            target_preset,
            preset,
            config,
            budget,
            scenes_per_eval,
            search_resolution,
            out,
        } => {
            let target = match (target, target_preset) {
                (Some(path), _) => read_json::<MetricTarget>(&path).map_err(data)?,
                (None, Some(name)) => MetricTarget::reference_profile(&name)
                    .ok_or_else(|| usage(format!("unknown target preset {name:?}")))?,
                (None, None) => return Err(usage("search needs --target or --target-preset")),
            };
            target.validate().map_err(data)?;
            let base = layout_params(&g, preset.as_deref().or(Some("random_placement")), config.as_deref())?;
            if budget == 0 || scenes_per_eval == 0 {
                return Err(usage("--budget and --scenes-per-eval must be at least 1"));
            }
            let catalog = catalog_spec(&g).load().map_err(data)?;
            let cfg = SearchConfig {
                budget,
                scenes_per_eval,
                seed: g.seed.unwrap_or(0),
                search_resolution: Some(search_resolution),
                final_scenes: scenes_per_eval,
                metrics: MetricsConfig::for_resolution(base.image_width, base.image_height),
                ..Default::default()
            };
            let report = with_jobs(g.jobs, || search(&target, &base, &catalog, &cfg))
                .map_err(data)?
                .map_err(data)?;
            write_text(&out, &to_stable_json(&report).map_err(data)?)?;
            eprintln!(
                "best candidate {} score {:?}, final score {:?}",
                report.best_index,
                report.best().score,
                report.final_score
            );
            Ok(())
        }
        Command::QueryPoses { model, out } => {
            let catalog = catalog_spec(&g).load().map_err(data)?;
            let m = catalog
                .get(&model)
                .map_err(|_| usage(format!("unknown model {model:?}; known: {}", catalog.models().iter().map(|m| m.id.as_str()).collect::<Vec<_>>().join(", "))))?;
            let (w, h) = g.resolution.unwrap_or((320, 240));
            let poses = query_poses(m, w, h, LayoutParams::default().vertical_fov_deg);
            let text = to_stable_json(&poses).map_err(data)?;
            match out {
                Some(p) => write_text(&p, &text),
                None => std::io::stdout().write_all(text.as_bytes()).map_err(data),
            }
        }
        Command::PretrainSim { config, out } => {
            let mut sim: SimFile = match config {
                Some(p) => read_json(&p).map_err(data)?,
                None => SimFile::default(),
            };
            if let Some(seed) = g.seed {
                sim.pretrain.seed = seed;
            }
            let mut params = layout_params(&g, Some(&sim.layout_preset), None)?;
            params.seed = sim.pretrain.seed;
            let catalog = catalog_spec(&g).load().map_err(data)?;
            sim.pretrain.objects = catalog.len();
            let scenes = with_jobs(g.jobs, || visible_models(&params, &catalog, sim.layout_scenes))
                .map_err(data)?;
            let trace = simulate_pretrain(&scenes, &sim.pretrain).map_err(data)?;
            let mut csv = Vec::new();
            trace.write_csv(&mut csv).map_err(data)?;
            fs::write(&out, csv)
                .with_context(|| format!("writing {}", out.display()))
                .map_err(data)?;
            eprintln!("wrote {} steps to {}", trace.rows.len(), out.display());
            Ok(())
        }
        Command::Presets { json } => {
            let list = presets();
            if json {
                let text = to_stable_json(&list).map_err(data)?;
                std::io::stdout().write_all(text.as_bytes()).map_err(data)?;
            } else {
                for p in &list {
                    println!("{:<20} {:<20} {}", p.name, p.title, p.description);
                }
                println!();
                println!("metric targets: {}", MetricTarget::reference_profiles().iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", "));
            }
            Ok(())
        }
    }
}

/// `pretrain-sim` config: simulation settings plus the layout used to
/// produce the scenes' visible objects.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct SimFile {
    #[serde(flatten)]
    pretrain: PretrainConfig,
    layout_preset: String,
    layout_scenes: u64,
}

impl Default for SimFile {
    fn default() -> Self {
        SimFile {
            pretrain: PretrainConfig::default(),
            layout_preset: "random_placement".into(),
            layout_scenes: 200,
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
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
