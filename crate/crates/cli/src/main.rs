use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use grasp_core::config::SceneConfig;
use grasp_core::d2nt::depth_to_normals;
use grasp_core::dataset_io::{
    read_depth_pfm, read_intrinsics, read_view, to_stable_json, write_json, write_normals_pfm,
};
use grasp_core::grasp::generate_dataset;
use grasp_core::pipeline::{
    bench_dataset, evaluate_dataset, heatmap_path_for_view, read_heatmap, run_pipeline, MaskSource,
    PipelineConfig, PredictorSpec,
};
use grasp_core::predict::{Predictor, DEFAULT_THRESHOLD};
use grasp_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "graspkit",
    version,
    about = "Synthetic grasp dataset generation and grasp inference"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render and label a camera grid around the scene.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Total views; split over the configured z rows when it divides evenly,
        /// otherwise a single row.
        #[arg(long)]
        views: Option<usize>,
        #[arg(long)]
        stride: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Resolution as WxH; intrinsics keep their field of view.
        #[arg(long, value_parser = parse_resolution)]
        res: Option<(usize, usize)>,
    },
    /// Estimate normals from a depth PFM.
    Normals {
        #[arg(long)]
        depth: PathBuf,
        /// Intrinsics JSON, or any JSON with an `intrinsics` field such as view.json.
        #[arg(long)]
        intrinsics: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pick a grasp on one view and write the command.
    Infer {
        #[arg(long)]
        view: PathBuf,
        /// heuristic, oracle or heatmap:PATH
        #[arg(long)]
        predictor: String,
        /// 8-bit PNG, non-zero = object. Defaults to the view's segmentation.
        #[arg(long)]
        mask: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a predictor against a dataset's labels.
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        predictor: String,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long)]
        report: PathBuf,
    },
    /// Time the pipeline stages on every dataset view; JSON on stdout.
    Bench {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 1)]
        repeat: usize,
    },
}

fn parse_resolution(s: &str) -> std::result::Result<(usize, usize), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or("expected WxH")?;
    let w: usize = w.parse().map_err(|_| format!("bad width {w:?}"))?;
    let h: usize = h.parse().map_err(|_| format!("bad height {h:?}"))?;
    if w == 0 || h == 0 {
        return Err("resolution must be positive".into());
    }
    Ok((w, h))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate {
            config,
            out,
            views,
            stride,
            seed,
            res,
        } => {
            let cfg = SceneConfig::load(&config)?;
            let base = config.parent().unwrap_or(Path::new("."));
            let scene = cfg.build_scene(base)?;
            let mut opts = cfg.generate_options();
            if let Some(n) = views {
                if n == 0 {
                    return Err(Error::Config("--views must be >= 1".into()));
                }
                if n % opts.grid.z_count == 0 {
                    opts.grid.x_count = n / opts.grid.z_count;
                } else {
                    opts.grid.x_count = n;
                    opts.grid.z_count = 1;
                }
            }
            if let Some(s) = stride {
                opts.stride = s;
            }
            if let Some(s) = seed {
                opts.grid.seed = s;
            }
            if let Some((w, h)) = res {
                opts.intrinsics = opts.intrinsics.rescaled(w, h)?;
            }
            let manifest = generate_dataset(&scene, &opts, &out)?;
            eprintln!("wrote {} views to {}", manifest.views.len(), out.display());
        }
        Command::Normals {
            depth,
            intrinsics,
            out,
        } => {
            let intr = read_intrinsics(&intrinsics)?;
            let depth = read_depth_pfm(&depth)?;
            write_normals_pfm(&out, &depth_to_normals(&depth, &intr)?)?;
        }
        Command::Infer {
            view,
            predictor,
            mask,
            threshold,
            out,
        } => {
            let spec: PredictorSpec = predictor.parse()?;
            let loaded = read_view(&view)?;
            let predictor = match &spec {
                PredictorSpec::Heatmap(p) => {
                    Predictor::Heatmap(read_heatmap(&heatmap_path_for_view(p, &view))?)
                }
                other => other.resolve(&loaded)?,
            };
            let mask = match mask {
                Some(p) => MaskSource::from_file(&p)?,
                None => MaskSource::Segmentation(loaded.target_id),
            };
            let config = PipelineConfig {
                threshold,
                ..Default::default()
            };
            let run = run_pipeline(&loaded.view, &mask, &predictor, &config)?;
            write_json(&out, &run.command)?;
        }
        Command::Eval {
            dataset,
            predictor,
            threshold,
            report,
        } => {
            let spec: PredictorSpec = predictor.parse()?;
            let r = evaluate_dataset(&dataset, &spec, threshold)?;
            write_json(&report, &r)?;
            eprintln!(
                "precision {:.4} recall {:.4} iou {:.4} (pooled over {} views)",
                r.pooled.precision,
                r.pooled.recall,
                r.pooled.iou,
                r.views.len()
            );
        }
        Command::Bench { dataset, repeat } => {
            print!("{}", to_stable_json(&bench_dataset(&dataset, repeat)?)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 3 } else { 2 })
        }
    }
}
