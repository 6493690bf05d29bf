use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use gamma_saliency::fixation::{run_cycle, FixationTrace};
use gamma_saliency::io::manifest::{parse_box, DatasetManifest};
use gamma_saliency::io::render::{render_heatmap, render_trace};
use gamma_saliency::io::tables::{format_eval_csv, format_roc_csv, format_trace, EvalRow};
use gamma_saliency::io::{
    load_fixations, load_image, load_manifest, read_feature_stack, read_model, read_saliency_map,
    save_image, write_model, write_tensor, TraceRecord,
};
use gamma_saliency::metrics::{roc_curve, RocMode};
use gamma_saliency::saliency::prepare_image;
use gamma_saliency::topdown::{learn_weights, search, LabeledBox};
use gamma_saliency::{
    compute_saliency, foveate, run_bench, BBox, Error, FeatureMapStack, Metric, RunConfig,
};
use rayon::prelude::*;

use crate::{
    BenchArgs, Cli, Command, ConfigArgs, EvalArgs, FoveateArgs, SaliencyArgs, ScanpathArgs,
    SearchArgs, TopdownCommand, TrainArgs,
};

struct Ctx {
    out_dir: PathBuf,
}

impl Ctx {
    /// Resolves an output path under `--out-dir`, creating parent directories.
    fn out(&self, p: &Path) -> Result<PathBuf> {
        let path = self.out_dir.join(p);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
        Ok(path)
    }

    fn out_dir(&self, p: &Path) -> Result<PathBuf> {
        let path = self.out_dir.join(p);
        fs::create_dir_all(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(path)
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    let cfg = match path {
        Some(p) => {
            if !p.is_file() {
                return Err(Error::NotFound(p.to_path_buf()).into());
            }
            RunConfig::load(p)?
        }
        None => RunConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Error::invalid("--jobs must be >= 1").into());
        }
        // a second initialization only happens in tests and is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let ctx = Ctx {
        out_dir: cli.out_dir,
    };
    match cli.command {
        Command::Saliency(a) => saliency(&ctx, a),
        Command::Foveate(a) => foveate_cmd(&ctx, a),
        Command::Scanpath(a) => scanpath(&ctx, a),
        Command::Topdown(TopdownCommand::Train(a)) => train(&ctx, a),
        Command::Topdown(TopdownCommand::Search(a)) => search_cmd(&ctx, a),
        Command::Eval(a) => eval(&ctx, a),
        Command::Bench(a) => bench(&ctx, a),
        Command::Config(a) => config(&ctx, a),
    }
}

fn saliency(ctx: &Ctx, a: SaliencyArgs) -> Result<()> {
    let cfg = load_config(a.params.as_deref())?;
    let params = cfg.saliency_params()?;
    let one = |image_path: &Path, map_path: &Path, png_path: Option<&Path>| -> Result<()> {
        let image = load_image(image_path)?;
        let map = compute_saliency(&image, &params)?;
        write_tensor(map_path, std::slice::from_ref(map.values()))?;
        if let Some(png) = png_path {
            let working;
            let underlay = match a.overlay {
                Some(alpha) => {
                    working = prepare_image(&image, params.resize);
                    Some((&working, alpha))
                }
                None => None,
            };
            save_image(png, &render_heatmap(map.values(), underlay)?)?;
        }
        Ok(())
    };
    if let Some(manifest) = &a.manifest {
        let m = load_manifest(manifest)?;
        let maps = ctx.out_dir(a.out_map.as_deref().unwrap_or(Path::new("maps")))?;
        let pngs = match &a.out_png {
            Some(d) => Some(ctx.out_dir(d)?),
            None => None,
        };
        m.entries.par_iter().try_for_each(|e| {
            let png = pngs.as_ref().map(|d| d.join(format!("{}.png", e.id)));
            one(&e.image, &maps.join(format!("{}.gsal", e.id)), png.as_deref())
                .with_context(|| format!("image `{}`", e.id))
        })?;
        println!("wrote {} maps to {}", m.len(), maps.display());
        return Ok(());
    }
    let input = a.input.as_deref().expect("clap requires --input");
    let map = ctx.out(a.out_map.as_deref().unwrap_or(Path::new("saliency.gsal")))?;
    let png = match &a.out_png {
        Some(p) => Some(ctx.out(p)?),
        None => None,
    };
    one(input, &map, png.as_deref())?;
    println!("wrote {}", map.display());
    Ok(())
}

fn foveate_cmd(ctx: &Ctx, a: FoveateArgs) -> Result<()> {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(r) = a.resolution {
        cfg.foveation_resolution = r;
    }
    if let Some(l) = a.levels {
        cfg.foveation_levels = l;
    }
    let params = cfg.foveation_params()?;
    let image = load_image(&a.input)?;
    let out = foveate(&image, (a.x, a.y), &params)?.to_rgb()?;
    let path = ctx.out(&a.out)?;
    save_image(&path, &out)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn save_glimpses(dir: &Path, cycle: &gamma_saliency::fixation::CycleResult) -> Result<()> {
    for (i, g) in cycle.glimpses.iter().enumerate() {
        save_image(dir.join(format!("fix{:02}_patch.png", i + 1)), &g.patch)?;
        for (j, frame) in g.scan.frames.iter().enumerate() {
            save_image(dir.join(format!("fix{:02}_frame{:02}.png", i + 1, j + 1)), frame)?;
        }
    }
    Ok(())
}

/// Writes the trace in input-image pixels and optionally the annotated image.
fn write_trace_outputs(
    ctx: &Ctx,
    image: &image::RgbImage,
    trace: &FixationTrace,
    trace_path: &Path,
    annotated: Option<&Path>,
) -> Result<FixationTrace> {
    let t = trace.rescaled(image.width() as usize, image.height() as usize);
    let path = ctx.out(trace_path)?;
    write_text(&path, &format_trace(&TraceRecord::from(&t)))?;
    if let Some(p) = annotated {
        save_image(ctx.out(p)?, &render_trace(image, &t))?;
    }
    Ok(t)
}

fn scanpath(ctx: &Ctx, a: ScanpathArgs) -> Result<()> {
    let cfg = load_config(a.config.as_deref())?.engine_config()?;
    let image = load_image(&a.input)?;
    let cycle = run_cycle(&image, &cfg)?;
    let t = write_trace_outputs(ctx, &image, &cycle.trace, &a.out_trace, a.annotated_png.as_deref())?;
    if let Some(d) = &a.out_frames {
        save_glimpses(&ctx.out_dir(d)?, &cycle)?;
    }
    println!("{} fixation(s), stopped: {}", t.fixations.len(), t.stop_reason);
    Ok(())
}

fn features_scale(stack: &FeatureMapStack, explicit: Option<f64>, image_width: u32) -> f64 {
    explicit.unwrap_or(image_width as f64 / stack.dims().0 as f64)
}

fn feature_box(b: &BBox, scale: f64, (fw, fh): (usize, usize)) -> BBox {
    BBox::new(
        (b.x0 as f64 / scale).floor() as usize,
        (b.y0 as f64 / scale).floor() as usize,
        ((b.x1 as f64 / scale).ceil() as usize).min(fw),
        ((b.y1 as f64 / scale).ceil() as usize).min(fh),
    )
}

fn training_set(m: &DatasetManifest, features_dir: &Path) -> Result<Vec<(FeatureMapStack, LabeledBox)>> {
    let per_entry: Vec<Vec<(FeatureMapStack, LabeledBox)>> = m
        .entries
        .par_iter()
        .map(|e| {
            let class = e.class.clone().ok_or_else(|| {
                Error::invalid(format!("manifest line {}: entry `{}` has no class", e.line, e.id))
            })?;
            if e.boxes.is_empty() {
                return Err(Error::invalid(format!(
                    "manifest line {}: entry `{}` has no boxes",
                    e.line, e.id
                ))
                .into());
            }
            let tensor = features_dir.join(format!("{}.gsal", e.id));
            if !tensor.is_file() {
                return Err(Error::NotFound(tensor).into());
            }
            let (iw, _) = image::image_dimensions(&e.image).map_err(Error::from)?;
            let probe = read_feature_stack(&tensor, 1.0)?;
            let scale = m
                .spatial_scale
                .unwrap_or_else(|| features_scale(&probe, None, iw));
            let stack = FeatureMapStack::new(probe.maps().to_vec(), e.id.clone(), scale)?;
            let dims = stack.dims();
            Ok(e.boxes
                .iter()
                .map(|b| {
                    (
                        stack.clone(),
                        LabeledBox {
                            image_id: e.id.clone(),
                            class_id: class.clone(),
                            bbox: feature_box(b, scale, dims),
                        },
                    )
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(per_entry.into_iter().flatten().collect())
}

fn train(ctx: &Ctx, a: TrainArgs) -> Result<()> {
    let cfg = load_config(a.config.as_deref())?;
    let m = load_manifest(&a.manifest)?;
    if m.is_empty() {
        return Err(Error::invalid("training manifest has no entries").into());
    }
    let set = training_set(&m, &a.features_dir)?;
    let samples: Vec<_> = set.iter().map(|(s, b)| (s, b)).collect();
    let kernel = cfg.topdown_stack()?;
    let (model, report) = learn_weights(&samples, &kernel, cfg.topdown_alpha)?;
    let path = ctx.out(&a.out_model)?;
    write_model(&path, &model)?;
    for &(i, n) in &report.floored {
        eprintln!(
            "note: `{}` map {n}: no saliency outside the box, floor applied",
            samples[i].1.image_id
        );
    }
    println!(
        "trained {} class(es) on {} box(es), {} map(s); wrote {}",
        model.classes.len(),
        samples.len(),
        model.map_count(),
        path.display()
    );
    Ok(())
}

fn search_cmd(ctx: &Ctx, a: SearchArgs) -> Result<()> {
    let cfg = load_config(a.config.as_deref())?.engine_config()?;
    let image = load_image(&a.image)?;
    let model = read_model(&a.model)?;
    if !a.features.is_file() {
        return Err(Error::NotFound(a.features.clone()).into());
    }
    let probe = read_feature_stack(&a.features, 1.0)?;
    let scale = features_scale(&probe, a.spatial_scale, image.width());
    let features = FeatureMapStack::new(probe.maps().to_vec(), a.features.display().to_string(), scale)?;
    let target = match &a.target {
        Some(s) => parse_box(s).map_err(Error::invalid)?,
        None => BBox::new(0, 0, 0, 0),
    };
    let outcome = search(&image, &features, &model, &a.class, &target, &cfg)?;
    let t = write_trace_outputs(
        ctx,
        &image,
        &outcome.cycle.trace,
        &a.out_trace,
        a.annotated_png.as_deref(),
    )?;
    println!("{} fixation(s), stopped: {}", t.fixations.len(), t.stop_reason);
    if a.target.is_some() {
        if outcome.found {
            println!("target found after {} saccade(s)", outcome.saccades);
        } else {
            println!("target not found ({} saccades counted)", outcome.saccades);
        }
    }
    Ok(())
}

fn parse_metrics(s: &str) -> Result<Vec<Metric>> {
    let ms = s
        .split(',')
        .map(|m| m.trim().parse::<Metric>())
        .collect::<gamma_saliency::Result<Vec<_>>>()?;
    if ms.is_empty() {
        return Err(Error::invalid("no metrics requested").into());
    }
    Ok(ms)
}

fn eval(ctx: &Ctx, a: EvalArgs) -> Result<()> {
    let cfg = load_config(a.config.as_deref())?;
    let metrics = parse_metrics(&a.metrics)?;
    let m = load_manifest(&a.fixations)?;
    let settings = cfg.eval_settings(m.px_per_degree);
    let roc_dir = match &a.out_roc {
        Some(d) => Some(ctx.out_dir(d)?),
        None => None,
    };
    let per_image: Vec<Vec<EvalRow>> = m
        .entries
        .par_iter()
        .map(|e| -> Result<Vec<EvalRow>> {
            let fix_path = e.fixations.as_ref().ok_or_else(|| {
                Error::invalid(format!("manifest line {}: `{}` has no fixation file", e.line, e.id))
            })?;
            let map_path = a.maps_dir.join(format!("{}.gsal", e.id));
            if !map_path.is_file() {
                return Err(Error::NotFound(map_path).into());
            }
            let (w, h) = image::image_dimensions(&e.image).map_err(Error::from)?;
            let (w, h) = (w as usize, h as usize);
            let map = read_saliency_map(&map_path)?.into_values();
            let map = if map.dims() == (w, h) {
                map
            } else {
                map.resize_bilinear(w, h)
            };
            let fix = load_fixations(fix_path, &e.id, w, h)?;
            if let Some(dir) = &roc_dir {
                let curve = roc_curve(&map, &fix, RocMode::Judd)?;
                write_text(&dir.join(format!("{}.csv", e.id)), &format_roc_csv(&curve))?;
            }
            metrics
                .iter()
                .map(|&metric| {
                    let s = gamma_saliency::metrics::evaluate(&map, &fix, metric, &settings)?;
                    Ok(EvalRow {
                        image_id: e.id.clone(),
                        metric,
                        value: s.value,
                        degenerate: s.degenerate,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let rows: Vec<EvalRow> = per_image.into_iter().flatten().collect();
    let path = ctx.out(&a.out_csv)?;
    write_text(&path, &format_eval_csv(&rows, &settings))?;
    for metric in &metrics {
        let vals: Vec<f64> = rows.iter().filter(|r| r.metric == *metric).map(|r| r.value).collect();
        if !vals.is_empty() {
            println!("{metric}\t{:.4}", vals.iter().sum::<f64>() / vals.len() as f64);
        }
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn bench(ctx: &Ctx, a: BenchArgs) -> Result<()> {
    let cfg = load_config(a.config.as_deref())?;
    let paths: Vec<PathBuf> = match &a.manifest {
        Some(p) => load_manifest(p)?.entries.into_iter().map(|e| e.image).collect(),
        None => a.input.clone(),
    };
    let images = paths.iter().map(load_image).collect::<gamma_saliency::Result<Vec<_>>>()?;
    let report = run_bench(&images, &cfg.saliency_params()?, a.repetitions)?;
    let path = ctx.out(&a.out_csv)?;
    write_text(&path, &report.to_csv())?;
    println!("{}", report.summary());
    for s in &report.stages {
        println!("{:<13}{:.6} s (sd {:.6})", s.stage, s.mean_s, s.stddev_s);
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn config(ctx: &Ctx, a: ConfigArgs) -> Result<()> {
    let path = ctx.out(&a.out)?;
    RunConfig::default().save(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}
