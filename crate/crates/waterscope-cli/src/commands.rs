use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde_json::json;

use waterscope::eval::{
    composite_loss, ConfusionMatrix, MetricsReport, DEFAULT_LAND_WEIGHT, DEFAULT_WATER_WEIGHT,
};
use waterscope::formats;
use waterscope::index::{compute_index, IndexKind, IndexMap};
use waterscope::palette::{self, Palette, PaletteKind, Rgb};
use waterscope::render::{render_map, render_mask_overlay, RenderOptions};
use waterscope::scene::{
    load_scene, sample_water_biased_patches, Scene, DEFAULT_MIN_WATER_FRACTION,
    DEFAULT_PATCH_COUNT, DEFAULT_PATCH_SIZE,
};
use waterscope::segment::{
    load_external_mask, threshold_fixed, threshold_otsu, BinaryMask, DEFAULT_HISTOGRAM_BINS,
    PRESET_MNDWI, PRESET_NDWI, PRESET_ZERO,
};
use waterscope::stats::{
    depth_profile, homogeneity_fractions, local_sigma, masked_stats, SigmaMap,
    DEFAULT_PROFILE_BINS, DEFAULT_SIGMA_WINDOW,
};
use waterscope::synth::{self, SynthOptions};

use crate::{usage, CmdError, Ctx};

fn emit(ctx: &Ctx, machine: serde_json::Value, human: Vec<String>) {
    if ctx.pretty {
        for line in human {
            println!("{line}");
        }
    } else {
        println!("{machine}");
    }
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

/// Loads a mask PNG at whatever size the file itself declares.
fn load_mask_file(path: &Path) -> Result<BinaryMask, CmdError> {
    let (_, w, h) = formats::read_gray8_png(path)?;
    Ok(load_external_mask(path, w, h)?)
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    /// Scene manifest JSON
    pub manifest: PathBuf,

    /// ndwi, mndwi, turbidity, ndci, ndosi or rel_bathymetry
    #[arg(long = "index", value_name = "KIND")]
    pub kind: IndexKind,

    /// Restrict the computation to this water mask
    #[arg(long, value_name = "PNG")]
    pub mask: Option<PathBuf>,

    /// Output float TIFF; a JSON sidecar lands next to it
    #[arg(long, value_name = "TIFF")]
    pub out: PathBuf,
}

pub fn index(args: IndexArgs, ctx: &Ctx) -> Result<(), CmdError> {
    let scene = load_scene(&args.manifest)?;
    let mask = match &args.mask {
        Some(p) => Some(load_external_mask(p, scene.width(), scene.height())?),
        None => None,
    };
    let map = compute_index(&scene, args.kind, mask.as_ref())?;
    formats::write_index_map(&args.out, &map)?;
    let stats = masked_stats(&map, None)?;
    emit(
        ctx,
        json!({
            "kind": args.kind.as_str(),
            "out": path_str(&args.out),
            "stats": stats,
            "summary": stats.summary(),
        }),
        vec![format!(
            "{}: {} over {} px, range [{:.4}, {:.4}] -> {}",
            args.kind,
            stats.summary(),
            stats.count,
            stats.min,
            stats.max,
            args.out.display()
        )],
    );
    Ok(())
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Fixed,
    Otsu,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PresetArg {
    /// Threshold 0.0
    Zero,
    /// Threshold 0.2
    Ndwi,
    /// Threshold 0.35
    Mndwi,
}

impl PresetArg {
    fn value(self) -> f64 {
        match self {
            PresetArg::Zero => PRESET_ZERO,
            PresetArg::Ndwi => PRESET_NDWI,
            PresetArg::Mndwi => PRESET_MNDWI,
        }
    }
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    /// Index map TIFF written by `index`
    pub map: PathBuf,

    #[arg(long, value_enum)]
    pub method: MethodArg,

    /// Threshold for --method fixed
    #[arg(long, conflicts_with = "preset")]
    pub t: Option<f64>,

    /// Named fixed threshold
    #[arg(long, value_enum)]
    pub preset: Option<PresetArg>,

    /// Histogram bins for --method otsu
    #[arg(long)]
    pub bins: Option<usize>,

    /// Output mask PNG; a JSON sidecar lands next to it
    #[arg(long, value_name = "PNG")]
    pub out: PathBuf,
}

pub fn segment(args: SegmentArgs, ctx: &Ctx) -> Result<(), CmdError> {
    let map = formats::read_index_map(&args.map)?;
    let mask = match args.method {
        MethodArg::Fixed => {
            if args.bins.is_some() {
                return Err(usage("--bins only applies to --method otsu"));
            }
            let t = match (args.t, args.preset) {
                (Some(t), None) => t,
                (None, Some(p)) => p.value(),
                _ => return Err(usage("--method fixed needs --t or --preset")),
            };
            threshold_fixed(&map, t)?
        }
        MethodArg::Otsu => {
            if args.t.is_some() || args.preset.is_some() {
                return Err(usage("--t and --preset only apply to --method fixed"));
            }
            let bins = args.bins.or(ctx.cfg.bins).unwrap_or(DEFAULT_HISTOGRAM_BINS);
            if bins == 0 {
                return Err(usage("--bins must be at least 1"));
            }
            let (mask, _) = threshold_otsu(&map, bins)?;
            mask
        }
    };
    formats::write_mask(&args.out, &mask)?;
    let provenance = mask.provenance();
    let fraction = mask.water_fraction()?;
    let threshold_note = match provenance.threshold {
        Some(t) => format!("threshold {t:.6} "),
        None => String::new(),
    };
    emit(
        ctx,
        json!({
            "out": path_str(&args.out),
            "provenance": provenance,
            "water_fraction": fraction,
            "width": mask.width(),
            "height": mask.height(),
        }),
        vec![format!(
            "{} {}-> water {:.2}% of {} valid px -> {}",
            provenance.method,
            threshold_note,
            fraction * 100.0,
            mask.valid_count(),
            args.out.display()
        )],
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Index map TIFF
    pub map: PathBuf,

    /// Water mask PNG
    pub mask: PathBuf,

    /// Compute the local variability map
    #[arg(long)]
    pub sigma: bool,

    /// Window edge length for --sigma (odd, at least 3)
    #[arg(long, value_name = "N")]
    pub window: Option<usize>,

    /// Bin the index against this relative depth map
    #[arg(long, value_name = "TIFF", conflicts_with = "sigma")]
    pub depth_profile: Option<PathBuf>,

    /// Bin count for --depth-profile
    #[arg(long, value_name = "N")]
    pub bins: Option<usize>,

    /// Linear factor from relative depth to physical units
    #[arg(long, value_name = "S")]
    pub depth_scale: Option<f64>,

    /// Output TIFF (--sigma) or pair CSV (--depth-profile)
    #[arg(long)]
    pub out: PathBuf,

    /// Bin summary JSON for --depth-profile; defaults next to --out
    #[arg(long, value_name = "JSON")]
    pub bins_out: Option<PathBuf>,
}

pub fn stats(args: StatsArgs, ctx: &Ctx) -> Result<(), CmdError> {
    let map = formats::read_index_map(&args.map)?;
    let mask = load_external_mask(&args.mask, map.grid.width(), map.grid.height())?;
    match (&args.sigma, &args.depth_profile) {
        (true, None) => sigma_stats(&args, &map, &mask, ctx),
        (false, Some(depth_path)) => profile_stats(&args, depth_path, &map, &mask, ctx),
        _ => Err(usage("pick one of --sigma or --depth-profile")),
    }
}

fn sigma_stats(
    args: &StatsArgs,
    map: &IndexMap,
    mask: &BinaryMask,
    ctx: &Ctx,
) -> Result<(), CmdError> {
    let window = args
        .window
        .or(ctx.cfg.window)
        .unwrap_or(DEFAULT_SIGMA_WINDOW);
    if window < 3 || window.is_multiple_of(2) {
        return Err(usage(format!(
            "--window must be odd and at least 3, got {window}"
        )));
    }
    let sigma = local_sigma(map, mask, window)?;
    formats::write_sigma_map(&args.out, &sigma)?;
    let fractions = homogeneity_fractions(&sigma)?;
    emit(
        ctx,
        json!({
            "out": path_str(&args.out),
            "source_kind": sigma.source_kind.as_str(),
            "window": window,
            "fractions": fractions,
        }),
        vec![format!(
            "window {}: stable {:.2}%  transitional {:.2}%  variable {:.2}%  ({} px) -> {}",
            window,
            fractions.stable * 100.0,
            fractions.transitional * 100.0,
            fractions.variable * 100.0,
            fractions.count,
            args.out.display()
        )],
    );
    Ok(())
}

fn profile_stats(
    args: &StatsArgs,
    depth_path: &Path,
    map: &IndexMap,
    mask: &BinaryMask,
    ctx: &Ctx,
) -> Result<(), CmdError> {
    let bins = args.bins.or(ctx.cfg.bins).unwrap_or(DEFAULT_PROFILE_BINS);
    if bins == 0 {
        return Err(usage("--bins must be at least 1"));
    }
    let depth = formats::read_index_map(depth_path)?;
    let scale = args.depth_scale.or(ctx.cfg.depth_scale);
    let profile = depth_profile(map, &depth, mask, bins, scale)?;
    let bins_out = args
        .bins_out
        .clone()
        .unwrap_or_else(|| args.out.with_extension("json"));
    formats::write_profile_csv(&args.out, &profile)?;
    formats::write_profile_bins(&bins_out, &profile)?;
    emit(
        ctx,
        json!({
            "out": path_str(&args.out),
            "bins_out": path_str(&bins_out),
            "kind": profile.index_kind.as_str(),
            "pairs": profile.pairs.len(),
            "bins": profile.bins.len(),
        }),
        vec![format!(
            "{}: {} pairs into {} bins -> {}, {}",
            profile.index_kind,
            profile.pairs.len(),
            profile.bins.len(),
            args.out.display(),
            bins_out.display()
        )],
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predicted mask then reference mask; just the reference with --prob
    #[arg(value_name = "MASK", num_args = 1..=2)]
    pub masks: Vec<PathBuf>,

    /// Predicted probability TIFF scored by the training loss
    #[arg(long, value_name = "TIFF", requires = "loss")]
    pub prob: Option<PathBuf>,

    /// Evaluate the composite loss instead of mask agreement
    #[arg(long, requires = "prob")]
    pub loss: bool,

    /// Cross-entropy weight for land pixels
    #[arg(long, value_name = "W")]
    pub land_weight: Option<f64>,

    /// Cross-entropy weight for water pixels
    #[arg(long, value_name = "W")]
    pub water_weight: Option<f64>,
}

pub fn eval(args: EvalArgs, ctx: &Ctx) -> Result<(), CmdError> {
    if let Some(prob_path) = &args.prob {
        let [reference] = args.masks.as_slice() else {
            return Err(usage("--prob takes exactly one reference mask"));
        };
        let land = args
            .land_weight
            .or(ctx.cfg.land_weight)
            .unwrap_or(DEFAULT_LAND_WEIGHT);
        let water = args
            .water_weight
            .or(ctx.cfg.water_weight)
            .unwrap_or(DEFAULT_WATER_WEIGHT);
        if land <= 0.0 || water <= 0.0 {
            return Err(usage("class weights must be positive"));
        }
        let pred = formats::read_probability_tiff(prob_path)?;
        let reference = load_mask_file(reference)?;
        let loss = composite_loss(&pred, &reference, land, water)?;
        emit(
            ctx,
            serde_json::to_value(loss).expect("loss serializes"),
            vec![format!(
                "total {:.6}  ce {:.6}  dice {:.6}  (weights {}:{})",
                loss.total, loss.ce, loss.dice, land, water
            )],
        );
        return Ok(());
    }

    let [pred, reference] = args.masks.as_slice() else {
        return Err(usage("expected a predicted mask and a reference mask"));
    };
    if args.land_weight.is_some() || args.water_weight.is_some() {
        return Err(usage("class weights only apply to --loss"));
    }
    let pred = load_mask_file(pred)?;
    let reference = load_mask_file(reference)?;
    let matrix = ConfusionMatrix::from_masks(&pred, &reference)?;
    let metrics = matrix.metrics()?;
    emit(
        ctx,
        serde_json::to_value(metrics).expect("metrics serialize"),
        metrics_table(&matrix, &metrics),
    );
    Ok(())
}

fn metrics_table(matrix: &ConfusionMatrix, metrics: &MetricsReport) -> Vec<String> {
    let pct = |v: Option<f64>| match v {
        Some(v) => format!("{:.2}%", v * 100.0),
        None => "n/a".into(),
    };
    vec![
        format!(
            "tp {}  fp {}  fn {}  tn {}",
            matrix.tp, matrix.fp, matrix.fn_, matrix.tn
        ),
        format!("accuracy     {}", pct(metrics.accuracy)),
        format!("precision    {}", pct(metrics.precision)),
        format!("recall       {}", pct(metrics.recall)),
        format!("specificity  {}", pct(metrics.specificity)),
        format!("iou          {}", pct(metrics.iou)),
        format!("dice         {}", pct(metrics.dice)),
    ]
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Scene manifest JSON
    pub manifest: PathBuf,

    /// Water mask PNG at scene resolution
    pub mask: PathBuf,

    /// Patches to draw
    #[arg(long, value_name = "N")]
    pub count: Option<usize>,

    /// Patch edge length in pixels
    #[arg(long, value_name = "PX")]
    pub size: Option<usize>,

    /// Minimum water fraction per patch
    #[arg(long, value_name = "FRAC")]
    pub min_water: Option<f64>,

    #[arg(long, value_name = "SEED")]
    pub seed: Option<u64>,

    /// Draw budget before giving up on the remaining patches
    #[arg(long, value_name = "N")]
    pub max_attempts: Option<usize>,

    /// Also write the patch list here
    #[arg(long, value_name = "JSON")]
    pub out: Option<PathBuf>,
}

pub fn sample(args: SampleArgs, ctx: &Ctx) -> Result<(), CmdError> {
    let count = args.count.or(ctx.cfg.count).unwrap_or(DEFAULT_PATCH_COUNT);
    let size = args.size.or(ctx.cfg.size).unwrap_or(DEFAULT_PATCH_SIZE);
    let min_water = args
        .min_water
        .or(ctx.cfg.min_water)
        .unwrap_or(DEFAULT_MIN_WATER_FRACTION);
    let seed = args.seed.or(ctx.cfg.seed).unwrap_or(0);
    let max_attempts = args.max_attempts.or(ctx.cfg.max_attempts);
    if size == 0 {
        return Err(usage("--size must be at least 1"));
    }
    if !(0.0..=1.0).contains(&min_water) {
        return Err(usage("--min-water must be within [0, 1]"));
    }

    let scene = load_scene(&args.manifest)?;
    let mask = load_external_mask(&args.mask, scene.width(), scene.height())?;
    let sampled =
        sample_water_biased_patches(&scene, &mask, count, size, min_water, seed, max_attempts)?;
    if sampled.shortfall {
        eprintln!(
            "warning: only {} of {count} patches met the water minimum",
            sampled.patches.len()
        );
    }
    if let Some(out) = &args.out {
        formats::write_patches(out, &sampled)?;
    }
    let mut human = vec![format!(
        "{} patches (size {size}, min water {:.2}%, seed {seed}){}",
        sampled.patches.len(),
        min_water * 100.0,
        if sampled.shortfall { ", shortfall" } else { "" }
    )];
    for (i, p) in sampled.patches.iter().enumerate() {
        human.push(format!("  {i}: x={} y={}", p.origin_x, p.origin_y));
    }
    emit(
        ctx,
        serde_json::to_value(&sampled).expect("patches serialize"),
        human,
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Float map TIFF (index or variability), unless --overlay
    pub map: Option<PathBuf>,

    /// Built-in palette kind or a palette JSON path
    #[arg(long, value_name = "KIND|JSON")]
    pub palette: Option<String>,

    /// Append the colorbar strip
    #[arg(long)]
    pub colorbar: bool,

    /// Integer pixel upscaling
    #[arg(long, value_name = "N")]
    pub scale: Option<usize>,

    /// Caption drawn above the map
    #[arg(long)]
    pub title: Option<String>,

    /// Blend a water mask over the scene's true-color composite
    #[arg(long, requires = "scene", requires = "mask")]
    pub overlay: bool,

    /// Scene manifest for --overlay
    #[arg(long, value_name = "MANIFEST")]
    pub scene: Option<PathBuf>,

    /// Water mask PNG for --overlay
    #[arg(long, value_name = "PNG")]
    pub mask: Option<PathBuf>,

    /// Overlay water color as #RRGGBB
    #[arg(long, value_name = "HEX")]
    pub water_color: Option<String>,

    /// Overlay blend strength in [0, 1]
    #[arg(long, value_name = "A")]
    pub alpha: Option<f64>,

    #[arg(long, value_name = "PNG")]
    pub out: PathBuf,
}

enum MapFile {
    Index(IndexMap),
    Sigma(SigmaMap),
}

fn load_map_file(path: &Path) -> Result<MapFile, CmdError> {
    match formats::read_index_map(path) {
        Ok(map) => Ok(MapFile::Index(map)),
        Err(first) => match formats::read_sigma_map(path) {
            Ok(map) => Ok(MapFile::Sigma(map)),
            Err(_) => Err(first.into()),
        },
    }
}

fn resolve_palette(spec: &str) -> Result<(Palette, Option<PaletteKind>), CmdError> {
    if let Ok(kind) = spec.parse::<PaletteKind>() {
        return Ok((palette::builtin(kind), Some(kind)));
    }
    Ok((Palette::from_file(Path::new(spec))?, None))
}

pub fn render(args: RenderArgs, ctx: &Ctx) -> Result<(), CmdError> {
    if args.overlay {
        return render_overlay(&args, ctx);
    }
    let Some(map_path) = &args.map else {
        return Err(usage("render needs a map file (or --overlay)"));
    };
    let Some(palette_spec) = &args.palette else {
        return Err(usage("render needs --palette"));
    };
    if args.water_color.is_some() || args.alpha.is_some() {
        return Err(usage("--water-color and --alpha only apply to --overlay"));
    }

    let map = load_map_file(map_path)?;
    let (palette, builtin_kind) = resolve_palette(palette_spec)?;
    let natural = match &map {
        MapFile::Index(m) => PaletteKind::Index(m.kind),
        MapFile::Sigma(_) => PaletteKind::Sigma,
    };
    if let Some(kind) = builtin_kind {
        if kind != natural {
            eprintln!("warning: palette '{kind}' does not match map kind '{natural}'");
        }
    }

    let opts = RenderOptions {
        scale: args.scale.or(ctx.cfg.scale).unwrap_or(1),
        colorbar: args.colorbar || ctx.cfg.colorbar.unwrap_or(false),
        title: args.title.clone(),
    };
    if opts.scale == 0 {
        return Err(usage("--scale must be at least 1"));
    }
    let canvas = match &map {
        MapFile::Index(m) => render_map(m, &palette, &opts)?,
        MapFile::Sigma(m) => render_map(m, &palette, &opts)?,
    };
    canvas.write_png(&args.out)?;
    emit(
        ctx,
        json!({
            "out": path_str(&args.out),
            "width": canvas.width(),
            "height": canvas.height(),
        }),
        vec![format!(
            "wrote {} ({}x{})",
            args.out.display(),
            canvas.width(),
            canvas.height()
        )],
    );
    Ok(())
}

const DEFAULT_OVERLAY_COLOR: &str = "#08306B";
const DEFAULT_OVERLAY_ALPHA: f64 = 0.5;

fn render_overlay(args: &RenderArgs, ctx: &Ctx) -> Result<(), CmdError> {
    if args.map.is_some() || args.palette.is_some() {
        return Err(usage(
            "--overlay composites a scene; drop the map and --palette",
        ));
    }
    let scene_path = args.scene.as_ref().expect("clap enforces --scene");
    let mask_path = args.mask.as_ref().expect("clap enforces --mask");
    let color_spec = args.water_color.as_deref().unwrap_or(DEFAULT_OVERLAY_COLOR);
    let color: Rgb = color_spec
        .parse()
        .map_err(|_| usage(format!("--water-color wants #RRGGBB, got {color_spec:?}")))?;
    let alpha = args
        .alpha
        .or(ctx.cfg.alpha)
        .unwrap_or(DEFAULT_OVERLAY_ALPHA);
    if !(0.0..=1.0).contains(&alpha) {
        return Err(usage("--alpha must be within [0, 1]"));
    }

    let scene: Scene = load_scene(scene_path)?;
    let mask = load_external_mask(mask_path, scene.width(), scene.height())?;
    let canvas = render_mask_overlay(&scene, &mask, color, alpha)?;
    let scale = args.scale.or(ctx.cfg.scale).unwrap_or(1);
    if scale == 0 {
        return Err(usage("--scale must be at least 1"));
    }
    let canvas = if scale > 1 {
        canvas.upscale(scale)
    } else {
        canvas
    };
    canvas.write_png(&args.out)?;
    emit(
        ctx,
        json!({
            "out": path_str(&args.out),
            "width": canvas.width(),
            "height": canvas.height(),
        }),
        vec![format!(
            "wrote {} ({}x{})",
            args.out.display(),
            canvas.width(),
            canvas.height()
        )],
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Directory for the generated scene
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,

    /// Scene edge length in pixels
    #[arg(long, value_name = "PX")]
    pub size: Option<usize>,

    #[arg(long, value_name = "SEED")]
    pub seed: Option<u64>,

    /// Water disk radius as a fraction of the edge length
    #[arg(long, value_name = "FRAC")]
    pub radius: Option<f64>,

    /// Reflectance noise level
    #[arg(long, value_name = "SIGMA")]
    pub noise: Option<f64>,
}

pub fn synth(args: SynthArgs, ctx: &Ctx) -> Result<(), CmdError> {
    let mut opts = SynthOptions::default();
    if let Some(size) = args.size {
        if size == 0 {
            return Err(usage("--size must be at least 1"));
        }
        opts.size = size;
    }
    if let Some(seed) = args.seed {
        opts.seed = seed;
    }
    if let Some(radius) = args.radius {
        if !(0.0..=0.5).contains(&radius) {
            return Err(usage("--radius must be within [0, 0.5]"));
        }
        opts.water_radius_frac = radius;
    }
    if let Some(noise) = args.noise {
        if noise < 0.0 {
            return Err(usage("--noise must not be negative"));
        }
        opts.noise_sigma = noise;
    }
    let generated = synth::generate(&opts)?;
    let manifest = synth::write_scene_dir(&generated, &args.out)?;
    let truth = args.out.join("truth.png");
    emit(
        ctx,
        json!({
            "manifest": path_str(&manifest),
            "truth": path_str(&truth),
            "size": opts.size,
        }),
        vec![format!(
            "scene {}px -> {} (truth {})",
            opts.size,
            manifest.display(),
            truth.display()
        )],
    );
    Ok(())
}
