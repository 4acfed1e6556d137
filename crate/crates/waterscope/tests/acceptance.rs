//! End-to-end acceptance checks. Each criterion prints one line:
//!
//! ```text
//! acceptance 3 local-sigma-naive-oracle: PASS (41 ms)
//! ```
//!
//! The process exits nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use waterscope::error::Error;
use waterscope::eval::{
    composite_loss, dice_loss, weighted_cross_entropy, ConfusionMatrix, ProbabilityMap, DICE_SMOOTH,
};
use waterscope::grid::ValueGrid;
use waterscope::index::{compute_index, IndexKind, IndexMap};
use waterscope::palette::{self, luminance, PaletteKind, Rgb};
use waterscope::render::{render_map, RenderOptions};
use waterscope::scene::{sample_water_biased_patches, BandId, Scene};
use waterscope::segment::{threshold_fixed, threshold_otsu, BinaryMask, MaskProvenance};
use waterscope::stats::{local_sigma, masked_stats, GlobalStats};
use waterscope::synth::{self, SynthOptions};

type CheckResult = Result<(), String>;
type Criterion = (&'static str, fn() -> CheckResult, Duration);

fn main() {
    let criteria: Vec<Criterion> = vec![
        (
            "index-scalar-oracle",
            index_scalar_oracle,
            Duration::from_secs(5),
        ),
        (
            "otsu-brute-force-oracle",
            otsu_brute_force_oracle,
            Duration::from_secs(10),
        ),
        (
            "local-sigma-naive-oracle",
            local_sigma_naive_oracle,
            Duration::from_secs(10),
        ),
        (
            "metric-identities",
            metric_identities,
            Duration::from_secs(10),
        ),
        ("loss-sanity", loss_sanity, Duration::from_secs(10)),
        (
            "patch-sampler-contract",
            patch_sampler_contract,
            Duration::from_secs(30),
        ),
        (
            "synthetic-end-to-end",
            synthetic_end_to_end,
            Duration::from_secs(5),
        ),
        (
            "palette-conformance",
            palette_conformance,
            Duration::from_secs(10),
        ),
        (
            "report-formatting",
            report_formatting,
            Duration::from_secs(5),
        ),
    ];

    let mut failures = 0usize;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| Err(format!("panicked: {}", panic_text(&p))));
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|()| {
            if elapsed > *budget {
                Err(format!(
                    "exceeded time budget: {} ms > {} ms",
                    elapsed.as_millis(),
                    budget.as_millis()
                ))
            } else {
                Ok(())
            }
        });
        match outcome {
            Ok(()) => println!(
                "acceptance {} {}: PASS ({} ms)",
                i + 1,
                name,
                elapsed.as_millis()
            ),
            Err(reason) => {
                failures += 1;
                println!(
                    "acceptance {} {}: FAIL ({} ms) - {}",
                    i + 1,
                    name,
                    elapsed.as_millis(),
                    reason
                );
            }
        }
    }
    if failures > 0 {
        std::process::exit(1);
    }
}

fn panic_text(p: &Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = p.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = p.downcast_ref::<String>() {
        s.clone()
    } else {
        "non-string panic".into()
    }
}

fn ensure(cond: bool, msg: impl Into<String>) -> CheckResult {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn random_scene(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Scene {
    let mut bands = BTreeMap::new();
    for band in BandId::ALL {
        let values: Vec<f64> = (0..w * h).map(|_| rng.gen_range(0.0..0.6)).collect();
        bands.insert(band, values);
    }
    Scene::from_reflectance("acceptance", w, h, bands, vec![true; w * h]).unwrap()
}

/// Criterion 1: every defined pixel of every index kind reproduces an
/// independently coded scalar formula to 1e-6 on a 10,000-pixel scene.
fn index_scalar_oracle() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (w, h) = (100, 100);
    let scene = random_scene(&mut rng, w, h);
    let band = |id: BandId| scene.band(id).values();
    let b08_max = band(BandId::B08)
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);

    for kind in IndexKind::ALL {
        let map = compute_index(&scene, kind, None).map_err(|e| e.to_string())?;
        let mut checked = 0usize;
        for i in 0..w * h {
            let (b02, b03, b04, b08, b11) = (
                band(BandId::B02)[i],
                band(BandId::B03)[i],
                band(BandId::B04)[i],
                band(BandId::B08)[i],
                band(BandId::B11)[i],
            );
            let oracle = match kind {
                IndexKind::Ndwi => nd_oracle(b03, b08),
                IndexKind::Mndwi => nd_oracle(b03, b11),
                IndexKind::Ndci => nd_oracle(b03, b04),
                IndexKind::Ndosi => nd_oracle(b11, b02 + b03 + b04),
                IndexKind::Turbidity => {
                    if b02 == 0.0 {
                        None
                    } else {
                        Some((b04 + b03) / b02)
                    }
                }
                IndexKind::RelBathymetry => {
                    if b08_max > 0.0 {
                        Some(1.0 - b08 / b08_max)
                    } else {
                        None
                    }
                }
            };
            let got = map.grid.at(i % w, i / w);
            match (got, oracle) {
                (Some(g), Some(e)) => {
                    if (g - e).abs() > 1e-6 {
                        return Err(format!("{kind} pixel {i}: {g} vs oracle {e}"));
                    }
                    checked += 1;
                }
                (None, None) => {}
                other => return Err(format!("{kind} pixel {i}: defined mismatch {other:?}")),
            }
        }
        ensure(
            checked >= 9_900,
            format!("{kind}: only {checked} pixels checked"),
        )?;
    }
    Ok(())
}

fn nd_oracle(a: f64, b: f64) -> Option<f64> {
    let denom = a + b;
    if denom == 0.0 {
        None
    } else {
        Some((a - b) / denom)
    }
}

/// Criterion 2: Otsu equals an exhaustive between-class-variance sweep,
/// bin-exactly, on 100 random maps spanning bimodal, skewed and
/// near-constant shapes; constant maps raise the degenerate-range error.
fn otsu_brute_force_oracle() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let bins = 256usize;
    for case in 0..100 {
        let n = 64 * 64;
        let values: Vec<f64> = match case % 3 {
            0 => {
                let lo = Normal::new(-0.4, 0.05).unwrap();
                let hi = Normal::new(0.5, 0.08).unwrap();
                (0..n)
                    .map(|_| {
                        if rng.gen_bool(0.6) {
                            lo.sample(&mut rng)
                        } else {
                            hi.sample(&mut rng)
                        }
                    })
                    .collect()
            }
            1 => {
                let base = Normal::new(0.0, 0.1).unwrap();
                (0..n)
                    .map(|_| {
                        let v: f64 = base.sample(&mut rng);
                        v.abs().powf(1.5)
                    })
                    .collect()
            }
            _ => {
                let center = rng.gen_range(-0.5..0.5);
                (0..n)
                    .map(|_| center + rng.gen_range(-5e-4..5e-4))
                    .collect()
            }
        };
        let map = IndexMap {
            kind: IndexKind::Ndwi,
            grid: ValueGrid::from_parts(64, 64, values.clone(), vec![true; n])
                .map_err(|e| e.to_string())?,
        };
        let (_, got_t) = threshold_otsu(&map, bins).map_err(|e| e.to_string())?;

        let expect_t = brute_force_otsu(&values, bins)
            .ok_or_else(|| format!("case {case}: oracle found no split"))?;
        if got_t != expect_t {
            return Err(format!(
                "case {case}: threshold {got_t} vs oracle {expect_t}"
            ));
        }
    }

    let constant = IndexMap {
        kind: IndexKind::Ndwi,
        grid: ValueGrid::from_parts(64, 64, vec![0.2; 4096], vec![true; 4096])
            .map_err(|e| e.to_string())?,
    };
    match threshold_otsu(&constant, bins) {
        Err(Error::DegenerateRange) => Ok(()),
        other => Err(format!(
            "constant map: expected DegenerateRange, got {other:?}"
        )),
    }
}

/// Independent Otsu: probability-normalized histogram, explicit sweep
/// over every split, lowest-threshold ties.
fn brute_force_otsu(values: &[f64], bins: usize) -> Option<f64> {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return None;
    }
    let mut counts = vec![0u64; bins];
    for v in values {
        let mut k = ((v - lo) / (hi - lo) * bins as f64) as usize;
        if k >= bins {
            k = bins - 1;
        }
        counts[k] += 1;
    }
    let total = values.len() as f64;
    let width = (hi - lo) / bins as f64;
    let center = |k: usize| lo + width * (k as f64 + 0.5);

    let mut best: Option<(usize, f64)> = None;
    for split in 0..bins - 1 {
        let c0: u64 = counts[..=split].iter().sum();
        let c1: u64 = counts[split + 1..].iter().sum();
        if c0 == 0 || c1 == 0 {
            continue;
        }
        let w0 = c0 as f64 / total;
        let w1 = c1 as f64 / total;
        let mu0 = counts[..=split]
            .iter()
            .enumerate()
            .map(|(k, c)| *c as f64 * center(k))
            .sum::<f64>()
            / c0 as f64;
        let mu1 = counts[split + 1..]
            .iter()
            .enumerate()
            .map(|(k, c)| *c as f64 * center(split + 1 + k))
            .sum::<f64>()
            / c1 as f64;
        let var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        let better = match best {
            None => true,
            Some((_, best_var)) => var > best_var,
        };
        if better {
            best = Some((split, var));
        }
    }
    best.map(|(split, _)| lo + width * (split + 1) as f64)
}

/// Criterion 3: local sigma equals a naive double-loop recomputation to
/// 1e-6 everywhere, for windows 3, 5, 7, on 50 random map/mask pairs.
fn local_sigma_naive_oracle() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let (w, h) = (32, 32);
    for pair in 0..50 {
        let values: Vec<f64> = (0..w * h)
            .map(|_| {
                if rng.gen_bool(0.9) {
                    rng.gen_range(-1.0..1.0)
                } else {
                    f64::NAN
                }
            })
            .collect();
        let water: Vec<bool> = (0..w * h).map(|_| rng.gen_bool(0.7)).collect();
        let defined: Vec<bool> = values.iter().map(|v| !v.is_nan()).collect();
        let map = IndexMap {
            kind: IndexKind::Ndwi,
            grid: ValueGrid::from_parts(w, h, values.clone(), defined.clone())
                .map_err(|e| e.to_string())?,
        };
        let mask = BinaryMask::from_parts(
            w,
            h,
            water.clone(),
            vec![true; w * h],
            MaskProvenance::external(),
        )
        .map_err(|e| e.to_string())?;

        for window in [3usize, 5, 7] {
            let got = local_sigma(&map, &mask, window).map_err(|e| e.to_string())?;
            let r = window / 2;
            for y in 0..h {
                for x in 0..w {
                    let i = y * w + x;
                    let center_ok = defined[i] && water[i];
                    let naive = if !center_ok {
                        None
                    } else {
                        let mut samples = Vec::new();
                        for wy in y.saturating_sub(r)..=(y + r).min(h - 1) {
                            for wx in x.saturating_sub(r)..=(x + r).min(w - 1) {
                                let j = wy * w + wx;
                                if defined[j] && water[j] {
                                    samples.push(values[j]);
                                }
                            }
                        }
                        if samples.len() < 2 {
                            None
                        } else {
                            let n = samples.len() as f64;
                            let mean = samples.iter().sum::<f64>() / n;
                            let var =
                                samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                            Some(var.sqrt())
                        }
                    };
                    match (got.grid.at(x, y), naive) {
                        (Some(a), Some(b)) => {
                            if (a - b).abs() > 1e-6 {
                                return Err(format!(
                                    "pair {pair} window {window} ({x},{y}): {a} vs naive {b}"
                                ));
                            }
                        }
                        (None, None) => {}
                        other => {
                            return Err(format!(
                                "pair {pair} window {window} ({x},{y}): defined mismatch {other:?}"
                            ))
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// Criterion 4: metric identities on 1,000 random confusion matrices
/// plus the canonical worked example to four decimals.
fn metric_identities() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for _ in 0..1000 {
        let m = ConfusionMatrix {
            tp: rng.gen_range(0..2000),
            fp: rng.gen_range(0..2000),
            fn_: rng.gen_range(0..2000),
            tn: rng.gen_range(0..2000),
        };
        if m.total() == 0 {
            continue;
        }
        let r = m.metrics().map_err(|e| e.to_string())?;
        if let (Some(dice), Some(iou)) = (r.dice, r.iou) {
            ensure(
                (dice - 2.0 * iou / (1.0 + iou)).abs() < 1e-9,
                format!("dice/iou identity broke: {dice} vs {iou}"),
            )?;
        }
        if let (Some(dice), Some(p), Some(rec)) = (r.dice, r.precision, r.recall) {
            if p + rec > 0.0 {
                ensure(
                    (dice - 2.0 * p * rec / (p + rec)).abs() < 1e-9,
                    "dice is not the precision/recall harmonic mean",
                )?;
            }
        }
    }

    let canon = ConfusionMatrix {
        tp: 50,
        fp: 10,
        fn_: 10,
        tn: 30,
    };
    let r = canon.metrics().map_err(|e| e.to_string())?;
    let expect = [
        (r.accuracy, 0.8000, "accuracy"),
        (r.precision, 0.8333, "precision"),
        (r.recall, 0.8333, "recall"),
        (r.iou, 0.7143, "iou"),
        (r.dice, 0.8333, "dice"),
        (r.specificity, 0.7500, "specificity"),
    ];
    for (got, want, name) in expect {
        let got = got.ok_or(format!("{name} undefined"))?;
        ensure(
            (got - want).abs() < 5e-5,
            format!("{name}: {got:.4} != {want:.4}"),
        )?;
    }
    Ok(())
}

/// Criterion 5: loss behavior on perfect, uninformative and random inputs.
fn loss_sanity() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let n = 16usize;

    let water: Vec<bool> = (0..n * n).map(|_| rng.gen_bool(0.3)).collect();
    let reference = BinaryMask::from_parts(
        n,
        n,
        water.clone(),
        vec![true; n * n],
        MaskProvenance::external(),
    )
    .map_err(|e| e.to_string())?;

    let perfect_probs: Vec<f64> = water.iter().map(|w| if *w { 1.0 } else { 0.0 }).collect();
    let perfect = ProbabilityMap::from_parts(n, n, perfect_probs, vec![true; n * n])
        .map_err(|e| e.to_string())?;
    let loss = composite_loss(&perfect, &reference, 1.0, 20.0).map_err(|e| e.to_string())?;
    ensure(
        loss.total <= 1e-6,
        format!("perfect prediction lost {}", loss.total),
    )?;

    let uniform = ProbabilityMap::from_parts(n, n, vec![0.5; n * n], vec![true; n * n])
        .map_err(|e| e.to_string())?;
    for (lw, ww) in [(1.0, 20.0), (1.0, 1.0), (5.0, 2.0)] {
        let ce = weighted_cross_entropy(&uniform, &reference, lw, ww).map_err(|e| e.to_string())?;
        ensure(
            (ce - std::f64::consts::LN_2).abs() < 1e-9,
            format!("uniform 0.5 with weights {lw}:{ww} gave ce {ce}"),
        )?;
    }

    for _ in 0..1000 {
        let water: Vec<bool> = (0..64).map(|_| rng.gen_bool(0.5)).collect();
        let probs: Vec<f64> = (0..64).map(|_| rng.gen_range(0.0..=1.0)).collect();
        let reference =
            BinaryMask::from_parts(8, 8, water, vec![true; 64], MaskProvenance::external())
                .map_err(|e| e.to_string())?;
        let pred =
            ProbabilityMap::from_parts(8, 8, probs, vec![true; 64]).map_err(|e| e.to_string())?;
        let d = dice_loss(&pred, &reference, DICE_SMOOTH).map_err(|e| e.to_string())?;
        ensure(
            (0.0..=1.0).contains(&d),
            format!("dice loss {d} escaped [0, 1]"),
        )?;
    }
    Ok(())
}

/// Criterion 6: the documented sampling configuration (512 px patches,
/// 1.5% minimum water, 25 patches) re-verifies every emitted patch and
/// is seed-deterministic across five runs.
fn patch_sampler_contract() -> CheckResult {
    let (w, h) = (1024usize, 640usize);
    let mut bands = BTreeMap::new();
    for band in BandId::ALL {
        bands.insert(band, vec![0.08; w * h]);
    }
    let scene = Scene::from_reflectance("sampler", w, h, bands, vec![true; w * h])
        .map_err(|e| e.to_string())?;
    // a 24-px vertical water stripe: windows overlapping enough of it qualify
    let water: Vec<bool> = (0..w * h).map(|i| (i % w) < 24).collect();
    let mask = BinaryMask::from_parts(
        w,
        h,
        water.clone(),
        vec![true; w * h],
        MaskProvenance::external(),
    )
    .map_err(|e| e.to_string())?;

    let size = 512usize;
    let min_frac = 0.015;
    let count = 25usize;
    let first = sample_water_biased_patches(&scene, &mask, count, size, min_frac, 4242, None)
        .map_err(|e| e.to_string())?;
    ensure(!first.shortfall, "sampler fell short on a feasible scene")?;
    ensure(
        first.patches.len() == count,
        format!("expected {count} patches, got {}", first.patches.len()),
    )?;
    for patch in &first.patches {
        let mut wet = 0usize;
        let mut valid = 0usize;
        for y in patch.origin_y..patch.origin_y + patch.size {
            for x in patch.origin_x..patch.origin_x + patch.size {
                valid += 1;
                if water[y * w + x] {
                    wet += 1;
                }
            }
        }
        let frac = wet as f64 / valid as f64;
        ensure(
            frac >= min_frac,
            format!(
                "patch ({}, {}) re-verified at {:.4}% water",
                patch.origin_x,
                patch.origin_y,
                frac * 100.0
            ),
        )?;
    }
    for _ in 0..4 {
        let again = sample_water_biased_patches(&scene, &mask, count, size, min_frac, 4242, None)
            .map_err(|e| e.to_string())?;
        ensure(again.patches == first.patches, "seeded run diverged")?;
    }
    Ok(())
}

/// Criterion 7: the synthetic disk scene segments nearly perfectly via
/// NDWI, both with Otsu and with the fixed 0.2 threshold.
fn synthetic_end_to_end() -> CheckResult {
    let synth = synth::generate(&SynthOptions::default()).map_err(|e| e.to_string())?;
    let ndwi = compute_index(&synth.scene, IndexKind::Ndwi, None).map_err(|e| e.to_string())?;

    let (otsu_mask, t) = threshold_otsu(&ndwi, 256).map_err(|e| e.to_string())?;
    let iou_otsu = iou(&otsu_mask, &synth.truth)?;
    ensure(
        iou_otsu >= 0.99,
        format!("Otsu IoU {iou_otsu:.4} below 0.99 (threshold {t:.4})"),
    )?;

    let fixed_mask = threshold_fixed(&ndwi, 0.2).map_err(|e| e.to_string())?;
    let iou_fixed = iou(&fixed_mask, &synth.truth)?;
    ensure(
        iou_fixed >= 0.95,
        format!("fixed-threshold IoU {iou_fixed:.4} below 0.95"),
    )?;
    Ok(())
}

fn iou(pred: &BinaryMask, truth: &BinaryMask) -> Result<f64, String> {
    ConfusionMatrix::from_masks(pred, truth)
        .map_err(|e| e.to_string())?
        .metrics()
        .map_err(|e| e.to_string())?
        .iou
        .ok_or_else(|| "IoU undefined".into())
}

/// Criterion 8: built-in palettes reproduce their declared stops, the
/// sequential palettes pass 256-point luminance monotonicity, and
/// rendering is byte-deterministic.
fn palette_conformance() -> CheckResult {
    let ndwi = palette::for_index(IndexKind::Ndwi);
    ensure(
        ndwi.color_at(Some(-1.0)) == Rgb([0x8C, 0x73, 0x55]),
        "NDWI land endpoint is not the declared brown-gray",
    )?;
    ensure(
        ndwi.color_at(Some(1.0)) == Rgb([0x08, 0x30, 0x6B]),
        "NDWI water endpoint is not the declared deep blue",
    )?;

    let sigma = palette::builtin(PaletteKind::Sigma);
    ensure(
        sigma.color_at(Some(0.15)) == Rgb([0x66, 0xBD, 0x63]),
        "variance palette missed its 0.15 anchor color",
    )?;
    ensure(
        sigma.color_at(Some(0.35)) == Rgb([0xF4, 0x6D, 0x43]),
        "variance palette missed its 0.35 anchor color",
    )?;

    for kind in [IndexKind::Turbidity, IndexKind::RelBathymetry] {
        let p = palette::for_index(kind);
        let (lo, hi) = p.domain();
        let mut last = f64::INFINITY;
        for i in 0..=256 {
            let v = lo + (hi - lo) * i as f64 / 256.0;
            let y = luminance(p.components_at(v));
            ensure(
                y <= last + 1e-9,
                format!("{} palette luminance rises at {v}", p.name()),
            )?;
            last = y;
        }
    }

    let synth = synth::generate(&SynthOptions {
        size: 64,
        ..Default::default()
    })
    .map_err(|e| e.to_string())?;
    let map = compute_index(&synth.scene, IndexKind::Ndwi, None).map_err(|e| e.to_string())?;
    let opts = RenderOptions {
        scale: 2,
        colorbar: true,
        title: Some("NDWI".into()),
    };
    let p = palette::for_index(IndexKind::Ndwi);
    let one = render_map(&map, &p, &opts)
        .map_err(|e| e.to_string())?
        .encode_png()
        .map_err(|e| e.to_string())?;
    let two = render_map(&map, &p, &opts)
        .map_err(|e| e.to_string())?
        .encode_png()
        .map_err(|e| e.to_string())?;
    ensure(one == two, "render bytes differ between identical runs")?;
    Ok(())
}

/// Criterion 9: the mean-and-spread report renders as "3.39 ± 0.37".
fn report_formatting() -> CheckResult {
    let stats = GlobalStats {
        kind: IndexKind::Turbidity,
        count: 1000,
        mean: 3.391,
        sigma: 0.368,
        min: 2.1,
        max: 4.4,
    };
    ensure(
        stats.summary() == "3.39 \u{b1} 0.37",
        format!("summary rendered as {:?}", stats.summary()),
    )?;

    let mut bands = BTreeMap::new();
    for (band, level) in [
        (BandId::B02, 0.05),
        (BandId::B03, 0.07),
        (BandId::B04, 0.03),
        (BandId::B08, 0.02),
        (BandId::B11, 0.01),
        (BandId::B12, 0.01),
    ] {
        bands.insert(band, vec![level; 4]);
    }
    let scene =
        Scene::from_reflectance("fmt", 2, 2, bands, vec![true; 4]).map_err(|e| e.to_string())?;
    let map = compute_index(&scene, IndexKind::Turbidity, None).map_err(|e| e.to_string())?;
    let s = masked_stats(&map, None).map_err(|e| e.to_string())?;
    ensure(
        s.summary().contains('\u{b1}'),
        "live stats summary lost its spread separator",
    )?;
    Ok(())
}
