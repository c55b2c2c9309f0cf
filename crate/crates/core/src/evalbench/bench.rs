//! Leave-one-sample-out benchmark of the restoration routes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{load_suite, LoadedSample};
use crate::dsp::{SgParams, SgSpace, SnipParams};
use crate::error::{Error, Result};
use crate::neural::{TrainConfig, UnetConfig};
use crate::pipelines::{
    build_targets, cascade_infer_batch, cascade_train, fit_shared_minmax, single_unet_train,
    TraditionalModel, TrainingTargets,
};
use crate::prep::{foreground_mask, subtract_background, trim_cube, TrimSpec};
use crate::spectrum::{Origin, Spectrum};
use crate::transform::{normalize, DomainTag};

use super::metrics::{
    iqr, mae, pcc, percentile, rmse, sam, silent_region_noise, spearman,
};
use super::peaks::{detect_peaks, peak_height_bias, peak_position_error, PeakDetectParams};

/// Restoration routes the benchmark can run. `Raw` is the reference the
/// reductions are measured against and always runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Raw,
    Traditional,
    Single,
    Cascade,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Method::Raw => "raw",
            Method::Traditional => "traditional",
            Method::Single => "single",
            Method::Cascade => "cascade",
        };
        f.write_str(s)
    }
}

/// Everything a benchmark run needs beyond the dataset itself.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchConfig {
    pub lq_scans: u32,
    pub hq_scans: u32,
    pub fingerprint_band: (f64, f64),
    pub ch_band: (f64, f64),
    pub trim: TrimSpec,
    pub snip: SnipParams,
    pub sg_space: SgSpace,
    pub unet: UnetConfig,
    pub train: TrainConfig,
    pub peak_params: PeakDetectParams,
    pub peak_match_window_cm: f64,
    pub silent_window: (f64, f64),
    pub methods: Vec<Method>,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            lq_scans: 1,
            hq_scans: 32,
            fingerprint_band: (950.0, 1800.0),
            ch_band: (2800.0, 3000.0),
            // the silent window stays in range so output-domain noise
            // diagnostics remain defined
            trim: TrimSpec {
                drop_edges: (10, 10),
                drop_ranges: vec![],
            },
            snip: SnipParams::default(),
            sg_space: SgSpace::default_grid(),
            // lighter than the module default so a full LOSO run stays in
            // interactive time on one core
            unet: UnetConfig {
                depth: 2,
                base_channels: 8,
                ..UnetConfig::default()
            },
            // desk-scale protocol: smaller batches buy the optimizer 4x the
            // steps inside the epoch cap, which is what Adadelta needs here
            train: TrainConfig {
                batch_size: 8,
                max_epochs: 500,
                ..TrainConfig::default()
            },
            peak_params: PeakDetectParams::default(),
            peak_match_window_cm: 16.0,
            silent_window: (2250.0, 2401.0),
            methods: vec![Method::Traditional, Method::Single, Method::Cascade],
            seed: 0,
        }
    }
}

/// Per-spectrum comparison against the normalized baseline-free truth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricSet {
    pub rmse: f64,
    pub mae: f64,
    pub sam: f64,
    pub pcc: f64,
    pub spearman: f64,
    pub peak_pos_errors: Vec<f64>,
    pub peak_height_errors: Vec<f64>,
    pub hallucinated: usize,
    pub missed: usize,
    pub silent_noise: Option<f64>,
}

/// Computes every metric for one restored spectrum. Both spectra must be in
/// the normalized (minmax01) domain.
pub fn metric_set(
    pred: &Spectrum,
    truth: &Spectrum,
    peak_params: PeakDetectParams,
    match_window_cm: f64,
    silent_window: (f64, f64),
) -> Result<MetricSet> {
    for s in [pred, truth] {
        let tag = s.stats().map(|st| st.domain_tag);
        if tag != Some(DomainTag::Minmax01) {
            return Err(Error::DomainTagMismatch {
                expected: "minmax01".into(),
                found: tag.map(|t| t.to_string()).unwrap_or_else(|| "none".into()),
            });
        }
    }
    let (p, t) = (pred.values(), truth.values());
    let axis = pred.axis();
    let pred_peaks = detect_peaks(p, axis, peak_params);
    let truth_peaks = detect_peaks(t, axis, peak_params);
    let rep = peak_position_error(&pred_peaks, &truth_peaks, axis, match_window_cm);
    let heights = if rep.matches.is_empty() {
        Vec::new()
    } else {
        peak_height_bias(p, t, &rep.matches)?
    };
    Ok(MetricSet {
        rmse: rmse(p, t)?,
        mae: mae(p, t)?,
        sam: sam(p, t)?,
        pcc: pcc(p, t)?,
        spearman: spearman(p, t)?,
        peak_pos_errors: rep.errors_cm,
        peak_height_errors: heights,
        hallucinated: rep.hallucinated,
        missed: rep.missed,
        silent_noise: silent_region_noise(pred, silent_window).ok(),
    })
}

/// Distribution summary of one scalar metric over a fold.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub iqr: f64,
}

fn summarize(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::DegenerateDistribution("empty summary".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok(Summary {
        mean,
        std: var.sqrt(),
        p25: percentile(values, 25.0)?,
        p50: percentile(values, 50.0)?,
        p75: percentile(values, 75.0)?,
        iqr: iqr(values)?,
    })
}

/// One method's aggregate over one fold's test spectra.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodFoldReport {
    pub method: Method,
    pub rmse: Summary,
    pub mae: Summary,
    pub sam: Summary,
    pub pcc: Summary,
    pub spearman: Summary,
    pub peak_position_error: Option<Summary>,
    pub peak_height_bias: Option<Summary>,
    pub hallucinated_total: usize,
    pub missed_total: usize,
    pub silent_noise: Option<Summary>,
    /// Raw per-spectrum RMSE values, for stability analysis.
    pub per_spectrum_rmse: Vec<f64>,
    /// Raw pooled signed peak-height errors.
    pub pooled_height_errors: Vec<f64>,
}

fn aggregate_method(method: Method, sets: &[MetricSet]) -> Result<MethodFoldReport> {
    let pull = |f: fn(&MetricSet) -> f64| -> Vec<f64> { sets.iter().map(f).collect() };
    let rmse_v = pull(|m| m.rmse);
    let pos: Vec<f64> = sets.iter().flat_map(|m| m.peak_pos_errors.clone()).collect();
    let hei: Vec<f64> = sets
        .iter()
        .flat_map(|m| m.peak_height_errors.clone())
        .collect();
    let silent: Vec<f64> = sets.iter().filter_map(|m| m.silent_noise).collect();
    Ok(MethodFoldReport {
        method,
        rmse: summarize(&rmse_v)?,
        mae: summarize(&pull(|m| m.mae))?,
        sam: summarize(&pull(|m| m.sam))?,
        pcc: summarize(&pull(|m| m.pcc))?,
        spearman: summarize(&pull(|m| m.spearman))?,
        peak_position_error: if pos.is_empty() { None } else { Some(summarize(&pos)?) },
        peak_height_bias: if hei.is_empty() { None } else { Some(summarize(&hei)?) },
        hallucinated_total: sets.iter().map(|m| m.hallucinated).sum(),
        missed_total: sets.iter().map(|m| m.missed).sum(),
        silent_noise: if silent.is_empty() { None } else { Some(summarize(&silent)?) },
        per_spectrum_rmse: rmse_v,
        pooled_height_errors: hei,
    })
}

/// One cross-validation fold: held-out sample, training samples, per-method
/// aggregates, and the SG parameters the traditional route chose.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub test_sample: String,
    pub train_samples: Vec<String>,
    pub sg_params: Option<SgParams>,
    pub methods: Vec<MethodFoldReport>,
}

impl FoldReport {
    pub fn method(&self, m: Method) -> Option<&MethodFoldReport> {
        self.methods.iter().find(|r| r.method == m)
    }
}

/// Method-level aggregate pooled over every fold's test spectra, with
/// reduction percentages relative to the raw route.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodOverall {
    pub method: Method,
    pub rmse_mean: f64,
    pub mae_mean: f64,
    pub sam_mean: f64,
    pub pcc_mean: f64,
    pub spearman_mean: f64,
    pub rmse_reduction_pct: Option<f64>,
    pub mae_reduction_pct: Option<f64>,
    pub sam_reduction_pct: Option<f64>,
    pub height_bias_p25: Option<f64>,
    pub height_bias_p50: Option<f64>,
    pub height_bias_p75: Option<f64>,
    pub height_bias_iqr: Option<f64>,
    pub hallucinated_total: usize,
    pub missed_total: usize,
}

/// Silent-window noise of one sample at one scan count (raw cubes,
/// foreground pixels).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SilentRow {
    pub sample: String,
    pub scan_count: u32,
    pub noise_mean: f64,
    pub ratio_vs_1scan: Option<f64>,
}

/// Full benchmark output; serializes to `report.json` deterministically.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchReport {
    pub seed: u64,
    pub config: BenchConfig,
    pub samples: Vec<String>,
    pub folds: Vec<FoldReport>,
    pub overall: Vec<MethodOverall>,
    pub silent_diagnostics: Vec<SilentRow>,
}

/// Masking/trimming settings shared by the harness and the CLI tools.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepSettings {
    pub fingerprint_band: (f64, f64),
    pub ch_band: (f64, f64),
    pub trim: TrimSpec,
}

impl BenchConfig {
    pub fn prep_settings(&self) -> PrepSettings {
        PrepSettings {
            fingerprint_band: self.fingerprint_band,
            ch_band: self.ch_band,
            trim: self.trim.clone(),
        }
    }
}

/// Background-subtracts and trims a cube under a given mask.
pub fn prepare_cube_with_mask(
    cube: &crate::cube::HyperspectralCube,
    mask: &[bool],
    settings: &PrepSettings,
) -> Result<crate::cube::HyperspectralCube> {
    trim_cube(&subtract_background(cube, mask)?, &settings.trim)
}

/// Full preparation of one cube: Otsu mask from its own band scores, then
/// background subtraction and trimming.
pub fn prepare_cube(
    cube: &crate::cube::HyperspectralCube,
    settings: &PrepSettings,
) -> Result<(crate::cube::HyperspectralCube, Vec<bool>)> {
    let mask = foreground_mask(cube, settings.fingerprint_band, settings.ch_band)?;
    Ok((prepare_cube_with_mask(cube, &mask, settings)?, mask))
}

/// Foreground spectra of a prepared (masked) cube, row-major pixel order.
pub fn foreground_spectra(cube: &crate::cube::HyperspectralCube) -> Result<Vec<Spectrum>> {
    let mut out = Vec::new();
    for (x, y) in cube.foreground_pixels() {
        out.push(cube.spectrum_at(x, y)?);
    }
    if out.is_empty() {
        return Err(Error::NoForegroundPixels);
    }
    Ok(out)
}

/// Prepared, aligned foreground spectra of one sample.
pub struct PreparedSample {
    pub id: String,
    pub lq: Vec<Spectrum>,
    pub hq: Vec<Spectrum>,
}

/// Prepares one sample's LQ/HQ pair. The mask comes from the cleanest (HQ)
/// cube and is shared by both scan settings so pixels stay paired.
pub fn prepare_sample(sample: &LoadedSample, cfg: &BenchConfig) -> Result<PreparedSample> {
    let lq_cube = sample.cube_for_scans(cfg.lq_scans).ok_or_else(|| {
        Error::ShapeMismatch(format!(
            "sample {} has no {}-scan cube",
            sample.id, cfg.lq_scans
        ))
    })?;
    let hq_cube = sample.cube_for_scans(cfg.hq_scans).ok_or_else(|| {
        Error::ShapeMismatch(format!(
            "sample {} has no {}-scan cube",
            sample.id, cfg.hq_scans
        ))
    })?;
    let settings = cfg.prep_settings();
    let mask = foreground_mask(hq_cube, settings.fingerprint_band, settings.ch_band)?;
    let lq_corr = prepare_cube_with_mask(lq_cube, &mask, &settings)?;
    let hq_corr = prepare_cube_with_mask(hq_cube, &mask, &settings)?;
    let lq = foreground_spectra(&lq_corr)?;
    let hq = foreground_spectra(&hq_corr)?;
    Ok(PreparedSample {
        id: sample.id.clone(),
        lq,
        hq,
    })
}

/// One fold per sample: fold k trains on every other sample and tests on
/// sample k.
pub fn loso_split(samples: &[String]) -> Result<Vec<(String, Vec<String>)>> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples(samples.len()));
    }
    Ok(samples
        .iter()
        .map(|test| {
            (
                test.clone(),
                samples.iter().filter(|s| *s != test).cloned().collect(),
            )
        })
        .collect())
}

fn origins(set: &[Spectrum]) -> Vec<Origin> {
    set.iter().filter_map(|s| s.origin().cloned()).collect()
}

fn assert_no_leakage(train: &[Spectrum], test: &[Spectrum]) -> Result<()> {
    let train_o = origins(train);
    let test_o = origins(test);
    for t in &test_o {
        if train_o.contains(t) {
            return Err(Error::ShapeMismatch(format!(
                "leakage: origin {:?} appears in train and test",
                t
            )));
        }
    }
    Ok(())
}

fn silent_diagnostics(samples: &[LoadedSample], cfg: &BenchConfig) -> Result<Vec<SilentRow>> {
    let mut rows = Vec::new();
    for s in samples {
        let reference = s.cube_for_scans(1);
        let mask = match s.cube_for_scans(cfg.hq_scans) {
            Some(hq) => foreground_mask(hq, cfg.fingerprint_band, cfg.ch_band)?,
            None => continue,
        };
        let mut one_scan = None;
        let mut sample_rows = Vec::new();
        for cube in &s.cubes {
            let (h, w) = cube.shape();
            let mut acc = 0.0;
            let mut n = 0usize;
            for y in 0..h {
                for x in 0..w {
                    if mask[y * w + x] {
                        let spec = cube.spectrum_at(x, y)?;
                        acc += silent_region_noise(&spec, cfg.silent_window)?;
                        n += 1;
                    }
                }
            }
            let mean = acc / n as f64;
            if cube.scan_count() == 1 {
                one_scan = Some(mean);
            }
            sample_rows.push(SilentRow {
                sample: s.id.clone(),
                scan_count: cube.scan_count(),
                noise_mean: mean,
                ratio_vs_1scan: None,
            });
        }
        if let Some(base) = one_scan.or(reference.map(|_| f64::NAN)) {
            for r in sample_rows.iter_mut() {
                if r.scan_count != 1 && base.is_finite() && r.noise_mean > 0.0 {
                    r.ratio_vs_1scan = Some(base / r.noise_mean);
                }
            }
        }
        rows.extend(sample_rows);
    }
    Ok(rows)
}

fn restore_method(
    method: Method,
    train_lq: &[Spectrum],
    targets: &TrainingTargets,
    test_lq: &[Spectrum],
    cfg: &BenchConfig,
    shared_minmax: (f64, f64),
    fold_idx: usize,
) -> Result<(Vec<Spectrum>, Option<SgParams>)> {
    match method {
        Method::Raw => {
            let model = TraditionalModel::fit_raw(cfg.snip, shared_minmax);
            let out = test_lq
                .iter()
                .map(|s| model.restore(s))
                .collect::<Result<_>>()?;
            Ok((out, None))
        }
        Method::Traditional => {
            let model = TraditionalModel::fit(
                train_lq,
                &targets.target_a,
                &cfg.sg_space,
                cfg.snip,
                shared_minmax,
            )?;
            let out = test_lq
                .iter()
                .map(|s| model.restore(s))
                .collect::<Result<_>>()?;
            Ok((out, model.sg))
        }
        Method::Single => {
            let ucfg = UnetConfig {
                seed: cfg.seed ^ (0x51_u64 << 32) ^ fold_idx as u64,
                ..cfg.unet.clone()
            };
            let tcfg = TrainConfig {
                shuffle_seed: cfg.seed ^ (0x52_u64 << 32) ^ fold_idx as u64,
                ..cfg.train.clone()
            };
            let (stage, _) = single_unet_train(train_lq, targets, &ucfg, &tcfg)?;
            let rows = stage.apply_rows(
                &test_lq.iter().map(|s| s.values().to_vec()).collect::<Vec<_>>(),
                tcfg.batch_size,
            )?;
            let out = test_lq
                .iter()
                .zip(rows)
                .map(|(s, row)| Ok(s.map_values(row)?))
                .collect::<Result<_>>()?;
            Ok((out, None))
        }
        Method::Cascade => {
            let u1 = UnetConfig {
                seed: cfg.seed ^ (0xCA_u64 << 32) ^ fold_idx as u64,
                ..cfg.unet.clone()
            };
            let u2 = UnetConfig {
                seed: cfg.seed ^ (0xCB_u64 << 32) ^ fold_idx as u64,
                ..cfg.unet.clone()
            };
            let tcfg = TrainConfig {
                shuffle_seed: cfg.seed ^ (0xCC_u64 << 32) ^ fold_idx as u64,
                ..cfg.train.clone()
            };
            let (model, _) = cascade_train(train_lq, targets, &u1, &u2, cfg.snip, &tcfg)?;
            let out = cascade_infer_batch(test_lq, &model, tcfg.batch_size)?;
            Ok((out, None))
        }
    }
}

/// Runs the full leave-one-sample-out benchmark over a dataset directory.
pub fn run_benchmark(dataset_dir: &Path, cfg: &BenchConfig) -> Result<BenchReport> {
    let raw_samples = load_suite(dataset_dir)?;
    run_benchmark_on(&raw_samples, cfg)
}

/// [`run_benchmark`] over already loaded samples.
pub fn run_benchmark_on(raw_samples: &[LoadedSample], cfg: &BenchConfig) -> Result<BenchReport> {
    let prepared: Vec<PreparedSample> = raw_samples
        .iter()
        .map(|s| prepare_sample(s, cfg))
        .collect::<Result<_>>()?;
    let ids: Vec<String> = prepared.iter().map(|p| p.id.clone()).collect();
    let folds_spec = loso_split(&ids)?;

    let mut methods = vec![Method::Raw];
    for m in &cfg.methods {
        if !methods.contains(m) {
            methods.push(*m);
        }
    }

    let mut folds = Vec::new();
    // per-method pooled metric sets across all folds
    let mut pooled: Vec<(Method, Vec<MetricSet>)> =
        methods.iter().map(|&m| (m, Vec::new())).collect();

    for (fold_idx, (test_id, train_ids)) in folds_spec.iter().enumerate() {
        let train: Vec<&PreparedSample> = prepared
            .iter()
            .filter(|p| train_ids.contains(&p.id))
            .collect();
        let test = prepared.iter().find(|p| &p.id == test_id).unwrap();

        let train_lq_raw: Vec<Spectrum> =
            train.iter().flat_map(|p| p.lq.iter().cloned()).collect();
        let train_hq_raw: Vec<Spectrum> =
            train.iter().flat_map(|p| p.hq.iter().cloned()).collect();
        assert_no_leakage(&train_lq_raw, &test.lq)?;

        let mm = fit_shared_minmax(&train_lq_raw, &train_hq_raw, cfg.snip)?;
        let norm_all = |set: &[Spectrum]| -> Result<Vec<Spectrum>> {
            set.iter().map(|s| normalize(s, mm.0, mm.1)).collect()
        };
        let train_lq = norm_all(&train_lq_raw)?;
        let test_lq = norm_all(&test.lq)?;
        let targets = build_targets(&train_hq_raw, cfg.snip, mm)?;
        let test_targets = build_targets(&test.hq, cfg.snip, mm)?;

        let mut fold_methods = Vec::new();
        let mut sg_chosen = None;
        for &method in &methods {
            let (restored, sg) =
                restore_method(method, &train_lq, &targets, &test_lq, cfg, mm, fold_idx)?;
            if sg.is_some() {
                sg_chosen = sg;
            }
            let sets: Vec<MetricSet> = restored
                .iter()
                .zip(&test_targets.target_b)
                .map(|(p, t)| {
                    metric_set(
                        p,
                        t,
                        cfg.peak_params,
                        cfg.peak_match_window_cm,
                        cfg.silent_window,
                    )
                })
                .collect::<Result<_>>()?;
            pooled
                .iter_mut()
                .find(|(m, _)| *m == method)
                .unwrap()
                .1
                .extend(sets.iter().cloned());
            fold_methods.push(aggregate_method(method, &sets)?);
        }
        folds.push(FoldReport {
            fold: fold_idx,
            test_sample: test_id.clone(),
            train_samples: train_ids.clone(),
            sg_params: sg_chosen,
            methods: fold_methods,
        });
    }

    // overall: pooled means and reductions vs raw
    let raw_sets = &pooled.iter().find(|(m, _)| *m == Method::Raw).unwrap().1;
    let mean_of = |sets: &[MetricSet], f: fn(&MetricSet) -> f64| -> f64 {
        sets.iter().map(f).sum::<f64>() / sets.len() as f64
    };
    let raw_rmse = mean_of(raw_sets, |m| m.rmse);
    let raw_mae = mean_of(raw_sets, |m| m.mae);
    let raw_sam = mean_of(raw_sets, |m| m.sam);
    let mut overall = Vec::new();
    for (method, sets) in &pooled {
        let rmse_mean = mean_of(sets, |m| m.rmse);
        let mae_mean = mean_of(sets, |m| m.mae);
        let sam_mean = mean_of(sets, |m| m.sam);
        let heights: Vec<f64> = sets
            .iter()
            .flat_map(|m| m.peak_height_errors.clone())
            .collect();
        let red = |raw: f64, got: f64| -> Option<f64> {
            super::metrics::reduction_percent(raw, got).ok()
        };
        overall.push(MethodOverall {
            method: *method,
            rmse_mean,
            mae_mean,
            sam_mean,
            pcc_mean: mean_of(sets, |m| m.pcc),
            spearman_mean: mean_of(sets, |m| m.spearman),
            rmse_reduction_pct: red(raw_rmse, rmse_mean),
            mae_reduction_pct: red(raw_mae, mae_mean),
            sam_reduction_pct: red(raw_sam, sam_mean),
            height_bias_p25: (!heights.is_empty())
                .then(|| percentile(&heights, 25.0))
                .transpose()?,
            height_bias_p50: (!heights.is_empty())
                .then(|| percentile(&heights, 50.0))
                .transpose()?,
            height_bias_p75: (!heights.is_empty())
                .then(|| percentile(&heights, 75.0))
                .transpose()?,
            height_bias_iqr: (!heights.is_empty()).then(|| iqr(&heights)).transpose()?,
            hallucinated_total: sets.iter().map(|m| m.hallucinated).sum(),
            missed_total: sets.iter().map(|m| m.missed).sum(),
        });
    }

    Ok(BenchReport {
        seed: cfg.seed,
        config: cfg.clone(),
        samples: ids,
        folds,
        overall,
        silent_diagnostics: silent_diagnostics(raw_samples, cfg)?,
    })
}
