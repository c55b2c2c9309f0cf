//! Command-line workflow: synth -> prep -> optimize-sg / train -> restore
//! -> bench -> report.

mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use lowscan::cube::{cube_load, cube_save, mask_save, HyperspectralCube};
use lowscan::dataset::{load_suite, save_sample};
use lowscan::dsp::{optimize_sg, SgSpace, SnipParams};
use lowscan::evalbench::{
    self, foreground_spectra, prepare_cube, prepare_sample, run_benchmark, write_report,
    BenchConfig, Method, PrepSettings,
};
use lowscan::neural::{model_load, model_save, TrainConfig, UnetConfig};
use lowscan::pipelines::{
    build_targets, cascade_infer_batch, cascade_train, fit_shared_minmax, single_unet_train,
    CascadeModel, Stage, TraditionalModel,
};
use lowscan::prep::{background_spectrum, foreground_mask, TrimSpec};
use lowscan::spectrum::Spectrum;
use lowscan::synth::{gen_cube, reference_suite, SynthConfig};
use lowscan::transform::normalize;

use manifest::ManifestBuilder;

#[derive(Parser)]
#[command(
    name = "lowscan",
    version,
    about = "Restore high-quality vibrational spectra from low-scan acquisitions"
)]
struct Cli {
    /// Worker threads (1 = deterministic reference path; parallel paths are
    /// bitwise identical anyway)
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic sample (or a 4-sample benchmark suite)
    Synth(SynthArgs),
    /// Mask, background-subtract and trim a cube
    Prep(PrepArgs),
    /// Exhaustive Savitzky-Golay hyperparameter search
    OptimizeSg(OptimizeSgArgs),
    /// Fit a restoration model on a dataset
    Train(TrainArgs),
    /// Restore a low-scan cube with a trained model
    Restore(RestoreArgs),
    /// Leave-one-sample-out benchmark of the restoration routes
    Bench(BenchArgs),
    /// Re-render report tables from an existing report.json
    Report(ReportArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Generator config JSON (SynthConfig)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in config: reference, reference-drift, bench, bench-drift
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Generate the 4-sample benchmark suite under <out>/samples/
    #[arg(long, conflicts_with_all = ["config", "preset"])]
    suite: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed (overrides the config's seed)
    #[arg(long)]
    seed: Option<u64>,
    /// Print the effective config JSON (exits after printing if no --out)
    #[arg(long)]
    dump_config: bool,
}

#[derive(Args)]
struct PrepArgs {
    /// Input cube directory
    #[arg(long)]
    cube: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Fingerprint integration band, lo:hi in cm^-1
    #[arg(long, default_value = "950:1800")]
    fingerprint: String,
    /// C-H stretching integration band, lo:hi in cm^-1
    #[arg(long, default_value = "2800:3000")]
    ch: String,
    /// Wavenumber range to remove, lo:hi (repeatable)
    #[arg(long = "trim", default_value = "2250:2401")]
    trim: Vec<String>,
    /// Edge points to drop, low:high
    #[arg(long, default_value = "10:10")]
    edges: String,
}

#[derive(Args)]
struct OptimizeSgArgs {
    /// Dataset root (samples/<id>/cube_*scan)
    #[arg(long = "train")]
    train_dir: PathBuf,
    /// Window grid start:end:step (odd windows)
    #[arg(long, default_value = "5:41:2")]
    windows: String,
    /// Order grid start:end
    #[arg(long, default_value = "2:5")]
    orders: String,
    /// Output JSON file
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    lq_scans: u32,
    #[arg(long, default_value_t = 32)]
    hq_scans: u32,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct TrainArgs {
    /// traditional | single | cascade
    #[arg(long)]
    method: String,
    /// Dataset root (samples/<id>/cube_*scan)
    #[arg(long)]
    data: PathBuf,
    /// Model directory to write
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    lq_scans: u32,
    #[arg(long, default_value_t = 32)]
    hq_scans: u32,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    base_channels: Option<usize>,
}

#[derive(Args)]
struct RestoreArgs {
    /// traditional | single | cascade
    #[arg(long)]
    method: String,
    /// Model directory written by `train`
    #[arg(long)]
    model: PathBuf,
    /// Input cube directory
    #[arg(long = "in")]
    input: PathBuf,
    /// Output cube directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Dataset root (samples/<id>/cube_*scan)
    #[arg(long)]
    data: PathBuf,
    /// Comma-separated: traditional,single,cascade
    #[arg(long, default_value = "traditional,single,cascade")]
    methods: String,
    /// Leave-one-sample-out folds (the only supported mode)
    #[arg(long, default_value_t = true)]
    loso: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    base_channels: Option<usize>,
    #[arg(long, default_value_t = 1)]
    lq_scans: u32,
    /// Print the effective benchmark config JSON
    #[arg(long)]
    dump_config: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Existing report.json
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn parse_pair(s: &str) -> anyhow::Result<(f64, f64)> {
    let (a, b) = s
        .split_once(':')
        .with_context(|| format!("expected lo:hi, got '{s}'"))?;
    Ok((a.trim().parse()?, b.trim().parse()?))
}

fn parse_usize_pair(s: &str) -> anyhow::Result<(usize, usize)> {
    let (a, b) = s
        .split_once(':')
        .with_context(|| format!("expected lo:hi, got '{s}'"))?;
    Ok((a.trim().parse()?, b.trim().parse()?))
}

fn parse_range_grid(s: &str) -> anyhow::Result<Vec<usize>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts[..] {
        [a, b] => {
            let (a, b): (usize, usize) = (a.trim().parse()?, b.trim().parse()?);
            Ok((a..=b).collect())
        }
        [a, b, step] => {
            let (a, b, step): (usize, usize, usize) =
                (a.trim().parse()?, b.trim().parse()?, step.trim().parse()?);
            Ok((a..=b).step_by(step.max(1)).collect())
        }
        _ => bail!("expected start:end or start:end:step, got '{s}'"),
    }
}

/// Shared normalization + preparation settings stored with every model.
#[derive(Debug, Serialize, Deserialize)]
struct NormFile {
    global_min: f64,
    global_max: f64,
    lq_scans: u32,
    hq_scans: u32,
    prep: PrepSettings,
}

#[derive(Debug, Serialize, Deserialize)]
struct MethodFile {
    method: String,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, serde_json::to_vec_pretty(value)?)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<T> {
    Ok(serde_json::from_slice(&std::fs::read(path).with_context(
        || format!("reading {}", path.display()),
    )?)?)
}

fn synth_preset(name: &str, seed: u64) -> anyhow::Result<SynthConfig> {
    Ok(match name {
        "reference" => SynthConfig::reference("reference", seed, false),
        "reference-drift" => SynthConfig::reference("reference-drift", seed, true),
        "bench" => SynthConfig::bench_sample("bench", seed, false),
        "bench-drift" => SynthConfig::bench_sample("bench-drift", seed, true),
        other => bail!("unknown preset '{other}' (reference, reference-drift, bench, bench-drift)"),
    })
}

fn cmd_synth(args: &SynthArgs, threads: usize) -> anyhow::Result<()> {
    let seed = args.seed.unwrap_or(0);
    if args.suite {
        let out = args.out.clone().context("--suite requires --out")?;
        let configs = reference_suite(seed);
        if args.dump_config {
            println!("{}", serde_json::to_string_pretty(&configs)?);
        }
        let mut mb = ManifestBuilder::new("synth", Some(seed), threads);
        mb.config(&configs)?;
        for cfg in &configs {
            let sample_dir = out.join("samples").join(&cfg.sample_id);
            save_sample(&gen_cube(cfg)?, &sample_dir)?;
            mb.output(&sample_dir);
        }
        mb.write(&out)?;
        return Ok(());
    }
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), _) => read_json::<SynthConfig>(path)?,
        (None, Some(p)) => synth_preset(p, seed)?,
        (None, None) => synth_preset("bench", seed)?,
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if args.dump_config {
        println!("{}", serde_json::to_string_pretty(&cfg)?);
    }
    let Some(out) = args.out.clone() else {
        return Ok(()); // dump-config only
    };
    let output = gen_cube(&cfg)?;
    save_sample(&output, &out)?;
    let mut mb = ManifestBuilder::new("synth", Some(cfg.seed), threads);
    mb.config(&cfg)?.output(&out).write(&out)?;
    Ok(())
}

fn cmd_prep(args: &PrepArgs, threads: usize) -> anyhow::Result<()> {
    let mut ranges = Vec::new();
    for t in &args.trim {
        ranges.push(parse_pair(t)?);
    }
    let settings = PrepSettings {
        fingerprint_band: parse_pair(&args.fingerprint)?,
        ch_band: parse_pair(&args.ch)?,
        trim: TrimSpec {
            drop_edges: parse_usize_pair(&args.edges)?,
            drop_ranges: ranges,
        },
    };
    let cube = cube_load(&args.cube)?;
    let mask = foreground_mask(&cube, settings.fingerprint_band, settings.ch_band)?;
    let background = background_spectrum(&cube, &mask)?;
    let prepared = evalbench::prepare_cube_with_mask(&cube, &mask, &settings)?;
    cube_save(&prepared, &args.out)?;
    let (h, w) = prepared.shape();
    mask_save(&mask, h, w, &args.out.join("mask.json"))?;
    background.save_csv(&args.out.join("background.csv"))?;
    let mut mb = ManifestBuilder::new("prep", None, threads);
    mb.config(&settings)?
        .input(&args.cube)
        .output(&args.out)
        .write(&args.out)?;
    Ok(())
}

/// Prepared + normalized (shared min-max) LQ/HQ spectra of a dataset.
struct NormalizedDataset {
    lq_norm: Vec<Spectrum>,
    hq_prepared: Vec<Spectrum>,
    minmax: (f64, f64),
}

fn load_normalized(
    data: &Path,
    lq_scans: u32,
    hq_scans: u32,
    settings: &PrepSettings,
    snip: SnipParams,
) -> anyhow::Result<NormalizedDataset> {
    let samples = load_suite(data)?;
    let cfg = BenchConfig {
        lq_scans,
        hq_scans,
        fingerprint_band: settings.fingerprint_band,
        ch_band: settings.ch_band,
        trim: settings.trim.clone(),
        ..BenchConfig::default()
    };
    let mut lq_raw = Vec::new();
    let mut hq_raw = Vec::new();
    for s in &samples {
        let p = prepare_sample(s, &cfg)?;
        lq_raw.extend(p.lq);
        hq_raw.extend(p.hq);
    }
    let minmax = fit_shared_minmax(&lq_raw, &hq_raw, snip)?;
    let lq_norm = lq_raw
        .iter()
        .map(|s| normalize(s, minmax.0, minmax.1))
        .collect::<lowscan::Result<_>>()?;
    Ok(NormalizedDataset {
        lq_norm,
        hq_prepared: hq_raw,
        minmax,
    })
}

fn cmd_optimize_sg(args: &OptimizeSgArgs, threads: usize) -> anyhow::Result<()> {
    let settings = PrepSettings {
        fingerprint_band: (950.0, 1800.0),
        ch_band: (2800.0, 3000.0),
        trim: TrimSpec::default(),
    };
    let snip = SnipParams::default();
    let ds = load_normalized(&args.train_dir, args.lq_scans, args.hq_scans, &settings, snip)?;
    let targets = build_targets(&ds.hq_prepared, snip, ds.minmax)?;
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = ds
        .lq_norm
        .iter()
        .zip(&targets.target_a)
        .map(|(lq, hq)| (lq.values().to_vec(), hq.values().to_vec()))
        .collect();
    let space = SgSpace {
        windows: parse_range_grid(&args.windows)?,
        orders: parse_range_grid(&args.orders)?,
    };
    let result = optimize_sg(&pairs, &space)?;
    write_json(&args.out, &result)?;
    let dir = args.out.parent().unwrap_or(Path::new(".")).to_path_buf();
    let mut mb = ManifestBuilder::new("optimize-sg", args.seed, threads);
    mb.config(&space)?
        .input(&args.train_dir)
        .output(&args.out)
        .write(&dir)?;
    Ok(())
}

fn unet_overrides(
    base: UnetConfig,
    depth: Option<usize>,
    base_channels: Option<usize>,
    seed: u64,
) -> UnetConfig {
    UnetConfig {
        depth: depth.unwrap_or(base.depth),
        base_channels: base_channels.unwrap_or(base.base_channels),
        seed,
        ..base
    }
}

fn cmd_train(args: &TrainArgs, threads: usize) -> anyhow::Result<()> {
    let settings = PrepSettings {
        fingerprint_band: (950.0, 1800.0),
        ch_band: (2800.0, 3000.0),
        trim: TrimSpec::default(),
    };
    let snip = SnipParams::default();
    let ds = load_normalized(&args.data, args.lq_scans, args.hq_scans, &settings, snip)?;
    let targets = build_targets(&ds.hq_prepared, snip, ds.minmax)?;
    let norm_file = NormFile {
        global_min: ds.minmax.0,
        global_max: ds.minmax.1,
        lq_scans: args.lq_scans,
        hq_scans: args.hq_scans,
        prep: settings,
    };
    let bench_defaults = BenchConfig::default();
    let tcfg = TrainConfig {
        max_epochs: args.epochs.unwrap_or(bench_defaults.train.max_epochs),
        shuffle_seed: args.seed,
        ..TrainConfig::default()
    };
    std::fs::create_dir_all(&args.out)?;
    let mut mb = ManifestBuilder::new("train", Some(args.seed), threads);
    mb.input(&args.data).output(&args.out);

    match args.method.as_str() {
        "traditional" => {
            let model = TraditionalModel::fit(
                &ds.lq_norm,
                &targets.target_a,
                &SgSpace::default_grid(),
                snip,
                ds.minmax,
            )?;
            write_json(&args.out.join("sg.json"), &model)?;
            write_json(&args.out.join("snip.json"), &snip)?;
            write_json(&args.out.join("norm.json"), &norm_file)?;
            mb.config(&model)?;
        }
        "single" => {
            let ucfg = unet_overrides(
                bench_defaults.unet.clone(),
                args.depth,
                args.base_channels,
                args.seed,
            );
            let (stage, history) = single_unet_train(&ds.lq_norm, &targets, &ucfg, &tcfg)?;
            let Stage::Unet { params, config } = &stage else {
                bail!("training produced a non-network stage");
            };
            model_save(params, config, &args.out.join("stage1"))?;
            write_json(&args.out.join("snip.json"), &snip)?;
            write_json(&args.out.join("norm.json"), &norm_file)?;
            write_json(&args.out.join("history.json"), &history)?;
            mb.config(&(ucfg, tcfg))?;
        }
        "cascade" => {
            let u1 = unet_overrides(
                bench_defaults.unet.clone(),
                args.depth,
                args.base_channels,
                args.seed,
            );
            let u2 = UnetConfig {
                seed: args.seed ^ 1,
                ..u1.clone()
            };
            let (model, history) =
                cascade_train(&ds.lq_norm, &targets, &u1, &u2, snip, &tcfg)?;
            let Stage::Unet { params, config } = &model.stage1 else {
                bail!("cascade stage 1 is not a network");
            };
            model_save(params, config, &args.out.join("stage1"))?;
            let Stage::Unet { params, config } = &model.stage2 else {
                bail!("cascade stage 2 is not a network");
            };
            model_save(params, config, &args.out.join("stage2"))?;
            write_json(&args.out.join("snip.json"), &snip)?;
            write_json(&args.out.join("norm.json"), &norm_file)?;
            write_json(&args.out.join("stage2_norm.json"), &model.stage2_norm)?;
            write_json(&args.out.join("history.json"), &history)?;
            mb.config(&(u1, u2, tcfg))?;
        }
        other => bail!("unknown method '{other}' (traditional, single, cascade)"),
    }
    write_json(
        &args.out.join("method.json"),
        &MethodFile {
            method: args.method.clone(),
        },
    )?;
    mb.write(&args.out)?;
    Ok(())
}

fn cmd_restore(args: &RestoreArgs, threads: usize) -> anyhow::Result<()> {
    let method_file: MethodFile = read_json(&args.model.join("method.json"))?;
    if method_file.method != args.method {
        bail!(
            "model directory was trained for method '{}', requested '{}'",
            method_file.method,
            args.method
        );
    }
    let norm_file: NormFile = read_json(&args.model.join("norm.json"))?;
    let snip: SnipParams = read_json(&args.model.join("snip.json"))?;
    let cube = cube_load(&args.input)?;
    let (prepared, mask) = prepare_cube(&cube, &norm_file.prep)?;
    let spectra = foreground_spectra(&prepared)?;
    let lq_norm: Vec<Spectrum> = spectra
        .iter()
        .map(|s| normalize(s, norm_file.global_min, norm_file.global_max))
        .collect::<lowscan::Result<_>>()?;

    let restored: Vec<Spectrum> = match args.method.as_str() {
        "traditional" => {
            let model: TraditionalModel = read_json(&args.model.join("sg.json"))?;
            lq_norm
                .iter()
                .map(|s| model.restore(s))
                .collect::<lowscan::Result<_>>()?
        }
        "single" => {
            let (params, config) = model_load(&args.model.join("stage1"))?;
            let stage = Stage::Unet { params, config };
            let rows = stage.apply_rows(
                &lq_norm.iter().map(|s| s.values().to_vec()).collect::<Vec<_>>(),
                32,
            )?;
            lq_norm
                .iter()
                .zip(rows)
                .map(|(s, r)| s.map_values(r))
                .collect::<lowscan::Result<_>>()?
        }
        "cascade" => {
            let (p1, c1) = model_load(&args.model.join("stage1"))?;
            let (p2, c2) = model_load(&args.model.join("stage2"))?;
            let stage2_norm: (f64, f64) = read_json(&args.model.join("stage2_norm.json"))?;
            let model = CascadeModel {
                stage1: Stage::Unet {
                    params: p1,
                    config: c1,
                },
                snip,
                stage2: Stage::Unet {
                    params: p2,
                    config: c2,
                },
                stage2_norm,
            };
            cascade_infer_batch(&lq_norm, &model, 32)?
        }
        other => bail!("unknown method '{other}'"),
    };

    // restored foreground written back on the prepared grid; background zero
    let (h, w) = prepared.shape();
    let l = prepared.axis().len();
    let mut data = vec![0.0; h * w * l];
    for (spec, (x, y)) in restored.iter().zip(prepared.foreground_pixels()) {
        let off = (y * w + x) * l;
        data[off..off + l].copy_from_slice(spec.values());
    }
    let out_cube = HyperspectralCube::new(
        h,
        w,
        prepared.axis().clone(),
        data,
        prepared.sample_id(),
        cube.scan_count(),
    )?;
    cube_save(&out_cube, &args.out)?;
    mask_save(&mask, h, w, &args.out.join("mask.json"))?;
    let mut mb = ManifestBuilder::new("restore", None, threads);
    mb.config(&norm_file)?
        .input(&args.input)
        .input(&args.model)
        .output(&args.out)
        .write(&args.out)?;
    Ok(())
}

fn cmd_bench(args: &BenchArgs, threads: usize) -> anyhow::Result<()> {
    if !args.loso {
        bail!("only leave-one-sample-out folding is supported; pass --loso");
    }
    let mut methods = Vec::new();
    for m in args.methods.split(',') {
        methods.push(match m.trim() {
            "traditional" => Method::Traditional,
            "single" => Method::Single,
            "cascade" => Method::Cascade,
            "raw" => Method::Raw,
            other => bail!("unknown method '{other}'"),
        });
    }
    let defaults = BenchConfig::default();
    let cfg = BenchConfig {
        seed: args.seed,
        lq_scans: args.lq_scans,
        methods,
        unet: unet_overrides(defaults.unet.clone(), args.depth, args.base_channels, 0),
        train: TrainConfig {
            max_epochs: args.epochs.unwrap_or(defaults.train.max_epochs),
            ..defaults.train.clone()
        },
        ..defaults
    };
    if args.dump_config {
        println!("{}", serde_json::to_string_pretty(&cfg)?);
    }
    let report = run_benchmark(&args.data, &cfg)?;
    write_report(&report, &args.out)?;
    for m in &report.overall {
        println!(
            "{}: rmse_mean={:.6} reduction={}%",
            m.method,
            m.rmse_mean,
            m.rmse_reduction_pct
                .map(|r| format!("{r:.2}"))
                .unwrap_or_else(|| "n/a".into())
        );
    }
    let mut mb = ManifestBuilder::new("bench", Some(args.seed), threads);
    mb.config(&cfg)?
        .input(&args.data)
        .output(&args.out)
        .write(&args.out)?;
    Ok(())
}

fn cmd_report(args: &ReportArgs, threads: usize) -> anyhow::Result<()> {
    let report = evalbench::read_report(&args.input)?;
    write_report(&report, &args.out)?;
    let mut mb = ManifestBuilder::new("report", None, threads);
    mb.input(&args.input).output(&args.out).write(&args.out)?;
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    #[cfg(feature = "parallel")]
    if cli.threads > 1 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .ok();
    }
    match &cli.cmd {
        Cmd::Synth(a) => cmd_synth(a, cli.threads),
        Cmd::Prep(a) => cmd_prep(a, cli.threads),
        Cmd::OptimizeSg(a) => cmd_optimize_sg(a, cli.threads),
        Cmd::Train(a) => cmd_train(a, cli.threads),
        Cmd::Restore(a) => cmd_restore(a, cli.threads),
        Cmd::Bench(a) => cmd_bench(a, cli.threads),
        Cmd::Report(a) => cmd_report(a, cli.threads),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // machine-readable error envelope on stderr
            let kind = e
                .downcast_ref::<lowscan::Error>()
                .map(|le| {
                    let d = format!("{le:?}");
                    d.split(['(', '{', ' ']).next().unwrap_or("Error").to_string()
                })
                .unwrap_or_else(|| "Error".into());
            eprintln!(
                "{}",
                serde_json::json!({ "error": e.to_string(), "kind": kind })
            );
            ExitCode::FAILURE
        }
    }
}
