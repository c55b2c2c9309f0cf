//! Scratch calibration runs (ignored by default).

use lowscan::evalbench::{pcc, silent_region_noise_values};
use lowscan::synth::{gen_cube, SynthConfig};

fn mean_silent(cube: &lowscan::HyperspectralCube, mask: &[bool]) -> f64 {
    let (h, w) = cube.shape();
    let mut acc = 0.0;
    let mut n = 0usize;
    for y in 0..h {
        for x in 0..w {
            if mask[y * w + x] {
                acc += silent_region_noise_values(cube.pixel(x, y), cube.axis(), (2250.0, 2401.0))
                    .unwrap();
                n += 1;
            }
        }
    }
    acc / n as f64
}

#[test]
#[ignore]
fn single_unet_convergence_probe() {
    use lowscan::dataset::LoadedSample;
    use lowscan::evalbench::{prepare_sample, rmse, BenchConfig};
    use lowscan::neural::{TrainConfig, UnetConfig};
    use lowscan::pipelines::{
        build_targets, fit_shared_minmax, single_unet_train, TraditionalModel,
    };
    use lowscan::synth::reference_suite;
    use lowscan::transform::normalize;

    let samples: Vec<LoadedSample> = reference_suite(1234)
        .iter()
        .map(|cfg| {
            let out = gen_cube(cfg).unwrap();
            LoadedSample {
                id: cfg.sample_id.clone(),
                cubes: out.cubes,
                clean: Some(out.clean),
                mask_truth: Some(out.mask),
            }
        })
        .collect();
    let cfg = BenchConfig::default();
    let prepared: Vec<_> = samples.iter().map(|s| prepare_sample(s, &cfg).unwrap()).collect();
    // fold 0: train on s2..s4, test s1
    let train_lq_raw: Vec<_> = prepared[1..].iter().flat_map(|p| p.lq.clone()).collect();
    let train_hq_raw: Vec<_> = prepared[1..].iter().flat_map(|p| p.hq.clone()).collect();
    let mm = fit_shared_minmax(&train_lq_raw, &train_hq_raw, cfg.snip).unwrap();
    let train_lq: Vec<_> = train_lq_raw.iter().map(|s| normalize(s, mm.0, mm.1).unwrap()).collect();
    let test_lq: Vec<_> = prepared[0].lq.iter().map(|s| normalize(s, mm.0, mm.1).unwrap()).collect();
    let targets = build_targets(&train_hq_raw, cfg.snip, mm).unwrap();
    let test_targets = build_targets(&prepared[0].hq, cfg.snip, mm).unwrap();

    // raw reference rmse
    let raw_model = TraditionalModel::fit_raw(cfg.snip, mm);
    let mut raw_acc = 0.0;
    for (lq, t) in test_lq.iter().zip(&test_targets.target_b) {
        let r = raw_model.restore(lq).unwrap();
        raw_acc += rmse(r.values(), t.values()).unwrap();
    }
    println!("raw test rmse: {:.6}", raw_acc / test_lq.len() as f64);

    // target magnitude context
    let t0 = &test_targets.target_b[0];
    let t_rms = (t0.values().iter().map(|v| v * v).sum::<f64>() / t0.len() as f64).sqrt();
    println!("target rms {:.4} min {:.4} max {:.4}", t_rms,
        t0.values().iter().cloned().fold(f64::INFINITY, f64::min),
        t0.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max));

    for batch_size in [32usize, 16, 8] {
        let ucfg = UnetConfig { depth: 2, base_channels: 8, seed: 7, ..UnetConfig::default() };
        let tcfg = TrainConfig {
            batch_size,
            patience: 60,
            max_epochs: 500,
            shuffle_seed: 3,
            validation_fraction: 0.2,
        };
        let t0 = std::time::Instant::now();
        let (stage, history) = single_unet_train(&train_lq, &targets, &ucfg, &tcfg).unwrap();
        let elapsed = t0.elapsed();
        for h in history.iter().step_by(100) {
            println!("  b{batch_size} epoch {:4}: train {:.6} val {:.6}", h.epoch, h.train_loss, h.val_loss);
        }
        let rows = stage
            .apply_rows(&test_lq.iter().map(|s| s.values().to_vec()).collect::<Vec<_>>(), 32)
            .unwrap();
        let mut acc = 0.0;
        for (row, t) in rows.iter().zip(&test_targets.target_b) {
            acc += rmse(row, t.values()).unwrap();
        }
        println!(
            "batch {batch_size}: {} epochs in {:?}, test rmse {:.6}",
            history.len(),
            elapsed,
            acc / rows.len() as f64
        );
    }
}

#[test]
#[ignore]
fn time_one_epoch() {
    use lowscan::neural::{train, DataSet, TrainConfig, UnetConfig};
    use rand::Rng;
    let mut rng = lowscan::rng::stream_rng(1, lowscan::rng::StreamId::Init, 0);
    let n = 240;
    let l = 240;
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..l).map(|_| rng.random_range(0.0..1.0)).collect())
        .collect();
    let data = DataSet {
        inputs: rows.clone(),
        targets: rows,
    };
    let (tr, va) = data.split(0.2, 1).unwrap();
    for (depth, base) in [(3usize, 8usize), (2, 8), (3, 6), (2, 6)] {
        let cfg = UnetConfig {
            depth,
            base_channels: base,
            seed: 1,
            ..UnetConfig::default()
        };
        let tcfg = TrainConfig {
            batch_size: 32,
            patience: 30,
            max_epochs: 3,
            shuffle_seed: 1,
            validation_fraction: 0.2,
        };
        let t0 = std::time::Instant::now();
        let _ = train(&cfg, &tr, &va, &tcfg).unwrap();
        println!(
            "depth={depth} base={base}: {:?} for 3 epochs ({} params)",
            t0.elapsed(),
            cfg.param_count()
        );
    }
}

#[test]
#[ignore]
fn bench_end_to_end_timing() {
    use lowscan::dataset::LoadedSample;
    use lowscan::evalbench::{run_benchmark_on, table1_csv, table2_csv, stability_csv, BenchConfig};
    use lowscan::synth::reference_suite;

    let t0 = std::time::Instant::now();
    let samples: Vec<LoadedSample> = reference_suite(1234)
        .iter()
        .map(|cfg| {
            let out = gen_cube(cfg).unwrap();
            LoadedSample {
                id: cfg.sample_id.clone(),
                cubes: out.cubes,
                clean: Some(out.clean),
                mask_truth: Some(out.mask),
            }
        })
        .collect();
    println!("gen suite: {:?}", t0.elapsed());
    for s in &samples {
        println!(
            "  {}: fg={} axis={}",
            s.id,
            s.mask_truth.as_ref().unwrap().iter().filter(|m| **m).count(),
            s.cubes[0].axis().len()
        );
    }

    let cfg = BenchConfig {
        seed: 1234,
        ..BenchConfig::default()
    };
    let t1 = std::time::Instant::now();
    let report = run_benchmark_on(&samples, &cfg).unwrap();
    println!("benchmark: {:?}", t1.elapsed());
    println!("table1:\n{}", table1_csv(&report));
    println!("table2:\n{}", table2_csv(&report));
    println!("stability:\n{}", stability_csv(&report));
    for f in &report.folds {
        println!("fold {} ({}): sg={:?}", f.fold, f.test_sample, f.sg_params);
    }
}

#[test]
#[ignore]
fn sweep_sigma_for_pcc() {
    for sigma in [0.0, 0.02, 0.05, 0.08, 0.12, 0.2, 0.35] {
        let mut cfg = SynthConfig::reference("cal", 42, false);
        cfg.noise_sigma = sigma;
        let out = gen_cube(&cfg).unwrap();
        let fg = out.cubes[0].foreground_pixels();
        let c1 = out.cube_for_scans(1).unwrap();
        let mut acc = 0.0;
        for &(x, y) in &fg {
            acc += pcc(c1.pixel(x, y), out.clean.pixel(x, y)).unwrap();
        }
        println!("sigma={sigma}: pcc={:.4}", acc / fg.len() as f64);
    }
}

#[test]
#[ignore]
fn measure_drift_components() {
    // structure of the preset at unit amplitude: per-scan silent-window
    // detrended std (tau) and the mean-profile silent-window detrended
    // std (c_m)
    use lowscan::synth::DriftModel;
    use lowscan::WavenumberAxis;
    let axis = WavenumberAxis::make_axis(950.0, 4000.0, 1584).unwrap();
    let mut d = DriftModel::atmospheric_preset();
    d.amplitude = 1.0;
    let mut rng = lowscan::rng::stream_rng(4, lowscan::rng::StreamId::Drift, 0);
    let n = 4000;
    let mut profiles = Vec::new();
    for _ in 0..n {
        profiles.push(d.sample_profile(&axis, &mut rng));
    }
    let l = axis.len();
    let mean: Vec<f64> = (0..l)
        .map(|i| profiles.iter().map(|p| p[i]).sum::<f64>() / n as f64)
        .collect();
    let c_m = silent_region_noise_values(&mean, &axis, (2250.0, 2401.0)).unwrap();
    // tau: per-scan fluctuation around the mean
    let mut tau_acc = 0.0;
    for p in profiles.iter().take(500) {
        let fluct: Vec<f64> = p.iter().zip(&mean).map(|(a, b)| a - b).collect();
        tau_acc += silent_region_noise_values(&fluct, &axis, (2250.0, 2401.0)).unwrap();
    }
    let tau = tau_acc / 500.0;
    println!("unit-amplitude drift: c_m={c_m:.5} tau={tau:.5}");
}

#[test]
#[ignore]
fn calibrate_sigma_and_drift() {
    for drift in [false, true] {
        let cfg = SynthConfig::reference("cal", 42, drift);
        let t0 = std::time::Instant::now();
        let out = gen_cube(&cfg).unwrap();
        let gen_time = t0.elapsed();
        let fg: Vec<(usize, usize)> = out.cubes[0].foreground_pixels();
        println!("drift={drift} fg pixels: {} gen {:?}", fg.len(), gen_time);

        // raw 1-scan PCC vs clean over foreground
        let c1 = out.cube_for_scans(1).unwrap();
        let mut pccs = Vec::new();
        for &(x, y) in &fg {
            pccs.push(pcc(c1.pixel(x, y), out.clean.pixel(x, y)).unwrap());
        }
        let mean_pcc = pccs.iter().sum::<f64>() / pccs.len() as f64;

        let s1 = mean_silent(c1, &out.mask);
        let s8 = mean_silent(out.cube_for_scans(8).unwrap(), &out.mask);
        let s32 = mean_silent(out.cube_for_scans(32).unwrap(), &out.mask);
        println!(
            "drift={drift}: pcc(raw1,clean)={mean_pcc:.4} silent 1/8/32 = {s1:.5}/{s8:.5}/{s32:.5} ratios {:.3} {:.3}",
            s1 / s8,
            s1 / s32
        );
    }
}
// temporary micro-bench, appended as ignored test
#[test]
#[ignore]
fn conv_fwd_bwd_split() {
    use lowscan::neural::{build_forward, init_params, UnetConfig};
    use rand::Rng;
    let cfg = UnetConfig { depth: 2, base_channels: 8, seed: 1, ..UnetConfig::default() };
    let params = init_params(&cfg).unwrap();
    let mut rng = lowscan::rng::stream_rng(1, lowscan::rng::StreamId::Init, 9);
    let (bs, l) = (32, 240);
    let input: Vec<f64> = (0..bs * l).map(|_| rng.random_range(0.0..1.0)).collect();
    let target: Vec<f64> = (0..bs * l).map(|_| rng.random_range(0.0..1.0)).collect();

    let t0 = std::time::Instant::now();
    let reps = 20;
    for _ in 0..reps {
        let g = build_forward(&params, &cfg, [bs, l, 1], input.clone()).unwrap();
        std::hint::black_box(g.tape.value(g.output)[0]);
    }
    let fwd = t0.elapsed();

    let t1 = std::time::Instant::now();
    for _ in 0..reps {
        let mut g = build_forward(&params, &cfg, [bs, l, 1], input.clone()).unwrap();
        let t = g.tape.input([bs, 1, l], target.clone());
        let loss = g.tape.mse_loss(g.output, t).unwrap();
        let grads = g.tape.backward(loss, params.tensors.len()).unwrap();
        std::hint::black_box(grads[0][0]);
    }
    let both = t1.elapsed();
    println!("fwd only: {:?}/batch   fwd+bwd: {:?}/batch", fwd / reps, both / reps);
}
#[test]
#[ignore]
fn fd_diagnose() {
    use lowscan::neural::{build_forward, init_params, UnetConfig};
    use lowscan::rng::{stream_rng, StreamId};
    use rand::Rng;
    let cfg = UnetConfig { seed: 99, ..UnetConfig::default() };
    let params = init_params(&cfg).unwrap();
    let (bs, l) = (2usize, 64usize);
    let mut rng = stream_rng(66, StreamId::Init, 2);
    let input: Vec<f64> = (0..bs * l).map(|_| rng.random_range(0.0..1.0)).collect();
    let target: Vec<f64> = (0..bs * l).map(|_| rng.random_range(0.0..1.0)).collect();
    let loss_of = |p: &lowscan::neural::ModelParams| -> f64 {
        let mut g = build_forward(p, &cfg, [bs, l, 1], input.clone()).unwrap();
        let tv = g.tape.input([bs, 1, l], target.clone());
        let lv = g.tape.mse_loss(g.output, tv).unwrap();
        g.tape.scalar(lv)
    };
    let mut g = build_forward(&params, &cfg, [bs, l, 1], input.clone()).unwrap();
    let tv = g.tape.input([bs, 1, l], target.clone());
    let lv = g.tape.mse_loss(g.output, tv).unwrap();
    let grads = g.tape.backward(lv, params.tensors.len()).unwrap();
    for h in [1e-4, 1e-5, 1e-6] {
        let mut worst: f64 = 0.0;
        for probe in 0..60 {
            let ti = (probe * 7919) % params.tensors.len();
            let n = params.tensors[ti].data.len();
            let j = (probe * 104729) % n;
            let mut plus = params.clone();
            plus.tensors[ti].data[j] += h;
            let mut minus = params.clone();
            minus.tensors[ti].data[j] -= h;
            let fd = (loss_of(&plus) - loss_of(&minus)) / (2.0 * h);
            let an = grads[ti][j];
            let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-8);
            worst = worst.max(rel);
        }
        println!("h={h:e}: worst rel {worst:.3e}");
    }
}
