//! Acceptance criteria 1-12. Runs without the libtest harness so that one
//! PASS/FAIL line per criterion is always printed; any failure makes the
//! process exit non-zero.

use std::f64::consts::{PI, TAU};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::Instant;

use amsloc::ams::*;
use amsloc::angle::{abs_diff, full_circle};
use amsloc::channel::*;
use amsloc::dsp::{suppressible_delay, DetectOptions, SuppressionParams};
use amsloc::estimators::*;
use amsloc::localizer::*;
use amsloc::optimizer::{optimize, similarity_matrix, OptimizeOutcome, OptimizerParams};
use amsloc::signal::cosine;
use amsloc::waveform::*;
use amsloc::Error;
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

// 1

fn unit_cell_example() -> Outcome {
    let mats = MaterialPair::PLA_WATER;
    let f = 200e3;
    // 3.3 cm cells
    let total = 0.033;
    let cases = [(0.01, 0.62, 0.905), (0.02, 5.00, 0.819), (0.033, 2.53, 0.719)];
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (d, phase, amp) in cases {
        let cell = UnitCellSpec::new(d, total).unwrap();
        let p = unit_cell_phase(&cell, f, &mats).unwrap();
        let a = amplitude_transmission(&cell, f, &mats).unwrap();
        worst = worst.max(rel(p, phase)).max(rel(a, amp));
        parts.push(format!("d={:.1}cm phase {p:.3} T {a:.3}", d * 100.0));
    }
    check(worst <= 0.01, format!("{} (worst rel err {:.2}%)", parts.join(", "), worst * 100.0))
}

// 2

fn full_coverage() -> Outcome {
    let mats = MaterialPair::PLA_WATER;
    let f = 200e3;
    let d_star = min_full_coverage_thickness(&mats, f).unwrap();
    let phases: Vec<f64> = (0..=2000)
        .map(|i| {
            let d = d_star * i as f64 / 2000.0;
            unwrapped_phase(&UnitCellSpec::new(d, d_star).unwrap(), f, &mats).unwrap()
        })
        .collect();
    let span = phases.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - phases.iter().cloned().fold(f64::INFINITY, f64::min);
    check(
        (d_star - 0.033).abs() <= 0.0005 && span >= TAU * (1.0 - 1e-12),
        format!("D* = {:.4} cm, sweep span {:.6} rad (2pi = {:.6})", d_star * 100.0, span, TAU),
    )
}

// 3

fn suppression_threshold() -> Outcome {
    let spec = ChirpSpec {
        duration: 0.2e-3,
        bandwidth: 125e3,
        f0: 125e3,
        ..Default::default()
    };
    let r = suppressible_delay(&spec, 35e3);
    let expected = 0.056e-3;
    check(
        (r - expected).abs() <= 4.0 * f64::EPSILON * expected,
        format!("f_cut/k = {r:e} s"),
    )
}

// 4

fn tdoa_geometry() -> Outcome {
    let g = WaterGeometry::default();
    let depths: Vec<f64> = (0..18).map(|i| 1.0 + 0.5 * i as f64).collect();
    let ranges: Vec<f64> = (0..35).map(|i| 3.0 + 0.5 * i as f64).collect();
    let t = Instant::now();
    let m = min_tdoa_map(&g, &[0.0, 0.0, 8.0], &depths, &ranges, 2).unwrap();
    let elapsed = t.elapsed();
    let min = m.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
    let range_trend = m.iter().all(|row| row.windows(2).all(|w| w[1] < w[0]));
    // toward either boundary the TDoA falls: unimodal in depth
    let depth_trend = (0..ranges.len()).all(|j| {
        let col: Vec<f64> = m.iter().map(|row| row[j]).collect();
        let peak = (0..col.len()).max_by(|&a, &b| col[a].total_cmp(&col[b])).unwrap();
        col[..=peak].windows(2).all(|w| w[1] > w[0]) && col[peak..].windows(2).all(|w| w[1] < w[0])
    });
    check(
        rel(min, 0.065e-3) <= 0.10 && range_trend && depth_trend && elapsed.as_secs_f64() < 10.0,
        format!(
            "min {:.4} ms, decreasing in range {range_trend}, toward surface/bottom {depth_trend}, {:.0?}",
            min * 1e3,
            elapsed
        ),
    )
}

// 5

fn ranging_scene() -> (ScenarioConfig, AnchorSpec) {
    let anchor = AnchorSpec::bare(0, [0.0, 0.0, 5.0]);
    let scn = ScenarioConfig {
        anchors: vec![anchor.clone()],
        ..Default::default()
    };
    (scn, anchor)
}

fn ranging() -> Outcome {
    let (scn, anchor) = ranging_scene();
    let wf = Waveform::Chirp(scn.chirp);
    let fs = scn.chirp.sample_rate;
    let c = scn.geometry.sound_speed;
    let opts = DetectOptions::default();
    let at = |d: f64| {
        let cap = simulate_anchor_at(&scn, &anchor, [d, 0.0, 5.0], &wf, None).unwrap();
        estimate_range(&cap.recording, &scn.chirp, c, &opts).unwrap()
    };
    let r20 = at(20.0);
    let lag = (r20.onset_index - r20.em_index) as f64;
    let lag_ok = (lag - 20.0 / c * fs).abs() <= 1.0;

    let xs: Vec<f64> = (1..=10).map(|i| 2.0 * i as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|&d| at(d).range).collect();
    let (mx, my) = (mean(&xs), mean(&ys));
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sample_dist = c / fs;
    check(
        lag_ok && (slope - 1.0).abs() <= 1e-3 && intercept.abs() < sample_dist,
        format!(
            "20 m offset {:.4} ms ({lag} samples), sweep slope {slope:.6}, intercept {:.3} mm",
            lag / fs * 1e3,
            intercept * 1e3
        ),
    )
}

// 6

fn suppression_efficacy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cfg = MetasurfaceConfig::random(60, DEFAULT_CELL_LEN, &mut rng).unwrap();
    let chirp = ChirpSpec {
        f0: 125e3,
        bandwidth: 250e3,
        ..Default::default()
    };
    let anchor = AnchorSpec::with_metasurface(0, [0.0, 0.0, 5.0], cfg);
    let scn = ScenarioConfig {
        anchors: vec![anchor.clone()],
        chirp,
        max_reflections: 0,
        ..Default::default()
    };
    let sup = FeatureParams {
        kind: FeatureKind::Suppressed,
        suppression: SuppressionParams {
            f_cut: 30e3,
            t_min: 0.04e-3,
            ..Default::default()
        },
        ..Default::default()
    };
    let raw = FeatureParams {
        kind: FeatureKind::Raw,
        ..sup
    };
    let grid = full_circle(144);
    let lib = |fp: FeatureParams| {
        build_templates(&scn, 0, &grid, &[0.4, 0.7], &TemplateOptions { feature: fp, ..Default::default() }).unwrap()
    };
    let (lib_s, lib_r) = (lib(sup), lib(raw));
    let drive = synth_chirp(&chirp).unwrap();
    let c = scn.geometry.sound_speed;
    let (mut es, mut er, mut overlap) = (Vec::new(), Vec::new(), Vec::new());
    for trial in 0..500u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(trial);
        let theta = grid[rng.random_range(0..grid.len())];
        let r: f64 = rng.random_range(1.0..3.0);
        let t1: f64 = rng.random_range(0.04e-3..0.09e-3);
        let a1: f64 = rng.random_range(0.5..0.9);
        let el: f64 = rng.random_range(-0.6..0.6);
        let paths = [
            Path {
                delay: r / c,
                amplitude: 1.0 / r,
                length: r,
                kind: PathType::default(),
                azimuth: theta,
                elevation: 0.0,
            },
            Path {
                delay: r / c + t1,
                amplitude: -a1 / r,
                length: r + t1 * c,
                kind: PathType {
                    surface: 1,
                    ..Default::default()
                },
                azimuth: theta,
                elevation: el,
            },
        ];
        overlap.push(1.0 - t1 / chirp.duration);
        let noise = Some(NoiseSpec {
            snr_db: 20.0,
            seed: trial,
            stream: 0,
        });
        let cap = simulate_with_paths(
            &drive,
            chirp.sample_rate,
            Radiator::for_anchor(&anchor),
            &paths,
            scn.em_amplitude(),
            0.2e-3,
            0.2e-3,
            noise,
        )
        .unwrap();
        let xs = extract_feature(&cap.recording, &chirp, &sup).unwrap();
        let xr = extract_feature(&cap.recording, &chirp, &raw).unwrap();
        es.push(abs_diff(estimate_aoa(&xs.feature, &lib_s).unwrap().angle, theta).to_degrees());
        er.push(abs_diff(estimate_aoa(&xr.feature, &lib_r).unwrap().angle, theta).to_degrees());
    }
    let (ms, mr) = (mean(&es), mean(&er));
    let lo = overlap.iter().cloned().fold(1.0, f64::min);
    let hi = overlap.iter().cloned().fold(0.0, f64::max);
    check(
        ms <= 0.5 * mr,
        format!(
            "500 trials, overlap {:.0}-{:.0}%: suppressed {ms:.2} deg vs raw {mr:.2} deg ({:.0}% lower)",
            lo * 100.0,
            hi * 100.0,
            (1.0 - ms / mr) * 100.0
        ),
    )
}

// 7 and 8 share one optimizer run.

fn optimized() -> &'static (OptimizeOutcome, f64) {
    static OUT: OnceLock<(OptimizeOutcome, f64)> = OnceLock::new();
    OUT.get_or_init(|| {
        let t = Instant::now();
        let template =
            MetasurfaceConfig::from_solid_lengths(&[0.0; 60], DEFAULT_CELL_LEN, DEFAULT_OUTER_RADIUS, MaterialPair::PLA_WATER)
                .unwrap();
        let out = optimize(&OptimizerParams::default(), &template, &default_angle_grid(), &default_freq_grid()).unwrap();
        (out, t.elapsed().as_secs_f64())
    })
}

fn ams_ablation() -> Outcome {
    let ams = AnchorSpec::with_metasurface(0, [0.0, 0.0, 5.0], optimized().0.config.clone());
    let bare = AnchorSpec::bare(0, [0.0, 0.0, 5.0]);
    let fp = FeatureParams::default();
    let grid = full_circle(360);
    let lib = |a: &AnchorSpec| {
        let scn = ScenarioConfig {
            anchors: vec![a.clone()],
            ..Default::default()
        };
        build_templates(&scn, 0, &grid, &[0.4, 0.7], &TemplateOptions { feature: fp, ..Default::default() }).unwrap()
    };
    let (lib_a, lib_b) = (lib(&ams), lib(&bare));
    let scn = ScenarioConfig::default();
    let wf = Waveform::Chirp(scn.chirp);
    let (mut ea, mut eb) = (Vec::new(), Vec::new());
    for trial in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + trial);
        let theta: f64 = rng.random_range(0.0..TAU);
        let r: f64 = rng.random_range(0.5..3.0);
        let rx = [r * theta.cos(), r * theta.sin(), 5.0];
        let noise = Some(NoiseSpec {
            snr_db: 15.0,
            seed: trial,
            stream: 0,
        });
        for (a, lib, out) in [(&ams, &lib_a, &mut ea), (&bare, &lib_b, &mut eb)] {
            let cap = simulate_anchor_at(&scn, a, rx, &wf, noise).unwrap();
            let x = extract_feature(&cap.recording, &scn.chirp, &fp).unwrap();
            out.push(abs_diff(estimate_aoa(&x.feature, lib).unwrap().angle, theta).to_degrees());
        }
    }
    let (ma, mb) = (mean(&ea), mean(&eb));
    let gain = 1.0 - ma / mb;
    check(
        gain >= 0.40,
        format!("200 trials at 15 dB: AMS {ma:.2} deg vs isotropic {mb:.2} deg ({:.1}% lower)", gain * 100.0),
    )
}

fn optimizer_improvement() -> Outcome {
    let (out, secs) = optimized();
    let ratio = out.final_full.mean_similarity / out.initial_full.mean_similarity;
    let all_in_box = out.config.cells.iter().all(|c| (0.0..=OptimizerParams::default().d_max).contains(&c.solid_len));
    check(
        ratio <= 0.90 && all_in_box,
        format!(
            "mean similarity {:.3} -> {:.3} (ratio {ratio:.3}; non-binding reference 0.87 -> 0.75), search took {secs:.1}s",
            out.initial_full.mean_similarity,
            out.final_full.mean_similarity,
        ),
    )
}

// 9

fn exact_measurement(p: &Position, a: &Position, id: u8) -> AnchorMeasurement {
    let (dx, dy, dz) = (p[0] - a[0], p[1] - a[1], p[2] - a[2]);
    let r = (dx * dx + dy * dy + dz * dz).sqrt();
    AnchorMeasurement::new(id, 0.0, dy.atan2(dx), r, p[2], a[2], Default::default()).unwrap()
}

fn localization() -> Outcome {
    let anchors = [[0.0, 0.0, 0.8], [8.0, 0.0, 0.8], [8.0, 8.0, 0.8], [0.0, 8.0, 0.8]];
    let w = SolverWeights::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);

    let mut worst_clean: f64 = 0.0;
    for _ in 0..50 {
        let p = [rng.random_range(0.5..7.5), rng.random_range(0.5..7.5), rng.random_range(0.3..2.5)];
        let ms: Vec<_> = anchors.iter().enumerate().map(|(i, a)| exact_measurement(&p, a, i as u8)).collect();
        let est = solve_wnls(&ms, &anchors, &w, None).unwrap();
        worst_clean = worst_clean.max((0..3).map(|d| (est.p[d] - p[d]).powi(2)).sum::<f64>().sqrt());
    }

    // measurement-level noise matched to 8.7 deg mean AoA and 0.1 m median range error
    let ang = Normal::new(0.0, 8.7f64.to_radians() / (2.0 / PI).sqrt()).unwrap();
    let rng_n = Normal::new(0.0, 0.1 / 0.6745).unwrap();
    let dep = Normal::new(0.0, 0.1).unwrap();
    let mut errs = vec![Vec::new(); 4];
    let (mut aoa_abs, mut rng_abs) = (Vec::new(), Vec::new());
    for _ in 0..200 {
        let p = [rng.random_range(0.5..7.5), rng.random_range(0.5..7.5), rng.random_range(0.3..2.5)];
        let ms: Vec<AnchorMeasurement> = anchors
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let (dx, dy) = (p[0] - a[0], p[1] - a[1]);
                let (ea, er): (f64, f64) = (ang.sample(&mut rng), rng_n.sample(&mut rng));
                aoa_abs.push(ea.abs().to_degrees());
                rng_abs.push(er.abs());
                let h = (dx.hypot(dy) + er).max(0.0);
                let z = p[2] + dep.sample(&mut rng);
                let r = (h * h + (z - a[2]).powi(2)).sqrt();
                AnchorMeasurement::new(i as u8, 0.0, dy.atan2(dx) + ea, r, z, a[2], Default::default()).unwrap()
            })
            .collect();
        for k in 1..=4 {
            let est = solve_wnls(&ms[..k], &anchors[..k], &w, None).unwrap();
            errs[k - 1].push((0..3).map(|d| (est.p[d] - p[d]).powi(2)).sum::<f64>().sqrt());
        }
    }
    let med: Vec<f64> = errs.iter().map(|e| median(e)).collect();
    let monotone = med.windows(2).all(|w| w[1] < w[0]);
    check(
        worst_clean <= 1e-4 && monotone,
        format!(
            "noiseless worst {worst_clean:.1e} m; noise AoA {:.1} deg mean, range {:.3} m median; median 3D error 1..4 anchors {}",
            mean(&aoa_abs),
            median(&rng_abs),
            med.iter().map(|m| format!("{m:.3}")).collect::<Vec<_>>().join(" > ")
        ),
    )
}

// 10

fn kalman() -> Outcome {
    let params = KalmanParams::default();
    let (radius, speed) = (2.0, 0.2);
    let w = speed / radius;
    let path: Vec<TimedPosition> = (0..=3000)
        .map(|i| {
            let t = i as f64 * 0.02;
            TimedPosition {
                t,
                position: [4.0 + radius * (w * t).cos(), 4.0 + radius * (w * t).sin(), 1.5],
            }
        })
        .collect();
    let truth: Vec<&TimedPosition> = path.iter().step_by(50).collect();
    let rmse = |ps: &[Position]| {
        let s: f64 = ps
            .iter()
            .zip(&truth)
            .map(|(a, b)| (0..3).map(|d| (a[d] - b.position[d]).powi(2)).sum::<f64>())
            .sum();
        (s / ps.len() as f64).sqrt()
    };
    let (mut wins, mut fused, mut raw) = (0, Vec::new(), Vec::new());
    for seed in 0..100u64 {
        let imu = synthetic_imu(&path, &params, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1_000_000 + seed);
        let n = Normal::new(0.0, params.fix_sigma).unwrap();
        let fixes: Vec<TimedPosition> = truth
            .iter()
            .map(|p| TimedPosition {
                t: p.t,
                position: p.position.map(|v| v + n.sample(&mut rng)),
            })
            .collect();
        let track = fuse_track(&fixes, &imu, &params).unwrap();
        let rf = rmse(&track.iter().map(|s| s.position()).collect::<Vec<_>>());
        let rr = rmse(&fixes.iter().map(|f| f.position).collect::<Vec<_>>());
        wins += (rf <= rr) as usize;
        fused.push(rf);
        raw.push(rr);
    }
    check(
        wins == 100,
        format!("fused <= raw in {wins}/100 seeds; mean RMSE fused {:.3} m vs raw {:.3} m", mean(&fused), mean(&raw)),
    )
}

// 11

fn tdma_fm0() -> Outcome {
    let f = AnchorFrame::default();
    let n = encode_frame(&f).unwrap().len();
    let exact = n == 4400 && (f.duration() - 2.2e-3).abs() <= f64::EPSILON * 2.2e-3 * 4.0;
    let slots = tdma_schedule(&[0, 1, 2, 3]).unwrap();
    let slots_ok = slots.iter().all(|s| (s.length - 2.2e-3).abs() < 1e-15);
    let opts = DecodeOptions::default();
    let (mut ok, mut flagged) = (0, 0);
    for id in 0..128u8 {
        let frame = AnchorFrame::with_id(id);
        let mut x = vec![0.0; 300];
        x.extend(encode_frame(&frame).unwrap());
        x.extend(vec![0.0; 100]);
        ok += (decode_frame(&x, &frame, &opts).ok() == Some(id)) as usize;
        // negating the second half of bit b flips exactly that decoded bit
        let pre = (frame.preamble.duration * frame.preamble.sample_rate).round() as usize;
        let half = (0.5 * frame.bit_duration * frame.preamble.sample_rate).round() as usize;
        for b in 0..FRAME_BITS {
            let mut y = x.clone();
            let s = 300 + pre + (2 * b + 1) * half;
            y[s..s + half].iter_mut().for_each(|v| *v = -*v);
            flagged += matches!(decode_frame(&y, &frame, &opts), Err(Error::CorruptFrame { .. })) as usize;
        }
    }
    check(
        exact && slots_ok && ok == 128 && flagged == 128 * FRAME_BITS,
        format!(
            "frame {:.4} ms ({n} samples), {ok}/128 ids roundtrip, {flagged}/{} single-bit flips detected",
            f.duration() * 1e3,
            128 * FRAME_BITS
        ),
    )
}

// 12: the named property families; the full suites live in tests/properties.rs.

fn properties() -> Outcome {
    let mut runner = TestRunner::new(PropConfig {
        cases: 48,
        failure_persistence: None,
        ..PropConfig::default()
    });
    let mut passed = Vec::new();
    let mut run = |name: &str, r: Result<(), proptest::test_runner::TestError<String>>| match r {
        Ok(()) => {
            passed.push(name.to_string());
            Ok(())
        }
        Err(e) => Err(format!("{name}: {e}")),
    };

    let vec = prop::collection::vec(0.01f64..10.0, 8..32);
    run(
        "cosine scaling",
        runner
            .run(&(vec.clone(), vec, 1e-3f64..1e3), |(a, b, s)| {
                let n = a.len().min(b.len());
                let scaled: Vec<f64> = a[..n].iter().map(|v| v * s).collect();
                prop_assert!((cosine(&scaled, &b[..n]) - cosine(&a[..n], &b[..n])).abs() < 1e-12);
                let angles = full_circle(3);
                let rows = vec![a[..n].to_vec(), b[..n].to_vec(), a[..n].iter().rev().cloned().collect()];
                let base = similarity_matrix(&rows, &angles).unwrap();
                let rows_s: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| v * s).collect()).collect();
                let sc = similarity_matrix(&rows_s, &angles).unwrap();
                for i in 0..3 {
                    for j in 0..3 {
                        prop_assert!((base.get(i, j) - sc.get(i, j)).abs() < 1e-12);
                    }
                }
                Ok(())
            })
            .map_err(|e| e.map_reason()),
    )?;

    run(
        "superposition",
        runner
            .run(&(prop::collection::vec(-1.0f64..1.0, 64), prop::collection::vec(-1.0f64..1.0, 64), 0.0..TAU), |(x, y, th)| {
                let cfg = MetasurfaceConfig::from_solid_lengths(
                    &[0.005, 0.012, 0.02, 0.03, 0.0, 0.017, 0.024, 0.009],
                    DEFAULT_CELL_LEN,
                    DEFAULT_OUTER_RADIUS,
                    MaterialPair::PLA_WATER,
                )
                .unwrap();
                let gain = |f: f64| far_field_pressure(&cfg, th, f.max(1.0), num_complex::Complex64::new(1.0, 0.0)).unwrap();
                let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
                let s_sum = shape_samples(&sum, 2e6, gain);
                let (sx, sy) = (shape_samples(&x, 2e6, gain), shape_samples(&y, 2e6, gain));
                for i in 0..sum.len() {
                    prop_assert!((s_sum[i] - sx[i] - sy[i]).abs() < 1e-9);
                }
                Ok(())
            })
            .map_err(|e| e.map_reason()),
    )?;

    run(
        "residual zeros at truth",
        runner
            .run(
                &(-5.0f64..5.0, -5.0f64..5.0, 0.5f64..9.5, -PI..PI, 0.3f64..8.0, 0.0f64..3.0),
                |(ax, ay, az, bearing, h, dz)| {
                    let a = [ax, ay, az];
                    let depth = (az + dz).min(9.9);
                    let r = (h * h + (depth - az).powi(2)).sqrt();
                    let m = AnchorMeasurement::new(0, 0.0, bearing, r, depth, az, Default::default()).unwrap();
                    let fix = single_anchor_fix(&m, &a).unwrap();
                    let res = residuals(&fix.p, &m, &a);
                    prop_assert!(res.angle.abs() < 1e-12 && res.range.abs() < 1e-12 && res.depth == 0.0);
                    Ok(())
                },
            )
            .map_err(|e| e.map_reason()),
    )?;

    run(
        "SPD covariance",
        runner
            .run(&(prop::collection::vec((0.05f64..2.0, -3.0f64..3.0), 2..20), any::<u64>()), |(steps, seed)| {
                let mut t = 0.0;
                let fixes: Vec<TimedPosition> = steps
                    .iter()
                    .map(|&(dt, x)| {
                        t += dt;
                        TimedPosition { t, position: [x, -x, 1.0] }
                    })
                    .collect();
                let imu = synthetic_imu(&fixes, &KalmanParams::default(), seed).unwrap();
                for s in fuse_track(&fixes, &imu, &KalmanParams::default()).unwrap() {
                    let p = s.covariance_matrix();
                    prop_assert!((p - p.transpose()).abs().max() < 1e-12);
                    prop_assert!(p.symmetric_eigenvalues().min() > 0.0);
                }
                Ok(())
            })
            .map_err(|e| e.map_reason()),
    )?;

    let mut det = TestRunner::new(PropConfig {
        cases: 8,
        failure_persistence: None,
        ..PropConfig::default()
    });
    run(
        "seed determinism",
        det.run(&(any::<u64>(), 10.0f64..30.0), |(seed, snr)| {
            let anchor = AnchorSpec::bare(0, [0.0, 0.0, 5.0]);
            let scn = ScenarioConfig {
                anchors: vec![anchor.clone()],
                ..Default::default()
            };
            let wf = Waveform::Chirp(scn.chirp);
            let noise = Some(NoiseSpec { snr_db: snr, seed, stream: 1 });
            let a = simulate_anchor_at(&scn, &anchor, [1.5, 0.5, 4.0], &wf, noise).unwrap();
            let b = simulate_anchor_at(&scn, &anchor, [1.5, 0.5, 4.0], &wf, noise).unwrap();
            prop_assert!(a.recording.samples.iter().zip(&b.recording.samples).all(|(x, y)| x.to_bits() == y.to_bits()));
            Ok(())
        })
        .map_err(|e| e.map_reason()),
    )?;
    Ok(format!("{} property families hold ({})", passed.len(), passed.join(", ")))
}

trait Reason {
    fn map_reason(self) -> proptest::test_runner::TestError<String>;
}

impl<T: std::fmt::Debug> Reason for proptest::test_runner::TestError<T> {
    fn map_reason(self) -> proptest::test_runner::TestError<String> {
        match self {
            proptest::test_runner::TestError::Abort(r) => proptest::test_runner::TestError::Abort(r),
            proptest::test_runner::TestError::Fail(r, v) => {
                proptest::test_runner::TestError::Fail(r, format!("{v:?}"))
            }
        }
    }
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 12] = [
        (1, "unit-cell worked example", unit_cell_example),
        (2, "full-coverage thickness", full_coverage),
        (3, "suppression threshold identity", suppression_threshold),
        (4, "channel TDoA geometry", tdoa_geometry),
        (5, "EM-acoustic ranging", ranging),
        (6, "multipath suppression efficacy", suppression_efficacy),
        (7, "AMS ablation", ams_ablation),
        (8, "optimizer improvement", optimizer_improvement),
        (9, "localization pipeline", localization),
        (10, "Kalman fusion", kalman),
        (11, "TDMA / FM0", tdma_fm0),
        (12, "property suites", properties),
    ];
    if std::env::args().any(|a| a == "--list") {
        for (n, name, _) in criteria {
            println!("criterion_{n}: test  ({name})");
        }
        return;
    }
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, name, f) in criteria {
        if !filter.is_empty() && !filter.contains(&n) {
            continue;
        }
        let t = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match r {
            Ok(d) => println!("criterion {n:2} PASS  {name}: {d} [{secs:.1}s]"),
            Err(d) => {
                failed += 1;
                println!("criterion {n:2} FAIL  {name}: {d} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
