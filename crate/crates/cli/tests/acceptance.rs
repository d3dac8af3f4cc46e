// SPDX-License-Identifier: Apache-2.0
//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits nonzero if any failed.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use p2m_cli::commands::cmd_sweep;
use p2m_cli::ExperimentConfig;
use p2m_core::conv::{digital_conv_reference, p2m_conv, temporal_rebin, ConvSpec, SpikeFrame};
use p2m_core::events::{bin_events, read_evt1, write_evt1, DvsEvent, EventStream, Polarity};
use p2m_core::mac::{
    derive_leakage, evolve, fit_polynomial, fit_transfer_curve, integrate_window, threshold_compare,
    window_preactivation, CircuitVariant, LeakageParams, LocalEvent, MacState,
};
use p2m_core::snn::{bn_fold, lif_step, load_weights, maxpool_spikes, save_weights, BatchNorm, LifParams, NetworkSpec};
use p2m_core::{CircuitConfig, Kernel, LifState, WeightBundle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ODE_DRAWS: usize = 10_000;
const ODE_TOL_V: f64 = 1e-9;
const ODE_BUDGET: Duration = Duration::from_secs(10);

const EQUIV_TRIALS: usize = 200;
const EQUIV_MAX_EVENTS: usize = 1_000;
const EQUIV_SENSOR: u16 = 16;
const EQUIV_BUDGET: Duration = Duration::from_secs(30);

const LEAK_KERNELS: usize = 20;
const LEAK_EVENTS: usize = 16;
const LEAK_WINDOWS_MS: [u64; 3] = [1, 10, 100];
const LEAK_SATURATION_REL: f64 = 1e-3;
/// Fraction of the rail-to-rail range.
const LEAK_IDEAL_BAND: f64 = 0.01;
const LEAK_BUDGET: Duration = Duration::from_secs(60);

const FIXED_POINT_TOL_V: f64 = 1e-12;

const CONSERVATION_STREAMS: usize = 1_000;

const LIF_SEQUENCES: usize = 100;
const LIF_TOL: f64 = 1e-12;
const BN_REL_TOL: f64 = 1e-6;

const FIT_TOL: f64 = 1e-9;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

/// Fixed-step RK4 on `C dV/dt = g_p (V_DD − V) − g_n V + I`, clamped to the rails.
fn rk4(v0: f64, dt_s: f64, leak: &LeakageParams<f64>, c: f64, v_dd: f64) -> f64 {
    let g = leak.g_p + leak.g_n;
    let h_max = if g > 0.0 { (c / g / 1000.0).min(dt_s / 1e4) } else { dt_s / 1e4 };
    let n = (dt_s / h_max).ceil() as u64;
    let h = dt_s / n as f64;
    let f = |v: f64| (leak.g_p * (v_dd - v) - leak.g_n * v + leak.i_null) / c;
    let mut v = v0;
    for _ in 0..n {
        let k1 = f(v);
        let k2 = f(v + 0.5 * h * k1);
        let k3 = f(v + 0.5 * h * k2);
        let k4 = f(v + h * k3);
        v = (v + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).clamp(0.0, v_dd);
    }
    v
}

fn ode_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0de);
    let mut worst = 0.0f64;
    for i in 0..ODE_DRAWS {
        let dt_s = log_uniform(&mut rng, 1e-6, 1.0);
        let c = log_uniform(&mut rng, 1e-15, 1e-13);
        let cfg = CircuitConfig {
            c_k: c,
            ..CircuitConfig::default()
        };
        let v0 = rng.random_range(0.0..=cfg.v_dd);
        let leak = if i % 10 == 0 {
            // no conductance: a pure current ramp of up to ±1 V over dt
            LeakageParams {
                g_p: 0.0,
                g_n: 0.0,
                i_null: rng.random_range(-1.0..1.0) * c / dt_s,
            }
        } else {
            let tau = log_uniform(&mut rng, dt_s / 30.0, dt_s * 1e4);
            let g = c / tau;
            let split = rng.random_range(0.0..=1.0);
            LeakageParams {
                g_p: g * split,
                g_n: g * (1.0 - split),
                i_null: rng.random_range(-1.0..1.0) * g * cfg.v_dd,
            }
        };
        let closed = evolve(MacState { v: v0, t_us: 0.0 }, dt_s * 1e6, &leak, &cfg).unwrap().v;
        worst = worst.max((closed - rk4(v0, dt_s, &leak, c, cfg.v_dd)).abs());
    }
    let took = start.elapsed();
    outcome(
        worst <= ODE_TOL_V && took < ODE_BUDGET,
        format!("{ODE_DRAWS} draws, max |closed - rk4| = {worst:.3e} V (tol {ODE_TOL_V:e}), {took:.2?}"),
    )
}

fn random_stream(rng: &mut ChaCha8Rng, w: u16, h: u16, max_events: usize, max_t: u64) -> EventStream {
    let n = rng.random_range(0..=max_events);
    let mut events: Vec<DvsEvent> = (0..n)
        .map(|_| {
            DvsEvent::new(
                rng.random_range(0..max_t),
                rng.random_range(0..w),
                rng.random_range(0..h),
                Polarity::from_bit(rng.random()),
            )
        })
        .collect();
    events.sort_by_key(|e| e.t);
    EventStream::new(w, h, events).unwrap()
}

fn analog_digital_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xe9);
    let spec = ConvSpec::default();
    let cfg = CircuitConfig::default().ideal_linear();
    let (mut units, mut spikes, mut mismatches) = (0u64, 0u64, 0u64);
    for trial in 0..EQUIV_TRIALS {
        let t_intg = [1_000, 10_000, 100_000][trial % 3];
        let stream = random_stream(&mut rng, EQUIV_SENSOR, EQUIV_SENSOR, EQUIV_MAX_EVENTS, 4 * t_intg);
        let kernels: Vec<Kernel> = (0..spec.out_channels as u32).map(|i| Kernel::random(i, 3, &mut rng)).collect();
        let analog = p2m_conv(&stream, &kernels, &spec, &cfg, t_intg, trial as u64).unwrap();
        let digital = digital_conv_reference(&bin_events(&stream, t_intg).unwrap(), &kernels, &spec).unwrap();
        if analog.len() != digital.len() {
            mismatches += 1;
            continue;
        }
        for (a, d) in analog.iter().zip(&digital) {
            for (&bit, &x) in a.values.iter().zip(&d.values) {
                let want = threshold_compare(cfg.v_precharge + cfg.k_step * x, &cfg);
                units += 1;
                spikes += u64::from(bit);
                mismatches += u64::from(bit != u32::from(want));
            }
        }
    }
    let took = start.elapsed();
    outcome(
        mismatches == 0 && spikes > 0 && took < EQUIV_BUDGET,
        format!("{EQUIV_TRIALS} trials, {units} unit-windows, {spikes} spikes, {mismatches} mismatches, {took:.2?}"),
    )
}

fn leakage_ordering() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xf4);
    let base = CircuitConfig::default();
    let kernels: Vec<Kernel> = (0..LEAK_KERNELS as u32).map(|i| Kernel::random(i, 3, &mut rng)).collect();
    let mut ok = true;
    let mut detail = Vec::new();
    let mut c_dev = [0.0; 3];
    for (wi, ms) in LEAK_WINDOWS_MS.into_iter().enumerate() {
        let t = ms * 1000;
        let mut dev = [0.0f64; 3];
        for k in &kernels {
            let mut events: Vec<LocalEvent> = (0..LEAK_EVENTS)
                .map(|_| {
                    LocalEvent::new(
                        rng.random_range(0..t),
                        Polarity::from_bit(rng.random()),
                        rng.random_range(0..3),
                        rng.random_range(0..3),
                    )
                })
                .collect();
            events.sort_by_key(|e| e.t_us);
            let v = |variant| integrate_window(k, &events, 0, t, &base.with_variant(variant), 7).unwrap().0;
            let ideal = v(CircuitVariant::Ideal);
            for (d, variant) in dev.iter_mut().zip([CircuitVariant::ConfigA, CircuitVariant::ConfigB, CircuitVariant::ConfigC]) {
                *d += (v(variant) - ideal).abs() / LEAK_KERNELS as f64;
            }
        }
        let ordered = dev[2] <= dev[1] && dev[1] <= dev[0];
        ok &= ordered;
        c_dev[wi] = dev[2];
        detail.push(format!(
            "{ms}ms A/B/C {:.2}/{:.2}/{:.2} mV",
            dev[0] * 1e3,
            dev[1] * 1e3,
            dev[2] * 1e3
        ));
    }

    let mut worst_sat = 0.0f64;
    for k in &kernels {
        let cfg = base.with_variant(CircuitVariant::ConfigA);
        let v_eq = derive_leakage(k, &cfg).equilibrium(cfg.v_dd).unwrap();
        let (v, _) = integrate_window(k, &[], 0, 10_000, &cfg, 0).unwrap();
        worst_sat = worst_sat.max((v - v_eq).abs() / v_eq);
    }
    let band = LEAK_IDEAL_BAND * base.v_dd;
    let c10 = c_dev[1] <= band;
    let c100 = c_dev[2] > band;
    ok &= worst_sat <= LEAK_SATURATION_REL && c10 && c100;
    let took = start.elapsed();
    ok &= took < LEAK_BUDGET;
    outcome(
        ok,
        format!(
            "{}; A saturation err {:.1e} (tol {LEAK_SATURATION_REL:e}); C 10ms {:.2} mV <= {:.1} mV: {c10}; C 100ms {:.2} mV > band: {c100}; {took:.2?}",
            detail.join(", "),
            worst_sat,
            c_dev[1] * 1e3,
            band * 1e3,
            c_dev[2] * 1e3
        ),
    )
}

fn config_c_fixed_point() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc);
    let cfg = CircuitConfig::default();
    let mut worst = 0.0f64;
    for i in 0..LEAK_KERNELS as u32 {
        let k = Kernel::random(i, 3, &mut rng);
        let leak = derive_leakage(&k, &cfg);
        let (v, _) = integrate_window(&k, &[], 0, 1_000_000, &cfg, 0).unwrap();
        worst = worst.max((v - cfg.v_precharge).abs());
        let mut s = MacState {
            v: cfg.v_precharge,
            t_us: 0.0,
        };
        for _ in 0..1000 {
            s = evolve(s, 1000.0, &leak, &cfg).unwrap();
            worst = worst.max((s.v - cfg.v_precharge).abs());
        }
    }
    outcome(
        worst < FIXED_POINT_TOL_V,
        format!("max drift over 1 s = {worst:.3e} V (tol {FIXED_POINT_TOL_V:e})"),
    )
}

fn bandwidth_energy_trend() -> Outcome {
    let cfg = ExperimentConfig::default();
    let csv = match cmd_sweep(&cfg) {
        Ok(csv) => csv,
        Err(e) => return outcome(false, format!("sweep failed: {e:#}")),
    };
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let (t, bw, imp) = (col("t_intg_ms"), col("bandwidth"), col("improvement"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    let at = |ms: f64| rows.iter().find(|r| r[t] == ms).unwrap();
    let (fine, coarse) = (at(1.0), at(1000.0));
    let pass = fine[bw] >= coarse[bw] && coarse[imp] >= fine[imp] && fine[imp] >= 1.0;
    outcome(
        pass,
        format!(
            "bandwidth 1ms {:.3e} vs 1000ms {:.3e}; improvement 1000ms {:.4} >= 1ms {:.4} >= 1",
            fine[bw], coarse[bw], coarse[imp], fine[imp]
        ),
    )
}

fn conservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0);
    let spec = ConvSpec::default();
    let cfg = CircuitConfig::default();
    let mut failures = Vec::new();
    for i in 0..CONSERVATION_STREAMS {
        let w = rng.random_range(3..=12);
        let h = rng.random_range(3..=12);
        let t_intg = rng.random_range(1..=5_000);
        let stream = random_stream(&mut rng, w, h, 300, 50_000);
        let frames = bin_events(&stream, t_intg).unwrap();
        if frames.iter().map(|f| f.total()).sum::<u64>() != stream.len() as u64 {
            failures.push(format!("binning stream {i}"));
        }
        let kernels: Vec<Kernel> = (0..4).map(|k| Kernel::random(k, 3, &mut rng)).collect();
        let fine = p2m_conv(&stream, &kernels, &spec, &cfg, t_intg, i as u64).unwrap();
        let ratio = rng.random_range(1..=7);
        let coarse = temporal_rebin(&fine, ratio).unwrap();
        if coarse.iter().map(SpikeFrame::total).sum::<u64>() != fine.iter().map(SpikeFrame::total).sum::<u64>() {
            failures.push(format!("rebin stream {i}"));
        }
        let bytes = write_evt1(&stream);
        match read_evt1(&bytes) {
            Ok(back) if back == stream && write_evt1(&back) == bytes => {}
            _ => failures.push(format!("evt1 stream {i}")),
        }
    }
    let spec_net = NetworkSpec::reference((4, 16, 16), [4, 8, 8, 8], 16, 10).unwrap();
    for i in 0..100 {
        let bundle: WeightBundle = WeightBundle::random(&spec_net, 1.0, &mut rng).unwrap();
        let bytes = save_weights(&bundle);
        match load_weights::<f64>(&bytes) {
            Ok(back) if back == bundle && save_weights(&back) == bytes => {}
            _ => failures.push(format!("weights bundle {i}")),
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{CONSERVATION_STREAMS} streams (binning, rebin, EVT1) + 100 weight bundles; failures: {:?}",
            failures
        ),
    )
}

fn snn_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5);
    let mut lif_worst = 0.0f64;
    let mut spike_mismatch = 0;
    for _ in 0..LIF_SEQUENCES {
        let n = rng.random_range(1..=16);
        let steps = rng.random_range(1..=50);
        let p = LifParams {
            tau: rng.random_range(1.0..6.0),
            v_th: rng.random_range(0.2..2.0),
        };
        let mut state = LifState::zeros(n);
        let mut hand = vec![0.0f64; n];
        for _ in 0..steps {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..3.0)).collect();
            let (next, spikes) = lif_step(&state, &x, &p).unwrap();
            for j in 0..n {
                hand[j] += (x[j] - hand[j]) / p.tau;
                let fired = hand[j] >= p.v_th;
                if fired {
                    hand[j] = 0.0;
                }
                spike_mismatch += usize::from(fired != spikes[j]);
                lif_worst = lif_worst.max((next.v[j] - hand[j]).abs());
            }
            state = next;
        }
    }

    let mut bn_worst = 0.0f64;
    for _ in 0..100 {
        let (out, per) = (rng.random_range(1..8), rng.random_range(1..40));
        let w: Vec<f64> = (0..out * per).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..out).map(|_| rng.random_range(-1.0..1.0)).collect();
        let bn = BatchNorm {
            gamma: (0..out).map(|_| rng.random_range(0.1..2.0)).collect(),
            beta: (0..out).map(|_| rng.random_range(-1.0..1.0)).collect(),
            mean: (0..out).map(|_| rng.random_range(-1.0..1.0)).collect(),
            var: (0..out).map(|_| rng.random_range(0.01..3.0)).collect(),
            eps: 1e-5,
        };
        let x: Vec<f64> = (0..per).map(|_| rng.random_range(-2.0..2.0)).collect();
        let (fw, fb) = bn_fold(&w, &b, &bn).unwrap();
        for o in 0..out {
            let dot = |ws: &[f64]| ws.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
            let want = bn.apply(o, dot(&w[o * per..(o + 1) * per]) + b[o]);
            let got = dot(&fw[o * per..(o + 1) * per]) + fb[o];
            bn_worst = bn_worst.max((got - want).abs() / want.abs().max(1.0));
        }
    }

    let mut pool_mismatch = 0;
    for _ in 0..100 {
        let (c, h, w) = (rng.random_range(1..5), rng.random_range(2..12), rng.random_range(2..12));
        let grid: Vec<u8> = (0..c * h * w).map(|_| rng.random_range(0..2)).collect();
        let (out, ho, wo) = maxpool_spikes(&grid, c, h, w);
        for ch in 0..c {
            for y in 0..h / 2 {
                for x in 0..w / 2 {
                    let m = [(0, 0), (0, 1), (1, 0), (1, 1)]
                        .iter()
                        .map(|(dy, dx)| grid[(ch * h + 2 * y + dy) * w + 2 * x + dx])
                        .max()
                        .unwrap();
                    pool_mismatch += usize::from((ho, wo) != (h / 2, w / 2) || out[(ch * ho + y) * wo + x] != m);
                }
            }
        }
    }
    outcome(
        lif_worst <= LIF_TOL && spike_mismatch == 0 && bn_worst <= BN_REL_TOL && pool_mismatch == 0,
        format!(
            "LIF max err {lif_worst:.1e} (tol {LIF_TOL:e}), spike mismatches {spike_mismatch}; \
             bn_fold max rel err {bn_worst:.1e} (tol {BN_REL_TOL:e}); maxpool mismatches {pool_mismatch}"
        ),
    )
}

fn p2m(args: &[&str], threads: &str) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_p2m"))
        .args(args)
        .env("P2M_THREADS", threads)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&out.stderr).into_owned())
    }
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("det.cfg");
    std::fs::write(
        &config,
        "input.synthetic.width=34\ninput.synthetic.height=34\ninput.synthetic.rate=200\n\
         input.synthetic.duration_ms=500\nnetwork.t_coarse_ms=100\nt_intg_ms=1,10,100\nrun.t_intg_ms=10\nseed=11\n",
    )
    .unwrap();
    let config = config.to_str().unwrap();
    let mut snapshots = Vec::new();
    for (run, threads) in ["1", "4", "1", "4"].iter().enumerate() {
        let dir = tmp.path().join(format!("run{run}"));
        let dir = dir.to_str().unwrap();
        for cmd in ["trace", "sweep", "run"] {
            if let Err(e) = p2m(&["--config", config, "--out", dir, cmd], threads) {
                return outcome(false, format!("{cmd} with P2M_THREADS={threads} failed: {e}"));
            }
        }
        snapshots.push(snapshot(Path::new(dir)));
    }
    let names: Vec<&str> = snapshots[0].iter().map(|(n, _)| n.as_str()).collect();
    let identical = snapshots.iter().all(|s| s == &snapshots[0]);
    outcome(
        identical && names.len() == 4,
        format!("trace/sweep/run twice each at P2M_THREADS 1 and 4; files {names:?}; byte-identical: {identical}"),
    )
}

fn fit_samples(cfg: &CircuitConfig, n: usize, max_events: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let k = Kernel::random(i as u32, 3, &mut rng);
            let m = rng.random_range(0..=max_events);
            let mut events: Vec<LocalEvent> = (0..m)
                .map(|_| {
                    LocalEvent::new(
                        rng.random_range(0..1000),
                        Polarity::from_bit(rng.random()),
                        rng.random_range(0..3),
                        rng.random_range(0..3),
                    )
                })
                .collect();
            events.sort_by_key(|e| e.t_us);
            let p = window_preactivation(&k, &events).unwrap();
            (p, integrate_window(&k, &events, 0, 1000, cfg, 0).unwrap().0)
        })
        .collect()
}

fn transfer_fit() -> Outcome {
    let linear_cfg = CircuitConfig::default().ideal_linear();
    let exact = fit_transfer_curve(&fit_samples(&linear_cfg, 200, 24, 1)).unwrap();
    let c = &exact.coefficients;
    let linear_ok = (c[0] - linear_cfg.v_precharge).abs() <= FIT_TOL
        && (c[1] - linear_cfg.k_step).abs() <= FIT_TOL
        && c[2].abs() < FIT_TOL
        && c[3].abs() < FIT_TOL;

    let nonlinear_cfg = CircuitConfig {
        nonlinear_step: true,
        ..linear_cfg
    };
    let samples = fit_samples(&nonlinear_cfg, 400, 60, 2);
    let cubic = fit_transfer_curve(&samples).unwrap();
    let line = fit_polynomial(&samples, 1).unwrap();
    outcome(
        linear_ok && cubic.rmse < line.rmse,
        format!(
            "linear data: c0-v_pre {:.1e}, c1-k_step {:.1e}, c2 {:.1e}, c3 {:.1e} (tol {FIT_TOL:e}); \
             nonlinear rmse cubic {:.3e} < linear {:.3e}",
            c[0] - linear_cfg.v_precharge,
            c[1] - linear_cfg.k_step,
            c[2],
            c[3],
            cubic.rmse,
            line.rmse
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 ode-oracle", ode_oracle),
        ("2 analog-digital-equivalence", analog_digital_equivalence),
        ("3 leakage-config-ordering", leakage_ordering),
        ("4 config-c-fixed-point", config_c_fixed_point),
        ("5 bandwidth-energy-trend", bandwidth_energy_trend),
        ("6 conservation", conservation),
        ("7 snn-oracles", snn_oracles),
        ("8 determinism", determinism),
        ("9 transfer-fit", transfer_fit),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let o = run();
        failed += usize::from(!o.pass);
        println!("[{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {}/9 passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
