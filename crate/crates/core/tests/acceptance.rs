//! Acceptance criteria, one line per criterion. Runs as a plain binary so the
//! PASS/FAIL lines are always printed; exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use latline::analysis::{
    attenuation_profile, ber_sweep, empirical_array_gain, eye_diagram, sensitivity_at,
    sensitivity_field, simulate_link, LinkConfig, NoiseLevel, NoiseSpec, SweepVariable,
};
use latline::array::{noise_channel, steering_vector, DualLineLayout, NoiseModel};
use latline::beamformer::{array_gain_report, Accumulator, BeamformerWeights};
use latline::modem::{coherent_demodulate, decoded_bits, modulate, ActuatorFilter, BpskConfig};
use latline::physics::{pressure_at, velocity_potential, DipoleSource, FluidMedium, GridSpec};
use latline::stats::{q_function, wilson_interval, Z_95};
use latline::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn default_link(snr_db: f64, bits: usize) -> LinkConfig {
    LinkConfig {
        noise: NoiseSpec {
            level: NoiseLevel::TargetSnrDb(snr_db),
            ..NoiseSpec::default()
        },
        bit_count: bits,
        ..LinkConfig::default()
    }
}

fn array_gain() -> Outcome {
    let cfg = LinkConfig::default();
    let array = cfg.array.build().map_err(|e| e.to_string())?;
    let h = steering_vector(&array, &cfg.source).map_err(|e| e.to_string())?;
    let p0 = cfg.source_strength();
    let sigma = cfg.resolve_sigma().map_err(|e| e.to_string())?;
    let report = array_gain_report(&h, sigma, p0).map_err(|e| e.to_string())?;
    let exact = 10.0 * 24f64.log10();
    let mc = empirical_array_gain(&h, p0, &NoiseModel::white(sigma, 1), 2000.0, 100, 10_000)
        .map_err(|e| e.to_string())?;
    check(
        h.len() == 24
            && (report.gain_db - exact).abs() < 1e-12
            && (mc.gain_db - exact).abs() <= 0.3,
        format!(
            "analytic {:.6} dB (exact {exact:.6}), Monte-Carlo {:.4} dB over 100 x 1e4",
            report.gain_db, mc.gain_db
        ),
    )
}

fn operating_point() -> Outcome {
    let r = simulate_link(&default_link(-5.0, 10_000))
        .map_err(|e| e.to_string())?
        .report;
    check(
        r.bit_errors == 0 && (r.mean_input_snr_db.unwrap_or(f64::NAN) + 5.0).abs() < 1e-9,
        format!(
            "{} errors in {} bits at mean input SNR {:.3} dB",
            r.bit_errors,
            r.bit_count,
            r.mean_input_snr_db.unwrap_or(f64::NAN)
        ),
    )
}

fn analytic_ber() -> Outcome {
    // (D/σ_D)² = 2 N · SNR_in · Σ sin²(ω_c m/f_s) over one symbol, with Σ = 50
    // for the default timing. Pick SNR_in so that Q(D/σ_D) = 1e-2.
    let q_inv = 2.326_347_874_040_841;
    let n = 24.0;
    let energy: f64 = (0..100)
        .map(|m| (2.0 * PI * 40.0 * m as f64 / 2000.0).sin().powi(2))
        .sum();
    let snr_db = 10.0 * (q_inv * q_inv / (2.0 * n * energy)).log10();
    let predicted = q_function(q_inv);
    let base = default_link(snr_db, 1000);
    let rows = ber_sweep(&base, SweepVariable::Snr, &[snr_db], 100).map_err(|e| e.to_string())?;
    let row = rows[0];
    let model = simulate_link(&base).map_err(|e| e.to_string())?.report;
    let ci = wilson_interval(row.bit_errors, row.bits, Z_95);
    let model_pred = model.predicted_ber.unwrap_or(f64::NAN);
    check(
        row.bits == 100_000 && ci.contains(predicted) && (model_pred - predicted).abs() < 1e-9,
        format!(
            "SNR {snr_db:.3} dB: {} errors / {} bits = {:.5}, 95% CI [{:.5}, {:.5}], Q = {predicted:.5} (model {model_pred:.5})",
            row.bit_errors, row.bits, row.ber, ci.low, ci.high
        ),
    )
}

fn attenuation() -> Outcome {
    let s = DipoleSource::default();
    let p = attenuation_profile(&FluidMedium::water(), &s, s.vibration_axis, 0.2, 2.0, 25)
        .map_err(|e| e.to_string())?;
    let slope = p.slope.unwrap_or(f64::NAN);
    check(
        (slope + 2.0).abs() < 1e-6,
        format!("on-axis log-log slope {slope:.12}"),
    )
}

fn decision_value() -> Outcome {
    let cfg = BpskConfig::default();
    let bits = [true, false, true, true, false];
    let y = modulate(&bits, &cfg).map_err(|e| e.to_string())?;
    let d = coherent_demodulate(&y, &cfg).map_err(|e| e.to_string())?;
    let worst = d
        .iter()
        .zip(&bits)
        .map(|(r, &b)| (r.metric - if b { 0.025 } else { -0.025 }).abs())
        .fold(0.0_f64, f64::max);
    check(
        cfg.cycle_per_symbol().gamma == 2.0 && cfg.symbol_period() == 0.05 && worst < 1e-4,
        format!("max |D_k ∓ 0.025| = {worst:.2e}"),
    )
}

fn loopback() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut failures = 0;
    for gamma in [1.0, 2.0, 4.0] {
        let cfg = BpskConfig {
            bit_rate: 40.0 / gamma,
            ..BpskConfig::default()
        };
        for _ in 0..1000 {
            let len = rng.random_range(1..=32);
            let bits: Vec<bool> = (0..len).map(|_| rng.random()).collect();
            let y = modulate(&bits, &cfg).map_err(|e| e.to_string())?;
            let back = decoded_bits(&coherent_demodulate(&y, &cfg).map_err(|e| e.to_string())?);
            failures += usize::from(back != bits);
        }
    }
    check(
        failures == 0,
        format!("{failures} of 3000 sequences mis-decoded across γ = 1, 2, 4"),
    )
}

fn rate_limit() -> Outcome {
    let filtered = |rate: f64| -> Result<f64, String> {
        let mut cfg = default_link(-5.0, 2000);
        cfg.bpsk.bit_rate = rate;
        cfg.actuator = Some(ActuatorFilter::new(40.0, 0.7).map_err(|e| e.to_string())?);
        Ok(simulate_link(&cfg).map_err(|e| e.to_string())?.report.ber)
    };
    let slow = filtered(20.0)?;
    let fast = filtered(100.0)?;
    check(
        slow == 0.0 && fast > 0.1,
        format!("actuator 40 Hz, ζ 0.7: BER(20 bps) = {slow}, BER(100 bps) = {fast:.4}"),
    )
}

fn anisotropy() -> Outcome {
    let array = DualLineLayout::default()
        .build()
        .map_err(|e| e.to_string())?;
    let radius = DipoleSource::default().radius;
    let fore = sensitivity_at(&array, Vec3::new(0.25, 0.0, 0.0), Vec3::X, radius)
        .map_err(|e| e.to_string())?;
    let side = sensitivity_at(&array, Vec3::new(0.0, 0.25, 0.0), Vec3::X, radius)
        .map_err(|e| e.to_string())?;
    let grid = sensitivity_field(
        &array,
        &GridSpec::cube(Vec3::ZERO, 0.4, 41),
        Vec3::X,
        radius,
    )
    .map_err(|e| e.to_string())?;
    let n = 41;
    let mut asym = 0;
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let a = grid.values[(k * n + j) * n + i];
                let b = grid.values[(k * n + j) * n + (n - 1 - i)];
                asym += usize::from(a != b);
            }
        }
    }
    check(
        fore > side && asym == 0,
        format!(
            "S(0.25,0,0) = {fore:.4} > S(0,0.25,0) = {side:.4}; {asym} asymmetric points of {}",
            n * n * n
        ),
    )
}

fn eye_opening() -> Outcome {
    let cfg = default_link(-5.0, 1000);
    let run = simulate_link(&cfg).map_err(|e| e.to_string())?;
    let p0 = run.report.source_strength;
    let eye = eye_diagram(&run.fused, &run.bits, &cfg.bpsk, &run.reference, p0, 999)
        .map_err(|e| e.to_string())?;
    let open = eye.normalized_eye_height.unwrap_or(f64::NAN);

    // same noise, no signal
    let array = cfg.array.build().map_err(|e| e.to_string())?;
    let h = steering_vector(&array, &cfg.source).map_err(|e| e.to_string())?;
    let w = BeamformerWeights::matched(&h).map_err(|e| e.to_string())?;
    let noise = cfg.noise_model().map_err(|e| e.to_string())?;
    let len = run.fused.len();
    let mut acc = Accumulator::new(&w, len);
    for i in 0..h.len() {
        acc.add_channel(i, &noise_channel(&noise, i, 0, len, 2000.0))
            .map_err(|e| e.to_string())?;
    }
    let noise_only = acc.finish();
    let closed = eye_diagram(&noise_only, &run.bits, &cfg.bpsk, &run.reference, p0, 999)
        .map_err(|e| e.to_string())?
        .normalized_eye_height
        .unwrap_or(f64::NAN);
    check(
        open >= 0.5 && closed < 0.0,
        format!("normalized eye {open:.3} at -5 dB; noise only {closed:.3}"),
    )
}

fn physics_consistency() -> Outcome {
    let medium = FluidMedium::water();
    let source = DipoleSource::new(
        0.01,
        0.015,
        40.0,
        Vec3::new(0.01, -0.02, 0.005),
        Vec3::new(0.6, 0.8, 0.0),
    )
    .map_err(|e| e.to_string())?;
    let w = source.angular_frequency();
    let mut worst = 0.0_f64;
    for (k, &p) in [
        Vec3::new(0.1, 0.05, 0.0),
        Vec3::new(-0.07, 0.2, 0.03),
        Vec3::new(0.3, -0.1, 0.2),
    ]
    .iter()
    .enumerate()
    {
        for m in 0..8 {
            // away from carrier zero crossings (multiples of 12.5 ms), where
            // a relative error is meaningless
            let t = 0.0031 + 0.025 * m as f64 + 0.0021 * k as f64;
            let dt = 1e-3 / w;
            let dphi = (velocity_potential(&source, p, t + dt).map_err(|e| e.to_string())?
                - velocity_potential(&source, p, t - dt).map_err(|e| e.to_string())?)
                / (2.0 * dt);
            let fd = -medium.density * dphi;
            let exact = pressure_at(&medium, &source, p, t).map_err(|e| e.to_string())?;
            worst = worst.max(((fd - exact) / exact).abs());
        }
    }
    // nodal plane: perpendicular to (0.6, 0.8, 0) through the source
    let mut nodal_max = 0.0_f64;
    for (u, v) in [(0.1, 0.0), (-0.2, 0.05), (0.05, 0.3)] {
        let p = source.position + Vec3::new(-0.8 * u, 0.6 * u, v);
        let offset = (p - source.position).dot(source.vibration_axis);
        // only count points the arithmetic places exactly on the plane
        if offset == 0.0 {
            nodal_max = nodal_max.max(
                pressure_at(&medium, &source, p, 0.013)
                    .map_err(|e| e.to_string())?
                    .abs(),
            );
        }
    }
    let axis_x = DipoleSource::default().at(Vec3::ZERO);
    for p in [
        Vec3::new(0.0, 0.3, 0.0),
        Vec3::new(0.0, -0.2, 0.4),
        Vec3::new(0.0, 1.0, -1.0),
    ] {
        nodal_max = nodal_max.max(
            pressure_at(&medium, &axis_x, p, 0.006)
                .map_err(|e| e.to_string())?
                .abs(),
        );
    }
    check(
        worst < 1e-6 && nodal_max == 0.0,
        format!("max relative FD error {worst:.2e}; max nodal |p| = {nodal_max}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("array gain identity", array_gain),
        (
            "operating point -5 dB, 1e4 bits error-free",
            operating_point,
        ),
        ("analytic BER oracle", analytic_ber),
        ("near-field 1/r^2 attenuation", attenuation),
        ("closed-form decision value", decision_value),
        ("noiseless loopback", loopback),
        ("cycle-per-symbol failure with actuator", rate_limit),
        ("sensitivity anisotropy and symmetry", anisotropy),
        ("eye opening", eye_opening),
        ("physics consistency", physics_consistency),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS  criterion {:>2}: {name}: {d} ({secs:.2} s)", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL  criterion {:>2}: {name}: {d} ({secs:.2} s)", i + 1)
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
