use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use latline::analysis::{
    ber_sweep, eye_diagram, sensitivity_field, simulate_link, NoiseLevel, SweepVariable,
};
use latline::array::{receive, steering_vector, MultiChannelSignal, NoiseKind};
use latline::beamformer::BeamformerWeights;
use latline::io::{self as lio, round_significant, to_stable_json, WeightsExport};
use latline::modem::ActuatorFilter;
use latline::physics::{pressure_field_grid, FieldQuantity, GridSpec};
use latline::scenario::Scenario;
use serde_json::json;

use crate::{Cli, Command, LinkOverrides, NoiseArg, Quantity, RangeArgs, SweepKind};

#[derive(Debug)]
pub enum CliError {
    /// Rejected input; exit status 2.
    Config(String),
    /// Failure while running; exit status 1.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<latline::Error> for CliError {
    fn from(e: latline::Error) -> Self {
        use latline::Error as E;
        match e {
            E::ConfigInvalid { .. }
            | E::PointInsideSource { .. }
            | E::DegenerateFingerprint
            | E::EmptyGrid
            | E::Json(_)
            | E::Parse(_) => CliError::Config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(format!("{e:#}"))
    }
}

fn config_err(field: &str, reason: impl fmt::Display) -> CliError {
    CliError::Config(format!("invalid configuration: {field}: {reason}"))
}

type CliResult<T> = Result<T, CliError>;

pub fn run(cli: Cli) -> CliResult<String> {
    let overrides = match &cli.command {
        Command::Simulate { link, .. }
        | Command::Sweep { link, .. }
        | Command::Eye { link, .. }
        | Command::DumpConfig { link } => link.clone(),
        Command::Field { .. } | Command::Sensitivity { .. } => LinkOverrides::default(),
    };
    let scenario = load_scenario(cli.scenario.as_deref(), cli.seed, &overrides)?;
    let out = Output::new(&cli.out, &scenario);

    match cli.command {
        Command::Simulate { waveforms, .. } => {
            simulate(&scenario, &out, waveforms || scenario.output.waveforms)
        }
        Command::Sweep {
            kind,
            range,
            trials,
            ..
        } => sweep(&scenario, &out, kind, &range, trials),
        Command::Field {
            plane,
            extent,
            resolution,
            quantity,
            time,
        } => field(&scenario, &out, &plane, extent, resolution, quantity, time),
        Command::Sensitivity {
            extent,
            resolution,
            probe_radius,
        } => sensitivity(&scenario, &out, extent, resolution, probe_radius),
        Command::Eye { traces, .. } => eye(&scenario, &out, traces),
        Command::DumpConfig { .. } => {
            let text = scenario.to_json()?;
            out.write("scenario.json", |w| Ok(writeln!(w, "{text}")?))?;
            Ok(text)
        }
    }
}

fn load_scenario(path: Option<&Path>, seed: Option<u64>, o: &LinkOverrides) -> CliResult<Scenario> {
    let mut s = match path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("reading scenario {}", p.display()))?;
            Scenario::parse(&text)
                .map_err(|e| CliError::Config(format!("scenario {}: {e}", p.display())))?
        }
        None => Scenario::default(),
    };
    let link = &mut s.link;
    if let Some(seed) = seed {
        link.seed = seed;
    }
    if let Some(db) = o.snr_db {
        link.noise.level = NoiseLevel::TargetSnrDb(db);
    }
    if let Some(sigma) = o.sigma_n {
        link.noise.level = NoiseLevel::Sigma(sigma);
    }
    if let Some(bits) = o.bits {
        link.bit_count = bits;
    }
    if let Some(rate) = o.bit_rate {
        link.bpsk.bit_rate = rate;
    }
    if let Some((natural_frequency, damping)) = o.actuator {
        link.actuator = Some(ActuatorFilter {
            natural_frequency,
            damping,
        });
    }
    if let Some(kind) = o.noise {
        link.noise.kind = match kind {
            NoiseArg::White => NoiseKind::White,
            NoiseArg::Kolmogorov => NoiseKind::Kolmogorov,
        };
    }
    s.validate()?;
    Ok(s)
}

/// All writes go through here, so nothing lands outside the output directory.
struct Output {
    dir: PathBuf,
}

impl Output {
    fn new(root: &Path, scenario: &Scenario) -> Self {
        let dir = match &scenario.output.dir {
            Some(sub) => root.join(sub),
            None => root.to_path_buf(),
        };
        Output { dir }
    }

    fn path(&self, name: &str) -> anyhow::Result<PathBuf> {
        fs::create_dir_all(&self.dir)
            .with_context(|| format!("creating {}", self.dir.display()))?;
        Ok(self.dir.join(name))
    }

    fn write(
        &self,
        name: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> latline::Result<()>,
    ) -> CliResult<()> {
        let path = self.path(name)?;
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        body(&mut w).map_err(|e| CliError::Runtime(format!("writing {}: {e}", path.display())))?;
        w.flush()
            .with_context(|| format!("writing {}", path.display()))?;
        eprintln!("wrote {}", path.display());
        Ok(())
    }

    fn write_json<T: serde::Serialize>(&self, name: &str, value: &T) -> CliResult<String> {
        let text = to_stable_json(value)?;
        self.write(name, |w| Ok(writeln!(w, "{text}")?))?;
        Ok(text)
    }
}

fn simulate(scenario: &Scenario, out: &Output, waveforms: bool) -> CliResult<String> {
    let link = &scenario.link;
    let run = simulate_link(link)?;
    let report = out.write_json("report.json", &run.report)?;

    let array = link.array.build()?;
    out.write("array.json", |w| {
        Ok(writeln!(w, "{}", serde_json::to_string_pretty(&array)?)?)
    })?;
    let h = steering_vector(&array, &link.source)?;
    out.write_json(
        "weights.json",
        &WeightsExport::from(&BeamformerWeights::matched(&h)?),
    )?;

    if waveforms {
        let fs = link.bpsk.sample_rate;
        out.write("tx.csv", |w| lio::write_waveform_csv(w, &run.drive, fs))?;
        out.write("source.csv", |w| {
            lio::write_waveform_csv(w, &run.source_signal, fs)
        })?;
        out.write("fused.csv", |w| lio::write_waveform_csv(w, &run.fused, fs))?;
        let noise = link.noise_model()?;
        let received: MultiChannelSignal = receive(
            &link.medium,
            &link.source,
            &run.drive,
            fs,
            &array,
            &noise,
            link.trial,
        )?;
        out.write("received.csv", |w| {
            lio::write_multichannel_csv(w, &received)
        })?;
        lio::write_raw(&out.path("received.f64")?, &received.channels, fs)?;
        lio::write_raw(
            &out.path("fused.f64")?,
            std::slice::from_ref(&run.fused),
            fs,
        )?;
        eprintln!("wrote raw records and sidecars in {}", out.dir.display());
    }
    Ok(report)
}

fn sweep_values(r: &RangeArgs) -> CliResult<Vec<f64>> {
    if let Some(v) = &r.values {
        if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
            return Err(config_err("values", "need finite comma-separated numbers"));
        }
        return Ok(v.clone());
    }
    let (from, to) = match (r.from, r.to) {
        (Some(a), Some(b)) if a.is_finite() && b.is_finite() => (a, b),
        (Some(_), Some(_)) => return Err(config_err("from", "range ends must be finite")),
        _ => return Err(config_err("values", "give either --values or --from/--to")),
    };
    if let Some(step) = r.step {
        if !(step.is_finite() && step != 0.0) || (to - from) * step < 0.0 {
            return Err(config_err(
                "step",
                "must be non-zero and point from --from towards --to",
            ));
        }
        let n = ((to - from) / step + 1e-9).floor() as usize + 1;
        if n > 100_000 {
            return Err(config_err("step", "range has more than 100000 points"));
        }
        return Ok((0..n)
            .map(|i| round_significant(from + i as f64 * step, 12))
            .collect());
    }
    let points = r.points.unwrap_or(10);
    match points {
        0 => Err(config_err("points", "must be at least 1")),
        1 => Ok(vec![from]),
        n => Ok((0..n)
            .map(|i| round_significant(from + (to - from) * i as f64 / (n - 1) as f64, 12))
            .collect()),
    }
}

fn sweep(
    scenario: &Scenario,
    out: &Output,
    kind: SweepKind,
    range: &RangeArgs,
    trials: usize,
) -> CliResult<String> {
    let values = sweep_values(range)?;
    let (variable, name) = match kind {
        SweepKind::Snr => (SweepVariable::Snr, "snr"),
        SweepKind::Distance => (SweepVariable::Distance, "distance"),
        SweepKind::Rate => (SweepVariable::Rate, "rate"),
    };
    let rows = ber_sweep(&scenario.link, variable, &values, trials)?;
    let file = format!("sweep_{name}.csv");
    out.write(&file, |w| lio::write_sweep_csv(w, &rows))?;
    Ok(to_stable_json(&json!({
        "variable": variable,
        "trials": trials,
        "bits_per_trial": scenario.link.bit_count,
        "csv": file,
        "rows": rows,
    }))?)
}

fn parse_plane(plane: &str) -> CliResult<(usize, f64)> {
    let (axis, level) = plane
        .split_once('=')
        .ok_or_else(|| config_err("plane", "expected axis=level, e.g. z=0"))?;
    let axis = match axis.trim() {
        "x" => 0,
        "y" => 1,
        "z" => 2,
        other => return Err(config_err("plane", format!("unknown axis `{other}`"))),
    };
    let level: f64 = level
        .trim()
        .parse()
        .map_err(|e| config_err("plane", format!("level: {e}")))?;
    if !level.is_finite() {
        return Err(config_err("plane", "level must be finite"));
    }
    Ok((axis, level))
}

fn field(
    scenario: &Scenario,
    out: &Output,
    plane: &str,
    extent: f64,
    resolution: usize,
    quantity: Quantity,
    time: f64,
) -> CliResult<String> {
    let (normal, level) = parse_plane(plane)?;
    if !(extent > 0.0 && extent.is_finite()) {
        return Err(config_err("extent", "must be positive and finite"));
    }
    if resolution < 2 {
        return Err(config_err("resolution", "must be at least 2"));
    }
    if !time.is_finite() {
        return Err(config_err("time", "must be finite"));
    }
    let link = &scenario.link;
    let spec = GridSpec::plane(normal, level, link.source.position, extent, resolution);
    let quantity = match quantity {
        Quantity::Pressure => FieldQuantity::Pressure,
        Quantity::Geometric => FieldQuantity::Geometric,
    };
    let grid = pressure_field_grid(&link.medium, &link.source, &spec, quantity, time)?;
    out.write("field.csv", |w| lio::write_field_csv(w, &grid))?;
    out.write_json("field.json", &lio::field_metadata(&grid, time))
}

fn sensitivity(
    scenario: &Scenario,
    out: &Output,
    extent: f64,
    resolution: usize,
    probe_radius: Option<f64>,
) -> CliResult<String> {
    if !(extent > 0.0 && extent.is_finite()) {
        return Err(config_err("extent", "must be positive and finite"));
    }
    if resolution < 2 {
        return Err(config_err("resolution", "must be at least 2"));
    }
    let link = &scenario.link;
    let array = link.array.build()?;
    let spec = GridSpec::cube(array.centroid(), extent, resolution);
    let radius = probe_radius.unwrap_or(link.source.radius);
    let grid = sensitivity_field(&array, &spec, link.source.vibration_axis, radius)?;
    out.write("sensitivity.csv", |w| lio::write_sensitivity_csv(w, &grid))?;
    out.write_json("sensitivity.json", &lio::sensitivity_metadata(&grid))
}

fn eye(scenario: &Scenario, out: &Output, traces: usize) -> CliResult<String> {
    if traces == 0 {
        return Err(config_err("traces", "must be at least 1"));
    }
    let link = &scenario.link;
    let run = simulate_link(link)?;
    let eye = eye_diagram(
        &run.fused,
        &run.bits,
        &link.bpsk,
        &run.reference,
        run.report.source_strength,
        traces,
    )?;
    out.write("eye.csv", |w| {
        lio::write_eye_csv(w, &eye, link.bpsk.sample_rate)
    })?;
    out.write_json(
        "eye.json",
        &json!({
            "traces": eye.traces.len(),
            "samples_per_trace": eye.traces.first().map_or(0, Vec::len),
            "sample_rate": link.bpsk.sample_rate,
            "decision_offsets": eye.decision_offsets,
            "level": eye.level,
            "eye_height": eye.eye_height,
            "normalized_eye_height": eye.normalized_eye_height,
            "ber": run.report.ber,
            "mean_input_snr_db": run.report.mean_input_snr_db,
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn range(
        from: Option<f64>,
        to: Option<f64>,
        step: Option<f64>,
        points: Option<usize>,
    ) -> RangeArgs {
        RangeArgs {
            from,
            to,
            step,
            points,
            values: None,
        }
    }

    #[test]
    fn stepped_range_includes_end() {
        let v = sweep_values(&range(Some(-15.0), Some(5.0), Some(2.0), None)).unwrap();
        assert_eq!(v.len(), 11);
        assert_eq!(v[10], 5.0);
        let v = sweep_values(&range(Some(0.05), Some(0.5), Some(0.05), None)).unwrap();
        assert_eq!(v.len(), 10);
        assert_eq!(v[2], 0.15);
    }

    #[test]
    fn evenly_spaced_default_and_errors() {
        let v = sweep_values(&range(Some(0.0), Some(1.0), None, None)).unwrap();
        assert_eq!(v.len(), 10);
        assert_eq!(v[9], 1.0);
        assert!(sweep_values(&range(Some(0.0), Some(1.0), Some(-0.1), None)).is_err());
        assert!(sweep_values(&range(Some(0.0), Some(1.0), Some(0.0), None)).is_err());
        assert!(sweep_values(&range(None, None, None, None)).is_err());
    }

    #[test]
    fn plane_parsing() {
        assert_eq!(parse_plane("z=0").unwrap(), (2, 0.0));
        assert_eq!(parse_plane(" y = -0.1 ").unwrap(), (1, -0.1));
        assert!(parse_plane("z").is_err());
        assert!(parse_plane("q=1").is_err());
        assert!(parse_plane("x=inf").is_err());
    }

    #[test]
    fn core_errors_map_to_exit_codes() {
        assert_eq!(
            CliError::from(latline::Error::config("a", "b")).exit_code(),
            2
        );
        assert_eq!(
            CliError::from(latline::Error::LengthMismatch("x".into())).exit_code(),
            1
        );
    }
}
