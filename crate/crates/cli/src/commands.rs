use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use sympcool::coherence::{
    allan_deviation, predict_coherence_time, scatter_absorption, simulate_spin_echo, AllanOptions, EchoConfig,
    EchoSchedule, NoiseTrace,
};
use sympcool::engine::{Backend, FockInit, HeatingModel};
use sympcool::levels::InternalState;
use sympcool::modes::ChainModes;
use sympcool::protocol::{
    bose_nbar, duty_cycle, prepared_state, run_cooling, simulate_suppression, sweep_steady_state, CoolingCycle,
    CoolingSchedule, SweepOptions,
};
use sympcool::scenario::CHAIN_TEMPERATURE_K;
use sympcool::seed::derive_seed;
use sympcool::thermometry::{chain_spectrum, ratio_nbar, sideband_probabilities, SidebandProbe};

use crate::config::{Format, RunConfig};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Modes,
    Cool,
    Suppress,
    Sweep,
    Scan,
    Probe,
    Coherence,
    Allan,
    Scatter,
}

impl Command {
    fn needs_cycle(self) -> bool {
        matches!(self, Command::Cool | Command::Suppress | Command::Sweep | Command::Probe | Command::Coherence | Command::Scatter)
    }
}

/// Result tables and documents of one command, not yet written.
#[derive(Default)]
pub struct Artifacts {
    pub tables: Vec<(String, Table)>,
    pub documents: Vec<(String, Value)>,
}

pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Checks every section the command reads, before any simulation starts.
pub fn validate(cfg: &RunConfig, cmd: Command) -> Result<(), CliError> {
    cfg.trap.validate().map_err(|e| CliError::at("trap", e))?;
    cfg.levels.validate().map_err(|e| CliError::at("levels", e))?;
    if cfg.engine.trajectories == 0 {
        return Err(CliError::config("invalid_value", "engine.trajectories", "must be >= 1"));
    }
    if cfg.output.formats.is_empty() {
        return Err(CliError::config("invalid_value", "output.formats", "at least one format is required"));
    }
    let modes = ChainModes::compute(&cfg.trap).map_err(|e| CliError::at("trap", e))?;
    if cmd.needs_cycle() {
        let cycle = checked_cycle(cfg)?;
        cfg.heating.validate().map_err(|e| CliError::at("heating", e))?;
        match cmd {
            Command::Suppress | Command::Coherence | Command::Scatter => {
                cfg.schedule().validate(&cycle).map_err(|e| CliError::at("schedule", e))?;
            }
            Command::Sweep => {
                if cfg.sweep.pulses.is_empty() {
                    return Err(CliError::config("invalid_value", "sweep.pulses", "at least one pulse count is required"));
                }
                if cfg.sweep.runs == 0 {
                    return Err(CliError::config("invalid_value", "sweep.runs", "must be >= 1"));
                }
                for &p in &cfg.sweep.pulses {
                    let s = CoolingSchedule { pulses_per_burst: p, ..cfg.schedule() };
                    s.validate(&cycle).map_err(|e| CliError::at("sweep", e))?;
                }
            }
            Command::Probe => {
                let p = &cfg.probe;
                if p.nbar.is_empty() || p.nbar.iter().any(|n| !(n.is_finite() && *n > 0.0)) {
                    return Err(CliError::config("invalid_value", "probe.nbar", "need one or more finite values > 0"));
                }
                if !(p.fraction > 0.0 && p.duration_s > 0.0 && p.shots > 0) {
                    return Err(CliError::config("invalid_value", "probe", "fraction, duration_s and shots must be > 0"));
                }
            }
            _ => {}
        }
        if cmd == Command::Coherence {
            cfg.coherence.budget.validate().map_err(|e| CliError::at("coherence.budget", e))?;
            cfg.noise.process().map_err(|e| CliError::at("noise", e))?.validate().map_err(|e| CliError::at("noise", e))?;
        }
    }
    match cmd {
        Command::Scan => {
            let s = &cfg.scan;
            if s.ion >= cfg.trap.n_ions {
                return Err(CliError::config("invalid_value", "scan.ion", format!("ion {} out of range", s.ion)));
            }
            if !(s.step_hz > 0.0 && s.stop_hz > s.start_hz) {
                return Err(CliError::config("invalid_value", "scan.step_hz", "need step_hz > 0 and stop_hz > start_hz"));
            }
            if s.radial_nbar.as_ref().is_some_and(|v| v.len() != cfg.trap.n_ions) {
                return Err(CliError::config("invalid_value", "scan.radial_nbar", "one value per radial mode is required"));
            }
            cfg.setup().axial_nbar_values(&modes).map_err(|e| CliError::at("cooling", e))?;
        }
        Command::Allan => match &cfg.allan.input {
            None => return Err(CliError::config("missing_value", "allan.input", "an input CSV is required")),
            Some(p) if !p.is_file() => {
                return Err(CliError::config("invalid_value", "allan.input", format!("{} does not exist", p.display())));
            }
            Some(_) => {}
        },
        _ => {}
    }
    Ok(())
}

fn checked_cycle(cfg: &RunConfig) -> Result<CoolingCycle, CliError> {
    cfg.cooling.calibration.validate().map_err(|e| CliError::at("cooling.calibration", e))?;
    cfg.setup().cycle().map_err(|e| CliError::at("cooling", e))
}

pub fn run(cfg: &RunConfig, cmd: Command) -> Result<Artifacts, CliError> {
    let rt = CliError::runtime;
    let mut out = Artifacts::default();
    let backend = cfg.engine.backend();
    let setup = cfg.setup();
    match cmd {
        Command::Modes => {
            let modes = ChainModes::compute(&cfg.trap).map_err(rt)?;
            let mut t = Table::new(&["axis", "mode", "frequency_hz", "ion", "participation", "lamb_dicke"]);
            for (axis, m) in [("axial", &modes.axial), ("radial", &modes.radial)] {
                for k in 0..m.n_modes() {
                    for ion in 0..cfg.trap.n_ions {
                        t.push(vec![
                            axis.into(),
                            k.to_string(),
                            num(m.frequencies_hz[k]),
                            ion.to_string(),
                            num(m.participation[ion][k]),
                            num(m.lamb_dicke[ion][k]),
                        ]);
                    }
                }
            }
            out.tables.push(("modes".into(), t));
            out.documents.push(("modes".into(), serde_json::to_value(&modes).expect("serialisable")));
        }
        Command::Cool => {
            let c = &cfg.cooling;
            let (engine, cycle) = setup.build(cfg.heating, cfg.engine.n_max, c.initial_nbar).map_err(rt)?;
            let prep = setup.prep().map_err(rt)?;
            let mut st = prepared_state(&engine, backend, &FockInit::Thermal(c.initial_nbar), &prep).map_err(rt)?;
            let trace = run_cooling(&engine, &mut st, &cycle, c.cycles).map_err(rt)?;
            let mut t = Table::new(&["cycle", "nbar", "nbar_stderr"]);
            for p in &trace {
                t.push(vec![p.cycle.to_string(), num(p.nbar.value), num(p.nbar.stderr)]);
            }
            out.tables.push(("cool".into(), t));
            let last = trace.last().expect("at least one point").nbar;
            out.documents.push((
                "cool".into(),
                json!({ "mode": c.mode, "coolant": setup.coolant, "n_max": engine.config().n_max, "final_nbar": last }),
            ));
        }
        Command::Suppress => {
            let schedule = cfg.schedule();
            let (r, n_max) =
                simulate_suppression(&setup, &schedule, cfg.heating, backend, cfg.schedule.initial_nbar, cfg.engine.n_max)
                    .map_err(rt)?;
            let mut t = Table::new(&["time_s", "nbar", "nbar_stderr"]);
            for p in &r.samples {
                t.push(vec![num(p.time_s), num(p.nbar.value), num(p.nbar.stderr)]);
            }
            out.tables.push(("suppress".into(), t));
            let duty = duty_cycle(&schedule, &setup.cycle().map_err(rt)?).map_err(rt)?;
            out.documents.push(("suppress".into(), json!({ "steady": r.steady, "duty_cycle": duty, "n_max": n_max })));
        }
        Command::Sweep => {
            let opts = SweepOptions {
                total_duration_s: cfg.schedule.total_duration_s,
                runs: cfg.sweep.runs,
                backend,
                initial_nbar: cfg.schedule.initial_nbar,
                n_max: cfg.engine.n_max,
            };
            let pts = sweep_steady_state(&setup, &cfg.sweep.pulses, cfg.schedule.period_s, cfg.heating, &opts).map_err(rt)?;
            let mut t = Table::new(&["pulses", "duty_cycle", "nbar", "nbar_stderr", "steady_runs"]);
            for p in &pts {
                t.push(vec![p.pulses.to_string(), num(p.duty_cycle), opt(p.nbar), opt(p.nbar_err), p.steady_runs.to_string()]);
            }
            out.tables.push(("sweep".into(), t));
        }
        Command::Scan => {
            let s = &cfg.scan;
            let modes = ChainModes::compute(&cfg.trap).map_err(rt)?;
            let axial = setup.axial_nbar_values(&modes).map_err(rt)?;
            let radial = match &s.radial_nbar {
                Some(v) => v.clone(),
                None => modes.radial.frequencies_hz.iter().map(|&f| bose_nbar(f, CHAIN_TEMPERATURE_K)).collect(),
            };
            let steps = ((s.stop_hz - s.start_hz) / s.step_hz).round() as usize;
            let offsets: Vec<f64> = (0..=steps).map(|k| s.start_hz + k as f64 * s.step_hz).collect();
            let spec = chain_spectrum(&modes, s.ion, &axial, &radial, s.rabi_hz, s.duration_s, &offsets).map_err(rt)?;
            let mut t = Table::new(&["offset_hz", "probability"]);
            for (d, p) in spec {
                t.push(vec![num(d), num(p)]);
            }
            out.tables.push(("scan".into(), t));
        }
        Command::Probe => {
            let p = &cfg.probe;
            let peak = p.nbar.iter().copied().fold(0.0, f64::max);
            let (engine, _) = setup.build(HeatingModel::none(), cfg.engine.n_max, peak).map_err(rt)?;
            let ec = engine.config();
            let probe =
                SidebandProbe { shots: p.shots, ..SidebandProbe::weak(ec.eta, ec.bath.mean_factor(), p.fraction, p.duration_s) };
            let labels = vec![InternalState::ZERO; ec.n_ions];
            let mut t = Table::new(&["nbar_true", "p_rsb", "p_bsb", "nbar_estimate", "nbar_stderr"]);
            for (k, &nbar) in p.nbar.iter().enumerate() {
                let b = match backend {
                    Backend::MonteCarlo { trajectories, seed } => {
                        Backend::MonteCarlo { trajectories, seed: derive_seed(seed, k as u64) }
                    }
                    Backend::Rate => Backend::Rate,
                };
                let st = engine.prepare(b, &labels, &FockInit::Thermal(nbar)).map_err(rt)?;
                let (red, blue) = sideband_probabilities(&engine, &st, setup.coolant, &probe).map_err(rt)?;
                let shots = st.trajectories().unwrap_or(p.shots);
                let (est, err) = match ratio_nbar(red.value, blue.value, shots) {
                    Ok(e) => (Some(e.nbar), Some(e.stderr)),
                    Err(_) => (None, None),
                };
                t.push(vec![num(nbar), num(red.value), num(blue.value), opt(est), opt(err)]);
            }
            out.tables.push(("probe".into(), t));
        }
        Command::Coherence => {
            let c = &cfg.coherence;
            let schedule = cfg.schedule();
            let cycle = setup.cycle().map_err(rt)?;
            let duty = duty_cycle(&schedule, &cycle).map_err(rt)?;
            let predictions: Vec<Value> = c
                .sigma_eps
                .iter()
                .map(|&s| {
                    predict_coherence_time(&c.budget, s, duty).map(|t| json!({ "sigma_eps": s, "coherence_time": t }))
                })
                .collect::<sympcool::Result<_>>()
                .map_err(rt)?;
            let echo = EchoConfig {
                schedule: EchoSchedule::from_schedule(&schedule, &cycle).map_err(rt)?,
                budget: c.budget.clone(),
                noise: cfg.noise.process().map_err(rt)?,
                wait_times_s: c.wait_times_s.clone(),
                shots: c.shots,
                seed: cfg.engine.master_seed,
                background_t_s: c.background_t_s,
            };
            let r = simulate_spin_echo(&echo).map_err(rt)?;
            let mut t = Table::new(&["wait_s", "fidelity", "fidelity_stderr"]);
            for p in &r.points {
                t.push(vec![num(p.wait_s), num(p.fidelity.value), num(p.fidelity.stderr)]);
            }
            out.tables.push(("coherence".into(), t));
            out.documents.push((
                "coherence".into(),
                json!({
                    "duty_cycle": duty,
                    "total_shift_hz": c.budget.total_shift_hz().map_err(rt)?,
                    "predictions": predictions,
                    "echo_fit": r.fit,
                }),
            ));
        }
        Command::Allan => {
            let a = &cfg.allan;
            let trace = read_trace(a.input.as_deref().expect("validated"))?;
            let opts = AllanOptions { method: a.method, normalized: a.normalized };
            let curve = allan_deviation(&trace, &a.taus_s, opts).map_err(|e| CliError::at("allan", e))?;
            let mut t = Table::new(&["tau_s", "sigma", "pairs"]);
            for p in &curve.points {
                t.push(vec![num(p.tau_s), num(p.sigma), p.pairs.to_string()]);
            }
            out.tables.push(("allan".into(), t));
        }
        Command::Scatter => {
            let s = &cfg.scatter;
            let pulses_per_s = cfg.schedule.pulses_per_burst as f64 / cfg.schedule.period_s;
            let b = scatter_absorption(s.wavelength_m, s.spacing_m, pulses_per_s).map_err(|e| CliError::at("scatter", e))?;
            let mut t = Table::new(&["photons_per_pulse", "pulses_per_s", "photons_per_s"]);
            t.push(vec![num(b.photons_per_pulse), num(pulses_per_s), num(b.photons_per_s)]);
            out.tables.push(("scatter".into(), t));
            out.documents.push(("scatter".into(), serde_json::to_value(b).expect("serialisable")));
        }
    }
    Ok(out)
}

fn read_trace(path: &Path) -> Result<NoiseTrace, CliError> {
    let bad = |msg: String| CliError::config("invalid_input", "allan.input", msg);
    let mut rdr = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let mut samples = Vec::new();
    for (line, rec) in rdr.deserialize::<(f64, f64)>().enumerate() {
        samples.push(rec.map_err(|e| bad(format!("row {}: {e}", line + 1)))?);
    }
    NoiseTrace::new(samples).map_err(|e| bad(e.to_string()))
}

/// Writes the artifacts requested by `formats` and returns the file names.
pub fn write(dir: &Path, art: &Artifacts, formats: &[Format]) -> Result<Vec<String>, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut written = Vec::new();
    if formats.contains(&Format::Csv) {
        for (name, t) in &art.tables {
            let file = format!("{name}.csv");
            let path = dir.join(&file);
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_path(&path)
                .map_err(|e| CliError::io(&path, e.into()))?;
            w.write_record(&t.header).map_err(|e| CliError::io(&path, e.into()))?;
            for r in &t.rows {
                w.write_record(r).map_err(|e| CliError::io(&path, e.into()))?;
            }
            w.flush().map_err(|e| CliError::io(&path, e))?;
            written.push(file);
        }
    }
    if formats.contains(&Format::Json) {
        for (name, doc) in &art.documents {
            let file = format!("{name}.json");
            write_json(&dir.join(&file), doc)?;
            written.push(file);
        }
    }
    Ok(written)
}

pub fn write_json(path: &Path, doc: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(doc).expect("serialisable");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}
