use num_complex::Complex64;
use serde::Serialize;

use fluxonium::circuit::{self, DEFAULT_BASIS, FRUSTRATION};
use fluxonium::coupled::{self, Truncation, DRIVE_NORMALIZATION_GHZ};
use fluxonium::gates::{self, GateDevice, GateName, NativeSet};
use fluxonium::lindblad::{self, ResetConfig, ResetStart};
use fluxonium::noise;
use fluxonium::rb::{self, RbConfig, RbNoise};
use fluxonium::{DeviceConfig, Error, Result};

use crate::output::{heatmap_svg, Sink};

/// Inclusive linear grid.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Config("grid must have at least one point".into()));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect())
}

/// The config's coupling, or the one calibrated to its target shift.
fn coupled_params(cfg: &DeviceConfig) -> Result<fluxonium::CircuitParams> {
    let mut p = cfg.circuit.clone();
    if p.coupling_g == 0.0 && cfg.target_chi_khz > 0.0 {
        coupled::calibrate_coupling(&mut p, cfg.target_chi_khz, Truncation::default())?;
    }
    Ok(p)
}

pub fn gate_device(cfg: &DeviceConfig) -> Result<GateDevice> {
    let delta = match cfg.gate_delta_ghz {
        Some(d) => d,
        None => circuit::solve(&cfg.circuit, FRUSTRATION, DEFAULT_BASIS, 4)?.qubit_frequency(),
    };
    Ok(GateDevice { delta, dt_p: cfg.spike_width_ns })
}

pub fn spectrum(cfg: &DeviceConfig, sink: &mut Sink, flux: &[f64], levels: usize, basis: usize) -> Result<()> {
    let spectra = flux
        .iter()
        .map(|&f| circuit::solve(&cfg.circuit, f, basis, levels))
        .collect::<Result<Vec<_>>>()?;
    let mut columns = vec!["flux".to_string()];
    columns.extend((0..levels).map(|k| format!("e{k}_ghz")));
    let rows: Vec<Vec<f64>> = spectra
        .iter()
        .map(|s| std::iter::once(s.flux).chain(s.energies.iter().copied()).collect())
        .collect();
    let summaries: Vec<_> = spectra.iter().map(|s| s.summary(levels)).collect();
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    sink.table("spectrum", &cols, &rows, &summaries)?;

    println!("{:>8} {:>14} {:>12} {:>12}", "flux", "splitting MHz", "|phi_ge|", "|n_ge|");
    for s in &spectra {
        println!(
            "{:>8.4} {:>14.4} {:>12.4} {:>12.4e}",
            s.flux,
            s.qubit_frequency() * 1e3,
            s.phi(0, 1).abs(),
            s.n(0, 1).norm()
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct Coherence {
    coupling_g_ghz: f64,
    t1: Vec<noise::T1Point>,
    t2e: Vec<noise::T2Point>,
}

pub fn coherence(cfg: &DeviceConfig, sink: &mut Sink, flux: &[f64]) -> Result<()> {
    let p = coupled_params(cfg)?;
    let t1 = noise::total_t1_curve(&p, flux, Truncation::default())?;
    let t2e = noise::t2e_curve(&p, flux, 3)?;
    let nan = f64::NAN;
    let rows: Vec<Vec<f64>> = t1
        .iter()
        .zip(&t2e)
        .map(|(a, b)| {
            vec![
                a.flux,
                a.qubit_frequency_ghz,
                a.dielectric,
                a.inductive,
                a.flux_line,
                a.one_over_f,
                a.charge_line,
                a.purcell.unwrap_or(nan),
                a.total.unwrap_or(nan),
                b.t_phi_us,
                b.t2e_us,
            ]
        })
        .collect();
    let doc = Coherence { coupling_g_ghz: p.coupling_g, t1: t1.clone(), t2e: t2e.clone() };
    sink.table(
        "coherence",
        &[
            "flux",
            "qubit_ghz",
            "t1_dielectric_us",
            "t1_inductive_us",
            "t1_flux_line_us",
            "t1_one_over_f_us",
            "t1_charge_line_us",
            "t1_purcell_us",
            "t1_total_us",
            "t_phi_echo_us",
            "t2e_us",
        ],
        &rows,
        &doc,
    )?;

    println!("coupling g = {:.4} MHz", p.coupling_g * 1e3);
    println!("{:>8} {:>10} {:>10} {:>10} {:>10}", "flux", "diel us", "purcell us", "T1 us", "T2e us");
    for (a, b) in t1.iter().zip(&t2e) {
        println!(
            "{:>8.4} {:>10.1} {:>10.3e} {:>10.1} {:>10.1}",
            a.flux,
            a.dielectric,
            a.purcell.unwrap_or(nan),
            a.total.unwrap_or(nan),
            b.t2e_us
        );
        if let Some(f) = &a.flag {
            println!("         note: {f}");
        }
    }
    Ok(())
}

pub fn rabi2d(cfg: &DeviceConfig, sink: &mut Sink, amps: &[f64], idles: &[f64]) -> Result<()> {
    let dev = gate_device(cfg)?;
    let ground = gates::State::new(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
    let map = gates::rabi2d(dev.delta, dev.dt_p, amps, idles, &ground)?;
    let mut rows = Vec::with_capacity(amps.len() * idles.len());
    for (i, &a) in amps.iter().enumerate() {
        for (j, &t) in idles.iter().enumerate() {
            rows.push(vec![a, t, map.sx[i][j], map.sy[i][j], map.sz[i][j]]);
        }
    }
    sink.table("rabi2d", &["amplitude_ghz", "idle_ns", "sx", "sy", "sz"], &rows, &map)?;
    // Columns of the image follow the idle; rows follow the amplitude.
    let svg = heatmap_svg("sigma_z after spike, idle, antispike", idles, amps, &map.sz, "idle (ns)", "amplitude (GHz)");
    sink.svg("rabi2d_sz", svg)?;
    println!(
        "Rabi map {} x {} at splitting {:.4} MHz, spike {:.2} ns",
        amps.len(),
        idles.len(),
        dev.delta * 1e3,
        dev.dt_p
    );
    Ok(())
}

#[derive(Serialize)]
struct GateRow {
    gate: String,
    natives: Vec<String>,
    length_ns: f64,
    infidelity: f64,
}

#[derive(Serialize)]
struct Calibration {
    splitting_ghz: f64,
    spike_width_ns: f64,
    lambda: f64,
    theta_x: f64,
    theta_z: f64,
    coupling_g_ghz: f64,
    gates: Vec<GateRow>,
    dressed: coupled::DressedSummary,
}

pub fn calibrate(cfg: &DeviceConfig, sink: &mut Sink) -> Result<()> {
    let dev = gate_device(cfg)?;
    let set = NativeSet::calibrate(dev)?;
    let names = [GateName::YHalf, GateName::ZHalf, GateName::XHalf, GateName::Y, GateName::Z, GateName::X];
    let mut gates_out = Vec::new();
    for g in names {
        let prog = set.compose(g)?;
        let u = gates::program_unitary(&prog);
        gates_out.push(GateRow {
            gate: g.label(),
            natives: set.composition(g).iter().map(|n| n.label()).collect(),
            length_ns: prog.length(),
            infidelity: 1.0 - gates::trace_fidelity(&u, &g.target()).powi(2),
        });
    }
    let p = coupled_params(cfg)?;
    let ds = coupled::build_dressed(&p, FRUSTRATION, Truncation::default())?;
    let dressed = coupled::summarize(&ds, DRIVE_NORMALIZATION_GHZ)?;

    let rows: Vec<Vec<String>> = gates_out
        .iter()
        .map(|r| vec![r.gate.clone(), r.natives.join(" "), format!("{:e}", r.length_ns), format!("{:e}", r.infidelity)])
        .collect();
    let doc = Calibration {
        splitting_ghz: dev.delta,
        spike_width_ns: dev.dt_p,
        lambda: set.y_half_angles.lambda,
        theta_x: set.y_half_angles.theta_x,
        theta_z: set.y_half_angles.theta_z,
        coupling_g_ghz: p.coupling_g,
        gates: gates_out,
        dressed,
    };
    match sink.format {
        crate::output::Format::Json => sink.json("calibration", &doc)?,
        crate::output::Format::Csv => {
            sink.csv_text("gates", &["gate", "natives", "length_ns", "infidelity"], &rows)?;
            let chi: Vec<Vec<f64>> = doc.dressed.chi_khz.iter().enumerate().map(|(l, &c)| vec![l as f64, c]).collect();
            sink.csv("chi", &["level", "chi_khz"], &chi)?;
            sink.json("calibration", &doc)?;
        }
    }

    println!(
        "splitting {:.4} MHz, spike {:.2} ns, lambda {:.6}, theta_x {:.6}, theta_z {:.6}",
        dev.delta * 1e3,
        dev.dt_p,
        doc.lambda,
        doc.theta_x,
        doc.theta_z
    );
    println!("{:>5} {:>22} {:>10} {:>11}", "gate", "natives", "length ns", "infidelity");
    for r in &doc.gates {
        println!("{:>5} {:>22} {:>10.3} {:>11.2e}", r.gate, r.natives.join(" "), r.length_ns, r.infidelity);
    }
    println!("coupling g = {:.4} MHz", p.coupling_g * 1e3);
    let chi: Vec<String> = doc.dressed.chi_khz.iter().take(4).map(|c| format!("{c:.1}")).collect();
    println!("chi g,e,f,h (kHz): {}", chi.join(", "));
    Ok(())
}

pub struct ResetArgs {
    pub rabi_g0h0_mhz: f64,
    pub rabi_h0e1_mhz: f64,
    pub duration_us: f64,
    pub sample_ns: f64,
    pub no_decay: bool,
    pub from_ground: bool,
}

pub fn reset(cfg: &DeviceConfig, sink: &mut Sink, args: &ResetArgs) -> Result<()> {
    let p = coupled_params(cfg)?;
    if p.coupling_g == 0.0 {
        return Err(Error::Config("reset needs coupling_g or a positive target_chi_khz".into()));
    }
    let rc = ResetConfig {
        rabi_g0h0_mhz: args.rabi_g0h0_mhz,
        rabi_h0e1_mhz: args.rabi_h0e1_mhz,
        duration_us: args.duration_us,
        sample_ns: args.sample_ns,
        kappa: args.no_decay.then_some(0.0),
        start: if args.from_ground { ResetStart::Ground } else { ResetStart::ThermalMix },
        ..ResetConfig::default()
    };
    let r = lindblad::simulate_reset(&p, &rc)?;
    let mut columns = vec!["time_us".to_string(), "p_e0_dressed".to_string()];
    columns.extend(r.labels.iter().map(|l| format!("p_{l}")));
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let rows: Vec<Vec<f64>> = (0..r.times_us.len())
        .map(|k| [r.times_us[k], r.p_e0_dressed[k]].into_iter().chain(r.populations[k].iter().copied()).collect())
        .collect();
    sink.table("reset", &cols, &rows, &r)?;
    println!("tones {:.6} GHz, {:.6} GHz", r.tones_ghz[0], r.tones_ghz[1]);
    println!("final P(e0) = {:.4} (dressed), {:.4} (bare)", r.final_e0, r.p_e0.last().copied().unwrap_or(0.0));
    match r.crossing_us {
        Some(t) => println!("95% crossing at {t:.3} us"),
        None => println!("P(e0) never reached 95%"),
    }
    println!("max trace error {:.2e}, min eigenvalue {:.2e}", r.max_trace_error, r.min_eigenvalue);
    Ok(())
}

pub struct RbArgs {
    pub lengths: Vec<usize>,
    pub sequences: usize,
    pub seed: u64,
    pub noise: RbNoise,
    pub interleave: Vec<GateName>,
}

#[derive(Serialize)]
struct RbDoc {
    seed: u64,
    reference: rb::RbResult,
    interleaved: Vec<(rb::RbResult, rb::IrbEstimate)>,
}

pub fn rb(sink: &mut Sink, args: &RbArgs) -> Result<()> {
    let table = rb::build_clifford_table();
    let base = RbConfig {
        lengths: args.lengths.clone(),
        n_sequences: args.sequences,
        seed: args.seed,
        noise: args.noise,
        interleaved: None,
    };
    let reference = rb::run_rb(&table, &base)?;
    let mut interleaved = Vec::new();
    for &g in &args.interleave {
        let irb = rb::run_rb(&table, &RbConfig { interleaved: Some(g), ..base.clone() })?;
        let est = rb::irb_fidelity(&reference, &irb)?;
        interleaved.push((irb, est));
    }

    let mut raw = Vec::new();
    for (k, &m) in reference.lengths.iter().enumerate() {
        for (s, &v) in reference.raw[k].iter().enumerate() {
            raw.push(vec![m as f64, s as f64, v]);
        }
    }
    sink.csv("rb_raw", &["length", "sequence", "survival"], &raw)?;
    let mut rows: Vec<Vec<f64>> = reference
        .lengths
        .iter()
        .zip(&reference.survival)
        .map(|(&m, &s)| vec![m as f64, s])
        .collect();
    for (irb, _) in &interleaved {
        for (row, &s) in rows.iter_mut().zip(&irb.survival) {
            row.push(s);
        }
    }
    let mut columns = vec!["length".to_string(), "survival".to_string()];
    columns.extend(interleaved.iter().map(|(r, _)| format!("survival_{}", r.interleaved.clone().unwrap_or_default())));
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let doc = RbDoc { seed: args.seed, reference: reference.clone(), interleaved };
    sink.table("rb", &cols, &rows, &doc)?;
    if sink.format == crate::output::Format::Csv {
        sink.json("rb_fit", &doc)?;
    }

    let f = &reference.fit;
    println!(
        "RB: p = {:.6} +/- {:.1e}, A = {:.4}, B = {:.4}, F_avg = {:.5}",
        f.p,
        f.sigma_p,
        f.a,
        f.b,
        reference.fidelity()
    );
    for (irb, est) in &doc.interleaved {
        println!(
            "IRB {:>5}: p = {:.6}, gate fidelity = {:.5} +/- {:.1e}{}",
            irb.interleaved.clone().unwrap_or_default(),
            irb.fit.p,
            est.fidelity,
            est.sigma,
            if est.unphysical { "  (above reference, noise floor)" } else { "" }
        );
    }
    Ok(())
}
