mod config;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use hyperstark::cavity::{b_eff_t, estimate_coupling, strong_coupling_check, CavityParams};
use hyperstark::dynamics::{rabi_frequency, rabi_period, rabi_simulation, transverse_amplitude, RabiOptions};
use hyperstark::format::round_sig;
use hyperstark::gates::{run_gate, sweep, SweepConfig};
use hyperstark::smm::{find_avoided_crossings, sweep_spectrum, ELECTRONIC_J};
use hyperstark::swipht::{solve_parameters, validate, Pulse, PULSE_SAMPLES};
use hyperstark::Error;

use config::{parse_list, Config, ConfigError};

#[derive(Parser)]
#[command(name = "hyperstark", version, about = "Electrically driven nuclear-spin qubits in TbPc2 molecules")]
struct Cli {
    /// Configuration file (flat `key = value`)
    #[arg(long, global = true, env = "HYPERSTARK_CONFIG")]
    config: Option<PathBuf>,

    /// Directory for every output file
    #[arg(long, global = true, env = "HYPERSTARK_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Level diagram of the lowest eight states and its anticrossings
    Spectrum {
        /// Lower field bound (mT)
        #[arg(long, default_value_t = -60.0, allow_hyphen_values = true)]
        bmin: f64,
        /// Upper field bound (mT)
        #[arg(long, default_value_t = 60.0, allow_hyphen_values = true)]
        bmax: f64,
        #[arg(long, default_value_t = 2001)]
        points: usize,
    },
    /// Lab-frame Rabi oscillation between m_I = 3/2 and 1/2
    Rabi {
        /// Anisotropy angle (rad); defaults to the configured value
        #[arg(long, allow_hyphen_values = true)]
        theta: Option<f64>,
        #[arg(long)]
        eta: Option<f64>,
        /// Carrier detuning from nu1 (MHz)
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        detuning: f64,
        /// Duration (us)
        #[arg(long, default_value_t = 6.0)]
        tmax: f64,
    },
    /// SWIPHT pulse for a given detuning of the unwanted transition
    Swipht {
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        delta_mhz: f64,
    },
    /// Single CNOT simulation
    Cnot {
        /// Qubit-resonator coupling (MHz)
        #[arg(long, default_value_t = 20.0)]
        g: f64,
        /// Resonator frequency (GHz)
        #[arg(long)]
        omega_c: Option<f64>,
        /// dc shift of the second molecule (MHz)
        #[arg(long, allow_hyphen_values = true)]
        shift2: Option<f64>,
    },
    /// CNOT fidelity and gate time over a (g, omega_c) grid
    Sweep {
        /// Couplings (MHz), comma separated
        #[arg(long)]
        g_list: Option<String>,
        /// Resonator frequencies (GHz), comma separated
        #[arg(long)]
        omega_c_list: Option<String>,
        #[arg(long, env = "HYPERSTARK_JOBS")]
        jobs: Option<usize>,
    },
    /// Coupling estimate and loss-rate budget
    Estimate {
        #[arg(long)]
        vrms_uv: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        t2star_ms: Option<f64>,
        /// Resonator frequency for kappa (GHz)
        #[arg(long, default_value_t = 1.0)]
        omega_c: f64,
    },
}

enum Failure {
    Config(String),
    Physics(Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Physics(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Physics(Error::Io(e.to_string()))
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidParameter(_) | Error::Shape(_) | Error::InconsistentSplittings { .. } | Error::OutsidePulse { .. } => 2,
        Error::Degenerate(_) | Error::LogicalIdentification { .. } => 4,
        Error::Io(_) => 1,
        _ => 3,
    }
}

fn create(dir: &Path, name: &str) -> std::io::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json(dir: &Path, name: &str, v: &serde_json::Value) -> std::io::Result<()> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, v)?;
    writeln!(w)?;
    w.flush()
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let out = cli.output_dir.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("output"));
    let rabi_opts = RabiOptions { points_per_period: cfg.rabi_points_per_period, tol: cfg.rabi_tol };

    match cli.command {
        Command::Spectrum { bmin, bmax, points } => {
            if points < 2 || !(bmax > bmin) {
                return Err(Failure::Config("need at least two points and bmax > bmin".into()));
            }
            let p = cfg.nominal();
            let mut d = sweep_spectrum(&p, bmin * 1e-3, bmax * 1e-3, points)?;
            d.crossings = find_avoided_crossings(&d)?;
            fs::create_dir_all(&out)?;
            let mut w = create(&out, "spectrum.csv")?;
            d.write_csv(&mut w)?;
            w.flush()?;
            let crossings: Vec<_> = d
                .crossings
                .iter()
                .map(|c| json!({"m_I": c.m_i, "B_T": round_sig(c.b_center_t), "gap_MHz": round_sig(c.gap_mhz)}))
                .collect();
            write_json(&out, "crossings.json", &json!(crossings))?;
            log::info!("{} anticrossings in [{bmin}, {bmax}] mT", d.crossings.len());
        }
        Command::Rabi { theta, eta, detuning, tmax } => {
            let mut p = cfg.nominal();
            if let Some(t) = theta {
                p.theta = t;
            }
            if let Some(e) = eta {
                p.eta = e;
            }
            p.validate()?;
            let tr = rabi_simulation(&p, detuning, tmax, &rabi_opts)?;
            fs::create_dir_all(&out)?;
            let mut w = create(&out, "rabi.csv")?;
            tr.write_csv(&mut w)?;
            w.flush()?;
            let formula = 1.0 / rabi_frequency(detuning, transverse_amplitude(&p));
            match tr.period() {
                Some(t) => log::info!("simulated period {t:.6} us, formula {formula:.6} us"),
                None => log::info!("no full oscillation; formula period {formula:.6} us (resonant {:.6})", rabi_period(&p)),
            }
        }
        Command::Swipht { delta_mhz } => {
            let sol = solve_parameters(2.0 * std::f64::consts::PI * delta_mhz)?;
            let pulse = Pulse::sample(&sol.params, PULSE_SAMPLES, 0.0)?;
            let rep = validate(&sol.params);
            fs::create_dir_all(&out)?;
            let mut w = create(&out, "pulse.csv")?;
            pulse.write_csv(&mut w)?;
            w.flush()?;
            let mut meta = pulse.metadata_json();
            meta["tau_times_delta"] = json!(round_sig(sol.params.tau_us * sol.params.delta.abs()));
            meta["constraint_ratio"] = json!(round_sig(rep.constraint_ratio));
            meta["max_abs_omega_rad_per_us"] = json!(round_sig(rep.max_abs_omega));
            meta["valid_for_cnot"] = json!(rep.valid_for_cnot);
            meta["other_roots"] = json!(sol.other_roots.iter().map(|x| round_sig(*x)).collect::<Vec<_>>());
            write_json(&out, "pulse.json", &meta)?;
        }
        Command::Cnot { g, omega_c, shift2 } => {
            let (p1, mut p2) = cfg.coupled_pair();
            if let Some(s) = shift2 {
                p2.dc_shift_mhz = s;
            }
            let c = CavityParams { omega_c_ghz: omega_c.unwrap_or(cfg.cavity.omega_c_ghz), ..cfg.cavity.clone() };
            let r = run_gate(&p1, &p2, &c, g, &cfg.gate)?;
            fs::create_dir_all(&out)?;
            write_json(&out, "cnot.json", &r.to_json())?;
            log::info!("F = {:.9}, gate time {:.6} us", r.fidelity, r.gate_time_us);
        }
        Command::Sweep { g_list, omega_c_list, jobs } => {
            let gs = match g_list {
                Some(s) => parse_list("--g-list", &s)?,
                None => cfg.g_list_mhz.clone(),
            };
            let ws = match omega_c_list {
                Some(s) => parse_list("--omega-c-list", &s)?,
                None => cfg.omega_c_list_ghz.clone(),
            };
            let (p1, p2) = cfg.coupled_pair();
            let base = SweepConfig { qubit1: p1, qubit2: p2, cavity: cfg.cavity.clone(), gate: cfg.gate.clone() };
            let jobs = jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let table = sweep(&gs, &ws, &base, jobs)?;
            fs::create_dir_all(&out)?;
            let mut w = create(&out, "sweep.csv")?;
            table.write_csv(&mut w)?;
            w.flush()?;
            write_json(&out, "sweep.json", &table.to_json())?;
            let failed = table.rows.iter().filter(|r| r.result.is_err()).count();
            if failed > 0 {
                log::warn!("{failed} of {} rows failed", table.rows.len());
            }
        }
        Command::Estimate { vrms_uv, q, t2star_ms, omega_c } => {
            let p = cfg.nominal();
            let v = vrms_uv.unwrap_or(cfg.cavity.v_rms_uv);
            let c = CavityParams { omega_c_ghz: omega_c, q_factor: q.unwrap_or(cfg.cavity.q_factor), v_rms_uv: v, ..cfg.cavity.clone() };
            let t2 = t2star_ms.unwrap_or(cfg.t2_star_ms);
            let g = estimate_coupling(p.a_mhz, ELECTRONIC_J, cfg.sensitivity_per_uv, v)?;
            let b = strong_coupling_check(g, &c, t2)?;
            fs::create_dir_all(&out)?;
            write_json(
                &out,
                "rate_budget.json",
                &json!({
                    "g_kHz": round_sig(g),
                    "kappa_kHz": round_sig(b.kappa_mhz * 1e3),
                    "gamma_kHz": round_sig(b.gamma_mhz * 1e3),
                    "margin": round_sig(b.margin),
                    "strong_coupling": b.strong_coupling,
                    "edge": b.edge,
                    "B_eff_T": round_sig(b_eff_t(p.a_mhz, p.g_n)),
                }),
            )?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Physics(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
