//! Flat `key = value` configuration. Unknown keys are rejected.
//!
//! Qubit keys take an optional `qubit1.` / `qubit2.` prefix; unprefixed
//! qubit keys set both molecules and prefixed ones win regardless of order.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use hyperstark::cavity::{CavityParams, DEFAULT_SENSITIVITY_PER_UV};
use hyperstark::gates::{CnotConvention, GateOptions, LocalMode};
use hyperstark::smm::SmmParams;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

type Res<T> = std::result::Result<T, ConfigError>;

const QUBIT_KEYS: &[&str] = &[
    "a_mhz",
    "p_mhz",
    "g_l",
    "g_n",
    "theta_rad",
    "eta",
    "delta_t_mhz",
    "stark_per_mv",
    "dc_shift_mhz",
    "field_t",
];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct QubitOverrides(BTreeMap<&'static str, f64>);

impl QubitOverrides {
    pub fn apply(&self, mut p: SmmParams) -> SmmParams {
        for (&k, &v) in &self.0 {
            match k {
                "a_mhz" => p.a_mhz = v,
                "p_mhz" => p.p_mhz = v,
                "g_l" => p.g_l = v,
                "g_n" => p.g_n = v,
                "theta_rad" => p.theta = v,
                "eta" => p.eta = v,
                "delta_t_mhz" => p.delta_t_mhz = v,
                "stark_per_mv" => p.stark_per_mv = v,
                "dc_shift_mhz" => p.dc_shift_mhz = v,
                "field_t" => p.field_t = v,
                _ => unreachable!("key list and match disagree"),
            }
        }
        p
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub qubit1: QubitOverrides,
    pub qubit2: QubitOverrides,
    pub cavity: CavityParams,
    pub t2_star_ms: f64,
    pub sensitivity_per_uv: f64,
    pub g_list_mhz: Vec<f64>,
    pub omega_c_list_ghz: Vec<f64>,
    pub gate: GateOptions,
    pub rabi_tol: f64,
    pub rabi_points_per_period: usize,
    pub output_dir: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        let mut qubit2 = QubitOverrides::default();
        qubit2.0.insert("dc_shift_mhz", 40.0);
        Config {
            qubit1: QubitOverrides::default(),
            qubit2,
            cavity: CavityParams::default(),
            t2_star_ms: 0.3,
            sensitivity_per_uv: DEFAULT_SENSITIVITY_PER_UV,
            g_list_mhz: hyperstark::gates::default_g_grid(),
            omega_c_list_ghz: vec![2.3],
            gate: GateOptions::default(),
            rabi_tol: 1e-5,
            rabi_points_per_period: 200,
            output_dir: None,
        }
    }
}

fn number(key: &str, v: &str) -> Res<f64> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| ConfigError(format!("{key}: expected a finite number, got {v:?}")))
}

fn count(key: &str, v: &str) -> Res<usize> {
    v.parse().map_err(|_| ConfigError(format!("{key}: expected a non-negative integer, got {v:?}")))
}

fn flag(key: &str, v: &str) -> Res<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(ConfigError(format!("{key}: expected true or false, got {v:?}"))),
    }
}

pub fn parse_list(key: &str, v: &str) -> Res<Vec<f64>> {
    let out: Vec<f64> = v.split(',').map(|s| number(key, s.trim())).collect::<Res<_>>()?;
    if out.is_empty() {
        return Err(ConfigError(format!("{key}: empty list")));
    }
    Ok(out)
}

impl Config {
    pub fn parse(text: &str) -> Res<Self> {
        let mut cfg = Config::default();
        let mut shared = Vec::new();
        let mut prefixed = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| ConfigError(format!("line {}: expected `key = value`", lineno + 1)))?;
            let at = |e: ConfigError| ConfigError(format!("line {}: {}", lineno + 1, e.0));
            if let Some((q, k)) = key.split_once('.') {
                let slot = match q {
                    "qubit1" => 1,
                    "qubit2" => 2,
                    _ => return Err(ConfigError(format!("line {}: unknown key {key:?}", lineno + 1))),
                };
                let k = QUBIT_KEYS
                    .iter()
                    .find(|&&x| x == k)
                    .ok_or_else(|| ConfigError(format!("line {}: unknown key {key:?}", lineno + 1)))?;
                prefixed.push((slot, *k, number(key, value).map_err(at)?));
                continue;
            }
            if let Some(k) = QUBIT_KEYS.iter().find(|&&x| x == key) {
                shared.push((*k, number(key, value).map_err(at)?));
                continue;
            }
            cfg.set(key, value).map_err(at)?;
        }
        for (k, v) in shared {
            cfg.qubit1.0.insert(k, v);
            cfg.qubit2.0.insert(k, v);
        }
        for (slot, k, v) in prefixed {
            let q = if slot == 1 { &mut cfg.qubit1 } else { &mut cfg.qubit2 };
            q.0.insert(k, v);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str) -> Res<()> {
        match key {
            "omega_c_ghz" => self.cavity.omega_c_ghz = number(key, v)?,
            "n_max" => self.cavity.n_max = count(key, v)?,
            "q_factor" => self.cavity.q_factor = number(key, v)?,
            "v_rms_uv" => self.cavity.v_rms_uv = number(key, v)?,
            "t2_star_ms" => self.t2_star_ms = number(key, v)?,
            "sensitivity_per_uv" => self.sensitivity_per_uv = number(key, v)?,
            "g_list_mhz" => self.g_list_mhz = parse_list(key, v)?,
            "omega_c_list_ghz" => self.omega_c_list_ghz = parse_list(key, v)?,
            "gate_tol" => self.gate.tol = number(key, v)?,
            "gate_steps" => self.gate.n_steps = count(key, v)?,
            "excitation_cutoff" => {
                self.gate.excitation_cutoff = if v == "none" { None } else { Some(count(key, v)?) }
            }
            "local_gates" => {
                self.gate.local_mode = match v {
                    "z" => LocalMode::ZOnly,
                    "full" => LocalMode::Full,
                    _ => return Err(ConfigError(format!("{key}: expected z or full, got {v:?}"))),
                }
            }
            "cnot_control" => {
                self.gate.convention = match v {
                    "zero" => CnotConvention::ZeroControlled,
                    "one" => CnotConvention::OneControlled,
                    _ => return Err(ConfigError(format!("{key}: expected zero or one, got {v:?}"))),
                }
            }
            "fock_check" => self.gate.fock_check = flag(key, v)?,
            "max_fock_escalations" => self.gate.max_fock_escalations = count(key, v)?,
            "rabi_tol" => self.rabi_tol = number(key, v)?,
            "rabi_points_per_period" => self.rabi_points_per_period = count(key, v)?,
            "output_dir" => self.output_dir = Some(PathBuf::from(v)),
            _ => return Err(ConfigError(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Re-validates every wrapped physical type.
    pub fn validate(&self) -> Res<()> {
        let err = |e: hyperstark::Error| ConfigError(e.to_string());
        for base in [SmmParams::default(), SmmParams::calibrated()] {
            self.qubit1.apply(base.clone()).validate().map_err(err)?;
            self.qubit2.apply(base).validate().map_err(err)?;
        }
        self.cavity.validate().map_err(err)?;
        if !(self.t2_star_ms > 0.0) {
            return Err(ConfigError("t2_star_ms must be positive".into()));
        }
        if self.sensitivity_per_uv < 0.0 {
            return Err(ConfigError("sensitivity_per_uv must be non-negative".into()));
        }
        if !(self.gate.tol > 1e-14 && self.gate.tol < 1e-3) {
            return Err(ConfigError("gate_tol must lie in (1e-14, 1e-3)".into()));
        }
        if !(self.rabi_tol > 1e-14 && self.rabi_tol < 1e-3) {
            return Err(ConfigError("rabi_tol must lie in (1e-14, 1e-3)".into()));
        }
        if self.gate.n_steps == 0 || self.rabi_points_per_period == 0 {
            return Err(ConfigError("step counts must be positive".into()));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Res<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Single-molecule parameters on the nominal hyperfine constant.
    pub fn nominal(&self) -> SmmParams {
        self.qubit1.apply(SmmParams::default())
    }

    /// The two molecules of the coupled model, on calibrated (A, P).
    pub fn coupled_pair(&self) -> (SmmParams, SmmParams) {
        (self.qubit1.apply(SmmParams::calibrated()), self.qubit2.apply(SmmParams::calibrated()))
    }
}
