//! Flat `key = value` experiment configuration.
//!
//! Lines are `key = value`; `#` starts a comment. `schemes`, `trials` and
//! `seed` are required; every other key defaults from `profile`
//! (`desk` or `paper`). Unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::channel::{ChannelConfig, ConstellationGeometry};
use crate::error::{Error, Result};
use crate::numerology::OtfsNumerology;
use crate::receiver::dictionary::auto_ramp_count;
use crate::waveform::Constellation;

/// Largest Doppler phase ramp across the non-ISI window left unmodelled by
/// `doppler_hypotheses = auto`, rad.
pub const MAX_RESIDUAL_RAMP: f64 = 0.35;

pub const REQUIRED_KEYS: [&str; 3] = ["schemes", "trials", "seed"];

/// Keys that may be swept (numeric scalars of the model).
pub const SWEEPABLE_KEYS: [&str; 21] = [
    "snr_db",
    "nu_max",
    "k",
    "k_a",
    "antennas",
    "m",
    "n",
    "m_t",
    "delta_f",
    "l_max",
    "d_max",
    "paths",
    "rician_k_db",
    "decay_db_per_tap",
    "adc_bits",
    "cgad_tau",
    "somp_max_taps",
    "doppler_pad_factor",
    "oversample_doppler",
    "detector_reg",
    "altitude",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    TsOtfs,
    OtfsDdPilot,
    OfdmBaseline,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::TsOtfs => "ts_otfs",
            Scheme::OtfsDdPilot => "otfs_dd_pilot",
            Scheme::OfdmBaseline => "ofdm_baseline",
        }
    }

    pub fn index(&self) -> u64 {
        *self as u64
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "ts_otfs" => Ok(Scheme::TsOtfs),
            "otfs_dd_pilot" => Ok(Scheme::OtfsDdPilot),
            "ofdm_baseline" => Ok(Scheme::OfdmBaseline),
            _ => Err(format!("unknown scheme `{s}` (ts_otfs, otfs_dd_pilot, ofdm_baseline)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub var: String,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Canonical text value of every key (defaults filled in).
    entries: BTreeMap<String, String>,
    pub schemes: Vec<Scheme>,
    pub trials: usize,
    pub seed: u64,
    pub num: OtfsNumerology,
    pub channel: ChannelConfig,
    pub k: usize,
    pub k_a: usize,
    pub snr_db: f64,
    pub adc_bits: u32,
    pub cgad_tau: f64,
    pub somp_max_taps: usize,
    pub doppler_pad_factor: usize,
    /// Intra-window Doppler ramp hypotheses of the TS dictionary.
    pub doppler_hypotheses: usize,
    pub oversample_doppler: usize,
    /// Ridge weight relative to `||H||_F^2 / unknowns`.
    /// `None` (`auto`) weights the ridge by the receiver's noise variance.
    pub detector_reg: Option<f64>,
    pub solver_tol: f64,
    pub solver_max_iters: usize,
    pub genie_csi: bool,
    pub constellation: Constellation,
    pub sweep: Option<Sweep>,
}

fn profile_defaults(profile: &str) -> Option<BTreeMap<&'static str, String>> {
    let num = match profile {
        "desk" => OtfsNumerology::desk(),
        "paper" => OtfsNumerology::paper(),
        _ => return None,
    };
    let geo = ConstellationGeometry::default();
    let mut d = BTreeMap::new();
    d.insert("m", num.m.to_string());
    d.insert("n", num.n.to_string());
    d.insert("m_t", num.m_t.to_string());
    d.insert("delta_f", num.delta_f.to_string());
    d.insert("carrier_freq", num.carrier_freq.to_string());
    d.insert("l_max", num.l_max.to_string());
    d.insert("d_max", num.d_max.to_string());
    d.insert("altitude", geo.altitude.to_string());
    d.insert("nu_max", geo.nu_max.to_string());
    d.insert("k", "100".into());
    d.insert("k_a", "10".into());
    d.insert("antennas", "16".into());
    d.insert("snr_db", "15".into());
    d.insert("paths", "3".into());
    d.insert("decay_db_per_tap", "3".into());
    d.insert("rician_k_db", "10".into());
    d.insert("cone_half_angle_deg", "60".into());
    d.insert("adc_bits", "0".into());
    d.insert("cgad_tau", "3".into());
    d.insert("somp_max_taps", "auto".into());
    d.insert("doppler_pad_factor", "32".into());
    d.insert("doppler_hypotheses", "auto".into());
    d.insert("oversample_doppler", "2".into());
    d.insert("detector_reg", "auto".into());
    d.insert("solver_tol", "1e-8".into());
    d.insert("solver_max_iters", "500".into());
    d.insert("genie_csi", "false".into());
    d.insert("constellation", "qpsk".into());
    d.insert("sweep_var", "none".into());
    d.insert("sweep_values", String::new());
    Some(d)
}

fn invalid(key: &str, reason: impl Into<String>) -> Error {
    Error::InvalidKey {
        key: key.to_string(),
        reason: reason.into(),
    }
}

struct Reader<'a>(&'a BTreeMap<String, String>);

impl Reader<'_> {
    fn raw(&self, key: &str) -> &str {
        self.0.get(key).map(String::as_str).unwrap_or("")
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<T> {
        self.raw(key)
            .parse()
            .map_err(|_| invalid(key, format!("cannot parse `{}`", self.raw(key))))
    }

    fn ranged<T: FromStr + PartialOrd + fmt::Display + Copy>(&self, key: &str, lo: T, hi: T) -> Result<T> {
        let v: T = self.parse(key)?;
        if v < lo || v > hi {
            return Err(invalid(key, format!("{v} outside [{lo}, {hi}]")));
        }
        Ok(v)
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut given = BTreeMap::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", no + 1)))?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if given.insert(k.clone(), v).is_some() {
                return Err(invalid(&k, "given more than once"));
            }
        }
        Self::from_entries(given)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::parse(&text)
    }

    /// Builds from explicitly given keys, filling profile defaults.
    pub fn from_entries(given: BTreeMap<String, String>) -> Result<Self> {
        for key in REQUIRED_KEYS {
            if !given.contains_key(key) {
                return Err(Error::MissingKey(key.to_string()));
            }
        }
        let profile = given.get("profile").cloned().unwrap_or_else(|| "desk".into());
        let defaults = profile_defaults(&profile).ok_or_else(|| invalid("profile", "expected `desk` or `paper`"))?;
        let mut entries: BTreeMap<String, String> = defaults.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        entries.insert("profile".into(), profile);
        for (k, v) in given {
            if !entries.contains_key(&k) && !REQUIRED_KEYS.contains(&k.as_str()) {
                return Err(invalid(&k, "unknown key"));
            }
            entries.insert(k, v);
        }
        Self::build(entries)
    }

    fn build(entries: BTreeMap<String, String>) -> Result<Self> {
        let r = Reader(&entries);
        let mut schemes = Vec::new();
        for s in r.raw("schemes").split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let sc: Scheme = s.parse().map_err(|e: String| invalid("schemes", e))?;
            if !schemes.contains(&sc) {
                schemes.push(sc);
            }
        }
        if schemes.is_empty() {
            return Err(invalid("schemes", "at least one scheme required"));
        }
        schemes.sort();
        let trials = r.ranged("trials", 1usize, 1_000_000)?;
        let seed: u64 = r.parse("seed")?;
        let num = OtfsNumerology {
            m: r.ranged("m", 2usize, 4096)?,
            n: r.ranged("n", 1usize, 256)?,
            delta_f: r.ranged("delta_f", 1.0, 1e9)?,
            m_t: r.ranged("m_t", 1usize, 4096)?,
            carrier_freq: r.ranged("carrier_freq", 1e6, 1e12)?,
            l_max: r.ranged("l_max", 1usize, 1024)?,
            d_max: r.ranged("d_max", 0usize, 1024)?,
        };
        let nu_max = r.ranged("nu_max", 0.0, 1e7)?;
        num.validate(nu_max).map_err(|e| invalid("numerology", e.to_string()))?;
        if num.delay_window() > num.m {
            return Err(invalid("l_max", "l_max + d_max must not exceed m"));
        }
        let k = r.ranged("k", 1usize, 100_000)?;
        let k_a = r.ranged("k_a", 0usize, k)?;
        let antennas = r.ranged("antennas", 1usize, 1024)?;
        if k_a > antennas {
            return Err(invalid("antennas", format!("{antennas} antennas cannot separate k_a = {k_a} users")));
        }
        let snr_db: f64 = r.parse("snr_db")?;
        if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
            return Err(invalid("snr_db", "must be a number or inf"));
        }
        let paths = r.ranged("paths", 1usize, num.l_max)?;
        let channel = ChannelConfig {
            geometry: ConstellationGeometry {
                altitude: r.ranged("altitude", 1e5, 5e7)?,
                carrier_freq: num.carrier_freq,
                nu_max,
            },
            paths,
            decay_db_per_tap: r.ranged("decay_db_per_tap", 0.0, 100.0)?,
            rician_k_db: r.ranged("rician_k_db", -100.0, 100.0)?,
            antennas,
            cone_half_angle: r.ranged::<f64>("cone_half_angle_deg", 0.0, 90.0)?.to_radians(),
        };
        let g = num.non_isi_len();
        let somp_max_taps = if r.raw("somp_max_taps") == "auto" {
            (k_a * paths).clamp(1, g.saturating_sub(1).max(1))
        } else {
            r.ranged("somp_max_taps", 1usize, g.saturating_sub(1).max(1))?
        };
        let doppler_hypotheses = if r.raw("doppler_hypotheses") == "auto" {
            auto_ramp_count(&num, nu_max, MAX_RESIDUAL_RAMP)
        } else {
            r.ranged("doppler_hypotheses", 1usize, 64)?
        };
        let oversample_doppler: usize = r.parse("oversample_doppler")?;
        if oversample_doppler != 1 && oversample_doppler != 2 {
            return Err(invalid("oversample_doppler", "must be 1 or 2"));
        }
        let constellation = match r.raw("constellation") {
            "qpsk" => Constellation::Qpsk,
            "bpsk" => Constellation::Bpsk,
            other => return Err(invalid("constellation", format!("unknown `{other}`"))),
        };
        let genie_csi = match r.raw("genie_csi") {
            "true" => true,
            "false" => false,
            other => return Err(invalid("genie_csi", format!("expected true|false, got `{other}`"))),
        };
        let sweep = match r.raw("sweep_var") {
            "none" | "" => None,
            var => {
                if !SWEEPABLE_KEYS.contains(&var) {
                    return Err(invalid("sweep_var", format!("`{var}` cannot be swept")));
                }
                let values: Vec<String> = r
                    .raw("sweep_values")
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect();
                if values.is_empty() {
                    return Err(invalid("sweep_values", "empty list"));
                }
                Some(Sweep {
                    var: var.to_string(),
                    values,
                })
            }
        };
        let cfg = Self {
            schemes,
            trials,
            seed,
            num,
            channel,
            k,
            k_a,
            snr_db,
            adc_bits: r.ranged("adc_bits", 0u32, 8)?,
            cgad_tau: r.ranged("cgad_tau", 1e-6, 1e6)?,
            somp_max_taps,
            doppler_pad_factor: r.ranged("doppler_pad_factor", 1usize, 1024)?,
            doppler_hypotheses,
            oversample_doppler,
            detector_reg: match r.raw("detector_reg") {
                "auto" => None,
                _ => Some(r.ranged("detector_reg", 0.0, 1e6)?),
            },
            solver_tol: r.ranged("solver_tol", 1e-15, 0.5)?,
            solver_max_iters: r.ranged("solver_max_iters", 1usize, 100_000)?,
            genie_csi,
            constellation,
            sweep,
            entries,
        };
        // every sweep point must itself be valid
        if let Some(sw) = &cfg.sweep {
            for v in &sw.values {
                cfg.point(&sw.var, v)?;
            }
        }
        Ok(cfg)
    }

    /// Copy with `key` set to `value` and the sweep removed.
    pub fn point(&self, key: &str, value: &str) -> Result<Self> {
        let mut e = self.entries.clone();
        if !e.contains_key(key) {
            return Err(invalid(key, "unknown key"));
        }
        e.insert(key.into(), value.into());
        e.insert("sweep_var".into(), "none".into());
        e.insert("sweep_values".into(), String::new());
        Self::build(e)
    }

    /// Copy with a different sweep.
    pub fn with_sweep(&self, var: &str, values: &[String]) -> Result<Self> {
        let mut e = self.entries.clone();
        e.insert("sweep_var".into(), var.into());
        e.insert("sweep_values".into(), values.join(","));
        Self::build(e)
    }

    /// Copy with one key overridden (sweep kept).
    pub fn with(&self, key: &str, value: &str) -> Result<Self> {
        let mut e = self.entries.clone();
        if !e.contains_key(key) {
            return Err(invalid(key, "unknown key"));
        }
        e.insert(key.into(), value.into());
        Self::build(e)
    }

    /// Applies the `GFRA_SEED` environment override, if set.
    pub fn with_env_seed(self) -> Result<Self> {
        match std::env::var("GFRA_SEED") {
            Ok(v) => {
                v.trim()
                    .parse::<u64>()
                    .map_err(|_| invalid("GFRA_SEED", format!("cannot parse `{v}`")))?;
                self.with("seed", v.trim())
            }
            Err(_) => Ok(self),
        }
    }

    /// Every key with its effective value.
    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    /// Canonical text form; parsing it yields an identical config.
    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn noise_var(&self) -> f64 {
        crate::channel::noise_variance(self.snr_db)
    }
}
