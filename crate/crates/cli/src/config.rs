//! Run configuration: the library's model and hierarchy keys plus the keys
//! below, all in one flat `key = value` file.
//!
//! | key                 | meaning                                          | default      |
//! |---------------------|--------------------------------------------------|--------------|
//! | `task`              | must match the subcommand when present           |              |
//! | `initial_bloch`     | `x, y, z` of the initial state for `simulate`    | `0, 0, 1`    |
//! | `n_samples`         | Monte Carlo samples for the BLP maximization     | `10000`      |
//! | `seed`              | RNG seed; required by `blp` and BLP sweeps       |              |
//! | `differencing`      | `central2` or `richardson4`                      | `central2`   |
//! | `kernel_delta`      | fraction δ defining τ_K                          | `0.9`        |
//! | `eternal_t_min`     | start of the eternal-NM window                   | `0.5`        |
//! | `eternal_tolerance` | rates below `−tolerance` count as negative       | `1e-4`       |
//! | `sweep_axis`        | `omega_drive` (alias `omega`), `eta` or `beta`   |              |
//! | `sweep_values`      | comma-separated values                           |              |
//! | `sweep_kernel`      | add τ_K to each sweep row                        | `false`      |
//! | `save_stcf`         | write the STCF CSV of every sweep point          | `false`      |
//! | `output_dir`        | output directory, overridden by `--out`          | `out`        |

use std::path::PathBuf;
use std::str::FromStr;

use driven_qubit::diagnostics::DEFAULT_NEGATIVITY_TOLERANCE;
use driven_qubit::heom::HeomConfig;
use driven_qubit::kv::{format_f64, KeyValues};
use driven_qubit::model::{ModelParams, MODEL_KEYS};
use driven_qubit::numerics::Differencing;
use driven_qubit::{Error, Result};

const HEOM_KEYS: [&str; 6] = ["max_tier", "n_matsubara", "dt", "t_final", "terminator", "max_ados"];
const RUN_KEYS: [&str; 13] = [
    "task",
    "initial_bloch",
    "n_samples",
    "seed",
    "differencing",
    "kernel_delta",
    "eternal_t_min",
    "eternal_tolerance",
    "sweep_axis",
    "sweep_values",
    "sweep_kernel",
    "save_stcf",
    "output_dir",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Simulate,
    Stcf,
    Blp,
    Volume,
    Rates,
    Kernel,
    Sweep,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Simulate => "simulate",
            Task::Stcf => "stcf",
            Task::Blp => "blp",
            Task::Volume => "volume",
            Task::Rates => "rates",
            Task::Kernel => "kernel",
            Task::Sweep => "sweep",
        }
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Task::Simulate, Task::Stcf, Task::Blp, Task::Volume, Task::Rates, Task::Kernel, Task::Sweep]
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| invalid("task", format!("unknown task `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    OmegaDrive,
    Eta,
    Beta,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::OmegaDrive => "omega_drive",
            SweepAxis::Eta => "eta",
            SweepAxis::Beta => "beta",
        }
    }

    /// Model parameters with the swept value substituted.
    pub fn apply(self, p: &ModelParams, value: f64) -> ModelParams {
        let mut q = *p;
        match self {
            SweepAxis::OmegaDrive => q.omega = value,
            SweepAxis::Eta => q.eta = value,
            SweepAxis::Beta => q.beta = value,
        }
        q
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "omega_drive" | "omega" => Ok(SweepAxis::OmegaDrive),
            "eta" => Ok(SweepAxis::Eta),
            "beta" => Ok(SweepAxis::Beta),
            other => Err(invalid("sweep_axis", format!("unknown axis `{other}` (omega_drive|eta|beta)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonteCarlo {
    pub n_samples: usize,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: ModelParams,
    pub heom: HeomConfig,
    pub task: Task,
    pub initial_bloch: [f64; 3],
    pub mc: MonteCarlo,
    pub differencing: Differencing,
    pub kernel_delta: f64,
    pub eternal_t_min: f64,
    pub eternal_tolerance: f64,
    pub sweep: Option<Sweep>,
    pub sweep_kernel: bool,
    pub save_stcf: bool,
    pub output_dir: PathBuf,
}

fn invalid(key: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { key: key.to_string(), reason: reason.into() }
}

impl RunConfig {
    /// Parses and validates a config for `task`.
    pub fn from_kv(kv: &KeyValues, task: Task) -> Result<Self> {
        if let Some(key) =
            kv.keys().find(|k| !MODEL_KEYS.contains(k) && !HEOM_KEYS.contains(k) && !RUN_KEYS.contains(k))
        {
            return Err(invalid(key, "unknown key"));
        }
        if let Some(declared) = kv.get("task") {
            if declared.parse::<Task>()? != task {
                return Err(invalid("task", format!("config declares `{declared}`, command is `{}`", task.name())));
            }
        }
        let initial_bloch = match kv.parse_list::<f64>("initial_bloch")? {
            None => [0.0, 0.0, 1.0],
            Some(v) if v.len() == 3 => [v[0], v[1], v[2]],
            Some(v) => return Err(invalid("initial_bloch", format!("expected 3 components, found {}", v.len()))),
        };
        let sweep = match (kv.get("sweep_axis"), kv.parse_list::<f64>("sweep_values")?) {
            (None, None) => None,
            (Some(axis), Some(values)) => Some(Sweep { axis: axis.parse()?, values }),
            (Some(_), None) => return Err(invalid("sweep_values", "required with sweep_axis")),
            (None, Some(_)) => return Err(invalid("sweep_axis", "required with sweep_values")),
        };
        let cfg = Self {
            model: ModelParams::from_kv(kv)?,
            heom: HeomConfig::from_kv(kv)?,
            task,
            initial_bloch,
            mc: MonteCarlo { n_samples: kv.parse_or("n_samples", 10_000)?, seed: kv.parse_opt("seed")? },
            differencing: kv.parse_or("differencing", Differencing::Central2)?,
            kernel_delta: kv.parse_or("kernel_delta", 0.9)?,
            eternal_t_min: kv.parse_or("eternal_t_min", 0.5)?,
            eternal_tolerance: kv.parse_or("eternal_tolerance", DEFAULT_NEGATIVITY_TOLERANCE)?,
            sweep,
            sweep_kernel: kv.parse_or("sweep_kernel", false)?,
            save_stcf: kv.parse_or("save_stcf", false)?,
            output_dir: PathBuf::from(kv.get("output_dir").unwrap_or("out")),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    #[cfg(test)]
    pub fn parse(text: &str, task: Task) -> Result<Self> {
        Self::from_kv(&KeyValues::parse(text)?, task)
    }

    /// Whether the run needs the Monte Carlo seed.
    pub fn uses_mc(&self) -> bool {
        match self.task {
            Task::Blp => true,
            Task::Sweep => self.mc.n_samples > 0,
            _ => false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let norm: f64 = self.initial_bloch.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm.is_nan() || norm > 1.0 + 1e-12 {
            return Err(invalid("initial_bloch", "must lie in the unit ball"));
        }
        if !(self.kernel_delta > 0.0 && self.kernel_delta < 1.0) {
            return Err(invalid("kernel_delta", "must lie in (0, 1)"));
        }
        if !(self.eternal_t_min >= 0.0 && self.eternal_t_min.is_finite()) {
            return Err(invalid("eternal_t_min", "must be >= 0"));
        }
        if !(self.eternal_tolerance >= 0.0 && self.eternal_tolerance.is_finite()) {
            return Err(invalid("eternal_tolerance", "must be >= 0"));
        }
        if self.task == Task::Blp && self.mc.n_samples == 0 {
            return Err(invalid("n_samples", "must be >= 1 for blp"));
        }
        if self.uses_mc() && self.mc.seed.is_none() {
            return Err(invalid("seed", "required for Monte Carlo tasks (set `seed` or pass --seed)"));
        }
        match (&self.sweep, self.task) {
            (None, Task::Sweep) => return Err(invalid("sweep_axis", "required for sweep")),
            (Some(s), _) => {
                if s.values.is_empty() {
                    return Err(invalid("sweep_values", "must not be empty"));
                }
                if let Some(v) = s.values.iter().find(|v| !v.is_finite()) {
                    return Err(invalid("sweep_values", format!("non-finite value {v}")));
                }
                for &v in &s.values {
                    s.axis.apply(&self.model, v).validate()?;
                }
            }
            _ => {}
        }
        if self.task == Task::Kernel && !self.model.is_stationary() {
            return Err(invalid("epsd", "kernel extraction requires epsd = 0 (or omega = 0)"));
        }
        Ok(())
    }

    /// Canonical text form; parsing it gives back the same config.
    pub fn to_kv(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        self.model.write_kv(&mut kv);
        self.heom.write_kv(&mut kv);
        kv.set("task", self.task.name());
        let b = self.initial_bloch;
        kv.set("initial_bloch", format!("{}, {}, {}", format_f64(b[0]), format_f64(b[1]), format_f64(b[2])));
        kv.set("n_samples", self.mc.n_samples);
        if let Some(seed) = self.mc.seed {
            kv.set("seed", seed);
        }
        kv.set("differencing", self.differencing);
        kv.set("kernel_delta", format_f64(self.kernel_delta));
        kv.set("eternal_t_min", format_f64(self.eternal_t_min));
        kv.set("eternal_tolerance", format_f64(self.eternal_tolerance));
        if let Some(s) = &self.sweep {
            kv.set("sweep_axis", s.axis.name());
            kv.set("sweep_values", s.values.iter().map(|&v| format_f64(v)).collect::<Vec<_>>().join(", "));
        }
        kv.set("sweep_kernel", self.sweep_kernel);
        kv.set("save_stcf", self.save_stcf);
        kv.set("output_dir", self.output_dir.display());
        kv
    }
}
