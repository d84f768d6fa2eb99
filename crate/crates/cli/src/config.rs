//! Flat `key=value` configuration. Precedence: command-line flags, then the
//! config file, then [`Settings::default`].

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub seed: u64,
    pub out: PathBuf,
    pub jobs: Option<usize>,
    /// Per-run step cap for the regression figures.
    pub max_steps: usize,
    pub g0_step: f64,
    pub g0_max: f64,
    pub kappas: Vec<f64>,
    pub alphas: Vec<f64>,
    pub sensing_max_steps: usize,
    pub sensing_halvings: usize,
    pub sensing_stall_window: usize,
    /// Scale WN sensing stepsizes by `‖W‖_F`.
    pub wn_frobenius: bool,
    pub dump_trajectories: bool,
    /// Snapshot spacing in trajectory dumps.
    pub dump_every: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("out"),
            jobs: None,
            max_steps: 2_000_000,
            g0_step: 0.25,
            g0_max: 4.0,
            kappas: (0..=6).map(|k| 10f64.powf(k as f64 / 2.0)).collect(),
            alphas: vec![0.01, 0.03, 0.1, 0.3, 1.0],
            sensing_max_steps: 2_000_000,
            sensing_halvings: 14,
            sensing_stall_window: 10_000,
            wn_frobenius: true,
            dump_trajectories: false,
            dump_every: 100,
        }
    }
}

pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected key=value", n + 1))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| anyhow!("config key `{key}`: {e}"))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    let list = v.split(',').map(|s| parse::<f64>(key, s.trim())).collect::<Result<Vec<_>>>()?;
    if list.is_empty() {
        bail!("config key `{key}`: empty list");
    }
    Ok(list)
}

impl Settings {
    pub fn apply(&mut self, map: &BTreeMap<String, String>) -> Result<()> {
        for (k, v) in map {
            match k.as_str() {
                "seed" => self.seed = parse(k, v)?,
                "out" => self.out = PathBuf::from(v),
                "jobs" => self.jobs = Some(parse(k, v)?),
                "max_steps" => self.max_steps = parse(k, v)?,
                "g0_step" => self.g0_step = parse(k, v)?,
                "g0_max" => self.g0_max = parse(k, v)?,
                "kappas" => self.kappas = parse_list(k, v)?,
                "alphas" => self.alphas = parse_list(k, v)?,
                "sensing_max_steps" => self.sensing_max_steps = parse(k, v)?,
                "sensing_halvings" => self.sensing_halvings = parse(k, v)?,
                "sensing_stall_window" => self.sensing_stall_window = parse(k, v)?,
                "wn_frobenius" => self.wn_frobenius = parse(k, v)?,
                "dump_trajectories" => self.dump_trajectories = parse(k, v)?,
                "dump_every" => self.dump_every = parse(k, v)?,
                other => bail!("unknown config key `{other}`"),
            }
        }
        if !(self.g0_step > 0.0) || !(self.g0_max >= 0.0) {
            bail!("g0_step must be positive and g0_max nonnegative");
        }
        if self.dump_every == 0 {
            bail!("dump_every must be positive");
        }
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<BTreeMap<String, String>> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        parse_config(&text)
    }

    /// `0, step, 2·step, …` up to `g0_max`, optionally without the zero point.
    pub fn g0_grid(&self, include_zero: bool) -> Vec<f64> {
        let n = (self.g0_max / self.g0_step + 1e-9).floor() as usize;
        (0..=n).map(|k| k as f64 * self.g0_step).filter(|&g| include_zero || g > 0.0).collect()
    }
}
