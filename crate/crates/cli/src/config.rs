//! Flat `key = value` experiment configuration.
//!
//! Lines starting with `#` and blank lines are ignored. List-valued keys
//! (`n`, `rho`, `sigma_mode`, `plot_n`) may repeat; every other key may
//! appear at most once.
//!
//! ```text
//! signal = sine
//! rho1 = 1
//! rho2 = 1
//! lambda = 1
//! jump_law = rademacher
//! n = 200
//! n = 1000
//! rho = 0.1
//! sigma_mode = known
//! sigma_mode = estimated
//! replicates = 2000
//! seed = 7
//! ```

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use perisem::risk::MIN_REPLICATES;
use perisem::selection::{SelectionConfig, SigmaMode};
use perisem::{BoundChoice, Catalogue, Error, JumpLaw, NoiseParams, Result, SignalSpec};

const LIST_KEYS: [&str; 4] = ["n", "rho", "sigma_mode", "plot_n"];
const SCALAR_KEYS: [&str; 14] = [
    "signal",
    "signal_file",
    "rho1",
    "rho2",
    "lambda",
    "jump_law",
    "sigma",
    "k_star",
    "epsilon",
    "replicates",
    "seed",
    "out",
    "bound",
    "segments",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeKind {
    Known,
    Estimated,
}

impl ModeKind {
    pub fn name(self) -> &'static str {
        match self {
            ModeKind::Known => "known",
            ModeKind::Estimated => "estimated",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub signal: SignalSpec,
    pub noise: NoiseParams,
    pub ns: Vec<usize>,
    pub rhos: Vec<f64>,
    pub modes: Vec<ModeKind>,
    /// Known sigma; defaults to `sigma*`.
    pub sigma: Option<f64>,
    pub k_star: Option<u32>,
    pub epsilon: Option<f64>,
    pub replicates: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub bound: BoundChoice,
    pub plot_ns: Vec<usize>,
    pub segments: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses config text; relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut scalars: BTreeMap<&str, String> = BTreeMap::new();
        let mut lists: BTreeMap<&str, Vec<String>> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) =
                line.split_once('=').ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            let (k, v) = (k.trim(), v.trim().to_string());
            if let Some(&key) = LIST_KEYS.iter().find(|&&x| x == k) {
                lists.entry(key).or_default().push(v);
            } else if let Some(&key) = SCALAR_KEYS.iter().find(|&&x| x == k) {
                if scalars.insert(key, v).is_some() {
                    return Err(Error::Config(format!("line {}: duplicate key {k}", i + 1)));
                }
            } else {
                return Err(Error::Config(format!("line {}: unknown key {k}", i + 1)));
            }
        }

        let signal = match (scalars.get("signal"), scalars.get("signal_file")) {
            (Some(_), Some(_)) => return Err(Error::Config("give either signal or signal_file".into())),
            (Some(name), None) => {
                Catalogue::from_name(name).ok_or_else(|| Error::Config(format!("unknown signal {name}")))?.build()
            }
            (None, Some(file)) => {
                let p = base.join(file);
                let f = File::open(&p).map_err(|e| Error::Config(format!("cannot open {}: {e}", p.display())))?;
                SignalSpec::read_coefficient_file(file.clone(), BufReader::new(f))?
            }
            (None, None) => Catalogue::Zero.build(),
        };

        let real = |k: &str, default: f64| -> Result<f64> { scalars.get(k).map_or(Ok(default), |v| parse_f64(k, v)) };
        let jump_law = match scalars.get("jump_law") {
            Some(v) => JumpLaw::from_name(v).ok_or_else(|| Error::Config(format!("unknown jump_law {v}")))?,
            None => JumpLaw::Rademacher,
        };
        let noise = NoiseParams::new(real("rho1", 1.0)?, real("rho2", 0.0)?, real("lambda", 1.0)?, jump_law)
            .map_err(|e| Error::Config(e.to_string()))?;

        let ns = lists
            .get("n")
            .map_or(Ok(vec![]), |v| v.iter().map(|s| parse_int::<usize>("n", s)).collect::<Result<Vec<_>>>())?;
        let rhos = match lists.get("rho") {
            Some(v) => v.iter().map(|s| parse_f64("rho", s)).collect::<Result<Vec<_>>>()?,
            None => vec![perisem::selection::DEFAULT_RHO],
        };
        let modes = match lists.get("sigma_mode") {
            Some(v) => v
                .iter()
                .map(|s| match s.as_str() {
                    "known" => Ok(ModeKind::Known),
                    "estimated" => Ok(ModeKind::Estimated),
                    _ => Err(Error::Config(format!("unknown sigma_mode {s}"))),
                })
                .collect::<Result<Vec<_>>>()?,
            None => vec![ModeKind::Known],
        };
        let plot_ns = lists
            .get("plot_n")
            .map_or(Ok(vec![]), |v| v.iter().map(|s| parse_int::<usize>("plot_n", s)).collect::<Result<Vec<_>>>())?;
        let sigma = scalars.get("sigma").map(|v| parse_f64("sigma", v)).transpose()?;
        let k_star = scalars.get("k_star").map(|v| parse_int::<u32>("k_star", v)).transpose()?;
        let epsilon = scalars.get("epsilon").map(|v| parse_f64("epsilon", v)).transpose()?;
        let replicates = scalars.get("replicates").map_or(Ok(1), |v| parse_int::<usize>("replicates", v))?;
        let seed = scalars.get("seed").map_or(Ok(0), |v| parse_int::<u64>("seed", v))?;
        let bound = match scalars.get("bound").map(String::as_str) {
            None | Some("standard") => BoundChoice::Standard,
            Some("d-term") => BoundChoice::DTerm,
            Some(v) => return Err(Error::Config(format!("unknown bound {v}"))),
        };

        let cfg = Self {
            signal,
            noise,
            ns,
            rhos,
            modes,
            sigma,
            k_star,
            epsilon,
            replicates,
            seed,
            out: scalars.get("out").map(|o| base.join(o)),
            bound,
            plot_ns,
            segments: scalars.get("segments").map(|s| base.join(s)),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        for &n in self.ns.iter().chain(&self.plot_ns) {
            if n == 0 {
                return Err(Error::Config("n must be a positive integer".into()));
            }
        }
        if self.modes.contains(&ModeKind::Estimated) {
            if let Some(&n) = self.ns.iter().find(|&&n| n < 4) {
                return Err(Error::Config(format!("estimated sigma needs n >= 4, got {n}")));
            }
        }
        for &rho in &self.rhos {
            SelectionConfig::new(rho, SigmaMode::Estimated).map_err(|e| Error::Config(e.to_string()))?;
        }
        if let Some(s) = self.sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Config(format!("sigma must be > 0, got {s}")));
            }
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0 && e <= 1.0) {
                return Err(Error::Config(format!("epsilon must lie in (0, 1], got {e}")));
            }
        }
        if self.k_star == Some(0) {
            return Err(Error::Config("k_star must be >= 1".into()));
        }
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be >= 1".into()));
        }
        Ok(())
    }

    pub fn require_ns(&self) -> Result<&[usize]> {
        if self.ns.is_empty() {
            return Err(Error::Config("no n given".into()));
        }
        Ok(&self.ns)
    }

    pub fn require_mc_replicates(&self) -> Result<usize> {
        if self.replicates < MIN_REPLICATES {
            return Err(Error::Config(format!(
                "verification needs replicates >= {MIN_REPLICATES}, got {}",
                self.replicates
            )));
        }
        Ok(self.replicates)
    }

    pub fn sigma_mode(&self, kind: ModeKind) -> SigmaMode<f64> {
        match kind {
            ModeKind::Known => SigmaMode::Known(self.sigma.unwrap_or_else(|| self.noise.sigma_star())),
            ModeKind::Estimated => SigmaMode::Estimated,
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v.parse().map_err(|_| Error::Config(format!("{key}: not a number: {v}")))?;
    if !x.is_finite() {
        return Err(Error::Config(format!("{key}: not finite: {v}")));
    }
    Ok(x)
}

fn parse_int<I: std::str::FromStr>(key: &str, v: &str) -> Result<I> {
    v.parse().map_err(|_| Error::Config(format!("{key}: not a nonnegative integer: {v}")))
}
