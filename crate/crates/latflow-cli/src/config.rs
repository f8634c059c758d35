//! `key=value` run configuration and its merge with command-line flags.

use crate::emit::Format;
use crate::Common;
use anyhow::{anyhow, bail, Context, Result};
use latflow::heights::HeightParams;
use std::path::{Path, PathBuf};

/// Settings as read from a config file, every entry optional.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub d: Option<usize>,
    pub lambda: Option<f64>,
    pub t: Option<f64>,
    pub epsilon: Option<f64>,
    pub n: Option<usize>,
    pub delta: Option<f64>,
    pub h: Option<f64>,
    pub seed: Option<u64>,
    pub resolution: Option<usize>,
    pub theta_grid_res: Option<usize>,
    pub output_path: Option<PathBuf>,
    pub format: Option<Format>,
    pub calibration: Option<PathBuf>,
}

/// Validated settings with defaults filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub d: usize,
    pub lambda: f64,
    pub t: f64,
    pub epsilon: f64,
    pub n: Option<usize>,
    pub delta: Option<f64>,
    pub h: Option<f64>,
    pub seed: Option<u64>,
    pub resolution: usize,
    pub theta_grid_res: Option<usize>,
    pub output_path: Option<PathBuf>,
    pub format: Format,
    pub calibration: Option<PathBuf>,
}

fn value<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.parse().map_err(|e| anyhow!("config key {key}: cannot parse '{raw}': {e}"))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config file {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config file {}", path.display()))
    }

    /// Parses `key=value` lines; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, raw) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected key=value", no + 1))?;
            let (key, raw) = (key.trim(), raw.trim());
            match key {
                "d" => c.d = Some(value(key, raw)?),
                "lambda" => c.lambda = Some(value(key, raw)?),
                "t" => c.t = Some(value(key, raw)?),
                "epsilon" => c.epsilon = Some(value(key, raw)?),
                "N" => c.n = Some(value(key, raw)?),
                "delta" => c.delta = Some(value(key, raw)?),
                "h" => c.h = Some(value(key, raw)?),
                "seed" => c.seed = Some(value(key, raw)?),
                "resolution" => c.resolution = Some(value(key, raw)?),
                "thetaGridRes" => c.theta_grid_res = Some(value(key, raw)?),
                "outputPath" => c.output_path = Some(PathBuf::from(raw)),
                "format" => {
                    c.format = Some(match raw {
                        "csv" => Format::Csv,
                        "json" => Format::Json,
                        _ => bail!("config key format: expected csv or json, got '{raw}'"),
                    })
                }
                "calibration" => c.calibration = Some(PathBuf::from(raw)),
                _ => bail!("line {}: unknown key '{key}'", no + 1),
            }
        }
        Ok(c)
    }

    pub fn apply_flags(&mut self, f: &Common) {
        fn over<T: Clone>(slot: &mut Option<T>, flag: &Option<T>) {
            if flag.is_some() {
                *slot = flag.clone();
            }
        }
        over(&mut self.d, &f.d);
        over(&mut self.lambda, &f.lambda);
        over(&mut self.t, &f.t);
        over(&mut self.epsilon, &f.epsilon);
        over(&mut self.n, &f.n);
        over(&mut self.delta, &f.delta);
        over(&mut self.h, &f.h);
        over(&mut self.seed, &f.seed);
        over(&mut self.resolution, &f.resolution);
        over(&mut self.theta_grid_res, &f.theta_grid_res);
        over(&mut self.output_path, &f.output);
        over(&mut self.format, &f.format);
        over(&mut self.calibration, &f.calibration);
    }

    pub fn resolve(self) -> Result<Settings> {
        let base = HeightParams::default();
        let s = Settings {
            d: self.d.unwrap_or(3),
            lambda: self.lambda.unwrap_or(base.lambda),
            t: self.t.unwrap_or(base.t),
            epsilon: self.epsilon.unwrap_or(base.epsilon),
            n: self.n,
            delta: self.delta,
            h: self.h,
            seed: self.seed,
            resolution: self.resolution.unwrap_or(base.quad_resolution),
            theta_grid_res: self.theta_grid_res,
            output_path: self.output_path,
            format: self.format.unwrap_or(Format::Json),
            calibration: self.calibration,
        };
        if s.d < 2 {
            bail!("d must be at least 2, got {}", s.d);
        }
        if s.n == Some(0) {
            bail!("N must be at least 1");
        }
        if let Some(delta) = s.delta {
            if !(delta > 0.0 && delta < 1.0) {
                bail!("delta must lie in (0,1), got {delta}");
            }
        }
        if let Some(h) = s.h {
            if h.is_nan() || h < 1.0 {
                bail!("h must be at least 1, got {h}");
            }
        }
        if s.theta_grid_res == Some(0) {
            bail!("thetaGridRes must be at least 1");
        }
        s.height_params().validate()?;
        Ok(s)
    }
}

impl Settings {
    pub fn height_params(&self) -> HeightParams {
        HeightParams { lambda: self.lambda, t: self.t, epsilon: self.epsilon, quad_resolution: self.resolution, ..HeightParams::default() }
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| anyhow!("this command is randomized and needs --seed (or seed= in the config)"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_and_comments() {
        let c = RunConfig::parse("# run\nlambda = 0.8\nN=12\nformat=csv\n\nthetaGridRes=32 # coarse\n").unwrap();
        assert_eq!(c.lambda, Some(0.8));
        assert_eq!(c.n, Some(12));
        assert_eq!(c.format, Some(Format::Csv));
        assert_eq!(c.theta_grid_res, Some(32));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(RunConfig::parse("gamma=1").is_err());
        assert!(RunConfig::parse("lambda=abc").is_err());
        assert!(RunConfig::parse("lambda").is_err());
    }

    #[test]
    fn flags_override_file() {
        let mut c = RunConfig::parse("lambda=0.8\nt=2").unwrap();
        c.apply_flags(&Common { lambda: Some(0.7), ..Common::default() });
        let s = c.resolve().unwrap();
        assert_eq!(s.lambda, 0.7);
        assert_eq!(s.t, 2.0);
    }

    #[test]
    fn resolve_validates_ranges() {
        assert!(RunConfig { lambda: Some(1.5), ..RunConfig::default() }.resolve().is_err());
        assert!(RunConfig { delta: Some(0.0), ..RunConfig::default() }.resolve().is_err());
        assert!(RunConfig { resolution: Some(8), ..RunConfig::default() }.resolve().is_err());
    }
}
