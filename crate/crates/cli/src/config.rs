use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::failure::Failure;

/// Every key a config file or `--set` may name.
pub const KNOWN_KEYS: &[&str] = &[
    "seed",
    "out",
    "data",
    "format",
    "samples_per_row",
    "channel",
    "sample_rate_hz",
    "real",
    "fake",
    "checkpoint",
    "checkpoints",
    "length",
    "count",
    "kind",
    "seed_value",
    "clamp_output",
    "stride",
    // generator
    "lstm_layers",
    "lstm_units",
    "fc_units",
    "mixtures",
    "final_activation",
    // discriminator
    "d_lstm_units",
    "d_fc_units",
    "window_len",
    // training
    "minibatch_size",
    "d_epochs",
    "g_epochs",
    "rounds",
    "minibatches_per_round",
    "tbptt_window",
    "learning_rate",
    "rmsprop_decay",
    "rmsprop_eps",
    "clip",
    "clip_norm",
    "sigma_floor",
    "holdout_fraction",
    "threshold",
];

/// Flat `key = value` settings. Later layers overwrite earlier ones.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn parse(text: &str, origin: &str) -> Result<Self, Failure> {
        let mut s = Settings::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Failure::Config(format!(
                    "{origin}:{}: expected `key = value`, got '{line}'",
                    i + 1
                )));
            };
            s.set(k.trim(), v.trim())
                .map_err(|e| Failure::Config(format!("{origin}:{}: {e}", i + 1)))?;
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), Failure> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(Failure::Config(format!("unknown config key '{key}'")));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Parses a `KEY=VALUE` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<(), Failure> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Failure::Config(format!("--set expects KEY=VALUE, got '{pair}'")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, Failure> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| {
                Failure::Config(format!(
                    "config key '{key}': cannot parse '{v}' as {}",
                    std::any::type_name::<T>()
                ))
            }),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, Failure> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, Failure> {
        self.get(key)?
            .ok_or_else(|| Failure::Config(format!("missing required setting '{key}'")))
    }

    pub fn flag(&self, key: &str, default: bool) -> Result<bool, Failure> {
        match self.raw(key) {
            None => Ok(default),
            Some("true" | "yes" | "1" | "on") => Ok(true),
            Some("false" | "no" | "0" | "off") => Ok(false),
            Some(v) => Err(Failure::Config(format!("config key '{key}': '{v}' is not a boolean"))),
        }
    }

    /// A path that must already exist.
    pub fn existing_path(&self, key: &str) -> Result<PathBuf, Failure> {
        let p = PathBuf::from(
            self.raw(key)
                .ok_or_else(|| Failure::Config(format!("missing required path '{key}'")))?,
        );
        if !p.exists() {
            return Err(Failure::Config(format!("{key} path does not exist: {}", p.display())));
        }
        Ok(p)
    }

    pub fn out_dir(&self) -> Result<PathBuf, Failure> {
        let p = PathBuf::from(self.raw("out").unwrap_or("sensegen-out"));
        std::fs::create_dir_all(&p)
            .map_err(|e| Failure::Config(format!("cannot create output directory {}: {e}", p.display())))?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_blank_lines_and_spacing() {
        let s = Settings::parse("# run\n\nseed = 7  # trailing\nmixtures=5\n", "t").unwrap();
        assert_eq!(s.require::<u64>("seed").unwrap(), 7);
        assert_eq!(s.get_or("mixtures", 24usize).unwrap(), 5);
        assert_eq!(s.get_or("lstm_units", 256usize).unwrap(), 256);
    }

    #[test]
    fn later_layers_win() {
        let mut s = Settings::parse("seed = 1", "t").unwrap();
        s.set_pair("seed=9").unwrap();
        assert_eq!(s.require::<u64>("seed").unwrap(), 9);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_lines() {
        assert!(matches!(Settings::parse("sed = 1", "t"), Err(Failure::Config(_))));
        let e = Settings::parse("seed = 1\nnonsense\n", "cfg.txt").unwrap_err();
        assert!(e.to_string().contains("cfg.txt:2"));
        let s = Settings::parse("seed = x", "t").unwrap();
        assert!(s.require::<u64>("seed").is_err());
    }
}
