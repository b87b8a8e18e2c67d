//! Settings lookup: command-line flag, then the command's section of the
//! config file, then its `[common]` section, then the built-in default.
//!
//! ```toml
//! [common]
//! p = 0.25
//! seed = 7
//!
//! [converge-particle]
//! sigma = 0.25
//! ladder = [50.0, 100.0, 200.0]
//! ```

use std::path::Path;

use serde::de::DeserializeOwned;
use toml::Table;

use crate::CliError;

#[derive(Debug, Clone, Default)]
pub struct Settings {
    file: Table,
    section: String,
}

impl Settings {
    pub fn load(path: Option<&Path>, section: &str) -> Result<Self, CliError> {
        let file = match path {
            None => Table::new(),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
                text.parse::<Table>()
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
            }
        };
        for (key, value) in &file {
            if !value.is_table() {
                return Err(CliError::Config(format!(
                    "top-level key `{key}` must sit inside a section such as [common]"
                )));
            }
        }
        Ok(Self { file, section: section.to_string() })
    }

    fn lookup<T: DeserializeOwned>(&self, key: &str) -> Result<Option<T>, CliError> {
        for section in [self.section.as_str(), "common"] {
            let Some(value) = self.file.get(section).and_then(|s| s.get(key)) else {
                continue;
            };
            return value
                .clone()
                .try_into()
                .map(Some)
                .map_err(|e| CliError::Config(format!("[{section}] {key}: {e}")));
        }
        Ok(None)
    }

    /// Flag value if given, else the config value, else `default`.
    pub fn get<T: DeserializeOwned>(&self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError> {
        Ok(self.get_opt(key, flag)?.unwrap_or(default))
    }

    pub fn get_opt<T: DeserializeOwned>(&self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.lookup(key),
        }
    }

    /// Like [`get`](Self::get) but fails when no source provides the value.
    pub fn require<T: DeserializeOwned>(&self, key: &str, flag: Option<T>) -> Result<T, CliError> {
        self.get_opt(key, flag)?
            .ok_or_else(|| CliError::Usage(format!("missing --{key} (flag or config file)")))
    }
}
