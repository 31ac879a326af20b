use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use crowddest::sim::{CrossroadLayout, Scenario, SimConfig};
use serde::{Deserialize, Serialize};

/// TOML run configuration. `scenario` replaces the generated crossroad when
/// given; cutout placement by distance still uses `layout`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub layout: CrossroadLayout,
    pub scenario: Option<Scenario>,
    pub sim: SimConfig,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: Self = toml::from_str(&text).map_err(|e| anyhow!(crowddest::Error::Config(format!("{}: {e}", path.display()))))?;
        if let Err(e) = cfg.validate() {
            return Err(anyhow!(anchor(path, &text, e)));
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> crowddest::Result<()> {
        self.sim.validate()?;
        self.scenario().validate()
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario.clone().unwrap_or_else(|| self.layout.scenario())
    }
}

/// Prefixes a validation error with the line that sets the offending key,
/// found from the first word of the message.
fn anchor(path: &Path, text: &str, err: crowddest::Error) -> crowddest::Error {
    let msg = match &err {
        crowddest::Error::Config(m) => m.clone(),
        other => return crowddest::Error::Config(format!("{}: {other}", path.display())),
    };
    let key = msg.split_whitespace().next().unwrap_or("");
    let line = text.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
    });
    match line {
        Some(i) => crowddest::Error::Config(format!("{}:{}: {msg}", path.display(), i + 1)),
        None => crowddest::Error::Config(format!("{}: {msg}", path.display())),
    }
}
