//! Every pipeline config key exposed as a global `--key VALUE` flag.

use std::path::Path;

use clap::{Arg, ArgMatches, Command};
use flowroi::config::CONFIG_KEYS;
use flowroi::PipelineConfig;

use crate::error::{CliError, CliResult, Context};

#[derive(Debug, Clone, Default)]
pub struct ConfigFlags {
    /// Flags given on the command line, in canonical key order.
    pub values: Vec<(&'static str, String)>,
}

impl ConfigFlags {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.iter().find(|(k, _)| *k == key).map(|(_, v)| v.as_str())
    }

    /// Defaults, then the config file, then flags.
    pub fn resolve(&self, file: Option<&Path>) -> CliResult<PipelineConfig> {
        let lossless_flag = match self.get("lossless") {
            Some(v) => {
                let mut probe = PipelineConfig::default();
                probe.set("lossless", v)?;
                probe.codec.lossless
            }
            None => false,
        };
        if lossless_flag && self.get("compression-rate").is_some() {
            return Err(CliError::usage("--compression-rate conflicts with --lossless"));
        }
        let mut config = PipelineConfig::default();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).ctx(format!("reading config {}", path.display()))?;
            config
                .apply_kv(&text)
                .map_err(|e| CliError::usage(format!("config file {}: {e}", path.display())))?;
        }
        for (k, v) in &self.values {
            config.set(k, v).map_err(|e| CliError::usage(format!("--{k}: {e}")))?;
        }
        config.validate().map_err(CliError::usage)?;
        Ok(config)
    }
}

impl clap::FromArgMatches for ConfigFlags {
    fn from_arg_matches(m: &ArgMatches) -> Result<Self, clap::Error> {
        let values = CONFIG_KEYS
            .iter()
            .filter_map(|&k| m.get_one::<String>(k).map(|v| (k, v.clone())))
            .collect();
        Ok(Self { values })
    }

    fn update_from_arg_matches(&mut self, m: &ArgMatches) -> Result<(), clap::Error> {
        *self = Self::from_arg_matches(m)?;
        Ok(())
    }
}

impl clap::Args for ConfigFlags {
    fn augment_args(cmd: Command) -> Command {
        CONFIG_KEYS.iter().fold(cmd, |cmd, &key| {
            let arg = Arg::new(key)
                .long(key)
                .global(true)
                .value_name("VALUE")
                .help_heading("Pipeline config");
            let arg = if key == "lossless" {
                arg.num_args(0..=1).default_missing_value("on")
            } else {
                arg
            };
            cmd.arg(arg)
        })
    }

    fn augment_args_for_update(cmd: Command) -> Command {
        Self::augment_args(cmd)
    }
}
