use std::path::PathBuf;

use serde::Serialize;
use serde_json::Value;

use crate::error::{CliError, CliResult};
use crate::output::{Inputs, Outputs};

pub mod fit_dist;
pub mod optimize;
pub mod q;
pub mod simulate;
pub mod turnover_law;

/// A finished command, ready to be written out.
pub struct Done {
    pub out: PathBuf,
    pub outputs: Outputs,
    pub inputs: Inputs,
    pub seed: Option<u64>,
    pub config: Value,
    /// Set when the command ran but its checks failed; outputs are still
    /// written.
    pub failure: Option<CliError>,
}

impl Done {
    pub fn new<C: Serialize>(out: PathBuf, config: &C, inputs: Inputs, seed: Option<u64>) -> CliResult<Self> {
        Ok(Self {
            out,
            outputs: Outputs::default(),
            inputs,
            seed,
            config: serde_json::to_value(config)?,
            failure: None,
        })
    }
}

/// A report wrapped with the resolved configuration that produced it.
#[derive(Serialize)]
pub struct Report<'a, C: Serialize, R: Serialize> {
    pub config: &'a C,
    #[serde(flatten)]
    pub body: R,
}

pub(crate) fn csv_bytes<F>(write: F) -> CliResult<Vec<u8>>
where
    F: FnOnce(&mut Vec<u8>) -> costfolio::Result<()>,
{
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}
