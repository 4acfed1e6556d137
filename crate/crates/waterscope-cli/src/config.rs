//! Optional JSON defaults mirroring the long flags; explicit flags win.

use std::path::Path;

use serde::Deserialize;

use crate::CmdError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub pretty: Option<bool>,
    pub threads: Option<usize>,
    pub window: Option<usize>,
    pub bins: Option<usize>,
    pub depth_scale: Option<f64>,
    pub count: Option<usize>,
    pub size: Option<usize>,
    pub min_water: Option<f64>,
    pub seed: Option<u64>,
    pub max_attempts: Option<usize>,
    pub land_weight: Option<f64>,
    pub water_weight: Option<f64>,
    pub scale: Option<usize>,
    pub colorbar: Option<bool>,
    pub alpha: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CmdError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CmdError::Core(waterscope::Error::FormatError(format!(
                "{}: {e}",
                path.display()
            )))
        })?;
        serde_json::from_str(&text).map_err(|e| {
            CmdError::Core(waterscope::Error::FormatError(format!(
                "{}: {e}",
                path.display()
            )))
        })
    }
}
