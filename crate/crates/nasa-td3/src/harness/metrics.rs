//! Incremental CSV logging for training and evaluation curves.
//!
//! Every row is flushed to disk as soon as it is written, so a killed run
//! leaves a valid CSV behind: header first, then complete rows only.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::agent::StepLosses;
use crate::error::Result;
use crate::intrinsic::RewardBreakdown;

pub const METRICS_COLUMNS: &str =
    "step,r_ext,r_novel,r_surprise,ae_loss,critic_loss,actor_loss,predictor_loss";
pub const EVAL_COLUMNS: &str = "step,mean_return,return_stddev";

/// Append-only CSV file that writes its header on creation.
pub struct CsvWriter {
    file: File,
    path: PathBuf,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &str) -> Result<CsvWriter> {
        let mut file = File::create(path)?;
        file.write_all(header.as_bytes())?;
        file.write_all(b"\n")?;
        Ok(CsvWriter {
            file,
            path: path.to_path_buf(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// One complete row: the step index followed by float fields.
    pub fn row(&mut self, step: u64, fields: &[f64]) -> Result<()> {
        let mut line = step.to_string();
        for v in fields {
            line.push(',');
            line.push_str(&v.to_string());
        }
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        Ok(())
    }
}

/// Per-step training metrics row.
pub fn write_metrics_row(
    w: &mut CsvWriter,
    step: u64,
    rewards: &RewardBreakdown,
    losses: &StepLosses,
) -> Result<()> {
    w.row(
        step,
        &[
            rewards.r_ext,
            rewards.r_novel,
            rewards.r_surprise,
            losses.ae_loss,
            losses.critic_loss,
            losses.actor_loss,
            losses.predictor_loss,
        ],
    )
}
