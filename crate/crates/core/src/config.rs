//! Workbench configuration files and experiment CSV files.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridworld::GridSpec;
use crate::irl::IrlConfig;
use crate::metrics::MetricsReport;
use crate::planner::PlannerConfig;
use crate::protocol::{SessionConfig, StudySetup};
use crate::simteacher::TeacherStrategy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSection {
    pub strategy: TeacherStrategy,
    pub seeds: usize,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            strategy: TeacherStrategy::RandomStart,
            seeds: 30,
        }
    }
}

/// A single TOML file that fully determines an experiment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkbenchConfig {
    pub grid: GridSpec,
    pub session: SessionConfig,
    pub irl: IrlConfig,
    pub planner: PlannerConfig,
    pub experiment: ExperimentSection,
}

impl WorkbenchConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.setup().validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn setup(&self) -> StudySetup {
        StudySetup {
            grid: self.grid.clone(),
            session: self.session.clone(),
            irl: self.irl.clone(),
            planner: self.planner.clone(),
        }
    }
}

pub fn write_reports_csv<W: Write>(out: W, reports: &[MetricsReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in reports {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_reports_csv<R: Read>(input: R) -> Result<Vec<MetricsReport>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}
