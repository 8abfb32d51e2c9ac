//! Validated run configuration.

use std::path::PathBuf;

use serde::Serialize;

use crate::circuit::{bench, parse_qasm, Circuit, PauliString};
use crate::dqc::DqcTopology;
use crate::error::{Error, Result};
use crate::hemicut::CostOrder;
use crate::reconstruct::EvalMode;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Input {
    Bench { name: String, qubits: usize },
    Qasm { path: PathBuf },
}

#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub input: Input,
    /// Preset name or path to a topology JSON file.
    pub topology: String,
    pub reuse: bool,
    /// Instances served from another instance's results; `None` means all
    /// but one.
    pub reuse_count: Option<usize>,
    pub restarts: usize,
    pub mode: EvalMode,
    pub seed: u64,
    pub budget: usize,
    pub cost_order: CostOrder,
    pub observable: Option<PauliString>,
    pub no_cut: bool,
    pub dump_graph: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::Config("--budget must be at least 1".into()));
        }
        if self.restarts == 0 && self.reuse {
            return Err(Error::Config("--restarts must be at least 1 when reuse is on".into()));
        }
        if let EvalMode::Shots { shots: 0, .. } = self.mode {
            return Err(Error::Config("--shots must be at least 1".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        if self.reuse_count.is_some() && !self.reuse {
            return Err(Error::Config("--reuse-count needs --reuse".into()));
        }
        Ok(())
    }

    pub fn input_name(&self) -> String {
        match &self.input {
            Input::Bench { name, qubits } => format!("{name}-{qubits}"),
            Input::Qasm { path } => path.display().to_string(),
        }
    }

    /// The input circuit with the observable attached.
    pub fn circuit(&self) -> Result<Circuit> {
        let mut c = match &self.input {
            Input::Bench { name, qubits } => bench::builtin(name, *qubits, self.seed)?,
            Input::Qasm { path } => parse_qasm(&std::fs::read_to_string(path)?)?,
        };
        if let Some(obs) = &self.observable {
            if obs.len() != c.num_qubits {
                return Err(Error::Observable { obs: obs.to_string(), qubits: c.num_qubits });
            }
            c.observable = Some(obs.clone());
        }
        Ok(c)
    }

    pub fn topology(&self) -> Result<DqcTopology> {
        DqcTopology::resolve(&self.topology)
    }
}
