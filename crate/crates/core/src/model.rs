//! The product-line model: use case diagram and specification together.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::configurator::{generate_ps_diagram, generate_ps_specification, ConfigError, PSDiagram, PSSpecification};
use crate::decision::{validate_decisions, DecisionError, DecisionModel, Violation};
use crate::diagram::{cross_check, parse_diagram, DiagramError, Finding, PLDiagram};
use crate::rucm::{parse_specification, validate_document, RucmError, UseCaseDocument, ValidationWarning};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Rucm { path: PathBuf, source: RucmError },
    #[error("{path}: {source}")]
    Diagram { path: PathBuf, source: DiagramError },
    #[error("{path}: {source}")]
    Decision { path: PathBuf, source: DecisionError },
}

pub(crate) fn read(path: &Path) -> Result<String, ModelError> {
    std::fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone)]
pub struct PLModel {
    pub spec: UseCaseDocument,
    pub diagram: PLDiagram,
}

/// PS artifacts of one product.
#[derive(Debug, Clone)]
pub struct Configured {
    pub diagram: PSDiagram,
    pub spec: PSSpecification,
}

impl PLModel {
    pub fn load(spec: &Path, diagram: &Path) -> Result<Self, ModelError> {
        let mut doc = parse_specification(&read(spec)?).map_err(|source| ModelError::Rucm {
            path: spec.to_path_buf(),
            source,
        })?;
        doc.source_path = spec.display().to_string();
        let diagram_model = parse_diagram(&read(diagram)?).map_err(|source| ModelError::Diagram {
            path: diagram.to_path_buf(),
            source,
        })?;
        Ok(PLModel {
            spec: doc,
            diagram: diagram_model,
        })
    }

    pub fn findings(&self) -> Vec<Finding> {
        cross_check(&self.diagram, &self.spec)
    }

    pub fn warnings(&self) -> Vec<ValidationWarning> {
        validate_document(&self.spec)
    }

    pub fn validate(&self, m: &DecisionModel) -> Vec<Violation> {
        validate_decisions(m, &self.diagram, &self.spec)
    }

    pub fn configure(&self, m: &DecisionModel) -> Result<Configured, ConfigError> {
        Ok(Configured {
            diagram: generate_ps_diagram(&self.diagram, m)?,
            spec: generate_ps_specification(&self.spec, &self.diagram, m)?,
        })
    }
}

pub fn load_decisions(path: &Path) -> Result<DecisionModel, ModelError> {
    DecisionModel::parse(&read(path)?).map_err(|source| ModelError::Decision {
        path: path.to_path_buf(),
        source,
    })
}
