//! Error categories behind the process exit code.

use std::fmt;

use farsent::classify::ClassifyError;
use farsent::corpus::CorpusError;
use farsent::preprocess::PreprocessError;
use farsent::vectorize::VectorizeError;

pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_INTERNAL: u8 = 3;

/// Invalid configuration or arguments.
#[derive(Debug)]
pub struct ConfigError(pub String);

/// Input data that cannot be used.
#[derive(Debug)]
pub struct DataError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for DataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}
impl std::error::Error for DataError {}

pub fn config_error(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(ConfigError(msg.into()))
}

pub fn data_error(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(DataError(msg.into()))
}

/// First recognizable cause decides: configuration problems give 1, data
/// problems 2, anything else 3.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() {
            return EXIT_CONFIG;
        }
        if cause.is::<DataError>() {
            return EXIT_DATA;
        }
        if let Some(e) = cause.downcast_ref::<CorpusError>() {
            return match e {
                CorpusError::InvalidSplit(_) => EXIT_CONFIG,
                _ => EXIT_DATA,
            };
        }
        if let Some(e) = cause.downcast_ref::<PreprocessError>() {
            return match e {
                PreprocessError::MissingSpellPolicy => EXIT_INTERNAL,
                PreprocessError::Io { .. } => EXIT_DATA,
                _ => EXIT_CONFIG,
            };
        }
        if let Some(e) = cause.downcast_ref::<VectorizeError>() {
            return match e {
                VectorizeError::InvalidParams(_) => EXIT_CONFIG,
                _ => EXIT_DATA,
            };
        }
        if let Some(e) = cause.downcast_ref::<ClassifyError>() {
            return match e {
                ClassifyError::InvalidK { .. } | ClassifyError::InvalidHyperparameter(_) => {
                    EXIT_CONFIG
                }
                _ => EXIT_DATA,
            };
        }
        if cause.is::<farsent::container::ContainerError>()
            || cause.is::<farsent::evaluate::EvaluateError>()
            || cause.is::<std::io::Error>()
            || cause.is::<csv::Error>()
            || cause.is::<serde_json::Error>()
        {
            return EXIT_DATA;
        }
        if let Some(e) = cause.downcast_ref::<farsent::pipeline::PipelineError>() {
            use farsent::pipeline::PipelineError as P;
            match e {
                P::External { .. } | P::VectorFileChanged { .. } | P::Io { .. } => return EXIT_DATA,
                P::ExternalVectorsRequired => return EXIT_CONFIG,
                // Wrapped module errors are classified when the chain reaches them.
                _ => {}
            }
        }
    }
    EXIT_INTERNAL
}
