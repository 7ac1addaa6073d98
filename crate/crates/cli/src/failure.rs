//! Exit-code classification: 1 usage, 2 data, 3 numeric.

use satlab::lab::config::ConfigError;
use satlab::lab::LabError;
use satlab::linalg::LinalgError;
use satlab::probes::ProbeError;
use satlab::spectral::SpectralError;

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Usage,
    Data,
    Numeric,
}

#[derive(Debug)]
pub struct Failure {
    pub kind: Kind,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self.kind {
            Kind::Usage => EXIT_USAGE,
            Kind::Data => EXIT_DATA,
            Kind::Numeric => EXIT_NUMERIC,
        }
    }
}

pub fn usage(error: impl Into<anyhow::Error>) -> Failure {
    Failure { kind: Kind::Usage, error: error.into() }
}

pub fn data(error: impl Into<anyhow::Error>) -> Failure {
    Failure { kind: Kind::Data, error: error.into() }
}

pub fn numeric(error: impl Into<anyhow::Error>) -> Failure {
    Failure { kind: Kind::Numeric, error: error.into() }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::InvalidValue { .. } => usage(e),
            ConfigError::Malformed(_) => data(e),
        }
    }
}

fn spectral_kind(e: &SpectralError) -> Kind {
    match e {
        SpectralError::InvalidDelta(_) => Kind::Usage,
        SpectralError::Linalg(LinalgError::ShapeMismatch { .. } | LinalgError::NotSquare { .. }) => Kind::Data,
        SpectralError::Linalg(_) | SpectralError::NonFiniteActivation { .. } => Kind::Numeric,
        SpectralError::DimMismatch { .. }
        | SpectralError::InsufficientSamples { .. }
        | SpectralError::EmptyInput
        | SpectralError::TooFewLayers(_)
        | SpectralError::Layout(_) => Kind::Data,
    }
}

impl From<SpectralError> for Failure {
    fn from(e: SpectralError) -> Self {
        Failure { kind: spectral_kind(&e), error: e.into() }
    }
}

impl From<ProbeError> for Failure {
    fn from(e: ProbeError) -> Self {
        match e {
            ProbeError::InvalidConfig(_) => usage(e),
            _ => data(e),
        }
    }
}

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        let kind = match &e {
            LabError::Diverged { .. } => Kind::Numeric,
            LabError::Spectral(s) => spectral_kind(s),
            LabError::Probe(ProbeError::InvalidConfig(_)) => Kind::Usage,
            _ => Kind::Data,
        };
        Failure { kind, error: e.into() }
    }
}

impl From<satlab::format::FormatError> for Failure {
    fn from(e: satlab::format::FormatError) -> Self {
        data(e)
    }
}

impl From<satlab::rf::RfError> for Failure {
    fn from(e: satlab::rf::RfError) -> Self {
        data(e)
    }
}
