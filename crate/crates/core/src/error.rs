use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid field: non-finite value {value} at node {index}")]
    InvalidField { index: usize, value: f64 },

    #[error("spectrum is not Hermitian: mode {mode} deviates by {defect:e}")]
    AsymmetricSpectrum { mode: i64, defect: f64 },

    #[error("operands live on different grids")]
    GridMismatch,

    #[error("reference DFT refused for n = {n} (limit {limit})")]
    OracleSize { n: usize, limit: usize },

    #[error("parameter `{name}` = {value} out of range: expected {expected}")]
    Parameter {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("invalid initial data: {0}")]
    InitialData(String),

    #[error("numerical blow-up detected at t = {time}")]
    BlowUp { time: f64 },

    #[error("invalid run configuration: {0}")]
    Config(String),

    #[error("malformed series data at line {line}: {message}")]
    SeriesFormat { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn check_param(
    name: &'static str,
    value: f64,
    ok: bool,
    expected: &'static str,
) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter {
            name,
            value,
            expected,
        })
    }
}
