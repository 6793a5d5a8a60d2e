use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("obfuscation is not a bijection covering the vertex set: {0}")]
    BadObfuscation(String),

    #[error("graph too large for exact enumeration (n = {n}, cap = {cap})")]
    TooLargeForEnumeration { n: usize, cap: usize },

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("Gaussian mixture fit failed: {0}")]
    GmmDegenerate(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
