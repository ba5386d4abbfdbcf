use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("positivity violation at s = {s}: {what}")]
    Positivity { s: f64, what: String },
    #[error("boundary closure error: {0}")]
    Boundary(String),
    #[error("convexity violation: {0}")]
    Convexity(String),
    #[error("normalization error: {0}")]
    Normalization(String),
    #[error("path error: {0}")]
    Path(String),
    #[error("stiffness: step size underflow at t = {t} (dt = {dt})")]
    Stiffness { t: f64, dt: f64 },
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("coverage error: {0}")]
    Coverage(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
