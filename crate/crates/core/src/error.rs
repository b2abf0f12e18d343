use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("{} item(s) have no category: {}", .items.len(), preview(.items))]
    MissingCategories { items: Vec<String> },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(
        "step size {gamma} violates 1 - 2*gamma*(1-eta)*l > -1 (scale {scale}); \
         set gamma = 0 to use the automatic step size"
    )]
    StepSize { gamma: f64, scale: f64 },

    #[error("objective increased: {0}")]
    Diverged(String),

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("generated purchase log is empty; increase obs_prob or the number of slots")]
    EmptySynthetic,

    #[error("reference duration vector has zero norm")]
    ZeroNorm,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable code used by the command-line front end.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "E_PARSE",
            Error::EmptyInput(_) => "E_EMPTY",
            Error::MissingCategories { .. } => "E_MISSING_CATEGORY",
            Error::DimensionMismatch(_) => "E_DIMENSION",
            Error::OutOfRange(_) => "E_RANGE",
            Error::InvalidConfig(_) => "E_CONFIG",
            Error::StepSize { .. } => "E_STEP_SIZE",
            Error::Diverged(_) => "E_DIVERGED",
            Error::ModelFormat(_) => "E_MODEL",
            Error::EmptySynthetic => "E_SYNTH_EMPTY",
            Error::ZeroNorm => "E_ZERO_NORM",
            Error::Io(_) => "E_IO",
        }
    }
}

fn preview(items: &[String]) -> String {
    const SHOWN: usize = 10;
    let mut s = items
        .iter()
        .take(SHOWN)
        .cloned()
        .collect::<Vec<_>>()
        .join(", ");
    if items.len() > SHOWN {
        s.push_str(", ...");
    }
    s
}
