use thiserror::Error;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("config error: {0}")]
    Config(String),

    #[error("unknown preset {name:?}; valid presets: {}", valid.join(", "))]
    UnknownPreset { name: String, valid: Vec<&'static str> },

    #[error("unknown tolerance profile {0:?}; valid profiles: default, loose")]
    UnknownProfile(String),

    #[error(transparent)]
    Model(#[from] qvdp_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, SweepError>;
