use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("network horizon {net} does not match dataset horizon {data}")]
    HorizonMismatch { net: usize, data: usize },

    #[error("core error: {0}")]
    Core(#[from] idmf_core::CoreError),

    #[error("nn error: {0}")]
    Nn(#[from] idmf_nn::NnError),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
