use thiserror::Error;

/// Errors surfaced by the detection pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("MSA label is not valid in the FBS dataset")]
    MsaLabelInFbsDataset,
    #[error("FBS label is not valid in the MSA dataset")]
    FbsLabelInMsaDataset,
    #[error("label code {0} is out of range for the {1} dataset")]
    UnknownLabelCode(u32, &'static str),
    #[error("no attack script registered for attack id {0}")]
    UnregisteredAttack(u8),
    #[error("attack id {0} is not in the registry")]
    UnknownAttack(u8),
    #[error("reshape requires an FBS or MSA trace, got a benign one")]
    NotAnAttackTrace,
    #[error("packet {seq} carries unknown field `{field}` for layer {layer}")]
    SchemaMismatch {
        seq: u32,
        field: String,
        layer: &'static str,
    },
    #[error("class `{0}` has fewer than {1} traces; cannot split")]
    ClassTooSmall(String, usize),
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },
    #[error("loss mask excludes every element")]
    AllMasked,
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("model has not been trained")]
    UntrainedModel,
    #[error("training graphs are missing class {0}")]
    MissingClass(u32),
    #[error("graph construction needs at least one packet")]
    EmptyInput,
    #[error("graph construction needs packets from a single layer")]
    MixedLayers,
    #[error("predictions compare labels from different label spaces")]
    LabelSpaceMismatch,
    #[error("prediction and label sequences differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("invalid scenario spec: {0}")]
    InvalidSpec(String),
    #[error("malformed input: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
