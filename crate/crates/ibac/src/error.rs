use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("`{0}` is not a level")]
    NotALevel(String),
    #[error("level `{0}` cannot appear among the marks")]
    LevelInMarks(String),
    #[error("label set names two levels, `{0}` and `{1}`")]
    MultipleLevels(String, String),
    #[error("object label must carry exactly one level")]
    MissingLevel,
    #[error("schema `{id}` failed validation:\n{report}")]
    InvalidSchema { id: String, report: String },
    #[error("token was encoded under schema `{token}`, not `{schema}`")]
    SchemaMismatch { token: String, schema: String },

    #[error("scheme mismatch: {0}")]
    SchemeMismatch(String),
    #[error("malformed token: {0}")]
    MalformedToken(String),
    #[error("bad token syntax: {0}")]
    TokenSyntax(String),
    #[error("label `{0}` is already present in the token")]
    LabelPresent(String),
    #[error("label `{0}` is not present in the token")]
    LabelAbsent(String),

    #[error("key {0} collides with a schema code")]
    KeyCollides(u64),
    #[error("key {0} is not prime")]
    KeyNotPrime(u64),
    #[error("key {0} does not divide the obfuscated value")]
    KeyNotInvertible(u64),
    #[error("obfuscation key must be at least 2, got {0}")]
    BadKey(u64),
    #[error("the hidden-base transform applies to expsum tokens only")]
    HiddenBaseScheme,

    #[error("object token value is zero, dominance is undefined")]
    ZeroObjectValue,

    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("vertices unreachable from the entry: {}", .0.join(", "))]
    Unreachable(Vec<String>),
    #[error("hierarchy is not a tree: {0}")]
    NotATree(String),

    #[error("tuple ({subject}, {process}) is already registered")]
    DuplicateTuple { subject: String, process: String },
    #[error("no tuple registered for ({subject}, {process})")]
    NoSuchTuple { subject: String, process: String },
    #[error("no tuples registered for process `{0}`")]
    UnknownProcess(String),

    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("duplicate row id `{0}`")]
    DuplicateRow(String),
    #[error("no row with id `{0}`")]
    UnknownRow(String),
    #[error("bad store file: {0}")]
    StoreSyntax(String),

    #[error("benchmark pair `{0}`: timed route disagrees with the oracle")]
    BenchVerdict(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
