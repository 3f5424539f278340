use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced anywhere in the data pathway.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty volume: operation requires at least one voxel")]
    EmptyVolume,

    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: [usize; 3],
        got: [usize; 3],
    },

    #[error("data length {len} does not match shape {shape:?}")]
    DataLengthMismatch { len: usize, shape: [usize; 3] },

    #[error("invalid spacing {spacing:?}: all components must be positive and finite")]
    InvalidSpacing { spacing: [f64; 3] },

    #[error("volume contains {count} non-finite values")]
    NonFiniteValues { count: usize },

    #[error("invalid orientation code {code:?}")]
    InvalidOrientationCode { code: String },

    #[error("indeterminate orientation: affine column {axis} has no dominant world axis (ratio {ratio:.4} < {min_ratio})")]
    IndeterminateOrientation {
        axis: usize,
        ratio: f64,
        min_ratio: f64,
    },

    #[error("degenerate affine: voxel axes {a} and {b} map to the same world axis")]
    DegenerateAffine { a: usize, b: usize },

    #[error("fraction {value} out of range {low}..={high}")]
    FractionOutOfRange { value: f64, low: f64, high: f64 },

    #[error("volume is not in RAS orientation (found {found})")]
    NotRas { found: String },

    #[error("resample output would have {voxels} voxels, exceeding the budget of {budget}")]
    VoxelBudgetExceeded { voxels: u64, budget: u64 },

    #[error("no voxel above foreground threshold {threshold}")]
    NoForeground { threshold: f32 },

    #[error("empty selection: masked-only loss with an empty mask")]
    EmptySelection,

    #[error("image and label geometry mismatch: {reason}")]
    GeometryMismatch { reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("nifti: {0}")]
    Nifti(#[from] NiftiError),

    #[error("manifest: {0}")]
    Manifest(#[from] ManifestError),

    #[error("sample blob: {0}")]
    Blob(#[from] BlobError),

    #[error("manifest entry {id:?}: {source}")]
    Entry {
        id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("requested {requested} samples but manifest has only {available} entries")]
    NotEnoughEntries { requested: usize, available: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Errors specific to NIfTI-1 parsing and writing.
#[derive(Debug, thiserror::Error)]
pub enum NiftiError {
    #[error("file truncated: expected at least {expected} bytes, got {got}")]
    Truncated { expected: usize, got: usize },

    #[error("invalid magic {magic:?}: only single-file NIfTI-1 (\"n+1\\0\") is supported")]
    InvalidMagic { magic: [u8; 4] },

    #[error("NIfTI-2 files are not supported (sizeof_hdr = 540)")]
    Nifti2Unsupported,

    #[error("header-pair NIfTI-1 files (\"ni1\\0\") are not supported")]
    HeaderPairUnsupported,

    #[error("cannot detect endianness: dim[0] = {dim0} is not in 1..=7 under either byte order")]
    UnknownEndianness { dim0: i16 },

    #[error("sizeof_hdr is {value}; a NIfTI-1 header must be exactly 348 bytes")]
    BadSizeofHdr { value: i32 },

    #[error("dims {dims:?} do not fit the NIfTI-1 16-bit dimension fields")]
    DimsExceedFormat { dims: [usize; 3] },

    #[error("unsupported datatype code {code}")]
    UnsupportedDatatype { code: i16 },

    #[error("volume rank is {rank} after squeezing trailing singleton dimensions; only rank 3 is supported")]
    UnsupportedRank { rank: usize },

    #[error("invalid dimension sizes {dims:?}")]
    InvalidDims { dims: Vec<i16> },

    #[error("vox_offset {vox_offset} is invalid: must be at least 352")]
    InvalidVoxOffset { vox_offset: f32 },

    #[error("volume has {voxels} voxels, exceeding the reader limit of {limit}")]
    TooLarge { voxels: u64, limit: u64 },

    #[error("data section truncated: expected {expected} bytes, got {got}")]
    DataTruncated { expected: usize, got: usize },

    #[error("decoded data contains {count} non-finite values")]
    NonFinite { count: usize },

    #[error("gzip: {0}")]
    Gzip(String),
}

/// Errors specific to manifest parsing.
#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },

    #[error("missing or invalid header line (expected \"#amaes-manifest\\tv1\\t...\")")]
    BadHeader,

    #[error("duplicate volume id {id:?}")]
    DuplicateId { id: String },

    #[error("checksum mismatch for {id:?}: manifest has {expected}, file has {got}")]
    ChecksumMismatch {
        id: String,
        expected: String,
        got: String,
    },
}

/// Errors specific to the binary sample-blob format.
#[derive(Debug, thiserror::Error)]
pub enum BlobError {
    #[error("blob truncated: expected at least {expected} bytes, got {got}")]
    Truncated { expected: usize, got: usize },

    #[error("bad magic {magic:?}: expected \"AMS1\"")]
    BadMagic { magic: [u8; 4] },

    #[error("unsupported blob version {version}")]
    UnsupportedVersion { version: u32 },

    #[error("inconsistent header: {reason}")]
    InconsistentHeader { reason: String },

    #[error("blob length {got} does not match header (expected {expected})")]
    LengthMismatch { expected: u64, got: usize },

    #[error("mask byte at index {index} is {value}; must be 0 or 1")]
    BadMaskByte { index: usize, value: u8 },
}

impl Error {
    /// Wrap an error with the manifest entry it came from.
    pub fn for_entry(id: &str, source: Error) -> Error {
        Error::Entry {
            id: id.to_string(),
            source: Box::new(source),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Error {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
