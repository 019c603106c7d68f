//! Crate-wide error type.
//!
//! Exact-arithmetic failures are structural facts about the input (a
//! factorization claim that does not hold, a Jacobian that is singular at the
//! origin), so each gets its own variant instead of a stringly error.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("variable set mismatch: expected {expected:?}, got {got:?}")]
    VarMismatch { expected: Vec<String>, got: Vec<String> },

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("division obstruction: term {term:?} has degree {found} < {required} in `{var}`")]
    DivisionObstruction {
        var: String,
        required: usize,
        found: usize,
        term: Vec<u16>,
    },

    #[error("series is not a unit: constant term is zero")]
    NonUnitConstant,

    #[error("inner series for variable `{0}` has a nonzero constant term")]
    NonzeroConstantInner(String),

    #[error("implicit system is singular: Jacobian in the unknowns is not invertible at the origin")]
    SingularJacobian,

    #[error("arity mismatch: {0}")]
    Arity(String),

    #[error("Hermitian symmetry violated at exponent {0:?}")]
    NotHermitian(Vec<u16>),

    #[error("defining series is not in normal coordinates: offending exponent {0:?}")]
    NotNormalCoordinates(Vec<u16>),

    #[error("hypersurface is Levi-flat to truncation; invariant undefined")]
    LeviFlat,

    #[error("hypersurface is not generic at the origin: leading Levi coefficient vanishes")]
    NotGeneric,

    #[error("map is not invertible: linear part is degenerate")]
    NonInvertibleMap,

    #[error("jet order {requested} exceeds the configured maximum {max}")]
    JetOrderLimit { requested: usize, max: usize },

    #[error("map does not fix the jet-space origin: G_z(0,0) != 0")]
    JetOriginNotFixed,

    #[error("valuation requirement failed: {0}")]
    ValuationViolation(String),

    #[error("degenerate linear solve: {0}")]
    DegenerateSolve(String),

    #[error("resonance in degree-by-degree solve at degree {degree}")]
    Resonance { degree: usize },

    #[error("truncation too small: need at least {need}, have {have}")]
    TruncationTooSmall { need: usize, have: usize },

    #[error("no admissible bisecting direction: blocked by singular directions {0:?}")]
    NoAdmissibleSector(Vec<f64>),

    #[error("approximant pole at direction {pole_dir} rad lies on the summation ray {ray_dir} rad")]
    PoleOnRay { pole_dir: f64, ray_dir: f64 },

    #[error("multi-level summation requires an explicit decomposition of the series")]
    MissingDecomposition,

    #[error("too few coefficients: need {need}, have {have}")]
    TooFewCoefficients { need: usize, have: usize },

    #[error("{0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
