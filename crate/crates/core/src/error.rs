use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Grid dimension other than 2 or 3.
    Dimension(usize),
    /// Fewer than four cells along an axis.
    TooFewCells { axis: usize, cells: usize },
    /// Non-positive or non-finite spacing.
    Spacing(f64),
    /// Two operands live on different grids.
    GridMismatch,
    /// A geometric object does not fit inside the grid box.
    OutOfBox,
    /// An operation needs a non-empty set.
    EmptySet,
    /// `F` nonempty while the reference set is empty: the dissipation is
    /// `+∞` everywhere.
    UnboundedEnergy,
    /// Invalid numerical parameter.
    InvalidParameter(&'static str),
    /// A forcing value exceeds the declared bound `C0`.
    ForcingBound { value: f64, bound: f64 },
    /// The primal-dual iteration did not reach the requested gap.
    NonConvergence { iterations: usize, gap: f64 },
    /// An evolving set reached the outer cell layers of the grid.
    BoundaryContact { step: usize },
    /// The grid is too coarse to resolve the movement band of a step.
    ResolutionCoupling { spacing: f64, limit: f64 },
    /// Precondition of a comparison experiment does not hold.
    Precondition(&'static str),
    /// Profile evaluated where its curvature is undefined.
    ProfileDomain,
    /// Barrier sequence index outside `1..=floor(delta/h)+1`.
    BarrierIndex { index: usize, max: usize },
    /// `a_i * d_i > 1`: the barrier horizon is too long.
    BarrierParameters { index: usize },
    /// A least-squares fit is underdetermined or degenerate.
    DegenerateFit(&'static str),
    /// Trajectory lacks required snapshots.
    MissingSnapshots,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dimension(n) => write!(f, "unsupported dimension {n} (expected 2 or 3)"),
            Error::TooFewCells { axis, cells } => {
                write!(f, "axis {axis} has {cells} cells, at least 4 required")
            }
            Error::Spacing(dx) => write!(f, "grid spacing must be positive and finite, got {dx}"),
            Error::GridMismatch => write!(f, "operands live on different grids"),
            Error::OutOfBox => write!(f, "object does not fit in the grid box"),
            Error::EmptySet => write!(f, "operation requires a non-empty set"),
            Error::UnboundedEnergy => {
                write!(f, "energy is +inf: candidate set is non-empty but reference set is empty")
            }
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::ForcingBound { value, bound } => {
                write!(f, "forcing value {value} exceeds bound C0 = {bound}")
            }
            Error::NonConvergence { iterations, gap } => {
                write!(f, "primal-dual solver stopped after {iterations} iterations with gap {gap:e}")
            }
            Error::BoundaryContact { step } => {
                write!(f, "set touches the domain boundary at step {step}")
            }
            Error::ResolutionCoupling { spacing, limit } => write!(
                f,
                "grid spacing {spacing} exceeds sqrt(h)/8 = {limit}; movement band is unresolved"
            ),
            Error::Precondition(what) => write!(f, "precondition violated: {what}"),
            Error::ProfileDomain => {
                write!(f, "profile curvature undefined (endpoint or vanishing radius)")
            }
            Error::BarrierIndex { index, max } => {
                write!(f, "barrier index {index} outside 1..={max}")
            }
            Error::BarrierParameters { index } => {
                write!(f, "barrier step {index} has a_i * d_i > 1; horizon delta too large")
            }
            Error::DegenerateFit(what) => write!(f, "degenerate fit: {what}"),
            Error::MissingSnapshots => write!(f, "trajectory is missing required snapshots"),
        }
    }
}

impl core::error::Error for Error {}
