use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid too small: side {0} < 8")]
    GridTooSmall(usize),
    #[error("scale cutoff {t_min} below mesh resolution; minimum admissible cutoff is {min}")]
    CutoffBelowMesh { t_min: f64, min: f64 },
    #[error("non-finite field value at vertex ({i}, {j})")]
    NonFiniteValue { i: usize, j: usize },
    #[error("operation requires plane-window topology")]
    RequiresPlaneWindow,
    #[error("operation requires torus topology")]
    RequiresTorus,
    #[error("window side {0} too small; need L >= 1 for the truncated field")]
    WindowTooSmall(f64),
    #[error("singularity exponent alpha = {alpha} >= Q = {q} (supercritical)")]
    SupercriticalSingularity { alpha: f64, q: f64 },
    #[error("point ({x}, {y}) outside the window")]
    PointOutsideWindow { x: f64, y: f64 },
    #[error("circle of radius {r} around ({x}, {y}) exits the window")]
    CircleExitsWindow { x: f64, y: f64, r: f64 },
    #[error("circle radius {r} below resolvable minimum {min}")]
    RadiusBelowMesh { r: f64, min: f64 },
    #[error("measure overflow at vertex ({i}, {j}): field value {value}")]
    MeasureOverflow { i: usize, j: usize, value: f64 },
    #[error("expected point count {expected:.1} exceeds vertex budget {budget} (tessellation would be mesh-limited)")]
    TooManyPoints { expected: f64, budget: usize },
    #[error("point process is empty")]
    EmptyPointProcess,
    #[error("total measure mass is not positive")]
    ZeroMass,
    #[error("grids do not match")]
    GridMismatch,
    #[error("vertex sets must be disjoint and nonempty")]
    BadVertexSets,
    #[error("walk is not stopped at a boundary cell")]
    NotBoundaryStopped,
    #[error("curve has no vertices")]
    EmptyCurve,
    #[error("tessellation has too few cells for this operation")]
    TooFewCells,
    #[error("vertex lies outside the tessellation domain")]
    VertexOutsideDomain,
    #[error("parameter out of range")]
    BadParameter,
    #[error("start point lies outside the domain")]
    StartOutsideDomain,
    #[error("need at least {need} boundary cells, found {found}")]
    TooFewBoundaryCells { need: usize, found: usize },
    #[error("cell {0} is a boundary cell; interior cell required")]
    NotInteriorCell(u32),
    #[error("cell {0} is not a boundary cell")]
    NotBoundaryCell(u32),
    #[error("cell {0} lies in a component not connected to the boundary")]
    DisconnectedFromBoundary(u32),
    #[error("solver failed to reach residual {target} (achieved {achieved})")]
    SolverStalled { target: f64, achieved: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed field cache: {0}")]
    BadCache(String),
}

pub type Result<T> = std::result::Result<T, Error>;
