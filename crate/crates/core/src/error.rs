use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("scene parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("invalid scene: polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),

    #[error("invalid scene: non-simple polygon (edges {0} and {1} intersect)")]
    NonSimplePolygon(usize, usize),

    #[error("invalid scene: polygon is clockwise (signed area {0:.6e}); vertices must be counterclockwise")]
    Clockwise(f64),

    #[error("invalid scene: degenerate polygon with empty interior")]
    EmptyInterior,

    #[error("invalid scene: non-SPD metric at ({x:.6}, {y:.6}), eigenvalues {l1:.6e}, {l2:.6e}")]
    NonSpdMetric { x: f64, y: f64, l1: f64, l2: f64 },

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("invalid scene: curvature_bound must be > 0, got {0}")]
    InvalidCurvatureBound(f64),

    #[error("singular control matrix F at ({0:.6}, {1:.6})")]
    SingularControl(f64, f64),

    #[error("point outside domain: ({0}, {1})")]
    OutsideDomain(f64, f64),

    #[error("empty generator list")]
    EmptyGenerators,

    #[error("too many generators: {count} exceeds limit {limit}")]
    TooManyGenerators { count: usize, limit: usize },

    #[error("metric matrix is not SPD")]
    NonSpdMatrix,

    #[error("step from ({0:.9}, {1:.9}) would leave the domain")]
    StepExitsDomain(f64, f64),

    #[error("trajectory does not start singular (speed_sq {0:.6})")]
    NotSingularStart(f64),

    #[error("scene has a non-euclidean metric but no curvature_bound")]
    MissingCurvatureBound,

    #[error("operation requires {0}")]
    WrongMetric(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
