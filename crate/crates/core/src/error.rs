use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("argument must have positive real part, got z = {re} + {im}i")]
    BranchViolation { re: f64, im: f64 },

    #[error("mode j = {j} lies within the crossing band |E_j(k)| <= {eps:.3e}; shift E or k, or request exact-zero handling")]
    NearCrossing { j: i32, eps: f64 },

    #[error("modes {j1} and {j2} both sit on their hypersurfaces; intersections are not supported")]
    HypersurfaceIntersection { j1: i32, j2: i32 },

    #[error("mode j = {j} is in the positive class; the exterior problem has no L2 solution there")]
    PositiveMode { j: i32 },

    #[error("energy {energy} is too close to the Dirichlet spectrum: smallest relative pivot {pivot:.3e}")]
    DirichletProximity { energy: f64, pivot: f64 },

    #[error("no radius in [{r0}, {r1}] keeps E = {energy} clear of the Dirichlet spectrum by {margin:.3e}")]
    NoClearRadius { energy: f64, r0: f64, r1: f64, margin: f64 },

    #[error("grid undersampled: {0}")]
    Undersampled(String),

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("evaluation point outside the exterior region: r = {r} <= R = {radius}")]
    NotExterior { r: f64, radius: f64 },

    #[error("seed point not accepted: sigma_min = {sigma:.3e} exceeds tolerance {tol:.3e}")]
    SeedRejected { sigma: f64, tol: f64 },

    #[error("envelope support reaches the band endpoints")]
    EnvelopeAtBandEdge,

    #[error("gauge alignment failed between k = {k0} and k = {k1} (overlap {overlap:.3e})")]
    GaugeFailure { k0: f64, k1: f64, overlap: f64 },

    #[error("band has multiplicity {0}; single-band transport needs a simple band")]
    DegenerateBand(usize),

    #[error("wavepacket needs more than {cap} cells")]
    CellOverflow { cap: usize },

    #[error("linear algebra failure: {0}")]
    Linalg(String),
}
