use core::fmt;

/// Failure modes of the numerical routines.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// Roots of the zero polynomial were requested.
    UndefinedRoots,
    /// `n(-s)n(s) + m(-s)m(s)` has a root on the imaginary axis.
    DegenerateSpectralFactorization,
    /// A rational function was evaluated at one of its imaginary-axis poles.
    AxisPole { omega: f64 },
    /// Numerator degree exceeds denominator degree.
    ImproperTransferFunction,
    /// Only single-input single-output systems are supported here.
    SisoOnly,
    /// Matrix blocks do not fit together.
    Dimension(&'static str),
    /// `F'X + XF + Q = 0` has no unique solution.
    SingularSylvester,
    /// The Hamiltonian has imaginary-axis eigenvalues, or its invariant
    /// subspace does not yield the requested extremal solution.
    NoExtremalSolution,
    /// The Riccati differential equation escaped to infinity.
    RiccatiBlowUp { time: f64 },
    /// The Riccati integrator did not reach the requested accuracy.
    RiccatiAccuracy,
    /// L-infinity norm requested for a system with an imaginary-axis pole.
    NormUndefined,
    /// `I - D_P D_C` is singular.
    IllPosedLoop,
    /// Phase tracking along a contour failed even after maximal refinement.
    ContourResolutionExceeded,
    /// `h(s)` has an imaginary-axis root, so its winding number is undefined.
    WindingUndefined,
    /// Delay outside the window `|tau| < pi`.
    OutsideAnalysisWindow { tau: f64 },
    /// The eigenvalue iteration did not converge.
    EigenvalueFailure,
    /// A parameter violated its documented precondition.
    InvalidArgument(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::UndefinedRoots => write!(f, "undefined roots"),
            Error::DegenerateSpectralFactorization => {
                write!(f, "spectral factorization degenerate")
            }
            Error::AxisPole { omega } => write!(f, "axis pole at omega = {omega}"),
            Error::ImproperTransferFunction => write!(f, "improper transfer function"),
            Error::SisoOnly => write!(f, "SISO only"),
            Error::Dimension(what) => write!(f, "dimension mismatch: {what}"),
            Error::SingularSylvester => write!(f, "singular Sylvester operator"),
            Error::NoExtremalSolution => write!(f, "no extremal solution"),
            Error::RiccatiBlowUp { time } => write!(f, "Riccati blow-up near t = {time}"),
            Error::RiccatiAccuracy => write!(f, "Riccati integration did not converge"),
            Error::NormUndefined => write!(f, "norm undefined (axis pole)"),
            Error::IllPosedLoop => write!(f, "ill-posed feedback loop"),
            Error::ContourResolutionExceeded => write!(f, "contour resolution exceeded"),
            Error::WindingUndefined => write!(f, "winding undefined"),
            Error::OutsideAnalysisWindow { tau } => {
                write!(f, "outside analysis window: |tau| = {} >= pi", tau.abs())
            }
            Error::EigenvalueFailure => write!(f, "eigenvalue iteration did not converge"),
            Error::InvalidArgument(what) => write!(f, "invalid argument: {what}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
