//! Time-fractional parabolic problems `d^alpha u + A(t) u = f` on `(0, T]`
//! with history data on `(-inf, 0]`.

pub mod form;
pub mod mittag_leffler;
pub mod problem;
pub mod solver;
pub mod uniqueness;
pub mod weak;

pub use form::{BilinearForm, Coefficient, CoercivityWitness, FormFlavor, FormMatrix, NonlocalKernel};
pub use mittag_leffler::mittag_leffler;
pub use problem::ProblemData;
pub use solver::{solve_strong, solve_strong_with, DiscreteSolution, SolverOptions, StepDiagnostics};
pub use uniqueness::{Comparison, trajectory_distance, uniqueness_experiment, uniqueness_study, Perturbation, UniquenessStudy};
pub use weak::{test_family, weak_residual, weak_residual_of};
