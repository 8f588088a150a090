//! Gauss-Seidel projection solvers for the dimensionless Landau-Lifshitz-Gilbert
//! equation, with experiment drivers for convergence, cost, stability,
//! hysteresis and relaxation studies.

pub mod config;
pub mod demag;
pub mod experiments;
pub mod error;
pub mod field;
pub mod heat;
pub mod io;
pub mod material;
pub mod mesh;
pub mod oracle;
pub mod schemes;

pub use error::{Error, Result};
pub use field::{Dimensionless, FieldContext, Forcing, Terms};
pub use material::MaterialParams;
pub use mesh::{Mesh, VectorField};
pub use schemes::{SchemeKind, SolveStats, Stepper};
