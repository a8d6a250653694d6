//! Proximal and projection sub-solvers used by the primal-dual iteration.

pub mod action;
pub mod conjugate;
pub mod parabola;
pub mod primal;

pub use action::{action_value, ActionValue};
pub use conjugate::{prox_conjugate_mu, ConjugateProx, ConjugateReport};
pub use parabola::{project_parabola, project_scalar, ParabolaPoint};
pub use primal::{prox_primal, ActiveSetState, PrimalProjector, PrimalReport};
