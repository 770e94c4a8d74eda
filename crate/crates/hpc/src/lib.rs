//! Hierarchical primitive composition: Gaussian primitive policies combined
//! multiplicatively under learned meta-policies, trained with soft
//! actor-critic over a surrogate meta-MDP, demonstrated on 2D pick-and-place.

pub mod approx;
pub mod cli;
pub mod error;
pub mod gripperworld;
pub mod mdp;
pub mod policy;
pub mod sac;
