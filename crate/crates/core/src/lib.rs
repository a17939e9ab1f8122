//! The pair-pattern λ-calculus: reduction, intersection types, inhabitation and solvability.

pub mod inhabitation;
pub mod reduction;
pub mod solvability;
pub mod syntax;
pub mod typesys;
