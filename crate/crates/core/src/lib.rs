//! Equilibrium computation, learning dynamics and efficiency analysis for
//! multi-market oligopolies where every firm splits one unit of resource
//! across the same set of markets.

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod efficiency;
pub mod model;
pub mod potential;
pub mod quadrature;
pub mod solver;
