//! Monte Carlo schedule and cost risk analysis for activity networks.
//!
//! The pipeline is: describe a project ([`model::ProjectSpec`]), validate it
//! into a [`model::ValidatedNetwork`], compute the deterministic plan with
//! [`cpm`], simulate an [`montecarlo::Ensemble`], then derive sensitivity
//! indices ([`indices`]) and stochastic control readouts ([`control`]).

pub mod control;
pub mod cpm;
pub mod indices;
pub mod model;
pub mod montecarlo;
