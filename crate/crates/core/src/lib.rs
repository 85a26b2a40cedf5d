//! Simulation of sock-puppet audits of a short-video recommender, and the
//! drift analytics that go with them.

pub mod agent;
pub mod analytics;
pub mod catalog;
pub mod evaluation;
pub mod experiment;
pub mod platform;
pub mod predictor;
pub mod queries;
pub mod replay;
pub mod rng;
