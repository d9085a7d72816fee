pub mod alerts;
pub mod baseline;
pub mod geo;
pub mod rules;
pub mod state;
