pub mod counting;
pub mod data;
pub mod logic;
pub mod pipeline;
pub mod possibilistic;
pub mod query;
pub mod sat;
pub mod structure;
pub mod weights;
