pub mod evaluation;
pub mod kg_store;
pub mod model;
pub mod nn;
pub mod numfmt;
pub mod supervision;
pub mod transe;
