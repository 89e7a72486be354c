pub mod cli;
pub mod distribution;
pub mod error;
pub mod ext_real;
pub mod function;
pub mod hypercube;
pub mod instances;
pub mod mechanism;
pub mod oracle;
pub mod privacy;
pub mod registry;
pub mod repair;
pub mod tester;
pub mod verify;
