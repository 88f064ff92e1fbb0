pub mod circuits;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod nogo;
pub mod protocols;
pub mod qstate;
pub mod rules;
