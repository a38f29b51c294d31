//! Service layer over `auralis-core`: a versioned project store, JSON
//! edit endpoints, offline export and a streaming preview socket.

pub mod commands;
pub mod config;
pub mod edit;
pub mod http;
pub mod load;
pub mod preview;
pub mod store;

pub use config::ServiceConfig;
pub use http::{router, AppState};
