//! Sessions, file formats, the HTTP service and the command line for
//! interactive multiple text alignment. The engine lives in
//! [`alignkit_core`], re-exported here as [`engine`].

pub use alignkit_core as engine;

pub mod api;
pub mod cli;
pub mod export;
pub mod session;
pub mod vectors;
pub mod wire;
