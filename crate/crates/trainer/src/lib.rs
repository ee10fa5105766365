//! Trainer service: an HTTP API with a server-sent event stream over
//! [`rescue_core::service::Session`], plus the batch command line.

pub mod cli;
pub mod server;
