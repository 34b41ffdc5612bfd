//! HTTP session server and operator command line for `lfd_feedback`.

pub mod cli;
pub mod server;
