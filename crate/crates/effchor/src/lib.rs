//! File formats, network transports and the command line front end for
//! `effchor-core`.

pub mod cli;
pub mod config;
pub mod corpus;
pub mod parse;
pub mod runtime;
pub mod wire;
