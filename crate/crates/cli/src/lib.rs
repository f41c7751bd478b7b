//! Library side of the `argverify` binary: option resolution, API sessions
//! and the HTTP router, split out so integration tests can drive them.

pub mod options;
pub mod server;
pub mod session;
