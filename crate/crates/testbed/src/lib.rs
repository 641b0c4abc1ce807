//! Local stand-ins for the network services a scan talks to: a DNS
//! resolver pair (plain and validating) and SSH daemons, plus the
//! ten-domain fixture built from them.

pub mod dns;
pub mod fixture;
pub mod ssh;

pub use fixture::{Category, FixtureDomain, Testbed, FIXTURE_PSL};
