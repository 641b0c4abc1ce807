//! Auditing of DNS-published SSH host key fingerprints.
//!
//! The crate is organised along the path a single domain takes through a scan:
//!
//! * [`sshfp`]: record types, parsing, validation, fingerprinting and matching.
//! * [`dns`]: a stub resolver client for SSHFP and address lookups.
//! * [`keyscan`]: host key collection over a minimal SSH key exchange.
//! * [`pipeline`]: the concurrent scan driver and its JSON Lines log.
//! * [`analysis`]: aggregation of scan logs into reports.

pub mod analysis;
pub mod dns;
pub mod keyscan;
pub mod pipeline;
pub mod sshfp;

mod serde_secs;

pub use sshfp::{
    compute_fingerprint, generate_records, key_algo_from_ssh_name, match_record, parse_rdata,
    parse_record, serialize_record, validate_record, HashType, HostKey, InvalidReason, KeyAlgo,
    MatchOutcome, MatchReason, SshfpRecord, Validity,
};
