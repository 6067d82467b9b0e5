//! On-disk formats: scenario text files plus three little-endian binary
//! containers (CTF grid, projection package, complex signal).
//!
//! Every binary file opens with an 8-byte magic ("CHEMU" + 3-byte kind
//! tag), a u16 format version, and an endianness flag byte (always 0,
//! little-endian). Payload lengths are validated against the declared
//! dimensions before any object is returned.

mod binfmt;
mod scenario;

pub use binfmt::{
    decode_ctf, decode_packages, decode_signal, encode_ctf, encode_packages, encode_signal,
    read_ctf, read_packages, read_signal, write_ctf, write_packages, write_signal, SignalData,
    FORMAT_VERSION, MAGIC_CTF, MAGIC_PKG, MAGIC_SIG,
};
pub use scenario::{
    default_scenario, parse_scenario, read_scenario, render_scenario, write_scenario,
};
