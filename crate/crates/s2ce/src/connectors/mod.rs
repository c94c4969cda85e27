//! External API of the platform: events on the wire, file and socket
//! sources/sinks, rate-controlled replay, and output splitting.
//!
//! Two encodings share one canonical record: newline-delimited JSON text for
//! files and debugging, and 4-byte big-endian length-prefixed frames carrying
//! the same UTF-8 record (without the trailing newline) for sockets. Decoding
//! is strict — a numeric field carrying text is an error at the boundary, not
//! a coercion.

mod codec;
mod files;
mod framing;
mod replay;
mod socket;
mod split;

pub use codec::{decode_event, decode_event_checked, encode_event, CodecError, MAX_RECORD_BYTES};
pub use files::{read_events, write_events, FileSource};
pub use framing::{deframe_all, frame, Deframer};
pub use replay::{replay, replay_events, RateLimiter, ReplayReport};
pub use socket::{TcpEventSink, TcpEventSource};
pub use split::{split, Comparison, SplitPredicate, SplitRule, SplitRuleSet};
