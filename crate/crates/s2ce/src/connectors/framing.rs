use super::codec::{CodecError, MAX_RECORD_BYTES};

/// Wraps a payload in the binary wire format: 4-byte big-endian unsigned
/// length, then the payload.
pub fn frame(payload: &[u8]) -> Result<Vec<u8>, CodecError> {
    if payload.len() > MAX_RECORD_BYTES {
        return Err(CodecError::OversizeRecord(payload.len()));
    }
    let mut out = Vec::with_capacity(4 + payload.len());
    out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
    out.extend_from_slice(payload);
    Ok(out)
}

/// Incremental deframer for a TCP byte stream: feed arbitrary chunks, pop
/// complete payloads.
#[derive(Debug, Default)]
pub struct Deframer {
    buf: Vec<u8>,
}

impl Deframer {
    pub fn new() -> Self {
        Deframer::default()
    }

    pub fn feed(&mut self, bytes: &[u8]) {
        self.buf.extend_from_slice(bytes);
    }

    /// Next complete payload, `Ok(None)` when more bytes are needed.
    pub fn next_frame(&mut self) -> Result<Option<Vec<u8>>, CodecError> {
        if self.buf.len() < 4 {
            return Ok(None);
        }
        let len = u32::from_be_bytes(self.buf[..4].try_into().unwrap()) as usize;
        if len > MAX_RECORD_BYTES {
            return Err(CodecError::OversizeRecord(len));
        }
        if self.buf.len() < 4 + len {
            return Ok(None);
        }
        let payload = self.buf[4..4 + len].to_vec();
        self.buf.drain(..4 + len);
        Ok(Some(payload))
    }

    /// Bytes buffered but not yet consumed as a frame.
    pub fn pending(&self) -> usize {
        self.buf.len()
    }
}

/// Splits a byte sequence of back-to-back frames into payloads; errors on
/// trailing garbage.
pub fn deframe_all(bytes: &[u8]) -> Result<Vec<Vec<u8>>, CodecError> {
    let mut d = Deframer::new();
    d.feed(bytes);
    let mut out = Vec::new();
    while let Some(p) = d.next_frame()? {
        out.push(p);
    }
    if d.pending() > 0 {
        return Err(CodecError::MalformedRecord(format!(
            "{} trailing bytes after last frame",
            d.pending()
        )));
    }
    Ok(out)
}
