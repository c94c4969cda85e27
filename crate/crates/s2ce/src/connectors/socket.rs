use super::codec::{decode_event, encode_event, CodecError};
use super::framing::{frame, Deframer};
use crate::model::Event;
use std::io::{self, Read, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};

#[derive(Debug, thiserror::Error)]
pub enum SocketError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// Writes framed records to a TCP peer.
pub struct TcpEventSink {
    stream: TcpStream,
}

impl TcpEventSink {
    pub fn connect(addr: impl ToSocketAddrs) -> io::Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(TcpEventSink { stream })
    }

    pub fn send(&mut self, e: &Event) -> Result<(), SocketError> {
        let framed = frame(&encode_event(e))?;
        self.stream.write_all(&framed)?;
        Ok(())
    }

    pub fn shutdown(self) -> io::Result<()> {
        self.stream.shutdown(std::net::Shutdown::Write)
    }
}

/// Accepts one TCP connection and iterates the events it carries, frame by
/// frame, until the peer closes the stream.
pub struct TcpEventSource {
    stream: TcpStream,
    deframer: Deframer,
    eof: bool,
}

impl TcpEventSource {
    /// Binds `addr` and blocks for a single inbound connection.
    pub fn accept_one(addr: impl ToSocketAddrs) -> io::Result<(Self, std::net::SocketAddr)> {
        let listener = TcpListener::bind(addr)?;
        let local = listener.local_addr()?;
        let (stream, _) = listener.accept()?;
        Ok((
            TcpEventSource {
                stream,
                deframer: Deframer::new(),
                eof: false,
            },
            local,
        ))
    }

    pub fn from_stream(stream: TcpStream) -> Self {
        TcpEventSource {
            stream,
            deframer: Deframer::new(),
            eof: false,
        }
    }
}

impl Iterator for TcpEventSource {
    type Item = Result<Event, SocketError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            match self.deframer.next_frame() {
                Ok(Some(payload)) => {
                    return Some(decode_event(&payload).map_err(SocketError::from))
                }
                Ok(None) => {
                    if self.eof {
                        if self.deframer.pending() > 0 {
                            self.eof = false; // report once
                            return Some(Err(CodecError::MalformedRecord(
                                "connection closed mid-frame".into(),
                            )
                            .into()));
                        }
                        return None;
                    }
                    let mut buf = [0u8; 8192];
                    match self.stream.read(&mut buf) {
                        Ok(0) => self.eof = true,
                        Ok(n) => self.deframer.feed(&buf[..n]),
                        Err(e) => return Some(Err(e.into())),
                    }
                }
                Err(e) => return Some(Err(e.into())),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::net::TcpListener;

    #[test]
    fn events_cross_a_tcp_socket_intact() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();

        let events: Vec<Event> = (0..200)
            .map(|i| {
                Event::new(i, format!("k{i}"))
                    .with("x", i as f64 * 0.5)
                    .with_source("sock")
            })
            .collect();
        let to_send = events.clone();

        let sender = std::thread::spawn(move || {
            let mut sink = TcpEventSink::connect(addr).unwrap();
            for e in &to_send {
                sink.send(e).unwrap();
            }
            sink.shutdown().unwrap();
        });

        let (stream, _) = listener.accept().unwrap();
        let source = TcpEventSource::from_stream(stream);
        let received: Vec<Event> = source.map(|r| r.unwrap()).collect();
        sender.join().unwrap();
        assert_eq!(received, events);
    }
}
