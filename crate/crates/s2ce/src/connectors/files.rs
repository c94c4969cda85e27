use super::codec::{decode_event, encode_event, CodecError};
use crate::model::Event;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum FileSourceError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {source}")]
    Decode {
        line: usize,
        #[source]
        source: CodecError,
    },
}

/// Iterates the events of a newline-delimited record file.
pub struct FileSource {
    reader: BufReader<File>,
    line_no: usize,
}

impl FileSource {
    pub fn open(path: impl AsRef<Path>) -> io::Result<Self> {
        Ok(FileSource {
            reader: BufReader::new(File::open(path)?),
            line_no: 0,
        })
    }
}

impl Iterator for FileSource {
    type Item = Result<Event, FileSourceError>;

    fn next(&mut self) -> Option<Self::Item> {
        let mut line = String::new();
        loop {
            line.clear();
            match self.reader.read_line(&mut line) {
                Ok(0) => return None,
                Ok(_) => {
                    self.line_no += 1;
                    let trimmed = line.trim_end_matches(['\n', '\r']);
                    if trimmed.is_empty() {
                        continue;
                    }
                    return Some(decode_event(trimmed.as_bytes()).map_err(|e| {
                        FileSourceError::Decode {
                            line: self.line_no,
                            source: e,
                        }
                    }));
                }
                Err(e) => return Some(Err(e.into())),
            }
        }
    }
}

/// Reads a whole record file into memory.
pub fn read_events(path: impl AsRef<Path>) -> Result<Vec<Event>, FileSourceError> {
    FileSource::open(path)?.collect()
}

/// Writes events as newline-delimited records.
pub fn write_events<'a>(
    path: impl AsRef<Path>,
    events: impl IntoIterator<Item = &'a Event>,
) -> io::Result<u64> {
    let mut w = BufWriter::new(File::create(path)?);
    let mut n = 0;
    for e in events {
        w.write_all(&encode_event(e))?;
        w.write_all(b"\n")?;
        n += 1;
    }
    w.flush()?;
    Ok(n)
}
