//! Input name streams.

use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    /// One name per line.
    #[default]
    Plain,
    /// `rank,domain` lines as in popularity lists.
    Ranked,
}

impl FromStr for InputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plain" => Ok(InputFormat::Plain),
            "ranked" => Ok(InputFormat::Ranked),
            _ => Err(format!("unknown input format {s:?}")),
        }
    }
}

/// Where names come from. A missing path means standard input.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: InputFormat,
}

impl InputSource {
    pub fn file(path: impl Into<PathBuf>, format: InputFormat) -> Self {
        InputSource {
            path: Some(path.into()),
            format,
        }
    }

    pub fn stdin(format: InputFormat) -> Self {
        InputSource { path: None, format }
    }
}

/// Iterator over names of a line stream. Lines may end in LF, CRLF or a
/// lone CR; blank lines and `#` comments are skipped.
pub struct Names<R> {
    reader: R,
    format: InputFormat,
    pending: std::collections::VecDeque<String>,
    buf: Vec<u8>,
    done: bool,
}

impl<R: BufRead> Names<R> {
    pub fn new(reader: R, format: InputFormat) -> Self {
        Names {
            reader,
            format,
            pending: Default::default(),
            buf: Vec::new(),
            done: false,
        }
    }

    fn extract(&self, line: &str) -> Option<String> {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            return None;
        }
        let name = match self.format {
            InputFormat::Plain => line,
            InputFormat::Ranked => match line.split_once(',') {
                Some((rank, rest)) if rank.trim().bytes().all(|b| b.is_ascii_digit()) => {
                    rest.trim()
                }
                _ => line,
            },
        };
        (!name.is_empty()).then(|| name.to_owned())
    }
}

impl<R: BufRead> Iterator for Names<R> {
    type Item = io::Result<String>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some(name) = self.pending.pop_front() {
                return Some(Ok(name));
            }
            if self.done {
                return None;
            }
            self.buf.clear();
            match self.reader.read_until(b'\n', &mut self.buf) {
                Ok(0) => self.done = true,
                Ok(_) => {
                    let text = String::from_utf8_lossy(&self.buf).into_owned();
                    for piece in text.split(['\n', '\r']) {
                        if let Some(name) = self.extract(piece) {
                            self.pending.push_back(name);
                        }
                    }
                }
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => {
                    self.done = true;
                    return Some(Err(e));
                }
            }
        }
    }
}

/// Opens a name stream.
pub fn ingest(source: &InputSource) -> io::Result<Names<Box<dyn BufRead + Send>>> {
    let reader: Box<dyn BufRead + Send> = match &source.path {
        Some(p) if p.as_os_str() != "-" => Box::new(BufReader::new(File::open(p)?)),
        _ => Box::new(BufReader::new(io::stdin())),
    };
    Ok(Names::new(reader, source.format))
}
