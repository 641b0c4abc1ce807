//! Domain name normalization and registrable-domain extraction.

use std::path::Path;
use std::{fmt, fs, io};

use publicsuffix::{List, Psl};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NameError {
    #[error("invalid domain name {0:?}")]
    InvalidName(String),
    #[error("{0:?} is a public suffix and has no registrable domain")]
    NoRegistrable(String),
}

/// Lowercases ASCII, strips one trailing dot and rejects empty or
/// over-long labels. Non-ASCII input is rejected: internationalized names
/// must arrive in punycode form.
pub fn normalize_domain(name: &str) -> Result<String, NameError> {
    let invalid = || NameError::InvalidName(name.to_owned());
    let trimmed = name.strip_suffix('.').unwrap_or(name);
    if trimmed.is_empty() || trimmed.len() > 253 || !trimmed.is_ascii() {
        return Err(invalid());
    }
    for label in trimmed.split('.') {
        if label.is_empty() || label.len() > 63 {
            return Err(invalid());
        }
        let ok = label == "*"
            || label
                .bytes()
                .all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_');
        if !ok {
            return Err(invalid());
        }
    }
    Ok(trimmed.to_ascii_lowercase())
}

/// True iff the leftmost label is `*`.
pub fn is_wildcard(name: &str) -> bool {
    name.split('.').next() == Some("*")
}

/// A pinned public suffix list snapshot.
pub struct SuffixList {
    list: List,
}

impl SuffixList {
    /// Parses list text. Rules before any section marker are ignored by the
    /// list format, so a file without markers is read as all-ICANN.
    pub fn parse(text: &str) -> Result<Self, io::Error> {
        let sectioned =
            text.contains("BEGIN ICANN DOMAINS") || text.contains("BEGIN PRIVATE DOMAINS");
        let text = if sectioned {
            text.to_owned()
        } else {
            format!("// ===BEGIN ICANN DOMAINS===\n{text}")
        };
        let list: List = text
            .parse()
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("{e:?}")))?;
        Ok(SuffixList { list })
    }

    pub fn from_file(path: &Path) -> io::Result<Self> {
        SuffixList::parse(&fs::read_to_string(path)?)
    }

    /// A list with no rules; only the implicit `*` rule applies, so the
    /// last label of every name is its public suffix.
    pub fn implicit_only() -> Self {
        SuffixList { list: List::new() }
    }
}

impl fmt::Debug for SuffixList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SuffixList").finish_non_exhaustive()
    }
}

/// The public suffix plus the label immediately below it.
pub fn registrable_domain(name: &str, psl: &SuffixList) -> Result<String, NameError> {
    let name = name.strip_suffix('.').unwrap_or(name);
    psl.list
        .domain(name.as_bytes())
        .and_then(|d| std::str::from_utf8(d.as_bytes()).ok())
        .map(str::to_owned)
        .ok_or_else(|| NameError::NoRegistrable(name.to_owned()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const PSL: &str = "// fixture\ntld\nuk\nco.uk\n*.ck\n!www.ck\n";

    #[test]
    fn normalization() {
        assert_eq!(normalize_domain("Example.COM.").unwrap(), "example.com");
        assert!(normalize_domain("a..b.com").is_err());
        assert!(normalize_domain("example.com..").is_err());
        assert!(normalize_domain("").is_err());
        assert!(normalize_domain(".").is_err());
        assert!(normalize_domain("bücher.example").is_err());
        assert!(normalize_domain("a b.example").is_err());
        assert_eq!(
            normalize_domain("xn--bcher-kva.example").unwrap(),
            "xn--bcher-kva.example"
        );
        assert!(normalize_domain(&format!("{}.com", "a".repeat(64))).is_err());
        assert_eq!(normalize_domain("*.Example.com").unwrap(), "*.example.com");
    }

    #[test]
    fn wildcards() {
        assert!(is_wildcard("*.example.com"));
        assert!(!is_wildcard("star.example.com"));
        assert!(!is_wildcard("a.*.example.com"));
    }

    #[test]
    fn registrable() {
        let psl = SuffixList::parse(PSL).unwrap();
        assert_eq!(
            registrable_domain("label2.label1.tld", &psl).unwrap(),
            "label1.tld"
        );
        assert_eq!(
            registrable_domain("a.b.example.co.uk", &psl).unwrap(),
            "example.co.uk"
        );
        assert_eq!(
            registrable_domain("co.uk", &psl),
            Err(NameError::NoRegistrable("co.uk".into()))
        );
        assert!(registrable_domain("tld", &psl).is_err());
        assert_eq!(registrable_domain("a.b.foo.ck", &psl).unwrap(), "b.foo.ck");
        assert_eq!(registrable_domain("www.ck", &psl).unwrap(), "www.ck");
    }

    #[test]
    fn implicit_rule() {
        let psl = SuffixList::implicit_only();
        assert_eq!(
            registrable_domain("a.b.example.net", &psl).unwrap(),
            "example.net"
        );
        assert!(registrable_domain("net", &psl).is_err());
    }
}
