//! Where an algebra comes from: a file, stdin or an `example://` URI.

use std::fs;
use std::io::Read as _;

use evolalg::corpus::EXAMPLE_NAMES;
use evolalg::{example_fixture, Algebra, CorpusError, ExampleId, Fixture};
use thiserror::Error;

use crate::format::{parse_algebra, FormatError};

pub const EXAMPLE_SCHEME: &str = "example://";

#[derive(Debug, Error)]
pub enum SourceError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Format { path: String, source: FormatError },
    #[error("{uri}: {reason}")]
    BadUri { uri: String, reason: String },
    #[error("{uri}: {source}")]
    Corpus { uri: String, source: CorpusError },
}

/// `example://name` or `example://name?epsilon=x`; `epsilon` overrides the
/// query value.
pub fn parse_example_uri(uri: &str, epsilon: Option<f64>) -> Result<ExampleId, SourceError> {
    let bad = |reason: String| SourceError::BadUri {
        uri: uri.into(),
        reason,
    };
    let rest = uri
        .strip_prefix(EXAMPLE_SCHEME)
        .ok_or_else(|| bad(format!("expected `{EXAMPLE_SCHEME}<name>`")))?;
    let (name, query) = match rest.split_once('?') {
        Some((n, q)) => (n, Some(q)),
        None => (rest, None),
    };
    let from_query = match query {
        None => None,
        Some(q) => {
            let value = q
                .strip_prefix("epsilon=")
                .ok_or_else(|| bad(format!("unknown query `{q}`; only `epsilon=` is accepted")))?;
            Some(
                value
                    .parse::<f64>()
                    .map_err(|_| bad(format!("epsilon `{value}` is not a number")))?,
            )
        }
    };
    ExampleId::parse(name, epsilon.or(from_query)).map_err(|_| {
        bad(format!(
            "unknown example `{name}`; known: {}",
            EXAMPLE_NAMES.join(", ")
        ))
    })
}

pub fn load_example(
    uri: &str,
    epsilon: Option<f64>,
    allow_non_genetic: bool,
) -> Result<(ExampleId, Fixture<f64>), SourceError> {
    let id = parse_example_uri(uri, epsilon)?;
    let fixture = example_fixture(id, allow_non_genetic).map_err(|source| SourceError::Corpus {
        uri: uri.into(),
        source,
    })?;
    Ok((id, fixture))
}

pub fn read_text(path: &str) -> Result<String, SourceError> {
    let io = |source| SourceError::Io {
        path: path.into(),
        source,
    };
    if path == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(io)?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(io)
    }
}

/// An algebra from a path, `-` for stdin, or an example URI.
pub fn load(
    input: &str,
    epsilon: Option<f64>,
    allow_non_genetic: bool,
) -> Result<Algebra, SourceError> {
    if input.starts_with(EXAMPLE_SCHEME) {
        return Ok(load_example(input, epsilon, allow_non_genetic)?.1.spec);
    }
    let text = read_text(input)?;
    parse_algebra(&text).map_err(|source| SourceError::Format {
        path: input.into(),
        source,
    })
}
