//! Plain-text files for algebras and matrices.
//!
//! An algebra file has a header and one line per nonzero structure constant
//! `e_i e_j = Σ_k m_ijk e_k`, with 1-based indices and `i ≤ j`:
//!
//! ```text
//! # the algebra e1² = e1 + e2 ... etc.
//! field: real
//! dim: 2
//! m 1 1 1 1
//! m 1 2 2 1
//! m 2 2 1 1
//! ```
//!
//! `labels:` may follow `dim:` with one whitespace-free token per basis
//! vector. Values are decimals or `a+bi` / `a-bi`. Unlisted entries are zero.
//!
//! A matrix file holds one row per line, entries separated by whitespace.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use evolalg::algebra::validate;
use evolalg::{Algebra, Complex, Field, Matrix, UncheckedSpec};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("line {line}, column {col}: {reason}")]
    Parse {
        line: usize,
        col: usize,
        reason: String,
    },
    #[error("line {line}: entry m {i} {j} {k} already given on line {first}")]
    DuplicateEntry {
        line: usize,
        first: usize,
        i: usize,
        j: usize,
        k: usize,
    },
    #[error("line {line}, column {col}: complex value under `field: real`")]
    FieldMismatch { line: usize, col: usize },
    #[error(
        "label `{0}` cannot be written: labels must be nonempty and free of whitespace and `#`"
    )]
    UnrepresentableLabel(String),
}

fn perr(line: usize, col: usize, reason: impl Into<String>) -> FormatError {
    FormatError::Parse {
        line,
        col,
        reason: reason.into(),
    }
}

/// Whitespace-separated tokens of `line` with their 1-based columns,
/// ignoring anything after `#`.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let body = line.split('#').next().unwrap_or("");
    let mut out = Vec::new();
    let mut start = None;
    for (col, (pos, ch)) in body.char_indices().enumerate() {
        match (ch.is_whitespace(), start) {
            (false, None) => start = Some((col + 1, pos)),
            (true, Some((c, s))) => {
                out.push((c, &body[s..pos]));
                start = None;
            }
            _ => {}
        }
    }
    if let Some((c, s)) = start {
        out.push((c, &body[s..]));
    }
    out
}

/// A real decimal or `a+bi`, `a-bi`, `bi`. Infinities and NaN are rejected.
pub fn parse_scalar(s: &str) -> Result<Complex, String> {
    let number = |t: &str| -> Result<f64, String> {
        let x: f64 = t.parse().map_err(|_| format!("`{s}` is not a number"))?;
        if x.is_finite() {
            Ok(x)
        } else {
            Err(format!("`{s}` is not finite"))
        }
    };
    let Some(body) = s.strip_suffix('i') else {
        return Ok(Complex::new(number(s)?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&p| matches!(bytes[p], b'+' | b'-') && !matches!(bytes[p - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(p) => (number(&body[..p])?, &body[p..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        t => number(t)?,
    };
    Ok(Complex::new(re, im))
}

/// Shortest decimal that parses back to `x`; exponent form outside
/// `[1e-5, 1e16)`.
pub fn format_real(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 {
        "0".into()
    } else if (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn format_scalar(z: Complex) -> String {
    if z.im == 0.0 {
        format_real(z.re)
    } else {
        let sign = if z.im < 0.0 { '-' } else { '+' };
        format!("{}{}{}i", format_real(z.re), sign, format_real(z.im.abs()))
    }
}

fn parse_index(line: usize, col: usize, tok: &str, dim: usize) -> Result<usize, FormatError> {
    let i: usize = tok.parse().map_err(|_| {
        perr(
            line,
            col,
            format!("index `{tok}` is not a positive integer"),
        )
    })?;
    if i == 0 || i > dim {
        return Err(perr(line, col, format!("index {i} outside 1..={dim}")));
    }
    Ok(i)
}

pub fn parse_algebra(text: &str) -> Result<Algebra, FormatError> {
    let mut field: Option<Field> = None;
    let mut dim: Option<usize> = None;
    let mut labels: Option<(usize, Vec<String>)> = None;
    let mut seen: BTreeMap<(usize, usize, usize), usize> = BTreeMap::new();
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let toks = tokens(raw);
        let Some(&(col, head)) = toks.first() else {
            continue;
        };
        if head == "m" {
            let (Some(f), Some(n)) = (field, dim) else {
                return Err(perr(
                    line,
                    col,
                    "headers `field:` and `dim:` must precede entries",
                ));
            };
            if toks.len() != 5 {
                return Err(perr(line, col, "expected `m i j k value`"));
            }
            let i = parse_index(line, toks[1].0, toks[1].1, n)?;
            let j = parse_index(line, toks[2].0, toks[2].1, n)?;
            let k = parse_index(line, toks[3].0, toks[3].1, n)?;
            if i > j {
                return Err(perr(
                    line,
                    toks[1].0,
                    format!("i = {i} > j = {j}; store i ≤ j"),
                ));
            }
            let (vcol, vtok) = toks[4];
            let v = parse_scalar(vtok).map_err(|r| perr(line, vcol, r))?;
            if f == Field::Real && v.im != 0.0 {
                return Err(FormatError::FieldMismatch { line, col: vcol });
            }
            if let Some(&first) = seen.get(&(i, j, k)) {
                return Err(FormatError::DuplicateEntry {
                    line,
                    first,
                    i,
                    j,
                    k,
                });
            }
            seen.insert((i, j, k), line);
            entries.push(((i - 1, j - 1, k - 1), v));
            continue;
        }
        let Some((key, _)) = raw.split_once(':') else {
            return Err(perr(
                line,
                col,
                format!("unexpected `{head}`; expected a header or an `m` line"),
            ));
        };
        let key = key.trim();
        let values: Vec<(usize, &str)> = toks
            .iter()
            .skip_while(|(_, t)| !t.contains(':'))
            .flat_map(|&(c, t)| match t.split_once(':') {
                Some((_, rest)) if !rest.is_empty() => Some((c + t.len() - rest.len(), rest)),
                Some(_) => None,
                None => Some((c, t)),
            })
            .collect();
        if !entries.is_empty() {
            return Err(perr(
                line,
                col,
                format!("header `{key}` after the first entry"),
            ));
        }
        match key {
            "field" => {
                if field.is_some() {
                    return Err(perr(line, col, "`field` given twice"));
                }
                field = Some(match values.as_slice() {
                    [(_, "real")] => Field::Real,
                    [(_, "complex")] => Field::Complex,
                    _ => {
                        return Err(perr(
                            line,
                            col,
                            "expected `field: real` or `field: complex`",
                        ))
                    }
                });
            }
            "dim" => {
                if dim.is_some() {
                    return Err(perr(line, col, "`dim` given twice"));
                }
                let [(vcol, v)] = values.as_slice() else {
                    return Err(perr(line, col, "expected `dim: n`"));
                };
                match v.parse::<usize>() {
                    Ok(n) if n > 0 => dim = Some(n),
                    _ => {
                        return Err(perr(
                            line,
                            *vcol,
                            format!("dimension `{v}` is not a positive integer"),
                        ))
                    }
                }
            }
            "labels" => {
                if labels.is_some() {
                    return Err(perr(line, col, "`labels` given twice"));
                }
                labels = Some((line, values.iter().map(|(_, t)| t.to_string()).collect()));
            }
            other => return Err(perr(line, col, format!("unknown header `{other}`"))),
        }
    }
    let field = field.ok_or_else(|| perr(1, 1, "missing header `field:`"))?;
    let dim = dim.ok_or_else(|| perr(1, 1, "missing header `dim:`"))?;
    if let Some((line, l)) = &labels {
        if l.len() != dim {
            return Err(perr(
                *line,
                1,
                format!("{} labels for dimension {dim}", l.len()),
            ));
        }
    }
    validate(UncheckedSpec {
        dim,
        field,
        entries,
        labels: labels.map(|(_, l)| l),
    })
    .map_err(|e| perr(1, 1, e.to_string()))
}

/// Canonical text: headers, then entries in lexicographic `(i, j, k)` order.
pub fn serialise_algebra(spec: &Algebra) -> Result<String, FormatError> {
    let mut out = String::new();
    let _ = writeln!(out, "field: {}", spec.field());
    let _ = writeln!(out, "dim: {}", spec.dim());
    if let Some(labels) = spec.labels() {
        if let Some(bad) = labels
            .iter()
            .find(|l| l.is_empty() || l.contains('#') || l.contains(char::is_whitespace))
        {
            return Err(FormatError::UnrepresentableLabel(bad.clone()));
        }
        let _ = writeln!(out, "labels: {}", labels.join(" "));
    }
    for ((i, j, k), v) in spec.constants() {
        let _ = writeln!(out, "m {} {} {} {}", i + 1, j + 1, k + 1, format_scalar(v));
    }
    Ok(out)
}

pub fn parse_matrix(text: &str) -> Result<Matrix, FormatError> {
    let mut rows: Vec<Vec<Complex>> = Vec::new();
    let mut width = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let toks = tokens(raw);
        if toks.is_empty() {
            continue;
        }
        let row = toks
            .iter()
            .map(|&(col, t)| parse_scalar(t).map_err(|r| perr(line, col, r)))
            .collect::<Result<Vec<_>, _>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(perr(
                    line,
                    1,
                    format!("row has {} entries, expected {w}", row.len()),
                ));
            }
            _ => {}
        }
        rows.push(row);
    }
    let Some(cols) = width else {
        return Err(perr(1, 1, "empty matrix"));
    };
    let n = rows.len();
    Ok(Matrix::from_fn(n, cols, |i, j| rows[i][j]))
}

pub fn format_matrix(m: &Matrix) -> String {
    let mut out = String::new();
    for i in 0..m.n_rows() {
        let row: Vec<String> = m.row(i).iter().map(|&z| format_scalar(z)).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use evolalg::{paper_example, ExampleId};

    const SIMPLE: &str = "field: real\ndim: 2\nm 1 1 1 1\nm 1 2 2 1\nm 2 2 1 1\n";

    #[test]
    fn simple_file_is_the_first_fixture() {
        let spec = parse_algebra(SIMPLE).unwrap();
        assert_eq!(spec, paper_example(ExampleId::Simple2d).unwrap());
        assert_eq!(serialise_algebra(&spec).unwrap(), SIMPLE);
    }

    #[test]
    fn lower_triangle_entry_gets_a_hint() {
        let err = parse_algebra("field: real\ndim: 2\nm 2 1 1 0.5\n").unwrap_err();
        match err {
            FormatError::Parse { line, col, reason } => {
                assert_eq!((line, col), (3, 3));
                assert!(reason.contains("store i ≤ j"), "{reason}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn complex_values() {
        let spec = parse_algebra("field: complex\ndim: 1\nm 1 1 1 0.5+0.5i\n").unwrap();
        assert_eq!(spec.constant(0, 0, 0), Complex::new(0.5, 0.5));
        assert_eq!(
            parse_algebra("field: real\ndim: 1\nm 1 1 1 0.5+0.5i\n").unwrap_err(),
            FormatError::FieldMismatch { line: 3, col: 9 }
        );
        for (s, z) in [
            ("2i", Complex::new(0.0, 2.0)),
            ("-i", Complex::new(0.0, -1.0)),
            ("1-i", Complex::new(1.0, -1.0)),
            ("1e-3+2.5e+2i", Complex::new(1e-3, 250.0)),
            ("-1.5E-2-3i", Complex::new(-0.015, -3.0)),
        ] {
            assert_eq!(parse_scalar(s).unwrap(), z, "{s}");
        }
        for bad in ["", "i1", "1+", "inf", "NaN", "1+2j", "1++2i"] {
            assert!(parse_scalar(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn duplicates_and_headers() {
        let dup = "field: real\ndim: 2\nm 1 1 1 1\n# again\nm 1 1 1 2\n";
        assert_eq!(
            parse_algebra(dup).unwrap_err(),
            FormatError::DuplicateEntry {
                line: 5,
                first: 3,
                i: 1,
                j: 1,
                k: 1
            }
        );
        for bad in [
            "dim: 2\nm 1 1 1 1\n",
            "field: real\nm 1 1 1 1\n",
            "field: real\ndim: 0\n",
            "field: real\ndim: 2\ndim: 2\n",
            "field: quaternion\ndim: 2\n",
            "field: real\ndim: 2\nm 1 1 3 1\n",
            "field: real\ndim: 2\nm 1 1 1\n",
            "field: real\ndim: 2\nsize: 3\n",
            "field: real\ndim: 2\nlabels: a\n",
            "field: real\ndim: 2\nm 1 1 1 1\nlabels: a b\n",
            "field: real\ndim: 2\nhello\n",
        ] {
            assert!(
                matches!(parse_algebra(bad), Err(FormatError::Parse { .. })),
                "{bad:?}"
            );
        }
    }

    #[test]
    fn labels_comments_and_spacing() {
        let text =
            "# a comment\n  field:real \n dim:   2 # trailing\nlabels: x y\n\nm 1 2 1   -0.25\n";
        let spec = parse_algebra(text).unwrap();
        assert_eq!(spec.labels().unwrap(), ["x", "y"]);
        assert_eq!(
            serialise_algebra(&spec).unwrap(),
            "field: real\ndim: 2\nlabels: x y\nm 1 2 1 -0.25\n"
        );
    }

    #[test]
    fn zero_and_negative_zero_entries_vanish() {
        let spec = parse_algebra("field: real\ndim: 1\nm 1 1 1 -0\n").unwrap();
        assert_eq!(spec.n_constants(), 0);
    }

    #[test]
    fn real_formatting_round_trips() {
        for x in [
            0.1,
            1.0 / 3.0,
            -2.5e-7,
            1e16,
            6.02e23,
            f64::MIN_POSITIVE,
            f64::MAX,
            1e-5,
            -12345.678,
        ] {
            let s = format_real(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(format_real(1e-20), "1e-20");
        assert_eq!(format_real(0.5), "0.5");
        assert_eq!(format_scalar(Complex::new(1.0, -0.5)), "1-0.5i");
    }

    #[test]
    fn matrices() {
        let m = parse_matrix("1 1\n# c\n1 -1\n").unwrap();
        assert_eq!(m.shape(), (2, 2));
        assert_eq!(format_matrix(&m), "1 1\n1 -1\n");
        assert!(parse_matrix("1 2\n3\n").is_err());
        assert!(parse_matrix("# nothing\n").is_err());
    }
}
