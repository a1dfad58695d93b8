//! JSON-lines operator format.
//!
//! One record per string:
//! `{"sites":[[x1],[x2],...],"letters":["+","-","Z",...],"re":f,"im":f}`
//! in canonical order (support, then pattern). Readers reject non-canonical
//! input: duplicate patterns, unsorted or repeated sites, unknown letters,
//! and mismatched array lengths.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{ExtensiveOperator, LadderString, Letter, Pattern};
use crate::lattice::Site;
use crate::{Error, Result};

#[derive(Serialize, Deserialize)]
struct StringRecord {
    sites: Vec<Vec<i32>>,
    letters: Vec<String>,
    re: f64,
    im: f64,
}

/// Write an operator in canonical JSON-lines form.
pub fn write_operator<W: Write>(op: &ExtensiveOperator, mut w: W) -> Result<()> {
    for s in op.strings() {
        let record = StringRecord {
            sites: s
                .pattern
                .letters()
                .iter()
                .map(|(site, _)| site.coords().to_vec())
                .collect(),
            letters: s
                .pattern
                .letters()
                .iter()
                .map(|(_, l)| l.label().to_string())
                .collect(),
            re: s.coeff.re,
            im: s.coeff.im,
        };
        let line =
            serde_json::to_string(&record).map_err(|e| Error::Format(format!("serialize: {e}")))?;
        w.write_all(line.as_bytes())?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn to_string(op: &ExtensiveOperator) -> Result<String> {
    let mut buf = Vec::new();
    write_operator(op, &mut buf)?;
    Ok(String::from_utf8(buf).expect("json is utf-8"))
}

/// Parse a JSON-lines operator, rejecting non-canonical records.
pub fn read_operator<R: BufRead>(r: R) -> Result<ExtensiveOperator> {
    let mut strings = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: StringRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))?;
        if record.sites.len() != record.letters.len() {
            return Err(Error::Format(format!(
                "line {}: {} sites but {} letters",
                lineno + 1,
                record.sites.len(),
                record.letters.len()
            )));
        }
        let mut letters = Vec::with_capacity(record.sites.len());
        for (coords, label) in record.sites.iter().zip(record.letters.iter()) {
            let mut chars = label.chars();
            let letter = chars
                .next()
                .filter(|_| chars.next().is_none())
                .and_then(Letter::from_label)
                .ok_or_else(|| {
                    Error::Format(format!("line {}: unknown letter {label:?}", lineno + 1))
                })?;
            letters.push((Site::new(coords), letter));
        }
        // canonical: sites strictly sorted in the record
        if letters.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Format(format!(
                "line {}: sites not in strictly increasing canonical order",
                lineno + 1
            )));
        }
        let pattern = Pattern::new(letters)
            .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))?;
        if !seen.insert(pattern.clone()) {
            return Err(Error::Format(format!(
                "line {}: duplicate record for an already-seen letter pattern",
                lineno + 1
            )));
        }
        strings.push(LadderString::new(
            pattern,
            Complex64::new(record.re, record.im),
        ));
    }
    Ok(ExtensiveOperator::from_strings(strings))
}

pub fn from_str(s: &str) -> Result<ExtensiveOperator> {
    read_operator(s.as_bytes())
}
