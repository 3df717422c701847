//! Plain-text dataset serialization.
//!
//! One header line (`<family> <dims> clients=<N> samples_per_client=<n>`),
//! then one line per sample, grouped by client in ascending client order.
//! Floats are written with Rust's shortest round-trip formatting, so
//! export → parse → export reproduces the file byte for byte and the parsed
//! values are bit-identical to the originals.
//!
//! ```text
//! synthetic p=4 clients=2 samples_per_client=3
//! <a_1> … <a_p> <b_1> … <b_p> <c_1> … <c_p>
//! ⋮
//! auc d=20 clients=50 samples_per_client=40
//! <label> <w_1> … <w_d>
//! ⋮
//! ```

use super::{AucSample, ClientDataset, Sample, SyntheticSample};
use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::io::{BufRead, Write};

/// Serialize `clients` into the text format. All clients must hold the same
/// number of samples of one family (which is what the generators produce).
pub fn write_dataset_text(clients: &[ClientDataset], out: &mut dyn Write) -> Result<()> {
    if clients.is_empty() || clients[0].samples.is_empty() {
        return Err(Error::config("cannot serialize an empty dataset"));
    }
    let per_client = clients[0].samples.len();
    for client in clients {
        if client.samples.len() != per_client {
            return Err(Error::config(format!(
                "client {} holds {} samples but client {} holds {}; the text \
                 format requires uniform counts",
                clients[0].client_index,
                per_client,
                client.client_index,
                client.samples.len()
            )));
        }
    }

    let mut line = String::new();
    match &clients[0].samples[0] {
        Sample::Synthetic(first) => {
            writeln!(
                out,
                "synthetic p={} clients={} samples_per_client={}",
                first.a.len(),
                clients.len(),
                per_client
            )?;
            for client in clients {
                for sample in &client.samples {
                    let Sample::Synthetic(s) = sample else {
                        return Err(Error::config("mixed sample families in one dataset"));
                    };
                    line.clear();
                    for v in s.a.iter().chain(&s.b).chain(&s.c) {
                        if !line.is_empty() {
                            line.push(' ');
                        }
                        write!(line, "{v}").expect("writing to String cannot fail");
                    }
                    writeln!(out, "{line}")?;
                }
            }
        }
        Sample::Auc(first) => {
            writeln!(
                out,
                "auc d={} clients={} samples_per_client={}",
                first.w.len(),
                clients.len(),
                per_client
            )?;
            for client in clients {
                for sample in &client.samples {
                    let Sample::Auc(s) = sample else {
                        return Err(Error::config("mixed sample families in one dataset"));
                    };
                    line.clear();
                    write!(line, "{}", s.label).expect("writing to String cannot fail");
                    for v in &s.w {
                        write!(line, " {v}").expect("writing to String cannot fail");
                    }
                    writeln!(out, "{line}")?;
                }
            }
        }
    }
    Ok(())
}

fn header_field(token: Option<&str>, key: &str) -> Result<usize> {
    let token = token.ok_or_else(|| Error::parse(format!("header is missing `{key}=`")))?;
    let value = token
        .strip_prefix(key)
        .and_then(|rest| rest.strip_prefix('='))
        .ok_or_else(|| Error::parse(format!("expected `{key}=<count>`, found `{token}`")))?;
    value
        .parse::<usize>()
        .map_err(|e| Error::parse(format!("bad value for `{key}`: {e}")))
}

fn parse_floats(line: &str, expected: usize, line_no: usize) -> Result<Vec<f64>> {
    let values: Vec<f64> = line
        .split_ascii_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|e| Error::parse(format!("line {line_no}: bad float `{tok}`: {e}")))
        })
        .collect::<Result<_>>()?;
    if values.len() != expected {
        return Err(Error::parse(format!(
            "line {line_no}: expected {expected} fields, found {}",
            values.len()
        )));
    }
    Ok(values)
}

/// Parse a dataset previously written by [`write_dataset_text`].
pub fn parse_dataset_text(input: &mut dyn BufRead) -> Result<Vec<ClientDataset>> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse("empty dataset file"))??;
    let mut tokens = header.split_ascii_whitespace();
    let family = tokens
        .next()
        .ok_or_else(|| Error::parse("blank header line"))?;

    let (dim, clients, per_client) = match family {
        "synthetic" => (
            header_field(tokens.next(), "p")?,
            header_field(tokens.next(), "clients")?,
            header_field(tokens.next(), "samples_per_client")?,
        ),
        "auc" => (
            header_field(tokens.next(), "d")?,
            header_field(tokens.next(), "clients")?,
            header_field(tokens.next(), "samples_per_client")?,
        ),
        other => {
            return Err(Error::parse(format!(
                "unknown dataset family `{other}` (expected `synthetic` or `auc`)"
            )))
        }
    };
    if dim == 0 || clients == 0 || per_client == 0 {
        return Err(Error::parse("header counts must all be positive"));
    }

    let mut result: Vec<ClientDataset> = (0..clients)
        .map(|client_index| ClientDataset {
            client_index,
            samples: Vec::with_capacity(per_client),
        })
        .collect();

    for idx in 0..clients * per_client {
        let line_no = idx + 2;
        let line = lines.next().ok_or_else(|| {
            Error::parse(format!(
                "file ends after {idx} samples; header promised {}",
                clients * per_client
            ))
        })??;
        let sample = if family == "synthetic" {
            let values = parse_floats(&line, 3 * dim, line_no)?;
            Sample::Synthetic(SyntheticSample {
                a: values[0..dim].to_vec(),
                b: values[dim..2 * dim].to_vec(),
                c: values[2 * dim..3 * dim].to_vec(),
            })
        } else {
            let mut fields = line.splitn(2, ' ');
            let label_tok = fields
                .next()
                .filter(|t| !t.is_empty())
                .ok_or_else(|| Error::parse(format!("line {line_no}: missing label")))?;
            let label: i8 = label_tok
                .parse()
                .map_err(|e| Error::parse(format!("line {line_no}: bad label `{label_tok}`: {e}")))?;
            if label != 1 && label != -1 {
                return Err(Error::parse(format!(
                    "line {line_no}: label must be ±1, found {label}"
                )));
            }
            let rest = fields.next().unwrap_or("");
            let w = parse_floats(rest, dim, line_no)?;
            Sample::Auc(AucSample { w, label })
        };
        result[idx / per_client].samples.push(sample);
    }

    if let Some(extra) = lines.next() {
        let extra = extra?;
        if !extra.trim().is_empty() {
            return Err(Error::parse(format!(
                "trailing content after the promised {} samples: `{extra}`",
                clients * per_client
            )));
        }
    }
    Ok(result)
}
