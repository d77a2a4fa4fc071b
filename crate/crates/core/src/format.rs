//! Line-oriented text formats for potentials, traces and residual reports.
//!
//! ```text
//! # wdvv-potential v1
//! multiplet 2,2,3
//! mode standard
//! max-order 3
//! (1,1)^1 (2,1)^1 (3,1)^1 | m=1 | 1
//! ```

use std::fmt::Write as _;

use num_rational::BigRational;

use crate::error::FormatError;
use crate::geometry::{CoordLabel, Geometry, Multiplet};
use crate::reconstruct::{ReconstructionTrace, SeedMode, SeedTarget, TraceEntry};
use crate::series::{Potential, SeriesKey};
use crate::wdvv::ResidualReport;

pub const POTENTIAL_HEADER: &str = "# wdvv-potential v1";
pub const TRACE_HEADER: &str = "# wdvv-trace v1";

pub fn write_potential(p: &Potential) -> String {
    let g = p.geometry();
    let mut out = String::new();
    writeln!(out, "{POTENTIAL_HEADER}").unwrap();
    writeln!(out, "multiplet {}", g.multiplet()).unwrap();
    writeln!(out, "mode {}", p.mode()).unwrap();
    writeln!(out, "max-order {}", p.max_order()).unwrap();
    for (k, v) in p.iter() {
        writeln!(out, "{} | m={} | {}", k.alpha.display(g), k.m, v).unwrap();
    }
    out
}

fn syntax(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Syntax {
        line,
        message: message.into(),
    }
}

fn header_field<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    name: &str,
) -> Result<(usize, &'a str), FormatError> {
    let (n, line) = lines
        .next()
        .ok_or_else(|| syntax(0, format!("missing {name} line")))?;
    let rest = line
        .strip_prefix(name)
        .and_then(|r| r.strip_prefix(' '))
        .ok_or_else(|| syntax(n, format!("expected `{name} ...`")))?;
    Ok((n, rest.trim()))
}

fn parse_exponents(
    g: &Geometry,
    text: &str,
    m: u32,
    line: usize,
) -> Result<SeriesKey, FormatError> {
    let text = text.trim();
    let mut pairs = Vec::new();
    if text != "1" {
        for tok in text.split_whitespace() {
            let (label, exp) = match tok.rsplit_once('^') {
                Some((l, e)) => (
                    l,
                    e.parse::<u16>()
                        .map_err(|_| syntax(line, format!("bad exponent in {tok:?}")))?,
                ),
                None => (tok, 1),
            };
            match label.parse::<CoordLabel>()? {
                CoordLabel::Twisted { sector, index } if g.slot(sector, index).is_some() => {
                    pairs.push(((sector, index), exp))
                }
                _ => return Err(syntax(line, format!("{label} is not a twisted coordinate"))),
            }
        }
    }
    Ok(SeriesKey::from_pairs(g, &pairs, m))
}

/// Parses `"<exponents> m=<m>"`, e.g. `"(1,1)^4 m=0"` or `"1 m=2"`.
pub fn parse_key(g: &Geometry, text: &str) -> Result<SeriesKey, FormatError> {
    let (exps, m) = text
        .trim()
        .rsplit_once("m=")
        .ok_or_else(|| syntax(1, format!("missing `m=` in {text:?}")))?;
    let m = m
        .trim()
        .parse::<u32>()
        .map_err(|_| syntax(1, format!("bad order in {text:?}")))?;
    if exps.trim().is_empty() {
        return Err(syntax(1, format!("missing exponents in {text:?}")));
    }
    parse_exponents(g, exps, m, 1)
}

pub fn parse_potential(text: &str) -> Result<Potential, FormatError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, l)) if l.trim() == POTENTIAL_HEADER => {}
        Some((n, _)) => return Err(syntax(n, format!("expected `{POTENTIAL_HEADER}`"))),
        None => return Err(syntax(0, "empty input")),
    }
    let (_, multiplet) = header_field(&mut lines, "multiplet")?;
    let multiplet: Multiplet = multiplet.parse()?;
    let (n, mode) = header_field(&mut lines, "mode")?;
    let mode: SeedMode = mode.parse().map_err(|e| syntax(n, format!("{e}")))?;
    let (n, max_order) = header_field(&mut lines, "max-order")?;
    let max_order: u32 = max_order.parse().map_err(|_| syntax(n, "bad max-order"))?;
    let g = Geometry::new(multiplet);
    let mut p = Potential::new(g.clone(), mode, max_order);
    for (n, line) in lines {
        let parts: Vec<&str> = line.split('|').map(str::trim).collect();
        let [exps, m, value] = parts[..] else {
            return Err(syntax(n, "expected `<exponents> | m=<m> | <value>`"));
        };
        let m = m
            .strip_prefix("m=")
            .and_then(|x| x.parse::<u32>().ok())
            .ok_or_else(|| syntax(n, format!("bad order {m:?}")))?;
        let value: BigRational = value
            .parse()
            .map_err(|_| syntax(n, format!("bad coefficient {value:?}")))?;
        let key = parse_exponents(&g, exps, m, n)?;
        if p.coefficient_ref(&key).is_some() {
            return Err(syntax(n, "duplicate record"));
        }
        p.insert(key, value)?;
    }
    Ok(p)
}

pub fn write_trace(g: &Geometry, trace: &ReconstructionTrace) -> String {
    let mut out = String::new();
    writeln!(out, "{TRACE_HEADER}").unwrap();
    for s in &trace.seeds {
        match &s.target {
            SeedTarget::Pairing(u, v) => {
                writeln!(out, "seed | eta {u} {v} | {} | {}", s.value, s.provenance).unwrap()
            }
            SeedTarget::Coefficient(k) => writeln!(
                out,
                "seed | {} | {} | {}",
                k.display(g),
                s.value,
                s.provenance
            )
            .unwrap(),
        }
    }
    for e in &trace.entries {
        match e {
            TraceEntry::Solve {
                target,
                candidate,
                slope,
                value,
                fallback,
            } => writeln!(
                out,
                "solve | {} | {} | {} | {} | {} | {}",
                target.display(g),
                candidate.quad,
                candidate.extraction.display(g),
                slope,
                value,
                if *fallback { "fallback" } else { "targeted" }
            )
            .unwrap(),
            TraceEntry::Free { target } => writeln!(out, "free | {}", target.display(g)).unwrap(),
        }
    }
    out
}

pub fn write_residuals(g: &Geometry, report: &ResidualReport) -> String {
    let mut out = String::new();
    for r in &report.residuals {
        writeln!(
            out,
            "residual | {} | {} | {}",
            r.quad,
            r.target.display(g),
            r.value
        )
        .unwrap();
    }
    let per_order: Vec<String> = report
        .checked
        .iter()
        .enumerate()
        .map(|(m, c)| format!("m={m}:{c}"))
        .collect();
    writeln!(
        out,
        "residuals: {} nonzero of {} checked ({})",
        report.residuals.len(),
        report.total_checked(),
        per_order.join(" ")
    )
    .unwrap();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reconstruct::seed;

    #[test]
    fn seed_round_trip() {
        for s in ["2,2,2", "2,3,4", "3,3,4"] {
            let g = Geometry::new(s.parse().unwrap());
            for mode in [SeedMode::Standard, SeedMode::Vanishing] {
                let p = seed(&g, mode);
                let text = write_potential(&p);
                let back = parse_potential(&text).unwrap();
                assert_eq!(back, p);
                assert_eq!(write_potential(&back), text);
            }
        }
    }

    #[test]
    fn record_text() {
        let g = Geometry::new("2,2,3".parse().unwrap());
        let text = write_potential(&seed(&g, SeedMode::Standard));
        assert!(text.contains("\n(1,1)^1 (2,1)^1 (3,1)^1 | m=1 | 1\n"));
        assert!(
            text.starts_with("# wdvv-potential v1\nmultiplet 2,2,3\nmode standard\nmax-order 1\n")
        );
    }

    #[test]
    fn key_queries() {
        let g = Geometry::new("2,2,3".parse().unwrap());
        let k = parse_key(&g, "(1,1)^4 m=0").unwrap();
        assert_eq!(k, SeriesKey::from_pairs(&g, &[((1, 1), 4)], 0));
        assert!(parse_key(&g, "1 m=2").unwrap().alpha.is_zero());
        assert!(parse_key(&g, "(1,1)^4").is_err());
        assert!(parse_key(&g, "(1,2)^1 m=0").is_err());
        assert!(parse_key(&g, "(x)^1 m=0").is_err());
    }

    #[test]
    fn rejects_bad_records() {
        let head = "# wdvv-potential v1\nmultiplet 2,2,2\nmode standard\nmax-order 1\n";
        assert!(parse_potential(&format!("{head}(1,1)^5 | m=0 | 1\n")).is_err());
        assert!(parse_potential(&format!("{head}(1,1)^4 | m=0\n")).is_err());
        assert!(parse_potential(&format!("{head}(1,1)^4 | m=0 | x\n")).is_err());
        assert!(parse_potential("multiplet 2,2,2\n").is_err());
        assert!(parse_potential(&format!("{head}(1,1)^4 | m=0 | -1/96\n")).is_ok());
    }
}
