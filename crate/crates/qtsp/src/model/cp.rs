//! Constraint-model text format.
//!
//! The model states the problem over position variables: `x{p}` is the
//! node visited in position `p`, all positions take distinct nodes, the
//! depot is fixed first, and the objective sums a ternary cost table
//! over cyclically consecutive position triples.
//!
//! Grammar of the emitted text (one production per line, `\n` endings):
//!
//! ```text
//! model     = header vars alldiff root objective table rows
//! header    = "cpmodel 1"
//! vars      = "var x0..x" last " in 0.." last
//! alldiff   = "alldifferent(x0..x" last ")"
//! root      = "x0 = 0"
//! objective = "minimize sum_element(cost3d, cyclic)"
//! table     = "table cost3d " count
//! rows      = { i " " j " " k " " cost }
//! last      = n-1 ; count = n*(n-1)*(n-2)
//! cost      = decimal with exactly 12 fractional digits
//! ```
//!
//! Rows cover every ordered triple of distinct nodes exactly once, in
//! ascending `(i, j, k)` order.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::instance::{distinct_triples, Instance};
use crate::scalar::{format_dec12, parse_scalar, Scalar};

use super::ModelText;

/// Renders the constraint model for `inst`.
pub fn export_cp<S: Scalar>(inst: &Instance<S>) -> ModelText {
    let n = inst.n();
    let costs = inst.costs();
    let last = n - 1;
    let mut model = String::new();
    let _ = writeln!(model, "cpmodel 1");
    let _ = writeln!(model, "var x0..x{last} in 0..{last}");
    let _ = writeln!(model, "alldifferent(x0..x{last})");
    let _ = writeln!(model, "x0 = 0");
    let _ = writeln!(model, "minimize sum_element(cost3d, cyclic)");
    let _ = writeln!(model, "table cost3d {}", n * (n - 1) * (n - 2));
    for (i, j, k) in distinct_triples(n) {
        let _ = writeln!(model, "{i} {j} {k} {}", format_dec12(costs.get(i, j, k)));
    }
    let mut manifest = String::from("name\tkind\tindices\n");
    for p in 0..n {
        let _ = writeln!(manifest, "x{p}\tinteger\t{p}");
    }
    ModelText { model, manifest }
}

/// Parsed constraint model: the node count and the cost table rows in
/// file order.
#[derive(Clone, Debug, PartialEq)]
pub struct CpModel {
    pub n: usize,
    pub entries: Vec<(usize, usize, usize, f64)>,
}

fn expect_line<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    want: &str,
) -> Result<()> {
    match lines.next() {
        Some((_, line)) if line == want => Ok(()),
        Some((no, line)) => Err(Error::parse(
            no,
            format!("expected {want:?}, found {line:?}"),
        )),
        None => Err(Error::parse(0, format!("missing line {want:?}"))),
    }
}

/// Parses text produced by [`export_cp`], validating the grammar, the
/// twelve-digit cost syntax, and full single coverage of the triples.
pub fn parse_cp_model(text: &str) -> Result<CpModel> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(idx, line)| (idx + 1, line));
    expect_line(&mut lines, "cpmodel 1")?;

    let (no, vars) = lines
        .next()
        .ok_or_else(|| Error::parse(0, "missing variable declaration"))?;
    let last: usize = vars
        .strip_prefix("var x0..x")
        .and_then(|rest| rest.split_once(" in 0.."))
        .filter(|(head, tail)| head == tail)
        .and_then(|(head, _)| head.parse().ok())
        .ok_or_else(|| Error::parse(no, "malformed variable declaration"))?;
    let n = last + 1;
    if n < 3 {
        return Err(Error::parse(no, format!("model needs at least 3 nodes, has {n}")));
    }

    expect_line(&mut lines, &format!("alldifferent(x0..x{last})"))?;
    expect_line(&mut lines, "x0 = 0")?;
    expect_line(&mut lines, "minimize sum_element(cost3d, cyclic)")?;

    let expected = n * (n - 1) * (n - 2);
    expect_line(&mut lines, &format!("table cost3d {expected}"))?;

    let mut entries = Vec::with_capacity(expected);
    let mut seen = vec![false; n * n * n];
    for _ in 0..expected {
        let (no, row) = lines
            .next()
            .ok_or_else(|| Error::parse(0, format!("table ended early, expected {expected} rows")))?;
        let fields: Vec<&str> = row.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::parse(no, "table row must be: i j k cost"));
        }
        let idx: Vec<usize> = fields[..3]
            .iter()
            .map(|f| f.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(no, "bad node index"))?;
        let (i, j, k) = (idx[0], idx[1], idx[2]);
        if i >= n || j >= n || k >= n || i == j || j == k || i == k {
            return Err(Error::parse(no, "indices must be distinct nodes"));
        }
        let frac = fields[3].split_once('.').map(|(_, f)| f);
        if frac.map_or(true, |f| f.len() != 12 || !f.bytes().all(|b| b.is_ascii_digit())) {
            return Err(Error::parse(
                no,
                "cost must have exactly 12 fractional digits",
            ));
        }
        let cost: f64 = parse_scalar(fields[3])
            .ok_or_else(|| Error::parse(no, "unreadable cost"))?;
        let flat = (i * n + j) * n + k;
        if seen[flat] {
            return Err(Error::parse(no, format!("duplicate triple ({i}, {j}, {k})")));
        }
        seen[flat] = true;
        entries.push((i, j, k, cost));
    }
    if let Some((no, extra)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(Error::parse(no, format!("unexpected trailing content {extra:?}")));
    }
    Ok(CpModel { n, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_instance, CostKind};

    #[test]
    fn export_parses_back_with_full_coverage() {
        let inst = generate_instance(5, 4, CostKind::<f64>::Angle).unwrap();
        let text = export_cp(&inst);
        let model = parse_cp_model(&text.model).unwrap();
        assert_eq!(model.n, 5);
        assert_eq!(model.entries.len(), 60);
        for (i, j, k, c) in model.entries {
            assert_eq!(c, inst.costs().get(i, j, k));
        }
        assert!(text.manifest.lines().count() == 6);
        assert!(text.manifest.contains("x4\tinteger\t4"));
    }

    #[test]
    fn structural_lines_are_pinned() {
        let inst = generate_instance(4, 0, CostKind::<f64>::Angle).unwrap();
        let text = export_cp(&inst).model;
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "cpmodel 1");
        assert_eq!(lines[1], "var x0..x3 in 0..3");
        assert_eq!(lines[2], "alldifferent(x0..x3)");
        assert_eq!(lines[3], "x0 = 0");
        assert_eq!(lines[4], "minimize sum_element(cost3d, cyclic)");
        assert_eq!(lines[5], "table cost3d 24");
        assert_eq!(lines.len(), 6 + 24);
    }

    #[test]
    fn parser_rejects_malformed_tables() {
        let inst = generate_instance(4, 0, CostKind::<f64>::Angle).unwrap();
        let good = export_cp(&inst).model;

        let short = good.lines().take(10).collect::<Vec<_>>().join("\n");
        assert!(parse_cp_model(&short).is_err());

        let truncated_digits = good
            .lines()
            .map(|l| {
                if l.starts_with("0 1 2 ") {
                    "0 1 2 1.5".to_string()
                } else {
                    l.to_string()
                }
            })
            .collect::<Vec<_>>()
            .join("\n");
        match parse_cp_model(&truncated_digits) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 7),
            other => panic!("expected a parse error, got {other:?}"),
        }

        let dup = good
            .lines()
            .enumerate()
            .map(|(idx, l)| if idx == 7 { good.lines().nth(6).unwrap() } else { l })
            .collect::<Vec<_>>()
            .join("\n");
        assert!(parse_cp_model(&dup).is_err());

        let reflexive = good
            .lines()
            .map(|l| {
                if l.starts_with("0 1 2 ") {
                    l.replace("0 1 2 ", "0 1 1 ")
                } else {
                    l.to_string()
                }
            })
            .collect::<Vec<_>>()
            .join("\n");
        assert!(parse_cp_model(&reflexive).is_err());
    }
}
