//! Plain-text file formats: instances, solutions, and variable
//! assignments, plus atomic file writing.
//!
//! Instance files:
//!
//! ```text
//! qtsp 1
//! kind angle | kind angledistance rho=<decimal> | kind explicit
//! n <nodes>
//! seed <u64>            (optional)
//! points                (geometric kinds)
//! <x> <y>               n lines
//! ```
//!
//! or, for `kind explicit`, a `costs` section of `n*(n-1)*(n-2)` lines
//! `<i> <j> <k> <cost>` covering every ordered distinct triple exactly
//! once, with costs carrying exactly 12 fractional digits. Geometric
//! instances rebuild their tensor on read, and because canonical costs
//! are fixed points of the 12-digit decimal round trip, write-then-read
//! reproduces an instance exactly. Coordinates outside the generator's
//! grid are accepted (flagged via [`Instance::exceeds_grid`]), so
//! externally produced point sets remain readable.
//!
//! Solution files:
//!
//! ```text
//! tour <nodes>
//! <order, space-separated, starting at 0>
//! cost <decimal>
//! ```
//!
//! Assignment files (for checking arbitrary, possibly infeasible,
//! variable values against the linearized model):
//!
//! ```text
//! assignment <nodes>
//! x <i> <j> <0|1>       any number of lines
//! u <i> <position>      any number of lines
//! y <i> <j> <k> <0|1>   optional; derived as x_ij && x_jk when absent
//! ```
//!
//! Unlisted variables are zero. All parse errors carry 1-based line
//! numbers.

use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::instance::{distinct_triples, CostKind, CostTensor, Instance, Point};
use crate::model::MilpAssignment;
use crate::scalar::{format_dec12, parse_scalar, Scalar};
use crate::tour::Tour;

/// Renders an instance file; see the module docs for the format.
pub fn write_instance<S: Scalar>(inst: &Instance<S>) -> String {
    let mut out = String::from("qtsp 1\n");
    match inst.kind() {
        CostKind::Angle => out.push_str("kind angle\n"),
        CostKind::AngleDistance { rho } => {
            out.push_str(&format!("kind angledistance rho={rho}\n"));
        }
        CostKind::Explicit => out.push_str("kind explicit\n"),
    }
    out.push_str(&format!("n {}\n", inst.n()));
    if let Some(seed) = inst.seed() {
        out.push_str(&format!("seed {seed}\n"));
    }
    match inst.points() {
        Some(points) => {
            out.push_str("points\n");
            for p in points {
                out.push_str(&format!("{} {}\n", p.x, p.y));
            }
        }
        None => {
            out.push_str("costs\n");
            let costs = inst.costs();
            for (i, j, k) in distinct_triples(inst.n()) {
                out.push_str(&format!(
                    "{i} {j} {k} {}\n",
                    format_dec12(costs.get(i, j, k))
                ));
            }
        }
    }
    out
}

/// Splits `line` as `<keyword> <rest>` and verifies the keyword.
fn keyword_line<'a>(line: &'a str, keyword: &str, line_no: usize) -> Result<&'a str> {
    match line.split_once(char::is_whitespace) {
        Some((head, rest)) if head == keyword => Ok(rest.trim()),
        _ => Err(Error::parse(
            line_no,
            format!("expected a {keyword:?} line, found {line:?}"),
        )),
    }
}

/// Checks the fixed-width cost syntax: exactly 12 fractional digits.
fn parse_cost12<S: Scalar>(text: &str, line_no: usize) -> Result<S> {
    let ok = match text.split_once('.') {
        Some((_, frac)) => frac.len() == 12 && frac.bytes().all(|b| b.is_ascii_digit()),
        None => false,
    };
    if !ok {
        return Err(Error::parse(
            line_no,
            format!("cost {text:?} must have exactly 12 fractional digits"),
        ));
    }
    parse_scalar(text).ok_or_else(|| Error::parse(line_no, format!("unreadable cost {text:?}")))
}

/// Parses an instance file.
pub fn read_instance<S: Scalar>(text: &str) -> Result<Instance<S>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(idx, line)| (idx + 1, line.trim_end()));

    let (no, header) = lines.next().ok_or_else(|| Error::parse(1, "empty file"))?;
    if header != "qtsp 1" {
        return Err(Error::parse(no, format!("expected \"qtsp 1\", found {header:?}")));
    }

    let (no, kind_line) = lines
        .next()
        .ok_or_else(|| Error::parse(2, "missing kind line"))?;
    let kind_rest = keyword_line(kind_line, "kind", no)?;
    let kind: CostKind<S> = match kind_rest {
        "angle" => CostKind::Angle,
        "explicit" => CostKind::Explicit,
        other => match other.strip_prefix("angledistance rho=") {
            Some(rho_text) => {
                let rho = parse_scalar(rho_text).filter(|r: &S| r.is_finite()).ok_or_else(
                    || Error::parse(no, format!("unreadable rho value {rho_text:?}")),
                )?;
                CostKind::AngleDistance { rho }
            }
            None if other == "angledistance" => {
                return Err(Error::parse(no, "angledistance kind requires rho=<value>"))
            }
            None => {
                return Err(Error::parse(no, format!("unknown instance kind {other:?}")))
            }
        },
    };

    let (no, n_line) = lines.next().ok_or_else(|| Error::parse(3, "missing n line"))?;
    let n: usize = keyword_line(n_line, "n", no)?
        .parse()
        .map_err(|_| Error::parse(no, "unreadable node count"))?;
    if n < 3 || n > crate::instance::MAX_CUSTOMERS {
        return Err(Error::parse(
            no,
            format!(
                "node count {n} outside the supported range 3..={}",
                crate::instance::MAX_CUSTOMERS
            ),
        ));
    }

    let (mut no, mut section) = lines
        .next()
        .ok_or_else(|| Error::parse(4, "missing data section"))?;
    let mut seed = None;
    if let Ok(seed_text) = keyword_line(section, "seed", no) {
        seed = Some(
            seed_text
                .parse::<u64>()
                .map_err(|_| Error::parse(no, "unreadable seed"))?,
        );
        let (next_no, next) = lines
            .next()
            .ok_or_else(|| Error::parse(no + 1, "missing data section"))?;
        no = next_no;
        section = next;
    }

    let inst = match (section, &kind) {
        ("points", CostKind::Explicit) | ("costs", CostKind::Angle)
        | ("costs", CostKind::AngleDistance { .. }) => {
            return Err(Error::parse(
                no,
                format!("section {section:?} does not match the declared kind"),
            ));
        }
        ("points", _) => {
            let mut points = Vec::with_capacity(n);
            for _ in 0..n {
                let (no, line) = lines.next().ok_or_else(|| {
                    Error::parse(0, format!("expected {n} points, file ended early"))
                })?;
                let (x, y) = line
                    .split_once(char::is_whitespace)
                    .and_then(|(x, y)| Some((x.parse().ok()?, y.trim().parse().ok()?)))
                    .ok_or_else(|| {
                        Error::parse(no, format!("expected \"<x> <y>\", found {line:?}"))
                    })?;
                points.push(Point::new(x, y));
            }
            Instance::from_points(points, kind, seed)?
        }
        ("costs", CostKind::Explicit) => {
            let expected = n * (n - 1) * (n - 2);
            let mut costs = CostTensor::new(n);
            let mut seen = vec![false; n * n * n];
            for _ in 0..expected {
                let (no, line) = lines.next().ok_or_else(|| {
                    Error::parse(0, format!("expected {expected} cost lines, file ended early"))
                })?;
                let fields: Vec<&str> = line.split_whitespace().collect();
                if fields.len() != 4 {
                    return Err(Error::parse(no, "cost line must be: i j k cost"));
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
                let flat = (i * n + j) * n + k;
                if seen[flat] {
                    return Err(Error::parse(no, format!("duplicate triple ({i}, {j}, {k})")));
                }
                seen[flat] = true;
                costs.set(i, j, k, parse_cost12(fields[3], no)?);
            }
            Instance::explicit(costs, seed)?
        }
        (other, _) => {
            return Err(Error::parse(
                no,
                format!("expected \"points\" or \"costs\", found {other:?}"),
            ));
        }
    };
    if let Some((no, extra)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(Error::parse(no, format!("unexpected trailing content {extra:?}")));
    }
    if inst.n() != n {
        return Err(Error::parse(
            0,
            format!("header says n={n} but the file defines {}", inst.n()),
        ));
    }
    Ok(inst)
}

/// Renders a solution file. The cost uses the shortest decimal form that
/// parses back to the same value, so the file is exact.
pub fn write_solution<S: Scalar>(tour: &Tour, cost: S) -> String {
    let order: Vec<String> = tour.order().iter().map(|v| v.to_string()).collect();
    format!("tour {}\n{}\ncost {cost}\n", tour.len(), order.join(" "))
}

/// Parses a solution file into the raw tour and its claimed cost.
/// Validation against a specific instance is the caller's job.
pub fn read_solution<S: Scalar>(text: &str) -> Result<(Tour, S)> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(idx, line)| (idx + 1, line.trim_end()));
    let (no, header) = lines.next().ok_or_else(|| Error::parse(1, "empty file"))?;
    let n: usize = keyword_line(header, "tour", no)?
        .parse()
        .map_err(|_| Error::parse(no, "unreadable tour length"))?;

    let (no, order_line) = lines
        .next()
        .ok_or_else(|| Error::parse(2, "missing tour order line"))?;
    let order: Vec<usize> = order_line
        .split_whitespace()
        .map(|f| f.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::parse(no, "unreadable tour order"))?;
    if order.len() != n {
        return Err(Error::parse(
            no,
            format!("header says {n} nodes but the order lists {}", order.len()),
        ));
    }

    let (no, cost_line) = lines.next().ok_or_else(|| Error::parse(3, "missing cost line"))?;
    let cost_text = keyword_line(cost_line, "cost", no)?;
    let cost = parse_scalar(cost_text)
        .ok_or_else(|| Error::parse(no, format!("unreadable cost {cost_text:?}")))?;
    if let Some((no, extra)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(Error::parse(no, format!("unexpected trailing content {extra:?}")));
    }
    Ok((Tour::new(order), cost))
}

/// Parses an assignment file; see the module docs for the format.
pub fn read_assignment(text: &str) -> Result<MilpAssignment> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(idx, line)| (idx + 1, line.trim_end()));
    let (no, header) = lines.next().ok_or_else(|| Error::parse(1, "empty file"))?;
    let n: usize = keyword_line(header, "assignment", no)?
        .parse()
        .map_err(|_| Error::parse(no, "unreadable node count"))?;
    if n < 3 {
        return Err(Error::parse(no, format!("assignment needs at least 3 nodes, has {n}")));
    }

    let mut asg = MilpAssignment::new(n);
    let mut saw_y = false;
    let index = |field: &str, no: usize| -> Result<usize> {
        let v: usize = field
            .parse()
            .map_err(|_| Error::parse(no, format!("bad node index {field:?}")))?;
        if v >= n {
            return Err(Error::parse(no, format!("node index {v} out of range for n={n}")));
        }
        Ok(v)
    };
    let bit = |field: &str, no: usize| -> Result<bool> {
        match field {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(Error::parse(no, format!("expected 0 or 1, found {other:?}"))),
        }
    };
    for (no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.as_slice() {
            ["x", i, j, v] => {
                let (i, j) = (index(i, no)?, index(j, no)?);
                if i == j {
                    return Err(Error::parse(no, "x entries need distinct endpoints"));
                }
                asg.set_x(i, j, bit(v, no)?);
            }
            ["u", i, p] => {
                let i = index(i, no)?;
                let p: i64 = p
                    .parse()
                    .map_err(|_| Error::parse(no, format!("bad position {p:?}")))?;
                asg.set_u(i, p);
            }
            ["y", i, j, k, v] => {
                let (i, j, k) = (index(i, no)?, index(j, no)?, index(k, no)?);
                if i == j || j == k || i == k {
                    return Err(Error::parse(no, "y entries need three distinct nodes"));
                }
                saw_y = true;
                asg.set_y(i, j, k, bit(v, no)?);
            }
            _ => {
                return Err(Error::parse(
                    no,
                    format!("expected an x, u, or y line, found {line:?}"),
                ));
            }
        }
    }
    if !saw_y {
        asg.derive_y();
    }
    Ok(asg)
}

static TEMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Writes `contents` to `path` atomically: the data lands in a temporary
/// file in the same directory and is renamed into place, so readers
/// never observe a half-written file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => std::path::PathBuf::from("."),
    };
    let stem = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp.{}.{}",
        stem.to_string_lossy(),
        std::process::id(),
        TEMP_COUNTER.fetch_add(1, Ordering::Relaxed),
    ));
    std::fs::write(&tmp, contents)?;
    match std::fs::rename(&tmp, path) {
        Ok(()) => Ok(()),
        Err(err) => {
            let _ = std::fs::remove_file(&tmp);
            Err(err.into())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_instance, CostKind};

    #[test]
    fn geometric_instances_round_trip_exactly() {
        for kind in [CostKind::Angle, CostKind::AngleDistance { rho: 40.0 }] {
            let inst: Instance<f64> = generate_instance(9, 123, kind).unwrap();
            let text = write_instance(&inst);
            let back: Instance<f64> = read_instance(&text).unwrap();
            assert_eq!(back, inst);
            assert_eq!(write_instance(&back), text);
        }
    }

    #[test]
    fn explicit_instances_round_trip_exactly() {
        let generated: Instance<f64> =
            generate_instance(6, 9, CostKind::AngleDistance { rho: 2.5 }).unwrap();
        let explicit = Instance::explicit(generated.costs().clone(), Some(7)).unwrap();
        let text = write_instance(&explicit);
        assert!(text.contains("kind explicit\n"));
        assert!(text.contains("seed 7\n"));
        let back: Instance<f64> = read_instance(&text).unwrap();
        assert_eq!(back, explicit);
    }

    #[test]
    fn rho_survives_the_header() {
        let inst: Instance<f64> =
            generate_instance(5, 3, CostKind::AngleDistance { rho: 12.75 }).unwrap();
        let text = write_instance(&inst);
        assert!(text.contains("kind angledistance rho=12.75\n"));
        let back: Instance<f64> = read_instance(&text).unwrap();
        match back.kind() {
            CostKind::AngleDistance { rho } => assert_eq!(*rho, 12.75),
            other => panic!("wrong kind {other:?}"),
        }
    }

    #[test]
    fn out_of_grid_points_read_with_a_flag() {
        let text = "qtsp 1\nkind angle\nn 3\npoints\n0 0\n700 3\n5 900\n";
        let inst: Instance<f64> = read_instance(text).unwrap();
        assert!(inst.exceeds_grid());
        let small = "qtsp 1\nkind angle\nn 3\npoints\n0 0\n7 3\n5 9\n";
        let inst: Instance<f64> = read_instance(small).unwrap();
        assert!(!inst.exceeds_grid());
    }

    #[test]
    fn instance_errors_carry_line_numbers() {
        let cases: &[(&str, usize)] = &[
            ("qtsp 2\nkind angle\nn 3\npoints\n0 0\n1 0\n1 1\n", 1),
            ("qtsp 1\nkind banana\nn 3\npoints\n0 0\n1 0\n1 1\n", 2),
            ("qtsp 1\nkind angledistance\nn 3\npoints\n0 0\n1 0\n1 1\n", 2),
            ("qtsp 1\nkind angle\nn x\npoints\n0 0\n1 0\n1 1\n", 3),
            ("qtsp 1\nkind angle\nn 3\ncosts\n0 0\n1 0\n1 1\n", 4),
            ("qtsp 1\nkind angle\nn 3\npoints\n0 0\nbad line\n1 1\n", 6),
            ("qtsp 1\nkind angle\nn 3\npoints\n0 0\n1 0\n1 1\nextra\n", 8),
        ];
        for (text, want_line) in cases {
            match read_instance::<f64>(text) {
                Err(Error::Parse { line, .. }) => assert_eq!(line, *want_line, "{text:?}"),
                other => panic!("expected a parse error for {text:?}, got {other:?}"),
            }
        }
    }

    #[test]
    fn explicit_cost_syntax_is_strict() {
        let head = "qtsp 1\nkind explicit\nn 3\ncosts\n";
        let mut body = String::new();
        for (i, j, k) in distinct_triples(3) {
            body.push_str(&format!("{i} {j} {k} 1.500000000000\n"));
        }
        assert!(read_instance::<f64>(&format!("{head}{body}")).is_ok());

        let short = format!("{head}{}", body.replace("1.500000000000", "1.5"));
        match read_instance::<f64>(&short) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("expected a parse error, got {other:?}"),
        }

        let dup = format!("{head}0 1 2 1.500000000000\n{body}");
        assert!(read_instance::<f64>(&dup).is_err());
    }

    #[test]
    fn solutions_round_trip_with_exact_cost() {
        let tour = Tour::new(vec![0, 2, 1, 3]);
        let cost = 1234.567890123456_f64;
        let text = write_solution(&tour, cost);
        assert_eq!(text, "tour 4\n0 2 1 3\ncost 1234.567890123456\n");
        let (back_tour, back_cost): (Tour, f64) = read_solution(&text).unwrap();
        assert_eq!(back_tour.order(), tour.order());
        assert_eq!(back_cost, cost);
    }

    #[test]
    fn solution_errors_carry_line_numbers() {
        assert!(matches!(
            read_solution::<f64>("tour 3\n0 1\ncost 1\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            read_solution::<f64>("tour 3\n0 1 2\nprice 1\n"),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn assignments_parse_with_and_without_y() {
        let text = "assignment 3\nx 0 1 1\nx 1 2 1\nx 2 0 1\nu 1 1\nu 2 2\n";
        let asg = read_assignment(text).unwrap();
        assert!(asg.x(0, 1) && asg.x(1, 2) && asg.x(2, 0));
        assert!(!asg.x(1, 0));
        assert_eq!(asg.u(1), 1);
        // y was derived from x.
        assert!(asg.y(0, 1, 2) && asg.y(1, 2, 0) && asg.y(2, 0, 1));
        assert!(!asg.y(0, 2, 1));

        let with_y = format!("{text}y 0 1 2 1\n");
        let asg = read_assignment(&with_y).unwrap();
        assert!(asg.y(0, 1, 2));
        // Explicit y suppresses derivation; unlisted y stay zero.
        assert!(!asg.y(1, 2, 0));
    }

    #[test]
    fn assignment_errors_carry_line_numbers() {
        for (text, want) in [
            ("assignment 3\nx 0 0 1\n", 2),
            ("assignment 3\nx 0 9 1\n", 2),
            ("assignment 3\nx 0 1 2\n", 2),
            ("assignment 3\nz 0 1\n", 2),
            ("assignment 3\ny 0 1 1 1\n", 2),
        ] {
            match read_assignment(text) {
                Err(Error::Parse { line, .. }) => assert_eq!(line, want, "{text:?}"),
                other => panic!("expected a parse error for {text:?}, got {other:?}"),
            }
        }
    }

    #[test]
    fn atomic_writes_replace_files_without_leftovers() {
        let dir = std::env::temp_dir().join(format!("qtsp-io-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let target = dir.join("out.txt");
        write_atomic(&target, "first\n").unwrap();
        write_atomic(&target, "second\n").unwrap();
        assert_eq!(std::fs::read_to_string(&target).unwrap(), "second\n");
        let leftovers: Vec<_> = std::fs::read_dir(&dir)
            .unwrap()
            .filter_map(|e| e.ok())
            .filter(|e| e.file_name().to_string_lossy().contains(".tmp."))
            .collect();
        assert!(leftovers.is_empty());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
