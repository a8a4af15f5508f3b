//! LP-format export of the linearized and quadratic models, plus a
//! parser and evaluator for the dialect this module emits.
//!
//! The emitted dialect is standard LP format restricted to what the
//! models need: a `Minimize` objective (quadratic terms inside `[ ... ]`
//! for the quadratic model), named constraints one per line under
//! `Subject To`, range rows under `Bounds`, and integrality sections
//! `Generals` and `Binaries`. Cost coefficients are printed with twelve
//! fractional digits, matching the instance file format; structural
//! coefficients are printed as plain integers.
//!
//! Variables are `x_i_j` (arc selected), `y_i_j_k` (arcs `(i,j)` and
//! `(j,k)` both selected), `u_i` (visit position), and `q_i_j`
//! (commodity flow, only in the flow formulation).

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::instance::{distinct_triples, Instance};
use crate::scalar::{format_dec12, Scalar};

use super::{ModelText, SubtourKind};

/// Terms per objective line before wrapping.
const WRAP: usize = 8;

fn x_name(i: usize, j: usize) -> String {
    format!("x_{i}_{j}")
}

fn y_name(i: usize, j: usize, k: usize) -> String {
    format!("y_{i}_{j}_{k}")
}

fn u_name(i: usize) -> String {
    format!("u_{i}")
}

fn q_name(i: usize, j: usize) -> String {
    format!("q_{i}_{j}")
}

/// Appends objective terms, wrapping every [`WRAP`] terms.
fn push_wrapped(out: &mut String, terms: &[String]) {
    for (idx, term) in terms.iter().enumerate() {
        if idx == 0 {
            out.push_str(term);
        } else if idx % WRAP == 0 {
            out.push_str(" +\n   ");
            out.push_str(term);
        } else {
            out.push_str(" + ");
            out.push_str(term);
        }
    }
    out.push('\n');
}

fn degree_constraints(n: usize, out: &mut String) {
    for i in 0..n {
        let arcs: Vec<String> = (0..n).filter(|&j| j != i).map(|j| x_name(i, j)).collect();
        let _ = writeln!(out, " deg_out_{i}: {} = 1", arcs.join(" + "));
    }
    for j in 0..n {
        let arcs: Vec<String> = (0..n).filter(|&i| i != j).map(|i| x_name(i, j)).collect();
        let _ = writeln!(out, " deg_in_{j}: {} = 1", arcs.join(" + "));
    }
}

fn ordering_constraints(n: usize, subtour: SubtourKind, out: &mut String) {
    match subtour {
        SubtourKind::Dl => {
            for i in 1..n {
                for j in 1..n {
                    if i == j {
                        continue;
                    }
                    let _ = writeln!(
                        out,
                        " dl_{i}_{j}: u_{i} - u_{j} + {} x_{i}_{j} + {} x_{j}_{i} <= {}",
                        n - 1,
                        n - 3,
                        n - 2
                    );
                }
            }
        }
        SubtourKind::Mtz => {
            for i in 1..n {
                for j in 1..n {
                    if i == j {
                        continue;
                    }
                    let _ = writeln!(
                        out,
                        " mtz_{i}_{j}: u_{i} - u_{j} + {n} x_{i}_{j} <= {}",
                        n - 1
                    );
                }
            }
        }
        SubtourKind::Flow => {
            for i in 1..n {
                let inflow: Vec<String> =
                    (0..n).filter(|&j| j != i).map(|j| q_name(j, i)).collect();
                let outflow: Vec<String> = (1..n)
                    .filter(|&j| j != i)
                    .map(|j| format!("- {}", q_name(i, j)))
                    .collect();
                let _ = writeln!(
                    out,
                    " flow_{i}: {} {} = 1",
                    inflow.join(" + "),
                    outflow.join(" ")
                );
            }
            for i in 0..n {
                for j in 1..n {
                    if i == j {
                        continue;
                    }
                    let _ = writeln!(
                        out,
                        " cap_{i}_{j}: q_{i}_{j} - {} x_{i}_{j} <= 0",
                        n - 1
                    );
                }
            }
        }
    }
}

fn position_bounds(n: usize, out: &mut String) {
    for i in 1..n {
        let _ = writeln!(out, " 1 <= u_{i} <= {}", n - 1);
    }
}

/// Names section (`Binaries`/`Generals`), wrapped like the objective.
fn name_section(out: &mut String, header: &str, names: &[String]) {
    let _ = writeln!(out, "{header}");
    for chunk in names.chunks(WRAP) {
        let _ = writeln!(out, " {}", chunk.join(" "));
    }
}

fn manifest_row(out: &mut String, name: &str, kind: &str, indices: &[usize]) {
    let idx: Vec<String> = indices.iter().map(|v| v.to_string()).collect();
    let _ = writeln!(out, "{name}\t{kind}\t{}", idx.join(","));
}

/// Renders the linearized model: minimize the linear cost over `y`
/// subject to degree, linking, and the chosen ordering constraints.
pub fn export_milp<S: Scalar>(inst: &Instance<S>, subtour: SubtourKind) -> ModelText {
    let n = inst.n();
    let costs = inst.costs();
    let mut model = String::new();
    let _ = writeln!(
        model,
        "\\ qtsp milp model: n={n} kind={} subtour={subtour}",
        inst.kind().label()
    );
    model.push_str("Minimize\n obj: ");
    let terms: Vec<String> = distinct_triples(n)
        .map(|(i, j, k)| format!("{} {}", format_dec12(costs.get(i, j, k)), y_name(i, j, k)))
        .collect();
    push_wrapped(&mut model, &terms);

    model.push_str("Subject To\n");
    degree_constraints(n, &mut model);
    ordering_constraints(n, subtour, &mut model);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let succ: Vec<String> = (0..n)
                .filter(|&k| k != i && k != j)
                .map(|k| format!("- {}", y_name(i, j, k)))
                .collect();
            let _ = writeln!(model, " link_out_{i}_{j}: x_{i}_{j} {} = 0", succ.join(" "));
            let pred: Vec<String> = (0..n)
                .filter(|&k| k != i && k != j)
                .map(|k| format!("- {}", y_name(k, i, j)))
                .collect();
            let _ = writeln!(model, " link_in_{i}_{j}: x_{i}_{j} {} = 0", pred.join(" "));
        }
    }

    model.push_str("Bounds\n");
    position_bounds(n, &mut model);

    let u_names: Vec<String> = (1..n).map(u_name).collect();
    name_section(&mut model, "Generals", &u_names);
    let mut binary_names: Vec<String> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                binary_names.push(x_name(i, j));
            }
        }
    }
    for (i, j, k) in distinct_triples(n) {
        binary_names.push(y_name(i, j, k));
    }
    name_section(&mut model, "Binaries", &binary_names);
    model.push_str("End\n");

    let mut manifest = String::from("name\tkind\tindices\n");
    for i in 0..n {
        for j in 0..n {
            if i != j {
                manifest_row(&mut manifest, &x_name(i, j), "binary", &[i, j]);
            }
        }
    }
    for (i, j, k) in distinct_triples(n) {
        manifest_row(&mut manifest, &y_name(i, j, k), "binary", &[i, j, k]);
    }
    for i in 1..n {
        manifest_row(&mut manifest, &u_name(i), "integer", &[i]);
    }
    if subtour == SubtourKind::Flow {
        for i in 0..n {
            for j in 1..n {
                if i != j {
                    manifest_row(&mut manifest, &q_name(i, j), "continuous", &[i, j]);
                }
            }
        }
    }
    ModelText { model, manifest }
}

/// Renders the quadratic model: the same arc and ordering constraints,
/// with the cost written directly as products of consecutive arcs.
pub fn export_miqp<S: Scalar>(inst: &Instance<S>) -> ModelText {
    let n = inst.n();
    let costs = inst.costs();
    let mut model = String::new();
    let _ = writeln!(
        model,
        "\\ qtsp miqp model: n={n} kind={}",
        inst.kind().label()
    );
    model.push_str("Minimize\n obj: [ ");
    let terms: Vec<String> = distinct_triples(n)
        .map(|(i, j, k)| {
            format!(
                "{} {} * {}",
                format_dec12(costs.get(i, j, k)),
                x_name(i, j),
                x_name(j, k)
            )
        })
        .collect();
    push_wrapped(&mut model, &terms);
    // Close the quadratic bracket on its own continuation line.
    model.push_str("   ]\n");

    model.push_str("Subject To\n");
    degree_constraints(n, &mut model);
    ordering_constraints(n, SubtourKind::Dl, &mut model);
    model.push_str("Bounds\n");
    position_bounds(n, &mut model);

    let u_names: Vec<String> = (1..n).map(u_name).collect();
    name_section(&mut model, "Generals", &u_names);
    let mut binary_names: Vec<String> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                binary_names.push(x_name(i, j));
            }
        }
    }
    name_section(&mut model, "Binaries", &binary_names);
    model.push_str("End\n");

    let mut manifest = String::from("name\tkind\tindices\n");
    for i in 0..n {
        for j in 0..n {
            if i != j {
                manifest_row(&mut manifest, &x_name(i, j), "binary", &[i, j]);
            }
        }
    }
    for i in 1..n {
        manifest_row(&mut manifest, &u_name(i), "integer", &[i]);
    }
    ModelText { model, manifest }
}

/// A linear or quadratic term: `coeff * vars[0] (* vars[1])`.
#[derive(Clone, Debug, PartialEq)]
pub struct LpTerm {
    pub coeff: f64,
    pub vars: Vec<String>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpConstraint {
    pub name: String,
    pub terms: Vec<LpTerm>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpBound {
    pub var: String,
    pub lower: f64,
    pub upper: f64,
}

/// Parsed LP model (the dialect emitted by this module).
#[derive(Clone, Debug, Default)]
pub struct LpModel {
    pub objective: Vec<LpTerm>,
    pub constraints: Vec<LpConstraint>,
    pub bounds: Vec<LpBound>,
    pub generals: Vec<String>,
    pub binaries: Vec<String>,
}

#[derive(Copy, Clone, PartialEq, Eq)]
enum Section {
    Preamble,
    Objective,
    Constraints,
    Bounds,
    Generals,
    Binaries,
    Done,
}

fn is_number(token: &str) -> bool {
    token
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_digit() || c == '.')
        && token.parse::<f64>().is_ok()
}

/// Parses a `+`/`-`/coefficient/name/`*` token stream into terms.
fn parse_terms(tokens: &[&str], line: usize) -> Result<Vec<LpTerm>> {
    let mut terms: Vec<LpTerm> = Vec::new();
    let mut sign = 1.0f64;
    let mut pending_product = false;
    for &token in tokens {
        match token {
            "+" => sign = 1.0,
            "-" => sign = -1.0,
            "[" | "]" => {}
            "*" => {
                if terms.is_empty() {
                    return Err(Error::parse(line, "product with no left operand"));
                }
                pending_product = true;
            }
            _ if is_number(token) => {
                let value: f64 = token
                    .parse()
                    .map_err(|_| Error::parse(line, format!("bad coefficient {token:?}")))?;
                terms.push(LpTerm {
                    coeff: sign * value,
                    vars: Vec::new(),
                });
                sign = 1.0;
            }
            _ => {
                if pending_product {
                    let last = terms.last_mut().expect("checked non-empty");
                    last.vars.push(token.to_string());
                    pending_product = false;
                } else {
                    match terms.last_mut() {
                        // A bare coefficient is waiting for its variable.
                        Some(t) if t.vars.is_empty() => t.vars.push(token.to_string()),
                        _ => {
                            terms.push(LpTerm {
                                coeff: sign,
                                vars: vec![token.to_string()],
                            });
                            sign = 1.0;
                        }
                    }
                }
            }
        }
    }
    if pending_product {
        return Err(Error::parse(line, "product with no right operand"));
    }
    Ok(terms)
}

/// Parses text in the dialect written by [`export_milp`] and
/// [`export_miqp`]; used for round-trip checks of exported models.
pub fn parse_lp(text: &str) -> Result<LpModel> {
    let mut model = LpModel::default();
    let mut section = Section::Preamble;
    let mut objective_tokens: Vec<String> = Vec::new();
    let mut objective_line = 0usize;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('\\') {
            continue;
        }
        let lowered = line.to_ascii_lowercase();
        let new_section = match lowered.as_str() {
            "minimize" => Some(Section::Objective),
            "maximize" => {
                return Err(Error::parse(line_no, "only minimization models are supported"))
            }
            "subject to" => Some(Section::Constraints),
            "bounds" => Some(Section::Bounds),
            "generals" => Some(Section::Generals),
            "binaries" => Some(Section::Binaries),
            "end" => Some(Section::Done),
            _ => None,
        };
        if let Some(next) = new_section {
            section = next;
            continue;
        }
        match section {
            Section::Preamble => {
                return Err(Error::parse(line_no, format!("unexpected text {line:?}")))
            }
            Section::Objective => {
                let rest = match line.split_once(':') {
                    Some((label, rest)) if label.trim() == "obj" => rest,
                    Some(_) => {
                        return Err(Error::parse(line_no, "objective label must be obj"))
                    }
                    None => line,
                };
                if objective_tokens.is_empty() {
                    objective_line = line_no;
                }
                objective_tokens.extend(rest.split_whitespace().map(str::to_string));
            }
            Section::Constraints => {
                let (name, rest) = line.split_once(':').ok_or_else(|| {
                    Error::parse(line_no, "constraint line without a name")
                })?;
                let tokens: Vec<&str> = rest.split_whitespace().collect();
                let rel_at = tokens
                    .iter()
                    .position(|t| matches!(*t, "<=" | ">=" | "="))
                    .ok_or_else(|| Error::parse(line_no, "constraint without a relation"))?;
                if rel_at + 2 != tokens.len() {
                    return Err(Error::parse(line_no, "expected a single right-hand side"));
                }
                let relation = match tokens[rel_at] {
                    "<=" => Relation::Le,
                    ">=" => Relation::Ge,
                    _ => Relation::Eq,
                };
                let rhs: f64 = tokens[rel_at + 1]
                    .parse()
                    .map_err(|_| Error::parse(line_no, "bad right-hand side"))?;
                model.constraints.push(LpConstraint {
                    name: name.trim().to_string(),
                    terms: parse_terms(&tokens[..rel_at], line_no)?,
                    relation,
                    rhs,
                });
            }
            Section::Bounds => {
                let tokens: Vec<&str> = line.split_whitespace().collect();
                match tokens.as_slice() {
                    [lo, "<=", var, "<=", hi] => {
                        let lower: f64 = lo
                            .parse()
                            .map_err(|_| Error::parse(line_no, "bad lower bound"))?;
                        let upper: f64 = hi
                            .parse()
                            .map_err(|_| Error::parse(line_no, "bad upper bound"))?;
                        model.bounds.push(LpBound {
                            var: var.to_string(),
                            lower,
                            upper,
                        });
                    }
                    _ => return Err(Error::parse(line_no, "unsupported bound form")),
                }
            }
            Section::Generals => {
                model
                    .generals
                    .extend(line.split_whitespace().map(str::to_string));
            }
            Section::Binaries => {
                model
                    .binaries
                    .extend(line.split_whitespace().map(str::to_string));
            }
            Section::Done => {
                return Err(Error::parse(line_no, "content after End"));
            }
        }
    }
    let token_refs: Vec<&str> = objective_tokens.iter().map(String::as_str).collect();
    model.objective = parse_terms(&token_refs, objective_line)?;
    Ok(model)
}

/// Result of evaluating an [`LpModel`] at a point.
#[derive(Clone, Debug)]
pub struct LpEvaluation {
    pub objective: f64,
    /// Names of violated constraints, bounds, or integrality sections.
    pub violations: Vec<String>,
}

impl LpEvaluation {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Feasibility tolerance for [`evaluate_lp`]; the models are integral,
/// so any honest assignment clears it by a wide margin.
const LP_FEAS_TOL: f64 = 1e-9;

/// Evaluates the model at `values` (missing variables count as 0).
pub fn evaluate_lp(model: &LpModel, values: &HashMap<String, f64>) -> LpEvaluation {
    let value_of = |name: &str| values.get(name).copied().unwrap_or(0.0);
    let eval_terms = |terms: &[LpTerm]| -> f64 {
        terms
            .iter()
            .map(|t| t.coeff * t.vars.iter().map(|v| value_of(v)).product::<f64>())
            .sum()
    };
    let mut violations = Vec::new();
    let objective = eval_terms(&model.objective);
    for c in &model.constraints {
        let lhs = eval_terms(&c.terms);
        let ok = match c.relation {
            Relation::Le => lhs <= c.rhs + LP_FEAS_TOL,
            Relation::Ge => lhs >= c.rhs - LP_FEAS_TOL,
            Relation::Eq => (lhs - c.rhs).abs() <= LP_FEAS_TOL,
        };
        if !ok {
            violations.push(c.name.clone());
        }
    }
    for b in &model.bounds {
        let v = value_of(&b.var);
        if v < b.lower - LP_FEAS_TOL || v > b.upper + LP_FEAS_TOL {
            violations.push(format!("bounds of {}", b.var));
        }
    }
    for name in &model.binaries {
        let v = value_of(name);
        if (v - v.round()).abs() > LP_FEAS_TOL || !(v.round() == 0.0 || v.round() == 1.0) {
            violations.push(format!("binary {name}"));
        }
    }
    for name in &model.generals {
        let v = value_of(name);
        if (v - v.round()).abs() > LP_FEAS_TOL {
            violations.push(format!("integrality of {name}"));
        }
    }
    LpEvaluation {
        objective,
        violations,
    }
}

/// Variable values encoding `asg`, suitable for [`evaluate_lp`] against
/// any of the exported models (flow values are included and harmlessly
/// ignored by the others).
pub fn assignment_values(asg: &super::MilpAssignment) -> HashMap<String, f64> {
    let n = asg.n();
    let mut values = HashMap::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            values.insert(x_name(i, j), f64::from(u8::from(asg.x(i, j))));
        }
    }
    for (i, j, k) in distinct_triples(n) {
        values.insert(y_name(i, j, k), f64::from(u8::from(asg.y(i, j, k))));
    }
    for i in 1..n {
        values.insert(u_name(i), asg.u(i) as f64);
    }
    // Flow along a selected arc (i, j) is the load still on board when
    // leaving i: n-1 minus i's visit position.
    for i in 0..n {
        for j in 1..n {
            if i == j {
                continue;
            }
            let flow = if asg.x(i, j) {
                (n as i64 - 1 - asg.u(i)) as f64
            } else {
                0.0
            };
            values.insert(q_name(i, j), flow);
        }
    }
    values
}
