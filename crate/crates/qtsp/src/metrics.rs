//! Solution-quality metrics over solve traces: gaps, the primal
//! integral, CSV aggregation by instance group, and trace-file parsing.

use std::collections::BTreeMap;

use crate::didp::{EventKind, TraceEvent};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// The tolerance under which primal and dual are considered closed.
const GAP_TOL: f64 = 1e-9;

/// Relative optimality gap `|primal - dual| / primal`, clamped to
/// `[0, 1]`. No incumbent means a gap of 1; a zero-cost optimum with a
/// matching bound means 0. Rejects negative inputs and a dual
/// meaningfully above the primal.
pub fn optimality_gap<S: Scalar>(primal: Option<S>, dual: S) -> Result<S> {
    if dual < S::zero() {
        return Err(Error::InvalidArgument(format!(
            "dual bound must be nonnegative, got {dual}"
        )));
    }
    let Some(p) = primal else {
        return Ok(S::one());
    };
    if p < S::zero() {
        return Err(Error::InvalidArgument(format!(
            "primal value must be nonnegative, got {p}"
        )));
    }
    let tol = S::from_f64(GAP_TOL).unwrap_or_else(S::zero);
    if dual > p + tol {
        return Err(Error::InvalidArgument(format!(
            "dual bound {dual} exceeds primal value {p}"
        )));
    }
    if (p - dual).abs() <= tol {
        // Proved optimal at tolerance: the gap is zero by definition,
        // not a ratio of float noise.
        return Ok(S::zero());
    }
    Ok(((p - dual).abs() / p).min(S::one()).max(S::zero()))
}

/// Relative distance to a best-known value, `|primal - best| / primal`,
/// clamped to `[0, 1]`; 1 when there is no incumbent. A best-known value
/// meaningfully above the primal is inconsistent data.
pub fn primal_gap<S: Scalar>(primal: Option<S>, best_known: S) -> Result<S> {
    if best_known < S::zero() {
        return Err(Error::InvalidArgument(format!(
            "best-known value must be nonnegative, got {best_known}"
        )));
    }
    let Some(p) = primal else {
        return Ok(S::one());
    };
    if p < S::zero() {
        return Err(Error::InvalidArgument(format!(
            "primal value must be nonnegative, got {p}"
        )));
    }
    let tol = S::from_f64(GAP_TOL).unwrap_or_else(S::zero);
    if p + tol < best_known {
        return Err(Error::InconsistentData(format!(
            "incumbent {p} beats the recorded best-known value {best_known}"
        )));
    }
    if (p - best_known).abs() <= tol {
        // Matching the best known at tolerance counts as a zero gap.
        return Ok(S::zero());
    }
    Ok(((p - best_known).abs() / p).min(S::one()).max(S::zero()))
}

/// Integral over `[0, horizon]` of the primal gap of the best incumbent
/// known at each instant (gap 1 before the first incumbent), in
/// gap-seconds. The step function is right-continuous: an incumbent
/// found at time `t` counts from `t` on. Events at or beyond the horizon
/// are ignored.
pub fn primal_integral<S: Scalar>(
    events: &[TraceEvent<S>],
    best_known: S,
    horizon: f64,
) -> Result<f64> {
    if !(horizon >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "horizon must be nonnegative, got {horizon}"
        )));
    }
    let mut area = 0.0f64;
    let mut at = 0.0f64;
    let mut best: Option<S> = None;
    for e in events {
        if !e.primal.is_finite() {
            continue;
        }
        if e.elapsed_s < at {
            return Err(Error::InvalidArgument(
                "trace events are out of chronological order".into(),
            ));
        }
        if best.is_some_and(|b| b <= e.primal) {
            continue;
        }
        let t = e.elapsed_s;
        if t >= horizon {
            break;
        }
        let gap = primal_gap(best, best_known)?;
        area += gap.to_f64().unwrap_or(1.0) * (t - at);
        best = Some(e.primal);
        at = t;
    }
    let gap = primal_gap(best, best_known)?;
    area += gap.to_f64().unwrap_or(1.0) * (horizon - at);
    Ok(area)
}

/// One solve run, as consumed by [`aggregate_report`].
#[derive(Clone, Debug)]
pub struct RunRecord<S> {
    /// Instance identifier (file stem in the CLI pipeline).
    pub instance: String,
    pub n: usize,
    /// Cost-family label (`angle`, `angledistance`, `explicit`).
    pub kind: String,
    pub solver: String,
    /// Evaluation horizon for the primal integral, in seconds.
    pub horizon: f64,
    pub events: Vec<TraceEvent<S>>,
    /// Reference value for primal metrics, when one is on record.
    pub best_known: Option<S>,
}

impl<S: Scalar> RunRecord<S> {
    /// Best (last) incumbent in the trace, if any.
    pub fn final_primal(&self) -> Option<S> {
        self.events
            .iter()
            .filter(|e| e.primal.is_finite())
            .map(|e| e.primal)
            .fold(None, |acc, p| Some(acc.map_or(p, |a: S| a.min(p))))
    }

    /// Strongest dual bound in the trace; zero for an empty trace.
    pub fn final_dual(&self) -> S {
        self.events
            .iter()
            .map(|e| e.dual)
            .fold(S::zero(), |acc, d| acc.max(d))
    }
}

fn mean_text(values: &[f64]) -> String {
    if values.is_empty() {
        "nan".to_string()
    } else {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        format!("{mean}")
    }
}

/// Aggregates runs into a CSV report keyed by `(n, kind, solver)`, with
/// group means of the optimality gap, the primal gap, and the primal
/// integral. Runs without a best-known value count toward the group and
/// its optimality gap but are excluded from the primal-metric means;
/// groups with no usable runs report `nan` there.
pub fn aggregate_report<S: Scalar>(records: &[RunRecord<S>]) -> Result<String> {
    let mut groups: BTreeMap<(usize, &str, &str), Vec<&RunRecord<S>>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.n, r.kind.as_str(), r.solver.as_str()))
            .or_default()
            .push(r);
    }
    let mut out =
        String::from("n,kind,solver,mean_opt_gap,mean_primal_gap,mean_primal_integral,count\n");
    for ((n, kind, solver), runs) in groups {
        let mut opt_gaps = Vec::with_capacity(runs.len());
        let mut primal_gaps = Vec::new();
        let mut integrals = Vec::new();
        for run in &runs {
            let gap = optimality_gap(run.final_primal(), run.final_dual())?;
            opt_gaps.push(gap.to_f64().unwrap_or(1.0));
            if let Some(best) = run.best_known {
                let gap = primal_gap(run.final_primal(), best)?;
                primal_gaps.push(gap.to_f64().unwrap_or(1.0));
                integrals.push(primal_integral(&run.events, best, run.horizon)?);
            }
        }
        out.push_str(&format!(
            "{n},{kind},{solver},{},{},{},{}\n",
            mean_text(&opt_gaps),
            mean_text(&primal_gaps),
            mean_text(&integrals),
            runs.len()
        ));
    }
    Ok(out)
}

/// Renders gnuplot-ready tables from the same records: one `.dat` table
/// per `(kind, metric)`, rows by `n`, one column per solver. Returns
/// `(file name, contents)` pairs.
pub fn gnuplot_tables<S: Scalar>(records: &[RunRecord<S>]) -> Result<Vec<(String, String)>> {
    // Group means, reusing the CSV aggregation as the single source.
    let csv = aggregate_report(records)?;
    let mut kinds: Vec<String> = Vec::new();
    let mut solvers: Vec<String> = Vec::new();
    let mut cells: BTreeMap<(String, usize, String), [String; 3]> = BTreeMap::new();
    for line in csv.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let (n, kind, solver) = (fields[0].parse::<usize>().unwrap_or(0), fields[1], fields[2]);
        if !kinds.iter().any(|k| k == kind) {
            kinds.push(kind.to_string());
        }
        if !solvers.iter().any(|s| s == solver) {
            solvers.push(solver.to_string());
        }
        cells.insert(
            (kind.to_string(), n, solver.to_string()),
            [fields[3].to_string(), fields[4].to_string(), fields[5].to_string()],
        );
    }
    kinds.sort();
    solvers.sort();
    let metrics = ["opt_gap", "primal_gap", "primal_integral"];
    let mut tables = Vec::new();
    for kind in &kinds {
        let ns: Vec<usize> = cells
            .keys()
            .filter(|(k, _, _)| k == kind)
            .map(|(_, n, _)| *n)
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        for (m_idx, metric) in metrics.iter().enumerate() {
            let mut table = format!("# mean {metric} by n for kind={kind}\n# n {}\n", solvers.join(" "));
            for &n in &ns {
                let mut row = n.to_string();
                for solver in &solvers {
                    let cell = cells
                        .get(&(kind.clone(), n, solver.clone()))
                        .map_or("nan", |c| c[m_idx].as_str());
                    row.push(' ');
                    row.push_str(cell);
                }
                table.push_str(&row);
                table.push('\n');
            }
            tables.push((format!("{kind}_{metric}.dat"), table));
        }
    }
    Ok(tables)
}

/// Parses a trace CSV written by
/// [`AnytimeTrace::to_csv`](crate::didp::AnytimeTrace::to_csv).
pub fn read_trace_csv(text: &str) -> Result<Vec<TraceEvent<f64>>> {
    let mut lines = text.lines().enumerate().map(|(idx, l)| (idx + 1, l));
    match lines.next() {
        Some((_, "elapsed_s,primal,dual,event")) => {}
        Some((no, other)) => {
            return Err(Error::parse(no, format!("unexpected trace header {other:?}")))
        }
        None => return Err(Error::parse(1, "empty trace file")),
    }
    let mut events = Vec::new();
    for (no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::parse(no, "trace row must be: elapsed_s,primal,dual,event"));
        }
        let elapsed_s: f64 = fields[0]
            .parse()
            .map_err(|_| Error::parse(no, format!("bad elapsed time {:?}", fields[0])))?;
        let primal: f64 = fields[1]
            .parse()
            .map_err(|_| Error::parse(no, format!("bad primal value {:?}", fields[1])))?;
        let dual: f64 = fields[2]
            .parse()
            .map_err(|_| Error::parse(no, format!("bad dual value {:?}", fields[2])))?;
        let kind = match fields[3] {
            "incumbent" => EventKind::Incumbent,
            "bound" => EventKind::Bound,
            "final" => EventKind::Final,
            other => return Err(Error::parse(no, format!("unknown event kind {other:?}"))),
        };
        events.push(TraceEvent {
            elapsed_s,
            primal,
            dual,
            kind,
        });
    }
    Ok(events)
}
