//! Anytime solve traces: timestamped primal/dual progress plus the final
//! status, serializable to CSV for the metrics tooling.

use std::fmt;
use std::time::Instant;

use crate::scalar::Scalar;

/// How a solve run ended.
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum SolveStatus {
    /// Proven optimal: final primal and dual agree within tolerance.
    Optimal,
    /// Stopped with an incumbent that is not proven optimal.
    Feasible,
    /// Stopped before any complete tour was found.
    NoSolution,
    /// Stopped by the expansion, time, or node budget.
    OutOfBudget,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Feasible => "feasible",
            SolveStatus::NoSolution => "no-solution",
            SolveStatus::OutOfBudget => "out-of-budget",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What a trace row records.
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum EventKind {
    /// A new best tour was found.
    Incumbent,
    /// The proven lower bound improved.
    Bound,
    /// Terminal snapshot written once when the solver stops.
    Final,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Incumbent => "incumbent",
            EventKind::Bound => "bound",
            EventKind::Final => "final",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One progress snapshot. `primal` is infinite until a tour is known.
#[derive(Copy, Clone, PartialEq, Debug)]
pub struct TraceEvent<S> {
    pub elapsed_s: f64,
    pub primal: S,
    pub dual: S,
    pub kind: EventKind,
}

/// Event log of one solve run.
///
/// Every run starts with a `bound` event (the root relaxation) and ends
/// with exactly one `final` event; incumbent and bound improvements land
/// in between. Within a trace, primal values never increase, dual values
/// never decrease, and dual never exceeds primal.
#[derive(Clone, Debug)]
pub struct AnytimeTrace<S> {
    events: Vec<TraceEvent<S>>,
    status: SolveStatus,
}

impl<S: Scalar> AnytimeTrace<S> {
    pub(crate) fn new() -> Self {
        AnytimeTrace {
            events: Vec::new(),
            status: SolveStatus::NoSolution,
        }
    }

    pub fn events(&self) -> &[TraceEvent<S>] {
        &self.events
    }

    pub fn status(&self) -> SolveStatus {
        self.status
    }

    pub(crate) fn record(&mut self, elapsed_s: f64, primal: S, dual: S, kind: EventKind) {
        self.events.push(TraceEvent {
            elapsed_s,
            primal,
            dual,
            kind,
        });
        debug_assert_eq!(self.check_monotone(), Ok(()));
    }

    pub(crate) fn finish(&mut self, elapsed_s: f64, primal: S, dual: S, status: SolveStatus) {
        self.record(elapsed_s, primal, dual, EventKind::Final);
        self.status = status;
    }

    /// Checks the monotonicity contract, returning the first offense.
    ///
    /// Primal and dual series are checked exactly (solvers only record
    /// strict improvements); the cross check allows the same `1e-9` slack
    /// used to declare optimality, since the two series come from
    /// differently ordered floating-point sums.
    pub fn verify_invariants(&self) -> Result<(), String> {
        self.check_monotone()?;
        if let Some(last) = self.events.last() {
            if last.kind != EventKind::Final {
                return Err("trace does not end with a final event".into());
            }
        }
        Ok(())
    }

    /// The in-progress part of the contract, applicable after any prefix.
    fn check_monotone(&self) -> Result<(), String> {
        let slack = S::from_f64(1e-9).unwrap_or_else(S::zero);
        let mut best_primal = S::infinity();
        let mut best_dual = S::neg_infinity();
        let mut last_t = 0.0f64;
        for (row, e) in self.events.iter().enumerate() {
            if !(e.elapsed_s >= last_t) {
                return Err(format!("event {row}: time went backwards"));
            }
            if e.primal > best_primal {
                return Err(format!("event {row}: primal increased"));
            }
            if e.dual < best_dual {
                return Err(format!("event {row}: dual decreased"));
            }
            if e.dual > e.primal + slack {
                return Err(format!("event {row}: dual exceeds primal"));
            }
            best_primal = e.primal;
            best_dual = e.dual;
            last_t = e.elapsed_s;
        }
        Ok(())
    }

    /// Renders the `elapsed_s,primal,dual,event` CSV. An unknown primal
    /// prints as `inf`; finite values use the shortest exact decimal form.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("elapsed_s,primal,dual,event\n");
        for e in &self.events {
            let primal = if e.primal.is_infinite() {
                "inf".to_string()
            } else {
                format!("{}", e.primal)
            };
            out.push_str(&format!("{},{},{},{}\n", e.elapsed_s, primal, e.dual, e.kind));
        }
        out
    }
}

/// Solver stopwatch. In virtual mode, time is defined as
/// `expansions * 1e-6` seconds, making traces and budget decisions
/// reproducible byte for byte across runs and machines.
pub(crate) struct Clock {
    start: Instant,
    virtual_clock: bool,
}

impl Clock {
    pub(crate) fn start(virtual_clock: bool) -> Self {
        Clock {
            start: Instant::now(),
            virtual_clock,
        }
    }

    pub(crate) fn elapsed(&self, expansions: u64) -> f64 {
        if self.virtual_clock {
            expansions as f64 * 1e-6
        } else {
            self.start.elapsed().as_secs_f64()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_prints_inf_for_unknown_primal() {
        let mut trace: AnytimeTrace<f64> = AnytimeTrace::new();
        trace.record(0.0, f64::INFINITY, 1.5, EventKind::Bound);
        trace.record(0.25, 8.0, 1.5, EventKind::Incumbent);
        trace.finish(1.0, 8.0, 8.0, SolveStatus::Optimal);
        let csv = trace.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("elapsed_s,primal,dual,event"));
        assert_eq!(lines.next(), Some("0,inf,1.5,bound"));
        assert_eq!(lines.next(), Some("0.25,8,1.5,incumbent"));
        assert_eq!(lines.next(), Some("1,8,8,final"));
        assert_eq!(lines.next(), None);
        assert_eq!(trace.status(), SolveStatus::Optimal);
    }

    #[test]
    fn invariant_checker_spots_regressions() {
        let mut ok: AnytimeTrace<f64> = AnytimeTrace::new();
        ok.events.push(TraceEvent {
            elapsed_s: 0.0,
            primal: f64::INFINITY,
            dual: 1.0,
            kind: EventKind::Bound,
        });
        ok.events.push(TraceEvent {
            elapsed_s: 1.0,
            primal: 5.0,
            dual: 2.0,
            kind: EventKind::Final,
        });
        assert_eq!(ok.verify_invariants(), Ok(()));

        let mut worse_primal = ok.clone();
        worse_primal.events[0].primal = 4.0;
        assert!(worse_primal.verify_invariants().is_err());

        let mut drop_dual = ok.clone();
        drop_dual.events[1].dual = 0.5;
        assert!(drop_dual.verify_invariants().is_err());

        let mut crossed = ok.clone();
        crossed.events[1].dual = 5.1;
        assert!(crossed.verify_invariants().is_err());
        // Ulp-level overshoot from reordered sums is tolerated.
        let mut ulp = ok.clone();
        ulp.events[1].dual = 5.0 + 1e-13;
        assert_eq!(ulp.verify_invariants(), Ok(()));

        let mut no_final = ok.clone();
        no_final.events[1].kind = EventKind::Incumbent;
        assert!(no_final.verify_invariants().is_err());
    }

    #[test]
    fn virtual_clock_is_expansion_driven() {
        let clock = Clock::start(true);
        assert_eq!(clock.elapsed(0), 0.0);
        assert_eq!(clock.elapsed(2_000_000), 2.0);
    }
}
