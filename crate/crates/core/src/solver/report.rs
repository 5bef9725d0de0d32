//! CSV renderings of solver output. Numbers use Rust's shortest round-trip
//! formatting, so equal results give byte-identical files.

use std::fmt::Write;

use super::{SolveResult, SweepEntry};
use crate::Scalar;

fn location_header(n: usize) -> String {
    if n == 1 {
        "location".to_string()
    } else {
        (0..n).map(|l| format!("location_{l}")).collect::<Vec<_>>().join(",")
    }
}

fn location_cells<T: Scalar>(x: &[T]) -> String {
    x.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(",")
}

/// `iteration,risk`
pub fn trace_csv<T: Scalar>(result: &SolveResult<T>) -> String {
    let mut s = String::from("iteration,risk\n");
    for t in &result.trace {
        writeln!(s, "{},{}", t.iteration, t.risk).unwrap();
    }
    s
}

/// Support table: `parameter,atom,location,mass`.
pub fn support_csv<T: Scalar>(entries: &[SweepEntry<T>]) -> String {
    let n = entries.first().map_or(1, |e| e.result.prior.dim());
    let mut s = format!("parameter,atom,{},mass\n", location_header(n));
    for e in entries {
        for (i, (x, p)) in e.result.prior.points.iter().zip(&e.result.prior.masses).enumerate() {
            writeln!(s, "{},{},{},{}", e.parameter, i, location_cells(x), p).unwrap();
        }
    }
    s
}

/// Stem data of each prior: `parameter,location,mass,cumulative_mass`.
pub fn pmf_csv<T: Scalar>(entries: &[SweepEntry<T>]) -> String {
    let n = entries.first().map_or(1, |e| e.result.prior.dim());
    let mut s = format!("parameter,{},mass,cumulative_mass\n", location_header(n));
    for e in entries {
        let mut acc = T::zero();
        for (x, &p) in e.result.prior.points.iter().zip(&e.result.prior.masses) {
            acc = acc + p;
            writeln!(s, "{},{},{},{}", e.parameter, location_cells(x), p, acc).unwrap();
        }
    }
    s
}

/// One row per parameter: `parameter,risk,atoms,bound_used,iterations,converged`.
pub fn summary_csv<T: Scalar>(entries: &[SweepEntry<T>]) -> String {
    let mut s = String::from("parameter,risk,atoms,bound_used,iterations,converged\n");
    for e in entries {
        let r = &e.result;
        writeln!(
            s,
            "{},{},{},{},{},{}",
            e.parameter,
            r.risk,
            r.prior.len(),
            r.bound_used,
            r.iterations,
            r.converged
        )
        .unwrap();
    }
    s
}
