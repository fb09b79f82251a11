//! Experiment traces and their JSON / CSV renderings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub energy: f64,
    /// ∞-norm of the parameter gradient.
    pub grad_norm: f64,
    pub elapsed_ms: f64,
    /// Optimization stage or adaptive round the row belongs to.
    #[serde(default)]
    pub stage: usize,
}

/// One operator-selection event of an adaptive run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionRound {
    pub round: usize,
    /// Pool indices appended in this round.
    pub operators: Vec<usize>,
    /// Screening gradients of the appended operators, same order.
    pub gradients: Vec<f64>,
    /// Largest |gradient| among operators left out this round.
    pub max_excluded_gradient: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: String,
    pub seed: u64,
    /// Resolved configuration the run was started with.
    #[serde(default)]
    pub config: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    pub rows: Vec<TraceRow>,
    pub final_energy: f64,
    pub final_parameters: Vec<f64>,
    /// Names of the ansatz operators, in parameter order.
    #[serde(default)]
    pub operators: Vec<String>,
    pub cnot_cost: usize,
    pub cnot_depth: usize,
    /// Optimizer steps taken over all stages.
    pub iterations: usize,
    pub converged: bool,
    pub wall_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_energy: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub selection: Vec<SelectionRound>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

impl RunRecord {
    pub fn new(method: impl Into<String>, seed: u64) -> Self {
        RunRecord {
            method: method.into(),
            seed,
            config: serde_json::Value::Null,
            config_hash: None,
            rows: Vec::new(),
            final_energy: f64::NAN,
            final_parameters: Vec::new(),
            operators: Vec::new(),
            cnot_cost: 0,
            cnot_depth: 0,
            iterations: 0,
            converged: false,
            wall_ms: 0.0,
            reference_energy: None,
            selection: Vec::new(),
            diagnostics: Vec::new(),
        }
    }

    pub fn best_energy(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.energy)
            .fold(self.final_energy, f64::min)
    }

    /// Index (number of rows seen) of the first row within `tol` of `target`.
    pub fn first_row_within(&self, target: f64, tol: f64) -> Option<usize> {
        self.rows
            .iter()
            .position(|r| (r.energy - target).abs() <= tol)
    }

    /// `iter,energy,grad_norm,elapsed_ms` trace. With `include_timing`
    /// false the timing column is written as 0 so reruns are byte-identical.
    pub fn trace_csv(&self, include_timing: bool) -> String {
        let mut out = String::from("iter,energy,grad_norm,elapsed_ms\n");
        for r in &self.rows {
            let t = if include_timing { r.elapsed_ms } else { 0.0 };
            let _ = writeln!(
                out,
                "{},{:?},{:?},{:?}",
                r.iteration, r.energy, r.grad_norm, t
            );
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut r = RunRecord::new("vqe", 3);
        r.rows.push(TraceRow {
            iteration: 0,
            energy: -1.5,
            grad_norm: 0.25,
            elapsed_ms: 12.5,
            stage: 0,
        });
        assert_eq!(
            r.trace_csv(false),
            "iter,energy,grad_norm,elapsed_ms\n0,-1.5,0.25,0.0\n"
        );
        assert!(r.trace_csv(true).ends_with("0,-1.5,0.25,12.5\n"));
    }

    #[test]
    fn json_round_trip() {
        let mut r = RunRecord::new("adapt", 9);
        r.final_energy = -2.0;
        r.selection.push(SelectionRound {
            round: 0,
            operators: vec![3, 1],
            gradients: vec![0.5, -0.2],
            max_excluded_gradient: 0.01,
        });
        let back: RunRecord = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
    }
}
