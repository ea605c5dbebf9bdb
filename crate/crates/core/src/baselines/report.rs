use serde::{Deserialize, Serialize};

/// Outcome of a convex solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    /// Weight vector, or a matrix flattened row-major with `shape = (rows, cols)`.
    pub solution: Vec<f64>,
    pub shape: (usize, usize),
    pub objective: f64,
    /// `‖Xw − y‖∞`
    pub feasibility_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// KKT violation, duality gap or ADMM residual, depending on the solver.
    pub certificate: f64,
    /// Objective after each iteration, when requested.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<f64>,
}

impl SolverReport {
    pub(crate) fn vector(solution: Vec<f64>) -> Self {
        let n = solution.len();
        SolverReport {
            solution,
            shape: (n, 1),
            objective: 0.0,
            feasibility_residual: 0.0,
            iterations: 0,
            converged: true,
            certificate: 0.0,
            trace: Vec::new(),
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.solution.iter().zip(x).map(|(a, b)| a * b).sum()
    }
}
