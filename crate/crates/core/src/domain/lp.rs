//! Thin wrapper over the `microlp` simplex solver.

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use crate::error::{Error, Result};

pub(crate) enum LpOutcome {
    Optimal { objective: f64, values: Vec<f64> },
    Unbounded,
    Infeasible,
}

#[derive(Clone, Copy)]
pub(crate) enum Cmp {
    Eq,
    Ge,
}

/// Dense linear program `max c·x` subject to `rows` and per-variable bounds.
pub(crate) struct DenseLp {
    pub objective: Vec<f64>,
    pub bounds: Vec<(f64, f64)>,
    pub rows: Vec<(Vec<f64>, Cmp, f64)>,
}

impl DenseLp {
    pub fn new(objective: Vec<f64>, bounds: Vec<(f64, f64)>) -> Self {
        Self {
            objective,
            bounds,
            rows: Vec::new(),
        }
    }

    pub fn constrain(&mut self, coeffs: Vec<f64>, cmp: Cmp, rhs: f64) {
        self.rows.push((coeffs, cmp, rhs));
    }

    pub fn maximize(&self) -> Result<LpOutcome> {
        let mut problem = Problem::new(OptimizationDirection::Maximize);
        let vars: Vec<_> = self
            .objective
            .iter()
            .zip(&self.bounds)
            .map(|(c, b)| problem.add_var(*c, *b))
            .collect();
        for (coeffs, cmp, rhs) in &self.rows {
            let expr: Vec<_> = coeffs
                .iter()
                .zip(&vars)
                .filter(|(c, _)| **c != 0.0)
                .map(|(c, v)| (*v, *c))
                .collect();
            let op = match cmp {
                Cmp::Eq => ComparisonOp::Eq,
                Cmp::Ge => ComparisonOp::Ge,
            };
            problem.add_constraint(expr, op, *rhs);
        }
        match problem.solve() {
            Ok(outcome) => {
                let solution = outcome
                    .into_solution()
                    .map_err(|_| Error::NumericalFailure("LP solve interrupted".into()))?;
                Ok(LpOutcome::Optimal {
                    objective: solution.objective(),
                    values: vars.iter().map(|v| solution.var_value(*v)).collect(),
                })
            }
            Err(microlp::Error::Unbounded) => Ok(LpOutcome::Unbounded),
            Err(microlp::Error::Infeasible) => Ok(LpOutcome::Infeasible),
            Err(e) => Err(Error::NumericalFailure(format!("LP solver: {e}"))),
        }
    }
}
