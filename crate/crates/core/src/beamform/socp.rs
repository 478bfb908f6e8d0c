//! Solver-agnostic second-order cone programs in standard form.
//!
//! A problem minimises `cᵀx` over real `x` subject to a list of cone blocks.
//! Each block constrains a stack of affine expressions `(e₁, …, e_k)` to lie
//! in either the zero cone (all `eᵢ = 0`) or the second-order cone
//! (`e₁ ≥ ‖(e₂, …, e_k)‖`).

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

/// `constant + Σ coef·x[var]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AffineExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl AffineExpr {
    pub fn constant(c: f64) -> Self {
        Self {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn var(index: usize, coef: f64) -> Self {
        Self {
            terms: vec![(index, coef)],
            constant: 0.0,
        }
    }

    pub fn linear(terms: Vec<(usize, f64)>) -> Self {
        Self {
            terms,
            constant: 0.0,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(i, c)| c * x[i]).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeKind {
    Zero,
    SecondOrder,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeBlock {
    pub kind: ConeKind,
    pub rows: Vec<AffineExpr>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConicProblem {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub blocks: Vec<ConeBlock>,
}

impl ConicProblem {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            objective: vec![0.0; num_vars],
            blocks: Vec::new(),
        }
    }

    pub fn push(&mut self, kind: ConeKind, rows: Vec<AffineExpr>) {
        self.blocks.push(ConeBlock { kind, rows });
    }

    /// Largest violation of any cone constraint at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                let v: Vec<f64> = b.rows.iter().map(|e| e.eval(x)).collect();
                match b.kind {
                    ConeKind::Zero => v.iter().fold(0.0f64, |a, e| a.max(e.abs())),
                    ConeKind::SecondOrder => {
                        let tail = v[1..].iter().map(|e| e * e).sum::<f64>().sqrt();
                        (tail - v[0]).max(0.0)
                    }
                }
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConicStatus {
    Optimal,
    /// Optimal to reduced accuracy.
    NearOptimal,
    Infeasible,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicSolution {
    pub status: ConicStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub gap_rel: f64,
    pub iterations: u32,
}

pub trait ConicSolver {
    fn solve(&self, problem: &ConicProblem) -> ConicSolution;
}

/// Interior-point backend built on Clarabel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClarabelSolver {
    pub tol_gap_abs: f64,
    pub tol_gap_rel: f64,
    pub tol_feas: f64,
    pub max_iter: u32,
}

impl Default for ClarabelSolver {
    fn default() -> Self {
        Self {
            tol_gap_abs: 1e-10,
            tol_gap_rel: 1e-10,
            tol_feas: 1e-10,
            max_iter: 200,
        }
    }
}

impl ConicSolver for ClarabelSolver {
    /// A run that stalls numerically is repeated once without equilibration
    /// and with lighter regularization, which copes better with problems
    /// sitting right at the feasibility boundary.
    fn solve(&self, problem: &ConicProblem) -> ConicSolution {
        let first = self.solve_with(problem, true, 1e-8);
        match first.status {
            ConicStatus::Failed(_) => self.solve_with(problem, false, 1e-10),
            _ => first,
        }
    }
}

impl ClarabelSolver {
    fn solve_with(&self, problem: &ConicProblem, equilibrate: bool, regularization: f64) -> ConicSolution {
        let n = problem.num_vars;
        let p = CscMatrix::new(n, n, vec![0; n + 1], Vec::new(), Vec::new());

        // Clarabel form: A x + s = b with s in K, so s = e(x) gives
        // b = constant and A = -coefficients.
        let mut rows = Vec::new();
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut b = Vec::new();
        let mut cones = Vec::with_capacity(problem.blocks.len());
        for block in &problem.blocks {
            for expr in &block.rows {
                let r = b.len();
                for &(j, c) in &expr.terms {
                    if c != 0.0 {
                        rows.push(r);
                        cols.push(j);
                        vals.push(-c);
                    }
                }
                b.push(expr.constant);
            }
            cones.push(match block.kind {
                ConeKind::Zero => SupportedConeT::ZeroConeT(block.rows.len()),
                ConeKind::SecondOrder => SupportedConeT::SecondOrderConeT(block.rows.len()),
            });
        }
        let a = CscMatrix::new_from_triplets(b.len(), n, rows, cols, vals);

        let settings = DefaultSettingsBuilder::default()
            .verbose(false)
            .tol_gap_abs(self.tol_gap_abs)
            .tol_gap_rel(self.tol_gap_rel)
            .tol_feas(self.tol_feas)
            .max_iter(self.max_iter)
            .presolve_enable(false)
            .equilibrate_enable(equilibrate)
            .static_regularization_constant(regularization)
            .build()
            .expect("valid solver settings");

        let mut solver = match DefaultSolver::new(&p, &problem.objective, &a, &b, &cones, settings) {
            Ok(s) => s,
            Err(e) => {
                return ConicSolution {
                    status: ConicStatus::Failed(format!("setup: {e}")),
                    x: vec![0.0; n],
                    objective: f64::NAN,
                    gap_rel: f64::NAN,
                    iterations: 0,
                }
            }
        };
        solver.solve();
        let status = match solver.solution.status {
            SolverStatus::Solved => ConicStatus::Optimal,
            SolverStatus::AlmostSolved => ConicStatus::NearOptimal,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                ConicStatus::Infeasible
            }
            other => ConicStatus::Failed(format!("{other:?}")),
        };
        ConicSolution {
            status,
            x: solver.solution.x.clone(),
            objective: solver.solution.obj_val,
            gap_rel: solver.info.gap_rel,
            iterations: solver.info.iterations,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_onto_halfplane() {
        // min t  s.t.  ‖(x - 3, y - 4)‖ ≤ t,  x + y = 1.
        // Distance from (3, 4) to the line x + y = 1 is 6/√2.
        let mut p = ConicProblem::new(3);
        p.objective[0] = 1.0;
        p.push(
            ConeKind::SecondOrder,
            vec![
                AffineExpr::var(0, 1.0),
                AffineExpr { terms: vec![(1, 1.0)], constant: -3.0 },
                AffineExpr { terms: vec![(2, 1.0)], constant: -4.0 },
            ],
        );
        p.push(
            ConeKind::Zero,
            vec![AffineExpr { terms: vec![(1, 1.0), (2, 1.0)], constant: -1.0 }],
        );
        let s = ClarabelSolver::default().solve(&p);
        assert_eq!(s.status, ConicStatus::Optimal);
        assert!((s.objective - 6.0 / 2f64.sqrt()).abs() < 1e-8);
        assert!((s.x[1] - 0.0).abs() < 1e-7 && (s.x[2] - 1.0).abs() < 1e-7);
        assert!(p.max_violation(&s.x) < 1e-8);
    }

    #[test]
    fn contradictory_cones_are_infeasible() {
        // ‖x‖ ≤ 1 and x = 2.
        let mut p = ConicProblem::new(1);
        p.push(
            ConeKind::SecondOrder,
            vec![AffineExpr::constant(1.0), AffineExpr::var(0, 1.0)],
        );
        p.push(
            ConeKind::Zero,
            vec![AffineExpr { terms: vec![(0, 1.0)], constant: -2.0 }],
        );
        assert_eq!(ClarabelSolver::default().solve(&p).status, ConicStatus::Infeasible);
    }
}
