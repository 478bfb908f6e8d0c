//! Grid-and-refine search over the common rate scale φ.
//!
//! The objective is evaluated on a uniform grid over `[0, φ_max]`, then on
//! finer grids around the incumbent. Two follow-ups sharpen the result: when
//! the incumbent borders an infeasible point, the feasibility boundary is
//! bisected, and when it is bracketed by feasible neighbours a golden-section
//! pass closes the bracket. Infeasible points score `+∞`.

use crate::model::PhiSearch;

const BISECTION_REL_TOL: f64 = 1e-9;
const GOLDEN_REL_TOL: f64 = 1e-9;
const MAX_BISECTIONS: usize = 80;

#[derive(Debug, Clone)]
pub struct SearchOutcome<T> {
    pub phi: f64,
    pub value: f64,
    pub payload: T,
    pub evaluations: usize,
    /// More than one local minimum was seen on the coarse grid.
    pub multimodal: bool,
}

struct State<T> {
    points: Vec<(f64, f64)>,
    best: Option<(f64, f64, T)>,
    evaluations: usize,
}

impl<T> State<T> {
    fn insert(&mut self, phi: f64, value: f64) {
        let i = self.points.partition_point(|p| p.0 < phi);
        if self.points.get(i).is_some_and(|p| p.0 == phi) {
            return;
        }
        self.points.insert(i, (phi, value));
    }

    fn best_index(&self) -> usize {
        let best_phi = self.best.as_ref().map_or(0.0, |b| b.0);
        self.points.partition_point(|p| p.0 < best_phi)
    }

    fn best_value(&self) -> f64 {
        self.best.as_ref().map_or(f64::INFINITY, |b| b.1)
    }
}

/// Minimise `eval` over `[0, phi_max]`. `eval` returns `Ok(None)` for an
/// infeasible point and `Ok(Some((value, payload)))` otherwise.
pub fn search_phi<T, E>(
    phi_max: f64,
    knobs: &PhiSearch,
    mut eval: impl FnMut(f64) -> Result<Option<(f64, T)>, E>,
) -> Result<Option<SearchOutcome<T>>, E> {
    let mut st = State {
        points: Vec::new(),
        best: None,
        evaluations: 0,
    };
    let mut probe = |st: &mut State<T>, phi: f64| -> Result<f64, E> {
        st.evaluations += 1;
        let value = match eval(phi)? {
            Some((v, payload)) => {
                if v < st.best_value() || (v == st.best_value() && st.best.as_ref().is_some_and(|b| phi < b.0)) {
                    st.best = Some((phi, v, payload));
                }
                v
            }
            None => f64::INFINITY,
        };
        st.insert(phi, value);
        Ok(value)
    };

    if !(phi_max > 0.0) {
        probe(&mut st, 0.0)?;
        return Ok(finish(st, false));
    }

    let g = knobs.grid_points.max(2);
    for i in 0..g {
        let phi = if i + 1 == g {
            phi_max
        } else {
            phi_max * i as f64 / (g - 1) as f64
        };
        probe(&mut st, phi)?;
    }
    let multimodal = count_local_minima(&st.points) > 1;
    if multimodal {
        log::warn!("objective has several local minima over phi in [0, {phi_max}]");
    }

    for _ in 0..knobs.refine_rounds {
        if st.best.is_none() {
            break;
        }
        let b = st.best_index();
        let lo = st.points[b.saturating_sub(1)].0;
        let hi = st.points[(b + 1).min(st.points.len() - 1)].0;
        let r = knobs.refine_points;
        for j in 1..=r {
            probe(&mut st, lo + (hi - lo) * j as f64 / (r + 1) as f64)?;
        }
    }

    // Feasibility boundary just right of the incumbent.
    if st.best.is_some() {
        let b = st.best_index();
        if b + 1 < st.points.len() && st.points[b + 1].1.is_infinite() {
            let (mut lo, mut hi) = (st.points[b].0, st.points[b + 1].0);
            for _ in 0..MAX_BISECTIONS {
                if hi - lo <= BISECTION_REL_TOL * phi_max {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                let before = st.best_value();
                let v = probe(&mut st, mid)?;
                if v.is_infinite() {
                    hi = mid;
                } else if v < before {
                    lo = mid;
                } else {
                    break;
                }
            }
        }
    }

    // Interior minimum bracketed by feasible neighbours.
    if st.best.is_some() {
        let b = st.best_index();
        if b > 0
            && b + 1 < st.points.len()
            && st.points[b - 1].1.is_finite()
            && st.points[b + 1].1.is_finite()
        {
            let (mut a, mut d) = (st.points[b - 1].0, st.points[b + 1].0);
            let ratio = 0.5 * (5f64.sqrt() - 1.0);
            let mut x1 = d - ratio * (d - a);
            let mut x2 = a + ratio * (d - a);
            let mut f1 = probe(&mut st, x1)?;
            let mut f2 = probe(&mut st, x2)?;
            while d - a > GOLDEN_REL_TOL * phi_max {
                if f1 <= f2 {
                    d = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = d - ratio * (d - a);
                    f1 = probe(&mut st, x1)?;
                } else {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + ratio * (d - a);
                    f2 = probe(&mut st, x2)?;
                }
            }
        }
    }

    Ok(finish(st, multimodal))
}

fn finish<T>(st: State<T>, multimodal: bool) -> Option<SearchOutcome<T>> {
    st.best.map(|(phi, value, payload)| SearchOutcome {
        phi,
        value,
        payload,
        evaluations: st.evaluations,
        multimodal,
    })
}

fn count_local_minima(points: &[(f64, f64)]) -> usize {
    let v: Vec<f64> = points.iter().map(|p| p.1).collect();
    (0..v.len())
        .filter(|&i| {
            v[i].is_finite()
                && (i == 0 || v[i] < v[i - 1])
                && (i + 1 == v.len() || v[i] < v[i + 1])
        })
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    fn run(phi_max: f64, f: impl Fn(f64) -> Option<f64>) -> SearchOutcome<()> {
        search_phi::<(), Infallible>(phi_max, &PhiSearch::default(), |x| Ok(f(x).map(|v| (v, ()))))
            .unwrap()
            .unwrap()
    }

    #[test]
    fn decreasing_objective_ends_at_upper_bound() {
        let out = run(2.0, |x| Some(-x));
        assert_eq!(out.phi, 2.0);
        assert!(!out.multimodal);
    }

    #[test]
    fn feasibility_boundary_is_bisected() {
        let edge = 1.234_567_89;
        let out = run(3.0, |x| (x <= edge).then_some(-x));
        assert!((out.phi - edge).abs() <= 3e-9 * 3.0, "{}", out.phi);
        assert!(out.phi <= edge);
    }

    #[test]
    fn interior_minimum_located() {
        let out = run(5.0, |x| Some((x - 1.7).powi(2) + 0.3));
        assert!((out.phi - 1.7).abs() < 1e-7, "{}", out.phi);
        assert!((out.value - 0.3).abs() < 1e-12);
    }

    #[test]
    fn zero_upper_bound_evaluates_origin_only() {
        let out = run(0.0, |x| Some(x + 4.0));
        assert_eq!(out.phi, 0.0);
        assert_eq!(out.evaluations, 1);
    }

    #[test]
    fn multimodality_flagged() {
        let out = run(10.0, |x| Some((x * 2.0).sin() + 0.01 * x));
        assert!(out.multimodal);
    }

    #[test]
    fn never_worse_than_origin() {
        for c in [-3.0, -0.1, 0.0, 0.5, 2.0] {
            let f = move |x: f64| Some((x * x).exp_m1() + c * x);
            let out = run(1.5, f);
            assert!(out.value <= f(0.0).unwrap());
        }
    }
}
