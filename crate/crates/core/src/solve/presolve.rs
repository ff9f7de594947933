//! Bound propagation that keeps the LP feasible region unchanged.
//!
//! A row with zero slack at its extreme activity pins every variable to the
//! bound that attains that extreme; a row that holds at every point of the
//! box is dropped. Fixed variables are substituted out, which can split a
//! block that was held together by such rows.

use crate::ilp::{IlpModel, LinearConstraint, Sense};

#[derive(Clone, Debug, PartialEq)]
pub struct Presolved {
    /// Same variables as the input; fixed ones appear in no row and carry
    /// no cost.
    pub model: IlpModel,
    pub fixed: Vec<Option<f64>>,
    pub infeasible: bool,
}

/// Σ a·x over fixed columns, and min/max activity over the open ones.
fn activity(c: &LinearConstraint, fixed: &[Option<i64>]) -> (i64, i64, i64) {
    let (mut base, mut lo, mut hi) = (0, 0, 0);
    for &(j, a) in &c.terms {
        match fixed[j] {
            Some(v) => base += a * v,
            None if a < 0 => lo += a,
            None => hi += a,
        }
    }
    (base, lo, hi)
}

pub fn presolve(model: &IlpModel) -> Presolved {
    let n = model.num_vars();
    let mut fixed: Vec<Option<i64>> = vec![None; n];
    let mut infeasible = false;
    let mut changed = true;
    while changed && !infeasible {
        changed = false;
        for c in &model.constraints {
            let (base, lo, hi) = activity(c, &fixed);
            let r = c.rhs - base;
            let (at_min, at_max) = match c.sense {
                Sense::Le => (lo == r, false),
                Sense::Ge => (false, hi == r),
                Sense::Eq => (lo == r, hi == r),
            };
            let violated = match c.sense {
                Sense::Le => lo > r,
                Sense::Ge => hi < r,
                Sense::Eq => lo > r || hi < r,
            };
            if violated {
                infeasible = true;
                break;
            }
            if !(at_min || at_max) {
                continue;
            }
            for &(j, a) in &c.terms {
                if fixed[j].is_none() {
                    // at the minimum, positive coefficients sit at 0
                    fixed[j] = Some(i64::from((a > 0) != at_min));
                    changed = true;
                }
            }
        }
    }

    let mut out = model.clone();
    out.constraints.clear();
    for c in &model.constraints {
        let (base, lo, hi) = activity(c, &fixed);
        let r = c.rhs - base;
        let redundant = match c.sense {
            Sense::Le => hi <= r,
            Sense::Ge => lo >= r,
            Sense::Eq => lo == r && hi == r,
        };
        if redundant {
            continue;
        }
        out.constraints.push(LinearConstraint {
            terms: c.terms.iter().copied().filter(|&(j, _)| fixed[j].is_none()).collect(),
            sense: c.sense,
            rhs: r,
            tag: c.tag,
        });
    }
    out.objective.retain(|&(j, a)| match fixed[j] {
        Some(v) => {
            out.offset += a * v;
            false
        }
        None => true,
    });
    Presolved { model: out, fixed: fixed.into_iter().map(|v| v.map(|v| v as f64)).collect(), infeasible }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ilp::{Mode, Tag, VarId, Variable};
    use crate::relcore::TupleId;

    fn model(n: usize, rows: Vec<(Vec<(usize, i64)>, Sense, i64)>) -> IlpModel {
        let mut m = IlpModel::empty(Mode::Naive);
        m.variables = (0..n).map(|i| Variable { id: VarId::Tuple(TupleId(i as u32)), integer: true }).collect();
        m.objective = (0..n).map(|j| (j, -1)).collect();
        m.constraints =
            rows.into_iter().map(|(terms, sense, rhs)| LinearConstraint { terms, sense, rhs, tag: Tag::Pc1 }).collect();
        m
    }

    #[test]
    fn tight_row_fixes_and_splits() {
        // x0 + x1 <= 0 pins both; x0 - x2 <= 0 and x1 - x3 <= 0 then drop.
        let m = model(
            4,
            vec![
                (vec![(0, 1), (1, 1)], Sense::Le, 0),
                (vec![(0, 1), (2, -1)], Sense::Le, 0),
                (vec![(1, 1), (3, -1)], Sense::Le, 0),
            ],
        );
        let p = presolve(&m);
        assert!(!p.infeasible);
        assert_eq!(p.fixed, vec![Some(0.0), Some(0.0), None, None]);
        assert!(p.model.constraints.is_empty());
        assert_eq!(p.model.objective, vec![(2, -1), (3, -1)]);
    }

    #[test]
    fn fixes_propagate_to_upper_bounds() {
        // x0 >= 1 fixes x0 = 1, after which x0 + x1 <= 1 fixes x1 = 0.
        let m = model(
            2,
            vec![(vec![(0, 1)], Sense::Ge, 1), (vec![(0, 1), (1, 1)], Sense::Le, 1)],
        );
        let p = presolve(&m);
        assert_eq!(p.fixed, vec![Some(1.0), Some(0.0)]);
        assert_eq!(p.model.offset, -1);
    }

    #[test]
    fn conflicting_rows_are_infeasible() {
        let m = model(1, vec![(vec![(0, 1)], Sense::Ge, 1), (vec![(0, 1)], Sense::Le, 0)]);
        assert!(presolve(&m).infeasible);
    }

    #[test]
    fn slack_rows_are_kept() {
        let m = model(3, vec![(vec![(0, 1), (1, 1), (2, 1)], Sense::Ge, 1)]);
        let p = presolve(&m);
        assert_eq!(p.fixed, vec![None; 3]);
        assert_eq!(p.model.constraints, m.constraints);
    }
}
