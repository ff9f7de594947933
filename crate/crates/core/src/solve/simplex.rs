//! Dense bounded-variable primal simplex (two phases, tableau form).
//!
//! Every row gets a slack so that `a·x + s = b`; the slack's bounds encode
//! the row sense. Rows whose slack cannot absorb the starting point get an
//! artificial column and phase I drives those to zero. Pricing is Dantzig's
//! rule, switching to Bland's rule after a run of degenerate pivots.

use crate::ilp::Sense;

#[derive(Clone, Debug, PartialEq)]
pub struct LpProblem {
    pub cost: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<LpRow>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpRow {
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl LpProblem {
    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.cost.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest bound or row violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        for r in &self.rows {
            let a: f64 = r.terms.iter().map(|&(j, c)| c * x[j]).sum();
            let v = match r.sense {
                Sense::Le => a - r.rhs,
                Sense::Ge => r.rhs - a,
                Sense::Eq => (a - r.rhs).abs(),
            };
            worst = worst.max(v);
        }
        worst
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimplexStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Iteration limit hit or the final point failed the feasibility check.
    NumericalFailure,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimplexResult {
    pub status: SimplexStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimplexOptions {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub pivot_tol: f64,
    /// `None` means `20·(rows + columns) + 1000`.
    pub max_iterations: Option<usize>,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            feasibility_tol: 1e-7,
            optimality_tol: 1e-9,
            pivot_tol: 1e-9,
            max_iterations: None,
            bland_after: 50,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum At {
    Basic,
    Lower,
    Upper,
}

struct Tableau<'o> {
    m: usize,
    ncols: usize,
    /// Row-major `m × ncols`, holds B⁻¹A.
    t: Vec<f64>,
    beta: Vec<f64>,
    head: Vec<usize>,
    state: Vec<At>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    cost: Vec<f64>,
    d: Vec<f64>,
    opts: &'o SimplexOptions,
    iterations: usize,
    limit: usize,
    degenerate_run: usize,
}

enum Step {
    Optimal,
    Unbounded,
    Continue,
}

impl Tableau<'_> {
    fn row(&self, i: usize) -> &[f64] {
        &self.t[i * self.ncols..(i + 1) * self.ncols]
    }

    fn value_nonbasic(&self, j: usize) -> f64 {
        match self.state[j] {
            At::Lower => self.lb[j],
            At::Upper => self.ub[j],
            At::Basic => unreachable!("basic column has no bound value"),
        }
    }

    fn recompute_reduced_costs(&mut self) {
        self.d = self.cost.clone();
        for i in 0..self.m {
            let cb = self.cost[self.head[i]];
            if cb != 0.0 {
                let row = &self.t[i * self.ncols..(i + 1) * self.ncols];
                for (dj, &tij) in self.d.iter_mut().zip(row) {
                    *dj -= cb * tij;
                }
            }
        }
        for i in 0..self.m {
            self.d[self.head[i]] = 0.0;
        }
    }

    fn price(&self) -> Option<(usize, f64)> {
        let tol = self.opts.optimality_tol;
        let bland = self.degenerate_run >= self.opts.bland_after;
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.ncols {
            let dir = match self.state[j] {
                At::Basic => continue,
                At::Lower if self.d[j] < -tol && self.ub[j] > self.lb[j] => 1.0,
                At::Upper if self.d[j] > tol && self.ub[j] > self.lb[j] => -1.0,
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            if best.is_none_or(|(b, _)| self.d[j].abs() > self.d[b].abs()) {
                best = Some((j, dir));
            }
        }
        best
    }

    fn step(&mut self) -> Step {
        let Some((q, dir)) = self.price() else { return Step::Optimal };
        let ptol = self.opts.pivot_tol;
        let bland = self.degenerate_run >= self.opts.bland_after;

        // Largest step keeping every basic variable within bounds.
        let mut theta = self.ub[q] - self.lb[q];
        let mut leave: Option<(usize, At)> = None;
        let mut leave_mag = 0.0;
        for i in 0..self.m {
            let a = self.t[i * self.ncols + q] * dir;
            if a.abs() <= ptol {
                continue;
            }
            let h = self.head[i];
            // basic value moves by -theta * a
            let (limit, to) = if a > 0.0 {
                if self.lb[h] == f64::NEG_INFINITY {
                    continue;
                }
                (((self.beta[i] - self.lb[h]) / a).max(0.0), At::Lower)
            } else {
                if self.ub[h] == f64::INFINITY {
                    continue;
                }
                (((self.beta[i] - self.ub[h]) / a).max(0.0), At::Upper)
            };
            let better = if limit < theta - 1e-12 {
                true
            } else if limit <= theta + 1e-12 {
                match leave {
                    Some((r, _)) if bland => h < self.head[r],
                    Some(_) => a.abs() > leave_mag,
                    None => false,
                }
            } else {
                false
            };
            if better {
                theta = theta.min(limit);
                leave = Some((i, to));
                leave_mag = a.abs();
            }
        }
        if theta == f64::INFINITY {
            return Step::Unbounded;
        }
        self.iterations += 1;
        if theta <= 1e-12 {
            self.degenerate_run += 1;
        } else {
            self.degenerate_run = 0;
        }

        // Update basic values.
        if theta != 0.0 {
            for i in 0..self.m {
                let a = self.t[i * self.ncols + q];
                if a != 0.0 {
                    self.beta[i] -= theta * dir * a;
                }
            }
        }

        match leave {
            None => {
                // bound flip
                self.state[q] = if dir > 0.0 { At::Upper } else { At::Lower };
            }
            Some((r, to)) => {
                let entering_value = self.value_nonbasic(q) + theta * dir;
                let leaving = self.head[r];
                self.pivot(r, q);
                self.beta[r] = entering_value;
                self.state[leaving] = to;
                self.state[q] = At::Basic;
            }
        }
        Step::Continue
    }

    /// Makes column `q` basic in row `r`.
    fn pivot(&mut self, r: usize, q: usize) {
        let n = self.ncols;
        let p = self.t[r * n + q];
        {
            let row = &mut self.t[r * n..(r + 1) * n];
            for v in row.iter_mut() {
                *v /= p;
            }
            row[q] = 1.0;
        }
        let nz: Vec<usize> = (0..n).filter(|&j| self.t[r * n + j] != 0.0).collect();
        let pivot_row: Vec<f64> = nz.iter().map(|&j| self.t[r * n + j]).collect();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * n + q];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * n..(i + 1) * n];
            for (&j, &v) in nz.iter().zip(&pivot_row) {
                let x = row[j] - f * v;
                row[j] = if x.abs() < 1e-13 { 0.0 } else { x };
            }
            row[q] = 0.0;
        }
        let f = self.d[q];
        if f != 0.0 {
            for (&j, &v) in nz.iter().zip(&pivot_row) {
                self.d[j] -= f * v;
            }
            self.d[q] = 0.0;
        }
        self.head[r] = q;
    }

    fn run(&mut self) -> Result<bool, ()> {
        loop {
            if self.iterations >= self.limit {
                return Err(());
            }
            match self.step() {
                Step::Optimal => return Ok(true),
                Step::Unbounded => return Ok(false),
                Step::Continue => {}
            }
        }
    }

    fn column_values(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.ncols];
        for j in 0..self.ncols {
            if self.state[j] != At::Basic {
                x[j] = self.value_nonbasic(j);
            }
        }
        for i in 0..self.m {
            x[self.head[i]] = self.beta[i];
        }
        x
    }
}

/// Solves `min c·x` over the rows and bounds of `p`.
pub fn solve(p: &LpProblem, opts: &SimplexOptions) -> SimplexResult {
    let n = p.num_vars();
    let m = p.rows.len();
    let fail = |status: SimplexStatus, iterations: usize| SimplexResult {
        status,
        x: vec![0.0; n],
        objective: f64::NAN,
        iterations,
    };
    if (0..n).any(|j| p.lower[j] > p.upper[j] + opts.feasibility_tol) {
        return fail(SimplexStatus::Infeasible, 0);
    }

    // Free columns get a wide box; every column then starts at its lower
    // bound when finite, otherwise at its upper bound.
    let mut lb = p.lower.clone();
    let mut ub = p.upper.clone();
    for j in 0..n {
        if !lb[j].is_finite() && !ub[j].is_finite() {
            lb[j] = -1e9;
            ub[j] = 1e9;
        }
    }
    let mut state: Vec<At> = (0..n).map(|j| if lb[j].is_finite() { At::Lower } else { At::Upper }).collect();
    let x0: Vec<f64> = (0..n).map(|j| if lb[j].is_finite() { lb[j] } else { ub[j] }).collect();

    // Slack bounds and artificials.
    let mut art_rows = Vec::new();
    let mut slack_val = vec![0.0; m];
    let mut art_sign = vec![0.0; m];
    for (i, r) in p.rows.iter().enumerate() {
        let act: f64 = r.terms.iter().map(|&(j, c)| c * x0[j]).sum();
        let s = r.rhs - act;
        let (slo, shi) = match r.sense {
            Sense::Le => (0.0, f64::INFINITY),
            Sense::Ge => (f64::NEG_INFINITY, 0.0),
            Sense::Eq => (0.0, 0.0),
        };
        lb.push(slo);
        ub.push(shi);
        if s < slo - opts.feasibility_tol || s > shi + opts.feasibility_tol {
            let clamp = s.clamp(slo, shi);
            slack_val[i] = clamp;
            art_sign[i] = if s - clamp > 0.0 { 1.0 } else { -1.0 };
            art_rows.push(i);
        } else {
            slack_val[i] = s.clamp(slo, shi);
        }
    }
    let n_art = art_rows.len();
    let ncols = n + m + n_art;
    for _ in 0..n_art {
        lb.push(0.0);
        ub.push(f64::INFINITY);
    }

    let mut t = vec![0.0; m * ncols];
    let mut head = vec![0; m];
    let mut beta = vec![0.0; m];
    for (i, r) in p.rows.iter().enumerate() {
        for &(j, c) in &r.terms {
            t[i * ncols + j] += c;
        }
        t[i * ncols + n + i] = 1.0;
        head[i] = n + i;
        beta[i] = slack_val[i];
    }
    for (k, &i) in art_rows.iter().enumerate() {
        let col = n + m + k;
        // Row i: a·x + s + sign·r = b. Express with r basic: divide row by sign.
        let sign = art_sign[i];
        t[i * ncols + col] = sign;
        let act: f64 = p.rows[i].terms.iter().map(|&(j, c)| c * x0[j]).sum();
        let resid = p.rows[i].rhs - act - slack_val[i];
        for v in &mut t[i * ncols..(i + 1) * ncols] {
            *v *= sign;
        }
        head[i] = col;
        beta[i] = resid * sign;
    }
    // Slack columns of artificial rows are nonbasic at their clamped bound.
    state.extend((0..m).map(|i| {
        if head[i] == n + i {
            At::Basic
        } else if slack_val[i] == lb[n + i] {
            At::Lower
        } else {
            At::Upper
        }
    }));
    state.extend((0..n_art).map(|_| At::Basic));

    let limit = opts.max_iterations.unwrap_or(20 * (m + ncols) + 1000);
    let mut tab = Tableau {
        m,
        ncols,
        t,
        beta,
        head,
        state,
        lb,
        ub,
        cost: vec![0.0; ncols],
        d: Vec::new(),
        opts,
        iterations: 0,
        limit,
        degenerate_run: 0,
    };

    if n_art > 0 {
        for k in 0..n_art {
            tab.cost[n + m + k] = 1.0;
        }
        tab.recompute_reduced_costs();
        match tab.run() {
            Err(()) => return fail(SimplexStatus::NumericalFailure, tab.iterations),
            Ok(false) => return fail(SimplexStatus::NumericalFailure, tab.iterations),
            Ok(true) => {}
        }
        let infeas: f64 = (0..m).filter(|&i| tab.head[i] >= n + m).map(|i| tab.beta[i]).sum();
        if infeas > opts.feasibility_tol * (1.0 + n_art as f64) {
            return fail(SimplexStatus::Infeasible, tab.iterations);
        }
        // Lock artificials at zero and drive them out of the basis.
        for k in 0..n_art {
            let col = n + m + k;
            tab.ub[col] = 0.0;
            tab.cost[col] = 0.0;
            if tab.state[col] == At::Upper {
                tab.state[col] = At::Lower;
            }
        }
        for r in 0..m {
            if tab.head[r] < n + m {
                continue;
            }
            tab.beta[r] = 0.0;
            let row = tab.row(r);
            let q = (0..n + m)
                .filter(|&j| tab.state[j] != At::Basic && row[j].abs() > 1e-7)
                .max_by(|&a, &b| row[a].abs().total_cmp(&row[b].abs()));
            if let Some(q) = q {
                let leaving = tab.head[r];
                let v = tab.value_nonbasic(q);
                tab.pivot(r, q);
                tab.beta[r] = v;
                tab.state[leaving] = At::Lower;
                tab.state[q] = At::Basic;
            }
        }
    }

    tab.cost[..n].copy_from_slice(&p.cost);
    tab.degenerate_run = 0;
    tab.recompute_reduced_costs();
    let status = match tab.run() {
        Err(()) => SimplexStatus::NumericalFailure,
        Ok(false) => SimplexStatus::Unbounded,
        Ok(true) => SimplexStatus::Optimal,
    };
    if status != SimplexStatus::Optimal {
        return fail(status, tab.iterations);
    }
    let mut x: Vec<f64> = tab.column_values()[..n].to_vec();
    for (j, v) in x.iter_mut().enumerate() {
        // clean roundoff against bounds
        if (*v - p.lower[j]).abs() < 1e-11 {
            *v = p.lower[j];
        } else if (*v - p.upper[j]).abs() < 1e-11 {
            *v = p.upper[j];
        }
    }
    if p.max_violation(&x) > opts.feasibility_tol {
        return fail(SimplexStatus::NumericalFailure, tab.iterations);
    }
    SimplexResult { status: SimplexStatus::Optimal, objective: p.objective(&x), x, iterations: tab.iterations }
}
