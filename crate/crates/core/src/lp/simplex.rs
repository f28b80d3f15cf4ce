use super::{dotf, LpOptions, LpProblem, LpSolution, LpStatus};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum State {
    Basic,
    Lower,
    Upper,
}

/// Working problem: shifted to zero lower bounds, rows sign-normalized so the
/// shifted rhs is nonnegative, with one artificial column per row appended.
struct Work<'a> {
    p: &'a LpProblem,
    opts: &'a LpOptions,
    m: usize,
    n: usize,
    sign: Vec<f64>,
    /// Sign-normalized structural columns, compressed.
    start: Vec<usize>,
    index: Vec<usize>,
    value: Vec<f64>,
    b: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    state: Vec<State>,
    basis: Vec<usize>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    /// Reduced costs, exact after each refactor and updated by pivot rows between.
    d: Vec<f64>,
    /// Devex reference weights.
    weight: Vec<f64>,
    bland: bool,
    degenerate_run: usize,
    since_refactor: usize,
    iterations: usize,
    max_iterations: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
}

pub(super) fn run(p: &LpProblem, opts: &LpOptions) -> Result<LpSolution> {
    let m = p.rows;
    let n = p.cols;
    let mut b = p.rhs.clone();
    for j in 0..n {
        let l = p.lower[j];
        if l != 0.0 {
            for (bi, aij) in b.iter_mut().zip(p.column(j)) {
                *bi -= aij * l;
            }
        }
    }
    let sign: Vec<f64> = b.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
    for (bi, s) in b.iter_mut().zip(&sign) {
        *bi *= s;
    }
    let mut upper: Vec<f64> = (0..n)
        .map(|j| p.upper[j].map_or(f64::INFINITY, |u| u - p.lower[j]))
        .collect();
    upper.extend(std::iter::repeat_n(f64::INFINITY, m));
    let mut cost = vec![0.0; n];
    cost.extend(std::iter::repeat_n(-1.0, m));
    let mut state = vec![State::Lower; n];
    state.extend(std::iter::repeat_n(State::Basic, m));
    let mut binv = vec![0.0; m * m];
    for i in 0..m {
        binv[i * m + i] = 1.0;
    }
    let max_iterations = opts.max_iterations.unwrap_or(200 * (m + n) + 10_000);
    let mut start = Vec::with_capacity(n + 1);
    let mut index = Vec::new();
    let mut value = Vec::new();
    start.push(0);
    for j in 0..n {
        for (i, &a) in p.column(j).iter().enumerate() {
            if a != 0.0 {
                index.push(i);
                value.push(a * sign[i]);
            }
        }
        start.push(index.len());
    }
    let mut w = Work {
        p,
        opts,
        m,
        n,
        sign,
        start,
        index,
        value,
        xb: b.clone(),
        d: vec![0.0; n + m],
        weight: vec![1.0; n + m],
        b,
        upper,
        cost,
        state,
        basis: (n..n + m).collect(),
        binv,
        bland: false,
        degenerate_run: 0,
        since_refactor: 0,
        iterations: 0,
        max_iterations,
    };

    // Phase 1: drive artificials to zero.
    let scale = w.b.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    w.refactor()?;
    w.optimize()?;
    w.refactor()?;
    let infeas: f64 = (0..m)
        .map(|i| w.value(n + i))
        .sum();
    if infeas > opts.feasibility_tol * scale {
        let pi = w.duals();
        // y = −π in the sign-normalized system, mapped back to original rows.
        let y: Vec<f64> = (0..m).map(|i| -pi[i] * w.sign[i]).collect();
        let x = w.primal();
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            objective_value: dotf(&p.objective, &x),
            x,
            duals: vec![0.0; m],
            farkas: Some(y),
            iterations: w.iterations,
            basis: w.basis.clone(),
            exact: None,
        });
    }

    // Phase 2: artificials pinned at zero.
    for i in 0..m {
        w.upper[n + i] = 0.0;
        w.cost[n + i] = 0.0;
        if w.state[n + i] == State::Upper {
            w.state[n + i] = State::Lower;
        }
    }
    w.cost[..n].copy_from_slice(&p.objective);
    w.bland = false;
    w.degenerate_run = 0;
    w.weight.iter_mut().for_each(|v| *v = 1.0);
    w.refactor()?;
    let outcome = w.optimize()?;
    w.refactor()?;
    if matches!(outcome, Outcome::Optimal) {
        w.cleanup()?;
    }
    let x = w.primal();
    let pi = w.duals();
    let duals: Vec<f64> = (0..m).map(|i| pi[i] * w.sign[i]).collect();
    Ok(LpSolution {
        status: match outcome {
            Outcome::Optimal => LpStatus::Optimal,
            Outcome::Unbounded => LpStatus::Unbounded,
        },
        objective_value: dotf(&p.objective, &x),
        x,
        duals,
        farkas: None,
        iterations: w.iterations,
        basis: w.basis.clone(),
        exact: None,
    })
}

impl Work<'_> {
    fn col(&self, j: usize) -> ColumnRef<'_> {
        if j < self.n {
            let r = self.start[j]..self.start[j + 1];
            ColumnRef::Sparse(&self.index[r.clone()], &self.value[r])
        } else {
            ColumnRef::Unit(j - self.n)
        }
    }

    /// yᵀ A_j in the sign-normalized system.
    fn dot_col(&self, y: &[f64], j: usize) -> f64 {
        match self.col(j) {
            ColumnRef::Sparse(idx, val) => idx.iter().zip(val).map(|(&i, v)| y[i] * v).sum(),
            ColumnRef::Unit(k) => y[k],
        }
    }

    fn value(&self, j: usize) -> f64 {
        match self.state[j] {
            State::Lower => 0.0,
            State::Upper => self.upper[j],
            State::Basic => {
                let r = self.basis.iter().position(|&k| k == j).expect("basic variable");
                self.xb[r]
            }
        }
    }

    fn primal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|j| match self.state[j] {
                State::Lower => self.p.lower[j],
                State::Upper => self.p.upper[j].expect("finite upper bound"),
                State::Basic => self.value(j) + self.p.lower[j],
            })
            .collect()
    }

    /// π = c_Bᵀ B⁻¹ for the sign-normalized rows.
    fn duals(&self) -> Vec<f64> {
        let m = self.m;
        let mut pi = vec![0.0; m];
        for (r, &k) in self.basis.iter().enumerate() {
            let c = self.cost[k];
            if c != 0.0 {
                let row = &self.binv[r * m..(r + 1) * m];
                for (pj, bj) in pi.iter_mut().zip(row) {
                    *pj += c * bj;
                }
            }
        }
        pi
    }

    /// yᵀ A_j for every column, artificials included.
    fn row_pass(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n + self.m];
        let first = match &self.p.product {
            Some(pc) => {
                let ys: Vec<f64> = y.iter().zip(&self.sign).map(|(a, s)| a * s).collect();
                pc.row_pass(&ys, &mut out);
                pc.cols()
            }
            None => 0,
        };
        for (j, o) in out.iter_mut().enumerate().skip(first) {
            *o = self.dot_col(y, j);
        }
        out
    }

    fn refresh_reduced_costs(&mut self) {
        let pa = self.row_pass(&self.duals());
        for j in 0..self.n + self.m {
            self.d[j] = if self.state[j] == State::Basic {
                0.0
            } else {
                self.cost[j] - pa[j]
            };
        }
    }

    /// B⁻¹ A_j
    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut w = vec![0.0; m];
        match self.col(j) {
            ColumnRef::Sparse(idx, val) => {
                for (&i, &v) in idx.iter().zip(val) {
                    for (r, wr) in w.iter_mut().enumerate() {
                        *wr += self.binv[r * m + i] * v;
                    }
                }
            }
            ColumnRef::Unit(k) => {
                for (r, wr) in w.iter_mut().enumerate() {
                    *wr = self.binv[r * m + k];
                }
            }
        }
        w
    }

    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        let mut a = vec![0.0; m * 2 * m];
        for (c, &k) in self.basis.iter().enumerate() {
            match self.col(k) {
                ColumnRef::Sparse(idx, val) => {
                    for (&i, &v) in idx.iter().zip(val) {
                        a[i * 2 * m + c] = v;
                    }
                }
                ColumnRef::Unit(i) => a[i * 2 * m + c] = 1.0,
            }
        }
        for i in 0..m {
            a[i * 2 * m + m + i] = 1.0;
        }
        for c in 0..m {
            let p = (c..m)
                .max_by(|&x, &y| a[x * 2 * m + c].abs().total_cmp(&a[y * 2 * m + c].abs()))
                .unwrap_or(c);
            if a[p * 2 * m + c].abs() < 1e-13 {
                return Err(Error::Lp("basis became singular".into()));
            }
            if p != c {
                for j in 0..2 * m {
                    a.swap(p * 2 * m + j, c * 2 * m + j);
                }
            }
            let inv = 1.0 / a[c * 2 * m + c];
            for j in 0..2 * m {
                a[c * 2 * m + j] *= inv;
            }
            let pivot_row: Vec<f64> = a[c * 2 * m..(c + 1) * 2 * m].to_vec();
            for i in 0..m {
                if i == c {
                    continue;
                }
                let f = a[i * 2 * m + c];
                if f != 0.0 {
                    for (x, pv) in a[i * 2 * m..(i + 1) * 2 * m].iter_mut().zip(&pivot_row) {
                        *x -= f * pv;
                    }
                }
            }
        }
        for i in 0..m {
            self.binv[i * m..(i + 1) * m].copy_from_slice(&a[i * 2 * m + m..(i + 1) * 2 * m]);
        }
        // x_B = B⁻¹ (b − Σ_{upper} A_j u_j)
        let mut r = self.b.clone();
        for j in 0..self.n + self.m {
            if self.state[j] == State::Upper {
                let u = self.upper[j];
                match self.col(j) {
                    ColumnRef::Sparse(idx, val) => {
                        for (&i, &v) in idx.iter().zip(val) {
                            r[i] -= v * u;
                        }
                    }
                    ColumnRef::Unit(i) => r[i] -= u,
                }
            }
        }
        for i in 0..m {
            self.xb[i] = dotf(&self.binv[i * m..(i + 1) * m], &r);
        }
        self.since_refactor = 0;
        self.refresh_reduced_costs();
        Ok(())
    }

    fn optimize(&mut self) -> Result<Outcome> {
        let m = self.m;
        let total = self.n + self.m;
        loop {
            if self.since_refactor >= self.opts.refactor_every {
                self.refactor()?;
            }
            if self.iterations >= self.max_iterations {
                return Err(Error::Lp(format!(
                    "no convergence after {} iterations",
                    self.iterations
                )));
            }
            let tol = self.opts.optimality_tol;
            // Devex pricing: largest d_j² / w_j among improving columns.
            let mut enter: Option<(usize, f64)> = None;
            for j in 0..total {
                let st = self.state[j];
                if st == State::Basic || self.upper[j] <= 0.0 {
                    continue;
                }
                let d = self.d[j];
                match st {
                    State::Lower if d > tol => {}
                    State::Upper if d < -tol => {}
                    _ => continue,
                }
                if self.bland {
                    enter = Some((j, d));
                    break;
                }
                let score = d * d / self.weight[j];
                if enter.is_none_or(|(_, best)| score > best) {
                    enter = Some((j, score));
                }
            }
            let Some((j, _)) = enter else {
                return Ok(Outcome::Optimal);
            };
            let delta = if self.state[j] == State::Lower { 1.0 } else { -1.0 };
            let w = self.ftran(j);

            // Harris two-pass ratio test: bound the step with relaxed bounds, then
            // take the largest pivot among rows blocking within that step.
            let ptol = self.opts.pivot_tol;
            let htol = self.opts.feasibility_tol;
            let ratio = |r: usize, relax: f64| -> Option<f64> {
                let dw = delta * w[r];
                let k = self.basis[r];
                if dw > ptol {
                    Some((self.xb[r] + relax).max(0.0) / dw)
                } else if dw < -ptol && self.upper[k].is_finite() {
                    Some((self.upper[k] - self.xb[r] + relax).max(0.0) / -dw)
                } else {
                    None
                }
            };
            let mut theta_max = self.upper[j];
            for r in 0..m {
                if let Some(t) = ratio(r, htol) {
                    theta_max = theta_max.min(t);
                }
            }
            if theta_max.is_infinite() {
                return Ok(Outcome::Unbounded);
            }
            let mut theta = self.upper[j];
            let mut leave: Option<(usize, bool)> = None;
            let mut best_w = 0.0;
            for r in 0..m {
                let Some(t) = ratio(r, 0.0) else { continue };
                if t > theta_max {
                    continue;
                }
                let dw = (delta * w[r]).abs();
                let better = match leave {
                    None => true,
                    Some((lr, _)) if self.bland => {
                        t < theta - 1e-12 || (t <= theta + 1e-12 && self.basis[r] < self.basis[lr])
                    }
                    Some(_) => dw > best_w,
                };
                if better {
                    theta = t;
                    leave = Some((r, delta * w[r] > 0.0));
                    best_w = dw;
                }
            }
            if leave.is_some() && self.upper[j] <= theta {
                // The entering variable reaches its own bound first.
                theta = self.upper[j];
                leave = None;
            }
            self.iterations += 1;
            if theta < 1e-12 {
                self.degenerate_run += 1;
                if self.degenerate_run > 5 * (m + self.n) {
                    self.bland = true;
                }
            } else {
                self.degenerate_run = 0;
            }
            for r in 0..m {
                self.xb[r] -= delta * theta * w[r];
            }
            match leave {
                None => {
                    // Bound flip of the entering variable.
                    self.state[j] = if delta > 0.0 { State::Upper } else { State::Lower };
                }
                Some((r, to_lower)) => {
                    let entering_value = if delta > 0.0 { theta } else { self.upper[j] - theta };
                    self.update_pricing(r, j, &w);
                    self.pivot(r, j, &w, to_lower, entering_value);
                }
            }
        }
    }

    /// Reduced-cost and devex weight updates for column q entering at row r,
    /// using row r of the current B⁻¹.
    fn update_pricing(&mut self, r: usize, q: usize, w: &[f64]) {
        let m = self.m;
        let rho = self.binv[r * m..(r + 1) * m].to_vec();
        let aq = w[r];
        let ratio = self.d[q] / aq;
        let wq = self.weight[q];
        let alpha = self.row_pass(&rho);
        for j in 0..self.n + self.m {
            if self.state[j] == State::Basic || j == q {
                continue;
            }
            let a = alpha[j];
            if a != 0.0 {
                self.d[j] -= ratio * a;
                let t = a / aq;
                self.weight[j] = self.weight[j].max(t * t * wq);
            }
        }
        let k = self.basis[r];
        self.d[k] = -ratio;
        self.weight[k] = (wq / (aq * aq)).max(1.0);
        self.d[q] = 0.0;
    }

    /// Basis exchange: column j enters at row r with value `entering_value`.
    fn pivot(&mut self, r: usize, j: usize, w: &[f64], to_lower: bool, entering_value: f64) {
        let m = self.m;
        let k = self.basis[r];
        self.state[k] = if to_lower { State::Lower } else { State::Upper };
        self.basis[r] = j;
        self.state[j] = State::Basic;
        self.xb[r] = entering_value;
        let piv = w[r];
        let row_r: Vec<f64> = self.binv[r * m..(r + 1) * m].iter().map(|v| v / piv).collect();
        for i in 0..m {
            if i == r || w[i] == 0.0 {
                continue;
            }
            let f = w[i];
            for (x, rv) in self.binv[i * m..(i + 1) * m].iter_mut().zip(&row_r) {
                *x -= f * rv;
            }
        }
        self.binv[r * m..(r + 1) * m].copy_from_slice(&row_r);
        self.since_refactor += 1;
    }

    /// Dual simplex passes that remove small bound violations left by rounding,
    /// keeping the reduced costs optimal.
    fn cleanup(&mut self) -> Result<()> {
        let m = self.m;
        let total = self.n + self.m;
        let tol = self.opts.feasibility_tol * 0.1;
        for _ in 0..(10 * m + 100) {
            self.refactor()?;
            let mut worst: Option<(usize, f64, bool)> = None;
            for r in 0..m {
                let k = self.basis[r];
                let (viol, below) = if self.xb[r] < -tol {
                    (-self.xb[r], true)
                } else if self.xb[r] > self.upper[k] + tol {
                    (self.xb[r] - self.upper[k], false)
                } else {
                    continue;
                };
                if worst.is_none_or(|(_, v, _)| viol > v) {
                    worst = Some((r, viol, below));
                }
            }
            let Some((r, _, below)) = worst else {
                return Ok(());
            };
            let rho = self.binv[r * m..(r + 1) * m].to_vec();
            let row = self.row_pass(&rho);
            // Harris-style dual ratio test: among entering candidates within the
            // relaxed minimum ratio, take the largest |α|.
            let dtol = self.opts.optimality_tol;
            let mut cands: Vec<(usize, f64, f64)> = Vec::new();
            for j in 0..total {
                let st = self.state[j];
                if st == State::Basic || self.upper[j] <= 0.0 {
                    continue;
                }
                let alpha = row[j];
                if alpha.abs() <= self.opts.pivot_tol {
                    continue;
                }
                // x_r moves by −α·Δx_j; Δx_j ≥ 0 at the lower bound, ≤ 0 at the upper.
                let increases_xr = match st {
                    State::Lower => alpha < 0.0,
                    _ => alpha > 0.0,
                };
                if increases_xr != below {
                    continue;
                }
                let d = self.d[j].abs();
                cands.push((j, d, alpha.abs()));
            }
            let t_max = cands
                .iter()
                .map(|&(_, d, a)| (d + dtol) / a)
                .fold(f64::INFINITY, f64::min);
            let enter = cands
                .iter()
                .filter(|&&(_, d, a)| d / a <= t_max)
                .max_by(|x, y| x.2.total_cmp(&y.2))
                .map(|&(j, _, _)| j);
            let Some(j) = enter else {
                return Err(Error::Lp("could not restore primal feasibility".into()));
            };
            let w = self.ftran(j);
            let k = self.basis[r];
            let target = if below { 0.0 } else { self.upper[k] };
            let step = (self.xb[r] - target) / w[r];
            let base = match self.state[j] {
                State::Upper => self.upper[j],
                _ => 0.0,
            };
            for i in 0..m {
                self.xb[i] -= step * w[i];
            }
            self.iterations += 1;
            self.pivot(r, j, &w, below, base + step);
        }
        Err(Error::Lp("primal cleanup did not finish".into()))
    }
}

enum ColumnRef<'a> {
    Sparse(&'a [usize], &'a [f64]),
    Unit(usize),
}
