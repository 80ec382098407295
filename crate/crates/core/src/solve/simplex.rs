//! Bounded-variable primal simplex for `min c·x  s.t.  A x ≥ b,  l ≤ x ≤ u`.
//!
//! Every row gets a surplus column `−e_i` and an artificial column `+e_i`.
//! Most columns of the power models are singletons (surplus, artificial,
//! shortfall), so the basis is factored as a set of singleton pivots plus a
//! dense kernel over the remaining rows and columns. The kernel is as large as
//! the number of basic non-singleton columns, which is bounded by the number of
//! power variables and is refactored from scratch each iteration.
//!
//! Pricing is Dantzig's rule, switching to Bland's rule after `10·(m+n)`
//! iterations so degenerate cycling cannot go on forever.

const NONE: usize = usize::MAX;
const PIVOT_TOL: f64 = 1e-9;
const HARRIS_TOL: f64 = 1e-9;
const SINGULAR_TOL: f64 = 1e-11;
const REFRESH_EVERY: u64 = 64;

#[derive(Debug, Clone)]
pub(crate) struct LpProblem {
    pub rows: usize,
    /// Structural columns, `(row, coefficient)`.
    pub cols: Vec<Vec<(usize, f64)>>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub cost: Vec<f64>,
    pub rhs: Vec<f64>,
    /// Initial nonbasic value of each structural column; must be a finite bound.
    pub start: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    Singular,
}

#[derive(Debug, Clone)]
pub(crate) struct LpOutcome {
    pub status: LpStatus,
    /// Structural values.
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: u64,
}

/// Singleton pivots plus an LU-factored dense kernel.
struct Factor {
    /// Per row: basis position of the singleton column pivoting on it, or NONE.
    row_pivot: Vec<usize>,
    pivot_value: Vec<f64>,
    kernel_rows: Vec<usize>,
    kernel_pos: Vec<usize>,
    row_to_k: Vec<usize>,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

fn lu_factor(a: &mut [f64], k: usize) -> Option<Vec<usize>> {
    let mut perm: Vec<usize> = (0..k).collect();
    for c in 0..k {
        let mut best = c;
        for r in c + 1..k {
            if a[r * k + c].abs() > a[best * k + c].abs() {
                best = r;
            }
        }
        if a[best * k + c].abs() < SINGULAR_TOL {
            return None;
        }
        if best != c {
            for j in 0..k {
                a.swap(c * k + j, best * k + j);
            }
            perm.swap(c, best);
        }
        let d = a[c * k + c];
        for r in c + 1..k {
            let f = a[r * k + c] / d;
            if f == 0.0 {
                continue;
            }
            a[r * k + c] = f;
            for j in c + 1..k {
                a[r * k + j] -= f * a[c * k + j];
            }
        }
    }
    Some(perm)
}

fn lu_solve(lu: &[f64], perm: &[usize], k: usize, b: &[f64]) -> Vec<f64> {
    let mut y: Vec<f64> = perm.iter().map(|&p| b[p]).collect();
    for i in 0..k {
        let mut v = y[i];
        for j in 0..i {
            v -= lu[i * k + j] * y[j];
        }
        y[i] = v;
    }
    for i in (0..k).rev() {
        let mut v = y[i];
        for j in i + 1..k {
            v -= lu[i * k + j] * y[j];
        }
        y[i] = v / lu[i * k + i];
    }
    y
}

fn lu_solve_transpose(lu: &[f64], perm: &[usize], k: usize, c: &[f64]) -> Vec<f64> {
    let mut z = c.to_vec();
    for i in 0..k {
        let mut v = z[i];
        for j in 0..i {
            v -= lu[j * k + i] * z[j];
        }
        z[i] = v / lu[i * k + i];
    }
    for i in (0..k).rev() {
        let mut v = z[i];
        for j in i + 1..k {
            v -= lu[j * k + i] * z[j];
        }
        z[i] = v;
    }
    let mut x = vec![0.0; k];
    for (i, &p) in perm.iter().enumerate() {
        x[p] = z[i];
    }
    x
}

struct Simplex {
    m: usize,
    n: usize,
    cols: Vec<Vec<(usize, f64)>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rhs: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    pos_of: Vec<usize>,
    iterations: u64,
    limit: u64,
}

impl Simplex {
    fn new(p: &LpProblem) -> Self {
        let (m, n) = (p.rows, p.cols.len());
        let mut cols = p.cols.clone();
        cols.extend((0..m).map(|i| vec![(i, -1.0)]));
        cols.extend((0..m).map(|i| vec![(i, 1.0)]));
        let mut lower = p.lower.clone();
        let mut upper = p.upper.clone();
        lower.extend(std::iter::repeat_n(0.0, 2 * m));
        upper.extend(std::iter::repeat_n(f64::INFINITY, m));
        upper.extend(std::iter::repeat_n(0.0, m));
        let mut x = p.start.clone();
        x.extend(std::iter::repeat_n(0.0, 2 * m));
        Self {
            m,
            n,
            cols,
            lower,
            upper,
            rhs: p.rhs.clone(),
            x,
            basis: vec![NONE; m],
            pos_of: vec![NONE; n + 2 * m],
            iterations: 0,
            limit: 0,
        }
    }

    fn slack(&self, i: usize) -> usize {
        self.n + i
    }

    fn artificial(&self, i: usize) -> usize {
        self.n + self.m + i
    }

    fn set_basic(&mut self, pos: usize, col: usize) {
        self.basis[pos] = col;
        self.pos_of[col] = pos;
    }

    /// Covers each row with a surplus, a structural singleton or an artificial.
    /// Returns whether any artificial is in use.
    fn crash(&mut self) -> bool {
        let mut activity = vec![0.0; self.m];
        for j in 0..self.n {
            if self.x[j] != 0.0 {
                for &(i, a) in &self.cols[j] {
                    activity[i] += a * self.x[j];
                }
            }
        }
        let mut singleton_of_row = vec![NONE; self.m];
        for j in 0..self.n {
            if let [(i, a)] = self.cols[j][..] {
                if a > 0.0 && self.upper[j] > self.lower[j] && self.x[j] == self.lower[j] && singleton_of_row[i] == NONE {
                    singleton_of_row[i] = j;
                }
            }
        }
        let mut artificial = false;
        for i in 0..self.m {
            let deficit = self.rhs[i] - activity[i];
            if deficit <= 0.0 {
                let w = self.slack(i);
                self.x[w] = -deficit;
                self.set_basic(i, w);
                continue;
            }
            let j = singleton_of_row[i];
            if j != NONE {
                let a = self.cols[j][0].1;
                let v = self.x[j] + deficit / a;
                if v <= self.upper[j] {
                    self.x[j] = v;
                    self.set_basic(i, j);
                    continue;
                }
            }
            let r = self.artificial(i);
            self.upper[r] = f64::INFINITY;
            self.x[r] = deficit;
            self.set_basic(i, r);
            artificial = true;
        }
        artificial
    }

    fn factor(&self) -> Option<Factor> {
        let mut row_pivot = vec![NONE; self.m];
        let mut pivot_value = vec![0.0; self.m];
        let mut kernel_pos = Vec::new();
        for (pos, &col) in self.basis.iter().enumerate() {
            match self.cols[col][..] {
                [(i, a)] if row_pivot[i] == NONE => {
                    row_pivot[i] = pos;
                    pivot_value[i] = a;
                }
                _ => kernel_pos.push(pos),
            }
        }
        let kernel_rows: Vec<usize> = (0..self.m).filter(|&i| row_pivot[i] == NONE).collect();
        let k = kernel_rows.len();
        if k != kernel_pos.len() {
            return None;
        }
        let mut row_to_k = vec![NONE; self.m];
        for (u, &i) in kernel_rows.iter().enumerate() {
            row_to_k[i] = u;
        }
        let mut lu = vec![0.0; k * k];
        for (c, &pos) in kernel_pos.iter().enumerate() {
            for &(i, a) in &self.cols[self.basis[pos]] {
                if row_to_k[i] != NONE {
                    lu[row_to_k[i] * k + c] = a;
                }
            }
        }
        let perm = lu_factor(&mut lu, k)?;
        Some(Factor {
            row_pivot,
            pivot_value,
            kernel_rows,
            kernel_pos,
            row_to_k,
            lu,
            perm,
        })
    }

    /// Solves `B z = r`; `z` is indexed by basis position.
    fn ftran(&self, f: &Factor, r: &[f64]) -> Vec<f64> {
        let k = f.kernel_rows.len();
        let mut z = vec![0.0; self.m];
        let mut acc = r.to_vec();
        if k > 0 {
            let rk: Vec<f64> = f.kernel_rows.iter().map(|&i| r[i]).collect();
            let zk = lu_solve(&f.lu, &f.perm, k, &rk);
            for (c, &pos) in f.kernel_pos.iter().enumerate() {
                z[pos] = zk[c];
                if zk[c] != 0.0 {
                    for &(i, a) in &self.cols[self.basis[pos]] {
                        acc[i] -= a * zk[c];
                    }
                }
            }
        }
        for i in 0..self.m {
            let pos = f.row_pivot[i];
            if pos != NONE {
                z[pos] = acc[i] / f.pivot_value[i];
            }
        }
        z
    }

    /// Solves `Bᵀ π = c_B`; `π` is indexed by row.
    fn btran(&self, f: &Factor, cost: &[f64]) -> Vec<f64> {
        let mut pi = vec![0.0; self.m];
        for i in 0..self.m {
            let pos = f.row_pivot[i];
            if pos != NONE {
                pi[i] = cost[self.basis[pos]] / f.pivot_value[i];
            }
        }
        let k = f.kernel_rows.len();
        if k > 0 {
            let rhs: Vec<f64> = f
                .kernel_pos
                .iter()
                .map(|&pos| {
                    let col = self.basis[pos];
                    let mut v = cost[col];
                    for &(i, a) in &self.cols[col] {
                        if f.row_to_k[i] == NONE {
                            v -= a * pi[i];
                        }
                    }
                    v
                })
                .collect();
            let pk = lu_solve_transpose(&f.lu, &f.perm, k, &rhs);
            for (u, &i) in f.kernel_rows.iter().enumerate() {
                pi[i] = pk[u];
            }
        }
        pi
    }

    /// Recomputes basic values from the nonbasic ones.
    fn refresh(&mut self, f: &Factor) {
        let mut r = self.rhs.clone();
        for (j, col) in self.cols.iter().enumerate() {
            if self.pos_of[j] == NONE && self.x[j] != 0.0 {
                for &(i, a) in col {
                    r[i] -= a * self.x[j];
                }
            }
        }
        let z = self.ftran(f, &r);
        for (pos, &col) in self.basis.iter().enumerate() {
            self.x[col] = z[pos];
        }
    }

    fn run(&mut self, cost: &[f64]) -> LpStatus {
        let total = self.cols.len();
        let bland_after = 10 * (self.m + total) as u64;
        let cmax = cost.iter().fold(1.0f64, |a, c| a.max(c.abs()));
        let dual_tol = 1e-9 * cmax;
        let mut since_refresh = 0;
        let start = self.iterations;
        loop {
            if self.iterations >= self.limit {
                return LpStatus::IterationLimit;
            }
            let Some(f) = self.factor() else {
                return LpStatus::Singular;
            };
            if since_refresh >= REFRESH_EVERY {
                self.refresh(&f);
                since_refresh = 0;
            }
            let pi = self.btran(&f, cost);
            let bland = self.iterations - start >= bland_after;

            let mut entering = NONE;
            let mut best = 0.0;
            let mut direction = 0.0;
            for j in 0..total {
                if self.pos_of[j] != NONE || self.upper[j] <= self.lower[j] {
                    continue;
                }
                let d = cost[j] - self.cols[j].iter().map(|&(i, a)| a * pi[i]).sum::<f64>();
                let dir = if self.x[j] <= self.lower[j] && d < -dual_tol {
                    1.0
                } else if self.x[j] >= self.upper[j] && d > dual_tol {
                    -1.0
                } else {
                    continue;
                };
                if bland {
                    entering = j;
                    direction = dir;
                    break;
                }
                if d.abs() > best {
                    best = d.abs();
                    entering = j;
                    direction = dir;
                }
            }
            if entering == NONE {
                self.refresh(&f);
                return LpStatus::Optimal;
            }

            let mut column = vec![0.0; self.m];
            for &(i, a) in &self.cols[entering] {
                column[i] = a;
            }
            let alpha = self.ftran(&f, &column);

            // Two passes: the first finds the largest step keeping every basic
            // variable within HARRIS_TOL of its bounds, the second picks the
            // largest pivot among the rows that block within that step.
            let flip = self.upper[entering] - self.lower[entering];
            let mut relaxed = flip;
            for (pos, &col) in self.basis.iter().enumerate() {
                let delta = -direction * alpha[pos];
                if delta.abs() <= PIVOT_TOL {
                    continue;
                }
                let limit = if delta < 0.0 {
                    (self.x[col] - self.lower[col] + HARRIS_TOL) / -delta
                } else if self.upper[col].is_finite() {
                    (self.upper[col] - self.x[col] + HARRIS_TOL) / delta
                } else {
                    continue;
                };
                relaxed = relaxed.min(limit.max(0.0));
            }
            let mut step = flip;
            let mut leaving = NONE;
            let mut leaving_to_upper = false;
            let mut leaving_alpha = 0.0;
            if relaxed < flip {
                for (pos, &col) in self.basis.iter().enumerate() {
                    let delta = -direction * alpha[pos];
                    if delta.abs() <= PIVOT_TOL {
                        continue;
                    }
                    let (limit, to_upper) = if delta < 0.0 {
                        (((self.x[col] - self.lower[col]) / -delta).max(0.0), false)
                    } else if self.upper[col].is_finite() {
                        (((self.upper[col] - self.x[col]) / delta).max(0.0), true)
                    } else {
                        continue;
                    };
                    if limit > relaxed {
                        continue;
                    }
                    let better = leaving == NONE
                        || if bland {
                            col < self.basis[leaving]
                        } else {
                            delta.abs() > leaving_alpha
                        };
                    if better {
                        step = limit;
                        leaving = pos;
                        leaving_to_upper = to_upper;
                        leaving_alpha = delta.abs();
                    }
                }
            }
            if step.is_infinite() {
                return LpStatus::Unbounded;
            }

            self.x[entering] += direction * step;
            if step > 0.0 {
                for (pos, &col) in self.basis.iter().enumerate() {
                    self.x[col] -= direction * alpha[pos] * step;
                }
            }
            if leaving == NONE {
                // bound flip
                self.x[entering] = if direction > 0.0 { self.upper[entering] } else { self.lower[entering] };
            } else {
                let out = self.basis[leaving];
                self.x[out] = if leaving_to_upper { self.upper[out] } else { self.lower[out] };
                self.pos_of[out] = NONE;
                self.set_basic(leaving, entering);
            }
            self.iterations += 1;
            since_refresh += 1;
        }
    }
}

pub(crate) fn solve_bounded(p: &LpProblem, max_iterations: Option<u64>, feas_tol: f64) -> LpOutcome {
    let mut s = Simplex::new(p);
    let total = s.cols.len();
    s.limit = max_iterations.unwrap_or(50 * (p.rows + total) as u64 + 10_000);
    let needs_phase_one = s.crash();

    let finish = |s: &Simplex, status: LpStatus| {
        let x: Vec<f64> = (0..s.n).map(|j| s.x[j].clamp(s.lower[j], s.upper[j])).collect();
        let objective = x.iter().zip(&p.cost).map(|(v, c)| v * c).sum();
        LpOutcome {
            status,
            x,
            objective,
            iterations: s.iterations,
        }
    };

    if needs_phase_one {
        let mut phase_one = vec![0.0; total];
        for i in 0..s.m {
            phase_one[s.artificial(i)] = 1.0;
        }
        let status = s.run(&phase_one);
        if status != LpStatus::Optimal {
            return finish(&s, status);
        }
        let infeasibility = (0..s.m).map(|i| s.x[s.artificial(i)]).fold(0.0, f64::max);
        if infeasibility > feas_tol {
            return finish(&s, LpStatus::Infeasible);
        }
        for i in 0..s.m {
            let r = s.artificial(i);
            s.upper[r] = 0.0;
            if s.pos_of[r] == NONE {
                s.x[r] = 0.0;
            }
        }
    }

    let mut cost = p.cost.clone();
    cost.extend(std::iter::repeat_n(0.0, 2 * s.m));
    let status = s.run(&cost);
    finish(&s, status)
}
