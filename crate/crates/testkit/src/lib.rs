//! Reference computations for the test suites, written against plain
//! `Vec<f64>` so they share no code with the library under test.

#![allow(clippy::needless_range_loop)]

pub type Matrix = Vec<Vec<f64>>;

/// One action: the state it is taken in and its transition distribution.
#[derive(Clone, Debug)]
pub struct Arc {
    pub tail: usize,
    pub heads: Vec<(usize, f64)>,
}

/// A game with affine costs `l_k = slope_k y_k + intercept_k + eps_k`.
#[derive(Clone, Debug)]
pub struct AffineGame {
    pub states: usize,
    pub arcs: Vec<Arc>,
    pub slope: Vec<f64>,
    pub intercept: Vec<f64>,
    pub mass: f64,
}

impl AffineGame {
    pub fn len(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    pub fn cost(&self, y: &[f64], eps: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|k| self.slope[k] * y[k] + self.intercept[k] + eps[k])
            .collect()
    }

    pub fn social_cost(&self, y: &[f64], eps: &[f64]) -> f64 {
        dot(y, &self.cost(y, eps))
    }

    /// `E[s][k] = [tail_k = s] - P(s | k)`.
    pub fn incidence(&self) -> Matrix {
        let mut e = vec![vec![0.0; self.len()]; self.states];
        for (k, arc) in self.arcs.iter().enumerate() {
            e[arc.tail][k] += 1.0;
            for &(s, p) in &arc.heads {
                e[s][k] -= p;
            }
        }
        e
    }

    /// Equality constraints `[E without its last row; 1^T] y = (0, .., 0, M)`.
    pub fn constraints(&self) -> (Matrix, Vec<f64>) {
        let mut c = self.incidence();
        c.pop();
        c.push(vec![1.0; self.len()]);
        let mut r = vec![0.0; self.states];
        r[self.states - 1] = self.mass;
        (c, r)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn mat_vec(a: &Matrix, x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| dot(row, x)).collect()
}

pub fn transpose(a: &Matrix) -> Matrix {
    if a.is_empty() {
        return Vec::new();
    }
    (0..a[0].len()).map(|j| a.iter().map(|row| row[j]).collect()).collect()
}

pub fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Gaussian elimination with partial pivoting. `None` if a pivot falls
/// below `1e-12` times the largest entry.
pub fn solve_dense(mut a: Matrix, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 * scale {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for j in col..n {
                    a[row][j] -= f * a[col][j];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|j| a[row][j] * x[j]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Indices of a maximal linearly independent subset of rows.
fn independent_rows(a: &Matrix) -> Vec<usize> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut keep = Vec::new();
    for (i, row) in a.iter().enumerate() {
        let mut r = row.clone();
        for b in &basis {
            let f = dot(&r, b);
            for (x, y) in r.iter_mut().zip(b) {
                *x -= f * y;
            }
        }
        let norm = dot(&r, &r).sqrt();
        if norm > 1e-10 * dot(row, row).sqrt().max(1e-300) {
            basis.push(r.iter().map(|x| x / norm).collect());
            keep.push(i);
        }
    }
    keep
}

/// Minimizer of the potential over the affine set only (no sign
/// constraints): the solution of `[diag(A), -C^T; C, 0] [y; w] = [-b - eps; r]`.
/// Returns `(y, w)` with `w = (nu, lambda)`.
pub fn relaxed_stationary_point(game: &AffineGame, eps: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    let support: Vec<usize> = (0..game.len()).collect();
    restricted_stationary_point(game, eps, &support)
}

fn restricted_stationary_point(game: &AffineGame, eps: &[f64], support: &[usize]) -> Option<(Vec<f64>, Vec<f64>)> {
    let (c, r) = game.constraints();
    let cs: Matrix = c.iter().map(|row| support.iter().map(|&k| row[k]).collect()).collect();
    let rows = independent_rows(&cs);
    let n = support.len();
    let m = rows.len();
    let mut a = vec![vec![0.0; n + m]; n + m];
    let mut rhs = vec![0.0; n + m];
    for (i, &k) in support.iter().enumerate() {
        a[i][i] = game.slope[k];
        rhs[i] = -game.intercept[k] - eps[k];
        for (j, &row) in rows.iter().enumerate() {
            a[i][n + j] = -cs[row][i];
            a[n + j][i] = cs[row][i];
        }
    }
    for (j, &row) in rows.iter().enumerate() {
        rhs[n + j] = r[row];
    }
    let sol = solve_dense(a, rhs)?;
    let mut y = vec![0.0; game.len()];
    for (i, &k) in support.iter().enumerate() {
        y[k] = sol[i];
    }
    let mut w = vec![0.0; c.len()];
    for (j, &row) in rows.iter().enumerate() {
        w[row] = sol[n + j];
    }
    // Check that the dropped constraints hold as well.
    if max_abs(mat_vec(&c, &y).iter().zip(&r).map(|(a, b)| a - b)) > 1e-9 * game.mass.max(1.0) {
        return None;
    }
    Some((y, w))
}

/// Exact equilibrium of an affine game by enumerating supports: returns
/// the first support whose restricted stationary point is positive on the
/// support and has nonnegative multipliers off it. Exponential in the
/// number of hyperarcs; intended for K up to about 14.
pub fn support_enumeration(game: &AffineGame, eps: &[f64]) -> Option<Vec<f64>> {
    let k = game.len();
    assert!(k <= 20, "support enumeration is exponential in K");
    let (c, _) = game.constraints();
    let ct = transpose(&c);
    let mut masks: Vec<u32> = (1..(1u32 << k)).collect();
    masks.sort_by_key(|m| std::cmp::Reverse(m.count_ones()));
    for mask in masks {
        let support: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        let Some((y, w)) = restricted_stationary_point(game, eps, &support) else {
            continue;
        };
        if support.iter().any(|&i| y[i] <= 0.0) {
            continue;
        }
        let l = game.cost(&y, eps);
        let scale = max_abs(l.iter().copied()).max(1.0);
        let ok = (0..k)
            .filter(|i| mask & (1 << i) == 0)
            .all(|i| l[i] - dot(&ct[i], &w) >= -1e-9 * scale);
        if ok {
            return Some(y);
        }
    }
    None
}

/// Euclidean projection of `v` onto the feasible flows of `game`, solved
/// exactly as a quadratic program by support enumeration.
pub fn project_feasible(game: &AffineGame, v: &[f64]) -> Vec<f64> {
    let unit = AffineGame {
        slope: vec![1.0; game.len()],
        intercept: v.iter().map(|x| -x).collect(),
        ..game.clone()
    };
    support_enumeration(&unit, &vec![0.0; game.len()]).expect("feasible set is nonempty")
}

/// Projected gradient descent on the potential with step `1 / max slope`,
/// started from the projection of the origin.
pub fn projected_gradient(game: &AffineGame, eps: &[f64], iters: usize) -> Vec<f64> {
    let step = 1.0 / game.slope.iter().fold(0.0f64, |m, a| m.max(*a));
    let mut y = project_feasible(game, &vec![0.0; game.len()]);
    for _ in 0..iters {
        let l = game.cost(&y, eps);
        let v: Vec<f64> = y.iter().zip(&l).map(|(a, g)| a - step * g).collect();
        y = project_feasible(game, &v);
    }
    y
}

/// Closed recurrent classes of a Markov chain given as `chain[from][to]`.
pub fn recurrent_classes(chain: &Matrix) -> Vec<Vec<usize>> {
    let n = chain.len();
    let mut reach = vec![vec![false; n]; n];
    for i in 0..n {
        reach[i][i] = true;
        for j in 0..n {
            if chain[i][j] > 0.0 {
                reach[i][j] = true;
            }
        }
    }
    for m in 0..n {
        for i in 0..n {
            if reach[i][m] {
                for j in 0..n {
                    if reach[m][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let mut classes = Vec::new();
    let mut seen = vec![false; n];
    for i in 0..n {
        if seen[i] {
            continue;
        }
        let class: Vec<usize> = (0..n).filter(|&j| reach[i][j] && reach[j][i]).collect();
        for &j in &class {
            seen[j] = true;
        }
        let closed = (0..n).all(|j| !reach[i][j] || reach[j][i]);
        if closed {
            classes.push(class);
        }
    }
    classes
}

/// Stationary distribution of an irreducible chain restricted to `class`.
pub fn class_stationary(chain: &Matrix, class: &[usize]) -> Vec<f64> {
    let n = class.len();
    // pi (P - I) = 0 with the last equation replaced by sum(pi) = 1.
    let mut a = vec![vec![0.0; n]; n];
    for (r, &j) in class.iter().enumerate() {
        for (c, &i) in class.iter().enumerate() {
            a[r][c] = chain[i][j] - if i == j { 1.0 } else { 0.0 };
        }
    }
    a[n - 1] = vec![1.0; n];
    let mut b = vec![0.0; n];
    b[n - 1] = 1.0;
    solve_dense(a, b).expect("irreducible chain has a unique stationary distribution")
}

/// Minimum of `c^T y` over feasible flows by enumerating every
/// deterministic policy and every recurrent class of its chain. Returns
/// the optimal value and a minimizing flow.
pub fn policy_enumeration(game: &AffineGame, c: &[f64]) -> (f64, Vec<f64>) {
    let by_state: Vec<Vec<usize>> = (0..game.states)
        .map(|s| (0..game.len()).filter(|&k| game.arcs[k].tail == s).collect())
        .collect();
    let mut best = (f64::INFINITY, Vec::new());
    let mut choice = vec![0usize; game.states];
    loop {
        let policy: Vec<usize> = (0..game.states).map(|s| by_state[s][choice[s]]).collect();
        let mut chain = vec![vec![0.0; game.states]; game.states];
        for (s, &k) in policy.iter().enumerate() {
            for &(t, p) in &game.arcs[k].heads {
                chain[s][t] += p;
            }
        }
        for class in recurrent_classes(&chain) {
            let pi = class_stationary(&chain, &class);
            let mut y = vec![0.0; game.len()];
            for (&s, p) in class.iter().zip(&pi) {
                y[policy[s]] = game.mass * p;
            }
            let value = dot(c, &y);
            if value < best.0 {
                best = (value, y);
            }
        }
        let mut s = 0;
        loop {
            if s == game.states {
                return best;
            }
            choice[s] += 1;
            if choice[s] < by_state[s].len() {
                break;
            }
            choice[s] = 0;
            s += 1;
        }
    }
}

/// Central-difference Jacobian `J[i][j] = d f_i / d x_j`.
pub fn fd_jacobian(f: impl Fn(&[f64]) -> Vec<f64>, x: &[f64], h: f64) -> Matrix {
    let cols: Vec<Vec<f64>> = (0..x.len())
        .map(|j| {
            let mut p = x.to_vec();
            let mut m = x.to_vec();
            p[j] += h;
            m[j] -= h;
            f(&p).iter().zip(f(&m)).map(|(a, b)| (a - b) / (2.0 * h)).collect()
        })
        .collect();
    transpose(&cols)
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n >= 2 && n.is_multiple_of(2));
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + h * i as f64);
    }
    s * h / 3.0
}

/// Gradient of the social cost along the relaxed stationary point, by
/// central differences in each perturbation coordinate.
pub fn relaxed_social_cost_gradient(game: &AffineGame, h: f64) -> Vec<f64> {
    let k = game.len();
    let social = |eps: &[f64]| {
        let (y, _) = relaxed_stationary_point(game, eps).expect("relaxed system is nonsingular");
        vec![game.social_cost(&y, eps)]
    };
    fd_jacobian(social, &vec![0.0; k], h).remove(0)
}
