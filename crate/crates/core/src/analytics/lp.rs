//! Dense two-phase simplex for small linear programs.
//!
//! Bland's rule keeps it cycle-free; the problems solved here have a couple
//! of rows and a few thousand columns at most.

use serde::{Deserialize, Serialize};

const PIVOT_TOL: f64 = 1e-12;
const OPT_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

impl std::fmt::Display for LpStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
            LpStatus::Unbounded => "unbounded",
        })
    }
}

/// `maximize c·x` subject to `rows` and `x ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLp {
    pub objective: Vec<f64>,
    pub rows: Vec<(Vec<f64>, Sense, f64)>,
}

/// Result of [`DenseLp::solve`]. Residuals are absolute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseSolution {
    pub status: LpStatus,
    pub value: f64,
    pub x: Vec<f64>,
    /// Row multipliers in the sign convention of the original rows.
    pub duals: Vec<f64>,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
}

struct Tableau {
    /// `m` constraint rows followed by the objective row; last column is
    /// the right-hand side.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.t[row][col];
        for v in self.t[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[row].clone();
        for (r, line) in self.t.iter_mut().enumerate() {
            if r == row {
                continue;
            }
            let factor = line[col];
            if factor != 0.0 {
                for (v, pv) in line.iter_mut().zip(&pivot_row) {
                    *v -= factor * pv;
                }
            }
        }
        self.basis[row] = col;
    }

    /// Sets the objective row to the reduced costs of `cost` for the
    /// current basis (`row[j] = c_B B⁻¹ A_j - c_j`).
    fn price(&mut self, cost: &[f64]) {
        let m = self.basis.len();
        let mut obj: Vec<f64> = cost.iter().map(|c| -c).chain(std::iter::once(0.0)).collect();
        for r in 0..m {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                for (o, v) in obj.iter_mut().zip(&self.t[r]) {
                    *o += cb * v;
                }
            }
        }
        self.t[m] = obj;
    }

    /// Runs Bland's rule on the current objective row; `allowed` filters
    /// entering columns. Returns false when unbounded.
    fn optimize(&mut self, allowed: impl Fn(usize) -> bool) -> bool {
        let m = self.basis.len();
        loop {
            let Some(col) = (0..self.cols).find(|&j| allowed(j) && self.t[m][j] < -OPT_TOL) else {
                return true;
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..m {
                let a = self.t[r][col];
                if a > PIVOT_TOL {
                    let ratio = self.t[r][self.cols] / a;
                    let better = match leave {
                        None => true,
                        Some((lr, best)) => {
                            ratio < best - 1e-15 || (ratio <= best + 1e-15 && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, col),
                None => return false,
            }
        }
    }
}

fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
            .expect("nonempty range");
        a.swap(k, p);
        b.swap(k, p);
        let d = a[k][k];
        if d.abs() < PIVOT_TOL {
            continue;
        }
        for i in k + 1..n {
            let factor = a[i][k] / d;
            if factor != 0.0 {
                for j in k..n {
                    a[i][j] -= factor * a[k][j];
                }
                b[i] -= factor * b[k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        if a[k][k].abs() < PIVOT_TOL {
            continue;
        }
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    x
}

impl DenseLp {
    pub fn solve(&self) -> DenseSolution {
        let n = self.objective.len();
        let m = self.rows.len();
        // columns: originals, one slack per inequality row, one artificial per row
        let n_slack = self.rows.iter().filter(|(_, s, _)| *s != Sense::Eq).count();
        let cols = n + n_slack + m;
        let mut std_rows: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut flips = Vec::with_capacity(m);
        let mut slack = n;
        for (coeffs, sense, b) in &self.rows {
            let mut row = vec![0.0; cols];
            row[..n].copy_from_slice(coeffs);
            match sense {
                Sense::Le => {
                    row[slack] = 1.0;
                    slack += 1;
                }
                Sense::Ge => {
                    row[slack] = -1.0;
                    slack += 1;
                }
                Sense::Eq => {}
            }
            let flip = *b < 0.0;
            if flip {
                row.iter_mut().for_each(|v| *v = -*v);
            }
            flips.push(flip);
            rhs.push(if flip { -b } else { *b });
            std_rows.push(row);
        }
        let first_art = n + n_slack;
        let mut t: Vec<Vec<f64>> = std_rows
            .iter()
            .zip(&rhs)
            .enumerate()
            .map(|(r, (row, &b))| {
                let mut line = row.clone();
                line[first_art + r] = 1.0;
                line.push(b);
                line
            })
            .collect();
        t.push(vec![0.0; cols + 1]);
        let mut tab = Tableau {
            t,
            basis: (first_art..first_art + m).collect(),
            cols,
        };

        let phase1: Vec<f64> = (0..cols).map(|j| if j >= first_art { -1.0 } else { 0.0 }).collect();
        tab.price(&phase1);
        tab.optimize(|_| true);
        let infeasibility = -tab.t[m][cols];
        let scale = rhs.iter().fold(1.0f64, |a, b| a.max(b.abs()));
        if infeasibility > 1e-9 * scale {
            return DenseSolution {
                status: LpStatus::Infeasible,
                value: f64::NAN,
                x: vec![0.0; n],
                duals: vec![0.0; m],
                primal_residual: infeasibility,
                dual_residual: f64::NAN,
                gap: f64::NAN,
            };
        }
        // drive zero-level artificials out of the basis where possible
        for r in 0..m {
            if tab.basis[r] >= first_art {
                if let Some(col) = (0..first_art).find(|&j| tab.t[r][j].abs() > 1e-9) {
                    tab.pivot(r, col);
                }
            }
        }

        let mut cost = vec![0.0; cols];
        cost[..n].copy_from_slice(&self.objective);
        tab.price(&cost);
        if !tab.optimize(|j| j < first_art) {
            return DenseSolution {
                status: LpStatus::Unbounded,
                value: f64::INFINITY,
                x: vec![0.0; n],
                duals: vec![0.0; m],
                primal_residual: 0.0,
                dual_residual: f64::NAN,
                gap: f64::NAN,
            };
        }

        let mut full = vec![0.0; cols];
        for r in 0..m {
            full[tab.basis[r]] = tab.t[r][cols];
        }
        let x: Vec<f64> = full[..n].iter().map(|v| v.max(0.0)).collect();
        let value: f64 = self.objective.iter().zip(&x).map(|(c, v)| c * v).sum();

        // y solves Bᵀ y = c_B in the standardized rows
        let bt: Vec<Vec<f64>> = tab
            .basis
            .iter()
            .map(|&j| {
                (0..m)
                    .map(|r| if j >= first_art { f64::from(u8::from(j - first_art == r)) } else { std_rows[r][j] })
                    .collect()
            })
            .collect();
        let cb: Vec<f64> = tab.basis.iter().map(|&j| cost[j]).collect();
        let y_std = solve_square(bt, cb);
        let duals: Vec<f64> = y_std.iter().zip(&flips).map(|(y, f)| if *f { -y } else { *y }).collect();

        let mut primal_residual = x.iter().map(|v| (-v).max(0.0)).fold(0.0, f64::max);
        for (coeffs, sense, b) in &self.rows {
            let lhs: f64 = coeffs.iter().zip(&x).map(|(a, v)| a * v).sum();
            let viol = match sense {
                Sense::Le => (lhs - b).max(0.0),
                Sense::Ge => (b - lhs).max(0.0),
                Sense::Eq => (lhs - b).abs(),
            };
            primal_residual = primal_residual.max(viol);
        }
        // dual feasibility: c_j ≤ yᵀA_j for originals and slacks
        let mut dual_residual = 0.0f64;
        for j in 0..first_art {
            let ya: f64 = (0..m).map(|r| y_std[r] * std_rows[r][j]).sum();
            dual_residual = dual_residual.max(cost[j] - ya);
        }
        let dual_value: f64 = y_std.iter().zip(&rhs).map(|(y, b)| y * b).sum();
        DenseSolution {
            status: LpStatus::Optimal,
            value,
            x,
            duals,
            primal_residual,
            dual_residual,
            gap: (value - dual_value).abs(),
        }
    }
}
