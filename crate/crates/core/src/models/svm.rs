//! Soft-margin kernel SVMs solved by SMO-style pairwise working-set
//! optimization, in both C and nu parameterizations, with one-vs-one
//! multiclass vote aggregation.
//!
//! The dual is minimized in the standard form `min 1/2 a'Qa + p'a` with
//! `Q_ij = y_i y_j K(x_i, x_j)`, box constraints per alpha and the linear
//! constraint(s) preserved exactly by the pairwise updates: `sum a_i y_i = 0`
//! for C-SVC, per-class sums for nu-SVC (whose working sets stay within one
//! class). Second-order working-set selection follows the usual
//! maximal-violating-pair rule.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{ClassifierKind, ClassifierSpec, ModelError};

const SV_TOL: f64 = 1e-9;

pub fn rbf_kernel(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

/// Default RBF width: `1 / (n_features * total variance)`.
pub fn default_gamma(x: ArrayView2<'_, f64>) -> f64 {
    let n = (x.nrows() * x.ncols()) as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var > 0.0 {
        1.0 / (x.ncols() as f64 * var)
    } else {
        1.0 / x.ncols() as f64
    }
}

/// Dual-solution audit of one binary machine, recorded at fit time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvmDualAudit {
    pub n_train: usize,
    /// alphas strictly inside (0, upper]
    pub sv_count: usize,
    /// alphas at the upper bound
    pub bounded_count: usize,
    /// at-bound points with y f(x) < 1 (margin violators)
    pub margin_error_count: usize,
    /// |sum_i alpha_i y_i| of the final (scaled) solution
    pub alpha_y_balance: f64,
    /// worst box-constraint violation of the internal solution
    pub max_box_violation: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl SvmDualAudit {
    pub fn sv_fraction(&self) -> f64 {
        self.sv_count as f64 / self.n_train as f64
    }

    pub fn margin_error_fraction(&self) -> f64 {
        self.margin_error_count as f64 / self.n_train as f64
    }
}

/// One trained one-vs-one machine. `alpha_signed` are the scaled
/// `alpha_i * y_i` restricted to support vectors; the decision function is
/// `f(x) = sum_i alpha_signed_i K(sv_i, x) - rho`, positive meaning
/// `class_pos`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairMachine {
    pub class_pos: usize,
    pub class_neg: usize,
    pub support_x: Array2<f64>,
    pub alpha_signed: Vec<f64>,
    pub rho: f64,
    pub audit: SvmDualAudit,
}

impl PairMachine {
    pub fn decision(&self, row: &[f64], gamma: f64) -> f64 {
        self.alpha_signed
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                a * rbf_kernel(self.support_x.row(i).as_slice().unwrap(), row, gamma)
            })
            .sum::<f64>()
            - self.rho
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelSvmParams {
    pub gamma: f64,
    pub n_classes: usize,
    pub machines: Vec<PairMachine>,
}

struct Solution {
    /// signed and (for nu) rescaled alphas, one per training row of the pair
    alpha_signed: Vec<f64>,
    rho: f64,
    audit: SvmDualAudit,
}

struct Solver<'a> {
    q: &'a Array2<f64>,
    targets: &'a [f64],
    alpha: Vec<f64>,
    gradient: Vec<f64>,
    upper: f64,
    eps: f64,
    nu_constraint: bool,
}

impl<'a> Solver<'a> {
    fn new(
        q: &'a Array2<f64>,
        targets: &'a [f64],
        alpha: Vec<f64>,
        linear: &[f64],
        upper: f64,
        eps: f64,
        nu_constraint: bool,
    ) -> Self {
        let n = targets.len();
        let mut gradient = linear.to_vec();
        for i in 0..n {
            if alpha[i] != 0.0 {
                for j in 0..n {
                    gradient[j] += alpha[i] * q[[i, j]];
                }
            }
        }
        Solver {
            q,
            targets,
            alpha,
            gradient,
            upper,
            eps,
            nu_constraint,
        }
    }

    fn at_upper(&self, i: usize) -> bool {
        self.alpha[i] >= self.upper
    }

    fn at_lower(&self, i: usize) -> bool {
        self.alpha[i] <= 0.0
    }

    fn is_pos(&self, i: usize) -> bool {
        self.targets[i] > 0.0
    }

    /// Second-order pair selection; `None` means KKT-optimal within eps.
    fn select_working_set(&self) -> Option<(usize, usize)> {
        if self.nu_constraint {
            return self.select_working_set_nu();
        }
        let n = self.targets.len();
        let mut gmax = (f64::NEG_INFINITY, None::<usize>);
        let mut gmax2 = f64::NEG_INFINITY;
        for i in 0..n {
            if self.is_pos(i) {
                if !self.at_upper(i) && -self.gradient[i] >= gmax.0 {
                    gmax = (-self.gradient[i], Some(i));
                }
                if !self.at_lower(i) && self.gradient[i] >= gmax2 {
                    gmax2 = self.gradient[i];
                }
            } else {
                if !self.at_upper(i) && -self.gradient[i] >= gmax2 {
                    gmax2 = -self.gradient[i];
                }
                if !self.at_lower(i) && self.gradient[i] >= gmax.0 {
                    gmax = (self.gradient[i], Some(i));
                }
            }
        }

        let i = gmax.1?;
        let mut best: Option<(f64, usize)> = None;
        for j in 0..n {
            let grad_diff = if self.is_pos(j) {
                if self.at_lower(j) {
                    continue;
                }
                gmax.0 + self.gradient[j]
            } else {
                if self.at_upper(j) {
                    continue;
                }
                gmax.0 - self.gradient[j]
            };
            if grad_diff <= 0.0 {
                continue;
            }
            // a_ij = K_ii + K_jj - 2 K_ij, expressed through Q
            let quad = self.q[[i, i]] + self.q[[j, j]]
                - 2.0 * self.targets[i] * self.targets[j] * self.q[[i, j]];
            let obj = -(grad_diff * grad_diff) / quad.max(1e-12);
            if best.is_none_or(|(b, _)| obj <= b) {
                best = Some((obj, j));
            }
        }

        if gmax.0 + gmax2 < self.eps {
            return None;
        }
        best.map(|(_, j)| (i, j))
    }

    fn select_working_set_nu(&self) -> Option<(usize, usize)> {
        let n = self.targets.len();
        let mut gmaxp = (f64::NEG_INFINITY, None::<usize>);
        let mut gmaxp2 = f64::NEG_INFINITY;
        let mut gmaxn = (f64::NEG_INFINITY, None::<usize>);
        let mut gmaxn2 = f64::NEG_INFINITY;
        for i in 0..n {
            if self.is_pos(i) {
                if !self.at_upper(i) && -self.gradient[i] > gmaxp.0 {
                    gmaxp = (-self.gradient[i], Some(i));
                }
                if !self.at_lower(i) && self.gradient[i] > gmaxp2 {
                    gmaxp2 = self.gradient[i];
                }
            } else {
                if !self.at_upper(i) && -self.gradient[i] > gmaxn.0 {
                    gmaxn = (-self.gradient[i], Some(i));
                }
                if !self.at_lower(i) && self.gradient[i] > gmaxn2 {
                    gmaxn2 = self.gradient[i];
                }
            }
        }

        let mut best: Option<(f64, usize)> = None;
        for j in 0..n {
            if self.is_pos(j) {
                if self.at_lower(j) {
                    continue;
                }
                let Some(ip) = gmaxp.1 else { continue };
                let grad_diff = gmaxp.0 + self.gradient[j];
                if grad_diff <= 0.0 {
                    continue;
                }
                let quad = self.q[[ip, ip]] + self.q[[j, j]] - 2.0 * self.q[[ip, j]];
                let obj = -(grad_diff * grad_diff) / quad.max(1e-12);
                if best.is_none_or(|(b, _)| obj <= b) {
                    best = Some((obj, j));
                }
            } else {
                if self.at_upper(j) {
                    continue;
                }
                let Some(inn) = gmaxn.1 else { continue };
                let grad_diff = gmaxn.0 - self.gradient[j];
                if grad_diff <= 0.0 {
                    continue;
                }
                let quad = self.q[[inn, inn]] + self.q[[j, j]] - 2.0 * self.q[[inn, j]];
                let obj = -(grad_diff * grad_diff) / quad.max(1e-12);
                if best.is_none_or(|(b, _)| obj <= b) {
                    best = Some((obj, j));
                }
            }
        }

        if f64::max(gmaxp.0 + gmaxp2, gmaxn.0 + gmaxn2) < self.eps {
            return None;
        }
        let (_, j) = best?;
        let i = if self.is_pos(j) { gmaxp.1? } else { gmaxn.1? };
        Some((i, j))
    }

    fn update(&mut self, i: usize, j: usize) {
        let old_i = self.alpha[i];
        let old_j = self.alpha[j];
        let upper = self.upper;

        if self.targets[i] != self.targets[j] {
            let quad = (self.q[[i, i]] + self.q[[j, j]] + 2.0 * self.q[[i, j]]).max(1e-12);
            let delta = -(self.gradient[i] + self.gradient[j]) / quad;
            let diff = old_i - old_j;
            self.alpha[i] += delta;
            self.alpha[j] += delta;
            if diff > 0.0 {
                if self.alpha[j] < 0.0 {
                    self.alpha[j] = 0.0;
                    self.alpha[i] = diff;
                }
            } else if self.alpha[i] < 0.0 {
                self.alpha[i] = 0.0;
                self.alpha[j] = -diff;
            }
            if diff > 0.0 {
                if self.alpha[i] > upper {
                    self.alpha[i] = upper;
                    self.alpha[j] = upper - diff;
                }
            } else if self.alpha[j] > upper {
                self.alpha[j] = upper;
                self.alpha[i] = upper + diff;
            }
        } else {
            let quad = (self.q[[i, i]] + self.q[[j, j]] - 2.0 * self.q[[i, j]]).max(1e-12);
            let delta = (self.gradient[i] - self.gradient[j]) / quad;
            let sum = old_i + old_j;
            self.alpha[i] -= delta;
            self.alpha[j] += delta;
            if sum > upper {
                if self.alpha[i] > upper {
                    self.alpha[i] = upper;
                    self.alpha[j] = sum - upper;
                }
            } else if self.alpha[j] < 0.0 {
                self.alpha[j] = 0.0;
                self.alpha[i] = sum;
            }
            if sum > upper {
                if self.alpha[j] > upper {
                    self.alpha[j] = upper;
                    self.alpha[i] = sum - upper;
                }
            } else if self.alpha[i] < 0.0 {
                self.alpha[i] = 0.0;
                self.alpha[j] = sum;
            }
        }

        let delta_i = self.alpha[i] - old_i;
        let delta_j = self.alpha[j] - old_j;
        if delta_i != 0.0 || delta_j != 0.0 {
            let n = self.targets.len();
            for k in 0..n {
                self.gradient[k] += self.q[[k, i]] * delta_i + self.q[[k, j]] * delta_j;
            }
        }
    }

    fn solve(mut self) -> (Vec<f64>, Vec<f64>, bool, usize) {
        let n = self.targets.len();
        let max_iter = (300 * n).clamp(10_000, 5_000_000);
        let mut iter = 0;
        let mut converged = false;
        while iter < max_iter {
            match self.select_working_set() {
                None => {
                    converged = true;
                    break;
                }
                Some((i, j)) => self.update(i, j),
            }
            iter += 1;
        }
        (self.alpha, self.gradient, converged, iter)
    }
}

fn calculate_rho(
    alpha: &[f64],
    gradient: &[f64],
    targets: &[f64],
    upper: f64,
) -> f64 {
    let mut nfree = 0usize;
    let mut sum_free = 0.0;
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    for i in 0..targets.len() {
        let yg = targets[i] * gradient[i];
        if alpha[i] >= upper {
            if targets[i] > 0.0 {
                lb = lb.max(yg);
            } else {
                ub = ub.min(yg);
            }
        } else if alpha[i] <= 0.0 {
            if targets[i] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            nfree += 1;
            sum_free += yg;
        }
    }
    if nfree > 0 {
        sum_free / nfree as f64
    } else {
        (ub + lb) / 2.0
    }
}

/// Returns (rho, r) for the nu solution.
fn calculate_rho_nu(alpha: &[f64], gradient: &[f64], targets: &[f64], upper: f64) -> (f64, f64) {
    let mut nfree = [0usize; 2];
    let mut sum_free = [0.0f64; 2];
    let mut ub = [f64::INFINITY; 2];
    let mut lb = [f64::NEG_INFINITY; 2];
    for i in 0..targets.len() {
        let side = usize::from(targets[i] < 0.0);
        if alpha[i] >= upper {
            lb[side] = lb[side].max(gradient[i]);
        } else if alpha[i] <= 0.0 {
            ub[side] = ub[side].min(gradient[i]);
        } else {
            nfree[side] += 1;
            sum_free[side] += gradient[i];
        }
    }
    let r: [f64; 2] = std::array::from_fn(|s| {
        if nfree[s] > 0 {
            sum_free[s] / nfree[s] as f64
        } else {
            (ub[s] + lb[s]) / 2.0
        }
    });
    ((r[0] - r[1]) / 2.0, (r[0] + r[1]) / 2.0)
}

fn build_q(x: ArrayView2<'_, f64>, rows: &[usize], targets: &[f64], gamma: f64) -> Array2<f64> {
    let n = rows.len();
    let mut q = Array2::zeros((n, n));
    for a in 0..n {
        let ra = x.row(rows[a]);
        for b in a..n {
            let k = rbf_kernel(
                ra.as_slice().unwrap(),
                x.row(rows[b]).as_slice().unwrap(),
                gamma,
            );
            let v = targets[a] * targets[b] * k;
            q[[a, b]] = v;
            q[[b, a]] = v;
        }
    }
    q
}

fn audit_solution(
    alpha_internal: &[f64],
    alpha_signed: &[f64],
    decisions: &[f64],
    targets: &[f64],
    upper: f64,
    converged: bool,
    iterations: usize,
) -> SvmDualAudit {
    let n = targets.len();
    let sv_count = alpha_internal.iter().filter(|&&a| a > SV_TOL * upper).count();
    let bounded_count = alpha_internal
        .iter()
        .filter(|&&a| a >= upper * (1.0 - SV_TOL))
        .count();
    let margin_error_count = (0..n)
        .filter(|&i| {
            alpha_internal[i] >= upper * (1.0 - SV_TOL) && targets[i] * decisions[i] < 1.0 - 1e-6
        })
        .count();
    let alpha_y_balance = alpha_signed.iter().sum::<f64>().abs();
    let max_box_violation = alpha_internal
        .iter()
        .map(|&a| (-a).max(a - upper).max(0.0))
        .fold(0.0, f64::max);
    SvmDualAudit {
        n_train: n,
        sv_count,
        bounded_count,
        margin_error_count,
        alpha_y_balance,
        max_box_violation,
        converged,
        iterations,
    }
}

const KKT_EPS: f64 = 1e-3;

fn solve_c(
    x: ArrayView2<'_, f64>,
    rows: &[usize],
    targets: &[f64],
    c: f64,
    gamma: f64,
) -> Solution {
    let n = rows.len();
    let q = build_q(x, rows, targets, gamma);
    let solver = Solver::new(
        &q,
        targets,
        vec![0.0; n],
        &vec![-1.0; n],
        c,
        KKT_EPS,
        false,
    );
    let (alpha, gradient, converged, iterations) = solver.solve();
    let rho = calculate_rho(&alpha, &gradient, targets, c);
    let alpha_signed: Vec<f64> = alpha
        .iter()
        .zip(targets)
        .map(|(&a, &y)| a * y)
        .collect();
    // decision values on the pair's own training rows, from the dual state:
    // f(x_i) = sum_j alpha_j y_j K_ij - rho = y_i (g_i - p_i) ... computed
    // directly from the kernel for clarity.
    let decisions = train_decisions(x, rows, &alpha_signed, rho, gamma);
    let audit = audit_solution(&alpha, &alpha_signed, &decisions, targets, c, converged, iterations);
    Solution {
        alpha_signed,
        rho,
        audit,
    }
}

fn solve_nu(
    x: ArrayView2<'_, f64>,
    rows: &[usize],
    targets: &[f64],
    nu: f64,
    gamma: f64,
) -> Result<Solution, ModelError> {
    let n = rows.len();
    let n_pos = targets.iter().filter(|&&t| t > 0.0).count();
    let n_neg = n - n_pos;
    if nu * n as f64 / 2.0 > n_pos.min(n_neg) as f64 {
        return Err(ModelError::InfeasibleNu { nu, n_pos, n_neg });
    }

    let q = build_q(x, rows, targets, gamma);
    let mut sum_pos = nu * n as f64 / 2.0;
    let mut sum_neg = sum_pos;
    let init_alpha: Vec<f64> = targets
        .iter()
        .map(|&t| {
            if t > 0.0 {
                let a = sum_pos.min(1.0);
                sum_pos -= a;
                a
            } else {
                let a = sum_neg.min(1.0);
                sum_neg -= a;
                a
            }
        })
        .collect();

    let solver = Solver::new(&q, targets, init_alpha, &vec![0.0; n], 1.0, KKT_EPS, true);
    let (alpha, gradient, converged, iterations) = solver.solve();
    let (rho_raw, r) = calculate_rho_nu(&alpha, &gradient, targets, 1.0);

    let rho = rho_raw / r;
    let alpha_scaled: Vec<f64> = alpha.iter().map(|&a| a / r).collect();
    let alpha_signed: Vec<f64> = alpha_scaled
        .iter()
        .zip(targets)
        .map(|(&a, &y)| a * y)
        .collect();
    let decisions = train_decisions(x, rows, &alpha_signed, rho, gamma);
    // The scaled solution lives in the box [0, 1/r].
    let audit = audit_solution(
        &alpha_scaled,
        &alpha_signed,
        &decisions,
        targets,
        1.0 / r,
        converged,
        iterations,
    );
    Ok(Solution {
        alpha_signed,
        rho,
        audit,
    })
}

fn train_decisions(
    x: ArrayView2<'_, f64>,
    rows: &[usize],
    alpha_signed: &[f64],
    rho: f64,
    gamma: f64,
) -> Vec<f64> {
    rows.iter()
        .map(|&r| {
            rows.iter()
                .zip(alpha_signed)
                .filter(|(_, &a)| a != 0.0)
                .map(|(&s, &a)| {
                    a * rbf_kernel(
                        x.row(s).as_slice().unwrap(),
                        x.row(r).as_slice().unwrap(),
                        gamma,
                    )
                })
                .sum::<f64>()
                - rho
        })
        .collect()
}

/// Fit one-vs-one machines over every class pair.
pub fn fit(
    x: ArrayView2<'_, f64>,
    y: &[usize],
    n_classes: usize,
    spec: &ClassifierSpec,
) -> Result<KernelSvmParams, ModelError> {
    let gamma = spec.gamma.unwrap_or_else(|| default_gamma(x));
    let mut machines = Vec::new();
    for a in 0..n_classes {
        for b in (a + 1)..n_classes {
            let rows: Vec<usize> = (0..y.len()).filter(|&i| y[i] == a || y[i] == b).collect();
            let targets: Vec<f64> = rows
                .iter()
                .map(|&i| if y[i] == a { 1.0 } else { -1.0 })
                .collect();
            let solution = match spec.kind {
                ClassifierKind::KernelSvmC => solve_c(x, &rows, &targets, spec.c, gamma),
                ClassifierKind::KernelSvmNu => solve_nu(x, &rows, &targets, spec.nu, gamma)?,
                _ => unreachable!("svm::fit called for non-kernel kind"),
            };
            // keep support vectors only
            let sv: Vec<usize> = (0..rows.len())
                .filter(|&i| solution.alpha_signed[i].abs() > SV_TOL)
                .collect();
            let mut support_x = Array2::zeros((sv.len(), x.ncols()));
            let mut alpha_signed = Vec::with_capacity(sv.len());
            for (out, &i) in sv.iter().enumerate() {
                support_x.row_mut(out).assign(&x.row(rows[i]));
                alpha_signed.push(solution.alpha_signed[i]);
            }
            machines.push(PairMachine {
                class_pos: a,
                class_neg: b,
                support_x,
                alpha_signed,
                rho: solution.rho,
                audit: solution.audit,
            });
        }
    }
    Ok(KernelSvmParams {
        gamma,
        n_classes,
        machines,
    })
}

/// One-vs-one vote; ties go to the lowest class index.
pub fn predict(params: &KernelSvmParams, x: ArrayView2<'_, f64>) -> Vec<usize> {
    x.rows()
        .into_iter()
        .map(|row| {
            let mut votes = vec![0usize; params.n_classes];
            for machine in &params.machines {
                let f = machine.decision(row.as_slice().unwrap(), params.gamma);
                if f > 0.0 {
                    votes[machine.class_pos] += 1;
                } else {
                    votes[machine.class_neg] += 1;
                }
            }
            let mut best = 0;
            for c in 1..params.n_classes {
                if votes[c] > votes[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}
