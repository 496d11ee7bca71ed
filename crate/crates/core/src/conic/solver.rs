//! ADMM on the homogeneous self-dual embedding.

use serde::Serialize;

use super::anderson::Anderson;
use super::ldl::Ldl;
use super::sparse::CscMatrix;
use super::{project_cone_in_place, ConeSpec, ConicProblem};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Settings {
    /// Relative tolerance on primal residual, dual residual and gap.
    pub tol: f64,
    pub max_iter: usize,
    /// Over-relaxation parameter in `(0, 2)`.
    pub over_relax: f64,
    /// Ruiz equilibration of the data.
    pub scale: bool,
    /// Anderson acceleration memory; 0 disables it.
    pub anderson_mem: usize,
    /// Rebalance the cost scaling when primal and dual residuals drift apart.
    pub adaptive_scale: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 50_000, over_relax: 1.5, scale: true, anderson_mem: 5, adaptive_scale: true }
    }
}

impl Settings {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Status {
    Optimal,
    MaxIterations,
    PrimalInfeasibleLikely,
    DualInfeasibleLikely,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
    /// `cᵀx`.
    pub objective: f64,
    pub status: Status,
    /// Relative `(primal, dual, gap)` residuals.
    pub residuals: (f64, f64, f64),
    pub iterations: usize,
}

impl Solution {
    /// `-bᵀy`, a lower bound on the optimum when `y` is dual feasible.
    pub fn dual_objective(&self, b: &[f64]) -> f64 {
        -dot(b, &self.y)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

fn two_norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

const MIN_SCALE: f64 = 1e-4;
const MAX_SCALE: f64 = 1e4;
const CHECK_EVERY: usize = 10;
/// Minimum iterations between cost rescalings, and the residual ratio that triggers one.
const ADAPT_INTERVAL: usize = 100;
const ADAPT_RATIO: f64 = 5.0;

struct Scaling {
    d: Vec<f64>,
    e: Vec<f64>,
    beta: f64,
    gamma: f64,
}

fn equilibrate(a: &CscMatrix, cones: &ConeSpec, c: &[f64], b: &[f64], on: bool) -> (CscMatrix, Scaling) {
    let (m, n) = (a.nrows, a.ncols);
    let mut d = vec![1.0; m];
    let mut e = vec![1.0; n];
    let mut scaled = a.clone();
    if on {
        let blocks = cones.psd_ranges();
        for _ in 0..10 {
            let mut rmax = vec![0.0_f64; m];
            let mut cmax = vec![0.0_f64; n];
            for col in 0..n {
                for p in scaled.colptr[col]..scaled.colptr[col + 1] {
                    let v = scaled.values[p].abs();
                    let r = scaled.rowind[p];
                    rmax[r] = rmax[r].max(v);
                    cmax[col] = cmax[col].max(v);
                }
            }
            for (_, r) in &blocks {
                let mx = rmax[r.clone()].iter().fold(0.0_f64, |a, &b| a.max(b));
                rmax[r.clone()].iter_mut().for_each(|x| *x = mx);
            }
            let step = |v: f64| if v < 1e-10 { 1.0 } else { 1.0 / v.sqrt() };
            for i in 0..m {
                d[i] = (d[i] * step(rmax[i])).clamp(MIN_SCALE, MAX_SCALE);
            }
            for j in 0..n {
                e[j] = (e[j] * step(cmax[j])).clamp(MIN_SCALE, MAX_SCALE);
            }
            scaled = a.clone();
            scaled.scale(&d, &e);
        }
    }
    let (beta, gamma) = if on && m > 0 && n > 0 {
        let mut row_sq = vec![0.0; m];
        let mut col_norm_sum = 0.0;
        for col in 0..n {
            let mut s = 0.0;
            for p in scaled.colptr[col]..scaled.colptr[col + 1] {
                let v = scaled.values[p];
                s += v * v;
                row_sq[scaled.rowind[p]] += v * v;
            }
            col_norm_sum += s.sqrt();
        }
        let mean_col = col_norm_sum / n as f64;
        let mean_row = row_sq.iter().map(|v| v.sqrt()).sum::<f64>() / m as f64;
        let bs: Vec<f64> = b.iter().zip(&d).map(|(x, s)| x * s).collect();
        let cs: Vec<f64> = c.iter().zip(&e).map(|(x, s)| x * s).collect();
        let beta = (mean_col / two_norm(&bs).max(MIN_SCALE)).clamp(1e-3, 1e3);
        let gamma = (mean_row / two_norm(&cs).max(MIN_SCALE)).clamp(1e-3, 1e3);
        (beta, gamma)
    } else {
        (1.0, 1.0)
    };
    (scaled, Scaling { d, e, beta, gamma })
}

/// `[[I, Aᵀ], [A, -I]]`, upper triangle.
fn kkt_upper(a: &CscMatrix) -> CscMatrix {
    let (m, n) = (a.nrows, a.ncols);
    let mut trip = Vec::with_capacity(a.nnz() + n + m);
    for j in 0..n {
        trip.push((j, j, 1.0));
    }
    for col in 0..n {
        for p in a.colptr[col]..a.colptr[col + 1] {
            trip.push((col, n + a.rowind[p], a.values[p]));
        }
    }
    for i in 0..m {
        trip.push((n + i, n + i, -1.0));
    }
    CscMatrix::from_triplets(n + m, n + m, &trip)
}

/// Solves `min cᵀx s.t. Ax + s = b, s ∈ K`.
///
/// Deterministic: identical inputs and settings give bitwise-identical output.
pub fn solve(p: &ConicProblem, settings: &Settings) -> Result<Solution> {
    let (m, n) = (p.num_rows(), p.num_vars());
    if !(0.0..2.0).contains(&settings.over_relax) || settings.over_relax == 0.0 {
        return Err(Error::BadParams(format!("over_relax {} outside (0, 2)", settings.over_relax)));
    }
    let (a, sc) = equilibrate(&p.a, &p.cones, &p.c, &p.b, settings.scale);
    let bh: Vec<f64> = p.b.iter().zip(&sc.d).map(|(x, s)| x * s * sc.beta).collect();
    let mut gamma = sc.gamma;
    let mut ch: Vec<f64> = p.c.iter().zip(&sc.e).map(|(x, s)| x * s * gamma).collect();

    let ldl = Ldl::factor(&kkt_upper(&a))?;
    let l = n + m;
    let mut work = vec![0.0; l];

    // g = (I + M)^{-1} h with h = (c, b)
    let rhs_h = |ch: &[f64], work: &mut Vec<f64>| {
        let mut g = vec![0.0; l];
        g[..n].copy_from_slice(ch);
        for i in 0..m {
            g[n + i] = -bh[i];
        }
        ldl.solve_in_place(&mut g, work);
        let hg = dot(ch, &g[..n]) + dot(&bh, &g[n..]);
        (g, hg)
    };
    let (mut g, mut hg) = rhs_h(&ch, &mut work);
    let mut last_adapt = 0;

    let norm_b = inf_norm(&p.b);
    let norm_c = inf_norm(&p.c);
    let alpha = settings.over_relax;

    // State z = (u, v), each of length l + 1.
    let mut z = vec![0.0; 2 * (l + 1)];
    z[l] = 1.0;
    z[2 * l + 1] = 1.0;
    let mut fz = z.clone();
    let mut ut = vec![0.0; l + 1];
    let mut rhs = vec![0.0; l];
    let mut accel = Anderson::new(settings.anderson_mem);

    let mut status = Status::MaxIterations;
    let mut residuals = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut iterations = settings.max_iter;
    let mut last: Option<(Vec<f64>, Vec<f64>, Vec<f64>)> = None;

    for it in 0..settings.max_iter {
        if it > 0 {
            let prev = z.clone();
            accel.next(&prev, &fz, &mut z);
        }
        let (u0, v0) = z.split_at(l + 1);
        // linear step
        for i in 0..n {
            rhs[i] = u0[i] + v0[i];
        }
        for i in 0..m {
            rhs[n + i] = -(u0[n + i] + v0[n + i]);
        }
        let w_tau = u0[l] + v0[l];
        ldl.solve_in_place(&mut rhs, &mut work);
        let hp = dot(&ch, &rhs[..n]) + dot(&bh, &rhs[n..]);
        let tau = (w_tau + hp) / (1.0 + hg);
        for i in 0..l {
            ut[i] = rhs[i] - g[i] * tau;
        }
        ut[l] = tau;

        // cone step with over-relaxation
        let (u, v) = fz.split_at_mut(l + 1);
        for i in 0..=l {
            let r = alpha * ut[i] + (1.0 - alpha) * u0[i];
            ut[i] = r;
            u[i] = r - v0[i];
        }
        project_cone_in_place(&p.cones, &mut u[n..l], true);
        u[l] = u[l].max(0.0);
        for i in 0..=l {
            v[i] = v0[i] + u[i] - ut[i];
        }
        let (u, v) = (&*u, &*v);

        let check = (it + 1) % CHECK_EVERY == 0 || it + 1 == settings.max_iter;
        if !check {
            continue;
        }
        if u.iter().chain(v).any(|x| !x.is_finite()) {
            return Err(Error::NumericalBreakdown(format!("non-finite iterate at iteration {}", it + 1)));
        }
        let (tau, kappa) = (u[l], v[l]);
        let mut rescale = None;
        if tau > 0.0 {
            let x: Vec<f64> = (0..n).map(|i| u[i] * sc.e[i] / (sc.beta * tau)).collect();
            let y: Vec<f64> = (0..m).map(|i| u[n + i] * sc.d[i] / (gamma * tau)).collect();
            let s: Vec<f64> = (0..m).map(|i| v[n + i] / (sc.d[i] * sc.beta * tau)).collect();
            let mut pr = p.a.mul(&x);
            for i in 0..m {
                pr[i] += s[i] - p.b[i];
            }
            let mut dr = p.a.tr_mul(&y);
            for i in 0..n {
                dr[i] += p.c[i];
            }
            let ctx = dot(&p.c, &x);
            let bty = dot(&p.b, &y);
            let res = (
                inf_norm(&pr) / (1.0 + norm_b),
                inf_norm(&dr) / (1.0 + norm_c),
                (ctx + bty).abs() / (1.0 + ctx.abs() + bty.abs()),
            );
            residuals = res;
            let done = res.0 <= settings.tol && res.1 <= settings.tol && res.2 <= settings.tol;
            last = Some((x, y, s));
            if done {
                status = Status::Optimal;
                iterations = it + 1;
                break;
            }
            // The dual half of the embedding (y, r, kappa) is linear in the
            // cost scaling, so rebalancing only rescales it.
            let ratio = res.1 / res.0.max(f64::MIN_POSITIVE);
            if settings.adaptive_scale
                && it + 1 - last_adapt >= ADAPT_INTERVAL
                && !(1.0 / ADAPT_RATIO..=ADAPT_RATIO).contains(&ratio)
            {
                let f = ratio.sqrt().clamp(0.1, 10.0);
                let next = (gamma * f).clamp(sc.gamma * 1e-4, sc.gamma * 1e4);
                let f = next / gamma;
                if f != 1.0 {
                    gamma = next;
                    rescale = Some(f);
                    last_adapt = it + 1;
                }
            }
        }
        if tau < kappa {
            let yc: Vec<f64> = (0..m).map(|i| u[n + i] * sc.d[i]).collect();
            let bty = dot(&p.b, &yc);
            if bty < 0.0 && inf_norm(&p.a.tr_mul(&yc)) / -bty <= settings.tol {
                status = Status::PrimalInfeasibleLikely;
                iterations = it + 1;
                let y = yc.iter().map(|v| v / -bty).collect();
                last = Some((vec![f64::NAN; n], y, vec![f64::NAN; m]));
                break;
            }
            let xc: Vec<f64> = (0..n).map(|i| u[i] * sc.e[i]).collect();
            let scert: Vec<f64> = (0..m).map(|i| v[n + i] / sc.d[i]).collect();
            let ctx = dot(&p.c, &xc);
            if ctx < 0.0 {
                let mut r = p.a.mul(&xc);
                for i in 0..m {
                    r[i] += scert[i];
                }
                if inf_norm(&r) / -ctx <= settings.tol {
                    status = Status::DualInfeasibleLikely;
                    iterations = it + 1;
                    let x = xc.iter().map(|v| v / -ctx).collect();
                    let s = scert.iter().map(|v| v / -ctx).collect();
                    last = Some((x, vec![f64::NAN; m], s));
                    break;
                }
            }
        }
        if let Some(f) = rescale {
            ch.iter_mut().for_each(|c| *c *= f);
            (g, hg) = rhs_h(&ch, &mut work);
            let (u, v) = fz.split_at_mut(l + 1);
            u[n..l].iter_mut().for_each(|y| *y *= f);
            v[..n].iter_mut().for_each(|r| *r *= f);
            v[l] *= f;
            accel.reset();
        }
    }

    let (x, y, mut s) = last.unwrap_or_else(|| (vec![f64::NAN; n], vec![f64::NAN; m], vec![f64::NAN; m]));
    if s.iter().all(|v| v.is_finite()) {
        project_cone_in_place(&p.cones, &mut s, false);
    }
    let objective = dot(&p.c, &x);
    Ok(Solution { x, y, s, objective, status, residuals, iterations })
}
