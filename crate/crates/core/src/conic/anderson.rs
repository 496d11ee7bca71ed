//! Safeguarded type-II Anderson acceleration for a fixed-point map `x ↦ F(x)`.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

/// An accelerated step is kept only if its residual is at most this multiple
/// of the residual at the point it was extrapolated from.
const SAFEGUARD: f64 = 1.0;
const REGULARIZATION: f64 = 1e-10;

pub(crate) struct Anderson {
    mem: usize,
    dg: VecDeque<Vec<f64>>,
    df: VecDeque<Vec<f64>>,
    /// `gram[i][j] = ⟨dg_i, dg_j⟩`, kept in step with `dg`.
    gram: VecDeque<VecDeque<f64>>,
    prev: Option<(Vec<f64>, Vec<f64>)>,
    /// Plain step and residual norm to fall back on after an accelerated step.
    fallback: Option<(Vec<f64>, f64)>,
    pub rejected: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

impl Anderson {
    pub fn new(mem: usize) -> Self {
        Self { mem, dg: VecDeque::new(), df: VecDeque::new(), gram: VecDeque::new(), prev: None, fallback: None, rejected: 0 }
    }

    pub fn reset(&mut self) {
        self.dg.clear();
        self.df.clear();
        self.gram.clear();
        self.prev = None;
        self.fallback = None;
    }

    /// Given the current point `x` and `f = F(x)`, writes the next point to `out`.
    pub fn next(&mut self, x: &[f64], f: &[f64], out: &mut [f64]) {
        let g: Vec<f64> = f.iter().zip(x).map(|(a, b)| a - b).collect();
        let gn = norm(&g);
        if let Some((plain, base)) = self.fallback.take() {
            if !(gn <= SAFEGUARD * base) {
                self.rejected += 1;
                out.copy_from_slice(&plain);
                self.reset();
                return;
            }
        }
        out.copy_from_slice(f);
        if self.mem == 0 {
            return;
        }
        if let Some((gp, fp)) = self.prev.take() {
            if self.dg.len() == self.mem {
                self.dg.pop_front();
                self.df.pop_front();
                self.gram.pop_front();
                self.gram.iter_mut().for_each(|row| {
                    row.pop_front();
                });
            }
            let d: Vec<f64> = g.iter().zip(&gp).map(|(a, b)| a - b).collect();
            let mut row: VecDeque<f64> = self.dg.iter().map(|o| dot(o, &d)).collect();
            for (r, v) in self.gram.iter_mut().zip(&row) {
                r.push_back(*v);
            }
            row.push_back(dot(&d, &d));
            self.gram.push_back(row);
            self.dg.push_back(d);
            self.df.push_back(f.iter().zip(&fp).map(|(a, b)| a - b).collect());
        }
        self.prev = Some((g.clone(), f.to_vec()));
        let k = self.dg.len();
        if k == 0 {
            return;
        }
        // Normal equations of min ‖g − ΔG γ‖.
        let mut gram = DMatrix::zeros(k, k);
        let mut rhs = DVector::zeros(k);
        for i in 0..k {
            rhs[i] = dot(&self.dg[i], &g);
            for j in 0..k {
                gram[(i, j)] = self.gram[i][j];
            }
        }
        let trace: f64 = (0..k).map(|i| gram[(i, i)]).sum();
        for i in 0..k {
            gram[(i, i)] += REGULARIZATION * trace.max(f64::MIN_POSITIVE);
        }
        let Some(gamma) = gram.cholesky().map(|c| c.solve(&rhs)) else {
            self.reset();
            return;
        };
        for i in 0..k {
            let c = gamma[i];
            for (o, d) in out.iter_mut().zip(&self.df[i]) {
                *o -= c * d;
            }
        }
        if out.iter().any(|v| !v.is_finite()) {
            out.copy_from_slice(f);
            self.reset();
            return;
        }
        self.fallback = Some((f.to_vec(), gn));
    }
}
