//! Shared oracles for integration and acceptance tests. Everything here is
//! deliberately independent of the library's computational path: dense
//! Gauss-Jordan inverses, LU determinants, and a derivative-free optimizer.

#![allow(dead_code)]

use scmanova::data_model::{Grouping, LogData};

pub const LN_2PI: f64 = 1.8378770664093453;

pub fn naive_inverse(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot_row);
        let pivot = a[col][col];
        for j in 0..2 * n {
            a[col][j] /= pivot;
        }
        for i in 0..n {
            if i != col {
                let f = a[i][col];
                for j in 0..2 * n {
                    a[i][j] -= f * a[col][j];
                }
            }
        }
    }
    a.into_iter().map(|r| r[n..2 * n].to_vec()).collect()
}

/// Log-determinant by LU elimination; panics when the matrix is not
/// positive definite (odd sign).
pub fn naive_log_det(m: &[Vec<f64>]) -> Option<f64> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let mut log_det = 0.0;
    let mut sign = 1.0;
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())
            .unwrap();
        if pivot_row != col {
            a.swap(col, pivot_row);
            sign = -sign;
        }
        let pivot = a[col][col];
        if pivot == 0.0 {
            return None;
        }
        log_det += pivot.abs().ln();
        if pivot < 0.0 {
            sign = -sign;
        }
        for i in (col + 1)..n {
            let f = a[i][col] / pivot;
            for j in col..n {
                a[i][j] -= f * a[col][j];
            }
        }
    }
    (sign > 0.0).then_some(log_det)
}

/// Smallest eigenvalue sign proxy: all leading principal minors positive.
pub fn naive_is_pd(m: &[Vec<f64>]) -> bool {
    (1..=m.len()).all(|k| {
        let sub: Vec<Vec<f64>> = (0..k).map(|i| m[i][..k].to_vec()).collect();
        naive_log_det(&sub).is_some()
    })
}

/// Adaptive Nelder-Mead minimization. Returns the best vertex and value.
pub fn nelder_mead(
    f: &dyn Fn(&[f64]) -> f64,
    x0: &[f64],
    step: f64,
    max_iter: usize,
) -> (Vec<f64>, f64) {
    let n = x0.len();
    if n == 0 {
        return (vec![], f(x0));
    }
    // Gao-Han adaptive coefficients.
    let nf = n as f64;
    let alpha = 1.0;
    let beta = 1.0 + 2.0 / nf;
    let gamma = 0.75 - 1.0 / (2.0 * nf);
    let delta = 1.0 - 1.0 / nf;

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += if v[i].abs() > 1.0 {
            step * v[i].abs()
        } else {
            step
        };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    for _ in 0..max_iter {
        // Order ascending by value.
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        let reordered: Vec<Vec<f64>> = order.iter().map(|&i| simplex[i].clone()).collect();
        let revalues: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        simplex = reordered;
        values = revalues;

        let spread = values[n] - values[0];
        let diam = (0..n)
            .map(|j| {
                simplex
                    .iter()
                    .map(|v| (v[j] - simplex[0][j]).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread.abs() < 1e-14 && diam < 1e-10 {
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / nf)
            .collect();
        let worst = simplex[n].clone();
        let reflect: Vec<f64> = (0..n)
            .map(|j| centroid[j] + alpha * (centroid[j] - worst[j]))
            .collect();
        let fr = f(&reflect);
        if fr < values[0] {
            let expand: Vec<f64> = (0..n)
                .map(|j| centroid[j] + beta * (reflect[j] - centroid[j]))
                .collect();
            let fe = f(&expand);
            if fe < fr {
                simplex[n] = expand;
                values[n] = fe;
            } else {
                simplex[n] = reflect;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = reflect;
            values[n] = fr;
        } else {
            let (point, fp) = if fr < values[n] {
                let outside: Vec<f64> = (0..n)
                    .map(|j| centroid[j] + gamma * (reflect[j] - centroid[j]))
                    .collect();
                let fo = f(&outside);
                (outside, fo)
            } else {
                let inside: Vec<f64> = (0..n)
                    .map(|j| centroid[j] - gamma * (centroid[j] - worst[j]))
                    .collect();
                let fi = f(&inside);
                (inside, fi)
            };
            if fp < values[n].min(fr) {
                simplex[n] = point;
                values[n] = fp;
            } else {
                // Shrink toward the best vertex.
                for i in 1..=n {
                    for j in 0..n {
                        simplex[i][j] = simplex[0][j] + delta * (simplex[i][j] - simplex[0][j]);
                    }
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }
    let mut best = 0;
    for i in 1..=n {
        if values[i] < values[best] {
            best = i;
        }
    }
    (simplex[best].clone(), values[best])
}

/// Maximization with restarts: re-runs from the incumbent until the value
/// stops improving.
pub fn maximize_with_restarts(
    f: &dyn Fn(&[f64]) -> f64,
    x0: &[f64],
    step: f64,
    rounds: usize,
) -> (Vec<f64>, f64) {
    let neg = |x: &[f64]| -f(x);
    let (mut x, mut v) = nelder_mead(&neg, x0, step, 20_000);
    for round in 1..rounds {
        let s = step / (2.0f64).powi(round as i32);
        // The restart simplex contains the incumbent, so the value cannot
        // get worse.
        let (x2, v2) = nelder_mead(&neg, &x, s, 20_000);
        if v2 <= v {
            x = x2;
            v = v2;
        }
    }
    (x, -v)
}

/// The continuous part of the penalized log-likelihood as a plain function
/// of packed parameters: all defined means first, then the log-diagonal and
/// strict lower triangle of the covariance's Cholesky factor.
pub struct ContinuousObjective {
    /// (group, support, log values) per observation with s > 0.
    pub observations: Vec<(usize, Vec<usize>, Vec<f64>)>,
    pub p: usize,
    pub groups: usize,
    /// Map (group, variable) -> parameter slot; None where undefined.
    pub mu_slots: Vec<Vec<Option<usize>>>,
    pub n_mu: usize,
    pub lambda: f64,
}

impl ContinuousObjective {
    pub fn new(ld: &LogData, grouping: &Grouping, lambda: f64, pooled: bool) -> Self {
        let p = ld.p();
        let groups = if pooled { 1 } else { grouping.n_groups() };
        let mut seen = vec![vec![false; p]; groups];
        let mut observations = Vec::new();
        for i in 0..ld.n() {
            let g = if pooled { 0 } else { grouping.id(i) };
            let support: Vec<usize> = ld
                .pattern(i)
                .support()
                .iter()
                .map(|&j| j as usize)
                .collect();
            if support.is_empty() {
                continue;
            }
            for &j in &support {
                seen[g][j] = true;
            }
            observations.push((g, support, ld.log_values(i).to_vec()));
        }
        let mut mu_slots = vec![vec![None; p]; groups];
        let mut n_mu = 0;
        for g in 0..groups {
            for j in 0..p {
                if seen[g][j] {
                    mu_slots[g][j] = Some(n_mu);
                    n_mu += 1;
                }
            }
        }
        ContinuousObjective {
            observations,
            p,
            groups,
            mu_slots,
            n_mu,
            lambda,
        }
    }

    pub fn dim(&self) -> usize {
        self.n_mu + self.p + self.p * (self.p - 1) / 2
    }

    /// Packs (means, covariance) into a parameter vector.
    pub fn pack(&self, mu: &[Vec<Option<f64>>], sigma: &[Vec<f64>]) -> Option<Vec<f64>> {
        let mut x = vec![0.0; self.dim()];
        for g in 0..self.groups {
            for j in 0..self.p {
                if let Some(slot) = self.mu_slots[g][j] {
                    x[slot] = mu[g][j]?;
                }
            }
        }
        // Dense Cholesky of sigma for the start point.
        let mut l = vec![vec![0.0; self.p]; self.p];
        for i in 0..self.p {
            for j in 0..=i {
                let mut acc = sigma[i][j];
                for k in 0..j {
                    acc -= l[i][k] * l[j][k];
                }
                if i == j {
                    if acc <= 0.0 {
                        return None;
                    }
                    l[i][i] = acc.sqrt();
                } else {
                    l[i][j] = acc / l[j][j];
                }
            }
        }
        let mut idx = self.n_mu;
        for j in 0..self.p {
            x[idx] = l[j][j].ln();
            idx += 1;
        }
        for i in 1..self.p {
            for j in 0..i {
                x[idx] = l[i][j];
                idx += 1;
            }
        }
        Some(x)
    }

    /// Unpacks the parameter vector into (means, covariance).
    pub fn unpack(&self, x: &[f64]) -> (Vec<Vec<Option<f64>>>, Vec<Vec<f64>>) {
        let mut mu = vec![vec![None; self.p]; self.groups];
        for g in 0..self.groups {
            for j in 0..self.p {
                if let Some(slot) = self.mu_slots[g][j] {
                    mu[g][j] = Some(x[slot]);
                }
            }
        }
        let mut l = vec![vec![0.0; self.p]; self.p];
        let mut idx = self.n_mu;
        for j in 0..self.p {
            l[j][j] = x[idx].exp();
            idx += 1;
        }
        for i in 1..self.p {
            for j in 0..i {
                l[i][j] = x[idx];
                idx += 1;
            }
        }
        let mut sigma = vec![vec![0.0; self.p]; self.p];
        for i in 0..self.p {
            for j in 0..self.p {
                let mut acc = 0.0;
                for k in 0..=i.min(j) {
                    acc += l[i][k] * l[j][k];
                }
                sigma[i][j] = acc;
            }
        }
        (mu, sigma)
    }

    /// Continuous penalized log-likelihood at packed parameters.
    pub fn value(&self, x: &[f64]) -> f64 {
        let (mu, sigma) = self.unpack(x);
        self.value_at(&mu, &sigma)
    }

    /// Continuous penalized log-likelihood at explicit parameters, computed
    /// with dense inverses and determinants only.
    pub fn value_at(&self, mu: &[Vec<Option<f64>>], sigma: &[Vec<f64>]) -> f64 {
        let mut total = 0.0;
        for (g, support, values) in &self.observations {
            let s = support.len();
            let sub: Vec<Vec<f64>> = support
                .iter()
                .map(|&a| support.iter().map(|&b| sigma[a][b]).collect())
                .collect();
            let log_det = match naive_log_det(&sub) {
                Some(v) => v,
                None => return f64::NEG_INFINITY,
            };
            let inv = naive_inverse(&sub);
            let r: Vec<f64> = support
                .iter()
                .zip(values.iter())
                .map(|(&j, &v)| v - mu[*g][j].expect("mean defined on support"))
                .collect();
            let mut quad = 0.0;
            let mut inv_trace = 0.0;
            for a in 0..s {
                inv_trace += inv[a][a];
                for b in 0..s {
                    quad += r[a] * inv[a][b] * r[b];
                }
            }
            total += -0.5 * s as f64 * LN_2PI - 0.5 * log_det - 0.5 * quad;
            total += -0.5 * self.lambda * inv_trace;
        }
        total
    }
}

/// Count-probability oracle: maximizes the discrete log-likelihood over the
/// constrained probabilities via a softmax parameterization of the pattern
/// class masses.
pub fn maximize_count_probs(counts: &[usize], p: usize) -> Vec<f64> {
    let binom: Vec<f64> = (0..=p)
        .map(|s| {
            let s = s.min(p - s);
            let mut c = 1.0f64;
            for t in 0..s {
                c = c * (p - t) as f64 / (t + 1) as f64;
            }
            c
        })
        .collect();
    let objective = |logits: &[f64]| -> f64 {
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = logits.iter().map(|v| (v - max).exp()).sum();
        let mut ll = 0.0;
        for (s, &count) in counts.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let log_q = logits[s] - max - z.ln();
            ll += count as f64 * (log_q - binom[s].ln());
        }
        ll
    };
    let x0 = vec![0.0; p + 1];
    let (logits, _) = maximize_with_restarts(&objective, &x0, 0.5, 3);
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logits.iter().map(|v| (v - max).exp()).sum();
    (0..=p)
        .map(|s| ((logits[s] - max).exp() / z) / binom[s])
        .collect()
}

/// Kolmogorov-Smirnov statistic of samples against a CDF.
pub fn ks_statistic(samples: &mut [f64], cdf: &dyn Fn(f64) -> f64) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max(((i + 1) as f64 / n - f).abs());
        d = d.max((i as f64 / n - f).abs());
    }
    d
}
