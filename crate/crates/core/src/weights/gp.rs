use super::{StratumParams, WeightError};

const KKT_TOL: f64 = 1e-8;
const MAX_ITER: usize = 100_000;
const U_FLOOR: f64 = -60.0;

#[derive(Clone, Debug, PartialEq)]
pub struct GpResiduals {
    /// Largest λᵢ − λᵢ₊₁.
    pub monotonicity: f64,
    /// |Σ (1 − λᵢ)(mᵢ₊₁ − mᵢ) − 1|.
    pub normalization: f64,
    pub stationarity: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GpSolution {
    pub lambdas: Vec<f64>,
    pub log_likelihood: f64,
    pub converged: bool,
    pub residuals: GpResiduals,
}

/// (wᵢ, dᵢ): evidence and world mass between consecutive cuts. A level that
/// holds evidence holds at least one world.
fn increments(p: &StratumParams) -> Result<(Vec<f64>, Vec<f64>), WeightError> {
    let n = p.n();
    if p.e_counts.len() != n + 1 || p.m_counts.len() != n + 1 {
        return Err(WeightError::Infeasible(format!("expected {} counts per series", n + 1)));
    }
    if p.m_counts[n] <= 0.0 {
        return Err(WeightError::Infeasible("no world satisfies the hard rules".into()));
    }
    let w: Vec<f64> = (0..n).map(|i| (p.e_counts[i + 1] - p.e_counts[i]).max(0.0)).collect();
    let d: Vec<f64> = (0..n)
        .map(|i| {
            let d = (p.m_counts[i + 1] - p.m_counts[i]).max(0.0);
            if w[i] > 0.0 {
                d.max(1.0)
            } else {
                d
            }
        })
        .collect();
    Ok((w, d))
}

/// Σ wᵢ log(1 − λᵢ), with 0·log 0 = 0.
pub fn log_likelihood(params: &StratumParams, lambdas: &[f64]) -> f64 {
    let n = params.n();
    (0..n)
        .map(|i| {
            let w = (params.e_counts[i + 1] - params.e_counts[i]).max(0.0);
            if w == 0.0 {
                0.0
            } else {
                w * (1.0 - lambdas[i]).ln()
            }
        })
        .sum()
}

fn residuals(w: &[f64], d: &[f64], x: &[f64]) -> GpResiduals {
    let n = x.len();
    let monotonicity = (0..n.saturating_sub(1)).map(|i| (x[i + 1] - x[i]).max(0.0)).fold(0.0, f64::max);
    let normalization = (x.iter().zip(d).map(|(x, d)| x * d).sum::<f64>() - 1.0).abs();
    // within each block of equal x the gradient of the Lagrangian sums to 0
    let total: f64 = w.iter().sum();
    let mut stationarity: f64 = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && (x[j + 1] - x[i]).abs() <= 1e-12 * x[i].max(1.0) {
            j += 1;
        }
        if x[i] > 0.0 {
            let g: f64 = (i..=j).map(|t| w[t] / x[i] - total * d[t]).sum();
            stationarity = stationarity.max(g.abs() / total.max(1.0));
        }
        i = j + 1;
    }
    GpResiduals { monotonicity, normalization, stationarity }
}

fn solution(params: &StratumParams, w: &[f64], d: &[f64], x: Vec<f64>, converged: bool) -> GpSolution {
    let lambdas: Vec<f64> = x.iter().map(|x| (1.0 - x).clamp(0.0, 1.0)).collect();
    GpSolution { log_likelihood: log_likelihood(params, &lambdas), residuals: residuals(w, d, &x), lambdas, converged }
}

/// Pools adjacent violators so that `values` (ratios num/den) become
/// non-increasing; returns one value per index.
fn pava(num: &[f64], den: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, f64, usize)> = Vec::new();
    for i in 0..num.len() {
        blocks.push((num[i], den[i], 1));
        while blocks.len() > 1 {
            let (n2, d2, c2) = blocks[blocks.len() - 1];
            let (n1, d1, c1) = blocks[blocks.len() - 2];
            // merge while the later block's ratio exceeds the earlier one's
            if n2 * d1 > n1 * d2 {
                blocks.truncate(blocks.len() - 2);
                blocks.push((n1 + n2, d1 + d2, c1 + c2));
            } else {
                break;
            }
        }
    }
    blocks.into_iter().flat_map(|(n, d, c)| std::iter::repeat_n(n / d, c)).collect()
}

/// Maximum-likelihood stratum weights: maximize Σ wᵢ log(1 − λᵢ) subject to
/// λ non-decreasing and Σ (1 − λᵢ) dᵢ = 1. The optimum pools adjacent
/// levels whose evidence-to-world ratios violate the order; the result is
/// refined by projected gradient when its KKT residual is not small.
pub fn solve_gp(params: &StratumParams) -> Result<GpSolution, WeightError> {
    let (w, d) = increments(params)?;
    let total: f64 = w.iter().sum();
    let mass: f64 = d.iter().sum();
    if total == 0.0 {
        return Ok(solution(params, &w, &d, vec![1.0 / mass; w.len()], true));
    }
    // levels with neither evidence nor worlds take their neighbour's value
    let live: Vec<usize> = (0..w.len()).filter(|&i| d[i] > 0.0).collect();
    let ratios = pava(&live.iter().map(|&i| w[i]).collect::<Vec<_>>(), &live.iter().map(|&i| d[i]).collect::<Vec<_>>());
    let mut x = vec![f64::NAN; w.len()];
    for (j, &i) in live.iter().enumerate() {
        x[i] = ratios[j] / total;
    }
    for i in 1..x.len() {
        if x[i].is_nan() {
            x[i] = x[i - 1];
        }
    }
    for i in (0..x.len().saturating_sub(1)).rev() {
        if x[i].is_nan() {
            x[i] = x[i + 1];
        }
    }
    let sol = solution(params, &w, &d, x, true);
    let r = &sol.residuals;
    if r.monotonicity <= 1e-12 && r.normalization <= 1e-9 && r.stationarity <= KKT_TOL {
        return Ok(sol);
    }
    solve_gp_gradient(params)
}

/// Isotonic (non-increasing) least-squares projection.
fn project(v: &mut [f64]) {
    let ones = vec![1.0; v.len()];
    let p = pava(v, &ones);
    v.copy_from_slice(&p);
}

/// Projected gradient ascent in u = log(1 − λ) on the normalized objective
/// F(v) = Σ wᵢ vᵢ − W log Σ dᵢ e^{vᵢ} over non-increasing v, with
/// backtracking.
pub fn solve_gp_gradient(params: &StratumParams) -> Result<GpSolution, WeightError> {
    let (w, d) = increments(params)?;
    let n = w.len();
    let total: f64 = w.iter().sum();
    let lse = |v: &[f64]| {
        let m = v.iter().zip(&d).filter(|(_, &d)| d > 0.0).map(|(v, _)| *v).fold(f64::NEG_INFINITY, f64::max);
        m + v.iter().zip(&d).map(|(v, d)| d * (v - m).exp()).sum::<f64>().ln()
    };
    let f = |v: &[f64]| v.iter().zip(&w).map(|(v, w)| w * v).sum::<f64>() - total * lse(v);
    let mut v = vec![0.0; n];
    let mut step = 1.0;
    let mut converged = false;
    for _ in 0..MAX_ITER {
        let z = lse(&v);
        let grad: Vec<f64> = (0..n).map(|i| w[i] - total * d[i] * (v[i] - z).exp()).collect();
        let fv = f(&v);
        let mut moved = false;
        let mut next = v.clone();
        while step > 1e-16 {
            for i in 0..n {
                next[i] = v[i] + step * grad[i] / total.max(1.0);
            }
            project(&mut next);
            for x in &mut next {
                *x = x.max(U_FLOOR);
            }
            if f(&next) >= fv - 1e-15 {
                moved = true;
                break;
            }
            step *= 0.5;
        }
        let delta = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if moved {
            v = next;
            step = (step * 2.0).min(1e6);
        }
        if !moved || delta < KKT_TOL {
            converged = moved || delta < KKT_TOL;
            break;
        }
    }
    let z = lse(&v);
    let x: Vec<f64> = v.iter().map(|v| if *v <= U_FLOOR { 0.0 } else { (v - z).exp() }).collect();
    Ok(solution(params, &w, &d, x, converged))
}

/// Brute-force optimum over a grid of `steps` values per free level, the
/// last level fixed by normalization. For testing small programs.
pub fn grid_optimum(params: &StratumParams, steps: usize) -> Option<(Vec<f64>, f64)> {
    let (w, d) = increments(params).ok()?;
    let n = w.len();
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut idx = vec![0usize; n - 1];
    loop {
        let mut x: Vec<f64> = idx
            .iter()
            .enumerate()
            .map(|(i, &j)| if d[i] > 0.0 { j as f64 / steps as f64 / d[i] } else { 0.0 })
            .collect();
        let used: f64 = x.iter().zip(&d).map(|(x, d)| x * d).sum();
        if d[n - 1] > 0.0 && used <= 1.0 + 1e-12 {
            x.push((1.0 - used).max(0.0) / d[n - 1]);
            let monotone = x.windows(2).all(|p| p[1] <= p[0] + 1e-12);
            let feasible = w.iter().zip(&x).all(|(w, x)| *w == 0.0 || *x > 0.0);
            if monotone && feasible {
                let lambdas: Vec<f64> = x.iter().map(|x| 1.0 - x).collect();
                let ll = log_likelihood(params, &lambdas);
                if best.as_ref().is_none_or(|b| ll > b.1) {
                    best = Some((lambdas, ll));
                }
            }
        }
        let mut pos = 0;
        loop {
            if pos == idx.len() {
                return best;
            }
            idx[pos] += 1;
            if idx[pos] <= steps {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}
