//! Variational Bayesian Gaussian mixture with automatic component pruning.
//!
//! Mean-field posterior `q(Z) q(π) Π_k q(μ_k, Λ_k)` with a symmetric
//! Dirichlet prior on the weights and a Normal–Wishart prior on each
//! component. Updates alternate between the closed-form posterior over the
//! parameters and the responsibilities; each half-step maximizes the
//! evidence lower bound over its factor, so the bound never decreases.

use std::f64::consts::{LN_2, PI};

use nalgebra::Matrix2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, ln_gamma};

use super::{kmeans_pp_seeds, nearest, ClusterResult, ClusteringError, Component};
use crate::geometry::Point;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VigmmConfig {
    /// Upper bound on the number of mixture components.
    pub n_max: usize,
    /// Dirichlet concentration; `None` means `1 / n_max`.
    pub dirichlet_alpha0: Option<f64>,
    /// Precision scaling of the prior on the component means.
    pub beta0: f64,
    /// Wishart degrees of freedom.
    pub nu0: f64,
    /// Prior covariance scale `σ0²` so that `W0 = I / (ν0 σ0²)`; `None`
    /// uses the mean per-axis data variance divided by `prior_shrink`.
    pub prior_scale: Option<f64>,
    /// How much smaller a component is expected to be than the whole
    /// cloud, as a variance ratio.
    pub prior_shrink: f64,
    /// Relative change of the bound that counts as converged.
    pub elbo_tol: f64,
    pub max_iters: usize,
    /// Components with expected weight below this are dropped; `None` means
    /// `max(1e-2, 2 / n_points)`.
    pub weight_prune_threshold: Option<f64>,
    /// Try merge moves after convergence. `None` leaves the choice to the
    /// caller: [`fit_vigmm`] merges, the identification pipeline does not
    /// because its refinement stage expects over-segmented clusters.
    pub merge_moves: Option<bool>,
    pub seed: u64,
}

impl Default for VigmmConfig {
    fn default() -> Self {
        Self {
            n_max: 30,
            dirichlet_alpha0: None,
            beta0: 1.0,
            nu0: 3.0,
            prior_scale: None,
            prior_shrink: 10.0,
            elbo_tol: 1e-4,
            max_iters: 200,
            weight_prune_threshold: None,
            merge_moves: None,
            seed: 0,
        }
    }
}

impl VigmmConfig {
    pub fn validate(&self) -> Result<(), ClusteringError> {
        if self.n_max == 0 {
            return Err(ClusteringError::InvalidConfig("n_max must be at least 1"));
        }
        if !(self.nu0 > 1.0) {
            return Err(ClusteringError::InvalidConfig("nu0 must exceed 1"));
        }
        if !(self.beta0 > 0.0) {
            return Err(ClusteringError::InvalidConfig("beta0 must be positive"));
        }
        if matches!(self.dirichlet_alpha0, Some(a) if !(a > 0.0)) {
            return Err(ClusteringError::InvalidConfig("dirichlet_alpha0 must be positive"));
        }
        if matches!(self.prior_scale, Some(s) if !(s > 0.0)) || !(self.prior_shrink > 0.0) {
            return Err(ClusteringError::InvalidConfig("prior_scale and prior_shrink must be positive"));
        }
        if matches!(self.weight_prune_threshold, Some(t) if !(t > 0.0 && t < 1.0)) {
            return Err(ClusteringError::InvalidConfig(
                "weight_prune_threshold must lie in (0, 1)",
            ));
        }
        if !(self.elbo_tol >= 0.0) || self.max_iters == 0 {
            return Err(ClusteringError::InvalidConfig("invalid convergence settings"));
        }
        Ok(())
    }
}

/// Variational posterior over the mixture parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct VigmmPosterior {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub mean: Vec<Point>,
    /// Wishart scale matrices.
    pub w: Vec<Matrix2<f64>>,
    pub nu: Vec<f64>,
}

impl VigmmPosterior {
    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    fn e_ln_lambda(&self, k: usize) -> f64 {
        let nu = self.nu[k];
        digamma(0.5 * nu) + digamma(0.5 * (nu - 1.0)) + 2.0 * LN_2 + self.w[k].determinant().ln()
    }

    fn e_ln_pi(&self) -> Vec<f64> {
        let total = digamma(self.alpha.iter().sum());
        self.alpha.iter().map(|&a| digamma(a) - total).collect()
    }

    fn keep(&self, idx: &[usize]) -> Self {
        Self {
            alpha: idx.iter().map(|&k| self.alpha[k]).collect(),
            beta: idx.iter().map(|&k| self.beta[k]).collect(),
            mean: idx.iter().map(|&k| self.mean[k]).collect(),
            w: idx.iter().map(|&k| self.w[k]).collect(),
            nu: idx.iter().map(|&k| self.nu[k]).collect(),
        }
    }
}

/// Fixed prior hyperparameters resolved against the data.
struct Prior {
    alpha0: f64,
    beta0: f64,
    nu0: f64,
    m0: Point,
    w0_inv: Matrix2<f64>,
}

impl Prior {
    fn ln_b(w_det: f64, nu: f64) -> f64 {
        -0.5 * nu * w_det.ln() - nu * LN_2 - 0.5 * PI.ln() - ln_gamma(0.5 * nu) - ln_gamma(0.5 * (nu - 1.0))
    }
}

/// Responsibility-weighted sufficient statistics, centered at the prior mean.
struct Stats {
    n: Vec<f64>,
    s1: Vec<Point>,
    s2: Vec<Matrix2<f64>>,
}

fn stats(points: &[Point], resp: &[f64], k: usize, m0: &Point) -> Stats {
    let mut n = vec![0.0; k];
    let mut s1 = vec![Point::zeros(); k];
    let mut s2 = vec![[0.0f64; 3]; k];
    for (i, p) in points.iter().enumerate() {
        let dx = p.x - m0.x;
        let dy = p.y - m0.y;
        let row = &resp[i * k..(i + 1) * k];
        for (j, &r) in row.iter().enumerate() {
            if r == 0.0 {
                continue;
            }
            n[j] += r;
            s1[j].x += r * dx;
            s1[j].y += r * dy;
            s2[j][0] += r * dx * dx;
            s2[j][1] += r * dx * dy;
            s2[j][2] += r * dy * dy;
        }
    }
    Stats {
        n,
        s1,
        s2: s2
            .into_iter()
            .map(|[a, b, c]| Matrix2::new(a, b, b, c))
            .collect(),
    }
}

fn m_step(st: &Stats, prior: &Prior) -> VigmmPosterior {
    let k = st.n.len();
    let mut post = VigmmPosterior {
        alpha: Vec::with_capacity(k),
        beta: Vec::with_capacity(k),
        mean: Vec::with_capacity(k),
        w: Vec::with_capacity(k),
        nu: Vec::with_capacity(k),
    };
    for j in 0..k {
        let n = st.n[j];
        let beta = prior.beta0 + n;
        let s1 = st.s1[j];
        let w_inv = prior.w0_inv + st.s2[j] - s1 * s1.transpose() / beta;
        let w_inv = 0.5 * (w_inv + w_inv.transpose());
        post.alpha.push(prior.alpha0 + n);
        post.beta.push(beta);
        post.mean.push(prior.m0 + s1 / beta);
        post.w.push(w_inv.try_inverse().expect("Wishart scale is positive definite"));
        post.nu.push(prior.nu0 + n);
    }
    post
}

/// Row-major `n × K` responsibilities under `post`.
fn e_step(points: &[Point], post: &VigmmPosterior) -> Vec<f64> {
    let k = post.len();
    let e_ln_pi = post.e_ln_pi();
    let consts: Vec<f64> = (0..k)
        .map(|j| e_ln_pi[j] + 0.5 * post.e_ln_lambda(j) - LN_2PI - 1.0 / post.beta[j])
        .collect();
    let mut resp = vec![0.0; points.len() * k];
    for (i, p) in points.iter().enumerate() {
        let row = &mut resp[i * k..(i + 1) * k];
        let mut max = f64::NEG_INFINITY;
        for j in 0..k {
            let w = &post.w[j];
            let dx = p.x - post.mean[j].x;
            let dy = p.y - post.mean[j].y;
            let q = w[(0, 0)] * dx * dx + 2.0 * w[(0, 1)] * dx * dy + w[(1, 1)] * dy * dy;
            let v = consts[j] - 0.5 * post.nu[j] * q;
            row[j] = v;
            max = max.max(v);
        }
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    resp
}

fn elbo(resp: &[f64], st: &Stats, post: &VigmmPosterior, prior: &Prior) -> f64 {
    let k = post.len();
    let e_ln_pi = post.e_ln_pi();
    let e_ln_lam: Vec<f64> = (0..k).map(|j| post.e_ln_lambda(j)).collect();
    let w0_det_inv = prior.w0_inv.determinant();

    let mut ln_p_x = 0.0;
    let mut ln_p_z = 0.0;
    let mut ln_p_mu_lam = 0.0;
    let mut ln_q_mu_lam = 0.0;
    for j in 0..k {
        let (n, beta, nu, w) = (st.n[j], post.beta[j], post.nu[j], &post.w[j]);
        // Σ_n r_nj (x_n - m_j)(x_n - m_j)ᵀ from the sums centered at m0.
        let d = post.mean[j] - prior.m0;
        let scatter = st.s2[j] - st.s1[j] * d.transpose() - d * st.s1[j].transpose()
            + n * d * d.transpose();
        ln_p_x += 0.5 * (n * (e_ln_lam[j] - 2.0 / beta - 2.0 * LN_2PI) - nu * (w * scatter).trace());
        ln_p_z += n * e_ln_pi[j];
        ln_p_mu_lam += 0.5
            * (2.0 * (prior.beta0 / (2.0 * PI)).ln() + e_ln_lam[j]
                - 2.0 * prior.beta0 / beta
                - prior.beta0 * nu * d.dot(&(w * d)))
            + 0.5 * (prior.nu0 - 3.0) * e_ln_lam[j]
            - 0.5 * nu * (prior.w0_inv * w).trace();
        let entropy = -Prior::ln_b(w.determinant(), nu) - 0.5 * (nu - 3.0) * e_ln_lam[j] + nu;
        ln_q_mu_lam += 0.5 * e_ln_lam[j] + (beta / (2.0 * PI)).ln() - 1.0 - entropy;
    }
    ln_p_mu_lam += k as f64 * Prior::ln_b(1.0 / w0_det_inv, prior.nu0);

    let ln_c = |alpha: &[f64]| ln_gamma(alpha.iter().sum()) - alpha.iter().map(|&a| ln_gamma(a)).sum::<f64>();
    let ln_p_pi = ln_c(&vec![prior.alpha0; k]) + (prior.alpha0 - 1.0) * e_ln_pi.iter().sum::<f64>();
    let ln_q_pi = post
        .alpha
        .iter()
        .zip(&e_ln_pi)
        .map(|(a, e)| (a - 1.0) * e)
        .sum::<f64>()
        + ln_c(&post.alpha);
    let ln_q_z: f64 = resp.iter().filter(|&&r| r > 0.0).map(|&r| r * r.ln()).sum();

    ln_p_x + ln_p_z + ln_p_pi + ln_p_mu_lam - ln_q_z - ln_q_pi - ln_q_mu_lam
}

fn resolve_prior(points: &[Point], cfg: &VigmmConfig) -> Prior {
    let n = points.len() as f64;
    let m0 = points.iter().fold(Point::zeros(), |a, p| a + p) / n;
    let scale = cfg.prior_scale.unwrap_or_else(|| {
        let var = points.iter().map(|p| (p - m0).norm_squared()).sum::<f64>() / (2.0 * n);
        if var > 1e-12 {
            var / cfg.prior_shrink
        } else {
            1.0
        }
    });
    Prior {
        alpha0: cfg.dirichlet_alpha0.unwrap_or(1.0 / cfg.n_max as f64),
        beta0: cfg.beta0,
        nu0: cfg.nu0,
        m0,
        w0_inv: Matrix2::identity() * (cfg.nu0 * scale),
    }
}

/// State of coordinate ascent: responsibilities and the matching posterior.
struct Fit {
    resp: Vec<f64>,
    post: VigmmPosterior,
    bound: f64,
    trace: Vec<f64>,
}

/// Alternates parameter and responsibility updates from `resp` until the
/// bound settles or `max_iters` updates have run.
fn ascend(points: &[Point], mut resp: Vec<f64>, k: usize, prior: &Prior, cfg: &VigmmConfig, max_iters: usize) -> Fit {
    let mut st = stats(points, &resp, k, &prior.m0);
    let mut post = m_step(&st, prior);
    let mut trace: Vec<f64> = Vec::new();
    while trace.len() < max_iters {
        post = m_step(&st, prior);
        resp = e_step(points, &post);
        st = stats(points, &resp, k, &prior.m0);
        let bound = elbo(&resp, &st, &post, prior);
        let done = trace
            .last()
            .is_some_and(|&prev| (bound - prev).abs() <= cfg.elbo_tol * bound.abs());
        trace.push(bound);
        if done {
            break;
        }
    }
    let bound = trace.last().copied().unwrap_or(f64::NEG_INFINITY);
    Fit { resp, post, bound, trace }
}

/// Merge moves. Coordinate ascent from many seeds tends to stall with
/// several components sharing one blob, since emptying any one of them
/// takes a detour through a lower bound. A move hands all of one
/// component's responsibility to a neighbour, re-runs the ascent and is
/// kept only if the bound ends higher. The emptied component stays in the
/// model, so the bounds being compared belong to the same model.
fn merge_moves(
    points: &[Point],
    fit: &mut Fit,
    k: usize,
    prior: &Prior,
    cfg: &VigmmConfig,
    trace: &mut Vec<f64>,
    iterations: &mut usize,
) {
    let min_mass = 1.0;
    let mut budget = 4 * k;
    'sweep: while budget > 0 {
        let n: Vec<f64> = (0..k).map(|j| fit.resp.iter().skip(j).step_by(k).sum()).collect();
        let active: Vec<usize> = (0..k).filter(|&j| n[j] >= min_mass).collect();
        let spread = |j: usize| (fit.post.w[j] * fit.post.nu[j]).try_inverse().map_or(0.0, |c| c.trace());
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (x, &a) in active.iter().enumerate() {
            for &b in &active[x + 1..] {
                let d = (fit.post.mean[a] - fit.post.mean[b]).norm() / (spread(a) + spread(b)).sqrt();
                // Far-apart pairs are never worth merging.
                if d < 3.0 {
                    pairs.push((d, a, b));
                }
            }
        }
        pairs.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)).then(p.2.cmp(&q.2)));
        for (_, a, b) in pairs {
            if budget == 0 {
                break;
            }
            budget -= 1;
            let mut resp = fit.resp.clone();
            for row in resp.chunks_mut(k) {
                row[a] += row[b];
                row[b] = 0.0;
            }
            let cand = ascend(points, resp, k, prior, cfg, cfg.max_iters);
            *iterations += cand.trace.len();
            if cand.bound > fit.bound {
                trace.push(cand.bound);
                *fit = cand;
                continue 'sweep;
            }
        }
        break;
    }
}

/// Fits the variational mixture and prunes components with negligible weight.
pub fn fit_vigmm(points: &[Point], cfg: &VigmmConfig) -> Result<ClusterResult, ClusteringError> {
    cfg.validate()?;
    if points.is_empty() {
        return Err(ClusteringError::EmptyInput);
    }
    let prior = resolve_prior(points, cfg);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let seeds = kmeans_pp_seeds(points, cfg.n_max, &mut rng);
    let centers: Vec<Point> = seeds.iter().map(|&i| points[i]).collect();
    let k = centers.len();
    let mut resp = vec![0.0; points.len() * k];
    for (i, p) in points.iter().enumerate() {
        resp[i * k + nearest(p, &centers)] = 1.0;
    }

    let mut fit = ascend(points, resp, k, &prior, cfg, cfg.max_iters);
    let mut trace = std::mem::take(&mut fit.trace);
    let mut iterations = trace.len();
    if cfg.merge_moves.unwrap_or(true) {
        merge_moves(points, &mut fit, k, &prior, cfg, &mut trace, &mut iterations);
    }
    let post = fit.post;

    let threshold = cfg
        .weight_prune_threshold
        .unwrap_or_else(|| (2.0 / points.len() as f64).max(1e-2));
    let alpha_sum: f64 = post.alpha.iter().sum();
    let mut keep: Vec<usize> = (0..k)
        .filter(|&j| post.alpha[j] / alpha_sum >= threshold)
        .collect();
    if keep.is_empty() {
        let best = (0..k)
            .max_by(|&a, &b| post.alpha[a].total_cmp(&post.alpha[b]))
            .expect("at least one component");
        keep.push(best);
    }
    let mut survivors = post.keep(&keep);

    // Hard assignment among survivors; components that win no point go too.
    let mut assignments = argmax_rows(&e_step(points, &survivors), survivors.len());
    let mut used = vec![false; survivors.len()];
    for &a in &assignments {
        used[a] = true;
    }
    if used.iter().any(|u| !u) {
        let idx: Vec<usize> = (0..survivors.len()).filter(|&j| used[j]).collect();
        survivors = survivors.keep(&idx);
        assignments = argmax_rows(&e_step(points, &survivors), survivors.len());
    }

    let alpha_sum: f64 = survivors.alpha.iter().sum();
    let components = (0..survivors.len())
        .map(|j| Component {
            weight: survivors.alpha[j] / alpha_sum,
            mean: survivors.mean[j],
            covariance: (survivors.w[j] * survivors.nu[j])
                .try_inverse()
                .expect("Wishart scale is positive definite"),
        })
        .collect();

    Ok(ClusterResult {
        components,
        assignments,
        elbo_trace: trace,
        iterations,
        posterior: Some(survivors),
    })
}

fn argmax_rows(resp: &[f64], k: usize) -> Vec<usize> {
    resp.chunks(k)
        .map(|row| {
            row.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |b, (j, &r)| if r > b.1 { (j, r) } else { b })
                .0
        })
        .collect()
}

/// Posterior responsibilities of each component for each point; rows sum to one.
pub fn responsibilities(points: &[Point], posterior: &VigmmPosterior) -> Vec<Vec<f64>> {
    let k = posterior.len();
    if k == 0 {
        return vec![Vec::new(); points.len()];
    }
    e_step(points, posterior)
        .chunks(k)
        .map(|row| row.to_vec())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    pub(crate) fn blobs(centers: &[(f64, f64)], per: usize, sigma: f64, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, sigma).unwrap();
        let mut pts = Vec::new();
        for &(cx, cy) in centers {
            for _ in 0..per {
                pts.push(Point::new(cx + normal.sample(&mut rng), cy + normal.sample(&mut rng)));
            }
        }
        pts
    }

    #[test]
    fn empty_input_rejected() {
        assert_eq!(
            fit_vigmm(&[], &VigmmConfig::default()),
            Err(ClusteringError::EmptyInput)
        );
    }

    #[test]
    fn single_point_gives_single_component() {
        let p = Point::new(2.0, -3.0);
        let res = fit_vigmm(&[p], &VigmmConfig::default()).unwrap();
        assert_eq!(res.len(), 1);
        assert_eq!(res.assignments, vec![0]);
        assert_relative_eq!(res.components[0].mean, p, epsilon = 1e-12);
        assert_relative_eq!(res.components[0].weight, 1.0);
        let (_, lo, _) = crate::geometry::sym2_eigen(&res.components[0].covariance);
        assert!(lo > 0.0);
    }

    #[test]
    fn elbo_is_monotone_and_weights_normalized() {
        let pts = blobs(&[(0.0, 0.0), (10.0, 0.0), (0.0, 10.0)], 60, 0.7, 3);
        let res = fit_vigmm(&pts, &VigmmConfig::default()).unwrap();
        for w in res.elbo_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-7, "bound decreased: {} -> {}", w[0], w[1]);
        }
        let total: f64 = res.components.iter().map(|c| c.weight).sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let pts = blobs(&[(0.0, 0.0), (6.0, 1.0)], 40, 1.0, 9);
        let cfg = VigmmConfig { seed: 17, ..VigmmConfig::default() };
        assert_eq!(fit_vigmm(&pts, &cfg).unwrap(), fit_vigmm(&pts, &cfg).unwrap());
    }

    #[test]
    fn single_component_responsibilities_are_one() {
        let pts = blobs(&[(1.0, 1.0)], 30, 0.3, 1);
        let cfg = VigmmConfig { n_max: 1, ..VigmmConfig::default() };
        let res = fit_vigmm(&pts, &cfg).unwrap();
        for row in responsibilities(&pts, res.posterior.as_ref().unwrap()) {
            assert_eq!(row, vec![1.0]);
        }
    }

    #[test]
    fn symmetric_components_split_evenly() {
        let w = Matrix2::identity();
        let post = VigmmPosterior {
            alpha: vec![5.0, 5.0],
            beta: vec![6.0, 6.0],
            mean: vec![Point::new(-1.0, 0.0), Point::new(1.0, 0.0)],
            w: vec![w, w],
            nu: vec![8.0, 8.0],
        };
        let r = responsibilities(&[Point::new(0.0, 0.7)], &post);
        assert_relative_eq!(r[0][0], 0.5, epsilon = 1e-6);
        assert_relative_eq!(r[0][1], 0.5, epsilon = 1e-6);
    }

    #[test]
    fn responsibility_rows_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<Point> = (0..120)
            .map(|_| Point::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)))
            .collect();
        let res = fit_vigmm(&pts, &VigmmConfig { n_max: 8, ..VigmmConfig::default() }).unwrap();
        for row in responsibilities(&pts, res.posterior.as_ref().unwrap()) {
            assert_relative_eq!(row.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn covariances_are_positive_definite() {
        let pts = blobs(&[(0.0, 0.0), (4.0, 4.0)], 25, 0.5, 2);
        let res = fit_vigmm(&pts, &VigmmConfig::default()).unwrap();
        for c in &res.components {
            let (_, lo, _) = crate::geometry::sym2_eigen(&c.covariance);
            assert!(lo > 0.0);
        }
    }
}
