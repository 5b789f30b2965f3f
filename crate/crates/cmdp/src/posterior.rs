//! Independent Dirichlet posteriors over transition rows.
//!
//! Each state-action pair carries its own Dirichlet over the outgoing
//! distribution; conjugacy makes the update exact integer bookkeeping:
//! `alpha(s, a, s') = prior(s, a, s') + N(s, a, s')`. Sampling a full kernel
//! draws every row independently via normalized Gamma variates.

use ndarray::{Array2, Array3, ArrayView2, ArrayView3};
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PosteriorError {
    #[error("prior must be strictly positive and finite; entry ({state}, {action}, {next}) is {value}")]
    BadPrior {
        state: usize,
        action: usize,
        next: usize,
        value: f64,
    },
    #[error("prior tensor has shape {found:?}; outcome axis must match the state axis")]
    Shape { found: Vec<usize> },
    #[error("snapshot is inconsistent: {context}")]
    Snapshot { context: String },
}

#[derive(Debug, Clone)]
pub struct DirichletPosterior {
    prior: Array3<f64>,
    counts: Array3<u64>,
    visits: Array2<u64>,
}

impl DirichletPosterior {
    /// Symmetric prior: every pseudo-count equals `prior_value`.
    pub fn symmetric(n_states: usize, n_actions: usize, prior_value: f64) -> Self {
        assert!(
            prior_value > 0.0 && prior_value.is_finite(),
            "prior must be positive"
        );
        Self {
            prior: Array3::from_elem((n_states, n_actions, n_states), prior_value),
            counts: Array3::zeros((n_states, n_actions, n_states)),
            visits: Array2::zeros((n_states, n_actions)),
        }
    }

    pub fn with_prior(prior: Array3<f64>) -> Result<Self, PosteriorError> {
        let (s_n, a_n, s2_n) = prior.dim();
        if s_n != s2_n || s_n == 0 || a_n == 0 {
            return Err(PosteriorError::Shape {
                found: prior.shape().to_vec(),
            });
        }
        for s in 0..s_n {
            for a in 0..a_n {
                for s2 in 0..s_n {
                    let v = prior[[s, a, s2]];
                    if !(v > 0.0 && v.is_finite()) {
                        return Err(PosteriorError::BadPrior {
                            state: s,
                            action: a,
                            next: s2,
                            value: v,
                        });
                    }
                }
            }
        }
        Ok(Self {
            counts: Array3::zeros((s_n, a_n, s_n)),
            visits: Array2::zeros((s_n, a_n)),
            prior,
        })
    }

    pub fn n_states(&self) -> usize {
        self.prior.dim().0
    }

    pub fn n_actions(&self) -> usize {
        self.prior.dim().1
    }

    /// Records one observed transition. Indices must be in range.
    pub fn update(&mut self, state: usize, action: usize, next: usize) {
        self.counts[[state, action, next]] += 1;
        self.visits[[state, action]] += 1;
    }

    pub fn visit_count(&self, state: usize, action: usize) -> u64 {
        self.visits[[state, action]]
    }

    pub fn transition_count(&self, state: usize, action: usize, next: usize) -> u64 {
        self.counts[[state, action, next]]
    }

    pub fn counts(&self) -> ArrayView3<'_, u64> {
        self.counts.view()
    }

    pub fn visits(&self) -> ArrayView2<'_, u64> {
        self.visits.view()
    }

    /// Posterior concentration parameter: prior plus the exact count.
    pub fn alpha(&self, state: usize, action: usize, next: usize) -> f64 {
        self.prior[[state, action, next]] + self.counts[[state, action, next]] as f64
    }

    /// Draws one kernel: each row is an independent Dirichlet sample obtained
    /// by normalizing Gamma draws. Every row of the result is a distribution.
    pub fn sample_kernel<R: Rng + ?Sized>(&self, rng: &mut R) -> Array3<f64> {
        let (s_n, a_n, _) = self.prior.dim();
        let mut kernel = Array3::zeros((s_n, a_n, s_n));
        let mut draws = vec![0.0f64; s_n];
        for s in 0..s_n {
            for a in 0..a_n {
                let mut max_draw = 0.0f64;
                for (s2, slot) in draws.iter_mut().enumerate() {
                    let gamma = Gamma::new(self.alpha(s, a, s2), 1.0)
                        .expect("posterior alpha is positive");
                    let g: f64 = gamma.sample(rng);
                    let g = if g.is_finite() && g >= 0.0 { g } else { 0.0 };
                    *slot = g;
                    max_draw = max_draw.max(g);
                }
                // Tiny concentration parameters make Gamma draws underflow
                // across hundreds of orders of magnitude; relative dust is
                // statistically invisible but wrecks downstream conditioning,
                // so flush it to exact zero before normalizing.
                let mut total = 0.0;
                for slot in draws.iter_mut() {
                    if *slot < 1e-12 * max_draw {
                        *slot = 0.0;
                    }
                    total += *slot;
                }
                if total > 0.0 && total.is_finite() {
                    for s2 in 0..s_n {
                        kernel[[s, a, s2]] = draws[s2] / total;
                    }
                } else {
                    // All draws underflowed (tiny alphas); fall back to uniform.
                    for s2 in 0..s_n {
                        kernel[[s, a, s2]] = 1.0 / s_n as f64;
                    }
                }
            }
        }
        kernel
    }

    /// Maximum-likelihood kernel `N(s,a,s') / N(s,a)`; unvisited rows are
    /// uniform.
    pub fn empirical_kernel(&self) -> Array3<f64> {
        let (s_n, a_n, _) = self.prior.dim();
        let mut kernel = Array3::zeros((s_n, a_n, s_n));
        for s in 0..s_n {
            for a in 0..a_n {
                let n = self.visits[[s, a]];
                if n == 0 {
                    for s2 in 0..s_n {
                        kernel[[s, a, s2]] = 1.0 / s_n as f64;
                    }
                } else {
                    for s2 in 0..s_n {
                        kernel[[s, a, s2]] = self.counts[[s, a, s2]] as f64 / n as f64;
                    }
                }
            }
        }
        kernel
    }

    pub fn snapshot(&self) -> PosteriorSnapshot {
        PosteriorSnapshot {
            n_states: self.n_states(),
            n_actions: self.n_actions(),
            prior: self.prior.iter().copied().collect(),
            counts: self.counts.iter().copied().collect(),
        }
    }

    pub fn from_snapshot(snapshot: &PosteriorSnapshot) -> Result<Self, PosteriorError> {
        let (s_n, a_n) = (snapshot.n_states, snapshot.n_actions);
        let len = s_n * a_n * s_n;
        if snapshot.prior.len() != len || snapshot.counts.len() != len {
            return Err(PosteriorError::Snapshot {
                context: format!(
                    "{s_n} states x {a_n} actions needs {len} entries, snapshot has {} prior / {} count",
                    snapshot.prior.len(),
                    snapshot.counts.len()
                ),
            });
        }
        let prior = Array3::from_shape_vec((s_n, a_n, s_n), snapshot.prior.clone())
            .expect("length checked above");
        let counts = Array3::from_shape_vec((s_n, a_n, s_n), snapshot.counts.clone())
            .expect("length checked above");
        let mut posterior = Self::with_prior(prior)?;
        let mut visits = Array2::zeros((s_n, a_n));
        for s in 0..s_n {
            for a in 0..a_n {
                let mut n = 0u64;
                for s2 in 0..s_n {
                    n += counts[[s, a, s2]];
                }
                visits[[s, a]] = n;
            }
        }
        posterior.counts = counts;
        posterior.visits = visits;
        Ok(posterior)
    }
}

/// Serializable posterior state: prior and counts, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSnapshot {
    pub n_states: usize,
    pub n_actions: usize,
    pub prior: Vec<f64>,
    pub counts: Vec<u64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn conjugate_update_is_exact_integer_bookkeeping() {
        let mut post = DirichletPosterior::symmetric(3, 2, 0.5);
        for _ in 0..7 {
            post.update(1, 0, 2);
        }
        post.update(1, 0, 0);
        post.update(2, 1, 1);
        assert_eq!(post.transition_count(1, 0, 2), 7);
        assert_eq!(post.visit_count(1, 0), 8);
        assert_eq!(post.alpha(1, 0, 2), 0.5 + 7.0);
        assert_eq!(post.alpha(1, 0, 1), 0.5);
        assert_eq!(post.alpha(2, 1, 1), 1.5);
        assert_eq!(post.visit_count(0, 0), 0);
    }

    #[test]
    fn empirical_kernel_uses_uniform_for_unvisited_rows() {
        let mut post = DirichletPosterior::symmetric(2, 1, 0.01);
        post.update(0, 0, 0);
        post.update(0, 0, 0);
        post.update(0, 0, 1);
        post.update(0, 0, 1);
        let k = post.empirical_kernel();
        assert_abs_diff_eq!(k[[0, 0, 0]], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(k[[0, 0, 1]], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(k[[1, 0, 0]], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(k[[1, 0, 1]], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn sampled_kernels_are_row_stochastic() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut post = DirichletPosterior::symmetric(4, 3, 0.01);
        post.update(0, 0, 3);
        post.update(2, 1, 1);
        for _ in 0..20 {
            let k = post.sample_kernel(&mut rng);
            for s in 0..4 {
                for a in 0..3 {
                    let mut sum = 0.0;
                    for s2 in 0..4 {
                        let p = k[[s, a, s2]];
                        assert!((0.0..=1.0).contains(&p));
                        sum += p;
                    }
                    assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn heavy_counts_concentrate_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut post = DirichletPosterior::symmetric(2, 1, 0.01);
        for _ in 0..7000 {
            post.update(0, 0, 0);
        }
        for _ in 0..3000 {
            post.update(0, 0, 1);
        }
        for _ in 0..5 {
            let k = post.sample_kernel(&mut rng);
            let l1 = (k[[0, 0, 0]] - 0.7).abs() + (k[[0, 0, 1]] - 0.3).abs();
            assert!(l1 < 0.05, "sampled row strayed {l1} from the empirical row");
        }
    }

    #[test]
    fn snapshot_round_trips_through_json() {
        let mut post = DirichletPosterior::symmetric(3, 2, 0.01);
        post.update(0, 1, 2);
        post.update(2, 0, 0);
        post.update(2, 0, 0);
        let snap = post.snapshot();
        let text = serde_json::to_string(&snap).unwrap();
        let back: PosteriorSnapshot = serde_json::from_str(&text).unwrap();
        assert_eq!(snap, back);
        let restored = DirichletPosterior::from_snapshot(&back).unwrap();
        assert_eq!(restored.transition_count(2, 0, 0), 2);
        assert_eq!(restored.visit_count(0, 1), 1);
        assert_eq!(restored.alpha(0, 1, 2), post.alpha(0, 1, 2));
    }

    #[test]
    fn from_snapshot_rejects_bad_lengths() {
        let snap = PosteriorSnapshot {
            n_states: 2,
            n_actions: 2,
            prior: vec![0.01; 7],
            counts: vec![0; 8],
        };
        assert!(matches!(
            DirichletPosterior::from_snapshot(&snap),
            Err(PosteriorError::Snapshot { .. })
        ));
    }

    #[test]
    #[should_panic]
    fn update_rejects_out_of_range_indices() {
        let mut post = DirichletPosterior::symmetric(2, 2, 0.01);
        post.update(2, 0, 0);
    }

    /// Streaming data from a fixed chain, posterior samples drift toward the
    /// truth: the mean per-visited-row L1 error over the last quarter of the
    /// run is below the first quarter's.
    #[test]
    fn posterior_samples_approach_the_truth() {
        let truth = [
            [[0.7, 0.2, 0.1], [0.1, 0.1, 0.8]],
            [[0.3, 0.3, 0.4], [0.5, 0.25, 0.25]],
            [[0.05, 0.9, 0.05], [0.4, 0.2, 0.4]],
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut post = DirichletPosterior::symmetric(3, 2, 0.01);
        let steps = 50_000usize;
        let quarter = steps / 4;
        let mut state = 0usize;
        let mut first = Vec::new();
        let mut last = Vec::new();
        for t in 0..steps {
            let action = rng.gen_range(0..2);
            let u: f64 = rng.gen();
            let row = &truth[state][action];
            let next = if u < row[0] {
                0
            } else if u < row[0] + row[1] {
                1
            } else {
                2
            };
            post.update(state, action, next);
            if t % 500 == 0 {
                let k = post.sample_kernel(&mut rng);
                let mut err = 0.0;
                let mut visited = 0.0;
                for s in 0..3 {
                    for a in 0..2 {
                        if post.visit_count(s, a) == 0 {
                            continue;
                        }
                        visited += 1.0;
                        for s2 in 0..3 {
                            err += (k[[s, a, s2]] - truth[s][a][s2]).abs();
                        }
                    }
                }
                if visited > 0.0 {
                    let mean = err / visited;
                    if t < quarter {
                        first.push(mean);
                    } else if t >= 3 * quarter {
                        last.push(mean);
                    }
                }
            }
            state = next;
        }
        let avg = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
        assert!(
            avg(&last) < avg(&first),
            "posterior error failed to shrink: first {} vs last {}",
            avg(&first),
            avg(&last)
        );
    }
}
