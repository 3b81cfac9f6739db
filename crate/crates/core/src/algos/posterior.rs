//! Thompson-sampling helpers shared by DTS and MergeDTS.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Beta, Distribution};
use statrs::distribution::{Binomial, DiscreteCDF};

/// `P(theta > 1/2)` for `theta ~ Beta(wins + 1, losses + 1)`, memoised.
///
/// With integer parameters this equals `P(Binomial(wins + losses + 1, 1/2) <= wins)`,
/// so thresholding a posterior sample at one half is a Bernoulli draw with
/// this probability.
#[derive(Debug, Default)]
pub(crate) struct PosteriorTable {
    cache: HashMap<(u32, u32), f64>,
}

impl PosteriorTable {
    pub fn prob_above_half(&mut self, wins: u32, losses: u32) -> f64 {
        if wins == losses {
            return 0.5;
        }
        *self.cache.entry((wins, losses)).or_insert_with(|| {
            let n = u64::from(wins) + u64::from(losses) + 1;
            Binomial::new(0.5, n)
                .expect("valid binomial")
                .cdf(u64::from(wins))
        })
    }

    /// Whether a fresh posterior sample for "i beats j" lands above one half.
    pub fn sample_above_half<R: Rng + ?Sized>(
        &mut self,
        wins: u32,
        losses: u32,
        rng: &mut R,
    ) -> bool {
        let p = self.prob_above_half(wins, losses);
        rng.random::<f64>() < p
    }
}

/// A draw of `theta ~ Beta(wins + 1, losses + 1)`.
pub(crate) fn sample_posterior<R: Rng + ?Sized>(wins: u32, losses: u32, rng: &mut R) -> f64 {
    if wins == 0 && losses == 0 {
        return rng.random::<f64>();
    }
    Beta::new(f64::from(wins) + 1.0, f64::from(losses) + 1.0)
        .expect("positive beta parameters")
        .sample(rng)
}

/// Uniform ties broken at random among the indices holding the maximum.
pub(crate) fn argmax_random<R: Rng + ?Sized, T: PartialOrd + Copy>(
    items: impl Iterator<Item = (usize, T)>,
    rng: &mut R,
) -> Option<usize> {
    let mut best: Option<T> = None;
    let mut chosen = None;
    let mut ties = 0u32;
    for (idx, v) in items {
        match best {
            Some(b) if v < b => {}
            Some(b) if v == b => {
                ties += 1;
                if rng.random_range(0..ties) == 0 {
                    chosen = Some(idx);
                }
            }
            _ => {
                best = Some(v);
                chosen = Some(idx);
                ties = 1;
            }
        }
    }
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prefs::seeded_rng;

    #[test]
    fn closed_form_matches_beta_monte_carlo() {
        let mut table = PosteriorTable::default();
        assert_eq!(table.prob_above_half(0, 0), 0.5);
        assert!((table.prob_above_half(1, 0) - 0.75).abs() < 1e-12);
        assert!((table.prob_above_half(0, 1) - 0.25).abs() < 1e-12);
        let mut rng = seeded_rng(17);
        for &(w, l) in &[(3u32, 1u32), (0, 4), (7, 5)] {
            let hits = (0..40_000)
                .filter(|_| sample_posterior(w, l, &mut rng) > 0.5)
                .count();
            let mc = hits as f64 / 40_000.0;
            assert!(
                (mc - table.prob_above_half(w, l)).abs() < 0.01,
                "({w},{l}): {mc}"
            );
        }
    }

    #[test]
    fn argmax_spreads_ties() {
        let mut rng = seeded_rng(3);
        let mut seen = [0u32; 4];
        for _ in 0..400 {
            let i = argmax_random([(0, 1), (1, 3), (2, 3), (3, 2)].into_iter(), &mut rng).unwrap();
            seen[i] += 1;
        }
        assert_eq!(seen[0] + seen[3], 0);
        assert!(seen[1] > 150 && seen[2] > 150);
    }
}
