use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::prefs::ArmId;

/// Unordered pairs to be judged, with no pair repeated.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgeList(Vec<(ArmId, ArmId)>);

impl EdgeList {
    pub fn new(pairs: Vec<(ArmId, ArmId)>) -> Self {
        EdgeList(pairs)
    }

    pub fn pairs(&self) -> &[(ArmId, ArmId)] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(ArmId, ArmId)> {
        self.0.iter()
    }

    /// Number of pairings each arm appears in.
    pub fn degree(&self, arm: ArmId) -> usize {
        self.0
            .iter()
            .filter(|(a, b)| *a == arm || *b == arm)
            .count()
    }

    pub fn into_inner(self) -> Vec<(ArmId, ArmId)> {
        self.0
    }
}

impl IntoIterator for EdgeList {
    type Item = (ArmId, ArmId);
    type IntoIter = std::vec::IntoIter<(ArmId, ArmId)>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

/// Every unordered pair of the pool exactly once.
pub fn complete_pairings(pool: &[ArmId]) -> Result<EdgeList> {
    if pool.len() < 2 {
        return Err(Error::invalid(format!(
            "pairings need >= 2 arms, got {}",
            pool.len()
        )));
    }
    let mut edges = Vec::with_capacity(pool.len() * (pool.len() - 1) / 2);
    for (x, &a) in pool.iter().enumerate() {
        for &b in &pool[x + 1..] {
            edges.push((a, b));
        }
    }
    Ok(EdgeList(edges))
}

/// A random simple graph on the pool in which every arm has degree `n`, except
/// that one randomly chosen arm gets `n + 1` when `|pool| * n` is odd.
///
/// Falls back to [`complete_pairings`] once `n >= |pool| - 1`.
pub fn random_pairings<R: Rng + ?Sized>(pool: &[ArmId], n: usize, rng: &mut R) -> Result<EdgeList> {
    let k = pool.len();
    if k < 2 {
        return Err(Error::invalid(format!("pairings need >= 2 arms, got {k}")));
    }
    if n == 0 {
        return Err(Error::invalid("pairings need n >= 1"));
    }
    if n >= k - 1 {
        return complete_pairings(pool);
    }
    let mut degrees = vec![n; k];
    if (k * n) % 2 == 1 {
        degrees[rng.random_range(0..k)] += 1;
    }

    // Dense requests are easier to satisfy through the complement graph.
    let dense = 2 * n > k - 1;
    let local = if dense {
        let complement: Vec<usize> = degrees.iter().map(|d| k - 1 - d).collect();
        let sparse = graph_with_degrees(&complement, rng);
        let mut adj = vec![false; k * k];
        for &(u, v) in &sparse {
            adj[u * k + v] = true;
            adj[v * k + u] = true;
        }
        let mut edges = Vec::new();
        for u in 0..k {
            for v in (u + 1)..k {
                if !adj[u * k + v] {
                    edges.push((u, v));
                }
            }
        }
        edges.shuffle(rng);
        edges
    } else {
        graph_with_degrees(&degrees, rng)
    };
    Ok(EdgeList(
        local.into_iter().map(|(u, v)| (pool[u], pool[v])).collect(),
    ))
}

/// Random simple graph with the given degree sequence on vertices `0..len`:
/// stubs are matched at random, rejecting loops and repeats, restarting on a
/// dead end. The degree sum must be even.
fn graph_with_degrees<R: Rng + ?Sized>(degrees: &[usize], rng: &mut R) -> Vec<(usize, usize)> {
    let k = degrees.len();
    debug_assert!(degrees.iter().sum::<usize>() % 2 == 0);
    debug_assert!(degrees.iter().all(|&d| d < k));
    'restart: loop {
        let mut stubs: Vec<usize> = degrees
            .iter()
            .enumerate()
            .flat_map(|(v, &d)| std::iter::repeat_n(v, d))
            .collect();
        let mut adj = vec![false; k * k];
        let mut edges = Vec::with_capacity(stubs.len() / 2);
        while !stubs.is_empty() {
            let mut chosen = None;
            for _ in 0..64 {
                let x = rng.random_range(0..stubs.len());
                let y = rng.random_range(0..stubs.len());
                let (u, v) = (stubs[x], stubs[y]);
                if u != v && !adj[u * k + v] {
                    chosen = Some((x, y));
                    break;
                }
            }
            if chosen.is_none() {
                let mut options = Vec::new();
                for x in 0..stubs.len() {
                    for y in (x + 1)..stubs.len() {
                        let (u, v) = (stubs[x], stubs[y]);
                        if u != v && !adj[u * k + v] {
                            options.push((x, y));
                        }
                    }
                }
                if options.is_empty() {
                    continue 'restart;
                }
                chosen = Some(options[rng.random_range(0..options.len())]);
            }
            let (x, y) = chosen.expect("a suitable pair was found");
            let (u, v) = (stubs[x], stubs[y]);
            adj[u * k + v] = true;
            adj[v * k + u] = true;
            edges.push((u.min(v), u.max(v)));
            let (hi, lo) = (x.max(y), x.min(y));
            stubs.swap_remove(hi);
            stubs.swap_remove(lo);
        }
        return edges;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prefs::{arms, seeded_rng};
    use std::collections::HashSet;

    fn check_simple(edges: &EdgeList) {
        let mut seen = HashSet::new();
        for &(a, b) in edges.iter() {
            assert_ne!(a, b);
            assert!(
                seen.insert((a.min(b), a.max(b))),
                "repeated pair ({a}, {b})"
            );
        }
    }

    fn degree_histogram(pool: &[ArmId], edges: &EdgeList) -> Vec<usize> {
        let mut d: Vec<usize> = pool.iter().map(|&a| edges.degree(a)).collect();
        d.sort_unstable();
        d
    }

    #[test]
    fn ten_by_seven() {
        let pool = arms(10);
        let mut rng = seeded_rng(1);
        for _ in 0..50 {
            let e = random_pairings(&pool, 7, &mut rng).unwrap();
            check_simple(&e);
            assert_eq!(e.len(), 35);
            assert_eq!(degree_histogram(&pool, &e), vec![7; 10]);
        }
    }

    #[test]
    fn nine_by_seven_has_one_extra() {
        let pool = arms(9);
        let mut rng = seeded_rng(2);
        for _ in 0..50 {
            let e = random_pairings(&pool, 7, &mut rng).unwrap();
            check_simple(&e);
            assert_eq!(e.len(), 32);
            let mut want = vec![7; 8];
            want.push(8);
            assert_eq!(degree_histogram(&pool, &e), want);
        }
    }

    #[test]
    fn degrades_to_complete() {
        let pool = arms(8);
        let e = random_pairings(&pool, 7, &mut seeded_rng(3)).unwrap();
        assert_eq!(e.len(), 28);
        assert_eq!(e, complete_pairings(&pool).unwrap());
    }

    #[test]
    fn complete_sizes() {
        assert_eq!(complete_pairings(&arms(2)).unwrap().len(), 1);
        assert_eq!(complete_pairings(&arms(5)).unwrap().len(), 10);
        let pool = arms(9);
        let e = complete_pairings(&pool).unwrap();
        assert_eq!(e.len(), 36);
        assert_eq!(degree_histogram(&pool, &e), vec![8; 9]);
        assert!(complete_pairings(&arms(1)).is_err());
        assert!(random_pairings(&arms(1), 3, &mut seeded_rng(0)).is_err());
    }

    #[test]
    fn large_sparse_and_non_contiguous_pool() {
        let pool: Vec<ArmId> = (0..131).map(|i| ArmId(i * 3 + 1)).collect();
        let mut rng = seeded_rng(4);
        let e = random_pairings(&pool, 7, &mut rng).unwrap();
        check_simple(&e);
        assert_eq!(e.len(), (131usize * 7).div_ceil(2));
        let hist = degree_histogram(&pool, &e);
        assert_eq!(hist[..130], vec![7; 130][..]);
        assert_eq!(hist[130], 8);
        assert!(e.iter().all(|(a, b)| pool.contains(a) && pool.contains(b)));
    }
}
