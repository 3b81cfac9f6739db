//! MergeDTS: Thompson sampling confined to small random batches, with
//! confidence-bound elimination and merging of exhausted batches.

use rand::seq::SliceRandom;
use rand::Rng;

use super::empirical::empirically_best;
use super::posterior::{argmax_random, sample_posterior, PosteriorTable};
use super::result::{tally_of, PhaseTag, RunResult, TraceEntry};
use super::MergeDtsParams;
use crate::error::{Error, Result};
use crate::prefs::{ArmId, OracleHandle};

pub fn merge_dts<R: Rng + ?Sized>(
    k: usize,
    params: &MergeDtsParams,
    oracle: &mut OracleHandle,
    rng: &mut R,
) -> Result<RunResult> {
    params.validate()?;
    if k < 2 {
        return Err(Error::invalid(format!("MergeDTS needs k >= 2, got {k}")));
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.shuffle(rng);
    let mut batches: Vec<Vec<usize>> = order
        .chunks(params.batch_size)
        .map(<[usize]>::to_vec)
        .collect();
    if batches.len() > 1 && batches.last().is_some_and(|b| b.len() == 1) {
        let lone = batches.pop().expect("checked above");
        batches
            .last_mut()
            .expect("more than one batch")
            .extend(lone);
    }

    let mut wins = vec![0u32; k * k];
    let scale = params.alpha * params.exploration_constant.ln();
    let mut table = PosteriorTable::default();
    let mut trace = Vec::with_capacity(params.horizon as usize);
    let mut cursor = 0usize;
    let mut sampled = vec![0u32; params.batch_size * 2];

    while (trace.len() as u64) < params.horizon {
        if batches.len() == 1 && batches[0].len() == 1 {
            break;
        }
        cursor %= batches.len();
        eliminate(&mut batches[cursor], &wins, k, scale);
        if batches[cursor].len() == 1 {
            merge_smallest(&mut batches);
            continue;
        }

        let batch = &batches[cursor];
        let first = pick_first(batch, &wins, k, &mut table, &mut sampled, rng);
        // The first candidate's worst competitor: the arm least likely, under
        // a posterior sample, to beat it.
        let second = batch
            .iter()
            .copied()
            .filter(|&j| j != first)
            .map(|j| {
                (
                    j,
                    sample_posterior(wins[j * k + first], wins[first * k + j], rng),
                )
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(j, _)| j)
            .expect("batch has at least two arms");

        let winner = oracle.duel(ArmId(first), ArmId(second))?;
        let loser = if winner.0 == first { second } else { first };
        wins[winner.0 * k + loser] += 1;
        trace.push(TraceEntry {
            i: ArmId(first),
            j: ArmId(second),
            winner,
            phase: PhaseTag::Explore,
        });
        cursor += 1;
    }

    let survivors: Vec<ArmId> = batches.iter().flatten().map(|&a| ArmId(a)).collect();
    let winner = if survivors.len() == 1 {
        survivors[0]
    } else {
        empirically_best(&tally_of(&trace), &survivors, rng).expect("survivors nonempty")
    };
    Ok(RunResult::from_trace([winner].into(), trace))
}

/// Drops every arm that some remaining batch-mate beats with a lower
/// confidence bound above one half. Never empties the batch.
fn eliminate(batch: &mut Vec<usize>, wins: &[u32], k: usize, scale: f64) {
    let mut x = 0;
    while x < batch.len() {
        let j = batch[x];
        let beaten = batch.iter().any(|&i| {
            let (wij, wji) = (wins[i * k + j], wins[j * k + i]);
            let n = wij + wji;
            if i == j || n == 0 {
                return false;
            }
            let n = f64::from(n);
            f64::from(wij) / n - (scale / n).sqrt() > 0.5
        });
        if beaten {
            batch.remove(x);
        } else {
            x += 1;
        }
    }
}

/// Merges the two smallest batches into one.
fn merge_smallest(batches: &mut Vec<Vec<usize>>) {
    if batches.len() < 2 {
        return;
    }
    let mut idx: Vec<usize> = (0..batches.len()).collect();
    idx.sort_by_key(|&b| (batches[b].len(), b));
    let (a, b) = (idx[0].min(idx[1]), idx[0].max(idx[1]));
    let moved = batches.remove(b);
    batches[a].extend(moved);
}

fn pick_first<R: Rng + ?Sized>(
    batch: &[usize],
    wins: &[u32],
    k: usize,
    table: &mut PosteriorTable,
    sampled: &mut Vec<u32>,
    rng: &mut R,
) -> usize {
    sampled.clear();
    sampled.resize(batch.len(), 0);
    for x in 0..batch.len() {
        for y in (x + 1)..batch.len() {
            let (i, j) = (batch[x], batch[y]);
            if table.sample_above_half(wins[i * k + j], wins[j * k + i], rng) {
                sampled[x] += 1;
            } else {
                sampled[y] += 1;
            }
        }
    }
    let x = argmax_random(sampled.iter().copied().enumerate(), rng).expect("nonempty batch");
    batch[x]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prefs::{seeded_rng, PreferenceMatrix};
    use std::sync::Arc;

    #[test]
    fn two_arms_eliminate_the_loser() {
        let m = Arc::new(PreferenceMatrix::total_order(2).unwrap());
        let mut o = OracleHandle::simulated(m, 0);
        let r = merge_dts(2, &MergeDtsParams::default(), &mut o, &mut seeded_rng(0)).unwrap();
        assert_eq!(r.winners, [ArmId(0)].into());
        // The winner's lower bound 1 - sqrt(alpha ln C / n) first clears one
        // half at n = 16 (alpha ln C = 3.985).
        assert_eq!(r.comparisons, 16);
    }

    #[test]
    fn merging_keeps_every_arm_once() {
        let mut batches = vec![vec![0, 1, 2], vec![3], vec![4, 5]];
        merge_smallest(&mut batches);
        let mut all: Vec<usize> = batches.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..6).collect::<Vec<_>>());
        assert_eq!(batches.len(), 2);
        assert!(batches.iter().any(|b| b.len() == 3 && b.contains(&3)));
    }

    #[test]
    fn horizon_bounds_duels() {
        let m = Arc::new(PreferenceMatrix::case_b(100).unwrap());
        let mut o = OracleHandle::simulated(m, 9);
        let r = merge_dts(100, &MergeDtsParams::default(), &mut o, &mut seeded_rng(9)).unwrap();
        assert_eq!(r.comparisons, 1000);
        assert_eq!(r.winners.len(), 1);
    }
}
