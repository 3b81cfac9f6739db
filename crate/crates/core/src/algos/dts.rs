//! Double Thompson Sampling, stopped at a fixed horizon.

use rand::Rng;

use super::empirical::empirically_best;
use super::posterior::{argmax_random, sample_posterior, PosteriorTable};
use super::result::{tally_of, PhaseTag, RunResult, TraceEntry};
use super::DtsParams;
use crate::error::{Error, Result};
use crate::prefs::{arms, ArmId, OracleHandle};

struct State {
    k: usize,
    words: usize,
    /// `wins[i * k + j]`: times `i` beat `j`.
    wins: Vec<u32>,
    /// Per-arm bitset of opponents already met.
    met: Vec<u64>,
    opponents: Vec<Vec<usize>>,
    pairs: Vec<(usize, usize)>,
}

impl State {
    fn new(k: usize) -> Self {
        let words = k.div_ceil(64);
        State {
            k,
            words,
            wins: vec![0; k * k],
            met: vec![0; k * words],
            opponents: vec![Vec::new(); k],
            pairs: Vec::new(),
        }
    }

    #[inline]
    fn w(&self, i: usize, j: usize) -> u32 {
        self.wins[i * self.k + j]
    }

    fn record(&mut self, winner: usize, loser: usize) {
        let (k, words) = (self.k, self.words);
        if self.w(winner, loser) + self.w(loser, winner) == 0 {
            self.met[winner * words + loser / 64] |= 1 << (loser % 64);
            self.met[loser * words + winner / 64] |= 1 << (winner % 64);
            self.opponents[winner].push(loser);
            self.opponents[loser].push(winner);
            self.pairs.push((winner.min(loser), winner.max(loser)));
        }
        self.wins[winner * k + loser] += 1;
    }
}

/// Runs DTS for exactly `horizon` duels over arms `0..k` and returns the
/// empirically best arm.
///
/// First candidate: among arms whose upper-confidence Copeland score is
/// maximal, the one beating most others under a posterior sample. Second
/// candidate: among arms not confidently beaten by the first, the one with the
/// largest posterior sample against it.
pub fn dts<R: Rng + ?Sized>(
    k: usize,
    params: &DtsParams,
    oracle: &mut OracleHandle,
    rng: &mut R,
) -> Result<RunResult> {
    params.validate()?;
    if k < 2 {
        return Err(Error::invalid(format!("DTS needs k >= 2, got {k}")));
    }
    let mut st = State::new(k);
    let mut table = PosteriorTable::default();
    let mut trace = Vec::with_capacity(params.horizon as usize);

    let words = st.words;
    let mut full = vec![u64::MAX; words];
    if !k.is_multiple_of(64) {
        full[words - 1] = (1u64 << (k % 64)) - 1;
    }
    let mut upper_copeland = vec![0usize; k];
    let mut sampled = vec![0u32; k];
    let mut cand_mask = vec![0u64; words];
    let mut candidates = Vec::with_capacity(k);

    for t in 1..=params.horizon {
        let log_t = (t as f64).ln();

        for z in upper_copeland.iter_mut() {
            *z = k - 1;
        }
        for &(i, j) in &st.pairs {
            let (wij, wji) = (st.w(i, j), st.w(j, i));
            let n = f64::from(wij + wji);
            let radius = (params.alpha * log_t / n).sqrt();
            if f64::from(wij) / n + radius <= 0.5 {
                upper_copeland[i] -= 1;
            }
            if f64::from(wji) / n + radius <= 0.5 {
                upper_copeland[j] -= 1;
            }
        }
        let top = *upper_copeland.iter().max().expect("k >= 2");
        candidates.clear();
        cand_mask.fill(0);
        for (i, &z) in upper_copeland.iter().enumerate() {
            if z == top {
                candidates.push(i);
                cand_mask[i / 64] |= 1 << (i % 64);
            }
        }

        sample_copeland(
            &st,
            &candidates,
            &cand_mask,
            &full,
            &mut table,
            &mut sampled,
            rng,
        );
        let first = argmax_random(candidates.iter().map(|&i| (i, sampled[i])), rng)
            .expect("candidate set is nonempty");

        let second = pick_second(&st, first, params.alpha * log_t, true, rng)
            .or_else(|| pick_second(&st, first, params.alpha * log_t, false, rng))
            .expect("k >= 2 leaves an opponent");

        let winner = oracle.duel(ArmId(first), ArmId(second))?;
        let loser = if winner.0 == first { second } else { first };
        st.record(winner.0, loser);
        trace.push(TraceEntry {
            i: ArmId(first),
            j: ArmId(second),
            winner,
            phase: PhaseTag::Explore,
        });
    }

    let tally = tally_of(&trace);
    let best = empirically_best(&tally, &arms(k), rng).expect("k >= 2");
    Ok(RunResult::from_trace([best].into(), trace))
}

/// Copeland scores of the candidates under one joint posterior sample.
/// Pairs never compared have a uniform posterior, so their outcome is a fair
/// coin; those coins come from random words, 64 at a time.
fn sample_copeland<R: Rng + ?Sized>(
    st: &State,
    candidates: &[usize],
    cand_mask: &[u64],
    full: &[u64],
    table: &mut PosteriorTable,
    sampled: &mut [u32],
    rng: &mut R,
) {
    let words = st.words;
    for &i in candidates {
        sampled[i] = 0;
    }
    for &i in candidates {
        let met = &st.met[i * words..(i + 1) * words];
        for w in 0..words {
            let self_bit = if i / 64 == w { 1u64 << (i % 64) } else { 0 };
            let unmet = !met[w] & full[w] & !self_bit;
            // Unmet candidates with a higher index: one shared coin per pair.
            let above = bits_above(i, w);
            let shared = unmet & cand_mask[w] & above;
            let coins: u64 = rng.random();
            sampled[i] += (coins & shared).count_ones();
            let mut lost = !coins & shared;
            while lost != 0 {
                let b = lost.trailing_zeros() as usize;
                sampled[w * 64 + b] += 1;
                lost &= lost - 1;
            }
            // Unmet non-candidates only matter to this row.
            let own = unmet & !cand_mask[w];
            let coins: u64 = rng.random();
            sampled[i] += (coins & own).count_ones();
        }
        for &j in &st.opponents[i] {
            let j_is_candidate = cand_mask[j / 64] >> (j % 64) & 1 == 1;
            if j_is_candidate && j < i {
                continue;
            }
            if table.sample_above_half(st.w(i, j), st.w(j, i), rng) {
                sampled[i] += 1;
            } else if j_is_candidate {
                sampled[j] += 1;
            }
        }
    }
}

/// Bits of word `w` whose arm index is strictly greater than `i`.
fn bits_above(i: usize, w: usize) -> u64 {
    match w.cmp(&(i / 64)) {
        std::cmp::Ordering::Less => 0,
        std::cmp::Ordering::Greater => u64::MAX,
        std::cmp::Ordering::Equal => u64::MAX.checked_shl((i % 64 + 1) as u32).unwrap_or(0),
    }
}

fn pick_second<R: Rng + ?Sized>(
    st: &State,
    first: usize,
    scale: f64,
    filtered: bool,
    rng: &mut R,
) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for i in (0..st.k).filter(|&i| i != first) {
        let (wi, wf) = (st.w(i, first), st.w(first, i));
        let n = wi + wf;
        if filtered && n > 0 {
            let n = f64::from(n);
            let lower = f64::from(wi) / n - (scale / n).sqrt();
            if lower > 0.5 {
                continue;
            }
        }
        let theta = sample_posterior(wi, wf, rng);
        if best.is_none_or(|(_, b)| theta > b) {
            best = Some((i, theta));
        }
    }
    best.map(|(i, _)| i)
}
