//! prefBest: repeated pruning on random regular pairings, then a round robin.

use std::collections::BTreeSet;

use log::warn;
use rand::Rng;

use super::pairings::{complete_pairings, random_pairings, EdgeList};
use super::result::{tally_of, FinalSets, PhaseTag, RunResult, TraceEntry};
use super::PrefBestParams;
use crate::error::{Error, Result};
use crate::prefs::{ArmId, BordaVector, JudgmentTally, OracleHandle};

/// Judges each edge once and returns wins over pairings per arm.
pub fn estimate_borda(edges: &EdgeList, oracle: &mut OracleHandle) -> Result<BordaVector> {
    if edges.is_empty() {
        return Err(Error::invalid("estimate_borda needs at least one pairing"));
    }
    let mut trace = Vec::new();
    Ok(play(edges, oracle, PhaseTag::Finalize, &mut trace)?.borda())
}

/// One pruning phase: keeps the arms whose estimated Borda score is at least 0.5.
pub fn prune<R: Rng + ?Sized>(
    pool: &[ArmId],
    n: usize,
    oracle: &mut OracleHandle,
    rng: &mut R,
) -> Result<Vec<ArmId>> {
    let mut trace = Vec::new();
    prune_phase(pool, n, oracle, rng, PhaseTag::Prune(1), &mut trace)
}

/// Round robin over the pool; returns every arm sharing the best score.
pub fn finalize(pool: &[ArmId], oracle: &mut OracleHandle) -> Result<BTreeSet<ArmId>> {
    let edges = complete_pairings(pool)?;
    let mut trace = Vec::new();
    Ok(play(&edges, oracle, PhaseTag::Finalize, &mut trace)?
        .borda()
        .argmax())
}

/// Runs prefBest on `pool` and reports the winner set with judgment statistics.
pub fn pref_best<R: Rng + ?Sized>(
    pool: &[ArmId],
    params: &PrefBestParams,
    oracle: &mut OracleHandle,
    rng: &mut R,
) -> Result<RunResult> {
    params.validate()?;
    match pool.len() {
        0 => return Err(Error::invalid("prefBest needs a nonempty pool")),
        1 => {
            let mut r = RunResult::from_trace(pool.iter().copied().collect(), Vec::new());
            r.pool_sizes = vec![1];
            return Ok(r);
        }
        _ => {}
    }

    let mut trace = Vec::new();
    let mut sizes = Vec::new();
    let mut current = pool.to_vec();
    let mut phases = 0u32;
    while current.len() > params.m {
        phases += 1;
        sizes.push(current.len());
        current = prune_phase(
            &current,
            params.n,
            oracle,
            rng,
            PhaseTag::Prune(phases),
            &mut trace,
        )?;
    }
    sizes.push(current.len());

    let (winners, final_sets) = if current.len() == 1 {
        (current.iter().copied().collect(), None)
    } else {
        let edges = complete_pairings(&current)?;
        let first = play(&edges, oracle, PhaseTag::Finalize, &mut trace)?;
        let set_one = first.borda().argmax();
        if params.extra_final_phase {
            let second = play(&edges, oracle, PhaseTag::ExtraFinalize, &mut trace)?;
            let set_two = second.borda().argmax();
            let mut merged = first;
            merged.merge(&second);
            let combined = merged.borda().argmax();
            (
                combined.clone(),
                Some(FinalSets {
                    set_one,
                    set_two,
                    combined,
                }),
            )
        } else {
            (set_one, None)
        }
    };

    let mut result = RunResult::from_trace(winners, trace);
    result.phases = phases;
    result.pool_sizes = sizes;
    result.final_sets = final_sets;
    Ok(result)
}

pub(crate) fn play(
    edges: &EdgeList,
    oracle: &mut OracleHandle,
    phase: PhaseTag,
    trace: &mut Vec<TraceEntry>,
) -> Result<JudgmentTally> {
    let start = trace.len();
    for &(i, j) in edges.iter() {
        let winner = oracle.duel(i, j)?;
        trace.push(TraceEntry {
            i,
            j,
            winner,
            phase,
        });
    }
    Ok(tally_of(&trace[start..]))
}

/// Survivors of one pruning phase given its Borda estimates.
///
/// Keeps scores >= 0.5. If nobody would be removed (only possible when every
/// degree is even), the lowest-scoring arms are dropped instead; when all
/// scores tie, one random arm goes.
pub(crate) fn survivors<R: Rng + ?Sized>(
    pool: &[ArmId],
    borda: &BordaVector,
    rng: &mut R,
) -> Vec<ArmId> {
    let score = |a: ArmId| borda.score(a).unwrap_or(0.0);
    let kept: Vec<ArmId> = pool.iter().copied().filter(|&a| score(a) >= 0.5).collect();
    if kept.len() < pool.len() {
        return kept;
    }
    warn!(
        "pruning phase kept all {} arms; dropping the lowest scores to make progress",
        pool.len()
    );
    let low = pool.iter().map(|&a| score(a)).fold(f64::INFINITY, f64::min);
    let above: Vec<ArmId> = pool.iter().copied().filter(|&a| score(a) > low).collect();
    if !above.is_empty() {
        return above;
    }
    let mut rest = pool.to_vec();
    rest.remove(rng.random_range(0..rest.len()));
    rest
}

fn prune_phase<R: Rng + ?Sized>(
    pool: &[ArmId],
    n: usize,
    oracle: &mut OracleHandle,
    rng: &mut R,
    phase: PhaseTag,
    trace: &mut Vec<TraceEntry>,
) -> Result<Vec<ArmId>> {
    let edges = random_pairings(pool, n, rng)?;
    let borda = play(&edges, oracle, phase, trace)?.borda();
    Ok(survivors(pool, &borda, rng))
}
