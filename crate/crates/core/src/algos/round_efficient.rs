//! Round-efficient elimination: random perfect matchings each round, with
//! per-arm win-rate confidence intervals.

use rand::seq::SliceRandom;
use rand::Rng;

use super::empirical::empirically_best;
use super::result::{tally_of, PhaseTag, RunResult, TraceEntry};
use super::ReParams;
use crate::error::{Error, Result};
use crate::prefs::{ArmId, OracleHandle};

pub fn round_efficient<R: Rng + ?Sized>(
    k: usize,
    params: &ReParams,
    oracle: &mut OracleHandle,
    rng: &mut R,
) -> Result<RunResult> {
    params.validate()?;
    if k < 2 {
        return Err(Error::invalid(format!(
            "round-efficient needs k >= 2, got {k}"
        )));
    }
    let mut alive: Vec<usize> = (0..k).collect();
    let mut wins = vec![0u32; k];
    let mut played = vec![0u32; k];
    let mut trace = Vec::with_capacity(params.budget as usize);
    let mut round = 0u64;

    'rounds: while alive.len() > 1 {
        round += 1;
        alive.shuffle(rng);
        for pair in alive.chunks_exact(2) {
            if trace.len() as u64 >= params.budget {
                break 'rounds;
            }
            let (i, j) = (pair[0], pair[1]);
            let winner = oracle.duel(ArmId(i), ArmId(j))?;
            wins[winner.0] += 1;
            played[i] += 1;
            played[j] += 1;
            trace.push(TraceEntry {
                i: ArmId(i),
                j: ArmId(j),
                winner,
                phase: PhaseTag::Explore,
            });
        }

        let log_term = (2.0 * k as f64 * round as f64 / params.error_probability).ln();
        let bounds = |a: usize| {
            if played[a] == 0 {
                return (0.0, 0.0, 1.0);
            }
            let mean = f64::from(wins[a]) / f64::from(played[a]);
            let radius = (log_term / (2.0 * f64::from(played[a]))).sqrt();
            (mean, mean - radius, mean + radius)
        };
        let leader = alive
            .iter()
            .copied()
            .max_by(|&a, &b| bounds(a).0.total_cmp(&bounds(b).0))
            .expect("at least two arms alive");
        let floor = bounds(leader).1;
        alive.retain(|&a| a == leader || bounds(a).2 >= floor);
        if trace.len() as u64 >= params.budget {
            break;
        }
    }

    let winner = if alive.len() == 1 {
        ArmId(alive[0])
    } else {
        let mut candidates: Vec<ArmId> = alive.iter().map(|&a| ArmId(a)).collect();
        candidates.sort_unstable();
        empirically_best(&tally_of(&trace), &candidates, rng).expect("survivors nonempty")
    };
    Ok(RunResult::from_trace([winner].into(), trace))
}
