use rand::Rng;

use crate::prefs::{ArmId, JudgmentTally};

/// The empirically best candidate once a budget is spent.
///
/// Ranks by empirical Copeland score (opponents with a mean win rate above
/// one half), then by empirical Borda score (overall win rate). Remaining ties
/// are broken uniformly at random.
pub fn empirically_best<R: Rng + ?Sized>(
    tally: &JudgmentTally,
    candidates: &[ArmId],
    rng: &mut R,
) -> Option<ArmId> {
    let size = candidates.iter().map(|a| a.0 + 1).max()?;
    let mut copeland = vec![0u32; size];
    let mut wins = vec![0u32; size];
    let mut played = vec![0u32; size];
    for (a, b, c) in tally.iter() {
        if a.0 < size {
            wins[a.0] += c.low_wins;
            played[a.0] += c.total();
            if c.low_wins > c.high_wins {
                copeland[a.0] += 1;
            }
        }
        if b.0 < size {
            wins[b.0] += c.high_wins;
            played[b.0] += c.total();
            if c.high_wins > c.low_wins {
                copeland[b.0] += 1;
            }
        }
    }
    let borda = |a: ArmId| {
        if played[a.0] == 0 {
            0.0
        } else {
            f64::from(wins[a.0]) / f64::from(played[a.0])
        }
    };
    let key = |a: ArmId| (copeland[a.0], borda(a));
    let best = candidates
        .iter()
        .map(|&a| key(a))
        .max_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)))?;
    let tied: Vec<ArmId> = candidates
        .iter()
        .copied()
        .filter(|&a| key(a) == best)
        .collect();
    Some(tied[rng.random_range(0..tied.len())])
}
