//! A judging campaign driven in-process: simulated assessors fetch tasks and
//! answer them, one of them carelessly. Quality control drops that assessor
//! and re-queues their work, phases advance, and the event log replays to the
//! same state.
//!
//! ```bash
//! cargo run -p prefbest --example live_campaign
//! ```

use std::collections::HashMap;

use prefbest::prefs::seeded_rng;
use prefbest::service::{Campaign, CampaignConfig, LogEvent, Passage, Pool, Side, TestPair};
use rand::Rng;

fn pool(query: &str, k: usize) -> Pool {
    Pool {
        query_id: query.into(),
        query_text: format!("question {query}"),
        members: (0..k)
            .map(|i| {
                Passage::new(
                    format!("{query}-{i}"),
                    format!("{query} answer with quality {}", k - i),
                )
            })
            .collect(),
        equivalence_classes: None,
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bank: Vec<TestPair> = (0..4)
        .map(|i| TestPair {
            question: format!("calibration {i}"),
            best_known_answer: Passage::new(
                format!("gold{i}"),
                format!("correct calibration answer {i}"),
            ),
            off_topic: Passage::new(format!("junk{i}"), format!("off-topic filler {i}")),
        })
        .collect();
    let gold: HashMap<String, bool> = bank
        .iter()
        .flat_map(|t| {
            [
                (t.best_known_answer.text.clone(), true),
                (t.off_topic.text.clone(), false),
            ]
        })
        .collect();
    let mut config = CampaignConfig::new("demo", vec![pool("q1", 14), pool("q2", 6)], bank);
    config.seed = 3;

    let mut log: Vec<LogEvent> = Vec::new();
    let mut campaign = Campaign::create(config.clone())?;
    let mut rng = seeded_rng(9);
    let mut now = 0u64;
    let workers = ["ana", "ben", "careless", "dee"];

    while !campaign.is_done() {
        let mut served = false;
        for w in workers {
            let Ok(Some(task)) = campaign.next_task(w, now, &mut log) else {
                continue;
            };
            served = true;
            let choices: Vec<Side> = task
                .items
                .iter()
                .map(|item| {
                    let left = match gold.get(&item.left_text) {
                        // The careless assessor picks at random, even on test pairs.
                        _ if w == "careless" => rng.random_bool(0.5),
                        Some(&is_gold) => is_gold,
                        // Texts end with their quality; the better one wins 80% of the time.
                        None => {
                            let q =
                                |t: &str| t.rsplit(' ').next().and_then(|n| n.parse::<u32>().ok());
                            (q(&item.left_text) > q(&item.right_text)) == rng.random_bool(0.8)
                        }
                    };
                    if left {
                        Side::Left
                    } else {
                        Side::Right
                    }
                })
                .collect();
            campaign.submit(&task.task_id, &choices, now, &mut log)?;
            now += 60_000;
        }
        let report = campaign.advance(now, &mut log)?;
        if !report.qc.is_empty() {
            println!(
                "qc: excluded {:?}, re-queued {} pairs",
                report.qc.excluded, report.qc.requeued
            );
        }
        for t in &report.transitions {
            println!(
                "{}: {} -> {} ({} passages, {} pairs)",
                t.query, t.from, t.to, t.pool_size, t.pending
            );
        }
        if !served && report.transitions.is_empty() {
            return Err("no worker can make progress".into());
        }
    }

    for q in campaign.results().queries {
        println!(
            "{}: set I {:?}, set II {:?}, combined {:?}",
            q.query_id, q.set_one, q.set_two, q.combined
        );
    }
    let replayed = Campaign::replay(config, log.clone())?;
    assert_eq!(replayed.state(), campaign.state());
    println!("{} logged events replay to the same state", log.len());
    Ok(())
}
