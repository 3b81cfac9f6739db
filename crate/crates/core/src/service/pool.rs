//! Judging pools built from graded relevance data, plus duplicate detection.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prefs::ArmId;

/// Pools stop growing once they reach this many passages.
pub const DEFAULT_POOL_THRESHOLD: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub id: String,
    pub text: String,
}

impl Passage {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Passage {
            id: id.into(),
            text: text.into(),
        }
    }
}

/// Four-point relevance scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Grade {
    Irrelevant = 0,
    Related = 1,
    HighlyRelevant = 2,
    Perfect = 3,
}

impl TryFrom<u8> for Grade {
    type Error = Error;

    fn try_from(g: u8) -> Result<Self> {
        Ok(match g {
            0 => Grade::Irrelevant,
            1 => Grade::Related,
            2 => Grade::HighlyRelevant,
            3 => Grade::Perfect,
            _ => return Err(Error::invalid(format!("grade {g} is outside 0..=3"))),
        })
    }
}

impl From<Grade> for u8 {
    fn from(g: Grade) -> u8 {
        g as u8
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GradedQrel {
    pub query_id: String,
    pub passage_id: String,
    pub grade: Grade,
}

impl GradedQrel {
    pub fn new(query_id: impl Into<String>, passage_id: impl Into<String>, grade: Grade) -> Self {
        GradedQrel {
            query_id: query_id.into(),
            passage_id: passage_id.into(),
            grade,
        }
    }
}

/// The candidate answers for one query. Arm `i` is `members[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Pool {
    pub query_id: String,
    pub query_text: String,
    pub members: Vec<Passage>,
    /// Groups of byte-identical passages; the first arm of a class represents it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equivalence_classes: Option<Vec<Vec<ArmId>>>,
}

impl Pool {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn passage(&self, arm: ArmId) -> &Passage {
        &self.members[arm.index()]
    }

    /// Arms that take part in duels: class representatives when duplicates are
    /// merged, otherwise every member.
    pub fn duel_arms(&self) -> Vec<ArmId> {
        match &self.equivalence_classes {
            Some(classes) => classes.iter().map(|c| c[0]).collect(),
            None => crate::prefs::arms(self.len()),
        }
    }

    /// Expands representative arms to every member of their class, in pool order.
    pub fn expand<'a>(&self, arms: impl IntoIterator<Item = &'a ArmId>) -> Vec<ArmId> {
        let chosen: HashSet<ArmId> = arms.into_iter().copied().collect();
        let mut out: Vec<ArmId> = match &self.equivalence_classes {
            Some(classes) => classes
                .iter()
                .filter(|c| chosen.contains(&c[0]))
                .flatten()
                .copied()
                .collect(),
            None => chosen.into_iter().collect(),
        };
        out.sort();
        out
    }

    /// Same pool with duplicate passages grouped into equivalence classes.
    pub fn with_duplicates_merged(mut self) -> Self {
        self.equivalence_classes = Some(detect_duplicates(&self.members));
        self
    }
}

/// Groups passages with byte-identical text. Classes are ordered by their
/// first member, and members within a class by position.
pub fn detect_duplicates(passages: &[Passage]) -> Vec<Vec<ArmId>> {
    let mut classes: Vec<Vec<ArmId>> = Vec::new();
    let mut by_text: HashMap<&str, usize> = HashMap::new();
    for (i, p) in passages.iter().enumerate() {
        match by_text.get(p.text.as_str()) {
            Some(&c) => classes[c].push(ArmId(i)),
            None => {
                by_text.insert(&p.text, classes.len());
                classes.push(vec![ArmId(i)]);
            }
        }
    }
    classes
}

/// Builds one query's pool top-down by grade: every perfect passage, then
/// every highly relevant one if the pool is still below `threshold`, then every
/// related one. Whole tiers are added, so the pool may exceed the threshold.
pub fn build_judging_pool(
    qrels: &[GradedQrel],
    passages: &HashMap<String, Passage>,
    query_id: &str,
    query_text: &str,
    threshold: usize,
) -> Result<Pool> {
    let mut graded: BTreeMap<&str, Grade> = BTreeMap::new();
    for q in qrels.iter().filter(|q| q.query_id == query_id) {
        if let Some(prev) = graded.insert(&q.passage_id, q.grade) {
            if prev != q.grade {
                return Err(Error::invalid(format!(
                    "passage {} has two grades for query {query_id}",
                    q.passage_id
                )));
            }
        }
    }
    let mut members = Vec::new();
    for tier in [Grade::Perfect, Grade::HighlyRelevant, Grade::Related] {
        if members.len() >= threshold {
            break;
        }
        // Keep the qrels file order within a tier.
        let mut seen = HashSet::new();
        for q in qrels
            .iter()
            .filter(|q| q.query_id == query_id && q.grade == tier)
        {
            if !seen.insert(q.passage_id.as_str()) {
                continue;
            }
            let p = passages.get(&q.passage_id).ok_or_else(|| Error::NotFound {
                kind: "passage",
                id: q.passage_id.clone(),
            })?;
            members.push(p.clone());
        }
    }
    if members.is_empty() {
        return Err(Error::EmptyPool(query_id.to_string()));
    }
    Ok(Pool {
        query_id: query_id.to_string(),
        query_text: query_text.to_string(),
        members,
        equivalence_classes: None,
    })
}

fn tsv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(false)
        .flexible(true)
        .quoting(false)
        .from_reader(reader)
}

/// Reads `queryId <tab> passageId <tab> grade` lines.
pub fn read_qrels<R: Read>(reader: R) -> Result<Vec<GradedQrel>> {
    let mut out = Vec::new();
    for (line, rec) in tsv_reader(reader).records().enumerate() {
        let rec = rec?;
        if rec.len() != 3 {
            return Err(Error::invalid(format!(
                "qrels line {}: expected 3 tab-separated fields, found {}",
                line + 1,
                rec.len()
            )));
        }
        let grade: u8 = rec[2].trim().parse().map_err(|_| {
            Error::invalid(format!("qrels line {}: bad grade {:?}", line + 1, &rec[2]))
        })?;
        out.push(GradedQrel::new(
            rec[0].trim(),
            rec[1].trim(),
            Grade::try_from(grade)?,
        ));
    }
    Ok(out)
}

/// Reads `id <tab> text` lines into a map. Used for passages and for queries.
pub fn read_id_text<R: Read>(reader: R) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (line, rec) in tsv_reader(reader).records().enumerate() {
        let rec = rec?;
        if rec.len() < 2 {
            return Err(Error::invalid(format!(
                "line {}: expected `id<TAB>text`",
                line + 1
            )));
        }
        // Text may itself contain tabs.
        let text = rec.iter().skip(1).collect::<Vec<_>>().join("\t");
        if out.insert(rec[0].trim().to_string(), text).is_some() {
            return Err(Error::invalid(format!(
                "line {}: duplicate id {}",
                line + 1,
                &rec[0]
            )));
        }
    }
    Ok(out)
}

pub fn read_passages<R: Read>(reader: R) -> Result<HashMap<String, Passage>> {
    Ok(read_id_text(reader)?
        .into_iter()
        .map(|(id, text)| (id.clone(), Passage { id, text }))
        .collect())
}

/// Builds a pool for every query in `queries` that has relevant passages.
/// Queries without any are returned separately so callers can report them.
pub fn build_pools(
    qrels: &[GradedQrel],
    passages: &HashMap<String, Passage>,
    queries: &BTreeMap<String, String>,
    threshold: usize,
) -> Result<(Vec<Pool>, Vec<String>)> {
    let mut pools = Vec::new();
    let mut skipped = Vec::new();
    for (qid, text) in queries {
        match build_judging_pool(qrels, passages, qid, text, threshold) {
            Ok(p) => pools.push(p),
            Err(Error::EmptyPool(q)) => skipped.push(q),
            Err(e) => return Err(e),
        }
    }
    Ok((pools, skipped))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture(counts: [usize; 3]) -> (Vec<GradedQrel>, HashMap<String, Passage>) {
        let mut qrels = Vec::new();
        let mut passages = HashMap::new();
        let grades = [Grade::Perfect, Grade::HighlyRelevant, Grade::Related];
        for (tier, &n) in counts.iter().enumerate() {
            for i in 0..n {
                let id = format!("p{tier}-{i}");
                qrels.push(GradedQrel::new("q", &id, grades[tier]));
                passages.insert(id.clone(), Passage::new(&id, format!("text {id}")));
            }
        }
        qrels.push(GradedQrel::new("q", "junk", Grade::Irrelevant));
        passages.insert("junk".into(), Passage::new("junk", "junk"));
        (qrels, passages)
    }

    fn pool_size(counts: [usize; 3]) -> usize {
        let (q, p) = fixture(counts);
        build_judging_pool(&q, &p, "q", "", 5).unwrap().len()
    }

    #[test]
    fn tiers_are_added_whole() {
        assert_eq!(pool_size([3, 4, 10]), 7);
        assert_eq!(pool_size([6, 0, 0]), 6);
        assert_eq!(pool_size([2, 1, 1]), 4);
        assert_eq!(pool_size([0, 0, 9]), 9);
    }

    #[test]
    fn irrelevant_only_is_an_empty_pool() {
        let (q, p) = fixture([0, 0, 0]);
        assert!(matches!(
            build_judging_pool(&q, &p, "q", "", 5),
            Err(Error::EmptyPool(_))
        ));
    }

    #[test]
    fn unresolved_passage_is_an_error() {
        let q = vec![GradedQrel::new("q", "missing", Grade::Perfect)];
        assert!(build_judging_pool(&q, &HashMap::new(), "q", "", 5).is_err());
    }

    #[test]
    fn duplicate_classes() {
        let mut ps: Vec<Passage> = (0..130)
            .map(|i| Passage::new(format!("p{i}"), format!("t{i}")))
            .collect();
        ps[40].text = ps[7].text.clone();
        ps[99].text = ps[7].text.clone();
        let classes = detect_duplicates(&ps);
        assert_eq!(classes.len(), 128);
        assert_eq!(classes[7], vec![ArmId(7), ArmId(40), ArmId(99)]);
        assert!(classes.iter().filter(|c| c.len() == 1).count() == 127);

        let pool = Pool {
            query_id: "q".into(),
            query_text: String::new(),
            members: ps,
            equivalence_classes: None,
        }
        .with_duplicates_merged();
        assert_eq!(pool.duel_arms().len(), 128);
        assert_eq!(
            pool.expand(&[ArmId(7), ArmId(3)]),
            vec![ArmId(3), ArmId(7), ArmId(40), ArmId(99)]
        );
    }

    #[test]
    fn tsv_parsing() {
        let q = read_qrels("q1\tp1\t3\nq1\tp2\t0\n".as_bytes()).unwrap();
        assert_eq!(q[0].grade, Grade::Perfect);
        assert!(read_qrels("q1\tp1\t4\n".as_bytes()).is_err());
        assert!(read_qrels("q1 p1 3\n".as_bytes()).is_err());
        let p = read_passages("p1\tsome \"quoted\" text\np2\ta\tb\n".as_bytes()).unwrap();
        assert_eq!(p["p1"].text, "some \"quoted\" text");
        assert_eq!(p["p2"].text, "a\tb");
    }
}
