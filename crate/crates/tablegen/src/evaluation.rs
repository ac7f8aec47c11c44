//! Ranking metrics, TREC-style file formats, comparison counts, and linear
//! feature-weight fitting.
//!
//! Metrics follow the usual conventions: NDCG uses exponential gain
//! `2^rel - 1` with a `log2(rank + 1)` discount, average precision divides by
//! the total number of relevant items in the assessments, and reciprocal rank
//! treats any grade of 1 or more as relevant. Queries present in a run but
//! absent from the assessments are skipped with a warning; queries whose
//! assessments hold no relevant item score 0 and are flagged.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::ranking::RankedList;

/// Graded relevance assessments: (query, item) → grade ≥ 0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Qrels {
    grades: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Qrels {
    pub fn insert(&mut self, query: &str, item: &str, grade: u32) {
        self.grades
            .entry(query.to_string())
            .or_default()
            .insert(item.to_string(), grade);
    }

    /// Grade of an item, 0 when unjudged.
    pub fn grade(&self, query: &str, item: &str) -> u32 {
        self.grades
            .get(query)
            .and_then(|m| m.get(item))
            .copied()
            .unwrap_or(0)
    }

    pub fn contains_query(&self, query: &str) -> bool {
        self.grades.contains_key(query)
    }

    pub fn queries(&self) -> impl Iterator<Item = &str> {
        self.grades.keys().map(String::as_str)
    }

    /// Number of items with grade ≥ 1.
    pub fn relevant_count(&self, query: &str) -> usize {
        self.grades
            .get(query)
            .map(|m| m.values().filter(|&&g| g >= 1).count())
            .unwrap_or(0)
    }

    /// All grades of a query, descending: the ideal gain sequence.
    fn ideal_grades(&self, query: &str) -> Vec<u32> {
        let mut grades: Vec<u32> = self
            .grades
            .get(query)
            .map(|m| m.values().copied().collect())
            .unwrap_or_default();
        grades.sort_unstable_by(|a, b| b.cmp(a));
        grades
    }
}

/// Whitespace-separated `query 0 item grade` lines.
pub fn parse_qrels<R: BufRead>(reader: R) -> Result<Qrels> {
    let mut qrels = Qrels::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let grade = (fields.len() == 4).then(|| fields[3].parse::<u32>().ok()).flatten();
        match grade {
            Some(g) => qrels.insert(fields[0], fields[2], g),
            None => {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("expected `query 0 item grade`, got `{line}`"),
                })
            }
        }
    }
    Ok(qrels)
}

/// Ranked retrieval output per query.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Run {
    by_query: BTreeMap<String, Vec<(String, f64)>>,
}

impl Run {
    pub fn insert_ranking(&mut self, query: &str, list: &RankedList) {
        self.by_query
            .insert(query.to_string(), list.items().to_vec());
    }

    pub fn items(&self, query: &str) -> &[(String, f64)] {
        self.by_query.get(query).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn queries(&self) -> impl Iterator<Item = &str> {
        self.by_query.keys().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.by_query.is_empty()
    }
}

/// Whitespace-separated `query Q0 item rank score tag` lines. Items are
/// ordered by their rank field.
pub fn parse_run<R: BufRead>(reader: R) -> Result<Run> {
    let mut staged: BTreeMap<String, Vec<(u64, String, f64)>> = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let parsed = (fields.len() == 6)
            .then(|| Some((fields[3].parse::<u64>().ok()?, fields[4].parse::<f64>().ok()?)))
            .flatten();
        match parsed {
            Some((rank, score)) => staged
                .entry(fields[0].to_string())
                .or_default()
                .push((rank, fields[2].to_string(), score)),
            None => {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("expected `query Q0 item rank score tag`, got `{line}`"),
                })
            }
        }
    }
    let mut run = Run::default();
    for (query, mut items) in staged {
        items.sort_by(|a, b| a.0.cmp(&b.0));
        run.by_query
            .insert(query, items.into_iter().map(|(_, item, score)| (item, score)).collect());
    }
    Ok(run)
}

/// Writes one query's ranking in run-file format.
pub fn write_run<W: Write>(w: &mut W, query: &str, list: &RankedList, tag: &str) -> Result<()> {
    for (rank, (item, score)) in list.items().iter().enumerate() {
        writeln!(w, "{query} Q0 {item} {} {score} {tag}", rank + 1)?;
    }
    Ok(())
}

/// `query<TAB>text` lines, order preserved.
pub fn parse_queries<R: BufRead>(reader: R) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        match line.split_once('\t') {
            Some((id, text)) => out.push((id.to_string(), text.trim().to_string())),
            None => {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("expected `id<TAB>query text`, got `{line}`"),
                })
            }
        }
    }
    Ok(out)
}

/// One query's score within a metric summary.
#[derive(Debug, Clone, PartialEq)]
pub struct PerQuery {
    pub query: String,
    pub value: f64,
    /// The assessments hold no relevant item for this query.
    pub no_relevant: bool,
}

/// Per-query values plus their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSummary {
    pub per_query: Vec<PerQuery>,
    pub mean: f64,
    /// Run queries without assessments, skipped.
    pub skipped: Vec<String>,
}

fn summarize(per_query: Vec<PerQuery>, skipped: Vec<String>) -> MetricSummary {
    let mean = if per_query.is_empty() {
        0.0
    } else {
        per_query.iter().map(|p| p.value).sum::<f64>() / per_query.len() as f64
    };
    MetricSummary { per_query, mean, skipped }
}

fn dcg(grades: impl Iterator<Item = u32>, k: usize) -> f64 {
    grades
        .take(k)
        .enumerate()
        .map(|(i, g)| (2f64.powi(g as i32) - 1.0) / ((i + 2) as f64).log2())
        .sum()
}

fn ndcg_for_query(items: &[(String, f64)], qrels: &Qrels, query: &str, k: usize) -> f64 {
    let ideal = dcg(qrels.ideal_grades(query).into_iter(), k);
    if ideal == 0.0 {
        return 0.0;
    }
    let got = dcg(items.iter().map(|(item, _)| qrels.grade(query, item)), k);
    got / ideal
}

/// NDCG at cutoff `k` for every assessed query in the run.
pub fn ndcg_at_k(run: &Run, qrels: &Qrels, k: usize) -> MetricSummary {
    let mut per_query = Vec::new();
    let mut skipped = Vec::new();
    for query in run.queries() {
        if !qrels.contains_query(query) {
            log::warn!("query `{query}` has no assessments, skipping");
            skipped.push(query.to_string());
            continue;
        }
        let no_relevant = qrels.relevant_count(query) == 0;
        per_query.push(PerQuery {
            query: query.to_string(),
            value: ndcg_for_query(run.items(query), qrels, query, k),
            no_relevant,
        });
    }
    summarize(per_query, skipped)
}

/// Mean average precision and mean reciprocal rank, binary relevance at
/// grade ≥ 1.
pub fn map_mrr(run: &Run, qrels: &Qrels) -> (MetricSummary, MetricSummary) {
    let mut ap = Vec::new();
    let mut rr = Vec::new();
    let mut skipped = Vec::new();
    for query in run.queries() {
        if !qrels.contains_query(query) {
            log::warn!("query `{query}` has no assessments, skipping");
            skipped.push(query.to_string());
            continue;
        }
        let relevant_total = qrels.relevant_count(query);
        let no_relevant = relevant_total == 0;
        let mut hits = 0usize;
        let mut precision_sum = 0.0;
        let mut first_hit: Option<usize> = None;
        for (rank0, (item, _)) in run.items(query).iter().enumerate() {
            if qrels.grade(query, item) >= 1 {
                hits += 1;
                precision_sum += hits as f64 / (rank0 + 1) as f64;
                first_hit.get_or_insert(rank0 + 1);
            }
        }
        let ap_value = if relevant_total == 0 {
            0.0
        } else {
            precision_sum / relevant_total as f64
        };
        let rr_value = first_hit.map(|r| 1.0 / r as f64).unwrap_or(0.0);
        ap.push(PerQuery { query: query.to_string(), value: ap_value, no_relevant });
        rr.push(PerQuery { query: query.to_string(), value: rr_value, no_relevant });
    }
    (summarize(ap, skipped.clone()), summarize(rr, skipped))
}

/// Counts of queries helped, hurt, and unchanged by run `b` relative to run
/// `a`, classified by the NDCG@10 delta against an inclusive threshold. The
/// two runs must cover the same queries.
pub fn helped_hurt_unchanged(
    run_a: &Run,
    run_b: &Run,
    qrels: &Qrels,
    threshold: f64,
) -> Result<(usize, usize, usize)> {
    let qa: Vec<&str> = run_a.queries().collect();
    let qb: Vec<&str> = run_b.queries().collect();
    if qa != qb {
        return Err(Error::QuerySetMismatch(format!(
            "run a has {} queries, run b has {}, and they must be identical",
            qa.len(),
            qb.len()
        )));
    }
    let mut helped = 0;
    let mut hurt = 0;
    let mut unchanged = 0;
    for query in qa {
        if !qrels.contains_query(query) {
            continue;
        }
        let delta = ndcg_for_query(run_b.items(query), qrels, query, 10)
            - ndcg_for_query(run_a.items(query), qrels, query, 10);
        if delta >= threshold {
            helped += 1;
        } else if delta <= -threshold {
            hurt += 1;
        } else {
            unchanged += 1;
        }
    }
    Ok((helped, hurt, unchanged))
}

/// Learned linear weights plus the per-fold test error that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnedWeights {
    pub weights: Vec<f64>,
    pub fold_mse: Vec<f64>,
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col].abs() < 1e-12 {
            return Err(Error::InvalidInput("singular normal-equations matrix".to_string()));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut sum = b[col];
        for k in (col + 1)..n {
            sum -= a[col][k] * x[k];
        }
        x[col] = sum / a[col][col];
    }
    Ok(x)
}

/// Ridge-regularized least squares on one training split:
/// `(XᵀX + εI) w = Xᵀy` with ε = 1e-6, no intercept.
fn fit_ridge(x: &[&Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    let dims = x[0].len();
    let mut xtx = vec![vec![0.0; dims]; dims];
    let mut xty = vec![0.0; dims];
    for (row, &target) in x.iter().zip(y) {
        for i in 0..dims {
            for j in 0..dims {
                xtx[i][j] += row[i] * row[j];
            }
            xty[i] += row[i] * target;
        }
    }
    for (i, row) in xtx.iter_mut().enumerate() {
        row[i] += 1e-6;
    }
    solve_linear(xtx, xty)
}

/// Cross-validated linear regression of relevance labels on feature vectors.
/// Sample `i` lands in fold `i % folds`; the reported weights are the mean of
/// the per-fold fits. A constant feature column carries no signal and is
/// retained with a warning.
pub fn learn_weights(features: &[Vec<f64>], labels: &[f64], folds: usize) -> Result<LearnedWeights> {
    if folds < 2 {
        return Err(Error::InvalidInput("need at least 2 folds".to_string()));
    }
    if features.len() != labels.len() || features.is_empty() {
        return Err(Error::InvalidInput(
            "feature and label counts must match and be non-empty".to_string(),
        ));
    }
    let dims = features[0].len();
    if dims == 0 || features.iter().any(|f| f.len() != dims) {
        return Err(Error::InvalidInput("inconsistent feature dimensions".to_string()));
    }
    if features.len() < folds {
        return Err(Error::InvalidInput(format!(
            "{} samples cannot fill {} folds",
            features.len(),
            folds
        )));
    }
    for d in 0..dims {
        let first = features[0][d];
        if features.iter().all(|f| f[d] == first) {
            log::warn!("feature column {} is constant across all samples", d + 1);
        }
    }

    let mut weight_sum = vec![0.0; dims];
    let mut fold_mse = Vec::with_capacity(folds);
    for fold in 0..folds {
        let mut train_x: Vec<&Vec<f64>> = Vec::new();
        let mut train_y: Vec<f64> = Vec::new();
        let mut test: Vec<usize> = Vec::new();
        for i in 0..features.len() {
            if i % folds == fold {
                test.push(i);
            } else {
                train_x.push(&features[i]);
                train_y.push(labels[i]);
            }
        }
        let w = fit_ridge(&train_x, &train_y)?;
        let mse = test
            .iter()
            .map(|&i| {
                let pred: f64 = features[i].iter().zip(&w).map(|(x, w)| x * w).sum();
                (pred - labels[i]).powi(2)
            })
            .sum::<f64>()
            / test.len() as f64;
        fold_mse.push(mse);
        for (sum, w) in weight_sum.iter_mut().zip(&w) {
            *sum += w;
        }
    }
    let weights = weight_sum.into_iter().map(|s| s / folds as f64).collect();
    Ok(LearnedWeights { weights, fold_mse })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;
    use std::io::Cursor;

    fn run_of(query: &str, items: &[&str]) -> Run {
        let mut run = Run::default();
        let list = RankedList::from_scores(
            items
                .iter()
                .enumerate()
                .map(|(i, s)| (s.to_string(), (items.len() - i) as f64))
                .collect(),
        );
        run.insert_ranking(query, &list);
        run
    }

    fn qrels_of(query: &str, grades: &[(&str, u32)]) -> Qrels {
        let mut q = Qrels::default();
        for (item, g) in grades {
            q.insert(query, item, *g);
        }
        q
    }

    #[test]
    fn ideal_order_scores_one() {
        let qrels = qrels_of("q1", &[("d1", 2), ("d2", 1), ("d3", 0)]);
        let run = run_of("q1", &["d1", "d2", "d3"]);
        let summary = ndcg_at_k(&run, &qrels, 10);
        assert!((summary.mean - 1.0).abs() < 1e-12);
    }

    #[test]
    fn all_irrelevant_results_score_zero() {
        let qrels = qrels_of("q1", &[("d1", 2)]);
        let run = run_of("q1", &["x", "y", "z"]);
        assert_eq!(ndcg_at_k(&run, &qrels, 10).mean, 0.0);
    }

    #[test]
    fn swapped_pair_matches_the_closed_form() {
        let qrels = qrels_of("q1", &[("d1", 2), ("d2", 1)]);
        // Both permutations of two graded items.
        let best = ndcg_at_k(&run_of("q1", &["d1", "d2"]), &qrels, 2).mean;
        let swapped = ndcg_at_k(&run_of("q1", &["d2", "d1"]), &qrels, 2).mean;
        assert!((best - 1.0).abs() < 1e-12);
        assert!((swapped - 0.7967075809905066).abs() < 1e-12);
        assert!(swapped < best);
    }

    #[test]
    fn items_below_the_cutoff_cannot_move_the_score() {
        let qrels = qrels_of("q1", &[("d1", 2), ("d2", 1), ("d3", 1)]);
        let a = ndcg_at_k(&run_of("q1", &["d1", "d2", "d3", "x", "y"]), &qrels, 3).mean;
        let b = ndcg_at_k(&run_of("q1", &["d1", "d2", "d3", "y", "x"]), &qrels, 3).mean;
        assert_eq!(a, b);
    }

    #[test]
    fn unassessed_queries_are_skipped_and_zero_relevance_flagged() {
        let mut qrels = qrels_of("q1", &[("d1", 0)]);
        qrels.insert("q1", "d2", 0);
        let mut run = run_of("q1", &["d1", "d2"]);
        let other = run_of("q2", &["d1"]);
        run.by_query
            .insert("q2".to_string(), other.items("q2").to_vec());
        let summary = ndcg_at_k(&run, &qrels, 10);
        assert_eq!(summary.skipped, vec!["q2".to_string()]);
        assert_eq!(summary.per_query.len(), 1);
        assert!(summary.per_query[0].no_relevant);
        assert_eq!(summary.per_query[0].value, 0.0);
    }

    #[test]
    fn single_relevant_item_at_the_top_is_perfect() {
        let qrels = qrels_of("q1", &[("d1", 1)]);
        let run = run_of("q1", &["d1", "x", "y"]);
        let (map, mrr) = map_mrr(&run, &qrels);
        assert_eq!(map.mean, 1.0);
        assert_eq!(mrr.mean, 1.0);
    }

    #[test]
    fn reciprocal_rank_of_fourth_place_is_a_quarter() {
        let qrels = qrels_of("q1", &[("d1", 1)]);
        let run = run_of("q1", &["x", "y", "z", "d1"]);
        let (map, mrr) = map_mrr(&run, &qrels);
        assert_eq!(mrr.mean, 0.25);
        assert_eq!(map.mean, 0.25);
    }

    #[test]
    fn map_equals_mrr_with_one_relevant_item_per_query() {
        let mut qrels = Qrels::default();
        qrels.insert("q1", "a", 1);
        qrels.insert("q1", "b", 0);
        qrels.insert("q2", "c", 2);
        let mut run = run_of("q1", &["b", "a", "x"]);
        let q2 = run_of("q2", &["y", "z", "c"]);
        run.by_query
            .insert("q2".to_string(), q2.items("q2").to_vec());
        let (map, mrr) = map_mrr(&run, &qrels);
        assert_eq!(map.mean, mrr.mean);
        for (a, b) in map.per_query.iter().zip(&mrr.per_query) {
            assert_eq!(a.value, b.value);
        }
    }

    #[test]
    fn missed_relevant_items_depress_average_precision() {
        // Two relevant items, only one retrieved: AP divides by 2, not 1.
        let qrels = qrels_of("q1", &[("d1", 1), ("d2", 1)]);
        let run = run_of("q1", &["d1", "x"]);
        let (map, _) = map_mrr(&run, &qrels);
        assert_eq!(map.mean, 0.5);
    }

    #[test]
    fn qrels_and_run_files_round_trip() {
        let qrels_text = "q1 0 d1 2\nq1 0 d2 0\nq2 0 d3 1\n";
        let qrels = parse_qrels(Cursor::new(qrels_text)).unwrap();
        assert_eq!(qrels.grade("q1", "d1"), 2);
        assert_eq!(qrels.grade("q1", "missing"), 0);
        assert_eq!(qrels.relevant_count("q1"), 1);
        assert!(parse_qrels(Cursor::new("q1 0 d1\n")).is_err());

        let mut buffer = Vec::new();
        let list = RankedList::from_scores(vec![("d1".into(), 0.9), ("d2".into(), 0.4)]);
        write_run(&mut buffer, "q1", &list, "test").unwrap();
        let run = parse_run(Cursor::new(buffer)).unwrap();
        assert_eq!(run.items("q1"), &[("d1".to_string(), 0.9), ("d2".to_string(), 0.4)]);
        // Rank fields out of file order still sort correctly.
        let shuffled = "q1 Q0 b 2 0.5 t\nq1 Q0 a 1 0.9 t\n";
        let run = parse_run(Cursor::new(shuffled)).unwrap();
        assert_eq!(run.items("q1")[0].0, "a");
        assert!(parse_run(Cursor::new("q1 Q0 a one 0.9\n")).is_err());
    }

    #[test]
    fn query_files_keep_their_order() {
        let text = "q2\ttowns in ireland\nq1\tvideo albums\n";
        let queries = parse_queries(Cursor::new(text)).unwrap();
        assert_eq!(queries[0], ("q2".to_string(), "towns in ireland".to_string()));
        assert_eq!(queries[1].0, "q1");
        assert!(parse_queries(Cursor::new("no tab here\n")).is_err());
    }

    #[test]
    fn identical_runs_leave_all_queries_unchanged() {
        let qrels = qrels_of("q1", &[("d1", 1)]);
        let run = run_of("q1", &["d1", "x"]);
        let (h, u, n) = helped_hurt_unchanged(&run, &run.clone(), &qrels, 0.05).unwrap();
        assert_eq!((h, u, n), (0, 0, 1));
    }

    #[test]
    fn threshold_bound_is_inclusive() {
        let qrels = qrels_of("q1", &[("d1", 1)]);
        let worse = run_of("q1", &["x", "d1"]);
        let better = run_of("q1", &["d1", "x"]);
        // Setting the threshold to the exact delta must still count as helped.
        let delta = ndcg_at_k(&better, &qrels, 10).mean - ndcg_at_k(&worse, &qrels, 10).mean;
        assert!(delta > 0.3);
        let (h, _, _) = helped_hurt_unchanged(&worse, &better, &qrels, delta).unwrap();
        assert_eq!(h, 1);
        let (h2, u2, _) = helped_hurt_unchanged(&worse, &better, &qrels, delta + 1e-9).unwrap();
        assert_eq!((h2, u2), (0, 0));
        let (_, hurt, _) = helped_hurt_unchanged(&better, &worse, &qrels, delta).unwrap();
        assert_eq!(hurt, 1);
    }

    #[test]
    fn mismatched_query_sets_are_rejected() {
        let qrels = qrels_of("q1", &[("d1", 1)]);
        let a = run_of("q1", &["d1"]);
        let b = run_of("q2", &["d1"]);
        assert!(matches!(
            helped_hurt_unchanged(&a, &b, &qrels, 0.05),
            Err(Error::QuerySetMismatch(_))
        ));
    }

    fn random_samples(
        n: usize,
        true_w: &[f64],
        noise: f64,
        seed: u64,
    ) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..n {
            let x: Vec<f64> = (0..true_w.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y: f64 = x.iter().zip(true_w).map(|(a, b)| a * b).sum::<f64>()
                + noise * rng.gen_range(-1.0..1.0);
            xs.push(x);
            ys.push(y);
        }
        (xs, ys)
    }

    #[test]
    fn labels_equal_to_one_feature_recover_its_weight() {
        let (xs, _) = random_samples(100, &[0.0, 0.0, 0.0], 0.0, 11);
        let ys: Vec<f64> = xs.iter().map(|x| x[0]).collect();
        let learned = learn_weights(&xs, &ys, 5).unwrap();
        assert!((learned.weights[0] - 1.0).abs() < 1e-6, "{:?}", learned.weights);
        assert!(learned.weights[1].abs() < 1e-6);
        assert!(learned.weights[2].abs() < 1e-6);
        for mse in &learned.fold_mse {
            assert!(*mse < 1e-9);
        }
    }

    #[test]
    fn coefficients_match_a_cramer_rule_oracle() {
        // Independent solver: 2x2 ridge normal equations by Cramer's rule,
        // with the same fold split and averaging.
        let (xs, ys) = random_samples(100, &[0.7, -0.3], 0.01, 23);
        let folds = 5;
        let mut expected = vec![0.0; 2];
        for fold in 0..folds {
            let mut s = [[0.0f64; 2]; 2];
            let mut t = [0.0f64; 2];
            for i in 0..xs.len() {
                if i % folds == fold {
                    continue;
                }
                for a in 0..2 {
                    for b in 0..2 {
                        s[a][b] += xs[i][a] * xs[i][b];
                    }
                    t[a] += xs[i][a] * ys[i];
                }
            }
            s[0][0] += 1e-6;
            s[1][1] += 1e-6;
            let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
            expected[0] += (t[0] * s[1][1] - s[0][1] * t[1]) / det;
            expected[1] += (s[0][0] * t[1] - t[0] * s[1][0]) / det;
        }
        for e in expected.iter_mut() {
            *e /= folds as f64;
        }
        let learned = learn_weights(&xs, &ys, folds).unwrap();
        assert!((learned.weights[0] - expected[0]).abs() < 1e-8);
        assert!((learned.weights[1] - expected[1]).abs() < 1e-8);
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        let (xs, ys) = random_samples(10, &[1.0], 0.0, 3);
        assert!(learn_weights(&xs, &ys, 1).is_err());
        assert!(learn_weights(&xs, &ys[..5].to_vec(), 2).is_err());
        assert!(learn_weights(&[], &[], 2).is_err());
        let ragged = vec![vec![1.0, 2.0], vec![1.0]];
        assert!(learn_weights(&ragged, &[1.0, 2.0], 2).is_err());
    }
}
