//! Report generation: score tables, the three normalization schemes,
//! aggregates, score-distribution curves, paired significance
//! matrices, a Times-Best tally, and plot files.
//!
//! Every emitted file begins with a `# source-hashes:` comment listing
//! the config hashes of the records it was computed from, so no
//! reported number is orphaned. Reports refuse to aggregate training
//! and testing games together unless explicitly overridden.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use coinop_core::metrics::{
    aggregate_average, aggregate_median, baseline_range, inter_algorithm_scores, normalize,
    paired_matrix, random_range, MetricsError, ScoreDistribution, ScoreRange, ScoreTable,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formats::{self, FormatError};
use crate::harness::{BaselineRecord, RunRecord};

/// Significance level for the paired Welch comparisons (99%).
pub const REPORT_ALPHA: f64 = 0.01;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no run records to report on")]
    NoRecords,
    #[error(
        "records span both the training and testing splits; \
         pass --allow-mixed-split to aggregate them anyway"
    )]
    MixedSplits,
    #[error("two records cover {game}/{algorithm}; report inputs must be unambiguous")]
    DuplicateCell { game: String, algorithm: String },
    #[error("no record covers {game}/{algorithm}; cross-game comparison needs every cell")]
    MissingCell { game: String, algorithm: String },
    #[error("no baseline record for {0}")]
    MissingBaselines(String),
    #[error("metrics failure on {context}: {source}")]
    Metrics {
        context: String,
        #[source]
        source: MetricsError,
    },
    #[error(transparent)]
    Format(#[from] FormatError),
}

#[derive(Debug, Clone, Default)]
pub struct ReportOptions {
    /// Aggregate across split tags (normally refused).
    pub allow_mixed_split: bool,
}

/// One aggregate line: an algorithm's average/median normalized score
/// under one normalization scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub algorithm: String,
    pub scheme: String,
    pub average: f64,
    pub median: f64,
}

/// The self-describing summary written alongside the delimited tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    /// Config hashes of every input record.
    pub sources: Vec<String>,
    pub games: Vec<String>,
    pub algorithms: Vec<String>,
    pub aggregates: Vec<AggregateRow>,
    /// Games on which each algorithm had the best mean raw score
    /// (ties credit every tied algorithm).
    pub times_best: BTreeMap<String, u32>,
    /// `wins[i][j]` = games where algorithm `i` beat `j` at 99%.
    pub paired_wins: Option<Vec<Vec<u32>>>,
    pub warnings: Vec<String>,
}

/// Everything a report run produced.
#[derive(Debug)]
pub struct ReportBundle {
    pub files: Vec<PathBuf>,
    pub summary: ReportSummary,
}

fn metrics_err(context: &str) -> impl Fn(MetricsError) -> ReportError + '_ {
    move |source| ReportError::Metrics { context: context.to_string(), source }
}

/// Assembles the (game × algorithm) score table from run records,
/// enforcing split hygiene and full coverage.
pub fn assemble_table(
    records: &[RunRecord],
    options: &ReportOptions,
) -> Result<ScoreTable, ReportError> {
    if records.is_empty() {
        return Err(ReportError::NoRecords);
    }
    if !options.allow_mixed_split {
        let first = records[0].split;
        if records.iter().any(|r| r.split != first) {
            return Err(ReportError::MixedSplits);
        }
    }
    let mut games: Vec<String> = records.iter().map(|r| r.game.clone()).collect();
    games.sort();
    games.dedup();
    let mut algorithms: Vec<String> = records.iter().map(|r| r.algorithm.clone()).collect();
    algorithms.sort();
    algorithms.dedup();
    let mut table = ScoreTable::new(games.clone(), algorithms.clone());
    for record in records {
        let g = table.game_index(&record.game).expect("collected above");
        let a = table.algorithm_index(&record.algorithm).expect("collected above");
        let cell = table.cell_mut(g, a);
        if !cell.is_empty() {
            return Err(ReportError::DuplicateCell {
                game: record.game.clone(),
                algorithm: record.algorithm.clone(),
            });
        }
        *cell = record.summary_scores();
    }
    for (g, game) in games.iter().enumerate() {
        for (a, algorithm) in algorithms.iter().enumerate() {
            if table.cell(g, a).is_empty() {
                return Err(ReportError::MissingCell {
                    game: game.clone(),
                    algorithm: algorithm.clone(),
                });
            }
        }
    }
    Ok(table)
}

/// Per-game best-mean tally; ties credit every tied algorithm.
pub fn times_best(table: &ScoreTable) -> BTreeMap<String, u32> {
    let means = table.means();
    let mut tally: BTreeMap<String, u32> =
        table.algorithms().iter().map(|a| (a.clone(), 0)).collect();
    for row in &means {
        let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (a, &mean) in row.iter().enumerate() {
            if mean == best {
                *tally.get_mut(&table.algorithms()[a]).expect("initialized") += 1;
            }
        }
    }
    tally
}

struct Emitter<'a> {
    report_dir: PathBuf,
    sources: String,
    files: Vec<PathBuf>,
    table: &'a ScoreTable,
}

impl Emitter<'_> {
    fn emit(
        &mut self,
        name: &str,
        extra_comments: &[String],
        header: &[&str],
        rows: &[Vec<String>],
    ) -> Result<(), ReportError> {
        let path = self.report_dir.join(name);
        let mut comments = vec![self.sources.clone()];
        comments.extend_from_slice(extra_comments);
        formats::write_tsv(&path, &comments, header, rows)?;
        self.files.push(path);
        Ok(())
    }

    /// One row per game: game name then one value per algorithm.
    fn emit_matrix(&mut self, name: &str, cells: &[Vec<f64>]) -> Result<(), ReportError> {
        let mut header = vec!["game"];
        header.extend(self.table.algorithms().iter().map(String::as_str));
        let rows: Vec<Vec<String>> = self
            .table
            .games()
            .iter()
            .zip(cells)
            .map(|(game, row)| {
                let mut out = vec![game.clone()];
                out.extend(row.iter().map(|v| format!("{v}")));
                out
            })
            .collect();
        self.emit(name, &[], &header, &rows)
    }

    fn emit_text(&mut self, name: &str, text: &str) -> Result<(), ReportError> {
        let path = self.report_dir.join(name);
        formats::write_text(&path, text)?;
        self.files.push(path);
        Ok(())
    }
}

/// Generates the full report bundle under `out_dir/report`.
///
/// `baselines` may be empty, in which case the random- and
/// baseline-normalized tables are skipped (with a warning); the
/// inter-algorithm pipeline, aggregates, distributions, paired tests,
/// and Times-Best always run.
pub fn make_report(
    records: &[RunRecord],
    baselines: &[BaselineRecord],
    options: &ReportOptions,
    out_dir: &Path,
) -> Result<ReportBundle, ReportError> {
    let table = assemble_table(records, options)?;
    let mut warnings: Vec<String> = Vec::new();

    let mut sources: Vec<String> = records.iter().map(|r| r.config_hash.clone()).collect();
    sources.sort();
    sources.dedup();

    let mut emitter = Emitter {
        report_dir: out_dir.join("report"),
        sources: format!("source-hashes: {}", sources.join(",")),
        files: Vec::new(),
        table: &table,
    };

    // Raw samples and their means.
    {
        let mut header = vec!["game"];
        header.extend(table.algorithms().iter().map(String::as_str));
        let rows: Vec<Vec<String>> = table
            .games()
            .iter()
            .enumerate()
            .map(|(g, game)| {
                let mut row = vec![game.clone()];
                for a in 0..table.algorithms().len() {
                    row.push(formats::join_samples(table.cell(g, a)));
                }
                row
            })
            .collect();
        emitter.emit("scores.tsv", &[], &header, &rows)?;
    }
    let means = table.means();
    emitter.emit_matrix("means.tsv", &means)?;

    // Inter-algorithm normalization (needs at least two contenders).
    let mut aggregates: Vec<AggregateRow> = Vec::new();
    let mut inter_per_algorithm: Vec<Vec<f64>> = Vec::new();
    if table.algorithms().len() >= 2 {
        let mut inter_rows: Vec<Vec<f64>> = Vec::new();
        for (g, row) in means.iter().enumerate() {
            let (z, degenerate) = inter_algorithm_scores(row);
            if degenerate {
                warnings.push(format!(
                    "{}: all algorithms tied; inter-algorithm scores forced to 0.5",
                    table.games()[g]
                ));
            }
            inter_rows.push(z);
        }
        emitter.emit_matrix("normalized-inter.tsv", &inter_rows)?;
        inter_per_algorithm = transpose(&inter_rows);
        for (a, scores) in inter_per_algorithm.iter().enumerate() {
            aggregates.push(AggregateRow {
                algorithm: table.algorithms()[a].clone(),
                scheme: "inter-algorithm".to_string(),
                average: aggregate_average(scores),
                median: aggregate_median(scores),
            });
        }
    } else {
        warnings.push("single algorithm: inter-algorithm comparisons skipped".to_string());
    }

    // Baseline-anchored normalizations.
    if baselines.is_empty() {
        warnings.push(
            "no baseline records given: random/baseline normalizations skipped".to_string(),
        );
    } else {
        let by_game: BTreeMap<&str, &BaselineRecord> =
            baselines.iter().map(|b| (b.game.as_str(), b)).collect();
        for game in table.games() {
            if !by_game.contains_key(game.as_str()) {
                return Err(ReportError::MissingBaselines(game.clone()));
            }
        }
        // A degenerate anchor (say, a random agent that never scored)
        // leaves its scheme undefined for the whole table; skip that
        // table with a warning rather than fail the report.
        type RangeOf<'r> = &'r dyn Fn(&BaselineRecord) -> Result<ScoreRange, MetricsError>;
        let schemes: [(&str, &str, RangeOf); 2] = [
            ("random", "normalized-random.tsv", &|r| random_range(r.random_mean())),
            ("baseline", "normalized-baseline.tsv", &|r| baseline_range(&r.means())),
        ];
        for (scheme, file, range_of) in schemes {
            let mut rows: Vec<Vec<f64>> = Vec::new();
            let mut degenerate: Option<String> = None;
            for (g, game) in table.games().iter().enumerate() {
                let Ok(range) = range_of(by_game[game.as_str()]) else {
                    degenerate = Some(game.clone());
                    break;
                };
                rows.push(
                    means[g]
                        .iter()
                        .map(|&m| normalize(m, range).expect("non-degenerate by construction"))
                        .collect(),
                );
            }
            if let Some(game) = degenerate {
                warnings.push(format!(
                    "{scheme} anchor on {game} has zero width: \
                     {scheme}-normalized table skipped"
                ));
                continue;
            }
            emitter.emit_matrix(file, &rows)?;
            for (a, scores) in transpose(&rows).iter().enumerate() {
                aggregates.push(AggregateRow {
                    algorithm: table.algorithms()[a].clone(),
                    scheme: scheme.to_string(),
                    average: aggregate_average(scores),
                    median: aggregate_median(scores),
                });
            }
        }
    }

    aggregates.sort_by(|x, y| (&x.algorithm, &x.scheme).cmp(&(&y.algorithm, &y.scheme)));
    {
        let rows: Vec<Vec<String>> = aggregates
            .iter()
            .map(|r| {
                vec![
                    r.algorithm.clone(),
                    r.scheme.clone(),
                    format!("{}", r.average),
                    format!("{}", r.median),
                ]
            })
            .collect();
        emitter.emit(
            "aggregates.tsv",
            &[],
            &["algorithm", "scheme", "average", "median"],
            &rows,
        )?;
    }

    // Times-Best over raw means.
    let tally = times_best(&table);
    {
        let rows: Vec<Vec<String>> =
            tally.iter().map(|(a, n)| vec![a.clone(), n.to_string()]).collect();
        emitter.emit(
            "times-best.tsv",
            &["ties credit every tied algorithm".to_string()],
            &["algorithm", "times_best"],
            &rows,
        )?;
    }

    // Score-distribution breakpoints over inter-algorithm scores.
    if !inter_per_algorithm.is_empty() {
        let mut rows: Vec<Vec<String>> = Vec::new();
        let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
        for (a, scores) in inter_per_algorithm.iter().enumerate() {
            let distribution = ScoreDistribution::new(scores);
            let mut breakpoints = distribution.breakpoints();
            // Anchor every curve at the origin so the emitted rows show
            // f(0) (= 1 on inter-algorithm inputs) explicitly.
            if breakpoints.first().map_or(true, |&(x, _)| x != 0.0) {
                breakpoints.insert(0, (0.0, distribution.eval(0.0)));
            }
            for &(x, fx) in &breakpoints {
                rows.push(vec![
                    table.algorithms()[a].clone(),
                    format!("{x}"),
                    format!("{fx}"),
                ]);
            }
            series.push((table.algorithms()[a].clone(), breakpoints));
        }
        emitter.emit(
            "distribution.tsv",
            &["f(x) = fraction of games with normalized score at least x".to_string()],
            &["algorithm", "x", "f"],
            &rows,
        )?;
        emitter.emit_text(
            "distribution.svg",
            &formats::svg_step_chart("Score distribution (inter-algorithm)", &series),
        )?;
        let bars: Vec<(String, f64)> = aggregates
            .iter()
            .filter(|r| r.scheme == "inter-algorithm")
            .map(|r| (r.algorithm.clone(), r.average))
            .collect();
        emitter.emit_text(
            "aggregates.svg",
            &formats::svg_bar_chart("Average inter-algorithm score", &bars),
        )?;
    }

    // Paired Welch comparisons.
    let mut paired_wins = None;
    if table.algorithms().len() >= 2 {
        match paired_matrix(&table, REPORT_ALPHA) {
            Ok(matrix) => {
                let n = table.algorithms().len();
                let wins: Vec<Vec<u32>> =
                    (0..n).map(|i| (0..n).map(|j| matrix.wins(i, j)).collect()).collect();
                let mut header = vec!["algorithm"];
                header.extend(table.algorithms().iter().map(String::as_str));
                let rows: Vec<Vec<String>> = wins
                    .iter()
                    .enumerate()
                    .map(|(i, row)| {
                        let mut out = vec![table.algorithms()[i].clone()];
                        out.extend(row.iter().map(u32::to_string));
                        out
                    })
                    .collect();
                emitter.emit(
                    "paired.tsv",
                    &[format!(
                        "wins[row][column] = games where row beat column (Welch, alpha = {REPORT_ALPHA})"
                    )],
                    &header,
                    &rows,
                )?;
                paired_wins = Some(wins);
            }
            Err(MetricsError::InsufficientSamples) => {
                warnings.push(
                    "paired comparisons skipped: a cell has fewer than two samples".to_string(),
                );
            }
            Err(e) => return Err(metrics_err("paired matrix")(e)),
        }
    }

    let summary = ReportSummary {
        sources,
        games: table.games().to_vec(),
        algorithms: table.algorithms().to_vec(),
        aggregates,
        times_best: tally,
        paired_wins,
        warnings,
    };
    let summary_path = emitter.report_dir.join("summary.json");
    formats::write_json(&summary_path, &summary)?;
    emitter.files.push(summary_path);

    Ok(ReportBundle { files: emitter.files, summary })
}

fn transpose(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    if rows.is_empty() {
        return Vec::new();
    }
    (0..rows[0].len())
        .map(|a| rows.iter().map(|row| row[a]).collect())
        .collect()
}
