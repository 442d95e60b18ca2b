//! Score normalization, aggregation, and significance testing.
//!
//! Raw game scores live on wildly different scales, so cross-game
//! statements go through a normalization step first:
//!
//! * [`random_range`] — scale by a random agent's average score,
//!   `[0, |avg|]`;
//! * [`baseline_range`] — scale into the min/max envelope of a set of
//!   reference scores;
//! * [`inter_algorithm_scores`] — scale each game's scores into [0, 1]
//!   by the contenders' own min/max.
//!
//! Normalized scores aggregate by mean, by median, and by the score
//! distribution `f(x) = fraction of games scoring at least x`. Pairwise
//! algorithm comparisons use a two-tailed Welch t-test per game and
//! tally significant wins.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Metric computation failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricsError {
    /// A normalization range with zero width.
    DegenerateRange,
    /// Too few samples for the requested statistic.
    InsufficientSamples,
    /// An empty score list where at least one value is required.
    Empty,
    /// A non-finite score.
    NonFinite,
}

impl fmt::Display for MetricsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricsError::DegenerateRange => write!(f, "normalization range has zero width"),
            MetricsError::InsufficientSamples => write!(f, "not enough samples"),
            MetricsError::Empty => write!(f, "empty score list"),
            MetricsError::NonFinite => write!(f, "non-finite score"),
        }
    }
}

impl core::error::Error for MetricsError {}

/// A closed score range used for normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreRange {
    pub r_min: f64,
    pub r_max: f64,
}

impl ScoreRange {
    pub fn new(r_min: f64, r_max: f64) -> ScoreRange {
        assert!(r_max >= r_min);
        ScoreRange { r_min, r_max }
    }
}

/// Normalizes `s` into `range`: `(s − r_min) / (r_max − r_min)`.
/// The result may fall outside [0, 1] when `s` does.
pub fn normalize(s: f64, range: ScoreRange) -> Result<f64, MetricsError> {
    if range.r_max <= range.r_min {
        return Err(MetricsError::DegenerateRange);
    }
    Ok((s - range.r_min) / (range.r_max - range.r_min))
}

/// Range anchored at zero with a random agent's average score as the
/// upper end: `[0, |random_avg|]`. A zero average has no scale to
/// offer and errors.
pub fn random_range(random_avg: f64) -> Result<ScoreRange, MetricsError> {
    if random_avg == 0.0 || !random_avg.is_finite() {
        return Err(MetricsError::DegenerateRange);
    }
    Ok(ScoreRange::new(0.0, libm::fabs(random_avg)))
}

/// Min/max envelope of at least two reference scores.
pub fn baseline_range(references: &[f64]) -> Result<ScoreRange, MetricsError> {
    if references.len() < 2 {
        return Err(MetricsError::InsufficientSamples);
    }
    if references.iter().any(|r| !r.is_finite()) {
        return Err(MetricsError::NonFinite);
    }
    let min = references.iter().copied().fold(f64::INFINITY, f64::min);
    let max = references.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max <= min {
        return Err(MetricsError::DegenerateRange);
    }
    Ok(ScoreRange::new(min, max))
}

/// Normalizes contenders' scores on one game by their own min/max, so
/// the best scores 1 and the worst 0. When every score ties there is
/// no ordering information; all scores map to 0.5 and the returned
/// flag is set so callers can warn.
pub fn inter_algorithm_scores(raw: &[f64]) -> (Vec<f64>, bool) {
    assert!(raw.len() >= 2, "inter-algorithm scores need at least two contenders");
    let min = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max <= min {
        return (alloc::vec![0.5; raw.len()], true);
    }
    let range = ScoreRange::new(min, max);
    (raw.iter().map(|&s| normalize(s, range).expect("non-degenerate")).collect(), false)
}

/// Arithmetic mean.
pub fn aggregate_average(scores: &[f64]) -> f64 {
    assert!(!scores.is_empty());
    scores.iter().sum::<f64>() / scores.len() as f64
}

/// Median with even-count averaging of the two middle elements.
pub fn aggregate_median(scores: &[f64]) -> f64 {
    assert!(!scores.is_empty());
    let mut sorted = scores.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// The step curve `f(x) = #{scores ≥ x} / n`, kept as its exact
/// breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreDistribution {
    /// Sorted distinct scores.
    sorted: Vec<f64>,
    n: usize,
}

impl ScoreDistribution {
    pub fn new(scores: &[f64]) -> ScoreDistribution {
        assert!(!scores.is_empty());
        assert!(scores.iter().all(|s| s.is_finite()));
        let mut sorted = scores.to_vec();
        sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite scores"));
        ScoreDistribution { n: sorted.len(), sorted }
    }

    /// Fraction of scores at least `x`.
    pub fn eval(&self, x: f64) -> f64 {
        // First index with score >= x.
        let idx = self.sorted.partition_point(|&s| s < x);
        (self.n - idx) as f64 / self.n as f64
    }

    /// `(x, f(x))` at every distinct score, ascending in `x`.
    pub fn breakpoints(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for &s in &self.sorted {
            if out.last().map_or(true, |&(x, _)| x != s) {
                out.push((s, self.eval(s)));
            }
        }
        out
    }

    /// Exact integral of the step curve over [0, 1]; for scores inside
    /// [0, 1] this equals their mean.
    pub fn integral_unit_interval(&self) -> f64 {
        // f is constant between consecutive distinct scores: on
        // (v_i, v_{i+1}] it equals f(v_{i+1}).
        let mut total = 0.0;
        let mut x = 0.0f64;
        for &(v, f_v) in &self.breakpoints() {
            if v <= 0.0 {
                continue;
            }
            let upper = v.min(1.0);
            if upper > x {
                total += (upper - x) * f_v;
                x = upper;
            }
            if x >= 1.0 {
                break;
            }
        }
        // Above the largest score the curve is 0; nothing to add.
        total
    }
}

// ---------------------------------------------------------------------------
// Special functions for the t-test (no_std: libm only).
// ---------------------------------------------------------------------------

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    debug_assert!(x > 0.0);
    if x < 0.5 {
        // Reflection: Γ(x)Γ(1−x) = π / sin(πx).
        let pi = core::f64::consts::PI;
        return libm::log(pi / libm::sin(pi * x)) - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = 0.99999999999980993;
    for (i, &c) in COEFFS.iter().enumerate() {
        acc += c / (x + (i + 1) as f64);
    }
    let t = x + 7.5;
    0.5 * libm::log(2.0 * core::f64::consts::PI) + (x + 0.5) * libm::log(t) - t
        + libm::log(acc)
}

/// Regularized incomplete beta `I_x(a, b)` by Lentz's continued
/// fraction, with the symmetry switch for fast convergence.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && b > 0.0 && (0.0..=1.0).contains(&x));
    if x == 0.0 {
        return 0.0;
    }
    if x == 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b)
        + a * libm::log(x)
        + b * libm::log(1.0 - x);
    let front = libm::exp(ln_front);
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if libm::fabs(d) < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=300 {
        let m = m as f64;
        let m2 = 2.0 * m;
        // Even step.
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if libm::fabs(d) < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if libm::fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        // Odd step.
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if libm::fabs(d) < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if libm::fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if libm::fabs(del - 1.0) < EPS {
            break;
        }
    }
    h
}

/// Two-tailed tail probability `P(|T| ≥ t)` of Student's t with `df`
/// degrees of freedom: `I_{df/(df+t²)}(df/2, 1/2)`.
pub fn student_t_two_tailed(t: f64, df: f64) -> f64 {
    debug_assert!(df > 0.0);
    if t == 0.0 {
        return 1.0;
    }
    let x = df / (df + t * t);
    regularized_incomplete_beta(df / 2.0, 0.5, x)
}

// ---------------------------------------------------------------------------
// Welch's t-test.
// ---------------------------------------------------------------------------

/// Direction of a significant difference, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WelchOutcome {
    ABetter,
    BBetter,
    NotSignificant,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchResult {
    /// Welch statistic; positive when A's mean is higher.
    pub t: f64,
    /// Welch–Satterthwaite degrees of freedom.
    pub df: f64,
    /// Two-tailed p-value.
    pub p: f64,
    pub outcome: WelchOutcome,
    /// Set when both variances were zero and the result came from
    /// comparing means directly.
    pub degenerate: bool,
}

fn mean_var(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Two-tailed Welch t-test at significance level `alpha` (0.01 for the
/// standard 99% confidence comparisons).
pub fn welch_test(a: &[f64], b: &[f64], alpha: f64) -> Result<WelchResult, MetricsError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(MetricsError::InsufficientSamples);
    }
    if a.iter().chain(b).any(|s| !s.is_finite()) {
        return Err(MetricsError::NonFinite);
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    if va == 0.0 && vb == 0.0 {
        // No spread at all: fall back to comparing the means.
        let outcome = if ma == mb {
            WelchOutcome::NotSignificant
        } else if ma > mb {
            WelchOutcome::ABetter
        } else {
            WelchOutcome::BBetter
        };
        return Ok(WelchResult {
            t: 0.0,
            df: (a.len() + b.len() - 2) as f64,
            p: if ma == mb { 1.0 } else { 0.0 },
            outcome,
            degenerate: true,
        });
    }
    let sa = va / a.len() as f64;
    let sb = vb / b.len() as f64;
    let t = (ma - mb) / libm::sqrt(sa + sb);
    let df = (sa + sb) * (sa + sb)
        / (sa * sa / (a.len() as f64 - 1.0) + sb * sb / (b.len() as f64 - 1.0));
    let p = student_t_two_tailed(t, df);
    let outcome = if p < alpha {
        if t > 0.0 {
            WelchOutcome::ABetter
        } else {
            WelchOutcome::BBetter
        }
    } else {
        WelchOutcome::NotSignificant
    };
    Ok(WelchResult { t, df, p, outcome, degenerate: false })
}

// ---------------------------------------------------------------------------
// Score tables and pairwise comparison matrices.
// ---------------------------------------------------------------------------

/// Per-(game, algorithm) score samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    games: Vec<String>,
    algorithms: Vec<String>,
    /// `samples[game][algorithm]`.
    samples: Vec<Vec<Vec<f64>>>,
}

impl ScoreTable {
    pub fn new(games: Vec<String>, algorithms: Vec<String>) -> ScoreTable {
        let samples = alloc::vec![alloc::vec![Vec::new(); algorithms.len()]; games.len()];
        ScoreTable { games, algorithms, samples }
    }

    pub fn games(&self) -> &[String] {
        &self.games
    }

    pub fn algorithms(&self) -> &[String] {
        &self.algorithms
    }

    pub fn cell(&self, game: usize, algorithm: usize) -> &[f64] {
        &self.samples[game][algorithm]
    }

    pub fn cell_mut(&mut self, game: usize, algorithm: usize) -> &mut Vec<f64> {
        &mut self.samples[game][algorithm]
    }

    pub fn game_index(&self, name: &str) -> Option<usize> {
        self.games.iter().position(|g| g == name)
    }

    pub fn algorithm_index(&self, name: &str) -> Option<usize> {
        self.algorithms.iter().position(|a| a == name)
    }

    /// Every cell non-empty and finite.
    pub fn validate(&self) -> Result<(), MetricsError> {
        for row in &self.samples {
            for cell in row {
                if cell.is_empty() {
                    return Err(MetricsError::Empty);
                }
                if cell.iter().any(|s| !s.is_finite()) {
                    return Err(MetricsError::NonFinite);
                }
            }
        }
        Ok(())
    }

    /// Cell means, `[game][algorithm]`.
    pub fn means(&self) -> Vec<Vec<f64>> {
        self.samples
            .iter()
            .map(|row| row.iter().map(|cell| aggregate_average(cell)).collect())
            .collect()
    }
}

/// Significant-win counts per ordered algorithm pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedMatrix {
    algorithms: Vec<String>,
    /// `wins[i][j]` = games where algorithm `i` beat `j` significantly.
    wins: Vec<Vec<u32>>,
}

impl PairedMatrix {
    pub fn algorithms(&self) -> &[String] {
        &self.algorithms
    }

    pub fn wins(&self, i: usize, j: usize) -> u32 {
        self.wins[i][j]
    }
}

/// Runs the Welch test per game for every algorithm pair and tallies
/// significant wins. `wins(i, j)` and `wins(j, i)` sum to at most the
/// number of games; the diagonal stays zero.
pub fn paired_matrix(table: &ScoreTable, alpha: f64) -> Result<PairedMatrix, MetricsError> {
    table.validate()?;
    let n = table.algorithms().len();
    let mut wins = alloc::vec![alloc::vec![0u32; n]; n];
    for g in 0..table.games().len() {
        for i in 0..n {
            for j in (i + 1)..n {
                match welch_test(table.cell(g, i), table.cell(g, j), alpha)?.outcome {
                    WelchOutcome::ABetter => wins[i][j] += 1,
                    WelchOutcome::BBetter => wins[j][i] += 1,
                    WelchOutcome::NotSignificant => {}
                }
            }
        }
    }
    Ok(PairedMatrix { algorithms: table.algorithms().to_vec(), wins })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn normalize_is_the_exact_affine_map() {
        let range = ScoreRange::new(10.0, 20.0);
        assert_eq!(normalize(10.0, range).unwrap(), 0.0);
        assert_eq!(normalize(20.0, range).unwrap(), 1.0);
        assert_eq!(normalize(15.0, range).unwrap(), 0.5);
        assert_eq!(normalize(25.0, range).unwrap(), 1.5); // may exceed 1
        assert_eq!(
            normalize(1.0, ScoreRange::new(3.0, 3.0)),
            Err(MetricsError::DegenerateRange)
        );
    }

    #[test]
    fn random_reference_scales_scores_by_magnitude() {
        // A strong score against a small reference lands well past 1.
        let range = random_range(288.1).unwrap();
        assert_eq!(range, ScoreRange::new(0.0, 288.1));
        let z = normalize(862.3, range).unwrap();
        assert!((z - 2.993).abs() < 1e-3, "z = {z}");
        // Negative averages normalize by magnitude.
        assert_eq!(random_range(-15.6).unwrap(), ScoreRange::new(0.0, 15.6));
        assert_eq!(random_range(0.0), Err(MetricsError::DegenerateRange));
    }

    #[test]
    fn baseline_envelope_is_the_min_max_of_references() {
        let range = baseline_range(&[0.0, 650.0, 288.1, 12.5]).unwrap();
        assert_eq!(range, ScoreRange::new(0.0, 650.0));
        // A reference inside the envelope changes nothing.
        let range2 = baseline_range(&[0.0, 650.0, 288.1, 12.5, 300.0]).unwrap();
        assert_eq!(range, range2);
        assert_eq!(baseline_range(&[5.0]), Err(MetricsError::InsufficientSamples));
        assert_eq!(baseline_range(&[5.0, 5.0]), Err(MetricsError::DegenerateRange));
    }

    #[test]
    fn inter_algorithm_scores_pin_best_to_one_and_worst_to_zero() {
        let (z, degenerate) = inter_algorithm_scores(&[10.0, 20.0, 30.0]);
        assert_eq!(z, vec![0.0, 0.5, 1.0]);
        assert!(!degenerate);
        // Two contenders: a pure indicator of which is better.
        let (z, _) = inter_algorithm_scores(&[5.0, 9.0]);
        assert_eq!(z, vec![0.0, 1.0]);
        // One standout against a field of zeros takes the full score.
        let (z, _) = inter_algorithm_scores(&[0.0, 66.0, 0.0, 0.0, 0.0]);
        assert_eq!(z[1], 1.0);
        assert!(z.iter().enumerate().all(|(i, &v)| i == 1 || v == 0.0));
        // All tied: no ordering information, 0.5 with the flag set.
        let (z, degenerate) = inter_algorithm_scores(&[7.0, 7.0, 7.0]);
        assert_eq!(z, vec![0.5, 0.5, 0.5]);
        assert!(degenerate);
    }

    #[test]
    fn aggregates_follow_the_textbook_definitions() {
        assert_eq!(aggregate_average(&[0.0, 1.0]), 0.5);
        assert_eq!(aggregate_median(&[0.0, 1.0]), 0.5);
        // Median shrugs off the outlier the mean chases.
        let scores = [0.0, 0.0, 100.0];
        assert!((aggregate_average(&scores) - 33.333_333_333_333_336).abs() < 1e-12);
        assert_eq!(aggregate_median(&scores), 0.0);
        assert_eq!(aggregate_median(&[1.0, 2.0, 3.0, 4.0]), 2.5);
    }

    #[test]
    fn score_distribution_counts_scores_at_or_above_x() {
        let d = ScoreDistribution::new(&[0.2, 0.8]);
        assert_eq!(d.eval(0.0), 1.0);
        assert_eq!(d.eval(0.2), 1.0);
        assert_eq!(d.eval(0.5), 0.5);
        assert_eq!(d.eval(0.8), 0.5);
        assert_eq!(d.eval(0.9), 0.0);
        assert_eq!(d.breakpoints(), vec![(0.2, 1.0), (0.8, 0.5)]);
    }

    #[test]
    fn score_distribution_integral_recovers_the_mean() {
        let scores = [0.1, 0.25, 0.25, 0.6, 0.95, 1.0];
        let d = ScoreDistribution::new(&scores);
        let mean = aggregate_average(&scores);
        assert!((d.integral_unit_interval() - mean).abs() < 1e-9);
    }

    #[test]
    fn distribution_at_the_median_covers_at_least_half() {
        for scores in [vec![0.1, 0.5, 0.9], vec![0.3, 0.3, 0.7, 0.8], vec![0.42]] {
            let d = ScoreDistribution::new(&scores);
            assert!(d.eval(aggregate_median(&scores)) >= 0.5);
        }
    }

    #[test]
    fn ln_gamma_hits_known_values() {
        assert!((ln_gamma(1.0)).abs() < 1e-13);
        assert!((ln_gamma(2.0)).abs() < 1e-13);
        assert!((ln_gamma(5.0) - libm::log(24.0)).abs() < 1e-12);
        let half = ln_gamma(0.5);
        assert!((half - 0.5 * libm::log(core::f64::consts::PI)).abs() < 1e-12);
    }

    #[test]
    fn incomplete_beta_matches_closed_forms() {
        // I_x(1, 1) = x.
        for x in [0.0, 0.1, 0.5, 0.77, 1.0] {
            assert!((regularized_incomplete_beta(1.0, 1.0, x) - x).abs() < 1e-12);
        }
        // I_x(1/2, 1/2) = (2/π)·asin(√x).
        for x in [0.1, 0.3, 0.5, 0.9] {
            let expect = 2.0 / core::f64::consts::PI * libm::asin(libm::sqrt(x));
            assert!((regularized_incomplete_beta(0.5, 0.5, x) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn t_tail_matches_the_exact_low_df_formulas() {
        // One degree of freedom is a Cauchy: P(|T| ≥ 1) = 1/2.
        assert!((student_t_two_tailed(1.0, 1.0) - 0.5).abs() < 1e-12);
        // Two degrees of freedom: P(|T| ≥ t) = 1 − t/√(t²+2).
        for t in [0.5, 1.0, libm::sqrt(2.0), 3.0] {
            let exact = 1.0 - t / libm::sqrt(t * t + 2.0);
            assert!((student_t_two_tailed(t, 2.0) - exact).abs() < 1e-12);
        }
        // The classic 5%-at-df-10 critical value.
        assert!((student_t_two_tailed(2.2281, 10.0) - 0.05).abs() < 1e-4);
    }

    #[test]
    fn welch_separates_the_obvious_and_ignores_the_identical() {
        let a: Vec<f64> = (0..30).map(|i| 100.0 + (i % 3) as f64).collect();
        let b: Vec<f64> = (0..30).map(|i| 0.0 + (i % 3) as f64).collect();
        let r = welch_test(&a, &b, 0.01).unwrap();
        assert_eq!(r.outcome, WelchOutcome::ABetter);
        assert!(r.p < 1e-10);

        let r = welch_test(&a, &a, 0.01).unwrap();
        assert_eq!(r.outcome, WelchOutcome::NotSignificant);
        assert_eq!(r.t, 0.0);

        // Swapping sides mirrors the direction and the statistic.
        let fwd = welch_test(&a, &b, 0.01).unwrap();
        let rev = welch_test(&b, &a, 0.01).unwrap();
        assert_eq!(rev.outcome, WelchOutcome::BBetter);
        assert!((fwd.t + rev.t).abs() < 1e-12);
        assert!((fwd.p - rev.p).abs() < 1e-12);
    }

    #[test]
    fn welch_handles_degenerate_spreads_explicitly() {
        assert_eq!(
            welch_test(&[1.0], &[1.0, 2.0], 0.01),
            Err(MetricsError::InsufficientSamples)
        );
        let r = welch_test(&[3.0, 3.0], &[3.0, 3.0], 0.01).unwrap();
        assert_eq!(r.outcome, WelchOutcome::NotSignificant);
        assert!(r.degenerate);
        let r = welch_test(&[4.0, 4.0], &[3.0, 3.0], 0.01).unwrap();
        assert_eq!(r.outcome, WelchOutcome::ABetter);
        assert!(r.degenerate);
    }

    fn demo_table() -> ScoreTable {
        let mut t = ScoreTable::new(
            (0..5).map(|g| alloc::format!("game{g}")).collect(),
            vec!["alpha".to_string(), "beta".to_string()],
        );
        for g in 0..5 {
            // Alpha hugely dominates beta on every game.
            *t.cell_mut(g, 0) = (0..10).map(|i| 1_000.0 + (g + i) as f64).collect();
            *t.cell_mut(g, 1) = (0..10).map(|i| (g + i) as f64).collect();
        }
        t
    }

    #[test]
    fn paired_matrix_counts_dominant_sweeps() {
        let table = demo_table();
        let m = paired_matrix(&table, 0.01).unwrap();
        assert_eq!(m.wins(0, 1), 5);
        assert_eq!(m.wins(1, 0), 0);
        assert_eq!(m.wins(0, 0), 0);
    }

    #[test]
    fn paired_matrix_rejects_missing_cells() {
        let mut table = demo_table();
        table.cell_mut(2, 1).clear();
        assert_eq!(paired_matrix(&table, 0.01), Err(MetricsError::Empty));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(512))]

        /// Shifting and scaling scores and range together changes
        /// nothing: normalization is affine-invariant.
        #[test]
        fn normalize_is_affine_equivariant(
            s in -1e3f64..1e3,
            lo in -1e3f64..1e3,
            width in 1e-3f64..1e3,
            a in 1e-3f64..1e3,
            b in -1e3f64..1e3,
        ) {
            let range = ScoreRange::new(lo, lo + width);
            let mapped = ScoreRange::new(a * lo + b, a * (lo + width) + b);
            let z1 = normalize(s, range).unwrap();
            let z2 = normalize(a * s + b, mapped).unwrap();
            prop_assert!((z1 - z2).abs() < 1e-6 * (1.0 + z1.abs()));
        }

        /// Per-game monotone rescaling leaves inter-algorithm scores
        /// unchanged.
        #[test]
        fn inter_algorithm_scores_ignore_affine_rescaling(
            raw in proptest::collection::vec(-1e3f64..1e3, 2..8),
            a in 1e-2f64..1e2,
            b in -1e3f64..1e3,
        ) {
            let (z1, d1) = inter_algorithm_scores(&raw);
            let mapped: Vec<f64> = raw.iter().map(|&s| a * s + b).collect();
            let (z2, d2) = inter_algorithm_scores(&mapped);
            prop_assert_eq!(d1, d2);
            for (x, y) in z1.iter().zip(&z2) {
                prop_assert!((x - y).abs() < 1e-6);
            }
        }

        /// Mean and median sit inside the score envelope.
        #[test]
        fn aggregates_stay_inside_the_envelope(
            scores in proptest::collection::vec(-1e6f64..1e6, 1..40),
        ) {
            let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
            let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let avg = aggregate_average(&scores);
            let med = aggregate_median(&scores);
            prop_assert!(avg >= min - 1e-9 && avg <= max + 1e-9);
            prop_assert!(med >= min && med <= max);
        }

        /// The step curve never increases.
        #[test]
        fn score_distribution_is_non_increasing(
            scores in proptest::collection::vec(0.0f64..1.0, 1..30),
            probes in proptest::collection::vec(0.0f64..1.0, 2..20),
        ) {
            let d = ScoreDistribution::new(&scores);
            let mut probes = probes;
            probes.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
            for pair in probes.windows(2) {
                prop_assert!(d.eval(pair[0]) >= d.eval(pair[1]));
            }
        }

        /// I_x(a,b) + I_{1−x}(b,a) = 1.
        #[test]
        fn incomplete_beta_symmetry(
            a in 0.2f64..30.0,
            b in 0.2f64..30.0,
            x in 0.001f64..0.999,
        ) {
            let lhs = regularized_incomplete_beta(a, b, x)
                + regularized_incomplete_beta(b, a, 1.0 - x);
            prop_assert!((lhs - 1.0).abs() < 1e-9, "a={} b={} x={} sum={}", a, b, x, lhs);
        }

        /// Γ(x+1) = x·Γ(x).
        #[test]
        fn ln_gamma_recurrence(x in 0.1f64..50.0) {
            let lhs = ln_gamma(x + 1.0);
            let rhs = ln_gamma(x) + libm::log(x);
            prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()));
        }
    }
}
