//! End-to-end checks of the preprocessing → run → report pipeline
//! against independent ground truth: the renderer's own backdrop, the
//! games' sprite geometry, the exact Markov-chain value of uniform
//! play, and the emitted report files themselves.

use std::path::Path;
use std::process::Command;

use coinop::config::{AgentKind, ExperimentConfig, FeatureKind};
use coinop::formats;
use coinop::harness::{
    build_background, build_classes, build_preprocessing, read_run_records, run_experiment,
    write_run_files, HarnessOptions,
};
use coinop::oracle::uniform_policy_values;
use coinop::report::{make_report, ReportError, ReportOptions};
use coinop_core::env::{chain_world, Action, Crossing};

fn opts(dir: &Path) -> HarnessOptions {
    HarnessOptions::at(dir)
}

/// The modal color of every pixel over sampled random play equals the
/// renderer's static backdrop — sprites move, the road does not.
#[test]
fn background_build_recovers_the_true_crossing_backdrop() {
    let model = build_background("crossing", 11, 2_000).unwrap();
    let truth = Crossing::background();
    assert_eq!(model.colors(), truth.data());
}

/// Same seed, same sample counts → byte-identical model files.
#[test]
fn preprocessing_builds_are_reproducible_files() {
    let once = tempfile::tempdir().unwrap();
    let again = tempfile::tempdir().unwrap();
    let a = build_preprocessing("crossing", FeatureKind::Disco, 7, (800, 800), once.path())
        .unwrap();
    let b = build_preprocessing("crossing", FeatureKind::Disco, 7, (800, 800), again.path())
        .unwrap();
    assert!(!a.is_empty());
    assert_eq!(a.len(), b.len());
    for (file_a, file_b) in a.iter().zip(&b) {
        assert_eq!(file_a.file_name(), file_b.file_name());
        assert_eq!(
            std::fs::read(file_a).unwrap(),
            std::fs::read(file_b).unwrap(),
            "model files differ: {}",
            file_a.display()
        );
    }
}

/// Class discovery on crossing stays within the class budget and finds
/// both sprites as solid rectangles of their true dimensions.
#[test]
fn class_discovery_finds_the_crossing_sprites() {
    let background = build_background("crossing", 13, 1_500).unwrap();
    let model = build_classes("crossing", 13, 3_000, &background).unwrap();
    assert!(model.n_classes() >= 2 && model.n_classes() <= 10);
    // Car 8x9, avatar 6x10; both drawn as filled rectangles, so the
    // prototype covers w·h pixels.
    for (w, h) in [(8u16, 9u16), (6, 10)] {
        assert!(
            model
                .classes()
                .iter()
                .any(|c| c.w == w && c.h == h && c.pixels == u32::from(w) * u32::from(h)),
            "no solid {w}x{h} class among {:?}",
            model
                .classes()
                .iter()
                .map(|c| (c.w, c.h, c.pixels))
                .collect::<Vec<_>>()
        );
    }
}

/// One hundred random-policy episodes on the chain average within
/// three standard errors of the exact per-step uniform value.
#[test]
fn random_play_on_the_chain_matches_the_markov_expectation() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = ExperimentConfig::new("chain", AgentKind::Random);
    config.trials = Some(100);
    config.seed = 17;
    // One state transition per decision, so the emulated process is
    // exactly the Markov chain the oracle evaluates.
    config.overrides.frames_per_action = Some(1);
    let record = run_experiment(&config, &opts(dir.path())).unwrap();
    let scores = record.summary_scores();
    assert_eq!(scores.len(), 100);

    // Exact expectation: all 18 joystick actions alias the three
    // horizontal moves evenly, so uniform play over the full set is
    // uniform play over the moves.
    let mdp = chain_world();
    let actions: Vec<Action> = Action::all().collect();
    let values = uniform_policy_values(&mdp, &actions, 1.0);
    let expected = values[mdp.start() as usize];

    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    let var = scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>()
        / (scores.len() - 1) as f64;
    let standard_error = (var / scores.len() as f64).sqrt();
    assert!(
        (mean - expected).abs() <= 3.0 * standard_error,
        "mean {mean:.4} vs exact {expected:.4} (SE {standard_error:.4})"
    );
}

/// The emitted report counts Times-Best by per-game argmax and anchors
/// the inter-algorithm score distribution at f(0) = 1.
#[test]
fn reports_count_times_best_and_anchor_the_distribution() {
    let dir = tempfile::tempdir().unwrap();
    for agent in [AgentKind::Random, AgentKind::Const] {
        let mut config = ExperimentConfig::new("chain", agent);
        config.trials = Some(3);
        config.seed = 21;
        config.overrides.max_frames = Some(900);
        write_run_files(&run_experiment(&config, &opts(dir.path())).unwrap(), dir.path())
            .unwrap();
    }
    let records = read_run_records(dir.path()).unwrap();
    let bundle = make_report(&records, &[], &ReportOptions::default(), dir.path()).unwrap();

    // Holding still runs into the step-cost clock; random play exits.
    // times-best.tsv must credit the random row with the one game.
    let times_best = bundle
        .files
        .iter()
        .find(|p| p.ends_with("times-best.tsv"))
        .expect("report emits times-best.tsv");
    let table = formats::read_tsv(times_best).unwrap();
    let counts: Vec<(String, u32)> = table
        .rows
        .iter()
        .map(|r| (r[0].clone(), r[1].parse().unwrap()))
        .collect();
    assert_eq!(counts.iter().map(|(_, n)| n).sum::<u32>(), 1);
    assert_eq!(counts.iter().find(|(name, _)| name == "random").unwrap().1, 1);

    // Rows are (algorithm, x, f); every algorithm's curve starts at
    // f(0) = 1.
    let distribution = bundle
        .files
        .iter()
        .find(|p| p.ends_with("distribution.tsv"))
        .expect("report emits distribution.tsv");
    let table = formats::read_tsv(distribution).unwrap();
    let at_zero: Vec<&Vec<String>> = table
        .rows
        .iter()
        .filter(|r| r[1].parse::<f64>().unwrap() == 0.0)
        .collect();
    assert_eq!(at_zero.len(), 2, "one f(0) row per algorithm");
    for row in at_zero {
        assert_eq!(row[2].parse::<f64>().unwrap(), 1.0, "f(0) = 1 for {}", row[0]);
    }
}

/// Training-split and testing-split records only aggregate together
/// under the explicit flag.
#[test]
fn mixed_split_records_refuse_to_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    for game in ["chain", "dodger"] {
        let mut config = ExperimentConfig::new(game, AgentKind::Random);
        config.trials = Some(2);
        config.seed = 23;
        config.overrides.max_frames = Some(600);
        write_run_files(&run_experiment(&config, &opts(dir.path())).unwrap(), dir.path())
            .unwrap();
    }
    let records = read_run_records(dir.path()).unwrap();
    match make_report(&records, &[], &ReportOptions::default(), dir.path()) {
        Err(ReportError::MixedSplits) => {}
        other => panic!("expected the mixed-split refusal, got {other:?}"),
    }
    let allow = ReportOptions { allow_mixed_split: true };
    make_report(&records, &[], &allow, dir.path()).unwrap();
}

/// The installed binary drives the same pipeline end to end.
#[test]
fn cli_round_trip_produces_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let bin = env!("CARGO_BIN_EXE_coinop");

    let preprocess = Command::new(bin)
        .args(["preprocess", "--game", "crossing", "--features", "basic"])
        .args(["--seed", "5", "--background-samples", "400", "--out-dir", out])
        .output()
        .unwrap();
    assert!(preprocess.status.success(), "{}", String::from_utf8_lossy(&preprocess.stderr));
    assert!(dir.path().join("models").read_dir().unwrap().next().is_some());

    for agent in ["random", "const"] {
        let run = Command::new(bin)
            .args(["run", "--game", "chain", "--agent", agent])
            .args(["--trials", "2", "--seed", "5", "--out-dir", out])
            .output()
            .unwrap();
        assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    }

    let report = Command::new(bin)
        .args(["report", "--out-dir", out])
        .output()
        .unwrap();
    assert!(report.status.success(), "{}", String::from_utf8_lossy(&report.stderr));
    for file in ["scores.tsv", "means.tsv", "times-best.tsv", "summary.json"] {
        assert!(
            dir.path().join("report").join(file).exists(),
            "report did not emit {file}"
        );
    }
}
