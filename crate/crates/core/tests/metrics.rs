mod common;

use common::oracle::{inventory, oracle_evaluate, random_corpus, OracleReport};
use glosser::eval::{
    bleu, evaluate, evaluate_lines, morpheme_accuracy, stem_gram_prf, word_accuracy, BleuSmoothing, EvalOptions,
    GramInventory, MetricsReport,
};
use glosser::igt::IgtEntry;

const TOL: f64 = 1e-12;

fn assert_matches(report: &MetricsReport, oracle: &OracleReport, ctx: &str) {
    let pairs = [
        ("morpheme_acc_overall", report.morpheme_acc_overall, oracle.morpheme_acc_overall),
        ("morpheme_acc_avg", report.morpheme_acc_avg, oracle.morpheme_acc_avg),
        ("word_acc_overall", report.word_acc_overall, oracle.word_acc_overall),
        ("word_acc_avg", report.word_acc_avg, oracle.word_acc_avg),
        ("bleu", report.bleu, oracle.bleu),
        ("stem_p", report.stems.precision, oracle.stems[0]),
        ("stem_r", report.stems.recall, oracle.stems[1]),
        ("stem_f1", report.stems.f1, oracle.stems[2]),
        ("gram_p", report.grams.precision, oracle.grams[0]),
        ("gram_r", report.grams.recall, oracle.grams[1]),
        ("gram_f1", report.grams.f1, oracle.grams[2]),
    ];
    for (name, got, want) in pairs {
        assert!((got - want).abs() <= TOL, "{ctx}: {name} = {got}, oracle {want}");
    }
}

#[test]
fn random_corpora_match_oracle() {
    for seed in 0..150 {
        let (pred, gold) = random_corpus(seed);
        let report = evaluate_lines(&pred, &gold, &EvalOptions::new()).unwrap();
        assert_matches(&report, &oracle_evaluate(&pred, &gold, None, false), &format!("seed {seed}"));
    }
}

#[test]
fn random_corpora_match_oracle_with_inventory_and_smoothing() {
    let inv = inventory();
    for seed in 1000..1100 {
        let (pred, gold) = random_corpus(seed);
        let opts = EvalOptions {
            inventory: Some(inv.iter().cloned().collect()),
            bleu_smoothing: BleuSmoothing::AddOne,
            ..EvalOptions::new()
        };
        let report = evaluate_lines(&pred, &gold, &opts).unwrap();
        assert_matches(&report, &oracle_evaluate(&pred, &gold, Some(&inv), true), &format!("seed {seed}"));
    }
}

#[test]
fn entry_path_matches_line_path() {
    let (pred, gold) = random_corpus(7);
    let to_entries = |lines: &[String]| -> Vec<IgtEntry> {
        lines.iter().map(|l| IgtEntry::new("x").with_gloss(l.clone())).collect()
    };
    let a = evaluate(&to_entries(&pred), &to_entries(&gold), &EvalOptions::new()).unwrap();
    let b = evaluate_lines(&pred, &gold, &EvalOptions::new()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn two_sentence_fixture() {
    let gold = ["nino-PL run-3SG", "nino-PL run-3SG"];
    let pred = ["nino-SG run-3SG", "nino-SG run-3SG"];
    assert_eq!(morpheme_accuracy(&pred, &gold).unwrap().overall, 0.75);
    assert_eq!(word_accuracy(&pred, &gold).unwrap().overall, 0.5);
    let prf = stem_gram_prf(&pred, &gold, None).unwrap();
    assert_eq!(prf.stems.f1, 1.0);
    assert_eq!(prf.grams.f1, 0.5);
}

#[test]
fn bleu_fixtures() {
    assert_eq!(bleu(&["A B C D"], &["A B C E"], 4, BleuSmoothing::None).unwrap(), 0.0);
    let short = bleu(&["A B C"], &["A B C D"], 4, BleuSmoothing::None).unwrap();
    assert!((short - 0.7165).abs() <= 1e-4, "{short}");
}

#[test]
fn inventory_parsing_matches_collect() {
    let parsed = GramInventory::parse("PL\n3SG\n# comment\n\n");
    let collected: GramInventory = ["PL", "3SG"].into_iter().collect();
    assert_eq!(parsed, collected);
}
