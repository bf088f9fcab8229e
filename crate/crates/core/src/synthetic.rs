//! Deterministic toy-language corpora.
//!
//! The language has a fixed lexicon of stems, each with a unique lowercase
//! gloss, and a fixed set of suffixes, each with a unique uppercase gram.
//! Suffixes occupy three ordered slots (number, case, tense), so a word is a
//! stem followed by at most one suffix per slot. Every entry carries all four
//! tiers and is consistent for both tracks.

use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::igt::IgtEntry;

const STEM_GLOSSES: [&str; 32] = [
    "dog", "cat", "house", "river", "stone", "tree", "fish", "bird", "child", "woman", "man", "fire", "water",
    "moon", "sun", "road", "see", "eat", "walk", "sleep", "give", "take", "hold", "sing", "big", "small", "red",
    "old", "new", "cold", "hand", "boat",
];

/// `(surface, gram)` per slot, in surface order.
const SUFFIX_SLOTS: [&[(&str, &str)]; 3] = [
    &[("ka", "PL"), ("nu", "DU")],
    &[("ri", "ACC"), ("so", "DAT"), ("mel", "LOC")],
    &[("ta", "PST"), ("bo", "FUT"), ("zi", "NEG")],
];

/// Seed of the lexicon; fixed so every corpus shares one language.
const LEXICON_SEED: u64 = 0x006c_6578_6963_6f6e;

const CONSONANTS: &[char] = &['p', 't', 'k', 'm', 'n', 's', 'l', 'r', 'w', 'h', 'd', 'g'];
const VOWELS: &[char] = &['a', 'e', 'i', 'o', 'u'];

pub const MIN_WORDS: usize = 2;
pub const MAX_WORDS: usize = 6;
pub const MAX_SUFFIXES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Stem plus 0 to 3 suffixes per word.
    Agglutinative,
    /// Bare stems only.
    Isolating,
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Agglutinative => "agglutinative",
            Profile::Isolating => "isolating",
        })
    }
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "agglutinative" => Ok(Profile::Agglutinative),
            "isolating" => Ok(Profile::Isolating),
            other => Err(format!("unknown profile '{other}'")),
        }
    }
}

struct Stem {
    surface: String,
    gloss: &'static str,
}

static STEMS: LazyLock<Vec<Stem>> = LazyLock::new(|| {
    let mut rng = ChaCha8Rng::seed_from_u64(LEXICON_SEED);
    let mut seen = std::collections::HashSet::new();
    let affixes: Vec<&str> = SUFFIX_SLOTS.iter().flat_map(|s| s.iter().map(|a| a.0)).collect();
    STEM_GLOSSES
        .iter()
        .map(|&gloss| loop {
            let syllables = rng.random_range(2..=3);
            let surface: String = (0..syllables)
                .flat_map(|_| {
                    [
                        CONSONANTS[rng.random_range(0..CONSONANTS.len())],
                        VOWELS[rng.random_range(0..VOWELS.len())],
                    ]
                })
                .collect();
            if !affixes.contains(&surface.as_str()) && seen.insert(surface.clone()) {
                break Stem { surface, gloss };
            }
        })
        .collect()
});

/// Every gram the generator can emit.
pub fn gram_inventory() -> Vec<&'static str> {
    SUFFIX_SLOTS.iter().flat_map(|s| s.iter().map(|a| a.1)).collect()
}

/// `(surface, gloss)` of every stem.
pub fn stem_lexicon() -> Vec<(String, String)> {
    STEMS.iter().map(|s| (s.surface.clone(), s.gloss.to_string())).collect()
}

fn generate_word(rng: &mut ChaCha8Rng, profile: Profile) -> (String, String) {
    let stem = &STEMS[rng.random_range(0..STEMS.len())];
    let mut morphs = vec![stem.surface.clone()];
    let mut glosses = vec![stem.gloss.to_string()];
    if profile == Profile::Agglutinative {
        let count = rng.random_range(0..=MAX_SUFFIXES);
        let mut slots: Vec<usize> = (0..SUFFIX_SLOTS.len()).collect();
        slots.shuffle(rng);
        let mut chosen = slots[..count].to_vec();
        chosen.sort_unstable();
        for slot in chosen {
            let options = SUFFIX_SLOTS[slot];
            let (surface, gram) = options[rng.random_range(0..options.len())];
            morphs.push(surface.to_string());
            glosses.push(gram.to_string());
        }
    }
    (morphs.join("-"), glosses.join("-"))
}

/// `size` entries drawn from the toy language; identical for identical
/// `(seed, size, profile)`.
pub fn generate(seed: u64, size: usize, profile: Profile) -> Vec<IgtEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..size)
        .map(|_| {
            let n = rng.random_range(MIN_WORDS..=MAX_WORDS);
            let words: Vec<(String, String)> = (0..n).map(|_| generate_word(&mut rng, profile)).collect();
            let segmentation = words.iter().map(|w| w.0.as_str()).collect::<Vec<_>>().join(" ");
            let gloss = words.iter().map(|w| w.1.as_str()).collect::<Vec<_>>().join(" ");
            let transcription = segmentation.replace('-', "");
            let translation: Vec<&str> = gloss.split_whitespace().map(|g| g.split('-').next().unwrap()).collect();
            let mut translation = translation.join(" ");
            if let Some(first) = translation.get(..1) {
                translation = format!("{}{}.", first.to_uppercase(), &translation[1..]);
            }
            IgtEntry::new(transcription)
                .with_segmentation(segmentation)
                .with_gloss(gloss)
                .with_translation(translation)
        })
        .collect()
}

/// Deterministic `(train, test)` split with `test_fraction` of the entries
/// (rounded, at least one when there are two or more) held out.
pub fn split(entries: &[IgtEntry], test_fraction: f64, seed: u64) -> (Vec<IgtEntry>, Vec<IgtEntry>) {
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut n_test = (entries.len() as f64 * test_fraction.clamp(0.0, 1.0)).round() as usize;
    if entries.len() >= 2 {
        n_test = n_test.clamp(1, entries.len() - 1);
    }
    let mut test_idx = order[..n_test].to_vec();
    let mut train_idx = order[n_test..].to_vec();
    test_idx.sort_unstable();
    train_idx.sort_unstable();
    (
        train_idx.iter().map(|&i| entries[i].clone()).collect(),
        test_idx.iter().map(|&i| entries[i].clone()).collect(),
    )
}
