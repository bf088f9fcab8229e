//! Tokenization, vocabularies, and the id encoding fed to the encoder.
//!
//! Words are found by splitting on Unicode whitespace and trimming leading
//! and trailing Unicode punctuation (word-internal apostrophes survive). In
//! the open track a word is further split before every `-`, and every
//! morpheme after the first keeps its dash, so `cat-s` becomes `cat`, `-s`
//! and a dash-initial token always continues the current word.

use std::collections::HashMap;
use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::igt::IgtEntry;
use crate::Track;

static PUNCT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\p{P}$").unwrap());

pub fn is_punctuation(c: char) -> bool {
    let mut buf = [0u8; 4];
    PUNCT.is_match(c.encode_utf8(&mut buf))
}

fn strip_punctuation(word: &str) -> &str {
    word.trim_matches(is_punctuation)
}

/// Splits `word` before every `-` that is not inside `{...}`.
///
/// With `keep_dash`, pieces after the first keep their leading dash.
/// Pieces with nothing but the dash are dropped.
pub(crate) fn split_dashes(word: &str, keep_dash: bool) -> Vec<String> {
    let mut pieces = Vec::new();
    let mut current = String::new();
    let mut depth = 0usize;
    for c in word.chars() {
        match c {
            '{' => depth += 1,
            '}' => depth = depth.saturating_sub(1),
            '-' if depth == 0 => {
                push_piece(&mut pieces, std::mem::take(&mut current));
                if keep_dash {
                    current.push('-');
                }
                continue;
            }
            _ => {}
        }
        current.push(c);
    }
    push_piece(&mut pieces, current);
    pieces
}

fn push_piece(pieces: &mut Vec<String>, piece: String) {
    if !piece.is_empty() && piece != "-" {
        pieces.push(piece);
    }
}

/// Source tokens grouped by word.
pub fn source_words(line: &str, track: Track) -> Vec<Vec<String>> {
    line.split_whitespace()
        .map(strip_punctuation)
        .filter(|w| !w.is_empty())
        .map(|w| match track {
            Track::Closed => vec![w.to_string()],
            Track::Open => split_dashes(w, true),
        })
        .filter(|g| !g.is_empty())
        .collect()
}

pub fn tokenize_transcription(line: &str, track: Track) -> Vec<String> {
    source_words(line, track).into_iter().flatten().collect()
}

/// Lowercased translation words.
pub fn tokenize_translation(line: &str) -> Vec<String> {
    tokenize_translation_with(line, true)
}

pub fn tokenize_translation_with(line: &str, lowercase: bool) -> Vec<String> {
    line.split_whitespace()
        .map(strip_punctuation)
        .filter(|w| !w.is_empty())
        .map(|w| if lowercase { w.to_lowercase() } else { w.to_string() })
        .collect()
}

/// Gloss labels grouped by word. Labels are kept verbatim (no punctuation
/// stripping); the open track splits them exactly like the source morphemes.
pub fn gloss_words(line: &str, track: Track) -> Vec<Vec<String>> {
    line.split_whitespace()
        .map(|w| match track {
            Track::Closed => vec![w.to_string()],
            Track::Open => split_dashes(w, true),
        })
        .collect()
}

pub fn tokenize_gloss(line: &str, track: Track) -> Vec<String> {
    gloss_words(line, track).into_iter().flatten().collect()
}

/// Half-open token ranges of each word, recovered from the dash prefixes.
pub fn word_spans<S: AsRef<str>>(tokens: &[S]) -> Vec<std::ops::Range<usize>> {
    let mut spans: Vec<std::ops::Range<usize>> = Vec::new();
    for (i, t) in tokens.iter().enumerate() {
        match spans.last_mut() {
            Some(last) if t.as_ref().starts_with('-') => last.end = i + 1,
            _ => spans.push(i..i + 1),
        }
    }
    spans
}

pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;
pub const SEP_ID: usize = 2;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";
pub const SEP_TOKEN: &str = "<sep>";
pub const SPECIAL_COUNT: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VocabError {
    #[error("min_count must be at least 1")]
    InvalidMinCount,
    #[error("vocabulary line {line}: expected special token {expected:?}, found {found:?}")]
    BadSpecial {
        line: usize,
        expected: &'static str,
        found: String,
    },
    #[error("vocabulary line {line}: duplicate token {token:?}")]
    Duplicate { line: usize, token: String },
}

/// Dense bidirectional token/id map. Ids 0, 1, 2 are pad, unknown and
/// separator; corpus tokens start at 3.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    id_to_token: Vec<String>,
    token_to_id: HashMap<String, usize>,
}

impl fmt::Debug for Vocabulary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Vocabulary").field("len", &self.len()).finish()
    }
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::specials_only()
    }
}

impl Vocabulary {
    pub fn specials_only() -> Self {
        let id_to_token: Vec<String> = [PAD_TOKEN, UNK_TOKEN, SEP_TOKEN].map(String::from).into();
        let token_to_id = id_to_token.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
        Vocabulary {
            id_to_token,
            token_to_id,
        }
    }

    /// Frequency-filtered vocabulary in first-occurrence order.
    ///
    /// Tokens spelled like a special token are never given their own id.
    pub fn build<L, S>(token_lists: L, min_count: usize) -> Result<Self, VocabError>
    where
        L: IntoIterator,
        L::Item: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        if min_count < 1 {
            return Err(VocabError::InvalidMinCount);
        }
        let mut order: Vec<String> = Vec::new();
        let mut counts: HashMap<String, usize> = HashMap::new();
        for list in token_lists {
            for tok in list {
                let tok = tok.as_ref();
                match counts.get_mut(tok) {
                    Some(c) => *c += 1,
                    None => {
                        counts.insert(tok.to_string(), 1);
                        order.push(tok.to_string());
                    }
                }
            }
        }
        let mut vocab = Self::specials_only();
        for tok in order {
            if counts[&tok] >= min_count && !vocab.token_to_id.contains_key(&tok) {
                vocab.token_to_id.insert(tok.clone(), vocab.id_to_token.len());
                vocab.id_to_token.push(tok);
            }
        }
        Ok(vocab)
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    /// True when only the special tokens are present.
    pub fn is_empty(&self) -> bool {
        self.len() == SPECIAL_COUNT
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.token_to_id.get(token).copied()
    }

    /// Id of `token`, or [`UNK_ID`] when absent.
    pub fn id(&self, token: &str) -> usize {
        self.get(token).unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.id_to_token.get(id).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.id_to_token
    }

    /// One token per line; the line number is the id.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in &self.id_to_token {
            out.push_str(t);
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, VocabError> {
        Self::try_from(text.lines().map(String::from).collect::<Vec<_>>())
    }
}

impl TryFrom<Vec<String>> for Vocabulary {
    type Error = VocabError;

    fn try_from(id_to_token: Vec<String>) -> Result<Self, Self::Error> {
        for (line, expected) in [PAD_TOKEN, UNK_TOKEN, SEP_TOKEN].into_iter().enumerate() {
            let found = id_to_token.get(line).map(String::as_str).unwrap_or("");
            if found != expected {
                return Err(VocabError::BadSpecial {
                    line,
                    expected,
                    found: found.to_string(),
                });
            }
        }
        let mut token_to_id = HashMap::with_capacity(id_to_token.len());
        for (i, t) in id_to_token.iter().enumerate() {
            if token_to_id.insert(t.clone(), i).is_some() {
                return Err(VocabError::Duplicate {
                    line: i,
                    token: t.clone(),
                });
            }
        }
        Ok(Vocabulary {
            id_to_token,
            token_to_id,
        })
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.id_to_token
    }
}

pub fn build_vocab<L, S>(token_lists: L, min_count: usize) -> Result<Vocabulary, VocabError>
where
    L: IntoIterator,
    L::Item: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    Vocabulary::build(token_lists, min_count)
}

/// The three tables a model needs.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Vocabularies {
    pub source: Vocabulary,
    pub translation: Vocabulary,
    pub label: Vocabulary,
}

impl Vocabularies {
    /// Builds all three tables from glossed training entries.
    pub fn from_corpus(entries: &[IgtEntry], cfg: &EncodeConfig) -> Self {
        let source = entries
            .iter()
            .map(|e| tokenize_transcription(e.source_line(cfg.track), cfg.track));
        let translation = entries.iter().map(|e| {
            tokenize_translation_with(e.translation.as_deref().unwrap_or(""), cfg.lowercase_translation)
        });
        let label = entries
            .iter()
            .map(|e| tokenize_gloss(e.gloss.as_deref().unwrap_or(""), cfg.track));
        Vocabularies {
            source: Vocabulary::build(source, 1).expect("min_count 1"),
            translation: Vocabulary::build(translation, 1).expect("min_count 1"),
            label: Vocabulary::build(label, 1).expect("min_count 1"),
        }
    }

    /// Size of the shared embedding index space.
    pub fn input_space(&self) -> usize {
        self.source.len() + self.translation.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodeConfig {
    pub track: Track,
    pub max_len: usize,
    pub lowercase_translation: bool,
}

impl EncodeConfig {
    pub fn new(track: Track, max_len: usize) -> Self {
        EncodeConfig {
            track,
            max_len,
            lowercase_translation: true,
        }
    }
}

/// One encoded entry.
///
/// `input_ids` holds the source ids, the separator, then the translation ids
/// offset by the source vocabulary size. Labeled positions are exactly the
/// source positions `0..tokens.len()`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedExample {
    pub input_ids: Vec<usize>,
    pub label_positions: Vec<usize>,
    /// Gold label ids; `None` for unlabeled input.
    pub label_ids: Option<Vec<usize>>,
    /// Source tokens that survived truncation, one per labeled position.
    pub tokens: Vec<String>,
}

impl TokenizedExample {
    pub fn len(&self) -> usize {
        self.input_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.input_ids.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EncodeError {
    #[error("transcription has no tokens")]
    EmptyInput,
    #[error("{tokens} source tokens but {labels} gloss labels")]
    LabelMisalignment { tokens: usize, labels: usize },
    #[error("max_len must be at least 2, got {0}")]
    MaxLenTooSmall(usize),
}

pub fn encode_example(
    entry: &IgtEntry,
    vocabs: &Vocabularies,
    cfg: &EncodeConfig,
) -> Result<TokenizedExample, EncodeError> {
    if cfg.max_len < 2 {
        return Err(EncodeError::MaxLenTooSmall(cfg.max_len));
    }
    let mut tokens = tokenize_transcription(entry.source_line(cfg.track), cfg.track);
    if tokens.is_empty() {
        return Err(EncodeError::EmptyInput);
    }
    let mut labels = match &entry.gloss {
        Some(g) => {
            let labels = tokenize_gloss(g, cfg.track);
            if labels.len() != tokens.len() {
                return Err(EncodeError::LabelMisalignment {
                    tokens: tokens.len(),
                    labels: labels.len(),
                });
            }
            Some(labels)
        }
        None => None,
    };
    let mut translation = tokenize_translation_with(
        entry.translation.as_deref().unwrap_or(""),
        cfg.lowercase_translation,
    );

    // Translation goes first; the source keeps at least max_len - 1 tokens.
    let room = cfg.max_len - 1;
    if tokens.len() > room {
        tokens.truncate(room);
        if let Some(l) = labels.as_mut() {
            l.truncate(room);
        }
    }
    translation.truncate(room - tokens.len());

    let offset = vocabs.source.len();
    let mut input_ids: Vec<usize> = tokens.iter().map(|t| vocabs.source.id(t)).collect();
    input_ids.push(SEP_ID);
    input_ids.extend(translation.iter().map(|t| offset + vocabs.translation.id(t)));

    Ok(TokenizedExample {
        label_positions: (0..tokens.len()).collect(),
        label_ids: labels.map(|l| l.iter().map(|t| vocabs.label.id(t)).collect()),
        input_ids,
        tokens,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecodeError {
    #[error("{labels} labels for {tokens} tokens")]
    LengthMismatch { labels: usize, tokens: usize },
    #[error("label id {0} is outside the label vocabulary")]
    UnknownLabel(usize),
}

/// Reassembles a gloss line from per-token label ids.
pub fn decode_predictions<S: AsRef<str>>(
    label_ids: &[usize],
    tokens: &[S],
    label_vocab: &Vocabulary,
    track: Track,
) -> Result<String, DecodeError> {
    if label_ids.len() != tokens.len() {
        return Err(DecodeError::LengthMismatch {
            labels: label_ids.len(),
            tokens: tokens.len(),
        });
    }
    let labels = label_ids
        .iter()
        .map(|&id| label_vocab.token(id).ok_or(DecodeError::UnknownLabel(id)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(decode_labels(&labels, tokens, track))
}

pub(crate) fn decode_labels<L: AsRef<str>, S: AsRef<str>>(labels: &[L], tokens: &[S], track: Track) -> String {
    match track {
        Track::Closed => labels.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(" "),
        Track::Open => word_spans(tokens)
            .into_iter()
            .map(|span| {
                labels[span]
                    .iter()
                    .map(|l| l.as_ref().trim_start_matches('-'))
                    .collect::<Vec<_>>()
                    .join("-")
            })
            .collect::<Vec<_>>()
            .join(" "),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strs(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn transcription_tokens() {
        assert_eq!(tokenize_transcription("cat-s", Track::Open), strs(&["cat", "-s"]));
        assert_eq!(tokenize_transcription("anúnas.", Track::Closed), strs(&["anúnas"]));
        assert_eq!(
            tokenize_transcription("ní-s-nith anúnas", Track::Open),
            strs(&["ní", "-s", "-nith", "anúnas"])
        );
        assert_eq!(
            tokenize_transcription("ní-s-nith anúnas", Track::Closed),
            strs(&["ní-s-nith", "anúnas"])
        );
        assert_eq!(
            tokenize_transcription("« don't » , ¿qué? a--b", Track::Open),
            strs(&["don't", "qué", "a", "-b"])
        );
    }

    #[test]
    fn translation_tokens() {
        assert_eq!(tokenize_translation("It doesn't eat it."), strs(&["it", "doesn't", "eat", "it"]));
        assert!(tokenize_translation("").is_empty());
        assert_eq!(tokenize_translation("From Above"), strs(&["from", "above"]));
        assert_eq!(tokenize_translation_with("From Above", false), strs(&["From", "Above"]));
    }

    #[test]
    fn gloss_tokens() {
        assert_eq!(
            tokenize_gloss("Neg.3sf.eats from_above", Track::Closed),
            strs(&["Neg.3sf.eats", "from_above"])
        );
        assert_eq!(tokenize_gloss("cat-PL", Track::Open), strs(&["cat", "-PL"]));
        assert!(tokenize_gloss("", Track::Open).is_empty());
        assert_eq!(tokenize_gloss("3sf.{N}-x", Track::Open), strs(&["3sf.{N}", "-x"]));
        assert_eq!(tokenize_gloss("{a-b}-c", Track::Open), strs(&["{a-b}", "-c"]));
    }

    #[test]
    fn spans_follow_dashes() {
        let toks = ["ní", "-s", "-nith", "anúnas"];
        assert_eq!(word_spans(&toks), vec![0..3, 3..4]);
        assert!(word_spans::<&str>(&[]).is_empty());
    }

    #[test]
    fn vocab_first_occurrence() {
        let v = build_vocab([strs(&["a", "b", "a"])], 1).unwrap();
        assert_eq!(v.len(), 5);
        assert_eq!(v.get("a"), Some(3));
        assert_eq!(v.get("b"), Some(4));

        let v = build_vocab([strs(&["a", "b", "a"])], 2).unwrap();
        assert_eq!(v.get("a"), Some(3));
        assert_eq!(v.id("b"), UNK_ID);
        assert_eq!(v.len(), 4);

        let v = build_vocab(Vec::<Vec<String>>::new(), 1).unwrap();
        assert_eq!(v.len(), SPECIAL_COUNT);
        assert!(v.is_empty());

        assert_eq!(build_vocab([strs(&["a"])], 0), Err(VocabError::InvalidMinCount));
    }

    #[test]
    fn vocab_ignores_special_spellings() {
        let v = build_vocab([strs(&["<unk>", "x", "<pad>"])], 1).unwrap();
        assert_eq!(v.tokens(), &strs(&["<pad>", "<unk>", "<sep>", "x"])[..]);
    }

    #[test]
    fn vocab_file_round_trip() {
        let v = build_vocab([strs(&["ní", "-s", "anúnas"])], 1).unwrap();
        let text = v.to_text();
        assert!(text.starts_with("<pad>\n<unk>\n<sep>\nní\n"));
        assert_eq!(Vocabulary::from_text(&text).unwrap(), v);
        assert!(matches!(
            Vocabulary::from_text("<unk>\n<pad>\n<sep>\n"),
            Err(VocabError::BadSpecial { line: 0, .. })
        ));
        assert!(matches!(
            Vocabulary::from_text("<pad>\n<unk>\n<sep>\nx\nx\n"),
            Err(VocabError::Duplicate { line: 4, .. })
        ));
    }

    fn ab_vocabs() -> Vocabularies {
        Vocabularies {
            source: build_vocab([strs(&["a", "b"])], 1).unwrap(),
            translation: build_vocab([strs(&["x"])], 1).unwrap(),
            label: build_vocab([strs(&["A", "B"])], 1).unwrap(),
        }
    }

    #[test]
    fn encode_direct_construction() {
        let v = ab_vocabs();
        let e = IgtEntry::new("a b").with_gloss("A B").with_translation("x");
        let ex = encode_example(&e, &v, &EncodeConfig::new(Track::Closed, 512)).unwrap();
        // source ids 3,4; sep 2; translation "x" is id 3 offset by 5 source ids
        assert_eq!(ex.input_ids, vec![3, 4, SEP_ID, 8]);
        assert_eq!(ex.label_positions, vec![0, 1]);
        assert_eq!(ex.label_ids, Some(vec![3, 4]));
    }

    #[test]
    fn encode_unknowns() {
        let v = ab_vocabs();
        let e = IgtEntry::new("a zzz").with_gloss("A NEW").with_translation("y");
        let ex = encode_example(&e, &v, &EncodeConfig::new(Track::Closed, 512)).unwrap();
        assert_eq!(ex.input_ids, vec![3, UNK_ID, SEP_ID, 5 + UNK_ID]);
        assert_eq!(ex.label_positions, vec![0, 1]);
        assert_eq!(ex.label_ids, Some(vec![3, UNK_ID]));
    }

    #[test]
    fn encode_errors() {
        let v = ab_vocabs();
        let cfg = EncodeConfig::new(Track::Closed, 512);
        assert_eq!(
            encode_example(&IgtEntry::new("..."), &v, &cfg),
            Err(EncodeError::EmptyInput)
        );
        assert_eq!(
            encode_example(&IgtEntry::new("a b").with_gloss("A"), &v, &cfg),
            Err(EncodeError::LabelMisalignment { tokens: 2, labels: 1 })
        );
    }

    #[test]
    fn truncation_drops_translation_first() {
        let v = ab_vocabs();
        let e = IgtEntry::new("a b a b").with_gloss("A B A B").with_translation("x x x");
        let ex = encode_example(&e, &v, &EncodeConfig::new(Track::Closed, 6)).unwrap();
        assert_eq!(ex.input_ids, vec![3, 4, 3, 4, SEP_ID, 8]);

        let ex = encode_example(&e, &v, &EncodeConfig::new(Track::Closed, 3)).unwrap();
        assert_eq!(ex.input_ids, vec![3, 4, SEP_ID]);
        assert_eq!(ex.label_positions, vec![0, 1]);
        assert_eq!(ex.label_ids, Some(vec![3, 4]));
        assert_eq!(ex.tokens, strs(&["a", "b"]));
    }

    #[test]
    fn decode_examples() {
        let labels = build_vocab([strs(&["cat", "-PL", "Neg", "-3sf", "-eats", "from_above", "cat-PL"])], 1).unwrap();
        let ids = |xs: &[&str]| xs.iter().map(|x| labels.get(x).unwrap()).collect::<Vec<_>>();

        assert_eq!(
            decode_predictions(&ids(&["cat", "-PL"]), &["cat", "-s"], &labels, Track::Open).unwrap(),
            "cat-PL"
        );
        assert_eq!(
            decode_predictions(&ids(&["cat-PL"]), &["cats"], &labels, Track::Closed).unwrap(),
            "cat-PL"
        );
        assert_eq!(
            decode_predictions(
                &ids(&["Neg", "-3sf", "-eats", "from_above"]),
                &["ní", "-s", "-nith", "anúnas"],
                &labels,
                Track::Open
            )
            .unwrap(),
            "Neg-3sf-eats from_above"
        );
        assert_eq!(
            decode_predictions(&[3], &["a", "b"], &labels, Track::Open),
            Err(DecodeError::LengthMismatch { labels: 1, tokens: 2 })
        );
        assert_eq!(
            decode_predictions(&[999], &["a"], &labels, Track::Open),
            Err(DecodeError::UnknownLabel(999))
        );
    }
}
