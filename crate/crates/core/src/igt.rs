//! The line-prefixed IGT corpus format.
//!
//! Each entry is a block of lines, one tier per line:
//!
//! ```text
//! \t ní-s-nith anúnas
//! \m ní-s-nith anúnas
//! \g Neg-3sf-eats from_above
//! \l It doesn't eat it from above.
//! ```
//!
//! `\t` is the transcription (required), `\m` the morpheme segmentation,
//! `\g` the gloss line and `\l` the free translation. Blocks are separated by
//! blank lines. Payloads are trimmed; internal whitespace is kept verbatim.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::textproc;
use crate::Track;

/// One glossed (or to-be-glossed) sentence.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IgtEntry {
    pub transcription: String,
    pub segmentation: Option<String>,
    pub gloss: Option<String>,
    pub translation: Option<String>,
}

impl IgtEntry {
    pub fn new(transcription: impl Into<String>) -> Self {
        IgtEntry {
            transcription: transcription.into(),
            ..Default::default()
        }
    }

    pub fn with_segmentation(mut self, segmentation: impl Into<String>) -> Self {
        self.segmentation = Some(segmentation.into());
        self
    }

    pub fn with_gloss(mut self, gloss: impl Into<String>) -> Self {
        self.gloss = Some(gloss.into());
        self
    }

    pub fn with_translation(mut self, translation: impl Into<String>) -> Self {
        self.translation = Some(translation.into());
        self
    }

    /// The line that carries the labeled tokens for `track`.
    ///
    /// Open-track entries without a segmentation fall back to the
    /// transcription, which makes every word a single morpheme.
    pub fn source_line(&self, track: Track) -> &str {
        match track {
            Track::Open => self.segmentation.as_deref().unwrap_or(&self.transcription),
            Track::Closed => &self.transcription,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IgtError {
    #[error("line {line}: entry has no transcription (\\t) line")]
    MalformedEntry { line: usize },
    #[error("input is not valid UTF-8 (byte offset {offset})")]
    EncodingError { offset: usize },
}

/// Non-fatal oddities found while parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseWarning {
    UnknownPrefix { line: usize, content: String },
    DuplicateTier { line: usize, tier: char },
}

impl fmt::Display for ParseWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseWarning::UnknownPrefix { line, content } => {
                write!(f, "line {line}: skipping line with unknown prefix: {content:?}")
            }
            ParseWarning::DuplicateTier { line, tier } => {
                write!(f, "line {line}: duplicate \\{tier} line ignored")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParsedCorpus {
    pub entries: Vec<IgtEntry>,
    pub warnings: Vec<ParseWarning>,
}

/// Parses a corpus, logging any warnings.
pub fn parse_igt(text: &str) -> Result<Vec<IgtEntry>, IgtError> {
    let parsed = parse_igt_with_warnings(text)?;
    for w in &parsed.warnings {
        log::warn!("{w}");
    }
    Ok(parsed.entries)
}

/// Parses raw bytes, rejecting invalid UTF-8.
pub fn parse_igt_bytes(bytes: &[u8]) -> Result<Vec<IgtEntry>, IgtError> {
    let text = std::str::from_utf8(bytes).map_err(|e| IgtError::EncodingError {
        offset: e.valid_up_to(),
    })?;
    parse_igt(text)
}

pub fn parse_igt_with_warnings(text: &str) -> Result<ParsedCorpus, IgtError> {
    let mut out = ParsedCorpus::default();
    let mut block: Vec<(usize, &str)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            if !block.is_empty() {
                out.entries.push(parse_block(&block, &mut out.warnings)?);
                block.clear();
            }
        } else {
            block.push((idx + 1, raw));
        }
    }
    if !block.is_empty() {
        out.entries.push(parse_block(&block, &mut out.warnings)?);
    }
    Ok(out)
}

fn split_prefix(line: &str) -> Option<(char, &str)> {
    let rest = line.trim_start().strip_prefix('\\')?;
    let mut chars = rest.chars();
    let tier = chars.next()?;
    let payload = chars.as_str();
    if !matches!(tier, 't' | 'm' | 'g' | 'l') {
        return None;
    }
    // The tier letter must be followed by whitespace or end of line.
    if !payload.is_empty() && !payload.starts_with(char::is_whitespace) {
        return None;
    }
    Some((tier, payload.trim()))
}

fn parse_block(lines: &[(usize, &str)], warnings: &mut Vec<ParseWarning>) -> Result<IgtEntry, IgtError> {
    let mut transcription = None;
    let mut segmentation = None;
    let mut gloss = None;
    let mut translation = None;

    for &(line_no, raw) in lines {
        let Some((tier, payload)) = split_prefix(raw) else {
            warnings.push(ParseWarning::UnknownPrefix {
                line: line_no,
                content: raw.to_string(),
            });
            continue;
        };
        let slot = match tier {
            't' => &mut transcription,
            'm' => &mut segmentation,
            'g' => &mut gloss,
            _ => &mut translation,
        };
        if slot.is_some() {
            warnings.push(ParseWarning::DuplicateTier { line: line_no, tier });
        } else {
            *slot = Some(payload.to_string());
        }
    }

    let first_line = lines.first().map(|l| l.0).unwrap_or(1);
    match transcription {
        Some(t) if !t.is_empty() => Ok(IgtEntry {
            transcription: t,
            segmentation,
            gloss,
            translation,
        }),
        _ => Err(IgtError::MalformedEntry { line: first_line }),
    }
}

/// Writes entries back out in the line-prefixed format.
pub fn serialize_igt(entries: &[IgtEntry]) -> String {
    let mut out = String::new();
    for (i, e) in entries.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        push_line(&mut out, 't', Some(&e.transcription));
        push_line(&mut out, 'm', e.segmentation.as_deref());
        push_line(&mut out, 'g', e.gloss.as_deref());
        push_line(&mut out, 'l', e.translation.as_deref());
    }
    out
}

fn push_line(out: &mut String, tier: char, payload: Option<&str>) {
    if let Some(p) = payload {
        out.push('\\');
        out.push(tier);
        out.push(' ');
        out.push_str(p);
        out.push('\n');
    }
}

/// A data-quality finding for one entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Issue {
    /// Gloss-line token count differs from the number of source words.
    CountMismatch { words: usize, glosses: usize },
    /// An open-track word whose morpheme count differs from its gloss pieces.
    MorphemeCountMismatch {
        word: usize,
        morphemes: usize,
        glosses: usize,
    },
    MissingSegmentation,
    /// The segmentation does not spell the same characters as the transcription.
    SegmentationMismatch,
}

impl Issue {
    /// Issues that make gold labels impossible to align with tokens.
    pub fn blocks_training(&self) -> bool {
        !matches!(self, Issue::SegmentationMismatch)
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::CountMismatch { words, glosses } => {
                write!(f, "{words} words but {glosses} gloss tokens")
            }
            Issue::MorphemeCountMismatch {
                word,
                morphemes,
                glosses,
            } => write!(f, "word {word}: {morphemes} morphemes but {glosses} gloss pieces"),
            Issue::MissingSegmentation => f.write_str("open track requires a segmentation (\\m) line"),
            Issue::SegmentationMismatch => f.write_str("segmentation does not match transcription"),
        }
    }
}

pub fn validate_entry(entry: &IgtEntry, track: Track) -> Vec<Issue> {
    let mut issues = Vec::new();

    if let Some(seg) = &entry.segmentation {
        if spelled_chars(seg) != spelled_chars(&entry.transcription) {
            issues.push(Issue::SegmentationMismatch);
        }
    }
    if track == Track::Open && entry.segmentation.is_none() {
        issues.push(Issue::MissingSegmentation);
        return issues;
    }

    if let Some(gloss) = &entry.gloss {
        let words = textproc::source_words(entry.source_line(track), track);
        let gloss_count = gloss.split_whitespace().count();
        if words.len() != gloss_count {
            issues.push(Issue::CountMismatch {
                words: words.len(),
                glosses: gloss_count,
            });
        } else if track == Track::Open {
            let gloss_words = textproc::gloss_words(gloss, track);
            for (i, (w, g)) in words.iter().zip(&gloss_words).enumerate() {
                if w.len() != g.len() {
                    issues.push(Issue::MorphemeCountMismatch {
                        word: i,
                        morphemes: w.len(),
                        glosses: g.len(),
                    });
                }
            }
        }
    }
    issues
}

fn spelled_chars(line: &str) -> String {
    line.chars()
        .filter(|c| !c.is_whitespace() && !textproc::is_punctuation(*c))
        .collect()
}

/// Corpus-level counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CorpusStats {
    pub entry_count: usize,
    pub word_count: usize,
    pub morpheme_count: usize,
    pub distinct_word_labels: usize,
    pub distinct_morpheme_labels: usize,
    pub entries_missing_gloss: usize,
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "entries\t{}", self.entry_count)?;
        writeln!(f, "words\t{}", self.word_count)?;
        writeln!(f, "morphemes\t{}", self.morpheme_count)?;
        writeln!(f, "distinct_word_labels\t{}", self.distinct_word_labels)?;
        writeln!(f, "distinct_morpheme_labels\t{}", self.distinct_morpheme_labels)?;
        write!(f, "entries_missing_gloss\t{}", self.entries_missing_gloss)
    }
}

/// Counts words and morphemes with the tokenization rules of `track`.
///
/// Words come from the track's source line. Morphemes come from the
/// segmentation whenever one is present, so a closed-track corpus that still
/// carries `\m` lines reports its true morpheme count.
pub fn corpus_stats(entries: &[IgtEntry], track: Track) -> CorpusStats {
    let mut stats = CorpusStats {
        entry_count: entries.len(),
        ..Default::default()
    };
    let mut word_labels = HashSet::new();
    let mut morpheme_labels = HashSet::new();

    for e in entries {
        let words = textproc::source_words(e.source_line(track), track);
        stats.word_count += words.len();
        stats.morpheme_count += match &e.segmentation {
            Some(seg) => textproc::tokenize_transcription(seg, Track::Open).len(),
            None => words.len(),
        };
        match &e.gloss {
            Some(g) => {
                word_labels.extend(textproc::tokenize_gloss(g, Track::Closed));
                morpheme_labels.extend(textproc::tokenize_gloss(g, Track::Open));
            }
            None => stats.entries_missing_gloss += 1,
        }
    }
    stats.distinct_word_labels = word_labels.len();
    stats.distinct_morpheme_labels = morpheme_labels.len();
    stats
}

#[cfg(test)]
mod tests {
    use super::*;

    const OLD_IRISH: &str = "\\t ní-s-nith anúnas\n\\g Neg.3sf.eats from_above\n\\l It doesn't eat it from above.\n";

    #[test]
    fn parses_three_line_entry() {
        let entries = parse_igt(OLD_IRISH).unwrap();
        assert_eq!(entries.len(), 1);
        assert_eq!(entries[0].transcription, "ní-s-nith anúnas");
        assert_eq!(entries[0].gloss.as_deref(), Some("Neg.3sf.eats from_above"));
        assert_eq!(entries[0].translation.as_deref(), Some("It doesn't eat it from above."));
        assert_eq!(entries[0].segmentation, None);
    }

    #[test]
    fn empty_input_is_empty_corpus() {
        assert!(parse_igt("").unwrap().is_empty());
        assert!(parse_igt("\n\n  \n").unwrap().is_empty());
    }

    #[test]
    fn missing_gloss_in_third_entry() {
        let text = "\\t a b\n\\g x y\n\n\\t c\n\\g z\n\\l see\n\n\\t d e\n\\l no gloss here\n";
        let entries = parse_igt(text).unwrap();
        assert_eq!(entries.len(), 3);
        assert!(entries[0].gloss.is_some());
        assert!(entries[1].gloss.is_some());
        assert_eq!(entries[2].gloss, None);
    }

    #[test]
    fn block_without_transcription_is_malformed() {
        let text = "\\t a\n\\g x\n\n\n\\g y\n\\l z\n";
        assert_eq!(parse_igt(text), Err(IgtError::MalformedEntry { line: 5 }));
        assert_eq!(parse_igt("\\t   \n"), Err(IgtError::MalformedEntry { line: 1 }));
    }

    #[test]
    fn unknown_prefixes_are_skipped_with_warning() {
        let text = "\\t a\n\\p N\nfree text\n\\g x\n";
        let parsed = parse_igt_with_warnings(text).unwrap();
        assert_eq!(parsed.entries.len(), 1);
        assert_eq!(parsed.entries[0].gloss.as_deref(), Some("x"));
        assert_eq!(parsed.warnings.len(), 2);
        assert!(matches!(parsed.warnings[0], ParseWarning::UnknownPrefix { line: 2, .. }));
    }

    #[test]
    fn invalid_utf8_is_encoding_error() {
        let bytes = b"\\t ab\xff\n";
        assert_eq!(parse_igt_bytes(bytes), Err(IgtError::EncodingError { offset: 5 }));
    }

    #[test]
    fn payloads_are_trimmed_internal_space_kept() {
        let e = parse_igt("\\t   a  b   \r\n\\g x  y\r\n").unwrap();
        assert_eq!(e[0].transcription, "a  b");
        assert_eq!(e[0].gloss.as_deref(), Some("x  y"));
    }

    #[test]
    fn serialize_shapes() {
        assert_eq!(serialize_igt(&[]), "");
        let e = IgtEntry::new("cat-s run")
            .with_segmentation("cat-s run")
            .with_gloss("cat-PL run")
            .with_translation("cats run");
        let text = serialize_igt(std::slice::from_ref(&e));
        assert_eq!(text, "\\t cat-s run\n\\m cat-s run\n\\g cat-PL run\n\\l cats run\n");
        assert_eq!(parse_igt(&text).unwrap(), vec![e.clone()]);

        let two = serialize_igt(&[e.clone(), IgtEntry::new("x")]);
        assert!(two.ends_with("\\l cats run\n\n\\t x\n"));
    }

    #[test]
    fn validate_counts() {
        let ok = IgtEntry::new("a b").with_gloss("x y");
        assert!(validate_entry(&ok, Track::Closed).is_empty());

        let bad = IgtEntry::new("a b").with_gloss("x y z");
        assert_eq!(
            validate_entry(&bad, Track::Closed),
            vec![Issue::CountMismatch { words: 2, glosses: 3 }]
        );

        assert_eq!(validate_entry(&ok, Track::Open), vec![Issue::MissingSegmentation]);
    }

    #[test]
    fn validate_open_morpheme_alignment() {
        let e = IgtEntry::new("cats run")
            .with_segmentation("cat-s run")
            .with_gloss("cat run");
        assert_eq!(
            validate_entry(&e, Track::Open),
            vec![Issue::MorphemeCountMismatch {
                word: 0,
                morphemes: 2,
                glosses: 1
            }]
        );
        // Closed track only cares about word counts.
        assert!(validate_entry(&e, Track::Closed).is_empty());
    }

    #[test]
    fn validate_segmentation_spelling() {
        let e = IgtEntry::new("cats run.").with_segmentation("cat-s ran");
        assert_eq!(validate_entry(&e, Track::Closed), vec![Issue::SegmentationMismatch]);
        let e = IgtEntry::new("cats, run.").with_segmentation("cat-s run");
        assert!(validate_entry(&e, Track::Closed).is_empty());
    }

    #[test]
    fn stats_counts() {
        assert_eq!(corpus_stats(&[], Track::Open), CorpusStats::default());

        let e = IgtEntry::new("cats runs").with_segmentation("cat-s runs").with_gloss("cat-PL run");
        for track in [Track::Open, Track::Closed] {
            let s = corpus_stats(std::slice::from_ref(&e), track);
            assert_eq!(s.entry_count, 1);
            assert_eq!(s.word_count, 2);
            assert_eq!(s.morpheme_count, 3);
            assert_eq!(s.distinct_word_labels, 2);
            assert_eq!(s.distinct_morpheme_labels, 3);
            assert_eq!(s.entries_missing_gloss, 0);
        }

        let s = corpus_stats(&[e, IgtEntry::new("foo")], Track::Closed);
        assert_eq!(s.entries_missing_gloss, 1);
        assert_eq!(s.word_count, 3);
        assert_eq!(s.morpheme_count, 4);
    }
}
