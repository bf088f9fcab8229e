use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::textproc::split_dashes;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PieceKind {
    Stem,
    Gram,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlossPiece {
    pub text: String,
    pub kind: PieceKind,
}

impl GlossPiece {
    pub fn new(text: impl Into<String>, inventory: Option<&GramInventory>) -> Self {
        let text = text.into();
        let kind = classify_piece(&text, inventory);
        GlossPiece { text, kind }
    }
}

/// Explicit list of gram labels; overrides the capitalization rule.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GramInventory(HashSet<String>);

impl GramInventory {
    /// One gram per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Self {
        GramInventory(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(String::from)
                .collect(),
        )
    }

    pub fn contains(&self, piece: &str) -> bool {
        self.0.contains(piece)
    }
}

impl<S: Into<String>> FromIterator<S> for GramInventory {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        GramInventory(iter.into_iter().map(Into::into).collect())
    }
}

/// Morpheme glosses of one word gloss: split at `-` outside braces, no dash
/// retention. Dots stay: they join the parts of a single morpheme's gloss.
pub fn split_word_gloss(word_gloss: &str) -> Vec<String> {
    split_dashes(word_gloss, false)
}

/// Dot-separated parts of one morpheme gloss (braces protect their content).
pub(crate) fn split_dots(gloss: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut depth = 0usize;
    for c in gloss.chars() {
        match c {
            '{' => depth += 1,
            '}' => depth = depth.saturating_sub(1),
            '.' if depth == 0 => {
                if !current.is_empty() {
                    out.push(std::mem::take(&mut current));
                }
                continue;
            }
            _ => {}
        }
        current.push(c);
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

/// All stem/gram pieces of one word gloss, in order.
pub(crate) fn word_sub_pieces(word_gloss: &str) -> Vec<String> {
    split_word_gloss(word_gloss).iter().flat_map(|m| split_dots(m)).collect()
}

/// Gram iff listed in the inventory when one is given; otherwise gram iff
/// the piece has no lowercase letter (`PL`, `3SG`), else stem.
pub fn classify_piece(piece: &str, inventory: Option<&GramInventory>) -> PieceKind {
    let gram = match inventory {
        Some(inv) => inv.contains(piece),
        None => !piece.chars().any(char::is_lowercase),
    };
    if gram {
        PieceKind::Gram
    } else {
        PieceKind::Stem
    }
}
