use unicode_segmentation::UnicodeSegmentation;

use super::{TokenizedDoc, Variant};

/// Lowercase word tokens split on Unicode (UAX #29) word boundaries.
///
/// Segments without any alphanumeric character (punctuation, whitespace,
/// symbols) are dropped.
pub fn word_tokens(text: &str) -> Vec<String> {
    text.unicode_words().map(str::to_lowercase).collect()
}

pub fn tokenize(text: &str) -> TokenizedDoc {
    TokenizedDoc::new(word_tokens(text))
}

pub fn tokenize_as(text: &str, variant: Variant) -> TokenizedDoc {
    TokenizedDoc {
        tokens: word_tokens(text),
        source_variant: Some(variant),
    }
}
