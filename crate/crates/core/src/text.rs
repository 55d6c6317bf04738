//! String primitives shared by every metric: normalization, tokenization,
//! sentence segmentation and character-offset slicing.
//!
//! All offsets in this crate count Unicode scalar values (`char`s), not
//! bytes, matching the offsets written by annotation tools.

use crate::error::{Error, Result};

/// Lowercases, removes commas, trims both ends and collapses internal
/// whitespace runs to a single space.
///
/// ```
/// use scenario_context::text::normalize;
/// assert_eq!(normalize(" Wuhan, China "), "wuhan china");
/// assert_eq!(normalize("JULY 5, 1987"), "july 5 1987");
/// ```
pub fn normalize(text: &str) -> String {
    // Commas are deleted, not replaced: "a,b" becomes "ab".
    let lowered: String = text.to_lowercase().chars().filter(|&c| c != ',').collect();
    let mut out = String::with_capacity(lowered.len());
    for word in lowered.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Whitespace tokens of [`normalize`]d text.
pub fn tokenize(text: &str) -> Vec<String> {
    normalize(text)
        .split(' ')
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Zero-based index of the sentence containing `char_offset`.
///
/// A sentence ends after '.', '!' or '?' when the next character is
/// whitespace; the whitespace belongs to the following sentence. Text
/// without any terminator is a single sentence.
pub fn sentence_index(passage_text: &str, char_offset: usize) -> Result<usize> {
    let len = passage_text.chars().count();
    if char_offset >= len {
        return Err(Error::OffsetOutOfRange {
            offset: char_offset,
            len,
        });
    }
    Ok(SentenceIndex::new(passage_text).sentence_of(char_offset))
}

/// Precomputed sentence boundaries of a passage, for repeated lookups.
#[derive(Debug, Clone)]
pub struct SentenceIndex {
    /// Char offsets at which sentences 1.. begin.
    starts: Vec<usize>,
    len: usize,
}

impl SentenceIndex {
    pub fn new(text: &str) -> Self {
        let chars: Vec<char> = text.chars().collect();
        let starts = chars
            .windows(2)
            .enumerate()
            .filter(|(_, w)| matches!(w[0], '.' | '!' | '?') && w[1].is_whitespace())
            .map(|(i, _)| i + 1)
            .collect();
        SentenceIndex {
            starts,
            len: chars.len(),
        }
    }

    /// Sentence containing `char_offset`; offsets past the end map to the
    /// last sentence.
    pub fn sentence_of(&self, char_offset: usize) -> usize {
        self.starts.partition_point(|&s| s <= char_offset)
    }

    pub fn sentence_count(&self) -> usize {
        self.starts.len() + 1
    }

    pub fn char_len(&self) -> usize {
        self.len
    }
}

/// Substring by char offsets, `None` if the range is invalid.
pub fn char_slice(text: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let begin = byte_index(text, start)?;
    let finish = byte_index(text, end)?;
    Some(&text[begin..finish])
}

/// Byte index of the `char_offset`-th char; `char_offset == len` maps to
/// `text.len()`.
pub fn byte_index(text: &str, char_offset: usize) -> Option<usize> {
    if char_offset == 0 {
        return Some(0);
    }
    match text.char_indices().nth(char_offset) {
        Some((b, _)) => Some(b),
        None if text.chars().count() == char_offset => Some(text.len()),
        None => None,
    }
}

/// Char offset of the first occurrence of `needle` at or after char offset
/// `from`.
pub fn find_chars(haystack: &str, needle: &str, from: usize) -> Option<usize> {
    let start = byte_index(haystack, from)?;
    let found = haystack[start..].find(needle)? + start;
    Some(haystack[..found].chars().count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize(" Wuhan, China "), "wuhan china");
        assert_eq!(normalize("JULY 5, 1987"), "july 5 1987");
        assert_eq!(normalize(""), "");
        assert_eq!(normalize("New   York\t city"), "new york city");
        assert_eq!(normalize(" , "), "");
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(
            tokenize("western and northern europe"),
            vec!["western", "and", "northern", "europe"]
        );
        assert_eq!(tokenize("2009, 2014"), vec!["2009", "2014"]);
        assert!(tokenize("").is_empty());
    }

    #[test]
    fn sentence_index_examples() {
        assert_eq!(sentence_index("One. Two.", 1).unwrap(), 0);
        assert_eq!(sentence_index("One. Two.", 6).unwrap(), 1);
        assert_eq!(sentence_index("No terminator", 5).unwrap(), 0);
        assert!(matches!(
            sentence_index("One.", 4),
            Err(Error::OffsetOutOfRange { offset: 4, len: 4 })
        ));
    }

    #[test]
    fn abbreviations_are_not_special_cased() {
        let text = "Dr. Smith went home. Done?! Yes";
        assert_eq!(sentence_index(text, 0).unwrap(), 0);
        assert_eq!(sentence_index(text, 4).unwrap(), 1);
        assert_eq!(sentence_index(text, 21).unwrap(), 2);
        assert_eq!(sentence_index(text, 28).unwrap(), 3);
    }

    #[test]
    fn char_slicing_handles_multibyte() {
        let text = "São Paulo in 2020";
        assert_eq!(char_slice(text, 0, 9), Some("São Paulo"));
        assert_eq!(char_slice(text, 13, 17), Some("2020"));
        assert_eq!(char_slice(text, 13, 18), None);
        assert_eq!(find_chars(text, "2020", 0), Some(13));
        assert_eq!(find_chars(text, "Paulo", 5), None);
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in "\\PC{0,40}") {
            let once = normalize(&s);
            prop_assert_eq!(normalize(&once), once.clone());
            prop_assert!(!once.contains(','));
            prop_assert_eq!(once.trim(), once.as_str());
        }

        #[test]
        fn tokens_rejoin_to_normalized(s in "[a-zA-Z ,\\t]{0,40}") {
            prop_assert_eq!(tokenize(&s).join(" "), normalize(&s));
            prop_assert!(tokenize(&s).iter().all(|t| !t.is_empty()));
        }

        #[test]
        fn sentence_index_is_monotone(s in "[a-z .!?\\n]{1,60}") {
            let n = s.chars().count();
            let idx: Vec<usize> = (0..n).map(|i| sentence_index(&s, i).unwrap()).collect();
            prop_assert!(idx.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
