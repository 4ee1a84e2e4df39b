//! Tokenization, n-gram windows and the group vocabulary.
//!
//! The vocabulary maps each distinct token to a 1-based index in order of
//! first occurrence. An n-gram maps to the tuple of its token indices.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Ordered tokens of one text. Tokens are never empty and never contain whitespace.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenSequence(Vec<String>);

impl TokenSequence {
    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_tokens(self) -> Vec<String> {
        self.0
    }
}

impl<S: Into<String>> FromIterator<S> for TokenSequence {
    /// Collects raw tokens, dropping empty ones and splitting on whitespace so the
    /// invariants hold for arbitrary input.
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let mut out = Vec::new();
        for s in iter {
            let s: String = s.into();
            out.extend(s.split_whitespace().map(str::to_owned));
        }
        TokenSequence(out)
    }
}

/// An n-gram as its owned tokens.
pub type NGram = Vec<String>;

/// Lowercases, replaces every character outside `[a-z0-9']` with a space and
/// splits on whitespace runs.
pub fn tokenize(text: &str) -> TokenSequence {
    let cleaned: String = text
        .to_lowercase()
        .chars()
        .map(|c| {
            if c.is_ascii_lowercase() || c.is_ascii_digit() || c == '\'' {
                c
            } else {
                ' '
            }
        })
        .collect();
    TokenSequence(cleaned.split_whitespace().map(str::to_owned).collect())
}

/// Sliding windows of `n` consecutive tokens, multiplicity and order preserved.
pub fn extract_ngrams(seq: &TokenSequence, n: usize) -> Result<Vec<NGram>> {
    if n < 1 {
        return Err(Error::InvalidArgument(
            "n-gram order must be at least 1".into(),
        ));
    }
    Ok(seq.0.windows(n).map(|w| w.to_vec()).collect())
}

/// The group vocabulary: distinct tokens in first-occurrence order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// 1-based index of `token`.
    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Inverse of [`Vocabulary::index_of`].
    pub fn token_at(&self, index: usize) -> Option<&str> {
        index
            .checked_sub(1)
            .and_then(|i| self.tokens.get(i))
            .map(String::as_str)
    }

    fn insert(&mut self, token: &str) {
        if !self.index.contains_key(token) {
            self.tokens.push(token.to_owned());
            self.index.insert(token.to_owned(), self.tokens.len());
        }
    }

    /// Newline-delimited token list; the 1-based line number is the index.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for t in &self.tokens {
            writeln!(w, "{t}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut vocab = Vocabulary::default();
        for (i, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<vocabulary>", e))?;
            if line.is_empty() || line.contains(char::is_whitespace) {
                return Err(Error::InvalidArgument(format!(
                    "vocabulary line {} is not a single token",
                    i + 1
                )));
            }
            if vocab.index.contains_key(&line) {
                return Err(Error::InvalidArgument(format!(
                    "vocabulary line {} repeats token `{line}`",
                    i + 1
                )));
            }
            vocab.insert(&line);
        }
        Ok(vocab)
    }
}

impl fmt::Display for Vocabulary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Vocabulary(|V| = {})", self.tokens.len())
    }
}

/// Distinct tokens over all tuples of all sequences, in first-occurrence order.
pub fn build_vocabulary<S: AsRef<[NGram]>>(groups_ngrams: &[S]) -> Vocabulary {
    let mut vocab = Vocabulary::default();
    for seq in groups_ngrams {
        for gram in seq.as_ref() {
            for tok in gram {
                vocab.insert(tok);
            }
        }
    }
    vocab
}

/// Maps an n-gram to its 1-based index tuple.
pub fn index_ngram<S: AsRef<str>>(vocab: &Vocabulary, gram: &[S]) -> Result<Vec<usize>> {
    gram.iter()
        .map(|t| {
            let t = t.as_ref();
            vocab
                .index_of(t)
                .ok_or_else(|| Error::OutOfVocabulary(t.to_owned()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(tokens: &[&str]) -> TokenSequence {
        tokens.iter().copied().collect()
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("The cat sat.").tokens(), ["the", "cat", "sat"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("Don't stop—go!").tokens(), ["don't", "stop", "go"]);
        assert_eq!(tokenize("  A1\tb2\n\nC3 ").tokens(), ["a1", "b2", "c3"]);
    }

    #[test]
    fn ngram_windows() {
        let s = seq(&["the", "cat", "sat"]);
        assert_eq!(
            extract_ngrams(&s, 2).unwrap(),
            vec![vec!["the", "cat"], vec!["cat", "sat"]]
        );
        assert!(extract_ngrams(&seq(&["the"]), 2).unwrap().is_empty());
        assert_eq!(
            extract_ngrams(&seq(&["a", "b", "a", "b"]), 2).unwrap(),
            vec![vec!["a", "b"], vec!["b", "a"], vec!["a", "b"]]
        );
        assert!(extract_ngrams(&s, 0).is_err());
    }

    #[test]
    fn vocabulary_first_occurrence() {
        let grams = extract_ngrams(&seq(&["the", "cat", "sat"]), 2).unwrap();
        let v = build_vocabulary(&[grams]);
        assert_eq!(v.tokens(), ["the", "cat", "sat"]);
        assert_eq!(v.index_of("the"), Some(1));
        assert_eq!(v.index_of("cat"), Some(2));
        assert_eq!(v.index_of("sat"), Some(3));

        let empty: [Vec<NGram>; 0] = [];
        assert_eq!(build_vocabulary(&empty).len(), 0);

        let d1 = vec![vec!["a".to_string(), "b".to_string()]];
        let d2 = vec![vec!["b".to_string(), "c".to_string()]];
        assert_eq!(build_vocabulary(&[d1, d2]).tokens(), ["a", "b", "c"]);
    }

    #[test]
    fn index_lookup() {
        let grams = extract_ngrams(&seq(&["the", "cat", "sat"]), 2).unwrap();
        let v = build_vocabulary(&[grams]);
        assert_eq!(index_ngram(&v, &["cat", "sat"]).unwrap(), vec![2, 3]);
        assert_eq!(index_ngram(&v, &["the", "the"]).unwrap(), vec![1, 1]);
        match index_ngram(&v, &["the", "dog"]) {
            Err(Error::OutOfVocabulary(t)) => assert_eq!(t, "dog"),
            other => panic!("expected OOV error, got {other:?}"),
        }
    }

    #[test]
    fn vocabulary_file_round_trip() {
        let grams = extract_ngrams(&tokenize("one two three two one"), 2).unwrap();
        let v = build_vocabulary(&[grams]);
        let mut buf = Vec::new();
        v.write_to(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "one\ntwo\nthree\n");
        assert_eq!(Vocabulary::read_from(&buf[..]).unwrap(), v);
        assert!(Vocabulary::read_from(&b"a\na\n"[..]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn token_seq() -> impl Strategy<Value = TokenSequence> {
            proptest::collection::vec("[a-e]{1,2}", 0..30).prop_map(|v| v.into_iter().collect())
        }

        proptest! {
            #[test]
            fn window_count(s in token_seq(), n in 1usize..5) {
                let grams = extract_ngrams(&s, n).unwrap();
                prop_assert_eq!(grams.len(), (s.len() + 1).saturating_sub(n));
            }

            #[test]
            fn unigram_degeneracy(s in token_seq()) {
                let grams = extract_ngrams(&s, 1).unwrap();
                let flat: Vec<String> = grams.into_iter().map(|g| g[0].clone()).collect();
                prop_assert_eq!(flat.as_slice(), s.tokens());
            }

            #[test]
            fn closure_and_bijection(s in token_seq(), n in 1usize..4) {
                let grams = extract_ngrams(&s, n).unwrap();
                let v = build_vocabulary(std::slice::from_ref(&grams));
                prop_assert!(v.len() <= s.len());
                for (i, tok) in v.tokens().iter().enumerate() {
                    prop_assert_eq!(v.index_of(tok), Some(i + 1));
                    prop_assert_eq!(v.token_at(i + 1), Some(tok.as_str()));
                }
                for g in &grams {
                    let idx = index_ngram(&v, g).unwrap();
                    prop_assert!(idx.iter().all(|&i| i >= 1 && i <= v.len()));
                    let back: Vec<&str> = idx.iter().map(|&i| v.token_at(i).unwrap()).collect();
                    prop_assert_eq!(back, g.iter().map(String::as_str).collect::<Vec<_>>());
                }
            }
        }
    }
}
