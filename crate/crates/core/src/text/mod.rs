//! Text pipeline: normalization, tokenization, vocabulary and fixed-length
//! encoding.

mod entities;
pub mod normalize;
pub mod tokenize;
pub mod vocab;

pub use normalize::{normalize, PREPROCESSING_VERSION, TAG_TOKENS};
pub use tokenize::tokenize;
pub use vocab::{Vocabulary, PAD, PAD_INDEX, UNK, UNK_INDEX};

/// Normalizes then tokenizes.
pub fn preprocess(raw: &str) -> Vec<String> {
    tokenize(&normalize(raw))
}

/// A token sequence padded or truncated to a fixed length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedTweet {
    pub indices: Vec<usize>,
    pub mask: Vec<u8>,
    pub true_length: usize,
}

impl EncodedTweet {
    pub fn seq_len(&self) -> usize {
        self.indices.len()
    }
}

/// Maps the first `min(len, n)` tokens to indices and pads the rest.
/// Overlong sequences keep their head.
pub fn encode<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary, n: usize) -> EncodedTweet {
    assert!(n >= 1, "sequence length must be positive");
    let true_length = tokens.len().min(n);
    let mut indices = vec![PAD_INDEX; n];
    let mut mask = vec![0u8; n];
    for (i, tok) in tokens.iter().take(n).enumerate() {
        indices[i] = vocab.index_of(tok.as_ref());
        mask[i] = 1;
    }
    EncodedTweet {
        indices,
        mask,
        true_length,
    }
}

/// Preprocesses and encodes raw tweet text. Text with no tokens at all is
/// encoded as a lone UNK, so every tweet has at least one position to
/// attend to.
pub fn encode_text(raw: &str, vocab: &Vocabulary, n: usize) -> EncodedTweet {
    let tokens = preprocess(raw);
    if tokens.is_empty() {
        encode(&[UNK], vocab, n)
    } else {
        encode(&tokens, vocab, n)
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use proptest::prelude::*;

    use super::*;

    fn vocab_with(words: &[&str]) -> Vocabulary {
        let corpus = vec![words.iter().map(|w| w.to_string()).collect::<Vec<_>>()];
        let pre: HashSet<String> = words.iter().map(|w| w.to_string()).collect();
        Vocabulary::build(&corpus, &pre).unwrap()
    }

    #[test]
    fn pads_short_sequences() {
        let v = Vocabulary::from_tokens(vec![PAD.into(), UNK.into(), "a".into()]).unwrap();
        let e = encode(&["a"], &v, 3);
        assert_eq!(e.indices, [2, 0, 0]);
        assert_eq!(e.mask, [1, 0, 0]);
        assert_eq!(e.true_length, 1);
    }

    #[test]
    fn truncates_keeping_head() {
        let v = vocab_with(&["a", "b", "c", "d"]);
        let e = encode(&["a", "b", "c", "d"], &v, 2);
        assert_eq!(e.indices, [v.index_of("a"), v.index_of("b")]);
        assert_eq!(e.mask, [1, 1]);
    }

    #[test]
    fn oov_becomes_unk() {
        let v = vocab_with(&["a"]);
        let e = encode(&["zzzqqq"], &v, 4);
        assert_eq!(e.indices, [UNK_INDEX, PAD_INDEX, PAD_INDEX, PAD_INDEX]);
    }

    fn tweet_text() -> impl Strategy<Value = String> {
        let piece = prop_oneof![
            "[a-zA-Z]{1,8}",
            "[A-Z]{2,5}",
            "[0-9]{1,4}",
            Just(":)".to_string()),
            Just(":L".to_string()),
            Just("<3".to_string()),
            Just("!!!".to_string()),
            Just("?!?".to_string()),
            Just("...".to_string()),
            Just("http://t.co/x1".to_string()),
            Just("@user".to_string()),
            "#[a-zA-Z]{1,8}",
            ("[a-z]{1,3}", "[a-zA-Z]", 3usize..6).prop_map(|(a, c, k)| a + &c.repeat(k)),
            "[/,;:'()&-]",
            Just("é".to_string()),
        ];
        prop::collection::vec((piece, prop_oneof![Just(" "), Just(""), Just("  ")]), 0..12)
            .prop_map(|v| v.into_iter().map(|(a, b)| a + b).collect())
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in tweet_text()) {
            let once = normalize(&s);
            prop_assert_eq!(normalize(&once), once);
        }

        #[test]
        fn tokens_have_no_whitespace(s in tweet_text()) {
            let toks = preprocess(&s);
            prop_assert!(toks.iter().all(|t| !t.is_empty() && !t.chars().any(char::is_whitespace)));
            if !s.trim().is_empty() {
                prop_assert!(!toks.is_empty());
            }
        }

        #[test]
        fn encoding_respects_length_and_vocab(s in tweet_text(), n in 1usize..20) {
            let toks = preprocess(&s);
            let v = vocab_with(&["the", "way", "ok"]);
            let e = encode(&toks, &v, n);
            let again = encode(&toks, &v, n);
            prop_assert_eq!(&e, &again);
            prop_assert_eq!(e.mask.iter().map(|&m| m as usize).sum::<usize>(), toks.len().min(n));
            prop_assert!(e.indices.iter().all(|&i| i < v.len()));
            for (i, &m) in e.mask.iter().enumerate() {
                prop_assert_eq!(m == 0, e.indices[i] == PAD_INDEX);
                if i > 0 { prop_assert!(m <= e.mask[i - 1]); }
            }
        }
    }
}
