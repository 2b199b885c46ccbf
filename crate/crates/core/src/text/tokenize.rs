//! Tweet-aware tokenizer.
//!
//! Mirrors NLTK's `TweetTokenizer` with its default options: HTML entities are
//! decoded, runs of four or more identical non-alphanumeric characters are cut
//! to three, and tokens are the successive matches of one large alternation
//! (URLs, phone numbers, emoticons, `<tag>` tokens, arrows, handles, hashtags,
//! e-mail addresses, emoji sequences, words, numbers, ellipses, anything else).

use std::sync::LazyLock;

use fancy_regex::{Captures, Regex};

use super::entities::NAMED_ENTITIES;

const URLS: &str = concat!(
    r"(?:https?:(?:/{1,3}|[a-z0-9%])|[a-z0-9.\-]{1,255}[.](?:[a-z]{2,13})/)",
    r"(?:[^\s()<>{}\[\]]+",
    r"|\([^\s()]{0,255}?\([^\s()]{1,255}\)[^\s()]{0,255}?\)",
    r"|\([^\s]{1,255}?\))+",
    r"(?:\([^\s()]{0,255}?\([^\s()]{1,255}\)[^\s()]{0,255}?\)",
    r"|\([^\s]{1,255}?\)",
    r#"|[^\s`!()\[\]{};:'".,<>?«»“”‘’])"#,
    r"|(?:(?<!@)[a-z0-9]+(?:[.\-][a-z0-9]+){0,126}[.](?:[a-z]{2,13})\b/?(?!@))",
);

const PHONE: &str = concat!(
    r"(?:(?:\+?[01][ *\-.\)]*)?",
    r"(?:[\(]?\d{3}[ *\-.\)]*)?",
    r"\d{3}[ *\-.\)]*\d{4})",
);

const EMOTICONS: &str = concat!(
    r"(?:[<>]?[:;=8][\-o\*']?[\)\]\(\[dDpP/:\}\{@\|\\]",
    r"|[\)\]\(\[dDpP/:\}\{@\|\\][\-o\*']?[:;=8][<>]?",
    r"|</?3)",
);

const EMOJI_SEQUENCE: &str = concat!(
    r".(?:[\x{1f3fb}-\x{1f3ff}]?(?:\x{200d}.[\x{1f3fb}-\x{1f3ff}]?)+",
    r"|[\x{1f3fb}-\x{1f3ff}])",
);

const FLAGS: &str = concat!(
    r"(?:[\x{1F1E6}-\x{1F1FF}]{2}",
    r"|\x{1F3F4}\x{E0067}\x{E0062}\x{E0065}\x{E006e}\x{E0067}\x{E007F}",
    r"|\x{1F3F4}\x{E0067}\x{E0062}\x{E0073}\x{E0063}\x{E0074}\x{E007F}",
    r"|\x{1F3F4}\x{E0067}\x{E0062}\x{E0077}\x{E006C}\x{E0073}\x{E007F})",
);

const WORDS: &str = concat!(
    r"(?:[^\W\d_](?:[^\W\d_]|['\-_])+[^\W\d_])",
    r"|(?:[+\-]?\d+[,/.:-]\d+[+\-]?)",
    r"|(?:[\w_]+)",
    r"|(?:\.(?:\s*\.){1,})",
    r"|(?:\S)",
);

static WORD_RE: LazyLock<Regex> = LazyLock::new(|| {
    let parts = [
        URLS,
        PHONE,
        EMOTICONS,
        r"<[^>\s]+>",
        r"[\-]+>|<[\-]+",
        r"(?:@[\w_]+)",
        r"(?:\#+[\w_]+[\w'_\-]*[\w_]+)",
        r"[\w.+-]{1,64}@[\w-]{1,63}\.(?:[\w-]\.?){1,251}[\w-]",
        EMOJI_SEQUENCE,
        FLAGS,
        WORDS,
    ];
    let pattern = format!("(?i)(?:{})", parts.join("|"));
    fancy_regex::RegexBuilder::new(&pattern)
        .delegate_size_limit(64 << 20)
        .build()
        .expect("static pattern")
});

static HANG_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"([^\p{L}\p{N}])\1{3,}").expect("static pattern"));

static ENTITY_RE: LazyLock<regex::Regex> =
    LazyLock::new(|| regex::Regex::new(r"&(#?(x?))([^&;\s]+);").expect("static pattern"));

/// Splits text into tokens; `<tag>` tokens survive as single tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let decoded = decode_entities(text);
    let safe = HANG_RE.replace_all(&decoded, |c: &Captures| c[1].repeat(3));
    WORD_RE
        .find_iter(&safe)
        .filter_map(|m| m.ok())
        .map(|m| m.as_str().to_string())
        .collect()
}

/// Replaces `&name;`, `&#123;` and `&#x1F;` references; unknown or invalid
/// references are dropped.
fn decode_entities(text: &str) -> std::borrow::Cow<'_, str> {
    ENTITY_RE.replace_all(text, |c: &regex::Captures| {
        let body = &c[3];
        let code = if c[1].is_empty() {
            NAMED_ENTITIES
                .binary_search_by(|(name, _)| name.cmp(&body))
                .ok()
                .map(|i| NAMED_ENTITIES[i].1)
        } else {
            let radix = if c[2].is_empty() { 10 } else { 16 };
            match u32::from_str_radix(body, radix) {
                Ok(n @ 0x80..=0x9F) => return cp1252(n as u8).map(String::from).unwrap_or_default(),
                Ok(n) => Some(n),
                Err(_) => None,
            }
        };
        code.and_then(char::from_u32).map(String::from).unwrap_or_default()
    })
}

/// Windows-1252 decoding of the C1 range.
fn cp1252(byte: u8) -> Option<char> {
    const HIGH: [Option<char>; 32] = [
        Some('€'),
        None,
        Some('‚'),
        Some('ƒ'),
        Some('„'),
        Some('…'),
        Some('†'),
        Some('‡'),
        Some('ˆ'),
        Some('‰'),
        Some('Š'),
        Some('‹'),
        Some('Œ'),
        None,
        Some('Ž'),
        None,
        None,
        Some('‘'),
        Some('’'),
        Some('“'),
        Some('”'),
        Some('•'),
        Some('–'),
        Some('—'),
        Some('˜'),
        Some('™'),
        Some('š'),
        Some('›'),
        Some('œ'),
        None,
        Some('ž'),
        Some('Ÿ'),
    ];
    HIGH[(byte - 0x80) as usize]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn tags_are_single_tokens() {
        assert_eq!(toks("check <url>"), ["check", "<url>"]);
    }

    #[test]
    fn empty_and_spaced() {
        assert!(toks("").is_empty());
        assert_eq!(toks("a , b"), ["a", ",", "b"]);
    }

    #[test]
    fn emoticons_and_contractions() {
        assert_eq!(toks("don't :-) ok"), ["don't", ":-)", "ok"]);
    }

    #[test]
    fn entities_decode() {
        assert_eq!(toks("a &amp; b"), ["a", "&", "b"]);
        assert_eq!(toks("&#39;x&#39;"), ["'", "x", "'"]);
        assert_eq!(toks("&bogus; z"), ["z"]);
    }

    #[test]
    fn hanging_punctuation_is_cut() {
        assert_eq!(toks("wow!!!!!!"), ["wow", "!", "!", "!"]);
    }

    #[test]
    fn entity_table_is_sorted() {
        assert!(NAMED_ENTITIES.windows(2).all(|w| w[0].0 < w[1].0));
    }
}
