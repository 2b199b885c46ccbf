//! Twitter-style text normalization.
//!
//! A rule-for-rule port of the GloVe Twitter preprocessing script, with tags
//! emitted in lowercase, the all-caps rule restricted to runs of uppercase
//! letters, and a final lowercasing. Whitespace is collapsed and the rule pass
//! is repeated until it reaches a fixed point, so `normalize` is idempotent.

use std::sync::LazyLock;

use fancy_regex::Regex as FancyRegex;
use regex::{Captures, Regex};

/// Bumped whenever the normalization output changes for any input.
pub const PREPROCESSING_VERSION: &str = "glove-twitter-1";

pub const URL: &str = "<url>";
pub const USER: &str = "<user>";
pub const SMILE: &str = "<smile>";
pub const LOLFACE: &str = "<lolface>";
pub const SADFACE: &str = "<sadface>";
pub const NEUTRALFACE: &str = "<neutralface>";
pub const HEART: &str = "<heart>";
pub const NUMBER: &str = "<number>";
pub const HASHTAG: &str = "<hashtag>";
pub const REPEAT: &str = "<repeat>";
pub const ELONG: &str = "<elong>";
pub const ALLCAPS: &str = "<allcaps>";

/// Every tag token `normalize` can emit.
pub const TAG_TOKENS: [&str; 12] = [
    URL,
    USER,
    SMILE,
    LOLFACE,
    SADFACE,
    NEUTRALFACE,
    HEART,
    NUMBER,
    HASHTAG,
    REPEAT,
    ELONG,
    ALLCAPS,
];

const MAX_PASSES: usize = 8;

const EYES: &str = "[8:=;]";
const NOSE: &str = "['`\\-]?";

struct Rules {
    url: Regex,
    user: Regex,
    smile: Regex,
    lolface: Regex,
    sadface: Regex,
    neutralface: Regex,
    heart: Regex,
    number: Regex,
    hashtag: Regex,
    repeat: Regex,
    elong: FancyRegex,
    allcaps: Regex,
}

static RULES: LazyLock<Rules> = LazyLock::new(|| {
    let re = |p: &str| Regex::new(p).expect("static pattern");
    Rules {
        url: re(r"(?s)https?://\S+\b|www\.(\w+\.)+\S*"),
        user: re(r"@\w+"),
        smile: re(&format!("(?i){EYES}{NOSE}[)d]+|[)d]+{NOSE}{EYES}")),
        lolface: re(&format!("(?i){EYES}{NOSE}p+")),
        sadface: re(&format!(r"{EYES}{NOSE}\(+|\)+{NOSE}{EYES}")),
        neutralface: re(&format!("{EYES}{NOSE}[/|l*]")),
        heart: re("<3"),
        number: re(r"[-+]?[.\d]*[\d]+[:,.\d]*"),
        hashtag: re(r"#\S+"),
        repeat: re(r"([!?.]){2,}"),
        elong: FancyRegex::new(r"(?s)\b(\S*?)(.)\2{2,}\b").expect("static pattern"),
        allcaps: re(r"[A-Z]{2,}"),
    }
});

/// Normalizes raw tweet text. Total: empty input gives empty output.
pub fn normalize(raw: &str) -> String {
    let mut out = normalize_pass(raw);
    for _ in 0..MAX_PASSES {
        let next = normalize_pass(&out);
        if next == out {
            break;
        }
        out = next;
    }
    out
}

/// One application of the substitution rules, in script order.
fn normalize_pass(raw: &str) -> String {
    let r = &*RULES;
    let text = r.url.replace_all(raw, URL);
    let text = text.replace('/', " / ");
    let text = r.user.replace_all(&text, USER);
    let text = r.smile.replace_all(&text, SMILE);
    let text = r.lolface.replace_all(&text, LOLFACE);
    let text = r.sadface.replace_all(&text, SADFACE);
    let text = r.neutralface.replace_all(&text, NEUTRALFACE);
    let text = r.heart.replace_all(&text, HEART);
    let text = r.number.replace_all(&text, NUMBER);
    let text = r.hashtag.replace_all(&text, |c: &Captures| expand_hashtag(&c[0][1..]));
    let text = r
        .repeat
        .replace_all(&text, |c: &Captures| format!("{} {REPEAT}", &c[1]));
    let text = r
        .elong
        .replace_all(&text, |c: &fancy_regex::Captures| format!("{}{} {ELONG}", &c[1], &c[2]));
    let text = r
        .allcaps
        .replace_all(&text, |c: &Captures| format!("{} {ALLCAPS}", c[0].to_lowercase()));
    text.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
}

/// `#FooBar` becomes `<hashtag> Foo Bar`; an all-caps body is kept whole and
/// flagged.
fn expand_hashtag(body: &str) -> String {
    if body.to_uppercase() == body {
        return format!("{HASHTAG} {body} {ALLCAPS}");
    }
    let mut out = String::from(HASHTAG);
    let mut start = 0;
    for (i, ch) in body.char_indices() {
        if i > 0 && ch.is_ascii_uppercase() {
            out.push(' ');
            out.push_str(&body[start..i]);
            start = i;
        }
    }
    out.push(' ');
    out.push_str(&body[start..]);
    out
}
