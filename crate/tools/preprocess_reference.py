"""Reference port of the GloVe Twitter preprocessing script (preprocess-twitter.rb).

Rule order and regexes follow the Ruby original. Differences, matching the
widely used Python port of that script:
  * tag tokens are emitted in lowercase (`<url>` rather than `<URL>`);
  * the all-caps rule only fires on runs of two or more uppercase letters;
  * the result is lowercased.
Two further changes make the output a fixed point of the transformation:
whitespace runs are collapsed, and the pass is repeated until the text
stops changing.
"""

import re

FLAGS = re.MULTILINE | re.DOTALL
EYES = r"[8:=;]"
NOSE = r"['`\-]?"
MAX_PASSES = 8


def _hashtag(m):
    body = m.group()[1:]
    if body.upper() == body:
        return "<hashtag> {} <allcaps>".format(body)
    parts = [p for p in re.split(r"(?=[A-Z])", body) if p]
    return " ".join(["<hashtag>"] + parts)


def _allcaps(m):
    return m.group().lower() + " <allcaps>"


def normalize_pass(text):
    sub = lambda pat, repl, t, flags=FLAGS: re.sub(pat, repl, t, flags=flags)
    text = sub(r"https?://\S+\b|www\.(\w+\.)+\S*", "<url>", text)
    text = text.replace("/", " / ")
    text = sub(r"@\w+", "<user>", text)
    text = sub(r"{e}{n}[)d]+|[)d]+{n}{e}".format(e=EYES, n=NOSE), "<smile>", text, FLAGS | re.IGNORECASE)
    text = sub(r"{e}{n}p+".format(e=EYES, n=NOSE), "<lolface>", text, FLAGS | re.IGNORECASE)
    text = sub(r"{e}{n}\(+|\)+{n}{e}".format(e=EYES, n=NOSE), "<sadface>", text)
    text = sub(r"{e}{n}[/|l*]".format(e=EYES, n=NOSE), "<neutralface>", text)
    text = sub(r"<3", "<heart>", text)
    text = sub(r"[-+]?[.\d]*[\d]+[:,.\d]*", "<number>", text)
    text = sub(r"#\S+", _hashtag, text)
    text = sub(r"([!?.]){2,}", r"\1 <repeat>", text)
    text = sub(r"\b(\S*?)(.)\2{2,}\b", r"\1\2 <elong>", text)
    text = sub(r"([A-Z]){2,}", _allcaps, text)
    return " ".join(text.lower().split())


def normalize(text):
    out = normalize_pass(text)
    for _ in range(MAX_PASSES):
        nxt = normalize_pass(out)
        if nxt == out:
            break
        out = nxt
    return out
