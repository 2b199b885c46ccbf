"""Regenerates the text-pipeline golden fixtures.

    pip install nltk
    python3 tools/gen_fixtures.py

Writes into crates/core/tests/fixtures/:
  preprocess_golden.jsonl  tweet -> normalized text -> TweetTokenizer tokens
  tweet_tokenizer.jsonl    random strings -> TweetTokenizer tokens
"""

import json
import os
import random

from nltk.tokenize import TweetTokenizer

from preprocess_reference import normalize

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "..", "crates", "core", "tests", "fixtures")

TWEETS = [
    "",
    "Check http://t.co/abc",
    "hello @jane #WOW!!!",
    "You won't believe what happened next...",
    "This one trick will change your life FOREVER!!",
    "10 things only 90s kids remember #ThrowbackThursday",
    "Can you guess which celebrity this is? :)",
    "BREAKING: Senate passes $1.5 trillion tax bill https://t.co/x9Yz via @nytimes",
    "The 23 most adorable puppies of 2016 <3 <3",
    "She said WHAT?! :-P",
    "Sooooo good. You HAVE to try this recipe!!!",
    "Why do cats love boxes? Scientists finally have an answer ;-)",
    "Read more: www.example.com/story/123 ... #news #BigStory",
    "I'm not crying, you're crying :(",
    "Dad: are we there yet? Me: nope :/",
    "What happens when you mix Coke & Mentos?",
    "Stock markets fall 3.2% as oil prices rise to $45,000.50 per... wait",
    "This is what 100,000 people look like from above",
    "RT @user_1: The &amp; sign &lt;3 is &quot;weird&quot;",
    "OMG!!!! wayyyy too cute!!1!",
    "Apple announces iPhone 7 - here's everything you need to know",
    "Man buys 1/2 a house for 12:30 p.m. meeting",
    "He did it again... :D :D :D",
    "Is this the end of the world as we know it???",
    "Trump's new plan: build a wall, make Mexico pay #MAGA",
    "Quiz: Which Disney princess are you? =)",
    "Café owner serves crème brûlée to 1,000 guests",
    "Don't miss this!!! Only 24 hours left -> http://bit.ly/2abc",
    "Here's why you should NEVER eat this before bed...",
    "This tweet ends with an emoticon :-(",
    "#2017 was a year. #HappyNewYear2018 @everyone",
    "Watch: dog saves owner from fire (video) http://t.co/vid",
    "THE BEST 15 MOVIES OF ALL TIME",
    "lol ok ;p",
    "Eyes 8) and 8-( and =| and :*",
    "Two slashes // and a dash -- and ... dots",
    "Mr. Smith goes to Washington, D.C. on Jan. 5th",
    "email me at someone@example.com or call 555-123-4567",
    "The results are in: 97% of readers agree",
    "This city has been named the happiest place on Earth",
    "These photos will restore your faith in humanity",
    "Why??? Why did nobody tell me this?!?!",
]

CHARS = list("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789")
CHARS += list("  .,!?;:'\"()[]{}<>-_/\\|*#@&$%+=~`") + ["é", "ß", "ü", "日", "😀", "‍"]
PIECES = [":)", ":-(", ";p", "<3", "</3", "<url>", "<user>", "<hashtag>", "->", "<--",
          "&amp;", "&lt;", "&#39;", "&bogus;", "...", "....", "!!!!", "don't", "e-mail",
          "well-known", "3.14", "1/2", "12:30", "-5", "+7", "www.example.com", "http://x.co/a",
          "a@b.com", "@someone", "#tag", "##x", "8)", "=D", "*o*", "(a(b)c)"]


def random_string(rng):
    parts = []
    for _ in range(rng.randint(1, 12)):
        if rng.random() < 0.35:
            parts.append(rng.choice(PIECES))
        else:
            parts.append("".join(rng.choice(CHARS) for _ in range(rng.randint(1, 6))))
        parts.append(rng.choice([" ", " ", " ", "", "  "]))
    return "".join(parts)


def main():
    tok = TweetTokenizer()
    os.makedirs(OUT, exist_ok=True)
    with open(os.path.join(OUT, "preprocess_golden.jsonl"), "w", encoding="utf-8") as f:
        for raw in TWEETS:
            norm = normalize(raw)
            rec = {"input": raw, "normalized": norm, "tokens": tok.tokenize(norm)}
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")
    rng = random.Random(20170701)
    with open(os.path.join(OUT, "tweet_tokenizer.jsonl"), "w", encoding="utf-8") as f:
        for _ in range(600):
            s = random_string(rng)
            f.write(json.dumps({"input": s, "tokens": tok.tokenize(s)}, ensure_ascii=False) + "\n")
        for raw in TWEETS:
            n = normalize(raw)
            f.write(json.dumps({"input": n, "tokens": tok.tokenize(n)}, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main()
