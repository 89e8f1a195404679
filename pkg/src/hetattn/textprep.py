"""Text normalization, tokenization, vocab building and a fallback POS tagger.

Normalization rules (applied in this order, then lowercasing and whitespace
collapsing; the pipeline is idempotent):

  1. URLs (scheme://..., www...., bare domain with a common TLD) -> <url>
  2. user mentions (whitespace- or start-anchored +Name / @Name)  -> <user>
  3. ASCII emoticons from the list below and unicode emoji        -> <emo>

The tagger emits single-letter tags compatible with social-media tagsets:
N noun, V verb, A adjective, R adverb, O pronoun, D determiner,
P pre/postposition, & conjunction, ! interjection, $ numeral,
, punctuation, U url, E emoticon, @ mention, # hashtag, X other.
"""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field

PAD = "<pad>"
UNK = "<unk>"
URL = "<url>"
EMO = "<emo>"
USER = "<user>"

_URL_RE = re.compile(
    r"(?:https?://\S+|www\.\S+|\b[\w.-]+\.(?:com|org|net|co|io|gov|edu)(?:/\S*)?)",
    re.IGNORECASE)
_MENTION_RE = re.compile(r"(?:(?<=\s)|^)[+@][A-Za-z]\w*")

_EMOTICONS = (
    ":)", ":(", ":-)", ":-(", ";)", ";-)", ":D", ":-D", "xD", "XD",
    ":P", ":-P", ":p", ":/", ":-/", ":|", ":'(", "<3", ":o", ":O",
    "=)", "=(", ":*", "^^", "^_^", "-_-", "o_O",
)
_EMOTICON_RE = re.compile(
    "(?:(?<=\\s)|^)(?:" + "|".join(re.escape(e) for e in _EMOTICONS) + ")(?=\\s|$)")
# Miscellaneous symbols, dingbats, emoji and supplemental pictograph blocks.
_EMOJI_RE = re.compile("[☀-➿\U0001f000-\U0001faff️]+")

_TRAILING_PUNCT = ".,!?;:"
_SPECIALS = {URL, EMO, USER}


def normalize(text: str) -> str:
    """Replace urls/mentions/emoticons with special symbols, lowercase,
    collapse whitespace. Idempotent."""
    text = _URL_RE.sub(URL, text)
    text = _MENTION_RE.sub(USER, text)
    text = _EMOTICON_RE.sub(EMO, text)
    text = _EMOJI_RE.sub(f" {EMO} ", text)
    text = text.lower()
    return " ".join(text.split())


def tokenize(text: str) -> list[str]:
    """Whitespace split with terminal punctuation peeled into own tokens.

    Special symbols (<url>, <emo>, <user>) pass through intact.
    """
    tokens = []
    for raw in text.split():
        if raw in _SPECIALS:
            tokens.append(raw)
            continue
        tail = []
        while len(raw) > 1 and raw[-1] in _TRAILING_PUNCT:
            tail.append(raw[-1])
            raw = raw[:-1]
        tokens.append(raw)
        tokens.extend(reversed(tail))
    return tokens


_CLOSED_CLASS = {}
for _tag, _words in {
    "D": "the a an this that these those each every some any no all both either",
    "O": ("i you he she it we they me him her us them mine yours my your his "
          "its our their who whom what which myself yourself himself herself "
          "itself ourselves themselves"),
    "P": ("in on at of to for with from by about as into over under between "
          "through during before after above below off near against"),
    "&": "and or but nor so yet because although while if unless",
    "V": ("be is am are was were been being do does did done have has had "
          "having can will would should could may might must shall"),
    "R": "not very too also just never always often really quite rather",
    "!": "yes no yeah nah lol haha hey wow oh please thanks ok okay omg wtf",
}.items():
    for _w in _words.split():
        _CLOSED_CLASS[_w] = _tag

_SUFFIX_RULES = (
    (("ing", "ed"), "V"),
    (("ly",), "R"),
    (("ous", "ful", "ive", "able", "ible", "ic", "ish"), "A"),
    (("tion", "sion", "ness", "ment", "ity", "ism", "ist", "er", "ers"), "N"),
)

_NUMERIC_RE = re.compile(r"^[\d.,%$/-]*\d[\d.,%$/-]*$")
_PUNCT_RE = re.compile(r"^[^\w\s]+$")


def pos_tag(tokens: list[str]) -> list[str]:
    """Deterministic fallback tagger: closed-class lookup, suffix
    heuristics, default N. Output length always equals input length."""
    tags = []
    for tok in tokens:
        if tok == URL:
            tags.append("U")
        elif tok == EMO:
            tags.append("E")
        elif tok == USER:
            tags.append("@")
        elif tok.startswith("#") and len(tok) > 1:
            tags.append("#")
        elif _NUMERIC_RE.match(tok):
            tags.append("$")
        elif _PUNCT_RE.match(tok):
            tags.append(",")
        elif tok in _CLOSED_CLASS:
            tags.append(_CLOSED_CLASS[tok])
        else:
            for suffixes, tag in _SUFFIX_RULES:
                if len(tok) > 3 and tok.endswith(suffixes):
                    tags.append(tag)
                    break
            else:
                tags.append("N")
    return tags


@dataclass
class Vocab:
    """Bijective token<->index map with reserved special slots; PAD is 0."""

    index: dict[str, int] = field(default_factory=dict)
    tokens: list[str] = field(default_factory=list)

    @classmethod
    def from_counts(cls, counts: Counter, min_count: int = 1,
                    specials: tuple[str, ...] = (PAD, UNK, URL, EMO, USER)):
        v = cls()
        for s in specials:
            v._push(s)
        kept = sorted((t for t, c in counts.items()
                       if c >= min_count and t not in v.index),
                      key=lambda t: (-counts[t], t))
        for t in kept:
            v._push(t)
        return v

    def _push(self, token: str):
        self.index[token] = len(self.tokens)
        self.tokens.append(token)

    def __len__(self):
        return len(self.tokens)

    def lookup(self, token: str) -> int:
        return self.index.get(token, self.index.get(UNK, 0))

    def encode(self, tokens: list[str]) -> list[int]:
        return [self.lookup(t) for t in tokens]

    @property
    def pad_index(self) -> int:
        return self.index[PAD]

    @property
    def unk_index(self) -> int:
        return self.index[UNK]


def build_vocab(train_comments, min_count: int = 2) -> tuple[Vocab, Vocab]:
    """Word and POS vocabs from the training split only.

    Word tokens below min_count map to UNK; the POS vocab keeps every tag.
    """
    word_counts = Counter()
    pos_counts = Counter()
    for comment in train_comments:
        for sentence in comment.sentences:
            for token in sentence.tokens:
                word_counts[token.surface] += 1
                pos_counts[token.pos] += 1
    word_vocab = Vocab.from_counts(word_counts, min_count=min_count)
    pos_vocab = Vocab.from_counts(pos_counts, min_count=1,
                                  specials=(PAD, UNK))
    return word_vocab, pos_vocab
