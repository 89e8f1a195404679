"""Nested comment/sentence data model, dataset I/O, rationale derivation,
split management and a synthetic heterogeneous-corpus generator.

Interchange format: UTF-8 JSON lines, one comment per line:

    {"id": str, "abusive": bool,
     "categories": {"gender": bool, "race": bool, "appearance": bool,
                    "ideology": bool},
     "sentences": [{"abusive": bool, "tokens": [str, ...],
                    "pos": [str, ...] (optional)}]}
"""
from __future__ import annotations

import json
import logging
import string
from dataclasses import dataclass, field, replace

import numpy as np

from . import textprep

log = logging.getLogger(__name__)

CATEGORIES = ("gender", "race", "appearance", "ideology")

DEFAULT_L_MAX = 256


@dataclass
class Token:
    surface: str
    pos: str = "X"


@dataclass
class Sentence:
    tokens: list[Token]
    abusive: bool = False

    def __len__(self):
        return len(self.tokens)


@dataclass
class Comment:
    id: str
    sentences: list[Sentence]
    abusive: bool = False
    categories: tuple[bool, bool, bool, bool] = (False, False, False, False)

    @property
    def n_tokens(self) -> int:
        return sum(len(s) for s in self.sentences)

    def tokens(self):
        for s in self.sentences:
            yield from s.tokens

    def sentence_index_per_token(self) -> list[int]:
        out = []
        for i, s in enumerate(self.sentences):
            out.extend([i] * len(s))
        return out


@dataclass
class GroundAttention:
    """Rationale vector over a comment's (padded) token positions.

    Entries are 0 or exactly 1/support; padding stays 0.
    """

    weights: np.ndarray
    support: int


@dataclass
class SplitSpec:
    seed: int
    train_ids: list[str]
    val_ids: list[str]
    test_ids: list[str]

    def select(self, comments):
        by_id = {c.id: c for c in comments}
        return ([by_id[i] for i in self.train_ids],
                [by_id[i] for i in self.val_ids],
                [by_id[i] for i in self.test_ids])


def _parse_sentence(obj, line_no: int) -> Sentence:
    if not isinstance(obj, dict) or "tokens" not in obj or "abusive" not in obj:
        raise ValueError(f"line {line_no}: sentence needs 'tokens' and 'abusive'")
    surfaces = obj["tokens"]
    if not surfaces:
        raise ValueError(f"line {line_no}: empty sentence")
    pos = obj.get("pos")
    if pos is None:
        pos = textprep.pos_tag(surfaces)
    elif len(pos) != len(surfaces):
        raise ValueError(f"line {line_no}: pos length != token length")
    return Sentence(tokens=[Token(s, p) for s, p in zip(surfaces, pos)],
                    abusive=bool(obj["abusive"]))


def _truncate(comment: Comment, l_max: int) -> tuple[Comment, bool]:
    if comment.n_tokens <= l_max:
        return comment, False
    budget = l_max
    kept = []
    for s in comment.sentences:
        if budget <= 0:
            break
        take = s.tokens[:budget]
        budget -= len(take)
        kept.append(Sentence(tokens=take, abusive=s.abusive))
    return replace(comment, sentences=kept), True


def load_dataset(path, l_max: int = DEFAULT_L_MAX) -> list[Comment]:
    """Read interchange JSONL; comments longer than l_max are truncated
    from the tail (a warning with the count is logged)."""
    comments = []
    seen_ids = set()
    truncated = 0
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise ValueError(f"line {line_no}: invalid JSON ({e.msg})") from e
            for key in ("id", "abusive", "sentences"):
                if key not in obj:
                    raise ValueError(f"line {line_no}: missing '{key}'")
            cid = str(obj["id"])
            if cid in seen_ids:
                raise ValueError(f"line {line_no}: duplicate id '{cid}'")
            seen_ids.add(cid)
            if not obj["sentences"]:
                raise ValueError(f"line {line_no}: comment has no sentences")
            abusive = bool(obj["abusive"])
            cat_obj = obj.get("categories", {})
            cats = tuple(bool(cat_obj.get(name, False)) for name in CATEGORIES)
            if any(cats) and not abusive:
                raise ValueError(
                    f"line {line_no}: category flags on non-abusive comment")
            sentences = [_parse_sentence(s, line_no) for s in obj["sentences"]]
            comment = Comment(id=cid, sentences=sentences, abusive=abusive,
                              categories=cats)
            comment, was_cut = _truncate(comment, l_max)
            truncated += was_cut
            comments.append(comment)
    if truncated:
        log.warning("truncated %d comments to %d tokens", truncated, l_max)
    return comments


def save_dataset(comments, path):
    """Write interchange JSONL; byte-identical for identical inputs."""
    with open(path, "w", encoding="utf-8") as f:
        for c in comments:
            obj = {
                "id": c.id,
                "abusive": c.abusive,
                "categories": dict(zip(CATEGORIES, c.categories)),
                "sentences": [{
                    "abusive": s.abusive,
                    "tokens": [t.surface for t in s.tokens],
                    "pos": [t.pos for t in s.tokens],
                } for s in c.sentences],
            }
            f.write(json.dumps(obj, separators=(",", ":")) + "\n")


def derive_ground_attention(comment: Comment, l_max: int) -> GroundAttention:
    """Tokens of abusive sentences get weight 1/support; everything else
    (benign tokens, padding) gets 0. support = 0 yields the zero vector."""
    weights = np.zeros(l_max)
    marks = []
    for s in comment.sentences:
        marks.extend([s.abusive] * len(s))
    marks = marks[:l_max]
    support = sum(marks)
    if support > 0:
        for pos, abusive in enumerate(marks):
            if abusive:
                weights[pos] = 1.0 / support
    return GroundAttention(weights=weights, support=support)


def split_dataset(comments, seed: int) -> SplitSpec:
    """Deterministic shuffled 3:1:1 comment-level partition."""
    if len(comments) < 5:
        raise ValueError("need at least 5 comments to split 3:1:1")
    ids = [c.id for c in comments]
    order = np.random.default_rng(seed).permutation(len(ids))
    shuffled = [ids[i] for i in order]
    n = len(ids)
    n_test = round(n / 5)
    n_val = round(n / 5)
    return SplitSpec(seed=seed,
                     train_ids=shuffled[:n - n_val - n_test],
                     val_ids=shuffled[n - n_val - n_test:n - n_test],
                     test_ids=shuffled[n - n_test:])


def explode_sentences(comments) -> list[Comment]:
    """Original comments plus one single-sentence comment per sentence,
    carrying the sentence's abusive label (the C+S training pool).

    A sentence instance inherits the parent's category flags only when
    the sentence itself is abusive.
    """
    out = []
    for c in comments:
        out.append(c)
        for k, s in enumerate(c.sentences):
            cats = c.categories if s.abusive else (False,) * 4
            out.append(Comment(id=f"{c.id}#s{k}", sentences=[s],
                               abusive=s.abusive, categories=cats))
    return out


# -- synthetic corpus ------------------------------------------------------

@dataclass
class SynthConfig:
    """Knobs for the synthetic heterogeneous corpus.

    Difficulty comes from a shared lexicon: abusive sentences are dense in
    "shared" tokens that benign text also uses sparsely, and fully unique
    abuse tokens exist only for the (1 - overlap) fraction of the abusive
    lexicon. Decoy benign sentences with elevated shared-token density act
    as attention attractors.
    """

    n_comments: int = 1000
    abusive_fraction: float = 0.275
    mix_fraction: float = 0.434
    sentence_range: tuple[int, int] = (2, 5)
    length_range: tuple[int, int] = (3, 9)
    benign_vocab: int = 500
    abusive_vocab: int = 60
    overlap: float = 0.7
    category_priors: tuple[float, float, float, float] = (0.45, 0.10, 0.35, 0.25)
    markers_per_category: int = 6
    abusive_density: float = 0.5
    benign_density: float = 0.08
    decoy_density: float = 0.30
    decoy_rate: float = 0.25
    mixed_decoy_rate: float = 0.5
    marker_rate: float = 0.3
    marker_noise: float = 0.02
    seed: int = 0

    def validate(self):
        for name in ("abusive_fraction", "mix_fraction", "overlap",
                     "abusive_density", "benign_density", "decoy_density",
                     "decoy_rate", "mixed_decoy_rate", "marker_rate",
                     "marker_noise"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        for name in ("sentence_range", "length_range"):
            lo, hi = getattr(self, name)
            if lo < 1 or hi < lo:
                raise ValueError(f"{name} must be a nonempty range, got {lo}..{hi}")
        if self.mix_fraction > 0 and self.sentence_range[1] < 2:
            raise ValueError("mix_fraction > 0 needs sentence_range max >= 2")
        if self.n_comments < 1:
            raise ValueError("n_comments must be positive")
        if min(self.benign_vocab, self.abusive_vocab) < 2:
            raise ValueError("lexicon sizes must be >= 2")

    @classmethod
    def from_mapping(cls, mapping: dict) -> "SynthConfig":
        cfg = cls()
        for key, raw in mapping.items():
            if not hasattr(cfg, key):
                raise ValueError(f"unknown synth config key: {key}")
            current = getattr(cfg, key)
            if isinstance(current, tuple) and isinstance(current[0], bool):
                value = tuple(s.strip() in ("1", "true", "yes")
                              for s in str(raw).split(","))
            elif isinstance(current, tuple):
                parts = str(raw).split(",")
                value = tuple(type(current[0])(p) for p in parts)
            elif isinstance(current, bool):
                value = str(raw).strip() in ("1", "true", "yes")
            else:
                value = type(current)(raw)
            setattr(cfg, key, value)
        return cfg


def _word(prefix: str, i: int) -> str:
    letters = string.ascii_lowercase
    out = []
    i += 1
    while i:
        i, r = divmod(i - 1, 26)
        out.append(letters[r])
    return prefix + "".join(reversed(out))


class _Lexicon:
    def __init__(self, cfg: SynthConfig):
        n_shared = round(cfg.overlap * cfg.abusive_vocab)
        self.benign = [_word("b", i) for i in range(cfg.benign_vocab)]
        self.shared = [_word("s", i) for i in range(n_shared)]
        self.unique = [_word("k", i) for i in range(cfg.abusive_vocab - n_shared)]
        self.markers = [[_word("m" + name[0], i)
                         for i in range(cfg.markers_per_category)]
                        for name in CATEGORIES]
        self.all_markers = [m for ms in self.markers for m in ms]


def _benign_sentence(rng, cfg, lex, length, decoy: bool) -> list[str]:
    density = cfg.decoy_density if decoy else cfg.benign_density
    words = []
    for _ in range(length):
        r = rng.random()
        if r < cfg.marker_noise:
            words.append(lex.all_markers[rng.integers(len(lex.all_markers))])
        elif r < cfg.marker_noise + density and lex.shared:
            words.append(lex.shared[rng.integers(len(lex.shared))])
        else:
            words.append(lex.benign[rng.integers(len(lex.benign))])
    return words


def _abusive_sentence(rng, cfg, lex, length, cats) -> list[str]:
    pool = lex.shared + lex.unique
    cat_ids = [i for i, on in enumerate(cats) if on]
    words = []
    for _ in range(length):
        if rng.random() < cfg.abusive_density:
            if cat_ids and rng.random() < cfg.marker_rate:
                ms = lex.markers[cat_ids[rng.integers(len(cat_ids))]]
                words.append(ms[rng.integers(len(ms))])
            else:
                words.append(pool[rng.integers(len(pool))])
        else:
            words.append(lex.benign[rng.integers(len(lex.benign))])
    return words


def synth_corpus(cfg: SynthConfig) -> list[Comment]:
    """Deterministic synthetic corpus with sentence-level heterogeneity.

    Exactly round(n * abusive_fraction) comments are abusive, of which
    round(n_abusive * mix_fraction) also contain at least one benign
    sentence. Abusive sentences embed category marker tokens that set the
    comment's category flags.
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    lex = _Lexicon(cfg)

    n = cfg.n_comments
    n_abusive = round(n * cfg.abusive_fraction)
    n_mixed = round(n_abusive * cfg.mix_fraction)
    order = rng.permutation(n)
    roles = ["benign"] * n
    for j, idx in enumerate(order[:n_abusive]):
        roles[idx] = "mixed" if j < n_mixed else "pure"

    s_lo, s_hi = cfg.sentence_range
    l_lo, l_hi = cfg.length_range
    comments = []
    for i in range(n):
        role = roles[i]
        n_sent = int(rng.integers(s_lo, s_hi + 1))
        if role == "mixed":
            n_sent = max(n_sent, 2)
        lengths = [int(rng.integers(l_lo, l_hi + 1)) for _ in range(n_sent)]

        if role == "benign":
            sentences = [
                Sentence(tokens=[Token(w) for w in _benign_sentence(
                    rng, cfg, lex, ln, rng.random() < cfg.decoy_rate)])
                for ln in lengths]
            comments.append(Comment(id=f"synth-{i:05d}", sentences=sentences))
            continue

        cats = tuple(rng.random() < p for p in cfg.category_priors)
        if not any(cats):
            priors = np.asarray(cfg.category_priors)
            pick = rng.choice(4, p=priors / priors.sum())
            cats = tuple(j == pick for j in range(4))
        if role == "pure":
            n_abu = n_sent
        else:
            n_abu = int(rng.integers(1, n_sent))
        abusive_at = set(rng.choice(n_sent, size=n_abu, replace=False).tolist())

        sentences = []
        for k, ln in enumerate(lengths):
            if k in abusive_at:
                words = _abusive_sentence(rng, cfg, lex, ln, cats)
                sentences.append(Sentence(
                    tokens=[Token(w) for w in words], abusive=True))
            else:
                words = _benign_sentence(rng, cfg, lex, ln,
                                         rng.random() < cfg.mixed_decoy_rate)
                sentences.append(Sentence(tokens=[Token(w) for w in words]))
        comments.append(Comment(id=f"synth-{i:05d}", sentences=sentences,
                                abusive=True, categories=cats))

    for c in comments:
        for s in c.sentences:
            tags = textprep.pos_tag([t.surface for t in s.tokens])
            for t, tag in zip(s.tokens, tags):
                t.pos = tag
    return comments
