from collections import Counter

import numpy as np

from hetattn import textprep
from hetattn.corpus import Comment, Sentence, Token
from hetattn.textprep import (PAD, UNK, Vocab, build_vocab, normalize,
                              pos_tag, tokenize)


class TestNormalize:
    def test_url_and_emoticon(self):
        assert normalize("see http://x.co :)") == "see <url> <emo>"

    def test_leading_mention(self):
        assert normalize("+Username hi") == "<user> hi"

    def test_lowercase(self):
        assert normalize("HELLO") == "hello"

    def test_at_mention_mid_text(self):
        assert normalize("thanks @Bob !") == "thanks <user> !"

    def test_www_and_bare_domain(self):
        assert normalize("go to www.example.org now") == "go to <url> now"
        assert normalize("at example.com/page") == "at <url>"

    def test_unicode_emoji(self):
        assert normalize("nice \U0001f600 day") == "nice <emo> day"

    def test_whitespace_collapse(self):
        assert normalize("a   b\t c") == "a b c"

    def test_idempotent(self):
        cases = [
            "see http://x.co :)",
            "+User HELLO   :D www.x.com",
            "plain words only",
            "\U0001f600 @Name +Other :( text",
            "",
        ]
        for text in cases:
            once = normalize(text)
            assert normalize(once) == once

    def test_plus_arithmetic_untouched(self):
        assert normalize("2+2 is 4") == "2+2 is 4"


class TestTokenize:
    def test_terminal_punct(self):
        assert tokenize("you're a cunt.") == ["you're", "a", "cunt", "."]

    def test_special_token_intact(self):
        assert tokenize("<url>") == ["<url>"]

    def test_empty(self):
        assert tokenize("") == []

    def test_multiple_terminal_punct(self):
        assert tokenize("what?!") == ["what", "?", "!"]

    def test_bare_punct_kept(self):
        assert tokenize("wait .") == ["wait", "."]


class TestPosTag:
    def test_closed_class(self):
        assert pos_tag(["the"]) == ["D"]

    def test_suffix_rule_verb(self):
        assert pos_tag(["running"]) == ["V"]

    def test_special_url(self):
        assert pos_tag(["<url>"]) == ["U"]

    def test_assorted(self):
        tokens = ["<emo>", "<user>", "#tag", "42", ".", "quickly", "nice",
                  "happiness", "dog"]
        assert pos_tag(tokens) == ["E", "@", "#", "$", ",", "R", "A", "N", "N"]

    def test_length_preserved(self):
        rng = np.random.default_rng(0)
        alphabet = "abcdefghij.!#4"
        for _ in range(50):
            tokens = ["".join(rng.choice(list(alphabet),
                                         size=rng.integers(1, 8)))
                      for _ in range(rng.integers(0, 12))]
            assert len(pos_tag(tokens)) == len(tokens)

    def test_deterministic(self):
        tokens = ["the", "running", "dog", "barked", "loudly", "."]
        assert pos_tag(tokens) == pos_tag(tokens)


def _comment(words, cid="c0"):
    toks = [Token(w, "N") for w in words]
    return Comment(id=cid, sentences=[Sentence(tokens=toks)])


class TestVocab:
    def test_min_count_prunes(self):
        comments = [_comment(["a"] * 5 + ["b"])]
        wv, _ = build_vocab(comments, min_count=2)
        assert "a" in wv.index
        assert "b" not in wv.index

    def test_unknown_maps_to_unk(self):
        comments = [_comment(["a"] * 5 + ["b"])]
        wv, _ = build_vocab(comments, min_count=2)
        assert wv.lookup("b") == wv.unk_index
        assert wv.lookup("never-seen") == wv.unk_index

    def test_pad_reserved_at_zero(self):
        wv, pv = build_vocab([_comment(["x", "x"])], min_count=1)
        assert wv.pad_index == 0
        assert wv.tokens[0] == PAD
        assert pv.pad_index == 0

    def test_bijective(self):
        wv, _ = build_vocab([_comment(list("abcabc"))], min_count=1)
        for tok, idx in wv.index.items():
            assert wv.tokens[idx] == tok

    def test_no_test_leakage(self):
        train = [_comment(["seen"] * 3, "t")]
        wv, _ = build_vocab(train, min_count=1)
        test_tokens = ["unseen1", "unseen2"]
        assert all(wv.lookup(t) == wv.unk_index for t in test_tokens)

    def test_pos_vocab_keeps_everything(self):
        c = Comment(id="c", sentences=[Sentence(
            tokens=[Token("a", "N"), Token("b", "Z")])])
        _, pv = build_vocab([c], min_count=5)
        assert "Z" in pv.index

    def test_deterministic_ordering(self):
        counts = Counter({"b": 3, "a": 3, "c": 1})
        v1 = Vocab.from_counts(counts, min_count=1)
        v2 = Vocab.from_counts(counts, min_count=1)
        assert v1.tokens == v2.tokens
        # frequency-ranked, lexicographic tie-break, after the specials
        assert v1.tokens[-3:] == ["a", "b", "c"]
