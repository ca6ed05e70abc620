import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from helpers import fuzz_line

from phqnet import text
from phqnet.errors import CanonicalizationError, FormatError, InputError


def tokens(raw, lexicon=None):
    return list(text.canonicalize(raw, lexicon).tokens)


def test_documented_mappings():
    assert tokens("bout") == ["about"]
    assert tokens("till") == ["until"]
    assert tokens("lookin") == ["looking"]
    assert tokens("24") == ["twenty", "four"]


def test_spell_numbers():
    assert text.spell_number(0) == "zero"
    assert text.spell_number(15) == "fifteen"
    assert text.spell_number(100) == "one hundred"
    assert text.spell_number(1001) == "one thousand one"
    assert text.spell_number(999999) == "nine hundred ninety nine thousand nine hundred ninety nine"
    with pytest.raises(CanonicalizationError):
        text.spell_number(1_000_000)
    with pytest.raises(CanonicalizationError):
        tokens("1234567")


def test_tokenizer_details():
    assert tokens("I'm lookin' at it, 'really'!") == ["i'm", "looking", "at", "it", "really"]
    assert tokens("ABC123def") == ["abc", "one", "hundred", "twenty", "three", "def"]
    assert tokens("   ") == []


def test_idempotence_over_fuzz_corpus():
    rng = np.random.default_rng(0)
    for _ in range(10_000):
        first = tokens(fuzz_line(rng))
        assert tokens(" ".join(first)) == first


@settings(max_examples=300, deadline=None)
@given(st.text(max_size=60))
def test_idempotence_property(raw):
    try:
        first = tokens(raw)
    except CanonicalizationError:
        return
    assert tokens(" ".join(first)) == first
    assert all(t == t.lower() and t for t in first)


def test_lexicon_validation_and_file(tmp_path):
    with pytest.raises(FormatError):
        text.Lexicon({"Gonna": "going to"})
    with pytest.raises(FormatError):
        text.Lexicon({"gonna": "going to", "going": "go"})
    p = tmp_path / "lex.tsv"
    p.write_text("# slang\ngonna\tgoing to\n")
    lex = text.load_lexicon(p)
    assert tokens("gonna bout", lex) == ["going", "to", "about"]
    p.write_text("gonna going to\n")
    with pytest.raises(FormatError, match=":1:"):
        text.load_lexicon(p)


def test_embedding_io_round_trip(tmp_path, rng):
    table = text.EmbeddingTable(4)
    for w in ("happy", "sad", "tired"):
        table.add(w, rng.standard_normal(4))
    text.save_vectors(table, tmp_path / "v.txt")
    assert text.load_embeddings(tmp_path / "v.txt") == table


def test_embedding_format_errors(tmp_path):
    p = tmp_path / "v.txt"
    p.write_text("2 3\na 1 2 3\nb 1 2\n")
    with pytest.raises(FormatError, match=":3:"):
        text.load_embeddings(p)
    p.write_text("2 3\na 1 2 3\n")
    with pytest.raises(FormatError, match="declares 2"):
        text.load_embeddings(p)
    p.write_text("a b\n")
    with pytest.raises(FormatError, match=":1:"):
        text.load_embeddings(p)
    p.write_text("1 2\na 1 nan\n")
    with pytest.raises(FormatError):
        text.load_embeddings(p)


def test_oov_is_zero_and_missing_sentence_vector():
    table = text.EmbeddingTable(2, {"happy": [1.0, 2.0]})
    out = text.embed_tokens(text.canonicalize("Happy xyzzy"), table)
    np.testing.assert_array_equal(out, [[1, 2], [0, 0]])
    assert out.dtype == np.float32
    with pytest.raises(text.MissingVectorError):
        table["p_0"]
    with pytest.raises(InputError):
        text.embed_tokens(text.canonicalize("..."), table)
