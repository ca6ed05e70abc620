"""Transcript canonicalization, word-vector lookup and vector-file I/O."""

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CanonicalizationError, FormatError, InputError

DEFAULT_LEXICON = {"bout": "about", "till": "until", "lookin": "looking"}

_ONES = (
    "zero one two three four five six seven eight nine ten eleven twelve thirteen "
    "fourteen fifteen sixteen seventeen eighteen nineteen"
).split()
_TENS = "_ _ twenty thirty forty fifty sixty seventy eighty ninety".split()
_DIGITS = re.compile(r"[0-9]+")
MAX_SPELLED = 999_999


def _below_thousand(n):
    words = []
    hundreds, rest = divmod(n, 100)
    if hundreds:
        words += [_ONES[hundreds], "hundred"]
    if rest >= 20:
        tens, ones = divmod(rest, 10)
        words.append(_TENS[tens])
        if ones:
            words.append(_ONES[ones])
    elif rest or not words:
        words.append(_ONES[rest])
    return words


def spell_number(n):
    """English words for ``0 <= n <= 999999``, space separated, no hyphens."""
    if not 0 <= n <= MAX_SPELLED:
        raise CanonicalizationError(f"cannot spell {n}: supported range is 0-{MAX_SPELLED}")
    thousands, rest = divmod(n, 1000)
    if not thousands:
        return " ".join(_below_thousand(rest))
    words = _below_thousand(thousands) + ["thousand"]
    if rest:
        words += _below_thousand(rest)
    return " ".join(words)


def _spell_match(m):
    token = m.group(0)
    n = int(token)
    if n > MAX_SPELLED:
        raise CanonicalizationError(f"number token {token!r} exceeds the spellable range 0-{MAX_SPELLED}")
    return f" {spell_number(n)} "


def _keep(c):
    return c == "'" or (c.isalpha() and not c.isupper()) or c in "0123456789"


def tokenize(raw):
    """Lowercase, spell digit runs, and split on anything but letters and inner apostrophes."""
    text = raw.lower()
    text = "".join(c if _keep(c) else " " for c in text)
    text = _DIGITS.sub(_spell_match, text)
    tokens = []
    for tok in text.split():
        tok = tok.strip("'")
        # apostrophe runs inside a word collapse to a split point
        for piece in re.split(r"'{2,}", tok):
            piece = piece.strip("'")
            if piece:
                tokens.append(piece)
    return tokens


class Lexicon:
    """Surface-form to canonical-form substitutions applied per token."""

    def __init__(self, mapping=None):
        mapping = dict(DEFAULT_LEXICON if mapping is None else mapping)
        for key, value in mapping.items():
            if key != key.lower() or tokenize(key) != [key]:
                raise FormatError(f"lexicon key {key!r} is not a lowercase single token")
            parts = value.split()
            if not parts or tokenize(value) != parts:
                raise FormatError(f"lexicon value {value!r} for {key!r} is not canonical text")
            clash = [p for p in parts if p in mapping]
            if clash:
                raise FormatError(f"lexicon value {value!r} contains key(s) {clash}; mapping would not be idempotent")
        self.mapping = mapping

    def __len__(self):
        return len(self.mapping)

    def apply(self, tokens):
        out = []
        for tok in tokens:
            sub = self.mapping.get(tok)
            if sub is None:
                out.append(tok)
            else:
                out.extend(sub.split())
        return out


def load_lexicon(path, include_defaults=True):
    """Read ``surface<TAB>canonical`` pairs; ``#`` starts a comment."""
    mapping = dict(DEFAULT_LEXICON) if include_defaults else {}
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
                raise FormatError("expected 'surface<TAB>canonical'", path=path, line=lineno)
            key, value = parts[0].strip(), parts[1].strip()
            if key != key.lower():
                raise FormatError(f"lexicon key {key!r} must be lowercase", path=path, line=lineno)
            if key in seen:
                raise FormatError(f"duplicate lexicon key {key!r}", path=path, line=lineno)
            seen.add(key)
            mapping[key] = value
    return Lexicon(mapping)


@dataclass(frozen=True)
class SentenceText:
    raw: str
    tokens: tuple


def canonicalize(raw, lexicon=None):
    lexicon = lexicon if lexicon is not None else Lexicon()
    return SentenceText(raw, tuple(lexicon.apply(tokenize(raw))))


class MissingVectorError(KeyError):
    def __str__(self):
        return f"no vector for id {self.args[0]!r}"


class EmbeddingTable:
    """Token (or sentence id) to fixed-width float32 vector."""

    def __init__(self, dimension, vectors=None):
        if dimension < 1:
            raise FormatError(f"dimension must be positive, got {dimension}")
        self.dimension = int(dimension)
        self._index = {}
        self._rows = []
        for key, vec in (vectors or {}).items():
            self.add(key, vec)
        self._matrix = None

    def add(self, key, vec):
        vec = np.asarray(vec, dtype=np.float32)
        if vec.shape != (self.dimension,):
            raise FormatError(f"vector for {key!r} has shape {vec.shape}, expected ({self.dimension},)")
        if not np.all(np.isfinite(vec)):
            raise FormatError(f"vector for {key!r} has non-finite entries")
        if key in self._index:
            raise FormatError(f"duplicate key {key!r}")
        self._index[key] = len(self._rows)
        self._rows.append(vec)
        self._matrix = None

    @property
    def matrix(self):
        if self._matrix is None:
            self._matrix = (
                np.stack(self._rows) if self._rows else np.zeros((0, self.dimension), np.float32)
            )
        return self._matrix

    def __len__(self):
        return len(self._rows)

    def __contains__(self, key):
        return key in self._index

    def __getitem__(self, key):
        try:
            return self.matrix[self._index[key]]
        except KeyError:
            raise MissingVectorError(key) from None

    def keys(self):
        return list(self._index)

    def get(self, key, default=None):
        i = self._index.get(key)
        return default if i is None else self.matrix[i]

    def __eq__(self, other):
        if not isinstance(other, EmbeddingTable):
            return NotImplemented
        return (
            self.dimension == other.dimension
            and self.keys() == other.keys()
            and np.array_equal(self.matrix, other.matrix)
        )


def _parse_vectors(path):
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        parts = header.split()
        if len(parts) != 2 or not all(p.isdigit() for p in parts):
            raise FormatError("header must be 'vocab_size dimension'", path=path, line=1)
        count, dim = int(parts[0]), int(parts[1])
        try:
            table = EmbeddingTable(dim)
        except FormatError as exc:
            raise FormatError(str(exc), path=path, line=1) from None
        lineno = 1
        for lineno, line in enumerate(fh, 2):
            fields = line.rstrip("\n").split(" ")
            fields = [f for f in fields if f != ""]
            if not fields:
                raise FormatError("blank line", path=path, line=lineno)
            if len(fields) != dim + 1:
                raise FormatError(f"expected token + {dim} values, got {len(fields) - 1} values", path=path, line=lineno)
            try:
                vec = np.array([float(v) for v in fields[1:]], dtype=np.float32)
            except ValueError:
                raise FormatError("non-numeric vector entry", path=path, line=lineno) from None
            try:
                table.add(fields[0], vec)
            except FormatError as exc:
                raise FormatError(str(exc), path=path, line=lineno) from None
        if len(table) != count:
            raise FormatError(f"header declares {count} entries, file has {len(table)}", path=path, line=lineno)
    return table


def load_embeddings(path):
    """Read a textual word-vector file: ``vocab dim`` header, then ``token v1 .. vdim`` lines."""
    return _parse_vectors(path)


def load_precomputed_sentence_vectors(path):
    """Same format as :func:`load_embeddings`, keyed by sentence id."""
    return _parse_vectors(path)


def save_vectors(table, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(table)} {table.dimension}\n")
        for key in table.keys():
            vals = " ".join(f"{v:.9g}" for v in table[key].tolist())
            fh.write(f"{key} {vals}\n")


save_embeddings = save_vectors


def embed_tokens(sentence, table):
    """``[n_tokens, dimension]`` float32 lookups; out-of-vocabulary tokens are zero rows."""
    tokens = sentence.tokens if isinstance(sentence, SentenceText) else tuple(sentence)
    if not tokens:
        raise InputError("cannot embed an empty token list")
    out = np.zeros((len(tokens), table.dimension), dtype=np.float32)
    for i, tok in enumerate(tokens):
        vec = table.get(tok)
        if vec is not None:
            out[i] = vec
    return out
