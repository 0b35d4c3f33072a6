"""Transcript ingestion and part-of-speech proportion features.

Transcripts arrive either as CoNLL-U (one sentence per utterance) or as a
small subset of CHAT with a tag tier. Each transcript becomes a
``TaggedTranscript``; segments of consecutive utterances are reduced to an
8-dimensional ``FeatureSample`` of POS proportions.
"""

import csv
import io
import math
import logging
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import DegenerateInputError, ParseError
from .stats import welch_ttest

log = logging.getLogger(__name__)

UPOS_TAGS = frozenset({
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
    "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X",
})
FEATURE_TAGS = ("NOUN", "VERB", "SCONJ", "ADJ", "ADV", "CCONJ", "DET", "PRON")
FEATURE_NAMES = tuple(t.lower() for t in FEATURE_TAGS)
NON_WORD_TAGS = frozenset({"PUNCT", "SYM"})

ROLES = ("source", "target")
ACCENTS = ("NA", "other", "unknown")
LABELS = ("healthy", "aphasic", "unlabeled")
CSV_HEADER = ("subject_id", "language", "accent", "label") + FEATURE_NAMES

BONFERRONI_FAMILY = len(FEATURE_TAGS)
ALPHA = 0.05


@dataclass(frozen=True)
class Utterance:
    tokens: tuple = ()
    speaker: str = ""

    def __post_init__(self):
        tokens = tuple((str(w), str(p)) for w, p in self.tokens)
        for _, pos in tokens:
            if pos not in UPOS_TAGS:
                raise ValueError(f"unknown UPOS tag {pos!r}")
        object.__setattr__(self, "tokens", tokens)

    @property
    def tags(self):
        return [p for _, p in self.tokens]


@dataclass(frozen=True)
class TaggedTranscript:
    utterances: tuple
    subject_id: str
    language: str = ""
    role: str | None = None
    accent: str = "unknown"
    label: str = "unlabeled"

    def __post_init__(self):
        object.__setattr__(self, "utterances", tuple(self.utterances))
        if not self.subject_id:
            raise ValueError("subject_id must be nonempty")
        if self.role is not None and self.role not in ROLES:
            raise ValueError(f"role must be one of {ROLES}, got {self.role!r}")
        if self.accent not in ACCENTS:
            raise ValueError(f"accent must be one of {ACCENTS}, got {self.accent!r}")
        if self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}, got {self.label!r}")

    def __len__(self):
        return len(self.utterances)


@dataclass(frozen=True)
class FeatureSample:
    features: tuple
    subject_id: str
    language: str = ""
    accent: str = "unknown"
    label: str = "unlabeled"
    n_words: int = 0

    def __post_init__(self):
        feats = tuple(float(v) for v in self.features)
        if len(feats) != len(FEATURE_TAGS):
            raise ValueError(f"expected {len(FEATURE_TAGS)} features, got {len(feats)}")
        object.__setattr__(self, "features", feats)

    def as_array(self):
        return np.array(self.features)


@dataclass(frozen=True)
class FeatureTTestReport:
    features: tuple
    t: tuple
    p: tuple
    significant: tuple
    threshold: float = ALPHA / BONFERRONI_FAMILY

    def rows(self):
        return list(zip(self.features, self.t, self.p, self.significant))


# ---------------------------------------------------------------- CHAT

_SPEAKER_RE = re.compile(r"^\s*\*[^\s:]+:\s*")
_BRACKET_RE = re.compile(r"\[([^\[\]]*)\]")
_SCOPE_CHARS = str.maketrans("", "", "<>‹›")
_UNINTELLIGIBLE = frozenset({"xxx", "yyy"})
_RETRACE_CODES = frozenset({"/", "//"})
_DROP_GROUP_PREFIXES = ("%", "*", "+")


def _is_punct(ch):
    return unicodedata.category(ch)[0] in "PS"


def _strip_punct(token):
    start, end = 0, len(token)
    while start < end and _is_punct(token[start]):
        start += 1
    while end > start and _is_punct(token[end - 1]):
        end -= 1
    return token[start:end]


def strip_chat_annotations(line, counter=None):
    """Reduce one CHAT main line to its surface word tokens.

    Removes fillers and events (``&uh``, ``&=laughs``), unintelligible
    ``xxx``/``yyy``, retracing markers ``[/]`` and ``[//]`` (keeping the
    retraced words), comment/error/postcode groups ``[% ...]``, ``[* ...]``,
    ``[+ ...]``, scope delimiters and punctuation. Any other bracket code is
    dropped and tallied under ``"unrecognized"`` in ``counter`` if given.
    """
    text = _SPEAKER_RE.sub("", line, count=1)

    def _bracket(match):
        code = match.group(1).strip()
        if code in _RETRACE_CODES or code.startswith(_DROP_GROUP_PREFIXES):
            return " "
        if counter is not None:
            counter["unrecognized"] += 1
        log.debug("dropping unrecognized CHAT code [%s]", code)
        return " "

    text = _BRACKET_RE.sub(_bracket, text)
    text = text.translate(_SCOPE_CHARS)
    words = []
    for raw in text.split():
        if raw.startswith("&"):
            continue
        if "[" in raw or "]" in raw:
            if counter is not None:
                counter["unrecognized"] += 1
            continue
        word = _strip_punct(raw)
        if not word or word.lower() in _UNINTELLIGIBLE:
            continue
        words.append(word)
    return words


# %mor part-of-speech prefixes; lower-case UD names map to themselves
_MOR_TO_UPOS = {
    "n": "NOUN", "n:prop": "PROPN", "v": "VERB", "part": "VERB",
    "cop": "AUX", "aux": "AUX", "mod": "AUX",
    "adj": "ADJ", "adv": "ADV", "prep": "ADP", "post": "ADP",
    "conj": "SCONJ", "comp": "SCONJ", "coord": "CCONJ",
    "det": "DET", "qn": "DET", "quant": "DET", "art": "DET",
    "num": "NUM", "pro": "PRON", "rel": "PRON", "wh": "PRON",
    "co": "INTJ", "on": "INTJ", "inf": "PART", "neg": "PART", "poss": "PART",
}


def _mor_to_upos(code, counter=None):
    if code.upper() in UPOS_TAGS:
        return code.upper()
    if code in _MOR_TO_UPOS:
        return _MOR_TO_UPOS[code]
    head = code.split(":", 1)[0]
    if head in _MOR_TO_UPOS:
        return _MOR_TO_UPOS[head]
    if counter is not None:
        counter["unmapped_mor"] += 1
    return "X"


def _mor_tokens(tier, counter=None):
    tokens = []
    for item in tier.split():
        for part in item.split("~"):
            if "|" not in part:
                if part and all(_is_punct(c) for c in part):
                    tokens.append((part, "PUNCT"))
                continue
            code, rest = part.split("|", 1)
            stem = re.split(r"[-&#=]", rest.replace("+", "|").split("|")[-1])[0] or rest
            tokens.append((stem, _mor_to_upos(code, counter)))
    return tokens


def _group_to_label(group):
    g = group.strip().lower()
    if not g:
        return "unlabeled"
    if g in ("control", "healthy"):
        return "healthy"
    return "aphasic"


def parse_chat(text, speaker="PAR", subject_id=None, source=None, counter=None):
    """Parse CHAT text into a transcript of ``speaker``'s utterances.

    Tags come from a ``%pos`` tier (one UPOS tag per cleaned word) or,
    failing that, a ``%mor`` tier. Utterances whose words survive
    stripping but carry no tag tier are a parse error.
    """
    # join tab-indented continuation lines onto their parent
    logical = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if raw.startswith("\t") and logical:
            logical[-1] = (logical[-1][0], logical[-1][1] + " " + raw.strip())
        elif raw.strip():
            logical.append((lineno, raw.rstrip()))

    language = ""
    label = "unlabeled"
    utterances = []
    pending = None  # (lineno, words) for the current main line of ``speaker``
    tiers = {}

    def flush():
        if pending is None:
            return
        lineno, words = pending
        if "pos" in tiers:
            tags = tiers["pos"].split()
            if len(tags) != len(words):
                raise ParseError(
                    f"%pos has {len(tags)} tags for {len(words)} words", lineno, source)
            bad = [t for t in tags if t not in UPOS_TAGS]
            if bad:
                raise ParseError(f"unknown UPOS value {bad[0]!r}", lineno, source)
            utterances.append(Utterance(tuple(zip(words, tags)), speaker))
        elif "mor" in tiers:
            utterances.append(Utterance(tuple(_mor_tokens(tiers["mor"], counter)), speaker))
        elif words:
            raise ParseError("utterance has words but no %pos or %mor tier", lineno, source)
        else:
            utterances.append(Utterance((), speaker))

    for lineno, line in logical:
        if line.startswith("@"):
            key, _, value = line.partition(":")
            key = key[1:].strip()
            if key == "Languages":
                language = value.strip().split(",")[0].strip()
            elif key == "ID":
                fields = value.strip().split("|")
                if len(fields) > 5 and fields[2].strip() == speaker:
                    label = _group_to_label(fields[5])
            continue
        if line.startswith("*"):
            flush()
            tiers = {}
            code = line[1:].split(":", 1)[0]
            if code == speaker:
                pending = (lineno, strip_chat_annotations(line, counter))
            else:
                pending = None
            continue
        if line.startswith("%"):
            key, _, value = line[1:].partition(":")
            tiers[key.strip()] = value.strip()
            continue
        raise ParseError("line is not a header, main tier or dependent tier", lineno, source)
    flush()

    if subject_id is None:
        subject_id = Path(source).stem if source else "unknown"
    return TaggedTranscript(tuple(utterances), subject_id, language=language, label=label)


# ---------------------------------------------------------------- CoNLL-U

_META_KEYS = {"subject_id", "language", "role", "accent", "label"}


def parse_conllu(text, source=None):
    """Parse CoNLL-U text into a ``TaggedTranscript`` (one utterance per sentence).

    Transcript metadata is read from ``# key = value`` comments for the keys
    ``subject_id``, ``language``, ``role``, ``accent`` and ``label``.
    Multiword-token ranges and empty nodes are skipped.
    """
    meta = {}
    utterances = []
    current = []
    in_sentence = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.rstrip("\r\n")
        if not line.strip():
            if in_sentence:
                utterances.append(Utterance(tuple(current)))
                current = []
                in_sentence = False
            continue
        if line.startswith("#"):
            key, eq, value = line[1:].partition("=")
            key = key.strip()
            if eq and key in _META_KEYS:
                value = value.strip()
                if key in meta and meta[key] != value:
                    raise ParseError(
                        f"conflicting {key}: {meta[key]!r} vs {value!r}", lineno, source)
                meta[key] = value
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise ParseError(f"expected 10 tab-separated columns, found {len(cols)}",
                             lineno, source)
        in_sentence = True
        tid = cols[0]
        if "-" in tid or "." in tid:
            continue
        if not tid.isdigit():
            raise ParseError(f"bad token id {tid!r}", lineno, source)
        upos = cols[3]
        if upos not in UPOS_TAGS:
            raise ParseError(f"unknown UPOS value {upos!r}", lineno, source)
        current.append((cols[1], upos))
    if in_sentence:
        utterances.append(Utterance(tuple(current)))

    subject_id = meta.get("subject_id") or (Path(source).stem if source else "")
    if not subject_id:
        raise ParseError("no subject_id comment and no file name to fall back on",
                         source=source)
    try:
        return TaggedTranscript(
            tuple(utterances), subject_id,
            language=meta.get("language", ""),
            role=meta.get("role"),
            accent=meta.get("accent", "unknown"),
            label=meta.get("label", "unlabeled"),
        )
    except ValueError as exc:
        raise ParseError(str(exc), source=source) from exc


def read_transcript(path, fmt=None, speaker="PAR", counter=None):
    """Read a transcript file; ``fmt`` is ``"conllu"`` or ``"chat"`` (guessed from suffix)."""
    path = Path(path)
    if fmt is None:
        fmt = "chat" if path.suffix == ".cha" else "conllu"
    text = path.read_text(encoding="utf-8")
    if fmt == "chat":
        return parse_chat(text, speaker=speaker, source=str(path), counter=counter)
    if fmt == "conllu":
        return parse_conllu(text, source=str(path))
    raise ValueError(f"unknown transcript format {fmt!r}")


# ---------------------------------------------------------------- features

def segment_transcript(t, segment_len=25):
    """Split ``t`` into consecutive windows of ``segment_len`` utterances.

    A trailing remainder shorter than ``segment_len`` is dropped.
    """
    if segment_len < 1:
        raise ValueError("segment_len must be >= 1")
    n = len(t.utterances) // segment_len
    return [
        replace(t, utterances=t.utterances[k * segment_len:(k + 1) * segment_len])
        for k in range(n)
    ]


def tag_counts(t):
    counts = Counter()
    for utt in t.utterances:
        counts.update(utt.tags)
    return counts


def pos_proportions(t):
    """Proportion of each tracked tag among all word tokens of ``t``.

    Word tokens are all tokens except PUNCT and SYM.
    """
    counts = tag_counts(t)
    n_words = sum(c for tag, c in counts.items() if tag not in NON_WORD_TAGS)
    if n_words == 0:
        raise DegenerateInputError(f"transcript {t.subject_id!r} has no word tokens")
    feats = tuple(counts.get(tag, 0) / n_words for tag in FEATURE_TAGS)
    return FeatureSample(feats, t.subject_id, t.language, t.accent, t.label, n_words)


def featurize(t, segment_len=25):
    """Feature samples for every full segment of ``t`` (whole transcript when ``segment_len`` is None)."""
    segments = [t] if segment_len is None else segment_transcript(t, segment_len)
    out = []
    for seg in segments:
        try:
            out.append(pos_proportions(seg))
        except DegenerateInputError:
            log.warning("skipping segment of %s with no word tokens", t.subject_id)
    return out


def feature_ttests(group_a, group_b):
    """Per-feature Welch t-tests with a Bonferroni threshold over the 8 features."""
    xa = np.array([s.features for s in group_a], dtype=float).reshape(-1, len(FEATURE_TAGS))
    xb = np.array([s.features for s in group_b], dtype=float).reshape(-1, len(FEATURE_TAGS))
    if len(xa) < 2 or len(xb) < 2:
        raise DegenerateInputError("each group needs at least 2 samples")
    results = [welch_ttest(xa[:, k], xb[:, k]) for k in range(len(FEATURE_TAGS))]
    threshold = ALPHA / BONFERRONI_FAMILY
    return FeatureTTestReport(
        features=FEATURE_NAMES,
        t=tuple(r.t for r in results),
        p=tuple(r.p for r in results),
        significant=tuple(r.p < threshold for r in results),
        threshold=threshold,
    )


# ---------------------------------------------------------------- CSV

def _fmt(v):
    return format(v, ".12g")


def write_feature_csv(samples, dest):
    """Write samples as the feature CSV; ``dest`` is a path or a text stream."""
    if isinstance(dest, (str, Path)):
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            write_feature_csv(samples, fh)
        return
    writer = csv.writer(dest, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for s in samples:
        writer.writerow([s.subject_id, s.language, s.accent, s.label]
                        + [_fmt(v) for v in s.features])


def read_feature_csv(src):
    """Read a feature CSV written by ``write_feature_csv``."""
    if isinstance(src, (str, Path)):
        with open(src, encoding="utf-8", newline="") as fh:
            return read_feature_csv(fh)
    reader = csv.reader(src)
    try:
        header = tuple(next(reader))
    except StopIteration:
        raise ParseError("empty feature CSV") from None
    if header != CSV_HEADER:
        raise ParseError(f"unexpected header {','.join(header)!r}", 1)
    samples = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(CSV_HEADER):
            raise ParseError(f"expected {len(CSV_HEADER)} fields, found {len(row)}", lineno)
        sid, lang, accent, label = row[:4]
        if accent not in ACCENTS or label not in LABELS:
            raise ParseError(f"bad accent/label {accent!r}/{label!r}", lineno)
        try:
            feats = tuple(float(v) for v in row[4:])
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
        if not all(math.isfinite(v) for v in feats):
            raise ParseError("non-finite feature value", lineno)
        samples.append(FeatureSample(feats, sid, lang, accent, label))
    return samples


def feature_csv_text(samples):
    buf = io.StringIO()
    write_feature_csv(samples, buf)
    return buf.getvalue()
