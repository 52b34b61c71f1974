"""Fine-tuning dataset: mined comment/assertion pairs, synthetic pairs, JSONL export."""
from __future__ import annotations

import hashlib
import json
import logging
import random
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .llm.gateway import FineTuneJobDescriptor
from .llm.prompts import default_dir
from .sva.ast import (
    Binary, Bool, Conditional, Delay, DisableIff, Identifier, Implication, Not, NumericLiteral,
    Paren, Seq, SystemCall, Unary,
)
from .sva.generate import AstGenerator
from .sva.parser import AssertionSyntaxError, parse_assertion
from .sva.printer import pretty_print

log = logging.getLogger(__name__)

COMMENT_WINDOW = 2
DEFAULT_THRESHOLD = 0.6
SOURCE_SUFFIXES = (".v", ".sv")


@dataclass
class PairCandidate:
    comment_text: str
    assertion_text: str
    source_path: str
    source_line: int
    origin: str = "mined"  # mined | synthetic
    similarity: Optional[float] = None
    flags: list = field(default_factory=list)

    def parses(self) -> bool:
        try:
            parse_assertion(self.assertion_text)
        except AssertionSyntaxError:
            return False
        return True

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PairCandidate":
        return cls(**d)


# --- mining ------------------------------------------------------------------

_STMT_RE = re.compile(r"(?:\b[A-Za-z_][A-Za-z0-9_$]*\s*:\s*)?\bassert\b\s*(?:property\b|\()")


def _statement_end(text: str, start: int) -> int:
    depth = 0
    for i in range(start, len(text)):
        ch = text[i]
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == ";" and depth <= 0:
            return i + 1
    return len(text)


def _comment_blocks(text: str) -> dict:
    """Map end line (1-based) -> comment text for comment-only blocks."""
    blocks = {}
    lines = text.split("\n")
    i = 0
    while i < len(lines):
        stripped = lines[i].strip()
        if stripped.startswith("//"):
            parts = []
            while i < len(lines) and lines[i].strip().startswith("//"):
                parts.append(lines[i].strip().lstrip("/").strip())
                i += 1
            blocks[i] = " ".join(p for p in parts if p)
            continue
        if stripped.startswith("/*"):
            j = i
            while j < len(lines) and "*/" not in lines[j][(lines[j].find("/*") + 2) if j == i else 0:]:
                j += 1
            if j == len(lines):
                break
            body = "\n".join(lines[i:j + 1])
            inner = body[body.find("/*") + 2:body.rfind("*/")]
            after = lines[j][lines[j].rfind("*/") + 2:].strip()
            if not after:
                words = [ln.strip().lstrip("*").strip() for ln in inner.split("\n")]
                blocks[j + 1] = " ".join(w for w in words if w)
            i = j + 1
            continue
        i += 1
    return blocks


def mine_file(text: str, rel_path: str) -> list[PairCandidate]:
    blocks = _comment_blocks(text)
    out = []
    pos = 0
    while True:
        m = _STMT_RE.search(text, pos)
        if not m:
            break
        if text.rfind("//", text.rfind("\n", 0, m.start()) + 1, m.start()) != -1:
            pos = m.end()  # inside a line comment
            continue
        end = _statement_end(text, m.start())
        line = text.count("\n", 0, m.start()) + 1
        comment = None
        for above in range(line - 1, line - 1 - COMMENT_WINDOW, -1):
            if above in blocks and blocks[above]:
                comment = blocks[above]
                break
        if comment is not None:
            stmt = " ".join(text[m.start():end].split())
            out.append(PairCandidate(comment, stmt, rel_path, line))
        pos = end
    return out


def mine_pairs(corpus_dir, warnings: Optional[list] = None) -> list[PairCandidate]:
    """Comment/assertion pairs from every .v/.sv file, ordered by (path, line)."""
    root = Path(corpus_dir)
    if not root.is_dir():
        raise NotADirectoryError(f"{root} is not a directory")
    found = []
    for path in sorted(p for p in root.rglob("*") if p.suffix in SOURCE_SUFFIXES and p.is_file()):
        rel = path.relative_to(root).as_posix()
        try:
            text = path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as e:
            msg = f"skipped unreadable file {rel}: {e}"
            log.warning(msg)
            if warnings is not None:
                warnings.append(msg)
            continue
        found.extend(mine_file(text, rel))
    return found


# --- embedding ---------------------------------------------------------------

@dataclass(frozen=True)
class EmbedderConfig:
    kind: str = "hashed_bow"  # hashed_bow | external
    dimension: int = 128
    seed: int = 0
    vectors_path: Optional[str] = None  # external: "token v1 v2 ..." per line

    def __post_init__(self):
        if self.kind not in ("hashed_bow", "external"):
            raise ValueError(f"unknown embedder kind {self.kind!r}")
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        if (self.kind == "external") != (self.vectors_path is not None):
            raise ValueError("vectors_path is required for, and only for, the external embedder")


_TOKEN_RE = re.compile(r"[^0-9a-z]+")
_vector_tables: dict = {}


def tokens(text: str) -> list[str]:
    return [t for t in _TOKEN_RE.split(text.lower()) if t]


def _load_vectors(path: str, dimension: int) -> dict:
    key = (path, dimension)
    if key not in _vector_tables:
        table = {}
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            parts = line.split()
            if len(parts) == 2 and all(p.isdigit() for p in parts):
                continue  # word2vec text header
            if len(parts) != dimension + 1:
                raise ValueError(f"{path}: vector for {parts[:1]} has {len(parts) - 1} values, "
                                 f"expected {dimension}")
            table[parts[0].lower()] = np.array([float(x) for x in parts[1:]])
        _vector_tables[key] = table
    return _vector_tables[key]


def _bucket(token: str, cfg: EmbedderConfig) -> tuple[int, float]:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8,
                             key=str(cfg.seed).encode("ascii")).digest()
    h = int.from_bytes(digest, "little")
    return h % cfg.dimension, (1.0 if (h >> 63) & 1 else -1.0)


def embed(text: str, cfg: EmbedderConfig = EmbedderConfig()) -> np.ndarray:
    """Unit-length vector of ``cfg.dimension`` values (all zeros if nothing to embed)."""
    vec = np.zeros(cfg.dimension)
    toks = tokens(text)
    if cfg.kind == "hashed_bow":
        for tok in toks:
            b, sign = _bucket(tok, cfg)
            vec[b] += sign
    else:
        table = _load_vectors(cfg.vectors_path, cfg.dimension)
        for tok in toks:
            if tok in table:
                vec += table[tok]
    norm = np.linalg.norm(vec)
    return vec / norm if norm > 0 else vec


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        return 0.0
    return round(float(np.dot(u, v) / (nu * nv)), 12)


# --- filtering ---------------------------------------------------------------

@dataclass
class DatasetManifest:
    kept_pairs: list
    threshold: float = DEFAULT_THRESHOLD
    mined_count: int = 0
    synthetic_count: int = 0
    system_message_path: str = ""
    embedder: dict = field(default_factory=dict)
    dropped: list = field(default_factory=list)
    normalization: str = "lowercase, split on non-alphanumerics; no stemming or stop words"

    @property
    def mined_kept(self) -> int:
        return sum(p.origin == "mined" for p in self.kept_pairs)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kept_pairs"] = [p.to_dict() for p in self.kept_pairs]
        d["dropped"] = [p.to_dict() for p in self.dropped]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetManifest":
        d = dict(d)
        d["kept_pairs"] = [PairCandidate.from_dict(p) for p in d["kept_pairs"]]
        d["dropped"] = [PairCandidate.from_dict(p) for p in d.get("dropped", [])]
        return cls(**d)

    @classmethod
    def load(cls, path) -> "DatasetManifest":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def merge(self, other: "DatasetManifest") -> "DatasetManifest":
        return DatasetManifest(self.kept_pairs + other.kept_pairs, self.threshold,
                               self.mined_count + other.mined_count,
                               self.synthetic_count + other.synthetic_count,
                               self.system_message_path or other.system_message_path,
                               self.embedder or other.embedder, self.dropped + other.dropped)


def default_system_message_path() -> str:
    return str(default_dir() / "system_sva.txt")


def filter_pairs(candidates: Sequence[PairCandidate], cfg: EmbedderConfig = EmbedderConfig(),
                 threshold: float = DEFAULT_THRESHOLD, system_message_path: Optional[str] = None
                 ) -> DatasetManifest:
    """Keep mined pairs whose comment/assertion cosine is >= ``threshold``.

    Synthetic pairs bypass the threshold; unparseable and zero-vector mined
    pairs are dropped with a flag.
    """
    if not -1.0 <= threshold <= 1.0:
        raise ValueError("threshold must be in [-1, 1]")
    kept, dropped = [], []
    for c in candidates:
        c = PairCandidate(**{**c.to_dict(), "flags": list(c.flags)})
        u, v = embed(c.comment_text, cfg), embed(c.assertion_text, cfg)
        c.similarity = cosine(u, v)
        if c.origin == "synthetic":
            kept.append(c)
            continue
        if not u.any() or not v.any():
            c.flags.append("zero_vector")
        elif not c.parses():
            c.flags.append("unparseable")
        elif c.similarity < threshold:
            c.flags.append("below_threshold")
        (dropped if c.flags else kept).append(c)
    return DatasetManifest(
        kept, threshold,
        mined_count=sum(c.origin == "mined" for c in candidates),
        synthetic_count=sum(c.origin == "synthetic" for c in candidates),
        system_message_path=system_message_path or default_system_message_path(),
        embedder=asdict(cfg), dropped=dropped,
    )


# --- synthetic pairs ---------------------------------------------------------

_BIN_WORDS = {
    "&&": "{} and {}", "||": "{} or {}", "==": "{} equals {}", "!=": "{} differs from {}",
    "<": "{} is less than {}", "<=": "{} is at most {}", ">": "{} is greater than {}",
    ">=": "{} is at least {}", "+": "{} plus {}", "-": "{} minus {}",
    "&": "the bitwise AND of {} and {}", "|": "the bitwise OR of {} and {}",
    "^": "the bitwise XOR of {} and {}",
}


def _operand(e) -> str:
    text = describe_bool(e)
    simple = isinstance(e, (Identifier, NumericLiteral, SystemCall, Paren))
    return text if simple else f"({text})"


def describe_bool(e) -> str:
    if isinstance(e, Paren):
        return describe_bool(e.inner)
    if isinstance(e, Identifier):
        if e.index is not None:
            return f"bit {e.index} of {e.name}"
        if e.part is not None:
            return f"bits {e.part[0]} to {e.part[1]} of {e.name}"
        return e.name
    if isinstance(e, NumericLiteral):
        if e.fill:
            return "all ones" if e.value else "all zeros"
        return str(e.value)
    if isinstance(e, Unary):
        word = {"!": "not {}", "~": "the bitwise inverse of {}", "-": "minus {}"}[e.op]
        return word.format(_operand(e.operand))
    if isinstance(e, Binary):
        return _BIN_WORDS[e.op].format(_operand(e.lhs), _operand(e.rhs))
    if isinstance(e, Conditional):
        return f"{_operand(e.then)} when {_operand(e.cond)}, otherwise {_operand(e.other)}"
    if isinstance(e, SystemCall):
        x = _operand(e.args[0])
        if e.name == "$past":
            n = e.cycles or 1
            return f"the value of {x} one cycle ago" if n == 1 else f"the value of {x} {n} cycles ago"
        return {"$rose": f"{x} rises", "$fell": f"{x} falls", "$stable": f"{x} is stable"}[e.name]
    raise TypeError(e)


def _cycles(n: int) -> str:
    return "one cycle" if n == 1 else f"{n} cycles"


def describe_sequence(s) -> str:
    if isinstance(s, Bool):
        return describe_bool(s.expr)
    later = (_cycles(s.min_cycles) + " later" if s.max_cycles is None
             else f"between {s.min_cycles} and {s.max_cycles} cycles later")
    if s.min_cycles == 0 and s.max_cycles is None:
        later = "in the same cycle"
    rhs = describe_sequence(s.rhs)
    if s.lhs is None:
        return f"{later}, {rhs}"
    return f"{describe_sequence(s.lhs)}, followed {later} by {rhs}"


def describe_property(p) -> str:
    if isinstance(p, Seq):
        return f"{describe_sequence(p.seq)} must hold"
    if isinstance(p, Implication):
        when = "in the same cycle" if p.overlapped else "in the next cycle"
        return f"whenever {describe_sequence(p.antecedent)} holds, " \
               f"{_consequent(p.consequent)} {when}"
    if isinstance(p, Not):
        return f"it must never be the case that {describe_property(p.inner)}"
    if isinstance(p, DisableIff):
        return f"unless {describe_bool(p.condition)}, {describe_property(p.body)}"
    raise TypeError(p)


def _consequent(p) -> str:
    if isinstance(p, Seq):
        return f"{describe_sequence(p.seq)} must hold"
    return f"({describe_property(p)}) must hold"


def describe_assertion(decl) -> str:
    return describe_property(decl.property) + "."


def synthesize_pairs(n: int, seed: int, signal_vocab: Sequence[str],
                     widths: Optional[dict] = None, max_depth: int = 3) -> list[PairCandidate]:
    """``n`` generated assertions (depth <= ``max_depth``) with template comments."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not signal_vocab:
        raise ValueError("signal vocabulary is empty")
    rng = random.Random(seed)
    gen = AstGenerator(rng, list(signal_vocab), widths)
    out = []
    for i in range(n):
        decl = gen.assertion(rng.randint(1, max_depth))
        text = pretty_print(decl)
        out.append(PairCandidate(describe_assertion(decl), text, f"synthetic/seed{seed}", i + 1,
                                 origin="synthetic"))
    return out


# --- export ------------------------------------------------------------------

def emit_finetune_jsonl(manifest: DatasetManifest, out_path) -> int:
    system = Path(manifest.system_message_path or default_system_message_path()).read_text(
        encoding="utf-8").rstrip("\n")
    lines = []
    for p in manifest.kept_pairs:
        rec = {"messages": [
            {"role": "system", "content": system},
            {"role": "user", "content": p.comment_text},
            {"role": "assistant", "content": p.assertion_text},
        ]}
        lines.append(json.dumps(rec, ensure_ascii=False))
    Path(out_path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return len(lines)


def job_descriptor(manifest: DatasetManifest, dataset_path, base_model: str = "gpt-3.5-turbo",
                   epochs: int = 3) -> FineTuneJobDescriptor:
    return FineTuneJobDescriptor(str(dataset_path), manifest.system_message_path, base_model, epochs)
