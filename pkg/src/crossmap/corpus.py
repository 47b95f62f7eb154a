"""Loading, validation, and domain indexing of statement corpora.

A corpus is one side of the crosswalk: either the content standards being
mapped or the item specifications they are mapped onto.  Statements carry a
1-based reference number (``ref_num``) that everything downstream keys on,
and every statement belongs to exactly one content domain.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

_WS_RUN = re.compile(r"\s+")


def normalize_whitespace(text: str) -> str:
    """Collapse whitespace runs to single spaces and trim the ends.

    This is the only text mutation applied at ingestion; embedding inputs
    and cache keys are both derived from the normalized form.
    """
    return _WS_RUN.sub(" ", text).strip()


class Side(enum.Enum):
    STANDARD = "standard"
    SPECIFICATION = "specification"


class CorpusError(ValueError):
    """Raised when a corpus file is malformed or violates an invariant."""


@dataclass(frozen=True)
class Statement:
    """One standard or specification: identifier, ordinal ref, domain, text."""

    id: str
    ref_num: int
    side: Side
    domain_id: int
    text: str

    def __post_init__(self) -> None:
        if self.ref_num < 1:
            raise CorpusError(f"statement {self.id!r}: ref_num must be >= 1, got {self.ref_num}")
        if self.domain_id < 1:
            raise CorpusError(f"statement {self.id!r}: domain_id must be >= 1, got {self.domain_id}")
        if not normalize_whitespace(self.text):
            raise CorpusError(f"statement {self.id!r} (ref {self.ref_num}): text is empty")


@dataclass(frozen=True)
class DomainScheme:
    """Ordered domains for one side; member ref_nums partition 1..m."""

    side: Side
    domains: tuple[tuple[int, str, tuple[int, ...]], ...]  # (domain_id, name, member_ref_nums)

    def __post_init__(self) -> None:
        seen: set[int] = set()
        ids = [d[0] for d in self.domains]
        if len(ids) != len(set(ids)):
            raise CorpusError(f"duplicate domain ids in {self.side.value} scheme: {ids}")
        for _, name, members in self.domains:
            overlap = seen.intersection(members)
            if overlap:
                raise CorpusError(f"ref_nums {sorted(overlap)} appear in more than one domain")
            seen.update(members)
        m = len(seen)
        if seen != set(range(1, m + 1)):
            raise CorpusError(
                f"{self.side.value} domains do not partition 1..{m}: members {sorted(seen)}"
            )

    @property
    def size(self) -> int:
        return sum(len(d[2]) for d in self.domains)

    @property
    def domain_sizes(self) -> tuple[int, ...]:
        return tuple(len(d[2]) for d in self.domains)

    def name_of(self, domain_id: int) -> str:
        for did, name, _ in self.domains:
            if did == domain_id:
                return name
        raise CorpusError(f"unknown domain id {domain_id}")

    def domain_of(self, ref_num: int) -> int:
        if not 1 <= ref_num <= self.size:
            raise CorpusError(f"ref_num {ref_num} out of range 1..{self.size}")
        for did, _, members in self.domains:
            if ref_num in members:
                return did
        raise CorpusError(f"ref_num {ref_num} not covered by any domain")  # pragma: no cover


@dataclass(frozen=True)
class Corpus:
    """A validated, immutable statement corpus with its domain scheme."""

    side: Side
    statements: tuple[Statement, ...]
    scheme: DomainScheme

    def __post_init__(self) -> None:
        refs = [s.ref_num for s in self.statements]
        m = len(refs)
        if sorted(refs) != list(range(1, m + 1)):
            dupes = sorted({r for r in refs if refs.count(r) > 1})
            if dupes:
                raise CorpusError(f"duplicate ref_nums: {dupes}")
            raise CorpusError(f"ref_nums are not contiguous 1..{m}: {sorted(refs)}")
        if refs != sorted(refs):
            raise CorpusError("statements must be sorted by ref_num")
        if self.scheme.side is not self.side:
            raise CorpusError("scheme side does not match corpus side")
        if self.scheme.size != m:
            raise CorpusError(
                f"scheme covers {self.scheme.size} ref_nums but corpus has {m} statements"
            )
        for s in self.statements:
            if s.side is not self.side:
                raise CorpusError(f"statement {s.id!r} has side {s.side.value}, corpus is {self.side.value}")
            if self.scheme.domain_of(s.ref_num) != s.domain_id:
                raise CorpusError(
                    f"statement {s.id!r} (ref {s.ref_num}) claims domain {s.domain_id} "
                    f"but scheme assigns {self.scheme.domain_of(s.ref_num)}"
                )

    def __len__(self) -> int:
        return len(self.statements)

    def statement(self, ref_num: int) -> Statement:
        if not 1 <= ref_num <= len(self.statements):
            raise CorpusError(f"ref_num {ref_num} out of range 1..{len(self.statements)}")
        return self.statements[ref_num - 1]

    @property
    def texts(self) -> list[str]:
        return [s.text for s in self.statements]

    @property
    def ref_nums(self) -> list[int]:
        return [s.ref_num for s in self.statements]


def domain_of(corpus: Corpus, ref_num: int) -> int:
    """Domain id of the statement with the given ref_num."""
    return corpus.scheme.domain_of(ref_num)


def _parse(payload: dict, side: Side, where: str) -> Corpus:
    if not isinstance(payload, dict):
        raise CorpusError(f"{where}: top level must be an object")
    declared = payload.get("side")
    if declared is not None and declared != side.value:
        raise CorpusError(f"{where}: file declares side {declared!r}, expected {side.value!r}")

    names: dict[int, str] = {}
    for i, dom in enumerate(payload.get("domains", [])):
        try:
            names[int(dom["id"])] = str(dom["name"])
        except (KeyError, TypeError, ValueError) as exc:
            raise CorpusError(f"{where}: domains[{i}] malformed: {exc}") from exc
    if not names:
        raise CorpusError(f"{where}: no domains declared")

    statements: list[Statement] = []
    members: dict[int, list[int]] = {did: [] for did in names}
    for i, raw in enumerate(payload.get("statements", [])):
        loc = f"{where}: statements[{i}]"
        try:
            sid = str(raw["id"])
            ref = int(raw["ref"])
            dom = int(raw["domain"])
            text = str(raw["text"])
        except (KeyError, TypeError, ValueError) as exc:
            raise CorpusError(f"{loc} malformed: {exc}") from exc
        if dom not in names:
            raise CorpusError(f"{loc}: domain {dom} not declared")
        try:
            statements.append(
                Statement(id=sid, ref_num=ref, side=side, domain_id=dom, text=normalize_whitespace(text))
            )
        except CorpusError as exc:
            raise CorpusError(f"{loc}: {exc}") from exc
        members[dom].append(ref)
    if not statements:
        raise CorpusError(f"{where}: no statements")

    statements.sort(key=lambda s: s.ref_num)
    scheme = DomainScheme(
        side=side,
        domains=tuple((did, names[did], tuple(sorted(members[did]))) for did in sorted(names)),
    )
    return Corpus(side=side, statements=tuple(statements), scheme=scheme)


def load_corpus(path: str | Path, side: Side) -> Corpus:
    """Load and validate a corpus JSON file for the given side."""
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise
    except json.JSONDecodeError as exc:
        raise CorpusError(f"{path}: line {exc.lineno} col {exc.colno}: {exc.msg}") from exc
    return _parse(payload, side, str(path))


def dump_corpus(corpus: Corpus) -> dict:
    """Serialize a corpus back to its JSON structure (round-trips load_corpus)."""
    return {
        "side": corpus.side.value,
        "domains": [{"id": did, "name": name} for did, name, _ in corpus.scheme.domains],
        "statements": [
            {"id": s.id, "ref": s.ref_num, "domain": s.domain_id, "text": s.text}
            for s in corpus.statements
        ],
    }


def scheme_from_id_prefixes(corpus: Corpus, prefix_domains: dict[str, int]) -> DomainScheme:
    """Alternative domain scheme derived from statement-id prefixes.

    The bundled standards file assigns domains the way the original analysis
    code did; this helper regroups statements by the leading code of their id
    (e.g. ``4.MD.A.1`` -> ``4.MD``) for the flag-controlled alternative.
    ``prefix_domains`` maps each id prefix to a domain id already declared in
    the corpus scheme.
    """
    members: dict[int, list[int]] = {did: [] for did, _, _ in corpus.scheme.domains}
    for s in corpus.statements:
        matched = [p for p in prefix_domains if s.id.startswith(p)]
        if not matched:
            raise CorpusError(f"statement id {s.id!r} matches no declared prefix")
        prefix = max(matched, key=len)
        members[prefix_domains[prefix]].append(s.ref_num)
    return DomainScheme(
        side=corpus.side,
        domains=tuple(
            (did, name, tuple(sorted(members[did]))) for did, name, _ in corpus.scheme.domains
        ),
    )


CCSS_PREFIX_DOMAINS = {"4.OA": 1, "4.NBT": 2, "4.NF": 3, "4.MD": 4, "4.G": 5}


def load_bundled(name: str, side: Side) -> Corpus:
    """Load a corpus JSON bundled with the package (e.g. ``ccss_g4_math.json``)."""
    text = resources.files("crossmap").joinpath("data", name).read_text(encoding="utf-8")
    return _parse(json.loads(text), side, f"crossmap/data/{name}")
