"""Code systems, their is-a hierarchies, and cross-system exact-match links.

The store is immutable after load and shared by every other module: rule
matching, indication inference, questionnaire refinement lists and lexicon
lookups all go through ``is_a`` / ``descendants`` / ``transcode``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

KNOWN_SYSTEMS = ("ATC", "ICD10", "LOINC", "MEDDRA", "MESH", "CUSTOM")


class TerminologyError(Exception):
    """Base for terminology loading and lookup failures."""


class TerminologyParseError(TerminologyError):
    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class DanglingParentError(TerminologyError):
    pass


class HierarchyCycleError(TerminologyError):
    pass


class UnknownCodeError(TerminologyError):
    pass


def parse_ref(ref: str) -> tuple[str, str]:
    """Split a ``system:code`` reference, normalizing the system name."""
    system, sep, code = ref.partition(":")
    if not sep or not system.strip() or not code.strip():
        raise UnknownCodeError(f"malformed code reference {ref!r}")
    return system.strip().upper(), code.strip()


def make_ref(system: str, code: str) -> str:
    return f"{system.upper()}:{code}"


@dataclass(frozen=True)
class Code:
    system: str
    id: str
    label: str
    parents: tuple[str, ...] = ()

    @property
    def ref(self) -> str:
        return make_ref(self.system, self.id)


@dataclass
class CodeSystem:
    id: str
    codes: dict[str, Code] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.codes)


class TerminologyStore:
    """Read-only view over one or more code systems plus a cross-map.

    Built through :func:`load_terminology`; all queries take ``system:code``
    reference strings.
    """

    def __init__(self, systems: dict[str, CodeSystem]):
        self.systems = systems
        self._children: dict[str, list[str]] = {}
        self._crossmap: dict[str, set[str]] = {}
        for system in systems.values():
            for code in system.codes.values():
                self._children.setdefault(code.ref, [])
                for parent in code.parents:
                    self._children.setdefault(make_ref(code.system, parent), []).append(code.ref)

    def system(self, system_id: str) -> CodeSystem:
        try:
            return self.systems[system_id.upper()]
        except KeyError:
            raise UnknownCodeError(f"unknown code system {system_id!r}") from None

    def resolve(self, ref: str) -> Code:
        system, code_id = parse_ref(ref)
        cs = self.system(system)
        try:
            return cs.codes[code_id]
        except KeyError:
            raise UnknownCodeError(f"unknown code {ref!r}") from None

    def has(self, ref: str) -> bool:
        try:
            self.resolve(ref)
            return True
        except UnknownCodeError:
            return False

    def is_a(self, ref: str, ancestor_ref: str) -> bool:
        """True iff ``ancestor`` is reachable from ``ref`` via parent links."""
        code = self.resolve(ref)
        ancestor = self.resolve(ancestor_ref)
        if code.system != ancestor.system:
            return False
        target = ancestor.ref
        seen: set[str] = set()
        stack = [code.ref]
        while stack:
            current = stack.pop()
            if current == target:
                return True
            if current in seen:
                continue
            seen.add(current)
            cur = self.resolve(current)
            stack.extend(make_ref(cur.system, p) for p in cur.parents)
        return False

    def ancestors(self, ref: str) -> set[str]:
        """All codes reachable upward from ``ref``, including itself."""
        code = self.resolve(ref)
        seen: set[str] = set()
        stack = [code.ref]
        while stack:
            current = stack.pop()
            if current in seen:
                continue
            seen.add(current)
            cur = self.resolve(current)
            stack.extend(make_ref(cur.system, p) for p in cur.parents)
        return seen

    def descendants(self, ref: str) -> set[str]:
        """All codes ``c`` with ``is_a(c, ref)``, including ``ref`` itself."""
        root = self.resolve(ref)
        seen: set[str] = set()
        stack = [root.ref]
        while stack:
            current = stack.pop()
            if current in seen:
                continue
            seen.add(current)
            stack.extend(self._children.get(current, ()))
        return seen

    def codes_in_range(self, system: str, start: str, end: str) -> list[str]:
        """Codes of ``system`` whose id sorts within [start, end] (inclusive)."""
        cs = self.system(system)
        lo, hi = (start, end) if start <= end else (end, start)
        return sorted(cs.codes[c].ref for c in cs.codes if lo <= c <= hi)

    # -- cross-terminology exact-match map ------------------------------

    def add_cross_pairs(self, pairs: list[tuple[str, str]]) -> None:
        for a, b in pairs:
            ra = self.resolve(a).ref
            rb = self.resolve(b).ref
            self._crossmap.setdefault(ra, set()).add(rb)
            self._crossmap.setdefault(rb, set()).add(ra)

    def transcode(self, ref: str, target_system: str) -> set[str]:
        """Exact-match translations of ``ref`` into ``target_system``.

        Follows direct map entries plus one intermediate hop through another
        system (pivot). Returns an empty set when nothing maps.
        """
        code = self.resolve(ref)
        target = target_system.upper()
        if code.system == target:
            return {code.ref}
        direct = self._crossmap.get(code.ref, set())
        out = {r for r in direct if parse_ref(r)[0] == target}
        for mid in direct:
            if parse_ref(mid)[0] == target:
                continue
            for far in self._crossmap.get(mid, set()):
                if far != code.ref and parse_ref(far)[0] == target:
                    out.add(far)
        return out


def _check_acyclic(system: CodeSystem) -> None:
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {c: WHITE for c in system.codes}

    for start in system.codes:
        if color[start] != WHITE:
            continue
        stack: list[tuple[str, int]] = [(start, 0)]
        color[start] = GRAY
        while stack:
            node, idx = stack[-1]
            parents = system.codes[node].parents
            if idx < len(parents):
                stack[-1] = (node, idx + 1)
                nxt = parents[idx]
                if color[nxt] == GRAY:
                    raise HierarchyCycleError(
                        f"cycle in {system.id} hierarchy through code {nxt!r}"
                    )
                if color[nxt] == WHITE:
                    color[nxt] = GRAY
                    stack.append((nxt, 0))
            else:
                color[node] = BLACK
                stack.pop()


def load_terminology(path: str | Path) -> TerminologyStore:
    """Load one or more code systems from a tab-separated terminology file.

    Format, one record per line: ``system<TAB>code<TAB>label<TAB>p1;p2;...``
    (the parent field may be empty or absent). Blank lines and ``#`` comments
    are skipped.
    """
    systems: dict[str, CodeSystem] = {}
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) < 3:
            raise TerminologyParseError(
                f"expected system<TAB>code<TAB>label[<TAB>parents], got {line!r}", line_no
            )
        system_id = fields[0].strip().upper()
        code_id = fields[1].strip()
        label = fields[2].strip()
        parents = tuple(p.strip() for p in fields[3].split(";") if p.strip()) if len(fields) > 3 else ()
        if not system_id or not code_id:
            raise TerminologyParseError("empty system or code field", line_no)
        system = systems.setdefault(system_id, CodeSystem(id=system_id))
        if code_id in system.codes:
            raise TerminologyParseError(f"duplicate code {system_id}:{code_id}", line_no)
        system.codes[code_id] = Code(system=system_id, id=code_id, label=label, parents=parents)

    for system in systems.values():
        for code in system.codes.values():
            for parent in code.parents:
                if parent == code.id:
                    raise HierarchyCycleError(
                        f"cycle in {system.id} hierarchy through code {parent!r}"
                    )
                if parent not in system.codes:
                    raise DanglingParentError(
                        f"code {code.ref} names missing parent {system.id}:{parent}"
                    )
        _check_acyclic(system)

    return TerminologyStore(systems)


def load_crossmap(store: TerminologyStore, path: str | Path) -> None:
    """Load exact-match pairs (``system:code<TAB>system:code`` per line)."""
    pairs: list[tuple[str, str]] = []
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise TerminologyParseError(f"expected two tab-separated refs, got {line!r}", line_no)
        pairs.append((fields[0], fields[1]))
    store.add_cross_pairs(pairs)
