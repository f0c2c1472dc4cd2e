"""Grid data model and the sectioned ``.case`` text format.

A case file has up to four sections, each introduced by a ``[name]`` line and
followed by a header row naming the columns::

    [case]
    name,base_mva
    rts79,100

    [buses]
    id,is_slack,pd,qd,vmin,vmax
    ...

    [branches]
    index,from_bus,to_bus,r,x,b_shunt,rating
    ...

    [units]
    bus_id,pmax,pmin,for_rate
    ...

Records are comma separated, ``#`` starts a comment.  ``pmin`` may be omitted
(defaults to 0) and ``rating`` accepts ``inf`` for an unbounded branch.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources

__all__ = [
    "Bus",
    "Branch",
    "GeneratorUnit",
    "GridCase",
    "CaseFormatError",
    "parse_case",
    "format_case",
    "load_case",
    "load_rts79",
    "case_totals",
]


class CaseFormatError(ValueError):
    """Raised when case-file text is malformed or violates a case invariant."""


@dataclass(frozen=True)
class Bus:
    id: int
    is_slack: bool
    pd: float
    qd: float = 0.0
    vmin: float = 0.95
    vmax: float = 1.05


@dataclass(frozen=True)
class Branch:
    index: int
    from_bus: int
    to_bus: int
    r: float
    x: float
    b_shunt: float = 0.0
    rating: float = math.inf


@dataclass(frozen=True)
class GeneratorUnit:
    bus_id: int
    pmax: float
    pmin: float = 0.0
    for_rate: float = 0.0


@dataclass(frozen=True)
class GridCase:
    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    units: tuple[GeneratorUnit, ...]
    base_mva: float = 100.0
    name: str = "case"

    @property
    def n_bus(self) -> int:
        return len(self.buses)

    def bus_index(self) -> dict[int, int]:
        """Map bus id to its row/column position."""
        return {b.id: k for k, b in enumerate(self.buses)}

    @property
    def slack_position(self) -> int:
        for k, b in enumerate(self.buses):
            if b.is_slack:
                return k
        raise CaseFormatError("no slack bus")

    def branch_by_index(self) -> dict[int, Branch]:
        return {br.index: br for br in self.branches}


_COLUMNS = {
    "case": (("name", "base_mva"), ()),
    "buses": (("id", "is_slack", "pd", "qd", "vmin", "vmax"), ()),
    "branches": (("index", "from_bus", "to_bus", "r", "x", "b_shunt", "rating"), ()),
    "units": (("bus_id", "pmax", "for_rate"), ("pmin",)),
}


def _to_bool(tok: str) -> bool:
    t = tok.strip().lower()
    if t in ("1", "true", "yes"):
        return True
    if t in ("0", "false", "no"):
        return False
    raise ValueError(f"not a boolean: {tok!r}")


def _to_float(tok: str) -> float:
    v = float(tok)
    if math.isnan(v):
        raise ValueError("NaN not allowed")
    return v


def _to_int(tok: str) -> int:
    v = float(tok)
    if v != int(v):
        raise ValueError(f"not an integer: {tok!r}")
    return int(v)


def parse_case(text: str) -> GridCase:
    """Parse case-file text into a validated :class:`GridCase`."""
    section = None
    header: list[str] | None = None
    rows: dict[str, list[tuple[int, dict[str, str]]]] = {k: [] for k in _COLUMNS}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise CaseFormatError(f"line {lineno}: malformed section header {raw.strip()!r}")
            section = line[1:-1].strip().lower()
            if section not in _COLUMNS:
                raise CaseFormatError(f"line {lineno}: unknown section [{section}]")
            header = None
            continue
        if section is None:
            raise CaseFormatError(f"line {lineno}: record outside any section")
        fields = [f.strip() for f in line.split(",")]
        if header is None:
            required, optional = _COLUMNS[section]
            missing = [c for c in required if c not in fields]
            unknown = [c for c in fields if c not in required and c not in optional]
            if missing or unknown:
                raise CaseFormatError(
                    f"line {lineno}: bad [{section}] header; missing {missing}, unknown {unknown}"
                )
            header = fields
            continue
        if len(fields) != len(header):
            raise CaseFormatError(
                f"line {lineno}: [{section}] record has {len(fields)} fields, header has {len(header)}"
            )
        rows[section].append((lineno, dict(zip(header, fields))))

    name, base_mva = "case", 100.0
    if rows["case"]:
        if len(rows["case"]) > 1:
            raise CaseFormatError(f"line {rows['case'][1][0]}: [case] takes a single record")
        lineno, rec = rows["case"][0]
        try:
            name = rec["name"]
            base_mva = _to_float(rec["base_mva"])
        except ValueError as exc:
            raise CaseFormatError(f"line {lineno}: {exc}") from None

    buses = []
    for lineno, rec in rows["buses"]:
        try:
            buses.append(
                Bus(
                    id=_to_int(rec["id"]),
                    is_slack=_to_bool(rec["is_slack"]),
                    pd=_to_float(rec["pd"]),
                    qd=_to_float(rec["qd"]),
                    vmin=_to_float(rec["vmin"]),
                    vmax=_to_float(rec["vmax"]),
                )
            )
        except ValueError as exc:
            raise CaseFormatError(f"line {lineno}: bus record: {exc}") from None

    branches = []
    for lineno, rec in rows["branches"]:
        try:
            branches.append(
                Branch(
                    index=_to_int(rec["index"]),
                    from_bus=_to_int(rec["from_bus"]),
                    to_bus=_to_int(rec["to_bus"]),
                    r=_to_float(rec["r"]),
                    x=_to_float(rec["x"]),
                    b_shunt=_to_float(rec["b_shunt"]),
                    rating=_to_float(rec["rating"]),
                )
            )
        except ValueError as exc:
            raise CaseFormatError(f"line {lineno}: branch record: {exc}") from None

    units = []
    for lineno, rec in rows["units"]:
        try:
            units.append(
                GeneratorUnit(
                    bus_id=_to_int(rec["bus_id"]),
                    pmax=_to_float(rec["pmax"]),
                    pmin=_to_float(rec.get("pmin", "0") or "0"),
                    for_rate=_to_float(rec["for_rate"]),
                )
            )
        except ValueError as exc:
            raise CaseFormatError(f"line {lineno}: unit record: {exc}") from None

    lines = {
        "buses": [ln for ln, _ in rows["buses"]],
        "branches": [ln for ln, _ in rows["branches"]],
        "units": [ln for ln, _ in rows["units"]],
    }
    case = GridCase(tuple(buses), tuple(branches), tuple(units), base_mva=base_mva, name=name)
    validate_case(case, lines)
    return case


def validate_case(case: GridCase, lines: dict[str, list[int]] | None = None) -> None:
    """Check every GridCase invariant, raising :class:`CaseFormatError`."""

    def where(kind: str, k: int) -> str:
        if lines and k < len(lines.get(kind, ())):
            return f"line {lines[kind][k]}: "
        return f"{kind[:-1]} #{k + 1}: "

    if not case.buses:
        raise CaseFormatError("no buses defined")
    if case.base_mva <= 0:
        raise CaseFormatError(f"base_mva must be positive, got {case.base_mva}")

    seen: set[int] = set()
    for k, b in enumerate(case.buses):
        if b.id < 1:
            raise CaseFormatError(f"{where('buses', k)}bus id must be >= 1, got {b.id}")
        if b.id in seen:
            raise CaseFormatError(f"{where('buses', k)}duplicate bus id {b.id}")
        seen.add(b.id)
        if b.pd < 0:
            raise CaseFormatError(f"{where('buses', k)}negative load on bus {b.id}")
        if b.vmin > b.vmax:
            raise CaseFormatError(f"{where('buses', k)}vmin > vmax on bus {b.id}")
    slack = [b.id for b in case.buses if b.is_slack]
    if not slack:
        raise CaseFormatError("no slack bus")
    if len(slack) > 1:
        raise CaseFormatError(f"multiple slack buses: {slack}")

    seen_br: set[int] = set()
    for k, br in enumerate(case.branches):
        pre = where("branches", k)
        if br.index in seen_br:
            raise CaseFormatError(f"{pre}duplicate branch index {br.index}")
        seen_br.add(br.index)
        for end in (br.from_bus, br.to_bus):
            if end not in seen:
                raise CaseFormatError(f"{pre}branch {br.index} references unknown bus {end}")
        if br.from_bus == br.to_bus:
            raise CaseFormatError(f"{pre}branch {br.index} is a self loop")
        if br.x <= 0:
            raise CaseFormatError(f"{pre}branch {br.index} must have x > 0")
        if br.rating <= 0:
            raise CaseFormatError(f"{pre}branch {br.index} must have rating > 0")

    for k, u in enumerate(case.units):
        pre = where("units", k)
        if u.bus_id not in seen:
            raise CaseFormatError(f"{pre}unit references unknown bus {u.bus_id}")
        if not 0 <= u.pmin <= u.pmax:
            raise CaseFormatError(f"{pre}unit needs 0 <= pmin <= pmax")
        if not 0 <= u.for_rate <= 1:
            raise CaseFormatError(f"{pre}for_rate must lie in [0, 1]")

    # imported here: network depends on this module
    from .network import is_connected

    if not is_connected(case):
        raise CaseFormatError("base topology is disconnected")


def _fmt(v: float) -> str:
    if math.isinf(v):
        return "inf"
    return repr(float(v))


def format_case(case: GridCase) -> str:
    """Serialize a case back to text; ``parse_case(format_case(c)) == c``."""
    out = ["[case]", "name,base_mva", f"{case.name},{_fmt(case.base_mva)}", "", "[buses]"]
    out.append("id,is_slack,pd,qd,vmin,vmax")
    for b in case.buses:
        out.append(f"{b.id},{int(b.is_slack)},{_fmt(b.pd)},{_fmt(b.qd)},{_fmt(b.vmin)},{_fmt(b.vmax)}")
    out += ["", "[branches]", "index,from_bus,to_bus,r,x,b_shunt,rating"]
    for br in case.branches:
        out.append(
            f"{br.index},{br.from_bus},{br.to_bus},{_fmt(br.r)},{_fmt(br.x)},"
            f"{_fmt(br.b_shunt)},{_fmt(br.rating)}"
        )
    out += ["", "[units]", "bus_id,pmax,pmin,for_rate"]
    for u in case.units:
        out.append(f"{u.bus_id},{_fmt(u.pmax)},{_fmt(u.pmin)},{_fmt(u.for_rate)}")
    return "\n".join(out) + "\n"


def load_case(path) -> GridCase:
    with open(path, encoding="utf-8") as fh:
        return parse_case(fh.read())


def rts79_text() -> str:
    return resources.files("toporel").joinpath("data/rts79.case").read_text(encoding="utf-8")


def load_rts79() -> GridCase:
    """The bundled IEEE RTS-79 fixture (24 buses, 38 branches, 32 units)."""
    return parse_case(rts79_text())


def case_totals(case: GridCase) -> tuple[float, float]:
    """Return ``(total_load_mw, total_capacity_mw)``."""
    return sum(b.pd for b in case.buses), sum(u.pmax for u in case.units)
