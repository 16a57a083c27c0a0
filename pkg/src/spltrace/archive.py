"""Plain-text world archive: model, allocation counters, event log,
address records and the routing-table dump, separated by ``%%`` headers."""

from __future__ import annotations

from .model import parse_model, serialize_model
from .partition import AllocationSeed
from .reconcile import parse_changes
from .world import LogEntry, World, build_world

MAGIC = "%% spltrace-archive 1"
_SECTIONS = ("model", "counters", "log", "plan", "tables")


class ArchiveError(ValueError):
    pass


def is_archive(text: str) -> bool:
    return text.startswith(MAGIC)


def dump_archive(world: World) -> str:
    plan_lines = world.plan.serialize().splitlines(keepends=True)
    counters = "".join(l for l in plan_lines if not l.startswith("addr "))
    records = "".join(l for l in plan_lines if l.startswith("addr "))
    log = "".join(f"{e.seq}\t{e.op.text()}\t{e.digest}\n" for e in world.log)
    return (
        f"{MAGIC}\n"
        f"%% subnet-base {world.subnet_base}\n"
        "%% model\n" + serialize_model(world.model)
        + "%% counters\n" + counters
        + "%% log\n" + log
        + "%% plan\n" + records
        + "%% tables\n" + world.table_dump()
        + "%% end\n"
    )


def _split(text: str) -> tuple[int, dict[str, str]]:
    lines = text.splitlines(keepends=True)
    if not lines or lines[0].rstrip("\n") != MAGIC:
        raise ArchiveError("not a spltrace archive")
    if len(lines) < 2 or not lines[1].startswith("%% subnet-base "):
        raise ArchiveError("missing subnet-base header")
    try:
        base = int(lines[1].split()[2])
    except ValueError:
        raise ArchiveError("bad subnet-base header") from None
    sections: dict[str, list[str]] = {}
    current = None
    for line in lines[2:]:
        if line.startswith("%% "):
            name = line[3:].strip()
            if name == "end":
                current = None
                break
            if name not in _SECTIONS or name in sections:
                raise ArchiveError(f"unexpected section {name!r}")
            current = sections.setdefault(name, [])
        elif current is None:
            raise ArchiveError("content outside a section")
        else:
            current.append(line)
    else:
        raise ArchiveError("archive is truncated (no %% end)")
    missing = [s for s in _SECTIONS if s not in sections]
    if missing:
        raise ArchiveError(f"missing sections: {', '.join(missing)}")
    return base, {k: "".join(v) for k, v in sections.items()}


def load_archive(text: str, backend: str | None = None) -> World:
    """Rebuild the stored world and check it reproduces the stored tables."""
    base, sec = _split(text)
    model = parse_model(sec["model"])
    try:
        seed = AllocationSeed.parse(sec["counters"] + sec["plan"])
    except ValueError as exc:
        raise ArchiveError(str(exc)) from None
    log = []
    for line in sec["log"].splitlines():
        try:
            seq, op_text, digest = line.split("\t")
            (op,) = parse_changes(op_text)
            log.append(LogEntry(int(seq), op, digest))
        except ValueError:
            raise ArchiveError(f"bad log line {line!r}") from None
    world = build_world(model, base, seed, backend=backend, log=tuple(log))
    if world.plan.serialize() != sec["counters"] + sec["plan"]:
        raise ArchiveError("address plan does not match the stored records")
    if world.table_dump() != sec["tables"]:
        raise ArchiveError("rebuilt routing tables differ from the stored dump")
    return world

