"""Stage checkpoints: a map descriptor file plus a text state sidecar.

A checkpoint for stage ``n`` is the pair ``stage_<n>.map`` / ``stage_<n>.state``
and, from stage 1 on, ``stage_<n>.prev.map`` with the previous stage's map.
Floats are written with ``repr`` so a reload is exact.
"""

from __future__ import annotations

from dataclasses import astuple, fields
from pathlib import Path

from .circle_core import IntervalOnCircle, from_text, to_text
from .construction import AnchorConfig, StageBudget, StageState

HEADER = "stage/1"


def _f(x) -> str:
    return repr(float(x))


def state_text(S: StageState, config_hash: str | None = None) -> str:
    lines = []
    if config_hash:
        lines.append(f"# config {config_hash}")
    lines += [
        HEADER,
        f"n {S.n}",
        f"U {_f(S.U.a)} {_f(S.U.b)}",
        f"I {_f(S.I.a)} {_f(S.I.b)}",
        "schedule " + " ".join(str(int(r)) for r in S.schedule),
        f"eps {_f(S.eps)}",
        f"rho {_f(S.rho)}",
        f"l {_f(S.l)}",
    ]
    if S.anchor is not None:
        lines.append(f"anchor {_f(S.anchor.p)} {_f(S.anchor.K)}")
    for b in S.budgets:
        vals = [v if isinstance(v, str) else (str(v) if isinstance(v, int) else _f(v))
                for v in astuple(b)]
        lines.append("budget " + " ".join(vals))
    return "\n".join(lines) + "\n"


def _budget(tokens) -> StageBudget:
    vals = []
    for fd, tok in zip(fields(StageBudget), tokens):
        kind = fd.type if isinstance(fd.type, str) else fd.type.__name__
        vals.append(tok if kind == "str" else int(tok) if kind == "int" else float(tok))
    return StageBudget(*vals)


def parse_state(text: str, M, prev=None) -> StageState:
    lines = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0] != [HEADER]:
        raise ValueError(f"missing '{HEADER}' header")
    kv, budgets = {}, []
    for key, *rest in lines[1:]:
        if key == "budget":
            budgets.append(_budget(rest))
        else:
            kv[key] = rest
    anchor = None
    if "anchor" in kv:
        anchor = AnchorConfig(float(kv["anchor"][0]), float(kv["anchor"][1]))
    return StageState(
        n=int(kv["n"][0]), map=M,
        U=IntervalOnCircle(*map(float, kv["U"])),
        schedule=tuple(int(r) for r in kv["schedule"]),
        I=IntervalOnCircle(*map(float, kv["I"])),
        eps=float(kv["eps"][0]), rho=float(kv["rho"][0]), l=float(kv["l"][0]),
        anchor=anchor, prev=prev, budgets=tuple(budgets))


def _with_header(text: str, config_hash: str | None) -> str:
    return (f"# config {config_hash}\n" if config_hash else "") + text


def save(S: StageState, directory, config_hash: str | None = None) -> Path:
    """Write the stage ``S.n`` checkpoint into ``directory``; returns the sidecar path."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    stem = d / f"stage_{S.n}"
    stem.with_suffix(".map").write_text(_with_header(to_text(S.map), config_hash))
    if S.prev is not None:
        Path(f"{stem}.prev.map").write_text(_with_header(to_text(S.prev), config_hash))
    side = stem.with_suffix(".state")
    side.write_text(state_text(S, config_hash))
    return side


def load(path) -> StageState:
    """Load a checkpoint from its ``.state`` sidecar (or the ``.map`` next to it)."""
    p = Path(path)
    stem = p.with_suffix("") if p.suffix in (".state", ".map") else p
    M = from_text(Path(f"{stem}.map").read_text())
    prev_path = Path(f"{stem}.prev.map")
    prev = from_text(prev_path.read_text()) if prev_path.exists() else None
    return parse_state(Path(f"{stem}.state").read_text(), M, prev)
