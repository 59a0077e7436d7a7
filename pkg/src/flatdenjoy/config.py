"""Run configuration: ``key=value`` text plus overrides, with a stable hash."""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass, fields, replace

from . import rotation as R
from .construction import AnchorConfig
from .errors import LengthTooSmall, PreconditionError

_SQRT = re.compile(r"^sqrt\(?([0-9.]+)\)?(?:/([0-9.]+))?$")

# keys that only steer where output goes, so they stay out of the hash
_UNHASHED = ("out",)

ANCHORED_DEFAULTS = {"eps": 0.05, "l": 0.3, "p": 0.2, "anchor_K": 0.5}


def parse_real(text: str) -> float:
    """A float, or ``sqrt(a)/b`` / ``sqrt2/8`` written out."""
    t = str(text).strip().replace(" ", "")
    m = _SQRT.match(t)
    if m:
        val = math.sqrt(float(m.group(1)))
        return val / float(m.group(2)) if m.group(2) else val
    return float(t)


def parse_rho(text: str) -> R.QuadraticIrrational:
    """``golden``, ``silver`` or ``cf:a1,a2,.../p1,p2`` (head / repeating block)."""
    t = str(text).strip()
    if t in R.NAMED:
        return R.NAMED[t]
    if t.startswith("cf:"):
        head, _, period = t[3:].partition("/")
        nums = lambda s: [int(a) for a in s.split(",") if a]
        return R.from_quotients(nums(head), nums(period))
    raise PreconditionError(f"unknown rotation target {t!r}")


@dataclass(frozen=True)
class RunConfig:
    rho: str = "golden"
    eps: str = "sqrt(2)/8"
    l: float = 0.75
    K: int = 1
    anchored: bool = False
    p: float = 0.2
    anchor_K: float = 0.5
    M_max: int = 0  # 0 selects the default hit budget
    enclosure_n: int = 100_000
    samples: int = 1000
    iters: int = 0  # 0 selects r_K
    seed: int = 0
    out: str = "out"

    # -- resolved values ------------------------------------------------------
    @property
    def rho_value(self) -> R.QuadraticIrrational:
        return parse_rho(self.rho)

    @property
    def eps_value(self) -> float:
        return parse_real(self.eps)

    @property
    def anchor(self) -> AnchorConfig | None:
        return AnchorConfig(self.p, self.anchor_K) if self.anchored else None

    def validate(self) -> "RunConfig":
        eps = self.eps_value
        self.rho_value
        if not eps > 0:
            raise PreconditionError("eps must be positive")
        if not 0 < self.l < 1:
            raise PreconditionError("l must lie in (0, 1)")
        if self.l <= 4 * eps:
            raise LengthTooSmall(f"l={self.l} must exceed 4*eps={4 * eps:.6g}")
        if self.K < 1:
            raise PreconditionError("K must be >= 1")
        if self.samples < 100:
            raise PreconditionError("samples must be >= 100")
        if self.enclosure_n < 1 or self.M_max < 0 or self.iters < 0:
            raise PreconditionError("budgets must be non-negative")
        if self.anchored:
            self.anchor  # noqa: B018  (checks K > 0)
        return self

    def canonical(self) -> str:
        lines = [f"{f.name}={_text(getattr(self, f.name))}"
                 for f in fields(self) if f.name not in _UNHASHED]
        return "\n".join(lines) + "\n"

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]


def _text(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _coerce(name: str, value):
    kind = {f.name: f.type for f in fields(RunConfig)}[name]
    if kind == "bool":
        if isinstance(value, bool):
            return value
        s = str(value).strip().lower()
        if s not in ("true", "false", "1", "0", "yes", "no"):
            raise PreconditionError(f"{name}: expected a boolean, got {value!r}")
        return s in ("true", "1", "yes")
    if kind == "int":
        return int(value)
    if kind == "float":
        return parse_real(value)
    return str(value).strip()


def parse_text(text: str) -> dict:
    """``key=value`` lines; ``#`` starts a comment."""
    out = {}
    known = {f.name for f in fields(RunConfig)}
    for no, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or key not in known:
            raise PreconditionError(f"config line {no}: cannot read {line!r}")
        out[key] = value.strip()
    return out


def build(text: str = "", **overrides) -> RunConfig:
    """Config from file text plus overrides (``None`` overrides are ignored)."""
    raw = parse_text(text)
    raw.update({k: v for k, v in overrides.items() if v is not None})
    vals = {k: _coerce(k, v) for k, v in raw.items()}
    if _coerce("anchored", vals.get("anchored", False)):
        for k, v in ANCHORED_DEFAULTS.items():
            vals.setdefault(k, str(v) if k == "eps" else v)
    return replace(RunConfig(), **vals).validate()
