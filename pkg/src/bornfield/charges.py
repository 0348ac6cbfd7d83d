"""Point-source configurations and unit systems.

A configuration is a finite list of point charges (position, amplitude) with
a unit system attached.  Amplitudes are always stored dimensionless; the unit
system records how they were obtained and how report quantities convert back:

* dimensionless — amplitudes a_n given directly;
* electrostatic(beta, alpha) — integer charges z_n, a_n = beta^2 * z_n;
* geometric — integral mean curvatures mu_n, a_n = (3 / 4 pi) * mu_n.

Coincident points are equivalent to a single point carrying the summed
amplitude, so :func:`normalize` merges them (and drops merged groups whose
total vanishes).  Distances below ``COINCIDENCE_TOL`` count as coincident.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "COINCIDENCE_TOL",
    "PointCharge",
    "UnitSystem",
    "ChargeConfiguration",
    "normalize",
    "to_dimensionless",
    "read_config_file",
    "write_config_file",
]

COINCIDENCE_TOL = 1e-12

FOUR_PI = 4.0 * math.pi


@dataclass(frozen=True)
class PointCharge:
    """A Dirac source: location in R^3 and nonzero dimensionless amplitude."""

    position: tuple[float, float, float]
    amplitude: float

    def __post_init__(self):
        pos = tuple(float(c) for c in self.position)
        if len(pos) != 3 or not all(math.isfinite(c) for c in pos):
            raise ValueError(f"charge position must be a finite 3-vector, got {self.position}")
        amp = float(self.amplitude)
        if not math.isfinite(amp) or amp == 0.0:
            raise ValueError(f"charge amplitude must be finite and nonzero, got {self.amplitude}")
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "amplitude", amp)


@dataclass(frozen=True)
class UnitSystem:
    """One of the three input unit conventions.

    ``kind`` is "dimensionless", "electrostatic" or "geometric".  The
    electrostatic system carries Born's field-strength parameter beta > 0 and
    the energy prefactor alpha > 0 (the fine-structure constant in the
    source convention); the other systems ignore both.
    """

    kind: str
    beta: float = 1.0
    alpha: float = 1.0

    KINDS = ("dimensionless", "electrostatic", "geometric")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown unit system {self.kind!r}; expected one of {self.KINDS}")
        if self.kind == "electrostatic" and (self.beta <= 0.0 or self.alpha <= 0.0):
            raise ValueError("electrostatic units need beta > 0 and alpha > 0")

    @classmethod
    def dimensionless(cls) -> "UnitSystem":
        return cls("dimensionless")

    @classmethod
    def electrostatic(cls, beta: float, alpha: float = 1.0) -> "UnitSystem":
        return cls("electrostatic", beta=float(beta), alpha=float(alpha))

    @classmethod
    def geometric(cls) -> "UnitSystem":
        return cls("geometric")

    def amplitude_from_raw(self, raw: float) -> float:
        """Dimensionless amplitude from a raw input in these units."""
        raw = float(raw)
        if raw == 0.0:
            raise ValueError("raw amplitude must be nonzero")
        if self.kind == "dimensionless":
            return raw
        if self.kind == "electrostatic":
            z = round(raw)
            if z == 0 or abs(raw - z) > 1e-9:
                raise ValueError(f"electrostatic charge must be a nonzero integer, got {raw}")
            return self.beta**2 * z
        # geometric: a = (3 / 4 pi) * mu
        return 3.0 * raw / FOUR_PI

    def raw_from_amplitude(self, amplitude: float) -> float:
        """Back-conversion of a dimensionless amplitude to these units."""
        if self.kind == "dimensionless":
            return amplitude
        if self.kind == "electrostatic":
            return amplitude / self.beta**2
        return FOUR_PI * amplitude / 3.0


@dataclass(frozen=True)
class ChargeConfiguration:
    """Normalized list of point charges plus the unit system they came in."""

    charges: tuple[PointCharge, ...]
    units: UnitSystem = field(default_factory=UnitSystem.dimensionless)

    def __post_init__(self):
        object.__setattr__(self, "charges", tuple(self.charges))

    def __len__(self) -> int:
        return len(self.charges)

    @property
    def positions(self) -> np.ndarray:
        """(N, 3) array of source locations."""
        if not self.charges:
            return np.zeros((0, 3))
        return np.array([c.position for c in self.charges])

    @property
    def amplitudes(self) -> np.ndarray:
        if not self.charges:
            return np.zeros(0)
        return np.array([c.amplitude for c in self.charges])

    @property
    def total_amplitude(self) -> float:
        return float(self.amplitudes.sum())

    @property
    def mean_abs_amplitude(self) -> float:
        """Mean of |a_n| (the trial-function bound uses this)."""
        if not self.charges:
            return 0.0
        return float(np.abs(self.amplitudes).mean())

    @property
    def min_pairwise_distance(self) -> float:
        """Smallest distance between distinct sources; inf when N < 2."""
        pos = self.positions
        if len(pos) < 2:
            return math.inf
        d = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
        return float(d[np.triu_indices(len(pos), k=1)].min())

    @property
    def separation_radius(self) -> float:
        """Half the minimum pairwise distance (the trial-ball radius bound)."""
        return self.min_pairwise_distance / 2.0


def normalize(config: ChargeConfiguration) -> ChargeConfiguration:
    """Merge coincident sources and order the result deterministically.

    Positions within COINCIDENCE_TOL of each other are treated as one point;
    their amplitudes are summed and groups with (numerically) zero total are
    dropped.  Output order is lexicographic by position, so normalize is
    idempotent and run-to-run stable.  An empty result is legal (it encodes
    the trivial zero-source problem).
    """
    charges = list(config.charges)
    merged: list[tuple[tuple[float, float, float], float, float]] = []  # pos, sum, scale
    for c in charges:
        for i, (pos, total, scale) in enumerate(merged):
            if math.dist(pos, c.position) <= COINCIDENCE_TOL:
                merged[i] = (pos, total + c.amplitude, scale + abs(c.amplitude))
                break
        else:
            merged.append((c.position, c.amplitude, abs(c.amplitude)))
    kept = [
        PointCharge(pos, total)
        for pos, total, scale in merged
        if abs(total) > 1e-15 * scale
    ]
    kept.sort(key=lambda c: c.position)
    return ChargeConfiguration(tuple(kept), config.units)


def to_dimensionless(
    raw_charges: Iterable[tuple[Sequence[float], float]], units: UnitSystem
) -> ChargeConfiguration:
    """Build a normalized configuration from raw (position, amplitude) pairs.

    Raw amplitudes are z_k (electrostatic), mu_k (geometric) or a_k
    (dimensionless); see :class:`UnitSystem`.
    """
    charges = tuple(
        PointCharge(tuple(pos), units.amplitude_from_raw(raw)) for pos, raw in raw_charges
    )
    return normalize(ChargeConfiguration(charges, units))


def read_config_file(path) -> ChargeConfiguration:
    """Parse the line-oriented charge file.

    Format: optional header ``units dimensionless`` /
    ``units electrostatic BETA ALPHA`` / ``units geometric``, then one
    ``x y z amplitude`` line per charge.  ``#`` starts a comment.
    """
    units = UnitSystem.dimensionless()
    raw: list[tuple[tuple[float, float, float], float]] = []
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if tokens[0] == "units":
            if raw:
                raise ValueError(f"{path}:{lineno}: units header must precede charges")
            kind = tokens[1] if len(tokens) > 1 else ""
            if kind == "dimensionless" and len(tokens) == 2:
                units = UnitSystem.dimensionless()
            elif kind == "electrostatic" and len(tokens) == 4:
                units = UnitSystem.electrostatic(float(tokens[2]), float(tokens[3]))
            elif kind == "geometric" and len(tokens) == 2:
                units = UnitSystem.geometric()
            else:
                raise ValueError(f"{path}:{lineno}: malformed units line {line!r}")
            continue
        if len(tokens) != 4:
            raise ValueError(f"{path}:{lineno}: expected 'x y z amplitude', got {line!r}")
        x, y, z, a = (float(t) for t in tokens)
        raw.append(((x, y, z), a))
    return to_dimensionless(raw, units)


def write_config_file(path, config: ChargeConfiguration) -> None:
    """Inverse of :func:`read_config_file`, amplitudes back-converted."""
    u = config.units
    lines = []
    if u.kind == "electrostatic":
        lines.append(f"units electrostatic {u.beta:.17g} {u.alpha:.17g}")
    else:
        lines.append(f"units {u.kind}")
    for c in config.charges:
        raw = u.raw_from_amplitude(c.amplitude)
        x, y, z = c.position
        lines.append(f"{x:.17g} {y:.17g} {z:.17g} {raw:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")
