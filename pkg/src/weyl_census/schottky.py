"""Schottky generator systems: loading, numerical validation, word evaluation.

Each generator ``h_m`` contributes two letters, ``h_m`` and ``h_m^-1``.  The
fixed flag attached to a letter is its attracting flag, so the letter of
``h_m`` carries ``h_m^+`` and the letter of ``h_m^-1`` carries ``h_m^-``.
Neighbourhoods of these flags are metric balls of one shared radius in
:func:`~weyl_census.symspace.flag_distance`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import numpy as np
from scipy.linalg import expm
from scipy.spatial import cKDTree

from . import freegroup as fg
from .errors import (
    DimensionMismatch,
    NoPowerFound,
    NotRegular,
    NotTransverse,
    NotUnimodular,
    Overflow,
    ParseError,
    PingPongFailed,
)
from .symspace import (
    Flag,
    Tolerances,
    cartan_projection,
    fixed_flags,
    flag_distance,
    inverse,
    jordan_projection,
    orbit_distance,
    orthonormalize,
    transversality_margin,
)

RESCALE_EVERY = 8
OVERFLOW_LIMIT = 1e300
UNIMODULAR_SLACK = 1e-6


@dataclass(frozen=True)
class GroupElement:
    """A reduced word with its matrix and the matrix of the inverse word.

    The inverse is multiplied out letter by letter rather than obtained by
    inverting ``matrix``, which would lose the small singular values.
    """

    word: tuple
    matrix: np.ndarray
    inverse: np.ndarray | None = None

    def cartan(self) -> np.ndarray:
        return cartan_projection(self.matrix, self.inverse)

    def distance(self) -> float:
        return float(np.linalg.norm(self.cartan()))


@dataclass(frozen=True, eq=False)
class SchottkySystem:
    """A generator tuple with the per-letter data used by validation and census.

    ``letters[c]`` is the matrix of letter ``c`` (see :mod:`freegroup` for the
    letter encoding) and ``letter_inverses[c] == letters[c ^ 1]``.
    """

    dim: int
    seeds: tuple
    power: int = 1
    ball_radius: float = 0.2
    sample_count: int = 1000
    seed: int = 0
    tolerances: Tolerances = field(default_factory=Tolerances)
    distinct_len: int = 8
    name: str = ""
    validated: bool = False

    def __post_init__(self):
        gens = []
        for s in self.seeds:
            g = np.linalg.matrix_power(np.asarray(s, dtype=float), self.power)
            g.setflags(write=False)
            gens.append(g)
        letters = []
        for g in gens:
            letters.append(g)
            gi = inverse(g)
            gi.setflags(write=False)
            letters.append(gi)
        stack = np.stack(letters)
        stack.setflags(write=False)
        object.__setattr__(self, "generators", tuple(gens))
        object.__setattr__(self, "letters", stack)
        object.__setattr__(self, "letter_inverses", stack[np.arange(len(letters)) ^ 1])

    @property
    def rank(self) -> int:
        return self.dim - 1

    @property
    def num_generators(self) -> int:
        return len(self.seeds)

    @property
    def letter_displacement(self) -> np.ndarray:
        return np.asarray(orbit_distance(self.letters, self.letter_inverses))

    @property
    def max_displacement(self) -> float:
        return float(np.max(self.letter_displacement))

    def fixed_flags(self) -> list[Flag]:
        """Attracting flag of every letter; raises NotRegular for a bad generator."""
        out = []
        for m, g in enumerate(self.generators):
            try:
                plus, minus = fixed_flags(g, self.tolerances.gap)
            except NotRegular as exc:
                raise NotRegular(f"generator {self.letter_name(2 * m)} is not regular axial") from exc
            out.extend([plus, minus])
        return out

    def letter_name(self, c: int) -> str:
        return fg.format_word((c,), self.num_generators)

    def with_power(self, p: int) -> "SchottkySystem":
        return replace(self, power=p, validated=False)

    def config(self) -> dict:
        """Configuration document reproducing this system."""
        return {
            "dimension": self.dim,
            "generators": [np.asarray(s, dtype=float).ravel().tolist() for s in self.seeds],
            "power": self.power,
            "ball_radius": self.ball_radius,
            "sample_count": self.sample_count,
            "seed": self.seed,
            "distinct_len": self.distinct_len,
            "tolerances": self.tolerances.to_dict(),
            **({"name": self.name} if self.name else {}),
        }


def _parse_matrix(raw: Any, d: int) -> np.ndarray:
    try:
        arr = np.asarray(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"generator is not numeric: {exc}") from exc
    if arr.shape == (d * d,):
        arr = arr.reshape(d, d)
    if arr.shape != (d, d):
        raise DimensionMismatch(f"generator of shape {arr.shape} in dimension {d}")
    if not np.all(np.isfinite(arr)):
        raise ParseError("generator has non-finite entries")
    det = np.linalg.det(arr)
    if abs(det - 1.0) > UNIMODULAR_SLACK:
        raise NotUnimodular(f"generator determinant {det:.12g} is not 1")
    return arr / det ** (1.0 / d)


def load_system(config: dict | str) -> SchottkySystem:
    """Build an (unvalidated) system from a configuration document or JSON text."""
    if isinstance(config, str):
        try:
            config = json.loads(config)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(config, dict):
        raise ParseError("configuration must be a JSON object")
    try:
        d = int(config["dimension"])
        raw_gens = config["generators"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"missing or malformed field: {exc}") from exc
    if d < 2:
        raise DimensionMismatch("dimension must be at least 2")
    if not isinstance(raw_gens, list) or not raw_gens:
        raise ParseError("generators must be a non-empty list")
    seeds = tuple(_parse_matrix(g, d) for g in raw_gens)
    try:
        tolerances = Tolerances.from_dict(config.get("tolerances"))
        power = int(config.get("power", 1))
        radius = float(config.get("ball_radius", 0.2))
        samples = int(config.get("sample_count", 1000))
        seed = int(config.get("seed", 0))
        distinct_len = int(config.get("distinct_len", 8))
    except (TypeError, ValueError) as exc:
        raise ParseError(str(exc)) from exc
    if power < 1:
        raise ParseError("power must be >= 1")
    if not 0 < radius <= 1:
        raise ParseError("ball_radius must lie in (0, 1]")
    return SchottkySystem(
        dim=d, seeds=seeds, power=power, ball_radius=radius, sample_count=samples,
        seed=seed, tolerances=tolerances, distinct_len=distinct_len,
        name=str(config.get("name", "")),
    )


# --- validation --------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    passed: bool
    margin: float
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed,
                "margin": self.margin, "detail": self.detail}


@dataclass
class ValidationReport:
    checks: list[CheckResult]
    system: SchottkySystem

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def first_failure(self) -> CheckResult | None:
        return next((c for c in self.checks if not c.passed), None)

    def raise_for_failure(self) -> None:
        bad = self.first_failure()
        if bad is None:
            return
        exc = {"regular": NotRegular, "transverse": NotTransverse}.get(bad.name, PingPongFailed)
        raise exc(f"{bad.name}: {bad.detail}")

    def to_dict(self) -> dict:
        s = self.system
        return {
            "passed": self.passed,
            "dimension": s.dim,
            "generators": s.num_generators,
            "power": s.power,
            "ball_radius": s.ball_radius,
            "sample_count": s.sample_count,
            "seed": s.seed,
            "max_displacement": s.max_displacement if self.checks[0].passed else None,
            "checks": [c.to_dict() for c in self.checks],
        }


def sample_ball(center: Flag, radius: float, count: int, rng: np.random.Generator) -> np.ndarray:
    """Frames of ``count`` flags within ``radius`` of ``center``.

    Directions are random skew-symmetric generators; the step along each is
    solved by bisection so the flag distance hits a target radius.  One in
    ten samples sits on the boundary sphere.
    """
    d = center.dim
    if count <= 0:
        return np.empty((0, d, d))
    a = rng.standard_normal((count, d, d))
    a = a - np.swapaxes(a, -1, -2)
    a /= np.linalg.norm(a, axis=(-2, -1), keepdims=True)
    ndim = d * (d - 1) // 2
    target = radius * rng.random(count) ** (1.0 / ndim)
    target[:: 10] = radius
    lo = np.zeros(count)
    hi = np.full(count, np.pi / 2)
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        dist = flag_distance(center.frame @ expm(mid[:, None, None] * a), center)
        below = dist < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return orthonormalize(center.frame @ expm(lo[:, None, None] * a))


def _distinct_words_margin(sys: SchottkySystem, max_len: int) -> tuple[float, str]:
    words = list(fg.enumerate_words(sys.num_generators, max_len))
    mats = np.stack([element(sys, w).matrix.ravel() for w in words])
    tree = cKDTree(mats)
    pairs = tree.query_pairs(1e-6, p=np.inf, output_type="ndarray")
    if len(pairs):
        i, j = pairs[0]
        l = sys.num_generators
        return -1.0, (f"words {fg.format_word(words[i], l)!r} and "
                      f"{fg.format_word(words[j], l)!r} give equal matrices")
    dist, _ = tree.query(mats, k=2, p=np.inf)
    return float(dist[:, 1].min()), f"{len(words)} words of length <= {max_len}"


def validate(sys: SchottkySystem) -> ValidationReport:
    """Numerical Schottky certificate; not a proof.

    Checks run in order and stop at the first structural failure, since
    later checks need the fixed flags.
    """
    tol = sys.tolerances
    checks: list[CheckResult] = []

    gaps = []
    bad = []
    for m, g in enumerate(sys.generators):
        jp = jordan_projection(g)
        gap = float(np.min(-np.diff(jp)))
        gaps.append(gap)
        if gap <= tol.gap:
            bad.append(sys.letter_name(2 * m))
    checks.append(CheckResult(
        "regular", not bad, min(gaps),
        f"not regular axial: {', '.join(bad)}" if bad else "all generators regular axial"))
    if bad:
        return ValidationReport(checks, sys)

    flags = sys.fixed_flags()
    n = len(flags)
    worst, worst_pair = np.inf, None
    for i in range(n):
        for j in range(i + 1, n):
            m = transversality_margin(flags[i], flags[j])
            if m < worst:
                worst, worst_pair = m, (i, j)
    ok = worst > tol.transverse
    names = [sys.letter_name(c) for c in range(n)]
    pair = f"{names[worst_pair[0]]}/{names[worst_pair[1]]}" if worst_pair else ""
    checks.append(CheckResult(
        "transverse", ok, float(worst),
        f"fixed flags of {pair} not transverse" if not ok else f"weakest pair {pair}"))
    if not ok:
        return ValidationReport(checks, sys)

    r = sys.ball_radius
    centre_gap = min(flag_distance(flags[i], flags[j]) for i in range(n) for j in range(i + 1, n))
    checks.append(CheckResult(
        "balls_disjoint", centre_gap > 2 * r, float(centre_gap - 2 * r),
        f"closest fixed flags at distance {centre_gap:.6g}, radius {r}"))

    # shared samples: per ball, sample_count flags plus the centre itself
    samples = []
    for j, f in enumerate(flags):
        rng = np.random.default_rng([sys.seed, j])
        pts = sample_ball(f, r, sys.sample_count, rng)
        samples.append(np.concatenate([f.frame[None], pts]))
    ping_ok = True
    ping_margin = np.inf
    details = []
    for c in range(n):
        worst_img = 0.0
        for j in range(n):
            if j == c ^ 1:
                continue
            img = orthonormalize(sys.letters[c] @ samples[j])
            worst_img = max(worst_img, float(np.max(flag_distance(img, flags[c]))))
        margin = r - worst_img
        ping_margin = min(ping_margin, margin)
        if margin < 0:
            ping_ok = False
            details.append(f"{names[c]} maps a sampled flag to distance {worst_img:.4g}")
    checks.append(CheckResult(
        "ping_pong", ping_ok, float(ping_margin),
        "; ".join(details) if details else f"{n} letters x {sys.sample_count} samples per ball"))

    if sys.distinct_len > 0:
        margin, detail = _distinct_words_margin(sys, sys.distinct_len)
        checks.append(CheckResult("distinct_words", margin > 1e-6, margin, detail))

    report = ValidationReport(checks, sys)
    if report.passed:
        report.system = replace(sys, validated=True)
    return report


def ensure_validated(sys: SchottkySystem) -> SchottkySystem:
    if sys.validated:
        return sys
    report = validate(sys)
    report.raise_for_failure()
    return report.system


def suggest_power(sys: SchottkySystem, max_power: int) -> int:
    """Least power p <= max_power at which the system validates."""
    base = sys.with_power(1)
    flags = base.fixed_flags()
    for i in range(len(flags)):
        for j in range(i + 1, len(flags)):
            if transversality_margin(flags[i], flags[j]) <= sys.tolerances.transverse:
                raise NotTransverse(
                    f"fixed flags of {base.letter_name(i)}/{base.letter_name(j)} are not transverse")
    for p in range(1, max_power + 1):
        if validate(sys.with_power(p)).passed:
            return p
    raise NoPowerFound(f"no power <= {max_power} passes validation")


def element(sys: SchottkySystem, word: Sequence[int]) -> GroupElement:
    """Evaluate a reduced word; the running product is rescaled to det 1 every 8 steps."""
    d = sys.dim
    word = tuple(word)
    m = np.eye(d)
    mi = np.eye(d)
    for k, c in enumerate(word, start=1):
        m = m @ sys.letters[c]
        mi = sys.letter_inverses[c] @ mi
        if k % RESCALE_EVERY == 0:
            m, mi = unit_det(m, mi)
        if not (np.all(np.abs(m) <= OVERFLOW_LIMIT) and np.all(np.abs(mi) <= OVERFLOW_LIMIT)):
            raise Overflow(f"matrix entries exceed {OVERFLOW_LIMIT:g} after {k} letters")
    return GroupElement(word, m, mi)


def word_jordan(sys: SchottkySystem, word: Sequence[int]) -> np.ndarray:
    """Translation vector of a word, read off its cyclically reduced core.

    Eigenvalues of a conjugated product ``c w c^-1`` lose roughly
    ``log(|c|^2)`` digits to non-normality, while the core is conjugate to it
    in the free group and evaluates with full accuracy.
    """
    core, _ = fg.cyclic_reduce(fg.reduce(word))
    if not core:
        return np.zeros(sys.dim)
    el = element(sys, core)
    return jordan_projection(el.matrix, el.inverse)


def word_translation_length(sys: SchottkySystem, word: Sequence[int]) -> float:
    return float(np.linalg.norm(word_jordan(sys, word)))


def unit_det(m: np.ndarray, mi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rescale a product and its carried inverse to determinant 1.

    LU determinants carry a relative error of about ``eps * cond``, with
    ``cond`` estimated as ``|m| |mi|``.  A matrix is only rescaled when its
    deviation from 1 is measurable above that noise floor (and below the
    unimodular slack); otherwise dividing would inject the noise.
    """
    d = m.shape[-1]
    with np.errstate(over="ignore", invalid="ignore"):  # inf cond: leave alone
        cond = np.linalg.norm(m, axis=(-2, -1)) * np.linalg.norm(mi, axis=(-2, -1))
    floor = 8 * d * np.finfo(float).eps * cond
    out = []
    for a in (m, mi):
        det = np.linalg.det(a)
        dev = np.abs(det - 1.0)
        ok = (dev <= UNIMODULAR_SLACK) & (dev > floor)
        scale = np.where(ok, np.abs(det) ** (1.0 / d), 1.0)
        out.append(a / np.asarray(scale)[..., None, None])
    return out[0], out[1]
