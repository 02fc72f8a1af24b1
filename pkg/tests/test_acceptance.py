"""Acceptance criteria 1-10 on the shipped demo systems.

Each test records one PASS/FAIL line (see ``conftest.record_criterion``);
the lines are repeated at the end of the pytest run.  Full-size censuses
(SL(2) to length 13, SL(3) to length 12) are built once per module.
"""

import itertools
import json
import time

import numpy as np
import pytest

from weyl_census import freegroup as fg
from weyl_census.census import build_census
from weyl_census.cli import EXIT_OK, run
from weyl_census.growth import (FlagBall, benoist_gap, class_growth_slope, class_ratio_table,
                                directional_counts, estimate_delta, limit_cone,
                                orbit_counts, orbit_ratio_table)
from weyl_census.schottky import element, word_jordan

from conftest import random_reduced, record_criterion

# tolerances as stated by the criteria
CONJ_TOL = 1e-7
POWER_TOL = 1e-7
LENGTH_SLACK = 1e-9
SUM_TOL = 1e-9
BENOIST_GROWTH = 0.25
DELTA_AGREEMENT = 0.15
BAND_FACTOR = 10.0
SLOPE_AGREEMENT = 0.15
DIRECTIONAL_FRACTION = 0.01
WALL_GAP_DROP = 0.5


class Timed:
    def __init__(self, fn):
        t0 = time.perf_counter()
        self.value = fn()
        self.seconds = time.perf_counter() - t0


@pytest.fixture(scope="module")
def sl2_L12(sl2):
    return Timed(lambda: build_census(sl2, 12))


@pytest.fixture(scope="module")
def sl2_L13(sl2):
    return Timed(lambda: build_census(sl2, 13, with_flags=False))


@pytest.fixture(scope="module")
def sl3_L12(sl3):
    return Timed(lambda: build_census(sl3, 12, with_flags=False))


def test_criterion_01_word_counts():
    t0 = time.perf_counter()
    bad = []
    for l in (1, 2, 3):
        counts = np.zeros(9, dtype=np.int64)
        for w in fg.enumerate_words(l, 8):
            counts[len(w)] += 1
        cumulative = np.cumsum(counts)
        for k in range(9):
            formula = 1 + sum(2 * l * (2 * l - 1) ** (j - 1) for j in range(1, k + 1))
            if cumulative[k] != formula:
                bad.append((l, k, int(cumulative[k]), formula))
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 1.0
    record_criterion(1, ok, f"word counts l<=3, k<=8: {len(bad)} mismatches, {elapsed:.2f}s (< 1s)")
    assert not bad
    assert elapsed < 1.0


def _invariant_violations(sysm, rng, n_words=500):
    v = dict(conj=0, power=0, length=0, chamber=0, triangle=0)
    worst = dict(conj=0.0, power=0.0)
    for _ in range(n_words):
        g = random_reduced(rng, sysm.num_generators, int(rng.integers(1, 9)))
        h = random_reduced(rng, sysm.num_generators, int(rng.integers(0, 9)))
        phi = random_reduced(rng, sysm.num_generators, int(rng.integers(0, 9)))
        jg = word_jordan(sysm, g)
        # conjugation
        err = np.max(np.abs(word_jordan(sysm, fg.reduce(phi + g + fg.invert(phi))) - jg))
        worst["conj"] = max(worst["conj"], float(err))
        v["conj"] += int(err > CONJ_TOL)
        # powers
        for k in range(2, 6):
            err = np.max(np.abs(word_jordan(sysm, fg.reduce(g * k)) - k * jg))
            worst["power"] = max(worst["power"], float(err / k))
            v["power"] += int(err > POWER_TOL * k)
        # translation length below displacement
        hg = element(sysm, g).cartan()
        v["length"] += int(np.linalg.norm(jg) > np.linalg.norm(hg) + LENGTH_SLACK)
        # chamber and zero sum
        v["chamber"] += int(bool(np.any(np.diff(hg) > 0)) or abs(hg.sum()) > SUM_TOL * sysm.dim)
        # triangle inequality
        dgh = element(sysm, fg.reduce(g + h)).distance()
        v["triangle"] += int(dgh > element(sysm, g).distance() + element(sysm, h).distance() + 1e-9)
    return v, worst


def test_criterion_02_invariant_suite(sl2, sl3):
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240601)
    total = {}
    worst = {}
    for name, sysm in (("sl2", sl2), ("sl3", sl3)):
        v, w = _invariant_violations(sysm, rng)
        total[name] = v
        worst[name] = w
    elapsed = time.perf_counter() - t0
    n_bad = sum(sum(v.values()) for v in total.values())
    ok = n_bad == 0 and elapsed < 30
    record_criterion(2, ok, f"invariants on 2x500 words: {n_bad} violations {total}, "
                     f"worst {worst}, {elapsed:.1f}s (< 30s)")
    assert n_bad == 0, total
    assert elapsed < 30


def test_criterion_03_rotation_count_bound(sl2_L12):
    t = sl2_L12.value
    t0 = time.perf_counter()
    per = np.array([len(w) // p for w, p in zip(t.class_words, t.class_power)])
    nonid = t.class_id >= 0
    rotations = per[t.class_id[nonid]]
    rhs = t.length[nonid] / t.max_displacement - 2
    bad = rotations < rhs
    n_bad = int(np.count_nonzero(bad))
    elapsed = sl2_L12.seconds + time.perf_counter() - t0
    detail = f"{n_bad} violations among {int(nonid.sum())} words, {elapsed:.0f}s (< 120s)"
    if n_bad:
        i = np.argmax(rhs - rotations)
        row = np.nonzero(nonid)[0][i]
        detail += (f"; worst {t.word_string(row)!r}: {rotations[i]} rotation(s) vs "
                   f"{rhs[i]:.3f}; violating cores primitive: "
                   f"{int(np.count_nonzero(t.primitive[nonid][bad]))}")
    record_criterion(3, n_bad == 0 and elapsed < 120, detail)
    assert n_bad == 0, detail
    assert elapsed < 120


def test_criterion_04_benoist_plateau(sl2_L12, sl3_L12):
    parts, ok = [], True
    for name, timed in (("sl2", sl2_L12), ("sl3", sl3_L12)):
        per = benoist_gap(timed.value).per_length
        growth = per[12] / per[6] - 1
        ok &= growth < BENOIST_GROWTH
        table = ", ".join(f"{k}:{v:.4f}" for k, v in per.items())
        parts.append(f"{name} max12/max6-1={growth:.4f} [{table}]")
    record_criterion(4, ok, "Benoist gap growth < 25%: " + "; ".join(parts))
    assert ok


def test_criterion_05_orbit_growth(sl2_L12):
    t = sl2_L12.value
    H = t.horizon_R
    d1 = estimate_delta(t, (0.4 * H, 0.7 * H)).delta
    d2 = estimate_delta(t, (0.7 * H, H)).delta
    rel = abs(d1 - d2) / max(d1, d2)
    delta = estimate_delta(t).delta
    lo, hi = orbit_ratio_table(t, delta, (0.4 * H, H)).band("ratio_upper")
    ok = rel <= DELTA_AGREEMENT and hi / lo <= BAND_FACTOR
    record_criterion(5, ok, f"delta windows {d1:.4f}/{d2:.4f} differ {rel:.2%} (<= 15%); "
                     f"N(R)e^(-dR) band {hi / lo:.3f} (<= 10)")
    assert rel <= DELTA_AGREEMENT
    assert hi / lo <= BAND_FACTOR


def test_criterion_06_main_theorem(sl2_L13, sl3):
    t = sl2_L13.value
    delta = estimate_delta(t).delta
    slope, _ = class_growth_slope(t)
    rel = abs(slope - delta) / delta
    ct = class_ratio_table(t, delta, 1)
    lo, hi = ct.band("ratio_upper")
    ok2 = rel <= SLOPE_AGREEMENT and hi / lo <= BAND_FACTOR and sl2_L13.seconds < 600

    timed3 = Timed(lambda: build_census(sl3, 10, with_flags=False))
    t3 = timed3.value
    d3 = estimate_delta(t3).delta
    c3 = class_ratio_table(t3, d3, 2)
    w = c3.in_window()
    lower, upper = c3.ratio_lower[w], c3.ratio_upper[w]
    # bounded below: never under a tenth of its value at the window start;
    # bounded above: never over ten times its value at the window start
    lower_ok = lower.min() > 0 and lower.min() >= lower[0] / BAND_FACTOR
    upper_ok = upper.max() <= BAND_FACTOR * upper[0]
    ok3 = lower_ok and upper_ok and timed3.seconds < 600
    record_criterion(6, ok2 and ok3,
                     f"sl2 L=13: slope {slope:.4f} vs delta {delta:.4f} ({rel:.2%}, <= 15%), "
                     f"P t e^(-dt) band {hi / lo:.3f} (<= 10), {sl2_L13.seconds:.0f}s; "
                     f"sl3 L=10: P t^2 e^(-dt) min {lower.min():.3f} (start {lower[0]:.3f}), "
                     f"P t e^(-dt) max {upper.max():.3f} (start {upper[0]:.3f}), "
                     f"{timed3.seconds:.0f}s")
    assert ok2 and ok3


def test_criterion_07_directional(sl2, sl2_L12):
    t = sl2_L12.value
    flags = sl2.fixed_flags()
    A, B = FlagBall(flags[0], 0.2), FlagBall(flags[1], 0.2)
    H = t.horizon_R
    grid = np.linspace(0.7 * H, H, 20)  # upper half of [0.4H, H]
    frac = directional_counts(t, grid, A, B) / orbit_counts(t, grid)
    ok = frac.min() >= DIRECTIONAL_FRACTION
    record_criterion(7, ok, f"N(R;A,B)/N(R) min {frac.min():.4f} over R in "
                     f"[{grid[0]:.2f}, {grid[-1]:.2f}] (>= 0.01)")
    assert ok


def test_criterion_08_limit_cone(sl3_census10):
    cone = limit_cone(sl3_census10, 6)
    by_len = cone.min_gap_by_length
    drop = 1 - by_len[10] / by_len[6]
    ok = cone.min_wall_gap > 0 and drop <= WALL_GAP_DROP
    record_criterion(8, ok, f"min wall gap {cone.min_wall_gap:.4f} > 0; "
                     f"length 6 -> 10: {by_len[6]:.4f} -> {by_len[10]:.4f} "
                     f"(drop {drop:.2%} <= 50%)")
    assert ok


def _necklace_oracle(n: int) -> int:
    """Primitive classes of cyclic length n in F_2, up to rotation and inversion.

    Letters 0..3 with inverse pairs (0,1), (2,3); written independently of
    the package's word utilities.
    """
    inv = {0: 1, 1: 0, 2: 3, 3: 2}
    seen, count = set(), 0
    for s in itertools.product(range(4), repeat=n):
        if any(s[i + 1] == inv[s[i]] for i in range(n - 1)) or s[-1] == inv[s[0]]:
            continue
        if s in seen:
            continue
        t = tuple(inv[c] for c in reversed(s))
        orbit = {s[i:] + s[:i] for i in range(n)} | {t[i:] + t[:i] for i in range(n)}
        seen |= orbit
        if len({s[i:] + s[:i] for i in range(n)}) == n:
            count += 1
    return count


def test_criterion_09_necklace_oracle(sl2):
    t = build_census(sl2, 6, with_flags=False)
    census = {n: 0 for n in range(1, 7)}
    for w, p in zip(t.class_words, t.class_power):
        if p == 1:
            census[len(w)] += 1
    oracle = {n: _necklace_oracle(n) for n in range(1, 7)}
    ok = census == oracle
    record_criterion(9, ok, f"primitive classes per length, census {census} vs oracle {oracle}")
    assert ok


def _run_pipeline(tmp, threads: int, preset: str) -> dict:
    out = tmp / f"{preset}-t{threads}"
    assert run(["census", f"preset:{preset}", "-L", "8", "-o", str(out),
                "--threads", str(threads), "--force"]) == EXIT_OK
    assert run(["report", f"preset:{preset}", "--census", str(out), "--no-plots"]) == EXIT_OK
    files = sorted(p for p in out.iterdir() if p.suffix in (".csv", ".json"))
    return {p.name: p.read_bytes() for p in files}


def test_criterion_10_determinism(tmp_path):
    mismatched = []
    for preset in ("sl2", "sl3"):
        runs = [_run_pipeline(tmp_path / f"r{i}", th, preset)
                for i, th in enumerate((1, 4, 1))]
        for other in runs[1:]:
            if other.keys() != runs[0].keys():
                mismatched.append((preset, "file set"))
            mismatched += [(preset, k) for k in runs[0] if other.get(k) != runs[0][k]]
    names = sorted(_run_pipeline(tmp_path / "names", 2, "sl2"))
    ok = not mismatched
    record_criterion(10, ok, f"census+report at threads 1/4/1 byte-identical over {names}: "
                     f"{len(mismatched)} mismatches")
    assert ok, mismatched
    assert json.loads((tmp_path / "names" / "sl2-t2" / "report.json").read_text())
