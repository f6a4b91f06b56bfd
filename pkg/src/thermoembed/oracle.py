"""Property checks over the exact ensemble code, with a printable summary.

The randomized ensembles keep species counts in ``{0, 1, 2}``: the
finite-difference truncation error grows with the third and fourth count
cumulants times ``beta**2`` and ``beta**3``, and the ``h**2`` tolerances
below are only meaningful while those stay bounded.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import ensemble as ens
from .ensemble import EnsembleSpec, Microstate, ReservoirModel

LIMIT_SIZES = (8, 16, 32, 64, 128)
LIMIT_TOLERANCE = 1e-3
BRUTE_FORCE_MAX_SITES = 4
BRUTE_FORCE_MAX_ENERGY = 8


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""


def random_ensemble(rng: np.random.Generator, max_species: int = 4, max_states: int = 50) -> EnsembleSpec:
    k = int(rng.integers(1, max_species + 1))
    n = int(rng.integers(1, max_states + 1))
    beta = float(rng.uniform(0.1, 5.0))
    mu = tuple(rng.uniform(-2.0, 2.0, size=k))
    states = tuple(
        Microstate(tuple(int(c) for c in rng.integers(0, 3, size=k)), float(rng.uniform(0.0, 3.0)))
        for _ in range(n)
    )
    return EnsembleSpec(beta, mu, states)


def ensemble_checks(spec: EnsembleSpec, h: float = ens.DEFAULT_STEP, label: str = "") -> list[CheckResult]:
    """Normalization, mean and Hessian identities, PSD covariance, energy-shift invariance."""
    p = ens.microstate_probabilities(spec)
    report = ens.count_moments(spec, h)
    mean_err = float(np.max(np.abs(ens.log_partition_gradient(spec, h) / spec.beta - report.means)))
    eig = float(np.min(np.linalg.eigvalsh(report.covariance)))
    shifted = ens.microstate_probabilities(spec.with_energy_shift(7.25))
    prefix = f"{label}: " if label else ""
    return [
        CheckResult(prefix + "normalization", abs(p.sum() - 1) <= 1e-12, abs(float(p.sum()) - 1), 1e-12),
        CheckResult(prefix + "mean identity", mean_err <= 10 * h * h, mean_err, 10 * h * h),
        CheckResult(prefix + "hessian identity", report.identity_error() <= 100 * h * h,
                    report.identity_error(), 100 * h * h),
        CheckResult(prefix + "covariance psd", eig >= -1e-9, eig, -1e-9),
        CheckResult(prefix + "energy shift invariance", bool(np.allclose(p, shifted, rtol=0, atol=1e-12)),
                    float(np.max(np.abs(p - shifted))), 1e-12),
    ]


def identity_suite(n: int = 100, seed: int = 0, h: float = ens.DEFAULT_STEP) -> list[CheckResult]:
    """Worst case of each ensemble check over ``n`` random ensembles."""
    rng = np.random.default_rng(seed)
    per_check: dict[str, list[CheckResult]] = {}
    for _ in range(n):
        for c in ensemble_checks(random_ensemble(rng), h):
            per_check.setdefault(c.name, []).append(c)
    out = []
    for name, checks in per_check.items():
        worst = min(checks, key=lambda c: c.value) if name == "covariance psd" else max(checks, key=lambda c: c.value)
        out.append(CheckResult(
            f"random x{n}: {name}", all(c.passed for c in checks), worst.value, worst.tolerance,
            f"{sum(c.passed for c in checks)}/{n} passed",
        ))
    return out


def limit_family(model: ReservoirModel, sizes: Sequence[int] = LIMIT_SIZES) -> list[ReservoirModel]:
    ratio = Fraction(model.total_energy, model.reservoir_sites)
    return [
        ReservoirModel(model.system_states, m, int(ratio * m), model.total_particles)
        for m in sizes
        if (ratio * m).denominator == 1
    ]


def reservoir_checks(model: ReservoirModel, label: str = "") -> list[CheckResult]:
    prefix = f"{label}: " if label else ""
    out = []
    p = ens.reservoir_probabilities(model)
    out.append(CheckResult(prefix + "normalization", abs(p.sum() - 1) <= 1e-12, abs(float(p.sum()) - 1), 1e-12))
    if model.reservoir_sites <= BRUTE_FORCE_MAX_SITES and model.total_energy <= BRUTE_FORCE_MAX_ENERGY:
        exact = ens.reservoir_weights(model)
        brute = ens.brute_force_reservoir_weights(model)
        out.append(CheckResult(prefix + "brute-force counts", exact == brute, float(exact != brute), 0.0,
                               f"{exact} vs {brute}"))
    if model.total_particles is None and model.total_energy > 0:
        family = limit_family(model)
        if len(family) >= 2:
            ref = EnsembleSpec(1.0, (0.0,), model.system_states)
            rep = ens.boltzmann_limit_check(family, ref)
            out.append(CheckResult(prefix + "boltzmann limit decreasing", rep.is_strictly_decreasing(),
                                   rep.distance[-1], LIMIT_TOLERANCE,
                                   "M=" + ",".join(map(str, rep.sites))))
            out.append(CheckResult(prefix + f"boltzmann limit TV at M={rep.sites[-1]}",
                                   rep.distance[-1] < LIMIT_TOLERANCE, rep.distance[-1], LIMIT_TOLERANCE))
    return out


def shipped_spec_files() -> list[Path]:
    root = resources.files("thermoembed") / "data"
    return sorted(Path(str(p)) for p in root.iterdir() if p.name.endswith(".txt"))


def run_suite(paths: Iterable[str | Path] | None = None, n_random: int = 100, seed: int = 0,
              h: float = ens.DEFAULT_STEP) -> list[CheckResult]:
    results = identity_suite(n_random, seed, h)
    for path in (shipped_spec_files() if paths is None else [Path(p) for p in paths]):
        spec = ens.read_spec_file(path)
        label = Path(path).stem
        if isinstance(spec, ReservoirModel):
            results.extend(reservoir_checks(spec, label))
        else:
            results.extend(ensemble_checks(spec, h, label))
    return results


def format_results(results: Iterable[CheckResult]) -> Iterator[str]:
    yield "status\tcheck\tvalue\ttolerance\tdetail"
    for r in results:
        yield f"{'PASS' if r.passed else 'FAIL'}\t{r.name}\t{r.value:.3e}\t{r.tolerance:.1e}\t{r.detail}"
