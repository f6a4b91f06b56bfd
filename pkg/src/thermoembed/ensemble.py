"""Exact grand canonical ensembles on small, enumerable state spaces.

Everything here is computed by explicit summation over a microstate list, so
the module doubles as the numerical oracle for the rest of the package: the
derivative identities that justify reading a cooccurrence matrix as a Hessian
are checked against finite differences of ``ln Z``.

Inverse temperature ``beta`` is the only thermal parameter; Boltzmann's
constant and the temperature never appear separately.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "Microstate",
    "EnsembleSpec",
    "ReservoirModel",
    "MomentReport",
    "LimitReport",
    "log_partition",
    "microstate_probabilities",
    "mean_counts",
    "covariance",
    "log_partition_gradient",
    "log_partition_hessian",
    "count_moments",
    "reservoir_weights",
    "reservoir_probabilities",
    "brute_force_reservoir_weights",
    "einstein_temperature",
    "reservoir_family",
    "boltzmann_limit_check",
    "total_variation",
    "read_spec_file",
    "format_tsv",
]

DEFAULT_STEP = 1e-4


@dataclass(frozen=True)
class Microstate:
    """One system configuration: a count per species plus an energy."""

    counts: tuple[int, ...]
    energy: float

    def __post_init__(self):
        counts = tuple(self.counts)
        for n in counts:
            if isinstance(n, bool) or int(n) != n or n < 0:
                raise InvalidInputError(f"microstate counts must be non-negative integers, got {counts!r}")
        object.__setattr__(self, "counts", tuple(int(n) for n in counts))
        if not math.isfinite(self.energy):
            raise InvalidInputError(f"microstate energy must be finite, got {self.energy!r}")
        object.__setattr__(self, "energy", float(self.energy))


@dataclass(frozen=True)
class EnsembleSpec:
    """A finite multi-species grand canonical ensemble."""

    beta: float
    potentials: tuple[float, ...]
    microstates: tuple[Microstate, ...]

    def __post_init__(self):
        object.__setattr__(self, "potentials", tuple(float(m) for m in self.potentials))
        object.__setattr__(self, "microstates", tuple(self.microstates))
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise InvalidInputError(f"beta must be a positive finite number, got {self.beta!r}")
        if not all(math.isfinite(m) for m in self.potentials):
            raise InvalidInputError("chemical potentials must be finite")
        if not self.microstates:
            raise InvalidInputError("an ensemble needs at least one microstate")
        k = len(self.potentials)
        for state in self.microstates:
            if len(state.counts) != k:
                raise InvalidInputError(
                    f"microstate {state!r} has {len(state.counts)} counts, expected {k}"
                )

    @property
    def n_species(self) -> int:
        return len(self.potentials)

    @property
    def counts(self) -> np.ndarray:
        """``(n_states, K)`` float array of species counts."""
        return np.array([s.counts for s in self.microstates], dtype=np.float64).reshape(
            len(self.microstates), self.n_species
        )

    @property
    def energies(self) -> np.ndarray:
        return np.array([s.energy for s in self.microstates], dtype=np.float64)

    def exponents(self) -> np.ndarray:
        """Per-state Boltzmann exponent ``beta * (mu . N_i - E_i)``."""
        mu = np.asarray(self.potentials, dtype=np.float64)
        return self.beta * (self.counts @ mu - self.energies)

    def with_potentials(self, potentials: Sequence[float]) -> "EnsembleSpec":
        return EnsembleSpec(self.beta, tuple(potentials), self.microstates)

    def with_energy_shift(self, shift: float) -> "EnsembleSpec":
        states = tuple(Microstate(s.counts, s.energy + shift) for s in self.microstates)
        return EnsembleSpec(self.beta, self.potentials, states)


@dataclass(frozen=True)
class MomentReport:
    """Analytic moments of the species counts next to a finite-difference Hessian.

    ``hessian`` is the matrix of second derivatives of ``ln Z / beta`` with
    respect to the potentials. In that normalization it equals
    ``beta * covariance``; the raw Hessian of ``ln Z`` carries one more factor
    of ``beta`` (see :func:`log_partition_hessian`).
    """

    log_z: float
    means: np.ndarray
    covariance: np.ndarray
    hessian: np.ndarray
    beta: float
    step: float

    def identity_error(self) -> float:
        """Largest elementwise gap between ``hessian`` and ``beta * covariance``."""
        return float(np.max(np.abs(self.hessian - self.beta * self.covariance)))


def _logsumexp(a: np.ndarray) -> float:
    a_max = float(np.max(a))
    return a_max + math.log(float(np.sum(np.exp(a - a_max))))


def log_partition(spec: EnsembleSpec) -> float:
    """Return ``ln Z`` for the ensemble, evaluated with max-subtraction.

    >>> s = EnsembleSpec(1.0, (0.0,), (Microstate((0,), 0.0),))
    >>> log_partition(s)
    0.0
    """
    return _logsumexp(spec.exponents())


def microstate_probabilities(spec: EnsembleSpec) -> np.ndarray:
    x = spec.exponents()
    p = np.exp(x - x.max())
    return p / p.sum()


def mean_counts(spec: EnsembleSpec) -> np.ndarray:
    """Probability-weighted average of each species count."""
    return microstate_probabilities(spec) @ spec.counts


def covariance(spec: EnsembleSpec) -> np.ndarray:
    p = microstate_probabilities(spec)
    centered = spec.counts - p @ spec.counts
    cov = (centered * p[:, None]).T @ centered
    return 0.5 * (cov + cov.T)


def _shifted_log_partition(spec: EnsembleSpec, log_p: np.ndarray, delta: np.ndarray) -> float:
    # ln Z(mu + delta) - ln Z(mu), kept O(|delta|) so differences do not lose digits
    return _logsumexp(log_p + spec.beta * (spec.counts @ delta))


def _log_probabilities(spec: EnsembleSpec) -> np.ndarray:
    x = spec.exponents()
    return x - _logsumexp(x)


def log_partition_gradient(spec: EnsembleSpec, h: float = DEFAULT_STEP) -> np.ndarray:
    """Central-difference gradient of ``ln Z`` with respect to the potentials."""
    if h <= 0:
        raise InvalidInputError("finite-difference step must be positive")
    log_p = _log_probabilities(spec)
    k = spec.n_species
    grad = np.empty(k)
    for i in range(k):
        e = np.zeros(k)
        e[i] = h
        grad[i] = (
            _shifted_log_partition(spec, log_p, e) - _shifted_log_partition(spec, log_p, -e)
        ) / (2 * h)
    return grad


def log_partition_hessian(spec: EnsembleSpec, h: float = DEFAULT_STEP) -> np.ndarray:
    """Central-difference Hessian of ``ln Z`` with respect to the potentials.

    This is the raw second derivative; analytically it equals
    ``beta**2 * covariance``.
    """
    if h <= 0:
        raise InvalidInputError("finite-difference step must be positive")
    log_p = _log_probabilities(spec)
    k = spec.n_species
    f = lambda d: _shifted_log_partition(spec, log_p, d)  # noqa: E731
    hess = np.empty((k, k))
    for i in range(k):
        ei = np.zeros(k)
        ei[i] = h
        hess[i, i] = (f(ei) - 2.0 * f(np.zeros(k)) + f(-ei)) / (h * h)
        for j in range(i):
            ej = np.zeros(k)
            ej[j] = h
            mixed = (f(ei + ej) - f(ei - ej) - f(-ei + ej) + f(-ei - ej)) / (4 * h * h)
            hess[i, j] = hess[j, i] = mixed
    return hess


def count_moments(spec: EnsembleSpec, h: float = DEFAULT_STEP) -> MomentReport:
    """Analytic ``ln Z``, means and covariance plus an independent FD Hessian."""
    return MomentReport(
        log_z=log_partition(spec),
        means=mean_counts(spec),
        covariance=covariance(spec),
        hessian=log_partition_hessian(spec, h) / spec.beta,
        beta=spec.beta,
        step=h,
    )


# --------------------------------------------------------------------------
# System + reservoir counting
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ReservoirModel:
    """A small system in contact with ``reservoir_sites`` distinguishable sites.

    Each reservoir site holds any number of energy quanta (and, when
    ``total_particles`` is set, any number of particles). Energy and particle
    number are conserved across system plus reservoir, so a system state is
    compatible with exactly those reservoir states holding the residue.
    """

    system_states: tuple[Microstate, ...]
    reservoir_sites: int
    total_energy: int
    total_particles: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "system_states", tuple(self.system_states))
        if not self.system_states:
            raise InvalidInputError("a reservoir model needs at least one system state")
        if int(self.reservoir_sites) != self.reservoir_sites or self.reservoir_sites < 1:
            raise InvalidInputError(f"reservoir_sites must be a positive integer, got {self.reservoir_sites!r}")
        if int(self.total_energy) != self.total_energy or self.total_energy < 0:
            raise InvalidInputError("total_energy must be a non-negative integer")
        if self.total_particles is not None and (
            int(self.total_particles) != self.total_particles or self.total_particles < 0
        ):
            raise InvalidInputError("total_particles must be a non-negative integer")
        for s in self.system_states:
            if len(s.counts) != 1:
                raise InvalidInputError("reservoir system states carry exactly one species count")
            if s.energy != int(s.energy) or s.energy < 0:
                raise InvalidInputError(f"reservoir system energies must be non-negative integers, got {s.energy}")


def _compositions(quanta: int, sites: int) -> int:
    # ways to spread `quanta` indistinguishable units over `sites` labelled sites
    if quanta < 0:
        return 0
    return math.comb(quanta + sites - 1, sites - 1)


def reservoir_weights(model: ReservoirModel) -> list[int]:
    """Exact number of compatible reservoir microstates for each system state."""
    m = model.reservoir_sites
    weights = []
    for s in model.system_states:
        w = _compositions(model.total_energy - int(s.energy), m)
        if model.total_particles is not None:
            w *= _compositions(model.total_particles - s.counts[0], m)
        weights.append(w)
    return weights


def _normalize_exact(weights: Sequence[int]) -> np.ndarray:
    total = sum(weights)
    if total == 0:
        raise InvalidInputError("no system state is compatible with the conserved totals")
    return np.array([float(Fraction(w, total)) for w in weights])


def reservoir_probabilities(model: ReservoirModel) -> np.ndarray:
    """Probabilities proportional to compatible reservoir-state counts.

    >>> states = (Microstate((0,), 0), Microstate((0,), 1))
    >>> reservoir_probabilities(ReservoirModel(states, 3, 2)).tolist()
    [0.6666666666666666, 0.3333333333333333]
    """
    return _normalize_exact(reservoir_weights(model))


def brute_force_reservoir_weights(model: ReservoirModel) -> list[int]:
    """Count compatible reservoir states by listing every site assignment.

    Exponential in the number of sites; intended for tiny models only.
    """
    m, e_tot, n_tot = model.reservoir_sites, model.total_energy, model.total_particles
    energy_hist: dict[int, int] = {}
    for quanta in itertools.product(range(e_tot + 1), repeat=m):
        t = sum(quanta)
        if t <= e_tot:
            energy_hist[t] = energy_hist.get(t, 0) + 1
    particle_hist: dict[int, int] = {}
    if n_tot is not None:
        for occ in itertools.product(range(n_tot + 1), repeat=m):
            t = sum(occ)
            if t <= n_tot:
                particle_hist[t] = particle_hist.get(t, 0) + 1
    weights = []
    for s in model.system_states:
        w = energy_hist.get(e_tot - int(s.energy), 0)
        if n_tot is not None:
            w *= particle_hist.get(n_tot - s.counts[0], 0)
        weights.append(w)
    return weights


def einstein_temperature(sites: int, total_energy: int) -> float:
    """Inverse temperature ``ln(1 + M / E_tot)`` of a large site reservoir."""
    if total_energy <= 0:
        raise InvalidInputError("fitting beta needs a positive total_energy")
    return math.log1p(sites / total_energy)


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def reservoir_family(
    states: Sequence[Microstate],
    sizes: Iterable[int],
    energy_per_site: float = 1.0,
) -> list[ReservoirModel]:
    """Reservoir models of growing size at a fixed ``E_tot / M`` ratio."""
    models = []
    for m in sizes:
        e_tot = round(energy_per_site * m)
        if e_tot != energy_per_site * m:
            raise InvalidInputError(f"energy_per_site={energy_per_site} gives a non-integer E_tot at M={m}")
        models.append(ReservoirModel(tuple(states), m, e_tot))
    return models


@dataclass(frozen=True)
class LimitReport:
    """Distance between reservoir counting and the Boltzmann form, per size."""

    sites: tuple[int, ...]
    total_energy: tuple[int, ...]
    beta: tuple[float, ...]
    distance: tuple[float, ...]

    def is_non_increasing(self, skip: int = 0) -> bool:
        d = self.distance[skip:]
        return all(b <= a for a, b in zip(d, d[1:]))

    def is_strictly_decreasing(self, skip: int = 0) -> bool:
        d = self.distance[skip:]
        return all(b < a for a, b in zip(d, d[1:]))

    def rows(self) -> list[tuple]:
        return list(zip(self.sites, self.total_energy, self.beta, self.distance))


def boltzmann_limit_check(models: Sequence[ReservoirModel], reference: EnsembleSpec) -> LimitReport:
    """Compare reservoir counting to ``exp(-beta E) / Z`` as the reservoir grows.

    ``reference`` supplies the system states (energies only, zero potentials
    are used); its ``beta`` is replaced for each model by the fitted
    :func:`einstein_temperature`.
    """
    ref_energies = [s.energy for s in reference.microstates]
    sites, totals, betas, dists = [], [], [], []
    for model in models:
        if [s.energy for s in model.system_states] != ref_energies:
            raise InvalidInputError("reservoir system states do not match the reference ensemble")
        beta = einstein_temperature(model.reservoir_sites, model.total_energy)
        boltzmann = microstate_probabilities(
            EnsembleSpec(beta, (0.0,) * reference.n_species, reference.microstates)
        )
        sites.append(model.reservoir_sites)
        totals.append(model.total_energy)
        betas.append(beta)
        dists.append(total_variation(reservoir_probabilities(model), boltzmann))
    return LimitReport(tuple(sites), tuple(totals), tuple(betas), tuple(dists))


# --------------------------------------------------------------------------
# Plain-text spec files
# --------------------------------------------------------------------------


def read_spec_file(path: str | Path) -> EnsembleSpec | ReservoirModel:
    """Load an ensemble or reservoir description.

    Lines are ``beta <float>``, ``mu <float>...``, ``state <int>... <float>``
    and, for reservoir files, ``sites``, ``total_energy`` and optionally
    ``total_particles``. ``#`` starts a comment. A file with a ``sites`` line
    is read as a :class:`ReservoirModel`.
    """
    path = Path(path)
    beta = None
    mu: tuple[float, ...] | None = None
    states: list[Microstate] = []
    extra: dict[str, int] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *vals = line.split()
        try:
            if key == "beta" and len(vals) == 1:
                beta = float(vals[0])
            elif key == "mu":
                mu = tuple(float(v) for v in vals)
            elif key == "state" and len(vals) >= 1:
                states.append(Microstate(tuple(int(v) for v in vals[:-1]), float(vals[-1])))
            elif key in ("sites", "total_energy", "total_particles") and len(vals) == 1:
                extra[key] = int(vals[0])
            else:
                raise ValueError(f"unrecognised line {raw!r}")
        except (ValueError, InvalidInputError) as exc:
            raise InvalidInputError(f"{path}:{lineno}: {exc}") from exc
    if "sites" in extra:
        if "total_energy" not in extra:
            raise InvalidInputError(f"{path}: reservoir file needs a total_energy line")
        return ReservoirModel(tuple(states), extra["sites"], extra["total_energy"], extra.get("total_particles"))
    if beta is None or mu is None:
        raise InvalidInputError(f"{path}: ensemble file needs 'beta' and 'mu' lines")
    return EnsembleSpec(beta, mu, tuple(states))


def format_tsv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    def fmt(v):
        return repr(v) if isinstance(v, float) else str(v)

    lines = ["\t".join(header)]
    lines.extend("\t".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"
