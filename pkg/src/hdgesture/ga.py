"""Genetic search over the accelerometer CIM encoding parameters.

A genome holds the quantization levels and ``d_max`` of each of the three
axis CIMs. Fitness is the k-fold cross-validated accuracy of the
``ctx-cim`` classifier built with those CIMs. The search is a plain
generational GA with elitism, tournament selection, uniform crossover and
Gaussian mutation, all drawn from one seeded generator.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import hv
from .architectures import CrossValidator, ModelConfig, encode
from .errors import ContractViolation
from .memories import CimParams

LEVEL_BOUNDS = (2, 64)
DMAX_BOUNDS = (0.0, 1.0)
AXES = ("x", "y", "z")


@dataclass(frozen=True)
class Genome:
    levels_x: int = 16
    levels_y: int = 16
    levels_z: int = 16
    dmax_x: float = 0.5
    dmax_y: float = 0.5
    dmax_z: float = 0.5

    def __post_init__(self):
        lo, hi = LEVEL_BOUNDS
        for a in AXES:
            L = getattr(self, f"levels_{a}")
            d = getattr(self, f"dmax_{a}")
            if int(L) != L or not lo <= L <= hi:
                raise ContractViolation(f"levels_{a} must be an integer in [{lo}, {hi}], got {L}")
            if not DMAX_BOUNDS[0] <= d <= DMAX_BOUNDS[1]:
                raise ContractViolation(f"dmax_{a} must lie in [0, 1], got {d}")
            object.__setattr__(self, f"levels_{a}", int(L))
            object.__setattr__(self, f"dmax_{a}", float(d))

    @property
    def levels(self) -> tuple[int, int, int]:
        return self.levels_x, self.levels_y, self.levels_z

    @property
    def dmax(self) -> tuple[float, float, float]:
        return self.dmax_x, self.dmax_y, self.dmax_z

    def cim_params(self) -> tuple[CimParams, CimParams, CimParams]:
        return tuple(CimParams(L, d) for L, d in zip(self.levels, self.dmax))

    @classmethod
    def from_genes(cls, levels, dmax) -> "Genome":
        return cls(*[int(x) for x in levels], *[float(x) for x in dmax])

    @classmethod
    def from_cim_params(cls, params) -> "Genome":
        return cls.from_genes([p.levels for p in params], [p.d_max for p in params])


DEFAULT_GENOME = Genome(59, 55, 14, 1.0, 0.5, 0.6)


@dataclass(frozen=True)
class GaConfig:
    population: int = 20
    generations: int = 15
    tournament: int = 3
    crossover: float = 0.8
    mutation: float = 0.15
    level_scale: float = 4.0
    dmax_scale: float = 0.1
    folds: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.population < 2:
            raise ContractViolation("population must be at least 2")
        if self.generations < 1:
            raise ContractViolation("need at least one generation")
        if not 1 <= self.tournament <= self.population:
            raise ContractViolation("tournament size must lie in [1, population]")
        for name in ("crossover", "mutation"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ContractViolation(f"{name} probability must lie in [0, 1]")


class Fitness:
    """Cached cross-validated ``ctx-cim`` accuracy of genomes on one dataset.

    Args:
      samples: an encoded set (from :func:`hdgesture.architectures.encode`
        with ``seed``) or a raw dataset, which is encoded here.
      folds: number of cross-validation folds.
      seed: model seed; fixes the item memory, the CIMs and the folds.
    """

    def __init__(self, samples, folds: int = 10, seed: int = 0,
                 config: ModelConfig = ModelConfig(), workers: int | None = None):
        if not hasattr(samples, "emg"):
            samples = encode(samples, seed, config)
        self.validator = CrossValidator(samples, folds, seed, config, workers=workers)
        self.cache: dict[Genome, float] = {}

    def __call__(self, genome: Genome) -> float:
        if genome not in self.cache:
            cfg = replace(self.validator.config, cim_params=genome.cim_params())
            self.cache[genome] = self.validator.run("ctx-cim", cfg).accuracy
        return self.cache[genome]


def fitness(genome: Genome, dataset, folds: int = 10, seed: int = 0, **kwargs) -> float:
    """Mean k-fold accuracy of the ``ctx-cim`` classifier using ``genome``'s CIMs."""
    return Fitness(dataset, folds, seed, **kwargs)(genome)


def random_genome(rng: np.random.Generator) -> Genome:
    levels = rng.integers(LEVEL_BOUNDS[0], LEVEL_BOUNDS[1] + 1, size=3)
    dmax = rng.uniform(*DMAX_BOUNDS, size=3)
    return Genome.from_genes(levels, dmax)


def _genes(g: Genome) -> np.ndarray:
    return np.array([*g.levels, *g.dmax], dtype=np.float64)


def _from_vector(v: np.ndarray) -> Genome:
    levels = np.clip(np.rint(v[:3]), *LEVEL_BOUNDS)
    dmax = np.clip(v[3:], *DMAX_BOUNDS)
    return Genome.from_genes(levels, dmax)


def crossover(a: Genome, b: Genome, rng: np.random.Generator) -> Genome:
    """Uniform crossover: each gene comes from either parent with equal odds."""
    take_b = rng.random(6) < 0.5
    return _from_vector(np.where(take_b, _genes(b), _genes(a)))


def mutate(g: Genome, config: GaConfig, rng: np.random.Generator) -> Genome:
    """Gaussian mutation per gene; levels are rounded and both kinds clamped."""
    v = _genes(g)
    hit = rng.random(6) < config.mutation
    scale = np.array([config.level_scale] * 3 + [config.dmax_scale] * 3)
    v = v + hit * rng.normal(0.0, 1.0, 6) * scale
    return _from_vector(v)


def _tournament(fit: np.ndarray, size: int, rng: np.random.Generator) -> int:
    entrants = rng.choice(fit.size, size=size, replace=False)
    # highest fitness wins; equal fitness goes to the lower index
    return int(min(entrants, key=lambda i: (-fit[i], i)))


@dataclass
class GaResult:
    best: Genome
    best_fitness: float
    history: list = field(default_factory=list)
    config: GaConfig = field(default_factory=GaConfig)
    evaluations: int = 0

    def to_dict(self) -> dict:
        return {
            "best_genome": asdict(self.best),
            "best_fitness": self.best_fitness,
            "history": self.history,
            "evaluations": self.evaluations,
            "config": asdict(self.config),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def optimize(dataset, config: GaConfig = GaConfig(), fitness_fn=None,
             model_config: ModelConfig = ModelConfig(), workers: int | None = None) -> GaResult:
    """Run the GA.

    ``history[t]`` holds the best and mean fitness of generation ``t``; the
    first entry is the random initial population, so there are
    ``config.generations`` entries. The best genome is carried over
    unchanged into each next generation.

    Args:
      dataset: raw or encoded samples (see :class:`Fitness`).
      config: GA settings.
      fitness_fn: callable ``Genome -> float`` replacing the default
        cross-validated fitness (``dataset`` is then ignored).
      model_config: everything but the CIMs of the evaluated classifier.
      workers: threads for the cross-validation folds.
    """
    fit_fn = fitness_fn or Fitness(dataset, config.folds, config.seed, model_config, workers)
    rng = hv.make_rng(config.seed, "ga")
    pop = [random_genome(rng) for _ in range(config.population)]
    history = []
    evaluated: set = set()
    for gen in range(config.generations):
        fit = np.array([fit_fn(g) for g in pop])
        evaluated.update(pop)
        elite = int(np.argmax(fit))
        history.append({"generation": gen, "best": float(fit[elite]), "mean": float(fit.mean()),
                        "best_genome": asdict(pop[elite])})
        if gen == config.generations - 1:
            break
        nxt = [pop[elite]]
        while len(nxt) < config.population:
            a = pop[_tournament(fit, config.tournament, rng)]
            b = pop[_tournament(fit, config.tournament, rng)]
            child = crossover(a, b, rng) if rng.random() < config.crossover else a
            nxt.append(mutate(child, config, rng))
        pop = nxt
    best = Genome(**history[-1]["best_genome"])
    return GaResult(best, history[-1]["best"], history, config, len(evaluated))
