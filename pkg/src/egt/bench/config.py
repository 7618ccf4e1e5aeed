"""Run configuration for the benchmark harness."""

from __future__ import annotations

import json
import math
import os
import dataclasses
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from ..optimize import OPTIMIZERS, CGParams

MODELS = ("xxz", "tfim", "pauli-file")
DEFAULT_SEED = 7


def default_seed() -> int:
    """Base seed from ``GSO_SEED`` when set, otherwise a fixed constant."""
    raw = os.environ.get("GSO_SEED")
    if raw is None or raw == "":
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"GSO_SEED must be an integer, got {raw!r}") from exc


@dataclass(frozen=True)
class InitSpec:
    """Starting point: ``warm`` (weight ``alpha`` on the Hartree label), ``haar`` (seeded uniform) or ``file``."""

    kind: str
    alpha: float = 0.9
    seed: int | None = None
    path: str | None = None

    @classmethod
    def parse(cls, text: str) -> InitSpec:
        kind, _, arg = text.partition(":")
        if kind == "warm":
            try:
                alpha = float(arg) if arg else 0.9
            except ValueError as exc:
                raise ConfigError(f"warm start needs a number, got {arg!r}") from exc
            if not 0.0 < alpha < 1.0:
                raise ConfigError(f"warm start weight must lie in (0, 1), got {alpha}")
            return cls("warm", alpha=alpha)
        if kind == "haar":
            if not arg:
                return cls("haar", seed=None)
            try:
                return cls("haar", seed=int(arg))
            except ValueError as exc:
                raise ConfigError(f"haar seed must be an integer, got {arg!r}") from exc
        if kind == "file":
            if not arg:
                raise ConfigError("file init needs a path, e.g. file:x0.json")
            return cls("file", path=arg)
        raise ConfigError(f"unknown init {text!r}; use warm:<alpha>, haar:<seed> or file:<path>")

    def __str__(self) -> str:
        if self.kind == "warm":
            return f"warm:{self.alpha!r}"
        if self.kind == "haar":
            return "haar" if self.seed is None else f"haar:{self.seed}"
        return f"file:{self.path}"


@dataclass(frozen=True)
class RunConfig:
    """One model, one optimizer, one starting-point rule, and where to write results.

    ``seeds`` is the number of Haar starts used by sweeps; single runs use
    ``seed`` (or the seed embedded in ``init``). ``overrides`` are applied to
    the default :class:`CGParams`.
    """

    model: str = "xxz"
    n: int = 4
    delta: float = 0.5
    field: float = 0.033
    k: int | None = None
    hamiltonian: str | None = None
    optimizer: str = "egt-cg"
    init: InitSpec = InitSpec("haar")
    chem_acc: float = 1.6e-3
    chem_mode: str = "abs"
    seeds: int = 1
    seed: int = dataclasses.field(default_factory=default_seed)
    out: str | None = None
    threads: int = 1
    golden_section: bool = False
    epochs_max: int = 1000
    overrides: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}")
        if self.model == "pauli-file":
            if not self.hamiltonian:
                raise ConfigError("model pauli-file needs --hamiltonian <file.json>")
            if not Path(self.hamiltonian).is_file():
                raise ConfigError(f"Hamiltonian file {self.hamiltonian} does not exist")
        elif self.model == "xxz":
            if self.n % 2 or not 4 <= self.n <= 16:
                raise ConfigError(f"xxz needs an even n in [4, 16], got {self.n}")
        elif self.model == "tfim":
            if self.n < 2 or self.n > 24:
                raise ConfigError(f"tfim needs n in [2, 24], got {self.n}")
            k = self.tfim_k
            if not 0 <= k <= self.n:
                raise ConfigError(f"tfim needs 0 <= k <= n, got k = {k}")
        for name in ("delta", "field", "chem_acc"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        if not self.chem_acc > 0.0:
            raise ConfigError("chem-acc must be positive")
        if self.chem_mode not in ("abs", "rel"):
            raise ConfigError(f"chem-mode must be abs or rel, got {self.chem_mode!r}")
        if self.seeds < 1:
            raise ConfigError("seeds must be at least 1")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")
        if self.epochs_max < 0:
            raise ConfigError("epochs-max must be non-negative")
        self.params()

    @property
    def tfim_k(self) -> int:
        return 3 if self.k is None else self.k

    def params(self) -> CGParams:
        base = dict(max_epochs=self.epochs_max, chem_acc=self.chem_acc, chem_mode=self.chem_mode)
        if self.golden_section:
            base["linesearch"] = "golden"
        base.update(self.overrides)
        try:
            return CGParams().with_overrides(**base)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def seed_list(self) -> list[int]:
        start = self.init.seed if self.init.kind == "haar" and self.init.seed is not None else self.seed
        return [start + i for i in range(self.seeds)]

    def run_seed(self) -> int:
        return self.seed_list()[0]

    def with_values(self, **changes) -> RunConfig:
        return replace(self, **changes)

    def as_dict(self) -> dict:
        out = asdict(self)
        out["init"] = str(self.init)
        return out


def load_vector(path: str) -> np.ndarray:
    """Explicit starting amplitudes from ``.npy``, a JSON list, or whitespace-separated text."""
    p = Path(path)
    try:
        if p.suffix == ".npy":
            vec = np.load(p)
        elif p.suffix == ".json":
            vec = np.asarray(json.loads(p.read_text()), dtype=float)
        else:
            vec = np.loadtxt(p, dtype=float)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read starting vector from {path}: {exc}") from exc
    vec = np.atleast_1d(np.asarray(vec, dtype=float))
    if vec.ndim != 1 or not np.all(np.isfinite(vec)):
        raise ConfigError("starting vector must be a finite 1-D array")
    return vec
