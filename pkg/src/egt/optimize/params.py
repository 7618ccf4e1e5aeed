"""Optimizer hyperparameters and stopping rules."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace

from ..errors import ConfigError

GRADIENT_ROUTES = ("chain", "structured", "amplitude")
LINESEARCH_MODES = ("backtrack", "golden")
CHEM_MODES = ("abs", "rel")


@dataclass(frozen=True)
class CGParams:
    """Settings shared by every optimizer in this package.

    Line search: ``c1``/``c2`` are the sufficient-decrease and curvature
    constants, ``c3`` scales the power-method starting step, and the search
    gives up after ``max_backtracks`` trials or once the arc length
    ``η‖u‖`` falls below ``eta_floor``.

    Stopping: the run ends when the residual ``<-v,u>²/‖u‖²`` drops below
    ``epsilon``, after ``max_epochs``, ``halt_after_chem`` epochs after first
    reaching chemical accuracy, after ``plateau_epochs`` consecutive epochs
    with ``|ΔL| < plateau_tol``, or after ``increase_epochs`` consecutive
    loss increases. Chemical accuracy needs a reference energy.
    """

    c1: float = 0.485
    c2: float = 0.999
    c3: float = 1.0
    epsilon: float = 1e-12
    max_epochs: int = 1000
    max_backtracks: int = 30
    tau: float = 1e-3
    eta_floor: float = 1e-12
    linesearch: str = "backtrack"
    molecule_mode: bool = False
    gradient_route: str = "chain"
    chem_acc: float = 1.6e-3
    chem_mode: str = "abs"
    halt_after_chem: int | None = 15
    plateau_epochs: int = 20
    plateau_tol: float = 1e-4
    increase_epochs: int = 10
    regularize: bool = True
    keep_states: bool = False

    def __post_init__(self):
        if not 0.0 < self.c1 < self.c2 < 1.0:
            raise ConfigError(f"need 0 < c1 < c2 < 1, got c1={self.c1}, c2={self.c2}")
        if not self.c3 > 0.0:
            raise ConfigError(f"c3 must be positive, got {self.c3}")
        if not self.epsilon >= 0.0:
            raise ConfigError(f"epsilon must be non-negative, got {self.epsilon}")
        if self.max_epochs < 0 or self.max_backtracks < 0:
            raise ConfigError("max_epochs and max_backtracks must be non-negative")
        if not self.tau > 0.0:
            raise ConfigError(f"tau must be positive, got {self.tau}")
        if not self.eta_floor > 0.0:
            raise ConfigError(f"eta_floor must be positive, got {self.eta_floor}")
        if self.linesearch not in LINESEARCH_MODES:
            raise ConfigError(f"linesearch must be one of {LINESEARCH_MODES}, got {self.linesearch!r}")
        if self.gradient_route not in GRADIENT_ROUTES:
            raise ConfigError(f"gradient_route must be one of {GRADIENT_ROUTES}, got {self.gradient_route!r}")
        if self.chem_mode not in CHEM_MODES:
            raise ConfigError(f"chem_mode must be one of {CHEM_MODES}, got {self.chem_mode!r}")
        if not self.chem_acc > 0.0:
            raise ConfigError(f"chem_acc must be positive, got {self.chem_acc}")
        if self.halt_after_chem is not None and self.halt_after_chem < 0:
            raise ConfigError("halt_after_chem must be non-negative or None")
        if self.plateau_epochs < 1 or self.increase_epochs < 1:
            raise ConfigError("plateau_epochs and increase_epochs must be at least 1")

    def with_overrides(self, **overrides) -> CGParams:
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise ConfigError(f"unknown optimizer setting(s): {', '.join(sorted(unknown))}")
        return replace(self, **overrides)

    def as_dict(self) -> dict:
        return asdict(self)
