"""Define the configurable parameters for a run."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from typing import Any, Optional

from langchain_core.runnables import RunnableConfig, ensure_config

from chaos_regularity.errors import InputError
from chaos_regularity.quadrature import MeshSpec
from chaos_regularity.utils import parse_float_list, parse_grid

ENV_PREFIX = "CHAOS_REGULARITY_"


@dataclass(kw_only=True)
class Configuration:
    """The configuration for a batch run."""

    seed: int = field(
        default=20240917,
        metadata={"description": "Root seed of every Monte Carlo stream."},
    )

    samples: int = field(
        default=1_000_000,
        metadata={"description": "Number of samples drawn from nu by mc-verify."},
    )

    mc_blocks: int = field(
        default=100,
        metadata={
            "description": "Number of independent sample blocks; each gets its own "
            "spawned stream and is one jackknife unit."
        },
    )

    grid: str = field(
        default="0.5:0.99:8",
        metadata={"description": "Lambda grid in the form start:stop:count."},
    )

    tol: float = field(
        default=1e-12,
        metadata={"description": "Relative tolerance of series evaluations."},
    )

    quad_tol: float = field(
        default=1e-10,
        metadata={"description": "Absolute/relative tolerance of adaptive quadrature."},
    )

    mesh: str = field(
        default="16:16:3",
        metadata={
            "description": "Simplex mesh for the SILT integrals: outer:inner[:grading]."
        },
    )

    refinement_rtol: float = field(
        default=0.05,
        metadata={
            "description": "Relative change allowed between the mesh and its refinement "
            "before a criterion counts as unstable."
        },
    )

    alphas: str = field(
        default="-2.5,-1,-0.5,0.5,1,1.5,3",
        metadata={"description": "Comma separated Sobolev orders queried by classify."},
    )

    betas: str = field(
        default="",
        metadata={
            "description": "Comma separated operator orders tabulated by curve "
            "(one column each)."
        },
    )

    max_moment: int = field(
        default=4,
        metadata={"description": "Largest monomial order checked by mc-verify."},
    )

    se_gate: float = field(
        default=5.0,
        metadata={
            "description": "Multiple of the standard error an estimate may deviate "
            "from its closed-form target."
        },
    )

    evaluator: str = field(
        default="monomial",
        metadata={
            "description": "mc-verify target: monomial, polynomial, donsker or gauss-kernel."
        },
    )

    truncation: int = field(
        default=400,
        metadata={
            "description": "Chaos truncation of derived profiles and of the Gauss-kernel "
            "eigenvalue list."
        },
    )

    lam: float = field(
        default=0.5,
        metadata={"description": "Lambda at which mc-verify compares S-transform norms."},
    )

    @classmethod
    def from_runnable_config(
        cls, config: Optional[RunnableConfig] = None
    ) -> Configuration:
        """Load configuration w/ defaults, environment overrides and the invocation's values.

        Raises:
            InputError: A value cannot be coerced to its field's type.
        """
        config = ensure_config(config)
        configurable = config.get("configurable") or {}
        _fields = {f.name: f for f in fields(cls) if f.init}
        values: dict[str, Any] = {}
        for name in _fields:
            env = os.environ.get(ENV_PREFIX + name.upper())
            if env is not None:
                values[name] = env
        values.update({k: v for k, v in configurable.items() if k in _fields})
        return cls(**{k: _coerce(k, type(_fields[k].default), v) for k, v in values.items()})

    def lambda_grid(self) -> tuple[float, ...]:
        return parse_grid(self.grid)

    def alpha_values(self) -> tuple[float, ...]:
        return parse_float_list(self.alphas)

    def beta_values(self) -> tuple[float, ...]:
        return parse_float_list(self.betas)

    def mesh_spec(self) -> MeshSpec:
        return MeshSpec.parse(self.mesh)


def _coerce(name: str, kind: type, value: Any) -> Any:
    if isinstance(value, kind) and not isinstance(value, bool):
        return value
    try:
        if kind is int:
            as_float = float(value)
            if not as_float.is_integer():
                raise ValueError(f"{value!r} is not an integer")
            return int(as_float)
        return kind(value)
    except (TypeError, ValueError) as exc:
        raise InputError(f"configuration field {name!r}: cannot read {value!r} as {kind.__name__}") from exc
