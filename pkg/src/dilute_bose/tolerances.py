"""Central tolerance block.

Every module reads its defaults from here so a regression hunt can tighten
them in one place. The CLI accepts overrides for any field by name.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace


@dataclass(frozen=True)
class Tolerances:
    quad_rel: float = 1e-10
    mollifier_norm: float = 1e-8
    majorant_slack: float = 1e-12
    ode_step_defect: float = 1e-10
    scattering_rel: float = 1e-8
    norm_identity_rel: float = 1e-6
    thermo_density_rel: float = 1e-10
    thermo_cross_rel: float = 1e-9
    bisection_width: float = 1e-14
    bisection_iters: int = 200
    polylog_rel: float = 1e-12
    hermitian: float = 1e-12
    normalization: float = 1e-12
    ratio: float = 1e-12
    oracle: float = 1e-10
    variational_slack: float = 1e-10
    weight_sum: float = 1e-9
    isometry: float = 1e-10
    rescale_rel: float = 1e-14
    basis_guard: int = 2_000_000
    dense_guard: int = 4000
    family_guard: int = 500_000

    def as_dict(self) -> dict:
        return asdict(self)

    def updated(self, overrides: dict) -> "Tolerances":
        known = {f.name: f.type for f in fields(self)}
        for key in overrides:
            if key not in known:
                raise KeyError(key)
        cast = {k: (int(v) if isinstance(getattr(self, k), int) else float(v)) for k, v in overrides.items()}
        return replace(self, **cast)


DEFAULT = Tolerances()
