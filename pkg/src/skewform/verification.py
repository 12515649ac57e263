"""Bundled symbolic checks: the Maxwell closure relations for a plane wave."""

from __future__ import annotations

from dataclasses import dataclass

from .forms import CoordinateChart, DifferentialForm, exterior_derivative, hodge_star

MINKOWSKI = CoordinateChart(("t", "x", "y", "z"), (1, -1, -1, -1))


@dataclass(frozen=True)
class MaxwellCheck:
    potential: DifferentialForm
    field: DifferentialForm
    dF: DifferentialForm
    dual: DifferentialForm
    d_dual: DifferentialForm

    @property
    def closed(self) -> bool:
        return self.dF.is_zero

    @property
    def coclosed(self) -> bool:
        return self.d_dual.is_zero

    @property
    def passed(self) -> bool:
        return self.closed and self.coclosed


def maxwell_plane_wave(profile: str = "sin(z - t)", polarization: str = "x") -> MaxwellCheck:
    """``F = dA`` for ``A = profile dx``; vacuum Maxwell needs ``dF = 0`` and ``d*F = 0``."""
    A = DifferentialForm(MINKOWSKI, 1, {(polarization,): profile})
    F = exterior_derivative(A)
    star = hodge_star(F)
    return MaxwellCheck(A, F, exterior_derivative(F), star, exterior_derivative(star))
