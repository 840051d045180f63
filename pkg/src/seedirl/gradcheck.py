"""Finite-difference verification of tape gradients.

Central differences with a fixed probe step; the relative error for each
coordinate is |analytic - numeric| / max(|analytic|, |numeric|, ATOL_FLOOR).
The floor turns the comparison into an absolute tolerance for near-zero
gradients, where central differences bottom out at ~1e-10 regardless of the
tape's correctness; implementation bugs show up at the scale of the true
gradient and still exceed the threshold by orders of magnitude.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .autodiff import Tensor, backprop_gradients
from .networks import FlatParams

FD_STEP = 1e-5
ATOL_FLOOR = 1e-5


@dataclass(frozen=True)
class GradCheckReport:
    max_rel_err: float
    worst_param: str
    n_coords: int

    @property
    def ok(self) -> bool:
        return self.max_rel_err < 1e-4


def finite_difference_check(
    params: dict[str, Tensor],
    loss_fn: Callable[[dict[str, Tensor]], Tensor],
    step: float = FD_STEP,
    max_coords_per_param: int | None = None,
    rng: np.random.Generator | None = None,
) -> GradCheckReport:
    """Compare `backprop_gradients` against central differences.

    `loss_fn` must be a pure function of the parameter values (it is called
    repeatedly with perturbed copies). When `max_coords_per_param` is set, a
    random coordinate subset per parameter is probed instead of every one.
    """
    analytic = backprop_gradients(params, loss_fn(params))

    layout = FlatParams.of(params)
    base = layout.pack(params)

    worst = 0.0
    worst_name = ""
    n_checked = 0
    ofs = 0
    for name, shape in zip(layout.names, layout.shapes):
        size = int(np.prod(shape)) if shape else 1
        if max_coords_per_param is not None and size > max_coords_per_param:
            if rng is None:
                rng = np.random.default_rng(0)
            coords = rng.choice(size, size=max_coords_per_param, replace=False)
        else:
            coords = np.arange(size)
        flat_analytic = analytic[name].reshape(-1)
        for c in coords:
            j = ofs + int(c)
            probe = base.copy()
            probe[j] = base[j] + step
            layout.unpack_into(params, probe)
            up = loss_fn(params).item()
            probe[j] = base[j] - step
            layout.unpack_into(params, probe)
            down = loss_fn(params).item()
            numeric = (up - down) / (2.0 * step)
            a = float(flat_analytic[int(c)])
            rel = abs(a - numeric) / max(abs(a), abs(numeric), ATOL_FLOOR)
            n_checked += 1
            if rel > worst:
                worst = rel
                worst_name = name
        ofs += size
    layout.unpack_into(params, base)
    return GradCheckReport(max_rel_err=worst, worst_param=worst_name,
                           n_coords=n_checked)
