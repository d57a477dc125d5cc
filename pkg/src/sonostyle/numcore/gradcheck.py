from __future__ import annotations

from typing import Callable, Iterable

import numpy as np

from .tensor import Tensor


def grad_check(f: Callable[[Tensor], Tensor], point, h: float = 1e-5,
               coords: Iterable[int] | None = None) -> float:
    """Compare reverse-mode gradients of scalar ``f`` with central differences.

    Returns the max over checked coordinates of
    ``|analytic - numeric| / max(1, |analytic|)``. ``coords`` restricts the
    check to a subset of flat indices (all coordinates by default).
    """
    if h <= 0:
        raise ValueError("step h must be positive")
    x = Tensor(np.array(point, dtype=np.float64), requires_grad=True)
    out = f(x)
    if out.size != 1:
        raise ValueError("grad_check needs a scalar-valued function")
    out.backward()
    analytic = np.zeros(x.shape) if x.grad is None else x.grad
    return _compare(lambda: f(Tensor(x.data)).item(), x.data, analytic, h, coords)


def grad_check_params(loss_fn: Callable[[], Tensor], params: dict[str, Tensor], h: float = 1e-5,
                      coords_per_param: int | None = None, rng: np.random.Generator | None = None) -> dict:
    """Finite-difference check of ``loss_fn`` w.r.t. named leaf parameters.

    Parameters are perturbed in place and restored. Returns a mapping of
    parameter name to max relative error.
    """
    for p in params.values():
        p.grad = None
    loss = loss_fn()
    loss.backward()
    analytic = {k: (np.zeros(p.shape) if p.grad is None else p.grad.copy()) for k, p in params.items()}
    errors = {}
    for name, p in params.items():
        coords = None
        if coords_per_param is not None and p.size > coords_per_param:
            rng = rng or np.random.default_rng(0)
            coords = rng.choice(p.size, size=coords_per_param, replace=False)
        errors[name] = _compare(lambda: loss_fn().item(), p.data, analytic[name], h, coords)
    return errors


def _compare(evaluate: Callable[[], float], data: np.ndarray, analytic: np.ndarray, h: float, coords) -> float:
    flat = data.reshape(-1)
    ga = analytic.reshape(-1)
    worst = 0.0
    for i in (range(flat.size) if coords is None else coords):
        orig = flat[i]
        flat[i] = orig + h
        fp = evaluate()
        flat[i] = orig - h
        fm = evaluate()
        flat[i] = orig
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise FloatingPointError(f"non-finite function value at coordinate {i}")
        numeric = (fp - fm) / (2 * h)
        worst = max(worst, abs(ga[i] - numeric) / max(1.0, abs(ga[i])))
    return worst
