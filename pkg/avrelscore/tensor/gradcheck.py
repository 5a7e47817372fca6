"""Finite-difference gradient checking."""

import logging
from typing import Callable, Iterable, Optional

import numpy as np

from avrelscore.core.exceptions import GradientError
from avrelscore.tensor.tensor import Tensor

logger = logging.getLogger(__name__)


def grad_check(f: Callable[[Tensor], Tensor], x: Tensor, eps: float = 1e-6) -> float:
    """
    Compare the analytic gradient of a scalar function with central differences.

    Args:
        f: Scalar-valued function of ``x`` built from catalog ops
        x: Point to check at; must require grad
        eps: Finite-difference step

    Returns:
        max over coordinates of |analytic - numeric| / max(1, |analytic|)
    """
    if eps <= 0:
        raise GradientError(x.name or "x", f"eps must be positive, got {eps}")
    x.requires_grad = True
    x.zero_grad()
    out = f(x)
    out.backward()
    analytic = np.zeros_like(x.data) if x.grad is None else x.grad.copy()
    numeric = _central_differences(lambda: f(x).item(), [x], eps)[0]
    return _max_rel_error(analytic, numeric, x.name or "x")


def grad_check_parameters(
    loss_fn: Callable[[], Tensor],
    params: Iterable[Tensor],
    eps: float = 1e-6,
    max_coords: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """
    Gradient check of a closure over several parameters at once.

    Args:
        loss_fn: Rebuilds the scalar loss from the current parameter values
        params: Parameters to check
        eps: Finite-difference step
        max_coords: If set, check only this many random coordinates per parameter
        rng: Generator for coordinate sampling

    Returns:
        Worst relative error over all checked coordinates
    """
    params = list(params)
    for p in params:
        p.zero_grad()
    loss_fn().backward()
    analytic = [np.zeros_like(p.data) if p.grad is None else p.grad.copy() for p in params]

    rng = rng or np.random.default_rng(0)
    worst = 0.0
    for p, a in zip(params, analytic):
        flat = p.data.reshape(-1)
        coords = np.arange(flat.size)
        if max_coords is not None and flat.size > max_coords:
            coords = np.sort(rng.choice(flat.size, size=max_coords, replace=False))
        a_flat = a.reshape(-1)
        for i in coords:
            numeric = _difference_at(lambda: loss_fn().item(), flat, int(i), eps)
            worst = max(worst, _max_rel_error(a_flat[i:i + 1], np.array([numeric]), p.name or "param"))
    logger.debug(f"Parameter gradient check worst relative error {worst:.3e}")
    return worst


def _difference_at(f: Callable[[], float], flat: np.ndarray, i: int, eps: float) -> float:
    original = flat[i]
    flat[i] = original + eps
    plus = f()
    flat[i] = original - eps
    minus = f()
    flat[i] = original
    return (plus - minus) / (2.0 * eps)


def _central_differences(f: Callable[[], float], tensors, eps: float):
    grads = []
    for t in tensors:
        flat = t.data.reshape(-1)
        g = np.zeros(flat.size)
        for i in range(flat.size):
            g[i] = _difference_at(f, flat, i, eps)
        grads.append(g.reshape(t.shape))
    return grads


def _max_rel_error(analytic: np.ndarray, numeric: np.ndarray, name: str) -> float:
    if not (np.all(np.isfinite(analytic)) and np.all(np.isfinite(numeric))):
        raise GradientError(name, f"Non-finite values during gradient check of '{name}'")
    if analytic.size == 0:
        return 0.0
    err = np.abs(analytic - numeric) / np.maximum(1.0, np.abs(analytic))
    return float(err.max())
