"""Central finite-difference gradient checking."""

from dataclasses import dataclass

import numpy as np

from .numerics import Tape, backward


@dataclass
class TensorCheck:
    name: str
    analytic: np.ndarray
    numeric: np.ndarray
    max_rel_error: float


@dataclass
class GradReport:
    tensors: list
    tol: float

    @property
    def passed(self) -> bool:
        return all(t.max_rel_error <= self.tol for t in self.tensors)

    @property
    def worst(self) -> float:
        return max((t.max_rel_error for t in self.tensors), default=0.0)

    def summary(self) -> str:
        lines = [f"{t.name:24s} max_rel_err={t.max_rel_error:.3e}" for t in self.tensors]
        lines.append(f"{'PASS' if self.passed else 'FAIL'} (tol={self.tol:g})")
        return "\n".join(lines)


class NonFiniteLoss(FloatingPointError):
    pass


def relative_error(a, n) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    n = np.asarray(n, dtype=np.float64)
    return np.abs(a - n) / np.maximum(1.0, np.maximum(np.abs(a), np.abs(n)))


def numeric_gradient(loss_fn, params: dict, h: float = 1e-5) -> dict:
    """Central differences ``(f(p + h e) - f(p - h e)) / 2h`` for every coordinate.

    ``params`` maps names to arrays; entries are perturbed in place and
    restored afterwards.
    """
    if h <= 0:
        raise ValueError("step h must be positive")
    out = {}
    for name, p in params.items():
        grad = np.zeros_like(p, dtype=np.float64)
        flat = p.reshape(-1)
        gflat = grad.reshape(-1)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + h
            fp = float(loss_fn(params))
            flat[idx] = orig - h
            fm = float(loss_fn(params))
            flat[idx] = orig
            if not (np.isfinite(fp) and np.isfinite(fm)):
                coord = ", ".join(str(int(i)) for i in np.unravel_index(idx, p.shape))
                raise NonFiniteLoss(f"non-finite loss perturbing {name}[{coord}]")
            gflat[idx] = (fp - fm) / (2.0 * h)
        out[name] = grad
    return out


def finite_diff_check(loss_fn, params: dict, grad_fn, h: float = 1e-5, tol: float = 1e-3) -> GradReport:
    """Compare ``grad_fn(params)`` with central differences of ``loss_fn``."""
    params = {k: np.array(v, dtype=np.float64) for k, v in params.items()}
    analytic = grad_fn(params)
    numeric = numeric_gradient(loss_fn, params, h)
    checks = []
    for name in params:
        a = np.asarray(analytic[name], dtype=np.float64)
        n = numeric[name]
        err = float(relative_error(a, n).max()) if a.size else 0.0
        checks.append(TensorCheck(name, a, n, err))
    return GradReport(checks, tol)


def tape_functions(build):
    """Turn ``build(tape, leaves) -> loss node`` into ``(loss_fn, grad_fn)``.

    ``leaves`` is a dict of tape leaf nodes keyed like the params dict.
    """

    def loss_fn(params):
        tape = Tape(record=False)
        leaves = {k: tape.leaf(k, v) for k, v in params.items()}
        return float(build(tape, leaves).value)

    def grad_fn(params):
        tape = Tape()
        leaves = {k: tape.leaf(k, v) for k, v in params.items()}
        return backward(tape, build(tape, leaves))

    return loss_fn, grad_fn
