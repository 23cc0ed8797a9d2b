"""Adaptive Simpson quadrature that splits at kinks of |.|-type integrands."""
from __future__ import annotations

import numpy as np
import scipy.optimize


class QuadratureError(RuntimeError):
    pass


def _simpson(fa, fm, fb, a, b):
    return (b - a) / 6 * (fa + 4 * fm + fb)


def adaptive_simpson(f, a: float, b: float, tol: float = 1e-9, max_depth: int = 50) -> float:
    """Integrate f over [a, b] to absolute tolerance tol."""
    if b == a:
        return 0.0
    if b < a:
        return -adaptive_simpson(f, b, a, tol, max_depth)
    fa, fb, fm = f(a), f(b), f((a + b) / 2)
    whole = _simpson(fa, fm, fb, a, b)
    total = 0.0
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        lo, hi, flo, fmid, fhi, s, eps, depth = stack.pop()
        mid = (lo + hi) / 2
        fl, fr = f((lo + mid) / 2), f((mid + hi) / 2)
        left = _simpson(flo, fl, fmid, lo, mid)
        right = _simpson(fmid, fr, fhi, mid, hi)
        err = left + right - s
        if abs(err) <= 15 * eps or hi - lo < 1e-15 * max(1.0, abs(hi)):
            total += left + right + err / 15
        elif depth >= max_depth:
            raise QuadratureError(f"no convergence on [{lo:.6g}, {hi:.6g}]: error estimate {abs(err) / 15:.3e}")
        else:
            stack.append((lo, mid, flo, fl, fmid, left, eps / 2, depth + 1))
            stack.append((mid, hi, fmid, fr, fhi, right, eps / 2, depth + 1))
    return total


def find_kinks(f, a: float, b: float, n_scan: int = 256, rel: float = 1e-3) -> list[float]:
    """Locate near-zero local minima of a nonnegative integrand.

    These are where |g(t)| folds; the scan is refined with a bounded
    scalar minimizer.
    """
    if b <= a:
        return []
    ts = np.linspace(a, b, n_scan + 1)
    ys = np.array([f(t) for t in ts])
    scale = max(float(np.max(np.abs(ys))), 1e-300)
    kinks = []
    for i in range(1, n_scan):
        # at a fold the larger neighbour is at least twice the sampled minimum
        if ys[i] <= ys[i - 1] and ys[i] <= ys[i + 1] and ys[i] <= rel * scale + 0.5 * max(ys[i - 1], ys[i + 1]):
            res = scipy.optimize.minimize_scalar(
                f, bounds=(ts[i - 1], ts[i + 1]), method="bounded", options={"xatol": 1e-14 * max(1, abs(b))}
            )
            if not kinks or res.x - kinks[-1] > 1e-12 * max(1.0, abs(b)):
                kinks.append(float(res.x))
    return kinks


def integrate(f, a: float, b: float, tol: float = 1e-9, kinks=None, n_scan: int = 256) -> float:
    """Adaptive Simpson with splitting at supplied or detected kinks."""
    if b == a:
        return 0.0
    if kinks is None:
        kinks = find_kinks(f, a, b, n_scan)
    pts = [a] + [k for k in kinks if a < k < b] + [b]
    pieces = len(pts) - 1
    return float(sum(adaptive_simpson(f, lo, hi, tol / pieces) for lo, hi in zip(pts[:-1], pts[1:])))


def cumulative(f, grid, tol: float = 1e-9, n_scan: int = 32) -> np.ndarray:
    """Running integral of f from grid[0] to each grid point."""
    grid = np.asarray(grid, dtype=float)
    out = np.zeros(len(grid))
    per = tol / max(len(grid) - 1, 1)
    for i in range(1, len(grid)):
        out[i] = out[i - 1] + integrate(f, grid[i - 1], grid[i], per, n_scan=n_scan)
    return out
