"""Scalar root finding: grid bracketing and a safeguarded Newton iteration."""

import math

import numpy as np

from .errors import NoConvergence


def safeguarded_newton(f, df, lo, hi, xtol=4e-16, maxiter=100):
    """Root of ``f`` in the sign-change bracket ``[lo, hi]``.

    Newton steps are taken while they stay inside the current bracket and
    shrink it fast enough; otherwise the iteration falls back to bisection.
    The bracket is updated at every step so the method cannot diverge.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise NoConvergence(f"no sign change on [{lo!r}, {hi!r}]")
    # orient so that f(a) < 0 < f(b)
    if flo > 0.0:
        lo, hi = hi, lo
    a, b = lo, hi
    x = 0.5 * (a + b)
    dx_old = abs(b - a)
    dx = dx_old
    fx, dfx = f(x), df(x)
    scale = max(abs(a), abs(b), 1.0)
    for _ in range(maxiter):
        newton_out = ((x - b) * dfx - fx) * ((x - a) * dfx - fx) > 0.0
        if newton_out or abs(2.0 * fx) > abs(dx_old * dfx):
            dx_old = dx
            dx = 0.5 * (b - a)
            x = a + dx
        else:
            dx_old = dx
            dx = fx / dfx
            x_prev = x
            x = x - dx
            if x == x_prev:
                return x
        if abs(dx) < xtol * scale:
            return x
        fx, dfx = f(x), df(x)
        if fx == 0.0:
            return x
        if fx < 0.0:
            a = x
        else:
            b = x
    raise NoConvergence(f"safeguarded Newton did not converge on [{lo!r}, {hi!r}]")


def sign_change_cells(values):
    """Indices ``k`` with a sign change between ``values[k]`` and ``values[k+1]``."""
    v = np.asarray(values)
    s = np.signbit(v)
    return np.nonzero(s[:-1] != s[1:])[0]


def periodic_roots(f, df, n_cells=256, period=2.0 * math.pi, offset=0.0, expected=None,
                   max_refine=8):
    """All roots of a ``period``-periodic function, located on a uniform grid.

    ``f`` must accept numpy arrays. When ``expected`` is given the grid is
    doubled (at most ``max_refine`` times) until that many sign changes are
    seen, which separates nearby roots that share a coarse cell.
    """
    n = n_cells
    for _ in range(max_refine + 1):
        grid = offset + period * np.arange(n + 1) / n
        vals = np.asarray(f(grid))
        zero = vals == 0.0
        # exact zeros on grid nodes are roots themselves; cells touching them are skipped
        cells = [k for k in sign_change_cells(vals) if not (zero[k] or zero[k + 1])]
        nodes = list(np.nonzero(zero[:-1])[0])
        if expected is None or len(cells) + len(nodes) >= expected:
            break
        n *= 2
    roots = [float(grid[k]) for k in nodes]
    roots += [safeguarded_newton(f, df, grid[k], grid[k + 1]) for k in cells]
    return sorted(roots)
