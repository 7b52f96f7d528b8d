from __future__ import annotations

import math
from typing import Callable

import numpy as np

INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_min(f: Callable[[float], float], a: float, b: float, tol: float = 1e-10,
               max_iter: int = 200) -> tuple[float, float]:
    """Golden-section minimisation of a unimodal f on [a, b]; returns (x, f(x)).

    The endpoints are evaluated as well, so a monotone f returns its boundary
    minimum.  Ties resolve towards the smaller x.
    """
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc, fd = f(c), f(d)
    it = 0
    while b - a > tol and it < max_iter:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INVPHI * (b - a)
            fd = f(d)
        it += 1
    cands = [(fc, c), (fd, d)]
    best = min(cands, key=lambda p: (p[0], p[1]))
    return best[1], best[0]


def golden_max_batch(f: Callable[[np.ndarray], np.ndarray], a: np.ndarray, b: np.ndarray,
                     iters: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised golden-section maximisation: f maps x of shape (K,) to (K,)."""
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        left = fc >= fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        nc = np.where(left, b - INVPHI * (b - a), d)
        nd = np.where(left, c, a + INVPHI * (b - a))
        fnew = f(np.where(left, nc, nd))
        fc, fd = np.where(left, fnew, fd), np.where(left, fc, fnew)
        c, d = nc, nd
    x = np.where(fc >= fd, c, d)
    return x, np.maximum(fc, fd)


def golden_min_batch(f: Callable[[np.ndarray], np.ndarray], a: np.ndarray, b: np.ndarray,
                     tol: float = 1e-10, max_iter: int = 200,
                     lipschitz: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised golden-section minimisation over K brackets; returns (x, f(x)).

    Iterates until every bracket is narrower than tol.  Ties resolve towards
    the smaller x, as in golden_min.  With a Lipschitz constant L, a bracket
    whose values minus L times its width exceed the best value found so far
    cannot hold the global minimum and is frozen (no further evaluations).
    """
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc, fd = f(c), f(d)
    live = np.ones(a.size, dtype=bool)
    it = 0
    while it < max_iter:
        if lipschitz is not None and a.size > 1:
            best = np.min(np.minimum(fc, fd))
            live &= np.minimum(fc, fd) - lipschitz * (b - a) <= best
        live &= (b - a) > tol
        if not np.any(live):
            break
        left = fc <= fd
        nb = np.where(left, d, b)
        na = np.where(left, a, c)
        nc = np.where(left, nb - INVPHI * (nb - na), d)
        nd = np.where(left, c, na + INVPHI * (nb - na))
        x = np.where(left, nc, nd)
        fnew = np.empty(a.size)
        fnew[live] = f(x[live])
        nfc, nfd = np.where(left, fnew, fd), np.where(left, fc, fnew)
        a, b = np.where(live, na, a), np.where(live, nb, b)
        c, d = np.where(live, nc, c), np.where(live, nd, d)
        fc, fd = np.where(live, nfc, fc), np.where(live, nfd, fd)
        it += 1
    take_c = fc <= fd
    return np.where(take_c, c, d), np.where(take_c, fc, fd)
