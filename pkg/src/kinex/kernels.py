"""Hot loop of the exchange engine.

A sweep applies n sequential pair exchanges to the income array.  The loop
cannot be vectorised (every exchange reads incomes written by earlier ones),
so it is compiled with numba when available.  Set ``KINEX_NO_NUMBA=1`` to
force the pure-Python fallback; both backends consume the same pre-drawn
uniforms and execute identical arithmetic, so their outputs are bit-identical.

``draws`` is an (n, 3) array of Uniform[0,1) variates per interaction:
column 0 picks agent i, column 1 picks agent j among the remaining n-1,
column 2 is the split fraction of the exchanged pool.
"""

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(func):
            return func

        return wrap


def sweep_inplace_python(incomes, savings, draws):
    """Apply one sweep of pair exchanges in place (reference implementation).

    The exchange rule for a pair (i, j) with saving propensities (li, lj):
    the pair pools its unsaved money d = (1-li)*xi + (1-lj)*xj and splits it
    at a random fraction eps, i.e. xi' = li*xi + eps*d, xj' = lj*xj + (1-eps)*d.
    Conserves xi + xj up to rounding and never produces negative incomes.
    """
    n = incomes.shape[0]
    for k in range(n):
        i = int(draws[k, 0] * n)
        if i > n - 1:
            i = n - 1
        j = int(draws[k, 1] * (n - 1))
        if j > n - 2:
            j = n - 2
        if j >= i:
            j += 1
        eps = draws[k, 2]
        xi = incomes[i]
        xj = incomes[j]
        li = savings[i]
        lj = savings[j]
        d = (1.0 - li) * xi + (1.0 - lj) * xj
        incomes[i] = li * xi + eps * d
        incomes[j] = lj * xj + (1.0 - eps) * d


sweep_inplace_numba = njit(cache=True)(sweep_inplace_python)


def _select_backend():
    flag = os.environ.get("KINEX_NO_NUMBA", "").strip()
    if flag not in ("", "0") or not HAVE_NUMBA:
        return sweep_inplace_python, "python"
    return sweep_inplace_numba, "numba"


sweep_inplace, BACKEND = _select_backend()
