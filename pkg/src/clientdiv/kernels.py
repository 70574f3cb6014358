"""Hot-loop kernels, compiled when available.

The Cython extension ``clientdiv._kernels`` is used if it imports; otherwise
(or with ``CLIENTDIV_PURE_PYTHON=1``) the pure-Python twin in
``clientdiv._kernels_py`` is used. Both produce identical results. Inputs
too large for 64-bit arithmetic in the compiled path are routed to Python.
"""

import os

from clientdiv import _kernels_py

_compiled = None
if os.environ.get("CLIENTDIV_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from clientdiv import _kernels as _compiled
    except ImportError:
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"

# keeps 2 * r_max * den + den well inside a signed 64-bit integer
_MAX_UNITS = 1 << 40
_MAX_DEN = 1 << 20
_MAX_TREASURY = 1 << 62


def _small(*values, limit=_MAX_UNITS):
    return all(-limit < v < limit for v in values)


def reward_units(num, den, n_impls, epsilon, r_min, r_max):
    if (_compiled is not None and _small(epsilon, r_min, r_max)
            and _small(num, den, n_impls, limit=_MAX_DEN)):
        return _compiled.reward_units(num, den, n_impls, epsilon, r_min, r_max)
    return _kernels_py.reward_units(num, den, n_impls, epsilon, r_min, r_max)


def choose_impl(counts, total, current, switch_cost, epsilon, r_min, r_max):
    if (_compiled is not None and _small(epsilon, r_min, r_max, switch_cost)
            and _small(total, len(counts), limit=_MAX_DEN)):
        return _compiled.choose_impl(counts, total, current, switch_cost,
                                     epsilon, r_min, r_max)
    return _kernels_py.choose_impl(counts, total, current, switch_cost,
                                   epsilon, r_min, r_max)


def run_dynamics(assignment, order, rational, switch_cost, n_impls,
                 epsilon, r_min, r_max, window_size, treasury,
                 max_blocks, deciders):
    """Counts-only protocol replay; see ``_kernels_py.run_dynamics``."""
    n = len(assignment)
    # cumulative windows grow by n per block and become the share denominator
    max_den = n * max_blocks if window_size <= 0 else window_size
    use_compiled = (
        _compiled is not None
        and _small(epsilon, r_min, r_max, *switch_cost)
        and max_den < _MAX_DEN
        and 0 <= treasury < _MAX_TREASURY
    )
    impl = _compiled if use_compiled else _kernels_py
    return impl.run_dynamics(assignment, order, rational, switch_cost, n_impls,
                             epsilon, r_min, r_max, window_size, treasury,
                             max_blocks, deciders)
