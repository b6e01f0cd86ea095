"""Greedy rescoring kernels: a numba-compiled hot loop with a numpy fallback.

The backend is picked at import time: "numba" when importable, unless the
NMSKIT_DISABLE_NUMBA environment variable is set to a non-empty value other
than "0", in which case the pure-numpy path is used. Both backends implement
the same loop: repeatedly select the highest-scoring live box (ties broken by
lowest source index), emit it, multiply every remaining score by the overlap
weight against the selected box, and drop scores that fall below the
threshold.
"""

from __future__ import annotations

import math
import os

import numpy as np

HARD = 0
LINEAR = 1
GAUSSIAN = 2

ENV_FLAG = "NMSKIT_DISABLE_NUMBA"


def _numba_disabled() -> bool:
    return os.environ.get(ENV_FLAG, "0") not in ("", "0")


def _suppress_numpy(x1, y1, x2, y2, scores, src, code, nt, sigma, thr):
    """Vectorized fallback. Returns (input rows, final scores) in selection order."""
    n = scores.shape[0]
    s = scores.copy()
    rows = np.arange(n, dtype=np.int64)
    areas = (x2 - x1) * (y2 - y1)
    out_rows = np.empty(n, dtype=np.int64)
    out_scores = np.empty(n, dtype=np.float64)
    count = 0
    m = n
    while m > 0:
        live = s[:m]
        top = live.max()
        cand = np.nonzero(live == top)[0]
        best = int(cand[0]) if cand.shape[0] == 1 else int(cand[np.argmin(src[rows[cand]])])
        row = int(rows[best])
        out_rows[count] = row
        out_scores[count] = s[best]
        count += 1
        m -= 1
        rows[best] = rows[m]
        s[best] = s[m]
        if m == 0:
            break
        r = rows[:m]
        ix1 = np.maximum(x1[row], x1[r])
        iy1 = np.maximum(y1[row], y1[r])
        ix2 = np.minimum(x2[row], x2[r])
        iy2 = np.minimum(y2[row], y2[r])
        iw = np.maximum(ix2 - ix1, 0.0)
        ih = np.maximum(iy2 - iy1, 0.0)
        inter = iw * ih
        union = areas[row] + areas[r] - inter
        ov = np.zeros(m, dtype=np.float64)
        np.divide(inter, union, out=ov, where=union > 0.0)
        if code == HARD:
            w = np.where(ov < nt, 1.0, 0.0)
        elif code == LINEAR:
            w = np.where(ov < nt, 1.0, 1.0 - ov)
        else:
            w = np.exp(-(ov * ov) / sigma)
        s[:m] *= w
        keep = s[:m] >= thr
        k = int(np.count_nonzero(keep))
        if k != m:
            rows[:k] = rows[:m][keep]
            s[:k] = s[:m][keep]
            m = k
    return out_rows[:count], out_scores[:count]


_BACKENDS = {"numpy": _suppress_numpy}

if not _numba_disabled():
    try:
        from numba import njit
    except ImportError:
        njit = None
else:
    njit = None

if njit is not None:

    @njit(cache=True, nogil=True)
    def _suppress_numba(x1, y1, x2, y2, scores, src, code, nt, sigma, thr):
        n = scores.shape[0]
        s = scores.copy()
        rows = np.empty(n, dtype=np.int64)
        for i in range(n):
            rows[i] = i
        areas = (x2 - x1) * (y2 - y1)
        out_rows = np.empty(n, dtype=np.int64)
        out_scores = np.empty(n, dtype=np.float64)
        count = 0
        m = n
        while m > 0:
            best = 0
            for k in range(1, m):
                if s[k] > s[best] or (
                    s[k] == s[best] and src[rows[k]] < src[rows[best]]
                ):
                    best = k
            row = rows[best]
            out_rows[count] = row
            out_scores[count] = s[best]
            count += 1
            m -= 1
            rows[best] = rows[m]
            s[best] = s[m]
            mx1 = x1[row]
            my1 = y1[row]
            mx2 = x2[row]
            my2 = y2[row]
            marea = areas[row]
            k = 0
            while k < m:
                r = rows[k]
                ix1 = max(mx1, x1[r])
                iy1 = max(my1, y1[r])
                ix2 = min(mx2, x2[r])
                iy2 = min(my2, y2[r])
                iw = ix2 - ix1
                ih = iy2 - iy1
                if iw > 0.0 and ih > 0.0:
                    inter = iw * ih
                    union = marea + areas[r] - inter
                    ov = inter / union if union > 0.0 else 0.0
                    if code == HARD:
                        w = 1.0 if ov < nt else 0.0
                    elif code == LINEAR:
                        w = 1.0 if ov < nt else 1.0 - ov
                    else:
                        w = math.exp(-(ov * ov) / sigma)
                    s[k] = s[k] * w
                if s[k] < thr:
                    rows[k] = rows[m - 1]
                    s[k] = s[m - 1]
                    m -= 1
                else:
                    k += 1
        return out_rows[:count], out_scores[:count]

    _BACKENDS["numba"] = _suppress_numba

DEFAULT_BACKEND = "numba" if "numba" in _BACKENDS else "numpy"


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def suppress_arrays(x1, y1, x2, y2, scores, src, code, nt, sigma, thr, backend=None):
    """Run the greedy rescoring loop on raw float64/int64 arrays.

    Returns (rows, final_scores): indices into the input arrays in selection
    order, which is also descending final-score order (ties by source index),
    plus the score each box carried when it was selected.
    """
    name = backend if backend is not None else DEFAULT_BACKEND
    try:
        fn = _BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"unknown backend {name!r}; available: {', '.join(available_backends())}"
        ) from None
    return fn(x1, y1, x2, y2, scores, src, code, nt, sigma, thr)
