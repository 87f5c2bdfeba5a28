"""Hot loop of the virtual lock-in: mix with the reference and low-pass.

Two interchangeable backends compute the same thing:

* ``numba``: a single fused pass over the samples, no temporaries.
* ``numpy``: builds the full product arrays and filters them with
  ``scipy.signal.lfilter``.

``backend=None`` picks numba unless ``ESR_TWIN_DISABLE_NUMBA`` is set.
"""

from __future__ import annotations

import numpy as np
from scipy import signal as sps

from . import _accel
from ._accel import njit

__all__ = ["lockin_filter", "default_backend"]

_EMPTY = np.zeros(0)


def default_backend() -> str:
    return "numba" if _accel.USE_NUMBA else "numpy"


@njit
def _lockin_numba(sig, ref_i, ref_q, noise, n, alpha, n_pre, n_avg, trace_i, trace_q):
    ps = sig.shape[0]
    pr = ref_i.shape[0]
    has_noise = noise.shape[0] > 0
    keep = trace_i.shape[0] > 0
    # initial state: mean demodulated product over the pre-charge window
    acc_i = 0.0
    acc_q = 0.0
    for k in range(n_pre):
        x = sig[k % ps]
        if has_noise:
            x += noise[k]
        acc_i += x * ref_i[k % pr]
        acc_q += x * ref_q[k % pr]
    yi = acc_i / n_pre
    yq = acc_q / n_pre
    decay = 1.0 - alpha
    start_avg = n - n_avg
    sum_i = 0.0
    sum_q = 0.0
    for k in range(n):
        x = sig[k % ps]
        if has_noise:
            x += noise[k]
        yi = decay * yi + alpha * (x * ref_i[k % pr])
        yq = decay * yq + alpha * (x * ref_q[k % pr])
        if keep:
            trace_i[k] = yi
            trace_q[k] = yq
        if k >= start_avg:
            sum_i += yi
            sum_q += yq
    return sum_i / n_avg, sum_q / n_avg


def _lockin_numpy(sig, ref_i, ref_q, noise, n, alpha, n_pre, n_avg, trace_i, trace_q):
    x = np.resize(sig, n)
    if noise.shape[0]:
        x = x + noise
    b = [alpha]
    a = [1.0, -(1.0 - alpha)]
    out = []
    for ref, trace in ((ref_i, trace_i), (ref_q, trace_q)):
        prod = x * np.resize(ref, n)
        y0 = prod[:n_pre].mean()
        y, _ = sps.lfilter(b, a, prod, zi=[(1.0 - alpha) * y0])
        if trace.shape[0]:
            trace[:] = y
        out.append(y[n - n_avg:].mean())
    return out[0], out[1]


_BACKENDS = {"numba": _lockin_numba, "numpy": _lockin_numpy}


def lockin_filter(sig, ref_i, ref_q, n, alpha, n_pre, n_avg, noise=None,
                  keep_trace=False, backend=None):
    """Demodulate ``n`` samples of a cyclically repeated signal plus noise.

    ``sig``, ``ref_i`` and ``ref_q`` are indexed modulo their own lengths, so a
    periodic signal can be passed as one period. Returns ``(I, Q)`` as the mean
    of the last ``n_avg`` filter outputs, plus the full traces when
    ``keep_trace`` is set.
    """
    backend = backend or default_backend()
    if backend == "numba" and not _accel.HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    fn = _BACKENDS[backend]
    sig = np.ascontiguousarray(sig, dtype=np.float64)
    ref_i = np.ascontiguousarray(ref_i, dtype=np.float64)
    ref_q = np.ascontiguousarray(ref_q, dtype=np.float64)
    noise = _EMPTY if noise is None else np.ascontiguousarray(noise, dtype=np.float64)
    if keep_trace:
        trace_i = np.empty(n)
        trace_q = np.empty(n)
    else:
        trace_i = trace_q = _EMPTY
    I, Q = fn(sig, ref_i, ref_q, noise, int(n), float(alpha), int(n_pre), int(n_avg),
              trace_i, trace_q)
    if keep_trace:
        return I, Q, trace_i, trace_q
    return I, Q
