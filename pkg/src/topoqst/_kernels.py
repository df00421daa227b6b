"""Compiled inner loops for the propagators (numba, GIL released)."""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _probs_into(c, row, full):
    n = c.shape[0]
    if full:
        for j in range(n):
            row[j] = c[j].real * c[j].real + c[j].imag * c[j].imag
    else:
        row[0] = c[0].real * c[0].real + c[0].imag * c[0].imag
        row[1] = c[n - 1].real * c[n - 1].real + c[n - 1].imag * c[n - 1].imag


@njit(cache=True, nogil=True)
def chain_midpoint_taylor(c0, t1s, t2s, deltas, pert_diag, pert_off, dt, order, record_every, out, full):
    """Advance c0 through len(t1s) steps of exp(-i H(t_mid) dt).

    H is tridiagonal; the exponential is applied as a Taylor series of
    ``order`` terms, which the caller sizes so the truncation error is
    below double precision for dt * |H| <= budget.
    Probabilities are written to ``out`` every ``record_every`` steps
    (row 0 holds the initial state).
    """
    n = c0.shape[0]
    c = c0.copy()
    term = np.empty(n, dtype=np.complex128)
    nxt = np.empty(n, dtype=np.complex128)
    diag = np.empty(n)
    off = np.empty(n - 1)
    _probs_into(c, out[0], full)
    rec = 0
    for k in range(t1s.shape[0]):
        for j in range(n):
            if j % 2 == 0:
                diag[j] = deltas[k] + pert_diag[j]
            else:
                diag[j] = -deltas[k] + pert_diag[j]
        for j in range(n - 1):
            if j % 2 == 0:
                off[j] = t2s[k] + pert_off[j]
            else:
                off[j] = t1s[k] + pert_off[j]
        for j in range(n):
            term[j] = c[j]
        for m in range(1, order + 1):
            coef = -1j * dt / m
            for j in range(n):
                acc = diag[j] * term[j]
                if j > 0:
                    acc += off[j - 1] * term[j - 1]
                if j < n - 1:
                    acc += off[j] * term[j + 1]
                nxt[j] = coef * acc
            for j in range(n):
                term[j] = nxt[j]
                c[j] += nxt[j]
        if (k + 1) % record_every == 0:
            rec += 1
            _probs_into(c, out[rec], full)
    return c


@njit(cache=True, nogil=True)
def two_level_exact_steps(a0, kappas, deltas, dt, record_every, out):
    """Two-level analogue using the closed-form 2x2 exponential per step."""
    a = a0.copy()
    out[0, 0] = abs(a[0]) ** 2
    out[0, 1] = abs(a[1]) ** 2
    rec = 0
    for k in range(kappas.shape[0]):
        d = deltas[k]
        kap = kappas[k]
        w = np.sqrt(d * d + kap * kap)
        cw = np.cos(w * dt)
        # sin(w dt)/w, finite as w -> 0
        if w * dt > 1e-8:
            sw = np.sin(w * dt) / w
        else:
            sw = dt
        al = (cw - 1j * sw * d) * a[0] - 1j * sw * kap * a[1]
        ar = -1j * sw * kap * a[0] + (cw + 1j * sw * d) * a[1]
        a[0] = al
        a[1] = ar
        if (k + 1) % record_every == 0:
            rec += 1
            out[rec, 0] = abs(a[0]) ** 2
            out[rec, 1] = abs(a[1]) ** 2
    return a
