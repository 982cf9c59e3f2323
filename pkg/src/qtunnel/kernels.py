"""Numba-compiled hot path for the adjoint gradient sweep.

The ensemble experiments evaluate the cost and gradient millions of
times, so the forward/backward circuit sweep is JIT-compiled. Gate
encoding: kind 0 = RY(qubit=a, slot=b), kind 1 = CNOT(control=a,
target=b). Qubit 0 is the most significant bit of the basis index.
"""

from __future__ import annotations

from math import cos, sin

import numpy as np
from numba import njit


@njit(cache=True)
def _ry_inplace(psi, n, qubit, c, s):
    stride = 1 << (n - 1 - qubit)
    for base in range(0, psi.shape[0], stride * 2):
        for off in range(stride):
            i0 = base + off
            i1 = i0 + stride
            a0 = psi[i0]
            a1 = psi[i1]
            psi[i0] = c * a0 - s * a1
            psi[i1] = s * a0 + c * a1


@njit(cache=True)
def _cnot_inplace(psi, n, control, target):
    cmask = 1 << (n - 1 - control)
    tmask = 1 << (n - 1 - target)
    for i in range(psi.shape[0]):
        if (i & cmask) and not (i & tmask):
            j = i | tmask
            tmp = psi[i]
            psi[i] = psi[j]
            psi[j] = tmp


@njit(cache=True)
def _observable_apply(psi, diag, masks, phases, out):
    for i in range(psi.shape[0]):
        out[i] = diag[i] * psi[i]
    for t in range(masks.shape[0]):
        m = masks[t]
        for i in range(psi.shape[0]):
            out[i] += phases[t, i] * psi[i ^ m]


@njit(cache=True)
def adjoint_cost_and_gradient(n, kinds, arg_a, arg_b, params, diag, masks, phases, n_params):
    """Forward state build plus reverse adjoint sweep.

    Returns (value, gradient, final amplitudes). The reverse sweep keeps
    two vectors: ket (un-applied back to each gate's input) and lam
    (O|psi> pulled back through the inverses); each RY contributes
    2 Re <lam| dRY/dphi |ket>.
    """
    dim = 1 << n
    psi = np.zeros(dim, np.complex128)
    psi[0] = 1.0
    for g in range(kinds.shape[0]):
        if kinds[g] == 0:
            th = params[arg_b[g]]
            _ry_inplace(psi, n, arg_a[g], cos(th / 2), sin(th / 2))
        else:
            _cnot_inplace(psi, n, arg_a[g], arg_b[g])

    lam = np.empty(dim, np.complex128)
    _observable_apply(psi, diag, masks, phases, lam)
    value = 0.0
    for i in range(dim):
        value += (psi[i].conjugate() * lam[i]).real

    ket = psi.copy()
    grad = np.zeros(n_params)
    for g in range(kinds.shape[0] - 1, -1, -1):
        if kinds[g] == 0:
            qubit = arg_a[g]
            slot = arg_b[g]
            th = params[slot]
            c = cos(th / 2)
            s = sin(th / 2)
            _ry_inplace(ket, n, qubit, c, -s)
            stride = 1 << (n - 1 - qubit)
            acc = 0.0
            for base in range(0, dim, stride * 2):
                for off in range(stride):
                    i0 = base + off
                    i1 = i0 + stride
                    k0 = ket[i0]
                    k1 = ket[i1]
                    d0 = 0.5 * (-s * k0 - c * k1)
                    d1 = 0.5 * (c * k0 - s * k1)
                    acc += (lam[i0].conjugate() * d0 + lam[i1].conjugate() * d1).real
            grad[slot] = 2.0 * acc
            _ry_inplace(lam, n, qubit, c, -s)
        else:
            _cnot_inplace(ket, n, arg_a[g], arg_b[g])
            _cnot_inplace(lam, n, arg_a[g], arg_b[g])
    return value, grad, psi
