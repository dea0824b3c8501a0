# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Dense statevector kernels, compiled backend.

Same call signatures and conventions as ``resil._kernels_py`` (see that
module's docstring): qubit 0 is the amplitude-index LSB, a gate matrix is
indexed with its first listed qubit as the local LSB, and a Pauli string is
``i**ny * X^xmask * Z^zmask``.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "cython"


cdef inline int _popcount(unsigned long long x) nogil:
    cdef int c = 0
    while x:
        x &= x - 1
        c += 1
    return c


def apply_1q(cnp.ndarray[cnp.complex128_t, ndim=1] psi, object u, int q):
    """Apply a 2x2 matrix to qubit ``q``."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] um = np.ascontiguousarray(u, dtype=np.complex128)
    cdef Py_ssize_t dim = psi.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.empty(dim, dtype=np.complex128)
    cdef double complex u00 = um[0, 0], u01 = um[0, 1], u10 = um[1, 0], u11 = um[1, 1]
    cdef Py_ssize_t low = (<Py_ssize_t>1) << q
    cdef Py_ssize_t stride = low << 1
    cdef Py_ssize_t nblocks = dim / stride
    cdef Py_ssize_t block, base, i, i0, i1
    cdef double complex a, b
    with nogil:
        for block in range(nblocks):
            base = block * stride
            for i in range(low):
                i0 = base + i
                i1 = i0 + low
                a = psi[i0]
                b = psi[i1]
                out[i0] = u00 * a + u01 * b
                out[i1] = u10 * a + u11 * b
    return out


def apply_2q(cnp.ndarray[cnp.complex128_t, ndim=1] psi, object u, int q0, int q1):
    """Apply a 4x4 matrix to qubits ``(q0, q1)`` with ``q0`` the local LSB."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] um = np.ascontiguousarray(u, dtype=np.complex128)
    cdef Py_ssize_t dim = psi.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.empty(dim, dtype=np.complex128)
    cdef Py_ssize_t m0 = (<Py_ssize_t>1) << q0
    cdef Py_ssize_t m1 = (<Py_ssize_t>1) << q1
    cdef Py_ssize_t i, j, r, c
    cdef double complex amp[4]
    cdef double complex acc
    with nogil:
        for i in range(dim):
            if (i & m0) or (i & m1):
                continue
            # i runs over indices with both target bits clear
            amp[0] = psi[i]
            amp[1] = psi[i | m0]
            amp[2] = psi[i | m1]
            amp[3] = psi[i | m0 | m1]
            for r in range(4):
                acc = 0
                for c in range(4):
                    acc += um[r, c] * amp[c]
                j = i
                if r & 1:
                    j |= m0
                if r & 2:
                    j |= m1
                out[j] = acc
    return out


def apply_pauli(cnp.ndarray[cnp.complex128_t, ndim=1] psi, object xmask, object zmask, int ny):
    """Apply the Pauli string ``i**ny * X^xmask * Z^zmask``."""
    cdef Py_ssize_t dim = psi.shape[0]
    cdef unsigned long long xm = <unsigned long long>xmask
    cdef unsigned long long zm = <unsigned long long>zmask
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.empty(dim, dtype=np.complex128)
    cdef double complex phase = 1.0
    cdef int k = ny & 3
    if k == 1:
        phase = 1j
    elif k == 2:
        phase = -1.0
    elif k == 3:
        phase = -1j
    cdef Py_ssize_t j, src
    with nogil:
        for j in range(dim):
            src = j ^ <Py_ssize_t>xm
            if _popcount((<unsigned long long>src) & zm) & 1:
                out[j] = -phase * psi[src]
            else:
                out[j] = phase * psi[src]
    return out


def expect_pauli(cnp.ndarray[cnp.complex128_t, ndim=1] psi, object xmask, object zmask, int ny):
    """Return <psi| i**ny X^xmask Z^zmask |psi>."""
    cdef Py_ssize_t dim = psi.shape[0]
    cdef unsigned long long xm = <unsigned long long>xmask
    cdef unsigned long long zm = <unsigned long long>zmask
    cdef double complex acc = 0
    cdef double complex phase = 1.0
    cdef int k = ny & 3
    if k == 1:
        phase = 1j
    elif k == 2:
        phase = -1.0
    elif k == 3:
        phase = -1j
    cdef Py_ssize_t j, src
    with nogil:
        for j in range(dim):
            src = j ^ <Py_ssize_t>xm
            if _popcount((<unsigned long long>src) & zm) & 1:
                acc -= psi[j].conjugate() * psi[src]
            else:
                acc += psi[j].conjugate() * psi[src]
    return complex(phase * acc)


def apply_dense(cnp.ndarray[cnp.complex128_t, ndim=1] psi, object u, object qubits):
    """Apply a 2**k x 2**k matrix to ``qubits`` (qubits[0] = local LSB)."""
    cdef tuple qs = tuple(qubits)
    if len(qs) == 1:
        return apply_1q(psi, u, qs[0])
    if len(qs) == 2:
        return apply_2q(psi, u, qs[0], qs[1])
    # Rare k >= 3 path: delegate to the NumPy implementation.
    from resil import _kernels_py
    return _kernels_py.apply_dense(psi, u, qs)
