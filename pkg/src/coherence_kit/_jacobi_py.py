"""Pure-Python fallback for the compiled Jacobi kernel.

Same rotation sequence as ``_jacobi.pyx``; only used when the extension
is not built.
"""
import math

import numpy as np


def jacobi_eigh(a_in, tol=1e-15, max_sweeps=100):
    a = np.array(a_in, dtype=np.complex128)
    n = a.shape[0]
    a = 0.5 * (a + a.conj().T)
    a[np.diag_indices(n)] = a.diagonal().real
    v = np.eye(n, dtype=np.complex128)
    fro = math.sqrt(float(np.sum(a.real**2 + a.imag**2)))
    iu = np.triu_indices(n, 1)

    converged = False
    for sweep in range(max_sweeps + 1):
        upper = a[iu]
        off = math.sqrt(2.0 * float(np.sum(upper.real**2 + upper.imag**2)))
        if off <= tol * fro or off == 0.0:
            converged = True
            break
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                h = math.hypot(apq.real, apq.imag)
                if h == 0.0:
                    continue
                ph = apq / h
                app = a[p, p].real
                aqq = a[q, q].real
                theta = (aqq - app) / (2.0 * h)
                if theta >= 0.0:
                    t = 1.0 / (theta + math.sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                phc = ph.conjugate()
                colp = a[:, p].copy()
                colq = a[:, q]
                a[:, p] = c * colp - s * phc * colq
                a[:, q] = s * colp + c * phc * colq
                rowp = a[p, :].copy()
                rowq = a[q, :]
                a[p, :] = c * rowp - s * ph * rowq
                a[q, :] = s * rowp + c * ph * rowq
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = app - t * h
                a[q, q] = aqq + t * h
                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp - s * phc * vq
                v[:, q] = s * vp + c * phc * vq

    w = a.diagonal().real.copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order], (sweep if converged else -1)
