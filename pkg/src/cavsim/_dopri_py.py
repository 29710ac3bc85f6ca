"""Pure-Python twin of the compiled Dormand-Prince kernel.

Same tableau, error norm and step controller as ``_dopri.pyx`` so both
backends agree to round-off. Used when the extension is not built.
"""
import numpy as np

A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = 71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40


def dopri(matvec, y0, t_out, rtol, atol, h_init, max_steps):
    """Integrate ``y' = matvec(y)``; returns ``(samples, status, n_accepted, n_rejected)``."""
    y = np.array(y0, dtype=complex)
    n = y.size
    nt = len(t_out)
    out = np.zeros((nt, n), complex)
    out[0] = y
    if nt < 2:
        return out, 0, 0, 0
    t = float(t_out[0])
    k1 = matvec(y)
    h = h_init
    if h <= 0:
        sc = atol + rtol * np.abs(y)
        with np.errstate(over="ignore"):  # inf is handled like the compiled kernel does
            d0 = np.sqrt(np.mean(np.abs(y / sc) ** 2))
            d1 = np.sqrt(np.mean(np.abs(k1 / sc) ** 2))
        h = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    n_acc = n_rej = 0
    status = 0
    for iout in range(1, nt):
        t_end = float(t_out[iout])
        while t < t_end:
            if n_acc + n_rej >= max_steps:
                status = 2
                break
            hu = h
            clipped = False
            if t + hu >= t_end:
                hu = t_end - t
                clipped = True
            if hu < 1e-14 * max(abs(t), 1.0) and not clipped:
                status = 1
                break
            k2 = matvec(y + hu * (A21 * k1))
            k3 = matvec(y + hu * (A31 * k1 + A32 * k2))
            k4 = matvec(y + hu * (A41 * k1 + A42 * k2 + A43 * k3))
            k5 = matvec(y + hu * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
            k6 = matvec(y + hu * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
            ynew = y + hu * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6)
            k7 = matvec(ynew)
            e = hu * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
            sc = atol + rtol * np.maximum(np.abs(y), np.abs(ynew))
            err = float(np.sqrt(np.mean(np.abs(e / sc) ** 2)))
            if err <= 1.0:
                n_acc += 1
                t = t_end if clipped else t + hu
                y = ynew
                k1 = k7
                fac = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
                if clipped:
                    h = max(h, hu * fac)
                else:
                    h = hu * fac
            else:
                n_rej += 1
                h = hu * max(0.2, 0.9 * err ** -0.2)
        if status:
            break
        out[iout] = y
    return out, status, n_acc, n_rej
