"""Double-double complex arithmetic and the compiled series kernels.

A double-double complex number is carried as a pair ``(hi, lo)`` of
``complex128`` values whose real and imaginary parts are each an unevaluated
sum ``hi + lo`` with ``|lo| <= ulp(hi)/2``.  This gives roughly 31 significant
digits, which is what the continuation of solutions needs once the growth of
the subdominant solution along a path exceeds ``1e8`` or so.

Everything here is compiled with numba.  The public Python-level wrappers live
in :mod:`darbouxspec.odecore`.
"""

import numpy as np
from numba import njit

_SPLITTER = 134217729.0  # 2**27 + 1


# ---------------------------------------------------------------------------
# real double-double primitives
# ---------------------------------------------------------------------------

@njit(cache=True, inline="always")
def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


@njit(cache=True, inline="always")
def _fast_two_sum(a, b):
    s = a + b
    return s, b - (s - a)


@njit(cache=True, inline="always")
def _two_prod(a, b):
    p = a * b
    t = _SPLITTER * a
    ah = t - (t - a)
    al = a - ah
    t = _SPLITTER * b
    bh = t - (t - b)
    bl = b - bh
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


@njit(cache=True, inline="always")
def _dadd(ah, al, bh, bl):
    s, e = _two_sum(ah, bh)
    t, f = _two_sum(al, bl)
    e += t
    s, e = _fast_two_sum(s, e)
    e += f
    return _fast_two_sum(s, e)


@njit(cache=True, inline="always")
def _dmul(ah, al, bh, bl):
    p, e = _two_prod(ah, bh)
    e += ah * bl + al * bh
    return _fast_two_sum(p, e)


@njit(cache=True, inline="always")
def _ddiv(ah, al, bh, bl):
    q1 = ah / bh
    p, e = _dmul(q1, 0.0, bh, bl)
    rh, rl = _dadd(ah, al, -p, -e)
    q2 = rh / bh
    p, e = _dmul(q2, 0.0, bh, bl)
    rh, rl = _dadd(rh, rl, -p, -e)
    q3 = rh / bh
    q1, q2 = _fast_two_sum(q1, q2)
    return _dadd(q1, q2, q3, 0.0)


# ---------------------------------------------------------------------------
# complex double-double
# ---------------------------------------------------------------------------

@njit(cache=True, inline="always")
def cadd(ah, al, bh, bl):
    rh, rl = _dadd(ah.real, al.real, bh.real, bl.real)
    ih, il = _dadd(ah.imag, al.imag, bh.imag, bl.imag)
    return complex(rh, ih), complex(rl, il)


@njit(cache=True, inline="always")
def csub(ah, al, bh, bl):
    return cadd(ah, al, -bh, -bl)


@njit(cache=True, inline="always")
def cmul(ah, al, bh, bl):
    arh, arl, aih, ail = ah.real, al.real, ah.imag, al.imag
    brh, brl, bih, bil = bh.real, bl.real, bh.imag, bl.imag
    t1h, t1l = _dmul(arh, arl, brh, brl)
    t2h, t2l = _dmul(aih, ail, bih, bil)
    t3h, t3l = _dmul(arh, arl, bih, bil)
    t4h, t4l = _dmul(aih, ail, brh, brl)
    rh, rl = _dadd(t1h, t1l, -t2h, -t2l)
    ih, il = _dadd(t3h, t3l, t4h, t4l)
    return complex(rh, ih), complex(rl, il)


@njit(cache=True, inline="always")
def cscale(ah, al, f):
    """Multiply a complex double-double by a real double."""
    rh, rl = _dmul(ah.real, al.real, f, 0.0)
    ih, il = _dmul(ah.imag, al.imag, f, 0.0)
    return complex(rh, ih), complex(rl, il)


@njit(cache=True, inline="always")
def cdivr(ah, al, f):
    """Divide a complex double-double by a real double."""
    rh, rl = _ddiv(ah.real, al.real, f, 0.0)
    ih, il = _ddiv(ah.imag, al.imag, f, 0.0)
    return complex(rh, ih), complex(rl, il)


@njit(cache=True, inline="always")
def cdiv(ah, al, bh, bl):
    # a / b = a * conj(b) / |b|^2
    n1h, n1l = _dmul(bh.real, bl.real, bh.real, bl.real)
    n2h, n2l = _dmul(bh.imag, bl.imag, bh.imag, bl.imag)
    nh, nl = _dadd(n1h, n1l, n2h, n2l)
    ph, pl = cmul(ah, al, bh.conjugate(), bl.conjugate())
    rh, rl = _ddiv(ph.real, pl.real, nh, nl)
    ih, il = _ddiv(ph.imag, pl.imag, nh, nl)
    return complex(rh, ih), complex(rl, il)


# ---------------------------------------------------------------------------
# polynomial helpers (coefficients lowest degree first, double input)
# ---------------------------------------------------------------------------

@njit(cache=True)
def shift_poly(coef, c):
    """Coefficients of ``p(c + w)`` in powers of ``w``, in double-double."""
    n = coef.shape[0]
    hi = np.zeros(n, dtype=np.complex128)
    lo = np.zeros(n, dtype=np.complex128)
    for k in range(n):
        hi[k] = coef[k]
    # repeated synthetic division (Taylor shift)
    for j in range(n - 1):
        for k in range(n - 2, j - 1, -1):
            th, tl = cmul(hi[k + 1], lo[k + 1], c, 0j)
            hi[k], lo[k] = cadd(hi[k], lo[k], th, tl)
    return hi, lo


@njit(cache=True)
def _mag(h):
    return abs(h.real) + abs(h.imag)


# ---------------------------------------------------------------------------
# Taylor step at an ordinary point
# ---------------------------------------------------------------------------

@njit(cache=True)
def taylor_coefficients(ph, pl, qh, ql, rh, rl, lam, y0h, y0l, y1h, y1l,
                        hmag, tol, kmax, ch, cl):
    """Fill ``ch/cl`` with Taylor coefficients of the solution with given
    value and derivative at an ordinary point.

    The recurrence is that of ``P y'' + Q y' + (R - lam) y = 0`` with all
    three coefficients already shifted to the expansion centre.  Returns the
    index one past the last coefficient computed.  Truncation stops when three
    consecutive terms ``|c_k| hmag**k`` fall below ``tol`` times the running
    maximum.
    """
    npp = ph.shape[0]
    nq = qh.shape[0]
    nr = rh.shape[0]
    ch[0], cl[0] = y0h, y0l
    ch[1], cl[1] = y1h, y1l
    # r0 - lam
    r0h, r0l = cadd(rh[0], rl[0], -lam, 0j)
    ip0h, ip0l = cdiv(1.0 + 0j, 0j, ph[0], pl[0])
    big = max(_mag(y0h), _mag(y1h) * hmag, 1e-300)
    small = 0
    kend = kmax
    for n in range(0, kmax - 2):
        sh = 0j
        sl = 0j
        # P terms: p_i (n+2-i)(n+1-i) c_{n+2-i}, i >= 1
        for i in range(1, npp):
            m = n + 2 - i
            if m < 2:
                break
            th, tl = cmul(ph[i], pl[i], ch[m], cl[m])
            th, tl = cscale(th, tl, float(m * (m - 1)))
            sh, sl = cadd(sh, sl, th, tl)
        # Q terms: q_i (n+1-i) c_{n+1-i}, i >= 0
        for i in range(nq):
            m = n + 1 - i
            if m < 1:
                break
            th, tl = cmul(qh[i], ql[i], ch[m], cl[m])
            th, tl = cscale(th, tl, float(m))
            sh, sl = cadd(sh, sl, th, tl)
        # R terms: r_i c_{n-i}
        for i in range(nr):
            m = n - i
            if m < 0:
                break
            if i == 0:
                th, tl = cmul(r0h, r0l, ch[m], cl[m])
            else:
                th, tl = cmul(rh[i], rl[i], ch[m], cl[m])
            sh, sl = cadd(sh, sl, th, tl)
        th, tl = cmul(sh, sl, ip0h, ip0l)
        th, tl = cdivr(-th, -tl, float((n + 2) * (n + 1)))
        ch[n + 2], cl[n + 2] = th, tl
        hp_k = hmag ** (n + 2)
        term = _mag(th) * hp_k
        if term > big:
            big = term
        if term <= tol * big:
            small += 1
            if small >= 3:
                kend = n + 3
                break
        else:
            small = 0
    return kend


@njit(cache=True)
def eval_series(ch, cl, kend, hh, hl):
    """Value and derivative of ``sum c_k h^k`` in double-double (Horner)."""
    vh = ch[kend - 1]
    vl = cl[kend - 1]
    dh = 0j
    dl = 0j
    for k in range(kend - 2, -1, -1):
        # d = d*h + v_prev ; v = v*h + c_k
        dh, dl = cmul(dh, dl, hh, hl)
        dh, dl = cadd(dh, dl, vh, vl)
        vh, vl = cmul(vh, vl, hh, hl)
        vh, vl = cadd(vh, vl, ch[k], cl[k])
    return vh, vl, dh, dl


@njit(cache=True)
def _min_dist(z, sing):
    d = 1e300
    for k in range(sing.shape[0]):
        t = abs(z - sing[k])
        if t < d:
            d = t
    return d


@njit(cache=True)
def continue_path(pc, qc, rc, lam, sing, pts, Yh, Yl, frac, tol, kmax):
    """Continue the 2x2 frame ``Y`` along the polyline ``pts``.

    ``Y[0, j]`` is the value and ``Y[1, j]`` the derivative of solution ``j``.
    Step lengths are capped at ``frac`` times the distance to the nearest
    singular point and halved whenever the Taylor series has not reached
    ``tol`` within ``kmax`` terms.  Returns ``(Yh, Yl, nsteps, status)`` with
    status 0 on success and 1 if the step size underflowed.
    """
    Yh = Yh.copy()
    Yl = Yl.copy()
    ch = np.zeros(kmax, dtype=np.complex128)
    cl = np.zeros(kmax, dtype=np.complex128)
    nsteps = 0
    for seg in range(pts.shape[0] - 1):
        a = pts[seg]
        b = pts[seg + 1]
        L = abs(b - a)
        if L == 0.0:
            continue
        t = 0.0
        z = a
        shrink = 1.0
        while t < 1.0:
            d = _min_dist(z, sing)
            dt = shrink * frac * d / L
            if dt < 1e-13:
                return Yh, Yl, nsteps, 1
            if t + dt >= 1.0 - 1e-12:
                tn = 1.0
                zn = b
            else:
                tn = t + dt
                zn = a + (b - a) * tn
            hh, hl = cadd(zn, 0j, -z, 0j)
            hmag = abs(hh)
            ph, pl = shift_poly(pc, z)
            qh, ql = shift_poly(qc, z)
            rh, rl = shift_poly(rc, z)
            ok = True
            n0h = 0j
            n0l = 0j
            n1h = 0j
            n1l = 0j
            n2h = 0j
            n2l = 0j
            n3h = 0j
            n3l = 0j
            for j in range(2):
                kend = taylor_coefficients(ph, pl, qh, ql, rh, rl, lam,
                                           Yh[0, j], Yl[0, j], Yh[1, j], Yl[1, j],
                                           hmag, tol, kmax, ch, cl)
                if kend >= kmax:
                    ok = False
                    break
                vh, vl, dh, dl = eval_series(ch, cl, kend, hh, hl)
                if j == 0:
                    n0h, n0l, n1h, n1l = vh, vl, dh, dl
                else:
                    n2h, n2l, n3h, n3l = vh, vl, dh, dl
            if not ok:
                shrink *= 0.5
                continue
            Yh[0, 0], Yl[0, 0] = n0h, n0l
            Yh[1, 0], Yl[1, 0] = n1h, n1l
            Yh[0, 1], Yl[0, 1] = n2h, n2l
            Yh[1, 1], Yl[1, 1] = n3h, n3l
            z = zn
            t = tn
            nsteps += 1
            if shrink < 1.0:
                shrink = min(1.0, 2.0 * shrink)
    return Yh, Yl, nsteps, 0


@njit(cache=True)
def continue_batch(pc, qc, rc, lams, sing, pts, frac, tol, kmax):
    """Transfer matrices along one polyline for many eigenvalues."""
    n = lams.shape[0]
    outh = np.zeros((n, 2, 2), dtype=np.complex128)
    outl = np.zeros((n, 2, 2), dtype=np.complex128)
    status = np.zeros(n, dtype=np.int64)
    I = np.eye(2, dtype=np.complex128)
    Z = np.zeros((2, 2), dtype=np.complex128)
    for k in range(n):
        Yh, Yl, ns, st = continue_path(pc, qc, rc, lams[k], sing, pts, I, Z,
                                       frac, tol, kmax)
        outh[k] = Yh
        outl[k] = Yl
        status[k] = st
    return outh, outl, status


@njit(cache=True)
def mat_mul(Ah, Al, Bh, Bl):
    """2x2 double-double matrix product."""
    Ch = np.zeros((2, 2), dtype=np.complex128)
    Cl = np.zeros((2, 2), dtype=np.complex128)
    for i in range(2):
        for j in range(2):
            sh, sl = cmul(Ah[i, 0], Al[i, 0], Bh[0, j], Bl[0, j])
            th, tl = cmul(Ah[i, 1], Al[i, 1], Bh[1, j], Bl[1, j])
            Ch[i, j], Cl[i, j] = cadd(sh, sl, th, tl)
    return Ch, Cl


@njit(cache=True)
def mat_inv(Ah, Al):
    """2x2 double-double inverse via the adjugate."""
    d1h, d1l = cmul(Ah[0, 0], Al[0, 0], Ah[1, 1], Al[1, 1])
    d2h, d2l = cmul(Ah[0, 1], Al[0, 1], Ah[1, 0], Al[1, 0])
    dh, dl = cadd(d1h, d1l, -d2h, -d2l)
    Ch = np.zeros((2, 2), dtype=np.complex128)
    Cl = np.zeros((2, 2), dtype=np.complex128)
    Ch[0, 0], Cl[0, 0] = cdiv(Ah[1, 1], Al[1, 1], dh, dl)
    Ch[1, 1], Cl[1, 1] = cdiv(Ah[0, 0], Al[0, 0], dh, dl)
    Ch[0, 1], Cl[0, 1] = cdiv(-Ah[0, 1], -Al[0, 1], dh, dl)
    Ch[1, 0], Cl[1, 0] = cdiv(-Ah[1, 0], -Al[1, 0], dh, dl)
    return Ch, Cl


@njit(cache=True)
def mat_det(Ah, Al):
    d1h, d1l = cmul(Ah[0, 0], Al[0, 0], Ah[1, 1], Al[1, 1])
    d2h, d2l = cmul(Ah[0, 1], Al[0, 1], Ah[1, 0], Al[1, 0])
    return cadd(d1h, d1l, -d2h, -d2l)


@njit(cache=True)
def mat_scale(Ah, Al, ch, cl):
    Bh = np.zeros((2, 2), dtype=np.complex128)
    Bl = np.zeros((2, 2), dtype=np.complex128)
    for i in range(2):
        for j in range(2):
            Bh[i, j], Bl[i, j] = cmul(Ah[i, j], Al[i, j], ch, cl)
    return Bh, Bl


@njit(cache=True)
def local_taylor(pc, qc, rc, lam, c, radius, tol, kmax):
    """Taylor coefficients (double) of the standard frame at ``c``.

    Row 0 is the solution with ``y(c)=1, y'(c)=0``, row 1 the one with
    ``y(c)=0, y'(c)=1``.  ``radius`` is the largest ``|z-c|`` the caller
    intends to evaluate at and drives the truncation test.
    """
    ch = np.zeros(kmax, dtype=np.complex128)
    cl = np.zeros(kmax, dtype=np.complex128)
    out = np.zeros((2, kmax), dtype=np.complex128)
    ph, pl = shift_poly(pc, c)
    qh, ql = shift_poly(qc, c)
    rh, rl = shift_poly(rc, c)
    kmx = 0
    for j in range(2):
        if j == 0:
            kend = taylor_coefficients(ph, pl, qh, ql, rh, rl, lam, 1.0 + 0j, 0j,
                                       0j, 0j, radius, tol, kmax, ch, cl)
        else:
            kend = taylor_coefficients(ph, pl, qh, ql, rh, rl, lam, 0j, 0j,
                                       1.0 + 0j, 0j, radius, tol, kmax, ch, cl)
        for k in range(kend):
            out[j, k] = ch[k]
        if kend > kmx:
            kmx = kend
    return out[:, :kmx]


# ---------------------------------------------------------------------------
# Frobenius recurrence at a simple zero of P
# ---------------------------------------------------------------------------

@njit(cache=True)
def frobenius_coefficients(ph, pl, qh, ql, rh, rl, lam, rho, c0h,
                           kappa_h, kappa_l, y1h, y1l, k0, rho_b, rmag, tol,
                           kmax, ch, cl):
    """Series coefficients of ``w^rho sum c_m w^m`` at a simple zero of P.

    When ``kappa`` is nonzero the series is the non-logarithmic part ``u`` of
    ``y2 = kappa * y1 * log(w) + u`` where ``y1`` has exponent ``rho_b =
    rho + k0`` and coefficients ``y1h/y1l``.  On entry ``ch[0]`` is set from
    ``c0h``.  If ``k0 > 0`` the coefficient ``kappa`` is solved from the
    resonance equation and returned (with ``ch[k0] = 0``); otherwise the given
    ``kappa`` is returned unchanged.  Returns ``(kend, kappa_h, kappa_l)``.
    """
    npp = ph.shape[0]
    nq = qh.shape[0]
    nr = rh.shape[0]
    ny1 = y1h.shape[0]
    r0h, r0l = cadd(rh[0], rl[0], -lam, 0j)
    p1h, p1l = ph[1], pl[1]
    # a = 1 - q0/p1
    th, tl = cdiv(qh[0], ql[0], p1h, p1l)
    ah, al = cadd(1.0 + 0j, 0j, -th, -tl)
    ch[0], cl[0] = c0h, 0j
    big = max(_mag(c0h), 1e-300)
    small = 0
    kend = kmax
    log_active = _mag(kappa_h) > 0.0 or k0 > 0
    for N in range(1, kmax):
        sh = 0j
        sl = 0j
        for i in range(2, npp):
            m = N + 1 - i
            if m < 0:
                break
            th, tl = cmul(ph[i], pl[i], ch[m], cl[m])
            f1h, f1l = cadd(float(m) + 0j, 0j, rho, 0j)
            f2h, f2l = cadd(float(m - 1) + 0j, 0j, rho, 0j)
            fh, fl = cmul(f1h, f1l, f2h, f2l)
            th, tl = cmul(th, tl, fh, fl)
            sh, sl = cadd(sh, sl, th, tl)
        for i in range(1, nq):
            m = N - i
            if m < 0:
                break
            th, tl = cmul(qh[i], ql[i], ch[m], cl[m])
            f1h, f1l = cadd(float(m) + 0j, 0j, rho, 0j)
            th, tl = cmul(th, tl, f1h, f1l)
            sh, sl = cadd(sh, sl, th, tl)
        for i in range(nr):
            m = N - 1 - i
            if m < 0:
                break
            if i == 0:
                th, tl = cmul(r0h, r0l, ch[m], cl[m])
            else:
                th, tl = cmul(rh[i], rl[i], ch[m], cl[m])
            sh, sl = cadd(sh, sl, th, tl)
        # forcing from kappa * y1 * log(w):
        #   sum_i p_i (2(m+rho_b)-1) y1_m  at m = N+1-i-k0
        # + sum_i q_i y1_m                at m = N-i-k0
        fh_ = 0j
        fl_ = 0j
        if log_active:
            for i in range(1, npp):
                m = N + 1 - i - k0
                if m < 0:
                    break
                if m >= ny1:
                    continue
                th, tl = cmul(ph[i], pl[i], y1h[m], y1l[m])
                f1h, f1l = cadd(float(2 * m - 1) + 0j, 0j, rho_b, 0j)
                f1h, f1l = cadd(f1h, f1l, rho_b, 0j)
                th, tl = cmul(th, tl, f1h, f1l)
                fh_, fl_ = cadd(fh_, fl_, th, tl)
            for i in range(nq):
                m = N - i - k0
                if m < 0:
                    break
                if m >= ny1:
                    continue
                th, tl = cmul(qh[i], ql[i], y1h[m], y1l[m])
                fh_, fl_ = cadd(fh_, fl_, th, tl)
        if N == k0 and k0 > 0:
            # resonance: kappa * F = -S, with F the forcing for unit kappa
            kappa_h, kappa_l = cdiv(-sh, -sl, fh_, fl_)
            ch[N], cl[N] = 0j, 0j
            continue
        th, tl = cmul(fh_, fl_, kappa_h, kappa_l)
        sh, sl = cadd(sh, sl, th, tl)
        # indicial factor p1 (N+rho)(N+rho-a)
        f1h, f1l = cadd(float(N) + 0j, 0j, rho, 0j)
        f2h, f2l = cadd(f1h, f1l, -ah, -al)
        fh, fl = cmul(f1h, f1l, f2h, f2l)
        fh, fl = cmul(fh, fl, p1h, p1l)
        th, tl = cdiv(-sh, -sl, fh, fl)
        ch[N], cl[N] = th, tl
        term = _mag(th) * rmag ** N
        if term > big:
            big = term
        if tol > 0.0 and term <= tol * big:
            small += 1
            if small >= 3:
                kend = N + 1
                break
        else:
            small = 0
    return kend, kappa_h, kappa_l


@njit(cache=True)
def eval_power_series(ch, cl, kend, wh, wl, rho):
    """Return ``S(w) = sum c_m w^m`` and ``T(w) = sum (m+rho) c_m w^m``."""
    vh = ch[kend - 1]
    vl = cl[kend - 1]
    fh, fl = cadd(float(kend - 1) + 0j, 0j, rho, 0j)
    th, tl = cmul(ch[kend - 1], cl[kend - 1], fh, fl)
    for k in range(kend - 2, -1, -1):
        vh, vl = cmul(vh, vl, wh, wl)
        vh, vl = cadd(vh, vl, ch[k], cl[k])
        th, tl = cmul(th, tl, wh, wl)
        fh, fl = cadd(float(k) + 0j, 0j, rho, 0j)
        uh, ul = cmul(ch[k], cl[k], fh, fl)
        th, tl = cadd(th, tl, uh, ul)
    return vh, vl, th, tl
