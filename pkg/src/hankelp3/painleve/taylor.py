"""High-order Taylor marching for the v-equation.

At a regular point s_c with state (v, v'), the Taylor coefficients of
v(s_c + h) follow from incremental convolution recurrences on the
equation in the form

    v'' v = v'^2 - v' v/s + v^2 (v/s^2 + alpha/s ... )   (cleared of 1/v)

organized as R_k = (B E - A G + C G2 + alpha G - E)_k with
A = v' series, B = A*A, C = v*v, E = 1/v series, G = 1/s series,
G2 = 1/s^2 series; then V[k+2] = R_k / ((k+1)(k+2)).

The order is chosen from the local relative tolerance (about 0.55
digits of tolerance per order), the step from the decay of the top
three coefficients, times 0.8, capped at 0.5 s (2 s^{1/3} past
s = 100, where the solution scale is s^{2/3} and steps must not
outrun it).  A step radius collapsing below s/1000 signals a movable
singularity: Blowup.  The variational series w = dv/dbeta satisfies
the linearized equation and is co-integrated when the caller is
running Newton on the branch parameter; r accumulates exactly by
series integration of v/s.
"""

from mpmath import mp, mpf

from ..errors import PrecisionExhaustedError, NonConvergenceError

__all__ = ["Blowup", "Vanish", "march", "v_series", "w_series", "rseries",
           "poly_eval", "poly_eval_d"]


class Blowup(Exception):
    """Movable pole (or step collapse toward one); arg = last good s."""


class Vanish(Exception):
    """v dropped to the 1/v danger floor; arg = last good s."""


def v_series(alpha, s_c, v0, v1, p):
    zero = mpf(0)
    V = [v0, v1] + [zero] * (p - 1)
    A = [zero] * (p + 1)
    E = [zero] * (p + 1)
    B = [zero] * (p + 1)
    C = [zero] * (p + 1)
    inv = 1 / s_c
    G = [zero] * (p + 1)
    G2 = [zero] * (p + 1)
    g = inv
    for k in range(p + 1):
        G[k] = g
        G2[k] = (k + 1) * g * inv
        g = -g * inv
    E[0] = 1 / v0
    for k in range(0, p - 1):
        A[k] = (k + 1) * V[k + 1]
        if k > 0:
            s_ = zero
            for i_ in range(1, k + 1):
                s_ += V[i_] * E[k - i_]
            E[k] = -E[0] * s_
        c_ = zero
        for i_ in range(k + 1):
            c_ += V[i_] * V[k - i_]
        C[k] = c_
        b_ = zero
        for i_ in range(k + 1):
            b_ += A[i_] * A[k - i_]
        B[k] = b_
        be = zero
        ag = zero
        cg = zero
        for i_ in range(k + 1):
            be += B[i_] * E[k - i_]
            ag += A[i_] * G[k - i_]
            cg += C[i_] * G2[k - i_]
        Rk = be - ag + cg + alpha * G[k] - E[k]
        V[k + 2] = Rk / ((k + 1) * (k + 2))
    return V, A, E, B, G, G2


def w_series(alpha, V, E, B, G, G2, w0, w1, p):
    zero = mpf(0)
    A = [(k + 1) * V[k + 1] if k + 1 <= p else zero for k in range(p + 1)]
    E2 = [zero] * (p + 1)
    P = [zero] * (p + 1)
    Q = [zero] * (p + 1)
    for k in range(p + 1):
        e2 = zero
        for i_ in range(k + 1):
            e2 += E[i_] * E[k - i_]
        E2[k] = e2
    for k in range(p + 1):
        be2 = zero
        vg = zero
        ae = zero
        for i_ in range(k + 1):
            be2 += B[i_] * E2[k - i_]
            vg += V[i_] * G2[k - i_]
            ae += A[i_] * E[k - i_]
        P[k] = E2[k] - be2 + 2 * vg
        Q[k] = 2 * ae - G[k]
    W = [w0, w1] + [zero] * (p - 1)
    for k in range(0, p - 1):
        pw = zero
        qw = zero
        for i_ in range(k + 1):
            pw += P[i_] * W[k - i_]
            qw += Q[i_] * ((k - i_ + 1) * W[k - i_ + 1])
        W[k + 2] = (pw + qw) / ((k + 1) * (k + 2))
    return W


def rseries(V, s_c, p):
    """Series of int v/s dh about s_c (constant term 0)."""
    zero = mpf(0)
    inv = 1 / s_c
    G = [zero] * (p + 1)
    g = inv
    for k in range(p + 1):
        G[k] = g
        g = -g * inv
    R = [zero] * (p + 2)
    for k in range(p + 1):
        acc = zero
        for i_ in range(k + 1):
            acc += V[i_] * G[k - i_]
        R[k + 1] = acc / (k + 1)
    return R


def poly_eval(V, h):
    acc = mpf(0)
    for c in reversed(V):
        acc = acc * h + c
    return acc


def poly_eval_d(V, h):
    acc = mpf(0)
    for k in range(len(V) - 1, 0, -1):
        acc = acc * h + k * V[k]
    return acc


def march(alpha, state, s_end, tolfn, want_w=False, nodes=None, maxsteps=500000):
    """Advance state = (s, v, vp, w, wp, r) to s_end.

    tolfn(s) is the local absolute error target for v.  Appends
    (s, v, vp, r) to nodes after each accepted step when given.
    """
    s, v, vp, w, wp, r = state
    nstep = 0
    pmax_seen = 0
    rel_floor = mpf(10) ** (-(mp.dps - 8))
    while s < s_end:
        vfloor = mpf("1e-3") * (s if s < 1 else s ** (mpf(2) / 3))
        if v < vfloor:
            raise Vanish(s)
        if abs(v) > mpf("1e30"):
            raise Blowup(s)
        tol = tolfn(s)
        rel = tol / max(abs(v), mpf("1e-300"))
        if rel < rel_floor:
            raise PrecisionExhaustedError("tolerance below working precision")
        Lr = -mp.log(rel) if rel < 1 else mpf(1)
        p = max(12, int(0.55 * float(Lr)) + 4)
        p = min(p, 180)
        pmax_seen = max(pmax_seen, p)
        V, A, E, B, G, G2 = v_series(alpha, s, v, vp, p)
        cap = 2 * s ** (mpf(1) / 3) if s > 100 else s * mpf("0.5")
        h = cap
        for k in (p, p - 1, p - 2):
            c = abs(V[k])
            if c > 0:
                hk = (tol / c) ** (mpf(1) / k)
                if hk < h:
                    h = hk
        h *= mpf("0.8")
        if h < s * mpf("1e-3"):
            raise Blowup(s)
        if s + h > s_end:
            h = s_end - s
        RS = rseries(V, s, p)
        if want_w:
            W = w_series(alpha, V, E, B, G, G2, w, wp, p)
            w = poly_eval(W, h)
            wp = poly_eval_d(W, h)
        vmid = poly_eval(V, h / 2)
        if vmid <= 0:
            raise Vanish(s + h / 2)
        r = r + poly_eval(RS, h)
        v_new = poly_eval(V, h)
        vp_new = poly_eval_d(V, h)
        s = s + h
        v, vp = v_new, vp_new
        if nodes is not None:
            nodes.append((s, v, vp, r))
        nstep += 1
        if nstep > maxsteps:
            raise NonConvergenceError("march: step limit exceeded")
    return dict(s=s, v=v, vp=vp, w=w, wp=wp, r=r, nstep=nstep, pmax=pmax_seen)
