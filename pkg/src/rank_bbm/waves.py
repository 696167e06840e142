"""Travelling-wave existence and profiles for the moving-frame ODE.

A front U(x, t) = w(x - ct) solves (1/2) w'' + c w' + G(w) = 0.  The
source state (1, or the interior plateau u*) is a saddle whose unstable
manifold is one-dimensional, so a single trajectory started along the
unstable eigendirection either connects to 0 or demonstrably fails;
no shooting parameter needs tuning.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import InvalidReaction, NoConnection

DECAY_LEVEL = 1e-4   # reaching this counts as connecting to 0
EXIT_BAND = 0.05     # leaving [-band, 1 + band] is a failed connection
TANGENCY_TOL = 1e-7  # |G'| below this at a zero marks multiplicity >= 2


@dataclass
class WaveClassification:
    kind: str  # monostable-to-1 | monostable-to-u-star | bistable-no-wave | degenerate
    minimal_speed: object
    u_star: object
    g_prime_0: float
    g_prime_1: float


@dataclass
class WaveProfile:
    c: float
    z: np.ndarray
    w: np.ndarray
    residual: float


def _has_tangent_zero(g):
    """True when G touches zero at an interior critical point.

    Double roots split into conjugate pairs under the root finder, so
    testing G at the (simple, reliably found) roots of G' is the robust
    way to see them.
    """
    for lo, hi, coeffs in g.pieces:
        dcoeffs = np.polyder(np.array(coeffs)[::-1])
        if dcoeffs.size == 0 or not np.any(dcoeffs):
            if abs(coeffs[0]) <= 1e-9 and not g.is_zero:
                return True  # a flat piece lying on zero
            continue
        for root in np.roots(dcoeffs):
            if abs(root.imag) > 1e-9:
                continue
            u = float(root.real)
            if lo + 1e-12 < u < hi - 1e-12 and 1e-9 < u < 1.0 - 1e-9 and abs(g(u)) <= 1e-9:
                return True
    return False


def classify(g):
    """Sort a reaction into the wave-existence cases by its zero structure.

    Simple interior zeros with positive slope at 0 admit spreading: none
    at all gives the full 1-to-0 front, a single stable one gives a front
    into the plateau u*.  Positive slope at both ends with several
    interior zeros admits no monotone wave at all.  Everything
    else (tangent zeros, nonpositive slope at 0, shapes outside the
    analyzed families) is reported degenerate rather than classified.
    """
    if abs(g(0.0)) > 1e-9 or abs(g(1.0)) > 1e-9:
        raise InvalidReaction("reaction must vanish at 0 and 1")
    d0 = float(g.derivative(0.0))
    d1 = float(g.derivative(1.0))
    kpp_speed = math.sqrt(2.0 * d0) if d0 > 0.0 else (0.0 if d0 == 0.0 else None)
    if g.is_zero:
        return WaveClassification("degenerate", 0.0, None, d0, d1)
    zeros = [float(z) for z in g.interior_zeros()]
    stable = [z for z in zeros if g.derivative(z) < 0.0]
    u_star = min(stable) if stable else None
    if any(abs(g.derivative(z)) <= TANGENCY_TOL for z in zeros) or _has_tangent_zero(g):
        return WaveClassification("degenerate", kpp_speed, u_star, d0, d1)
    if d0 <= 0.0:
        return WaveClassification("degenerate", kpp_speed, u_star, d0, d1)
    if not zeros:
        return WaveClassification("monostable-to-1", kpp_speed, None, d0, d1)
    if len(zeros) == 1 and zeros[0] == u_star:
        return WaveClassification("monostable-to-u-star", kpp_speed, u_star, d0, d1)
    if d1 > 0.0:
        return WaveClassification("bistable-no-wave", None, u_star, d0, d1)
    return WaveClassification("degenerate", kpp_speed, u_star, d0, d1)


def shoot_profile(g, c, z_span=60.0, eps=1e-6, grid_step=2e-3, rtol=1e-12):
    """Integrate the unstable manifold of the source state down to 0.

    The start point sits eps along the unstable eigendirection of the
    saddle; success means decaying below 1e-4 inside z_span while staying
    monotone.  The residual reported is an independent finite-difference
    reconstruction of the ODE on the uniform output grid.
    """
    cls = classify(g)
    if cls.kind == "monostable-to-1":
        w_top = 1.0
    elif cls.kind == "monostable-to-u-star":
        w_top = cls.u_star
    else:
        raise NoConnection(f"{cls.kind} reaction admits no front to shoot")
    d_top = float(g.derivative(w_top))
    if d_top >= -1e-12:
        raise NoConnection(f"state {w_top} has no unstable direction")
    lam = -c + math.sqrt(c * c - 2.0 * d_top)

    def rhs(z, y):
        return (y[1], -2.0 * (c * y[1] + g(y[0])))

    def hit_floor(z, y):
        return y[0] - DECAY_LEVEL

    def exit_low(z, y):
        return y[0] + EXIT_BAND

    def exit_high(z, y):
        return y[0] - (1.0 + EXIT_BAND)

    hit_floor.terminal, hit_floor.direction = True, -1.0
    exit_low.terminal, exit_low.direction = True, -1.0
    exit_high.terminal, exit_high.direction = True, 1.0

    sol = solve_ivp(
        rhs,
        (0.0, z_span),
        (w_top - eps, -lam * eps),
        method="DOP853",
        rtol=rtol,
        atol=1e-14,
        dense_output=True,
        events=(hit_floor, exit_low, exit_high),
    )
    if sol.t_events[1].size or sol.t_events[2].size:
        raise NoConnection(f"trajectory left [{-EXIT_BAND}, {1 + EXIT_BAND}] at speed {c}")
    if not sol.t_events[0].size:
        raise NoConnection(f"no decay below {DECAY_LEVEL} within span {z_span}")
    # a true connection lands on (0, 0): w' there is O(DECAY_LEVEL).  A
    # sub-minimal-speed spiral crosses the floor at finite speed instead.
    q_end = float(sol.y_events[0][0][1])
    if abs(q_end) > 100.0 * DECAY_LEVEL * max(1.0, c):
        raise NoConnection(f"crossed {DECAY_LEVEL} at slope {q_end}: not a connection")
    z_end = float(sol.t_events[0][0])
    npts = max(int(math.ceil(z_end / grid_step)), 8)
    z = np.linspace(0.0, z_end, npts + 1)
    w = sol.sol(z)[0]
    if np.any(np.diff(w) > 1e-6):
        raise NoConnection(f"profile at speed {c} is not monotone")
    h = z[1] - z[0]
    interior = (
        0.5 * (w[2:] - 2.0 * w[1:-1] + w[:-2]) / (h * h)
        + c * (w[2:] - w[:-2]) / (2.0 * h)
        + g(w[1:-1])
    )
    return WaveProfile(c=float(c), z=z, w=w, residual=float(np.max(np.abs(interior))))
