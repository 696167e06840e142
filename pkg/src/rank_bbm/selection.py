"""Selection densities psi, reaction terms G, and branching rates.

A selection density is a probability density on [0, 1], stored as a list
of polynomial pieces so that integrals, derivatives and the change of
variable x -> 1 - x are all exact polynomial operations rather than
quadrature.  The reaction term of the hydrodynamic equation is tied to
the density by

    G(u) = u - int_{1-u}^{1} psi(s) ds,        psi(x) = 1 - G'(1 - x),

and both directions of that correspondence are implemented here.  A
density is admissible when it is nonnegative and integrates to one; a
reaction term is realizable when G(0) = G(1) = 0 and G' <= 1 on [0, 1].
"""

from __future__ import annotations

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import (
    InvalidReaction,
    InvalidSelection,
    UnknownPreset,
    ValidationError,
)

# construction-time tolerances: normalization and continuity are held to
# 1e-12, pointwise positivity only to 1e-9 because composed coefficients
# carry a little more roundoff than raw ones
NORM_TOL = 1e-12
POS_TOL = 1e-9


def _poly_extrema(coeffs, lo, hi):
    """Values of the polynomial at lo, hi and every interior critical point."""
    cand = [lo, hi]
    der = P.polyder(np.asarray(coeffs, dtype=float))
    if der.size and np.any(der != 0.0):
        for root in np.roots(der[::-1]):
            if abs(root.imag) < 1e-9 and lo < root.real < hi:
                cand.append(float(root.real))
    return np.array([float(P.polyval(c, coeffs)) for c in cand])


def _compose_affine(coeffs, a, b):
    """Coefficients of p(a + b*x) given ascending coefficients of p."""
    coeffs = np.asarray(coeffs, dtype=float)
    out = np.array([coeffs[-1]])
    for c in coeffs[-2::-1]:
        out = P.polymul(out, [a, b])
        out = P.polyadd(out, [c])
    return out


class _PiecewisePoly:
    """Shared mechanics for piecewise polynomials on an interval."""

    def __init__(self, pieces, domain, err=ValidationError, tol=NORM_TOL):
        cleaned = []
        for entry in pieces:
            try:
                lo, hi, coeffs = entry
                coeffs = tuple(float(c) for c in coeffs)
            except (TypeError, ValueError) as exc:
                raise err(f"bad piece {entry!r}") from exc
            if not coeffs:
                raise err(f"piece on [{lo}, {hi}] has no coefficients")
            cleaned.append((float(lo), float(hi), coeffs))
        cleaned.sort(key=lambda p: p[0])
        a, b = domain
        if not cleaned:
            raise err("no pieces given")
        if abs(cleaned[0][0] - a) > tol or abs(cleaned[-1][1] - b) > tol:
            raise err(f"pieces must cover [{a}, {b}]")
        for (_, hi0, _), (lo1, _, _) in zip(cleaned, cleaned[1:]):
            if abs(hi0 - lo1) > tol:
                raise err(f"gap or overlap between pieces at {hi0} vs {lo1}")
        for lo, hi, _ in cleaned:
            if not hi > lo:
                raise err(f"empty piece [{lo}, {hi}]")
        self.pieces = tuple(cleaned)
        # interior breakpoints drive the piece lookup; the domain ends are
        # handled by clipping so evaluation at exactly a or b is safe
        self._breaks = np.array([p[0] for p in cleaned[1:]])
        self._coeff_list = [np.array(p[2]) for p in cleaned]

    def _piece_index(self, x):
        return np.searchsorted(self._breaks, x, side="right")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        xf = np.atleast_1d(x)
        idx = self._piece_index(xf)
        out = np.empty_like(xf)
        for k, coeffs in enumerate(self._coeff_list):
            mask = idx == k
            if np.any(mask):
                out[mask] = P.polyval(xf[mask], coeffs)
        return float(out[0]) if scalar else out

    def antiderivative_constants(self):
        """Running integral from the left end up to each piece start."""
        consts = [0.0]
        for lo, hi, coeffs in self.pieces:
            a = P.polyint(np.array(coeffs))
            consts.append(consts[-1] + float(P.polyval(hi, a) - P.polyval(lo, a)))
        return consts

    def integral_to(self, x):
        """Exact integral from the left domain end to x (vectorized)."""
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        xf = np.atleast_1d(x)
        idx = self._piece_index(xf)
        consts = self.antiderivative_constants()
        out = np.empty_like(xf)
        for k, (lo, hi, coeffs) in enumerate(self.pieces):
            mask = idx == k
            if np.any(mask):
                a = P.polyint(np.array(coeffs))
                out[mask] = consts[k] + P.polyval(xf[mask], a) - float(P.polyval(lo, a))
        return float(out[0]) if scalar else out

    def extrema(self, lo=None, hi=None):
        """All candidate extreme values on [lo, hi] (default: full domain)."""
        vals = []
        for plo, phi, coeffs in self.pieces:
            a = plo if lo is None else max(plo, lo)
            b = phi if hi is None else min(phi, hi)
            if b > a:
                vals.append(_poly_extrema(coeffs, a, b))
        return np.concatenate(vals) if vals else np.array([])


class SelectionPsi(_PiecewisePoly):
    """Piecewise-polynomial selection density on [0, 1].

    Each piece is a tuple (lo, hi, coeffs) with coefficients in ascending
    order.  Construction validates that the pieces tile [0, 1], that the
    density is nonnegative, and that it integrates to one.
    """

    def __init__(self, pieces):
        super().__init__(pieces, (0.0, 1.0), err=InvalidSelection)
        total = self.antiderivative_constants()[-1]
        if abs(total - 1.0) > NORM_TOL:
            raise InvalidSelection(f"density integrates to {total!r}, not 1")
        low = self.extrema().min()
        if low < -POS_TOL:
            raise InvalidSelection(f"density dips to {low!r}")

    def cdf(self, x):
        """Psi(x) = int_0^x psi, exact per piece."""
        return self.integral_to(x)

    def max_on(self, lo, hi):
        ext = self.extrema(lo, hi)
        return float(ext.max()) if ext.size else 0.0

    def to_text(self):
        """One line per piece: 'piece lo hi c0 c1 ...' with exact reprs."""
        lines = []
        for lo, hi, coeffs in self.pieces:
            parts = ["piece", repr(lo), repr(hi)] + [repr(c) for c in coeffs]
            lines.append(" ".join(parts))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        pieces = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            if tokens[0] != "piece" or len(tokens) < 4:
                raise InvalidSelection(f"unparseable line {line!r}")
            try:
                nums = [float(tok) for tok in tokens[1:]]
            except ValueError as exc:
                raise InvalidSelection(f"bad number in {line!r}") from exc
            pieces.append((nums[0], nums[1], nums[2:]))
        return cls(pieces)

    def __repr__(self):
        return f"SelectionPsi({len(self.pieces)} pieces)"


class LeftmostKill:
    """Marker for the selection rule that always removes the minimum."""

    def __repr__(self):
        return "LeftmostKill()"


LEFTMOST_KILL = LeftmostKill()


class ReactionG(_PiecewisePoly):
    """Piecewise-polynomial reaction term on [0, 1].

    Carries the one-sided derivatives d0 = G'(0) and d1 = G'(1) and the
    roots of G in [0, 1], which together drive the wave classification.
    """

    def __init__(self, pieces):
        super().__init__(pieces, (0.0, 1.0), err=InvalidReaction)
        self._der_list = [P.polyder(c) for c in self._coeff_list]
        self.d0 = float(P.polyval(0.0, self._der_list[0]))
        self.d1 = float(P.polyval(1.0, self._der_list[-1]))
        self.zeros = self._find_zeros()

    @classmethod
    def from_coeffs(cls, coeffs):
        """Single polynomial piece covering all of [0, 1]."""
        return cls([(0.0, 1.0, list(coeffs))])

    @property
    def is_zero(self):
        return all(np.max(np.abs(c)) < 1e-14 for c in self._coeff_list)

    def derivative(self, u):
        u = np.asarray(u, dtype=float)
        scalar = u.ndim == 0
        uf = np.atleast_1d(u)
        idx = self._piece_index(uf)
        out = np.empty_like(uf)
        for k, dc in enumerate(self._der_list):
            mask = idx == k
            if np.any(mask):
                out[mask] = P.polyval(uf[mask], dc)
        return float(out[0]) if scalar else out

    def lipschitz(self):
        """max |G'| over [0, 1], via the critical points of G'."""
        vals = []
        for (lo, hi, _), dc in zip(self.pieces, self._der_list):
            vals.append(np.abs(_poly_extrema(dc, lo, hi)))
        return float(np.concatenate(vals).max())

    def max_derivative(self):
        vals = []
        for (lo, hi, _), dc in zip(self.pieces, self._der_list):
            vals.append(_poly_extrema(dc, lo, hi))
        return float(np.concatenate(vals).max())

    def _find_zeros(self):
        if self.is_zero:
            return np.array([0.0, 1.0])
        found = []
        for lo, hi, coeffs in self.pieces:
            arr = np.array(coeffs)
            if np.max(np.abs(arr)) < 1e-14:
                # identically-zero piece: record its ends as roots
                found.extend([lo, hi])
                continue
            for root in np.roots(arr[::-1]):
                if abs(root.imag) < 1e-9 and lo - 1e-12 <= root.real <= hi + 1e-12:
                    found.append(float(np.clip(root.real, lo, hi)))
        found.sort()
        merged = []
        for z in found:
            z = float(np.clip(z, 0.0, 1.0))
            if not merged or z - merged[-1] > 1e-8:
                merged.append(z)
        return np.array(merged)

    def interior_zeros(self, edge=1e-9):
        return self.zeros[(self.zeros > edge) & (self.zeros < 1.0 - edge)]

    def __repr__(self):
        return f"ReactionG(d0={self.d0:.6g}, d1={self.d1:.6g})"


def g_from_psi(psi):
    """Reaction term G(u) = u - int_{1-u}^1 psi of a selection density.

    The integral is evaluated exactly: on the piece of psi covering
    1 - u, G(u) = u - 1 + Psi(1 - u), and Psi composed with the affine
    map u -> 1 - u is again a polynomial.
    """
    consts = psi.antiderivative_constants()
    pieces = []
    for k, (lo, hi, coeffs) in enumerate(psi.pieces):
        a = P.polyint(np.array(coeffs))
        # Psi(x) = consts[k] + A(x) - A(lo) on this piece
        shift = consts[k] - float(P.polyval(lo, a))
        psi_cum = P.polyadd(a, [shift])
        g_piece = _compose_affine(psi_cum, 1.0, -1.0)  # Psi(1 - u)
        g_piece = P.polyadd(g_piece, [-1.0, 1.0])      # + u - 1
        pieces.append((1.0 - hi, 1.0 - lo, list(g_piece)))
    pieces.reverse()
    return ReactionG(pieces)


def psi_from_g(g):
    """Selection density psi(x) = 1 - G'(1 - x) realizing a reaction term.

    Raises InvalidReaction when G does not vanish at 0 and 1 or when
    G' exceeds 1 anywhere on [0, 1], since either would break the
    density interpretation.
    """
    g0, g1 = g(0.0), g(1.0)
    if abs(g0) > NORM_TOL or abs(g1) > NORM_TOL:
        raise InvalidReaction(f"G must vanish at both ends, got {g0!r}, {g1!r}")
    if g.max_derivative() > 1.0 + POS_TOL:
        raise InvalidReaction(
            f"max G' = {g.max_derivative()!r} > 1 would force the density negative"
        )
    pieces = []
    for lo, hi, coeffs in g.pieces:
        der = P.polyder(np.array(coeffs))
        piece = P.polysub([1.0], _compose_affine(der, 1.0, -1.0))
        pieces.append((1.0 - hi, 1.0 - lo, list(piece)))
    pieces.reverse()
    return SelectionPsi(pieces)


def rank_kill_probs(psi, n):
    """Probability that the removal hits rank k out of n, for k = 1..n.

    Parameters
    ----------
    psi : SelectionPsi or LeftmostKill
        Selection rule.  LeftmostKill puts all mass on rank 1.
    n : int
        Population size, at least 2.

    Returns
    -------
    ndarray of shape (n,), summing to 1 within 1e-12.
    """
    if n < 2:
        raise ValidationError(f"need n >= 2, got {n}")
    if isinstance(psi, LeftmostKill):
        out = np.zeros(n)
        out[0] = 1.0
        return out
    edges = psi.cdf(np.arange(n + 1) / n)
    return np.diff(edges)


def alpha_fixed_point(psi, tol=1e-10):
    """Smallest stable interior zero of G_psi, or None when there is none.

    Solves alpha = 1 - Psi(1 - alpha), equivalently G(alpha) = 0, by
    bisection to the requested tolerance.  Only down-crossings of G count;
    a reaction with no sign change (fisher, uniform) returns None.
    """
    g = g_from_psi(psi)
    if g.is_zero:
        return None
    stable = [z for z in g.interior_zeros() if g.derivative(z) < -1e-9]
    if not stable:
        return None
    z = min(stable)
    # polish by bisection on a bracket with a strict sign change
    h = 1e-3
    a, b = max(z - h, 0.0), min(z + h, 1.0)
    while not (g(a) > 0.0 > g(b)):
        h *= 0.5
        a, b = max(z - h, 0.0), min(z + h, 1.0)
        if h < 1e-13:
            return float(z)
    while b - a > tol:
        mid = 0.5 * (a + b)
        if g(mid) > 0.0:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


class BranchingRate:
    """Time-dependent branching rate r(t) with exact bounds and integrals.

    Three families are supported: constant, sinusoidal
    base + amplitude*sin(omega*t + phase), and piecewise polynomial in t.
    r_max is the exact supremum used as the thinning bound.
    """

    def __init__(self, kind, call, integral, r_max, label):
        self.kind = kind
        self._call = call
        self._integral = integral
        self.r_max = float(r_max)
        self.label = label

    @classmethod
    def constant(cls, value):
        value = float(value)
        if value < 0.0:
            raise ValidationError(f"negative rate {value}")
        return cls(
            "constant",
            lambda t: np.broadcast_to(np.float64(value), np.shape(t)).copy()
            if np.ndim(t)
            else value,
            lambda t0, t1: value * (t1 - t0),
            value,
            f"constant({value!r})",
        )

    @classmethod
    def sinusoidal(cls, base, amplitude, omega=1.0, phase=0.0):
        base, amplitude = float(base), float(amplitude)
        omega, phase = float(omega), float(phase)
        if base - abs(amplitude) < -NORM_TOL:
            raise ValidationError("sinusoidal rate dips below zero")

        def call(t):
            t = np.asarray(t, dtype=float)
            out = base + amplitude * np.sin(omega * t + phase)
            return float(out) if out.ndim == 0 else out

        def integral(t0, t1):
            if omega == 0.0:
                return (base + amplitude * np.sin(phase)) * (t1 - t0)
            osc = np.cos(omega * t0 + phase) - np.cos(omega * t1 + phase)
            return base * (t1 - t0) + amplitude / omega * osc

        label = f"sinusoidal({base!r}, {amplitude!r}, {omega!r}, {phase!r})"
        return cls("sinusoidal", call, integral, base + abs(amplitude), label)

    @classmethod
    def piecewise(cls, pieces):
        poly = _PiecewisePoly(pieces, (pieces[0][0], max(p[1] for p in pieces)))
        lo_end = poly.pieces[0][0]
        if abs(lo_end) > NORM_TOL:
            raise ValidationError("piecewise rate must start at t = 0")
        ext = poly.extrema()
        if ext.min() < -POS_TOL:
            raise ValidationError(f"rate dips to {ext.min()!r}")
        hi_end = poly.pieces[-1][1]

        def call(t):
            t = np.asarray(t, dtype=float)
            if np.any(t > hi_end + 1e-9) or np.any(t < -1e-9):
                raise ValidationError(f"rate queried outside [0, {hi_end}]")
            out = poly(np.clip(t, 0.0, hi_end))
            return float(out) if t.ndim == 0 else out

        def integral(t0, t1):
            return float(poly.integral_to(t1) - poly.integral_to(t0))

        rate = cls("piecewise", call, integral, ext.max(), f"piecewise({pieces!r})")
        rate.horizon = hi_end
        return rate

    def __call__(self, t):
        return self._call(t)

    def integral(self, t0, t1):
        """Exact int_{t0}^{t1} r(s) ds."""
        return float(self._integral(t0, t1))

    def validate_on(self, horizon):
        """Check the rate is defined and nonnegative out to the horizon."""
        end = getattr(self, "horizon", None)
        if end is not None and horizon > end + 1e-9:
            raise ValidationError(
                f"rate defined up to t = {end}, run needs t = {horizon}"
            )

    def __repr__(self):
        return f"BranchingRate.{self.label}"


# ------------------------------------------------------------------ presets

def _fisher():
    return SelectionPsi([(0.0, 1.0, [2.0, -2.0])])


def _allen_cahn(theta=0.3):
    theta = float(theta)
    if not 0.0 < theta < 1.0:
        raise ValidationError(f"theta must lie in (0, 1), got {theta}")
    return SelectionPsi([(0.0, 1.0, [2.0 - theta, -(4.0 - 2.0 * theta), 3.0])])


def _cubic(a=0.5):
    a = float(a)
    return SelectionPsi([(0.0, 1.0, [2.0 + a, -(2.0 + 4.0 * a), 3.0 * a])])


def _split_cloud():
    # 48 * (x - 0.8)(0.3 - x) on [0.3, 0.8]; 48 = 6 / (0.5)^3 normalizes the hump
    mid = [48.0 * -0.24, 48.0 * 1.1, -48.0]
    return SelectionPsi([(0.0, 0.3, [0.0]), (0.3, 0.8, mid), (0.8, 1.0, [0.0])])


def _uniform():
    return SelectionPsi([(0.0, 1.0, [1.0])])


PRESETS = {
    "fisher": _fisher,
    "allen-cahn": _allen_cahn,
    "cubic": _cubic,
    "split-cloud": _split_cloud,
    "uniform": _uniform,
}


def preset(name, **params):
    """Look up a selection density by name.

    Known names: fisher, allen-cahn (theta), cubic (a), split-cloud,
    uniform.  Extra keyword arguments are passed to the preset builder.
    """
    try:
        builder = PRESETS[name]
    except KeyError:
        known = ", ".join(sorted(PRESETS))
        raise UnknownPreset(f"no preset {name!r} (known: {known})") from None
    return builder(**params)
