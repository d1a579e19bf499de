"""Exact algebra of decreasing piecewise-linear functions on [0, inf).

The class: continuous, non-increasing, piecewise linear, identically zero
from the last breakpoint on. Stored canonically as breakpoints
(0 = x_0 < x_1 < ... < x_m, v_0 >= ... >= v_m = 0) with no three collinear,
so equality of functions is equality of fields.

Two transforms drive the shortfall recursion. With psi_1, psi_2 the next
period's cost in the up and down states, market up-probability p and returns
b (up), a (down):

  portfolio transform
      psi(y) = min over alpha in K(y) = [-y/b, -y/a] of
               p * psi_1(y + b*alpha) + (1-p) * psi_2(y + a*alpha),
      the best cost after investing alpha units of money in stock.

  infusion transform
      psi_A(y) = min over z >= (A - y)^+ of z + psi(y + z - A),
      the best cost when an obligation A is due and z may be injected.

Both keep the function inside the class. Each also yields the optimal
control, selecting the SMALLEST minimizer when several controls achieve the
minimum, so downstream policy extraction is deterministic.

The portfolio minimization is computed in post-move wealth coordinates:
writing w1 = y + b*alpha, w2 = y + a*alpha, the constraint set becomes
{w1, w2 >= 0, ptilde*w1 + (1-ptilde)*w2 = y} with ptilde = a/(a-b), and for
fixed y the objective is piecewise linear in w1 with kinks exactly where w1
hits a psi_1 breakpoint or w2 hits a psi_2 breakpoint. The minimum is
attained at one of those finitely many candidates, the smallest alpha at the
smallest such w1. On every y-interval between consecutive "event" points
ptilde*P_i + (1-ptilde)*Q_j all candidate values are affine in y, so the
exact lower envelope is assembled interval by interval.
"""

from __future__ import annotations

from bisect import bisect_right
from fractions import Fraction

from .errors import ContractError, InvariantError
from .market import format_rational, martingale_prob, to_rational


def _canonical(points):
    """Sort out duplicates, enforce class shape, merge collinear runs."""
    pts = sorted((Fraction(x), Fraction(v)) for x, v in points)
    cleaned = []
    for x, v in pts:
        if cleaned and cleaned[-1][0] == x:
            if cleaned[-1][1] != v:
                raise InvariantError(f"two values at breakpoint {x}: {cleaned[-1][1]}, {v}")
            continue
        cleaned.append((x, v))
    if not cleaned:
        raise InvariantError("a function needs at least one breakpoint")
    if cleaned[0][0] != 0:
        raise InvariantError(f"first breakpoint must sit at 0, got {cleaned[0][0]}")
    # cut everything after the function first reaches 0 for good
    for idx, (x, v) in enumerate(cleaned):
        if v == 0:
            cleaned = cleaned[: idx + 1]
            break
    if cleaned[-1][1] != 0:
        raise InvariantError(f"function must vanish, ends at value {cleaned[-1][1]}")
    out = []
    for x, v in cleaned:
        while len(out) >= 2:
            (x0, v0), (x1, v1) = out[-2], out[-1]
            if (v1 - v0) * (x - x1) == (v - v1) * (x1 - x0):
                out.pop()
            else:
                break
        out.append((x, v))
    last_v = None
    for x, v in out:
        if v < 0:
            raise InvariantError(f"negative value {v} at breakpoint {x}")
        if last_v is not None and v > last_v:
            raise InvariantError(f"value rises to {v} at breakpoint {x}")
        last_v = v
    return tuple(out)


class PwlFn:
    """Canonical decreasing piecewise-linear function vanishing at infinity."""

    __slots__ = ("points", "_xs")

    def __init__(self, points):
        self.points = _canonical(points)
        self._xs = [x for x, _ in self.points]

    @classmethod
    def zero(cls) -> "PwlFn":
        return cls(((0, 0),))

    @classmethod
    def hockey_stick(cls, c) -> "PwlFn":
        """(c - y)^+ as a class member; the zero function when c <= 0."""
        c = to_rational(c)
        if c <= 0:
            return cls.zero()
        return cls(((0, c), (c, 0)))

    @property
    def support_end(self) -> Fraction:
        return self.points[-1][0]

    def is_zero(self) -> bool:
        return len(self.points) == 1

    def eval(self, y) -> Fraction:
        y = Fraction(y)
        if y < 0:
            raise ValueError(f"function is defined on [0, inf), got {y}")
        if y >= self.support_end:
            return Fraction(0)
        i = bisect_right(self._xs, y) - 1
        (x0, v0), (x1, v1) = self.points[i], self.points[i + 1]
        return v0 + (v1 - v0) * (y - x0) / (x1 - x0)

    def __eq__(self, other):
        return isinstance(other, PwlFn) and self.points == other.points

    def __hash__(self):
        return hash(self.points)

    def __repr__(self):
        inner = ", ".join(f"({format_rational(x)}, {format_rational(v)})" for x, v in self.points)
        return f"PwlFn[{inner}]"

    def to_wire(self):
        return [[format_rational(x), format_rational(v)] for x, v in self.points]

    @classmethod
    def from_wire(cls, data) -> "PwlFn":
        try:
            pts = [(to_rational(x), to_rational(v)) for x, v in data]
        except (TypeError, ValueError) as exc:
            raise ContractError(f"bad breakpoint list: {exc}") from exc
        try:
            return cls(pts)
        except InvariantError as exc:
            raise ContractError(f"breakpoints do not describe a valid curve: {exc}") from exc


def _combine(f: PwlFn, g: PwlFn, pick) -> PwlFn:
    xs = sorted(set(f._xs) | set(g._xs))
    pts = []
    prev = None
    for x in xs:
        fv, gv = f.eval(x), g.eval(x)
        if prev is not None:
            px, pfv, pgv = prev
            # insert the crossing if the order flips strictly inside
            d0, d1 = pfv - pgv, fv - gv
            if (d0 > 0 > d1) or (d0 < 0 < d1):
                t = d0 / (d0 - d1)
                xc = px + t * (x - px)
                pts.append((xc, f.eval(xc)))
        pts.append((x, pick(fv, gv)))
        prev = (x, fv, gv)
    return PwlFn(pts)


def pointwise_min(f: PwlFn, g: PwlFn) -> PwlFn:
    return _combine(f, g, min)


def pointwise_max(f: PwlFn, g: PwlFn) -> PwlFn:
    return _combine(f, g, max)


class PwlControl:
    """The optimal control of a transform, as a function of wealth.

    pieces: (y_lo, y_hi, coef, intercept) with control coef*y + intercept on
    the OPEN interval (y_lo, y_hi); y_hi None means unbounded. At the piece
    boundaries the control can differ from both neighbouring formulas (a
    candidate can touch the lower envelope at a single kink with a smaller
    control), so boundary controls are stored explicitly, and eval() falls
    back to the exact argmin recomputation, which is authoritative
    everywhere.
    """

    __slots__ = ("pieces", "boundary", "_argmin")

    def __init__(self, pieces, boundary, argmin):
        self.pieces = pieces
        self.boundary = dict(boundary)
        self._argmin = argmin

    def eval(self, y) -> Fraction:
        y = Fraction(y)
        if y < 0:
            raise ValueError(f"control is defined on [0, inf), got {y}")
        return self._argmin(y)

    def piece_eval(self, y) -> Fraction:
        """Read the stored representation only (used to cross-check eval)."""
        y = Fraction(y)
        if y in self.boundary:
            return self.boundary[y]
        for lo, hi, coef, inter in self.pieces:
            if lo < y and (hi is None or y < hi):
                return coef * y + inter
        raise InvariantError(f"no control piece covers {y}")


def _affine_from_endpoints(x0, v0, x1, v1):
    coef = (v1 - v0) / (x1 - x0)
    return coef, v0 - coef * x0


def portfolio_transform(psi1: PwlFn, psi2: PwlFn, p, a, b):
    """The exact portfolio minimization; returns (PwlFn, PwlControl).

    The control is alpha, money invested in stock, with alpha(y) in
    K(y) = [-y/b, -y/a]; the smallest optimal alpha is selected.
    """
    p = to_rational(p)
    a, b = to_rational(a), to_rational(b)
    if not (0 < p < 1):
        raise ContractError(f"need 0 < p < 1, got {p}")
    pt = martingale_prob(a, b)
    P = psi1._xs
    Q = psi2._xs

    def objective(y, w1):
        w2 = (y - pt * w1) / (1 - pt)
        return p * psi1.eval(w1) + (1 - p) * psi2.eval(w2)

    def min_w1_at(y):
        """(value, smallest optimal w1) by direct candidate evaluation."""
        best_v = None
        best_w = None
        for w1 in _portfolio_candidates(y, P, Q, pt):
            v = objective(y, w1)
            if best_v is None or v < best_v or (v == best_v and w1 < best_w):
                best_v, best_w = v, w1
        return best_v, best_w

    def argmin_alpha(y):
        _, w1 = min_w1_at(y)
        return (w1 - y) / b

    grid = sorted({pt * pi + (1 - pt) * qj for pi in P for qj in Q})
    value_points = []
    ctrl_pieces = []  # (y_lo, y_hi, w1 coef, w1 intercept), merged later
    for lo, hi in zip(grid, grid[1:]):
        cands = []
        for pi in P:
            if pt * pi <= lo:
                vl, vr = objective(lo, pi), objective(hi, pi)
                cands.append((vl, vr, (Fraction(0), pi)))
        for qj in Q:
            if (1 - pt) * qj <= lo:
                w1l = (lo - (1 - pt) * qj) / pt
                w1r = (hi - (1 - pt) * qj) / pt
                vl, vr = objective(lo, w1l), objective(hi, w1r)
                cands.append((vl, vr, _affine_from_endpoints(lo, w1l, hi, w1r)))
        _lower_envelope(lo, hi, cands, value_points, ctrl_pieces)
    if not value_points:  # both inputs are the zero function
        value_points = [(Fraction(0), Fraction(0))]
    else:
        value_points.append((grid[-1], Fraction(0)))
    fn = PwlFn(value_points)

    # past the last event point everything optimal costs 0; the smallest
    # optimal w1 is the last psi1 breakpoint (needs psi2's argument clear of
    # its support too, which holds from the last event point on)
    tail_lo = grid[-1]
    w_tail = P[-1]
    pieces = ctrl_pieces + [(tail_lo, None, Fraction(0), w_tail)]
    pieces = _merge_control_pieces(pieces)
    alpha_pieces = []
    boundary = {}
    for lo, hi, coef, inter in pieces:
        # alpha = (w1 - y) / b
        alpha_pieces.append((lo, hi, (coef - 1) / b, inter / b))
    ys = {lo for lo, _, _, _ in pieces} | {hi for _, hi, _, _ in pieces if hi is not None}
    for y in ys:
        boundary[y] = argmin_alpha(y)
    return fn, PwlControl(alpha_pieces, boundary, argmin_alpha)


def _portfolio_candidates(y, P, Q, pt):
    cands = set()
    for pi in P:
        if pt * pi <= y:
            cands.add(pi)
    for qj in Q:
        if (1 - pt) * qj <= y:
            cands.add((y - (1 - pt) * qj) / pt)
    if not cands:
        cands.add(Fraction(0))
    return cands


def _lower_envelope(lo, hi, cands, value_points, ctrl_pieces):
    """March the exact lower envelope of affine candidates across [lo, hi].

    Appends (x, v) value points (left-closed; the caller appends the global
    final point) and control pieces carrying the smallest optimal w1.
    """
    affs = []
    for vl, vr, w1 in cands:
        coef, inter = _affine_from_endpoints(lo, vl, hi, vr)
        affs.append((coef, inter, w1))

    def val(idx, y):
        c, i, _ = affs[idx]
        return c * y + i

    t = lo
    cur = min(range(len(affs)), key=lambda i: (val(i, lo), affs[i][0]))
    while True:
        # earliest point in (t, hi] where someone dips strictly below cur
        best_y = None
        nxt = None
        for i in range(len(affs)):
            ci, ii, _ = affs[i]
            cc, ic, _ = affs[cur]
            if ci >= cc:
                continue  # can never dip below cur going right
            yc = (ic - ii) / (ci - cc)
            if yc <= t or yc > hi:
                continue
            if best_y is None or yc < best_y or (yc == best_y and ci < affs[nxt][0]):
                best_y, nxt = yc, i
        stop = hi if best_y is None else best_y
        _emit_control(t, stop, affs, cur, ctrl_pieces)
        value_points.append((t, val(cur, t)))
        if best_y is None:
            break
        t, cur = best_y, nxt


def _emit_control(lo, hi, affs, cur, ctrl_pieces):
    """Control pieces on [lo, hi] where affs[cur] is (one of) the minimum."""
    cc, ic, _ = affs[cur]
    tied = [w for c, i, w in affs if c == cc and i == ic]
    if len(tied) == 1:
        ctrl_pieces.append((lo, hi, *tied[0]))
        return
    # several candidates share the value on the whole piece; the smallest w1
    # among them can switch where their (affine) w1 functions cross
    cuts = {lo, hi}
    for i in range(len(tied)):
        for j in range(i + 1, len(tied)):
            (c1, i1), (c2, i2) = tied[i], tied[j]
            if c1 != c2:
                yc = (i2 - i1) / (c1 - c2)
                if lo < yc < hi:
                    cuts.add(yc)
    xs = sorted(cuts)
    for x0, x1 in zip(xs, xs[1:]):
        mid = (x0 + x1) / 2
        coef, inter = min(tied, key=lambda wi: wi[0] * mid + wi[1])
        ctrl_pieces.append((x0, x1, coef, inter))


def _merge_control_pieces(pieces):
    merged = []
    for piece in pieces:
        if merged:
            lo0, hi0, c0, i0 = merged[-1]
            lo1, hi1, c1, i1 = piece
            if hi0 == lo1 and c0 == c1 and i0 == i1:
                merged[-1] = (lo0, hi1, c0, i0)
                continue
        merged.append(piece)
    return merged


def infusion_transform(psi: PwlFn, A):
    """The exact infusion minimization; returns (PwlFn, PwlControl).

    The control is the injected amount z(y) >= (A - y)^+, smallest optimal.
    Computed through h(w) = w + psi(w): the value is
    (A - y) + min over w >= (y - A)^+ of h(w), and the smallest optimal z
    comes from the LEFTMOST minimizer of h on that ray.
    """
    A = to_rational(A)
    if A < 0:
        raise ContractError(f"obligation must be nonnegative, got {A}")

    def h_argmin(c):
        """(min of h on [c, inf), leftmost w attaining it)."""
        best_v, best_w = None, None
        for w in [c] + [x for x in psi._xs if x > c]:
            v = w + psi.eval(w)
            if best_v is None or v < best_v:
                best_v, best_w = v, w
        return best_v, best_w

    def argmin_z(y):
        c = max(y - A, Fraction(0))
        _, w = h_argmin(c)
        return w + A - y

    # knots of c -> min h on [c, inf): psi breakpoints plus the points where
    # a rising h(c) catches up with the best suffix minimum
    knots = {Fraction(0)}
    xs = psi._xs
    for x in xs:
        knots.add(x)
    for t in range(len(xs) - 1):
        x0, x1 = xs[t], xs[t + 1]
        h0 = x0 + psi.eval(x0)
        h1 = x1 + psi.eval(x1)
        suffix, _ = h_argmin(x1)
        if h0 < suffix < h1:  # h rises through the suffix minimum inside
            coef, inter = _affine_from_endpoints(x0, h0, x1, h1)
            knots.add((suffix - inter) / coef)

    def psiA_eval(y):
        c = max(y - A, Fraction(0))
        v, _ = h_argmin(c)
        return (A - y) + v

    ys = sorted({Fraction(0), A} | {A + c for c in knots})
    ys = [y for y in ys if y >= 0]
    end = A + psi.support_end
    pts = [(y, psiA_eval(y)) for y in ys if y <= end]
    if not pts or pts[-1][0] < end:
        pts.append((end, Fraction(0)))
    fn = PwlFn(pts)

    pieces = []
    cuts = sorted({y for y, _ in pts})
    for y0, y1 in zip(cuts, cuts[1:]):
        mid = (y0 + y1) / 2
        z_mid = argmin_z(mid)
        c = max(mid - A, Fraction(0))
        _, w_mid = h_argmin(c)
        if w_mid == c and mid > A:
            # minimizer rides the constraint: z = 0
            pieces.append((y0, y1, Fraction(0), Fraction(0)))
        else:
            # minimizer parked at a fixed w: z = w + A - y
            pieces.append((y0, y1, Fraction(-1), w_mid + A))
        if pieces[-1][2] * mid + pieces[-1][3] != z_mid:
            raise InvariantError("infusion control piece disagrees with argmin")
    pieces.append((cuts[-1], None, Fraction(0), Fraction(0)))
    pieces = _merge_control_pieces(pieces)
    boundary = {}
    ys_b = {lo for lo, _, _, _ in pieces} | {hi for _, hi, _, _ in pieces if hi is not None}
    for y in ys_b:
        boundary[y] = argmin_z(y)
    return fn, PwlControl(pieces, boundary, argmin_z)
