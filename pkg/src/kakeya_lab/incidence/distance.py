"""Exact Euclidean distance from points to a plane conic.

The nearest point q on {q^T A q + b.q + c = 0} to p satisfies
(I + mu A) q = p - mu b / 2 for a Lagrange multiplier mu.  In the eigenbasis
of A this gives q as a rational function of mu, and substituting back yields a
polynomial of degree at most four in mu.  Its real roots, together with the
poles mu = -1/lambda_i and the singular point of a degenerate conic, are the
candidate nearest points.
"""
from __future__ import annotations

import numpy as np

from ..errors import PreconditionError
from .curves import Curve2

IMAG_TOL = 1e-7
ON_CURVE_TOL = 1e-7


def _pmul(a, b):
    """Product of batched polynomials (rows of low-to-high coefficients)."""
    out = np.zeros((a.shape[0], a.shape[1] + b.shape[1] - 1))
    for i in range(a.shape[1]):
        for j in range(b.shape[1]):
            out[:, i + j] += a[:, i] * b[:, j]
    return out


def _padd(*polys):
    width = max(p.shape[1] for p in polys)
    out = np.zeros((polys[0].shape[0], width))
    for p in polys:
        out[:, :p.shape[1]] += p
    return out


def _batched_real_roots(coeffs):
    """Real roots of each row (low-to-high coefficients, degree <= 4).

    Returns (owner, root) arrays listing every real root with its row index.
    """
    n = coeffs.shape[0]
    scale = np.abs(coeffs).max(axis=1, keepdims=True)
    scale[scale == 0] = 1.0
    c = coeffs / scale
    owners, vals = [], []
    lead = c[:, 4]
    quartic = np.abs(lead) > 1e-12
    idx = np.flatnonzero(quartic)
    if idx.size:
        comp = np.zeros((idx.size, 4, 4))
        comp[:, 1:, :3] = np.eye(3)
        comp[:, :, 3] = -c[idx, :4] / lead[idx, None]
        eig = np.linalg.eigvals(comp)
        real = np.abs(eig.imag) <= IMAG_TOL * (1 + np.abs(eig))
        rows, cols = np.nonzero(real)
        owners.append(idx[rows])
        vals.append(eig.real[rows, cols])
    for k in np.flatnonzero(~quartic):
        if not np.any(c[k]):
            continue
        r = np.atleast_1d(np.roots(np.trim_zeros(c[k][::-1], "f")))
        r = r[np.abs(r.imag) <= IMAG_TOL * (1 + np.abs(r))].real
        owners.append(np.full(r.size, k))
        vals.append(r)
    if not owners:
        return np.zeros(0, int), np.zeros(0)
    return np.concatenate(owners).astype(int), np.concatenate(vals)


def _polish(curve, q, steps=3):
    for _ in range(steps):
        g = curve.gradient(q)
        gg = (g * g).sum(axis=-1)
        ok = gg > 1e-300
        step = np.where(ok, curve(q) / np.where(ok, gg, 1.0), 0.0)
        q = q - step[:, None] * g
    return q


def conic_distance(curve: Curve2, pts):
    """dist(p, Z(curve)) for each row of pts; +inf where the real zero set is empty."""
    pts = np.atleast_2d(np.asarray(pts, float))
    n = pts.shape[0]
    if n == 0:
        return np.zeros(0)
    c = curve.coeffs
    A = curve.quadratic_form
    b = curve.linear_part
    if curve.degree == 1:
        return np.abs(pts @ b + c[0]) / np.linalg.norm(b)
    lam, R = np.linalg.eigh(A)
    pp = pts @ R
    bp = b @ R
    one = np.ones((n, 1))
    N = [np.column_stack([pp[:, i], -0.5 * bp[i] * one[:, 0]]) for i in range(2)]
    D = [np.column_stack([one[:, 0], lam[i] * one[:, 0]]) for i in range(2)]
    D2 = [_pmul(d, d) for d in D]
    terms = []
    for i in range(2):
        j = 1 - i
        terms.append(lam[i] * _pmul(_pmul(N[i], N[i]), D2[j]))
        terms.append(bp[i] * _pmul(_pmul(N[i], D[i]), D2[j]))
    terms.append(c[0] * _pmul(D2[0], D2[1]))
    poly = _padd(*terms)
    owner, mu = _batched_real_roots(poly)
    den = 1.0 + mu[:, None] * lam[None, :]
    keep = np.all(np.abs(den) > 1e-12, axis=1)
    owner, mu, den = owner[keep], mu[keep], den[keep]
    cand = [(pp[owner] - 0.5 * mu[:, None] * bp[None, :]) / den]
    owners = [owner]
    # poles of the rational parametrization
    for i in range(2):
        if abs(lam[i]) < 1e-14:
            continue
        mu_i = -1.0 / lam[i]
        j = 1 - i
        dj = 1.0 + mu_i * lam[j]
        qj = (pp[:, j] - 0.5 * mu_i * bp[j]) / dj if abs(dj) > 1e-12 else pp[:, j]
        const = lam[j] * qj * qj + bp[j] * qj + c[0]
        disc = bp[i] ** 2 - 4 * lam[i] * const
        disc = np.where((disc < 0) & (disc > -1e-12 * max(1.0, bp[i] ** 2)), 0.0, disc)
        ok = disc >= 0
        sq = np.sqrt(np.where(ok, disc, 0.0))
        for sign in (1.0, -1.0):
            q = np.empty((int(ok.sum()), 2))
            q[:, i] = (-bp[i] + sign * sq[ok]) / (2 * lam[i])
            q[:, j] = qj[ok]
            cand.append(q)
            owners.append(np.flatnonzero(ok))
    # singular point of a degenerate conic
    if abs(np.linalg.det(A)) > 1e-14:
        qs = np.linalg.solve(2 * A, -b)
        if abs(curve(qs)) <= 1e-10 * max(1.0, np.abs(c).max()):
            cand.append(np.tile(qs @ R, (n, 1)))
            owners.append(np.arange(n))
    cand_pts = np.vstack(cand)
    cand_owner = np.concatenate(owners)

    out = np.full(n, np.inf)
    if cand_pts.shape[0] == 0:
        return out
    Q = cand_pts @ R.T
    owner = cand_owner
    Q = _polish(curve, Q)
    g = np.linalg.norm(curve.gradient(Q), axis=1)
    resid = np.abs(curve(Q))
    scale = np.abs(c).max()
    good = resid <= ON_CURVE_TOL * scale * np.maximum(1.0, np.abs(Q).max(axis=1)) ** 2
    good |= resid <= ON_CURVE_TOL * np.maximum(g, 1e-300)
    d = np.linalg.norm(Q - pts[owner], axis=1)
    np.minimum.at(out, owner[good], d[good])
    return out


def proxy_distance(curve: Curve2, pts):
    """First-order estimate |gamma(p)| / |grad gamma(p)|."""
    return curve.distance_proxy(np.atleast_2d(np.asarray(pts, float)))


def incidence_matrix(pts, curves, r):
    """Boolean |pts| x |curves| matrix of dist(p, Z(gamma)) <= r."""
    if r <= 0:
        raise PreconditionError("r must be positive")
    pts = np.asarray(pts, float).reshape(-1, 2)
    M = np.zeros((len(pts), len(curves)), bool)
    if len(pts) == 0:
        return M
    for j, cv in enumerate(curves):
        if not isinstance(cv, Curve2):
            cv = Curve2(cv)
        M[:, j] = conic_distance(cv, pts) <= r
    return M


def fuzzy_incidences(pts, curves, r):
    """Number of pairs (p, gamma) with dist(p, Z(gamma)) <= r."""
    return int(incidence_matrix(pts, curves, r).sum())
