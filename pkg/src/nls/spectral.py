"""Low-spectrum computations on assembled forms.

Dense solves (scipy eigh) below n = 2000; Lanczos with full
reorthogonalization, deterministic random start, and deflation of the
known constant null vector (restricted mode) above.  No shift-invert:
the matrices stay factorization-free and the smallest eigenvalues of
these positive semidefinite forms are reachable from the bottom end of
the Krylov spectrum.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from .errors import CountUnreliable, NoConvergence, ZeroVector

DENSE_CUTOFF = 2000


@dataclass
class SpectrumResult:
    eigenvalues: np.ndarray          # ascending
    residual_norms: np.ndarray       # ||A v - t v|| / ||A|| per pair
    eigenvectors: np.ndarray         # (n, k), orthonormal columns
    stats: dict = field(default_factory=dict)

    def to_json_dict(self):
        return {
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "residual_norms": [float(v) for v in self.residual_norms],
            "stats": dict(self.stats),
        }


def _as_matrix(form):
    if hasattr(form, "matrix"):
        return form.matrix, form
    return form, None


def _norm_bound(A):
    return max(float(np.max(np.abs(A).sum(axis=1))), 1e-300)


def rayleigh(form, f):
    """f^T A f / ||f||^2 in the matrix scaling."""
    A, _ = _as_matrix(form)
    f = np.asarray(f, dtype=float).ravel()
    nrm2 = float(f @ f)
    if nrm2 == 0.0:
        raise ZeroVector("rayleigh quotient needs a nonzero vector")
    return float(f @ (A @ f)) / nrm2


def _dense_smallest(A, k, normA):
    Ad = A.toarray() if hasattr(A, "toarray") else np.asarray(A)
    vals, vecs = sla.eigh(Ad)
    vals, vecs = vals[:k], vecs[:, :k]
    resid = np.array([np.linalg.norm(Ad @ vecs[:, i] - vals[i] * vecs[:, i])
                      for i in range(k)]) / normA
    return vals, vecs, resid


def _restricted_null(form):
    if form is not None and form.metadata.get("mode") == "restricted":
        n = form.n
        return np.full(n, 1.0 / np.sqrt(n))
    return None


def _lanczos(A, n, normA, k, tol, seed, deflate=None, max_iter=None,
             level_target=None):
    """Lanczos with full reorthogonalization from a seeded random start.

    Returns (ritz values, ritz vectors, basis size, restarts).  With
    ``level_target`` the iteration also stops once the smallest
    unconverged Ritz value safely exceeds the target level.
    """
    rng = np.random.default_rng(seed)
    if max_iter is None:
        max_iter = min(n, max(80 * k, 1200))
    max_iter = min(max_iter, n)
    D = 0 if deflate is None else 1
    Q = np.zeros((n, max_iter + D))
    if deflate is not None:
        Q[:, 0] = deflate
    v = rng.standard_normal(n)
    for j in range(D):
        v -= (Q[:, j] @ v) * Q[:, j]
    v /= np.linalg.norm(v)
    Q[:, D] = v
    alphas, betas = [], []
    restarts = 0
    j = 0
    conv_tol = 0.1 * tol * normA
    while j < max_iter:
        col = D + j
        w = A @ Q[:, col]
        a = float(Q[:, col] @ w)
        alphas.append(a)
        w -= a * Q[:, col]
        if j > 0:
            w -= betas[-1] * Q[:, col - 1]
        # full reorthogonalization against everything incl. deflation;
        # repeat once when cancellation ate most of the vector
        pre = np.linalg.norm(w)
        w -= Q[:, :col + 1] @ (Q[:, :col + 1].T @ w)
        if np.linalg.norm(w) < 0.7071 * pre:
            w -= Q[:, :col + 1] @ (Q[:, :col + 1].T @ w)
        b = float(np.linalg.norm(w))
        j += 1
        if j >= max_iter:
            break
        if b < 1e-13 * normA:
            # invariant subspace hit: restart with a fresh random direction
            restarts += 1
            v = rng.standard_normal(n)
            v -= Q[:, :D + j] @ (Q[:, :D + j].T @ v)
            nv = np.linalg.norm(v)
            if nv < 1e-10:
                break
            Q[:, D + j] = v / nv
            betas.append(0.0)
            continue
        betas.append(b)
        Q[:, D + j] = w / b
        if j % 10 == 0 or j == max_iter - 1:
            theta, S = sla.eigh_tridiagonal(np.array(alphas),
                                            np.array(betas[:-1]))
            bound = np.abs(b * S[-1, :])
            order = np.argsort(theta)
            theta, bound = theta[order], bound[order]
            kk = min(k, len(theta))
            if np.all(bound[:kk] <= conv_tol):
                if level_target is None:
                    break
                beyond = theta[kk:]
                if len(beyond) and theta.max() > level_target:
                    break
    theta, S = sla.eigh_tridiagonal(np.array(alphas),
                                    np.array(betas[:len(alphas) - 1]))
    V = Q[:, D:D + len(alphas)] @ S
    return theta, V, len(alphas), restarts


def smallest_eigs(form, k, tol=1e-8, method="auto", seed=0, max_iter=None):
    """k smallest eigenpairs of the form matrix (standard problem).

    Residual contract: ||A v - t v|| / ||A|| <= tol per returned pair.
    Dense path below n = 2000 unless overridden via ``method``.
    """
    A, meta = _as_matrix(form)
    n = A.shape[0]
    if not (1 <= k <= n):
        raise ValueError(f"need 1 <= k <= {n}")
    normA = _norm_bound(A)
    if method == "dense" or (method == "auto" and n <= DENSE_CUTOFF):
        vals, vecs, resid = _dense_smallest(A, k, normA)
        return SpectrumResult(eigenvalues=vals, residual_norms=resid,
                              eigenvectors=vecs,
                              stats={"method": "dense", "n": n})
    null = _restricted_null(meta)
    k_eff = k - 1 if null is not None else k
    if null is not None and k_eff == 0:
        resid = np.array([np.linalg.norm(A @ null) / normA])
        return SpectrumResult(eigenvalues=np.array([float(null @ (A @ null))]),
                              residual_norms=resid,
                              eigenvectors=null[:, None],
                              stats={"method": "lanczos", "n": n,
                                     "iterations": 0, "restarts": 0})
    theta, V, its, restarts = _lanczos(A, n, normA, k_eff, tol, seed,
                                       deflate=null, max_iter=max_iter)
    take = min(k_eff, V.shape[1])
    vals = theta[:take]
    vecs = V[:, :take]
    if null is not None:
        vals = np.concatenate([[float(null @ (A @ null))], vals])
        vecs = np.column_stack([null, vecs])
    # re-orthonormalize and compute true residuals
    vecs, _ = np.linalg.qr(vecs)
    vals = np.array([float(vecs[:, i] @ (A @ vecs[:, i]))
                     for i in range(vecs.shape[1])])
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    resid = np.array([np.linalg.norm(A @ vecs[:, i] - vals[i] * vecs[:, i])
                      for i in range(vecs.shape[1])]) / normA
    if len(vals) < k or np.any(resid > tol):
        raise NoConvergence(
            f"Lanczos residuals {resid.max():.2e} above tol {tol:.2e} "
            f"after {its} iterations",
            iterations=its,
            partial=SpectrumResult(eigenvalues=vals, residual_norms=resid,
                                   eigenvectors=vecs,
                                   stats={"method": "lanczos", "n": n,
                                          "iterations": its,
                                          "restarts": restarts}))
    return SpectrumResult(eigenvalues=vals, residual_norms=resid,
                          eigenvectors=vecs,
                          stats={"method": "lanczos", "n": n,
                                 "iterations": its, "restarts": restarts})


def count_below(form, level, method="auto", seed=0, max_iter=None,
                margin_rel=1e-6):
    """Number of eigenvalues <= level; exact on the dense path.

    The iterative path runs Lanczos until every Ritz value below
    level + margin has converged and the rest of the spectrum is safely
    above; ambiguity raises CountUnreliable rather than guessing.
    """
    A, meta = _as_matrix(form)
    n = A.shape[0]
    normA = _norm_bound(A)
    if method == "dense" or (method == "auto" and n <= DENSE_CUTOFF):
        Ad = A.toarray() if hasattr(A, "toarray") else np.asarray(A)
        vals = sla.eigvalsh(Ad)
        return int(np.sum(vals <= level))
    null = _restricted_null(meta)
    margin = max(margin_rel * normA, 1e-14 * normA)
    k_guess = 8
    while True:
        theta, V, its, restarts = _lanczos(
            A, n, normA, k_guess, 1e-9, seed, deflate=null,
            max_iter=max_iter, level_target=level + 10 * margin)
        resid = np.array([np.linalg.norm(A @ V[:, i] - theta[i] * V[:, i])
                          for i in range(min(len(theta), 3 * k_guess))]) / normA
        converged = resid <= 1e-8
        below = theta[:len(resid)] <= level
        if np.any(below & ~converged):
            if k_guess >= n or its >= n:
                raise CountUnreliable(
                    "unconverged Ritz values remain below the level")
            k_guess *= 2
            continue
        count = int(np.sum(below & converged))
        # ambiguous when an unconverged Ritz value sits within the margin
        near = (np.abs(theta[:len(resid)] - level) <= margin) & ~converged
        if np.any(near):
            raise CountUnreliable("Ritz saturation ambiguous at the level")
        if null is not None and float(null @ (A @ null)) <= level:
            count += 1
        return count


def export_spectrum(result, json_path, vectors_path=None):
    """Spectrum to JSON; eigenvectors optionally to little-endian float64
    column-major binary with a JSON sidecar describing the shape."""
    doc = result.to_json_dict()
    if vectors_path is not None:
        vecs = np.asarray(result.eigenvectors, dtype="<f8", order="F")
        with open(vectors_path, "wb") as fh:
            fh.write(vecs.tobytes(order="F"))
        with open(str(vectors_path) + ".json", "w") as fh:
            json.dump({"shape": list(vecs.shape), "dtype": "<f8",
                       "order": "column-major"}, fh, sort_keys=True)
        doc["eigenvectors_file"] = str(vectors_path)
    with open(json_path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
