"""Quantum information geometry on density matrices.

Petz monotone metrics (SLD/Bures, harmonic-mean, Wigner-Yanase), Uhlmann
fidelity, quantum affinity, geodesic distances, and Bloch-sphere helpers
for the single-qubit fast paths.

All operations are pure functions on numpy arrays (or the thin
:class:`DensityMatrix` wrapper) and are safe to call from multiple threads.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
EIGENVALUE_FLOOR = -1e-10
PAIR_WEIGHT_CUTOFF = 1e-12   # drop eigenpairs with p_i + p_j below this
HM_MIN_EIGENVALUE = 1e-9     # harmonic-mean weight diverges at pure states


class InvalidStateError(ValueError):
    """Input matrix violates the density-matrix invariants."""


class MetricDomainError(ValueError):
    """State outside the domain of the requested metric (e.g. HM at a pure state)."""


class UnsupportedMetricError(ValueError):
    """Requested metric has no closed-form geodesic."""


class MetricKind(enum.Enum):
    """Matrix-monotone function selecting a Petz metric."""

    SLD = "sld"   # f(x) = (x+1)/2, Bures
    HM = "hm"     # f(x) = 2x/(x+1), harmonic mean
    WY = "wy"     # f(x) = (1+sqrt(x))^2/4, Wigner-Yanase

    def f(self, x):
        x = np.asarray(x, dtype=float)
        if self is MetricKind.SLD:
            return (x + 1.0) / 2.0
        if self is MetricKind.HM:
            return 2.0 * x / (x + 1.0)
        return (1.0 + np.sqrt(x)) ** 2 / 4.0


def _as_matrix(rho) -> np.ndarray:
    if isinstance(rho, DensityMatrix):
        return rho.entries
    return np.asarray(rho, dtype=complex)


@dataclass(frozen=True)
class DensityMatrix:
    """Validated density matrix: Hermitian, unit trace, PSD up to roundoff.

    Eigenvalues below zero (but above ``EIGENVALUE_FLOOR``) are tolerated;
    construction fails loudly for anything worse.
    """

    entries: np.ndarray
    dim: int = field(init=False)

    def __post_init__(self):
        mat = np.asarray(self.entries, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise InvalidStateError(f"expected a square matrix, got shape {mat.shape}")
        herm_err = np.max(np.abs(mat - mat.conj().T))
        if herm_err > HERMITICITY_TOL:
            raise InvalidStateError(f"not Hermitian: max |rho_ij - conj(rho_ji)| = {herm_err:.3e}")
        tr_err = abs(mat.trace() - 1.0)
        if tr_err > TRACE_TOL:
            raise InvalidStateError(f"trace deviates from 1 by {tr_err:.3e}")
        evals = np.linalg.eigvalsh(mat)
        if evals[0] < EIGENVALUE_FLOOR:
            raise InvalidStateError(f"negative eigenvalue {evals[0]:.3e}")
        mat = (mat + mat.conj().T) / 2.0
        mat.flags.writeable = False
        object.__setattr__(self, "entries", mat)
        object.__setattr__(self, "dim", mat.shape[0])

    @classmethod
    def from_bloch(cls, r) -> "DensityMatrix":
        return cls(bloch_to_density(r))


@dataclass(frozen=True)
class TangentOperator:
    """Hermitian traceless matrix: a tangent direction on the state manifold."""

    entries: np.ndarray
    dim: int = field(init=False)

    def __post_init__(self):
        mat = np.asarray(self.entries, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise InvalidStateError(f"expected a square matrix, got shape {mat.shape}")
        herm_err = np.max(np.abs(mat - mat.conj().T))
        if herm_err > HERMITICITY_TOL:
            raise InvalidStateError(f"not Hermitian: deviation {herm_err:.3e}")
        tr_err = abs(mat.trace())
        if tr_err > HERMITICITY_TOL:
            raise InvalidStateError(f"trace deviates from 0 by {tr_err:.3e}")
        mat = (mat + mat.conj().T) / 2.0
        mat.flags.writeable = False
        object.__setattr__(self, "entries", mat)
        object.__setattr__(self, "dim", mat.shape[0])


def spectral_decompose(rho):
    """Eigendecompose a density matrix.

    Returns (eigenvalues, eigenvectors) with eigenvalues sorted descending
    and clipped to [0, 1]; eigenvectors are the matching orthonormal columns.
    """
    mat = _as_matrix(rho)
    herm_err = np.max(np.abs(mat - mat.conj().T))
    if herm_err > HERMITICITY_TOL:
        raise InvalidStateError(f"not Hermitian: deviation {herm_err:.3e}")
    evals, evecs = np.linalg.eigh(mat)
    if evals[0] < EIGENVALUE_FLOOR:
        raise InvalidStateError(f"negative eigenvalue {evals[0]:.3e}")
    order = np.argsort(evals)[::-1]
    evals = np.clip(evals[order], 0.0, 1.0)
    evecs = evecs[:, order]
    return evals, evecs


def _metric_weights(p: np.ndarray, metric: MetricKind) -> np.ndarray:
    """Pairwise weights w(p_i, p_j) = 1 / (p_j * f(p_i / p_j)), vectorized.

    Pairs with p_i + p_j below the cutoff get weight 0 (excluded from the sum).
    """
    pi = p[:, None]
    pj = p[None, :]
    s = pi + pj
    with np.errstate(divide="ignore", invalid="ignore"):
        if metric is MetricKind.SLD:
            w = 2.0 / s
        elif metric is MetricKind.HM:
            w = s / (2.0 * pi * pj)
        else:
            w = 4.0 / (np.sqrt(pi) + np.sqrt(pj)) ** 2
    w = np.where(s > PAIR_WEIGHT_CUTOFF, w, 0.0)
    return np.nan_to_num(w, nan=0.0, posinf=0.0, neginf=0.0)


def petz_speed(rho, xdot, metric: MetricKind) -> float:
    """Squared speed of a state along a tangent direction under a Petz metric.

    Eigenbasis sum of |<i|xdot|j>|^2 * w_f(p_i, p_j) over eigenpairs with
    p_i + p_j above the numerical floor.
    """
    mat = _as_matrix(rho)
    dmat = xdot.entries if isinstance(xdot, TangentOperator) else np.asarray(xdot, dtype=complex)
    if mat.shape != dmat.shape:
        raise ValueError(f"dimension mismatch: {mat.shape} vs {dmat.shape}")
    p, v = spectral_decompose(mat)
    if metric is MetricKind.HM and p[-1] < HM_MIN_EIGENVALUE:
        raise MetricDomainError(
            f"harmonic-mean metric undefined near purity: min eigenvalue {p[-1]:.3e}"
        )
    m = v.conj().T @ dmat @ v
    w = _metric_weights(p, metric)
    return float(np.sum(np.abs(m) ** 2 * w))


def qubit_speed_closed_form(r, rdot, metric: MetricKind) -> float:
    """Closed-form single-qubit speed from the Bloch vector and its velocity.

    Valid for SLD and HM only; |r| must be strictly inside the Bloch ball.
    With a = radial velocity component, b = |transverse component|:
    SLD gives a^2/(1-|r|^2) + b^2, HM gives (a^2 + b^2)/(1-|r|^2).
    """
    r = np.asarray(r, dtype=float)
    rdot = np.asarray(rdot, dtype=float)
    rr = float(r @ r)
    if rr >= 1.0:
        raise MetricDomainError(f"|r| = {np.sqrt(rr):.6f} is not inside the Bloch ball")
    if metric is MetricKind.WY:
        raise UnsupportedMetricError("no closed form exposed for the WY metric")
    if metric not in (MetricKind.SLD, MetricKind.HM):
        raise UnsupportedMetricError(f"unsupported metric {metric}")
    v2 = float(rdot @ rdot)
    a2 = (float(r @ rdot) ** 2 / rr) if rr > 0.0 else 0.0
    b2 = max(v2 - a2, 0.0)
    if metric is MetricKind.SLD:
        return a2 / (1.0 - rr) + b2
    return (a2 + b2) / (1.0 - rr)


def _qubit_speed_wy(r, rdot) -> float:
    """Internal WY analogue of qubit_speed_closed_form (cross-checked in tests)."""
    r = np.asarray(r, dtype=float)
    rdot = np.asarray(rdot, dtype=float)
    rr = float(r @ r)
    if rr >= 1.0:
        raise MetricDomainError(f"|r| = {np.sqrt(rr):.6f} is not inside the Bloch ball")
    v2 = float(rdot @ rdot)
    a2 = (float(r @ rdot) ** 2 / rr) if rr > 0.0 else 0.0
    b2 = max(v2 - a2, 0.0)
    c = np.sqrt(1.0 - rr)
    return a2 / (1.0 - rr) + 2.0 * b2 / (1.0 + c)


def _sqrtm_psd(mat: np.ndarray) -> np.ndarray:
    """Matrix square root of a PSD Hermitian matrix via eigendecomposition."""
    evals, evecs = np.linalg.eigh(mat)
    if evals[0] < EIGENVALUE_FLOOR:
        raise InvalidStateError(f"negative eigenvalue {evals[0]:.3e} in matrix square root")
    evals = np.clip(evals, 0.0, None)
    return (evecs * np.sqrt(evals)) @ evecs.conj().T


def uhlmann_fidelity(rho, sigma) -> float:
    """Uhlmann fidelity F = Tr sqrt(sqrt(rho) sigma sqrt(rho)), in [0, 1].

    Uses the qubit closed form sqrt(Tr(rho sigma) + 2 sqrt(det rho det sigma))
    for dim 2 and the general matrix-square-root path otherwise.
    """
    a = _as_matrix(rho)
    b = _as_matrix(sigma)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if a.shape[0] == 2:
        return _qubit_fidelity(a, b)
    sa = _sqrtm_psd(a)
    inner = sa @ b @ sa
    evals = np.linalg.eigvalsh((inner + inner.conj().T) / 2.0)
    f = float(np.sum(np.sqrt(np.clip(evals, 0.0, None))))
    return min(max(f, 0.0), 1.0)


def _qubit_fidelity(a: np.ndarray, b: np.ndarray) -> float:
    tr_ab = float(np.trace(a @ b).real)
    det_a = max(float(np.linalg.det(a).real), 0.0)
    det_b = max(float(np.linalg.det(b).real), 0.0)
    val = tr_ab + 2.0 * np.sqrt(det_a * det_b)
    return float(np.sqrt(min(max(val, 0.0), 1.0)))


def fidelity_general(rho, sigma) -> float:
    """General matrix-square-root fidelity path, any dimension (incl. 2).

    Kept separate from uhlmann_fidelity so the dim-2 fast path can be
    cross-validated against it.
    """
    a = _as_matrix(rho)
    b = _as_matrix(sigma)
    sa = _sqrtm_psd(a)
    inner = sa @ b @ sa
    evals = np.linalg.eigvalsh((inner + inner.conj().T) / 2.0)
    f = float(np.sum(np.sqrt(np.clip(evals, 0.0, None))))
    return min(max(f, 0.0), 1.0)


def affinity(rho, sigma) -> float:
    """Quantum affinity A = Tr(sqrt(rho) sqrt(sigma)), in [0, 1]."""
    a = _as_matrix(rho)
    b = _as_matrix(sigma)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if a.shape[0] == 2:
        val = float(np.trace(_qubit_sqrt(a) @ _qubit_sqrt(b)).real)
    else:
        val = float(np.trace(_sqrtm_psd(a) @ _sqrtm_psd(b)).real)
    return min(max(val, 0.0), 1.0)


def _qubit_sqrt(a: np.ndarray) -> np.ndarray:
    """sqrt of a 2x2 PSD matrix: (a + sqrt(det a) I) / sqrt(tr a + 2 sqrt(det a))."""
    det = max(float(np.linalg.det(a).real), 0.0)
    tr = float(np.trace(a).real)
    s = np.sqrt(det)
    denom = np.sqrt(max(tr + 2.0 * s, 0.0))
    if denom == 0.0:
        return np.zeros_like(a)
    return (a + s * np.eye(2)) / denom


def geodesic_distance(rho, sigma, metric: MetricKind) -> float:
    """Geodesic distance between two states: 2 arccos of fidelity (SLD) or
    affinity (WY). The HM metric has no closed-form geodesic."""
    if metric is MetricKind.SLD:
        return 2.0 * float(np.arccos(np.clip(uhlmann_fidelity(rho, sigma), 0.0, 1.0)))
    if metric is MetricKind.WY:
        return 2.0 * float(np.arccos(np.clip(affinity(rho, sigma), 0.0, 1.0)))
    raise UnsupportedMetricError("harmonic-mean metric has no closed-form geodesic")


def bloch_to_density(r) -> np.ndarray:
    """Bloch vector (x, y, z) -> 2x2 density matrix (1/2)(I + r . sigma)."""
    r = np.asarray(r, dtype=float)
    if r.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {r.shape}")
    norm = float(np.linalg.norm(r))
    if norm > 1.0 + 1e-12:
        raise MetricDomainError(f"|r| = {norm:.12f} exceeds 1")
    x, y, z = r
    return 0.5 * np.array([[1.0 + z, x - 1j * y], [x + 1j * y, 1.0 - z]], dtype=complex)


def density_to_bloch(rho) -> np.ndarray:
    """2x2 density matrix -> Bloch vector (x, y, z)."""
    mat = _as_matrix(rho)
    if mat.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {mat.shape}")
    x = 2.0 * mat[1, 0].real
    y = 2.0 * mat[1, 0].imag
    z = (mat[0, 0] - mat[1, 1]).real
    return np.array([x, y, z])


# Vectorized single-qubit helpers used by the Markov and circuit engines.

def bloch_fidelity(r1, r2) -> np.ndarray:
    """Uhlmann fidelity between qubit states given as Bloch vectors.

    Broadcasts over leading axes; the last axis must have length 3.
    """
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    dot = np.sum(r1 * r2, axis=-1)
    d1 = np.clip(1.0 - np.sum(r1 * r1, axis=-1), 0.0, None)
    d2 = np.clip(1.0 - np.sum(r2 * r2, axis=-1), 0.0, None)
    val = (1.0 + dot) / 2.0 + np.sqrt(d1 * d2) / 2.0
    return np.sqrt(np.clip(val, 0.0, 1.0))


def bloch_geodesic(r1, r2, metric: MetricKind = MetricKind.SLD) -> np.ndarray:
    """Geodesic distance between qubit Bloch vectors (SLD or WY)."""
    if metric is MetricKind.SLD:
        return 2.0 * np.arccos(np.clip(bloch_fidelity(r1, r2), 0.0, 1.0))
    if metric is MetricKind.WY:
        return 2.0 * np.arccos(np.clip(bloch_affinity(r1, r2), 0.0, 1.0))
    raise UnsupportedMetricError("harmonic-mean metric has no closed-form geodesic")


def bloch_affinity(r1, r2) -> np.ndarray:
    """Quantum affinity between qubit Bloch states, broadcast over leading axes."""
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    n1 = np.sqrt(np.clip(np.sum(r1 * r1, axis=-1), 0.0, 1.0))
    n2 = np.sqrt(np.clip(np.sum(r2 * r2, axis=-1), 0.0, 1.0))
    dot = np.sum(r1 * r2, axis=-1)
    # Tr(sqrt(rho1) sqrt(rho2)) for qubits, from eigenvalues (1 +- n)/2:
    # sqrt(rho) = a I + b (r . sigma)/n with a = (sqrt(p+) + sqrt(p-))/2,
    # b = (sqrt(p+) - sqrt(p-))/2; the trace works out to
    # 2 a1 a2 + 2 b1 b2 (r1 . r2) / (n1 n2).
    sp1 = np.sqrt(np.clip((1.0 + n1) / 2.0, 0.0, None))
    sm1 = np.sqrt(np.clip((1.0 - n1) / 2.0, 0.0, None))
    sp2 = np.sqrt(np.clip((1.0 + n2) / 2.0, 0.0, None))
    sm2 = np.sqrt(np.clip((1.0 - n2) / 2.0, 0.0, None))
    a1, b1 = (sp1 + sm1) / 2.0, (sp1 - sm1) / 2.0
    a2, b2 = (sp2 + sm2) / 2.0, (sp2 - sm2) / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        unit_dot = np.where((n1 > 0) & (n2 > 0), dot / (n1 * n2), 0.0)
    val = 2.0 * (a1 * a2 + b1 * b2 * unit_dot)
    return np.clip(val, 0.0, 1.0)


def bloch_speed(r, rdot, metric: MetricKind) -> np.ndarray:
    """Vectorized qubit Petz speed; broadcasts over leading axes.

    SLD and HM follow qubit_speed_closed_form; WY uses the same eigenbasis
    reduction (radial part 1/(1-r^2), transverse 2/(1+sqrt(1-r^2))).
    """
    r = np.asarray(r, dtype=float)
    rdot = np.asarray(rdot, dtype=float)
    rr = np.sum(r * r, axis=-1)
    v2 = np.sum(rdot * rdot, axis=-1)
    rv = np.sum(r * rdot, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        a2 = np.where(rr > 0.0, rv ** 2 / np.where(rr > 0.0, rr, 1.0), 0.0)
    b2 = np.clip(v2 - a2, 0.0, None)
    one_minus = np.clip(1.0 - rr, 1e-300, None)
    if metric is MetricKind.SLD:
        return a2 / one_minus + b2
    if metric is MetricKind.HM:
        return (a2 + b2) / one_minus
    return a2 / one_minus + 2.0 * b2 / (1.0 + np.sqrt(np.clip(1.0 - rr, 0.0, None)))
