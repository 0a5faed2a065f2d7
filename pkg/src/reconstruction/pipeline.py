"""Order-by-order reconstruction of G^K from measurement records.

Two modes:
- exact: per-L groups of exactly 2L+1 records, chained through the Schur
  transform, the discrete per-L inversion and the inverse Schur transform.
- least_squares: the full linear model I_Kq(g) = v^T G conj(v), v the q-th
  column of D^K(g), solved for a Hermitian G by weighted (Tikhonov) least
  squares with standard errors from the sandwich covariance.
"""

import math
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
from scipy.linalg import block_diag

from config import Config
from src.angular.half_int import HalfInt, HalfIntLike
from src.angular.special_functions import harmonic_row, wigner_D_matrix
from src.fock.correlations import CorrelationMatrix
from src.polarization.forward import MeasurementRecord
from src.reconstruction.directions import DirectionSet
from src.reconstruction.inversion import discrete_inversion
from src.reconstruction.schur import MultipoleVector, inverse_schur_G, schur_coefficients_I, schur_transform_I
from src.utils.exceptions import ConditioningError, InsufficientDataError, InvalidInputError

logger = logging.getLogger(__name__)

EXACT = "exact"
LEAST_SQUARES = "least_squares"
MODE_ALIASES = {"exact": EXACT, "lsq": LEAST_SQUARES, "least_squares": LEAST_SQUARES}


@dataclass
class ReconstructionDiagnostics:
    K: HalfInt
    mode: str
    residual: float
    cond_P: Dict[int, float] = field(default_factory=dict)
    psd_projected: bool = False
    n_records: int = 0
    chi2: Optional[float] = None
    dof: Optional[int] = None
    cond_design: Optional[float] = None
    regularization: float = 0.0
    std_errors_real: Optional[np.ndarray] = None
    std_errors_imag: Optional[np.ndarray] = None


def project_psd(G: CorrelationMatrix) -> CorrelationMatrix:
    """Nearest PSD matrix in Frobenius norm: clip negative eigenvalues"""
    eigenvalues, vectors = np.linalg.eigh(0.5 * (G.entries + G.entries.conj().T))
    clipped = np.clip(eigenvalues, 0.0, None)
    return CorrelationMatrix(G.K, (vectors * clipped[None, :]) @ vectors.conj().T)


def predicted_moments(multipoles: List[MultipoleVector], K: HalfInt, record: MeasurementRecord) -> np.ndarray:
    """I_Kq at the record's direction from a complete multipole set"""
    result = np.zeros(K.dimension)
    for vector in multipoles:
        L = vector.L
        transformed = math.sqrt(4.0 * math.pi / (2 * L + 1)) * np.vdot(
            harmonic_row(L, record.direction), vector.canonical().components)
        result += schur_coefficients_I(K, L) * transformed.real
    return result


def _group_by_order(records: List[MeasurementRecord], K: HalfInt) -> Dict[int, List[MeasurementRecord]]:
    groups = defaultdict(list)
    for record in records:
        if record.order is not None:
            groups[record.order].append(record)
    missing = [L for L in range(K.twice_value + 1) if len(groups.get(L, [])) != 2 * L + 1]
    if missing:
        counts = {L: len(groups.get(L, [])) for L in missing}
        raise InsufficientDataError(f"Exact mode needs 2L+1 tagged records per order, got {counts}", missing)
    return groups


def _reconstruct_exact(records: List[MeasurementRecord], K: HalfInt):
    groups = _group_by_order(records, K)
    multipoles, conditions = [], {}
    for L in range(K.twice_value + 1):
        group = groups[L]
        dirs = DirectionSet(L, tuple(record.direction for record in group))
        transformed = [schur_transform_I(record, L) for record in group]
        multipoles.append(discrete_inversion(transformed, dirs))
        conditions[L] = dirs.cond_P
        logger.debug(f"K={K}: order L={L} inverted, cond(P)={dirs.cond_P:.3g}")

    G = inverse_schur_G(multipoles, K).hermitized()
    residuals = np.concatenate([predicted_moments(multipoles, K, r) - r.values for r in records])
    residual = float(np.sqrt(np.mean(residuals ** 2)))
    return G, ReconstructionDiagnostics(K, EXACT, residual, conditions, n_records=len(records))


def _hermitian_basis_row(v: np.ndarray) -> np.ndarray:
    """Coefficients of I = v^T G conj(v) on the real Hermitian basis"""
    n = v.size
    outer = v[:, None] * v.conj()[None, :]
    row = [float(np.abs(v[a]) ** 2) for a in range(n)]
    for a in range(n):
        for b in range(a + 1, n):
            row.append(2.0 * outer[a, b].real)
            row.append(-2.0 * outer[a, b].imag)
    return np.array(row)


def _basis_to_matrix(x: np.ndarray, n: int) -> np.ndarray:
    G = np.diag(x[:n]).astype(complex)
    k = n
    for a in range(n):
        for b in range(a + 1, n):
            G[a, b] = x[k] + 1j * x[k + 1]
            G[b, a] = x[k] - 1j * x[k + 1]
            k += 2
    return G


def _basis_errors(variances: np.ndarray, n: int) -> Tuple[np.ndarray, np.ndarray]:
    std = np.sqrt(np.clip(variances, 0.0, None))
    real, imag = np.diag(std[:n]), np.zeros((n, n))
    k = n
    for a in range(n):
        for b in range(a + 1, n):
            real[a, b] = real[b, a] = std[k]
            imag[a, b] = imag[b, a] = std[k + 1]
            k += 2
    return real, imag


def _sigmas(records: List[MeasurementRecord]) -> np.ndarray:
    if all(record.std_errors is None for record in records):
        return np.ones(sum(record.K.dimension for record in records))
    positive = [e for r in records if r.std_errors is not None for e in r.std_errors if e > 0]
    fallback = min(positive) if positive else 1.0
    sigmas, floored = [], 0
    for record in records:
        errors = record.std_errors if record.std_errors is not None else np.zeros(record.K.dimension)
        floor = 1.0 / record.shots if record.shots else fallback
        for error in errors:
            if error <= 0.0:
                floored += 1
            sigmas.append(error if error > 0.0 else floor)
    if floored:
        logger.warning(f"{floored} zero standard errors floored to 1/shots")
    return np.array(sigmas)


def _noise_covariance(records: List[MeasurementRecord], sigma: np.ndarray) -> np.ndarray:
    """Block-diagonal covariance of the stacked moments; q-blocks share counts.

    Variances are raised to at least the floored fit sigma squared, so a
    zero-variance record carries the same 1/shots noise as in the weights.
    """
    blocks, start = [], 0
    for record in records:
        stop = start + record.K.dimension
        floor = sigma[start:stop] ** 2
        if record.covariance is not None:
            covariance = np.asarray(record.covariance)
            blocks.append(covariance + np.diag(np.clip(floor - np.diag(covariance), 0.0, None)))
        else:
            blocks.append(np.diag(floor))
        start = stop
    return block_diag(*blocks)


def _reconstruct_least_squares(records: List[MeasurementRecord], K: HalfInt, lam: float):
    n = K.dimension
    n_params = n * n
    rows, targets = [], []
    for record in records:
        D = wigner_D_matrix(K, record.euler)
        for column in range(n):
            rows.append(_hermitian_basis_row(D[:, column]))
        targets.extend(record.values)
    A, y = np.array(rows), np.array(targets)
    sigma = _sigmas(records)
    A_w, y_w = A / sigma[:, None], y / sigma

    rank = int(np.linalg.matrix_rank(A_w))
    cond = float(np.linalg.cond(A_w)) if rank == n_params else math.inf
    if rank < n_params and lam <= 0.0:
        logger.error(f"K={K}: design matrix rank {rank} < {n_params}")
        raise ConditioningError(f"Measurement design has rank {rank}, needs {n_params}", cond)

    if lam > 0.0:
        A_aug = np.vstack([A_w, math.sqrt(lam) * np.eye(n_params)])
        y_aug = np.concatenate([y_w, np.zeros(n_params)])
    else:
        A_aug, y_aug = A_w, y_w
    x = np.linalg.lstsq(A_aug, y_aug, rcond=None)[0]

    # sandwich form: the weights are diagonal but moments of one record are correlated
    normal = A_w.T @ A_w
    inverse = np.linalg.inv(normal + lam * np.eye(n_params))
    noise = _noise_covariance(records, sigma) / np.outer(sigma, sigma)
    covariance = inverse @ (A_w.T @ noise @ A_w) @ inverse
    std_real, std_imag = _basis_errors(np.diag(covariance), n)

    residuals = A @ x - y
    chi2 = float(np.sum((residuals / sigma) ** 2))
    diagnostics = ReconstructionDiagnostics(
        K, LEAST_SQUARES, float(np.sqrt(np.mean(residuals ** 2))), n_records=len(records),
        chi2=chi2, dof=len(y) - n_params, cond_design=cond, regularization=lam,
        std_errors_real=std_real, std_errors_imag=std_imag)
    return CorrelationMatrix(K, _basis_to_matrix(x, n)), diagnostics


def reconstruct_correlations(records: Iterable[MeasurementRecord], K: HalfIntLike, mode: str = EXACT,
                             lam: Optional[float] = None,
                             psd_project: bool = False) -> Tuple[CorrelationMatrix, ReconstructionDiagnostics]:
    """Reconstruct G^K from the records of order K; other orders are ignored"""
    K = HalfInt.of(K)
    if mode not in MODE_ALIASES:
        raise InvalidInputError(f"Unknown reconstruction mode {mode!r}")
    mode = MODE_ALIASES[mode]
    lam = Config.DEFAULT_LAMBDA if lam is None else float(lam)
    if lam < 0.0:
        raise InvalidInputError(f"Regularization must be >= 0, got {lam}")
    selected = [record for record in records if record.K == K]
    if not selected:
        raise InsufficientDataError(f"No records of order K={K}", range(K.twice_value + 1))

    if mode == EXACT:
        G, diagnostics = _reconstruct_exact(selected, K)
    else:
        G, diagnostics = _reconstruct_least_squares(selected, K, lam)

    if psd_project and G.min_eigenvalue() < 0.0:
        logger.warning(f"K={K}: projecting reconstruction onto PSD cone (min eigenvalue {G.min_eigenvalue():.3e})")
        G = project_psd(G)
        diagnostics.psd_projected = True
    logger.info(f"Reconstructed G^{K} ({mode}) from {len(selected)} records, residual {diagnostics.residual:.3e}")
    return G, diagnostics
