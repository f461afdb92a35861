"""Spectra of discretized operators and their decay-rate verdicts.

This module turns an assembled operator matrix into an eigenvalue sequence
ordered by decreasing modulus, fits the power-law decay of that sequence on
a rank window, and compares the fitted exponent against the rate predicted
by the smoothness order and the dimension of the supporting set:

* kernel operator eigenvalues decay like ``k ** (-1 + (n - s*p)/d)``,
* approximation numbers of the restriction map decay like
  ``k ** (-1/p + (n/p - s)/d)``.

Two-sided checks use ordinary least squares on ``log |lambda_k|`` versus
``log k``.  Checks of genuinely one-sided bounds instead fit an upper
envelope through the point cloud by quantile regression, so oscillating
spectra below the envelope never produce spurious failures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg
from scipy.optimize import linprog

from .fractal_measure import FractalMeasure
from .fractal_operator import (
    DiscretizedOperator,
    WindowViolationError,
    _jsonable,
    assemble_trace_operator,
)
from .s_numbers import approximation_numbers_hilbert

__all__ = [
    "ZERO_REL",
    "InsufficientSpectrumError",
    "DecayFit",
    "SpectrumReport",
    "order_by_modulus",
    "nonzero_part",
    "eigen_spectrum",
    "theoretical_exponent",
    "theoretical_snumber_exponent",
    "fit_decay_exponent",
    "fit_upper_envelope",
    "assess_decay",
    "snumber_exponent_check",
    "write_spectrum_csv",
]

ZERO_REL = 1e-12
"""Relative floor: moduli at or below ``ZERO_REL * |lambda_1|`` count as zero."""


class InsufficientSpectrumError(ValueError):
    """Raised when too few nonzero values remain to fit a decay law."""


# ---------------------------------------------------------------------------
# Ordering
# ---------------------------------------------------------------------------


def order_by_modulus(values) -> np.ndarray:
    """Sort complex values by decreasing modulus with a deterministic tie-break.

    Ties in modulus are broken by decreasing real part, then by decreasing
    imaginary part, so conjugate pairs always appear with the positive
    imaginary part first and reruns produce identical orderings.
    """
    vals = np.asarray(values, dtype=np.complex128).ravel()
    if vals.size == 0:
        return vals
    if not np.all(np.isfinite(vals)):
        raise ValueError("cannot order non-finite eigenvalues")
    order = np.lexsort((-vals.imag, -vals.real, -np.abs(vals)))
    return vals[order]


def nonzero_part(values) -> np.ndarray:
    """Ordered values with the near-zero tail dropped.

    Values of modulus at most ``ZERO_REL`` times the largest modulus are
    treated as zeros of a finite-rank remainder and removed; the zero
    sequence itself yields an empty array.
    """
    ordered = order_by_modulus(values)
    if ordered.size == 0:
        return ordered
    mods = np.abs(ordered)
    if mods[0] == 0.0:
        return ordered[:0]
    return ordered[mods > ZERO_REL * mods[0]]


def _nonzero_moduli(values) -> np.ndarray:
    return np.abs(nonzero_part(values))


# ---------------------------------------------------------------------------
# Eigensolve
# ---------------------------------------------------------------------------


def eigen_spectrum(
    op,
    *,
    symmetric: bool | None = None,
    residual_tol: float | None = 1e-8,
) -> np.ndarray:
    """Full spectrum of an assembled operator, ordered by decreasing modulus.

    Accepts a :class:`~fracspectra.fractal_operator.DiscretizedOperator`
    (whose ``symmetric`` flag selects the solver) or a bare square matrix
    (Hermitian structure is detected unless ``symmetric`` is forced).  The
    Hermitian path returns real eigenvalues and certifies the top 50
    eigenpairs by the residual bound ``||K v - lambda v|| <= residual_tol *
    ||K||``; pass ``residual_tol=None`` to skip the certificate.  Solver
    failures are re-raised together with the assembly record so the failing
    operator can be identified.
    """
    if isinstance(op, DiscretizedOperator):
        mat = op.matrix
        provenance = op.assembly
        hermitian = op.symmetric if symmetric is None else bool(symmetric)
    else:
        mat = np.asarray(op)
        provenance: dict = {}
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("eigen_spectrum needs a square matrix")
        if symmetric is None:
            scale = float(np.abs(mat).max()) if mat.size else 0.0
            hermitian = bool(
                np.allclose(mat, mat.conj().T, rtol=0.0, atol=1e-12 * max(scale, 1e-300))
            )
        else:
            hermitian = bool(symmetric)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError("eigen_spectrum needs a square matrix")
    if mat.size == 0:
        return np.zeros(0, dtype=np.complex128)
    if not np.all(np.isfinite(mat)):
        raise ValueError("operator matrix contains non-finite entries")

    try:
        if hermitian:
            w, v = scipy.linalg.eigh(mat)
            norm = float(np.abs(w).max())
            if residual_tol is not None and norm > 0.0:
                top = np.argsort(-np.abs(w), kind="stable")[: min(50, w.size)]
                res = np.linalg.norm(mat @ v[:, top] - v[:, top] * w[top], axis=0)
                worst = float(res.max())
                if worst > residual_tol * norm:
                    raise RuntimeError(
                        f"eigenpair residual {worst:.3e} exceeds "
                        f"{residual_tol:.1e} * ||K|| = {residual_tol * norm:.3e}; "
                        f"assembly record: {provenance}"
                    )
            vals = w.astype(np.complex128)
        else:
            vals = scipy.linalg.eigvals(mat)
    except scipy.linalg.LinAlgError as exc:
        raise RuntimeError(
            f"eigensolver did not converge ({exc}); assembly record: {provenance}"
        ) from exc
    if not np.all(np.isfinite(vals)):
        raise RuntimeError(
            f"eigensolver returned non-finite values; assembly record: {provenance}"
        )
    return order_by_modulus(vals)


# ---------------------------------------------------------------------------
# Predicted exponents
# ---------------------------------------------------------------------------


def _check_rate_window(ambient_dim: int, dimension: float, s: float, p: float) -> float:
    if not ambient_dim >= 1:
        raise WindowViolationError("ambient dimension must be a positive integer")
    if not 0.0 < dimension < ambient_dim:
        raise WindowViolationError(
            f"set dimension d = {dimension!r} must lie strictly between 0 and "
            f"the ambient dimension {ambient_dim}"
        )
    if not p > 0.0:
        raise WindowViolationError(f"integrability exponent p = {p!r} must be positive")
    sp = s * p
    upper_ok = sp <= ambient_dim or math.isclose(sp, ambient_dim, rel_tol=0.0, abs_tol=1e-12)
    if not (sp > ambient_dim - dimension and upper_ok):
        raise WindowViolationError(
            f"smoothness-integrability product s*p = {sp:.6f} must lie in "
            f"(n - d, n] = ({ambient_dim - dimension:.6f}, {ambient_dim}]"
        )
    return sp


def theoretical_exponent(ambient_dim: int, dimension: float, s: float, p: float) -> float:
    """Predicted eigenvalue-decay exponent ``-1 + (n - s*p)/d``.

    Valid on the compactness window ``n - d < s*p <= n``; at the upper
    boundary ``s*p = n`` the exponent is exactly ``-1``.
    """
    sp = _check_rate_window(ambient_dim, dimension, s, p)
    return -1.0 + (ambient_dim - sp) / dimension


def theoretical_snumber_exponent(
    ambient_dim: int, dimension: float, s: float, p: float
) -> float:
    """Predicted approximation-number exponent ``-1/p + (n/p - s)/d``.

    Shares the window ``n - d < s*p <= n``; at ``s = n/p`` it collapses to
    ``-1/p``, and at ``p = 2`` it is exactly half of
    :func:`theoretical_exponent` (squared singular values of the restriction
    are the kernel-operator eigenvalues).
    """
    _check_rate_window(ambient_dim, dimension, s, p)
    return -1.0 / p + (ambient_dim / p - s) / dimension


# ---------------------------------------------------------------------------
# Decay fits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecayFit:
    """A fitted line through ``(log k, log |lambda_k|)`` on a rank window."""

    k_lo: int
    k_hi: int
    slope: float
    intercept: float
    residual: float
    kind: str = "least-squares"
    quantile: float | None = None

    def __post_init__(self) -> None:
        if not 1 <= self.k_lo < self.k_hi:
            raise ValueError(f"fit window [{self.k_lo}, {self.k_hi}] is not increasing")


def _fit_window(count: int, k_lo: int, k_hi: int | None) -> tuple[int, int]:
    """Resolve the rank window against the nonzero count.

    The default upper edge is ``min(0.2 * count, 400)``: the head of the
    spectrum is excluded because the first few eigenvalues carry lattice
    artifacts, and the deep tail is excluded because discretization corrupts
    it.  At least five points must remain.
    """
    if count < 30:
        raise InsufficientSpectrumError(
            f"need at least 30 nonzero values to fit a decay law, got {count}"
        )
    k_lo = int(k_lo)
    if k_lo < 1:
        raise ValueError("fit window must start at rank 1 or later")
    if k_hi is None:
        k_hi = int(min(0.2 * count, 400.0))
    k_hi = min(int(k_hi), count)
    if k_hi - k_lo + 1 < 5:
        raise InsufficientSpectrumError(
            f"fit window [{k_lo}, {k_hi}] holds fewer than 5 points"
        )
    return k_lo, k_hi


def _window_logs(values, k_lo: int, k_hi: int | None) -> tuple[int, int, np.ndarray, np.ndarray]:
    mods = _nonzero_moduli(values)
    k_lo, k_hi = _fit_window(mods.size, k_lo, k_hi)
    x = np.log(np.arange(k_lo, k_hi + 1, dtype=float))
    y = np.log(mods[k_lo - 1 : k_hi])
    return k_lo, k_hi, x, y


def fit_decay_exponent(values, *, k_lo: int = 10, k_hi: int | None = None) -> DecayFit:
    """Least-squares decay exponent of ``log |lambda_k|`` versus ``log k``.

    The fit always runs on moduli sorted in decreasing order, so sign or
    phase patterns in the input cannot change the slope.  Entries below the
    ``ZERO_REL`` floor are dropped first; at least 30 nonzero values are
    required.  ``k_hi=None`` selects the default window policy of
    ``[k_lo, min(0.2 * count, 400)]``.
    """
    k_lo, k_hi, x, y = _window_logs(values, k_lo, k_hi)
    slope, intercept = np.polyfit(x, y, 1)
    rms = float(np.sqrt(np.mean((y - (intercept + slope * x)) ** 2)))
    return DecayFit(k_lo, k_hi, float(slope), float(intercept), rms)


def fit_upper_envelope(
    values,
    *,
    k_lo: int = 10,
    k_hi: int | None = None,
    quantile: float = 0.95,
) -> DecayFit:
    """Upper-envelope decay line by quantile regression on the log-log cloud.

    Minimizes the pinball loss at the given quantile with a linear program,
    so for ``quantile=0.95`` roughly 95 percent of the window points lie on
    or below the fitted line.  This is the right fit when the decay law is
    an upper bound only: points may drop far below the envelope without
    moving it.  The recorded residual is the mean pinball loss.
    """
    if not 0.0 < quantile < 1.0:
        raise ValueError("quantile must lie strictly between 0 and 1")
    k_lo, k_hi, x, y = _window_logs(values, k_lo, k_hi)
    m = x.size
    # variables: intercept, slope, above-line excess u >= 0, below-line slack v >= 0
    cost = np.concatenate([[0.0, 0.0], np.full(m, quantile), np.full(m, 1.0 - quantile)])
    a_eq = np.zeros((m, 2 + 2 * m))
    a_eq[:, 0] = 1.0
    a_eq[:, 1] = x
    a_eq[:, 2 : 2 + m] = np.eye(m)
    a_eq[:, 2 + m :] = -np.eye(m)
    bounds = [(None, None), (None, None)] + [(0.0, None)] * (2 * m)
    result = linprog(cost, A_eq=a_eq, b_eq=y, bounds=bounds, method="highs")
    if not result.success:
        raise RuntimeError(f"quantile-envelope fit did not converge: {result.message}")
    intercept, slope = float(result.x[0]), float(result.x[1])
    return DecayFit(
        k_lo,
        k_hi,
        slope,
        intercept,
        residual=float(result.fun) / m,
        kind="quantile-envelope",
        quantile=float(quantile),
    )


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectrumReport:
    """An ordered spectrum, its decay fit, and the verdict against a prediction.

    ``comparison`` is ``"two-sided"`` (pass when ``|slope - theoretical| <=
    tolerance``) or ``"upper"`` (pass when ``slope <= theoretical +
    tolerance``); construction re-derives the verdict and rejects an
    inconsistent ``passed`` flag.
    """

    eigenvalues: np.ndarray
    fit: DecayFit
    theoretical: float
    tolerance: float
    comparison: str
    passed: bool
    provenance: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        vals = np.asarray(self.eigenvalues, dtype=np.complex128).ravel()
        object.__setattr__(self, "eigenvalues", vals)
        mods = np.abs(vals)
        if vals.size == 0:
            raise ValueError("a spectrum report needs at least one eigenvalue")
        slack = 1e-12 * float(mods[0])
        if np.any(np.diff(mods) > slack):
            raise ValueError("eigenvalues must be ordered by nonincreasing modulus")
        if not 1 <= self.fit.k_lo < self.fit.k_hi <= vals.size:
            raise ValueError(
                f"fit window [{self.fit.k_lo}, {self.fit.k_hi}] must sit inside "
                f"[1, {vals.size}]"
            )
        if self.tolerance < 0.0:
            raise ValueError("tolerance must be nonnegative")
        if self.comparison not in ("two-sided", "upper"):
            raise ValueError("comparison must be 'two-sided' or 'upper'")
        if bool(self.passed) is not self._expected_verdict():
            raise ValueError(
                "verdict is inconsistent with the fitted slope, the prediction, "
                "and the tolerance"
            )

    def _expected_verdict(self) -> bool:
        if self.comparison == "two-sided":
            return abs(self.fit.slope - self.theoretical) <= self.tolerance
        return self.fit.slope <= self.theoretical + self.tolerance

    @property
    def count(self) -> int:
        return int(self.eigenvalues.size)

    @property
    def n_zero(self) -> int:
        mods = np.abs(self.eigenvalues)
        if mods.size == 0 or mods[0] == 0.0:
            return int(mods.size)
        return int(np.count_nonzero(mods <= ZERO_REL * mods[0]))

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def as_dict(self) -> dict:
        """JSON-ready summary: window, exponents, verdict, and provenance."""
        return {
            "count": self.count,
            "n_zero": self.n_zero,
            "window": [self.fit.k_lo, self.fit.k_hi],
            "exponents": {
                "fitted_slope": self.fit.slope,
                "intercept": self.fit.intercept,
                "fit_residual": self.fit.residual,
                "theoretical": self.theoretical,
            },
            "fit_kind": self.fit.kind,
            "quantile": self.fit.quantile,
            "comparison": self.comparison,
            "tolerance": self.tolerance,
            "verdict": self.verdict,
            "provenance": _jsonable(self.provenance),
        }


def assess_decay(
    values,
    *,
    theoretical: float,
    tolerance: float,
    k_lo: int = 10,
    k_hi: int | None = None,
    comparison: str = "two-sided",
    quantile: float = 0.95,
    provenance: dict | None = None,
) -> SpectrumReport:
    """Order a spectrum, fit its decay, and judge it against a prediction.

    ``comparison="two-sided"`` uses the least-squares fit;
    ``comparison="upper"`` fits the quantile upper envelope and accepts any
    slope at or below ``theoretical + tolerance``.
    """
    ordered = order_by_modulus(values)
    if comparison == "two-sided":
        fit = fit_decay_exponent(ordered, k_lo=k_lo, k_hi=k_hi)
        passed = abs(fit.slope - theoretical) <= tolerance
    elif comparison == "upper":
        fit = fit_upper_envelope(ordered, k_lo=k_lo, k_hi=k_hi, quantile=quantile)
        passed = fit.slope <= theoretical + tolerance
    else:
        raise ValueError("comparison must be 'two-sided' or 'upper'")
    return SpectrumReport(
        eigenvalues=ordered,
        fit=fit,
        theoretical=float(theoretical),
        tolerance=float(tolerance),
        comparison=comparison,
        passed=bool(passed),
        provenance=dict(provenance or {}),
    )


def snumber_exponent_check(
    measure: FractalMeasure,
    s: float,
    p: float,
    *,
    freq_cutoff: float = 256.0,
    n_modes: int = 513,
    tolerance: float = 0.05,
    k_lo: int = 10,
    k_hi: int | None = None,
) -> SpectrumReport:
    """Measure the approximation-number decay of the restriction operator.

    Only the Hilbert case ``p = 2`` is supported, where approximation
    numbers are exactly the singular values of the assembled restriction
    matrix.  The singular values are fitted like a spectrum and compared
    two-sidedly against ``-1/p + (n/p - s)/d``.
    """
    if not math.isclose(p, 2.0, rel_tol=0.0, abs_tol=1e-12):
        raise NotImplementedError(
            "approximation numbers are computed exactly only in the Hilbert "
            f"case p = 2, got p = {p!r}"
        )
    expected = theoretical_snumber_exponent(
        measure.ifs.ambient_dim, measure.dimension, s, 2.0
    )
    op = assemble_trace_operator(
        measure, s, freq_cutoff=freq_cutoff, n_modes=n_modes, completion="psd_sqrt"
    )
    seq = np.asarray(approximation_numbers_hilbert(op.matrix).values, dtype=float)
    return assess_decay(
        seq,
        theoretical=expected,
        tolerance=tolerance,
        k_lo=k_lo,
        k_hi=k_hi,
        comparison="two-sided",
        provenance={"quantity": "approximation-numbers", "assembly": op.assembly},
    )


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def write_spectrum_csv(values, path, *, preamble: str | None = None) -> None:
    """Write ``k,re,im,modulus`` rows with round-trip float formatting.

    Floats are rendered with ``repr``, the shortest exact representation,
    so identical spectra always produce byte-identical files.  An optional
    preamble is written first as a ``#`` comment line (used to stamp files
    with their provenance).
    """
    vals = np.asarray(values, dtype=np.complex128).ravel()
    lines = [] if preamble is None else [f"# {preamble}"]
    lines.append("k,re,im,modulus")
    for k, z in enumerate(vals, start=1):
        zc = complex(z)
        lines.append(f"{k},{zc.real!r},{zc.imag!r},{abs(zc)!r}")
    Path(path).write_text("\n".join(lines) + "\n")
