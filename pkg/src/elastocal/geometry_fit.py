"""Identification of the compensator geometry from laser-tracker marker
traces.

Two closed-form fits: the attachment lever length L from the trace of the
link-side marker P1 (SVD/Procrustes with a scale), and the pivot location
p0 from the traces of the pivot-side markers P0j (joint algebraic circle
fit with a plane-normal split). Marker placement can be checked against
the balance conditions sum(R_j cos b_j) = sum(R_j sin b_j) = 0.
"""

import dataclasses

import numpy as np

from .errors import DegenerateDataError

ROLE_LINK = "link_attachment"
ROLE_PIVOT = "pivot_side"


@dataclasses.dataclass
class MarkerTrace:
    """Positions of one marker recorded over a sweep of joint 2.

    q2 is the commanded joint-2 value per sample (rad), positions the
    measured 3-vectors (m). radius/phase carry the nominal circle layout
    (R_j, beta_j) of pivot-side markers; they stay None for the link
    marker.
    """

    marker_id: str
    q2: np.ndarray
    positions: np.ndarray
    radius: float = None
    phase: float = None
    role: str = ROLE_PIVOT

    def __post_init__(self):
        self.q2 = np.asarray(self.q2, dtype=float).reshape(-1)
        self.positions = np.asarray(self.positions, dtype=float).reshape(-1, 3)
        if self.positions.shape[0] != self.q2.shape[0]:
            raise DegenerateDataError("trace sample counts disagree")
        if not np.all(np.isfinite(self.positions)):
            raise DegenerateDataError("trace positions must be finite")

    @property
    def n_samples(self):
        return self.q2.shape[0]


@dataclasses.dataclass
class GeometryFitResult:
    """Combined geometry fit: lever length, pivot point, plane frame."""

    L: float
    p0: np.ndarray
    a_x: float
    a_y: float
    rotation: np.ndarray
    plane_normal: np.ndarray
    residual_rms: float
    ci_half_widths: dict


def _require_samples(trace, min_span=None):
    if trace.n_samples < 3 or np.unique(trace.q2).size < 3:
        raise DegenerateDataError(
            f"trace {trace.marker_id}: need >= 3 samples with distinct q2"
        )
    if min_span is not None and np.ptp(trace.q2) < min_span:
        raise DegenerateDataError(
            f"trace {trace.marker_id}: q2 span {np.degrees(np.ptp(trace.q2)):.1f} deg "
            f"below {np.degrees(min_span):.1f} deg"
        )


def fit_link_length(trace):
    """Lever length L and plane rotation R from the P1 marker trace.

    Procrustes on the unit directions u_i = (cos q_i, sin q_i, 0): center
    positions and directions, take R = V U^T from the SVD of
    sum(u_hat p_hat^T) with the standard sign fix, then
    L = sum(p_hat^T R u_hat) / sum(u_hat^T u_hat).

    Returns (L, R).
    """
    _require_samples(trace, min_span=np.deg2rad(30.0))
    u = np.column_stack([np.cos(trace.q2), np.sin(trace.q2), np.zeros_like(trace.q2)])
    u_hat = u - u.mean(axis=0)
    p_hat = trace.positions - trace.positions.mean(axis=0)
    H = u_hat.T @ p_hat
    sv = np.linalg.svd(H, compute_uv=False)
    if sv[1] < 1e-12 * max(sv[0], 1.0):
        raise DegenerateDataError("q2 values carry no rotation information")
    U, _, Vt = np.linalg.svd(H)
    R = Vt.T @ U.T
    if np.linalg.det(R) < 0:
        V = Vt.T.copy()
        V[:, -1] *= -1.0
        R = V @ U.T
    L = float(np.sum(p_hat * (u_hat @ R.T)) / np.sum(u_hat * u_hat))
    return L, R


def fit_pivot_point(traces):
    """Pivot point p0 from one or more pivot-side marker traces.

    Joint algebraic circle fit: with per-trace centered positions p_hat
    and centered squared norms s_hat, the in-plane part of p0 solves
    2 M c = sum(s_hat p_hat) with M = sum(p_hat p_hat^T); the component
    along the rotation axis n (smallest singular direction of M) is the
    mean of the raw positions projected on n.

    Returns (p0, n) with n the unit plane normal.
    """
    if not traces:
        raise DegenerateDataError("need at least one pivot-side trace")
    p_hats, s_hats, raw = [], [], []
    for trace in traces:
        _require_samples(trace)
        p = trace.positions
        p_hat = p - p.mean(axis=0)
        sq = np.sum(p * p, axis=1)
        s_hat = sq - sq.mean()
        p_hats.append(p_hat)
        s_hats.append(s_hat)
        raw.append(p)
    p_hat = np.vstack(p_hats)
    s_hat = np.concatenate(s_hats)
    raw = np.vstack(raw)

    M = p_hat.T @ p_hat
    U, sv, Vt = np.linalg.svd(M)
    if sv[1] < 1e-12 * max(sv[0], 1.0):
        raise DegenerateDataError("pivot-side samples are collinear")
    n = Vt[-1]
    # sign convention so the plane frame is right-handed and stable
    k = int(np.argmax(np.abs(n)))
    if n[k] < 0:
        n = -n

    rhs = p_hat.T @ s_hat
    # pseudo-inverse of M: exact inverse when the data has out-of-plane
    # spread, restriction to the plane for exactly planar traces
    inv_sv = np.where(sv > 1e-12 * sv[0], 1.0 / np.where(sv > 0, sv, 1.0), 0.0)
    M_inv = Vt.T @ np.diag(inv_sv) @ U.T
    P = np.eye(3) - np.outer(n, n)
    p0 = 0.5 * P @ (M_inv @ rhs) + np.outer(n, n) @ raw.mean(axis=0)
    return p0, n


def plane_axes(n):
    """In-plane x/y axes of the compensator plane frame for normal n.

    x is the projection of the tracker x axis onto the plane (falls back
    to y when n is aligned with x), y completes the right-handed triad.
    """
    seed = np.array([1.0, 0.0, 0.0])
    if abs(n @ seed) > 1.0 - 1e-9:
        seed = np.array([0.0, 1.0, 0.0])
    x = seed - (seed @ n) * n
    x /= np.linalg.norm(x)
    y = np.cross(n, x)
    return x, y


def marker_balance_residual(traces):
    """Balance sums (sum R_j cos beta_j, sum R_j sin beta_j) in meters.

    Both vanish for an optimally placed marker set.
    """
    r_cos = 0.0
    r_sin = 0.0
    for trace in traces:
        if trace.radius is None or trace.phase is None:
            raise DegenerateDataError(
                f"trace {trace.marker_id} has no nominal radius/phase"
            )
        r_cos += trace.radius * np.cos(trace.phase)
        r_sin += trace.radius * np.sin(trace.phase)
    return float(r_cos), float(r_sin)


def is_balanced(traces, tol=1e-6):
    r_cos, r_sin = marker_balance_residual(traces)
    return abs(r_cos) <= tol and abs(r_sin) <= tol


def _link_fit_ci(trace, L, R):
    """3-sigma half width of L from the per-sample residual scatter."""
    u = np.column_stack([np.cos(trace.q2), np.sin(trace.q2), np.zeros_like(trace.q2)])
    u_hat = u - u.mean(axis=0)
    p_hat = trace.positions - trace.positions.mean(axis=0)
    resid = p_hat - L * (u_hat @ R.T)
    m = trace.n_samples
    dof = max(1, 2 * m - 2)
    sigma_sq = float(np.sum(resid * resid)) / dof
    var_L = sigma_sq / float(np.sum(u_hat * u_hat))
    return 3.0 * np.sqrt(var_L), np.sqrt(float(np.mean(resid * resid)))


def _pivot_fit_ci(traces, p0, n):
    """3-sigma half widths of (a_x, a_y) from the circle-fit covariance.

    Linearized Gauss-Markov covariance of the geometric circle residuals
    r = |proj(p - p0)| - R_j over (center_x, center_y, R_1..R_k).
    """
    x_axis, y_axis = plane_axes(n)
    rows = []
    resid = []
    k = len(traces)
    for j, trace in enumerate(traces):
        d = trace.positions - p0
        d_in = d - np.outer(d @ n, n)
        dist = np.linalg.norm(d_in, axis=1)
        radius = dist.mean()
        unit = d_in / dist[:, None]
        for i in range(trace.n_samples):
            row = np.zeros(2 + k)
            row[0] = -(unit[i] @ x_axis)
            row[1] = -(unit[i] @ y_axis)
            row[2 + j] = -1.0
            rows.append(row)
            resid.append(dist[i] - radius)
    Jr = np.asarray(rows)
    resid = np.asarray(resid)
    dof = max(1, resid.size - (2 + k))
    sigma_sq = float(resid @ resid) / dof
    cov = sigma_sq * np.linalg.inv(Jr.T @ Jr)
    rms = np.sqrt(float(np.mean(resid * resid)))
    return 3.0 * np.sqrt(cov[0, 0]), 3.0 * np.sqrt(cov[1, 1]), rms


def identify_compensator_geometry(link_trace, pivot_traces):
    """Full geometry identification from all marker traces.

    Returns a GeometryFitResult with (L, a_x, a_y), the fitted plane
    frame, fit residuals and 3-sigma confidence half widths.
    """
    L, R = fit_link_length(link_trace)
    p0, n = fit_pivot_point(pivot_traces)
    x_axis, y_axis = plane_axes(n)
    a_x = float(p0 @ x_axis)
    a_y = float(p0 @ y_axis)
    ci_L, rms_link = _link_fit_ci(link_trace, L, R)
    ci_ax, ci_ay, rms_pivot = _pivot_fit_ci(pivot_traces, p0, n)
    return GeometryFitResult(
        L=L,
        p0=p0,
        a_x=a_x,
        a_y=a_y,
        rotation=R,
        plane_normal=n,
        residual_rms=float(np.hypot(rms_link, rms_pivot)),
        ci_half_widths={"L": float(ci_L), "a_x": float(ci_ax), "a_y": float(ci_ay)},
    )
