"""
Differential Ramsey interferometry on two condensates

Two interferometers share a common-mode phase that is scrambled from shot to
shot. Plotting one output against the other traces an ellipse whose shape
encodes the differential phase, which is recovered with a direct
conic-constrained least squares fit.
"""
############
# Standard #
############
import logging
from dataclasses import dataclass, field, asdict

###############
# Third Party #
###############
import numpy as np
import pandas as pd

##########
# Module #
##########
from .constants import GAMMA_RB87, RB87_QZ
from .utils.rng import substream
from .utils.exceptions import RamseyConfigError, DegenerateFitError

logger = logging.getLogger(__name__)

#: Minimum number of distinct second-pulse phases for an ellipse fit
MIN_PHASES = 6


def phase_grid(n):
    """``n`` evenly spaced second-pulse phases on ``[0, 2 pi)``"""
    return tuple(np.linspace(0, 2*np.pi, int(n), endpoint=False))


@dataclass(frozen=True)
class RamseyConfig:
    """
    Settings for one set of differential Ramsey shots

    Attributes
    ----------
    t : float
        Interrogation time in s

    pulse_phases : tuple
        Second pulse phase of every shot in rad

    contrast_a, contrast_b : float
        Fringe amplitude of each interferometer, in ``(0, 1]``

    noise : str
        ``'uniform'`` draws the common-mode phase on ``[0, 2 pi)``,
        ``'gaussian'`` draws it with RMS ``phase_noise``

    phase_noise : float
        RMS of the gaussian common-mode phase in rad

    readout_noise : float
        RMS of the additive noise on each measured F_z

    delta_b : float
        Field difference between the condensates in G

    b0 : float
        Bias field magnitude in G

    apply_qz : bool
        Multiply both contrasts by :func:`qz_contrast`

    gamma : float
        Gyromagnetic ratio in rad/s/G

    seed : int
    """
    t: float
    pulse_phases: tuple = field(default_factory=lambda: phase_grid(200))
    contrast_a: float = 0.8
    contrast_b: float = 0.8
    noise: str = 'uniform'
    phase_noise: float = 0.0
    readout_noise: float = 0.0
    delta_b: float = 0.0
    b0: float = 0.0
    apply_qz: bool = False
    gamma: float = GAMMA_RB87
    seed: int = 0

    def __post_init__(self):
        if not self.t > 0:
            raise RamseyConfigError("Interrogation time must be positive")
        for name in ('contrast_a', 'contrast_b'):
            val = getattr(self, name)
            if not 0 < val <= 1:
                raise RamseyConfigError("{} = {} is outside (0, 1]"
                                        "".format(name, val))
        if self.noise not in ('uniform', 'gaussian'):
            raise RamseyConfigError("Unknown phase noise distribution {!r}"
                                    "".format(self.noise))
        if self.phase_noise < 0 or self.readout_noise < 0:
            raise RamseyConfigError("Noise amplitudes must be non-negative")
        phases = tuple(float(p) for p in self.pulse_phases)
        if len(set(phases)) < MIN_PHASES:
            raise RamseyConfigError("At least {} distinct pulse phases are "
                                    "needed, got {}".format(MIN_PHASES,
                                                            len(set(phases))))
        object.__setattr__(self, 'pulse_phases', phases)

    @property
    def delta_phase(self):
        """Differential phase ``gamma dB T``"""
        return self.gamma * self.delta_b * self.t

    @property
    def contrasts(self):
        scale = qz_contrast(self.t, self.b0) if self.apply_qz else 1.0
        return self.contrast_a * scale, self.contrast_b * scale


@dataclass(frozen=True)
class ShotRecord:
    """
    One pair of spin projections

    ``common_phase`` is the realized common-mode phase, NaN for imported data.
    Noiseless shots satisfy ``|fz| <= contrast``. Readout noise is added on
    top and the sum is only clipped to the physical range ``[-1, 1]``, so a
    noisy projection may exceed its contrast.
    """
    phase: float
    fz_a: float
    fz_b: float
    common_phase: float = np.nan


def simulate_shots(cfg, *indices, stage='ramsey.shots'):
    """
    Draw one shot per configured pulse phase

    Parameters
    ----------
    cfg : RamseyConfig

    indices : int
        Coordinates of this dataset inside a larger scan, used to pick an
        independent random substream

    stage : str, optional
        Name of the random substream

    Returns
    -------
    shots : list of ShotRecord
    """
    rng = substream(cfg.seed, stage, *indices)
    phi = np.asarray(cfg.pulse_phases)
    n = len(phi)
    if cfg.noise == 'uniform':
        psi = rng.uniform(0, 2*np.pi, n)
    else:
        psi = rng.normal(0, cfg.phase_noise, n)
    c_a, c_b = cfg.contrasts
    fz_a = c_a * np.cos(psi - phi)
    fz_b = c_b * np.cos(psi - phi + cfg.delta_phase)
    if cfg.readout_noise > 0:
        fz_a = np.clip(fz_a + rng.normal(0, cfg.readout_noise, n), -1, 1)
        fz_b = np.clip(fz_b + rng.normal(0, cfg.readout_noise, n), -1, 1)
    logger.debug("Simulated %s shots with differential phase %.6f",
                 n, cfg.delta_phase)
    return [ShotRecord(*vals) for vals in zip(phi.tolist(), fz_a.tolist(),
                                              fz_b.tolist(), psi.tolist())]


def shots_to_points(shots):
    """(n, 2) array of (F_z,A, F_z,B)"""
    return np.array([(s.fz_a, s.fz_b) for s in shots], dtype=float)


def shots_to_frame(shots):
    """
    Tabulate shots with columns ``phase, FzA, FzB``
    """
    return pd.DataFrame({'phase': [s.phase for s in shots],
                         'FzA': [s.fz_a for s in shots],
                         'FzB': [s.fz_b for s in shots]},
                        columns=['phase', 'FzA', 'FzB'])


def shots_from_frame(frame):
    """
    Rebuild shots from a table written by :func:`shots_to_frame`
    """
    missing = {'phase', 'FzA', 'FzB'} - set(frame.columns)
    if missing:
        raise KeyError("Shot table is missing columns {}"
                       "".format(sorted(missing)))
    return [ShotRecord(float(row.phase), float(row.FzA), float(row.FzB))
            for row in frame.itertuples(index=False)]


def qz_contrast(t, b0, qz=RB87_QZ):
    """
    Contrast envelope from the quadratic Zeeman shift

    ``|cos(q_Z B0^2 T)|``

    Parameters
    ----------
    t : float or array
        Interrogation time in s

    b0 : float
        Bias field in G

    qz : float, optional
        Quadratic Zeeman coefficient in rad/s/G^2
    """
    return np.abs(np.cos(qz * b0**2 * np.asarray(t, dtype=float)))


def qz_maxima(b0, t_max, qz=RB87_QZ):
    """
    Interrogation times in ``[0, t_max]`` with unit contrast envelope
    """
    rate = qz * b0**2
    if rate == 0:
        return np.array([0.0])
    return np.arange(0, int(np.floor(t_max * rate / np.pi)) + 1) * np.pi / rate


def nearest_qz_maximum(t, b0, qz=RB87_QZ):
    """Contrast maximum closest to the interrogation time ``t``"""
    rate = qz * b0**2
    if rate == 0:
        return float(t)
    return float(np.round(t * rate / np.pi) * np.pi / rate)


@dataclass(frozen=True)
class EllipseFitResult:
    """
    Result of an ellipse reduction

    Attributes
    ----------
    conic : tuple
        Unit-norm coefficients (A, B, C, D, E, F) of
        ``A x^2 + B xy + C y^2 + D x + E y + F = 0`` with ``A > 0``

    delta_phi : float
        Folded differential phase in ``[0, pi]``

    uncertainty : float
        Jackknife standard error of ``delta_phi``, NaN when not computed

    discriminant : float
        ``B^2 - 4AC``, negative for an ellipse

    condition : float
        Condition number of the normalized scatter matrix

    n_points : int

    readout_noise : float
        Estimated RMS readout noise removed from the fit, zero when the
        correction is off
    """
    conic: tuple
    delta_phi: float
    uncertainty: float
    discriminant: float
    condition: float
    n_points: int
    readout_noise: float = 0.0

    def to_dict(self):
        info = asdict(self)
        info['conic'] = list(self.conic)
        return info


def _design(points):
    x, y = points[:, 0], points[:, 1]
    return np.column_stack([x*x, x*y, y*y, x, y, np.ones_like(x)])


#: Powers of x and y in each entry of the outer product of the design row
_X_POWERS = np.add.outer([2, 1, 0, 1, 0, 0], [2, 1, 0, 1, 0, 0])
_Y_POWERS = np.add.outer([0, 1, 2, 0, 1, 0], [0, 1, 2, 0, 1, 0])


def _noiseless_powers(u, var):
    """
    Unbiased estimates of ``u0**k``, ``k = 0..4``, from ``u = u0 + noise``
    with gaussian noise of variance ``var``
    """
    return np.stack([np.ones_like(u), u, u**2 - var, u**3 - 3*var*u,
                     u**4 - 6*var*u**2 + 3*var**2], axis=-1)


def _corrected_products(points, var):
    """
    Per point outer products of the design row with the readout noise
    removed in expectation

    Returns
    -------
    products : np.ndarray
        Shape (n, 6, 6), equal to the plain outer products for ``var = 0``
    """
    px = _noiseless_powers(points[:, 0], var)
    py = _noiseless_powers(points[:, 1], var)
    return px[:, _X_POWERS] * py[:, _Y_POWERS]


def readout_variance(points):
    """
    Estimate the variance of the readout noise from the scatter of points
    about an ellipse

    The noise is taken as gaussian, independent and equal on both axes. The
    estimate is the smallest variance at which the noise corrected scatter
    matrix becomes singular.

    Parameters
    ----------
    points : np.ndarray
        Centered (n, 2) points

    Returns
    -------
    var : float
        Zero for points that already lie on a conic
    """
    p0, p_plus, p_minus = (_corrected_products(points, var).sum(axis=0)
                           for var in (0., 1., -1.))
    # The corrected scatter matrix is p0 + var * p1 + var**2 * p2
    p1 = (p_plus - p_minus) / 2
    p2 = (p_plus + p_minus) / 2 - p0
    evals = np.linalg.eigvalsh(p0)
    if evals[0] <= 1e-12 * evals[-1]:
        return 0.
    # Singular points of the quadratic pencil as roots u = 1 / var
    try:
        companion = np.block([[np.zeros((6, 6)), np.eye(6)],
                              [-np.linalg.solve(p0, p2),
                               -np.linalg.solve(p0, p1)]])
        roots = np.linalg.eigvals(companion)
    except np.linalg.LinAlgError:
        logger.warning("Unable to estimate the readout noise")
        return 0.
    real = roots.real[(np.abs(roots.imag) <= 1e-8 * np.abs(roots))
                      & (roots.real > 0)]
    if not len(real):
        logger.warning("Point scatter is not consistent with readout noise, "
                       "no correction applied")
        return 0.
    return float(1 / real.max())


def _reduced_problems(scatter):
    """
    Reduced 3x3 eigenproblems of the stable direct fit

    Parameters
    ----------
    scatter : np.ndarray
        One or a stack of 6x6 scatter matrices

    Returns
    -------
    m : np.ndarray
        Stack of 3x3 matrices whose eigenvectors hold the quadratic terms

    t : np.ndarray
        Stack of 3x3 matrices mapping quadratic to linear terms
    """
    s1 = scatter[..., :3, :3]
    s2 = scatter[..., :3, 3:]
    s3 = scatter[..., 3:, 3:]
    t = -np.linalg.solve(s3, np.swapaxes(s2, -1, -2))
    m = s1 + s2 @ t
    # Premultiply by the inverse of the ellipse constraint block
    m = np.stack([m[..., 2, :] / 2, -m[..., 1, :], m[..., 0, :] / 2],
                 axis=-2)
    return m, t


def _ellipse_vectors(m):
    """Eigenvector with positive 4AC - B^2 for each reduced problem"""
    _, vecs = np.linalg.eig(m)
    vecs = np.real(vecs)
    cond = 4 * vecs[..., 0, :] * vecs[..., 2, :] - vecs[..., 1, :]**2
    idx = np.argmax(cond, axis=-1)
    best = np.take_along_axis(cond, idx[..., None], axis=-1)[..., 0]
    vec = np.take_along_axis(vecs, idx[..., None, None], axis=-1)[..., 0]
    return vec, best


def _cos_from_quadratic(a, b, c):
    return -b / (2 * np.sign(a) * np.sqrt(a * c))


def phase_from_conic(fit):
    """
    Folded differential phase of an ellipse

    ``|dphi| = arccos(-B / (2 sqrt(AC)))``

    Parameters
    ----------
    fit : EllipseFitResult or sequence
        Fit result or conic coefficients (A, B, C, ...)

    Returns
    -------
    delta_phi : float
        Phase in ``[0, pi]``
    """
    conic = getattr(fit, 'conic', fit)
    a, b, c = (float(v) for v in conic[:3])
    if a * c <= 0:
        raise DegenerateFitError("Conic with AC = {:.3e} is not an ellipse"
                                 "".format(a * c))
    cos = _cos_from_quadratic(a, b, c)
    if not abs(cos) < 1:
        raise DegenerateFitError("|cos(dphi)| = {:.15f} leaves the phase "
                                 "indeterminate".format(abs(cos)))
    return float(np.arccos(cos))


def unfold_phase(folded, reference=0., tol=0.25):
    """
    Restore sign and branch of a folded phase by continuity

    The ellipse reduction only returns ``|dphi| mod 2 pi``. Of the candidates
    ``+/- folded + 2 pi k`` the one closest to ``reference`` is kept.

    Parameters
    ----------
    folded : float
        Phase in ``[0, pi]``

    reference : float, optional
        Expected phase, e.g. a neighbouring point of the scan or the measured
        background

    tol : float, optional
        Candidates whose distances to the reference differ by less than this
        are reported as ambiguous

    Returns
    -------
    phase : float

    ambiguous : bool
    """
    if not np.isfinite(folded):
        return np.nan, True
    candidates = []
    for sign in (1, -1):
        base = sign * folded
        k = np.round((reference - base) / (2*np.pi))
        candidates.extend([base + 2*np.pi*k, base + 2*np.pi*(k + 1),
                           base + 2*np.pi*(k - 1)])
    candidates = np.unique(np.round(candidates, 12))
    dist = np.abs(candidates - reference)
    order = np.argsort(dist)
    best = float(candidates[order[0]])
    ambiguous = bool(len(order) > 1 and dist[order[1]] - dist[order[0]] < tol)
    if ambiguous:
        logger.warning("Phase %.4f is ambiguous against reference %.4f",
                       folded, reference)
    return best, ambiguous


def ellipse_fit(points, jackknife=True, correct_noise=True):
    """
    Direct least squares ellipse fit of paired spin projections

    Points are centered and scaled to unit RMS before the fit and the conic
    is mapped back exactly afterwards. Readout noise inflates the diagonal
    moments of the scatter matrix and pulls a plain algebraic fit towards
    ``pi / 2``. With ``correct_noise`` the noise variance is estimated by
    :func:`readout_variance` and its contribution removed from every moment
    before the ellipse-constrained eigenproblem is solved.

    Parameters
    ----------
    points : array-like or list of ShotRecord
        Pairs (F_z,A, F_z,B)

    jackknife : bool, optional
        Estimate the phase uncertainty from leave-one-out refits

    correct_noise : bool, optional
        Remove the readout noise bias, assuming equal gaussian noise on both
        projections

    Returns
    -------
    fit : EllipseFitResult

    Raises
    ------
    DegenerateFitError
        Too few points, collinear points, or no ellipse solution
    """
    if len(points) and isinstance(points[0], ShotRecord):
        points = shots_to_points(points)
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != 2:
        raise ValueError("Points must have shape (n, 2)")
    n = len(points)
    if n < MIN_PHASES:
        raise DegenerateFitError("An ellipse fit needs at least {} points, "
                                 "got {}".format(MIN_PHASES, n))
    center = points.mean(axis=0)
    spread = np.sqrt(np.mean((points - center)**2, axis=0))
    if np.any(spread == 0):
        raise DegenerateFitError("Points do not vary along both axes")
    # One scale for both axes keeps the readout noise isotropic
    scale = np.sqrt(np.mean(spread**2))
    scaled = (points - center) / scale
    sv = np.linalg.svd(scaled, compute_uv=False)
    if sv[-1] < 1e-9 * sv[0]:
        raise DegenerateFitError("Points are collinear, the differential "
                                 "phase is 0 or pi")

    design = _design(scaled)
    var = readout_variance(scaled) if correct_noise else 0.
    products = _corrected_products(scaled, var)
    scatter = products.sum(axis=0)
    try:
        m, t = _reduced_problems(scatter)
        quad, cond = _ellipse_vectors(m)
    except np.linalg.LinAlgError as err:
        raise DegenerateFitError("Scatter matrix is singular") from err
    if not cond > 0:
        logger.error("Direct fit returned no ellipse solution")
        raise DegenerateFitError("No ellipse solution, the differential "
                                 "phase is close to 0 or pi")
    a_n, b_n, c_n, d_n, e_n, f_n = np.concatenate([quad, t @ quad])

    (mx, my), s = center, scale
    a, b, c = a_n / s**2, b_n / s**2, c_n / s**2
    d_l, e_l = d_n / s, e_n / s
    d = -2*a*mx - b*my + d_l
    e = -2*c*my - b*mx + e_l
    f = a*mx**2 + b*mx*my + c*my**2 - d_l*mx - e_l*my + f_n
    conic = np.array([a, b, c, d, e, f])
    conic /= np.linalg.norm(conic) * np.sign(a)

    delta_phi = phase_from_conic(conic)
    uncertainty = _jackknife(products, scatter) if jackknife else np.nan
    fit = EllipseFitResult(conic=tuple(float(v) for v in conic),
                           delta_phi=delta_phi,
                           uncertainty=float(uncertainty),
                           discriminant=float(conic[1]**2
                                              - 4*conic[0]*conic[2]),
                           condition=float(np.linalg.cond(design.T @ design)),
                           n_points=n,
                           readout_noise=float(np.sqrt(var) * scale))
    logger.debug("Ellipse fit of %s points gives dphi = %.6f +/- %.6f "
                 "with readout noise %.4f", n, fit.delta_phi,
                 fit.uncertainty, fit.readout_noise)
    return fit


def _jackknife(products, scatter):
    """Leave-one-out standard error from downdated scatter matrices"""
    n = len(products)
    stack = scatter[None] - products
    try:
        m, _ = _reduced_problems(stack)
        quad, cond = _ellipse_vectors(m)
    except np.linalg.LinAlgError:
        logger.warning("Jackknife refits are singular, no uncertainty")
        return np.nan
    good = cond > 0
    if not np.all(good):
        logger.warning("%s of %s jackknife refits are not ellipses",
                       np.sum(~good), n)
    with np.errstate(invalid='ignore'):
        cos = _cos_from_quadratic(quad[good, 0], quad[good, 1],
                                  quad[good, 2])
    phases = np.arccos(np.clip(cos[np.isfinite(cos)], -1, 1))
    if len(phases) < 2:
        return np.nan
    return float(np.sqrt((len(phases) - 1) / len(phases)
                         * np.sum((phases - phases.mean())**2)))
