"""Exact two-qubit quantum model: states, measurement bases, Born probabilities.

Conventions
-----------
- Computational basis order is (HH, HV, VH, VV); H = (1, 0), V = (0, 1).
- A measurement basis is a real-plane rotation by an angle theta:
  outcome 0 projects onto cos(theta)|H> + sin(theta)|V>,
  outcome 1 projects onto sin(theta)|H> - cos(theta)|V>.
  The associated dichotomic observable is cos(2theta) Z + sin(2theta) X,
  so theta = 0 measures Z, theta = pi/4 measures X, and theta in
  {3pi/8, pi/8} measures (X -+ Z)/sqrt(2).
- Amplitudes may be complex even though the built-in states are real.

All values are immutable after construction and every operation is a pure
function, so everything here is safe for concurrent use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ATOL = 1e-12

BASIS_LABELS = ("HH", "HV", "VH", "VV")


class InvalidStateError(ValueError):
    """Raised for amplitude vectors or density matrices that cannot be a state."""


def mdl_angle() -> float:
    """Measurement angle arccos(sqrt(1/2 + 1/sqrt(5))) ~ 13.28 degrees."""
    return math.acos(math.sqrt(0.5 + 1.0 / math.sqrt(5.0)))


@dataclass(frozen=True)
class TwoQubitState:
    """A pure state (unit 4-vector) or a mixed state (4x4 density matrix).

    Use :func:`make_state` or :meth:`from_density` instead of constructing
    directly; the constructors normalize and validate.
    """

    form: str  # "pure" | "mixed"
    vector: np.ndarray | None = None
    rho: np.ndarray | None = None

    def __post_init__(self):
        if self.form == "pure":
            v = np.array(self.vector, dtype=complex).reshape(4)
            if abs(np.vdot(v, v).real - 1.0) > ATOL:
                raise InvalidStateError("pure state is not normalized")
            object.__setattr__(self, "vector", v)
            v.setflags(write=False)
        elif self.form == "mixed":
            r = np.array(self.rho, dtype=complex).reshape(4, 4)
            if abs(np.trace(r).real - 1.0) > ATOL:
                raise InvalidStateError("density matrix trace != 1")
            if not np.allclose(r, r.conj().T, atol=ATOL):
                raise InvalidStateError("density matrix is not Hermitian")
            if np.linalg.eigvalsh(r).min() < -ATOL:
                raise InvalidStateError("density matrix has a negative eigenvalue")
            object.__setattr__(self, "rho", r)
            r.setflags(write=False)
        else:
            raise InvalidStateError(f"unknown state form {self.form!r}")

    @classmethod
    def from_density(cls, rho) -> "TwoQubitState":
        return cls(form="mixed", rho=np.asarray(rho, dtype=complex))

    def density(self) -> np.ndarray:
        """The state as a 4x4 density operator (pure states get |psi><psi|)."""
        if self.form == "pure":
            return np.outer(self.vector, self.vector.conj())
        return np.array(self.rho)


def make_state(kind) -> TwoQubitState:
    """Build a two-qubit state.

    Parameters
    ----------
    kind : str or sequence
        "chsh-maximal" for (|HV> + |VH>)/sqrt(2); "mdl-nonmaximal" for the
        non-maximally entangled state with amplitudes
        ((sqrt(5)-1)/2)/sqrt(3) on HV and ((sqrt(5)+1)/2)/sqrt(3) on VH;
        or a length-4 amplitude sequence (normalized on construction).

    Raises
    ------
    InvalidStateError
        For an unknown kind string or a custom vector with norm <= 1e-9.
    """
    if isinstance(kind, str):
        if kind == "chsh-maximal":
            amps = np.array([0.0, 1.0, 1.0, 0.0]) / math.sqrt(2.0)
        elif kind == "mdl-nonmaximal":
            s5 = math.sqrt(5.0)
            amps = np.array([0.0, (s5 - 1.0) / 2.0, (s5 + 1.0) / 2.0, 0.0])
            amps /= math.sqrt(3.0)
        else:
            raise InvalidStateError(f"unknown state kind {kind!r}")
        return TwoQubitState(form="pure", vector=amps)

    amps = np.asarray(kind, dtype=complex).reshape(4)
    norm = math.sqrt(np.vdot(amps, amps).real)
    if norm < 1e-9:
        raise InvalidStateError("custom amplitudes have (near-)zero norm")
    return TwoQubitState(form="pure", vector=amps / norm)


@dataclass(frozen=True)
class MeasurementBasis:
    """Projective qubit measurement parameterized by a rotation angle."""

    angle: float

    def outcome_vector(self, outcome: int) -> np.ndarray:
        c, s = math.cos(self.angle), math.sin(self.angle)
        if outcome == 0:
            return np.array([c, s], dtype=complex)
        if outcome == 1:
            return np.array([s, -c], dtype=complex)
        raise ValueError("outcome must be 0 or 1")

    def projector(self, outcome: int) -> np.ndarray:
        v = self.outcome_vector(outcome)
        return np.outer(v, v.conj())


Z_BASIS = MeasurementBasis(0.0)
X_BASIS = MeasurementBasis(math.pi / 4)


def chsh_basis_angles() -> tuple[dict[int, float], dict[int, float]]:
    """Angles for the maximally-entangled test: A in {Z, X}, B in {(X-Z)/sqrt2, (X+Z)/sqrt2}."""
    return {0: 0.0, 1: math.pi / 4}, {0: 3 * math.pi / 8, 1: math.pi / 8}


def mdl_basis_angles() -> tuple[dict[int, float], dict[int, float]]:
    """Angles for the Hardy-point test: A0(t), A0(t-pi/4), and the B bases at +pi/2."""
    t = mdl_angle()
    return {0: t, 1: t - math.pi / 4}, {0: t + math.pi / 2, 1: t + math.pi / 4}


def born_probs(state: TwoQubitState, basis_a: MeasurementBasis,
               basis_b: MeasurementBasis) -> np.ndarray:
    """Conditional outcome table P(ab|xy) for one basis pair.

    Returns a 2x2 array indexed [a, b]; entries are clipped of negative
    rounding dust and sum to 1 within 1e-12.
    """
    table = np.empty((2, 2))
    if state.form == "pure":
        psi = state.vector
        for a in (0, 1):
            va = basis_a.outcome_vector(a)
            for b in (0, 1):
                amp = np.vdot(np.kron(va, basis_b.outcome_vector(b)), psi)
                table[a, b] = (amp * amp.conjugate()).real
    else:
        rho = state.rho
        for a in (0, 1):
            for b in (0, 1):
                proj = np.kron(basis_a.projector(a), basis_b.projector(b))
                table[a, b] = np.trace(proj @ rho).real
    return np.clip(table, 0.0, None)


def correlator(cond_table) -> float:
    """E = P(00) + P(11) - P(01) - P(10) of a normalized 2x2 conditional table."""
    t = np.asarray(cond_table, dtype=float).reshape(2, 2)
    if abs(t.sum() - 1.0) > 1e-9:
        raise ValueError(f"conditional table sums to {t.sum()}, not 1")
    return float(t[0, 0] + t[1, 1] - t[0, 1] - t[1, 0])


@dataclass(frozen=True)
class NoiseModel:
    """White noise + H/V dephasing, plus per-arm detection efficiencies.

    The channel is rho' = (1 - white) * D(rho, dephasing) + white * I/4,
    where D scales every off-diagonal element of rho in the HV product
    basis by (1 - dephasing). Efficiencies do not act on the state; they
    are applied per arm as detection erasure during sampling.
    """

    white: float = 0.0
    dephasing: float = 0.0
    eta_a: float = 1.0
    eta_b: float = 1.0

    def __post_init__(self):
        for name in ("white", "dephasing", "eta_a", "eta_b"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} = {v} outside [0, 1]")


def apply_noise(state: TwoQubitState, noise: NoiseModel) -> TwoQubitState:
    """Mix the state with white noise and dephase HV coherences; returns a mixed state."""
    rho = state.density()
    dephased = rho * (1.0 - noise.dephasing)
    np.fill_diagonal(dephased, np.diagonal(rho))
    mixed = (1.0 - noise.white) * dephased + noise.white * np.eye(4) / 4.0
    return TwoQubitState.from_density(mixed)


def fidelity(state: TwoQubitState, ideal: TwoQubitState) -> float:
    """Overlap <ideal|rho|ideal> with a pure reference state."""
    if ideal.form != "pure":
        raise ValueError("reference state must be pure")
    psi = ideal.vector
    return float(np.real(psi.conj() @ state.density() @ psi))


def visibility(state: TwoQubitState, basis: MeasurementBasis) -> float:
    """|E| with both arms measuring in the same basis (interference quality)."""
    return abs(correlator(born_probs(state, basis, basis)))


def _bisect(f, lo: float, hi: float, tol: float = 1e-6) -> float:
    """Root of a monotone f on [lo, hi] by bisection (f(lo), f(hi) straddle 0)."""
    flo = f(lo)
    if flo == 0.0:
        return lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo < tol:
            return mid
        if (f(mid) > 0.0) == (flo > 0.0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def calibrate_visibilities(state: TwoQubitState, vis_hv: float, vis_da: float,
                           tol: float = 1e-4) -> NoiseModel:
    """Noise parameters hitting target visibilities in the HV and DA bases.

    One-dimensional bisection each: dephasing from the DA visibility at
    fixed white noise, then white noise from the HV visibility, iterated
    twice. Converges to `tol` on both visibilities.
    """
    pw, pd = 0.0, 0.0
    for _ in range(2):
        pd = _bisect(
            lambda p: visibility(apply_noise(state, NoiseModel(pw, p)), X_BASIS) - vis_da,
            0.0, 1.0, tol=tol * 1e-2)
        pw = _bisect(
            lambda p: visibility(apply_noise(state, NoiseModel(p, pd)), Z_BASIS) - vis_hv,
            0.0, 1.0, tol=tol * 1e-2)
        pd = _bisect(
            lambda p: visibility(apply_noise(state, NoiseModel(pw, p)), X_BASIS) - vis_da,
            0.0, 1.0, tol=tol * 1e-2)
    model = NoiseModel(pw, pd)
    got_hv = visibility(apply_noise(state, model), Z_BASIS)
    got_da = visibility(apply_noise(state, model), X_BASIS)
    if abs(got_hv - vis_hv) > tol or abs(got_da - vis_da) > tol:
        raise ValueError(f"calibration failed: reached ({got_hv}, {got_da})")
    return model


def calibrate_fidelity(state: TwoQubitState, target: float,
                       dephasing_ratio: float = 1.5) -> NoiseModel:
    """Noise parameters hitting a target fidelity to the (pure) input state.

    A single fidelity cannot pin down two parameters, so the dephasing/white
    split is held at `dephasing_ratio` (default matches the split found when
    calibrating the maximally entangled state to its two visibilities) and a
    common scale is bisected.
    """
    if not 0.25 <= target <= 1.0:
        raise ValueError("target fidelity must be in [1/4, 1]")

    def fid_at(scale: float) -> float:
        noisy = apply_noise(state, NoiseModel(scale, min(1.0, scale * dephasing_ratio)))
        return fidelity(noisy, state)

    scale = _bisect(lambda s: fid_at(s) - target, 0.0, 1.0, tol=1e-8)
    return NoiseModel(scale, min(1.0, scale * dephasing_ratio))
