"""Binary quadratic encoding of the joint dual-band phase selection problem.

The exact objective (no approximation) is the solver objective of record:
decode bits -> composite gains -> calibrated metrics -> scalar cost. The QUBO
surrogate expands both |H_tot|^2 terms with a second-order Taylor polynomial of
each pairwise cosine about an expansion point, and uses first-order affine
surrogates of the QBER and log-SNR maps, giving F(x) = x^T Q x + c^T x + offset
that matches the exact objective at the expansion point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import OpticalParams, RfParams
from .metrics import (
    BOLTZMANN,
    Calibration,
    CostWeights,
    Metrics,
    link_metrics,
    resolve_weights,
)
from .ris import QUANTUM, CLASSICAL, ChannelState, PhaseConfig, RisConfig, decode_phases

_TWO_PI = 2.0 * math.pi


def index_of(n: int, band: str, k: int, cfg: RisConfig) -> int:
    """Variable index of bit k of element n in the given band.

    The quantum block comes first (element-major, bit-minor), the classical
    block second; the map is a bijection onto [0, N*(b_Q+b_C)).
    """
    if not 0 <= n < cfg.n_elements:
        raise IndexError(f"element {n} out of range")
    if band == QUANTUM:
        if not 0 <= k < cfg.bits_quantum:
            raise IndexError(f"quantum bit {k} out of range")
        return n * cfg.bits_quantum + k
    if band == CLASSICAL:
        if not 0 <= k < cfg.bits_classical:
            raise IndexError(f"classical bit {k} out of range")
        return cfg.n_elements * cfg.bits_quantum + n * cfg.bits_classical + k
    raise ValueError(f"unknown band {band!r}")


def build_index_map(cfg: RisConfig) -> tuple[tuple[int, str, int], ...]:
    """idx -> (element, band, bit) table matching index_of."""
    entries = []
    for n in range(cfg.n_elements):
        for k in range(cfg.bits_quantum):
            entries.append((n, QUANTUM, k))
    for n in range(cfg.n_elements):
        for k in range(cfg.bits_classical):
            entries.append((n, CLASSICAL, k))
    return tuple(entries)


@dataclass
class QuboModel:
    """Sparse symmetric binary quadratic model F(x) = x^T Q x + c^T x + offset.

    Pair weights are stored upper-triangular (i < j) as the full coefficient of
    x_i x_j, i.e. w_ij = 2 Q_ij of the symmetric matrix. The diagonal is empty:
    x^2 = x terms are folded into the linear vector.
    """

    dim: int
    linear: np.ndarray
    pair_i: np.ndarray
    pair_j: np.ndarray
    pair_w: np.ndarray
    offset: float
    index_map: tuple[tuple[int, str, int], ...] = ()
    n_elements: int = 0
    bits_quantum: int = 0
    bits_classical: int = 0

    def quad_matrix(self) -> np.ndarray:
        """Dense symmetric Q (zero diagonal)."""
        q = np.zeros((self.dim, self.dim))
        q[self.pair_i, self.pair_j] = self.pair_w / 2.0
        q[self.pair_j, self.pair_i] = self.pair_w / 2.0
        return q


@dataclass(frozen=True)
class ExpansionReport:
    """Measured deviation of the quadratic surrogate from the exact objective."""

    max_abs_deviation: float     # max relative |quadratic - exact| over samples
    samples: int


class ExactObjective:
    """Ground-truth cost evaluator with O(1) incremental bit flips.

    Wraps a ChannelState (cascades already calibration-scaled) and precomputes
    everything needed to score a bit vector: per-band complex totals are the
    only state that changes between configurations.
    """

    def __init__(self, state: ChannelState, weights: CostWeights, cal: Calibration,
                 optical: OpticalParams, rf: RfParams, cfg: RisConfig):
        if state.n_elements != cfg.n_elements:
            raise ValueError("state and RIS config disagree on element count")
        self.state = state
        self.cal = cal
        self.optical = optical
        self.rf = rf
        self.cfg = cfg
        self.n = cfg.n_elements
        self.bq = cfg.bits_quantum
        self.bc = cfg.bits_classical
        self.dim = cfg.bits_total
        self.h0q = state.direct_quantum.as_complex
        self.h0c = state.direct_classical.as_complex
        self.uq = np.asarray(state.cascade_quantum, dtype=complex)
        self.uc = np.asarray(state.cascade_classical, dtype=complex)
        self.direct_amp = abs(self.h0q)
        self.p_dark = optical.dark_count_prob
        from .metrics import calibrated_baseline_qber
        self.eps_base = calibrated_baseline_qber(self.direct_amp, cal, self.p_dark)
        noise_w = BOLTZMANN * rf.sys_temp_k * rf.bandwidth_hz
        self.snr_coeff = rf.tx_power_w * 10.0 ** (cal.rf_gain_offset_db / 10.0) / noise_w
        baseline_snr = self.snr_coeff * abs(self.h0c) ** 2
        self.alpha, self.beta = resolve_weights(
            weights, current_snr=baseline_snr if baseline_snr > 0 else None)
        # unit phasors per quantized level, shared by all evaluation paths
        self._phasor_q = np.exp(1j * _TWO_PI * np.arange(1 << self.bq) / (1 << self.bq))
        self._phasor_c = np.exp(1j * _TWO_PI * np.arange(1 << self.bc) / (1 << self.bc))
        self._wq = 1 << np.arange(self.bq)
        self._wc = 1 << np.arange(self.bc)

    # -- scalar pieces ---------------------------------------------------

    def qber_from_total(self, tq_abs: float) -> float:
        if tq_abs <= 0.0:
            return 0.5 + self.p_dark
        gain = tq_abs / self.direct_amp
        eps = (self.eps_base - self.p_dark) / gain + self.p_dark
        return min(max(eps, 0.0), 0.5 + self.p_dark)

    def cost_from_totals(self, tq: complex, tc: complex) -> float:
        eps = self.qber_from_total(abs(tq))
        gamma = self.snr_coeff * (tc.real * tc.real + tc.imag * tc.imag)
        return self.alpha * eps - self.beta * math.log2(1.0 + gamma)

    # -- bit-vector evaluation --------------------------------------------

    def levels_of(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=np.uint8)
        if x.shape != (self.dim,):
            raise ValueError(f"expected bit vector of length {self.dim}")
        lq = (x[: self.n * self.bq].reshape(self.n, self.bq) * self._wq).sum(axis=1)
        lc = (x[self.n * self.bq:].reshape(self.n, self.bc) * self._wc).sum(axis=1)
        return lq, lc

    def levels_to_bits(self, levels_q: np.ndarray, levels_c: np.ndarray) -> np.ndarray:
        """Inverse of levels_of."""
        bq_bits = ((np.asarray(levels_q)[:, None] >> np.arange(self.bq)) & 1)
        bc_bits = ((np.asarray(levels_c)[:, None] >> np.arange(self.bc)) & 1)
        return np.concatenate([bq_bits.ravel(), bc_bits.ravel()]).astype(np.uint8)

    def totals_of(self, x: np.ndarray) -> tuple[complex, complex]:
        lq, lc = self.levels_of(x)
        tq = self.h0q + (self.uq * self._phasor_q[lq]).sum()
        tc = self.h0c + (self.uc * self._phasor_c[lc]).sum()
        return complex(tq), complex(tc)

    def value(self, x: np.ndarray) -> float:
        tq, tc = self.totals_of(x)
        return self.cost_from_totals(tq, tc)

    def batch(self, xs: np.ndarray) -> np.ndarray:
        """Vectorized value() over rows of a (m, dim) bit matrix."""
        xs = np.asarray(xs, dtype=np.uint8)
        m = xs.shape[0]
        lq = (xs[:, : self.n * self.bq].reshape(m, self.n, self.bq) * self._wq).sum(axis=2)
        lc = (xs[:, self.n * self.bq:].reshape(m, self.n, self.bc) * self._wc).sum(axis=2)
        tq = self.h0q + (self.uq[None, :] * self._phasor_q[lq]).sum(axis=1)
        tc = self.h0c + (self.uc[None, :] * self._phasor_c[lc]).sum(axis=1)
        tq_abs = np.abs(tq)
        eps = np.where(
            tq_abs > 0,
            (self.eps_base - self.p_dark) / np.maximum(tq_abs / self.direct_amp, 1e-300)
            + self.p_dark,
            0.5 + self.p_dark,
        )
        eps = np.clip(eps, 0.0, 0.5 + self.p_dark)
        gamma = self.snr_coeff * np.abs(tc) ** 2
        return self.alpha * eps - self.beta * np.log2(1.0 + gamma)

    def qber_of(self, x: np.ndarray) -> float:
        tq, _ = self.totals_of(x)
        return self.qber_from_total(abs(tq))

    def qber_batch(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.uint8)
        m = xs.shape[0]
        lq = (xs[:, : self.n * self.bq].reshape(m, self.n, self.bq) * self._wq).sum(axis=2)
        tq_abs = np.abs(self.h0q + (self.uq[None, :] * self._phasor_q[lq]).sum(axis=1))
        eps = np.where(
            tq_abs > 0,
            (self.eps_base - self.p_dark) / np.maximum(tq_abs / self.direct_amp, 1e-300)
            + self.p_dark,
            0.5 + self.p_dark,
        )
        return np.clip(eps, 0.0, 0.5 + self.p_dark)

    def metrics_of(self, x: np.ndarray) -> Metrics:
        tq, tc = self.totals_of(x)
        return self.metrics_from_totals(tq, tc)

    def metrics_from_totals(self, tq: complex, tc: complex, weights: CostWeights | None = None) -> Metrics:
        w = weights if weights is not None else CostWeights(alpha=self.alpha, beta=self.beta)
        return link_metrics(self.direct_amp, abs(tq), abs(tc),
                            self.optical, self.rf, w, self.cal)

    def walk(self, x: np.ndarray) -> "ObjectiveWalk":
        return ObjectiveWalk(self, x)


class ObjectiveWalk:
    """Mutable evaluation state supporting O(1) single-bit flips."""

    def __init__(self, obj: ExactObjective, x: np.ndarray):
        self.obj = obj
        self.x = np.array(x, dtype=np.uint8, copy=True)
        lq, lc = obj.levels_of(self.x)
        self.levels_q = lq.astype(int)
        self.levels_c = lc.astype(int)
        self.tq, self.tc = obj.totals_of(self.x)
        self.value = obj.cost_from_totals(self.tq, self.tc)

    def _flip_parts(self, i: int) -> tuple[str, int, int, complex]:
        obj = self.obj
        split = obj.n * obj.bq
        if i < split:
            n, k = divmod(i, obj.bq)
            new_level = self.levels_q[n] ^ (1 << k)
            delta = obj.uq[n] * (obj._phasor_q[new_level] - obj._phasor_q[self.levels_q[n]])
            return (QUANTUM, n, new_level, delta)
        n, k = divmod(i - split, obj.bc)
        new_level = self.levels_c[n] ^ (1 << k)
        delta = obj.uc[n] * (obj._phasor_c[new_level] - obj._phasor_c[self.levels_c[n]])
        return (CLASSICAL, n, new_level, delta)

    def peek_flip(self, i: int) -> float:
        """Objective value if bit i were flipped; no state change."""
        band, _, _, delta = self._flip_parts(i)
        if band == QUANTUM:
            return self.obj.cost_from_totals(self.tq + delta, self.tc)
        return self.obj.cost_from_totals(self.tq, self.tc + delta)

    def apply_flip(self, i: int) -> None:
        band, n, new_level, delta = self._flip_parts(i)
        if band == QUANTUM:
            self.tq += delta
            self.levels_q[n] = new_level
        else:
            self.tc += delta
            self.levels_c[n] = new_level
        self.x[i] ^= 1
        self.value = self.obj.cost_from_totals(self.tq, self.tc)

    def set_element(self, band: str, n: int, new_level: int) -> None:
        """Set one element's phase level directly (used by coordinate descent)."""
        obj = self.obj
        if band == QUANTUM:
            self.tq += obj.uq[n] * (obj._phasor_q[new_level] - obj._phasor_q[self.levels_q[n]])
            old, width = self.levels_q[n], obj.bq
            self.levels_q[n] = new_level
            base = n * obj.bq
        else:
            self.tc += obj.uc[n] * (obj._phasor_c[new_level] - obj._phasor_c[self.levels_c[n]])
            old, width = self.levels_c[n], obj.bc
            self.levels_c[n] = new_level
            base = obj.n * obj.bq + n * obj.bc
        for k in range(width):
            self.x[base + k] = (new_level >> k) & 1
        self.value = obj.cost_from_totals(self.tq, self.tc)


def eval_exact(state: ChannelState, weights: CostWeights, cal: Calibration,
               optical: OpticalParams, rf: RfParams, cfg: RisConfig,
               x: np.ndarray) -> float:
    """Ground-truth cost of a bit vector (no Taylor or log linearization)."""
    return ExactObjective(state, weights, cal, optical, rf, cfg).value(x)


class _Accumulator:
    """Collects linear/pair/offset coefficients of a polynomial in bits."""

    def __init__(self, dim: int):
        self.linear = np.zeros(dim)
        self.pairs: dict[tuple[int, int], float] = {}
        self.offset = 0.0

    def add_pair(self, i: int, j: int, w: float) -> None:
        if i == j:
            self.linear[i] += w        # x^2 = x
            return
        key = (i, j) if i < j else (j, i)
        self.pairs[key] = self.pairs.get(key, 0.0) + w


def _add_affine_terms(acc: _Accumulator, coef: float, idxs: list[int],
                      weights: np.ndarray, t0: float, scale: float) -> None:
    """Accumulate coef * delta where delta = scale * (sum_k w_k x_k - t0)."""
    for k, i in enumerate(idxs):
        acc.linear[i] += coef * scale * weights[k]
    acc.offset += -coef * scale * t0


def _add_square_terms(acc: _Accumulator, coef: float, idxs: list[int],
                      weights: np.ndarray, t0: float, scale: float) -> None:
    """Accumulate coef * delta^2 for the same affine delta."""
    s2 = scale * scale
    for a, ia in enumerate(idxs):
        for b, ib in enumerate(idxs):
            acc.add_pair(ia, ib, coef * s2 * weights[a] * weights[b])
        acc.linear[ia] += -coef * s2 * 2.0 * t0 * weights[a]
    acc.offset += coef * s2 * t0 * t0


def _add_cross_terms(acc: _Accumulator, coef: float,
                     idxs_n: list[int], t0_n: float,
                     idxs_m: list[int], t0_m: float,
                     weights: np.ndarray, scale: float) -> None:
    """Accumulate coef * delta_n * delta_m for two affine deltas."""
    s2 = scale * scale
    for a, ia in enumerate(idxs_n):
        for b, ib in enumerate(idxs_m):
            acc.add_pair(ia, ib, coef * s2 * weights[a] * weights[b])
        acc.linear[ia] += -coef * s2 * t0_m * weights[a]
    for b, ib in enumerate(idxs_m):
        acc.linear[ib] += -coef * s2 * t0_n * weights[b]
    acc.offset += coef * s2 * t0_n * t0_m


def _expand_band_power(acc: _Accumulator, mult: float, h0: complex, u: np.ndarray,
                       levels0: np.ndarray, bits: int, idx_base: int) -> float:
    """Add mult * (P(x) - P0) for one band to the accumulator; returns P0.

    P(x) = |h0 + sum_n u_n e^{j delta_n}|^2 with u_n already rotated to the
    expansion point, expanded with cos(d + psi) ~ cos psi - sin psi d
    - cos psi d^2 / 2. delta_n is affine in the element's bits.
    """
    n = len(u)
    scale = _TWO_PI / (1 << bits)
    weights = (1 << np.arange(bits)).astype(float)
    h0_abs, h0_arg = abs(h0), math.atan2(h0.imag, h0.real)
    u_abs = np.abs(u)
    u_arg = np.angle(u)
    p0 = abs(h0 + u.sum()) ** 2

    idxs = [[idx_base + i * bits + k for k in range(bits)] for i in range(n)]
    t0 = levels0.astype(float)

    for i in range(n):
        a = 2.0 * h0_abs * u_abs[i]          # direct-cascade beat term
        phi = u_arg[i] - h0_arg
        _add_affine_terms(acc, mult * (-a * math.sin(phi)), idxs[i], weights, t0[i], scale)
        _add_square_terms(acc, mult * (-0.5 * a * math.cos(phi)), idxs[i], weights, t0[i], scale)
    for i in range(n):
        for j in range(i + 1, n):
            b = 2.0 * u_abs[i] * u_abs[j]    # cascade-cascade beat term
            phi = u_arg[i] - u_arg[j]
            sin_c = mult * (-b * math.sin(phi))
            cos_c = mult * (-0.5 * b * math.cos(phi))
            # (delta_i - delta_j) and (delta_i - delta_j)^2
            _add_affine_terms(acc, sin_c, idxs[i], weights, t0[i], scale)
            _add_affine_terms(acc, -sin_c, idxs[j], weights, t0[j], scale)
            _add_square_terms(acc, cos_c, idxs[i], weights, t0[i], scale)
            _add_square_terms(acc, cos_c, idxs[j], weights, t0[j], scale)
            _add_cross_terms(acc, -2.0 * cos_c, idxs[i], t0[i], idxs[j], t0[j],
                             weights, scale)
    return p0


def build_qubo(state: ChannelState, weights: CostWeights, cal: Calibration,
               optical: OpticalParams, rf: RfParams, cfg: RisConfig,
               expansion_point: PhaseConfig | None = None) -> QuboModel:
    """Assemble the quadratic surrogate of the exact cost about an expansion point.

    The QBER map (a function of |H_Q_tot|^2) and the log-SNR map are replaced
    by first-order affine surrogates at the expansion point, so the model
    reproduces the exact objective there and stays quadratic everywhere.
    """
    obj = ExactObjective(state, weights, cal, optical, rf, cfg)
    if expansion_point is None:
        expansion_point = decode_phases(np.zeros(cfg.bits_total, np.uint8), cfg)
    x0 = np.asarray(expansion_point.bits, dtype=np.uint8)
    levels0_q, levels0_c = obj.levels_of(x0)

    # cascades rotated to the expansion phases
    uq0 = obj.uq * obj._phasor_q[levels0_q]
    uc0 = obj.uc * obj._phasor_c[levels0_c]

    tq0 = obj.h0q + uq0.sum()
    tc0 = obj.h0c + uc0.sum()
    pq0 = abs(tq0) ** 2
    pc0 = abs(tc0) ** 2
    f0 = obj.cost_from_totals(tq0, tc0)

    # affine surrogates: d eps / d P_Q and -beta * d log2(1 + kappa P_C) / d P_C
    eps_excess = obj.eps_base - obj.p_dark
    if pq0 > 0:
        deps_dp = -0.5 * eps_excess * obj.direct_amp * pq0 ** -1.5
    else:
        deps_dp = 0.0
    gamma0 = obj.snr_coeff * pc0
    dlog_dp = obj.snr_coeff / ((1.0 + gamma0) * math.log(2.0))

    acc = _Accumulator(cfg.bits_total)
    acc.offset += f0
    if cfg.n_elements:
        p_const_q = _expand_band_power(acc, obj.alpha * deps_dp, obj.h0q, uq0,
                                       levels0_q, cfg.bits_quantum, 0)
        acc.offset += obj.alpha * deps_dp * (p_const_q - pq0)
        p_const_c = _expand_band_power(acc, -obj.beta * dlog_dp, obj.h0c, uc0,
                                       levels0_c, cfg.bits_classical,
                                       cfg.n_elements * cfg.bits_quantum)
        acc.offset += -obj.beta * dlog_dp * (p_const_c - pc0)

    pairs = sorted((k, v) for k, v in acc.pairs.items() if v != 0.0)
    pair_i = np.array([k[0] for k, _ in pairs], dtype=np.int32)
    pair_j = np.array([k[1] for k, _ in pairs], dtype=np.int32)
    pair_w = np.array([v for _, v in pairs], dtype=float)
    return QuboModel(
        dim=cfg.bits_total,
        linear=acc.linear,
        pair_i=pair_i,
        pair_j=pair_j,
        pair_w=pair_w,
        offset=acc.offset,
        index_map=build_index_map(cfg),
        n_elements=cfg.n_elements,
        bits_quantum=cfg.bits_quantum,
        bits_classical=cfg.bits_classical,
    )


def eval_quadratic(model: QuboModel, x: np.ndarray) -> float:
    """x^T Q x + c^T x + offset for a 0/1 vector."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.dim,):
        raise ValueError(f"expected bit vector of length {model.dim}")
    quad = float((model.pair_w * x[model.pair_i] * x[model.pair_j]).sum()) \
        if model.pair_w.size else 0.0
    return model.offset + float(model.linear @ x) + quad


class QuadraticObjective:
    """Solver-facing wrapper for a built QuboModel with O(degree) flips."""

    def __init__(self, model: QuboModel):
        self.model = model
        self.dim = model.dim
        self._adjacency: list[list[tuple[int, float]]] | None = None

    def value(self, x: np.ndarray) -> float:
        return eval_quadratic(self.model, x)

    def batch(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        out = xs @ self.model.linear + self.model.offset
        if self.model.pair_w.size:
            out = out + (xs[:, self.model.pair_i] * xs[:, self.model.pair_j]
                         * self.model.pair_w).sum(axis=1)
        return out

    def adjacency(self) -> list[list[tuple[int, float]]]:
        if self._adjacency is None:
            adj: list[list[tuple[int, float]]] = [[] for _ in range(self.dim)]
            for i, j, w in zip(self.model.pair_i, self.model.pair_j, self.model.pair_w):
                adj[int(i)].append((int(j), float(w)))
                adj[int(j)].append((int(i), float(w)))
            self._adjacency = adj
        return self._adjacency

    def walk(self, x: np.ndarray) -> "QuadraticWalk":
        return QuadraticWalk(self, x)


class QuadraticWalk:
    """Incremental single-flip evaluation of a quadratic model.

    Maintains the neighbour sums s_i = sum_j w_ij x_j, so a flip of bit i
    changes the value by (1 - 2 x_i)(c_i + s_i).
    """

    def __init__(self, obj: QuadraticObjective, x: np.ndarray):
        self.obj = obj
        self.x = np.array(x, dtype=np.uint8, copy=True)
        self.value = obj.value(self.x)
        model = obj.model
        self._sums = np.zeros(obj.dim)
        xf = self.x.astype(float)
        if model.pair_w.size:
            np.add.at(self._sums, model.pair_i, model.pair_w * xf[model.pair_j])
            np.add.at(self._sums, model.pair_j, model.pair_w * xf[model.pair_i])

    def _delta(self, i: int) -> float:
        return (1.0 - 2.0 * self.x[i]) * (self.obj.model.linear[i] + self._sums[i])

    def peek_flip(self, i: int) -> float:
        return self.value + self._delta(i)

    def apply_flip(self, i: int) -> None:
        step = 1.0 - 2.0 * self.x[i]     # +1 for 0 -> 1, -1 for 1 -> 0
        self.value += self._delta(i)
        for j, w in self.obj.adjacency()[i]:
            self._sums[j] += w * step
        self.x[i] ^= 1


def expansion_error(state: ChannelState, weights: CostWeights, cal: Calibration,
                    optical: OpticalParams, rf: RfParams, cfg: RisConfig,
                    samples: int, rng_seed: int,
                    expansion_point: PhaseConfig | None = None,
                    max_step: int | None = None) -> ExpansionReport:
    """Max relative deviation of the quadratic surrogate over sampled bit vectors.

    With max_step=None the samples cover the full bit hypercube, which at
    coarse quantization exercises phase deviations up to almost a full turn.
    A small max_step restricts every element to within that many quantization
    levels of the expansion point, i.e. the small-angle neighbourhood where
    the second-order cosine model is meaningful.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    obj = ExactObjective(state, weights, cal, optical, rf, cfg)
    model = build_qubo(state, weights, cal, optical, rf, cfg, expansion_point)
    rng = np.random.default_rng(rng_seed)
    if max_step is None:
        xs = rng.integers(0, 2, size=(samples, cfg.bits_total), dtype=np.uint8)
    else:
        if expansion_point is None:
            expansion_point = decode_phases(np.zeros(cfg.bits_total, np.uint8), cfg)
        lev_q0, lev_c0 = obj.levels_of(np.asarray(expansion_point.bits, np.uint8))
        n = cfg.n_elements
        dq = rng.integers(-max_step, max_step + 1, size=(samples, n))
        dc = rng.integers(-max_step, max_step + 1, size=(samples, n))
        lq = np.clip(lev_q0 + dq, 0, (1 << cfg.bits_quantum) - 1)
        lc = np.clip(lev_c0 + dc, 0, (1 << cfg.bits_classical) - 1)
        xs = np.stack([obj.levels_to_bits(lq[i], lc[i]) for i in range(samples)])
    exact = obj.batch(xs)
    quad = QuadraticObjective(model).batch(xs)
    dev = np.abs(quad - exact) / (np.abs(exact) + 1e-300)
    return ExpansionReport(max_abs_deviation=float(dev.max()), samples=samples)


# --- plain-text sparse triplet export -----------------------------------------

def export_qubo(model: QuboModel, path: str, comments: list[str] | None = None) -> None:
    """Write the model as a plain-text sparse triplet file.

    Format: '#' comment lines, a header 'qubo <dim> <n_linear> <n_quadratic>
    <offset>', then 'i i value' lines for nonzero linear terms and 'i j value'
    (i < j) for pair terms, zero-based, 17 significant digits.
    """
    lin_idx = np.nonzero(model.linear)[0]
    lines = []
    for c in comments or []:
        lines.append(f"# {c}")
    lines.append(f"qubo {model.dim} {len(lin_idx)} {len(model.pair_w)} "
                 f"{model.offset:.16e}")
    for i in lin_idx:
        lines.append(f"{i} {i} {model.linear[i]:.16e}")
    for i, j, w in zip(model.pair_i, model.pair_j, model.pair_w):
        lines.append(f"{i} {j} {w:.16e}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_qubo(path: str) -> QuboModel:
    """Read a model written by export_qubo (index metadata is not recovered)."""
    dim = None
    n_lin = n_quad = 0
    offset = 0.0
    linear = None
    pi: list[int] = []
    pj: list[int] = []
    pw: list[float] = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("qubo"):
                _, d, nl, nq, off = line.split()
                dim, n_lin, n_quad, offset = int(d), int(nl), int(nq), float(off)
                linear = np.zeros(dim)
                continue
            if dim is None:
                raise ValueError("triplet data before the qubo header")
            i_s, j_s, v_s = line.split()
            i, j, v = int(i_s), int(j_s), float(v_s)
            if not (0 <= i < dim and 0 <= j < dim):
                raise ValueError(f"index out of range in line {line!r}")
            if i == j:
                linear[i] = v
            else:
                if i > j:
                    raise ValueError("pair entries must satisfy i < j")
                pi.append(i)
                pj.append(j)
                pw.append(v)
    if dim is None:
        raise ValueError("missing qubo header line")
    if len(pw) != n_quad or int(np.count_nonzero(linear)) != n_lin:
        raise ValueError("header counts disagree with triplet data")
    return QuboModel(dim=dim, linear=linear, pair_i=np.array(pi, np.int32),
                     pair_j=np.array(pj, np.int32), pair_w=np.array(pw),
                     offset=offset)
