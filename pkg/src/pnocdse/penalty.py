"""Crosstalk and loss models for DWDM microring links.

Covers the modulator crosstalk penalty, the cascaded filter-bank crosstalk
integral, through losses of active/half-detuned ring banks, and the two
aggregate penalty formulations (BER-optimal vs datarate-BER-balanced).

The crosstalk kernel is sinc^2 (NRZ-shaped spectrum, frequency normalized to
the baud rate) weighted by ring drop/through responses; every ring response
is a first-order Lorentzian whose half-width is the configured fraction of
the ring FWHM. Integrals run on a shared absolute-frequency grid so a whole
bank is one vectorized pass; a scalar adaptive-Simpson path and an
offset fixed-grid trapezoid path exist for cross-checking.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, fields
from functools import lru_cache

import numpy as np
from scipy.special import sici

from .params import (GLOBALS, ConfigError, PnocProfile, SignalingParams,
                     SignalingScheme, db_to_linear)

ALLOWED_N_LAMBDA = (1, 2, 4, 8, 16, 32, 64, 128)


class InfeasiblePenalty(ValueError):
    """Crosstalk too large for the link to close at the BER target."""


class QuadratureError(RuntimeError):
    """Numerical integration failed to converge."""


class XiConvention(enum.Enum):
    """Normalization of the ring FWHM into the Lorentzian half-width."""
    HALF = "half"     # xi = FWHM / (2 * BaR): Lorentzian FWHM equals the ring FWHM
    FULL = "full"     # xi = FWHM / BaR

    def xi(self, fwhm_ghz: float, baud_gbaud: float) -> float:
        div = 2.0 if self is XiConvention.HALF else 1.0
        return fwhm_ghz / (div * baud_gbaud)


class Eq11Mode(enum.Enum):
    """Reading of the ring-bank through-loss formula."""
    TRANSMITTED = "transmitted"   # -10 log10(1 - sum Gamma)
    LITERAL = "literal"           # -10 log10(sum Gamma)


class FreqMap(enum.Enum):
    """Speed used to map the wavelength grid onto frequencies."""
    VSI = "vsi"       # published in-silicon speed
    C = "c"           # vacuum speed of light

    @property
    def speed_m_s(self) -> float:
        return GLOBALS.v_si_m_s if self is FreqMap.VSI else GLOBALS.c_m_s


class DetuneMode(enum.Enum):
    FILTER = "filter"             # rings resonant on the channel grid
    ACTIVE_MR = "active_mr"       # modulator bank, own ring excluded
    INACTIVE_MR = "inactive_mr"   # bank parked half a channel off grid


@dataclass(frozen=True)
class LinkGeometry:
    """A candidate DWDM configuration: channel count, symbol rate, grid."""

    n_lambda: int
    baud_gbaud: float
    fsr_nm: float = 20.0
    base_wavelength_nm: float = 1550.0

    def __post_init__(self):
        if self.n_lambda not in ALLOWED_N_LAMBDA:
            raise ConfigError(
                f"n_lambda must be one of {ALLOWED_N_LAMBDA}, got {self.n_lambda}")
        if self.baud_gbaud <= 0:
            raise ConfigError(f"baud rate must be positive, got {self.baud_gbaud}")

    @property
    def channel_spacing_nm(self) -> float:
        return self.fsr_nm / (self.n_lambda + 1)

    def wavelengths_nm(self) -> np.ndarray:
        i = np.arange(1, self.n_lambda + 1, dtype=float)
        return self.base_wavelength_nm + i * self.channel_spacing_nm

    def frequencies_ghz(self, freq_map: FreqMap) -> np.ndarray:
        lam_m = self.wavelengths_nm() * 1e-9
        return freq_map.speed_m_s / lam_m / 1e9

    def ring_frequencies_ghz(self, mode: DetuneMode, freq_map: FreqMap) -> np.ndarray:
        lam = self.wavelengths_nm()
        if mode is DetuneMode.INACTIVE_MR:
            lam = lam - 0.5 * self.channel_spacing_nm
        return freq_map.speed_m_s / (lam * 1e-9) / 1e9

    def adjacent_spacing_ghz(self, freq_map: FreqMap) -> float:
        """Band-center adjacent-channel spacing in GHz (0 for a single channel)."""
        if self.n_lambda < 2:
            return 0.0
        f = self.frequencies_ghz(freq_map)
        return float(np.abs(np.diff(f)).mean())


@dataclass(frozen=True)
class QuadratureSettings:
    du: float = 0.02              # base normalized-frequency step
    tail: float = 40.0            # grid extension beyond outermost ring/signal
    rtol: float = 1e-8            # target relative change under step halving
    max_halvings: int = 3
    pair_f_max_envelope: float = 1e-12   # per-pair truncation envelope bound


class BankFwhmSource(enum.Enum):
    """Which ring bandwidth the through-loss banks present to a passing channel."""
    MODULATOR = "modulator"   # sender bank of modulator rings (published FWHM)
    FILTER = "filter"         # parked filter rings along the path


@dataclass(frozen=True)
class ModelSwitches:
    xi_convention: XiConvention = XiConvention.HALF
    eq11_mode: Eq11Mode = Eq11Mode.TRANSMITTED
    freq_map: FreqMap = FreqMap.VSI
    act_bank_fwhm: BankFwhmSource = BankFwhmSource.MODULATOR
    ss_act_loss_multiplier: float = 2.0   # two modulator rings per SS channel
    ss_extra_mr_loss_db: float = 0.0      # optional per-link constant for the 2nd ring

    @classmethod
    def from_model_config(cls, model: dict) -> "ModelSwitches":
        kw = {}
        if "xi_convention" in model:
            kw["xi_convention"] = XiConvention(model["xi_convention"])
        if "eq11_mode" in model:
            kw["eq11_mode"] = Eq11Mode(model["eq11_mode"])
        if "freq_map" in model:
            kw["freq_map"] = FreqMap(model["freq_map"])
        if "act_bank_fwhm" in model:
            kw["act_bank_fwhm"] = BankFwhmSource(model["act_bank_fwhm"])
        if "ss_act_loss_multiplier" in model:
            kw["ss_act_loss_multiplier"] = float(model["ss_act_loss_multiplier"])
        if "ss_extra_mr_loss_db" in model:
            kw["ss_extra_mr_loss_db"] = float(model["ss_extra_mr_loss_db"])
        return cls(**kw)


class Goal(enum.Enum):
    BER_OPTIMAL = "ber_optimal"
    DR_BER_BALANCED = "dr_ber_balanced"

    @classmethod
    def parse(cls, text: str) -> "Goal":
        key = text.strip().lower()
        aliases = {"ber_optimal": cls.BER_OPTIMAL, "bero": cls.BER_OPTIMAL,
                   "optimal": cls.BER_OPTIMAL,
                   "dr_ber_balanced": cls.DR_BER_BALANCED,
                   "balanced": cls.DR_BER_BALANCED, "bal": cls.DR_BER_BALANCED}
        if key not in aliases:
            raise ConfigError(f"unknown design goal {text!r}")
        return aliases[key]


@dataclass(frozen=True)
class PenaltyBreakdown:
    """Itemized dB contributions to the total link power penalty."""

    goal: Goal
    p_mr_act: float
    p_mr_inact: float
    p_wgp: float
    p_wgb: float
    p_sp: float
    p_c: float
    pp_mod: float
    pp_fil: float
    pp_pam: float
    pp_intrf: float
    pp_er: float

    @property
    def total_db(self) -> float:
        return (self.p_mr_act + self.p_mr_inact + self.p_wgp + self.p_wgb
                + self.p_sp + self.p_c + self.pp_mod + self.pp_fil
                + self.pp_pam + self.pp_intrf + self.pp_er)

    def as_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["goal"] = self.goal.value
        d["total_db"] = self.total_db
        return d

    def as_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2)

    def as_table(self) -> str:
        names = [("MR through loss (active bank)", self.p_mr_act),
                 ("MR through loss (inactive bank)", self.p_mr_inact),
                 ("Waveguide propagation", self.p_wgp),
                 ("Waveguide bends", self.p_wgb),
                 ("Splitters", self.p_sp),
                 ("Coupler", self.p_c),
                 ("Modulator crosstalk penalty", self.pp_mod),
                 ("Filter crosstalk penalty", self.pp_fil),
                 ("Multi-level signaling penalty", self.pp_pam),
                 ("Superposition interference", self.pp_intrf),
                 ("Finite extinction penalty", self.pp_er)]
        lines = [f"  {label:34s} {val:7.3f} dB" for label, val in names]
        lines.append(f"  {'TOTAL':34s} {self.total_db:7.3f} dB")
        return "\n".join(lines)


def _sinc2(x: np.ndarray) -> np.ndarray:
    return np.sinc(x) ** 2


def _simpson_weights(n: int, du: float) -> np.ndarray:
    """Composite-Simpson quadrature weights for n uniform samples.

    Even sample counts get a trapezoid patch on the final interval.
    """
    if n < 3:
        w = np.full(n, du)
        w[0] = w[-1] = 0.5 * du
        return w
    m = n if n % 2 == 1 else n - 1
    w = np.zeros(n)
    w[:m] = du / 3.0
    w[1:m - 1:2] = 4.0 * du / 3.0
    w[2:m - 2:2] = 2.0 * du / 3.0
    w[m - 1] = du / 3.0
    if m != n:
        w[-2] += 0.5 * du
        w[-1] += 0.5 * du
    return w


def _sinc2_cdf(f0: float) -> float:
    """Integral of sinc^2 over [0, f0]: Si(2 pi f0)/pi - sin^2(pi f0)/(pi^2 f0)."""
    if f0 == 0.0:
        return 0.0
    si, _ = sici(2.0 * math.pi * f0)
    return si / math.pi - math.sin(math.pi * f0) ** 2 / (math.pi ** 2 * f0)


def _sinc2_tail(f0: float) -> float:
    """Two-sided mass of sinc^2 outside [-f0, f0]."""
    return max(0.0, 1.0 - 2.0 * _sinc2_cdf(f0))


class CrosstalkModel:
    """Evaluates ring-bank crosstalk integrals under a fixed set of switches.

    Bank-level results are cached per (geometry, fwhm, mode); the cache makes
    full duplet sweeps cheap since act/inact/filter banks recur across
    extinction ratios, goals, and profiles.
    """

    def __init__(self, switches: ModelSwitches | None = None,
                 quad: QuadratureSettings | None = None):
        self.switches = switches or ModelSwitches()
        self.quad = quad or QuadratureSettings()
        self._bank_cache: dict = {}
        self._grid_cache: dict = {}

    def _signal_grid(self, geometry: LinkGeometry, du: float):
        """Shared (grid, sinc^2 matrix, Simpson weights) per geometry and step.

        The grid spans all on-grid and half-shifted ring positions, so every
        detune mode of the same geometry reuses one sinc evaluation.
        """
        key = (geometry, round(du, 12), self.switches.freq_map)
        if key in self._grid_cache:
            return self._grid_cache[key]
        signals, _ = self._normalized_positions(geometry, DetuneMode.FILTER)
        # half-shifted rings sit within one spacing of the grid; the tail
        # margin dominates, so signal positions define the span
        u = self._grid(signals, du)
        s_each = _sinc2(u[None, :] - signals[:, None])
        w = _simpson_weights(len(u), du)
        entry = (u, s_each, w, signals)
        self._grid_cache[key] = entry
        return entry

    # -- grid machinery ------------------------------------------------------

    def _normalized_positions(self, geometry: LinkGeometry, mode: DetuneMode):
        fm = self.switches.freq_map
        signals = geometry.frequencies_ghz(fm) / geometry.baud_gbaud
        rings = geometry.ring_frequencies_ghz(mode, fm) / geometry.baud_gbaud
        return signals, rings

    def _grid(self, positions: np.ndarray, du: float) -> np.ndarray:
        lo = positions.min() - self.quad.tail
        hi = positions.max() + self.quad.tail
        n = int(math.ceil((hi - lo) / du)) + 1
        return lo + du * np.arange(n)

    @staticmethod
    def _log_through(u: np.ndarray, centers: np.ndarray, xi: float):
        """Per-ring and summed log through-transmission on the grid."""
        x = (u[None, :] - centers[:, None]) / xi
        x2 = x * x
        t = x2 / (1.0 + x2)
        np.clip(t, 1e-300, None, out=t)
        log_each = np.log(t)
        return log_each.sum(axis=0), log_each

    def _integrate(self, series_fn, du: float):
        """Step-halving Simpson convergence: series_fn(du) -> array of integrals."""
        prev = series_fn(du)
        for _ in range(self.quad.max_halvings):
            du /= 2.0
            cur = series_fn(du)
            scale = np.maximum(np.abs(cur), 1e-12)
            if np.all(np.abs(cur - prev) <= self.quad.rtol * scale + 1e-12):
                return cur
            prev = cur
        return prev

    @staticmethod
    def _simpson(y: np.ndarray, du: float) -> np.ndarray:
        """Composite Simpson along the last axis (pads odd-length tails with trapezoid)."""
        n = y.shape[-1]
        if n < 3:
            return np.trapezoid(y, dx=du)
        m = n if n % 2 == 1 else n - 1
        ys = y[..., :m]
        s = ys[..., 0] + ys[..., -1] + 4.0 * ys[..., 1:-1:2].sum(axis=-1) \
            + 2.0 * ys[..., 2:-2:2].sum(axis=-1)
        out = s * du / 3.0
        if m != n:
            out = out + 0.5 * du * (y[..., -2] + y[..., -1])
        return out

    # -- bank-level quantities ------------------------------------------------

    def bank_through_transmission(self, geometry: LinkGeometry, fwhm_ghz: float,
                                  mode: DetuneMode,
                                  du: float | None = None) -> np.ndarray:
        """Per-channel transmitted power fraction through the ring bank.

        ACTIVE_MR: channel j passes every ring but its own.
        INACTIVE_MR: all rings, parked half a channel off.
        """
        key = ("through", geometry, round(fwhm_ghz, 9), mode,
               self.switches.xi_convention, self.switches.freq_map, du)
        if key in self._bank_cache:
            return self._bank_cache[key]
        _, rings = self._normalized_positions(geometry, mode)
        xi = self.switches.xi_convention.xi(fwhm_ghz, geometry.baud_gbaud)
        exclude_self = mode is DetuneMode.ACTIVE_MR

        u, s_each, w, signals = self._signal_grid(geometry, du or self.quad.du)
        log_all, log_each = self._log_through(u, rings, xi)
        if exclude_self:
            trans = np.exp(log_all[None, :] - log_each)
        else:
            trans = np.broadcast_to(np.exp(log_all), s_each.shape)
        vals = (s_each * trans) @ w
        # beyond the grid the bank is transparent; add the analytic sinc^2
        # tail mass outside the covered window
        tails = np.array([_sinc2_tail(min(pj - u[0], u[-1] - pj)) for pj in signals])
        result = np.clip(vals + tails, 0.0, 1.0)
        self._bank_cache[key] = result
        return result

    def filter_bank_crosstalk(self, geometry: LinkGeometry, fwhm_ghz: float,
                              mode: DetuneMode = DetuneMode.FILTER,
                              du: float | None = None) -> np.ndarray:
        """Cumulative crosstalk fraction per filter: sigma_i = sum_{j != i} Gamma_ij."""
        key = ("sigma", geometry, round(fwhm_ghz, 9), mode,
               self.switches.xi_convention, self.switches.freq_map, du)
        if key in self._bank_cache:
            return self._bank_cache[key]
        if geometry.n_lambda == 1:
            out = np.zeros(1)
            self._bank_cache[key] = out
            return out
        _, rings = self._normalized_positions(geometry, mode)
        xi = self.switches.xi_convention.xi(fwhm_ghz, geometry.baud_gbaud)
        n = geometry.n_lambda

        u, s_each, w, signals = self._signal_grid(geometry, du or self.quad.du)
        s_all = s_each.sum(axis=0)
        log_cum = np.zeros_like(u)
        vals = np.empty(n)
        for i in range(n):
            x = (u - rings[i]) / xi
            x2 = x * x
            drop = 1.0 / (1.0 + x2)
            vals[i] = ((s_all - s_each[i]) * drop * np.exp(log_cum)) @ w
            log_cum += np.log(np.clip(x2 * drop, 1e-300, None))
        result = np.clip(vals, 0.0, None)
        self._bank_cache[key] = result
        return result

    def gamma_matrix(self, geometry: LinkGeometry, fwhm_ghz: float,
                     mode: DetuneMode, engine: str = "adaptive") -> np.ndarray:
        """Full Gamma[i, j] crosstalk-fraction matrix (i: ring, j: signal).

        `engine` selects the step-halving Simpson path ("adaptive") or the
        offset fixed-grid trapezoid oracle ("fixed").
        """
        signals, rings = self._normalized_positions(geometry, mode)
        xi = self.switches.xi_convention.xi(fwhm_ghz, geometry.baud_gbaud)
        n = geometry.n_lambda

        def matrix_at(du, offset=0.0, rule="simpson"):
            u = self._grid(np.concatenate([signals, rings]), du) + offset
            s_each = _sinc2(u[None, :] - signals[:, None])
            log_cum = np.zeros_like(u)
            out = np.empty((n, n))
            for i in range(n):
                x = (u - rings[i]) / xi
                drop = 1.0 / (1.0 + x * x)
                w = drop * np.exp(log_cum)
                integrand = s_each * w[None, :]
                if rule == "simpson":
                    out[i] = self._simpson(integrand, du)
                else:
                    out[i] = np.trapezoid(integrand, dx=du)
                t = np.clip(x * x / (1.0 + x * x), 1e-300, None)
                log_cum += np.log(t)
            return out

        if engine == "adaptive":
            prev = matrix_at(self.quad.du)
            du = self.quad.du
            for _ in range(self.quad.max_halvings):
                du /= 2.0
                cur = matrix_at(du)
                scale = np.maximum(np.abs(cur), 1e-12)
                if np.all(np.abs(cur - prev) <= self.quad.rtol * scale + 1e-12):
                    return np.clip(cur, 0.0, 1.0)
                prev = cur
            return np.clip(prev, 0.0, 1.0)
        if engine == "fixed":
            du = self.quad.du / 3.0
            return np.clip(matrix_at(du, offset=du / 2.0, rule="trapezoid"), 0.0, 1.0)
        raise ValueError(f"unknown engine {engine!r}")

    # -- spec-level operations -------------------------------------------------

    def crosstalk_fraction(self, i: int, j: int, geometry: LinkGeometry,
                           fwhm_ghz: float, mode: DetuneMode) -> float:
        """Gamma_ij for one (ring, signal) pair via scalar adaptive Simpson.

        Indices are 1-based channel indices; i != j for crosstalk terms.
        """
        n = geometry.n_lambda
        if not (1 <= i <= n and 1 <= j <= n):
            raise ValueError(f"channel indices must lie in 1..{n}")
        if i == j and mode is not DetuneMode.INACTIVE_MR:
            raise ValueError("crosstalk fraction needs i != j")
        signals, rings = self._normalized_positions(geometry, mode)
        xi = self.switches.xi_convention.xi(fwhm_ghz, geometry.baud_gbaud)
        pj = signals[j - 1]
        qi = rings[i - 1]
        upstream = rings[: i - 1]

        def integrand(F):
            u = F + pj
            x = (u - qi) / xi
            val = _sinc2(F) / (1.0 + x * x)
            for qk in upstream:
                xk = (u - qk) / xi
                val *= xk * xk / (1.0 + xk * xk)
            return val

        # truncation: envelope sinc^2 * Lorentzian < configured bound
        delta = abs(pj - qi)
        env = self.quad.pair_f_max_envelope
        f_max = max(50.0, delta + 50.0,
                    (xi * xi / (math.pi ** 2 * env)) ** 0.25)
        value, err, converged = _adaptive_simpson(integrand, -f_max, f_max,
                                                  rtol=1e-9, max_depth=48)
        if not converged:
            raise QuadratureError(
                f"Gamma integral did not converge for (i={i}, j={j}), "
                f"estimate {value:.3e} +/- {err:.1e}")
        return min(max(value, 0.0), 1.0)

    def worst_filter_sigma(self, geometry: LinkGeometry, fwhm_ghz: float) -> float:
        return float(self.filter_bank_crosstalk(geometry, fwhm_ghz).max())

    def mr_through_loss_db(self, geometry: LinkGeometry, fwhm_ghz: float,
                           active: bool) -> float:
        """Worst-channel through loss (dB) for the active or parked ring bank."""
        if geometry.n_lambda < 1:
            raise ConfigError("bank needs at least one channel")
        mode = DetuneMode.ACTIVE_MR if active else DetuneMode.INACTIVE_MR
        transmitted = self.bank_through_transmission(geometry, fwhm_ghz, mode)
        worst_t = float(transmitted.min())
        if self.switches.eq11_mode is Eq11Mode.TRANSMITTED:
            if worst_t <= 0.0:
                raise InfeasiblePenalty(
                    f"ring bank extinguishes a channel entirely "
                    f"(N={geometry.n_lambda}, BaR={geometry.baud_gbaud})")
            return -10.0 * math.log10(worst_t)
        sigma = max(1.0 - worst_t, 0.0)
        if sigma <= 0.0:
            return 0.0
        return -10.0 * math.log10(sigma)

    def modulator_penalty_db(self, params: SignalingParams,
                             geometry: LinkGeometry) -> float:
        """Eq.-4 style modulator crosstalk penalty at the worst (adjacent) spacing."""
        if params.fwhm_ghz <= 0:
            raise ValueError("FWHM must be positive")
        f_delta = geometry.adjacent_spacing_ghz(self.switches.freq_map)
        if f_delta == 0.0:
            return 0.0
        k = f_delta - params.delta_f_ghz if f_delta > 0 else f_delta
        t = (2.0 * k / params.fwhm_ghz) ** 2
        return -5.0 * math.log10((t + params.q0) / (t + 1.0))

    def filter_penalty_db(self, params: SignalingParams, geometry: LinkGeometry,
                          i: int | None = None) -> float:
        """Crosstalk power penalty of the i-th filter (1-based), or the worst one."""
        sigmas = self.filter_bank_crosstalk(geometry, params.filter_fwhm_ghz)
        sigma = float(sigmas.max() if i is None else sigmas[i - 1])
        return self._filter_penalty_from_sigma(sigma, params)

    @staticmethod
    def _filter_penalty_from_sigma(sigma: float, params: SignalingParams) -> float:
        if sigma == 0.0:
            return 0.0
        r = db_to_linear(params.extinction_ratio_db)
        if r <= 1.0:
            raise InfeasiblePenalty(
                f"extinction ratio {params.extinction_ratio_db} dB leaves no eye")
        arg = 1.0 - 0.5 * params.q_ber * sigma * (r + 1.0) / (r - 1.0)
        if arg <= 0.0:
            raise InfeasiblePenalty(
                f"filter crosstalk {sigma:.4g} exceeds the BER target headroom")
        return -10.0 * math.log10(arg)

    def total_penalty(self, goal: Goal, params: SignalingParams,
                      profile: PnocProfile, geometry: LinkGeometry) -> PenaltyBreakdown:
        """Aggregate link penalty under the chosen design goal."""
        act_fwhm = (params.fwhm_ghz
                    if self.switches.act_bank_fwhm is BankFwhmSource.MODULATOR
                    else params.filter_fwhm_ghz)
        act = self.mr_through_loss_db(geometry, act_fwhm, active=True)
        if params.scheme is SignalingScheme.PAM4_SS:
            act = act * self.switches.ss_act_loss_multiplier \
                + self.switches.ss_extra_mr_loss_db
        inact = self.mr_through_loss_db(geometry, params.filter_fwhm_ghz, active=False)
        pp_mod = pp_fil = pp_intrf = 0.0
        if goal is Goal.BER_OPTIMAL:
            pp_mod = self.modulator_penalty_db(params, geometry)
            pp_fil = self.filter_penalty_db(params, geometry)
            pp_intrf = params.pp_intrf_db
        return PenaltyBreakdown(
            goal=goal,
            p_mr_act=act,
            p_mr_inact=inact,
            p_wgp=profile.wgp_loss_db,
            p_wgb=profile.wgb_loss_db,
            p_sp=profile.splitter_loss_total_db,
            p_c=profile.coupler_loss_db,
            pp_mod=pp_mod,
            pp_fil=pp_fil,
            pp_pam=params.pp_pam_db,
            pp_intrf=pp_intrf,
            pp_er=params.pp_er_db,
        )


def _adaptive_simpson(f, a: float, b: float, rtol: float = 1e-9,
                      max_depth: int = 40):
    """Classic recursive adaptive Simpson on a scalar integrand.

    Returns (value, error_estimate, converged).
    """

    def simpson(fa, fm, fb, h):
        return h / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, m, b, fa, fm, fb, whole, depth):
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm = f(lm)
        frm = f(rm)
        left = simpson(fa, flm, fm, m - a)
        right = simpson(fm, frm, fb, b - m)
        err = left + right - whole
        if abs(err) <= 15.0 * rtol * max(abs(left + right), 1e-15):
            return left + right + err / 15.0, abs(err) / 15.0, False
        if depth >= max_depth:
            return left + right + err / 15.0, abs(err), True
        lv, le, lbad = recurse(a, lm, m, fa, flm, fm, left, depth + 1)
        rv, re, rbad = recurse(m, rm, b, fm, frm, fb, right, depth + 1)
        return lv + rv, le + re, lbad or rbad

    # split at the midpoint into panels to keep recursion shallow near features
    panels = 64
    edges = np.linspace(a, b, panels + 1)
    total = 0.0
    err_total = 0.0
    bad = False
    for lo, hi in zip(edges, edges[1:]):
        m = 0.5 * (lo + hi)
        flo, fm_, fhi = f(lo), f(m), f(hi)
        whole = simpson(flo, fm_, fhi, hi - lo)
        v, e, b_ = recurse(lo, m, hi, flo, fm_, fhi, whole, 0)
        total += v
        err_total += e
        bad = bad or b_
    return total, err_total, not bad
