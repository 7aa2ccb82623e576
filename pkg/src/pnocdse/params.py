"""Physical constants, signaling-scheme parameter sets, and PNoC architecture profiles.

All internal arithmetic is SI-based: frequencies in Hz, wavelengths in
meters, powers in linear mW. dB/dBm values live only at the boundaries
(published table values, reports) and go through the converters below.
"""
from __future__ import annotations

import configparser
import enum
import math
from dataclasses import dataclass, field, replace
from pathlib import Path


class ConfigError(ValueError):
    """Bad or inconsistent configuration input."""


# ---------------------------------------------------------------------------
# unit conversions

def db_to_linear(x_db: float) -> float:
    """10^(x/10): dB value -> dimensionless power ratio."""
    return 10.0 ** (x_db / 10.0)


def linear_to_db(ratio: float) -> float:
    """Inverse of db_to_linear. Ratio must be positive."""
    if ratio <= 0.0:
        raise ValueError(f"cannot express non-positive ratio {ratio} in dB")
    return 10.0 * math.log10(ratio)


def dbm_to_mw(p_dbm: float) -> float:
    return 10.0 ** (p_dbm / 10.0)


def mw_to_dbm(p_mw: float) -> float:
    if p_mw <= 0.0:
        raise ValueError(f"cannot express non-positive power {p_mw} mW in dBm")
    return 10.0 * math.log10(p_mw)


# ---------------------------------------------------------------------------
# signaling schemes

class SignalingScheme(enum.Enum):
    OOK = "ook"
    PAM4_SS = "pam4_ss"
    PAM4_EDAC = "pam4_edac"
    PAM4_ODAC = "pam4_odac"

    @property
    def levels_m(self) -> int:
        """Amplitude levels per symbol: 2 for OOK, 4 for every 4-PAM kind."""
        return 2 if self is SignalingScheme.OOK else 4

    @property
    def bits_per_symbol(self) -> int:
        return self.levels_m // 2

    @classmethod
    def parse(cls, text: str) -> "SignalingScheme":
        key = text.strip().lower().replace("-", "_").replace("4pam", "pam4")
        aliases = {
            "ook": cls.OOK,
            "ss": cls.PAM4_SS,
            "pam4_ss": cls.PAM4_SS,
            "edac": cls.PAM4_EDAC,
            "pam4_edac": cls.PAM4_EDAC,
            "odac": cls.PAM4_ODAC,
            "pam4_odac": cls.PAM4_ODAC,
        }
        if key not in aliases:
            raise ConfigError(f"unknown signaling scheme {text!r}")
        return aliases[key]


@dataclass(frozen=True)
class SignalingParams:
    """Per-scheme physical constants of the modulator/receiver chain."""

    scheme: SignalingScheme
    extinction_ratio_db: float      # r
    fwhm_ghz: float                 # modulator 3-dB bandwidth
    q0: float                       # modulator OFF-state extinction
    pp_pam_db: float                # multi-level signaling penalty
    pp_intrf_db: float              # worst-case superposition interference (SS only)
    pp_er_db: float                 # finite-extinction penalty
    q_ber: float                    # Q parameter for the 1e-9 BER target
    delta_f_ghz: float              # modulator ON/OFF resonance spacing
    filter_fwhm_ghz: float          # receive-filter 3-dB bandwidth
    e_mod_pj: float                 # driver energy per bit
    drivers_per_modulator: int

    @property
    def levels_m(self) -> int:
        return self.scheme.levels_m

    def validate(self) -> None:
        if self.fwhm_ghz <= 0 or self.filter_fwhm_ghz <= 0:
            raise ConfigError("FWHM must be positive")
        if not (0.0 < self.q0 < 1.0):
            raise ConfigError("q0 must lie in (0, 1)")
        if self.pp_pam_db < 0 or self.pp_intrf_db < 0:
            raise ConfigError("penalties must be non-negative")
        if self.pp_intrf_db > 0 and self.scheme is not SignalingScheme.PAM4_SS:
            raise ConfigError("interference penalty applies to PAM4_SS only")
        if (self.pp_pam_db == 0) != (self.scheme is SignalingScheme.OOK):
            raise ConfigError("pp_pam must be 0 for OOK and positive for 4-PAM")


# Table-4 values. delta_f and the receive-filter FWHM are not published;
# their defaults here are the calibrated values (see calibration module),
# overridable through the config file.
_SCHEME_DEFAULTS = {
    SignalingScheme.OOK: dict(
        extinction_ratio_db=5.0, fwhm_ghz=30.0, pp_pam_db=0.0, pp_intrf_db=0.0,
        pp_er_db=4.2, q_ber=6.0, e_mod_pj=0.13, drivers_per_modulator=1),
    SignalingScheme.PAM4_SS: dict(
        extinction_ratio_db=5.0, fwhm_ghz=45.0, pp_pam_db=3.3, pp_intrf_db=4.8,
        pp_er_db=4.2, q_ber=12.5, e_mod_pj=0.13, drivers_per_modulator=1),
    SignalingScheme.PAM4_EDAC: dict(
        extinction_ratio_db=5.0, fwhm_ghz=18.0, pp_pam_db=3.3, pp_intrf_db=0.0,
        pp_er_db=4.2, q_ber=12.5, e_mod_pj=3.04, drivers_per_modulator=1),
    SignalingScheme.PAM4_ODAC: dict(
        extinction_ratio_db=2.0, fwhm_ghz=36.0, pp_pam_db=3.3, pp_intrf_db=0.0,
        pp_er_db=7.7, q_ber=12.5, e_mod_pj=0.04, drivers_per_modulator=2),
}

# Extinction ratios swept by the published design tables.
TABLE_ER_SWEEP = {
    SignalingScheme.OOK: (5.0, 9.0, 12.0),
    SignalingScheme.PAM4_SS: (5.0, 9.0, 12.0),
    SignalingScheme.PAM4_EDAC: (5.0, 9.0, 12.0),
    SignalingScheme.PAM4_ODAC: (2.0, 6.0, 9.0),
}


def pp_er_fallback_db(er_db: float) -> float:
    """Finite-extinction penalty for an uncalibrated extinction ratio.

    Classic eye-closure form 10*log10((r+1)/(r-1)) with r linear. Calibrated
    per-(scheme, ER) values take precedence when available.
    """
    r = db_to_linear(er_db)
    if r <= 1.0:
        raise ConfigError(f"extinction ratio {er_db} dB yields no eye opening")
    return linear_to_db((r + 1.0) / (r - 1.0))


def scheme_params(
    kind: SignalingScheme,
    er_override_db: float | None = None,
    overrides: "CalibratedOverrides | None" = None,
) -> SignalingParams:
    """Parameter record for a signaling scheme, optionally at a swept ER.

    `overrides` carries the calibrated per-(scheme, ER) extinction penalties,
    per-scheme delta-f, and receive-filter FWHM values.
    """
    if not isinstance(kind, SignalingScheme):
        raise ConfigError(f"unknown scheme {kind!r}")
    base = dict(_SCHEME_DEFAULTS[kind])
    er = base["extinction_ratio_db"] if er_override_db is None else float(er_override_db)
    if er <= 0:
        raise ConfigError(f"extinction ratio must be positive, got {er}")
    pp_er = base["pp_er_db"]
    if er != base["extinction_ratio_db"]:
        pp_er = pp_er_fallback_db(er)
    delta_f = 0.0
    filter_fwhm = base["fwhm_ghz"]
    if overrides is not None:
        pp_er = overrides.pp_er_db.get((kind, er), pp_er)
        delta_f = overrides.delta_f_ghz.get(kind, delta_f)
        filter_fwhm = overrides.filter_fwhm_ghz.get(kind, filter_fwhm)
    params = SignalingParams(
        scheme=kind,
        extinction_ratio_db=er,
        fwhm_ghz=base["fwhm_ghz"],
        q0=GLOBALS.q0,
        pp_pam_db=base["pp_pam_db"],
        pp_intrf_db=base["pp_intrf_db"],
        pp_er_db=pp_er,
        q_ber=base["q_ber"],
        delta_f_ghz=delta_f,
        filter_fwhm_ghz=filter_fwhm,
        e_mod_pj=base["e_mod_pj"],
        drivers_per_modulator=base["drivers_per_modulator"],
    )
    params.validate()
    return params


@dataclass(frozen=True)
class CalibratedOverrides:
    """Calibrated stand-ins for constants the published tables leave open."""

    pp_er_db: dict[tuple[SignalingScheme, float], float] = field(default_factory=dict)
    delta_f_ghz: dict[SignalingScheme, float] = field(default_factory=dict)
    filter_fwhm_ghz: dict[SignalingScheme, float] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# architectures

class PnocArch(enum.Enum):
    CLOS = "clos"
    SWIFT = "swift"

    @classmethod
    def parse(cls, text: str) -> "PnocArch":
        key = text.strip().lower()
        try:
            return cls(key)
        except ValueError:
            raise ConfigError(f"unknown PNoC architecture {text!r}") from None


@dataclass(frozen=True)
class PnocProfile:
    """Per-architecture link and topology constants."""

    name: PnocArch
    wg_length_cm: float
    splitter_loss_total_db: float
    coupler_loss_db: float
    wg_prop_loss_db_per_cm: float = 1.0
    wg_bend_loss_db: float = 0.005      # per 90 degree bend
    bend_count: int = 4
    waveguide_count: int = 0
    fsr_nm: float = 20.0
    base_wavelength_nm: float = 1550.0
    photonic_clock_ghz: float = 5.0
    core_clock_ghz: float = 2.5

    @property
    def wgp_loss_db(self) -> float:
        return self.wg_length_cm * self.wg_prop_loss_db_per_cm

    @property
    def wgb_loss_db(self) -> float:
        return self.bend_count * self.wg_bend_loss_db


_PROFILE_DEFAULTS = {
    PnocArch.CLOS: PnocProfile(
        name=PnocArch.CLOS, wg_length_cm=4.5, splitter_loss_total_db=5.6,
        coupler_loss_db=0.9, waveguide_count=56),
    PnocArch.SWIFT: PnocProfile(
        name=PnocArch.SWIFT, wg_length_cm=12.0, splitter_loss_total_db=1.2,
        coupler_loss_db=0.9, waveguide_count=32),
}


def pnoc_profile(arch: PnocArch, **overrides) -> PnocProfile:
    if arch not in _PROFILE_DEFAULTS:
        raise ConfigError(f"unknown architecture {arch!r}")
    profile = _PROFILE_DEFAULTS[arch]
    return replace(profile, **overrides) if overrides else profile


# ---------------------------------------------------------------------------
# global constants

@dataclass(frozen=True)
class GlobalConstants:
    p_max_dbm: float = 20.0
    s_baseline_dbm: float = -22.5       # at 10 Gbaud
    v_si_m_s: float = 8.6e7
    c_m_s: float = 299792458.0
    wallplug_efficiency: float = 0.15
    q0: float = 0.04


GLOBALS = GlobalConstants()


# ---------------------------------------------------------------------------
# config file ingestion (INI sections; see README for the schema)

def _parse_float_map(section, cast_key):
    return {cast_key(k): float(v) for k, v in section.items()}


def load_config(path: str | Path) -> dict:
    """Read an INI config into override structures.

    Sections:
      [model]        xi_convention, eq11_mode, freq_map, snr_mode
      [delta_f]      scheme = GHz
      [filter_fwhm]  scheme = GHz
      [pp_er]        scheme:er = dB
      [profile.clos] / [profile.swift]   field = value
      [sensitivity]  anchors = baud:dbm, baud:dbm, ...
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser()
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc

    out: dict = {"model": {}, "profiles": {}, "overrides": CalibratedOverrides(),
                 "sensitivity_anchors": None}
    if cp.has_section("model"):
        out["model"] = dict(cp["model"])
    pp_er: dict[tuple[SignalingScheme, float], float] = {}
    delta_f: dict[SignalingScheme, float] = {}
    filter_fwhm: dict[SignalingScheme, float] = {}
    if cp.has_section("delta_f"):
        delta_f = _parse_float_map(cp["delta_f"], SignalingScheme.parse)
    if cp.has_section("filter_fwhm"):
        filter_fwhm = _parse_float_map(cp["filter_fwhm"], SignalingScheme.parse)
    if cp.has_section("pp_er"):
        for key, val in cp["pp_er"].items():
            scheme_txt, er_txt = key.split(":")
            pp_er[(SignalingScheme.parse(scheme_txt), float(er_txt))] = float(val)
    out["overrides"] = CalibratedOverrides(
        pp_er_db=pp_er, delta_f_ghz=delta_f, filter_fwhm_ghz=filter_fwhm)
    for arch in PnocArch:
        section = f"profile.{arch.value}"
        if cp.has_section(section):
            fields = {k: (int(v) if k in ("bend_count", "waveguide_count") else float(v))
                      for k, v in cp[section].items()}
            out["profiles"][arch] = pnoc_profile(arch, **fields)
    if cp.has_section("sensitivity") and "anchors" in cp["sensitivity"]:
        anchors = []
        for pair in cp["sensitivity"]["anchors"].split(","):
            baud_txt, s_txt = pair.split(":")
            anchors.append((float(baud_txt), float(s_txt)))
        out["sensitivity_anchors"] = anchors
    return out


def dump_overrides_ini(model: dict, overrides: CalibratedOverrides) -> str:
    """Serialize model switches + calibrated overrides as an INI string."""
    cp = configparser.ConfigParser()
    cp["model"] = {k: str(v) for k, v in model.items()}
    cp["delta_f"] = {s.value: repr(v) for s, v in sorted(
        overrides.delta_f_ghz.items(), key=lambda kv: kv[0].value)}
    cp["filter_fwhm"] = {s.value: repr(v) for s, v in sorted(
        overrides.filter_fwhm_ghz.items(), key=lambda kv: kv[0].value)}
    cp["pp_er"] = {f"{s.value}:{er:g}": repr(v) for (s, er), v in sorted(
        overrides.pp_er_db.items(), key=lambda kv: (kv[0][0].value, kv[0][1]))}
    import io
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
