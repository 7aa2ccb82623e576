"""BER from crosstalk SNR, and the SECDED(72,64) codec with its FEC threshold."""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass

from .params import PnocProfile, SignalingParams, SignalingScheme
from .penalty import CrosstalkModel, DetuneMode, LinkGeometry


class SnrMode(enum.Enum):
    """How the crosstalk SNR is referenced.

    INVERSE_SIGMA: signal and crosstalk share all common-mode losses, so
    SNR = 1 / sum(Gamma) at the worst filter.
    SIGNAL_ATTENUATED: the signal is attenuated by the link's physical loss
    terms while the aggregated crosstalk is referenced to launch power,
    so SNR = T_link / sum(Gamma).
    """
    INVERSE_SIGMA = "inverse_sigma"
    SIGNAL_ATTENUATED = "signal_attenuated"


@dataclass(frozen=True)
class BerReport:
    worst_snr: float
    ber: float
    levels_m: int
    fec_threshold: float

    @property
    def passes_fec(self) -> bool:
        return self.ber < self.fec_threshold

    def as_dict(self) -> dict:
        return {"worst_snr": self.worst_snr, "ber": self.ber,
                "levels_m": self.levels_m, "fec_threshold": self.fec_threshold,
                "passes_fec": self.passes_fec}

    def as_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2)


def worst_case_snr(model: CrosstalkModel, params: SignalingParams,
                   geometry: LinkGeometry,
                   profile: PnocProfile | None = None,
                   mode: SnrMode = SnrMode.INVERSE_SIGMA) -> float:
    """Signal-to-crosstalk power ratio at the worst receive filter."""
    sigma = model.worst_filter_sigma(geometry, params.filter_fwhm_ghz)
    if sigma <= 0.0:
        return math.inf
    if mode is SnrMode.INVERSE_SIGMA:
        return 1.0 / sigma
    if profile is None:
        raise ValueError("SIGNAL_ATTENUATED mode needs the architecture profile")
    loss_db = link_loss_terms_db(model, params, profile, geometry)
    return 10.0 ** (-loss_db / 10.0) / sigma


def link_loss_terms_db(model: CrosstalkModel, params: SignalingParams,
                       profile: PnocProfile, geometry: LinkGeometry) -> float:
    """Physical transmission losses only (no BER-compensation penalties)."""
    from .penalty import BankFwhmSource
    act_fwhm = (params.fwhm_ghz
                if model.switches.act_bank_fwhm is BankFwhmSource.MODULATOR
                else params.filter_fwhm_ghz)
    act = model.mr_through_loss_db(geometry, act_fwhm, active=True)
    if params.scheme is SignalingScheme.PAM4_SS:
        act = act * model.switches.ss_act_loss_multiplier \
            + model.switches.ss_extra_mr_loss_db
    inact = model.mr_through_loss_db(geometry, params.filter_fwhm_ghz, active=False)
    return (act + inact + profile.wgp_loss_db + profile.wgb_loss_db
            + profile.splitter_loss_total_db + profile.coupler_loss_db)


def ber_from_snr(snr: float, levels_m: int) -> float:
    """Crosstalk-limited bit error rate for OOK (M=2) or 4-PAM (M=4) signals."""
    if snr < 0:
        raise ValueError(f"SNR must be non-negative, got {snr}")
    if levels_m not in (2, 4):
        return ber_general(snr, levels_m)
    if math.isinf(snr):
        return 0.0
    divisor = math.sqrt(2.0) if levels_m == 2 else 3.0 * math.sqrt(2.0)
    return 0.5 * math.erfc(math.sqrt(snr) / divisor)


def ber_general(snr: float, levels_m: int) -> float:
    """General M-level form: (2(M-1) - log2 M)/(M log2 M) erfc(sqrt(SNR)/((M-1) sqrt 2))."""
    if levels_m < 2 or levels_m & (levels_m - 1):
        raise ValueError(f"levels_m must be a power of two >= 2, got {levels_m}")
    if math.isinf(snr):
        return 0.0
    m = levels_m
    log2m = math.log2(m)
    pref = (2.0 * (m - 1) - log2m) / (m * log2m)
    return pref * math.erfc(math.sqrt(snr) / ((m - 1) * math.sqrt(2.0)))


def fec_threshold(packet_bits: int) -> float:
    """Max tolerable BER for error-free SECDED transport of a packet.

    One correctable bit per coded packet: 1 / (packet_bits * 72/64).
    """
    if packet_bits <= 0 or packet_bits % 64:
        raise ValueError(f"packet size must be a positive multiple of 64, got {packet_bits}")
    return 1.0 / (packet_bits * 72 // 64)


def ber_report(model: CrosstalkModel, params: SignalingParams,
               geometry: LinkGeometry, packet_bits: int = 512,
               profile: PnocProfile | None = None,
               mode: SnrMode = SnrMode.INVERSE_SIGMA) -> BerReport:
    snr = worst_case_snr(model, params, geometry, profile, mode)
    return BerReport(worst_snr=snr, ber=ber_from_snr(snr, params.levels_m),
                     levels_m=params.levels_m,
                     fec_threshold=fec_threshold(packet_bits))


# ---------------------------------------------------------------------------
# SECDED (72, 64): shortened Hamming(71, 64) plus an overall parity bit.
#
# Codeword layout (bit 0 = LSB of the 72-bit integer):
#   bits 0..70  : Hamming positions 1..71; positions that are powers of two
#                 (1, 2, 4, 8, 16, 32, 64) carry check bits, the remaining 64
#                 carry payload bits in ascending position order
#   bit 71      : overall parity over bits 0..70

_PARITY_POS = (1, 2, 4, 8, 16, 32, 64)
_DATA_POS = tuple(p for p in range(1, 72) if p not in _PARITY_POS)

CODEWORD_BITS = 72
PAYLOAD_BITS = 64


class DecodeStatus(enum.Enum):
    CLEAN = "clean"
    CORRECTED = "corrected"
    UNCORRECTABLE = "uncorrectable"


def _parity64(x: int) -> int:
    x ^= x >> 32
    x ^= x >> 16
    x ^= x >> 8
    x ^= x >> 4
    x ^= x >> 2
    x ^= x >> 1
    return x & 1


def _popcount_parity(x: int) -> int:
    return bin(x).count("1") & 1


def secded_encode(word: int) -> int:
    """Encode a 64-bit payload into the 72-bit SECDED codeword."""
    if not 0 <= word < (1 << PAYLOAD_BITS):
        raise ValueError("payload must be a 64-bit unsigned integer")
    cw = 0
    for k, pos in enumerate(_DATA_POS):
        if (word >> k) & 1:
            cw |= 1 << (pos - 1)
    for p in _PARITY_POS:
        covered = 0
        for pos in range(1, 72):
            if pos & p and (cw >> (pos - 1)) & 1:
                covered ^= 1
        if covered:
            cw |= 1 << (p - 1)
    if _popcount_parity(cw & ((1 << 71) - 1)):
        cw |= 1 << 71
    return cw


def secded_extract(codeword: int) -> int:
    word = 0
    for k, pos in enumerate(_DATA_POS):
        if (codeword >> (pos - 1)) & 1:
            word |= 1 << k
    return word


def secded_decode(codeword: int) -> tuple[int, DecodeStatus]:
    """Decode a 72-bit codeword into (payload, status).

    Single-bit errors are corrected; double-bit errors are flagged
    uncorrectable (payload is then the best-effort extraction).
    """
    if not 0 <= codeword < (1 << CODEWORD_BITS):
        raise ValueError("codeword must be a 72-bit unsigned integer")
    syndrome = 0
    for p in _PARITY_POS:
        acc = 0
        for pos in range(1, 72):
            if pos & p and (codeword >> (pos - 1)) & 1:
                acc ^= 1
        if acc:
            syndrome |= p
    overall = _popcount_parity(codeword)
    if syndrome == 0:
        if overall == 0:
            return secded_extract(codeword), DecodeStatus.CLEAN
        # the overall parity bit itself flipped
        return secded_extract(codeword ^ (1 << 71)), DecodeStatus.CORRECTED
    if overall == 1:
        if syndrome <= 71:
            fixed = codeword ^ (1 << (syndrome - 1))
            return secded_extract(fixed), DecodeStatus.CORRECTED
        return secded_extract(codeword), DecodeStatus.UNCORRECTABLE
    # non-zero syndrome with even overall parity: double error
    return secded_extract(codeword), DecodeStatus.UNCORRECTABLE


def encode_packet_bits(packet_bits: int) -> int:
    """Wire size of a SECDED-coded packet (12.5% expansion)."""
    if packet_bits % PAYLOAD_BITS:
        raise ValueError(f"packet size must be a multiple of 64, got {packet_bits}")
    return packet_bits * CODEWORD_BITS // PAYLOAD_BITS
