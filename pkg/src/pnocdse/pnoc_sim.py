"""Deterministic discrete-event simulation of the CLOS and SWIFT PNoCs.

Reduced-fidelity model: routers are fixed pipeline delays, photonic links are
FIFO servers (one per waveguide) with round-robin arbitration among
contending gateway interfaces, and packet timing is continuous (ns) built
from the photonic/core clocks. Traffic is synthetic; arrivals come from a
counter-based generator so runs are bit-reproducible and arrival sets are
nested as the injection rate grows.
"""
from __future__ import annotations

import heapq
import json
import math
import statistics
from dataclasses import dataclass

import numpy as np

from .budget_search import DesignPoint
from .energy import CONSTANTS, EnergyConstants, PowerBreakdown, laser_wallplug_power_mw, ledger_for
from .params import GLOBALS, PnocArch, PnocProfile, SignalingScheme, pnoc_profile
from .penalty import Goal
from .reliability import encode_packet_bits

CORES = 256


class SaturationWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class Topology:
    """Static structure of one PNoC variant."""

    kind: PnocArch
    clusters: int                 # CLOS: electrical-router groups; SWIFT: GIs
    cores_per_cluster: int
    waveguides: int

    @classmethod
    def for_arch(cls, arch: PnocArch) -> "Topology":
        if arch is PnocArch.CLOS:
            # 8 clusters x 8 tiles x 4 cores, one 8x8 router per cluster,
            # a dedicated waveguide per ordered cluster pair (8*7 = 56)
            return cls(kind=arch, clusters=8, cores_per_cluster=32, waveguides=56)
        # SWIFT: 64 four-core nodes, one GI per four nodes (16 GIs),
        # 8 waveguide groups x 4 MWMR waveguides
        return cls(kind=arch, clusters=16, cores_per_cluster=16, waveguides=32)

    def cluster_of(self, core: int) -> int:
        return core // self.cores_per_cluster

    def waveguide_for(self, src_cluster: int, dst_cluster: int) -> int:
        if self.kind is PnocArch.CLOS:
            # ordered pairs enumerate the 56 point-to-point waveguides
            idx = src_cluster * (self.clusters - 1)
            idx += dst_cluster if dst_cluster < src_cluster else dst_cluster - 1
            return idx
        # SWIFT MWMR: group by destination GI, static lane by source GI
        group = dst_cluster % 8
        lane = src_cluster % 4
        return group * 4 + lane


@dataclass(frozen=True)
class SimConfig:
    design: DesignPoint
    scheme: SignalingScheme
    goal: Goal
    arch: PnocArch
    injection_rate: float                 # packets per core per core cycle
    seed: int = 1
    packet_bits: int = 512
    traffic: str = "uniform_random"       # uniform_random | hotspot | permutation
    warmup_cycles: int = 500
    measure_cycles: int = 2000
    router_pipeline_cycles: int = 2
    gi_hop_cycles: int = 1
    hotspot_core: int = 0
    hotspot_fraction: float = 0.2
    queue_capacity: int | None = None     # None: unbounded
    router_hop_energy_pj: float = 1.0     # stand-in for the electrical router model
    electrical_power_per_router_mw: float = 50.0
    gi_power_mw: float = 10.0
    mr_tuning_range_nm: float | None = None   # required for power breakdown

    def wire_bits(self) -> int:
        if self.goal is Goal.DR_BER_BALANCED:
            return encode_packet_bits(self.packet_bits)
        return self.packet_bits


@dataclass
class SimReport:
    config_digest: dict
    packets_injected: int
    packets_delivered: int
    packets_in_flight: int
    avg_latency_ns: float
    median_latency_ns: float
    p99_latency_ns: float
    avg_latency_cycles: float
    offered_load: float
    accepted_load: float
    saturated: bool
    energy_tallies_pj: dict
    total_dynamic_energy_pj: float
    epb_pj_per_bit: float
    power_breakdown_mw: dict | None
    sim_time_ns: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)

    def as_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)


def _philox_uniforms(seed: int, rows: int, cols: int, stream: int) -> np.ndarray:
    gen = np.random.Generator(np.random.Philox(key=[seed, stream]))
    return gen.random((rows, cols))


def simulate(config: SimConfig) -> SimReport:
    """Run warmup + measurement and return the (deterministic) report."""
    if config.measure_cycles <= 0:
        raise ValueError("measure_cycles must be positive")
    if not config.design.feasible:
        raise ValueError("design point is infeasible; simulate needs a closed link")
    topo = Topology.for_arch(config.arch)
    profile = pnoc_profile(config.arch)
    core_cycle_ns = 1.0 / profile.core_clock_ghz
    phot_cycle_ns = 1.0 / profile.photonic_clock_ghz

    n_lambda = config.design.n_lambda
    baud = config.design.baud_gbaud
    bits_per_symbol = config.scheme.bits_per_symbol
    wire_bits = config.wire_bits()
    symbols = math.ceil(wire_bits / (n_lambda * bits_per_symbol))
    t_serialize = symbols / baud                          # ns (baud in Gsym/s)
    t_flight = (profile.wg_length_cm * 1e-2) / GLOBALS.v_si_m_s * 1e9
    t_deser = phot_cycle_ns
    t_decode = (CONSTANTS.secded_decode_cycles * phot_cycle_ns
                if config.goal is Goal.DR_BER_BALANCED else 0.0)
    t_router = config.router_pipeline_cycles * core_cycle_ns
    t_gi = config.gi_hop_cycles * core_cycle_ns

    total_cycles = config.warmup_cycles + config.measure_cycles
    arrivals = _philox_uniforms(config.seed, total_cycles, CORES, stream=0)
    dest_draw = _philox_uniforms(config.seed, total_cycles, CORES, stream=1)
    hot_draw = _philox_uniforms(config.seed, total_cycles, CORES, stream=2)

    # per-packet energy charges
    ledger = ledger_for(config.scheme, n_lambda, config.packet_bits)
    epb_bit = ledger.epb_per_transferred_bit_pj
    epb_split_total = ledger.raw_epb_total_pj
    tsv_per_crossing = CONSTANTS.tsv_bundle_pj * CONSTANTS.tsv_bundles_per_block

    tallies = {"driver_pj": 0.0, "serdes_pj": 0.0, "co_opamp_pj": 0.0,
               "ti_opamp_pj": 0.0, "tsv_pj": 0.0, "secded_pj": 0.0,
               "router_pj": 0.0}
    counters = {"photonic_packets": 0, "router_hops": 0, "gi_hops": 0,
                "tsv_crossings": 0, "secded_events": 0}

    # waveguide servers with per-writer FIFO queues and round-robin grants
    wg_queues: list[dict[int, list]] = [dict() for _ in range(topo.waveguides)]
    wg_order: list[list[int]] = [[] for _ in range(topo.waveguides)]
    wg_rr: list[int] = [0] * topo.waveguides
    wg_busy_until: list[float] = [0.0] * topo.waveguides

    heap: list = []
    seq = 0

    def push(t: float, kind: str, payload: tuple):
        nonlocal seq
        heapq.heappush(heap, (t, seq, kind, payload))
        seq += 1

    latencies: list[float] = []
    injected = delivered = measured_injected = 0
    in_flight = 0

    measure_start_ns = config.warmup_cycles * core_cycle_ns
    horizon_ns = total_cycles * core_cycle_ns

    def pick_destination(core: int, cycle: int) -> int:
        if config.traffic == "permutation":
            return (core + CORES // 2) % CORES
        if config.traffic == "hotspot":
            if hot_draw[cycle, core] < config.hotspot_fraction \
                    and core != config.hotspot_core:
                return config.hotspot_core
        if config.traffic not in ("uniform_random", "hotspot"):
            raise ValueError(f"unknown traffic pattern {config.traffic!r}")
        dst = int(dest_draw[cycle, core] * (CORES - 1))
        if dst >= core:
            dst += 1
        return dst

    # pre-scan arrivals (a shared seed makes lower-rate arrival sets strict
    # subsets of higher-rate ones)
    hit_cycles, hit_cores = np.nonzero(arrivals < config.injection_rate)
    for cycle, core in zip(hit_cycles.tolist(), hit_cores.tolist()):
        dst = pick_destination(core, cycle)
        push(cycle * core_cycle_ns, "inject", (core, dst))

    def charge_photonic(packet_bits_on_wire: int):
        w = packet_bits_on_wire
        if epb_split_total > 0:
            tallies["driver_pj"] += w * epb_bit * (ledger.driver_epb_pj / epb_split_total)
            tallies["serdes_pj"] += w * epb_bit * (ledger.serdes_epb_pj / epb_split_total)
            tallies["co_opamp_pj"] += w * epb_bit * (ledger.co_opamp_epb_pj / epb_split_total)
            tallies["ti_opamp_pj"] += w * epb_bit * (ledger.ti_opamp_epb_pj / epb_split_total)
        tallies["tsv_pj"] += 2 * tsv_per_crossing
        counters["tsv_crossings"] += 2
        counters["photonic_packets"] += 1
        if config.goal is Goal.DR_BER_BALANCED:
            tallies["secded_pj"] += 2 * CONSTANTS.secded_event_pj
            counters["secded_events"] += 2

    def charge_router(hops: int = 1):
        tallies["router_pj"] += hops * config.router_hop_energy_pj
        counters["router_hops"] += hops

    def try_grant(wg: int, now: float):
        """Round-robin grant of the waveguide to the next non-empty writer."""
        if wg_busy_until[wg] > now:
            return
        order = wg_order[wg]
        if not order:
            return
        n_writers = len(order)
        for k in range(n_writers):
            writer = order[(wg_rr[wg] + k) % n_writers]
            q = wg_queues[wg].get(writer)
            if q:
                inject_t, payload = q.pop(0)
                wg_rr[wg] = (wg_rr[wg] + k + 1) % n_writers
                wg_busy_until[wg] = now + t_serialize
                push(now + t_serialize, "wire_done", (wg, inject_t, payload))
                return

    while heap:
        now, _, kind, payload = heapq.heappop(heap)
        if kind == "inject":
            core, dst = payload
            injected += 1
            in_flight += 1
            if now >= measure_start_ns:
                measured_injected += 1
            src_cl = topo.cluster_of(core)
            dst_cl = topo.cluster_of(dst)
            charge_router()
            if src_cl == dst_cl:
                if topo.kind is PnocArch.SWIFT and core // 4 != dst // 4:
                    # different nodes under one GI: electrical via the GI
                    charge_router()
                    counters["gi_hops"] += 1
                    delay = t_router + t_gi + t_router
                else:
                    delay = t_router
                push(now + delay, "deliver", (now,))
            else:
                wg = topo.waveguide_for(src_cl, dst_cl)
                writer = src_cl
                ready = now + t_router + (t_gi if topo.kind is PnocArch.SWIFT else 0.0)
                if topo.kind is PnocArch.SWIFT:
                    counters["gi_hops"] += 1
                push(ready, "enqueue", (wg, writer, now))
        elif kind == "enqueue":
            wg, writer, inject_t = payload
            if writer not in wg_queues[wg]:
                wg_queues[wg][writer] = []
                wg_order[wg].append(writer)
            q = wg_queues[wg][writer]
            if config.queue_capacity is not None and len(q) >= config.queue_capacity:
                # bounded mode: retry one core cycle later (backpressure)
                push(now + core_cycle_ns, "enqueue", payload)
            else:
                q.append((inject_t, None))
                try_grant(wg, now)
        elif kind == "wire_done":
            wg, inject_t, _ = payload
            charge_photonic(wire_bits)
            charge_router()
            eta = now + t_flight + t_deser + t_decode + t_router \
                + (t_gi if topo.kind is PnocArch.SWIFT else 0.0)
            if topo.kind is PnocArch.SWIFT:
                counters["gi_hops"] += 1
            push(eta, "deliver", (inject_t,))
            try_grant(wg, now)
        elif kind == "deliver":
            (inject_t,) = payload
            delivered += 1
            in_flight -= 1
            if inject_t >= measure_start_ns:
                latencies.append(now - inject_t)

    total_dyn = sum(tallies.values())
    payload_bits_delivered = delivered * config.packet_bits
    epb = total_dyn / payload_bits_delivered if payload_bits_delivered else 0.0
    offered = config.injection_rate
    accepted = (measured_injected / (CORES * config.measure_cycles))

    power = None
    if config.mr_tuning_range_nm is not None:
        span_ns = horizon_ns
        tuning_mw = ledger.static_power_mw(config.mr_tuning_range_nm)
        # pJ/ns is numerically mW
        txrx_mw = (tallies["driver_pj"] + tallies["serdes_pj"]
                   + tallies["co_opamp_pj"] + tallies["ti_opamp_pj"]) / span_ns
        routers = topo.clusters if topo.kind is PnocArch.CLOS else 64
        gis = 0 if topo.kind is PnocArch.CLOS else 16
        electrical_mw = (routers * config.electrical_power_per_router_mw
                         + gis * config.gi_power_mw
                         + tallies["router_pj"] / span_ns)
        laser_mw = laser_wallplug_power_mw(config.design.laser_power_dbm,
                                           profile.waveguide_count)
        power = PowerBreakdown(
            laser_wallplug_mw=laser_mw, mr_tuning_mw=tuning_mw,
            txrx_dynamic_mw=txrx_mw, electrical_mw=electrical_mw).as_dict()

    lat_sorted = sorted(latencies)
    if lat_sorted:
        avg = sum(lat_sorted) / len(lat_sorted)
        med = statistics.median(lat_sorted)
        p99 = lat_sorted[min(len(lat_sorted) - 1, math.ceil(0.99 * len(lat_sorted)) - 1)]
    else:
        avg = med = p99 = 0.0

    saturated = accepted < offered * 0.98 - 1e-12 or in_flight > 0.05 * max(injected, 1)

    return SimReport(
        config_digest={
            "arch": config.arch.value, "scheme": config.scheme.value,
            "goal": config.goal.value, "n_lambda": n_lambda,
            "bitrate_gbps": config.design.bitrate_gbps,
            "injection_rate": config.injection_rate, "seed": config.seed,
            "traffic": config.traffic, "packet_bits": config.packet_bits,
            "wire_bits": wire_bits, "warmup_cycles": config.warmup_cycles,
            "measure_cycles": config.measure_cycles,
        },
        packets_injected=injected,
        packets_delivered=delivered,
        packets_in_flight=in_flight,
        avg_latency_ns=avg,
        median_latency_ns=med,
        p99_latency_ns=p99,
        avg_latency_cycles=avg / core_cycle_ns,
        offered_load=offered,
        accepted_load=accepted,
        saturated=saturated,
        energy_tallies_pj=dict(tallies),
        total_dynamic_energy_pj=total_dyn,
        epb_pj_per_bit=epb,
        power_breakdown_mw=power,
        sim_time_ns=horizon_ns,
        )


def zero_load_latency_ns(config: SimConfig) -> float:
    """Analytic latency of a lone inter-cluster packet (no contention)."""
    topo = Topology.for_arch(config.arch)
    profile = pnoc_profile(config.arch)
    core_cycle_ns = 1.0 / profile.core_clock_ghz
    phot_cycle_ns = 1.0 / profile.photonic_clock_ghz
    symbols = math.ceil(config.wire_bits()
                        / (config.design.n_lambda * config.scheme.bits_per_symbol))
    t = config.router_pipeline_cycles * core_cycle_ns          # source router
    if topo.kind is PnocArch.SWIFT:
        t += config.gi_hop_cycles * core_cycle_ns              # source GI
    t += symbols / config.design.baud_gbaud                    # serialization
    t += (profile.wg_length_cm * 1e-2) / GLOBALS.v_si_m_s * 1e9
    t += phot_cycle_ns                                         # deserializer latch
    if config.goal is Goal.DR_BER_BALANCED:
        t += CONSTANTS.secded_decode_cycles * phot_cycle_ns
    if topo.kind is PnocArch.SWIFT:
        t += config.gi_hop_cycles * core_cycle_ns              # destination GI
    t += config.router_pipeline_cycles * core_cycle_ns         # destination router
    return t


def compare_variants(designs: dict[SignalingScheme, DesignPoint], arch: PnocArch,
                     goal: Goal, injection_rate: float, seed: int,
                     baseline: SignalingScheme = SignalingScheme.OOK,
                     **config_kwargs) -> dict:
    """Run each scheme's design under a shared seed/load, normalized to OOK."""
    if baseline not in designs:
        raise ValueError("baseline scheme missing from the design set")
    reports = {}
    for scheme, design in designs.items():
        cfg = SimConfig(design=design, scheme=scheme, goal=goal, arch=arch,
                        injection_rate=injection_rate, seed=seed, **config_kwargs)
        reports[scheme] = simulate(cfg)
    base = reports[baseline]
    out = {"arch": arch.value, "goal": goal.value,
           "injection_rate": injection_rate, "seed": seed, "variants": {}}
    for scheme, rep in reports.items():
        out["variants"][scheme.value] = {
            "avg_latency_ns": rep.avg_latency_ns,
            "epb_pj_per_bit": rep.epb_pj_per_bit,
            "latency_vs_baseline": (rep.avg_latency_ns / base.avg_latency_ns
                                    if base.avg_latency_ns else math.nan),
            "epb_vs_baseline": (rep.epb_pj_per_bit / base.epb_pj_per_bit
                                if base.epb_pj_per_bit else math.nan),
            "report": rep.as_dict(),
        }
    return out
