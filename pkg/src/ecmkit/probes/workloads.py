"""Workload descriptions for frequency/energy sweeps.

Three kinds: a builtin streaming kernel (performance = achieved bandwidth),
a synthetic compute profile characterized by per-core throughput and the
data it pulls through the uncore, and an external command that prints its
own performance figure.
"""

import re
import shlex
import subprocess
from dataclasses import dataclass

from ..errors import MeasurementError

PERF_LINE = re.compile(r"^PERF\s+([-+0-9.eE]+)\s+(\S+)\s*$")


@dataclass(frozen=True)
class ProfileWorkload:
    """Roofline-style synthetic workload.

    Performance is the smaller of the compute rate (cores x flops/cycle x
    core clock) and the data-side rate (arithmetic intensity x attainable
    memory/uncore bandwidth).
    """

    name: str
    flops_per_cycle_per_core: float
    arithmetic_intensity_flops_per_byte: float
    workload_class: str = "avx"  # frequency license the code runs under
    unit: str = "GFLOP/s"


@dataclass(frozen=True)
class KernelWorkload:
    name: str
    isa_width: str = "avx"
    working_set_bytes: int = 1 << 30
    unit: str = "GB/s"

    @property
    def workload_class(self) -> str:
        return self.isa_width


@dataclass(frozen=True)
class ExternalCommandWorkload:
    """Any command that prints 'PERF <float> <unit>' on its last output line."""

    command: str
    workload_class: str = "avx"

    @property
    def name(self) -> str:
        return f"cmd:{self.command}"

    def run(self, timeout_s: float | None = None) -> tuple[float, str]:
        proc = subprocess.run(
            shlex.split(self.command), capture_output=True, text=True,
            timeout=timeout_s)
        if proc.returncode != 0:
            raise MeasurementError(
                f"workload command failed with exit code {proc.returncode}: "
                f"{proc.stderr.strip() or proc.stdout.strip()}")
        return parse_perf_line(proc.stdout)


def parse_perf_line(output: str) -> tuple[float, str]:
    lines = [line for line in output.splitlines() if line.strip()]
    if not lines:
        raise MeasurementError("workload produced no output")
    m = PERF_LINE.match(lines[-1].strip())
    if not m:
        raise MeasurementError(
            f"workload's last output line is not 'PERF <float> <unit>': {lines[-1]!r}")
    return float(m.group(1)), m.group(2)


# Profiles tuned to reproduce the published sweep behavior of the two
# reference benchmark classes on the shipped machines: a bandwidth-bound
# solver-style code whose performance flattens once DRAM, not the uncore,
# is the bottleneck, and a dense compute code whose turbo headroom grows as
# the uncore clock drops.
BUILTIN_PROFILES = {
    "hpcg_like": ProfileWorkload(
        name="hpcg_like", flops_per_cycle_per_core=1.0,
        arithmetic_intensity_flops_per_byte=0.25),
    "linpack_like": ProfileWorkload(
        name="linpack_like", flops_per_cycle_per_core=13.6,
        arithmetic_intensity_flops_per_byte=12.8),
}


def resolve_workload(spec: str, working_set_bytes: int | None = None,
                     isa_width: str = "avx"):
    """Map a CLI/work request onto a workload object.

    'cmd:<shell command>' wraps an external command; a known profile name
    selects a synthetic profile; anything else is treated as a builtin
    kernel name.
    """
    if spec.startswith("cmd:"):
        return ExternalCommandWorkload(command=spec[4:])
    if spec in BUILTIN_PROFILES:
        return BUILTIN_PROFILES[spec]
    from ..kernels import load_kernel
    kd = load_kernel(spec, isa_width)
    return KernelWorkload(name=kd.name, isa_width=kd.isa_width,
                          working_set_bytes=working_set_bytes or (1 << 30))
