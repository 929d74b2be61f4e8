from .base import (
    CAPABILITIES,
    DEFAULT_REPETITIONS,
    Environment,
    Executor,
    NoiseModel,
    ProbeResult,
    SweepPoint,
    SweepResult,
    derive_l2_bandwidth,
)
from .chain import PointerChain, build_pointer_chain
from .real import RealExecutor
from .sweep import SweepGrid, run_sweep, uncore_axis
from .synthetic import SyntheticConfig, SyntheticExecutor
from .workloads import (
    BUILTIN_PROFILES,
    ExternalCommandWorkload,
    KernelWorkload,
    ProfileWorkload,
    parse_perf_line,
    resolve_workload,
)

__all__ = [
    "CAPABILITIES", "DEFAULT_REPETITIONS", "Environment", "Executor",
    "NoiseModel", "ProbeResult", "SweepPoint", "SweepResult",
    "derive_l2_bandwidth", "PointerChain", "build_pointer_chain",
    "RealExecutor", "SweepGrid", "run_sweep", "uncore_axis",
    "SyntheticConfig", "SyntheticExecutor", "BUILTIN_PROFILES",
    "ExternalCommandWorkload", "KernelWorkload", "ProfileWorkload",
    "parse_perf_line", "resolve_workload",
]
