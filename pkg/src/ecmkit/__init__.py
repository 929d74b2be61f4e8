"""Microarchitecture characterization and analytic loop-performance modeling.

Machine descriptions of four Intel Xeon server generations, an analytic
model composing in-core execution with cache/memory transfer times, a
microbenchmark harness with real and synthetic executors, and analysis/CLI
front ends.
"""

from .analysis import (
    compare_prediction,
    energy_metrics,
    parallel_efficiency,
    saturation_point,
)
from .ecm import (
    EcmPrediction,
    InCoreTime,
    agu_bound,
    compose,
    ecm_notation,
    incore_time,
    predict,
    predict_gather,
    scaling_prediction,
    transfer_times,
)
from .kernels import (
    BUILTIN_KERNELS,
    KernelDescriptor,
    StreamDecl,
    TrafficProfile,
    builtin_kernel,
    load_kernel,
    traffic_profile,
)
from .machine.loader import (
    SHIPPED_MACHINES,
    load_machine,
    serialize_machine,
)
from .machine.types import MachineDescription
from .probes import (
    NoiseModel,
    PointerChain,
    ProbeResult,
    RealExecutor,
    SweepGrid,
    SweepResult,
    SyntheticConfig,
    SyntheticExecutor,
    build_pointer_chain,
    derive_l2_bandwidth,
    run_sweep,
)

__version__ = "0.1.0"

__all__ = [
    "BUILTIN_KERNELS", "EcmPrediction", "InCoreTime", "KernelDescriptor",
    "MachineDescription", "NoiseModel", "PointerChain", "ProbeResult",
    "RealExecutor", "SHIPPED_MACHINES", "StreamDecl", "SweepGrid",
    "SweepResult", "SyntheticConfig", "SyntheticExecutor", "TrafficProfile",
    "agu_bound", "build_pointer_chain", "builtin_kernel", "compare_prediction",
    "compose", "derive_l2_bandwidth", "ecm_notation", "energy_metrics",
    "incore_time", "load_kernel", "load_machine", "parallel_efficiency",
    "predict", "predict_gather", "run_sweep", "saturation_point",
    "scaling_prediction", "serialize_machine", "traffic_profile",
    "transfer_times",
]
