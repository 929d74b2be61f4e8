"""Pydantic request/response models for the HTTP service."""

from pydantic import BaseModel, Field

from ..probes.base import DEFAULT_REPETITIONS


class MachineSummary(BaseModel):
    name: str
    cores: int
    base_hz: float
    microarchitecture: str = ""
    chip_model: str = ""


class ValidateRequest(BaseModel):
    machine: dict | str
    lenient: bool = False


class ValidateResponse(BaseModel):
    valid: bool
    machine: str
    cores: int
    instructions: int
    cache_levels: list[str]


class PredictRequest(BaseModel):
    machine: str
    kernel: str
    isa_width: str = "avx"
    working_set_bytes: int = Field(default=8192, gt=0)
    cores: int = Field(default=1, ge=1)
    policy: str = "none"
    frequency_hz: float | None = None
    snoop_mode: str | None = None
    with_scaling: bool = False


class InCoreModel(BaseModel):
    t_throughput_cycles_per_iteration: float
    t_critical_path_cycles_per_iteration: float
    per_port_cycles: dict[str, float]
    t_agu_cycles: float
    t_retire_cycles: float
    t_data_path_cycles: float
    t_overlap_cycles: float
    body_chain_cycles: float


class ScalingModel(BaseModel):
    points: list[dict]
    n_saturation: int
    saturated_bandwidth_bytes_per_s: float


class PredictionModel(BaseModel):
    kernel_name: str
    machine_name: str
    overlap_policy: str
    in_core: InCoreModel
    transfer_cycles: dict[str, float]
    composed_cycles_per_iteration: float
    frequency_hz: float
    app_bytes_per_iteration: float
    memory_bytes_per_iteration: float
    predicted_bandwidth_bytes_per_cycle: float
    predicted_bandwidth_bytes_per_s: float
    n_saturation: int
    working_set_bytes: int | None = None
    residence_level: str | None = None
    flops_per_iteration: int = 0
    warnings: list[str] = []
    notation: str = ""
    scaling: ScalingModel | None = None


class _ProbeRequestBase(BaseModel):
    machine: str | None = None
    executor: str = "synthetic"
    seed: int = 0
    jitter: float = Field(default=0.0, ge=0.0, le=0.2)
    repetitions: int = Field(default=DEFAULT_REPETITIONS, ge=9)
    base_frequency_hz: float | None = None


class LatencyProbeRequest(_ProbeRequestBase):
    working_set_bytes: int = Field(gt=0)
    snoop_mode: str | None = None
    cod: bool | None = None


class InstructionProbeRequest(_ProbeRequestBase):
    mnemonic: str
    width: str = "avx"
    precision: str = "dp"
    mode: str = "latency"
    chains: int = Field(default=8, ge=1)


class BandwidthProbeRequest(_ProbeRequestBase):
    kernel: str
    isa_width: str = "avx"
    working_set_bytes: int = Field(gt=0)
    cores: int = Field(default=1, ge=1)
    snoop_mode: str | None = None
    cod: bool | None = None


class GatherProbeRequest(_ProbeRequestBase):
    source_level: str
    cl_spread: int


class FrequencyObserveRequest(BaseModel):
    machine: str | None = None
    executor: str = "synthetic"
    workload_class: str = "avx"
    cores: int | None = None
    duration_s: float = Field(default=0.5, gt=0)
    core_freq_hz: float | None = None
    uncore_freq_hz: float | None = None
    base_frequency_hz: float | None = None


class FrequencyObserveResponse(BaseModel):
    core_hz: list[float]
    uncore_hz: float | None
    duration_s: float


class EnvironmentModel(BaseModel):
    core_freq_hz: float
    uncore_freq_hz: float | None = None
    prefetchers_on: bool = True
    pinned_cores: list[int] = []
    snoop_mode: str | None = None


class ProbeResultModel(BaseModel):
    probe_name: str
    parameters: dict
    repetitions: list[float]
    statistic: str
    value: float
    unit: str
    environment: EnvironmentModel
    machine: str | None = None
    extra_values: dict[str, float] = {}


class SweepRequest(BaseModel):
    machine: str | None = None
    workload: str
    core_freqs_hz: list[float | None] | None = None
    uncore_freqs_hz: list[float | None] | None = None
    cores: list[int] | None = None
    dwell_s: float = Field(default=0.5, gt=0)
    executor: str = "synthetic"
    seed: int = 0
    jitter: float = Field(default=0.0, ge=0.0, le=0.2)
    working_set_bytes: int | None = None
    isa_width: str = "avx"
    snoop_mode: str | None = None
    base_frequency_hz: float | None = None


class SweepPointModel(BaseModel):
    requested_core_freq_hz: float | None
    requested_uncore_freq_hz: float | None
    cores: int
    performance: float
    unit: str
    package_energy_joules: float
    duration_s: float
    observed_core_freq_hz: float
    observed_uncore_freq_hz: float | None


class SweepResultModel(BaseModel):
    workload: str
    machine: str | None
    core_freq_axis: list[float | None]
    uncore_freq_axis: list[float | None]
    cores_axis: list[int]
    points: list[SweepPointModel]
    seed: int | None = None


class EfficiencyRequest(BaseModel):
    series: list[tuple[int, float]] | None = None
    results: list[dict] | None = None
    epsilon: float = Field(default=0.02, gt=0, le=0.2)


class EfficiencyResponse(BaseModel):
    parallel_efficiency: float
    saturation_core_count: int
    per_point_efficiency: list[tuple[int, float]]
    superlinear: bool


class EnergyRequest(BaseModel):
    performance: float
    unit: str
    energy_joules: float
    duration_s: float = Field(gt=0)
    core_freq_hz: float | None = None
    uncore_freq_hz: float | None = None


class EnergyResponse(BaseModel):
    performance: float
    performance_unit: str
    package_power_watts: float
    efficiency_per_watt: float
    core_freq_hz: float | None
    uncore_freq_hz: float | None


class CompareRequest(BaseModel):
    probe: dict
    prediction: dict
    tolerance: float | None = None


class CompareResponse(BaseModel):
    measured: float
    predicted: float
    unit: str
    absolute_deviation: float
    relative_deviation: float
    tolerance: float | None
    passed: bool | None
