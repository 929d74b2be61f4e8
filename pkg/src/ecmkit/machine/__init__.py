from .loader import SHIPPED_MACHINES, load_machine, serialize_machine, shipped_machine_info
from .types import (
    CacheLevelSpec,
    FrequencyDomainSpec,
    GatherProfile,
    InstSpec,
    MachineDescription,
    MemorySpec,
    PortModel,
    PowerModel,
    SnoopProfile,
    UnitGroup,
)

__all__ = [
    "CacheLevelSpec", "FrequencyDomainSpec", "GatherProfile", "InstSpec",
    "MachineDescription", "MemorySpec", "PortModel", "PowerModel",
    "SHIPPED_MACHINES", "SnoopProfile", "UnitGroup", "load_machine",
    "serialize_machine", "shipped_machine_info",
]
