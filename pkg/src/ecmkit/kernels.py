"""Loop-kernel descriptions and per-level traffic derivation.

A kernel is a single innermost streaming loop described at instruction
granularity: how many loads, stores, and arithmetic operations one iteration
issues, which data streams it touches, and the dependencies between the
instructions.  Traffic profiles walk each stream down the cache hierarchy of
a concrete machine for a given working-set size.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InvariantError, LookupError_, SchemaError
from .machine.types import MachineDescription

# a working set "resides" in a level only while it uses at most half the
# capacity, keeping clear of the conflict-miss gray zone near full capacity
FILL_FACTOR = 0.5

_SIMD_BYTES = {"scalar": 8, "sse": 16, "avx": 32}
_ELEMENT_BYTES = {"sp": 4, "dp": 8}

BUILTIN_KERNELS = ("triad", "triad_lea", "triad_noarith", "dot", "load_only",
                   "copy", "store_only", "nt_store", "update", "daxpy",
                   "gather_chain")

# canonical access pattern used to match sustained-bandwidth and derate
# entries in machine files
_PATTERN_ALIASES = {"gather_chain": "load_only"}


@dataclass(frozen=True)
class StreamDecl:
    name: str
    direction: str  # load | store | nt_store
    bytes_per_element: int
    write_allocate: bool = False

    def validate(self) -> None:
        if self.direction not in ("load", "store", "nt_store"):
            raise InvariantError(f"stream {self.name}: unknown direction {self.direction!r}")
        if self.bytes_per_element <= 0:
            raise InvariantError(f"stream {self.name}: bytes_per_element must be > 0")
        if self.direction == "load" and self.write_allocate:
            raise InvariantError(f"stream {self.name}: write_allocate applies to stores only")
        if self.direction == "nt_store" and self.write_allocate:
            raise InvariantError(
                f"stream {self.name}: nt_store bypasses the hierarchy, "
                "write_allocate must be false")


@dataclass(frozen=True)
class KernelInstruction:
    mnemonic: str
    width: str
    precision: str
    count_per_iteration: int
    depends_on: tuple[int, ...] = ()


@dataclass(frozen=True)
class KernelDescriptor:
    name: str
    isa_width: str  # scalar | sse | avx
    instructions: tuple[KernelInstruction, ...]
    streams: tuple[StreamDecl, ...]
    elements_per_iteration: int
    flops_per_iteration: int
    # (producer index, consumer index) edges crossing into the next iteration,
    # e.g. an accumulator feeding itself
    loop_carried: tuple[tuple[int, int], ...] = ()

    def validate(self) -> None:
        if self.isa_width not in _SIMD_BYTES:
            raise InvariantError(f"kernel {self.name}: unknown isa_width {self.isa_width!r}")
        if self.elements_per_iteration < 1:
            raise InvariantError(f"kernel {self.name}: elements_per_iteration must be >= 1")
        if self.flops_per_iteration < 0:
            raise InvariantError(f"kernel {self.name}: flops_per_iteration must be >= 0")
        n = len(self.instructions)
        for i, inst in enumerate(self.instructions):
            if inst.count_per_iteration < 0:
                raise InvariantError(
                    f"kernel {self.name}: instruction {i} has a negative count")
            for dep in inst.depends_on:
                if not 0 <= dep < n:
                    raise InvariantError(
                        f"kernel {self.name}: instruction {i} depends on missing index {dep}")
                if dep >= i:
                    # indices within one iteration must form a DAG; the
                    # tuple order is program order, so back-references only
                    raise InvariantError(
                        f"kernel {self.name}: dependency {i} -> {dep} is not acyclic")
        for prod, cons in self.loop_carried:
            if not (0 <= prod < n and 0 <= cons < n):
                raise InvariantError(f"kernel {self.name}: loop-carried edge out of range")
        for stream in self.streams:
            stream.validate()
        # SIMD lane count must divide the per-iteration element count
        lanes = self.simd_lanes()
        if lanes and self.elements_per_iteration % lanes:
            raise InvariantError(
                f"kernel {self.name}: elements_per_iteration "
                f"({self.elements_per_iteration}) is not a multiple of the "
                f"{self.isa_width} vector length ({lanes})")

    def simd_lanes(self) -> int:
        """Elements per vector register for this kernel's data width."""
        precisions = {i.precision for i in self.instructions if i.precision in _ELEMENT_BYTES}
        if not precisions:
            return 0
        elem = min(_ELEMENT_BYTES[p] for p in precisions)
        return max(1, _SIMD_BYTES[self.isa_width] // elem)

    def pattern(self) -> str:
        return _PATTERN_ALIASES.get(self.name, self.name)

    def count(self, mnemonic: str) -> int:
        return sum(i.count_per_iteration for i in self.instructions if i.mnemonic == mnemonic)

    def uses_lea_trick(self) -> bool:
        """Store addresses are pre-computed so the simple store AGU can take
        them; signalled by lea instructions in the body."""
        return self.count("lea") > 0


def _stream(name, direction, bytes_per_element=8, write_allocate=False):
    return StreamDecl(name, direction, bytes_per_element, write_allocate)


def builtin_kernel(name: str, isa_width: str = "avx") -> KernelDescriptor:
    """One of the shipped streaming kernels at the requested SIMD width.

    Double precision throughout.  FMA-less machines are handled at model
    evaluation time (an fma lowers to mul + add), not here.
    """
    if isa_width not in _SIMD_BYTES:
        raise LookupError_(f"unknown isa width {isa_width!r}", list(_SIMD_BYTES))
    if name not in BUILTIN_KERNELS:
        import difflib
        raise LookupError_(f"unknown builtin kernel {name!r}",
                           difflib.get_close_matches(name, BUILTIN_KERNELS, n=3, cutoff=0.0))
    lanes = max(1, _SIMD_BYTES[isa_width] // 8)
    I = KernelInstruction

    if name == "triad":
        # A[i] = B[i] + s * C[i]
        return _mk(name, isa_width, lanes, flops_per_element=2, instructions=(
            I("load", isa_width, "dp", 1),                      # B
            I("load", isa_width, "dp", 1),                      # C
            I("fma", isa_width, "dp", 1, depends_on=(0, 1)),
            I("store", isa_width, "dp", 1, depends_on=(2,)),    # A
        ), streams=(
            _stream("A", "store", write_allocate=True),
            _stream("B", "load"), _stream("C", "load"),
        ))
    if name == "triad_lea":
        # triad with the store address pre-computed on a fast LEA unit so the
        # simple store AGU can finish it, freeing the general AGUs
        return _mk(name, isa_width, lanes, flops_per_element=2, instructions=(
            I("load", isa_width, "dp", 1),
            I("load", isa_width, "dp", 1),
            I("lea", "scalar", "none", 1),
            I("fma", isa_width, "dp", 1, depends_on=(0, 1)),
            I("store", isa_width, "dp", 1, depends_on=(2, 3)),
        ), streams=(
            _stream("A", "store", write_allocate=True),
            _stream("B", "load"), _stream("C", "load"),
        ))
    if name == "triad_noarith":
        # the pure data-movement variant: LEA-assisted stores, no FMA
        return _mk(name, isa_width, lanes, flops_per_element=0, instructions=(
            I("load", isa_width, "dp", 1),
            I("load", isa_width, "dp", 1),
            I("lea", "scalar", "none", 1),
            I("store", isa_width, "dp", 1, depends_on=(0, 1, 2)),
        ), streams=(
            _stream("A", "store", write_allocate=True),
            _stream("B", "load"), _stream("C", "load"),
        ))
    if name == "dot":
        # acc += A[i] * B[i]; the accumulator chains across iterations
        return _mk(name, isa_width, lanes, flops_per_element=2, instructions=(
            I("load", isa_width, "dp", 1),
            I("load", isa_width, "dp", 1),
            I("fma", isa_width, "dp", 1, depends_on=(0, 1)),
        ), streams=(
            _stream("A", "load"), _stream("B", "load"),
        ), loop_carried=((2, 2),))
    if name == "load_only":
        # two loads per iteration to keep both load ports busy
        return _mk(name, isa_width, 2 * lanes, flops_per_element=0, instructions=(
            I("load", isa_width, "dp", 2),
        ), streams=(_stream("A", "load"),))
    if name == "copy":
        return _mk(name, isa_width, lanes, flops_per_element=0, instructions=(
            I("load", isa_width, "dp", 1),
            I("store", isa_width, "dp", 1, depends_on=(0,)),
        ), streams=(
            _stream("A", "store", write_allocate=True), _stream("B", "load"),
        ))
    if name == "store_only":
        return _mk(name, isa_width, lanes, flops_per_element=0, instructions=(
            I("store", isa_width, "dp", 1),
        ), streams=(_stream("A", "store", write_allocate=True),))
    if name == "nt_store":
        return _mk(name, isa_width, lanes, flops_per_element=0, instructions=(
            I("store", isa_width, "dp", 1),
        ), streams=(_stream("A", "nt_store"),))
    if name == "update":
        # A[i] = s * A[i]; the load brings the line in, so no write-allocate
        return _mk(name, isa_width, lanes, flops_per_element=1, instructions=(
            I("load", isa_width, "dp", 1),
            I("mul", isa_width, "dp", 1, depends_on=(0,)),
            I("store", isa_width, "dp", 1, depends_on=(1,)),
        ), streams=(
            _stream("A", "load"), _stream("A", "store", write_allocate=False),
        ))
    if name == "daxpy":
        # A[i] = A[i] + s * B[i]
        return _mk(name, isa_width, lanes, flops_per_element=2, instructions=(
            I("load", isa_width, "dp", 1),
            I("load", isa_width, "dp", 1),
            I("fma", isa_width, "dp", 1, depends_on=(0, 1)),
            I("store", isa_width, "dp", 1, depends_on=(2,)),
        ), streams=(
            _stream("A", "load"), _stream("B", "load"),
            _stream("A", "store", write_allocate=False),
        ))
    if name == "gather_chain":
        if isa_width != "avx":
            raise LookupError_("gather_chain requires isa_width 'avx'")
        # serially dependent gathers, one vector's worth of elements each
        return _mk(name, isa_width, lanes, flops_per_element=0, instructions=(
            I("gather", isa_width, "dp", 1),
        ), streams=(_stream("A", "load"),), loop_carried=((0, 0),))
    raise AssertionError(name)


def _mk(name, isa_width, elements, flops_per_element, instructions, streams,
        loop_carried=()) -> KernelDescriptor:
    kd = KernelDescriptor(
        name=name, isa_width=isa_width, instructions=instructions,
        streams=streams, elements_per_iteration=elements,
        flops_per_iteration=flops_per_element * elements,
        loop_carried=loop_carried)
    kd.validate()
    return kd


# -- kernel files -----------------------------------------------------------

def kernel_to_dict(kd: KernelDescriptor) -> dict:
    return {"kernel": {
        "name": kd.name,
        "isa_width": kd.isa_width,
        "elements_per_iteration": kd.elements_per_iteration,
        "flops_per_iteration": kd.flops_per_iteration,
        "instructions": [
            {"mnemonic": i.mnemonic, "width": i.width, "precision": i.precision,
             "count_per_iteration": i.count_per_iteration,
             "depends_on": list(i.depends_on)}
            for i in kd.instructions],
        "streams": [
            {"name": s.name, "direction": s.direction,
             "bytes_per_element": s.bytes_per_element,
             "write_allocate": s.write_allocate}
            for s in kd.streams],
        "loop_carried": [list(edge) for edge in kd.loop_carried],
    }}


def kernel_from_dict(doc: dict) -> KernelDescriptor:
    if "kernel" not in doc:
        raise SchemaError("kernel file: missing top-level 'kernel' key")
    k = doc["kernel"]
    try:
        kd = KernelDescriptor(
            name=k["name"],
            isa_width=k["isa_width"],
            elements_per_iteration=int(k["elements_per_iteration"]),
            flops_per_iteration=int(k["flops_per_iteration"]),
            instructions=tuple(
                KernelInstruction(
                    mnemonic=i["mnemonic"], width=i["width"], precision=i["precision"],
                    count_per_iteration=int(i["count_per_iteration"]),
                    depends_on=tuple(i.get("depends_on", ())))
                for i in k["instructions"]),
            streams=tuple(
                StreamDecl(name=s["name"], direction=s["direction"],
                           bytes_per_element=int(s["bytes_per_element"]),
                           write_allocate=bool(s.get("write_allocate", False)))
                for s in k["streams"]),
            loop_carried=tuple(tuple(edge) for edge in k.get("loop_carried", ())),
        )
    except KeyError as exc:
        raise SchemaError(f"kernel file: missing key {exc}") from exc
    kd.validate()
    return kd


def load_kernel(source, isa_width: str = "avx") -> KernelDescriptor:
    """Resolve a builtin kernel name or a kernel .json file."""
    if isinstance(source, KernelDescriptor):
        return source
    if isinstance(source, dict):
        return kernel_from_dict(source)
    if isinstance(source, str) and source in BUILTIN_KERNELS:
        return builtin_kernel(source, isa_width)
    path = Path(source)
    if path.exists():
        return kernel_from_dict(json.loads(path.read_text()))
    return builtin_kernel(str(source), isa_width)  # raises with suggestions


# -- traffic ----------------------------------------------------------------

@dataclass(frozen=True)
class LinkTraffic:
    load_bytes: float = 0.0
    store_bytes: float = 0.0

    @property
    def total_bytes(self) -> float:
        return self.load_bytes + self.store_bytes


@dataclass(frozen=True)
class TrafficProfile:
    """Bytes per iteration crossing each inter-level link.

    Link names run inward-out: reg_l1, l1_l2, l2_l3, l3_mem (for a three-level
    hierarchy).  The residence level is the innermost level whose scaled
    capacity holds the working set.
    """

    kernel_name: str
    pattern: str
    working_set_bytes: int
    residence_level: str  # level name or "MEM"
    links: dict[str, LinkTraffic] = field(default_factory=dict)

    def link(self, name: str) -> LinkTraffic:
        return self.links.get(name, LinkTraffic())


def link_names(md: MachineDescription) -> list[str]:
    names = [lv.level_name.lower() for lv in md.cache_levels]
    links = [f"reg_{names[0]}"]
    links += [f"{a}_{b}" for a, b in zip(names, names[1:])]
    links.append(f"{names[-1]}_mem")
    return links


def residence_level(md: MachineDescription, working_set_bytes: int, cores: int = 1) -> str:
    """Innermost level that holds the working set under the fill factor.

    Per-core levels see the per-core share of the set; shared levels are
    split between the participating cores, which cancels out.
    """
    share = working_set_bytes / cores
    for lv in md.cache_levels:
        capacity = lv.capacity_bytes if lv.per_core else lv.capacity_bytes / cores
        if share <= FILL_FACTOR * capacity:
            return lv.level_name
    return "MEM"


def traffic_profile(kernel: KernelDescriptor, working_set_bytes: int,
                    md: MachineDescription, cores: int = 1) -> TrafficProfile:
    """Per-link bytes per iteration for a kernel and working-set size.

    Every stream crosses all links between the registers and its residence
    level.  Write-allocate stores add a load-direction line transfer on each
    cache link they cross (the register<->L1 link never write-allocates).
    Non-temporal stores bypass the cache links entirely and appear only on
    the outermost link, store direction.
    """
    if working_set_bytes <= 0:
        raise InvariantError("working_set_bytes must be > 0")
    names = link_names(md)
    level_of = {lv.level_name: i for i, lv in enumerate(md.cache_levels)}
    residence = residence_level(md, working_set_bytes, cores)
    # depth = number of links each stream crosses
    depth = len(names) if residence == "MEM" else level_of[residence] + 1

    load = dict.fromkeys(names, 0.0)
    store = dict.fromkeys(names, 0.0)
    for s in kernel.streams:
        bytes_per_iter = s.bytes_per_element * kernel.elements_per_iteration
        if s.direction == "nt_store":
            store[names[0]] += bytes_per_iter  # still issued through the core
            store[names[-1]] += bytes_per_iter
            continue
        for i in range(depth):
            if s.direction == "load":
                load[names[i]] += bytes_per_iter
            else:
                store[names[i]] += bytes_per_iter
                if s.write_allocate and i > 0:
                    load[names[i]] += bytes_per_iter
    links = {name: LinkTraffic(load[name], store[name])
             for name in names if load[name] or store[name]}
    return TrafficProfile(
        kernel_name=kernel.name, pattern=kernel.pattern(),
        working_set_bytes=working_set_bytes, residence_level=residence,
        links=links)


