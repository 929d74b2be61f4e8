"""Real-hardware executor.

Measures on the host instead of simulating: pointer-chase latency, streaming
bandwidth, and scalar instruction timings run as small C programs compiled on
the fly, pinned to cores, and timed with the monotonic clock; cycle
conversion uses the host's base frequency.  Everything platform-specific is
capability-gated and detected up front: perf fixed counters, the RAPL energy
counter, MSR-based prefetcher toggling and uncore clamping, and affinity
control.  A probe whose capabilities are missing is refused, never faked.
"""

import ctypes
import os
import shutil
import statistics
import struct
import subprocess
import tempfile
import threading
import time
from pathlib import Path

from ..errors import CapabilityError, InvariantError, MeasurementError
from ..units import LINE_SIZE_BYTES
from .base import (
    DEFAULT_REPETITIONS,
    Environment,
    Executor,
    ProbeResult,
    SweepPoint,
    WARMUP_RUNS,
    make_result,
)
from .chain import build_pointer_chain
from .workloads import ExternalCommandWorkload

MSR_PREFETCH_CONTROL = 0x1A4
MSR_UNCORE_RATIO_LIMIT = 0x620
MSR_UNCORE_PERF_STATUS = 0x621

_PERF_TYPE_HARDWARE = 0
_PERF_COUNT_HW_CPU_CYCLES = 0


class _PerfEventAttr(ctypes.Structure):
    _fields_ = [
        ("type", ctypes.c_uint32), ("size", ctypes.c_uint32),
        ("config", ctypes.c_uint64), ("sample_period", ctypes.c_uint64),
        ("sample_type", ctypes.c_uint64), ("read_format", ctypes.c_uint64),
        ("flags", ctypes.c_uint64), ("wakeup_events", ctypes.c_uint32),
        ("bp_type", ctypes.c_uint32), ("bp_addr", ctypes.c_uint64),
        ("bp_len", ctypes.c_uint64), ("branch_sample_type", ctypes.c_uint64),
        ("sample_regs_user", ctypes.c_uint64), ("sample_stack_user", ctypes.c_uint32),
        ("clockid", ctypes.c_int32), ("sample_regs_intr", ctypes.c_uint64),
        ("aux_watermark", ctypes.c_uint32), ("sample_max_stack", ctypes.c_uint16),
        ("reserved", ctypes.c_uint16),
    ]


def _perf_open_cycles(cpu: int) -> int:
    """fd for a CPU-wide cycle counter, or raises OSError."""
    libc = ctypes.CDLL(None, use_errno=True)
    attr = _PerfEventAttr()
    attr.type = _PERF_TYPE_HARDWARE
    attr.size = ctypes.sizeof(_PerfEventAttr)
    attr.config = _PERF_COUNT_HW_CPU_CYCLES
    nr = {"x86_64": 298, "aarch64": 241}.get(os.uname().machine, 298)
    fd = libc.syscall(nr, ctypes.byref(attr), -1, cpu, -1, 0)
    if fd < 0:
        raise OSError(ctypes.get_errno(), "perf_event_open failed")
    return fd


def _read_counter(fd: int) -> int:
    return struct.unpack("q", os.read(fd, 8))[0]


_CHASE_SRC = r"""
#include <stdio.h>
#include <stdlib.h>
#include <stdint.h>
#include <time.h>

int main(int argc, char **argv) {
    long n = atol(argv[1]);
    long steps = atol(argv[2]);
    const char *path = argv[3];
    size_t line = 64;
    char *buf = aligned_alloc(4096, ((size_t)n * line + 4095) / 4096 * 4096);
    uint64_t *next = malloc((size_t)n * sizeof(uint64_t));
    FILE *f = fopen(path, "rb");
    if (!buf || !next || !f || fread(next, sizeof(uint64_t), n, f) != (size_t)n)
        return 2;
    fclose(f);
    for (long i = 0; i < n; i++)
        *(void **)(buf + i * line) = (void *)(buf + next[i] * line);
    volatile void *p = buf;
    for (long i = 0; i < 2 * n; i++) p = *(void **)p;  /* warm */
    struct timespec t0, t1;
    clock_gettime(CLOCK_MONOTONIC, &t0);
    for (long i = 0; i < steps; i++) p = *(void **)p;
    clock_gettime(CLOCK_MONOTONIC, &t1);
    double ns = (t1.tv_sec - t0.tv_sec) * 1e9 + (double)(t1.tv_nsec - t0.tv_nsec);
    if (p == (void *)1) fputs("", stderr);
    printf("NS_PER_ACCESS %.6f\n", ns / (double)steps);
    return 0;
}
"""

# loop bodies; n = element count, all arrays double
_KERNEL_BODIES = {
    "triad": ("a[i] = b[i] + s * c[i];", 3, 3),
    "triad_lea": ("a[i] = b[i] + s * c[i];", 3, 3),
    "triad_noarith": ("a[i] = b[i] + c[i];", 3, 3),
    "copy": ("a[i] = b[i];", 2, 2),
    "dot": ("acc += a[i] * b[i];", 2, 2),
    "load_only": ("acc += a[i] + b[i];", 2, 2),
    "store_only": ("a[i] = s;", 1, 1),
    "update": ("a[i] = s * a[i];", 1, 2),
    "daxpy": ("a[i] = a[i] + s * b[i];", 2, 3),
}

_BW_SRC = r"""
#include <stdio.h>
#include <stdlib.h>
#include <time.h>

static double run(double *restrict a, double *restrict b, double *restrict c,
                  double s, long n) {
    double acc = 0.0;
    #pragma GCC unroll 8
    for (long i = 0; i < n; i++) { BODY }
    return acc + a[0];
}

int main(int argc, char **argv) {
    long n = atol(argv[1]);
    long repeats = atol(argv[2]);
    double *a = malloc(n * sizeof(double));
    double *b = malloc(n * sizeof(double));
    double *c = malloc(n * sizeof(double));
    if (!a || !b || !c) return 2;
    for (long i = 0; i < n; i++) { a[i] = 1.0; b[i] = 2.0; c[i] = 0.5; }
    double sink = 0.0;
    sink += run(a, b, c, 3.0, n);
    sink += run(a, b, c, 3.0, n);
    struct timespec t0, t1;
    clock_gettime(CLOCK_MONOTONIC, &t0);
    for (long r = 0; r < repeats; r++) sink += run(a, b, c, 3.0, n);
    clock_gettime(CLOCK_MONOTONIC, &t1);
    double sec = (t1.tv_sec - t0.tv_sec) + (t1.tv_nsec - t0.tv_nsec) * 1e-9;
    double bytes = (double)n * 8.0 * STREAMS * (double)repeats;
    if (sink == 123.456) fputs("", stderr);
    printf("GBYTES_PER_S %.6f\n", bytes / sec / 1e9);
    return 0;
}
"""

_INST_SRC = r"""
#include <stdio.h>
#include <stdlib.h>
#include <math.h>
#include <time.h>

int main(int argc, char **argv) {
    long ops = atol(argv[1]);
    int chains = atoi(argv[2]);
    double x[16];
    for (int k = 0; k < 16; k++) x[k] = 1.000001 + k * 1e-7;
    struct timespec t0, t1;
    clock_gettime(CLOCK_MONOTONIC, &t0);
    for (long i = 0; i < ops; i += chains)
        for (int k = 0; k < chains; k++) { BODY }
    clock_gettime(CLOCK_MONOTONIC, &t1);
    double ns = (t1.tv_sec - t0.tv_sec) * 1e9 + (double)(t1.tv_nsec - t0.tv_nsec);
    double guard = 0.0;
    for (int k = 0; k < 16; k++) guard += x[k];
    if (guard == 123.456) fputs("", stderr);
    printf("NS_PER_OP %.6f\n", ns / (double)ops);
    return 0;
}
"""

_INST_BODIES = {
    "add": "x[k] = x[k] + 1e-9;",
    "mul": "x[k] = x[k] * 1.0000000001;",
    "div": "x[k] = 1.000001 / x[k];",
    "sqrt": "x[k] = sqrt(x[k]);",
    "fma": "x[k] = fma(x[k], 1.0000000001, 1e-12);",
}


def _sysfs_read(path: str) -> str | None:
    try:
        return Path(path).read_text().strip()
    except OSError:
        return None


def detect_base_frequency_hz() -> float | None:
    text = _sysfs_read("/sys/devices/system/cpu/cpu0/cpufreq/base_frequency")
    if text:
        return float(text) * 1e3
    # fall back to the model string, e.g. "... CPU @ 2.30GHz"
    try:
        for line in Path("/proc/cpuinfo").read_text().splitlines():
            if line.lower().startswith("model name") and "@" in line:
                ghz = line.rsplit("@", 1)[1].strip()
                if ghz.endswith("GHz"):
                    return float(ghz[:-3]) * 1e9
    except OSError:
        pass
    return None


class RaplReader:
    """Package energy from the powercap interface, wraparound-safe."""

    def __init__(self, domain: str = "intel-rapl:0"):
        base = Path("/sys/class/powercap") / domain
        self.energy_path = base / "energy_uj"
        self.max_path = base / "max_energy_range_uj"

    def available(self) -> bool:
        try:
            self.energy_path.read_text()
            return True
        except OSError:
            return False

    def read_uj(self) -> int:
        return int(self.energy_path.read_text().strip())

    def joules_between(self, start_uj: int, end_uj: int) -> float:
        if end_uj < start_uj:  # counter wrapped
            try:
                limit = int(self.max_path.read_text().strip())
            except OSError:
                limit = 2**32
            end_uj += limit
        return (end_uj - start_uj) / 1e6


class MsrAccess:
    def __init__(self, cpu: int = 0):
        self.path = f"/dev/cpu/{cpu}/msr"

    def writable(self) -> bool:
        return os.access(self.path, os.R_OK | os.W_OK)

    def readable(self) -> bool:
        return os.access(self.path, os.R_OK)

    def read(self, register: int) -> int:
        with open(self.path, "rb") as f:
            f.seek(register)
            return struct.unpack("Q", f.read(8))[0]

    def write(self, register: int, value: int) -> None:
        with open(self.path, "wb") as f:
            f.seek(register)
            f.write(struct.pack("Q", value))


class RealExecutor(Executor):
    """Capability-gated host measurement.

    One probe at a time; results always carry a fully populated environment
    fingerprint or the probe is refused.
    """

    kind = "real"

    def __init__(self, base_frequency_hz: float | None = None,
                 cc: str | None = None, workdir: str | None = None):
        self._lock = threading.Lock()
        self.cc = cc or shutil.which("cc") or shutil.which("gcc")
        self.base_frequency_hz = base_frequency_hz or detect_base_frequency_hz()
        self.rapl = RaplReader()
        self.msr = MsrAccess()
        self._workdir = Path(workdir) if workdir else Path(
            tempfile.mkdtemp(prefix="ecmkit-real-"))
        self._binaries: dict[str, Path] = {}
        self.capabilities = self._detect_capabilities()

    def _detect_capabilities(self) -> frozenset:
        caps = set()
        if hasattr(os, "sched_setaffinity"):
            caps.add("core_pinning")
        if self.base_frequency_hz and self.cc:
            caps.add("cycle_counter")
        try:
            fd = _perf_open_cycles(0)
            os.close(fd)
            caps.add("fixed_counters")
        except OSError:
            pass
        if self.rapl.available():
            caps.add("energy_counter")
        if self.msr.writable():
            caps.add("prefetcher_toggle")
            caps.add("uncore_clamp")
        elif _sysfs_write_ok(
                "/sys/devices/system/cpu/intel_uncore_frequency/package_00_die_00/max_freq_khz"):
            caps.add("uncore_clamp")
        return frozenset(caps)

    # -- compilation ---------------------------------------------------------

    def _compile(self, tag: str, source: str, extra_flags: tuple[str, ...] = ()) -> Path:
        if tag in self._binaries:
            return self._binaries[tag]
        if not self.cc:
            raise CapabilityError("no C compiler found; real probes unavailable")
        src = self._workdir / f"{tag}.c"
        binary = self._workdir / tag
        src.write_text(source)
        cmd = [self.cc, "-O3", "-funroll-loops", str(src), "-o", str(binary),
               "-lm", *extra_flags]
        proc = subprocess.run(cmd, capture_output=True, text=True)
        if proc.returncode != 0:
            raise MeasurementError(f"compiling {tag} failed: {proc.stderr[-500:]}")
        self._binaries[tag] = binary
        return binary

    def _run_pinned(self, binary: Path, args: list[str], core: int,
                    keyword: str) -> float:
        def preexec():
            try:
                os.sched_setaffinity(0, {core})
            except OSError:
                pass
        proc = subprocess.run(
            [str(binary), *args], capture_output=True, text=True,
            preexec_fn=preexec if "core_pinning" in self.capabilities else None)
        if proc.returncode != 0:
            raise MeasurementError(
                f"{binary.name} exited with {proc.returncode}: {proc.stderr[-300:]}")
        for line in proc.stdout.splitlines():
            if line.startswith(keyword):
                return float(line.split()[1])
        raise MeasurementError(f"{binary.name} printed no {keyword} line")

    def _environment(self, cores: tuple[int, ...],
                     prefetchers_on: bool) -> Environment:
        if not self.base_frequency_hz:
            raise CapabilityError("host base frequency unknown; pass base_frequency_hz")
        return Environment(
            core_freq_hz=self.base_frequency_hz,
            uncore_freq_hz=self._read_uncore_hz(),
            prefetchers_on=prefetchers_on,
            pinned_cores=cores,
            snoop_mode=None,  # only the BIOS knows; never guessed
        )

    def _read_uncore_hz(self) -> float | None:
        if self.msr.readable():
            try:
                ratio = self.msr.read(MSR_UNCORE_PERF_STATUS) & 0x7F
                return ratio * 100e6
            except OSError:
                pass
        return None

    # -- prefetcher control ----------------------------------------------------

    def _prefetchers(self, off: bool) -> int | None:
        """Toggle the four L1/L2 prefetchers; returns the previous MSR value."""
        previous = self.msr.read(MSR_PREFETCH_CONTROL)
        value = previous | 0xF if off else previous & ~0xF
        self.msr.write(MSR_PREFETCH_CONTROL, value)
        return previous

    # -- probes ---------------------------------------------------------------

    def run_latency_probe(self, working_set_bytes: int,
                          repetitions: int = DEFAULT_REPETITIONS,
                          layout: str = "consecutive_cl",
                          core: int = 0) -> ProbeResult:
        self.require("prefetcher_toggle", "latency probe")
        self.require("cycle_counter", "latency probe")
        if working_set_bytes < 2 * LINE_SIZE_BYTES:
            raise InvariantError("latency probe needs at least two cache lines")
        working_set_bytes -= working_set_bytes % LINE_SIZE_BYTES
        with self._lock:
            chain = build_pointer_chain(working_set_bytes, layout)
            chain_file = self._workdir / "chain.bin"
            chain_file.write_bytes(struct.pack(f"{chain.n_lines}Q", *chain.next_line))
            binary = self._compile("chase", _CHASE_SRC)
            steps = max(10 * chain.n_lines, 2_000_000)
            previous = self._prefetchers(off=True)
            try:
                reps = []
                for _ in range(repetitions + WARMUP_RUNS):
                    ns = self._run_pinned(
                        binary, [str(chain.n_lines), str(steps), str(chain_file)],
                        core, "NS_PER_ACCESS")
                    reps.append(ns * self.base_frequency_hz / 1e9)
                reps = reps[WARMUP_RUNS:]
            finally:
                if previous is not None:
                    self.msr.write(MSR_PREFETCH_CONTROL, previous)
        return make_result(
            "latency",
            {"working_set_bytes": working_set_bytes, "layout": layout},
            reps, "min", "cy/access",
            self._environment((core,), prefetchers_on=False))

    def run_bandwidth_probe(self, kernel, working_set_bytes: int, cores: int = 1,
                            repetitions: int = DEFAULT_REPETITIONS) -> ProbeResult:
        """Streaming bandwidth from a compiled C kernel, median statistic.

        cores > 1 pins one process per core and sums their bandwidths.
        """
        self.require("cycle_counter", "bandwidth probe")
        self.require("core_pinning", "bandwidth probe")
        name = kernel.name if hasattr(kernel, "name") else str(kernel)
        if name not in _KERNEL_BODIES:
            raise CapabilityError(
                f"kernel {name!r} has no real-executor template "
                f"(have: {sorted(_KERNEL_BODIES)})")
        host_cores = len(os.sched_getaffinity(0))
        if cores < 1 or cores > host_cores:
            raise InvariantError(f"cores must be within 1..{host_cores} on this host")
        body, streams, arrays = _KERNEL_BODIES[name]
        src = _BW_SRC.replace("BODY", body).replace("STREAMS", str(streams))
        with self._lock:
            binary = self._compile(f"bw_{name}", src, ("-march=native",))
            n = max(64, working_set_bytes // 8 // arrays)
            repeats = max(1, int(50_000_000 / max(1, n * arrays)))
            reps = []
            for _ in range(repetitions + WARMUP_RUNS):
                if cores == 1:
                    gbs = self._run_pinned(binary, [str(n), str(repeats)], 0,
                                           "GBYTES_PER_S")
                else:
                    gbs = self._parallel_bandwidth(binary, n, repeats, cores)
                reps.append(gbs * 1e9 / self.base_frequency_hz)
            reps = reps[WARMUP_RUNS:]
        value_gbs = statistics.median(reps) * self.base_frequency_hz / 1e9
        return make_result(
            "bandwidth",
            {"kernel": name, "working_set_bytes": working_set_bytes, "cores": cores},
            reps, "median", "B/cy",
            self._environment(tuple(range(cores)), prefetchers_on=True),
            extra_values={"GB/s": value_gbs})

    def _parallel_bandwidth(self, binary: Path, n: int, repeats: int,
                            cores: int) -> float:
        procs = []
        for core in range(cores):
            def preexec(c=core):
                os.sched_setaffinity(0, {c})
            procs.append(subprocess.Popen(
                [str(binary), str(n), str(repeats)], stdout=subprocess.PIPE,
                text=True, preexec_fn=preexec))
        total = 0.0
        for proc in procs:
            out, _ = proc.communicate()
            if proc.returncode != 0:
                raise MeasurementError("parallel bandwidth worker failed")
            total += float(out.split()[1])
        return total

    def run_instruction_probe(self, mnemonic: str, width: str, precision: str,
                              mode: str = "latency", chains: int = 8,
                              repetitions: int = DEFAULT_REPETITIONS) -> ProbeResult:
        """Scalar-chain instruction timing; vector encodings have no template
        here and are refused."""
        self.require("cycle_counter", "instruction probe")
        if width != "scalar":
            raise CapabilityError(
                "the real executor only encodes scalar instruction chains; "
                f"{width} is unsupported")
        if mnemonic not in _INST_BODIES:
            raise CapabilityError(
                f"instruction {mnemonic!r} has no real-executor template "
                f"(have: {sorted(_INST_BODIES)})")
        k = 1 if mode == "latency" else max(1, min(chains, 16))
        src = _INST_SRC.replace("BODY", _INST_BODIES[mnemonic])
        with self._lock:
            binary = self._compile(f"inst_{mnemonic}", src, ("-march=native",))
            ops = 50_000_000
            reps = []
            for _ in range(repetitions + WARMUP_RUNS):
                ns = self._run_pinned(binary, [str(ops), str(k)], 0, "NS_PER_OP")
                reps.append(ns * self.base_frequency_hz / 1e9)
            reps = reps[WARMUP_RUNS:]
        return make_result(
            "instruction",
            {"mnemonic": mnemonic, "width": width, "precision": precision,
             "mode": mode, "chains": k},
            reps, "min", "cy/inst",
            self._environment((0,), prefetchers_on=True))

    def observe_effective_frequency(self, duration_s: float = 0.5,
                                    workload_class: str = "scalar",
                                    cores: int | None = None) -> dict:
        """Attained clocks from fixed cycle counters over wall time while the
        target cores spin."""
        self.require("fixed_counters", "frequency observation")
        cpu_list = list(range(cores)) if cores else [0]
        stop = threading.Event()

        def spin(core):
            os.sched_setaffinity(0, {core})
            x = 1.0001
            while not stop.is_set():
                for _ in range(10000):
                    x = x * 1.0000001 + 1e-9
            return x

        threads = [threading.Thread(target=spin, args=(c,), daemon=True)
                   for c in cpu_list]
        fds = [_perf_open_cycles(c) for c in cpu_list]
        try:
            for t in threads:
                t.start()
            start = [(fd, _read_counter(fd)) for fd in fds]
            t0 = time.perf_counter()
            time.sleep(duration_s)
            elapsed = time.perf_counter() - t0
            core_hz = [( _read_counter(fd) - c0) / elapsed for fd, c0 in start]
        finally:
            stop.set()
            for t in threads:
                t.join(timeout=1.0)
            for fd in fds:
                os.close(fd)
        return {"core_hz": core_hz, "uncore_hz": self._read_uncore_hz(),
                "duration_s": duration_s}

    # -- sweeps -----------------------------------------------------------------

    def run_sweep_point(self, workload, core_freq_hz, uncore_freq_hz, cores,
                        dwell_s, rng) -> SweepPoint:
        """One sweep cell on the host.

        Frequency clamps need the uncore_clamp capability; energy needs the
        RAPL counter.  Unclamped degenerate grids (both axes None) run on any
        host, wrapping external commands or compiled kernels.
        """
        if core_freq_hz is not None or uncore_freq_hz is not None:
            self.require("uncore_clamp", "clamped sweep")
        previous_clamp = None
        if uncore_freq_hz is not None:
            previous_clamp = self._clamp_uncore(uncore_freq_hz)
        energy_start = self.rapl.read_uj() if "energy_counter" in self.capabilities else None
        t0 = time.perf_counter()
        try:
            if isinstance(workload, ExternalCommandWorkload):
                perf, unit = workload.run()
            else:
                name = getattr(workload, "name", str(workload))
                ws = getattr(workload, "working_set_bytes", 1 << 26)
                result = self.run_bandwidth_probe(
                    name, ws, cores, repetitions=max(9, DEFAULT_REPETITIONS // 2))
                perf, unit = result.extra_values["GB/s"], "GB/s"
        finally:
            if previous_clamp is not None:
                self.msr.write(MSR_UNCORE_RATIO_LIMIT, previous_clamp)
        duration = max(time.perf_counter() - t0, 1e-9)
        energy = 0.0
        if energy_start is not None:
            energy = self.rapl.joules_between(energy_start, self.rapl.read_uj())
        observed = self.base_frequency_hz or 0.0
        if "fixed_counters" in self.capabilities:
            try:
                observed = statistics.fmean(
                    self.observe_effective_frequency(0.1, cores=1)["core_hz"])
            except OSError:
                pass
        return SweepPoint(
            requested_core_freq_hz=core_freq_hz,
            requested_uncore_freq_hz=uncore_freq_hz,
            cores=cores, performance=perf, unit=unit,
            package_energy_joules=energy, duration_s=duration,
            observed_core_freq_hz=observed,
            observed_uncore_freq_hz=self._read_uncore_hz(),
        )

    def _clamp_uncore(self, hz: float) -> int | None:
        ratio = int(round(hz / 100e6))
        previous = self.msr.read(MSR_UNCORE_RATIO_LIMIT)
        self.msr.write(MSR_UNCORE_RATIO_LIMIT, (ratio << 8) | ratio)
        return previous


def _sysfs_write_ok(path: str) -> bool:
    return os.access(path, os.W_OK)
