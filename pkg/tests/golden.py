"""Golden reference values for the four shipped machine descriptions.

Transcribed once from the published measurement tables; the machine files
must reproduce every value here exactly (pure data-entry check).
"""

# -- chip-level specifications ------------------------------------------------
# name -> field -> value
CHIP_SPECS = {
    "snb": {
        "microarchitecture": "Sandy Bridge-EP",
        "chip_model": "Xeon E5-2680",
        "release_date": "Q1/2012",
        "base_hz": 2.7e9,
        "max_all_core_turbo_hz": None,
        "avx_base_hz": None,
        "avx_all_core_turbo_hz": None,
        "cores": 8,
        "threads": 16,
        "simd_extensions": "AVX",
        "memory_configuration": "4 ch. DDR3-1600",
        "theoretical_bw": 51.2e9,
        "l1_capacity": 32 * 1024,
        "l2_capacity": 256 * 1024,
        "l3_capacity": 20 * 1024 * 1024,
        "l1_load_path": (2, 16),   # units x B/cy
        "l1_store_path": (1, 16),
        "l1_l2_bw": 32,
        "l2_l3_bw": 32,
    },
    "ivb": {
        "microarchitecture": "Ivy Bridge-EP",
        "chip_model": "Xeon E5-2690 v2",
        "release_date": "Q3/2013",
        "base_hz": 3.0e9,
        "max_all_core_turbo_hz": None,
        "avx_base_hz": None,
        "avx_all_core_turbo_hz": None,
        "cores": 10,
        "threads": 20,
        "simd_extensions": "AVX",
        "memory_configuration": "4 ch. DDR3-1866",
        "theoretical_bw": 59.7e9,
        "l1_capacity": 32 * 1024,
        "l2_capacity": 256 * 1024,
        "l3_capacity": 25 * 1024 * 1024,
        "l1_load_path": (2, 16),
        "l1_store_path": (1, 16),
        "l1_l2_bw": 32,
        "l2_l3_bw": 32,
    },
    "hsw": {
        "microarchitecture": "Haswell-EP",
        "chip_model": "Xeon E5-2695 v3",
        "release_date": "Q3/2014",
        "base_hz": 2.3e9,
        "max_all_core_turbo_hz": 2.8e9,
        "avx_base_hz": 1.9e9,
        "avx_all_core_turbo_hz": 2.6e9,
        "cores": 14,
        "threads": 28,
        "simd_extensions": "AVX2, FMA3",
        "memory_configuration": "4 ch. DDR4-2133",
        "theoretical_bw": 68.2e9,
        "l1_capacity": 32 * 1024,
        "l2_capacity": 256 * 1024,
        "l3_capacity": 35 * 1024 * 1024,
        "l1_load_path": (2, 32),
        "l1_store_path": (1, 32),
        "l1_l2_bw": 64,
        "l2_l3_bw": 32,
    },
    "bdw": {
        "microarchitecture": "Broadwell-EP",
        "chip_model": "E5-2697 v4",
        "release_date": "Q1/2016",
        "base_hz": 2.3e9,
        "max_all_core_turbo_hz": 2.8e9,
        "avx_base_hz": 2.0e9,
        "avx_all_core_turbo_hz": 2.7e9,
        "cores": 18,
        "threads": 36,
        "simd_extensions": "AVX2, FMA3",
        "memory_configuration": "4 ch. DDR4-2400",
        "theoretical_bw": 76.8e9,
        "l1_capacity": 32 * 1024,
        "l2_capacity": 256 * 1024,
        "l3_capacity": 45 * 1024 * 1024,
        "l1_load_path": (2, 32),
        "l1_store_path": (1, 32),
        "l1_l2_bw": 64,
        "l2_l3_bw": 32,
    },
}

# -- instruction timings: (mnemonic, width, precision) -> (latency, inv_tp) ---
# column order in the source table: BDW, HSW, IVB, SNB
def _per_machine(bdw, hsw, ivb, snb):
    return {"bdw": bdw, "hsw": hsw, "ivb": ivb, "snb": snb}


INSTRUCTION_TIMINGS = {
    ("div", "avx", "dp"): _per_machine((24, 16), (35, 28), (35, 28), (45, 44)),
    ("div", "sse", "dp"): _per_machine((14, 8), (20, 14), (20, 14), (22, 22)),
    ("div", "scalar", "dp"): _per_machine((14, 4.5), (20, 14), (20, 14), (22, 22)),
    ("div", "avx", "sp"): _per_machine((17, 10), (21, 14), (21, 14), (29, 28)),
    ("div", "sse", "sp"): _per_machine((11, 5), (13, 7), (13, 7), (14, 14)),
    ("div", "scalar", "sp"): _per_machine((11, 2.5), (13, 7), (13, 7), (14, 14)),
    ("sqrt", "avx", "dp"): _per_machine((35, 28), (35, 28), (35, 28), (44, 43)),
    ("sqrt", "sse", "dp"): _per_machine((20, 14), (20, 14), (20, 14), (23, 22)),
    ("sqrt", "scalar", "dp"): _per_machine((20, 7), (20, 14), (20, 14), (23, 22)),
    ("sqrt", "avx", "sp"): _per_machine((21, 14), (21, 14), (21, 14), (23, 22)),
    ("sqrt", "sse", "sp"): _per_machine((13, 7), (13, 7), (13, 7), (15, 14)),
    ("sqrt", "scalar", "sp"): _per_machine((13, 4), (13, 7), (13, 7), (15, 14)),
    ("rcp", "avx", "sp"): _per_machine((7, 2), (7, 2), (7, 2), (7, 2)),
    ("rcp", "sse", "sp"): _per_machine((5, 1), (5, 1), (5, 1), (5, 1)),
    ("rcp", "scalar", "sp"): _per_machine((5, 1), (5, 1), (5, 1), (5, 1)),
    # add: 3 cy everywhere except SSE/scalar on BDW (4 cy)
    ("add", "avx", "dp"): _per_machine((3, 1), (3, 1), (3, 1), (3, 1)),
    ("add", "avx", "sp"): _per_machine((3, 1), (3, 1), (3, 1), (3, 1)),
    ("add", "sse", "dp"): _per_machine((4, 1), (3, 1), (3, 1), (3, 1)),
    ("add", "sse", "sp"): _per_machine((4, 1), (3, 1), (3, 1), (3, 1)),
    ("add", "scalar", "dp"): _per_machine((4, 1), (3, 1), (3, 1), (3, 1)),
    ("add", "scalar", "sp"): _per_machine((4, 1), (3, 1), (3, 1), (3, 1)),
    ("mul", "avx", "dp"): _per_machine((3, 0.5), (5, 0.5), (5, 1), (5, 1)),
    ("mul", "avx", "sp"): _per_machine((3, 0.5), (5, 0.5), (5, 1), (5, 1)),
    ("mul", "sse", "dp"): _per_machine((3, 0.5), (5, 0.5), (5, 1), (5, 1)),
    ("mul", "sse", "sp"): _per_machine((3, 0.5), (5, 0.5), (5, 1), (5, 1)),
    ("mul", "scalar", "dp"): _per_machine((3, 0.5), (5, 0.5), (5, 1), (5, 1)),
    ("mul", "scalar", "sp"): _per_machine((3, 0.5), (5, 0.5), (5, 1), (5, 1)),
    # fma exists on HSW/BDW only; AVX 5 cy, SSE/scalar 6 cy on BDW, and on
    # HSW only the SP scalar variant takes 6 cy
    ("fma", "avx", "dp"): _per_machine((5, 0.5), (5, 0.5), None, None),
    ("fma", "avx", "sp"): _per_machine((5, 0.5), (5, 0.5), None, None),
    ("fma", "sse", "dp"): _per_machine((6, 0.5), (5, 0.5), None, None),
    ("fma", "sse", "sp"): _per_machine((6, 0.5), (5, 0.5), None, None),
    ("fma", "scalar", "dp"): _per_machine((6, 0.5), (5, 0.5), None, None),
    ("fma", "scalar", "sp"): _per_machine((6, 0.5), (6, 0.5), None, None),
}

# -- gather timings: machine -> level -> {spread: cycles} ----------------------
GATHER_CYCLES = {
    "hsw": {
        "L1": {1: 12.3, 2: 12.5, 4: 12.5, 8: 12.3},
        "L2": {1: 12.3, 2: 12.5, 4: 12.7, 8: 18.4},
        "L3": {1: 12.4, 2: 13.2, 4: 20.6, 8: 38.5},
        "MEM": {1: 15.5, 2: 23.0, 4: 42.7, 8: 89.3},
    },
    "bdw": {
        "L1": {1: 7.3, 2: 7.5, 4: 7.5, 8: 7.3},
        "L2": {1: 7.3, 2: 7.6, 4: 9.9, 8: 18.1},
        "L3": {1: 7.7, 2: 11.0, 4: 20.0, 8: 38.2},
        "MEM": {1: 13.3, 2: 24.5, 4: 47.5, 8: 94.4},
    },
}

# -- access latencies in base-frequency cycles ---------------------------------
# machine -> {level or (level, tag): cycles}
LATENCIES = {
    "snb": {"L1": 4, "L2": 12, "L3": 40, "MEM": 230},
    "ivb": {"L1": 4, "L2": 12, "L3": 40, "MEM": 208},
    "hsw": {"L1": 4, "L2": 12, ("L3", "cod_on"): 37, ("MEM", "DIR"): 168},
    "bdw": {"L1": 4, "L2": 12,
            ("L3", "cod_off"): 47, ("L3", "cod_on"): 41,
            ("MEM", "ES"): 248, ("MEM", "HS"): 280,
            ("MEM", "HS_OSB"): 190, ("MEM", "DIR"): 178},
}

# -- effective L1<->L2 bandwidths, B/cy -----------------------------------------
L2_BANDWIDTHS = {
    "dot": {"snb": 28, "ivb": 27, "hsw": 43, "bdw": 43},
    "triad": {"snb": 29, "ivb": 29, "hsw": 32, "bdw": 32},
}
