# Logging
LOG_LEVEL = 'INFO'

# Qubit caps for dense objects
LIGHTCONE_QUBIT_CAP = 14
DENSE_QUBIT_CAP = 20
ORACLE_QUBIT_CAP = 20

# Largest boundary tensor (complex entries) carried by the MPS sweep
MPS_BOUNDARY_CAP = 2 ** 26
MPS_CUTOFF = 1e-12

# Error budget
LR_FRACTION = 0.5

# Propagators
TROTTER_MIN_STEPS = 1
TROTTER_MAX_STEPS = 200000
TROTTER_SAMPLE = 'right'
ODE_TOL = 1e-12
RK4_STEPS = 200
RK4_MAX_STEPS = 12800
ORACLE_TOL = 1e-12
PROPAGATOR_CACHE_SIZE = 4096

# Contraction
CONTRACTION = 'dense'
SOLVER = 'trotter'

# Inner parallelism (overridden by QMV_THREADS / --threads)
THREADS = 1

# Benchmark protocol
BENCH_REPETITIONS = 100
BENCH_INSTANCES = 20
BENCH_REFERENCE_TOL = 1e-12
BENCH_TROTTER_STEPS = 30
BENCH_SEED = 0
