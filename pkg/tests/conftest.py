import numpy as np
import pytest

from pwlpolicy import accel


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Trigger JIT compilation once so timed tests measure steady-state work.

    A no-op when the compiled path is disabled via PWLPOLICY_DISABLE_NUMBA.
    """
    from pwlpolicy import builtin_problem, build_triangulation, locate
    from pwlpolicy import fit, evaluate, solve_exact, train, TrainConfig
    from pwlpolicy import generate_random_qp

    p = builtin_problem("example1")
    solve_exact(p, [0.5])                       # simplex pivot loop
    qp = generate_random_qp(2, 2, seed=0)
    solve_exact(qp, [0.2, 0.2])                 # ADMM iteration chunk
    tri = build_triangulation(np.array([[0.0], [0.5], [1.0]]))
    locate(tri, [0.3])                          # walk kernel
    rng = np.random.default_rng(0)
    th = rng.uniform(0, 1, size=(8, 1))
    train((th, th * 2.0), TrainConfig(epochs=2, batch_size=4, hidden=(4,), seed=0))
    return accel.NUMBA_ENABLED
