import numpy as np
import pytest


def kernel_pool(n_kernels, seed=0, l0=5, m=14, s=12):
    """Deterministic pool of (kernel, scenario) pairs at random candidate sets.

    Candidate sets have size 1..l0 (kernels for larger sets are singular on
    exact scenarios) and are drawn off the true set as often as on it.
    """
    from mvpure.indices import KernelFactory
    from mvpure.model import SourceSet, synth_scenario

    rng = np.random.default_rng(seed)
    pool = []
    scenario_id = 0
    while len(pool) < n_kernels:
        snr = 0.5 + 1.5 * rng.random(l0)
        scn = synth_scenario(
            m=m,
            s=s,
            l0=l0,
            source_snr=snr,
            noise_kind="spd" if scenario_id % 2 else "white",
            correlation=0.3 * rng.random(),
            seed=1000 + scenario_id,
        )
        factory = KernelFactory(scn.leadfield, scn.R, scn.N)
        for _ in range(10):
            if len(pool) >= n_kernels:
                break
            l = int(rng.integers(1, l0 + 1))
            theta = SourceSet(tuple(sorted(rng.choice(s, size=l, replace=False).tolist())))
            pool.append((factory.build(theta), scn))
        scenario_id += 1
    return pool


def random_spd(n, seed, cond_spread=1.0):
    """Seeded SPD matrix with eigenvalues in roughly [0.5, 0.5 + 2*spread]."""
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n))
    Q, _ = np.linalg.qr(A)
    lam = 0.5 + cond_spread * 2.0 * rng.random(n)
    return (Q * lam) @ Q.T


def random_symmetric(n, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n))
    return 0.5 * (A + A.T)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
