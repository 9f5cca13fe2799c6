"""Small shared instances for the test suite."""
import numpy as np

from projttsa.projection import Subspace
from projttsa.synthetic import SyntheticConfig, generate
from projttsa.system import TwoTimeScaleSystem


def random_stable_system(seed, n=4, m=3, coupling=0.3):
    """Symmetric negative-definite diagonal blocks with weak couplings."""
    rng = np.random.default_rng(seed)
    def neg_def(k):
        Q = np.linalg.qr(rng.standard_normal((k, k)))[0]
        A = (Q * -rng.uniform(0.5, 2.0, k)) @ Q.T
        return 0.5 * (A + A.T)
    return TwoTimeScaleSystem(
        A_ff=neg_def(n), A_fs=coupling * rng.standard_normal((n, m)),
        A_sf=coupling * rng.standard_normal((m, n)), A_ss=neg_def(m),
        b1=rng.standard_normal(n), b2=rng.standard_normal(m),
    )


def random_subspace(seed, dim, rank):
    rng = np.random.default_rng(seed)
    return Subspace.from_spanning(rng.standard_normal((dim, rank)))


def paper_instance():
    return generate(SyntheticConfig())
