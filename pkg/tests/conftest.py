"""Shared samplers for the test suite."""
import numpy as np

from partnermodel import MfeState, Params


def random_params(rng: np.random.Generator, n: int,
                  lam_range=(0.05, 20.0), r_range=(0.1, 10.0)) -> list[Params]:
    def logu(lo, hi, size):
        return np.exp(rng.uniform(np.log(lo), np.log(hi), size))

    lam = logu(*lam_range, n)
    rp = logu(*r_range, n)
    rm = logu(*r_range, n)
    return [Params(lam=a, r_plus=b, r_minus=c) for a, b, c in zip(lam, rp, rm)]


def random_lambda_state(rng: np.random.Generator) -> MfeState:
    """A uniform-ish point of the invariant region (y, i, si, ii)."""
    y = rng.uniform(0.05, 0.95)
    i = rng.uniform(0.0, y)
    ip = rng.uniform(0.0, (1.0 - y) / 2.0)
    ii = rng.uniform(0.0, ip)
    return MfeState(y=y, i=i, si=ip - ii, ii=ii)


def ordered_state_pair(rng: np.random.Generator) -> tuple[MfeState, MfeState]:
    """Two invariant-region states with equal y and u <= v in (i, ip, ii)."""
    v = random_lambda_state(rng)
    iv, ipv, iiv = v.i, v.ip, v.ii
    iu = rng.uniform(0.0, iv)
    ipu = rng.uniform(0.0, ipv)
    iiu = rng.uniform(0.0, min(iiv, ipu))
    return MfeState(v.y, iu, ipu - iiu, iiu), v
