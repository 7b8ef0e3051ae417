import hashlib
import json
import math
from dataclasses import dataclass
from typing import Callable, Dict, Tuple

import numpy as np
from scipy import linalg

from distributions import DiscreteLaw, TailDistribution, VaryingFamily
from .streams import RngStream


def is_prime(q: int) -> bool:
    if q < 2:
        return False
    return all(q % k for k in range(2, math.isqrt(q) + 1))


@dataclass(frozen=True)
class SequenceModel:
    """Joint law of a sequence X_1, X_2, ... under a declared dependence structure"""
    kind = "abstract"
    pairwise_independent = True
    mutually_independent = True

    def path(self, n: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def family(self) -> VaryingFamily:
        """Exact marginal laws of the coordinates"""
        raise NotImplementedError

    def descriptor(self) -> Dict:
        raise NotImplementedError

    def model_hash(self) -> str:
        """Stable short digest of the model descriptor"""
        text = json.dumps(self.descriptor(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    @staticmethod
    def from_descriptor(desc: Dict) -> "SequenceModel":
        if not isinstance(desc, dict) or "kind" not in desc:
            raise ValueError(f"model descriptor needs a 'kind': {desc!r}")
        kind = desc["kind"]
        allowed = {
            "iid": {"marginal"},
            "joffe": {"q", "marginal", "block_mode"},
            "counterexample": {"p"},
            "markov_phi_mixing": {"transition", "values"},
            "antithetic_pairs": {"marginal"},
        }
        if kind not in allowed:
            raise ValueError(f"unknown model kind {kind!r}")
        extra = set(desc) - allowed[kind] - {"kind"}
        if extra:
            raise ValueError(f"unknown keys {sorted(extra)} for model kind {kind!r}")
        if kind == "counterexample":
            return CounterexampleModel(p=float(desc.get("p", 1.0)))
        if kind == "markov_phi_mixing":
            return MarkovModel.from_lists(desc["transition"], desc["values"])
        marginal = TailDistribution.from_descriptor(desc.get("marginal", {"kind": "rademacher"}))
        if kind == "iid":
            return IidModel(marginal)
        if kind == "antithetic_pairs":
            return AntitheticModel(marginal)
        return JoffeModel(q=int(desc["q"]), marginal=marginal, block_mode=bool(desc.get("block_mode", False)))


@dataclass(frozen=True)
class IidModel(SequenceModel):
    marginal: TailDistribution
    kind = "iid"

    def path(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return np.asarray(self.marginal.sample(rng, n), dtype=float)

    def family(self) -> VaryingFamily:
        return VaryingFamily.constant(self.marginal)

    def descriptor(self) -> Dict:
        return {"kind": "iid", "marginal": self.marginal.descriptor()}


@dataclass(frozen=True)
class JoffeModel(SequenceModel):
    """
    Pairwise independent block W_i = (U + i V) mod q, i = 0..q-1, with U, V
    independent uniform on {0..q-1}; X_i = F^{-1}((W_i + 0.5)/q).
    """
    q: int
    marginal: TailDistribution
    block_mode: bool = False
    kind = "joffe"
    mutually_independent = False

    def __post_init__(self):
        if not is_prime(self.q):
            raise ValueError(f"q must be prime, got {self.q}")
        grid = np.asarray(self.marginal.quantile((np.arange(self.q) + 0.5) / self.q), dtype=float)
        object.__setattr__(self, "_grid", grid)

    @property
    def grid(self) -> np.ndarray:
        return self._grid

    def indices(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Grid indices W for n coordinates"""
        blocks = -(-n // self.q)
        if blocks > 1 and not self.block_mode:
            raise ValueError(
                f"n = {n} exceeds the Joffe block length q = {self.q}; "
                "enable block_mode to concatenate independent blocks"
            )
        uv = rng.integers(0, self.q, size=(blocks, 2))
        i = np.arange(self.q)
        w = (uv[:, :1] + i[None, :] * uv[:, 1:]) % self.q
        return w.reshape(-1)[:n]

    def path(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self._grid[self.indices(n, rng)]

    def family(self) -> VaryingFamily:
        return VaryingFamily.constant(DiscreteLaw.uniform_over(self._grid))

    def descriptor(self) -> Dict:
        return {"kind": "joffe", "q": self.q, "marginal": self.marginal.descriptor(), "block_mode": self.block_mode}


@dataclass(frozen=True)
class CounterexampleModel(SequenceModel):
    """Independent X_n in {0, +-n^{1/p}} with probabilities {1 - 1/n, 1/(2n), 1/(2n)}"""
    p: float = 1.0
    kind = "counterexample"

    def __post_init__(self):
        if self.p <= 0:
            raise ValueError(f"p must be positive, got {self.p}")

    def path(self, n: int, rng: np.random.Generator) -> np.ndarray:
        i = np.arange(1, n + 1, dtype=float)
        u = rng.random(n)
        sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        return np.where(u * i < 1.0, sign * i ** (1.0 / self.p), 0.0)

    def family(self) -> VaryingFamily:
        return VaryingFamily.counterexample(self.p)

    def descriptor(self) -> Dict:
        return {"kind": "counterexample", "p": self.p}


@dataclass(frozen=True)
class MarkovModel(SequenceModel):
    """Stationary finite Markov chain (phi-mixing when irreducible and aperiodic)"""
    transition: Tuple[Tuple[float, ...], ...]
    values: Tuple[float, ...]
    kind = "markov_phi_mixing"
    pairwise_independent = False
    mutually_independent = False

    def __post_init__(self):
        P = np.asarray(self.transition, dtype=float)
        k = len(self.values)
        if P.shape != (k, k):
            raise ValueError(f"transition matrix must be {k}x{k}, got {P.shape}")
        if np.any(P < 0) or not np.allclose(P.sum(axis=1), 1.0, atol=1e-12):
            raise ValueError("transition rows must be probability vectors")
        eigenvalues, vectors = linalg.eig(P.T)
        lead = int(np.argmin(np.abs(eigenvalues - 1.0)))
        pi = np.real(vectors[:, lead])
        pi = pi / pi.sum()
        if np.any(pi < -1e-12):
            raise ValueError("transition matrix has no stationary law")
        object.__setattr__(self, "_P", P)
        object.__setattr__(self, "_pi", np.clip(pi, 0.0, None))

    @classmethod
    def from_lists(cls, transition, values) -> "MarkovModel":
        return cls(
            transition=tuple(tuple(float(x) for x in row) for row in transition),
            values=tuple(float(v) for v in values),
        )

    @classmethod
    def two_state(cls, stay: float = 0.9, values=(-1.0, 1.0)) -> "MarkovModel":
        return cls.from_lists([[stay, 1.0 - stay], [1.0 - stay, stay]], values)

    @property
    def stationary(self) -> np.ndarray:
        return self._pi

    @property
    def matrix(self) -> np.ndarray:
        return self._P

    def path(self, n: int, rng: np.random.Generator) -> np.ndarray:
        cumulative = np.cumsum(self._P, axis=1)
        u = rng.random(n)
        states = np.empty(n, dtype=np.int64)
        last = len(self.values) - 1
        state = min(int(np.searchsorted(np.cumsum(self._pi), u[0], side="right")), last)
        states[0] = state
        for t in range(1, n):
            state = min(int(np.searchsorted(cumulative[state], u[t], side="right")), last)
            states[t] = state
        return np.asarray(self.values, dtype=float)[states]

    def family(self) -> VaryingFamily:
        return VaryingFamily.constant(DiscreteLaw.from_lists(self.values, self._pi))

    def descriptor(self) -> Dict:
        return {
            "kind": "markov_phi_mixing",
            "transition": [list(row) for row in self.transition],
            "values": list(self.values),
        }


@dataclass(frozen=True)
class AntitheticModel(SequenceModel):
    """Pairs (F^{-1}(U_k), F^{-1}(1 - U_k)) with independent U_k"""
    marginal: TailDistribution
    kind = "antithetic_pairs"
    pairwise_independent = False
    mutually_independent = False

    def path(self, n: int, rng: np.random.Generator) -> np.ndarray:
        u = rng.random(-(-n // 2))
        pairs = np.stack([u, 1.0 - u], axis=1).reshape(-1)[:n]
        return np.asarray(self.marginal.quantile(pairs), dtype=float)

    def family(self) -> VaryingFamily:
        return VaryingFamily.constant(self.marginal)

    def descriptor(self) -> Dict:
        return {"kind": "antithetic_pairs", "marginal": self.marginal.descriptor()}


def generate(model: SequenceModel, n: int, stream: RngStream) -> np.ndarray:
    """X_1..X_n, a pure function of (model, n, seed, stream index, counter)"""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return model.path(n, stream.generator())


def markov_variance_ratio(model: MarkovModel, transform: Callable, ell: int) -> float:
    """Exact var(sum of ell stationary terms f(X_i)) / (ell var f(X_1))"""
    if ell < 1:
        raise ValueError(f"block length must be >= 1, got {ell}")
    f = np.asarray(transform(np.asarray(model.values, dtype=float)), dtype=float)
    pi, P = model.stationary, model.matrix
    mean = float(pi @ f)
    variance = float(pi @ (f * f)) - mean ** 2
    if variance <= 0:
        raise ValueError("transform is degenerate under the stationary law")
    ratio = 1.0
    Ph = np.eye(len(f))
    for h in range(1, ell):
        Ph = Ph @ P
        cov = float((pi * f) @ Ph @ f) - mean ** 2
        ratio += 2.0 * (1.0 - h / ell) * cov / variance
    return ratio
