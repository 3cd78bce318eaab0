"""Hidden Markov model over the 29-symbol alphabet.

Hidden states are keys; observations are touchpoint cluster ids. The
transition matrix comes from language bigram statistics and stays frozen;
only the emission matrix (and initial distribution) are learned from the
observed cluster sequence with Baum-Welch, restarted several times. The
caller picks the restart via a scoring callback (by default, likelihood).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .layout import ALPHABET, KEY_INDEX, N_KEYS
from .errors import EmptyCorpus, UnknownCluster


@dataclass
class HmmParams:
    A: np.ndarray  # (29, 29) row-stochastic, frozen during learning
    B: np.ndarray  # (29, M) row-stochastic
    pi: np.ndarray  # (29,)
    log_likelihood: float = float("-inf")
    restart: int = 0

    @property
    def n_clusters(self) -> int:
        return self.B.shape[1]


def build_transition_matrix(corpus: str) -> np.ndarray:
    """Add-one-smoothed bigram transition matrix from normalized text."""
    idx = [KEY_INDEX[c] for c in corpus if c in KEY_INDEX]
    if len(idx) < 2:
        raise EmptyCorpus("corpus has fewer than 2 in-alphabet symbols")
    counts = np.ones((N_KEYS, N_KEYS))
    np.add.at(counts, (idx[:-1], idx[1:]), 1)
    return counts / counts.sum(axis=1, keepdims=True)


def initial_distribution(corpus: str) -> np.ndarray:
    """Add-one-smoothed unigram distribution over the alphabet."""
    idx = [KEY_INDEX[c] for c in corpus if c in KEY_INDEX]
    if not idx:
        raise EmptyCorpus("corpus has no in-alphabet symbols")
    counts = np.ones(N_KEYS)
    np.add.at(counts, idx, 1)
    return counts / counts.sum()


def key_frequencies(corpus: str) -> np.ndarray:
    return initial_distribution(corpus)


def _forward_backward(
    A: np.ndarray, B: np.ndarray, pi: np.ndarray, obs: np.ndarray
) -> tuple[np.ndarray, float]:
    """Scaled forward-backward. Returns (gamma, log_likelihood). The
    transition statistics (xi) are never needed since A stays frozen."""
    T = len(obs)
    N = A.shape[0]
    alpha = np.empty((T, N))
    scale = np.empty(T)
    alpha[0] = pi * B[:, obs[0]]
    scale[0] = max(alpha[0].sum(), 1e-300)
    alpha[0] /= scale[0]
    for t in range(1, T):
        alpha[t] = (alpha[t - 1] @ A) * B[:, obs[t]]
        scale[t] = max(alpha[t].sum(), 1e-300)
        alpha[t] /= scale[t]
    beta = np.empty((T, N))
    beta[-1] = 1.0
    for t in range(T - 2, -1, -1):
        beta[t] = (A @ (B[:, obs[t + 1]] * beta[t + 1])) / scale[t + 1]
    gamma = alpha * beta
    gamma /= np.maximum(gamma.sum(axis=1, keepdims=True), 1e-300)
    return gamma, float(np.log(scale).sum())


def baum_welch_emissions(
    A: np.ndarray,
    pi0: np.ndarray,
    B0: np.ndarray,
    obs: np.ndarray,
    max_iter: int = 200,
    tol: float = 1e-6,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Iterate emission/initial updates with A frozen until the likelihood
    gain drops below tol."""
    M = B0.shape[1]
    B, pi = B0.copy(), pi0.copy()
    ll_prev = -np.inf
    ll = ll_prev
    for _ in range(max_iter):
        gamma, ll = _forward_backward(A, B, pi, obs)
        num = np.zeros((A.shape[0], M))
        for m in range(M):
            num[:, m] = gamma[obs == m].sum(axis=0)
        denom = np.maximum(gamma.sum(axis=0), 1e-300)
        B = np.maximum(num / denom[:, None], 1e-12)
        B /= B.sum(axis=1, keepdims=True)
        pi = np.maximum(gamma[0], 1e-12)
        pi /= pi.sum()
        if ll - ll_prev < tol:
            break
        ll_prev = ll
    return B, pi, ll


def _frequency_init(
    obs: np.ndarray, M: int, pi_lang: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Emission init pairing frequent clusters with frequent keys.

    Each key's row concentrates on the cluster whose empirical frequency
    rank matches the key's language-frequency rank; dithered so EM can
    escape wrong pairings.
    """
    N = len(pi_lang)
    cluster_freq = np.bincount(obs, minlength=M) / len(obs)
    key_rank = np.argsort(-pi_lang, kind="stable")
    cluster_rank = np.argsort(-cluster_freq, kind="stable")
    B = np.full((N, M), 0.5 / M)
    for r in range(min(N, M)):
        B[key_rank[r], cluster_rank[r]] += 0.5
    B *= 1.0 + 0.05 * rng.random((N, M))
    return B / B.sum(axis=1, keepdims=True)


def learn_emissions(
    A: np.ndarray,
    cluster_seq: Sequence[int],
    restarts: int = 10,
    pi_lang: np.ndarray | None = None,
    seed: int = 0,
    score: Callable[[list[str]], float] | None = None,
    max_iter: int = 200,
    hard_em_rounds: int = 2,
) -> HmmParams:
    """Fit emissions by restarted Baum-Welch with the transition matrix
    frozen, keeping the restart the scoring callback likes best.

    Restart 0 starts from a frequency-matched emission guess, the rest from
    random draws on per-restart seeded streams (so a larger restart budget
    strictly extends a smaller one). Each converged fit gets a few rounds
    of Viterbi retraining, which sharpens emissions on long sequences.
    """
    obs = np.asarray(list(cluster_seq), dtype=int)
    if len(obs) == 0:
        raise ValueError("cluster_seq is empty")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    M = int(obs.max()) + 1
    if pi_lang is None:
        pi_lang = np.full(N_KEYS, 1.0 / N_KEYS)

    best: HmmParams | None = None
    best_score = -np.inf
    for r in range(restarts):
        rng = np.random.default_rng(np.random.SeedSequence([seed, r]))
        if r == 0:
            B0 = _frequency_init(obs, M, pi_lang, rng)
        else:
            B0 = rng.dirichlet(np.ones(M), size=N_KEYS)
            B0 = np.maximum(B0, 1e-12)
            B0 /= B0.sum(axis=1, keepdims=True)
        B, pi, ll = baum_welch_emissions(A, pi_lang, B0, obs, max_iter=max_iter)
        B, pi, ll = _viterbi_retrain(A, B, pi, obs, rounds=hard_em_rounds)
        Bp = _mapping_polish(A, B, obs)
        _, llp = _forward_backward(A, Bp, pi, obs)
        for cand_B, cand_ll in ((B, ll), (Bp, llp)):
            params = HmmParams(A=A, B=cand_B, pi=pi, log_likelihood=cand_ll, restart=r)
            val = score(viterbi_decode(params, obs)) if score is not None else cand_ll
            if val > best_score:
                best, best_score = params, val
    assert best is not None
    return best


def _viterbi_retrain(
    A: np.ndarray, B: np.ndarray, pi: np.ndarray, obs: np.ndarray, rounds: int
) -> tuple[np.ndarray, np.ndarray, float]:
    N, M = B.shape
    for _ in range(max(rounds, 0)):
        path = _viterbi_path(A, B, pi, obs)
        counts = np.full((N, M), 0.1)
        np.add.at(counts, (path, obs), 1.0)
        B = counts / counts.sum(axis=1, keepdims=True)
    _, ll = _forward_backward(A, B, pi, obs)
    return B, pi, ll


def _mapping_polish(
    A: np.ndarray,
    B: np.ndarray,
    obs: np.ndarray,
    max_sweeps: int = 60,
    extra_starts: int = 8,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Sharpen B into a near-deterministic cluster-to-key mapping by hill
    climbing the joint likelihood of the implied hard decode.

    For a hard mapping f the complete-data log-likelihood splits into the
    bigram chain term sum count(c,c')·log A[f(c),f(c')] and the emission
    term sum_c n_c·(log n_c − log N_f(c)) where n_c is the cluster's count
    and N_k the total count mapped to key k. The emission term is what
    keeps the search from collapsing rare clusters onto frequent keys.
    Local moves: single reassignments and pair swaps — the classic
    substitution-cipher search — from the argmax-of-B start plus a few
    random-permutation starts.
    """
    N, M = B.shape
    logA = np.log(np.maximum(A, 1e-300))
    counts = np.zeros((M, M))
    np.add.at(counts, (obs[:-1], obs[1:]), 1.0)
    n_c = np.maximum(np.bincount(obs, minlength=M), 1).astype(float)

    def total(fm: np.ndarray) -> float:
        chain = float((counts * logA[fm][:, fm]).sum())
        N_k = np.zeros(N)
        np.add.at(N_k, fm, n_c)
        emit = float((n_c * (np.log(n_c) - np.log(N_k[fm]))).sum())
        return chain + emit

    def climb(f: np.ndarray) -> tuple[np.ndarray, float]:
        cur = total(f)
        for _ in range(max_sweeps):
            improved = False
            for c in range(M):
                old = f[c]
                best_k, best_ll = old, cur
                for k in range(N):
                    if k == old:
                        continue
                    f[c] = k
                    ll = total(f)
                    if ll > best_ll:
                        best_k, best_ll = k, ll
                f[c] = best_k
                if best_k != old:
                    cur = best_ll
                    improved = True
            for c1 in range(M):
                for c2 in range(c1 + 1, M):
                    if f[c1] == f[c2]:
                        continue
                    f[c1], f[c2] = f[c2], f[c1]
                    ll = total(f)
                    if ll > cur:
                        cur = ll
                        improved = True
                    else:
                        f[c1], f[c2] = f[c2], f[c1]
            if not improved:
                break
        return f, cur

    rng = rng or np.random.default_rng(_stable_hash(obs))
    best_f, best_ll = climb(np.argmax(B, axis=0).copy())
    for _ in range(extra_starts):
        start = rng.permutation(N)[np.arange(M) % N]
        f, ll = climb(start.copy())
        if ll > best_ll:
            best_f, best_ll = f, ll

    out = np.full((N, M), 1e-4)
    for c in range(M):
        out[best_f[c], c] += n_c[c]
    return out / out.sum(axis=1, keepdims=True)


def _stable_hash(x: np.ndarray) -> int:
    import hashlib

    return int.from_bytes(
        hashlib.sha256(np.ascontiguousarray(x).tobytes()).digest()[:8], "little"
    )


def _viterbi_path(
    A: np.ndarray, B: np.ndarray, pi: np.ndarray, obs: np.ndarray
) -> np.ndarray:
    logA = np.log(np.maximum(A, 1e-300))
    logB = np.log(np.maximum(B, 1e-300))
    logpi = np.log(np.maximum(pi, 1e-300))
    T = len(obs)
    N = A.shape[0]
    delta = logpi + logB[:, obs[0]]
    back = np.empty((T, N), dtype=int)
    for t in range(1, T):
        cand = delta[:, None] + logA
        # argmax returns the lowest index on ties, matching the tie-break rule
        back[t] = np.argmax(cand, axis=0)
        delta = cand[back[t], np.arange(N)] + logB[:, obs[t]]
    path = np.empty(T, dtype=int)
    path[-1] = int(np.argmax(delta))
    for t in range(T - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return path


def viterbi_decode(params: HmmParams, cluster_seq: Sequence[int]) -> list[str]:
    """Most probable key sequence for the observed clusters, log-space,
    ties broken toward the lower key index."""
    obs = np.asarray(list(cluster_seq), dtype=int)
    if len(obs) == 0:
        return []
    if obs.min() < 0 or obs.max() >= params.n_clusters:
        raise UnknownCluster(
            f"cluster ids must lie in [0, {params.n_clusters}), got "
            f"[{obs.min()}, {obs.max()}]"
        )
    path = _viterbi_path(params.A, params.B, params.pi, obs)
    return [ALPHABET[i] for i in path]
