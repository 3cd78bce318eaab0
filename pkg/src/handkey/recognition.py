"""Text recovery from detected keystrokes.

Stages: touchpoint extraction and K-means clustering, language-model HMM
decoding of the cluster sequence (see hmm.py), consistency filtering of
the self-generated labels, backspace resolution from the touchpoint map,
an optional refiner classifier trained on the filtered labels, and
dictionary spell correction.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .core import KeystrokeEvent, Session
from .errors import SingleClass, TooFewEvents
from .hmm import (  # noqa: F401  (re-exported: the HMM is part of recognition)
    HmmParams,
    build_transition_matrix,
    initial_distribution,
    learn_emissions,
    viterbi_decode,
)


@dataclass
class TouchpointMap:
    points: np.ndarray  # (E, 2) per-event (x, z)
    assignment: np.ndarray  # (E,) event -> cluster id
    centroids: np.ndarray  # (K, 2)
    K: int
    thumb_clusters: frozenset[int] = frozenset()

    def cluster_sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.K)


@dataclass
class RefinerDataset:
    """Self-curated training samples: raw-telemetry windows with the labels
    that survived both consistency filters."""

    windows: list[np.ndarray] = field(default_factory=list)  # (16, 2J, 3) each
    labels: list[str] = field(default_factory=list)
    event_indices: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.labels)


def compute_touchpoints(s: Session, events: list[KeystrokeEvent]) -> np.ndarray:
    """(x, z) of each event's pressing fingertip at the press frame; also
    stored on the events."""
    pts = np.empty((len(events), 2))
    for i, ev in enumerate(events):
        if ev.finger is None:
            raise ValueError("events must have fingers identified first")
        xyz = s.coords[ev.frame_idx, ev.finger.column(s.joints_per_hand)]
        pts[i] = (xyz[0], xyz[2])
        ev.touchpoint = (float(xyz[0]), float(xyz[2]))
    return pts


def _data_seed(x: np.ndarray) -> int:
    return int.from_bytes(hashlib.sha256(np.ascontiguousarray(x).tobytes()).digest()[:8], "little")


def _kmeanspp(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centers = [x[int(rng.integers(len(x)))]]
    for _ in range(k - 1):
        d2 = np.min([((x - c) ** 2).sum(axis=1) for c in centers], axis=0)
        total = d2.sum()
        if total <= 0:
            centers.append(x[int(rng.integers(len(x)))])
        else:
            centers.append(x[int(rng.choice(len(x), p=d2 / total))])
    return np.array(centers)


def _lloyd(x: np.ndarray, centers: np.ndarray, max_iter: int = 300) -> tuple[np.ndarray, np.ndarray]:
    assign = np.zeros(len(x), dtype=int)
    for _ in range(max_iter):
        d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new = np.argmin(d2, axis=1)
        for k in range(len(centers)):
            pts = x[new == k]
            if len(pts):
                centers[k] = pts.mean(axis=0)
        if np.array_equal(new, assign):
            break
        assign = new
    return assign, centers


def cluster_touchpoints(
    events: list[KeystrokeEvent],
    K: int = 38,
    points: np.ndarray | None = None,
) -> TouchpointMap:
    """K-means over event touchpoints (k-means++ init seeded from the data,
    Lloyd to fixpoint). Thumb-flagged events stay out of the K-means and
    form their own cluster. Empty clusters are dropped and ids compacted,
    so the final cluster count may be below K."""
    if len(events) < K:
        raise TooFewEvents(f"need >= {K} events, got {len(events)}")
    if points is None:
        points = np.array([ev.touchpoint for ev in events], dtype=float)
    if not np.isfinite(points).all():
        raise ValueError("touchpoints must be finite")
    thumb = np.array([ev.thumb for ev in events], dtype=bool)
    n_thumb_clusters = 1 if thumb.any() else 0
    k_free = K - n_thumb_clusters

    assign = np.full(len(events), -1, dtype=int)
    nx = points[~thumb]
    if len(nx) > 0:
        k_eff = min(k_free, len(nx))
        rng = np.random.default_rng(_data_seed(nx))
        a, _ = _lloyd(nx, _kmeanspp(nx, k_eff, rng))
        assign[~thumb] = a
        n_used = a.max() + 1
    else:
        n_used = 0
    thumb_ids: set[int] = set()
    if n_thumb_clusters:
        assign[thumb] = n_used
        thumb_ids.add(n_used)

    # compact ids over non-empty clusters
    used = np.unique(assign)
    remap = {int(old): new for new, old in enumerate(used)}
    assign = np.array([remap[int(a)] for a in assign])
    thumb_ids = {remap[i] for i in thumb_ids if i in remap}
    K_final = len(used)
    centroids = np.array([points[assign == k].mean(axis=0) for k in range(K_final)])

    for ev, a in zip(events, assign):
        ev.cluster = int(a)
    return TouchpointMap(
        points=points,
        assignment=assign,
        centroids=centroids,
        K=K_final,
        thumb_clusters=frozenset(thumb_ids),
    )


def cluster_majority_labels(tmap: TouchpointMap, decoded: list[str]) -> dict[int, str]:
    """Most common decoded label per cluster; ties break alphabetically."""
    out: dict[int, str] = {}
    for k in range(tmap.K):
        labels = [decoded[i] for i in np.nonzero(tmap.assignment == k)[0]]
        if labels:
            top = max(Counter(labels).items(), key=lambda kv: (kv[1], -ord(kv[0][0])))
            out[k] = top[0]
    return out


def consistency_filter(
    tmap: TouchpointMap,
    decoded: list[str],
    key_pitch: float | None = None,
) -> tuple[list[int], list[int]]:
    """Two plausibility checks on self-generated labels.

    Within-cluster: keep only events whose label is their cluster's
    majority label. Cross-cluster: when clusters sharing a majority label
    sit farther apart than one key pitch, only the largest is trusted.
    Returns (kept event indices, rejected event indices).
    """
    if len(decoded) != len(tmap.assignment):
        raise ValueError("decoded must align 1:1 with events")
    if key_pitch is None:
        if tmap.K >= 2:
            d = np.sqrt(((tmap.centroids[:, None] - tmap.centroids[None, :]) ** 2).sum(-1))
            np.fill_diagonal(d, np.inf)
            key_pitch = float(np.median(d.min(axis=1)))
        else:
            key_pitch = np.inf

    majority = cluster_majority_labels(tmap, decoded)
    sizes = tmap.cluster_sizes()

    distrusted: set[int] = set()
    by_label: dict[str, list[int]] = {}
    for k, lab in majority.items():
        by_label.setdefault(lab, []).append(k)
    for label, ks in by_label.items():
        if len(ks) < 2:
            continue
        far = False
        for i, a in enumerate(ks):
            for b in ks[i + 1 :]:
                if np.linalg.norm(tmap.centroids[a] - tmap.centroids[b]) > key_pitch:
                    far = True
        if far:
            keep = max(ks, key=lambda k: (sizes[k], -k))
            distrusted.update(k for k in ks if k != keep)

    kept, rejected = [], []
    for i, (lab, k) in enumerate(zip(decoded, tmap.assignment)):
        k = int(k)
        if k not in distrusted and majority.get(k) == lab:
            kept.append(i)
        else:
            rejected.append(i)
    return kept, rejected


def identify_backspace_cluster(
    tmap: TouchpointMap,
    corner_frac: float = 0.15,
    consec_floor: float = 0.15,
    min_frac: float = 0.01,
) -> int | None:
    """Backspace = the corner cluster of the touchpoint map with the
    highest ratio of consecutive keystrokes, if any corner cluster clears
    the floor. Corner means within corner_frac of the bounding-box extent
    of both axes from a bounding-box corner. Clusters holding under
    min_frac of all events are not plausible backspace candidates (error
    keys hit a few percent of the time; a couple of stray presses in a
    corner can fake a high consecutive ratio)."""
    if tmap.K < 4:
        return None
    min_size = max(2, int(np.ceil(min_frac * len(tmap.assignment))))
    lo = tmap.points.min(axis=0)
    hi = tmap.points.max(axis=0)
    ext = np.maximum(hi - lo, 1e-12)

    def in_corner(c: np.ndarray) -> bool:
        fx = (c[0] - lo[0]) / ext[0]
        fz = (c[1] - lo[1]) / ext[1]
        return (min(fx, 1 - fx) <= corner_frac) and (min(fz, 1 - fz) <= corner_frac)

    best, best_ratio = None, consec_floor
    a = tmap.assignment
    for k in range(tmap.K):
        if k in tmap.thumb_clusters or not in_corner(tmap.centroids[k]):
            continue
        n = int((a == k).sum())
        if n < min_size:
            continue
        consec = int(((a[:-1] == k) & (a[1:] == k)).sum())
        ratio = consec / n
        if ratio > best_ratio:
            best, best_ratio = k, ratio
    return best


def resolve_backspaces(tmap: TouchpointMap, decoded: list[str]) -> list[str]:
    """Replay the decode treating backspace-cluster events as deletions of
    the previous surviving key. No-op when no backspace cluster is found."""
    bs = identify_backspace_cluster(tmap)
    out: list[str] = []
    for lab, k in zip(decoded, tmap.assignment):
        if bs is not None and int(k) == bs:
            if out:
                out.pop()
        else:
            out.append(lab)
    return out


def backspace_mask(tmap: TouchpointMap) -> np.ndarray:
    """Boolean mask of events belonging to the backspace cluster."""
    bs = identify_backspace_cluster(tmap)
    if bs is None:
        return np.zeros(len(tmap.assignment), dtype=bool)
    return tmap.assignment == bs


# ---------------------------------------------------------------------------
# Refiner: relabel events straight from raw-telemetry windows.


def window_features(s: Session, ev: KeystrokeEvent) -> np.ndarray:
    """Flattened per-joint standardized 16-frame window."""
    w = s.coords[ev.window]  # (16, 2J, 3)
    mu = w.mean(axis=0, keepdims=True)
    sd = w.std(axis=0, keepdims=True)
    return ((w - mu) / (sd + 1e-9)).ravel()


def make_refiner_dataset(
    s: Session,
    events: list[KeystrokeEvent],
    decoded: list[str],
    kept: list[int],
) -> RefinerDataset:
    ds = RefinerDataset()
    for i in kept:
        ds.windows.append(s.coords[events[i].window].copy())
        ds.labels.append(decoded[i])
        ds.event_indices.append(i)
    return ds


def _standardize_window(w: np.ndarray) -> np.ndarray:
    mu = w.mean(axis=0, keepdims=True)
    sd = w.std(axis=0, keepdims=True)
    return ((w - mu) / (sd + 1e-9)).ravel()


def mixup(ds: RefinerDataset, seed: int = 0, factor: int = 1) -> RefinerDataset:
    """Augment with convex combinations of same-label window pairs."""
    rng = np.random.default_rng(seed)
    out = RefinerDataset(list(ds.windows), list(ds.labels), list(ds.event_indices))
    by_label: dict[str, list[int]] = {}
    for i, lab in enumerate(ds.labels):
        by_label.setdefault(lab, []).append(i)
    for _ in range(factor):
        for lab, idxs in by_label.items():
            if len(idxs) < 2:
                continue
            i, j = rng.choice(idxs, size=2, replace=False)
            lam = float(rng.beta(0.4, 0.4))
            out.windows.append(lam * ds.windows[i] + (1 - lam) * ds.windows[j])
            out.labels.append(lab)
            out.event_indices.append(-1)
    return out


class NearestCentroidRefiner:
    """Per-class centroid of standardized window features; decision by
    nearest centroid, probabilities by softmax over negative distances."""

    def __init__(self, centroids: dict[str, np.ndarray]):
        self.labels = sorted(centroids)
        self._C = np.stack([centroids[c] for c in self.labels])

    def predict_proba(self, w: np.ndarray) -> np.ndarray:
        f = _standardize_window(w)
        d = np.linalg.norm(self._C - f, axis=1)
        z = -d
        z -= z.max()
        p = np.exp(z)
        return p / p.sum()

    def predict(self, w: np.ndarray) -> str:
        f = _standardize_window(w)
        d = np.linalg.norm(self._C - f, axis=1)
        return self.labels[int(np.argmin(d))]


def label_bootstrap(
    ds: RefinerDataset, beta: float = 0.8, seed: int = 0
) -> RefinerDataset:
    """Soften noisy labels toward a provisional model's predictions: fit a
    centroid model on ds, then relabel each sample by the argmax of
    beta·one-hot(label) + (1−beta)·model distribution."""
    model = train_refiner(ds)
    out = RefinerDataset(list(ds.windows), [], list(ds.event_indices))
    for w, lab in zip(ds.windows, ds.labels):
        p = (1 - beta) * model.predict_proba(w)
        mixed = {c: p[i] for i, c in enumerate(model.labels)}
        mixed[lab] = mixed.get(lab, 0.0) + beta
        out.labels.append(max(sorted(mixed), key=lambda c: mixed[c]))
    return out


def train_refiner(ds: RefinerDataset) -> NearestCentroidRefiner:
    if len(set(ds.labels)) < 2:
        raise SingleClass("refiner needs at least 2 distinct labels")
    feats: dict[str, list[np.ndarray]] = {}
    for w, lab in zip(ds.windows, ds.labels):
        feats.setdefault(lab, []).append(_standardize_window(w))
    return NearestCentroidRefiner({lab: np.mean(v, axis=0) for lab, v in feats.items()})


def refine(
    r: NearestCentroidRefiner, events: list[KeystrokeEvent], s: Session
) -> list[str]:
    """Relabel every detected event from its raw window."""
    return [r.predict(s.coords[ev.window]) for ev in events]


# ---------------------------------------------------------------------------
# Spell correction.


def _edits1(word: str) -> set[str]:
    letters = "abcdefghijklmnopqrstuvwxyz"
    splits = [(word[:i], word[i:]) for i in range(len(word) + 1)]
    out = {a + b[1:] for a, b in splits if b}
    out |= {a + b[1] + b[0] + b[2:] for a, b in splits if len(b) > 1}
    out |= {a + c + b[1:] for a, b in splits if b for c in letters}
    out |= {a + c + b for a, b in splits for c in letters}
    return out


def _candidates(word: str, lexicon: set[str]) -> list[str]:
    # Candidate sets grow as O(len^2) strings per edit level; a token far
    # longer than any lexicon entry has no edit-distance-<=2 neighbor anyway.
    if len(word) > max(map(len, lexicon)) + 2:
        return []
    e1 = _edits1(word)
    got = e1 & lexicon
    if got:
        return sorted(got)
    e2 = set()
    for w in e1:
        e2 |= _edits1(w)
    return sorted(e2 & lexicon)


def spell_correct(
    text: str,
    lexicon: set[str],
    unigram: Counter | None = None,
    bigram: Counter | None = None,
) -> str:
    """Replace out-of-lexicon words by their most likely edit-distance-≤2
    neighbor, scored by word bigram context (unigram fallback). In-lexicon
    words and words with no candidate are never touched."""
    if not lexicon:
        raise ValueError("lexicon is empty")
    unigram = unigram or Counter()
    bigram = bigram or Counter()
    total = max(sum(unigram.values()), 1)

    def uni(w: str) -> float:
        return (unigram.get(w, 0) + 1) / (total + len(lexicon))

    words = text.split()
    out: list[str] = []
    for i, w in enumerate(words):
        bare = w.strip(".,")
        if not bare or bare in lexicon:
            out.append(w)
            continue
        cands = _candidates(bare, lexicon)
        if not cands:
            out.append(w)
            continue
        prev = out[-1].strip(".,") if out else None
        nxt = words[i + 1].strip(".,") if i + 1 < len(words) else None

        def score(c: str) -> float:
            val = np.log(uni(c))
            if prev is not None:
                val += np.log((bigram.get((prev, c), 0) + 1) / (unigram.get(prev, 0) + total))
            if nxt is not None:
                val += np.log((bigram.get((c, nxt), 0) + 1) / (unigram.get(c, 0) + total))
            return val

        best = max(cands, key=score)
        out.append(w.replace(bare, best, 1))
    return " ".join(out)
