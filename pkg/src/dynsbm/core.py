"""Tensor and membership types, vectorization and clustering matrices.

Conventions (0-based throughout):

* Node pairs ``(i, j)`` with ``i < j`` are enumerated column-major over the
  strict upper triangle: for ``j = 1..n-1``, ``i = 0..j-1``.  This is the
  order in which ``vec`` stacks the non-redundant entries of a slice.
* Class pairs ``(k1, k2)`` with ``k1 <= k2`` are enumerated column-major over
  the upper triangle including the diagonal, so the flat index of
  ``(k1, k2)`` is ``k2 * (k2 + 1) // 2 + k1``.
* A vectorized tensor stacks time slices: entry ``l * N + p`` holds pair ``p``
  at time ``l``.  Coefficient/connectivity vectors use ``k + l * M``.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import sparse

from .errors import DimensionMismatchError, InvalidMembershipError

PAIR_ORDER_VERSION = "colmajor-upper-v1"


def n_pairs(n):
    return n * (n - 1) // 2


def n_class_pairs(m):
    return m * (m + 1) // 2


@lru_cache(maxsize=64)
def _pair_index_cached(n):
    # tril_indices walks row-major below the diagonal: (j, i) with i < j,
    # sorted by j then i, which is the canonical order with roles swapped.
    big, small = np.tril_indices(n, -1)
    i = small.astype(np.intp)
    j = big.astype(np.intp)
    i.setflags(write=False)
    j.setflags(write=False)
    return i, j


def pair_index(n):
    """Return arrays ``(i, j)`` listing node pairs ``i < j`` in canonical order."""
    return _pair_index_cached(int(n))


@lru_cache(maxsize=64)
def _class_pair_index_cached(m):
    k1, k2 = [], []
    for b in range(m):
        for a in range(b + 1):
            k1.append(a)
            k2.append(b)
    k1 = np.array(k1, dtype=np.intp)
    k2 = np.array(k2, dtype=np.intp)
    k1.setflags(write=False)
    k2.setflags(write=False)
    return k1, k2


def class_pair_index(m):
    """Return arrays ``(k1, k2)`` listing class pairs ``k1 <= k2`` in canonical order."""
    return _class_pair_index_cached(int(m))


def class_pair_flat(k1, k2):
    k1 = np.asarray(k1)
    k2 = np.asarray(k2)
    lo = np.minimum(k1, k2)
    hi = np.maximum(k1, k2)
    return hi * (hi + 1) // 2 + lo


# ---------------------------------------------------------------------------
# validation

def check_probability_tensor(lam, atol=0.0):
    """Validate an ``(n, n, L)`` probability tensor; return it as float array."""
    lam = np.asarray(lam, dtype=float)
    if lam.ndim != 3 or lam.shape[0] != lam.shape[1]:
        raise DimensionMismatchError(f"expected (n, n, L) tensor, got shape {lam.shape}")
    if np.any(~np.isfinite(lam)):
        raise ValueError("probability tensor has non-finite entries")
    if np.any(lam < -atol) or np.any(lam > 1 + atol):
        raise ValueError("probability tensor entries must lie in [0, 1]")
    if np.max(np.abs(lam - lam.transpose(1, 0, 2)), initial=0.0) > atol:
        raise ValueError("probability tensor slices must be symmetric")
    idx = np.arange(lam.shape[0])
    if np.max(np.abs(lam[idx, idx, :]), initial=0.0) > atol:
        raise ValueError("probability tensor must have a zero diagonal")
    return lam


def check_adjacency_tensor(b):
    b = np.asarray(b)
    if b.ndim != 3 or b.shape[0] != b.shape[1]:
        raise DimensionMismatchError(f"expected (n, n, L) tensor, got shape {b.shape}")
    if not np.all((b == 0) | (b == 1)):
        raise ValueError("adjacency tensor must be binary")
    if np.any(b != b.transpose(1, 0, 2)):
        raise ValueError("adjacency tensor slices must be symmetric")
    idx = np.arange(b.shape[0])
    if np.any(b[idx, idx, :] != 0):
        raise ValueError("adjacency tensor must have a zero diagonal")
    return b.astype(np.uint8)


# ---------------------------------------------------------------------------
# vectorization

def vectorize(lam):
    """Stack the strictly-upper-triangular entries of every slice.

    Returns a vector of length ``N * L`` with ``N = n(n-1)/2``.
    """
    lam = np.asarray(lam)
    if lam.ndim != 3 or lam.shape[0] != lam.shape[1]:
        raise DimensionMismatchError(f"expected (n, n, L) tensor, got shape {lam.shape}")
    i, j = pair_index(lam.shape[0])
    return np.ascontiguousarray(lam[i, j, :].T).reshape(-1)


def vectorize_matrix(lam):
    """Like :func:`vectorize` but return the ``N x L`` matrix with columns per slice."""
    lam = np.asarray(lam)
    i, j = pair_index(lam.shape[0])
    return lam[i, j, :]


def n_from_pairs(N):
    n = int(round((1 + np.sqrt(1 + 8 * N)) / 2))
    if n_pairs(n) != N:
        raise DimensionMismatchError(f"{N} is not a triangular pair count")
    return n


def devectorize(theta, n, L=None):
    """Inverse of :func:`vectorize`: rebuild the symmetric zero-diagonal tensor."""
    theta = np.asarray(theta)
    N = n_pairs(n)
    if L is None:
        if theta.size % max(N, 1):
            raise DimensionMismatchError("vector length is not a multiple of n(n-1)/2")
        L = theta.size // N if N else 1
    if theta.size != N * L:
        raise DimensionMismatchError(f"expected length {N * L}, got {theta.size}")
    cols = theta.reshape(L, N).T
    out = np.zeros((n, n, L), dtype=theta.dtype)
    i, j = pair_index(n)
    out[i, j, :] = cols
    out[j, i, :] = cols
    return out


# ---------------------------------------------------------------------------
# memberships

@dataclass(frozen=True)
class MembershipSequence:
    """Class labels ``labels[l, i]`` in ``0..m-1`` for every time slice.

    Every class must be occupied at every time point; ``m`` is therefore
    the number of occupied classes.
    """

    labels: np.ndarray
    m: int

    def __post_init__(self):
        lab = np.array(self.labels, dtype=np.intp, copy=True)
        if lab.ndim == 1:
            lab = lab[None, :]
        if lab.ndim != 2:
            raise InvalidMembershipError("labels must have shape (L, n)")
        m = int(self.m)
        if m < 1:
            raise InvalidMembershipError("m must be at least 1")
        if lab.size and (lab.min() < 0 or lab.max() >= m):
            raise InvalidMembershipError(f"labels must lie in 0..{m - 1}")
        counts = self._counts(lab, m)
        if np.any(counts == 0):
            raise InvalidMembershipError("every class must be nonempty at every time point")
        lab.setflags(write=False)
        object.__setattr__(self, "labels", lab)
        object.__setattr__(self, "m", m)

    @staticmethod
    def _counts(lab, m):
        return np.stack([np.bincount(row, minlength=m) for row in lab]) if lab.size else np.zeros((lab.shape[0], m), int)

    @classmethod
    def constant(cls, labels, L, m=None):
        labels = np.asarray(labels, dtype=np.intp)
        if m is None:
            m = int(labels.max()) + 1
        return cls(np.tile(labels, (L, 1)), m)

    @property
    def L(self):
        return self.labels.shape[0]

    @property
    def n(self):
        return self.labels.shape[1]

    def class_sizes(self):
        """``(L, m)`` array of class sizes."""
        return self._counts(self.labels, self.m)

    def switch_counts(self):
        """Number of nodes changing class between consecutive slices, length ``L-1``."""
        return np.count_nonzero(self.labels[1:] != self.labels[:-1], axis=1)

    def is_time_constant(self):
        return bool(np.all(self.labels == self.labels[0]))

    def canonical(self):
        """Relabel classes by first occurrence (slice 0 first, then later slices)."""
        return MembershipSequence(canonical_labels(self.labels), self.m)

    def one_hot(self):
        """``(L, n, m)`` float array of per-slice membership matrices."""
        return np.eye(self.m)[self.labels]

    def __eq__(self, other):
        if not isinstance(other, MembershipSequence):
            return NotImplemented
        return self.m == other.m and np.array_equal(self.labels, other.labels)

    def __hash__(self):
        return hash((self.m, self.labels.tobytes(), self.labels.shape))


def canonical_labels(labels):
    lab = np.asarray(labels, dtype=np.intp)
    mapping = {}
    for v in lab.reshape(-1):
        if int(v) not in mapping:
            mapping[int(v)] = len(mapping)
    lut = np.zeros(lab.max() + 1 if lab.size else 0, dtype=np.intp)
    for old, new in mapping.items():
        lut[old] = new
    return lut[lab]


def _as_membership(z):
    if isinstance(z, MembershipSequence):
        return z
    lab = np.asarray(z)
    return MembershipSequence(lab, int(lab.max()) + 1)


def pair_class_labels(z):
    """``(L, N)`` array giving the class-pair index of every node pair."""
    z = _as_membership(z)
    i, j = pair_index(z.n)
    return class_pair_flat(z.labels[:, i], z.labels[:, j])


def build_clustering_matrix(z, l):
    """Binary ``N x M`` matrix mapping node pairs to class pairs at slice ``l``."""
    z = _as_membership(z)
    if not 0 <= l < z.L:
        raise IndexError(f"time index {l} out of range")
    cls = pair_class_labels(z)[l]
    C = np.zeros((cls.size, n_class_pairs(z.m)))
    C[np.arange(cls.size), cls] = 1.0
    return C


def build_clustering_matrix_merged(z, l):
    """Construct the same matrix by merging the columns of ``Z (x) Z``.

    Kept as an independent route: rows of the Kronecker product for pairs
    ``i1 < i2`` are selected, then columns ``(k1, k2)`` and ``(k2, k1)`` are
    added together.
    """
    z = _as_membership(z)
    Zl = z.one_hot()[l]
    kron = np.kron(Zl, Zl)  # row i1*n + i2, column k1*m + k2
    n, m = z.n, z.m
    i, j = pair_index(n)
    rows = kron[i * n + j]
    k1, k2 = class_pair_index(m)
    out = rows[:, k1 * m + k2].copy()
    off = k1 != k2
    out[:, off] += rows[:, (k2 * m + k1)[off]]
    return out


def build_full_clustering_matrix(z, dense=False):
    """Block-diagonal ``NL x ML`` matrix with blocks ``C^(l)``."""
    z = _as_membership(z)
    blocks = [build_clustering_matrix(z, l) for l in range(z.L)]
    if dense:
        from scipy.linalg import block_diag
        return block_diag(*blocks)
    return sparse.block_diag(blocks, format="csr")


def class_pair_counts(z, l, ordered_within=True):
    """Table ``N^(l)[k1, k2]`` of node-pair counts between classes.

    With ``ordered_within=True`` the diagonal follows ``n_k (n_k - 1)``
    (ordered within-class pairs); with ``False`` it is ``n_k (n_k - 1) / 2``,
    which is what the column sums of ``C^(l)`` give.
    """
    z = _as_membership(z)
    sizes = z.class_sizes()[l].astype(np.int64)
    table = np.outer(sizes, sizes)
    within = sizes * (sizes - 1)
    if not ordered_within:
        within = within // 2
    table[np.diag_indices_from(table)] = within
    return table


def class_pair_count_vector(z):
    """``(L, M)`` column sums of every ``C^(l)`` in class-pair order."""
    z = _as_membership(z)
    sizes = z.class_sizes().astype(np.int64)
    k1, k2 = class_pair_index(z.m)
    counts = sizes[:, k1] * sizes[:, k2]
    diag = k1 == k2
    counts[:, diag] = sizes[:, k1[diag]] * (sizes[:, k1[diag]] - 1) // 2
    return counts


# ---------------------------------------------------------------------------
# connectivity

def check_connectivity(G):
    G = np.asarray(G, dtype=float)
    if G.ndim == 2:
        G = G[:, :, None]
    if G.ndim != 3 or G.shape[0] != G.shape[1]:
        raise DimensionMismatchError(f"expected (m, m, L) connectivity, got {G.shape}")
    if np.max(np.abs(G - G.transpose(1, 0, 2)), initial=0.0) > 0:
        raise ValueError("connectivity slices must be symmetric")
    return G


def connectivity_to_q(G):
    """Reduce ``(m, m, L)`` connectivity to the ``M x L`` matrix ``Q``."""
    G = check_connectivity(G)
    k1, k2 = class_pair_index(G.shape[0])
    return G[k1, k2, :]


def q_to_connectivity(Q, m):
    Q = np.asarray(Q, dtype=float)
    k1, k2 = class_pair_index(m)
    if Q.shape[0] != k1.size:
        raise DimensionMismatchError(f"Q must have {k1.size} rows for m={m}")
    G = np.zeros((m, m, Q.shape[1]))
    G[k1, k2, :] = Q
    G[k2, k1, :] = Q
    return G


def expand_probability(z, G):
    """Probability tensor ``Lam[i, j, l] = G[z(l,i), z(l,j), l]`` with zero diagonal."""
    z = _as_membership(z)
    G = check_connectivity(G)
    if G.shape[0] != z.m or G.shape[2] != z.L:
        raise DimensionMismatchError(
            f"membership (m={z.m}, L={z.L}) and connectivity {G.shape} disagree")
    lab = z.labels
    lt = np.arange(z.L)[:, None, None]
    lam = G[lab[:, :, None], lab[:, None, :], lt]  # (L, n, n)
    lam = np.ascontiguousarray(lam.transpose(1, 2, 0))
    idx = np.arange(z.n)
    lam[idx, idx, :] = 0.0
    return lam


def theta_from_q(z, Q):
    """``theta = C vec(Q)`` computed through class-pair labels."""
    cls = pair_class_labels(z)  # (L, N)
    Q = np.asarray(Q, dtype=float)
    lt = np.arange(cls.shape[0])[:, None]
    return Q[cls, lt].reshape(-1)


# ---------------------------------------------------------------------------
# randomness

def derive_seed(master, *keys):
    """Derive a 64-bit seed from a master seed and integer keys.

    Uses :class:`numpy.random.SeedSequence` with ``keys`` as spawn key, the
    standard splittable hashing scheme in numpy, so children are independent
    and stable across platforms.
    """
    ss = np.random.SeedSequence(entropy=int(master), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def sample_adjacency(lam, seed):
    """Independent Bernoulli draws for every pair ``i < j``, mirrored."""
    lam = check_probability_tensor(lam, atol=1e-12)
    n, _, L = lam.shape
    rng = np.random.default_rng(seed)
    i, j = pair_index(n)
    u = rng.random((L, i.size))
    bits = (u < lam[i, j, :].T).astype(np.uint8)
    out = np.zeros((n, n, L), dtype=np.uint8)
    out[i, j, :] = bits.T
    out[j, i, :] = bits.T
    return out
