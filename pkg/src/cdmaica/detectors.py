"""Downlink receivers: matched-filter SUD, pilot-resolved ICA, and their combination."""

from dataclasses import dataclass, field

import numpy as np

from .ica import IcaConfig, SeparationFailed, separate
from .numkit import SingularDataError, covariance, sym_eig

# relative eigenvalue floor for the signal subspace of rank-deficient frames
SUBSPACE_FLOOR = 1e-10

PILOT_LENGTH = 50
MIN_MATCH_SCORE = 0.5


def hard_decision(soft):
    return np.where(np.asarray(soft) >= 0.0, 1.0, -1.0)


@dataclass
class DetectorOutput:
    hard_symbols: np.ndarray
    soft_values: np.ndarray
    ica_converged: bool = None
    ica_iterations: float = None
    failed: bool = False
    # users decided by the SUD branch (SUD-ICA) or left unresolved (ICA)
    fallback: np.ndarray = field(default=None, repr=False)
    ambiguity: "AmbiguityMap" = field(default=None, repr=False)
    error: str = ""

    @classmethod
    def from_soft(cls, soft, **kw):
        soft = np.atleast_2d(np.asarray(soft, dtype=float))
        return cls(hard_decision(soft), soft, **kw)


@dataclass
class AmbiguityMap:
    """IC-to-user assignment recovered from pilot symbols.

    ``permutation[k]`` is the IC row assigned to user ``k``, or ``-1`` when
    no remaining IC correlates with the user's pilots by at least
    :data:`MIN_MATCH_SCORE`.
    """

    permutation: np.ndarray
    signs: np.ndarray
    match_scores: np.ndarray

    @property
    def resolved(self):
        return self.permutation >= 0


def sud_detect(received, user_code):
    """Matched filter ``code . r_t / |code|^2`` for one code or a ``(C, K)`` stack."""
    r = np.atleast_2d(np.asarray(received, dtype=float))
    code = np.asarray(user_code, dtype=float)
    if code.ndim == 1:
        code = code[:, np.newaxis]
    if code.shape[0] != r.shape[0]:
        raise ValueError(f"code length {code.shape[0]} does not match {r.shape[0]} chips")
    soft = (code.T @ r) / np.sum(code * code, axis=0)[:, np.newaxis]
    return DetectorOutput.from_soft(soft)


def _pearson(rows, refs):
    a = rows - rows.mean(axis=1, keepdims=True)
    b = refs - refs.mean(axis=1, keepdims=True)
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        c = (a @ b.T) / np.outer(na, nb)
    return np.nan_to_num(np.clip(c, -1.0, 1.0))


def resolve_ambiguity(ica, pilots, pilot_length=None):
    """Match separated components to users through their known pilots.

    Greedy in descending ``|correlation|`` over the first ``pilot_length``
    columns; each component serves at most one user. A user whose best
    remaining score is below :data:`MIN_MATCH_SCORE` stays unresolved.
    """
    sources = ica.sources if hasattr(ica, "sources") else np.asarray(ica, dtype=float)
    pilots = np.atleast_2d(np.asarray(pilots, dtype=float))
    p = pilots.shape[1] if pilot_length is None else int(pilot_length)
    if p < 20:
        raise ValueError(f"need at least 20 pilot symbols, got {p}")
    if sources.shape[1] < p:
        raise ValueError("pilot window is longer than the separated signal")
    users = pilots.shape[0]
    corr = _pearson(sources[:, :p], pilots[:, :p])
    score = np.abs(corr)
    order = np.argsort(-score, axis=None, kind="stable")
    perm = np.full(users, -1)
    taken = np.zeros(sources.shape[0], dtype=bool)
    best = np.zeros(users)
    for flat in order:
        ic, user = divmod(int(flat), users)
        if perm[user] >= 0 or taken[ic]:
            continue
        perm[user] = ic
        taken[ic] = True
        best[user] = score[ic, user]
        if np.all(perm >= 0):
            break
    signs = np.ones(users)
    for k in range(users):
        if perm[k] >= 0:
            signs[k] = 1.0 if corr[perm[k], k] >= 0 else -1.0
    perm = np.where(best >= MIN_MATCH_SCORE, perm, -1)
    return AmbiguityMap(perm, signs, best)


def _separate_subspace(r, cfg):
    """Separate a rank-deficient frame inside its principal subspace.

    A noise-free frame with ``K < C`` users spans only ``K`` chip
    dimensions, so full-rank whitening is impossible; the components above
    :data:`SUBSPACE_FLOOR` are kept and separated instead.
    """
    lam, vecs = sym_eig(covariance(r))
    keep = lam > SUBSPACE_FLOOR * max(lam[0], 0.0)
    if np.sum(keep) < 2:
        raise SingularDataError(int(np.sum(~keep)), len(lam))
    return separate(vecs[:, keep].T @ r, cfg)


def ica_detect(received, cfg, pilots, result=None):
    """Separate all chip-rate channels blindly, then label users via pilots.

    Each resolved component is rescaled by its least-squares gain on the
    pilot window, so soft values sit near +/-1. The run is marked
    ``failed`` when separation raises or fewer than ``K`` users end up on
    a converged, resolved component. ``result`` lets a caller reuse an
    existing separation of ``received``. A rank-deficient frame (no noise,
    fewer users than chips) is separated inside its signal subspace.
    """
    r = np.asarray(received, dtype=float)
    pilots = np.atleast_2d(np.asarray(pilots, dtype=float))
    users, p = pilots.shape
    m = r.shape[1]
    if p >= m:
        raise ValueError("pilot block must be shorter than the frame")
    soft = np.zeros((users, m))
    if result is None:
        try:
            try:
                result = separate(r, cfg)
            except SingularDataError:
                result = _separate_subspace(r, cfg)
        except (SeparationFailed, SingularDataError) as exc:
            partial = getattr(exc, "result", None)
            return DetectorOutput(
                hard_decision(soft), soft,
                ica_converged=False,
                ica_iterations=float(np.mean(partial.iterations)) if partial is not None else None,
                failed=True,
                fallback=np.ones(users, dtype=bool),
                error=str(exc),
            )
    amb = resolve_ambiguity(result, pilots)
    usable = amb.resolved.copy()
    for k in np.flatnonzero(usable):
        ic = amb.permutation[k]
        if not result.converged[ic]:
            usable[k] = False
            continue
        row = result.sources[ic]
        gain = float(row[:p] @ pilots[k]) / float(pilots[k] @ pilots[k])
        if gain == 0.0:
            usable[k] = False
            continue
        soft[k] = row / gain
    return DetectorOutput(
        hard_decision(soft), soft,
        ica_converged=result.all_converged,
        ica_iterations=float(np.mean(result.iterations)),
        failed=bool(np.sum(usable) < users),
        fallback=~usable,
        ambiguity=amb,
    )


def _confidence(soft):
    scale = np.mean(np.abs(soft), axis=1, keepdims=True)
    scale[scale == 0.0] = 1.0
    return np.abs(soft) / scale


def combine(sud, ica):
    """SUD-ICA decision rule on two precomputed detector outputs.

    Agreeing decisions pass through. On disagreement the branch with the
    larger normalized confidence ``|soft| / mean|soft|`` (per user, over the
    frame) wins. Users the ICA branch could not serve, and every user of a
    failed ICA run, get the SUD decision unchanged.
    """
    hard = sud.hard_symbols.copy()
    soft = sud.soft_values.copy()
    users = hard.shape[0]
    use_sud = np.ones(users, dtype=bool) if ica.failed else np.asarray(ica.fallback, dtype=bool)
    rows = ~use_sud
    if np.any(rows):
        c_sud = _confidence(sud.soft_values[rows])
        c_ica = _confidence(ica.soft_values[rows])
        pick_ica = (ica.hard_symbols[rows] != sud.hard_symbols[rows]) & (c_ica > c_sud)
        hard[rows] = np.where(pick_ica, ica.hard_symbols[rows], sud.hard_symbols[rows])
        # keep soft values consistent with the hard decisions
        soft[rows] = np.where(pick_ica, ica.soft_values[rows], sud.soft_values[rows])
    return DetectorOutput(
        hard, soft,
        ica_converged=ica.ica_converged,
        ica_iterations=ica.ica_iterations,
        failed=False,
        fallback=use_sud,
        ambiguity=ica.ambiguity,
    )


def sudica_detect(received, user_codes, cfg, pilots, ica_output=None):
    """Combined detector: matched filter and ICA in parallel, merged by :func:`combine`."""
    sud = sud_detect(received, user_codes)
    ica = ica_output if ica_output is not None else ica_detect(received, cfg, pilots)
    return combine(sud, ica)


def symbol_errors(hard, truth, start=0):
    """Error count and scored-symbol count over columns ``start:``."""
    h = np.atleast_2d(hard)[:, start:]
    t = np.atleast_2d(truth)[:, start:]
    return int(np.sum(h != t)), int(t.size)
