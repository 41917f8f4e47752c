"""Synthetic exact-factorization studies comparing the MUR and AUR drivers.

``Y = L R`` is generated from uniform random factors, and both methods are
started from the same random iterates (dense, and optionally sparse with
the same nonzero values), recording the Frobenius error at every step.
"""

from dataclasses import dataclass, field

import numpy as np

from .nmf import NmfOptions, default_scale, factorize, init_factors

SCENARIOS = {
    # rows, cols, true rank, fit rank, start sparsity
    "A": dict(rows=30, cols=8, true_rank=2, fit_rank=2, sparsity=0.0),
    "B": dict(rows=40, cols=10, true_rank=3, fit_rank=4, sparsity=1.0 / 3.0),
}

METHODS = ("mur", "aur")


@dataclass
class Simulation:
    y: np.ndarray
    seed: int
    runs: dict = field(default_factory=dict)  # (method, start) -> NmfResult

    @property
    def y_norm(self):
        return float(np.linalg.norm(self.y))


def exact_target(rows, cols, true_rank, rng):
    """``Y = L R`` with ``L``, ``R`` drawn uniform on [0, 1)."""
    return rng.random((rows, true_rank)) @ rng.random((true_rank, cols))


def iterations_to(trace, threshold):
    """First iteration whose Frobenius error is below ``threshold``, else ``None``."""
    for rec in trace:
        if rec.frob_error < threshold:
            return rec.iter
    return None


def run_simulation(rows=30, cols=8, true_rank=2, fit_rank=2, sparsity=0.0, seed=0,
                   max_iters=5000, rel_tol=1e-9, tau=0.5, methods=METHODS,
                   include_dense=True):
    """Run every method from a dense start and, if ``sparsity > 0``, a sparse one."""
    truth_ss, start_ss = np.random.SeedSequence(seed).spawn(2)
    y = exact_target(rows, cols, true_rank, np.random.default_rng(truth_ss))
    scale = default_scale(y, fit_rank)
    starts = {}
    if include_dense or sparsity == 0:
        starts["dense"] = init_factors(rows, cols, fit_rank, start_ss, 0.0, scale)
    if sparsity > 0:
        starts["sparse"] = init_factors(rows, cols, fit_rank, start_ss, sparsity, scale)
    sim = Simulation(y=y, seed=seed)
    for start_name, start in starts.items():
        for method in methods:
            opts = NmfOptions(rank=fit_rank, method=method, init=start, tau=tau,
                              max_iters=max_iters, rel_tol=rel_tol, seed=seed)
            sim.runs[(method, start_name)] = factorize(y, opts)
    return sim


def summarize(sim, thresholds=(1e-2, 1e-3)):
    """Flat dict of final errors and iterations-to-threshold per run."""
    out = {"seed": sim.seed, "y_frobenius": sim.y_norm}
    for (method, start), res in sim.runs.items():
        key = f"{method}_{start}"
        out[f"{key}_status"] = res.status.value
        out[f"{key}_iterations"] = res.iterations
        out[f"{key}_final_frob_error"] = res.frob_error
        for t in thresholds:
            hit = iterations_to(res.trace, t * sim.y_norm)
            out[f"{key}_iters_to_{t:g}"] = -1 if hit is None else hit
    return out
