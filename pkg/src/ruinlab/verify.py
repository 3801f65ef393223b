"""Golden cross-check of the closed forms against simulation.

Built-in fixtures: the normal model (lambda1=2, lambda2=1, c=1,
Erlang(2, 20) claims) and its reduced-premium twin (c=4).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import analytic
from .model import Erlang, scalar_model
from .simulate import DEFAULT_SEED, estimate_exit_low, estimate_modified_ruin, estimate_sup_cdf

__all__ = ["example_model", "example_star_model", "VerifyReport", "run_verify", "VERIFY_FIELDS"]

VERIFY_FIELDS = ("quantity", "analytic", "mc", "stderr", "z", "pass")

SUP_GRID = (0.05, 0.1, 0.2, 0.5)
EXIT_POINTS = ((0.1, 0.5), (0.2, 0.5), (0.1, 0.3))
MODIFIED_POINTS = ((0.1, 0.3, 0.3), (0.2, 0.3, 0.3), (0.1, 0.5, 0.5))


def example_model():
    return scalar_model(2.0, 1.0, 1.0, Erlang(2, 20.0))


def example_star_model():
    return scalar_model(2.0, 1.0, 4.0, Erlang(2, 20.0))


@dataclass(frozen=True)
class VerifyReport:
    rows: list
    tolerance: float

    @property
    def passed(self) -> bool:
        return all(r["pass"] for r in self.rows)


def _row(name, exact, est, tol, perturb):
    ref = exact + perturb * est.stderr
    z = est.z(ref)
    return {"quantity": name, "analytic": ref, "mc": est.value, "stderr": est.stderr, "z": z,
            "pass": bool(abs(z) <= tol)}


def run_verify(model=None, model_star=None, *, n: int = 1_000_000, seed: int = DEFAULT_SEED,
               workers: int = 1, tolerance: float = 3.0, perturb_sigma: float = 0.0,
               backend=None) -> VerifyReport:
    """Compare sup_law, exit_low and modified_ruin with their estimators.

    ``perturb_sigma`` shifts every analytic value by that many standard
    errors; a harness self-test, since the report must then fail.
    """
    model = model if model is not None else example_model()
    model_star = model_star if model_star is not None else example_star_model()
    kw = dict(seed=seed, workers=workers, backend=backend)
    rows = []
    law = analytic.sup_law(model_star)
    for u, est in zip(SUP_GRID, estimate_sup_cdf(model_star, SUP_GRID, n, **kw)):
        rows.append(_row(f"sup_cdf_star(u={u!r})", law.cdf(u), est, tolerance, perturb_sigma))
    for u, b in EXIT_POINTS:
        exact, _ = analytic.exit_low(model, u, b)
        rows.append(_row(f"exit_low(u={u!r},b={b!r})", exact, estimate_exit_low(model, u, b, n, **kw),
                         tolerance, perturb_sigma))
    for u, a, b in MODIFIED_POINTS:
        exact = analytic.modified_ruin(model, model_star, u, a, b)
        est = estimate_modified_ruin(model, model_star, u, a, b, n, **kw)
        rows.append(_row(f"modified_ruin(u={u!r},a={a!r},b={b!r})", exact, est, tolerance, perturb_sigma))
    for r in rows:
        if math.isnan(r["z"]):
            r["pass"] = False
    return VerifyReport(rows, tolerance)
