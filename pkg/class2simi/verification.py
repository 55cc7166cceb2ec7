"""Property suite for the class-to-similarity transform.

Runs the analytic checks (brute-force oracle equivalence, identity
preservation, the symmetric-noise rate grid, learnability of diagonally
dominant matrices) and, when ``trials > 0``, Monte-Carlo agreement between
sampled pair statistics and the analytic T_s.
"""
from __future__ import annotations

import logging
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .components.noise import corrupt_labels, empirical_class_noise_rate, empirical_simi_noise_rate, generate_blobs
from .schemas import GridCell, PropertyResult, VerificationReport
from .transition import (
    ClassPrior,
    ClassTransitionMatrix,
    class2simi,
    class_noise_rate,
    make_identity,
    make_symmetric,
    pair_similar_prior,
    random_transition_matrix,
    simi_noise_rate,
    simi_transition_oracle,
)

logger = logging.getLogger(__name__)

DEFAULT_C_RANGE = tuple(range(2, 51))
DEFAULT_RHO_RANGE = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6)
NOISE_RATE_MIN_C = 8
ORACLE_TOLERANCE = 1e-10
SIGMA_MULTIPLIER = 3.0


def _random_c(rng: np.random.Generator, low: int = 2, high: int = 20) -> int:
    return int(rng.integers(low, high + 1))


def check_oracle_equivalence(n_matrices: int, rng: np.random.Generator) -> PropertyResult:
    """Closed form vs brute force, with uniform and random priors."""
    worst = 0.0
    for _ in range(n_matrices):
        Tc = random_transition_matrix(_random_c(rng), rng)
        for prior in (None, ClassPrior(rng.dirichlet(np.ones(Tc.c)))):
            fast = class2simi(Tc, prior).entries
            slow = simi_transition_oracle(Tc, prior).entries
            worst = max(worst, float(np.max(np.abs(fast - slow))))
    return PropertyResult(
        name="oracle_equivalence",
        passed=worst < ORACLE_TOLERANCE,
        max_deviation=worst,
        cases=2 * n_matrices,
        details={"tolerance": ORACLE_TOLERANCE},
    )


def check_identity(c_range: Iterable[int]) -> PropertyResult:
    worst = 0.0
    cases = 0
    for c in c_range:
        Ts = class2simi(make_identity(c))
        worst = max(worst, float(np.max(np.abs(Ts.entries - np.eye(2)))))
        cases += 1
    return PropertyResult(name="identity_preserved", passed=worst == 0.0, max_deviation=worst, cases=cases)


def noise_rate_grid(c_range: Iterable[int], rho_range: Iterable[float]) -> List[GridCell]:
    """Symmetric-noise cells; only c >= 8 is asserted. Invalid (c, rho) cells are skipped."""
    cells = []
    for c in c_range:
        for rho in rho_range:
            if not rho < (c - 1) / c:
                continue
            Tc = make_symmetric(c, rho)
            prior = ClassPrior.uniform(c)
            class_rate = class_noise_rate(Tc, prior)
            simi_rate = simi_noise_rate(class2simi(Tc, prior), pair_similar_prior(prior))
            cells.append(GridCell(
                c=c,
                rho=rho,
                class_noise_rate=class_rate,
                simi_noise_rate=simi_rate,
                lower=simi_rate < class_rate,
                asserted=c >= NOISE_RATE_MIN_C,
            ))
    return cells


def check_noise_rate_lower(cells: Sequence[GridCell]) -> PropertyResult:
    asserted = [cell for cell in cells if cell.asserted]
    failures = [cell for cell in asserted if not cell.lower]
    margin = min((cell.class_noise_rate - cell.simi_noise_rate for cell in asserted), default=None)
    return PropertyResult(
        name="similarity_noise_rate_lower",
        passed=not failures,
        cases=len(asserted),
        details={
            "min_margin": margin,
            "failures": [{"c": cell.c, "rho": cell.rho} for cell in failures],
            "not_asserted_higher": [
                {"c": cell.c, "rho": cell.rho, "simi_noise_rate": cell.simi_noise_rate}
                for cell in cells if not cell.asserted and not cell.lower
            ],
        },
    )


def check_learnability(n_matrices: int, rng: np.random.Generator) -> tuple:
    counterexamples = []
    smallest = np.inf
    for _ in range(n_matrices):
        Tc = random_transition_matrix(_random_c(rng), rng, diagonally_dominant=True)
        Ts = class2simi(Tc)
        diag = Ts.t00 + Ts.t11
        smallest = min(smallest, diag)
        if not diag > 1.0:
            counterexamples.append(Tc.to_list())
    result = PropertyResult(
        name="diagonally_dominant_learnable",
        passed=not counterexamples,
        max_deviation=float(1.0 - smallest) if np.isfinite(smallest) else None,
        cases=n_matrices,
        details={"min_diagonal_sum": float(smallest), "counterexamples": len(counterexamples)},
    )
    return result, counterexamples


def check_degenerate_rows() -> PropertyResult:
    """Identical rows carry no class information: T_s,00 + T_s,11 is exactly 1."""
    Tc = ClassTransitionMatrix(np.full((2, 2), 0.5))
    Ts = class2simi(Tc)
    diag = Ts.t00 + Ts.t11
    return PropertyResult(
        name="identical_rows_not_learnable",
        passed=abs(diag - 1.0) < 1e-12,
        max_deviation=abs(diag - 1.0),
        cases=1,
        details={"diagonal_sum": diag},
    )


def check_small_c_counter_cell() -> PropertyResult:
    """c=2, rho=0.4: similarity noise (0.48) exceeds class noise (0.4)."""
    Tc = make_symmetric(2, 0.4)
    prior = ClassPrior.uniform(2)
    rate = simi_noise_rate(class2simi(Tc, prior), pair_similar_prior(prior))
    return PropertyResult(
        name="small_c_similarity_rate_higher",
        passed=abs(rate - 0.48) < 1e-12 and rate > class_noise_rate(Tc, prior),
        max_deviation=abs(rate - 0.48),
        cases=1,
        details={"c": 2, "rho": 0.4, "simi_noise_rate": rate, "class_noise_rate": class_noise_rate(Tc, prior)},
    )


def sample_similarity_transition(Tc: ClassTransitionMatrix, n_pairs: int, rng: np.random.Generator) -> dict:
    """Empirical T_s from i.i.d. pairs of uniformly drawn classes, each corrupted through ``Tc``."""
    c = Tc.c
    cumulative = np.cumsum(Tc.entries, axis=1)
    cumulative[:, -1] = 1.0
    clean = rng.integers(0, c, size=(n_pairs, 2))
    u = rng.random((n_pairs, 2))
    noisy = np.empty_like(clean)
    for i in range(c):
        mask = clean == i
        noisy[mask] = np.searchsorted(cumulative[i], u[mask], side="right")
    clean_sim = clean[:, 0] == clean[:, 1]
    noisy_sim = noisy[:, 0] == noisy[:, 1]
    return {
        "t11": float(noisy_sim[clean_sim].mean()) if clean_sim.any() else float("nan"),
        "t01": float(noisy_sim[~clean_sim].mean()) if (~clean_sim).any() else float("nan"),
        "n_similar": int(clean_sim.sum()),
        "n_dissimilar": int((~clean_sim).sum()),
    }


def _within(observed: float, expected: float, n: int, k: float = SIGMA_MULTIPLIER) -> tuple:
    sigma = np.sqrt(max(expected * (1.0 - expected), 1e-12) / max(n, 1))
    return abs(observed - expected) <= k * sigma, float(abs(observed - expected) / sigma)


def monte_carlo_transition(trials: int, n_pairs: int, rng: np.random.Generator) -> tuple:
    entries = []
    worst = 0.0
    passed = True
    for trial in range(trials):
        Tc = random_transition_matrix(int(rng.integers(2, 11)), rng, diagonally_dominant=True)
        Ts = class2simi(Tc)
        sampled = sample_similarity_transition(Tc, n_pairs, rng)
        ok11, z11 = _within(sampled["t11"], Ts.t11, sampled["n_similar"])
        ok01, z01 = _within(sampled["t01"], Ts.t01, sampled["n_dissimilar"])
        passed = passed and ok11 and ok01
        worst = max(worst, z11, z01)
        entries.append({
            "check": "similarity_transition",
            "trial": trial,
            "c": Tc.c,
            "analytic_t01": Ts.t01,
            "empirical_t01": sampled["t01"],
            "analytic_t11": Ts.t11,
            "empirical_t11": sampled["t11"],
            "passed": ok11 and ok01,
        })
    result = PropertyResult(
        name="monte_carlo_transition",
        passed=passed,
        max_deviation=worst,
        cases=trials,
        details={"n_pairs": n_pairs, "sigma_multiplier": SIGMA_MULTIPLIER, "deviation_unit": "sigma"},
    )
    return result, entries


def monte_carlo_dataset_rates(seed: int, c: int = 10, per_class: int = 1000, rho: float = 0.4,
                              max_pairs: int = 1_000_000) -> tuple:
    """Corrupt a balanced blob dataset and compare measured noise rates with the analytic ones.

    The similarity-rate sigma uses the point count, not the pair count,
    since pairs sharing a point are dependent.
    """
    Tc = make_symmetric(c, rho)
    ds = corrupt_labels(generate_blobs(c, per_class, 2, 5.0, 1.0, seed), Tc, seed=seed + 1)
    prior = ClassPrior.uniform(c)
    analytic_class = class_noise_rate(Tc, prior)
    analytic_simi = simi_noise_rate(class2simi(Tc, prior), pair_similar_prior(prior))
    measured_class = empirical_class_noise_rate(ds)
    measured_simi = empirical_simi_noise_rate(ds, max_pairs, seed=seed + 2)
    ok_class, z_class = _within(measured_class, analytic_class, ds.n)
    ok_simi, z_simi = _within(measured_simi, analytic_simi, ds.n)
    entry = {
        "check": "dataset_noise_rates",
        "c": c,
        "rho": rho,
        "n": ds.n,
        "analytic_class_noise_rate": analytic_class,
        "empirical_class_noise_rate": measured_class,
        "analytic_simi_noise_rate": analytic_simi,
        "empirical_simi_noise_rate": measured_simi,
        "passed": ok_class and ok_simi,
    }
    result = PropertyResult(
        name="monte_carlo_dataset_rates",
        passed=ok_class and ok_simi,
        max_deviation=max(z_class, z_simi),
        cases=1,
        details={"sigma_multiplier": SIGMA_MULTIPLIER, "deviation_unit": "sigma"},
    )
    return result, entry


def verify_theorems(
    c_range: Optional[Iterable[int]] = None,
    rho_range: Optional[Iterable[float]] = None,
    trials: int = 2,
    seed: int = 0,
    n_matrices: int = 100,
    mc_pairs: int = 1_000_000,
) -> VerificationReport:
    """Run every property; failures are report content, never exceptions."""
    c_range = list(c_range) if c_range is not None else list(DEFAULT_C_RANGE)
    rho_range = list(rho_range) if rho_range is not None else list(DEFAULT_RHO_RANGE)
    if trials < 0:
        raise ValueError("trials must be non-negative")
    rng = np.random.default_rng(seed)

    report = VerificationReport()
    report.properties.append(check_oracle_equivalence(n_matrices, rng))
    report.properties.append(check_identity(c_range))

    report.noise_rate_grid = noise_rate_grid(c_range, rho_range)
    report.properties.append(check_noise_rate_lower(report.noise_rate_grid))
    report.properties.append(check_small_c_counter_cell())

    learnable, counterexamples = check_learnability(n_matrices, rng)
    report.properties.append(learnable)
    report.learnability_counterexamples = counterexamples
    report.properties.append(check_degenerate_rows())

    if trials > 0:
        mc_result, entries = monte_carlo_transition(trials, mc_pairs, rng)
        report.properties.append(mc_result)
        report.monte_carlo.extend(entries)
        rates_result, rates_entry = monte_carlo_dataset_rates(seed)
        report.properties.append(rates_result)
        report.monte_carlo.append(rates_entry)

    for prop in report.properties:
        log = logger.info if prop.passed else logger.warning
        log(f"{prop.name}: {'pass' if prop.passed else 'FAIL'} (cases={prop.cases}, max_deviation={prop.max_deviation})")
    return report
