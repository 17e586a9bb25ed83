"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the summary lines are
written past pytest's capture so they always appear.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from unipredict import cli
from unipredict.bounds import InequalityGridSpec, bound_rows, verify_proof_inequalities
from unipredict.decision import LossSpec, error_loss, weather_loss
from unipredict.evaluate import evaluate, mc_expected_loss, standard_schemes
from unipredict.games import (
    average_profit_gap,
    game_reports,
    profit_gap_envelope,
    time_to_win_threshold,
    winning_zone_threshold,
)
from unipredict.measures import BernoulliIID, DeterministicSeq, all_strings
from unipredict.mixture import ModelClass

import oracles
from conftest import CLASS_ENVS, CONFIGS, load_env

BOUND_ENVS = CLASS_ENVS + ["weather"]
LN2 = math.log(2)


@pytest.fixture
def announce(capsys):
    """Print a criterion verdict outside of pytest's output capture."""
    start = time.perf_counter()

    def report(number, title, ok, limit, detail=""):
        elapsed = time.perf_counter() - start
        passed = bool(ok) and elapsed < limit
        line = f"CRITERION {number} {'PASS' if passed else 'FAIL'}: {title} ({elapsed:.1f}s of {limit}s)"
        if detail:
            line += f" {detail}"
        with capsys.disabled():
            print("\n" + line)
        return passed

    return report


def distinct_models(M):
    out = []
    for m in M.models:
        if m not in out:
            out.append(m)
    return out


def loss_suite():
    rng = np.random.default_rng(20260101)
    tables = [("error", error_loss()), ("weather", weather_loss())]
    for i in range(20):
        tables.append((f"random-{i}", LossSpec.static(tuple(rng.random(4)), 0.0, 1.0)))
    return tables


def test_criterion_1_dominance_and_normalization(announce):
    worst_add, worst_dom, failures = 0.0, 0.0, []
    for name in CLASS_ENVS:
        M = load_env(name).model_class
        w = np.asarray(M.weights)
        if abs(math.fsum(w) - 1.0) > 1e-12 or abs(np.exp(M.log_prob_batch(np.zeros((1, 0), dtype=np.int8))[0]) - 1.0) > 1e-12:
            failures.append(f"{name}: not normalized")
        for L in range(0, 15):
            B = all_strings(L)
            xi = np.exp(M.log_prob_batch(B))
            joint = np.exp(M.log_joint_batch(B))
            dom = np.max(joint - xi[:, None] * (1 + 1e-12))
            worst_dom = max(worst_dom, float(dom))
            if dom > 0:
                failures.append(f"{name}: dominance fails at length {L}")
            if L == 14:
                continue
            kids = [np.column_stack([B, np.full(len(B), b, dtype=B.dtype)]) for b in (0, 1)]
            total = np.exp(M.log_prob_batch(kids[0])) + np.exp(M.log_prob_batch(kids[1]))
            err = np.abs(total - xi)
            rel = float(np.max(np.where(xi > 0, err / np.where(xi > 0, xi, 1), err)))
            worst_add = max(worst_add, rel)
            if rel > 1e-12:
                failures.append(f"{name}: additivity off by {rel:.3g} at length {L}")
    ok = announce(
        1, "xi additivity and dominance, 6 classes, |x| <= 14", not failures, 10,
        f"max rel additivity {worst_add:.2e}" + ("; " + "; ".join(failures[:3]) if failures else ""),
    )
    assert ok, failures


def test_criterion_2_convergence(announce):
    failures, pairs = [], 0
    for name in CLASS_ENVS:
        M = load_env(name).model_class
        for mu in distinct_models(M):
            pairs += 1
            rep = evaluate(mu, 14, M)
            H, S, d = rep.H, rep.S, rep.d_mu
            if np.any(S > H + 1e-9) or np.any(H > d + 1e-9):
                failures.append(f"{name}/{mu!r}")
    # independent exact-fraction oracle on the Bernoulli pair
    third = Fraction(1, 3)
    xi_o = oracles.mixture([oracles.bern(third), oracles.bern(2 * third)])
    H_o, S_o = oracles.entropy_and_sq(oracles.bern(2 * third), xi_o, 8)
    M = ModelClass([BernoulliIID(1 / 3), BernoulliIID(2 / 3)])
    rep = evaluate(BernoulliIID(2 / 3), 8, M)
    if not (math.isclose(rep.H[-1], H_o, rel_tol=1e-10) and math.isclose(rep.S[-1], S_o, rel_tol=1e-10)):
        failures.append("oracle mismatch at n=8")
    H1, S1 = float(rep.H[0]), float(rep.S[0])
    if round(H1, 5) != round(0.0566330123, 5) or round(S1, 5) != round(1 / 18, 5):
        failures.append(f"H_1={H1}, S_1={S1}")
    ok = announce(
        2, "S_n <= H_n <= ln(1/w_mu), n <= 14", not failures, 30,
        f"{pairs} pairs, H_1={H1:.6f}, S_1={S1:.6f}" + ("; " + "; ".join(failures[:3]) if failures else ""),
    )
    assert ok, failures


def test_criterion_3_unit_loss_bound(announce):
    failures, checks, min_slack = [], 0, math.inf
    for name in BOUND_ENVS:
        cfg = load_env(name)
        for lname, loss in loss_suite():
            for row in bound_rows(name, cfg.mu, cfg.model_class, loss, 12):
                checks += 1
                L_xi, L_mu, slack_unit = row[2], row[3], row[7]
                min_slack = min(min_slack, slack_unit)
                if not (L_xi - L_mu >= -1e-9 and slack_unit >= -1e-9):
                    failures.append(f"{name}/{lname} n={row[1]}")
    ok = announce(
        3, "0 <= L_xi - L_mu <= unit bound, 7 envs x 22 losses, n <= 12", not failures, 120,
        f"{checks} checks, min slack {min_slack:.3g}" + ("; " + "; ".join(failures[:3]) if failures else ""),
    )
    assert ok, failures


def test_criterion_4_general_bound_and_invariance(announce):
    failures, checks = [], 0
    for name in BOUND_ENVS:
        cfg = load_env(name)
        for lname, loss in loss_suite():
            base = evaluate(cfg.mu, 12, schemes=standard_schemes(cfg.mu, cfg.model_class, loss), record_actions=True)
            for scale, shift in ((2.0, -1.0), (2.0, 5.0)):
                mapped = loss.affine(scale, shift)
                for row in bound_rows(name, cfg.mu, cfg.model_class, mapped, 12):
                    checks += 1
                    if not (row[2] - row[3] >= -1e-9 and row[8] >= -1e-9):
                        failures.append(f"{name}/{lname}[{mapped.l_min},{mapped.l_max}] n={row[1]}")
                rep = evaluate(
                    cfg.mu, 12, schemes=standard_schemes(cfg.mu, cfg.model_class, mapped), record_actions=True
                )
                for scheme, levels in rep.actions.items():
                    same = all(np.array_equal(a, b) for a, b in zip(levels, base.actions[scheme]))
                    if not same:
                        failures.append(f"{name}/{lname} actions differ for {scheme} on [{mapped.l_min},{mapped.l_max}]")
    ok = announce(
        4, "general bound on [-1,1] and [5,7], identical actions", not failures, 120,
        f"{checks} checks" + ("; " + "; ".join(failures[:3]) if failures else ""),
    )
    assert ok, failures


def test_criterion_5_proof_inequalities(announce):
    spec = InequalityGridSpec()
    results = verify_proof_inequalities(spec, threads=0)
    want = (0.05, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0)
    good = (
        tuple(r.A for r in results) == want
        and spec.resolution == 2000
        and all(r.B == r.A / 4 + 1 / r.A for r in results)
        and all(min(r.min_low_z, r.min_high_z) >= -1e-9 for r in results)
    )
    worst = min(min(r.min_low_z, r.min_high_z) for r in results)
    ok = announce(5, "grid minima >= -1e-9 on a 2000x2000 grid, 8 values of A", good, 60, f"worst minimum {worst:.3e}")
    assert ok


def test_criterion_6_deterministic_bounds(announce):
    failures, detail = [], []
    for k in range(2, 6):
        M = ModelClass([DeterministicSeq(format(i, f"0{k}b"), "0") for i in range(2**k)])
        mu = DeterministicSeq("1" * k, "0")
        rep = evaluate(mu, k + 6, M, standard_schemes(mu, M, error_loss()))
        cap = 2 * M.d_mu(mu)
        L_k = rep.L("xi", k)
        detail.append(f"k={k}: L_k={L_k:g}")
        if L_k < k:
            failures.append(f"k={k}: L_xi after {k} steps is {L_k} < {k}")
        for n in range(1, k + 7):
            if rep.L("xi", n) > cap + 1e-12:
                failures.append(f"k={k}, n={n}: L_xi={rep.L('xi', n)} above 2 ln(1/w)={cap}")
    ok = announce(6, "Det family k=2..5: L_k >= k and L_n <= 2 ln(1/w_mu)", not failures, 10, ", ".join(detail))
    assert ok, failures


def test_criterion_7_games(announce):
    cfg = load_env("biased-coin-game")
    spec = cfg.game_spec()
    failures = [f"n={r.n}" for r in game_reports(spec, range(1, 13)) if not r.eq12_holds]
    rng = np.random.default_rng(7)
    for i in range(1000):
        p_max = rng.uniform(0.01, 10.0)
        p_delta = p_max * rng.uniform(1.0 + 1e-6, 10.0)
        pbar = rng.uniform(1e-4, 1.0) * p_max
        d = rng.exponential(3.0)
        if time_to_win_threshold(pbar, p_delta, d) < winning_zone_threshold(pbar, p_max, p_delta, d):
            failures.append(f"ordering draw {i}")
    wz = winning_zone_threshold(0.1, 1.0, 2.0, LN2)
    tw = time_to_win_threshold(0.1, 2.0, LN2)
    if float(f"{wz:.4g}") != 526.8 or float(f"{tw:.4g}") != 1109.0:
        failures.append(f"thresholds {wz}, {tw}")
    ok = announce(
        7, "profit bound n <= 12, threshold ordering x1000, worked thresholds", not failures, 60,
        f"winning zone {wz:.1f}, time to win {tw:.1f}",
    )
    assert ok, failures


def test_criterion_8_time_to_win_trend(announce):
    cfg = load_env("biased-coin-game")
    spec = cfg.game_spec()
    d = spec.model_class.d_mu(spec.mu)
    gaps = average_profit_gap(spec, [4, 8, 12])
    vals = [g for _, g in gaps]
    under = all(g <= profit_gap_envelope(n, spec.p_delta, spec.p_max, d) for n, g in gaps)
    good = all(g >= 0 for g in vals) and vals[0] > vals[1] > vals[2] and under
    ok = announce(8, "average profit gap nonnegative, decreasing, under envelope", good, 60,
                  "gaps " + ", ".join(f"n={n}: {g:.5f}" for n, g in gaps))
    assert ok


def test_criterion_9_monte_carlo(announce, tmp_path):
    failures, worst = [], 0.0
    for name in BOUND_ENVS:
        cfg = load_env(name)
        assert cfg.horizon <= 12 and cfg.samples == 100_000
        schemes = standard_schemes(cfg.mu, cfg.model_class, cfg.loss)
        exact = evaluate(cfg.mu, cfg.horizon, schemes=schemes)
        for scheme, sch in schemes.items():
            est, se = mc_expected_loss(cfg.mu, sch, cfg.horizon, cfg.samples, cfg.seed, threads=0)
            err = abs(est - exact.L(scheme))
            if se > 0:
                worst = max(worst, err / se)
            if err > 4 * se + 1e-12:
                failures.append(f"{name}/{scheme}: {err / se:.2f} stderr")
    outputs = []
    for threads in (1, 4, 0):
        out = tmp_path / f"mc-{threads}.csv"
        status = cli.run(["mc", "--config", str(CONFIGS / "mixed.yaml"), "--out", str(out), "--threads", str(threads)])
        outputs.append((status, out.read_bytes()))
    if len({o for o in outputs}) != 1:
        failures.append("CLI output depends on --threads")
    ok = announce(
        9, "MC within 4 stderr of exact, 7 envs x 2 schemes, 1e5 samples; thread-independent CSV", not failures, 120,
        f"worst {worst:.2f} stderr" + ("; " + "; ".join(failures) if failures else ""),
    )
    assert ok, failures
