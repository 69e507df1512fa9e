"""Acceptance gate for the whole package.

One test per shipped guarantee, grouped by subsystem.  Every test prints a
summary line with the measured numbers, so running this file with ``-v -s``
doubles as an acceptance report.  Tolerances are part of the contract and
are asserted, not just reported.
"""

import math
import time

import numpy as np
import pytest

from semcond import (
    AccuracyPoint,
    SurrogateModel,
    ToyConfig,
    asymptotic_gain,
    compile_hex,
    dense_from_activations,
    exactly_one,
    fit_surrogate,
    hex_to_formula,
    ingest_hex,
    knowledge_entails,
    knowledge_log_pqe,
    knowledge_marginals,
    log_partition_function,
    loss_categorical,
    loss_imc,
    loss_sc,
    loss_sr,
    map_state,
    one_hot,
    pqe,
    predict_imc,
    predict_sci,
    run_toy_study,
    sparsify_hierarchy,
    tautology,
)
from semcond.inference import map_bruteforce, pqe_bruteforce
from semcond.numerics import logsumexp

from conftest import chain_hex, random_hex, random_satisfiable_hex

SEED = 20260819
DYADIC = np.array([-1.0, -0.5, 0.0, 0.5, 1.0])


def graph_pool(rng, count, **kw):
    """Compiled graph + enumeration formula pairs for oracle comparisons."""
    pool = []
    for _ in range(count):
        g = random_satisfiable_hex(rng, **kw)
        pool.append((g, compile_hex(g), hex_to_formula(g)))
    return pool


def random_consistent_label(rng, formula):
    models = formula.models()
    return models[rng.integers(0, models.shape[0])]


def central_difference(fn, a, h=1e-5):
    a = np.asarray(a, dtype=np.float64)
    grad = np.empty_like(a)
    for j in range(a.size):
        hi, lo = a.copy(), a.copy()
        hi[j] += h
        lo[j] -= h
        grad[j] = (fn(hi) - fn(lo)) / (2 * h)
    return grad


class TestOracleEquivalence:
    def test_compiled_engine_matches_enumeration(self):
        """100 graphs x 10 activation draws: probability queries within 1e-9
        relative (measured in probability space), conditioned modes exact,
        the whole sweep under a minute."""
        rng = np.random.default_rng(SEED)
        t0 = time.perf_counter()
        worst = 0.0
        for g, ck, f in graph_pool(rng, 100, n_max=14):
            for trial in range(10):
                if trial < 8:
                    a = rng.normal(scale=2.0, size=g.n)
                else:
                    # dyadic grid values force exact ties in both engines
                    a = rng.choice(DYADIC, size=g.n)
                lp_fast = pqe(ck, a)
                lp_slow = pqe_bruteforce(f, a)
                worst = max(worst, abs(math.expm1(lp_fast - lp_slow)))
                np.testing.assert_array_equal(
                    map_state(ck, a), map_bruteforce(f, a),
                    err_msg=f"mode mismatch on {g.names} at a={a}",
                )
        elapsed = time.perf_counter() - t0
        assert worst <= 1e-9
        assert elapsed < 60.0
        print(f"\noracle equivalence: PASS (worst rel err {worst:.3e}, "
              f"modes exact, {elapsed:.1f}s)")


class TestPropositionSuite:
    """Randomized checks of the algebraic guarantees, >= 1000 cases each."""

    def test_conditioned_predictions_satisfy_the_constraint(self):
        rng = np.random.default_rng(SEED + 1)
        for g, ck, f in graph_pool(rng, 125, n_max=12):
            for _ in range(8):
                a = rng.normal(scale=3.0, size=g.n)
                assert knowledge_entails(ck, predict_sci(ck, a))
        print("\nconditioned predictions consistent: PASS (1000 cases)")

    def test_correct_unconditioned_answers_are_preserved(self):
        rng = np.random.default_rng(SEED + 2)
        checked = 0
        for g, ck, f in graph_pool(rng, 125, n_max=12):
            for _ in range(8):
                y = random_consistent_label(rng, f)
                # activations whose thresholding already recovers y
                a = (2.0 * y - 1.0) * (0.1 + np.abs(rng.normal(size=g.n)))
                np.testing.assert_array_equal(predict_imc(a), y)
                np.testing.assert_array_equal(predict_sci(ck, a), y)
                checked += 1
        assert checked >= 1000
        print(f"\ncorrect answers preserved under conditioning: PASS ({checked} cases)")

    def test_redundant_hierarchy_edges_do_not_change_queries(self):
        rng = np.random.default_rng(SEED + 3)
        cases = 0
        for _ in range(200):
            g = random_satisfiable_hex(rng, n_max=10, p_hier=0.35)
            sparse = sparsify_hierarchy(g)
            ck_full, ck_sparse = compile_hex(g), compile_hex(sparse)
            for _ in range(5):
                a = rng.normal(scale=2.0, size=g.n)
                assert knowledge_log_pqe(ck_full, a) == pytest.approx(
                    knowledge_log_pqe(ck_sparse, a), rel=1e-9, abs=1e-12
                )
                np.testing.assert_array_equal(
                    map_state(ck_full, a), map_state(ck_sparse, a)
                )
                cases += 1
        assert cases >= 1000
        print(f"\nsparsification invariance: PASS ({cases} cases)")

    def test_conditioning_on_a_tautology_is_plain_bce(self):
        rng = np.random.default_rng(SEED + 4)
        worst = 0.0
        for _ in range(1000):
            k = int(rng.integers(1, 9))
            a = rng.normal(scale=3.0, size=k)
            y = rng.integers(0, 2, size=k)
            free = loss_imc(a, y)
            cond = loss_sc(tautology(k), a, y)
            worst = max(worst, abs(cond.value - free.value))
            np.testing.assert_allclose(cond.gradient, free.gradient, atol=1e-9)
        assert worst <= 1e-9
        print(f"\ntautology conditioning == BCE: PASS (worst gap {worst:.3e})")

    def test_exactly_one_conditioning_is_softmax_cross_entropy(self):
        rng = np.random.default_rng(SEED + 5)
        worst = 0.0
        for _ in range(1000):
            k = int(rng.integers(2, 11))
            a = rng.normal(scale=3.0, size=k)
            j = int(rng.integers(1, k + 1))
            cond = loss_sc(exactly_one(k), a, one_hot(k, j))
            soft = loss_categorical(a, j)
            worst = max(worst, abs(cond.value - soft.value))
            np.testing.assert_allclose(cond.gradient, soft.gradient, atol=1e-9)
        assert worst <= 1e-9
        print(f"\nexactly-one conditioning == softmax CE: PASS (worst gap {worst:.3e})")

    def test_conditioned_loss_is_regularized_loss_at_minus_one(self):
        rng = np.random.default_rng(SEED + 6)
        worst = 0.0
        cases = 0
        for g, ck, f in graph_pool(rng, 125, n_max=10):
            for _ in range(8):
                a = rng.normal(scale=2.0, size=g.n)
                y = random_consistent_label(rng, f)
                cond = loss_sc(ck, a, y)
                reg = loss_sr(ck, a, y, -1.0)
                rel = abs(cond.value - reg.value) / max(abs(cond.value), 1e-12)
                worst = max(worst, rel)
                cases += 1
        assert cases >= 1000
        assert worst <= 1e-9
        print(f"\nconditioned == regularized at weight -1: PASS "
              f"(worst rel gap {worst:.3e}, {cases} cases)")

    def test_normalizer_has_the_product_form(self):
        rng = np.random.default_rng(SEED + 7)
        worst = 0.0
        for _ in range(1000):
            k = int(rng.integers(1, 13))
            a = rng.normal(scale=3.0, size=k)
            lz_sum = logsumexp(dense_from_activations(a).log_weights)
            lz_prod = log_partition_function(a)
            worst = max(worst, abs(math.expm1(lz_sum - lz_prod)))
        assert worst <= 1e-9
        print(f"\nnormalizer product form: PASS (worst rel err {worst:.3e})")


class TestGradientChecks:
    def test_analytic_gradients_match_central_differences(self):
        """100 random (constraint, activation, label) triples, k <= 10; the
        worst coordinate error across all three losses stays under 1e-5."""
        rng = np.random.default_rng(SEED + 8)
        h = 1e-5
        worst = 0.0
        for g, ck, f in graph_pool(rng, 100, n_max=10):
            a = rng.normal(scale=2.0, size=g.n)
            y = random_consistent_label(rng, f)
            weight = float(rng.uniform(-1.5, 2.0))
            probes = [
                (loss_imc(a, y).gradient, lambda x: loss_imc(x, y).value),
                (loss_sc(ck, a, y).gradient, lambda x: loss_sc(ck, x, y).value),
                (loss_sr(ck, a, y, weight).gradient,
                 lambda x: loss_sr(ck, x, y, weight).value),
            ]
            for analytic, fn in probes:
                err = np.abs(analytic - central_difference(fn, a, h)).max()
                worst = max(worst, err)
        assert worst <= 1e-5
        print(f"\ngradient checks: PASS (max abs err {worst:.3e})")


class TestLinearScaling:
    def test_chain_query_time_grows_linearly(self):
        """Query latency on hierarchy chains is linear in depth (R^2 >= 0.95)
        and a depth-1000 query stays under 50 ms."""
        depths = [10, 50, 100, 200, 350, 500, 650, 800, 1000]
        rng = np.random.default_rng(SEED + 9)
        compiled = {d: compile_hex(chain_hex(d)) for d in depths}
        acts = {d: rng.normal(scale=1.5, size=d) for d in depths}
        pqe(compiled[depths[0]], acts[depths[0]])  # warm the caches
        medians = []
        for d in depths:
            reps = []
            for _ in range(5):
                t0 = time.perf_counter()
                pqe(compiled[d], acts[d])
                reps.append(time.perf_counter() - t0)
            medians.append(np.median(reps))
        times = np.asarray(medians)
        x = np.asarray(depths, dtype=np.float64)
        slope, intercept = np.polyfit(x, times, 1)
        predicted = slope * x + intercept
        ss_res = float(((times - predicted) ** 2).sum())
        ss_tot = float(((times - times.mean()) ** 2).sum())
        r2 = 1.0 - ss_res / ss_tot
        t1000 = float(times[-1])
        assert r2 >= 0.95
        assert t1000 < 0.050
        print(f"\nlinear scaling: PASS (R^2 {r2:.4f}, depth-1000 {t1000 * 1e3:.1f}ms)")


class TestScalingAnalyzer:
    def test_noiseless_parameters_recovered_within_one_percent(self):
        true = SurrogateModel(alpha=-2.0, b=0.4, a_inf=0.99)
        ms = np.geomspace(1e2, 1e6, 12)
        points = [AccuracyPoint(float(m), float(true.predict(m))) for m in ms]
        fit = fit_surrogate(points)
        for name in ("alpha", "b", "a_inf"):
            got, want = getattr(fit, name), getattr(true, name)
            assert abs(got - want) / abs(want) <= 0.01, name
        print(f"\nnoiseless recovery: PASS (alpha {fit.alpha:.6f}, "
              f"b {fit.b:.6f}, a_inf {fit.a_inf:.8f})")

    def test_asymptotic_gains_reproduce_published_differences(self):
        """Digit benchmark: conditioned decoding lifts the asymptote from
        97.7 to 99.0; small-image benchmark: full conditioning lifts it from
        68.4 to 71.8.  Gains are plain differences of the fitted ceilings."""
        base_digit = SurrogateModel(alpha=-5.0, b=0.3, a_inf=97.7)
        cond_digit = SurrogateModel(alpha=-5.0, b=0.3, a_inf=99.0)
        base_image = SurrogateModel(alpha=-9.0, b=0.2, a_inf=68.4)
        cond_image = SurrogateModel(alpha=-9.0, b=0.2, a_inf=71.8)
        g1 = asymptotic_gain(cond_digit, base_digit)
        g2 = asymptotic_gain(cond_image, base_image)
        assert g1 == 99.0 - 97.7
        assert g2 == 71.8 - 68.4
        assert g1 == pytest.approx(1.3, abs=1e-12)
        assert g2 == pytest.approx(3.4, abs=1e-12)
        print(f"\nasymptotic gains: PASS ({g1:.15f}, {g2:.15f})")

    def test_resource_inverse_round_trips(self):
        model = SurrogateModel(alpha=-2.0, b=0.4, a_inf=0.99)
        worst = 0.0
        for m in np.geomspace(1e2, 1e8, 25):
            acc = model.predict(m)
            back = model.predict(model.inverse(acc))
            worst = max(worst, abs(back - acc) / abs(acc))
        assert worst <= 1e-9
        print(f"\npredict/inverse round trip: PASS (worst rel err {worst:.3e})")


@pytest.fixture(scope="module")
def bundled():
    import json
    import pathlib

    from semcond import hex_from_dict

    root = pathlib.Path(__file__).resolve().parent.parent / "fixtures"
    kn = compile_hex(
        hex_from_dict(json.loads((root / "hierarchy6.json").read_text()))
    )
    raw = json.loads((root / "toy_config.json").read_text())
    return kn, raw


class TestToyStudy:
    def test_conditioned_decoding_never_loses(self, bundled):
        """Seed 0, bundled 6-label taxonomy: conditioned decoding matches or
        beats thresholding at every regularization weight."""
        kn, raw = bundled
        report = run_toy_study(kn, ToyConfig.from_dict(raw, k=6))
        gaps = []
        for entry in report["sweep"]:
            t = entry["test"]
            gap = t["sci"]["exact_accuracy"] - t["imc"]["exact_accuracy"]
            gaps.append((entry["lambda"], gap))
            assert gap >= 0.0, f"lost at weight {entry['lambda']}"
        summary = ", ".join(f"{lam:g}:{g * 100:+.1f}pp" for lam, g in gaps)
        print(f"\ntoy sweep, conditioning never loses: PASS ({summary})")

    def test_plain_bce_gap_across_seeds(self, bundled):
        """Soft check, reported rather than enforced: at weight 0 the
        conditioned decoder should win by >= 1 point on most seeds."""
        import dataclasses

        kn, raw = bundled
        base = ToyConfig.from_dict(raw, k=6)
        base = dataclasses.replace(base, weights=(0.0,))
        wins = 0
        gaps = []
        for seed in range(5):
            cfg = dataclasses.replace(base, seed=seed)
            entry = run_toy_study(kn, cfg)["sweep"][0]["test"]
            gap = entry["sci"]["exact_accuracy"] - entry["imc"]["exact_accuracy"]
            gaps.append(gap)
            wins += gap >= 0.01
        line = ", ".join(f"{g * 100:+.2f}pp" for g in gaps)
        if wins >= 4:
            print(f"\nplain-BCE gap across seeds: PASS ({wins}/5 wins, {line})")
        else:
            print(f"\nplain-BCE gap across seeds: BELOW TARGET "
                  f"({wins}/5 wins, {line}); reported, not enforced")


class TestNumericalRobustness:
    def test_extreme_activations_stay_finite(self):
        """Activation magnitudes up to 1e4 must never produce a non-finite
        probability, marginal, loss, or gradient."""
        rng = np.random.default_rng(SEED + 10)
        graphs = [random_satisfiable_hex(rng, n_max=10) for _ in range(20)]
        graphs.append(chain_hex(8))
        graphs.append(ingest_hex(["a", "b", "c"], [], [("a", "b"), ("b", "c")]))
        checked = 0
        for g in graphs:
            ck = compile_hex(g)
            f = hex_to_formula(g)
            patterns = [
                np.full(g.n, 1e4),
                np.full(g.n, -1e4),
                rng.choice([-1e4, 1e4], size=g.n),
                rng.uniform(-1e4, 1e4, size=g.n),
                rng.choice([-1e4, -1.0, 0.0, 1.0, 1e4], size=g.n),
            ]
            for a in patterns:
                assert np.isfinite(knowledge_log_pqe(ck, a))
                mu = knowledge_marginals(ck, a)
                assert np.isfinite(mu).all() and (mu >= 0).all() and (mu <= 1).all()
                state = map_state(ck, a)
                assert knowledge_entails(ck, state)
                y = random_consistent_label(rng, f)
                for lv in (
                    loss_imc(a, y),
                    loss_sc(ck, a, y),
                    loss_sr(ck, a, y, 1.0),
                    loss_sr(ck, a, y, -1.0),
                ):
                    assert np.isfinite(lv.value)
                    assert np.isfinite(lv.gradient).all()
                checked += 1
        print(f"\nextreme-activation robustness: PASS ({checked} cases at |a|=1e4)")
