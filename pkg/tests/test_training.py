"""Tests for the toy study: data generation, gradient descent, decoding."""

import numpy as np
import pytest

from semcond import (
    DivergenceError,
    InputError,
    ToyConfig,
    ToyDataset,
    compile_hex,
    consistency_rate,
    evaluate_decoders,
    exact_accuracy,
    generate_toy_dataset,
    ingest_hex,
    knowledge_entails,
    parse_formula,
    run_toy_study,
    train_toy_model,
)

QUICK = dict(d=4, n_train=200, n_test=100, epochs=40, learning_rate=0.5, noise=0.6)


def quick_config(k, **overrides):
    return ToyConfig(k=k, **{**QUICK, **overrides})


@pytest.fixture(scope="module")
def chain3():
    return compile_hex(ingest_hex(["a", "b", "c"], [("a", "b"), ("b", "c")], []))


class TestToyConfig:
    def test_from_dict_fills_k_and_defaults(self):
        cfg = ToyConfig.from_dict({"seed": 7}, k=4)
        assert cfg.k == 4
        assert cfg.seed == 7
        assert cfg.d == 10
        assert cfg.weights == (-1.0, 0.0, 0.1, 0.5, 1.0)

    def test_unknown_keys_rejected(self):
        with pytest.raises(InputError, match="unknown"):
            ToyConfig.from_dict({"ntrain": 10}, k=3)

    def test_k_mismatch_rejected(self):
        with pytest.raises(InputError, match="k=5"):
            ToyConfig.from_dict({"k": 5}, k=3)

    def test_matching_k_accepted(self):
        cfg = ToyConfig.from_dict({"k": 3, "epochs": 10}, k=3)
        assert cfg.epochs == 10

    def test_sizes_must_be_positive(self):
        with pytest.raises(InputError, match="positive"):
            ToyConfig.from_dict({"epochs": 0}, k=3)
        with pytest.raises(InputError, match="positive"):
            ToyConfig.from_dict({"d": 0}, k=3)

    def test_rate_and_noise_validated(self):
        with pytest.raises(InputError):
            ToyConfig.from_dict({"learning_rate": 0.0}, k=3)
        with pytest.raises(InputError):
            ToyConfig.from_dict({"noise": -0.1}, k=3)

    def test_weights_coerced_to_float_tuple(self):
        cfg = ToyConfig.from_dict({"weights": [0, 1]}, k=3)
        assert cfg.weights == (0.0, 1.0)
        assert isinstance(cfg.weights[0], float)


class TestGenerator:
    def test_shapes(self, chain3):
        cfg = quick_config(3)
        data = generate_toy_dataset(chain3, cfg, np.random.default_rng(0))
        assert data.features.shape == (cfg.n_train, cfg.d)
        assert data.labels.shape == (cfg.n_train, 3)
        assert data.test_features.shape == (cfg.n_test, cfg.d)
        assert data.test_labels.shape == (cfg.n_test, 3)

    def test_every_label_row_is_consistent(self, chain3):
        data = generate_toy_dataset(chain3, quick_config(3), np.random.default_rng(1))
        for row in np.vstack([data.labels, data.test_labels]):
            assert knowledge_entails(chain3, row)

    def test_one_prototype_per_consistent_vector(self, chain3):
        data = generate_toy_dataset(chain3, quick_config(3), np.random.default_rng(2))
        # a 3-chain admits 000, 100, 110, 111
        assert data.prototypes.shape == (4, QUICK["d"])
        np.testing.assert_allclose(
            np.linalg.norm(data.prototypes, axis=1), np.ones(4), rtol=1e-12
        )

    def test_same_seed_same_data(self, chain3):
        cfg = quick_config(3)
        a = generate_toy_dataset(chain3, cfg, np.random.default_rng(5))
        b = generate_toy_dataset(chain3, cfg, np.random.default_rng(5))
        np.testing.assert_array_equal(a.features, b.features)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_contradiction_rejected(self):
        f = parse_formula("y1 & ~y1", 1)
        with pytest.raises(InputError, match="no consistent"):
            generate_toy_dataset(f, quick_config(1), np.random.default_rng(0))

    def test_formula_knowledge_accepted(self):
        f = parse_formula("~y1 | y2", 2)
        data = generate_toy_dataset(f, quick_config(2), np.random.default_rng(3))
        for row in data.labels:
            assert knowledge_entails(f, row)


class TestTraining:
    def test_loss_decreases_on_easy_data(self, chain3):
        cfg = quick_config(3, noise=0.1, epochs=60)
        rng = np.random.default_rng(0)
        data = generate_toy_dataset(chain3, cfg, rng)
        result = train_toy_model(chain3, data, cfg, 0.0, rng)
        losses = result.epoch_losses
        assert len(losses) == cfg.epochs
        assert losses[-1] < 0.5 * losses[0]

    def test_losses_finite_for_all_default_weights(self, chain3):
        cfg = quick_config(3, epochs=15)
        for weight in (-1.0, 0.0, 1.0):
            rng = np.random.default_rng(cfg.seed)
            data = generate_toy_dataset(chain3, cfg, rng)
            result = train_toy_model(chain3, data, cfg, weight, rng)
            assert np.isfinite(result.epoch_losses).all()

    def test_divergence_is_reported(self, chain3):
        # features this large overflow the activations after one update
        x = np.full((8, 2), 1e200)
        y = np.tile([1, 1, 1], (8, 1)).astype(np.uint8)
        data = ToyDataset(x, y, x[:2], y[:2], np.zeros((1, 2)), y[:1])
        cfg = quick_config(3, d=2, n_train=8, n_test=2)
        quiet = np.errstate(over="ignore", invalid="ignore")
        with quiet, pytest.raises(DivergenceError, match="not finite"):
            train_toy_model(chain3, data, cfg, 0.0, np.random.default_rng(0))

    def test_same_seed_reproduces_losses_exactly(self, chain3):
        cfg = quick_config(3, epochs=20)
        runs = []
        for _ in range(2):
            rng = np.random.default_rng(cfg.seed)
            data = generate_toy_dataset(chain3, cfg, rng)
            runs.append(train_toy_model(chain3, data, cfg, 0.5, rng).epoch_losses)
        assert runs[0] == runs[1]


class TestMetrics:
    def test_exact_accuracy_counts_whole_rows(self):
        pred = np.array([[1, 0], [1, 1], [0, 0]])
        gold = np.array([[1, 0], [0, 1], [0, 0]])
        assert exact_accuracy(pred, gold) == pytest.approx(2 / 3)

    def test_consistency_rate(self, chain3):
        rows = np.array([[1, 1, 0], [0, 1, 0], [0, 0, 0], [1, 0, 1]])
        assert consistency_rate(chain3, rows) == pytest.approx(0.5)

    def test_consistency_rate_empty(self, chain3):
        assert consistency_rate(chain3, np.zeros((0, 3), dtype=np.uint8)) == 0.0


class TestStudy:
    def test_sweep_structure_and_consistency(self, chain3):
        cfg = quick_config(3, epochs=25, weights=(0.0, 1.0))
        report = run_toy_study(chain3, cfg)
        assert [e["lambda"] for e in report["sweep"]] == [0.0, 1.0]
        assert report["config"]["n_train"] == cfg.n_train
        for entry in report["sweep"]:
            assert len(entry["epoch_losses"]) == cfg.epochs
            for split in ("train", "test"):
                scores = entry[split]
                assert scores["sci"]["consistency"] == 1.0
                for decoder in ("imc", "sci"):
                    assert 0.0 <= scores[decoder]["exact_accuracy"] <= 1.0

    def test_study_is_deterministic(self, chain3):
        cfg = quick_config(3, epochs=15, weights=(0.5,))
        a = run_toy_study(chain3, cfg)
        b = run_toy_study(chain3, cfg)
        assert a == b

    def test_sweep_entries_share_the_dataset(self, chain3):
        # identical seeds mean the lambda=0 entry of a two-weight sweep
        # matches a single-weight run byte for byte
        cfg2 = quick_config(3, epochs=15, weights=(0.0, 1.0))
        cfg1 = quick_config(3, epochs=15, weights=(0.0,))
        full = run_toy_study(chain3, cfg2)
        solo = run_toy_study(chain3, cfg1)
        assert full["sweep"][0] == solo["sweep"][0]
