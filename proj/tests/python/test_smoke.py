import itertools
import math

import numpy as np
import pytest

import imugan


def pairwise_auroc(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y]
    neg = [s for s, y in zip(scores, labels) if not y]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p, n in itertools.product(pos, neg))
    return wins / (len(pos) * len(neg))


def test_version():
    assert imugan.__version__ == "0.1.0"


def test_auroc_fixture_and_oracle():
    assert imugan.auroc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == 0.75
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = int(rng.integers(4, 20))
        scores = list(rng.integers(0, 4, n) / 4.0)
        labels = [0, 1] + list(rng.integers(0, 2, n - 2))
        assert imugan.auroc(scores, labels) == pytest.approx(pairwise_auroc(scores, labels), abs=1e-12)
    curve = imugan.roc_curve([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1])
    assert curve[0][1:] == (0.0, 0.0)
    assert curve[-1][1:] == (1.0, 1.0)


def test_feature_statistics():
    assert imugan.mean_std([1, 2, 3]) == (2.0, pytest.approx(math.sqrt(2 / 3)))
    assert imugan.skewness([0, 0, 0, 4]) == pytest.approx(2 / math.sqrt(3), abs=1e-15)
    assert imugan.kurtosis([-1, 1]) == 1.0
    assert imugan.mode([1, 1, 2]) == pytest.approx(1.05)
    assert imugan.percentile([0, 1, 2, 3], 25) == 0.75
    assert imugan.iqr([0, 1, 2, 3]) == 1.5
    names = imugan.feature_names()
    assert len(names) == 45 and names[0] == "long_acc_mean" and names[-1] == "roll_iqr"
    values = np.random.default_rng(1).uniform(size=(60, 5))
    feats = imugan.extract_features(values)
    assert feats.shape == (45,)
    assert feats[0] == pytest.approx(values[:, 0].mean())


def test_preprocessing_fixtures():
    assert list(imugan.moving_average(np.array([1.0, 2.0, 3.0]), 2)) == [1.0, 1.5, 2.5]
    ramp = imugan.RawTrip("ramp", np.repeat(np.arange(60000.0)[:, None], 5, axis=1))
    down = imugan.downsample(ramp)
    assert down.shape == (60, 5)
    assert list(down[:3, 0]) == [0.0, 1000.0, 2000.0]
    block = np.array([[0.0, 1, 1, 1, 4], [5, 2, 2, 2, 4], [10, 3, 3, 3, 4]])
    scaler = imugan.fit_minmax([block])
    assert list(imugan.apply_minmax(scaler, block)[:, 0]) == [0.0, 0.5, 1.0]
    assert scaler.degenerate[4]
    assert np.allclose(imugan.invert_minmax(scaler, imugan.apply_minmax(scaler, block)), block, atol=1e-12)
    with pytest.raises(ValueError, match="short"):
        imugan.downsample(imugan.RawTrip("short", np.zeros((100, 5))))


def test_simulate_preprocess_and_generate():
    raw, truth = imugan.simulate(n=4, labeled=4, seed=3)
    assert len(raw) == 4 and raw[0].samples.shape == (60000, 5)
    assert [t.label for t in raw] == truth
    trips, scaler = imugan.preprocess(raw, [0, 1, 2, 3])
    values = [t.values for t in trips]
    assert all(v.shape == (60, 5) and v.min() >= 0.0 and v.max() <= 1.0 for v in values)

    config = imugan.RcganConfig()
    config.epochs, config.hidden, config.latent, config.seed = 2, 4, 2, 5
    generator, history = imugan.train_rcgan(values, [t.label for t in trips], config)
    assert [h[0] for h in history] == [0, 1]
    assert all(math.isfinite(d) and math.isfinite(g) for _, d, g in history)
    fakes = generator.synthesize(1.0, 4, 7)
    assert [f.label for f in fakes] == [imugan.DrivingStyle.normal, imugan.DrivingStyle.aggressive] * 2
    again = generator.synthesize(1.0, 4, 7)
    assert all(np.array_equal(a.values, b.values) for a, b in zip(fakes, again))


def test_cli_in_process(tmp_path):
    code, out, _ = imugan.run_cli(["--help"])
    assert code == 0 and "simulate" in out
    assert imugan.run_cli(["simulate", "--bogus"])[0] == 2
    code, _, err = imugan.run_cli(["features", "--in", str(tmp_path / "missing.csv")])
    assert code == 1 and "error [features]" in err
    code, out, _ = imugan.run_cli(["--out", str(tmp_path), "simulate", "--n", "2", "--labeled", "2"])
    assert code == 0 and (tmp_path / "raw.csv").exists()
