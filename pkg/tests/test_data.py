import numpy as np
import numpy.testing as npt
import pytest

from fedal.data import (HOSPITAL_CLASS_COUNTS, DatasetSpec, class_centers,
                        from_csv_files, generate, load_samples_csv,
                        save_samples_csv, split, four_hospital_spec)
from fedal.errors import ConfigurationError, CsvSchemaError


class TestTable2Spec:
    def test_default_counts(self):
        spec = four_hospital_spec()
        assert spec.client_class_counts[2] == (3720, 124, 24)
        assert spec.client_class_counts == HOSPITAL_CLASS_COUNTS
        assert spec.num_clients == 4 and spec.num_classes == 3

    def test_divisor_ten(self):
        spec = four_hospital_spec(divisor=10)
        assert spec.client_class_counts[0] == (80, 49, 34)

    def test_divisor_clamps_to_one(self):
        spec = four_hospital_spec(divisor=200)
        assert all(c >= 1 for row in spec.client_class_counts for c in row)
        assert spec.client_class_counts[2][2] == 1  # 24 / 200 clamps

    def test_bad_divisor(self):
        with pytest.raises(ConfigurationError):
            four_hospital_spec(divisor=0)


class TestGenerate:
    def test_counts_match_spec_exactly(self):
        spec = four_hospital_spec(divisor=20)
        ds = generate(spec, seed=3)
        for row, cd in zip(spec.client_class_counts, ds.clients):
            all_labels = np.concatenate([cd.train_labels, cd.val_labels, cd.test_labels])
            npt.assert_array_equal(np.bincount(all_labels, minlength=3), row)

    def test_no_shift_no_noise_collapses_to_centers(self):
        spec = DatasetSpec(num_classes=2, feature_dim=4,
                           client_class_counts=((10, 10),),
                           class_mean_scale=2.0, client_shift_scale=0.0,
                           noise_std=1e-12)
        ds = generate(spec, seed=0)
        centers = class_centers(spec)
        cd = ds.clients[0]
        for feats, labels in ((cd.train_features, cd.train_labels),
                              (cd.test_features, cd.test_labels)):
            for x, y in zip(feats, labels):
                npt.assert_allclose(x, centers[y], atol=1e-9)

    def test_deterministic(self):
        spec = four_hospital_spec(divisor=40)
        a = generate(spec, seed=11)
        b = generate(spec, seed=11)
        for ca, cb in zip(a.clients, b.clients):
            npt.assert_array_equal(ca.train_features, cb.train_features)
            npt.assert_array_equal(ca.test_labels, cb.test_labels)

    def test_seed_changes_data(self):
        spec = four_hospital_spec(divisor=40)
        a = generate(spec, seed=11)
        b = generate(spec, seed=12)
        assert np.any(a.clients[0].train_features != b.clients[0].train_features)

    def test_frozen_sentinel_value(self):
        # guards the documented PRNG contract: same seed, same bits
        spec = four_hospital_spec(divisor=40)
        ds = generate(spec, seed=11)
        sentinel = float(ds.clients[0].train_features[0, 0])
        assert sentinel == pytest.approx(3.2329229279912606, abs=1e-12)

    def test_feature_dim_smaller_than_classes_rejected(self):
        with pytest.raises(ConfigurationError):
            DatasetSpec(num_classes=3, feature_dim=2,
                        client_class_counts=((5, 5, 5),))

    def test_default_scales_support_a_strong_central_model(self):
        # five-seed mean pooled test accuracy of the pooled-data baseline
        import numpy as np

        from fedal.config import ExperimentConfig
        from fedal.federation import MODE_CENTRALIZED, run_experiment
        from fedal.harness import Arm, build_dataset, build_settings

        cfg = ExperimentConfig()
        arm = Arm("centralized", MODE_CENTRALIZED, None, 1.0)
        accs = []
        for seed in range(5):
            ds = build_dataset(cfg, seed)
            hist = run_experiment(ds, build_settings(cfg, arm), seed,
                                  mode=MODE_CENTRALIZED)
            sizes = np.array([len(cd.test_labels) for cd in ds.clients])
            micros = np.array([r.micro_f1 for r in hist.final.test_records])
            accs.append((micros * sizes).sum() / sizes.sum())
        assert np.mean(accs) >= 0.8


class TestSplit:
    def test_hundred_samples(self):
        x = np.zeros((100, 2))
        y = np.arange(100) % 3
        cd = split(x, y, rng=np.random.default_rng(0))
        assert (cd.n_train, len(cd.val_labels), len(cd.test_labels)) == (70, 10, 20)

    def test_remainder_goes_to_train(self):
        x = np.zeros((105, 2))
        y = np.zeros(105, dtype=int)
        cd = split(x, y, rng=np.random.default_rng(0))
        assert len(cd.val_labels) == 10 and len(cd.test_labels) == 21
        assert cd.n_train == 74
        assert cd.n_total == 105

    def test_partition_is_disjoint_and_complete(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(83, 3))
        y = rng.integers(0, 4, 83)
        cd = split(x, y, rng=np.random.default_rng(1))
        rebuilt = np.concatenate([cd.train_features, cd.val_features, cd.test_features])
        assert rebuilt.shape == x.shape
        # every original row appears exactly once
        orig = {tuple(row) for row in x}
        assert {tuple(row) for row in rebuilt} == orig

    def test_labels_follow_features(self):
        x = np.arange(40, dtype=float).reshape(20, 2)
        y = np.arange(20) % 2
        lookup = {tuple(row): label for row, label in zip(x, y)}
        cd = split(x, y, rng=np.random.default_rng(2))
        for feats, labels in ((cd.train_features, cd.train_labels),
                              (cd.val_features, cd.val_labels),
                              (cd.test_features, cd.test_labels)):
            for row, label in zip(feats, labels):
                assert lookup[tuple(row)] == label

    def test_deterministic(self):
        x = np.random.default_rng(0).normal(size=(50, 2))
        y = np.zeros(50, dtype=int)
        a = split(x, y, seed=9)
        b = split(x, y, seed=9)
        npt.assert_array_equal(a.train_features, b.train_features)

    def test_too_few_samples(self):
        with pytest.raises(ConfigurationError):
            split(np.zeros((9, 1)), np.zeros(9, dtype=int))


class TestCsv:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "client.csv"
        rng = np.random.default_rng(3)
        feats = rng.normal(size=(12, 4))
        labels = rng.integers(0, 3, 12)
        save_samples_csv(path, feats, labels)
        loaded_feats, loaded_labels = load_samples_csv(path, num_classes=3)
        npt.assert_array_equal(loaded_labels, labels)
        npt.assert_array_equal(loaded_feats, feats)  # repr round-trips exactly

    def test_three_row_file(self, tmp_path):
        path = tmp_path / "c.csv"
        path.write_text("label,f0,f1\n0,1.0,2.0\n1,3.0,4.0\n2,5.0,6.0\n")
        feats, labels = load_samples_csv(path)
        assert feats.shape == (3, 2)
        npt.assert_array_equal(labels, [0, 1, 2])

    def test_out_of_range_label_names_line(self, tmp_path):
        path = tmp_path / "c.csv"
        path.write_text("label,f0\n0,1.0\n3,2.0\n")
        with pytest.raises(CsvSchemaError, match="line 3"):
            load_samples_csv(path, num_classes=3)

    def test_inconsistent_width_names_line(self, tmp_path):
        path = tmp_path / "c.csv"
        path.write_text("label,f0,f1\n0,1.0,2.0\n0,1.0\n")
        with pytest.raises(CsvSchemaError, match="line 3"):
            load_samples_csv(path)

    def test_malformed_value_names_line(self, tmp_path):
        path = tmp_path / "c.csv"
        path.write_text("label,f0\n0,1.0\n0,abc\n")
        with pytest.raises(CsvSchemaError, match="line 3"):
            load_samples_csv(path)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "c.csv"
        path.write_text("label,x0\n0,1.0\n")
        with pytest.raises(CsvSchemaError, match="header"):
            load_samples_csv(path)

    def test_federation_from_csvs(self, tmp_path):
        rng = np.random.default_rng(0)
        paths = []
        for m in range(2):
            path = tmp_path / f"client{m}.csv"
            save_samples_csv(path, rng.normal(size=(30, 3)), rng.integers(0, 2, 30))
            paths.append(str(path))
        ds = from_csv_files(paths, num_classes=2, seed=1)
        assert ds.num_clients == 2 and ds.feature_dim == 3
        assert ds.clients[0].n_total == 30
