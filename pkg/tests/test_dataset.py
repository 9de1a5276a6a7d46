import numpy as np
import pytest

from taskmesh import automata
from taskmesh import dataset as ds
from taskmesh.errors import IntegrityError, InvalidArgumentError, SchemaVersionError


class TestBuild:
    def test_sample_counts(self, suite):
        data = ds.build_dataset(suite[:2], L=5, K=4, seed=1)
        assert len(data) == 10
        assert all(len(s) == 4 for s in data.samples)

    def test_single_step_samples_start_at_initial(self, suite):
        data = ds.build_dataset(suite[:3], L=1, K=1, seed=1)
        for sample in data.samples:
            dfa = data.manifest.tasks[sample.task_id].dfa
            assert sample.states[0] == dfa.initial

    def test_full_consistency_audit(self, small_dataset):
        # independent replay: every consecutive pair must satisfy the machine
        for sample in small_dataset.samples:
            dfa = small_dataset.manifest.tasks[sample.task_id].dfa
            for k in range(len(sample) - 1):
                assert sample.states[k + 1] == automata.step(
                    dfa, sample.states[k], sample.events[k])
        assert ds.audit(small_dataset) == []

    def test_deterministic_under_seed(self, suite):
        a = ds.build_dataset(suite[:2], L=3, K=5, seed=42)
        b = ds.build_dataset(suite[:2], L=3, K=5, seed=42)
        assert a == b

    def test_mismatched_alphabets_rejected(self, suite):
        from dataclasses import replace
        stripped = replace(suite[0],
                           dfa=automata.make_dfa(
                               suite[0].dfa.states, ("X",), {},
                               suite[0].dfa.initial, suite[0].dfa.accepting))
        with pytest.raises(InvalidArgumentError):
            ds.build_dataset([stripped, suite[1]], L=1, K=1, seed=0)

    def test_command_paraphrases_come_from_training_slice(self, suite):
        from taskmesh.taskgen import bank_split
        data = ds.build_dataset(suite[:2], L=30, K=2, seed=5)
        for sample in data.samples:
            task = data.manifest.tasks[sample.task_id]
            train, held = bank_split(task.command_text)
            assert sample.command_text in train
            assert sample.command_text not in held


class TestSplit:
    def test_partition_and_stratification(self, suite):
        data = ds.build_dataset(suite[:3], L=10, K=3, seed=2)
        train, test = ds.split(data, 0.8, seed=9)
        assert len(train) + len(test) == len(data)
        train_ids = {id(s) for s in train.samples}
        assert all(id(s) not in train_ids for s in test.samples)
        for tid in range(3):
            n_train = sum(1 for s in train.samples if s.task_id == tid)
            n_test = sum(1 for s in test.samples if s.task_id == tid)
            assert abs(n_train - 0.8 * (n_train + n_test)) <= 1

    def test_exact_eighty_twenty(self, suite):
        data = ds.build_dataset(suite[:1], L=500, K=2, seed=2)
        train, test = ds.split(data, 0.8, seed=9)
        assert (len(train), len(test)) == (400, 100)

    def test_floor_keeps_both_sides_nonempty(self, suite):
        data = ds.build_dataset(suite[:2], L=2, K=2, seed=2)
        train, test = ds.split(data, 0.5, seed=1)
        for tid in range(2):
            assert sum(1 for s in train.samples if s.task_id == tid) == 1
            assert sum(1 for s in test.samples if s.task_id == tid) == 1

    def test_deterministic_assignment(self, suite):
        data = ds.build_dataset(suite[:2], L=6, K=2, seed=2)
        a1, b1 = ds.split(data, 0.8, seed=77)
        a2, b2 = ds.split(data, 0.8, seed=77)
        assert a1.samples == a2.samples and b1.samples == b2.samples

    def test_fraction_out_of_range(self, suite):
        data = ds.build_dataset(suite[:1], L=2, K=2, seed=2)
        with pytest.raises(InvalidArgumentError):
            ds.split(data, 1.0, seed=0)


class TestSerialization:
    def test_round_trip_identity(self, suite, tmp_path):
        data = ds.build_dataset(suite[:3], L=4, K=6, seed=3)
        path = tmp_path / "data.jsonl"
        ds.serialize(data, path)
        assert ds.deserialize(path) == data

    def test_round_trip_preserves_tensors_bit_exactly(self, suite, tmp_path):
        data = ds.build_dataset(suite[:2], L=2, K=3, seed=3)
        path = tmp_path / "data.jsonl"
        ds.serialize(data, path)
        back = ds.deserialize(path)
        for key, arr in data.tensors().items():
            assert np.array_equal(arr, back.tensors()[key])

    def test_version_mismatch_is_explicit(self, suite, tmp_path):
        data = ds.build_dataset(suite[:1], L=1, K=1, seed=3)
        path = tmp_path / "data.jsonl"
        ds.serialize(data, path)
        text = path.read_text().replace("dataset/v1", "dataset/v9")
        path.write_text(text)
        with pytest.raises(SchemaVersionError):
            ds.deserialize(path)

    def test_truncated_file_reports_line(self, suite, tmp_path):
        data = ds.build_dataset(suite[:2], L=3, K=2, seed=3)
        path = tmp_path / "data.jsonl"
        ds.serialize(data, path)
        lines = path.read_text().splitlines()
        path.write_text("\n".join(lines[:-2]) + "\n")
        with pytest.raises(IntegrityError) as err:
            ds.deserialize(path)
        assert "line" in str(err.value)


class TestTensors:
    def test_onehot_invariants(self, suite):
        data = ds.build_dataset(suite[:3], L=3, K=8, seed=4)
        t = data.tensors()
        n = data.manifest.N
        assert t["event_idx"].min() >= 0 and t["event_idx"].max() <= n
        assert t["label_idx"].min() >= 0
        assert t["label_idx"].max() < len(data.label_names)
        # one-hot encodings: exactly one state bit, at most one event bit
        eye = np.eye(len(data.label_names))
        onehots = eye[t["label_idx"]]
        assert np.all(onehots.sum(axis=-1) == 1.0)
        bits = np.zeros((t["event_idx"].size, n))
        flat = t["event_idx"].ravel()
        bits[np.arange(flat.size)[flat > 0], flat[flat > 0] - 1] = 1.0
        assert np.all(bits.sum(axis=-1) <= 1.0)

    def test_embeddings_unit_norm(self, suite):
        data = ds.build_dataset(suite[:2], L=2, K=3, seed=4)
        t = data.tensors()
        assert np.allclose(np.linalg.norm(t["task_emb"], axis=-1), 1.0)
        assert np.allclose(np.linalg.norm(t["sub_emb"], axis=-1), 1.0)

    def test_label_space_enumerates_all_tasks(self, small_dataset):
        total = sum(len(t.dfa.states) for t in small_dataset.manifest.tasks)
        assert len(small_dataset.label_names) == total
