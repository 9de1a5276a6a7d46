import numpy as np
import pytest

from taskmesh import automata
from taskmesh.errors import InvalidArgumentError, SchemaVersionError, TrainingDivergedError
from taskmesh.rnn import (ModelDims, TrainConfig, decode_state, evaluate,
                          forward_step, init_hidden, load_checkpoint,
                          loss_and_grads, new_model, rollout, save_checkpoint)
from taskmesh.rnn import train as rnn_train
from taskmesh.rnn.model import advance_hidden
from taskmesh.rnn.oracles import (exhaustive_equivalence, label_map,
                                  rejection_failures, sampled_equivalence,
                                  shortest_prefix)
from taskmesh.seeding import rng_for
from taskmesh.taskgen import embed_sentence


def tiny_model(seed=1):
    dims = ModelDims(n_events=3, emb_dim=4, hidden_dim=8, label_count=5)
    return new_model(dims, ("NoEvent", "A", "B", "C"),
                     tuple(f"T0: s{i}" for i in range(5)), seed=seed)


def tiny_batch(k=5, b=3, seed=0):
    rng = np.random.default_rng(seed)
    return {
        "task_emb": rng.normal(size=(b, 4)),
        "sub_emb": rng.normal(size=(b, k, 4)),
        "event_idx": rng.integers(0, 4, size=(b, k)),
        "label_idx": rng.integers(0, 5, size=(b, k)),
    }


class TestGradients:
    @pytest.mark.parametrize("k_star", [0, 2, 4])
    def test_bptt_matches_central_finite_differences(self, k_star):
        # H_dim=8, K=5, every parameter, relative error < 1e-4
        model = tiny_model()
        batch = tiny_batch()
        loss, grads = loss_and_grads(model.params, model.dims, batch, k_star,
                                     0.5, 0.1)
        eps = 1e-6
        for name, p in model.params.items():
            numeric = np.zeros_like(p)
            it = np.nditer(p, flags=["multi_index"])
            while not it.finished:
                i = it.multi_index
                orig = p[i]
                p[i] = orig + eps
                lp, _ = loss_and_grads(model.params, model.dims, batch,
                                       k_star, 0.5, 0.1)
                p[i] = orig - eps
                lm, _ = loss_and_grads(model.params, model.dims, batch,
                                       k_star, 0.5, 0.1)
                p[i] = orig
                numeric[i] = (lp - lm) / (2 * eps)
                it.iternext()
            rel = np.abs(grads[name] - numeric) / np.maximum(
                1e-6, np.abs(grads[name]) + np.abs(numeric))
            assert rel.max() < 1e-4, f"{name}: {rel.max()}"


class TestForward:
    def test_deterministic_bit_identical(self):
        model = tiny_model()
        x = np.zeros(8)
        bits = model.event_bits("A")
        emb = np.ones(4) / 2.0
        a = forward_step(model, x, bits, emb)
        b = forward_step(model, x, bits, emb)
        assert np.array_equal(a, b)

    def test_untrained_output_bounded_by_cell_saturation(self):
        model = tiny_model()
        x = forward_step(model, np.zeros(8), np.zeros(3), np.ones(4))
        assert np.all(np.isfinite(x))
        assert np.linalg.norm(x) <= np.sqrt(8)  # gated update from zero state

    def test_dimension_mismatch_rejected(self):
        model = tiny_model()
        with pytest.raises(InvalidArgumentError):
            forward_step(model, np.zeros(8), np.zeros(7), np.ones(4))
        with pytest.raises(InvalidArgumentError):
            forward_step(model, np.zeros(9), np.zeros(3), np.ones(4))

    def test_decode_sums_to_one(self):
        model = tiny_model()
        probs = decode_state(model, np.linspace(-2, 2, 8))
        assert probs.min() >= 0
        assert abs(probs.sum() - 1.0) < 1e-6

    def test_unknown_event_bit_rejected(self):
        model = tiny_model()
        with pytest.raises(InvalidArgumentError):
            model.event_bits("NotAnEvent")


class TestTrainedBehavior:
    def _task_emb(self, small_dataset, tid):
        task = small_dataset.manifest.tasks[tid]
        return task, embed_sentence(task.command_text).values

    def test_rollout_blue_switch_chain(self, small_dataset, task_model):
        task, emb = self._task_emb(small_dataset, 1)  # blue retrieve chain
        labels = rollout(task_model, emb, ["Blue", "Switch"])
        names = [task_model.label_names[i] for i in labels]
        assert names == ["T1: Find blue flag", "T1: Navigate to switch",
                         "T1: Navigate to Goal"]

    def test_rollout_rejects_foreign_events(self, small_dataset, task_model):
        task, emb = self._task_emb(small_dataset, 1)
        labels = rollout(task_model, emb, ["FoundBase", "Red"])
        names = [task_model.label_names[i] for i in labels]
        assert names == ["T1: Find blue flag"] * 3

    def test_rollout_length_contract(self, small_dataset, task_model):
        _, emb = self._task_emb(small_dataset, 0)
        assert len(rollout(task_model, emb, [])) == 1
        assert len(rollout(task_model, emb, ["Blue"] * 7)) == 8

    def test_no_event_stability_for_fifty_steps(self, small_dataset, task_model):
        for tid in range(len(small_dataset.manifest.tasks)):
            _, emb = self._task_emb(small_dataset, tid)
            x = init_hidden(task_model, emb)
            first = int(np.argmax(decode_state(task_model, x)))
            for _ in range(50):
                x = forward_step(task_model, x,
                                 np.zeros(task_model.dims.n_events), emb)
                assert int(np.argmax(decode_state(task_model, x))) == first

    def test_argmax_stable_under_tiny_hidden_perturbation(self, small_dataset,
                                                          task_model):
        _, emb = self._task_emb(small_dataset, 1)
        x = init_hidden(task_model, emb)
        base = int(np.argmax(decode_state(task_model, x)))
        rng = rng_for(5, "perturb")
        for _ in range(20):
            delta = rng.normal(size=x.shape)
            delta = delta / np.linalg.norm(delta) * 1e-6
            assert int(np.argmax(decode_state(task_model, x + delta))) == base

    def test_exhaustive_oracle_equivalence_depth_five(self, small_dataset,
                                                      task_model):
        for tid, task in enumerate(small_dataset.manifest.tasks):
            emb = embed_sentence(task.command_text).values
            result = exhaustive_equivalence(task_model, task, tid, 5, emb)
            assert result["mismatches"] == 0, (tid, result)

    def test_rollout_matches_independent_step_chain(self, small_dataset,
                                                    task_model):
        # fully independent oracle: explicit walks through automata.step
        rng = rng_for(17, "indep")
        for tid, task in enumerate(small_dataset.manifest.tasks):
            emb = embed_sentence(task.command_text).values
            for _ in range(50):
                events = [task.dfa.alphabet[int(rng.integers(
                    len(task.dfa.alphabet)))] for _ in range(12)]
                predicted = rollout(task_model, emb, events)
                state = task.dfa.initial
                expected = [small_dataset.label_of(tid, state)]
                for event in events:
                    state = automata.step(task.dfa, state, event)
                    expected.append(small_dataset.label_of(tid, state))
                assert predicted == expected

    def test_sampled_long_sequences(self, small_dataset, task_model):
        for tid, task in enumerate(small_dataset.manifest.tasks):
            emb = embed_sentence(task.command_text).values
            result = sampled_equivalence(task_model, task, tid, 2000, 50, emb,
                                         seed=3)
            assert result["mismatches"] == 0, (tid, result)

    def test_rejection_triples_exact(self, small_dataset, task_model):
        for tid, task in enumerate(small_dataset.manifest.tasks):
            emb = embed_sentence(task.command_text).values
            assert rejection_failures(task_model, task, tid, emb) == []

    def test_absorption_after_accepting(self, small_dataset, task_model):
        rng = rng_for(23, "absorb")
        for tid, task in enumerate(small_dataset.manifest.tasks):
            if not task.dfa.accepting:
                continue
            accepting = next(iter(task.dfa.accepting))
            prefix = shortest_prefix(task.dfa, accepting)
            emb = embed_sentence(task.command_text).values
            x = init_hidden(task_model, emb)
            for event in prefix:
                x = forward_step(task_model, x, task_model.event_bits(event), emb)
            want = small_dataset.label_of(tid, accepting)
            assert int(np.argmax(decode_state(task_model, x))) == want
            for _ in range(50):
                event = task.dfa.alphabet[int(rng.integers(
                    len(task.dfa.alphabet)))]
                x = forward_step(task_model, x, task_model.event_bits(event), emb)
                assert int(np.argmax(decode_state(task_model, x))) == want

    def test_task_separation_same_events_different_tasks(self, small_dataset,
                                                         task_model):
        events = ["Blue", "Switch1", "Purple", "Switch", "NoEvent", "Red"]
        for tid, task in enumerate(small_dataset.manifest.tasks):
            emb = embed_sentence(task.command_text).values
            predicted = rollout(task_model, emb, events)
            state = task.dfa.initial
            expected = [small_dataset.label_of(tid, state)]
            for event in events:
                state = automata.step(task.dfa, state, event)
                expected.append(small_dataset.label_of(tid, state))
            assert predicted == expected

    def test_init_hidden_none_decodes_initial_state(self, small_dataset,
                                                    task_model):
        for tid, task in enumerate(small_dataset.manifest.tasks):
            emb = embed_sentence(task.command_text).values
            x = init_hidden(task_model, emb)
            want = small_dataset.label_of(tid, task.dfa.initial)
            assert int(np.argmax(decode_state(task_model, x))) == want

    def test_init_hidden_with_initial_subtask_text_is_consistent(
            self, small_dataset, task_model):
        for tid, task in enumerate(small_dataset.manifest.tasks):
            emb = embed_sentence(task.command_text).values
            sub = embed_sentence(task.subtask_texts[task.dfa.initial]).values
            x = init_hidden(task_model, emb, sub)
            want = small_dataset.label_of(tid, task.dfa.initial)
            assert int(np.argmax(decode_state(task_model, x))) == want

    def test_language_init_to_mid_task_state(self, small_dataset, task_model):
        # multi-room task is index 2 in the fixture suite
        task = small_dataset.manifest.tasks[2]
        emb = embed_sentence(task.command_text).values
        target_state = "Hit switch 2"
        sub = embed_sentence(task.subtask_texts[target_state]).values
        x = init_hidden(task_model, emb, sub)
        want = small_dataset.label_of(2, target_state)
        assert int(np.argmax(decode_state(task_model, x))) == want

    def test_advance_hidden_micro_steps_match_sequential(self, small_dataset,
                                                         task_model):
        # two events in one aggregate equal two ordered single-event steps
        task = small_dataset.manifest.tasks[2]
        emb = embed_sentence(task.command_text).values
        x0 = init_hidden(task_model, emb)
        agg = task_model.event_bits("Switch1") + task_model.event_bits("Switch2")
        combined = advance_hidden(task_model, x0[None], agg[None], emb[None])[0]
        x = x0
        for event in ("Switch1", "Switch2"):
            x = forward_step(task_model, x, task_model.event_bits(event), emb)
        assert np.allclose(combined, x, atol=1e-12)


class TestTraining:
    def test_loss_curve_bit_exact_reproducible(self, small_splits):
        train_split, _ = small_splits
        dims = ModelDims(n_events=train_split.manifest.N, emb_dim=64,
                         hidden_dim=16,
                         label_count=len(train_split.label_names))
        model = new_model(dims, train_split.alphabet,
                          train_split.label_names, seed=5)
        config = TrainConfig(epochs=3, seed=5)
        _, curve_a = rnn_train(model, train_split, config)
        _, curve_b = rnn_train(model, train_split, config)
        assert curve_a == curve_b

    def test_degenerate_single_state_task_saturates_fast(self):
        from taskmesh import dataset as ds
        from dataclasses import replace
        from taskmesh.taskgen import make_scenario, TaskSpec
        dfa = automata.make_dfa(["only"], ["Ping"], {}, "only", ["only"])
        task = TaskSpec(command_text="Hold the single post.",
                        dfa=dfa, subtask_texts={"only": "Hold the post."},
                        scenario=make_scenario("defend-position",
                                               c_target="red"))
        data = ds.build_dataset([task], L=20, K=4, seed=1)
        dims = ModelDims(n_events=1, emb_dim=64, hidden_dim=8, label_count=1)
        model = new_model(dims, dfa.alphabet, data.label_names, seed=1)
        trained, curve = rnn_train(model, data, TrainConfig(epochs=5, seed=1))
        assert curve[-1]["train_step_accuracy"] == 1.0
        assert len(curve) <= 5

    def test_nan_loss_aborts_with_diagnostics(self, small_splits):
        train_split, _ = small_splits
        dims = ModelDims(n_events=train_split.manifest.N, emb_dim=64,
                         hidden_dim=8,
                         label_count=len(train_split.label_names))
        model = new_model(dims, train_split.alphabet,
                          train_split.label_names, seed=5)
        model.params["W_dec"][0, 0] = np.inf
        with pytest.raises(TrainingDivergedError) as err:
            rnn_train(model, train_split, TrainConfig(epochs=1, seed=5))
        assert "epoch" in err.value.diagnostics

    def test_evaluate_reports_per_task(self, small_splits, task_model):
        _, test_split = small_splits
        result = evaluate(task_model, test_split)
        assert set(result) == {"step_accuracy", "sequence_accuracy", "per_task"}
        assert len(result["per_task"]) == 4
        assert result["step_accuracy"] >= 0.995


class TestCheckpoint:
    def test_round_trip_bit_exact(self, task_model, tmp_path):
        path = tmp_path / "model.npz"
        save_checkpoint(task_model, path)
        back = load_checkpoint(path)
        assert back.dims == task_model.dims
        assert back.alphabet == task_model.alphabet
        assert back.label_names == task_model.label_names
        for name, value in task_model.params.items():
            assert np.array_equal(back.params[name], value)

    def test_rejects_unknown_schema(self, task_model, tmp_path):
        import json
        path = tmp_path / "model.npz"
        save_checkpoint(task_model, path)
        data = dict(np.load(path))
        meta = json.loads(bytes(data["meta"]).decode())
        meta["schema"] = "taskmodel/v99"
        data["meta"] = np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)
        np.savez(path, **data)
        with pytest.raises(SchemaVersionError):
            load_checkpoint(path)

    def test_label_map_parses_names(self, task_model):
        mapping = label_map(task_model)
        assert mapping[(1, "Find blue flag")] == \
            task_model.label_names.index("T1: Find blue flag")
