import numpy as np
import pytest

from taskmesh import dataset as ds
from taskmesh.rnn import ModelDims, TrainConfig, evaluate, new_model
from taskmesh.rnn import train as rnn_train
from taskmesh.taskgen import default_task_suite


@pytest.fixture(scope="session")
def suite():
    return default_task_suite(0)


@pytest.fixture(scope="session")
def small_dataset(suite):
    # search-red, retrieve-blue, multi-room, flag-sequence: covers chains,
    # ordered stages and cross-task event rejection at unit-test scale
    tasks = [suite[i] for i in (0, 2, 3, 5)]
    return ds.build_dataset(tasks, L=250, K=12, seed=7)


@pytest.fixture(scope="session")
def small_splits(small_dataset):
    return ds.split(small_dataset, 0.8, seed=7)


@pytest.fixture(scope="session")
def task_model(small_dataset, small_splits):
    train_split, test_split = small_splits
    dims = ModelDims(n_events=small_dataset.manifest.N, emb_dim=64,
                     hidden_dim=64, label_count=len(small_dataset.label_names))
    model = new_model(dims, small_dataset.alphabet,
                      small_dataset.label_names, seed=3)
    trained, curve = rnn_train(model, train_split,
                               TrainConfig(epochs=220, lr=3e-3, batch_size=256,
                                           seed=3))
    acc = evaluate(trained, test_split)["step_accuracy"]
    assert acc >= 0.995, f"fixture model underfits: {acc}"
    return trained


@pytest.fixture(scope="session")
def untrained_policy(small_dataset, task_model):
    from taskmesh import sim
    from taskmesh.policy import PolicyDims, new_policy
    dims = PolicyDims(obs_dim=sim.obs_dim(small_dataset.manifest.N),
                      hidden_dim=task_model.dims.hidden_dim)
    return new_policy(dims, seed=5)
