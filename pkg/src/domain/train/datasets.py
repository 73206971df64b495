"""Train/test data for a training config, drawn from the config's own seed."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from src.domain.latentode.values import SpiralBatch
from src.domain.synthdata.service import gen_1d_mixture, gen_2d_labeled, gen_spiral_corpora
from src.domain.synthdata.values import SpiralCorpus
from src.domain.train.exceptions import TrainConfigException
from src.domain.train.values import FlowDataset, TrainConfig


@dataclass(frozen=True, eq=False)
class SpiralData:
    train: SpiralCorpus
    test: SpiralCorpus

    @property
    def train_batch(self) -> SpiralBatch:
        return self.train.batch()

    @property
    def test_batch(self) -> SpiralBatch:
        return self.test.batch()

    def future(self) -> tuple[np.ndarray, np.ndarray]:
        return self.test.future()


def flow_dataset(config: TrainConfig) -> FlowDataset:
    data = config.data
    if config.dataset == "mix1d":
        if config.task != "density":
            raise TrainConfigException(field="data.dataset", value=f"mix1d has no labels for task {config.task}")
        train_x, _ = gen_1d_mixture(data.mixture, data.n_train, config.seed, "train")
        test_x, _ = gen_1d_mixture(data.mixture, data.n_test, config.seed, "test")
        return FlowDataset(train_x=train_x, test_x=test_x)
    if config.dataset == "labeled2d":
        classes = data.labeled.num_classes
        test_spec = replace(data.labeled, samples_per_class=max(1, data.n_test // classes))
        train_x, train_y, _ = gen_2d_labeled(data.labeled, config.seed, "train")
        test_x, test_y, _ = gen_2d_labeled(test_spec, config.seed, "test")
        if config.task == "density":
            return FlowDataset(train_x=train_x, test_x=test_x)
        return FlowDataset(train_x=train_x, test_x=test_x, train_y=train_y, test_y=test_y, class_counts=(classes,))
    raise TrainConfigException(field="data.dataset", value=f"{config.dataset} is not a flow dataset")


def spiral_data(config: TrainConfig) -> SpiralData:
    if config.dataset != "spirals":
        raise TrainConfigException(field="data.dataset", value=f"{config.dataset} is not a sequence dataset")
    train, test = gen_spiral_corpora(config.data.spirals, config.data.test_curves, config.seed)
    return SpiralData(train=train, test=test)
