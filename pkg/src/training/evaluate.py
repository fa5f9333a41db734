"""
Run a model over a dataset and score its segment predictions.
"""
import logging
from typing import Dict, List, Optional, Tuple

from src import config as defaults
from src.data.dataset import Dataset
from src.evaluation import MetricsCalculator
from src.models import EvalConfig, EvalRecord
from src.network import ForgeryLocalizer
from src.postprocess import predict_segments, video_score

logger = logging.getLogger(__name__)


def predict_dataset(
    model: ForgeryLocalizer,
    dataset: Dataset,
    eval_config: Optional[EvalConfig] = None,
    batch_size: int = defaults.DEFAULT_BATCH_SIZE,
) -> List[EvalRecord]:
    """Post-SoftNMS predictions and video scores for every sample, in dataset order."""
    eval_config = eval_config or EvalConfig()
    records = []
    for batch in dataset.batches(batch_size, eval_config.max_len):
        _, pyramid = model.forward(batch)
        labels = batch.labels()
        for i, video_id in enumerate(batch.video_ids):
            predictions = predict_segments(pyramid.sample(i), float(batch.fps[i]), float(batch.durations[i]), eval_config)
            records.append(
                EvalRecord(
                    video_id=video_id,
                    predictions=predictions,
                    ground_truth=batch.ground_truth[i],
                    video_score=video_score(predictions),
                    video_label=int(labels[i]),
                )
            )
    return records


def evaluate_model(
    model: ForgeryLocalizer,
    dataset: Dataset,
    eval_config: Optional[EvalConfig] = None,
    batch_size: int = defaults.DEFAULT_BATCH_SIZE,
    calculator: Optional[MetricsCalculator] = None,
) -> Tuple[List[EvalRecord], Dict[str, float]]:
    records = predict_dataset(model, dataset, eval_config, batch_size)
    metrics = (calculator or MetricsCalculator()).calculate_metrics(records)
    logger.info(
        "Evaluated %d videos: %s",
        len(records), ", ".join(f"{k}={v:.4f}" for k, v in metrics.items()),
    )
    return records, metrics
