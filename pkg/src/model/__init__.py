from src.model.assignment import Assignment, hungarian
from src.model.heads import align_steps, riou, step_loss, total_loss, type_loss
from src.model.network import ArchConfig, SegmentationNet, ModelInputs, prepare_inputs
from src.model.prediction import Prediction, prediction_from_labels, read_prediction, write_prediction
from src.model.training import EpochRecord, TrainResult, train, write_loss_log

__all__ = [
    "ArchConfig",
    "Assignment",
    "SegmentationNet",
    "EpochRecord",
    "ModelInputs",
    "Prediction",
    "TrainResult",
    "align_steps",
    "hungarian",
    "prediction_from_labels",
    "prepare_inputs",
    "read_prediction",
    "riou",
    "step_loss",
    "total_loss",
    "train",
    "type_loss",
    "write_loss_log",
    "write_prediction",
]
