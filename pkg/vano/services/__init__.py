from vano.services.evaluation_service import EvaluationService
from vano.services.sampling_service import SamplingService
from vano.services.training_service import TrainingService, TrainResult

__all__ = ["EvaluationService", "SamplingService", "TrainResult", "TrainingService"]
