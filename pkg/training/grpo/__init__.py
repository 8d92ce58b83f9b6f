from .objective import compute_advantages, grpo_objective, kl_estimate, objective_and_gradient
from .policy import Group, PolicyParams, Task, sample_group
from .trainer import CurvePoint, GrpoConfig, GrpoTrainer, TrainResult, train

__all__ = [
    'CurvePoint',
    'GrpoConfig',
    'GrpoTrainer',
    'Group',
    'PolicyParams',
    'Task',
    'TrainResult',
    'compute_advantages',
    'grpo_objective',
    'kl_estimate',
    'objective_and_gradient',
    'sample_group',
    'train',
]
