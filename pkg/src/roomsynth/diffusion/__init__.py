from .schedule import (  # noqa: F401
    DEFAULT_BETA_END,
    DEFAULT_BETA_START,
    DEFAULT_T,
    NoiseSchedule,
    ScheduleError,
    forward_diffuse,
    make_schedule,
)
from .nn import Adam, Parameter, SGD, TensorError  # noqa: F401
from .unet import Denoiser, OracleDenoiser, TinyUNetDenoiser  # noqa: F401
from .training import (  # noqa: F401
    TrainConfig,
    TrainResult,
    TrainingError,
    from_model_space,
    load_loss_csv,
    loss_and_grad,
    to_model_space,
    train,
    training_loss,
)
from .sampling import SamplingError, ood_score, sample  # noqa: F401
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint  # noqa: F401
