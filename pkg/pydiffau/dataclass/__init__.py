from .base import *
from .baseline import *
from .dataset import *
from .diffusion import *
from .model import *
from .report import *
from .run import *
from .stft import *

__all__ = (
    base.__all__
    + baseline.__all__
    + dataset.__all__
    + diffusion.__all__
    + model.__all__
    + report.__all__
    + run.__all__
    + stft.__all__
)
