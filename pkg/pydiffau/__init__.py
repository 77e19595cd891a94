"""
pydiffau
~~~~~~~~

pydiffau upscales first-order Ambisonics to third order with two cascaded score-based diffusion models, and
compares the result against a sparse plane-wave decomposition baseline.

:copyright: (c) 2025-present pydiffau developers
:license: MIT, see LICENSE for more details.
"""
import logging
from typing import Literal, NamedTuple

from .ambisonics import *
from .baseline import *
from .cascade import *
from .config import *
from .constants import *
from .dataclass import *
from .dataset import *
from .enums import *
from .errors import *
from .evaluation import *
from .model import *
from .sde import *
from .threads import *
from .transform import *
from .utils import *

__title__ = "pydiffau"
__author__ = "pydiffau developers"
__version__ = "0.1.0"
__license__ = "MIT"
__copyright__ = "Copyright 2025-present pydiffau developers"


class VersionInfo(NamedTuple):
    major: int
    minor: int
    micro: int
    releaselevel: Literal["alpha", "beta", "candidate", "final"]
    serial: int


version_info: VersionInfo = VersionInfo(major=0, minor=1, micro=0, releaselevel="final", serial=0)


logging.getLogger(__name__).addHandler(logging.NullHandler())

assert version_info.releaselevel in (
    "alpha",
    "beta",
    "candidate",
    "final",
), "Invalid release level given."
