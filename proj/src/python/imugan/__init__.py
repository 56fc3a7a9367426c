"""Recurrent conditional GAN for IMU driving trips, with extrinsic evaluation."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
