"""Python access to the cip core: environments, causal discovery, augmentation and training."""

from ._cip import *  # noqa: F401,F403
from ._cip import __doc__  # noqa: F401
