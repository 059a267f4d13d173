"""lncRNA-disease association prediction from fused heterogeneous similarities,
convolutional pair features and second-order boosted trees."""

__version__ = "0.1.0"

from ._kernels import BACKEND_NAME  # noqa: E402
