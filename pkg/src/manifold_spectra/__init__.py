try:
    from ._version import version as __version__
except ImportError:
    __version__ = "unknown"


from .continuum import *  # NoQA
from .eigensolve import *  # NoQA
from .errors import *  # NoQA
from .galerkin import *  # NoQA
from .geometry import *  # NoQA
from .graph import *  # NoQA
from .kernels import *  # NoQA
from .laplacian import *  # NoQA
from .study import *  # NoQA
from .transport import *  # NoQA
