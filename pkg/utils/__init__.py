# Utils package
from . import geometry
from . import rewards
from . import environment
from . import nn
from . import algos
