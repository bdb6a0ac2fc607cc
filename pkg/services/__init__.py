# Services package
from . import train
from . import eval
from . import compare
from . import plot
from . import world
