from mollify.oracle.objectives import *
from mollify.oracle.smoothing import *
from mollify.oracle.weak_gradient import *
