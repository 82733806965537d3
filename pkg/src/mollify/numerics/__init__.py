from mollify.numerics.matrix import *
from mollify.numerics.rng import *
from mollify.numerics.optimizers import *
from mollify.numerics.gradcheck import *
