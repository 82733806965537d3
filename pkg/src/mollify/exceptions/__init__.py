from mollify.exceptions.base import *
from mollify.exceptions.numerics import *
from mollify.exceptions.activations import *
from mollify.exceptions.networks import *
from mollify.exceptions.recurrent import *
from mollify.exceptions.annealing import *
from mollify.exceptions.oracle import *
from mollify.exceptions.harness import *
