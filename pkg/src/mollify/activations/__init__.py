from mollify.activations.kinds import *
from mollify.activations.activation import *
