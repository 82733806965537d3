from mollify.recurrent.gates import *
from mollify.recurrent.cells import *
from mollify.recurrent.sequence import *
