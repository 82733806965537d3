from mollify.annealing.schedule import *
