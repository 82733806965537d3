from mollify.networks.layer import *
from mollify.networks.heads import *
from mollify.networks.network import *
from mollify.networks.checkpoint import *
