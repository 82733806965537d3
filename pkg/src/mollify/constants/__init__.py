from mollify.constants.constants import *
