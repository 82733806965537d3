from mollify.harness.config import *
from mollify.harness.tasks import *
from mollify.harness.metrics import *
from mollify.harness.plot import *
from mollify.harness.training import *
