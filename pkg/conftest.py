# packages are imported as top-level modules (from Tensors.TensorOps import ...)
import sys
from os.path import abspath, dirname

sys.path.insert(0, dirname(abspath(__file__)))
