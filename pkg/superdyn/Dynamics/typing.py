import numpy as np


ComplexArray = np.ndarray  # complex128, shape (d, d)
ComplexVector = np.ndarray  # complex128, shape (d,)
MatrixStack = np.ndarray  # complex128, shape (k, d, d)
float_tol = float  # absolute tolerance
float_log = float  # natural logarithm of a magnitude
