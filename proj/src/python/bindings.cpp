#include <pybind11/pybind11.h>
PYBIND11_MODULE(_assetflow, m) { m.doc() = "placeholder"; }
