PYBIND11_MODULE_PLACEHOLDER
