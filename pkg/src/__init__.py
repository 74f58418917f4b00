"""
readout-sim: simulación de lectura dispersiva de qubits con baños estructurados (TEDOPA + TDVP)
"""
__version__ = "0.1.0"
