"""
Jerarquía de errores del simulador.
Cada error lleva una categoría legible por máquina y el código de salida del CLI.
"""


class ReadoutSimError(ValueError):
    """Error base del simulador de lectura dispersiva"""
    category = "internal"
    exit_code = 1

    def __init__(self, message: str, diagnostics: dict = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ConfigValidationError(ReadoutSimError):
    """Configuración inválida o incompleta"""
    category = "config"
    exit_code = 2

    def __init__(self, message: str, missing_keys: list = None, diagnostics: dict = None):
        super().__init__(message, diagnostics)
        self.missing_keys = missing_keys or []


class NumericalError(ReadoutSimError):
    """Fallo numérico (mapeo, diagonalización, integración)"""
    category = "numerical"
    exit_code = 3


class CalibrationImpossibleError(NumericalError):
    """J(ω_a) = 0: no se puede imponer κ"""


class UnsupportedBathError(NumericalError):
    """Tipo de densidad espectral desconocido"""


class ChainBreakdownError(NumericalError):
    """Pérdida de ortogonalidad en Lanczos"""


class DimensionMismatchError(NumericalError):
    """Dimensiones inconsistentes entre layout, cadena y tensores"""


class LabelingError(NumericalError):
    """Dos autoestados reclaman el mismo estado desnudo"""


class KrylovConvergenceError(NumericalError):
    """La exponencial local no converge con la dimensión de Krylov máxima"""


class PositivityError(NumericalError):
    """La matriz densidad pierde positividad"""


class CalibrationIncompleteError(NumericalError):
    """El resonador no relajó al final de la calibración"""


class ChainMismatchError(NumericalError):
    """La cadena extendida no prolonga la cadena simulada"""


class PeakNotFoundError(NumericalError):
    """No hay pico con prominencia suficiente"""


class SiteRangeError(NumericalError):
    """Índice de sitio fuera de rango"""


class FitQualityError(ReadoutSimError):
    """Ajuste exponencial de mala calidad"""
    category = "fit"
    exit_code = 4
