"""Módulo de utilidades - logger, errores y exportación de artefactos"""
