"""Módulo de monitoreo - salud de la evolución y alertas numéricas"""
