"""Módulo de ejecución - protocolos de simulación y ajustes de tasas"""
