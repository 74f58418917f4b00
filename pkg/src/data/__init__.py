"""Módulo de datos - densidades espectrales, mapeo a cadena y validación de entradas"""
