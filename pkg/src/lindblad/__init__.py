"""Módulo Lindblad - ecuación maestra fenomenológica"""
