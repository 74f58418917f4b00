"""Módulo tensorial - operadores locales, MPS y MPO"""
