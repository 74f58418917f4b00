"""Módulo TDVP - exponencial de Krylov e integrador de un sitio"""
