"""Módulo de observables del baño - espectro estrella y saturación"""
