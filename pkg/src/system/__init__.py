"""Módulo del sistema - Hamiltoniano qubit-resonador, base vestida y tasas"""
