"""
kinlab: verificação numérica de geometria cinética.
"""
__version__ = "1.0.0"
