# -*- coding: UTF-8 -*-
"""
@Project    : PyFirstHit
@File       : __init__.py
@Description: First hitting diffusion models: absorbing diffusions that stop on the data domain.
@Version    : v0.1.0
"""
__version__ = "0.1.0"
