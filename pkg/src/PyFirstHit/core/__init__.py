# -*- coding: UTF-8 -*-
"""
@Project    : PyFirstHit
@File       : __init__.py
@Description: 吸收型扩散的模拟核心：命中方案、Euler–Maruyama 引擎、桥与 h 变换采样。
@Version    : v0.1.0
"""
