# -*- coding: UTF-8 -*-
"""
@Project    : PyFirstHit
@File       : __init__.py
@Description: 直方图与距离、命中时间报告、离散化收敛实验、SVG 绘图。
@Version    : v0.1.0
"""
