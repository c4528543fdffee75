# -*- coding: UTF-8 -*-
"""
@Project    : PyFirstHit
@File       : __init__.py
@Description: 常量、异常、描述字符串、CSV 文件格式与路径工具。
@Version    : v0.1.0
"""
