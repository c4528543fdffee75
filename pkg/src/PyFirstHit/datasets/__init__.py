# -*- coding: UTF-8 -*-
"""
@Project    : PyFirstHit
@File       : __init__.py
@Description: 玩具目标分布与数据读取。
@Version    : v0.1.0
"""
