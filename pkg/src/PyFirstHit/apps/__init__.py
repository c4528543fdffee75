# -*- coding: UTF-8 -*-
"""
@Project    : PyFirstHit
@File       : __init__.py
@Description: 命令行入口、配置加载、日志与计时。
@Version    : v0.1.0
"""
